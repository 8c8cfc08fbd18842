//! Numerical verification kernel for the representation theory behind
//! Baxter Q-operators of the quantum affine algebra U_q(sl2-hat).
//!
//! The crate builds truncated matrix realizations of
//!
//! - the two q-oscillator Fock modules `W1`, `W2` and Verma modules,
//! - the Borel-subalgebra evaluation maps connecting them,
//! - the generic and degenerate L-operators and the q-exponential
//!   intertwiner `O = exp_{q^{-2}}(lambda e1 (x) f2)`,
//! - weighted-trace T- and Q-operators on a twisted spin chain,
//!
//! and certifies the identities relating them (defining relations,
//! quantum determinant, RLL, the L-operator factorization, the
//! q-Hadamard conjugation suite, and the T = QQ factorization) as
//! residual checks on interior blocks of the truncated spaces.

pub mod factor;
pub mod lops;
pub mod qnum;
pub mod qops;
pub mod report;
pub mod reps;
pub mod tensor;

pub use num_complex::Complex64 as C64;

/// Which of the two q-oscillator algebras an object belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OscKind {
    Osc1,
    Osc2,
}

impl OscKind {
    pub fn index(self) -> u8 {
        match self {
            OscKind::Osc1 => 1,
            OscKind::Osc2 => 2,
        }
    }
}

impl std::fmt::Display for OscKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "osc{}", self.index())
    }
}
