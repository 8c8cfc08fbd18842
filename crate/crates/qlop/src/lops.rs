//! L-operator builders and their local identities.
//!
//! `build_l` produces the 2x2 block matrix over auxiliary-space operators,
//! stored on the ordered legs `[aux, quantum]`:
//!
//! - generic (Verma / finite-dimensional aux):
//!   `[[q^{H/2} - x q^{-H/2}/q,  lambda F q^{-H/2}],
//!     [lambda x E q^{H/2},      q^{-H/2} - x q^{H/2}/q]]`
//! - degenerate oscillator aux: the same with the x-term removed from the
//!   (1,1) block (`W_1`) resp. the (2,2) block (`W_2`) and hatted
//!   generators substituted.
//!
//! The scalar factors phi stay out of the matrices; their identities are
//! separate scalar checks ([`phi_factor_check`], [`phi_functional_check`]).

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::qnum::{phi_i_series_eval, phi_series_eval, QParams, QnumError, SeriesBudget};
use crate::report::{CheckReport, Params, Timer};
use crate::reps::{casimir_left, fund_rep, q_cartan_power, RepError, RepHandle};
use crate::tensor::{embed, residual, IndexMask, Operator, Space, SpaceKind, TensorError};
use crate::OscKind;

#[derive(Debug, Error)]
pub enum LopsError {
    #[error("R(u) is singular at the resonant ratio u = {ratio}")]
    ResonantRatio { ratio: C64 },
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Qnum(#[from] QnumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LFamily {
    GenericVerma,
    Osc1Deg,
    Osc2Deg,
    FundamentalAux,
}

impl LFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LFamily::GenericVerma => "generic_verma",
            LFamily::Osc1Deg => "osc1_deg",
            LFamily::Osc2Deg => "osc2_deg",
            LFamily::FundamentalAux => "fundamental_aux",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LOperator {
    pub aux: Space,
    pub quantum: Space,
    pub op: Operator,
    pub x: C64,
    pub family: LFamily,
}

impl LOperator {
    /// The (i, j) block (1-based) as an auxiliary-space operator.
    pub fn block(&self, i: usize, j: usize) -> Operator {
        assert!((1..=2).contains(&i) && (1..=2).contains(&j));
        let d = self.aux.dim;
        let mut out = Operator::zeros(vec![self.aux.clone()]);
        for a in 0..d {
            for b in 0..d {
                out.set_entry(a, b, self.op.entry(a * 2 + (i - 1), b * 2 + (j - 1)));
            }
        }
        out
    }
}

/// Assembles four auxiliary-space blocks into an operator on
/// `[aux, quantum]`.
pub(crate) fn assemble_quantum_blocks(blocks: &[[Operator; 2]; 2], quantum: Space) -> Operator {
    let aux = blocks[0][0].spaces()[0].clone();
    let d = aux.dim;
    let mut op = Operator::zeros(vec![aux, quantum]);
    for (i, row) in blocks.iter().enumerate() {
        for (j, blk) in row.iter().enumerate() {
            for a in 0..d {
                for b in 0..d {
                    let v = blk.entry(a, b);
                    if v.re != 0.0 || v.im != 0.0 {
                        op.set_entry(a * 2 + i, b * 2 + j, v);
                    }
                }
            }
        }
    }
    op
}

/// The generic L-operator blocks from an sl2 triple.
pub(crate) fn generic_l_blocks(
    e: &Operator,
    f: &Operator,
    h: &Operator,
    x: C64,
    p: &QParams,
) -> Result<[[Operator; 2]; 2], TensorError> {
    let half = C64::new(0.5, 0.0);
    let qh = q_cartan_power(h, half, p);
    let qhm = q_cartan_power(h, -half, p);
    let l11 = qh.sub(&qhm.scale(x / p.q()))?;
    let l12 = f.matmul(&qhm)?.scale(p.lambda());
    let l21 = e.matmul(&qh)?.scale(p.lambda() * x);
    let l22 = qhm.sub(&qh.scale(x / p.q()))?;
    Ok([[l11, l12], [l21, l22]])
}

/// Builds the L-operator for the representation; the family is chosen by
/// the carrier kind.
pub fn build_l(rep: &RepHandle, x: C64, p: &QParams) -> Result<LOperator, LopsError> {
    let quantum = Space::new("q", 2, SpaceKind::Fundamental);
    let half = C64::new(0.5, 0.0);
    let (blocks, family) = match rep.space.kind {
        SpaceKind::Verma => (
            generic_l_blocks(rep.gen("E")?, rep.gen("F")?, rep.gen("H")?, x, p)?,
            LFamily::GenericVerma,
        ),
        SpaceKind::Fundamental => (
            generic_l_blocks(rep.gen("E")?, rep.gen("F")?, rep.gen("H")?, x, p)?,
            LFamily::FundamentalAux,
        ),
        SpaceKind::Osc1 => {
            let h = rep.gen("h")?;
            let qh = q_cartan_power(h, half, p);
            let qhm = q_cartan_power(h, -half, p);
            let l11 = qh.clone();
            let l12 = rep.gen("f")?.matmul(&qhm)?.scale(p.lambda());
            let l21 = rep.gen("e")?.matmul(&qh)?.scale(p.lambda() * x);
            let l22 = qhm.sub(&qh.scale(x / p.q()))?;
            ([[l11, l12], [l21, l22]], LFamily::Osc1Deg)
        }
        SpaceKind::Osc2 => {
            let h = rep.gen("h")?;
            let qh = q_cartan_power(h, half, p);
            let qhm = q_cartan_power(h, -half, p);
            let l11 = qh.sub(&qhm.scale(x / p.q()))?;
            let l12 = rep.gen("f")?.matmul(&qhm)?.scale(p.lambda());
            let l21 = rep.gen("e")?.matmul(&qh)?.scale(p.lambda() * x);
            let l22 = qhm;
            ([[l11, l12], [l21, l22]], LFamily::Osc2Deg)
        }
        SpaceKind::SpinSite => {
            return Err(LopsError::Rep(RepError::KindMismatch {
                map: "build_l".into(),
                expected: "verma|fundamental|osc1|osc2".into(),
                got: "spin_site".into(),
            }))
        }
    };
    let op = assemble_quantum_blocks(&blocks, quantum.clone());
    Ok(LOperator { aux: rep.space.clone(), quantum, op, x, family })
}

/// Quantum determinant: checks
/// `L11(x) L22(q^-2 x) - q^-1 L21(x) L12(q^-2 x) = 1 - q^-2 lambda^2 C^(l) x + q^-4 x^2`
/// on interior columns. Margin 2 for truncated carriers; 0 is appropriate
/// for finite-dimensional ones, where nothing is dropped.
pub fn qdet_check(
    rep: &RepHandle,
    x: C64,
    p: &QParams,
    tol: f64,
    margin: usize,
) -> Result<CheckReport, LopsError> {
    let timer = Timer::start();
    let l_x = build_l(rep, x, p)?;
    let l_qx = build_l(rep, x * p.int_pow(-2), p)?;
    let lhs = l_x
        .block(1, 1)
        .matmul(&l_qx.block(2, 2))?
        .sub(&l_x.block(2, 1).matmul(&l_qx.block(1, 2))?.scale(1.0 / p.q()))?;
    let rhs = qdet_rhs(rep, x, p)?;
    let d = rep.space.dim;
    let mask = rep.interior(margin)?;
    let r = residual(&lhs, &rhs, &mask)?;
    let params =
        Params::new().c64("q", p.q()).c64("x", x).usize("D", d).str("rep", &rep.name).build();
    Ok(CheckReport::new(
        format!("qdet/{}", rep.name),
        params,
        r,
        tol,
        format!("fock<={}", d - 1 - margin),
        "",
        timer.ms(),
    ))
}

/// Right side of the quantum determinant,
/// `1 - q^-2 lambda^2 C^(l) x + q^-4 x^2`, as an aux-space operator.
pub fn qdet_rhs(rep: &RepHandle, x: C64, p: &QParams) -> Result<Operator, LopsError> {
    let c_l = casimir_left(rep, p)?;
    let l2 = p.lambda() * p.lambda();
    Ok(c_l.scale(-p.int_pow(-2) * l2 * x).add_scalar(C64::new(1.0, 0.0) + p.int_pow(-4) * x * x))
}

/// Centrality of the quantum-determinant right side: it commutes with `E`
/// and `F` of the same representation on interior columns.
pub fn qdet_centrality_check(
    rep: &RepHandle,
    x: C64,
    p: &QParams,
    tol: f64,
) -> Result<CheckReport, LopsError> {
    let timer = Timer::start();
    let rhs = qdet_rhs(rep, x, p)?;
    let margin = 2;
    let mask = rep.interior(margin)?;
    let mut worst = 0.0f64;
    for g in ["E", "F"] {
        let gen = rep.gen(g)?;
        let r = residual(&rhs.matmul(gen)?, &gen.matmul(&rhs)?, &mask)?;
        worst = worst.max(r);
    }
    let d = rep.space.dim;
    let params =
        Params::new().c64("q", p.q()).c64("x", x).usize("D", d).str("rep", &rep.name).build();
    Ok(CheckReport::new(
        format!("qdet-centrality/{}", rep.name),
        params,
        worst,
        tol,
        format!("fock<={}", d - 1 - margin),
        "[qdet-RHS, E] and [qdet-RHS, F]",
        timer.ms(),
    ))
}

/// The fundamental-aux L-operator playing the role of the R-matrix on two
/// quantum legs; errors at ratios where it degenerates.
fn r_matrix(u: C64, p: &QParams) -> Result<Operator, LopsError> {
    let fund = fund_rep(p);
    let r = build_l(&fund, u, p)?;
    let det = crate::tensor::determinant(r.op.data());
    let scale = r.op.max_abs().powi(4).max(1.0);
    if det.norm() < 1e-12 * scale {
        return Err(LopsError::ResonantRatio { ratio: u });
    }
    Ok(r.op)
}

/// RLL relation over the given auxiliary representation:
/// `L_12(x) L_13(y) R_23(y/x) = R_23(y/x) L_13(y) L_12(x)`
/// on `[aux, qa, qb]`, with `R_23(u)` the fundamental-aux L-operator whose
/// auxiliary slot sits on leg `qa`. The opposite ordering
/// `R L_12 L_13 = L_13 L_12 R` at the inverse ratio is evaluated too and
/// recorded in the notes.
pub fn rll_check(
    aux: &RepHandle,
    x: C64,
    y: C64,
    p: &QParams,
    tol: f64,
) -> Result<CheckReport, LopsError> {
    let timer = Timer::start();
    let qa = Space::new("qa", 2, SpaceKind::Fundamental);
    let qb = Space::new("qb", 2, SpaceKind::Fundamental);
    let legs = vec![aux.space.clone(), qa, qb];

    let la = embed(&build_l(aux, x, p)?.op.relabel("q", "qa")?, &legs)?;
    let lb = embed(&build_l(aux, y, p)?.op.relabel("q", "qb")?, &legs)?;
    let r_op = |u: C64| -> Result<Operator, LopsError> {
        Ok(embed(&r_matrix(u, p)?.relabel("V", "qa")?.relabel("q", "qb")?, &legs)?)
    };

    let margin = if aux.space.dim > 2 { 2 } else { 0 };
    let d = aux.space.dim;
    let mask = if margin == 0 {
        IndexMask::Full
    } else {
        IndexMask::leg_max(&aux.space.label, d - 1 - margin)
    };

    let r1 = r_op(y / x)?;
    let lhs = la.matmul(&lb)?.matmul(&r1)?;
    let rhs = r1.matmul(&lb)?.matmul(&la)?;
    let res = residual(&lhs, &rhs, &mask)?;

    let r2 = r_op(x / y)?;
    let lhs2 = r2.matmul(&la)?.matmul(&lb)?;
    let rhs2 = lb.matmul(&la)?.matmul(&r2)?;
    let res_opp = residual(&lhs2, &rhs2, &mask)?;

    let params = Params::new()
        .c64("q", p.q())
        .c64("x", x)
        .c64("y", y)
        .usize("D", d)
        .str("aux", &aux.name)
        .build();
    Ok(CheckReport::new(
        format!("rll/{}", aux.name),
        params,
        res,
        tol,
        if margin == 0 { "full".into() } else { format!("fock<={}", d - 1 - margin) },
        format!("opposite ordering residual {res_opp:.3e}"),
        timer.ms(),
    ))
}

fn stop_note(evals: &[crate::qnum::SeriesEval]) -> String {
    let terms: Vec<usize> = evals.iter().map(|e| e.terms_used).collect();
    let budget_hit = evals.iter().any(|e| e.stop == crate::qnum::SeriesStop::MaxTerms);
    format!("series terms {terms:?}; stop: {}", if budget_hit { "max_terms" } else { "tail_tol" })
}

/// Scalar factorization `pi_mu^+ phi(x) = phi^(1)(q^mu x) phi^(2)(q^-mu x)`.
pub fn phi_factor_check(
    mu: C64,
    x: C64,
    p: &QParams,
    b: &SeriesBudget,
    tol: f64,
) -> Result<CheckReport, LopsError> {
    let timer = Timer::start();
    let lhs = phi_series_eval(x, mu, p, b)?;
    let r1 = phi_i_series_eval(OscKind::Osc1, p.pow(mu) * x, p, b)?;
    let r2 = phi_i_series_eval(OscKind::Osc2, p.pow(-mu) * x, p, b)?;
    let rhs = r1.value * r2.value;
    let r = (lhs.value - rhs).norm() / (1.0 + lhs.value.norm() + rhs.norm());
    let params = Params::new().c64("q", p.q()).c64("mu", mu).c64("x", x).build();
    Ok(CheckReport::new(
        "phi/factorization",
        params,
        r,
        tol,
        "none",
        stop_note(&[lhs, r1, r2]),
        timer.ms(),
    ))
}

/// Scalar functional equation
/// `phi(x) phi(q^-2 x) = 1 - q^-2 lambda^2 C x + q^-4 x^2` with the Verma
/// Casimir eigenvalue `C = (q^{mu+1} + q^{-mu-1})/lambda^2`.
pub fn phi_functional_check(
    mu: C64,
    x: C64,
    p: &QParams,
    b: &SeriesBudget,
    tol: f64,
) -> Result<CheckReport, LopsError> {
    let timer = Timer::start();
    let e1 = phi_series_eval(x, mu, p, b)?;
    let e2 = phi_series_eval(x * p.int_pow(-2), mu, p, b)?;
    let lhs = e1.value * e2.value;
    let cas = (p.pow(mu + 1.0) + p.pow(-(mu + 1.0))) / (p.lambda() * p.lambda());
    let rhs = 1.0 - p.int_pow(-2) * p.lambda() * p.lambda() * cas * x + p.int_pow(-4) * x * x;
    let r = (lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm());
    let params = Params::new().c64("q", p.q()).c64("mu", mu).c64("x", x).build();
    Ok(CheckReport::new(
        "phi/functional-equation",
        params,
        r,
        tol,
        "none",
        stop_note(&[e1, e2]),
        timer.ms(),
    ))
}
