//! Cross-module invariants, mostly property-based.

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qlop::qnum::{exp_q_coeffs, nilpotent_power_series, QParams};
use qlop::reps::{
    borel_map, osc_rep, relations_check, verma_rep, BorelMapId, BorelMapSpec, RelationSet,
};
use qlop::tensor::{
    commutator, embed, partial_trace_weighted, residual, IndexMask, Operator, Space, SpaceKind,
};
use qlop::OscKind;
use rand::{Rng, SeedableRng};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_op(spaces: Vec<Space>, seed: u64) -> Operator {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d: usize = spaces.iter().map(|s| s.dim).product();
    let mut op = Operator::zeros(spaces);
    for r in 0..d {
        for cc in 0..d {
            op.set_entry(r, cc, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    op
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// embed is an algebra homomorphism: embed(A B) = embed(A) embed(B).
    #[test]
    fn embed_is_a_homomorphism(seed in 0u64..1000, d1 in 2usize..4, d2 in 2usize..4, d3 in 2usize..4) {
        let s1 = Space::new("a", d1, SpaceKind::Verma);
        let s2 = Space::new("b", d2, SpaceKind::Verma);
        let s3 = Space::new("c", d3, SpaceKind::Verma);
        let target = vec![s1, s2.clone(), s3];
        let a = random_op(vec![s2.clone()], seed);
        let b = random_op(vec![s2], seed + 1);
        let lhs = embed(&a.matmul(&b).unwrap(), &target).unwrap();
        let rhs = embed(&a, &target).unwrap().matmul(&embed(&b, &target).unwrap()).unwrap();
        prop_assert!(residual(&lhs, &rhs, &IndexMask::Full).unwrap() < 1e-13);
    }

    /// The weighted partial trace is linear in the operator and the weight.
    #[test]
    fn weighted_trace_is_bilinear(seed in 0u64..1000, alpha in -2.0f64..2.0) {
        let sa = Space::new("a", 3, SpaceKind::Verma);
        let sb = Space::new("b", 3, SpaceKind::Verma);
        let spaces = vec![sa.clone(), sb];
        let op1 = random_op(spaces.clone(), seed);
        let op2 = random_op(spaces, seed + 1);
        let w1 = random_op(vec![sa.clone()], seed + 2);
        let w2 = random_op(vec![sa], seed + 3);

        let lin_op = partial_trace_weighted(&op1.scale(c(alpha)).add(&op2).unwrap(), "a", &w1).unwrap();
        let expect = partial_trace_weighted(&op1, "a", &w1).unwrap().scale(c(alpha))
            .add(&partial_trace_weighted(&op2, "a", &w1).unwrap()).unwrap();
        prop_assert!(residual(&lin_op, &expect, &IndexMask::Full).unwrap() < 1e-13);

        let lin_w = partial_trace_weighted(&op1, "a", &w1.scale(c(alpha)).add(&w2).unwrap()).unwrap();
        let expect = partial_trace_weighted(&op1, "a", &w1).unwrap().scale(c(alpha))
            .add(&partial_trace_weighted(&op1, "a", &w2).unwrap()).unwrap();
        prop_assert!(residual(&lin_w, &expect, &IndexMask::Full).unwrap() < 1e-13);
    }

    /// Tr(AB) = Tr(BA): the full partial trace of a commutator vanishes.
    #[test]
    fn trace_of_commutator_vanishes(seed in 0u64..1000) {
        let s = Space::new("a", 5, SpaceKind::Verma);
        let a = random_op(vec![s.clone()], seed);
        let b = random_op(vec![s.clone()], seed + 1);
        let comm = commutator(&a, &b).unwrap();
        let traced = partial_trace_weighted(
            &comm.kron(&Operator::identity(vec![Space::new("b", 2, SpaceKind::Fundamental)])).unwrap(),
            "a",
            &Operator::identity(vec![s]),
        ).unwrap();
        prop_assert!(traced.max_abs() < 1e-12);
    }

    /// exp_q of a strict shift is unitriangular; its inverse times itself
    /// is the identity.
    #[test]
    fn exp_q_is_unitriangular_invertible(d in 3usize..9, q in 0.5f64..0.9, amp in 0.2f64..1.0) {
        let p = QParams::real(q).unwrap();
        let s = Space::new("w", d, SpaceKind::Osc1);
        let mut shift = Operator::zeros(vec![s.clone()]);
        for n in 0..d - 1 {
            shift.set_entry(n + 1, n, c(amp * (n + 1) as f64));
        }
        let coeffs = exp_q_coeffs(p.int_pow(-2), d + 1).unwrap();
        let e = nilpotent_power_series(&coeffs, &shift).unwrap();
        for i in 0..d {
            prop_assert_eq!(e.entry(i, i), c(1.0));
        }
        let id = Operator::identity(vec![s]);
        let einv =
            Operator::from_matrix(e.spaces().to_vec(), invert_dense(e.data())).unwrap();
        prop_assert!(residual(&e.matmul(&einv).unwrap(), &id, &IndexMask::Full).unwrap() < 1e-13);
    }
}

/// Plain Gauss-Jordan used only as a test oracle.
fn invert_dense(a: &ndarray::Array2<C64>) -> ndarray::Array2<C64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv: ndarray::Array2<C64> = ndarray::Array2::eye(n);
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].norm();
        for r in col + 1..n {
            if m[(r, col)].norm() > best {
                best = m[(r, col)].norm();
                piv = r;
            }
        }
        assert!(best > 0.0);
        if piv != col {
            for j in 0..n {
                m.swap((col, j), (piv, j));
                inv.swap((col, j), (piv, j));
            }
        }
        let d = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[(r, col)];
                for j in 0..n {
                    let mc = m[(col, j)];
                    let ic = inv[(col, j)];
                    m[(r, j)] -= f * mc;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
    }
    inv
}

/// Cartan actions hold under every Borel/evaluation map the crate defines.
#[test]
fn cartan_actions_hold_under_all_maps() {
    let p = QParams::real(1.3).unwrap();
    let mu = c(0.7321);
    let x = c(0.4);
    let d = 16;
    let verma = verma_rep(mu, d, &p);
    let w1 = osc_rep(OscKind::Osc1, d, &p);
    let w2 = osc_rep(OscKind::Osc2, d, &p);
    let specs: Vec<(BorelMapSpec, &qlop::reps::RepHandle)> = vec![
        (BorelMapSpec::new(BorelMapId::EvX, x), &verma),
        (BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc1), x), &w1),
        (BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc2), x), &w2),
        (BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc1), x), &w1),
        (BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc2), x), &w2),
        (BorelMapSpec::with_mu(BorelMapId::EvPlus(OscKind::Osc1), x, mu), &w1),
        (BorelMapSpec::with_mu(BorelMapId::EvPlus(OscKind::Osc2), x, mu), &w2),
        (BorelMapSpec::with_mu(BorelMapId::EvMinus(OscKind::Osc1), x, mu), &w1),
        (BorelMapSpec::with_mu(BorelMapId::EvMinus(OscKind::Osc2), x, mu), &w2),
        (BorelMapSpec::with_mu(BorelMapId::EvTilde(OscKind::Osc1), x, mu), &w1),
        (BorelMapSpec::with_mu(BorelMapId::EvTilde(OscKind::Osc2), x, mu), &w2),
    ];
    for (spec, carrier) in specs {
        let map = borel_map(&spec, carrier, &p).unwrap();
        let r = relations_check(&map, RelationSet::BorelCartan, 2, 1e-12, &p).unwrap();
        assert!(r.pass, "{}: cartan residual {}", map.name, r.residual);
        let r = relations_check(&map, RelationSet::BorelSerre, 4, 1e-12, &p).unwrap();
        assert!(r.pass, "{}: serre residual {}", map.name, r.residual);
    }
}
