//! Suite runners. Each returns the reports it produced; hard errors
//! (bad parameters, convergence-domain violations, divergent traces)
//! bubble up and map to exit code 2.

use anyhow::{Context, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qlop::factor::{
    hadamard_check, hadamard_roundtrip_check, intertwiner_check, l_factorization_check, HadamardId,
    IntertwinerVariant,
};
use qlop::lops::{
    phi_factor_check, phi_functional_check, qdet_centrality_check, qdet_check, rll_check,
};
use qlop::qnum::{QParams, SeriesBudget};
use qlop::qops::{
    character_check, commuting_family_check, q_zero_check, t_factorization_check,
    t_factorization_cutoff_stability_check, twist_covariance_check, weight_conservation_check,
    ChainSpec,
};
use qlop::report::CheckReport;
use qlop::reps::{
    borel_map, contraction_limit_check, findim_rep, fund_rep, osc_rep, relations_check, verma_rep,
    BorelMapId, BorelMapSpec, RelationSet,
};
use qlop::OscKind;

use crate::config::Overrides;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteArg {
    Relations,
    Contraction,
    Qdet,
    Rll,
    Phi,
    Intertwiners,
    Corollary,
    Hadamard,
    Qops,
    All,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn qparams(q: f64) -> Result<QParams> {
    QParams::real(q).with_context(|| format!("field `q` = {q}"))
}

fn grid_or(over: Option<f64>, defaults: &[f64]) -> Vec<f64> {
    match over {
        Some(v) => vec![v],
        None => defaults.to_vec(),
    }
}

pub fn run_suite(suite: SuiteArg, ov: &Overrides) -> Result<Vec<CheckReport>> {
    match suite {
        SuiteArg::Relations => relations_suite(ov),
        SuiteArg::Contraction => contraction_suite(ov),
        SuiteArg::Qdet => qdet_suite(ov),
        SuiteArg::Rll => rll_suite(ov),
        SuiteArg::Phi => phi_suite(ov),
        SuiteArg::Intertwiners => intertwiners_suite(ov),
        SuiteArg::Corollary => corollary_suite(ov),
        SuiteArg::Hadamard => hadamard_suite(ov),
        SuiteArg::Qops => qops_suite(ov),
        SuiteArg::All => {
            let mut all = Vec::new();
            for s in [
                SuiteArg::Relations,
                SuiteArg::Contraction,
                SuiteArg::Qdet,
                SuiteArg::Rll,
                SuiteArg::Phi,
                SuiteArg::Intertwiners,
                SuiteArg::Corollary,
                SuiteArg::Hadamard,
                SuiteArg::Qops,
            ] {
                all.extend(run_suite(s, ov)?);
            }
            Ok(all)
        }
    }
}

/// Defining relations, corollaries, Casimir equality, and the Cartan/Serre
/// battery under every Borel and evaluation map, on a (q, mu) grid plus a
/// seeded generic point.
fn relations_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let tol = ov.tol.unwrap_or(1e-12);
    let d = ov.cutoff.unwrap_or(20);
    let x = c(ov.x.unwrap_or(0.4));
    let mut points: Vec<(f64, Vec<f64>)> = grid_or(ov.q, &[1.2, 1.3])
        .into_iter()
        .map(|q| (q, grid_or(ov.mu, &[0.3, 0.7321])))
        .collect();
    if ov.q.is_none() && ov.mu.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(ov.seed());
        let q_extra = rng.random_range(1.10..1.45);
        let mu_extra = rng.random_range(0.2..0.9);
        points.push((q_extra, vec![mu_extra]));
    }

    let mut out = Vec::new();
    for (q, mus) in points {
        let p = qparams(q)?;
        for kind in [OscKind::Osc1, OscKind::Osc2] {
            let rep = osc_rep(kind, d, &p);
            out.push(relations_check(&rep, RelationSet::OscDefining, 2, tol, &p)?);
            out.push(relations_check(&rep, RelationSet::OscCorollaries, 2, tol, &p)?);
        }
        out.push(relations_check(&fund_rep(&p), RelationSet::Sl2Defining, 0, tol, &p)?);
        for mu in mus {
            let verma = verma_rep(c(mu), d, &p);
            out.push(relations_check(&verma, RelationSet::Sl2Defining, 2, tol, &p)?);
            out.push(relations_check(&verma, RelationSet::CasimirEquality, 2, tol, &p)?);
            let w1 = osc_rep(OscKind::Osc1, d, &p);
            let w2 = osc_rep(OscKind::Osc2, d, &p);
            let maps: Vec<(BorelMapSpec, &qlop::reps::RepHandle)> = vec![
                (BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc1), x), &w1),
                (BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc2), x), &w2),
                (BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc1), x), &w1),
                (BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc2), x), &w2),
                (BorelMapSpec::with_mu(BorelMapId::EvPlus(OscKind::Osc1), x, c(mu)), &w1),
                (BorelMapSpec::with_mu(BorelMapId::EvPlus(OscKind::Osc2), x, c(mu)), &w2),
                (BorelMapSpec::with_mu(BorelMapId::EvMinus(OscKind::Osc1), x, c(mu)), &w1),
                (BorelMapSpec::with_mu(BorelMapId::EvMinus(OscKind::Osc2), x, c(mu)), &w2),
                (BorelMapSpec::with_mu(BorelMapId::EvTilde(OscKind::Osc1), x, c(mu)), &w1),
                (BorelMapSpec::with_mu(BorelMapId::EvTilde(OscKind::Osc2), x, c(mu)), &w2),
            ];
            // the full evaluation map satisfies the whole defining set
            let evx = borel_map(&BorelMapSpec::new(BorelMapId::EvX, x), &verma, &p)?;
            out.push(relations_check(&evx, RelationSet::EvaluationDefining, 4, tol, &p)?);
            for (spec, carrier) in maps {
                let map = borel_map(&spec, carrier, &p)?;
                out.push(relations_check(&map, RelationSet::BorelCartan, 2, tol, &p)?);
                out.push(relations_check(&map, RelationSet::BorelSerre, 4, tol, &p)?);
            }
        }
    }
    Ok(out)
}

/// Contraction of the Verma module onto the two Fock modules along an
/// increasing mu grid.
fn contraction_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let tol = ov.tol.unwrap_or(1e-6);
    let d = ov.cutoff.unwrap_or(8);
    let p = qparams(ov.q.unwrap_or(1.3))?;
    Ok(contraction_limit_check(&[10.0, 20.0, 30.0], d, &p, tol)?)
}

/// Quantum determinant on the Verma carrier and the finite quotient, its
/// centrality, and the two scalar phi identities at the same point.
fn qdet_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let tol = ov.tol.unwrap_or(1e-10);
    let d = ov.cutoff.unwrap_or(20);
    let p = qparams(ov.q.unwrap_or(1.3))?;
    let mu = c(ov.mu.unwrap_or(0.7321));
    let x = c(ov.x.unwrap_or(0.5));
    let b = SeriesBudget::default();
    let verma = verma_rep(mu, d, &p);
    Ok(vec![
        qdet_check(&verma, x, &p, tol, 2)?,
        qdet_centrality_check(&verma, x, &p, tol)?,
        qdet_check(&findim_rep(1, &p), x, &p, tol, 0)?,
        phi_functional_check(mu, x, &p, &b, tol)?,
        phi_factor_check(mu, x, &p, &b, tol)?,
    ])
}

/// RLL relation over the fundamental, oscillator, and Verma auxiliary
/// representations.
fn rll_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let d = ov.cutoff.unwrap_or(20);
    let p = qparams(ov.q.unwrap_or(1.3))?;
    let mu = c(ov.mu.unwrap_or(0.7321));
    let x = c(ov.x.unwrap_or(0.7));
    let y = c(ov.y.unwrap_or(0.3));
    let tol_fund = ov.tol.unwrap_or(1e-12);
    let tol_big = ov.tol.unwrap_or(1e-10);
    Ok(vec![
        rll_check(&fund_rep(&p), x, y, &p, tol_fund)?,
        rll_check(&osc_rep(OscKind::Osc1, d, &p), x, y, &p, tol_big)?,
        rll_check(&osc_rep(OscKind::Osc2, d, &p), x, y, &p, tol_big)?,
        rll_check(&verma_rep(mu, d, &p), x, y, &p, tol_big)?,
    ])
}

/// The scalar phi functional equation and factorization over a parameter
/// grid plus a seeded generic point.
fn phi_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let tol = ov.tol.unwrap_or(1e-10);
    let b = SeriesBudget::default();
    let qs = grid_or(ov.q, &[1.2, 1.3]);
    let mus = grid_or(ov.mu, &[0.3, 0.7321]);
    let xs = grid_or(ov.x, &[0.1, 0.2, 0.3]);
    let mut out = Vec::new();
    for &q in &qs {
        let p = qparams(q)?;
        for &mu in &mus {
            for &x in &xs {
                out.push(phi_functional_check(c(mu), c(x), &p, &b, tol)?);
                out.push(phi_factor_check(c(mu), c(x), &p, &b, tol)?);
            }
        }
    }
    if ov.q.is_none() && ov.mu.is_none() && ov.x.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(ov.seed().wrapping_add(1));
        let p = qparams(rng.random_range(1.10..1.45))?;
        let mu = c(rng.random_range(0.2..0.9));
        let x = c(rng.random_range(0.05..0.3));
        out.push(phi_functional_check(mu, x, &p, &b, tol)?);
        out.push(phi_factor_check(mu, x, &p, &b, tol)?);
    }
    Ok(out)
}

/// The three intertwining-relation variants, one record per generator.
fn intertwiners_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let tol = ov.tol.unwrap_or(1e-11);
    let d = ov.cutoff.unwrap_or(16);
    let p = qparams(ov.q.unwrap_or(1.3))?;
    let mu = c(ov.mu.unwrap_or(0.7321));
    let x = c(ov.x.unwrap_or(0.4));
    let mut out = Vec::new();
    for variant in [
        IntertwinerVariant::BorelPlus,
        IntertwinerVariant::BorelMinus,
        IntertwinerVariant::OppositeOrder,
    ] {
        out.extend(intertwiner_check(variant, mu, x, d, &p, tol)?);
    }
    Ok(out)
}

/// The L-operator factorization at two highest weights, plus cutoff
/// stability of the interior residual.
fn corollary_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let tol = ov.tol.unwrap_or(1e-10);
    let d = ov.cutoff.unwrap_or(12);
    let p = qparams(ov.q.unwrap_or(1.3))?;
    let x = c(ov.x.unwrap_or(0.4));
    let mut out = Vec::new();
    for mu in grid_or(ov.mu, &[0.0, 0.7321]) {
        out.push(l_factorization_check(c(mu), x, d, &p, tol, None)?);
    }
    // doubling the cutoff must not move the interior residual
    let mu = c(ov.mu.unwrap_or(0.7321));
    let s_max = d.saturating_sub(4);
    let r_small = l_factorization_check(mu, x, d, &p, 1.0, Some(s_max))?;
    let r_big = l_factorization_check(mu, x, 2 * d, &p, 1.0, Some(s_max))?;
    let drift = (r_small.residual - r_big.residual).abs();
    let stability_tol = ov.tol.unwrap_or(1e-13);
    out.push(CheckReport::new(
        "factorization/cutoff-stability",
        r_small.params.clone(),
        drift,
        stability_tol,
        format!("s<={s_max}"),
        format!(
            "residual {:.3e} at D={d}, {:.3e} at D={}",
            r_small.residual,
            r_big.residual,
            2 * d
        ),
        r_small.wall_time_ms + r_big.wall_time_ms,
    ));
    Ok(out)
}

/// The q-Hadamard conjugation identities; requires |q| < 1.
fn hadamard_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let tol = ov.tol.unwrap_or(1e-9);
    let d = ov.cutoff.unwrap_or(14);
    let p = qparams(ov.q.unwrap_or(0.6))?;
    let b = SeriesBudget::default();
    let alphas = [c(0.0), c(0.37), c(1.0)];
    let mut out = Vec::new();
    for id in HadamardId::all() {
        if id.uses_alpha() {
            for alpha in alphas {
                out.push(hadamard_check(id, alpha, d, &p, &b, tol)?);
            }
        } else {
            out.push(hadamard_check(id, c(0.0), d, &p, &b, tol)?);
        }
    }
    out.push(hadamard_roundtrip_check(d, &p, &b, tol)?);
    Ok(out)
}

/// T/Q-operator battery per chain length: factorization, character limit,
/// Q(0), commutators, weight conservation, cutoff stability, twist
/// covariance.
fn qops_suite(ov: &Overrides) -> Result<Vec<CheckReport>> {
    let d = ov.cutoff.unwrap_or(40);
    let p = qparams(ov.q.unwrap_or(1.25))?;
    let mu = c(ov.mu.unwrap_or(0.7321));
    let x = c(ov.x.unwrap_or(0.2));
    let sites: Vec<usize> = match ov.sites {
        Some(n) => vec![n],
        None => vec![1, 2],
    };
    let mut out = Vec::new();
    for n in sites {
        let phi = ov.phi.unwrap_or(n as f64 + 2.0);
        let spec = ChainSpec::new(n, x, phi, d).context("field `sites`")?;
        out.push(t_factorization_check(mu, &spec, &p, ov.tol.unwrap_or(1e-8))?);
        out.push(character_check(mu, &spec, &p, ov.tol.unwrap_or(1e-10))?);
        out.push(q_zero_check(OscKind::Osc1, &spec, &p, ov.tol.unwrap_or(1e-8))?);
        out.push(q_zero_check(OscKind::Osc2, &spec, &p, ov.tol.unwrap_or(1e-8))?);
        out.extend(commuting_family_check(mu, &spec, &p, ov.tol.unwrap_or(1e-8))?);
        out.push(weight_conservation_check(mu, &spec, &p, ov.tol.unwrap_or(1e-12))?);
        out.push(t_factorization_cutoff_stability_check(mu, &spec, &p, ov.tol.unwrap_or(1e-9))?);
        out.push(twist_covariance_check(mu, &spec, &p, ov.tol.unwrap_or(1e-10))?);
    }
    Ok(out)
}
