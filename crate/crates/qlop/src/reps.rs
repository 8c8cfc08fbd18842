//! Representation builders and relation checkers.
//!
//! Truncation convention: Fock/Verma modules are cut at `v_0 .. v_{D-1}`
//! and the raising overflow `F v_{D-1}` (resp. `f v_{D-1}`) is dropped.
//! Every checker declares an interior margin equal to the maximal
//! Fock-index raise of the words involved and compares only columns with
//! index `<= D - 1 - margin`, so identity failures are attributable to the
//! algebra, never to truncation.
//!
//! Generator naming: Verma-type handles carry `E`, `F`, `H`; oscillator
//! handles carry `e`, `f`, `h` (the hatted generators); Borel-map handles
//! carry the affine names `e0`, `e1`, `f0`, `f1`, `h0`, `h1`, with exactly
//! the generators the map defines.

use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::qnum::{q_number, QParams};
use crate::report::{CheckReport, Params, Timer, STRUCTURAL_FAILURE};
use crate::tensor::{residual, IndexMask, Operator, Space, SpaceKind, SpaceParams, TensorError};
use crate::OscKind;

#[derive(Debug, Error)]
pub enum RepError {
    #[error("map `{map}` does not define generator `{gen}`")]
    UndefinedGenerator { map: String, gen: String },
    #[error("map `{map}` needs a carrier of kind {expected}, got {got}")]
    KindMismatch { map: String, expected: String, got: String },
    #[error("map `{0}` requires the parameter mu")]
    MissingMu(String),
    #[error("cutoff {d} too small: margin {margin} needs D >= {needed}")]
    CutoffTooSmall { d: usize, margin: usize, needed: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepParams {
    pub q: C64,
    pub mu: Option<C64>,
    pub x: Option<C64>,
    pub cutoff: usize,
}

/// A representation (or Borel-map image table): generator name to matrix,
/// all on one space.
#[derive(Debug, Clone)]
pub struct RepHandle {
    pub space: Space,
    pub gens: BTreeMap<String, Operator>,
    pub params: RepParams,
    pub name: String,
}

impl RepHandle {
    pub fn gen(&self, name: &str) -> Result<&Operator, RepError> {
        self.gens.get(name).ok_or_else(|| RepError::UndefinedGenerator {
            map: self.name.clone(),
            gen: name.to_string(),
        })
    }

    pub fn has(&self, name: &str) -> bool {
        self.gens.contains_key(name)
    }

    pub fn cutoff(&self) -> usize {
        self.params.cutoff
    }

    /// Interior mask for this handle's space at a given margin.
    pub fn interior(&self, margin: usize) -> Result<IndexMask, RepError> {
        let d = self.space.dim;
        if d < margin + 2 {
            return Err(RepError::CutoffTooSmall { d, margin, needed: margin + 2 });
        }
        Ok(IndexMask::leg_max(&self.space.label, d - 1 - margin))
    }
}

/// `q^{alpha h}` for a diagonal Cartan matrix `h`, principal branch.
pub fn q_cartan_power(h: &Operator, alpha: C64, p: &QParams) -> Operator {
    assert!(h.is_diagonal(), "Cartan generators are diagonal");
    let n = h.dim();
    let mut out = Operator::zeros(h.spaces().to_vec());
    for i in 0..n {
        out.set_entry(i, i, p.pow(alpha * h.entry(i, i)));
    }
    out
}

/// Fock representation of the oscillator algebra `Osc_1` or `Osc_2` on
/// `v_0 .. v_{D-1}`:
/// `h v_n = -2n v_n`, `f v_n = v_{n+1}` (overflow dropped), and
/// `e v_n = +-[n]_q q^{-+(n-1)} / lambda v_{n-1}` (upper signs for `Osc_1`).
pub fn osc_rep(kind: OscKind, d: usize, p: &QParams) -> RepHandle {
    assert!(d >= 2, "oscillator cutoff must be at least 2");
    let (label, skind) = match kind {
        OscKind::Osc1 => ("W1", SpaceKind::Osc1),
        OscKind::Osc2 => ("W2", SpaceKind::Osc2),
    };
    let space = Space::new(label, d, skind)
        .with_params(SpaceParams { cutoff: Some(d), ..Default::default() });
    let mut h = Operator::zeros(vec![space.clone()]);
    let mut e = Operator::zeros(vec![space.clone()]);
    let mut f = Operator::zeros(vec![space.clone()]);
    for n in 0..d {
        h.set_entry(n, n, C64::new(-2.0 * n as f64, 0.0));
        if n + 1 < d {
            f.set_entry(n + 1, n, C64::new(1.0, 0.0));
        }
        if n >= 1 {
            let coeff = match kind {
                OscKind::Osc1 => q_number(n as i64, p) * p.int_pow(-(n as i64) + 1) / p.lambda(),
                OscKind::Osc2 => -q_number(n as i64, p) * p.int_pow(n as i64 - 1) / p.lambda(),
            };
            e.set_entry(n - 1, n, coeff);
        }
    }
    let mut gens = BTreeMap::new();
    gens.insert("h".into(), h);
    gens.insert("e".into(), e);
    gens.insert("f".into(), f);
    RepHandle {
        space,
        gens,
        params: RepParams { q: p.q(), mu: None, x: None, cutoff: d },
        name: format!("{kind}"),
    }
}

/// Verma module with highest weight `mu`, truncated at `D`:
/// `H v_n = (mu - 2n) v_n`, `E v_n = [n][mu - n + 1] v_{n-1}`,
/// `F v_n = v_{n+1}`.
pub fn verma_rep(mu: C64, d: usize, p: &QParams) -> RepHandle {
    assert!(d >= 2, "Verma cutoff must be at least 2");
    let space = Space::new("V", d, SpaceKind::Verma).with_params(SpaceParams {
        mu: Some(mu),
        cutoff: Some(d),
        ..Default::default()
    });
    let mut h = Operator::zeros(vec![space.clone()]);
    let mut e = Operator::zeros(vec![space.clone()]);
    let mut f = Operator::zeros(vec![space.clone()]);
    for n in 0..d {
        h.set_entry(n, n, mu - 2.0 * n as f64);
        if n + 1 < d {
            f.set_entry(n + 1, n, C64::new(1.0, 0.0));
        }
        if n >= 1 {
            let nn = C64::new(n as f64, 0.0);
            let weight = (p.pow(mu - nn + 1.0) - p.pow(-(mu - nn + 1.0))) / p.lambda();
            e.set_entry(n - 1, n, q_number(n as i64, p) * weight);
        }
    }
    let mut gens = BTreeMap::new();
    gens.insert("H".into(), h);
    gens.insert("E".into(), e);
    gens.insert("F".into(), f);
    RepHandle {
        space,
        gens,
        params: RepParams { q: p.q(), mu: Some(mu), x: None, cutoff: d },
        name: "verma".into(),
    }
}

/// Fundamental representation: `E = E12`, `F = E21`, `H = diag(1, -1)`.
pub fn fund_rep(p: &QParams) -> RepHandle {
    let space = Space::new("V", 2, SpaceKind::Fundamental);
    let mut e = Operator::zeros(vec![space.clone()]);
    e.set_entry(0, 1, C64::new(1.0, 0.0));
    let mut f = Operator::zeros(vec![space.clone()]);
    f.set_entry(1, 0, C64::new(1.0, 0.0));
    let mut h = Operator::zeros(vec![space.clone()]);
    h.set_entry(0, 0, C64::new(1.0, 0.0));
    h.set_entry(1, 1, C64::new(-1.0, 0.0));
    let mut gens = BTreeMap::new();
    gens.insert("E".into(), e);
    gens.insert("F".into(), f);
    gens.insert("H".into(), h);
    RepHandle {
        space,
        gens,
        params: RepParams { q: p.q(), mu: Some(C64::new(1.0, 0.0)), x: None, cutoff: 2 },
        name: "fundamental".into(),
    }
}

/// Finite-dimensional quotient with highest weight `m >= 1`: the first
/// `m + 1` rows/columns of the Verma module. The subspace splits off
/// because `E`'s element `[m+1][mu - m]` vanishes at `mu = m`.
pub fn findim_rep(m: usize, p: &QParams) -> RepHandle {
    assert!(m >= 1, "findim quotient needs highest weight >= 1");
    let mu = C64::new(m as f64, 0.0);
    let verma = verma_rep(mu, m + 2, p);
    let d = m + 1;
    let space = Space::new("V", d, SpaceKind::Verma).with_params(SpaceParams {
        mu: Some(mu),
        cutoff: Some(d),
        ..Default::default()
    });
    let mut gens = BTreeMap::new();
    for (name, op) in &verma.gens {
        let mut cut = Operator::zeros(vec![space.clone()]);
        for r in 0..d {
            for c in 0..d {
                cut.set_entry(r, c, op.entry(r, c));
            }
        }
        gens.insert(name.clone(), cut);
    }
    RepHandle {
        space,
        gens,
        params: RepParams { q: p.q(), mu: Some(mu), x: None, cutoff: d },
        name: format!("findim{m}"),
    }
}

/// Identifier of an evaluation / Borel map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorelMapId {
    /// Full evaluation map on the Verma carrier: e0->F, e1->xE, f0->E,
    /// f1->F/x, h0->-H, h1->H.
    EvX,
    /// B+ oscillator maps: e0->f, e1->xe, h0->-h, h1->h.
    RhoPlus(OscKind),
    /// B- oscillator maps: f0->e, f1->f/x, h0->-h, h1->h.
    RhoMinus(OscKind),
    /// B+ evaluation maps through the composite sl2 triple on `W_i`
    /// (`ev2(e0) = 0`).
    EvPlus(OscKind),
    /// B- evaluation maps (`ev1(f0) = 0`, `ev2(f0) = E_2`).
    EvMinus(OscKind),
    /// Tilde maps (the `mu -> -mu` composites), defined on both halves
    /// with `ev1~(e1) = 0` and `ev2~(f1) = 0`.
    EvTilde(OscKind),
}

impl BorelMapId {
    pub fn name(&self) -> String {
        match self {
            BorelMapId::EvX => "ev_x".into(),
            BorelMapId::RhoPlus(k) => format!("rho{}_plus", k.index()),
            BorelMapId::RhoMinus(k) => format!("rho{}_minus", k.index()),
            BorelMapId::EvPlus(k) => format!("ev{}_plus", k.index()),
            BorelMapId::EvMinus(k) => format!("ev{}_minus", k.index()),
            BorelMapId::EvTilde(k) => format!("ev{}_tilde", k.index()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BorelMapSpec {
    pub id: BorelMapId,
    pub x: C64,
    pub mu: Option<C64>,
}

impl BorelMapSpec {
    pub fn new(id: BorelMapId, x: C64) -> Self {
        Self { id, x, mu: None }
    }

    pub fn with_mu(id: BorelMapId, x: C64, mu: C64) -> Self {
        Self { id, x, mu: Some(mu) }
    }
}

/// The composite sl2 triple `(E_i, F_i, H_i)` (or its tilde variant) on
/// the oscillator module `W_i`:
/// `E_1 = (q^mu - q^{-mu - h1}) e1`, `F_1 = f1`, `H_1 = h1 + mu`;
/// `E_2 = e2`, `F_2 = f2 (q^mu - q^{-mu + h2})`, `H_2 = h2 - mu`;
/// tilde variants are the same with `mu -> -mu`.
pub fn composite_efh(
    kind: OscKind,
    tilde: bool,
    mu: C64,
    carrier: &RepHandle,
    p: &QParams,
) -> Result<(Operator, Operator, Operator), RepError> {
    let mu_eff = if tilde { -mu } else { mu };
    let e_hat = carrier.gen("e")?;
    let f_hat = carrier.gen("f")?;
    let h_hat = carrier.gen("h")?;
    match kind {
        OscKind::Osc1 => {
            let prefac = q_cartan_power(h_hat, C64::new(-1.0, 0.0), p)
                .scale(-p.pow(-mu_eff))
                .add_scalar(p.pow(mu_eff));
            let e = prefac.matmul(e_hat)?;
            let h = h_hat.add_scalar(mu_eff);
            Ok((e, f_hat.clone(), h))
        }
        OscKind::Osc2 => {
            let postfac = q_cartan_power(h_hat, C64::new(1.0, 0.0), p)
                .scale(-p.pow(-mu_eff))
                .add_scalar(p.pow(mu_eff));
            let f = f_hat.matmul(&postfac)?;
            let h = h_hat.add_scalar(-mu_eff);
            Ok((e_hat.clone(), f, h))
        }
    }
}

fn expect_kind(spec: &BorelMapSpec, carrier: &RepHandle, want: &str) -> Result<(), RepError> {
    let got = carrier.space.kind.as_str();
    let ok = match want {
        "verma" => matches!(carrier.space.kind, SpaceKind::Verma | SpaceKind::Fundamental),
        other => other == got,
    };
    if ok {
        Ok(())
    } else {
        Err(RepError::KindMismatch {
            map: spec.id.name(),
            expected: want.to_string(),
            got: got.to_string(),
        })
    }
}

fn need_mu(spec: &BorelMapSpec) -> Result<C64, RepError> {
    spec.mu.ok_or_else(|| RepError::MissingMu(spec.id.name()))
}

/// Builds the generator-image table of a Borel/evaluation map on the given
/// carrier. Exactly the generators the map defines are present; requesting
/// any other one is an error, not zero.
pub fn borel_map(
    spec: &BorelMapSpec,
    carrier: &RepHandle,
    p: &QParams,
) -> Result<RepHandle, RepError> {
    let x = spec.x;
    let mut gens: BTreeMap<String, Operator> = BTreeMap::new();
    let zero = Operator::zeros(vec![carrier.space.clone()]);
    let minus_one = C64::new(-1.0, 0.0);
    match spec.id {
        BorelMapId::EvX => {
            expect_kind(spec, carrier, "verma")?;
            let e = carrier.gen("E")?.clone();
            let f = carrier.gen("F")?.clone();
            let h = carrier.gen("H")?.clone();
            gens.insert("e0".into(), f.clone());
            gens.insert("f0".into(), e.clone());
            gens.insert("h0".into(), h.scale(minus_one));
            gens.insert("e1".into(), e.scale(x));
            gens.insert("f1".into(), f.scale(1.0 / x));
            gens.insert("h1".into(), h);
        }
        BorelMapId::RhoPlus(kind) => {
            expect_kind(spec, carrier, &format!("osc{}", kind.index()))?;
            let e = carrier.gen("e")?.clone();
            let f = carrier.gen("f")?.clone();
            let h = carrier.gen("h")?.clone();
            gens.insert("e0".into(), f);
            gens.insert("e1".into(), e.scale(x));
            gens.insert("h0".into(), h.scale(minus_one));
            gens.insert("h1".into(), h);
        }
        BorelMapId::RhoMinus(kind) => {
            expect_kind(spec, carrier, &format!("osc{}", kind.index()))?;
            let e = carrier.gen("e")?.clone();
            let f = carrier.gen("f")?.clone();
            let h = carrier.gen("h")?.clone();
            gens.insert("f0".into(), e);
            gens.insert("f1".into(), f.scale(1.0 / x));
            gens.insert("h0".into(), h.scale(minus_one));
            gens.insert("h1".into(), h);
        }
        BorelMapId::EvPlus(kind) => {
            expect_kind(spec, carrier, &format!("osc{}", kind.index()))?;
            let mu = need_mu(spec)?;
            let (e, f, h) = composite_efh(kind, false, mu, carrier, p)?;
            match kind {
                OscKind::Osc1 => {
                    gens.insert("e0".into(), f);
                }
                OscKind::Osc2 => {
                    gens.insert("e0".into(), zero.clone());
                }
            }
            gens.insert("e1".into(), e.scale(x));
            gens.insert("h0".into(), h.scale(minus_one));
            gens.insert("h1".into(), h);
        }
        BorelMapId::EvMinus(kind) => {
            expect_kind(spec, carrier, &format!("osc{}", kind.index()))?;
            let mu = need_mu(spec)?;
            let (e, f, h) = composite_efh(kind, false, mu, carrier, p)?;
            match kind {
                OscKind::Osc1 => {
                    gens.insert("f0".into(), zero.clone());
                }
                OscKind::Osc2 => {
                    gens.insert("f0".into(), e);
                }
            }
            gens.insert("f1".into(), f.scale(1.0 / x));
            gens.insert("h0".into(), h.scale(minus_one));
            gens.insert("h1".into(), h);
        }
        BorelMapId::EvTilde(kind) => {
            expect_kind(spec, carrier, &format!("osc{}", kind.index()))?;
            let mu = need_mu(spec)?;
            let (e, f, h) = composite_efh(kind, true, mu, carrier, p)?;
            match kind {
                OscKind::Osc1 => {
                    gens.insert("e0".into(), f.clone());
                    gens.insert("e1".into(), zero.clone());
                    gens.insert("f0".into(), e);
                    gens.insert("f1".into(), f.scale(1.0 / x));
                }
                OscKind::Osc2 => {
                    gens.insert("e0".into(), f.clone());
                    gens.insert("e1".into(), e.scale(x));
                    gens.insert("f0".into(), e);
                    gens.insert("f1".into(), zero.clone());
                }
            }
            gens.insert("h0".into(), h.scale(minus_one));
            gens.insert("h1".into(), h);
        }
    }
    Ok(RepHandle {
        space: carrier.space.clone(),
        gens,
        params: RepParams { q: p.q(), mu: spec.mu, x: Some(x), cutoff: carrier.params.cutoff },
        name: spec.id.name(),
    })
}

/// Merges two image tables on the same carrier (e.g. the B+ and B- rho
/// maps); shared generators must agree exactly.
pub fn merge_maps(a: &RepHandle, b: &RepHandle) -> Result<RepHandle, RepError> {
    let mut out = a.clone();
    for (k, v) in &b.gens {
        if let Some(prev) = out.gens.get(k) {
            assert!(prev.sub(v)?.max_abs() == 0.0, "merge conflict on generator {k}");
        } else {
            out.gens.insert(k.clone(), v.clone());
        }
    }
    out.name = format!("{}+{}", a.name, b.name);
    Ok(out)
}

/// Left Casimir `E F + (q^{H-1} + q^{-H+1})/lambda^2`.
pub fn casimir_left(rep: &RepHandle, p: &QParams) -> Result<Operator, RepError> {
    let e = rep.gen("E")?;
    let f = rep.gen("F")?;
    let h = rep.gen("H")?;
    let l2 = p.lambda() * p.lambda();
    let qh = q_cartan_power(h, C64::new(1.0, 0.0), p).scale(1.0 / p.q());
    let qhm = q_cartan_power(h, C64::new(-1.0, 0.0), p).scale(p.q());
    Ok(e.matmul(f)?.add(&qh.add(&qhm)?.scale(1.0 / l2))?)
}

/// Right Casimir `F E + (q^{H+1} + q^{-H-1})/lambda^2`.
pub fn casimir_right(rep: &RepHandle, p: &QParams) -> Result<Operator, RepError> {
    let e = rep.gen("E")?;
    let f = rep.gen("F")?;
    let h = rep.gen("H")?;
    let l2 = p.lambda() * p.lambda();
    let qh = q_cartan_power(h, C64::new(1.0, 0.0), p).scale(p.q());
    let qhm = q_cartan_power(h, C64::new(-1.0, 0.0), p).scale(1.0 / p.q());
    Ok(f.matmul(e)?.add(&qh.add(&qhm)?.scale(1.0 / l2))?)
}

/// Relation families checkable on a handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationSet {
    /// Defining oscillator relations: Cartan commutators plus the
    /// `f e` / `e f` products against their Cartan-valued right sides.
    OscDefining,
    /// `[e,f] = +-q^{+-h}/lambda` and `[e,f]_{q^{-+2}} = +-1/lambda`.
    OscCorollaries,
    /// `[H,E] = 2E`, `[H,F] = -2F`, `[E,F] = (q^H - q^{-H})/lambda`.
    Sl2Defining,
    /// `C^(r) = C^(l)`.
    CasimirEquality,
    /// Cartan actions `[h_i, e_j] = a_ij e_j`, `[h_i, f_j] = -a_ij f_j`
    /// over whichever generators the map defines.
    BorelCartan,
    /// The q-Serre relations on the e- and/or f-side, where defined.
    BorelSerre,
    /// Full affine defining set for a map with all six generators
    /// (Cartan + Serre + mixed `[e_i, f_j]`).
    EvaluationDefining,
}

impl RelationSet {
    pub fn name(&self) -> &'static str {
        match self {
            RelationSet::OscDefining => "osc-defining",
            RelationSet::OscCorollaries => "osc-corollaries",
            RelationSet::Sl2Defining => "sl2-defining",
            RelationSet::CasimirEquality => "casimir-lr",
            RelationSet::BorelCartan => "borel-cartan",
            RelationSet::BorelSerre => "borel-serre",
            RelationSet::EvaluationDefining => "evaluation-defining",
        }
    }

    /// Maximal Fock-index raise of any word in the set.
    pub fn default_margin(&self) -> usize {
        match self {
            RelationSet::BorelSerre | RelationSet::EvaluationDefining => 4,
            _ => 2,
        }
    }
}

const CARTAN_MATRIX: [[f64; 2]; 2] = [[2.0, -2.0], [-2.0, 2.0]];

/// The q-Serre word `[a, [a, [a, b]_{t}]]_{1/t}` split into its sum of
/// positive monomials and its sum of negated ones. Comparing the two sides
/// keeps the residual normalizer at the scale of the words themselves, so
/// the check stays meaningful when the generator matrices are large.
fn serre_sides(a: &Operator, b: &Operator, t: C64) -> Result<(Operator, Operator), TensorError> {
    let p1 = a.matmul(b)?;
    let m1 = b.matmul(a)?.scale(t);
    let p2 = a.matmul(&p1)?.add(&m1.matmul(a)?)?;
    let m2 = a.matmul(&m1)?.add(&p1.matmul(a)?)?;
    let tinv = 1.0 / t;
    let p3 = a.matmul(&p2)?.add(&m2.matmul(a)?.scale(tinv))?;
    let m3 = a.matmul(&m2)?.add(&p2.matmul(a)?.scale(tinv))?;
    Ok((p3, m3))
}

type RelationPair = (String, Operator, Operator);

/// `[a, b] = rhs` compared as `a b` vs `b a + rhs`.
fn comm_pair(
    name: impl Into<String>,
    a: &Operator,
    b: &Operator,
    rhs: &Operator,
) -> Result<RelationPair, TensorError> {
    Ok((name.into(), a.matmul(b)?, b.matmul(a)?.add(rhs)?))
}

fn cartan_pairs(rep: &RepHandle, pairs: &mut Vec<RelationPair>) -> Result<(), RepError> {
    for (i, row) in CARTAN_MATRIX.iter().enumerate() {
        let hi = format!("h{i}");
        if !rep.has(&hi) {
            continue;
        }
        let h = rep.gen(&hi)?;
        for (j, &a_ij) in row.iter().enumerate() {
            let hj = format!("h{j}");
            if rep.has(&hj) {
                let hj = rep.gen(&hj)?;
                pairs.push((format!("[h{i},h{j}]=0"), h.matmul(hj)?, hj.matmul(h)?));
            }
            let ej = format!("e{j}");
            if rep.has(&ej) {
                let e = rep.gen(&ej)?;
                pairs.push(comm_pair(
                    format!("[h{i},e{j}]"),
                    h,
                    e,
                    &e.scale(C64::new(a_ij, 0.0)),
                )?);
            }
            let fj = format!("f{j}");
            if rep.has(&fj) {
                let f = rep.gen(&fj)?;
                pairs.push(comm_pair(
                    format!("[h{i},f{j}]"),
                    h,
                    f,
                    &f.scale(C64::new(-a_ij, 0.0)),
                )?);
            }
        }
    }
    Ok(())
}

fn serre_pairs(
    rep: &RepHandle,
    p: &QParams,
    pairs: &mut Vec<RelationPair>,
) -> Result<(), RepError> {
    for (i, j) in [(0usize, 1usize), (1, 0)] {
        let (ei, ej) = (format!("e{i}"), format!("e{j}"));
        if rep.has(&ei) && rep.has(&ej) {
            let (plus, minus) = serre_sides(rep.gen(&ei)?, rep.gen(&ej)?, p.int_pow(2))?;
            pairs.push((format!("serre-e{i}{j}"), plus, minus));
        }
        let (fi, fj) = (format!("f{i}"), format!("f{j}"));
        if rep.has(&fi) && rep.has(&fj) {
            let (plus, minus) = serre_sides(rep.gen(&fi)?, rep.gen(&fj)?, p.int_pow(-2))?;
            pairs.push((format!("serre-f{i}{j}"), plus, minus));
        }
    }
    Ok(())
}

/// Evaluates a relation set on the handle; the residual is the worst one
/// over the set, on interior columns at the given margin.
pub fn relations_check(
    rep: &RepHandle,
    set: RelationSet,
    margin: usize,
    tol: f64,
    p: &QParams,
) -> Result<CheckReport, RepError> {
    let timer = Timer::start();
    let mask = rep.interior(margin)?;
    let lam = p.lambda();
    let id = Operator::identity(vec![rep.space.clone()]);
    let mut pairs: Vec<RelationPair> = Vec::new();

    let osc_kind_err = || RepError::KindMismatch {
        map: set.name().into(),
        expected: "osc1|osc2".into(),
        got: rep.space.kind.as_str().into(),
    };

    match set {
        RelationSet::OscDefining => {
            let e = rep.gen("e")?;
            let f = rep.gen("f")?;
            let h = rep.gen("h")?;
            pairs.push(comm_pair("[h,e]=2e", h, e, &e.scale(C64::new(2.0, 0.0)))?);
            pairs.push(comm_pair("[h,f]=-2f", h, f, &f.scale(C64::new(-2.0, 0.0)))?);
            let l2 = lam * lam;
            match rep.space.kind {
                SpaceKind::Osc1 => {
                    let qh = q_cartan_power(h, C64::new(1.0, 0.0), p);
                    pairs.push(("fe".into(), f.matmul(e)?, id.sub(&qh)?.scale(p.q() / l2)));
                    pairs.push((
                        "ef".into(),
                        e.matmul(f)?,
                        id.sub(&qh.scale(p.int_pow(-2)))?.scale(p.q() / l2),
                    ));
                }
                SpaceKind::Osc2 => {
                    let qhm = q_cartan_power(h, C64::new(-1.0, 0.0), p);
                    pairs.push((
                        "fe".into(),
                        f.matmul(e)?,
                        id.sub(&qhm)?.scale(1.0 / (p.q() * l2)),
                    ));
                    pairs.push((
                        "ef".into(),
                        e.matmul(f)?,
                        id.sub(&qhm.scale(p.int_pow(2)))?.scale(1.0 / (p.q() * l2)),
                    ));
                }
                _ => return Err(osc_kind_err()),
            }
        }
        RelationSet::OscCorollaries => {
            let e = rep.gen("e")?;
            let f = rep.gen("f")?;
            let h = rep.gen("h")?;
            match rep.space.kind {
                SpaceKind::Osc1 => {
                    let qh = q_cartan_power(h, C64::new(1.0, 0.0), p);
                    pairs.push(comm_pair("[e,f]=q^h/lam", e, f, &qh.scale(1.0 / lam))?);
                    pairs.push((
                        "[e,f]_{q^-2}=1/lam".into(),
                        e.matmul(f)?,
                        f.matmul(e)?.scale(p.int_pow(-2)).add(&id.scale(1.0 / lam))?,
                    ));
                }
                SpaceKind::Osc2 => {
                    let qhm = q_cartan_power(h, C64::new(-1.0, 0.0), p);
                    pairs.push(comm_pair("[e,f]=-q^-h/lam", e, f, &qhm.scale(-1.0 / lam))?);
                    pairs.push((
                        "[e,f]_{q^2}=-1/lam".into(),
                        e.matmul(f)?,
                        f.matmul(e)?.scale(p.int_pow(2)).add(&id.scale(-1.0 / lam))?,
                    ));
                }
                _ => return Err(osc_kind_err()),
            }
        }
        RelationSet::Sl2Defining => {
            let e = rep.gen("E")?;
            let f = rep.gen("F")?;
            let h = rep.gen("H")?;
            pairs.push(comm_pair("[H,E]=2E", h, e, &e.scale(C64::new(2.0, 0.0)))?);
            pairs.push(comm_pair("[H,F]=-2F", h, f, &f.scale(C64::new(-2.0, 0.0)))?);
            let qh = q_cartan_power(h, C64::new(1.0, 0.0), p);
            let qhm = q_cartan_power(h, C64::new(-1.0, 0.0), p);
            pairs.push(comm_pair("[E,F]", e, f, &qh.sub(&qhm)?.scale(1.0 / lam))?);
        }
        RelationSet::CasimirEquality => {
            // C(r) = C(l) rearranged as FE vs EF + (Cartan difference), so
            // both compared sides carry the full scale of the EF words
            let e = rep.gen("E")?;
            let f = rep.gen("F")?;
            let h = rep.gen("H")?;
            let l2 = lam * lam;
            let qh = q_cartan_power(h, C64::new(1.0, 0.0), p);
            let qhm = q_cartan_power(h, C64::new(-1.0, 0.0), p);
            let diag =
                qh.scale(1.0 / p.q() - p.q()).add(&qhm.scale(p.q() - 1.0 / p.q()))?.scale(1.0 / l2);
            pairs.push(("C(r)=C(l)".into(), f.matmul(e)?, e.matmul(f)?.add(&diag)?));
        }
        RelationSet::BorelCartan => {
            cartan_pairs(rep, &mut pairs)?;
        }
        RelationSet::BorelSerre => {
            serre_pairs(rep, p, &mut pairs)?;
        }
        RelationSet::EvaluationDefining => {
            cartan_pairs(rep, &mut pairs)?;
            serre_pairs(rep, p, &mut pairs)?;
            let zero = Operator::zeros(vec![rep.space.clone()]);
            for i in 0..2 {
                for j in 0..2 {
                    let e = rep.gen(&format!("e{i}"))?;
                    let f = rep.gen(&format!("f{j}"))?;
                    let rhs = if i == j {
                        let h = rep.gen(&format!("h{i}"))?;
                        let qh = q_cartan_power(h, C64::new(1.0, 0.0), p);
                        let qhm = q_cartan_power(h, C64::new(-1.0, 0.0), p);
                        qh.sub(&qhm)?.scale(1.0 / lam)
                    } else {
                        zero.clone()
                    };
                    pairs.push(comm_pair(format!("[e{i},f{j}]"), e, f, &rhs)?);
                }
            }
        }
    }

    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    for (name, lhs, rhs) in &pairs {
        let r = residual(lhs, rhs, &mask)?;
        if r > worst {
            worst = r;
            worst_name = name.clone();
        }
    }
    let d = rep.space.dim;
    let mut params = Params::new().c64("q", p.q()).usize("D", d).str("rep", &rep.name);
    if let Some(mu) = rep.params.mu {
        params = params.c64("mu", mu);
    }
    if let Some(x) = rep.params.x {
        params = params.c64("x", x);
    }
    Ok(CheckReport::new(
        format!("relations/{}/{}", set.name(), rep.name),
        params.build(),
        worst,
        tol,
        format!("fock<={}", d - 1 - margin),
        if worst_name.is_empty() { String::new() } else { format!("worst: {worst_name}") },
        timer.ms(),
    ))
}

/// Verifies the contraction limits of the Verma module onto the two Fock
/// modules: residuals of `{H - mu, E q^{-mu}, F}` against `{h, e, f}` of
/// `W_1` (mirrored with `mu -> -mu` onto `W_2`) must decrease strictly
/// along the grid, with the final one below `tol`. The fitted decay rate
/// is logged, not asserted.
pub fn contraction_limit_check(
    mu_grid: &[f64],
    d: usize,
    p: &QParams,
    tol: f64,
) -> Result<Vec<CheckReport>, RepError> {
    assert!(mu_grid.len() >= 2, "need at least two mu values");
    assert!(mu_grid.windows(2).all(|w| w[0] < w[1]), "mu grid must be increasing");
    let margin = 1;
    let mut out = Vec::new();
    for kind in [OscKind::Osc1, OscKind::Osc2] {
        let timer = Timer::start();
        let osc = osc_rep(kind, d, p);
        let mask = osc.interior(margin)?;
        let mut residuals = Vec::with_capacity(mu_grid.len());
        for &mu in mu_grid {
            let mu_signed = match kind {
                OscKind::Osc1 => mu,
                OscKind::Osc2 => -mu,
            };
            let verma = verma_rep(C64::new(mu_signed, 0.0), d, p);
            let move_to = |op: Operator| -> Result<Operator, RepError> {
                Operator::from_matrix(vec![osc.space.clone()], op.data().clone())
                    .map_err(RepError::Tensor)
            };
            let h_shift = move_to(verma.gen("H")?.add_scalar(C64::new(-mu_signed, 0.0)))?;
            let e_scaled = move_to(verma.gen("E")?.scale(p.powf(-mu)))?;
            let f_op = move_to(verma.gen("F")?.clone())?;
            let r = residual(&h_shift, osc.gen("h")?, &mask)?
                .max(residual(&e_scaled, osc.gen("e")?, &mask)?)
                .max(residual(&f_op, osc.gen("f")?, &mask)?);
            residuals.push(r);
        }
        let mut offending = None;
        for w in residuals.windows(2) {
            if w[1] >= w[0] {
                offending = Some((w[0], w[1]));
                break;
            }
        }
        let fitted_ratio = if residuals[0] > 0.0 {
            (residuals[residuals.len() - 1] / residuals[0])
                .powf(1.0 / (residuals.len() as f64 - 1.0))
        } else {
            0.0
        };
        let (residual_value, notes) = match offending {
            None => (
                residuals[residuals.len() - 1],
                format!(
                    "residuals {residuals:?}; fitted decay ratio per grid step {fitted_ratio:.3e}"
                ),
            ),
            Some(pair) => (
                STRUCTURAL_FAILURE,
                format!("non-monotone residual pair {pair:?} in {residuals:?}"),
            ),
        };
        let params = Params::new()
            .c64("q", p.q())
            .usize("D", d)
            .str("mu_grid", &format!("{mu_grid:?}"))
            .build();
        out.push(CheckReport::new(
            format!("contraction/limit{}", kind.index()),
            params,
            residual_value,
            tol,
            format!("fock<={}", d - 1 - margin),
            notes,
            timer.ms(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::commutator;

    fn qp(q: f64) -> QParams {
        QParams::real(q).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn osc_entries_match_formulas() {
        let p = qp(2.0);
        let w1 = osc_rep(OscKind::Osc1, 6, &p);
        // [1]_q q^0 / lambda = 1/1.5
        assert!((w1.gen("e").unwrap().entry(0, 1) - c(1.0 / 1.5)).norm() < 1e-15);
        let w2 = osc_rep(OscKind::Osc2, 6, &p);
        assert!((w2.gen("e").unwrap().entry(0, 1) + c(1.0 / 1.5)).norm() < 1e-15);
        for n in 0..6 {
            assert_eq!(w1.gen("h").unwrap().entry(n, n), c(-2.0 * n as f64));
        }
    }

    #[test]
    fn osc_relations_hold() {
        let p = qp(1.3);
        for kind in [OscKind::Osc1, OscKind::Osc2] {
            let rep = osc_rep(kind, 20, &p);
            let r = relations_check(&rep, RelationSet::OscDefining, 2, 1e-12, &p).unwrap();
            assert!(r.pass, "{kind} defining: {}", r.residual);
            let r = relations_check(&rep, RelationSet::OscCorollaries, 2, 1e-12, &p).unwrap();
            assert!(r.pass, "{kind} corollaries: {}", r.residual);
        }
    }

    #[test]
    fn osc_kinds_swap_under_q_inversion() {
        let p = qp(1.3);
        let pinv = p.inverted().unwrap();
        let w1 = osc_rep(OscKind::Osc1, 10, &p);
        let w2 = osc_rep(OscKind::Osc2, 10, &pinv);
        for g in ["e", "f", "h"] {
            let a = w1.gen(g).unwrap();
            let b = w2.gen(g).unwrap();
            let diff = a.sub(b);
            // spaces differ by label; compare raw entries
            let diff = match diff {
                Ok(d) => d.max_abs(),
                Err(_) => {
                    let mut m = 0.0f64;
                    for r in 0..10 {
                        for cc in 0..10 {
                            m = m.max((a.entry(r, cc) - b.entry(r, cc)).norm());
                        }
                    }
                    m
                }
            };
            assert!(diff < 1e-12, "generator {g} differs by {diff}");
        }
    }

    #[test]
    fn verma_matrix_elements() {
        let p = qp(2.0);
        let rep = verma_rep(c(1.0), 8, &p);
        assert!((rep.gen("E").unwrap().entry(0, 1) - c(1.0)).norm() < 1e-14);
        // invariant-subspace onset: [2][0] = 0 at mu = 1
        assert!(rep.gen("E").unwrap().entry(1, 2).norm() < 1e-14);
        let r = relations_check(&rep, RelationSet::Sl2Defining, 2, 1e-12, &p).unwrap();
        assert!(r.pass, "sl2 residual {}", r.residual);
    }

    #[test]
    fn casimir_eigenvalue_and_equality() {
        let p = qp(1.3);
        let mu = c(0.7321);
        let rep = verma_rep(mu, 20, &p);
        let cl = casimir_left(&rep, &p).unwrap();
        let expected = (p.pow(mu + 1.0) + p.pow(-(mu + 1.0))) / (p.lambda() * p.lambda());
        assert!((cl.entry(0, 0) - expected).norm() < 1e-12);
        for r in 1..20 {
            assert!(cl.entry(r, 0).norm() < 1e-12);
        }
        let r = relations_check(&rep, RelationSet::CasimirEquality, 2, 1e-12, &p).unwrap();
        assert!(r.pass, "casimir residual {}", r.residual);
    }

    #[test]
    fn fundamental_and_findim() {
        let p = qp(1.3);
        let f = fund_rep(&p);
        let e = f.gen("E").unwrap();
        assert!(e.matmul(e).unwrap().is_zero());
        let ef = commutator(e, f.gen("F").unwrap()).unwrap();
        assert_eq!(ef.entry(0, 0), c(1.0));
        assert_eq!(ef.entry(1, 1), c(-1.0));
        let qh = q_cartan_power(f.gen("H").unwrap(), c(1.0), &p);
        let qhm = q_cartan_power(f.gen("H").unwrap(), c(-1.0), &p);
        let rhs = qh.sub(&qhm).unwrap().scale(1.0 / p.lambda());
        assert!(ef.sub(&rhs).unwrap().max_abs() < 1e-14);

        let f2 = findim_rep(2, &p);
        let e = f2.gen("E").unwrap();
        let e3 = e.matmul(e).unwrap().matmul(e).unwrap();
        assert!(e3.max_abs() < 1e-13);
    }

    #[test]
    fn ev_x_images() {
        let p = qp(1.3);
        let rep = verma_rep(c(0.7321), 12, &p);
        let m = borel_map(&BorelMapSpec::new(BorelMapId::EvX, c(0.4)), &rep, &p).unwrap();
        // zero central charge: h0 + h1 = 0
        let sum = m.gen("h0").unwrap().add(m.gen("h1").unwrap()).unwrap();
        assert!(sum.is_zero());
        let r = relations_check(&m, RelationSet::EvaluationDefining, 4, 1e-12, &p).unwrap();
        assert!(r.pass, "ev_x defining residual {}", r.residual);
    }

    #[test]
    fn ev2_plus_kills_e0() {
        let p = qp(1.3);
        let w2 = osc_rep(OscKind::Osc2, 10, &p);
        let m = borel_map(
            &BorelMapSpec::with_mu(BorelMapId::EvPlus(OscKind::Osc2), c(0.4), c(0.7321)),
            &w2,
            &p,
        )
        .unwrap();
        assert!(m.gen("e0").unwrap().is_zero());
        assert!(m.gen("f0").is_err());
    }

    #[test]
    fn tilde_maps_are_mu_negated() {
        let p = qp(1.3);
        let mu = c(0.7321);
        for kind in [OscKind::Osc1, OscKind::Osc2] {
            let w = osc_rep(kind, 10, &p);
            let (te, tf, th) = composite_efh(kind, true, mu, &w, &p).unwrap();
            let (ue, uf, uh) = composite_efh(kind, false, -mu, &w, &p).unwrap();
            assert!(te.sub(&ue).unwrap().max_abs() == 0.0);
            assert!(tf.sub(&uf).unwrap().max_abs() == 0.0);
            assert!(th.sub(&uh).unwrap().max_abs() == 0.0);
        }
    }

    #[test]
    fn composite_triples_satisfy_sl2() {
        let p = qp(1.3);
        let mu = c(0.7321);
        for kind in [OscKind::Osc1, OscKind::Osc2] {
            for tilde in [false, true] {
                let w = osc_rep(kind, 16, &p);
                let (e, f, h) = composite_efh(kind, tilde, mu, &w, &p).unwrap();
                let mut gens = BTreeMap::new();
                gens.insert("E".into(), e);
                gens.insert("F".into(), f);
                gens.insert("H".into(), h);
                let handle = RepHandle {
                    space: w.space.clone(),
                    gens,
                    params: w.params,
                    name: format!("composite-{kind}-tilde{tilde}"),
                };
                let r = relations_check(&handle, RelationSet::Sl2Defining, 2, 1e-12, &p).unwrap();
                assert!(r.pass, "{kind} tilde={tilde}: residual {}", r.residual);
            }
        }
    }

    #[test]
    fn serre_under_rho_maps() {
        let p = qp(1.3);
        for kind in [OscKind::Osc1, OscKind::Osc2] {
            let w = osc_rep(kind, 20, &p);
            let plus =
                borel_map(&BorelMapSpec::new(BorelMapId::RhoPlus(kind), c(0.7)), &w, &p).unwrap();
            let r = relations_check(&plus, RelationSet::BorelSerre, 4, 1e-12, &p).unwrap();
            assert!(r.pass, "rho{}+ serre residual {}", kind.index(), r.residual);
            let r = relations_check(&plus, RelationSet::BorelCartan, 2, 1e-12, &p).unwrap();
            assert!(r.pass, "rho{}+ cartan residual {}", kind.index(), r.residual);
            let minus =
                borel_map(&BorelMapSpec::new(BorelMapId::RhoMinus(kind), c(0.7)), &w, &p).unwrap();
            let r = relations_check(&minus, RelationSet::BorelSerre, 4, 1e-12, &p).unwrap();
            assert!(r.pass, "rho{}- serre residual {}", kind.index(), r.residual);
        }
    }

    #[test]
    fn margin_requires_room() {
        let p = qp(1.3);
        let rep = osc_rep(OscKind::Osc1, 4, &p);
        assert!(matches!(
            relations_check(&rep, RelationSet::OscDefining, 4, 1e-12, &p),
            Err(RepError::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn contraction_residuals_decrease() {
        let p = qp(1.3);
        let reports = contraction_limit_check(&[10.0, 20.0, 30.0], 10, &p, 1e-6).unwrap();
        for r in &reports {
            assert!(r.residual != STRUCTURAL_FAILURE, "monotone decrease expected: {}", r.notes);
        }
        // H - mu = h exactly; the (0,1) entry of E q^-mu is within 1e-6
        let verma = verma_rep(c(30.0), 10, &p);
        let osc = osc_rep(OscKind::Osc1, 10, &p);
        let h_shift = verma.gen("H").unwrap().add_scalar(c(-30.0));
        for n in 0..10 {
            assert_eq!(h_shift.entry(n, n), osc.gen("h").unwrap().entry(n, n));
        }
        let diff = (verma.gen("E").unwrap().entry(0, 1) * p.powf(-30.0)
            - osc.gen("e").unwrap().entry(0, 1))
        .norm();
        assert!(diff < 1e-6, "entry diff {diff}");
        // at D = 8 the interior window is small enough for the 1e-6 bound
        let reports = contraction_limit_check(&[10.0, 20.0, 30.0], 8, &p, 1e-6).unwrap();
        for r in &reports {
            assert!(r.pass, "{}: residual {} notes {}", r.name, r.residual, r.notes);
        }
    }

    #[test]
    fn undefined_generator_is_an_error() {
        let p = qp(1.3);
        let w1 = osc_rep(OscKind::Osc1, 6, &p);
        let rho =
            borel_map(&BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc1), c(0.3)), &w1, &p)
                .unwrap();
        assert!(matches!(rho.gen("f0"), Err(RepError::UndefinedGenerator { .. })));
        let verma = verma_rep(c(0.5), 6, &p);
        assert!(matches!(
            borel_map(&BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc1), c(0.3)), &verma, &p),
            Err(RepError::KindMismatch { .. })
        ));
        // evaluation maps need mu
        assert!(matches!(
            borel_map(&BorelMapSpec::new(BorelMapId::EvPlus(OscKind::Osc1), c(0.3)), &w1, &p),
            Err(RepError::MissingMu(_))
        ));
    }
}
