//! The q-exponential intertwiner `O = exp_{q^-2}(lambda e1 (x) f2)` on
//! `W_1 (x) W_2`, co-product images of Borel maps, the intertwining-relation
//! checks, the L-operator factorization identity, and the q-Hadamard
//! conjugation suite.
//!
//! `O` preserves total Fock degree `s = n + m`, so it is block-diagonal in
//! `s` and unitriangular inside each block; its inverse is computed block
//! by block (no series truncation enters O^-1). Comparison masks are keyed
//! to total degree for the same reason.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::lops::{assemble_quantum_blocks, build_l, generic_l_blocks, LopsError};
use crate::qnum::{
    exp_q_coeffs, nilpotent_power_series, pochhammer_series_coeffs, series_divide, QParams,
    QnumError, SeriesBudget,
};
use crate::report::{CheckReport, Params, Timer};
use crate::reps::{
    borel_map, composite_efh, merge_maps, osc_rep, q_cartan_power, BorelMapId, BorelMapSpec,
    RepError, RepHandle,
};
use crate::tensor::{
    decompose_index, embed, invert_matrix, residual, IndexMask, Operator, Space, SpaceKind,
    TensorError,
};
use crate::OscKind;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("convergence domain: the Hadamard suite needs |q| < 1, got |q| = {0}")]
    ConvergenceDomain(f64),
    #[error("singular total-degree block s = {degree} while inverting O")]
    SingularBlock { degree: usize },
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Qnum(#[from] QnumError),
    #[error(transparent)]
    Lops(#[from] LopsError),
}

/// The intertwiner with its block-exact inverse.
#[derive(Debug, Clone)]
pub struct OMatrix {
    pub op: Operator,
    pub inv: Operator,
    pub d1: usize,
    pub d2: usize,
    pub q: C64,
}

/// Inverts a total-degree-block-diagonal operator block by block.
fn invert_total_degree_blocks(op: &Operator) -> Result<Operator, FactorError> {
    let spaces = op.spaces().to_vec();
    let dim = op.dim();
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for idx in 0..dim {
        let s: usize = decompose_index(&spaces, idx).iter().sum();
        groups.entry(s).or_default().push(idx);
    }
    let mut out = Operator::zeros(spaces);
    for (s, idxs) in groups {
        let n = idxs.len();
        let mut block = ndarray::Array2::zeros((n, n));
        for (i, &ri) in idxs.iter().enumerate() {
            for (j, &cj) in idxs.iter().enumerate() {
                block[(i, j)] = op.entry(ri, cj);
            }
        }
        let inv = invert_matrix(&block).ok_or(FactorError::SingularBlock { degree: s })?;
        for (i, &ri) in idxs.iter().enumerate() {
            for (j, &cj) in idxs.iter().enumerate() {
                out.set_entry(ri, cj, inv[(i, j)]);
            }
        }
    }
    Ok(out)
}

fn build_o_from(
    n_op: &Operator,
    d1: usize,
    d2: usize,
    p: &QParams,
) -> Result<OMatrix, FactorError> {
    let len = d1.min(d2) + 1;
    let coeffs = exp_q_coeffs(p.int_pow(-2), len)?;
    let op = nilpotent_power_series(&coeffs, n_op)?;
    let inv = invert_total_degree_blocks(&op)?;
    Ok(OMatrix { op, inv, d1, d2, q: p.q() })
}

/// `O = exp_{q^-2}(lambda e1 (x) f2)` on `[W1(d1), W2(d2)]`.
pub fn build_o(d1: usize, d2: usize, p: &QParams) -> Result<OMatrix, FactorError> {
    let w1 = osc_rep(OscKind::Osc1, d1, p);
    let w2 = osc_rep(OscKind::Osc2, d2, p);
    let n_op = w1.gen("e")?.kron(w2.gen("f")?)?.scale(p.lambda());
    build_o_from(&n_op, d1, d2, p)
}

/// The same intertwiner acting on the swapped ordering `[W2(d2), W1(d1)]`
/// (`O_21`: slot-1 content on the second leg).
pub fn build_o_opposite(d2: usize, d1: usize, p: &QParams) -> Result<OMatrix, FactorError> {
    let w1 = osc_rep(OscKind::Osc1, d1, p);
    let w2 = osc_rep(OscKind::Osc2, d2, p);
    let n_op = w2.gen("f")?.kron(w1.gen("e")?)?.scale(p.lambda());
    build_o_from(&n_op, d1, d2, p)
}

/// Pushes the co-product of one affine generator through a pair of maps:
/// `D(e_i) = e_i (x) 1 + q^{-h_i} (x) e_i`,
/// `D(f_i) = f_i (x) q^{h_i} + 1 (x) f_i`,
/// `D(h_i) = h_i (x) 1 + 1 (x) h_i`.
pub fn coproduct_image(
    first: &RepHandle,
    second: &RepHandle,
    gen: &str,
    p: &QParams,
) -> Result<Operator, FactorError> {
    let kind = gen.chars().next().unwrap_or('?');
    let idx = &gen[1..];
    let h_name = format!("h{idx}");
    let id1 = Operator::identity(vec![first.space.clone()]);
    let id2 = Operator::identity(vec![second.space.clone()]);
    let out = match kind {
        'e' => {
            let qh = q_cartan_power(first.gen(&h_name)?, C64::new(-1.0, 0.0), p);
            first.gen(gen)?.kron(&id2)?.add(&qh.kron(second.gen(gen)?)?)?
        }
        'f' => {
            let qh = q_cartan_power(second.gen(&h_name)?, C64::new(1.0, 0.0), p);
            first.gen(gen)?.kron(&qh)?.add(&id1.kron(second.gen(gen)?)?)?
        }
        'h' => first.gen(gen)?.kron(&id2)?.add(&id1.kron(second.gen(gen)?)?)?,
        _ => {
            return Err(FactorError::Rep(RepError::UndefinedGenerator {
                map: format!("{}(x){}", first.name, second.name),
                gen: gen.to_string(),
            }))
        }
    };
    Ok(out)
}

/// Which intertwining relation to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntertwinerVariant {
    /// `O^-1 (rho1_{xq^mu} (x) rho2_{xq^-mu}) D(a) O = (ev1_x (x) ev2_x) D(a)`
    /// for the B+ generators.
    BorelPlus,
    /// The same relation for the B- generators and evaluation maps.
    BorelMinus,
    /// The swapped-ordering relation on `W2 (x) W1` with the extra diagonal
    /// conjugation `q^{-mu(1 (x) h1 - h2 (x) 1)/2}`, against the tilde maps.
    OppositeOrder,
}

impl IntertwinerVariant {
    pub fn name(&self) -> &'static str {
        match self {
            IntertwinerVariant::BorelPlus => "bplus",
            IntertwinerVariant::BorelMinus => "bminus",
            IntertwinerVariant::OppositeOrder => "opposite",
        }
    }

    fn generators(&self) -> &'static [&'static str] {
        match self {
            IntertwinerVariant::BorelPlus => &["e0", "e1", "h0", "h1"],
            IntertwinerVariant::BorelMinus => &["f0", "f1", "h0", "h1"],
            IntertwinerVariant::OppositeOrder => &["e0", "e1", "f0", "f1", "h0", "h1"],
        }
    }
}

/// Runs one intertwining-relation variant, one report per generator.
pub fn intertwiner_check(
    variant: IntertwinerVariant,
    mu: C64,
    x: C64,
    d: usize,
    p: &QParams,
    tol: f64,
) -> Result<Vec<CheckReport>, FactorError> {
    if d < 6 {
        return Err(FactorError::Rep(RepError::CutoffTooSmall { d, margin: 3, needed: 6 }));
    }
    let w1 = osc_rep(OscKind::Osc1, d, p);
    let w2 = osc_rep(OscKind::Osc2, d, p);
    let x_plus = x * p.pow(mu);
    let x_minus = x * p.pow(-mu);
    let s_max = d.saturating_sub(3);

    // (first, second) handles for the LHS and RHS maps, the O to conjugate
    // with, and an optional extra diagonal conjugator
    let (lhs1, lhs2, rhs1, rhs2, o, conj): (
        RepHandle,
        RepHandle,
        RepHandle,
        RepHandle,
        OMatrix,
        Option<Operator>,
    ) = match variant {
        IntertwinerVariant::BorelPlus => (
            borel_map(&BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc1), x_plus), &w1, p)?,
            borel_map(&BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc2), x_minus), &w2, p)?,
            borel_map(&BorelMapSpec::with_mu(BorelMapId::EvPlus(OscKind::Osc1), x, mu), &w1, p)?,
            borel_map(&BorelMapSpec::with_mu(BorelMapId::EvPlus(OscKind::Osc2), x, mu), &w2, p)?,
            build_o(d, d, p)?,
            None,
        ),
        IntertwinerVariant::BorelMinus => (
            borel_map(&BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc1), x_plus), &w1, p)?,
            borel_map(&BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc2), x_minus), &w2, p)?,
            borel_map(&BorelMapSpec::with_mu(BorelMapId::EvMinus(OscKind::Osc1), x, mu), &w1, p)?,
            borel_map(&BorelMapSpec::with_mu(BorelMapId::EvMinus(OscKind::Osc2), x, mu), &w2, p)?,
            build_o(d, d, p)?,
            None,
        ),
        IntertwinerVariant::OppositeOrder => {
            let lhs_w2 = merge_maps(
                &borel_map(
                    &BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc2), x_minus),
                    &w2,
                    p,
                )?,
                &borel_map(
                    &BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc2), x_minus),
                    &w2,
                    p,
                )?,
            )?;
            let lhs_w1 = merge_maps(
                &borel_map(&BorelMapSpec::new(BorelMapId::RhoPlus(OscKind::Osc1), x_plus), &w1, p)?,
                &borel_map(
                    &BorelMapSpec::new(BorelMapId::RhoMinus(OscKind::Osc1), x_plus),
                    &w1,
                    p,
                )?,
            )?;
            let half_mu = mu * 0.5;
            let g = q_cartan_power(w2.gen("h")?, half_mu, p).kron(&q_cartan_power(
                w1.gen("h")?,
                -half_mu,
                p,
            ))?;
            (
                lhs_w2,
                lhs_w1,
                borel_map(
                    &BorelMapSpec::with_mu(BorelMapId::EvTilde(OscKind::Osc2), x, mu),
                    &w2,
                    p,
                )?,
                borel_map(
                    &BorelMapSpec::with_mu(BorelMapId::EvTilde(OscKind::Osc1), x, mu),
                    &w1,
                    p,
                )?,
                build_o_opposite(d, d, p)?,
                Some(g),
            )
        }
    };

    let labels: Vec<&str> = vec![&lhs1.space.label, &lhs2.space.label];
    let mask = IndexMask::total_degree(&labels, s_max);
    let conj_inv = conj.as_ref().map(|g| {
        let mut inv = g.clone();
        for i in 0..g.dim() {
            inv.set_entry(i, i, 1.0 / g.entry(i, i));
        }
        inv
    });

    let mut out = Vec::new();
    for gen in variant.generators() {
        let timer = Timer::start();
        let img = coproduct_image(&lhs1, &lhs2, gen, p)?;
        let img = match (&conj, &conj_inv) {
            (Some(g), Some(gi)) => g.matmul(&img)?.matmul(gi)?,
            _ => img,
        };
        let lhs = o.inv.matmul(&img)?.matmul(&o.op)?;
        let rhs = coproduct_image(&rhs1, &rhs2, gen, p)?;
        let r = residual(&lhs, &rhs, &mask)?;
        let params = Params::new()
            .c64("q", p.q())
            .c64("mu", mu)
            .c64("x", x)
            .usize("D", d)
            .str("gen", gen)
            .build();
        out.push(CheckReport::new(
            format!("intertwiner/{}/{}", variant.name(), gen),
            params,
            r,
            tol,
            format!("s<={s_max}"),
            "",
            timer.ms(),
        ));
    }
    Ok(out)
}

/// The L-operator factorization:
/// `O12^-1 L1_13(x q^mu) L2_23(x q^-mu) O12` equals the product of the
/// generic L built from `(E_1, F_1, H_1)` at `x`, the unipotent factor
/// `[[1, 0], [lambda x e2, 1]]`, and `diag(q^{(h2-mu)/2}, q^{-(h2-mu)/2})`.
/// Compared over columns with total degree `s <= s_max` (default `D - 4`).
pub fn l_factorization_check(
    mu: C64,
    x: C64,
    d: usize,
    p: &QParams,
    tol: f64,
    s_max: Option<usize>,
) -> Result<CheckReport, FactorError> {
    let timer = Timer::start();
    let w1 = osc_rep(OscKind::Osc1, d, p);
    let w2 = osc_rep(OscKind::Osc2, d, p);
    let quantum = Space::new("q", 2, SpaceKind::Fundamental);
    let legs = vec![w1.space.clone(), w2.space.clone(), quantum.clone()];

    let l1 = embed(&build_l(&w1, x * p.pow(mu), p)?.op, &legs)?;
    let l2 = embed(&build_l(&w2, x * p.pow(-mu), p)?.op, &legs)?;
    let o = build_o(d, d, p)?;
    let o_emb = embed(&o.op, &legs)?;
    let o_inv = embed(&o.inv, &legs)?;
    let lhs = o_inv.matmul(&l1)?.matmul(&l2)?.matmul(&o_emb)?;

    let (e1, f1, h1) = composite_efh(OscKind::Osc1, false, mu, &w1, p)?;
    let m1 = embed(
        &assemble_quantum_blocks(&generic_l_blocks(&e1, &f1, &h1, x, p)?, quantum.clone()),
        &legs,
    )?;
    let id2 = Operator::identity(vec![w2.space.clone()]);
    let zero2 = Operator::zeros(vec![w2.space.clone()]);
    let m2 = embed(
        &assemble_quantum_blocks(
            &[[id2.clone(), zero2.clone()], [w2.gen("e")?.scale(p.lambda() * x), id2.clone()]],
            quantum.clone(),
        ),
        &legs,
    )?;
    let h2_shift = w2.gen("h")?.add_scalar(-mu);
    let half = C64::new(0.5, 0.0);
    let m3 = embed(
        &assemble_quantum_blocks(
            &[
                [q_cartan_power(&h2_shift, half, p), zero2.clone()],
                [zero2, q_cartan_power(&h2_shift, -half, p)],
            ],
            quantum,
        ),
        &legs,
    )?;
    let rhs = m1.matmul(&m2)?.matmul(&m3)?;

    let s_max = s_max.unwrap_or_else(|| d.saturating_sub(4));
    let mask = IndexMask::total_degree(&["W1", "W2"], s_max);
    let r = residual(&lhs, &rhs, &mask)?;
    let params = Params::new().c64("q", p.q()).c64("mu", mu).c64("x", x).usize("D", d).build();
    Ok(CheckReport::new(
        "factorization/l-operator",
        params,
        r,
        tol,
        format!("s<={s_max}"),
        "",
        timer.ms(),
    ))
}

/// The conjugation identities of the q-Hadamard suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HadamardId {
    /// `O^-1 e1 O = e1`
    E1Conj,
    /// `O^-1 e2 O = e2 - (1 - q lambda^2 e1 f2)^-1 e1 q^{-h2}`
    E2Conj,
    /// `O^-1 f1 O = f1 - (1 - q lambda^2 e1 f2)^-1 f2 q^{h1}`
    F1Conj,
    /// `O^-1 f2 O = f2`
    F2Conj,
    /// `O^-1 q^{a h1} O = [(q^{2a+1} L; q^2)_inf / (q L; q^2)_inf] q^{a h1}`
    /// with `L = lambda^2 e1 f2`
    H1Conj,
    /// `O^-1 q^{a h2} O = [(q^{-2a+1} L; q^2)_inf / (q L; q^2)_inf] q^{a h2}`
    H2Conj,
    /// `O^-1 q^{a(h1+h2)} O = q^{a(h1+h2)}`
    HSumConj,
    /// `O^-1 q^{+-(h1-h2)/2} O = (1 - q^{+-1} L)^{-+1} q^{+-(h1-h2)/2}`
    HDiffConj,
    /// `O e2 O^-1 = e2 + e1 q^{-h2}`
    E2Inv,
    /// `O f1 O^-1 = f1 + f2 q^{h1}`
    F1Inv,
    /// `O q^{a h1} O^-1 = [(q^{2a-1} L; q^-2)_inf / (q^-1 L; q^-2)_inf] q^{a h1}`
    H1Inv,
    /// `O q^{a h2} O^-1 = [(q^{-2a-1} L; q^-2)_inf / (q^-1 L; q^-2)_inf] q^{a h2}`
    H2Inv,
}

impl HadamardId {
    pub fn all() -> [HadamardId; 12] {
        use HadamardId::*;
        [
            E1Conj, E2Conj, F1Conj, F2Conj, H1Conj, H2Conj, HSumConj, HDiffConj, E2Inv, F1Inv,
            H1Inv, H2Inv,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            HadamardId::E1Conj => "e1-forward",
            HadamardId::E2Conj => "e2-forward",
            HadamardId::F1Conj => "f1-forward",
            HadamardId::F2Conj => "f2-forward",
            HadamardId::H1Conj => "h1-forward",
            HadamardId::H2Conj => "h2-forward",
            HadamardId::HSumConj => "h-sum",
            HadamardId::HDiffConj => "h-diff",
            HadamardId::E2Inv => "e2-inverse",
            HadamardId::F1Inv => "f1-inverse",
            HadamardId::H1Inv => "h1-inverse",
            HadamardId::H2Inv => "h2-inverse",
        }
    }

    pub fn uses_alpha(&self) -> bool {
        matches!(
            self,
            HadamardId::H1Conj
                | HadamardId::H2Conj
                | HadamardId::HSumConj
                | HadamardId::H1Inv
                | HadamardId::H2Inv
        )
    }
}

/// `W_1` in the rescaled Fock basis `v_n -> q^{n^2} v_n`. The rescaling is
/// a diagonal similarity, so every identity checked in it is equivalent;
/// in this basis the `q^-2`-binomial entries of O and the `e1` matrix stay
/// bounded for |q| < 1 instead of growing like `q^{-2k(n-k)}`.
fn rescaled_osc1(d: usize, p: &QParams) -> RepHandle {
    let mut w1 = osc_rep(OscKind::Osc1, d, p);
    for op in w1.gens.values_mut() {
        for r in 0..d {
            for c in 0..d {
                if r == c {
                    continue;
                }
                let v = op.entry(r, c);
                if v.re != 0.0 || v.im != 0.0 {
                    let expo = (c * c) as i64 - (r * r) as i64;
                    op.set_entry(r, c, v * p.powf(expo as f64));
                }
            }
        }
    }
    w1
}

struct HadamardCtx {
    w1: RepHandle,
    w2: RepHandle,
    o: OMatrix,
    t_op: Operator,
    d: usize,
}

impl HadamardCtx {
    fn new(d: usize, p: &QParams, b: &SeriesBudget) -> Result<Self, FactorError> {
        if p.q().norm() >= 1.0 {
            return Err(FactorError::ConvergenceDomain(p.q().norm()));
        }
        if d + 1 > b.max_terms {
            return Err(FactorError::Qnum(QnumError::InsufficientCoefficients {
                needed: d + 1,
                got: b.max_terms,
            }));
        }
        let w1 = rescaled_osc1(d, p);
        let w2 = osc_rep(OscKind::Osc2, d, p);
        let n_op = w1.gen("e")?.kron(w2.gen("f")?)?.scale(p.lambda());
        let o = build_o_from(&n_op, d, d, p)?;
        let t_op = w1.gen("e")?.kron(w2.gen("f")?)?;
        Ok(Self { w1, w2, o, t_op, d })
    }

    fn on1(&self, op: &Operator) -> Result<Operator, FactorError> {
        Ok(op.kron(&Operator::identity(vec![self.w2.space.clone()]))?)
    }

    fn on2(&self, op: &Operator) -> Result<Operator, FactorError> {
        Ok(Operator::identity(vec![self.w1.space.clone()]).kron(op)?)
    }

    /// `(1 - c T)^-1 = sum_j c^j T^j` on the nilpotent `T`.
    fn resolvent(&self, c: C64) -> Result<Operator, FactorError> {
        let mut coeffs = Vec::with_capacity(self.d + 1);
        let mut acc = C64::new(1.0, 0.0);
        for _ in 0..=self.d {
            coeffs.push(acc);
            acc *= c;
        }
        Ok(nilpotent_power_series(&coeffs, &self.t_op)?)
    }

    /// `(c_num t; base)_inf / (c_den t; base)_inf` applied to `T`.
    fn poch_ratio(&self, c_num: C64, c_den: C64, base: C64) -> Result<Operator, FactorError> {
        let len = self.d + 1;
        let num = pochhammer_series_coeffs(c_num, base, len);
        let den = pochhammer_series_coeffs(c_den, base, len);
        let ratio = series_divide(&num, &den)?;
        Ok(nilpotent_power_series(&ratio, &self.t_op)?)
    }
}

/// Checks one Hadamard identity at the given `alpha`; requires `|q| < 1`
/// (the convergence domain of the Pochhammer-ratio scalar series).
pub fn hadamard_check(
    id: HadamardId,
    alpha: C64,
    d: usize,
    p: &QParams,
    b: &SeriesBudget,
    tol: f64,
) -> Result<CheckReport, FactorError> {
    let timer = Timer::start();
    let ctx = HadamardCtx::new(d, p, b)?;
    let lam2 = p.lambda() * p.lambda();
    let q = p.q();
    let minus_one = C64::new(-1.0, 0.0);
    let half = C64::new(0.5, 0.0);

    let forward = |x: &Operator| -> Result<Operator, FactorError> {
        Ok(ctx.o.inv.matmul(x)?.matmul(&ctx.o.op)?)
    };
    let backward = |x: &Operator| -> Result<Operator, FactorError> {
        Ok(ctx.o.op.matmul(x)?.matmul(&ctx.o.inv)?)
    };

    // (lhs, rhs) pairs; HDiffConj contributes both signs
    let mut sides: Vec<(Operator, Operator)> = Vec::new();
    match id {
        HadamardId::E1Conj => {
            let x = ctx.on1(ctx.w1.gen("e")?)?;
            sides.push((forward(&x)?, x));
        }
        HadamardId::F2Conj => {
            let x = ctx.on2(ctx.w2.gen("f")?)?;
            sides.push((forward(&x)?, x));
        }
        HadamardId::E2Conj => {
            let x = ctx.on2(ctx.w2.gen("e")?)?;
            let tail = ctx.resolvent(q * lam2)?.matmul(
                &ctx.w1.gen("e")?.kron(&q_cartan_power(ctx.w2.gen("h")?, minus_one, p))?,
            )?;
            sides.push((forward(&x)?, x.sub(&tail)?));
        }
        HadamardId::F1Conj => {
            let x = ctx.on1(ctx.w1.gen("f")?)?;
            let tail = ctx.resolvent(q * lam2)?.matmul(
                &q_cartan_power(ctx.w1.gen("h")?, C64::new(1.0, 0.0), p).kron(ctx.w2.gen("f")?)?,
            )?;
            sides.push((forward(&x)?, x.sub(&tail)?));
        }
        HadamardId::H1Conj => {
            let x = ctx.on1(&q_cartan_power(ctx.w1.gen("h")?, alpha, p))?;
            let ratio = ctx.poch_ratio(p.pow(alpha * 2.0 + 1.0) * lam2, q * lam2, p.int_pow(2))?;
            sides.push((forward(&x)?, ratio.matmul(&x)?));
        }
        HadamardId::H2Conj => {
            let x = ctx.on2(&q_cartan_power(ctx.w2.gen("h")?, alpha, p))?;
            let ratio = ctx.poch_ratio(p.pow(-alpha * 2.0 + 1.0) * lam2, q * lam2, p.int_pow(2))?;
            sides.push((forward(&x)?, ratio.matmul(&x)?));
        }
        HadamardId::HSumConj => {
            let x = q_cartan_power(ctx.w1.gen("h")?, alpha, p).kron(&q_cartan_power(
                ctx.w2.gen("h")?,
                alpha,
                p,
            ))?;
            sides.push((forward(&x)?, x));
        }
        HadamardId::HDiffConj => {
            for sign in [1.0f64, -1.0] {
                let s = C64::new(sign, 0.0);
                let x = q_cartan_power(ctx.w1.gen("h")?, s * half, p).kron(&q_cartan_power(
                    ctx.w2.gen("h")?,
                    -s * half,
                    p,
                ))?;
                let factor = if sign > 0.0 {
                    ctx.resolvent(q * lam2)?
                } else {
                    // (1 - q^-1 L)^{+1}
                    Operator::identity(ctx.t_op.spaces().to_vec()).sub(&ctx.t_op.scale(lam2 / q))?
                };
                sides.push((forward(&x)?, factor.matmul(&x)?));
            }
        }
        HadamardId::E2Inv => {
            let x = ctx.on2(ctx.w2.gen("e")?)?;
            let tail = ctx.w1.gen("e")?.kron(&q_cartan_power(ctx.w2.gen("h")?, minus_one, p))?;
            sides.push((backward(&x)?, x.add(&tail)?));
        }
        HadamardId::F1Inv => {
            let x = ctx.on1(ctx.w1.gen("f")?)?;
            let tail =
                q_cartan_power(ctx.w1.gen("h")?, C64::new(1.0, 0.0), p).kron(ctx.w2.gen("f")?)?;
            sides.push((backward(&x)?, x.add(&tail)?));
        }
        HadamardId::H1Inv => {
            let x = ctx.on1(&q_cartan_power(ctx.w1.gen("h")?, alpha, p))?;
            let ratio = ctx.poch_ratio(p.pow(alpha * 2.0 - 1.0) * lam2, lam2 / q, p.int_pow(-2))?;
            sides.push((backward(&x)?, ratio.matmul(&x)?));
        }
        HadamardId::H2Inv => {
            let x = ctx.on2(&q_cartan_power(ctx.w2.gen("h")?, alpha, p))?;
            let ratio =
                ctx.poch_ratio(p.pow(-alpha * 2.0 - 1.0) * lam2, lam2 / q, p.int_pow(-2))?;
            sides.push((backward(&x)?, ratio.matmul(&x)?));
        }
    }

    let s_max = d.saturating_sub(2);
    let mask = IndexMask::total_degree(&["W1", "W2"], s_max);
    let mut worst = 0.0f64;
    for (lhs, rhs) in &sides {
        worst = worst.max(residual(lhs, rhs, &mask)?);
    }
    let mut params = Params::new().c64("q", p.q()).usize("D", d);
    if id.uses_alpha() {
        params = params.c64("alpha", alpha);
    }
    Ok(CheckReport::new(
        format!("hadamard/{}", id.name()),
        params.build(),
        worst,
        tol,
        format!("s<={s_max}"),
        "",
        timer.ms(),
    ))
}

/// Forward-then-inverse composition: pushing `e2` (resp. `f1`) through the
/// forward series form and conjugating back must return the original
/// generator.
pub fn hadamard_roundtrip_check(
    d: usize,
    p: &QParams,
    b: &SeriesBudget,
    tol: f64,
) -> Result<CheckReport, FactorError> {
    let timer = Timer::start();
    let ctx = HadamardCtx::new(d, p, b)?;
    let lam2 = p.lambda() * p.lambda();
    let minus_one = C64::new(-1.0, 0.0);
    let s_max = d.saturating_sub(2);
    let mask = IndexMask::total_degree(&["W1", "W2"], s_max);

    let e2 = ctx.on2(ctx.w2.gen("e")?)?;
    let fwd_e2 = e2.sub(
        &ctx.resolvent(p.q() * lam2)?.matmul(&ctx.w1.gen("e")?.kron(&q_cartan_power(
            ctx.w2.gen("h")?,
            minus_one,
            p,
        ))?)?,
    )?;
    let back_e2 = ctx.o.op.matmul(&fwd_e2)?.matmul(&ctx.o.inv)?;
    let mut worst = residual(&back_e2, &e2, &mask)?;

    let f1 = ctx.on1(ctx.w1.gen("f")?)?;
    let fwd_f1 = f1.sub(&ctx.resolvent(p.q() * lam2)?.matmul(
        &q_cartan_power(ctx.w1.gen("h")?, C64::new(1.0, 0.0), p).kron(ctx.w2.gen("f")?)?,
    )?)?;
    let back_f1 = ctx.o.op.matmul(&fwd_f1)?.matmul(&ctx.o.inv)?;
    worst = worst.max(residual(&back_f1, &f1, &mask)?);

    let params = Params::new().c64("q", p.q()).usize("D", d).build();
    Ok(CheckReport::new(
        "hadamard/roundtrip",
        params,
        worst,
        tol,
        format!("s<={s_max}"),
        "forward series conjugated back to e2 and f1",
        timer.ms(),
    ))
}
