//! Scalar q-arithmetic kernel.
//!
//! Conventions:
//!
//! - `[n]_q = (q^n - q^-n)/(q - q^-1)` (symmetric q-number),
//! - `(k)_b = (1 - b^k)/(1 - b)` (bracket number in base `b`, e.g. `b = q^-2`),
//! - `binom(n, k)_b = (n)_b! / ((k)_b! (n-k)_b!)`,
//! - `exp_b(x) = 1 + sum_{k>=1} x^k / (k)_b!`,
//! - `phi(x) = exp(sum_{k>=1} -C_k/(1+q^{2k}) x^k/k)` with the Verma
//!   eigenvalue `C_k = q^{(mu+1)k} + q^{-(mu+1)k}`, and `phi_i` with `C_k`
//!   replaced by `q^{+-k}`.
//!
//! Power series of locally nilpotent operators (q-exponentials,
//! q-Pochhammer ratios, resolvents) all run through
//! [`nilpotent_power_series`], which terminates exactly at the nilpotency
//! index instead of truncating.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::tensor::Operator;

#[derive(Debug, Error)]
pub enum QnumError {
    #[error("invalid q = {q}: {reason}")]
    InvalidQ { q: C64, reason: String },
    #[error("degenerate base (|base - 1| below working precision)")]
    DegenerateBase,
    #[error("series divergence: terms stopped decaying at k = {k}")]
    SeriesDivergence { k: usize },
    #[error("insufficient coefficients: series needs {needed} terms, got {got}")]
    InsufficientCoefficients { needed: usize, got: usize },
}

/// Deformation parameter and the cached `lambda = q - q^-1`.
///
/// Construction rejects q = 0 and anything within 1e-6 of a root of unity
/// of order <= 64; all specializations in this crate assume generic q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: C64,
    lambda: C64,
}

impl QParams {
    pub fn new(q: C64) -> Result<Self, QnumError> {
        if q.norm() == 0.0 {
            return Err(QnumError::InvalidQ { q, reason: "q must be nonzero".into() });
        }
        let mut p = C64::new(1.0, 0.0);
        for k in 1..=64u32 {
            p *= q;
            if !p.is_finite() {
                break;
            }
            if (p - 1.0).norm() <= 1e-6 {
                return Err(QnumError::InvalidQ {
                    q,
                    reason: format!("within 1e-6 of a root of unity (q^{k} ~ 1)"),
                });
            }
        }
        Ok(Self { q, lambda: q - 1.0 / q })
    }

    pub fn real(q: f64) -> Result<Self, QnumError> {
        Self::new(C64::new(q, 0.0))
    }

    pub fn q(&self) -> C64 {
        self.q
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    /// q^n for integer n.
    pub fn int_pow(&self, n: i64) -> C64 {
        self.q.powi(n as i32)
    }

    /// q^a with the principal branch of log.
    pub fn pow(&self, a: C64) -> C64 {
        (self.q.ln() * a).exp()
    }

    pub fn powf(&self, a: f64) -> C64 {
        self.pow(C64::new(a, 0.0))
    }

    pub fn is_positive_real(&self) -> bool {
        self.q.im == 0.0 && self.q.re > 0.0
    }

    /// Parameters for q^-1 (swaps the two oscillator algebras).
    pub fn inverted(&self) -> Result<Self, QnumError> {
        Self::new(1.0 / self.q)
    }
}

/// Truncation policy for the scalar series in this module.
#[derive(Debug, Clone, Copy)]
pub struct SeriesBudget {
    pub max_terms: usize,
    pub tail_tol: f64,
}

impl Default for SeriesBudget {
    fn default() -> Self {
        Self { max_terms: 200, tail_tol: 1e-16 }
    }
}

/// Which stop rule fired when a series was summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStop {
    TailTolerance,
    MaxTerms,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesEval {
    pub value: C64,
    pub stop: SeriesStop,
    pub terms_used: usize,
}

/// `[n]_q`; exactly 0 for n = 0.
pub fn q_number(n: i64, p: &QParams) -> C64 {
    if n == 0 {
        return C64::new(0.0, 0.0);
    }
    (p.int_pow(n) - p.int_pow(-n)) / p.lambda
}

/// `(k)_base = (1 - base^k)/(1 - base)`; 0 for k = 0.
pub fn q_int(k: u32, base: C64) -> Result<C64, QnumError> {
    if (base - 1.0).norm() <= 1e-12 {
        return Err(QnumError::DegenerateBase);
    }
    if k == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok((1.0 - base.powi(k as i32)) / (1.0 - base))
}

/// `(k)_base!`.
pub fn q_factorial(k: u32, base: C64) -> Result<C64, QnumError> {
    let mut acc = C64::new(1.0, 0.0);
    for i in 1..=k {
        acc *= q_int(i, base)?;
    }
    Ok(acc)
}

/// Gaussian binomial `binom(n, k)_base`, by the multiplicative recurrence
/// `prod_{i=1..k} (1 - base^{n-k+i})/(1 - base^i)`; 0 outside 0 <= k <= n.
pub fn q_binomial(n: u32, k: i64, base: C64) -> Result<C64, QnumError> {
    if k < 0 || k > n as i64 {
        return Ok(C64::new(0.0, 0.0));
    }
    let k = k as u32;
    if k == 0 || k == n {
        return Ok(C64::new(1.0, 0.0));
    }
    if (base - 1.0).norm() <= 1e-12 {
        return Err(QnumError::DegenerateBase);
    }
    let mut acc = C64::new(1.0, 0.0);
    for i in 1..=k {
        acc *= (1.0 - base.powi((n - k + i) as i32)) / (1.0 - base.powi(i as i32));
    }
    Ok(acc)
}

/// Coefficient list `[1, 1/(1)_b!, 1/(2)_b!, ...]` of `exp_b`.
pub fn exp_q_coeffs(base: C64, len: usize) -> Result<Vec<C64>, QnumError> {
    let mut out = Vec::with_capacity(len);
    let mut c = C64::new(1.0, 0.0);
    out.push(c);
    for k in 1..len as u32 {
        c /= q_int(k, base)?;
        out.push(c);
    }
    Ok(out)
}

fn exp_of_series<F: FnMut(usize) -> C64>(
    mut term: F,
    b: &SeriesBudget,
) -> Result<SeriesEval, QnumError> {
    let mut sum = C64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut grow_run = 0usize;
    let mut grow_start = 0usize;
    let mut stop = SeriesStop::MaxTerms;
    let mut used = b.max_terms;
    for k in 1..=b.max_terms {
        let t = term(k);
        let m = t.norm();
        sum += t;
        if m < b.tail_tol {
            stop = SeriesStop::TailTolerance;
            used = k;
            break;
        }
        if m >= prev {
            if grow_run == 0 {
                grow_start = k;
            }
            grow_run += 1;
            // three consecutive growing terms: the exponent series is not
            // decaying under this budget
            if grow_run >= 3 {
                return Err(QnumError::SeriesDivergence { k: grow_start });
            }
        } else {
            grow_run = 0;
        }
        prev = m;
    }
    Ok(SeriesEval { value: sum.exp(), stop, terms_used: used })
}

/// `phi(x)` evaluated on the Verma module with highest weight `mu`:
/// `exp(sum_k -(q^{(mu+1)k} + q^{-(mu+1)k})/(1+q^{2k}) x^k/k)`.
pub fn phi_series_eval(
    x: C64,
    mu: C64,
    p: &QParams,
    b: &SeriesBudget,
) -> Result<SeriesEval, QnumError> {
    let mut xp = C64::new(1.0, 0.0);
    exp_of_series(
        |k| {
            xp *= x;
            let kc = C64::new(k as f64, 0.0);
            let ck = p.pow((mu + 1.0) * kc) + p.pow(-(mu + 1.0) * kc);
            -ck / (1.0 + p.int_pow(2 * k as i64)) * xp / kc
        },
        b,
    )
}

pub fn phi_series(x: C64, mu: C64, p: &QParams, b: &SeriesBudget) -> Result<C64, QnumError> {
    Ok(phi_series_eval(x, mu, p, b)?.value)
}

/// `phi^(1)` or `phi^(2)`: `C_k` replaced by `q^k` resp. `q^-k`.
pub fn phi_i_series_eval(
    kind: crate::OscKind,
    x: C64,
    p: &QParams,
    b: &SeriesBudget,
) -> Result<SeriesEval, QnumError> {
    let sign: i64 = match kind {
        crate::OscKind::Osc1 => 1,
        crate::OscKind::Osc2 => -1,
    };
    let mut xp = C64::new(1.0, 0.0);
    exp_of_series(
        |k| {
            xp *= x;
            let kc = C64::new(k as f64, 0.0);
            -p.int_pow(sign * k as i64) / (1.0 + p.int_pow(2 * k as i64)) * xp / kc
        },
        b,
    )
}

pub fn phi_i_series(
    kind: crate::OscKind,
    x: C64,
    p: &QParams,
    b: &SeriesBudget,
) -> Result<C64, QnumError> {
    Ok(phi_i_series_eval(kind, x, p, b)?.value)
}

/// `sum_k coeffs[k] N^k` for a strictly degree-shifting (hence nilpotent)
/// operator `N`; the sum stops exactly when `N^k = 0`, so the result has no
/// truncation error. Errors if `coeffs` runs out before nilpotency.
pub fn nilpotent_power_series(coeffs: &[C64], n_op: &Operator) -> Result<Operator, QnumError> {
    if coeffs.is_empty() {
        return Err(QnumError::InsufficientCoefficients { needed: 1, got: 0 });
    }
    let mut acc = Operator::identity(n_op.spaces().to_vec()).scale(coeffs[0]);
    let mut power = Operator::identity(n_op.spaces().to_vec());
    for k in 1.. {
        power = power.matmul(n_op).expect("power series operands share one space list");
        if power.is_zero() {
            return Ok(acc);
        }
        if k >= coeffs.len() {
            return Err(QnumError::InsufficientCoefficients { needed: k + 1, got: coeffs.len() });
        }
        acc = acc.add(&power.scale(coeffs[k])).expect("power series operands share one space list");
    }
    unreachable!()
}

/// Taylor coefficients in `t` of the Euler expansion of `(a t; base)_inf`:
/// coefficient of `t^j` is `(-a)^j base^{j(j-1)/2} / (base; base)_j`.
pub fn pochhammer_series_coeffs(a: C64, base: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut c = C64::new(1.0, 0.0);
    out.push(c);
    let mut bpow = C64::new(1.0, 0.0); // base^{j-1}
    for j in 1..len as i32 {
        c *= -a * bpow / (1.0 - base.powi(j));
        bpow *= base;
        out.push(c);
    }
    out
}

/// Coefficients of `num(t)/den(t)` given the coefficient lists of the two
/// series; requires `den[0]` away from zero.
pub fn series_divide(num: &[C64], den: &[C64]) -> Result<Vec<C64>, QnumError> {
    if den.is_empty() || den[0].norm() < 1e-300 {
        return Err(QnumError::DegenerateBase);
    }
    let len = num.len().min(den.len());
    let mut out = vec![C64::new(0.0, 0.0); len];
    for k in 0..len {
        let mut acc = num[k];
        for i in 1..=k {
            acc -= den[i] * out[k - i];
        }
        out[k] = acc / den[0];
    }
    Ok(out)
}
