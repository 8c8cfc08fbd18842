//! Labeled tensor-leg linear algebra on dense complex matrices.
//!
//! An [`Operator`] acts on an ordered list of [`Space`]s; the composite
//! basis index is row-major in the listed order (first space slowest).
//! That convention is binding for the binary dump format as well.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("leg label `{0}` not found")]
    LabelNotFound(String),
    #[error("duplicate leg label `{0}`")]
    DuplicateLabel(String),
    #[error("dimension mismatch on leg `{label}`: expected {expected}, got {got}")]
    DimensionMismatch { label: String, expected: usize, got: usize },
    #[error("operator space lists differ: {0}")]
    SpaceListMismatch(String),
    #[error("operand legs are not an ordered sub-list of the target legs")]
    NotSubList,
    #[error("matrix is {got} x {got}, but the space product is {expected}")]
    MatrixShape { expected: usize, got: usize },
    #[error("index mask selects no columns")]
    EmptyMask,
    #[error("empty operator composition")]
    EmptyComposition,
    #[error("dump format: {0}")]
    DumpFormat(String),
    #[error("dump io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Osc1,
    Osc2,
    Verma,
    Fundamental,
    SpinSite,
}

impl SpaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceKind::Osc1 => "osc1",
            SpaceKind::Osc2 => "osc2",
            SpaceKind::Verma => "verma",
            SpaceKind::Fundamental => "fundamental",
            SpaceKind::SpinSite => "spin_site",
        }
    }
}

/// Representation parameters attached to a leg, recorded for dump sidecars.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpaceParams {
    pub mu: Option<C64>,
    pub x: Option<C64>,
    pub cutoff: Option<usize>,
}

/// One labeled tensor leg.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    pub label: String,
    pub dim: usize,
    pub kind: SpaceKind,
    pub params: SpaceParams,
}

impl Space {
    pub fn new(label: impl Into<String>, dim: usize, kind: SpaceKind) -> Self {
        assert!(dim >= 1, "space dimension must be positive");
        if matches!(kind, SpaceKind::Fundamental | SpaceKind::SpinSite) {
            assert_eq!(dim, 2, "fundamental/spin-site legs are two-dimensional");
        }
        Self { label: label.into(), dim, kind, params: SpaceParams::default() }
    }

    pub fn with_params(mut self, params: SpaceParams) -> Self {
        self.params = params;
        self
    }

    pub fn renamed(&self, label: impl Into<String>) -> Self {
        let mut s = self.clone();
        s.label = label.into();
        s
    }
}

pub fn total_dim(spaces: &[Space]) -> usize {
    spaces.iter().map(|s| s.dim).product()
}

fn check_unique_labels(spaces: &[Space]) -> Result<(), TensorError> {
    for (i, s) in spaces.iter().enumerate() {
        if spaces[i + 1..].iter().any(|t| t.label == s.label) {
            return Err(TensorError::DuplicateLabel(s.label.clone()));
        }
    }
    Ok(())
}

fn strides_of(spaces: &[Space]) -> Vec<usize> {
    let mut strides = vec![1usize; spaces.len()];
    for i in (0..spaces.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * spaces[i + 1].dim;
    }
    strides
}

/// Split a composite row-major index into per-leg indices.
pub fn decompose_index(spaces: &[Space], mut idx: usize) -> Vec<usize> {
    let mut parts = vec![0usize; spaces.len()];
    for i in (0..spaces.len()).rev() {
        parts[i] = idx % spaces[i].dim;
        idx /= spaces[i].dim;
    }
    parts
}

pub fn compose_index(spaces: &[Space], parts: &[usize]) -> usize {
    debug_assert_eq!(spaces.len(), parts.len());
    let mut idx = 0usize;
    for (s, &p) in spaces.iter().zip(parts) {
        debug_assert!(p < s.dim);
        idx = idx * s.dim + p;
    }
    idx
}

/// Predicate on composite basis indices, used to restrict residual
/// comparisons to truncation-safe interior columns.
#[derive(Debug, Clone)]
pub enum IndexMask {
    Full,
    /// Basis index on one leg bounded: `index(label) <= max`.
    LegMax {
        label: String,
        max: usize,
    },
    /// Total degree over the named legs bounded: `sum indices <= max`.
    TotalDegreeMax {
        labels: Vec<String>,
        max: usize,
    },
    /// Explicit composite column indices.
    Columns(Vec<usize>),
    All(Vec<IndexMask>),
}

impl IndexMask {
    pub fn leg_max(label: impl Into<String>, max: usize) -> Self {
        IndexMask::LegMax { label: label.into(), max }
    }

    pub fn total_degree(labels: &[&str], max: usize) -> Self {
        IndexMask::TotalDegreeMax { labels: labels.iter().map(|s| s.to_string()).collect(), max }
    }

    fn selects(&self, spaces: &[Space], parts: &[usize]) -> Result<bool, TensorError> {
        match self {
            IndexMask::Full => Ok(true),
            IndexMask::Columns(cols) => Ok(cols.contains(&compose_index(spaces, parts))),
            IndexMask::LegMax { label, max } => {
                let pos = spaces
                    .iter()
                    .position(|s| &s.label == label)
                    .ok_or_else(|| TensorError::LabelNotFound(label.clone()))?;
                Ok(parts[pos] <= *max)
            }
            IndexMask::TotalDegreeMax { labels, max } => {
                let mut sum = 0usize;
                for label in labels {
                    let pos = spaces
                        .iter()
                        .position(|s| &s.label == label)
                        .ok_or_else(|| TensorError::LabelNotFound(label.clone()))?;
                    sum += parts[pos];
                }
                Ok(sum <= *max)
            }
            IndexMask::All(list) => {
                for m in list {
                    if !m.selects(spaces, parts)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Composite column indices selected by this mask.
    pub fn column_set(&self, spaces: &[Space]) -> Result<Vec<usize>, TensorError> {
        let total = total_dim(spaces);
        let mut cols = Vec::new();
        for idx in 0..total {
            let parts = decompose_index(spaces, idx);
            if self.selects(spaces, &parts)? {
                cols.push(idx);
            }
        }
        Ok(cols)
    }
}

/// Dense complex matrix on an ordered list of labeled legs.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    spaces: Vec<Space>,
    data: Array2<C64>,
}

impl Operator {
    pub fn zeros(spaces: Vec<Space>) -> Self {
        check_unique_labels(&spaces).expect("zeros: unique labels");
        let d = total_dim(&spaces);
        Self { spaces, data: Array2::zeros((d, d)) }
    }

    pub fn identity(spaces: Vec<Space>) -> Self {
        check_unique_labels(&spaces).expect("identity: unique labels");
        let d = total_dim(&spaces);
        Self { spaces, data: Array2::eye(d) }
    }

    pub fn from_matrix(spaces: Vec<Space>, data: Array2<C64>) -> Result<Self, TensorError> {
        check_unique_labels(&spaces)?;
        let d = total_dim(&spaces);
        if data.nrows() != d || data.ncols() != d {
            return Err(TensorError::MatrixShape { expected: d, got: data.nrows() });
        }
        Ok(Self { spaces, data })
    }

    /// Diagonal operator with entries given by a function of the per-leg
    /// basis indices.
    pub fn diagonal_on(spaces: Vec<Space>, f: impl Fn(&[usize]) -> C64) -> Self {
        let mut op = Self::zeros(spaces);
        for idx in 0..op.dim() {
            let parts = decompose_index(&op.spaces, idx);
            op.data[(idx, idx)] = f(&parts);
        }
        op
    }

    pub fn spaces(&self) -> &[Space] {
        &self.spaces
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, value: C64) {
        self.data[(row, col)] = value;
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.spaces.len() == other.spaces.len()
            && self
                .spaces
                .iter()
                .zip(&other.spaces)
                .all(|(a, b)| a.label == b.label && a.dim == b.dim)
    }

    fn layout_err(&self, other: &Self) -> TensorError {
        TensorError::SpaceListMismatch(format!(
            "[{}] vs [{}]",
            self.spaces.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(", "),
            other.spaces.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(", ")
        ))
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, TensorError> {
        if !self.same_layout(rhs) {
            return Err(self.layout_err(rhs));
        }
        Ok(Self { spaces: self.spaces.clone(), data: mat_mul(&self.data, &rhs.data) })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, TensorError> {
        if !self.same_layout(rhs) {
            return Err(self.layout_err(rhs));
        }
        Ok(Self { spaces: self.spaces.clone(), data: &self.data + &rhs.data })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, TensorError> {
        if !self.same_layout(rhs) {
            return Err(self.layout_err(rhs));
        }
        Ok(Self { spaces: self.spaces.clone(), data: &self.data - &rhs.data })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { spaces: self.spaces.clone(), data: self.data.mapv(|v| v * c) }
    }

    /// Adds `c * I`.
    pub fn add_scalar(&self, c: C64) -> Self {
        let mut data = self.data.clone();
        for i in 0..data.nrows() {
            data[(i, i)] += c;
        }
        Self { spaces: self.spaces.clone(), data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        for ((r, c), v) in self.data.indexed_iter() {
            if r != c && (v.re != 0.0 || v.im != 0.0) {
                return false;
            }
        }
        true
    }

    pub fn relabel(&self, old: &str, new: &str) -> Result<Self, TensorError> {
        let pos = self
            .spaces
            .iter()
            .position(|s| s.label == old)
            .ok_or_else(|| TensorError::LabelNotFound(old.to_string()))?;
        let mut spaces = self.spaces.clone();
        spaces[pos].label = new.to_string();
        check_unique_labels(&spaces)?;
        Ok(Self { spaces, data: self.data.clone() })
    }

    /// Tensor (Kronecker) product; the leg lists are concatenated.
    pub fn kron(&self, rhs: &Self) -> Result<Self, TensorError> {
        let mut spaces = self.spaces.clone();
        spaces.extend(rhs.spaces.iter().cloned());
        check_unique_labels(&spaces)?;
        let (m, p) = (self.dim(), rhs.dim());
        let mut data = Array2::zeros((m * p, m * p));
        for ((r1, c1), v1) in self.data.indexed_iter() {
            if v1.re == 0.0 && v1.im == 0.0 {
                continue;
            }
            for ((r2, c2), v2) in rhs.data.indexed_iter() {
                data[(r1 * p + r2, c1 * p + c2)] = v1 * v2;
            }
        }
        Ok(Self { spaces, data })
    }
}

/// Matrix product kernel; all operator compositions funnel through here.
fn mat_mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b)
}

/// `a b - b a`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator, TensorError> {
    a.matmul(b)?.sub(&b.matmul(a)?)
}

/// `a b - t b a`.
pub fn q_commutator(a: &Operator, b: &Operator, t: C64) -> Result<Operator, TensorError> {
    a.matmul(b)?.sub(&b.matmul(a)?.scale(t))
}

/// Kronecker-extend `op` with identities onto `target` legs; the legs of
/// `op` must appear in `target` in the same relative order.
pub fn embed(op: &Operator, target: &[Space]) -> Result<Operator, TensorError> {
    check_unique_labels(target)?;
    let mut positions = Vec::with_capacity(op.spaces.len());
    let mut cursor = 0usize;
    for s in &op.spaces {
        let found = target
            .iter()
            .enumerate()
            .skip(cursor)
            .find(|(_, t)| t.label == s.label)
            .map(|(j, _)| j);
        let j = match found {
            Some(j) => j,
            None => {
                if target.iter().any(|t| t.label == s.label) {
                    return Err(TensorError::NotSubList);
                }
                return Err(TensorError::LabelNotFound(s.label.clone()));
            }
        };
        if target[j].dim != s.dim {
            return Err(TensorError::DimensionMismatch {
                label: s.label.clone(),
                expected: s.dim,
                got: target[j].dim,
            });
        }
        positions.push(j);
        cursor = j + 1;
    }

    let strides = strides_of(target);
    let other: Vec<usize> = (0..target.len()).filter(|j| !positions.contains(j)).collect();
    let other_total: usize = other.iter().map(|&j| target[j].dim).product();

    // composite offset contributed by each op-basis index
    let op_dim = op.dim();
    let mut spread = vec![0usize; op_dim];
    for (a, s) in spread.iter_mut().enumerate() {
        let parts = decompose_index(&op.spaces, a);
        *s = parts.iter().zip(&positions).map(|(&p, &j)| p * strides[j]).sum();
    }

    let mut out = Operator::zeros(target.to_vec());
    for oid in 0..other_total {
        let mut base = 0usize;
        let mut rem = oid;
        for &j in other.iter().rev() {
            base += (rem % target[j].dim) * strides[j];
            rem /= target[j].dim;
        }
        for a in 0..op_dim {
            for b in 0..op_dim {
                let v = op.data[(a, b)];
                if v.re != 0.0 || v.im != 0.0 {
                    out.data[(base + spread[a], base + spread[b])] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Matrix product left to right; all operands must share one space list.
pub fn compose(ops: &[&Operator]) -> Result<Operator, TensorError> {
    let (first, rest) = ops.split_first().ok_or(TensorError::EmptyComposition)?;
    let mut acc = (*first).clone();
    for op in rest {
        acc = acc.matmul(op)?;
    }
    Ok(acc)
}

/// `Tr_leg(op . embed(weight))` over the named leg; the weight operator
/// lives on exactly that leg.
pub fn partial_trace_weighted(
    op: &Operator,
    leg: &str,
    weight: &Operator,
) -> Result<Operator, TensorError> {
    let pos = op
        .spaces
        .iter()
        .position(|s| s.label == leg)
        .ok_or_else(|| TensorError::LabelNotFound(leg.to_string()))?;
    if weight.spaces.len() != 1 || weight.spaces[0].label != leg {
        return Err(TensorError::SpaceListMismatch(
            "weight must act on exactly the traced leg".into(),
        ));
    }
    if weight.spaces[0].dim != op.spaces[pos].dim {
        return Err(TensorError::DimensionMismatch {
            label: leg.to_string(),
            expected: op.spaces[pos].dim,
            got: weight.spaces[0].dim,
        });
    }
    let d = op.spaces[pos].dim;
    let strides = strides_of(&op.spaces);
    let rest: Vec<Space> =
        op.spaces.iter().enumerate().filter(|(j, _)| *j != pos).map(|(_, s)| s.clone()).collect();
    let rest_positions: Vec<usize> = (0..op.spaces.len()).filter(|&j| j != pos).collect();
    let out_dim = total_dim(&rest);
    let mut base_of = vec![0usize; out_dim];
    for (r, b) in base_of.iter_mut().enumerate() {
        let parts = decompose_index(&rest, r);
        *b = parts.iter().zip(&rest_positions).map(|(&p, &j)| p * strides[j]).sum();
    }
    let mut out = Operator::zeros(rest);
    for r in 0..out_dim {
        for c in 0..out_dim {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    acc += op.data[(base_of[r] + a * strides[pos], base_of[c] + b * strides[pos])]
                        * weight.data[(b, a)];
                }
            }
            out.data[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Scale-free deviation: `max |a - b|` over mask-selected columns (all
/// rows), normalized by `1 + max|a| + max|b|` over the same selection.
pub fn residual(a: &Operator, b: &Operator, mask: &IndexMask) -> Result<f64, TensorError> {
    if !a.same_layout(b) {
        return Err(a.layout_err(b));
    }
    let cols = mask.column_set(&a.spaces)?;
    if cols.is_empty() {
        return Err(TensorError::EmptyMask);
    }
    let n = a.dim();
    let mut dmax = 0.0f64;
    let mut amax = 0.0f64;
    let mut bmax = 0.0f64;
    for &c in &cols {
        for r in 0..n {
            let va = a.data[(r, c)];
            let vb = b.data[(r, c)];
            dmax = dmax.max((va - vb).norm());
            amax = amax.max(va.norm());
            bmax = bmax.max(vb.norm());
        }
    }
    Ok(dmax / (1.0 + amax + bmax))
}

/// Max-abs distance to zero over mask-selected columns, same normalization
/// as [`residual`].
pub fn residual_zero(a: &Operator, mask: &IndexMask) -> Result<f64, TensorError> {
    residual(a, &Operator::zeros(a.spaces.to_vec()), mask)
}

/// Gauss-Jordan inverse with partial pivoting; `None` on (numerical)
/// singularity.
pub(crate) fn invert_matrix(a: &Array2<C64>) -> Option<Array2<C64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv: Array2<C64> = Array2::eye(n);
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].norm();
        for r in col + 1..n {
            let v = m[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-200 {
            return None;
        }
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
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for j in 0..n {
                let mc = m[(col, j)];
                let ic = inv[(col, j)];
                m[(r, j)] -= f * mc;
                inv[(r, j)] -= f * ic;
            }
        }
    }
    Some(inv)
}

pub(crate) fn determinant(a: &Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].norm();
        for r in col + 1..n {
            let v = m[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != col {
            for j in 0..n {
                m.swap((col, j), (piv, j));
            }
            det = -det;
        }
        det *= m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / m[(col, col)];
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for j in col..n {
                let mc = m[(col, j)];
                m[(r, j)] -= f * mc;
            }
        }
    }
    det
}

pub const DUMP_MAGIC: &[u8; 4] = b"QLOP";
pub const DUMP_VERSION: u32 = 1;

/// Binary dump: magic `QLOP`, version u32 LE, leg count u32 LE, per leg
/// (label length u8, label bytes, dim u32 LE), then the row-major complex
/// entries as little-endian f64 pairs (re, im).
pub fn write_dump(op: &Operator, path: &Path) -> Result<(), TensorError> {
    let mut buf: Vec<u8> = Vec::with_capacity(16 + op.dim() * op.dim() * 16);
    buf.extend_from_slice(DUMP_MAGIC);
    buf.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(op.spaces.len() as u32).to_le_bytes());
    for s in &op.spaces {
        let lb = s.label.as_bytes();
        if lb.len() > 255 {
            return Err(TensorError::DumpFormat("leg label longer than 255 bytes".into()));
        }
        buf.push(lb.len() as u8);
        buf.extend_from_slice(lb);
        buf.extend_from_slice(&(s.dim as u32).to_le_bytes());
    }
    for row in op.data.rows() {
        for v in row {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a dump back. The format carries labels and dims only; leg kinds
/// are inferred (dim 2 -> fundamental, else verma) and semantic parameters
/// live in the sidecar.
pub fn read_dump(path: &Path) -> Result<Operator, TensorError> {
    let buf = fs::read(path)?;
    let mut cur = 0usize;
    let take = |cur: &mut usize, n: usize| -> Result<&[u8], TensorError> {
        if *cur + n > buf.len() {
            return Err(TensorError::DumpFormat("truncated dump".into()));
        }
        let s = &buf[*cur..*cur + n];
        *cur += n;
        Ok(s)
    };
    if take(&mut cur, 4)? != DUMP_MAGIC {
        return Err(TensorError::DumpFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap());
    if version != DUMP_VERSION {
        return Err(TensorError::DumpFormat(format!("unsupported version {version}")));
    }
    let n_legs = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
    let mut spaces = Vec::with_capacity(n_legs);
    for _ in 0..n_legs {
        let len = take(&mut cur, 1)?[0] as usize;
        let label = String::from_utf8(take(&mut cur, len)?.to_vec())
            .map_err(|_| TensorError::DumpFormat("label is not utf-8".into()))?;
        let dim = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
        let kind = if dim == 2 { SpaceKind::Fundamental } else { SpaceKind::Verma };
        spaces.push(Space::new(label, dim, kind));
    }
    let d = total_dim(&spaces);
    let mut data = Array2::zeros((d, d));
    for r in 0..d {
        for c in 0..d {
            let re = f64::from_le_bytes(take(&mut cur, 8)?.try_into().unwrap());
            let im = f64::from_le_bytes(take(&mut cur, 8)?.try_into().unwrap());
            data[(r, c)] = C64::new(re, im);
        }
    }
    if cur != buf.len() {
        return Err(TensorError::DumpFormat("trailing bytes".into()));
    }
    Operator::from_matrix(spaces, data)
}

/// Sidecar metadata: one `key=value` per line.
pub fn write_sidecar(path: &Path, entries: &[(String, String)]) -> Result<(), TensorError> {
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_op(spaces: Vec<Space>, seed: u64) -> Operator {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let d = total_dim(&spaces);
        let mut op = Operator::zeros(spaces);
        for r in 0..d {
            for cc in 0..d {
                op.set_entry(
                    r,
                    cc,
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                );
            }
        }
        op
    }

    #[test]
    fn embed_identity_on_left_leg() {
        let l1 = Space::new("a", 3, SpaceKind::Verma);
        let l2 = Space::new("b", 2, SpaceKind::Fundamental);
        let a = random_op(vec![l2.clone()], 7);
        let e = embed(&a, &[l1.clone(), l2.clone()]).unwrap();
        // I3 (x) A
        for blk in 0..3 {
            for r in 0..2 {
                for cc in 0..2 {
                    assert_eq!(e.entry(blk * 2 + r, blk * 2 + cc), a.entry(r, cc));
                }
            }
        }
        let id = Operator::identity(vec![l2.clone()]);
        let e = embed(&id, &[l1.clone(), l2.clone()]).unwrap();
        assert!(e.sub(&Operator::identity(vec![l1, l2])).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn embed_matrix_unit_nonzero_count() {
        let w = Space::new("w1", 4, SpaceKind::Osc1);
        let q = Space::new("q", 2, SpaceKind::Fundamental);
        let mut e12 = Operator::zeros(vec![q.clone()]);
        e12.set_entry(0, 1, c(1.0));
        let e = embed(&e12, &[w, q]).unwrap();
        let nonzero = e.data().iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn embed_errors() {
        let l1 = Space::new("a", 3, SpaceKind::Verma);
        let l2 = Space::new("b", 2, SpaceKind::Fundamental);
        let a = random_op(vec![Space::new("zz", 2, SpaceKind::Fundamental)], 1);
        assert!(matches!(embed(&a, &[l1.clone(), l2.clone()]), Err(TensorError::LabelNotFound(_))));
        let a = random_op(vec![Space::new("a", 2, SpaceKind::Fundamental)], 2);
        assert!(matches!(
            embed(&a, &[l1.clone(), l2.clone()]),
            Err(TensorError::DimensionMismatch { .. })
        ));
        // order violation
        let ab = random_op(vec![l2.clone(), l1.clone()], 3);
        assert!(matches!(embed(&ab, &[l1, l2]), Err(TensorError::NotSubList)));
    }

    #[test]
    fn compose_identity_and_associativity() {
        let s = Space::new("a", 8, SpaceKind::Verma);
        let a = random_op(vec![s.clone()], 11);
        let b = random_op(vec![s.clone()], 12);
        let cc = random_op(vec![s.clone()], 13);
        let id = Operator::identity(vec![s.clone()]);
        assert!(compose(&[&id, &a]).unwrap().sub(&a).unwrap().max_abs() == 0.0);
        let left = compose(&[&a, &b]).unwrap().matmul(&cc).unwrap();
        let right = a.matmul(&compose(&[&b, &cc]).unwrap()).unwrap();
        let r = residual(&left, &right, &IndexMask::Full).unwrap();
        assert!(r < 1e-13, "associativity residual {r}");
        let t = Space::new("t", 8, SpaceKind::Verma);
        let other = random_op(vec![t], 14);
        assert!(a.matmul(&other).is_err());
        assert!(compose(&[]).is_err());
    }

    #[test]
    fn partial_trace_factorized_case() {
        let sa = Space::new("a", 3, SpaceKind::Verma);
        let sb = Space::new("b", 4, SpaceKind::Verma);
        let a = random_op(vec![sa.clone()], 21);
        let b = random_op(vec![sb.clone()], 22);
        let ab = a.kron(&b).unwrap();
        let w = Operator::identity(vec![sa.clone()]);
        let traced = partial_trace_weighted(&ab, "a", &w).unwrap();
        let tr_a: C64 = (0..3).map(|i| a.entry(i, i)).sum();
        let expected = b.scale(tr_a);
        assert!(residual(&traced, &expected, &IndexMask::Full).unwrap() < 1e-14);
    }

    #[test]
    fn partial_trace_geometric_weight() {
        let d = 12;
        let w = Space::new("w", d, SpaceKind::Osc1);
        let q = Space::new("q", 2, SpaceKind::Fundamental);
        let id = Operator::identity(vec![w.clone(), q.clone()]);
        let z = 1.5f64;
        let weight = Operator::diagonal_on(vec![w.clone()], |p| c(z.powi(-2 * p[0] as i32)));
        let traced = partial_trace_weighted(&id, "w", &weight).unwrap();
        let sum = (1.0 - z.powi(-2 * d as i32)) / (1.0 - z.powi(-2));
        let expected = Operator::identity(vec![q]).scale(c(sum));
        assert!(residual(&traced, &expected, &IndexMask::Full).unwrap() < 1e-14);
    }

    #[test]
    fn partial_trace_unknown_leg_is_rejected() {
        let sa = Space::new("a", 3, SpaceKind::Verma);
        let sb = Space::new("b", 2, SpaceKind::Fundamental);
        let ab = random_op(vec![sa.clone(), sb], 23);
        let w = Operator::identity(vec![sa.renamed("zz")]);
        assert!(matches!(
            partial_trace_weighted(&ab, "zz", &w),
            Err(TensorError::LabelNotFound(_))
        ));
        // weight on the wrong leg
        let w = Operator::identity(vec![sa]);
        assert!(partial_trace_weighted(&ab, "b", &w).is_err());
    }

    #[test]
    fn dump_rejects_malformed_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.qlop");
        fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_dump(&path), Err(TensorError::DumpFormat(_))));
        fs::write(&path, b"QLOP\x01\x00\x00\x00").unwrap();
        assert!(matches!(read_dump(&path), Err(TensorError::DumpFormat(_))));
    }

    #[test]
    fn trace_of_commutator_vanishes() {
        let s = Space::new("a", 6, SpaceKind::Verma);
        let a = random_op(vec![s.clone()], 31);
        let b = random_op(vec![s.clone()], 32);
        let comm = commutator(&a, &b).unwrap();
        let tr: C64 = (0..6).map(|i| comm.entry(i, i)).sum();
        assert!(tr.norm() < 1e-12);
    }

    #[test]
    fn residual_definition() {
        let s = Space::new("a", 5, SpaceKind::Verma);
        let a = random_op(vec![s.clone()], 41);
        assert_eq!(residual(&a, &a, &IndexMask::Full).unwrap(), 0.0);
        let eps = 1e-7;
        let mut b = a.clone();
        b.set_entry(0, 0, a.entry(0, 0) + c(eps));
        let r = residual(&a, &b, &IndexMask::Full).unwrap();
        let ma = a.max_abs();
        let mb = b.max_abs();
        assert!((r - eps / (1.0 + ma + mb)).abs() < 1e-18);
        assert!(matches!(
            residual(&a, &b, &IndexMask::Columns(vec![])),
            Err(TensorError::EmptyMask)
        ));
    }

    #[test]
    fn mask_over_missing_label_is_rejected() {
        let s = Space::new("a", 3, SpaceKind::Verma);
        let a = random_op(vec![s.clone()], 51);
        let m = IndexMask::leg_max("zz", 1);
        assert!(matches!(residual(&a, &a, &m), Err(TensorError::LabelNotFound(_))));
    }

    #[test]
    fn mask_total_degree_counts_pairs() {
        let w1 = Space::new("w1", 3, SpaceKind::Osc1);
        let w2 = Space::new("w2", 3, SpaceKind::Osc2);
        let cols = IndexMask::total_degree(&["w1", "w2"], 1).column_set(&[w1, w2]).unwrap();
        // (0,0), (0,1), (1,0)
        assert_eq!(cols, vec![0, 1, 3]);
    }

    #[test]
    fn invert_matrix_roundtrip() {
        let s = Space::new("a", 9, SpaceKind::Verma);
        let a = random_op(vec![s.clone()], 61).add_scalar(c(4.0)); // well-conditioned
        let inv = invert_matrix(a.data()).unwrap();
        let prod = Operator::from_matrix(vec![s.clone()], mat_mul(a.data(), &inv)).unwrap();
        let r = residual(&prod, &Operator::identity(vec![s]), &IndexMask::Full).unwrap();
        assert!(r < 1e-13, "inverse residual {r}");
    }

    #[test]
    fn determinant_of_triangular() {
        let s = Space::new("a", 4, SpaceKind::Verma);
        let mut a = Operator::zeros(vec![s]);
        for i in 0..4 {
            a.set_entry(i, i, c((i + 1) as f64));
        }
        a.set_entry(0, 3, c(7.0));
        assert!((determinant(a.data()) - 24.0).norm() < 1e-12);
    }

    #[test]
    fn dump_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("op.qlop");
        let w = Space::new("w1", 4, SpaceKind::Osc1);
        let q = Space::new("q", 2, SpaceKind::Fundamental);
        let op = random_op(vec![w, q], 71);
        write_dump(&op, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"QLOP");
        // header: 4 magic + 4 version + 4 nlegs + (1+2+4) + (1+1+4) = 25, payload 64 entries
        assert_eq!(bytes.len(), 25 + 64 * 16);
        let back = read_dump(&path).unwrap();
        assert_eq!(back.spaces()[0].label, "w1");
        assert_eq!(back.spaces()[1].dim, 2);
        assert_eq!(back.data(), op.data());
    }
}
