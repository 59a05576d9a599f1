//! Stratified Lie algebras defined by structure constants.
//!
//! A stratified algebra is a graded vector space `V_1 + ... + V_s` with a
//! bracket table over a fixed basis. The horizontal layer `V_1` generates the
//! whole algebra: `[V_1, V_j] = V_{j+1}`. Algebras are immutable after
//! construction and shared behind `Arc`, so group elements, metrics and
//! parallel workers can hold cheap handles to the same structure.

use std::fmt;
use std::sync::{Arc, OnceLock, Weak};

use thiserror::Error;

/// Shared handle to an immutable stratified Lie algebra.
pub type Algebra = Arc<StratifiedAlgebra>;

/// Tolerance for the Jacobi, antisymmetry and grading checks. All builtin
/// tables are exact in floating point, so the tolerance only absorbs rounding
/// in user-supplied tables.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// One bracket table entry: `[e_a, e_b] = sum_c coeffs[c] * e_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketEntry {
    pub a: usize,
    pub b: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("layer dimensions must be a nonempty list of positive integers, got {0:?}")]
    BadLayerDims(Vec<usize>),
    #[error("bracket coefficient vector for pair ({a}, {b}) has length {got}, expected {expected}")]
    MalformedTable {
        a: usize,
        b: usize,
        got: usize,
        expected: usize,
    },
    #[error("duplicate bracket entry for pair ({0}, {1})")]
    DuplicateEntry(usize, usize),
    #[error("basis index {0} out of range for dimension {1}")]
    BasisOutOfRange(usize, usize),
    #[error("unknown builtin group `{0}`")]
    UnknownBuiltin(String),
    #[error("bad builtin parameter in `{0}`: {1}")]
    BadParameter(String, String),
    #[error("vector length {got} does not match algebra dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("layer index {0} out of range 1..={1}")]
    LayerOutOfRange(usize, usize),
}

/// A single violated structural invariant, with the offending basis tuple.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `[e_a, e_b] != -[e_b, e_a]`; reported at the later pair of the two.
    Antisymmetry { a: usize, b: usize },
    /// Jacobi identity fails on the basis triple.
    Jacobi {
        a: usize,
        b: usize,
        c: usize,
        residual: f64,
    },
    /// `[e_a, e_b]` has a component outside the layer it must land in.
    Grading { a: usize, b: usize },
    /// `span [V_1, V_j]` has deficient rank, so `V_{j+1}` is not generated.
    Generation {
        layer: usize,
        rank: usize,
        expected: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Antisymmetry { a, b } => write!(f, "antisymmetry violated at ({a}, {b})"),
            Violation::Jacobi { a, b, c, residual } => {
                write!(f, "jacobi identity violated at ({a}, {b}, {c}), residual {residual:e}")
            }
            Violation::Grading { a, b } => write!(f, "grading violated at ({a}, {b})"),
            Violation::Generation { layer, rank, expected } => write!(
                f,
                "generation violated at layer {layer}: rank {rank}, expected {expected}"
            ),
        }
    }
}

/// Outcome of [`StratifiedAlgebra::validate`]: empty iff all invariants hold.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A stratified Lie algebra with graded structure constants over a fixed basis.
pub struct StratifiedAlgebra {
    name: String,
    layer_dims: Vec<usize>,
    /// `offsets[i]` = first basis index of layer `i+1`; `offsets[s]` = n.
    offsets: Vec<usize>,
    total_dim: usize,
    step: usize,
    homogeneous_dim: usize,
    /// Dense pair-indexed table: `table[a * n + b]` lists `(c, coeff)` with
    /// `[e_a, e_b] = sum coeff * e_c`. Absent pairs bracket to zero.
    table: Vec<Vec<(usize, f64)>>,
    quotients: OnceLock<Vec<Algebra>>,
    self_ref: Weak<StratifiedAlgebra>,
}

impl fmt::Debug for StratifiedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StratifiedAlgebra")
            .field("name", &self.name)
            .field("layer_dims", &self.layer_dims)
            .finish()
    }
}

impl PartialEq for StratifiedAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.layer_dims == other.layer_dims && self.table == other.table
    }
}

impl StratifiedAlgebra {
    /// Builds an algebra from layer dimensions and a bracket table.
    ///
    /// Structural problems (wrong-length coefficient vectors, out-of-range
    /// indices, duplicates) are hard errors, distinct from the soft invariant
    /// violations reported by [`validate`](Self::validate). If only one of
    /// `(a, b)` / `(b, a)` is supplied, the missing direction is completed by
    /// antisymmetry; pairs absent in both directions bracket to zero.
    pub fn from_table(
        layer_dims: Vec<usize>,
        entries: Vec<BracketEntry>,
    ) -> Result<Algebra, AlgebraError> {
        Self::build("custom".to_owned(), layer_dims, entries)
    }

    fn build(
        name: String,
        layer_dims: Vec<usize>,
        entries: Vec<BracketEntry>,
    ) -> Result<Algebra, AlgebraError> {
        if layer_dims.is_empty() || layer_dims.iter().any(|&d| d == 0) {
            return Err(AlgebraError::BadLayerDims(layer_dims));
        }
        let n: usize = layer_dims.iter().sum();
        let step = layer_dims.len();
        let mut offsets = Vec::with_capacity(step + 1);
        let mut acc = 0;
        for &d in &layer_dims {
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);
        let homogeneous_dim = layer_dims.iter().enumerate().map(|(i, &d)| (i + 1) * d).sum();

        let mut dense: Vec<Option<Vec<f64>>> = vec![None; n * n];
        for e in &entries {
            if e.a >= n {
                return Err(AlgebraError::BasisOutOfRange(e.a, n));
            }
            if e.b >= n {
                return Err(AlgebraError::BasisOutOfRange(e.b, n));
            }
            if e.coeffs.len() != n {
                return Err(AlgebraError::MalformedTable {
                    a: e.a,
                    b: e.b,
                    got: e.coeffs.len(),
                    expected: n,
                });
            }
            if dense[e.a * n + e.b].is_some() {
                return Err(AlgebraError::DuplicateEntry(e.a, e.b));
            }
            dense[e.a * n + e.b] = Some(e.coeffs.clone());
        }
        // Complete missing reverse pairs by antisymmetry.
        for a in 0..n {
            for b in 0..n {
                if dense[a * n + b].is_some() && dense[b * n + a].is_none() && a != b {
                    let neg: Vec<f64> = dense[a * n + b].as_ref().unwrap().iter().map(|x| -x).collect();
                    dense[b * n + a] = Some(neg);
                }
            }
        }
        let table: Vec<Vec<(usize, f64)>> = dense
            .into_iter()
            .map(|slot| match slot {
                None => Vec::new(),
                Some(v) => v
                    .into_iter()
                    .enumerate()
                    .filter(|(_, x)| *x != 0.0)
                    .collect(),
            })
            .collect();

        Ok(Arc::new_cyclic(|weak| StratifiedAlgebra {
            name,
            layer_dims,
            offsets,
            total_dim: n,
            step,
            homogeneous_dim,
            table,
            quotients: OnceLock::new(),
            self_ref: weak.clone(),
        }))
    }

    /// Builds one of the named test groups: `heisenberg(k)`, `engel`,
    /// `free_step2(r)`. Returns a validated algebra.
    pub fn builtin(name: &str) -> Result<Algebra, AlgebraError> {
        let trimmed = name.trim();
        let alg = if trimmed == "engel" {
            Self::engel()
        } else if let Some(arg) = parse_call(trimmed, "heisenberg") {
            let k = parse_positive(trimmed, arg)?;
            Self::heisenberg(k)?
        } else if let Some(arg) = parse_call(trimmed, "free_step2") {
            let r = parse_positive(trimmed, arg)?;
            Self::free_step2(r)?
        } else {
            return Err(AlgebraError::UnknownBuiltin(trimmed.to_owned()));
        };
        debug_assert!(alg.validate().is_clean());
        Ok(alg)
    }

    /// Heisenberg group of rank `k`: layers `[2k, 1]`, basis
    /// `X_1..X_k, Y_1..Y_k, Z` with `[X_j, Y_j] = Z`.
    pub fn heisenberg(k: usize) -> Result<Algebra, AlgebraError> {
        if k == 0 {
            return Err(AlgebraError::BadParameter(
                format!("heisenberg({k})"),
                "rank must be positive".to_owned(),
            ));
        }
        let n = 2 * k + 1;
        let mut entries = Vec::new();
        for j in 0..k {
            let mut coeffs = vec![0.0; n];
            coeffs[2 * k] = 1.0;
            entries.push(BracketEntry { a: j, b: k + j, coeffs });
        }
        Self::build(format!("heisenberg({k})"), vec![2 * k, 1], entries)
    }

    /// Engel group: layers `[2, 1, 1]`, with `[X_1, X_2] = X_3` and
    /// `[X_1, X_3] = X_4`.
    pub fn engel() -> Algebra {
        let entries = vec![
            BracketEntry { a: 0, b: 1, coeffs: vec![0.0, 0.0, 1.0, 0.0] },
            BracketEntry { a: 0, b: 2, coeffs: vec![0.0, 0.0, 0.0, 1.0] },
        ];
        Self::build("engel".to_owned(), vec![2, 1, 1], entries).expect("engel table is well formed")
    }

    /// Free step-2 group on `r` generators: layers `[r, r(r-1)/2]`, with
    /// `[X_i, X_j] = Z_{ij}` for `i < j` in lexicographic order.
    pub fn free_step2(r: usize) -> Result<Algebra, AlgebraError> {
        if r < 2 {
            return Err(AlgebraError::BadParameter(
                format!("free_step2({r})"),
                "needs at least 2 generators".to_owned(),
            ));
        }
        let n2 = r * (r - 1) / 2;
        let n = r + n2;
        let mut entries = Vec::new();
        let mut z = r;
        for i in 0..r {
            for j in (i + 1)..r {
                let mut coeffs = vec![0.0; n];
                coeffs[z] = 1.0;
                entries.push(BracketEntry { a: i, b: j, coeffs });
                z += 1;
            }
        }
        Self::build(format!("free_step2({r})"), vec![r, n2], entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Homogeneous dimension `Q = sum_i i * n_i`.
    pub fn homogeneous_dim(&self) -> usize {
        self.homogeneous_dim
    }

    /// 1-based layer of basis index `idx`.
    pub fn layer_of(&self, idx: usize) -> usize {
        debug_assert!(idx < self.total_dim);
        self.offsets.partition_point(|&o| o <= idx)
    }

    /// Coordinate range of 1-based layer `i`.
    pub fn layer_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i - 1]..self.offsets[i]
    }

    /// Bilinear extension of the bracket table to whole-algebra vectors.
    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>, AlgebraError> {
        if u.len() != self.total_dim {
            return Err(AlgebraError::DimensionMismatch { got: u.len(), expected: self.total_dim });
        }
        if v.len() != self.total_dim {
            return Err(AlgebraError::DimensionMismatch { got: v.len(), expected: self.total_dim });
        }
        let mut out = vec![0.0; self.total_dim];
        self.bracket_into(u, v, &mut out);
        Ok(out)
    }

    pub(crate) fn bracket_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        self.bracket_add_scaled(u, v, 1.0, out);
    }

    /// Adds `scale * [u, v]` into `out` without zeroing it first.
    pub(crate) fn bracket_add_scaled(&self, u: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.total_dim;
        for (a, &ua) in u.iter().enumerate() {
            if ua == 0.0 {
                continue;
            }
            let fa = scale * ua;
            let row = a * n;
            for (b, &vb) in v.iter().enumerate() {
                if vb == 0.0 {
                    continue;
                }
                let list = &self.table[row + b];
                if list.is_empty() {
                    continue;
                }
                let f = fa * vb;
                for &(c, coef) in list {
                    out[c] += f * coef;
                }
            }
        }
    }

    /// The quotient algebra keeping layers `1..=layers` (layer `step` returns
    /// the algebra itself). Handles are cached so repeated projections share
    /// one instance.
    pub fn quotient(&self, layers: usize) -> Result<Algebra, AlgebraError> {
        if layers == 0 || layers > self.step {
            return Err(AlgebraError::LayerOutOfRange(layers, self.step));
        }
        if layers == self.step {
            return Ok(self.self_ref.upgrade().expect("self handle alive"));
        }
        let all = self.quotients.get_or_init(|| {
            (1..self.step)
                .map(|i| {
                    let m = self.offsets[i];
                    let mut entries = Vec::new();
                    for a in 0..m {
                        for b in 0..m {
                            let list = &self.table[a * self.total_dim + b];
                            if list.is_empty() {
                                continue;
                            }
                            let mut coeffs = vec![0.0; m];
                            for &(c, coef) in list {
                                if c < m {
                                    coeffs[c] = coef;
                                }
                            }
                            entries.push(BracketEntry { a, b, coeffs });
                        }
                    }
                    Self::build(
                        format!("pi_{i}({})", self.name),
                        self.layer_dims[..i].to_vec(),
                        entries,
                    )
                    .expect("truncated table is well formed")
                })
                .collect()
        });
        Ok(all[layers - 1].clone())
    }

    /// True when `other` is this algebra or one of its quotients (same layer
    /// dimensions up to truncation).
    pub fn admits(&self, other: &StratifiedAlgebra) -> bool {
        other.step <= self.step && self.layer_dims[..other.step] == other.layer_dims[..]
    }

    /// Checks antisymmetry, the Jacobi identity, the grading
    /// `[V_i, V_j] <= V_{i+j}` and generation `[V_1, V_j] = V_{j+1}`.
    pub fn validate(&self) -> ValidationReport {
        let n = self.total_dim;
        let mut violations = Vec::new();

        let coeffs_of = |a: usize, b: usize| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for &(c, coef) in &self.table[a * n + b] {
                v[c] += coef;
            }
            v
        };

        for a in 0..n {
            for b in a..n {
                let ab = coeffs_of(a, b);
                let ba = coeffs_of(b, a);
                let worst = ab
                    .iter()
                    .zip(&ba)
                    .map(|(x, y)| (x + y).abs())
                    .fold(0.0f64, f64::max);
                if worst > STRUCTURE_TOL {
                    violations.push(Violation::Antisymmetry { a: b, b: a });
                }
            }
        }

        for a in 0..n {
            for b in 0..n {
                let ab = coeffs_of(a, b);
                if ab.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let target = self.layer_of(a) + self.layer_of(b);
                let ok = ab.iter().enumerate().all(|(c, &x)| {
                    x.abs() <= STRUCTURE_TOL || (target <= self.step && self.layer_of(c) == target)
                });
                if !ok {
                    violations.push(Violation::Grading { a, b });
                }
            }
        }

        let mut scratch = vec![0.0; n];
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let ea = basis(n, a);
                    let eb = basis(n, b);
                    let ec = basis(n, c);
                    let mut total = vec![0.0; n];
                    for (x, y, z) in [(&ea, &eb, &ec), (&eb, &ec, &ea), (&ec, &ea, &eb)] {
                        self.bracket_into(y, z, &mut scratch);
                        let inner = scratch.clone();
                        self.bracket_into(x, &inner, &mut scratch);
                        for (t, s) in total.iter_mut().zip(&scratch) {
                            *t += s;
                        }
                    }
                    let residual = total.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    if residual > STRUCTURE_TOL {
                        violations.push(Violation::Jacobi { a, b, c, residual });
                    }
                }
            }
        }

        for j in 1..self.step {
            let rows: Vec<Vec<f64>> = self
                .layer_range(1)
                .flat_map(|a| {
                    self.layer_range(j)
                        .map(move |b| (a, b))
                })
                .map(|(a, b)| {
                    let full = coeffs_of(a, b);
                    self.layer_range(j + 1).map(|c| full[c]).collect()
                })
                .collect();
            let expected = self.layer_dims[j];
            let rank = matrix_rank(rows, expected);
            if rank < expected {
                violations.push(Violation::Generation { layer: j, rank, expected });
            }
        }

        ValidationReport { violations }
    }
}

fn basis(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Rank by Gaussian elimination with partial pivoting.
fn matrix_rank(mut rows: Vec<Vec<f64>>, cols: usize) -> usize {
    const RANK_TOL: f64 = 1e-9;
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows.len()).max_by(|&i, &j| {
            rows[i][col].abs().partial_cmp(&rows[j][col].abs()).unwrap()
        });
        let Some(p) = pivot else { break };
        if rows[p][col].abs() <= RANK_TOL {
            continue;
        }
        rows.swap(rank, p);
        for i in (rank + 1)..rows.len() {
            let f = rows[i][col] / rows[rank][col];
            if f != 0.0 {
                for c in col..cols {
                    rows[i][c] -= f * rows[rank][c];
                }
            }
        }
        rank += 1;
        if rank == cols {
            break;
        }
    }
    rank
}

fn parse_call<'a>(text: &'a str, func: &str) -> Option<&'a str> {
    text.strip_prefix(func)?
        .strip_prefix('(')?
        .strip_suffix(')')
}

fn parse_positive(whole: &str, arg: &str) -> Result<usize, AlgebraError> {
    match arg.trim().parse::<i64>() {
        Ok(v) if v > 0 => Ok(v as usize),
        Ok(_) => Err(AlgebraError::BadParameter(
            whole.to_owned(),
            "parameter must be positive".to_owned(),
        )),
        Err(e) => Err(AlgebraError::BadParameter(whole.to_owned(), e.to_string())),
    }
}
