//! Exponential-coordinate group arithmetic.
//!
//! Elements of a stratified group are identified with algebra vectors through
//! the exponential map, so the group product is the Baker-Campbell-Hausdorff
//! series. The series terminates at bracket weight `step` by nilpotency; the
//! Dynkin-form coefficients are computed once per step with exact integer
//! denominators and cached, and each product then evaluates the finitely many
//! nested brackets on the concrete input vectors.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError};

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
    #[error("coordinates must be finite, got {0} at index {1}")]
    NonFiniteCoordinate(f64, usize),
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A group element in exponential coordinates: a vector of length `n`
/// partitioned into layer blocks. Immutable; cloning copies the coordinate
/// vector and bumps the algebra handle.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    algebra: Algebra,
    coords: Vec<f64>,
}

impl GroupElement {
    pub fn new(algebra: Algebra, coords: Vec<f64>) -> Result<Self, GroupError> {
        if coords.len() != algebra.total_dim() {
            return Err(GroupError::Algebra(AlgebraError::DimensionMismatch {
                got: coords.len(),
                expected: algebra.total_dim(),
            }));
        }
        if let Some((i, &x)) = coords.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(GroupError::NonFiniteCoordinate(x, i));
        }
        Ok(GroupElement { algebra, coords })
    }

    pub fn identity(algebra: Algebra) -> Self {
        let n = algebra.total_dim();
        GroupElement { algebra, coords: vec![0.0; n] }
    }

    /// Element with the given first-layer block and zeros above; the image of
    /// a horizontal vector under the exponential map.
    pub fn horizontal(algebra: Algebra, first_layer: &[f64]) -> Result<Self, GroupError> {
        let n1 = algebra.layer_dims()[0];
        if first_layer.len() != n1 {
            return Err(GroupError::Algebra(AlgebraError::DimensionMismatch {
                got: first_layer.len(),
                expected: n1,
            }));
        }
        let mut coords = vec![0.0; algebra.total_dim()];
        coords[..n1].copy_from_slice(first_layer);
        GroupElement::new(algebra, coords)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate block of 1-based layer `i`.
    pub fn layer(&self, i: usize) -> &[f64] {
        &self.coords[self.algebra.layer_range(i)]
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|&x| x == 0.0)
    }

    pub(crate) fn same_algebra(&self, other: &GroupElement) -> bool {
        Arc::ptr_eq(&self.algebra, &other.algebra) || self.algebra == other.algebra
    }

    /// Group product via the truncated BCH series. The first-layer block is
    /// the plain sum `a_1 + b_1`; higher blocks add the BCH polynomials.
    /// Coordinate magnitude is unrestricted; rounding grows polynomially
    /// with it (degree `step`), so work near unit scale and dilate.
    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        if !self.same_algebra(other) {
            return Err(GroupError::AlgebraMismatch);
        }
        let coords = bch_product(&self.algebra, &self.coords, &other.coords);
        Ok(GroupElement { algebra: self.algebra.clone(), coords })
    }

    /// Group inverse; in exponential coordinates this is coordinate negation.
    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            algebra: self.algebra.clone(),
            coords: self.coords.iter().map(|x| -x).collect(),
        }
    }

    /// Left division `self^{-1} * other`.
    pub fn left_diff(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        self.inverse().multiply(other)
    }

    /// Graded dilation: layer `i` scales by `lambda^i`.
    pub fn dilate(&self, lambda: f64) -> Result<GroupElement, GroupError> {
        if !(lambda > 0.0) {
            return Err(GroupError::NonPositiveDilation(lambda));
        }
        Ok(self.dilate_unchecked(lambda))
    }

    pub(crate) fn dilate_unchecked(&self, lambda: f64) -> GroupElement {
        let mut coords = self.coords.clone();
        let mut factor = 1.0;
        for i in 1..=self.algebra.step() {
            factor *= lambda;
            for x in &mut coords[self.algebra.layer_range(i)] {
                *x *= factor;
            }
        }
        GroupElement { algebra: self.algebra.clone(), coords }
    }

    /// Projection onto the step-`i` quotient group (layers above `i` dropped).
    /// A group homomorphism because the BCH polynomials of a layer depend only
    /// on lower-layer coordinates.
    pub fn project(&self, i: usize) -> Result<GroupElement, GroupError> {
        let q = self.algebra.quotient(i)?;
        let m = q.total_dim();
        Ok(GroupElement { algebra: q, coords: self.coords[..m].to_vec() })
    }

    /// Horizontal projection `(g_1, 0, ..., 0)` inside the same group. Not a
    /// homomorphism.
    pub fn horiz(&self) -> GroupElement {
        let n1 = self.algebra.layer_dims()[0];
        let mut coords = vec![0.0; self.coords.len()];
        coords[..n1].copy_from_slice(&self.coords[..n1]);
        GroupElement { algebra: self.algebra.clone(), coords }
    }

    /// The layer-`k` BCH polynomial `P_k`: the layer-`k` block of `u * v`
    /// minus `u_k + v_k`. Requires `2 <= k <= step`.
    pub fn bch_polynomial(k: usize, u: &GroupElement, v: &GroupElement) -> Result<Vec<f64>, GroupError> {
        if !u.same_algebra(v) {
            return Err(GroupError::AlgebraMismatch);
        }
        let alg = &u.algebra;
        if k < 2 || k > alg.step() {
            return Err(GroupError::Algebra(AlgebraError::LayerOutOfRange(k, alg.step())));
        }
        let product = bch_product(alg, &u.coords, &v.coords);
        let range = alg.layer_range(k);
        Ok(range
            .map(|c| product[c] - u.coords[c] - v.coords[c])
            .collect())
    }

    /// Largest absolute coordinate difference; convenient for tests.
    pub fn max_coord_diff(&self, other: &GroupElement) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One term of the truncated Dynkin series: a right-nested bracket word over
/// the two inputs with an exact reciprocal-integer coefficient.
struct BchTerm {
    /// `false` selects the left input, `true` the right.
    letters: Vec<bool>,
    coeff: f64,
}

fn bch_terms(step: usize) -> Arc<[BchTerm]> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[BchTerm]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("BCH table cache poisoned");
    guard
        .entry(step)
        .or_insert_with(|| build_bch_terms(step).into())
        .clone()
}

/// Enumerates the Dynkin form of the BCH series up to bracket weight `step`:
/// over block sequences `(r_1, s_1), ..., (r_k, s_k)` with `r_i + s_i >= 1`,
/// the word `U^{r_1} V^{s_1} ... U^{r_k} V^{s_k}` is bracketed right-to-left
/// with coefficient `(-1)^{k-1} / (k * w * prod r_i! s_i!)`, `w` the total
/// weight. Words whose innermost bracket repeats a letter vanish identically
/// and are skipped.
fn build_bch_terms(step: usize) -> Vec<BchTerm> {
    const FACT: [f64; 7] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
    let mut terms = Vec::new();
    let mut blocks: Vec<(usize, usize)> = Vec::new();

    fn recurse(step: usize, blocks: &mut Vec<(usize, usize)>, weight: usize, terms: &mut Vec<BchTerm>, fact: &[f64; 7]) {
        if !blocks.is_empty() {
            let &(r_k, s_k) = blocks.last().unwrap();
            let degenerate = s_k >= 2 || (s_k == 0 && r_k >= 2);
            if !degenerate {
                let k = blocks.len();
                let mut denom = (k as f64) * (weight as f64);
                for &(r, s) in blocks.iter() {
                    denom *= fact[r] * fact[s];
                }
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                let mut letters = Vec::with_capacity(weight);
                for &(r, s) in blocks.iter() {
                    letters.extend(std::iter::repeat(false).take(r));
                    letters.extend(std::iter::repeat(true).take(s));
                }
                terms.push(BchTerm { letters, coeff: sign / denom });
            }
        }
        if weight >= step {
            return;
        }
        for r in 0..=(step - weight) {
            for s in 0..=(step - weight - r) {
                if r + s == 0 {
                    continue;
                }
                blocks.push((r, s));
                recurse(step, blocks, weight + r + s, terms, fact);
                blocks.pop();
            }
        }
    }

    recurse(step, &mut blocks, 0, &mut terms, &FACT);
    terms
}

fn bch_product(alg: &Algebra, u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = alg.total_dim();
    let mut out = vec![0.0; n];
    let mut scratch = BchScratch::for_algebra(alg);
    bch_into(alg, u, v, &mut out, &mut scratch);
    out
}

/// Reusable buffers for the nested-bracket evaluation.
pub(crate) struct BchScratch {
    acc: Vec<f64>,
    next: Vec<f64>,
}

impl BchScratch {
    pub(crate) fn for_algebra(alg: &Algebra) -> Self {
        let n = alg.total_dim();
        BchScratch { acc: vec![0.0; n], next: vec![0.0; n] }
    }
}

/// Writes the coordinates of the group product into `out` without
/// allocating. Steps 1 and 2 use the closed forms (`u + v`, plus half the
/// bracket); higher steps walk the cached Dynkin terms.
pub(crate) fn bch_into(alg: &Algebra, u: &[f64], v: &[f64], out: &mut [f64], scratch: &mut BchScratch) {
    let step = alg.step();
    for ((o, a), b) in out.iter_mut().zip(u).zip(v) {
        *o = a + b;
    }
    if step == 1 {
        return;
    }
    if step == 2 {
        alg.bracket_add_scaled(u, v, 0.5, out);
        return;
    }
    let terms = bch_terms(step);
    let acc = &mut scratch.acc;
    let next = &mut scratch.next;
    for term in terms.iter() {
        let word = &term.letters;
        if word.len() == 1 {
            // weight-1 terms are the plain sum, already written
            continue;
        }
        let last = if *word.last().unwrap() { v } else { u };
        acc.copy_from_slice(last);
        let mut zero = false;
        for &is_v in word[..word.len() - 1].iter().rev() {
            let left = if is_v { v } else { u };
            alg.bracket_into(left, acc, next);
            std::mem::swap(acc, next);
            if acc.iter().all(|&x| x == 0.0) {
                zero = true;
                break;
            }
        }
        if zero {
            continue;
        }
        for (o, x) in out.iter_mut().zip(acc.iter()) {
            *o += term.coeff * x;
        }
    }
}
