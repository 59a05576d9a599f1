//! Horizontal lines and segments, and point-to-line distances.
//!
//! A horizontal line is the image of `t -> g * exp(t v)` with `v` a unit
//! first-layer direction; it embeds the real line isometrically up to the
//! norm of the embedded direction. Point-to-line distance is a 1-D
//! minimization over the parameter; homogeneous balls are not Euclidean, so
//! the objective is treated as possibly non-unimodal: a coarse bracket grid
//! isolates the basin and golden-section refines it, doubling the bracket on
//! boundary hits.

use thiserror::Error;

use crate::group::{GroupElement, GroupError};
use crate::norms::{HomogeneousMetric, MetricError};
use crate::opt::{grid_then_golden, normalize};

#[derive(Debug, Error)]
pub enum LineError {
    #[error("direction must be a nonzero vector")]
    ZeroDirection,
    #[error("direction length {got} does not match first-layer dimension {expected}")]
    WrongDirectionLength { got: usize, expected: usize },
    #[error("segment parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A horizontal line `t -> base * exp(t v)`. The base point is not canonical:
/// any point of the line works.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalLine {
    base: GroupElement,
    direction: Vec<f64>,
}

impl HorizontalLine {
    /// Normalizes the direction; errors on a zero vector or a length that
    /// does not match the first layer.
    pub fn new(base: GroupElement, mut direction: Vec<f64>) -> Result<Self, LineError> {
        let n1 = base.algebra().layer_dims()[0];
        if direction.len() != n1 {
            return Err(LineError::WrongDirectionLength { got: direction.len(), expected: n1 });
        }
        if normalize(&mut direction) == 0.0 {
            return Err(LineError::ZeroDirection);
        }
        Ok(HorizontalLine { base, direction })
    }

    pub fn base(&self) -> &GroupElement {
        &self.base
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// `base * exp(t v)`.
    pub fn point(&self, t: f64) -> GroupElement {
        let step = self
            .direction
            .iter()
            .map(|d| t * d)
            .collect::<Vec<f64>>();
        let e = GroupElement::horizontal(self.base.algebra().clone(), &step)
            .expect("direction length checked at construction");
        self.base.multiply(&e).expect("same algebra")
    }

    /// The projected line in the step-`i` quotient: projected base, same
    /// direction. Pointwise this equals projecting the image.
    pub fn project(&self, i: usize) -> Result<HorizontalLine, LineError> {
        Ok(HorizontalLine {
            base: self.base.project(i)?,
            direction: self.direction.clone(),
        })
    }

    /// Left translation of the whole line by `g`.
    pub fn translate(&self, g: &GroupElement) -> Result<HorizontalLine, LineError> {
        Ok(HorizontalLine {
            base: g.multiply(&self.base)?,
            direction: self.direction.clone(),
        })
    }

    /// Dilation of the line: dilated base, same direction.
    pub fn dilate(&self, lambda: f64) -> Result<HorizontalLine, LineError> {
        Ok(HorizontalLine {
            base: self.base.dilate(lambda)?,
            direction: self.direction.clone(),
        })
    }
}

/// The horizontal segment map `t -> g * delta_t(horiz(g^{-1} h))` on `[0, 1]`:
/// starts at `g` and moves in the horizontal direction towards `h` (it need
/// not reach `h`).
#[derive(Debug, Clone)]
pub struct SegmentMap {
    from: GroupElement,
    /// `horiz(from^{-1} to)`, precomputed.
    hdiff: GroupElement,
}

impl SegmentMap {
    pub fn new(from: GroupElement, to: &GroupElement) -> Result<Self, LineError> {
        let hdiff = from.left_diff(to)?.horiz();
        Ok(SegmentMap { from, hdiff })
    }

    pub fn from_point(&self) -> &GroupElement {
        &self.from
    }

    /// Evaluation with the domain check; `point(0)` returns the start exactly.
    pub fn point(&self, t: f64) -> Result<GroupElement, LineError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(LineError::ParameterOutOfRange(t));
        }
        Ok(self.point_unchecked(t))
    }

    pub(crate) fn point_unchecked(&self, t: f64) -> GroupElement {
        if t == 0.0 {
            return self.from.clone();
        }
        let scaled = self.hdiff.dilate_unchecked(t);
        self.from.multiply(&scaled).expect("same algebra")
    }

    /// Projection to the step-`i` quotient commutes with evaluation.
    pub fn project(&self, i: usize) -> Result<SegmentMap, LineError> {
        Ok(SegmentMap {
            from: self.from.project(i)?,
            hdiff: self.hdiff.project(i)?,
        })
    }

    /// The horizontal displacement `horiz(from^{-1} to)` driving the map.
    pub fn horizontal_diff(&self) -> &GroupElement {
        &self.hdiff
    }
}

/// Shared context for distances from many points to one segment image. The
/// segment is `t -> from * exp(t * dir)` on `[0, 1]` with `dir` the raw
/// (unnormalized) horizontal displacement, so
/// `d(p, seg(t)) = N(exp(-t dir) * (from^{-1} p))`.
pub(crate) struct SegmentFrame<'m> {
    metric: &'m HomogeneousMetric,
    algebra: crate::algebra::Algebra,
    dir: Vec<f64>,
    finv: Vec<f64>,
    estep: Vec<f64>,
    prod: Vec<f64>,
    scratch: crate::group::BchScratch,
}

impl<'m> SegmentFrame<'m> {
    pub fn new(metric: &'m HomogeneousMetric, seg: &SegmentMap) -> Self {
        let algebra = seg.from.algebra().clone();
        let n = algebra.total_dim();
        let n1 = algebra.layer_dims()[0];
        SegmentFrame {
            metric,
            dir: seg.hdiff.coords()[..n1].to_vec(),
            finv: seg.from.coords().iter().map(|x| -x).collect(),
            estep: vec![0.0; n],
            prod: vec![0.0; n],
            scratch: crate::group::BchScratch::for_algebra(&algebra),
            algebra,
        }
    }

    pub fn dim(&self) -> usize {
        self.algebra.total_dim()
    }

    /// Coordinates of `from^{-1} p`.
    pub fn left_coords_into(&mut self, p: &GroupElement, out: &mut [f64]) {
        crate::group::bch_into(&self.algebra, &self.finv, p.coords(), out, &mut self.scratch);
    }

    pub fn dist_at(&mut self, fp: &[f64], t: f64) -> f64 {
        self.estep.fill(0.0);
        for (e, v) in self.estep.iter_mut().zip(&self.dir) {
            *e = -t * v;
        }
        crate::group::bch_into(&self.algebra, &self.estep, fp, &mut self.prod, &mut self.scratch);
        self.metric.norm_slice(&self.algebra, &self.prod)
    }

    /// Infimum over the unit parameter interval.
    pub fn dist(&mut self, fp: &[f64], nodes: usize, tol_t: f64) -> f64 {
        if self.algebra.step() == 1 {
            let d2: f64 = self.dir.iter().map(|v| v * v).sum();
            let t = if d2 == 0.0 {
                0.0
            } else {
                let along: f64 = fp.iter().zip(&self.dir).map(|(x, v)| x * v).sum();
                (along / d2).clamp(0.0, 1.0)
            };
            return self.dist_at(fp, t);
        }
        grid_then_golden(|t| self.dist_at(fp, t.clamp(0.0, 1.0)), 0.0, 1.0, nodes, tol_t).1
    }
}

/// Convenience wrapper for the segment map evaluation.
pub fn segment_point(
    g: &GroupElement,
    h: &GroupElement,
    t: f64,
) -> Result<GroupElement, LineError> {
    SegmentMap::new(g.clone(), h)?.point(t)
}

/// Shared context for measuring distances from many points to one line: the
/// base inverse, the embedded-direction norm, and scratch buffers so the
/// distance evaluations in search loops do not allocate.
pub(crate) struct LineFrame<'m> {
    metric: &'m HomogeneousMetric,
    algebra: crate::algebra::Algebra,
    direction: Vec<f64>,
    binv: Vec<f64>,
    /// Norm of the embedded unit direction; the isometry constant of the
    /// line's parameterization.
    nu: f64,
    estep: Vec<f64>,
    prod: Vec<f64>,
    scratch: crate::group::BchScratch,
}

impl<'m> LineFrame<'m> {
    pub fn new(metric: &'m HomogeneousMetric, line: &HorizontalLine) -> Self {
        let algebra = line.base().algebra().clone();
        let n = algebra.total_dim();
        let mut edir = vec![0.0; n];
        edir[..line.direction().len()].copy_from_slice(line.direction());
        let nu = metric.norm_slice(&algebra, &edir);
        let binv: Vec<f64> = line.base().coords().iter().map(|x| -x).collect();
        LineFrame {
            metric,
            direction: line.direction().to_vec(),
            binv,
            nu,
            estep: vec![0.0; n],
            prod: vec![0.0; n],
            scratch: crate::group::BchScratch::for_algebra(&algebra),
            algebra,
        }
    }

    /// Left coordinates of `p` relative to the base point.
    pub fn left_coords(&mut self, p: &GroupElement) -> Vec<f64> {
        let mut out = vec![0.0; self.algebra.total_dim()];
        self.left_coords_into(p, &mut out);
        out
    }

    pub fn left_coords_into(&mut self, p: &GroupElement, out: &mut [f64]) {
        crate::group::bch_into(&self.algebra, &self.binv, p.coords(), out, &mut self.scratch);
    }

    pub fn dim(&self) -> usize {
        self.algebra.total_dim()
    }

    /// Euclidean projection parameter of the first-layer coordinates.
    pub fn t_proj(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.direction).map(|(x, v)| x * v).sum()
    }

    pub fn dist_at(&mut self, w: &[f64], t: f64) -> f64 {
        for (e, v) in self.estep.iter_mut().zip(&self.direction) {
            *e = -t * v;
        }
        crate::group::bch_into(&self.algebra, &self.estep, w, &mut self.prod, &mut self.scratch);
        self.metric.norm_slice(&self.algebra, &self.prod)
    }

    /// Distance from `w` (left coordinates of the point) to the line, with
    /// the located parameter. All candidates better than the fiber value at
    /// `t_proj` lie within `2 d(p, L(t_proj)) / nu` of `t_proj`, so the
    /// bracket is safe; it still doubles on boundary hits.
    pub fn dist_from_left(&mut self, w: &[f64], nodes: usize, tol_t: f64) -> (f64, f64) {
        let t0 = self.t_proj(w);
        let d0 = self.dist_at(w, t0);
        if d0 == 0.0 {
            return (0.0, t0);
        }
        // abelian quotient: the Euclidean projection is the exact minimizer
        if self.algebra.step() == 1 {
            return (d0, t0);
        }
        let mut radius = 2.0 * d0 / self.nu + tol_t;
        let mut best = (d0, t0);
        for _ in 0..8 {
            let lo = t0 - radius;
            let hi = t0 + radius;
            let h = (hi - lo) / (nodes - 1) as f64;
            let (t, d) = grid_then_golden(|t| self.dist_at(w, t), lo, hi, nodes, tol_t);
            if d < best.0 {
                best = (d, t);
            }
            let interior = t > lo + 0.51 * h && t < hi - 0.51 * h;
            if interior {
                break;
            }
            radius *= 2.0;
        }
        // The distance never exceeds the value at the base parameter 0.
        let dz = self.dist_at(w, 0.0);
        if dz < best.0 {
            best = (dz, 0.0);
        }
        best
    }

    /// Cheap upper bound for pruning: the fiber distance at the Euclidean
    /// projection parameter.
    pub fn upper_bound(&mut self, w: &[f64]) -> f64 {
        self.dist_at(w, self.t_proj(w))
    }
}

/// Distance from `p` to the horizontal line, and the minimizing parameter.
/// Coarse 64-node bracket grid, then golden-section to 1e-10 in `t`.
pub fn dist_to_line(
    metric: &HomogeneousMetric,
    p: &GroupElement,
    line: &HorizontalLine,
) -> Result<(f64, f64), LineError> {
    if !p.same_algebra(line.base()) {
        return Err(LineError::Group(GroupError::AlgebraMismatch));
    }
    let mut frame = LineFrame::new(metric, line);
    let w = frame.left_coords(p);
    Ok(frame.dist_from_left(&w, 64, 1e-10))
}


/// Distance from `p` to the image of a segment map (infimum over `[0, 1]`).
pub fn dist_to_segment(
    metric: &HomogeneousMetric,
    p: &GroupElement,
    seg: &SegmentMap,
) -> Result<f64, LineError> {
    Ok(dist_to_segment_cfg(metric, p, seg, 32, 1e-9))
}

pub(crate) fn dist_to_segment_cfg(
    metric: &HomogeneousMetric,
    p: &GroupElement,
    seg: &SegmentMap,
    nodes: usize,
    tol_t: f64,
) -> f64 {
    let mut frame = SegmentFrame::new(metric, seg);
    let mut fp = vec![0.0; frame.dim()];
    frame.left_coords_into(p, &mut fp);
    frame.dist(&fp, nodes, tol_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Algebra, StratifiedAlgebra};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h1() -> Algebra {
        StratifiedAlgebra::builtin("heisenberg(1)").unwrap()
    }

    fn el(alg: &Algebra, coords: &[f64]) -> GroupElement {
        GroupElement::new(alg.clone(), coords.to_vec()).unwrap()
    }

    fn random_el(alg: &Algebra, rng: &mut impl Rng) -> GroupElement {
        let coords: Vec<f64> = (0..alg.total_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        GroupElement::new(alg.clone(), coords).unwrap()
    }

    fn x_axis() -> HorizontalLine {
        HorizontalLine::new(GroupElement::identity(h1()), vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn line_point_basics() {
        let line = x_axis();
        assert_eq!(line.point(3.0).coords(), &[3.0, 0.0, 0.0]);
        assert_eq!(line.point(0.0).coords(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn direction_normalized_and_validated() {
        let base = GroupElement::identity(h1());
        let l = HorizontalLine::new(base.clone(), vec![3.0, 4.0]).unwrap();
        assert!((l.direction()[0] - 0.6).abs() < 1e-15);
        assert!((l.direction()[1] - 0.8).abs() < 1e-15);
        assert!(HorizontalLine::new(base.clone(), vec![0.0, 0.0]).is_err());
        assert!(HorizontalLine::new(base, vec![1.0]).is_err());
    }

    #[test]
    fn one_parameter_isometry() {
        let m = HomogeneousMetric::unit_infinity(h1());
        let line = x_axis();
        let d = m.distance(&line.point(1.0), &line.point(4.0)).unwrap();
        assert!((d - 3.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let hs = HomogeneousMetric::hebisch_sikora(h1(), 0.5).unwrap();
        for _ in 0..200 {
            let base = random_el(&h1(), &mut rng);
            let dir: Vec<f64> = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            if dir.iter().all(|x| x.abs() < 1e-6) {
                continue;
            }
            let line = HorizontalLine::new(base, dir).unwrap();
            let e = GroupElement::horizontal(h1(), line.direction()).unwrap();
            for metric in [&m, &hs] {
                let nu = metric.norm(&e);
                let t1 = rng.random_range(-3.0..3.0);
                let t2 = rng.random_range(-3.0..3.0);
                let d = metric.distance(&line.point(t1), &line.point(t2)).unwrap();
                assert!((d - (t1 - t2).abs() * nu).abs() < 1e-10 * (1.0 + d));
            }
        }
    }

    #[test]
    fn segment_fixtures() {
        let zero = GroupElement::identity(h1());
        let h = el(&h1(), &[2.0, 0.0, 0.0]);
        let p = segment_point(&zero, &h, 0.5).unwrap();
        assert_eq!(p.coords(), &[1.0, 0.0, 0.0]);
        // vertical displacement has no horizontal part: constant segment
        let v = el(&h1(), &[0.0, 0.0, 1.0]);
        let p = segment_point(&zero, &v, 0.7).unwrap();
        assert!(p.is_identity());
        assert!(segment_point(&zero, &h, 1.5).is_err());
        assert!(segment_point(&zero, &h, -0.1).is_err());
    }

    #[test]
    fn segment_starts_exactly_at_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let g = random_el(&h1(), &mut rng);
            let h = random_el(&h1(), &mut rng);
            let seg = SegmentMap::new(g.clone(), &h).unwrap();
            assert_eq!(seg.point(0.0).unwrap().coords(), g.coords());
        }
    }

    /// Dense-grid reference for the point-to-line distance, independent of
    /// the bracket-plus-golden implementation path.
    fn oracle_line_dist(
        metric: &HomogeneousMetric,
        p: &GroupElement,
        line: &HorizontalLine,
        lo: f64,
        hi: f64,
        nodes: usize,
    ) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..nodes {
            let t = lo + (hi - lo) * k as f64 / (nodes - 1) as f64;
            let d = metric.distance(p, &line.point(t)).unwrap();
            best = best.min(d);
        }
        best
    }

    #[test]
    fn dist_to_line_matches_dense_grid_oracle() {
        let m = HomogeneousMetric::unit_infinity(h1());
        let p = el(&h1(), &[0.0, 1.0, 0.0]);
        let line = x_axis();
        let (d, t) = dist_to_line(&m, &p, &line).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
        assert!(t.abs() < 1e-4);
        let oracle = oracle_line_dist(&m, &p, &line, -4.0, 4.0, 100_001);
        assert!((d - oracle).abs() < 1e-6);

        // random configurations against the oracle
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let hs = HomogeneousMetric::hebisch_sikora(h1(), 0.5).unwrap();
        for _ in 0..15 {
            let p = random_el(&h1(), &mut rng);
            let base = random_el(&h1(), &mut rng);
            let dy: f64 = rng.random_range(-1.0..1.0);
            let line =
                HorizontalLine::new(base, vec![rng.random_range(-1.0..1.0), dy.max(0.1)])
                    .unwrap();
            for metric in [&m, &hs] {
                let (d, _) = dist_to_line(metric, &p, &line).unwrap();
                let oracle = oracle_line_dist(metric, &p, &line, -20.0, 20.0, 100_001);
                assert!(d <= oracle + 1e-6, "impl {d} vs oracle {oracle}");
                assert!(d >= oracle - 1e-3, "impl {d} vs oracle {oracle}");
            }
        }
    }

    #[test]
    fn dist_to_line_point_on_line_is_zero() {
        let m = HomogeneousMetric::unit_infinity(h1());
        let line = x_axis();
        let p = line.point(2.37);
        let (d, t) = dist_to_line(&m, &p, &line).unwrap();
        assert!(d < 1e-12);
        assert!((t - 2.37).abs() < 1e-6);
    }

    #[test]
    fn dist_to_line_never_exceeds_base_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let m = HomogeneousMetric::unit_infinity(h1());
        for _ in 0..300 {
            let p = random_el(&h1(), &mut rng);
            let base = random_el(&h1(), &mut rng);
            let line = HorizontalLine::new(
                base,
                vec![rng.random_range(-1.0..1.0), rng.random_range(0.05..1.0)],
            )
            .unwrap();
            let (d, _) = dist_to_line(&m, &p, &line).unwrap();
            assert!(d >= 0.0);
            assert!(d <= m.distance(&p, &line.point(0.0)).unwrap() + 1e-12);
        }
    }

    #[test]
    fn dist_to_line_left_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let m = HomogeneousMetric::unit_infinity(h1());
        for _ in 0..100 {
            let p = random_el(&h1(), &mut rng);
            let g = random_el(&h1(), &mut rng);
            let base = random_el(&h1(), &mut rng);
            let line = HorizontalLine::new(
                base,
                vec![rng.random_range(-1.0..1.0), rng.random_range(0.05..1.0)],
            )
            .unwrap();
            let (d, _) = dist_to_line(&m, &p, &line).unwrap();
            let (dt, _) = dist_to_line(
                &m,
                &g.multiply(&p).unwrap(),
                &line.translate(&g).unwrap(),
            )
            .unwrap();
            assert!((d - dt).abs() < 1e-9 * (1.0 + d), "{d} vs {dt}");
        }
    }

    #[test]
    fn dist_to_line_scales_under_dilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let m = HomogeneousMetric::unit_infinity(h1());
        for _ in 0..100 {
            let p = random_el(&h1(), &mut rng);
            let base = random_el(&h1(), &mut rng);
            let lambda = rng.random_range(0.2..4.0);
            let line = HorizontalLine::new(
                base,
                vec![rng.random_range(-1.0..1.0), rng.random_range(0.05..1.0)],
            )
            .unwrap();
            let (d, _) = dist_to_line(&m, &p, &line).unwrap();
            let (dd, _) = dist_to_line(
                &m,
                &p.dilate(lambda).unwrap(),
                &line.dilate(lambda).unwrap(),
            )
            .unwrap();
            assert!((dd - lambda * d).abs() < 1e-8 * (1.0 + lambda * d), "{dd} vs {}", lambda * d);
        }
    }

    #[test]
    fn projected_line_agrees_pointwise() {
        let e = StratifiedAlgebra::builtin("engel").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..100 {
            let base = random_el(&e, &mut rng);
            let line = HorizontalLine::new(
                base,
                vec![rng.random_range(-1.0..1.0), rng.random_range(0.05..1.0)],
            )
            .unwrap();
            for i in 1..=3 {
                let pl = line.project(i).unwrap();
                for _ in 0..5 {
                    let t = rng.random_range(-3.0..3.0);
                    let a = line.point(t).project(i).unwrap();
                    let b = pl.point(t);
                    assert!(a.max_coord_diff(&b) < 1e-12);
                }
            }
            assert_eq!(line.project(3).unwrap().point(1.0).coords(), line.point(1.0).coords());
        }
    }

    #[test]
    fn segment_distance_brackets_endpoint_values() {
        let m = HomogeneousMetric::unit_infinity(h1());
        let zero = GroupElement::identity(h1());
        let to = el(&h1(), &[1.0, 0.0, 0.0]);
        let seg = SegmentMap::new(zero, &to).unwrap();
        let p = el(&h1(), &[0.5, 0.3, 0.0]);
        let d = dist_to_segment(&m, &p, &seg).unwrap();
        assert!((d - 0.3).abs() < 1e-9);
        // beyond the end: distance to the endpoint, not the extended line
        let q = el(&h1(), &[2.0, 0.0, 0.0]);
        let d = dist_to_segment(&m, &q, &seg).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn projection_commutes_with_segment(seed in 0u64..200, t in 0.0f64..1.0) {
            let e = StratifiedAlgebra::builtin("engel").unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_el(&e, &mut rng);
            let h = random_el(&e, &mut rng);
            let seg = SegmentMap::new(g, &h).unwrap();
            for i in 1..=3usize {
                let a = seg.point(t).unwrap().project(i).unwrap();
                let b = seg.project(i).unwrap().point(t).unwrap();
                prop_assert!(a.max_coord_diff(&b) < 1e-12);
            }
        }
    }
}
