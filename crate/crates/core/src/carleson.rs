//! Separated nets, multiresolution ball families, the discrete multiscale
//! sum of stratified beta numbers, and synthetic curve generators.
//!
//! For each level `n` a maximal `2^-n` separated net of the point set is
//! built greedily in input order; the level's ball family puts a ball of
//! radius `10 * 2^-n` on every net center. The multiscale total adds
//! `beta_hat^{2s} * diam(B)` over all balls, and `gamma_hat` adds the set
//! diameter. Ball evaluations are independent and run in parallel; the
//! reduction is summed in ball order so results do not depend on the thread
//! schedule.

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::Algebra;
use crate::beta::{beta_hat_value, BetaConfig, BetaError};
use crate::group::{GroupElement, GroupError};
use crate::lines::{LineError, SegmentMap};
use crate::norms::{HomogeneousMetric, MetricError};

#[derive(Debug, Error)]
pub enum CarlesonError {
    #[error("point set must be nonempty")]
    EmptyPointSet,
    #[error("depth window is empty: n_min {0} > n_max {1}")]
    EmptyDepthWindow(i32, i32),
    #[error("curve sample needs at least {needed} points, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("generator `{0}` requires {1}")]
    UnsupportedGenerator(String, String),
    #[error(transparent)]
    Beta(#[from] BetaError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Algebra(#[from] crate::algebra::AlgebraError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Line(#[from] LineError),
}

/// A maximal `2^-n` separated subset of the input points, greedy in input
/// order: accepted centers are pairwise at least `2^-n` apart and every
/// input point is within `2^-n` of some center.
#[derive(Debug, Clone)]
pub struct Net {
    pub level: i32,
    pub separation: f64,
    /// Indices into the input point list.
    pub center_indices: Vec<usize>,
}

impl Net {
    /// The net centers as points of the input set.
    pub fn center_points(&self, points: &[GroupElement]) -> Vec<GroupElement> {
        self.center_indices.iter().map(|&i| points[i].clone()).collect()
    }
}

pub fn build_net(
    metric: &HomogeneousMetric,
    points: &[GroupElement],
    level: i32,
) -> Result<Net, CarlesonError> {
    if points.is_empty() {
        return Err(CarlesonError::EmptyPointSet);
    }
    let separation = (-level as f64).exp2();
    let mut centers: Vec<usize> = Vec::new();
    for (idx, p) in points.iter().enumerate() {
        let mut accept = true;
        for &c in &centers {
            if metric.distance(&points[c], p)? < separation {
                accept = false;
                break;
            }
        }
        if accept {
            centers.push(idx);
        }
    }
    Ok(Net { level, separation, center_indices: centers })
}

/// One ball of a multiresolution family.
#[derive(Debug, Clone)]
pub struct Ball {
    pub level: i32,
    pub center_index: usize,
    pub radius: f64,
}

/// Balls of radius `10 * 2^-n` on every net center, levels `n_min..=n_max`.
#[derive(Debug, Clone)]
pub struct BallFamily {
    pub balls: Vec<Ball>,
}

pub fn build_ball_family(
    metric: &HomogeneousMetric,
    points: &[GroupElement],
    n_min: i32,
    n_max: i32,
) -> Result<BallFamily, CarlesonError> {
    if n_min > n_max {
        return Err(CarlesonError::EmptyDepthWindow(n_min, n_max));
    }
    let mut balls = Vec::new();
    for level in n_min..=n_max {
        let net = build_net(metric, points, level)?;
        let radius = 10.0 * (-level as f64).exp2();
        for center_index in net.center_indices {
            balls.push(Ball { level, center_index, radius });
        }
    }
    Ok(BallFamily { balls })
}

/// Per-level slice of the multiscale sum.
#[derive(Debug, Clone)]
pub struct LevelSummary {
    pub level: i32,
    pub ball_count: usize,
    pub shell_sum: f64,
}

#[derive(Debug, Clone)]
pub struct CarlesonBreakdown {
    pub per_level: Vec<LevelSummary>,
    pub total: f64,
}

/// `sum_B beta_hat(B)^{2s} * diam(B)` over the multiresolution family, with
/// `diam(B) = 2 r(B)`, reported per level. Balls holding at most one point
/// contribute zero and skip the optimizer.
pub fn carleson_sum(
    metric: &HomogeneousMetric,
    points: &[GroupElement],
    n_min: i32,
    n_max: i32,
    beta_cfg: &BetaConfig,
) -> Result<CarlesonBreakdown, CarlesonError> {
    if points.is_empty() {
        return Err(CarlesonError::EmptyPointSet);
    }
    let family = build_ball_family(metric, points, n_min, n_max)?;
    let step = points[0].algebra().step();
    let two_s = 2 * step as i32;

    let contributions: Vec<(i32, f64)> = family
        .balls
        .par_iter()
        .map(|ball| -> Result<(i32, f64), CarlesonError> {
            let center = &points[ball.center_index];
            let mut in_ball: Vec<GroupElement> = Vec::new();
            for p in points {
                if metric.distance(center, p)? <= ball.radius {
                    in_ball.push(p.clone());
                }
            }
            if in_ball.len() <= 1 {
                return Ok((ball.level, 0.0));
            }
            let mut cfg = beta_cfg.clone();
            cfg.seed = mix_seed(beta_cfg.seed, ball.level as u64, ball.center_index as u64);
            let bh = beta_hat_value(metric, &in_ball, center, ball.radius, &cfg)?;
            Ok((ball.level, bh.powi(two_s) * 2.0 * ball.radius))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut per_level: Vec<LevelSummary> = (n_min..=n_max)
        .map(|level| LevelSummary { level, ball_count: 0, shell_sum: 0.0 })
        .collect();
    let mut total = 0.0;
    for (level, value) in contributions {
        let slot = &mut per_level[(level - n_min) as usize];
        slot.ball_count += 1;
        slot.shell_sum += value;
        total += value;
    }
    Ok(CarlesonBreakdown { per_level, total })
}

/// Exact max pairwise distance.
pub fn diameter(metric: &HomogeneousMetric, points: &[GroupElement]) -> Result<f64, CarlesonError> {
    if points.is_empty() {
        return Err(CarlesonError::EmptyPointSet);
    }
    let best = (0..points.len() - 1)
        .into_par_iter()
        .map(|i| -> Result<f64, CarlesonError> {
            let mut m = 0.0f64;
            for j in (i + 1)..points.len() {
                m = m.max(metric.distance(&points[i], &points[j])?);
            }
            Ok(m)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct GammaHat {
    pub diam: f64,
    pub breakdown: CarlesonBreakdown,
    pub value: f64,
}

/// Diameter plus the multiscale total over the depth window. Monotone
/// nondecreasing in the window.
pub fn gamma_hat(
    metric: &HomogeneousMetric,
    points: &[GroupElement],
    n_min: i32,
    n_max: i32,
    beta_cfg: &BetaConfig,
) -> Result<GammaHat, CarlesonError> {
    if points.len() == 1 {
        let breakdown = CarlesonBreakdown { per_level: Vec::new(), total: 0.0 };
        return Ok(GammaHat { diam: 0.0, breakdown, value: 0.0 });
    }
    let diam = diameter(metric, points)?;
    let breakdown = carleson_sum(metric, points, n_min, n_max, beta_cfg)?;
    let value = diam + breakdown.total;
    Ok(GammaHat { diam, breakdown, value })
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Synthetic curve generators for experiments and fixtures.
#[derive(Debug, Clone)]
pub enum CurveGenerator {
    /// Horizontal segment map between two endpoints, sampled uniformly.
    Segment { from: GroupElement, to: GroupElement },
    /// Horizontal lift of a planar circle of the given radius in a step-2
    /// group, left-translated to start at the identity.
    CircleLift { radius: f64 },
    /// Piecewise-horizontal path alternating between the first two
    /// first-layer axes, with the given number of corners and unit total
    /// length. Corners are always sample points.
    Zigzag { corners: usize },
}

impl CurveGenerator {
    pub fn describe(&self) -> String {
        match self {
            CurveGenerator::Segment { .. } => "segment".to_owned(),
            CurveGenerator::CircleLift { radius } => format!("circle-lift radius={radius}"),
            CurveGenerator::Zigzag { corners } => format!("zigzag corners={corners}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurveSample {
    pub points: Vec<GroupElement>,
    pub descriptor: String,
    /// Chain length `sum d(p_k, p_{k+1})` under the sampling metric.
    pub chain_length: f64,
}

impl CurveSample {
    /// Largest norm of the above-first-layer block of a consecutive left
    /// difference. Exactly horizontal chains (segments, zigzags) stay at
    /// rounding level; smooth lifts decay quadratically in the step size.
    pub fn horizontality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for pair in self.points.windows(2) {
            let d = pair[0].left_diff(&pair[1]).expect("same algebra");
            let alg = d.algebra();
            for i in 2..=alg.step() {
                for &x in d.layer(i) {
                    worst = worst.max(x.abs());
                }
            }
        }
        worst
    }
}

pub fn sample_curve(
    algebra: &Algebra,
    metric: &HomogeneousMetric,
    generator: &CurveGenerator,
    m: usize,
) -> Result<CurveSample, CarlesonError> {
    if m < 2 {
        return Err(CarlesonError::TooFewSamples { needed: 2, got: m });
    }
    let points = match generator {
        CurveGenerator::Segment { from, to } => {
            let seg = SegmentMap::new(from.clone(), to)?;
            (0..m)
                .map(|k| seg.point(k as f64 / (m - 1) as f64))
                .collect::<Result<Vec<_>, _>>()?
        }
        CurveGenerator::CircleLift { radius } => {
            if algebra.step() != 2 || algebra.layer_dims()[0] < 2 {
                return Err(CarlesonError::UnsupportedGenerator(
                    generator.describe(),
                    "a step-2 group with at least two horizontal directions".to_owned(),
                ));
            }
            let n = algebra.total_dim();
            let n1 = algebra.layer_dims()[0];
            // ride the first horizontal pair that actually brackets, so the
            // lift twists; the plane of a commuting pair is flat
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            let mut partner = 1;
            let mut bracket = vec![0.0; n];
            for b in 1..n1 {
                let mut e2 = vec![0.0; n];
                e2[b] = 1.0;
                let br = algebra.bracket(&e1, &e2)?;
                if br.iter().any(|x| *x != 0.0) {
                    partner = b;
                    bracket = br;
                    break;
                }
            }
            let lift_point = |theta: f64| -> GroupElement {
                let mut coords = vec![0.0; n];
                coords[0] = radius * theta.cos();
                coords[partner] = radius * theta.sin();
                let speed = 0.5 * radius * radius * theta;
                for c in n1..n {
                    coords[c] = speed * bracket[c];
                }
                GroupElement::new(algebra.clone(), coords).expect("finite coords")
            };
            let start = lift_point(0.0);
            (0..m)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / (m - 1) as f64;
                    start.left_diff(&lift_point(theta)).map_err(CarlesonError::from)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        CurveGenerator::Zigzag { corners } => {
            if algebra.layer_dims()[0] < 2 {
                return Err(CarlesonError::UnsupportedGenerator(
                    generator.describe(),
                    "at least two horizontal directions".to_owned(),
                ));
            }
            let segments = corners + 1;
            if m < segments + 1 {
                return Err(CarlesonError::TooFewSamples { needed: segments + 1, got: m });
            }
            let seg_len = 1.0 / segments as f64;
            let n1 = algebra.layer_dims()[0];
            // corner points first, then the interior fill
            let mut anchors = Vec::with_capacity(segments + 1);
            anchors.push(GroupElement::identity(algebra.clone()));
            for j in 0..segments {
                let mut dir = vec![0.0; n1];
                dir[j % 2] = 1.0;
                let step: Vec<f64> = dir.iter().map(|d| d * seg_len).collect();
                let e = GroupElement::horizontal(algebra.clone(), &step)?;
                let next = anchors[j].multiply(&e)?;
                anchors.push(next);
            }
            let extra = m - (segments + 1);
            let mut points = Vec::with_capacity(m);
            for j in 0..segments {
                points.push(anchors[j].clone());
                let fill = extra / segments + usize::from(j < extra % segments);
                let seg = SegmentMap::new(anchors[j].clone(), &anchors[j + 1])?;
                for q in 1..=fill {
                    points.push(seg.point(q as f64 / (fill + 1) as f64)?);
                }
            }
            points.push(anchors[segments].clone());
            points
        }
    };

    let mut chain_length = 0.0;
    for pair in points.windows(2) {
        chain_length += metric.distance(&pair[0], &pair[1])?;
    }
    Ok(CurveSample { points, descriptor: generator.describe(), chain_length })
}
