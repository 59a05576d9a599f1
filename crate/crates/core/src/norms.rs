//! Homogeneous norms and metrics.
//!
//! Two norm families are provided: the layered sup norm
//! `N(g) = max_i lambda_i |g_i|^{1/i}` and the Hebisch-Sikora gauge, the
//! Minkowski functional of a Euclidean ball under the graded dilations. Both
//! are 1-homogeneous and symmetric by construction; subadditivity holds only
//! for sufficiently small parameters, which [`HomogeneousMetric::calibrate`]
//! locates empirically by a randomized binary search. A metric instantiates
//! the same parameter set on every quotient of its group, so distances in
//! projected groups are directly comparable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::Algebra;
use crate::group::{GroupElement, GroupError};

/// Relative tolerance of the gauge bisection; the residual of the gauge
/// equation stays below `~2 s` times this.
const GAUGE_REL_TOL: f64 = 1e-13;

/// Smallest parameter the calibration grid will try.
pub const CALIBRATION_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric parameter must be strictly positive, got {0}")]
    NonPositiveParameter(f64),
    #[error("expected {expected} layer weights, got {got}")]
    WrongWeightCount { got: usize, expected: usize },
    #[error("element algebra is not a quotient of the metric's group")]
    IncompatibleAlgebra,
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Error)]
#[error(
    "calibration exhausted the parameter grid at floor {floor:e}; worst violation excess {worst_excess:e} at parameter {worst_parameter:e}"
)]
pub struct CalibrationError {
    pub floor: f64,
    pub worst_parameter: f64,
    pub worst_excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Infinity,
    HebischSikora,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricKind::Infinity => write!(f, "infinity"),
            MetricKind::HebischSikora => write!(f, "hebisch-sikora"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MetricParams {
    /// Layer weights `lambda_1..lambda_s`, all positive.
    Infinity { lambdas: Vec<f64> },
    /// Gauge ball radius `eta > 0`.
    HebischSikora { eta: f64 },
}

/// A homogeneous norm together with the group it lives on. The same
/// parameters are reused on every quotient `pi_i(G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousMetric {
    algebra: Algebra,
    params: MetricParams,
}

/// One probed parameter during calibration.
#[derive(Debug, Clone)]
pub struct CalibrationProbe {
    pub parameter: f64,
    pub violations: usize,
    pub worst_excess: f64,
}

/// Violation census of a calibration run.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub kind: MetricKind,
    pub parameter: f64,
    pub samples: usize,
    pub seed: u64,
    pub probes: Vec<CalibrationProbe>,
}

impl HomogeneousMetric {
    /// Layered sup norm with explicit weights.
    pub fn infinity(algebra: Algebra, lambdas: Vec<f64>) -> Result<Self, MetricError> {
        if lambdas.len() != algebra.step() {
            return Err(MetricError::WrongWeightCount {
                got: lambdas.len(),
                expected: algebra.step(),
            });
        }
        if let Some(&bad) = lambdas.iter().find(|&&l| !(l > 0.0)) {
            return Err(MetricError::NonPositiveParameter(bad));
        }
        Ok(HomogeneousMetric { algebra, params: MetricParams::Infinity { lambdas } })
    }

    /// Layered sup norm with all weights 1 (the normalization used in
    /// formula-level tests; not necessarily subadditive).
    pub fn unit_infinity(algebra: Algebra) -> Self {
        let lambdas = vec![1.0; algebra.step()];
        HomogeneousMetric { algebra, params: MetricParams::Infinity { lambdas } }
    }

    /// Hebisch-Sikora gauge of the Euclidean ball of radius `eta`.
    pub fn hebisch_sikora(algebra: Algebra, eta: f64) -> Result<Self, MetricError> {
        if !(eta > 0.0) {
            return Err(MetricError::NonPositiveParameter(eta));
        }
        Ok(HomogeneousMetric { algebra, params: MetricParams::HebischSikora { eta } })
    }

    /// Finds the largest parameter on a geometric grid for which no sampled
    /// pair violates subadditivity, by binary search downward from 1. For the
    /// sup norm the first-layer weight stays 1 and a common scale on
    /// `lambda_2..lambda_s` is searched; for the gauge the radius `eta` is
    /// searched. Returns the calibrated metric plus the probe census.
    pub fn calibrate(
        kind: MetricKind,
        algebra: Algebra,
        samples: usize,
        seed: u64,
    ) -> Result<(Self, CalibrationReport), CalibrationError> {
        let samples = samples.max(1);
        // Quarter-octave grid from 1 down to the floor.
        let ratio = (-0.25f64).exp2();
        let mut grid = Vec::new();
        let mut p = 1.0;
        while p >= CALIBRATION_FLOOR {
            grid.push(p);
            p *= ratio;
        }

        let metric_at = |param: f64| -> HomogeneousMetric {
            match kind {
                MetricKind::HebischSikora => {
                    HomogeneousMetric::hebisch_sikora(algebra.clone(), param).unwrap()
                }
                MetricKind::Infinity => {
                    let mut lambdas = vec![param; algebra.step()];
                    lambdas[0] = 1.0;
                    HomogeneousMetric::infinity(algebra.clone(), lambdas).unwrap()
                }
            }
        };

        let mut probes = Vec::new();
        let probe = |probes: &mut Vec<CalibrationProbe>, param: f64| -> usize {
            let metric = metric_at(param);
            let mut violations = 0usize;
            let mut worst = 0.0f64;
            for i in 0..samples {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                let g = random_element(&algebra, &mut rng);
                let h = random_element(&algebra, &mut rng);
                let gh = g.multiply(&h).expect("same algebra");
                let lhs = metric.norm(&gh);
                let rhs = metric.norm(&g) + metric.norm(&h);
                let excess = lhs - rhs;
                if excess > 1e-12 * (1.0 + rhs) {
                    violations += 1;
                    worst = worst.max(excess);
                }
            }
            probes.push(CalibrationProbe { parameter: param, violations, worst_excess: worst });
            violations
        };

        // Abelian groups are subadditive for any parameter.
        if algebra.step() == 1 {
            let v = probe(&mut probes, grid[0]);
            debug_assert_eq!(v, 0);
            let metric = metric_at(grid[0]);
            return Ok((
                metric,
                CalibrationReport { kind, parameter: grid[0], samples, seed, probes },
            ));
        }

        // Binary search for the first passing index, assuming violations are
        // monotone in the parameter along the grid.
        let mut lo = 0usize;
        let mut hi = grid.len() - 1;
        let found = if probe(&mut probes, grid[lo]) == 0 {
            Some(lo)
        } else if probe(&mut probes, grid[hi]) != 0 {
            None
        } else {
            // invariant: grid[lo] fails, grid[hi] passes
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if probe(&mut probes, grid[mid]) == 0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        };

        match found {
            Some(idx) => {
                let parameter = grid[idx];
                let metric = metric_at(parameter);
                Ok((metric, CalibrationReport { kind, parameter, samples, seed, probes }))
            }
            None => {
                let worst = probes
                    .iter()
                    .max_by(|a, b| a.worst_excess.partial_cmp(&b.worst_excess).unwrap())
                    .unwrap();
                Err(CalibrationError {
                    floor: CALIBRATION_FLOOR,
                    worst_parameter: worst.parameter,
                    worst_excess: worst.worst_excess,
                })
            }
        }
    }

    pub fn kind(&self) -> MetricKind {
        match &self.params {
            MetricParams::Infinity { .. } => MetricKind::Infinity,
            MetricParams::HebischSikora { .. } => MetricKind::HebischSikora,
        }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    /// Gauge radius for Hebisch-Sikora metrics.
    pub fn eta(&self) -> Option<f64> {
        match &self.params {
            MetricParams::HebischSikora { eta } => Some(*eta),
            _ => None,
        }
    }

    /// Layer weights for sup-norm metrics.
    pub fn lambdas(&self) -> Option<&[f64]> {
        match &self.params {
            MetricParams::Infinity { lambdas } => Some(lambdas),
            _ => None,
        }
    }

    /// Human-readable parameter description for reports.
    pub fn describe(&self) -> String {
        match &self.params {
            MetricParams::Infinity { lambdas } => {
                let ls: Vec<String> = lambdas.iter().map(|l| format!("{l}")).collect();
                format!("infinity lambdas={}", ls.join(","))
            }
            MetricParams::HebischSikora { eta } => format!("hebisch-sikora eta={eta}"),
        }
    }

    fn check_compatible(&self, g: &GroupElement) -> Result<(), MetricError> {
        if self.algebra.admits(g.algebra()) {
            Ok(())
        } else {
            Err(MetricError::IncompatibleAlgebra)
        }
    }

    /// Norm of `g`, which may live on the metric's group or any of its
    /// quotients (the parameter set is shared).
    pub fn norm(&self, g: &GroupElement) -> f64 {
        debug_assert!(self.check_compatible(g).is_ok());
        self.norm_slice(g.algebra(), g.coords())
    }

    /// Norm straight from a coordinate slice; the allocation-free core used
    /// by the distance-heavy search loops.
    pub(crate) fn norm_slice(&self, alg: &Algebra, coords: &[f64]) -> f64 {
        match &self.params {
            MetricParams::Infinity { lambdas } => {
                let mut best = 0.0f64;
                for i in 1..=alg.step() {
                    let m = euclid_norm(&coords[alg.layer_range(i)]);
                    if m == 0.0 {
                        continue;
                    }
                    let v = lambdas[i - 1] * root(m, i);
                    best = best.max(v);
                }
                best
            }
            MetricParams::HebischSikora { eta } => {
                let step = alg.step();
                if step <= 8 {
                    let mut norms = [0.0f64; 8];
                    for i in 1..=step {
                        norms[i - 1] = euclid_norm(&coords[alg.layer_range(i)]);
                    }
                    hs_gauge(&norms[..step], *eta)
                } else {
                    let norms: Vec<f64> =
                        (1..=step).map(|i| euclid_norm(&coords[alg.layer_range(i)])).collect();
                    hs_gauge(&norms, *eta)
                }
            }
        }
    }

    /// Left-invariant distance `N(a^{-1} b)`.
    pub fn distance(&self, a: &GroupElement, b: &GroupElement) -> Result<f64, MetricError> {
        self.check_compatible(a)?;
        let d = a.left_diff(b)?;
        Ok(self.norm(&d))
    }

    /// Non-horizontality `NH(g) = d(g, (g_1, 0, ..., 0))`.
    pub fn nh(&self, g: &GroupElement) -> f64 {
        debug_assert!(self.check_compatible(g).is_ok());
        let diff = g.horiz().left_diff(g).expect("same algebra");
        self.norm(&diff)
    }
}

/// Solves `sum_i m_i^2 / x^{2i} = eta^2` for the unique positive root, the
/// Minkowski gauge of the dilated Euclidean ball. Steps 1 and 2 reduce to
/// closed forms (the step-2 equation is quadratic in `x^2`); higher steps
/// bisect from per-layer closed-form brackets, which is unconditionally
/// safe because the left side is strictly decreasing in `x`.
fn hs_gauge(layer_norms: &[f64], eta: f64) -> f64 {
    let s = layer_norms.len();
    if s == 1 {
        return layer_norms[0] / eta;
    }
    if s == 2 {
        let m1 = layer_norms[0];
        let m2 = layer_norms[1];
        if m1 == 0.0 && m2 == 0.0 {
            return 0.0;
        }
        // eta^2 x^4 - m1^2 x^2 - m2^2 = 0
        let e2 = eta * eta;
        let m1s = m1 * m1;
        let x2 = (m1s + (m1s * m1s + 4.0 * e2 * m2 * m2).sqrt()) / (2.0 * e2);
        return x2.sqrt();
    }
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    let sqrt_s = (s as f64).sqrt();
    for (idx, &m) in layer_norms.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let i = idx + 1;
        lo = lo.max(root(m / eta, i));
        hi = hi.max(root(sqrt_s * m / eta, i));
    }
    if lo == 0.0 {
        return 0.0;
    }
    let eta2 = eta * eta;
    let residual = |x: f64| -> f64 {
        let mut acc = 0.0;
        let mut xp = 1.0;
        for &m in layer_norms {
            xp *= x * x;
            if m != 0.0 {
                acc += m * m / xp;
            }
        }
        acc - eta2
    };
    // residual(lo) >= 0 >= residual(hi); equality happens when one layer
    // carries everything.
    if hi <= lo {
        return lo;
    }
    let mut a = lo;
    let mut b = hi;
    for _ in 0..90 {
        if (b - a) <= GAUGE_REL_TOL * b {
            break;
        }
        let mid = 0.5 * (a + b);
        if residual(mid) >= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `m^(1/i)` with exact fast paths for the common layers.
fn root(m: f64, i: usize) -> f64 {
    match i {
        1 => m,
        2 => m.sqrt(),
        _ => m.powf(1.0 / i as f64),
    }
}

fn random_element(alg: &Algebra, rng: &mut impl Rng) -> GroupElement {
    let coords: Vec<f64> = (0..alg.total_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
    GroupElement::new(alg.clone(), coords).expect("finite coords")
}
