//! Randomized verification of the quantitative inequalities.
//!
//! Every check draws its samples from per-index ChaCha streams derived from
//! `(seed, sample index)`, evaluates the left and right side of one
//! inequality, and reports the ratio statistics. The comparison constants in
//! the inequalities are existential, so the harness fits them as the largest
//! observed ratio and leaves stability across seeds to the caller; it never
//! claims a proof. Samples whose denominators vanish are excluded and
//! counted with a reason.
//!
//! All draws happen inside a sample's own stream, so parallel execution is
//! schedule-independent and reports are reproducible bit for bit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::Algebra;
use crate::beta::{beta_hat_value, BetaConfig, BetaError};
use crate::group::{bch_into, BchScratch, GroupElement, GroupError};
use crate::lines::{
    dist_to_line, HorizontalLine, LineError, SegmentFrame, SegmentMap,
};
use crate::norms::{HomogeneousMetric, MetricError, MetricKind};
use crate::opt::grid_then_golden;

/// Attempt budget for rejection samplers before the parameters are declared
/// infeasible.
const REJECTION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("check requires a {expected} metric, got {got}")]
    WrongMetricKind { expected: MetricKind, got: MetricKind },
    #[error("rejection sampling exhausted {0} attempts; parameters look infeasible")]
    RejectionExhausted(u64),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Line(#[from] LineError),
    #[error(transparent)]
    Beta(#[from] BetaError),
}

/// Ratio statistics of one randomized inequality check.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub lemma: String,
    /// Requested sample count.
    pub samples: usize,
    pub seed: u64,
    /// Samples that produced ratios (requested minus degenerate).
    pub included: usize,
    pub degenerate: usize,
    pub degenerate_reasons: BTreeMap<String, usize>,
    /// Fitted constant: the largest observed ratio.
    pub c_hat: f64,
    pub p99: f64,
    pub p999: f64,
    pub mean_ratio: f64,
    /// Ratios above the supplied reference constant.
    pub violations: usize,
    pub reference: Option<f64>,
    /// Failures of the check's own unconditional claim (for example a
    /// negative gap where the inequality admits no constant at all).
    pub unconditional_violations: usize,
}

struct SampleEval {
    ratios: Vec<f64>,
    unconditional_violations: usize,
    degenerate: Option<&'static str>,
}

impl SampleEval {
    fn ratios(ratios: Vec<f64>) -> Self {
        SampleEval { ratios, unconditional_violations: 0, degenerate: None }
    }

    fn degenerate(reason: &'static str) -> Self {
        SampleEval { ratios: Vec::new(), unconditional_violations: 0, degenerate: Some(reason) }
    }
}

fn assemble(
    lemma: &str,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
    evals: Vec<SampleEval>,
) -> InequalityReport {
    let mut ratios: Vec<f64> = Vec::new();
    let mut degenerate_reasons: BTreeMap<String, usize> = BTreeMap::new();
    let mut included = 0usize;
    let mut unconditional = 0usize;
    for e in evals {
        match e.degenerate {
            Some(reason) => {
                *degenerate_reasons.entry(reason.to_owned()).or_insert(0) += 1;
            }
            None => {
                included += 1;
                unconditional += e.unconditional_violations;
                ratios.extend(e.ratios);
            }
        }
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        if ratios.is_empty() {
            0.0
        } else {
            let rank = ((q * ratios.len() as f64).ceil() as usize).clamp(1, ratios.len());
            ratios[rank - 1]
        }
    };
    let c_hat = ratios.last().copied().unwrap_or(0.0);
    let mean = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    let violations = match reference {
        Some(r) => ratios.iter().filter(|&&x| x > r).count(),
        None => 0,
    };
    InequalityReport {
        lemma: lemma.to_owned(),
        samples,
        seed,
        included,
        degenerate: samples - included,
        degenerate_reasons,
        c_hat,
        p99: quantile(0.99),
        p999: quantile(0.999),
        mean_ratio: mean,
        violations,
        reference,
        unconditional_violations: unconditional,
    }
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn run_check<F>(samples: usize, per_sample: F) -> Result<Vec<SampleEval>, VerifyError>
where
    F: Fn(usize) -> Result<SampleEval, VerifyError> + Sync + Send,
{
    (0..samples)
        .into_par_iter()
        .map(per_sample)
        .collect::<Result<Vec<_>, _>>()
}

fn require_hs(metric: &HomogeneousMetric) -> Result<(), VerifyError> {
    if metric.kind() != MetricKind::HebischSikora {
        return Err(VerifyError::WrongMetricKind {
            expected: MetricKind::HebischSikora,
            got: metric.kind(),
        });
    }
    Ok(())
}

fn in_unit_interval(name: &str, v: f64) -> Result<(), VerifyError> {
    if !(v > 0.0 && v < 1.0) {
        return Err(VerifyError::BadParameter(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

// sampling helpers ----------------------------------------------------------

fn uniform_cube(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Uniform draw from the Euclidean ball by rejection from the cube.
fn uniform_ball(rng: &mut impl Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0f64..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

fn uniform_sphere(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| normal_draw(rng)).collect();
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            for x in &mut v {
                *x /= n;
            }
            return v;
        }
    }
}

fn normal_draw(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_element(alg: &Algebra, rng: &mut impl Rng, scale: f64) -> GroupElement {
    GroupElement::new(alg.clone(), uniform_cube(rng, alg.total_dim(), scale)).expect("finite")
}

fn random_line(alg: &Algebra, rng: &mut impl Rng) -> HorizontalLine {
    let base = random_element(alg, rng, 1.0);
    let dir = uniform_sphere(rng, alg.layer_dims()[0]);
    HorizontalLine::new(base, dir).expect("unit direction")
}

fn embedded(alg: &Algebra, first_layer: &[f64], t: f64) -> GroupElement {
    let scaled: Vec<f64> = first_layer.iter().map(|x| x * t).collect();
    GroupElement::horizontal(alg.clone(), &scaled).expect("first-layer length")
}

// checks ---------------------------------------------------------------------

/// Bound on the product polynomials: with `|x_i| <= 1` and `|y_i| <= eta`,
/// each layer polynomial satisfies `|P_k(x, y)| <= C eta`. Ratios
/// `|P_k| / eta` are pooled over `k`.
pub fn check_bch_bound(
    alg: &Algebra,
    eta: f64,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    in_unit_interval("eta", eta)?;
    if alg.step() < 2 {
        return Err(VerifyError::BadParameter(
            "bch-bound needs a group of step at least 2".to_owned(),
        ));
    }
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let n = alg.total_dim();
        let mut ratios = Vec::with_capacity(alg.step() - 1);
        for k in 2..=alg.step() {
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            for i in 1..k {
                let r = alg.layer_range(i);
                let dim = r.len();
                x[r.clone()].copy_from_slice(&uniform_ball(&mut rng, dim, 1.0));
                y[r].copy_from_slice(&uniform_ball(&mut rng, dim, eta));
            }
            let u = GroupElement::new(alg.clone(), x).expect("finite");
            let v = GroupElement::new(alg.clone(), y).expect("finite");
            let pk = GroupElement::bch_polynomial(k, &u, &v)?;
            let norm = pk.iter().map(|a| a * a).sum::<f64>().sqrt();
            ratios.push(norm / eta);
        }
        Ok(SampleEval::ratios(ratios))
    })?;
    Ok(assemble("bch-bound", samples, seed, reference, evals))
}

/// Divergence of almost parallel segments: with `g` in
/// `h delta_ell(B(eta))` and `|u - v| <= eta`, the layered distances along
/// the two segments stay within `C eta ell^i` in the `i`-th power.
pub fn check_close_lines(
    metric: &HomogeneousMetric,
    eta: f64,
    ell: f64,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    in_unit_interval("eta", eta)?;
    if !(ell > 0.0) {
        return Err(VerifyError::BadParameter(format!("ell must be positive, got {ell}")));
    }
    let alg = metric.algebra().clone();
    let n1 = alg.layer_dims()[0];
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let h = random_element(&alg, &mut rng, 1.0).dilate_unchecked(ell);
        let wcoords = uniform_ball(&mut rng, alg.total_dim(), eta);
        let w = GroupElement::new(alg.clone(), wcoords).expect("finite");
        let g = h.multiply(&w.dilate_unchecked(ell))?;
        let mut tries = 0u32;
        let (u, v) = loop {
            let u = uniform_ball(&mut rng, n1, 1.0);
            let delta = uniform_ball(&mut rng, n1, eta);
            let v: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + b).collect();
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                break (u, v);
            }
            tries += 1;
            if tries > 1000 {
                return Ok(SampleEval::degenerate("direction-resample-exhausted"));
            }
        };
        let mut worst = 0.0f64;
        for j in 0..=128 {
            let t = ell * j as f64 / 128.0;
            let pg = g.multiply(&embedded(&alg, &u, t))?;
            let ph = h.multiply(&embedded(&alg, &v, t))?;
            for i in 1..=alg.step() {
                let d = metric.distance(&pg.project(i)?, &ph.project(i)?)?;
                let ratio = d.powi(i as i32) / (eta * ell.powi(i as i32));
                worst = worst.max(ratio);
            }
        }
        Ok(SampleEval::ratios(vec![worst]))
    })?;
    Ok(assemble("close-lines", samples, seed, reference, evals))
}

/// Layered point-to-point bounds give Euclidean ball containment: if
/// `max_i (d(pi_i p, pi_i q) / ell)^i = eta < 1` then
/// `p in q delta_ell(B(C eta))`; the fitted ratio is `rho / eta` with `rho`
/// the actual normalized Euclidean radius.
pub fn check_beta_balls(
    metric: &HomogeneousMetric,
    prop_radius: f64,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    if !(prop_radius > 0.0) {
        return Err(VerifyError::BadParameter(format!(
            "proposal radius must be positive, got {prop_radius}"
        )));
    }
    let alg = metric.algebra().clone();
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let ell = rng.random_range(-1.0f64..1.0).exp2();
        let q = random_element(&alg, &mut rng, 1.0);
        let u = GroupElement::new(alg.clone(), uniform_ball(&mut rng, alg.total_dim(), prop_radius))
            .expect("finite");
        let p = q.multiply(&u.dilate_unchecked(ell))?;
        let mut eta = 0.0f64;
        for i in 1..=alg.step() {
            let d = metric.distance(&p.project(i)?, &q.project(i)?)?;
            eta = eta.max((d / ell).powi(i as i32));
        }
        if eta >= 1.0 {
            return Ok(SampleEval::degenerate("bound-not-small"));
        }
        if eta < 1e-14 {
            return Ok(SampleEval::degenerate("coincident"));
        }
        let diff = q.left_diff(&p)?.dilate_unchecked(1.0 / ell);
        let rho = diff.coords().iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(SampleEval::ratios(vec![rho / eta]))
    })?;
    Ok(assemble("beta-balls", samples, seed, reference, evals))
}

/// The sharpened containment near horizontal lines: with
/// `max_i (d(pi_i p, pi_i L) / ell)^{2i} = eta < eta0`, the point lies in
/// `L delta_ell(B(C sqrt(eta)))`; the fitted ratio is `rho / sqrt(eta)`.
pub fn check_euc_ball(
    metric: &HomogeneousMetric,
    eta0: f64,
    wobble: f64,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    in_unit_interval("eta0", eta0)?;
    if !(wobble > 0.0) {
        return Err(VerifyError::BadParameter(format!("wobble must be positive, got {wobble}")));
    }
    let alg = metric.algebra().clone();
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let ell = rng.random_range(-1.0f64..1.0).exp2();
        let line = random_line(&alg, &mut rng);
        let t0 = rng.random_range(-ell..ell);
        let w = GroupElement::new(alg.clone(), uniform_ball(&mut rng, alg.total_dim(), wobble))
            .expect("finite");
        let p = line.point(t0).multiply(&w.dilate_unchecked(ell))?;

        let mut eta = 0.0f64;
        for i in 1..=alg.step() {
            let (d, _) = dist_to_line(metric, &p.project(i)?, &line.project(i)?)?;
            eta = eta.max((d / ell).powi(2 * i as i32));
        }
        if eta >= eta0 {
            return Ok(SampleEval::degenerate("eta-above-threshold"));
        }
        if eta < 1e-14 {
            return Ok(SampleEval::degenerate("on-line"));
        }

        // minimal normalized Euclidean radius along the line
        let base_inv: Vec<f64> = line.base().coords().iter().map(|x| -x).collect();
        let mut scratch = BchScratch::for_algebra(&alg);
        let mut wbase = vec![0.0; alg.total_dim()];
        bch_into(&alg, &base_inv, p.coords(), &mut wbase, &mut scratch);
        let mut estep = vec![0.0; alg.total_dim()];
        let mut prod = vec![0.0; alg.total_dim()];
        let mut rho_at = |t: f64| -> f64 {
            for (e, v) in estep.iter_mut().zip(line.direction()) {
                *e = -t * v;
            }
            bch_into(&alg, &estep, &wbase, &mut prod, &mut scratch);
            let mut acc = 0.0;
            let mut scale = 1.0;
            for i in 1..=alg.step() {
                scale *= ell;
                for &x in &prod[alg.layer_range(i)] {
                    let y = x / scale;
                    acc += y * y;
                }
            }
            acc.sqrt()
        };
        let t_proj: f64 = wbase
            .iter()
            .zip(line.direction())
            .map(|(x, v)| x * v)
            .sum();
        let r0 = rho_at(t_proj);
        let radius = 2.0 * ell * r0 + 1e-9;
        let (_, rho) = grid_then_golden(&mut rho_at, t_proj - radius, t_proj + radius, 32, 1e-9 * ell);
        let rho = rho.min(r0);
        Ok(SampleEval::ratios(vec![rho / eta.sqrt()]))
    })?;
    Ok(assemble("euc-ball", samples, seed, reference, evals))
}

/// Norm decomposition: `N(g) <= C (N(pi_1 g) + NH(g))`.
pub fn check_pi_nh(
    metric: &HomogeneousMetric,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    let alg = metric.algebra().clone();
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let g = random_element(&alg, &mut rng, 2.0);
        let denom = metric.norm(&g.project(1)?) + metric.nh(&g);
        if denom < 1e-12 {
            return Ok(SampleEval::degenerate("zero-denominator"));
        }
        Ok(SampleEval::ratios(vec![metric.norm(&g) / denom]))
    })?;
    Ok(assemble("pi-nh", samples, seed, reference, evals))
}

/// Non-horizontality lower-bounds line distances:
/// `NH(a^{-1} b)^s / d(a, b)^{s-1} <= C max{d(a, L), d(b, L)}`.
pub fn check_nonhorizontal(
    metric: &HomogeneousMetric,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    let alg = metric.algebra().clone();
    let s = alg.step() as i32;
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let a = random_element(&alg, &mut rng, 1.0);
        let b = random_element(&alg, &mut rng, 1.0);
        let line = random_line(&alg, &mut rng);
        let dab = metric.distance(&a, &b)?;
        if dab < 1e-9 {
            return Ok(SampleEval::degenerate("coincident-pair"));
        }
        let (da, _) = dist_to_line(metric, &a, &line)?;
        let (db, _) = dist_to_line(metric, &b, &line)?;
        let denom = da.max(db);
        if denom < 1e-12 {
            return Ok(SampleEval::degenerate("on-line"));
        }
        let nh = metric.nh(&a.left_diff(&b)?);
        let lhs = nh.powi(s) / dab.powi(s - 1);
        Ok(SampleEval::ratios(vec![lhs / denom]))
    })?;
    Ok(assemble("nonhorizontal", samples, seed, reference, evals))
}

/// Shared sampler for separated tuples inside the unit gauge ball:
/// points proposed in the inscribed box of `{N <= 1/2}`, accepted when all
/// pairwise distances lie in `[lambda, 1]`.
fn separated_tuple(
    metric: &HomogeneousMetric,
    alg: &Algebra,
    rng: &mut impl Rng,
    lambda: f64,
    arity: usize,
) -> Result<Vec<GroupElement>, VerifyError> {
    let eta_m = metric.eta().expect("gauge metric");
    let n = alg.total_dim();
    let mut half_widths = vec![0.0; n];
    for i in 1..=alg.step() {
        let b = 0.5f64.powi(i as i32) * eta_m / (n as f64).sqrt();
        for c in alg.layer_range(i) {
            half_widths[c] = b;
        }
    }
    let mut attempts = 0u64;
    'outer: loop {
        attempts += arity as u64;
        if attempts > REJECTION_BUDGET {
            return Err(VerifyError::RejectionExhausted(REJECTION_BUDGET));
        }
        let pts: Vec<GroupElement> = (0..arity)
            .map(|_| {
                let coords: Vec<f64> = half_widths
                    .iter()
                    .map(|&hw| rng.random_range(-hw..hw))
                    .collect();
                GroupElement::new(alg.clone(), coords).expect("finite")
            })
            .collect();
        for i in 0..arity {
            for j in (i + 1)..arity {
                let d = metric.distance(&pts[i], &pts[j])?;
                if !(lambda..=1.0).contains(&d) {
                    continue 'outer;
                }
            }
        }
        return Ok(pts);
    }
}

/// `sup_t d(pi_i(outer(t)), pi_i(inner image))^{2i}` over a 129-node grid of
/// the outer parameter, with the inner infimum refined per node.
fn sup_segment_gap(
    metric: &HomogeneousMetric,
    outer: &SegmentMap,
    inner: &SegmentMap,
    i: usize,
) -> Result<f64, VerifyError> {
    let pout = outer.project(i)?;
    let pin = inner.project(i)?;
    let mut frame = SegmentFrame::new(metric, &pin);
    let mut fp = vec![0.0; frame.dim()];
    let mut worst = 0.0f64;
    for j in 0..=128 {
        let t = j as f64 / 128.0;
        let z = pout.point(t)?;
        frame.left_coords_into(&z, &mut fp);
        let d = frame.dist(&fp, 12, 1e-6);
        worst = worst.max(d);
    }
    Ok(worst)
}

pub(crate) fn curvature_sample_ratios(
    metric: &HomogeneousMetric,
    pts: &[GroupElement],
    arity: usize,
) -> Result<SampleOutcome, VerifyError> {
    let alg = pts[0].algebra().clone();
    let s = alg.step();
    let chain: f64 = pts
        .windows(2)
        .map(|w| metric.distance(&w[0], &w[1]))
        .collect::<Result<Vec<_>, _>>()?
        .iter()
        .sum();
    let delta = chain - metric.distance(&pts[0], &pts[arity - 1])?;
    if delta < 1e-12 {
        return Ok(SampleOutcome::Degenerate("flat-tuple"));
    }
    let mut ratios = Vec::new();
    match arity {
        3 => {
            // first-layer gap of p2 to the segment p1 -> p3, plus the
            // non-horizontality of each higher layer of p1^{-1} p3
            let seg = SegmentMap::new(pts[0].clone(), &pts[2])?;
            let seg1 = seg.project(1)?;
            let mut frame = SegmentFrame::new(metric, &seg1);
            let mut fp = vec![0.0; frame.dim()];
            frame.left_coords_into(&pts[1].project(1)?, &mut fp);
            let term1 = frame.dist(&fp, 12, 1e-6).powi(2);
            let a13 = pts[0].left_diff(&pts[2])?;
            for i in 2..=s {
                let nh = metric.nh(&a13.project(i)?);
                let lhs = term1 + nh.powi(2 * i as i32);
                ratios.push(lhs / delta);
            }
        }
        4 => {
            let spine = SegmentMap::new(pts[0].clone(), &pts[3])?;
            let a = SegmentMap::new(pts[0].clone(), &pts[2])?;
            let b = SegmentMap::new(pts[2].clone(), &pts[3])?;
            let mut lhs = 0.0;
            for i in 1..=s {
                let p = 2 * i as i32;
                lhs += sup_segment_gap(metric, &a, &spine, i)?.powi(p);
                lhs += sup_segment_gap(metric, &b, &spine, i)?.powi(p);
            }
            ratios.push(lhs / delta);
        }
        5 => {
            let spine = SegmentMap::new(pts[0].clone(), &pts[4])?;
            let mid = SegmentMap::new(pts[2].clone(), &pts[3])?;
            let mut lhs = 0.0;
            for i in 1..=s {
                lhs += sup_segment_gap(metric, &mid, &spine, i)?.powi(2 * i as i32);
            }
            ratios.push(lhs / delta);
        }
        _ => {
            return Err(VerifyError::BadParameter(format!(
                "curvature arity must be 3, 4 or 5, got {arity}"
            )))
        }
    }
    Ok(SampleOutcome::Ratios(ratios))
}

pub(crate) enum SampleOutcome {
    Ratios(Vec<f64>),
    Degenerate(&'static str),
}

/// Alexandrov-style curvature bounds: layered segment gaps against the
/// triangle (arity 3), chain (arity 4), or endpoint-disjoint chain
/// (arity 5) excess, over tuples with pairwise gauge distances in
/// `[lambda, 1]`.
pub fn check_curvature(
    metric: &HomogeneousMetric,
    lambda_sep: f64,
    arity: usize,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    require_hs(metric)?;
    in_unit_interval("lambda", lambda_sep)?;
    if !(3..=5).contains(&arity) {
        return Err(VerifyError::BadParameter(format!(
            "curvature arity must be 3, 4 or 5, got {arity}"
        )));
    }
    let alg = metric.algebra().clone();
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let pts = separated_tuple(metric, &alg, &mut rng, lambda_sep, arity)?;
        match curvature_sample_ratios(metric, &pts, arity)? {
            SampleOutcome::Ratios(r) => Ok(SampleEval::ratios(r)),
            SampleOutcome::Degenerate(reason) => Ok(SampleEval::degenerate(reason)),
        }
    })?;
    let lemma = format!("curvature-{arity}");
    Ok(assemble(&lemma, samples, seed, reference, evals))
}

/// Gauge growth in the top layer: for `N(x, 0)` bounded away from zero and
/// one and small top-layer `y`, `0 <= N(x, y) - N(x, 0) <= C |y|^2`. The
/// lower inequality is unconditional; its failures are counted separately.
pub fn check_hs_taylor(
    metric: &HomogeneousMetric,
    alpha: f64,
    y_scale: f64,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    require_hs(metric)?;
    in_unit_interval("alpha", alpha)?;
    if !(y_scale > 0.0) {
        return Err(VerifyError::BadParameter(format!("y-scale must be positive, got {y_scale}")));
    }
    let alg = metric.algebra().clone();
    if alg.step() < 2 {
        return Err(VerifyError::BadParameter(
            "hs-taylor needs a group of step at least 2".to_owned(),
        ));
    }
    let s = alg.step();
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let n = alg.total_dim();
        let mut coords = vec![0.0; n];
        for i in 1..s {
            for c in alg.layer_range(i) {
                coords[c] = rng.random_range(-1.0..1.0);
            }
        }
        let raw = GroupElement::new(alg.clone(), coords).expect("finite");
        let n0 = metric.norm(&raw);
        if n0 < 1e-9 {
            return Ok(SampleEval::degenerate("tiny-base"));
        }
        let target = rng.random_range(alpha..1.0);
        let x = raw.dilate_unchecked(target / n0);
        let base_norm = metric.norm(&x);

        let top = alg.layer_range(s);
        let y = uniform_ball(&mut rng, top.len(), y_scale);
        let y_norm2: f64 = y.iter().map(|a| a * a).sum();
        if y_norm2 < 1e-28 {
            return Ok(SampleEval::degenerate("tiny-top"));
        }
        let mut shifted = x.coords().to_vec();
        shifted[top].copy_from_slice(&y);
        let xy = GroupElement::new(alg.clone(), shifted).expect("finite");
        let gap = metric.norm(&xy) - base_norm;
        let mut eval = SampleEval::ratios(vec![gap.max(0.0) / y_norm2]);
        if gap < -1e-10 * (1.0 + base_norm) {
            eval.unconditional_violations = 1;
        }
        Ok(eval)
    })?;
    Ok(assemble("hs-taylor", samples, seed, reference, evals))
}

/// Draws a near-line triple with pairwise gauge distances in `[alpha, 1]`.
/// Line parameters are drawn in arc-length units (the embedded direction
/// norm rescales the parameter).
fn near_line_triple(
    metric: &HomogeneousMetric,
    alg: &Algebra,
    rng: &mut impl Rng,
    alpha: f64,
    wobble: f64,
) -> Result<(HorizontalLine, Vec<GroupElement>), VerifyError> {
    let lo = (2.0 * alpha + 0.02).min(0.97);
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if attempts > REJECTION_BUDGET {
            return Err(VerifyError::RejectionExhausted(REJECTION_BUDGET));
        }
        let line = random_line(alg, rng);
        let nu = metric.norm(&embedded(alg, line.direction(), 1.0));
        let tau3 = rng.random_range(lo..0.995);
        let pad = 0.98 * alpha;
        if tau3 <= 2.0 * pad + 1e-3 {
            continue;
        }
        let tau2 = rng.random_range(pad..tau3 - pad);
        let ts = [0.0, tau2 / nu, tau3 / nu];
        let mut pts = Vec::with_capacity(3);
        for t in ts {
            let w = GroupElement::new(alg.clone(), uniform_ball(rng, alg.total_dim(), wobble))
                .expect("finite");
            pts.push(line.point(t).multiply(&w)?);
        }
        let mut ok = true;
        'pairs: for i in 0..3 {
            for j in (i + 1)..3 {
                let d = metric.distance(&pts[i], &pts[j])?;
                if !(alpha..=1.0).contains(&d) {
                    ok = false;
                    break 'pairs;
                }
            }
        }
        if ok {
            return Ok((line, pts));
        }
    }
}

/// Triangle excess near a horizontal line against the layered line
/// distances: `d12 + d23 - d13 <= C max_i max_k d(pi_k p_i, pi_k L)^{2k}`.
pub fn check_sufficiency_triple(
    metric: &HomogeneousMetric,
    alpha: f64,
    wobble: f64,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    require_hs(metric)?;
    in_unit_interval("alpha", alpha)?;
    let alg = metric.algebra().clone();
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let (line, pts) = near_line_triple(metric, &alg, &mut rng, alpha, wobble)?;
        let excess = (metric.distance(&pts[0], &pts[1])? + metric.distance(&pts[1], &pts[2])?
            - metric.distance(&pts[0], &pts[2])?)
        .max(0.0);
        let mut denom = 0.0f64;
        for p in &pts {
            for k in 1..=alg.step() {
                let (d, _) = dist_to_line(metric, &p.project(k)?, &line.project(k)?)?;
                denom = denom.max(d.powi(2 * k as i32));
            }
        }
        if denom < 1e-12 {
            return Ok(SampleEval::degenerate("on-line"));
        }
        Ok(SampleEval::ratios(vec![excess / denom]))
    })?;
    Ok(assemble("sufficiency-triple", samples, seed, reference, evals))
}

/// Paired evaluation of the triangle-excess bound in its line form and its
/// beta form on identical samples: the second report divides the same
/// excess by `beta_hat(B(p_1, 2))^{2s}` instead of the line distances.
pub fn sufficiency_corollary_pair(
    metric: &HomogeneousMetric,
    alpha: f64,
    wobble: f64,
    samples: usize,
    seed: u64,
) -> Result<(InequalityReport, InequalityReport), VerifyError> {
    require_hs(metric)?;
    in_unit_interval("alpha", alpha)?;
    let alg = metric.algebra().clone();
    let pairs = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let (line, pts) = near_line_triple(metric, &alg, &mut rng, alpha, wobble)?;
        let excess = (metric.distance(&pts[0], &pts[1])? + metric.distance(&pts[1], &pts[2])?
            - metric.distance(&pts[0], &pts[2])?)
        .max(0.0);
        let mut denom = 0.0f64;
        for p in &pts {
            for k in 1..=alg.step() {
                let (d, _) = dist_to_line(metric, &p.project(k)?, &line.project(k)?)?;
                denom = denom.max(d.powi(2 * k as i32));
            }
        }
        if denom < 1e-12 {
            return Ok(SampleEval::degenerate("on-line"));
        }
        let mut cfg = BetaConfig::with_seed(seed ^ (idx as u64).wrapping_mul(0x9e37_79b9));
        cfg.restarts = 2;
        let bh = beta_hat_value(metric, &pts, &pts[0], 2.0, &cfg)?;
        let denom2 = bh.powi(2 * alg.step() as i32);
        if denom2 < 1e-14 {
            return Ok(SampleEval::degenerate("beta-zero"));
        }
        Ok(SampleEval::ratios(vec![excess / denom, excess / denom2]))
    })?;
    // split the paired ratios into two reports
    let mut line_form = Vec::with_capacity(samples);
    let mut beta_form = Vec::with_capacity(samples);
    for eval in pairs {
        match eval.degenerate {
            Some(reason) => {
                line_form.push(SampleEval::degenerate(reason));
                beta_form.push(SampleEval::degenerate(reason));
            }
            None => {
                line_form.push(SampleEval::ratios(vec![eval.ratios[0]]));
                beta_form.push(SampleEval::ratios(vec![eval.ratios[1]]));
            }
        }
    }
    Ok((
        assemble("sufficiency-triple", samples, seed, None, line_form),
        assemble("sufficiency-corollary", samples, seed, None, beta_form),
    ))
}

/// Orderability under small excess: the projection of `pi_1(p_2)` onto the
/// line through `pi_1(p_1)` and `pi_1(p_3)` does not overshoot `pi_1(p_3)`.
/// Ratios are overshoot fractions; values above `1` count as violations of
/// the claim.
pub fn check_proj_order(
    metric: &HomogeneousMetric,
    lambda_sep: f64,
    mu: f64,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, VerifyError> {
    require_hs(metric)?;
    in_unit_interval("lambda", lambda_sep)?;
    in_unit_interval("mu", mu)?;
    let alg = metric.algebra().clone();
    let wobble = 0.3 * mu.sqrt();
    let evals = run_check(samples, |idx| {
        let mut rng = stream(seed, idx);
        let mut attempts = 0u64;
        let pts = loop {
            attempts += 1;
            if attempts > 10_000 {
                return Err(VerifyError::RejectionExhausted(REJECTION_BUDGET));
            }
            let (_, pts) = near_line_triple(metric, &alg, &mut rng, lambda_sep, wobble)?;
            let excess = metric.distance(&pts[0], &pts[1])? + metric.distance(&pts[1], &pts[2])?
                - metric.distance(&pts[0], &pts[2])?;
            if excess < mu {
                break pts;
            }
        };
        let a = pts[0].layer(1);
        let b = pts[1].layer(1);
        let c = pts[2].layer(1);
        let axis: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
        let len: f64 = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len < 1e-12 {
            return Ok(SampleEval::degenerate("collinear-degenerate"));
        }
        let along: f64 = b
            .iter()
            .zip(a)
            .zip(&axis)
            .map(|((x, y), ax)| (x - y) * ax / len)
            .sum();
        let ratio = along.abs() / len;
        let mut eval = SampleEval::ratios(vec![ratio]);
        if ratio > 1.0 + 1e-9 {
            eval.unconditional_violations = 1;
        }
        Ok(eval)
    })?;
    Ok(assemble("proj-order", samples, seed, reference, evals))
}
