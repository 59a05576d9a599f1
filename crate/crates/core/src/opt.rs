//! Internal derivative-free minimizers: a bracketed 1-D search (coarse grid
//! plus golden-section refinement) and a Nelder-Mead simplex with a
//! projection hook for constrained parameterizations.

/// Golden-section minimization of `f` on `[lo, hi]` to absolute x-tolerance.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol_x: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol_x {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coarse grid over `[lo, hi]` followed by golden-section refinement around
/// the best node. The grid guards against the objective not being unimodal.
pub(crate) fn grid_then_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    nodes: usize,
    tol_x: f64,
) -> (f64, f64) {
    debug_assert!(nodes >= 2);
    let h = (hi - lo) / (nodes - 1) as f64;
    let mut best_x = lo;
    let mut best_f = f(lo);
    for k in 1..nodes {
        let x = lo + h * k as f64;
        let fx = f(x);
        if fx < best_f {
            best_f = fx;
            best_x = x;
        }
    }
    let a = (best_x - h).max(lo);
    let b = (best_x + h).min(hi);
    let (x, fx) = golden_min(&mut f, a, b, tol_x);
    if fx < best_f {
        (x, fx)
    } else {
        (best_x, best_f)
    }
}

pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub converged: bool,
    #[allow(dead_code)]
    pub evals: usize,
}

/// Nelder-Mead with standard coefficients. `project` is applied to every
/// candidate point before evaluation, so constraint handling (clamping,
/// renormalization) stays inside the parameterization.
pub(crate) fn nelder_mead<F, P>(
    mut f: F,
    mut project: P,
    x0: &[f64],
    steps: &[f64],
    max_iters: usize,
    ftol: f64,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&mut [f64]),
{
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let n = x0.len();
    let mut evals = 0usize;
    let eval = |x: &mut Vec<f64>, f: &mut F, project: &mut P, evals: &mut usize| -> f64 {
        project(x);
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut v0 = x0.to_vec();
    let f0 = eval(&mut v0, &mut f, &mut project, &mut evals);
    simplex.push((v0, f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let fv = eval(&mut v, &mut f, &mut project, &mut evals);
        simplex.push((v, fv));
    }

    let mut converged = false;
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n].0)
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let fr = eval(&mut reflected, &mut f, &mut project, &mut evals);

        if fr < simplex[0].1 {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(c, r)| c + GAMMA * (r - c))
                .collect();
            let fe = eval(&mut expanded, &mut f, &mut project, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (towards, f_towards) = if fr < simplex[n].1 {
                (reflected.clone(), fr)
            } else {
                (simplex[n].0.clone(), simplex[n].1)
            };
            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(&towards)
                .map(|(c, w)| c + RHO * (w - c))
                .collect();
            let fc = eval(&mut contracted, &mut f, &mut project, &mut evals);
            if fc < f_towards {
                simplex[n] = (contracted, fc);
            } else {
                let best_point = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let mut shrunk: Vec<f64> = best_point
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, v)| b + SIGMA * (v - b))
                        .collect();
                    let fs = eval(&mut shrunk, &mut f, &mut project, &mut evals);
                    *entry = (shrunk, fs);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let (x, fx) = simplex.swap_remove(0);
    SimplexResult { x, fx, converged, evals }
}

/// Top principal direction of a point cloud via power iteration on the
/// covariance matrix. Falls back to the first axis for degenerate clouds.
pub(crate) fn principal_direction(points: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut axis = vec![0.0; dim];
    axis[0] = 1.0;
    if points.len() < 2 || dim == 0 {
        return axis;
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(*p) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= points.len() as f64;
    }
    let mut cov = vec![0.0; dim * dim];
    for p in points {
        for i in 0..dim {
            let di = p[i] - mean[i];
            for j in 0..dim {
                cov[i * dim + j] += di * (p[j] - mean[j]);
            }
        }
    }
    let scale = cov.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return axis;
    }
    // Deterministic start with all coordinates active.
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + 0.1 * i as f64).collect();
    normalize(&mut v);
    for _ in 0..64 {
        let mut w = vec![0.0; dim];
        for i in 0..dim {
            for j in 0..dim {
                w[i] += cov[i * dim + j] * v[j];
            }
        }
        if normalize(&mut w) == 0.0 {
            return axis;
        }
        v = w;
    }
    v
}

pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}
