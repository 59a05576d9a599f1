//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers (visible under `--nocapture`). Criteria cover group
//! arithmetic, norm axioms after calibration, beta correctness against
//! independent references, multiscale decay on a smooth curve, the
//! farthest-insertion diagnostics, the randomized inequality harness, and
//! byte-level CLI determinism.

use std::path::PathBuf;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use carnot::algebra::{Algebra, StratifiedAlgebra};
use carnot::beta::{beta_hat, BetaConfig};
use carnot::carleson::{diameter, gamma_hat, sample_curve, CurveGenerator};
use carnot::group::GroupElement;
use carnot::norms::{HomogeneousMetric, MetricKind};
use carnot::tsp::{farthest_insertion, sufficiency_ratio};
use carnot::verify;

const BUILTINS: [&str; 4] = ["heisenberg(1)", "heisenberg(2)", "engel", "free_step2(3)"];

fn algebra(name: &str) -> Algebra {
    StratifiedAlgebra::builtin(name).unwrap()
}

fn el(alg: &Algebra, coords: Vec<f64>) -> GroupElement {
    GroupElement::new(alg.clone(), coords).unwrap()
}

fn random_el(alg: &Algebra, rng: &mut impl Rng, scale: f64) -> GroupElement {
    let coords: Vec<f64> = (0..alg.total_dim())
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    el(alg, coords)
}

fn rel_err(a: &GroupElement, b: &GroupElement) -> f64 {
    let scale = a
        .coords()
        .iter()
        .chain(b.coords())
        .fold(1.0f64, |m, x| m.max(x.abs()));
    a.max_coord_diff(b) / scale
}

#[test]
fn criterion_1_group_axioms() {
    const TOL: f64 = 1e-9;
    for name in BUILTINS {
        let alg = algebra(name);
        let worst = (0..10_000usize)
            .into_par_iter()
            .map(|idx| {
                let mut rng = ChaCha8Rng::seed_from_u64(1000);
                rng.set_stream(idx as u64);
                let a = random_el(&alg, &mut rng, 2.0);
                let b = random_el(&alg, &mut rng, 2.0);
                let c = random_el(&alg, &mut rng, 2.0);
                let lambda: f64 = rng.random_range(0.2..3.0);
                let mut worst = 0.0f64;

                // associativity
                let ab_c = a.multiply(&b).unwrap().multiply(&c).unwrap();
                let a_bc = a.multiply(&b.multiply(&c).unwrap()).unwrap();
                worst = worst.max(rel_err(&ab_c, &a_bc));

                // identity and inverse
                let id = GroupElement::identity(alg.clone());
                worst = worst.max(rel_err(&a.multiply(&id).unwrap(), &a));
                worst = worst.max(rel_err(&id.multiply(&a).unwrap(), &a));
                let gg = a.multiply(&a.inverse()).unwrap();
                worst = worst.max(gg.coords().iter().fold(0.0f64, |m, x| m.max(x.abs())));

                // dilation automorphism
                let lhs = a.multiply(&b).unwrap().dilate(lambda).unwrap();
                let rhs = a
                    .dilate(lambda)
                    .unwrap()
                    .multiply(&b.dilate(lambda).unwrap())
                    .unwrap();
                worst = worst.max(rel_err(&lhs, &rhs));

                // projection homomorphism
                for i in 1..=alg.step() {
                    let lhs = a.multiply(&b).unwrap().project(i).unwrap();
                    let rhs = a
                        .project(i)
                        .unwrap()
                        .multiply(&b.project(i).unwrap())
                        .unwrap();
                    worst = worst.max(rel_err(&lhs, &rhs));
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        assert!(worst < TOL, "{name}: worst group-axiom error {worst:e}");
        println!("ACCEPTANCE 1 (group axioms) {name}: PASS worst {worst:.3e}");
    }
}

#[test]
fn criterion_2_norm_axioms() {
    for name in BUILTINS {
        let alg = algebra(name);
        for kind in [MetricKind::Infinity, MetricKind::HebischSikora] {
            let (metric, report) =
                HomogeneousMetric::calibrate(kind, alg.clone(), 100_000, 11).unwrap();

            // homogeneity and symmetry at 1e-10
            let mut rng = ChaCha8Rng::seed_from_u64(33);
            let mut worst = 0.0f64;
            for _ in 0..10_000 {
                let g = random_el(&alg, &mut rng, 2.0);
                let lambda: f64 = rng.random_range(0.1..4.0);
                let n = metric.norm(&g);
                let nd = metric.norm(&g.dilate(lambda).unwrap());
                worst = worst.max((nd - lambda * n).abs() / (1.0 + lambda * n));
                let ni = metric.norm(&g.inverse());
                worst = worst.max((ni - n).abs() / (1.0 + n));
            }
            assert!(worst < 1e-10, "{name}/{kind}: homogeneity/symmetry error {worst:e}");

            // calibrated subadditivity: zero violations on a fresh sample
            let violations = (0..100_000usize)
                .into_par_iter()
                .filter(|&idx| {
                    let mut rng = ChaCha8Rng::seed_from_u64(22_222);
                    rng.set_stream(idx as u64);
                    let g = random_el(&alg, &mut rng, 2.0);
                    let h = random_el(&alg, &mut rng, 2.0);
                    let gh = g.multiply(&h).unwrap();
                    let lhs = metric.norm(&gh);
                    let rhs = metric.norm(&g) + metric.norm(&h);
                    lhs > rhs + 1e-12 * (1.0 + rhs)
                })
                .count();
            assert_eq!(
                violations, 0,
                "{name}/{kind}: subadditivity violations on fresh sample"
            );

            // gauge residual
            if kind == MetricKind::HebischSikora {
                let eta = metric.eta().unwrap();
                let mut worst = 0.0f64;
                for _ in 0..10_000 {
                    let g = random_el(&alg, &mut rng, 2.0);
                    let lam = metric.norm(&g);
                    if lam == 0.0 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for i in 1..=alg.step() {
                        let mi: f64 = g.layer(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                        acc += mi * mi / lam.powi(2 * i as i32);
                    }
                    worst = worst.max((acc - eta * eta).abs() / (eta * eta));
                }
                assert!(worst < 1e-10, "{name}: gauge residual {worst:e}");
            }
            println!(
                "ACCEPTANCE 2 (norm axioms) {name}/{kind}: PASS parameter {}",
                report.parameter
            );
        }
    }
}

#[test]
fn criterion_3_beta_correctness() {
    let alg = algebra("heisenberg(1)");
    let metric = HomogeneousMetric::unit_infinity(alg.clone());

    // (a) collinear horizontal points
    let pts: Vec<GroupElement> = (0..1000)
        .map(|k| el(&alg, vec![k as f64 / 999.0, 0.0, 0.0]))
        .collect();
    let center = el(&alg, vec![0.5, 0.0, 0.0]);
    let cfg = BetaConfig { restarts: 2, ..BetaConfig::with_seed(5) };
    let report = beta_hat(&metric, &pts, &center, 1.0, &cfg).unwrap();
    assert!(report.beta_hat < 1e-6, "collinear beta_hat {}", report.beta_hat);

    // (b) stratified dominates classical on random configurations
    let zero = GroupElement::identity(alg.clone());
    let worst_gap = (0..1000usize)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(777);
            rng.set_stream(idx as u64);
            let pts: Vec<GroupElement> =
                (0..8).map(|_| random_el(&alg, &mut rng, 0.9)).collect();
            let mut cfg = BetaConfig::with_seed(idx as u64);
            cfg.restarts = 2;
            let report = beta_hat(&metric, &pts, &zero, 1.5, &cfg).unwrap();
            report.beta_classical - report.beta_hat
        })
        .reduce(|| f64::MIN, f64::max);
    assert!(worst_gap <= 1e-9, "beta_classical exceeded beta_hat by {worst_gap:e}");

    // (c) pinned three-point fixture against the brute-force grid oracle
    // value (sqrt(1/8)/2, reproduced independently in the core oracle test)
    let fixture = vec![
        el(&alg, vec![-1.0, 0.0, 0.0]),
        el(&alg, vec![1.0, 0.0, 0.0]),
        el(&alg, vec![0.0, 0.0, 0.25]),
    ];
    let pinned = 0.125f64.sqrt() / 2.0;
    let report = beta_hat(&metric, &fixture, &zero, 2.0, &BetaConfig::with_seed(3)).unwrap();
    assert!(
        (report.beta_hat - pinned).abs() <= 0.02 * pinned,
        "fixture beta_hat {} vs oracle {pinned}",
        report.beta_hat
    );
    println!(
        "ACCEPTANCE 3 (beta correctness): PASS collinear {:.2e}, worst hat-classical gap {:.2e}, fixture {:.8}",
        report.beta_hat.min(1e-6),
        worst_gap,
        report.beta_hat
    );
}

#[test]
fn criterion_4_necessity_scaling() {
    let alg = algebra("heisenberg(1)");
    let metric = HomogeneousMetric::unit_infinity(alg.clone());
    let cfg = BetaConfig {
        restarts: 0,
        max_iters: 100,
        opt_nodes: 8,
        ..BetaConfig::with_seed(11)
    };

    // circle lift: shell decay and density stability
    let mut per_chain = Vec::new();
    for count in [4096usize, 8192] {
        let sample =
            sample_curve(&alg, &metric, &CurveGenerator::CircleLift { radius: 1.0 }, count)
                .unwrap();
        let gh = gamma_hat(&metric, &sample.points, 3, 7, &cfg).unwrap();
        if count == 4096 {
            let shells: Vec<f64> = gh.breakdown.per_level.iter().map(|l| l.shell_sum).collect();
            for w in shells.windows(2) {
                let ratio = w[0] / w[1];
                assert!(
                    ratio >= 2.0,
                    "shell decay ratio {ratio} below 2 in {shells:?}"
                );
            }
            println!("ACCEPTANCE 4 shells: {shells:?}");
        }
        per_chain.push(gh.value / sample.chain_length);
    }
    let stability = per_chain[1] / per_chain[0];
    assert!(
        (1.0 / 1.1..=1.1).contains(&stability),
        "gamma/chain moved by {stability} under density doubling"
    );

    // horizontal segment: gamma equals the diameter
    let pts: Vec<GroupElement> = (0..64)
        .map(|k| el(&alg, vec![k as f64 / 63.0, 0.0, 0.0]))
        .collect();
    let gh = gamma_hat(&metric, &pts, 0, 7, &cfg).unwrap();
    let diam = diameter(&metric, &pts).unwrap();
    assert!(
        (gh.value - diam).abs() <= 1e-4,
        "segment gamma {} vs diam {diam}",
        gh.value
    );
    println!(
        "ACCEPTANCE 4 (necessity): PASS density stability {stability:.4}, segment gamma-diam {:.2e}",
        (gh.value - diam).abs()
    );
}

/// Exhaustive optimal open-path cost for small instances.
fn brute_force_best_path(metric: &HomogeneousMetric, points: &[GroupElement]) -> f64 {
    let n = points.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dist[i][j] = metric.distance(&points[i], &points[j]).unwrap();
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    fn permute(idx: &mut Vec<usize>, k: usize, dist: &[Vec<f64>], best: &mut f64) {
        if k == idx.len() {
            let mut cost = 0.0;
            for w in idx.windows(2) {
                cost += dist[w[0]][w[1]];
            }
            if cost < *best {
                *best = cost;
            }
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, dist, best);
            idx.swap(k, i);
        }
    }
    permute(&mut idx, 0, &dist, &mut best);
    best
}

#[test]
fn criterion_5_sufficiency_diagnostics() {
    let alg = algebra("heisenberg(1)");
    let metric = HomogeneousMetric::unit_infinity(alg.clone());

    // (a) collinear points: the path is the segment
    let pts: Vec<GroupElement> = (0..64)
        .map(|k| el(&alg, vec![k as f64 / 63.0, 0.0, 0.0]))
        .collect();
    let tour = farthest_insertion(&metric, &pts).unwrap();
    let diam = diameter(&metric, &pts).unwrap();
    assert!((tour.cost - diam).abs() <= 1e-9, "collinear cost {}", tour.cost);

    // (b) heuristic never beats the exhaustive optimum
    let failures: usize = (0..100usize)
        .into_par_iter()
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed as u64);
            let n = 4 + (seed % 5);
            // points in the unit ball of the sup metric
            let pts: Vec<GroupElement> = (0..n)
                .map(|_| loop {
                    let g = random_el(&alg, &mut rng, 1.0);
                    if metric.norm(&g) <= 1.0 {
                        break g;
                    }
                })
                .collect();
            let tour = farthest_insertion(&metric, &pts).unwrap();
            let best = brute_force_best_path(&metric, &pts);
            tour.cost < best - 1e-12
        })
        .count();
    assert_eq!(failures, 0, "heuristic beat the exhaustive optimum");

    // (c) noisy segment: ratio against the regression pin
    // Recorded on the first run of this suite: ratios 1.09..1.36 across the
    // five seeds; the pin is that observed maximum.
    const PINNED_NOISY_RATIO: f64 = 1.36;
    let cfg = BetaConfig { restarts: 1, ..BetaConfig::with_seed(7) };
    let mut ratios = Vec::new();
    for seed in 1..=5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<GroupElement> = (0..64)
            .map(|k| {
                let t = k as f64 / 63.0;
                let nx = 0.01 * normal(&mut rng);
                let ny = 0.01 * normal(&mut rng);
                el(&alg, vec![t + nx, ny, 0.0])
            })
            .collect();
        let diag = sufficiency_ratio(&metric, &pts, 0, 6, &cfg).unwrap();
        assert!(diag.ratio <= 10.0, "seed {seed}: noisy ratio {}", diag.ratio);
        assert!(
            diag.ratio <= PINNED_NOISY_RATIO * 1.5,
            "seed {seed}: ratio {} above pinned band",
            diag.ratio
        );
        ratios.push(diag.ratio);
    }
    println!("ACCEPTANCE 5 (sufficiency): PASS noisy ratios {ratios:?}");
}

fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn criterion_6_lemma_harness() {
    let alg = algebra("heisenberg(1)");
    let (hs, _) =
        HomogeneousMetric::calibrate(MetricKind::HebischSikora, alg.clone(), 20_000, 11).unwrap();
    let seeds = [101u64, 202, 303, 404, 505];
    let n = 10_000;

    type Check = Box<dyn Fn(u64) -> verify::InequalityReport>;
    let alg2 = alg.clone();
    let hs2 = hs.clone();
    let checks: Vec<(&str, Check)> = vec![
        ("bch-bound", Box::new(move |s| verify::check_bch_bound(&alg2, 0.5, n, s, Some(0.5)).unwrap())),
        ("close-lines", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_close_lines(&m, 0.2, 1.0, n, s, None).unwrap())
        }),
        ("beta-balls", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_beta_balls(&m, 0.25, n, s, None).unwrap())
        }),
        ("euc-ball", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_euc_ball(&m, 0.25, 0.02, n, s, None).unwrap())
        }),
        ("pi-nh", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_pi_nh(&m, n, s, None).unwrap())
        }),
        ("nonhorizontal", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_nonhorizontal(&m, n, s, None).unwrap())
        }),
        ("curvature-3", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_curvature(&m, 0.2, 3, n, s, None).unwrap())
        }),
        ("curvature-4", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_curvature(&m, 0.2, 4, n, s, None).unwrap())
        }),
        ("curvature-5", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_curvature(&m, 0.2, 5, n, s, None).unwrap())
        }),
        ("hs-taylor", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_hs_taylor(&m, 0.3, 0.05, n, s, None).unwrap())
        }),
        ("sufficiency-triple", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_sufficiency_triple(&m, 0.3, 0.05, n, s, None).unwrap())
        }),
        ("proj-order", {
            let m = hs2.clone();
            Box::new(move |s| verify::check_proj_order(&m, 0.5, 0.01, n, s, None).unwrap())
        }),
    ];

    for (name, run) in &checks {
        let reports: Vec<verify::InequalityReport> = seeds.iter().map(|&s| run(s)).collect();
        let c_hats: Vec<f64> = reports.iter().map(|r| r.c_hat).collect();
        let max = c_hats.iter().cloned().fold(f64::MIN, f64::max);
        let min = c_hats.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min > 0.0, "{name}: vanished fitted constant");
        assert!(
            max / min <= 2.0,
            "{name}: c_hat spread {} exceeds factor 2 ({c_hats:?})",
            max / min
        );
        for r in &reports {
            assert!(
                (r.degenerate as f64) <= 0.05 * (r.samples as f64),
                "{name}: degenerate rate {}/{}",
                r.degenerate,
                r.samples
            );
            assert_eq!(
                r.unconditional_violations, 0,
                "{name}: unconditional violations"
            );
            if r.reference.is_some() {
                assert_eq!(r.violations, 0, "{name}: violations at reference constant");
            }
        }
        println!(
            "ACCEPTANCE 6 ({name}): PASS c_hat spread x{:.3}, c_hats {:?}",
            max / min,
            c_hats
        );
    }

    // hs-taylor quadratic order: halving the top-layer scale keeps the
    // normalized ratios in place, so the raw gap quarters within 20%.
    let full = verify::check_hs_taylor(&hs, 0.3, 0.05, n, seeds[0], None).unwrap();
    let half = verify::check_hs_taylor(&hs, 0.3, 0.025, n, seeds[0], None).unwrap();
    let order = half.mean_ratio / full.mean_ratio;
    assert!(
        (0.8..=1.2).contains(&order),
        "hs-taylor quadratic order off: {order}"
    );
    println!("ACCEPTANCE 6 (hs-taylor order): PASS ratio {order:.4}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carnot"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    p.push(name);
    p
}

#[test]
fn criterion_7_cli_determinism() {
    let collinear: String = (0..32)
        .map(|k| format!("{},0,0\n", k as f64 / 31.0))
        .collect();
    let points = tmp("acc_points.csv");
    std::fs::write(&points, collinear).unwrap();

    let cases: Vec<(&str, Vec<String>)> = vec![
        (
            "beta",
            vec![
                "beta".into(),
                "--group".into(),
                "heisenberg(1)".into(),
                "--metric".into(),
                "infinity".into(),
                "--lambdas".into(),
                "1,1".into(),
                "--points".into(),
                points.display().to_string(),
                "--center".into(),
                "0.5,0,0".into(),
                "--radius".into(),
                "1".into(),
                "--seed".into(),
                "42".into(),
                "--restarts".into(),
                "3".into(),
            ],
        ),
        (
            "carleson",
            vec![
                "carleson".into(),
                "--group".into(),
                "heisenberg(1)".into(),
                "--metric".into(),
                "infinity".into(),
                "--lambdas".into(),
                "1,1".into(),
                "--points".into(),
                points.display().to_string(),
                "--depth-min".into(),
                "0".into(),
                "--depth-max".into(),
                "4".into(),
                "--seed".into(),
                "7".into(),
            ],
        ),
        (
            "tour",
            vec![
                "tour".into(),
                "--group".into(),
                "heisenberg(1)".into(),
                "--metric".into(),
                "infinity".into(),
                "--lambdas".into(),
                "1,1".into(),
                "--points".into(),
                points.display().to_string(),
            ],
        ),
        (
            "verify",
            vec![
                "verify".into(),
                "--group".into(),
                "heisenberg(1)".into(),
                "--metric".into(),
                "hs".into(),
                "--eta".into(),
                "1".into(),
                "--lemma".into(),
                "curvature".into(),
                "--param".into(),
                "arity=3".into(),
                "--samples".into(),
                "500".into(),
                "--seed".into(),
                "5".into(),
            ],
        ),
        (
            "calibrate",
            vec![
                "calibrate".into(),
                "--group".into(),
                "heisenberg(1)".into(),
                "--metric".into(),
                "hs".into(),
                "--samples".into(),
                "20000".into(),
                "--seed".into(),
                "1".into(),
            ],
        ),
        (
            "sample",
            vec![
                "sample".into(),
                "--group".into(),
                "heisenberg(1)".into(),
                "--generator".into(),
                "circle".into(),
                "--count".into(),
                "64".into(),
            ],
        ),
    ];

    for (name, args) in cases {
        let out_a = tmp(&format!("det_{name}_a.txt"));
        let out_b = tmp(&format!("det_{name}_b.txt"));
        // different thread caps must not change a single byte
        for (out, threads) in [(&out_a, "1"), (&out_b, "2")] {
            let status = bin()
                .args(&args)
                .arg("--threads")
                .arg(threads)
                .arg("--out")
                .arg(out)
                .status()
                .unwrap();
            assert!(status.success(), "{name} failed");
        }
        let a = std::fs::read(&out_a).unwrap();
        let b = std::fs::read(&out_b).unwrap();
        assert_eq!(a, b, "{name}: reports differ between identical runs");
        // randomized commands echo their seed
        if ["beta", "carleson", "verify", "calibrate"].contains(&name) {
            let text = String::from_utf8(a).unwrap();
            assert!(text.contains("seed: "), "{name}: seed not echoed");
        }
        println!("ACCEPTANCE 7 ({name}): PASS byte-identical reports");
    }
}
