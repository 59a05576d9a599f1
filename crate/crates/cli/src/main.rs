//! Command-line driver: group and metric resolution, point-file handling,
//! and deterministic report documents. Every randomized command echoes its
//! seed; rerunning a command with identical inputs reproduces the output
//! byte for byte.
//!
//! Exit codes: 0 success, 1 usage or parse problem, 2 numerical failure
//! (calibration or rejection-sampling exhaustion), 3 missing or unreadable
//! file.

mod io;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use carnot::algebra::Algebra;
use carnot::beta::{beta_hat, BetaConfig};
use carnot::carleson::{gamma_hat, sample_curve, CurveGenerator};
use carnot::group::GroupElement;
use carnot::norms::{HomogeneousMetric, MetricKind};
use carnot::tsp::{farthest_insertion, sufficiency_ratio};
use carnot::verify::{self, InequalityReport, VerifyError};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(..) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(p, e) => write!(f, "io error: {}: {e}", p.display()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::RejectionExhausted(_) => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "carnot", version, about = "Stratified-group curve analysis toolkit")]
struct Cli {
    /// Cap the worker thread count for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricKindArg {
    Infinity,
    Hs,
}

#[derive(Args)]
struct MetricArgs {
    /// Builtin group name (heisenberg(k), engel, free_step2(r)) or a path
    /// to a group-spec file.
    #[arg(long)]
    group: String,
    /// Norm family.
    #[arg(long, value_enum, default_value = "infinity")]
    metric: MetricKindArg,
    /// Gauge radius for the hs metric; omit to calibrate.
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated layer weights for the infinity metric; omit to use
    /// weight 1 on the first layer and calibrate the rest.
    #[arg(long)]
    lambdas: Option<String>,
    /// Pair count for on-the-fly calibration when no parameters are given.
    #[arg(long, default_value_t = 20_000)]
    calibrate_samples: usize,
    #[arg(long, default_value_t = 1)]
    calibrate_seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Stratified and classical beta numbers of a point file over one ball.
    Beta {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        points: PathBuf,
        /// Ball center, comma-separated coordinates.
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiscale beta sum and gamma-hat over a depth window.
    Carleson {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        depth_min: i32,
        #[arg(long)]
        depth_max: i32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-level table alone as CSV.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Farthest-insertion covering path of a point file.
    Tour {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        points: PathBuf,
        /// Also report cost / gamma_hat over this depth window.
        #[arg(long)]
        depth_min: Option<i32>,
        #[arg(long)]
        depth_max: Option<i32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized verification of one quantitative inequality.
    Verify {
        #[command(flatten)]
        metric: MetricArgs,
        /// One of: bch-bound, close-lines, beta-balls, euc-ball, pi-nh,
        /// nonhorizontal, curvature, hs-taylor, sufficiency-triple,
        /// proj-order.
        #[arg(long)]
        lemma: String,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Lemma parameters as key=value (for example --param eta=0.3).
        #[arg(long = "param")]
        params: Vec<String>,
        /// Reference constant; ratios above it count as violations.
        #[arg(long)]
        reference: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Subadditivity calibration of a norm family on a group.
    Calibrate {
        /// Builtin group name or group-spec path.
        #[arg(long)]
        group: String,
        #[arg(long, value_enum, default_value = "hs")]
        metric: MetricKindArg,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic curve samples as a points CSV.
    Sample {
        /// Builtin group name or group-spec path.
        #[arg(long)]
        group: String,
        /// segment | circle | zigzag
        #[arg(long)]
        generator: String,
        /// Number of sample points.
        #[arg(long)]
        count: usize,
        /// Generator parameters (radius=, corners=, to=x,y,z).
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn resolve_metric(args: &MetricArgs, alg: &Algebra) -> Result<(HomogeneousMetric, String), CliError> {
    match args.metric {
        MetricKindArg::Hs => {
            if let Some(eta) = args.eta {
                let m = HomogeneousMetric::hebisch_sikora(alg.clone(), eta)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let d = m.describe();
                Ok((m, d))
            } else {
                let (m, report) = HomogeneousMetric::calibrate(
                    MetricKind::HebischSikora,
                    alg.clone(),
                    args.calibrate_samples,
                    args.calibrate_seed,
                )
                .map_err(|e| CliError::Numerical(e.to_string()))?;
                let d = format!(
                    "{} (calibrated samples={} seed={})",
                    m.describe(),
                    report.samples,
                    report.seed
                );
                Ok((m, d))
            }
        }
        MetricKindArg::Infinity => {
            if let Some(spec) = &args.lambdas {
                let lambdas = spec
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Usage(format!("bad --lambdas list `{spec}`")))?;
                let m = HomogeneousMetric::infinity(alg.clone(), lambdas)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let d = m.describe();
                Ok((m, d))
            } else {
                let (m, report) = HomogeneousMetric::calibrate(
                    MetricKind::Infinity,
                    alg.clone(),
                    args.calibrate_samples,
                    args.calibrate_seed,
                )
                .map_err(|e| CliError::Numerical(e.to_string()))?;
                let d = format!(
                    "{} (calibrated samples={} seed={})",
                    m.describe(),
                    report.samples,
                    report.seed
                );
                Ok((m, d))
            }
        }
    }
}

fn parse_center(alg: &Algebra, spec: &str) -> Result<GroupElement, CliError> {
    let coords = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("bad --center list `{spec}`")))?;
    GroupElement::new(alg.clone(), coords).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for item in raw {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param needs key=value, got `{item}`")))?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

fn param_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64, CliError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Usage(format!("--param {key}={v} is not a number"))),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| CliError::Io(path.to_path_buf(), e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Beta { metric, points, center, radius, seed, restarts, out } => {
            let alg = io::resolve_group(&metric.group)?;
            let (m, metric_desc) = resolve_metric(&metric, &alg)?;
            let text = io::read_file(&points)?;
            let pts = io::parse_points(&alg, &text, &points.display().to_string())?;
            let x = parse_center(&alg, &center)?;
            if !(radius > 0.0) {
                return Err(CliError::Usage(format!("--radius must be positive, got {radius}")));
            }
            let cfg = BetaConfig { restarts, seed, ..BetaConfig::default() };
            let report = beta_hat(&m, &pts, &x, radius, &cfg)
                .map_err(|e| CliError::Usage(e.to_string()))?;

            let mut doc = String::new();
            let _ = writeln!(doc, "command: beta");
            let _ = writeln!(doc, "group: {}", alg.name());
            let _ = writeln!(doc, "metric: {metric_desc}");
            let _ = writeln!(doc, "points: {}", points.display());
            let _ = writeln!(doc, "points_count: {}", pts.len());
            let _ = writeln!(doc, "center: {center}");
            let _ = writeln!(doc, "radius: {radius}");
            let _ = writeln!(doc, "seed: {seed}");
            let _ = writeln!(doc, "restarts: {restarts}");
            let _ = writeln!(doc, "in_ball: {}", report.in_ball);
            let _ = writeln!(doc, "beta_hat: {}", report.beta_hat);
            let _ = writeln!(doc, "beta_classical: {}", report.beta_classical);
            let _ = writeln!(doc, "per_layer_sup: {}", join_floats(&report.per_layer_sup));
            match &report.best_line {
                Some(line) => {
                    let _ = writeln!(doc, "best_line_base: {}", join_floats(line.base().coords()));
                    let _ = writeln!(doc, "best_line_direction: {}", join_floats(line.direction()));
                }
                None => {
                    let _ = writeln!(doc, "best_line_base: -");
                    let _ = writeln!(doc, "best_line_direction: -");
                }
            }
            let _ = writeln!(doc, "starts_used: {}", report.starts_used);
            let _ = writeln!(doc, "converged: {}", report.converged);
            emit(out.as_deref(), &doc)
        }

        Command::Carleson { metric, points, depth_min, depth_max, seed, restarts, out, csv_out } => {
            let alg = io::resolve_group(&metric.group)?;
            let (m, metric_desc) = resolve_metric(&metric, &alg)?;
            let text = io::read_file(&points)?;
            let pts = io::parse_points(&alg, &text, &points.display().to_string())?;
            let cfg = BetaConfig { restarts, seed, ..BetaConfig::default() };
            let gh = gamma_hat(&m, &pts, depth_min, depth_max, &cfg)
                .map_err(|e| CliError::Usage(e.to_string()))?;

            let mut csv = String::from("level,ball_count,shell_sum\n");
            for level in &gh.breakdown.per_level {
                let _ = writeln!(csv, "{},{},{}", level.level, level.ball_count, level.shell_sum);
            }

            let mut doc = String::new();
            let _ = writeln!(doc, "command: carleson");
            let _ = writeln!(doc, "group: {}", alg.name());
            let _ = writeln!(doc, "metric: {metric_desc}");
            let _ = writeln!(doc, "points: {}", points.display());
            let _ = writeln!(doc, "points_count: {}", pts.len());
            let _ = writeln!(doc, "depth_min: {depth_min}");
            let _ = writeln!(doc, "depth_max: {depth_max}");
            let _ = writeln!(doc, "seed: {seed}");
            let _ = writeln!(doc, "restarts: {restarts}");
            let _ = writeln!(doc, "diam: {}", gh.diam);
            let _ = writeln!(doc, "carleson_total: {}", gh.breakdown.total);
            let _ = writeln!(doc, "gamma_hat: {}", gh.value);
            let _ = writeln!(doc, "levels_csv:");
            doc.push_str(&csv);
            if let Some(csv_path) = &csv_out {
                std::fs::write(csv_path, &csv).map_err(|e| CliError::Io(csv_path.clone(), e))?;
            }
            emit(out.as_deref(), &doc)
        }

        Command::Tour { metric, points, depth_min, depth_max, seed, out } => {
            let alg = io::resolve_group(&metric.group)?;
            let (m, metric_desc) = resolve_metric(&metric, &alg)?;
            let text = io::read_file(&points)?;
            let pts = io::parse_points(&alg, &text, &points.display().to_string())?;
            let tour = farthest_insertion(&m, &pts).map_err(|e| CliError::Usage(e.to_string()))?;

            let mut doc = String::new();
            let _ = writeln!(doc, "command: tour");
            let _ = writeln!(doc, "group: {}", alg.name());
            let _ = writeln!(doc, "metric: {metric_desc}");
            let _ = writeln!(doc, "points: {}", points.display());
            let _ = writeln!(doc, "points_count: {}", pts.len());
            let _ = writeln!(doc, "seed: {seed}");
            let _ = writeln!(doc, "cost: {}", tour.cost);
            let ordering: Vec<String> = tour.ordering.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(doc, "ordering: {}", ordering.join(","));
            if let (Some(lo), Some(hi)) = (depth_min, depth_max) {
                let cfg = BetaConfig { restarts: 2, seed, ..BetaConfig::default() };
                let diag = sufficiency_ratio(&m, &pts, lo, hi, &cfg)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let _ = writeln!(doc, "gamma_hat: {}", diag.gamma.value);
                let _ = writeln!(doc, "sufficiency_ratio: {}", diag.ratio);
            }
            emit(out.as_deref(), &doc)
        }

        Command::Verify { metric, lemma, samples, seed, params, reference, out } => {
            let alg = io::resolve_group(&metric.group)?;
            let (m, metric_desc) = resolve_metric(&metric, &alg)?;
            let map = parse_params(&params)?;
            let report = run_lemma(&alg, &m, &lemma, &map, samples, seed, reference)?;

            let mut doc = String::new();
            let _ = writeln!(doc, "command: verify");
            let _ = writeln!(doc, "lemma: {}", report.lemma);
            let _ = writeln!(doc, "group: {}", alg.name());
            let _ = writeln!(doc, "metric: {metric_desc}");
            let _ = writeln!(doc, "samples: {}", report.samples);
            let _ = writeln!(doc, "seed: {}", report.seed);
            let params_desc: Vec<String> = map.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                doc,
                "params: {}",
                if params_desc.is_empty() { "-".to_owned() } else { params_desc.join(" ") }
            );
            let _ = writeln!(
                doc,
                "reference: {}",
                reference.map(|r| r.to_string()).unwrap_or_else(|| "none".to_owned())
            );
            let _ = writeln!(doc, "included: {}", report.included);
            let _ = writeln!(doc, "degenerate: {}", report.degenerate);
            let reasons: Vec<String> = report
                .degenerate_reasons
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(
                doc,
                "degenerate_reasons: {}",
                if reasons.is_empty() { "-".to_owned() } else { reasons.join(" ") }
            );
            let _ = writeln!(doc, "c_hat: {}", report.c_hat);
            let _ = writeln!(doc, "p99: {}", report.p99);
            let _ = writeln!(doc, "p99_9: {}", report.p999);
            let _ = writeln!(doc, "mean_ratio: {}", report.mean_ratio);
            let _ = writeln!(doc, "violations: {}", report.violations);
            let _ = writeln!(doc, "unconditional_violations: {}", report.unconditional_violations);
            emit(out.as_deref(), &doc)
        }

        Command::Calibrate { group, metric, samples, seed, out } => {
            let alg = io::resolve_group(&group)?;
            let kind = match metric {
                MetricKindArg::Hs => MetricKind::HebischSikora,
                MetricKindArg::Infinity => MetricKind::Infinity,
            };
            let (m, report) = HomogeneousMetric::calibrate(kind, alg.clone(), samples, seed)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let mut doc = String::new();
            let _ = writeln!(doc, "command: calibrate");
            let _ = writeln!(doc, "group: {}", alg.name());
            let _ = writeln!(doc, "kind: {}", report.kind);
            let _ = writeln!(doc, "samples: {}", report.samples);
            let _ = writeln!(doc, "seed: {}", report.seed);
            let _ = writeln!(doc, "parameter: {}", report.parameter);
            let _ = writeln!(doc, "metric: {}", m.describe());
            let _ = writeln!(doc, "probes:");
            let _ = writeln!(doc, "parameter,violations,worst_excess");
            for p in &report.probes {
                let _ = writeln!(doc, "{},{},{}", p.parameter, p.violations, p.worst_excess);
            }
            emit(out.as_deref(), &doc)
        }

        Command::Sample { group, generator, count, params, out } => {
            let alg = io::resolve_group(&group)?;
            let m = HomogeneousMetric::unit_infinity(alg.clone());
            let map = parse_params(&params)?;
            let gen = match generator.as_str() {
                "segment" => {
                    let to_spec = map
                        .get("to")
                        .cloned()
                        .unwrap_or_else(|| default_segment_end(&alg));
                    let to = parse_center(&alg, &to_spec)?;
                    CurveGenerator::Segment { from: GroupElement::identity(alg.clone()), to }
                }
                "circle" => CurveGenerator::CircleLift {
                    radius: param_f64(&map, "radius", 1.0)?,
                },
                "zigzag" => {
                    let corners = param_f64(&map, "corners", 3.0)? as usize;
                    CurveGenerator::Zigzag { corners }
                }
                other => return Err(CliError::Usage(format!("unknown generator `{other}`"))),
            };
            let sample = sample_curve(&alg, &m, &gen, count)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            emit(out.as_deref(), &io::format_points(&sample.points))
        }
    }
}

fn default_segment_end(alg: &Algebra) -> String {
    let mut coords = vec![0.0; alg.total_dim()];
    coords[0] = 1.0;
    coords
        .iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn check_param_keys(
    lemma: &str,
    params: &BTreeMap<String, String>,
    accepted: &[&str],
) -> Result<(), CliError> {
    for key in params.keys() {
        if !accepted.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "lemma `{lemma}` does not take --param {key}; accepted: {}",
                if accepted.is_empty() { "none".to_owned() } else { accepted.join(", ") }
            )));
        }
    }
    Ok(())
}

fn run_lemma(
    alg: &Algebra,
    metric: &HomogeneousMetric,
    lemma: &str,
    params: &BTreeMap<String, String>,
    samples: usize,
    seed: u64,
    reference: Option<f64>,
) -> Result<InequalityReport, CliError> {
    let accepted: &[&str] = match lemma {
        "bch-bound" => &["eta"],
        "close-lines" => &["eta", "ell"],
        "beta-balls" => &["radius"],
        "euc-ball" => &["eta0", "wobble"],
        "pi-nh" | "nonhorizontal" => &[],
        "curvature" => &["lambda", "arity"],
        "hs-taylor" => &["alpha", "y-scale"],
        "sufficiency-triple" => &["alpha", "wobble"],
        "proj-order" => &["lambda", "mu"],
        other => return Err(CliError::Usage(format!("unknown lemma id `{other}`"))),
    };
    check_param_keys(lemma, params, accepted)?;
    let report = match lemma {
        "bch-bound" => {
            let eta = param_f64(params, "eta", 0.5)?;
            verify::check_bch_bound(alg, eta, samples, seed, reference)?
        }
        "close-lines" => {
            let eta = param_f64(params, "eta", 0.2)?;
            let ell = param_f64(params, "ell", 1.0)?;
            verify::check_close_lines(metric, eta, ell, samples, seed, reference)?
        }
        "beta-balls" => {
            let radius = param_f64(params, "radius", 0.25)?;
            verify::check_beta_balls(metric, radius, samples, seed, reference)?
        }
        "euc-ball" => {
            let eta0 = param_f64(params, "eta0", 0.25)?;
            let wobble = param_f64(params, "wobble", 0.02)?;
            verify::check_euc_ball(metric, eta0, wobble, samples, seed, reference)?
        }
        "pi-nh" => verify::check_pi_nh(metric, samples, seed, reference)?,
        "nonhorizontal" => verify::check_nonhorizontal(metric, samples, seed, reference)?,
        "curvature" => {
            let lambda = param_f64(params, "lambda", 0.2)?;
            let arity = param_f64(params, "arity", 4.0)? as usize;
            verify::check_curvature(metric, lambda, arity, samples, seed, reference)?
        }
        "hs-taylor" => {
            let alpha = param_f64(params, "alpha", 0.3)?;
            let y_scale = param_f64(params, "y-scale", 0.05)?;
            verify::check_hs_taylor(metric, alpha, y_scale, samples, seed, reference)?
        }
        "sufficiency-triple" => {
            let alpha = param_f64(params, "alpha", 0.3)?;
            let wobble = param_f64(params, "wobble", 0.05)?;
            verify::check_sufficiency_triple(metric, alpha, wobble, samples, seed, reference)?
        }
        "proj-order" => {
            let lambda = param_f64(params, "lambda", 0.4)?;
            let mu = param_f64(params, "mu", 0.01)?;
            verify::check_proj_order(metric, lambda, mu, samples, seed, reference)?
        }
        _ => unreachable!("lemma id validated above"),
    };
    Ok(report)
}
