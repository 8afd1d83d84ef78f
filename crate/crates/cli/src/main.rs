use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use wtrans::copula::UnitBox;
use wtrans::data::{self, DanubeData};
use wtrans::error::Error;
use wtrans::fit::{self, FitFamily, PseudoSample};
use wtrans::measures::{self, Side, TailMethod};
use wtrans::{rng, Copula, Sample, Transform, WTransformedCopula};

#[derive(Parser, Serialize)]
#[command(name = "wtrans", version, about = "W-transforms and W-transformed copulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Draw a sample from a model (CSV).
    Sample(SampleArgs),
    /// Evaluate cdf, density or box volumes at points read from CSV.
    Eval(EvalArgs),
    /// Tabulate a W-transform on an equispaced grid (CSV).
    Wmap(WmapArgs),
    /// Tail coefficients, MTCM, Spearman's rho or Kendall's tau.
    Measure(MeasureArgs),
    /// Maximum pseudo-likelihood fit.
    Fit(FitArgs),
    /// Parametric bootstrap goodness-of-fit test.
    Gof(TestArgs),
    /// Permutation test of exchangeability.
    Exch(TestArgs),
    /// Rosenblatt transform of data under a fitted model with chi-square Q-Q table (CSV).
    Rosenblatt(FitArgs),
    /// Rerun a published analysis.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Serialize)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    /// Model JSON: {"base": {...}, "margins": [...]} or a bare copula.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum EvalKind {
    Cdf,
    Density,
    /// Rows hold lower corners then upper corners.
    Volume,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Points, one per row, with a header.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "cdf")]
    what: EvalKind,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct WmapArgs {
    /// Transform JSON, e.g. {"type": "pssm", "t": [...], "r": [...], "base": {...}}.
    #[arg(long)]
    model: PathBuf,
    /// Grid size, endpoints included.
    #[arg(long, default_value_t = 1001)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MeasureKind {
    LambdaLower,
    LambdaUpper,
    Mtcm,
    Spearman,
    Kendall,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Analytic,
    EmpiricalLimit,
}

#[derive(Args, Serialize)]
struct MeasureArgs {
    #[arg(long, value_enum)]
    measure: MeasureKind,
    /// Model JSON; mutually exclusive with --data.
    #[arg(long, conflicts_with = "data")]
    model: Option<PathBuf>,
    /// Data CSV, converted to pseudo-observations.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "analytic")]
    method: MethodArg,
    /// Monte Carlo sample size for rank correlations of a model.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Tail level p for the MTCM of a model.
    #[arg(long, default_value_t = 1e-4)]
    p: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FamilyArg {
    Gumbel,
    Khoudraji,
    Wos,
}

impl From<FamilyArg> for FitFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gumbel => FitFamily::Gumbel,
            FamilyArg::Khoudraji => FitFamily::KhoudrajiGumbel,
            FamilyArg::Wos => FitFamily::WOrdinalSum,
        }
    }
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// Data CSV (raw values or pseudo-observations); looked up in
    /// $WTRANS_DATA_DIR when not found.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "wos")]
    family: FamilyArg,
    /// Exchange the two columns before fitting.
    #[arg(long)]
    swap: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct TestArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "wos")]
    family: FamilyArg,
    #[arg(long)]
    swap: bool,
    /// Bootstrap replicates or permutations.
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Analysis {
    Danube,
}

#[derive(Args, Serialize)]
struct ReproduceArgs {
    #[arg(value_enum)]
    analysis: Analysis,
    /// Data file; defaults to the shipped dataset in the data directory.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    swap: bool,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[command(flatten)]
    common: Common,
}

type CliResult<T> = Result<T, Error>;

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn schema_error(path: &Path, e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let msg = msg.strip_prefix("invalid construction: ").unwrap_or(&msg);
    Error::Construction(format!("{}: {msg}", path.display()))
}

/// A W-transformed copula, or a bare copula given identity margins.
fn load_model(path: &Path) -> CliResult<WTransformedCopula> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| schema_error(path, e))?;
    if value.get("base").is_some() {
        return serde_json::from_value(value).map_err(|e| schema_error(path, e));
    }
    let c: Copula = serde_json::from_value(value).map_err(|e| schema_error(path, e))?;
    let d = c.dim();
    WTransformedCopula::new(c, vec![Transform::identity(); d])
}

fn load_data(path: &Path, swap: bool) -> CliResult<Sample> {
    let s = data::read_csv_file(&data::resolve(&path.to_string_lossy()))?;
    Ok(if swap { s.swapped() } else { s })
}

fn load_pseudo(path: &Path, swap: bool) -> CliResult<PseudoSample> {
    fit::pseudo_obs(&load_data(path, swap)?)
}

/// Digest of the command line plus the bytes of every input file.
fn config_hash(cli: &Cli, inputs: &[&Path]) -> String {
    let mut buf = serde_json::to_vec(cli).expect("serialisable arguments");
    for p in inputs {
        let resolved = data::resolve(&p.to_string_lossy());
        buf.extend(std::fs::read(resolved).unwrap_or_default());
    }
    data::sha256_hex(&buf)[..16].to_string()
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> CliResult<()> {
    let io = |e: std::io::Error| Error::Data(e.to_string());
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(io),
        None => std::io::stdout().write_all(bytes).map_err(io),
    }
}

fn emit_json(common: &Common, hash: &str, mut body: Value) -> CliResult<()> {
    let obj = body.as_object_mut().expect("object body");
    obj.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    obj.insert("seed".into(), json!(common.seed));
    obj.insert("config_hash".into(), json!(hash));
    let mut text = serde_json::to_string_pretty(&body).expect("json");
    text.push('\n');
    emit(&common.out, text.as_bytes())
}

fn emit_csv(common: &Common, s: &Sample) -> CliResult<()> {
    let mut buf = vec![];
    data::write_csv(s, &mut buf)?;
    emit(&common.out, &buf)
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("json")
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Sample(a) => {
            let m = load_model(&a.model)?;
            let mut r = rng::seeded(a.common.seed);
            emit_csv(&a.common, &m.sample(a.n, &mut r))
        }
        Command::Eval(a) => {
            let m = load_model(&a.model)?;
            let pts = data::read_csv_file(&a.data)?;
            let d = m.dim();
            let want = if matches!(a.what, EvalKind::Volume) { 2 * d } else { d };
            if pts.d() != want {
                return Err(Error::Data(format!("points have {} columns, expected {want}", pts.d())));
            }
            let values: Vec<Value> = pts
                .rows()
                .map(|r| match a.what {
                    EvalKind::Cdf => json!(m.cdf(r)),
                    EvalKind::Density => match m.density(r) {
                        Ok(v) => json!(v),
                        Err(e) => json!({ "error": e.to_string() }),
                    },
                    EvalKind::Volume => match UnitBox::new(r[..d].to_vec(), r[d..].to_vec()) {
                        Ok(b) => json!(m.volume(&b)),
                        Err(e) => json!({ "error": e.to_string() }),
                    },
                })
                .collect();
            let hash = config_hash(cli, &[&a.model, &a.data]);
            emit_json(&a.common, &hash, json!({ "what": to_json(&a.what), "values": values }))
        }
        Command::Wmap(a) => {
            let text = read_text(&a.model)?;
            let t: Transform = serde_json::from_str(&text).map_err(|e| schema_error(&a.model, e))?;
            if a.n < 2 {
                return Err(Error::Precondition("grid needs at least 2 points".into()));
            }
            let mut s = Sample::with_capacity(2, a.n);
            for i in 0..a.n {
                let u = i as f64 / (a.n - 1) as f64;
                s.push(&[u, t.eval(u)]);
            }
            let mut buf = vec![];
            data::write_csv_with_header(&s, &["u".into(), "w".into()], &mut buf)?;
            emit(&a.common.out, &buf)
        }
        Command::Measure(a) => measure(cli, a),
        Command::Fit(a) => {
            let p = load_pseudo(&a.data, a.swap)?;
            let fit = FitFamily::from(a.family).fit(&p, a.common.seed)?;
            let hash = config_hash(cli, &[&a.data]);
            emit_json(&a.common, &hash, to_json(&fit))
        }
        Command::Gof(a) => {
            let p = load_pseudo(&a.data, a.swap)?;
            let (fit, test) =
                fit::gof_bootstrap(a.family.into(), &p, a.replicates, a.common.seed, a.common.threads)?;
            let mut body = to_json(&test);
            body["params"] = json!(fit.params);
            body["loglik"] = json!(fit.loglik);
            let hash = config_hash(cli, &[&a.data]);
            emit_json(&a.common, &hash, body)
        }
        Command::Exch(a) => {
            let p = load_pseudo(&a.data, a.swap)?;
            let test = fit::exch_test(&p, a.replicates, a.common.seed, a.common.threads)?;
            let hash = config_hash(cli, &[&a.data]);
            emit_json(&a.common, &hash, to_json(&test))
        }
        Command::Rosenblatt(a) => {
            let p = load_pseudo(&a.data, a.swap)?;
            let fit = FitFamily::from(a.family).fit(&p, a.common.seed)?;
            let ros = fit::rosenblatt(&fit.model, &p)?;
            let mut buf = String::from("u1_prime,u2_prime,qq_empirical,qq_chi2\n");
            for (r, (e, t)) in ros.transformed.rows().zip(&ros.qq) {
                buf.push_str(&format!("{:.16e},{:.16e},{e:.16e},{t:.16e}\n", r[0], r[1]));
            }
            emit(&a.common.out, buf.as_bytes())
        }
        Command::Reproduce(a) => reproduce(cli, a),
    }
}

fn measure(cli: &Cli, a: &MeasureArgs) -> CliResult<()> {
    let method = match a.method {
        MethodArg::Analytic => TailMethod::Analytic,
        MethodArg::EmpiricalLimit => TailMethod::EmpiricalLimit,
    };
    let mut r = rng::seeded(a.common.seed);
    let side = |k: MeasureKind| if matches!(k, MeasureKind::LambdaLower) { Side::Lower } else { Side::Upper };
    let body = match (&a.model, &a.data) {
        (Some(path), None) => {
            let m = load_model(path)?;
            match a.measure {
                MeasureKind::LambdaLower | MeasureKind::LambdaUpper => {
                    let t = measures::tail_coeff(&m, side(a.measure), method)?;
                    json!({ "estimate": t.value, "stderr": null, "method": to_json(&t.method),
                            "grid": t.grid, "warning": t.warning })
                }
                MeasureKind::Mtcm => {
                    let e = measures::mtcm(&m, a.p);
                    json!({ "estimate": e.lambda, "stderr": null, "method": "cdf", "b": e.b, "p": e.p })
                }
                MeasureKind::Spearman | MeasureKind::Kendall => {
                    let e = if matches!(a.measure, MeasureKind::Spearman) {
                        measures::spearman_rho(&m, a.n, &mut r)?
                    } else {
                        measures::kendall_tau(&m, a.n, &mut r)?
                    };
                    json!({ "estimate": e.estimate, "stderr": e.stderr, "method": "monte-carlo", "n": a.n })
                }
            }
        }
        (None, Some(path)) => {
            let p = load_pseudo(path, false)?;
            match a.measure {
                MeasureKind::LambdaLower | MeasureKind::LambdaUpper => {
                    let t = measures::tail_coeff_sample(&p.data, side(a.measure))?;
                    json!({ "estimate": t.value, "stderr": null, "method": "empirical", "grid": t.grid })
                }
                MeasureKind::Mtcm => {
                    let e = measures::mtcm_sample(&p.data);
                    json!({ "estimate": e.lambda, "stderr": null, "method": "empirical", "b": e.b, "p": e.p })
                }
                MeasureKind::Spearman => {
                    let e = measures::spearman_rho_sample(&p.data)?;
                    json!({ "estimate": e.estimate, "stderr": e.stderr, "method": "sample" })
                }
                MeasureKind::Kendall => {
                    let e = measures::kendall_tau_sample(&p.data)?;
                    json!({ "estimate": e.estimate, "stderr": e.stderr, "method": "sample" })
                }
            }
        }
        _ => return Err(Error::Precondition("give exactly one of --model or --data".into())),
    };
    let inputs: Vec<&Path> = a.model.iter().chain(a.data.iter()).map(|p| p.as_path()).collect();
    emit_json(&a.common, &config_hash(cli, &inputs), body)
}

fn reproduce(cli: &Cli, a: &ReproduceArgs) -> CliResult<()> {
    let Analysis::Danube = a.analysis;
    let (sample, source) = match &a.data {
        Some(p) => (load_data(p, false)?, p.display().to_string()),
        None => match data::load_danube()? {
            DanubeData::Found(s) => (s, data::data_dir().join(data::DANUBE_FILE).display().to_string()),
            DanubeData::Missing(p) => {
                return Err(Error::Data(format!(
                    "{} not found; set {} or pass --data (a synthetic stand-in ships as {})",
                    p.display(),
                    data::DATA_DIR_ENV,
                    data::DANUBE_SYNTHETIC_FILE
                )))
            }
            DanubeData::Mismatch { path, sha256 } => {
                return Err(Error::Data(format!(
                    "{} has SHA-256 {sha256}, expected {}",
                    path.display(),
                    data::DANUBE_SHA256
                )))
            }
        },
    };
    let sample = if a.swap { sample.swapped() } else { sample };
    let p = fit::pseudo_obs(&sample)?;
    let seed = a.common.seed;
    let gumbel = fit::fit_gumbel_mple(&p)?;
    let wos = fit::fit_wos(&p, seed)?;
    let khoudraji = fit::fit_khoudraji_gumbel(&p, seed)?;
    let lr = fit::lr_test(&wos, &gumbel, 2)?;
    let threads = a.common.threads;
    let (_, gof_gumbel) = fit::gof_bootstrap(FitFamily::Gumbel, &p, a.replicates, seed, threads)?;
    let (_, gof_wos) = fit::gof_bootstrap(FitFamily::WOrdinalSum, &p, a.replicates, seed, threads)?;
    let exch = fit::exch_test(&p, a.replicates, seed, threads)?;
    let body = json!({
        "data": source,
        "n": p.n(),
        "gumbel": { "theta": gumbel.params[0], "loglik": gumbel.loglik },
        "w_ordinal_sum": {
            "alpha1": wos.params[0], "alpha2": wos.params[1], "theta": wos.params[2],
            "loglik": wos.loglik
        },
        "khoudraji_gumbel": {
            "theta": khoudraji.params[0], "s1": khoudraji.params[1], "s2": khoudraji.params[2],
            "loglik": khoudraji.loglik
        },
        "lr_test": to_json(&lr),
        "gof": { "gumbel": to_json(&gof_gumbel), "w_ordinal_sum": to_json(&gof_wos) },
        "exchangeability": to_json(&exch),
        "published": {
            "gumbel_theta": 2.1383, "gumbel_loglik": 278.148,
            "w_ordinal_sum": [2.8437, 2.0412, 21.2635], "w_ordinal_sum_loglik": 284.319,
            "khoudraji_loglik": 281.902, "lr_p_value": 0.0021,
            "gof_p_values": { "gumbel": 0.02048, "w_ordinal_sum": 0.1013 },
            "exchangeability_p_value": 0.0005
        }
    });
    let inputs: Vec<&Path> = a.data.iter().map(|p| p.as_path()).collect();
    emit_json(&a.common, &config_hash(cli, &inputs), body)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } => "domain",
        Error::Range { .. } => "range",
        Error::AtomHasNoDensity(_) => "atom_has_no_density",
        Error::Construction(_) => "schema",
        Error::Precondition(_) => "precondition",
        Error::NonDifferentiable { .. } => "non_differentiable",
        Error::Unsupported(_) => "unsupported",
        Error::NoConvergence(_) => "no_convergence",
        Error::Data(_) => "data",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Sample(a) => a.common.threads,
        Command::Eval(a) => a.common.threads,
        Command::Wmap(a) => a.common.threads,
        Command::Measure(a) => a.common.threads,
        Command::Fit(a) | Command::Rosenblatt(a) => a.common.threads,
        Command::Gof(a) | Command::Exch(a) => a.common.threads,
        Command::Reproduce(a) => a.common.threads,
    };
    // restarts inside fits run on the global pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
