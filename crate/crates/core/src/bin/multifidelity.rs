//! Command-line front end: data generation, fitting, prediction, grid search
//! and the direct-vs-transfer benchmark.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use multifidelity::config::RunConfig;
use multifidelity::dataset::{self, Dataset, DatasetError, Origin};
use multifidelity::model::{read_features, ModelFile};
use multifidelity::protocol::{self, ProtocolError};
use multifidelity::sourcegen::{self, GridSpec, SourceGenError, SourceModelConfig};
use multifidelity::svr::{self, GridSearch, SolverOptions, SvrError, SvrParams};
use multifidelity::transfer::{self, Loss, TransferConfig, TransferError};

#[derive(Parser, Debug)]
#[command(name = "multifidelity", version, about = "Transfer-learned SVR surrogates for printed line width")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw. A random seed is chosen and logged when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the benchmark protocol.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Source,
    SyntheticTarget,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossArg {
    Linear,
    Square,
    Exponential,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Loss {
        match l {
            LossArg::Linear => Loss::Linear,
            LossArg::Square => Loss::Square,
            LossArg::Exponential => Loss::Exponential,
        }
    }
}

#[derive(clap::Args, Debug, Default)]
struct GridArgs {
    #[arg(long)]
    f_min: Option<f64>,
    #[arg(long)]
    f_max: Option<f64>,
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    n_f: Option<usize>,
    #[arg(long)]
    n_s: Option<usize>,
}

impl GridArgs {
    fn apply(&self, mut g: GridSpec) -> GridSpec {
        if let Some(v) = self.f_min {
            g.f_range.0 = v;
        }
        if let Some(v) = self.f_max {
            g.f_range.1 = v;
        }
        if let Some(v) = self.s_min {
            g.s_range.0 = v;
        }
        if let Some(v) = self.s_max {
            g.s_range.1 = v;
        }
        if let Some(v) = self.n_f {
            g.n_f = v;
        }
        if let Some(v) = self.n_s {
            g.n_s = v;
        }
        g
    }
}

#[derive(clap::Args, Debug, Default)]
struct SvrArgs {
    /// Fixed C; with --gamma and --epsilon skips the grid search.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// KKT tolerance of the solver, mm.
    #[arg(long)]
    tol: Option<f64>,
}

impl SvrArgs {
    fn fixed(&self, cfg: &RunConfig) -> Option<SvrParams> {
        match (self.c, self.gamma, self.epsilon) {
            (Some(c), Some(gamma), Some(epsilon)) => Some(SvrParams { c, gamma, epsilon }),
            (None, None, None) => cfg.svr,
            _ => {
                let base = cfg.svr.unwrap_or_default();
                Some(SvrParams {
                    c: self.c.unwrap_or(base.c),
                    gamma: self.gamma.unwrap_or(base.gamma),
                    epsilon: self.epsilon.unwrap_or(base.epsilon),
                })
            }
        }
    }

    fn search(&self, cfg: &RunConfig) -> GridSearch {
        let mut s = cfg.search.clone();
        if let Some(t) = self.tol {
            s.tol = t;
        }
        s
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a source-model or synthetic-target dataset CSV.
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        /// Nozzle-to-platen distance(s), mm.
        #[arg(long, value_delimiter = ',', default_value = "0.7")]
        h: Vec<f64>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        filament_diameter: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        offset: Option<f64>,
        #[arg(long)]
        noise_std: Option<f64>,
        #[arg(long)]
        band_min: Option<f64>,
        #[arg(long)]
        band_max: Option<f64>,
    },
    /// Fit an SVR on target data only.
    FitDirect {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        svr: SvrArgs,
    },
    /// Fit a TrAdaBoost.R2 ensemble from source and target CSVs.
    FitTransfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
        #[command(flatten)]
        svr: SvrArgs,
    },
    /// Predict widths for the (F, S) rows of a CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Cross-validated brute-force search over the SVR grid.
    GridSearch {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k_folds: Option<usize>,
    },
    /// Direct learning curve, transfer sweep and comparison report.
    Benchmark {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        eval_reps: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(m: impl ToString) -> Self {
        Failure { code: 2, message: m.to_string() }
    }
    fn data(m: impl ToString) -> Self {
        Failure { code: 3, message: m.to_string() }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        Failure::data(e)
    }
}

impl From<SourceGenError> for Failure {
    fn from(e: SourceGenError) -> Self {
        match e {
            SourceGenError::NonPositiveInput { .. } => Failure::data(e),
            _ => Failure::usage(e),
        }
    }
}

impl From<SvrError> for Failure {
    fn from(e: SvrError) -> Self {
        match e {
            SvrError::DidNotConverge { .. } => Failure { code: 4, message: e.to_string() },
            SvrError::InvalidParams(_) | SvrError::EmptyGrid => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}

impl From<TransferError> for Failure {
    fn from(e: TransferError) -> Self {
        match e {
            TransferError::Svr(inner) => inner.into(),
            TransferError::InvalidConfig(_) => Failure::usage(e),
            TransferError::EnsembleEmpty(_) => Failure { code: 4, message: e.to_string() },
            _ => Failure::data(e),
        }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Svr(inner) => inner.into(),
            ProtocolError::Transfer(inner) => inner.into(),
            ProtocolError::InvalidGrid(_) => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::data(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(io_err(path))
}

fn load(path: &Path, origin: Origin) -> Result<Dataset, Failure> {
    dataset::load_csv_as(path, origin).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn single_height(data: &Dataset, what: &str) -> Result<f64, Failure> {
    match data.heights().as_slice() {
        [h] => Ok(*h),
        hs => Err(Failure::data(format!("{what} must contain exactly one h, found {hs:?}"))),
    }
}

fn choose_params(svr: &SvrArgs, cfg: &RunConfig, data: &Dataset, seed: u64) -> Result<SvrParams, Failure> {
    if let Some(p) = svr.fixed(cfg) {
        return Ok(p);
    }
    let r = svr.search(cfg).run(data, &vec![1.0; data.len()], seed)?;
    log::info!("event=grid_search best_c={} best_gamma={} best_epsilon={} cv_rmse={:.6}", r.best.c, r.best.gamma, r.best.epsilon, r.scores[r.best_index]);
    Ok(r.best)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::usage)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or_else(rand::random);
    log::info!("event=seed seed={seed}");
    let jobs = cli.jobs.or(cfg.jobs);

    match cli.command {
        Command::Generate { kind, h, out, filament_diameter, grid, alpha, p, offset, noise_std, band_min, band_max } => {
            let spec = grid.apply(cfg.target_grid);
            spec.validate()?;
            let mut all = Dataset::empty();
            for (k, &hv) in h.iter().enumerate() {
                let src = SourceModelConfig { filament_diameter: filament_diameter.unwrap_or(cfg.filament_diameter), h: hv };
                let part = match kind {
                    Kind::Source => sourcegen::generate_source_grid(&spec, &src)?,
                    Kind::SyntheticTarget => {
                        let mut syn = cfg.synthetic_for(hv);
                        syn.alpha = alpha.unwrap_or(syn.alpha);
                        syn.p = p.unwrap_or(syn.p);
                        syn.offset = offset.unwrap_or(syn.offset);
                        syn.noise_std = noise_std.unwrap_or(syn.noise_std);
                        syn.stability_band.0 = band_min.unwrap_or(syn.stability_band.0);
                        syn.stability_band.1 = band_max.unwrap_or(syn.stability_band.1);
                        syn.seed = multifidelity::rng::derive_seed(seed, &[k as u64]);
                        sourcegen::generate_synthetic_target(&spec, &src, &syn)?
                    }
                };
                all = all.concat(&part);
            }
            dataset::save_csv(&out, &all).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;
            println!("rows={}", all.len());
        }
        Command::FitDirect { data, out, svr } => {
            let d = load(&data, Origin::Target)?;
            single_height(&d, "training data")?;
            let params = choose_params(&svr, &cfg, &d, seed)?;
            let opts = SolverOptions::with_tol(svr.tol.unwrap_or(cfg.search.tol));
            let model = svr::fit_weighted_svr_with(&d, &vec![1.0; d.len()], &params, &opts)?;
            log::info!("event=fit kind=direct n={} support_vectors={} iterations={}", d.len(), model.dual_coefficients.len(), model.stats.iterations);
            let doc = ModelFile::Direct { model };
            write_file(&out, &doc.to_json().map_err(Failure::data)?)?;
        }
        Command::FitTransfer { source, target, out, iterations, loss, svr } => {
            let src = load(&source, Origin::Source)?;
            let tgt = load(&target, Origin::Target)?;
            let h = single_height(&tgt, "target data")?;
            let src = src.filter_h(h);
            let union = src.concat(&tgt);
            let params = choose_params(&svr, &cfg, &union, seed)?;
            let tcfg = TransferConfig {
                n_iterations: iterations.unwrap_or(cfg.n_iterations),
                loss: loss.map(Loss::from).unwrap_or(cfg.loss),
                svr_params: params,
                tol: svr.tol.unwrap_or(cfg.search.tol),
            };
            let ensemble = transfer::fit_tradaboost_r2(&src, &tgt, &tcfg, seed)?;
            log::info!("event=fit kind=transfer n_source={} n_target={} rounds={} termination={:?}", src.len(), tgt.len(), ensemble.models.len(), ensemble.termination);
            let doc = ModelFile::Transfer { ensemble };
            write_file(&out, &doc.to_json().map_err(Failure::data)?)?;
        }
        Command::Predict { model, input, out } => {
            let text = fs::read_to_string(&model).map_err(io_err(&model))?;
            let doc = ModelFile::from_json(&text).map_err(|e| Failure::data(format!("{}: {e}", model.display())))?;
            let file = fs::File::open(&input).map_err(io_err(&input))?;
            let rows = read_features(file)?;
            let mut buf = String::from("F_mm_per_min,S_mm_per_min,W_pred_mm\n");
            for (f, s) in rows {
                buf.push_str(&format!("{f},{s},{}\n", doc.predict(f, s)));
            }
            match out {
                Some(p) => write_file(&p, &buf)?,
                None => std::io::stdout().write_all(buf.as_bytes()).map_err(Failure::data)?,
            }
        }
        Command::GridSearch { data, k_folds } => {
            let d = load(&data, Origin::Target)?;
            let mut search = cfg.search.clone();
            if let Some(k) = k_folds {
                search.k_folds = k;
            }
            let r = search.run(&d, &vec![1.0; d.len()], seed)?;
            let doc = serde_json::json!({
                "best": r.best,
                "cv_rmse": r.scores[r.best_index],
                "scores": search.grid.iter().zip(&r.scores).map(|(p, s)| serde_json::json!({"params": p, "cv_rmse": s})).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&doc).map_err(Failure::data)?);
        }
        Command::Benchmark { source, target, out_dir, reps, eval_reps, iterations } => {
            let src = load(&source, Origin::Source)?;
            let tgt = load(&target, Origin::Target)?;
            let mut bcfg = cfg.benchmark.clone();
            if let Some(r) = reps {
                bcfg.reps = r;
            }
            if let Some(r) = eval_reps {
                bcfg.sweep.eval_reps = r;
            }
            if let Some(i) = iterations {
                bcfg.sweep.n_iterations = i;
            }
            fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
            let heights = tgt.heights();
            let multi = heights.len() > 1;
            let mut reports = Vec::new();
            for (k, (h, part)) in protocol::split_by_height(&tgt).into_iter().enumerate() {
                let run_seed = multifidelity::rng::derive_seed(seed, &[k as u64]);
                let outcome = protocol::with_jobs(jobs, || protocol::run_benchmark(&src, &part, &bcfg, run_seed))?;
                let suffix = if multi { format!("_h{h}") } else { String::new() };
                let curve_path = out_dir.join(format!("curve{suffix}.csv"));
                let sweep_path = out_dir.join(format!("sweep{suffix}.csv"));
                let mut curve_buf = Vec::new();
                outcome.curve.write_csv(&mut curve_buf)?;
                fs::write(&curve_path, curve_buf).map_err(io_err(&curve_path))?;
                let mut sweep_buf = Vec::new();
                outcome.sweep.write_csv(&mut sweep_buf)?;
                fs::write(&sweep_path, sweep_buf).map_err(io_err(&sweep_path))?;
                let r = outcome.report;
                log::info!(
                    "event=report h={} n_direct={} rmse_direct={:.6} n_s={} n_f={} n_t={} rmse_t={:.6} sample_reduction_pct={:.1} rmse_reduction_pct={:.1} achieved={}",
                    r.h_mm, r.n_direct, r.rmse_direct.mean, r.n_t.n_s, r.n_t.n_f, r.n_t.total, r.rmse_t.mean,
                    r.sample_reduction_pct, r.rmse_reduction_pct, r.achieved
                );
                reports.push(r);
            }
            let report_path = out_dir.join("report.json");
            let text = if multi {
                serde_json::to_string_pretty(&reports)
            } else {
                serde_json::to_string_pretty(&reports[0])
            }
            .map_err(Failure::data)?;
            write_file(&report_path, &text)?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| writeln!(buf, "level={} {}", record.level().as_str().to_lowercase(), record.args()))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("event=error code={} message={:?}", f.code, f.message);
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
