//! Command implementations. Each writes its artifacts and prints a short
//! summary to stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bnn_mcmc::data::{self, exact_xor, generate_noisy_xor, DatasetManifest, Encoding, FeatureColumn, NoisyXorConfig};
use bnn_mcmc::diagnostics::{self, DiagnosticReport, Draws};
use bnn_mcmc::io::{self, format_hms, format_value};
use bnn_mcmc::mlp::Architecture;
use bnn_mcmc::predictive::{self, grid_predictive};
use bnn_mcmc::samplers::{
    self, chain_seed, hmc_chain, initial_states, mh_chain, pp_chain, Chain, MlpPosterior, SamplerKind, SgdConfig,
};
use bnn_mcmc::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSpec, ExperimentConfig, SamplerSpec};
use crate::{
    BoxplotArgs, DiagnoseArgs, GenerateDataArgs, GridArgs, PredictArgs, RunArgs, SampleArgs, SgdArgs, TracesArgs,
    OUT_ENV,
};

fn default_out(name: &str) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
        .join(name)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn chain_file_name(k: usize) -> String {
    format!("chain_{k}.csv")
}

/// `chain_<k>.csv` files of a run directory, ordered by `k`.
pub fn run_chain_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(k) = name
            .strip_prefix("chain_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            found.push((k, path));
        }
    }
    if found.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no chain_*.csv files in {}",
            dir.display()
        )));
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn load_chains(paths: &[PathBuf], burnin: Option<usize>) -> Result<Vec<Chain>> {
    paths.par_iter().map(|p| io::load_chain(p, burnin)).collect()
}

struct Source {
    config: ExperimentConfig,
    dir: Option<PathBuf>,
}

impl Source {
    fn open(args: &RunArgs) -> Result<Self> {
        let path = match (&args.config, &args.run) {
            (Some(c), _) => c.clone(),
            (None, Some(run)) => run.join("config.json"),
            (None, None) => return Err(Error::InvalidInput("need --run or --config".into())),
        };
        Ok(Self {
            config: ExperimentConfig::load(path)?,
            dir: args.run.clone(),
        })
    }

    fn chains(&self, args: &RunArgs) -> Result<Vec<Chain>> {
        let paths = if !args.chains.is_empty() {
            args.chains.clone()
        } else if let Some(dir) = &self.dir {
            run_chain_paths(dir)?
        } else {
            return Err(Error::InvalidInput("need --run or --chain".into()));
        };
        load_chains(&paths, args.burnin)
    }

    fn out_dir(&self, out: &Option<PathBuf>) -> Result<PathBuf> {
        out.clone()
            .or_else(|| self.dir.clone())
            .ok_or_else(|| Error::InvalidInput("need --out when no run directory is given".into()))
    }
}

fn check_width(arch: &Architecture, chains: &[Chain]) -> Result<()> {
    match chains.iter().find(|c| c.dim() != arch.parameter_count()) {
        Some(c) => Err(Error::DimensionMismatch {
            what: "chain width (architecture parameter count)",
            expected: arch.parameter_count(),
            actual: c.dim(),
        }),
        None => Ok(()),
    }
}

pub fn generate_data(a: &GenerateDataArgs) -> Result<()> {
    let config = match &a.config {
        Some(path) => match ExperimentConfig::load(path)?.dataset {
            DatasetSpec::NoisyXor(c) => c,
            DatasetSpec::Manifest { .. } => {
                return Err(Error::InvalidConfig(
                    "generate-data needs a noisy_xor dataset section".into(),
                ))
            }
        },
        None => NoisyXorConfig {
            c: a.c,
            train_per_corner: a.train_per_corner,
            test_per_corner: a.test_per_corner,
            seed: a.seed,
        },
    };
    let (train, test) = generate_noisy_xor(&config)?;
    let out = a.out.clone().unwrap_or_else(|| default_out("noisy_xor_data"));
    create_dir(&out)?;
    let names = vec!["x1".to_string(), "x2".to_string()];
    data::write_dataset(out.join("train.csv"), &train, &names)?;
    data::write_dataset(out.join("test.csv"), &test, &names)?;
    let manifest = DatasetManifest {
        name: "noisy_xor".into(),
        train: "train.csv".into(),
        test: "test.csv".into(),
        label_column: "label".into(),
        labels: vec!["0".into(), "1".into()],
        features: names
            .iter()
            .map(|n| FeatureColumn {
                column: n.clone(),
                encoding: Encoding::Numeric,
            })
            .collect(),
        standardize: false,
    };
    io::write_json(out.join("manifest.json"), &manifest)?;
    println!(
        "noisy XOR (c = {}, seed {}): train {} rows, test {} rows -> {}",
        config.c,
        config.seed,
        train.len(),
        test.len(),
        out.display()
    );
    Ok(())
}

/// Runs chain `k` of an experiment. The chain seed is `seed ^ k`; initial
/// states are prior draws from a stream of that seed reserved for them.
pub fn run_chain(config: &ExperimentConfig, arch: &Architecture, data: &data::PreparedData, k: usize) -> Result<Chain> {
    let seed = chain_seed(config.seed, k);
    let target = MlpPosterior::new(arch, &data.train, config.prior_variance)?;
    let dim = arch.parameter_count();
    let chain = match config.sampler()? {
        SamplerSpec::Mh(c) => {
            let init = initial_states(dim, config.prior_variance, seed, 1);
            mh_chain(&target, &init[0], c, config.iterations, seed)?
        }
        SamplerSpec::Hmc(c) => {
            let init = initial_states(dim, config.prior_variance, seed, 1);
            hmc_chain(&target, &init[0], c, config.iterations, seed)?
        }
        SamplerSpec::Pp(c) => {
            let inits = initial_states(dim, config.prior_variance, seed, c.temperatures.len());
            pp_chain(&target, &inits, c, config.iterations, seed)?.chain
        }
    };
    chain.with_burnin(config.burnin)
}

pub fn sample(a: &SampleArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&a.config)?;
    config.apply(&a.overrides);
    config.validate()?;
    let kind = config.sampler()?.kind();
    let arch = config.architecture()?;
    let data = config.load_data()?;
    let out = a.out.clone().unwrap_or_else(|| {
        default_out(&format!(
            "{}_{}",
            config.dataset_name(),
            kind.to_string().to_lowercase()
        ))
    });
    create_dir(&out)?;
    io::write_json(out.join("config.json"), &config)?;
    let meta = serde_json::to_value(&config)?;

    let results: Vec<Result<Chain>> = (0..config.chains)
        .into_par_iter()
        .map(|k| {
            let chain = run_chain(&config, &arch, &data, k)?;
            io::save_chain(out.join(chain_file_name(k)), &chain, meta.clone())?;
            Ok(chain)
        })
        .collect();

    println!(
        "{kind} on {}: {} chains x {} iterations ({} burn-in), {} parameters -> {}",
        data.name,
        config.chains,
        config.iterations,
        config.burnin,
        arch.parameter_count(),
        out.display()
    );
    let mut first_error = None;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => {
                let mut line = format!(
                    "  chain {k}: acceptance {:.3}, runtime {}",
                    c.acceptance_rate(),
                    format_hms(c.runtime_seconds)
                );
                if kind == SamplerKind::Pp && c.stats.swap_attempts > 0 {
                    let rate = c.stats.swap_accepts as f64 / c.stats.swap_attempts as f64;
                    let _ = write!(line, ", swap acceptance {rate:.3}");
                }
                if c.stats.divergences > 0 {
                    let _ = write!(line, ", {} divergent trajectories", c.stats.divergences);
                }
                println!("{line}");
            }
            Err(e) => {
                println!("  chain {k}: failed: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Diagnostics JSON written next to the chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsFile {
    pub sampler: SamplerKind,
    pub burnin: usize,
    #[serde(flatten)]
    pub report: DiagnosticReport,
}

/// Accuracy summary in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    /// Sampler name, or `prior` for the prior baseline.
    pub source: String,
    pub tail: usize,
    /// One value per chain, or per prior replicate.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub median: f64,
}

impl AccuracySummary {
    fn new(source: String, tail: usize, fractions: &[f64]) -> Self {
        let accuracies: Vec<f64> = fractions.iter().map(|a| 100.0 * a).collect();
        let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
        Self {
            source,
            tail,
            median: median(&accuracies),
            mean,
            accuracies,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<()> {
    let mut rows: Vec<(String, String, String, String)> = Vec::new();
    let mut groups: Vec<(Vec<Chain>, PathBuf, Option<PathBuf>)> = Vec::new();
    if !a.chains.is_empty() {
        let out = a.out.clone().unwrap_or_else(|| PathBuf::from("diagnostics.json"));
        groups.push((load_chains(&a.chains, a.burnin)?, out, None));
    }
    for run in &a.runs {
        let chains = load_chains(&run_chain_paths(run)?, a.burnin)?;
        groups.push((chains, run.join("diagnostics.json"), Some(run.join("accuracy.json"))));
    }
    if groups.is_empty() {
        return Err(Error::InvalidInput("need --run or --chain".into()));
    }
    for (chains, out, accuracy_file) in &groups {
        let draws: Vec<Draws> = chains.iter().map(Draws::post_burnin).collect();
        let report = diagnostics::diagnose(&draws)?;
        let file = DiagnosticsFile {
            sampler: chains[0].sampler,
            burnin: chains[0].burnin(),
            report,
        };
        io::write_json(out, &file)?;
        let accuracy = match accuracy_file {
            Some(p) if p.exists() => format!("{:.2}", io::read_json::<AccuracySummary>(p)?.mean),
            _ => "-".into(),
        };
        let r = &file.report;
        rows.push((
            file.sampler.to_string(),
            r.psrf.map_or("-".into(), |p| {
                format!("{p:.4}{}", if r.psrf_regularized { "*" } else { "" })
            }),
            format!("{:.1}", r.ess_mean),
            accuracy,
        ));
    }
    let mut table = format!("{:<8}{:>12}{:>12}{:>10}\n", "sampler", "PSRF", "ESS", "accuracy");
    for (s, p, e, acc) in &rows {
        let _ = writeln!(table, "{s:<8}{p:>12}{e:>12}{acc:>10}");
    }
    print!("{table}");
    if let Some(path) = &a.table {
        write_text(path, &table)?;
    }
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let src = Source::open(&a.source)?;
    let config = &src.config;
    let arch = config.architecture()?;
    let data = config.load_data()?;
    let tail = a.tail.unwrap_or(config.tail);
    let out = src.out_dir(&a.out)?;
    create_dir(&out)?;
    if a.prior_baseline {
        let replicates = a.replicates.unwrap_or(config.prior_replicates);
        let accs = predictive::prior_baseline(&arch, config.prior_variance, &data.test, tail, config.seed, replicates)?;
        let summary = AccuracySummary::new("prior".into(), tail, &accs);
        io::write_json(out.join("prior_accuracy.json"), &summary)?;
        println!(
            "prior baseline on {} ({} replicates x {tail} draws): mean accuracy {:.2}",
            data.name,
            accs.len(),
            summary.mean
        );
        return Ok(());
    }
    let chains = src.chains(&a.source)?;
    check_width(&arch, &chains)?;
    let reports: Vec<predictive::PredictionReport> = chains
        .par_iter()
        .map(|c| predictive::accuracy(&arch, c.tail(tail), &data.test))
        .collect::<Result<_>>()?;
    for (k, r) in reports.iter().enumerate() {
        io::write_predictions_csv(out.join(format!("predictions_chain_{k}.csv")), r)?;
    }
    let accs: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let summary = AccuracySummary::new(chains[0].sampler.to_string(), tail, &accs);
    io::write_json(out.join("accuracy.json"), &summary)?;
    let per_chain: Vec<String> = summary.accuracies.iter().map(|a| format!("{a:.2}")).collect();
    println!(
        "{} on {}: accuracy per chain [{}], mean {:.2}",
        summary.source,
        data.name,
        per_chain.join(", "),
        summary.mean
    );
    Ok(())
}

pub fn grid(a: &GridArgs) -> Result<()> {
    let src = Source::open(&a.source)?;
    let arch = src.config.architecture()?;
    let chains = src.chains(&a.source)?;
    check_width(&arch, &chains)?;
    let chain = chains.get(a.chain_index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "chain index {} out of range ({} chains)",
            a.chain_index,
            chains.len()
        ))
    })?;
    let tail = a.tail.unwrap_or(src.config.tail);
    let g = grid_predictive(&arch, chain.tail(tail), a.lo, a.hi, a.resolution)?;
    let out = src.out_dir(&a.out)?;
    io::write_grid_csv(out.join(format!("grid_chain_{}.csv", a.chain_index)), &g)?;

    // exact XOR of the thresholded cell centre
    let bit = |x: f64| u8::from(x > 0.5);
    let mut truth = String::new();
    for &x2 in &g.centers {
        let row: Vec<String> = g
            .centers
            .iter()
            .map(|&x1| exact_xor(bit(x1), bit(x2)).to_string())
            .collect();
        let _ = writeln!(truth, "{}", row.join(","));
    }
    write_text(&out.join("grid_truth.csv"), &truth)?;
    let centers: String = g.centers.iter().map(|c| format_value(*c) + "\n").collect();
    write_text(&out.join("grid_centers.csv"), &centers)?;
    println!(
        "{0}x{0} grid over [{1}, {2}]^2 from chain {3} ({tail} draws) -> {4}",
        a.resolution,
        a.lo,
        a.hi,
        a.chain_index,
        out.display()
    );
    Ok(())
}

pub fn traces(a: &TracesArgs) -> Result<()> {
    let src = Source::open(&a.source)?;
    let chains = src.chains(&a.source)?;
    let len = chains[0].len();
    if chains.iter().any(|c| c.len() != len) {
        return Err(Error::InvalidInput("chains differ in length".into()));
    }
    let columns: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.coordinate(a.coordinate))
        .collect::<Result<_>>()?;
    let burnin = chains[0].burnin();
    let mut text = String::from("iteration,burnin");
    for k in 0..chains.len() {
        let _ = write!(text, ",chain_{k}");
    }
    text.push('\n');
    for i in 0..len {
        let _ = write!(text, "{i},{}", u8::from(i < burnin));
        for col in &columns {
            text.push(',');
            text.push_str(&format_value(col[i]));
        }
        text.push('\n');
    }
    let out = match &a.out {
        Some(p) => p.clone(),
        None => src.out_dir(&None)?.join(format!("trace_{}.csv", a.coordinate)),
    };
    write_text(&out, &text)?;
    println!(
        "coordinate {} of {} chains, {len} iterations ({burnin} burn-in) -> {}",
        a.coordinate,
        chains.len(),
        out.display()
    );
    Ok(())
}

pub fn boxplot_data(a: &BoxplotArgs) -> Result<()> {
    let src = Source::open(&a.source)?;
    let config = &src.config;
    let arch = config.architecture()?;
    let data = config.load_data()?;
    let chains = src.chains(&a.source)?;
    check_width(&arch, &chains)?;
    let tail = a.tail.unwrap_or(config.tail);
    let accs: Vec<f64> = chains
        .par_iter()
        .map(|c| predictive::accuracy(&arch, c.tail(tail), &data.test).map(|r| r.accuracy))
        .collect::<Result<_>>()?;
    let mut text = String::from("group,replicate,accuracy\n");
    let group = chains[0].sampler.to_string();
    for (k, acc) in accs.iter().enumerate() {
        let _ = writeln!(text, "{group},{k},{}", format_value(100.0 * acc));
    }
    if a.prior_baseline {
        let prior = predictive::prior_baseline(
            &arch,
            config.prior_variance,
            &data.test,
            tail,
            config.seed,
            chains.len(),
        )?;
        for (k, acc) in prior.iter().enumerate() {
            let _ = writeln!(text, "prior,{k},{}", format_value(100.0 * acc));
        }
    }
    let out = match &a.out {
        Some(p) => p.clone(),
        None => src.out_dir(&None)?.join("boxplot.csv"),
    };
    write_text(&out, &text)?;
    println!("{} accuracies -> {}", text.lines().count() - 1, out.display());
    Ok(())
}

/// Summary written next to the SGD solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdSummary {
    pub seed: u64,
    pub config: SgdConfig,
    pub sessions: usize,
    /// Test accuracy of each kept solution, in percent.
    pub accuracies: Vec<f64>,
}

pub fn sgd_ensemble(a: &SgdArgs) -> Result<()> {
    let config = ExperimentConfig::load(&a.config)?;
    let arch = config.architecture()?;
    let data = config.load_data()?;
    let mut sgd = config.sgd.clone().unwrap_or_default();
    if let Some(v) = a.size {
        sgd.ensemble_size = v;
    }
    if let Some(v) = a.epochs {
        sgd.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        sgd.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        sgd.batch_size = v;
    }
    if let Some(v) = a.threshold {
        sgd.accept_threshold = v;
    }
    let seed = a.seed.unwrap_or(config.seed);
    let ensemble = samplers::sgd_ensemble(&arch, &data.train, &data.test, &sgd, seed)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| default_out(&format!("{}_sgd", config.dataset_name())));
    create_dir(&out)?;
    io::write_matrix_csv(out.join("solutions.csv"), ensemble.solutions.iter().map(Vec::as_slice))?;
    let summary = SgdSummary {
        seed,
        config: sgd,
        sessions: ensemble.sessions,
        accuracies: ensemble.accuracies.iter().map(|a| 100.0 * a).collect(),
    };
    io::write_json(out.join("sgd.json"), &summary)?;
    println!(
        "{} solutions above {:.2} accuracy from {} sessions -> {}",
        ensemble.solutions.len(),
        100.0 * summary.config.accept_threshold,
        ensemble.sessions,
        out.display()
    );
    Ok(())
}
