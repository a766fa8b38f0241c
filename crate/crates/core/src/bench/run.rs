//! Grid orchestration: seeding, parallel runs, incremental records, resume.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BenchConfig, DataSource, Problem, ProblemKind};
use super::data::load_csv_matrix;
use super::synth::{synth_data, Dataset};
use super::BenchError;
use crate::diagnostics::{chain_report, EssReport};
use crate::nuts::rng::combine_seeds;
use crate::nuts::sample;
use crate::param::{ParamKind, ParamSpec};
use crate::targets::{
    build_unconstrained, Eigenmodel, EigenmodelData, MatrixCompletion, McData, Ppca, PpcaData, TargetError,
    TargetModel, UnconstrainedTarget, Uniform,
};

pub const RECORD_HEADER: &str = "problem,J,K,T,kind,run_index,seed,iters_total,iters_kept,elapsed_seconds,\
min_ess,min_ess_per_iter,min_ess_per_sec,divergences,stuck,failed";

const DATA_SEED_TAG: u64 = 0xda7a;

/// One line of the records CSV. Metric fields are empty for failed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub kind: ParamKind,
    pub run_index: usize,
    pub seed: u64,
    pub iters_total: usize,
    pub iters_kept: usize,
    pub elapsed_seconds: Option<f64>,
    pub min_ess: Option<f64>,
    pub min_ess_per_iter: Option<f64>,
    pub min_ess_per_sec: Option<f64>,
    pub divergences: Option<usize>,
    pub stuck: bool,
    pub failed: bool,
}

impl RunRecord {
    /// `(problem, J, K, T)`, the row of a rendered table.
    pub fn problem_key(&self) -> String {
        match self.t {
            Some(t) => format!("{}|{}|{}|{}", self.problem, self.j, self.k, t),
            None => format!("{}|{}|{}", self.problem, self.j, self.k),
        }
    }

    fn key(&self) -> (String, ParamKind, usize) {
        (self.problem_key(), self.kind, self.run_index)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Chain seed of one run.
pub fn run_seed(base_seed: u64, problem: &Problem, kind: ParamKind, run_index: usize) -> u64 {
    combine_seeds(&[base_seed, fnv1a(&problem.key()), kind.index() as u64, run_index as u64])
}

/// Seed of a problem's synthetic dataset; `run_index` only when data are
/// regenerated per run.
pub fn data_seed(base_seed: u64, problem: &Problem, run_index: Option<usize>) -> u64 {
    match run_index {
        Some(r) => combine_seeds(&[base_seed, fnv1a(&problem.key()), DATA_SEED_TAG, r as u64]),
        None => combine_seeds(&[base_seed, fnv1a(&problem.key()), DATA_SEED_TAG]),
    }
}

fn data_err(path: &Path, msg: String) -> BenchError {
    BenchError::data(Some(path), None, msg)
}

/// Loads or synthesizes a problem's dataset.
pub fn load_dataset(problem: &Problem, seed: u64) -> Result<Dataset, BenchError> {
    let (path, covariate_paths, token) = match &problem.source {
        DataSource::Synthetic(spec) => return Ok(synth_data(spec, seed).dataset),
        DataSource::Files {
            path,
            covariates,
            missing_token,
        } => (path, covariates, missing_token),
    };
    let m = load_csv_matrix(path, token)?;
    let (rows, cols) = m.matrix.shape();
    let no_missing = |what: &str| {
        if m.missing_count() > 0 {
            Err(data_err(path, format!("{what} data may not contain '{token}' cells")))
        } else {
            Ok(())
        }
    };
    let target_err = |e: TargetError| data_err(path, e.to_string());
    match problem.kind {
        ProblemKind::Uniform => Ok(Dataset::Uniform {
            j: problem.j,
            k: problem.k,
        }),
        ProblemKind::Ppca => {
            no_missing("PPCA")?;
            if cols != problem.j {
                return Err(data_err(path, format!("expected J={} columns, found {cols}", problem.j)));
            }
            if problem.t.is_some_and(|n| n != rows) {
                return Err(data_err(path, format!("expected N={} rows, found {rows}", problem.t.unwrap())));
            }
            Ok(Dataset::Ppca(PpcaData::new(m.matrix, problem.k, problem.with_mean).map_err(target_err)?))
        }
        ProblemKind::Eigenmodel => {
            no_missing("graph")?;
            if (rows, cols) != (problem.j, problem.j) {
                return Err(data_err(path, format!("expected a {0}x{0} adjacency, found {rows}x{cols}", problem.j)));
            }
            Ok(Dataset::Eigenmodel(EigenmodelData::new(m.matrix, problem.k).map_err(target_err)?))
        }
        ProblemKind::Mc => {
            let t = problem.t.unwrap_or(cols);
            if (rows, cols) != (problem.j, t) {
                return Err(data_err(path, format!("expected a {}x{t} panel, found {rows}x{cols}", problem.j)));
            }
            let mut covariates = Vec::new();
            for p in covariate_paths {
                let x = load_csv_matrix(p, token)?;
                if x.missing_count() > 0 || x.matrix.shape() != (rows, cols) {
                    return Err(data_err(p, format!("covariate must be a complete {rows}x{cols} matrix")));
                }
                covariates.push(x.matrix);
            }
            let data = McData::new(m.matrix, m.mask, covariates, problem.k, problem.eta).map_err(target_err)?;
            Ok(Dataset::Mc(data))
        }
    }
}

/// Model for a dataset, with the problem's options applied.
pub fn build_model(problem: &Problem, dataset: &Dataset) -> Arc<dyn TargetModel> {
    match dataset {
        Dataset::Uniform { j, k } => Arc::new(Uniform::new(*j, *k)),
        Dataset::Ppca(d) => {
            let m = Ppca::new(d.clone());
            Arc::new(if problem.ordered { m } else { m.unordered() })
        }
        Dataset::Eigenmodel(d) => Arc::new(Eigenmodel::new(d.clone())),
        Dataset::Mc(d) => Arc::new(MatrixCompletion::new(d.clone())),
    }
}

/// Composes a model with one parameterization for every Stiefel block.
pub fn build_target(
    model: Arc<dyn TargetModel>,
    kind: ParamKind,
    givens_area_correction: bool,
) -> Result<UnconstrainedTarget, TargetError> {
    let specs = model
        .stiefel_blocks()
        .into_iter()
        .map(|(r, c)| ParamSpec::new(kind, r, c).map(|s| s.with_givens_area_correction(givens_area_correction)))
        .collect::<Result<Vec<_>, _>>()?;
    build_unconstrained(model, specs)
}

/// Everything one run needs.
pub struct RunContext<'a> {
    pub cfg: &'a BenchConfig,
    pub problem: &'a Problem,
    pub dataset: &'a Dataset,
    pub kind: ParamKind,
    pub run_index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub report: EssReport,
    pub divergences: usize,
}

/// Builds the target, samples one chain and computes its ESS report.
pub fn execute_run(ctx: &RunContext<'_>) -> Result<RunMetrics, String> {
    let model = build_model(ctx.problem, ctx.dataset);
    let target = build_target(model, ctx.kind, ctx.cfg.givens_area_correction).map_err(|e| e.to_string())?;
    let chain = sample(&target, &ctx.cfg.sampler.clone().with_seed(ctx.seed)).map_err(|e| e.to_string())?;
    let report = chain_report(&chain, ctx.cfg.foi).map_err(|e| e.to_string())?;
    Ok(RunMetrics {
        report,
        divergences: chain.divergences,
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    /// Keep records already in the output file and skip their runs.
    pub resume: bool,
    /// Suppress per-run progress lines on stderr.
    pub quiet: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Final record set, sorted in grid order.
    pub records: Vec<RunRecord>,
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
}

struct Task {
    problem: usize,
    kind: ParamKind,
    run_index: usize,
    seed: u64,
}

fn record_for(cfg: &BenchConfig, p: &Problem, task: &Task, result: Result<RunMetrics, String>) -> RunRecord {
    let mut rec = RunRecord {
        problem: p.kind.name().to_string(),
        j: p.j,
        k: p.k,
        t: p.t,
        kind: task.kind,
        run_index: task.run_index,
        seed: task.seed,
        iters_total: cfg.sampler.iters_total,
        iters_kept: cfg.sampler.iters_keep,
        elapsed_seconds: None,
        min_ess: None,
        min_ess_per_iter: None,
        min_ess_per_sec: None,
        divergences: None,
        stuck: false,
        failed: true,
    };
    if let Ok(m) = result {
        rec.elapsed_seconds = Some(m.report.elapsed_seconds);
        rec.min_ess = Some(m.report.min_ess);
        rec.min_ess_per_iter = Some(m.report.min_ess_per_iter);
        rec.min_ess_per_sec = Some(m.report.min_ess_per_sec);
        rec.divergences = Some(m.divergences);
        rec.stuck = m.report.stuck();
        rec.failed = false;
    }
    rec
}

/// Reads a records CSV. A malformed final line (an interrupted write) is
/// dropped; malformed lines elsewhere are errors.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(|e| BenchError::Records(format!("{}: {e}", path.display())))?;
    if headers.iter().collect::<Vec<_>>().join(",") != RECORD_HEADER {
        return Err(BenchError::Records(format!("{}: unexpected header", path.display())));
    }
    let rows: Vec<Result<RunRecord, csv::Error>> = reader.deserialize().collect();
    let n = rows.len();
    let mut out = Vec::with_capacity(n);
    for (i, r) in rows.into_iter().enumerate() {
        match r {
            Ok(rec) => out.push(rec),
            Err(_) if i + 1 == n => {
                eprintln!("warning: dropping incomplete last record in {}", path.display());
            }
            Err(e) => return Err(BenchError::Records(format!("{}: {e}", path.display()))),
        }
    }
    Ok(out)
}

fn serialize_records<W: Write>(w: W, records: &[RunRecord]) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a full records CSV atomically (temp file, then rename).
pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    let tmp = path.with_extension("csv.tmp");
    let file = File::create(&tmp).map_err(|e| BenchError::io(&tmp, e))?;
    if records.is_empty() {
        writeln!(&file, "{RECORD_HEADER}").map_err(|e| BenchError::io(&tmp, e))?;
    } else {
        serialize_records(&file, records).map_err(|e| BenchError::Records(format!("{}: {e}", tmp.display())))?;
    }
    fs::rename(&tmp, path).map_err(|e| BenchError::io(path, e))
}

pub fn run_experiment(cfg: &BenchConfig, opts: &RunOptions) -> Result<RunSummary, BenchError> {
    run_experiment_with(cfg, opts, &execute_run)
}

/// Runs the grid with a custom per-run function; failures and panics in
/// `runner` become failed records.
pub fn run_experiment_with(
    cfg: &BenchConfig,
    opts: &RunOptions,
    runner: &(dyn Fn(&RunContext<'_>) -> Result<RunMetrics, String> + Sync),
) -> Result<RunSummary, BenchError> {
    let path = &cfg.output;
    let existing = if opts.resume && path.exists() {
        read_records(path)?
    } else {
        Vec::new()
    };
    let done: HashSet<_> = existing.iter().map(RunRecord::key).collect();

    let mut tasks = Vec::new();
    let mut skipped = 0;
    for (pi, p) in cfg.problems.iter().enumerate() {
        let pkey = p.key();
        for &kind in &p.kinds {
            for run_index in 0..cfg.runs {
                if done.contains(&(pkey.clone(), kind, run_index)) {
                    skipped += 1;
                    continue;
                }
                tasks.push(Task {
                    problem: pi,
                    kind,
                    run_index,
                    seed: run_seed(cfg.base_seed, p, kind, run_index),
                });
            }
        }
    }

    // Shared datasets are loaded up front so data errors stop the grid early.
    let shared: Vec<Option<Arc<Dataset>>> = cfg
        .problems
        .iter()
        .map(|p| {
            if cfg.regenerate_data && matches!(p.source, DataSource::Synthetic(_)) {
                Ok(None)
            } else {
                load_dataset(p, data_seed(cfg.base_seed, p, None)).map(|d| Some(Arc::new(d)))
            }
        })
        .collect::<Result<_, _>>()?;

    // Rewrite the kept records so the file holds exactly them plus new lines.
    write_records(path, &existing)?;
    let file = OpenOptions::new().append(true).open(path).map_err(|e| BenchError::io(path, e))?;
    let writer = Mutex::new(csv::WriterBuilder::new().has_headers(false).from_writer(file));
    let total = tasks.len();
    let progress = Mutex::new(0usize);

    let execute = |task: &Task| -> Result<RunRecord, BenchError> {
        let p = &cfg.problems[task.problem];
        let dataset = match &shared[task.problem] {
            Some(d) => d.clone(),
            None => Arc::new(load_dataset(p, data_seed(cfg.base_seed, p, Some(task.run_index)))?),
        };
        let ctx = RunContext {
            cfg,
            problem: p,
            dataset: &dataset,
            kind: task.kind,
            run_index: task.run_index,
            seed: task.seed,
        };
        let result = catch_unwind(AssertUnwindSafe(|| runner(&ctx)))
            .unwrap_or_else(|_| Err("run panicked".to_string()));
        if let Err(e) = &result {
            eprintln!("run failed: {} {} run {}: {e}", p.key(), task.kind, task.run_index);
        }
        let rec = record_for(cfg, p, task, result);
        {
            let mut w = writer.lock().expect("writer lock");
            w.serialize(&rec)
                .and_then(|_| w.flush().map_err(csv::Error::from))
                .map_err(|e| BenchError::Records(format!("{}: {e}", path.display())))?;
        }
        if !opts.quiet {
            let mut n = progress.lock().expect("progress lock");
            *n += 1;
            eprintln!(
                "[{}/{}] {} {} run {}: min_ess/sec {}",
                *n,
                total,
                p.key(),
                task.kind,
                task.run_index,
                rec.min_ess_per_sec.map_or("failed".into(), |v| format!("{v:.3}"))
            );
        }
        Ok(rec)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Config(format!("workers: {e}")))?;
    let new_records: Vec<RunRecord> = pool.install(|| tasks.par_iter().map(execute).collect::<Result<_, _>>())?;
    drop(writer);

    let executed = new_records.len();
    let mut records = existing;
    records.extend(new_records);
    let order: HashMap<String, usize> = cfg
        .problems
        .iter()
        .enumerate()
        .map(|(i, p)| (p.key(), i))
        .collect();
    records.sort_by(|a, b| {
        let oa = order.get(&a.problem_key()).copied().unwrap_or(usize::MAX);
        let ob = order.get(&b.problem_key()).copied().unwrap_or(usize::MAX);
        (oa, a.problem_key(), a.kind, a.run_index).cmp(&(ob, b.problem_key(), b.kind, b.run_index))
    });
    write_records(path, &records)?;
    let failed = records.iter().filter(|r| r.failed).count();
    Ok(RunSummary {
        records,
        executed,
        skipped,
        failed,
    })
}
