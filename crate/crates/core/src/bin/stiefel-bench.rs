use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use stiefel_mcmc::bench::{
    emit_table, load_config, parse_config, read_records, run_experiment, synth_data, write_csv_matrix, BenchError,
    DataSource, Dataset, Metric, RunOptions, Synthetic, TableFormat, DEFAULT_MISSING_TOKEN,
};
use stiefel_mcmc::check::{run_suite, Suite};
use stiefel_mcmc::linalg::DenseMatrix;

/// Benchmarks Stiefel-manifold parameterizations under NUTS.
#[derive(Parser)]
#[command(name = "stiefel-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark grid and write the records CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the records file (overrides the config's directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Keep completed records and run only the missing ones.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Summarize a records CSV as a problem × parameterization table.
    Table {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricArg::PerSec)]
        metric: MetricArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
    /// Run a numerical self-check suite.
    Check {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
    /// Write a synthetic dataset as CSV.
    Synth {
        /// uniform, eigenmodel, ppca or mc.
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "J")]
        j: Option<usize>,
        #[arg(long = "K")]
        k: Option<usize>,
        /// Panel length for mc.
        #[arg(long = "T")]
        t: Option<usize>,
        /// Observations for ppca.
        #[arg(long = "N")]
        n: Option<usize>,
        /// ppca only: synthetic1 or synthetic2.
        #[arg(long)]
        preset: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "per_iter", alias = "per-iter")]
    PerIter,
    #[value(name = "per_sec", alias = "per-sec")]
    PerSec,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Gradients,
    Jacobians,
    UniformMoments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            workers,
            resume,
            quiet,
        } => cmd_run(&config, out.as_deref(), workers, resume, quiet),
        Command::Table { records, metric, format } => cmd_table(&records, metric, format),
        Command::Check { suite } => cmd_check(suite),
        Command::Synth {
            problem,
            seed,
            out,
            j,
            k,
            t,
            n,
            preset,
        } => cmd_synth(&problem, seed, &out, [j, k, t, n], preset),
    };
    ExitCode::from(code)
}

fn fail(e: &BenchError) -> u8 {
    eprintln!("error: {e}");
    e.exit_code() as u8
}

fn cmd_run(config: &Path, out: Option<&Path>, workers: Option<usize>, resume: bool, quiet: bool) -> u8 {
    let mut cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(dir) = out {
        let name = cfg.output.file_name().map_or_else(|| "records.csv".into(), |n| n.to_os_string());
        cfg.output = dir.join(name);
    }
    if workers == Some(0) {
        return fail(&BenchError::Config("--workers must be at least 1".into()));
    }
    let opts = RunOptions { workers, resume, quiet };
    let summary = match run_experiment(&cfg, &opts) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if !quiet {
        print!("{}", emit_table(&summary.records, Metric::PerSec, TableFormat::Text));
    }
    println!(
        "{} records in {} ({} run, {} resumed, {} failed)",
        summary.records.len(),
        cfg.output.display(),
        summary.executed,
        summary.skipped,
        summary.failed
    );
    if summary.failed > 0 {
        2
    } else {
        0
    }
}

fn cmd_table(records: &Path, metric: MetricArg, format: FormatArg) -> u8 {
    let recs = match read_records(records) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if recs.is_empty() {
        return fail(&BenchError::Records(format!("{} has no records", records.display())));
    }
    let metric = match metric {
        MetricArg::PerIter => Metric::PerIter,
        MetricArg::PerSec => Metric::PerSec,
    };
    let format = match format {
        FormatArg::Csv => TableFormat::Csv,
        FormatArg::Text => TableFormat::Text,
    };
    print!("{}", emit_table(&recs, metric, format));
    0
}

fn cmd_check(suite: SuiteArg) -> u8 {
    let suite = match suite {
        SuiteArg::Gradients => Suite::Gradients,
        SuiteArg::Jacobians => Suite::Jacobians,
        SuiteArg::UniformMoments => Suite::UniformMoments,
    };
    let report = run_suite(suite);
    println!("{report}");
    if report.passed() {
        0
    } else {
        2
    }
}

/// Builds the dataset through the config parser so CLI options get the
/// same defaults and validation as config files.
fn cmd_synth(problem: &str, seed: u64, out: &Path, dims: [Option<usize>; 4], preset: Option<String>) -> u8 {
    let mut obj = Map::new();
    obj.insert("problem".into(), json!(problem));
    for (key, v) in ["J", "K", "T", "N"].into_iter().zip(dims) {
        if let Some(v) = v {
            obj.insert(key.into(), json!(v));
        }
    }
    if let Some(p) = preset {
        obj.insert("preset".into(), json!(p));
    }
    let defaults: [(&str, &str, usize); 4] = [("uniform", "J", 10), ("eigenmodel", "J", 30), ("mc", "J", 14), ("mc", "T", 46)];
    for (kind, key, v) in defaults {
        if problem == kind && !obj.contains_key(key) {
            obj.insert(key.into(), json!(v));
        }
    }
    if problem == "ppca" && !obj.contains_key("J") && !obj.contains_key("preset") {
        obj.insert("preset".into(), json!("synthetic1"));
    }
    if !obj.contains_key("K") && !obj.contains_key("preset") {
        obj.insert("K".into(), json!(3));
    }
    let cfg = match parse_config(&Value::Object(obj).to_string(), Path::new(".")) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let DataSource::Synthetic(spec) = &cfg.problems[0].source else {
        unreachable!("no data file was given");
    };
    match write_synthetic(&synth_data(spec, seed), out) {
        Ok(written) => {
            for p in written {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => fail(&e),
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes the data matrix to `out`, covariates and the generating values
/// to sibling files. A uniform problem has no data; its drawn frame is
/// written instead.
fn write_synthetic(s: &Synthetic, out: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let mut written = vec![out.to_path_buf()];
    match &s.dataset {
        Dataset::Uniform { .. } => write_csv_matrix(out, &s.truth.frames[0], None, DEFAULT_MISSING_TOKEN)?,
        Dataset::Ppca(d) => write_csv_matrix(out, &d.y, None, DEFAULT_MISSING_TOKEN)?,
        Dataset::Eigenmodel(d) => write_csv_matrix(out, &d.y, None, DEFAULT_MISSING_TOKEN)?,
        Dataset::Mc(d) => {
            write_csv_matrix(out, &d.y, Some(&d.missing), DEFAULT_MISSING_TOKEN)?;
            for (i, x) in d.covariates.iter().enumerate() {
                let p = sibling(out, &format!("x{}.csv", i + 1));
                write_csv_matrix(&p, x, None, DEFAULT_MISSING_TOKEN)?;
                written.push(p);
            }
        }
    }
    let frames: Vec<Vec<Vec<f64>>> = s.truth.frames.iter().map(rows_of).collect();
    let truth = json!({
        "frames": frames,
        "lambda": s.truth.lambda,
        "sigma": s.truth.sigma,
        "mu": s.truth.mu,
        "beta": s.truth.beta,
        "held_out": s.truth.held_out,
    });
    let p = sibling(out, "truth.json");
    let text = serde_json::to_string_pretty(&truth).expect("plain numbers serialize");
    std::fs::write(&p, text).map_err(|e| BenchError::io(&p, e))?;
    written.push(p);
    Ok(written)
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}
