use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mdlbench::bench::{
    emit_report, parse_records, run_bench, BenchConfig, DatasetInfo, ReportFormat, Workload,
};
use mdlbench::workload::{
    gen_dataset, gen_knn_queries, gen_range_queries, load_csv_dataset, load_dataset,
    read_knn_workload, read_range_workload, save_dataset, write_knn_workload, write_range_workload,
    DatasetSpec, Distribution,
};
use mdlbench::{BuildParams, Dataset, IndexKind};

#[derive(Parser)]
#[command(
    name = "mdlbench",
    version,
    about = "Benchmark learned and classic multi-dimensional indices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset in the binary format.
    GenData {
        #[arg(long, default_value = "uniform")]
        dist: Distribution,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the distribution's two parameters (bounds, mean/sd, or log-mean/log-sd).
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        params: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a range or kNN query workload for a dataset.
    GenQueries {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Selectivity targets for range queries.
        #[arg(long, value_delimiter = ',', default_value = "0.0001,0.001,0.01,0.1")]
        sel: Vec<f64>,
        /// Neighbor counts for kNN queries.
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000,10000")]
        k: Vec<usize>,
        /// Number of queries; defaults to 100 for range and 20 per k for kNN.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build indices, run workloads and write one CSV record per measurement.
    Bench {
        #[arg(long)]
        data: PathBuf,
        /// Workload files written by gen-queries.
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        queries: Vec<PathBuf>,
        /// Comma-separated index names, or "all".
        #[arg(long, value_delimiter = ',', default_value = "all")]
        index: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "64")]
        epsilon: Vec<usize>,
        /// Check every result against a full scan before timing.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long, default_value_t = 2000)]
        cell_points: usize,
        /// Distribution label for the records; defaults to the data file stem.
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Render benchmark records as CSV or markdown tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Range,
    Knn,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            dist,
            n,
            d,
            seed,
            params,
            out,
        } => {
            let mut spec = DatasetSpec::new(dist, n, d, seed);
            if let Some(p) = params {
                spec = spec.with_params(p[0], p[1]);
            }
            let ds = gen_dataset(&spec)?;
            save_dataset(&ds, &out).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::GenQueries {
            data,
            mode,
            sel,
            k,
            count,
            seed,
            out,
        } => {
            let ds = read_data(&data)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let w = BufWriter::new(file);
            match mode {
                Mode::Range => {
                    let wl = gen_range_queries(&ds, count.unwrap_or(100), &sel, seed)?;
                    write_range_workload(&wl, w)?;
                }
                Mode::Knn => {
                    let wl = gen_knn_queries(&ds, count.unwrap_or(20), &k, seed)?;
                    write_knn_workload(&wl, w)?;
                }
            }
        }
        Command::Bench {
            data,
            queries,
            index,
            epsilon,
            verify,
            repeat,
            cell_points,
            dist,
            out,
        } => {
            let ds = read_data(&data)?;
            let workloads = queries
                .iter()
                .map(|p| read_workload(p))
                .collect::<Result<Vec<_>>>()?;
            let dist = dist.unwrap_or_else(|| {
                data.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let config = BenchConfig {
                indices: parse_indices(&index)?,
                epsilons: epsilon,
                repeat,
                verify,
                params: BuildParams {
                    cell_points,
                    ..BuildParams::default()
                },
            };
            let records = run_bench(&ds, &DatasetInfo::new(dist, &ds), &workloads, &config)?;
            let text = emit_report(&records, ReportFormat::Csv)?;
            fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Report { input, format, out } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let records = parse_records(&text)?;
            let report = emit_report(&records, format)?;
            match out {
                Some(path) => fs::write(&path, report)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => io::stdout().write_all(report.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn read_data(path: &Path) -> Result<Dataset> {
    let ds = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        load_csv_dataset(BufReader::new(file))?
    } else {
        load_dataset(path)?
    };
    Ok(ds)
}

// The header tells range and kNN workload files apart.
fn read_workload(path: &Path) -> Result<Workload> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let header = text.lines().next().unwrap_or_default();
    if header.starts_with("lo_") {
        Ok(Workload::Range(read_range_workload(text.as_bytes())?))
    } else if header.starts_with("q_") {
        Ok(Workload::Knn(read_knn_workload(text.as_bytes())?))
    } else {
        bail!("{}: not a range or kNN workload file", path.display())
    }
}

fn parse_indices(names: &[String]) -> Result<Vec<IndexKind>> {
    let mut kinds = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            kinds.extend(IndexKind::ALL);
        } else {
            kinds.push(name.parse::<IndexKind>()?);
        }
    }
    kinds.dedup();
    Ok(kinds)
}
