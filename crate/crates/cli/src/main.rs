use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dynhdb::harness::{
    emit_report, gen_gaussian_mixture, load_csv, load_labels, run_sliding_window, write_labels, write_points_csv,
    ReportFormat,
};
use dynhdb::{nmi, static_cluster, Mode, WindowConfig};

#[derive(Parser)]
#[command(name = "dynhdb", version, about = "Dynamic hierarchical density-based clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Bubble,
    Static,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian mixture as CSV.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        components: usize,
        #[arg(long, default_value_t = 0.1)]
        overlap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write ground-truth labels, one per line.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Cluster a CSV file once and write one label per point (-1 is noise).
    Static {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        minpts: usize,
        /// Defaults to minpts.
        #[arg(long)]
        min_cluster_size: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sliding-window workload and write one report record per slide.
    Window {
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 10_000)]
        w: usize,
        #[arg(long, default_value_t = 1_000)]
        d: usize,
        #[arg(long, default_value_t = 1_000)]
        i: usize,
        #[arg(long, default_value_t = 10)]
        minpts: usize,
        #[arg(long)]
        min_cluster_size: Option<u64>,
        #[arg(long, default_value_t = 0.01)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stream to replay; a Gaussian mixture is generated when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        slides: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        components: usize,
        /// Skip the per-slide static baseline (no NMI).
        #[arg(long)]
        no_baseline: bool,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
        format: FormatArg,
    },
    /// Score two label files against each other.
    Nmi { a: PathBuf, b: PathBuf },
}

fn run(cli: Cli) -> dynhdb::Result<()> {
    match cli.command {
        Command::Gen { n, dim, components, overlap, seed, out, labels } => {
            let (points, truth) = gen_gaussian_mixture(n, dim, components, overlap, seed)?;
            write_points_csv(&out, &points, None)?;
            if let Some(path) = labels {
                write_labels(path, &truth)?;
            }
            eprintln!("wrote {} points of dimension {dim}", points.len());
        }
        Command::Static { input, minpts, min_cluster_size, out } => {
            let points = load_csv(&input)?;
            let res = static_cluster(&points, minpts, min_cluster_size.unwrap_or(minpts as u64))?;
            write_labels(&out, &res.labels)?;
            println!("clusters={} noise={} points={}", res.n_clusters, res.noise_count(), res.ids.len());
        }
        Command::Window {
            mode,
            w,
            d,
            i,
            minpts,
            min_cluster_size,
            rho,
            seed,
            input,
            slides,
            dim,
            components,
            no_baseline,
            report,
            format,
        } => {
            let stream = match input {
                Some(path) => load_csv(path)?,
                None => gen_gaussian_mixture(w + slides * i, dim, components, 0.1, seed)?.0,
            };
            let mode = match mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Bubble => Mode::Bubble { rho },
                ModeArg::Static => Mode::Static,
            };
            let mut cfg = WindowConfig::new(w, d, i, minpts, mode);
            cfg.min_cluster_size = min_cluster_size;
            cfg.seed = seed;
            cfg.baseline = !no_baseline;
            cfg.max_slides = Some(slides);
            let reports = run_sliding_window(cfg, stream)?;
            let format = match format {
                FormatArg::Jsonl => ReportFormat::Jsonl,
                FormatArg::Csv => ReportFormat::Csv,
            };
            emit_report(&reports, &report, format)?;
            for r in &reports {
                let nmi = r.nmi.map_or("-".to_string(), |v| format!("{v:.4}"));
                eprintln!(
                    "slide {:>3}  online {:>9.2} ms  offline {:>9.2} ms  clusters {:>3}  nmi {nmi}",
                    r.slide, r.t_online_ms, r.t_offline_ms, r.n_clusters
                );
            }
        }
        Command::Nmi { a, b } => {
            let (la, lb) = (load_labels(a)?, load_labels(b)?);
            println!("{:.6}", nmi(&la, &lb)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
        Err(_) => {
            eprintln!("error: internal invariant violated");
            ExitCode::from(2)
        }
    }
}

