//! `spikewatch`: streaming anomaly detection over spike-encoded time series.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{config_err, data_err, AppError, DetectorArgs, Resolved};
use spikewatch::data;
use spikewatch::detect;
use spikewatch::encode::{AdaptiveEncoder, GrfEncoder, DEFAULT_THETA_LATENCY};
use spikewatch::eval;
use spikewatch::neuron::{generate_spikes, SpikeMode};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "spikewatch",
    version,
    about = "Adaptive spike-train encoding and anomaly detection for streaming data",
    after_help = "Exit codes: 0 success, 2 configuration error, 3 data error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector over a series and write a detection CSV
    Detect(DetectorArgs),
    /// Score one detector run per forgetting-rate grid point
    Sweep(SweepArgs),
    /// Emit the adaptive encoder's view of a series (rates or spike trace)
    Encode(EncodeArgs),
    /// Evaluate Gaussian receptive-field latencies
    GrfEncode(GrfArgs),
    /// Re-score an existing detection CSV against labels
    Score(ScoreArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    detector: DetectorArgs,

    /// Comma-separated alpha grid (default: 0.0005 to 0.05 in 0.0005 steps)
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    detector: DetectorArgs,

    /// Emit a spike trace (source<TAB>time_ms) instead of the rate table
    #[arg(long)]
    spikes: bool,
}

#[derive(Args)]
struct GrfArgs {
    /// Number of receptive fields
    #[arg(long, default_value_t = 7)]
    n: usize,

    /// Lower bound of the covered value range
    #[arg(long)]
    min: f64,

    /// Upper bound of the covered value range
    #[arg(long)]
    max: f64,

    /// Width parameter of the Gaussian profiles
    #[arg(long, default_value_t = 1.5)]
    beta: f64,

    /// Latency threshold above which a neuron stays silent
    #[arg(long, default_value_t = DEFAULT_THETA_LATENCY)]
    theta_latency: f64,

    /// Encode a single value
    #[arg(long)]
    value: Option<f64>,

    /// Encode every row of a series CSV
    #[arg(long)]
    input: Option<PathBuf>,

    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Emit a spike trace for firing neurons instead of the latency table
    #[arg(long)]
    spikes: bool,

    /// Interval the latency unit maps onto, ms
    #[arg(long, default_value_t = 10.0)]
    interval_ms: f64,
}

#[derive(Args)]
struct ScoreArgs {
    /// Detection CSV produced by `detect`
    #[arg(long)]
    input: PathBuf,

    /// Anomaly-window label JSON
    #[arg(long)]
    labels: PathBuf,

    /// Dataset key when the label file maps keys to windows
    #[arg(long)]
    dataset_key: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(args) => cmd_detect(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Encode(args) => cmd_encode(&args),
        Command::GrfEncode(args) => cmd_grf_encode(&args),
        Command::Score(args) => cmd_score(&args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn read_series_warned(path: &Path) -> Result<data::Series, AppError> {
    let series = data::read_series(path).map_err(data_err)?;
    for warning in &series.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(series)
}

fn load_windows(
    labels: &Path,
    dataset_key: Option<&str>,
) -> Result<Vec<data::AnomalyWindow>, AppError> {
    data::read_windows(labels, dataset_key).map_err(data_err)
}

fn print_card(card: &eval::ScoreCard) {
    println!(
        "tp={} fp={} fn={} score={}",
        card.true_pos, card.false_pos, card.false_neg, card.score
    );
}

fn maybe_print_config(resolved: &Resolved, print: bool) -> bool {
    if print {
        println!(
            "{}",
            serde_json::to_string_pretty(&resolved.as_json()).expect("config serializes")
        );
    }
    print
}

/// Open `--out` or fall back to stdout.
fn out_writer(out: Option<&Path>) -> Result<Box<dyn Write>, AppError> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| data_err(format!("cannot create {}: {e}", path.display())))?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn require_input(resolved: &Resolved) -> Result<PathBuf, AppError> {
    resolved
        .input
        .clone()
        .ok_or_else(|| config_err("an input series is required (--input)"))
}

fn cmd_detect(args: &DetectorArgs) -> Result<(), AppError> {
    let resolved = args.resolve()?;
    if maybe_print_config(&resolved, args.print_config) {
        return Ok(());
    }
    let input = require_input(&resolved)?;
    let out = resolved
        .out
        .clone()
        .ok_or_else(|| config_err("an output path is required (--out)"))?;
    let series = read_series_warned(&input)?;

    let run = detect::run(
        series.points.iter().map(|p| (p.timestamp.as_str(), p.value)),
        resolved.detector.clone(),
    )
    .map_err(|e| config_err(e.to_string()))?;
    for err in &run.ingest_errors {
        eprintln!("warning: row {} rejected: {}", err.row, err.message);
    }

    data::write_detections(&out, &resolved.comment_lines(), &run.records).map_err(data_err)?;

    if let Some(labels) = &resolved.labels {
        let windows = load_windows(labels, resolved.dataset_key.as_deref())?;
        print_card(&eval::score(&run.records, &windows));
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), AppError> {
    let resolved = args.detector.resolve()?;
    if maybe_print_config(&resolved, args.detector.print_config) {
        return Ok(());
    }
    let input = require_input(&resolved)?;
    let out = resolved
        .out
        .clone()
        .ok_or_else(|| config_err("an output path is required (--out)"))?;
    let labels = resolved
        .labels
        .clone()
        .ok_or_else(|| config_err("sweep scoring requires labels (--labels)"))?;

    let alphas = args
        .alphas
        .clone()
        .or_else(|| resolved.alphas.clone())
        .unwrap_or_else(eval::default_alpha_grid);

    let series = read_series_warned(&input)?;
    let windows = load_windows(&labels, resolved.dataset_key.as_deref())?;

    let rows = eval::sweep(&series.points, &windows, &resolved.detector, &alphas)
        .map_err(|e| config_err(e.to_string()))?;

    // every sweep run uses an ewma tracker at its grid alpha, whatever the
    // base tracker was
    let mut comments: Vec<String> = resolved
        .comment_lines()
        .into_iter()
        .filter(|line| !line.starts_with("tracker:"))
        .collect();
    comments.insert(1, format!("tracker: ewma, grid: {} alphas", rows.len()));
    data::write_sweep(&out, &comments, &rows).map_err(data_err)?;

    let best = rows
        .iter()
        .max_by(|a, b| a.card.score.cmp(&b.card.score))
        .expect("grid is non-empty");
    println!(
        "best alpha={:.4} tp={} fp={} fn={} score={}",
        best.alpha, best.card.true_pos, best.card.false_pos, best.card.false_neg, best.card.score
    );
    Ok(())
}

fn cmd_encode(args: &EncodeArgs) -> Result<(), AppError> {
    let resolved = args.detector.resolve()?;
    if maybe_print_config(&resolved, args.detector.print_config) {
        return Ok(());
    }
    let input = require_input(&resolved)?;
    let series = read_series_warned(&input)?;

    let d = &resolved.detector;
    if d.spike_mode == SpikeMode::Poisson && d.seed.is_none() {
        return Err(config_err("poisson spike generation requires --seed"));
    }
    let tracker = d.tracker.build().map_err(|e| config_err(e.to_string()))?;
    let mut encoder = AdaptiveEncoder::new(
        tracker,
        d.rho_max,
        d.epsilon_sd,
        resolved.effective_warmup(),
    )
    .map_err(|e| config_err(e.to_string()))?;

    let mut w = out_writer(resolved.out.as_deref())?;
    let mut emit = |w: &mut dyn Write| -> std::io::Result<()> {
        for c in resolved.comment_lines() {
            writeln!(w, "# {c}")?;
        }
        if !args.spikes {
            writeln!(w, "index,value,mean,sd,rate")?;
        }
        for (index, point) in series.points.iter().enumerate() {
            let sample = encoder
                .encode(point.value)
                .map_err(|e| std::io::Error::other(e.to_string()))?;
            if args.spikes {
                let seed = d
                    .seed
                    .map(|s| s.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
                let train =
                    generate_spikes(&sample, d.interval_ms, d.spike_mode, seed, 0)
                        .map_err(|e| std::io::Error::other(e.to_string()))?;
                for t in train.times {
                    writeln!(w, "0\t{:.3}", index as f64 * d.interval_ms + t)?;
                }
            } else {
                let mean = encoder.tracker().mean().unwrap_or(0.0);
                let sd = encoder.tracker().std_dev().unwrap_or(0.0);
                writeln!(
                    w,
                    "{},{},{:.6},{:.6},{:.6}",
                    index, point.value, mean, sd, sample.normalized
                )?;
            }
        }
        w.flush()
    };
    emit(&mut w).map_err(data_err)
}

fn cmd_grf_encode(args: &GrfArgs) -> Result<(), AppError> {
    let encoder = GrfEncoder::new(args.n, args.min, args.max, args.beta, args.theta_latency)
        .map_err(|e| config_err(e.to_string()))?;
    if !(args.interval_ms.is_finite() && args.interval_ms > 0.0) {
        return Err(config_err(format!(
            "interval must be positive, got {} ms",
            args.interval_ms
        )));
    }

    // one value or a whole series, never both
    let rows: Vec<(Option<usize>, f64)> = match (&args.value, &args.input) {
        (Some(v), None) => vec![(None, *v)],
        (None, Some(path)) => read_series_warned(path)?
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (Some(i), p.value))
            .collect(),
        _ => return Err(config_err("exactly one of --value or --input is required")),
    };

    let mut w = out_writer(args.out.as_deref())?;
    let emit = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "# tool: spikewatch {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(
            w,
            "# grf: n={} range=[{}, {}] beta={} sigma={:.6} theta_latency={}",
            args.n,
            args.min,
            args.max,
            args.beta,
            encoder.sigma(),
            args.theta_latency
        )?;
        if !args.spikes {
            let header = if rows[0].0.is_some() {
                "index,value,neuron,center,latency,fires"
            } else {
                "neuron,center,latency,fires"
            };
            writeln!(w, "{header}")?;
        }
        for (index, value) in &rows {
            let responses = encoder
                .latencies(*value)
                .map_err(|e| std::io::Error::other(e.to_string()))?;
            for r in responses {
                if args.spikes {
                    if r.fires {
                        let offset = index.unwrap_or(0) as f64 * args.interval_ms;
                        let t = offset
                            + spikewatch::encode::latency_to_time(r.latency, args.interval_ms);
                        writeln!(w, "{}\t{t:.3}", r.neuron)?;
                    }
                } else {
                    let fires = if r.fires { 1 } else { 0 };
                    match index {
                        Some(i) => writeln!(
                            w,
                            "{i},{value},{},{},{:.6},{fires}",
                            r.neuron,
                            encoder.centers()[r.neuron],
                            r.latency
                        )?,
                        None => writeln!(
                            w,
                            "{},{},{:.6},{fires}",
                            r.neuron,
                            encoder.centers()[r.neuron],
                            r.latency
                        )?,
                    }
                }
            }
        }
        w.flush()
    };
    emit(&mut w).map_err(data_err)
}

fn cmd_score(args: &ScoreArgs) -> Result<(), AppError> {
    let records = data::read_detections(&args.input).map_err(data_err)?;
    let windows = load_windows(&args.labels, args.dataset_key.as_deref())?;
    print_card(&eval::score(&records, &windows));
    Ok(())
}
