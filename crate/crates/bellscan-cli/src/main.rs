//! `bellscan` command-line front end.
//!
//! Every subcommand is a pure function of its flags and input files: rerun
//! it and the bytes match, whatever the thread count. Times are integer
//! picoseconds throughout (20 ns = 20000 ps). Exit code 2 flags usage or
//! data errors, 0 everything else; statistics a sample cannot support are
//! reported as undefined, not as errors.

use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bellscan::ingest::{
    format_sig6, read_events_path, read_scan_csv_path, write_events_path, write_scan_csv,
    write_scan_csv_path,
};
use bellscan::model::HeraldFilter;
use bellscan::scan::{evaluate_point, pvalue_histogram, scan_1d, scan_2d, PValueKind, ScanGrid, ScanResult};
use bellscan::synth::{generate, SynthConfig};

const DEFAULT_WINDOW_STOP_PS: i64 = 50_000;

#[derive(Parser)]
#[command(
    name = "bellscan",
    version,
    about = "CHSH and no-signaling statistics for event-ready Bell test data"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze one event-ready sample at a fixed window offset and threshold
    Analyze(AnalyzeArgs),
    /// Sweep the window-start offset at a fixed threshold
    Scan(ScanArgs),
    /// Sweep offset and threshold jointly over a grid
    Scan2d(Scan2dArgs),
    /// Histogram the p-values of an existing scan table
    Hist(HistArgs),
    /// Generate a synthetic event file from a seeded model
    Synth(SynthArgs),
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Event CSV to read
    #[arg(long)]
    input: PathBuf,
    /// Window-start offset in ps (negative opens the window early)
    #[arg(long, allow_negative_numbers = true)]
    offset: i64,
    /// Minimum clean attempts required before the heralding attempt
    #[arg(long)]
    threshold: u32,
    /// Window stop in ps
    #[arg(long, default_value_t = DEFAULT_WINDOW_STOP_PS, allow_negative_numbers = true)]
    window_stop: i64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(clap::Args)]
struct ScanArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    offset_min: i64,
    #[arg(long, allow_negative_numbers = true)]
    offset_max: i64,
    /// Offset step in ps (inclusive sweep)
    #[arg(long)]
    step: i64,
    #[arg(long)]
    threshold: u32,
    #[arg(long)]
    output: PathBuf,
    /// Worker threads (default: one per core)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct Scan2dArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    offset_min: i64,
    #[arg(long, allow_negative_numbers = true)]
    offset_max: i64,
    #[arg(long)]
    offset_step: i64,
    #[arg(long)]
    threshold_min: u32,
    #[arg(long)]
    threshold_max: u32,
    #[arg(long)]
    threshold_step: u32,
    #[arg(long)]
    output: PathBuf,
    /// Worker threads (default: one per core)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct HistArgs {
    /// Scan CSV produced by `scan` or `scan2d`
    #[arg(long)]
    scan: PathBuf,
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    /// No-signaling chi-square p-values
    Nosig,
    /// CHSH one-tailed p-values
    Chsh,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Event CSV to write
    #[arg(long)]
    out: PathBuf,
    /// key=value config file applied before any flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Excitation attempts to simulate
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Entangled-state visibility in [0, 1]
    #[arg(long)]
    visibility: Option<f64>,
    /// Weight of the contaminated (reflection) component in [0, 1]
    #[arg(long)]
    wref: Option<f64>,
    /// Setting leakage of the contaminated component, in [-1, 1]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Emission time constant of genuine events, ps
    #[arg(long)]
    tau_nv: Option<f64>,
    /// Decay constant of reflection events, ps
    #[arg(long)]
    tau_ref: Option<f64>,
    /// How far before the window reflections lead, ps
    #[arg(long, allow_negative_numbers = true)]
    lead: Option<i64>,
    /// Per-attempt probability of an invalid marker, in [0, 1]
    #[arg(long)]
    invalid_rate: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.cmd {
        Cmd::Analyze(a) => analyze(a),
        Cmd::Scan(a) => scan(a),
        Cmd::Scan2d(a) => scan2d(a),
        Cmd::Hist(a) => hist(a),
        Cmd::Synth(a) => synth(a),
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Box<dyn Error>> {
    match threads {
        None => Ok(f()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(f)),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<(), Box<dyn Error>> {
    let events = read_events_path(&a.input)?;
    let base = HeraldFilter::new(0, 0, a.window_stop, 0);
    let row = evaluate_point(&events, &base, a.offset, a.threshold);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match a.format {
        Format::Csv => write_scan_csv(&[row], &mut out)?,
        Format::Json => write_json_report(&row, &mut out)?,
        Format::Text => write_text_report(&row, &mut out)?,
    }
    Ok(())
}

/// Cell values in CSV column order, after the three integer columns.
fn stat_cells(r: &ScanResult) -> [Option<f64>; 14] {
    match r.stats.as_ref() {
        None => [None; 14],
        Some(st) => [
            Some(st.chsh.value),
            Some(st.chsh.sigma),
            st.chsh.p,
            Some(st.p_chsh_binomial),
            Some(st.nosig.ab0.value),
            Some(st.nosig.ab0.sigma),
            Some(st.nosig.ab1.value),
            Some(st.nosig.ab1.sigma),
            Some(st.nosig.ba0.value),
            Some(st.nosig.ba0.sigma),
            Some(st.nosig.ba1.value),
            Some(st.nosig.ba1.sigma),
            st.chi2.map(|c| c.chi2),
            st.chi2.map(|c| c.p),
        ],
    }
}

const STAT_NAMES: [&str; 14] = [
    "S_chsh",
    "sigma_chsh",
    "p_chsh_gauss",
    "p_chsh_binom",
    "S_AB0",
    "sig_AB0",
    "S_AB1",
    "sig_AB1",
    "S_BA0",
    "sig_BA0",
    "S_BA1",
    "sig_BA1",
    "chi2",
    "p_chi2",
];

fn write_text_report<W: Write>(r: &ScanResult, mut w: W) -> Result<(), Box<dyn Error>> {
    writeln!(w, "start_offset_ps: {}", r.start_offset_ps)?;
    writeln!(w, "invalid_threshold: {}", r.invalid_threshold)?;
    writeln!(w, "N: {}", r.n_selected)?;
    for (name, cell) in STAT_NAMES.iter().zip(stat_cells(r)) {
        match cell {
            Some(v) => writeln!(w, "{name}: {}", format_sig6(v))?,
            None => writeln!(w, "{name}: undefined")?,
        }
    }
    Ok(())
}

/// Same fields as the CSV schema, one to one; undefined cells become null.
fn write_json_report<W: Write>(r: &ScanResult, mut w: W) -> Result<(), Box<dyn Error>> {
    writeln!(w, "{{")?;
    writeln!(w, "  \"start_offset_ps\": {},", r.start_offset_ps)?;
    writeln!(w, "  \"invalid_threshold\": {},", r.invalid_threshold)?;
    writeln!(w, "  \"N\": {},", r.n_selected)?;
    let cells = stat_cells(r);
    for (i, (name, cell)) in STAT_NAMES.iter().zip(cells).enumerate() {
        let comma = if i + 1 == STAT_NAMES.len() { "" } else { "," };
        match cell {
            Some(v) => writeln!(w, "  \"{name}\": {}{comma}", format_sig6(v))?,
            None => writeln!(w, "  \"{name}\": null{comma}")?,
        }
    }
    writeln!(w, "}}")?;
    Ok(())
}

fn scan(a: ScanArgs) -> Result<(), Box<dyn Error>> {
    let events = read_events_path(&a.input)?;
    let base = HeraldFilter::new(0, 0, DEFAULT_WINDOW_STOP_PS, a.threshold);
    if a.step <= 0 {
        return Err("--step must be positive".into());
    }
    let grid = in_pool(a.threads, || {
        scan_1d(&events, &base, a.offset_min, a.offset_max, a.step)
    })?;
    write_scan_csv_path(&grid.results, &a.output)?;
    Ok(())
}

fn scan2d(a: Scan2dArgs) -> Result<(), Box<dyn Error>> {
    let events = read_events_path(&a.input)?;
    let base = HeraldFilter::new(0, 0, DEFAULT_WINDOW_STOP_PS, 0);
    if a.offset_step <= 0 || a.threshold_step == 0 {
        return Err("step sizes must be positive".into());
    }
    let grid = in_pool(a.threads, || {
        scan_2d(
            &events,
            &base,
            a.offset_min,
            a.offset_max,
            a.offset_step,
            a.threshold_min,
            a.threshold_max,
            a.threshold_step,
        )
    })?;
    write_scan_csv_path(&grid.results, &a.output)?;
    Ok(())
}

fn hist(a: HistArgs) -> Result<(), Box<dyn Error>> {
    let rows = read_scan_csv_path(&a.scan)?;
    let grid = ScanGrid::from_rows(rows)?;
    let kind = match a.which {
        Which::Nosig => PValueKind::NoSignalChi2,
        Which::Chsh => PValueKind::Chsh,
    };
    let h = pvalue_histogram(&grid, kind);
    let mut text = String::from("bin_low,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        text.push_str(&format!("{:.2},{c}\n", h.bin_edges[i]));
    }
    fs::write(&a.output, text)?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), Box<dyn Error>> {
    let mut cfg = SynthConfig::default();
    if let Some(path) = &a.config {
        cfg.apply_kv(&read_config(path)?)?;
    }
    if let Some(v) = a.n {
        cfg.n_attempts = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.visibility {
        cfg.visibility = v;
    }
    if let Some(v) = a.wref {
        cfg.w_ref = v;
    }
    if let Some(v) = a.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = a.tau_nv {
        cfg.tau_nv_ps = v;
    }
    if let Some(v) = a.tau_ref {
        cfg.tau_ref_ps = v;
    }
    if let Some(v) = a.lead {
        cfg.ref_lead_ps = v;
    }
    if let Some(v) = a.invalid_rate {
        cfg.invalid_rate = v;
    }
    let events = generate(&cfg)?;
    write_events_path(&events, &a.out)?;
    Ok(())
}

fn read_config(path: &Path) -> Result<String, Box<dyn Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}
