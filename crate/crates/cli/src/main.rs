//! `lrdq`: generate traces, queue them, shuffle them and run sweeps.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lrdq::experiments::{
    default_levels, default_sample_sizes, hurst_variance_time, sweep_blocksize, sweep_sample_size,
    SweepResult, SweepSource, DEFAULT_BLOCKSIZES, DEFAULT_REPS,
};
use lrdq::queue::{calibrate_bandwidth, simulate_packet_queue};
use lrdq::reorder::block_shuffle_with_plan;
use lrdq::synth::{
    alpha_for_hurst, gen_onoff_fluid, packetize, GeneratorSpec, OffRule, OnOffParams,
    PacketizationParams,
};
use lrdq::trace::{load_trace, write_trace, Trace};

#[derive(Parser)]
#[command(name = "lrdq", version, about = "Queueing experiments on packet traces and heavy-tailed on/off traffic")]
struct Cli {
    /// Seed for every random choice; replication r uses seed + r.
    #[arg(long, global = true, env = "LRDQ_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic packet trace.
    Generate(GenerateArgs),
    /// Queue a trace on a FIFO server and report summary statistics.
    Simulate(SimulateArgs),
    /// Block-shuffle a trace.
    Shuffle(ShuffleArgs),
    /// Mean queue against sample size.
    SweepSamples(SweepSamplesArgs),
    /// Mean queue against shuffle block size.
    SweepBlocks(SweepBlocksArgs),
    /// Variance-time Hurst estimate of a trace.
    Hurst(HurstArgs),
    /// Bandwidth that gives a trace a target offered utilization.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Onoff,
    Poisson,
}

#[derive(Args)]
struct GeneratorArgs {
    #[arg(long, value_enum, default_value = "onoff")]
    model: Model,
    /// On-period transmission rate, in units of the server rate.
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    /// Pareto tail index of the on periods.
    #[arg(long, conflicts_with = "hurst", default_value_t = 1.4)]
    alpha: f64,
    /// Target Hurst parameter; sets alpha = 3 - 2H.
    #[arg(long)]
    hurst: Option<f64>,
    /// Pareto scale (shortest on period), seconds.
    #[arg(long, default_value_t = 1.0)]
    xm: f64,
    /// Long-run offered load on the unit-rate server.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value = "iid-exponential")]
    off_rule: OffRule,
    /// Packet size, bytes.
    #[arg(long, default_value_t = 1000)]
    packet_size: u64,
    /// Bytes per second that one unit of server rate stands for.
    #[arg(long, default_value_t = 1000.0)]
    rate_ref: f64,
    /// Mean inter-arrival gap of the Poisson model, seconds.
    #[arg(long, default_value_t = 1.0)]
    mean_gap: f64,
}

impl GeneratorArgs {
    fn params(&self) -> Result<OnOffParams> {
        let alpha = self.hurst.map_or(self.alpha, alpha_for_hurst);
        Ok(OnOffParams::new(self.a, alpha, self.xm, self.lambda, self.off_rule)?)
    }

    fn packetization(&self) -> Result<PacketizationParams> {
        let pp = PacketizationParams {
            packet_size: self.packet_size,
            server_rate_ref: self.rate_ref,
        };
        pp.validate()?;
        Ok(pp)
    }

    fn spec(&self) -> Result<GeneratorSpec> {
        Ok(match self.model {
            Model::Onoff => GeneratorSpec::OnOff {
                params: self.params()?,
                packetization: self.packetization()?,
            },
            Model::Poisson => GeneratorSpec::Poisson {
                mean_gap: self.mean_gap,
                packet_size: self.packet_size,
            },
        })
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Rate {
    /// Server bandwidth, bytes per second.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Target offered utilization; the bandwidth is calibrated from the trace.
    #[arg(long)]
    utilization: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Number of packets to emit.
    #[arg(long, conflicts_with = "cycles", required_unless_present = "cycles")]
    packets: Option<usize>,
    /// Number of on/off cycles to packetize instead.
    #[arg(long)]
    cycles: Option<usize>,
    /// Also write the underlying on/off periods (requires --cycles).
    #[arg(long, requires = "cycles")]
    fluid_out: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    rate: Rate,
    /// Write the queue-length timeline to this file.
    #[arg(long)]
    timeline: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShuffleArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Packets per block.
    #[arg(long)]
    blocksize: usize,
    /// Write the block permutation to this file.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepSamplesArgs {
    /// Draw windows from this trace instead of generating samples.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Comma-separated sample sizes, packets.
    #[arg(long, value_delimiter = ',', conflicts_with = "max_size")]
    sizes: Option<Vec<usize>>,
    /// Largest sample size for the default log-spaced grid.
    #[arg(long, default_value_t = 1_000_000)]
    max_size: usize,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value_t = 0.5)]
    utilization: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepBlocksArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Comma-separated block sizes, packets.
    #[arg(long, value_delimiter = ',')]
    blocksizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value_t = 0.5)]
    utilization: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HurstArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Base bin width, seconds.
    #[arg(long, default_value_t = 1.0)]
    base_bin: f64,
    /// Comma-separated aggregation levels.
    #[arg(long, value_delimiter = ',', conflicts_with = "max_level")]
    levels: Option<Vec<usize>>,
    /// Largest level of the default 1, 2, 5, 10, ... grid.
    #[arg(long, default_value_t = 1000)]
    max_level: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    utilization: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Writes through a temporary file in the target directory so a failed run
/// never leaves a partial output behind. `None` means stdout.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("cannot write to {}", dir.display()))?;
            body(&mut io::BufWriter::new(tmp.as_file_mut()))?;
            tmp.persist(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
        }
    }
    Ok(())
}

/// Writes `<out>.meta` next to a file output.
fn emit_meta(out: Option<&Path>, seed: u64, extra: &[(String, String)]) -> Result<()> {
    let Some(out) = out else { return Ok(()) };
    let mut meta = out.as_os_str().to_owned();
    meta.push(".meta");
    let argv: Vec<String> = std::env::args().collect();
    emit(Some(Path::new(&meta)), |w| {
        writeln!(w, "argv={}", argv.join(" "))?;
        writeln!(w, "seed={seed}")?;
        writeln!(w, "lrdq_version={}", lrdq::VERSION)?;
        for (k, v) in extra {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    })
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn load(path: &Path) -> Result<Trace> {
    Ok(load_trace(path)?)
}

fn bandwidth_for(trace: &Trace, rate: &Rate) -> Result<f64> {
    match (rate.bandwidth, rate.utilization) {
        (Some(b), None) => Ok(b),
        (None, Some(u)) => Ok(calibrate_bandwidth(trace, u)?),
        _ => bail!("give exactly one of --bandwidth and --utilization"),
    }
}

fn emit_sweep(result: &SweepResult, out: Option<&Path>, seed: u64) -> Result<()> {
    emit(out, |w| result.write_csv(w))?;
    emit_meta(out, seed, &result.config.key_values())
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(args) => {
            let spec = args.generator.spec()?;
            let trace = match (args.packets, args.cycles) {
                (Some(n), _) => spec.generate(n, seed)?,
                (None, Some(n)) => {
                    let GeneratorSpec::OnOff { params, packetization } = spec else {
                        bail!("--cycles applies to the on/off model only");
                    };
                    let fluid = gen_onoff_fluid(&params, n, seed)?;
                    if let Some(path) = &args.fluid_out {
                        emit(Some(path), |w| fluid.write_csv(w))?;
                    }
                    packetize(&fluid, &packetization)?
                }
                (None, None) => unreachable!("clap requires --packets or --cycles"),
            };
            emit(args.out.as_deref(), |w| write_trace(&trace, w))?;
            emit_meta(
                args.out.as_deref(),
                seed,
                &[kv("generator", spec), kv("n_packets", trace.len())],
            )
        }
        Command::Simulate(args) => {
            let trace = load(&args.trace)?;
            let bandwidth = bandwidth_for(&trace, &args.rate)?;
            let (stats, timeline) = simulate_packet_queue(&trace, bandwidth, args.timeline.is_some())?;
            if let (Some(path), Some(tl)) = (&args.timeline, &timeline) {
                emit(Some(path), |w| tl.write_csv(w))?;
            }
            emit(args.out.as_deref(), |w| stats.write_csv(w))?;
            emit_meta(
                args.out.as_deref(),
                seed,
                &[kv("trace", args.trace.display()), kv("bandwidth", bandwidth)],
            )
        }
        Command::Shuffle(args) => {
            let trace = load(&args.trace)?;
            let (shuffled, plan) = block_shuffle_with_plan(&trace, args.blocksize, seed)?;
            if let Some(path) = &args.plan_out {
                emit(Some(path), |w| plan.write_csv(w))?;
            }
            emit(args.out.as_deref(), |w| write_trace(&shuffled, w))?;
            emit_meta(
                args.out.as_deref(),
                seed,
                &[kv("trace", args.trace.display()), kv("blocksize", args.blocksize)],
            )
        }
        Command::SweepSamples(args) => {
            let trace = args.trace.as_deref().map(load).transpose()?;
            let source = match &trace {
                Some(t) => SweepSource::Trace(t),
                None => SweepSource::Generator(args.generator.spec()?),
            };
            let sizes = match args.sizes {
                Some(s) => s,
                None => default_sample_sizes(trace.as_ref().map_or(args.max_size, |t| t.len().min(args.max_size))),
            };
            let result = sweep_sample_size(source, &sizes, args.reps, args.utilization, seed)?;
            emit_sweep(&result, args.out.as_deref(), seed)
        }
        Command::SweepBlocks(args) => {
            let trace = load(&args.trace)?;
            let grid = args.blocksizes.unwrap_or_else(|| DEFAULT_BLOCKSIZES.to_vec());
            let result = sweep_blocksize(&trace, &grid, args.reps, args.utilization, seed)?;
            emit_sweep(&result, args.out.as_deref(), seed)
        }
        Command::Hurst(args) => {
            let trace = load(&args.trace)?;
            let levels = args.levels.unwrap_or_else(|| default_levels(args.max_level));
            let est = hurst_variance_time(&trace, args.base_bin, &levels)?;
            emit(args.out.as_deref(), |w| est.write_csv(w))?;
            emit_meta(args.out.as_deref(), seed, &[kv("trace", args.trace.display())])
        }
        Command::Calibrate(args) => {
            let trace = load(&args.trace)?;
            let bandwidth = calibrate_bandwidth(&trace, args.utilization)?;
            emit(args.out.as_deref(), |w| {
                writeln!(w, "bandwidth_bytes_per_s,utilization")?;
                writeln!(w, "{bandwidth},{}", args.utilization)
            })?;
            emit_meta(args.out.as_deref(), seed, &[kv("trace", args.trace.display())])
        }
    }
}

/// One line per cause, skipping causes their parent already quotes.
fn report(err: &anyhow::Error) -> String {
    let mut line = err.to_string();
    for cause in err.chain().skip(1) {
        let msg = cause.to_string();
        if !line.contains(&msg) {
            line = format!("{line}: {msg}");
        }
    }
    line
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot start worker pool")
            .and_then(|_| run(cli)),
        None => run(cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", report(&err));
            ExitCode::FAILURE
        }
    }
}
