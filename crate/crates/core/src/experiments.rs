//! Replicated sweeps and the variance-time Hurst estimator.
//!
//! Two sweeps are provided. [`sweep_sample_size`] queues samples of growing
//! length and reports how the mean queue depends on sample size.
//! [`sweep_blocksize`] block-shuffles one trace at several block sizes and
//! reports how much of the queueing survives the loss of long-range order.
//!
//! Replication `r` always uses seed `base_seed + r`. Replications run in
//! parallel on the current rayon pool and are collected in index order, so
//! results do not depend on scheduling.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::queue::{calibrate_bandwidth, simulate_packet_queue};
use crate::reorder::block_shuffle;
use crate::stats::{mean, ols_slope, sample_std};
use crate::synth::GeneratorSpec;
use crate::trace::{take_window, Trace};

/// Default replication count.
pub const DEFAULT_REPS: usize = 10;

/// Default block-size grid, packets.
pub const DEFAULT_BLOCKSIZES: [usize; 6] = [1, 10, 100, 1_000, 10_000, 100_000];

/// Log-spaced sample sizes `1e3, 3e3, 1e4, ...` not exceeding `max`, with
/// `max` itself appended as the final point.
pub fn default_sample_sizes(max: usize) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut decade = 1_000usize;
    while decade < max {
        sizes.push(decade);
        if decade * 3 < max {
            sizes.push(decade * 3);
        }
        decade *= 10;
    }
    sizes.push(max);
    sizes
}

/// Mean of replication means and their sample standard deviation (`n - 1`
/// divisor). The deviation is `None` for a single replication.
pub fn summarize_replications(means: &[f64]) -> Result<(f64, Option<f64>)> {
    let m = mean(means).ok_or_else(|| Error::InsufficientData("no replications".into()))?;
    Ok((m, sample_std(means)))
}

/// What a sample-size sweep draws its samples from.
#[derive(Debug, Clone, Copy)]
pub enum SweepSource<'a> {
    /// Contiguous windows at random offsets of a fixed trace.
    Trace(&'a Trace),
    /// Fresh traces from a generator.
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    SampleSize,
    BlockSize,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::SampleSize => "sample-size",
            SweepKind::BlockSize => "blocksize",
        })
    }
}

/// Provenance of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// Trace label or generator description.
    pub source: String,
    pub target_utilization: f64,
    pub base_seed: u64,
    pub n_reps: usize,
    /// Bandwidth shared by all replications (block-size sweeps only).
    pub bandwidth: Option<f64>,
    /// Mean queue of the unshuffled trace (block-size sweeps only).
    pub baseline_mean_q: Option<f64>,
}

impl SweepConfig {
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("sweep".to_string(), self.kind.to_string()),
            ("source".to_string(), self.source.clone()),
            ("utilization".to_string(), self.target_utilization.to_string()),
            ("base_seed".to_string(), self.base_seed.to_string()),
            ("n_reps".to_string(), self.n_reps.to_string()),
        ];
        if let Some(b) = self.bandwidth {
            kv.push(("bandwidth".to_string(), b.to_string()));
        }
        if let Some(q) = self.baseline_mean_q {
            kv.push(("baseline_mean_q".to_string(), q.to_string()));
        }
        kv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Sample size or block size, packets.
    pub x: usize,
    pub replication_means: Vec<f64>,
    pub mean_of_means: f64,
    /// `None` when only one replication was run.
    pub std_dev: Option<f64>,
    pub n_reps: usize,
}

impl SweepPoint {
    fn from_means(x: usize, replication_means: Vec<f64>) -> Result<Self> {
        let (mean_of_means, std_dev) = summarize_replications(&replication_means)?;
        Ok(Self {
            x,
            n_reps: replication_means.len(),
            replication_means,
            mean_of_means,
            std_dev,
        })
    }

    /// `std_dev / mean_of_means`.
    pub fn coefficient_of_variation(&self) -> Option<f64> {
        self.std_dev.map(|s| s / self.mean_of_means)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub config: SweepConfig,
}

impl SweepResult {
    pub fn xs(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_of_means).collect()
    }

    /// Writes `x,mean_of_means,std_dev,n_reps,rep_1,...`. A missing standard
    /// deviation and missing replications are left as empty cells.
    pub fn write_csv(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        let width = self.points.iter().map(|p| p.n_reps).max().unwrap_or(0);
        write!(w, "x,mean_of_means,std_dev,n_reps")?;
        for r in 1..=width {
            write!(w, ",rep_{r}")?;
        }
        writeln!(w)?;
        for p in &self.points {
            let sd = p.std_dev.map(|s| s.to_string()).unwrap_or_default();
            write!(w, "{},{},{},{}", p.x, p.mean_of_means, sd, p.n_reps)?;
            for r in 0..width {
                match p.replication_means.get(r) {
                    Some(m) => write!(w, ",{m}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        w.flush()
    }

    /// Writes the `key=value` provenance sidecar.
    pub fn write_sidecar(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = writer;
        for (k, v) in self.config.key_values() {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }
}

fn check_grid(grid: &[usize], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(format!("{what} grid is empty")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

fn check_common(n_reps: usize, target_utilization: f64) -> Result<()> {
    if n_reps == 0 {
        return Err(invalid("n_reps must be at least 1"));
    }
    if !(target_utilization > 0.0 && target_utilization < 1.0) {
        return Err(invalid(format!(
            "target utilization must lie in (0, 1), got {target_utilization}"
        )));
    }
    Ok(())
}

/// Mean queue of `trace` with bandwidth calibrated to `target_utilization`.
pub fn calibrated_mean_q(trace: &Trace, target_utilization: f64) -> Result<f64> {
    let b = calibrate_bandwidth(trace, target_utilization)?;
    Ok(simulate_packet_queue(trace, b, false)?.0.mean_q)
}

/// Mean queue against sample size.
///
/// For a trace source each replication is a contiguous window at a random
/// offset; a size equal to the whole trace gets a single replication. For a
/// generator source, replication `r` is a fresh trace from seed
/// `base_seed + r`, and smaller sizes are prefixes of larger ones. Bandwidth
/// is calibrated per sample.
pub fn sweep_sample_size(
    source: SweepSource<'_>,
    sizes: &[usize],
    n_reps: usize,
    target_utilization: f64,
    base_seed: u64,
) -> Result<SweepResult> {
    check_common(n_reps, target_utilization)?;
    check_grid(sizes, "sample size")?;
    if sizes[0] < 2 {
        return Err(invalid("sample sizes must be at least 2 packets"));
    }

    let (points, source_desc) = match source {
        SweepSource::Trace(trace) => {
            let n = trace.len();
            if let Some(&too_big) = sizes.iter().find(|&&s| s > n) {
                return Err(invalid(format!(
                    "sample size {too_big} exceeds trace length {n}"
                )));
            }
            let points = sizes
                .iter()
                .enumerate()
                .map(|(point, &size)| {
                    let reps = if size == n { 1 } else { n_reps };
                    let means = (0..reps)
                        .into_par_iter()
                        .map(|r| {
                            let start = window_start(base_seed, r, point, n - size);
                            calibrated_mean_q(&take_window(trace, start, size)?, target_utilization)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    SweepPoint::from_means(size, means)
                })
                .collect::<Result<Vec<_>>>()?;
            (points, trace.label().to_string())
        }
        SweepSource::Generator(spec) => {
            let largest = *sizes.last().unwrap();
            let per_rep = (0..n_reps)
                .into_par_iter()
                .map(|r| {
                    let full = spec.generate(largest, base_seed + r as u64)?;
                    sizes
                        .iter()
                        .map(|&size| calibrated_mean_q(&take_window(&full, 0, size)?, target_utilization))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let points = sizes
                .iter()
                .enumerate()
                .map(|(k, &size)| SweepPoint::from_means(size, per_rep.iter().map(|m| m[k]).collect()))
                .collect::<Result<Vec<_>>>()?;
            (points, spec.to_string())
        }
    };

    Ok(SweepResult {
        points,
        config: SweepConfig {
            kind: SweepKind::SampleSize,
            source: source_desc,
            target_utilization,
            base_seed,
            n_reps,
            bandwidth: None,
            baseline_mean_q: None,
        },
    })
}

/// Uniform window offset in `0..=max_start` for replication `r` of point `point`.
fn window_start(base_seed: u64, r: usize, point: usize, max_start: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed + r as u64);
    rng.set_stream(point as u64);
    rng.random_range(0..=max_start)
}

/// Mean queue against shuffle block size.
///
/// The trace is re-based to `t = 0` and the bandwidth calibrated on it once;
/// every shuffle is queued at that same bandwidth so only packet order varies.
/// Replication `r` shuffles with seed `base_seed + r`.
pub fn sweep_blocksize(
    trace: &Trace,
    blocksizes: &[usize],
    n_reps: usize,
    target_utilization: f64,
    base_seed: u64,
) -> Result<SweepResult> {
    check_common(n_reps, target_utilization)?;
    check_grid(blocksizes, "blocksize")?;
    if blocksizes[0] == 0 {
        return Err(invalid("blocksizes must be at least 1"));
    }
    let base = trace.rebased();
    let bandwidth = calibrate_bandwidth(&base, target_utilization)?;
    let baseline = simulate_packet_queue(&base, bandwidth, false)?.0.mean_q;

    let points = blocksizes
        .iter()
        .map(|&b| {
            let means = (0..n_reps)
                .into_par_iter()
                .map(|r| {
                    let shuffled = block_shuffle(&base, b, base_seed + r as u64)?;
                    Ok(simulate_packet_queue(&shuffled, bandwidth, false)?.0.mean_q)
                })
                .collect::<Result<Vec<_>>>()?;
            SweepPoint::from_means(b, means)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult {
        points,
        config: SweepConfig {
            kind: SweepKind::BlockSize,
            source: trace.label().to_string(),
            target_utilization,
            base_seed,
            n_reps,
            bandwidth: Some(bandwidth),
            baseline_mean_q: Some(baseline),
        },
    })
}

/// Result of the variance-time regression.
#[derive(Debug, Clone, PartialEq)]
pub struct HurstEstimate {
    /// `1 + slope/2`, clamped to `[0, 1]`.
    pub h: f64,
    /// Fitted slope of log variance against log aggregation level.
    pub slope: f64,
    pub levels: Vec<usize>,
    pub base_bin: f64,
    /// Set when the unclamped estimate fell outside `(0, 1)`.
    pub out_of_range: bool,
}

impl HurstEstimate {
    pub const CSV_HEADER: &'static str = "H,slope,base_bin_s,levels,out_of_range";

    pub fn write_csv(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = writer;
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        writeln!(w, "{}", Self::CSV_HEADER)?;
        writeln!(
            w,
            "{},{},{},{},{}",
            self.h,
            self.slope,
            self.base_bin,
            levels.join(";"),
            self.out_of_range
        )
    }
}

/// Log-spaced aggregation levels `1, 2, 5, 10, 20, 50, ...` up to `max`.
pub fn default_levels(max: usize) -> Vec<usize> {
    let mut levels = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for step in [1, 2, 5] {
            let m = decade * step;
            if m > max {
                break 'outer;
            }
            levels.push(m);
        }
        decade *= 10;
    }
    levels
}

/// Variance-time Hurst estimate from packet counts in bins of `base_bin`
/// seconds.
///
/// For each level `m`, counts are averaged over non-overlapping runs of `m`
/// bins and the variance of those means is taken. Under long-range dependence
/// that variance decays like `m^(2H-2)`.
pub fn hurst_variance_time(trace: &Trace, base_bin: f64, levels: &[usize]) -> Result<HurstEstimate> {
    if !(base_bin > 0.0) || !base_bin.is_finite() {
        return Err(invalid(format!("base bin must be positive, got {base_bin}")));
    }
    check_grid(levels, "aggregation level")?;
    if levels[0] == 0 {
        return Err(invalid("aggregation levels must be at least 1"));
    }
    if levels.len() < 2 {
        return Err(invalid("at least two aggregation levels are needed"));
    }
    let largest = *levels.last().unwrap();
    let needed = largest as f64 * base_bin * 10.0;
    if trace.duration() < needed {
        return Err(Error::InsufficientData(format!(
            "trace spans {} s; level {largest} at bin {base_bin} s needs at least {needed} s",
            trace.duration()
        )));
    }
    let counts = trace.bin_counts(base_bin);

    let mut log_m = Vec::with_capacity(levels.len());
    let mut log_var = Vec::with_capacity(levels.len());
    for &m in levels {
        let agg: Vec<f64> = counts
            .chunks_exact(m)
            .map(|c| c.iter().sum::<f64>() / m as f64)
            .collect();
        let mu = mean(&agg).unwrap_or(0.0);
        let var = agg.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / agg.len() as f64;
        if !(var > 0.0) {
            return Err(Error::Degenerate(format!(
                "aggregated counts at level {m} have zero variance"
            )));
        }
        log_m.push((m as f64).ln());
        log_var.push(var.ln());
    }
    let slope = ols_slope(&log_m, &log_var)
        .ok_or_else(|| Error::Degenerate("aggregation levels have no spread".into()))?;
    let raw = 1.0 + slope / 2.0;
    Ok(HurstEstimate {
        h: raw.clamp(0.0, 1.0),
        slope,
        levels: levels.to_vec(),
        base_bin,
        out_of_range: !(raw > 0.0 && raw < 1.0),
    })
}
