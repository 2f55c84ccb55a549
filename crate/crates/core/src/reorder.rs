//! Block-shuffle surrogates.
//!
//! A trace is turned into `(gap, size)` pairs, where each packet carries the
//! gap since its predecessor. Runs of `B` pairs form blocks, and the blocks are
//! put in a uniformly random order. Everything inside a block is kept, so
//! correlations shorter than `B` packets survive while longer ones are cut.
//!
//! The first packet of the original trace has no predecessor and carries a
//! synthetic zero gap. After shuffling, whichever packet lands first must also
//! start at `t = 0`; its gap and the synthetic zero trade places. The multiset
//! of gaps, and with it the trace duration, is therefore unchanged.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::seeded_rng;
use crate::stats::mean;
use crate::trace::{PacketRecord, Trace};

/// A concrete block permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockShufflePlan {
    pub blocksize: usize,
    pub seed: u64,
    pub n_blocks: usize,
    /// `permutation[k]` is the input block placed at output position `k`.
    pub permutation: Vec<usize>,
}

impl BlockShufflePlan {
    /// Draws the permutation for `n_packets` packets.
    pub fn new(n_packets: usize, blocksize: usize, seed: u64) -> Result<Self> {
        if blocksize == 0 {
            return Err(invalid("blocksize must be at least 1"));
        }
        if n_packets == 0 {
            return Err(Error::EmptyTrace);
        }
        let n_blocks = n_packets.div_ceil(blocksize);
        let mut permutation: Vec<usize> = (0..n_blocks).collect();
        if n_blocks > 1 {
            permutation.shuffle(&mut seeded_rng(seed));
        }
        Ok(Self {
            blocksize,
            seed,
            n_blocks,
            permutation,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(k, &b)| k == b)
    }

    /// Writes the provenance sidecar: a `blocksize,seed` preamble followed by
    /// one `position,block` row per block.
    pub fn write_csv(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        writeln!(w, "# blocksize={} seed={} n_blocks={}", self.blocksize, self.seed, self.n_blocks)?;
        writeln!(w, "position,block")?;
        for (k, b) in self.permutation.iter().enumerate() {
            writeln!(w, "{k},{b}")?;
        }
        w.flush()
    }

    /// Applies the plan to `(gap, size)` pairs.
    pub fn apply_pairs(&self, pairs: &[(f64, u64)]) -> Vec<(f64, u64)> {
        assert_eq!(pairs.len().div_ceil(self.blocksize), self.n_blocks);
        let mut out = Vec::with_capacity(pairs.len());
        let mut origin = None;
        for &b in &self.permutation {
            let lo = b * self.blocksize;
            let hi = (lo + self.blocksize).min(pairs.len());
            if b == 0 {
                origin = Some(out.len());
            }
            out.extend_from_slice(&pairs[lo..hi]);
        }
        // Trade gaps between the new first packet and the old first packet.
        if let Some(pos) = origin.filter(|&p| p != 0) {
            let lead = out[0].0;
            out[pos].0 = lead;
            out[0].0 = 0.0;
        }
        out
    }
}

fn rebuild(pairs: &[(f64, u64)], label: String) -> Trace {
    let mut t = 0.0;
    let packets = pairs
        .iter()
        .map(|&(d, size)| {
            t += d;
            PacketRecord { t, size }
        })
        .collect();
    Trace::from_sorted_unchecked(packets, label)
}

/// Shuffles blocks of `blocksize` packets under the given seed.
pub fn block_shuffle(trace: &Trace, blocksize: usize, seed: u64) -> Result<Trace> {
    block_shuffle_with_plan(trace, blocksize, seed).map(|(t, _)| t)
}

/// [`block_shuffle`], also returning the permutation used.
pub fn block_shuffle_with_plan(
    trace: &Trace,
    blocksize: usize,
    seed: u64,
) -> Result<(Trace, BlockShufflePlan)> {
    let plan = BlockShufflePlan::new(trace.len(), blocksize, seed)?;
    let label = format!("{}+shuffle(B={blocksize},seed={seed})", trace.label());
    if plan.n_blocks == 1 {
        return Ok((trace.rebased().with_label(label), plan));
    }
    let pairs = plan.apply_pairs(&trace.delta_pairs());
    Ok((rebuild(&pairs, label), plan))
}

/// Sample autocovariance of per-bin packet counts at lags `0..=max_lag`.
///
/// Uses the biased (`1/n`) estimator, so lag 0 is the population variance
/// of the bin counts.
pub fn autocovariance_check(trace: &Trace, bin: f64, max_lag: usize) -> Result<Vec<f64>> {
    if !(bin > 0.0) || !bin.is_finite() {
        return Err(invalid(format!("bin width must be positive, got {bin}")));
    }
    let needed = max_lag.max(1) as f64 * bin * 10.0;
    if trace.duration() < needed {
        return Err(Error::InsufficientData(format!(
            "trace spans {} s; lag {max_lag} at bin {bin} s needs at least {needed} s",
            trace.duration()
        )));
    }
    let counts = trace.bin_counts(bin);
    Ok(autocovariance(&counts, max_lag))
}

pub(crate) fn autocovariance(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len();
    let m = mean(xs).unwrap_or(0.0);
    (0..=max_lag)
        .map(|k| {
            if k >= n {
                return 0.0;
            }
            let s: f64 = xs[..n - k]
                .iter()
                .zip(&xs[k..])
                .map(|(a, b)| (a - m) * (b - m))
                .sum();
            s / n as f64
        })
        .collect()
}
