//! Infinite-buffer FIFO queues with exact time-integrals.
//!
//! [`simulate_packet_queue`] serves a packet [`Trace`] at a fixed byte rate;
//! [`simulate_fluid_queue`] drains a [`FluidProcess`] at unit rate. Neither
//! steps time: both integrate the queue trajectory in closed form between
//! events, so the reported means carry no discretization error.
//!
//! Conventions for the packet queue:
//!
//! * `Q_t` counts packets in the system, including the one in service, so the
//!   server is busy exactly when `Q_t >= 1`;
//! * the averaging window runs from the first arrival to the last departure;
//! * at equal event times departures are processed before arrivals.

use std::io::Write;

use crate::error::{invalid, Result};
use crate::synth::FluidProcess;
use crate::trace::{format_time, Trace};

/// Header of the one-row statistics CSV.
pub const STATS_HEADER: &str = "mean_q,peak_q,busy_fraction,duration_s,offered_utilization";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueStats {
    /// Time-average queue length: packets, or queue-units for the fluid queue.
    pub mean_q: f64,
    pub peak_q: f64,
    /// Fraction of the window in which the server was busy.
    pub busy_fraction: f64,
    /// Length of the averaging window, seconds.
    pub duration: f64,
    /// Offered work divided by capacity.
    pub offered_utilization: f64,
    /// Time-average unfinished work: bytes for the packet queue, queue-units
    /// (equal to `mean_q`) for the fluid queue.
    pub mean_work: f64,
}

impl QueueStats {
    pub fn write_csv(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = writer;
        writeln!(w, "{STATS_HEADER}")?;
        writeln!(
            w,
            "{},{},{},{},{}",
            self.mean_q, self.peak_q, self.busy_fraction, self.duration, self.offered_utilization
        )
    }
}

/// Queue length after every event; `q` holds on `[time_k, time_{k+1})`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueueTimeline {
    pub events: Vec<(f64, u64)>,
}

impl QueueTimeline {
    /// `∫ Q dt` of the piecewise-constant reconstruction.
    pub fn integral(&self) -> f64 {
        self.events
            .windows(2)
            .map(|w| w[0].1 as f64 * (w[1].0 - w[0].0))
            .sum()
    }

    pub fn write_csv(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        writeln!(w, "time_s,queue_len")?;
        for &(t, q) in &self.events {
            writeln!(w, "{},{q}", format_time(t))?;
        }
        w.flush()
    }
}

/// Departure instants of a FIFO single server at `bandwidth` bytes/second.
pub fn departure_times(trace: &Trace, bandwidth: f64) -> Vec<f64> {
    let mut free_at = f64::NEG_INFINITY;
    trace
        .packets()
        .iter()
        .map(|p| {
            free_at = free_at.max(p.t) + p.size as f64 / bandwidth;
            free_at
        })
        .collect()
}

/// Queues a trace through a FIFO server of `bandwidth` bytes/second.
///
/// The buffer is infinite and starts empty; a packet of `l` bytes holds the
/// server for `l / bandwidth` seconds.
pub fn simulate_packet_queue(
    trace: &Trace,
    bandwidth: f64,
    emit_timeline: bool,
) -> Result<(QueueStats, Option<QueueTimeline>)> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let packets = trace.packets();
    let departures = departure_times(trace, bandwidth);
    let n = packets.len();

    let start = packets[0].t;
    let mut timeline = emit_timeline.then(|| Vec::with_capacity(2 * n));
    let (mut i, mut j) = (0usize, 0usize);
    let mut q: u64 = 0;
    let mut peak: u64 = 0;
    let mut t_prev = start;
    let mut area = 0.0;
    let mut busy = 0.0;
    let mut work = 0.0;
    let mut work_area = 0.0;

    while j < n {
        let arrival_next = i < n && packets[i].t < departures[j];
        let t = if arrival_next { packets[i].t } else { departures[j] };
        let dt = t - t_prev;
        if dt > 0.0 {
            if q > 0 {
                area += q as f64 * dt;
                busy += dt;
            }
            let drained = bandwidth * dt;
            if work > drained {
                work_area += work * dt - 0.5 * drained * dt;
                work -= drained;
            } else {
                work_area += 0.5 * work * work / bandwidth;
                work = 0.0;
            }
            t_prev = t;
        }
        if arrival_next {
            q += 1;
            peak = peak.max(q);
            work += packets[i].size as f64;
            i += 1;
        } else {
            q -= 1;
            j += 1;
        }
        if let Some(tl) = timeline.as_mut() {
            tl.push((t, q));
        }
    }

    let duration = departures[n - 1] - start;
    let span = trace.duration();
    let capacity_window = if span > 0.0 { span } else { duration };
    let stats = QueueStats {
        mean_q: area / duration,
        peak_q: peak as f64,
        busy_fraction: busy / duration,
        duration,
        offered_utilization: trace.total_bytes() as f64 / (bandwidth * capacity_window),
        mean_work: work_area / duration,
    };
    Ok((stats, timeline.map(|events| QueueTimeline { events })))
}

/// State of the fluid queue at the end of one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleEnd {
    /// End time of the cycle.
    pub t: f64,
    /// Queue level at that time.
    pub q: f64,
    /// `∫ Q dt` from time zero to `t`.
    pub cumulative_area: f64,
}

/// Drains a fluid on/off process through a unit-rate server.
pub fn simulate_fluid_queue(fluid: &FluidProcess) -> Result<QueueStats> {
    simulate_fluid_queue_detailed(fluid).map(|(stats, _)| stats)
}

/// Like [`simulate_fluid_queue`], also returning the state after each cycle.
pub fn simulate_fluid_queue_detailed(fluid: &FluidProcess) -> Result<(QueueStats, Vec<CycleEnd>)> {
    let a = fluid.rate_on();
    if !(a > 1.0) {
        return Err(invalid(format!("on rate must exceed 1, got {a}")));
    }
    if fluid.cycles().is_empty() {
        return Err(invalid("fluid process has no cycles"));
    }
    let rise = a - 1.0;
    let mut q = 0.0_f64;
    let mut t = 0.0;
    let mut area = 0.0;
    let mut busy = 0.0;
    let mut peak = 0.0_f64;
    let mut on_total = 0.0;
    let mut ends = Vec::with_capacity(fluid.cycles().len());

    for c in fluid.cycles() {
        // On: linear rise from q.
        area += q * c.on + 0.5 * rise * c.on * c.on;
        q += rise * c.on;
        peak = peak.max(q);
        busy += c.on;
        on_total += c.on;

        // Off: linear fall at unit rate, floored at zero.
        if q > c.off {
            area += q * c.off - 0.5 * c.off * c.off;
            q -= c.off;
            busy += c.off;
        } else {
            area += 0.5 * q * q;
            busy += q;
            q = 0.0;
        }
        t += c.on + c.off;
        ends.push(CycleEnd {
            t,
            q,
            cumulative_area: area,
        });
    }

    let mean_q = area / t;
    let stats = QueueStats {
        mean_q,
        peak_q: peak,
        busy_fraction: busy / t,
        duration: t,
        offered_utilization: a * on_total / t,
        mean_work: mean_q,
    };
    Ok((stats, ends))
}

/// Bandwidth at which `trace` offers exactly `target_utilization`:
/// `total_bytes / (target * duration)`.
pub fn calibrate_bandwidth(trace: &Trace, target_utilization: f64) -> Result<f64> {
    if !(target_utilization > 0.0 && target_utilization < 1.0) {
        return Err(invalid(format!(
            "target utilization must lie in (0, 1), got {target_utilization}"
        )));
    }
    let duration = trace.duration();
    if !(duration > 0.0) {
        return Err(crate::error::Error::Degenerate(
            "cannot calibrate bandwidth on a trace of zero duration".into(),
        ));
    }
    Ok(trace.total_bytes() as f64 / (target_utilization * duration))
}
