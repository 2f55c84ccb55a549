//! Heavy-tailed samplers and on/off traffic constructions.
//!
//! Three fluid constructions are provided, all driven by a list of on-period
//! lengths `X_i` at peak rate `a` (relative to a unit-rate server):
//!
//! * the stationary on/off source ([`OffRule::IidExponential`]), with off
//!   periods drawn so the long-run utilization is `lambda_target`;
//! * the reordered process ([`OffRule::DeterministicReordered`]), in which
//!   every on period `X_i` is followed by exactly `X_i (a/λ - 1)` of silence,
//!   so that no two bursts ever share a busy period;
//! * the bounded-queue process ([`gen_bounded_q_fluid`]), which keeps the
//!   time-average queue at most `q` at the cost of a vanishing arrival rate.
//!
//! [`packetize`] maps any fluid process onto a packet [`Trace`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{invalid, Error, Result};
use crate::seeded_rng;
use crate::trace::{PacketRecord, Trace};

/// Draws from a Pareto law by inversion: `x_m * u^(-1/alpha)`.
///
/// `P(X > x) = (x / x_m)^(-alpha)` for `x >= x_m`. `u` must lie in `(0, 1]`.
pub fn sample_pareto(alpha: f64, x_m: f64, u: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(x_m > 0.0) || !x_m.is_finite() {
        return Err(invalid(format!("x_m must be positive, got {x_m}")));
    }
    if !(u > 0.0 && u <= 1.0) {
        return Err(invalid(format!("uniform variate must lie in (0, 1], got {u}")));
    }
    Ok(x_m * u.powf(-1.0 / alpha))
}

/// Uniform variate on `(0, 1]`.
pub(crate) fn unit_open_closed(rng: &mut impl Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Tail exponent giving an on/off source of Hurst parameter `h`: `alpha = 3 - 2h`.
pub fn alpha_for_hurst(h: f64) -> f64 {
    3.0 - 2.0 * h
}

/// Inverse of [`alpha_for_hurst`].
pub fn hurst_for_alpha(alpha: f64) -> f64 {
    (3.0 - alpha) / 2.0
}

/// How off periods are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffRule {
    /// I.i.d. exponential with mean `E[X] (a/λ - 1)`.
    IidExponential,
    /// Exactly `X_i (a/λ - 1)` after on period `X_i`.
    DeterministicReordered,
}

impl fmt::Display for OffRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OffRule::IidExponential => "iid-exponential",
            OffRule::DeterministicReordered => "deterministic-reordered",
        })
    }
}

impl FromStr for OffRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid-exponential" => Ok(OffRule::IidExponential),
            "deterministic-reordered" => Ok(OffRule::DeterministicReordered),
            other => Err(invalid(format!("unknown off rule {other:?}"))),
        }
    }
}

/// Parameters of a single on/off source feeding a unit-rate server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnOffParams {
    /// Peak rate as a multiple of the server rate; must exceed 1.
    pub a: f64,
    /// Pareto tail exponent of on periods; must exceed 1.
    pub alpha: f64,
    /// Pareto scale (minimum on period), seconds.
    pub x_m: f64,
    /// Long-run utilization in `(0, 1)`.
    pub lambda_target: f64,
    pub off_rule: OffRule,
}

impl OnOffParams {
    pub fn new(a: f64, alpha: f64, x_m: f64, lambda_target: f64, off_rule: OffRule) -> Result<Self> {
        let p = Self {
            a,
            alpha,
            x_m,
            lambda_target,
            off_rule,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 1.0) || !self.a.is_finite() {
            return Err(invalid(format!("a must exceed 1, got {}", self.a)));
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if !(self.x_m > 0.0) || !self.x_m.is_finite() {
            return Err(invalid(format!("x_m must be positive, got {}", self.x_m)));
        }
        if !(self.lambda_target > 0.0 && self.lambda_target < 1.0) {
            return Err(invalid(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda_target
            )));
        }
        Ok(())
    }

    /// `E[X] = alpha x_m / (alpha - 1)`.
    pub fn mean_on(&self) -> f64 {
        self.alpha * self.x_m / (self.alpha - 1.0)
    }

    /// Off-to-on length ratio `a/λ - 1`.
    pub fn off_ratio(&self) -> f64 {
        self.a / self.lambda_target - 1.0
    }

    pub fn mean_off(&self) -> f64 {
        self.mean_on() * self.off_ratio()
    }
}

/// One on period followed by one off period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cycle {
    pub on: f64,
    pub off: f64,
}

/// Alternating on/off periods; the first on period starts at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidProcess {
    cycles: Vec<Cycle>,
    rate_on: f64,
}

impl FluidProcess {
    pub fn new(cycles: Vec<Cycle>, rate_on: f64) -> Result<Self> {
        if !(rate_on > 1.0) || !rate_on.is_finite() {
            return Err(invalid(format!("on rate must exceed 1, got {rate_on}")));
        }
        for (i, c) in cycles.iter().enumerate() {
            if !(c.on > 0.0) || !c.on.is_finite() {
                return Err(invalid(format!("cycle {i}: on length must be positive, got {}", c.on)));
            }
            if !(c.off >= 0.0) || !c.off.is_finite() {
                return Err(invalid(format!(
                    "cycle {i}: off length must be non-negative, got {}",
                    c.off
                )));
            }
        }
        Ok(Self { cycles, rate_on })
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn rate_on(&self) -> f64 {
        self.rate_on
    }

    pub fn on_lengths(&self) -> Vec<f64> {
        self.cycles.iter().map(|c| c.on).collect()
    }

    pub fn total_on(&self) -> f64 {
        self.cycles.iter().map(|c| c.on).sum()
    }

    pub fn total_duration(&self) -> f64 {
        self.cycles.iter().map(|c| c.on + c.off).sum()
    }

    /// Fraction of time spent in on periods.
    pub fn on_fraction(&self) -> f64 {
        self.total_on() / self.total_duration()
    }

    /// Writes the `on_s,off_s` inspection CSV.
    pub fn write_csv(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        writeln!(w, "on_s,off_s")?;
        for c in &self.cycles {
            writeln!(
                w,
                "{},{}",
                crate::trace::format_time(c.on),
                crate::trace::format_time(c.off)
            )?;
        }
        w.flush()
    }
}

/// Endless stream of on/off cycles from a seeded generator.
pub struct OnOffSource {
    params: OnOffParams,
    rng: ChaCha8Rng,
    off_dist: Exp<f64>,
}

impl OnOffSource {
    pub fn new(params: OnOffParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let off_dist = Exp::new(1.0 / params.mean_off())
            .map_err(|e| invalid(format!("off-period distribution: {e}")))?;
        Ok(Self {
            params,
            rng: seeded_rng(seed),
            off_dist,
        })
    }
}

impl Iterator for OnOffSource {
    type Item = Cycle;

    fn next(&mut self) -> Option<Cycle> {
        let u = unit_open_closed(&mut self.rng);
        let on = self.params.x_m * u.powf(-1.0 / self.params.alpha);
        let off = match self.params.off_rule {
            OffRule::IidExponential => self.off_dist.sample(&mut self.rng),
            OffRule::DeterministicReordered => on * self.params.off_ratio(),
        };
        Some(Cycle { on, off })
    }
}

/// `n_cycles` cycles of the on/off source; bit-reproducible per seed.
pub fn gen_onoff_fluid(params: &OnOffParams, n_cycles: usize, seed: u64) -> Result<FluidProcess> {
    if n_cycles == 0 {
        return Err(invalid("n_cycles must be at least 1"));
    }
    let cycles = OnOffSource::new(*params, seed)?.take(n_cycles).collect();
    Ok(FluidProcess {
        cycles,
        rate_on: params.a,
    })
}

/// The reordered process for given on lengths: off `= X_i (a/λ - 1)`.
pub fn reordered_fluid(on_lengths: &[f64], a: f64, lambda: f64) -> Result<FluidProcess> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let ratio = a / lambda - 1.0;
    FluidProcess::new(
        on_lengths
            .iter()
            .map(|&on| Cycle { on, off: on * ratio })
            .collect(),
        a,
    )
}

/// The bounded-queue construction: after each on period `X`, stay silent for
/// `max((a-1) X, (a-1) a X^2 / 2q - X)`.
///
/// The queue drains in every off period and each cycle's time-average queue is
/// at most `q`. With heavy-tailed on periods the on-fraction tends to zero.
pub fn gen_bounded_q_fluid(on_lengths: &[f64], a: f64, q: f64) -> Result<FluidProcess> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid(format!("q must be positive, got {q}")));
    }
    if !(a > 1.0) {
        return Err(invalid(format!("a must exceed 1, got {a}")));
    }
    let cycles = on_lengths
        .iter()
        .map(|&x| Cycle {
            on: x,
            off: bounded_q_off(x, a, q),
        })
        .collect();
    FluidProcess::new(cycles, a)
}

fn bounded_q_off(x: f64, a: f64, q: f64) -> f64 {
    let drain = (a - 1.0) * x;
    let stretch = (a - 1.0) * a * x * x / (2.0 * q) - x;
    drain.max(stretch)
}

/// Time-average queue of the reordered process over the given on lengths:
/// `λ (a-1) ΣX² / (2 ΣX)`.
///
/// Each cycle contributes a triangle of area `(a-1) a X²/2` over a cycle of
/// length `X a/λ`. This is a lower bound on the mean queue of any on/off
/// process with the same on periods and rate.
pub fn lower_bound_estimate(on_lengths: &[f64], a: f64, lambda: f64) -> Result<f64> {
    if on_lengths.is_empty() {
        return Err(Error::InsufficientData("no on periods".into()));
    }
    if !(a > 1.0) {
        return Err(invalid(format!("a must exceed 1, got {a}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if let Some(bad) = on_lengths.iter().find(|x| !(**x > 0.0)) {
        return Err(invalid(format!("on lengths must be positive, got {bad}")));
    }
    let sum_x: f64 = on_lengths.iter().sum();
    let sum_x2: f64 = on_lengths.iter().map(|x| x * x).sum();
    Ok(lambda * (a - 1.0) * sum_x2 / (2.0 * sum_x))
}

/// Maps the unit-rate fluid world onto packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketizationParams {
    /// Constant packet size, bytes.
    pub packet_size: u64,
    /// Bytes per second corresponding to the unit server rate.
    pub server_rate_ref: f64,
}

/// One packet per second of unit-rate service, so fluid queue-units and
/// packets coincide.
impl Default for PacketizationParams {
    fn default() -> Self {
        Self {
            packet_size: 1000,
            server_rate_ref: 1000.0,
        }
    }
}

impl PacketizationParams {
    pub fn validate(&self) -> Result<()> {
        if self.packet_size == 0 {
            return Err(invalid("packet size must be at least one byte"));
        }
        if !(self.server_rate_ref > 0.0) || !self.server_rate_ref.is_finite() {
            return Err(invalid(format!(
                "reference server rate must be positive, got {}",
                self.server_rate_ref
            )));
        }
        Ok(())
    }

    /// Number of packets emitted for an on period of `len` seconds at peak `a`.
    pub fn packets_in_burst(&self, len: f64, a: f64) -> usize {
        let n = (len * a * self.server_rate_ref / self.packet_size as f64).floor();
        (n as usize).max(1)
    }
}

/// Appends the packets of one on period starting at `start`.
fn push_burst(
    out: &mut Vec<PacketRecord>,
    start: f64,
    len: f64,
    a: f64,
    pp: &PacketizationParams,
    limit: usize,
) {
    let n = pp.packets_in_burst(len, a);
    let spacing = len / n as f64;
    for k in 0..n {
        if out.len() >= limit {
            return;
        }
        out.push(PacketRecord {
            t: start + k as f64 * spacing,
            size: pp.packet_size,
        });
    }
}

/// Emits evenly spaced constant-size packets during every on period.
pub fn packetize(fluid: &FluidProcess, pp: &PacketizationParams) -> Result<Trace> {
    pp.validate()?;
    if fluid.cycles.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut packets = Vec::new();
    let mut t = 0.0;
    for c in &fluid.cycles {
        push_burst(&mut packets, t, c.on, fluid.rate_on, pp, usize::MAX);
        t += c.on + c.off;
    }
    Ok(Trace::from_sorted_unchecked(packets, "packetized".into()))
}

/// Packetized on/off traffic truncated to exactly `n_packets` packets.
pub fn gen_onoff_packets(
    params: &OnOffParams,
    pp: &PacketizationParams,
    n_packets: usize,
    seed: u64,
) -> Result<Trace> {
    pp.validate()?;
    if n_packets == 0 {
        return Err(invalid("packet count must be at least 1"));
    }
    let mut packets = Vec::with_capacity(n_packets);
    let mut t = 0.0;
    for c in OnOffSource::new(*params, seed)? {
        push_burst(&mut packets, t, c.on, params.a, pp, n_packets);
        if packets.len() >= n_packets {
            break;
        }
        t += c.on + c.off;
    }
    Ok(Trace::from_sorted_unchecked(
        packets,
        format!(
            "onoff(a={},alpha={},x_m={},lambda={},seed={seed})",
            params.a, params.alpha, params.x_m, params.lambda_target
        ),
    ))
}

/// Constant-size packets with i.i.d. exponential gaps: the uncorrelated control.
pub fn gen_poisson_packets(mean_gap: f64, packet_size: u64, n_packets: usize, seed: u64) -> Result<Trace> {
    if !(mean_gap > 0.0) || !mean_gap.is_finite() {
        return Err(invalid(format!("mean gap must be positive, got {mean_gap}")));
    }
    if packet_size == 0 || n_packets == 0 {
        return Err(invalid("packet size and count must be at least 1"));
    }
    let gap = Exp::new(1.0 / mean_gap).map_err(|e| invalid(e.to_string()))?;
    let mut rng = seeded_rng(seed);
    let mut t = 0.0;
    let packets = (0..n_packets)
        .map(|i| {
            if i > 0 {
                t += gap.sample(&mut rng);
            }
            PacketRecord {
                t,
                size: packet_size,
            }
        })
        .collect();
    Ok(Trace::from_sorted_unchecked(
        packets,
        format!("poisson(mean_gap={mean_gap},seed={seed})"),
    ))
}

/// A packet-trace generator: either the heavy-tailed on/off source or the
/// i.i.d.-gap control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorSpec {
    OnOff {
        params: OnOffParams,
        packetization: PacketizationParams,
    },
    Poisson {
        mean_gap: f64,
        packet_size: u64,
    },
}

impl GeneratorSpec {
    pub fn generate(&self, n_packets: usize, seed: u64) -> Result<Trace> {
        match self {
            GeneratorSpec::OnOff {
                params,
                packetization,
            } => gen_onoff_packets(params, packetization, n_packets, seed),
            GeneratorSpec::Poisson {
                mean_gap,
                packet_size,
            } => gen_poisson_packets(*mean_gap, *packet_size, n_packets, seed),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::OnOff {
                params,
                packetization,
            } => write!(
                f,
                "onoff a={} alpha={} x_m={} lambda={} off_rule={} packet_size={} server_rate_ref={}",
                params.a,
                params.alpha,
                params.x_m,
                params.lambda_target,
                params.off_rule,
                packetization.packet_size,
                packetization.server_rate_ref
            ),
            GeneratorSpec::Poisson {
                mean_gap,
                packet_size,
            } => write!(f, "poisson mean_gap={mean_gap} packet_size={packet_size}"),
        }
    }
}

/// Estimates a tail exponent from the log-log slope of the empirical CCDF.
///
/// Uses the largest `tail_fraction` of the samples; the `i`-th largest value
/// is plotted at exceedance probability `i/n`. Needs at least 100 samples.
pub fn fit_tail_exponent(samples: &[f64], tail_fraction: f64) -> Result<f64> {
    if samples.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 0.5) {
        return Err(invalid(format!(
            "tail fraction must lie in (0, 0.5], got {tail_fraction}"
        )));
    }
    if samples.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(invalid("tail fit needs positive finite samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len() as f64;
    let k = ((n * tail_fraction).ceil() as usize).max(2);
    let xs: Vec<f64> = sorted[..k].iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = (1..=k).map(|i| (i as f64 / n).ln()).collect();
    let slope = crate::stats::ols_slope(&xs, &ys)
        .ok_or_else(|| Error::Degenerate("tail samples are all equal; CCDF slope undefined".into()))?;
    Ok(-slope)
}
