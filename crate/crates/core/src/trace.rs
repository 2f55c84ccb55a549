//! Packet traces: the arrival process in packet form.
//!
//! A [`Trace`] is an ordered list of `(arrival time, size)` pairs. Traces are
//! read from and written to a two-column CSV (`time_s,size_bytes`); pcap
//! extraction happens upstream.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Header line of the trace CSV format.
pub const TRACE_HEADER: &str = "time_s,size_bytes";

/// A single packet arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketRecord {
    /// Arrival time in seconds.
    pub t: f64,
    /// Size in bytes; this is the service demand.
    pub size: u64,
}

impl PacketRecord {
    pub fn new(t: f64, size: u64) -> Self {
        Self { t, size }
    }
}

/// A non-empty, time-ordered sequence of packets.
///
/// Equal timestamps are allowed and keep their input order, which is also
/// the FIFO service order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    packets: Vec<PacketRecord>,
    label: String,
}

impl Trace {
    /// Builds a trace, checking every packet and the ordering invariant.
    pub fn new(packets: Vec<PacketRecord>, label: impl Into<String>) -> Result<Self> {
        if packets.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let mut prev = 0.0_f64;
        for (index, p) in packets.iter().enumerate() {
            if !p.t.is_finite() || p.t < 0.0 {
                return Err(Error::InvalidPacket {
                    index,
                    reason: format!("timestamp {} is not a finite non-negative number", p.t),
                });
            }
            if p.size == 0 {
                return Err(Error::InvalidPacket {
                    index,
                    reason: "size must be at least one byte".into(),
                });
            }
            if index > 0 && p.t < prev {
                return Err(Error::InvalidPacket {
                    index,
                    reason: format!("timestamp {} precedes previous timestamp {}", p.t, prev),
                });
            }
            prev = p.t;
        }
        Ok(Self {
            packets,
            label: label.into(),
        })
    }

    /// Builds a trace from parallel `(time, size)` pairs.
    pub fn from_pairs<I>(pairs: I, label: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, u64)>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(t, size)| PacketRecord { t, size })
                .collect(),
            label,
        )
    }

    pub fn packets(&self) -> &[PacketRecord] {
        &self.packets
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn first_time(&self) -> f64 {
        self.packets[0].t
    }

    pub fn last_time(&self) -> f64 {
        self.packets[self.packets.len() - 1].t
    }

    /// `t_last - t_first`.
    pub fn duration(&self) -> f64 {
        self.last_time() - self.first_time()
    }

    pub fn total_bytes(&self) -> u64 {
        self.packets.iter().map(|p| p.size).sum()
    }

    /// Inter-arrival gaps paired with sizes. The first packet gets a gap of 0.
    pub fn delta_pairs(&self) -> Vec<(f64, u64)> {
        let mut prev = self.first_time();
        self.packets
            .iter()
            .map(|p| {
                let d = p.t - prev;
                prev = p.t;
                (d, p.size)
            })
            .collect()
    }

    /// Packet counts in consecutive bins of `bin` seconds from the first
    /// arrival. A trailing partial bin is dropped.
    pub fn bin_counts(&self, bin: f64) -> Vec<f64> {
        let t0 = self.first_time();
        let n_bins = (self.duration() / bin).floor() as usize;
        let mut counts = vec![0.0; n_bins];
        for p in &self.packets {
            let k = ((p.t - t0) / bin) as usize;
            if k < n_bins {
                counts[k] += 1.0;
            }
        }
        counts
    }

    /// The same packets shifted so the first arrival is at `t = 0`.
    pub fn rebased(&self) -> Trace {
        let t0 = self.first_time();
        if t0 == 0.0 {
            return self.clone();
        }
        Trace {
            packets: self
                .packets
                .iter()
                .map(|p| PacketRecord {
                    t: p.t - t0,
                    size: p.size,
                })
                .collect(),
            label: self.label.clone(),
        }
    }

    /// Contiguous sub-trace of `n` packets starting at `start`, re-based to `t = 0`.
    pub fn window(&self, start: usize, n: usize) -> Result<Trace> {
        take_window(self, start, n)
    }

    pub(crate) fn from_sorted_unchecked(packets: Vec<PacketRecord>, label: String) -> Trace {
        debug_assert!(!packets.is_empty());
        Trace { packets, label }
    }
}

/// Aggregate accounting for a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub n_packets: usize,
    /// `t_last - t_first`, seconds.
    pub duration: f64,
    pub total_bytes: u64,
    /// Bytes per second; `None` for a zero-length trace.
    pub mean_rate: Option<f64>,
}

pub fn summarize_trace(trace: &Trace) -> Result<TraceSummary> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let duration = trace.duration();
    let total_bytes = trace.total_bytes();
    let mean_rate = (duration > 0.0).then(|| total_bytes as f64 / duration);
    Ok(TraceSummary {
        n_packets: trace.len(),
        duration,
        total_bytes,
        mean_rate,
    })
}

/// Contiguous window `[start, start + n)` with timestamps re-based to zero.
pub fn take_window(trace: &Trace, start: usize, n: usize) -> Result<Trace> {
    let available = trace.len();
    if n == 0 || start.checked_add(n).is_none_or(|end| end > available) {
        return Err(Error::WindowOutOfRange {
            start,
            len: n,
            available,
        });
    }
    let slice = &trace.packets[start..start + n];
    let t0 = slice[0].t;
    let packets = slice
        .iter()
        .map(|p| PacketRecord {
            t: p.t - t0,
            size: p.size,
        })
        .collect();
    Ok(Trace::from_sorted_unchecked(packets, trace.label.clone()))
}

/// Reads a trace CSV from disk. The label is the file stem.
pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_trace(file, label)
}

/// Parses the trace CSV format from any reader.
///
/// Line numbers in errors count data rows, starting at 1 for the first row
/// after the header. A missing header is tolerated when the first row parses
/// as data.
pub fn read_trace(reader: impl Read, label: impl Into<String>) -> Result<Trace> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut packets = Vec::new();
    let mut row: u64 = 0;
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while rdr.read_record(&mut record)? {
        if first {
            first = false;
            if record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        row += 1;
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                line: row,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let t: f64 = record[0].parse().map_err(|_| Error::MalformedRow {
            line: row,
            reason: format!("bad time {:?}", &record[0]),
        })?;
        let size: u64 = record[1].parse().map_err(|_| Error::MalformedRow {
            line: row,
            reason: format!("bad size {:?}", &record[1]),
        })?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::MalformedRow {
                line: row,
                reason: format!("time {t} is not a finite non-negative number"),
            });
        }
        if size == 0 {
            return Err(Error::MalformedRow {
                line: row,
                reason: "size must be at least one byte".into(),
            });
        }
        if let Some(prev) = packets.last().map(|p: &PacketRecord| p.t) {
            if t < prev {
                return Err(Error::DecreasingTimestamp {
                    line: row,
                    previous_line: row - 1,
                    previous: prev,
                    current: t,
                });
            }
        }
        packets.push(PacketRecord { t, size });
    }
    if packets.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(Trace::from_sorted_unchecked(packets, label.into()))
}

/// Writes a trace in the CSV format accepted by [`read_trace`].
pub fn write_trace(trace: &Trace, writer: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{TRACE_HEADER}")?;
    for p in trace.packets() {
        writeln!(w, "{},{}", format_time(p.t), p.size)?;
    }
    w.flush()
}

pub fn save_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_trace(trace, file).map_err(io_err)
}

/// Formats a time so that it parses back to the identical `f64` and carries at
/// least nine significant digits (short values are padded with zeros).
pub fn format_time(t: f64) -> String {
    // Display for f64 is the shortest round-trip form and never uses exponents.
    let mut s = format!("{t}");
    if !s.contains('.') {
        s.push('.');
    }
    let significant = s
        .trim_start_matches(['-', '0', '.'])
        .chars()
        .filter(char::is_ascii_digit)
        .count();
    for _ in significant..9 {
        s.push('0');
    }
    s
}
