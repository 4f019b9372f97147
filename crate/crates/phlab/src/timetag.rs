//! Time-tag event format, streaming parser, histograms and window-based
//! coincidence counting.
//!
//! Binary layout: an 8-byte magic header `PHTT0001` followed by fixed
//! 16-byte little-endian records
//! `cycle(u32) | sequence(u16) | channel(u8) | reserved(u8, zero) |
//! timestamp_ns(u64)`. A CSV text form with the same fields is accepted by
//! the readers via file-extension sniffing.

use crate::channel::{Channel, ChannelSet, Mode};
use crate::correlation::CountAggregate;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

/// Write-pulse slot period in nanoseconds.
pub const SLOT_NS: u64 = 1_000;
/// Write slots per trap cycle.
pub const SLOTS_PER_CYCLE: u16 = 990;
pub const MAGIC: [u8; 8] = *b"PHTT0001";
pub const RECORD_BYTES: usize = 16;

#[derive(Debug, Error)]
pub enum TimeTagError {
    #[error("bad magic header {found:02x?}")]
    BadMagic { found: [u8; 8] },
    #[error("truncated record at byte offset {byte_offset}")]
    TruncatedRecord { byte_offset: u64 },
    #[error("invariant violation in record {record_index}: {reason}")]
    InvariantViolation { record_index: u64, reason: String },
    #[error("bin width {bin_ns} ns does not divide the {SLOT_NS} ns slot")]
    BadBinWidth { bin_ns: u64 },
    #[error("bad csv line {line}: {reason}")]
    BadCsv { line: usize, reason: String },
    #[error("{slots} flagged slots exceed the stated {trials} trials")]
    TrialCountTooSmall { slots: u64, trials: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One detection event, timed from the TDC start signal of its slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeTagRecord {
    pub cycle: u32,
    pub sequence: u16,
    pub channel: Channel,
    pub timestamp_ns: u64,
}

impl TimeTagRecord {
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.sequence >= SLOTS_PER_CYCLE {
            return Err(format!(
                "sequence {} out of range (< {SLOTS_PER_CYCLE})",
                self.sequence
            ));
        }
        if self.timestamp_ns >= SLOT_NS {
            return Err(format!(
                "timestamp {} ns outside the {SLOT_NS} ns slot",
                self.timestamp_ns
            ));
        }
        Ok(())
    }

    fn to_bytes(self) -> [u8; RECORD_BYTES] {
        let mut buf = [0u8; RECORD_BYTES];
        buf[0..4].copy_from_slice(&self.cycle.to_le_bytes());
        buf[4..6].copy_from_slice(&self.sequence.to_le_bytes());
        buf[6] = self.channel.index() as u8;
        // buf[7] reserved, zero
        buf[8..16].copy_from_slice(&self.timestamp_ns.to_le_bytes());
        buf
    }
}

/// Encodes records into the binary stream format.
pub fn encode_stream<W: Write>(
    records: &[TimeTagRecord],
    writer: &mut W,
) -> Result<(), TimeTagError> {
    writer.write_all(&MAGIC)?;
    for (index, record) in records.iter().enumerate() {
        record
            .check_invariants()
            .map_err(|reason| TimeTagError::InvariantViolation {
                record_index: index as u64,
                reason,
            })?;
        writer.write_all(&record.to_bytes())?;
    }
    Ok(())
}

pub fn encode_to_vec(records: &[TimeTagRecord]) -> Result<Vec<u8>, TimeTagError> {
    let mut buf = Vec::with_capacity(MAGIC.len() + records.len() * RECORD_BYTES);
    encode_stream(records, &mut buf)?;
    Ok(buf)
}

/// Single-pass streaming reader over the binary format, O(1) memory per
/// record.
pub struct TagReader<R: Read> {
    reader: R,
    byte_offset: u64,
    record_index: u64,
}

impl<R: Read> TagReader<R> {
    pub fn new(mut reader: R) -> Result<TagReader<R>, TimeTagError> {
        let mut found = [0u8; 8];
        let got = read_up_to(&mut reader, &mut found)?;
        if got < 8 || found != MAGIC {
            return Err(TimeTagError::BadMagic { found });
        }
        Ok(TagReader {
            reader,
            byte_offset: MAGIC.len() as u64,
            record_index: 0,
        })
    }
}

fn read_up_to<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<usize, TimeTagError> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

impl<R: Read> Iterator for TagReader<R> {
    type Item = Result<TimeTagRecord, TimeTagError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = [0u8; RECORD_BYTES];
        let got = match read_up_to(&mut self.reader, &mut buf) {
            Ok(n) => n,
            Err(e) => return Some(Err(e)),
        };
        if got == 0 {
            return None;
        }
        if got < RECORD_BYTES {
            return Some(Err(TimeTagError::TruncatedRecord {
                byte_offset: self.byte_offset,
            }));
        }
        let index = self.record_index;
        self.byte_offset += RECORD_BYTES as u64;
        self.record_index += 1;
        let channel = match Channel::from_index(buf[6]) {
            Some(c) => c,
            None => {
                return Some(Err(TimeTagError::InvariantViolation {
                    record_index: index,
                    reason: format!("channel {} out of range (< 6)", buf[6]),
                }))
            }
        };
        let record = TimeTagRecord {
            cycle: u32::from_le_bytes(buf[0..4].try_into().unwrap()),
            sequence: u16::from_le_bytes(buf[4..6].try_into().unwrap()),
            channel,
            timestamp_ns: u64::from_le_bytes(buf[8..16].try_into().unwrap()),
        };
        if let Err(reason) = record.check_invariants() {
            return Some(Err(TimeTagError::InvariantViolation {
                record_index: index,
                reason,
            }));
        }
        Some(Ok(record))
    }
}

/// Parses a complete binary stream into memory.
pub fn parse_stream<R: Read>(reader: R) -> Result<Vec<TimeTagRecord>, TimeTagError> {
    TagReader::new(reader)?.collect()
}

pub fn write_records_csv<W: Write>(
    records: &[TimeTagRecord],
    writer: &mut W,
) -> Result<(), TimeTagError> {
    writeln!(writer, "cycle,sequence,channel,timestamp_ns")?;
    for (index, record) in records.iter().enumerate() {
        record
            .check_invariants()
            .map_err(|reason| TimeTagError::InvariantViolation {
                record_index: index as u64,
                reason,
            })?;
        writeln!(
            writer,
            "{},{},{},{}",
            record.cycle, record.sequence, record.channel, record.timestamp_ns
        )?;
    }
    Ok(())
}

pub fn parse_records_csv(text: &str) -> Result<Vec<TimeTagRecord>, TimeTagError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("cycle,") {
            continue;
        }
        let bad = |reason: String| TimeTagError::BadCsv {
            line: idx + 1,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad("expected cycle,sequence,channel,timestamp_ns".into()));
        }
        let cycle: u32 = fields[0].trim().parse().map_err(|_| bad("bad cycle".into()))?;
        let sequence: u16 = fields[1].trim().parse().map_err(|_| bad("bad sequence".into()))?;
        let channel = Channel::parse(fields[2]).ok_or_else(|| bad("bad channel".into()))?;
        let timestamp_ns: u64 =
            fields[3].trim().parse().map_err(|_| bad("bad timestamp".into()))?;
        let record = TimeTagRecord {
            cycle,
            sequence,
            channel,
            timestamp_ns,
        };
        record.check_invariants().map_err(|reason| bad(reason))?;
        records.push(record);
    }
    Ok(records)
}

fn is_csv_path(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
}

/// Reads a tag file, sniffing CSV vs binary from the extension.
pub fn read_records(path: &Path) -> Result<Vec<TimeTagRecord>, TimeTagError> {
    if is_csv_path(path) {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        parse_records_csv(&text)
    } else {
        parse_stream(BufReader::new(File::open(path)?))
    }
}

/// Writes a tag file, CSV when the extension says so, binary otherwise.
pub fn write_records(path: &Path, records: &[TimeTagRecord]) -> Result<(), TimeTagError> {
    let mut writer = BufWriter::new(File::create(path)?);
    if is_csv_path(path) {
        write_records_csv(records, &mut writer)?;
    } else {
        encode_stream(records, &mut writer)?;
    }
    writer.flush()?;
    Ok(())
}

/// A half-open acceptance window `[offset, offset + width)` within the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub offset_ns: u64,
    pub width_ns: u64,
}

impl Window {
    pub fn contains(&self, timestamp_ns: u64) -> bool {
        timestamp_ns >= self.offset_ns && timestamp_ns < self.offset_ns + self.width_ns
    }

    pub fn end_ns(&self) -> u64 {
        self.offset_ns + self.width_ns
    }
}

/// Post-selection windows for the two modes plus the histogram binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowConfig {
    pub s_window: Window,
    pub as_window: Window,
    pub histogram_bin_ns: u64,
}

impl Default for WindowConfig {
    fn default() -> WindowConfig {
        WindowConfig {
            s_window: Window {
                offset_ns: 500,
                width_ns: 250,
            },
            as_window: Window {
                offset_ns: 300,
                width_ns: 100,
            },
            histogram_bin_ns: 10,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<(), TimeTagError> {
        for w in [self.s_window, self.as_window] {
            if w.width_ns == 0 || w.end_ns() > SLOT_NS {
                return Err(TimeTagError::BadCsv {
                    line: 0,
                    reason: format!(
                        "window [{}, {}) must be non-empty and lie within the slot",
                        w.offset_ns,
                        w.end_ns()
                    ),
                });
            }
        }
        if self.histogram_bin_ns == 0 || SLOT_NS % self.histogram_bin_ns != 0 {
            return Err(TimeTagError::BadBinWidth {
                bin_ns: self.histogram_bin_ns,
            });
        }
        Ok(())
    }

    pub fn window_for(&self, channel: Channel) -> Window {
        match channel.mode() {
            Mode::S => self.s_window,
            Mode::As => self.as_window,
        }
    }
}

/// Per-slot detection flags keyed by (cycle, sequence). Slots without any
/// in-window record carry no entry.
pub type SlotFlags = BTreeMap<(u32, u16), ChannelSet>;

/// Applies the post-selection windows: a channel counts as detected in a
/// slot iff at least one of its records falls inside its mode's window.
/// Out-of-window records (leakage peaks from the drive pulses) are dropped.
pub fn window_select<I>(records: I, cfg: &WindowConfig) -> SlotFlags
where
    I: IntoIterator<Item = TimeTagRecord>,
{
    let mut flags = SlotFlags::new();
    for record in records {
        if cfg.window_for(record.channel).contains(record.timestamp_ns) {
            let entry = flags
                .entry((record.cycle, record.sequence))
                .or_insert(ChannelSet::EMPTY);
            *entry = entry.with(record.channel);
        }
    }
    flags
}

/// Folds per-slot flags into a count aggregate over `trials` analyzed slots;
/// slots without flags count as empty patterns.
pub fn accumulate(flags: &SlotFlags, trials: u64) -> Result<CountAggregate, TimeTagError> {
    let flagged = flags.len() as u64;
    if flagged > trials {
        return Err(TimeTagError::TrialCountTooSmall {
            slots: flagged,
            trials,
        });
    }
    let mut agg = CountAggregate::new();
    agg.record_many(ChannelSet::EMPTY, trials - flagged);
    for pattern in flags.values() {
        agg.record(*pattern);
    }
    Ok(agg)
}

/// Per-channel occupancy counts over the slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bin_ns: u64,
    counts: Vec<[u64; Channel::COUNT]>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, bin: usize, channel: Channel) -> u64 {
        self.counts[bin][channel.index()]
    }

    pub fn channel_total(&self, channel: Channel) -> u64 {
        self.counts.iter().map(|row| row[channel.index()]).sum()
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.bin_ns, other.bin_ns, "histogram bin widths differ");
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
    }

    /// CSV export: `bin_start_ns,channel,count`, zero rows omitted.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str("bin_start_ns,channel,count\n");
        for (bin, row) in self.counts.iter().enumerate() {
            for ch in Channel::ALL {
                let count = row[ch.index()];
                if count > 0 {
                    out.push_str(&format!("{},{ch},{count}\n", bin as u64 * self.bin_ns));
                }
            }
        }
        out
    }
}

/// Bins records over the slot period per channel.
pub fn histogram<I>(records: I, bin_ns: u64) -> Result<Histogram, TimeTagError>
where
    I: IntoIterator<Item = TimeTagRecord>,
{
    if bin_ns == 0 || SLOT_NS % bin_ns != 0 {
        return Err(TimeTagError::BadBinWidth { bin_ns });
    }
    let bins = (SLOT_NS / bin_ns) as usize;
    let mut counts = vec![[0u64; Channel::COUNT]; bins];
    for record in records {
        counts[(record.timestamp_ns / bin_ns) as usize][record.channel.index()] += 1;
    }
    Ok(Histogram { bin_ns, counts })
}
