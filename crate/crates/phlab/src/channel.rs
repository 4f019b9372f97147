//! Detector channels and channel-set masks.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A physical detector channel.
///
/// `Ds1`/`Ds2` sit behind the half beamsplitter of mode S, `Dv1`/`Dv2`
/// behind the one of mode AS when the photons are detected directly, and
/// `Dt1`/`Dt2` detect the frequency-converted telecom photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Channel {
    Ds1 = 0,
    Ds2 = 1,
    Dv1 = 2,
    Dv2 = 3,
    Dt1 = 4,
    Dt2 = 5,
}

/// The two temporal windows of a write slot: mode S (read-out photons) and
/// mode AS (herald photons, converted or not).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    S,
    As,
}

impl Channel {
    pub const COUNT: usize = 6;
    pub const ALL: [Channel; 6] = [
        Channel::Ds1,
        Channel::Ds2,
        Channel::Dv1,
        Channel::Dv2,
        Channel::Dt1,
        Channel::Dt2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: u8) -> Option<Channel> {
        Channel::ALL.get(index as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Ds1 => "ds1",
            Channel::Ds2 => "ds2",
            Channel::Dv1 => "dv1",
            Channel::Dv2 => "dv2",
            Channel::Dt1 => "dt1",
            Channel::Dt2 => "dt2",
        }
    }

    /// Accepts a channel name in any case ("Ds1", "dv2") or a numeric index.
    pub fn parse(text: &str) -> Option<Channel> {
        let lower = text.trim().to_ascii_lowercase();
        if let Ok(idx) = lower.parse::<u8>() {
            return Channel::from_index(idx);
        }
        Channel::ALL.iter().copied().find(|c| c.name() == lower)
    }

    /// The temporal window this channel is gated on.
    pub fn mode(self) -> Mode {
        match self {
            Channel::Ds1 | Channel::Ds2 => Mode::S,
            _ => Mode::As,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of channels stored as a 6-bit mask.
///
/// Doubles as the per-slot click pattern: bit `i` set means channel `i`
/// fired at least once inside its window during the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ChannelSet(u8);

impl ChannelSet {
    pub const EMPTY: ChannelSet = ChannelSet(0);
    pub const DS1: ChannelSet = ChannelSet(1 << 0);
    pub const DS2: ChannelSet = ChannelSet(1 << 1);
    pub const DV1: ChannelSet = ChannelSet(1 << 2);
    pub const DV2: ChannelSet = ChannelSet(1 << 3);
    pub const DT1: ChannelSet = ChannelSet(1 << 4);
    pub const DT2: ChannelSet = ChannelSet(1 << 5);
    /// Either detector of mode S.
    pub const MODE_S: ChannelSet = ChannelSet(0b000011);
    /// Either detector of the unconverted anti-Stokes mode.
    pub const MODE_ASV: ChannelSet = ChannelSet(0b001100);
    /// Either detector of the converted (telecom) anti-Stokes mode.
    pub const MODE_AST: ChannelSet = ChannelSet(0b110000);

    pub const PATTERNS: usize = 64;

    pub fn of(channel: Channel) -> ChannelSet {
        ChannelSet(1 << channel.index())
    }

    pub fn with(self, channel: Channel) -> ChannelSet {
        ChannelSet(self.0 | (1 << channel.index()))
    }

    pub fn union(self, other: ChannelSet) -> ChannelSet {
        ChannelSet(self.0 | other.0)
    }

    pub fn contains(self, channel: Channel) -> bool {
        self.0 & (1 << channel.index()) != 0
    }

    pub fn intersects(self, other: ChannelSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Option<ChannelSet> {
        (bits < 64).then_some(ChannelSet(bits))
    }

    pub fn iter(self) -> impl Iterator<Item = Channel> {
        Channel::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// Parses the `Display` form: channel names joined by `+`, or "none".
    pub fn parse(text: &str) -> Option<ChannelSet> {
        let trimmed = text.trim();
        if trimmed.eq_ignore_ascii_case("none") {
            return Some(ChannelSet::EMPTY);
        }
        let mut set = ChannelSet::EMPTY;
        for part in trimmed.split('+') {
            set = set.with(Channel::parse(part)?);
        }
        Some(set)
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let mut first = true;
        for ch in self.iter() {
            if !first {
                f.write_str("+")?;
            }
            f.write_str(ch.name())?;
            first = false;
        }
        Ok(())
    }
}
