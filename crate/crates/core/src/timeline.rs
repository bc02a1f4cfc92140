//! Channels, pulses and actuation timelines.
//!
//! A timeline is the common currency between effect synthesis, the actuator
//! simulator and the virtual device. Each of the three channels holds an
//! ordered list of half-open pulses `[start, start + on)` whose boundaries sit
//! on a 0.1 ms command grid.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

/// Command grid resolution in milliseconds.
pub const TICK_MS: f64 = 0.1;

/// Tolerance used when deciding whether a time lies on the tick grid.
pub(crate) const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("invalid channel `{0}`")]
    InvalidChannel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One of the three actuators in the stylus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// Vibration motor at the writing tip.
    VibeTip,
    /// Vibration motor at the opposite end.
    VibeEnd,
    /// DC motor spinning about the long axis.
    Motor,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::VibeTip, Channel::VibeEnd, Channel::Motor];

    fn index(self) -> usize {
        match self {
            Channel::VibeTip => 0,
            Channel::VibeEnd => 1,
            Channel::Motor => 2,
        }
    }

    /// Whether the channel drives with signed polarity.
    pub fn is_signed(self) -> bool {
        matches!(self, Channel::Motor)
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::VibeTip => "vibe_tip",
            Channel::VibeEnd => "vibe_end",
            Channel::Motor => "motor",
        }
    }
}

impl TryFrom<u8> for Channel {
    type Error = TimelineError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(Channel::VibeTip),
            1 => Ok(Channel::VibeEnd),
            2 => Ok(Channel::Motor),
            other => Err(TimelineError::InvalidChannel(other.to_string())),
        }
    }
}

impl FromStr for Channel {
    type Err = TimelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tip" | "vibe_tip" | "vibetip" => Ok(Channel::VibeTip),
            "end" | "vibe_end" | "vibeend" => Ok(Channel::VibeEnd),
            "motor" => Ok(Channel::Motor),
            _ => Err(TimelineError::InvalidChannel(s.to_string())),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Envelope applied over a pulse's on-time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WaveformShape {
    Square,
    /// Rises linearly from 0 to the pulse amplitude.
    IncreasingRamp,
    /// Falls linearly from the pulse amplitude to 0.
    DecreasingRamp,
}

impl WaveformShape {
    pub const ALL: [WaveformShape; 3] = [
        WaveformShape::Square,
        WaveformShape::IncreasingRamp,
        WaveformShape::DecreasingRamp,
    ];

    /// Envelope value at normalized position `frac` in `[0, 1)`.
    pub fn envelope(self, frac: f64) -> f64 {
        match self {
            WaveformShape::Square => 1.0,
            WaveformShape::IncreasingRamp => frac,
            WaveformShape::DecreasingRamp => 1.0 - frac,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveformShape::Square => "square",
            WaveformShape::IncreasingRamp => "inc",
            WaveformShape::DecreasingRamp => "dec",
        }
    }
}

impl FromStr for WaveformShape {
    type Err = TimelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "square" | "sq" => Ok(WaveformShape::Square),
            "inc" | "increasing" | "increasing_ramp" => Ok(WaveformShape::IncreasingRamp),
            "dec" | "decreasing" | "decreasing_ramp" => Ok(WaveformShape::DecreasingRamp),
            _ => Err(TimelineError::InvalidArgument(format!("unknown shape `{s}`"))),
        }
    }
}

impl fmt::Display for WaveformShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }
}

/// A single actuation pulse. Times are in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub start_ms: f64,
    pub on_ms: f64,
    /// Normalized drive in `(0, 1]`.
    pub amplitude: f64,
    pub shape: WaveformShape,
    /// Ignored on the vibration channels.
    pub polarity: Polarity,
}

impl Pulse {
    pub fn square(start_ms: f64, on_ms: f64, amplitude: f64) -> Self {
        Pulse {
            start_ms,
            on_ms,
            amplitude,
            shape: WaveformShape::Square,
            polarity: Polarity::Positive,
        }
    }

    pub fn end_ms(&self) -> f64 {
        self.start_ms + self.on_ms
    }

    /// Half-open membership, tolerant of float drift at the edges.
    pub fn contains(&self, t_ms: f64) -> bool {
        t_ms >= self.start_ms - GRID_EPS && t_ms < self.end_ms() - GRID_EPS
    }

    /// Unsigned envelope times amplitude at `t_ms`, assumed inside the pulse.
    fn level_at(&self, t_ms: f64) -> f64 {
        let frac = (t_ms - self.start_ms) / self.on_ms;
        self.shape.envelope(frac) * self.amplitude
    }
}

/// What went wrong with a timeline, with the offending channel and pulse.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeStart { channel: Channel, pulse: usize },
    NonPositiveDuration { channel: Channel, pulse: usize },
    AmplitudeOutOfRange { channel: Channel, pulse: usize },
    OffGrid { channel: Channel, pulse: usize },
    /// Pulse `pulse` overlaps or precedes pulse `pulse - 1`.
    Overlap { channel: Channel, pulse: usize },
    /// The total duration ends before the last pulse on `channel`.
    DurationTooShort { channel: Channel },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeStart { channel, pulse } => {
                write!(f, "{channel} pulse {pulse}: start must be >= 0")
            }
            Violation::NonPositiveDuration { channel, pulse } => {
                write!(f, "{channel} pulse {pulse}: on-time must be > 0")
            }
            Violation::AmplitudeOutOfRange { channel, pulse } => {
                write!(f, "{channel} pulse {pulse}: amplitude must be in (0, 1]")
            }
            Violation::OffGrid { channel, pulse } => {
                write!(f, "{channel} pulse {pulse}: boundary not on the {TICK_MS} ms grid")
            }
            Violation::Overlap { channel, pulse } => {
                write!(f, "{channel} pulse {pulse}: overlaps previous pulse")
            }
            Violation::DurationTooShort { channel } => {
                write!(f, "{channel}: total duration ends before last pulse")
            }
        }
    }
}

fn on_grid(t_ms: f64) -> bool {
    let ticks = t_ms / TICK_MS;
    (ticks - ticks.round()).abs() < GRID_EPS * ticks.abs().max(1.0)
}

/// Rounds a time to the nearest tick.
pub fn snap_to_grid(t_ms: f64) -> f64 {
    (t_ms / TICK_MS).round() / 10.0
}

/// Per-channel pulse schedules.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActuationTimeline {
    channels: [Vec<Pulse>; 3],
    total_ms: f64,
}

impl ActuationTimeline {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a pulse, extending the total duration to cover it.
    pub fn push(&mut self, channel: Channel, pulse: Pulse) {
        self.total_ms = self.total_ms.max(pulse.end_ms());
        self.channels[channel.index()].push(pulse);
    }

    pub fn with_pulse(mut self, channel: Channel, pulse: Pulse) -> Self {
        self.push(channel, pulse);
        self
    }

    /// Sets the total duration without checking it against the pulses.
    pub fn with_total_duration(mut self, total_ms: f64) -> Self {
        self.total_ms = total_ms;
        self
    }

    pub fn pulses(&self, channel: Channel) -> &[Pulse] {
        &self.channels[channel.index()]
    }

    pub fn total_duration_ms(&self) -> f64 {
        self.total_ms
    }

    pub fn is_empty(&self) -> bool {
        self.channels.iter().all(Vec::is_empty)
    }

    /// The pulse on `channel` containing `t_ms`, if any.
    pub fn active_pulse(&self, channel: Channel, t_ms: f64) -> Option<&Pulse> {
        let pulses = self.pulses(channel);
        let idx = pulses.partition_point(|p| p.start_ms - GRID_EPS <= t_ms);
        if idx == 0 {
            return None;
        }
        let candidate = &pulses[idx - 1];
        candidate.contains(t_ms).then_some(candidate)
    }

    /// Signed drive level in `[-1, 1]` on `channel` at `t_ms`.
    pub fn sample(&self, channel: Channel, t_ms: f64) -> f64 {
        match self.active_pulse(channel, t_ms) {
            None => 0.0,
            Some(p) => {
                let level = p.level_at(t_ms);
                let signed = if channel.is_signed() {
                    p.polarity.sign() * level
                } else {
                    level
                };
                // normalizes -0.0
                signed + 0.0
            }
        }
    }

    /// Samples `channel` every `dt_s` seconds from 0 through the total duration.
    pub fn quantize(&self, channel: Channel, dt_s: f64) -> Result<Vec<f64>, TimelineError> {
        if !(dt_s > 0.0) || !dt_s.is_finite() {
            return Err(TimelineError::InvalidArgument(format!(
                "sample interval must be > 0, got {dt_s}"
            )));
        }
        let dt_ms = dt_s * 1e3;
        let n = sample_count(self.total_ms, dt_ms);
        Ok((0..n)
            .map(|k| self.sample(channel, k as f64 * dt_ms))
            .collect())
    }

    /// Every invariant violation, in channel then pulse order.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for channel in Channel::ALL {
            let pulses = self.pulses(channel);
            for (i, p) in pulses.iter().enumerate() {
                if !(p.start_ms >= 0.0) {
                    out.push(Violation::NegativeStart { channel, pulse: i });
                }
                if !(p.on_ms > 0.0) {
                    out.push(Violation::NonPositiveDuration { channel, pulse: i });
                }
                if !(p.amplitude > 0.0 && p.amplitude <= 1.0) {
                    out.push(Violation::AmplitudeOutOfRange { channel, pulse: i });
                }
                if !on_grid(p.start_ms) || !on_grid(p.end_ms()) {
                    out.push(Violation::OffGrid { channel, pulse: i });
                }
                if i > 0 && p.start_ms < pulses[i - 1].end_ms() - GRID_EPS {
                    out.push(Violation::Overlap { channel, pulse: i });
                }
            }
            if let Some(last) = pulses.iter().map(Pulse::end_ms).reduce(f64::max) {
                if self.total_ms < last - GRID_EPS {
                    out.push(Violation::DurationTooShort { channel });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Writes the per-tick CSV rendering of all channels.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_ms,vibe_tip,vibe_end,motor")?;
        let ticks = (self.total_ms / TICK_MS).round().max(0.0) as u64;
        for k in 0..=ticks {
            let t = k as f64 / 10.0;
            writeln!(
                out,
                "{},{},{},{}",
                fixed6(t),
                fixed6(self.sample(Channel::VibeTip, t)),
                fixed6(self.sample(Channel::VibeEnd, t)),
                fixed6(self.sample(Channel::Motor, t)),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

fn sample_count(total_ms: f64, dt_ms: f64) -> usize {
    let ratio = total_ms / dt_ms;
    // absorb representation error so that 10 ms / 1 ms gives 10 intervals
    let intervals = (ratio - 1e-9 * ratio.abs().max(1.0)).ceil().max(0.0);
    intervals as usize + 1
}

/// Six-decimal fixed point without a negative zero.
pub fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}
