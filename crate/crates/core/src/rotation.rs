//! Rotational torque pulse trains on the DC motor.
//!
//! During each on-time the rotor spins up and the casing receives the
//! reaction torque in the intended direction; when the drive stops the casing
//! receives the opposite kick. How reliably a user names the intended
//! direction is captured by a [`RotationPerceptTable`].

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::Deserialize;

use crate::error::EffectError;
use crate::grid::{self, Interpolation};
use crate::timeline::{snap_to_grid, ActuationTimeline, Channel, Polarity, Pulse, WaveformShape};

pub const DEFAULT_PULSE_COUNT: u32 = 3;

/// On/off durations of the rotation grid (ms), with the 200 ms anchor row.
pub const TABLE_AXIS_MS: [f64; 7] = [25.0, 75.0, 175.0, 200.0, 275.0, 375.0, 575.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RotationDirection {
    Cw,
    Ccw,
}

impl RotationDirection {
    pub const ALL: [RotationDirection; 2] = [RotationDirection::Cw, RotationDirection::Ccw];

    pub fn polarity(self) -> Polarity {
        match self {
            RotationDirection::Cw => Polarity::Positive,
            RotationDirection::Ccw => Polarity::Negative,
        }
    }

    /// Sign of the casing torque felt during on-time (opposite to rotor spin).
    pub fn casing_sign(self) -> f64 {
        -self.polarity().sign()
    }

    pub fn opposite(self) -> Self {
        match self {
            RotationDirection::Cw => RotationDirection::Ccw,
            RotationDirection::Ccw => RotationDirection::Cw,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RotationDirection::Cw => "cw",
            RotationDirection::Ccw => "ccw",
        }
    }
}

impl fmt::Display for RotationDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RotationDirection {
    type Err = EffectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cw" => Ok(RotationDirection::Cw),
            "ccw" => Ok(RotationDirection::Ccw),
            _ => Err(EffectError::InvalidSpec(format!("unknown rotation direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSpec {
    pub direction: RotationDirection,
    pub on_ms: f64,
    pub off_ms: f64,
    pub shape: WaveformShape,
    pub pulse_count: u32,
    pub amplitude: f64,
}

impl RotationSpec {
    pub fn new(direction: RotationDirection, on_ms: f64, off_ms: f64, shape: WaveformShape) -> Self {
        RotationSpec {
            direction,
            on_ms,
            off_ms,
            shape,
            pulse_count: DEFAULT_PULSE_COUNT,
            amplitude: 1.0,
        }
    }

    pub fn with_count(mut self, pulse_count: u32) -> Self {
        self.pulse_count = pulse_count;
        self
    }

    /// Pulse repetition rate in Hz.
    pub fn frequency_hz(&self) -> f64 {
        1e3 / (self.on_ms + self.off_ms)
    }

    pub fn validate(&self) -> Result<(), EffectError> {
        let bad = |m: &str| Err(EffectError::InvalidSpec(m.to_string()));
        if !(self.on_ms.is_finite() && snap_to_grid(self.on_ms) > 0.0) {
            return bad("on-time must be > 0");
        }
        if !(self.off_ms.is_finite() && self.off_ms >= 0.0) {
            return bad("off-time must be >= 0");
        }
        if self.pulse_count < 1 {
            return bad("pulse count must be >= 1");
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return bad("amplitude must be in (0, 1]");
        }
        Ok(())
    }
}

/// Motor-channel pulse train; pulse `k` starts at `k * (on + off)`.
pub fn schedule_rotation(spec: &RotationSpec) -> Result<ActuationTimeline, EffectError> {
    spec.validate()?;
    let on = snap_to_grid(spec.on_ms);
    let period = on + snap_to_grid(spec.off_ms);
    let mut tl = ActuationTimeline::new();
    for k in 0..spec.pulse_count {
        tl.push(
            Channel::Motor,
            Pulse {
                start_ms: snap_to_grid(k as f64 * period),
                on_ms: on,
                amplitude: spec.amplitude,
                shape: spec.shape,
                polarity: spec.direction.polarity(),
            },
        );
    }
    // the trailing off-time belongs to the effect
    Ok(tl.with_total_duration(snap_to_grid(spec.pulse_count as f64 * period)))
}

#[derive(Debug, Clone, PartialEq)]
struct ShapeGrid {
    on: Vec<f64>,
    off: Vec<f64>,
    // row-major: on, then off
    p: Vec<f64>,
}

impl ShapeGrid {
    fn at(&self, oi: usize, fi: usize) -> f64 {
        self.p[oi * self.off.len() + fi]
    }

    fn check(&self, shape: WaveformShape) -> Result<(), EffectError> {
        let bad = |m: String| Err(EffectError::InvalidTable(format!("{shape}: {m}")));
        if !grid::strictly_increasing(&self.on) || !grid::strictly_increasing(&self.off) {
            return bad("axes must be finite and strictly increasing".into());
        }
        if self.p.len() != self.on.len() * self.off.len() {
            return bad("incomplete grid".into());
        }
        if let Some(v) = self.p.iter().find(|v| !(0.5..=1.0).contains(*v)) {
            return bad(format!("probability {v} outside [0.5, 1]"));
        }
        for oi in 0..self.on.len() {
            for fi in 0..self.off.len() {
                let v = self.at(oi, fi);
                if oi > 0 && self.at(oi - 1, fi) > v {
                    return bad(format!("decreasing in on-time at on={} off={}", self.on[oi], self.off[fi]));
                }
                if fi > 0 && self.at(oi, fi - 1) > v {
                    return bad(format!("decreasing in off-time at on={} off={}", self.on[oi], self.off[fi]));
                }
            }
        }
        Ok(())
    }
}

/// Per-shape probability of naming the intended direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPerceptTable {
    grids: [ShapeGrid; 3],
    pub mode: Interpolation,
}

#[derive(Debug, Deserialize)]
struct RotationRow {
    shape: String,
    on_ms: f64,
    off_ms: f64,
    p_correct: f64,
}

fn shape_slot(shape: WaveformShape) -> usize {
    match shape {
        WaveformShape::Square => 0,
        WaveformShape::IncreasingRamp => 1,
        WaveformShape::DecreasingRamp => 2,
    }
}

/// Saturating per-axis contribution: 0 at 25 ms, 0.875 at 200 ms, 1 at 575 ms.
fn axis_gain(x_ms: f64, length_ms: f64) -> f64 {
    let span = 575.0 - 25.0;
    (1.0 - (-(x_ms - 25.0) / length_ms).exp()) / (1.0 - (-span / length_ms).exp())
}

fn solve_length_scale() -> f64 {
    let (mut lo, mut hi) = (10.0_f64, 1000.0_f64);
    // axis_gain(200) falls as the length scale grows
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if axis_gain(200.0, mid) > 0.875 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl RotationPerceptTable {
    /// Smooth monotone defaults through the 200/200 ms shape anchors.
    ///
    /// Square runs from 0.55 at (25, 25) to 0.95 at (575, 575) and passes
    /// 0.90 at (200, 200). Increasing sits 0.12 below, decreasing 0.055 above,
    /// both clamped to [0.5, 1].
    pub fn default_table() -> Self {
        let lambda = solve_length_scale();
        let axis = TABLE_AXIS_MS.to_vec();
        let mut square = Vec::with_capacity(axis.len() * axis.len());
        for &on in &axis {
            for &off in &axis {
                square.push(0.55 + 0.40 * 0.5 * (axis_gain(on, lambda) + axis_gain(off, lambda)));
            }
        }
        // pin the anchor exactly despite bisection round-off
        let anchor = 3 * axis.len() + 3;
        square[anchor] = 0.90;
        let shifted = |delta: f64| -> Vec<f64> {
            square
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    if i == anchor {
                        0.90 + delta
                    } else {
                        (p + delta).clamp(0.5, 1.0)
                    }
                })
                .collect()
        };
        let make = |p: Vec<f64>| ShapeGrid {
            on: axis.clone(),
            off: axis.clone(),
            p,
        };
        let table = RotationPerceptTable {
            grids: [make(shifted(0.0)), make(shifted(-0.12)), make(shifted(0.055))],
            mode: Interpolation::Bilinear,
        };
        table.check().expect("default rotation table is valid");
        table
    }

    pub fn check(&self) -> Result<(), EffectError> {
        for shape in WaveformShape::ALL {
            self.grids[shape_slot(shape)].check(shape)?;
        }
        Ok(())
    }

    /// Grid value at the exact `(on, off)` node, if present.
    pub fn node(&self, shape: WaveformShape, on_ms: f64, off_ms: f64) -> Option<f64> {
        let g = &self.grids[shape_slot(shape)];
        let oi = g.on.iter().position(|&v| v == on_ms)?;
        let fi = g.off.iter().position(|&v| v == off_ms)?;
        Some(g.at(oi, fi))
    }

    /// Every cell moved by `delta` and clamped to [0.5, 1]; monotonicity survives.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        for g in &mut out.grids {
            for p in &mut g.p {
                *p = (*p + delta).clamp(0.5, 1.0);
            }
        }
        out
    }

    /// Every cell of `shape` set to `p`.
    pub fn with_constant(mut self, shape: WaveformShape, p: f64) -> Self {
        for v in &mut self.grids[shape_slot(shape)].p {
            *v = p;
        }
        self
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, EffectError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["shape", "on_ms", "off_ms", "p_correct"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(EffectError::InvalidTable(format!("expected header {}", expected.join(","))));
        }
        let rows: Vec<RotationRow> = rdr.deserialize().collect::<Result<_, _>>()?;
        let mut per_shape: [Vec<(f64, f64, f64)>; 3] = Default::default();
        for r in rows {
            let shape: WaveformShape = r
                .shape
                .parse()
                .map_err(|_| EffectError::InvalidTable(format!("unknown shape `{}`", r.shape)))?;
            per_shape[shape_slot(shape)].push((r.on_ms, r.off_ms, r.p_correct));
        }
        let mut grids = Vec::with_capacity(3);
        for shape in WaveformShape::ALL {
            let rows = &per_shape[shape_slot(shape)];
            if rows.is_empty() {
                return Err(EffectError::InvalidTable(format!("no rows for shape {shape}")));
            }
            let on = grid::axis_from(rows.iter().map(|r| r.0));
            let off = grid::axis_from(rows.iter().map(|r| r.1));
            if rows.len() != on.len() * off.len() {
                return Err(EffectError::InvalidTable(format!("{shape}: rows do not form a complete grid")));
            }
            let mut p = vec![f64::NAN; rows.len()];
            for &(o, f, v) in rows {
                let oi = on.iter().position(|&x| x == o).unwrap();
                let fi = off.iter().position(|&x| x == f).unwrap();
                let slot = &mut p[oi * off.len() + fi];
                if !slot.is_nan() {
                    return Err(EffectError::InvalidTable(format!("{shape}: duplicate cell on={o} off={f}")));
                }
                *slot = v;
            }
            grids.push(ShapeGrid { on, off, p });
        }
        let grids: [ShapeGrid; 3] = grids.try_into().expect("three shapes");
        let table = RotationPerceptTable {
            grids,
            mode: Interpolation::Bilinear,
        };
        table.check()?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EffectError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("shape,on_ms,off_ms,p_correct\n");
        for shape in WaveformShape::ALL {
            let g = &self.grids[shape_slot(shape)];
            for (oi, on) in g.on.iter().enumerate() {
                for (fi, off) in g.off.iter().enumerate() {
                    s.push_str(&format!("{shape},{on},{off},{}\n", g.at(oi, fi)));
                }
            }
        }
        s
    }

    fn lookup(&self, on_ms: f64, off_ms: f64, shape: WaveformShape) -> f64 {
        let g = &self.grids[shape_slot(shape)];
        grid::weights(&g.on, &g.off, on_ms, off_ms, self.mode)
            .into_iter()
            .filter(|&(_, _, w)| w != 0.0)
            .map(|(oi, fi, w)| w * g.at(oi, fi))
            .sum()
    }
}

impl Default for RotationPerceptTable {
    fn default() -> Self {
        Self::default_table()
    }
}

/// Probability that the intended direction is reported, clamped to the grid.
pub fn predict_direction_accuracy(
    on_ms: f64,
    off_ms: f64,
    shape: WaveformShape,
    table: &RotationPerceptTable,
) -> Result<f64, EffectError> {
    if !(on_ms > 0.0) || !(off_ms >= 0.0) {
        return Err(EffectError::InvalidSpec(format!(
            "need on > 0 and off >= 0, got on={on_ms} off={off_ms}"
        )));
    }
    table.check()?;
    Ok(table.lookup(on_ms, off_ms, shape))
}

/// Reported direction given a uniform `u`: correct iff `u < p_correct`.
pub fn direction_for_quantile(intended: RotationDirection, p_correct: f64, u: f64) -> RotationDirection {
    if u < p_correct {
        intended
    } else {
        intended.opposite()
    }
}

/// Simulated report of the felt rotation direction.
pub fn perceive_rotation<R: Rng + ?Sized>(
    spec: &RotationSpec,
    table: &RotationPerceptTable,
    rng: &mut R,
) -> Result<RotationDirection, EffectError> {
    spec.validate()?;
    let p = predict_direction_accuracy(spec.on_ms, spec.off_ms, spec.shape, table)?;
    Ok(direction_for_quantile(spec.direction, p, rng.random::<f64>()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn starts(tl: &ActuationTimeline) -> Vec<(f64, f64)> {
        tl.pulses(Channel::Motor).iter().map(|p| (p.start_ms, p.end_ms())).collect()
    }

    #[test]
    fn three_square_pulses() {
        let spec = RotationSpec::new(RotationDirection::Cw, 200.0, 200.0, WaveformShape::Square);
        let tl = schedule_rotation(&spec).unwrap();
        assert_eq!(starts(&tl), vec![(0.0, 200.0), (400.0, 600.0), (800.0, 1000.0)]);
        assert_eq!(tl.total_duration_ms(), 1200.0);
        assert!(tl.pulses(Channel::Motor).iter().all(|p| p.polarity == Polarity::Positive));
        assert!(tl.pulses(Channel::VibeTip).is_empty() && tl.pulses(Channel::VibeEnd).is_empty());
    }

    #[test]
    fn contiguous_ccw_pulses() {
        let spec = RotationSpec::new(RotationDirection::Ccw, 50.0, 0.0, WaveformShape::Square).with_count(2);
        let tl = schedule_rotation(&spec).unwrap();
        assert_eq!(starts(&tl), vec![(0.0, 50.0), (50.0, 100.0)]);
        assert_eq!(tl.sample(Channel::Motor, 60.0), -1.0);
        assert!(tl.validate().is_ok());
    }

    #[test]
    fn decreasing_single_pulse_decays() {
        let spec =
            RotationSpec::new(RotationDirection::Cw, 200.0, 200.0, WaveformShape::DecreasingRamp).with_count(1);
        let tl = schedule_rotation(&spec).unwrap();
        assert_eq!(tl.sample(Channel::Motor, 0.0), 1.0);
        assert!((tl.sample(Channel::Motor, 100.0) - 0.5).abs() < 1e-12);
        assert!(tl.sample(Channel::Motor, 199.9) < 1e-3);
    }

    #[test]
    fn invalid_rotation_specs() {
        let base = RotationSpec::new(RotationDirection::Cw, 200.0, 200.0, WaveformShape::Square);
        for spec in [
            RotationSpec { on_ms: 0.0, ..base },
            RotationSpec { off_ms: -5.0, ..base },
            RotationSpec { pulse_count: 0, ..base },
            RotationSpec { amplitude: 2.0, ..base },
        ] {
            assert!(matches!(schedule_rotation(&spec), Err(EffectError::InvalidSpec(_))));
        }
    }

    #[test]
    fn anchors_at_200() {
        let t = RotationPerceptTable::default();
        let p = |s| predict_direction_accuracy(200.0, 200.0, s, &t).unwrap();
        assert!((p(WaveformShape::Square) - 0.90).abs() < 1e-12);
        assert!((p(WaveformShape::IncreasingRamp) - 0.78).abs() < 1e-12);
        assert!((p(WaveformShape::DecreasingRamp) - 0.955).abs() < 1e-12);
    }

    #[test]
    fn default_corners() {
        let t = RotationPerceptTable::default();
        assert!((t.node(WaveformShape::Square, 25.0, 25.0).unwrap() - 0.55).abs() < 1e-12);
        assert!((t.node(WaveformShape::Square, 575.0, 575.0).unwrap() - 0.95).abs() < 1e-12);
        let lo = predict_direction_accuracy(25.0, 25.0, WaveformShape::Square, &t).unwrap();
        let hi = predict_direction_accuracy(575.0, 575.0, WaveformShape::Square, &t).unwrap();
        assert!(hi >= lo);
    }

    #[test]
    fn clamps_zero_off_time() {
        let t = RotationPerceptTable::default();
        let a = predict_direction_accuracy(100.0, 0.0, WaveformShape::Square, &t).unwrap();
        let b = predict_direction_accuracy(100.0, 25.0, WaveformShape::Square, &t).unwrap();
        assert_eq!(a, b);
        assert!(predict_direction_accuracy(0.0, 25.0, WaveformShape::Square, &t).is_err());
    }

    #[test]
    fn loader_rejects_non_monotone() {
        let t = RotationPerceptTable::default();
        let csv = t.to_csv_string();
        assert_eq!(RotationPerceptTable::from_csv_reader(csv.as_bytes()).unwrap(), t);
        // lower a high-on cell below its neighbour
        let line = csv.lines().find(|l| l.starts_with("square,575,575,")).unwrap().to_string();
        let broken = csv.replace(&line, "square,575,575,0.6");
        assert!(matches!(
            RotationPerceptTable::from_csv_reader(broken.as_bytes()),
            Err(EffectError::InvalidTable(_))
        ));
        let below_chance = csv.replace(&line, "square,575,575,0.3");
        assert!(RotationPerceptTable::from_csv_reader(below_chance.as_bytes()).is_err());
    }

    #[test]
    fn certain_cell_always_intended() {
        let t = RotationPerceptTable::default().with_constant(WaveformShape::Square, 1.0);
        let spec = RotationSpec::new(RotationDirection::Ccw, 75.0, 75.0, WaveformShape::Square);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(perceive_rotation(&spec, &t, &mut rng).unwrap(), RotationDirection::Ccw);
        }
    }

    #[test]
    fn chance_cell_splits_evenly() {
        let t = RotationPerceptTable::default().with_constant(WaveformShape::Square, 0.5);
        let spec = RotationSpec::new(RotationDirection::Cw, 75.0, 75.0, WaveformShape::Square);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| perceive_rotation(&spec, &t, &mut rng).unwrap() == RotationDirection::Cw)
            .count();
        let pct = 100.0 * hits as f64 / n as f64;
        assert!((pct - 50.0).abs() <= 2.0, "{pct}");
    }

    #[test]
    fn shifted_keeps_table_valid() {
        let t = RotationPerceptTable::default();
        assert!(t.shifted(0.3).check().is_ok());
        assert!(t.shifted(-0.3).check().is_ok());
    }
}
