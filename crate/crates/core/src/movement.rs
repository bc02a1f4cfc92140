//! Apparent tactile motion between the two vibration motors.
//!
//! Two square vibration pulses of equal duration `d` fire with their onsets
//! separated by the inter-stimulus onset interval. Depending on the pair
//! `(d, isoi)` the user reports a single stationary buzz, two discrete ones, or
//! a single stimulus travelling along the stylus. The last part is modelled by
//! a [`PerceptRegionTable`].

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::Deserialize;

use crate::error::EffectError;
use crate::grid::{self, Interpolation};
use crate::timeline::{snap_to_grid, ActuationTimeline, Channel, Pulse};

pub const DEFAULT_INTER_REP_GAP_MS: f64 = 500.0;

/// Stimulus durations and ISOIs of the movement grid, in ms.
pub const GRID_MS: [f64; 5] = [50.0, 100.0, 200.0, 300.0, 400.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MovementDirection {
    TipToEnd,
    EndToTip,
}

impl MovementDirection {
    pub const ALL: [MovementDirection; 2] = [MovementDirection::TipToEnd, MovementDirection::EndToTip];

    /// (leading, trailing) channels.
    pub fn channels(self) -> (Channel, Channel) {
        match self {
            MovementDirection::TipToEnd => (Channel::VibeTip, Channel::VibeEnd),
            MovementDirection::EndToTip => (Channel::VibeEnd, Channel::VibeTip),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MovementDirection::TipToEnd => "tip-to-end",
            MovementDirection::EndToTip => "end-to-tip",
        }
    }
}

impl fmt::Display for MovementDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MovementDirection {
    type Err = EffectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tip-to-end" => Ok(MovementDirection::TipToEnd),
            "end-to-tip" => Ok(MovementDirection::EndToTip),
            _ => Err(EffectError::InvalidSpec(format!("unknown movement direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementSpec {
    pub direction: MovementDirection,
    /// Stimulus duration in ms.
    pub duration_ms: f64,
    /// Inter-stimulus onset interval in ms.
    pub isoi_ms: f64,
    pub amplitude: f64,
    pub repetitions: u32,
    pub inter_rep_gap_ms: f64,
}

impl MovementSpec {
    pub fn new(direction: MovementDirection, duration_ms: f64, isoi_ms: f64) -> Self {
        MovementSpec {
            direction,
            duration_ms,
            isoi_ms,
            amplitude: 1.0,
            repetitions: 1,
            inter_rep_gap_ms: DEFAULT_INTER_REP_GAP_MS,
        }
    }

    pub fn validate(&self) -> Result<(), EffectError> {
        let bad = |m: &str| Err(EffectError::InvalidSpec(m.to_string()));
        if !(self.duration_ms.is_finite() && snap_to_grid(self.duration_ms) > 0.0) {
            return bad("duration d must be > 0");
        }
        if !(self.isoi_ms.is_finite() && self.isoi_ms >= 0.0) {
            return bad("isoi must be >= 0");
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return bad("amplitude must be in (0, 1]");
        }
        if self.repetitions < 1 {
            return bad("repetitions must be >= 1");
        }
        if !(self.inter_rep_gap_ms.is_finite() && self.inter_rep_gap_ms >= 0.0) {
            return bad("inter-repetition gap must be >= 0");
        }
        Ok(())
    }
}

/// Builds the two-motor schedule. Times are snapped to the tick grid.
pub fn schedule_movement(spec: &MovementSpec) -> Result<ActuationTimeline, EffectError> {
    spec.validate()?;
    let d = snap_to_grid(spec.duration_ms);
    let isoi = snap_to_grid(spec.isoi_ms);
    let gap = snap_to_grid(spec.inter_rep_gap_ms);
    let (lead, trail) = spec.direction.channels();
    let period = d.max(isoi + d) + gap;
    let mut tl = ActuationTimeline::new();
    for rep in 0..spec.repetitions {
        let base = snap_to_grid(rep as f64 * period);
        tl.push(lead, Pulse::square(base, d, spec.amplitude));
        tl.push(trail, Pulse::square(snap_to_grid(base + isoi), d, spec.amplitude));
    }
    Ok(tl)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerceptLabel {
    SingleStationary,
    Discrete,
    Continuous,
}

impl PerceptLabel {
    pub const ALL: [PerceptLabel; 3] = [
        PerceptLabel::SingleStationary,
        PerceptLabel::Discrete,
        PerceptLabel::Continuous,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PerceptLabel::SingleStationary => "single",
            PerceptLabel::Discrete => "discrete",
            PerceptLabel::Continuous => "continuous",
        }
    }
}

impl fmt::Display for PerceptLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Probability triple indexed by [`PerceptLabel::index`].
pub type LabelProbs = [f64; 3];

/// Label-probability triples over a duration × ISOI grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptRegionTable {
    durations: Vec<f64>,
    isois: Vec<f64>,
    // row-major: duration, then isoi
    cells: Vec<LabelProbs>,
    pub mode: Interpolation,
}

#[derive(Debug, Deserialize)]
struct MovementRow {
    d_ms: f64,
    isoi_ms: f64,
    p_single: f64,
    p_discrete: f64,
    p_continuous: f64,
}

impl PerceptRegionTable {
    pub fn new(durations: Vec<f64>, isois: Vec<f64>, cells: Vec<LabelProbs>) -> Result<Self, EffectError> {
        let table = PerceptRegionTable {
            durations,
            isois,
            cells,
            mode: Interpolation::Bilinear,
        };
        table.check()?;
        Ok(table)
    }

    pub fn check(&self) -> Result<(), EffectError> {
        let bad = |m: String| Err(EffectError::InvalidTable(m));
        if !grid::strictly_increasing(&self.durations) || !grid::strictly_increasing(&self.isois) {
            return bad("axes must be finite and strictly increasing".into());
        }
        if self.cells.len() != self.durations.len() * self.isois.len() {
            return bad(format!(
                "expected {} cells, found {}",
                self.durations.len() * self.isois.len(),
                self.cells.len()
            ));
        }
        for (i, p) in self.cells.iter().enumerate() {
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad(format!("cell {i}: probability outside [0, 1]"));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return bad(format!("cell {i}: probabilities sum to {sum}"));
            }
        }
        Ok(())
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn isois(&self) -> &[f64] {
        &self.isois
    }

    pub fn cell(&self, d_idx: usize, isoi_idx: usize) -> LabelProbs {
        self.cells[d_idx * self.isois.len() + isoi_idx]
    }

    pub fn cells_mut(&mut self) -> impl Iterator<Item = &mut LabelProbs> {
        self.cells.iter_mut()
    }

    /// Table built from the three qualitative regions of the movement study.
    ///
    /// Regions: single stationary at (50, 50); continuous wherever d >= 100 and
    /// isoi <= 200; discrete elsewhere. The dominant label gets 0.5 on cells
    /// bordering another region, 0.65 one step further in and 0.8 deeper;
    /// the remainder is split evenly.
    pub fn default_regions() -> Self {
        let axis = GRID_MS.to_vec();
        let n = axis.len();
        let region = |di: usize, ii: usize| -> PerceptLabel {
            let (d, isoi) = (axis[di], axis[ii]);
            if d <= 50.0 && isoi <= 50.0 {
                PerceptLabel::SingleStationary
            } else if d >= 100.0 && isoi <= 200.0 {
                PerceptLabel::Continuous
            } else {
                PerceptLabel::Discrete
            }
        };
        let mut cells = Vec::with_capacity(n * n);
        for di in 0..n {
            for ii in 0..n {
                let own = region(di, ii);
                let mut dist = usize::MAX;
                for dj in 0..n {
                    for ij in 0..n {
                        if region(dj, ij) != own {
                            dist = dist.min(di.abs_diff(dj) + ii.abs_diff(ij));
                        }
                    }
                }
                let p_dom = 0.5 + 0.15 * (dist.min(3) - 1) as f64;
                let rest = (1.0 - p_dom) / 2.0;
                let mut p = [rest; 3];
                p[own.index()] = p_dom;
                cells.push(p);
            }
        }
        PerceptRegionTable::new(axis.clone(), axis, cells).expect("default table is well formed")
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, EffectError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["d_ms", "isoi_ms", "p_single", "p_discrete", "p_continuous"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(EffectError::InvalidTable(format!(
                "expected header {}",
                expected.join(",")
            )));
        }
        let rows: Vec<MovementRow> = rdr.deserialize().collect::<Result<_, _>>()?;
        let durations = grid::axis_from(rows.iter().map(|r| r.d_ms));
        let isois = grid::axis_from(rows.iter().map(|r| r.isoi_ms));
        if rows.len() != durations.len() * isois.len() {
            return Err(EffectError::InvalidTable(format!(
                "{} rows do not form a complete {}x{} grid",
                rows.len(),
                durations.len(),
                isois.len()
            )));
        }
        let mut cells: Vec<Option<LabelProbs>> = vec![None; rows.len()];
        for r in &rows {
            let di = durations.iter().position(|&v| v == r.d_ms).unwrap();
            let ii = isois.iter().position(|&v| v == r.isoi_ms).unwrap();
            let slot = &mut cells[di * isois.len() + ii];
            if slot.is_some() {
                return Err(EffectError::InvalidTable(format!(
                    "duplicate cell d={} isoi={}",
                    r.d_ms, r.isoi_ms
                )));
            }
            *slot = Some([r.p_single, r.p_discrete, r.p_continuous]);
        }
        let cells = cells.into_iter().map(|c| c.expect("complete grid")).collect();
        PerceptRegionTable::new(durations, isois, cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EffectError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("d_ms,isoi_ms,p_single,p_discrete,p_continuous\n");
        for (di, d) in self.durations.iter().enumerate() {
            for (ii, isoi) in self.isois.iter().enumerate() {
                let p = self.cell(di, ii);
                s.push_str(&format!("{d},{isoi},{},{},{}\n", p[0], p[1], p[2]));
            }
        }
        s
    }

    /// Interpolated probability triple at `(d, isoi)`, clamped to the grid.
    pub fn probabilities(&self, d_ms: f64, isoi_ms: f64) -> LabelProbs {
        let mut out = [0.0; 3];
        for (di, ii, w) in grid::weights(&self.durations, &self.isois, d_ms, isoi_ms, self.mode) {
            if w == 0.0 {
                continue;
            }
            let cell = self.cell(di, ii);
            for k in 0..3 {
                out[k] += w * cell[k];
            }
        }
        out
    }
}

impl Default for PerceptRegionTable {
    fn default() -> Self {
        Self::default_regions()
    }
}

/// First maximum in label order.
pub fn dominant(p: &LabelProbs) -> PerceptLabel {
    let mut best = 0;
    for k in 1..3 {
        if p[k] > p[best] {
            best = k;
        }
    }
    PerceptLabel::ALL[best]
}

/// Dominant label and the interpolated probability triple.
pub fn classify_percept(
    d_ms: f64,
    isoi_ms: f64,
    table: &PerceptRegionTable,
) -> Result<(PerceptLabel, LabelProbs), EffectError> {
    if !(d_ms > 0.0) || !(isoi_ms >= 0.0) {
        return Err(EffectError::InvalidSpec(format!(
            "need d > 0 and isoi >= 0, got d={d_ms} isoi={isoi_ms}"
        )));
    }
    table.check()?;
    let p = table.probabilities(d_ms, isoi_ms);
    Ok((dominant(&p), p))
}

/// Inverse-CDF draw of a label for a uniform `u` in `[0, 1)`.
pub fn label_for_quantile(p: &LabelProbs, u: f64) -> PerceptLabel {
    let mut acc = 0.0;
    for label in PerceptLabel::ALL {
        acc += p[label.index()];
        if u < acc {
            return label;
        }
    }
    // rounding left a sliver above the cumulative sum; take the last non-zero label
    PerceptLabel::ALL
        .into_iter()
        .rev()
        .find(|l| p[l.index()] > 0.0)
        .unwrap_or(PerceptLabel::Continuous)
}

/// Simulated report for one stimulus.
pub fn perceive_movement<R: Rng + ?Sized>(
    d_ms: f64,
    isoi_ms: f64,
    table: &PerceptRegionTable,
    rng: &mut R,
) -> Result<PerceptLabel, EffectError> {
    let (_, p) = classify_percept(d_ms, isoi_ms, table)?;
    Ok(label_for_quantile(&p, rng.random::<f64>()))
}
