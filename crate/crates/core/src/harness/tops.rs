//! The spinning-tops game.
//!
//! A top spins at a fixed step per frame; its pattern repeats every 180
//! degrees, so large steps alias. Side boxes are labelled by direction, and
//! one of the three boxes on each side is open.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::anova::{rm_anova_oneway, Anova};
use super::participant::{cohort, stream, tag, uniform_bank, ParticipantModel};
use super::result::{percent, ExperimentResult};
use super::schedule::TrialSchedule;
use super::{HarnessConfig, HarnessError};
use crate::rotation::{direction_for_quantile, predict_direction_accuracy, RotationDirection, RotationSpec};
use crate::timeline::WaveformShape;

pub const FRAME_RATE_HZ: f64 = 30.0;
pub const PATTERN_SYMMETRY_DEG: f64 = 180.0;
pub const TOPS_PARTICIPANTS: usize = 15;
pub const BOXES_PER_SIDE: usize = 3;

/// Playback used for the torque cue.
pub fn haptic_cue() -> RotationSpec {
    RotationSpec::new(RotationDirection::Cw, 200.0, 200.0, WaveformShape::DecreasingRamp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// No visual or haptic cue.
    Nvh,
    /// Haptic cues only, visual aliased to a standstill.
    Oh,
    /// Visual only.
    Ov,
    /// Visual and haptic, concordant.
    Vh,
    /// Haptic opposite to the apparent visual direction.
    Mvh,
}

impl Condition {
    pub const ALL: [Condition; 5] = [Condition::Nvh, Condition::Oh, Condition::Ov, Condition::Vh, Condition::Mvh];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Nvh => "NVH",
            Condition::Oh => "OH",
            Condition::Ov => "OV",
            Condition::Vh => "VH",
            Condition::Mvh => "MVH",
        }
    }

    /// The condition it is compared against in its game experiment.
    pub fn partner(self) -> Condition {
        match self {
            Condition::Nvh => Condition::Oh,
            Condition::Oh => Condition::Nvh,
            Condition::Ov => Condition::Vh,
            Condition::Vh => Condition::Ov,
            Condition::Mvh => Condition::Vh,
        }
    }

    /// Whether the stylus plays cues; the box cue goes wherever the torque cue does.
    pub fn has_haptics(self) -> bool {
        matches!(self, Condition::Oh | Condition::Vh | Condition::Mvh)
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::InvalidArgument(format!("unknown condition `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Apparent {
    /// Signed step of the perceived motion, CW positive.
    Step(f64),
    Ambiguous,
}

impl Apparent {
    pub fn direction(self) -> Option<RotationDirection> {
        match self {
            Apparent::Step(s) if s > 0.0 => Some(RotationDirection::Cw),
            Apparent::Step(s) if s < 0.0 => Some(RotationDirection::Ccw),
            _ => None,
        }
    }
}

/// Perceived per-frame step of a pattern with the given rotational symmetry.
pub fn apparent_step(step_deg: f64, symmetry_deg: f64) -> Result<Apparent, HarnessError> {
    if !(symmetry_deg > 0.0 && symmetry_deg.is_finite()) {
        return Err(HarnessError::InvalidArgument(format!("symmetry must be > 0, got {symmetry_deg}")));
    }
    if !(step_deg >= 0.0 && step_deg.is_finite()) {
        return Err(HarnessError::InvalidArgument(format!("step must be >= 0, got {step_deg}")));
    }
    let half = symmetry_deg / 2.0;
    let v = (step_deg + half).rem_euclid(symmetry_deg) - half;
    if (v + half).abs() < 1e-9 * symmetry_deg || (v - half).abs() < 1e-9 * symmetry_deg {
        return Ok(Apparent::Ambiguous);
    }
    Ok(Apparent::Step(v + 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Top {
    /// True spin, also the direction of the torque cue.
    pub direction: RotationDirection,
    /// Direction the rendered pattern rotates in.
    pub visual_spin: RotationDirection,
    pub step_deg: f64,
}

impl Top {
    pub fn apparent(&self) -> Apparent {
        match apparent_step(self.step_deg, PATTERN_SYMMETRY_DEG).expect("valid step") {
            Apparent::Step(s) => Apparent::Step(s * self.visual_spin.polarity().sign()),
            Apparent::Ambiguous => Apparent::Ambiguous,
        }
    }
}

/// One scene: three tops and the open box on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub tops: [Top; 3],
    /// Open box index, `[ccw side, cw side]`.
    pub open_box: [usize; 2],
    pub direction_score: usize,
    pub box_score: usize,
}

impl GameState {
    pub fn open_box_for(&self, side: RotationDirection) -> usize {
        self.open_box[side as usize]
    }

    /// Scores a drop of `top` on side `side` into box `slot`.
    pub fn drop_top(&mut self, top: usize, side: RotationDirection, slot: usize) -> (bool, bool) {
        let dir_ok = self.tops[top].direction == side;
        let box_ok = self.open_box_for(side) == slot;
        self.direction_score += dir_ok as usize;
        self.box_score += box_ok as usize;
        (dir_ok, box_ok)
    }
}

/// The visual rendering of a top for `condition`, given its true spin.
pub fn render_top(condition: Condition, direction: RotationDirection, rep: u32) -> Top {
    match condition {
        Condition::Nvh | Condition::Oh => Top {
            direction,
            visual_spin: direction,
            step_deg: 90.0,
        },
        Condition::Ov | Condition::Vh => Top {
            direction,
            visual_spin: direction,
            step_deg: 45.0,
        },
        // Both speeds appear opposite to the torque: 45 by spinning the
        // pattern the other way, 135 by aliasing.
        Condition::Mvh => {
            if rep.is_multiple_of(2) {
                Top {
                    direction,
                    visual_spin: direction.opposite(),
                    step_deg: 45.0,
                }
            } else {
                Top {
                    direction,
                    visual_spin: direction,
                    step_deg: 135.0,
                }
            }
        }
    }
}

fn guess_box(u: f64) -> usize {
    ((u * BOXES_PER_SIDE as f64) as usize).min(BOXES_PER_SIDE - 1)
}

/// Participant accuracy for the torque cue, rescaled so the population
/// reaches `cfg.oh_direction_target`.
fn haptic_accuracy(p: &ParticipantModel, cfg: &HarnessConfig) -> Result<f64, HarnessError> {
    let cue = haptic_cue();
    let base = predict_direction_accuracy(cue.on_ms, cue.off_ms, cue.shape, &cfg.population.rotation)?;
    let own = predict_direction_accuracy(cue.on_ms, cue.off_ms, cue.shape, &p.rotation)?;
    let scale = if base > 0.5 {
        (cfg.oh_direction_target - 0.5) / (base - 0.5)
    } else {
        0.0
    };
    Ok((0.5 + scale * (own - 0.5)).clamp(0.0, 1.0))
}

pub fn run_spinning_tops(condition: Condition, cfg: &HarnessConfig) -> Result<ExperimentResult, HarnessError> {
    let people = cohort(cfg.seed, cfg.participants.unwrap_or(TOPS_PARTICIPANTS), &cfg.population);
    run_spinning_tops_with(condition, &people, cfg)
}

pub fn run_spinning_tops_with(
    condition: Condition,
    people: &[ParticipantModel],
    cfg: &HarnessConfig,
) -> Result<ExperimentResult, HarnessError> {
    let reps = cfg.tops_repetitions;
    let cells = RotationDirection::ALL;
    // one order for everyone, as in the study
    let mut group = stream(cfg.seed, (tag::TOPS << 8) | condition.index());
    let schedule = TrialSchedule::factorial(&cells, reps, 1, &mut group);
    let mut scenes = Vec::with_capacity(schedule.len());
    for t in &schedule.trials {
        let mut tops = [render_top(condition, t.cell, t.rep); 3];
        for top in &mut tops[1..] {
            *top = render_top(condition, RotationDirection::ALL[group.random_range(0..2)], t.rep);
        }
        scenes.push(GameState {
            tops,
            open_box: [group.random_range(0..BOXES_PER_SIDE), group.random_range(0..BOXES_PER_SIDE)],
            direction_score: 0,
            box_score: 0,
        });
    }
    let n = people.len();
    let slots = schedule.len();
    let u_dir = uniform_bank(&mut group, n, slots);
    let u_box = uniform_bank(&mut group, n, slots);
    let u_vis = uniform_bank(&mut group, n, slots);

    let mut result = ExperimentResult::new("tops", &["condition", "measure"], slots);
    for (i, p) in people.iter().enumerate() {
        let mut rng = stream(cfg.seed, (tag::TOPS << 40) | (condition.index() << 32) | p.id as u64);
        let p_hap = haptic_accuracy(p, cfg)?;
        let (mut dir_hits, mut box_hits) = (0, 0);
        for (t, scene) in scenes.iter().enumerate() {
            let mut scene = scene.clone();
            let top = scene.tops[0];
            let haptic = || direction_for_quantile(top.direction, p_hap, u_dir[i][t]);
            let guess = || direction_for_quantile(top.direction, 0.5, u_dir[i][t]);
            let vision = top.apparent().direction();
            let answer = match condition {
                Condition::Nvh => guess(),
                Condition::Oh => haptic(),
                Condition::Ov => vision.unwrap_or_else(guess),
                Condition::Vh => vision.unwrap_or_else(haptic),
                Condition::Mvh => match vision {
                    Some(v) if u_vis[i][t] < p.p_vis => v,
                    _ => haptic(),
                },
            };
            let open = scene.open_box_for(answer);
            let slot = if !condition.has_haptics() {
                guess_box(u_box[i][t])
            } else if u_box[i][t] < p.box_accuracy {
                open
            } else {
                // a miss lands in one of the two closed boxes
                (open + 1 + rng.random_range(0..BOXES_PER_SIDE - 1)) % BOXES_PER_SIDE
            };
            let (d, b) = scene.drop_top(0, answer, slot);
            dir_hits += d as usize;
            box_hits += b as usize;
        }
        result.push(&[condition.name().into(), "direction".into()], p.id, percent(dir_hits, slots), slots);
        result.push(&[condition.name().into(), "box".into()], p.id, percent(box_hits, slots), slots);
    }
    result.summarize(|_| true);
    Ok(result)
}

/// Per-participant direction (or box) scores of two runs over the same cohort.
pub fn compare_conditions(a: &ExperimentResult, b: &ExperimentResult, measure: &str) -> Result<Anova, HarnessError> {
    let col = |r: &ExperimentResult| {
        let cond = r.rows.first().map(|row| row.keys[0].clone()).unwrap_or_default();
        r.cell_values(&[&cond, measure])
    };
    let (x, y) = (col(a), col(b));
    if x.len() != y.len() || x.is_empty() {
        return Err(HarnessError::InvalidArgument("runs cover different participants".into()));
    }
    let data: Vec<Vec<f64>> = x.into_iter().zip(y).map(|(u, v)| vec![u, v]).collect();
    rm_anova_oneway(&data)
}

/// Runs every condition over one cohort.
pub fn run_all_conditions(cfg: &HarnessConfig) -> Result<Vec<ExperimentResult>, HarnessError> {
    let people = cohort(cfg.seed, cfg.participants.unwrap_or(TOPS_PARTICIPANTS), &cfg.population);
    Condition::ALL
        .iter()
        .map(|&c| run_spinning_tops_with(c, &people, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apparent_step_examples() {
        assert_eq!(apparent_step(45.0, 180.0).unwrap(), Apparent::Step(45.0));
        assert_eq!(apparent_step(135.0, 180.0).unwrap(), Apparent::Step(-45.0));
        assert_eq!(apparent_step(90.0, 180.0).unwrap(), Apparent::Ambiguous);
        assert_eq!(apparent_step(0.0, 180.0).unwrap(), Apparent::Step(0.0));
        assert!(apparent_step(45.0, 0.0).is_err());
        assert!(apparent_step(-1.0, 180.0).is_err());
    }

    #[test]
    fn mvh_cues_conflict() {
        for dir in RotationDirection::ALL {
            for rep in 0..2 {
                let top = render_top(Condition::Mvh, dir, rep);
                assert_eq!(top.apparent().direction(), Some(dir.opposite()));
            }
            assert_eq!(render_top(Condition::Vh, dir, 0).apparent().direction(), Some(dir));
            assert_eq!(render_top(Condition::Oh, dir, 0).apparent().direction(), None);
        }
    }

    #[test]
    fn condition_names() {
        assert_eq!("mvh".parse::<Condition>().unwrap(), Condition::Mvh);
        assert!("XYZ".parse::<Condition>().is_err());
    }

    #[test]
    fn trial_count_and_visual_ceiling() {
        let cfg = HarnessConfig::default();
        let r = run_spinning_tops(Condition::Ov, &cfg).unwrap();
        assert_eq!(r.trials_per_participant, 20);
        assert_eq!(r.summary_row("condition=OV measure=direction").unwrap().mean, 100.0);
    }
}
