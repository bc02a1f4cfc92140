//! Simulated perception studies: the three psychophysical experiments and the
//! spinning-tops game, with repeated-measures ANOVA for the comparisons.

mod anova;
mod experiments;
mod participant;
mod result;
mod schedule;
mod tops;

use std::path::Path;

use thiserror::Error;

pub use anova::{f_survival, rm_anova_oneway, Anova};
pub use experiments::{
    exp1_pooled, run_experiment1, run_experiment1_with, run_experiment2, run_experiment2_with, run_experiment3,
    run_experiment3_with, EXP1_PARTICIPANTS, EXP2_GRID_MS, EXP2_PARTICIPANTS, EXP3_GRID_MS, EXP3_PARTICIPANTS, POOLED,
};
pub use participant::{
    cohort, stratified_normals, stratified_offsets, stratified_uniforms, uniform_bank, Offsets, ParticipantModel,
    Population,
};
pub use result::{mean_sd, ExperimentResult, ResultRow, SummaryRow};
pub use schedule::{Trial, TrialSchedule};
pub use tops::{
    apparent_step, compare_conditions, haptic_cue, render_top, run_all_conditions, run_spinning_tops,
    run_spinning_tops_with, Apparent, Condition, GameState, Top, BOXES_PER_SIDE, FRAME_RATE_HZ, PATTERN_SYMMETRY_DEG,
    TOPS_PARTICIPANTS,
};

use crate::config::{ConfigError, KeyValues};
use crate::error::EffectError;
use crate::grid::Interpolation;
use crate::movement::PerceptRegionTable;
use crate::rotation::RotationPerceptTable;

pub const DEFAULT_SIGMA_SUBJ: f64 = 0.05;
pub const DEFAULT_P_VIS: f64 = 0.9;
pub const DEFAULT_BOX_ACCURACY: f64 = 0.65;
pub const DEFAULT_OH_DIRECTION_TARGET: f64 = 0.81;
pub const DEFAULT_REPETITIONS: u32 = 10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything that determines a harness run besides the experiment choice.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub seed: u64,
    /// Overrides each experiment's own cohort size.
    pub participants: Option<usize>,
    pub repetitions: u32,
    pub sessions: usize,
    /// Repetitions per spin direction in each game condition.
    pub tops_repetitions: u32,
    pub oh_direction_target: f64,
    pub population: Population,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            seed: 0,
            participants: None,
            repetitions: DEFAULT_REPETITIONS,
            sessions: 2,
            tops_repetitions: DEFAULT_REPETITIONS,
            oh_direction_target: DEFAULT_OH_DIRECTION_TARGET,
            population: Population {
                movement: PerceptRegionTable::default_regions(),
                rotation: RotationPerceptTable::default_table(),
                sigma_subj: DEFAULT_SIGMA_SUBJ,
                box_accuracy: DEFAULT_BOX_ACCURACY,
                p_vis: DEFAULT_P_VIS,
            },
        }
    }
}

const KEYS: &[&str] = &[
    "seed",
    "participants",
    "repetitions",
    "sessions",
    "tops_repetitions",
    "oh_direction_target",
    "sigma_subj",
    "box_accuracy",
    "p_vis",
    "movement_table",
    "rotation_table",
    "interpolation",
];

fn probability(key: &str, v: f64) -> Result<f64, HarnessError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(HarnessError::InvalidArgument(format!("{key} must be in [0, 1], got {v}")))
    }
}

impl HarnessConfig {
    /// Applies `kv` on top of the defaults. Table paths are resolved against `base_dir`.
    pub fn from_key_values(kv: &KeyValues, base_dir: Option<&Path>) -> Result<Self, HarnessError> {
        kv.reject_unknown(KEYS)?;
        let mut cfg = HarnessConfig::default();
        let resolve = |p: &str| match base_dir {
            Some(dir) => dir.join(p),
            None => Path::new(p).to_path_buf(),
        };
        if let Some(v) = kv.parsed("seed")? {
            cfg.seed = v;
        }
        cfg.participants = kv.parsed("participants")?;
        if let Some(v) = kv.parsed("repetitions")? {
            cfg.repetitions = v;
        }
        if let Some(v) = kv.parsed("sessions")? {
            cfg.sessions = v;
        }
        if let Some(v) = kv.parsed("tops_repetitions")? {
            cfg.tops_repetitions = v;
        }
        if let Some(v) = kv.parsed("oh_direction_target")? {
            cfg.oh_direction_target = probability("oh_direction_target", v)?;
        }
        let pop = &mut cfg.population;
        if let Some(v) = kv.parsed("sigma_subj")? {
            pop.sigma_subj = v;
        }
        if let Some(v) = kv.parsed("box_accuracy")? {
            pop.box_accuracy = probability("box_accuracy", v)?;
        }
        if let Some(v) = kv.parsed("p_vis")? {
            pop.p_vis = probability("p_vis", v)?;
        }
        if let Some(p) = kv.get("movement_table") {
            pop.movement = PerceptRegionTable::load(resolve(p))?;
        }
        if let Some(p) = kv.get("rotation_table") {
            pop.rotation = RotationPerceptTable::load(resolve(p))?;
        }
        if let Some(mode) = kv.parsed::<Interpolation>("interpolation")? {
            pop.movement.mode = mode;
            pop.rotation.mode = mode;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        Self::from_key_values(&KeyValues::load(path)?, path.parent())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidArgument(m.to_string()));
        if !(self.population.sigma_subj >= 0.0 && self.population.sigma_subj.is_finite()) {
            return bad("sigma_subj must be >= 0");
        }
        if self.participants == Some(0) {
            return bad("participants must be >= 1");
        }
        if self.repetitions == 0 || self.tops_repetitions == 0 {
            return bad("repetitions must be >= 1");
        }
        if self.sessions == 0 {
            return bad("sessions must be >= 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_overrides() {
        let kv = KeyValues::parse("seed=7\nparticipants=3\np_vis=0.8\ninterpolation=nearest").unwrap();
        let cfg = HarnessConfig::from_key_values(&kv, None).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.participants, Some(3));
        assert_eq!(cfg.population.p_vis, 0.8);
        assert_eq!(cfg.population.rotation.mode, Interpolation::Nearest);
    }

    #[test]
    fn config_rejects_bad_values() {
        for text in ["bogus=1", "p_vis=1.5", "sigma_subj=-0.1", "repetitions=0"] {
            let kv = KeyValues::parse(text).unwrap();
            assert!(HarnessConfig::from_key_values(&kv, None).is_err(), "{text}");
        }
    }
}
