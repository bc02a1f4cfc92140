//! The three psychophysical experiments.
//!
//! Every response at repetition `r` reads the same uniform `bank[i][r]`, for
//! every cell and both directions. The perceivers are direction-blind, so the
//! two directions agree exactly, and a participant's hit count can only grow
//! with the table probability. The bank is a per-participant lattice, so hit
//! counts track the table to within one response.

use super::participant::{cohort, lattice_bank, stream, tag, ParticipantModel};
use super::result::{percent, ExperimentResult};
use super::schedule::TrialSchedule;
use super::{HarnessConfig, HarnessError};
use crate::movement::{label_for_quantile, MovementDirection, PerceptLabel, GRID_MS};
use crate::rotation::{direction_for_quantile, predict_direction_accuracy, RotationDirection};
use crate::timeline::WaveformShape;

pub const EXP1_PARTICIPANTS: usize = 10;
pub const EXP2_PARTICIPANTS: usize = 10;
pub const EXP3_PARTICIPANTS: usize = 10;

pub const EXP2_GRID_MS: [f64; 6] = [25.0, 75.0, 175.0, 275.0, 375.0, 575.0];
pub const EXP3_GRID_MS: [f64; 3] = [50.0, 200.0, 350.0];

pub const POOLED: &str = "pooled";

fn schedule_rng(cfg: &HarnessConfig, exp: u64, id: u32) -> rand_chacha::ChaCha8Rng {
    stream(cfg.seed, (tag::SCHEDULE << 40) | (exp << 32) | id as u64)
}

fn key(v: f64) -> String {
    format!("{v}")
}

fn default_cohort(cfg: &HarnessConfig, default_n: usize) -> Vec<ParticipantModel> {
    cohort(cfg.seed, cfg.participants.unwrap_or(default_n), &cfg.population)
}

/// Percept labels over the (d, ISOI) grid, 2 directions, `repetitions` each.
pub fn run_experiment1(cfg: &HarnessConfig) -> Result<ExperimentResult, HarnessError> {
    run_experiment1_with(&default_cohort(cfg, EXP1_PARTICIPANTS), cfg)
}

pub fn run_experiment1_with(
    people: &[ParticipantModel],
    cfg: &HarnessConfig,
) -> Result<ExperimentResult, HarnessError> {
    let reps = cfg.repetitions;
    let g = GRID_MS.len();
    let mut cells = Vec::new();
    for di in 0..g {
        for ii in 0..g {
            for dir in MovementDirection::ALL {
                cells.push((di, ii, dir));
            }
        }
    }
    let bank = lattice_bank(&mut stream(cfg.seed, tag::EXP1), people.len(), reps as usize);
    let mut result = ExperimentResult::new(
        "exp1",
        &["d_ms", "isoi_ms", "direction", "label"],
        cells.len() * reps as usize,
    );
    for (i, p) in people.iter().enumerate() {
        let schedule = TrialSchedule::factorial(&cells, reps, cfg.sessions, &mut schedule_rng(cfg, 1, p.id));
        // counts[di][ii][dir][label]
        let mut counts = vec![[[0usize; 3]; 2]; g * g];
        for t in &schedule.trials {
            let (di, ii, dir) = t.cell;
            let probs = p.movement.probabilities(GRID_MS[di], GRID_MS[ii]);
            let label = label_for_quantile(&probs, bank[i][t.rep as usize]);
            counts[di * g + ii][dir as usize][label.index()] += 1;
        }
        for di in 0..g {
            for ii in 0..g {
                let c = &counts[di * g + ii];
                let per_dir = reps as usize;
                for label in PerceptLabel::ALL {
                    let l = label.index();
                    for dir in MovementDirection::ALL {
                        let keys = [key(GRID_MS[di]), key(GRID_MS[ii]), dir.to_string(), label.to_string()];
                        result.push(&keys, p.id, percent(c[dir as usize][l], per_dir), per_dir);
                    }
                    let keys = [key(GRID_MS[di]), key(GRID_MS[ii]), POOLED.into(), label.to_string()];
                    result.push(&keys, p.id, percent(c[0][l] + c[1][l], 2 * per_dir), 2 * per_dir);
                }
            }
        }
    }
    result.summarize(|k| k[2] == POOLED);
    Ok(result)
}

/// Pooled label percentages of one experiment-1 cell, in label order.
pub fn exp1_pooled(result: &ExperimentResult, d_ms: f64, isoi_ms: f64) -> [f64; 3] {
    PerceptLabel::ALL.map(|label| {
        result
            .cell_mean(&[&key(d_ms), &key(isoi_ms), POOLED, label.name()])
            .unwrap_or(f64::NAN)
    })
}

/// Square-wave direction identification over the on/off grid.
pub fn run_experiment2(cfg: &HarnessConfig) -> Result<ExperimentResult, HarnessError> {
    run_experiment2_with(&default_cohort(cfg, EXP2_PARTICIPANTS), cfg)
}

pub fn run_experiment2_with(
    people: &[ParticipantModel],
    cfg: &HarnessConfig,
) -> Result<ExperimentResult, HarnessError> {
    let cells: Vec<(f64, f64, WaveformShape, RotationDirection)> = EXP2_GRID_MS
        .iter()
        .flat_map(|&on| EXP2_GRID_MS.iter().map(move |&off| (on, off)))
        .flat_map(|(on, off)| RotationDirection::ALL.map(|d| (on, off, WaveformShape::Square, d)))
        .collect();
    let bank = lattice_bank(&mut stream(cfg.seed, tag::EXP2), people.len(), cfg.repetitions as usize);
    rotation_experiment("exp2", 2, &cells, &bank, people, cfg, &["on_ms", "off_ms", "direction"], |c| {
        vec![key(c.0), key(c.1)]
    })
}

/// Waveform-shape comparison over a 3x3 on/off grid.
pub fn run_experiment3(cfg: &HarnessConfig) -> Result<ExperimentResult, HarnessError> {
    run_experiment3_with(&default_cohort(cfg, EXP3_PARTICIPANTS), cfg)
}

pub fn run_experiment3_with(
    people: &[ParticipantModel],
    cfg: &HarnessConfig,
) -> Result<ExperimentResult, HarnessError> {
    let mut cells = Vec::new();
    for shape in WaveformShape::ALL {
        for on in EXP3_GRID_MS {
            for off in EXP3_GRID_MS {
                for dir in RotationDirection::ALL {
                    cells.push((on, off, shape, dir));
                }
            }
        }
    }
    let bank = lattice_bank(&mut stream(cfg.seed, tag::EXP3), people.len(), cfg.repetitions as usize);
    rotation_experiment(
        "exp3",
        3,
        &cells,
        &bank,
        people,
        cfg,
        &["shape", "on_ms", "off_ms", "direction"],
        |c| vec![c.2.to_string(), key(c.0), key(c.1)],
    )
}

type RotationCell = (f64, f64, WaveformShape, RotationDirection);

#[allow(clippy::too_many_arguments)]
fn rotation_experiment(
    name: &str,
    exp: u64,
    cells: &[RotationCell],
    bank: &[Vec<f64>],
    people: &[ParticipantModel],
    cfg: &HarnessConfig,
    key_names: &[&str],
    cell_keys: impl Fn(&RotationCell) -> Vec<String>,
) -> Result<ExperimentResult, HarnessError> {
    let reps = cfg.repetitions as usize;
    let mut result = ExperimentResult::new(name, key_names, cells.len() * reps);
    // cells come in (cw, ccw) pairs
    let stimuli: Vec<&RotationCell> = cells.iter().step_by(2).collect();
    for (i, p) in people.iter().enumerate() {
        let schedule = TrialSchedule::factorial(cells, cfg.repetitions, cfg.sessions, &mut schedule_rng(cfg, exp, p.id));
        let mut hits = vec![[0usize; 2]; stimuli.len()];
        let mut accuracy = Vec::with_capacity(stimuli.len());
        for c in &stimuli {
            accuracy.push(predict_direction_accuracy(c.0, c.1, c.2, &p.rotation)?);
        }
        for t in &schedule.trials {
            let (on, off, shape, dir) = t.cell;
            let s = stimuli
                .iter()
                .position(|c| c.0 == on && c.1 == off && c.2 == shape)
                .expect("stimulus present");
            if direction_for_quantile(dir, accuracy[s], bank[i][t.rep as usize]) == dir {
                hits[s][dir as usize] += 1;
            }
        }
        let mut totals = [0usize; 2];
        for (s, c) in stimuli.iter().enumerate() {
            let base = cell_keys(c);
            for dir in RotationDirection::ALL {
                let mut keys = base.clone();
                keys.push(dir.to_string());
                result.push(&keys, p.id, percent(hits[s][dir as usize], reps), reps);
                totals[dir as usize] += hits[s][dir as usize];
            }
            let mut keys = base;
            keys.push(POOLED.into());
            result.push(&keys, p.id, percent(hits[s][0] + hits[s][1], 2 * reps), 2 * reps);
        }
        // whole-grid accuracy per direction
        let n = stimuli.len() * reps;
        let filler = vec!["all".to_string(); key_names.len() - 1];
        for dir in RotationDirection::ALL {
            let mut keys = filler.clone();
            keys.push(dir.to_string());
            result.push(&keys, p.id, percent(totals[dir as usize], n), n);
        }
    }
    result.summarize(|k| k.last().is_some_and(|d| d == POOLED) || k[0] == "all");
    Ok(result)
}
