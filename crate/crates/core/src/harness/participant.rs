use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::movement::PerceptRegionTable;
use crate::rotation::RotationPerceptTable;

/// RNG stream tags; each purpose draws from its own ChaCha stream.
pub(crate) mod tag {
    pub const OFFSETS: u64 = 1;
    pub const EXP1: u64 = 11;
    pub const EXP2: u64 = 12;
    pub const EXP3: u64 = 13;
    pub const SCHEDULE: u64 = 20;
    pub const TOPS: u64 = 30;
    pub const PARTICIPANT: u64 = 1 << 32;
}

pub(crate) fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// One Latin-hypercube column: `n` uniforms, one in each stratum `[k/n, (k+1)/n)`,
/// in random order.
pub fn stratified_uniforms<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut strata: Vec<usize> = (0..n).collect();
    strata.shuffle(rng);
    strata
        .into_iter()
        .map(|k| (k as f64 + rng.random::<f64>()) / n as f64)
        .collect()
}

/// `bank[participant][slot]`, stratified across participants for every slot.
///
/// Each participant's row is still a sequence of independent uniforms; only
/// the cohort as a whole is balanced.
pub fn uniform_bank<R: Rng + ?Sized>(rng: &mut R, participants: usize, slots: usize) -> Vec<Vec<f64>> {
    let mut bank = vec![Vec::with_capacity(slots); participants];
    for _ in 0..slots {
        for (row, u) in bank.iter_mut().zip(stratified_uniforms(rng, participants)) {
            row.push(u);
        }
    }
    bank
}

/// `bank[participant][rep]` on a per-participant lattice: the `reps` values
/// are `(k + w) / reps` in shuffled order, with the offsets `w` stratified
/// across participants. A participant with hit probability `p` then scores
/// `reps * p` hits up to rounding.
pub fn lattice_bank<R: Rng + ?Sized>(rng: &mut R, participants: usize, reps: usize) -> Vec<Vec<f64>> {
    stratified_uniforms(rng, participants)
        .into_iter()
        .map(|w| {
            let mut ks: Vec<usize> = (0..reps).collect();
            ks.shuffle(rng);
            ks.into_iter().map(|k| (k as f64 + w) / reps as f64).collect()
        })
        .collect()
}

/// Standard-normal scores with one draw per probability stratum.
pub fn stratified_normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let normal = Normal::standard();
    stratified_uniforms(rng, n)
        .into_iter()
        .map(|u| normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12)))
        .collect()
}

/// Per-participant ability offsets, in units of `sigma_subj`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Offsets {
    pub rotation: f64,
    pub boxes: f64,
    pub vision: f64,
}

/// Cohort-balanced offsets for `n` participants.
pub fn stratified_offsets(seed: u64, n: usize) -> Vec<Offsets> {
    let mut rng = stream(seed, tag::OFFSETS);
    let rot = stratified_normals(&mut rng, n);
    let boxes = stratified_normals(&mut rng, n);
    let vis = stratified_normals(&mut rng, n);
    (0..n)
        .map(|i| Offsets {
            rotation: rot[i],
            boxes: boxes[i],
            vision: vis[i],
        })
        .collect()
}

/// A simulated participant: perception tables and game-policy probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantModel {
    pub id: u32,
    pub seed: u64,
    pub sigma_subj: f64,
    pub movement: PerceptRegionTable,
    pub rotation: RotationPerceptTable,
    /// Probability of finding the open box from the movement cue.
    pub box_accuracy: f64,
    /// Probability of trusting vision when it conflicts with touch.
    pub p_vis: f64,
}

/// Population-level inputs shared by every participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub movement: PerceptRegionTable,
    pub rotation: RotationPerceptTable,
    pub sigma_subj: f64,
    pub box_accuracy: f64,
    pub p_vis: f64,
}

impl ParticipantModel {
    /// Perturbs the population tables. Rotation gets a single shift so the grid
    /// stays monotone; movement cells get independent noise and are
    /// renormalized.
    pub fn new(id: u32, seed: u64, population: &Population, offsets: Offsets) -> Self {
        let sigma = population.sigma_subj.max(0.0);
        let mut rng = stream(seed, tag::PARTICIPANT + id as u64);
        let mut movement = population.movement.clone();
        if sigma > 0.0 {
            for probs in movement.cells_mut() {
                let mut noisy = *probs;
                for p in noisy.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *p = (*p + sigma * z).clamp(0.0, 1.0);
                }
                let total: f64 = noisy.iter().sum();
                if total > 0.0 {
                    *probs = noisy.map(|p| p / total);
                }
            }
        }
        ParticipantModel {
            id,
            seed,
            sigma_subj: sigma,
            movement,
            rotation: population.rotation.shifted(sigma * offsets.rotation),
            box_accuracy: (population.box_accuracy + sigma * offsets.boxes).clamp(0.0, 1.0),
            p_vis: (population.p_vis + sigma * offsets.vision).clamp(0.0, 1.0),
        }
    }
}

/// Participants `0..n` seeded from `seed`.
pub fn cohort(seed: u64, n: usize, population: &Population) -> Vec<ParticipantModel> {
    stratified_offsets(seed, n)
        .into_iter()
        .enumerate()
        .map(|(i, off)| ParticipantModel::new(i as u32, seed, population, off))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn population(sigma: f64) -> Population {
        Population {
            movement: PerceptRegionTable::default_regions(),
            rotation: RotationPerceptTable::default_table(),
            sigma_subj: sigma,
            box_accuracy: 0.65,
            p_vis: 0.9,
        }
    }

    #[test]
    fn one_draw_per_stratum() {
        let mut rng = stream(3, 0);
        let mut u = stratified_uniforms(&mut rng, 8);
        u.sort_by(f64::total_cmp);
        for (k, v) in u.iter().enumerate() {
            assert!(*v >= k as f64 / 8.0 && *v < (k + 1) as f64 / 8.0);
        }
    }

    #[test]
    fn bank_columns_are_stratified() {
        let mut rng = stream(5, 0);
        let bank = uniform_bank(&mut rng, 10, 4);
        for slot in 0..4 {
            let mut strata: Vec<usize> = bank.iter().map(|row| (row[slot] * 10.0) as usize).collect();
            strata.sort();
            assert_eq!(strata, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn lattice_rows_are_evenly_spaced() {
        let mut rng = stream(2, 0);
        let bank = lattice_bank(&mut rng, 6, 10);
        for row in &bank {
            let mut r = row.clone();
            r.sort_by(f64::total_cmp);
            for k in 1..10 {
                assert!((r[k] - r[k - 1] - 0.1).abs() < 1e-12);
            }
        }
        let mut first: Vec<usize> = bank.iter().map(|row| (row.iter().cloned().fold(1.0, f64::min) * 60.0) as usize).collect();
        first.sort();
        assert_eq!(first, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_participant() {
        let pop = population(0.05);
        assert_eq!(cohort(9, 4, &pop), cohort(9, 4, &pop));
        assert_ne!(cohort(9, 4, &pop)[0], cohort(10, 4, &pop)[0]);
    }

    #[test]
    fn zero_sigma_keeps_tables() {
        let pop = population(0.0);
        let p = &cohort(1, 3, &pop)[2];
        assert_eq!(p.movement, pop.movement);
        assert_eq!(p.rotation, pop.rotation);
        assert_eq!(p.box_accuracy, 0.65);
    }

    #[test]
    fn perturbed_tables_stay_valid() {
        let pop = population(0.2);
        for p in cohort(4, 10, &pop) {
            p.movement.check().unwrap();
            p.rotation.check().unwrap();
        }
    }
}
