use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial<C> {
    pub cell: C,
    /// Repetition index of this cell, `0..repetitions`.
    pub rep: u32,
    pub session: usize,
}

/// Ordered trial list with session boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSchedule<C> {
    pub trials: Vec<Trial<C>>,
    /// Index of the first trial of each session.
    pub session_starts: Vec<usize>,
}

impl<C: Clone + PartialEq> TrialSchedule<C> {
    /// Every cell `repetitions` times. Repetitions are split evenly over
    /// `sessions` and each session is shuffled on its own.
    pub fn factorial<R: Rng + ?Sized>(cells: &[C], repetitions: u32, sessions: usize, rng: &mut R) -> Self {
        let sessions = sessions.clamp(1, repetitions.max(1) as usize);
        let mut trials = Vec::with_capacity(cells.len() * repetitions as usize);
        let mut session_starts = Vec::with_capacity(sessions);
        for s in 0..sessions {
            session_starts.push(trials.len());
            let start = trials.len();
            for rep in 0..repetitions {
                if rep as usize * sessions / repetitions as usize != s {
                    continue;
                }
                for cell in cells {
                    trials.push(Trial {
                        cell: cell.clone(),
                        rep,
                        session: s,
                    });
                }
            }
            trials[start..].shuffle(rng);
        }
        TrialSchedule { trials, session_starts }
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn count(&self, cell: &C) -> usize {
        self.trials.iter().filter(|t| &t.cell == cell).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::participant::stream;

    #[test]
    fn balanced_and_split() {
        let cells = vec![("a", 0), ("a", 1), ("b", 0), ("b", 1)];
        let s = TrialSchedule::factorial(&cells, 10, 2, &mut stream(1, 0));
        assert_eq!(s.len(), 40);
        assert_eq!(s.session_starts, vec![0, 20]);
        for c in &cells {
            assert_eq!(s.count(c), 10);
        }
        assert!(s.trials[..20].iter().all(|t| t.rep < 5 && t.session == 0));
        assert!(s.trials[20..].iter().all(|t| t.rep >= 5 && t.session == 1));
    }

    #[test]
    fn order_is_shuffled_but_reproducible() {
        let cells: Vec<u32> = (0..25).collect();
        let a = TrialSchedule::factorial(&cells, 4, 2, &mut stream(7, 0));
        let b = TrialSchedule::factorial(&cells, 4, 2, &mut stream(7, 0));
        assert_eq!(a, b);
        let first: Vec<u32> = a.trials[..25].iter().map(|t| t.cell).collect();
        assert_ne!(first, cells);
    }
}
