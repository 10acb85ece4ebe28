//! Repetitions inside a word and the lower bounds they imply.
//!
//! A [`PowerOccurrence`] is a factor `w[start..start+extent]` with period
//! `period` and `extent >= 2 * period`. A [`PowerFamily`] is a set of such
//! occurrences that are pairwise strongly disjoint (at least one position
//! between consecutive occurrences) and satisfy the uniqueness condition:
//! writing `a_i = floor(extent_i / period_i)` for the number of full
//! revolutions, the equation `sum t_i * period_i = sum a_i * period_i` has no
//! nonnegative integer solution other than `t = a`.
//!
//! A_N^lower is `max(1, ceil((n + 1 - G) / 2))` where `G` is the largest
//! family gain `m + sum (extent_i - 2 period_i)`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::{constant, phi, ConstantName, Word};

pub type Exponent = Ratio<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepetitionError {
    #[error("occurrence at {start} with period {period} and extent {extent} is not an at-least-square power")]
    NotSquare { start: usize, period: usize, extent: usize },
    #[error("occurrences at {0} and {1} are not strongly disjoint")]
    NotDisjoint(usize, usize),
    #[error("occurrences must be sorted by start")]
    Unsorted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PowerOccurrence {
    pub start: usize,
    pub period: usize,
    pub extent: usize,
}

impl PowerOccurrence {
    pub fn new(start: usize, period: usize, extent: usize) -> Result<Self, RepetitionError> {
        if period == 0 || extent < 2 * period {
            return Err(RepetitionError::NotSquare { start, period, extent });
        }
        Ok(PowerOccurrence { start, period, extent })
    }

    pub fn exponent(&self) -> Exponent {
        Ratio::new(self.extent as u64, self.period as u64)
    }

    /// Full revolutions of the period, `floor(extent / period)`.
    pub fn revolutions(&self) -> usize {
        self.extent / self.period
    }

    /// One past the last occupied position.
    pub fn end(&self) -> usize {
        self.start + self.extent
    }

    /// Contribution to the family gain, `1 + extent - 2 period`.
    pub fn gain(&self) -> usize {
        1 + self.extent - 2 * self.period
    }

    /// Checks the periodicity invariant against `w`.
    pub fn occurs_in(&self, w: &[u8]) -> bool {
        self.end() <= w.len()
            && (self.start..self.end() - self.period).all(|i| w[i] == w[i + self.period])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerFamily {
    occurrences: Vec<PowerOccurrence>,
}

impl PowerFamily {
    /// Builds a family after checking ordering and strong disjointness.
    /// The uniqueness condition is checked separately by
    /// [`satisfies_uniqueness`].
    pub fn new(occurrences: Vec<PowerOccurrence>) -> Result<Self, RepetitionError> {
        for pair in occurrences.windows(2) {
            if pair[1].start < pair[0].start {
                return Err(RepetitionError::Unsorted);
            }
            if pair[1].start <= pair[0].end() {
                return Err(RepetitionError::NotDisjoint(pair[0].start, pair[1].start));
            }
        }
        Ok(PowerFamily { occurrences })
    }

    pub fn empty() -> Self {
        PowerFamily::default()
    }

    pub fn occurrences(&self) -> &[PowerOccurrence] {
        &self.occurrences
    }

    pub fn len(&self) -> usize {
        self.occurrences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occurrences.is_empty()
    }
}

/// Every `(start, period, extent)` with `extent >= 2 period` whose factor
/// has the given period. All sub-extents of a run are listed.
pub fn find_power_candidates(w: &Word) -> Vec<PowerOccurrence> {
    power_candidates(w.symbols())
}

pub(crate) fn power_candidates(w: &[u8]) -> Vec<PowerOccurrence> {
    let n = w.len();
    let mut out = Vec::new();
    let mut matches = vec![0usize; n + 1];
    for period in 1..=n / 2 {
        // matches[i] = number of consecutive j >= i with w[j] == w[j + period]
        matches[n - period] = 0;
        for i in (0..n - period).rev() {
            matches[i] = if w[i] == w[i + period] { matches[i + 1] + 1 } else { 0 };
        }
        for start in 0..=n - 2 * period {
            let max_extent = period + matches[start];
            for extent in 2 * period..=max_extent {
                out.push(PowerOccurrence { start, period, extent });
            }
        }
    }
    out.sort();
    out
}

/// Largest `extent / period` over all factors; 0 for words of length at most
/// one and never below 1 otherwise.
pub fn critical_exponent(w: &Word) -> Exponent {
    critical_exponent_profile(w.symbols())
        .pop()
        .unwrap_or_else(|| Ratio::from_integer(0))
}

/// Critical exponent of every prefix: entry `i` is the value for the prefix
/// of length `i + 1`. Runs in `O(n^2)` time by tracking, for each period, the
/// length of the periodic run ending at the current position.
pub fn critical_exponent_profile(w: &[u8]) -> Vec<Exponent> {
    let n = w.len();
    let mut out = Vec::with_capacity(n);
    // run[p] = number of positions j <= i with w[j] == w[j - p], consecutive
    let mut run = vec![0usize; n + 1];
    let mut best = Ratio::from_integer(0u64);
    for i in 0..n {
        if i >= 1 && best < Ratio::from_integer(1) {
            best = Ratio::from_integer(1);
        }
        for p in (1..=i).rev() {
            if w[i] == w[i - p] {
                run[p] += 1;
                let candidate = Ratio::new((run[p] + p) as u64, p as u64);
                if candidate > best {
                    best = candidate;
                }
            } else {
                run[p] = 0;
            }
        }
        out.push(best);
    }
    out
}

/// Uniqueness condition on revolution counts; the empty family passes.
pub fn satisfies_uniqueness(f: &PowerFamily) -> bool {
    revolution_solutions(f.occurrences()) == 1
}

/// Number (saturating at 2) of nonnegative integer vectors `t` with
/// `sum t_i p_i = sum floor(alpha_i) p_i`.
fn revolution_solutions(occ: &[PowerOccurrence]) -> u8 {
    let target: usize = occ.iter().map(|o| o.revolutions() * o.period).sum();
    let mut ways = vec![0u8; target + 1];
    ways[0] = 1;
    for o in occ {
        for s in o.period..=target {
            ways[s] = (ways[s] + ways[s - o.period]).min(2);
        }
    }
    ways[target]
}

pub fn family_gain(f: &PowerFamily) -> usize {
    f.occurrences().iter().map(PowerOccurrence::gain).sum()
}

/// `max(1, ceil((n + 1 - gain) / 2))`.
pub fn bound_from_gain(n: usize, gain: usize) -> usize {
    let deficit = (n + 1).saturating_sub(gain);
    deficit.div_ceil(2).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBound {
    pub value: usize,
    pub gain: usize,
    pub family: PowerFamily,
}

/// A_N^lower by branch-and-bound over power candidates ordered by start.
///
/// The optimistic bound for the positions `[s, n)` is the best gain of any
/// strongly disjoint selection there with the uniqueness condition dropped,
/// precomputed right to left.
pub fn an_lower(w: &Word) -> LowerBound {
    let n = w.len();
    let candidates = power_candidates(w.symbols());
    let mut by_start: Vec<Vec<PowerOccurrence>> = vec![Vec::new(); n + 1];
    for c in candidates {
        by_start[c.start].push(c);
    }
    let mut relaxed = vec![0usize; n + 2];
    for s in (0..n).rev() {
        let mut best = relaxed[s + 1];
        for c in &by_start[s] {
            best = best.max(c.gain() + relaxed[(c.end() + 1).min(n + 1)]);
        }
        relaxed[s] = best;
    }

    let mut search = LowerSearch {
        by_start: &by_start,
        relaxed: &relaxed,
        n,
        chosen: Vec::new(),
        best_gain: 0,
        best: Vec::new(),
    };
    search.descend(0, 0);
    let family = PowerFamily::new(search.best).expect("search keeps families disjoint");
    LowerBound {
        value: bound_from_gain(n, search.best_gain),
        gain: search.best_gain,
        family,
    }
}

struct LowerSearch<'a> {
    by_start: &'a [Vec<PowerOccurrence>],
    relaxed: &'a [usize],
    n: usize,
    chosen: Vec<PowerOccurrence>,
    best_gain: usize,
    best: Vec<PowerOccurrence>,
}

impl LowerSearch<'_> {
    fn descend(&mut self, from: usize, gain: usize) {
        if gain > self.best_gain {
            self.best_gain = gain;
            self.best = self.chosen.clone();
        }
        if from >= self.n || gain + self.relaxed[from] <= self.best_gain {
            return;
        }
        for s in from..self.n {
            if gain + self.relaxed[s] <= self.best_gain {
                break;
            }
            for i in 0..self.by_start[s].len() {
                let c = self.by_start[s][i];
                let next = (c.end() + 1).min(self.n);
                if gain + c.gain() + self.relaxed[next] <= self.best_gain {
                    continue;
                }
                // equal periods always admit a trade of one revolution
                if self.chosen.iter().any(|o| o.period == c.period) {
                    continue;
                }
                self.chosen.push(c);
                if revolution_solutions(&self.chosen) == 1 {
                    self.descend(next, gain + c.gain());
                }
                self.chosen.pop();
            }
        }
    }
}

/// `(n + 1 - sqrt(2n)) / gamma`, the lower bound on A_N for a word of length
/// `n` whose critical exponent is at most `gamma`.
pub fn sept6_bound(n: usize, gamma: f64) -> f64 {
    let n = n as f64;
    (n + 1.0 - (2.0 * n).sqrt()) / gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerRateKind {
    Fibonacci,
    Tribonacci,
    KbonacciGeneric,
}

/// Asymptotic lower bounds on the A_N rate of the infinite words.
pub fn rate_lower(kind: LowerRateKind) -> f64 {
    match kind {
        LowerRateKind::Fibonacci => constant(ConstantName::FibLowerRate).value,
        LowerRateKind::Tribonacci => constant(ConstantName::TribLowerRate).value,
        LowerRateKind::KbonacciGeneric => 0.25,
    }
}

/// Critical exponent of the infinite Fibonacci word, `2 + phi`.
pub fn fibonacci_critical_exponent() -> f64 {
    2.0 + phi()
}

pub fn tribonacci_critical_exponent() -> f64 {
    constant(ConstantName::TribCriticalExponent).value
}
