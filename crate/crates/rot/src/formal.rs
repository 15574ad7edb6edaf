//! Symbolic state-transition model of traversal reasoning.
//!
//! A free-form reasoning chain over an M-row table consumes each row
//! exactly once, in some permutation order `sigma`. In-order traversal
//! reasoning walks rows 1..=M repeatedly and may advance the chain's
//! state only at the row the chain needs next. This module makes both
//! processes executable over symbolic states (the exact consumption
//! sequence, a free-monoid word, so distinct orders give distinct
//! states) and checks exhaustively that repeated in-order traversals
//! reproduce every chain: same final state, within at most M passes.
//!
//! The number of passes needed is exactly `1 +` the number of descents
//! of `sigma` (positions where the next wanted row is behind the current
//! one), which [`verify_subset`] uses as an independent oracle.

use serde::Serialize;

use crate::error::{Error, Result};

/// Cumulative reasoning state: which rows have been consumed, in order.
/// The empty word is the initial state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolicState {
    pub consumed: Vec<usize>,
}

impl SymbolicState {
    pub fn initial() -> Self {
        SymbolicState { consumed: Vec::new() }
    }

    fn consume(mut self, row: usize) -> Self {
        debug_assert!(!self.consumed.contains(&row), "rows are consumed once");
        self.consumed.push(row);
        self
    }
}

/// A free-form chain's row-consumption order: a permutation of 1..=M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LongCotSpec {
    sigma: Vec<usize>,
}

impl LongCotSpec {
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let m = sigma.len();
        let mut seen = vec![false; m + 1];
        for &s in &sigma {
            if s == 0 || s > m || seen[s] {
                return Err(Error::Config(format!(
                    "sigma {sigma:?} is not a permutation of 1..={m}"
                )));
            }
            seen[s] = true;
        }
        Ok(LongCotSpec { sigma })
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn rows(&self) -> usize {
        self.sigma.len()
    }
}

/// Evaluate the chain directly: starting from the empty state, consume
/// rows in sigma order (the first row the chain picks is consumed
/// first), recursing on the remainder of the table.
pub fn eval_long_cot(spec: &LongCotSpec) -> SymbolicState {
    fn go(order: &[usize], state: SymbolicState) -> SymbolicState {
        match order.split_first() {
            None => state,
            Some((&next, rest)) => go(rest, state.consume(next)),
        }
    }
    go(&spec.sigma, SymbolicState::initial())
}

/// Simulate the chain with repeated in-order traversals.
///
/// Each pass walks rows j = 1..=M; holding the state that has consumed
/// sigma's first i-1 rows, the state advances exactly at j = sigma_i and
/// idles elsewhere. Passes repeat until the final state is reached.
/// Returns the final state and the number of full passes taken.
pub fn eval_rot_simulation(spec: &LongCotSpec) -> (SymbolicState, usize) {
    let m = spec.rows();
    let mut state = SymbolicState::initial();
    let mut next = 0; // position in sigma of the row the chain wants next
    let mut passes = 0;
    while next < m {
        passes += 1;
        for j in 1..=m {
            if next < m && j == spec.sigma[next] {
                state = state.consume(j);
                next += 1;
            }
        }
    }
    (state, passes)
}

/// Independent pass-count oracle: one pass plus one per descent
/// (adjacent pair with the later row wanted earlier in the table).
pub fn descent_count(sigma: &[usize]) -> usize {
    if sigma.is_empty() {
        return 0;
    }
    1 + sigma.windows(2).filter(|w| w[1] < w[0]).count()
}

/// Outcome of the exhaustive equivalence check.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetReport {
    /// Permutations examined (all sigma for every M up to the bound).
    pub checked: usize,
    /// Sigmas where simulation and direct evaluation disagreed.
    pub failures: Vec<Vec<usize>>,
}

impl SubsetReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl std::fmt::Display for SubsetReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} permutations checked, {} failures", self.checked, self.failures.len())?;
        for sigma in &self.failures {
            write!(f, "\n  counterexample: {sigma:?}")?;
        }
        Ok(())
    }
}

/// For every table height up to `m_max` and every consumption order,
/// check that the traversal simulation reaches the chain's exact final
/// state, that it needs at most M passes, and that the pass count
/// matches the descent-count oracle.
pub fn verify_subset(m_max: usize) -> SubsetReport {
    let mut checked = 0;
    let mut failures = Vec::new();
    for m in 1..=m_max {
        for_each_permutation(m, |sigma| {
            checked += 1;
            let spec = LongCotSpec::new(sigma.to_vec()).expect("generated permutations are valid");
            let direct = eval_long_cot(&spec);
            let (simulated, passes) = eval_rot_simulation(&spec);
            let ok =
                simulated == direct && passes <= m && passes == descent_count(spec.sigma());
            if !ok {
                failures.push(sigma.to_vec());
            }
        });
    }
    SubsetReport { checked, failures }
}

/// Heap's algorithm over 1..=m, calling `visit` with each permutation.
fn for_each_permutation(m: usize, mut visit: impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (1..=m).collect();
    let mut stack = vec![0usize; m];
    visit(&items);
    let mut i = 1;
    while i < m {
        if stack[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(stack[i], i);
            }
            visit(&items);
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sigma: &[usize]) -> LongCotSpec {
        LongCotSpec::new(sigma.to_vec()).unwrap()
    }

    #[test]
    fn long_cot_consumes_in_sigma_order() {
        assert_eq!(eval_long_cot(&spec(&[1, 2, 3])).consumed, vec![1, 2, 3]);
        assert_eq!(eval_long_cot(&spec(&[3, 1, 2])).consumed, vec![3, 1, 2]);
        assert_eq!(eval_long_cot(&spec(&[1])).consumed, vec![1]);
    }

    #[test]
    fn in_order_sigma_needs_one_pass() {
        let (state, passes) = eval_rot_simulation(&spec(&[1, 2, 3]));
        assert_eq!(state.consumed, vec![1, 2, 3]);
        assert_eq!(passes, 1);
    }

    #[test]
    fn reversed_sigma_needs_one_pass_per_row() {
        let (state, passes) = eval_rot_simulation(&spec(&[3, 2, 1]));
        assert_eq!(state.consumed, vec![3, 2, 1]);
        assert_eq!(passes, 3);
    }

    #[test]
    fn mixed_sigma_pass_count() {
        let (state, passes) = eval_rot_simulation(&spec(&[2, 1, 3]));
        assert_eq!(state.consumed, vec![2, 1, 3]);
        assert_eq!(passes, 2);
    }

    #[test]
    fn descent_count_examples() {
        assert_eq!(descent_count(&[1, 2, 3]), 1);
        assert_eq!(descent_count(&[3, 2, 1]), 3);
        assert_eq!(descent_count(&[2, 1, 3]), 2);
        assert_eq!(descent_count(&[]), 0);
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(LongCotSpec::new(vec![1, 1]).is_err());
        assert!(LongCotSpec::new(vec![2, 3]).is_err());
        assert!(LongCotSpec::new(vec![0]).is_err());
    }

    #[test]
    fn verify_counts_permutations() {
        assert_eq!(verify_subset(3).checked, 9); // 1! + 2! + 3!
        assert_eq!(verify_subset(5).checked, 153);
        assert_eq!(verify_subset(6).checked, 873);
    }

    #[test]
    fn verify_finds_no_failures_up_to_seven() {
        let report = verify_subset(7);
        assert!(report.is_ok(), "unexpected counterexamples: {report}");
        assert_eq!(report.checked, 5913);
    }

    #[test]
    fn states_discriminate_distinct_sigmas() {
        let a = eval_long_cot(&spec(&[1, 3, 2]));
        let b = eval_long_cot(&spec(&[3, 1, 2]));
        assert_ne!(a, b);
    }

    #[test]
    fn heap_enumeration_is_exhaustive_and_unique() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(4, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 24);
    }
}
