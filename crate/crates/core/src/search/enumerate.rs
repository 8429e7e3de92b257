use crate::error::{Error, Result};
use crate::prompt::PromptPlan;

/// Largest training set enumerated without an explicit override.
pub const DEFAULT_ENUMERATION_CAP: usize = 6;

/// Number of nonempty ordered selections of distinct items from `n`:
/// `Σ_{k=1..n} C(n, k) · k!`.
pub fn candidate_count(n: usize) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "candidate count needs N >= 1".into(),
        ));
    }
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for k in 1..=n {
        // n! / (n-k)!
        term = term
            .checked_mul((n - k + 1) as u128)
            .ok_or(Error::CountOverflow(n))?;
        total = total.checked_add(term).ok_or(Error::CountOverflow(n))?;
    }
    Ok(total)
}

/// Every nonempty ordered selection of distinct indices below `n`, shortest
/// first and lexicographic within a length.
#[derive(Debug, Clone)]
pub struct OrderedSelections {
    n: usize,
    current: Vec<usize>,
    used: Vec<bool>,
    started: bool,
}

impl OrderedSelections {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            current: Vec::new(),
            used: vec![false; n],
            started: false,
        }
    }

    fn reset_to_length(&mut self, k: usize) {
        self.current = (0..k).collect();
        self.used
            .iter_mut()
            .enumerate()
            .for_each(|(i, u)| *u = i < k);
    }

    fn smallest_unused_above(&self, floor: Option<usize>) -> Option<usize> {
        let start = floor.map_or(0, |f| f + 1);
        (start..self.n).find(|&v| !self.used[v])
    }

    /// Advances `current` to the next selection of the same length.
    fn advance(&mut self) -> bool {
        let k = self.current.len();
        for pos in (0..k).rev() {
            let old = self.current[pos];
            self.used[old] = false;
            if let Some(v) = self.smallest_unused_above(Some(old)) {
                self.current[pos] = v;
                self.used[v] = true;
                for fill in pos + 1..k {
                    let v = self
                        .smallest_unused_above(None)
                        .expect("k <= n leaves enough unused values");
                    self.current[fill] = v;
                    self.used[v] = true;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for OrderedSelections {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if !self.started {
            self.started = true;
            if self.n == 0 {
                return None;
            }
            self.reset_to_length(1);
            return Some(self.current.clone());
        }
        if self.current.is_empty() {
            return None;
        }
        if !self.advance() {
            let k = self.current.len() + 1;
            if k > self.n {
                self.current.clear();
                return None;
            }
            self.reset_to_length(k);
        }
        Some(self.current.clone())
    }
}

/// All candidate plans over a training set of `n`, refusing `n > cap`.
pub fn enumerate_all(n: usize, cap: usize) -> Result<impl Iterator<Item = PromptPlan>> {
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    Ok(OrderedSelections::new(n).map(|v| PromptPlan::new(v).expect("selections are distinct")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use std::collections::HashSet;

    #[test]
    fn counts() {
        assert_eq!(candidate_count(1).unwrap(), 1);
        assert_eq!(candidate_count(3).unwrap(), 15);
        assert_eq!(candidate_count(4).unwrap(), 64);
        assert_eq!(candidate_count(6).unwrap(), 1956);
        assert_eq!(candidate_count(8).unwrap(), 109_600);
        assert!(candidate_count(0).is_err());
        assert!(matches!(candidate_count(40), Err(Error::CountOverflow(40))));
    }

    #[test]
    fn count_matches_binomial_form() {
        fn binom(n: u128, k: u128) -> u128 {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        fn fact(k: u128) -> u128 {
            (1..=k).product()
        }
        for n in 1..=12u128 {
            let expected: u128 = (1..=n).map(|k| binom(n, k) * fact(k)).sum();
            assert_eq!(candidate_count(n as usize).unwrap(), expected);
        }
    }

    #[test]
    fn lists_two() {
        let all: Vec<Vec<usize>> = OrderedSelections::new(2).collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn matches_itertools_order() {
        for n in 1..=6 {
            let ours: Vec<Vec<usize>> = OrderedSelections::new(n).collect();
            let reference: Vec<Vec<usize>> = (1..=n).flat_map(|k| (0..n).permutations(k)).collect();
            assert_eq!(ours, reference, "n = {n}");
        }
    }

    #[test]
    fn cardinality_and_distinctness() {
        for n in 1..=6 {
            let plans: Vec<PromptPlan> =
                enumerate_all(n, DEFAULT_ENUMERATION_CAP).unwrap().collect();
            let distinct: HashSet<_> = plans.iter().cloned().collect();
            assert_eq!(plans.len() as u128, candidate_count(n).unwrap());
            assert_eq!(distinct.len(), plans.len());
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            enumerate_all(8, DEFAULT_ENUMERATION_CAP).err(),
            Some(Error::EnumerationCap { n: 8, cap: 6 })
        ));
        assert_eq!(enumerate_all(7, 7).unwrap().count(), 13_699);
        assert_eq!(OrderedSelections::new(0).count(), 0);
    }
}
