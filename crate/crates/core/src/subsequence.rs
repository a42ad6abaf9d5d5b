//! Extraction of maximal uniformly spaced subsequences from an integer time grid.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::timeseries::TimeSeries;

#[derive(Debug, Error, PartialEq)]
pub enum SubsequenceError {
    #[error("regularity {r} must lie in 1..={span}")]
    InvalidRegularity { r: i64, span: i64 },
    #[error("minimum length {m} must lie in 1..={n}")]
    InvalidMinLength { m: usize, n: usize },
    #[error("ticks must be strictly increasing")]
    UnsortedTicks,
    #[error("subsequence set was not extracted from this series")]
    MismatchedParent,
}

/// One arithmetic progression of ticks with common difference `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsequence {
    /// Positions into the parent series.
    #[serde(skip)]
    pub indices: Vec<usize>,
    pub ticks: Vec<i64>,
    #[serde(skip)]
    pub r: i64,
}

impl Subsequence {
    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }
}

/// Disjoint subsequences in extraction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsequenceSet {
    pub subsequences: Vec<Subsequence>,
    parent_ticks: Vec<i64>,
}

#[derive(Serialize)]
struct SetDoc<'a> {
    r: Option<i64>,
    subsequences: &'a [Subsequence],
}

impl SubsequenceSet {
    pub fn len(&self) -> usize {
        self.subsequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsequences.is_empty()
    }

    pub fn parent_ticks(&self) -> &[i64] {
        &self.parent_ticks
    }

    /// Shared regularity, `None` for an empty or mixed set.
    pub fn regularity(&self) -> Option<i64> {
        let r = self.subsequences.first()?.r;
        self.subsequences.iter().all(|s| s.r == r).then_some(r)
    }

    /// Ticks not covered by any subsequence.
    pub fn residual_ticks(&self) -> Vec<i64> {
        let used: BTreeSet<i64> = self.subsequences.iter().flat_map(|s| s.ticks.iter().copied()).collect();
        self.parent_ticks.iter().copied().filter(|t| !used.contains(t)).collect()
    }

    /// True when the set is a single subsequence covering every parent tick.
    pub fn covers_parent(&self) -> bool {
        self.subsequences.len() == 1 && self.subsequences[0].ticks == self.parent_ticks
    }

    /// Appends subsequences extracted from the residual pool of the same parent
    /// (mixed-regularity mode).
    pub fn extend_with(&mut self, other: SubsequenceSet) -> Result<(), SubsequenceError> {
        if other.parent_ticks != self.parent_ticks {
            return Err(SubsequenceError::MismatchedParent);
        }
        self.subsequences.extend(other.subsequences);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SetDoc {
            r: self.regularity(),
            subsequences: &self.subsequences,
        })
        .expect("subsequence sets serialize")
    }
}

/// Greedily peels off the longest arithmetic progressions of difference `r`.
///
/// Each round picks the longest chain `t, t+r, t+2r, …` among the ticks still
/// in the pool (earliest start wins ties); chains shorter than `m` end the
/// extraction. Extracted ticks leave the pool before the next round.
pub fn extract_subsequences(ticks: &[i64], r: i64, m: usize) -> Result<SubsequenceSet, SubsequenceError> {
    extract_from_pool(ticks, ticks, r, m)
}

/// Like [`extract_subsequences`] but draws only from `pool`, a subset of the
/// parent's ticks (e.g. [`SubsequenceSet::residual_ticks`]).
pub fn extract_from_pool(
    parent: &[i64],
    pool: &[i64],
    r: i64,
    m: usize,
) -> Result<SubsequenceSet, SubsequenceError> {
    if parent.windows(2).any(|w| w[1] <= w[0]) || pool.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SubsequenceError::UnsortedTicks);
    }
    let span = match (parent.first(), parent.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0,
    };
    if r < 1 || r > span.max(1) {
        return Err(SubsequenceError::InvalidRegularity { r, span });
    }
    if m < 1 || m > parent.len() {
        return Err(SubsequenceError::InvalidMinLength { m, n: parent.len() });
    }
    let position: HashMap<i64, usize> = parent.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut remaining: BTreeSet<i64> = pool.iter().copied().filter(|t| position.contains_key(t)).collect();
    let mut subsequences = Vec::new();

    while remaining.len() >= m {
        // chain length from each tick, computed back to front
        let mut chain: HashMap<i64, usize> = HashMap::with_capacity(remaining.len());
        for &t in remaining.iter().rev() {
            let next = chain.get(&(t + r)).copied().unwrap_or(0);
            chain.insert(t, next + 1);
        }
        let mut best: Option<(i64, usize)> = None;
        for &t in remaining.iter() {
            let len = chain[&t];
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((t, len));
            }
        }
        let Some((start, len)) = best else { break };
        if len < m {
            break;
        }
        let ticks: Vec<i64> = (0..len as i64).map(|k| start + k * r).collect();
        debug_assert!(
            !subsequences.iter().any(|s: &Subsequence| s.ticks == ticks),
            "extracted ticks are removed, so a repeat is impossible"
        );
        for t in &ticks {
            remaining.remove(t);
        }
        subsequences.push(Subsequence {
            indices: ticks.iter().map(|t| position[t]).collect(),
            ticks,
            r,
        });
    }
    Ok(SubsequenceSet {
        subsequences,
        parent_ticks: parent.to_vec(),
    })
}

/// Values of the parent series aligned with each subsequence.
pub fn materialize<T: Scalar>(
    ts: &TimeSeries<T>,
    set: &SubsequenceSet,
) -> Result<Vec<(Vec<i64>, Vec<T>)>, SubsequenceError> {
    check_parent(ts, set)?;
    Ok(set
        .subsequences
        .iter()
        .map(|s| (s.ticks.clone(), s.indices.iter().map(|&i| ts.values()[i]).collect()))
        .collect())
}

pub(crate) fn check_parent<T: Scalar>(ts: &TimeSeries<T>, set: &SubsequenceSet) -> Result<(), SubsequenceError> {
    if ts.len() != set.parent_ticks.len() {
        return Err(SubsequenceError::MismatchedParent);
    }
    let same = ts
        .times()
        .iter()
        .zip(&set.parent_ticks)
        .all(|(t, &k)| *t == T::of(k as f64));
    if same {
        Ok(())
    } else {
        Err(SubsequenceError::MismatchedParent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ticks_of(set: &SubsequenceSet) -> Vec<Vec<i64>> {
        set.subsequences.iter().map(|s| s.ticks.clone()).collect()
    }

    #[test]
    fn skips_missing_ticks() {
        let set = extract_subsequences(&[1, 2, 3, 4, 6, 8], 2, 3).unwrap();
        assert_eq!(ticks_of(&set), vec![vec![2, 4, 6, 8]]);
        assert_eq!(set.subsequences[0].indices, vec![1, 3, 4, 5]);
    }

    #[test]
    fn uniform_input_is_returned_whole() {
        let set = extract_subsequences(&[0, 1, 2, 3, 4], 1, 2).unwrap();
        assert_eq!(ticks_of(&set), vec![vec![0, 1, 2, 3, 4]]);
        assert!(set.covers_parent());
        // m == n still returns the whole progression
        let set = extract_subsequences(&[0, 3, 6], 3, 3).unwrap();
        assert!(set.covers_parent());
    }

    #[test]
    fn two_rounds_on_the_residual_pool() {
        let set = extract_subsequences(&[0, 5, 10, 12, 17, 22], 5, 3).unwrap();
        assert_eq!(ticks_of(&set), vec![vec![0, 5, 10], vec![12, 17, 22]]);
    }

    #[test]
    fn ties_go_to_the_earliest_start() {
        let set = extract_subsequences(&[0, 1, 2, 10, 11, 12], 1, 2).unwrap();
        assert_eq!(ticks_of(&set), vec![vec![0, 1, 2], vec![10, 11, 12]]);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            extract_subsequences(&[0, 1, 2], 3, 1),
            Err(SubsequenceError::InvalidRegularity { .. })
        ));
        assert!(matches!(
            extract_subsequences(&[0, 1, 2], 0, 1),
            Err(SubsequenceError::InvalidRegularity { .. })
        ));
        assert!(matches!(
            extract_subsequences(&[0, 1, 2], 1, 4),
            Err(SubsequenceError::InvalidMinLength { .. })
        ));
    }

    #[test]
    fn materialize_looks_up_values() {
        let ts = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![9.0, 8.0, 7.0]).unwrap();
        let set = extract_subsequences(&[0, 1, 2], 2, 2).unwrap();
        let out = materialize(&ts, &set).unwrap();
        assert_eq!(out, vec![(vec![0, 2], vec![9.0, 7.0])]);

        let empty = extract_subsequences(&[0, 1, 2], 2, 3).unwrap();
        assert!(materialize(&ts, &empty).unwrap().is_empty());

        let other = TimeSeries::new(vec![0.0, 1.0, 3.0], vec![1.0; 3]).unwrap();
        assert_eq!(materialize(&other, &set), Err(SubsequenceError::MismatchedParent));
    }

    #[test]
    fn mixed_regularity_from_residual() {
        let parent = [0, 1, 2, 3, 5, 7, 9];
        let mut set = extract_subsequences(&parent, 1, 3).unwrap();
        assert_eq!(ticks_of(&set), vec![vec![0, 1, 2, 3]]);
        let rest = extract_from_pool(&parent, &set.residual_ticks(), 2, 3).unwrap();
        set.extend_with(rest).unwrap();
        assert_eq!(ticks_of(&set), vec![vec![0, 1, 2, 3], vec![5, 7, 9]]);
        assert_eq!(set.regularity(), None);
    }

    #[test]
    fn json_layout() {
        let set = extract_subsequences(&[0, 2, 4, 5], 2, 2).unwrap();
        assert_eq!(set.to_json(), r#"{"r":2,"subsequences":[{"ticks":[0,2,4]}]}"#);
    }
}
