//! Closed integer intervals and the shrunken-union measure check.
//!
//! The measure of a set of closed intervals is the number of distinct
//! integers in their union. The check below validates, on concrete families,
//! that shrinking every interval to a `λ` fraction (anchored at its right
//! endpoint) keeps at least a `λ` fraction of the union's measure.

use thiserror::Error;

use crate::model::Time;
use crate::rational::{rat, Rat};

/// A list of closed integer intervals `[s, t]`, `s <= t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet {
    intervals: Vec<(Time, Time)>,
}

impl IntervalSet {
    pub fn new(intervals: Vec<(Time, Time)>) -> Self {
        for &(s, t) in &intervals {
            assert!(s <= t, "interval [{s}, {t}] is empty");
        }
        IntervalSet { intervals }
    }

    pub fn intervals(&self) -> &[(Time, Time)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of distinct integers in the union.
    pub fn measure(&self) -> i64 {
        let mut sorted = self.intervals.clone();
        sorted.sort();
        let mut total = 0;
        let mut current: Option<(Time, Time)> = None;
        for (s, t) in sorted {
            match current {
                Some((cs, ct)) if s <= ct + 1 => current = Some((cs, ct.max(t))),
                Some((cs, ct)) => {
                    total += ct - cs + 1;
                    let _ = cs;
                    current = Some((s, t));
                }
                None => current = Some((s, t)),
            }
        }
        if let Some((cs, ct)) = current {
            total += ct - cs + 1;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalLemmaError {
    #[error("interval families have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("pair {index}: shrunken start {shrunk_start} outside [{start}, {end}]")]
    StartOutOfRange {
        index: usize,
        start: Time,
        end: Time,
        shrunk_start: Time,
    },
    #[error("pair {index}: shrunken interval shorter than lambda fraction")]
    FractionTooSmall { index: usize },
}

/// Outcome of one interval-union measure check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalCheck {
    pub full_measure: i64,
    pub shrunk_measure: i64,
    pub holds: bool,
}

/// Check `|X'| >= λ·|X|` for an interval family `X` and its shrunken family
/// `X'`, where each `[s'_i, t_i]` keeps the right endpoint, starts inside
/// `[s_i, t_i]`, and individually keeps at least a `λ` fraction of its
/// length. Violated preconditions make the check inapplicable, not failed.
pub fn check_interval_lemma(
    full: &IntervalSet,
    shrunk: &IntervalSet,
    lambda: &Rat,
) -> Result<IntervalCheck, IntervalLemmaError> {
    if full.len() != shrunk.len() {
        return Err(IntervalLemmaError::LengthMismatch(full.len(), shrunk.len()));
    }
    for (i, (&(s, t), &(s2, t2))) in full
        .intervals()
        .iter()
        .zip(shrunk.intervals().iter())
        .enumerate()
    {
        if t2 != t || s2 < s || s2 > t {
            return Err(IntervalLemmaError::StartOutOfRange {
                index: i,
                start: s,
                end: t,
                shrunk_start: s2,
            });
        }
        // |[s', t]| >= lambda * |[s, t]|, exact arithmetic.
        if rat(t - s2 + 1) < lambda * rat(t - s + 1) {
            return Err(IntervalLemmaError::FractionTooSmall { index: i });
        }
    }
    let full_measure = full.measure();
    let shrunk_measure = shrunk.measure();
    let holds = rat(shrunk_measure) >= lambda * rat(full_measure);
    Ok(IntervalCheck {
        full_measure,
        shrunk_measure,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn measure_counts_distinct_integers() {
        assert_eq!(IntervalSet::new(vec![(0, 9)]).measure(), 10);
        assert_eq!(IntervalSet::new(vec![(0, 4), (3, 9)]).measure(), 10);
        assert_eq!(IntervalSet::new(vec![(0, 1), (5, 6)]).measure(), 4);
        // Adjacent intervals merge: [0,2] and [3,4] cover 5 integers.
        assert_eq!(IntervalSet::new(vec![(0, 2), (3, 4)]).measure(), 5);
        assert_eq!(IntervalSet::new(vec![]).measure(), 0);
    }

    #[test]
    fn single_interval_at_exactly_half() {
        let x = IntervalSet::new(vec![(0, 9)]);
        let x2 = IntervalSet::new(vec![(5, 9)]);
        let check = check_interval_lemma(&x, &x2, &ratio(1, 2)).unwrap();
        assert_eq!(check.full_measure, 10);
        assert_eq!(check.shrunk_measure, 5);
        assert!(check.holds);
    }

    #[test]
    fn nested_overlap_case() {
        let x = IntervalSet::new(vec![(0, 9), (6, 9)]);
        let x2 = IntervalSet::new(vec![(5, 9), (8, 9)]);
        let check = check_interval_lemma(&x, &x2, &ratio(1, 2)).unwrap();
        assert_eq!(check.full_measure, 10);
        assert_eq!(check.shrunk_measure, 5);
        assert!(check.holds);
    }

    #[test]
    fn precondition_violations_are_rejected() {
        let x = IntervalSet::new(vec![(0, 9)]);
        let short = IntervalSet::new(vec![(6, 9)]);
        assert_eq!(
            check_interval_lemma(&x, &short, &ratio(1, 2)),
            Err(IntervalLemmaError::FractionTooSmall { index: 0 })
        );
        let wrong_end = IntervalSet::new(vec![(5, 8)]);
        assert!(matches!(
            check_interval_lemma(&x, &wrong_end, &ratio(1, 2)),
            Err(IntervalLemmaError::StartOutOfRange { .. })
        ));
    }
}
