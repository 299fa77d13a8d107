//! Per-request penalty functions and objective evaluation.
//!
//! A penalty function maps the time a request has waited to a cost. Four
//! closed-form families are supported: waiting time itself, delay factor
//! (waiting time over slack, clamped below at 1), and the k-th powers of
//! both. The k-th powers are the inner sums of L_k norms; the outer k-th
//! root is never applied here.
//!
//! Each family comes with two analysis companions used by the verifiers:
//! a growth lower bound `h(λ)` with `penalty(λ·t) ≥ h(λ)·penalty(t)`, and an
//! envelope `m(x)` upper-bounding every request's penalty at wait `x`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use thiserror::Error;

use crate::model::{Request, Schedule, Time, Trace};
use crate::rational::{pow_u32, rat, Rat};

/// Penalty family. `k` must be at least 1 for the power kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltySpec {
    Flow,
    DelayFactor,
    PowerFlow(u32),
    PowerDelayFactor(u32),
}

impl PenaltySpec {
    /// The exponent: 1 for the linear kinds, k for the power kinds.
    pub fn exponent(&self) -> u32 {
        match self {
            PenaltySpec::Flow | PenaltySpec::DelayFactor => 1,
            PenaltySpec::PowerFlow(k) | PenaltySpec::PowerDelayFactor(k) => *k,
        }
    }

    pub fn is_delay_factor_kind(&self) -> bool {
        matches!(
            self,
            PenaltySpec::DelayFactor | PenaltySpec::PowerDelayFactor(_)
        )
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltySpec::Flow => write!(f, "flow"),
            PenaltySpec::DelayFactor => write!(f, "df"),
            PenaltySpec::PowerFlow(k) => write!(f, "powflow:{k}"),
            PenaltySpec::PowerDelayFactor(k) => write!(f, "powdf:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown penalty spec {0:?} (expected flow|df|powflow:K|powdf:K with K >= 1)")]
pub struct ParsePenaltyError(String);

impl FromStr for PenaltySpec {
    type Err = ParsePenaltyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParsePenaltyError(s.to_string());
        match s {
            "flow" => return Ok(PenaltySpec::Flow),
            "df" => return Ok(PenaltySpec::DelayFactor),
            _ => {}
        }
        let (kind, k) = s.split_once(':').ok_or_else(bad)?;
        let k: u32 = k.parse().map_err(|_| bad())?;
        if k < 1 {
            return Err(bad());
        }
        match kind {
            "powflow" => Ok(PenaltySpec::PowerFlow(k)),
            "powdf" => Ok(PenaltySpec::PowerDelayFactor(k)),
            _ => Err(bad()),
        }
    }
}

/// How per-request penalties combine into an objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Sum,
    Max,
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregate::Sum => write!(f, "sum"),
            Aggregate::Max => write!(f, "max"),
        }
    }
}

/// Penalty for a request with the given slack after waiting `wait` time
/// units. `wait` may be any non-negative rational; the verifiers evaluate
/// penalties at scaled, non-integer waits.
pub fn penalty_for_slack(spec: &PenaltySpec, slack: Time, wait: &Rat) -> Rat {
    debug_assert!(*wait >= Rat::zero(), "wait must be >= 0");
    debug_assert!(slack >= 1, "slack must be >= 1");
    let df = || {
        let ratio = wait / rat(slack);
        if ratio < rat(1) {
            rat(1)
        } else {
            ratio
        }
    };
    match spec {
        PenaltySpec::Flow => wait.clone(),
        PenaltySpec::DelayFactor => df(),
        PenaltySpec::PowerFlow(k) => pow_u32(wait, *k),
        PenaltySpec::PowerDelayFactor(k) => pow_u32(&df(), *k),
    }
}

/// Penalty a request accumulates after waiting `wait` units.
pub fn penalty(spec: &PenaltySpec, request: &Request, wait: &Rat) -> Rat {
    penalty_for_slack(spec, request.slack(), wait)
}

/// Integer-wait convenience used by the scheduling loop.
pub fn penalty_at(spec: &PenaltySpec, request: &Request, wait: Time) -> Rat {
    penalty(spec, request, &rat(wait))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lambda {0} outside [0, 1]")]
pub struct LambdaOutOfRange(pub String);

/// Growth lower bound `h(λ)`: scaling a wait by `λ ∈ [0,1]` scales the
/// penalty by at least `h(λ)`. Identity for the linear kinds, `λ^k` for the
/// power kinds.
pub fn h_bound(spec: &PenaltySpec, lambda: &Rat) -> Result<Rat, LambdaOutOfRange> {
    if lambda < &rat(0) || lambda > &rat(1) {
        return Err(LambdaOutOfRange(lambda.to_string()));
    }
    Ok(pow_u32(lambda, spec.exponent()))
}

/// Envelope `m(x)`: an upper bound on any request's penalty at wait `x`,
/// maximized over all admissible slacks (slack >= 1). Used only on the bound
/// side of verifier inequalities.
pub fn m_envelope(spec: &PenaltySpec, x: &Rat) -> Rat {
    let clamped = if x < &rat(1) { rat(1) } else { x.clone() };
    match spec {
        PenaltySpec::Flow => x.clone(),
        PenaltySpec::DelayFactor => clamped,
        PenaltySpec::PowerFlow(k) => pow_u32(x, *k),
        PenaltySpec::PowerDelayFactor(k) => pow_u32(&clamped, *k),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectiveError {
    #[error("schedule has no finish time for request {0:?}")]
    IncompleteSchedule((u32, u32)),
}

/// Exact objective of a schedule: the sum or maximum of per-request
/// penalties at their realized waits.
pub fn objective(
    spec: &PenaltySpec,
    trace: &Trace,
    schedule: &Schedule,
    aggregate: Aggregate,
) -> Result<Rat, ObjectiveError> {
    let mut sum = Rat::zero();
    let mut max = Rat::zero();
    for r in trace.requests() {
        let f = schedule
            .finish_of(r.key())
            .ok_or(ObjectiveError::IncompleteSchedule(r.key()))?;
        let p = penalty_at(spec, r, f - r.arrival);
        if p > max {
            max = p.clone();
        }
        sum += p;
    }
    Ok(match aggregate {
        Aggregate::Sum => sum,
        Aggregate::Max => max,
    })
}

/// A counterexample to the growth property, if one were ever found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HViolation {
    pub lambda: Rat,
    pub wait: Time,
    pub slack: Time,
    pub scaled_penalty: Rat,
    pub bound: Rat,
}

/// Sample the growth property `penalty(λ·t) ≥ h(λ)·penalty(t)` with random
/// rational `λ ∈ (0,1]` (denominators up to 64), integer waits up to 10^4 and
/// slacks up to 64, all in exact arithmetic. Returns every violated sample.
pub fn verify_h_property(spec: &PenaltySpec, samples: usize, seed: u64) -> Vec<HViolation> {
    assert!(samples >= 1);
    let mut rng = crate::harness::rng::SplitMix64::new(seed);
    let mut out = Vec::new();
    for _ in 0..samples {
        let den = rng.below(64) as i64 + 1;
        let num = rng.below(den as u64) as i64 + 1;
        let lambda = crate::rational::ratio(num, den);
        let wait = rng.below(10_001) as Time;
        let slack = rng.below(64) as Time + 1;
        let scaled_wait = &lambda * rat(wait);
        let lhs = penalty_for_slack(spec, slack, &scaled_wait);
        let h = h_bound(spec, &lambda).expect("lambda in (0,1] by construction");
        let rhs = &h * penalty_for_slack(spec, slack, &rat(wait));
        if lhs < rhs {
            out.push(HViolation {
                lambda,
                wait,
                slack,
                scaled_penalty: lhs,
                bound: rhs,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn req(slack: Time) -> Request {
        Request {
            page: 1,
            arrival: 0,
            deadline: slack,
            index: 1,
        }
    }

    #[test]
    fn delay_factor_clamps_at_one() {
        assert_eq!(penalty_at(&PenaltySpec::DelayFactor, &req(4), 2), rat(1));
        assert_eq!(penalty_at(&PenaltySpec::DelayFactor, &req(4), 6), ratio(3, 2));
        assert_eq!(
            penalty_at(&PenaltySpec::PowerDelayFactor(2), &req(4), 6),
            ratio(9, 4)
        );
    }

    #[test]
    fn h_bound_values() {
        assert_eq!(h_bound(&PenaltySpec::Flow, &ratio(1, 2)).unwrap(), ratio(1, 2));
        assert_eq!(
            h_bound(&PenaltySpec::PowerDelayFactor(3), &ratio(1, 2)).unwrap(),
            ratio(1, 8)
        );
        assert_eq!(h_bound(&PenaltySpec::PowerFlow(7), &rat(1)).unwrap(), rat(1));
        assert_eq!(h_bound(&PenaltySpec::DelayFactor, &rat(1)).unwrap(), rat(1));
        assert!(h_bound(&PenaltySpec::Flow, &rat(2)).is_err());
    }

    #[test]
    fn envelope_values() {
        assert_eq!(m_envelope(&PenaltySpec::Flow, &rat(10)), rat(10));
        assert_eq!(m_envelope(&PenaltySpec::DelayFactor, &rat(10)), rat(10));
        assert_eq!(m_envelope(&PenaltySpec::PowerDelayFactor(2), &rat(10)), rat(100));
        // Below wait 1 the delay-factor envelope stays at the clamp value.
        assert_eq!(m_envelope(&PenaltySpec::DelayFactor, &ratio(1, 2)), rat(1));
    }

    #[test]
    fn h_property_clamped_example() {
        // slack 4, wait 1, lambda 1/2: max(1, 1/8) = 1 >= (1/2) * 1.
        let lhs = penalty_for_slack(&PenaltySpec::DelayFactor, 4, &ratio(1, 2));
        let rhs = h_bound(&PenaltySpec::DelayFactor, &ratio(1, 2)).unwrap()
            * penalty_for_slack(&PenaltySpec::DelayFactor, 4, &rat(1));
        assert_eq!(lhs, rat(1));
        assert!(lhs >= rhs);
    }

    #[test]
    fn h_property_holds_on_samples() {
        for spec in [
            PenaltySpec::Flow,
            PenaltySpec::DelayFactor,
            PenaltySpec::PowerFlow(2),
            PenaltySpec::PowerDelayFactor(2),
        ] {
            assert!(verify_h_property(&spec, 2000, 0xC0FFEE).is_empty(), "{spec}");
        }
    }

    #[test]
    fn parse_round_trips() {
        for s in ["flow", "df", "powflow:2", "powdf:3"] {
            let spec: PenaltySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("powdf:0".parse::<PenaltySpec>().is_err());
        assert!("nope".parse::<PenaltySpec>().is_err());
    }
}
