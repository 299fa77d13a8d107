//! Exact 1-speed offline optimum for small instances.
//!
//! The adversary in every comparison is a fixed optimal speed-1 offline
//! schedule. This module instantiates it at desk scale by exhaustive
//! depth-first branch and bound over per-slot choices (idle or one page with
//! outstanding requests), with an admissible lower bound. A deliberately
//! unpruned enumeration, `exhaustive_reference`, exists solely to cross-check
//! the solver.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::model::{PageId, Schedule, Time, Trace};
use crate::penalty::{objective, penalty_at, Aggregate, PenaltySpec};
use crate::rational::Rat;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Guard for the unpruned reference enumeration.
pub const EXHAUSTIVE_STATE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptError {
    #[error("node budget of {budget} exhausted before any complete schedule was found")]
    BudgetExhausted { budget: u64 },
    #[error("exhaustive enumeration would visit ~{states} sequences (limit {limit})")]
    TooLarge { states: u64, limit: u64 },
}

/// Solver output. `value` equals the objective of `schedule`; when
/// `proven_optimal` is false the node budget was hit and the value is only an
/// upper bound on the optimum.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub schedule: Schedule,
    pub value: Rat,
    pub nodes_explored: u64,
    pub proven_optimal: bool,
}

/// A time by which some optimal speed-1 schedule finishes everything:
/// after the last arrival, broadcasting each requested page once clears the
/// queue, and delaying past that cannot reduce a non-decreasing penalty.
pub fn horizon_bound(trace: &Trace) -> Time {
    trace.last_arrival() + trace.distinct_pages() as Time + 1
}

struct Search<'a> {
    trace: &'a Trace,
    spec: &'a PenaltySpec,
    aggregate: Aggregate,
    horizon: Time,
    budget: u64,
    /// Request indices grouped by arrival time.
    arrivals_at: BTreeMap<Time, Vec<usize>>,
    /// Exact penalty of each future request at the minimum possible wait of 1,
    /// summed over arrivals at or after each time (Sum aggregate bound).
    outstanding: BTreeMap<PageId, Vec<usize>>,
    arrived: usize,
    total: usize,
    accrued_sum: Rat,
    accrued_max: Rat,
    choices: Vec<PageId>,
    nodes: u64,
    truncated: bool,
    incumbent: Option<(Rat, Vec<PageId>)>,
}

impl<'a> Search<'a> {
    fn lower_bound(&self, t: Time) -> Rat {
        let pending = self
            .outstanding
            .values()
            .flatten()
            .map(|&i| {
                let r = &self.trace.requests()[i];
                penalty_at(self.spec, r, t - r.arrival)
            });
        match self.aggregate {
            Aggregate::Sum => {
                let mut b = self.accrued_sum.clone();
                for p in pending {
                    b += p;
                }
                // Every request yet to arrive waits at least one slot.
                for (_, reqs) in self.arrivals_at.range(t..) {
                    for &i in reqs {
                        b += penalty_at(self.spec, &self.trace.requests()[i], 1);
                    }
                }
                b
            }
            Aggregate::Max => {
                let mut b = self.accrued_max.clone();
                for p in pending {
                    if p > b {
                        b = p;
                    }
                }
                for (_, reqs) in self.arrivals_at.range(t..) {
                    for &i in reqs {
                        let p = penalty_at(self.spec, &self.trace.requests()[i], 1);
                        if p > b {
                            b = p;
                        }
                    }
                }
                b
            }
        }
    }

    fn accrued(&self) -> Rat {
        match self.aggregate {
            Aggregate::Sum => self.accrued_sum.clone(),
            Aggregate::Max => self.accrued_max.clone(),
        }
    }

    fn record_if_better(&mut self) {
        let value = self.accrued();
        let better = match &self.incumbent {
            None => true,
            Some((best, _)) => value < *best,
        };
        if better {
            self.incumbent = Some((value, self.choices.clone()));
        }
    }

    fn inject_arrivals(&mut self, t: Time) -> usize {
        let mut injected = 0;
        if let Some(reqs) = self.arrivals_at.get(&t) {
            for &i in reqs {
                let page = self.trace.requests()[i].page;
                self.outstanding.entry(page).or_default().push(i);
                injected += 1;
            }
        }
        self.arrived += injected;
        injected
    }

    fn eject_arrivals(&mut self, t: Time, injected: usize) {
        if injected == 0 {
            return;
        }
        if let Some(reqs) = self.arrivals_at.get(&t) {
            for &i in reqs.iter().rev() {
                let page = self.trace.requests()[i].page;
                let bucket = self.outstanding.get_mut(&page).unwrap();
                let popped = bucket.pop();
                debug_assert_eq!(popped, Some(i));
                if bucket.is_empty() {
                    self.outstanding.remove(&page);
                }
            }
        }
        self.arrived -= injected;
    }

    fn dfs(&mut self, t: Time) {
        if self.truncated {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.truncated = true;
            return;
        }
        if self.outstanding.is_empty() && self.arrived == self.total {
            self.record_if_better();
            return;
        }
        if t > self.horizon {
            return;
        }
        if let Some((best, _)) = &self.incumbent {
            if self.lower_bound(t) >= *best {
                return;
            }
        }
        // Idle first: it sorts lexicographically before every page id, which
        // makes the first optimum found the lexicographically least one.
        let pages: Vec<PageId> = self.outstanding.keys().copied().collect();
        for choice in std::iter::once(0).chain(pages.into_iter()) {
            let mut finished: Vec<usize> = Vec::new();
            let saved_max = self.accrued_max.clone();
            let mut added_sum = Rat::zero();
            if choice != 0 {
                finished = self.outstanding.remove(&choice).unwrap();
                for &i in &finished {
                    let r = &self.trace.requests()[i];
                    let p = penalty_at(self.spec, r, t - r.arrival);
                    if p > self.accrued_max {
                        self.accrued_max = p.clone();
                    }
                    added_sum += p;
                }
                self.accrued_sum += &added_sum;
            }
            self.choices.push(choice);
            let injected = self.inject_arrivals(t);

            self.dfs(t + 1);

            self.eject_arrivals(t, injected);
            self.choices.pop();
            if choice != 0 {
                self.accrued_sum -= &added_sum;
                self.accrued_max = saved_max;
                self.outstanding.insert(choice, finished);
            }
        }
    }
}

/// Globally minimal speed-1 schedule value over all valid schedules that
/// complete by `horizon_bound`, found by branch and bound. Ties among optima
/// go to the lexicographically earliest broadcast sequence (idle = 0, then
/// page id, slot by slot).
pub fn optimal_schedule(
    trace: &Trace,
    spec: &PenaltySpec,
    aggregate: Aggregate,
    budget: u64,
) -> Result<OptResult, OptError> {
    let horizon = horizon_bound(trace);
    let mut arrivals_at: BTreeMap<Time, Vec<usize>> = BTreeMap::new();
    for (i, r) in trace.requests().iter().enumerate() {
        arrivals_at.entry(r.arrival).or_default().push(i);
    }
    let mut search = Search {
        trace,
        spec,
        aggregate,
        horizon,
        budget,
        arrivals_at,
        outstanding: BTreeMap::new(),
        arrived: 0,
        total: trace.len(),
        accrued_sum: Rat::zero(),
        accrued_max: Rat::zero(),
        choices: Vec::new(),
        nodes: 0,
        truncated: false,
        incumbent: None,
    };
    let injected = search.inject_arrivals(0);
    debug_assert!(injected == search.arrivals_at.get(&0).map_or(0, Vec::len));
    search.dfs(1);

    let (value, choices) = search
        .incumbent
        .ok_or(OptError::BudgetExhausted { budget })?;
    let mut slots: BTreeMap<Time, std::collections::BTreeSet<PageId>> = BTreeMap::new();
    for (offset, &page) in choices.iter().enumerate() {
        if page != 0 {
            slots.entry(1 + offset as Time).or_default().insert(page);
        }
    }
    let schedule =
        Schedule::from_slots(trace, 1, slots).expect("incumbent schedule is complete");
    debug_assert_eq!(
        objective(spec, trace, &schedule, aggregate).unwrap(),
        value
    );
    Ok(OptResult {
        schedule,
        value,
        nodes_explored: search.nodes,
        proven_optimal: !search.truncated,
    })
}

/// Unpruned enumeration of every per-slot choice sequence (idle or an
/// outstanding page) up to the horizon bound; returns the minimum objective.
/// Exists solely to cross-check `optimal_schedule`.
pub fn exhaustive_reference(
    trace: &Trace,
    spec: &PenaltySpec,
    aggregate: Aggregate,
) -> Result<Rat, OptError> {
    let horizon = horizon_bound(trace);
    let states = (trace.page_count() as u64 + 1)
        .checked_pow(horizon.max(0) as u32)
        .unwrap_or(u64::MAX);
    if states > EXHAUSTIVE_STATE_LIMIT {
        return Err(OptError::TooLarge {
            states,
            limit: EXHAUSTIVE_STATE_LIMIT,
        });
    }

    struct Enum<'a> {
        trace: &'a Trace,
        spec: &'a PenaltySpec,
        aggregate: Aggregate,
        horizon: Time,
        arrivals_at: BTreeMap<Time, Vec<usize>>,
        outstanding: BTreeMap<PageId, Vec<usize>>,
        arrived: usize,
        finished: usize,
        accrued_sum: Rat,
        accrued_max: Rat,
        best: Option<Rat>,
    }

    impl Enum<'_> {
        fn run(&mut self, t: Time) {
            if self.finished == self.trace.len() && self.arrived == self.trace.len() {
                let value = match self.aggregate {
                    Aggregate::Sum => self.accrued_sum.clone(),
                    Aggregate::Max => self.accrued_max.clone(),
                };
                if self.best.as_ref().map(|b| value < *b).unwrap_or(true) {
                    self.best = Some(value);
                }
                return;
            }
            if t > self.horizon {
                return;
            }
            let pages: Vec<PageId> = self.outstanding.keys().copied().collect();
            for choice in std::iter::once(0).chain(pages.into_iter()) {
                let mut done = Vec::new();
                let saved_max = self.accrued_max.clone();
                let mut added = Rat::zero();
                if choice != 0 {
                    done = self.outstanding.remove(&choice).unwrap();
                    for &i in &done {
                        let r = &self.trace.requests()[i];
                        let p = penalty_at(self.spec, r, t - r.arrival);
                        if p > self.accrued_max {
                            self.accrued_max = p.clone();
                        }
                        added += p;
                    }
                    self.accrued_sum += &added;
                    self.finished += done.len();
                }
                let mut injected = 0;
                if let Some(reqs) = self.arrivals_at.get(&t) {
                    for &i in reqs {
                        let page = self.trace.requests()[i].page;
                        self.outstanding.entry(page).or_default().push(i);
                        injected += 1;
                    }
                }
                self.arrived += injected;

                self.run(t + 1);

                self.arrived -= injected;
                if injected > 0 {
                    for &i in self.arrivals_at.get(&t).unwrap().iter().rev() {
                        let page = self.trace.requests()[i].page;
                        let bucket = self.outstanding.get_mut(&page).unwrap();
                        bucket.pop();
                        if bucket.is_empty() {
                            self.outstanding.remove(&page);
                        }
                    }
                }
                if choice != 0 {
                    self.finished -= done.len();
                    self.accrued_sum -= &added;
                    self.accrued_max = saved_max;
                    self.outstanding.insert(choice, done);
                }
            }
        }
    }

    let mut arrivals_at: BTreeMap<Time, Vec<usize>> = BTreeMap::new();
    for (i, r) in trace.requests().iter().enumerate() {
        arrivals_at.entry(r.arrival).or_default().push(i);
    }
    let mut e = Enum {
        trace,
        spec,
        aggregate,
        horizon,
        arrivals_at,
        outstanding: BTreeMap::new(),
        arrived: 0,
        finished: 0,
        accrued_sum: Rat::zero(),
        accrued_max: Rat::zero(),
        best: None,
    };
    if let Some(reqs) = e.arrivals_at.get(&0) {
        let reqs = reqs.clone();
        for i in reqs {
            let page = e.trace.requests()[i].page;
            e.outstanding.entry(page).or_default().push(i);
            e.arrived += 1;
        }
    }
    e.run(1);
    Ok(e.best.expect("horizon bound admits a complete schedule"))
}
