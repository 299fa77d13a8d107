//! Deterministic discrete-time simulation loop and the online policies.
//!
//! The loop at each integer time `t`: the policy selects up to `speed` pages
//! among pages with outstanding requests, the selected pages' outstanding
//! requests finish at `t`, and only then do arrivals with `arrival == t` join
//! the queue. The scheduler never idles while requests are pending. The very
//! first decision happens at `t = 0` over an empty queue, so the first useful
//! broadcast is at `t >= 1`.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::model::{PageId, Schedule, Time, Trace};
use crate::penalty::{penalty_at, PenaltySpec};
use crate::rational::Rat;

/// Online broadcast policy. `Lwf` is definitionally `Lf(Flow)`: the waiting
/// time of a page is the sum of its outstanding requests' penalties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    Lwf,
    Lf(PenaltySpec),
    Fcfs,
    RoundRobin,
}

impl Policy {
    pub fn name(&self) -> String {
        match self {
            Policy::Lwf => "lwf".into(),
            Policy::Lf(spec) => format!("lf[{spec}]"),
            Policy::Fcfs => "fcfs".into(),
            Policy::RoundRobin => "rr".into(),
        }
    }

    fn selection_spec(&self) -> Option<PenaltySpec> {
        match self {
            Policy::Lwf => Some(PenaltySpec::Flow),
            Policy::Lf(spec) => Some(*spec),
            _ => None,
        }
    }
}

/// The queue of unsatisfied requests at a decision point. `outstanding` maps
/// each page with pending work to the indices of its unsatisfied requests
/// (all with `arrival < now`); pages with no pending requests are absent.
#[derive(Debug, Clone)]
pub struct QueueState<'a> {
    pub trace: &'a Trace,
    pub outstanding: BTreeMap<PageId, Vec<usize>>,
    pub now: Time,
    /// Last page served by the round-robin policy; the cycle resumes after it.
    pub rr_cursor: PageId,
}

impl<'a> QueueState<'a> {
    pub fn new(trace: &'a Trace) -> Self {
        QueueState {
            trace,
            outstanding: BTreeMap::new(),
            now: 0,
            rr_cursor: 0,
        }
    }

    /// Sum of outstanding penalties for one page at the current time.
    pub fn waiting_weight(&self, spec: &PenaltySpec, page: PageId) -> Rat {
        let mut w = Rat::zero();
        if let Some(reqs) = self.outstanding.get(&page) {
            for &i in reqs {
                let r = &self.trace.requests()[i];
                w += penalty_at(spec, r, self.now - r.arrival);
            }
        }
        w
    }
}

/// Pages the policy broadcasts at the current decision point, in selection
/// order, at most `speed` of them. Fewer are returned only when fewer pages
/// have outstanding requests; capacity is never spent on unrequested pages.
pub fn select_pages(policy: &Policy, state: &QueueState<'_>, speed: u32) -> Vec<PageId> {
    let speed = speed as usize;
    let pages: Vec<PageId> = state.outstanding.keys().copied().collect();
    if pages.is_empty() {
        return Vec::new();
    }
    match policy {
        Policy::Lwf | Policy::Lf(_) => {
            let spec = policy.selection_spec().unwrap();
            let mut weighted: Vec<(Rat, PageId)> = pages
                .iter()
                .map(|&p| (state.waiting_weight(&spec, p), p))
                .collect();
            // Largest weight first; ties to the smaller page id.
            weighted.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            weighted.into_iter().take(speed).map(|(_, p)| p).collect()
        }
        Policy::Fcfs => {
            let mut keyed: Vec<(Time, PageId)> = pages
                .iter()
                .map(|&p| {
                    let oldest = state.outstanding[&p]
                        .iter()
                        .map(|&i| state.trace.requests()[i].arrival)
                        .min()
                        .unwrap();
                    (oldest, p)
                })
                .collect();
            keyed.sort();
            keyed.into_iter().take(speed).map(|(_, p)| p).collect()
        }
        Policy::RoundRobin => {
            // Cyclic page-id order, resuming after the cursor.
            let split = pages.partition_point(|&p| p <= state.rr_cursor);
            pages[split..]
                .iter()
                .chain(pages[..split].iter())
                .copied()
                .take(speed)
                .collect()
        }
    }
}

/// Run a policy at integer speed `speed >= 1` over a trace. Total and
/// deterministic: identical inputs produce identical schedules.
pub fn simulate(trace: &Trace, policy: &Policy, speed: u32) -> Schedule {
    assert!(speed >= 1, "speed must be positive");
    let mut schedule = Schedule::new(speed);
    let mut state = QueueState::new(trace);
    // Trace requests are sorted by arrival.
    let requests = trace.requests();
    let mut next_arrival = 0usize;
    let mut t: Time = 0;
    while !state.outstanding.is_empty() || next_arrival < requests.len() {
        if state.outstanding.is_empty() {
            // Nothing pending: fast-forward to the next arrival.
            t = t.max(requests[next_arrival].arrival);
        }
        state.now = t;
        let chosen = select_pages(policy, &state, speed);
        for &page in &chosen {
            schedule.add_broadcast(t, page);
            for i in state.outstanding.remove(&page).unwrap() {
                schedule.set_finish(requests[i].key(), t);
            }
        }
        if let Some(&last) = chosen.last() {
            state.rr_cursor = last;
        }
        while next_arrival < requests.len() && requests[next_arrival].arrival == t {
            state
                .outstanding
                .entry(requests[next_arrival].page)
                .or_default()
                .push(next_arrival);
            next_arrival += 1;
        }
        t += 1;
    }
    schedule
}

/// Maximal closed time intervals on which the scheduler used its full speed.
/// The charging checks are scoped to these windows.
pub fn busy_windows(schedule: &Schedule) -> Vec<(Time, Time)> {
    let mut out = Vec::new();
    let mut current: Option<(Time, Time)> = None;
    for (&t, pages) in schedule.slots() {
        let full = pages.len() == schedule.speed() as usize;
        match (&mut current, full) {
            (Some((_, end)), true) if t == *end + 1 => *end = t,
            (_, true) => {
                if let Some(w) = current.take() {
                    out.push(w);
                }
                current = Some((t, t));
            }
            (_, false) => {
                if let Some(w) = current.take() {
                    out.push(w);
                }
            }
        }
    }
    if let Some(w) = current {
        out.push(w);
    }
    out
}

/// True iff `[lo, hi]` is contained in one of the windows.
pub fn within_windows(windows: &[(Time, Time)], lo: Time, hi: Time) -> bool {
    windows.iter().any(|&(s, t)| s <= lo && hi <= t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_trace, verify_schedule, RawRequest};
    use crate::penalty::{objective, Aggregate};
    use crate::rational::rat;

    fn raw(page: PageId, arrival: Time) -> RawRequest {
        RawRequest {
            page,
            arrival,
            deadline: arrival + 1,
        }
    }

    /// Two pages, arrivals at 0 for both plus page 1 again at 1.
    fn t1() -> Trace {
        validate_trace([raw(1, 0), raw(2, 0), raw(1, 1)]).unwrap()
    }

    #[test]
    fn single_request_is_served_at_one() {
        let trace = validate_trace([raw(1, 0)]).unwrap();
        let s = simulate(&trace, &Policy::Lwf, 1);
        assert_eq!(s.finish_of((1, 1)), Some(1));
        assert_eq!(
            objective(&PenaltySpec::Flow, &trace, &s, Aggregate::Sum).unwrap(),
            rat(1)
        );
    }

    #[test]
    fn t1_at_speed_one_steps_through_ties() {
        let trace = t1();
        let s = simulate(&trace, &Policy::Lwf, 1);
        // t=1: both pages wait 1, tie to page 1; t=2: page 2 (2 > 1); t=3: page 1.
        assert_eq!(s.broadcasts_of(1), vec![1, 3]);
        assert_eq!(s.broadcasts_of(2), vec![2]);
        assert_eq!(
            objective(&PenaltySpec::Flow, &trace, &s, Aggregate::Sum).unwrap(),
            rat(5)
        );
        assert!(verify_schedule(&trace, &s).is_empty());
    }

    #[test]
    fn t1_at_speed_two_finishes_in_two_slots() {
        let trace = t1();
        let s = simulate(&trace, &Policy::Lwf, 2);
        assert_eq!(s.broadcasts_of(1), vec![1, 2]);
        assert_eq!(s.broadcasts_of(2), vec![1]);
        assert_eq!(
            objective(&PenaltySpec::Flow, &trace, &s, Aggregate::Sum).unwrap(),
            rat(3)
        );
    }

    #[test]
    fn selection_compares_weight_sums() {
        // p1 one request of wait 3; p2 two requests of wait 1 each.
        let trace = validate_trace([raw(1, 0), raw(2, 2), raw(2, 2)]).unwrap();
        let mut state = QueueState::new(&trace);
        state.outstanding.insert(1, vec![0]);
        state.outstanding.insert(2, vec![1, 2]);
        state.now = 3;
        assert_eq!(select_pages(&Policy::Lwf, &state, 1), vec![1]);
    }

    #[test]
    fn selection_uses_penalty_spec_weights() {
        // p1: one request, wait 4, slack 2 -> (4/2)^2 = 4.
        // p2: two requests, wait 1, slack 1 -> 1 + 1 = 2.
        let trace = validate_trace([
            RawRequest {
                page: 1,
                arrival: 0,
                deadline: 2,
            },
            raw(2, 3),
            raw(2, 3),
        ])
        .unwrap();
        let mut state = QueueState::new(&trace);
        state.outstanding.insert(1, vec![0]);
        state.outstanding.insert(2, vec![1, 2]);
        state.now = 4;
        let policy = Policy::Lf(PenaltySpec::PowerDelayFactor(2));
        assert_eq!(select_pages(&policy, &state, 1), vec![1]);
    }

    #[test]
    fn equal_weights_break_to_smaller_page() {
        let trace = validate_trace([raw(3, 0), raw(5, 0)]).unwrap();
        let mut state = QueueState::new(&trace);
        state.outstanding.insert(3, vec![0]);
        state.outstanding.insert(5, vec![1]);
        state.now = 1;
        assert_eq!(select_pages(&Policy::Lwf, &state, 1), vec![3]);
    }

    #[test]
    fn busy_windows_examples() {
        let trace = t1();
        let s1 = simulate(&trace, &Policy::Lwf, 1);
        assert_eq!(busy_windows(&s1), vec![(1, 3)]);
        let s2 = simulate(&trace, &Policy::Lwf, 2);
        assert_eq!(busy_windows(&s2), vec![(1, 1)]);
        let empty = Schedule::new(1);
        assert_eq!(busy_windows(&empty), Vec::<(Time, Time)>::new());
    }

    #[test]
    fn round_robin_cycles() {
        let trace = validate_trace([raw(1, 0), raw(2, 0), raw(3, 0), raw(1, 1)]).unwrap();
        let s = simulate(&trace, &Policy::RoundRobin, 1);
        assert_eq!(s.broadcasts_of(1), vec![1, 4]);
        assert_eq!(s.broadcasts_of(2), vec![2]);
        assert_eq!(s.broadcasts_of(3), vec![3]);
    }

    #[test]
    fn fcfs_serves_oldest_first() {
        let trace = validate_trace([raw(2, 0), raw(1, 1), raw(1, 1)]).unwrap();
        let s = simulate(&trace, &Policy::Fcfs, 1);
        assert_eq!(s.broadcasts_of(2), vec![1]);
        assert_eq!(s.broadcasts_of(1), vec![2]);
    }
}
