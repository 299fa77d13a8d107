//! Discrete-time broadcast model: requests, traces, schedules.
//!
//! Time is integer. At each time step the scheduler first decides which pages
//! to broadcast, the broadcast satisfies every outstanding request for those
//! pages, and only then do new arrivals join the queue. A request arriving at
//! `t` is therefore never satisfied by the broadcast at `t`; the earliest
//! possible finish is `arrival + 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Page identifier; positive integers, dense from 1.
pub type PageId = u32;
/// Integer time.
pub type Time = i64;

/// Request key inside a trace: page plus per-page ordinal.
pub type RequestKey = (PageId, u32);

/// An unvalidated request as it appears in input files and generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawRequest {
    pub page: PageId,
    pub arrival: Time,
    pub deadline: Time,
}

/// One client demand for a page. `index` distinguishes requests for the same
/// page and is assigned in arrival order during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub page: PageId,
    pub arrival: Time,
    pub deadline: Time,
    pub index: u32,
}

impl Request {
    /// Slack `deadline − arrival`; at least 1 in a valid trace. Pure
    /// waiting-time experiments use `deadline = arrival + 1`, i.e. slack 1.
    pub fn slack(&self) -> Time {
        self.deadline - self.arrival
    }

    pub fn key(&self) -> RequestKey {
        (self.page, self.index)
    }
}

/// Validation errors for raw request sequences.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("request for page {page} has negative arrival {arrival}")]
    NegativeArrival { page: PageId, arrival: Time },
    #[error("request for page {page} at {arrival} has deadline {deadline} (slack must be >= 1)")]
    NonPositiveSlack {
        page: PageId,
        arrival: Time,
        deadline: Time,
    },
    #[error("trace contains no requests")]
    EmptyTrace,
    #[error("page identifiers must be positive")]
    InvalidPageId,
}

/// A validated request sequence. Requests are sorted by
/// `(arrival, page, index)` and per-page indices run 1, 2, … in arrival
/// order. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    requests: Vec<Request>,
    page_count: PageId,
}

impl Trace {
    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Largest referenced page id.
    pub fn page_count(&self) -> PageId {
        self.page_count
    }

    pub fn last_arrival(&self) -> Time {
        self.requests.iter().map(|r| r.arrival).max().unwrap_or(0)
    }

    /// Number of distinct pages that actually have requests.
    pub fn distinct_pages(&self) -> usize {
        self.requests
            .iter()
            .map(|r| r.page)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Request indices grouped by page, each group in arrival order.
    pub fn by_page(&self) -> BTreeMap<PageId, Vec<usize>> {
        let mut map: BTreeMap<PageId, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.requests.iter().enumerate() {
            map.entry(r.page).or_default().push(i);
        }
        map
    }
}

/// Validate a raw request sequence: sort, assign per-page indices, derive the
/// page universe. Rejects arrivals < 0, slack < 1, empty input.
pub fn validate_trace<I>(raw: I) -> Result<Trace, TraceError>
where
    I: IntoIterator<Item = RawRequest>,
{
    let mut items: Vec<RawRequest> = raw.into_iter().collect();
    if items.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    for r in &items {
        if r.page == 0 {
            return Err(TraceError::InvalidPageId);
        }
        if r.arrival < 0 {
            return Err(TraceError::NegativeArrival {
                page: r.page,
                arrival: r.arrival,
            });
        }
        if r.deadline <= r.arrival {
            return Err(TraceError::NonPositiveSlack {
                page: r.page,
                arrival: r.arrival,
                deadline: r.deadline,
            });
        }
    }
    // Per-page indices in arrival order (stable on input order for equal
    // arrivals), then global (arrival, page, index) order.
    items.sort_by_key(|r| (r.arrival, r.page));
    let mut next_index: BTreeMap<PageId, u32> = BTreeMap::new();
    let mut requests: Vec<Request> = items
        .into_iter()
        .map(|r| {
            let ix = next_index.entry(r.page).or_insert(0);
            *ix += 1;
            Request {
                page: r.page,
                arrival: r.arrival,
                deadline: r.deadline,
                index: *ix,
            }
        })
        .collect();
    requests.sort_by_key(|r| (r.arrival, r.page, r.index));
    let page_count = requests.iter().map(|r| r.page).max().unwrap();
    Ok(Trace {
        requests,
        page_count,
    })
}

/// A complete broadcast schedule at integer speed `speed`: per-slot broadcast
/// sets plus the induced finish time of every request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    speed: u32,
    slots: BTreeMap<Time, BTreeSet<PageId>>,
    finish: BTreeMap<RequestKey, Time>,
    horizon: Time,
}

impl Schedule {
    pub fn new(speed: u32) -> Self {
        assert!(speed >= 1, "speed must be positive");
        Schedule {
            speed,
            slots: BTreeMap::new(),
            finish: BTreeMap::new(),
            horizon: 0,
        }
    }

    pub fn speed(&self) -> u32 {
        self.speed
    }

    pub fn slots(&self) -> &BTreeMap<Time, BTreeSet<PageId>> {
        &self.slots
    }

    /// Largest time with a broadcast; 0 for an empty schedule.
    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn finish_of(&self, key: RequestKey) -> Option<Time> {
        self.finish.get(&key).copied()
    }

    pub fn finishes(&self) -> &BTreeMap<RequestKey, Time> {
        &self.finish
    }

    /// Record a broadcast of `page` at time `t`.
    pub fn add_broadcast(&mut self, t: Time, page: PageId) {
        self.slots.entry(t).or_default().insert(page);
        self.horizon = self.horizon.max(t);
    }

    /// Record the finish time of a request.
    pub fn set_finish(&mut self, key: RequestKey, t: Time) {
        self.finish.insert(key, t);
    }

    /// Sorted broadcast times of one page.
    pub fn broadcasts_of(&self, page: PageId) -> Vec<Time> {
        self.slots
            .iter()
            .filter(|(_, set)| set.contains(&page))
            .map(|(t, _)| *t)
            .collect()
    }

    /// Rebuild a schedule from per-slot broadcast sets, deriving each finish
    /// time as the earliest broadcast of the page after the arrival. Fails if
    /// some request is never satisfied.
    pub fn from_slots(
        trace: &Trace,
        speed: u32,
        slots: BTreeMap<Time, BTreeSet<PageId>>,
    ) -> Result<Schedule, RequestKey> {
        let mut sched = Schedule::new(speed);
        for (t, pages) in &slots {
            for p in pages {
                sched.add_broadcast(*t, *p);
            }
        }
        let by_page: BTreeMap<PageId, Vec<Time>> = {
            let mut m: BTreeMap<PageId, Vec<Time>> = BTreeMap::new();
            for (t, pages) in &slots {
                for p in pages {
                    m.entry(*p).or_default().push(*t);
                }
            }
            m
        };
        for r in trace.requests() {
            let times = by_page.get(&r.page).ok_or(r.key())?;
            let f = times
                .iter()
                .copied()
                .find(|t| *t > r.arrival)
                .ok_or(r.key())?;
            sched.set_finish(r.key(), f);
        }
        Ok(sched)
    }
}

/// A broken schedule rule, as data. An empty violation list is the
/// definition of a valid schedule for a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SlotOverCapacity {
        time: Time,
        pages: usize,
        speed: u32,
    },
    MissingFinish {
        request: RequestKey,
    },
    FinishNotAfterArrival {
        request: RequestKey,
        arrival: Time,
        finish: Time,
    },
    PageNotBroadcastAtFinish {
        request: RequestKey,
        finish: Time,
    },
    NotEarliestBroadcast {
        request: RequestKey,
        finish: Time,
        earlier: Time,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SlotOverCapacity { time, pages, speed } => {
                write!(f, "slot {time} broadcasts {pages} pages, speed is {speed}")
            }
            Violation::MissingFinish { request } => {
                write!(f, "request {request:?} has no finish time")
            }
            Violation::FinishNotAfterArrival {
                request,
                arrival,
                finish,
            } => write!(
                f,
                "request {request:?} finishes at {finish}, not after arrival {arrival}"
            ),
            Violation::PageNotBroadcastAtFinish { request, finish } => {
                write!(f, "request {request:?}: its page is not broadcast at {finish}")
            }
            Violation::NotEarliestBroadcast {
                request,
                finish,
                earlier,
            } => write!(
                f,
                "request {request:?} finishes at {finish} but its page was broadcast at {earlier}"
            ),
        }
    }
}

/// Check every schedule invariant against a trace. Violations are data, not
/// errors; an empty list means the schedule is valid and complete.
pub fn verify_schedule(trace: &Trace, schedule: &Schedule) -> Vec<Violation> {
    let mut out = Vec::new();
    for (t, pages) in schedule.slots() {
        if pages.len() > schedule.speed() as usize {
            out.push(Violation::SlotOverCapacity {
                time: *t,
                pages: pages.len(),
                speed: schedule.speed(),
            });
        }
    }
    for r in trace.requests() {
        let Some(f) = schedule.finish_of(r.key()) else {
            out.push(Violation::MissingFinish { request: r.key() });
            continue;
        };
        if f <= r.arrival {
            out.push(Violation::FinishNotAfterArrival {
                request: r.key(),
                arrival: r.arrival,
                finish: f,
            });
            continue;
        }
        let broadcast_at = |t: Time| {
            schedule
                .slots()
                .get(&t)
                .map(|s| s.contains(&r.page))
                .unwrap_or(false)
        };
        if !broadcast_at(f) {
            out.push(Violation::PageNotBroadcastAtFinish {
                request: r.key(),
                finish: f,
            });
            continue;
        }
        if let Some(earlier) = schedule
            .broadcasts_of(r.page)
            .into_iter()
            .find(|t| *t > r.arrival && *t < f)
        {
            out.push(Violation::NotEarliestBroadcast {
                request: r.key(),
                finish: f,
                earlier,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(page: PageId, arrival: Time, deadline: Time) -> RawRequest {
        RawRequest {
            page,
            arrival,
            deadline,
        }
    }

    #[test]
    fn minimal_trace_validates() {
        let t = validate_trace([raw(1, 0, 1)]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.page_count(), 1);
        assert_eq!(t.requests()[0].index, 1);
    }

    #[test]
    fn zero_slack_rejected() {
        assert_eq!(
            validate_trace([raw(1, 0, 0)]),
            Err(TraceError::NonPositiveSlack {
                page: 1,
                arrival: 0,
                deadline: 0
            })
        );
    }

    #[test]
    fn requests_are_sorted_and_indexed() {
        let t = validate_trace([raw(2, 3, 5), raw(1, 0, 1)]).unwrap();
        let keys: Vec<_> = t.requests().iter().map(|r| (r.page, r.arrival)).collect();
        assert_eq!(keys, vec![(1, 0), (2, 3)]);
        assert_eq!(t.page_count(), 2);
    }

    #[test]
    fn per_page_indices_in_arrival_order() {
        let t = validate_trace([raw(1, 4, 5), raw(1, 0, 1), raw(1, 2, 3)]).unwrap();
        let ix: Vec<_> = t.requests().iter().map(|r| (r.arrival, r.index)).collect();
        assert_eq!(ix, vec![(0, 1), (2, 2), (4, 3)]);
    }

    #[test]
    fn empty_and_negative_inputs_rejected() {
        assert_eq!(validate_trace([]), Err(TraceError::EmptyTrace));
        assert_eq!(
            validate_trace([raw(1, -1, 3)]),
            Err(TraceError::NegativeArrival {
                page: 1,
                arrival: -1
            })
        );
    }

    #[test]
    fn validate_is_idempotent() {
        let t = validate_trace([raw(2, 3, 5), raw(1, 0, 1), raw(2, 3, 4)]).unwrap();
        let again = validate_trace(t.requests().iter().map(|r| raw(r.page, r.arrival, r.deadline)))
            .unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn earliest_legal_finish_verifies() {
        let trace = validate_trace([raw(1, 0, 1)]).unwrap();
        let mut s = Schedule::new(1);
        s.add_broadcast(1, 1);
        s.set_finish((1, 1), 1);
        assert!(verify_schedule(&trace, &s).is_empty());
    }

    #[test]
    fn finish_at_arrival_flagged() {
        let trace = validate_trace([raw(1, 0, 1)]).unwrap();
        let mut s = Schedule::new(1);
        s.add_broadcast(0, 1);
        s.set_finish((1, 1), 0);
        let v = verify_schedule(&trace, &s);
        assert!(matches!(v[0], Violation::FinishNotAfterArrival { .. }));
    }

    #[test]
    fn slot_capacity_flagged() {
        let trace = validate_trace([raw(1, 0, 1)]).unwrap();
        let mut s = Schedule::new(1);
        s.add_broadcast(1, 1);
        s.add_broadcast(1, 2);
        s.set_finish((1, 1), 1);
        let v = verify_schedule(&trace, &s);
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::SlotOverCapacity { time: 1, pages: 2, .. })));
    }

    #[test]
    fn late_finish_flagged_as_not_earliest() {
        let trace = validate_trace([raw(1, 0, 1)]).unwrap();
        let mut s = Schedule::new(1);
        s.add_broadcast(1, 1);
        s.add_broadcast(3, 1);
        s.set_finish((1, 1), 3);
        let v = verify_schedule(&trace, &s);
        assert!(matches!(v[0], Violation::NotEarliestBroadcast { earlier: 1, .. }));
    }

    #[test]
    fn from_slots_derives_earliest_finishes() {
        let trace = validate_trace([raw(1, 0, 1), raw(1, 1, 2)]).unwrap();
        let mut slots: BTreeMap<Time, BTreeSet<PageId>> = BTreeMap::new();
        slots.insert(1, [1].into());
        slots.insert(3, [1].into());
        let s = Schedule::from_slots(&trace, 1, slots).unwrap();
        assert_eq!(s.finish_of((1, 1)), Some(1));
        assert_eq!(s.finish_of((1, 2)), Some(3));
        assert!(verify_schedule(&trace, &s).is_empty());
    }
}
