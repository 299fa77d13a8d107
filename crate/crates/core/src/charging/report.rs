//! Check records and the tab-separated report format.

use std::fmt;

use num_traits::Zero;

use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
    Inapplicable,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
            CheckStatus::Inapplicable => "inapplicable",
        };
        write!(f, "{s}")
    }
}

/// One verified inequality (or scoped skip): which rule, which event(s), the
/// two exact sides, and the outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckRecord {
    pub rule: &'static str,
    pub events: String,
    pub lhs: Option<Rat>,
    pub rhs: Option<Rat>,
    pub status: CheckStatus,
    pub note: String,
}

impl CheckRecord {
    pub fn comparison(
        rule: &'static str,
        events: String,
        lhs: Rat,
        rhs: Rat,
        pass: bool,
    ) -> Self {
        CheckRecord {
            rule,
            events,
            lhs: Some(lhs),
            rhs: Some(rhs),
            status: if pass {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            note: String::new(),
        }
    }

    pub fn status_only(
        rule: &'static str,
        events: String,
        status: CheckStatus,
        note: impl Into<String>,
    ) -> Self {
        CheckRecord {
            rule,
            events,
            lhs: None,
            rhs: None,
            status,
            note: note.into(),
        }
    }
}

/// Aggregate cost sums over the labeled events, reported alongside the
/// per-check records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateSums {
    /// Algorithm cost of self-chargeable events.
    pub alg_self: Rat,
    /// Reference cost of self-chargeable events.
    pub ref_self: Rat,
    /// Algorithm cost of late requests of non-self-chargeable events.
    pub alg_late: Rat,
    /// Algorithm cost of early requests of non-self-chargeable events.
    pub alg_early: Rat,
    /// Reference cost of non-self-chargeable events.
    pub ref_nonself: Rat,
    pub alg_total: Rat,
    pub ref_total: Rat,
}

impl Default for AggregateSums {
    fn default() -> Self {
        AggregateSums {
            alg_self: Rat::zero(),
            ref_self: Rat::zero(),
            alg_late: Rat::zero(),
            alg_early: Rat::zero(),
            ref_nonself: Rat::zero(),
            alg_total: Rat::zero(),
            ref_total: Rat::zero(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub records: Vec<CheckRecord>,
    pub sums: Option<AggregateSums>,
}

impl VerifyReport {
    pub fn count(&self, status: CheckStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.records
            .iter()
            .filter(|r| r.status == CheckStatus::Fail)
            .collect()
    }

    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.status == CheckStatus::Fail)
    }

    pub fn failures_for(&self, rule: &str) -> usize {
        self.records
            .iter()
            .filter(|r| r.rule == rule && r.status == CheckStatus::Fail)
            .count()
    }

    pub fn rows_for(&self, rule: &str) -> usize {
        self.records.iter().filter(|r| r.rule == rule).count()
    }

    pub fn merge(&mut self, other: VerifyReport) {
        self.records.extend(other.records);
        if self.sums.is_none() {
            self.sums = other.sums;
        }
    }

    /// One record per line: check id, rule, event id(s), exact lhs/rhs,
    /// status, note.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("check\trule\tevents\tlhs\trhs\tstatus\tnote\n");
        for (i, r) in self.records.iter().enumerate() {
            let fmt_side = |side: &Option<Rat>| {
                side.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "-".into())
            };
            out.push_str(&format!(
                "{}#{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.rule,
                i,
                r.rule,
                if r.events.is_empty() { "-" } else { &r.events },
                fmt_side(&r.lhs),
                fmt_side(&r.rhs),
                r.status,
                r.note
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{} checks: {} pass, {} fail, {} skipped, {} inapplicable",
            self.records.len(),
            self.count(CheckStatus::Pass),
            self.count(CheckStatus::Fail),
            self.count(CheckStatus::Skipped),
            self.count(CheckStatus::Inapplicable),
        )
    }
}
