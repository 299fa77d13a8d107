//! Speed-4 event taxonomy checks: bridge counts, bridge chain inequalities,
//! and the two coverings over Type1/Type2 events.
//!
//! The chain inequalities are checked in cross-multiplied form, so parameter
//! choices that zero the denominator `1 − 4α − 4γ` stay well defined: the
//! check `F_early ≤ ((3−8α−8γ)/(1−4α−4γ))·F_r + 2ρ·F*_q` becomes
//! `(1−4α−4γ)·(F_early − 2ρ·F*_q) ≤ (3−8α−8γ)·F_r`.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::model::Time;
use crate::rational::{rat, ratio, Rat};

use super::hall::{find_covering, hall_condition_holds, BipartiteGraph, HallOutcome};
use super::report::{CheckRecord, CheckStatus, VerifyReport};
use super::{events_by_end, AnalysisConfig, Event, EventLabel, EventSubtype};

pub const RULE_SCOPE: &str = "four_speed_scope";
pub const RULE_UNIQUE: &str = "ref_broadcast_unique";
pub const RULE_BRIDGE_COUNT: &str = "bridge_count";
pub const RULE_BRIDGE_CHAIN: &str = "bridge_chain";
pub const RULE_BRIDGE_CHAIN_AVG: &str = "bridge_chain_avg";
pub const RULE_TYPE1_SUPPORT: &str = "type1_window_support";
pub const RULE_TYPE1_COVERING: &str = "type1_covering";
pub const RULE_TYPE2_COVERING: &str = "type2_covering";

fn subtype_of(label: &EventLabel) -> Option<EventSubtype> {
    label.subtype
}

/// Verify the speed-4 structures over labeled events (subtype assignment
/// required). Checks whose hypotheses fail are reported as inapplicable, not
/// failed.
pub fn verify_4speed_structures(
    labeled: &[(Event, EventLabel)],
    config: &AnalysisConfig,
    busy: &[(Time, Time)],
    alg_speed: u32,
) -> VerifyReport {
    let mut report = VerifyReport::default();
    if alg_speed != 4 {
        report.records.push(CheckRecord::status_only(
            RULE_SCOPE,
            "-".into(),
            CheckStatus::Inapplicable,
            format!("analyzed schedule has speed {alg_speed}, taxonomy is defined at speed 4"),
        ));
        return report;
    }
    for (_, label) in labeled {
        if !label.is_self_chargeable() {
            assert!(
                subtype_of(label).is_some(),
                "labels must carry subtypes; label with assign_subtypes = true"
            );
        }
    }

    // Each non-self-chargeable event pins its own last reference broadcast:
    // distinct events, distinct times.
    let mut by_o: BTreeMap<Time, Vec<usize>> = BTreeMap::new();
    let mut nsc_count = 0usize;
    for (i, (ev, label)) in labeled.iter().enumerate() {
        if !label.is_self_chargeable() {
            nsc_count += 1;
            by_o.entry(ev.o.expect("non-self-chargeable has o")).or_default().push(i);
        }
    }
    let mut unique_ok = true;
    for (o, members) in &by_o {
        if members.len() > 1 {
            unique_ok = false;
            let ids: Vec<String> = members.iter().map(|&i| labeled[i].0.id()).collect();
            report.records.push(CheckRecord::status_only(
                RULE_UNIQUE,
                ids.join(","),
                CheckStatus::Fail,
                format!("{} events share the reference broadcast time {o}", members.len()),
            ));
        }
    }
    if unique_ok {
        report.records.push(CheckRecord::status_only(
            RULE_UNIQUE,
            "-".into(),
            CheckStatus::Pass,
            format!("{nsc_count} non-self-chargeable events, all reference broadcast times distinct"),
        ));
    }

    let bridge_hypothesis = rat(4) * &config.gamma * &config.rho >= rat(1);
    let type2_busy: Vec<usize> = labeled
        .iter()
        .enumerate()
        .filter(|(_, (ev, label))| {
            subtype_of(label) == Some(EventSubtype::Type2) && ev.interval_in_busy(busy)
        })
        .map(|(i, _)| i)
        .collect();
    let ends = events_by_end(labeled);

    // Coefficients of the chain inequality, cross-multiplied.
    let c1 = rat(1) - rat(4) * &config.alpha - rat(4) * &config.gamma;
    let c2 = rat(3) - rat(8) * &config.alpha - rat(8) * &config.gamma;
    let chain_applicable = c1 >= Rat::zero() && c2 >= Rat::zero();

    let mut bridge_counts_ok = true;
    if !bridge_hypothesis {
        report.records.push(CheckRecord::status_only(
            RULE_BRIDGE_COUNT,
            "-".into(),
            CheckStatus::Inapplicable,
            "hypothesis 4*gamma*rho >= 1 does not hold",
        ));
        bridge_counts_ok = false;
    } else {
        for &i in &type2_busy {
            let (ev, label) = &labeled[i];
            let span = rat(ev.end) - ev.o_prime.as_ref().unwrap();
            let required = rat(4) * &config.gamma * &span;
            debug_assert!(required >= rat(1), "span >= rho makes the bound >= 1");
            let have = rat(label.bridges.len() as i64);
            let pass = have >= required && !label.bridges.is_empty();
            bridge_counts_ok &= pass;
            report.records.push(CheckRecord::comparison(
                RULE_BRIDGE_COUNT,
                ev.id(),
                have,
                required,
                pass,
            ));
        }
    }

    if bridge_hypothesis {
        if !chain_applicable {
            report.records.push(CheckRecord::status_only(
                RULE_BRIDGE_CHAIN,
                "-".into(),
                CheckStatus::Inapplicable,
                "chain coefficients negative (alpha + gamma too large)",
            ));
        } else {
            let two_rho = rat(2) * &config.rho;
            let half_rho = &config.rho / rat(2);
            for &i in &type2_busy {
                let (ev, label) = &labeled[i];
                let o = ev.o.unwrap();
                let enders: &[usize] = ends.get(&o).map(Vec::as_slice).unwrap_or(&[]);
                let ender_total: Rat =
                    enders.iter().map(|&r| labeled[r].0.f_alg.clone()).sum();
                for &q in &label.bridges {
                    let bridge = &labeled[q].0;
                    for &r in enders {
                        let target = &labeled[r].0;
                        let lhs = &c1 * (&ev.f_early - &two_rho * &bridge.f_opt);
                        let rhs = &c2 * &target.f_alg;
                        report.records.push(CheckRecord::comparison(
                            RULE_BRIDGE_CHAIN,
                            format!("{}|{}|{}", ev.id(), bridge.id(), target.id()),
                            lhs.clone(),
                            rhs.clone(),
                            lhs <= rhs,
                        ));
                    }
                    let lhs = rat(4) * &c1 * (&ev.f_early - &half_rho * &bridge.f_opt);
                    let rhs = &c2 * &ender_total;
                    report.records.push(CheckRecord::comparison(
                        RULE_BRIDGE_CHAIN_AVG,
                        format!("{}|{}", ev.id(), bridge.id()),
                        lhs.clone(),
                        rhs.clone(),
                        lhs <= rhs,
                    ));
                }
            }
        }
    }

    // Type1 covering: left side Type1 events in busy windows, right side all
    // self-chargeable events, edges into the alpha/2-stepped window.
    let type1_busy: Vec<usize> = labeled
        .iter()
        .enumerate()
        .filter(|(_, (ev, label))| {
            subtype_of(label) == Some(EventSubtype::Type1) && ev.interval_in_busy(busy)
        })
        .map(|(i, _)| i)
        .collect();
    if type1_busy.is_empty() {
        report.records.push(CheckRecord::status_only(
            RULE_TYPE1_COVERING,
            "-".into(),
            CheckStatus::Pass,
            "vacuous: no Type1 events inside busy windows",
        ));
    } else if &config.alpha * &config.rho < rat(4) {
        report.records.push(CheckRecord::status_only(
            RULE_TYPE1_COVERING,
            "-".into(),
            CheckStatus::Inapplicable,
            "hypothesis alpha*rho >= 4 does not hold",
        ));
    } else {
        let sc_events: Vec<usize> = labeled
            .iter()
            .enumerate()
            .filter(|(_, (_, label))| label.is_self_chargeable())
            .map(|(i, _)| i)
            .collect();
        let half_alpha = &config.alpha / rat(2);
        let mut edges = Vec::new();
        for (li, &i) in type1_busy.iter().enumerate() {
            let ev = &labeled[i].0;
            let left_end = ev.stepped_window_left(&half_alpha).unwrap();
            for (ri, &j) in sc_events.iter().enumerate() {
                let cand = &labeled[j].0;
                if cand.end >= left_end && cand.end <= ev.end - 1 {
                    edges.push((li, ri));
                }
            }
        }
        let graph = BipartiteGraph::new(type1_busy.len(), sc_events.len(), edges);
        let counts = graph.neighbor_counts();
        let mut support_ok = true;
        for (li, &i) in type1_busy.iter().enumerate() {
            let ev = &labeled[i].0;
            let span = rat(ev.end) - ev.o_prime.as_ref().unwrap();
            let required = &config.alpha * &span;
            let have = rat(counts[li] as i64);
            let pass = have >= required;
            support_ok &= pass;
            report.records.push(CheckRecord::comparison(
                RULE_TYPE1_SUPPORT,
                ev.id(),
                have,
                required,
                pass,
            ));
        }
        if support_ok {
            let c = rat(2) / &config.alpha;
            report
                .records
                .push(covering_record(RULE_TYPE1_COVERING, &graph, &c, labeled, &type1_busy));
        } else {
            report.records.push(CheckRecord::status_only(
                RULE_TYPE1_COVERING,
                "-".into(),
                CheckStatus::Inapplicable,
                "per-event window support unmet",
            ));
        }
    }

    // Type2 covering over the bridge graph: right side is all
    // non-self-chargeable events.
    if type2_busy.is_empty() {
        report.records.push(CheckRecord::status_only(
            RULE_TYPE2_COVERING,
            "-".into(),
            CheckStatus::Pass,
            "vacuous: no Type2 events inside busy windows",
        ));
    } else if !bridge_hypothesis {
        report.records.push(CheckRecord::status_only(
            RULE_TYPE2_COVERING,
            "-".into(),
            CheckStatus::Inapplicable,
            "hypothesis 4*gamma*rho >= 1 does not hold",
        ));
    } else if !bridge_counts_ok {
        report.records.push(CheckRecord::status_only(
            RULE_TYPE2_COVERING,
            "-".into(),
            CheckStatus::Inapplicable,
            "bridge count hypothesis unmet",
        ));
    } else {
        let nsc_events: Vec<usize> = labeled
            .iter()
            .enumerate()
            .filter(|(_, (_, label))| !label.is_self_chargeable())
            .map(|(i, _)| i)
            .collect();
        let position: BTreeMap<usize, usize> = nsc_events
            .iter()
            .enumerate()
            .map(|(ri, &j)| (j, ri))
            .collect();
        let mut edges = Vec::new();
        for (li, &i) in type2_busy.iter().enumerate() {
            for &q in &labeled[i].1.bridges {
                edges.push((li, position[&q]));
            }
        }
        let graph = BipartiteGraph::new(type2_busy.len(), nsc_events.len(), edges);
        let c = rat(1) / (rat(2) * &config.gamma);
        report
            .records
            .push(covering_record(RULE_TYPE2_COVERING, &graph, &c, labeled, &type2_busy));
    }

    report
}

fn covering_record(
    rule: &'static str,
    graph: &BipartiteGraph,
    c: &Rat,
    labeled: &[(Event, EventLabel)],
    left: &[usize],
) -> CheckRecord {
    match hall_condition_holds(graph, c) {
        HallOutcome::Holds => {
            let covering = find_covering(graph, c).expect("condition holds");
            let valid = covering.validate(graph);
            CheckRecord {
                rule,
                events: left
                    .iter()
                    .map(|&i| labeled[i].0.id())
                    .collect::<Vec<_>>()
                    .join(","),
                lhs: None,
                rhs: Some(c.clone()),
                status: if valid {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                note: format!(
                    "covering over {} left / {} right vertices, {} edges{}",
                    graph.left,
                    graph.right,
                    graph.edges.len(),
                    if valid { "" } else { "; re-validation failed" }
                ),
            }
        }
        HallOutcome::Violated { subset } => CheckRecord {
            rule,
            events: subset
                .iter()
                .map(|&u| labeled[left[u]].0.id())
                .collect::<Vec<_>>()
                .join(","),
            lhs: None,
            rhs: Some(c.clone()),
            status: CheckStatus::Fail,
            note: "covering condition violated by listed subset".into(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charging::Chargeability;

    fn event(page: u32, ordinal: u32, begin: Time, end: Time) -> Event {
        Event {
            page,
            ordinal,
            begin,
            end,
            requests: vec![],
            f_alg: rat(1),
            f_opt: rat(1),
            o: None,
            o_prime: None,
            f_early: Rat::zero(),
            f_late: Rat::zero(),
            f_opt_late: Rat::zero(),
        }
    }

    #[test]
    fn uniqueness_passes_on_distinct_reference_times() {
        let mut a = event(1, 1, 0, 20);
        a.o = Some(5);
        a.o_prime = Some(rat(5));
        let mut b = event(2, 1, 0, 22);
        b.o = Some(7);
        b.o_prime = Some(rat(7));
        let nsc = EventLabel {
            chargeability: Chargeability::NonSelfChargeable,
            subtype: Some(EventSubtype::Type2),
            bridges: vec![],
        };
        let labeled = vec![(a, nsc.clone()), (b, nsc)];
        let config = AnalysisConfig::four_speed();
        let report = verify_4speed_structures(&labeled, &config, &[], 4);
        assert_eq!(report.failures_for(RULE_UNIQUE), 0);
        assert_eq!(
            report
                .records
                .iter()
                .filter(|r| r.rule == RULE_UNIQUE && r.status == CheckStatus::Pass)
                .count(),
            1
        );
    }

    #[test]
    fn duplicate_reference_times_fail_uniqueness() {
        let mut a = event(1, 1, 0, 20);
        a.o = Some(5);
        a.o_prime = Some(rat(5));
        let mut b = event(2, 1, 0, 22);
        b.o = Some(5);
        b.o_prime = Some(rat(5));
        let nsc = EventLabel {
            chargeability: Chargeability::NonSelfChargeable,
            subtype: Some(EventSubtype::Type2),
            bridges: vec![],
        };
        let labeled = vec![(a, nsc.clone()), (b, nsc)];
        let config = AnalysisConfig::four_speed();
        let report = verify_4speed_structures(&labeled, &config, &[], 4);
        assert_eq!(report.failures_for(RULE_UNIQUE), 1);
    }

    #[test]
    fn non_four_speed_is_inapplicable() {
        let config = AnalysisConfig::four_speed();
        let report = verify_4speed_structures(&[], &config, &[], 5);
        assert_eq!(report.rows_for(RULE_SCOPE), 1);
        assert_eq!(report.count(CheckStatus::Inapplicable), 1);
    }
}
