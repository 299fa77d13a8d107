//! Observed competitive ratios against the exact offline optimum, next to
//! the analytical bounds that apply at each speed.

use num_traits::Zero;

use crate::engine::{simulate, Policy};
use crate::model::Trace;
use crate::opt::{optimal_schedule, OptError, OptResult};
use crate::penalty::{h_bound, m_envelope, objective, Aggregate, PenaltySpec};
use crate::rational::{decimal_string, rat, Rat};

use super::AnalysisConfig;

/// One speed's outcome: the policy objective, its ratio to the speed-1
/// optimum, and the analytical bound when one applies.
#[derive(Debug, Clone)]
pub struct RatioRow {
    pub speed: u32,
    pub policy: String,
    pub value: Rat,
    pub ratio: Rat,
    pub bound: Option<Rat>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub opt_value: Rat,
    pub opt_proven: bool,
    pub opt_nodes: u64,
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("speed\tpolicy\tvalue\tratio\tratio_dec\tbound\tnote\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.speed,
                r.policy,
                r.value,
                r.ratio,
                decimal_string(&r.ratio, 6),
                r.bound
                    .as_ref()
                    .map(|b| b.to_string())
                    .unwrap_or_else(|| "-".into()),
                r.note
            ));
        }
        out.push_str(&format!(
            "#opt\t{}\t{}\n",
            self.opt_value,
            if self.opt_proven {
                "proven"
            } else {
                "upper bound (budget exceeded)"
            }
        ));
        out
    }
}

/// The analytical competitive bound applying to the longest-first policy at
/// integer speed `speed` for this penalty family, if any.
///
/// Linear penalties at speed 5 use the half-window charging argument with
/// shrink factor `(rho-1)/(2 rho)`; other combinations use the
/// `beta`-windowed general form, applicable when
/// `delta = rho / (s·h(beta)·(rho(1-beta) − 1)) < 1`, giving
/// `m(rho) / (1 − delta)`.
pub fn theorem_bound(spec: &PenaltySpec, speed: u32, config: &AnalysisConfig) -> Option<Rat> {
    let envelope = m_envelope(spec, &config.rho);
    if spec.exponent() == 1 && speed == 5 {
        let delta = rat(4) * &config.rho / (rat(5) * (&config.rho - rat(1)));
        if delta < rat(1) {
            return Some(envelope / (rat(1) - delta));
        }
        return None;
    }
    let window = &config.rho * (rat(1) - &config.beta) - rat(1);
    if window <= Rat::zero() {
        return None;
    }
    let h = h_bound(spec, &config.beta).ok()?;
    if h <= Rat::zero() {
        return None;
    }
    let delta = &config.rho / (rat(speed as i64) * h * window);
    if delta < rat(1) {
        Some(envelope / (rat(1) - delta))
    } else {
        None
    }
}

/// For each speed, run the longest-first policy for `spec`, compare the sum
/// objective against the exact speed-1 optimum, and attach the applicable
/// bound. Budget exhaustion is flagged on the report, not raised.
pub fn theorem_ratio_report(
    trace: &Trace,
    spec: &PenaltySpec,
    speeds: &[u32],
    config: &AnalysisConfig,
    budget: u64,
) -> Result<RatioReport, OptError> {
    let OptResult {
        value: opt_value,
        nodes_explored,
        proven_optimal,
        ..
    } = optimal_schedule(trace, spec, Aggregate::Sum, budget)?;
    assert!(opt_value > Rat::zero(), "minimum waits are >= 1");
    let policy = Policy::Lf(*spec);
    let mut rows = Vec::new();
    for &speed in speeds {
        let schedule = simulate(trace, &policy, speed);
        let value = objective(spec, trace, &schedule, Aggregate::Sum)
            .expect("simulated schedules are complete");
        let ratio = &value / &opt_value;
        let bound = theorem_bound(spec, speed, config);
        let note = match (&bound, proven_optimal) {
            (_, false) => "ratio against a non-proven optimum (budget exceeded)".into(),
            (None, true) => "bound inapplicable at this speed".into(),
            (Some(b), true) => {
                if ratio <= *b {
                    String::new()
                } else {
                    "ratio exceeds bound".into()
                }
            }
        };
        rows.push(RatioRow {
            speed,
            policy: policy.name(),
            value,
            ratio,
            bound,
            note,
        });
    }
    Ok(RatioReport {
        opt_value,
        opt_proven: proven_optimal,
        opt_nodes: nodes_explored,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_trace, RawRequest};
    use crate::rational::ratio;

    fn t1() -> Trace {
        validate_trace([
            RawRequest {
                page: 1,
                arrival: 0,
                deadline: 1,
            },
            RawRequest {
                page: 2,
                arrival: 0,
                deadline: 1,
            },
            RawRequest {
                page: 1,
                arrival: 1,
                deadline: 2,
            },
        ])
        .unwrap()
    }

    #[test]
    fn five_speed_flow_bound_is_ninety() {
        let config = AnalysisConfig::flow_five_speed();
        assert_eq!(
            theorem_bound(&PenaltySpec::Flow, 5, &config),
            Some(rat(90))
        );
    }

    #[test]
    fn general_bound_requires_small_delta() {
        // Flow at speed 4 with rho = 10, beta = 1/2: delta = 10/8 >= 1.
        let config = AnalysisConfig::flow_five_speed();
        assert_eq!(theorem_bound(&PenaltySpec::Flow, 4, &config), None);
        // Squared delay factor at s = 3(k+1) = 9 with the framework constants.
        let config = AnalysisConfig::power_framework(2);
        let bound = theorem_bound(&PenaltySpec::PowerDelayFactor(2), 9, &config);
        assert!(bound.is_some());
    }

    #[test]
    fn t1_ratios_match_hand_values() {
        let trace = t1();
        let config = AnalysisConfig::flow_five_speed();
        let report =
            theorem_ratio_report(&trace, &PenaltySpec::Flow, &[1, 2, 5], &config, 1_000_000)
                .unwrap();
        assert_eq!(report.opt_value, rat(4));
        let by_speed: Vec<(u32, &Rat)> = report.rows.iter().map(|r| (r.speed, &r.ratio)).collect();
        assert_eq!(*by_speed[0].1, ratio(5, 4));
        assert_eq!(*by_speed[1].1, ratio(3, 4));
        assert_eq!(*by_speed[2].1, ratio(3, 4));
        let s5 = &report.rows[2];
        assert!(s5.ratio <= *s5.bound.as_ref().unwrap());
    }

    #[test]
    fn single_request_ratio_is_one() {
        let trace = validate_trace([RawRequest {
            page: 1,
            arrival: 0,
            deadline: 1,
        }])
        .unwrap();
        let config = AnalysisConfig::flow_five_speed();
        let report =
            theorem_ratio_report(&trace, &PenaltySpec::Flow, &[1, 5], &config, 1_000_000).unwrap();
        for row in &report.rows {
            assert_eq!(row.ratio, rat(1));
        }
    }
}
