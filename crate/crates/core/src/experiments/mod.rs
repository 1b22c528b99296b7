//! Empirical studies on top of the solvers: equilibrium multiplicity gaps,
//! tCPA sensitivity, cross-network reserve externalities and A/B testing
//! under interference.
//!
//! Every study returns a serializable report and can flatten it into
//! [`LongRecord`]s, one `(experiment, seed, arm, metric, value)` row each.
//! Reports are pure functions of their inputs and seeds.

pub mod ad_ab;
pub mod instability;
pub mod reserve;
pub mod sensitivity;
pub mod stats;
pub mod user_ab;

pub use ad_ab::{
    ad_side_ab, ad_side_study, boosted_counterfactual, pid_update, simulate, split_groups,
    treatment_wins, AdSideDesign, AdSideMetrics, AdSideReport, AdSideSpec, BoostChoice,
    MetricDelta, PidParams, PidState, RunMetrics, SimOutcome, PID_FLOOR, SUCCESS_BAND,
};
pub use instability::{gap_report, instability_report, BidderGap, GapReport};
pub use reserve::{network_reserve_externality, two_network_labels, ReservePoint, ReserveReport};
pub use sensitivity::{
    search_non_monotone, sensitivity_from, sensitivity_individual, sensitivity_population,
    NonMonotoneWitness, PopulationReport, PopulationRun, SensitivityRecord,
};
pub use stats::{paired_location_test, percentile_interval, LocationTest, Quantiles};
pub use user_ab::{user_side_ab, Effect, Replicate, UserSideAbReport, UserSideAbSpec, UserTransform};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One row of a long-format report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRecord {
    pub experiment: String,
    pub seed: u64,
    pub arm: String,
    pub metric: String,
    pub value: f64,
}

impl LongRecord {
    pub fn new(experiment: &str, seed: u64, arm: impl Into<String>, metric: &str, value: f64) -> Self {
        LongRecord {
            experiment: experiment.to_string(),
            seed,
            arm: arm.into(),
            metric: metric.to_string(),
            value,
        }
    }
}

pub const LONG_HEADER: &str = "experiment,seed,arm,metric,value";

/// CSV text with a header row; floats use the shortest round-trip form.
pub fn long_csv(records: &[LongRecord]) -> String {
    let mut out = String::from(LONG_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{},{},{},{},{}", r.experiment, r.seed, r.arm, r.metric, r.value)
            .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = vec![
            LongRecord::new("reserve", 3, "a", "revenue", 0.1),
            LongRecord::new("reserve", 3, "total", "revenue", 2.0),
        ];
        assert_eq!(
            long_csv(&rows),
            "experiment,seed,arm,metric,value\nreserve,3,a,revenue,0.1\nreserve,3,total,revenue,2\n"
        );
    }
}
