//! Episode-level success, safety and efficiency metrics.

use serde::{Deserialize, Serialize};

use crate::sim::Status;

/// Per-agent summary of an evaluation.
///
/// Rates partition the episode set: every episode ends in exactly one of
/// success, collision, off-road or timeout.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episodes: usize,
    pub successes: usize,
    pub collisions: usize,
    pub offroads: usize,
    pub timeouts: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub offroad_rate: f64,
    pub timeout_rate: f64,
    /// `1 - collision_rate`.
    pub safety: f64,
    pub efficiency: f64,
    pub total_seconds: f64,
    pub mean_episode_seconds: f64,
}

/// `max(0, (successes - failures) / seconds)` where failures are collisions plus
/// off-road exits; 0 when no time elapsed.
pub fn efficiency(successes: usize, collisions: usize, offroads: usize, total_seconds: f64) -> f64 {
    if total_seconds <= 0.0 {
        return 0.0;
    }
    let net = successes as f64 - (collisions + offroads) as f64;
    (net / total_seconds).max(0.0)
}

impl MetricsRecord {
    pub fn from_counts(
        successes: usize,
        collisions: usize,
        offroads: usize,
        timeouts: usize,
        total_seconds: f64,
    ) -> Self {
        let episodes = successes + collisions + offroads + timeouts;
        let rate = |k: usize| if episodes == 0 { 0.0 } else { k as f64 / episodes as f64 };
        let success_rate = rate(successes);
        let collision_rate = rate(collisions);
        let offroad_rate = rate(offroads);
        let timeout_rate = rate(timeouts);
        MetricsRecord {
            episodes,
            successes,
            collisions,
            offroads,
            timeouts,
            success_rate,
            collision_rate,
            offroad_rate,
            timeout_rate,
            safety: 1.0 - collision_rate,
            efficiency: efficiency(successes, collisions, offroads, total_seconds),
            total_seconds,
            mean_episode_seconds: if episodes == 0 {
                0.0
            } else {
                total_seconds / episodes as f64
            },
        }
    }

    /// Builds a record from `(terminal status, episode seconds)` pairs.
    /// A `Running` status is counted as a timeout.
    pub fn from_outcomes(outcomes: &[(Status, f64)]) -> Self {
        let mut c = [0usize; 4];
        for (s, _) in outcomes {
            let k = match s {
                Status::ReachGoal => 0,
                Status::Collision => 1,
                Status::OffRoad => 2,
                Status::Timeout | Status::Running => 3,
            };
            c[k] += 1;
        }
        let total: f64 = outcomes.iter().map(|o| o.1).sum();
        Self::from_counts(c[0], c[1], c[2], c[3], total)
    }

    pub fn rate_sum(&self) -> f64 {
        self.success_rate + self.collision_rate + self.offroad_rate + self.timeout_rate
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn efficiency_hand_example() {
        let m = MetricsRecord::from_counts(7, 3, 0, 0, 500.0);
        assert!((m.efficiency - 0.008).abs() < 1e-15);
        assert_eq!(m.episodes, 10);
        assert!((m.safety - 0.7).abs() < 1e-15);
    }

    #[test]
    fn never_moving_policy() {
        let outcomes = vec![(Status::Timeout, 60.0); 4];
        let m = MetricsRecord::from_outcomes(&outcomes);
        assert_eq!(m.timeout_rate, 1.0);
        assert_eq!(m.efficiency, 0.0);
        assert_eq!(m.safety, 1.0);
    }

    #[test]
    fn efficiency_is_clamped() {
        assert_eq!(efficiency(1, 2, 3, 10.0), 0.0);
        assert_eq!(efficiency(3, 0, 0, 0.0), 0.0);
    }

    proptest! {
        #[test]
        fn rates_partition(s in 0usize..50, c in 0usize..50, o in 0usize..50, t in 0usize..50, secs in 0.1f64..1e4) {
            prop_assume!(s + c + o + t > 0);
            let m = MetricsRecord::from_counts(s, c, o, t, secs);
            prop_assert!((m.rate_sum() - 1.0).abs() <= 1e-12);
            let expected = ((s as f64 - (c + o) as f64) / secs).max(0.0);
            prop_assert_eq!(m.efficiency, expected);
        }
    }
}
