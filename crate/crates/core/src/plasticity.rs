//! Pair-based nearest-neighbor STDP with exponential kernels, weight
//! trajectories sampled on a fixed clock, and weight-change statistics
//! between network snapshots.
//!
//! The closed form is `+a_plus * exp(-dt/tau_plus)` for pre-before-post
//! (`dt = post_time - pre_arrival_time > 0`) and `-a_minus * exp(dt/tau_minus)`
//! for post-before-pre; `dt = 0` changes nothing. Updates are additive,
//! clamped to `[-w_max, w_max]`, and may cross zero. The engine applies the
//! rule only for `|dt| <= cutoff_factor * tau`, so edges whose endpoints
//! never co-fire inside that span stay untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::GeometricNetwork;
use crate::scalar::Real;
use crate::time::ticks_to_ms;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "", deserialize = ""))]
pub struct StdpParams<T: Real> {
    pub a_plus: T,
    pub a_minus: T,
    pub tau_plus_ms: T,
    pub tau_minus_ms: T,
    pub w_max: T,
    /// Pairings farther apart than `cutoff_factor * tau` are ignored.
    pub cutoff_factor: f64,
}

impl<T: Real> Default for StdpParams<T> {
    fn default() -> Self {
        let c = T::from_f64_c;
        Self {
            a_plus: c(0.01),
            a_minus: c(0.012),
            tau_plus_ms: c(20.0),
            tau_minus_ms: c(20.0),
            w_max: c(2.0),
            cutoff_factor: 5.0,
        }
    }
}

impl<T: Real> StdpParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.a_plus <= T::zero()
            || self.a_minus <= T::zero()
            || self.tau_plus_ms <= T::zero()
            || self.tau_minus_ms <= T::zero()
            || self.w_max <= T::zero()
            || self.cutoff_factor <= 0.0
        {
            return Err(Error::InvalidPhysiology("stdp parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Weight change for a single pairing, `dt = post_time - pre_arrival_time` in
/// milliseconds. Pure closed form; clamping happens where it is applied.
pub fn stdp_delta<T: Real>(dt_ms: T, p: &StdpParams<T>) -> T {
    if dt_ms > T::zero() {
        p.a_plus * (-dt_ms / p.tau_plus_ms).exp()
    } else if dt_ms < T::zero() {
        -p.a_minus * (dt_ms / p.tau_minus_ms).exp()
    } else {
        T::zero()
    }
}

pub fn clamp_weight<T: Real>(w: T, w_max: T) -> T {
    w.min(w_max).max(-w_max)
}

/// Recurrent-layer weight vectors sampled on a fixed clock during one run,
/// in canonical edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct WeightTrajectory<T: Real> {
    pub stimulus_id: String,
    pub sample_ticks: Vec<u64>,
    pub vectors: Vec<Vec<T>>,
}

impl<T: Real> WeightTrajectory<T> {
    pub fn sample_times_ms(&self) -> Vec<f64> {
        self.sample_ticks.iter().map(|&t| ticks_to_ms(t)).collect()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightDeltaStats {
    pub n_edges: usize,
    pub n_higher: usize,
    pub n_lower: usize,
    pub n_sign_flipped: usize,
    pub n_unchanged: usize,
    pub frac_higher: f64,
    pub frac_lower: f64,
    pub frac_sign_flipped: f64,
    pub frac_unchanged: f64,
}

/// Classify every edge of `after` against `before`: a positive weight that
/// went negative counts as sign-flipped (takes precedence); otherwise
/// |delta| <= tol is unchanged, and the rest are higher/lower by sign.
pub fn weight_delta_stats<T: Real>(
    before: &GeometricNetwork<T>,
    after: &GeometricNetwork<T>,
    tol: T,
) -> Result<WeightDeltaStats> {
    if before.edges.len() != after.edges.len() {
        return Err(Error::TopologyMismatch(format!(
            "{} edges vs {}",
            before.edges.len(),
            after.edges.len()
        )));
    }
    let (mut higher, mut lower, mut flipped, mut unchanged) = (0usize, 0usize, 0usize, 0usize);
    for (i, (b, a)) in before.edges.iter().zip(&after.edges).enumerate() {
        if b.src != a.src || b.dst != a.dst {
            return Err(Error::TopologyMismatch(format!(
                "edge {i}: ({}, {}) vs ({}, {})",
                b.src, b.dst, a.src, a.dst
            )));
        }
        let delta = a.weight - b.weight;
        if b.weight > T::zero() && a.weight < T::zero() {
            flipped += 1;
        } else if delta.abs() <= tol {
            unchanged += 1;
        } else if delta > T::zero() {
            higher += 1;
        } else {
            lower += 1;
        }
    }
    let n = before.edges.len();
    let frac = |c: usize| c as f64 / n as f64;
    Ok(WeightDeltaStats {
        n_edges: n,
        n_higher: higher,
        n_lower: lower,
        n_sign_flipped: flipped,
        n_unchanged: unchanged,
        frac_higher: frac(higher),
        frac_lower: frac(lower),
        frac_sign_flipped: frac(flipped),
        frac_unchanged: frac(unchanged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{build_sbm, PhysiologyConfig};
    use approx::assert_relative_eq;

    fn p() -> StdpParams<f64> {
        StdpParams::default()
    }

    #[test]
    fn closed_form_at_tau() {
        let p = p();
        assert_relative_eq!(stdp_delta(20.0, &p), 0.01 * (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(stdp_delta(-20.0, &p), -0.012 * (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn tie_rule_zero() {
        assert_eq!(stdp_delta(0.0, &p()), 0.0);
    }

    #[test]
    fn antisymmetric_sign() {
        let p = p();
        for dt in [0.1, 1.0, 5.0, 19.9, 40.0, 99.0] {
            let plus = stdp_delta(dt, &p);
            let minus = stdp_delta(-dt, &p);
            assert!(plus > 0.0 && minus < 0.0, "dt {dt}: {plus} {minus}");
        }
    }

    #[test]
    fn magnitude_strictly_decreasing_in_gap() {
        let p = p();
        let mut prev_pos = f64::INFINITY;
        let mut prev_neg = f64::INFINITY;
        for i in 1..200 {
            let dt = i as f64 * 0.5;
            let a = stdp_delta(dt, &p).abs();
            let b = stdp_delta(-dt, &p).abs();
            assert!(a < prev_pos && b < prev_neg, "not decreasing at dt {dt}");
            prev_pos = a;
            prev_neg = b;
        }
    }

    #[test]
    fn clamp_bounds() {
        assert_eq!(clamp_weight(3.0, 2.0), 2.0);
        assert_eq!(clamp_weight(-3.0, 2.0), -2.0);
        assert_eq!(clamp_weight(0.5, 2.0), 0.5);
    }

    fn toy_net(weights: &[f64]) -> GeometricNetwork<f64> {
        let mut phys = PhysiologyConfig::default();
        phys.self_loops = false;
        // 1 input, k hidden; p=1 gives deterministic dense topology
        let k = weights.len() as u32;
        let mut net = build_sbm::<f64>(1, k, 0.0, 1.0, &phys, 0).unwrap();
        assert_eq!(net.edges.len(), weights.len());
        net.set_weights(weights);
        net
    }

    #[test]
    fn delta_stats_identity() {
        let net = toy_net(&[0.5, 0.6, -0.2]);
        let s = weight_delta_stats(&net, &net, 1e-9).unwrap();
        assert_eq!((s.n_higher, s.n_lower, s.n_sign_flipped, s.n_unchanged), (0, 0, 0, 3));
        assert_relative_eq!(s.frac_unchanged, 1.0);
    }

    #[test]
    fn delta_stats_fixture_10_edges() {
        // 3 raised, 4 lowered, 2 flipped (+ -> -), 1 unchanged
        let before = toy_net(&[0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.2, 0.9]);
        let after = toy_net(&[0.6, 0.7, 0.8, 0.4, 0.3, 0.2, 0.1, -0.1, -0.2, 0.9]);
        let s = weight_delta_stats(&before, &after, 1e-9).unwrap();
        assert_eq!((s.n_higher, s.n_lower, s.n_sign_flipped, s.n_unchanged), (3, 4, 2, 1));
        assert_relative_eq!(s.frac_higher, 0.3);
        assert_relative_eq!(s.frac_lower, 0.4);
        assert_relative_eq!(s.frac_sign_flipped, 0.2);
        assert_relative_eq!(s.frac_unchanged, 0.1);
        let total = s.frac_higher + s.frac_lower + s.frac_sign_flipped + s.frac_unchanged;
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn delta_stats_negative_to_positive_counts_higher() {
        let before = toy_net(&[-0.3]);
        let after = toy_net(&[0.3]);
        let s = weight_delta_stats(&before, &after, 1e-9).unwrap();
        assert_eq!(s.n_higher, 1);
        assert_eq!(s.n_sign_flipped, 0);
    }

    #[test]
    fn delta_stats_topology_mismatch() {
        let a = toy_net(&[0.5, 0.5, 0.5]);
        let b = toy_net(&[0.5]);
        assert!(matches!(weight_delta_stats(&a, &b, 1e-9), Err(Error::TopologyMismatch(_))));
    }
}
