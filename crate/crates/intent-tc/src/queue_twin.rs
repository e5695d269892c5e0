//! Queueing digital twin: a finite-capacity, two-class, non-preemptive
//! priority M/M/1 queue, plus the semantic model built from its
//! steady-state metrics.
//!
//! High-priority packets are always served before low-priority ones, but a
//! service in progress is never interrupted. When the system is full, an
//! arriving high packet evicts the newest queued low packet; everything
//! else is drop-tail. The first 10% of the horizon is warmup: only packets
//! arriving after it count toward metrics, and for those the accounting is
//! exact: offered = served + dropped + residual per class.

use std::collections::VecDeque;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subintent::{hints, Metric, SubIntent};
use crate::types::round_sig;

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unstable system: total utilization {rho:.3} >= 1")]
    Unstable { rho: f64 },
    #[error("failed to read semantic model: {0}")]
    Io(#[from] std::io::Error),
    #[error("semantic model is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid semantic model: {0}")]
    InvalidModel(String),
}

/// Inputs of one simulation run. Arrival rates may be zero (a silent
/// class); service rates must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// High-priority arrival rate, packets per second.
    pub lambda_high: f64,
    /// Low-priority arrival rate, packets per second.
    pub lambda_low: f64,
    /// High-priority service rate, packets per second.
    pub mu_high: f64,
    /// Low-priority service rate, packets per second.
    pub mu_low: f64,
    /// Maximum packets in the system, including the one in service.
    pub capacity: usize,
    /// Simulated wall-clock span in seconds.
    pub horizon: f64,
    pub seed: u64,
}

impl Default for QueueParams {
    fn default() -> Self {
        QueueParams {
            lambda_high: 6.0,
            lambda_low: 12.0,
            mu_high: 20.0,
            mu_low: 20.0,
            capacity: 30,
            horizon: 3600.0,
            seed: 7,
        }
    }
}

impl QueueParams {
    pub fn validate(&self) -> Result<(), QueueError> {
        let invalid = |msg: String| Err(QueueError::InvalidParams(msg));
        for (name, v) in [
            ("lambda_high", self.lambda_high),
            ("lambda_low", self.lambda_low),
            ("mu_high", self.mu_high),
            ("mu_low", self.mu_low),
            ("horizon", self.horizon),
        ] {
            if !v.is_finite() {
                return invalid(format!("{name} must be finite, got {v}"));
            }
        }
        if self.lambda_high < 0.0 || self.lambda_low < 0.0 {
            return invalid("arrival rates must be >= 0".to_string());
        }
        if self.mu_high <= 0.0 || self.mu_low <= 0.0 {
            return invalid("service rates must be > 0".to_string());
        }
        if self.capacity == 0 {
            return invalid("capacity must be at least 1".to_string());
        }
        if self.horizon <= 0.0 {
            return invalid("horizon must be positive".to_string());
        }
        Ok(())
    }

    /// Total offered utilization λ_h/μ_h + λ_l/μ_l.
    pub fn utilization(&self) -> f64 {
        self.lambda_high / self.mu_high + self.lambda_low / self.mu_low
    }
}

/// Steady-state observations of one run, measured after warmup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueMetrics {
    /// Mean time a high packet waits in queue before service starts, s.
    pub avg_wait_high: f64,
    pub avg_wait_low: f64,
    /// Fraction of offered high packets dropped (tail drop or eviction).
    pub drop_rate_high: f64,
    pub drop_rate_low: f64,
    /// Fraction of the measurement window the server was busy.
    pub u_actual: f64,
    /// Time-averaged queue length (excluding the packet in service).
    pub avg_queue_len_high: f64,
    pub avg_queue_len_low: f64,
    pub offered_high: u64,
    pub offered_low: u64,
    pub served_high: u64,
    pub served_low: u64,
    pub dropped_high: u64,
    pub dropped_low: u64,
    /// Packets still queued when the horizon ended.
    pub residual_high: u64,
    pub residual_low: u64,
}

#[derive(Clone, Copy)]
struct Pkt {
    arrival: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    High,
    Low,
}

/// Run one simulation. Deterministic for a given `params.seed`: arrivals of
/// each class and service draws use independent, fixed RNG streams.
pub fn simulate(params: &QueueParams) -> Result<QueueMetrics, QueueError> {
    params.validate()?;
    let warmup = 0.1 * params.horizon;
    let horizon = params.horizon;

    let stream = |n: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(n);
        rng
    };
    let mut rng_high = stream(0);
    let mut rng_low = stream(1);
    let mut rng_svc = stream(2);
    let arr_high = (params.lambda_high > 0.0).then(|| Exp::new(params.lambda_high).unwrap());
    let arr_low = (params.lambda_low > 0.0).then(|| Exp::new(params.lambda_low).unwrap());
    let svc_high = Exp::new(params.mu_high).unwrap();
    let svc_low = Exp::new(params.mu_low).unwrap();

    let mut q_high: VecDeque<Pkt> = VecDeque::new();
    let mut q_low: VecDeque<Pkt> = VecDeque::new();
    let mut in_service: Option<Class> = None;

    let mut next_arr_high =
        arr_high.map_or(f64::INFINITY, |d| d.sample(&mut rng_high));
    let mut next_arr_low = arr_low.map_or(f64::INFINITY, |d| d.sample(&mut rng_low));
    let mut next_dep = f64::INFINITY;

    let mut offered = [0u64; 2];
    let mut served = [0u64; 2];
    let mut dropped = [0u64; 2];
    let mut wait_sum = [0f64; 2];
    let mut queue_integral = [0f64; 2];
    let mut busy_time = 0f64;
    let mut last_t = 0f64;

    let idx = |c: Class| match c {
        Class::High => 0,
        Class::Low => 1,
    };

    macro_rules! advance_to {
        ($t:expr) => {{
            let lo = last_t.max(warmup);
            let hi = ($t).min(horizon);
            if hi > lo {
                let dt = hi - lo;
                queue_integral[0] += q_high.len() as f64 * dt;
                queue_integral[1] += q_low.len() as f64 * dt;
                if in_service.is_some() {
                    busy_time += dt;
                }
            }
            last_t = $t;
        }};
    }

    macro_rules! start_service {
        ($class:expr, $pkt:expr, $t:expr) => {{
            let class = $class;
            let pkt: Pkt = $pkt;
            if pkt.arrival > warmup {
                served[idx(class)] += 1;
                wait_sum[idx(class)] += $t - pkt.arrival;
            }
            let dist = match class {
                Class::High => &svc_high,
                Class::Low => &svc_low,
            };
            next_dep = $t + dist.sample(&mut rng_svc);
            in_service = Some(class);
        }};
    }

    loop {
        let t = next_dep.min(next_arr_high).min(next_arr_low);
        if !t.is_finite() || t > horizon {
            break;
        }
        advance_to!(t);
        if next_dep <= next_arr_high && next_dep <= next_arr_low {
            in_service = None;
            next_dep = f64::INFINITY;
            if let Some(pkt) = q_high.pop_front() {
                start_service!(Class::High, pkt, t);
            } else if let Some(pkt) = q_low.pop_front() {
                start_service!(Class::Low, pkt, t);
            }
        } else {
            let class = if next_arr_high <= next_arr_low { Class::High } else { Class::Low };
            let pkt = Pkt { arrival: t };
            match class {
                Class::High => {
                    next_arr_high = t + arr_high.unwrap().sample(&mut rng_high);
                }
                Class::Low => {
                    next_arr_low = t + arr_low.unwrap().sample(&mut rng_low);
                }
            }
            if pkt.arrival > warmup {
                offered[idx(class)] += 1;
            }
            let in_system = q_high.len() + q_low.len() + usize::from(in_service.is_some());
            if in_service.is_none() {
                start_service!(class, pkt, t);
            } else if in_system < params.capacity {
                match class {
                    Class::High => q_high.push_back(pkt),
                    Class::Low => q_low.push_back(pkt),
                }
            } else if class == Class::High && !q_low.is_empty() {
                // Full system: a high arrival evicts the newest queued low
                // packet instead of being lost.
                let evicted = q_low.pop_back().unwrap();
                if evicted.arrival > warmup {
                    dropped[1] += 1;
                }
                q_high.push_back(pkt);
            } else if pkt.arrival > warmup {
                dropped[idx(class)] += 1;
            }
        }
    }
    advance_to!(horizon);
    debug_assert!(last_t >= horizon);

    let residual_high = q_high.iter().filter(|p| p.arrival > warmup).count() as u64;
    let residual_low = q_low.iter().filter(|p| p.arrival > warmup).count() as u64;
    debug_assert_eq!(offered[0], served[0] + dropped[0] + residual_high);
    debug_assert_eq!(offered[1], served[1] + dropped[1] + residual_low);

    let window = horizon - warmup;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    Ok(QueueMetrics {
        avg_wait_high: ratio(wait_sum[0], served[0] as f64),
        avg_wait_low: ratio(wait_sum[1], served[1] as f64),
        drop_rate_high: ratio(dropped[0] as f64, offered[0] as f64),
        drop_rate_low: ratio(dropped[1] as f64, offered[1] as f64),
        u_actual: busy_time / window,
        avg_queue_len_high: queue_integral[0] / window,
        avg_queue_len_low: queue_integral[1] / window,
        offered_high: offered[0],
        offered_low: offered[1],
        served_high: served[0],
        served_low: served[1],
        dropped_high: dropped[0],
        dropped_low: dropped[1],
        residual_high,
        residual_low,
    })
}

/// Closed-form mean queue waits (seconds) of the infinite-capacity
/// non-preemptive two-class priority queue, as (high, low). Errors when
/// total utilization reaches 1.
pub fn analytic_waits(params: &QueueParams) -> Result<(f64, f64), QueueError> {
    params.validate()?;
    let rho_high = params.lambda_high / params.mu_high;
    let rho_low = params.lambda_low / params.mu_low;
    let sigma1 = rho_high;
    let sigma2 = rho_high + rho_low;
    if sigma2 >= 1.0 {
        return Err(QueueError::Unstable { rho: sigma2 });
    }
    let residual = params.lambda_high / (params.mu_high * params.mu_high)
        + params.lambda_low / (params.mu_low * params.mu_low);
    let wait_high = residual / (1.0 - sigma1);
    let wait_low = residual / ((1.0 - sigma1) * (1.0 - sigma2));
    Ok((wait_high, wait_low))
}

/// Service rates that hit a utilization target with equal rates for both
/// classes: μ = (λ_h + λ_l) / u_target.
pub fn derive_service_rates(
    lambda_high: f64,
    lambda_low: f64,
    u_target: f64,
) -> Result<(f64, f64), QueueError> {
    let invalid = |msg: String| Err(QueueError::InvalidParams(msg));
    if !(lambda_high >= 0.0 && lambda_low >= 0.0) {
        return invalid("arrival rates must be >= 0".to_string());
    }
    if lambda_high + lambda_low <= 0.0 {
        return invalid("at least one arrival rate must be positive".to_string());
    }
    if !(u_target > 0.0 && u_target < 1.0) {
        return invalid(format!("u_target must lie in (0, 1), got {u_target}"));
    }
    let mu = (lambda_high + lambda_low) / u_target;
    Ok((mu, mu))
}

/// One enforceable bound certified by the twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub metric: String,
    pub op: String,
    pub value: f64,
    /// `s` for waits, `ratio` for drop fractions.
    pub unit: String,
}

/// The semantic model: simulation inputs, observed metrics, and the
/// thresholds (metrics rounded to 3 significant figures) that downstream
/// stages treat as the certified truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticModel {
    pub params: QueueParams,
    pub metrics: QueueMetrics,
    pub thresholds: Vec<Threshold>,
    pub provenance: String,
}

impl SemanticModel {
    pub fn threshold(&self, metric: &str) -> Option<f64> {
        self.thresholds.iter().find(|t| t.metric == metric).map(|t| t.value)
    }

    /// The certified thresholds as canonical sub-intent bounds.
    pub fn threshold_bounds(&self) -> Vec<SubIntent> {
        Metric::MODEL_METRICS
            .iter()
            .filter_map(|m| self.threshold(m.name()).map(|v| hints::threshold_bound(*m, v)))
            .collect()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json_str(json: &str) -> Result<Self, QueueError> {
        let model: SemanticModel = serde_json::from_str(json)?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_path(path: &Path) -> Result<Self, QueueError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), QueueError> {
        let invalid = |msg: String| Err(QueueError::InvalidModel(msg));
        for metric in Metric::MODEL_METRICS {
            match self.thresholds.iter().find(|t| t.metric == metric.name()) {
                None => return invalid(format!("missing threshold for {}", metric.name())),
                Some(t) => {
                    if t.op != "<=" {
                        return invalid(format!("{}: op must be `<=`", metric.name()));
                    }
                    if !t.value.is_finite() || t.value < 0.0 {
                        return invalid(format!("{}: value must be finite and >= 0", metric.name()));
                    }
                    let expected_unit = if metric.is_drop() { "ratio" } else { "s" };
                    if t.unit != expected_unit {
                        return invalid(format!(
                            "{}: unit must be `{expected_unit}`, got `{}`",
                            metric.name(),
                            t.unit
                        ));
                    }
                }
            }
        }
        let m = &self.metrics;
        if m.offered_high != m.served_high + m.dropped_high + m.residual_high
            || m.offered_low != m.served_low + m.dropped_low + m.residual_low
        {
            return invalid("metrics do not conserve packets".to_string());
        }
        Ok(())
    }
}

/// Simulate and freeze the observed metrics into a semantic model.
pub fn build_semantic_model(params: &QueueParams) -> Result<SemanticModel, QueueError> {
    let metrics = simulate(params)?;
    let threshold = |metric: Metric, value: f64| Threshold {
        metric: metric.name().to_string(),
        op: "<=".to_string(),
        value: round_sig(value, 3),
        unit: if metric.is_drop() { "ratio" } else { "s" }.to_string(),
    };
    Ok(SemanticModel {
        params: *params,
        metrics,
        thresholds: vec![
            threshold(Metric::AvgWaitHigh, metrics.avg_wait_high),
            threshold(Metric::AvgWaitLow, metrics.avg_wait_low),
            threshold(Metric::DropRateHigh, metrics.drop_rate_high),
            threshold(Metric::DropRateLow, metrics.drop_rate_low),
        ],
        provenance: format!(
            "simulated over {}s (10% warmup) with seed {}",
            params.horizon, params.seed
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        let mut p = QueueParams::default();
        assert!(p.validate().is_ok());
        p.lambda_high = -1.0;
        assert!(p.validate().is_err());
        p = QueueParams { mu_low: 0.0, ..QueueParams::default() };
        assert!(p.validate().is_err());
        p = QueueParams { capacity: 0, ..QueueParams::default() };
        assert!(p.validate().is_err());
        p = QueueParams { horizon: 0.0, ..QueueParams::default() };
        assert!(p.validate().is_err());
        // Silent classes are fine.
        p = QueueParams { lambda_high: 0.0, lambda_low: 0.0, ..QueueParams::default() };
        assert!(p.validate().is_ok());
    }

    #[test]
    fn analytic_hand_check() {
        let params = QueueParams {
            lambda_high: 5.0,
            lambda_low: 5.0,
            mu_high: 20.0,
            mu_low: 20.0,
            ..QueueParams::default()
        };
        let (wait_high, wait_low) = analytic_waits(&params).unwrap();
        assert!((wait_high - 1.0 / 30.0).abs() < 1e-12);
        assert!((wait_low - 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_rejects_unstable() {
        let params = QueueParams {
            lambda_high: 15.0,
            lambda_low: 10.0,
            mu_high: 20.0,
            mu_low: 20.0,
            ..QueueParams::default()
        };
        assert!(matches!(analytic_waits(&params), Err(QueueError::Unstable { .. })));
    }

    #[test]
    fn derived_rates_hit_target() {
        let (mu_high, mu_low) = derive_service_rates(5.0, 5.0, 0.9).unwrap();
        assert!((mu_high - 100.0 / 9.0).abs() < 1e-12);
        assert_eq!(mu_high, mu_low);
        // One silent class still works.
        let (mu, _) = derive_service_rates(6.0, 0.0, 0.75).unwrap();
        assert!((mu - 8.0).abs() < 1e-12);
        assert!(derive_service_rates(0.0, 0.0, 0.5).is_err());
        assert!(derive_service_rates(5.0, 5.0, 1.0).is_err());
        assert!(derive_service_rates(5.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn same_seed_same_metrics() {
        let params = QueueParams { horizon: 500.0, ..QueueParams::default() };
        let a = simulate(&params).unwrap();
        let b = simulate(&params).unwrap();
        assert_eq!(a, b);
        let c = simulate(&QueueParams { seed: 8, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn conservation_is_exact() {
        let params = QueueParams { capacity: 8, horizon: 2000.0, ..QueueParams::default() };
        let m = simulate(&params).unwrap();
        assert_eq!(m.offered_high, m.served_high + m.dropped_high + m.residual_high);
        assert_eq!(m.offered_low, m.served_low + m.dropped_low + m.residual_low);
        assert!(m.offered_high > 0 && m.offered_low > 0);
    }

    #[test]
    fn silent_system_yields_zeros() {
        let params = QueueParams {
            lambda_high: 0.0,
            lambda_low: 0.0,
            horizon: 100.0,
            ..QueueParams::default()
        };
        let m = simulate(&params).unwrap();
        assert_eq!(m.offered_high + m.offered_low, 0);
        assert_eq!(m.avg_wait_high, 0.0);
        assert_eq!(m.u_actual, 0.0);
    }

    #[test]
    fn waits_approach_analytic_when_capacity_is_large() {
        let params = QueueParams {
            lambda_high: 5.0,
            lambda_low: 5.0,
            mu_high: 20.0,
            mu_low: 20.0,
            capacity: 1_000_000,
            horizon: 20_000.0,
            seed: 3,
        };
        let m = simulate(&params).unwrap();
        let (wait_high, wait_low) = analytic_waits(&params).unwrap();
        assert!((m.avg_wait_high - wait_high).abs() / wait_high < 0.10, "{m:?}");
        assert!((m.avg_wait_low - wait_low).abs() / wait_low < 0.10, "{m:?}");
        assert_eq!(m.dropped_high + m.dropped_low, 0);
    }

    #[test]
    fn pressure_drops_low_before_high() {
        let params = QueueParams {
            lambda_high: 9.0,
            lambda_low: 12.0,
            mu_high: 20.0,
            mu_low: 20.0,
            capacity: 6,
            horizon: 5000.0,
            seed: 11,
        };
        let m = simulate(&params).unwrap();
        assert!(m.drop_rate_low > m.drop_rate_high, "{m:?}");
        assert!(m.dropped_low > 0);
    }

    #[test]
    fn little_law_roughly_holds() {
        let params = QueueParams {
            lambda_high: 5.0,
            lambda_low: 5.0,
            mu_high: 20.0,
            mu_low: 20.0,
            capacity: 1_000_000,
            horizon: 20_000.0,
            seed: 5,
        };
        let m = simulate(&params).unwrap();
        let expected_high = params.lambda_high * m.avg_wait_high;
        assert!((m.avg_queue_len_high - expected_high).abs() / expected_high < 0.15, "{m:?}");
    }

    #[test]
    fn model_round_trips_and_validates() {
        let params = QueueParams { horizon: 1000.0, ..QueueParams::default() };
        let model = build_semantic_model(&params).unwrap();
        let json = model.to_json_string();
        let back = SemanticModel::from_json_str(&json).unwrap();
        assert_eq!(model, back);
        assert!(model.threshold("avg_wait_high").is_some());
        assert_eq!(model.threshold_bounds().len(), 4);

        let mut broken = model.clone();
        broken.thresholds.retain(|t| t.metric != "drop_rate_low");
        assert!(broken.validate().is_err());
    }
}
