//! Closed-loop event-triggered simulation and trace-level checks.
//!
//! Per step: measure `x(k)`, evaluate the trigger (for `k` after the last
//! event), update the held input on an event, then advance the plant with the
//! held input. `k = 0` is always an event.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::certificate::{evaluate_v, KrasovskiiCertificate, TRACE_TOLERANCE};
use crate::error::{Error, Result};
use crate::norm::vec_norm;
use crate::system::DelaySystem;
use crate::trigger::{should_trigger, threshold, threshold_error_units, MeasurementError, TriggerParams};
use crate::tuner::TunerResult;
use crate::window::HistoryWindow;

/// States beyond this norm abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub horizon: usize,
    pub phi: HistoryWindow,
    pub params: TriggerParams,
    pub record_v: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub x: DVector<f64>,
    /// Input applied at step `k`.
    pub u: DVector<f64>,
    /// `|x(k_i) - x(k)|` after any reset at `k`.
    pub e_norm: f64,
    /// Threshold in error-norm units, `chi^-1(sigma alpha1(|x|) + chi(a(1-b)^k))`.
    pub threshold: f64,
    pub is_event: bool,
    pub v: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
    pub event_times: Vec<usize>,
}

impl SimTrace {
    pub fn horizon(&self) -> usize {
        self.rows.last().map_or(0, |r| r.k)
    }

    pub fn state_dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.x.len())
    }

    pub fn input_dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.u.len())
    }

    /// The recorded V values, if every row has one.
    pub fn v_column(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.v).collect()
    }

    pub fn final_state_norm(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| vec_norm(&r.x))
    }
}

pub fn simulate<S: DelaySystem + ?Sized>(
    system: &S,
    cert: &KrasovskiiCertificate,
    config: &SimConfig,
) -> Result<SimTrace> {
    if config.horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    config.params.validate()?;
    if config.phi.tau() != system.tau() {
        return Err(Error::DimensionMismatch {
            what: "initial function length",
            expected: system.tau() + 1,
            found: config.phi.len(),
        });
    }
    if config.phi.dim() != system.state_dim() {
        return Err(Error::DimensionMismatch {
            what: "initial function state",
            expected: system.state_dim(),
            found: config.phi.dim(),
        });
    }

    let params = &config.params;
    let mut window = config.phi.clone();
    let mut held = window.current().clone();
    let mut u = system.feedback(&held)?;
    let mut event_times = vec![0];
    let mut rows = Vec::with_capacity(config.horizon + 1);

    for k in 0..=config.horizon {
        let x = window.current();
        let mut is_event = k == 0;
        let mut e_norm = 0.0;
        if k > 0 {
            let err = MeasurementError::new(&held, x, *event_times.last().unwrap_or(&0));
            if should_trigger(&err, x, k, params, cert)? {
                is_event = true;
                held = x.clone();
                u = system.feedback(&held)?;
                event_times.push(k);
            } else {
                e_norm = err.norm();
            }
        }
        rows.push(TraceRow {
            k,
            x: x.clone(),
            u: u.clone(),
            e_norm,
            threshold: threshold_error_units(params, cert, x, k),
            is_event,
            v: config.record_v.then(|| evaluate_v(cert, &window)),
        });
        if k < config.horizon {
            let next = system.step(&window, &u)?;
            let n = vec_norm(&next);
            if !n.is_finite() || n > DIVERGENCE_LIMIT {
                return Err(Error::Diverged { last_finite: k });
            }
            window.push(next)?;
        }
    }
    Ok(SimTrace { rows, event_times })
}

/// Gaps `k_{i+1} - k_i` between consecutive events.
pub fn inter_event_times(trace: &SimTrace) -> Vec<usize> {
    trace.event_times.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Events in `[0, upto]`, or `(0, upto]` without the initial update.
pub fn count_events(trace: &SimTrace, upto: usize, include_initial: bool) -> usize {
    trace
        .event_times
        .iter()
        .filter(|&&k| k <= upto && (include_initial || k > 0))
        .count()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionViolation {
    pub k: usize,
    pub chi_error: f64,
    pub threshold: f64,
}

/// Non-event steps where `chi(|e|) > sigma alpha1(|x|) + chi(a(1-b)^k)`.
pub fn check_restriction(
    trace: &SimTrace,
    params: &TriggerParams,
    cert: &KrasovskiiCertificate,
) -> Vec<RestrictionViolation> {
    trace
        .rows
        .iter()
        .filter(|r| !r.is_event && r.k > 0)
        .filter_map(|r| {
            let chi_error = cert.chi.eval(r.e_norm);
            let th = threshold(params, cert, &r.x, r.k);
            (chi_error > th).then_some(RestrictionViolation {
                k: r.k,
                chi_error,
                threshold: th,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub k: usize,
    pub value: f64,
    pub bound: f64,
}

/// `alpha1^-1(M (1 - eta)^k)`
pub fn state_bound(result: &TunerResult, cert: &KrasovskiiCertificate, k: usize) -> f64 {
    cert.alpha1.inverse(result.m * (1.0 - result.eta).powf(k as f64))
}

/// Steps with `|x(k)| > alpha1^-1(M (1 - eta)^k) + tol`.
pub fn verify_state_bound(trace: &SimTrace, result: &TunerResult, cert: &KrasovskiiCertificate) -> Vec<BoundViolation> {
    trace
        .rows
        .iter()
        .filter_map(|r| {
            let value = vec_norm(&r.x);
            let bound = state_bound(result, cert, r.k);
            (value > bound + TRACE_TOLERANCE).then_some(BoundViolation { k: r.k, value, bound })
        })
        .collect()
}

/// `min_k alpha1^-1(M (1 - eta)^k) - |x(k)|`
pub fn bound_margin(trace: &SimTrace, result: &TunerResult, cert: &KrasovskiiCertificate) -> f64 {
    trace
        .rows
        .iter()
        .map(|r| state_bound(result, cert, r.k) - vec_norm(&r.x))
        .fold(f64::INFINITY, f64::min)
}

/// `(1 - eta)^steps (v0 + M_bar)`
pub fn geometric_v_bound(v0: f64, m_bar: f64, eta: f64, steps: usize) -> f64 {
    (1.0 - eta).powf(steps as f64) * (v0 + m_bar)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VBoundReport {
    /// Steps `k` with `V(k+1) > (1 - c) V(k) + a L (1 - b)^k`.
    pub recursion: Vec<BoundViolation>,
    /// Steps `k` with `V(k+1) > (1 - eta)^{k+1} (V(0) + M_bar)`.
    pub closed_form: Vec<BoundViolation>,
}

impl VBoundReport {
    pub fn passed(&self) -> bool {
        self.recursion.is_empty() && self.closed_form.is_empty()
    }
}

pub fn v_bound_oracle(trace: &SimTrace, cert: &KrasovskiiCertificate, result: &TunerResult) -> Result<VBoundReport> {
    let v = trace.v_column().ok_or_else(|| Error::invalid("trace has no V column"))?;
    let mut report = VBoundReport::default();
    let Some(&v0) = v.first() else {
        return Ok(report);
    };
    let c = result.c;
    let scale = result.a * cert.chi_lipschitz;
    for (k, pair) in v.windows(2).enumerate() {
        let step = (1.0 - c) * pair[0] + scale * (1.0 - result.b).powf(k as f64);
        if pair[1] > step + TRACE_TOLERANCE {
            report.recursion.push(BoundViolation { k, value: pair[1], bound: step });
        }
        let closed = geometric_v_bound(v0, result.m_bar, result.eta, k + 1);
        if pair[1] > closed + TRACE_TOLERANCE {
            report.closed_form.push(BoundViolation { k, value: pair[1], bound: closed });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::{derive_linear_certificate, example2_certificate};
    use crate::system::{example1_system, Example2Params};
    use crate::trigger::TriggerMode;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn trace_with_events(events: Vec<usize>) -> SimTrace {
        SimTrace { rows: vec![], event_times: events }
    }

    #[test]
    fn gaps_and_counts() {
        assert!(inter_event_times(&trace_with_events(vec![0])).is_empty());
        let t = trace_with_events(vec![0, 2, 4, 7]);
        assert_eq!(inter_event_times(&t), vec![2, 2, 3]);
        assert_eq!(count_events(&t, 7, true), 4);
        assert_eq!(count_events(&t, 7, false), 3);
        assert_eq!(count_events(&t, 4, true), 3);
        assert_eq!(count_events(&t, 0, false), 0);
    }

    #[test]
    fn zero_initial_function_stays_at_rest() {
        let sys = example1_system();
        let lc = derive_linear_certificate(&sys).unwrap();
        let cfg = SimConfig {
            horizon: 50,
            phi: HistoryWindow::zeros(1, 2).unwrap(),
            params: TriggerParams::full(0.1, 16.0, 0.01).unwrap(),
            record_v: true,
        };
        let t = simulate(&sys, &lc.cert, &cfg).unwrap();
        assert_eq!(t.rows.len(), 51);
        assert_eq!(t.event_times, vec![0]);
        assert!(t.rows.iter().all(|r| r.x.iter().all(|&x| x == 0.0) && r.u.iter().all(|&u| u == 0.0)));
        assert!(t.rows.iter().all(|r| r.v == Some(0.0) && r.e_norm == 0.0));
    }

    #[test]
    fn input_is_held_between_events() {
        let sys = example1_system();
        let lc = derive_linear_certificate(&sys).unwrap();
        let cfg = SimConfig {
            horizon: 300,
            phi: HistoryWindow::constant(1, v(&[1.0, 1.0])).unwrap(),
            params: TriggerParams::full(0.1, 16.0, 0.03).unwrap(),
            record_v: false,
        };
        let t = simulate(&sys, &lc.cert, &cfg).unwrap();
        let mut held = None;
        for r in &t.rows {
            if r.is_event {
                assert_eq!(r.e_norm, 0.0);
                assert_eq!(r.u, sys.k() * &r.x);
                held = Some(r.u.clone());
            } else {
                assert_eq!(Some(&r.u), held.as_ref());
            }
        }
        assert!(t.v_column().is_none());
        assert_eq!(t.event_times, t.rows.iter().filter(|r| r.is_event).map(|r| r.k).collect::<Vec<_>>());
    }

    #[test]
    fn state_only_rule_updates_every_step() {
        let p = Example2Params::BENCHMARK;
        let cert = example2_certificate(&p, 0.1).unwrap();
        let cfg = SimConfig {
            horizon: 200,
            phi: HistoryWindow::constant(1, v(&[0.2])).unwrap(),
            params: TriggerParams::new(0.05, 0.0, 0.02, TriggerMode::StateOnly).unwrap(),
            record_v: false,
        };
        let t = simulate(&p, &cert, &cfg).unwrap();
        assert_eq!(t.event_times, (0..=200).collect::<Vec<_>>());
        assert!(t.rows.iter().all(|r| r.e_norm == 0.0));
    }

    #[test]
    fn rejects_mismatched_configs() {
        let sys = example1_system();
        let lc = derive_linear_certificate(&sys).unwrap();
        let mut cfg = SimConfig {
            horizon: 0,
            phi: HistoryWindow::zeros(1, 2).unwrap(),
            params: TriggerParams::full(0.1, 16.0, 0.01).unwrap(),
            record_v: false,
        };
        assert!(simulate(&sys, &lc.cert, &cfg).is_err());
        cfg.horizon = 5;
        cfg.phi = HistoryWindow::zeros(2, 2).unwrap();
        assert!(simulate(&sys, &lc.cert, &cfg).is_err());
        cfg.phi = HistoryWindow::zeros(1, 3).unwrap();
        assert!(simulate(&sys, &lc.cert, &cfg).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let sys = crate::system::LinearDelaySystem::from_rows(
            &[vec![3.0]],
            &[vec![0.0]],
            &[vec![1.0]],
            &[vec![0.0]],
            1,
        )
        .unwrap();
        let cert = KrasovskiiCertificate::linear_form(0.5, 0.0, 1.0).unwrap();
        let cfg = SimConfig {
            horizon: 100,
            phi: HistoryWindow::constant(1, v(&[1.0])).unwrap(),
            params: TriggerParams::full(0.1, 1.0, 0.5).unwrap(),
            record_v: false,
        };
        match simulate(&sys, &cert, &cfg) {
            Err(Error::Diverged { last_finite }) => assert_eq!(last_finite, 25),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = Example2Params::BENCHMARK;
        let cert = example2_certificate(&p, 0.1).unwrap();
        let cfg = SimConfig {
            horizon: 500,
            phi: HistoryWindow::constant(1, v(&[0.2])).unwrap(),
            params: TriggerParams::full(0.05, 2.2, 0.02).unwrap(),
            record_v: true,
        };
        assert_eq!(simulate(&p, &cert, &cfg).unwrap(), simulate(&p, &cert, &cfg).unwrap());
    }
}
