//! Event-triggering rule: update the input once
//! `chi(|e|) > sigma * alpha1(|x|) + chi(a (1 - b)^k)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::certificate::KrasovskiiCertificate;
use crate::error::{Error, Result};
use crate::norm::vec_norm;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMode {
    /// State- and time-dependent threshold.
    #[default]
    Full,
    /// `a = 0`: threshold `sigma * alpha1(|x|)` only.
    StateOnly,
    /// `sigma = 0`: threshold `chi(a (1 - b)^k)` only.
    TimeOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerParams {
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub mode: TriggerMode,
}

impl TriggerParams {
    pub fn new(sigma: f64, a: f64, b: f64, mode: TriggerMode) -> Result<Self> {
        let p = Self { sigma, a, b, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn full(sigma: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(sigma, a, b, TriggerMode::Full)
    }

    /// Picks the mode implied by the values (`a = 0` or `sigma = 0`).
    pub fn inferred(sigma: f64, a: f64, b: f64) -> Result<Self> {
        let mode = if a == 0.0 && sigma > 0.0 {
            TriggerMode::StateOnly
        } else if sigma == 0.0 && a > 0.0 {
            TriggerMode::TimeOnly
        } else {
            TriggerMode::Full
        };
        Self::new(sigma, a, b, mode)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma must be finite and nonnegative, got {}", self.sigma));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return bad(format!("a must be finite and nonnegative, got {}", self.a));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return bad(format!("b must lie in (0, 1), got {}", self.b));
        }
        match self.mode {
            TriggerMode::StateOnly if !(self.a == 0.0 && self.sigma > 0.0) => {
                bad("state_only mode needs a = 0 and sigma > 0".into())
            }
            TriggerMode::TimeOnly if !(self.sigma == 0.0 && self.a > 0.0) => {
                bad("time_only mode needs sigma = 0 and a > 0".into())
            }
            _ => Ok(()),
        }
    }

    /// Time-dependent part `a (1 - b)^k`.
    pub fn decay(&self, k: usize) -> f64 {
        self.a * (1.0 - self.b).powf(k as f64)
    }
}

/// `e(k) = x(k_i) - x(k)` since the last event `k_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementError {
    pub e: DVector<f64>,
    pub last_event: usize,
}

impl MeasurementError {
    pub fn new(held: &DVector<f64>, x: &DVector<f64>, last_event: usize) -> Self {
        Self {
            e: held - x,
            last_event,
        }
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.e)
    }
}

/// Threshold in chi-units: `sigma * alpha1(|x|) + chi(a (1 - b)^k)`.
pub fn threshold(params: &TriggerParams, cert: &KrasovskiiCertificate, x: &DVector<f64>, k: usize) -> f64 {
    threshold_from_norm(params, cert, vec_norm(x), k)
}

pub fn threshold_from_norm(params: &TriggerParams, cert: &KrasovskiiCertificate, x_norm: f64, k: usize) -> f64 {
    params.sigma * cert.alpha1.eval(x_norm) + cert.chi.eval(params.decay(k))
}

/// The same threshold mapped back to error-norm units through `chi^-1`; for a
/// linear plant this is `sigma |x| / ||BK|| + a (1 - b)^k`.
pub fn threshold_error_units(params: &TriggerParams, cert: &KrasovskiiCertificate, x: &DVector<f64>, k: usize) -> f64 {
    cert.chi.inverse(threshold(params, cert, x, k))
}

/// Whether step `k > last_event` is an event. Ties do not trigger.
pub fn should_trigger(
    err: &MeasurementError,
    x: &DVector<f64>,
    k: usize,
    params: &TriggerParams,
    cert: &KrasovskiiCertificate,
) -> Result<bool> {
    if k <= err.last_event {
        return Err(Error::invalid(format!(
            "trigger queried at k = {k}, not after the last event {}",
            err.last_event
        )));
    }
    Ok(cert.chi.eval(err.norm()) > threshold(params, cert, x, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::derive_linear_certificate;
    use crate::system::example1_system;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn cert(gain: f64) -> KrasovskiiCertificate {
        KrasovskiiCertificate::linear_form(0.5, 0.1, gain).unwrap()
    }

    #[test]
    fn zero_parameters_give_zero_threshold() {
        let p = TriggerParams::full(0.0, 0.0, 0.5).unwrap();
        for k in [0, 1, 100] {
            assert_eq!(threshold(&p, &cert(0.6), &v(&[3.0, -1.0]), k), 0.0);
        }
    }

    #[test]
    fn example1_threshold_in_error_units() {
        let lc = derive_linear_certificate(&example1_system()).unwrap();
        let p = TriggerParams::full(0.1, 16.0, 0.01).unwrap();
        let th = threshold_error_units(&p, &lc.cert, &v(&[1.0, 1.0]), 0);
        assert_relative_eq!(th, 0.1 * 2f64.sqrt() / lc.bk_norm + 16.0, epsilon = 1e-12);
        assert!((th - 16.3008).abs() < 1e-3, "{th}");
    }

    #[test]
    fn example2_decay_threshold() {
        let p = TriggerParams::full(0.05, 2.2, 0.02).unwrap();
        let th = threshold_error_units(&p, &cert(0.6), &v(&[0.0]), 10);
        assert_relative_eq!(th, 2.2 * 0.98f64.powi(10), epsilon = 1e-12);
        assert!((th - 1.797_56).abs() < 1e-5);
    }

    #[test]
    fn zero_error_never_triggers() {
        let p = TriggerParams::full(0.0, 0.0, 0.5).unwrap();
        let err = MeasurementError::new(&v(&[1.0]), &v(&[1.0]), 3);
        assert!(!should_trigger(&err, &v(&[1.0]), 4, &p, &cert(1.0)).unwrap());
    }

    #[test]
    fn ties_do_not_trigger() {
        // chi(|e|) = 2 * 0.5 = 1 equals chi(1 * 0.5^1) = 2 * 0.5 = 1
        let p = TriggerParams::full(0.0, 1.0, 0.5).unwrap();
        let err = MeasurementError::new(&v(&[0.5]), &v(&[0.0]), 0);
        assert!(!should_trigger(&err, &v(&[0.0]), 1, &p, &cert(2.0)).unwrap());
        let err = MeasurementError::new(&v(&[0.5000001]), &v(&[0.0]), 0);
        assert!(should_trigger(&err, &v(&[0.0]), 1, &p, &cert(2.0)).unwrap());
    }

    #[test]
    fn query_at_or_before_last_event_is_rejected() {
        let p = TriggerParams::full(0.1, 1.0, 0.5).unwrap();
        let err = MeasurementError::new(&v(&[0.0]), &v(&[0.0]), 5);
        assert!(should_trigger(&err, &v(&[0.0]), 5, &p, &cert(1.0)).is_err());
        assert!(should_trigger(&err, &v(&[0.0]), 2, &p, &cert(1.0)).is_err());
    }

    #[test]
    fn mode_invariants() {
        assert!(TriggerParams::new(0.05, 0.0, 0.02, TriggerMode::StateOnly).is_ok());
        assert!(TriggerParams::new(0.05, 1.0, 0.02, TriggerMode::StateOnly).is_err());
        assert!(TriggerParams::new(0.0, 0.0, 0.02, TriggerMode::StateOnly).is_err());
        assert!(TriggerParams::new(0.0, 16.0, 0.01, TriggerMode::TimeOnly).is_ok());
        assert!(TriggerParams::new(0.1, 16.0, 0.01, TriggerMode::TimeOnly).is_err());
        assert!(TriggerParams::full(0.1, 16.0, 1.0).is_err());
        assert!(TriggerParams::full(0.1, 16.0, 0.0).is_err());
        assert!(TriggerParams::full(-0.1, 16.0, 0.5).is_err());
        assert_eq!(TriggerParams::inferred(0.0, 16.0, 0.01).unwrap().mode, TriggerMode::TimeOnly);
        assert_eq!(TriggerParams::inferred(0.05, 0.0, 0.02).unwrap().mode, TriggerMode::StateOnly);
    }

    #[test]
    fn params_round_trip_through_toml() {
        let p = TriggerParams::new(0.0, 16.0, 0.01, TriggerMode::TimeOnly).unwrap();
        let text = toml::to_string(&p).unwrap();
        assert!(text.contains("mode = \"time_only\""));
        let back: TriggerParams = toml::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn monotone_in_error(r in 0.0f64..10.0, shrink in 0.0f64..1.0, x in -5.0f64..5.0, k in 1usize..500) {
            let p = TriggerParams::full(0.1, 2.0, 0.05).unwrap();
            let c = cert(0.6);
            let hi = MeasurementError { e: v(&[r]), last_event: 0 };
            let lo = MeasurementError { e: v(&[r * shrink]), last_event: 0 };
            if !should_trigger(&hi, &v(&[x]), k, &p, &c).unwrap() {
                prop_assert!(!should_trigger(&lo, &v(&[x]), k, &p, &c).unwrap());
            }
        }

        #[test]
        fn threshold_nonincreasing_in_time(x in -5.0f64..5.0, k in 0usize..2000, a in 0.0f64..20.0, b in 0.001f64..0.999) {
            let p = TriggerParams::full(0.1, a, b).unwrap();
            let c = cert(0.6);
            prop_assert!(threshold(&p, &c, &v(&[x]), k + 1) <= threshold(&p, &c, &v(&[x]), k));
        }

        #[test]
        fn time_only_reduces_to_plain_norm_rule(
            e in prop::collection::vec(-3.0f64..3.0, 2),
            x in prop::collection::vec(-3.0f64..3.0, 2),
            a in 0.01f64..5.0, b in 0.001f64..0.5, gain in 0.01f64..3.0, k in 1usize..300,
        ) {
            let p = TriggerParams::new(0.0, a, b, TriggerMode::TimeOnly).unwrap();
            let err = MeasurementError { e: v(&e), last_event: 0 };
            let fired = should_trigger(&err, &v(&x), k, &p, &cert(gain)).unwrap();
            let plain = vec_norm(&v(&e)) > a * (1.0 - b).powf(k as f64);
            // equivalent away from rounding ties
            let gap = (vec_norm(&v(&e)) - a * (1.0 - b).powf(k as f64)).abs();
            prop_assume!(gap > 1e-12);
            prop_assert_eq!(fired, plain);
        }
    }
}
