//! Lyapunov-Krasovskii certificates `V(phi) = V1(phi(0)) + V2(phi past)`.
//!
//! A certificate bundles the decay rate `mu`, the weight `eps` of the past
//! part, the comparison functions `alpha1..alpha3`, the input gain `chi`, and
//! the Lipschitz constants of `chi` and `alpha1^-1` that the trigger tuning
//! needs. The linear plant has a closed-form certificate; the scalar
//! benchmark uses a hand-picked `eps`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::{induced_norm, vec_norm};
use crate::sim::SimTrace;
use crate::system::{Example2Params, LinearDelaySystem};
use crate::window::HistoryWindow;

/// Absolute slack used when validating inequalities along simulated traces.
pub const TRACE_TOLERANCE: f64 = 1e-9;

/// Class-K comparison function on `[0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KFunction {
    /// `r -> slope * r`
    Linear { slope: f64 },
    /// `r -> coef * r^exponent`, `exponent >= 1`
    Power { coef: f64, exponent: f64 },
}

impl KFunction {
    pub const IDENTITY: KFunction = KFunction::Linear { slope: 1.0 };

    pub fn linear(slope: f64) -> Self {
        KFunction::Linear { slope }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            KFunction::Linear { slope } => slope * r,
            KFunction::Power { coef, exponent } => coef * r.powf(exponent),
        }
    }

    /// Inverse on the range; `+inf` for the degenerate zero map at `s > 0`.
    pub fn inverse(&self, s: f64) -> f64 {
        match *self {
            KFunction::Linear { slope } => {
                if slope == 0.0 {
                    if s > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    s / slope
                }
            }
            KFunction::Power { coef, exponent } => (s / coef).powf(exponent.recip()),
        }
    }

    /// Lipschitz constant on `[0, upper]`.
    pub fn lipschitz_on(&self, upper: f64) -> f64 {
        match *self {
            KFunction::Linear { slope } => slope.abs(),
            KFunction::Power { coef, exponent } => coef * exponent * upper.max(0.0).powf(exponent - 1.0),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KFunction::Linear { .. })
    }

    fn validate(&self, name: &str, allow_zero: bool) -> Result<()> {
        let ok = match *self {
            KFunction::Linear { slope } => slope.is_finite() && (slope > 0.0 || (allow_zero && slope == 0.0)),
            KFunction::Power { coef, exponent } => {
                coef.is_finite() && coef > 0.0 && exponent.is_finite() && exponent >= 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name} is not a class-K function: {self:?}")))
        }
    }
}

/// Data of a certificate satisfying the ISS-type decrement
/// `V(phi*) - V(phi) <= -mu V(phi) + chi(|e|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrasovskiiCertificate {
    pub mu: f64,
    /// Weight of the past-state part `V2`.
    pub eps: f64,
    /// Lipschitz constant `L` of `chi` on `[0, a]`.
    pub chi_lipschitz: f64,
    /// Lipschitz constant `L1` of `alpha1^-1`.
    pub alpha1_inv_lipschitz: f64,
    pub alpha1: KFunction,
    pub alpha2: KFunction,
    pub alpha3: KFunction,
    pub chi: KFunction,
}

/// Serialized form: `mu`, `eps`, `L`, `L1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateData {
    pub mu: f64,
    pub eps: f64,
    #[serde(rename = "L")]
    pub chi_lipschitz: f64,
    #[serde(rename = "L1")]
    pub alpha1_inv_lipschitz: f64,
}

impl KrasovskiiCertificate {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: f64,
        eps: f64,
        chi_lipschitz: f64,
        alpha1_inv_lipschitz: f64,
        alpha1: KFunction,
        alpha2: KFunction,
        alpha3: KFunction,
        chi: KFunction,
    ) -> Result<Self> {
        let cert = Self {
            mu,
            eps,
            chi_lipschitz,
            alpha1_inv_lipschitz,
            alpha1,
            alpha2,
            alpha3,
            chi,
        };
        cert.validate()?;
        Ok(cert)
    }

    /// `V(phi) = |phi(0)| + eps * sum |phi(s)|`, `chi(r) = gain * r`.
    pub fn linear_form(mu: f64, eps: f64, chi_gain: f64) -> Result<Self> {
        Self::new(
            mu,
            eps,
            chi_gain,
            1.0,
            KFunction::IDENTITY,
            KFunction::IDENTITY,
            KFunction::linear(eps),
            KFunction::linear(chi_gain),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::invalid(format!("mu must lie in [0, 1), got {}", self.mu)));
        }
        for (name, v) in [
            ("eps", self.eps),
            ("L", self.chi_lipschitz),
            ("L1", self.alpha1_inv_lipschitz),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        self.alpha1.validate("alpha1", false)?;
        self.alpha2.validate("alpha2", false)?;
        self.alpha3.validate("alpha3", self.eps == 0.0)?;
        self.chi.validate("chi", true)?;
        Ok(())
    }

    pub fn data(&self) -> CertificateData {
        CertificateData {
            mu: self.mu,
            eps: self.eps,
            chi_lipschitz: self.chi_lipschitz,
            alpha1_inv_lipschitz: self.alpha1_inv_lipschitz,
        }
    }

    /// Rebuilds a linear-form certificate: `alpha1(r) = r / L1`, `chi(r) = L r`.
    pub fn from_data(data: CertificateData) -> Result<Self> {
        if data.alpha1_inv_lipschitz.is_nan() || data.alpha1_inv_lipschitz <= 0.0 {
            return Err(Error::invalid("L1 must be positive"));
        }
        let a1 = KFunction::linear(data.alpha1_inv_lipschitz.recip());
        Self::new(
            data.mu,
            data.eps,
            data.chi_lipschitz,
            data.alpha1_inv_lipschitz,
            a1,
            a1,
            KFunction::linear(data.eps),
            KFunction::linear(data.chi_lipschitz),
        )
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    /// `M~ = alpha2(|phi(0)|) + alpha3(|phi|_past)`.
    pub fn m_tilde(&self, phi: &HistoryWindow) -> f64 {
        self.alpha2.eval(vec_norm(phi.current())) + self.alpha3.eval(phi.past_norm())
    }
}

/// Linear-plant certificate together with `||BK||`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearCertificate {
    pub cert: KrasovskiiCertificate,
    pub bk_norm: f64,
}

impl LinearCertificate {
    /// Certificate with user-chosen `eps` and `mu` and `chi(r) = ||BK|| r`.
    pub fn with_override(sys: &LinearDelaySystem, eps: f64, mu: f64) -> Result<Self> {
        let bk_norm = induced_norm(&sys.bk());
        Ok(Self {
            cert: KrasovskiiCertificate::linear_form(mu, eps, bk_norm)?,
            bk_norm,
        })
    }
}

/// Closed-form `(eps, mu)` from `q = ||A1 + BK||` and `d = ||A2||`.
pub fn linear_eps_mu(q: f64, d: f64) -> (f64, f64) {
    let root = (q * q + 4.0 * d).sqrt();
    (0.5 * (root - q), 0.5 * (2.0 - q - root))
}

/// Closed-form certificate for the linear plant with a unit delay.
pub fn derive_linear_certificate(sys: &LinearDelaySystem) -> Result<LinearCertificate> {
    use crate::system::DelaySystem;
    if sys.tau() != 1 {
        return Err(Error::invalid(format!(
            "closed-form linear certificate needs tau = 1, got {}",
            sys.tau()
        )));
    }
    let q = induced_norm(&sys.closed_loop());
    let d = induced_norm(sys.a2());
    let (eps, mu) = linear_eps_mu(q, d);
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::CertificateInfeasible { mu });
    }
    // mu = 1 only when A1 + BK = 0 and A2 = 0; any smaller rate is still valid.
    let mu = mu.min(1.0 - f64::EPSILON);
    let bk_norm = induced_norm(&sys.bk());
    Ok(LinearCertificate {
        cert: KrasovskiiCertificate::linear_form(mu, eps, bk_norm)?,
        bk_norm,
    })
}

/// Certificate of the scalar benchmark for a chosen `eps`:
/// `mu = min{1 - eps - |A1 + BK|, 1 - |A2| / eps}`.
pub fn example2_certificate(params: &Example2Params, eps: f64) -> Result<KrasovskiiCertificate> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be nonnegative, got {eps}")));
    }
    let closed = (params.a1 + params.b * params.k).abs();
    let delay_branch = if eps > 0.0 {
        1.0 - params.a2.abs() / eps
    } else if params.a2 == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    let mu = (1.0 - eps - closed).min(delay_branch);
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::CertificateInfeasible { mu });
    }
    KrasovskiiCertificate::linear_form(mu.min(1.0 - f64::EPSILON), eps, (params.b * params.k).abs())
}

/// `V(phi) = V1(phi(0)) + V2`, with `V1 = |.|` and `V2 = eps * sum_{s<0} |phi(s)|`
/// (for a unit delay, `|phi(0)| + eps |phi(-1)|`).
pub fn evaluate_v(cert: &KrasovskiiCertificate, window: &HistoryWindow) -> f64 {
    let past: f64 = window.iter().take(window.tau()).map(vec_norm).sum();
    vec_norm(window.current()) + cert.eps * past
}

/// A step where the decrement condition fails along a trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecrementViolation {
    pub k: usize,
    /// `V(x_{k+1}) - V(x_k)`
    pub lhs: f64,
    /// `-mu V(x_k) + chi(|e(k)|)`
    pub rhs: f64,
}

/// Lists every `k` with `V(x_{k+1}) - V(x_k) > -mu V(x_k) + chi(|e(k)|) + tol`.
pub fn check_iss_decrement(cert: &KrasovskiiCertificate, trace: &SimTrace) -> Result<Vec<DecrementViolation>> {
    let v = trace.v_column().ok_or_else(|| Error::invalid("trace has no V column"))?;
    Ok(trace
        .rows
        .windows(2)
        .zip(v.windows(2))
        .filter_map(|(rows, v)| {
            let lhs = v[1] - v[0];
            let rhs = -cert.mu * v[0] + cert.chi.eval(rows[0].e_norm);
            (lhs > rhs + TRACE_TOLERANCE).then_some(DecrementViolation {
                k: rows[0].k,
                lhs,
                rhs,
            })
        })
        .collect())
}
