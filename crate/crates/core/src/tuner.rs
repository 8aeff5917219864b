//! Trigger-parameter synthesis.
//!
//! With `c = mu - sigma`, `M~ = alpha2(|phi(0)|) + alpha3(|phi|_past)` and
//! `M = M_bar + M~`, the event sequence has inter-event gaps of at least two
//! once `b < c` and
//!
//! ```text
//! a >= M L1 / (1 - b) * (l11 + l12 / (1 - b)^tau + l2)
//! ```
//!
//! [`tune`] finds such a triple by solving three scalar inequalities in turn
//! (first `sigma`, then `a`, then `b`).

use serde::{Deserialize, Serialize};

use crate::certificate::KrasovskiiCertificate;
use crate::error::{Error, Result};
use crate::norm::induced_norm;
use crate::system::LinearDelaySystem;
use crate::trigger::{TriggerMode, TriggerParams};
use crate::window::HistoryWindow;

/// Lipschitz data: `|phi(0) - f(phi, p(x))| <= l11 |phi(0)| + l12 |phi|_past + l2 |x|`,
/// `L` for `chi` on `[0, a]` and `L1` for `alpha1^-1` on `[0, M]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConstants {
    pub l11: f64,
    pub l12: f64,
    pub l2: f64,
    #[serde(rename = "L")]
    pub chi: f64,
    #[serde(rename = "L1")]
    pub alpha1_inv: f64,
}

impl LipschitzConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l11", self.l11),
            ("l12", self.l12),
            ("l2", self.l2),
            ("L", self.chi),
            ("L1", self.alpha1_inv),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("Lipschitz constant {name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// `l11 + l12 + l2`
    pub fn residual_sum(&self) -> f64 {
        self.l11 + self.l12 + self.l2
    }

    /// `L * L1 * (l11 + l12 + l2)`, the bound `mu` has to beat.
    pub fn product(&self) -> f64 {
        self.chi * self.alpha1_inv * self.residual_sum()
    }
}

/// Constants of the linear plant: `||I - A1||`, `||A2||`, `||BK||`, `L = ||BK||`, `L1 = 1`.
pub fn linear_lipschitz_constants(sys: &LinearDelaySystem) -> LipschitzConstants {
    let (l11, l12, l2) = sys.residual_lipschitz();
    LipschitzConstants {
        l11,
        l12,
        l2,
        chi: l2,
        alpha1_inv: 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunerResult {
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    /// `mu - sigma`
    pub c: f64,
    pub m_tilde: f64,
    pub m_bar: f64,
    /// `M_bar + M~`
    pub m: f64,
    /// Only enters `M_bar` when `b = c`.
    pub xi: f64,
    /// Decay rate of the state bound: `min(b, c)`, or `xi` when `b = c`.
    pub eta: f64,
    pub nontrivial_certified: bool,
}

impl TunerResult {
    pub fn trigger_params(&self) -> Result<TriggerParams> {
        TriggerParams::inferred(self.sigma, self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NontrivialityVariant {
    /// Separate constants for the current and the delayed state.
    Split,
    /// Current and delayed constants lumped together; more conservative.
    Combined,
}

/// `M_bar = aL / |c - b|`, or `aL / ((1 - c)(ln(1 - xi) - ln(1 - c)))` when `b = c`.
pub fn compute_m_bar(a: f64, chi_lipschitz: f64, b: f64, c: f64, xi: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(format!("b must lie in (0, 1), got {b}")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("c must lie in (0, 1), got {c}")));
    }
    let scale = a * chi_lipschitz;
    if b != c {
        return Ok(scale / (c - b).abs());
    }
    if !(xi > 0.0 && xi < b) {
        return Err(Error::invalid(format!("xi must lie in (0, b) = (0, {b}), got {xi}")));
    }
    Ok(scale / ((1.0 - c) * ((-xi).ln_1p() - (-c).ln_1p())))
}

pub fn eta(b: f64, c: f64, xi: f64) -> f64 {
    if b != c {
        b.min(c)
    } else {
        xi
    }
}

/// Lower bound on `a` that makes every inter-event gap at least two.
pub fn nontriviality_bound(b: f64, consts: &LipschitzConstants, m: f64, tau: usize, variant: NontrivialityVariant) -> f64 {
    let delay = (1.0 - b).powi(tau as i32);
    let bracket = match variant {
        NontrivialityVariant::Split => consts.l11 + consts.l12 / delay + consts.l2,
        NontrivialityVariant::Combined => (consts.l11 + consts.l12) / delay + consts.l2,
    };
    m * consts.alpha1_inv / (1.0 - b) * bracket
}

pub fn check_nontriviality(
    params: &TriggerParams,
    consts: &LipschitzConstants,
    m: f64,
    tau: usize,
    variant: NontrivialityVariant,
) -> bool {
    params.a >= nontriviality_bound(params.b, consts, m, tau, variant)
}

/// `2 - q - sqrt(q^2 + 4||A2||) >= 2||BK|| (||I - A1|| + ||A2|| + ||BK||)`,
/// `q = ||A1 + BK||`; this gives both `mu > 0` and the Lipschitz condition
/// needed for tuning.
pub fn check_linear_feasibility(sys: &LinearDelaySystem) -> bool {
    let (lhs, rhs) = linear_feasibility_sides(sys);
    lhs >= rhs
}

pub fn linear_feasibility_sides(sys: &LinearDelaySystem) -> (f64, f64) {
    let q = induced_norm(&sys.closed_loop());
    let (l11, l12, l2) = sys.residual_lipschitz();
    let lhs = 2.0 - q - (q * q + 4.0 * l12).sqrt();
    let rhs = 2.0 * l2 * (l11 + l12 + l2);
    (lhs, rhs)
}

/// `mu > L L1 (l11 + l12 + l2)`
pub fn condition_mu(mu: f64, consts: &LipschitzConstants) -> bool {
    mu > consts.product()
}

/// `c > L L1 (l11 + l12 + l2)`
pub fn condition_sigma(c: f64, consts: &LipschitzConstants) -> bool {
    c > consts.product()
}

/// `L1 (l11 + l12 + l2) (L / c + M~ / a)`; the `a`-stage needs this below 1.
pub fn a_stage_value(c: f64, a: f64, m_tilde: f64, consts: &LipschitzConstants) -> f64 {
    consts.alpha1_inv * consts.residual_sum() * (consts.chi / c + m_tilde / a)
}

pub fn condition_a(c: f64, a: f64, m_tilde: f64, consts: &LipschitzConstants) -> bool {
    a_stage_value(c, a, m_tilde, consts) < 1.0
}

/// `L1 / (1 - b) (l11 + l12 / (1 - b)^tau + l2) (L / (c - b) + M~ / a)`.
pub fn b_stage_value(b: f64, c: f64, a: f64, m_tilde: f64, consts: &LipschitzConstants, tau: usize) -> f64 {
    let delay = (1.0 - b).powi(tau as i32);
    consts.alpha1_inv / (1.0 - b)
        * (consts.l11 + consts.l12 / delay + consts.l2)
        * (consts.chi / (c - b) + m_tilde / a)
}

/// The `b`-stage inequality (requires `0 < b < c`); equivalent to the
/// nontriviality bound after multiplying through by `a`.
pub fn condition_b(b: f64, c: f64, a: f64, m_tilde: f64, consts: &LipschitzConstants, tau: usize) -> bool {
    b > 0.0 && b < c && b_stage_value(b, c, a, m_tilde, consts, tau) <= 1.0
}

/// Re-derives `c`, `M~`, `M_bar`, `M`, `eta` for given parameters and reports
/// whether they certify gaps of at least two. `xi` defaults to `b / 2`.
pub fn evaluate(
    params: &TriggerParams,
    consts: &LipschitzConstants,
    phi: &HistoryWindow,
    cert: &KrasovskiiCertificate,
    tau: usize,
) -> TunerResult {
    let c = cert.mu - params.sigma;
    let m_tilde = cert.m_tilde(phi);
    let xi = params.b / 2.0;
    let m_bar = compute_m_bar(params.a, consts.chi, params.b, c, xi).unwrap_or(f64::INFINITY);
    let m = m_bar + m_tilde;
    let stable = c > 0.0;
    let eta = if stable { eta(params.b, c, xi) } else { 0.0 };
    let nontrivial_certified = stable
        && params.b < c
        && params.a > 0.0
        && check_nontriviality(params, consts, m, tau, NontrivialityVariant::Split);
    TunerResult {
        sigma: params.sigma,
        a: params.a,
        b: params.b,
        c,
        m_tilde,
        m_bar,
        m,
        xi,
        eta,
        nontrivial_certified,
    }
}

const MAX_SWEEP: usize = 200;
const A_MARGIN: f64 = 0.95;
const A_GROWTH: f64 = 1.25;

/// Finds `(sigma, a, b)` with `b < mu - sigma` certifying gaps of at least two.
pub fn tune(
    mu: f64,
    consts: &LipschitzConstants,
    phi: &HistoryWindow,
    cert: &KrasovskiiCertificate,
    tau: usize,
) -> Result<TunerResult> {
    consts.validate()?;
    let first = tune_once(mu, consts, phi, cert, tau)?;
    if cert.chi.is_linear() {
        return Ok(first);
    }
    // chi's Lipschitz constant depends on the interval [0, a]; re-run once with
    // the constant valid for the chosen a.
    let local = cert.chi.lipschitz_on(first.a);
    if local <= consts.chi {
        return Ok(first);
    }
    let widened = LipschitzConstants { chi: local, ..*consts };
    let second = tune_once(mu, &widened, phi, cert, tau)?;
    if cert.chi.lipschitz_on(second.a) > widened.chi {
        return Err(Error::SearchFailed { stage: "chi Lipschitz re-check", last: second.a });
    }
    Ok(second)
}

fn tune_once(
    mu: f64,
    consts: &LipschitzConstants,
    phi: &HistoryWindow,
    cert: &KrasovskiiCertificate,
    tau: usize,
) -> Result<TunerResult> {
    if !condition_mu(mu, consts) {
        return Err(Error::TuningInfeasible { mu, product: consts.product() });
    }

    let sigma = std::iter::successors(Some(0.5 * mu), |s| Some(s * 0.5))
        .take(MAX_SWEEP)
        .chain(std::iter::once(0.0))
        .find(|&s| condition_sigma(mu - s, consts))
        .ok_or(Error::SearchFailed { stage: "sigma", last: 0.0 })?;
    let c = mu - sigma;

    let m_tilde = cert.m_tilde(phi);
    let base = a_stage_value(c, f64::INFINITY, 0.0, consts);
    let target = if base < A_MARGIN { A_MARGIN } else { 0.5 * (1.0 + base) };
    let a_start = if m_tilde > 0.0 { m_tilde } else { 1.0 };
    let mut a = a_start;
    let mut found = false;
    for _ in 0..MAX_SWEEP {
        if a_stage_value(c, a, m_tilde, consts) <= target {
            found = true;
            break;
        }
        a *= A_GROWTH;
    }
    if !found || !condition_a(c, a, m_tilde, consts) {
        return Err(Error::SearchFailed { stage: "a", last: a });
    }

    let b = std::iter::successors(Some(0.5 * c), |b| Some(b * 0.5))
        .take(MAX_SWEEP)
        .find(|&b| condition_b(b, c, a, m_tilde, consts, tau))
        .ok_or(Error::SearchFailed { stage: "b", last: 0.5f64.powi(MAX_SWEEP as i32) * c })?;

    let params = TriggerParams::new(sigma, a, b, if sigma > 0.0 { TriggerMode::Full } else { TriggerMode::TimeOnly })?;
    let result = evaluate(&params, consts, phi, &cert.with_mu(mu), tau);
    if !result.nontrivial_certified {
        return Err(Error::SearchFailed { stage: "nontriviality re-check", last: b });
    }
    Ok(result)
}
