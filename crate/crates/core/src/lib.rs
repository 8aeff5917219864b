//! Event-triggered control of discrete-time systems with delays.
//!
//! The crate simulates plants `x(k+1) = f(x_k, u(k))` whose input is held
//! between events and refreshed once the measurement error crosses the
//! state- and time-dependent threshold `sigma alpha1(|x|) + chi(a (1 - b)^k)`.
//! It derives Lyapunov-Krasovskii certificates for linear plants, tunes
//! `(sigma, a, b)` so that consecutive events are at least two steps apart,
//! and checks the resulting guarantees along simulated traces.

pub mod certificate;
pub mod error;
pub mod export;
pub mod harness;
pub mod norm;
pub mod sim;
pub mod system;
pub mod trigger;
pub mod tuner;
pub mod window;

pub use certificate::{
    check_iss_decrement, derive_linear_certificate, evaluate_v, example2_certificate, CertificateData, KFunction,
    KrasovskiiCertificate, LinearCertificate,
};
pub use error::{Error, Result};
pub use norm::{euclidean, induced_norm, vec_norm};
pub use sim::{count_events, inter_event_times, simulate, v_bound_oracle, verify_state_bound, SimConfig, SimTrace, TraceRow};
pub use system::{example1_system, DelaySystem, Example2Params, LinearDelaySystem, NonlinearDelaySystem};
pub use trigger::{should_trigger, threshold, MeasurementError, TriggerMode, TriggerParams};
pub use tuner::{
    check_linear_feasibility, check_nontriviality, compute_m_bar, tune, LipschitzConstants, NontrivialityVariant,
    TunerResult,
};
pub use window::HistoryWindow;
