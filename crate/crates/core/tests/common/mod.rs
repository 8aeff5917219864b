#![allow(dead_code)]

use delay_etc::certificate::KrasovskiiCertificate;
use delay_etc::harness::Plant;
use delay_etc::system::{example1_system, Example2Params, LinearDelaySystem};
use delay_etc::tuner::{linear_lipschitz_constants, LipschitzConstants};
use delay_etc::{derive_linear_certificate, example2_certificate, simulate, HistoryWindow, SimConfig, SimTrace, TriggerParams};
use nalgebra::DVector;

pub fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

pub fn phi(xs: &[f64]) -> HistoryWindow {
    HistoryWindow::constant(1, v(xs)).unwrap()
}

pub fn ex1() -> (LinearDelaySystem, KrasovskiiCertificate, LipschitzConstants) {
    let sys = example1_system();
    let cert = derive_linear_certificate(&sys).unwrap().cert;
    let consts = linear_lipschitz_constants(&sys);
    (sys, cert, consts)
}

pub fn ex2() -> (Example2Params, KrasovskiiCertificate, LipschitzConstants) {
    let p = Example2Params::BENCHMARK;
    let cert = example2_certificate(&p, 0.1).unwrap();
    (p, cert, Plant::Example2(p).lipschitz())
}

pub fn run<S: delay_etc::DelaySystem>(
    sys: &S,
    cert: &KrasovskiiCertificate,
    params: TriggerParams,
    phi: HistoryWindow,
    horizon: usize,
) -> SimTrace {
    simulate(sys, cert, &SimConfig { horizon, phi, params, record_v: true }).unwrap()
}
