use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{check_iss_decrement, CertificateData, KrasovskiiCertificate};
use crate::error::{Error, Result};
use crate::export::write_trace_file;
use crate::harness::config::{ExperimentConfig, Plant};
use crate::sim::{
    bound_margin, check_restriction, count_events, inter_event_times, simulate, verify_state_bound, SimConfig,
};
use crate::trigger::TriggerParams;
use crate::tuner::{evaluate, LipschitzConstants, TunerResult};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Base directory for relative output paths.
    pub out_dir: Option<PathBuf>,
    /// Report `event_count` including the update at `k = 0`.
    pub include_initial_event: bool,
}

impl RunOptions {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub initial_index: usize,
    pub initial: Vec<f64>,
    pub horizon: usize,
    pub trigger: TriggerParams,
    /// `event_count_incl` or `event_count_excl`, per the run options.
    pub event_count: usize,
    pub event_count_incl: usize,
    pub event_count_excl: usize,
    pub min_gap: Option<usize>,
    pub max_gap: Option<usize>,
    pub final_state_norm: f64,
    /// `min_k alpha1^-1(M (1 - eta)^k) - |x(k)|`; absent when `mu <= sigma`.
    pub bound_margin: Option<f64>,
    pub nontrivial_certified: bool,
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub system: String,
    pub certificate: CertificateData,
    pub lipschitz: LipschitzConstants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_feasibility: Option<FeasibilityReport>,
    pub trigger: TriggerParams,
    pub counts_include_initial: bool,
    /// Re-validation of the configured trigger, one entry per initial function.
    pub tuner: Vec<TunerResult>,
    pub runs: Vec<RunSummary>,
}

impl ExperimentSummary {
    /// Whether some run whose parameters certify nontriviality broke an invariant.
    pub fn certified_violation(&self) -> bool {
        self.runs.iter().any(|r| r.nontrivial_certified && !r.violations.is_empty())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// `traces/run.csv` -> `traces/run_phi{i}_h{horizon}.csv`
pub fn run_trace_path(base: &Path, initial_index: usize, horizon: usize) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_phi{initial_index}_h{horizon}.{ext}"))
}

pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentSummary> {
    config.validate()?;
    let plant = config.plant()?;
    let linear_feasibility = plant.linear_feasibility().map(|(lhs, rhs)| FeasibilityReport {
        lhs,
        rhs,
        holds: lhs >= rhs,
    });
    if let Some(f) = &linear_feasibility {
        if !f.holds && !config.allow_infeasible {
            return Err(Error::LinearInfeasible { lhs: f.lhs, rhs: f.rhs });
        }
    }
    let cert = plant.certificate(config.certificate.as_ref())?;
    let consts = plant.lipschitz();
    let tau = plant.tau();

    let tuner = (0..config.initial.len())
        .map(|i| Ok(evaluate(&config.trigger, &consts, &config.initial_window(i, tau)?, &cert, tau)))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..config.initial.len())
        .flat_map(|i| config.horizons.iter().map(move |&h| (i, h)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(i, h)| run_one(config, opts, &plant, &cert, &tuner[i], i, h))
        .collect::<Result<Vec<_>>>()?;

    let summary = ExperimentSummary {
        system: plant.kind().to_string(),
        certificate: cert.data(),
        lipschitz: consts,
        linear_feasibility,
        trigger: config.trigger,
        counts_include_initial: opts.include_initial_event,
        tuner,
        runs,
    };
    if let Some(path) = &config.outputs.summary_json {
        let path = opts.resolve(path);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, summary.to_json()?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}

fn run_one(
    config: &ExperimentConfig,
    opts: &RunOptions,
    plant: &Plant,
    cert: &KrasovskiiCertificate,
    tuned: &TunerResult,
    i: usize,
    horizon: usize,
) -> Result<RunSummary> {
    let sim_cfg = SimConfig {
        horizon,
        phi: config.initial_window(i, plant.tau())?,
        params: config.trigger,
        record_v: true,
    };
    let trace = simulate(plant.as_system(), cert, &sim_cfg)?;
    let gaps = inter_event_times(&trace);
    let min_gap = gaps.iter().copied().min();
    let stable = tuned.c > 0.0 && tuned.m.is_finite();

    let mut violations = Vec::new();
    let restriction = check_restriction(&trace, &config.trigger, cert);
    if let Some(first) = restriction.first() {
        violations.push(format!(
            "trigger restriction violated at {} steps (first k = {})",
            restriction.len(),
            first.k
        ));
    }
    if tuned.nontrivial_certified {
        if let Some(pos) = gaps.iter().position(|&g| g < 2) {
            violations.push(format!(
                "inter-event gap {} < 2 after event at k = {}",
                gaps[pos], trace.event_times[pos]
            ));
        }
    }
    if stable {
        let bound = verify_state_bound(&trace, tuned, cert);
        if let Some(first) = bound.first() {
            violations.push(format!("state bound exceeded at {} steps (first k = {})", bound.len(), first.k));
        }
        let decrement = check_iss_decrement(cert, &trace)?;
        if let Some(first) = decrement.first() {
            violations.push(format!(
                "Lyapunov decrement violated at {} steps (first k = {})",
                decrement.len(),
                first.k
            ));
        }
    }

    let trace_csv = match &config.outputs.trace_csv {
        Some(base) => {
            let path = run_trace_path(&opts.resolve(base), i, horizon);
            write_trace_file(&trace, &path)?;
            Some(path)
        }
        None => None,
    };

    let incl = count_events(&trace, horizon, true);
    let excl = count_events(&trace, horizon, false);
    Ok(RunSummary {
        initial_index: i,
        initial: config.initial[i].clone(),
        horizon,
        trigger: config.trigger,
        event_count: if opts.include_initial_event { incl } else { excl },
        event_count_incl: incl,
        event_count_excl: excl,
        min_gap,
        max_gap: gaps.iter().copied().max(),
        final_state_norm: trace.final_state_norm(),
        bound_margin: stable.then(|| bound_margin(&trace, tuned, cert)),
        nontrivial_certified: tuned.nontrivial_certified,
        violations,
        trace_csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_run_trace_names() {
        assert_eq!(
            run_trace_path(Path::new("out/ex1.csv"), 1, 10000),
            PathBuf::from("out/ex1_phi1_h10000.csv")
        );
        assert_eq!(run_trace_path(Path::new("trace"), 0, 5), PathBuf::from("trace_phi0_h5.csv"));
    }
}
