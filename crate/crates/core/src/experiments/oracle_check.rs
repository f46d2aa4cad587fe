use rayon::prelude::*;
use serde::Serialize;

use super::{auto_k0, gaussian_packet, packet_grid, ExperimentConfig, K0Spec, ScenarioRun, Verdicts};
use crate::chain::ChainSchedule;
use crate::error::{Error, Result};
use crate::integrator::{integrate_chain, StepControl};
use crate::oracle::{iterated_duhamel, oracle_report, DuhamelMethod, DuhamelOutput, NESTED_MAX_K0};
use crate::trace::RunTrace;

pub const ORACLE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct OracleCase {
    pub k0: usize,
    pub eta0: f64,
    pub oracle_l2: f64,
    pub simulated_l2: f64,
    /// `‖sim - oracle‖ / ‖oracle‖` over row 0 at `T_1'`.
    pub relative_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheckVerdicts {
    pub equivalence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheckReport {
    pub tolerance: f64,
    pub cases: Vec<OracleCase>,
    pub max_error: f64,
    pub verdicts: OracleCheckVerdicts,
    pub passed: bool,
}

impl Verdicts for OracleCheckReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn verdicts(&self) -> serde_json::Value {
        serde_json::to_value(&self.verdicts).unwrap_or_default()
    }
}

pub fn run_oracle_check(cfg: &ExperimentConfig) -> Result<ScenarioRun<OracleCheckReport>> {
    cfg.validate()?;
    let bg = cfg.physics.background()?;
    let kernel = cfg.physics.kernel()?;
    let mut cases = Vec::new();
    for eta0 in cfg.chain.eta0.values() {
        let k0s = match &cfg.chain.k0 {
            K0Spec::Auto(_) => vec![auto_k0(eta0, &bg, &kernel)],
            K0Spec::Fixed(k) => vec![*k],
            K0Spec::List(v) => v.clone(),
        };
        for k0 in k0s {
            if k0 > NESTED_MAX_K0 {
                return Err(Error::MethodMismatch(format!(
                    "nested quadrature handles k0 <= {NESTED_MAX_K0}, got {k0}"
                )));
            }
            cases.push(ChainSchedule::for_packet(k0, eta0, cfg.physics.delta)?);
        }
    }
    let ctl = StepControl {
        record_forces: false,
        event_norms: false,
        ..cfg.numerics.step.clone()
    };
    let results: Vec<OracleCase> = cases
        .par_iter()
        .map(|sched| {
            let h0 = gaussian_packet(sched.k0(), sched.eta0(), packet_grid(sched, cfg.spacing())?)?;
            let (y, _) = integrate_chain(&h0, sched, &bg, &kernel, &ctl)?;
            let DuhamelOutput::Profile(oracle) =
                iterated_duhamel(&h0, sched, &bg, &kernel, DuhamelMethod::NestedQuadrature)?
            else {
                unreachable!("nested quadrature returns a profile")
            };
            let sim = y.row(0)?;
            let diff: f64 = sim.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum();
            let norm: f64 = oracle.iter().map(|v| v.norm_sqr()).sum();
            let sim_norm: f64 = sim.iter().map(|v| v.norm_sqr()).sum();
            let relative_error = if norm == 0.0 {
                if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (diff / norm).sqrt()
            };
            let h = h0.grid().spacing().sqrt();
            Ok(OracleCase {
                k0: sched.k0(),
                eta0: sched.eta0(),
                oracle_l2: norm.sqrt() * h,
                simulated_l2: sim_norm.sqrt() * h,
                relative_error,
                passed: relative_error <= ORACLE_TOLERANCE,
            })
        })
        .collect::<Result<_>>()?;
    let max_error = results.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    let equivalence = results.iter().all(|c| c.passed);
    let oracle = cases.iter().map(|sc| oracle_report(sc, &bg, &kernel)).collect();
    Ok(ScenarioRun {
        report: OracleCheckReport {
            tolerance: ORACLE_TOLERANCE,
            cases: results,
            max_error,
            verdicts: OracleCheckVerdicts { equivalence },
            passed: equivalence,
        },
        trace: RunTrace::default(),
        schedules: cases,
        oracle,
    })
}
