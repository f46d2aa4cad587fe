//! Config-driven scenarios and their machine-readable outputs.

mod blowup;
mod config;
mod oracle_check;
mod output;
mod single;
mod stability;
mod sweep;

pub use blowup::{run_blowup, BlowupChain, BlowupReport};
pub use config::{
    Auto, BlowupSpec, ChainSpec, Eta0Spec, ExperimentConfig, K0Spec, Numerics, Physics, Scenario, StabilitySpec,
};
pub use oracle_check::{run_oracle_check, OracleCase, OracleCheckReport};
pub use output::{write_outputs, Manifest};
pub use single::{run_single_chain, EchoGain, SandwichCheck, SingleChainReport};
pub use stability::{run_stability, PacketSpec, ScaleRatio, StabilityReport};
pub use sweep::{run_sweep, slope_band, SweepPoint, SweepReport};

use num_complex::Complex;
use serde::Serialize;

use crate::chain::ChainSchedule;
use crate::error::{Error, Result};
use crate::norms::{log_field_norm, NormSpec};
use crate::oracle::{optimal_k0, OracleReport};
use crate::spectral::{BackgroundState, EtaGrid, FourierField, KernelSpec};
use crate::trace::{EventNorms, RunTrace};

/// A scenario's typed report plus what goes to disk next to it.
#[derive(Debug, Clone)]
pub struct ScenarioRun<R> {
    pub report: R,
    pub trace: RunTrace<f64>,
    pub schedules: Vec<ChainSchedule<f64>>,
    pub oracle: Vec<OracleReport>,
}

/// Scenario-independent form of [`ScenarioRun`].
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub passed: bool,
    pub report: serde_json::Value,
    pub verdicts: serde_json::Value,
    pub trace: RunTrace<f64>,
    pub schedules: Vec<ChainSchedule<f64>>,
    pub oracle: Vec<OracleReport>,
}

/// Reports expose pass/fail verdicts for the manifest.
pub trait Verdicts: Serialize {
    fn passed(&self) -> bool;
    fn verdicts(&self) -> serde_json::Value;
}

impl<R: Verdicts> ScenarioRun<R> {
    fn into_outcome(self, scenario: Scenario) -> Result<ScenarioOutcome> {
        let report = serde_json::to_value(&self.report).map_err(|e| Error::Io(e.to_string()))?;
        Ok(ScenarioOutcome {
            scenario,
            passed: self.report.passed(),
            verdicts: self.report.verdicts(),
            report,
            trace: self.trace,
            schedules: self.schedules,
            oracle: self.oracle,
        })
    }
}

pub fn run_scenario(scenario: Scenario, cfg: &ExperimentConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    match scenario {
        Scenario::SingleChain => run_single_chain(cfg)?.into_outcome(scenario),
        Scenario::Sweep => run_sweep(cfg)?.into_outcome(scenario),
        Scenario::Blowup => run_blowup(cfg)?.into_outcome(scenario),
        Scenario::Stability => run_stability(cfg)?.into_outcome(scenario),
        Scenario::OracleCheck => run_oracle_check(cfg)?.into_outcome(scenario),
    }
}

/// Oracle-optimal chain length, capped by the separation `eta0 >= 100 k0`.
pub fn auto_k0(eta0: f64, bg: &BackgroundState<f64>, kernel: &KernelSpec<f64>) -> usize {
    let cap = ((eta0.abs() / 100.0).floor() as usize).max(1);
    optimal_k0(eta0.abs(), bg, kernel).min(cap)
}

/// Grid covering the chain stripe (or the packet box) with an 8-cell margin.
pub fn packet_grid(schedule: &ChainSchedule<f64>, spacing: f64) -> Result<EtaGrid<f64>> {
    let (lo, hi) = if schedule.is_stationary_chain() {
        (schedule.eta0() - 0.5, schedule.eta0() + 0.5)
    } else {
        schedule.stripe()
    };
    EtaGrid::covering(lo - 8.0 * spacing, hi + 8.0 * spacing, spacing)
}

/// `exp(-(η-η₀)²/(2 (1/8)²))` on `{k0} × (η₀ ± 1/2)`, zero elsewhere, unit `L²` norm.
/// Rows run over `-1..=k0+1`.
pub fn gaussian_packet(k0: usize, eta0: f64, grid: EtaGrid<f64>) -> Result<FourierField<f64>> {
    let k0 = k0 as i64;
    let f = FourierField::from_fn(-1, k0 + 1, grid, |k, eta| {
        let x = eta - eta0;
        if k == k0 && x.abs() < 0.5 {
            Complex::new((-32.0 * x * x).exp(), 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })?;
    let l = log_field_norm(&f, &NormSpec::L2);
    if !l.is_finite() {
        return Err(Error::UnsupportedInitialData("packet misses every grid node".into()));
    }
    Ok(f.scaled((-l).exp()))
}

/// Sum of the traces' most recent event norms at time `t`, as a root sum of squares.
pub(crate) fn held_at(traces: &[&RunTrace<f64>], t: f64, pick: impl Fn(&EventNorms<f64>) -> Option<f64>) -> f64 {
    traces
        .iter()
        .map(|tr| {
            tr.events()
                .take_while(|(te, ..)| *te <= t)
                .last()
                .and_then(|(_, _, _, n)| pick(n))
                .unwrap_or(0.0)
                .powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Event times of all traces, sorted and deduplicated.
pub(crate) fn event_times(traces: &[&RunTrace<f64>]) -> Vec<f64> {
    let mut ts: Vec<f64> = traces.iter().flat_map(|tr| tr.events().map(|(t, ..)| t)).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::schedule;
    use crate::spectral::BumpProfile;
    use crate::trace::{EventKind, TraceRow};

    #[test]
    fn packet_is_normalized_and_localized() {
        let s = schedule(2, 1000.0, 0.05).unwrap();
        let g = packet_grid(&s, 0.05 / 8.0).unwrap();
        let f = gaussian_packet(2, 1000.0, g).unwrap();
        assert!((log_field_norm(&f, &NormSpec::L2)).abs() < 1e-14);
        for (k, eta, v) in f.iter() {
            if v.norm() > 0.0 {
                assert_eq!(k, 2);
                assert!((eta - 1000.0).abs() < 0.5);
                assert!(v.im == 0.0 && v.re > 0.0);
            }
        }
        assert!(g.eta_min() < 1000.0 - 0.6 && g.eta_max() > 1000.0 + 0.6);
    }

    #[test]
    fn auto_k0_respects_separation() {
        let bg = BackgroundState::new(4.1, BumpProfile::new(0.05, 10.0).unwrap()).unwrap();
        let w = KernelSpec::coulomb();
        assert_eq!(auto_k0(1e4, &bg, &w), optimal_k0(1e4, &bg, &w));
        assert_eq!(auto_k0(150.0, &bg, &w), 1);
        assert_eq!(auto_k0(-1e4, &bg, &w), auto_k0(1e4, &bg, &w));
    }

    #[test]
    fn held_norms() {
        let ev = |t: f64, l2: f64| TraceRow::Event {
            t,
            k: 1,
            kind: EventKind::WindowExit,
            norms: EventNorms {
                l2: Some(l2),
                sobolev: None,
                gevrey: None,
            },
        };
        let a = RunTrace {
            rows: vec![ev(0.0, 1.0), ev(2.0, 3.0)],
            ..RunTrace::default()
        };
        let b = RunTrace {
            rows: vec![ev(0.0, 4.0), ev(5.0, 0.0)],
            ..RunTrace::default()
        };
        let both = [&a, &b];
        assert_eq!(held_at(&both, 1.0, |n| n.l2), 17f64.sqrt());
        assert_eq!(held_at(&both, 2.0, |n| n.l2), 5.0);
        assert_eq!(held_at(&both, 9.0, |n| n.l2), 3.0);
        assert_eq!(event_times(&both), vec![0.0, 2.0, 5.0]);
    }
}
