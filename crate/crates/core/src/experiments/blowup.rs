use rayon::prelude::*;
use serde::Serialize;

use super::{auto_k0, gaussian_packet, held_at, packet_grid, ExperimentConfig, ScenarioRun, Verdicts};
use crate::chain::{schedule, ChainSchedule};
use crate::error::{Error, Result};
use crate::integrator::{integrate_chain, integrate_superposition, Plan, StepControl};
use crate::norms::{log_field_norm, NormSpec};
use crate::oracle::oracle_report;
use crate::spectral::FourierField;
use crate::trace::{EventNorms, RunTrace};

pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct BlowupChain {
    pub j: usize,
    pub eta0: f64,
    pub k0: usize,
    pub alpha: f64,
    /// Measured amplification `‖h_j(T_1')‖ / ‖h_j(0)‖`.
    pub c_measured: f64,
    pub log_c_measured: f64,
    pub weight: f64,
    pub final_l2: f64,
    /// `alpha eta0^-s`.
    pub expected_l2: f64,
    pub normalization_error: f64,
    /// `T_1'` of this chain.
    pub completes_at: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupVerdicts {
    pub sobolev_growth: bool,
    pub force_decay: bool,
    pub cauchy: bool,
    pub normalization: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub sobolev_s: f64,
    pub sobolev_eps: f64,
    pub chains: Vec<BlowupChain>,
    /// `H^s` norm at t = 0.
    pub hs_initial: f64,
    /// `H^s` norm when each chain completes.
    pub hs_plateaus: Vec<f64>,
    /// Differences of consecutive `H^s` plateaus, starting from the initial norm.
    pub hs_increments: Vec<f64>,
    pub hs_eps_plateaus: Vec<f64>,
    /// Sup of the force `L²` norm over `[T_1'(j-1), T_1'(j)]`.
    pub force_sups: Vec<f64>,
    pub verdicts: BlowupVerdicts,
    pub passed: bool,
}

impl Verdicts for BlowupReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn verdicts(&self) -> serde_json::Value {
        serde_json::to_value(&self.verdicts).unwrap_or_default()
    }
}

/// Force samples of one chain as `(t, Σ_k |F(t, k)|²)`.
fn force_series(trace: &RunTrace<f64>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (t, _, v) in trace.forces() {
        match out.last_mut() {
            Some((tl, acc)) if *tl == t => *acc += v.norm_sqr(),
            _ => out.push((t, v.norm_sqr())),
        }
    }
    out
}

/// Sup over `[lo, hi]` of the summed force, each chain holding its latest sample
/// while inside the same window.
fn epoch_force_sup(series: &[Vec<(f64, f64)>], schedules: &[ChainSchedule<f64>], lo: f64, hi: f64) -> f64 {
    let mut times: Vec<f64> = series
        .iter()
        .flat_map(|s| s.iter().map(|(t, _)| *t).filter(|t| *t >= lo && *t <= hi))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut sup: f64 = 0.0;
    for t in times {
        let mut total = 0.0;
        for (s, sched) in series.iter().zip(schedules) {
            let Some(w) = sched.windows().iter().find(|w| w.enter <= t && t < w.exit) else {
                continue;
            };
            let n = s.partition_point(|(ts, _)| *ts <= t);
            if n > 0 && s[n - 1].0 >= w.enter {
                total += s[n - 1].1;
            }
        }
        sup = sup.max(total.sqrt());
    }
    sup
}

pub fn run_blowup(cfg: &ExperimentConfig) -> Result<ScenarioRun<BlowupReport>> {
    cfg.validate()?;
    let spec = &cfg.blowup;
    let bg = cfg.physics.background()?;
    let kernel = cfg.physics.kernel()?;
    let s = spec.sobolev_s;
    let alphas: Vec<f64> = match &spec.alpha {
        Some(a) => a.clone(),
        None => (1..=spec.chains).map(|j| 1.0 / j as f64).collect(),
    };
    let ladder: Vec<f64> = (0..spec.chains)
        .map(|j| spec.eta_base * spec.ratio.powi(j as i32))
        .collect();
    let schedules = ladder
        .iter()
        .map(|&eta0| schedule(auto_k0(eta0, &bg, &kernel), eta0, cfg.physics.delta))
        .collect::<Result<Vec<_>>>()?;
    let packets = schedules
        .iter()
        .map(|sc| gaussian_packet(sc.k0(), sc.eta0(), packet_grid(sc, cfg.spacing())?))
        .collect::<Result<Vec<FourierField<f64>>>>()?;

    let quiet = StepControl {
        record_forces: false,
        event_norms: false,
        ..cfg.numerics.step.clone()
    };
    let log_c: Vec<f64> = packets
        .par_iter()
        .zip(&schedules)
        .map(|(h0, sc)| {
            let (y, _) = integrate_chain(h0, sc, &bg, &kernel, &quiet)?;
            Ok(log_field_norm(&y, &NormSpec::L2) - log_field_norm(h0, &NormSpec::L2))
        })
        .collect::<Result<_>>()?;
    if let Some(j) = log_c.iter().position(|l| !l.is_finite()) {
        return Err(Error::UnmeasuredAmplification(j + 1));
    }
    let plans: Vec<Plan<f64>> = packets
        .into_iter()
        .zip(&schedules)
        .zip(alphas.iter().zip(&ladder))
        .zip(&log_c)
        .map(|(((h0, sc), (a, eta0)), lc)| Plan {
            h0,
            schedule: sc.clone(),
            weight: a * eta0.powf(-s) * (-lc).exp(),
        })
        .collect();

    let ctl = StepControl {
        record_forces: true,
        event_norms: true,
        sobolev_norm: NormSpec::sobolev(s + spec.sobolev_eps),
        ..cfg.numerics.step.clone()
    };
    let (sup, merged) = integrate_superposition(&plans, &bg, &kernel, &ctl)?;
    let traces: Vec<&RunTrace<f64>> = sup.traces.iter().collect();
    let completes: Vec<f64> = schedules.iter().map(|sc| sc.final_time()).collect();

    let hs_traces;
    let (hs_src, hs_pick): (Vec<&RunTrace<f64>>, fn(&EventNorms<f64>) -> Option<f64>) = if s == 0.0 {
        (traces.clone(), |n| n.l2)
    } else {
        let hs_ctl = StepControl {
            record_forces: false,
            sobolev_norm: NormSpec::sobolev(s),
            ..ctl.clone()
        };
        hs_traces = integrate_superposition(&plans, &bg, &kernel, &hs_ctl)?.0.traces;
        (hs_traces.iter().collect(), |n| n.sobolev)
    };
    let hs_initial = held_at(&hs_src, 0.0, hs_pick);
    let hs_plateaus: Vec<f64> = completes.iter().map(|t| held_at(&hs_src, *t, hs_pick)).collect();
    let hs_increments: Vec<f64> = std::iter::once(hs_initial)
        .chain(hs_plateaus.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    let hs_eps_plateaus: Vec<f64> = completes.iter().map(|t| held_at(&traces, *t, |n| n.sobolev)).collect();
    let series: Vec<Vec<(f64, f64)>> = sup.traces.iter().map(force_series).collect();
    let force_sups: Vec<f64> = completes
        .iter()
        .enumerate()
        .map(|(j, hi)| {
            let lo = if j == 0 { 0.0 } else { completes[j - 1] };
            epoch_force_sup(&series, &schedules, lo, *hi)
        })
        .collect();

    let chains: Vec<BlowupChain> = (0..spec.chains)
        .map(|j| {
            let final_l2 = log_field_norm(&sup.parts[j], &NormSpec::L2).exp();
            let expected_l2 = alphas[j] * ladder[j].powf(-s);
            let normalization_error = if expected_l2 == 0.0 {
                final_l2
            } else {
                (final_l2 / expected_l2 - 1.0).abs()
            };
            BlowupChain {
                j: j + 1,
                eta0: ladder[j],
                k0: schedules[j].k0(),
                alpha: alphas[j],
                c_measured: log_c[j].exp(),
                log_c_measured: log_c[j],
                weight: plans[j].weight,
                final_l2,
                expected_l2,
                normalization_error,
                completes_at: completes[j],
            }
        })
        .collect();
    let g = spec.min_growth;
    let verdicts = BlowupVerdicts {
        sobolev_growth: hs_eps_plateaus.windows(2).all(|w| w[1] >= g * w[0] && w[1] > w[0]),
        force_decay: force_sups.windows(2).all(|w| w[0] >= g * w[1] && w[1] < w[0]),
        cauchy: hs_increments.windows(2).all(|w| w[1].abs() < w[0].abs()),
        normalization: chains.iter().all(|c| c.normalization_error <= NORMALIZATION_TOLERANCE),
    };
    let passed = verdicts.sobolev_growth && verdicts.force_decay && verdicts.cauchy && verdicts.normalization;
    let oracle = schedules.iter().map(|sc| oracle_report(sc, &bg, &kernel)).collect();
    Ok(ScenarioRun {
        report: BlowupReport {
            sobolev_s: s,
            sobolev_eps: spec.sobolev_eps,
            chains,
            hs_initial,
            hs_plateaus,
            hs_increments,
            hs_eps_plateaus,
            force_sups,
            verdicts,
            passed,
        },
        trace: merged,
        schedules,
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRow;
    use num_complex::Complex;

    #[test]
    fn force_series_groups_by_time() {
        let f = |t: f64, k: i64, re: f64| TraceRow::Force {
            t,
            k,
            value: Complex::new(re, 0.0),
        };
        let tr = RunTrace {
            rows: vec![f(1.0, 1, 3.0), f(1.0, 2, 4.0), f(2.0, 1, 1.0)],
            ..RunTrace::default()
        };
        assert_eq!(force_series(&tr), vec![(1.0, 25.0), (2.0, 1.0)]);
    }

    #[test]
    fn epoch_sup_holds_within_windows() {
        let a = schedule(1, 1000.0, 0.05).unwrap();
        let w = a.windows()[0];
        let series = vec![vec![(w.enter, 9.0), (w.enter + 0.1, 16.0)]];
        let sched = vec![a.clone()];
        assert_eq!(epoch_force_sup(&series, &sched, 0.0, w.exit), 4.0);
        assert_eq!(epoch_force_sup(&series, &sched, 0.0, w.enter), 3.0);
        assert_eq!(epoch_force_sup(&series, &sched, w.exit, 2.0 * w.exit), 0.0);
    }
}
