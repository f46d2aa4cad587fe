use rayon::prelude::*;
use serde::Serialize;

use super::single::SUPPORT_TOLERANCE;
use super::{auto_k0, gaussian_packet, packet_grid, ExperimentConfig, K0Spec, ScenarioRun, Verdicts};
use crate::chain::schedule;
use crate::error::{Error, Result};
use crate::integrator::{integrate_chain, StepControl};
use crate::norms::{log_field_norm, NormSpec};
use crate::oracle::{oracle_report, stirling_amplification};
use crate::trace::RunTrace;

pub const MIN_POINTS: usize = 4;
pub const MIN_DECADES: f64 = 2.0;
pub const MAX_C_RATIO: f64 = 2.0;

/// Accepted range for the fitted slope of `ln ln amp` against `ln eta0`.
pub fn slope_band(s: f64) -> (f64, f64) {
    if s == 3.0 {
        (0.30, 0.36)
    } else if s == 2.0 {
        (0.45, 0.55)
    } else {
        (1.0 / s - 0.05, 1.0 / s + 0.05)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub eta0: f64,
    pub k0: usize,
    pub log_amplification: f64,
    pub log_stirling: f64,
    /// `(ln amp)^s / eta0`.
    pub c: f64,
    pub support_leak: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepVerdicts {
    pub slope: bool,
    pub c_ratio: bool,
    pub support: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub s_exponent: f64,
    pub points: Vec<SweepPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_band: (f64, f64),
    pub c_ratio: f64,
    pub verdicts: SweepVerdicts,
    pub passed: bool,
}

impl Verdicts for SweepReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn verdicts(&self) -> serde_json::Value {
        serde_json::to_value(&self.verdicts).unwrap_or_default()
    }
}

/// Least-squares `(slope, intercept)` of `y` against `x`.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < MIN_POINTS {
        return Err(Error::DegenerateLadder(format!(
            "{} points, need at least {MIN_POINTS}",
            ladder.len()
        )));
    }
    if ladder.iter().any(|x| *x <= 0.0) {
        return Err(Error::DegenerateLadder("entries must be positive".into()));
    }
    let lo = ladder.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ladder.iter().copied().fold(0.0, f64::max);
    if (hi / lo).log10() < MIN_DECADES {
        return Err(Error::DegenerateLadder(format!(
            "ladder spans {:.3} decades, need {MIN_DECADES}",
            (hi / lo).log10()
        )));
    }
    Ok(())
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ScenarioRun<SweepReport>> {
    cfg.validate()?;
    let ladder = cfg.chain.eta0.values();
    check_ladder(&ladder)?;
    let bg = cfg.physics.background()?;
    let kernel = cfg.physics.kernel()?;
    let s = cfg.physics.s_exponent;
    let k0_for = |eta0: f64| match cfg.chain.k0 {
        K0Spec::Auto(_) => Ok(auto_k0(eta0, &bg, &kernel)),
        K0Spec::Fixed(k) => Ok(k),
        K0Spec::List(_) => Err(Error::InvalidConfig("sweep takes k0 = \"auto\" or one value".into())),
    };
    let plans = ladder
        .iter()
        .map(|&eta0| Ok((eta0, schedule(k0_for(eta0)?, eta0, cfg.physics.delta)?)))
        .collect::<Result<Vec<_>>>()?;
    // Only the first entry records a full trace; the others would be large.
    let quiet = StepControl {
        record_forces: false,
        event_norms: false,
        ..cfg.numerics.step.clone()
    };
    let runs: Vec<(SweepPoint, Option<RunTrace<f64>>)> = plans
        .par_iter()
        .enumerate()
        .map(|(i, (eta0, sched))| {
            let h0 = gaussian_packet(sched.k0(), *eta0, packet_grid(sched, cfg.spacing())?)?;
            let ctl = if i == 0 { &cfg.numerics.step } else { &quiet };
            let (y, trace) = integrate_chain(&h0, sched, &bg, &kernel, ctl)?;
            let log_amp = log_field_norm(&y, &NormSpec::L2) - log_field_norm(&h0, &NormSpec::L2);
            let point = SweepPoint {
                eta0: *eta0,
                k0: sched.k0(),
                log_amplification: log_amp,
                log_stirling: stirling_amplification(*eta0, &bg, &kernel).log_closed,
                c: log_amp.max(0.0).powf(s) / eta0,
                support_leak: trace.support_leak,
                steps: trace.steps,
            };
            Ok((point, (i == 0).then_some(trace)))
        })
        .collect::<Result<_>>()?;
    let mut trace = RunTrace::default();
    let mut points = Vec::with_capacity(runs.len());
    for (p, tr) in runs {
        points.push(p);
        if let Some(tr) = tr {
            trace = tr;
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.eta0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.log_amplification.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, intercept) = fit_line(&x, &y);
    let band = slope_band(s);
    let c_lo = points.iter().map(|p| p.c).fold(f64::INFINITY, f64::min);
    let c_hi = points.iter().map(|p| p.c).fold(0.0, f64::max);
    let c_ratio = c_hi / c_lo;
    let verdicts = SweepVerdicts {
        slope: slope >= band.0 && slope <= band.1,
        c_ratio: c_ratio <= MAX_C_RATIO,
        support: points.iter().all(|p| p.support_leak <= SUPPORT_TOLERANCE),
    };
    let passed = verdicts.slope && verdicts.c_ratio && verdicts.support;
    let oracle = plans.iter().map(|(_, sc)| oracle_report(sc, &bg, &kernel)).collect();
    Ok(ScenarioRun {
        report: SweepReport {
            s_exponent: s,
            points,
            slope,
            intercept,
            slope_band: band,
            c_ratio,
            verdicts,
            passed,
        },
        trace,
        schedules: plans.into_iter().map(|(_, sc)| sc).collect(),
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_is_exact_on_lines() {
        let x = [0.0, 1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 0.25 * v - 3.0).collect();
        let (m, b) = fit_line(&x, &y);
        assert!((m - 0.25).abs() < 1e-15 && (b + 3.0).abs() < 1e-14);
    }

    #[test]
    fn ladders() {
        assert!(matches!(check_ladder(&[1e3]), Err(Error::DegenerateLadder(_))));
        assert!(check_ladder(&[1e3, 2e3, 5e3, 9e3]).is_err());
        assert!(check_ladder(&[1e3, -1e4, 1e5, 1e6]).is_err());
        assert!(check_ladder(&[1e3, 1e4, 3e4, 1e5]).is_ok());
    }

    #[test]
    fn bands() {
        assert_eq!(slope_band(3.0), (0.30, 0.36));
        assert_eq!(slope_band(2.0), (0.45, 0.55));
        let (lo, hi) = slope_band(4.0);
        assert!(lo < 0.25 && hi > 0.25);
    }
}
