use serde::Serialize;

use super::{auto_k0, gaussian_packet, packet_grid, ExperimentConfig, K0Spec, ScenarioRun, Verdicts};
use crate::chain::ChainSchedule;
use crate::error::{Error, Result};
use crate::integrator::{integrate_chain, STATIONARITY_TOLERANCE};
use crate::norms::{log_field_norm, NormSpec};
use crate::oracle::{iterated_duhamel, oracle_report, toy_gain, DuhamelMethod, DuhamelOutput};

/// Echoes with `eta0 / k` at least this large are held to [`TOY_TOLERANCE`].
pub const TOY_SEPARATION: f64 = 1e3;
pub const TOY_TOLERANCE: f64 = 0.15;
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct EchoGain {
    pub k: usize,
    pub gain: f64,
    pub toy: f64,
    pub deviation: f64,
    pub checked: bool,
}

/// Row-0 norm at `T_1'` against the product sandwich.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichCheck {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub log_value: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    pub plancherel_gap: f64,
    pub contains: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleVerdicts {
    pub support: bool,
    pub stationarity: bool,
    pub sandwich: bool,
    pub toy_gain: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleChainReport {
    pub k0: usize,
    pub eta0: f64,
    pub windows: usize,
    pub amplification: f64,
    pub log_amplification: f64,
    pub echoes: Vec<EchoGain>,
    pub sandwich: Option<SandwichCheck>,
    pub support_leak: f64,
    pub minus_one_peak: f64,
    pub max_residual: f64,
    /// Largest residual after `T_1'`.
    pub final_residual: f64,
    pub steps: usize,
    pub verdicts: SingleVerdicts,
    pub passed: bool,
}

impl Verdicts for SingleChainReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn verdicts(&self) -> serde_json::Value {
        serde_json::to_value(&self.verdicts).unwrap_or_default()
    }
}

pub fn run_single_chain(cfg: &ExperimentConfig) -> Result<ScenarioRun<SingleChainReport>> {
    cfg.validate()?;
    let eta0 = match cfg.chain.eta0.values()[..] {
        [x] => x,
        _ => return Err(Error::InvalidConfig("single_chain takes one eta0".into())),
    };
    let bg = cfg.physics.background()?;
    let kernel = cfg.physics.kernel()?;
    let k0 = match cfg.chain.k0 {
        K0Spec::Auto(_) => auto_k0(eta0, &bg, &kernel),
        K0Spec::Fixed(k) => k,
        K0Spec::List(_) => return Err(Error::InvalidConfig("single_chain takes one k0".into())),
    };
    let schedule = ChainSchedule::for_packet(k0, eta0, cfg.physics.delta)?;
    let grid = packet_grid(&schedule, cfg.spacing())?;
    let h0 = gaussian_packet(k0, eta0, grid)?;
    let ctl = &cfg.numerics.step;
    let (y, trace) = integrate_chain(&h0, &schedule, &bg, &kernel, ctl)?;

    let log_amplification = log_field_norm(&y, &NormSpec::L2) - log_field_norm(&h0, &NormSpec::L2);
    let echoes: Vec<EchoGain> = trace
        .echoes
        .iter()
        .map(|e| {
            let gain = e.echo / e.tip;
            let toy = toy_gain(e.k, eta0, &bg, &kernel);
            EchoGain {
                k: e.k,
                gain,
                toy,
                deviation: (gain / toy - 1.0).abs(),
                checked: eta0 / e.k as f64 >= TOY_SEPARATION,
            }
        })
        .collect();
    let sandwich = if schedule.is_stationary_chain() {
        None
    } else {
        let DuhamelOutput::Sandwich(sw) =
            iterated_duhamel(&h0, &schedule, &bg, &kernel, DuhamelMethod::PlancherelProduct)?
        else {
            unreachable!("plancherel product returns a sandwich")
        };
        let value = y.row_l2(0)?;
        Some(SandwichCheck {
            value,
            lower: sw.lower_norm(),
            upper: sw.upper_norm(),
            log_value: value.ln(),
            log_lower: sw.bounds.log_lower + sw.log_conv,
            log_upper: sw.bounds.log_upper + sw.log_conv,
            plancherel_gap: sw.plancherel_gap(),
            contains: sw.contains(value),
        })
    };
    let final_residual = trace
        .residuals
        .iter()
        .filter(|r| r.k == 0)
        .fold(0.0, |m: f64, r| m.max(r.value));
    let verdicts = SingleVerdicts {
        support: trace.support_leak <= SUPPORT_TOLERANCE,
        stationarity: trace.max_residual() <= STATIONARITY_TOLERANCE,
        sandwich: sandwich.as_ref().is_none_or(|s| s.contains),
        toy_gain: echoes.iter().all(|e| !e.checked || e.deviation <= TOY_TOLERANCE),
    };
    let passed = verdicts.support && verdicts.stationarity && verdicts.sandwich && verdicts.toy_gain;
    let report = SingleChainReport {
        k0,
        eta0,
        windows: schedule.windows().len(),
        amplification: log_amplification.exp(),
        log_amplification,
        echoes,
        sandwich,
        support_leak: trace.support_leak,
        minus_one_peak: trace.minus_one_peak,
        max_residual: trace.max_residual(),
        final_residual,
        steps: trace.steps,
        verdicts,
        passed,
    };
    let oracle = vec![oracle_report(&schedule, &bg, &kernel)];
    Ok(ScenarioRun {
        report,
        trace,
        schedules: vec![schedule],
        oracle,
    })
}
