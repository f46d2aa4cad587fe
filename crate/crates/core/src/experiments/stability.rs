use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::single::SUPPORT_TOLERANCE;
use super::{event_times, gaussian_packet, held_at, packet_grid, ExperimentConfig, ScenarioRun, Verdicts};
use crate::chain::{schedule, ChainSchedule};
use crate::error::{Error, Result};
use crate::integrator::{integrate_superposition, Plan, StepControl};
use crate::norms::{log_field_norm, NormSpec};
use crate::oracle::oracle_report;
use crate::trace::RunTrace;

pub const MIN_PACKETS: usize = 5;
const MAX_DRAWS: usize = 10_000;

/// One random packet: `amplitude · e^{i phase}` times the unit Gaussian on
/// `{k0} × (eta0 ± 1/2)`, rescaled so its `c_in` norm equals `amplitude`.
#[derive(Debug, Clone, Serialize)]
pub struct PacketSpec {
    pub scale: f64,
    pub eta0: f64,
    pub k0: usize,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleRatio {
    pub scale: f64,
    pub packets: usize,
    pub initial_c_in: f64,
    pub sup_c_out: f64,
    /// `None` for zero data.
    pub ratio: Option<f64>,
    pub trivially_stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityVerdicts {
    pub bounded: bool,
    pub support: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub c_in: f64,
    pub c_out: f64,
    pub bound: f64,
    pub packets: Vec<PacketSpec>,
    pub scales: Vec<ScaleRatio>,
    pub max_ratio: Option<f64>,
    pub verdicts: StabilityVerdicts,
    pub passed: bool,
}

impl Verdicts for StabilityReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn verdicts(&self) -> serde_json::Value {
        serde_json::to_value(&self.verdicts).unwrap_or_default()
    }
}

/// Draws packets on integer frequencies with pairwise disjoint chain stripes.
fn draw_packets(cfg: &ExperimentConfig) -> Result<Vec<(PacketSpec, ChainSchedule<f64>)>> {
    let spec = &cfg.stability;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out: Vec<(PacketSpec, ChainSchedule<f64>)> = Vec::new();
    for &scale in &spec.scales {
        let lo = scale.ceil() as u64;
        let hi = (2.0 * scale).ceil() as u64;
        let mut placed = 0;
        let mut draws = 0;
        while placed < spec.packets {
            draws += 1;
            if draws > MAX_DRAWS {
                return Err(Error::InvalidConfig(format!(
                    "could not place {} disjoint packets at scale {scale}",
                    spec.packets
                )));
            }
            let eta0 = rng.gen_range(lo..hi) as f64;
            let k_cap = spec.max_k0.min((eta0 / 100.0) as usize).max(1);
            let k0 = rng.gen_range(1..=k_cap);
            let amplitude = spec.amplitude * rng.gen_range(0.5..1.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let sched = schedule(k0, eta0, cfg.physics.delta)?;
            let (a0, a1) = sched.stripe();
            let clash = out.iter().any(|(_, o)| {
                let (b0, b1) = o.stripe();
                a0 < b1 + 1.0 && b0 < a1 + 1.0
            });
            if clash {
                continue;
            }
            out.push((
                PacketSpec {
                    scale,
                    eta0,
                    k0,
                    amplitude,
                    phase,
                },
                sched,
            ));
            placed += 1;
        }
    }
    Ok(out)
}

pub fn run_stability(cfg: &ExperimentConfig) -> Result<ScenarioRun<StabilityReport>> {
    cfg.validate()?;
    let spec = &cfg.stability;
    if spec.packets < MIN_PACKETS {
        return Err(Error::EnsembleTooSmall {
            got: spec.packets,
            need: MIN_PACKETS,
        });
    }
    let bg = cfg.physics.background()?;
    let kernel = cfg.physics.kernel()?;
    let c_in = NormSpec::gevrey(3.0, spec.c_in)?;
    let c_out = NormSpec::gevrey(3.0, spec.c_out)?;
    let drawn = draw_packets(cfg)?;
    let plans = drawn
        .iter()
        .map(|(p, sched)| {
            let unit = gaussian_packet(p.k0, p.eta0, packet_grid(sched, cfg.spacing())?)?;
            let rot = Complex::from_polar(1.0, p.phase);
            let h0 = unit.map(|_, _, v| v * rot);
            let weight = if p.amplitude == 0.0 {
                0.0
            } else {
                (p.amplitude.ln() - log_field_norm(&h0, &c_in)).exp()
            };
            Ok(Plan {
                h0,
                schedule: sched.clone(),
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ctl = StepControl {
        record_forces: false,
        event_norms: true,
        gevrey_norm: c_out,
        ..cfg.numerics.step.clone()
    };
    let (sup, merged) = integrate_superposition(&plans, &bg, &kernel, &ctl)?;

    let mut scales = Vec::new();
    for &scale in &spec.scales {
        let members: Vec<usize> = (0..drawn.len()).filter(|&i| drawn[i].0.scale == scale).collect();
        let initial_c_in = members
            .iter()
            .map(|&i| (plans[i].weight * log_field_norm(&plans[i].h0, &c_in).exp()).powi(2))
            .sum::<f64>()
            .sqrt();
        let traces: Vec<&RunTrace<f64>> = members.iter().map(|&i| &sup.traces[i]).collect();
        let sup_c_out = event_times(&traces)
            .into_iter()
            .map(|t| held_at(&traces, t, |n| n.gevrey))
            .fold(0.0, f64::max);
        let trivially_stable = initial_c_in == 0.0;
        scales.push(ScaleRatio {
            scale,
            packets: members.len(),
            initial_c_in,
            sup_c_out,
            ratio: (!trivially_stable).then(|| sup_c_out / initial_c_in),
            trivially_stable,
        });
    }
    let max_ratio = scales.iter().filter_map(|s| s.ratio).reduce(f64::max);
    let verdicts = StabilityVerdicts {
        bounded: scales
            .iter()
            .all(|s| s.ratio.is_none_or(|r| r.is_finite() && r <= spec.bound)),
        support: merged.support_leak <= SUPPORT_TOLERANCE,
    };
    let passed = verdicts.bounded && verdicts.support;
    let oracle = drawn.iter().map(|(_, sc)| oracle_report(sc, &bg, &kernel)).collect();
    let (packets, schedules): (Vec<_>, Vec<_>) = drawn.into_iter().unzip();
    Ok(ScenarioRun {
        report: StabilityReport {
            c_in: spec.c_in,
            c_out: spec.c_out,
            bound: spec.bound,
            packets,
            scales,
            max_ratio,
            verdicts,
            passed,
        },
        trace: merged,
        schedules,
        oracle,
    })
}
