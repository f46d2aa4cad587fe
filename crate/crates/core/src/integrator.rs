//! Fixed-step RK4 through the resonance windows, with verified fast-forward
//! across the pauses in between.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{expected_support, mass_outside, ChainSchedule};
use crate::error::{Error, Result};
use crate::norms::{log_field_norm, NormSpec};
use crate::scalar::Scalar;
use crate::spectral::{check_grid, rhs_bands, BackgroundState, ForceTrace, FourierField, KernelSpec, SparseRows, Stage};
use crate::trace::{EchoRecord, EventKind, EventNorms, Residual, RunTrace, TraceRow};

/// Pause residuals above this fraction of the field's max modulus abort the run.
pub const STATIONARITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    /// RK4 steps per unit of frequency swept by a window; window `k` sweeps
    /// `k (T_k' - T_k) = 1 + 2δ(k0 - k)`, so it always gets at least this many steps.
    pub substeps: usize,
    pub rk_order: u32,
    pub pause_samples: usize,
    pub fast_forward: bool,
    pub record_forces: bool,
    pub event_norms: bool,
    pub sobolev_norm: NormSpec,
    pub gevrey_norm: NormSpec,
    /// Relative modulus below which an entry counts as zero in support checks.
    pub support_floor: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            substeps: 256,
            rk_order: 4,
            pause_samples: 5,
            fast_forward: true,
            record_forces: true,
            event_norms: true,
            sobolev_norm: NormSpec::Sobolev { s: 1.0 },
            gevrey_norm: NormSpec::Gevrey { order: 3.0, c: 1.0 },
            support_floor: 1e-14,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if self.substeps < 16 {
            return Err(Error::InvalidStepControl(format!("substeps = {} < 16", self.substeps)));
        }
        if self.rk_order != 4 {
            return Err(Error::InvalidStepControl(format!("rk_order = {} (only 4 is supported)", self.rk_order)));
        }
        if self.pause_samples < 3 {
            return Err(Error::InvalidStepControl(format!(
                "pause_samples = {} < 3",
                self.pause_samples
            )));
        }
        if !(self.support_floor >= 0.0 && self.support_floor < 1.0) {
            return Err(Error::InvalidStepControl("support_floor must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Number of RK4 steps used for window `k` of `schedule`.
    pub fn window_steps<T: Scalar>(&self, schedule: &ChainSchedule<T>, k: usize) -> usize {
        let Some(w) = schedule.window(k) else {
            return 0;
        };
        let width = (T::from_count(k) * (w.exit - w.enter)).as_f64();
        self.substeps * ((width - 1e-9).ceil().max(1.0) as usize)
    }
}

/// One classical RK4 step in place; returns the force trace at `t`.
pub(crate) fn rk4_in_place<T: Scalar>(
    y: &mut FourierField<T>,
    t: T,
    dt: T,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> Result<ForceTrace<T>> {
    let grid = *y.grid();
    let half = dt / T::lit(2.0);
    let stage = |inc: Option<(T, &SparseRows<T>)>, at: T| {
        rhs_bands(
            &Stage {
                base: &*y,
                increment: inc,
            },
            &grid,
            at,
            bg,
            kernel,
        )
        .0
    };
    let (k1, forces) = rhs_bands(
        &Stage {
            base: &*y,
            increment: None,
        },
        &grid,
        t,
        bg,
        kernel,
    );
    let k2 = stage(Some((half, &k1)), t + half);
    let k3 = stage(Some((half, &k2)), t + half);
    let k4 = stage(Some((dt, &k3)), t + dt);
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    for (incr, c) in [(&k1, sixth), (&k2, sixth * two), (&k3, sixth * two), (&k4, sixth)] {
        for (r, bands) in incr.rows.iter().enumerate() {
            let k = incr.k_min + r as i64;
            for b in bands {
                y.add_band(k, b.start, c, &b.values)?;
            }
        }
    }
    for incr in [&k1, &k2, &k3, &k4] {
        for (r, bands) in incr.rows.iter().enumerate() {
            let k = incr.k_min + r as i64;
            let row = y.row(k)?;
            for b in bands {
                let end = b.start + b.values.len();
                if let Some(j) = row[b.start..end].iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::NumericalBlowUp {
                        k,
                        eta: grid.node(b.start + j).as_f64(),
                    });
                }
            }
        }
    }
    Ok(forces)
}

/// Field at `t + dt` after one RK4 step.
pub fn step<T: Scalar>(
    field: &FourierField<T>,
    t: T,
    dt: T,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> Result<FourierField<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidStepControl(format!("dt = {dt} must be positive")));
    }
    check_grid(field.grid(), bg)?;
    let mut y = field.clone();
    rk4_in_place(&mut y, t, dt, bg, kernel)?;
    Ok(y)
}

/// `max |rhs| / max |h|` at time `t`, given the field's max modulus.
fn residual<T: Scalar>(y: &FourierField<T>, scale: T, t: T, bg: &BackgroundState<T>, kernel: &KernelSpec<T>) -> T {
    let (bands, _) = rhs_bands(y, y.grid(), t, bg, kernel);
    let m = bands.max_modulus();
    if m == T::zero() {
        T::zero()
    } else if scale == T::zero() {
        T::infinity()
    } else {
        m / scale
    }
}

struct Run<'a, T> {
    schedule: &'a ChainSchedule<T>,
    bg: &'a BackgroundState<T>,
    kernel: &'a KernelSpec<T>,
    ctl: &'a StepControl,
    trace: RunTrace<T>,
}

impl<T: Scalar> Run<'_, T> {
    fn norms(&self, y: &FourierField<T>) -> EventNorms<T> {
        if !self.ctl.event_norms {
            return EventNorms::default();
        }
        let eval = |spec: &NormSpec| {
            let l = log_field_norm(y, spec);
            Some(if l == T::neg_infinity() { T::zero() } else { l.exp() })
        };
        EventNorms {
            l2: eval(&NormSpec::L2),
            sobolev: eval(&self.ctl.sobolev_norm),
            gevrey: eval(&self.ctl.gevrey_norm),
        }
    }

    fn event(&mut self, y: &FourierField<T>, t: T, k: usize, kind: EventKind) {
        let norms = self.norms(y);
        self.trace.rows.push(TraceRow::Event { t, k, kind, norms });
    }

    fn check_support(&mut self, y: &FourierField<T>, t: T, scale: T) {
        let bx = expected_support(self.schedule, t);
        let leak = mass_outside(y, &bx);
        if leak > T::zero() {
            let rel = if scale > T::zero() { leak / scale } else { T::infinity() };
            self.trace.support_leak = self.trace.support_leak.max(rel);
        }
        if let Ok(row) = y.row(-1) {
            let peak = row.iter().fold(T::zero(), |m, v| m.max(v.norm()));
            self.trace.minus_one_peak = self.trace.minus_one_peak.max(peak);
        }
    }

    fn verify(&mut self, y: &FourierField<T>, times: &[T], k: usize, scale: T) -> Result<()> {
        for &t in times {
            let value = residual(y, scale, t, self.bg, self.kernel);
            self.trace.residuals.push(Residual { t, k, value });
            if value > T::lit(STATIONARITY_TOLERANCE) {
                return Err(Error::StationarityViolated {
                    t: t.as_f64(),
                    residual: value.as_f64(),
                    tolerance: STATIONARITY_TOLERANCE,
                });
            }
        }
        Ok(())
    }

    fn window(&mut self, y: &mut FourierField<T>, k: usize, enter: T, exit: T) -> Result<()> {
        self.event(y, enter, k, EventKind::WindowEnter);
        let tip = y.row_l2(k as i64)?;
        let n = self.ctl.window_steps(self.schedule, k);
        let dt = (exit - enter) / T::from_count(n);
        for i in 0..n {
            let t = enter + dt * T::from_count(i);
            let forces = rk4_in_place(y, t, dt, self.bg, self.kernel)?;
            if self.ctl.record_forces {
                self.trace
                    .rows
                    .extend(forces.active().map(|(k, value)| TraceRow::Force { t, k, value }));
            }
        }
        self.trace.steps += n;
        let echo = y.row_l2(k as i64 - 1)?;
        let upward = y.row_l2(k as i64 + 1)?;
        self.trace.echoes.push(EchoRecord { k, tip, echo, upward });
        let scale = y.max_modulus();
        self.check_support(y, exit, scale);
        self.trace.windows_integrated += 1;
        self.event(y, exit, k, EventKind::WindowExit);
        Ok(())
    }

    fn pause(&mut self, y: &mut FourierField<T>, k: usize, start: T, end: T) -> Result<()> {
        let samples = self.ctl.pause_samples;
        let len = end - start;
        let times: Vec<T> = (1..=samples)
            .map(|i| start + len * T::from_count(i) / T::from_count(samples + 1))
            .collect();
        let scale = y.max_modulus();
        self.verify(y, &times, k, scale)?;
        if !self.ctl.fast_forward {
            let n = self.ctl.substeps;
            let dt = len / T::from_count(n);
            for i in 0..n {
                let t = start + dt * T::from_count(i);
                let forces = rk4_in_place(y, t, dt, self.bg, self.kernel)?;
                if self.ctl.record_forces {
                    self.trace
                        .rows
                        .extend(forces.active().map(|(k, value)| TraceRow::Force { t, k, value }));
                }
            }
            self.trace.steps += n;
        }
        let scale = y.max_modulus();
        self.check_support(y, end, scale);
        self.event(y, end, k, EventKind::PauseVerified);
        Ok(())
    }
}

fn check_chain_input<T: Scalar>(h0: &FourierField<T>, schedule: &ChainSchedule<T>, ctl: &StepControl) -> Result<()> {
    let k0 = schedule.k0() as i64;
    let grid = h0.grid();
    let mut needed = vec![k0];
    if !schedule.is_stationary_chain() {
        needed.extend([0, k0 + 1]);
        let (lo, hi) = schedule.stripe();
        let slack = grid.spacing() * T::lit(4.0);
        if grid.eta_min() > lo - slack || grid.eta_max() < hi + slack {
            return Err(Error::IncompatibleGrid(format!(
                "grid [{}, {}] does not cover the chain stripe ({lo}, {hi}) with stencil slack",
                grid.eta_min(),
                grid.eta_max()
            )));
        }
    }
    for k in needed {
        if !h0.has_mode(k) {
            return Err(Error::ModeOutOfRange {
                k,
                k_min: h0.k_min(),
                k_max: h0.k_max(),
            });
        }
    }
    let scale = h0.max_modulus();
    let leak = mass_outside(h0, &expected_support(schedule, T::zero()));
    if leak > scale * T::lit(ctl.support_floor) {
        return Err(Error::UnsupportedInitialData(format!(
            "modulus {leak} outside {{k0}} x (eta0 - 1/2, eta0 + 1/2)"
        )));
    }
    Ok(())
}

/// Integrates `h0` through every window of `schedule`, returning the field at `T_1'`.
pub fn integrate_chain<T: Scalar>(
    h0: &FourierField<T>,
    schedule: &ChainSchedule<T>,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
    ctl: &StepControl,
) -> Result<(FourierField<T>, RunTrace<T>)> {
    ctl.validate()?;
    check_grid(h0.grid(), bg)?;
    check_chain_input(h0, schedule, ctl)?;
    let mut run = Run {
        schedule,
        bg,
        kernel,
        ctl,
        trace: RunTrace::default(),
    };
    let mut y = h0.clone();
    run.event(&y, T::zero(), schedule.k0(), EventKind::Start);
    let windows = schedule.windows().to_vec();
    for (i, w) in windows.iter().enumerate() {
        run.window(&mut y, w.k, w.enter, w.exit)?;
        if let Some(next) = windows.get(i + 1) {
            run.pause(&mut y, w.k, w.exit, next.enter)?;
        }
    }
    let samples = ctl.pause_samples;
    let horizon = match windows.last() {
        Some(w) => w.exit,
        None => schedule.eta0().abs() + T::one(),
    };
    let start = if windows.is_empty() { T::zero() } else { horizon };
    let times: Vec<T> = (1..=samples)
        .map(|i| start + horizon * T::from_count(i) / T::from_count(samples))
        .collect();
    let scale = y.max_modulus();
    run.verify(&y, &times, 0, scale)?;
    run.check_support(&y, start + horizon, scale);
    run.event(&y, start, 0, EventKind::PauseVerified);
    Ok((y, run.trace))
}

/// One chain of a superposition, `weight * h0`.
#[derive(Debug, Clone)]
pub struct Plan<T> {
    pub h0: FourierField<T>,
    pub schedule: ChainSchedule<T>,
    pub weight: T,
}

/// Final state of a superposition as orthogonal parts, one per chain.
#[derive(Debug, Clone)]
pub struct Superposition<T> {
    /// Weighted final fields.
    pub parts: Vec<FourierField<T>>,
    /// Weighted per-chain traces.
    pub traces: Vec<RunTrace<T>>,
}

impl<T: Scalar> Superposition<T> {
    /// Norm of the sum; the parts have disjoint frequency boxes.
    pub fn norm(&self, spec: &NormSpec) -> T {
        rss(self.parts.iter().map(|p| log_field_norm(p, spec)))
    }
}

/// `sqrt(Σ exp(2 l_i))` from log norms.
fn rss<T: Scalar>(logs: impl Iterator<Item = T>) -> T {
    let logs: Vec<T> = logs.filter(|l| *l > T::neg_infinity()).collect();
    let Some(top) = logs.iter().copied().reduce(T::max) else {
        return T::zero();
    };
    let s: T = logs.iter().map(|l| (T::lit(2.0) * (*l - top)).exp()).sum();
    (top + s.ln() / T::lit(2.0)).exp()
}

fn hold_rss<T: Scalar>(held: &[EventNorms<T>], pick: impl Fn(&EventNorms<T>) -> Option<T>) -> Option<T> {
    let vals: Option<Vec<T>> = held.iter().map(pick).collect();
    vals.map(|v| rss(v.into_iter().map(|x| if x > T::zero() { x.ln() } else { T::neg_infinity() })))
}

/// Integrates chains with pairwise disjoint boxes independently and merges their traces.
///
/// Merged force rows keep each chain's samples (at any `(t, k)` at most one
/// chain resonates); merged event rows carry the norm of the sum, holding each
/// chain's most recent event value.
pub fn integrate_superposition<T: Scalar>(
    plans: &[Plan<T>],
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
    ctl: &StepControl,
) -> Result<(Superposition<T>, RunTrace<T>)> {
    for (i, a) in plans.iter().enumerate() {
        for (j, b) in plans.iter().enumerate().skip(i + 1) {
            let (a0, a1) = a.schedule.stripe();
            let (b0, b1) = b.schedule.stripe();
            if a0 < b1 && b0 < a1 {
                return Err(Error::BoxesOverlap { a: i, b: j });
            }
        }
    }
    let runs: Vec<(FourierField<T>, RunTrace<T>)> = plans
        .par_iter()
        .map(|p| integrate_chain(&p.h0, &p.schedule, bg, kernel, ctl))
        .collect::<Result<_>>()?;
    let mut parts = Vec::with_capacity(runs.len());
    let mut traces = Vec::with_capacity(runs.len());
    for ((field, trace), plan) in runs.into_iter().zip(plans) {
        let w = plan.weight;
        parts.push(field.scaled(w));
        traces.push(weighted(trace, w));
    }
    let merged = merge(&traces);
    Ok((Superposition { parts, traces }, merged))
}

fn weighted<T: Scalar>(mut trace: RunTrace<T>, w: T) -> RunTrace<T> {
    let a = w.abs();
    let scale = |v: Option<T>| v.map(|x| x * a);
    for row in &mut trace.rows {
        match row {
            TraceRow::Force { value, .. } => *value = *value * w,
            TraceRow::Event { norms, .. } => {
                *norms = EventNorms {
                    l2: scale(norms.l2),
                    sobolev: scale(norms.sobolev),
                    gevrey: scale(norms.gevrey),
                }
            }
        }
    }
    for e in &mut trace.echoes {
        e.tip = e.tip * a;
        e.echo = e.echo * a;
        e.upward = e.upward * a;
    }
    trace.minus_one_peak = trace.minus_one_peak * a;
    trace
}

fn merge<T: Scalar>(traces: &[RunTrace<T>]) -> RunTrace<T> {
    let mut tagged: Vec<(usize, &TraceRow<T>)> = traces
        .iter()
        .enumerate()
        .flat_map(|(j, tr)| tr.rows.iter().map(move |r| (j, r)))
        .collect();
    tagged.sort_by(|a, b| a.1.t().partial_cmp(&b.1.t()).unwrap_or(std::cmp::Ordering::Equal));
    let mut held: Vec<EventNorms<T>> = traces
        .iter()
        .map(|tr| {
            tr.events()
                .next()
                .map(|(_, _, _, n)| *n)
                .unwrap_or_default()
        })
        .collect();
    let mut out = RunTrace::default();
    for (j, row) in tagged {
        match row {
            TraceRow::Force { .. } => out.rows.push(row.clone()),
            TraceRow::Event { t, k, kind, norms } => {
                held[j] = *norms;
                out.rows.push(TraceRow::Event {
                    t: *t,
                    k: *k,
                    kind: *kind,
                    norms: EventNorms {
                        l2: hold_rss(&held, |n| n.l2),
                        sobolev: hold_rss(&held, |n| n.sobolev),
                        gevrey: hold_rss(&held, |n| n.gevrey),
                    },
                });
            }
        }
    }
    for tr in traces {
        out.echoes.extend(tr.echoes.iter().copied());
        out.residuals.extend(tr.residuals.iter().copied());
        out.support_leak = out.support_leak.max(tr.support_leak);
        out.minus_one_peak = out.minus_one_peak.max(tr.minus_one_peak);
        out.windows_integrated += tr.windows_integrated;
        out.steps += tr.steps;
    }
    out
}
