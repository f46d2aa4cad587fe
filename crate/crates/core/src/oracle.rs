//! Reference values for echo chains: toy-model gain, product bounds, the exact
//! iterated Duhamel integral and the Stirling-optimal chain length.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chain::ChainSchedule;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;
use crate::spectral::{eval_psi_hat, sample_at, BackgroundState, FourierField, KernelSpec};

/// Gauss–Legendre nodes per nesting level.
pub const NESTED_NODES: usize = 64;

/// Sub-cells per grid cell for the sandwich convolution; the grid itself
/// resolves `ψ̂` only to about `1e-4`.
pub const SANDWICH_REFINE: usize = 8;

/// Largest chain handled by nested quadrature.
pub const NESTED_MAX_K0: usize = 3;

/// Single-echo gain of the frozen-mode model, `A Ŵ(k) (η₀/k) ∫ψ̂`.
pub fn toy_gain<T: Scalar>(k: usize, eta0: T, bg: &BackgroundState<T>, kernel: &KernelSpec<T>) -> T {
    let kk = T::from_count(k.max(1));
    bg.prefactor() * kernel.eval(k as i64) * (eta0 / kk) * bg.profile().mass()
}

/// `∏ j Ŵ(j) (T_j - δ)` and `∏ j Ŵ(j) (T_j' + δ)` over the chain, kept as logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainProductBounds<T> {
    pub log_lower: T,
    pub log_upper: T,
}

impl<T: Scalar> ChainProductBounds<T> {
    pub fn lower(&self) -> T {
        self.log_lower.exp()
    }

    pub fn upper(&self) -> T {
        self.log_upper.exp()
    }
}

pub fn chain_product_bounds<T: Scalar>(schedule: &ChainSchedule<T>, kernel: &KernelSpec<T>) -> ChainProductBounds<T> {
    let delta = schedule.delta();
    let mut log_lower = T::zero();
    let mut log_upper = T::zero();
    for w in schedule.windows() {
        let jw = (T::from_count(w.k) * kernel.eval(w.k as i64)).ln();
        log_lower = log_lower + jw + (w.enter - delta).ln();
        log_upper = log_upper + jw + (w.exit + delta).ln();
    }
    ChainProductBounds { log_lower, log_upper }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuhamelMethod {
    NestedQuadrature,
    PlancherelProduct,
}

/// Row-0 sandwich `lower · conv ≤ ‖h(T_1', 0)‖ ≤ upper · conv`, with
/// `conv = A^k0 / k0! · ‖ψ̂^{*k0} * ĥ₀‖` computed in both domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlancherelSandwich<T> {
    pub k0: usize,
    pub log_conv: T,
    /// `ln ‖ψ̂^{*k0} * ĥ₀‖` by direct convolution on the grid.
    pub log_conv_frequency: T,
    /// The same norm from the product of transforms (Parseval).
    pub log_conv_dual: T,
    pub bounds: ChainProductBounds<T>,
}

impl<T: Scalar> PlancherelSandwich<T> {
    pub fn lower_norm(&self) -> T {
        (self.bounds.log_lower + self.log_conv).exp()
    }

    pub fn upper_norm(&self) -> T {
        (self.bounds.log_upper + self.log_conv).exp()
    }

    pub fn contains(&self, norm: T) -> bool {
        let l = norm.ln();
        l >= self.bounds.log_lower + self.log_conv && l <= self.bounds.log_upper + self.log_conv
    }

    /// Relative gap between the two evaluations of the convolution norm.
    pub fn plancherel_gap(&self) -> T {
        (self.log_conv_frequency - self.log_conv_dual).exp_m1().abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DuhamelOutput<T> {
    /// Row 0 at `T_1'` on the grid of `h0`.
    Profile(Vec<Complex<T>>),
    Sandwich(PlancherelSandwich<T>),
}

pub fn iterated_duhamel<T: Scalar>(
    h0: &FourierField<T>,
    schedule: &ChainSchedule<T>,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
    method: DuhamelMethod,
) -> Result<DuhamelOutput<T>> {
    match method {
        DuhamelMethod::NestedQuadrature => nested_quadrature(h0, schedule, bg, kernel).map(DuhamelOutput::Profile),
        DuhamelMethod::PlancherelProduct => plancherel_sandwich(h0, schedule, bg, kernel).map(DuhamelOutput::Sandwich),
    }
}

struct Nested<'a, T: Scalar> {
    h0: &'a FourierField<T>,
    schedule: &'a ChainSchedule<T>,
    bg: &'a BackgroundState<T>,
    kernel: &'a KernelSpec<T>,
    gl: GaussLegendre<T>,
}

impl<T: Scalar> Nested<'_, T> {
    /// Row `j` at the end of the chain, evaluated at `s`.
    fn row(&self, j: usize, s: T) -> Complex<T> {
        let k0 = self.schedule.k0();
        if j == k0 {
            return sample_at(self.h0, k0 as i64, s).unwrap_or_default();
        }
        let m = j + 1;
        let Some(w) = self.schedule.window(m) else {
            return Complex::default();
        };
        let mm = T::from_count(m);
        let delta = self.bg.profile().delta();
        let a = ((s - delta) / mm).max(w.enter);
        let b = ((s + delta) / mm).min(w.exit);
        if !(a < b) {
            return Complex::default();
        }
        let coef = self.bg.prefactor() * mm * self.kernel.eval(m as i64);
        let mut acc = Complex::default();
        for (tau, wt) in self.gl.mapped(a, b) {
            let psi = eval_psi_hat(self.bg.profile(), s - mm * tau);
            if psi == T::zero() {
                continue;
            }
            let factor = tau + mm * tau - s;
            acc = acc + self.row(m, mm * tau) * (wt * factor * psi);
        }
        acc * coef
    }
}

fn nested_quadrature<T: Scalar>(
    h0: &FourierField<T>,
    schedule: &ChainSchedule<T>,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> Result<Vec<Complex<T>>> {
    let k0 = schedule.k0();
    if k0 > NESTED_MAX_K0 {
        return Err(Error::MethodMismatch(format!(
            "nested quadrature needs k0 <= {NESTED_MAX_K0}, got {k0}"
        )));
    }
    if k0 == 0 {
        return Ok(h0.row(0)?.to_vec());
    }
    if schedule.is_stationary_chain() {
        return Ok(h0.row(0)?.to_vec());
    }
    let nested = Nested {
        h0,
        schedule,
        bg,
        kernel,
        gl: GaussLegendre::new(NESTED_NODES),
    };
    let grid = h0.grid();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| nested.row(0, grid.node(i)))
        .collect())
}

/// `ψ̂` sampled at `m · spacing` for `|m · spacing| < δ`, index 0 at the most negative offset.
fn psi_stencil<T: Scalar>(bg: &BackgroundState<T>, spacing: T) -> Vec<T> {
    let delta = bg.profile().delta();
    let half = (delta / spacing).floor().to_usize().unwrap_or(0);
    (0..=2 * half)
        .map(|i| {
            let m = T::from_count(i) - T::from_count(half);
            eval_psi_hat(bg.profile(), m * spacing)
        })
        .collect()
}

fn log_l2<T: Scalar>(values: &[T], spacing: T) -> T {
    let m = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if m == T::zero() {
        return T::neg_infinity();
    }
    let s: T = values.iter().map(|v| (*v / m).powi(2)).sum();
    m.ln() + (s * spacing).ln() / T::lit(2.0)
}

fn plancherel_sandwich<T: Scalar>(
    h0: &FourierField<T>,
    schedule: &ChainSchedule<T>,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> Result<PlancherelSandwich<T>> {
    let k0 = schedule.k0();
    let row = h0.row(k0 as i64)?;
    if row.iter().any(|v| v.im != T::zero() || v.re < T::zero()) {
        return Err(Error::UnsupportedInitialData(
            "plancherel product needs a nonnegative real initial row".into(),
        ));
    }
    let Some((a, b)) = h0.span(k0 as i64)? else {
        return Err(Error::EmptyChainTip { k: k0 as i64 });
    };
    let grid = h0.grid();
    let spacing = grid.spacing() / T::from_count(SANDWICH_REFINE);
    let stencil = psi_stencil(bg, spacing);
    let f = (0..=(b - a) * SANDWICH_REFINE)
        .map(|i| {
            let eta = grid.node(a) + spacing * T::from_count(i);
            sample_at(h0, k0 as i64, eta).map(|v| v.re)
        })
        .collect::<Result<Vec<T>>>()?;

    let mut direct = f.clone();
    for _ in 0..k0 {
        let mut next = vec![T::zero(); direct.len() + stencil.len() - 1];
        for (i, x) in direct.iter().enumerate() {
            for (m, p) in stencil.iter().enumerate() {
                next[i + m] = next[i + m] + *x * *p * spacing;
            }
        }
        direct = next;
    }
    let log_conv_frequency = log_l2(&direct, spacing);

    let len = f.len() + k0 * (stencil.len() - 1);
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(len);
    let pad = |v: &[T]| {
        let mut out = vec![Complex::new(T::zero(), T::zero()); len];
        for (o, x) in out.iter_mut().zip(v) {
            *o = Complex::new(*x, T::zero());
        }
        out
    };
    let mut fh = pad(&f);
    let mut ph = pad(&stencil);
    fft.process(&mut fh);
    fft.process(&mut ph);
    let scale = spacing.powi(k0 as i32);
    let spectrum: Vec<T> = fh
        .iter()
        .zip(&ph)
        .map(|(a, p)| (*a * p.powu(k0 as u32)).norm() * scale)
        .collect();
    // Parseval for the DFT: Σ|g|² = (1/len) Σ|G|².
    let log_conv_dual = log_l2(&spectrum, spacing) - T::from_count(len).ln() / T::lit(2.0);

    let log_factorial: T = (1..=k0).map(|j| T::from_count(j).ln()).sum();
    let log_a = bg.prefactor().ln() * T::from_count(k0);
    Ok(PlancherelSandwich {
        k0,
        log_conv: log_a - log_factorial + log_conv_frequency,
        log_conv_frequency,
        log_conv_dual,
        bounds: chain_product_bounds(schedule, kernel),
    })
}

/// `ln ∏_{j ≤ k} A Ŵ(j) (η₀/j) ∫ψ̂` for `k = 0 ..= k_cap`.
fn log_products<T: Scalar>(eta0: T, bg: &BackgroundState<T>, kernel: &KernelSpec<T>) -> Vec<T> {
    let x = bg.prefactor() * bg.profile().mass() * eta0;
    let s = kernel.s_exponent();
    let cap = (T::lit(10.0) * x.max(T::zero()).powf(T::one() / s))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .clamp(1, 10_000_000);
    let mut out = Vec::with_capacity(cap + 1);
    let mut acc = T::zero();
    out.push(acc);
    for j in 1..=cap {
        acc = acc + toy_gain(j, eta0, bg, kernel).ln();
        out.push(acc);
    }
    out
}

/// Chain length maximizing the toy-model product; ties go to the smaller `k`.
pub fn optimal_k0<T: Scalar>(eta0: T, bg: &BackgroundState<T>, kernel: &KernelSpec<T>) -> usize {
    let logs = log_products(eta0, bg, kernel);
    let mut best = 1;
    for (k, l) in logs.iter().enumerate().skip(2) {
        if *l > logs[best] {
            best = k;
        }
    }
    best
}

/// Optimal toy-model amplification, exact and in Stirling closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StirlingAmplification<T> {
    pub k0: usize,
    /// `ln` of the maximal scanned product.
    pub log_exact: T,
    /// `s (A η₀ ∫ψ̂)^(1/s)`.
    pub log_closed: T,
}

impl<T: Scalar> StirlingAmplification<T> {
    pub fn exact(&self) -> T {
        self.log_exact.exp()
    }

    pub fn closed(&self) -> T {
        self.log_closed.exp()
    }
}

pub fn stirling_amplification<T: Scalar>(
    eta0: T,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> StirlingAmplification<T> {
    let logs = log_products(eta0, bg, kernel);
    let k0 = optimal_k0(eta0, bg, kernel);
    let s = kernel.s_exponent();
    let x = bg.prefactor() * bg.profile().mass() * eta0;
    StirlingAmplification {
        k0,
        log_exact: logs[k0],
        log_closed: s * x.powf(T::one() / s),
    }
}

/// Oracle summary written to reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub k0_opt: usize,
    pub product_lower: f64,
    pub product_upper: f64,
    pub log_product_lower: f64,
    pub log_product_upper: f64,
    pub stirling_exact: f64,
    pub stirling_closed: f64,
    pub log_stirling_exact: f64,
    pub log_stirling_closed: f64,
}

pub fn oracle_report<T: Scalar>(
    schedule: &ChainSchedule<T>,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> OracleReport {
    let eta0 = schedule.eta0().abs();
    let bounds = chain_product_bounds(schedule, kernel);
    let st = stirling_amplification(eta0, bg, kernel);
    OracleReport {
        k0_opt: st.k0,
        product_lower: bounds.lower().as_f64(),
        product_upper: bounds.upper().as_f64(),
        log_product_lower: bounds.log_lower.as_f64(),
        log_product_upper: bounds.log_upper.as_f64(),
        stirling_exact: st.exact().as_f64(),
        stirling_closed: st.closed().as_f64(),
        log_stirling_exact: st.log_exact.as_f64(),
        log_stirling_closed: st.log_closed.as_f64(),
    }
}
