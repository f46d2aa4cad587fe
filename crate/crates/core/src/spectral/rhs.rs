use num_complex::Complex;

use super::field::{cubic_sample, FourierField};
use super::grid::EtaGrid;
use super::profile::{eval_psi_hat, BackgroundState, KernelSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anything that can be read like a field: `h̃(k, η)` for modes in a fixed range.
pub(crate) trait ModeSampler<T: Scalar> {
    fn mode_range(&self) -> (i64, i64);
    fn sample_mode(&self, k: i64, eta: T) -> Complex<T>;
}

impl<T: Scalar> ModeSampler<T> for FourierField<T> {
    fn mode_range(&self) -> (i64, i64) {
        (self.k_min(), self.k_max())
    }

    fn sample_mode(&self, k: i64, eta: T) -> Complex<T> {
        self.sample_row((k - self.k_min()) as usize, eta)
    }
}

/// Force coefficients `F̂(t, k) = k Ŵ(k) h̃(t, k, kt)` for every carried mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTrace<T> {
    t: T,
    k_min: i64,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> ForceTrace<T> {
    pub fn t(&self) -> T {
        self.t
    }

    pub fn get(&self, k: i64) -> Complex<T> {
        let idx = k - self.k_min;
        if idx < 0 || idx as usize >= self.values.len() {
            Complex::new(T::zero(), T::zero())
        } else {
            self.values[idx as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex<T>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.k_min + i as i64, *v))
    }

    /// Modes with a nonzero coefficient.
    pub fn active(&self) -> impl Iterator<Item = (i64, Complex<T>)> + '_ {
        self.iter().filter(|(_, v)| v.re != T::zero() || v.im != T::zero())
    }
}

pub(crate) fn forces_from<T: Scalar, S: ModeSampler<T>>(sampler: &S, t: T, kernel: &KernelSpec<T>) -> ForceTrace<T> {
    let (k_min, k_max) = sampler.mode_range();
    let values = (k_min..=k_max)
        .map(|k| {
            let zero = Complex::new(T::zero(), T::zero());
            if k == 0 {
                return zero;
            }
            let v = sampler.sample_mode(k, T::from_mode(k) * t);
            if v == zero {
                return zero;
            }
            v * (T::from_mode(k) * kernel.eval(k))
        })
        .collect();
    ForceTrace { t, k_min, values }
}

pub fn force_trace<T: Scalar>(field: &FourierField<T>, t: T, kernel: &KernelSpec<T>) -> ForceTrace<T> {
    forces_from(field, t, kernel)
}

#[derive(Debug, Clone)]
pub(crate) struct Band<T> {
    pub start: usize,
    pub values: Vec<Complex<T>>,
}

/// A time derivative stored as short bands of nonzero entries per row.
#[derive(Debug, Clone)]
pub(crate) struct SparseRows<T> {
    pub k_min: i64,
    pub grid: EtaGrid<T>,
    pub rows: Vec<Vec<Band<T>>>,
}

impl<T: Scalar> SparseRows<T> {
    fn node_value(&self, r: usize, i: usize) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for b in &self.rows[r] {
            if i >= b.start && i < b.start + b.values.len() {
                acc = acc + b.values[i - b.start];
            }
        }
        acc
    }

    fn span(&self, r: usize) -> Option<(usize, usize)> {
        let zero = |v: &Complex<T>| v.re == T::zero() && v.im == T::zero();
        let mut out: Option<(usize, usize)> = None;
        for b in &self.rows[r] {
            let Some(a) = b.values.iter().position(|v| !zero(v)) else {
                continue;
            };
            let e = b.values.iter().rposition(|v| !zero(v)).unwrap_or(a);
            let (a, e) = (b.start + a, b.start + e);
            out = Some(match out {
                None => (a, e),
                Some((lo, hi)) => (lo.min(a), hi.max(e)),
            });
        }
        out
    }

    pub fn sample_row(&self, r: usize, eta: T) -> Complex<T> {
        if self.rows[r].is_empty() {
            return Complex::new(T::zero(), T::zero());
        }
        cubic_sample(&self.grid, self.span(r), eta, |i| self.node_value(r, i))
    }

    pub fn max_modulus(&self) -> T {
        self.rows
            .iter()
            .flatten()
            .flat_map(|b| b.values.iter())
            .fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn to_field(&self, k_max: i64) -> Result<FourierField<T>> {
        let mut out = FourierField::zeros(self.k_min, k_max, self.grid)?;
        for (r, bands) in self.rows.iter().enumerate() {
            let k = self.k_min + r as i64;
            for b in bands {
                out.add_band(k, b.start, T::one(), &b.values)?;
            }
        }
        Ok(out)
    }
}

/// Intermediate Runge–Kutta state `base + coef * increment`, read lazily.
pub(crate) struct Stage<'a, T> {
    pub base: &'a FourierField<T>,
    pub increment: Option<(T, &'a SparseRows<T>)>,
}

impl<T: Scalar> ModeSampler<T> for Stage<'_, T> {
    fn mode_range(&self) -> (i64, i64) {
        (self.base.k_min(), self.base.k_max())
    }

    fn sample_mode(&self, k: i64, eta: T) -> Complex<T> {
        let r = (k - self.base.k_min()) as usize;
        let v = self.base.sample_row(r, eta);
        match self.increment {
            Some((c, inc)) => v + inc.sample_row(r, eta) * c,
            None => v,
        }
    }
}

pub(crate) fn check_grid<T: Scalar>(grid: &EtaGrid<T>, bg: &BackgroundState<T>) -> Result<()> {
    let delta = bg.profile().delta();
    if grid.spacing() > delta / T::lit(8.0) {
        return Err(Error::IncompatibleGrid(format!(
            "spacing {} exceeds delta/8 = {}",
            grid.spacing(),
            delta / T::lit(8.0)
        )));
    }
    Ok(())
}

/// Banded right-hand side of the linearized equation at time `t`.
pub(crate) fn rhs_bands<T: Scalar, S: ModeSampler<T>>(
    sampler: &S,
    grid: &EtaGrid<T>,
    t: T,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> (SparseRows<T>, ForceTrace<T>) {
    let forces = forces_from(sampler, t, kernel);
    let (k_min, k_max) = sampler.mode_range();
    let profile = bg.profile();
    let delta = profile.delta();
    let a = bg.prefactor();
    let mut rows: Vec<Vec<Band<T>>> = vec![Vec::new(); (k_max - k_min + 1) as usize];
    for (l, f) in forces.active() {
        let center = T::from_mode(l) * t;
        let Some((i0, i1)) = grid.open_range(center - delta, center + delta) else {
            continue;
        };
        for target in [l - 1, l + 1] {
            if target < k_min || target > k_max {
                continue;
            }
            // sgn(l - k) with k the target row
            let sgn = if l > target { T::one() } else { -T::one() };
            let values = (i0..=i1)
                .map(|i| {
                    let eta = grid.node(i);
                    let psi = eval_psi_hat(profile, eta - center);
                    f * (-(a * (eta - center - t * sgn) * psi))
                })
                .collect();
            rows[(target - k_min) as usize].push(Band { start: i0, values });
        }
    }
    let bands = SparseRows {
        k_min,
        grid: *grid,
        rows,
    };
    (bands, forces)
}

/// `∂t h̃` for the linearization around `ε cos(x - tv) ψ(v)` with `f₀ ≡ 0`:
///
/// `∂t h̃(k, η) = -(ε/2) Σ_{l = k±1} F̂(t, l) (η - lt - t sgn(l - k)) ψ̂(η - lt)`.
pub fn rhs<T: Scalar>(
    field: &FourierField<T>,
    t: T,
    bg: &BackgroundState<T>,
    kernel: &KernelSpec<T>,
) -> Result<FourierField<T>> {
    check_grid(field.grid(), bg)?;
    rhs_bands(field, field.grid(), t, bg, kernel).0.to_field(field.k_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::profile::BumpProfile;

    fn setup() -> (BackgroundState<f64>, KernelSpec<f64>) {
        let p = BumpProfile::new(0.05, 0.1).unwrap();
        (BackgroundState::new(2.0, p).unwrap(), KernelSpec::coulomb())
    }

    fn packet(k0: i64, eta0: f64) -> FourierField<f64> {
        let grid = EtaGrid::covering(eta0 - 1.0, eta0 + 1.0, 0.05 / 8.0).unwrap();
        FourierField::from_fn(-1, k0 + 1, grid, |k, eta| {
            if k == k0 && (eta - eta0).abs() < 0.5 {
                Complex::new((-(eta - eta0).powi(2) * 32.0).exp(), 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_mode_force_vanishes() {
        let (_, w) = setup();
        let f = FourierField::from_fn(-1, 1, EtaGrid::new(-1.0, 0.001, 2001).unwrap(), |_, _| Complex::new(1.0, 0.0))
            .unwrap();
        let tr = force_trace(&f, 0.0, &w);
        assert_eq!(tr.get(0), Complex::new(0.0, 0.0));
    }

    #[test]
    fn opposite_sign_data_is_stationary() {
        let (bg, w) = setup();
        let f = packet(3, -300.0);
        for t in [0.0, 1.0, 99.7, 1000.0] {
            assert_eq!(rhs(&f, t, &bg, &w).unwrap().max_modulus(), 0.0);
        }
    }

    #[test]
    fn stationary_before_first_resonance() {
        let (bg, w) = setup();
        let f = packet(2, 300.0);
        for t in [0.0, 10.0, 149.0, (300.0 - 0.5) / 2.0 - 1e-3] {
            assert_eq!(rhs(&f, t, &bg, &w).unwrap().max_modulus(), 0.0);
            assert_eq!(force_trace(&f, t, &w).get(2), Complex::new(0.0, 0.0));
        }
        assert!(rhs(&f, 150.0, &bg, &w).unwrap().max_modulus() > 0.0);
    }

    #[test]
    fn on_grid_force_matches_stored_row() {
        let (_, w) = setup();
        let f = packet(2, 300.0);
        let i = 170;
        let eta = f.grid().node(i);
        let t = eta / 2.0;
        let expected = f.get(2, i).unwrap() * (2.0 * w.eval(2));
        let got = force_trace(&f, t, &w).get(2);
        assert!((got - expected).norm() <= 1e-12 * expected.norm());
    }

    #[test]
    fn rejects_coarse_grid() {
        let (bg, w) = setup();
        let f = FourierField::<f64>::zeros(0, 1, EtaGrid::new(0.0, 0.01, 10).unwrap()).unwrap();
        assert!(matches!(rhs(&f, 0.0, &bg, &w), Err(Error::IncompatibleGrid(_))));
    }
}
