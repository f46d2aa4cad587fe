use num_complex::Complex;

use super::grid::EtaGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Complex samples `h̃(k, η)` for modes `k_min..=k_max` on a shared η grid.
///
/// Each row remembers the span of its nonzero nodes. Reads outside that span
/// (and outside the grid) return exactly zero, so compactly supported rows stay
/// compactly supported under interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField<T> {
    k_min: i64,
    k_max: i64,
    grid: EtaGrid<T>,
    values: Vec<Complex<T>>,
    spans: Vec<Option<(usize, usize)>>,
}

impl<T: Scalar> FourierField<T> {
    pub fn zeros(k_min: i64, k_max: i64, grid: EtaGrid<T>) -> Result<Self> {
        if k_min > k_max {
            return Err(Error::InvalidGrid(format!("empty mode range [{k_min}, {k_max}]")));
        }
        let rows = (k_max - k_min + 1) as usize;
        Ok(Self {
            k_min,
            k_max,
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); rows * grid.len()],
            spans: vec![None; rows],
        })
    }

    pub fn from_fn<F>(k_min: i64, k_max: i64, grid: EtaGrid<T>, mut f: F) -> Result<Self>
    where
        F: FnMut(i64, T) -> Complex<T>,
    {
        let mut field = Self::zeros(k_min, k_max, grid)?;
        let n = grid.len();
        for k in k_min..=k_max {
            let r = (k - k_min) as usize;
            for i in 0..n {
                field.values[r * n + i] = f(k, grid.node(i));
            }
            field.refresh_span(r);
        }
        Ok(field)
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    pub fn grid(&self) -> &EtaGrid<T> {
        &self.grid
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        self.k_min..=self.k_max
    }

    pub fn has_mode(&self, k: i64) -> bool {
        k >= self.k_min && k <= self.k_max
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.k_min == other.k_min && self.k_max == other.k_max && self.grid.same_as(&other.grid)
    }

    fn row_index(&self, k: i64) -> Result<usize> {
        if self.has_mode(k) {
            Ok((k - self.k_min) as usize)
        } else {
            Err(Error::ModeOutOfRange {
                k,
                k_min: self.k_min,
                k_max: self.k_max,
            })
        }
    }

    pub fn row(&self, k: i64) -> Result<&[Complex<T>]> {
        let r = self.row_index(k)?;
        let n = self.grid.len();
        Ok(&self.values[r * n..(r + 1) * n])
    }

    pub fn get(&self, k: i64, i: usize) -> Result<Complex<T>> {
        Ok(self.row(k)?[i])
    }

    pub fn set(&mut self, k: i64, i: usize, v: Complex<T>) -> Result<()> {
        let r = self.row_index(k)?;
        let n = self.grid.len();
        self.values[r * n + i] = v;
        self.refresh_span(r);
        Ok(())
    }

    /// Index span of nonzero nodes in row `k`.
    pub fn span(&self, k: i64) -> Result<Option<(usize, usize)>> {
        Ok(self.spans[self.row_index(k)?])
    }

    /// `row_k[start + j] += coef * band[j]`.
    pub fn add_band(&mut self, k: i64, start: usize, coef: T, band: &[Complex<T>]) -> Result<()> {
        let r = self.row_index(k)?;
        let n = self.grid.len();
        let row = &mut self.values[r * n..(r + 1) * n];
        for (dst, v) in row[start..start + band.len()].iter_mut().zip(band) {
            *dst = *dst + *v * coef;
        }
        if band.is_empty() {
            return Ok(());
        }
        let (lo, hi) = match self.spans[r] {
            Some((a, b)) => (a.min(start), b.max(start + band.len() - 1)),
            None => (start, start + band.len() - 1),
        };
        let zero = |v: &Complex<T>| v.re == T::zero() && v.im == T::zero();
        let window = &row[lo..=hi];
        self.spans[r] = window.iter().position(|v| !zero(v)).map(|a| {
            let b = window.iter().rposition(|v| !zero(v)).unwrap_or(a);
            (lo + a, lo + b)
        });
        Ok(())
    }

    fn refresh_span(&mut self, r: usize) {
        let n = self.grid.len();
        let row = &self.values[r * n..(r + 1) * n];
        let zero = |v: &Complex<T>| v.re == T::zero() && v.im == T::zero();
        let first = row.iter().position(|v| !zero(v));
        self.spans[r] = first.map(|a| {
            let b = row.iter().rposition(|v| !zero(v)).unwrap_or(a);
            (a, b)
        });
    }

    /// Interpolated value of row `k` at `eta`; see the type-level note on zero reads.
    pub fn sample(&self, k: i64, eta: T) -> Result<Complex<T>> {
        let r = self.row_index(k)?;
        Ok(self.sample_row(r, eta))
    }

    pub(crate) fn sample_row(&self, r: usize, eta: T) -> Complex<T> {
        let n = self.grid.len();
        let row = &self.values[r * n..(r + 1) * n];
        cubic_sample(&self.grid, self.spans[r], eta, |i| row[i])
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, T, Complex<T>)> + '_ {
        let n = self.grid.len();
        self.values.iter().enumerate().map(move |(idx, v)| {
            let k = self.k_min + (idx / n) as i64;
            (k, self.grid.node(idx % n), *v)
        })
    }

    pub fn map<F: FnMut(i64, T, Complex<T>) -> Complex<T>>(&self, mut f: F) -> Self {
        let n = self.grid.len();
        let mut out = self.clone();
        for (idx, v) in out.values.iter_mut().enumerate() {
            let k = self.k_min + (idx / n) as i64;
            *v = f(k, self.grid.node(idx % n), *v);
        }
        for r in 0..out.spans.len() {
            out.refresh_span(r);
        }
        out
    }

    pub fn scaled(&self, alpha: T) -> Self {
        self.map(|_, _, v| v * alpha)
    }

    /// `alpha * self + beta * other` on an identical layout.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        if !self.same_layout(other) {
            return Err(Error::IncompatibleGrid("fields have different layouts".into()));
        }
        let mut out = self.clone();
        for (dst, v) in out.values.iter_mut().zip(&other.values) {
            *dst = *dst * alpha + *v * beta;
        }
        for r in 0..out.spans.len() {
            out.refresh_span(r);
        }
        Ok(out)
    }

    pub fn max_modulus(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// First non-finite entry, as `(k, eta)`.
    pub fn first_non_finite(&self) -> Option<(i64, T)> {
        self.iter()
            .find(|(_, _, v)| !(v.re.is_finite() && v.im.is_finite()))
            .map(|(k, eta, _)| (k, eta))
    }

    /// Plain `L²` norm of row `k` (trapezoid rule), with overflow-safe scaling.
    pub fn row_l2(&self, k: i64) -> Result<T> {
        Ok(scaled_l2(self.row(k)?, self.grid.spacing()))
    }
}

pub(crate) fn scaled_l2<T: Scalar>(row: &[Complex<T>], spacing: T) -> T {
    let m = row.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    let last = row.len() - 1;
    let s: T = row
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == last { T::lit(0.5) } else { T::one() };
            w * (v.norm() / m).powi(2)
        })
        .sum();
    m * (s * spacing).sqrt()
}

/// 4-point Lagrange interpolation; zero outside the grid and outside `span`.
pub(crate) fn cubic_sample<T, F>(grid: &EtaGrid<T>, span: Option<(usize, usize)>, eta: T, value: F) -> Complex<T>
where
    T: Scalar,
    F: Fn(usize) -> Complex<T>,
{
    let zero = Complex::new(T::zero(), T::zero());
    let Some((a, b)) = span else {
        return zero;
    };
    if !(eta >= grid.node(a) && eta <= grid.node(b)) {
        return zero;
    }
    let n = grid.len();
    let x = (eta - grid.eta_min()) / grid.spacing();
    if n < 4 {
        let i = x.floor().to_usize().unwrap_or(0).min(n - 2);
        let u = x - T::from_count(i);
        return value(i) * (T::one() - u) + value(i + 1) * u;
    }
    let i = x.floor().to_isize().unwrap_or(0);
    let base = (i - 1).clamp(0, n as isize - 4) as usize;
    let u = x - T::from_count(base + 1);
    let one = T::one();
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let wm1 = -u * (u - one) * (u - two) / six;
    let w0 = (u + one) * (u - one) * (u - two) / two;
    let w1 = -(u + one) * u * (u - two) / two;
    let w2 = (u + one) * u * (u - one) / six;
    value(base) * wm1 + value(base + 1) * w0 + value(base + 2) * w1 + value(base + 3) * w2
}

/// Off-grid read of `h̃(k, η)`.
pub fn sample_at<T: Scalar>(field: &FourierField<T>, k: i64, eta: T) -> Result<Complex<T>> {
    field.sample(k, eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> EtaGrid<f64> {
        EtaGrid::new(-1.0, 0.01, 201).unwrap()
    }

    #[test]
    fn zero_field_samples_zero() {
        let f = FourierField::zeros(-1, 3, grid()).unwrap();
        assert_eq!(f.sample(2, 0.123).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let p = |x: f64| 0.3 - 1.7 * x + 2.2 * x * x + 0.9 * x * x * x + 2.0;
        let f = FourierField::from_fn(0, 1, grid(), |k, eta| Complex::new(p(eta), k as f64 * p(eta))).unwrap();
        for &eta in &[-0.9987, -0.3333, 0.0049, 0.5551, 0.9991, -1.0, 1.0] {
            let v = f.sample(1, eta).unwrap();
            assert!((v.re - p(eta)).abs() <= 1e-12 * p(eta).abs(), "eta={eta} got {}", v.re);
            assert!((v.im - p(eta)).abs() <= 1e-12 * p(eta).abs());
        }
    }

    #[test]
    fn out_of_window_reads_are_zero() {
        let f = FourierField::from_fn(0, 0, grid(), |_, _| Complex::new(1.0, 0.0)).unwrap();
        assert_eq!(f.sample(0, f.grid().eta_max() + 1.0).unwrap().re, 0.0);
        assert_eq!(f.sample(0, -5.0).unwrap().re, 0.0);
    }

    #[test]
    fn reads_outside_nonzero_span_are_zero() {
        let f = FourierField::from_fn(0, 0, grid(), |_, eta| {
            Complex::new(if eta.abs() < 0.1 { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let (a, b) = f.span(0).unwrap().unwrap();
        let g = f.grid();
        assert_eq!(f.sample(0, g.node(b) + 0.3 * g.spacing()).unwrap().re, 0.0);
        assert_eq!(f.sample(0, g.node(a) - 0.3 * g.spacing()).unwrap().re, 0.0);
        assert_eq!(f.sample(0, g.node(a)).unwrap().re, 1.0);
    }

    #[test]
    fn mode_out_of_range() {
        let f = FourierField::<f64>::zeros(0, 2, grid()).unwrap();
        assert!(matches!(f.sample(3, 0.0), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn band_updates_track_span() {
        let mut f = FourierField::<f64>::zeros(0, 0, grid()).unwrap();
        assert_eq!(f.span(0).unwrap(), None);
        f.add_band(0, 10, 2.0, &[Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]).unwrap();
        assert_eq!(f.span(0).unwrap(), Some((10, 11)));
        assert_eq!(f.get(0, 11).unwrap(), Complex::new(0.0, 2.0));
    }

    #[test]
    fn row_l2_single_cell() {
        let mut f = FourierField::<f64>::zeros(0, 0, grid()).unwrap();
        f.set(0, 50, Complex::new(3.0, 4.0)).unwrap();
        let n = f.row_l2(0).unwrap();
        assert!((n * n - 25.0 * 0.01).abs() < 1e-14);
    }
}
