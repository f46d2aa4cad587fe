//! Echo-chain schedules, support boxes, projections and per-echo gains.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::FourierField;

/// One resonance window `(T_k, T_k')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub k: usize,
    pub enter: T,
    pub exit: T,
}

/// Critical times of the chain `k0 → k0-1 → … → 0` seeded at frequency `eta0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSchedule<T> {
    k0: usize,
    eta0: T,
    delta: T,
    windows: Vec<Window<T>>,
}

/// Where a time falls relative to the windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Before `T_{k0}`.
    Initial,
    /// Inside `(T_k, T_k')`.
    Window(usize),
    /// Between `T_k'` and `T_{k-1}`.
    Pause(usize),
    /// After `T_1'`.
    Final,
}

/// Windows for `(k0, eta0, delta)`, rejecting schedules whose windows overlap or
/// where `eta0 < 100 k0`.
pub fn schedule<T: Scalar>(k0: usize, eta0: T, delta: T) -> Result<ChainSchedule<T>> {
    if eta0 < T::from_count(100 * k0) {
        return Err(Error::SeparationViolated {
            k0,
            eta0: eta0.as_f64(),
        });
    }
    ChainSchedule::ordered(k0, eta0, delta)
}

impl<T: Scalar> ChainSchedule<T> {
    /// Windows from the defining equations, validating only that they are disjoint
    /// and ordered.
    pub fn ordered(k0: usize, eta0: T, delta: T) -> Result<Self> {
        check_delta(delta)?;
        let half = T::lit(0.5);
        let window = |k: usize| {
            let lag = delta * T::from_count(k0 - k);
            let kk = T::from_count(k);
            Window {
                k,
                enter: (eta0 - half - lag) / kk,
                exit: (eta0 + half + lag) / kk,
            }
        };
        let windows: Vec<_> = (1..=k0).rev().map(window).collect();
        for pair in windows.windows(2) {
            if !(pair[0].exit < pair[1].enter) || !(pair[0].enter > T::zero()) {
                return Err(Error::WindowsOverlap {
                    k: pair[0].k,
                    t_exit: pair[0].exit.as_f64(),
                    t_next_enter: pair[1].enter.as_f64(),
                });
            }
        }
        if let Some(last) = windows.last() {
            if !(last.enter > T::zero()) {
                return Err(Error::WindowsOverlap {
                    k: last.k,
                    t_exit: last.exit.as_f64(),
                    t_next_enter: 0.0,
                });
            }
        }
        Ok(Self {
            k0,
            eta0,
            delta,
            windows,
        })
    }

    /// Schedule for a packet on `{k0} × (eta0 ± 1/2)`: the full chain when the
    /// packet can resonate, otherwise an empty schedule (mode 0, or a packet on
    /// the opposite side of the origin).
    pub fn for_packet(k0: usize, eta0: T, delta: T) -> Result<Self> {
        if k0 == 0 || eta0 < T::zero() {
            check_delta(delta)?;
            if k0 > 0 && eta0 > -T::lit(0.5) {
                return Err(Error::UnsupportedInitialData(
                    "packet straddles eta = 0".into(),
                ));
            }
            return Ok(Self {
                k0,
                eta0,
                delta,
                windows: Vec::new(),
            });
        }
        schedule(k0, eta0, delta)
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn eta0(&self) -> T {
        self.eta0
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Windows in execution order, `k = k0` first.
    pub fn windows(&self) -> &[Window<T>] {
        &self.windows
    }

    pub fn window(&self, k: usize) -> Option<&Window<T>> {
        self.windows.iter().find(|w| w.k == k)
    }

    pub fn is_stationary_chain(&self) -> bool {
        self.windows.is_empty()
    }

    /// `T_1'`, or zero for a chain without windows.
    pub fn final_time(&self) -> T {
        self.windows.last().map_or(T::zero(), |w| w.exit)
    }

    /// Pauses `(T_k', T_{k-1})` as `(k, start, end)`.
    pub fn pauses(&self) -> Vec<(usize, T, T)> {
        self.windows
            .windows(2)
            .map(|p| (p[0].k, p[0].exit, p[1].enter))
            .collect()
    }

    pub fn phase(&self, t: T) -> Phase {
        let Some(first) = self.windows.first() else {
            return Phase::Final;
        };
        if t <= first.enter {
            return Phase::Initial;
        }
        for (i, w) in self.windows.iter().enumerate() {
            if t < w.exit {
                return Phase::Window(w.k);
            }
            match self.windows.get(i + 1) {
                Some(next) if t <= next.enter => return Phase::Pause(w.k),
                Some(_) => {}
                None => return Phase::Final,
            }
        }
        Phase::Final
    }

    /// Frequency band `(eta0 - 1/2 - k0 δ, eta0 + 1/2 + k0 δ)` holding every mode of the chain.
    pub fn stripe(&self) -> (T, T) {
        let half = T::lit(0.5) + self.delta * T::from_count(self.k0);
        (self.eta0 - half, self.eta0 + half)
    }
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::lit(0.1)) {
        return Err(Error::InvalidProfile(format!("delta = {delta} must lie in (0, 0.1)")));
    }
    Ok(())
}

/// Per-mode frequency intervals; modes absent from the box must vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBox<T> {
    intervals: Vec<(i64, T, T)>,
}

impl<T: Scalar> SupportBox<T> {
    pub fn modes(&self) -> impl Iterator<Item = i64> + '_ {
        self.intervals.iter().map(|(k, _, _)| *k)
    }

    pub fn interval(&self, k: i64) -> Option<(T, T)> {
        self.intervals
            .iter()
            .find(|(l, _, _)| *l == k)
            .map(|(_, a, b)| (*a, *b))
    }

    pub fn contains(&self, k: i64, eta: T) -> bool {
        self.interval(k).is_some_and(|(a, b)| eta > a && eta < b)
    }

    pub fn intervals(&self) -> &[(i64, T, T)] {
        &self.intervals
    }
}

/// Box containing the chain's field at time `t`.
///
/// Window `j` moves mass from mode `j` to both `j - 1` and `j + 1`, each time
/// widening by `δ`. The downward path gives mode `l` the margin `δ|k0 - l|`; the
/// upward echo from window `l - 1` gives mode `l ≤ k0` the margin `δ(k0 - l + 2)`,
/// and mode `k0 + 1` is only reached from window `k0` (margin `δ`).
pub fn expected_support<T: Scalar>(schedule: &ChainSchedule<T>, t: T) -> SupportBox<T> {
    let half = T::lit(0.5);
    let eta0 = schedule.eta0;
    let delta = schedule.delta;
    let k0 = schedule.k0 as i64;
    let started = |j: i64| {
        j >= 1
            && schedule
                .window(j as usize)
                .is_some_and(|w| t > w.enter)
    };
    let lowest = (1..=k0).filter(|&j| started(j)).min();
    let Some(k) = lowest else {
        return SupportBox {
            intervals: vec![(k0, eta0 - half, eta0 + half)],
        };
    };
    let intervals = ((k - 1).max(0)..=k0 + 1)
        .map(|l| {
            let margin = if l == k0 + 1 {
                delta
            } else if (2..=k0).contains(&l) && started(l - 1) {
                delta * T::from_count((k0 - l + 2) as usize)
            } else {
                delta * T::from_count((k0 - l).unsigned_abs() as usize)
            };
            (l, eta0 - half - margin, eta0 + half + margin)
        })
        .collect();
    SupportBox { intervals }
}

/// Largest modulus of the field outside `bx`.
pub fn mass_outside<T: Scalar>(field: &FourierField<T>, bx: &SupportBox<T>) -> T {
    let grid = field.grid();
    let mut worst = T::zero();
    for k in field.modes() {
        let Ok(Some((a, b))) = field.span(k) else {
            continue;
        };
        let row = field.row(k).unwrap_or(&[]);
        match bx.interval(k) {
            Some((lo, hi)) if grid.node(a) > lo && grid.node(b) < hi => {}
            Some((lo, hi)) => {
                for i in a..=b {
                    let eta = grid.node(i);
                    if !(eta > lo && eta < hi) {
                        worst = worst.max(row[i].norm());
                    }
                }
            }
            None => {
                for v in &row[a..=b] {
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    worst
}

/// Splits `field` into `P h` (row `l` restricted to `l · (t0, t1)`) and the frozen
/// remainder `(1 - P) h`.
pub fn dependence_projection<T: Scalar>(
    field: &FourierField<T>,
    interval: (T, T),
) -> (FourierField<T>, FourierField<T>) {
    let (t0, t1) = interval;
    let inside = |k: i64, eta: T| {
        let kk = T::from_mode(k);
        let (a, b) = (kk * t0, kk * t1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        eta > lo && eta < hi
    };
    let zero = Complex::new(T::zero(), T::zero());
    let projected = field.map(|k, eta, v| if inside(k, eta) { v } else { zero });
    let remainder = field.map(|k, eta, v| if inside(k, eta) { zero } else { v });
    (projected, remainder)
}

/// `‖row k-1 at T_k'‖ / ‖row k at T_k‖`.
pub fn measure_echo_gain<T: Scalar>(at_enter: &FourierField<T>, at_exit: &FourierField<T>, k: i64) -> Result<T> {
    let tip = at_enter.row_l2(k)?;
    if tip == T::zero() {
        return Err(Error::EmptyChainTip { k });
    }
    Ok(at_exit.row_l2(k - 1)? / tip)
}

/// Same ratio from row norms already recorded.
pub fn echo_gain_from_norms<T: Scalar>(tip_at_enter: T, echo_at_exit: T, k: i64) -> Result<T> {
    if tip_at_enter == T::zero() {
        return Err(Error::EmptyChainTip { k });
    }
    Ok(echo_at_exit / tip_at_enter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::EtaGrid;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn two_step_arithmetic() {
        let s = ChainSchedule::ordered(2, 100.5, 0.05).unwrap();
        let w = s.windows();
        assert_eq!((w[0].k, w[1].k), (2, 1));
        assert!(close(w[0].enter, 50.0) && close(w[0].exit, 50.5));
        assert!(close(w[1].enter, 99.95) && close(w[1].exit, 101.05));
    }

    #[test]
    fn single_window() {
        let s = schedule(1, 200.0, 0.05).unwrap();
        assert_eq!(s.windows().len(), 1);
        assert!(close(s.windows()[0].enter, 199.5) && close(s.windows()[0].exit, 200.5));
        assert!(s.pauses().is_empty());
    }

    #[test]
    fn separation_is_enforced() {
        assert!(matches!(
            schedule(5, 120.0, 0.05),
            Err(Error::SeparationViolated { k0: 5, .. })
        ));
        assert!(matches!(schedule(2, 100.5, 0.05), Err(Error::SeparationViolated { .. })));
    }

    #[test]
    fn overlapping_windows_rejected() {
        assert!(matches!(
            ChainSchedule::ordered(20, 10.0, 0.09),
            Err(Error::WindowsOverlap { .. })
        ));
    }

    #[test]
    fn resonance_lies_in_window() {
        let s = schedule(7, 1000.0, 0.05).unwrap();
        for w in s.windows() {
            let k = w.k as f64;
            assert!(w.enter - 0.05 <= 1000.0 / k && 1000.0 / k <= w.exit + 0.05);
            assert!((k * w.enter - 1000.0).abs() <= 0.5 + 0.05 * 7.0 + 1e-9);
        }
    }

    #[test]
    fn phases() {
        let s = schedule(2, 1000.0, 0.05).unwrap();
        assert_eq!(s.phase(10.0), Phase::Initial);
        assert_eq!(s.phase(500.0), Phase::Window(2));
        assert_eq!(s.phase(700.0), Phase::Pause(2));
        assert_eq!(s.phase(1000.0), Phase::Window(1));
        assert_eq!(s.phase(2000.0), Phase::Final);
    }

    #[test]
    fn box_before_first_window() {
        let s = schedule(3, 1000.0, 0.05).unwrap();
        let b = expected_support(&s, 1.0);
        assert_eq!(b.intervals(), &[(3, 999.5, 1000.5)]);
    }

    #[test]
    fn box_after_last_window() {
        let s = schedule(3, 1000.0, 0.05).unwrap();
        let b = expected_support(&s, 5000.0);
        assert_eq!(b.modes().collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        let (lo, hi) = s.stripe();
        for (_, a, c) in b.intervals() {
            assert!(*a >= lo - 1e-12 && *c <= hi + 1e-12);
        }
        let (a0, c0) = b.interval(0).unwrap();
        assert!(close(a0, 999.5 - 0.15) && close(c0, 1000.5 + 0.15));
        let (a3, _) = b.interval(3).unwrap();
        assert!(close(a3, 999.5 - 0.1));
    }

    #[test]
    fn box_frozen_during_pause() {
        let s = schedule(3, 1000.0, 0.05).unwrap();
        let (k, a, b) = s.pauses()[0];
        assert_eq!(k, 3);
        let early = expected_support(&s, a + 1e-9);
        let late = expected_support(&s, b);
        assert_eq!(early, late);
        assert_eq!(early.modes().collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn stationary_packet_schedule() {
        let s = ChainSchedule::for_packet(3, -500.0, 0.05).unwrap();
        assert!(s.is_stationary_chain());
        assert_eq!(s.phase(1e9), Phase::Final);
        assert_eq!(expected_support(&s, 1e9).intervals(), &[(3, -500.5, -499.5)]);
    }

    fn packet() -> FourierField<f64> {
        let grid = EtaGrid::covering(999.0, 1001.0, 0.05 / 8.0).unwrap();
        FourierField::from_fn(-1, 3, grid, |k, eta: f64| {
            if k == 2 && (eta - 1000.0).abs() < 0.5 {
                Complex::new(1.0 + (eta - 1000.0), 0.5)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .unwrap()
    }

    #[test]
    fn projection_before_resonance_is_zero() {
        let h = packet();
        let (p, r) = dependence_projection(&h, (0.0, 999.5 / 2.0));
        assert_eq!(p.max_modulus(), 0.0);
        assert_eq!(r, h);
    }

    #[test]
    fn projection_covering_row_is_identity() {
        let h = packet();
        let (p, r) = dependence_projection(&h, (400.0, 600.0));
        assert_eq!(p, h);
        assert_eq!(r.max_modulus(), 0.0);
    }

    #[test]
    fn projection_idempotent_and_homogeneous() {
        let h = packet();
        let iv = (499.8, 500.1);
        let (p, r) = dependence_projection(&h, iv);
        let (pp, _) = dependence_projection(&p, iv);
        assert_eq!(pp, p);
        assert_eq!(p.combine(1.0, &r, 1.0).unwrap(), h);
        let (ps, _) = dependence_projection(&h.scaled(-3.0), iv);
        assert_eq!(ps, p.scaled(-3.0));
    }

    #[test]
    fn mass_outside_detects_leaks() {
        let s = schedule(2, 1000.0, 0.05).unwrap();
        let b = expected_support(&s, 1.0);
        let mut h = packet();
        assert_eq!(mass_outside(&h, &b), 0.0);
        h.set(-1, 10, Complex::new(0.0, 2.0)).unwrap();
        assert_eq!(mass_outside(&h, &b), 2.0);
    }

    #[test]
    fn gain_ratio() {
        let h = packet();
        assert!(matches!(measure_echo_gain(&h, &h, 1), Err(Error::EmptyChainTip { k: 1 })));
        assert_eq!(measure_echo_gain(&h, &h, 2).unwrap(), 0.0);
        let mut e = packet();
        e.set(1, 100, Complex::new(3.0, 0.0)).unwrap();
        let g = measure_echo_gain(&h, &e, 2).unwrap();
        assert!(g > 0.0);
        let g2 = measure_echo_gain(&h.scaled(5.0), &e.scaled(5.0), 2).unwrap();
        assert!(close(g, g2));
    }
}
