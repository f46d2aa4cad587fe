use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform grid in the velocity-frequency variable: nodes `eta_min + i * spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaGrid<T> {
    eta_min: T,
    spacing: T,
    len: usize,
}

impl<T: Scalar> EtaGrid<T> {
    /// Grid with `len` nodes starting at `eta_min`.
    pub fn new(eta_min: T, spacing: T, len: usize) -> Result<Self> {
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if !eta_min.is_finite() {
            return Err(Error::InvalidGrid("eta_min must be finite".into()));
        }
        if len < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {len}")));
        }
        Ok(Self { eta_min, spacing, len })
    }

    /// Smallest grid starting at `lo` with the given spacing whose last node is `>= hi`.
    pub fn covering(lo: T, hi: T, spacing: T) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidGrid(format!("empty range [{lo}, {hi}]")));
        }
        let cells = ((hi - lo) / spacing).ceil();
        let cells = cells
            .to_usize()
            .ok_or_else(|| Error::InvalidGrid(format!("cannot cover [{lo}, {hi}] with spacing {spacing}")))?;
        Self::new(lo, spacing, cells.max(1) + 1)
    }

    pub fn eta_min(&self) -> T {
        self.eta_min
    }

    pub fn eta_max(&self) -> T {
        self.node(self.len - 1)
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, i: usize) -> T {
        self.eta_min + T::from_count(i) * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |i| self.node(i))
    }

    /// Node indices `i` with `lo < node(i) < hi` (open interval), clipped to the grid.
    pub fn open_range(&self, lo: T, hi: T) -> Option<(usize, usize)> {
        if !(lo < hi) {
            return None;
        }
        let first = ((lo - self.eta_min) / self.spacing).floor();
        let last = ((hi - self.eta_min) / self.spacing).ceil();
        let n = T::from_count(self.len - 1);
        if last < T::zero() || first > n {
            return None;
        }
        let mut a = first.max(T::zero()).to_usize()?;
        let mut b = last.min(n).to_usize()?;
        while a < self.len && self.node(a) <= lo {
            a += 1;
        }
        while b > 0 && self.node(b) >= hi {
            b -= 1;
        }
        if a > b || a >= self.len || self.node(b) >= hi {
            None
        } else {
            Some((a, b))
        }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.len == other.len && self.eta_min == other.eta_min && self.spacing == other.spacing
    }
}
