//! Weighted `L²` norms in frequency: plain, Sobolev and Gevrey.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{FourierField, ForceTrace};

/// Weight applied to `|h̃(k, η)|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NormSpec {
    L2,
    /// `(1 + k² + η²)^s`
    Sobolev { s: f64 },
    /// `exp(c |η|^(1/order))`
    Gevrey { order: f64, c: f64 },
}

impl NormSpec {
    pub fn sobolev(s: f64) -> Self {
        NormSpec::Sobolev { s }
    }

    pub fn gevrey(order: f64, c: f64) -> Result<Self> {
        if !(order >= 1.0) || !c.is_finite() {
            return Err(Error::InvalidNormSpec(format!("gevrey order {order} must be >= 1, c finite")));
        }
        Ok(NormSpec::Gevrey { order, c })
    }

    /// Natural log of the weight at `(k, η)`.
    pub fn log_weight<T: Scalar>(&self, k: i64, eta: T) -> T {
        match *self {
            NormSpec::L2 => T::zero(),
            NormSpec::Sobolev { s } => {
                let kk = T::from_mode(k);
                T::lit(s) * (T::one() + kk * kk + eta * eta).ln()
            }
            NormSpec::Gevrey { order, c } => T::lit(c) * eta.abs().powf(T::lit(1.0 / order)),
        }
    }

    pub fn weight<T: Scalar>(&self, k: i64, eta: T) -> T {
        self.log_weight(k, eta).exp()
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::L2 => write!(f, "l2"),
            NormSpec::Sobolev { s } => write!(f, "h:s={s}"),
            NormSpec::Gevrey { order, c } => write!(f, "gevrey:order={order},c={c}"),
        }
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidNormSpec(text.to_string());
        let text = text.trim();
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let mut params = Vec::new();
        for item in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(bad)?;
            let value: f64 = value.trim().parse().map_err(|_| bad())?;
            if !value.is_finite() {
                return Err(bad());
            }
            params.push((key.trim().to_ascii_lowercase(), value));
        }
        let get = |name: &str| params.iter().find(|(k, _)| k == name).map(|(_, v)| *v);
        match kind.trim().to_ascii_lowercase().as_str() {
            "l2" if params.is_empty() => Ok(NormSpec::L2),
            "h" | "sobolev" if params.len() == 1 => Ok(NormSpec::Sobolev { s: get("s").ok_or_else(bad)? }),
            "gevrey" if params.len() == 2 => {
                NormSpec::gevrey(get("order").ok_or_else(bad)?, get("c").ok_or_else(bad)?)
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for NormSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NormSpec> for String {
    fn from(n: NormSpec) -> String {
        n.to_string()
    }
}

/// `ln ‖h‖` for the given weight; `-inf` for the zero field.
pub fn log_field_norm<T: Scalar>(field: &FourierField<T>, spec: &NormSpec) -> T {
    let grid = field.grid();
    let last = grid.len() - 1;
    let mut terms: Vec<(T, T)> = Vec::new();
    for k in field.modes() {
        let Ok(Some((a, b))) = field.span(k) else {
            continue;
        };
        let row = field.row(k).unwrap_or(&[]);
        for (i, v) in row.iter().enumerate().take(b + 1).skip(a) {
            let m = v.norm();
            if m == T::zero() {
                continue;
            }
            let end = if i == 0 || i == last { T::lit(0.5) } else { T::one() };
            terms.push((spec.log_weight(k, grid.node(i)) + T::lit(2.0) * m.ln(), end));
        }
    }
    let Some(top) = terms.iter().map(|(l, _)| *l).reduce(T::max) else {
        return T::neg_infinity();
    };
    let sum: T = terms.iter().map(|(l, w)| *w * (*l - top).exp()).sum();
    (top + (sum * grid.spacing()).ln()) / T::lit(2.0)
}

/// `(Σ_k ∫ weight(k, η) |h̃(k, η)|² dη)^(1/2)` with the trapezoid rule.
pub fn field_norm<T: Scalar>(field: &FourierField<T>, spec: &NormSpec) -> T {
    let l = log_field_norm(field, spec);
    if l == T::neg_infinity() {
        T::zero()
    } else {
        l.exp()
    }
}

/// `(Σ_k |F̂(k)|²)^(1/2)`.
pub fn force_l2<T: Scalar>(trace: &ForceTrace<T>) -> T {
    let m = trace.iter().fold(T::zero(), |m, (_, v)| m.max(v.norm()));
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    let s: T = trace.iter().map(|(_, v)| (v.norm() / m).powi(2)).sum();
    m * s.sqrt()
}
