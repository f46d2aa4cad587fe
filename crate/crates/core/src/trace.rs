//! Time series emitted by the integrator, with CSV export.

use std::fmt;
use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    WindowEnter,
    WindowExit,
    PauseVerified,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Start => "start",
            EventKind::WindowEnter => "window_enter",
            EventKind::WindowExit => "window_exit",
            EventKind::PauseVerified => "pause_verified",
        })
    }
}

/// Full-field norms at an event (`None` when not recorded).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EventNorms<T> {
    pub l2: Option<T>,
    pub sobolev: Option<T>,
    pub gevrey: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceRow<T> {
    Force { t: T, k: i64, value: Complex<T> },
    Event { t: T, k: usize, kind: EventKind, norms: EventNorms<T> },
}

impl<T: Scalar> TraceRow<T> {
    pub fn t(&self) -> T {
        match self {
            TraceRow::Force { t, .. } | TraceRow::Event { t, .. } => *t,
        }
    }
}

/// Row norms around one echo: mode `k` entering its window and mode `k - 1` leaving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EchoRecord<T> {
    pub k: usize,
    pub tip: T,
    pub echo: T,
    /// Mode `k + 1` at `T_k'`.
    pub upward: T,
}

/// Largest `rhs` modulus relative to the field at one verification time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual<T> {
    pub t: T,
    /// Preceding window, or 0 after the last one.
    pub k: usize,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub rows: Vec<TraceRow<T>>,
    pub echoes: Vec<EchoRecord<T>>,
    pub residuals: Vec<Residual<T>>,
    /// Largest modulus outside the expected box over all checks, relative to the field.
    pub support_leak: T,
    /// Largest modulus ever seen on mode `-1`.
    pub minus_one_peak: T,
    pub windows_integrated: usize,
    pub steps: usize,
}

impl<T: Scalar> Default for RunTrace<T> {
    fn default() -> Self {
        Self {
            rows: Vec::new(),
            echoes: Vec::new(),
            residuals: Vec::new(),
            support_leak: T::zero(),
            minus_one_peak: T::zero(),
            windows_integrated: 0,
            steps: 0,
        }
    }
}

impl<T: Scalar> RunTrace<T> {
    pub fn events(&self) -> impl Iterator<Item = (T, usize, EventKind, &EventNorms<T>)> + '_ {
        self.rows.iter().filter_map(|r| match r {
            TraceRow::Event { t, k, kind, norms } => Some((*t, *k, *kind, norms)),
            _ => None,
        })
    }

    pub fn forces(&self) -> impl Iterator<Item = (T, i64, Complex<T>)> + '_ {
        self.rows.iter().filter_map(|r| match r {
            TraceRow::Force { t, k, value } => Some((*t, *k, *value)),
            _ => None,
        })
    }

    pub fn has_event(&self, kind: EventKind, k: usize, t: T) -> bool {
        self.events().any(|(te, ke, kd, _)| kd == kind && ke == k && te == t)
    }

    pub fn max_residual(&self) -> T {
        self.residuals.iter().fold(T::zero(), |m, r| m.max(r.value))
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].t() <= w[1].t())
    }

    /// Writes `t,k,force_re,force_im,l2_norm,sobolev_norm,gevrey_norm,event`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "t",
            "k",
            "force_re",
            "force_im",
            "l2_norm",
            "sobolev_norm",
            "gevrey_norm",
            "event",
        ])
        .map_err(csv_err)?;
        let opt = |v: Option<T>| v.map_or_else(String::new, |x| format!("{x:e}"));
        for row in &self.rows {
            let record = match row {
                TraceRow::Force { t, k, value } => [
                    format!("{t:e}"),
                    k.to_string(),
                    format!("{:e}", value.re),
                    format!("{:e}", value.im),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ],
                TraceRow::Event { t, k, kind, norms } => [
                    format!("{t:e}"),
                    k.to_string(),
                    String::new(),
                    String::new(),
                    opt(norms.l2),
                    opt(norms.sobolev),
                    opt(norms.gevrey),
                    format!("{kind}:{k}"),
                ],
            };
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let trace = RunTrace {
            rows: vec![
                TraceRow::Event {
                    t: 0.0,
                    k: 2,
                    kind: EventKind::Start,
                    norms: EventNorms {
                        l2: Some(1.0),
                        sobolev: None,
                        gevrey: None,
                    },
                },
                TraceRow::Force {
                    t: 1.5,
                    k: 2,
                    value: Complex::new(0.25, -1.0),
                },
                TraceRow::Event {
                    t: 2.0,
                    k: 2,
                    kind: EventKind::WindowExit,
                    norms: EventNorms::default(),
                },
            ],
            ..RunTrace::default()
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,k,force_re,force_im,l2_norm,sobolev_norm,gevrey_norm,event");
        assert_eq!(lines[1], "0e0,2,,,1e0,,,start:2");
        assert_eq!(lines[2], "1.5e0,2,2.5e-1,-1e0,,,,");
        assert_eq!(lines[3], "2e0,2,,,,,,window_exit:2");
        assert!(trace.is_monotone());
        assert!(trace.has_event(EventKind::WindowExit, 2, 2.0));
    }
}
