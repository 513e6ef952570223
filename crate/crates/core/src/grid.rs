//! Uniform time grids shared by input realizations, trajectories, and analysis windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// The uniform grid `t0, t0 + dt, ..., t0 + steps * dt`.
///
/// Timestamps are always computed as `t0 + k * dt`, never by accumulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub t0: T,
    pub dt: T,
    pub steps: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(t0: T, t1: T, dt: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::NonPositiveStep(dt.to_f64_lossy()));
        }
        if !t0.is_finite() || !t1.is_finite() || t1 < t0 {
            return Err(Error::UnorderedGrid {
                t0: t0.to_f64_lossy(),
                t1: t1.to_f64_lossy(),
            });
        }
        let ratio = (t1 - t0) / dt;
        let steps = ratio.round();
        let tol = T::of(1e-9).max(T::of(16.0) * T::epsilon()) * ratio.max(T::one());
        if (ratio - steps).abs() > tol {
            return Err(Error::NonIntegralGrid {
                span: (t1 - t0).to_f64_lossy(),
                dt: dt.to_f64_lossy(),
            });
        }
        let steps = steps
            .to_usize()
            .ok_or_else(|| Error::InvalidParameter("grid too long".into()))?;
        Ok(Grid { t0, dt, steps })
    }

    /// Number of grid points (`steps + 1`).
    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    /// A grid always holds at least its start point.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn time(&self, k: usize) -> T {
        self.t0 + T::of_usize(k) * self.dt
    }

    #[inline]
    pub fn t1(&self) -> T {
        self.time(self.steps)
    }

    /// Nearest grid index to `t`, or `None` when `t` lies outside the grid by more than a
    /// millionth of a step.
    pub fn index_of(&self, t: T) -> Option<usize> {
        let tol = self.dt * T::of(1e-6);
        if !t.is_finite() || t < self.t0 - tol || t > self.t1() + tol {
            return None;
        }
        let k = ((t - self.t0) / self.dt).round().to_usize()?;
        Some(k.min(self.steps))
    }

    /// Grid indices `(k0, k1)` spanning `[t0, t1]`.
    pub fn window(&self, t0: T, t1: T) -> Result<(usize, usize)> {
        let outside = || Error::WindowOutsideGrid {
            t0: t0.to_f64_lossy(),
            t1: t1.to_f64_lossy(),
            start: self.t0.to_f64_lossy(),
            end: self.t1().to_f64_lossy(),
        };
        if t1 < t0 {
            return Err(outside());
        }
        let k0 = self.index_of(t0).ok_or_else(outside)?;
        let k1 = self.index_of(t1).ok_or_else(outside)?;
        Ok((k0, k1))
    }

    /// True when both grids have the same start, step, and length.
    pub fn matches(&self, other: &Grid<T>) -> bool {
        let tol = self.dt * T::of(1e-9);
        self.steps == other.steps && (self.t0 - other.t0).abs() <= tol && (self.dt - other.dt).abs() <= tol
    }
}
