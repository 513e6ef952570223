//! Input functions `u(t)` and their frozen realizations on a time grid.
//!
//! Smooth and piecewise-constant inputs can be evaluated pointwise. Noise inputs only exist
//! as realizations: [`Signal::realize`] draws the whole path once, and every ensemble member
//! is then integrated against that same path.
//!
//! Noise is a sample-and-hold process. With `n = hold_step / dt`, grid samples `j*n .. (j+1)*n`
//! share one standard normal draw `z_j`, and their value is `bias + sqrt(variance) * z_j`, where
//! bias and variance come from the segment that contains the start of the hold interval.
//! Draws come from `ChaCha8Rng::seed_from_u64(seed)` through `rand_distr::StandardNormal` in
//! `f64`, one per hold interval in time order (intervals outside every segment still consume
//! a draw), so a realization depends only on the signal, the grid, and the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// One constant-statistics interval `[t_start, t_end)` of a piecewise Gaussian noise input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSegment<T> {
    pub t_start: T,
    pub t_end: T,
    pub bias: T,
    pub variance: T,
}

impl<T: Real> NoiseSegment<T> {
    pub fn new(t_start: T, t_end: T, bias: T, variance: T) -> Self {
        NoiseSegment {
            t_start,
            t_end,
            bias,
            variance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Signal<T> {
    Constant {
        level: T,
    },
    /// `bias + amplitude * sin(angular_frequency * t + phase)`.
    Sine {
        bias: T,
        amplitude: T,
        angular_frequency: T,
        phase: T,
    },
    /// Pulse train, high (= `amplitude`) on the first `duty_cycle * period` of every period
    /// counted from `phase`, zero otherwise.
    Square {
        period: T,
        amplitude: T,
        duty_cycle: T,
        phase: T,
    },
    PiecewiseGaussianNoise {
        segments: Vec<NoiseSegment<T>>,
        /// Defaults to the realization step.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hold_step: Option<T>,
        #[serde(default)]
        seed: u64,
    },
    /// Previous-sample hold through `(times[i], values[i])`.
    Samples {
        times: Vec<T>,
        values: Vec<T>,
    },
}

/// Input values on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

impl<T: Real> SampledPath<T> {
    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.values.len()).map(|k| self.grid.time(k))
    }
}

impl<T: Real> Signal<T> {
    pub fn constant(level: T) -> Self {
        Signal::Constant { level }
    }

    pub fn sine(bias: T, amplitude: T, angular_frequency: T, phase: T) -> Self {
        Signal::Sine {
            bias,
            amplitude,
            angular_frequency,
            phase,
        }
    }

    pub fn square(period: T, amplitude: T, duty_cycle: T, phase: T) -> Self {
        Signal::Square {
            period,
            amplitude,
            duty_cycle,
            phase,
        }
    }

    pub fn noise(segments: Vec<NoiseSegment<T>>, hold_step: Option<T>, seed: u64) -> Self {
        Signal::PiecewiseGaussianNoise {
            segments,
            hold_step,
            seed,
        }
    }

    pub fn is_noise(&self) -> bool {
        matches!(self, Signal::PiecewiseGaussianNoise { .. })
    }

    /// Same signal with its noise seed replaced. Deterministic variants are returned unchanged.
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut s = self.clone();
        if let Signal::PiecewiseGaussianNoise { seed, .. } = &mut s {
            *seed = new_seed;
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSignal(m.to_string()));
        match self {
            Signal::Constant { level } => {
                if !level.is_finite() {
                    return bad("constant level must be finite");
                }
            }
            Signal::Sine {
                bias,
                amplitude,
                angular_frequency,
                phase,
            } => {
                if ![*bias, *amplitude, *angular_frequency, *phase]
                    .iter()
                    .all(|x| x.is_finite())
                {
                    return bad("sine parameters must be finite");
                }
            }
            Signal::Square {
                period,
                amplitude,
                duty_cycle,
                phase,
            } => {
                if !(*period > T::zero()) || !period.is_finite() {
                    return bad("square period must be positive");
                }
                if !(*duty_cycle > T::zero() && *duty_cycle < T::one()) {
                    return bad("square duty cycle must lie in (0, 1)");
                }
                if !amplitude.is_finite() || !phase.is_finite() {
                    return bad("square parameters must be finite");
                }
            }
            Signal::PiecewiseGaussianNoise {
                segments, hold_step, ..
            } => {
                if let Some(h) = hold_step {
                    if !(*h > T::zero()) || !h.is_finite() {
                        return bad("hold_step must be positive");
                    }
                }
                for s in segments {
                    if !(s.t_end > s.t_start) {
                        return bad("noise segment must satisfy t_end > t_start");
                    }
                    if !(s.variance >= T::zero()) || !s.variance.is_finite() {
                        return bad("noise variance must be finite and non-negative");
                    }
                    if !s.bias.is_finite() {
                        return bad("noise bias must be finite");
                    }
                }
                for pair in segments.windows(2) {
                    if pair[1].t_start < pair[0].t_end {
                        return bad("noise segments must be ordered and disjoint");
                    }
                }
            }
            Signal::Samples { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return bad("samples need equally many (non-zero) times and values");
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("sample times must be strictly increasing");
                }
            }
        }
        Ok(())
    }

    /// Pointwise value of a deterministic signal.
    pub fn eval(&self, t: T) -> Result<T> {
        match self {
            Signal::Constant { level } => Ok(*level),
            Signal::Sine {
                bias,
                amplitude,
                angular_frequency,
                phase,
            } => Ok(*bias + *amplitude * (*angular_frequency * t + *phase).sin()),
            Signal::Square {
                period,
                amplitude,
                duty_cycle,
                phase,
            } => {
                let shifted = t - *phase;
                let local = shifted - *period * (shifted / *period).floor();
                Ok(if local < *duty_cycle * *period {
                    *amplitude
                } else {
                    T::zero()
                })
            }
            Signal::Samples { times, values } => {
                if times.is_empty() {
                    return Err(Error::InvalidSignal("empty sample list".into()));
                }
                // index of the last sample at or before t
                let idx = times.partition_point(|&s| s <= t);
                Ok(values[idx.saturating_sub(1)])
            }
            Signal::PiecewiseGaussianNoise { .. } => Err(Error::NoiseNeedsRealization),
        }
    }

    /// Samples the signal on `[t0, t1]` with step `dt`.
    pub fn realize(&self, t0: T, t1: T, dt: T) -> Result<SampledPath<T>> {
        let grid = Grid::new(t0, t1, dt)?;
        self.realize_on(&grid)
    }

    pub fn realize_on(&self, grid: &Grid<T>) -> Result<SampledPath<T>> {
        self.validate()?;
        let values = match self {
            Signal::PiecewiseGaussianNoise {
                segments,
                hold_step,
                seed,
            } => realize_noise(segments, *hold_step, *seed, grid)?,
            _ => (0..grid.len())
                .map(|k| self.eval(grid.time(k)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(SampledPath { grid: *grid, values })
    }
}

fn realize_noise<T: Real>(
    segments: &[NoiseSegment<T>],
    hold_step: Option<T>,
    seed: u64,
    grid: &Grid<T>,
) -> Result<Vec<T>> {
    let hold = hold_step.unwrap_or(grid.dt);
    let ratio = hold / grid.dt;
    let per_hold = ratio.round();
    if per_hold < T::one() || (ratio - per_hold).abs() > T::of(1e-6) * ratio.max(T::one()) {
        return Err(Error::InvalidSignal(format!(
            "hold_step {hold} is not a positive multiple of dt {}",
            grid.dt
        )));
    }
    let per_hold = per_hold.to_usize().unwrap_or(1);
    let tol = grid.dt * T::of(1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(grid.len());
    let mut current = T::zero();
    for k in 0..grid.len() {
        if k % per_hold == 0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let t = grid.time(k);
            current = segments
                .iter()
                .find(|s| t >= s.t_start - tol && t < s.t_end - tol)
                .map(|s| s.bias + s.variance.sqrt() * T::of(z))
                .unwrap_or_else(T::zero);
        }
        values.push(current);
    }
    Ok(values)
}
