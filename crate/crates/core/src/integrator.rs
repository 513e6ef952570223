//! Fixed-step classical Runge-Kutta integration under a frozen input path.
//!
//! The input is held at its left-endpoint sample for all four stages of a step, so smooth and
//! noisy inputs share one code path.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::models::VectorField;
use crate::scalar::Real;
use crate::signals::{SampledPath, Signal};

/// Any state component beyond this magnitude is treated as a numerical blow-up.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// States on a uniform grid, stored row-major: `states[k * dim .. (k + 1) * dim]` is the state
/// at `grid.time(k)`. `inputs[k]` is the input acting at that grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub grid: Grid<T>,
    pub dim: usize,
    pub states: Vec<T>,
    pub inputs: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    #[inline]
    pub fn state(&self, k: usize) -> &[T] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[T] {
        self.state(self.len() - 1)
    }

    #[inline]
    pub fn time(&self, k: usize) -> T {
        self.grid.time(k)
    }

    /// One state component over the whole grid.
    pub fn component(&self, i: usize) -> Vec<T> {
        self.states.iter().skip(i).step_by(self.dim).copied().collect()
    }
}

/// Integrates `field` from `x0` over `grid`, driven by `path`.
pub fn integrate<T, F>(field: &F, x0: &[T], path: &SampledPath<T>, grid: &Grid<T>) -> Result<Trajectory<T>>
where
    T: Real,
    F: VectorField<T> + ?Sized,
{
    let dim = field.dim();
    if x0.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x0.len(),
        });
    }
    if !path.grid.matches(grid) || path.values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "input path has {} samples from t = {} with dt = {}, integration grid has {} from t = {} with dt = {}",
            path.values.len(),
            path.grid.t0,
            path.grid.dt,
            grid.len(),
            grid.t0,
            grid.dt
        )));
    }
    check_state(x0, 0, grid)?;

    let n = grid.len();
    let mut states = Vec::with_capacity(n * dim);
    let mut inputs = Vec::with_capacity(n);
    states.extend_from_slice(x0);
    inputs.push(field.drive(x0, path.values[0]));

    let mut x = x0.to_vec();
    let mut k1 = vec![T::zero(); dim];
    let mut k2 = vec![T::zero(); dim];
    let mut k3 = vec![T::zero(); dim];
    let mut k4 = vec![T::zero(); dim];
    let mut tmp = vec![T::zero(); dim];
    let h = grid.dt;
    let half = h / T::of(2.0);
    let sixth = h / T::of(6.0);
    let two = T::of(2.0);

    for step in 0..grid.steps {
        let u = path.values[step];
        field.eval(&x, u, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + half * k1[i];
        }
        field.eval(&tmp, u, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + half * k2[i];
        }
        field.eval(&tmp, u, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + h * k3[i];
        }
        field.eval(&tmp, u, &mut k4);
        for i in 0..dim {
            x[i] += sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        check_state(&x, step + 1, grid)?;
        states.extend_from_slice(&x);
        inputs.push(field.drive(&x, path.values[step + 1]));
    }

    Ok(Trajectory {
        grid: *grid,
        dim,
        states,
        inputs,
    })
}

fn check_state<T: Real>(x: &[T], step: usize, grid: &Grid<T>) -> Result<()> {
    let bound = T::of(DIVERGENCE_BOUND);
    if x.iter().all(|c| c.is_finite() && c.abs() <= bound) {
        Ok(())
    } else {
        Err(Error::Diverged {
            member: None,
            step,
            time: grid.time(step).to_f64_lossy(),
        })
    }
}

/// Several trajectories of one model under one shared input realization.
#[derive(Clone, Debug)]
pub struct EnsembleRun<T, M> {
    pub trajectories: Vec<Trajectory<T>>,
    pub initial_conditions: Vec<Vec<T>>,
    pub model: M,
    pub signal: Signal<T>,
    pub seed: u64,
    pub path: SampledPath<T>,
}

impl<T: Real, M> EnsembleRun<T, M> {
    pub fn grid(&self) -> &Grid<T> {
        &self.path.grid
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

/// Realizes `signal` once with `seed`, then integrates every initial condition against it.
///
/// Members may run on any number of threads; results are ordered by initial-condition index
/// and do not depend on scheduling.
pub fn integrate_ensemble<T, M>(
    model: &M,
    initial_conditions: &[Vec<T>],
    signal: &Signal<T>,
    grid: &Grid<T>,
    seed: u64,
) -> Result<EnsembleRun<T, M>>
where
    T: Real,
    M: VectorField<T> + Clone,
{
    if initial_conditions.is_empty() {
        return Err(Error::TooFewMembers { needed: 1, got: 0 });
    }
    let signal = signal.with_seed(seed);
    let path = signal.realize_on(grid)?;
    let results: Vec<Result<Trajectory<T>>> = initial_conditions
        .par_iter()
        .map(|x0| integrate(model, x0, &path, grid))
        .collect();
    let mut trajectories = Vec::with_capacity(results.len());
    for (member, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => trajectories.push(t),
            Err(Error::Diverged { step, time, .. }) => {
                return Err(Error::Diverged {
                    member: Some(member),
                    step,
                    time,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(EnsembleRun {
        trajectories,
        initial_conditions: initial_conditions.to_vec(),
        model: model.clone(),
        signal,
        seed,
        path,
    })
}

/// A vector field given by a closure, mostly useful for tests and ad-hoc systems.
#[derive(Clone)]
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<T, F> VectorField<T> for FnField<F>
where
    T: Real,
    F: Fn(&[T], T, &mut [T]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[T], u: T, dx: &mut [T]) {
        (self.f)(x, u, dx)
    }

    fn component_names(&self) -> Vec<&'static str> {
        vec!["x"; self.dim]
    }

    fn id(&self) -> &'static str {
        "custom"
    }
}
