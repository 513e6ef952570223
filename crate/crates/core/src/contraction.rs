//! Metrics, contraction regions, rates, the integral contraction criterion, and the
//! alpha-contraction certificate for FHN ensembles. Also the network gain matrix `K` and its
//! largest eigenvalue `sigma`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::Trajectory;
use crate::models::{NetworkState, NeuronState};
use crate::scalar::Real;

/// Contraction region of a single FHN state for a margin `mu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Lower,
    Upper,
    Interior,
}

/// `sqrt(1/2 (va - vb)^2 + (wa - wb)^2 / (2 eps))`.
pub fn metric_fhn<T: Real>(xa: NeuronState<T>, xb: NeuronState<T>, epsilon: T) -> T {
    let dv = xa.v - xb.v;
    let dw = xa.w - xb.w;
    let half = T::of(0.5);
    (half * dv * dv + half * dw * dw / epsilon).sqrt()
}

/// Weighted distance with `P = diag(1, 1/eps_e, 1, 1/eps_u, 1, 1/eps_u)`.
pub fn metric_net<T: Real>(xa: &NetworkState<T>, xb: &NetworkState<T>, epsilon_e: T, epsilon_u: T) -> T {
    let a = xa.to_array();
    let b = xb.to_array();
    let weights = [
        T::one(),
        T::one() / epsilon_e,
        T::one(),
        T::one() / epsilon_u,
        T::one(),
        T::one() / epsilon_u,
    ];
    let mut s = T::zero();
    for i in 0..6 {
        let d = a[i] - b[i];
        s += weights[i] * d * d;
    }
    s.sqrt()
}

pub fn region_fhn<T: Real>(x: NeuronState<T>, mu: T) -> RegionLabel {
    classify_v(x.v, mu)
}

fn classify_v<T: Real>(v: T, mu: T) -> RegionLabel {
    let edge = (T::one() + mu).sqrt();
    if mu == T::zero() {
        if v < -edge {
            RegionLabel::Lower
        } else if v > edge {
            RegionLabel::Upper
        } else {
            RegionLabel::Interior
        }
    } else if v <= -edge {
        RegionLabel::Lower
    } else if v >= edge {
        RegionLabel::Upper
    } else {
        RegionLabel::Interior
    }
}

/// Membership in the network region and the sign pattern of `(v_e, v_i1, v_i2)`,
/// `true` meaning non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetRegion {
    pub inside: bool,
    pub signs: [bool; 3],
}

pub fn region_net<T: Real>(x: &NetworkState<T>, mu: T) -> NetRegion {
    let bound = T::one() + mu;
    let vs = [x.v_e, x.v_i1, x.v_i2];
    NetRegion {
        inside: vs.iter().all(|&v| v * v >= bound),
        signs: vs.map(|v| v >= T::zero()),
    }
}

/// `sqrt(min(mu, b))`.
pub fn lambda_rate<T: Real>(mu: T, b: T) -> T {
    mu.min(b).sqrt()
}

/// The symmetric gain matrix `K` whose largest eigenvalue bounds the coupling contribution.
pub fn gain_matrix<T: Real>(k_e: T, k_u: T) -> [[T; 3]; 3] {
    let z = T::zero();
    let off = T::of(0.5) * (k_u - k_e);
    [[-k_e, off, z], [off, -k_u, -k_u], [z, -k_u, -k_u]]
}

/// Largest eigenvalue of [`gain_matrix`].
pub fn sigma_of_gains<T: Real>(k_e: T, k_u: T) -> T {
    let ev = symmetric_eigenvalues(gain_matrix(k_e, k_u));
    ev.into_iter().fold(T::neg_infinity(), T::max)
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<T: Real>(mut a: [[T; 3]; 3]) -> [T; 3] {
    let scale = a.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return [T::zero(); 3];
    }
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= T::epsilon() * T::epsilon() * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::of(2.0) * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let t = if theta == T::zero() { T::one() } else { t };
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            let tau = s / (T::one() + c);
            a[p][p] -= t * apq;
            a[q][q] += t * apq;
            a[p][q] = T::zero();
            a[q][p] = T::zero();
            let r = 3 - p - q;
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = arp - s * (arq + tau * arp);
            a[p][r] = a[r][p];
            a[r][q] = arq + s * (arp - tau * arq);
            a[q][r] = a[r][q];
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

/// `3 + (va^2 + vb^2 + va vb - 3)(va - vb)^2 / 3 + b (wa - wb)^2`.
pub fn nu<T: Real>(xa: NeuronState<T>, xb: NeuronState<T>, b: T) -> T {
    let three = T::of(3.0);
    let dv = xa.v - xb.v;
    let dw = xa.w - xb.w;
    three + (xa.v * xa.v + xb.v * xb.v + xa.v * xb.v - three) * dv * dv / three + b * dw * dw
}

/// Distance used to compare ensemble members.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum Metric<T> {
    Fhn { epsilon: T },
    Network { epsilon_e: T, epsilon_u: T },
    Euclidean,
}

impl<T: Real> Metric<T> {
    /// Distance between two flat states. Network states may carry extra trailing components
    /// (a co-simulated exosystem); only the first six enter the metric.
    pub fn eval(&self, a: &[T], b: &[T]) -> T {
        match *self {
            Metric::Fhn { epsilon } => metric_fhn(NeuronState::from_slice(a), NeuronState::from_slice(b), epsilon),
            Metric::Network { epsilon_e, epsilon_u } => metric_net(
                &NetworkState::from_slice(a),
                &NetworkState::from_slice(b),
                epsilon_e,
                epsilon_u,
            ),
            Metric::Euclidean => a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt(),
        }
    }
}

/// Pointwise maximum pairwise distance over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceCurve<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

impl<T: Real> DistanceCurve<T> {
    pub fn at(&self, t: T) -> Option<T> {
        self.grid.index_of(t).map(|k| self.values[k])
    }

    /// Last value over first value.
    pub fn final_ratio(&self) -> T {
        self.values[self.values.len() - 1] / self.values[0]
    }
}

fn check_shared_grid<T: Real>(trajectories: &[Trajectory<T>]) -> Result<()> {
    let first = &trajectories[0];
    for (i, tr) in trajectories.iter().enumerate().skip(1) {
        if !tr.grid.matches(&first.grid) || tr.len() != first.len() {
            return Err(Error::GridMismatch(format!("member {i} is on a different grid")));
        }
    }
    Ok(())
}

pub fn distance_curve<T: Real>(trajectories: &[Trajectory<T>], metric: &Metric<T>) -> Result<DistanceCurve<T>> {
    if trajectories.len() < 2 {
        return Err(Error::TooFewMembers {
            needed: 2,
            got: trajectories.len(),
        });
    }
    check_shared_grid(trajectories)?;
    let n = trajectories[0].len();
    let values = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut best = T::zero();
            for i in 0..trajectories.len() {
                for j in i + 1..trajectories.len() {
                    let d = metric.eval(trajectories[i].state(k), trajectories[j].state(k));
                    if d > best || d.is_nan() {
                        best = d;
                    }
                }
            }
            best
        })
        .collect();
    Ok(DistanceCurve {
        grid: trajectories[0].grid,
        values,
    })
}

/// Outcome of the integral contraction test over a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralCriterion<T> {
    /// Integral of `nu` over the grid points where both states share a contraction region.
    pub lhs: T,
    /// `3 (t1 - t0)` minus the integral of `nu` over the remaining points.
    pub rhs: T,
    pub contracts: bool,
}

/// Trapezoid weights for indices `k0..=k1`.
fn trapezoid_weight<T: Real>(k: usize, k0: usize, k1: usize, dt: T) -> T {
    if k0 == k1 {
        T::zero()
    } else if k == k0 || k == k1 {
        dt * T::of(0.5)
    } else {
        dt
    }
}

pub fn integral_criterion<T: Real>(
    xa: &Trajectory<T>,
    xb: &Trajectory<T>,
    t0: T,
    t1: T,
    b: T,
) -> Result<IntegralCriterion<T>> {
    if !xa.grid.matches(&xb.grid) || xa.len() != xb.len() {
        return Err(Error::GridMismatch("trajectories are on different grids".into()));
    }
    let (k0, k1) = xa.grid.window(t0, t1)?;
    let dt = xa.grid.dt;
    let three = T::of(3.0);
    let mut in_c = T::zero();
    let mut in_i = T::zero();
    let mut excess = T::zero();
    for k in k0..=k1 {
        let a = NeuronState::from_slice(xa.state(k));
        let bb = NeuronState::from_slice(xb.state(k));
        let w = trapezoid_weight(k, k0, k1, dt);
        let n = nu(a, bb, b);
        let ra = region_fhn(a, T::zero());
        let shared = ra != RegionLabel::Interior && ra == region_fhn(bb, T::zero());
        if shared {
            in_c += w * n;
        } else {
            in_i += w * n;
        }
        excess += w * (n - three);
    }
    let span = T::of_usize(k1 - k0) * dt;
    Ok(IntegralCriterion {
        lhs: in_c,
        rhs: three * span - in_i,
        contracts: excess > T::zero(),
    })
}

/// How ensemble members are assigned to contraction regions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    /// FHN states `(v, w)`; all members must share `Lower` or all `Upper`.
    Fhn,
    /// Network states; all members inside the network region with one sign pattern.
    Network,
}

impl Classifier {
    fn key<T: Real>(&self, x: &[T], mu: T) -> Option<u8> {
        match self {
            Classifier::Fhn => match classify_v(x[0], mu) {
                RegionLabel::Lower => Some(0),
                RegionLabel::Upper => Some(1),
                RegionLabel::Interior => None,
            },
            Classifier::Network => {
                let r = region_net(&NetworkState::from_slice(x), mu);
                r.inside
                    .then(|| r.signs.iter().enumerate().fold(0u8, |m, (i, &s)| m | ((s as u8) << i)))
            }
        }
    }
}

/// Time on `[t0, t1)` that every member spends in one common contraction region.
///
/// Grid step `k` counts when all states at grid point `k` qualify, so a window spent entirely
/// inside gives exactly `t1 - t0`.
pub fn co_contraction_time<T: Real>(
    trajectories: &[Trajectory<T>],
    mu: T,
    t0: T,
    t1: T,
    classifier: Classifier,
) -> Result<T> {
    if trajectories.is_empty() {
        return Err(Error::TooFewMembers { needed: 1, got: 0 });
    }
    check_shared_grid(trajectories)?;
    let grid = trajectories[0].grid;
    let (k0, k1) = grid.window(t0, t1)?;
    let count = (k0..k1)
        .filter(|&k| {
            let first = classifier.key(trajectories[0].state(k), mu);
            first.is_some()
                && trajectories[1..]
                    .iter()
                    .all(|tr| classifier.key(tr.state(k), mu) == first)
        })
        .count();
    Ok(T::of_usize(count) * grid.dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate<T> {
    pub mu: T,
    pub lambda: T,
    pub t0: T,
    pub t1: T,
    pub delta_c: T,
    pub alpha: T,
    pub precondition_met: bool,
    pub measured_ratio: T,
}

impl<T: Real> ContractionCertificate<T> {
    /// Fills `alpha` and the precondition from the window, rate and co-contraction time.
    pub fn from_parts(mu: T, lambda: T, t0: T, t1: T, delta_c: T, measured_ratio: T) -> Self {
        let sqrt2 = T::SQRT_2();
        let span = t1 - t0;
        let alpha = (-lambda * delta_c + sqrt2 * (span - delta_c)).exp();
        let threshold = sqrt2 * span / (sqrt2 + lambda);
        ContractionCertificate {
            mu,
            lambda,
            t0,
            t1,
            delta_c,
            alpha,
            precondition_met: delta_c > threshold,
            measured_ratio,
        }
    }

    /// True unless the precondition holds and the measured ratio exceeds `alpha + tol`.
    pub fn is_sound(&self, tol: T) -> bool {
        !self.precondition_met || self.measured_ratio <= self.alpha + tol
    }
}

/// Certificate for an FHN ensemble over `[t0, t1]` with margin `mu`.
///
/// The measured ratio is the largest `d(t1) / d(t0)` over member pairs; pairs that start at
/// distance zero are skipped.
pub fn alpha_certificate<T: Real>(
    trajectories: &[Trajectory<T>],
    mu: T,
    t0: T,
    t1: T,
    b: T,
    epsilon: T,
) -> Result<ContractionCertificate<T>> {
    if trajectories.len() < 2 {
        return Err(Error::TooFewMembers {
            needed: 2,
            got: trajectories.len(),
        });
    }
    if !(mu > T::zero()) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    check_shared_grid(trajectories)?;
    let grid = trajectories[0].grid;
    let (k0, k1) = grid.window(t0, t1)?;
    let delta_c = co_contraction_time(trajectories, mu, t0, t1, Classifier::Fhn)?;
    let metric = Metric::Fhn { epsilon };
    let mut ratio = T::zero();
    for i in 0..trajectories.len() {
        for j in i + 1..trajectories.len() {
            let d0 = metric.eval(trajectories[i].state(k0), trajectories[j].state(k0));
            if d0 == T::zero() {
                continue;
            }
            let d1 = metric.eval(trajectories[i].state(k1), trajectories[j].state(k1));
            ratio = ratio.max(d1 / d0);
        }
    }
    Ok(ContractionCertificate::from_parts(
        mu,
        lambda_rate(mu, b),
        grid.time(k0),
        grid.time(k1),
        delta_c,
        ratio,
    ))
}
