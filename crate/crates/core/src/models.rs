//! Vector fields and parameter records: the FitzHugh-Nagumo neuron, the excitatory-inhibitory
//! (EI) regulation network, its half-center exosystem, and the undamped linear oscillator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A time-invariant vector field driven by a scalar input.
///
/// States are flat slices whose layout is given by [`VectorField::component_names`].
pub trait VectorField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `dx/dt` at state `x` under input `u` into `dx`.
    fn eval(&self, x: &[T], u: T, dx: &mut [T]);

    /// Input value actually acting on the system, recorded next to each stored state.
    /// Fields that generate their own input (co-simulated exosystems) override this.
    fn drive(&self, _x: &[T], u: T) -> T {
        u
    }

    fn component_names(&self) -> Vec<&'static str>;

    fn id(&self) -> &'static str;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FhnParams<T> {
    pub a: T,
    pub b: T,
    pub epsilon: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeuronState<T> {
    pub v: T,
    pub w: T,
}

impl<T: Real> NeuronState<T> {
    pub fn new(v: T, w: T) -> Self {
        NeuronState { v, w }
    }

    pub fn from_slice(x: &[T]) -> Self {
        NeuronState { v: x[0], w: x[1] }
    }

    pub fn to_array(self) -> [T; 2] {
        [self.v, self.w]
    }
}

/// A violated condition of the admissible FitzHugh-Nagumo parameter range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamViolation {
    /// `1 - 2b/3 < a < 1` fails.
    ARange,
    /// `0 < b < 1` fails.
    BRange,
    /// `epsilon < 1/b` fails.
    EpsilonRange,
}

impl std::fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ParamViolation::ARange => "1-2b/3<a<1",
            ParamViolation::BRange => "b∈(0,1)",
            ParamViolation::EpsilonRange => "ε<1/b",
        })
    }
}

impl<T: Real> FhnParams<T> {
    pub fn new(a: T, b: T, epsilon: T) -> Self {
        FhnParams { a, b, epsilon }
    }

    /// Conditions of the admissible range that do not hold. Empty means valid.
    ///
    /// Out-of-range parameters are still simulated; callers decide whether to warn.
    pub fn validate(&self) -> Vec<ParamViolation> {
        let (a, b, eps) = (self.a, self.b, self.epsilon);
        let one = T::one();
        let mut out = Vec::new();
        if !(one - T::of(2.0) * b / T::of(3.0) < a && a < one) {
            out.push(ParamViolation::ARange);
        }
        if !(b > T::zero() && b < one) {
            out.push(ParamViolation::BRange);
        }
        if !(eps < one / b) {
            out.push(ParamViolation::EpsilonRange);
        }
        out
    }

    /// Equilibrium at zero input: the real root of `v³ + (3/b)(1-b)v + 3a/b = 0`, with
    /// `w = (v + a)/b`.
    ///
    /// Inside the admissible range the cubic is strictly increasing, so the root is unique and
    /// lies below -1. Outside it, the root reached by bisection from the Cauchy bracket is
    /// returned.
    pub fn rest_point(&self) -> Result<NeuronState<T>> {
        let (a, b) = (self.a, self.b);
        if !(b != T::zero()) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rest point undefined for a = {a}, b = {b}"
            )));
        }
        let p = T::of(3.0) * (T::one() - b) / b;
        let q = T::of(3.0) * a / b;
        let v = depressed_cubic_root(p, q)?;
        Ok(NeuronState::new(v, (v + a) / b))
    }
}

/// Real root of `v³ + p v + q` by Newton iteration safeguarded with bisection.
fn depressed_cubic_root<T: Real>(p: T, q: T) -> Result<T> {
    let f = |v: T| v * v * v + p * v + q;
    let df = |v: T| T::of(3.0) * v * v + p;
    let bound = T::one() + p.abs() + q.abs();
    let (mut lo, mut hi) = (-bound, bound);
    // f(-bound) < 0 < f(bound) by the Cauchy bound on the roots.
    let mut v = -q.cbrt();
    if !(v > lo && v < hi) {
        v = T::zero();
    }
    for _ in 0..200 {
        let fv = f(v);
        if fv == T::zero() {
            return Ok(v);
        }
        if fv < T::zero() {
            lo = v;
        } else {
            hi = v;
        }
        let d = df(v);
        let newton = v - fv / d;
        let next = if d != T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / T::of(2.0)
        };
        if (next - v).abs() <= T::epsilon() * v.abs().max(T::one()) {
            return Ok(next);
        }
        v = next;
    }
    let residual = f(v).abs();
    if residual <= T::of(1e3) * T::epsilon() * bound.powi(3) {
        Ok(v)
    } else {
        Err(Error::NoConvergence(format!(
            "cubic v^3 + {p} v + {q}: residual {residual} after 200 iterations"
        )))
    }
}

/// Membrane and recovery derivative of one FHN unit with total input current `input`.
#[inline]
fn fhn_rhs<T: Real>(v: T, w: T, input: T, p: &FhnParams<T>) -> (T, T) {
    (v - v * v * v / T::of(3.0) - w + input, p.epsilon * (v - p.b * w + p.a))
}

pub fn fhn_deriv<T: Real>(x: NeuronState<T>, u: T, p: &FhnParams<T>) -> NeuronState<T> {
    let (dv, dw) = fhn_rhs(x.v, x.w, u, p);
    NeuronState::new(dv, dw)
}

/// Jacobian of [`fhn_deriv`] with respect to `(v, w)`.
pub fn fhn_jacobian<T: Real>(x: NeuronState<T>, p: &FhnParams<T>) -> [[T; 2]; 2] {
    [[T::one() - x.v * x.v, -T::one()], [p.epsilon, -p.b * p.epsilon]]
}

impl<T: Real> VectorField<T> for FhnParams<T> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[T], u: T, dx: &mut [T]) {
        let (dv, dw) = fhn_rhs(x[0], x[1], u, self);
        dx[0] = dv;
        dx[1] = dw;
    }

    fn component_names(&self) -> Vec<&'static str> {
        vec!["v", "w"]
    }

    fn id(&self) -> &'static str {
        "fhn"
    }
}

/// Plant and controller state, ordered `(v_e, w_e, v_i1, w_i1, v_i2, w_i2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkState<T> {
    pub v_e: T,
    pub w_e: T,
    pub v_i1: T,
    pub w_i1: T,
    pub v_i2: T,
    pub w_i2: T,
}

impl<T: Real> NetworkState<T> {
    pub fn from_slice(x: &[T]) -> Self {
        NetworkState {
            v_e: x[0],
            w_e: x[1],
            v_i1: x[2],
            w_i1: x[3],
            v_i2: x[4],
            w_i2: x[5],
        }
    }

    pub fn to_array(self) -> [T; 6] {
        [self.v_e, self.w_e, self.v_i1, self.w_i1, self.v_i2, self.w_i2]
    }
}

/// Half-center oscillator state `(v_u1, w_u1, v_u2, w_u2)`; its output is `v_u1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExoState<T> {
    pub v_u1: T,
    pub w_u1: T,
    pub v_u2: T,
    pub w_u2: T,
}

impl<T: Real> ExoState<T> {
    pub fn from_slice(x: &[T]) -> Self {
        ExoState {
            v_u1: x[0],
            w_u1: x[1],
            v_u2: x[2],
            w_u2: x[3],
        }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.v_u1, self.w_u1, self.v_u2, self.w_u2]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EiNetworkParams<T> {
    /// Plant neuron E.
    pub e_params: FhnParams<T>,
    /// Controller neurons I1, I2 (and the nominal exosystem).
    pub u_params: FhnParams<T>,
    pub k_e: T,
    pub k_u: T,
    /// Rest potential of the uncoupled plant, fixed at construction.
    pub v_rest: T,
    /// Use `w_i1` in the recovery equation of I2, as the equations are printed, instead of the
    /// symmetric `w_i2`.
    #[serde(default)]
    pub literal_typo_mode: bool,
}

#[derive(Deserialize)]
#[serde(bound = "T: Real + serde::de::DeserializeOwned")]
struct EiNetworkParamsRepr<T> {
    e_params: FhnParams<T>,
    u_params: FhnParams<T>,
    k_e: T,
    k_u: T,
    #[serde(default)]
    v_rest: Option<T>,
    #[serde(default)]
    literal_typo_mode: bool,
}

impl<'de, T> Deserialize<'de> for EiNetworkParams<T>
where
    T: Real + serde::de::DeserializeOwned,
{
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = EiNetworkParamsRepr::<T>::deserialize(d)?;
        let mut p = EiNetworkParams::new(r.e_params, r.u_params, r.k_e, r.k_u).map_err(serde::de::Error::custom)?;
        p.literal_typo_mode = r.literal_typo_mode;
        if let Some(v) = r.v_rest {
            let tol = T::of(1e-9).max(T::of(64.0) * T::epsilon());
            if (v - p.v_rest).abs() > tol {
                return Err(serde::de::Error::custom(format!(
                    "v_rest {v} disagrees with the plant rest point {}",
                    p.v_rest
                )));
            }
        }
        Ok(p)
    }
}

impl<T: Real> EiNetworkParams<T> {
    /// Builds the network, computing `v_rest` from the plant parameters.
    pub fn new(e_params: FhnParams<T>, u_params: FhnParams<T>, k_e: T, k_u: T) -> Result<Self> {
        if !(k_e >= T::zero()) || !(k_u >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "coupling gains must be non-negative (k_e = {k_e}, k_u = {k_u})"
            )));
        }
        let v_rest = e_params.rest_point()?.v;
        Ok(EiNetworkParams {
            e_params,
            u_params,
            k_e,
            k_u,
            v_rest,
            literal_typo_mode: false,
        })
    }

    pub fn with_literal_typo_mode(mut self, on: bool) -> Self {
        self.literal_typo_mode = on;
        self
    }
}

/// Time derivative of the EI network under disturbance `u`, with `y = v_e` and the control
/// input `eta = v_i1`.
pub fn ei_deriv<T: Real>(x: &NetworkState<T>, u: T, p: &EiNetworkParams<T>) -> NetworkState<T> {
    let y = x.v_e;
    let eta = x.v_i1;
    let (dv_e, dw_e) = fhn_rhs(x.v_e, x.w_e, p.k_e * (u - eta + p.v_rest - y), &p.e_params);
    let (dv_i1, dw_i1) = fhn_rhs(x.v_i1, x.w_i1, p.k_u * (y - p.v_rest - x.v_i2 - x.v_i1), &p.u_params);
    let w_second = if p.literal_typo_mode { x.w_i1 } else { x.w_i2 };
    let (dv_i2, _) = fhn_rhs(x.v_i2, x.w_i2, p.k_u * (-x.v_i1 - x.v_i2), &p.u_params);
    let dw_i2 = p.u_params.epsilon * (x.v_i2 - p.u_params.b * w_second + p.u_params.a);
    NetworkState {
        v_e: dv_e,
        w_e: dw_e,
        v_i1: dv_i1,
        w_i1: dw_i1,
        v_i2: dv_i2,
        w_i2: dw_i2,
    }
}

/// Time derivative of the half-center exosystem. Its output `u = v_u1`.
pub fn exo_deriv<T: Real>(x: &ExoState<T>, p_u: &FhnParams<T>, k_u: T, literal_typo_mode: bool) -> ExoState<T> {
    let (dv_u1, dw_u1) = fhn_rhs(x.v_u1, x.w_u1, k_u * (-x.v_u2 - x.v_u1), p_u);
    let w_second = if literal_typo_mode { x.w_u1 } else { x.w_u2 };
    let (dv_u2, _) = fhn_rhs(x.v_u2, x.w_u2, k_u * (-x.v_u1 - x.v_u2), p_u);
    let dw_u2 = p_u.epsilon * (x.v_u2 - p_u.b * w_second + p_u.a);
    ExoState {
        v_u1: dv_u1,
        w_u1: dw_u1,
        v_u2: dv_u2,
        w_u2: dw_u2,
    }
}

const NETWORK_NAMES: [&str; 6] = ["v_e", "w_e", "v_i1", "w_i1", "v_i2", "w_i2"];
const EXO_NAMES: [&str; 4] = ["v_u1", "w_u1", "v_u2", "w_u2"];

impl<T: Real> VectorField<T> for EiNetworkParams<T> {
    fn dim(&self) -> usize {
        6
    }

    fn eval(&self, x: &[T], u: T, dx: &mut [T]) {
        let d = ei_deriv(&NetworkState::from_slice(x), u, self);
        dx[..6].copy_from_slice(&d.to_array());
    }

    fn component_names(&self) -> Vec<&'static str> {
        NETWORK_NAMES.to_vec()
    }

    fn id(&self) -> &'static str {
        "ei_network"
    }
}

/// The half-center oscillator as an autonomous system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exosystem<T> {
    pub params: FhnParams<T>,
    pub k_u: T,
    #[serde(default)]
    pub literal_typo_mode: bool,
}

impl<T: Real> VectorField<T> for Exosystem<T> {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, x: &[T], _u: T, dx: &mut [T]) {
        let d = exo_deriv(&ExoState::from_slice(x), &self.params, self.k_u, self.literal_typo_mode);
        dx[..4].copy_from_slice(&d.to_array());
    }

    fn drive(&self, x: &[T], _u: T) -> T {
        x[0]
    }

    fn component_names(&self) -> Vec<&'static str> {
        EXO_NAMES.to_vec()
    }

    fn id(&self) -> &'static str {
        "exosystem"
    }
}

/// EI network whose disturbance is produced by a co-simulated exosystem. The state is the
/// network state followed by the exosystem state, and `u = v_u1` is read at every stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExoDrivenNetwork<T> {
    pub network: EiNetworkParams<T>,
    pub exosystem: Exosystem<T>,
}

impl<T: Real> VectorField<T> for ExoDrivenNetwork<T> {
    fn dim(&self) -> usize {
        10
    }

    fn eval(&self, x: &[T], _u: T, dx: &mut [T]) {
        let u = x[6];
        self.network.eval(&x[..6], u, &mut dx[..6]);
        self.exosystem.eval(&x[6..10], u, &mut dx[6..10]);
    }

    fn drive(&self, x: &[T], _u: T) -> T {
        x[6]
    }

    fn component_names(&self) -> Vec<&'static str> {
        NETWORK_NAMES.iter().chain(EXO_NAMES.iter()).copied().collect()
    }

    fn id(&self) -> &'static str {
        "ei_network_exo"
    }
}

/// Undamped oscillator `y'' + omega^2 y = u` in first-order form `(y, y')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtiParams<T> {
    pub omega: T,
}

impl<T: Real> LtiParams<T> {
    pub fn new(omega: T) -> Result<Self> {
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        Ok(LtiParams { omega })
    }
}

pub fn lti_deriv<T: Real>(x: (T, T), u: T, p: &LtiParams<T>) -> (T, T) {
    (x.1, u - p.omega * p.omega * x.0)
}

impl<T: Real> VectorField<T> for LtiParams<T> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[T], u: T, dx: &mut [T]) {
        let (a, b) = lti_deriv((x[0], x[1]), u, self);
        dx[0] = a;
        dx[1] = b;
    }

    fn component_names(&self) -> Vec<&'static str> {
        vec!["y", "ydot"]
    }

    fn id(&self) -> &'static str {
        "lti"
    }
}

/// The oscillator driven by `amplitude * sin(drive_omega * t + phase)`, with the sinusoid
/// generated by a harmonic pair `(s, c)` carried in the state. The drive is then evaluated at
/// every Runge-Kutta stage rather than held across a step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineDrivenLti<T> {
    pub lti: LtiParams<T>,
    pub amplitude: T,
    pub drive_omega: T,
}

impl<T: Real> SineDrivenLti<T> {
    /// State `(y, y', sin(phase), cos(phase))`.
    pub fn initial_state(&self, y: T, ydot: T, phase: T) -> [T; 4] {
        [y, ydot, phase.sin(), phase.cos()]
    }
}

impl<T: Real> VectorField<T> for SineDrivenLti<T> {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, x: &[T], _u: T, dx: &mut [T]) {
        let (a, b) = lti_deriv((x[0], x[1]), self.amplitude * x[2], &self.lti);
        dx[0] = a;
        dx[1] = b;
        dx[2] = self.drive_omega * x[3];
        dx[3] = -self.drive_omega * x[2];
    }

    fn drive(&self, x: &[T], _u: T) -> T {
        self.amplitude * x[2]
    }

    fn component_names(&self) -> Vec<&'static str> {
        vec!["y", "ydot", "s", "c"]
    }

    fn id(&self) -> &'static str {
        "lti_sine_driven"
    }
}

/// Model selector used by scenario configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
#[serde(bound = "T: Real + serde::Serialize + serde::de::DeserializeOwned")]
pub enum ModelSpec<T> {
    Fhn { params: FhnParams<T> },
    EiNetwork { params: EiNetworkParams<T> },
    Lti { params: LtiParams<T> },
}

impl<T: Real> ModelSpec<T> {
    pub fn field(&self) -> &dyn VectorField<T> {
        match self {
            ModelSpec::Fhn { params } => params,
            ModelSpec::EiNetwork { params } => params,
            ModelSpec::Lti { params } => params,
        }
    }
}
