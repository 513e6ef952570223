//! Named, fully parameterized experiment recipes and the runner that turns one into
//! trajectories, distance curves, events, and certificates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analysis::{
    detect_peaks, detect_spikes, event_sync_score, peak_phase_dispersion, segment_ratios, EventKind, EventTrain,
};
use crate::contraction::{
    alpha_certificate, co_contraction_time, distance_curve, Classifier, ContractionCertificate, DistanceCurve, Metric,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::{integrate_ensemble, EnsembleRun};
use crate::models::{EiNetworkParams, ExoDrivenNetwork, Exosystem, FhnParams, LtiParams, ModelSpec, VectorField};
use crate::scalar::Real;
use crate::signals::{NoiseSegment, Signal};

/// Version of every JSON artifact layout produced by the toolkit.
pub const FORMAT_VERSION: u32 = 1;

/// Stream of the seeded generator reserved for initial conditions; noise uses stream 0.
const IC_STREAM: u64 = 1;

/// Where the input comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub enum InputSpec<T> {
    Signal {
        signal: Signal<T>,
    },
    /// An exosystem integrated alongside an EI network; its first component is the input.
    Exosystem {
        exosystem: Exosystem<T>,
        initial_state: [T; 4],
    },
}

/// How ensemble initial states are produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub enum IcRecipe<T> {
    Explicit {
        states: Vec<Vec<T>>,
    },
    /// Regular grid centred on the FHN rest point, `counts[i]` points over `±extent[i]`.
    GridAroundRest {
        extent: [T; 2],
        counts: [usize; 2],
    },
    /// Uniform in a Euclidean ball around `center`, or around the model's rest state when absent.
    RandomBall {
        radius: T,
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<T>>,
    },
    /// Uniform in the box `center ± half_widths` (origin by default).
    RandomBox {
        half_widths: Vec<T>,
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<T>>,
    },
    /// EI trials: plant uniform in a disc of `plant_radius` around its rest point, each
    /// controller neuron uniform in `[-controller_half_widths[0], ..] x [-.., controller_half_widths[1]]`.
    EiTrials {
        count: usize,
        plant_radius: T,
        controller_half_widths: [T; 2],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horizon<T> {
    pub t0: T,
    pub t1: T,
    pub dt: T,
}

impl<T: Real> Horizon<T> {
    pub fn grid(&self) -> Result<Grid<T>> {
        Grid::new(self.t0, self.t1, self.dt)
    }
}

/// Event extraction for one state component (or `u`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventPlan<T> {
    pub channel: String,
    pub kind: EventKind,
    /// Spike threshold; ignored for peaks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificatePlan<T> {
    pub mu: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan<T> {
    pub period: T,
    pub window: [T; 2],
}

/// What to compute after integration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub struct AnalysisPlan<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric<T>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segment_boundaries: Vec<T>,
    /// Margin for region occupancy and co-contraction time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_mu: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificatePlan<T>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventPlan<T>>,
    /// Channel pairs compared trial by trial with [`event_sync_score`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sync_pairs: Vec<[String; 2]>,
    pub sync_tolerance: T,
    /// Peak-phase dispersion of the first peak channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhasePlan<T>>,
    /// Window for the largest deviation of `v_e` from its rest value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regulation_window: Option<[T; 2]>,
}

impl<T: Real> Default for AnalysisPlan<T> {
    fn default() -> Self {
        AnalysisPlan {
            metric: None,
            segment_boundaries: Vec::new(),
            region_mu: None,
            certificate: None,
            events: Vec::new(),
            sync_pairs: Vec::new(),
            sync_tolerance: T::of(crate::analysis::SYNC_TOLERANCE),
            phase: None,
            regulation_window: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub struct ScenarioSpec<T> {
    pub name: String,
    pub description: String,
    pub model: ModelSpec<T>,
    pub input: InputSpec<T>,
    pub initial_conditions: IcRecipe<T>,
    pub horizon: Horizon<T>,
    pub seed: u64,
    #[serde(default)]
    pub analysis: AnalysisPlan<T>,
}

/// The vector field a scenario integrates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScenarioField<T> {
    Fhn(FhnParams<T>),
    EiNetwork(EiNetworkParams<T>),
    ExoDriven(ExoDrivenNetwork<T>),
    Lti(LtiParams<T>),
}

impl<T: Real> ScenarioField<T> {
    fn inner(&self) -> &dyn VectorField<T> {
        match self {
            ScenarioField::Fhn(p) => p,
            ScenarioField::EiNetwork(p) => p,
            ScenarioField::ExoDriven(p) => p,
            ScenarioField::Lti(p) => p,
        }
    }

    pub fn network(&self) -> Option<&EiNetworkParams<T>> {
        match self {
            ScenarioField::EiNetwork(p) => Some(p),
            ScenarioField::ExoDriven(p) => Some(&p.network),
            _ => None,
        }
    }
}

impl<T: Real> VectorField<T> for ScenarioField<T> {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn eval(&self, x: &[T], u: T, dx: &mut [T]) {
        self.inner().eval(x, u, dx)
    }

    fn drive(&self, x: &[T], u: T) -> T {
        self.inner().drive(x, u)
    }

    fn component_names(&self) -> Vec<&'static str> {
        self.inner().component_names()
    }

    fn id(&self) -> &'static str {
        self.inner().id()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub format_version: u32,
    pub spec_hash: String,
    pub seed: u64,
    pub toolkit: String,
    pub toolkit_version: String,
}

/// Events of one channel for every trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelEvents<T> {
    pub channel: String,
    pub kind: EventKind,
    pub trials: Vec<EventTrain<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary<T> {
    pub initial: T,
    pub last: T,
    pub ratio: T,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segment_ratios: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSync<T> {
    pub channel: String,
    /// Scores for every unordered trial pair `(i, j)`, `i < j`, in lexicographic order.
    pub pairwise: Vec<T>,
    pub min: T,
    pub mean: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSync<T> {
    pub channels: [String; 2],
    pub per_trial: Vec<T>,
    pub mean: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulationSummary<T> {
    pub v_rest: T,
    pub window: [T; 2],
    pub max_deviation: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned", default)]
pub struct Summary<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceSummary<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub co_contraction_time: Option<T>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub event_counts: Vec<(String, Vec<usize>)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub channel_sync: Vec<ChannelSync<T>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cross_sync: Vec<CrossSync<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_dispersion: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regulation: Option<RegulationSummary<T>>,
}

impl<T> Default for Summary<T> {
    fn default() -> Self {
        Summary {
            distance: None,
            co_contraction_time: None,
            event_counts: Vec::new(),
            channel_sync: Vec::new(),
            cross_sync: Vec::new(),
            phase_dispersion: None,
            regulation: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioResult<T> {
    /// The scenario actually run, overrides and seed applied.
    pub spec: ScenarioSpec<T>,
    pub run: EnsembleRun<T, ScenarioField<T>>,
    pub component_names: Vec<&'static str>,
    pub distance: Option<DistanceCurve<T>>,
    pub certificate: Option<ContractionCertificate<T>>,
    pub events: Vec<ChannelEvents<T>>,
    pub summary: Summary<T>,
    pub provenance: Provenance,
}

impl<T: Real> ScenarioResult<T> {
    /// Index of a state component by name; `y` and `eta` alias `v_e` and `v_i1` on networks.
    pub fn channel_index(&self, channel: &str) -> Option<usize> {
        channel_index(&self.component_names, channel)
    }

    /// A state component (or `u`) of one trial over the whole grid.
    pub fn channel(&self, trial: usize, channel: &str) -> Option<Vec<T>> {
        channel_values(&self.run, &self.component_names, trial, channel)
    }

    pub fn events_for(&self, channel: &str) -> Option<&ChannelEvents<T>> {
        self.events.iter().find(|e| e.channel == channel)
    }
}

fn channel_index(names: &[&str], channel: &str) -> Option<usize> {
    if let Some(i) = names.iter().position(|n| *n == channel) {
        return Some(i);
    }
    let alias = match channel {
        "y" => "v_e",
        "eta" => "v_i1",
        _ => return None,
    };
    names.iter().position(|n| *n == alias)
}

fn channel_values<T: Real, M>(run: &EnsembleRun<T, M>, names: &[&str], trial: usize, channel: &str) -> Option<Vec<T>> {
    let tr = run.trajectories.get(trial)?;
    if channel == "u" {
        return Some(tr.inputs.clone());
    }
    channel_index(names, channel).map(|i| tr.component(i))
}

// ---------------------------------------------------------------------------------------------
// Registry

fn fhn_fig1<T: Real>() -> FhnParams<T> {
    FhnParams::new(T::of(0.7), T::of(0.8), T::of(1.0 / 12.5))
}

fn fig1<T: Real>(name: &str, description: &str, signal: Signal<T>, t1: f64) -> ScenarioSpec<T> {
    let p = fhn_fig1::<T>();
    ScenarioSpec {
        name: name.into(),
        description: description.into(),
        model: ModelSpec::Fhn { params: p },
        input: InputSpec::Signal { signal },
        initial_conditions: IcRecipe::GridAroundRest {
            extent: [T::of(0.5), T::of(0.5)],
            counts: [3, 3],
        },
        horizon: Horizon {
            t0: T::zero(),
            t1: T::of(t1),
            dt: T::of(0.01),
        },
        seed: 7,
        analysis: AnalysisPlan {
            metric: Some(Metric::Fhn { epsilon: p.epsilon }),
            region_mu: Some(T::of(0.2)),
            certificate: Some(CertificatePlan {
                mu: T::of(0.2),
                t0: None,
                t1: None,
            }),
            events: vec![EventPlan {
                channel: "v".into(),
                kind: EventKind::Spike,
                threshold: Some(T::of(crate::analysis::SPIKE_THRESHOLD)),
            }],
            ..AnalysisPlan::default()
        },
    }
}

fn ei_network<T: Real>() -> EiNetworkParams<T> {
    let e = FhnParams::new(T::of(0.7), T::of(0.8), T::of(1.0 / 12.5));
    let u = FhnParams::new(T::of(0.6), T::of(0.7), T::of(1.0 / 30.0));
    EiNetworkParams::new(e, u, T::of(4.0), T::of(0.5)).expect("builtin gains are non-negative")
}

fn exosystem_input<T: Real>(epsilon_u: f64) -> InputSpec<T> {
    let net = ei_network::<T>();
    InputSpec::Exosystem {
        exosystem: Exosystem {
            params: FhnParams::new(net.u_params.a, net.u_params.b, T::of(epsilon_u)),
            k_u: net.k_u,
            literal_typo_mode: false,
        },
        initial_state: [T::of(-1.2), T::of(-0.6), T::of(1.0), T::of(0.3)],
    }
}

fn fig3<T: Real>(name: &str, description: &str, input: InputSpec<T>) -> ScenarioSpec<T> {
    let net = ei_network::<T>();
    let exo = matches!(input, InputSpec::Exosystem { .. });
    let peak = |c: &str| EventPlan {
        channel: c.into(),
        kind: EventKind::Peak,
        threshold: None,
    };
    let mut events = vec![
        EventPlan {
            channel: "v_e".into(),
            kind: EventKind::Spike,
            threshold: Some(T::of(crate::analysis::SPIKE_THRESHOLD)),
        },
        peak("v_i1"),
        peak("u"),
    ];
    if exo {
        events.push(peak("v_u1"));
    }
    ScenarioSpec {
        name: name.into(),
        description: description.into(),
        model: ModelSpec::EiNetwork { params: net },
        input,
        initial_conditions: IcRecipe::EiTrials {
            count: 10,
            plant_radius: T::of(0.5),
            controller_half_widths: [T::of(2.0), T::of(1.0)],
        },
        horizon: Horizon {
            t0: T::zero(),
            t1: T::of(400.0),
            dt: T::of(0.01),
        },
        seed: 7,
        analysis: AnalysisPlan {
            metric: Some(Metric::Network {
                epsilon_e: net.e_params.epsilon,
                epsilon_u: net.u_params.epsilon,
            }),
            events,
            sync_pairs: vec![["v_i1".into(), "u".into()]],
            regulation_window: Some([T::of(300.0), T::of(400.0)]),
            ..AnalysisPlan::default()
        },
    }
}

fn fig4<T: Real>(name: &str, description: &str, drive_multiple: f64) -> ScenarioSpec<T> {
    let omega = std::f64::consts::PI / 30.0;
    ScenarioSpec {
        name: name.into(),
        description: description.into(),
        model: ModelSpec::Lti {
            params: LtiParams::new(T::of(omega)).expect("positive frequency"),
        },
        input: InputSpec::Signal {
            signal: Signal::sine(T::zero(), T::one(), T::of(drive_multiple * omega), T::zero()),
        },
        initial_conditions: IcRecipe::RandomBox {
            half_widths: vec![T::one(), T::one()],
            count: 5,
            center: None,
        },
        horizon: Horizon {
            t0: T::zero(),
            t1: T::of(600.0),
            dt: T::of(0.01),
        },
        seed: 7,
        analysis: AnalysisPlan {
            metric: Some(Metric::Euclidean),
            events: vec![EventPlan {
                channel: "y".into(),
                kind: EventKind::Peak,
                threshold: None,
            }],
            phase: Some(PhasePlan {
                period: T::of(2.0 * std::f64::consts::PI / omega),
                window: [T::of(480.0), T::of(600.0)],
            }),
            ..AnalysisPlan::default()
        },
    }
}

/// Every builtin scenario, in a fixed order.
pub fn builtin_scenarios<T: Real>() -> Vec<ScenarioSpec<T>> {
    let f = T::of;
    vec![
        fig1(
            "fig1a",
            "FHN ensemble under constant input 0.7",
            Signal::constant(f(0.7)),
            400.0,
        ),
        fig1(
            "fig1b",
            "FHN ensemble under input 0.7 + 0.2 sin(pi t / 23)",
            Signal::sine(f(0.7), f(0.2), T::PI() / f(23.0), T::zero()),
            400.0,
        ),
        fig1(
            "fig1c",
            "FHN ensemble under a square wave of period 60, amplitude 0.6, duty cycle 1/3",
            Signal::square(f(60.0), f(0.6), f(1.0 / 3.0), T::zero()),
            400.0,
        ),
        fig1(
            "fig1d",
            "FHN ensemble under frozen piecewise Gaussian noise with three bias/variance segments",
            Signal::noise(
                vec![
                    NoiseSegment::new(f(0.0), f(100.0), f(0.5), f(0.25)),
                    NoiseSegment::new(f(100.0), f(200.0), f(0.3), f(0.01)),
                    NoiseSegment::new(f(200.0), f(300.0), f(0.1), f(0.0025)),
                ],
                None,
                7,
            ),
            300.0,
        )
        .with_segments(vec![f(100.0), f(200.0)]),
        fig3(
            "fig3a",
            "EI regulation network rejecting a co-simulated half-center exosystem",
            exosystem_input(1.0 / 30.0),
        ),
        fig3(
            "fig3b",
            "EI regulation network driven by 2 sin(pi t / 30), outside its internal model",
            InputSpec::Signal {
                signal: Signal::sine(T::zero(), f(2.0), T::PI() / f(30.0), T::zero()),
            },
        ),
        fig3(
            "fig3c",
            "EI regulation network against an exosystem with epsilon_u = 1/5 (model mismatch)",
            exosystem_input(1.0 / 5.0),
        ),
        fig4(
            "fig4a",
            "Undamped oscillator driven at resonance, sin(omega t), omega = pi/30",
            1.0,
        ),
        fig4(
            "fig4b",
            "Undamped oscillator driven at twice its frequency, sin(2 omega t)",
            2.0,
        ),
    ]
}

impl<T: Real> ScenarioSpec<T> {
    fn with_segments(mut self, boundaries: Vec<T>) -> Self {
        self.analysis.segment_boundaries = boundaries;
        self
    }
}

pub fn find_builtin<T: Real>(name: &str) -> Result<ScenarioSpec<T>> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

// ---------------------------------------------------------------------------------------------
// Spec handling

impl<T: Real + Serialize + DeserializeOwned> ScenarioSpec<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    /// Applies `path=value` overrides. Paths are dotted object keys or array indices, `*`
    /// matching every element; values are parsed as JSON and fall back to plain strings.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = serde_json::to_value(self)?;
        for (path, raw) in overrides {
            let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            let keys: Vec<&str> = path.split('.').collect();
            if keys.iter().any(|k| k.is_empty()) {
                return Err(Error::InvalidOverride(path.clone(), "empty path segment".into()));
            }
            let hits = set_path(&mut doc, &keys, &value);
            if hits == 0 {
                return Err(Error::InvalidOverride(path.clone(), "no such field".into()));
            }
        }
        let spec: Self = serde_json::from_value(doc.clone()).map_err(|e| {
            Error::InvalidOverride(
                overrides
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                e.to_string(),
            )
        })?;
        // Keys that did not exist and were dropped on the way back in are typos.
        let round = serde_json::to_value(&spec)?;
        for (path, _) in overrides {
            let keys: Vec<&str> = path.split('.').collect();
            if count_path(&round, &keys) == 0 {
                return Err(Error::InvalidOverride(path.clone(), "no such field".into()));
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn set_path(doc: &mut Value, keys: &[&str], value: &Value) -> usize {
    let (head, rest) = match keys.split_first() {
        Some(x) => x,
        None => {
            *doc = value.clone();
            return 1;
        }
    };
    match doc {
        Value::Object(map) if *head == "*" => map.values_mut().map(|v| set_path(v, rest, value)).sum(),
        Value::Object(map) => match map.get_mut(*head) {
            Some(v) => set_path(v, rest, value),
            None if rest.is_empty() => {
                map.insert(head.to_string(), value.clone());
                1
            }
            None => 0,
        },
        Value::Array(items) if *head == "*" => items.iter_mut().map(|v| set_path(v, rest, value)).sum(),
        Value::Array(items) => match head.parse::<usize>().ok().and_then(|i| items.get_mut(i)) {
            Some(v) => set_path(v, rest, value),
            None => 0,
        },
        _ => 0,
    }
}

fn count_path(doc: &Value, keys: &[&str]) -> usize {
    let (head, rest) = match keys.split_first() {
        Some(x) => x,
        None => return 1,
    };
    match doc {
        Value::Object(map) if *head == "*" => map.values().map(|v| count_path(v, rest)).sum(),
        Value::Object(map) => map.get(*head).map_or(0, |v| count_path(v, rest)),
        Value::Array(items) if *head == "*" => items.iter().map(|v| count_path(v, rest)).sum(),
        Value::Array(items) => head
            .parse::<usize>()
            .ok()
            .and_then(|i| items.get(i))
            .map_or(0, |v| count_path(v, rest)),
        _ => 0,
    }
}

impl<T: Real> ScenarioSpec<T> {
    /// Checks that the scenario resolves to a runnable ensemble.
    pub fn validate(&self) -> Result<()> {
        self.horizon.grid()?;
        match (&self.model, &self.input) {
            (_, InputSpec::Signal { signal }) => signal.validate()?,
            (ModelSpec::EiNetwork { .. }, InputSpec::Exosystem { .. }) => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "an exosystem input requires the EI network model".into(),
                ))
            }
        }
        if let ModelSpec::Lti { params } = &self.model {
            LtiParams::new(params.omega)?;
        }
        self.field()?;
        Ok(())
    }

    pub fn field(&self) -> Result<ScenarioField<T>> {
        Ok(match (&self.model, &self.input) {
            (ModelSpec::Fhn { params }, _) => ScenarioField::Fhn(*params),
            (ModelSpec::EiNetwork { params }, InputSpec::Exosystem { exosystem, .. }) => {
                ScenarioField::ExoDriven(ExoDrivenNetwork {
                    network: *params,
                    exosystem: *exosystem,
                })
            }
            (ModelSpec::EiNetwork { params }, _) => ScenarioField::EiNetwork(*params),
            (ModelSpec::Lti { params }, _) => ScenarioField::Lti(*params),
        })
    }

    fn model_dim(&self) -> usize {
        self.model.field().dim()
    }

    /// Model state around which unseeded recipes are centred.
    fn reference_state(&self) -> Result<Vec<T>> {
        Ok(match &self.model {
            ModelSpec::Fhn { params } => {
                let r = params.rest_point()?;
                vec![r.v, r.w]
            }
            ModelSpec::EiNetwork { params } => {
                let e = params.e_params.rest_point()?;
                let u = params.u_params.rest_point()?;
                vec![e.v, e.w, u.v, u.w, u.v, u.w]
            }
            ModelSpec::Lti { .. } => vec![T::zero(); 2],
        })
    }
}

/// Initial states produced by `recipe` for the scenario's model, drawn from `seed` when random.
pub fn default_initial_conditions<T: Real>(spec: &ScenarioSpec<T>, seed: u64) -> Result<Vec<Vec<T>>> {
    let dim = spec.model_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(IC_STREAM);
    let mut unit = || T::of(rng.random_range(-1.0..1.0));
    let check_len = |v: &[T], what: &str| {
        if v.len() != dim {
            Err(Error::InvalidParameter(format!(
                "{what} has {} components, model has {dim}",
                v.len()
            )))
        } else {
            Ok(())
        }
    };
    let states = match &spec.initial_conditions {
        IcRecipe::Explicit { states } => {
            for s in states {
                check_len(s, "initial state")?;
            }
            states.clone()
        }
        IcRecipe::GridAroundRest { extent, counts } => {
            let params = match &spec.model {
                ModelSpec::Fhn { params } => params,
                _ => {
                    return Err(Error::InvalidParameter(
                        "grid_around_rest applies to the FHN model".into(),
                    ))
                }
            };
            let rest = params.rest_point()?;
            let offsets = |n: usize, e: T| -> Vec<T> {
                if n == 1 {
                    vec![T::zero()]
                } else {
                    (0..n)
                        .map(|i| -e + T::of(2.0) * e * T::of_usize(i) / T::of_usize(n - 1))
                        .collect()
                }
            };
            let mut out = Vec::new();
            for dv in offsets(counts[0], extent[0]) {
                for dw in offsets(counts[1], extent[1]) {
                    out.push(vec![rest.v + dv, rest.w + dw]);
                }
            }
            out
        }
        IcRecipe::RandomBall { radius, count, center } => {
            let c = match center {
                Some(c) => c.clone(),
                None => spec.reference_state()?,
            };
            check_len(&c, "ball center")?;
            let mut out = Vec::with_capacity(*count);
            while out.len() < *count {
                let x: Vec<T> = (0..dim).map(|_| unit()).collect();
                if x.iter().map(|&v| v * v).sum::<T>() <= T::one() {
                    out.push(c.iter().zip(&x).map(|(&c, &x)| c + *radius * x).collect());
                }
            }
            out
        }
        IcRecipe::RandomBox {
            half_widths,
            count,
            center,
        } => {
            check_len(half_widths, "half_widths")?;
            let c = center.clone().unwrap_or_else(|| vec![T::zero(); dim]);
            check_len(&c, "box center")?;
            (0..*count)
                .map(|_| c.iter().zip(half_widths).map(|(&c, &h)| c + h * unit()).collect())
                .collect()
        }
        IcRecipe::EiTrials {
            count,
            plant_radius,
            controller_half_widths,
        } => {
            let params = match &spec.model {
                ModelSpec::EiNetwork { params } => params,
                _ => {
                    return Err(Error::InvalidParameter(
                        "ei_trials applies to the EI network model".into(),
                    ))
                }
            };
            let rest = params.e_params.rest_point()?;
            let mut out = Vec::with_capacity(*count);
            for _ in 0..*count {
                let (dv, dw) = loop {
                    let (a, b) = (unit(), unit());
                    if a * a + b * b <= T::one() {
                        break (a, b);
                    }
                };
                let mut s = vec![rest.v + *plant_radius * dv, rest.w + *plant_radius * dw];
                for _ in 0..2 {
                    s.push(controller_half_widths[0] * unit());
                    s.push(controller_half_widths[1] * unit());
                }
                out.push(s);
            }
            out
        }
    };
    if states.is_empty() {
        return Err(Error::TooFewMembers { needed: 1, got: 0 });
    }
    Ok(states)
}

// ---------------------------------------------------------------------------------------------
// Runner

/// Resolves, integrates and analyses `spec` after applying `overrides`.
pub fn run_scenario<T>(spec: &ScenarioSpec<T>, overrides: &[(String, String)]) -> Result<ScenarioResult<T>>
where
    T: Real + Serialize + DeserializeOwned,
{
    let spec = spec.with_overrides(overrides)?;
    spec.validate()?;
    let grid = spec.horizon.grid()?;
    let field = spec.field()?;
    let mut ics = default_initial_conditions(&spec, spec.seed)?;
    let signal = match &spec.input {
        InputSpec::Signal { signal } => signal.clone(),
        InputSpec::Exosystem { initial_state, .. } => {
            for s in &mut ics {
                s.extend_from_slice(initial_state);
            }
            Signal::constant(T::zero())
        }
    };
    let run = integrate_ensemble(&field, &ics, &signal, &grid, spec.seed)?;
    let names = field.component_names();
    let plan = &spec.analysis;

    let distance = match (&plan.metric, run.len() >= 2) {
        (Some(m), true) => Some(distance_curve(&run.trajectories, m)?),
        _ => None,
    };
    let mut summary = Summary::default();
    if let Some(curve) = &distance {
        let fits = plan.segment_boundaries.iter().all(|&b| b > grid.t0 && b < grid.t1());
        let segments = if plan.segment_boundaries.is_empty() || !fits {
            Vec::new()
        } else {
            segment_ratios(&curve.grid, &curve.values, &plan.segment_boundaries)?
        };
        summary.distance = Some(DistanceSummary {
            initial: curve.values[0],
            last: curve.values[curve.values.len() - 1],
            ratio: curve.final_ratio(),
            segment_ratios: segments,
        });
    }
    let classifier = match field {
        ScenarioField::Fhn(_) => Some(Classifier::Fhn),
        ScenarioField::EiNetwork(_) | ScenarioField::ExoDriven(_) => Some(Classifier::Network),
        ScenarioField::Lti(_) => None,
    };
    if let (Some(mu), Some(c)) = (plan.region_mu, classifier) {
        summary.co_contraction_time = Some(co_contraction_time(&run.trajectories, mu, grid.t0, grid.t1(), c)?);
    }
    let certificate = match (&plan.certificate, &field) {
        (Some(cp), ScenarioField::Fhn(p)) if run.len() >= 2 => Some(alpha_certificate(
            &run.trajectories,
            cp.mu,
            cp.t0.unwrap_or(grid.t0),
            cp.t1.unwrap_or(grid.t1()),
            p.b,
            p.epsilon,
        )?),
        _ => None,
    };

    let mut events = Vec::new();
    for ep in &plan.events {
        let mut trials = Vec::with_capacity(run.len());
        for trial in 0..run.len() {
            let values = channel_values(&run, &names, trial, &ep.channel).ok_or_else(|| {
                Error::InvalidParameter(format!("unknown channel '{}' for model {}", ep.channel, field.id()))
            })?;
            trials.push(match ep.kind {
                EventKind::Spike => detect_spikes(
                    &grid,
                    &values,
                    ep.threshold.unwrap_or(T::of(crate::analysis::SPIKE_THRESHOLD)),
                    &ep.channel,
                ),
                EventKind::Peak => detect_peaks(&grid, &values, &ep.channel),
            });
        }
        summary
            .event_counts
            .push((ep.channel.clone(), trials.iter().map(|t| t.len()).collect()));
        if trials.len() >= 2 {
            let mut pairwise = Vec::new();
            for i in 0..trials.len() {
                for j in i + 1..trials.len() {
                    pairwise.push(event_sync_score(&trials[i], &trials[j], plan.sync_tolerance));
                }
            }
            summary.channel_sync.push(ChannelSync {
                channel: ep.channel.clone(),
                min: pairwise.iter().copied().fold(T::infinity(), T::min),
                mean: mean(&pairwise),
                pairwise,
            });
        }
        events.push(ChannelEvents {
            channel: ep.channel.clone(),
            kind: ep.kind,
            trials,
        });
    }
    for [a, b] in &plan.sync_pairs {
        let find = |c: &str| {
            events
                .iter()
                .find(|e| e.channel == c)
                .ok_or_else(|| Error::InvalidParameter(format!("sync pair channel '{c}' has no event plan")))
        };
        let (ea, eb) = (find(a)?, find(b)?);
        let per_trial: Vec<T> = ea
            .trials
            .iter()
            .zip(&eb.trials)
            .map(|(x, y)| event_sync_score(x, y, plan.sync_tolerance))
            .collect();
        summary.cross_sync.push(CrossSync {
            channels: [a.clone(), b.clone()],
            mean: mean(&per_trial),
            per_trial,
        });
    }
    if let Some(pp) = &plan.phase {
        if let Some(ev) = events.iter().find(|e| e.kind == EventKind::Peak) {
            summary.phase_dispersion = peak_phase_dispersion(&ev.trials, pp.period, (pp.window[0], pp.window[1]));
        }
    }
    let regulation = plan
        .regulation_window
        .and_then(|w| grid.window(w[0], w[1]).ok().map(|k| (w, k)));
    if let (Some((w, (k0, k1))), Some(net)) = (regulation, field.network()) {
        let max_deviation = run
            .trajectories
            .iter()
            .map(|tr| {
                (k0..=k1)
                    .map(|k| (tr.state(k)[0] - net.v_rest).abs())
                    .fold(T::zero(), T::max)
            })
            .collect();
        summary.regulation = Some(RegulationSummary {
            v_rest: net.v_rest,
            window: w,
            max_deviation,
        });
    }

    let provenance = Provenance {
        format_version: FORMAT_VERSION,
        spec_hash: spec.hash()?,
        seed: spec.seed,
        toolkit: env!("CARGO_PKG_NAME").to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(ScenarioResult {
        spec,
        run,
        component_names: names,
        distance,
        certificate,
        events,
        summary,
        provenance,
    })
}

fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        T::nan()
    } else {
        xs.iter().copied().sum::<T>() / T::of_usize(xs.len())
    }
}
