//! Acceptance criteria for the toolkit, one line per criterion.
//!
//! Runs with a custom harness: every criterion is evaluated, a `PASS` or `FAIL` line is
//! printed with the measured values next to the fixed thresholds, and the process exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use excitable_core::analysis::{event_sync_score, SPIKE_THRESHOLD};
use excitable_core::contraction::{
    alpha_certificate, gain_matrix, integral_criterion, lambda_rate, nu, region_fhn, sigma_of_gains,
};
use excitable_core::models::{ei_deriv, exo_deriv, ExoState};
use excitable_core::scenarios::{find_builtin, run_scenario};
use excitable_core::{
    integrate, integrate_ensemble, ContractionCertificate, FhnParams, Grid, LtiParams, Metric, NetworkState,
    NeuronState, NoiseSegment, RegionLabel, SampledPath, ScenarioResult, Signal, SineDrivenLti, Trajectory,
};

const ACCEPTANCE_SEED: u64 = 7;

// Criterion 1
const C1_START_A: [f64; 2] = [-1.6, -0.6];
const C1_START_B: [f64; 2] = [-1.4, -0.7];
const C1_MU: f64 = 0.2;
const C1_MIN_WINDOW: f64 = 10.0;
const C1_SLACK: f64 = 1e-6;
// Criterion 2
const C2_DT: f64 = 1e-3;
const C2_REL_TOL: f64 = 1e-3;
// Criterion 3
const C3_PAIRS: usize = 100;
const C3_HORIZON: f64 = 50.0;
const C3_DT: f64 = 0.01;
const C3_QUAD_FACTOR: f64 = 10.0;
// Criterion 4
const C4_ENSEMBLES: usize = 200;
const C4_MEMBERS: usize = 5;
const C4_TOL: f64 = 1e-9;
// Criterion 5
const C5_CONTRACT_MAX: f64 = 0.1;
const C5_UNRELIABLE_MIN: f64 = 0.5;
// Criterion 6
const C6_SEEDS: u64 = 10;
const C6_MIN_HITS: usize = 8;
// Criterion 7
const C7_MIN_PEAKS: usize = 5;
const C7_WINDOW: (f64, f64) = (100.0, 400.0);
const C7_STATES: usize = 1000;
const C7_TOL: f64 = 1e-15;
// Criterion 8
const C8_BAND: f64 = 0.05;
const C8_RATIO_MAX: f64 = 0.01;
// Criterion 9
const C9_RATIO_MIN: f64 = 0.2;
const C9_SYNC_MAX: f64 = 0.5;
// Criterion 10
const C10_SYNC_MIN: f64 = 0.9;
const C10_AFTER: f64 = 100.0;
// Criterion 11
const C11_BALANCED_TOL: f64 = 1e-12;
const C11_KNOWN_TOL: f64 = 1e-10;
const C11_ORACLE_TOL: f64 = 1e-10;
// Criterion 12
const C12_RESONANT_MAX: f64 = 0.05 * std::f64::consts::TAU;
const C12_FACTOR: f64 = 4.0;
// Criterion 13
const C13_DTS: [f64; 4] = [0.04, 0.02, 0.01, 0.005];
const C13_SLOPE: (f64, f64) = (3.7, 4.3);

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fig1_params() -> FhnParams<f64> {
    FhnParams::new(0.7, 0.8, 0.08)
}

fn zero_path(grid: &Grid<f64>) -> SampledPath<f64> {
    Signal::constant(0.0).realize_on(grid).unwrap()
}

fn run_builtin(name: &str, seed: u64) -> ScenarioResult<f64> {
    let spec = find_builtin::<f64>(name).unwrap();
    run_scenario(&spec, &[("seed".to_string(), seed.to_string())]).unwrap()
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn c1_pair(dt: f64, t1: f64) -> (Trajectory<f64>, Trajectory<f64>) {
    let p = fig1_params();
    let grid = Grid::new(0.0, t1, dt).unwrap();
    let path = zero_path(&grid);
    (
        integrate(&p, &C1_START_A, &path, &grid).unwrap(),
        integrate(&p, &C1_START_B, &path, &grid).unwrap(),
    )
}

fn criterion_1() -> Outcome {
    let p = fig1_params();
    let (a, b) = c1_pair(0.01, 50.0);
    let inside = |k: usize| {
        region_fhn(NeuronState::from_slice(a.state(k)), C1_MU) == RegionLabel::Lower
            && region_fhn(NeuronState::from_slice(b.state(k)), C1_MU) == RegionLabel::Lower
    };
    let n_inside = (0..a.len()).take_while(|&k| inside(k)).count();
    if n_inside == 0 {
        return outcome(false, "pair does not start inside the lower region".into());
    }
    let window = a.time(n_inside - 1);
    let metric = Metric::Fhn { epsilon: p.epsilon };
    let lambda = C1_MU.sqrt();
    let d0 = metric.eval(a.state(0), b.state(0));
    let mut violations = 0;
    let mut worst = 0.0f64;
    for k in 0..n_inside {
        let bound = (-lambda * a.time(k)).exp() * d0 * (1.0 + C1_SLACK);
        let d = metric.eval(a.state(k), b.state(k));
        if d > bound {
            violations += 1;
        }
        worst = worst.max(d / bound);
    }
    let pass = window >= C1_MIN_WINDOW && violations == 0;
    outcome(
        pass,
        format!(
            "inside lower region for {window:.2} (need >= {C1_MIN_WINDOW}); rate sqrt({C1_MU}) = {lambda:.4}; \
             {violations} of {n_inside} grid points above bound, worst d/bound = {worst:.3e}; \
             implemented rate lambda_rate(mu, b) = {:.4}",
            lambda_rate(C1_MU, p.b)
        ),
    )
}

fn criterion_2() -> Outcome {
    let p = fig1_params();
    let (a, b) = c1_pair(C2_DT, 10.0);
    let metric = Metric::Fhn { epsilon: p.epsilon };
    let d2 = |k: usize| metric.eval(a.state(k), b.state(k)).powi(2);
    let mut worst = 0.0f64;
    for k in 1..a.len() - 1 {
        let fd = (d2(k + 1) - d2(k - 1)) / (2.0 * C2_DT);
        let exact = 3.0
            - nu(
                NeuronState::from_slice(a.state(k)),
                NeuronState::from_slice(b.state(k)),
                p.b,
            );
        worst = worst.max(((fd - exact) / exact).abs());
    }
    outcome(
        worst <= C2_REL_TOL,
        format!("max relative error {worst:.3e} (tol {C2_REL_TOL:e}) over [0, 10] at dt {C2_DT:e}"),
    )
}

fn random_params(rng: &mut ChaCha8Rng) -> FhnParams<f64> {
    let b = rng.random_range(0.1..0.95);
    let lo = 1.0 - 2.0 * b / 3.0;
    let a = lo + (1.0 - lo) * rng.random_range(0.05..0.95);
    let eps = rng.random_range(0.02..0.5f64.min(1.0 / b));
    FhnParams::new(a, b, eps)
}

fn random_signal(rng: &mut ChaCha8Rng, horizon: f64) -> Signal<f64> {
    match rng.random_range(0..4) {
        0 => Signal::constant(rng.random_range(-1.0..1.0)),
        1 => Signal::sine(
            rng.random_range(-0.5..0.5),
            rng.random_range(0.0..2.0),
            rng.random_range(0.05..1.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        ),
        2 => Signal::square(
            rng.random_range(2.0..30.0),
            rng.random_range(0.0..2.0),
            rng.random_range(0.1..0.9),
            rng.random_range(0.0..10.0),
        ),
        _ => {
            let cut = rng.random_range(0.2..0.8) * horizon;
            Signal::noise(
                vec![
                    NoiseSegment::new(0.0, cut, rng.random_range(-0.5..0.8), rng.random_range(0.0..0.3)),
                    NoiseSegment::new(cut, horizon, rng.random_range(-0.5..0.8), rng.random_range(0.0..0.3)),
                ],
                None,
                rng.random(),
            )
        }
    }
}

fn random_ic(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)]
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED);
    let grid = Grid::new(0.0, C3_HORIZON, C3_DT).unwrap();
    let tol = C3_QUAD_FACTOR * C3_DT;
    let (mut compared, mut mismatches) = (0, 0);
    for _ in 0..C3_PAIRS {
        let p = random_params(&mut rng);
        let path = random_signal(&mut rng, C3_HORIZON).realize_on(&grid).unwrap();
        let xa = integrate(&p, &random_ic(&mut rng), &path, &grid).unwrap();
        let xb = integrate(&p, &random_ic(&mut rng), &path, &grid).unwrap();
        let ic = integral_criterion(&xa, &xb, 0.0, C3_HORIZON, p.b).unwrap();
        if (ic.lhs - ic.rhs).abs() <= tol {
            continue;
        }
        compared += 1;
        let metric = Metric::Fhn { epsilon: p.epsilon };
        let direct = metric.eval(xa.last_state(), xb.last_state()) < metric.eval(xa.state(0), xb.state(0));
        if direct != ic.contracts {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!(
            "{mismatches} disagreements among {compared} of {C3_PAIRS} pairs outside the quadrature tolerance {tol}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED + 1);
    let grid = Grid::new(0.0, C3_HORIZON, C3_DT).unwrap();
    let (mut met, mut violations) = (0, 0);
    let (mut met_slow, mut violations_slow) = (0, 0);
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..C4_ENSEMBLES {
        let p = random_params(&mut rng);
        let signal = random_signal(&mut rng, C3_HORIZON);
        let mu = rng.random_range(0.05..1.0);
        let ics: Vec<Vec<f64>> = (0..C4_MEMBERS).map(|_| random_ic(&mut rng)).collect();
        let seed = rng.random();
        let run = integrate_ensemble(&p, &ics, &signal, &grid, seed).unwrap();
        let cert = alpha_certificate(&run.trajectories, mu, 0.0, C3_HORIZON, p.b, p.epsilon).unwrap();
        if cert.precondition_met {
            met += 1;
            worst_excess = worst_excess.max(cert.measured_ratio - cert.alpha);
            if cert.measured_ratio > cert.alpha + C4_TOL {
                violations += 1;
            }
        }
        let slow = ContractionCertificate::from_parts(
            mu,
            mu.min(p.b * p.epsilon),
            cert.t0,
            cert.t1,
            cert.delta_c,
            cert.measured_ratio,
        );
        if slow.precondition_met {
            met_slow += 1;
            if !slow.is_sound(C4_TOL) {
                violations_slow += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "precondition met in {met} of {C4_ENSEMBLES} ensembles, {violations} with measured ratio > alpha + {C4_TOL:e}; \
             max(measured - alpha) = {worst_excess:.3e}; with rate min(mu, b eps): {violations_slow} of {met_slow}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let ratio = |name: &str| run_builtin(name, ACCEPTANCE_SEED).summary.distance.unwrap().ratio;
    let (a, b, c) = (ratio("fig1a"), ratio("fig1b"), ratio("fig1c"));
    outcome(
        b < C5_CONTRACT_MAX && c < C5_CONTRACT_MAX && a > C5_UNRELIABLE_MIN,
        format!(
            "ratio fig1a = {a:.4} (need > {C5_UNRELIABLE_MIN}), fig1b = {b:.3e} (need < {C5_CONTRACT_MAX}), \
             fig1c = {c:.3e} (need < {C5_CONTRACT_MAX})"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut hits = 0;
    let mut seen = Vec::new();
    for seed in 0..C6_SEEDS {
        let r = run_builtin("fig1d", seed);
        let s = r.summary.distance.unwrap().segment_ratios;
        if s.len() == 3 && s[0] < 1.0 && s[1] > 1.0 && s[2] < 1.0 {
            hits += 1;
        }
        seen.push(fmt_list(&s));
    }
    outcome(
        hits >= C6_MIN_HITS,
        format!(
            "pattern (<1, >1, <1) in {hits} of {C6_SEEDS} seeds (need >= {C6_MIN_HITS}); segment ratios {}",
            seen.join(" ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let r = run_builtin("fig3a", ACCEPTANCE_SEED);
    let peaks = r.events_for("v_u1").unwrap().trials[0]
        .within(C7_WINDOW.0, C7_WINDOW.1)
        .count();
    let net = *r.run.model.network().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED + 2);
    let mut worst = 0.0f64;
    for _ in 0..C7_STATES {
        let mut s: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.5..2.5));
        s[0] = net.v_rest;
        let x = NetworkState::from_slice(&s);
        let d = ei_deriv(&x, rng.random_range(-2.0..2.0), &net);
        let e = exo_deriv(
            &ExoState::from_slice(&s[2..6]),
            &net.u_params,
            net.k_u,
            net.literal_typo_mode,
        );
        let ctrl = [d.v_i1, d.w_i1, d.v_i2, d.w_i2];
        for (c, x) in ctrl.iter().zip(e.to_array()) {
            worst = worst.max((c - x).abs());
        }
    }
    outcome(
        peaks >= C7_MIN_PEAKS && worst <= C7_TOL,
        format!(
            "v_u1 peaks in [{}, {}] = {peaks} (need >= {C7_MIN_PEAKS}); controller vs exosystem max difference \
             {worst:e} over {C7_STATES} states (tol {C7_TOL:e})",
            C7_WINDOW.0, C7_WINDOW.1
        ),
    )
}

fn criterion_8() -> Outcome {
    let r = run_builtin("fig3a", ACCEPTANCE_SEED);
    let reg = r.summary.regulation.as_ref().unwrap();
    let worst = reg.max_deviation.iter().copied().fold(0.0, f64::max);
    let ratio = r.summary.distance.as_ref().unwrap().ratio;
    outcome(
        reg.max_deviation.len() == 10 && worst <= C8_BAND && ratio <= C8_RATIO_MAX,
        format!(
            "max |y - v_rest| on [{}, {}] over {} trials = {worst:.3e} (need <= {C8_BAND}); distance ratio {ratio:.3e} \
             (need <= {C8_RATIO_MAX})",
            reg.window[0],
            reg.window[1],
            reg.max_deviation.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let r = run_builtin("fig3c", ACCEPTANCE_SEED);
    let ratio = r.summary.distance.as_ref().unwrap().ratio;
    let sync = r.summary.channel_sync.iter().find(|c| c.channel == "v_i1").unwrap();
    outcome(
        ratio >= C9_RATIO_MIN && sync.min < C9_SYNC_MAX,
        format!(
            "distance ratio {ratio:.4} (need >= {C9_RATIO_MIN}); min pairwise eta sync {:.4} (need < {C9_SYNC_MAX}), \
             mean {:.4}",
            sync.min, sync.mean
        ),
    )
}

fn criterion_10() -> Outcome {
    let r = run_builtin("fig3b", ACCEPTANCE_SEED);
    let eta = r.events_for("v_i1").unwrap();
    let u = r.events_for("u").unwrap();
    let scores: Vec<f64> = eta
        .trials
        .iter()
        .zip(&u.trials)
        .map(|(a, b)| event_sync_score(a, b, r.spec.analysis.sync_tolerance))
        .collect();
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let spikes = r.events_for("v_e").unwrap();
    let threshold_ok = spikes.trials.iter().all(|t| t.kind.as_str() == "spike");
    let late: Vec<usize> = spikes
        .trials
        .iter()
        .map(|t| t.times.iter().filter(|&&x| x > C10_AFTER).count())
        .collect();
    let no_late = late.iter().all(|&n| n == 0);
    outcome(
        mean >= C10_SYNC_MIN && no_late && threshold_ok,
        format!(
            "mean eta-u sync {mean:.4} (tol {}, need >= {C10_SYNC_MIN}); y spikes (threshold {SPIKE_THRESHOLD}) \
             after t = {C10_AFTER} per trial {late:?}",
            r.spec.analysis.sync_tolerance
        ),
    )
}

/// Largest eigenvalue of a symmetric 3x3 matrix from the trigonometric roots of its
/// characteristic polynomial.
fn sigma_oracle(k_e: f64, k_u: f64) -> f64 {
    let a = gain_matrix(k_e, k_u);
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return q;
    }
    let b: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
        .collect();
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED + 3);
    let balanced = (0..50)
        .map(|_| {
            let k: f64 = rng.random_range(0.0..10.0);
            sigma_of_gains(k, k).abs()
        })
        .fold(0.0f64, f64::max);
    let known = (sigma_of_gains(4.0, 0.0) - 2.0 * (2.0f64.sqrt() - 1.0)).abs();
    let mut rho_nonzero = 0;
    let mut oracle = 0.0f64;
    for _ in 0..100 {
        let (ke, ku) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let k = gain_matrix(ke, ku);
        let rho = [0.0, 1.0, -1.0];
        let q: f64 = (0..3)
            .map(|i| (0..3).map(|j| rho[i] * k[i][j] * rho[j]).sum::<f64>())
            .sum();
        if q != 0.0 {
            rho_nonzero += 1;
        }
        oracle = oracle.max((sigma_of_gains(ke, ku) - sigma_oracle(ke, ku)).abs());
    }
    outcome(
        balanced <= C11_BALANCED_TOL && known <= C11_KNOWN_TOL && rho_nonzero == 0 && oracle <= C11_ORACLE_TOL,
        format!(
            "max |sigma(k,k)| = {balanced:e}; |sigma(4,0) - 2(sqrt2-1)| = {known:e}; nonzero rho K rho^T: {rho_nonzero}; \
             max |sigma - oracle| = {oracle:e}"
        ),
    )
}

fn criterion_12() -> Outcome {
    let a = run_builtin("fig4a", ACCEPTANCE_SEED).summary.phase_dispersion.unwrap();
    let b = run_builtin("fig4b", ACCEPTANCE_SEED).summary.phase_dispersion.unwrap();
    outcome(
        a <= C12_RESONANT_MAX && b >= C12_FACTOR * a,
        format!(
            "resonant dispersion {a:.5} (need <= {C12_RESONANT_MAX:.5}); 2w dispersion {b:.4} (need >= {C12_FACTOR} x {a:.5} \
             = {:.5}; {C12_FACTOR} x threshold would be {:.4})",
            C12_FACTOR * a,
            C12_FACTOR * C12_RESONANT_MAX
        ),
    )
}

fn resonance_sup_error(dt: f64) -> f64 {
    let w = std::f64::consts::PI / 30.0;
    let field = SineDrivenLti {
        lti: LtiParams::new(w).unwrap(),
        amplitude: 1.0,
        drive_omega: w,
    };
    let grid = Grid::new(0.0, 60.0, dt).unwrap();
    let tr = integrate(&field, &field.initial_state(0.0, 0.0, 0.0), &zero_path(&grid), &grid).unwrap();
    (0..tr.len())
        .map(|k| {
            let t = tr.time(k);
            let exact = (w * t).sin() / (2.0 * w * w) - t * (w * t).cos() / (2.0 * w);
            (tr.state(k)[0] - exact).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_13() -> Outcome {
    let pts: Vec<(f64, f64)> = C13_DTS.iter().map(|&h| (h.ln(), resonance_sup_error(h).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    outcome(
        (C13_SLOPE.0..=C13_SLOPE.1).contains(&slope),
        format!(
            "slope {slope:.4} over dt {C13_DTS:?} (need in [{}, {}])",
            C13_SLOPE.0, C13_SLOPE.1
        ),
    )
}

fn run_fig1d(dir: &Path, threads: Option<&str>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_excitable"));
    cmd.args(["run", "fig1d", "--seed", "7", "--out"]).arg(dir);
    match threads {
        Some(n) => cmd.env("RAYON_NUM_THREADS", n),
        None => cmd.env_remove("RAYON_NUM_THREADS"),
    };
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(dir.join("trajectories.csv")).unwrap()
}

fn criterion_14() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = [None, None, Some("1"), Some("4")]
        .iter()
        .enumerate()
        .map(|(i, t)| run_fig1d(&tmp.path().join(format!("run{i}")), *t))
        .collect();
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        identical && !runs[0].is_empty(),
        format!(
            "trajectories.csv identical across 2 default runs and RAYON_NUM_THREADS=1,4: {identical} ({} bytes)",
            runs[0].len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("contraction bound in the lower region", criterion_1),
        ("squared-distance derivative identity", criterion_2),
        ("integral criterion agrees with direct comparison", criterion_3),
        ("alpha certificate soundness", criterion_4),
        ("reliability ordering of the FHN ensembles", criterion_5),
        ("segment trend under three-segment noise", criterion_6),
        ("exosystem oscillation and internal-model identity", criterion_7),
        ("regulation against the exosystem", criterion_8),
        ("no regulation with a mismatched exosystem", criterion_9),
        ("event tracking of a sinusoidal disturbance", criterion_10),
        ("gain matrix and its largest eigenvalue", criterion_11),
        ("peak synchronization of the resonant oscillator", criterion_12),
        ("integrator convergence order", criterion_13),
        ("byte-identical output across runs and thread counts", criterion_14),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict}: {name}: {} [{:.2}s]",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {} passed, {} failed{}",
        criteria.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
