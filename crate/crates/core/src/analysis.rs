//! Event extraction and event-level statistics: threshold spikes, local peaks, cross-train
//! synchronization, peak-phase dispersion, and per-segment distance ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Default spike threshold, the edge of the upper contraction region.
pub const SPIKE_THRESHOLD: f64 = 1.0;

/// Default matching tolerance for [`event_sync_score`], in time units.
pub const SYNC_TOLERANCE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Spike,
    Peak,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Spike => "spike",
            EventKind::Peak => "peak",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventTrain<T> {
    pub times: Vec<T>,
    pub kind: EventKind,
    pub channel: String,
}

impl<T: Real> EventTrain<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Events with `lo <= t <= hi`.
    pub fn within(&self, lo: T, hi: T) -> impl Iterator<Item = T> + '_ {
        self.times.iter().copied().filter(move |&t| t >= lo && t <= hi)
    }
}

/// Upward threshold crossings (`v[k-1] < threshold <= v[k]`), timed by linear interpolation.
pub fn detect_spikes<T: Real>(grid: &Grid<T>, values: &[T], threshold: T, channel: &str) -> EventTrain<T> {
    let mut times = Vec::new();
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        if a < threshold && threshold <= b {
            let frac = (threshold - a) / (b - a);
            times.push(grid.time(k - 1) + frac * grid.dt);
        }
    }
    EventTrain {
        times,
        kind: EventKind::Spike,
        channel: channel.to_string(),
    }
}

/// Local maxima with parabolic refinement of the peak time.
///
/// A sample is a peak when it is strictly above its left neighbour and the run of equal values
/// starting at it is followed by a drop. Plateaus are reported at their leftmost sample, except
/// two-sample plateaus, which the parabola places midway.
pub fn detect_peaks<T: Real>(grid: &Grid<T>, values: &[T], channel: &str) -> EventTrain<T> {
    let mut times = Vec::new();
    let n = values.len();
    let mut k = 1;
    while k + 1 < n {
        let y0 = values[k];
        if values[k - 1] < y0 && y0 >= values[k + 1] {
            let mut end = k;
            while end + 1 < n && values[end + 1] == y0 {
                end += 1;
            }
            if end + 1 < n && values[end + 1] < y0 {
                let t = if end - k <= 1 {
                    let (ym, yp) = (values[k - 1], values[k + 1]);
                    let denom = ym - T::of(2.0) * y0 + yp;
                    let offset = if denom < T::zero() {
                        (T::of(0.5) * (ym - yp) / denom).max(T::of(-0.5)).min(T::of(0.5))
                    } else {
                        T::zero()
                    };
                    grid.time(k) + offset * grid.dt
                } else {
                    grid.time(k)
                };
                times.push(t);
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    EventTrain {
        times,
        kind: EventKind::Peak,
        channel: channel.to_string(),
    }
}

/// Fraction of events matched one-to-one within `tol`: `2 matches / (|a| + |b|)`.
///
/// Candidate pairs are taken greedily in order of increasing time difference; ties are broken by
/// the pair's (earlier, later) event times so the score does not depend on argument order.
pub fn event_sync_score<T: Real>(a: &EventTrain<T>, b: &EventTrain<T>, tol: T) -> T {
    let total = a.len() + b.len();
    if total == 0 {
        return T::one();
    }
    if a.is_empty() || b.is_empty() {
        return T::zero();
    }
    let mut pairs = Vec::new();
    for (i, &ta) in a.times.iter().enumerate() {
        let lo = b.times.partition_point(|&t| t < ta - tol);
        for (j, &tb) in b.times.iter().enumerate().skip(lo) {
            if tb > ta + tol {
                break;
            }
            pairs.push(((ta - tb).abs(), ta.min(tb), ta.max(tb), i, j));
        }
    }
    pairs.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then(x.1.partial_cmp(&y.1).unwrap())
            .then(x.2.partial_cmp(&y.2).unwrap())
    });
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut matches = 0usize;
    for &(_, _, _, i, j) in &pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matches += 1;
        }
    }
    T::of_usize(2 * matches) / T::of_usize(total)
}

/// Circular standard deviation `sqrt(-2 ln R)` of event phases modulo `period`, pooled over
/// trains, for events inside `[lo, hi]`. `None` with fewer than two events.
pub fn peak_phase_dispersion<T: Real>(trains: &[EventTrain<T>], period: T, window: (T, T)) -> Option<T> {
    let two_pi = T::TAU();
    let mut c = T::zero();
    let mut s = T::zero();
    let mut n = 0usize;
    for train in trains {
        for t in train.within(window.0, window.1) {
            let phase = (t - period * (t / period).floor()) * two_pi / period;
            c += phase.cos();
            s += phase.sin();
            n += 1;
        }
    }
    if n < 2 {
        return None;
    }
    let r = ((c * c + s * s).sqrt() / T::of_usize(n))
        .min(T::one())
        .max(T::min_positive_value());
    Some((-T::of(2.0) * r.ln()).sqrt())
}

/// `d(end) / d(start)` for each segment cut by `boundaries`; `0/0` counts as 1.
pub fn segment_ratios<T: Real>(grid: &Grid<T>, values: &[T], boundaries: &[T]) -> Result<Vec<T>> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "curve has {} samples, grid has {}",
            values.len(),
            grid.len()
        )));
    }
    let mut idx = vec![0];
    for &b in boundaries {
        let (_, k) = grid.window(grid.t0, b)?;
        if k <= *idx.last().unwrap() || k >= grid.steps {
            return Err(Error::InvalidParameter(format!(
                "segment boundaries must be increasing and strictly inside the curve, got {b}"
            )));
        }
        idx.push(k);
    }
    idx.push(grid.steps);
    Ok(idx
        .windows(2)
        .map(|w| {
            let (a, b) = (values[w[0]], values[w[1]]);
            if a == T::zero() && b == T::zero() {
                T::one()
            } else {
                b / a
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sampled(f: impl Fn(f64) -> f64, t1: f64, dt: f64) -> (Grid<f64>, Vec<f64>) {
        let g = Grid::new(0.0, t1, dt).unwrap();
        let v = (0..g.len()).map(|k| f(g.time(k))).collect();
        (g, v)
    }

    fn train(times: &[f64]) -> EventTrain<f64> {
        EventTrain {
            times: times.to_vec(),
            kind: EventKind::Peak,
            channel: "x".into(),
        }
    }

    #[test]
    fn spike_examples() {
        let (g, v) = sampled(f64::sin, 30.0, 0.01);
        assert!(detect_spikes(&g, &v, 1.0, "v").is_empty());
        let (g, v) = sampled(|t| 1.5 * t.sin(), 30.0, 0.01);
        let s = detect_spikes(&g, &v, 1.0, "v");
        assert_eq!(s.len(), 5);
        let first = (2.0f64 / 3.0).asin();
        for (n, t) in s.times.iter().enumerate() {
            assert_abs_diff_eq!(*t, first + 2.0 * PI * n as f64, epsilon = 1e-4);
        }
        let (g, v) = sampled(|_| 3.0, 10.0, 0.1);
        assert!(detect_spikes(&g, &v, 1.0, "v").is_empty());
    }

    #[test]
    fn peak_examples() {
        let w = 0.7;
        let (g, v) = sampled(|t| (w * t).sin(), 100.0, 0.01);
        let p = detect_peaks(&g, &v, "y");
        assert_eq!(p.len(), 11);
        for (n, t) in p.times.iter().enumerate() {
            assert_abs_diff_eq!(*t, (PI / 2.0 + 2.0 * PI * n as f64) / w, epsilon = 1e-3);
        }
        let (g, v) = sampled(|t| t * t, 10.0, 0.1);
        assert!(detect_peaks(&g, &v, "y").is_empty());
    }

    #[test]
    fn plateau_peaks() {
        let g = Grid::new(0.0, 7.0, 1.0).unwrap();
        let p = detect_peaks(&g, &[0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0, 0.0], "y");
        assert_eq!(p.times, vec![2.0]);
        let p = detect_peaks(&g, &[0.0, 1.0, 1.0, 2.0, 1.0, 0.0, 0.0, 0.0], "y");
        assert_eq!(p.times, vec![3.0]);
        let p = detect_peaks(&g, &[0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0], "y");
        assert_eq!(p.times, vec![1.5]);
    }

    #[test]
    fn resonant_peaks_approach_cosine_zeros() {
        let w = PI / 30.0;
        let (g, v) = sampled(
            |t| (w * t).sin() / (2.0 * w * w) - t * (w * t).cos() / (2.0 * w),
            600.0,
            0.01,
        );
        let p = detect_peaks(&g, &v, "y");
        let late: Vec<f64> = p.within(400.0, 600.0).collect();
        assert!(!late.is_empty());
        let dev = |t: f64| {
            let phase = (w * t - PI).rem_euclid(2.0 * PI);
            phase.min(2.0 * PI - phase)
        };
        let early = dev(p.times[0]);
        for t in late {
            assert!(dev(t) < 0.02 && dev(t) < early, "t = {t}");
        }
    }

    #[test]
    fn sync_examples() {
        let a = train(&[10.0, 30.0, 50.0]);
        assert_eq!(event_sync_score(&a, &a, 2.0), 1.0);
        assert_eq!(event_sync_score(&a, &train(&[20.0, 40.0]), 2.0), 0.0);
        assert_eq!(event_sync_score(&a, &train(&[11.0, 31.0, 51.0]), 2.0), 1.0);
        assert_eq!(event_sync_score(&a, &train(&[]), 2.0), 0.0);
        assert_eq!(event_sync_score(&train(&[]), &train(&[]), 2.0), 1.0);
        assert_abs_diff_eq!(event_sync_score(&a, &train(&[10.5]), 2.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dispersion_examples() {
        let same = vec![train(&[5.0, 65.0, 125.0]), train(&[185.0])];
        assert_abs_diff_eq!(
            peak_phase_dispersion(&same, 60.0, (0.0, 200.0)).unwrap(),
            0.0,
            epsilon = 1e-6
        );
        let uniform = vec![train(&(0..12).map(|i| i as f64 * 5.0).collect::<Vec<_>>())];
        assert!(peak_phase_dispersion(&uniform, 60.0, (0.0, 60.0)).unwrap() >= 1.0);
        assert_eq!(peak_phase_dispersion(&[train(&[3.0])], 60.0, (0.0, 60.0)), None);
        assert_eq!(peak_phase_dispersion(&same, 60.0, (300.0, 400.0)), None);
    }

    #[test]
    fn segment_examples() {
        let (g, v) = sampled(|_| 2.0, 3.0, 0.01);
        assert_eq!(segment_ratios(&g, &v, &[1.0, 2.0]).unwrap(), vec![1.0; 3]);
        let (g, v) = sampled(|t| (-t).exp(), 3.0, 0.01);
        for r in segment_ratios(&g, &v, &[1.0, 2.0]).unwrap() {
            assert_abs_diff_eq!(r, (-1.0f64).exp(), epsilon = 1e-12);
        }
        let (g, v) = sampled(|_| 0.0, 3.0, 0.01);
        assert_eq!(segment_ratios(&g, &v, &[1.5]).unwrap(), vec![1.0, 1.0]);
        assert!(segment_ratios(&g, &v, &[2.0, 1.0]).is_err());
        assert!(segment_ratios(&g, &v, &[5.0]).is_err());
    }

    /// Excursions that return below every threshold between events.
    fn arb_spiky() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((0.0..3.0f64, 1usize..6), 1..30).prop_map(|bumps| {
            let mut v = vec![-1.0];
            for (h, w) in bumps {
                for i in 1..=w {
                    v.push(-1.0 + (h + 1.0) * i as f64 / w as f64);
                }
                for i in (0..w).rev() {
                    v.push(-1.0 + (h + 1.0) * i as f64 / w as f64);
                }
            }
            v
        })
    }

    proptest! {
        #[test]
        fn spike_count_monotone_in_threshold(v in arb_spiky(), lo in -0.5..3.0f64, dh in 0.0..2.0f64) {
            let g = Grid::new(0.0, (v.len() - 1) as f64, 1.0).unwrap();
            let low = detect_spikes(&g, &v, lo, "v").len();
            let high = detect_spikes(&g, &v, lo + dh, "v").len();
            prop_assert!(high <= low);
        }

        #[test]
        fn sync_symmetric(
            mut a in proptest::collection::vec(0.0..100.0f64, 0..15),
            mut b in proptest::collection::vec(0.0..100.0f64, 0..15),
            tol in 0.1..5.0f64,
        ) {
            a.sort_by(f64::total_cmp);
            a.dedup();
            b.sort_by(f64::total_cmp);
            b.dedup();
            let (ta, tb) = (train(&a), train(&b));
            prop_assert_eq!(event_sync_score(&ta, &tb, tol), event_sync_score(&tb, &ta, tol));
            prop_assert_eq!(event_sync_score(&ta, &ta, tol), 1.0);
            let s = event_sync_score(&ta, &tb, tol);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn dispersion_period_shift_invariant(
            mut t in proptest::collection::vec(0.0..600.0f64, 2..20),
            shift in 0i32..5,
        ) {
            t.sort_by(f64::total_cmp);
            let period = 60.0;
            let shifted: Vec<f64> = t.iter().map(|x| x + shift as f64 * period).collect();
            let d0 = peak_phase_dispersion(&[train(&t)], period, (0.0, 1e4)).unwrap();
            let d1 = peak_phase_dispersion(&[train(&shifted)], period, (0.0, 1e4)).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-6 * (1.0 + d0));
        }
    }
}
