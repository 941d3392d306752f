//! Crossing and peak detection on sampled curves.

use serde::{Deserialize, Serialize};

/// Bisection stops once the bracket is narrower than this.
pub const CROSSING_RESOLUTION: f64 = 1e-7;

pub const DEFAULT_PROMINENCE: f64 = 0.05;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
    pub prominence: f64,
}

fn lagrange(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..ts.len() {
        let mut w = 1.0;
        for j in 0..ts.len() {
            if i != j {
                w *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// Root of `d` between samples `j` and `j + 1`, which have opposite signs,
/// found by bisection on the cubic through the four surrounding samples
/// (fewer at the ends of the series).
fn refine_root(times: &[f64], d: &[f64], j: usize) -> f64 {
    let lo = j.saturating_sub(1);
    let hi = (j + 2).min(times.len() - 1);
    let ts = &times[lo..=hi];
    let ys = &d[lo..=hi];
    let (mut a, mut b) = (times[j], times[j + 1]);
    let mut fa = d[j];
    while b - a > CROSSING_RESOLUTION {
        let m = 0.5 * (a + b);
        let fm = lagrange(ts, ys, m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Times at which `a − b` changes sign. Contacts without a sign change are not
/// crossings. Where the difference sits at exactly zero for a run of samples
/// between opposite signs, the crossing is placed at the middle of the run.
///
/// # Panics
/// If the three slices differ in length.
pub fn find_crossings(times: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    assert!(
        times.len() == a.len() && a.len() == b.len(),
        "find_crossings: series lengths differ ({}, {}, {})",
        times.len(),
        a.len(),
        b.len()
    );
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for k in 0..d.len() {
        if d[k] == 0.0 {
            continue;
        }
        if let Some(j) = prev {
            if (d[j] > 0.0) != (d[k] > 0.0) {
                if k == j + 1 {
                    out.push(refine_root(times, &d, j));
                } else {
                    out.push(0.5 * (times[j + 1] + times[k - 1]));
                }
            }
        }
        prev = Some(k);
    }
    out
}

/// Local maxima whose topographic prominence is at least `min_prominence`,
/// with the peak time and value refined by the parabola through the three
/// samples around the maximum. Flat tops are reported at their centre sample.
pub fn find_peaks(times: &[f64], y: &[f64], min_prominence: f64) -> Vec<Peak> {
    assert_eq!(times.len(), y.len(), "find_peaks: series lengths differ");
    let n = y.len();
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    let mut i = 1;
    while i < n - 1 {
        if !(y[i] > y[i - 1]) {
            i += 1;
            continue;
        }
        // extend across a plateau
        let mut end = i;
        while end + 1 < n && y[end + 1] == y[i] {
            end += 1;
        }
        if end + 1 >= n || !(y[end + 1] < y[i]) {
            i = end + 1;
            continue;
        }
        let top = y[i];
        let mut left_min = top;
        for k in (0..i).rev() {
            if y[k] > top {
                break;
            }
            left_min = left_min.min(y[k]);
        }
        let mut right_min = top;
        for &v in &y[end + 1..] {
            if v > top {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = top - left_min.max(right_min);
        if prominence >= min_prominence {
            let c = (i + end) / 2;
            let (time, value) =
                if i == end { parabola_vertex(&times[c - 1..=c + 1], &y[c - 1..=c + 1]) } else { (times[c], top) };
            peaks.push(Peak { time, value, prominence });
        }
        i = end + 1;
    }
    peaks
}

fn parabola_vertex(t: &[f64], y: &[f64]) -> (f64, f64) {
    let (t0, t1, t2) = (t[0], t[1], t[2]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    let d01 = (y1 - y0) / (t1 - t0);
    let d12 = (y2 - y1) / (t2 - t1);
    let curv = (d12 - d01) / (t2 - t0);
    if curv >= 0.0 || !curv.is_finite() {
        return (t1, y1);
    }
    // y(t) = y0 + d01 (t − t0) + curv (t − t0)(t − t1)
    let tv = 0.5 * (t0 + t1) - d01 / (2.0 * curv);
    let tv = tv.clamp(t0, t2);
    let yv = y0 + d01 * (tv - t0) + curv * (tv - t0) * (tv - t1);
    (tv, yv)
}

/// Highest peak by value.
pub fn highest_peak(times: &[f64], y: &[f64], min_prominence: f64) -> Option<Peak> {
    find_peaks(times, y, min_prominence).into_iter().max_by(|a, b| a.value.total_cmp(&b.value))
}
