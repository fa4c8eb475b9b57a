// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Small least-squares helpers for scale sweeps.

/// Least-squares slope of `ln y` against `ln x`. Requires at least two
/// points with positive coordinates.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `C ≥ 0` minimizing `Σ (y_i − C t_i³)²`.
pub fn cubic_coefficient(ts: &[f64], ys: &[f64]) -> f64 {
    let num: f64 = ts.iter().zip(ys).map(|(t, y)| t.powi(3) * y).sum();
    let den: f64 = ts.iter().map(|t| t.powi(6)).sum();
    if den > 0.0 {
        (num / den).max(0.0)
    } else {
        0.0
    }
}

/// Median of a non-empty slice; mean of the two middle values for even
/// lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
