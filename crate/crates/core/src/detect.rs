//! Change-point localization.
//!
//! The filtered derivative compares the empirical means of two adjacent
//! windows of width `A`:
//!
//! ```text
//! D(k, A) = mean(x[k .. k+A]) - mean(x[k-A .. k]),   A <= k <= n - A
//! ```
//!
//! (0-based, half-open windows), so a step whose first new value sits at
//! index `m` peaks at `k = m`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::kernel::SampleSet;
use crate::{DacdError, Point, Result};

/// `D(k, A)` for `k = start ..= start + values.len() - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredTrace {
    pub window: usize,
    /// Series index of `values[0]`; always equal to `window`.
    pub start: usize,
    pub values: Vec<f64>,
}

impl FilteredTrace {
    pub fn at(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.start)
            .and_then(|i| self.values.get(i))
            .copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub trace: FilteredTrace,
    /// Series indices of the detected change-points, ascending.
    pub indices: Vec<usize>,
    /// Grid locations of `indices`.
    pub locations: Vec<f64>,
    pub window: usize,
}

impl DetectionResult {
    /// Writes the change-points and the `D` trace as JSON.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| DacdError::Parse(e.to_string()))
    }
}

/// Running-sum filtered derivative, `O(n)`.
pub fn filtered_derivative(series: &[f64], window: usize) -> Result<FilteredTrace> {
    let n = series.len();
    if window == 0 || n < 2 * window + 1 {
        return Err(DacdError::WindowTooLarge { window, len: n });
    }
    let a = window as f64;
    // prefix[i] = sum of series[..i]
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in series {
        acc += x;
        prefix.push(acc);
    }
    let values = (window..=n - window)
        .map(|k| {
            let right = prefix[k + window] - prefix[k];
            let left = prefix[k] - prefix[k - window];
            (right - left) / a
        })
        .collect();
    Ok(FilteredTrace {
        window,
        start: window,
        values,
    })
}

fn argmax_abs(values: &[f64], excluded: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if excluded[i] {
            continue;
        }
        let v = v.abs();
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Series index maximizing `|D(k, A)|`; smallest index on ties.
pub fn estimate_single(series: &[f64], window: usize) -> Result<usize> {
    let trace = filtered_derivative(series, window)?;
    let excluded = vec![false; trace.values.len()];
    let i = argmax_abs(&trace.values, &excluded).expect("trace is non-empty");
    Ok(trace.start + i)
}

/// `K` rounds of argmax-then-suppress on `|D(k, A)|`.
///
/// After each pick `τ`, every `k` with `|k - τ| < 2A` is excluded, so the
/// returned indices are pairwise at least `2A` apart.
pub fn estimate_mcp(
    series: &[f64],
    window: usize,
    k: usize,
) -> Result<(FilteredTrace, Vec<usize>)> {
    if k == 0 {
        return Err(DacdError::InvalidInput(
            "number of change-points must be >= 1".into(),
        ));
    }
    let trace = filtered_derivative(series, window)?;
    let m = trace.values.len();
    let mut excluded = vec![false; m];
    let mut found = Vec::with_capacity(k);
    let radius = 2 * window;
    for _ in 0..k {
        let Some(i) = argmax_abs(&trace.values, &excluded) else {
            return Err(DacdError::InfeasibleK {
                requested: k,
                found: found.len(),
            });
        };
        found.push(trace.start + i);
        let lo = i.saturating_sub(radius - 1);
        let hi = (i + radius).min(m);
        excluded[lo..hi].iter_mut().for_each(|e| *e = true);
    }
    found.sort_unstable();
    debug_assert!(found.windows(2).all(|w| w[1] - w[0] >= radius));
    Ok((trace, found))
}

/// Runs [`estimate_mcp`] on a series sampled on `grid` and maps the indices
/// to grid locations.
pub fn detect_on_grid(
    series: &[f64],
    grid: &[f64],
    window: usize,
    k: usize,
) -> Result<DetectionResult> {
    if series.len() != grid.len() {
        return Err(DacdError::InvalidInput(format!(
            "series has {} values but grid has {}",
            series.len(),
            grid.len()
        )));
    }
    let (trace, indices) = estimate_mcp(series, window, k)?;
    let locations = indices.iter().map(|&i| grid[i]).collect();
    Ok(DetectionResult {
        trace,
        indices,
        locations,
        window,
    })
}

/// Minimum index separation between any two sorted indices.
pub fn min_separation(indices: &[usize]) -> Option<usize> {
    indices.windows(2).map(|w| w[1].abs_diff(w[0])).min()
}

/// A sample with its local-plane slope magnitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopePoint {
    /// Position in the sample set.
    pub sample: usize,
    pub x: Point,
    pub slope: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest other samples of sample `i` (Euclidean,
/// ties by sample order).
fn nearest(xs: &[Point], i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = xs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, x)| (dist2(&xs[i], x), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.truncate(k);
    others.into_iter().map(|(_, j)| j).collect()
}

/// Least-squares plane through the sample and its `k` nearest neighbours;
/// returns the gradient norm `‖(β₁, β₂)‖` for each sample.
pub fn local_slopes(samples: &SampleSet, k_neighbors: usize) -> Result<Vec<f64>> {
    if samples.dim() != 2 {
        return Err(DacdError::InvalidInput(format!(
            "local plane slopes need 2-D samples, got dimension {}",
            samples.dim()
        )));
    }
    if k_neighbors < 2 || samples.len() < k_neighbors + 1 {
        return Err(DacdError::InvalidInput(format!(
            "need k_neighbors >= 2 and at least k_neighbors + 1 samples (k = {k_neighbors}, n = {})",
            samples.len()
        )));
    }
    let xs = samples.inputs();
    let ys = samples.targets();
    (0..xs.len())
        .map(|i| {
            let mut hood = nearest(xs, i, k_neighbors);
            hood.push(i);
            let m = hood.len() as f64;
            let (c1, c2, cy) = hood.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &j| {
                (a + xs[j][0], b + xs[j][1], c + ys[j])
            });
            let (c1, c2, cy) = (c1 / m, c2 / m, cy / m);
            let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &j in &hood {
                let (d1, d2, dy) = (xs[j][0] - c1, xs[j][1] - c2, ys[j] - cy);
                s11 += d1 * d1;
                s12 += d1 * d2;
                s22 += d2 * d2;
                s1y += d1 * dy;
                s2y += d2 * dy;
            }
            let det = s11 * s22 - s12 * s12;
            let scale = (s11 + s22).powi(2);
            if scale <= 0.0 || det <= 1e-10 * scale {
                return Err(DacdError::DegenerateNeighborhood { index: i });
            }
            let b1 = (s22 * s1y - s12 * s2y) / det;
            let b2 = (s11 * s2y - s12 * s1y) / det;
            Ok(b1.hypot(b2))
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median distance from each sample to its nearest other sample.
pub fn median_nn_spacing(xs: &[Point]) -> f64 {
    let d: Vec<f64> = (0..xs.len())
        .map(|i| {
            xs.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, x)| dist2(&xs[i], x))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    median(d)
}

/// The `K` samples with the steepest local plane, greedily skipping any
/// sample closer than twice the median nearest-neighbour spacing to one
/// already reported.
pub fn knn_slope_2d(samples: &SampleSet, k_neighbors: usize, k: usize) -> Result<Vec<SlopePoint>> {
    let slopes = local_slopes(samples, k_neighbors)?;
    let xs = samples.inputs();
    let radius = 2.0 * median_nn_spacing(xs);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| slopes[b].total_cmp(&slopes[a]).then(a.cmp(&b)));

    let mut picked: Vec<SlopePoint> = Vec::with_capacity(k);
    for i in order {
        if picked.len() == k {
            break;
        }
        if picked.iter().any(|p| dist2(&p.x, &xs[i]).sqrt() < radius) {
            continue;
        }
        picked.push(SlopePoint {
            sample: i,
            x: xs[i].clone(),
            slope: slopes[i],
        });
    }
    if picked.len() < k {
        return Err(DacdError::InfeasibleK {
            requested: k,
            found: picked.len(),
        });
    }
    Ok(picked)
}
