//! k-planes in `G(d,k)`, Haar sampling, frequency lifts and box counting.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{AtomicMeasure, MeasureError, MeasureExpr};

const GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("need at least {need} scales, got {got}")]
    TooFewScales { need: usize, got: usize },
    #[error("degenerate point set ({0} distinct points)")]
    Degenerate(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Orthonormal k-frame spanning a plane `V` in `G(d,k)`.
///
/// Two frames represent the same point of the Grassmannian when their
/// projection operators agree, so comparisons must go through
/// [`Frame::projector_distance`], not the basis rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frame {
    pub d: usize,
    pub k: usize,
    /// `k` orthonormal rows, each of length `d`.
    pub basis: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new(d: usize, k: usize, basis: Vec<Vec<f64>>) -> Result<Self, ProjectionError> {
        let f = Self { d, k, basis };
        f.validate().map_err(ProjectionError::InvalidFrame)?;
        Ok(f)
    }

    /// Coordinate frame spanned by the first `k` axes.
    pub fn axis(d: usize, k: usize) -> Self {
        let basis = (0..k)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                v
            })
            .collect();
        Self { d, k, basis }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1 <= self.k && self.k < self.d) {
            return Err(format!("need 1 <= k < d, got k={}, d={}", self.k, self.d));
        }
        if self.basis.len() != self.k || self.basis.iter().any(|v| v.len() != self.d) {
            return Err("basis shape mismatch".into());
        }
        for i in 0..self.k {
            for j in 0..self.k {
                let dot: f64 = self.basis[i]
                    .iter()
                    .zip(&self.basis[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > GRAM_TOL {
                    return Err(format!("Gram[{i}][{j}] = {dot}, want {want}"));
                }
            }
        }
        Ok(())
    }

    /// Frequency lift `y -> y_V = sum_i y_i v_i`, the unique point of `V`
    /// projecting to `y`.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (yi, v) in y.iter().zip(&self.basis) {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += yi * vi;
            }
        }
        out
    }

    /// Coordinates of `P_V(x)` in the frame basis.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Frobenius distance between the projection operators of two frames;
    /// zero exactly when both span the same plane.
    pub fn projector_distance(&self, other: &Frame) -> f64 {
        assert_eq!(self.d, other.d);
        let p = self.projector();
        let q = other.projector();
        p.iter()
            .zip(&q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn projector(&self) -> Vec<f64> {
        let d = self.d;
        let mut p = vec![0.0; d * d];
        for v in &self.basis {
            for i in 0..d {
                for j in 0..d {
                    p[i * d + j] += v[i] * v[j];
                }
            }
        }
        p
    }
}

/// Haar-uniform plane in `G(d,k)`: orthonormalized Gaussian `d x k` matrix.
/// Deterministic per seed.
pub fn sample_grassmannian(d: usize, k: usize, seed: u64) -> Frame {
    assert!(1 <= k && k < d, "need 1 <= k < d");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    loop {
        let mut rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        if gram_schmidt(&mut rows) {
            return Frame { d, k, basis: rows };
        }
        // near-singular Gaussian draw (probability ~ 0); redraw
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
fn gram_schmidt(rows: &mut [Vec<f64>]) -> bool {
    let k = rows.len();
    for i in 0..k {
        for _ in 0..2 {
            for j in 0..i {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                let prev = rows[j].clone();
                for (a, b) in rows[i].iter_mut().zip(&prev) {
                    *a -= dot * b;
                }
            }
        }
        let norm: f64 = rows[i].iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return false;
        }
        for a in rows[i].iter_mut() {
            *a /= norm;
        }
    }
    true
}

/// Push the measure forward under `P_V` (symbolically).
pub fn project_measure(measure: &MeasureExpr, frame: &Frame) -> Result<MeasureExpr, MeasureError> {
    if measure.dim() != frame.d {
        return Err(MeasureError::DimensionMismatch {
            expected: frame.d,
            got: measure.dim(),
        });
    }
    Ok(MeasureExpr::Projected {
        frame: frame.clone(),
        base: Box::new(measure.clone()),
    })
}

/// Exact push-forward of an atomic measure: atoms mapped by `P_V`,
/// coincident images merged (tolerance 1e-12).
pub fn project_points(atomic: &AtomicMeasure, frame: &Frame) -> Result<AtomicMeasure, MeasureError> {
    if atomic.dimension != frame.d {
        return Err(MeasureError::DimensionMismatch {
            expected: frame.d,
            got: atomic.dimension,
        });
    }
    let atoms = atomic
        .atoms
        .iter()
        .map(|(x, w)| (frame.project(x), *w))
        .collect();
    Ok(AtomicMeasure {
        dimension: frame.k,
        atoms,
    }
    .merged(1e-12))
}

/// Box-counting dimension of the support of `points` over dyadic scales
/// `2^-j`, `j in [j_lo, j_hi]`: least-squares slope of `log2 N(2^-j)` vs j.
///
/// Boxes are half-open dyadic grid cells anchored at 0.  Counts at coarse
/// scales are derived from the occupied cells of the finest scale, which
/// is exact for half-open cells.
pub fn box_dimension(
    points: &AtomicMeasure,
    j_lo: u32,
    j_hi: u32,
) -> Result<BoxDimension, ProjectionError> {
    if j_hi < j_lo + 2 {
        return Err(ProjectionError::TooFewScales {
            need: 3,
            got: (j_hi as i64 - j_lo as i64 + 1).max(0) as usize,
        });
    }
    let d = points.dimension;
    let scale = (1u64 << j_hi) as f64;
    let mut fine: Vec<Vec<i64>> = points
        .atoms
        .iter()
        .map(|(x, _)| x.iter().map(|c| (c * scale).floor() as i64).collect())
        .collect();
    fine.sort_unstable();
    fine.dedup();
    if fine.len() < 2 {
        return Err(ProjectionError::Degenerate(fine.len()));
    }
    let mut js = Vec::new();
    let mut counts = Vec::new();
    let mut keys = fine;
    for j in (j_lo..=j_hi).rev() {
        js.push(j as f64);
        counts.push((keys.len() as f64).log2());
        if j > j_lo {
            // floor division by 2 per coordinate (arithmetic shift keeps negatives correct)
            for key in keys.iter_mut() {
                for c in key.iter_mut().take(d) {
                    *c >>= 1;
                }
            }
            keys.sort_unstable();
            keys.dedup();
        }
    }
    js.reverse();
    counts.reverse();
    let (slope, stderr) = least_squares_slope(&js, &counts);
    Ok(BoxDimension {
        dim: slope,
        stderr,
        counts: js
            .iter()
            .zip(&counts)
            .map(|(j, c)| (*j as u32, c.exp2().round() as u64))
            .collect(),
        low_resolution: points.atoms.len() < (1usize << (j_hi.min(20))),
    })
}

#[derive(Debug, Clone)]
pub struct BoxDimension {
    pub dim: f64,
    pub stderr: f64,
    /// `(j, N(2^-j))` per scale.
    pub counts: Vec<(u32, u64)>,
    /// Set when the point count may be too small for the finest scale.
    pub low_resolution: bool,
}

/// Ordinary least-squares slope with its standard error.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return (f64::NAN, f64::INFINITY);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = (xs.len().saturating_sub(2)).max(1) as f64;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, (sse / dof / sxx).sqrt())
}
