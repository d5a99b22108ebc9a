//! Symbolic measures and their Fourier transforms.
//!
//! A [`MeasureExpr`] is a tree whose leaves are one-dimensional
//! self-similar measures or finite atomic measures and whose internal
//! nodes are cartesian products, convolution powers, convex mixtures,
//! per-coordinate affine images and orthogonal projections.  The Fourier
//! transform of every node has a closed form in terms of the children, so
//! `ft_eval` is exact up to the truncation tolerance of the self-similar
//! refinement product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::projection::Frame;

/// Hard cap on the refinement-product depth.
pub const MAX_PRODUCT_DEPTH: u32 = 10_000;
/// Hard cap on the number of atoms `discretize` may produce.
pub const MAX_ATOMS: usize = 1 << 24;

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("non-finite input value")]
    NonFinite,
    #[error("tail tolerance {0} outside (0, 1e-3]")]
    TolOutOfRange(f64),
    #[error("refinement product needs depth {needed} > cap {cap}")]
    TruncationFailure { needed: u64, cap: u32 },
    #[error("invalid measure: {0}")]
    Invalid(String),
    #[error("ambient dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("discretization of a projected measure (project after discretizing instead)")]
    DiscretizeProjected,
    #[error("level overflow: {atoms} atoms exceed cap {cap}")]
    LevelOverflow { atoms: u128, cap: usize },
}

/// Self-similar measure on the line: the stationary measure of the maps
/// `x -> ratio*x + t_j` with probability weights `p_j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfSimilarMeasure1D {
    pub ratio: f64,
    pub translations: Vec<f64>,
    pub weights: Vec<f64>,
    /// Open-set-condition flag; required by the L2-dimension formula.
    #[serde(default)]
    pub open_set_condition: bool,
}

impl SelfSimilarMeasure1D {
    pub fn new(
        ratio: f64,
        translations: Vec<f64>,
        weights: Vec<f64>,
        open_set_condition: bool,
    ) -> Result<Self, MeasureError> {
        let m = Self {
            ratio,
            translations,
            weights,
            open_set_condition,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        if !(self.ratio.is_finite() && self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(MeasureError::Invalid(format!(
                "ratio {} not strictly inside (0,1)",
                self.ratio
            )));
        }
        if self.translations.len() != self.weights.len() || self.translations.is_empty() {
            return Err(MeasureError::Invalid(
                "translations and weights must be non-empty and of equal length".into(),
            ));
        }
        if self.translations.iter().any(|t| !t.is_finite()) {
            return Err(MeasureError::NonFinite);
        }
        for (i, a) in self.translations.iter().enumerate() {
            for b in self.translations.iter().skip(i + 1) {
                if a == b {
                    return Err(MeasureError::Invalid(format!(
                        "translations not pairwise distinct ({a})"
                    )));
                }
            }
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MeasureError::Invalid("weights must be nonnegative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(MeasureError::Invalid(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// Symbol `g(xi) = sum_j p_j e^{-2 pi i t_j xi}` of the refinement
    /// identity `mu^(xi) = g(xi) mu^(ratio * xi)`.
    pub fn symbol(&self, xi: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, p) in self.translations.iter().zip(&self.weights) {
            let phase = -2.0 * std::f64::consts::PI * t * xi;
            acc += Complex64::from_polar(*p, phase);
        }
        acc
    }

    /// Convex hull of the attractor: `[min t, max t] / (1 - ratio)`.
    pub fn support_hull(&self) -> (f64, f64) {
        let lo = self.translations.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self
            .translations
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo / (1.0 - self.ratio), hi / (1.0 - self.ratio))
    }

    /// Evaluate the truncated refinement product at `xi`.
    ///
    /// Depth is chosen so that the discarded tail product differs from 1
    /// by at most `tol`: since `|g(eta) - 1| <= 2 pi |eta| sum_j p_j |t_j|`
    /// and every factor has modulus <= 1, the tail after M factors is
    /// bounded by `2 pi |xi| (sum p|t|) ratio^M / (1 - ratio)`.
    fn ft(&self, xi: f64, tol: f64) -> Result<Complex64, MeasureError> {
        let tbar: f64 = self
            .weights
            .iter()
            .zip(&self.translations)
            .map(|(p, t)| p * t.abs())
            .sum();
        let lead = 2.0 * std::f64::consts::PI * xi.abs() * tbar / (1.0 - self.ratio);
        let depth = if lead <= tol {
            0
        } else {
            let need = (lead / tol).ln() / (1.0 / self.ratio).ln();
            let need = need.ceil().max(1.0);
            if need > MAX_PRODUCT_DEPTH as f64 {
                return Err(MeasureError::TruncationFailure {
                    needed: need as u64,
                    cap: MAX_PRODUCT_DEPTH,
                });
            }
            need as u32
        };
        let mut acc = Complex64::new(1.0, 0.0);
        let mut cur = xi;
        for _ in 0..depth {
            acc *= self.symbol(cur);
            cur *= self.ratio;
        }
        Ok(acc)
    }
}

/// Finite atomic measure in `R^d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub dimension: usize,
    /// `(point, weight)` pairs; weights nonnegative, total mass <= 1 + tol.
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl AtomicMeasure {
    pub fn new(dimension: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self, MeasureError> {
        let m = Self { dimension, atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        if self.dimension == 0 {
            return Err(MeasureError::Invalid("dimension must be positive".into()));
        }
        let mut total = 0.0;
        for (x, w) in &self.atoms {
            if x.len() != self.dimension {
                return Err(MeasureError::DimensionMismatch {
                    expected: self.dimension,
                    got: x.len(),
                });
            }
            if x.iter().any(|c| !c.is_finite()) || !w.is_finite() || *w < 0.0 {
                return Err(MeasureError::NonFinite);
            }
            total += w;
        }
        if total > 1.0 + WEIGHT_TOL {
            return Err(MeasureError::Invalid(format!(
                "total mass {total} exceeds 1"
            )));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn ft(&self, z: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in &self.atoms {
            let dot: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
            acc += Complex64::from_polar(*w, -2.0 * std::f64::consts::PI * dot);
        }
        acc
    }

    /// Merge atoms whose coordinates agree within `tol`, summing weights.
    pub fn merged(mut self, tol: f64) -> Self {
        self.atoms.sort_by(|a, b| {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| *o != std::cmp::Ordering::Equal)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out: Vec<(Vec<f64>, f64)> = Vec::with_capacity(self.atoms.len());
        'outer: for (x, w) in self.atoms {
            if let Some((px, pw)) = out.last_mut() {
                if px.iter().zip(&x).all(|(a, b)| (a - b).abs() <= tol) {
                    *pw += w;
                    continue 'outer;
                }
            }
            out.push((x, w));
        }
        Self {
            dimension: self.dimension,
            atoms: out,
        }
    }
}

/// Algebraic description of a compactly supported measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum MeasureExpr {
    #[serde(rename = "selfsimilar1d")]
    SelfSimilar1D {
        ratio: f64,
        translations: Vec<f64>,
        weights: Vec<f64>,
        #[serde(default)]
        open_set_condition: bool,
    },
    #[serde(rename = "atomic")]
    Atomic {
        dimension: usize,
        atoms: Vec<(Vec<f64>, f64)>,
    },
    #[serde(rename = "product")]
    Product { factors: Vec<MeasureExpr> },
    #[serde(rename = "convpower")]
    ConvPower { n: u32, base: Box<MeasureExpr> },
    #[serde(rename = "mixture")]
    Mixture { components: Vec<MixtureComponent> },
    #[serde(rename = "affine")]
    AffineImage {
        scale: Vec<f64>,
        translate: Vec<f64>,
        base: Box<MeasureExpr>,
    },
    #[serde(rename = "projected")]
    Projected { frame: Frame, base: Box<MeasureExpr> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub measure: MeasureExpr,
}

impl From<SelfSimilarMeasure1D> for MeasureExpr {
    fn from(m: SelfSimilarMeasure1D) -> Self {
        MeasureExpr::SelfSimilar1D {
            ratio: m.ratio,
            translations: m.translations,
            weights: m.weights,
            open_set_condition: m.open_set_condition,
        }
    }
}

impl From<AtomicMeasure> for MeasureExpr {
    fn from(m: AtomicMeasure) -> Self {
        MeasureExpr::Atomic {
            dimension: m.dimension,
            atoms: m.atoms,
        }
    }
}

impl MeasureExpr {
    /// Ambient dimension of the measure.
    pub fn dim(&self) -> usize {
        match self {
            MeasureExpr::SelfSimilar1D { .. } => 1,
            MeasureExpr::Atomic { dimension, .. } => *dimension,
            MeasureExpr::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
            MeasureExpr::ConvPower { base, .. } => base.dim(),
            MeasureExpr::Mixture { components } => components
                .first()
                .map(|c| c.measure.dim())
                .unwrap_or(0),
            MeasureExpr::AffineImage { base, .. } => base.dim(),
            MeasureExpr::Projected { frame, .. } => frame.k,
        }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        match self {
            MeasureExpr::SelfSimilar1D {
                ratio,
                translations,
                weights,
                open_set_condition,
            } => SelfSimilarMeasure1D {
                ratio: *ratio,
                translations: translations.clone(),
                weights: weights.clone(),
                open_set_condition: *open_set_condition,
            }
            .validate(),
            MeasureExpr::Atomic { dimension, atoms } => AtomicMeasure {
                dimension: *dimension,
                atoms: atoms.clone(),
            }
            .validate(),
            MeasureExpr::Product { factors } => {
                if factors.is_empty() {
                    return Err(MeasureError::Invalid("empty product".into()));
                }
                factors.iter().try_for_each(|f| f.validate())
            }
            MeasureExpr::ConvPower { n, base } => {
                if *n == 0 {
                    return Err(MeasureError::Invalid("convolution power n = 0".into()));
                }
                base.validate()
            }
            MeasureExpr::Mixture { components } => {
                if components.is_empty() {
                    return Err(MeasureError::Invalid("empty mixture".into()));
                }
                let sum: f64 = components.iter().map(|c| c.weight).sum();
                if (sum - 1.0).abs() > WEIGHT_TOL {
                    return Err(MeasureError::Invalid(format!(
                        "mixture weights sum to {sum}"
                    )));
                }
                let d = components[0].measure.dim();
                for c in components {
                    if c.weight < 0.0 || !c.weight.is_finite() {
                        return Err(MeasureError::NonFinite);
                    }
                    if c.measure.dim() != d {
                        return Err(MeasureError::DimensionMismatch {
                            expected: d,
                            got: c.measure.dim(),
                        });
                    }
                    c.measure.validate()?;
                }
                Ok(())
            }
            MeasureExpr::AffineImage {
                scale,
                translate,
                base,
            } => {
                let d = base.dim();
                if scale.len() != d || translate.len() != d {
                    return Err(MeasureError::DimensionMismatch {
                        expected: d,
                        got: scale.len().max(translate.len()),
                    });
                }
                if scale.iter().chain(translate).any(|v| !v.is_finite()) {
                    return Err(MeasureError::NonFinite);
                }
                base.validate()
            }
            MeasureExpr::Projected { frame, base } => {
                frame.validate().map_err(MeasureError::Invalid)?;
                if frame.d != base.dim() {
                    return Err(MeasureError::DimensionMismatch {
                        expected: frame.d,
                        got: base.dim(),
                    });
                }
                base.validate()
            }
        }
    }

    /// Total mass; equals `ft_eval` at `z = 0`.
    pub fn mass(&self) -> f64 {
        match self {
            MeasureExpr::SelfSimilar1D { .. } => 1.0,
            MeasureExpr::Atomic { atoms, .. } => atoms.iter().map(|(_, w)| w).sum(),
            MeasureExpr::Product { factors } => factors.iter().map(|f| f.mass()).product(),
            MeasureExpr::ConvPower { n, base } => base.mass().powi(*n as i32),
            MeasureExpr::Mixture { components } => components
                .iter()
                .map(|c| c.weight * c.measure.mass())
                .sum(),
            MeasureExpr::AffineImage { base, .. } => base.mass(),
            MeasureExpr::Projected { base, .. } => base.mass(),
        }
    }

    /// Fourier transform `mu^(z) = int e^{-2 pi i z.x} dmu(x)` with
    /// absolute error at most `tail_tol`.
    pub fn ft_eval(&self, z: &[f64], tail_tol: f64) -> Result<Complex64, MeasureError> {
        if !(tail_tol > 0.0 && tail_tol <= 1e-3) {
            return Err(MeasureError::TolOutOfRange(tail_tol));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite);
        }
        if z.len() != self.dim() {
            return Err(MeasureError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        self.ft_rec(z, tail_tol)
    }

    fn ft_rec(&self, z: &[f64], tol: f64) -> Result<Complex64, MeasureError> {
        match self {
            MeasureExpr::SelfSimilar1D {
                ratio,
                translations,
                weights,
                open_set_condition,
            } => SelfSimilarMeasure1D {
                ratio: *ratio,
                translations: translations.clone(),
                weights: weights.clone(),
                open_set_condition: *open_set_condition,
            }
            .ft(z[0], tol),
            MeasureExpr::Atomic { dimension, atoms } => Ok(AtomicMeasure {
                dimension: *dimension,
                atoms: atoms.clone(),
            }
            .ft(z)),
            MeasureExpr::Product { factors } => {
                // every factor transform has modulus <= 1, so errors add
                let child_tol = tol / factors.len() as f64;
                let mut acc = Complex64::new(1.0, 0.0);
                let mut offset = 0;
                for f in factors {
                    let d = f.dim();
                    acc *= f.ft_rec(&z[offset..offset + d], child_tol)?;
                    offset += d;
                }
                Ok(acc)
            }
            MeasureExpr::ConvPower { n, base } => {
                // |a^n - b^n| <= n |a - b| for moduli <= 1
                let v = base.ft_rec(z, tol / *n as f64)?;
                Ok(v.powu(*n))
            }
            MeasureExpr::Mixture { components } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in components {
                    acc += c.weight * c.measure.ft_rec(z, tol)?;
                }
                Ok(acc)
            }
            MeasureExpr::AffineImage {
                scale,
                translate,
                base,
            } => {
                let dot: f64 = translate.iter().zip(z).map(|(b, zi)| b * zi).sum();
                let zs: Vec<f64> = scale.iter().zip(z).map(|(a, zi)| a * zi).collect();
                let v = base.ft_rec(&zs, tol)?;
                Ok(Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * dot) * v)
            }
            MeasureExpr::Projected { frame, base } => {
                let lifted = frame.lift(z);
                base.ft_rec(&lifted, tol)
            }
        }
    }

    /// Level-`level` cylinder discretization, cylinders represented by
    /// their left endpoint (corner for products); total mass preserved.
    pub fn discretize(&self, level: u32) -> Result<AtomicMeasure, MeasureError> {
        match self {
            MeasureExpr::SelfSimilar1D {
                ratio,
                translations,
                weights,
                ..
            } => {
                let m = translations.len() as u128;
                let count = m.checked_pow(level).unwrap_or(u128::MAX);
                if count > MAX_ATOMS as u128 {
                    return Err(MeasureError::LevelOverflow {
                        atoms: count,
                        cap: MAX_ATOMS,
                    });
                }
                let lo = translations.iter().cloned().fold(f64::INFINITY, f64::min)
                    / (1.0 - ratio);
                let mut pts: Vec<(f64, f64)> = vec![(lo, 1.0)];
                for _ in 0..level {
                    let mut next = Vec::with_capacity(pts.len() * translations.len());
                    for (t, p) in translations.iter().zip(weights) {
                        for (x, w) in &pts {
                            next.push((t + ratio * x, p * w));
                        }
                    }
                    pts = next;
                }
                AtomicMeasure::new(1, pts.into_iter().map(|(x, w)| (vec![x], w)).collect())
            }
            MeasureExpr::Atomic { dimension, atoms } => AtomicMeasure::new(*dimension, atoms.clone()),
            MeasureExpr::Product { factors } => {
                let parts: Vec<AtomicMeasure> = factors
                    .iter()
                    .map(|f| f.discretize(level))
                    .collect::<Result<_, _>>()?;
                let count: u128 = parts.iter().map(|p| p.atoms.len() as u128).product();
                if count > MAX_ATOMS as u128 {
                    return Err(MeasureError::LevelOverflow {
                        atoms: count,
                        cap: MAX_ATOMS,
                    });
                }
                let mut acc: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
                for part in &parts {
                    let mut next = Vec::with_capacity(acc.len() * part.atoms.len());
                    for (x, w) in &acc {
                        for (y, v) in &part.atoms {
                            let mut joined = x.clone();
                            joined.extend_from_slice(y);
                            next.push((joined, w * v));
                        }
                    }
                    acc = next;
                }
                AtomicMeasure::new(self.dim(), acc)
            }
            MeasureExpr::ConvPower { n, base } => {
                let b = base.discretize(level)?;
                let mut acc = b.clone();
                for _ in 1..*n {
                    let count = acc.atoms.len() as u128 * b.atoms.len() as u128;
                    if count > MAX_ATOMS as u128 {
                        return Err(MeasureError::LevelOverflow {
                            atoms: count,
                            cap: MAX_ATOMS,
                        });
                    }
                    let mut next = Vec::with_capacity(acc.atoms.len() * b.atoms.len());
                    for (x, w) in &acc.atoms {
                        for (y, v) in &b.atoms {
                            let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                            next.push((s, w * v));
                        }
                    }
                    acc = AtomicMeasure {
                        dimension: acc.dimension,
                        atoms: next,
                    }
                    .merged(0.0);
                }
                Ok(acc)
            }
            MeasureExpr::Mixture { components } => {
                let mut atoms = Vec::new();
                for c in components {
                    let part = c.measure.discretize(level)?;
                    atoms.extend(
                        part.atoms
                            .into_iter()
                            .map(|(x, w)| (x, w * c.weight)),
                    );
                }
                if atoms.len() > MAX_ATOMS {
                    return Err(MeasureError::LevelOverflow {
                        atoms: atoms.len() as u128,
                        cap: MAX_ATOMS,
                    });
                }
                AtomicMeasure::new(self.dim(), atoms)
            }
            MeasureExpr::AffineImage {
                scale,
                translate,
                base,
            } => {
                let part = base.discretize(level)?;
                let atoms = part
                    .atoms
                    .into_iter()
                    .map(|(x, w)| {
                        let y: Vec<f64> = x
                            .iter()
                            .zip(scale)
                            .zip(translate)
                            .map(|((xi, a), b)| a * xi + b)
                            .collect();
                        (y, w)
                    })
                    .collect();
                AtomicMeasure::new(part.dimension, atoms)
            }
            MeasureExpr::Projected { .. } => Err(MeasureError::DiscretizeProjected),
        }
    }
}
