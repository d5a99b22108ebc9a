//! Dyadic-shell estimation of the `(s, theta)`-energies and of the
//! Fourier spectrum `dim_F^theta`.
//!
//! For `theta > 0` the energy `J_{s,theta}(mu)^{1/theta}` is
//! `int |mu^(z)|^{2/theta} |z|^{s/theta - d} dz`.  On the dyadic shell
//! `A_j` the factor `|z|^{s/theta}` is within a constant of `2^{j s/theta}`,
//! so with
//!
//! ```text
//! T_j = int_{A_j} |mu^(z)|^{2/theta} |z|^{-d} dz
//! ```
//!
//! the energy is comparable to `sum_j 2^{j s / theta} T_j`, which is finite
//! exactly when `s < -theta * slope` of `log2 T_j` against `j`.  The
//! estimator therefore regresses `log2 T_j` on `j` over the upper half of
//! the requested shell range and reports `s_hat = -theta * slope`.
//!
//! For `theta = 0` the energy is a supremum, `M_j = sup_{A_j} |mu^|`
//! decays like `2^{-j s / 2}` at the Fourier dimension, and
//! `s_hat = -2 * slope` of `log2 M_j`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{MeasureError, MeasureExpr, SelfSimilarMeasure1D};
use crate::projection::least_squares_slope;
use crate::sampling::{shell_grid, shell_offset, sphere_surface_area};
use crate::DEFAULT_SEED;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("theta {0} outside [0,1]")]
    ThetaOutOfRange(f64),
    #[error("shell range must span at least {need} shells, got {got}")]
    TooFewShells { need: usize, got: usize },
    #[error("regression degenerate: {0}")]
    Degenerate(String),
    #[error("lattice point budget exceeded ({points} > {cap})")]
    LatticeBudget { points: u128, cap: u128 },
    #[error("alpha {alpha} not inside (0, 1/diameter = {limit})")]
    AlphaOutOfRange { alpha: f64, limit: f64 },
    #[error("open set condition flag not set; L2-dimension formula invalid")]
    OscRequired,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Per-shell point budget.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum ShellBudget {
    /// `mult * max(1024, 64 j^2)` points per shell.
    Spec { mult: usize },
    /// Radial spacing <= 0.5 up to the cap: `min(2^{j+1}, cap)` points.
    /// Resolves the O(1)-width peaks of lattice self-similar measures,
    /// which dominate the shell integrals for small theta.
    DenseRadial { cap: usize },
}

impl ShellBudget {
    pub fn points(&self, j: u32) -> usize {
        match self {
            ShellBudget::Spec { mult } => mult * 1024.max(64 * (j as usize) * (j as usize)),
            ShellBudget::DenseRadial { cap } => {
                1024.max((1usize << (j + 1).min(62)).min(*cap))
            }
        }
    }
}

/// Deterministic sampling plan: seed, per-shell budgets, default shell
/// range and the supremum-estimation parameters for theta = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub seed: u64,
    pub budget: ShellBudget,
    /// Default `(j_lo, j_hi)` used by the convolution shortcut.
    pub j_range: (u32, u32),
    /// Target sample spacing (in |z|) for per-shell suprema.
    pub sup_spacing: f64,
    /// Hard cap on supremum samples per shell.
    pub sup_budget: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            seed: DEFAULT_SEED,
            budget: ShellBudget::Spec { mult: 1 },
            j_range: (4, 24),
            sup_spacing: 0.5,
            sup_budget: 1 << 22,
        }
    }
}

impl SamplingPlan {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Dense radial plan for low shells; exact peak capture for the
    /// small-theta regime.
    pub fn dense() -> Self {
        SamplingPlan {
            budget: ShellBudget::DenseRadial { cap: 1 << 20 },
            j_range: (4, 16),
            ..Default::default()
        }
    }
}

/// One shell's energy (theta > 0) or supremum (theta = 0) estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShellEstimate {
    pub theta: f64,
    pub j: u32,
    /// `T_j` for theta > 0, `M_j` for theta = 0.
    pub value: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Ok,
    Noisy,
    Truncated,
}

/// Estimated `dim_F^theta` with regression diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub theta: f64,
    pub s_hat: f64,
    pub slope: f64,
    pub stderr: f64,
    pub shells: Vec<ShellEstimate>,
    /// Shell window actually used by the regression.
    pub window: (u32, u32),
    pub quality: Quality,
}

const NOISY_STDERR: f64 = 0.15;
const FT_TOL: f64 = 1e-9;

/// Monte Carlo / low-discrepancy estimate of
/// `T_j = int_{A_j} |mu^(z)|^{2/theta} |z|^{-d} dz`.
pub fn shell_energy(
    measure: &MeasureExpr,
    theta: f64,
    j: u32,
    plan: &SamplingPlan,
) -> Result<ShellEstimate, SpectrumError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(SpectrumError::ThetaOutOfRange(theta));
    }
    let moduli = shell_moduli(measure, j, plan)?;
    Ok(shell_energy_from_moduli(&moduli, theta, j, plan.seed))
}

/// `|mu^|` over the shell grid, shared across theta values.
fn shell_moduli(
    measure: &MeasureExpr,
    j: u32,
    plan: &SamplingPlan,
) -> Result<(Vec<f64>, f64), SpectrumError> {
    let d = measure.dim();
    let n = plan.budget.points(j);
    let grid = shell_grid(d, j, n, plan.seed);
    let mut vals = Vec::with_capacity(grid.points.len());
    for p in &grid.points {
        vals.push(measure.ft_eval(p, FT_TOL)?.norm());
    }
    Ok((vals, grid.weight))
}

fn shell_energy_from_moduli(
    moduli: &(Vec<f64>, f64),
    theta: f64,
    j: u32,
    seed: u64,
) -> ShellEstimate {
    let q = 2.0 / theta;
    let sum: f64 = moduli.0.iter().map(|v| v.powf(q)).sum();
    ShellEstimate {
        theta,
        j,
        value: moduli.1 * sum,
        n_samples: moduli.0.len(),
        seed,
    }
}

/// Per-shell supremum estimate of `|mu^|` for theta = 0: dense radial scan
/// plus a golden-section refinement in radius around the best candidates.
/// Returns the estimate and whether the requested spacing was met.
pub fn shell_supremum(
    measure: &MeasureExpr,
    j: u32,
    plan: &SamplingPlan,
) -> Result<(ShellEstimate, bool), SpectrumError> {
    let d = measure.dim();
    let lo = (j as f64).exp2();
    let hi = (j as f64 + 1.0).exp2();
    let mut best = 0.0f64;
    let mut best_dir: Vec<f64> = vec![0.0; d];
    let mut best_rho = lo;
    let mut n_total = 0usize;
    let mut spacing_met = true;

    // directions: in d = 1 a single ray; else a spaced set of rays, each
    // scanned densely in radius
    let dirs: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0]],
        _ => {
            let n_dirs = (sphere_surface_area(d) / 2.0 * hi / plan.sup_spacing)
                .ceil()
                .min(8192.0) as usize;
            let g = shell_grid(d, j, n_dirs.max(64), plan.seed ^ 0x51);
            let mut dirs = Vec::with_capacity(g.points.len());
            for p in g.points {
                let norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                dirs.push(p.into_iter().map(|x| x / norm).collect());
            }
            dirs
        }
    };

    let per_dir = ((hi - lo) / plan.sup_spacing).ceil() as usize;
    let per_dir = if per_dir * dirs.len() > plan.sup_budget {
        spacing_met = false;
        (plan.sup_budget / dirs.len()).max(16)
    } else {
        per_dir.max(16)
    };
    let off = shell_offset(plan.seed, j);
    let step = (hi - lo) / per_dir as f64;
    for dir in &dirs {
        for i in 0..per_dir {
            let rho = lo + (i as f64 + off) * step;
            let z: Vec<f64> = dir.iter().map(|c| c * rho).collect();
            let v = measure.ft_eval(&z, FT_TOL)?.norm();
            n_total += 1;
            if v > best {
                best = v;
                best_rho = rho;
                best_dir = dir.clone();
            }
        }
    }

    // one golden-section pass in radius around the argmax direction
    let gr = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = ((best_rho - step).max(lo), (best_rho + step).min(hi));
    let eval = |rho: f64| -> Result<f64, SpectrumError> {
        let z: Vec<f64> = best_dir.iter().map(|c| c * rho).collect();
        Ok(measure.ft_eval(&z, FT_TOL)?.norm())
    };
    let mut c = b - gr * (b - a);
    let mut dpt = a + gr * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(dpt)?;
    for _ in 0..40 {
        if fc > fd {
            b = dpt;
            dpt = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = dpt;
            fc = fd;
            dpt = a + gr * (b - a);
            fd = eval(dpt)?;
        }
        n_total += 1;
    }
    best = best.max(fc).max(fd);

    Ok((
        ShellEstimate {
            theta: 0.0,
            j,
            value: best,
            n_samples: n_total,
            seed: plan.seed,
        },
        spacing_met,
    ))
}

/// Estimate `dim_F^theta` over the inclusive shell range `j_range`.
pub fn estimate_spectrum(
    measure: &MeasureExpr,
    theta: f64,
    j_range: (u32, u32),
    plan: &SamplingPlan,
) -> Result<SpectrumEstimate, SpectrumError> {
    let mut out = estimate_spectrum_multi(measure, &[theta], j_range, plan)?;
    Ok(out.remove(0))
}

/// Same as [`estimate_spectrum`] for several theta at once, sharing the
/// Fourier-transform evaluations across the grid.
pub fn estimate_spectrum_multi(
    measure: &MeasureExpr,
    thetas: &[f64],
    j_range: (u32, u32),
    plan: &SamplingPlan,
) -> Result<Vec<SpectrumEstimate>, SpectrumError> {
    let (j_lo, j_hi) = j_range;
    if j_hi < j_lo || (j_hi - j_lo + 1) < 6 {
        return Err(SpectrumError::TooFewShells {
            need: 6,
            got: (j_hi as i64 - j_lo as i64 + 1).max(0) as usize,
        });
    }
    for &theta in thetas {
        if !(0.0..=1.0).contains(&theta) {
            return Err(SpectrumError::ThetaOutOfRange(theta));
        }
    }
    let js: Vec<u32> = (j_lo..=j_hi).collect();

    let positive: Vec<f64> = thetas.iter().cloned().filter(|t| *t > 0.0).collect();
    let mut energy_shells: Vec<Vec<ShellEstimate>> = vec![Vec::new(); positive.len()];
    if !positive.is_empty() {
        for &j in &js {
            let moduli = shell_moduli(measure, j, plan)?;
            for (idx, &theta) in positive.iter().enumerate() {
                energy_shells[idx].push(shell_energy_from_moduli(&moduli, theta, j, plan.seed));
            }
        }
    }
    let mut sup_shells: Vec<ShellEstimate> = Vec::new();
    let mut sup_spacing_met = true;
    if thetas.iter().any(|t| *t == 0.0) {
        for &j in &js {
            let (est, met) = shell_supremum(measure, j, plan)?;
            sup_spacing_met &= met;
            sup_shells.push(est);
        }
    }

    let mut out = Vec::with_capacity(thetas.len());
    let mut pos_idx = 0;
    for &theta in thetas {
        let (shells, scale, mut quality) = if theta > 0.0 {
            let s = energy_shells[pos_idx].clone();
            pos_idx += 1;
            (s, theta, Quality::Ok)
        } else {
            (
                sup_shells.clone(),
                2.0,
                if sup_spacing_met {
                    Quality::Ok
                } else {
                    Quality::Truncated
                },
            )
        };
        // regression over the upper half of the requested range
        let half_start = shells.len() / 2;
        let window: Vec<&ShellEstimate> = shells[half_start..].iter().collect();
        let usable: Vec<&&ShellEstimate> = window
            .iter()
            .filter(|s| s.value.is_finite() && s.value > 0.0)
            .collect();
        if usable.len() < window.len() {
            quality = Quality::Truncated;
        }
        if usable.len() < 3 {
            return Err(SpectrumError::Degenerate(format!(
                "only {} usable shells in regression window at theta={theta}",
                usable.len()
            )));
        }
        let xs: Vec<f64> = usable.iter().map(|s| s.j as f64).collect();
        let ys: Vec<f64> = usable.iter().map(|s| s.value.log2()).collect();
        let (slope, se) = least_squares_slope(&xs, &ys);
        let stderr = scale * se;
        if quality == Quality::Ok && stderr > NOISY_STDERR {
            quality = Quality::Noisy;
        }
        out.push(SpectrumEstimate {
            theta,
            s_hat: -scale * slope,
            slope,
            stderr,
            window: (window[0].j, window[window.len() - 1].j),
            shells,
            quality,
        });
    }
    Ok(out)
}

/// Convolution shortcut: `dim_F^{1/n} mu` estimated as
/// `dim_S(mu^{*n}) / n` via a theta = 1 shell regression of the n-fold
/// self-convolution (whose transform is `mu^` to the n-th power).
pub fn estimate_via_convolution(
    measure: &MeasureExpr,
    n: u32,
    plan: &SamplingPlan,
) -> Result<ConvolutionEstimate, SpectrumError> {
    assert!(n >= 1, "convolution power must be >= 1");
    let conv = MeasureExpr::ConvPower {
        n,
        base: Box::new(measure.clone()),
    };
    let inner = estimate_spectrum(&conv, 1.0, plan.j_range, plan)?;
    Ok(ConvolutionEstimate {
        value: inner.s_hat / n as f64,
        stderr: inner.stderr / n as f64,
        n,
        inner,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvolutionEstimate {
    /// Estimate of `dim_F^{1/n}`.
    pub value: f64,
    pub stderr: f64,
    pub n: u32,
    pub inner: SpectrumEstimate,
}

/// L2 dimension `log(sum p_j^2) / log(ratio)` of a self-similar measure,
/// valid under the open set condition.
pub fn l2_dimension_self_similar(m: &SelfSimilarMeasure1D) -> Result<f64, SpectrumError> {
    if !m.open_set_condition {
        return Err(SpectrumError::OscRequired);
    }
    Ok(l2_dimension_formula(&m.weights, m.ratio))
}

/// The raw formula, hypothesis checking left to the caller.
pub fn l2_dimension_formula(weights: &[f64], ratio: f64) -> f64 {
    let p2: f64 = weights.iter().map(|p| p * p).sum();
    p2.ln() / ratio.ln()
}

const LATTICE_CAP: u128 = 1 << 27;

/// Truncated lattice-sum energy
/// `1 + sum_{z in alpha Z^d, 0 < |z| <= R} |mu^(z)|^{2/theta} |z|^{s/theta - d}`.
pub fn lattice_energy(
    measure: &MeasureExpr,
    theta: f64,
    s: f64,
    alpha: f64,
    r_max: f64,
) -> Result<f64, SpectrumError> {
    let sums = lattice_energy_multi(measure, theta, &[s], alpha, &[r_max])?;
    Ok(sums[0][0])
}

/// Lattice sums for a grid of `s` values and several truncation radii
/// (single pass over the lattice).  Result indexed `[s][radius]`.
pub fn lattice_energy_multi(
    measure: &MeasureExpr,
    theta: f64,
    s_grid: &[f64],
    alpha: f64,
    radii: &[f64],
) -> Result<Vec<Vec<f64>>, SpectrumError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(SpectrumError::ThetaOutOfRange(theta));
    }
    let d = measure.dim();
    let diam = support_diameter(measure);
    if !(alpha > 0.0 && alpha * diam < 1.0 + 1e-12) {
        return Err(SpectrumError::AlphaOutOfRange {
            alpha,
            limit: 1.0 / diam,
        });
    }
    let r_max = radii.iter().cloned().fold(0.0f64, f64::max);
    let m_max = (r_max / alpha).floor() as i64;
    let count: u128 = match d {
        1 => 2 * m_max as u128,
        2 => (2 * m_max as u128 + 1).pow(2),
        3 => (2 * m_max as u128 + 1).pow(3),
        _ => u128::MAX,
    };
    if count > LATTICE_CAP {
        return Err(SpectrumError::LatticeBudget {
            points: count,
            cap: LATTICE_CAP,
        });
    }

    let q = 2.0 / theta;
    let mut sums = vec![vec![1.0f64; radii.len()]; s_grid.len()];
    let add = |z: &[f64], sums: &mut Vec<Vec<f64>>| -> Result<(), SpectrumError> {
        let r2: f64 = z.iter().map(|c| c * c).sum();
        let r = r2.sqrt();
        if r == 0.0 || r > r_max {
            return Ok(());
        }
        let v = measure.ft_eval(z, FT_TOL)?.norm().powf(q);
        if v == 0.0 {
            return Ok(());
        }
        let lnr = r.ln();
        for (si, s) in s_grid.iter().enumerate() {
            let term = v * ((s / theta - d as f64) * lnr).exp();
            for (ri, rad) in radii.iter().enumerate() {
                if r <= *rad {
                    sums[si][ri] += term;
                }
            }
        }
        Ok(())
    };

    match d {
        1 => {
            for m in 1..=m_max {
                let z = [alpha * m as f64];
                // real measure: |mu^(-z)| = |mu^(z)|
                let r: f64 = z[0];
                let v = measure.ft_eval(&z, FT_TOL)?.norm().powf(q);
                if v == 0.0 {
                    continue;
                }
                let lnr = r.ln();
                for (si, s) in s_grid.iter().enumerate() {
                    let term = 2.0 * v * ((s / theta - 1.0) * lnr).exp();
                    for (ri, rad) in radii.iter().enumerate() {
                        if r <= *rad {
                            sums[si][ri] += term;
                        }
                    }
                }
            }
        }
        2 => {
            for m1 in -m_max..=m_max {
                for m2 in -m_max..=m_max {
                    add(&[alpha * m1 as f64, alpha * m2 as f64], &mut sums)?;
                }
            }
        }
        3 => {
            for m1 in -m_max..=m_max {
                for m2 in -m_max..=m_max {
                    for m3 in -m_max..=m_max {
                        add(
                            &[alpha * m1 as f64, alpha * m2 as f64, alpha * m3 as f64],
                            &mut sums,
                        )?;
                    }
                }
            }
        }
        _ => unreachable!("budget check rejects d > 3"),
    }
    Ok(sums)
}

/// The `s` at which the lattice sum starts growing with the truncation
/// radius: linear interpolation of the growth exponent
/// `dlog2(sum)/dlog2(R)` across its zero crossing.
pub fn lattice_divergence_threshold(
    measure: &MeasureExpr,
    theta: f64,
    alpha: f64,
    s_grid: &[f64],
    r_lo: f64,
    r_hi: f64,
) -> Result<f64, SpectrumError> {
    let sums = lattice_energy_multi(measure, theta, s_grid, alpha, &[r_lo, r_hi])?;
    let denom = r_hi.log2() - r_lo.log2();
    let mut prev: Option<(f64, f64)> = None;
    let eps = 0.02;
    for (s, pair) in s_grid.iter().zip(&sums) {
        let g = (pair[1].log2() - pair[0].log2()) / denom;
        if let Some((ps, pg)) = prev {
            if pg <= eps && g > eps {
                let t = (eps - pg) / (g - pg);
                return Ok(ps + t * (s - ps));
            }
        }
        prev = Some((*s, g));
    }
    Err(SpectrumError::Degenerate(
        "growth exponent has no zero crossing on the s-grid".into(),
    ))
}

/// Per-coordinate support bounds.
fn support_box(measure: &MeasureExpr) -> (Vec<f64>, Vec<f64>) {
    match measure {
        MeasureExpr::SelfSimilar1D {
            ratio,
            translations,
            ..
        } => {
            let lo = translations.iter().cloned().fold(f64::INFINITY, f64::min) / (1.0 - ratio);
            let hi = translations
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
                / (1.0 - ratio);
            (vec![lo], vec![hi])
        }
        MeasureExpr::Atomic { dimension, atoms } => {
            let mut lo = vec![f64::INFINITY; *dimension];
            let mut hi = vec![f64::NEG_INFINITY; *dimension];
            for (x, _) in atoms {
                for i in 0..*dimension {
                    lo[i] = lo[i].min(x[i]);
                    hi[i] = hi[i].max(x[i]);
                }
            }
            (lo, hi)
        }
        MeasureExpr::Product { factors } => {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for f in factors {
                let (l, h) = support_box(f);
                lo.extend(l);
                hi.extend(h);
            }
            (lo, hi)
        }
        MeasureExpr::ConvPower { n, base } => {
            let (l, h) = support_box(base);
            (
                l.into_iter().map(|x| x * *n as f64).collect(),
                h.into_iter().map(|x| x * *n as f64).collect(),
            )
        }
        MeasureExpr::Mixture { components } => {
            let mut lo = vec![f64::INFINITY; components[0].measure.dim()];
            let mut hi = vec![f64::NEG_INFINITY; components[0].measure.dim()];
            for c in components {
                let (l, h) = support_box(&c.measure);
                for i in 0..lo.len() {
                    lo[i] = lo[i].min(l[i]);
                    hi[i] = hi[i].max(h[i]);
                }
            }
            (lo, hi)
        }
        MeasureExpr::AffineImage {
            scale,
            translate,
            base,
        } => {
            let (l, h) = support_box(base);
            let mut lo = Vec::with_capacity(l.len());
            let mut hi = Vec::with_capacity(l.len());
            for i in 0..l.len() {
                let a = scale[i] * l[i] + translate[i];
                let b = scale[i] * h[i] + translate[i];
                lo.push(a.min(b));
                hi.push(a.max(b));
            }
            (lo, hi)
        }
        MeasureExpr::Projected { frame, base } => {
            // crude but safe: the projection of a box fits in the ball of
            // the box's diameter
            let (l, h) = support_box(base);
            let rad: f64 = l
                .iter()
                .zip(&h)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt();
            (vec![-rad; frame.k], vec![rad; frame.k])
        }
    }
}

/// Euclidean diameter of the support bounding box.
pub fn support_diameter(measure: &MeasureExpr) -> f64 {
    let (lo, hi) = support_box(measure);
    lo.iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

/// CSV diagnostic dump: `theta, j, Tj_or_Mj, n_samples, seed`.
pub fn shells_csv(estimates: &[SpectrumEstimate]) -> String {
    let mut out = String::from("theta,j,Tj_or_Mj,n_samples,seed\n");
    for est in estimates {
        for s in &est.shells {
            out.push_str(&format!(
                "{},{},{:.12e},{},{}\n",
                fmt_f64(s.theta),
                s.j,
                s.value,
                s.n_samples,
                s.seed
            ));
        }
    }
    out
}

/// Plain decimal formatting without trailing zeros ("0.5", not "5e-1").
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v}");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::cantor_measure;

    fn cantor13() -> MeasureExpr {
        cantor_measure(1.0 / 3.0).unwrap().into()
    }

    fn lebesgue01() -> MeasureExpr {
        MeasureExpr::SelfSimilar1D {
            ratio: 0.5,
            translations: vec![0.0, 0.5],
            weights: vec![0.5, 0.5],
            open_set_condition: true,
        }
    }

    fn dirac0() -> MeasureExpr {
        MeasureExpr::Atomic {
            dimension: 1,
            atoms: vec![(vec![0.0], 1.0)],
        }
    }

    #[test]
    fn dirac_shell_energy_is_two_ln_two() {
        // |mu^| = 1 so T_j = int_{A_j} |z|^{-1} dz = 2 ln 2 in d = 1
        let plan = SamplingPlan::default();
        for j in [0, 5, 13] {
            let t = shell_energy(&dirac0(), 1.0, j, &plan).unwrap();
            let want = 2.0 * std::f64::consts::LN_2;
            assert!((t.value - want).abs() / want < 0.01, "j={j}: {}", t.value);
        }
    }

    #[test]
    fn lebesgue_shell_slope_is_minus_two() {
        let plan = SamplingPlan::default();
        let js: Vec<u32> = (8..=18).collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &j in &js {
            let t = shell_energy(&lebesgue01(), 1.0, j, &plan).unwrap();
            xs.push(j as f64);
            ys.push(t.value.log2());
        }
        let (slope, _) = least_squares_slope(&xs, &ys);
        assert!((slope + 2.0).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn cantor_shell_slope_matches_l2_dimension() {
        let plan = SamplingPlan::default();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for j in 10..=24u32 {
            let t = shell_energy(&cantor13(), 1.0, j, &plan).unwrap();
            xs.push(j as f64);
            ys.push(t.value.log2());
        }
        let (slope, _) = least_squares_slope(&xs, &ys);
        let target = -(2f64.ln() / 3f64.ln());
        assert!((slope - target).abs() <= 0.05, "slope {slope} vs {target}");
    }

    #[test]
    fn estimate_spectrum_examples() {
        let plan = SamplingPlan::default();
        let leb = estimate_spectrum(&lebesgue01(), 1.0, (4, 24), &plan).unwrap();
        assert!((leb.s_hat - 2.0).abs() <= 0.1, "lebesgue {}", leb.s_hat);

        let c1 = estimate_spectrum(&cantor13(), 1.0, (4, 24), &plan).unwrap();
        assert!((c1.s_hat - 0.6309).abs() <= 0.05, "cantor {}", c1.s_hat);

        let c0 = estimate_spectrum(&cantor13(), 0.0, (2, 18), &plan).unwrap();
        assert!(c0.s_hat <= 0.05, "cantor theta=0 {}", c0.s_hat);

        let chalf = estimate_spectrum(&cantor13(), 0.5, (4, 24), &plan).unwrap();
        assert!(
            (chalf.s_hat - 0.4464).abs() <= 0.05,
            "cantor theta=1/2 {}",
            chalf.s_hat
        );
    }

    #[test]
    fn convolution_shortcut_examples() {
        let plan = SamplingPlan::default();
        let one = estimate_via_convolution(&cantor13(), 1, &plan).unwrap();
        assert!((one.value - 0.6309).abs() <= 0.05, "n=1 {}", one.value);
        let two = estimate_via_convolution(&cantor13(), 2, &plan).unwrap();
        assert!((two.value - 0.4464).abs() <= 0.05, "n=2 {}", two.value);
        let d = estimate_via_convolution(&dirac0(), 3, &plan).unwrap();
        assert!(d.value.abs() <= 0.02, "dirac {}", d.value);
    }

    #[test]
    fn convolution_identity_is_algebraic_for_shared_plans() {
        // ConvPower(2) at theta = 1 integrates the same |mu^|^4 samples as
        // the base measure at theta = 1/2, so the two estimates agree to
        // floating-point accuracy.
        let plan = SamplingPlan::default();
        let a = estimate_via_convolution(&cantor13(), 2, &plan).unwrap();
        let b = estimate_spectrum(&cantor13(), 0.5, plan.j_range, &plan).unwrap();
        assert!((2.0 * a.value - 2.0 * b.s_hat).abs() < 1e-9);
    }

    #[test]
    fn l2_dimension_examples() {
        let m = cantor_measure(1.0 / 3.0).unwrap();
        let v = l2_dimension_self_similar(&m).unwrap();
        assert!((v - 2f64.ln() / 3f64.ln()).abs() < 1e-12);

        let conv = SelfSimilarMeasure1D::new(
            1.0 / 3.0,
            vec![0.0, 2.0 / 3.0, 4.0 / 3.0],
            vec![0.25, 0.5, 0.25],
            true,
        )
        .unwrap();
        let v = l2_dimension_self_similar(&conv).unwrap();
        assert!((v - (8f64 / 3.0).ln() / 3f64.ln()).abs() < 1e-12);

        assert!((l2_dimension_formula(&[1.0], 0.5) - 0.0).abs() < 1e-15);

        let no_osc = SelfSimilarMeasure1D::new(0.5, vec![0.0, 0.1], vec![0.5, 0.5], false).unwrap();
        assert!(matches!(
            l2_dimension_self_similar(&no_osc),
            Err(SpectrumError::OscRequired)
        ));
    }

    #[test]
    fn lattice_energy_dirac_closed_form() {
        // z = m/2, |mu^| = 1, exponent s/theta - d = -2:
        // 1 + 2 sum_{m=1}^{2^{11}} (m/2)^{-2}
        let v = lattice_energy(&dirac0(), 1.0, -1.0, 0.5, 1024.0).unwrap();
        let mut want = 1.0;
        for m in 1..=2048u64 {
            want += 2.0 * (m as f64 / 2.0).powi(-2);
        }
        assert!((v - want).abs() < 1e-6, "{v} vs {want}");
    }

    #[test]
    fn lattice_tail_bounded_for_steep_exponents() {
        // s/theta - d <= -d - 1: tail beyond R is below sum |z|^{-d-1}
        let v1 = lattice_energy(&cantor13(), 1.0, -1.0, 0.5, 512.0).unwrap();
        let v2 = lattice_energy(&cantor13(), 1.0, -1.0, 0.5, 4096.0).unwrap();
        // comparison bound: 2 * sum_{m > 2R} (m/2)^{-2} = 8/(2R) roughly
        let bound = 8.0 / 1024.0;
        assert!(v2 - v1 >= 0.0 && v2 - v1 < bound, "{}", v2 - v1);
    }

    #[test]
    fn lattice_alpha_precondition() {
        assert!(matches!(
            lattice_energy(&cantor13(), 1.0, 0.0, 1.5, 16.0),
            Err(SpectrumError::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn lattice_and_shell_thresholds_agree() {
        // dual-method cross-check: the divergence threshold of the lattice
        // sum matches the shell-regression estimate within 0.05
        let s_grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
        let thr = lattice_divergence_threshold(
            &cantor13(),
            1.0,
            0.5,
            &s_grid,
            1024.0,
            262_144.0,
        )
        .unwrap();
        let plan = SamplingPlan::default();
        let s_hat = estimate_spectrum(&cantor13(), 1.0, (4, 24), &plan)
            .unwrap()
            .s_hat;
        assert!((thr - s_hat).abs() <= 0.05, "lattice {thr} vs shell {s_hat}");
    }

    #[test]
    fn too_few_shells_is_an_error() {
        let plan = SamplingPlan::default();
        assert!(matches!(
            estimate_spectrum(&cantor13(), 1.0, (4, 8), &plan),
            Err(SpectrumError::TooFewShells { .. })
        ));
    }

    #[test]
    fn estimates_are_deterministic() {
        let plan = SamplingPlan::default();
        let a = estimate_spectrum(&cantor13(), 1.0, (6, 14), &plan).unwrap();
        let b = estimate_spectrum(&cantor13(), 1.0, (6, 14), &plan).unwrap();
        assert_eq!(a.s_hat.to_bits(), b.s_hat.to_bits());
        let c = estimate_spectrum(&cantor13(), 1.0, (6, 14), &plan.clone().with_seed(7)).unwrap();
        assert_ne!(a.s_hat.to_bits(), c.s_hat.to_bits());
    }

    #[test]
    fn csv_dump_has_normative_columns() {
        let plan = SamplingPlan::default();
        let est = estimate_spectrum(&dirac0(), 1.0, (2, 8), &plan).unwrap();
        let csv = shells_csv(&[est]);
        assert!(csv.starts_with("theta,j,Tj_or_Mj,n_samples,seed\n"));
        assert_eq!(csv.lines().count(), 8);
    }
}
