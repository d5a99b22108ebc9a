//! Concrete objects: `E_alpha` Cantor measures, the triple-product example
//! with closed-form dimensions, and the staged grid sets behind the
//! sharpness construction with an exact projection-containment check.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{SetProfile, SpectrumModel};
use crate::measure::{MeasureExpr, SelfSimilarMeasure1D};

pub type Frac = Ratio<i64>;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("parameter {name} = {value} outside {range}")]
    ParamRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid staged-set parameters: {0}")]
    InvalidParams(String),
    #[error("grid overflow: eta_M = {0} exceeds cap")]
    GridOverflow(u64),
    #[error("stage {stage} not exactly representable: eta^{exponent} is not an integer")]
    StageNotExact { stage: usize, exponent: String },
    #[error("overflow in exact arithmetic at stage {0}; stage refused")]
    ExactOverflow(usize),
}

/// Middle-(1-2 alpha) Cantor measure: maps `x -> alpha x` and
/// `x -> alpha x + (1 - alpha)` with equal weights.
pub fn cantor_measure(alpha: f64) -> Result<SelfSimilarMeasure1D, ConstructionError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(ConstructionError::ParamRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1/2)",
        });
    }
    SelfSimilarMeasure1D::new(alpha, vec![0.0, 1.0 - alpha], vec![0.5, 0.5], true)
        .map_err(|e| ConstructionError::InvalidParams(e.to_string()))
}

/// The explicit product example `X = E_alpha x E_beta x E_gamma` with its
/// uniform self-affine measure `mu` and the closed-form dimensions of `mu`
/// and `mu * mu`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleX {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `log 2 * (1/-log alpha + 1/-log beta + 1/-log gamma)`
    pub dim_h: f64,
    /// `log(8/3) * (1/-log alpha + 1/-log beta + 1/-log gamma)`
    pub dim_s_conv2: f64,
    pub mu: MeasureExpr,
    pub mu_conv2: MeasureExpr,
    pub profile: SetProfile,
}

pub fn build_example(alpha: f64, beta: f64, gamma: f64) -> Result<ExampleX, ConstructionError> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(v > 0.0 && v <= 1.0 / 3.0) {
            return Err(ConstructionError::ParamRange {
                name,
                value: v,
                range: "(0, 1/3]",
            });
        }
    }
    let inv_log_sum: f64 = [alpha, beta, gamma].iter().map(|r| -1.0 / r.ln()).sum();
    let dim_h = 2f64.ln() * inv_log_sum;
    // per-axis convolution weights (1/4, 1/2, 1/4): sum of squares 3/8
    let dim_s_conv2 = (8.0f64 / 3.0).ln() * inv_log_sum;

    let factors: Vec<MeasureExpr> = [alpha, beta, gamma]
        .iter()
        .map(|&r| cantor_measure(r).map(MeasureExpr::from))
        .collect::<Result<_, _>>()?;
    let mu = MeasureExpr::Product { factors };
    let mu_conv2 = MeasureExpr::ConvPower {
        n: 2,
        base: Box::new(mu.clone()),
    };

    let mut sobolev_conv = std::collections::BTreeMap::new();
    sobolev_conv.insert(1, dim_h);
    sobolev_conv.insert(2, dim_s_conv2);
    let profile = SetProfile {
        d: 3,
        dim_h,
        dim_f: 0.0,
        spectrum: SpectrumModel::Grid {
            thetas: vec![0.0, 0.5, 1.0],
            values: vec![0.0, dim_s_conv2 / 2.0, dim_h],
            err: None,
        },
        sobolev_conv: Some(sobolev_conv),
    };

    Ok(ExampleX {
        alpha,
        beta,
        gamma,
        dim_h,
        dim_s_conv2,
        mu,
        mu_conv2,
        profile,
    })
}

/// Parameters of the staged grid sets
/// `A = { x in [0,1] : forall m, d(x, eta_m^{-u} Z) <= eta_m^{-1} }`
/// (and `B`, `C` with exponents `s - u`, `2u - s`).
#[derive(Debug, Clone)]
pub struct Lemma31Params {
    pub s: Frac,
    pub u: Frac,
    pub eta: Vec<u64>,
}

pub const ETA_CAP: u64 = 1 << 22;

impl Lemma31Params {
    pub fn new(s: Frac, u: Frac, eta: Vec<u64>) -> Result<Self, ConstructionError> {
        let zero = Frac::new(0, 1);
        let one = Frac::new(1, 1);
        if !(s > zero && s <= one) {
            return Err(ConstructionError::InvalidParams(format!(
                "s = {s} outside (0, 1]"
            )));
        }
        if !(u >= s / 2 && u < s) {
            return Err(ConstructionError::InvalidParams(format!(
                "u = {u} outside [s/2, s) for s = {s}"
            )));
        }
        for (name, e) in [("u", u), ("s-u", s - u), ("2u-s", u + u - s)] {
            if e < zero || e > one {
                return Err(ConstructionError::InvalidParams(format!(
                    "exponent {name} = {e} outside [0, 1]"
                )));
            }
        }
        if eta.is_empty() || eta[0] < 2 {
            return Err(ConstructionError::InvalidParams(
                "eta must start at >= 2".into(),
            ));
        }
        if eta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConstructionError::InvalidParams(
                "eta must be strictly increasing".into(),
            ));
        }
        if *eta.last().unwrap() > ETA_CAP {
            return Err(ConstructionError::GridOverflow(*eta.last().unwrap()));
        }
        Ok(Self { s, u, eta })
    }

    pub fn exponents(&self) -> [(&'static str, Frac); 3] {
        [
            ("u", self.u),
            ("s-u", self.s - self.u),
            ("2u-s", self.u + self.u - self.s),
        ]
    }

    /// The paper's growth condition `eta_{m+1} >= eta_m^m` is needed only
    /// asymptotically; at desk scale it is a warning, not an error.
    pub fn growth_condition_met(&self) -> bool {
        self.eta.windows(2).enumerate().all(|(i, w)| {
            let m = (i + 1) as u32;
            match w[0].checked_pow(m) {
                Some(p) => w[1] >= p,
                None => false,
            }
        })
    }
}

/// Per-stage report for one of the three sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub eta: u64,
    /// Lattice spacing `eta^{-exponent}`.
    pub spacing: f64,
    /// Number of lattice points `z * spacing` inside [0, 1]; this is the
    /// stage-m covering count (each point covers an `eta^{-1}` interval).
    pub lattice_count: u64,
    /// Cells of width `1/eta_m` meeting the intersection of the conditions
    /// up to stage m.
    pub cell_count: u64,
    /// `log(lattice_count) / log(eta)` — the covering exponent.
    pub covering_exponent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StagedSet {
    pub exponent_name: String,
    pub exponent: f64,
    pub stages: Vec<StageReport>,
    /// Grid cells of width `1/eta_M` meeting the full intersection.
    pub cells: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma31Sets {
    pub growth_condition_met: bool,
    pub sets: [StagedSet; 3],
}

/// Closed intervals `[center - radius, center + radius]` around lattice
/// points of spacing `step`, clipped to [0, 1], as a sorted disjoint list.
fn allowed_intervals(step: f64, radius: f64) -> Vec<(f64, f64)> {
    let z_max = ((1.0 + radius) / step + 1e-9).floor() as i64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for z in 0..=z_max {
        let c = z as f64 * step;
        let (a, b) = ((c - radius).max(0.0), (c + radius).min(1.0));
        if a > 1.0 || b < 0.0 || a > b {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if a <= last.1 {
                last.1 = last.1.max(b);
                continue;
            }
        }
        out.push((a, b));
    }
    out
}

fn intersect_intervals(xs: &[(f64, f64)], ys: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        let a = xs[i].0.max(ys[j].0);
        let b = xs[i].1.min(ys[j].1);
        if a <= b {
            out.push((a, b));
        }
        if xs[i].1 < ys[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Cells (half-open, width 1/eta) meeting a sorted disjoint interval list
/// of closed intervals.  Endpoints are snapped to the cell grid when they
/// sit within a 1e-9 relative distance of a grid line, so that exact
/// boundary tangencies survive float rounding whatever the lattice spacing.
fn cells_meeting(intervals: &[(f64, f64)], eta: u64) -> Vec<u64> {
    let snap_floor = |v: f64| -> i64 {
        let c = v * eta as f64;
        let r = c.round();
        if (c - r).abs() <= 1e-9 * c.abs().max(1.0) {
            r as i64
        } else {
            c.floor() as i64
        }
    };
    let mut out = Vec::new();
    for &(a, b) in intervals {
        let lo = snap_floor(a).max(0) as u64;
        let hi = (snap_floor(b).max(0) as u64).min(eta - 1);
        for c in lo..=hi {
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
    }
    out.dedup();
    out
}

/// Realize the three staged sets on the grid of width `1/eta_M`.
pub fn lemma31_sets(params: &Lemma31Params) -> Result<Lemma31Sets, ConstructionError> {
    let eta_m = *params.eta.last().unwrap();
    if eta_m > ETA_CAP {
        return Err(ConstructionError::GridOverflow(eta_m));
    }
    let sets: Vec<StagedSet> = params
        .exponents()
        .iter()
        .map(|(name, e)| {
            let ef = frac_to_f64(*e);
            let mut running: Vec<(f64, f64)> = vec![(0.0, 1.0)];
            let mut stages = Vec::new();
            for (idx, &eta) in params.eta.iter().enumerate() {
                let spacing = (eta as f64).powf(-ef);
                let radius = 1.0 / eta as f64;
                let stage_ivs = allowed_intervals(spacing, radius);
                running = intersect_intervals(&running, &stage_ivs);
                let lattice_count = (1.0 / spacing * (1.0 + 1e-12)).floor() as u64 + 1;
                let cell_count = cells_meeting(&running, eta).len() as u64;
                stages.push(StageReport {
                    stage: idx + 1,
                    eta,
                    spacing,
                    lattice_count,
                    cell_count,
                    covering_exponent: if eta > 1 {
                        (lattice_count as f64).ln() / (eta as f64).ln()
                    } else {
                        f64::NAN
                    },
                });
            }
            StagedSet {
                exponent_name: name.to_string(),
                exponent: ef,
                stages,
                cells: cells_meeting(&running, eta_m),
            }
        })
        .collect();
    let [a, b, c]: [StagedSet; 3] = sets.try_into().expect("three exponents");
    Ok(Lemma31Sets {
        growth_condition_met: params.growth_condition_met(),
        sets: [a, b, c],
    })
}

fn frac_to_f64(f: Frac) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

/// `eta^(p/q)` as an exact integer, if it is one.
fn exact_power(eta: u64, e: Frac, stage: usize) -> Result<u64, ConstructionError> {
    let e = e.reduced();
    let (p, q) = (*e.numer(), *e.denom());
    debug_assert!(p >= 0 && q > 0);
    if p == 0 {
        return Ok(1);
    }
    let pow = (eta as u128)
        .checked_pow(p as u32)
        .ok_or(ConstructionError::ExactOverflow(stage))?;
    let root = integer_nth_root(pow, q as u32);
    if root.checked_pow(q as u32) == Some(pow) {
        u64::try_from(root).map_err(|_| ConstructionError::ExactOverflow(stage))
    } else {
        Err(ConstructionError::StageNotExact {
            stage,
            exponent: format!("{p}/{q}"),
        })
    }
}

fn integer_nth_root(x: u128, n: u32) -> u128 {
    if n == 1 || x <= 1 {
        return x;
    }
    let mut lo: u128 = 0;
    let mut hi: u128 = 1 << (128 / n as usize + 1).min(127);
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        match mid.checked_pow(n) {
            Some(p) if p <= x => lo = mid,
            _ => hi = mid,
        }
    }
    lo
}

/// Whether stage `m` (1-indexed) is exactly representable: all three
/// lattice spacings must be reciprocals of integers.
pub fn stage_exactly_representable(params: &Lemma31Params, m: usize) -> bool {
    let eta = params.eta[m - 1];
    params
        .exponents()
        .iter()
        .all(|(_, e)| exact_power(eta, *e, m).is_ok())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub stage: usize,
    pub eta: u64,
    /// `eta^u`, `eta^{s-u}`, `eta^{2u-s}` as exact integers.
    pub denominators: (u64, u64, u64),
    pub checked: u64,
    pub ok: bool,
    /// `(z1, z2, z3)` of the first failing triple, if any.
    pub counterexample: Option<(i64, i64, i64)>,
}

/// Exact check of the projection identity at stage `m`: for all lattice
/// points `(z1/nu, z2/nb)` of `A_m x B_m` in `[0,1]^2` and slopes `z3/nc`
/// of `C_m` in `[0,1]`, the dot product
/// `(z1/nu, z2/nb) . (1, z3/nc) = (z1 + z2 z3) / nu`
/// lies on the `A_m` lattice.  Rational arithmetic throughout; `slope_perturbation`
/// (a rational added to every slope) supports negative controls.
pub fn verify_projection_containment(
    params: &Lemma31Params,
    m: usize,
    slope_perturbation: Option<Frac>,
) -> Result<ContainmentReport, ConstructionError> {
    if m == 0 || m > params.eta.len() {
        return Err(ConstructionError::InvalidParams(format!(
            "stage {m} out of range"
        )));
    }
    let eta = params.eta[m - 1];
    let [(_, eu), (_, eb), (_, ec)] = params.exponents();
    let nu = exact_power(eta, eu, m)?;
    let nb = exact_power(eta, eb, m)?;
    let nc = exact_power(eta, ec, m)?;
    if nu != nb.checked_mul(nc).ok_or(ConstructionError::ExactOverflow(m))? {
        // u = (s-u) + (2u-s) forces nu = nb * nc whenever all three are exact
        return Err(ConstructionError::StageNotExact {
            stage: m,
            exponent: "u != (s-u) + (2u-s) in exact powers".into(),
        });
    }
    let (pn, pd) = match slope_perturbation {
        Some(p) => (*p.numer() as i128, *p.denom() as i128),
        None => (0, 1),
    };
    let mut checked = 0u64;
    for z1 in 0..=(nu as i128) {
        for z2 in 0..=(nb as i128) {
            for z3 in 0..=(nc as i128) {
                // dot = z1/nu + (z2/nb) * (z3/nc + pn/pd)
                //     = (z1 * pd + z2 * z3 * pd + z2 * pn * nc) / (nu * pd)
                let num = z1
                    .checked_mul(pd)
                    .and_then(|a| {
                        z2.checked_mul(z3)
                            .and_then(|zz| zz.checked_mul(pd))
                            .map(|b| a + b)
                    })
                    .and_then(|ab| {
                        z2.checked_mul(pn)
                            .and_then(|c| c.checked_mul(nc as i128))
                            .map(|c| ab + c)
                    })
                    .ok_or(ConstructionError::ExactOverflow(m))?;
                // membership in (1/nu) Z: num / (nu * pd) must be a multiple
                // of 1/nu, i.e. pd must divide num
                checked += 1;
                if num % pd != 0 {
                    return Ok(ContainmentReport {
                        stage: m,
                        eta,
                        denominators: (nu, nb, nc),
                        checked,
                        ok: false,
                        counterexample: Some((z1 as i64, z2 as i64, z3 as i64)),
                    });
                }
            }
        }
    }
    Ok(ContainmentReport {
        stage: m,
        eta,
        denominators: (nu, nb, nc),
        checked,
        ok: true,
        counterexample: None,
    })
}
