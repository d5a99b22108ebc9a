//! Deterministic shell-sampling grids.
//!
//! Shell integrals are taken in log-radius: with `rho = 2^lambda`,
//!
//! ```text
//! int_{A_j} f(z) |z|^{-d} dz = ln 2 * int_{S^{d-1}} int_j^{j+1} f(2^lambda w) dlambda dsigma(w)
//! ```
//!
//! so a shell estimate is `sigma(S^{d-1}) * ln 2 *` the mean of `f` over a
//! low-discrepancy grid of `(lambda, w)` pairs.  The radial coordinate uses
//! a golden-ratio Kronecker sequence (never resonates with rational
//! frequencies), the angular coordinate a uniform grid whose offset rotates
//! with the radial index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// frac(golden ratio) = 1/phi, the Kronecker rotation step.
pub const GOLDEN_FRAC: f64 = 0.618_033_988_749_894_9;

/// Splitmix64; used to derive per-(seed, shell) offsets.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic offset in [0,1) for shell `j` under `seed`.
///
/// Depends only on `(seed, j)` so that estimates for different measures
/// or different theta sample identical frequencies.
pub fn shell_offset(seed: u64, j: u32) -> f64 {
    let h = splitmix64(seed ^ ((j as u64) << 32));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Points on the shell `A_j = { 2^j <= |z| < 2^{j+1} }` in `R^d` together
/// with the quadrature weight `sigma(S^{d-1}) * ln 2 / n`.
pub struct ShellGrid {
    pub points: Vec<Vec<f64>>,
    /// Multiply the sum of integrand values by this to estimate the
    /// shell integral of `f(z) |z|^{-d}`.
    pub weight: f64,
}

/// Low-discrepancy grid (d <= 3) or seeded Monte Carlo fallback (d > 3).
pub fn shell_grid(d: usize, j: u32, n: usize, seed: u64) -> ShellGrid {
    let off = shell_offset(seed, j);
    match d {
        1 => shell_grid_1d(j, n, off),
        2 => shell_grid_2d(j, n, off),
        3 => shell_grid_3d(j, n, off),
        _ => shell_grid_mc(d, j, n, seed),
    }
}

/// Radial log-spaced Kronecker points on the positive side.  Real measures
/// have `|mu^(-z)| = |mu^(z)|`, so one side with doubled weight suffices.
fn shell_grid_1d(j: u32, n: usize, off: f64) -> ShellGrid {
    let points = (0..n)
        .map(|i| {
            let lam = j as f64 + ((i as f64) * GOLDEN_FRAC + off).fract();
            vec![lam.exp2()]
        })
        .collect();
    ShellGrid {
        points,
        weight: 2.0 * std::f64::consts::LN_2 / n as f64,
    }
}

/// Rotated radial x angular lattice on the upper half-circle.
fn shell_grid_2d(j: u32, n: usize, off: f64) -> ShellGrid {
    let na = ((n as f64).sqrt() as usize).max(16);
    let nr = (n / na).max(16);
    let mut points = Vec::with_capacity(na * nr);
    for i in 0..nr {
        let lam = j as f64 + ((i as f64) * GOLDEN_FRAC + off).fract();
        let rho = lam.exp2();
        let aoff = ((i as f64 + 1.0) * GOLDEN_FRAC).fract();
        for k in 0..na {
            let phi = (k as f64 + aoff + 0.5) / na as f64 * std::f64::consts::PI;
            points.push(vec![rho * phi.cos(), rho * phi.sin()]);
        }
    }
    let count = points.len() as f64;
    ShellGrid {
        points,
        weight: 2.0 * std::f64::consts::PI * std::f64::consts::LN_2 / count,
    }
}

/// Rotated radial x Fibonacci-sphere lattice.
fn shell_grid_3d(j: u32, n: usize, off: f64) -> ShellGrid {
    let na = ((n as f64).sqrt() as usize).max(32);
    let nr = (n / na).max(16);
    let mut points = Vec::with_capacity(na * nr);
    for i in 0..nr {
        let lam = j as f64 + ((i as f64) * GOLDEN_FRAC + off).fract();
        let rho = lam.exp2();
        let aoff = ((i as f64 + 1.0) * GOLDEN_FRAC).fract();
        for k in 0..na {
            // Fibonacci sphere with per-row rotation
            let zc = 1.0 - 2.0 * (k as f64 + 0.5) / na as f64;
            let r = (1.0 - zc * zc).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * ((k as f64) * GOLDEN_FRAC + aoff).fract();
            points.push(vec![rho * r * phi.cos(), rho * r * phi.sin(), rho * zc]);
        }
    }
    let count = points.len() as f64;
    ShellGrid {
        points,
        weight: 4.0 * std::f64::consts::PI * std::f64::consts::LN_2 / count,
    }
}

/// Seeded Monte Carlo fallback for d > 3: uniform in log-radius, Gaussian
/// direction.
fn shell_grid_mc(d: usize, j: u32, n: usize, seed: u64) -> ShellGrid {
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed ^ ((j as u64) << 32) ^ 0xD));
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let lam = j as f64 + rng.gen::<f64>();
        let rho = lam.exp2();
        let dir: Vec<f64> = (0..d)
            .map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        points.push(dir.into_iter().map(|x| x / norm * rho).collect());
    }
    let sphere_area = sphere_surface_area(d);
    ShellGrid {
        points,
        weight: sphere_area * std::f64::consts::LN_2 / n as f64,
    }
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn sphere_surface_area(d: usize) -> f64 {
    // 2 pi^{d/2} / Gamma(d/2)
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => {
            let half = d as f64 / 2.0;
            2.0 * std::f64::consts::PI.powf(half) / gamma(half)
        }
    }
}

/// Lanczos gamma, good to ~1e-13 for the small positive arguments used here.
fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_points_lie_in_shell() {
        for d in 1..=4 {
            let g = shell_grid(d, 5, 500, 42);
            for p in &g.points {
                let r: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((32.0..64.0).contains(&r), "d={d} r={r}");
                assert_eq!(p.len(), d);
            }
        }
    }

    #[test]
    fn constant_integrand_reproduces_shell_measure() {
        // int_{A_j} |z|^{-d} dz = sigma(S^{d-1}) ln 2 in every dimension
        for d in 1..=4 {
            let g = shell_grid(d, 7, 4000, 1);
            let est = g.weight * g.points.len() as f64;
            let want = sphere_surface_area(d) * std::f64::consts::LN_2;
            assert!(
                (est - want).abs() / want < 1e-12,
                "d={d}: {est} vs {want}"
            );
        }
    }

    #[test]
    fn offsets_deterministic_and_distinct() {
        assert_eq!(shell_offset(1, 3), shell_offset(1, 3));
        assert_ne!(shell_offset(1, 3), shell_offset(1, 4));
        assert_ne!(shell_offset(1, 3), shell_offset(2, 3));
    }

    #[test]
    fn gamma_spot_values() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
        assert!((sphere_surface_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-10);
    }
}
