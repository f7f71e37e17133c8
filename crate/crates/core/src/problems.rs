//! Benchmark initial conditions and potentials on `[0,1)^d`.
//!
//! * `g1`: Gaussian centred at `(3/4, 1/2, …, 1/2)`;
//! * `g2`: tensor-product hat with the same centre;
//! * `v1 = Π_j (1 − cos 2πx_j)`;
//! * `v2 = ½ Σ_j (2πx_j − π)²`.
//!
//! The initial conditions are separable, so their normalizing constants are
//! products of 1-D integrals. Neither is periodized.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    #[serde(rename = "g1")]
    GaussianG1,
    #[serde(rename = "g2")]
    HatG2,
    #[serde(rename = "v1")]
    SmoothV1,
    #[serde(rename = "v2")]
    HarmonicV2,
}

impl BenchmarkKind {
    pub fn is_initial(self) -> bool {
        matches!(self, BenchmarkKind::GaussianG1 | BenchmarkKind::HatG2)
    }

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::GaussianG1 => "g1",
            BenchmarkKind::HatG2 => "g2",
            BenchmarkKind::SmoothV1 => "v1",
            BenchmarkKind::HarmonicV2 => "v2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchmarkFunction {
    pub kind: BenchmarkKind,
    pub dim: usize,
    pub eps: f64,
    /// `c_1`/`c_2` for the initial conditions, `1` for potentials.
    pub norm_const: f64,
}

impl BenchmarkFunction {
    /// Build the function, computing (and caching) its normalizing constant.
    pub fn new(kind: BenchmarkKind, dim: usize, eps: f64) -> Result<Self> {
        if dim == 0 || !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!(
                "benchmark {} needs d > 0 and eps > 0",
                kind.name()
            )));
        }
        let mut f = BenchmarkFunction {
            kind,
            dim,
            eps,
            norm_const: 1.0,
        };
        if kind.is_initial() {
            f.norm_const = normalize(&f)?;
        }
        Ok(f)
    }

    pub fn g1(dim: usize, eps: f64) -> Result<Self> {
        Self::new(BenchmarkKind::GaussianG1, dim, eps)
    }

    pub fn g2(dim: usize, eps: f64) -> Result<Self> {
        Self::new(BenchmarkKind::HatG2, dim, eps)
    }

    pub fn v1(dim: usize) -> Self {
        Self::new(BenchmarkKind::SmoothV1, dim, 1.0).expect("valid potential")
    }

    pub fn v2(dim: usize) -> Self {
        Self::new(BenchmarkKind::HarmonicV2, dim, 1.0).expect("valid potential")
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match self.kind {
            BenchmarkKind::GaussianG1 => {
                let e: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(j, &xj)| {
                        let a = 2.0 * PI * xj - centre(j);
                        a * a
                    })
                    .sum();
                (2.0 / (PI * self.eps)).powf(self.dim as f64 / 4.0) * (-e / self.eps).exp()
                    / self.norm_const
            }
            BenchmarkKind::HatG2 => {
                let w = 2.0 / (PI * self.eps.sqrt());
                let p: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(j, &xj)| hat(w, 2.0 * PI * xj - centre(j)))
                    .product();
                (3.0 / (PI * self.eps.sqrt())).powf(self.dim as f64 / 2.0) * p / self.norm_const
            }
            BenchmarkKind::SmoothV1 => x.iter().map(|&xj| 1.0 - (2.0 * PI * xj).cos()).product(),
            BenchmarkKind::HarmonicV2 => {
                0.5 * x
                    .iter()
                    .map(|&xj| {
                        let a = 2.0 * PI * xj - PI;
                        a * a
                    })
                    .sum::<f64>()
            }
        }
    }

    /// Unnormalized 1-D factor of coordinate `j` (initial conditions only),
    /// so that `eval(x) = Π_j factor(j, x_j) / norm_const`.
    pub fn factor(&self, j: usize, t: f64) -> f64 {
        let a = 2.0 * PI * t - centre(j);
        match self.kind {
            BenchmarkKind::GaussianG1 => {
                (2.0 / (PI * self.eps)).powf(0.25) * (-a * a / self.eps).exp()
            }
            BenchmarkKind::HatG2 => {
                (3.0 / (PI * self.eps.sqrt())).sqrt() * hat(2.0 / (PI * self.eps.sqrt()), a)
            }
            _ => panic!("potentials have no separable factor"),
        }
    }

    /// Points in `[0,1]` where the factor of coordinate `j` is not smooth.
    fn breakpoints(&self, j: usize) -> Vec<f64> {
        match self.kind {
            BenchmarkKind::HatG2 => {
                let half_width = 1.0 / (2.0 * PI * 2.0 / (PI * self.eps.sqrt()));
                let c = centre(j) / (2.0 * PI);
                [c - half_width, c, c + half_width]
                    .into_iter()
                    .filter(|&t| t > 0.0 && t < 1.0)
                    .collect()
            }
            _ => vec![],
        }
    }
}

fn centre(j: usize) -> f64 {
    if j == 0 {
        1.5 * PI
    } else {
        PI
    }
}

fn hat(w: f64, a: f64) -> f64 {
    (1.0 - w * a.abs()).max(0.0)
}

type CacheKey = (BenchmarkKind, usize, u64);

/// Normalizing constant making the `L2([0,1)^d)` norm equal to one:
/// `c = √(Π_j ∫_0^1 factor_j(t)² dt)`.
pub fn normalize(f: &BenchmarkFunction) -> Result<f64> {
    if !f.kind.is_initial() {
        return Err(Error::Config(format!("{} is not an initial condition", f.kind.name())));
    }
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    let key = (f.kind, f.dim, f.eps.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&c) = cache.lock().unwrap().get(&key) {
        return Ok(c);
    }
    // Coordinates 2..d share one factor.
    let first = factor_integral(f, 0);
    let rest = if f.dim > 1 { factor_integral(f, 1) } else { 1.0 };
    let c2 = first * rest.powi(f.dim as i32 - 1);
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(Error::NonNormalizable);
    }
    let c = c2.sqrt();
    cache.lock().unwrap().insert(key, c);
    Ok(c)
}

fn factor_integral(f: &BenchmarkFunction, j: usize) -> f64 {
    let mut knots = vec![0.0];
    knots.extend(f.breakpoints(j));
    knots.push(1.0);
    knots
        .windows(2)
        .map(|w| {
            adaptive_simpson(&|t| {
                let v = f.factor(j, t);
                v * v
            }, w[0], w[1], 1e-15)
        })
        .sum()
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || (delta.abs() <= 15.0 * tol && (b - a) < 0.25) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
