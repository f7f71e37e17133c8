//! Slow reference implementations used by the integration tests. None of
//! them touch the FFT path, the frequency search or the CBC kernel table.

#![allow(dead_code)]

use std::f64::consts::PI;

use lattice_tdse::{Complex64, LatticeSpec};

/// Exact numerators of every lattice point over `n_1`, enumerated straight
/// from the generators with `k_1` varying slowest.
pub fn points(spec: &LatticeSpec) -> (Vec<Vec<i64>>, i64) {
    let moduli = spec.moduli();
    let denom = moduli[0];
    let total: i64 = moduli.iter().product();
    let mut out = Vec::with_capacity(total as usize);
    for flat in 0..total {
        let mut rest = flat;
        let mut k = vec![0i64; moduli.len()];
        for i in (0..moduli.len()).rev() {
            k[i] = rest % moduli[i];
            rest /= moduli[i];
        }
        let p = (0..spec.dim())
            .map(|j| {
                let s: i128 = spec
                    .gens()
                    .iter()
                    .zip(&k)
                    .zip(moduli)
                    .map(|((g, &ki), &ni)| g[j] as i128 * ki as i128 * (denom / ni) as i128)
                    .sum();
                s.rem_euclid(denom as i128) as i64
            })
            .collect();
        out.push(p);
    }
    (out, denom)
}

/// `exp(sign · 2πi h·p)` with `h·p` reduced exactly.
pub fn character(h: &[i64], p: &[i64], denom: i64, sign: f64) -> Complex64 {
    let dot: i128 = h.iter().zip(p).map(|(&a, &b)| a as i128 * b as i128).sum();
    let r = dot.rem_euclid(denom as i128) as f64 / denom as f64;
    Complex64::from_polar(1.0, sign * 2.0 * PI * r)
}

/// `(1/n) Σ_p u(p) exp(−2πi h·p)` for each frequency.
pub fn naive_analyze(spec: &LatticeSpec, freqs: &[Vec<i64>], values: &[Complex64]) -> Vec<Complex64> {
    let (pts, denom) = points(spec);
    let n = pts.len() as f64;
    freqs
        .iter()
        .map(|h| {
            pts.iter()
                .zip(values)
                .map(|(p, v)| v * character(h, p, denom, -1.0))
                .sum::<Complex64>()
                / n
        })
        .collect()
}

/// Dense row-major square complex matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn diag(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.a[i * d.len() + i] = *v;
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.at(i, k);
                for j in 0..n {
                    out.a[i * n + j] += x * o.at(k, j);
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Dense {
        Dense {
            n: self.n,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix exponential by scaling and squaring around a Taylor series.
    pub fn expm(&self) -> Dense {
        let mut s = 0;
        while self.norm1() / f64::powi(2.0, s) > 0.25 {
            s += 1;
        }
        let x = self.scale(Complex64::new(f64::powi(2.0, -s), 0.0));
        let mut term = Dense::identity(self.n);
        let mut sum = Dense::identity(self.n);
        for k in 1..=24 {
            term = term.mul(&x).scale(Complex64::new(1.0 / k as f64, 0.0));
            for (a, b) in sum.a.iter_mut().zip(&term.a) {
                *a += b;
            }
        }
        for _ in 0..s {
            sum = sum.mul(&sum);
        }
        sum
    }
}

/// `Σ_{k∈Z} 1 / max((r + kn)², 1)`.
fn last_coordinate_sum(r: i64, n: i64) -> f64 {
    let r = r.rem_euclid(n);
    if r == 0 {
        1.0 + PI * PI / (3.0 * (n * n) as f64)
    } else {
        let s = (PI * r as f64 / n as f64).sin();
        PI * PI / ((n * n) as f64 * s * s)
    }
}

fn inverse_mod(a: i64, n: i64) -> i64 {
    (1..n).find(|x| (a * x).rem_euclid(n) == 1 % n).unwrap_or(0)
}

/// `Σ_{0 ≠ h ∈ Λ⊥, |h_j| ≤ bound for j < d} Π_j max(h_j², 1)^{-1}`, with the
/// last coordinate summed to infinity in closed form.
pub fn truncated_dual_sum(z: &[i64], n: i64, bound: i64) -> f64 {
    let d = z.len();
    let inv = inverse_mod(z[d - 1].rem_euclid(n), n);
    let mut total = 0.0;
    let mut h = vec![-bound; d - 1];
    loop {
        let w: f64 = h.iter().map(|&x| 1.0 / (x * x).max(1) as f64).product();
        let s: i64 = h.iter().zip(z).map(|(&a, &b)| a * b).sum();
        total += w * last_coordinate_sum(-s.rem_euclid(n) * inv, n);
        let mut j = d - 1;
        loop {
            if j == 0 {
                return total - 1.0;
            }
            j -= 1;
            if h[j] < bound {
                h[j] += 1;
                break;
            }
            h[j] = -bound;
        }
    }
}

/// Richardson extrapolation of [`truncated_dual_sum`] over `H, 2H, 4H, 8H`,
/// removing the `1/H`, `1/H²` and `1/H³` terms of the truncation error.
pub fn dual_sum(z: &[i64], n: i64, base_bound: i64) -> f64 {
    let mut table: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|k| truncated_dual_sum(z, n, k * base_bound))
        .collect();
    for order in 1..table.len() {
        let f = f64::powi(2.0, order as i32);
        table = table.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    table[0]
}
