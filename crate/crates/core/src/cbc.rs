//! Component-by-component construction of rank-1 generating vectors.
//!
//! The criterion is the squared worst-case integration error in the
//! unweighted Korobov space with `r(h) = Π max(|h_j|, 1)`:
//!
//! ```text
//! P(z) = Σ_{0 ≠ h ∈ Λ⊥} Π_j max(h_j², 1)^{-1}
//!      = -1 + (1/n) Σ_k Π_j (1 + 2π² B₂({k z_j / n}))
//! ```
//!
//! with `B₂(x) = x² − x + 1/6`. Only power-of-two `n` is supported, so the
//! admissible components are the odd residues.

use std::f64::consts::PI;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbcCriterion {
    pub alpha: f64,
    pub n: u64,
    pub d_max: usize,
}

impl CbcCriterion {
    pub fn new(n: u64, d_max: usize) -> Self {
        CbcCriterion {
            alpha: 1.0,
            n,
            d_max,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alpha != 1.0 {
            return Err(Error::Config(format!(
                "only smoothness alpha = 1 is supported, got {}",
                self.alpha
            )));
        }
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::Config(format!(
                "n = {} must be a power of two, at least 2",
                self.n
            )));
        }
        if self.d_max == 0 {
            return Err(Error::Config("d_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbcResult {
    pub z: Vec<i64>,
    /// `wce_squared` of each prefix `(z_1, …, z_s)`.
    pub criterion: Vec<f64>,
}

impl CbcResult {
    pub fn lattice(&self, n: u64) -> Result<LatticeSpec> {
        LatticeSpec::rank1(self.z.clone(), n as i64)
    }
}

/// `2π² B₂(m / n)` for `m = 0, …, n−1`.
///
/// Filled for `m ≤ n/2` and mirrored, so the table is exactly symmetric and
/// candidates `c` and `n − c` score identically.
fn kernel_table(n: u64) -> Vec<f64> {
    let n = n as usize;
    let mut table = vec![0.0; n];
    for m in 0..=n / 2 {
        let x = m as f64 / n as f64;
        let v = 2.0 * PI * PI * (x * x - x + 1.0 / 6.0);
        table[m] = v;
        table[(n - m) % n] = v;
    }
    table
}

/// Squared worst-case error `P(z)` for smoothness 1.
pub fn wce_squared(z: &[i64], n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let ni = n as i64;
    if let Some(&bad) = z.iter().find(|&&zj| zj.gcd(&ni) != 1) {
        return Err(Error::NonCoprime {
            value: bad,
            modulus: ni,
        });
    }
    let table = kernel_table(n);
    let residues: Vec<u64> = z.iter().map(|&zj| zj.rem_euclid(ni) as u64).collect();
    let sum: f64 = (0..n)
        .map(|k| {
            residues
                .iter()
                .fold(1.0, |acc, &zj| acc * (1.0 + table[(k * zj % n) as usize]))
        })
        .sum();
    Ok(sum / n as f64 - 1.0)
}

/// Greedy construction: `z_1 = 1`, then each further component is the odd
/// residue minimizing `P` of the extended prefix, ties to the smallest.
pub fn cbc_construct(criterion: &CbcCriterion, exec: Exec) -> Result<CbcResult> {
    criterion.validate()?;
    let n = criterion.n;
    let table = kernel_table(n);
    // Running product Π_j (1 + 2π² B₂({k z_j / n})) per point k.
    let mut prod: Vec<f64> = (0..n).map(|k| 1.0 + table[k as usize]).collect();
    let mut z = vec![1i64];
    let mut values = vec![prod.iter().sum::<f64>() / n as f64 - 1.0];

    let candidates: Vec<u64> = (1..n).step_by(2).collect();
    for _ in 1..criterion.d_max {
        let scores = exec.map_collect(candidates.len(), |c| {
            let c = candidates[c];
            prod.iter()
                .enumerate()
                .map(|(k, p)| p * (1.0 + table[(k as u64 * c % n) as usize]))
                .sum::<f64>()
        });
        let (best, score) = scores
            .iter()
            .enumerate()
            .fold((0usize, f64::INFINITY), |(bi, bs), (i, &s)| {
                if s < bs {
                    (i, s)
                } else {
                    (bi, bs)
                }
            });
        let c = candidates[best];
        exec.for_each_mut(&mut prod, |k, p| {
            *p *= 1.0 + table[(k as u64 * c % n) as usize]
        });
        z.push(c as i64);
        values.push(score / n as f64 - 1.0);
    }
    Ok(CbcResult {
        z,
        criterion: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let v = wce_squared(&[1], 2).unwrap();
        assert!((v - PI * PI / 12.0).abs() < 1e-14);
        for n in [3u64, 8, 55, 1024] {
            let v = wce_squared(&[1], n).unwrap();
            let expect = PI * PI / (3.0 * (n * n) as f64);
            assert!((v - expect).abs() < 1e-13 * expect.max(1.0), "n = {n}");
        }
        let v = wce_squared(&[1, 7, 3], 1).unwrap();
        let expect = (1.0 + PI * PI / 3.0).powi(3) - 1.0;
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_coprime() {
        assert!(matches!(
            wce_squared(&[1, 4], 16),
            Err(Error::NonCoprime { value: 4, .. })
        ));
        assert!(cbc_construct(&CbcCriterion::new(12, 2), Exec::Sequential).is_err());
        let mut c = CbcCriterion::new(16, 2);
        c.alpha = 2.0;
        assert!(cbc_construct(&c, Exec::Sequential).is_err());
    }

    #[test]
    fn first_component_fixed() {
        let r = cbc_construct(&CbcCriterion::new(64, 1), Exec::Sequential).unwrap();
        assert_eq!(r.z, vec![1]);
    }

    #[test]
    fn exhaustive_second_component() {
        let n = 16;
        let r = cbc_construct(&CbcCriterion::new(n, 2), Exec::Sequential).unwrap();
        let (best, min) = (1..n as i64)
            .step_by(2)
            .map(|c| (c, wce_squared(&[1, c], n).unwrap()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert_eq!(r.z[1], best);
        assert_eq!(r.criterion[1], min);
    }

    #[test]
    fn policies_agree() {
        let c = CbcCriterion::new(256, 4);
        let a = cbc_construct(&c, Exec::Sequential).unwrap();
        let b = cbc_construct(&c, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.z.iter().all(|z| z % 2 == 1));
    }
}
