//! Canonical rank-r integration lattices.
//!
//! A lattice is given by `r` integer generating vectors `z_1, …, z_r` in
//! `Z^d` and moduli `n_1, …, n_r`; its points are
//! `(Σ_i z_i k_i / n_i) mod 1` for `k ∈ Z_{n_1} ⊕ … ⊕ Z_{n_r}`. Rank-1 is
//! simply `r = 1`.
//!
//! Points are kept as exact integer numerators over the common denominator
//! `n_1` (in canonical form every `n_i` divides `n_1`, so `n_1` is the lcm).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice", into = "RawLattice")]
pub struct LatticeSpec {
    dim: usize,
    gens: Vec<Vec<i64>>,
    moduli: Vec<i64>,
}

/// On-disk shape: `{"d":…, "r":…, "Z":[[…]…], "n":[…]}` where `Z` lists the
/// `r` generating vectors, each of length `d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawLattice {
    d: usize,
    r: usize,
    #[serde(rename = "Z")]
    z: Vec<Vec<i64>>,
    n: Vec<i64>,
}

impl TryFrom<RawLattice> for LatticeSpec {
    type Error = Error;

    fn try_from(raw: RawLattice) -> Result<Self> {
        if raw.z.len() != raw.r {
            return Err(Error::MalformedLattice(format!(
                "r = {} but {} generating vectors given",
                raw.r,
                raw.z.len()
            )));
        }
        let spec = LatticeSpec::from_parts(raw.d, raw.z, raw.n)?;
        validate_canonical(spec)
    }
}

impl From<LatticeSpec> for RawLattice {
    fn from(spec: LatticeSpec) -> Self {
        RawLattice {
            d: spec.dim,
            r: spec.gens.len(),
            z: spec.gens,
            n: spec.moduli,
        }
    }
}

/// A lattice point with exact coordinates `numerators / denom`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePoint {
    pub numerators: Vec<i64>,
    pub denom: i64,
    pub index: Vec<usize>,
    pub flat_index: usize,
}

impl LatticePoint {
    pub fn coords(&self) -> Vec<f64> {
        self.numerators
            .iter()
            .map(|&p| p as f64 / self.denom as f64)
            .collect()
    }
}

impl LatticeSpec {
    /// Shape checks only; see [`validate_canonical`] for the lattice
    /// conditions.
    pub fn from_parts(dim: usize, gens: Vec<Vec<i64>>, moduli: Vec<i64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedLattice("dimension must be positive".into()));
        }
        if gens.is_empty() || gens.len() > dim {
            return Err(Error::MalformedLattice(format!(
                "rank {} must lie in 1..={dim}",
                gens.len()
            )));
        }
        if gens.len() != moduli.len() {
            return Err(Error::MalformedLattice(format!(
                "{} generating vectors but {} moduli",
                gens.len(),
                moduli.len()
            )));
        }
        if let Some(g) = gens.iter().find(|g| g.len() != dim) {
            return Err(Error::MalformedLattice(format!(
                "generating vector of length {} in dimension {dim}",
                g.len()
            )));
        }
        if moduli.iter().any(|&n| n < 1) {
            return Err(Error::MalformedLattice("moduli must be at least 1".into()));
        }
        Ok(LatticeSpec { dim, gens, moduli })
    }

    /// Build and validate a canonical rank-r lattice.
    pub fn new(gens: Vec<Vec<i64>>, moduli: Vec<i64>) -> Result<Self> {
        let dim = gens.first().map_or(0, Vec::len);
        validate_canonical(Self::from_parts(dim, gens, moduli)?)
    }

    /// Rank-1 lattice `Λ(z, n)`.
    pub fn rank1(z: Vec<i64>, n: i64) -> Result<Self> {
        Self::new(vec![z], vec![n])
    }

    /// Regular product grid with `n_j` points along axis `j`, written as a
    /// rank-d lattice with identity generators.
    ///
    /// The axes are reordered internally so that the moduli are
    /// non-increasing; the resizes must still satisfy the divisibility chain.
    pub fn grid(sizes: &[i64]) -> Result<Self> {
        let d = sizes.len();
        let mut axes: Vec<usize> = (0..d).collect();
        axes.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let gens = axes
            .iter()
            .map(|&j| (0..d).map(|i| i64::from(i == j)).collect())
            .collect();
        let moduli = axes.iter().map(|&j| sizes[j]).collect();
        Self::new(gens, moduli)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn gens(&self) -> &[Vec<i64>] {
        &self.gens
    }

    pub fn moduli(&self) -> &[i64] {
        &self.moduli
    }

    pub fn n_total(&self) -> usize {
        self.moduli.iter().map(|&n| n as usize).product()
    }

    /// Common denominator of all point coordinates (`n_1`, the lcm).
    pub fn denom(&self) -> i64 {
        self.moduli.iter().fold(1, |acc, &n| acc.lcm(&n))
    }

    /// Row-major strides of the `n_1 × … × n_r` index tensor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.rank()];
        for i in (0..self.rank().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.moduli[i + 1] as usize;
        }
        strides
    }

    /// `κ = Σ_i k_i Π_{j>i} n_j`.
    pub fn flatten(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(self.strides())
            .map(|(&k, s)| k * s)
            .sum()
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0usize; self.rank()];
        for i in (0..self.rank()).rev() {
            let n = self.moduli[i] as usize;
            index[i] = flat % n;
            flat /= n;
        }
        index
    }

    /// True iff `z_i · h ≡ 0 (mod n_i)` for every generator.
    pub fn in_dual(&self, h: &[i64]) -> bool {
        self.residue(h).iter().all(|&xi| xi == 0)
    }

    /// `ξ_i = (z_i · h) mod n_i`, as nonnegative residues.
    pub fn residue(&self, h: &[i64]) -> Vec<i64> {
        assert_eq!(h.len(), self.dim, "frequency has wrong dimension");
        self.gens
            .iter()
            .zip(&self.moduli)
            .map(|(z, &n)| dot_mod(z, h, n))
            .collect()
    }

    /// Flattened residue `χ`, the coefficient slot of frequency `h`.
    pub fn flat_residue(&self, h: &[i64]) -> usize {
        let mut chi = 0usize;
        for (z, &n) in self.gens.iter().zip(&self.moduli) {
            chi = chi * n as usize + dot_mod(z, h, n) as usize;
        }
        chi
    }

    /// Exact numerators of point `κ`, over [`denom`](Self::denom).
    pub fn point_numerators(&self, flat: usize, out: &mut [i64]) {
        let denom = self.denom() as i128;
        out.iter_mut().for_each(|x| *x = 0);
        let index = self.unflatten(flat);
        for ((z, &n), &k) in self.gens.iter().zip(&self.moduli).zip(&index) {
            let scale = denom / n as i128;
            for (acc, &zj) in out.iter_mut().zip(z) {
                let term = (zj as i128).rem_euclid(n as i128) * k as i128 % n as i128 * scale;
                *acc = ((*acc as i128 + term) % denom) as i64;
            }
        }
    }

    /// All points as a flat `n_total × d` table of numerators over `denom`,
    /// in lexicographic index order.
    pub fn point_table(&self, exec: Exec) -> Result<Vec<i64>> {
        self.check_overflow()?;
        let d = self.dim;
        let mut table = vec![0i64; self.n_total() * d];
        exec.for_each_chunk_mut(&mut table, d, |flat, row| self.point_numerators(flat, row));
        Ok(table)
    }

    pub fn enumerate_points(&self) -> Result<Vec<LatticePoint>> {
        self.check_overflow()?;
        let denom = self.denom();
        Ok((0..self.n_total())
            .map(|flat| {
                let mut numerators = vec![0; self.dim];
                self.point_numerators(flat, &mut numerators);
                LatticePoint {
                    numerators,
                    denom,
                    index: self.unflatten(flat),
                    flat_index: flat,
                }
            })
            .collect())
    }

    fn check_overflow(&self) -> Result<()> {
        let zmax = self
            .gens
            .iter()
            .flatten()
            .map(|z| z.unsigned_abs())
            .max()
            .unwrap_or(0)
            .max(1);
        (self.denom().unsigned_abs())
            .checked_mul(zmax)
            .filter(|&v| v <= i64::MAX as u64)
            .map(|_| ())
            .ok_or(Error::OverflowRisk)
    }

    /// Short content hash used to tie fields and result files to a lattice.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("lattice serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

fn dot_mod(z: &[i64], h: &[i64], n: i64) -> i64 {
    let acc: i128 = z.iter().zip(h).map(|(&a, &b)| a as i128 * b as i128).sum();
    acc.rem_euclid(n as i128) as i64
}

/// Check the canonical-form conditions and hand the spec back if they hold.
///
/// * `n_{i+1}` divides `n_i`;
/// * every component of `z_i` that is nonzero modulo `n_i` is coprime to `n_i`;
/// * the generators are linearly independent over the rationals;
/// * the point set has exactly `Π n_i` distinct points.
pub fn validate_canonical(spec: LatticeSpec) -> Result<LatticeSpec> {
    for i in 1..spec.moduli.len() {
        if spec.moduli[i - 1] % spec.moduli[i] != 0 {
            return Err(Error::NonDivisibleModuli {
                prev: i,
                next: i + 1,
                prev_modulus: spec.moduli[i - 1],
                next_modulus: spec.moduli[i],
            });
        }
    }
    for (column, (z, &n)) in spec.gens.iter().zip(&spec.moduli).enumerate() {
        for (coordinate, &value) in z.iter().enumerate() {
            if value.rem_euclid(n) != 0 && value.gcd(&n) != 1 {
                return Err(Error::NonCoprimeComponent {
                    column,
                    coordinate,
                    value,
                    modulus: n,
                });
            }
        }
    }
    if rational_rank(&spec.gens) < spec.gens.len() {
        return Err(Error::RankDeficientGenerators);
    }
    let expected = spec.n_total() as u64;
    let actual = point_count(&spec);
    if actual != expected {
        return Err(Error::PointCountMismatch { expected, actual });
    }
    Ok(spec)
}

/// Rank over Q of the given integer row vectors, by fraction-free
/// elimination in arbitrary precision.
fn rational_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev_pivot = BigInt::from(1);
    for col in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for i in rank + 1..m.len() {
            let factor = m[i][col].clone();
            for j in col..cols {
                let v = (&m[i][j] * &pivot - &m[rank][j] * &factor) / &prev_pivot;
                m[i][j] = v;
            }
        }
        prev_pivot = pivot.abs();
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Number of distinct points of `Λ(Z, n)`.
///
/// The point count equals the order of the subgroup of
/// `Z_{n_1} ⊕ … ⊕ Z_{n_r}` generated by the residues of the unit vectors,
/// i.e. the columns of `Z^T`. That order is `Π n_i / g_i` where the `g_i`
/// are the pivots of a triangular basis of `Z^T Z^d + diag(n) Z^r`.
fn point_count(spec: &LatticeSpec) -> u64 {
    let r = spec.rank();
    let n = &spec.moduli;
    // Columns of Z^T, row i reduced modulo n_i.
    let mut cols: Vec<Vec<i128>> = (0..spec.dim)
        .map(|j| {
            (0..r)
                .map(|i| (spec.gens[i][j] as i128).rem_euclid(n[i] as i128))
                .collect()
        })
        .collect();
    let mut count: u64 = 1;
    for row in 0..r {
        let modulus = n[row] as i128;
        // The column n_row e_row takes part in the gcd; it only touches this
        // row, so the other rows may stay reduced modulo their own n.
        let mut pivot: Vec<i128> = vec![0; r];
        pivot[row] = modulus;
        for col in cols.iter_mut() {
            if col[row] == 0 {
                continue;
            }
            let (g, a, b) = ext_gcd(pivot[row], col[row]);
            let (pa, ca) = (pivot[row] / g, col[row] / g);
            let mut new_pivot = vec![0; r];
            let mut new_col = vec![0; r];
            for i in row..r {
                let m = n[i] as i128;
                new_pivot[i] = (a * pivot[i] + b * col[i]).rem_euclid(m);
                new_col[i] = (ca * pivot[i] - pa * col[i]).rem_euclid(m);
            }
            new_pivot[row] = g;
            new_col[row] = 0;
            pivot = new_pivot;
            *col = new_col;
        }
        let g = pivot[row].abs();
        count *= (modulus / g) as u64;
    }
    count
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> LatticeSpec {
        LatticeSpec::rank1(vec![1, 34], 55).unwrap()
    }

    #[test]
    fn validates_examples() {
        assert!(LatticeSpec::rank1(vec![1, 34], 55).is_ok());
        assert!(LatticeSpec::new(vec![vec![1, 0], vec![0, 1]], vec![4, 4]).is_ok());
        assert!(LatticeSpec::rank1(vec![2, 34], 55).is_ok());
        match LatticeSpec::rank1(vec![5, 34], 55) {
            Err(Error::NonCoprimeComponent {
                column: 0,
                coordinate: 0,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_forms() {
        assert!(matches!(
            LatticeSpec::new(vec![vec![1, 0], vec![0, 1]], vec![2, 4]),
            Err(Error::NonDivisibleModuli { .. })
        ));
        assert!(matches!(
            LatticeSpec::new(vec![vec![1, 3], vec![2, 6]], vec![5, 5]),
            Err(Error::RankDeficientGenerators)
        ));
        // Independent over Q but the two generators hit the same points.
        assert!(matches!(
            LatticeSpec::new(vec![vec![1, 1], vec![1, 3]], vec![2, 2]),
            Err(Error::PointCountMismatch {
                expected: 4,
                actual: 2
            })
        ));
        assert!(matches!(
            LatticeSpec::new(vec![vec![1, 1]], vec![0]),
            Err(Error::MalformedLattice(_))
        ));
    }

    #[test]
    fn grid_orders_moduli() {
        let g = LatticeSpec::grid(&[2, 4]).unwrap();
        assert_eq!(g.moduli(), &[4, 2]);
        assert_eq!(g.n_total(), 8);
        assert!(LatticeSpec::grid(&[4, 6]).is_err());
    }

    #[test]
    fn enumerates_points() {
        let l = LatticeSpec::rank1(vec![1], 4).unwrap();
        let coords: Vec<f64> = l.enumerate_points().unwrap().iter().map(|p| p.coords()[0]).collect();
        assert_eq!(coords, vec![0.0, 0.25, 0.5, 0.75]);

        let p = &fig1().enumerate_points().unwrap()[1];
        assert_eq!(p.numerators, vec![1, 34]);
        assert_eq!(p.denom, 55);

        let grid = LatticeSpec::new(vec![vec![1, 0], vec![0, 1]], vec![2, 2]).unwrap();
        let pts: Vec<Vec<f64>> = grid.enumerate_points().unwrap().iter().map(|p| p.coords()).collect();
        assert_eq!(
            pts,
            vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 0.5]]
        );
    }

    #[test]
    fn dual_and_residue() {
        let l = fig1();
        assert!(l.in_dual(&[0, 0]));
        assert!(l.in_dual(&[55, 0]));
        assert!(!l.in_dual(&[1, 0]));
        assert!(l.in_dual(&[21, 1]));
        assert_eq!(l.residue(&[0, 0]), vec![0]);
        assert_eq!(l.residue(&[1, 0]), vec![1]);
        assert_eq!(l.residue(&[0, 2]), vec![13]);
        assert_eq!(l.residue(&[-1, 0]), vec![54]);
    }

    #[test]
    fn flat_index_round_trip() {
        let l = LatticeSpec::new(vec![vec![1, 0, 3], vec![0, 1, 1]], vec![8, 4]).unwrap();
        for flat in 0..l.n_total() {
            assert_eq!(l.flatten(&l.unflatten(flat)), flat);
        }
        assert_eq!(l.strides(), vec![4, 1]);
    }

    #[test]
    fn json_round_trip() {
        let l = fig1();
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(json, r#"{"d":2,"r":1,"Z":[[1,34]],"n":[55]}"#);
        let back: LatticeSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, l);
        assert!(serde_json::from_str::<LatticeSpec>(r#"{"d":2,"r":1,"Z":[[5,34]],"n":[55]}"#).is_err());
    }

    #[test]
    fn large_generators_stay_exact() {
        let z = vec![1, 12386359, 15699201, 6807287];
        let l = LatticeSpec::rank1(z.clone(), 1 << 25).unwrap();
        let mut out = vec![0; 4];
        l.point_numerators(12345, &mut out);
        for (o, zj) in out.iter().zip(&z) {
            assert_eq!(*o, (zj * 12345).rem_euclid(1 << 25));
        }
    }
}
