//! Minimal-ℓ2 anti-aliasing frequency sets.
//!
//! For every residue `ξ = Z^T h mod n` the set holds one frequency `h_ξ` of
//! smallest Euclidean norm, stored at the flattened residue
//! `χ = Σ_i ξ_i Π_{j>i} n_j`. With this ordering the coefficient vector is
//! exactly the r-dimensional DFT of the sample tensor.
//!
//! Candidates are visited shell by shell in nondecreasing `‖h‖²`, ties in
//! lexicographic order, and the first vector seen in a residue class wins.
//! That is the same as keeping, per class, the minimum of the key
//! `(‖h‖², h)`, which is what [`AntiAliasSet::build`] does while walking
//! balls of growing radius.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct AntiAliasSet {
    spec: LatticeSpec,
    /// `n_total × d` frequencies in flattened-residue order.
    table: Vec<i32>,
    norms: Vec<u64>,
    /// Largest squared radius that was searched exhaustively.
    searched_norm2: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BuildOptions {
    /// Hard cap on the search radius; `None` uses `4 n^{1/d} + 16`.
    pub radius_cap: Option<f64>,
}

impl AntiAliasSet {
    pub fn build(spec: &LatticeSpec) -> Result<Self> {
        Self::build_with(spec, BuildOptions::default())
    }

    pub fn build_with(spec: &LatticeSpec, opts: BuildOptions) -> Result<Self> {
        let d = spec.dim();
        let total = spec.n_total();
        let cap = opts
            .radius_cap
            .unwrap_or(4.0 * (total as f64).powf(1.0 / d as f64) + 16.0);

        let mut best: Vec<Option<(u64, Vec<i32>)>> = vec![None; total];
        let mut filled = 0usize;
        let mut radius = initial_radius(d, total).min(cap);
        let mut searched: Option<u64> = None;

        loop {
            let r2 = (radius * radius).floor() as u64;
            let walker = ShellWalker::new(spec, searched, r2);
            walker.walk(|h, norm2, chi| {
                let better = match &best[chi] {
                    None => true,
                    Some((bn, bh)) => (norm2, h) < (*bn, bh.as_slice()),
                };
                if better {
                    if best[chi].is_none() {
                        filled += 1;
                    }
                    best[chi] = Some((norm2, h.to_vec()));
                }
            });
            searched = Some(r2);
            if filled == total {
                break;
            }
            if radius >= cap {
                return Err(Error::RadiusExhausted {
                    cap,
                    filled,
                    total,
                });
            }
            radius = (2.0 * radius).min(cap);
        }

        let mut table = Vec::with_capacity(total * d);
        let mut norms = Vec::with_capacity(total);
        for (norm2, h) in best.into_iter().map(|b| b.expect("all residues filled")) {
            table.extend_from_slice(&h);
            norms.push(norm2);
        }
        Ok(AntiAliasSet {
            spec: spec.clone(),
            table,
            norms,
            searched_norm2: searched.unwrap_or(0),
        })
    }

    /// Adopt a stored table after checking it is a full anti-aliasing set in
    /// flattened-residue order. Minimality is not re-verified here.
    pub fn from_table(spec: &LatticeSpec, table: Vec<Vec<i64>>) -> Result<Self> {
        let d = spec.dim();
        let total = spec.n_total();
        if table.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                found: table.len(),
            });
        }
        let mut flat = Vec::with_capacity(total * d);
        let mut norms = Vec::with_capacity(total);
        for (chi, h) in table.iter().enumerate() {
            if h.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    found: h.len(),
                });
            }
            if spec.flat_residue(h) != chi {
                return Err(Error::MalformedLattice(format!(
                    "frequency {h:?} stored at slot {chi} has residue {}",
                    spec.flat_residue(h)
                )));
            }
            for &x in h {
                flat.push(i32::try_from(x).map_err(|_| Error::OverflowRisk)?);
            }
            norms.push(h.iter().map(|&x| (x * x) as u64).sum());
        }
        let searched_norm2 = norms.iter().copied().max().unwrap_or(0);
        Ok(AntiAliasSet {
            spec: spec.clone(),
            table: flat,
            norms,
            searched_norm2,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `h^{(χ)}`.
    pub fn frequency(&self, chi: usize) -> &[i32] {
        let d = self.dim();
        &self.table[chi * d..(chi + 1) * d]
    }

    pub fn frequency_i64(&self, chi: usize) -> Vec<i64> {
        self.frequency(chi).iter().map(|&x| x as i64).collect()
    }

    /// `‖h^{(χ)}‖²`, exact.
    pub fn norm2(&self, chi: usize) -> u64 {
        self.norms[chi]
    }

    pub fn norms(&self) -> &[u64] {
        &self.norms
    }

    pub fn max_norm2(&self) -> u64 {
        self.norms.iter().copied().max().unwrap_or(0)
    }

    /// Largest `‖h‖_∞` over the set.
    pub fn max_abs(&self) -> i64 {
        self.table.iter().map(|&x| (x as i64).abs()).max().unwrap_or(0)
    }

    pub fn searched_radius(&self) -> f64 {
        (self.searched_norm2 as f64).sqrt()
    }

    /// Slot of `h` if `h` itself belongs to the set.
    pub fn position(&self, h: &[i64]) -> Option<usize> {
        let chi = self.spec.flat_residue(h);
        self.frequency(chi)
            .iter()
            .zip(h)
            .all(|(&a, &b)| a as i64 == b)
            .then_some(chi)
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.len()).map(|chi| self.frequency_i64(chi)).collect()
    }
}

/// Brute-force check that every stored frequency has the right residue and
/// minimal norm among all `h` with `‖h‖_∞ ≤ search_bound` in its class.
pub fn verify_minimal(set: &AntiAliasSet, search_bound: i64) -> bool {
    let spec = set.spec();
    let d = spec.dim();
    if set.len() != spec.n_total() {
        return false;
    }
    for chi in 0..set.len() {
        let h = set.frequency_i64(chi);
        if spec.flat_residue(&h) != chi {
            return false;
        }
        if h.iter().map(|x| (x * x) as u64).sum::<u64>() != set.norm2(chi) {
            return false;
        }
    }
    let mut h = vec![-search_bound; d];
    loop {
        let chi = spec.flat_residue(&h);
        let norm2: u64 = h.iter().map(|x| (x * x) as u64).sum();
        if norm2 < set.norm2(chi) {
            return false;
        }
        // Odometer over the box.
        let mut j = d;
        loop {
            if j == 0 {
                return true;
            }
            j -= 1;
            if h[j] < search_bound {
                h[j] += 1;
                break;
            }
            h[j] = -search_bound;
        }
    }
}

/// Radius of a ball holding about `2 n` integer points.
fn initial_radius(d: usize, total: usize) -> f64 {
    let unit_ball = std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_plus_one(d);
    ((2.0 * total as f64) / unit_ball).powf(1.0 / d as f64).max(1.0)
}

/// `Γ(d/2 + 1)`.
fn gamma_half_plus_one(d: usize) -> f64 {
    if d.is_multiple_of(2) {
        (1..=d / 2).map(|k| k as f64).product()
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!) with k = (d+1)/2.
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        for _ in 0..=(d / 2) {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Walks every integer vector with `lo < ‖h‖² ≤ hi` in lexicographic order,
/// tracking the residues incrementally.
struct ShellWalker<'a> {
    spec: &'a LatticeSpec,
    lo: Option<u64>,
    hi: u64,
    zs: Vec<Vec<i64>>,
    strides: Vec<usize>,
}

impl<'a> ShellWalker<'a> {
    fn new(spec: &'a LatticeSpec, lo: Option<u64>, hi: u64) -> Self {
        let zs = spec
            .gens()
            .iter()
            .zip(spec.moduli())
            .map(|(z, &n)| z.iter().map(|&x| x.rem_euclid(n)).collect())
            .collect();
        ShellWalker {
            spec,
            lo,
            hi,
            zs,
            strides: spec.strides(),
        }
    }

    fn walk(&self, mut visit: impl FnMut(&[i32], u64, usize)) {
        let d = self.spec.dim();
        let r = self.spec.rank();
        let mut h = vec![0i32; d];
        let mut partial = vec![0i64; r];
        self.recurse(0, 0, &mut h, &mut partial, &mut visit);
    }

    fn recurse(
        &self,
        j: usize,
        norm2: u64,
        h: &mut Vec<i32>,
        partial: &mut Vec<i64>,
        visit: &mut impl FnMut(&[i32], u64, usize),
    ) {
        let d = h.len();
        if j == d {
            if self.lo.is_some_and(|lo| norm2 <= lo) {
                return;
            }
            let moduli = self.spec.moduli();
            let chi = partial
                .iter()
                .zip(moduli)
                .zip(&self.strides)
                .map(|((&p, &n), &s)| p.rem_euclid(n) as usize * s)
                .sum();
            visit(h, norm2, chi);
            return;
        }
        let budget = self.hi - norm2;
        let bound = (budget as f64).sqrt().floor() as i64;
        // Guard against rounding in the square root.
        let bound = (bound - 1..=bound + 1)
            .rev()
            .find(|b| b >= &0 && (b * b) as u64 <= budget)
            .unwrap_or(0);
        for x in -bound..=bound {
            h[j] = x as i32;
            for (i, p) in partial.iter_mut().enumerate() {
                *p += self.zs[i][j] * x;
            }
            self.recurse(j + 1, norm2 + (x * x) as u64, h, partial, visit);
            for (i, p) in partial.iter_mut().enumerate() {
                *p -= self.zs[i][j] * x;
            }
        }
        h[j] = 0;
    }
}

/// A lattice spec together with an optional stored frequency set:
/// `{"d":…, "r":…, "Z":[…], "n":[…], "aaset":[[h_1,…,h_d], …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeDocument {
    #[serde(flatten)]
    pub lattice: LatticeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aaset: Option<Vec<Vec<i64>>>,
}

impl LatticeDocument {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn with_aaset(set: &AntiAliasSet) -> Self {
        LatticeDocument {
            lattice: set.spec().clone(),
            aaset: Some(set.to_rows()),
        }
    }

    /// The stored set, or a freshly built one when none is stored.
    pub fn aaset(&self) -> Result<AntiAliasSet> {
        match &self.aaset {
            Some(rows) => AntiAliasSet::from_table(&self.lattice, rows.clone()),
            None => AntiAliasSet::build(&self.lattice),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> LatticeSpec {
        LatticeSpec::rank1(vec![1, 34], 55).unwrap()
    }

    #[test]
    fn fig1_set() {
        let set = AntiAliasSet::build(&fig1()).unwrap();
        assert_eq!(set.len(), 55);
        assert_eq!(set.frequency(0), &[0, 0]);
        assert_eq!(set.frequency(1), &[1, 0]);
        assert!(verify_minimal(&set, 8));
    }

    #[test]
    fn grid_set_is_centered_rectangle() {
        let spec = LatticeSpec::new(vec![vec![1, 0], vec![0, 1]], vec![4, 4]).unwrap();
        let set = AntiAliasSet::build(&spec).unwrap();
        let mut rows = set.to_rows();
        rows.sort();
        let mut expect = vec![];
        for a in -2..=1 {
            for b in -2..=1 {
                expect.push(vec![a, b]);
            }
        }
        assert_eq!(rows, expect);
        assert!(verify_minimal(&set, 4));
    }

    #[test]
    fn tiny_grid() {
        let spec = LatticeSpec::new(vec![vec![1, 0], vec![0, 1]], vec![2, 2]).unwrap();
        let set = AntiAliasSet::build(&spec).unwrap();
        assert_eq!(set.len(), 4);
        assert!(verify_minimal(&set, 3));
    }

    #[test]
    fn detects_non_minimal_entry() {
        let spec = fig1();
        let set = AntiAliasSet::build(&spec).unwrap();
        let mut rows = set.to_rows();
        // (1,0) + (21,1) lies in the same class but is longer.
        rows[1] = vec![22, 1];
        let tampered = AntiAliasSet::from_table(&spec, rows).unwrap();
        assert!(!verify_minimal(&tampered, 8));
    }

    #[test]
    fn rejects_misplaced_rows() {
        let spec = fig1();
        let mut rows = AntiAliasSet::build(&spec).unwrap().to_rows();
        rows.swap(1, 2);
        assert!(AntiAliasSet::from_table(&spec, rows).is_err());
    }

    #[test]
    fn radius_cap_reports_exhaustion() {
        let spec = LatticeSpec::rank1(vec![1, 3], 64).unwrap();
        let err = AntiAliasSet::build_with(
            &spec,
            BuildOptions {
                radius_cap: Some(2.0),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::RadiusExhausted { total: 64, .. }));
    }

    #[test]
    fn document_round_trip() {
        let set = AntiAliasSet::build(&fig1()).unwrap();
        let doc = LatticeDocument::with_aaset(&set);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.starts_with(r#"{"d":2,"r":1,"Z":[[1,34]],"n":[55],"aaset":[[0,0],[1,0]"#));
        let back: LatticeDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.aaset().unwrap().to_rows(), set.to_rows());
        let bare: LatticeDocument = serde_json::from_str(r#"{"d":2,"r":1,"Z":[[1,34]],"n":[55]}"#).unwrap();
        assert!(bare.aaset.is_none());
        assert_eq!(bare.aaset().unwrap().to_rows(), set.to_rows());
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_half_plus_one(1) - 0.886_226_925_452_758).abs() < 1e-12);
        assert_eq!(gamma_half_plus_one(2), 1.0);
        assert!((gamma_half_plus_one(3) - 1.329_340_388_179_137).abs() < 1e-12);
        assert_eq!(gamma_half_plus_one(4), 2.0);
    }
}
