//! Bundled rank-1 generating vectors for `n = 2^m` points.
//!
//! The entries were built for lattice *sequences*: reducing a vector modulo
//! a smaller power of two gives the embedded lattice with that many points,
//! which [`embedded`] exposes for desk-scale runs.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

const CATALOG_JSON: &str = include_str!("../data/catalog.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub d: usize,
    pub log2n: u32,
    pub z: Vec<i64>,
}

impl CatalogEntry {
    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::rank1(self.z.clone(), 1i64 << self.log2n)
    }
}

pub fn entries() -> &'static [CatalogEntry] {
    static ENTRIES: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    ENTRIES.get_or_init(|| serde_json::from_str(CATALOG_JSON).expect("bundled catalog parses"))
}

/// The entry stored for exactly `(d, log2 n)`.
pub fn lookup(d: usize, log2n: u32) -> Result<LatticeSpec> {
    entries()
        .iter()
        .find(|e| e.d == d && e.log2n == log2n)
        .ok_or_else(|| Error::Config(format!("no catalog entry for d = {d}, n = 2^{log2n}")))?
        .lattice()
}

/// The lattice with `2^log2n` points embedded in the smallest catalog entry
/// of dimension `d` with at least that many points.
pub fn embedded(d: usize, log2n: u32) -> Result<LatticeSpec> {
    let entry = entries()
        .iter()
        .filter(|e| e.d == d && e.log2n >= log2n)
        .min_by_key(|e| e.log2n)
        .ok_or_else(|| {
            Error::Config(format!("no catalog entry for d = {d} with n >= 2^{log2n}"))
        })?;
    let n = 1i64 << log2n;
    LatticeSpec::rank1(entry.z.iter().map(|z| z.rem_euclid(n)).collect(), n)
}
