//! Sample/coefficient fields and the FFT bijection between them.
//!
//! With the frequency set stored in flattened-residue order, the lattice rule
//! coefficient `û_a(h^{(χ)}) = (1/n) Σ_κ u(p^{(κ)}) e^{−2πi h^{(χ)}·p^{(κ)}}`
//! is the unnormalized forward DFT of the `n_1 × … × n_r` sample tensor at
//! multi-index `ξ`, divided by `n`. Rank-1 lattices therefore need a single
//! 1-D FFT of length `n`; rank-r lattices one FFT per tensor axis.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::antialias::AntiAliasSet;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeSpec;

/// r-dimensional FFT over a row-major `n_1 × … × n_r` tensor.
pub struct TensorFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for TensorFft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorFft").field("shape", &self.shape).finish()
    }
}

impl TensorFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        TensorFft {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized `x_ξ ← Σ_k x_k e^{−2πi Σ k_i ξ_i / n_i}`.
    pub fn forward(&self, data: &mut [Complex64], exec: Exec) {
        self.run(&self.forward, data, exec);
    }

    /// Unnormalized `x_k ← Σ_ξ x_ξ e^{+2πi Σ k_i ξ_i / n_i}`.
    pub fn inverse(&self, data: &mut [Complex64], exec: Exec) {
        self.run(&self.inverse, data, exec);
    }

    fn run(&self, plans: &[Arc<dyn Fft<f64>>], data: &mut [Complex64], exec: Exec) {
        assert_eq!(data.len(), self.len());
        let total = self.len();
        let mut stride = total;
        for (axis, plan) in plans.iter().enumerate() {
            let len = self.shape[axis];
            stride /= len;
            if len == 1 {
                continue;
            }
            if stride == 1 {
                // Contiguous lines.
                if self.shape.len() == 1 {
                    plan.process(data);
                } else {
                    exec.for_each_chunk_mut(data, len, |_, line| plan.process(line));
                }
                continue;
            }
            // Each block of `len * stride` elements holds `stride` lines with
            // step `stride`; transpose into scratch, transform, transpose back.
            let block = len * stride;
            exec.for_each_chunk_mut(data, block, |_, chunk| {
                let mut lines = vec![Complex64::new(0.0, 0.0); block];
                for k in 0..len {
                    for s in 0..stride {
                        lines[s * len + k] = chunk[k * stride + s];
                    }
                }
                plan.process(&mut lines);
                for k in 0..len {
                    for s in 0..stride {
                        chunk[k * stride + s] = lines[s * len + k];
                    }
                }
            });
        }
    }
}

/// Everything fixed by the choice of lattice and frequency set: exact point
/// numerators, the FFT plans and the execution policy.
#[derive(Debug)]
pub struct Discretization {
    spec: LatticeSpec,
    aaset: AntiAliasSet,
    points: Vec<i64>,
    denom: i64,
    fft: TensorFft,
    exec: Exec,
}

impl Discretization {
    pub fn new(aaset: AntiAliasSet, exec: Exec) -> Result<Arc<Self>> {
        let spec = aaset.spec().clone();
        if aaset.len() != spec.n_total() {
            return Err(Error::LengthMismatch {
                expected: spec.n_total(),
                found: aaset.len(),
            });
        }
        let points = spec.point_table(exec)?;
        let shape: Vec<usize> = spec.moduli().iter().map(|&n| n as usize).collect();
        Ok(Arc::new(Discretization {
            denom: spec.denom(),
            fft: TensorFft::new(&shape),
            spec,
            aaset,
            points,
            exec,
        }))
    }

    /// Build the frequency set and the discretization in one go.
    pub fn from_spec(spec: &LatticeSpec, exec: Exec) -> Result<Arc<Self>> {
        Self::new(AntiAliasSet::build(spec)?, exec)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn aaset(&self) -> &AntiAliasSet {
        &self.aaset
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn len(&self) -> usize {
        self.aaset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn fft(&self) -> &TensorFft {
        &self.fft
    }

    /// Exact numerators of point `κ` over [`denom`](Self::denom).
    pub fn point_numerators(&self, kappa: usize) -> &[i64] {
        let d = self.dim();
        &self.points[kappa * d..(kappa + 1) * d]
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn point(&self, kappa: usize) -> Vec<f64> {
        self.point_numerators(kappa)
            .iter()
            .map(|&p| p as f64 / self.denom as f64)
            .collect()
    }

    /// `exp(2πi h·p^{(κ)})` with `h·p` reduced exactly modulo 1.
    pub fn character(&self, h: &[i64], kappa: usize) -> Complex64 {
        let m: i128 = h
            .iter()
            .zip(self.point_numerators(kappa))
            .map(|(&a, &b)| a as i128 * b as i128)
            .sum();
        let frac = m.rem_euclid(self.denom as i128) as f64 / self.denom as f64;
        Complex64::from_polar(1.0, 2.0 * PI * frac)
    }

    /// Tabulate `f` on all lattice points.
    pub fn sample<F>(self: &Arc<Self>, f: F) -> SampleField
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let mut values = vec![Complex64::new(0.0, 0.0); self.len()];
        self.exec.for_each_mut(&mut values, |kappa, v| *v = f(&self.point(kappa)));
        SampleField {
            values,
            disc: Arc::clone(self),
        }
    }

    pub fn samples_from(self: &Arc<Self>, values: Vec<Complex64>) -> Result<SampleField> {
        self.check_len(values.len())?;
        Ok(SampleField {
            values,
            disc: Arc::clone(self),
        })
    }

    pub fn coefficients_from(self: &Arc<Self>, coeffs: Vec<Complex64>) -> Result<CoefficientField> {
        self.check_len(coeffs.len())?;
        Ok(CoefficientField {
            coeffs,
            disc: Arc::clone(self),
        })
    }

    pub fn zero_coefficients(self: &Arc<Self>) -> CoefficientField {
        CoefficientField {
            coeffs: vec![Complex64::new(0.0, 0.0); self.len()],
            disc: Arc::clone(self),
        }
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found,
            });
        }
        Ok(())
    }

    fn same(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || (a.spec == b.spec && a.aaset.to_rows() == b.aaset.to_rows())
    }
}

/// Function values on the lattice, in lexicographic point order.
#[derive(Clone, Debug)]
pub struct SampleField {
    pub values: Vec<Complex64>,
    disc: Arc<Discretization>,
}

/// Lattice-rule Fourier coefficients, in flattened-residue order.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub coeffs: Vec<Complex64>,
    disc: Arc<Discretization>,
}

impl SampleField {
    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete `L2` norm `√((1/n) Σ |u_κ|²)`.
    pub fn rms(&self) -> f64 {
        let n = self.len();
        let v = &self.values;
        (self.disc.exec.sum_f64(n, |k| v[k].norm_sqr()) / n as f64).sqrt()
    }
}

impl CoefficientField {
    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn aaset(&self) -> &AntiAliasSet {
        &self.disc.aaset
    }

    /// `√(Σ_χ |û_χ|²)`, the `L2` norm of the trigonometric polynomial.
    pub fn l2_norm(&self) -> f64 {
        let c = &self.coeffs;
        self.disc.exec.sum_f64(c.len(), |k| c[k].norm_sqr()).sqrt()
    }

    /// `‖self − other‖_{L2}`.
    pub fn l2_distance(&self, other: &CoefficientField) -> Result<f64> {
        if !Discretization::same(&self.disc, &other.disc) {
            return Err(Error::SpecMismatch);
        }
        let (a, b) = (&self.coeffs, &other.coeffs);
        Ok(self
            .disc
            .exec
            .sum_f64(a.len(), |k| (a[k] - b[k]).norm_sqr())
            .sqrt())
    }

    /// Indicator coefficient at slot `χ`.
    pub fn unit(disc: &Arc<Discretization>, chi: usize) -> Self {
        let mut c = disc.zero_coefficients();
        c.coeffs[chi] = Complex64::new(1.0, 0.0);
        c
    }
}

/// Lattice-rule coefficients of `samples`: `(1/n) ×` forward DFT.
pub fn analyze(samples: &SampleField) -> CoefficientField {
    let disc = &samples.disc;
    let mut coeffs = samples.values.clone();
    disc.fft.forward(&mut coeffs, disc.exec);
    let scale = 1.0 / disc.len() as f64;
    disc.exec.for_each_mut(&mut coeffs, |_, c| *c *= scale);
    CoefficientField {
        coeffs,
        disc: Arc::clone(disc),
    }
}

/// Values of the trigonometric polynomial on the lattice points; inverse of
/// [`analyze`].
pub fn synthesize(coeffs: &CoefficientField) -> SampleField {
    let disc = &coeffs.disc;
    let mut values = coeffs.coeffs.clone();
    disc.fft.inverse(&mut values, disc.exec);
    SampleField {
        values,
        disc: Arc::clone(disc),
    }
}

/// [`analyze`] with a check that the samples live on `aaset`'s lattice.
pub fn analyze_on(samples: &SampleField, aaset: &AntiAliasSet) -> Result<CoefficientField> {
    if samples.disc.spec() != aaset.spec() || samples.disc.aaset.norms() != aaset.norms() {
        return Err(Error::SpecMismatch);
    }
    Ok(analyze(samples))
}

/// `Σ_χ û_χ exp(2πi h^{(χ)}·x)` by direct summation.
pub fn evaluate(coeffs: &CoefficientField, x: &[f64]) -> Complex64 {
    let aaset = coeffs.aaset();
    assert_eq!(x.len(), aaset.dim(), "point has wrong dimension");
    coeffs
        .coeffs
        .iter()
        .enumerate()
        .map(|(chi, c)| {
            let t: f64 = aaset
                .frequency(chi)
                .iter()
                .zip(x)
                .map(|(&h, &xj)| h as f64 * xj)
                .sum();
            let t = t - t.round();
            c * Complex64::from_polar(1.0, 2.0 * PI * t)
        })
        .sum()
}

/// Direct summation at lattice point `κ` with exact phases.
pub fn evaluate_at_point(coeffs: &CoefficientField, kappa: usize) -> Complex64 {
    let disc = &coeffs.disc;
    coeffs
        .coeffs
        .iter()
        .enumerate()
        .map(|(chi, c)| c * disc.character(&disc.aaset.frequency_i64(chi), kappa))
        .sum()
}

/// Samples of the trigonometric polynomial with the given (finite) Fourier
/// support, evaluated exactly on the lattice.
pub fn sample_trig_poly(disc: &Arc<Discretization>, terms: &[(Vec<i64>, Complex64)]) -> SampleField {
    let mut values = vec![Complex64::new(0.0, 0.0); disc.len()];
    disc.exec.for_each_mut(&mut values, |kappa, v| {
        *v = terms
            .iter()
            .map(|(h, c)| c * disc.character(h, kappa))
            .sum();
    });
    SampleField {
        values,
        disc: Arc::clone(disc),
    }
}

/// Largest deviation between the computed lattice-rule coefficients of a
/// trigonometric polynomial and the aliasing prediction
/// `û_a(h^{(χ)}) = Σ_{ℓ ∈ Λ⊥} û(h^{(χ)} + ℓ)`.
pub fn aliasing_check(disc: &Arc<Discretization>, terms: &[(Vec<i64>, Complex64)]) -> f64 {
    let computed = analyze(&sample_trig_poly(disc, terms));
    let mut predicted = vec![Complex64::new(0.0, 0.0); disc.len()];
    for (h, c) in terms {
        predicted[disc.spec.flat_residue(h)] += c;
    }
    computed
        .coeffs
        .iter()
        .zip(&predicted)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldOrdering {
    /// Lexicographic lattice point order.
    Samples,
    /// Flattened-residue frequency order.
    Coefficients,
}

/// JSON sidecar describing a binary field file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub length: usize,
    pub ordering: FieldOrdering,
    pub lattice_hash: String,
    pub format: String,
}

const FIELD_FORMAT: &str = "complex128-le";

/// Write `values` as little-endian `(re, im)` doubles to `path` and the
/// header to `path` with a `.json` extension appended.
pub fn write_field(
    path: &Path,
    values: &[Complex64],
    ordering: FieldOrdering,
    spec: &LatticeSpec,
) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let header = FieldHeader {
        length: values.len(),
        ordering,
        lattice_hash: spec.hash(),
        format: FIELD_FORMAT.into(),
    };
    let side = sidecar(path);
    std::fs::write(&side, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&side, e))
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, Vec<Complex64>)> {
    let side = sidecar(path);
    let header: FieldHeader = serde_json::from_str(
        &std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?,
    )?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if header.format != FIELD_FORMAT || bytes.len() != header.length * 16 {
        return Err(Error::LengthMismatch {
            expected: header.length * 16,
            found: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok((header, values))
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
