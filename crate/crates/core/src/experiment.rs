//! Batch studies: time-step convergence, conservation traces and the initial
//! discretization error.
//!
//! A study is described by one JSON document ([`ExperimentConfig`]); paths
//! inside it resolve against the directory holding the document. Each run
//! returns a [`Report`] that can be written as a CSV table plus a JSON
//! summary carrying the lattice hash, the echoed config and the tool version.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::antialias::LatticeDocument;
use crate::catalog;
use crate::cbc::{cbc_construct, CbcCriterion};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeSpec;
use crate::problems::{BenchmarkFunction, BenchmarkKind};
use crate::spectral::{analyze, CoefficientField, Discretization};
use crate::tdse::{
    energy, propagate_from, InitialFn, Observables, PotentialFn, RecordOptions, StrangPropagator,
};

/// Errors below `FIT_FLOOR · ‖u_0‖ · √M` (with `M` the reference step count)
/// are round-off and are left out of slope fits.
pub const FIT_FLOOR: f64 = 100.0 * f64::EPSILON;

const DEFAULT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Conservation,
    InitialError,
}

/// Where the lattice comes from. `log2n` is the base-2 log of the point count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeSource {
    /// A bundled vector at exactly this size.
    Catalog { log2n: u32 },
    /// A bundled vector reduced to a smaller power of two.
    Embedded { log2n: u32 },
    /// A fresh component-by-component construction.
    Cbc { log2n: u32 },
    /// A lattice document on disk, optionally with a stored frequency set.
    File(PathBuf),
    Inline(LatticeSpec),
}

/// Lattice family for sweeps over `n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeFamily {
    Catalog,
    #[default]
    Embedded,
    Cbc,
}

impl LatticeFamily {
    fn source(self, log2n: u32) -> LatticeSource {
        match self {
            LatticeFamily::Catalog => LatticeSource::Catalog { log2n },
            LatticeFamily::Embedded => LatticeSource::Embedded { log2n },
            LatticeFamily::Cbc => LatticeSource::Cbc { log2n },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub h: Vec<i64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    /// `"g1"` or `"g2"`.
    Named(String),
    PlaneWave { plane_wave: Vec<i64> },
    Trig { trig: Vec<TrigTerm> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    /// `"v1"`, `"v2"` or `"zero"`.
    Named(String),
    Constant { constant: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub d: usize,
    pub eps: f64,
    pub initial: InitialSpec,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(rename = "T", default = "one")]
    pub t_final: f64,
    #[serde(default)]
    pub lattice: Option<LatticeSource>,

    /// Coarse step sizes of a convergence sweep, strictly decreasing.
    #[serde(default)]
    pub dt_list: Option<Vec<f64>>,
    /// Coarse step counts, as an alternative to `dt_list`.
    #[serde(default)]
    pub m_list: Option<Vec<usize>>,
    #[serde(default)]
    pub reference_m: Option<usize>,

    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    /// Largest relative norm drift tolerated before a run is rejected.
    #[serde(default)]
    pub norm_tolerance: Option<f64>,

    #[serde(default)]
    pub family: LatticeFamily,
    /// Family of the reference lattice; defaults to `family`.
    #[serde(default)]
    pub reference_family: Option<LatticeFamily>,
    #[serde(default)]
    pub log2n_list: Option<Vec<u32>>,
    #[serde(default)]
    pub reference_log2n: Option<u32>,

    #[serde(default)]
    pub output: Option<PathBuf>,

    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.as_deref().map(|p| self.resolve(p))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.d == 0 {
            return fail("d must be positive".into());
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return fail(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return fail(format!("T must be non-negative, got {}", self.t_final));
        }
        self.initial_fn()?;
        match self.experiment {
            ExperimentKind::Convergence => {
                self.potential_fn()?;
                self.require_lattice()?;
                let ms = self.coarse_steps()?;
                let reference = self.reference_steps()?;
                let coarsest_fine = *ms.iter().max().expect("non-empty");
                if reference < 4 * coarsest_fine {
                    return fail(format!(
                        "reference_m = {reference} must be at least 4 times the largest m = {coarsest_fine}"
                    ));
                }
            }
            ExperimentKind::Conservation => {
                self.potential_fn()?;
                self.require_lattice()?;
                self.single_steps()?;
            }
            ExperimentKind::InitialError => {
                let list = self
                    .log2n_list
                    .as_ref()
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| Error::Config("initial_error needs log2n_list".into()))?;
                if list.windows(2).any(|w| w[1] <= w[0]) {
                    return fail("log2n_list must be strictly increasing".into());
                }
                if self.reference_log2n.is_none() {
                    return fail("initial_error needs reference_log2n".into());
                }
            }
        }
        if let Some(tol) = self.norm_tolerance {
            if !(tol > 0.0) {
                return fail(format!("norm_tolerance must be positive, got {tol}"));
            }
        }
        Ok(())
    }

    fn require_lattice(&self) -> Result<&LatticeSource> {
        self.lattice
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{:?} needs a lattice", self.experiment)))
    }

    fn steps_for(&self, dt: f64) -> Result<usize> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let m = (self.t_final / dt).round();
        if (m * dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(Error::Config(format!("dt = {dt} does not divide T = {}", self.t_final)));
        }
        Ok(m as usize)
    }

    /// Step counts of the coarse runs, in the order given.
    pub fn coarse_steps(&self) -> Result<Vec<usize>> {
        let ms = match (&self.dt_list, &self.m_list) {
            (Some(dts), None) => dts.iter().map(|&dt| self.steps_for(dt)).collect::<Result<Vec<_>>>()?,
            (None, Some(ms)) => ms.clone(),
            _ => return Err(Error::Config("give exactly one of dt_list and m_list".into())),
        };
        if ms.is_empty() {
            return Err(Error::Config("the step list is empty".into()));
        }
        if ms.contains(&0) {
            return Err(Error::Config("coarse runs need at least one step".into()));
        }
        if ms.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("dt_list must be strictly decreasing".into()));
        }
        Ok(ms)
    }

    pub fn reference_steps(&self) -> Result<usize> {
        self.reference_m
            .ok_or_else(|| Error::Config("convergence needs reference_m".into()))
    }

    /// Step count of a single run, from `m` or `dt`.
    pub fn single_steps(&self) -> Result<usize> {
        match (self.m, self.dt) {
            (Some(m), None) => Ok(m),
            (None, Some(dt)) => self.steps_for(dt),
            (Some(m), Some(dt)) => {
                if self.steps_for(dt)? != m {
                    return Err(Error::Config(format!("m = {m} and dt = {dt} disagree")));
                }
                Ok(m)
            }
            (None, None) => Err(Error::Config("give m or dt".into())),
        }
    }

    fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance.unwrap_or(DEFAULT_NORM_TOLERANCE)
    }

    /// The initial condition and its exact squared L2 norm.
    pub fn initial_fn(&self) -> Result<(InitialFn, f64)> {
        let terms = match &self.initial {
            InitialSpec::Named(name) => {
                let kind = match name.as_str() {
                    "g1" => BenchmarkKind::GaussianG1,
                    "g2" => BenchmarkKind::HatG2,
                    other => return Err(Error::Config(format!("unknown initial condition {other:?}"))),
                };
                let g = BenchmarkFunction::new(kind, self.d, self.eps)?;
                let f: InitialFn = Arc::new(move |x: &[f64]| Complex64::new(g.eval(x), 0.0));
                return Ok((f, 1.0));
            }
            InitialSpec::PlaneWave { plane_wave } => vec![TrigTerm {
                h: plane_wave.clone(),
                re: 1.0,
                im: 0.0,
            }],
            InitialSpec::Trig { trig } => trig.clone(),
        };
        let terms = self.trig_terms(&terms)?;
        let norm2 = terms.iter().map(|(_, c)| c.norm_sqr()).sum();
        let f: InitialFn = Arc::new(move |x: &[f64]| {
            terms
                .iter()
                .map(|(h, c)| {
                    let t: f64 = h.iter().zip(x).map(|(&hj, &xj)| hj as f64 * xj).sum();
                    c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)
                })
                .sum()
        });
        Ok((f, norm2))
    }

    fn trig_terms(&self, terms: &[TrigTerm]) -> Result<Vec<(Vec<i64>, Complex64)>> {
        if terms.is_empty() {
            return Err(Error::Config("trigonometric initial condition has no terms".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.h.len() != self.d {
                return Err(Error::Config(format!("frequency {:?} is not {}-dimensional", t.h, self.d)));
            }
            if terms[..i].iter().any(|s| s.h == t.h) {
                return Err(Error::Config(format!("frequency {:?} appears twice", t.h)));
            }
        }
        Ok(terms
            .iter()
            .map(|t| (t.h.clone(), Complex64::new(t.re, t.im)))
            .collect())
    }

    pub fn potential_fn(&self) -> Result<PotentialFn> {
        let spec = self
            .potential
            .as_ref()
            .ok_or_else(|| Error::Config("a potential is required".into()))?;
        Ok(match spec {
            PotentialSpec::Named(name) => match name.as_str() {
                "v1" => {
                    let v = BenchmarkFunction::v1(self.d);
                    Arc::new(move |x: &[f64]| v.eval(x))
                }
                "v2" => {
                    let v = BenchmarkFunction::v2(self.d);
                    Arc::new(move |x: &[f64]| v.eval(x))
                }
                "zero" => Arc::new(|_: &[f64]| 0.0),
                other => return Err(Error::Config(format!("unknown potential {other:?}"))),
            },
            &PotentialSpec::Constant { constant } => {
                if !constant.is_finite() {
                    return Err(Error::Config("constant potential must be finite".into()));
                }
                Arc::new(move |_: &[f64]| constant)
            }
        })
    }

    fn build(&self, source: &LatticeSource, exec: Exec) -> Result<Arc<Discretization>> {
        let d = self.d;
        let spec = match source {
            LatticeSource::Catalog { log2n } => catalog::lookup(d, *log2n)?,
            LatticeSource::Embedded { log2n } => catalog::embedded(d, *log2n)?,
            LatticeSource::Cbc { log2n } => {
                let n = 1u64.checked_shl(*log2n).filter(|_| *log2n < 40).ok_or_else(|| {
                    Error::Config(format!("n = 2^{log2n} is out of range"))
                })?;
                cbc_construct(&CbcCriterion::new(n, d), exec)?.lattice(n)?
            }
            LatticeSource::File(path) => {
                let doc = LatticeDocument::read(&self.resolve(path))?;
                check_dim(&doc.lattice, d)?;
                return Discretization::new(doc.aaset()?, exec);
            }
            LatticeSource::Inline(spec) => spec.clone(),
        };
        check_dim(&spec, d)?;
        Discretization::from_spec(&spec, exec)
    }

    pub fn discretization(&self, exec: Exec) -> Result<Arc<Discretization>> {
        self.build(self.require_lattice()?, exec)
    }
}

fn check_dim(spec: &LatticeSpec, d: usize) -> Result<()> {
    if spec.dim() != d {
        return Err(Error::Config(format!(
            "lattice is {}-dimensional but d = {d}",
            spec.dim()
        )));
    }
    Ok(())
}

fn check_norm(label: &str, before: f64, after: f64, tol: f64) -> Result<()> {
    let drift = (after - before).abs() / before.max(f64::MIN_POSITIVE);
    if !drift.is_finite() || drift > tol {
        return Err(Error::InvariantViolation(format!(
            "{label}: relative norm drift {drift:e} exceeds {tol:e}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeInfo {
    pub hash: String,
    pub n: usize,
    pub lattice: LatticeSpec,
}

impl LatticeInfo {
    fn of(disc: &Discretization) -> Self {
        LatticeInfo {
            hash: disc.spec().hash(),
            n: disc.len(),
            lattice: disc.spec().clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub steps: usize,
    pub l2_error: f64,
    /// Whether the point entered the slope fit.
    pub fitted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lattice: LatticeInfo,
    pub reference_steps: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log dt`.
    pub slope: Option<f64>,
    /// Errors below this were left out of the fit.
    pub floor: f64,
    /// Every error sits at the round-off floor.
    pub exact: bool,
    /// Errors never grow as `dt` shrinks.
    pub monotone: bool,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fine-step reference run, then every coarse run, each compared in the
/// coefficient L2 norm.
pub fn run_convergence(cfg: &ExperimentConfig, exec: Exec) -> Result<ConvergenceReport> {
    if cfg.experiment != ExperimentKind::Convergence {
        return Err(Error::Config("not a convergence config".into()));
    }
    let disc = cfg.discretization(exec)?;
    let potential = cfg.potential_fn()?;
    let (initial, _) = cfg.initial_fn()?;
    let ms = cfg.coarse_steps()?;
    let reference_m = cfg.reference_steps()?;
    let tol = cfg.norm_tolerance();

    let u0 = analyze(&disc.sample(|x| initial(x)));
    let norm0 = u0.l2_norm();
    let mut values = vec![0.0; disc.len()];
    exec.for_each_mut(&mut values, |kappa, v| *v = potential(&disc.point(kappa)));

    let run = |m: usize| -> Result<CoefficientField> {
        let dt = cfg.t_final / m as f64;
        let prop = StrangPropagator::from_values(&disc, values.clone(), cfg.eps, dt);
        let out = propagate_from(u0.clone(), &prop, m, RecordOptions::none())?.final_state;
        check_norm(&format!("m = {m}"), norm0, out.l2_norm(), tol)?;
        Ok(out)
    };

    let floor = FIT_FLOOR * norm0 * (reference_m as f64).sqrt();
    let reference = run(reference_m)?;
    let runs = exec.map_collect(ms.len(), |i| {
        run(ms[i]).and_then(|u| u.l2_distance(&reference))
    });
    let mut rows = Vec::with_capacity(ms.len());
    for (&m, err) in ms.iter().zip(runs) {
        let l2_error = err?;
        rows.push(ConvergenceRow {
            dt: cfg.t_final / m as f64,
            steps: m,
            l2_error,
            fitted: l2_error >= floor,
        });
    }
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.fitted)
        .map(|r| (r.dt, r.l2_error))
        .collect();
    let exact = fit.is_empty();
    let slope = fit_slope(&fit);
    let monotone = rows.windows(2).all(|w| w[1].l2_error <= w[0].l2_error);
    Ok(ConvergenceReport {
        lattice: LatticeInfo::of(&disc),
        reference_steps: reference_m,
        rows,
        floor,
        slope,
        exact,
        monotone,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationRow {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
    pub norm_delta: f64,
    pub energy_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub lattice: LatticeInfo,
    pub steps: usize,
    pub dt: f64,
    pub rows: Vec<ConservationRow>,
    /// `(max − min) / mean` of the recorded norms.
    pub delta_norm: f64,
    /// `(max − min) / mean` of the recorded energies.
    pub delta_energy: f64,
    /// Largest imaginary residual seen while evaluating energies.
    pub max_energy_residual: f64,
}

/// `(max − min) / mean`, or `max − min` when the mean vanishes.
pub fn relative_variation(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        max - min
    } else {
        (max - min) / mean.abs()
    }
}

pub fn run_conservation(cfg: &ExperimentConfig, exec: Exec) -> Result<ConservationReport> {
    if cfg.experiment != ExperimentKind::Conservation {
        return Err(Error::Config("not a conservation config".into()));
    }
    let disc = cfg.discretization(exec)?;
    let potential = cfg.potential_fn()?;
    let (initial, _) = cfg.initial_fn()?;
    let steps = cfg.single_steps()?;
    let dt = if steps == 0 { cfg.t_final } else { cfg.t_final / steps as f64 };
    let prop = StrangPropagator::new(&disc, &potential, cfg.eps, dt);
    let u0 = analyze(&disc.sample(|x| initial(x)));
    if steps == 0 {
        return Ok(ConservationReport {
            lattice: LatticeInfo::of(&disc),
            steps,
            dt,
            rows: Vec::new(),
            delta_norm: 0.0,
            delta_energy: 0.0,
            max_energy_residual: 0.0,
        });
    }

    let record = RecordOptions {
        every: cfg.record_every,
        observables: true,
        snapshots: false,
    };
    let traj = propagate_from(u0.clone(), &prop, steps, record)?;
    let first: Observables = traj.records[0];
    check_norm("conservation run", first.norm, traj.final_state.l2_norm(), cfg.norm_tolerance())?;
    let rows: Vec<ConservationRow> = traj
        .records
        .iter()
        .map(|o| ConservationRow {
            step: o.step,
            time: o.time,
            norm: o.norm,
            energy: o.energy,
            norm_delta: o.norm - first.norm,
            energy_delta: o.energy - first.energy,
        })
        .collect();
    let residual = [&u0, &traj.final_state]
        .iter()
        .map(|u| energy(u, &prop).map(|e| e.imag_residual.abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let norms: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let energies: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    Ok(ConservationReport {
        lattice: LatticeInfo::of(&disc),
        steps,
        dt,
        delta_norm: relative_variation(&norms),
        delta_energy: relative_variation(&energies),
        max_energy_residual: residual,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialErrorRow {
    pub log2n: u32,
    pub n: usize,
    pub lattice_hash: String,
    /// `‖g‖² − Σ_{h∈𝒜} |ĝ(h)|²`.
    pub tail: f64,
    /// `Σ_{h∈𝒜} |ĝ(h) − ĝ_a(h)|²`.
    pub aliasing: f64,
    pub e_total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialErrorReport {
    pub reference: LatticeInfo,
    pub rows: Vec<InitialErrorRow>,
}

/// `e_total² = (‖g‖² − Σ_{h∈𝒜}|ĝ(h)|²) + Σ_{h∈𝒜}|ĝ(h) − ĝ_a(h)|²`, with
/// `ĝ(h)` estimated by the reference lattice rule.
pub fn run_initial_error(cfg: &ExperimentConfig, exec: Exec) -> Result<InitialErrorReport> {
    if cfg.experiment != ExperimentKind::InitialError {
        return Err(Error::Config("not an initial_error config".into()));
    }
    let list = cfg.log2n_list.clone().unwrap_or_default();
    let ref_log2n = cfg
        .reference_log2n
        .ok_or_else(|| Error::Config("initial_error needs reference_log2n".into()))?;
    let finest = *list.iter().max().ok_or_else(|| Error::Config("log2n_list is empty".into()))?;
    if ref_log2n < finest + 4 {
        return Err(Error::ReferenceTooCoarse {
            reference: 1usize << ref_log2n.min(63),
            finest: 1usize << finest.min(63),
        });
    }
    let (initial, norm2) = cfg.initial_fn()?;
    let ref_family = cfg.reference_family.unwrap_or(cfg.family);
    let reference = cfg.build(&ref_family.source(ref_log2n), exec)?;
    let g_ref = analyze(&reference.sample(|x| initial(x)));
    let ref_spec = reference.spec();

    let mut rows = Vec::with_capacity(list.len());
    for &log2n in &list {
        let disc = cfg.build(&cfg.family.source(log2n), exec)?;
        let g_a = analyze(&disc.sample(|x| initial(x)));
        let aaset = disc.aaset();
        let (captured, aliasing) = (0..disc.len())
            .map(|chi| {
                let h = aaset.frequency_i64(chi);
                let g = g_ref.coeffs[ref_spec.flat_residue(&h)];
                (g.norm_sqr(), (g - g_a.coeffs[chi]).norm_sqr())
            })
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let tail = norm2 - captured;
        rows.push(InitialErrorRow {
            log2n,
            n: disc.len(),
            lattice_hash: disc.spec().hash(),
            tail,
            aliasing,
            e_total: (tail + aliasing).max(0.0).sqrt(),
        });
    }
    Ok(InitialErrorReport {
        reference: LatticeInfo::of(&reference),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Convergence(ConvergenceReport),
    Conservation(ConservationReport),
    InitialError(InitialErrorReport),
}

pub fn run(cfg: &ExperimentConfig, exec: Exec) -> Result<Report> {
    Ok(match cfg.experiment {
        ExperimentKind::Convergence => Report::Convergence(run_convergence(cfg, exec)?),
        ExperimentKind::Conservation => Report::Conservation(run_conservation(cfg, exec)?),
        ExperimentKind::InitialError => Report::InitialError(run_initial_error(cfg, exec)?),
    })
}

impl Report {
    pub fn name(&self) -> &'static str {
        match self {
            Report::Convergence(_) => "convergence",
            Report::Conservation(_) => "conservation",
            Report::InitialError(_) => "initial_error",
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Convergence(r) => {
                out.push_str("dt,steps,l2_error,fitted\n");
                for row in &r.rows {
                    out.push_str(&format!("{},{},{:e},{}\n", row.dt, row.steps, row.l2_error, row.fitted));
                }
            }
            Report::Conservation(r) => {
                out.push_str("step,time,norm,energy,norm_delta,energy_delta\n");
                for row in &r.rows {
                    out.push_str(&format!(
                        "{},{},{},{},{:e},{:e}\n",
                        row.step, row.time, row.norm, row.energy, row.norm_delta, row.energy_delta
                    ));
                }
            }
            Report::InitialError(r) => {
                out.push_str("log2n,n,tail,aliasing,e_total\n");
                for row in &r.rows {
                    out.push_str(&format!(
                        "{},{},{:e},{:e},{:e}\n",
                        row.log2n, row.n, row.tail, row.aliasing, row.e_total
                    ));
                }
            }
        }
        out
    }

    pub fn summary(&self, cfg: &ExperimentConfig) -> serde_json::Value {
        let result = match self {
            Report::Convergence(r) => json!({
                "lattice_hash": r.lattice.hash,
                "lattice": r.lattice.lattice,
                "reference_steps": r.reference_steps,
                "slope": r.slope,
                "floor": r.floor,
                "exact": r.exact,
                "monotone": r.monotone,
                "rows": r.rows,
            }),
            Report::Conservation(r) => json!({
                "lattice_hash": r.lattice.hash,
                "lattice": r.lattice.lattice,
                "steps": r.steps,
                "dt": r.dt,
                "delta_norm": r.delta_norm,
                "delta_energy": r.delta_energy,
                "max_energy_residual": r.max_energy_residual,
            }),
            Report::InitialError(r) => json!({
                "lattice_hash": r.reference.hash,
                "reference": r.reference.lattice,
                "rows": r.rows,
            }),
        };
        json!({
            "experiment": self.name(),
            "version": crate::VERSION,
            "config": cfg,
            "result": result,
        })
    }

    /// Writes `<name>.csv` and `<name>.json` into `dir`, returning both paths.
    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join(format!("{}.csv", self.name()));
        let summary = dir.join(format!("{}.json", self.name()));
        fs::write(&csv, self.csv()).map_err(|e| Error::io(&csv, e))?;
        let text = serde_json::to_string_pretty(&self.summary(cfg))?;
        fs::write(&summary, text + "\n").map_err(|e| Error::io(&summary, e))?;
        Ok((csv, summary))
    }
}
