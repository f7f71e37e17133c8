//! Strang-splitting propagation of `i ε ∂u/∂t = −(ε²/2) ∇²u + v u` in the
//! lattice coefficient space.
//!
//! One step maps `û ↦ F e^{−iΔt V/(2ε)} F⁻¹ e^{−iεΔt D/2} F e^{−iΔt V/(2ε)} F⁻¹ û`
//! with `D = diag(4π²‖h^{(χ)}‖²)` and `V = diag(v(p^{(κ)}))`. All three
//! factors are unitary, so the discrete norm is conserved to round-off.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{analyze, synthesize, CoefficientField, Discretization, SampleField};

pub type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type InitialFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub eps: f64,
    pub potential: PotentialFn,
    pub initial: InitialFn,
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("eps", &self.eps)
            .field("t_final", &self.t_final)
            .field("dt", &self.dt)
            .field("steps", &self.steps)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// `steps` Strang steps of size `t_final / steps` (`dt = t_final` when
    /// `steps == 0`, which leaves the initial state untouched).
    pub fn new(
        eps: f64,
        potential: PotentialFn,
        initial: InitialFn,
        t_final: f64,
        steps: usize,
    ) -> Result<Self> {
        let dt = if steps == 0 { t_final } else { t_final / steps as f64 };
        let spec = ProblemSpec {
            eps,
            potential,
            initial,
            t_final,
            dt,
            steps,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.steps > 0 {
            if !(self.dt > 0.0 && self.dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
            }
            let drift = (self.steps as f64 * self.dt - self.t_final).abs();
            if drift > 1e-12 * self.t_final.abs().max(1.0) {
                return Err(Error::Config(format!(
                    "{} steps of {} do not reach T = {}",
                    self.steps, self.dt, self.t_final
                )));
            }
        }
        Ok(())
    }
}

/// Precomputed diagonal phase factors for one time step `Δt`.
pub struct StrangPropagator {
    disc: Arc<Discretization>,
    eps: f64,
    dt: f64,
    /// `exp(−i ε Δt 2π² ‖h^{(χ)}‖²)`.
    kin_phase: Vec<Complex64>,
    /// `exp(−i Δt v(p^{(κ)}) / (2ε))`.
    pot_half_phase: Vec<Complex64>,
    potential: Vec<f64>,
}

impl fmt::Debug for StrangPropagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrangPropagator")
            .field("n", &self.kin_phase.len())
            .field("eps", &self.eps)
            .field("dt", &self.dt)
            .finish_non_exhaustive()
    }
}

impl StrangPropagator {
    /// Any finite `dt` is accepted; a negative step runs the scheme backwards.
    pub fn new(disc: &Arc<Discretization>, potential: &PotentialFn, eps: f64, dt: f64) -> Self {
        let mut values = vec![0.0; disc.len()];
        disc.exec()
            .for_each_mut(&mut values, |kappa, v| *v = potential(&disc.point(kappa)));
        Self::from_values(disc, values, eps, dt)
    }

    /// Build from potential values already tabulated on the lattice points.
    pub fn from_values(disc: &Arc<Discretization>, potential: Vec<f64>, eps: f64, dt: f64) -> Self {
        assert_eq!(potential.len(), disc.len());
        let exec = disc.exec();
        let aaset = disc.aaset();
        let mut kin_phase = vec![Complex64::new(0.0, 0.0); disc.len()];
        exec.for_each_mut(&mut kin_phase, |chi, p| {
            *p = Complex64::from_polar(1.0, -eps * dt * 2.0 * PI * PI * aaset.norm2(chi) as f64)
        });
        let mut pot_half_phase = vec![Complex64::new(0.0, 0.0); disc.len()];
        exec.zip_mut(&mut pot_half_phase, &potential, |p, &v| {
            *p = Complex64::from_polar(1.0, -dt * v / (2.0 * eps))
        });
        StrangPropagator {
            disc: Arc::clone(disc),
            eps,
            dt,
            kin_phase,
            pot_half_phase,
            potential,
        }
    }

    pub fn for_problem(disc: &Arc<Discretization>, problem: &ProblemSpec) -> Self {
        Self::new(disc, &problem.potential, problem.eps, problem.dt)
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kin_phase(&self) -> &[Complex64] {
        &self.kin_phase
    }

    pub fn pot_half_phase(&self) -> &[Complex64] {
        &self.pot_half_phase
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.potential
    }

    fn check(&self, state: &CoefficientField) -> Result<()> {
        let other = state.discretization();
        if Arc::ptr_eq(other, &self.disc)
            || (other.spec() == self.disc.spec() && other.aaset().norms() == self.disc.aaset().norms())
        {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }

    /// One step, returning a new field.
    pub fn strang_step(&self, state: &CoefficientField) -> Result<CoefficientField> {
        self.check(state)?;
        let mut next = state.clone();
        self.step_in_place(&mut next.coeffs);
        Ok(next)
    }

    /// One step on a raw coefficient buffer, in flattened-residue order.
    ///
    /// Same sequence as synthesize → potential half step → analyze →
    /// kinetic step → synthesize → potential half step → analyze.
    pub fn step_in_place(&self, coeffs: &mut [Complex64]) {
        let exec = self.disc.exec();
        let fft = self.disc.fft();
        let scale = 1.0 / self.disc.len() as f64;
        fft.inverse(coeffs, exec);
        exec.zip_mut(coeffs, &self.pot_half_phase, |c, p| *c *= p);
        fft.forward(coeffs, exec);
        exec.zip_mut(coeffs, &self.kin_phase, |c, p| *c = *c * scale * p);
        fft.inverse(coeffs, exec);
        exec.zip_mut(coeffs, &self.pot_half_phase, |c, p| *c *= p);
        fft.forward(coeffs, exec);
        exec.for_each_mut(coeffs, |_, c| *c *= scale);
    }
}

/// `û_a^0`: samples of the initial condition on the lattice, analyzed.
pub fn discretize_initial(problem: &ProblemSpec, disc: &Arc<Discretization>) -> CoefficientField {
    let g = &problem.initial;
    analyze(&disc.sample(|x| g(x)))
}

pub fn l2_norm(state: &CoefficientField) -> f64 {
    state.l2_norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
    /// Imaginary part of `⟨Hu, u⟩` picked up from round-off.
    pub imag_residual: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// `⟨H u_a, u_a⟩` with `H = −(ε/2)∇² + v/ε`.
///
/// The kinetic part is diagonal in coefficient space; the potential part
/// is `(1/ε) Σ_χ conj(û_χ) (F V F⁻¹ û)_χ`.
pub fn energy(state: &CoefficientField, prop: &StrangPropagator) -> Result<Energy> {
    prop.check(state)?;
    let disc = state.discretization();
    let exec = disc.exec();
    let aaset = disc.aaset();
    let eps = prop.eps;
    let c = &state.coeffs;
    let kinetic = exec.sum_f64(c.len(), |chi| {
        0.5 * eps * 4.0 * PI * PI * aaset.norm2(chi) as f64 * c[chi].norm_sqr()
    });
    let mut vu = synthesize(state);
    exec.zip_mut(&mut vu.values, &prop.potential, |u, &v| *u *= v);
    let wu = analyze(&vu);
    let re = exec.sum_f64(c.len(), |chi| (c[chi].conj() * wu.coeffs[chi]).re);
    let im = exec.sum_f64(c.len(), |chi| (c[chi].conj() * wu.coeffs[chi]).im);
    let potential = re / eps;
    let imag_residual = im / eps;
    debug_assert!(
        imag_residual.abs() <= 1e-10 * (kinetic + potential.abs()).max(1.0),
        "energy picked up imaginary part {imag_residual}"
    );
    Ok(Energy {
        kinetic,
        potential,
        imag_residual,
    })
}

/// `‖(D + I)² û‖₂` with `D = (ε/2) diag(4π²‖h‖²)`, the state-dependent
/// factor in the second-order error bound of the splitting.
pub fn regularity_factor(state: &CoefficientField, eps: f64) -> f64 {
    let aaset = state.aaset();
    let c = &state.coeffs;
    state
        .discretization()
        .exec()
        .sum_f64(c.len(), |chi| {
            let w = 1.0 + 0.5 * eps * 4.0 * PI * PI * aaset.norm2(chi) as f64;
            w * w * w * w * c[chi].norm_sqr()
        })
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<Observables>,
    pub snapshots: Vec<(f64, CoefficientField)>,
    pub final_state: CoefficientField,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RecordOptions {
    /// Record observables every this many steps (and at the last step);
    /// `0` records only the initial and final states.
    pub every: usize,
    pub observables: bool,
    pub snapshots: bool,
}

impl RecordOptions {
    pub fn none() -> Self {
        RecordOptions::default()
    }

    pub fn observables(every: usize) -> Self {
        RecordOptions {
            every,
            observables: true,
            snapshots: false,
        }
    }
}

/// Run `problem.steps` Strang steps from `û_a^0`.
pub fn propagate(
    problem: &ProblemSpec,
    disc: &Arc<Discretization>,
    record: RecordOptions,
) -> Result<Trajectory> {
    problem.validate()?;
    let prop = StrangPropagator::for_problem(disc, problem);
    let initial = discretize_initial(problem, disc);
    propagate_from(initial, &prop, problem.steps, record)
}

/// Run `steps` steps of `prop` from `state`.
pub fn propagate_from(
    state: CoefficientField,
    prop: &StrangPropagator,
    steps: usize,
    record: RecordOptions,
) -> Result<Trajectory> {
    prop.check(&state)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut current = state;
    let mut observe = |step: usize, field: &CoefficientField| -> Result<()> {
        let time = step as f64 * prop.dt;
        if record.observables {
            records.push(Observables {
                step,
                time,
                norm: field.l2_norm(),
                energy: energy(field, prop)?.total(),
            });
        }
        if record.snapshots {
            snapshots.push((time, field.clone()));
        }
        Ok(())
    };
    observe(0, &current)?;
    let mut buffer = current.coeffs.clone();
    for k in 1..=steps {
        prop.step_in_place(&mut buffer);
        let due = k == steps || (record.every > 0 && k % record.every == 0);
        if due {
            current.coeffs.copy_from_slice(&buffer);
            observe(k, &current)?;
        }
    }
    current.coeffs = buffer;
    Ok(Trajectory {
        records,
        snapshots,
        final_state: current,
    })
}

/// Samples of `u_a` at the lattice points.
pub fn samples(state: &CoefficientField) -> SampleField {
    synthesize(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::lattice::LatticeSpec;

    fn disc() -> Arc<Discretization> {
        let spec = LatticeSpec::rank1(vec![1, 34], 55).unwrap();
        Discretization::from_spec(&spec, Exec::Sequential).unwrap()
    }

    fn smooth_state(disc: &Arc<Discretization>) -> CoefficientField {
        let s = disc.sample(|x| {
            Complex64::new(
                (-(10.0 * ((x[0] - 0.5).powi(2) + (x[1] - 0.4).powi(2)))).exp(),
                (2.0 * PI * x[1]).sin() * 0.2,
            )
        });
        analyze(&s)
    }

    #[test]
    fn phases_are_unimodular() {
        let d = disc();
        let pot: PotentialFn = Arc::new(|x: &[f64]| 3.0 * x[0] + x[1] * x[1]);
        let prop = StrangPropagator::new(&d, &pot, 0.3, 0.07);
        assert!(prop.kin_phase().iter().chain(prop.pot_half_phase()).all(|p| (p.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn free_evolution_is_diagonal() {
        let d = disc();
        let zero: PotentialFn = Arc::new(|_| 0.0);
        let (eps, dt) = (0.7, 0.013);
        let prop = StrangPropagator::new(&d, &zero, eps, dt);
        let u = smooth_state(&d);
        let next = prop.strang_step(&u).unwrap();
        for chi in 0..d.len() {
            let ph = Complex64::from_polar(1.0, -eps * dt * 2.0 * PI * PI * d.aaset().norm2(chi) as f64);
            assert!((next.coeffs[chi] - ph * u.coeffs[chi]).norm() < 1e-14);
        }
    }

    #[test]
    fn norm_is_conserved_and_step_is_reversible() {
        let d = disc();
        let pot: PotentialFn = Arc::new(|x: &[f64]| 5.0 * (1.0 - (2.0 * PI * x[0]).cos()) + 2.0 * x[1]);
        let fwd = StrangPropagator::new(&d, &pot, 0.4, 0.05);
        let bwd = StrangPropagator::new(&d, &pot, 0.4, -0.05);
        let u = smooth_state(&d);
        let v = fwd.strang_step(&u).unwrap();
        assert!((v.l2_norm() - u.l2_norm()).abs() < 1e-12 * u.l2_norm());
        let w = bwd.strang_step(&v).unwrap();
        assert!(w.l2_distance(&u).unwrap() < 1e-10);
    }

    #[test]
    fn energy_of_single_mode() {
        let d = disc();
        let zero: PotentialFn = Arc::new(|_| 0.0);
        let eps = 0.8;
        let prop = StrangPropagator::new(&d, &zero, eps, 0.1);
        let chi = 5;
        let e = energy(&CoefficientField::unit(&d, chi), &prop).unwrap();
        let h2 = d.aaset().norm2(chi) as f64;
        assert!((e.total() - 0.5 * eps * 4.0 * PI * PI * h2).abs() < 1e-12);

        let c = 2.5;
        let constant: PotentialFn = Arc::new(move |_| c);
        let prop = StrangPropagator::new(&d, &constant, eps, 0.1);
        let mut u = smooth_state(&d);
        let norm = u.l2_norm();
        u.coeffs.iter_mut().for_each(|x| *x /= norm);
        let e = energy(&u, &prop).unwrap();
        assert!((e.potential - c / eps).abs() < 1e-12);
        assert!(e.imag_residual.abs() < 1e-12);
    }

    #[test]
    fn zero_steps_return_initial_state() {
        let d = disc();
        let problem = ProblemSpec::new(
            1.0,
            Arc::new(|x: &[f64]| x[0]),
            Arc::new(|x: &[f64]| Complex64::new(x[0], 0.0)),
            0.0,
            0,
        )
        .unwrap();
        let traj = propagate(&problem, &d, RecordOptions::observables(1)).unwrap();
        let init = discretize_initial(&problem, &d);
        assert_eq!(traj.final_state.coeffs, init.coeffs);
        assert_eq!(traj.records.len(), 1);
    }

    #[test]
    fn rejects_bad_problem() {
        let p: PotentialFn = Arc::new(|_| 0.0);
        let g: InitialFn = Arc::new(|_| Complex64::new(1.0, 0.0));
        assert!(ProblemSpec::new(0.0, p.clone(), g.clone(), 1.0, 10).is_err());
        let mut ok = ProblemSpec::new(1.0, p, g, 1.0, 10).unwrap();
        ok.dt = 0.2;
        assert!(ok.validate().is_err());
    }

    #[test]
    fn mismatched_state_rejected() {
        let d = disc();
        let other = Discretization::from_spec(&LatticeSpec::rank1(vec![1, 21], 55).unwrap(), Exec::Sequential).unwrap();
        let zero: PotentialFn = Arc::new(|_| 0.0);
        let prop = StrangPropagator::new(&d, &zero, 1.0, 0.1);
        assert!(matches!(prop.strang_step(&other.zero_coefficients()), Err(Error::SpecMismatch)));
    }
}
