//! Time evolution of the density matrix and observable trajectories.
//!
//! The generator is integrated with classical fixed-step fourth-order
//! Runge-Kutta on the vectorized state. The step size is checked against
//! [`Generator::step_bound`], which ties it to the largest level spacing
//! and the diffusion strength; deformed spectra grow like `sinh(n tau)`,
//! so the top of the basis sets the stiffness. The trace is never
//! renormalized: its drift is recorded per sample as a diagnostic of step
//! size and truncation, and integration aborts if the drift passes a hard
//! cap.

use num_complex::Complex;

use crate::algebra::{Deformation, Mode};
use crate::error::{Error, Result};
use crate::liouvillian::{Bath, Beta, DensityMatrix, Generator};
use crate::matrix::Matrix;
use crate::scalar::{coth, lit, num, Real};
use crate::steady::thermal_distribution;

/// Hard cap on |trace - 1| during integration.
const TRACE_DRIFT_CAP: f64 = 1e-6;

/// Expectation values of the observables entering the master equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectations<R> {
    pub mean_n: R,
    pub mean_a: Complex<R>,
    pub mean_omega_a: Complex<R>,
    pub energy: R,
}

/// Per-sample observable record along a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct ObservableRecord<R> {
    pub mean_n: R,
    pub mean_a: Complex<R>,
    pub mean_omega_a: Complex<R>,
    pub energy: R,
    pub trace_err: R,
    pub min_eig: R,
}

/// Sampled states and observables of one integration run.
#[derive(Clone, Debug)]
pub struct Trajectory<R: Real> {
    pub times: Vec<R>,
    pub states: Vec<DensityMatrix<R>>,
    pub observables: Vec<ObservableRecord<R>>,
}

impl<R: Real> Trajectory<R> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DensityMatrix<R> {
        self.states.last().expect("trajectory holds at least the initial sample")
    }

    pub fn final_time(&self) -> R {
        *self.times.last().expect("trajectory holds at least the initial sample")
    }
}

/// Initial-state recipes resolved against a deformation and mode.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState<R> {
    /// Pure number state `|n><n|`.
    Fock(usize),
    /// Deformed thermal state at inverse temperature beta; T=0 is the
    /// ground state.
    Thermal(Beta<R>),
    /// Diagonal mixture from nonnegative weights (normalized; shorter
    /// weight lists are padded with empty top levels).
    Diagonal(Vec<R>),
}

impl<R: Real> InitialState<R> {
    pub fn build(&self, def: &Deformation<R>, mode: &Mode<R>) -> Result<DensityMatrix<R>> {
        match self {
            InitialState::Fock(n) => DensityMatrix::fock(mode.dim, *n),
            InitialState::Thermal(Beta::Infinite) => DensityMatrix::fock(mode.dim, 0),
            InitialState::Thermal(Beta::Finite(beta)) => {
                let dist = thermal_distribution(def, mode, *beta)?;
                DensityMatrix::from_populations(&dist.populations.p)
            }
            InitialState::Diagonal(weights) => {
                if weights.len() > mode.dim {
                    return Err(Error::Dimension(format!(
                        "{} weights exceed basis dimension {}",
                        weights.len(),
                        mode.dim
                    )));
                }
                let mut padded = weights.clone();
                padded.resize(mode.dim, R::zero());
                DensityMatrix::from_populations(&padded)
            }
        }
    }
}

fn structure_table<R: Real>(def: &Deformation<R>, up_to: usize) -> Result<Vec<R>> {
    (0..=up_to).map(|n| def.structure(n)).collect()
}

fn expectations_raw<R: Real>(
    matrix: &Matrix<Complex<R>>,
    def: &Deformation<R>,
    mode: &Mode<R>,
) -> Result<Expectations<R>> {
    let d = mode.dim;
    if matrix.dim() != d {
        return Err(Error::Dimension(format!(
            "state dimension {} does not match mode dimension {d}",
            matrix.dim()
        )));
    }
    let structure = structure_table(def, d)?;
    let half = lit::<R>(0.5);
    let mut mean_n = R::zero();
    let mut energy = R::zero();
    let mut mean_a = Complex::new(R::zero(), R::zero());
    let mut mean_omega_a = Complex::new(R::zero(), R::zero());
    for n in 0..d {
        let p = matrix.at(n, n).re;
        mean_n = mean_n + num::<R>(n) * p;
        energy = energy + mode.omega * half * (structure[n + 1] + structure[n]) * p;
        if n + 1 < d {
            let coherence = matrix.at(n + 1, n) * num::<R>(n + 1).sqrt();
            mean_a = mean_a + coherence;
            let shift = (structure[n + 2] - structure[n]) * half;
            mean_omega_a = mean_omega_a + coherence * shift;
        }
    }
    Ok(Expectations { mean_n, mean_a, mean_omega_a, energy })
}

/// Expectation values `<N>`, `<a>`, `<Omega(N) a>`, and `<H>` of a state.
pub fn expectations<R: Real>(
    rho: &DensityMatrix<R>,
    def: &Deformation<R>,
    mode: &Mode<R>,
) -> Result<Expectations<R>> {
    expectations_raw(rho.matrix(), def, mode)
}

/// Exact evolution under the Hamiltonian alone:
/// `rho_{mn}(t) = exp(-i (E_m - E_n) t) rho_{mn}(0)`.
pub fn free_evolution<R: Real>(
    def: &Deformation<R>,
    mode: &Mode<R>,
    rho0: &DensityMatrix<R>,
    t: R,
) -> Result<DensityMatrix<R>> {
    if rho0.dim() != mode.dim {
        return Err(Error::Dimension(format!(
            "state dimension {} does not match mode dimension {}",
            rho0.dim(),
            mode.dim
        )));
    }
    if !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite, got {t}")));
    }
    let d = mode.dim;
    let structure = structure_table(def, d)?;
    let half = lit::<R>(0.5);
    let energies: Vec<R> = (0..d).map(|n| mode.omega * half * (structure[n + 1] + structure[n])).collect();
    let out = Matrix::from_fn(d, |m, n| {
        let phase = Complex::from_polar(R::one(), -(energies[m] - energies[n]) * t);
        rho0.entry(m, n) * phase
    });
    Ok(DensityMatrix::unchecked(out))
}

/// Rate of change of the mean number of quanta for a thermal bath,
/// evaluated termwise on the populations:
/// `lambda [ sum_n (coth(beta Omega(n)/2) - 1)(n+1) P_n
///           - sum_n (coth(beta Omega(n-1)/2) + 1) n P_n ]`.
/// At T=0 this is `-2 lambda <N>` exactly.
pub fn mean_quanta_flow<R: Real>(
    rho: &DensityMatrix<R>,
    def: &Deformation<R>,
    bath: &Bath<R>,
    mode: &Mode<R>,
) -> Result<R> {
    let (lambda, beta) = match bath {
        Bath::Thermal { lambda, beta } => (*lambda, *beta),
        Bath::Custom { .. } => {
            return Err(Error::UnsupportedModel("mean quanta flow requires a thermal bath".into()))
        }
    };
    if rho.dim() != mode.dim {
        return Err(Error::Dimension(format!(
            "state dimension {} does not match mode dimension {}",
            rho.dim(),
            mode.dim
        )));
    }
    let d = mode.dim;
    let p = rho.populations();
    match beta {
        Beta::Infinite => {
            let mut mean_n = R::zero();
            for (n, pn) in p.iter().enumerate() {
                mean_n = mean_n + num::<R>(n) * *pn;
            }
            Ok(-(lit::<R>(2.0)) * lambda * mean_n)
        }
        Beta::Finite(b) => {
            let half = lit::<R>(0.5);
            let mut coths = Vec::with_capacity(d);
            for n in 0..d {
                coths.push(coth(b * def.frequency_shift(n)? * half));
            }
            let one = R::one();
            let mut acc = R::zero();
            for n in 0..d {
                acc = acc + (coths[n] - one) * num::<R>(n + 1) * p[n];
                if n >= 1 {
                    acc = acc - (coths[n - 1] + one) * num::<R>(n) * p[n];
                }
            }
            Ok(lambda * acc)
        }
    }
}

/// Integrates `drho/dt = G(rho)` with fixed-step RK4, sampling every
/// `sample_every`-th step (plus the initial and final states).
///
/// Fails if `dt` exceeds the generator's step bound, if the state picks up
/// non-finite entries, or if |trace - 1| exceeds 1e-6.
pub fn integrate<R: Real>(
    gen: &Generator<R>,
    rho0: &DensityMatrix<R>,
    t_end: R,
    dt: R,
    sample_every: usize,
) -> Result<Trajectory<R>> {
    if rho0.dim() != gen.dim() {
        return Err(Error::Dimension(format!(
            "state dimension {} does not match generator dimension {}",
            rho0.dim(),
            gen.dim()
        )));
    }
    if !t_end.is_finite() || t_end < R::zero() {
        return Err(Error::Domain(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if !dt.is_finite() || dt <= R::zero() {
        return Err(Error::Domain(format!("dt must be finite and > 0, got {dt}")));
    }
    if dt > gen.step_bound() {
        return Err(Error::Domain(format!(
            "dt = {dt} exceeds the stability bound {} for this generator",
            gen.step_bound()
        )));
    }
    if sample_every == 0 {
        return Err(Error::Domain("sample_every must be >= 1".into()));
    }

    let tiny = lit::<R>(1e-9);
    let ratio = t_end / dt;
    let n_full = (ratio + tiny)
        .floor()
        .to_usize()
        .ok_or_else(|| Error::Domain(format!("t_end/dt = {ratio} does not fit in a step count")))?;
    if n_full > 500_000_000 {
        return Err(Error::Domain(format!("t_end/dt = {ratio} steps is beyond the supported budget")));
    }
    let rem = t_end - num::<R>(n_full) * dt;
    let partial = rem > dt * tiny;
    let total_steps = n_full + usize::from(partial);

    let d = gen.dim();
    let sparse = gen.materialize();
    let mut rho = rho0.matrix().clone();
    let mut k1 = Matrix::zeros(d);
    let mut k2 = Matrix::zeros(d);
    let mut k3 = Matrix::zeros(d);
    let mut k4 = Matrix::zeros(d);
    let mut stage = Matrix::zeros(d);

    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), observables: Vec::new() };
    push_sample(&mut traj, R::zero(), &rho, gen)?;

    let half = lit::<R>(0.5);
    let sixth = lit::<R>(1.0 / 6.0);
    let third = lit::<R>(1.0 / 3.0);
    let cap = lit::<R>(TRACE_DRIFT_CAP);

    for step in 0..total_steps {
        let h = if step < n_full { dt } else { rem };

        sparse.apply_into(&rho, &mut k1)?;
        stage.clone_from(&rho);
        stage.scaled_add(Complex::new(h * half, R::zero()), &k1);
        sparse.apply_into(&stage, &mut k2)?;
        stage.clone_from(&rho);
        stage.scaled_add(Complex::new(h * half, R::zero()), &k2);
        sparse.apply_into(&stage, &mut k3)?;
        stage.clone_from(&rho);
        stage.scaled_add(Complex::new(h, R::zero()), &k3);
        sparse.apply_into(&stage, &mut k4)?;

        rho.scaled_add(Complex::new(h * sixth, R::zero()), &k1);
        rho.scaled_add(Complex::new(h * third, R::zero()), &k2);
        rho.scaled_add(Complex::new(h * third, R::zero()), &k3);
        rho.scaled_add(Complex::new(h * sixth, R::zero()), &k4);

        let done = step + 1;
        if !rho.all_finite() {
            return Err(Error::Numerical(format!("state became non-finite at step {done}")));
        }
        let trace_err = (rho.trace() - Complex::new(R::one(), R::zero())).norm();
        if trace_err > cap {
            return Err(Error::Numerical(format!(
                "trace drifted by {trace_err} at step {done}; reduce dt or enlarge the basis"
            )));
        }

        if done == total_steps || done % sample_every == 0 {
            let t_now = if done > n_full { t_end } else { num::<R>(done) * dt };
            push_sample(&mut traj, t_now, &rho, gen)?;
        }
    }

    Ok(traj)
}

fn push_sample<R: Real>(
    traj: &mut Trajectory<R>,
    t: R,
    rho: &Matrix<Complex<R>>,
    gen: &Generator<R>,
) -> Result<()> {
    let ex = expectations_raw(rho, gen.deformation(), gen.mode())?;
    let trace_err = (rho.trace() - Complex::new(R::one(), R::zero())).norm();
    let min_eig = rho.min_eigenvalue();
    traj.times.push(t);
    traj.states.push(DensityMatrix::unchecked(rho.clone()));
    traj.observables.push(ObservableRecord {
        mean_n: ex.mean_n,
        mean_a: ex.mean_a,
        mean_omega_a: ex.mean_omega_a,
        energy: ex.energy,
        trace_err,
        min_eig,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::Bath;

    type C = Complex<f64>;

    #[test]
    fn expectation_values_on_simple_states() {
        let def = Deformation::<f64>::identity();
        let mode = Mode::new(1.0, 6).unwrap();

        let ground = DensityMatrix::fock(6, 0).unwrap();
        let ex = expectations(&ground, &def, &mode).unwrap();
        assert_eq!(ex.mean_n, 0.0);
        assert_eq!(ex.mean_a, C::new(0.0, 0.0));
        assert!((ex.energy - 0.5).abs() < 1e-15);

        let one = DensityMatrix::fock(6, 1).unwrap();
        let ex1 = expectations(&one, &def, &mode).unwrap();
        assert!((ex1.energy - 1.5).abs() < 1e-15);
        assert!((ex1.mean_n - 1.0).abs() < 1e-15);

        let mut m = Matrix::zeros(6);
        m.set(0, 0, C::new(0.6, 0.0));
        m.set(1, 1, C::new(0.4, 0.0));
        m.set(1, 0, C::new(0.3, 0.0));
        m.set(0, 1, C::new(0.3, 0.0));
        let rho = DensityMatrix::new(m).unwrap();
        let exc = expectations(&rho, &def, &mode).unwrap();
        assert!((exc.mean_a - C::new(0.3, 0.0)).norm() < 1e-15);
        assert!((exc.mean_omega_a - C::new(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn free_evolution_fixes_diagonal_states() {
        let def = Deformation::q(0.4).unwrap();
        let mode = Mode::new(1.0, 5).unwrap();
        let rho = DensityMatrix::from_populations(&[0.5, 0.3, 0.1, 0.07, 0.03]).unwrap();
        let evolved = free_evolution(&def, &mode, &rho, 7.3).unwrap();
        for m in 0..5 {
            for n in 0..5 {
                assert!((evolved.entry(m, n) - rho.entry(m, n)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn free_evolution_phase_rates() {
        let mode = Mode::new(1.0, 4).unwrap();
        let mut m = Matrix::zeros(4);
        m.set(0, 0, C::new(0.5, 0.0));
        m.set(1, 1, C::new(0.5, 0.0));
        m.set(0, 1, C::new(0.5, 0.0));
        m.set(1, 0, C::new(0.5, 0.0));
        let rho = DensityMatrix::new(m).unwrap();

        let id = Deformation::identity();
        let t = 0.7;
        let evolved = free_evolution(&id, &mode, &rho, t).unwrap();
        let expect = C::new(0.5, 0.0) * C::from_polar(1.0, t);
        assert!((evolved.entry(0, 1) - expect).norm() < 1e-15);

        let tau = 0.3;
        let q = Deformation::q(tau).unwrap();
        let evolved_q = free_evolution(&q, &mode, &rho, t).unwrap();
        let omega0 = tau.cosh();
        let expect_q = C::new(0.5, 0.0) * C::from_polar(1.0, omega0 * t);
        assert!((evolved_q.entry(0, 1) - expect_q).norm() < 1e-13);
    }

    #[test]
    fn quanta_flow_values() {
        let def = Deformation::<f64>::identity();
        let mode = Mode::new(1.0, 8).unwrap();
        let lambda = 0.4;

        let cold = Bath::thermal(lambda, Beta::Infinite).unwrap();
        let rho = DensityMatrix::fock(8, 3).unwrap();
        let flow = mean_quanta_flow(&rho, &def, &cold, &mode).unwrap();
        assert_eq!(flow, -2.0 * lambda * 3.0);

        let beta = 2.0_f64.ln();
        let warm = Bath::thermal(lambda, Beta::finite(beta).unwrap()).unwrap();
        let ground = DensityMatrix::fock(8, 0).unwrap();
        let flow0 = mean_quanta_flow(&ground, &def, &warm, &mode).unwrap();
        assert!((flow0 - 2.0 * lambda).abs() < 1e-13, "nbar = 1 at beta = ln 2");

        let dim = 24;
        let mode_big = Mode::new(1.0, dim).unwrap();
        let tau = 0.2;
        let q = Deformation::q(tau).unwrap();
        let mut weights = Vec::new();
        for n in 0..dim {
            let e = 0.5 * (q.structure(n + 1).unwrap() + q.structure(n).unwrap());
            weights.push((-beta * e).exp());
        }
        let boltzmann = DensityMatrix::from_populations(&weights).unwrap();
        let flow_eq = mean_quanta_flow(&boltzmann, &q, &warm, &mode_big).unwrap();
        assert!(flow_eq.abs() < 1e-10, "stationary flow {flow_eq}");

        let squeezed = Bath::squeezed(1.0, 0.5, C::new(0.1, 0.0)).unwrap();
        assert!(matches!(
            mean_quanta_flow(&rho, &def, &squeezed, &mode),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn zero_time_returns_initial_sample() {
        let def = Deformation::<f64>::identity();
        let mode = Mode::new(1.0, 4).unwrap();
        let bath = Bath::thermal(0.5, Beta::Infinite).unwrap();
        let gen = Generator::assemble(&def, &bath, &mode).unwrap();
        let rho0 = DensityMatrix::fock(4, 2).unwrap();
        let traj = integrate(&gen, &rho0, 0.0, 1e-3, 10).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(traj.final_state().entry(2, 2), C::new(1.0, 0.0));
    }

    #[test]
    fn integration_preconditions() {
        let def = Deformation::<f64>::identity();
        let mode = Mode::new(1.0, 4).unwrap();
        let bath = Bath::thermal(0.5, Beta::Infinite).unwrap();
        let gen = Generator::assemble(&def, &bath, &mode).unwrap();
        let rho0 = DensityMatrix::fock(4, 0).unwrap();
        assert!(matches!(integrate(&gen, &rho0, 1.0, 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(integrate(&gen, &rho0, -1.0, 1e-3, 1), Err(Error::Domain(_))));
        assert!(matches!(integrate(&gen, &rho0, 1.0, 1e-3, 0), Err(Error::Domain(_))));
        let too_big = gen.step_bound() * 1.5;
        assert!(matches!(integrate(&gen, &rho0, 1.0, too_big, 1), Err(Error::Domain(_))));
        let wrong_dim = DensityMatrix::fock(6, 0).unwrap();
        assert!(matches!(integrate(&gen, &wrong_dim, 1.0, 1e-3, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn cold_decay_of_mean_quanta() {
        let lambda = 0.5;
        let def = Deformation::<f64>::identity();
        let mode = Mode::new(1.0, 8).unwrap();
        let bath = Bath::thermal(lambda, Beta::Infinite).unwrap();
        let gen = Generator::assemble(&def, &bath, &mode).unwrap();
        let rho0 = DensityMatrix::fock(8, 1).unwrap();
        let traj = integrate(&gen, &rho0, 2.0, 1e-3, 200).unwrap();
        for (t, obs) in traj.times.iter().zip(traj.observables.iter()) {
            let expect = (-2.0 * lambda * t).exp();
            assert!((obs.mean_n - expect).abs() < 1e-6, "t={t}: {} vs {expect}", obs.mean_n);
            assert!(obs.trace_err < 1e-9);
            assert!(obs.min_eig > -1e-8);
        }
        assert!((traj.final_time() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn initial_state_recipes() {
        let def = Deformation::q(0.2).unwrap();
        let mode = Mode::new(1.0, 12).unwrap();

        let fock = InitialState::Fock(3).build(&def, &mode).unwrap();
        assert_eq!(fock.entry(3, 3), C::new(1.0, 0.0));

        let cold = InitialState::Thermal(Beta::Infinite).build(&def, &mode).unwrap();
        assert_eq!(cold.entry(0, 0), C::new(1.0, 0.0));

        let warm = InitialState::Thermal(Beta::finite(1.0).unwrap()).build(&def, &mode).unwrap();
        let dist = thermal_distribution(&def, &mode, 1.0).unwrap();
        for n in 0..12 {
            assert!((warm.entry(n, n).re - dist.populations.p[n]).abs() < 1e-14);
        }

        let diag = InitialState::Diagonal(vec![0.0, 0.0, 1.0]).build(&def, &mode).unwrap();
        assert_eq!(diag.entry(2, 2), C::new(1.0, 0.0));
        assert_eq!(diag.dim(), 12);
        assert!(InitialState::Diagonal(vec![0.1; 13]).build(&def, &mode).is_err());
    }
}
