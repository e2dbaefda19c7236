//! Time-evolution checks: the RK4 integrator against exact references,
//! adjoint identities of the generator, and invariant monitoring along
//! trajectories.

use defosc_core::{
    expectations, free_evolution, integrate, mean_quanta_flow, Bath, Beta, DensityMatrix,
    Deformation, Generator, Matrix, Mode,
};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn random_state(rng: &mut ChaCha8Rng, dim: usize, support: usize) -> DensityMatrix<f64> {
    let b = Matrix::from_fn(dim, |m, n| {
        if m < support && n < support {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            C::new(0.0, 0.0)
        }
    });
    let mut prod = Matrix::zeros(dim);
    for m in 0..dim {
        for n in 0..dim {
            let mut acc = C::new(0.0, 0.0);
            for k in 0..dim {
                acc += b.at(k, m).conj() * b.at(k, n);
            }
            prod.set(m, n, acc);
        }
    }
    let tr = prod.trace().re;
    for m in 0..dim {
        for n in 0..dim {
            let v = prod.at(m, n) / tr;
            prod.set(m, n, v);
        }
    }
    DensityMatrix::new(prod).expect("B^dag B / tr is a valid state")
}

fn max_entry_diff(a: &Matrix<C>, b: &Matrix<C>) -> f64 {
    let mut worst = 0.0_f64;
    for m in 0..a.dim() {
        for n in 0..a.dim() {
            worst = worst.max((a.at(m, n) - b.at(m, n)).norm());
        }
    }
    worst
}

#[test]
fn rk4_tracks_free_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for tau in [0.0, 0.2] {
        let def = Deformation::q(tau).unwrap();
        let mode = Mode::new(1.0, 8).unwrap();
        let bath = Bath::thermal(0.0, Beta::Infinite).unwrap();
        let gen = Generator::assemble(&def, &bath, &mode).unwrap();
        let rho0 = random_state(&mut rng, 8, 8);

        let traj = integrate(&gen, &rho0, 2.0, 1e-3, 500).unwrap();
        let exact = free_evolution(&def, &mode, &rho0, traj.final_time()).unwrap();
        let diff = max_entry_diff(traj.final_state().matrix(), exact.matrix());
        assert!(diff <= 1e-8, "tau={tau}: deviation {diff:e} from exact phases");
    }
}

#[test]
fn rk4_error_scales_with_fourth_power_of_step() {
    let def = Deformation::q(0.2).unwrap();
    let mode = Mode::new(1.0, 8).unwrap();
    let bath = Bath::thermal(0.0, Beta::Infinite).unwrap();
    let gen = Generator::assemble(&def, &bath, &mode).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let rho0 = random_state(&mut rng, 8, 8);
    let exact = free_evolution(&def, &mode, &rho0, 1.0).unwrap();

    let err_at = |dt: f64| {
        let traj = integrate(&gen, &rho0, 1.0, dt, 10_000).unwrap();
        max_entry_diff(traj.final_state().matrix(), exact.matrix())
    };
    let coarse = err_at(4e-3);
    let fine = err_at(2e-3);
    let ratio = coarse / fine;
    assert!(
        ratio > 12.0 && ratio < 20.0,
        "global error should drop sixteenfold per halving, got {ratio} ({coarse:e} -> {fine:e})"
    );
}

#[test]
fn cold_bath_decay_rate_is_twice_lambda() {
    let lambda = 0.5_f64;
    let def = Deformation::q(0.3).unwrap();
    let mode = Mode::new(1.0, 8).unwrap();
    let bath = Bath::thermal(lambda, Beta::Infinite).unwrap();
    let gen = Generator::assemble(&def, &bath, &mode).unwrap();
    let rho0 = DensityMatrix::fock(8, 3).unwrap();
    let traj = integrate(&gen, &rho0, 2.0, 1e-3, 100).unwrap();

    for (k, t) in traj.times.iter().enumerate() {
        let expect = 3.0 * (-2.0 * lambda * t).exp();
        assert!(
            (traj.observables[k].mean_n - expect).abs() <= 1e-8,
            "t={t}: mean quanta {} vs {expect}",
            traj.observables[k].mean_n
        );
    }

    // Log-slope fit over the sampled window recovers 2 lambda.
    let first = traj.observables[1].mean_n;
    let last = traj.observables[traj.len() - 1].mean_n;
    let dt_window = traj.times[traj.len() - 1] - traj.times[1];
    let fitted = -(last / first).ln() / dt_window;
    assert!((fitted - 2.0 * lambda).abs() <= 1e-6 * 2.0 * lambda);
}

#[test]
fn coherence_decay_identity_holds() {
    // d<a>/dt = -i omega <Omega(N) a> - lambda <a> for thermal baths; with
    // the trace-exact truncation it is exact at T=0, and holds up to a
    // top-level boundary term at finite temperature.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let omega = 1.3;
    let def = Deformation::q(0.25).unwrap();
    let mode = Mode::new(omega, 10).unwrap();

    let mean_a_of = |m: &Matrix<C>| {
        let mut acc = C::new(0.0, 0.0);
        for n in 0..m.dim() - 1 {
            acc += m.at(n + 1, n) * ((n + 1) as f64).sqrt();
        }
        acc
    };

    let cold = Bath::thermal(0.7, Beta::Infinite).unwrap();
    let gen = Generator::assemble(&def, &cold, &mode).unwrap();
    let rho = random_state(&mut rng, 10, 10);
    let image = gen.apply(rho.matrix()).unwrap();
    let lhs = mean_a_of(&image);
    let e = expectations(&rho, &def, &mode).unwrap();
    let rhs = C::new(0.0, -omega) * e.mean_omega_a - 0.7 * e.mean_a;
    assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "T=0: {lhs} vs {rhs}");

    let warm = Bath::thermal(0.4, Beta::finite(1.2).unwrap()).unwrap();
    let gen = Generator::assemble(&def, &warm, &mode).unwrap();

    // With the top two levels empty the boundary term vanishes.
    let confined = random_state(&mut rng, 10, 8);
    let image = gen.apply(confined.matrix()).unwrap();
    let lhs = mean_a_of(&image);
    let e = expectations(&confined, &def, &mode).unwrap();
    let rhs = C::new(0.0, -omega) * e.mean_omega_a - 0.4 * e.mean_a;
    assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "confined: {lhs} vs {rhs}");

    // A state reached by actual evolution has exponentially small weight at
    // the truncation edge, so the identity holds there too even though the
    // top ladder rung is formally dropped.
    let evolved = integrate(&gen, &confined, 0.5, 1e-3, usize::MAX).unwrap();
    let state = evolved.final_state();
    let image = gen.apply(state.matrix()).unwrap();
    let lhs = mean_a_of(&image);
    let e = expectations(state, &def, &mode).unwrap();
    let rhs = C::new(0.0, -omega) * e.mean_omega_a - 0.4 * e.mean_a;
    assert!((lhs - rhs).norm() <= 1e-5 * rhs.norm().max(1.0), "evolved: {lhs} vs {rhs}");
}

#[test]
fn quanta_flow_matches_trajectory_slope() {
    for beta in [1.0_f64, 2.0] {
        for tau in [0.0, 0.2] {
            let lambda = 0.5_f64;
            let def = Deformation::q(tau).unwrap();
            let mode = Mode::new(1.0, 16).unwrap();
            let bath = Bath::thermal(lambda, Beta::finite(beta).unwrap()).unwrap();
            let gen = Generator::assemble(&def, &bath, &mode).unwrap();
            let rho0 = DensityMatrix::fock(16, 4).unwrap();

            let dt = 1e-3;
            let traj = integrate(&gen, &rho0, 0.2, dt, 1).unwrap();
            for k in (10..traj.len() - 1).step_by(50) {
                let slope = (traj.observables[k + 1].mean_n - traj.observables[k - 1].mean_n)
                    / (traj.times[k + 1] - traj.times[k - 1]);
                let flow = mean_quanta_flow(&traj.states[k], &def, &bath, &mode).unwrap();
                let scale = flow.abs().max(lambda);
                assert!(
                    (slope - flow).abs() <= 1e-5 * scale,
                    "beta={beta} tau={tau} t={}: slope {slope} vs flow {flow}",
                    traj.times[k]
                );
            }
        }
    }
}

#[test]
fn truncation_is_converged_at_spec_dimensions() {
    let run = |dim: usize| -> (f64, f64) {
        let def = Deformation::q(0.2).unwrap();
        let mode = Mode::new(1.0, dim).unwrap();
        let bath = Bath::thermal(0.5, Beta::finite(1.0).unwrap()).unwrap();
        let gen = Generator::assemble(&def, &bath, &mode).unwrap();
        let rho0 = DensityMatrix::fock(dim, 2).unwrap();
        let dt = 0.9 * gen.step_bound();
        let traj = integrate(&gen, &rho0, 3.0, dt, usize::MAX).unwrap();
        (
            traj.observables.last().unwrap().mean_n,
            traj.observables.last().unwrap().energy,
        )
    };
    let (n24, e24) = run(24);
    let (n32, e32) = run(32);
    assert!((n24 - n32).abs() <= 1e-8, "mean quanta drift {:e}", (n24 - n32).abs());
    assert!((e24 - e32).abs() <= 1e-8, "energy drift {:e}", (e24 - e32).abs());
}

#[test]
fn trajectory_monitors_stay_clean() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let def = Deformation::q(0.15).unwrap();
    let mode = Mode::new(1.0, 12).unwrap();
    let bath = Bath::thermal(0.6, Beta::finite(0.7).unwrap()).unwrap();
    let gen = Generator::assemble(&def, &bath, &mode).unwrap();
    let rho0 = random_state(&mut rng, 12, 12);
    let traj = integrate(&gen, &rho0, 3.0, 1e-3, 250).unwrap();

    assert!(traj.len() >= 3);
    for k in 0..traj.len() {
        assert!(traj.observables[k].trace_err <= 1e-9, "trace drift at sample {k}");
        assert!(traj.observables[k].min_eig >= -1e-8, "negativity at sample {k}");
        assert!(
            traj.states[k].matrix().hermiticity_defect() <= 1e-10,
            "hermiticity defect at sample {k}"
        );
    }

    // Samples land on the expected grid and end exactly at t_end.
    assert!((traj.times[1] - 0.25).abs() < 1e-12);
    assert!((traj.final_time() - 3.0).abs() < 1e-12);
}

#[test]
fn deformed_relaxation_reaches_the_deformed_boltzmann_state() {
    let lambda = 0.5;
    let beta = 1.0_f64;
    let def = Deformation::<f64>::q(0.2).unwrap();
    let mode = Mode::new(1.0, 16).unwrap();
    let bath = Bath::thermal(lambda, Beta::finite(beta).unwrap()).unwrap();
    let gen = Generator::assemble(&def, &bath, &mode).unwrap();
    let rho0 = DensityMatrix::fock(16, 2).unwrap();

    let t_end = 20.0 / lambda;
    let dt = 0.9 * gen.step_bound();
    let traj = integrate(&gen, &rho0, t_end, dt, usize::MAX).unwrap();
    let target = defosc_core::thermal_distribution(&def, &mode, beta).unwrap();
    let final_pops = traj.final_state().populations();
    for n in 0..16 {
        assert!(
            (final_pops[n] - target.populations.p[n]).abs() <= 1e-7,
            "level {n} has not relaxed: {} vs {}",
            final_pops[n],
            target.populations.p[n]
        );
    }
}
