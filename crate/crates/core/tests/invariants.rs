//! Structural invariants of the dissipative generator and the steady-state
//! routes, checked over seeded random ensembles.

use defosc_core::{
    detailed_balance_residual, steady_nullspace, steady_product, thermal_distribution,
    transition_rates, Bath, Beta, DensityMatrix, Deformation, Generator, Matrix, Mode,
};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix<f64> {
    let b = Matrix::from_fn(dim, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
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

fn baths() -> Vec<Bath<f64>> {
    vec![
        Bath::thermal(0.5, Beta::Infinite).unwrap(),
        Bath::thermal(0.8, Beta::finite(1.3).unwrap()).unwrap(),
        Bath::thermal(0.2, Beta::finite(0.4).unwrap()).unwrap(),
        Bath::squeezed(0.6, 0.7, C::new(0.3, -0.2)).unwrap(),
    ]
}

#[test]
fn generator_preserves_trace_and_hermiticity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for tau in [0.0, 0.25] {
        let def = Deformation::q(tau).unwrap();
        for dim in [2, 4, 8, 16] {
            let mode = Mode::new(1.0, dim).unwrap();
            for bath in baths() {
                let gen = Generator::assemble(&def, &bath, &mode).unwrap();
                for _ in 0..4 {
                    let rho = random_state(&mut rng, dim);
                    let image = gen.apply(rho.matrix()).unwrap();
                    let scale = image.max_abs().max(1.0);
                    assert!(
                        image.trace().norm() <= 1e-12 * scale,
                        "trace leak at tau={tau} dim={dim}"
                    );
                    assert!(
                        image.hermiticity_defect() <= 1e-12 * scale,
                        "hermiticity broken at tau={tau} dim={dim}"
                    );
                }
            }
        }
    }
}

#[test]
fn sparse_and_matrix_free_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let def = Deformation::q(0.3).unwrap();
    for dim in [4, 16] {
        let mode = Mode::new(1.2, dim).unwrap();
        for bath in baths() {
            let gen = Generator::assemble(&def, &bath, &mode).unwrap();
            let sparse = gen.materialize();
            for _ in 0..3 {
                let rho = random_state(&mut rng, dim);
                let a = gen.apply(rho.matrix()).unwrap();
                let b = sparse.apply(rho.matrix()).unwrap();
                let scale = a.max_abs().max(1.0);
                let mut worst = 0.0_f64;
                for m in 0..dim {
                    for n in 0..dim {
                        worst = worst.max((a.at(m, n) - b.at(m, n)).norm());
                    }
                }
                assert!(worst <= 1e-14 * scale, "paths diverge: {worst:e} at dim={dim}");
            }
        }
    }
}

#[test]
fn sparse_columns_sum_to_zero_trace() {
    let def = Deformation::q(0.4).unwrap();
    let mode = Mode::new(1.0, 12).unwrap();
    for bath in baths() {
        let gen = Generator::assemble(&def, &bath, &mode).unwrap();
        let sums = gen.materialize().trace_column_sums();
        for (col, s) in sums.iter().enumerate() {
            assert!(s.norm() <= 1e-12, "column {col} leaks trace: {s}");
        }
    }
}

#[test]
fn boltzmann_state_is_stationary_across_models() {
    for tau in [0.0, 0.2, 0.5] {
        let def = Deformation::q(tau).unwrap();
        for dim in [8, 24] {
            let mode = Mode::new(1.0, dim).unwrap();
            for beta in [0.5, 2.0_f64.ln(), 3.0] {
                for lambda in [0.1, 1.0] {
                    let bath = Bath::thermal(lambda, Beta::finite(beta).unwrap()).unwrap();
                    let gen = Generator::assemble(&def, &bath, &mode).unwrap();
                    let dist = thermal_distribution(&def, &mode, beta).unwrap();
                    let rho = DensityMatrix::from_populations(&dist.populations.p).unwrap();
                    let image = gen.apply(rho.matrix()).unwrap();
                    let tol = 1e-10 * (1.0 + lambda * dim as f64);
                    assert!(
                        image.max_abs() <= tol,
                        "tau={tau} dim={dim} beta={beta} lambda={lambda}: residual {:e}",
                        image.max_abs()
                    );
                }
            }
        }
    }
}

#[test]
fn ground_state_is_stationary_at_zero_temperature() {
    for tau in [0.0, 0.6] {
        let def = Deformation::q(tau).unwrap();
        let mode = Mode::new(1.0, 10).unwrap();
        let bath = Bath::thermal(0.9, Beta::Infinite).unwrap();
        let gen = Generator::assemble(&def, &bath, &mode).unwrap();
        let rho = DensityMatrix::fock(10, 0).unwrap();
        let image = gen.apply(rho.matrix()).unwrap();
        assert!(image.max_abs() <= 1e-14);
    }
}

#[test]
fn steady_routes_agree_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let dims = [2usize, 4, 6, 8, 12, 16, 24];
    for draw in 0..50 {
        let tau: f64 = rng.gen_range(0.0..1.2);
        let beta: f64 = rng.gen_range(0.2..5.0);
        let lambda: f64 = rng.gen_range(0.05..2.0);
        let dim = dims[rng.gen_range(0..dims.len())];
        let def = Deformation::q(tau).unwrap();
        let mode = Mode::new(1.0, dim).unwrap();
        let bath = Bath::thermal(lambda, Beta::finite(beta).unwrap()).unwrap();
        let chain = transition_rates(&def, &bath, &mode).unwrap();

        let product = steady_product(&chain).unwrap();
        let kernel = steady_nullspace(&chain).unwrap();
        assert!(!product.negative_factor);
        for n in 0..dim {
            assert!(
                (product.p[n] - kernel.p[n]).abs() <= 1e-10,
                "draw {draw} (tau={tau:.3} beta={beta:.3} lambda={lambda:.3} dim={dim}) level {n}: \
                 {} vs {}",
                product.p[n],
                kernel.p[n]
            );
        }
        assert!(detailed_balance_residual(&chain, &product).unwrap() <= 1e-12);

        let dist = thermal_distribution(&def, &mode, beta).unwrap();
        for n in 0..dim {
            assert!(
                (product.p[n] - dist.populations.p[n]).abs() <= 1e-12,
                "draw {draw} level {n}: rate route vs Boltzmann route"
            );
        }
    }
}

#[test]
fn diagonal_states_stay_diagonal_under_thermal_baths() {
    let def = Deformation::q(0.3).unwrap();
    let mode = Mode::new(1.0, 8).unwrap();
    let bath = Bath::thermal(0.5, Beta::finite(1.0).unwrap()).unwrap();
    let gen = Generator::assemble(&def, &bath, &mode).unwrap();
    let rho = DensityMatrix::from_populations(&[0.4, 0.3, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let image = gen.apply(rho.matrix()).unwrap();
    for m in 0..8 {
        for n in 0..8 {
            if m != n {
                assert_eq!(image.at(m, n), C::new(0.0, 0.0), "off-diagonal ({m},{n}) sourced");
            }
        }
    }
}

#[test]
fn closed_system_generator_is_a_commutator() {
    let def = Deformation::q(0.2).unwrap();
    let mode = Mode::new(1.5, 6).unwrap();
    let bath = Bath::thermal(0.0, Beta::Infinite).unwrap();
    let gen = Generator::assemble(&def, &bath, &mode).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_state(&mut rng, 6);

    let energies: Vec<f64> = (0..6)
        .map(|n| 1.5 * 0.5 * (def.structure(n + 1).unwrap() + def.structure(n).unwrap()))
        .collect();
    let image = gen.apply(rho.matrix()).unwrap();
    for m in 0..6 {
        for n in 0..6 {
            let expect = C::new(0.0, -(energies[m] - energies[n])) * rho.entry(m, n);
            assert!((image.at(m, n) - expect).norm() <= 1e-14 * (1.0 + expect.norm()));
        }
    }
}
