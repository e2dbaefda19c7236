//! Numerical toolkit for the damped deformed quantum oscillator.
//!
//! The oscillator algebra is deformed through a structure function `F(N)`:
//! ladder operators obey `A A^dag = F(N+1)`, `A^dag A = F(N)`, so the level
//! energies become `E_n = (omega/2)[F(n+1) + F(n)]` (units with `hbar = 1`)
//! and the transition frequency out of level `n` is
//! `omega_n = omega [F(n+2) - F(n)]/2`. The crate covers, in order of the
//! modules below:
//!
//! * [`algebra`]: structure functions (identity, `q`-deformed, custom
//!   tables), spectra, and ladder matrices in the truncated number basis.
//! * [`liouvillian`]: the Markovian generator of a damped deformed mode
//!   coupled to a thermal or user-specified bath, assembled level by level
//!   in the number basis, applied either matrix-free or from a compressed
//!   sparse row form.
//! * [`evolve`]: classical fourth-order Runge-Kutta propagation of the
//!   density matrix with trace, hermiticity, and positivity monitoring.
//! * [`steady`]: stationary populations via detailed balance and via a
//!   nullspace solve, deformed Boltzmann distributions, and the deformed
//!   partition function with its small-deformation expansion.
//!
//! All numerics are generic over the scalar through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases at the crate root pin `f64`, which
//! is what the bundled command-line tool uses.

pub mod algebra;
pub mod error;
pub mod evolve;
pub mod liouvillian;
pub mod matrix;
pub mod scalar;
pub mod steady;

pub use algebra::{energy_level, ladder_operators, Deformation, Mode, Spectrum};
pub use error::{Error, Result};
pub use evolve::{
    expectations, free_evolution, integrate, mean_quanta_flow, Expectations, InitialState,
    ObservableRecord, Trajectory,
};
pub use liouvillian::{
    positivity_check, thermal_coefficients, thermal_diffusion_coefficients, Bath, Beta,
    DensityMatrix, Generator, SparseGenerator, Table,
};
pub use matrix::Matrix;
pub use scalar::Real;
pub use steady::{
    detailed_balance_residual, equilibrium_energy_closed, equilibrium_energy_series, partition_q,
    steady_nullspace, steady_product, thermal_distribution, thermo, transition_rates,
    PopulationVector, RateChain, SmallTauExpansion, ThermalDistribution, ThermoResult,
    zq_small_tau,
};

pub type Deformation64 = Deformation<f64>;
pub type Mode64 = Mode<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type Beta64 = Beta<f64>;
pub type Bath64 = Bath<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type Generator64 = Generator<f64>;
pub type SparseGenerator64 = SparseGenerator<f64>;
pub type InitialState64 = InitialState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Expectations64 = Expectations<f64>;
pub type ObservableRecord64 = ObservableRecord<f64>;
pub type RateChain64 = RateChain<f64>;
pub type PopulationVector64 = PopulationVector<f64>;
pub type ThermalDistribution64 = ThermalDistribution<f64>;
pub type SmallTauExpansion64 = SmallTauExpansion<f64>;
pub type ThermoResult64 = ThermoResult<f64>;
pub type ComplexMatrix64 = Matrix<num_complex::Complex<f64>>;
