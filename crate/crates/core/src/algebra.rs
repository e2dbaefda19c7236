//! Deformed oscillator algebra.
//!
//! A deformation is described by a structure function `F` with `F(0) = 0`;
//! the ladder operators obey `A†A = F(N)` and `AA† = F(N+1)`, so `F`
//! replaces the number operator of the ordinary oscillator. Equivalently a
//! level-dependent factor `f(n) = sqrt(F(n)/n)` deforms the usual matrix
//! elements. The q-oscillator uses the bracket
//!
//! ```text
//! F(n) = [n] = sinh(n tau) / sinh(tau),      tau = |ln q|,
//! ```
//!
//! which is symmetric under `q -> 1/q` and reduces to `F(n) = n` as
//! `tau -> 0`.
//!
//! Energy levels and the effective level spacing follow from `F`:
//! `E_n = (omega/2) [F(n+1) + F(n)]` (with `hbar = 1`) and
//! `Omega(n) = [F(n+2) - F(n)] / 2`, so that `E_n - E_{n-1} = omega
//! Omega(n-1)`. For the q-oscillator `Omega(n) = cosh((n+1) tau)`: the
//! spectrum spreads out with level number instead of staying equidistant.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{lit, num, Real};

/// Argument size beyond which `[n]` is evaluated in the log domain; keeps
/// the bracket finite when `sinh(n tau)` alone would overflow.
const LOG_DOMAIN_THRESHOLD: f64 = 30.0;

/// Deformation of the oscillator algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum Deformation<R> {
    /// Ordinary oscillator, `F(n) = n`.
    Identity,
    /// q-oscillator with parameter `tau = |ln q| >= 0`.
    Q { tau: R },
    /// Tabulated factors `f(1), f(2), ...`; `factors[k]` holds `f(k+1)`.
    Custom { factors: Vec<R> },
}

impl<R: Real> Deformation<R> {
    pub fn identity() -> Self {
        Deformation::Identity
    }

    /// q-deformation from the additive parameter `tau >= 0`.
    pub fn q(tau: R) -> Result<Self> {
        if !tau.is_finite() || tau < R::zero() {
            return Err(Error::Domain(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Deformation::Q { tau })
    }

    /// q-deformation from the multiplicative parameter `q > 0`; `q` and
    /// `1/q` give the same algebra, so only `tau = |ln q|` is kept.
    pub fn from_q(q: R) -> Result<Self> {
        if !q.is_finite() || q <= R::zero() {
            return Err(Error::Domain(format!("q must be finite and > 0, got {q}")));
        }
        Deformation::q(q.ln().abs())
    }

    /// Deformation from tabulated factors `f(1..=n_max)`, all finite and
    /// nonnegative.
    pub fn custom(factors: Vec<R>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("custom factor table must not be empty".into()));
        }
        if let Some(bad) = factors.iter().find(|f| !f.is_finite() || **f < R::zero()) {
            return Err(Error::Domain(format!("custom factors must be finite and >= 0, got {bad}")));
        }
        Ok(Deformation::Custom { factors })
    }

    /// Structure function `F(n)`; `F(0) = 0` for every deformation.
    pub fn structure(&self, n: usize) -> Result<R> {
        match self {
            Deformation::Identity => Ok(num(n)),
            Deformation::Q { tau } => Ok(q_bracket(n, *tau)),
            Deformation::Custom { factors } => {
                if n == 0 {
                    Ok(R::zero())
                } else if n <= factors.len() {
                    let f = factors[n - 1];
                    Ok(num::<R>(n) * f * f)
                } else {
                    Err(Error::Range(format!(
                        "custom factor table covers n <= {}, needed F({n})",
                        factors.len()
                    )))
                }
            }
        }
    }

    /// Deformation factor `f(n) = sqrt(F(n)/n)`; undefined at `n = 0`.
    pub fn factor(&self, n: usize) -> Result<R> {
        if n == 0 {
            return Err(Error::Domain("deformation factor f(0) is undefined".into()));
        }
        match self {
            Deformation::Identity => Ok(R::one()),
            Deformation::Q { .. } => Ok((self.structure(n)? / num(n)).sqrt()),
            Deformation::Custom { factors } => factors.get(n - 1).copied().ok_or_else(|| {
                Error::Range(format!("custom factor table covers n <= {}, needed f({n})", factors.len()))
            }),
        }
    }

    /// Effective level spacing `Omega(n) = [F(n+2) - F(n)] / 2` in units of
    /// the mode frequency.
    pub fn frequency_shift(&self, n: usize) -> Result<R> {
        let half = lit::<R>(0.5);
        Ok((self.structure(n + 2)? - self.structure(n)?) * half)
    }
}

/// q-bracket `[n] = sinh(n tau)/sinh(tau)`, with a log-domain evaluation
/// once `n tau` is large enough that the direct ratio risks overflow.
fn q_bracket<R: Real>(n: usize, tau: R) -> R {
    if tau == R::zero() {
        return num(n);
    }
    if n == 0 {
        return R::zero();
    }
    let x = num::<R>(n) * tau;
    if x <= lit(LOG_DOMAIN_THRESHOLD) {
        x.sinh() / tau.sinh()
    } else {
        // ln [n] = (x - tau) + ln1p(-e^{-2x}) - ln1p(-e^{-2 tau})
        let two = lit::<R>(2.0);
        let ln_val = (x - tau) + ((-(two * x)).exp().neg()).ln_1p() - ((-(two * tau)).exp().neg()).ln_1p();
        ln_val.exp()
    }
}

/// Single oscillator mode: frequency and basis truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<R> {
    pub omega: R,
    pub dim: usize,
}

impl<R: Real> Mode<R> {
    pub fn new(omega: R, dim: usize) -> Result<Self> {
        if !omega.is_finite() || omega <= R::zero() {
            return Err(Error::Domain(format!("omega must be finite and > 0, got {omega}")));
        }
        if dim < 2 {
            return Err(Error::Domain(format!("dim must be >= 2, got {dim}")));
        }
        Ok(Mode { omega, dim })
    }
}

/// Energy of level `n`, `E_n = (omega/2)[F(n+1) + F(n)]` with `hbar = 1`.
pub fn energy_level<R: Real>(def: &Deformation<R>, mode: &Mode<R>, n: usize) -> Result<R> {
    if n >= mode.dim {
        return Err(Error::Range(format!("level {n} outside basis of dimension {}", mode.dim)));
    }
    let half = lit::<R>(0.5);
    Ok(mode.omega * half * (def.structure(n + 1)? + def.structure(n)?))
}

/// Precomputed spectral data for one mode.
///
/// `energies[n]` is `E_n` in units of the mode quantum `hbar omega`,
/// `frequency_shift[n]` is `Omega(n)`, and `structure[n]` is `F(n)` (one
/// entry longer than the basis).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<R> {
    pub energies: Vec<R>,
    pub frequency_shift: Vec<R>,
    pub structure: Vec<R>,
}

impl<R: Real> Spectrum<R> {
    pub fn new(def: &Deformation<R>, mode: &Mode<R>) -> Result<Self> {
        let d = mode.dim;
        let mut structure = Vec::with_capacity(d + 1);
        for n in 0..=d {
            structure.push(def.structure(n)?);
        }
        let half = lit::<R>(0.5);
        let energies = (0..d).map(|n| (structure[n + 1] + structure[n]) * half).collect();
        let mut frequency_shift = Vec::with_capacity(d);
        for n in 0..d {
            frequency_shift.push(def.frequency_shift(n)?);
        }
        Ok(Spectrum { energies, frequency_shift, structure })
    }
}

/// Lowering and raising operators on the truncated basis `|0..dim-1>`:
/// `A[n-1, n] = sqrt(F(n))`, the raising operator its transpose. The action
/// out of the top state is dropped by the truncation.
pub fn ladder_operators<R: Real>(def: &Deformation<R>, dim: usize) -> Result<(Matrix<R>, Matrix<R>)> {
    if dim < 2 {
        return Err(Error::Domain(format!("dim must be >= 2, got {dim}")));
    }
    let mut lower = Matrix::zeros(dim);
    let mut raise = Matrix::zeros(dim);
    for n in 1..dim {
        let v = def.structure(n)?.sqrt();
        lower.set(n - 1, n, v);
        raise.set(n, n - 1, v);
    }
    Ok((lower, raise))
}
