//! Population ladders, steady states, and deformed thermodynamics.
//!
//! When the counter-rotating bath coefficients vanish the populations
//! `P(n) = rho_{nn}` decouple from the coherences and obey a classical
//! birth-death equation with rates
//!
//! ```text
//! t_+(n) = (n+1)[2 D_+(Omega(n)) - lambda],
//! t_-(n) = n    [2 D_+(Omega(n-1)) + lambda].
//! ```
//!
//! Its stationary distribution comes out of detailed balance as a product
//! over rate ratios, and independently as the kernel of the rate matrix;
//! both routes are implemented and used as mutual oracles. For a thermal
//! bath the ratio reduces to `exp(-beta Omega(n-1))`, which makes the
//! stationary state the Boltzmann distribution of the deformed spectrum.
//!
//! The thermodynamics layer sums the deformed partition function term by
//! term with a rigorous geometric tail bound and evaluates the small-tau
//! expansion `Z_q = Z + b tau^2` together with the equilibrium energy in
//! closed and series form.

use crate::algebra::{Deformation, Mode};
use crate::error::{Error, Result};
use crate::liouvillian::{Bath, Beta};
use crate::scalar::{coth, lit, num, Real};

/// Below this inverse temperature the moment formulas lose their digits to
/// cancellation; inputs are rejected rather than extrapolated.
const BETA_FLOOR: f64 = 1e-6;

/// Iteration cap for the partition-function series.
const SERIES_CAP: usize = 100_000_000;

/// Birth-death rates on the population ladder.
///
/// `up[n]` holds `t_+(n)` for `n = 0..dim-2`, `down[k]` holds `t_-(k+1)`
/// for `k = 0..dim-2`; `t_-(0) = 0` structurally and is not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct RateChain<R> {
    pub dim: usize,
    pub up: Vec<R>,
    pub down: Vec<R>,
}

impl<R: Real> RateChain<R> {
    /// True when some upward rate is negative (possible for exotic custom
    /// baths with `2 D_+ < lambda`); steady states built from such chains
    /// carry a diagnostic flag.
    pub fn has_negative_up(&self) -> bool {
        self.up.iter().any(|r| *r < R::zero())
    }
}

/// Stationary population vector with a diagnostic flag for negative
/// product factors.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationVector<R> {
    pub p: Vec<R>,
    pub negative_factor: bool,
}

/// Transition rates of the population ladder for a bath whose populations
/// decouple (thermal, or custom with vanishing `D_-` and `D_pq` and real
/// `D_+`).
pub fn transition_rates<R: Real>(def: &Deformation<R>, bath: &Bath<R>, mode: &Mode<R>) -> Result<RateChain<R>> {
    let d = mode.dim;
    let half = lit::<R>(0.5);
    let two = lit::<R>(2.0);
    let lambda = bath.lambda();

    let mut d_plus = Vec::with_capacity(d - 1);
    match bath {
        Bath::Thermal { beta, .. } => {
            for k in 0..d - 1 {
                let value = match beta {
                    Beta::Infinite => lambda * half,
                    Beta::Finite(b) => {
                        let v = lambda * half * coth(*b * def.frequency_shift(k)? * half);
                        if !v.is_finite() {
                            return Err(Error::Domain(format!("thermal coefficient diverges at level {k}")));
                        }
                        v
                    }
                };
                d_plus.push(value);
            }
        }
        Bath::Custom { d_plus: tp, d_minus: tm, d_pq: tq, .. } => {
            for k in 0..d - 1 {
                let dm = tm.value(k)?;
                let dq = tq.value(k)?;
                if dm.re != R::zero() || dm.im != R::zero() || dq != R::zero() {
                    return Err(Error::UnsupportedModel(format!(
                        "populations do not decouple: D_- or D_pq nonzero at level {k}"
                    )));
                }
                let dp = tp.value(k)?;
                if dp.im != R::zero() {
                    return Err(Error::UnsupportedModel(format!(
                        "population rates require real D_+, got imaginary part at level {k}"
                    )));
                }
                d_plus.push(dp.re);
            }
        }
    }

    let mut up = Vec::with_capacity(d - 1);
    let mut down = Vec::with_capacity(d - 1);
    for k in 0..d - 1 {
        let level = num::<R>(k + 1);
        up.push(level * (two * d_plus[k] - lambda));
        down.push(level * (two * d_plus[k] + lambda));
    }
    Ok(RateChain { dim: d, up, down })
}

/// Stationary distribution from the detailed-balance product
/// `P(n) = P(0) prod_k up[k-1]/down[k-1]`, normalized over the truncated
/// basis. A negative factor leaves the result unnormalized and flagged.
pub fn steady_product<R: Real>(chain: &RateChain<R>) -> Result<PopulationVector<R>> {
    let d = chain.dim;
    let mut p = vec![R::zero(); d];
    p[0] = R::one();
    let mut negative = false;
    for n in 1..d {
        let denom = chain.down[n - 1];
        if denom == R::zero() {
            return Err(Error::DegenerateModel(format!("downward rate t_-({n}) vanishes")));
        }
        let ratio = chain.up[n - 1] / denom;
        if ratio < R::zero() {
            negative = true;
        }
        p[n] = p[n - 1] * ratio;
    }
    if !negative {
        let total: R = p.iter().copied().sum();
        if !total.is_finite() || total <= R::zero() {
            return Err(Error::Numerical(format!("population normalization failed: sum = {total}")));
        }
        for v in p.iter_mut() {
            *v = *v / total;
        }
    }
    Ok(PopulationVector { p, negative_factor: negative })
}

/// Stationary distribution as the kernel of the birth-death rate matrix,
/// found by a dense LU solve with the last balance row replaced by the
/// normalization row. Independent oracle for [`steady_product`].
pub fn steady_nullspace<R: Real>(chain: &RateChain<R>) -> Result<PopulationVector<R>> {
    let d = chain.dim;
    if d < 2 {
        return Err(Error::Dimension(format!("rate chain needs dim >= 2, got {d}")));
    }
    let mut a = vec![R::zero(); d * d];
    for n in 0..d {
        let mut diag = R::zero();
        if n + 1 < d {
            diag = diag - chain.up[n];
            a[n * d + (n + 1)] = chain.down[n];
        }
        if n >= 1 {
            diag = diag - chain.down[n - 1];
            a[n * d + (n - 1)] = chain.up[n - 1];
        }
        a[n * d + n] = diag;
    }
    for c in 0..d {
        a[(d - 1) * d + c] = R::one();
    }
    let mut rhs = vec![R::zero(); d];
    rhs[d - 1] = R::one();
    let p = solve_dense(a, d, rhs)?;
    let negative = p.iter().any(|v| *v < R::zero());
    Ok(PopulationVector { p, negative_factor: negative })
}

/// Dense LU solve with partial pivoting on a row-major square system.
fn solve_dense<R: Real>(mut a: Vec<R>, d: usize, mut b: Vec<R>) -> Result<Vec<R>> {
    for col in 0..d {
        let mut piv = col;
        let mut best = a[col * d + col].abs();
        for r in col + 1..d {
            let v = a[r * d + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == R::zero() || !best.is_finite() {
            return Err(Error::Numerical("rate matrix is singular beyond its kernel".into()));
        }
        if piv != col {
            for c in 0..d {
                a.swap(col * d + c, piv * d + c);
            }
            b.swap(col, piv);
        }
        let inv = a[col * d + col].recip();
        for r in col + 1..d {
            let f = a[r * d + col] * inv;
            if f != R::zero() {
                for c in col..d {
                    a[r * d + c] = a[r * d + c] - f * a[col * d + c];
                }
                b[r] = b[r] - f * b[col];
            }
        }
    }
    let mut x = vec![R::zero(); d];
    for col in (0..d).rev() {
        let mut acc = b[col];
        for c in col + 1..d {
            acc = acc - a[col * d + c] * x[c];
        }
        x[col] = acc / a[col * d + col];
    }
    Ok(x)
}

/// Largest violation of `t_-(n) P(n) = t_+(n-1) P(n-1)` over the ladder.
pub fn detailed_balance_residual<R: Real>(chain: &RateChain<R>, p: &PopulationVector<R>) -> Result<R> {
    if p.p.len() != chain.dim {
        return Err(Error::Dimension(format!(
            "population length {} does not match chain dimension {}",
            p.p.len(),
            chain.dim
        )));
    }
    let mut worst = R::zero();
    for n in 1..chain.dim {
        let r = (chain.down[n - 1] * p.p[n] - chain.up[n - 1] * p.p[n - 1]).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Deformed Boltzmann distribution truncated to the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalDistribution<R> {
    pub populations: PopulationVector<R>,
    /// Truncated partition sum.
    pub partition: R,
    /// Rigorous bound on the mass beyond the basis (infinite when the
    /// level spacings are not known to keep growing).
    pub tail_bound: R,
}

/// `P(n) = exp(-beta e_n)/Z` on the truncated basis, with `e_n` the level
/// energy in units of the mode quantum.
pub fn thermal_distribution<R: Real>(def: &Deformation<R>, mode: &Mode<R>, beta: R) -> Result<ThermalDistribution<R>> {
    if !beta.is_finite() || beta <= R::zero() {
        return Err(Error::Domain(format!("beta must be finite and > 0, got {beta}")));
    }
    let d = mode.dim;
    let half = lit::<R>(0.5);
    let mut structure = Vec::with_capacity(d + 1);
    for n in 0..=d {
        structure.push(def.structure(n)?);
    }
    let mut weights = Vec::with_capacity(d);
    for n in 0..d {
        let e = half * (structure[n + 1] + structure[n]);
        weights.push((-beta * e).exp());
    }
    let partition: R = weights.iter().copied().sum();
    if !partition.is_finite() || partition <= R::zero() {
        return Err(Error::Numerical(format!("partition sum degenerate: {partition}")));
    }
    let p: Vec<R> = weights.iter().map(|w| *w / partition).collect();

    let tail_bound = match def.frequency_shift(d - 1) {
        Ok(top_shift) => {
            let mut growing = true;
            if matches!(def, Deformation::Custom { .. }) {
                let mut prev = (structure[2] - structure[0]) * half;
                for k in 1..d {
                    let shift = if k < d - 1 { (structure[k + 2] - structure[k]) * half } else { top_shift };
                    if shift < prev {
                        growing = false;
                        break;
                    }
                    prev = shift;
                }
            }
            let r = (-beta * top_shift).exp();
            if growing && r < R::one() {
                weights[d - 1] * r / (R::one() - r)
            } else {
                R::infinity()
            }
        }
        Err(Error::Range(_)) => R::infinity(),
        Err(e) => return Err(e),
    };

    Ok(ThermalDistribution { populations: PopulationVector { p, negative_factor: false }, partition, tail_bound })
}

/// Sums the q-deformed partition function until the next term drops below
/// `tol` times the partial sum; returns the sum and a geometric tail
/// bound taken from the last term ratio (valid because the level spacing
/// grows with `n`).
pub fn partition_q<R: Real>(beta: R, tau: R, tol: R) -> Result<(R, R)> {
    if !beta.is_finite() || beta <= R::zero() {
        return Err(Error::Domain(format!("beta must be finite and > 0, got {beta}")));
    }
    if !tol.is_finite() || tol <= R::zero() {
        return Err(Error::Domain(format!("tol must be finite and > 0, got {tol}")));
    }
    let def = Deformation::q(tau)?;
    let half = lit::<R>(0.5);
    let mut f_lo = R::zero();
    let mut f_hi = def.structure(1)?;
    let mut sum = R::zero();
    let mut prev_term = R::zero();
    for n in 0..SERIES_CAP {
        let term = (-beta * half * (f_lo + f_hi)).exp();
        sum = sum + term;
        if n >= 1 && term < tol * sum {
            let r = term / prev_term;
            let tail = term * r / (R::one() - r);
            return Ok((sum, tail));
        }
        prev_term = term;
        f_lo = f_hi;
        f_hi = def.structure(n + 2)?;
    }
    Err(Error::Numerical(format!("partition series did not converge within {SERIES_CAP} terms")))
}

/// Small-deformation expansion of the partition function,
/// `Z_q = Z + b tau^2 + O(tau^4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallTauExpansion<R> {
    pub z: R,
    pub b: R,
    pub z_plus_b_tau2: R,
    pub nbar: R,
    pub nbar2: R,
    pub nbar3: R,
}

fn check_beta_floor<R: Real>(beta: R) -> Result<()> {
    if !beta.is_finite() || beta <= R::zero() {
        return Err(Error::Domain(format!("beta must be finite and > 0, got {beta}")));
    }
    if beta < lit(BETA_FLOOR) {
        return Err(Error::Domain(format!(
            "beta = {beta} is below {BETA_FLOOR}; the moment formulas lose all digits there"
        )));
    }
    Ok(())
}

/// Expansion coefficient `b = -(beta Z / 12)(2 nbar3 + 3 nbar2 + nbar)`
/// built from the geometric occupation moments, evaluated in
/// cancellation-free `expm1` form.
pub fn zq_small_tau<R: Real>(beta: R, tau: R) -> Result<SmallTauExpansion<R>> {
    check_beta_floor(beta)?;
    if !tau.is_finite() || tau < R::zero() {
        return Err(Error::Domain(format!("tau must be finite and >= 0, got {tau}")));
    }
    let half = lit::<R>(0.5);
    let em1 = beta.exp_m1();
    let nbar = em1.recip();
    let nbar2 = nbar + lit::<R>(2.0) * nbar * nbar;
    let nbar3 = nbar + lit::<R>(6.0) * nbar * nbar + lit::<R>(6.0) * nbar * nbar * nbar;
    let z = (lit::<R>(2.0) * (beta * half).sinh()).recip();
    let b = -(beta * z / lit(12.0)) * (lit::<R>(2.0) * nbar3 + lit::<R>(3.0) * nbar2 + nbar);
    Ok(SmallTauExpansion { z, b, z_plus_b_tau2: z + b * tau * tau, nbar, nbar2, nbar3 })
}

/// Equilibrium energy in the small-deformation closed form
/// `E = (omega/2)[coth(beta/2) + tau^2 c]`.
pub fn equilibrium_energy_closed<R: Real>(beta: R, tau: R, omega: R) -> Result<R> {
    check_beta_floor(beta)?;
    if !tau.is_finite() || tau < R::zero() {
        return Err(Error::Domain(format!("tau must be finite and >= 0, got {tau}")));
    }
    let half = lit::<R>(0.5);
    let u = beta.exp_m1().recip();
    let one = R::one();
    let two = lit::<R>(2.0);
    let six = lit::<R>(6.0);
    let c = (u + u * u) * ((one + two * u) - beta * (one + six * u + six * u * u));
    Ok(omega * half * (coth(beta * half) + tau * tau * c))
}

/// Equilibrium energy as the exact thermal average of the deformed
/// spectrum, summed with the same tail control as the partition series;
/// independent oracle for the closed form.
pub fn equilibrium_energy_series<R: Real>(beta: R, tau: R, omega: R, tol: R) -> Result<R> {
    if !beta.is_finite() || beta <= R::zero() {
        return Err(Error::Domain(format!("beta must be finite and > 0, got {beta}")));
    }
    if !tol.is_finite() || tol <= R::zero() {
        return Err(Error::Domain(format!("tol must be finite and > 0, got {tol}")));
    }
    let def = Deformation::q(tau)?;
    let half = lit::<R>(0.5);
    let mut f_lo = R::zero();
    let mut f_hi = def.structure(1)?;
    let mut z_sum = R::zero();
    let mut e_sum = R::zero();
    for n in 0..SERIES_CAP {
        let level = half * (f_lo + f_hi);
        let weight = (-beta * level).exp();
        z_sum = z_sum + weight;
        e_sum = e_sum + level * weight;
        if n >= 1 && weight < tol * z_sum && level * weight < tol * e_sum {
            return Ok(omega * e_sum / z_sum);
        }
        f_lo = f_hi;
        f_hi = def.structure(n + 2)?;
    }
    Err(Error::Numerical(format!("energy series did not converge within {SERIES_CAP} terms")))
}

/// Thermodynamic summary at one `(beta, tau)` point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoResult<R> {
    pub beta: R,
    pub tau: R,
    pub z: R,
    pub z_q: R,
    pub z_q_expansion: R,
    pub b: R,
    pub nbar: R,
    pub nbar2: R,
    pub nbar3: R,
    pub e_closed: R,
    pub e_series: R,
    pub tail_bound: R,
}

/// Evaluates the full thermodynamics layer at one point.
pub fn thermo<R: Real>(beta: R, tau: R, omega: R, tol: R) -> Result<ThermoResult<R>> {
    let expansion = zq_small_tau(beta, tau)?;
    let (z_q, tail_bound) = partition_q(beta, tau, tol)?;
    let e_closed = equilibrium_energy_closed(beta, tau, omega)?;
    let e_series = equilibrium_energy_series(beta, tau, omega, tol)?;
    Ok(ThermoResult {
        beta,
        tau,
        z: expansion.z,
        z_q,
        z_q_expansion: expansion.z_plus_b_tau2,
        b: expansion.b,
        nbar: expansion.nbar,
        nbar2: expansion.nbar2,
        nbar3: expansion.nbar3,
        e_closed,
        e_series,
        tail_bound,
    })
}
