//! Environment models and the dissipative generator in the number basis.
//!
//! The open-system dynamics of the damped deformed oscillator is a linear
//! map on density matrices,
//!
//! ```text
//! drho/dt = -i[H, rho] + dissipator(rho),
//! ```
//!
//! whose coefficients are set by level-dependent diffusion coefficients
//! `D_+(Omega(n))`, `D_-(Omega(n))`, `D_pq(Omega(n))` and a constant damping
//! rate `lambda`. In the number representation every matrix element
//! `rho_{mn}` couples to at most nine others: the same element (phase and
//! loss), `(m+1,n+1)` and `(m-1,n-1)` (quantum jumps), and six
//! counter-rotating couplings weighted by `D_-` and `D_pq` that vanish for
//! a thermal bath.
//!
//! On the truncated basis the ladder operators lose their action out of the
//! top state; carrying that truncation through the dissipator consistently
//! (rather than clamping coefficients) makes the generator exactly trace
//! preserving, and leaves the truncated, renormalized Boltzmann state an
//! exact fixed point for thermal baths.

use num_complex::Complex;

use crate::algebra::{Deformation, Mode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{coth, lit, num, Real};

/// Inverse temperature in units of the mode quantum, `beta = hbar omega / kT`.
///
/// `Infinite` encodes T=0, where every thermal coefficient collapses to
/// `lambda/2` exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta<R> {
    Finite(R),
    Infinite,
}

impl<R: Real> Beta<R> {
    pub fn finite(value: R) -> Result<Self> {
        if !value.is_finite() || value <= R::zero() {
            return Err(Error::Domain(format!("beta must be finite and > 0, got {value}")));
        }
        Ok(Beta::Finite(value))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Beta::Infinite)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Beta::Infinite => Ok(()),
            Beta::Finite(v) => {
                if !v.is_finite() || *v <= R::zero() {
                    Err(Error::Domain(format!("beta must be finite and > 0, got {v}")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Per-level coefficient table: either one value for all levels or an
/// explicit list indexed by level.
#[derive(Clone, Debug, PartialEq)]
pub enum Table<T> {
    Constant(T),
    PerLevel(Vec<T>),
}

impl<T: Copy> Table<T> {
    pub fn value(&self, k: usize) -> Result<T> {
        match self {
            Table::Constant(c) => Ok(*c),
            Table::PerLevel(v) => v.get(k).copied().ok_or_else(|| {
                Error::Range(format!("coefficient table covers levels 0..{}, needed index {k}", v.len()))
            }),
        }
    }
}

fn real_table_finite<R: Real>(t: &Table<R>) -> bool {
    match t {
        Table::Constant(c) => c.is_finite(),
        Table::PerLevel(v) => v.iter().all(|x| x.is_finite()),
    }
}

fn complex_table_finite<R: Real>(t: &Table<Complex<R>>) -> bool {
    match t {
        Table::Constant(c) => c.re.is_finite() && c.im.is_finite(),
        Table::PerLevel(v) => v.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
    }
}

/// Environment coefficient model.
///
/// `Thermal` fixes `D_+(Omega) = (lambda/2) coth(beta Omega / 2)` with
/// `D_- = D_pq = 0`; `Custom` supplies per-level tables directly. The
/// squeezed-bath preset of `Bath::squeezed` is a `Custom` model with
/// constant tables.
#[derive(Clone, Debug, PartialEq)]
pub enum Bath<R> {
    Thermal {
        lambda: R,
        beta: Beta<R>,
    },
    Custom {
        lambda: R,
        d_plus: Table<Complex<R>>,
        d_minus: Table<Complex<R>>,
        d_pq: Table<R>,
    },
}

impl<R: Real> Bath<R> {
    pub fn thermal(lambda: R, beta: Beta<R>) -> Result<Self> {
        let bath = Bath::Thermal { lambda, beta };
        bath.validate()?;
        Ok(bath)
    }

    pub fn custom(lambda: R, d_plus: Table<Complex<R>>, d_minus: Table<Complex<R>>, d_pq: Table<R>) -> Result<Self> {
        let bath = Bath::Custom { lambda, d_plus, d_minus, d_pq };
        bath.validate()?;
        Ok(bath)
    }

    /// Squeezed-bath preset: `D_+ = gamma (nbar + 1/2)` and the combined
    /// counter-rotating coefficient `D_- + i D_pq = -gamma M`, split into a
    /// real `D_-` and a real `D_pq`; the damping rate equals `gamma`.
    pub fn squeezed(gamma: R, nbar: R, m_squeeze: Complex<R>) -> Result<Self> {
        if !gamma.is_finite() || gamma < R::zero() {
            return Err(Error::Domain(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if !nbar.is_finite() || nbar < R::zero() {
            return Err(Error::Domain(format!("nbar must be finite and >= 0, got {nbar}")));
        }
        if !m_squeeze.re.is_finite() || !m_squeeze.im.is_finite() {
            return Err(Error::Domain("squeeze parameter must be finite".into()));
        }
        let half = lit::<R>(0.5);
        Bath::custom(
            gamma,
            Table::Constant(Complex::new(gamma * (nbar + half), R::zero())),
            Table::Constant(Complex::new(-gamma * m_squeeze.re, R::zero())),
            Table::Constant(-gamma * m_squeeze.im),
        )
    }

    pub fn lambda(&self) -> R {
        match self {
            Bath::Thermal { lambda, .. } => *lambda,
            Bath::Custom { lambda, .. } => *lambda,
        }
    }

    fn validate(&self) -> Result<()> {
        let lambda = self.lambda();
        if !lambda.is_finite() || lambda < R::zero() {
            return Err(Error::Domain(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        match self {
            Bath::Thermal { beta, .. } => beta.validate(),
            Bath::Custom { d_plus, d_minus, d_pq, .. } => {
                if !complex_table_finite(d_plus) || !complex_table_finite(d_minus) || !real_table_finite(d_pq) {
                    return Err(Error::Domain("bath coefficient tables must be finite".into()));
                }
                Ok(())
            }
        }
    }
}

/// Thermal diffusion coefficient triple `(D_+(Omega(n)), D_-, D_pq)` with
/// `D_+ = (lambda/2) coth(beta Omega(n)/2)` and `D_- = D_pq = 0`; at T=0
/// the value is `lambda/2` exactly.
pub fn thermal_coefficients<R: Real>(def: &Deformation<R>, bath: &Bath<R>, n: usize) -> Result<(R, R, R)> {
    match bath {
        Bath::Thermal { lambda, beta } => {
            beta.validate()?;
            let half = lit::<R>(0.5);
            let d_plus = match beta {
                Beta::Infinite => *lambda * half,
                Beta::Finite(b) => {
                    let shift = def.frequency_shift(n)?;
                    let value = *lambda * half * coth(*b * shift * half);
                    if !value.is_finite() {
                        return Err(Error::Domain(format!(
                            "thermal coefficient diverges at level {n}: beta*Omega = {}",
                            *b * shift
                        )));
                    }
                    value
                }
            };
            Ok((d_plus, R::zero(), R::zero()))
        }
        Bath::Custom { .. } => Err(Error::UnsupportedModel("thermal coefficients require a thermal bath".into())),
    }
}

/// Thermal diffusion coefficients in coordinate-momentum form,
/// `(D_pp, D_qq, D_pq) = (omega h, h/omega, 0)` with
/// `h = (lambda/2) coth(beta Omega(n)/2)` and `hbar = m = 1`.
pub fn thermal_diffusion_coefficients<R: Real>(
    def: &Deformation<R>,
    bath: &Bath<R>,
    mode: &Mode<R>,
    n: usize,
) -> Result<(R, R, R)> {
    let (h, _, _) = thermal_coefficients(def, bath, n)?;
    Ok((mode.omega * h, h / mode.omega, R::zero()))
}

/// Positivity constraint on the diffusion and damping coefficients:
/// `D_pp > 0`, `D_qq > 0`, and `D_pp D_qq - D_pq^2 >= lambda^2 / 4`
/// (units `hbar = 1`). A model violating it cannot generate a completely
/// positive evolution.
pub fn positivity_check<R: Real>(d_pp: R, d_qq: R, d_pq: R, lambda: R) -> bool {
    let quarter = lit::<R>(0.25);
    d_pp > R::zero() && d_qq > R::zero() && d_pp * d_qq - d_pq * d_pq >= quarter * lambda * lambda
}

/// Complex Hermitian unit-trace positive-semidefinite matrix on the
/// truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<R> {
    matrix: Matrix<Complex<R>>,
}

impl<R: Real> DensityMatrix<R> {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(matrix: Matrix<Complex<R>>) -> Result<Self> {
        let dim = matrix.dim();
        if dim == 0 {
            return Err(Error::Dimension("density matrix must have dim >= 1".into()));
        }
        if !matrix.all_finite() {
            return Err(Error::Domain("density matrix entries must be finite".into()));
        }
        let eps = R::epsilon();
        let tol = lit::<R>(1e-12).max(eps * num(32 * dim));
        let defect = matrix.hermiticity_defect();
        if defect > tol {
            return Err(Error::Domain(format!("density matrix is not Hermitian: defect {defect} > {tol}")));
        }
        let tr = matrix.trace();
        let tr_err = (tr - Complex::new(R::one(), R::zero())).norm();
        if tr_err > tol {
            return Err(Error::Domain(format!("density matrix trace differs from 1 by {tr_err}")));
        }
        let psd_tol = lit::<R>(1e-10).max(eps * num(1024 * dim));
        let min_eig = matrix.min_eigenvalue();
        if min_eig < -psd_tol {
            return Err(Error::Domain(format!(
                "density matrix is not positive semidefinite: min eigenvalue {min_eig}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Pure number state `|n><n|`.
    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Range(format!("fock level {n} outside basis of dimension {dim}")));
        }
        let mut m = Matrix::zeros(dim);
        m.set(n, n, Complex::new(R::one(), R::zero()));
        Ok(DensityMatrix { matrix: m })
    }

    /// Diagonal state from nonnegative weights, normalized to unit trace.
    pub fn from_populations(weights: &[R]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("population vector must not be empty".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < R::zero()) {
            return Err(Error::Domain(format!("populations must be finite and >= 0, got {bad}")));
        }
        let total: R = weights.iter().copied().sum();
        if total <= R::zero() {
            return Err(Error::Domain("populations sum to zero".into()));
        }
        let mut m = Matrix::zeros(weights.len());
        for (n, w) in weights.iter().enumerate() {
            m.set(n, n, Complex::new(*w / total, R::zero()));
        }
        Ok(DensityMatrix { matrix: m })
    }

    /// Wraps a matrix that is already known to satisfy the invariants
    /// (e.g. produced by a unitary phase map of a valid state).
    pub(crate) fn unchecked(matrix: Matrix<Complex<R>>) -> Self {
        DensityMatrix { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix<Complex<R>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<Complex<R>> {
        self.matrix
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex<R> {
        self.matrix.at(m, n)
    }

    /// Real parts of the diagonal (the level populations).
    pub fn populations(&self) -> Vec<R> {
        (0..self.dim()).map(|n| self.matrix.at(n, n).re).collect()
    }

    pub fn trace_error(&self) -> R {
        (self.matrix.trace() - Complex::new(R::one(), R::zero())).norm()
    }
}

/// The dissipative generator assembled on a truncated basis.
///
/// Stores the level energies (absolute units, `omega` included), the
/// coefficient tables `D_+(Omega(k))` and `G_± = D_- ± i D_pq` for
/// `k = 0..dim-2`, and the model it was built from. Application is
/// matrix-free; [`Generator::materialize`] produces an equivalent sparse
/// map with identical arithmetic.
#[derive(Clone, Debug)]
pub struct Generator<R: Real> {
    dim: usize,
    omega: R,
    lambda: R,
    energies: Vec<R>,
    omega_shift: Vec<R>,
    d_plus: Vec<Complex<R>>,
    g_plus: Vec<Complex<R>>,
    g_minus: Vec<Complex<R>>,
    has_g: bool,
    step_bound: R,
    def: Deformation<R>,
    bath: Bath<R>,
    mode: Mode<R>,
}

impl<R: Real> Generator<R> {
    pub fn assemble(def: &Deformation<R>, bath: &Bath<R>, mode: &Mode<R>) -> Result<Self> {
        bath.validate()?;
        let d = mode.dim;
        let half = lit::<R>(0.5);

        let mut structure = Vec::with_capacity(d + 1);
        for n in 0..=d {
            structure.push(def.structure(n)?);
        }
        let energies: Vec<R> = (0..d).map(|n| mode.omega * half * (structure[n + 1] + structure[n])).collect();
        let omega_shift: Vec<R> = (0..d - 1).map(|k| (structure[k + 2] - structure[k]) * half).collect();

        let lambda = bath.lambda();
        let zero = Complex::new(R::zero(), R::zero());
        let mut d_plus = vec![zero; d - 1];
        let mut g_plus = vec![zero; d - 1];
        let mut g_minus = vec![zero; d - 1];
        match bath {
            Bath::Thermal { beta, .. } => match beta {
                Beta::Infinite => {
                    for slot in d_plus.iter_mut() {
                        *slot = Complex::new(lambda * half, R::zero());
                    }
                }
                Beta::Finite(b) => {
                    for k in 0..d - 1 {
                        let value = lambda * half * coth(*b * omega_shift[k] * half);
                        if !value.is_finite() {
                            return Err(Error::Domain(format!(
                                "thermal coefficient diverges at level {k}: beta*Omega = {}",
                                *b * omega_shift[k]
                            )));
                        }
                        d_plus[k] = Complex::new(value, R::zero());
                    }
                }
            },
            Bath::Custom { d_plus: tp, d_minus: tm, d_pq: tq, .. } => {
                for k in 0..d - 1 {
                    let dp = tp.value(k)?;
                    let dm = tm.value(k)?;
                    let dq = tq.value(k)?;
                    d_plus[k] = dp;
                    g_plus[k] = Complex::new(dm.re, dm.im + dq);
                    g_minus[k] = Complex::new(dm.re, dm.im - dq);
                }
            }
        }
        let has_g = g_plus.iter().chain(g_minus.iter()).any(|z| z.re != R::zero() || z.im != R::zero());

        let omega_top = match def.frequency_shift(d - 1) {
            Ok(v) => v,
            Err(Error::Range(_)) => omega_shift[d - 2],
            Err(e) => return Err(e),
        };
        let max_dp = d_plus.iter().map(|z| z.norm()).fold(R::zero(), R::max).max(lambda * half);
        let step_bound = lit::<R>(0.1) / (mode.omega * omega_top + num::<R>(4 * d) * max_dp);

        Ok(Generator {
            dim: d,
            omega: mode.omega,
            lambda,
            energies,
            omega_shift,
            d_plus,
            g_plus,
            g_minus,
            has_g,
            step_bound,
            def: def.clone(),
            bath: bath.clone(),
            mode: *mode,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> R {
        self.omega
    }

    pub fn lambda(&self) -> R {
        self.lambda
    }

    /// Level energies `E_n` in absolute units.
    pub fn energies(&self) -> &[R] {
        &self.energies
    }

    /// `Omega(k)` for `k = 0..dim-2` (dimensionless).
    pub fn omega_shift(&self) -> &[R] {
        &self.omega_shift
    }

    /// `D_+(Omega(k))` for `k = 0..dim-2`.
    pub fn d_plus(&self) -> &[Complex<R>] {
        &self.d_plus
    }

    pub fn deformation(&self) -> &Deformation<R> {
        &self.def
    }

    pub fn bath(&self) -> &Bath<R> {
        &self.bath
    }

    pub fn mode(&self) -> &Mode<R> {
        &self.mode
    }

    /// Largest integration step for which fixed-step RK4 stays in its
    /// stability region on this generator's spectral scale:
    /// `0.1 / (omega Omega(dim-1) + 4 dim max|D_+|)`.
    pub fn step_bound(&self) -> R {
        self.step_bound
    }

    /// Enumerates the nonzero couplings of row `(m, n)` as
    /// `(source index, coefficient)` pairs in a fixed order. Both the
    /// matrix-free application and the sparse materialization use this
    /// enumeration, so their results agree bit for bit.
    #[inline]
    fn row_terms(&self, m: usize, n: usize, mut push: impl FnMut(usize, Complex<R>)) {
        let d = self.dim;
        let la = self.lambda;
        let half = lit::<R>(0.5);

        let mut diag = Complex::new(R::zero(), -(self.energies[m] - self.energies[n]));
        let mut lam_units: i64 = (m + n) as i64;
        if m + 1 < d {
            diag = diag - self.d_plus[m] * num::<R>(m + 1);
            lam_units -= m as i64 + 1;
        }
        if m >= 1 {
            diag = diag - self.d_plus[m - 1] * num::<R>(m);
        }
        if n + 1 < d {
            diag = diag - self.d_plus[n] * num::<R>(n + 1);
            lam_units -= n as i64 + 1;
        }
        if n >= 1 {
            diag = diag - self.d_plus[n - 1] * num::<R>(n);
        }
        let lam_scale = R::from_i64(lam_units).expect("small integer fits in float");
        diag = diag - Complex::new(half * la * lam_scale, R::zero());
        push(m * d + n, diag);

        if m + 1 < d && n + 1 < d {
            let c = num::<R>((m + 1) * (n + 1)).sqrt();
            push((m + 1) * d + (n + 1), (self.d_plus[m] + self.d_plus[n] + la) * c);
        }
        if m >= 1 && n >= 1 {
            let c = num::<R>(m * n).sqrt();
            push((m - 1) * d + (n - 1), (self.d_plus[m - 1] + self.d_plus[n - 1] - la) * c);
        }
        if self.has_g {
            if m + 1 < d && n >= 1 {
                let c = num::<R>((m + 1) * n).sqrt();
                push((m + 1) * d + (n - 1), -(self.g_minus[m] + self.g_minus[n - 1]) * c);
            }
            if m >= 1 && n + 1 < d {
                let c = num::<R>(m * (n + 1)).sqrt();
                push((m - 1) * d + (n + 1), -(self.g_plus[m - 1] + self.g_plus[n]) * c);
            }
            if m + 2 < d {
                let c = num::<R>((m + 1) * (m + 2)).sqrt();
                push((m + 2) * d + n, self.g_minus[m + 1] * c);
            }
            if m >= 2 {
                let c = num::<R>(m * (m - 1)).sqrt();
                push((m - 2) * d + n, self.g_plus[m - 2] * c);
            }
            if n + 2 < d {
                let c = num::<R>((n + 1) * (n + 2)).sqrt();
                push(m * d + (n + 2), self.g_plus[n + 1] * c);
            }
            if n >= 2 {
                let c = num::<R>(n * (n - 1)).sqrt();
                push(m * d + (n - 2), self.g_minus[n - 2] * c);
            }
        }
    }

    /// Applies the generator without materializing it, writing `drho/dt`
    /// into `out`.
    pub fn apply_into(&self, rho: &Matrix<Complex<R>>, out: &mut Matrix<Complex<R>>) -> Result<()> {
        if rho.dim() != self.dim || out.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "generator dimension {} does not match state dimension {}",
                self.dim,
                rho.dim()
            )));
        }
        let x = rho.data();
        let y = out.data_mut();
        let d = self.dim;
        for m in 0..d {
            for n in 0..d {
                let mut acc = Complex::new(R::zero(), R::zero());
                self.row_terms(m, n, |col, coeff| acc = acc + coeff * x[col]);
                y[m * d + n] = acc;
            }
        }
        Ok(())
    }

    pub fn apply(&self, rho: &Matrix<Complex<R>>) -> Result<Matrix<Complex<R>>> {
        let mut out = Matrix::zeros(self.dim);
        self.apply_into(rho, &mut out)?;
        Ok(out)
    }

    /// Materializes the generator as a sparse map over the vectorized
    /// index `m*dim + n`, at most nine entries per row.
    pub fn materialize(&self) -> SparseGenerator<R> {
        let d = self.dim;
        let mut row_ptr = Vec::with_capacity(d * d + 1);
        let mut cols = Vec::with_capacity(d * d * 9);
        let mut vals = Vec::with_capacity(d * d * 9);
        row_ptr.push(0);
        for m in 0..d {
            for n in 0..d {
                self.row_terms(m, n, |col, coeff| {
                    cols.push(col);
                    vals.push(coeff);
                });
                row_ptr.push(cols.len());
            }
        }
        SparseGenerator { dim: d, row_ptr, cols, vals }
    }
}

/// Compressed sparse rows over the vectorized density matrix.
#[derive(Clone, Debug)]
pub struct SparseGenerator<R> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex<R>>,
}

impl<R: Real> SparseGenerator<R> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply_into(&self, rho: &Matrix<Complex<R>>, out: &mut Matrix<Complex<R>>) -> Result<()> {
        if rho.dim() != self.dim || out.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "generator dimension {} does not match state dimension {}",
                self.dim,
                rho.dim()
            )));
        }
        let x = rho.data();
        let y = out.data_mut();
        for r in 0..self.dim * self.dim {
            let mut acc = Complex::new(R::zero(), R::zero());
            for j in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + self.vals[j] * x[self.cols[j]];
            }
            y[r] = acc;
        }
        Ok(())
    }

    pub fn apply(&self, rho: &Matrix<Complex<R>>) -> Result<Matrix<Complex<R>>> {
        let mut out = Matrix::zeros(self.dim);
        self.apply_into(rho, &mut out)?;
        Ok(out)
    }

    /// Sums, for every source column, the coefficients it contributes to
    /// the trace functional (the diagonal destination rows); all sums
    /// vanish for a trace-preserving map.
    pub fn trace_column_sums(&self) -> Vec<Complex<R>> {
        let d = self.dim;
        let mut sums = vec![Complex::new(R::zero(), R::zero()); d * d];
        for m in 0..d {
            let r = m * d + m;
            for j in self.row_ptr[r]..self.row_ptr[r + 1] {
                sums[self.cols[j]] = sums[self.cols[j]] + self.vals[j];
            }
        }
        sums
    }
}
