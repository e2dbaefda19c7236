//! Small dense square matrices in row-major storage.
//!
//! Number-basis operators here are at most a few thousand entries, so a flat
//! `Vec` with explicit indexing beats pulling in a linear-algebra stack. The
//! complex specialization carries the handful of Hermitian-matrix utilities
//! the rest of the crate needs (trace, Hermiticity defect, smallest
//! eigenvalue).

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::{lit, Real};

/// Square matrix over `T`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Copy + Zero> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for m in 0..dim {
            for n in 0..dim {
                data.push(f(m, n));
            }
        }
        Matrix { dim, data }
    }

    /// Builds a matrix from row-major data of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<T>) -> Option<Self> {
        if dim * dim != data.len() {
            return None;
        }
        Some(Matrix { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, m: usize, n: usize) -> T {
        self.data[m * self.dim + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: T) {
        self.data[m * self.dim + n] = v;
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill_zero(&mut self) {
        for v in &mut self.data {
            *v = T::zero();
        }
    }
}

impl<R: Real> Matrix<Complex<R>> {
    pub fn trace(&self) -> Complex<R> {
        let mut t = Complex::zero();
        for k in 0..self.dim {
            t += self.at(k, k);
        }
        t
    }

    /// Largest entry magnitude, in the max norm.
    pub fn max_abs(&self) -> R {
        let mut m = R::zero();
        for v in &self.data {
            m = m.max(v.norm());
        }
        m
    }

    /// Max-norm distance from the matrix to its own adjoint.
    pub fn hermiticity_defect(&self) -> R {
        let mut worst = R::zero();
        for m in 0..self.dim {
            for n in m..self.dim {
                let d = (self.at(m, n) - self.at(n, m).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `self += c * other`; both matrices must share a dimension.
    pub fn scaled_add(&mut self, c: Complex<R>, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * *b;
        }
    }

    /// Smallest eigenvalue of the Hermitian part `(A + A†)/2`.
    ///
    /// Bisects on the shift `mu` using a Cholesky positive-definiteness
    /// probe of `H - mu I`, bracketed by Gershgorin bounds. Accuracy is on
    /// the order of `1e-13 * scale`, plenty for positivity diagnostics.
    pub fn min_eigenvalue(&self) -> R {
        let d = self.dim;
        if d == 0 {
            return R::zero();
        }
        let h = self.hermitian_part();
        let (mut lo, mut hi) = h.gershgorin_bounds();
        let scale = lo.abs().max(hi.abs()).max(R::one());
        // Widen so the invariant "PD at lo, not PD at hi" holds at the start.
        lo = lo - scale * lit(1e-12) - R::one();
        hi = hi + scale * lit(1e-12) + R::one();
        let tol = scale * lit(1e-13);
        let half = lit::<R>(0.5);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = (lo + hi) * half;
            if h.is_pd_shifted(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) * half
    }

    pub fn hermitian_part(&self) -> Self {
        let half = lit::<R>(0.5);
        Matrix::from_fn(self.dim, |m, n| (self.at(m, n) + self.at(n, m).conj()) * half)
    }

    fn gershgorin_bounds(&self) -> (R, R) {
        let mut lo = R::infinity();
        let mut hi = R::neg_infinity();
        for m in 0..self.dim {
            let center = self.at(m, m).re;
            let mut radius = R::zero();
            for n in 0..self.dim {
                if n != m {
                    radius = radius + self.at(m, n).norm();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }

    /// Attempts a Cholesky factorization of `self - mu I`; success certifies
    /// positive definiteness. Only the lower triangle is referenced.
    fn is_pd_shifted(&self, mu: R) -> bool {
        let d = self.dim;
        let mut l = vec![Complex::<R>::zero(); d * d];
        for j in 0..d {
            let mut s = self.at(j, j).re - mu;
            for k in 0..j {
                s = s - l[j * d + k].norm_sqr();
            }
            if s <= R::zero() || !s.is_finite() {
                return false;
            }
            let ljj = s.sqrt();
            l[j * d + j] = Complex::new(ljj, R::zero());
            for i in (j + 1)..d {
                let mut v = self.at(i, j);
                for k in 0..j {
                    v = v - l[i * d + k] * l[j * d + k].conj();
                }
                l[i * d + j] = v / ljj;
            }
        }
        true
    }
}
