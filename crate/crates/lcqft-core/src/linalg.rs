//! Small dense linear algebra over `Complex64` and `f64`.
//!
//! Everything here is sized for the rest of the crate: fixed 4x4 complex
//! matrices for gamma matrices and Lorentz transforms, heap matrices up to a
//! few hundred rows for Gram systems and truncated Fock operators, Jacobi
//! eigensolvers, LU factorizations, Gauss-Hermite rules, and a dense phase-1
//! simplex used for conic feasibility certificates.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
// Inherent f64 methods only exist with std; the trait fills in under no_std.
#[allow(unused_imports)]
use num_traits::Float;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Fixed 4x4 complex matrix, the workhorse for gamma matrices, spin group
/// elements, and frame-indexed Lorentz transforms promoted to spinor space.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct M4(pub [[Complex64; 4]; 4]);

/// Complex 4-component column vector (a spinor value at a point).
pub type V4 = [Complex64; 4];

pub const V4_ZERO: V4 = [Complex64::new(0.0, 0.0); 4];

impl M4 {
    pub fn zero() -> M4 {
        M4([[cr(0.0); 4]; 4])
    }

    pub fn id() -> M4 {
        let mut m = M4::zero();
        for i in 0..4 {
            m.0[i][i] = cr(1.0);
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Complex64) -> M4 {
        let mut m = M4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(r: &[[f64; 4]; 4]) -> M4 {
        M4::from_fn(|i, j| cr(r[i][j]))
    }

    pub fn add(&self, o: &M4) -> M4 {
        M4::from_fn(|i, j| self.0[i][j] + o.0[i][j])
    }

    pub fn sub(&self, o: &M4) -> M4 {
        M4::from_fn(|i, j| self.0[i][j] - o.0[i][j])
    }

    pub fn neg(&self) -> M4 {
        M4::from_fn(|i, j| -self.0[i][j])
    }

    pub fn scale(&self, s: Complex64) -> M4 {
        M4::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn scale_re(&self, s: f64) -> M4 {
        self.scale(cr(s))
    }

    pub fn mul(&self, o: &M4) -> M4 {
        let mut m = M4::zero();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == cr(0.0) {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] += a * o.0[k][j];
                }
            }
        }
        m
    }

    pub fn transpose(&self) -> M4 {
        M4::from_fn(|i, j| self.0[j][i])
    }

    pub fn conj(&self) -> M4 {
        M4::from_fn(|i, j| self.0[i][j].conj())
    }

    /// Conjugate transpose.
    pub fn adj(&self) -> M4 {
        M4::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn tr(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2] + self.0[3][3]
    }

    pub fn apply(&self, v: &V4) -> V4 {
        let mut w = V4_ZERO;
        for i in 0..4 {
            for j in 0..4 {
                w[i] += self.0[i][j] * v[j];
            }
        }
        w
    }

    /// Row vector times matrix: `(v M)_j`.
    pub fn apply_left(&self, v: &V4) -> V4 {
        let mut w = V4_ZERO;
        for j in 0..4 {
            for i in 0..4 {
                w[j] += v[i] * self.0[i][j];
            }
        }
        w
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += self.0[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max(self.0[i][j].norm());
            }
        }
        m
    }

    pub fn commutator(&self, o: &M4) -> M4 {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn anticommutator(&self, o: &M4) -> M4 {
        self.mul(o).add(&o.mul(self))
    }

    /// Determinant via partial-pivot LU on a local copy.
    pub fn det(&self) -> Complex64 {
        let mut a = self.0;
        let mut det = cr(1.0);
        for k in 0..4 {
            let mut p = k;
            for r in k + 1..4 {
                if a[r][k].norm() > a[p][k].norm() {
                    p = r;
                }
            }
            if a[p][k].norm() == 0.0 {
                return cr(0.0);
            }
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            det *= a[k][k];
            for r in k + 1..4 {
                let f = a[r][k] / a[k][k];
                for cidx in k..4 {
                    a[r][cidx] = a[r][cidx] - f * a[k][cidx];
                }
            }
        }
        det
    }

    /// Inverse via Gauss-Jordan with partial pivoting. `None` when the pivot
    /// collapses below 1e-300 in magnitude.
    pub fn inv(&self) -> Option<M4> {
        let mut a = self.0;
        let mut b = M4::id().0;
        for k in 0..4 {
            let mut p = k;
            for r in k + 1..4 {
                if a[r][k].norm() > a[p][k].norm() {
                    p = r;
                }
            }
            if a[p][k].norm() < 1e-300 {
                return None;
            }
            a.swap(p, k);
            b.swap(p, k);
            let piv = a[k][k];
            for j in 0..4 {
                a[k][j] /= piv;
                b[k][j] /= piv;
            }
            for r in 0..4 {
                if r == k {
                    continue;
                }
                let f = a[r][k];
                if f == cr(0.0) {
                    continue;
                }
                for j in 0..4 {
                    a[r][j] = a[r][j] - f * a[k][j];
                    b[r][j] = b[r][j] - f * b[k][j];
                }
            }
        }
        Some(M4(b))
    }

    pub fn to_cmat(&self) -> CMat {
        let mut m = CMat::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                *m.at_mut(i, j) = self.0[i][j];
            }
        }
        m
    }

    /// Matrix exponential by scaling and squaring with a Taylor kernel.
    pub fn exp(&self) -> M4 {
        let norm = self.norm();
        let mut s = 0u32;
        let mut scaled = *self;
        if norm > 0.5 {
            s = (norm / 0.5).log2().ceil() as u32;
            scaled = self.scale_re(0.5f64.powi(s as i32));
        }
        let mut sum = M4::id();
        let mut term = M4::id();
        for k in 1..=24 {
            term = term.mul(&scaled).scale_re(1.0 / k as f64);
            sum = sum.add(&term);
        }
        for _ in 0..s {
            sum = sum.mul(&sum);
        }
        sum
    }
}

/// Heap-allocated dense complex matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> CMat {
        CMat {
            rows,
            cols,
            a: vec![cr(0.0); rows * cols],
        }
    }

    pub fn id(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = cr(1.0);
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.a[i * self.cols + j]
    }

    pub fn add(&self, o: &CMat) -> CMat {
        debug_assert!(self.rows == o.rows && self.cols == o.cols);
        let mut m = self.clone();
        for (x, y) in m.a.iter_mut().zip(o.a.iter()) {
            *x += *y;
        }
        m
    }

    pub fn sub(&self, o: &CMat) -> CMat {
        debug_assert!(self.rows == o.rows && self.cols == o.cols);
        let mut m = self.clone();
        for (x, y) in m.a.iter_mut().zip(o.a.iter()) {
            *x -= *y;
        }
        m
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        let mut m = self.clone();
        for x in m.a.iter_mut() {
            *x *= s;
        }
        m
    }

    pub fn mul(&self, o: &CMat) -> CMat {
        debug_assert_eq!(self.cols, o.rows);
        let mut m = CMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self.at(i, k);
                if v == cr(0.0) {
                    continue;
                }
                for j in 0..o.cols {
                    m.a[i * o.cols + j] += v * o.a[k * o.cols + j];
                }
            }
        }
        m
    }

    pub fn adj(&self) -> CMat {
        let mut m = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *m.at_mut(j, i) = self.at(i, j).conj();
            }
        }
        m
    }

    pub fn tr(&self) -> Complex64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(self.cols, v.len());
        let mut w = vec![cr(0.0); self.rows];
        for i in 0..self.rows {
            let mut s = cr(0.0);
            for j in 0..self.cols {
                s += self.at(i, j) * v[j];
            }
            w[i] = s;
        }
        w
    }

    pub fn to_m4(&self) -> M4 {
        debug_assert!(self.rows == 4 && self.cols == 4);
        M4::from_fn(|i, j| self.at(i, j))
    }

    /// Solve `self * x = b` by LU with partial pivoting. `None` when a pivot
    /// falls below 1e-300.
    pub fn solve(&self, b: &[Complex64]) -> Option<Vec<Complex64>> {
        let n = self.rows;
        debug_assert_eq!(n, self.cols);
        debug_assert_eq!(n, b.len());
        let mut a = self.a.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut p = k;
            for r in k + 1..n {
                if a[r * n + k].norm() > a[p * n + k].norm() {
                    p = r;
                }
            }
            if a[p * n + k].norm() < 1e-300 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(p * n + j, k * n + j);
                }
                x.swap(p, k);
            }
            for r in k + 1..n {
                let f = a[r * n + k] / a[k * n + k];
                if f == cr(0.0) {
                    continue;
                }
                for j in k..n {
                    let v = a[k * n + j];
                    a[r * n + j] -= f * v;
                }
                let xv = x[k];
                x[r] -= f * xv;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= a[k * n + j] * x[j];
            }
            x[k] = s / a[k * n + k];
        }
        Some(x)
    }

    /// Matrix exponential, scaling and squaring with a Taylor kernel.
    pub fn expm(&self) -> CMat {
        debug_assert_eq!(self.rows, self.cols);
        let norm = self.norm();
        let mut s = 0u32;
        let mut scaled = self.clone();
        if norm > 0.5 {
            s = (norm / 0.5).log2().ceil() as u32;
            scaled = self.scale(cr(0.5f64.powi(s as i32)));
        }
        let mut sum = CMat::id(self.rows);
        let mut term = CMat::id(self.rows);
        for k in 1..=24 {
            term = term.mul(&scaled).scale(cr(1.0 / k as f64));
            sum = sum.add(&term);
        }
        for _ in 0..s {
            sum = sum.mul(&sum);
        }
        sum
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues ascending and the matching unitary columns.
/// The input is trusted to be Hermitian; only its lower triangle times the
/// conjugate upper triangle average is read.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.rows;
    debug_assert_eq!(n, m.cols);
    let mut a = m.clone();
    // Symmetrize defensively so roundoff in the caller cannot break the sweep.
    for i in 0..n {
        for j in 0..n {
            let v = (a.at(i, j) + a.at(j, i).conj()) * cr(0.5);
            *a.at_mut(i, j) = v;
        }
    }
    let mut v = CMat::id(n);
    let base: f64 = a.norm().max(1e-300);
    for _sweep in 0..120 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a.at(i, j).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * base {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.at(p, q);
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let phi = apq / cr(apq.norm());
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                // Columns p,q of A and V: right-multiply by the rotation.
                for i in 0..n {
                    let aip = a.at(i, p);
                    let aiq = a.at(i, q);
                    *a.at_mut(i, p) = aip * cr(cth) - aiq * phi.conj() * cr(sth);
                    *a.at_mut(i, q) = aip * phi * cr(sth) + aiq * cr(cth);
                    let vip = v.at(i, p);
                    let viq = v.at(i, q);
                    *v.at_mut(i, p) = vip * cr(cth) - viq * phi.conj() * cr(sth);
                    *v.at_mut(i, q) = vip * phi * cr(sth) + viq * cr(cth);
                }
                // Rows p,q: left-multiply by the adjoint rotation.
                for j in 0..n {
                    let apj = a.at(p, j);
                    let aqj = a.at(q, j);
                    *a.at_mut(p, j) = apj * cr(cth) - aqj * phi * cr(sth);
                    *a.at_mut(q, j) = apj * phi.conj() * cr(sth) + aqj * cr(cth);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(evals[src]);
        for i in 0..n {
            *vecs.at_mut(i, dst) = v.at(i, src);
        }
    }
    (vals, vecs)
}

/// Eigendecomposition of a real symmetric matrix (row-major `n*n` slice) by
/// cyclic Jacobi. Returns eigenvalues ascending and orthonormal columns.
pub fn sym_eig(n: usize, m: &[f64]) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(m.len(), n * n);
    let mut a = m.to_vec();
    for i in 0..n {
        for j in 0..n {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let base: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..120 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-15 * base {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = cth * aip - sth * aiq;
                    a[i * n + q] = sth * aip + cth * aiq;
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = cth * vip - sth * viq;
                    v[i * n + q] = sth * vip + cth * viq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = cth * apj - sth * aqj;
                    a[q * n + j] = sth * apj + cth * aqj;
                }
            }
        }
    }
    let evals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let mut vals = Vec::with_capacity(n);
    let mut vecs = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        vals.push(evals[src]);
        for i in 0..n {
            vecs[i * n + dst] = v[i * n + src];
        }
    }
    (vals, vecs)
}

/// Real LU with partial pivoting. Returns the determinant and leaves the
/// inverse in `out` when requested; `None` when a pivot is below 1e-300.
pub fn real_inv(n: usize, m: &[f64]) -> Option<(f64, Vec<f64>)> {
    let mut a = m.to_vec();
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        b[i * n + i] = 1.0;
    }
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        for r in k + 1..n {
            if a[r * n + k].abs() > a[p * n + k].abs() {
                p = r;
            }
        }
        if a[p * n + k].abs() < 1e-300 {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.swap(p * n + j, k * n + j);
                b.swap(p * n + j, k * n + j);
            }
            det = -det;
        }
        let piv = a[k * n + k];
        det *= piv;
        for j in 0..n {
            a[k * n + j] /= piv;
            b[k * n + j] /= piv;
        }
        for r in 0..n {
            if r == k {
                continue;
            }
            let f = a[r * n + k];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r * n + j] -= f * a[k * n + j];
                b[r * n + j] -= f * b[k * n + j];
            }
        }
    }
    Some((det, b))
}

pub fn real_det(n: usize, m: &[f64]) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        for r in k + 1..n {
            if a[r * n + k].abs() > a[p * n + k].abs() {
                p = r;
            }
        }
        if a[p * n + k].abs() < 1e-300 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                a.swap(p * n + j, k * n + j);
            }
            det = -det;
        }
        det *= a[k * n + k];
        for r in k + 1..n {
            let f = a[r * n + k] / a[k * n + k];
            for j in k..n {
                a[r * n + j] -= f * a[k * n + j];
            }
        }
    }
    det
}

/// Gauss-Hermite rule with `n` nodes for the weight `exp(-x^2)` on the real
/// line, computed by Golub-Welsch on the Jacobi matrix. Exact for
/// polynomials of degree `2n-1`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut j = vec![0.0; n * n];
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k - 1) * n + k] = b;
        j[k * n + (k - 1)] = b;
    }
    let (nodes, vecs) = sym_eig(n, &j);
    let sqrt_pi = core::f64::consts::PI.sqrt();
    let weights: Vec<f64> = (0..n).map(|i| sqrt_pi * vecs[i] * vecs[i]).collect();
    (nodes, weights)
}

/// Gauss-Legendre rule with `n` nodes on `[-1, 1]` (weight 1), by
/// Golub-Welsch on the Legendre Jacobi matrix. Exact for polynomials of
/// degree `2n-1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut j = vec![0.0; n * n];
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        j[(k - 1) * n + k] = b;
        j[k * n + (k - 1)] = b;
    }
    let (nodes, vecs) = sym_eig(n, &j);
    let weights: Vec<f64> = (0..n).map(|i| 2.0 * vecs[i] * vecs[i]).collect();
    (nodes, weights)
}

/// Outcome of a conic feasibility run: either a certificate `x >= 0` with
/// `A x = b` (within `tol`) or a report that phase 1 stalled with positive
/// artificial mass.
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible { residual: f64 },
}

/// Phase-1 dense simplex for `A x = b, x >= 0` with `A` of shape `m x n`
/// (row-major). Artificial variables seed the basis; Bland's rule prevents
/// cycling, and the tableau is periodically refactorized from the original
/// data so elimination roundoff cannot accumulate into the verdict.
/// Intended for small systems (tens of columns).
pub fn simplex_feasible(m: usize, n: usize, a: &[f64], b: &[f64], tol: f64) -> Feasibility {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), m);
    let total = n + m;
    // Tableau rows: m constraint rows then the phase-1 objective row.
    // Columns: n real vars, m artificials, rhs.
    let w = total + 1;

    // Sign-normalized copies with b >= 0. These stay untouched: every
    // refactorization rebuilds the working tableau from them.
    let mut fa = vec![0.0; m * n];
    let mut fb = vec![0.0; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            fa[i * n + j] = flip * a[i * n + j];
        }
        fb[i] = flip * b[i];
    }
    // Column j of [A | I].
    let col = |j: usize, i: usize| {
        if j < n {
            fa[i * n + j]
        } else if i + n == j {
            1.0
        } else {
            0.0
        }
    };

    let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
    let mut t = vec![0.0; (m + 1) * w];

    // Rebuild the tableau for the current basis: invert the basis matrix by
    // Gauss-Jordan with partial pivoting, apply the inverse to [A | I | b],
    // and restate the phase-1 objective as minus the sum of rows whose basic
    // variable is artificial, with basic columns zeroed exactly. Artificial
    // columns then carry an offset of -1 against their true reduced cost,
    // which is harmless because artificials never re-enter. Returns false on
    // a singular basis matrix, leaving the working tableau alone.
    let refactor = |basis: &[usize], t: &mut [f64]| -> bool {
        let mut mat = vec![0.0; m * m];
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            for (k, &bj) in basis.iter().enumerate() {
                mat[i * m + k] = col(bj, i);
            }
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let mut p = k;
            for r in k + 1..m {
                if mat[r * m + k].abs() > mat[p * m + k].abs() {
                    p = r;
                }
            }
            if mat[p * m + k].abs() < 1e-13 {
                return false;
            }
            if p != k {
                for j in 0..m {
                    mat.swap(p * m + j, k * m + j);
                    inv.swap(p * m + j, k * m + j);
                }
            }
            let piv = mat[k * m + k];
            for j in 0..m {
                mat[k * m + j] /= piv;
                inv[k * m + j] /= piv;
            }
            for r in 0..m {
                if r == k {
                    continue;
                }
                let f = mat[r * m + k];
                if f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    mat[r * m + j] -= f * mat[k * m + j];
                    inv[r * m + j] -= f * inv[k * m + j];
                }
            }
        }
        for i in 0..m {
            for j in 0..total {
                let mut s = 0.0;
                for k in 0..m {
                    s += inv[i * m + k] * col(j, k);
                }
                t[i * w + j] = s;
            }
            let mut s = 0.0;
            for k in 0..m {
                s += inv[i * m + k] * fb[k];
            }
            t[i * w + total] = s;
        }
        for j in 0..w {
            let mut s = 0.0;
            for i in 0..m {
                if basis[i] >= n {
                    s += t[i * w + j];
                }
            }
            t[m * w + j] = -s;
        }
        for &bj in basis {
            t[m * w + bj] = 0.0;
        }
        true
    };

    refactor(&basis, &mut t);
    let mut pivots = 20000usize;
    let mut idle_rounds = 0usize;
    'rounds: for _ in 0..2000 {
        // A run of Bland pivots on the working tableau. Artificials never
        // re-enter, so entering candidates are the real columns only.
        let mut moved = false;
        for _ in 0..32 {
            if pivots == 0 {
                break 'rounds;
            }
            // Bland: entering column = lowest index with negative reduced
            // cost.
            let mut enter = None;
            for j in 0..n {
                if t[m * w + j] < -1e-12 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(e) = enter else { break };
            let mut leave = None;
            let mut best = f64::INFINITY;
            for i in 0..m {
                let coeff = t[i * w + e];
                if coeff > 1e-12 {
                    let ratio = t[i * w + total] / coeff;
                    if ratio < best - 1e-12
                        || (ratio < best + 1e-12
                            && leave.map_or(true, |l: usize| basis[i] < basis[l]))
                    {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(l) = leave else { break };
            let piv = t[l * w + e];
            for j in 0..w {
                t[l * w + j] /= piv;
            }
            for i in 0..=m {
                if i == l {
                    continue;
                }
                let f = t[i * w + e];
                if f == 0.0 {
                    continue;
                }
                for j in 0..w {
                    t[i * w + j] -= f * t[l * w + j];
                }
            }
            basis[l] = e;
            pivots -= 1;
            moved = true;
        }
        // Refresh from the original data and decide on honest numbers.
        refactor(&basis, &mut t);
        if (0..n).all(|j| t[m * w + j] >= -1e-12) {
            break;
        }
        // A pivot-free round repeating on a refreshed tableau cannot make
        // progress; stop rather than spin.
        idle_rounds = if moved { 0 } else { idle_rounds + 1 };
        if idle_rounds >= 2 {
            break;
        }
    }
    // Normal exits leave a freshly refactored tableau; after budget
    // exhaustion this restores one so the verdict reads from original data.
    refactor(&basis, &mut t);
    let mut residual = 0.0;
    for i in 0..m {
        if basis[i] >= n {
            residual += t[i * w + total].abs();
        }
    }
    if residual <= tol {
        let mut x = vec![0.0; n];
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = t[i * w + total].max(0.0);
            }
        }
        Feasibility::Feasible(x)
    } else {
        Feasibility::Infeasible { residual }
    }
}
