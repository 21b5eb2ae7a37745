//! Dense complex linear algebra for small square matrices.
//!
//! Everything here is sized for `n ≤ 8`: plain row-major storage, cyclic
//! Jacobi for Hermitian eigenproblems and partial-pivoting LU for
//! determinants.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{NrError, Result};
use crate::scalar::{cx, Cx, Real};

/// Iteration cap for the Jacobi eigensolver, in full sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative off-diagonal threshold for Jacobi convergence.
pub const JACOBI_OFF_TOL: f64 = 1e-14;
/// Default relative tolerance of [`is_nilpotent`].
pub const NILPOTENT_TOL: f64 = 1e-10;

/// Dense `dim × dim` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexSquareMatrix<T: Real> {
    dim: usize,
    entries: Vec<Cx<T>>,
}

impl<T: Real> ComplexSquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            entries: vec![Cx::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Cx::one();
        }
        m
    }

    /// Builds a matrix from row-major entries; fails unless `entries.len() == dim²`.
    pub fn from_row_major(dim: usize, entries: Vec<Cx<T>>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(NrError::Shape(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(NrError::Shape("matrix has no rows".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(NrError::Shape(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { dim, entries })
    }

    /// Builds a real matrix from nested rows of reals.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cr: Vec<Vec<Cx<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| cx(x, T::zero())).collect())
            .collect();
        Self::from_rows(&cr)
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(values: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Upper shift (Jordan block with zero eigenvalue): ones on the superdiagonal.
    pub fn jordan_block(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim.saturating_sub(1) {
            m.set(i, i + 1, Cx::one());
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: Cx<T>) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[Cx<T>] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&a| a * s).collect(),
        }
    }

    /// `A + s·I`.
    pub fn shift(&self, s: Cx<T>) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.entries[i * self.dim + i] += s;
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.dim).map(|i| self.get(i, i)).fold(Cx::zero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Spectral norm `‖A‖₂ = √λ_max(A*A)`.
    pub fn operator_norm(&self) -> T {
        let gram = HermitianMatrix::from_matrix(&self.adjoint().mul(self));
        match eig_hermitian(&gram) {
            Ok(e) => e.values.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt(),
            Err(_) => self.frobenius_norm(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// True when every entry on or below the diagonal is exactly zero.
    pub fn is_strictly_upper_triangular(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..=i).all(|j| self.get(i, j).is_zero()))
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im.is_zero())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Quadratic form `⟨A ξ, ξ⟩ = ξ* A ξ`.
    pub fn quadratic_form(&self, xi: &[Cx<T>]) -> Cx<T> {
        let n = self.dim;
        let mut acc = Cx::zero();
        for i in 0..n {
            let mut row = Cx::zero();
            for j in 0..n {
                row += self.get(i, j) * xi[j];
            }
            acc += xi[i].conj() * row;
        }
        acc
    }

    /// `U* A U`.
    pub fn unitary_similarity(&self, u: &Self) -> Self {
        u.adjoint().mul(self).mul(u)
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> Cx<T> {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut det = Cx::<T>::one();
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].norm();
            for r in (col + 1)..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best.is_zero() {
                return Cx::zero();
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in (col + 1)..n {
                let f = a[r * n + col] / p;
                if f.is_zero() {
                    continue;
                }
                for j in (col + 1)..n {
                    let t = a[col * n + j];
                    a[r * n + j] -= f * t;
                }
            }
        }
        det
    }
}

/// Hermitian matrix; symmetrized on construction so `h[i][j] = conj(h[j][i])` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T: Real> {
    inner: ComplexSquareMatrix<T>,
}

impl<T: Real> HermitianMatrix<T> {
    /// Takes the Hermitian part `(M + M*)/2` of `m`.
    pub fn from_matrix(m: &ComplexSquareMatrix<T>) -> Self {
        let n = m.dim();
        let half = T::lit(0.5);
        let mut out = ComplexSquareMatrix::zeros(n);
        for i in 0..n {
            out.set(i, i, cx(m.get(i, i).re, T::zero()));
            for j in (i + 1)..n {
                let v = (m.get(i, j) + m.get(j, i).conj()) * half;
                out.set(i, j, v);
                out.set(j, i, v.conj());
            }
        }
        Self { inner: out }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: ComplexSquareMatrix::zeros(dim),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &ComplexSquareMatrix<T> {
        &self.inner
    }

    /// `a·self + b·other + c·I` for real `a, b, c` (the Hermitian pencil).
    pub fn pencil(&self, a: T, other: &Self, b: T, c: T) -> ComplexSquareMatrix<T> {
        let n = self.dim();
        let mut out = ComplexSquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut v = self.get(i, j) * a + other.get(i, j) * b;
                if i == j {
                    v += cx(c, T::zero());
                }
                out.set(i, j, v);
            }
        }
        out
    }

    /// `a·self + b·other`, Hermitian again.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        Self {
            inner: self.pencil(a, other, b, T::zero()),
        }
    }
}

/// Splits `A = H + iK` into `H = (A + A*)/2` and `K = (A − A*)/(2i)`.
pub fn hermitian_parts<T: Real>(a: &ComplexSquareMatrix<T>) -> (HermitianMatrix<T>, HermitianMatrix<T>) {
    let h = HermitianMatrix::from_matrix(a);
    // K = Re(-i A)
    let k = HermitianMatrix::from_matrix(&a.scale(cx(T::zero(), -T::one())));
    (h, k)
}

/// Output of [`eig_hermitian`]: ascending eigenvalues and matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<Cx<T>>>,
    pub sweeps: usize,
}

/// Cyclic complex Jacobi eigensolver for small Hermitian matrices.
pub fn eig_hermitian<T: Real>(h: &HermitianMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = h.dim();
    let mut a: Vec<Cx<T>> = h.as_matrix().entries().to_vec();
    let mut v: Vec<Cx<T>> = ComplexSquareMatrix::<T>::identity(n).entries().to_vec();

    let scale = a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let thresh = T::tol_floor(JACOBI_OFF_TOL, 4.0) * scale;
    let off = |a: &[Cx<T>]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > thresh {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NrError::NonConvergence {
                routine: "jacobi",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                if g.is_zero() {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // real symmetric rotation on [[app, g], [g, aqq]], then undo the phase
                let theta = (aqq - app) / (g + g);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (theta * theta + T::one()).sqrt())
                } else {
                    -T::one() / (-theta + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let ph = apq / g; // e^{iα}
                // J = P·R·P* with P = diag(1, e^{-iα}) and R the real rotation
                // [[c, s], [-s, c]]; J*·A·J zeroes the (p, q) entry.
                let jpp = cx(c, T::zero());
                let jpq = ph * s;
                let jqp = cx(-s, T::zero()) * ph.conj();
                let jqq = cx(c, T::zero());
                // columns: A ← A J
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * jpp + akq * jqp;
                    a[k * n + q] = akp * jpq + akq * jqq;
                }
                // rows: A ← J* A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[p * n + q] = Cx::zero();
                a[q * n + p] = Cx::zero();
                a[p * n + p] = cx(a[p * n + p].re, T::zero());
                a[q * n + q] = cx(a[q * n + q].re, T::zero());
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * jpp + vkq * jqp;
                    v[k * n + q] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .re
            .partial_cmp(&a[j * n + j].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<Cx<T>> = (0..n).map(|r| v[r * n + col]).collect();
            let nrm = vec.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            if nrm > T::zero() {
                for z in &mut vec {
                    *z = *z / nrm;
                }
            }
            vec
        })
        .collect();
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Traces of the words in `A`, `A*` that determine the nilpotent 4×4 Kippenhahn polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceWords<T: Real> {
    /// `tr(A* A A* A)`
    pub beta0: T,
    /// `tr(A A*)`
    pub beta11: T,
    /// `tr(A² (A*)²)`
    pub beta22: T,
    /// `tr(A² A*)`
    pub beta21: Cx<T>,
    /// `tr(A³ A*)`
    pub beta31: Cx<T>,
}

pub fn trace_words<T: Real>(a: &ComplexSquareMatrix<T>) -> TraceWords<T> {
    let s = a.adjoint();
    let a2 = a.mul(a);
    let a3 = a2.mul(a);
    let s2 = s.mul(&s);
    let beta0 = s.mul(a).mul(&s).mul(a).trace().re;
    let beta11 = a.mul(&s).trace().re;
    let beta22 = a2.mul(&s2).trace().re;
    let beta21 = a2.mul(&s).trace();
    let beta31 = a3.mul(&s).trace();
    TraceWords {
        beta0,
        beta11,
        beta22,
        beta21,
        beta31,
    }
}

/// `‖A^dim‖_F ≤ tol · max(1, ‖A‖_F^dim)`; strictly upper-triangular input is
/// accepted without computing powers.
pub fn is_nilpotent<T: Real>(a: &ComplexSquareMatrix<T>, tol: T) -> bool {
    if a.is_strictly_upper_triangular() {
        return true;
    }
    let n = a.dim();
    let p = a.pow(n as u32).frobenius_norm();
    let scale = a.frobenius_norm().powi(n as i32).max(T::one());
    p <= tol * scale
}
