//! The numerical-range generating polynomial `p_A(u, v, w) = det(uH + vK + wI)`
//! of a 4×4 matrix, stored as a dense homogeneous ternary quartic.
//!
//! Two construction paths are provided and kept independent of each other:
//! [`nr_poly_general`] interpolates the determinant at a fixed node set, and
//! [`nr_poly_nilpotent`] evaluates the closed form for nilpotent input from
//! traces of words in `A` and `A*`.

use serde::{Deserialize, Serialize};

use crate::error::{NrError, Result};
use crate::linalg::{hermitian_parts, is_nilpotent, trace_words, ComplexSquareMatrix, NILPOTENT_TOL};
use crate::scalar::Real;

/// Exponent triples `(i, j, k)` of `u^i v^j w^k`, graded-lex order with `u > v > w`.
pub const MONOMIALS: [(u8, u8, u8); 15] = [
    (4, 0, 0),
    (3, 1, 0),
    (3, 0, 1),
    (2, 2, 0),
    (2, 1, 1),
    (2, 0, 2),
    (1, 3, 0),
    (1, 2, 1),
    (1, 1, 2),
    (1, 0, 3),
    (0, 4, 0),
    (0, 3, 1),
    (0, 2, 2),
    (0, 1, 3),
    (0, 0, 4),
];

/// Relative imaginary residue above which interpolated coefficients are rejected.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Position of `u^i v^j w^k` in [`MONOMIALS`].
pub fn monomial_index(i: u8, j: u8, k: u8) -> Option<usize> {
    MONOMIALS.iter().position(|&m| m == (i, j, k))
}

#[inline]
fn ipow<T: Real>(x: T, e: u8) -> T {
    match e {
        0 => T::one(),
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => {
            let x2 = x * x;
            x2 * x2
        }
    }
}

/// Homogeneous quartic in `(u, v, w)` with real coefficients in [`MONOMIALS`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TernaryQuartic<T: Real> {
    pub coeffs: [T; 15],
}

impl<T: Real> TernaryQuartic<T> {
    pub fn new(coeffs: [T; 15]) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self {
            coeffs: [T::zero(); 15],
        }
    }

    /// `w⁴`, the polynomial of the zero matrix.
    pub fn w4() -> Self {
        let mut p = Self::zero();
        p.coeffs[14] = T::one();
        p
    }

    pub fn coefficient(&self, i: u8, j: u8, k: u8) -> T {
        monomial_index(i, j, k).map_or(T::zero(), |idx| self.coeffs[idx])
    }

    pub fn eval(&self, u: T, v: T, w: T) -> T {
        let pu = [T::one(), u, u * u, u * u * u, u * u * u * u];
        let pv = [T::one(), v, v * v, v * v * v, v * v * v * v];
        let pw = [T::one(), w, w * w, w * w * w, w * w * w * w];
        MONOMIALS
            .iter()
            .zip(&self.coeffs)
            .map(|(&(i, j, k), &c)| c * pu[i as usize] * pv[j as usize] * pw[k as usize])
            .sum()
    }

    /// Sum of absolute monomial values at the point; a scale for round-off in [`eval`](Self::eval).
    pub fn eval_abs(&self, u: T, v: T, w: T) -> T {
        MONOMIALS
            .iter()
            .zip(&self.coeffs)
            .map(|(&(i, j, k), &c)| (c * ipow(u, i) * ipow(v, j) * ipow(w, k)).abs())
            .sum()
    }

    /// `(p_u, p_v, p_w)`.
    pub fn gradient(&self, u: T, v: T, w: T) -> [T; 3] {
        let mut g = [T::zero(); 3];
        for (&(i, j, k), &c) in MONOMIALS.iter().zip(&self.coeffs) {
            if i > 0 {
                g[0] += c * T::lit(i as f64) * ipow(u, i - 1) * ipow(v, j) * ipow(w, k);
            }
            if j > 0 {
                g[1] += c * T::lit(j as f64) * ipow(u, i) * ipow(v, j - 1) * ipow(w, k);
            }
            if k > 0 {
                g[2] += c * T::lit(k as f64) * ipow(u, i) * ipow(v, j) * ipow(w, k - 1);
            }
        }
        g
    }

    /// Componentwise bound on the rounding scale of [`gradient`](Self::gradient).
    pub fn gradient_abs(&self, u: T, v: T, w: T) -> [T; 3] {
        let abs = Self {
            coeffs: self.coeffs.map(|c| c.abs()),
        };
        abs.gradient(u.abs(), v.abs(), w.abs())
    }

    /// Full symmetric Hessian in `(u, v, w)`.
    pub fn hessian(&self, u: T, v: T, w: T) -> [[T; 3]; 3] {
        let mut h = [[T::zero(); 3]; 3];
        for (&(i, j, k), &c) in MONOMIALS.iter().zip(&self.coeffs) {
            let e = [i, j, k];
            let x = [u, v, w];
            for a in 0..3 {
                for b in a..3 {
                    let mut ee = e;
                    let mut f = T::one();
                    if ee[a] == 0 {
                        continue;
                    }
                    f *= T::lit(ee[a] as f64);
                    ee[a] -= 1;
                    if ee[b] == 0 {
                        continue;
                    }
                    f *= T::lit(ee[b] as f64);
                    ee[b] -= 1;
                    let term = c * f * ipow(x[0], ee[0]) * ipow(x[1], ee[1]) * ipow(x[2], ee[2]);
                    h[a][b] += term;
                }
            }
        }
        for a in 0..3 {
            for b in 0..a {
                h[a][b] = h[b][a];
            }
        }
        h
    }

    /// `(p_uu, p_uv, p_vv)` at the point.
    pub fn hessian_uv(&self, u: T, v: T, w: T) -> (T, T, T) {
        let h = self.hessian(u, v, w);
        (h[0][0], h[0][1], h[1][1])
    }

    /// Coefficients (ascending in `γ`) of the univariate quartic `γ ↦ p(u, v, γ)`.
    pub fn restrict_w(&self, u: T, v: T) -> [T; 5] {
        let mut out = [T::zero(); 5];
        for (&(i, j, k), &c) in MONOMIALS.iter().zip(&self.coeffs) {
            out[k as usize] += c * ipow(u, i) * ipow(v, j);
        }
        out
    }

    /// Polynomial of `e^{iφ}A` given the polynomial of `A`:
    /// `q(u, v, w) = p(u cosφ + v sinφ, −u sinφ + v cosφ, w)`.
    pub fn rotated(&self, phi: T) -> Self {
        let (s, c) = phi.sin_cos();
        // linear forms in (u, v): first = c·u + s·v, second = −s·u + c·v
        let first = [c, s];
        let second = [-s, c];
        let mut out = Self::zero();
        for (&(i, j, k), &coef) in MONOMIALS.iter().zip(&self.coeffs) {
            if coef == T::zero() {
                continue;
            }
            // binary form in (u, v) of degree i + j: index r ↔ u^{deg-r} v^r
            let mut form = vec![T::one()];
            for _ in 0..i {
                form = mul_binary(&form, &first);
            }
            for _ in 0..j {
                form = mul_binary(&form, &second);
            }
            let deg = (i + j) as usize;
            for (r, &f) in form.iter().enumerate() {
                let idx = monomial_index((deg - r) as u8, r as u8, k).expect("degree-4 monomial");
                out.coeffs[idx] += coef * f;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, &c| m.max(c.abs()))
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            degree: 4,
            coeffs: MONOMIALS
                .iter()
                .zip(&self.coeffs)
                .map(|(&(i, j, k), &c)| MonomialJson {
                    i,
                    j,
                    k,
                    c: c.to_f64_lossy(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PolynomialJson) -> Result<Self> {
        if json.degree != 4 {
            return Err(NrError::Domain(format!("polynomial degree {} is not 4", json.degree)));
        }
        let mut p = Self::zero();
        for m in &json.coeffs {
            let idx = monomial_index(m.i, m.j, m.k).ok_or_else(|| {
                NrError::Domain(format!("monomial ({}, {}, {}) is not of degree 4", m.i, m.j, m.k))
            })?;
            p.coeffs[idx] = T::lit(m.c);
        }
        Ok(p)
    }
}

fn mul_binary<T: Real>(a: &[T], lin: &[T; 2]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + 1];
    for (r, &x) in a.iter().enumerate() {
        out[r] += x * lin[0];
        out[r + 1] += x * lin[1];
    }
    out
}

/// Serialized polynomial: `{"degree": 4, "coeffs": [{"i", "j", "k", "c"}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub degree: u32,
    pub coeffs: Vec<MonomialJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialJson {
    pub i: u8,
    pub j: u8,
    pub k: u8,
    pub c: f64,
}

/// Interpolation nodes: the integer triples `(i, j, k)` with `i + j + k = 4`,
/// listed in [`MONOMIALS`] order. This principal lattice is unisolvent for
/// ternary quartics; the monomial Vandermonde has condition number ≈ 150.
pub fn interpolation_nodes() -> [(f64, f64, f64); 15] {
    MONOMIALS.map(|(i, j, k)| (i as f64, j as f64, k as f64))
}

/// LU factors of the fixed 15×15 Vandermonde system.
struct Vandermonde<T: Real> {
    lu: [[T; 15]; 15],
    perm: [usize; 15],
}

impl<T: Real> Vandermonde<T> {
    fn new() -> Result<Self> {
        let mut lu = [[T::zero(); 15]; 15];
        for (r, &(u, v, w)) in interpolation_nodes().iter().enumerate() {
            let (u, v, w) = (T::lit(u), T::lit(v), T::lit(w));
            for (c, &(i, j, k)) in MONOMIALS.iter().enumerate() {
                lu[r][c] = ipow(u, i) * ipow(v, j) * ipow(w, k);
            }
        }
        let mut perm = [0usize; 15];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for col in 0..15 {
            let piv = (col..15)
                .max_by(|&a, &b| lu[a][col].abs().partial_cmp(&lu[b][col].abs()).unwrap())
                .unwrap();
            if lu[piv][col] == T::zero() {
                return Err(NrError::SingularInterpolation);
            }
            lu.swap(col, piv);
            perm.swap(col, piv);
            for r in (col + 1)..15 {
                let f = lu[r][col] / lu[col][col];
                lu[r][col] = f;
                for c in (col + 1)..15 {
                    let t = lu[col][c];
                    lu[r][c] -= f * t;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    fn solve(&self, rhs: &[T; 15]) -> [T; 15] {
        let mut x = [T::zero(); 15];
        for i in 0..15 {
            x[i] = rhs[self.perm[i]];
        }
        for i in 0..15 {
            for j in 0..i {
                let t = self.lu[i][j] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..15).rev() {
            for j in (i + 1)..15 {
                let t = self.lu[i][j] * x[j];
                x[i] -= t;
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

/// `p_A = det(uH + vK + wI)` by interpolation at [`interpolation_nodes`].
pub fn nr_poly_general<T: Real>(a: &ComplexSquareMatrix<T>) -> Result<TernaryQuartic<T>> {
    if a.dim() != 4 {
        return Err(NrError::Dimension {
            expected: 4,
            found: a.dim(),
        });
    }
    let (h, k) = hermitian_parts(a);
    let mut re = [T::zero(); 15];
    let mut im = [T::zero(); 15];
    for (r, &(u, v, w)) in interpolation_nodes().iter().enumerate() {
        let det = h.pencil(T::lit(u), &k, T::lit(v), T::lit(w)).determinant();
        re[r] = det.re;
        im[r] = det.im;
    }
    let system = Vandermonde::<T>::new()?;
    let coeffs = system.solve(&re);
    let residue = system.solve(&im);
    let p = TernaryQuartic { coeffs };
    let scale = p.max_abs_coeff().max(T::one());
    let worst = residue.iter().fold(T::zero(), |m, &c| m.max(c.abs()));
    if worst > T::tol_floor(IMAG_RESIDUE_TOL, 1e4) * scale {
        return Err(NrError::ImaginaryResidue(worst.to_f64_lossy()));
    }
    Ok(p)
}

/// The six real parameters of the 4×4 nilpotent generating polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NilpotentCoefficients<T: Real> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub c5: T,
    pub c6: T,
}

impl<T: Real> NilpotentCoefficients<T> {
    pub fn as_array(&self) -> [T; 6] {
        [self.c1, self.c2, self.c3, self.c4, self.c5, self.c6]
    }

    /// Expands to
    /// `c1 u⁴ + c2 u³v + c3 u³w + (c1+c4) u²v² + c5 u²w² + c6 u²vw
    ///  + c2 uv³ + c3 uv²w + c4 v⁴ + c6 v³w + c5 v²w² + w⁴`.
    pub fn expand(&self) -> TernaryQuartic<T> {
        let mut p = TernaryQuartic::zero();
        let mut put = |i, j, k, c: T| {
            let idx = monomial_index(i, j, k).expect("degree-4 monomial");
            p.coeffs[idx] += c;
        };
        put(4, 0, 0, self.c1);
        put(3, 1, 0, self.c2);
        put(3, 0, 1, self.c3);
        put(2, 2, 0, self.c1 + self.c4);
        put(2, 0, 2, self.c5);
        put(2, 1, 1, self.c6);
        put(1, 3, 0, self.c2);
        put(1, 2, 1, self.c3);
        put(0, 4, 0, self.c4);
        put(0, 3, 1, self.c6);
        put(0, 2, 2, self.c5);
        put(0, 0, 4, T::one());
        p
    }
}

/// Closed-form coefficients of `p_A` for a 4×4 nilpotent `A`.
pub fn nr_poly_nilpotent<T: Real>(a: &ComplexSquareMatrix<T>) -> Result<NilpotentCoefficients<T>> {
    if a.dim() != 4 {
        return Err(NrError::Dimension {
            expected: 4,
            found: a.dim(),
        });
    }
    if !is_nilpotent(a, T::lit(NILPOTENT_TOL)) {
        let scale = a.frobenius_norm().powi(4).max(T::one());
        return Err(NrError::NotNilpotent {
            residual: (a.pow(4).frobenius_norm() / scale).to_f64_lossy(),
        });
    }
    let b = trace_words(a);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let q = T::lit(0.25);
    let s = T::lit(1.0 / 16.0);
    let quad = half * b.beta0 - half * b.beta11 * b.beta11;
    Ok(NilpotentCoefficients {
        c1: -s * (two * b.beta31.re + b.beta22 + quad),
        c2: -q * b.beta31.im,
        c3: q * b.beta21.re,
        c4: s * (two * b.beta31.re - b.beta22 - quad),
        c5: -q * b.beta11,
        c6: q * b.beta21.im,
    })
}
