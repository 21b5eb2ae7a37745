//! Nilpotent 4×4 matrices with two non-parallel flat portions at equal
//! distance from the origin.
//!
//! Every such matrix is unitarily equivalent to
//!
//! ```text
//! e^{it} [[0, x, δ₁, y],
//!         [0, 0, y,  δ₂],
//!         [0, 0, 0,  x ],
//!         [0, 0, 0,  0 ]]
//! ```
//!
//! where `d` is the distance of the flat lines from the origin, `θ` the
//! angle between them, `0 < x < 2d`, `0 < y ≤ ymax(d, θ, x)` and `δ₁, δ₂` the
//! roots of `dτ² − xySτ + d(x² + y² − 4d²) = 0` with `S = sin(θ/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{NrError, Result};
use crate::flatdetect::{flat_endpoints, FlatPortion, FlatSource};
use crate::linalg::ComplexSquareMatrix;
use crate::scalar::{cis, cx, wrap_pi, wrap_two_pi, Cx, Real};

/// Relative slack on `y ≤ ymax`.
pub const YMAX_SLACK: f64 = 1e-12;
/// Negative discriminants down to this value are clamped to zero.
pub const DISCRIMINANT_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams<T: Real> {
    pub d: T,
    pub theta: T,
    pub x: T,
    pub y: T,
    pub t: T,
    #[serde(default)]
    pub swap_deltas: bool,
}

fn domain<T>(msg: String) -> Result<T> {
    Err(NrError::Domain(msg))
}

fn check_d_theta<T: Real>(d: T, theta: T) -> Result<()> {
    if !(d > T::zero()) || !d.is_finite() {
        return domain(format!("d must satisfy d > 0 (got {d})"));
    }
    if !(theta > T::zero() && theta < T::PI()) {
        return domain(format!("theta must lie in (0, pi) (got {theta})"));
    }
    Ok(())
}

/// Largest admissible `y`: `√((16d⁴ − 4d²x²)/(4d² − x²S²))`.
pub fn ymax<T: Real>(d: T, theta: T, x: T) -> Result<T> {
    check_d_theta(d, theta)?;
    let two = T::lit(2.0);
    if !(x > T::zero() && x < two * d) {
        return domain(format!("x must lie in (0, 2d) = (0, {}) (got {x})", two * d));
    }
    let s = (theta / two).sin();
    let d2 = d * d;
    let num = T::lit(16.0) * d2 * d2 - T::lit(4.0) * d2 * x * x;
    let den = T::lit(4.0) * d2 - x * x * s * s;
    Ok((num / den).sqrt())
}

/// `x` of the maximal-length member: `2d/√(1 + C)`.
pub fn maximal_x<T: Real>(d: T, theta: T) -> T {
    let c = (theta / T::lit(2.0)).cos();
    T::lit(2.0) * d / (T::one() + c).sqrt()
}

/// `θ = 2 arcsin(k/√2)` for the one-parameter family `A_k`.
pub fn theta_from_k<T: Real>(k: T) -> T {
    T::lit(2.0) * (k / T::SQRT_2()).asin()
}

/// Inverse of [`theta_from_k`]: `k = √2 sin(θ/2)`.
pub fn k_from_theta<T: Real>(theta: T) -> T {
    T::SQRT_2() * (theta / T::lit(2.0)).sin()
}

impl<T: Real> FamilyParams<T> {
    /// Validated parameters; `t` is wrapped into `[0, 2π)`.
    pub fn new(d: T, theta: T, x: T, y: T, t: T, swap_deltas: bool) -> Result<Self> {
        let p = Self {
            d,
            theta,
            x,
            y,
            t: wrap_two_pi(t),
            swap_deltas,
        };
        p.validate()?;
        Ok(p)
    }

    /// The maximal-length member `x = y = 2d/√(1 + C)`.
    pub fn maximal(d: T, theta: T, t: T) -> Result<Self> {
        check_d_theta(d, theta)?;
        let x = maximal_x(d, theta);
        let y = ymax(d, theta, x)?.min(x);
        Self::new(d, theta, x, y, t, false)
    }

    /// Parameters of `A_k`: `d = 1/√2`, `x = y = 1`, `θ = 2 arcsin(k/√2)`, `δ = (0, k)`.
    pub fn from_k(k: T) -> Result<Self> {
        if !(k > T::zero() && k < T::SQRT_2()) {
            return domain(format!("k must lie in (0, sqrt 2) (got {k})"));
        }
        Self::new(T::FRAC_1_SQRT_2(), theta_from_k(k), T::one(), T::one(), T::zero(), true)
    }

    pub fn validate(&self) -> Result<()> {
        let ym = ymax(self.d, self.theta, self.x)?;
        if !(self.y > T::zero()) {
            return domain(format!("y must satisfy y > 0 (got {})", self.y));
        }
        if self.y > ym * (T::one() + T::lit(YMAX_SLACK)) {
            return domain(format!("y must satisfy y <= ymax(d, theta, x) = {ym} (got {})", self.y));
        }
        if !self.t.is_finite() {
            return domain("t must be finite".into());
        }
        if self.discriminant() < -T::lit(DISCRIMINANT_CLAMP) {
            return domain(format!(
                "x^2 y^2 S^2 + 16 d^4 - 4 d^2 (x^2 + y^2) must be >= 0 (got {})",
                self.discriminant()
            ));
        }
        Ok(())
    }

    /// `S = sin(θ/2)`.
    pub fn s(&self) -> T {
        (self.theta / T::lit(2.0)).sin()
    }

    /// `C = cos(θ/2)`.
    pub fn c(&self) -> T {
        (self.theta / T::lit(2.0)).cos()
    }

    /// `x²y²S² + 16d⁴ − 4d²(x² + y²)`.
    pub fn discriminant(&self) -> T {
        let (x2, y2, d2) = (self.x * self.x, self.y * self.y, self.d * self.d);
        let s = self.s();
        x2 * y2 * s * s + T::lit(16.0) * d2 * d2 - T::lit(4.0) * d2 * (x2 + y2)
    }

    /// Predicted length of each flat: `8d³xyC / (16d⁴ − x²y²S²)`.
    pub fn flat_length(&self) -> T {
        let (d, s, c) = (self.d, self.s(), self.c());
        let xy = self.x * self.y;
        T::lit(8.0) * d * d * d * xy * c / (T::lit(16.0) * d.powi(4) - xy * xy * s * s)
    }

    /// Closed form of `tr(A²(A*)²)`: `x²y²(2 + x²S²/d²)`.
    pub fn trace_invariant(&self) -> T {
        let s = self.s();
        let xy2 = self.x * self.x * self.y * self.y;
        xy2 * (T::lit(2.0) + self.x * self.x * s * s / (self.d * self.d))
    }
}

/// `δ₁, δ₂ = (xyS ± √disc)/(2d)`; `+` goes to `δ₁` unless `swap_deltas`.
pub fn deltas<T: Real>(params: &FamilyParams<T>) -> Result<(T, T)> {
    params.validate()?;
    let disc = params.discriminant().max(T::zero());
    let root = disc.sqrt();
    let base = params.x * params.y * params.s();
    let two_d = T::lit(2.0) * params.d;
    let plus = (base + root) / two_d;
    let minus = (base - root) / two_d;
    Ok(if params.swap_deltas { (minus, plus) } else { (plus, minus) })
}

pub fn build_family_matrix<T: Real>(params: &FamilyParams<T>) -> Result<ComplexSquareMatrix<T>> {
    let (d1, d2) = deltas(params)?;
    let (x, y, z) = (params.x, params.y, T::zero());
    let m = ComplexSquareMatrix::from_real_rows(&[
        vec![z, x, d1, y],
        vec![z, z, y, d2],
        vec![z, z, z, x],
        vec![z, z, z, z],
    ])?;
    Ok(m.scale(cis(params.t)))
}

/// `A_k = [[0,1,0,1],[0,0,1,k],[0,0,0,1],[0,0,0,0]]` for `k ∈ (0, √2)`.
pub fn build_ak<T: Real>(k: T) -> Result<ComplexSquareMatrix<T>> {
    if !(k > T::zero() && k < T::SQRT_2()) {
        return domain(format!("k must lie in (0, sqrt 2) (got {k})"));
    }
    let (o, z) = (T::one(), T::zero());
    ComplexSquareMatrix::from_real_rows(&[vec![z, o, z, o], vec![z, z, o, k], vec![z, z, z, o], vec![z, z, z, z]])
}

/// Maximal-length member `M_{d,θ} = (2d/√(1+C))·[[0,1,σ,1],[0,0,1,σ],[0,0,0,1],0]`, `σ = S/√(1+C)`.
pub fn build_m<T: Real>(d: T, theta: T) -> Result<ComplexSquareMatrix<T>> {
    check_d_theta(d, theta)?;
    let half = theta / T::lit(2.0);
    let (s, c) = half.sin_cos();
    let r = (T::one() + c).sqrt();
    let sigma = s / r;
    let (o, z) = (T::one(), T::zero());
    let m = ComplexSquareMatrix::from_real_rows(&[
        vec![z, o, sigma, o],
        vec![z, z, o, sigma],
        vec![z, z, z, o],
        vec![z, z, z, z],
    ])?;
    Ok(m.scale(cx(T::lit(2.0) * d / r, T::zero())))
}

/// Axis of symmetry `(θ₁ + θ₂)/2` in `[0, π)` for flat-line singularities at arguments `θ₁`, `θ₂`.
pub fn symmetry_line<T: Real>(theta1: T, theta2: T) -> T {
    wrap_pi((theta1 + theta2) / T::lit(2.0))
}

/// Closed-form geometry of a family member.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyPrediction<T: Real> {
    pub params: FamilyParams<T>,
    /// Singularities `e^{it}(S/d, C/d)` and `e^{it}(S/d, −C/d)` of `p_A`.
    pub singularities: [[T; 2]; 2],
    /// Second partials `(a₁₁, a₁₂, a₂₂)` at the singularities for `t = 0`.
    pub second_partials: [(T, T, T); 2],
    pub flats: [FlatPortion<T>; 2],
    pub length: T,
    pub distance: T,
    pub angle_between_lines: T,
    /// Common point of the two flat lines, at distance `d·csc(θ/2)` in direction `t + π`.
    pub intersection: [T; 2],
    pub symmetry_line_angle: T,
    pub delta1: T,
    pub delta2: T,
    pub trace_invariant: T,
}

pub fn predicted_flats<T: Real>(params: &FamilyParams<T>) -> Result<FamilyPrediction<T>> {
    let (delta1, delta2) = deltas(params)?;
    let (d, s, c) = (params.d, params.s(), params.c());
    let xy = params.x * params.y;
    let eight_d2 = T::lit(8.0) * d * d;
    let a11 = eight_d2 * s * s - xy * xy / (T::lit(2.0) * d * d);
    let a22 = eight_d2 * c * c;
    let a12 = eight_d2 * s * c;

    let mut flats = Vec::with_capacity(2);
    let mut sings = [[T::zero(); 2]; 2];
    let mut partials = [(T::zero(), T::zero(), T::zero()); 2];
    let (st, ct) = params.t.sin_cos();
    for (j, sign) in [T::one(), -T::one()].into_iter().enumerate() {
        let (u0, v0) = (s / d, sign * c / d);
        let a12j = sign * a12;
        let (e1, e2) = flat_endpoints(u0, v0, a11, a12j, a22)
            .ok_or_else(|| NrError::Domain("degenerate second partials at the predicted singularity".into()))?;
        let base = FlatPortion::from_line(u0, v0, e1, e2, FlatSource::Prediction);
        let f = base.rotated(params.t);
        sings[j] = [ct * u0 - st * v0, st * u0 + ct * v0];
        partials[j] = (a11, a12j, a22);
        flats.push(f);
    }
    let reach = d / s;
    let dir = params.t + T::PI();
    Ok(FamilyPrediction {
        params: *params,
        singularities: sings,
        second_partials: partials,
        flats: [flats[0], flats[1]],
        length: params.flat_length(),
        distance: d,
        angle_between_lines: params.theta,
        intersection: [reach * dir.cos(), reach * dir.sin()],
        symmetry_line_angle: symmetry_line(
            sings[0][1].atan2(sings[0][0]),
            sings[1][1].atan2(sings[1][0]),
        ),
        delta1,
        delta2,
        trace_invariant: params.trace_invariant(),
    })
}

/// Roots `γ = −1 ± Sxy/(2d²)` of `p(u₀, v₀, γ)/(γ − 1)²` at either singularity (`t = 0`).
pub fn predicted_gamma_roots<T: Real>(params: &FamilyParams<T>) -> (T, T) {
    let r = params.s() * params.x * params.y / (T::lit(2.0) * params.d * params.d);
    (-T::one() - r, -T::one() + r)
}

/// `tr(A²(A*)²)` evaluated from the matrix.
pub fn trace_invariant_of<T: Real>(a: &ComplexSquareMatrix<T>) -> T {
    let a2 = a.mul(a);
    let v: Cx<T> = a2.mul(&a2.adjoint()).trace();
    v.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_nilpotent;
    use crate::nrpoly::{nr_poly_general, nr_poly_nilpotent};
    use std::f64::consts::{FRAC_PI_3, PI};

    fn reference_params() -> FamilyParams<f64> {
        let d = 5f64.sqrt() / 2.0;
        let theta = 2.0 * (5f64.sqrt() / 4.0).asin();
        FamilyParams::<f64>::new(d, theta, 1.0, 2.0, 0.0, false).unwrap()
    }

    #[test]
    fn reference_deltas_and_length() {
        let p = reference_params();
        let (d1, d2) = deltas(&p).unwrap();
        assert!((d1 - 1.0).abs() < 1e-12 && d2.abs() < 1e-12, "{d1} {d2}");
        assert!((p.flat_length() - 2.0 * 55f64.sqrt() / 19.0).abs() < 1e-12);
        assert!((p.c() - 11f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn ymax_examples() {
        let k: f64 = 1.0;
        let theta = theta_from_k::<f64>(k);
        let y = ymax::<f64>(0.5f64.sqrt(), theta, 1.0).unwrap();
        assert!((y - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(ymax::<f64>(1.0, 2.0 * FRAC_PI_3, 2.0 - 1e-9).unwrap() < 1e-3);
        let x = maximal_x::<f64>(1.0, 2.0 * FRAC_PI_3);
        assert!((x * x - 8.0 / 3.0).abs() < 1e-12);
        let ym = ymax::<f64>(1.0, 2.0 * FRAC_PI_3, x).unwrap();
        assert!((ym * ym - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn domain_errors_name_the_inequality() {
        let e = ymax::<f64>(1.0, 2.0, 2.5).unwrap_err().to_string();
        assert!(e.contains("(0, 2d)"), "{e}");
        let e = FamilyParams::<f64>::new(1.0, 2.0, 1.0, 5.0, 0.0, false).unwrap_err().to_string();
        assert!(e.contains("ymax"), "{e}");
        assert!(FamilyParams::<f64>::new(-1.0, 2.0, 1.0, 1.0, 0.0, false).is_err());
        assert!(FamilyParams::<f64>::new(1.0, PI, 1.0, 1.0, 0.0, false).is_err());
        assert!(build_ak::<f64>(1.5).is_err());
        assert!(build_m::<f64>(1.0, 0.0).is_err());
    }

    #[test]
    fn deltas_solve_the_quadratic() {
        let p = FamilyParams::<f64>::new(1.3, 1.1, 1.2, 1.4, 0.0, false).unwrap();
        let (d1, d2) = deltas(&p).unwrap();
        for t in [d1, d2] {
            let q = p.d * t * t - p.x * p.y * p.s() * t + p.d * (p.x * p.x + p.y * p.y - 4.0 * p.d * p.d);
            assert!(q.abs() < 1e-10);
        }
        assert!((d1 + d2 - p.x * p.y * p.s() / p.d).abs() < 1e-12);
        assert!((d1 * d2 - (p.x * p.x + p.y * p.y - 4.0 * p.d * p.d)).abs() < 1e-12);
        let sw = FamilyParams { swap_deltas: true, ..p };
        assert_eq!(deltas(&sw).unwrap(), (d2, d1));
    }

    #[test]
    fn maximal_member_has_equal_deltas_and_length_d() {
        let (d, theta) = (1.0, 2.0 * FRAC_PI_3);
        let p = FamilyParams::<f64>::maximal(d, theta, 0.0).unwrap();
        let (d1, d2) = deltas(&p).unwrap();
        let expect = 2.0 * d * p.s() / (1.0 + p.c());
        assert!((d1 - expect).abs() < 1e-7 && (d2 - expect).abs() < 1e-7, "{d1} {d2} {expect}");
        assert!((p.flat_length() - 1.0).abs() < 1e-12);
        let a = build_family_matrix(&p).unwrap();
        let m = build_m::<f64>(d, theta).unwrap();
        assert!(a.max_abs_diff(&m) < 1e-7);
        let pred = predicted_flats(&p).unwrap();
        assert!((pred.intersection[0] + 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(pred.intersection[1].abs() < 1e-12);
        for f in &pred.flats {
            assert!((f.length - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ak_matches_family_form() {
        let k = 0.7;
        let p = FamilyParams::<f64>::from_k(k).unwrap();
        let (d1, d2) = deltas(&p).unwrap();
        assert!(d1.abs() < 1e-12 && (d2 - k).abs() < 1e-12);
        let a = build_family_matrix(&p).unwrap();
        assert!(a.max_abs_diff(&build_ak::<f64>(k).unwrap()) < 1e-12);
        let k = (1.0 - 3f64.sqrt() / 2.0).sqrt();
        assert!((theta_from_k::<f64>(k) - PI / 6.0).abs() < 1e-12);
        let k9 = k_from_theta::<f64>(0.9 * PI);
        assert!((theta_from_k::<f64>(k9) - 0.9 * PI).abs() < 1e-12);
    }

    #[test]
    fn family_matrix_basic_properties() {
        let p = FamilyParams::<f64>::new(1.3, 1.1, 1.2, 1.4, 0.0, false).unwrap();
        let a = build_family_matrix(&p).unwrap();
        assert!(a.is_strictly_upper_triangular() && is_nilpotent(&a, 1e-12));
        assert!((trace_invariant_of(&a) - p.trace_invariant()).abs() < 1e-10);
        let flipped = build_family_matrix(&FamilyParams { t: PI, ..p }).unwrap();
        assert!(flipped.add(&a).frobenius_norm() < 1e-12);
    }

    #[test]
    fn coefficient_relations_and_singular_points() {
        let p = FamilyParams::<f64>::new(1.3, 1.1, 1.2, 1.4, 0.0, false).unwrap();
        let a = build_family_matrix(&p).unwrap();
        let c = nr_poly_nilpotent(&a).unwrap();
        let (d, s) = (p.d, p.s());
        assert!(c.c2.abs() < 1e-9 && c.c6.abs() < 1e-9);
        assert!((c.c4 - d.powi(4)).abs() < 1e-9);
        assert!((c.c3 - (-(2.0 * d / s) * c.c5 - 4.0 * d.powi(3) / s)).abs() < 1e-9);
        assert!((c.c1 - ((d * d / (s * s)) * c.c5 + 2.0 * d.powi(4) / (s * s) + d.powi(4))).abs() < 1e-9);

        let poly = nr_poly_general(&a).unwrap();
        let pred = predicted_flats(&p).unwrap();
        for (j, sg) in pred.singularities.iter().enumerate() {
            let g = poly.gradient(sg[0], sg[1], 1.0);
            assert!(g.iter().all(|v| v.abs() < 1e-9), "{g:?}");
            let (a11, a12, a22) = poly.hessian_uv(sg[0], sg[1], 1.0);
            let (b11, b12, b22) = pred.second_partials[j];
            assert!((a11 - b11).abs() < 1e-9 && (a12 - b12).abs() < 1e-9 && (a22 - b22).abs() < 1e-9);
        }
        assert!(pred.symmetry_line_angle.abs() < 1e-12 || (pred.symmetry_line_angle - PI).abs() < 1e-12);
    }

    #[test]
    fn gamma_factorization() {
        let p = FamilyParams::<f64>::new(1.3, 1.1, 1.2, 1.4, 0.0, false).unwrap();
        let poly = nr_poly_general(&build_family_matrix(&p).unwrap()).unwrap();
        let (g1, g2) = predicted_gamma_roots(&p);
        for v0 in [p.c() / p.d, -p.c() / p.d] {
            let q = poly.restrict_w(p.s() / p.d, v0);
            for g in [1.0, g1, g2] {
                let val: f64 = q.iter().rev().fold(0.0, |acc, &c| acc * g + c);
                assert!(val.abs() < 1e-8, "{g}: {val}");
            }
        }
    }

    #[test]
    fn rotation_moves_predictions() {
        let p0 = FamilyParams::<f64>::new(1.0, 1.3, 1.0, 1.2, 0.0, false).unwrap();
        let p1 = FamilyParams { t: PI / 2.0, ..p0 };
        let (a, b) = (predicted_flats(&p0).unwrap(), predicted_flats(&p1).unwrap());
        for j in 0..2 {
            let (e, f) = (a.flats[j].endpoint1, b.flats[j].endpoint1);
            assert!((f[0] + e[1]).abs() < 1e-12 && (f[1] - e[0]).abs() < 1e-12);
        }
        assert!((b.symmetry_line_angle - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn length_increases_in_x_and_y() {
        let p = FamilyParams::<f64>::new(1.0, 1.3, 0.8, 0.9, 0.0, false).unwrap();
        let h = 1e-6;
        let px = FamilyParams { x: p.x + h, ..p };
        let py = FamilyParams { y: p.y + h, ..p };
        assert!(px.flat_length() > p.flat_length());
        assert!(py.flat_length() > p.flat_length());
    }

    #[test]
    fn symmetry_line_cases() {
        assert!((symmetry_line(0.4_f64, 0.4) - 0.4).abs() < 1e-15);
        assert!((symmetry_line(0.3, 0.3 + PI) - (0.3 + PI / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn json_fields() {
        let p = reference_params();
        let v = serde_json::to_value(p).unwrap();
        for key in ["d", "theta", "x", "y", "t", "swap_deltas"] {
            assert!(v.get(key).is_some());
        }
        let back: FamilyParams<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
