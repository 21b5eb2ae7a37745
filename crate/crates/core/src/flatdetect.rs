//! Flat portions of `∂W(A)`.
//!
//! Two independent detectors live here:
//!
//! * [`flat_from_singularity`] applies the second-order test at a real
//!   singularity `(u₀, v₀)` of `p_A`: the two tangent directions of the point
//!   curve at the singularity give the endpoints of a segment on the line
//!   `u₀x + v₀y + 1 = 0`, and that line must be extreme among its parallels.
//! * [`flats_via_rotation_sweep`] scans `φ` and looks for coalescence of the
//!   two largest eigenvalues of `Re(e^{-iφ}A)`; at such `φ` the compression
//!   of `Im(e^{-iφ}A)` to the top eigenspace spans the segment.
//!
//! [`analyze`] runs both and cross-matches them.

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{check_symmetry, sample_boundary, support_extreme_points};
use crate::error::{NrError, Result};
use crate::family::symmetry_line;
use crate::linalg::{eig_hermitian, hermitian_parts, is_nilpotent, ComplexSquareMatrix, HermitianMatrix, NILPOTENT_TOL};
use crate::nrpoly::{nr_poly_general, nr_poly_nilpotent, NilpotentCoefficients, PolynomialJson, TernaryQuartic};
use crate::roots::{deflate, polynomial_roots};
use crate::scalar::{angle_distance, cis, cx, wrap_pi, wrap_two_pi, Real};
use crate::singularity::{find_real_singularities_with, SearchOptions, Singularity};

/// Real roots of `p(u₀, v₀, γ)` may exceed 1 by at most this much.
pub const EXTREME_ROOT_TOL: f64 = 1e-9;
/// Relative threshold on `a₁₂² − a₁₁a₂₂` separating a double tangent from a repeated one.
pub const DISCRIMINANT_TOL: f64 = 1e-10;
/// Relative threshold below which `a₂₂` counts as zero.
pub const A22_TOL: f64 = 1e-10;
/// Fixed rotation used when `a₂₂` vanishes.
pub const FALLBACK_ROTATION: f64 = std::f64::consts::PI / 7.0;

pub const DEFAULT_N_PHI: usize = 2048;
/// Default coalescence threshold, relative to `‖A‖`.
pub const DEFAULT_GAP_TOL: f64 = 1e-7;
/// Golden-section refinement stops at this angular bracket width.
pub const GOLDEN_TOL: f64 = 1e-12;
/// A grid minimum is refined only if it is below this fraction of its larger neighbour.
pub const V_RATIO: f64 = 0.75;
/// Sweep minima closer than this (radians) are the same flat.
pub const MERGE_DPHI: f64 = 1e-6;
/// Minimal separation of the two extreme points for a sweep flat, relative to `‖A‖`.
pub const SWEEP_MIN_LENGTH: f64 = 1e-7;

/// Cross-check tolerances between singularity-derived and sweep-derived flats.
pub const MATCH_LINE_TOL: f64 = 1e-5;
pub const MATCH_ENDPOINT_TOL: f64 = 1e-4;

/// Number of support samples used for the centroid shift and the default search radius.
pub const PROBE_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatSource {
    SingularityTest,
    Eigensweep,
    Prediction,
    Geometric,
}

/// A segment on `∂W(A)` together with its supporting line `u₀x + v₀y + 1 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatPortion<T: Real> {
    pub line_u0: T,
    pub line_v0: T,
    pub endpoint1: [T; 2],
    pub endpoint2: [T; 2],
    pub length: T,
    /// Distance from the origin to the supporting line.
    pub distance: T,
    /// Direction angle of the supporting line, in `[0, π)`.
    pub angle_of_line: T,
    /// Direction of the outward normal `-(u₀, v₀)`, in `[0, 2π)`.
    pub normal_angle: T,
    pub source: FlatSource,
}

impl<T: Real> FlatPortion<T> {
    /// Builds a flat from the line coordinates `(u₀, v₀)` and two endpoints.
    pub fn from_line(u0: T, v0: T, e1: [T; 2], e2: [T; 2], source: FlatSource) -> Self {
        let r = (u0 * u0 + v0 * v0).sqrt();
        let dx = e2[0] - e1[0];
        let dy = e2[1] - e1[1];
        Self {
            line_u0: u0,
            line_v0: v0,
            endpoint1: e1,
            endpoint2: e2,
            length: (dx * dx + dy * dy).sqrt(),
            distance: T::one() / r,
            angle_of_line: wrap_pi(v0.atan2(u0) + T::FRAC_PI_2()),
            normal_angle: wrap_two_pi((-v0).atan2(-u0)),
            source,
        }
    }

    /// Builds a flat on the support line `x cosφ + y sinφ = h`.
    pub fn from_support(phi: T, h: T, e1: [T; 2], e2: [T; 2], source: FlatSource) -> Self {
        let (s, c) = phi.sin_cos();
        let mut f = Self::from_line(-c / h, -s / h, e1, e2, source);
        // keep the exact normal for lines through (or near) the origin
        f.normal_angle = wrap_two_pi(phi);
        f.angle_of_line = wrap_pi(phi + T::FRAC_PI_2());
        f.distance = h.abs();
        f
    }

    /// `|u₀x + v₀y + 1|` for both endpoints.
    pub fn endpoint_line_residuals(&self) -> [T; 2] {
        let r = |e: [T; 2]| (self.line_u0 * e[0] + self.line_v0 * e[1] + T::one()).abs();
        [r(self.endpoint1), r(self.endpoint2)]
    }

    /// Same flat seen from a frame translated by `shift` (`z ↦ z + shift`).
    pub fn translated(&self, shift: [T; 2]) -> Self {
        let k = T::one() - self.line_u0 * shift[0] - self.line_v0 * shift[1];
        let e1 = [self.endpoint1[0] + shift[0], self.endpoint1[1] + shift[1]];
        let e2 = [self.endpoint2[0] + shift[0], self.endpoint2[1] + shift[1]];
        let mut out = Self::from_line(self.line_u0 / k, self.line_v0 / k, e1, e2, self.source);
        // outward normal is a property of the body, not of the frame
        out.normal_angle = self.normal_angle;
        out.angle_of_line = self.angle_of_line;
        let (s, c) = self.normal_angle.sin_cos();
        out.distance = (c * e1[0] + s * e1[1]).abs();
        out
    }

    /// Rotates endpoints and line by `angle` about the origin.
    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let rot = |p: [T; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        let uv = rot([self.line_u0, self.line_v0]);
        Self::from_line(uv[0], uv[1], rot(self.endpoint1), rot(self.endpoint2), self.source)
    }
}

/// Why a singularity does not produce a flat portion.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    /// `‖∇p‖` too large for the point to be a singularity.
    NotSingular { residual: f64 },
    /// `a₁₁a₂₂ ≥ a₁₂²`: no pair of distinct real tangents.
    NoDistinctTangents { discriminant: f64 },
    /// `a₁₂² − a₁₁a₂₂` within tolerance of zero: repeated tangent line.
    RepeatedTangent { discriminant: f64 },
    /// `a₁₁u₀² + 2a₁₂u₀v₀ + a₂₂v₀² = 0`.
    DegenerateDirection { value: f64 },
    /// A real root `γ > 1` of `p(u₀, v₀, γ)`: a parallel tangent line lies beyond.
    NotExtreme { gamma: f64 },
}

/// Outcome of [`flat_from_singularity`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatTest<T: Real> {
    pub flat: Option<FlatPortion<T>>,
    pub reason: Option<RejectReason>,
    /// Second partials `(a₁₁, a₁₂, a₂₂)` in the frame the test ran in.
    pub hessian: (T, T, T),
    /// The coordinate rotation was needed because `a₂₂ ≈ 0`.
    pub rotated_frame: bool,
    /// Roots of `p(u₀, v₀, γ)` after removing the double root at `γ = 1`.
    pub other_gamma_roots: Vec<(f64, f64)>,
    /// Complex roots with real part above 1 (ignored by the test, reported).
    pub complex_roots_beyond: bool,
    /// The discriminant was within a factor 100 of its threshold.
    pub borderline: bool,
}

/// Closed-form flat endpoints at a singularity with second partials `(a11, a12, a22)`.
///
/// Returns `None` when either denominator vanishes or the discriminant is negative.
pub fn flat_endpoints<T: Real>(u0: T, v0: T, a11: T, a12: T, a22: T) -> Option<([T; 2], [T; 2])> {
    let disc = a12 * a12 - a11 * a22;
    if disc < T::zero() {
        return None;
    }
    let root = disc.sqrt();
    let point = |m: T| {
        let den = -a22 * v0 - m * u0;
        (den != T::zero()).then(|| [m / den, a22 / den])
    };
    Some((point(a12 - root)?, point(a12 + root)?))
}

/// Closed-form flat length `2√(a₁₂² − a₁₁a₂₂)·√(u₀² + v₀²) / |a₁₁u₀² + 2a₁₂u₀v₀ + a₂₂v₀²|`.
pub fn flat_length<T: Real>(u0: T, v0: T, a11: T, a12: T, a22: T) -> T {
    let two = T::lit(2.0);
    let q = a11 * u0 * u0 + two * a12 * u0 * v0 + a22 * v0 * v0;
    two * (a12 * a12 - a11 * a22).max(T::zero()).sqrt() * (u0 * u0 + v0 * v0).sqrt() / q.abs()
}

/// Tests whether the singularity `s` of `p` yields a flat portion on `u₀x + v₀y + 1 = 0`.
///
/// Assumes `0 ∈ W(A)`. When `a₂₂` vanishes the test is repeated in a frame
/// rotated by [`FALLBACK_ROTATION`] and the endpoints are rotated back.
pub fn flat_from_singularity<T: Real>(p: &TernaryQuartic<T>, s: &Singularity<T>) -> Result<FlatTest<T>> {
    let (u0, v0) = (s.u0, s.v0);
    let (a11, a12, a22) = p.hessian_uv(u0, v0, T::one());
    let hscale = a11.abs().max(a12.abs()).max(T::one());
    if a22.abs() > T::lit(A22_TOL) * hscale {
        return Ok(flat_test_in_frame(p, u0, v0, FlatSource::SingularityTest));
    }
    let phi = T::lit(FALLBACK_ROTATION);
    let q = p.rotated(phi);
    let (sn, cs) = phi.sin_cos();
    let (ur, vr) = (cs * u0 - sn * v0, sn * u0 + cs * v0);
    let (b11, b12, b22) = q.hessian_uv(ur, vr, T::one());
    if b22.abs() <= T::lit(A22_TOL) * b11.abs().max(b12.abs()).max(T::one()) {
        return Err(NrError::DegenerateHessian(format!(
            "a22 vanishes at ({u0}, {v0}) in both the original and rotated frames"
        )));
    }
    let mut test = flat_test_in_frame(&q, ur, vr, FlatSource::SingularityTest);
    test.rotated_frame = true;
    if let Some(f) = test.flat {
        let (sb, cb) = (-phi).sin_cos();
        let back = |e: [T; 2]| [cb * e[0] - sb * e[1], sb * e[0] + cb * e[1]];
        test.flat = Some(FlatPortion::from_line(u0, v0, back(f.endpoint1), back(f.endpoint2), f.source));
    }
    Ok(test)
}

fn flat_test_in_frame<T: Real>(p: &TernaryQuartic<T>, u0: T, v0: T, source: FlatSource) -> FlatTest<T> {
    let (a11, a12, a22) = p.hessian_uv(u0, v0, T::one());
    let mut out = FlatTest {
        flat: None,
        reason: None,
        hessian: (a11, a12, a22),
        rotated_frame: false,
        other_gamma_roots: Vec::new(),
        complex_roots_beyond: false,
        borderline: false,
    };
    let hscale = a11.abs().max(a12.abs()).max(a22.abs());
    let disc = a12 * a12 - a11 * a22;
    let disc_tol = T::lit(DISCRIMINANT_TOL) * hscale * hscale;
    out.borderline = disc.abs() <= disc_tol * T::lit(100.0);
    if disc < -disc_tol {
        out.reason = Some(RejectReason::NoDistinctTangents {
            discriminant: disc.to_f64_lossy(),
        });
        return out;
    }
    if disc <= disc_tol {
        out.reason = Some(RejectReason::RepeatedTangent {
            discriminant: disc.to_f64_lossy(),
        });
        return out;
    }
    let two = T::lit(2.0);
    let quad = a11 * u0 * u0 + two * a12 * u0 * v0 + a22 * v0 * v0;
    if quad.abs() <= T::lit(DISCRIMINANT_TOL) * hscale * (u0 * u0 + v0 * v0) {
        out.reason = Some(RejectReason::DegenerateDirection {
            value: quad.to_f64_lossy(),
        });
        return out;
    }

    // γ = 1 is a double root of p(u₀, v₀, γ) at a singularity; remove it and
    // inspect the remaining quadratic.
    let restricted = p.restrict_w(u0, v0);
    let (q1, _) = deflate(&restricted, T::one());
    let (q2, _) = deflate(&q1, T::one());
    let roots = polynomial_roots(&q2).unwrap_or_default();
    let imag_tol = T::lit(1e-9);
    for z in &roots {
        out.other_gamma_roots.push((z.re.to_f64_lossy(), z.im.to_f64_lossy()));
        if z.im.abs() <= imag_tol * z.re.abs().max(T::one()) {
            if z.re > T::one() + T::lit(EXTREME_ROOT_TOL) {
                out.reason = Some(RejectReason::NotExtreme {
                    gamma: z.re.to_f64_lossy(),
                });
            }
        } else if z.re > T::one() {
            out.complex_roots_beyond = true;
        }
    }
    if out.reason.is_some() {
        return out;
    }
    match flat_endpoints(u0, v0, a11, a12, a22) {
        Some((e1, e2)) => out.flat = Some(FlatPortion::from_line(u0, v0, e1, e2, source)),
        None => {
            out.reason = Some(RejectReason::DegenerateDirection {
                value: quad.to_f64_lossy(),
            })
        }
    }
    out
}

/// `Re(e^{-iφ}A)` and `Im(e^{-iφ}A)`.
pub fn rotated_parts<T: Real>(a: &ComplexSquareMatrix<T>, phi: T) -> (HermitianMatrix<T>, HermitianMatrix<T>) {
    hermitian_parts(&a.scale(cis(-phi)))
}

fn top_gap<T: Real>(a: &ComplexSquareMatrix<T>, phi: T) -> T {
    let (h, _) = rotated_parts(a, phi);
    match eig_hermitian(&h) {
        Ok(e) => {
            let n = e.values.len();
            if n < 2 {
                T::infinity()
            } else {
                e.values[n - 1] - e.values[n - 2]
            }
        }
        Err(_) => T::infinity(),
    }
}

fn golden_min<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> T {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Eigen-sweep detector: flats of `W(A)` from coalescence of the top two
/// eigenvalues of `Re(e^{-iφ}A)`.
pub fn flats_via_rotation_sweep<T: Real>(a: &ComplexSquareMatrix<T>, n_phi: usize, gap_tol: T) -> Vec<FlatPortion<T>> {
    assert!(n_phi >= 360, "sweep needs at least 360 angles");
    let norm = a.operator_norm();
    if norm == T::zero() || a.dim() < 2 {
        return Vec::new();
    }
    let tau = T::TAU();
    let dphi = tau / T::lit(n_phi as f64);
    let gaps: Vec<T> = (0..n_phi)
        .into_par_iter()
        .map(|k| top_gap(a, dphi * T::lit(k as f64)))
        .collect();

    let minima: Vec<usize> = (0..n_phi)
        .filter(|&k| {
            let prev = gaps[(k + n_phi - 1) % n_phi];
            let next = gaps[(k + 1) % n_phi];
            // a crossing gives a V-shaped minimum; flat noise (constant gap) does not
            gaps[k] < prev && gaps[k] <= next && gaps[k] <= T::lit(V_RATIO) * prev.max(next)
        })
        .collect();

    let refined: Vec<Option<(T, FlatPortion<T>)>> = minima
        .par_iter()
        .map(|&k| {
            let center = dphi * T::lit(k as f64);
            let phi = golden_min(|x| top_gap(a, x), center - dphi, center + dphi, T::lit(GOLDEN_TOL));
            let gap = top_gap(a, phi);
            if gap > gap_tol {
                return None;
            }
            let (h, e1, e2) = support_extreme_points(a, phi, gap_tol).ok()?;
            let dx = e2[0] - e1[0];
            let dy = e2[1] - e1[1];
            if (dx * dx + dy * dy).sqrt() <= T::lit(SWEEP_MIN_LENGTH) * norm {
                return None;
            }
            let phi = wrap_two_pi(phi);
            Some((phi, FlatPortion::from_support(phi, h, e1, e2, FlatSource::Eigensweep)))
        })
        .collect();

    let mut found: Vec<(T, FlatPortion<T>)> = refined.into_iter().flatten().collect();
    found.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut merged: Vec<(T, FlatPortion<T>)> = Vec::new();
    for (phi, f) in found {
        if let Some(last) = merged.last() {
            if angle_distance(last.0, phi, tau) <= T::lit(MERGE_DPHI) {
                continue;
            }
        }
        if let Some(first) = merged.first() {
            if merged.len() > 1 && angle_distance(first.0, phi, tau) <= T::lit(MERGE_DPHI) {
                continue;
            }
        }
        merged.push((phi, f));
    }
    merged.into_iter().map(|(_, f)| f).collect()
}

/// Tunables for [`analyze_with`].
#[derive(Clone, Copy, Debug)]
pub struct AnalyzeOptions {
    pub n_phi: usize,
    /// Singularity search radius; `None` derives it from the support function.
    pub radius: Option<f64>,
    pub grid_n: usize,
    pub newton_tol: f64,
    /// Sweep coalescence threshold relative to `‖A‖`.
    pub gap_tol: f64,
    /// Vertices of the boundary polyline used for the symmetry check (0 disables it).
    pub symmetry_samples: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            n_phi: DEFAULT_N_PHI,
            radius: None,
            grid_n: crate::singularity::DEFAULT_GRID_N,
            newton_tol: crate::singularity::DEFAULT_NEWTON_TOL,
            gap_tol: DEFAULT_GAP_TOL,
            symmetry_samples: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejection {
    /// Index into [`FlatReport::singularities`].
    pub singularity: usize,
    #[serde(flatten)]
    pub reason: RejectReason,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscrepancyKind {
    /// A singularity flat with no sweep flat on the same line.
    SingularityUnmatched,
    /// A sweep flat whose line matches but whose endpoints differ.
    EndpointMismatch,
    /// A sweep flat not explained by any singularity flat.
    SweepOnly,
    /// A sweep flat on a line through the reference point; it has no finite
    /// line coordinates and is not counted as a mismatch.
    SweepThroughOrigin,
    /// The two polynomial constructions disagree.
    PolynomialMismatch,
    /// A singularity could not be classified.
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub kind: DiscrepancyKind,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub matched: bool,
    pub discrepancies: Vec<Discrepancy>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryInfo {
    /// Axis direction in `[0, π)` from the two flat-line singularities.
    pub axis_angle: f64,
    /// Hausdorff distance between the boundary and its reflection about the axis.
    pub hausdorff: f64,
}

/// Everything [`analyze`] found for one matrix.
#[derive(Clone, Debug, Serialize)]
pub struct FlatReport<T: Real> {
    pub dim: usize,
    pub nilpotent: bool,
    pub operator_norm: f64,
    /// Translation applied before the singularity test (`A − shift·I`).
    pub shift: [f64; 2],
    pub search_radius: f64,
    pub polynomial: PolynomialJson,
    pub nilpotent_coefficients: Option<NilpotentCoefficients<T>>,
    /// Singularities of the shifted polynomial (frame of `A − shift·I`).
    pub singularities: Vec<Singularity<T>>,
    /// Flats in the original frame: singularity-test flats, then any sweep
    /// flats without a singularity counterpart.
    pub flats: Vec<FlatPortion<T>>,
    pub sweep_flats: Vec<FlatPortion<T>>,
    pub rejected: Vec<Rejection>,
    pub cross_check: CrossCheck,
    pub symmetry: Option<SymmetryInfo>,
}

impl<T: Real> FlatReport<T> {
    /// Flats produced by the singularity test.
    pub fn singularity_flats(&self) -> impl Iterator<Item = &FlatPortion<T>> {
        self.flats.iter().filter(|f| f.source == FlatSource::SingularityTest)
    }
}

/// Interior angle of the wedge bounded by two flat lines (the angle at which they meet).
pub fn wedge_angle<T: Real>(f1: &FlatPortion<T>, f2: &FlatPortion<T>) -> T {
    T::PI() - angle_distance(f1.normal_angle, f2.normal_angle, T::TAU())
}

fn endpoints_close<T: Real>(a: &FlatPortion<T>, b: &FlatPortion<T>, tol: T) -> bool {
    let d = |p: [T; 2], q: [T; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let same = d(a.endpoint1, b.endpoint1).max(d(a.endpoint2, b.endpoint2));
    let swapped = d(a.endpoint1, b.endpoint2).max(d(a.endpoint2, b.endpoint1));
    same.min(swapped) <= tol
}

fn lines_close<T: Real>(a: &FlatPortion<T>, b: &FlatPortion<T>, tol: T) -> bool {
    let scale = (a.line_u0 * a.line_u0 + a.line_v0 * a.line_v0).sqrt().max(T::one());
    let du = (a.line_u0 - b.line_u0).abs();
    let dv = (a.line_v0 - b.line_v0).abs();
    du.max(dv) <= tol * scale
}

fn support_probe<T: Real>(a: &ComplexSquareMatrix<T>) -> Result<(Vec<[T; 2]>, T)> {
    let (_, samples) = sample_boundary(a, PROBE_SAMPLES)?;
    let pts: Vec<[T; 2]> = samples.iter().map(|s| s.point).collect();
    let hmin = samples.iter().map(|s| s.support_value).fold(T::infinity(), T::min);
    Ok((pts, hmin))
}

/// Runs both detectors with default options.
pub fn analyze<T: Real>(a: &ComplexSquareMatrix<T>) -> Result<FlatReport<T>> {
    analyze_with(a, &AnalyzeOptions::default())
}

pub fn analyze_with<T: Real>(a: &ComplexSquareMatrix<T>, opts: &AnalyzeOptions) -> Result<FlatReport<T>> {
    if a.dim() != 4 {
        return Err(NrError::Dimension {
            expected: 4,
            found: a.dim(),
        });
    }
    if !a.is_finite() {
        return Err(NrError::Domain("matrix has non-finite entries".into()));
    }
    let norm = a.operator_norm();
    let nilpotent = is_nilpotent(a, T::lit(NILPOTENT_TOL));
    let polynomial = nr_poly_general(a)?;
    let mut discrepancies = Vec::new();

    let nilpotent_coefficients = if nilpotent {
        let c = nr_poly_nilpotent(a)?;
        let gap = c.expand().max_abs_diff(&polynomial);
        if gap > T::lit(1e-9) * polynomial.max_abs_coeff().max(T::one()) {
            discrepancies.push(Discrepancy {
                kind: DiscrepancyKind::PolynomialMismatch,
                detail: format!("closed-form and interpolated coefficients differ by {:e}", gap.to_f64_lossy()),
            });
        }
        Some(c)
    } else {
        None
    };

    // Work in a frame where 0 ∈ W(A).
    let (shift, shifted) = if nilpotent || norm == T::zero() {
        ([T::zero(), T::zero()], a.clone())
    } else {
        let (pts, _) = support_probe(a)?;
        let m = T::lit(pts.len() as f64);
        let cxs = pts.iter().map(|p| p[0]).sum::<T>() / m;
        let cys = pts.iter().map(|p| p[1]).sum::<T>() / m;
        ([cxs, cys], a.shift(cx(-cxs, -cys)))
    };
    let p_shifted = if nilpotent {
        polynomial
    } else {
        nr_poly_general(&shifted)?
    };
    let shifted_norm = shifted.operator_norm();

    let radius = match opts.radius {
        Some(r) => T::lit(r),
        None => {
            if shifted_norm == T::zero() {
                T::one()
            } else {
                let (_, hmin) = support_probe(&shifted)?;
                let floor = T::lit(1e-3) * shifted_norm;
                T::lit(1.25) / hmin.max(floor)
            }
        }
    };

    let singularities = if shifted_norm == T::zero() {
        Vec::new()
    } else {
        let mut so = SearchOptions::new(radius.to_f64_lossy());
        so.grid_n = opts.grid_n;
        so.tol = opts.newton_tol;
        find_real_singularities_with(&p_shifted, &so)
    };

    let mut local_flats = Vec::new();
    let mut rejected = Vec::new();
    for (idx, s) in singularities.iter().enumerate() {
        match flat_from_singularity(&p_shifted, s) {
            Ok(test) => match (test.flat, test.reason) {
                (Some(f), _) => local_flats.push(f),
                (None, Some(reason)) => rejected.push(Rejection { singularity: idx, reason }),
                (None, None) => {}
            },
            Err(e) => discrepancies.push(Discrepancy {
                kind: DiscrepancyKind::Unclassified,
                detail: format!("singularity {idx}: {e}"),
            }),
        }
    }

    let gap_tol = T::lit(opts.gap_tol) * shifted_norm;
    let sweep_local = flats_via_rotation_sweep(&shifted, opts.n_phi, gap_tol);

    let line_tol = T::lit(MATCH_LINE_TOL);
    let end_tol = T::lit(MATCH_ENDPOINT_TOL);
    let mut sweep_used = vec![false; sweep_local.len()];
    for f in &local_flats {
        let line_match = sweep_local.iter().position(|g| lines_close(f, g, line_tol));
        match line_match {
            Some(j) => {
                sweep_used[j] = true;
                if !endpoints_close(f, &sweep_local[j], end_tol) {
                    discrepancies.push(Discrepancy {
                        kind: DiscrepancyKind::EndpointMismatch,
                        detail: format!(
                            "line ({}, {}): endpoints {:?}/{:?} vs sweep {:?}/{:?}",
                            f.line_u0, f.line_v0, f.endpoint1, f.endpoint2, sweep_local[j].endpoint1, sweep_local[j].endpoint2
                        ),
                    });
                }
            }
            None => discrepancies.push(Discrepancy {
                kind: DiscrepancyKind::SingularityUnmatched,
                detail: format!("no sweep flat on line ({}, {})", f.line_u0, f.line_v0),
            }),
        }
    }
    let mut extra_sweep = Vec::new();
    for (j, g) in sweep_local.iter().enumerate() {
        if sweep_used[j] {
            continue;
        }
        if g.distance <= T::lit(1e-9) * shifted_norm.max(T::one()) {
            discrepancies.push(Discrepancy {
                kind: DiscrepancyKind::SweepThroughOrigin,
                detail: format!("sweep flat with normal angle {} passes through the reference point", g.normal_angle),
            });
        } else {
            discrepancies.push(Discrepancy {
                kind: DiscrepancyKind::SweepOnly,
                detail: format!("sweep flat on line ({}, {}) has no singularity counterpart", g.line_u0, g.line_v0),
            });
        }
        extra_sweep.push(*g);
    }
    let matched = !discrepancies.iter().any(|d| {
        matches!(
            d.kind,
            DiscrepancyKind::SingularityUnmatched | DiscrepancyKind::EndpointMismatch | DiscrepancyKind::SweepOnly | DiscrepancyKind::PolynomialMismatch
        )
    });

    // back to the original frame
    let flats: Vec<FlatPortion<T>> = local_flats
        .iter()
        .chain(extra_sweep.iter())
        .map(|f| f.translated(shift))
        .collect();
    let sweep_flats: Vec<FlatPortion<T>> = sweep_local.iter().map(|f| f.translated(shift)).collect();

    // Equidistant pair of flats: reflection axis through the shift point.
    let symmetry = if local_flats.len() == 2 && opts.symmetry_samples > 0 {
        let (f1, f2) = (&local_flats[0], &local_flats[1]);
        let rel = (f1.distance - f2.distance).abs() / f1.distance.max(f2.distance);
        if rel <= T::lit(1e-8) {
            let t1 = f1.line_v0.atan2(f1.line_u0);
            let t2 = f2.line_v0.atan2(f2.line_u0);
            let axis = symmetry_line(t1, t2);
            let (poly, _) = sample_boundary(&shifted, opts.symmetry_samples)?;
            Some(SymmetryInfo {
                axis_angle: axis.to_f64_lossy(),
                hausdorff: check_symmetry(&poly, axis).to_f64_lossy(),
            })
        } else {
            None
        }
    } else {
        None
    };

    Ok(FlatReport {
        dim: a.dim(),
        nilpotent,
        operator_norm: norm.to_f64_lossy(),
        shift: [shift[0].to_f64_lossy(), shift[1].to_f64_lossy()],
        search_radius: radius.to_f64_lossy(),
        polynomial: polynomial.to_json(),
        nilpotent_coefficients,
        singularities,
        flats,
        sweep_flats,
        rejected,
        cross_check: CrossCheck { matched, discrepancies },
        symmetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_family_matrix, build_m, FamilyParams};
    use crate::singularity::find_real_singularities;

    type M = ComplexSquareMatrix<f64>;

    #[test]
    fn endpoints_lie_on_line_and_match_length_formula() {
        let (u0, v0) = (0.8_f64, -1.3_f64);
        let (a11, a12, a22) = (-0.5_f64, 2.0_f64, 1.5_f64);
        let (e1, e2) = flat_endpoints(u0, v0, a11, a12, a22).unwrap();
        for e in [e1, e2] {
            assert!((u0 * e[0] + v0 * e[1] + 1.0).abs() < 1e-14);
        }
        let dist = ((e1[0] - e2[0]).powi(2) + (e1[1] - e2[1]).powi(2)).sqrt();
        assert!((dist - flat_length(u0, v0, a11, a12, a22)).abs() < 1e-12);
    }

    #[test]
    fn maximal_family_flat_has_length_d() {
        let params = FamilyParams::<f64>::maximal(1.0, 2.0 * std::f64::consts::FRAC_PI_3, 0.0).unwrap();
        let a = build_family_matrix(&params).unwrap();
        let p = nr_poly_general(&a).unwrap();
        let (s, c) = (params.s(), params.c());
        let sing = Singularity::at(&p, s / params.d, c / params.d);
        let test = flat_from_singularity(&p, &sing).unwrap();
        let f = test.flat.expect("flat");
        assert!((f.length - 1.0).abs() < 1e-9, "{}", f.length);
        assert!((f.distance - 1.0).abs() < 1e-12);
        for r in f.endpoint_line_residuals() {
            assert!(r < 1e-8);
        }
    }

    #[test]
    fn jordan_block_has_no_flats() {
        let j = M::jordan_block(4);
        assert!(flats_via_rotation_sweep(&j, 2048, 1e-7).is_empty());
        let rep = analyze(&j).unwrap();
        assert!(rep.singularities.is_empty());
        assert!(rep.flats.is_empty());
        assert!(rep.cross_check.matched);
    }

    #[test]
    fn normal_square_sweep_and_singularity_paths() {
        let a = M::diagonal(&[cx(1.0, 0.0), cx(0.0, 1.0), cx(-1.0, 0.0), cx(0.0, -1.0)]);
        let flats = flats_via_rotation_sweep(&a, 2048, 1e-7);
        assert_eq!(flats.len(), 4);
        for f in &flats {
            assert!((f.length - 2f64.sqrt()).abs() < 1e-9);
            assert!((f.distance - 0.5f64.sqrt()).abs() < 1e-9);
        }
        let rep = analyze(&a).unwrap();
        assert_eq!(rep.flats.len(), 4, "{:#?}", rep.cross_check);
        assert!(rep.cross_check.matched, "{:#?}", rep.cross_check);
        // a22 vanishes at every vertex singularity: the rotated frame is used
        let p = nr_poly_general(&a).unwrap();
        let s = find_real_singularities(&p, 3.0, 32, 1e-10);
        let t = flat_from_singularity(&p, &s[0]).unwrap();
        assert!(t.rotated_frame);
        assert!((t.flat.unwrap().length - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_has_nothing() {
        let rep = analyze(&M::zeros(4)).unwrap();
        assert!(rep.flats.is_empty() && rep.singularities.is_empty());
        assert!(flats_via_rotation_sweep(&M::zeros(4), 360, 1e-7).is_empty());
    }

    #[test]
    fn sweep_finds_maximal_flats() {
        let m = build_m::<f64>(1.0, 2.0 * std::f64::consts::FRAC_PI_3).unwrap();
        let flats = flats_via_rotation_sweep(&m, 2048, 1e-7 * m.operator_norm());
        assert_eq!(flats.len(), 2);
        for f in &flats {
            assert!((f.length - 1.0).abs() < 1e-8);
            assert!((f.distance - 1.0).abs() < 1e-9);
        }
        assert!((wedge_angle(&flats[0], &flats[1]) - 2.0 * std::f64::consts::FRAC_PI_3).abs() < 1e-8);
    }

    #[test]
    fn non_extreme_singularity_is_rejected() {
        // interior tangent: the 3×3-like example of two nested components is
        // emulated by a polynomial whose γ-quartic has a root beyond 1:
        // (γ − 1)²(γ − 2)(γ + 1) = γ⁴ − 3γ³ + γ² + 3γ − 2 along (u, v) = (1, 0)
        let mut p = TernaryQuartic::<f64>::zero();
        // p(u, v, w) = w⁴ − 3w³u + u²w² + 3wu³ − 2u⁴ + (v-terms making (1,0) singular)
        let set = |p: &mut TernaryQuartic<f64>, i, j, k, c| {
            p.coeffs[crate::nrpoly::monomial_index(i, j, k).unwrap()] = c;
        };
        set(&mut p, 0, 0, 4, 1.0);
        set(&mut p, 1, 0, 3, -3.0);
        set(&mut p, 2, 0, 2, 1.0);
        set(&mut p, 3, 0, 1, 3.0);
        set(&mut p, 4, 0, 0, -2.0);
        set(&mut p, 2, 2, 0, 1.0);
        set(&mut p, 0, 2, 2, 2.0);
        let g = p.gradient(1.0, 0.0, 1.0);
        assert!(g.iter().all(|x| x.abs() < 1e-12), "{g:?}");
        let s = Singularity::at(&p, 1.0, 0.0);
        let t = flat_from_singularity(&p, &s).unwrap();
        assert!(t.flat.is_none());
        assert!(matches!(t.reason, Some(RejectReason::NotExtreme { gamma }) if (gamma - 2.0).abs() < 1e-9), "{:?}", t);
    }

    #[test]
    fn family_report_cross_checks() {
        let params = FamilyParams::<f64>::new(1.3, 1.1, 1.2, 1.4, 0.4, false).unwrap();
        let a = build_family_matrix(&params).unwrap();
        let rep = analyze(&a).unwrap();
        assert!(rep.nilpotent);
        assert_eq!(rep.flats.len(), 2, "{:#?}", rep);
        assert!(rep.cross_check.matched, "{:#?}", rep.cross_check);
        let sym = rep.symmetry.unwrap();
        assert!(angle_distance(sym.axis_angle, 0.4, std::f64::consts::PI) < 1e-9);
        assert!(sym.hausdorff < 1e-5 * rep.operator_norm);
    }
}
