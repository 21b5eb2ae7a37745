//! Verification suites: each check compares a computed quantity with a known
//! value or with the independent boundary oracle.

use rand::Rng;
use serde::Serialize;

use crate::boundary::{check_symmetry, extract_flats_geometric, hausdorff, sample_boundary, GeometricOptions};
use crate::family::{build_ak, build_family_matrix, build_m, predicted_flats, theta_from_k, trace_invariant_of, ymax, FamilyParams};
use crate::flatdetect::{analyze, flats_via_rotation_sweep, wedge_angle, FlatPortion, FlatReport, DEFAULT_GAP_TOL};
use crate::linalg::ComplexSquareMatrix;
use crate::nrpoly::{nr_poly_general, nr_poly_nilpotent, TernaryQuartic};
use crate::random::{rng, strictly_upper};
use crate::scalar::{angle_distance, cx};

type M = ComplexSquareMatrix<f64>;

pub const ORACLE_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Checks against values stated for specific matrices and families.
    Paper,
    /// Seeded randomized property checks.
    Random,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Paper => &[1, 3, 4, 5, 6, 9, 10],
            Suite::Random => &[2, 7, 8],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Number of random nilpotent matrices for the flat-count bound.
    pub flat_count_samples: usize,
    pub family_grid: bool,
    pub symmetry_samples: usize,
    pub derivative_pairs: usize,
    pub closed_form_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            flat_count_samples: 1000,
            family_grid: true,
            symmetry_samples: 50,
            derivative_pairs: 1000,
            closed_form_samples: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<38} {}  worst={:.3e} tol={:.1e}  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.worst,
            self.tolerance,
            self.detail
        )
    }
}

/// Tracks the worst ratio `error / tolerance` over several checks.
struct Tally {
    worst_ratio: f64,
    worst: f64,
    tol: f64,
    notes: Vec<String>,
    hard_fail: bool,
}

impl Tally {
    fn new(tol: f64) -> Self {
        Self {
            worst_ratio: 0.0,
            worst: 0.0,
            tol,
            notes: Vec::new(),
            hard_fail: false,
        }
    }

    fn check(&mut self, err: f64, tol: f64, what: impl FnOnce() -> String) {
        let ratio = if err.is_nan() { f64::INFINITY } else { err / tol };
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
            self.worst = err;
            self.tol = tol;
        }
        if !(err <= tol) && self.notes.len() < 5 {
            self.notes.push(what());
        }
    }

    fn fail(&mut self, msg: String) {
        self.hard_fail = true;
        if self.notes.len() < 5 {
            self.notes.push(msg);
        }
    }

    fn finish(self, id: u8, name: &'static str, summary: String) -> CriterionResult {
        let passed = !self.hard_fail && self.worst_ratio <= 1.0;
        let detail = if self.notes.is_empty() {
            summary
        } else {
            format!("{summary}; {}", self.notes.join("; "))
        };
        CriterionResult {
            id,
            name,
            passed,
            worst: self.worst,
            tolerance: self.tol,
            detail,
        }
    }
}

/// The 4×4 nilpotent matrix with two non-parallel flats used as the reference example.
pub fn reference_matrix() -> M {
    let z = cx(0.0, 0.0);
    let r = |v: f64| cx(v, 0.0);
    M::from_rows(&[
        vec![z, r(1.0), z, r(-2.0)],
        vec![z, z, r(2.0), cx(0.0, 1.0)],
        vec![z, z, z, r(1.0)],
        vec![z, z, z, z],
    ])
    .expect("4x4")
}

/// `k` with flat-line angle `9π/10` in the `A_k` family, in nested-radical form.
pub fn k_nine_tenths() -> f64 {
    ((5f64.sqrt() / 8.0 + 5.0 / 8.0).sqrt() + 1.0).sqrt()
}

fn singularity_flats(rep: &FlatReport<f64>) -> Vec<FlatPortion<f64>> {
    rep.singularity_flats().copied().collect()
}

fn oracle_flats(a: &M) -> Vec<FlatPortion<f64>> {
    match sample_boundary(a, ORACLE_SAMPLES) {
        Ok((poly, _)) => extract_flats_geometric(&poly, &GeometricOptions::default()),
        Err(_) => Vec::new(),
    }
}

/// Pairs each predicted flat with the detected flat of nearest normal direction.
fn pair_by_normal<'a>(pred: &[FlatPortion<f64>], found: &'a [FlatPortion<f64>]) -> Option<Vec<&'a FlatPortion<f64>>> {
    pred.iter()
        .map(|p| {
            found.iter().min_by(|a, b| {
                let da = angle_distance(a.normal_angle, p.normal_angle, std::f64::consts::TAU);
                let db = angle_distance(b.normal_angle, p.normal_angle, std::f64::consts::TAU);
                da.total_cmp(&db)
            })
        })
        .collect()
}

pub fn criterion_1() -> CriterionResult {
    let a = reference_matrix();
    let d = 5f64.sqrt() / 2.0;
    let theta = 2.0 * (5f64.sqrt() / 4.0).asin();
    let length = 2.0 * 55f64.sqrt() / 19.0;
    let mut t = Tally::new(1e-8);
    let mut summary = String::new();
    match analyze(&a) {
        Ok(rep) => {
            let flats = singularity_flats(&rep);
            if flats.len() != 2 || rep.flats.len() != 2 {
                t.fail(format!("expected 2 flats, found {} ({} from singularities)", rep.flats.len(), flats.len()));
            } else {
                for f in &flats {
                    t.check((f.distance - d).abs(), 1e-8, || format!("distance {}", f.distance));
                    t.check((f.length - length).abs(), 1e-6, || format!("length {}", f.length));
                }
                let w = wedge_angle(&flats[0], &flats[1]);
                t.check((w - theta).abs(), 1e-8, || format!("angle {w}"));
                summary = format!("lengths {:.9}, {:.9}; angle {:.12}", flats[0].length, flats[1].length, w);
                if let Some(s) = &rep.symmetry {
                    summary.push_str(&format!("; axis {:.9}", s.axis_angle));
                }
            }
        }
        Err(e) => t.fail(format!("analyze failed: {e}")),
    }
    let oracle = oracle_flats(&a);
    if oracle.len() != 2 {
        t.fail(format!("oracle found {} flats", oracle.len()));
    }
    for f in &oracle {
        t.check((f.length - length).abs(), 1e-3, || format!("oracle length {}", f.length));
    }
    t.finish(1, "reference example: two flats", summary)
}

pub fn criterion_2(cfg: &VerifyConfig) -> CriterionResult {
    let mut r = rng(cfg.seed);
    let mut t = Tally::new(1e-9);
    for i in 0..cfg.closed_form_samples {
        let a: M = strictly_upper(&mut r, 4);
        match (nr_poly_general(&a), nr_poly_nilpotent(&a)) {
            (Ok(g), Ok(c)) => {
                let err = c.expand().max_abs_diff(&g);
                t.check(err, 1e-9, || format!("sample {i}: {err:e}"));
            }
            (Err(e), _) | (_, Err(e)) => t.fail(format!("sample {i}: {e}")),
        }
    }
    t.finish(2, "nilpotent closed form = interpolation", format!("{} matrices", cfg.closed_form_samples))
}

/// Deterministic grid over the valid parameter region (200 points).
pub fn family_grid() -> Vec<FamilyParams<f64>> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(200);
    let mut idx = 0usize;
    for i in 0..5 {
        let d = 0.3 + 2.7 * i as f64 / 4.0;
        for j in 0..5 {
            let theta = PI * (0.1 + 0.8 * j as f64 / 4.0);
            for xf in [0.2, 0.4, 0.6, 0.8] {
                let x = 2.0 * d * xf;
                let ym = ymax(d, theta, x).expect("grid inside the valid region");
                for yf in [0.5, 1.0] {
                    let t = (0.37 * idx as f64) % std::f64::consts::TAU;
                    idx += 1;
                    if let Ok(p) = FamilyParams::new(d, theta, x, ym * yf, t, idx % 2 == 0) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn random_family(r: &mut impl Rng) -> FamilyParams<f64> {
    use std::f64::consts::{PI, TAU};
    loop {
        let d = r.random_range(0.3..3.0);
        let theta = r.random_range(0.1 * PI..0.9 * PI);
        let x = 2.0 * d * r.random_range(0.1..0.9);
        let Ok(ym) = ymax(d, theta, x) else { continue };
        let y = ym * r.random_range(0.2..1.0);
        let t = r.random_range(0.0..TAU);
        if let Ok(p) = FamilyParams::new(d, theta, x, y, t, r.random_bool(0.5)) {
            return p;
        }
    }
}

pub fn criterion_3(cfg: &VerifyConfig) -> CriterionResult {
    let grid = if cfg.family_grid { family_grid() } else { family_grid().into_iter().step_by(10).collect() };
    let mut t = Tally::new(1e-7);
    let start = std::time::Instant::now();
    for (i, p) in grid.iter().enumerate() {
        let (a, pred) = match (build_family_matrix(p), predicted_flats(p)) {
            (Ok(a), Ok(pr)) => (a, pr),
            _ => {
                t.fail(format!("point {i}: construction failed"));
                continue;
            }
        };
        let rep = match analyze(&a) {
            Ok(r) => r,
            Err(e) => {
                t.fail(format!("point {i}: {e}"));
                continue;
            }
        };
        let found = singularity_flats(&rep);
        if found.len() != 2 || rep.flats.len() != 2 {
            t.fail(format!("point {i} {p:?}: {} flats", rep.flats.len()));
            continue;
        }
        let Some(pairs) = pair_by_normal(&pred.flats, &found) else { continue };
        for (pf, f) in pred.flats.iter().zip(pairs) {
            t.check((f.distance - pf.distance).abs(), 1e-7, || format!("point {i}: distance {} vs {}", f.distance, pf.distance));
            t.check((f.length - pf.length).abs(), 1e-7, || format!("point {i}: length {} vs {}", f.length, pf.length));
            let scale = (pf.line_u0.hypot(pf.line_v0)).max(1.0);
            let dl = (f.line_u0 - pf.line_u0).abs().max((f.line_v0 - pf.line_v0).abs()) / scale;
            t.check(dl, 1e-7, || format!("point {i}: line ({}, {})", f.line_u0, f.line_v0));
        }
        let w = wedge_angle(&found[0], &found[1]);
        t.check((w - p.theta).abs(), 1e-7, || format!("point {i}: angle {w} vs {}", p.theta));
        let oracle = oracle_flats(&a);
        if oracle.len() != 2 {
            t.fail(format!("point {i}: oracle found {} flats", oracle.len()));
            continue;
        }
        if let Some(pairs) = pair_by_normal(&pred.flats, &oracle) {
            for (pf, f) in pred.flats.iter().zip(pairs) {
                t.check((f.length - pf.length).abs(), 1e-3, || format!("point {i}: oracle length {} vs {}", f.length, pf.length));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 120.0 {
        t.fail(format!("runtime {secs:.1}s exceeds 120s"));
    }
    t.finish(3, "family round trip", format!("{} parameter points in {secs:.1}s", grid.len()))
}

fn angle_check(t: &mut Tally, a: &M, expected: f64, label: &str) {
    match analyze(a) {
        Ok(rep) => {
            let f = singularity_flats(&rep);
            if f.len() != 2 {
                t.fail(format!("{label}: {} flats", f.len()));
            } else {
                let w = wedge_angle(&f[0], &f[1]);
                t.check((w - expected).abs(), 1e-8, || format!("{label}: angle {w} vs {expected}"));
            }
        }
        Err(e) => t.fail(format!("{label}: {e}")),
    }
}

pub fn criterion_4() -> CriterionResult {
    use std::f64::consts::PI;
    let mut t = Tally::new(1e-8);
    let k1 = (1.0 - 3f64.sqrt() / 2.0).sqrt();
    let k2 = k_nine_tenths();
    match build_ak(k1) {
        Ok(a) => angle_check(&mut t, &a, PI / 6.0, "k1"),
        Err(e) => t.fail(e.to_string()),
    }
    match build_ak(k2) {
        Ok(a) => angle_check(&mut t, &a, 0.9 * PI, "k2"),
        Err(e) => t.fail(e.to_string()),
    }
    t.check((theta_from_k(k2) - 0.9 * PI).abs(), 1e-12, || "k2 inversion".into());
    t.finish(4, "one-parameter family angles", format!("k1={k1:.12}, k2={k2:.12}"))
}

pub fn criterion_5() -> CriterionResult {
    let theta = 2.0 * std::f64::consts::FRAC_PI_3;
    let mut t = Tally::new(1e-7);
    let a = match build_m(1.0, theta) {
        Ok(a) => a,
        Err(e) => {
            t.fail(e.to_string());
            return t.finish(5, "maximal flat length", String::new());
        }
    };
    let mut measured = f64::NAN;
    match analyze(&a) {
        Ok(rep) => {
            let f = singularity_flats(&rep);
            if f.len() != 2 {
                t.fail(format!("{} flats", f.len()));
            }
            for fl in &f {
                measured = fl.length;
                t.check((fl.length - 1.0).abs(), 1e-7, || format!("length {}", fl.length));
            }
        }
        Err(e) => t.fail(e.to_string()),
    }
    let oracle = oracle_flats(&a);
    if oracle.len() != 2 {
        t.fail(format!("oracle found {} flats", oracle.len()));
    }
    for f in &oracle {
        t.check((f.length - 1.0).abs(), 1e-3, || format!("oracle length {}", f.length));
    }
    // shrink x by 1% at fixed y
    let Ok(p) = FamilyParams::maximal(1.0, theta, 0.0) else {
        t.fail("maximal parameters rejected".into());
        return t.finish(5, "maximal flat length", String::new());
    };
    match FamilyParams::new(p.d, p.theta, 0.99 * p.x, p.y, 0.0, false) {
        Ok(q) => {
            let lq = q.flat_length();
            if !(lq < p.flat_length()) {
                t.fail(format!("perturbed length {lq} not below {}", p.flat_length()));
            }
            if let Ok(rep) = build_family_matrix(&q).and_then(|m| analyze(&m)) {
                if let Some(f) = rep.singularity_flats().next() {
                    if !(f.length < 1.0) {
                        t.fail(format!("perturbed measured length {} not below 1", f.length));
                    }
                }
            }
        }
        Err(e) => t.fail(format!("perturbed parameters rejected: {e}")),
    }
    t.finish(5, "maximal flat length", format!("measured {measured:.12}"))
}

pub fn criterion_6(cfg: &VerifyConfig) -> CriterionResult {
    let mut r = rng(cfg.seed.wrapping_add(6));
    let mut t = Tally::new(1e-5);
    for i in 0..cfg.symmetry_samples {
        let p = random_family(&mut r);
        let Ok(a) = build_family_matrix(&p) else {
            t.fail(format!("sample {i}: construction failed"));
            continue;
        };
        let norm = a.operator_norm();
        let rep = match analyze(&a) {
            Ok(rep) => rep,
            Err(e) => {
                t.fail(format!("sample {i}: {e}"));
                continue;
            }
        };
        let f = singularity_flats(&rep);
        if f.len() != 2 {
            t.fail(format!("sample {i}: {} flats", f.len()));
            continue;
        }
        let axis = crate::family::symmetry_line(f[0].line_v0.atan2(f[0].line_u0), f[1].line_v0.atan2(f[1].line_u0));
        let Ok((poly, _)) = sample_boundary(&a, 2048) else {
            t.fail(format!("sample {i}: sampling failed"));
            continue;
        };
        let h = check_symmetry(&poly, axis) / norm;
        t.check(h, 1e-5, || format!("sample {i}: relative Hausdorff {h:e}"));
        let off = angle_distance(axis, p.t, std::f64::consts::PI);
        t.check(off, 1e-6, || format!("sample {i}: axis {axis} vs t {}", p.t));
    }
    t.finish(6, "reflection symmetry", format!("{} family matrices", cfg.symmetry_samples))
}

pub fn criterion_7(cfg: &VerifyConfig) -> CriterionResult {
    let mut r = rng(cfg.seed.wrapping_add(7));
    let mut t = Tally::new(2.0);
    let mut histogram = [0usize; 4];
    for i in 0..cfg.flat_count_samples {
        let a: M = strictly_upper(&mut r, 4);
        let gap = DEFAULT_GAP_TOL * a.operator_norm();
        let n = flats_via_rotation_sweep(&a, 2048, gap).len();
        histogram[n.min(3)] += 1;
        t.check(n as f64, 2.0, || format!("sample {i}: {n} flats"));
    }
    t.finish(
        7,
        "at most two flats (random nilpotent)",
        format!("{} matrices, flat counts 0/1/2/3+: {:?}", cfg.flat_count_samples, histogram),
    )
}

fn random_quartic(r: &mut impl Rng) -> TernaryQuartic<f64> {
    let mut c = [0.0; 15];
    for v in c.iter_mut() {
        *v = r.random_range(-1.0..1.0);
    }
    TernaryQuartic::new(c)
}

pub fn criterion_8(cfg: &VerifyConfig) -> CriterionResult {
    let mut r = rng(cfg.seed.wrapping_add(8));
    let mut t = Tally::new(1e-6);
    for i in 0..cfg.derivative_pairs {
        let p = random_quartic(&mut r);
        let x: [f64; 3] = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        let h = 1e-5 * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let shifted = |k: usize, s: f64| {
            let mut y = x;
            y[k] += s;
            y
        };
        let g = p.gradient(x[0], x[1], x[2]);
        let hs = p.hessian(x[0], x[1], x[2]);
        let scale = p.gradient_abs(x[0], x[1], x[2]).iter().fold(0.0f64, |m, v| m.max(*v));
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut gerr = 0.0f64;
        let mut herr = 0.0f64;
        let mut hnorm = 0.0f64;
        for k in 0..3 {
            let (a, b) = (shifted(k, h), shifted(k, -h));
            let fd = (p.eval(a[0], a[1], a[2]) - p.eval(b[0], b[1], b[2])) / (2.0 * h);
            gerr = gerr.max((fd - g[k]).abs());
            let (ga, gb) = (p.gradient(a[0], a[1], a[2]), p.gradient(b[0], b[1], b[2]));
            for j in 0..3 {
                let fd2 = (ga[j] - gb[j]) / (2.0 * h);
                herr = herr.max((fd2 - hs[j][k]).abs());
                hnorm = hnorm.max(hs[j][k].abs());
            }
        }
        // relative to the derivative size, floored by the cancellation-free scale
        let grel = gerr / gnorm.max(1e-3 * scale);
        let hrel = herr / hnorm.max(1e-3 * scale);
        t.check(grel, 1e-6, || format!("pair {i}: gradient relative error {grel:e}"));
        t.check(hrel, 1e-6, || format!("pair {i}: Hessian relative error {hrel:e}"));
    }
    t.finish(8, "derivatives vs finite differences", format!("{} pairs", cfg.derivative_pairs))
}

pub fn criterion_9() -> CriterionResult {
    let a = M::jordan_block(4);
    let mut t = Tally::new(1e-6);
    match analyze(&a) {
        Ok(rep) => {
            if !rep.singularities.is_empty() || !rep.flats.is_empty() {
                t.fail(format!("{} singularities, {} flats", rep.singularities.len(), rep.flats.len()));
            }
        }
        Err(e) => t.fail(e.to_string()),
    }
    let r = (std::f64::consts::PI / 5.0).cos();
    match sample_boundary(&a, 1024) {
        Ok((poly, _)) => {
            for v in &poly.vertices {
                let e = (v[0].hypot(v[1]) - r).abs();
                t.check(e, 1e-6, || format!("vertex radius {}", v[0].hypot(v[1])));
            }
        }
        Err(e) => t.fail(e.to_string()),
    }
    t.finish(9, "disk control (Jordan block)", format!("radius cos(pi/5) = {r:.12}"))
}

pub fn criterion_10() -> CriterionResult {
    let mut t = Tally::new(1e-10);
    let mut params = family_grid();
    params.extend((1..8).map(|i| FamilyParams::from_k(0.18 * i as f64).expect("k in range")));
    for (i, p) in params.iter().enumerate() {
        let Ok(a) = build_family_matrix(p) else { continue };
        let got = trace_invariant_of(&a);
        let want = p.trace_invariant();
        let err = (got - want).abs() / want.abs().max(1.0);
        t.check(err, 1e-10, || format!("params {i}: {got} vs {want}"));
    }
    // equal xy, different x
    let (d, theta) = (1.0, 1.2);
    let p1 = FamilyParams::new(d, theta, 0.8, 1.0, 0.0, false);
    let p2 = FamilyParams::new(d, theta, 1.0, 0.8, 0.0, false);
    let mut summary = format!("{} matrices", params.len());
    match (p1, p2) {
        (Ok(p1), Ok(p2)) => {
            let (a1, a2) = (build_family_matrix(&p1), build_family_matrix(&p2));
            if let (Ok(a1), Ok(a2)) = (a1, a2) {
                let (i1, i2): (f64, f64) = (trace_invariant_of(&a1), trace_invariant_of(&a2));
                if !((i1 - i2).abs() > 1e-6) {
                    t.fail(format!("invariants {i1} and {i2} do not separate"));
                }
                match (sample_boundary(&a1, ORACLE_SAMPLES), sample_boundary(&a2, ORACLE_SAMPLES)) {
                    (Ok((b1, _)), Ok((b2, _))) => {
                        let h = hausdorff(&b1, &b2);
                        t.check(h, 1e-4, || format!("boundaries differ by {h:e}"));
                        summary.push_str(&format!("; invariants {i1:.9} vs {i2:.9}, boundary distance {h:.2e}"));
                    }
                    _ => t.fail("sampling failed".into()),
                }
            }
        }
        _ => t.fail("equal-xy parameters rejected".into()),
    }
    t.finish(10, "trace invariant", summary)
}

pub fn run_criterion(id: u8, cfg: &VerifyConfig) -> Option<CriterionResult> {
    Some(match id {
        1 => criterion_1(),
        2 => criterion_2(cfg),
        3 => criterion_3(cfg),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(cfg),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        9 => criterion_9(),
        10 => criterion_10(),
        _ => return None,
    })
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Vec<CriterionResult> {
    suite.criteria().iter().filter_map(|&id| run_criterion(id, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_two_hundred_valid_points() {
        let g = family_grid();
        assert_eq!(g.len(), 200);
        assert!(g.iter().all(|p| p.validate().is_ok()));
    }

    #[test]
    fn example_k_values() {
        assert!((theta_from_k(k_nine_tenths()) - 0.9 * std::f64::consts::PI).abs() < 1e-12);
        assert!(reference_matrix().is_strictly_upper_triangular());
    }
}
