//! Curvature models, bending angle, tube coordinates and the metric factor of
//! a curved strip of constant width.
//!
//! The strip is parametrised by arc length `s` along the lower boundary and
//! the normal distance `u ∈ (0, d)`. The signed curvature `γ(s)` must extend
//! analytically off the real axis: the distorted operators evaluate it at
//! `s + iβ f(s)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Curvature and its first two complex derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureJet {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl CurvatureJet {
    pub const ZERO: CurvatureJet = CurvatureJet {
        value: Complex64::new(0.0, 0.0),
        d1: Complex64::new(0.0, 0.0),
        d2: Complex64::new(0.0, 0.0),
    };
}

/// Analytic curvature families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CurvatureModel {
    /// Straight strip.
    Zero,
    /// `γ(s) = amplitude / (1 + s^(2·exponent))`.
    Rational { amplitude: f64, exponent: u32 },
}

/// Below this modulus of `1 + z^2n` the rational model refuses to evaluate.
const POLE_GUARD: f64 = 1e-8;

impl CurvatureModel {
    pub fn rational(amplitude: f64, exponent: u32) -> Result<Self> {
        if exponent < 1 {
            return Err(Error::invalid("rational curvature exponent must be at least 1"));
        }
        if !amplitude.is_finite() {
            return Err(Error::invalid("curvature amplitude must be finite"));
        }
        Ok(CurvatureModel::Rational { amplitude, exponent })
    }

    /// Decay exponent ε with `γ(s) = O(|s|^-ε)`; infinite for the straight strip.
    pub fn decay_exponent(&self) -> f64 {
        match *self {
            CurvatureModel::Zero => f64::INFINITY,
            CurvatureModel::Rational { amplitude, exponent } => {
                if amplitude == 0.0 {
                    f64::INFINITY
                } else {
                    2.0 * exponent as f64
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            CurvatureModel::Zero => true,
            CurvatureModel::Rational { amplitude, .. } => amplitude == 0.0,
        }
    }

    /// `γ`, `γ'` and `γ''` of the analytic continuation at `z`.
    pub fn eval(&self, z: Complex64) -> Result<CurvatureJet> {
        match *self {
            CurvatureModel::Zero => Ok(CurvatureJet::ZERO),
            CurvatureModel::Rational { amplitude, exponent } => {
                let m = 2 * exponent as i32;
                let zm2 = if m >= 2 { z.powi(m - 2) } else { Complex64::new(1.0, 0.0) };
                let zm1 = zm2 * z;
                let zm = zm1 * z;
                let denom = Complex64::new(1.0, 0.0) + zm;
                let dn = denom.norm();
                if dn < POLE_GUARD {
                    return Err(Error::DegenerateEvaluation { z, denominator: dn });
                }
                let inv = denom.inv();
                let inv2 = inv * inv;
                let mf = m as f64;
                let value = inv * amplitude;
                let d1 = -(zm1 * inv2) * (amplitude * mf);
                let d2 = (-(zm2 * inv2) * (mf * (mf - 1.0)) + zm1 * zm1 * inv2 * inv * (2.0 * mf * mf)) * amplitude;
                Ok(CurvatureJet { value, d1, d2 })
            }
        }
    }

    /// Curvature on the real axis.
    pub fn real(&self, s: f64) -> f64 {
        match *self {
            CurvatureModel::Zero => 0.0,
            CurvatureModel::Rational { amplitude, exponent } => amplitude / (1.0 + s.powi(2 * exponent as i32)),
        }
    }

    /// First derivative on the real axis.
    pub fn real_d1(&self, s: f64) -> f64 {
        match *self {
            CurvatureModel::Zero => 0.0,
            CurvatureModel::Rational { amplitude, exponent } => {
                let m = 2 * exponent as i32;
                let den = 1.0 + s.powi(m);
                -amplitude * m as f64 * s.powi(m - 1) / (den * den)
            }
        }
    }
}

/// Strip geometry: curvature model plus constant width `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySetup {
    pub model: CurvatureModel,
    pub width: f64,
}

impl GeometrySetup {
    pub fn new(model: CurvatureModel, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::invalid(format!("strip width must be positive, got {width}")));
        }
        Ok(Self { model, width })
    }

    /// The project-wide default: `d = 1`, `γ(s) = -0.8 / (1 + s^4)`.
    pub fn default_bent() -> Self {
        Self {
            model: CurvatureModel::Rational { amplitude: -0.8, exponent: 2 },
            width: 1.0,
        }
    }

    /// Lowest transverse threshold `(π/d)^2` of the continuum problem.
    pub fn threshold(&self) -> f64 {
        (PI / self.width).powi(2)
    }
}

/// `g = (1 + u γ)^-2`.
pub fn metric_factor(gamma: Complex64, u: f64) -> Result<Complex64> {
    let q = Complex64::new(1.0, 0.0) + gamma * u;
    let mag = q.norm();
    if mag < 1e-8 {
        return Err(Error::GeometryViolation { u, magnitude: mag });
    }
    Ok((q * q).inv())
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 }
}

/// Power-law tail `∫_{|s|}^∞ c t^-p dt` estimated from the integrand value at the cut.
pub(crate) fn power_tail(value_at_cut: f64, cut: f64, exponent: f64) -> f64 {
    value_at_cut * cut.abs() / (exponent - 1.0)
}

/// Smallest cut `S ≥ 8` (doubling) at which `|γ(±S)|·S/(ε-1) < tol`.
fn tail_cut(model: &CurvatureModel, exponent: f64, tol: f64) -> f64 {
    let mut s = 8.0;
    while s < 1e9 {
        let bound = model.real(s).abs().max(model.real(-s).abs()) * s / (exponent - 1.0);
        if bound < tol {
            break;
        }
        s *= 2.0;
    }
    s
}

/// Breakpoints on `[a, b]` that follow the decay scale of the curvature.
pub(crate) fn log_breaks(a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let marks = [-1e6, -1e5, -1e4, -1e3, -300.0, -100.0, -30.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1e3, 1e4, 1e5, 1e6];
    for m in marks {
        if m > a && m < b {
            pts.push(m);
        }
    }
    pts.push(b);
    pts
}

/// Bending angle `α(s) = ∫_{-∞}^s γ` with cached anchors for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct BendingProfile {
    model: CurvatureModel,
    exponent: f64,
    cut: f64,
    total: f64,
    anchors: Vec<(f64, f64)>,
}

impl BendingProfile {
    pub fn new(model: CurvatureModel) -> Result<Self> {
        if model.is_zero() {
            return Ok(Self {
                model,
                exponent: f64::INFINITY,
                cut: 0.0,
                total: 0.0,
                anchors: vec![(0.0, 0.0)],
            });
        }
        let exponent = model.decay_exponent();
        if exponent <= 1.0 {
            return Err(Error::invalid("curvature decays too slowly for a finite bending angle"));
        }
        let cut = tail_cut(&model, exponent, 1e-12);
        let left_tail = power_tail(model.real(-cut), cut, exponent);
        let right_tail = power_tail(model.real(cut), cut, exponent);
        let gamma = |t: f64| model.real(t);
        // anchors on a symmetric grid, densest near the origin
        let mut knots: Vec<f64> = Vec::new();
        let mut x = 0.0;
        while x < cut {
            knots.push(x);
            x += if x < 4.0 { 0.25 } else { 0.25 * x / 4.0 };
        }
        knots.push(cut);
        let mut pts: Vec<f64> = knots.iter().rev().map(|k| -k).collect();
        pts.extend(knots.iter().skip(1));
        let mut anchors = Vec::with_capacity(pts.len());
        let mut acc = left_tail;
        anchors.push((pts[0], acc));
        for w in pts.windows(2) {
            acc += integrate_with_breaks(gamma, &[w[0], w[1]], quad_opts())?;
            anchors.push((w[1], acc));
        }
        let total = acc + right_tail;
        Ok(Self { model, exponent, cut, total, anchors })
    }

    pub fn model(&self) -> &CurvatureModel {
        &self.model
    }

    /// Total bend `α₀`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Cut beyond which tails are handled analytically.
    pub fn cut(&self) -> f64 {
        self.cut
    }

    /// `α(s)`.
    pub fn angle(&self, s: f64) -> Result<f64> {
        if self.model.is_zero() {
            return Ok(0.0);
        }
        if s <= -self.cut {
            return Ok(power_tail(self.model.real(s), s, self.exponent));
        }
        if s >= self.cut {
            return Ok(self.total - power_tail(self.model.real(s), s, self.exponent));
        }
        let idx = self.anchors.partition_point(|(x, _)| *x <= s);
        let (x0, a0) = self.anchors[idx.saturating_sub(1)];
        let m = self.model;
        Ok(a0 + integrate_with_breaks(|t| m.real(t), &[x0, s], quad_opts())?)
    }

    /// `α` on a sorted list of points, integrating cumulatively between them.
    pub fn angles_sorted(&self, points: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(points.len());
        let mut prev: Option<(f64, f64)> = None;
        let m = self.model;
        for &s in points {
            let a = match prev {
                Some((x0, a0)) if s - x0 < 1.0 && s.abs() < self.cut && x0.abs() < self.cut => {
                    a0 + integrate_with_breaks(|t| m.real(t), &[x0, s], quad_opts())?
                }
                _ => self.angle(s)?,
            };
            out.push(a);
            prev = Some((s, a));
        }
        Ok(out)
    }

    /// `α(s + iτ) = α(s) + i ∫_0^τ γ(s + it) dt`.
    pub fn angle_continued(&self, s: f64, alpha_s: f64, tau: f64) -> Result<Complex64> {
        if tau == 0.0 || self.model.is_zero() {
            return Ok(Complex64::new(alpha_s, 0.0));
        }
        let inc = vertical_integral(|z| Ok(self.model.eval(z)?.value), s, tau)?;
        Ok(Complex64::new(alpha_s, 0.0) + inc)
    }
}

/// `∫_s^{s+iτ} h(z) dz = i ∫_0^τ h(s + it) dt` by adaptive quadrature.
pub(crate) fn vertical_integral<H>(h: H, s: f64, tau: f64) -> Result<Complex64>
where
    H: Fn(Complex64) -> Result<Complex64>,
{
    if tau == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let failure = std::cell::Cell::new(None);
    let f = |t: f64| match h(Complex64::new(s, t)) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e.to_string()));
            Complex64::new(0.0, 0.0)
        }
    };
    let (a, b) = if tau > 0.0 { (0.0, tau) } else { (tau, 0.0) };
    let v = integrate_with_breaks(f, &[a, b], QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 500 })?;
    if let Some(msg) = failure.take() {
        return Err(Error::invalid(format!("vertical integrand failed: {msg}")));
    }
    let sign = if tau > 0.0 { 1.0 } else { -1.0 };
    Ok(Complex64::new(0.0, sign) * v)
}

/// Planar point of tube coordinates `(s, u)`.
pub fn embed(profile: &BendingProfile, s: f64, u: f64) -> Result<(f64, f64)> {
    let alpha_s = profile.angle(s)?;
    let (cx, cy) = if s == 0.0 {
        (0.0, 0.0)
    } else {
        let lo = s.min(0.0);
        let hi = s.max(0.0);
        let a = profile.angle(lo)?;
        let sign = if s > 0.0 { 1.0 } else { -1.0 };
        // α along the path from `lo`, integrated jointly with cos/sin α
        let m = *profile.model();
        let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 2000 };
        let angle_at = |t: f64| a + integrate_with_breaks(|x| m.real(x), &[lo, t], opts).unwrap_or(f64::NAN);
        let ix = integrate_with_breaks(|t| angle_at(t).cos(), &log_breaks(lo, hi), opts)?;
        let iy = integrate_with_breaks(|t| angle_at(t).sin(), &log_breaks(lo, hi), opts)?;
        if !(ix.is_finite() && iy.is_finite()) {
            return Err(Error::Quadrature { a: lo, b: hi, estimate: f64::NAN });
        }
        (sign * ix, sign * iy)
    };
    Ok((cx - u * alpha_s.sin(), cy + u * alpha_s.cos()))
}

/// Outcome of the sampled hypothesis checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub h1_ok: bool,
    pub h2_ok: bool,
    pub h3_surrogate_ok: bool,
    pub sup_abs_gamma: f64,
    pub fitted_decay_exponent: f64,
    /// Sample locations where a check failed, tagged with the hypothesis.
    pub violations: Vec<(String, f64)>,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.h1_ok && self.h2_ok && self.h3_surrogate_ok
    }
}

/// Where the non-trapping sign test is evaluated.
pub enum DistortionHint<'a> {
    /// No distortion field: test `sign(s)·γ'(s) ≥ 0`, the sign pattern any
    /// admissible field `f` has (negative on the left, positive on the right).
    SignPattern,
    /// Explicit field samples `f(s)`.
    Field(&'a dyn Fn(f64) -> f64),
    /// Skip the test (no distortion will be applied).
    None,
}

/// Sampled verification of the curvature hypotheses.
pub fn check_hypotheses(setup: &GeometrySetup, hint: DistortionHint<'_>) -> HypothesisReport {
    let model = setup.model;
    let mut violations = Vec::new();
    let samples: Vec<f64> = (0..=8000).map(|k| -40.0 + 80.0 * k as f64 / 8000.0).collect();
    let sup = samples.iter().map(|&s| model.real(s).abs()).fold(0.0, f64::max);
    let h1_ok = setup.width * sup < 1.0;
    if !h1_ok {
        let worst = samples
            .iter()
            .copied()
            .max_by(|a, b| model.real(*a).abs().total_cmp(&model.real(*b).abs()))
            .unwrap_or(0.0);
        violations.push(("h1".to_string(), worst));
    }

    let fitted = fit_decay_exponent(&model);
    let h2_ok = fitted >= 3.0 + 0.05;
    if !h2_ok {
        violations.push(("h2".to_string(), f64::INFINITY));
    }

    let mut h3_ok = true;
    let sign_test = |s: f64, fs: f64, v: &mut Vec<(String, f64)>| {
        if fs != 0.0 && fs * model.real_d1(s) < -1e-14 {
            v.push(("h3".to_string(), s));
            false
        } else {
            true
        }
    };
    match hint {
        DistortionHint::None => {}
        DistortionHint::SignPattern => {
            for &s in &samples {
                h3_ok &= sign_test(s, s.signum(), &mut violations);
            }
        }
        DistortionHint::Field(f) => {
            for &s in &samples {
                h3_ok &= sign_test(s, f(s), &mut violations);
            }
        }
    }
    violations.truncate(64);
    HypothesisReport {
        h1_ok,
        h2_ok,
        h3_surrogate_ok: h3_ok,
        sup_abs_gamma: sup,
        fitted_decay_exponent: fitted,
        violations,
    }
}

/// Least-squares slope of `-ln|γ|` against `ln|s|` on both tails, `|s| ∈ [20, 2000]`.
pub fn fit_decay_exponent(model: &CurvatureModel) -> f64 {
    if model.is_zero() {
        return f64::INFINITY;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..=40 {
        let r = 20.0 * 100f64.powf(k as f64 / 40.0);
        for s in [r, -r] {
            let g = model.real(s).abs();
            if g > 0.0 {
                xs.push(r.ln());
                ys.push(-g.ln());
            }
        }
    }
    crate::stats::linear_fit(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN)
}

/// Minimum of `Im γ(r e^{iφ})` over a sampled sector `0 ≤ φ ≤ a0`, `r ≥ r0`, and its mirror
/// `π ≤ arg z ≤ π + a0`. Diagnostic only.
pub fn sector_sign_scan(model: &CurvatureModel, a0: f64, r0: f64) -> f64 {
    let mut min_im = f64::INFINITY;
    for i in 0..=32 {
        let phi = a0 * i as f64 / 32.0;
        for k in 0..=64 {
            let r = r0 * 1000f64.powf(k as f64 / 64.0);
            for base in [0.0, PI] {
                let z = Complex64::from_polar(r, base + phi);
                if let Ok(j) = model.eval(z) {
                    min_im = min_im.min(j.value.im);
                }
            }
        }
    }
    min_im
}
