//! Curvature-induced potential, Stark interaction in tube coordinates, field
//! regimes, and the piecewise-linear reference interaction with its remainder.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{log_breaks, power_tail, vertical_integral, BendingProfile, CurvatureJet, GeometrySetup};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Angles closer than this to `π/2` are rejected as regime boundaries.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Field-direction regime, decided by `|η|` and `|η - α₀|` against `π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `|η| < π/2`, `|η - α₀| > π/2`: the field potential falls off at both ends.
    ResonantBothEnds,
    /// `|η| < π/2`, `|η - α₀| < π/2`: classical one-sided Stark picture.
    BGRegime,
    /// `|η| > π/2`, `|η - α₀| < π/2`: the potential grows at both ends.
    Confining,
    /// `|η| > π/2`, `|η - α₀| > π/2`.
    SymmetricResonant,
}

pub fn classify_regime(eta: f64, alpha0: f64) -> Result<Regime> {
    let rel = eta - alpha0;
    if (eta.abs() - FRAC_PI_2).abs() < BOUNDARY_TOL || (rel.abs() - FRAC_PI_2).abs() < BOUNDARY_TOL {
        return Err(Error::BoundaryDirection { eta, relative: rel });
    }
    let near = eta.abs() < FRAC_PI_2;
    let far = rel.abs() < FRAC_PI_2;
    Ok(match (near, far) {
        (true, false) => Regime::ResonantBothEnds,
        (true, true) => Regime::BGRegime,
        (false, true) => Regime::Confining,
        (false, false) => Regime::SymmetricResonant,
    })
}

/// Field strength `F` and direction `η`, with the regime fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldConfig {
    pub strength: f64,
    pub direction: f64,
    pub regime: Regime,
}

impl FieldConfig {
    pub fn new(strength: f64, direction: f64, alpha0: f64) -> Result<Self> {
        if !(strength > 0.0 && strength < 1.0) {
            return Err(Error::invalid(format!("field strength must lie in (0, 1), got {strength}")));
        }
        let regime = classify_regime(direction, alpha0)?;
        Ok(Self { strength, direction, regime })
    }

    /// Longitudinal slopes `(cos η, cos(η - α₀))` of the reference interaction.
    pub fn slopes(&self, alpha0: f64) -> (f64, f64) {
        (self.direction.cos(), (self.direction - alpha0).cos())
    }
}

/// `V₀ = -γ²/(4q²) + uγ''/(2q³) - 5u²γ'²/(4q⁴)`, `q = 1 + uγ`.
pub fn curvature_potential(jet: &CurvatureJet, u: f64) -> Result<Complex64> {
    let q = Complex64::new(1.0, 0.0) + jet.value * u;
    if q.norm() < 1e-8 {
        return Err(Error::GeometryViolation { u, magnitude: q.norm() });
    }
    let q2 = q * q;
    let t1 = -(jet.value * jet.value) / (q2 * 4.0);
    let t2 = jet.d2 * u / (q2 * q * 2.0);
    let t3 = -(jet.d1 * jet.d1) * (1.25 * u * u) / (q2 * q2);
    Ok(t1 + t2 + t3)
}

/// Piecewise-linear asymptote of the field interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceInteraction {
    pub a_minus: f64,
    pub a_plus: f64,
    pub slope_minus: f64,
    pub slope_plus: f64,
    pub transverse_minus: f64,
    pub transverse_plus: f64,
}

impl ReferenceInteraction {
    /// `W̃(F)` at a (possibly complex) longitudinal argument; the branch follows `Re z`.
    pub fn value(&self, strength: f64, z: Complex64, u: f64) -> Complex64 {
        if z.re < 0.0 {
            (z * self.slope_minus + u * self.transverse_minus + self.a_minus) * strength
        } else {
            (z * self.slope_plus + u * self.transverse_plus + self.a_plus) * strength
        }
    }

    fn branch(&self, s: f64) -> (f64, f64, f64) {
        if s < 0.0 {
            (self.slope_minus, self.transverse_minus, self.a_minus)
        } else {
            (self.slope_plus, self.transverse_plus, self.a_plus)
        }
    }
}

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 4000 }
}

/// Longitudinal quantities at one real `s`, reused by every `u` on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudinalSample {
    pub s: f64,
    /// `α(s)`
    pub alpha: f64,
    /// `∫_0^s cos(η - α)`
    pub cos_integral: f64,
    /// `∫_0^s (cos(η - α) - c±)` with the slope of the branch containing `s`
    pub excess_integral: f64,
}

/// The Stark interaction of one field on one geometry.
#[derive(Debug, Clone)]
pub struct StarkField {
    profile: BendingProfile,
    field: FieldConfig,
    reference: ReferenceInteraction,
}

impl StarkField {
    pub fn new(setup: &GeometrySetup, field: FieldConfig) -> Result<Self> {
        let profile = BendingProfile::new(setup.model)?;
        Self::with_profile(profile, field)
    }

    pub fn with_profile(profile: BendingProfile, field: FieldConfig) -> Result<Self> {
        let reference = reference_constants(&profile, field.direction)?;
        Ok(Self { profile, field, reference })
    }

    pub fn profile(&self) -> &BendingProfile {
        &self.profile
    }

    pub fn field(&self) -> &FieldConfig {
        &self.field
    }

    pub fn reference(&self) -> &ReferenceInteraction {
        &self.reference
    }

    pub fn alpha0(&self) -> f64 {
        self.profile.total()
    }

    fn cos_rel(&self, s: f64) -> Result<f64> {
        Ok((self.field.direction - self.profile.angle(s)?).cos())
    }

    /// `W(F)(s, u) = F ∫_0^s cos(η - α) + F u sin(η - α(s))`, integrated directly.
    pub fn potential(&self, s: f64, u: f64) -> Result<f64> {
        let sample = self.sample(s)?;
        Ok(self.field.strength * (sample.cos_integral + u * (self.field.direction - sample.alpha).sin()))
    }

    /// `W̃(F)(s, u)`.
    pub fn reference_potential(&self, s: f64, u: f64) -> f64 {
        self.reference.value(self.field.strength, Complex64::new(s, 0.0), u).re
    }

    /// `R(F) = W - W̃` assembled from the decaying integrands, not by subtraction.
    pub fn remainder(&self, s: f64, u: f64) -> Result<f64> {
        let sample = self.sample(s)?;
        Ok(self.remainder_from(&sample, u))
    }

    fn remainder_from(&self, sample: &LongitudinalSample, u: f64) -> f64 {
        let (_, sn, a) = self.reference.branch(sample.s);
        self.field.strength * (sample.excess_integral - a + u * ((self.field.direction - sample.alpha).sin() - sn))
    }

    /// Longitudinal data at a single point.
    pub fn sample(&self, s: f64) -> Result<LongitudinalSample> {
        Ok(self.tabulate(&[s])?[0])
    }

    /// Longitudinal data on a sorted set of points, integrated outward from `s = 0`.
    pub fn tabulate(&self, points: &[f64]) -> Result<Vec<LongitudinalSample>> {
        let n = points.len();
        let mut out = vec![
            LongitudinalSample { s: 0.0, alpha: 0.0, cos_integral: 0.0, excess_integral: 0.0 };
            n
        ];
        let split = points.partition_point(|&s| s < 0.0);
        let (c_minus, c_plus) = (self.reference.slope_minus, self.reference.slope_plus);
        // right half-line, ascending from 0
        let mut prev = 0.0;
        let (mut ci, mut ei) = (0.0, 0.0);
        for k in split..n {
            let s = points[k];
            let (dc, de) = self.segment(prev, s, c_plus)?;
            ci += dc;
            ei += de;
            out[k] = LongitudinalSample { s, alpha: self.profile.angle(s)?, cos_integral: ci, excess_integral: ei };
            prev = s;
        }
        // left half-line, descending from 0
        let (mut prev, mut ci, mut ei) = (0.0, 0.0, 0.0);
        for k in (0..split).rev() {
            let s = points[k];
            let (dc, de) = self.segment(prev, s, c_minus)?;
            ci += dc;
            ei += de;
            out[k] = LongitudinalSample { s, alpha: self.profile.angle(s)?, cos_integral: ci, excess_integral: ei };
            prev = s;
        }
        Ok(out)
    }

    /// `(∫_a^b cos(η-α), ∫_a^b (cos(η-α) - c))` over one segment.
    fn segment(&self, a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
        if a == b {
            return Ok((0.0, 0.0));
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let breaks = log_breaks(lo, hi);
        let ex = integrate_with_breaks(|t| self.cos_rel(t).unwrap_or(f64::NAN) - c, &breaks, opts())?;
        if !ex.is_finite() {
            return Err(Error::Quadrature { a: lo, b: hi, estimate: f64::NAN });
        }
        let total = ex + c * (hi - lo);
        Ok((sign * total, sign * ex))
    }

    /// The `u`-independent part of the continuation to `z = s + iτ`.
    pub fn continue_longitudinal(&self, sample: &LongitudinalSample, tau: f64) -> Result<ContinuedSample> {
        let s = sample.s;
        let alpha = self.profile.angle_continued(s, sample.alpha, tau)?;
        let (c, sn, a) = self.reference.branch(s);
        let eta = self.field.direction;
        let excess = if tau == 0.0 || self.profile.model().is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            let model = *self.profile.model();
            let alpha_s = sample.alpha;
            vertical_integral(
                |w| {
                    let inner = vertical_integral(|x| Ok(model.eval(x)?.value), s, w.im)?;
                    let alpha_w = Complex64::new(alpha_s, 0.0) + inner;
                    Ok((Complex64::new(eta, 0.0) - alpha_w).cos() - c)
                },
                s,
                tau,
            )?
        };
        Ok(ContinuedSample {
            z: Complex64::new(s, tau),
            alpha,
            longitudinal: Complex64::new(sample.excess_integral - a, 0.0) + excess,
            transverse: (Complex64::new(eta, 0.0) - alpha).sin() - sn,
        })
    }

    /// Field quantities at `(s + iτ, u)`.
    pub fn continued(&self, sample: &LongitudinalSample, tau: f64, u: f64) -> Result<ContinuedField> {
        Ok(self.continued_at(&self.continue_longitudinal(sample, tau)?, u))
    }

    pub fn continued_at(&self, c: &ContinuedSample, u: f64) -> ContinuedField {
        let f = self.field.strength;
        let remainder = (c.longitudinal + c.transverse * u) * f;
        let reference = self.reference.value(f, c.z, u);
        ContinuedField { alpha: c.alpha, reference, remainder, total: reference + remainder }
    }
}

/// Continued longitudinal data: `R_θ = F (longitudinal + u · transverse)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuedSample {
    pub z: Complex64,
    pub alpha: Complex64,
    pub longitudinal: Complex64,
    pub transverse: Complex64,
}

/// `W̃_θ`, `R_θ` and `W_θ = W̃_θ + R_θ` at one distorted point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuedField {
    pub alpha: Complex64,
    pub reference: Complex64,
    pub remainder: Complex64,
    pub total: Complex64,
}

/// `A₋ = ∫_{-∞}^0 (cos η - cos(η - α))`, `A₊ = ∫_0^∞ (cos(η - α) - cos(η - α₀))`.
pub fn reference_constants(profile: &BendingProfile, eta: f64) -> Result<ReferenceInteraction> {
    let alpha0 = profile.total();
    let mut r = ReferenceInteraction {
        a_minus: 0.0,
        a_plus: 0.0,
        slope_minus: eta.cos(),
        slope_plus: (eta - alpha0).cos(),
        transverse_minus: eta.sin(),
        transverse_plus: (eta - alpha0).sin(),
    };
    if profile.model().is_zero() {
        return Ok(r);
    }
    let cut = reference_cut(profile, eta)?;
    let (a_minus, a_plus) = reference_integrals(profile, eta, cut)?;
    r.a_minus = a_minus;
    r.a_plus = a_plus;
    Ok(r)
}

/// Cut at which the power-law tail of the reference integrands is below 1e-12
/// before the analytic correction is added.
fn reference_cut(profile: &BendingProfile, eta: f64) -> Result<f64> {
    let p = profile.model().decay_exponent() - 1.0;
    let alpha0 = profile.total();
    let mut s: f64 = 16.0;
    while s < 1e7 {
        let left = (eta.cos() - (eta - profile.angle(-s)?).cos()).abs();
        let right = ((eta - profile.angle(s)?).cos() - (eta - alpha0).cos()).abs();
        if left.max(right) * s / (p - 1.0) < 1e-12 {
            break;
        }
        s *= 2.0;
    }
    Ok(s)
}

pub(crate) fn reference_integrals(profile: &BendingProfile, eta: f64, cut: f64) -> Result<(f64, f64)> {
    let alpha0 = profile.total();
    let p = profile.model().decay_exponent() - 1.0;
    let left = |t: f64| eta.cos() - (eta - profile.angle(t).unwrap_or(f64::NAN)).cos();
    let right = |t: f64| (eta - profile.angle(t).unwrap_or(f64::NAN)).cos() - (eta - alpha0).cos();
    let a_minus = integrate_with_breaks(left, &log_breaks(-cut, 0.0), opts())? + power_tail(left(-cut), cut, p);
    let a_plus = integrate_with_breaks(right, &log_breaks(0.0, cut), opts())? + power_tail(right(cut), cut, p);
    if !(a_minus.is_finite() && a_plus.is_finite()) {
        return Err(Error::Quadrature { a: -cut, b: cut, estimate: f64::NAN });
    }
    Ok((a_minus, a_plus))
}
