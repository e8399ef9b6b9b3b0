//! Smooth cutoff, the plateau distortion field `f`, and the distorted
//! coefficient functions entering the complex-distorted operators.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{curvature_potential, FieldConfig, Regime, StarkField};
use crate::geometry::{metric_factor, CurvatureJet};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Reference energy, window, distortion strength and cutoff sharpness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionParams {
    energy: f64,
    window: f64,
    beta: f64,
    sharpness: f64,
}

impl DistortionParams {
    pub fn new(energy: f64, window: f64, beta: f64) -> Result<Self> {
        Self::with_sharpness(energy, window, beta, 1.0)
    }

    pub fn with_sharpness(energy: f64, window: f64, beta: f64, sharpness: f64) -> Result<Self> {
        if !(energy < 0.0) || !energy.is_finite() {
            return Err(Error::invalid(format!("reference energy must be negative, got {energy}")));
        }
        let cap = 0.5 * energy.abs().min(1.0);
        if !(window > 0.0 && window < cap) {
            return Err(Error::invalid(format!("energy window must lie in (0, {cap}), got {window}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("distortion strength must be nonnegative, got {beta}")));
        }
        if !(sharpness > 0.0) || !sharpness.is_finite() {
            return Err(Error::invalid("cutoff sharpness must be positive"));
        }
        Ok(Self { energy, window, beta, sharpness })
    }

    /// The same parameters with `β ↦ -β`; the resulting operators are the
    /// entrywise conjugates of those for `+β`.
    pub fn conjugate(&self) -> Self {
        Self { beta: -self.beta, ..*self }
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::with_sharpness(self.energy, self.window, beta, self.sharpness)
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    /// `E₋ = E - δE`.
    pub fn lower(&self) -> f64 {
        self.energy - self.window
    }

    /// `E₊ = E + δE`.
    pub fn upper(&self) -> f64 {
        self.energy + self.window
    }

    /// Bound on `|f'|`: the cutoff slope peaks at `2σ/δE`.
    pub fn max_field_slope(&self) -> f64 {
        2.0 * self.sharpness / self.window
    }
}

/// `φ` and its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// `φ(t) = L(q(x))`, `x = (t - E)/δE`, `q = σ(1 - 2x)/(x(1 - x))`, `L` the logistic
/// function: 1 below `E`, 0 above `E + δE`, smooth and decreasing in between.
pub fn smooth_step(energy: f64, window: f64, sharpness: f64, t: f64) -> StepJet {
    let x = (t - energy) / window;
    if x <= 0.0 {
        return StepJet { value: 1.0, d1: 0.0, d2: 0.0, d3: 0.0 };
    }
    if x >= 1.0 {
        return StepJet { value: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 };
    }
    let (a, b) = (1.0 / x, 1.0 / (1.0 - x));
    let q = sharpness * (a - b);
    let q1 = -sharpness * (a * a + b * b);
    let q2 = 2.0 * sharpness * (a * a * a - b * b * b);
    let q3 = -6.0 * sharpness * (a.powi(4) + b.powi(4));
    // logistic with L(1-L) formed without cancellation
    let e = (-q.abs()).exp();
    let (l, m) = if q >= 0.0 {
        (1.0 / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    } else {
        (e / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    };
    let l1 = m;
    let l2 = m * (1.0 - 2.0 * l);
    let l3 = m * (1.0 - 6.0 * m);
    let w = window;
    StepJet {
        value: l,
        d1: l1 * q1 / w,
        d2: (l2 * q1 * q1 + l1 * q2) / (w * w),
        d3: (l3 * q1 * q1 * q1 + 3.0 * l2 * q1 * q2 + l1 * q3) / (w * w * w),
    }
}

/// `f`, its derivatives, and `Φ` at one longitudinal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// `Φ∓(s)`, the cutoff composed with the local field slope.
    pub phi: f64,
}

impl FieldJet {
    pub const ZERO: FieldJet = FieldJet { f: 0.0, d1: 0.0, d2: 0.0, d3: 0.0, phi: 0.0 };

    /// `f♯ = Φ - 1`.
    pub fn sharp(&self) -> f64 {
        self.phi - 1.0
    }
}

/// Distortion field `f = -Φ∓/(F c∓)` with constant plateaus beyond the turning points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionField {
    params: DistortionParams,
    strength: f64,
    slope_minus: f64,
    slope_plus: f64,
}

impl DistortionField {
    pub fn new(params: DistortionParams, field: &FieldConfig, alpha0: f64) -> Result<Self> {
        if field.regime != Regime::ResonantBothEnds {
            return Err(Error::RegimeMismatch(format!(
                "distortion needs the resonant regime, got {:?} (eta = {}, eta - alpha0 = {})",
                field.regime,
                field.direction,
                field.direction - alpha0
            )));
        }
        let (slope_minus, slope_plus) = field.slopes(alpha0);
        Ok(Self { params, strength: field.strength, slope_minus, slope_plus })
    }

    pub fn params(&self) -> &DistortionParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    fn slope(&self, s: f64) -> f64 {
        if s < 0.0 {
            self.slope_minus
        } else {
            self.slope_plus
        }
    }

    pub fn eval(&self, s: f64) -> FieldJet {
        let fc = self.strength * self.slope(s);
        let p = &self.params;
        let st = smooth_step(p.energy, p.window, p.sharpness, fc * s);
        FieldJet { f: -st.value / fc, d1: -st.d1, d2: -fc * st.d2, d3: -fc * fc * st.d3, phi: st.value }
    }

    /// Plateau values `(f₋, f₊) = (-1/(F cos η), -1/(F cos(η - α₀)))`.
    pub fn plateaus(&self) -> (f64, f64) {
        (-1.0 / (self.strength * self.slope_minus), -1.0 / (self.strength * self.slope_plus))
    }

    /// Turning points `E/(F c∓)` beyond which `f` is constant.
    pub fn turning_points(&self) -> (f64, f64) {
        let e = self.params.energy;
        (e / (self.strength * self.slope_minus), e / (self.strength * self.slope_plus))
    }

    /// Outer ends of the zone where `f = 0`: `(E + δE)/(F c∓)`.
    pub fn untouched_zone(&self) -> (f64, f64) {
        let e = self.params.upper();
        (e / (self.strength * self.slope_minus), e / (self.strength * self.slope_plus))
    }

    /// Longest transition length `δE/(F min|c∓|)`.
    pub fn transition_width(&self) -> f64 {
        self.params.window / (self.strength * self.slope_minus.abs().min(self.slope_plus.abs()))
    }
}

/// All distorted coefficients at one `(s, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortedCoefficients {
    pub z: Complex64,
    pub field: FieldJet,
    /// `1 + θ f'`
    pub jacobian: Complex64,
    pub mu: Complex64,
    pub gamma: Complex64,
    pub gamma_d1: Complex64,
    pub metric: Complex64,
    /// `G_θ = (1 + θ f')^-2 g_θ`
    pub flux: Complex64,
    pub s_theta: Complex64,
    pub v0: Complex64,
    pub reference: Complex64,
    pub remainder: Complex64,
    pub stark: Complex64,
}

/// Evaluates every distorted coefficient at `(s, u)`. With `distortion = None`
/// the same arithmetic runs with `f ≡ 0`.
pub fn distorted_coefficients(
    stark: &StarkField,
    distortion: Option<&DistortionField>,
    s: f64,
    u: f64,
) -> Result<DistortedCoefficients> {
    let sample = stark.sample(s)?;
    let jet = distortion.map(|d| d.eval(s)).unwrap_or(FieldJet::ZERO);
    let beta = distortion.map(|d| d.beta()).unwrap_or(0.0);
    let tau = beta * jet.f;
    let cont = stark.continue_longitudinal(&sample, tau)?;
    let w = stark.continued_at(&cont, u);
    let theta = Complex64::new(0.0, beta);
    let curvature = stark.profile().model().eval(cont.z)?;
    let local = LocalCoefficients::new(curvature, &jet, theta, u)?;
    Ok(DistortedCoefficients {
        z: cont.z,
        field: jet,
        jacobian: local.jacobian,
        mu: Complex64::new(1.0, 0.0) + theta * jet.sharp(),
        gamma: local.curvature.value,
        gamma_d1: local.curvature.d1,
        metric: local.metric,
        flux: local.flux,
        s_theta: local.s_theta,
        v0: local.v0,
        reference: w.reference,
        remainder: w.remainder,
        stark: w.total,
    })
}

/// Coefficients that depend only on the local jets of `f` and `γ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalCoefficients {
    pub curvature: CurvatureJet,
    pub jacobian: Complex64,
    pub metric: Complex64,
    pub flux: Complex64,
    pub s_theta: Complex64,
    pub v0: Complex64,
}

impl LocalCoefficients {
    pub(crate) fn new(curvature: CurvatureJet, jet: &FieldJet, theta: Complex64, u: f64) -> Result<Self> {
        let metric = metric_factor(curvature.value, u)?;
        let jacobian = Complex64::new(1.0, 0.0) + theta * jet.d1;
        let j2 = jacobian * jacobian;
        let flux = metric / j2;
        let s_theta = if jet.d2 == 0.0 && jet.d3 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            let q = Complex64::new(1.0, 0.0) + curvature.value * u;
            // d/ds g(s + θ f(s)) = -2u γ'(z) (1 + θ f') (1 + uγ)^-3
            let metric_d = -(curvature.d1 * jacobian) * (2.0 * u) / (q * q * q);
            let j3 = j2 * jacobian;
            -(metric * theta * theta * (1.25 * jet.d2 * jet.d2)) / (j3 * jacobian)
                + metric * theta * (0.5 * jet.d3) / j3
                + metric_d * theta * (0.5 * jet.d2) / j3
        };
        let v0 = curvature_potential(&curvature, u)?;
        Ok(Self { curvature, jacobian, metric, flux, s_theta, v0 })
    }
}

/// Conservative membership test for `ν_θ`: `Im μ²(E₋ + λ₀ - z) < βδE/4` for every
/// `μ = 1 + iβ f♯`, `f♯ ∈ [-1, 0]`.
pub fn nu_region_contains(params: &DistortionParams, z: Complex64, lambda0: f64) -> bool {
    let beta = params.beta;
    let w = Complex64::new(params.lower() + lambda0, 0.0) - z;
    let bound = beta * params.window / 4.0;
    if beta == 0.0 {
        // μ = 1: Im(E₋ + λ₀ - z) < 0
        return w.im < 0.0;
    }
    // Im μ²w = (1 - β²x²) b + 2βx a with x = f♯, w = a + ib
    let (a, b) = (w.re, w.im);
    let h = |x: f64| (1.0 - beta * beta * x * x) * b + 2.0 * beta * x * a;
    let mut worst = h(-1.0).max(h(0.0));
    if b != 0.0 {
        let xc = a / (beta * b);
        if (-1.0..=0.0).contains(&xc) {
            worst = worst.max(h(xc));
        }
    }
    worst < bound
}

/// `θ = iβ` as a complex number.
pub fn theta(beta: f64) -> Complex64 {
    I * beta
}
