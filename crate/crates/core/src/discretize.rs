//! Finite-difference grids and assembly of the waveguide operators.
//!
//! Unknowns are ordered `k = i·Nu + j` (`i` longitudinal, `j` transverse), so
//! the matrices are banded with bandwidth `Nu`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::distortion::{DistortionField, DistortionParams, FieldJet, LocalCoefficients};
use crate::error::{Error, Result};
use crate::fields::{FieldConfig, Regime, StarkField};
use crate::geometry::GeometrySetup;
use crate::linalg::CsrMatrix;

/// Rectangle `(-L, L) × (0, d)` with `Ns × Nu` interior points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub half_length: f64,
    pub ns: usize,
    pub nu: usize,
    pub width: f64,
}

impl Grid {
    pub fn new(half_length: f64, ns: usize, nu: usize, width: f64) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::invalid(format!("half-length must be positive, got {half_length}")));
        }
        if ns < 3 || nu < 3 {
            return Err(Error::invalid(format!("need at least 3 interior points per direction, got {ns}x{nu}")));
        }
        if !(width > 0.0) {
            return Err(Error::invalid("strip width must be positive"));
        }
        Ok(Self { half_length, ns, nu, width })
    }

    /// Grid with `Ns` chosen so that `hs` does not exceed `target_hs`; `Ns` is odd so `s = 0` is a node.
    pub fn with_spacing(half_length: f64, target_hs: f64, nu: usize, width: f64) -> Result<Self> {
        if !(target_hs > 0.0) {
            return Err(Error::invalid("target spacing must be positive"));
        }
        let mut ns = (2.0 * half_length / target_hs).ceil() as usize;
        if ns % 2 == 0 {
            ns += 1;
        }
        Self::new(half_length, ns.max(3), nu, width)
    }

    pub fn dim(&self) -> usize {
        self.ns * self.nu
    }

    pub fn hs(&self) -> f64 {
        2.0 * self.half_length / (self.ns + 1) as f64
    }

    pub fn hu(&self) -> f64 {
        self.width / (self.nu + 1) as f64
    }

    /// Longitudinal node `i`.
    pub fn s(&self, i: usize) -> f64 {
        -self.half_length + (i + 1) as f64 * self.hs()
    }

    /// Half point between nodes `i-1` and `i` (`i = 0..=Ns`, the ends touch the boundary nodes).
    pub fn s_half(&self, i: usize) -> f64 {
        -self.half_length + (i as f64 + 0.5) * self.hs()
    }

    pub fn u(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.hu()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nu + j
    }

    /// Lowest eigenvalue of the transverse second difference, `(4/hu²) sin²(π hu/(2d))`.
    pub fn threshold(&self) -> f64 {
        discrete_mode(self.width, self.nu, 1)
    }

    /// Same grid with both spacings halved (`N ↦ 2N + 1`).
    pub fn refined(&self) -> Self {
        Self { ns: 2 * self.ns + 1, nu: 2 * self.nu + 1, ..*self }
    }

    /// Same spacings on a longer interval.
    pub fn extended(&self, half_length: f64) -> Self {
        let hs = self.hs();
        let ns = ((2.0 * half_length / hs).round() as usize).saturating_sub(1).max(3);
        Self { half_length, ns, ..*self }
    }

    /// Checks that both plateau onsets sit inside `(-L, L)` clear of the two
    /// outermost cells, and that each cutoff transition spans at least 8 cells.
    pub fn check_distortion(&self, dist: &DistortionField) -> Result<()> {
        let (lo, hi) = dist.turning_points();
        let (zl, zh) = dist.untouched_zone();
        let hs = self.hs();
        let edge = self.half_length - 2.0 * hs;
        if lo.abs() >= edge || hi.abs() >= edge {
            return Err(Error::invalid(format!(
                "plateau onsets ({lo:.4}, {hi:.4}) do not fit inside the truncation (-{0}, {0}) with margin",
                self.half_length
            )));
        }
        let narrow = (zl - lo).abs().min((hi - zh).abs());
        if narrow < 8.0 * hs {
            return Err(Error::invalid(format!(
                "cutoff transition of length {narrow:.4} is resolved by fewer than 8 cells (hs = {hs:.4})"
            )));
        }
        Ok(())
    }
}

/// `(4/hu²) sin²(kπ hu/(2d))` for the `Nu`-point Dirichlet second difference.
pub fn discrete_mode(width: f64, nu: usize, k: usize) -> f64 {
    let hu = width / (nu + 1) as f64;
    let x = (k as f64 * PI * hu / (2.0 * width)).sin();
    4.0 * x * x / (hu * hu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransverseMode {
    pub k: usize,
    pub discrete: f64,
    pub continuum: f64,
}

/// Discrete transverse eigenvalues with the continuum values `(kπ/d)²`.
pub fn transverse_modes(width: f64, nu: usize) -> Result<Vec<TransverseMode>> {
    if nu < 3 {
        return Err(Error::invalid("need at least 3 transverse points"));
    }
    Ok((1..=nu)
        .map(|k| TransverseMode { k, discrete: discrete_mode(width, nu, k), continuum: (k as f64 * PI / width).powi(2) })
        .collect())
}

/// `L = max(|E|/(F cos η), |E|/(F |cos(η - α₀)|)) + margin`; the default margin is
/// 5 plus three transition widths.
pub fn auto_truncation(params: &DistortionParams, field: &FieldConfig, alpha0: f64, margin: Option<f64>) -> Result<f64> {
    if field.regime != Regime::ResonantBothEnds {
        return Err(Error::RegimeMismatch(format!("automatic truncation needs the resonant regime, got {:?}", field.regime)));
    }
    let (cm, cp) = field.slopes(alpha0);
    let e = params.energy().abs();
    let f = field.strength;
    let onset = (e / (f * cm.abs())).max(e / (f * cp.abs()));
    let width = params.window() / (f * cm.abs().min(cp.abs()));
    Ok(onset + margin.unwrap_or(5.0 + 3.0 * width))
}

/// The six operators of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OperatorKind {
    /// `H = T_s + T_u + V₀`
    Bare,
    /// `H(F) = H + W(F)`
    Stark,
    /// `H̃₀(F) = T_s + T_u + W̃(F)`
    Reference,
    /// `H_θ(F) = T_{s,θ} + T_u + V₀,θ + W_θ(F)`
    DistortedStark,
    /// `H̃₀,θ(F) = T_{s,θ} + T_u + W̃_θ(F)`
    DistortedReference,
    /// `H₀,θ = T_{s,θ} + T_u`
    DistortedKinetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldTerm {
    None,
    Full,
    Reference,
}

impl OperatorKind {
    pub fn is_distorted(self) -> bool {
        matches!(self, Self::DistortedStark | Self::DistortedReference | Self::DistortedKinetic)
    }

    fn curvature_potential(self) -> bool {
        matches!(self, Self::Bare | Self::Stark | Self::DistortedStark)
    }

    fn field_term(self) -> FieldTerm {
        match self {
            Self::Bare | Self::DistortedKinetic => FieldTerm::None,
            Self::Stark | Self::DistortedStark => FieldTerm::Full,
            Self::Reference | Self::DistortedReference => FieldTerm::Reference,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Bare => "H",
            Self::Stark => "H(F)",
            Self::Reference => "H~0(F)",
            Self::DistortedStark => "H_theta(F)",
            Self::DistortedReference => "H~0_theta(F)",
            Self::DistortedKinetic => "H0_theta",
        }
    }
}

/// Where an assembled matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub kind: OperatorKind,
    pub grid: Grid,
    pub geometry: GeometrySetup,
    pub field_strength: Option<f64>,
    pub field_direction: Option<f64>,
    pub beta: Option<f64>,
}

/// Assembled sparse operator with its structural flags.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: CsrMatrix,
    pub is_hermitian: bool,
    pub is_complex_symmetric: bool,
    pub provenance: Provenance,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn grid(&self) -> &Grid {
        &self.provenance.grid
    }

    /// Coordinate text export: `row col re im` per line, 17 significant digits.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "% {} n={} nnz={}", self.provenance.kind.label(), self.dim(), self.matrix.nnz())?;
        for (i, j, v) in self.matrix.triplets() {
            writeln!(out, "{i} {j} {:.16e} {:.16e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Inputs to [`assemble`]; `stark` is needed by every field kind and
/// `distortion` by every distorted kind.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    pub geometry: &'a GeometrySetup,
    pub stark: Option<&'a StarkField>,
    pub distortion: Option<&'a DistortionField>,
}

struct Column {
    jet: FieldJet,
    curvature: crate::geometry::CurvatureJet,
    z: Complex64,
}

pub fn assemble(kind: OperatorKind, scenario: &Scenario<'_>, grid: &Grid) -> Result<OperatorMatrix> {
    let geometry = scenario.geometry;
    if (geometry.width - grid.width).abs() > 1e-15 * geometry.width {
        return Err(Error::invalid("grid width differs from the strip width"));
    }
    let field_term = kind.field_term();
    let stark = match (field_term, scenario.stark) {
        (FieldTerm::None, s) => s,
        (_, Some(s)) => Some(s),
        (_, None) => return Err(Error::invalid(format!("{} needs a field", kind.label()))),
    };
    let distortion = if kind.is_distorted() {
        let d = scenario
            .distortion
            .ok_or_else(|| Error::invalid(format!("{} needs distortion parameters", kind.label())))?;
        grid.check_distortion(d)?;
        Some(d)
    } else {
        None
    };
    let model = geometry.model;
    let beta = distortion.map(|d| d.beta()).unwrap_or(0.0);
    let theta = Complex64::new(0.0, beta);

    let column = |s: f64| -> Result<Column> {
        let jet = distortion.map(|d| d.eval(s)).unwrap_or(FieldJet::ZERO);
        let z = Complex64::new(s, beta * jet.f);
        Ok(Column { jet, curvature: model.eval(z)?, z })
    };

    let (ns, nu) = (grid.ns, grid.nu);
    let (hs, hu) = (grid.hs(), grid.hu());
    let (is2, iu2) = (1.0 / (hs * hs), 1.0 / (hu * hu));

    // fluxes G at half points
    let mut flux = vec![Complex64::new(0.0, 0.0); (ns + 1) * nu];
    for i in 0..=ns {
        let c = column(grid.s_half(i))?;
        for j in 0..nu {
            flux[i * nu + j] = LocalCoefficients::new(c.curvature, &c.jet, theta, grid.u(j))?.flux;
        }
    }

    let nodes: Vec<f64> = (0..ns).map(|i| grid.s(i)).collect();
    let samples = match (field_term, stark) {
        (FieldTerm::Full, Some(w)) => Some(w.tabulate(&nodes)?),
        _ => None,
    };

    let n = grid.dim();
    let mut triplets = Vec::with_capacity(5 * n);
    for i in 0..ns {
        let c = column(nodes[i])?;
        let cont = match (&samples, stark) {
            (Some(smp), Some(w)) => Some(w.continue_longitudinal(&smp[i], c.z.im)?),
            _ => None,
        };
        for j in 0..nu {
            let u = grid.u(j);
            let local = LocalCoefficients::new(c.curvature, &c.jet, theta, u)?;
            let (g_lo, g_hi) = (flux[i * nu + j], flux[(i + 1) * nu + j]);
            let mut diag = (g_lo + g_hi) * is2 + 2.0 * iu2;
            diag += local.s_theta;
            if kind.curvature_potential() {
                diag += local.v0;
            }
            match (field_term, stark) {
                (FieldTerm::Full, Some(w)) => {
                    diag += w.continued_at(cont.as_ref().expect("continued sample"), u).total;
                }
                (FieldTerm::Reference, Some(w)) => {
                    diag += w.reference().value(w.field().strength, c.z, u);
                }
                _ => {}
            }
            let k = grid.index(i, j);
            triplets.push((k, k, diag));
            if j > 0 {
                triplets.push((k, k - 1, Complex64::new(-iu2, 0.0)));
            }
            if j + 1 < nu {
                triplets.push((k, k + 1, Complex64::new(-iu2, 0.0)));
            }
            if i > 0 {
                triplets.push((k, k - nu, -g_lo * is2));
            }
            if i + 1 < ns {
                triplets.push((k, k + nu, -g_hi * is2));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n, triplets);
    let asym = matrix.max_asymmetry();
    if asym != 0.0 {
        return Err(Error::invalid(format!("assembled {} is not symmetric (defect {asym:e})", kind.label())));
    }
    let real = matrix.is_real();
    if !kind.is_distorted() && !real {
        return Err(Error::invalid(format!("assembled {} has complex entries", kind.label())));
    }
    let provenance = Provenance {
        kind,
        grid: *grid,
        geometry: *geometry,
        field_strength: stark.map(|w| w.field().strength),
        field_direction: stark.map(|w| w.field().direction),
        beta: distortion.map(|d| d.beta()),
    };
    Ok(OperatorMatrix { matrix, is_hermitian: real, is_complex_symmetric: true, provenance })
}
