//! Eigenvalue pipelines: trapped modes of the real operator, complex eigenvalues
//! of the distorted operators, resonance selection, θ-plateau stability, the
//! sector probe and the Birman–Schwinger norm.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretize::{assemble, Grid, OperatorKind, OperatorMatrix, Scenario};
use crate::distortion::{DistortionField, DistortionParams};
use crate::error::{Error, Result};
use crate::fields::StarkField;
use crate::geometry::GeometrySetup;
use crate::linalg::banded::BandLu;
use crate::linalg::sparse::norm2;
use crate::linalg::{dense, inertia, shift_invert_eigs, ArnoldiOptions, CsrMatrix, EigenPair};
use crate::stats::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Eigenvalues requested per shift.
    pub k: usize,
    /// Bound on the recomputed residual `‖Mx - λx‖` of accepted pairs.
    pub tol: f64,
    pub arnoldi: ArnoldiOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { method: SolverMethod::ShiftInvert, k: 12, tol: 1e-8, arnoldi: ArnoldiOptions::default() }
    }
}

/// Eigenvalues below a threshold, grouped by multiplicity.
#[derive(Debug, Clone)]
pub struct BoundStates {
    pub threshold: f64,
    pub pairs: Vec<EigenPair>,
    /// `(eigenvalue, multiplicity)` after merging values within 1e-9.
    pub levels: Vec<(f64, usize)>,
    /// Number of eigenvalues below `threshold - gap_tol` by inertia.
    pub count: usize,
}

impl BoundStates {
    pub fn lowest(&self) -> Option<f64> {
        self.levels.first().map(|l| l.0)
    }
}

/// Gershgorin lower bound on the spectrum of a real symmetric matrix.
fn gershgorin_floor(a: &CsrMatrix) -> f64 {
    (0..a.dim())
        .map(|i| {
            let mut d = 0.0;
            let mut r = 0.0;
            for (j, v) in a.row(i) {
                if j == i {
                    d = v.re;
                } else {
                    r += v.norm();
                }
            }
            d - r
        })
        .fold(f64::INFINITY, f64::min)
}

/// Up to `k` eigenpairs of a real symmetric operator below `λ₀ - gap_tol`.
pub fn bound_states(m: &OperatorMatrix, lambda0: f64, k: usize, gap_tol: f64, opts: &SolverOptions) -> Result<BoundStates> {
    if !m.is_hermitian {
        return Err(Error::invalid("bound states need a real symmetric operator"));
    }
    let block = m.grid().nu;
    let cap = lambda0 - gap_tol;
    let count = inertia::count_below(&m.matrix, block, cap)?;
    let want = count.min(k);
    if want == 0 {
        return Ok(BoundStates { threshold: lambda0, pairs: Vec::new(), levels: Vec::new(), count });
    }
    // bisect with inertia for a shift just below the lowest eigenvalue
    let mut lo = gershgorin_floor(&m.matrix) - 1e-3;
    let mut hi = cap;
    for _ in 0..16 {
        let mid = 0.5 * (lo + hi);
        match inertia::count_below(&m.matrix, block, mid) {
            Ok(0) => lo = mid,
            Ok(_) => hi = mid,
            Err(Error::SingularPivot { .. }) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    let shift = lo - 1e-3 * (hi - lo).max(1e-6);
    let mut pairs = shift_invert_eigs(&m.matrix, Complex64::new(shift, 0.0), want, &opts.arnoldi)?;
    pairs.retain(|p| p.value.re < cap);
    pairs.sort_by(|a, b| a.value.re.total_cmp(&b.value.re));
    for p in &pairs {
        if p.residual > opts.tol {
            return Err(Error::NoConvergence(format!("bound state {} has residual {:e}", p.value.re, p.residual)));
        }
    }
    let levels = group_levels(&pairs.iter().map(|p| p.value.re).collect::<Vec<_>>(), 1e-9);
    Ok(BoundStates { threshold: lambda0, pairs, levels, count })
}

/// Merges sorted values closer than `tol` into `(value, multiplicity)`.
pub fn group_levels(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((w, c)) if (v - *w).abs() <= tol => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// `k` eigenpairs nearest `target`, each with its recomputed residual.
pub fn complex_eigs_near(m: &CsrMatrix, target: Complex64, k: usize, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    match opts.method {
        SolverMethod::ShiftInvert => shift_invert_eigs(m, target, k, &opts.arnoldi),
        SolverMethod::Dense => {
            let n = m.dim();
            if n > dense::DENSE_LIMIT {
                return Err(Error::Dense(format!("dimension {n} too large for the dense solver")));
            }
            let (vals, vecs) = dense::eigen(&m.to_dense(), n)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| (vals[a] - target).norm().total_cmp(&(vals[b] - target).norm()));
            Ok(order
                .into_iter()
                .take(k)
                .map(|c| {
                    let mut x: Vec<Complex64> = (0..n).map(|i| vecs[i * n + c]).collect();
                    let nx = norm2(&x);
                    x.iter_mut().for_each(|v| *v /= nx);
                    let ax = m.apply(&x);
                    let r: Vec<Complex64> = ax.iter().zip(&x).map(|(p, q)| p - vals[c] * q).collect();
                    EigenPair { value: vals[c], residual: norm2(&r), vector: x }
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cluster {
    Resonance,
    RotatedContinuum,
    Rejected,
}

/// A complex eigenvalue of the distorted operator with its classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceEstimate {
    pub z: Complex64,
    pub residual: f64,
    pub beta: f64,
    pub grid: Option<Grid>,
    pub cluster: Cluster,
    pub drift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRule {
    pub e0: f64,
    pub beta: f64,
    pub window: f64,
    pub expected: usize,
    pub tol_im: f64,
    pub tol_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub resonances: Vec<ResonanceEstimate>,
    pub others: Vec<ResonanceEstimate>,
    pub warning: Option<String>,
}

/// Keeps candidates with `|Re Z - E₀| < δE`, `-β/2 < Im Z ≤ tol_im` and small
/// residual; the rest is labelled rotated continuum (near `Im ≈ -β`) or rejected.
/// Kept candidates are ordered by `|Im Z|`.
pub fn select_resonances(candidates: &[(Complex64, f64)], rule: &SelectionRule) -> Selection {
    let mut resonances = Vec::new();
    let mut others = Vec::new();
    for &(z, residual) in candidates {
        let keep = (z.re - rule.e0).abs() < rule.window
            && z.im > -0.5 * rule.beta
            && z.im <= rule.tol_im
            && residual <= rule.tol_residual;
        let cluster = if keep {
            Cluster::Resonance
        } else if residual <= rule.tol_residual && z.im <= -0.5 * rule.beta {
            Cluster::RotatedContinuum
        } else {
            Cluster::Rejected
        };
        let est = ResonanceEstimate { z, residual, beta: rule.beta, grid: None, cluster, drift: None };
        if keep {
            resonances.push(est);
        } else {
            others.push(est);
        }
    }
    // narrowest first: rotated continuum eigenvalues that slip past the cut
    // scale with β, the resonance does not
    resonances.sort_by(|a, b| {
        a.z.im
            .abs()
            .total_cmp(&b.z.im.abs())
            .then((a.z.re - rule.e0).abs().total_cmp(&(b.z.re - rule.e0).abs()))
    });
    let warning = (resonances.len() != rule.expected)
        .then(|| format!("selected {} resonances, expected {}", resonances.len(), rule.expected));
    Selection { resonances, others, warning }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlateauVerdict {
    Stable,
    Unstable,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateauReport {
    pub betas: Vec<f64>,
    pub values: Vec<Option<Complex64>>,
    /// Largest pairwise distance among all available values.
    pub max_drift: f64,
    /// Index range `[start, end]` of the longest stable run, if any.
    pub plateau: Option<(usize, usize)>,
    pub plateau_drift: Option<f64>,
    pub verdict: PlateauVerdict,
}

fn pairwise_drift(values: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Plateau analysis of `Z(β)`: stable iff some run of at least 3 consecutive
/// β values has all pairwise distances within `drift_tol`.
pub fn plateau_report(betas: &[f64], values: &[Option<Complex64>], drift_tol: f64) -> PlateauReport {
    let avail: Vec<Complex64> = values.iter().flatten().copied().collect();
    let max_drift = pairwise_drift(&avail);
    let mut best: Option<(usize, usize, f64)> = None;
    if values.len() >= 3 {
        for a in 0..values.len() {
            for b in a + 2..values.len() {
                let run: Option<Vec<Complex64>> = values[a..=b].iter().copied().collect();
                let Some(run) = run else { break };
                let d = pairwise_drift(&run);
                if d > drift_tol {
                    break;
                }
                let better = match best {
                    None => true,
                    Some((ba, bb, bd)) => (b - a) > (bb - ba) || ((b - a) == (bb - ba) && d < bd),
                };
                if better {
                    best = Some((a, b, d));
                }
            }
        }
    }
    let verdict = if values.len() < 3 || avail.len() < 3 {
        PlateauVerdict::InsufficientData
    } else if best.is_some() {
        PlateauVerdict::Stable
    } else {
        PlateauVerdict::Unstable
    };
    PlateauReport {
        betas: betas.to_vec(),
        values: values.to_vec(),
        max_drift,
        plateau: best.map(|(a, b, _)| (a, b)),
        plateau_drift: best.map(|(_, _, d)| d),
        verdict,
    }
}

/// Everything needed to compute resonances of `H_θ(F)` on one grid.
#[derive(Debug, Clone)]
pub struct ResonanceProblem<'a> {
    pub geometry: &'a GeometrySetup,
    pub stark: &'a StarkField,
    pub params: DistortionParams,
    pub grid: Grid,
    pub e0: f64,
    pub expected: usize,
    pub solver: SolverOptions,
    pub tol_im: f64,
}

#[derive(Debug, Clone)]
pub struct ResonanceSolve {
    pub beta: f64,
    pub candidates: Vec<(Complex64, f64)>,
    pub selection: Selection,
}

impl ResonanceProblem<'_> {
    pub fn distortion(&self, beta: f64) -> Result<DistortionField> {
        let params = if beta < 0.0 { self.params.with_beta(-beta)?.conjugate() } else { self.params.with_beta(beta)? };
        DistortionField::new(params, self.stark.field(), self.stark.alpha0())
    }

    pub fn operator(&self, kind: OperatorKind, beta: f64) -> Result<OperatorMatrix> {
        let dist = self.distortion(beta)?;
        let scenario = Scenario { geometry: self.geometry, stark: Some(self.stark), distortion: Some(&dist) };
        assemble(kind, &scenario, &self.grid)
    }

    /// Eigenvalues of `H_θ(F)` near `target` and the resonance selection at `β`.
    pub fn solve(&self, beta: f64, target: Complex64) -> Result<ResonanceSolve> {
        let m = self.operator(OperatorKind::DistortedStark, beta)?;
        let pairs = complex_eigs_near(&m.matrix, target, self.solver.k, &self.solver)?;
        let candidates: Vec<(Complex64, f64)> = pairs.iter().map(|p| (p.value, p.residual)).collect();
        let rule = SelectionRule {
            e0: self.e0,
            beta: beta.abs(),
            window: self.params.window(),
            expected: self.expected,
            tol_im: self.tol_im,
            tol_residual: self.solver.tol,
        };
        let mut selection = select_resonances(&candidates, &rule);
        for r in selection.resonances.iter_mut().chain(selection.others.iter_mut()) {
            r.grid = Some(self.grid);
            r.beta = beta;
        }
        Ok(ResonanceSolve { beta, candidates, selection })
    }

    /// `Z(β)` for each β (the selected eigenvalue nearest `E₀`) and the plateau verdict.
    pub fn theta_plateau(&self, betas: &[f64], target: Complex64, drift_tol: f64) -> (PlateauReport, Vec<Result<ResonanceSolve>>) {
        let solves: Vec<Result<ResonanceSolve>> = betas.iter().map(|&b| self.solve(b, target)).collect();
        let values: Vec<Option<Complex64>> = solves
            .iter()
            .map(|s| s.as_ref().ok().and_then(|s| s.selection.resonances.first().map(|r| r.z)))
            .collect();
        (plateau_report(betas, &values, drift_tol), solves)
    }
}

/// Eigenvalues of `H₀,θ` in a real window with the fitted sector edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorReport {
    pub eigenvalues: Vec<Complex64>,
    pub max_im: f64,
    /// Least-squares `Im z ≈ slope · (Re z - λ₀) + offset` over the window.
    pub slope: f64,
    pub offset: f64,
    pub shifts: usize,
}

/// Sweeps shift-invert targets along `[lo, hi]` so that the union of the
/// nearest-eigenvalue disks covers the window, then fits the sector edge.
pub fn sector_probe(m: &CsrMatrix, lambda0: f64, window: (f64, f64), opts: &SolverOptions) -> Result<SectorReport> {
    let (lo, hi) = window;
    let mut found: Vec<Complex64> = Vec::new();
    let mut shift = lo;
    let mut shifts = 0;
    loop {
        let pairs = complex_eigs_near(m, Complex64::new(shift, 0.0), opts.k, opts)?;
        shifts += 1;
        let radius = pairs.iter().map(|p| (p.value - shift).norm()).fold(0.0, f64::max);
        for p in pairs {
            if p.residual > opts.tol {
                return Err(Error::NoConvergence(format!("sector eigenvalue {} has residual {:e}", p.value, p.residual)));
            }
            if !found.iter().any(|q| (q - p.value).norm() <= 1e-9 * (1.0 + q.norm())) {
                found.push(p.value);
            }
        }
        if shift + radius >= hi || shifts > 2000 {
            break;
        }
        shift += (0.7 * radius).max(1e-6 * (hi - lo));
    }
    found.retain(|z| z.re >= lo && z.re <= hi);
    found.sort_by(|a, b| a.re.total_cmp(&b.re));
    let max_im = found.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let xs: Vec<f64> = found.iter().map(|z| z.re - lambda0).collect();
    let ys: Vec<f64> = found.iter().map(|z| z.im).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(SectorReport {
        eigenvalues: found,
        max_im,
        slope: fit.map(|f| f.slope).unwrap_or(0.0),
        offset: fit.map(|f| f.intercept).unwrap_or(0.0),
        shifts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `‖V (H̃ - z)⁻¹‖` by power iteration on `KᴴK`, where `V = H - H̃` must be diagonal.
pub fn birman_schwinger_norm(h: &CsrMatrix, reference: &CsrMatrix, z: Complex64, rel_tol: f64, max_iter: usize) -> Result<NormEstimate> {
    let n = h.dim();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for (i, j, a) in h.triplets() {
        let d = a - reference.get(i, j);
        if i != j {
            if d.norm() > 0.0 {
                return Err(Error::invalid("operator and reference differ off the diagonal"));
            }
        } else {
            v[i] = d;
        }
    }
    if v.iter().all(|x| x.norm() == 0.0) {
        return Ok(NormEstimate { norm: 0.0, iterations: 0, converged: true });
    }
    let lu = BandLu::factor(reference, z)?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|p| *p /= nx);
    let mut prev = 0.0;
    for it in 1..=max_iter {
        // y = K x = V (H̃ - z)⁻¹ x
        let mut y = x.clone();
        lu.solve(&mut y);
        y.iter_mut().zip(&v).for_each(|(p, q)| *p *= q);
        let sigma = norm2(&y);
        // x = Kᴴ y = (H̃ - z)⁻ᴴ V̄ y
        y.iter_mut().zip(&v).for_each(|(p, q)| *p *= q.conj());
        lu.solve_adjoint(&mut y);
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok(NormEstimate { norm: 0.0, iterations: it, converged: true });
        }
        x = y.into_iter().map(|p| p / ny).collect();
        if it > 1 && (sigma - prev).abs() <= rel_tol * sigma {
            return Ok(NormEstimate { norm: sigma, iterations: it, converged: true });
        }
        prev = sigma;
    }
    Ok(NormEstimate { norm: prev, iterations: max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rule(e0: f64, beta: f64) -> SelectionRule {
        SelectionRule { e0, beta, window: 0.1, expected: 1, tol_im: 1e-8, tol_residual: 1e-6 }
    }

    #[test]
    fn empty_selection() {
        let s = select_resonances(&[], &rule(9.8, 0.05));
        assert!(s.resonances.is_empty());
        assert!(s.warning.is_some());
    }

    #[test]
    fn synthetic_separation() {
        let beta = 0.05;
        let mut cands = vec![(c(9.8, -1e-4), 1e-10)];
        for k in 0..10 {
            cands.push((c(9.75 + 0.01 * k as f64, -beta), 1e-10));
        }
        let s = select_resonances(&cands, &rule(9.8, beta));
        assert_eq!(s.resonances.len(), 1);
        assert_eq!(s.resonances[0].z, c(9.8, -1e-4));
        assert!(s.warning.is_none());
        assert!(s.others.iter().all(|o| o.cluster == Cluster::RotatedContinuum));
    }

    #[test]
    fn plateau_rules() {
        let betas = [0.03, 0.04, 0.05, 0.06];
        let z = Some(c(9.8, -1e-3));
        let r = plateau_report(&betas, &[z, z, z, z], 1e-12);
        assert_eq!(r.verdict, PlateauVerdict::Stable);
        assert_eq!(r.max_drift, 0.0);
        assert_eq!(r.plateau, Some((0, 3)));
        let single = plateau_report(&[0.05], &[z], 1e-5);
        assert_eq!(single.verdict, PlateauVerdict::InsufficientData);
        let drifting: Vec<_> = (0..4).map(|k| Some(c(9.8 + 1e-3 * k as f64, 0.0))).collect();
        assert_eq!(plateau_report(&betas, &drifting, 1e-5).verdict, PlateauVerdict::Unstable);
        let gap = [z, None, z, z];
        assert_eq!(plateau_report(&betas, &gap, 1e-5).verdict, PlateauVerdict::Unstable);
    }

    #[test]
    fn levels_grouping() {
        assert_eq!(group_levels(&[1.0, 1.0 + 1e-10, 2.0], 1e-9), vec![(1.0, 2), (2.0, 1)]);
    }

    #[test]
    fn dense_and_shift_invert_agree_on_diagonal() {
        let a = CsrMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        let d = SolverOptions { method: SolverMethod::Dense, ..Default::default() };
        let p = complex_eigs_near(&a, c(0.0, 2.0), 1, &d).unwrap();
        assert!((p[0].value - c(0.0, 2.0)).norm() < 1e-12);
        assert!(p[0].residual < 1e-12);
    }
}
