use num_complex::Complex64;

use starkguide::discretize::{assemble, Grid, OperatorKind, Scenario};
use starkguide::distortion::{DistortionField, DistortionParams};
use starkguide::fields::{FieldConfig, StarkField};
use starkguide::geometry::{embed, BendingProfile, GeometrySetup};
use starkguide::linalg::dense;
use starkguide::spectra::{bound_states, complex_eigs_near, SolverOptions};

fn lowest(setup: &GeometrySetup, grid: Grid) -> f64 {
    let h = assemble(OperatorKind::Bare, &Scenario { geometry: setup, stark: None, distortion: None }, &grid).unwrap();
    bound_states(&h, grid.threshold(), 1, 1e-6, &SolverOptions::default()).unwrap().lowest().unwrap()
}

#[test]
fn trapped_mode_converges_at_second_order() {
    let setup = GeometrySetup::default_bent();
    let g1 = Grid::new(12.0, 95, 7, 1.0).unwrap();
    let g2 = g1.refined();
    let g3 = g2.refined();
    let (e1, e2, e3) = (lowest(&setup, g1), lowest(&setup, g2), lowest(&setup, g3));
    let rate = ((e1 - e2).abs() / (e2 - e3).abs()).log2();
    assert!((1.8..=2.2).contains(&rate), "E = {e1}, {e2}, {e3}: rate {rate}");
}

fn segments_cross(p: (f64, f64), q: (f64, f64), r: (f64, f64), s: (f64, f64)) -> bool {
    let orient = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let (d1, d2) = (orient(r, s, p), orient(r, s, q));
    let (d3, d4) = (orient(p, q, r), orient(p, q, s));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

#[test]
fn embedded_strip_does_not_self_intersect() {
    let profile = BendingProfile::new(GeometrySetup::default_bent().model).unwrap();
    let ss: Vec<f64> = (0..=300).map(|k| -30.0 + 60.0 * k as f64 / 300.0).collect();
    let mut segs = Vec::new();
    for u in [0.0, 0.5, 1.0] {
        let pts: Vec<(f64, f64)> = ss.iter().map(|&s| embed(&profile, s, u).unwrap()).collect();
        for (k, w) in pts.windows(2).enumerate() {
            segs.push((u, k, w[0], w[1]));
        }
    }
    for (a, sa) in segs.iter().enumerate() {
        for sb in &segs[a + 1..] {
            if sa.0 == sb.0 && sa.1.abs_diff(sb.1) <= 1 {
                continue;
            }
            assert!(!segments_cross(sa.2, sa.3, sb.2, sb.3), "curves u = {} and u = {} cross", sa.0, sb.0);
        }
    }
}

#[test]
fn shift_invert_matches_dense_on_real_operator() {
    let setup = GeometrySetup::default_bent();
    let grid = Grid::new(10.0, 79, 9, 1.0).unwrap();
    let h = assemble(OperatorKind::Bare, &Scenario { geometry: &setup, stark: None, distortion: None }, &grid).unwrap();
    let real: Vec<f64> = h.matrix.to_dense().iter().map(|v| v.re).collect();
    let all = dense::symmetric_eigenvalues(&real, grid.dim()).unwrap();
    let bs = bound_states(&h, grid.threshold(), 5, 1e-6, &SolverOptions::default()).unwrap();
    let expected: Vec<f64> = all.iter().copied().filter(|&e| e < grid.threshold() - 1e-6).collect();
    assert_eq!(bs.count, expected.len());
    for (p, e) in bs.pairs.iter().zip(&expected) {
        assert!((p.value.re - e).abs() < 1e-9, "{} vs {e}", p.value);
    }
}

#[test]
fn shift_invert_matches_dense_on_distorted_operator() {
    let setup = GeometrySetup::default_bent();
    let profile = BendingProfile::new(setup.model).unwrap();
    let a0 = profile.total();
    let field = FieldConfig::new(0.06, 0.3, a0).unwrap();
    let stark = StarkField::with_profile(profile, field).unwrap();
    let params = DistortionParams::new(-0.3, 0.14, 0.08).unwrap();
    let dist = DistortionField::new(params, &field, a0).unwrap();
    let l = starkguide::discretize::auto_truncation(&params, &field, a0, None).unwrap();
    let grid = Grid::new(l, 319, 5, 1.0).unwrap();
    let m = assemble(OperatorKind::DistortedStark, &Scenario { geometry: &setup, stark: Some(&stark), distortion: Some(&dist) }, &grid).unwrap();
    let all = dense::eigenvalues(&m.matrix).unwrap();
    let target = Complex64::new(grid.threshold(), -0.02);
    for p in complex_eigs_near(&m.matrix, target, 8, &SolverOptions::default()).unwrap() {
        let d = all.iter().map(|z| (z - p.value).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-9, "{} is {d:e} from the dense spectrum", p.value);
        assert!(p.residual < 1e-8);
    }
}
