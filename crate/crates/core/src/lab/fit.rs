//! Exponential width law fit `|Im Z| ≈ c₁ e^{-c₂/F}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// One `(F, β)` solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "F")]
    pub strength: f64,
    pub beta: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub residual: f64,
    #[serde(rename = "L")]
    pub half_length: f64,
    #[serde(rename = "Ns")]
    pub ns: usize,
    #[serde(rename = "Nu")]
    pub nu: usize,
    pub wall_time: f64,
}

impl SweepRecord {
    pub const HEADER: &'static str = "F,beta,re_Z,im_Z,residual,L,Ns,Nu,wall_time";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
            self.strength, self.beta, self.re_z, self.im_z, self.residual, self.half_length, self.ns, self.nu, self.wall_time
        )
    }

    pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header.trim() != Self::HEADER {
            return Err(Error::invalid(format!("unexpected sweep header `{header}`")));
        }
        let mut out = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::invalid(format!("row {} has {} columns", k + 1, f.len())));
            }
            let num = |i: usize| -> Result<f64> {
                f[i].trim().parse::<f64>().map_err(|e| Error::invalid(format!("row {} column {}: {e}", k + 1, i + 1)))
            };
            let int = |i: usize| -> Result<usize> {
                f[i].trim().parse::<usize>().map_err(|e| Error::invalid(format!("row {} column {}: {e}", k + 1, i + 1)))
            };
            out.push(SweepRecord {
                strength: num(0)?,
                beta: num(1)?,
                re_z: num(2)?,
                im_z: num(3)?,
                residual: num(4)?,
                half_length: num(5)?,
                ns: int(6)?,
                nu: int(7)?,
                wall_time: num(8)?,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
    /// `c₂ > 0`: widths shrink as `F → 0`.
    pub confirms_exponential_law: bool,
}

/// Least squares of `ln|Im Z| = ln c₁ - c₂/F` over records with `Im Z < 0`.
pub fn fit_width(records: &[SweepRecord]) -> Result<WidthFit> {
    let usable: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.im_z < 0.0 && r.im_z.is_finite() && r.strength > 0.0)
        .collect();
    if usable.len() < 4 {
        return Err(Error::invalid(format!(
            "width fit needs at least 4 records with Im Z < 0, got {}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|r| 1.0 / r.strength).collect();
    let ys: Vec<f64> = usable.iter().map(|r| (-r.im_z).ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::invalid("width fit needs at least two distinct field strengths"))?;
    let c2 = -fit.slope;
    Ok(WidthFit {
        c1: fit.intercept.exp(),
        c2,
        r_squared: fit.r_squared,
        f_min: usable.iter().map(|r| r.strength).fold(f64::INFINITY, f64::min),
        f_max: usable.iter().map(|r| r.strength).fold(0.0, f64::max),
        points: usable.len(),
        confirms_exponential_law: c2 > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(f: f64, im: f64) -> SweepRecord {
        SweepRecord { strength: f, beta: 0.05, re_z: 9.8, im_z: im, residual: 0.0, half_length: 1.0, ns: 3, nu: 3, wall_time: 0.0 }
    }

    #[test]
    fn exact_recovery() {
        let recs: Vec<_> = [0.08, 0.06, 0.045, 0.034, 0.025].iter().map(|&f| record(f, -(-3.0 / f as f64).exp())).collect();
        let fit = fit_width(&recs).unwrap();
        assert!((fit.c1 - 1.0).abs() < 1e-10 && (fit.c2 - 3.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.confirms_exponential_law);
    }

    #[test]
    fn noisy_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fs = [0.08, 0.06, 0.045, 0.034, 0.025, 0.019, 0.014];
        let recs: Vec<_> = fs
            .iter()
            .map(|&f| record(f, -0.5 * (-0.3 / f).exp() * (1.0 + 0.05 * rng.random_range(-1.0..1.0))))
            .collect();
        let fit = fit_width(&recs).unwrap();
        assert!((fit.c2 - 0.3).abs() < 0.03, "{fit:?}");
        assert!(fit.r_squared >= 0.98);
    }

    #[test]
    fn positive_widths_rejected() {
        let recs: Vec<_> = [0.08, 0.06, 0.045, 0.034].iter().map(|&f| record(f, 1e-3)).collect();
        assert!(fit_width(&recs).is_err());
    }

    #[test]
    fn growing_widths_flagged() {
        let recs: Vec<_> = [0.08, 0.06, 0.045, 0.034].iter().map(|&f| record(f, -(2.0 / f).exp() * 1e-30)).collect();
        assert!(!fit_width(&recs).unwrap().confirms_exponential_law);
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![record(0.02, -1.25e-3), record(0.01, -3.5e-5)];
        let text = std::iter::once(SweepRecord::HEADER.to_string()).chain(recs.iter().map(|r| r.csv_row())).collect::<Vec<_>>().join("\n");
        assert_eq!(SweepRecord::parse_csv(&text).unwrap(), recs);
    }
}
