//! Evaluation routes for the electron–electron repulsion 1/|r₁ − r₂| and the
//! error diagnostics that compare them against direct evaluation.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::specfun::{
    bessel_coefficients, bessel_eval, bessel_projection_oracle, eval_table, legendre_table,
    BesselArg, BesselCoefficientTable, SeriesTruncation,
};

/// Two-electron configuration reduced to radii and the cosine of the angle
/// between the position vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    pub r1: f64,
    pub r2: f64,
    pub cos_theta: f64,
}

impl Geometry {
    pub fn new(r1: f64, r2: f64, cos_theta: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1.is_finite() && r2 > 0.0 && r2.is_finite()) {
            return Err(domain(format!("radii must be positive and finite, got ({r1}, {r2})")));
        }
        if !(-1.0..=1.0).contains(&cos_theta) {
            return Err(domain(format!("cos(theta) = {cos_theta} outside [-1, 1]")));
        }
        Ok(Self { r1, r2, cos_theta })
    }

    /// Unit outer radius with inner radius `t`.
    pub fn from_ratio(t: f64, cos_theta: f64) -> Result<Self> {
        Self::new(1.0, t, cos_theta)
    }

    pub fn r_less(&self) -> f64 {
        self.r1.min(self.r2)
    }

    pub fn r_greater(&self) -> f64 {
        self.r1.max(self.r2)
    }

    /// r_< / r_> ∈ (0, 1].
    pub fn t(&self) -> f64 {
        self.r_less() / self.r_greater()
    }

    /// arctan t ∈ (0, π/4].
    pub fn alpha(&self) -> f64 {
        self.t().atan()
    }

    pub fn is_coalescent(&self) -> bool {
        self.r1 == self.r2 && self.cos_theta == 1.0
    }

    fn sum_of_squares(&self) -> f64 {
        let (a, b) = (self.r_less(), self.r_greater());
        a * a + b * b
    }
}

pub fn direct_coulomb(g: &Geometry) -> Result<f64> {
    if g.is_coalescent() {
        return Err(Error::Singularity { r: g.r1 });
    }
    let (a, b) = (g.r_less(), g.r_greater());
    let d2 = g.sum_of_squares() - 2.0 * a * b * g.cos_theta;
    if d2 <= 0.0 {
        return Err(Error::Singularity { r: g.r1 });
    }
    Ok(1.0 / d2.sqrt())
}

/// (1/r_>) Σ_{l ≤ l_max} t^l P_l(cos θ).
pub fn classical_multipole(g: &Geometry, l_max: usize) -> f64 {
    let t = g.t();
    let p = legendre_table(l_max, g.cos_theta);
    let mut tl = 1.0;
    let mut sum = 0.0;
    for pl in p {
        sum += tl * pl;
        tl *= t;
    }
    sum / g.r_greater()
}

/// Coefficient tables for the alternative series, built once per truncation
/// and reused across geometries.
#[derive(Debug, Clone)]
pub struct AlternativeSeries {
    trunc: SeriesTruncation,
    tables: Vec<BesselCoefficientTable>,
}

impl AlternativeSeries {
    pub fn new(trunc: SeriesTruncation) -> Result<Self> {
        let tables = (0..=trunc.l_max)
            .map(|l| bessel_coefficients(l, trunc.s_max + 1))
            .collect::<Result<_>>()?;
        Ok(Self { trunc, tables })
    }

    pub fn truncation(&self) -> SeriesTruncation {
        self.trunc
    }

    /// (1/(r_> √(1+t²))) Σ_l (2l+1) j̃_l(t) P_l(cos θ).
    pub fn eval(&self, g: &Geometry) -> f64 {
        let t = g.t();
        let x = 2.0 * t / (1.0 + t * t);
        let p = legendre_table(self.trunc.l_max, g.cos_theta);
        let sum: f64 = self
            .tables
            .iter()
            .zip(&p)
            .enumerate()
            .map(|(l, (table, pl))| (2 * l + 1) as f64 * eval_table(table, x) * pl)
            .sum();
        sum / g.sum_of_squares().sqrt()
    }
}

/// Truncated alternative multipole series in its Legendre (addition-theorem)
/// form.
pub fn alternative_multipole(g: &Geometry, trunc: SeriesTruncation) -> Result<f64> {
    Ok(AlternativeSeries::new(trunc)?.eval(g))
}

/// (1/√(r₁²+r₂²)) exp(r₁ r₂ cos θ / (r₁² + r₂²)). Finite at coalescence.
pub fn exponential_form(g: &Geometry) -> f64 {
    let (a, b) = (g.r_less(), g.r_greater());
    let h2 = g.sum_of_squares();
    (1.0 / h2.sqrt()) * (a * b * g.cos_theta / h2).exp()
}

/// The `s = 0` slice of the alternative series:
/// (1/√(r₁²+r₂²)) Σ_l (2l+1) (r₁r₂/(r₁²+r₂²))^l P_l(cos θ).
pub fn first_term_series(g: &Geometry, l_max: usize) -> f64 {
    let (a, b) = (g.r_less(), g.r_greater());
    let h2 = g.sum_of_squares();
    let q = a * b / h2;
    let p = legendre_table(l_max, g.cos_theta);
    let mut ql = 1.0;
    let mut sum = 0.0;
    for (l, pl) in p.into_iter().enumerate() {
        sum += (2 * l + 1) as f64 * ql * pl;
        ql *= q;
    }
    sum / h2.sqrt()
}

/// 1/√(r₁² + r₂²), the inverse hyperradius.
pub fn hyperradial(r1: f64, r2: f64) -> f64 {
    1.0 / (r1 * r1 + r2 * r2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Classical,
    Alternative,
    Exponential,
    FirstTerm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Classical => "classical",
            Method::Alternative => "alternative",
            Method::Exponential => "exponential",
            Method::FirstTerm => "first_term",
        })
    }
}

/// Grid of (t, cos θ) points; radii are taken as r_> = 1, r_< = t.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanGrid {
    pub t_values: Vec<f64>,
    pub cos_values: Vec<f64>,
}

impl ScanGrid {
    pub fn new(t_values: Vec<f64>, cos_values: Vec<f64>) -> Result<Self> {
        if let Some(t) = t_values.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(domain(format!("grid t = {t} outside (0, 1]")));
        }
        if let Some(x) = cos_values.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
            return Err(domain(format!("grid cos(theta) = {x} outside [-1, 1]")));
        }
        Ok(Self { t_values, cos_values })
    }

    /// Points in row-major (t outer, cos θ inner) order with coalescence
    /// removed.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.t_values
            .iter()
            .flat_map(|&t| self.cos_values.iter().map(move |&x| (t, x)))
            .filter(|&(t, x)| !(t == 1.0 && x == 1.0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub t: f64,
    pub cos_theta: f64,
    pub method: Method,
    pub l_max: Option<usize>,
    pub s_max: Option<usize>,
    pub value: f64,
    pub direct: f64,
    pub rel_error: f64,
}

/// |j̃_l(series) − f_l(oracle)| at one (l, t, s_max).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub l: usize,
    pub t: f64,
    pub s_max: usize,
    pub series: f64,
    pub oracle: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorScanReport {
    pub grid: ScanGrid,
    pub truncations: Vec<SeriesTruncation>,
    pub rows: Vec<ScanRow>,
    pub oracle: Vec<OracleRow>,
}

/// Quadrature order used for the oracle column of a scan; enough for
/// 1e-12 agreement with the closed form up to t = 0.9.
pub const SCAN_ORACLE_QUADRATURE: usize = 256;

/// Relative error of every method against direct evaluation at every grid
/// point, plus the per-l table comparing the j̃_l series with the projection
/// oracle. Coalescence points are skipped. Row order follows grid order,
/// then truncation order.
pub fn error_scan(grid: &ScanGrid, truncations: &[SeriesTruncation]) -> Result<ErrorScanReport> {
    let series: Vec<AlternativeSeries> = truncations
        .iter()
        .map(|&t| AlternativeSeries::new(t))
        .collect::<Result<_>>()?;
    let mut l_maxes: Vec<usize> = Vec::new();
    for t in truncations {
        if !l_maxes.contains(&t.l_max) {
            l_maxes.push(t.l_max);
        }
    }

    let per_point: Vec<Vec<ScanRow>> = grid
        .points()
        .into_par_iter()
        .map(|(t, x)| -> Result<Vec<ScanRow>> {
            let g = Geometry::from_ratio(t, x)?;
            let direct = direct_coulomb(&g)?;
            let row = |method, l_max, s_max, value: f64| ScanRow {
                t,
                cos_theta: x,
                method,
                l_max,
                s_max,
                value,
                direct,
                rel_error: (value - direct).abs() / direct.abs(),
            };
            let mut rows = Vec::new();
            for &l in &l_maxes {
                rows.push(row(Method::Classical, Some(l), None, classical_multipole(&g, l)));
            }
            for s in &series {
                let tr = s.truncation();
                rows.push(row(Method::Alternative, Some(tr.l_max), Some(tr.s_max), s.eval(&g)));
            }
            rows.push(row(Method::Exponential, None, None, exponential_form(&g)));
            for &l in &l_maxes {
                rows.push(row(Method::FirstTerm, Some(l), None, first_term_series(&g, l)));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut oracle_keys = Vec::new();
    for tr in truncations {
        for &t in grid.t_values.iter().filter(|t| **t < 1.0) {
            for l in 0..=tr.l_max {
                oracle_keys.push((l, t, tr.s_max));
            }
        }
    }
    let oracle = oracle_keys
        .into_par_iter()
        .map(|(l, t, s_max)| -> Result<OracleRow> {
            let series = bessel_eval(l, BesselArg::T(t), s_max)?;
            let oracle = bessel_projection_oracle(l, t, SCAN_ORACLE_QUADRATURE)?;
            Ok(OracleRow {
                l,
                t,
                s_max,
                series,
                oracle,
                discrepancy: (series - oracle).abs(),
            })
        })
        .collect::<Result<_>>()?;

    Ok(ErrorScanReport {
        grid: grid.clone(),
        truncations: truncations.to_vec(),
        rows: per_point.into_iter().flatten().collect(),
        oracle,
    })
}

impl ErrorScanReport {
    /// Columns: t, cos_theta, method, l_max, s_max, value, direct, rel_error.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns: l, t, s_max, series, oracle, discrepancy.
    pub fn write_oracle_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        for row in &self.oracle {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn max_rel_error(&self, method: Method) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.rel_error)
            .reduce(f64::max)
    }
}
