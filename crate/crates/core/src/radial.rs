//! B-spline radial basis, Galerkin assembly of the radial operators and the
//! symmetric-definite generalized eigensolver.
//!
//! The basis is the full order-`k` B-spline set on a knot sequence with
//! `k`-fold end knots at 0 and `R_box`; the first and last splines are
//! dropped so that every retained function satisfies u(0) = u(R) = 0.
//!
//! # Banded matrix dump
//!
//! [`OperatorMatrix::write_binary`] writes
//!
//! ```text
//! u64 LE   dimension n
//! u64 LE   half-bandwidth w
//! f64 LE   A[i][i+d] for d = 0..=w, and within each diagonal i = 0..n-d
//! ```

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config, domain, Error, Result};
use crate::quadrature::GaussLegendre;

/// Breakpoint placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KnotScheme {
    Linear,
    /// 0, r_first, r_first·ratio, r_first·ratio², …, with the final
    /// breakpoint replaced by R_box.
    Geometric { r_first: f64, ratio: f64 },
    /// Geometric from `r_first` up to `switch_radius`, uniform beyond. The
    /// split and ratio are chosen so the spacing is continuous at the switch.
    GeometricThenLinear { r_first: f64, switch_radius: f64 },
}

impl KnotScheme {
    pub fn name(&self) -> &'static str {
        match self {
            KnotScheme::Linear => "linear",
            KnotScheme::Geometric { .. } => "geometric",
            KnotScheme::GeometricThenLinear { .. } => "geometric-then-linear",
        }
    }

    pub fn r_first(&self) -> Option<f64> {
        match *self {
            KnotScheme::Linear => None,
            KnotScheme::Geometric { r_first, .. } | KnotScheme::GeometricThenLinear { r_first, .. } => {
                Some(r_first)
            }
        }
    }
}

/// Desk-scale defaults.
pub const DESK_ORDER: usize = 8;
pub const DESK_SPLINES: usize = 300;
pub const DESK_BOX: f64 = 100.0;
/// First knot as a fraction of the box radius.
pub const R_FIRST_FRACTION: f64 = 1e-4;
/// R_FIRST_FRACTION · DESK_BOX.
pub const DESK_R_FIRST: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisSpec {
    pub order: usize,
    pub n_splines: usize,
    pub r_box: f64,
    pub scheme: KnotScheme,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self::desk()
    }
}

impl BasisSpec {
    /// k = 8, 300 splines, R = 100 bohr, geometric-then-linear switching at R/10.
    pub fn desk() -> Self {
        Self::geometric_then_linear(DESK_ORDER, DESK_SPLINES, DESK_BOX, DESK_R_FIRST)
    }

    /// Geometric-then-linear with the switch at R/10.
    pub fn geometric_then_linear(order: usize, n_splines: usize, r_box: f64, r_first: f64) -> Self {
        Self {
            order,
            n_splines,
            r_box,
            scheme: KnotScheme::GeometricThenLinear {
                r_first,
                switch_radius: r_box / 10.0,
            },
        }
    }

    pub fn linear(order: usize, n_splines: usize, r_box: f64) -> Self {
        Self { order, n_splines, r_box, scheme: KnotScheme::Linear }
    }

    /// Geometric scheme whose ratio makes the last geometric point land on R.
    pub fn geometric_filling(order: usize, n_splines: usize, r_box: f64, r_first: f64) -> Result<Self> {
        let m = breakpoint_count(order, n_splines)?;
        if m < 4 {
            return Err(config("geometric filling needs at least four breakpoints"));
        }
        let ratio = (r_box / r_first).powf(1.0 / (m - 2) as f64);
        // Shrink slightly so the last interior point stays below R.
        let ratio = ratio.powf(1.0 - 1.0 / (m as f64 * 4.0));
        Ok(Self { order, n_splines, r_box, scheme: KnotScheme::Geometric { r_first, ratio } })
    }

    /// Retained basis size after imposing u(0) = u(R) = 0.
    pub fn retained(&self) -> usize {
        self.n_splines.saturating_sub(2)
    }

    /// Short tag identifying the grid in emitted tables.
    pub fn tag(&self) -> String {
        let mut tag = format!("k{}-n{}-R{}-{}", self.order, self.n_splines, self.r_box, self.scheme.name());
        if let Some(r) = self.scheme.r_first() {
            tag.push_str(&format!("-r{r:e}"));
        }
        tag
    }
}

fn breakpoint_count(order: usize, n_splines: usize) -> Result<usize> {
    if order < 4 {
        return Err(config(format!("B-spline order {order} < 4")));
    }
    if n_splines < order || n_splines < 3 {
        return Err(config(format!(
            "{n_splines} splines cannot be built at order {order}"
        )));
    }
    Ok(n_splines - order + 2)
}

/// Breakpoints plus the full knot list with `k`-fold end multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotSequence {
    order: usize,
    breakpoints: Vec<f64>,
    knots: Vec<f64>,
}

impl KnotSequence {
    pub fn from_breakpoints(order: usize, breakpoints: Vec<f64>) -> Result<Self> {
        if order < 1 {
            return Err(config("order must be at least 1"));
        }
        if breakpoints.len() < 2 {
            return Err(config("need at least two breakpoints"));
        }
        if breakpoints[0] != 0.0 {
            return Err(config("first breakpoint must be 0"));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) || !breakpoints.iter().all(|b| b.is_finite()) {
            return Err(config("breakpoints must be finite and strictly ascending"));
        }
        let mut knots = Vec::with_capacity(breakpoints.len() + 2 * order - 2);
        let (first, last) = (breakpoints[0], *breakpoints.last().unwrap());
        knots.extend(std::iter::repeat_n(first, order - 1));
        knots.extend_from_slice(&breakpoints);
        knots.extend(std::iter::repeat_n(last, order - 1));
        Ok(Self { order, breakpoints, knots })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_splines(&self) -> usize {
        self.knots.len() - self.order
    }

    pub fn retained(&self) -> usize {
        self.n_splines() - 2
    }

    pub fn r_box(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Knot index μ with t_μ ≤ r < t_{μ+1}; r = R maps to the last interval.
    fn span(&self, r: f64) -> usize {
        let k = self.order;
        let n = self.n_splines();
        if r >= self.knots[n] {
            return n - 1;
        }
        // Search among t_{k-1} .. t_n.
        let slice = &self.knots[k - 1..=n];
        let pos = slice.partition_point(|&t| t <= r);
        (pos + k - 2).clamp(k - 1, n - 1)
    }

    /// Values and first/second derivatives of the `k` splines that are
    /// nonzero on span μ, as `[order][derivative]` rows for spline
    /// indices μ−k+1 ..= μ.
    fn basis_derivatives(&self, span: usize, r: f64, nders: usize) -> Vec<[f64; 3]> {
        let p = self.order - 1;
        let t = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = r - t[span + 1 - j];
            right[j] = t[span + j] - r;
            let mut saved = 0.0;
            for rr in 0..j {
                ndu[j][rr] = right[rr + 1] + left[j - rr];
                let temp = ndu[rr][j - 1] / ndu[j][rr];
                ndu[rr][j] = saved + right[rr + 1] * temp;
                saved = left[j - rr] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut out = vec![[0.0; 3]; p + 1];
        for (j, row) in out.iter_mut().enumerate() {
            row[0] = ndu[j][p];
        }
        let nders = nders.min(p).min(2);
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for rr in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for kk in 1..=nders {
                let mut d = 0.0;
                let rk = rr as isize - kk as isize;
                let pk = p - kk;
                if rr >= kk {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if rr as isize - 1 <= pk as isize { kk - 1 } else { p - rr };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if rr <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][rr];
                    d += a[s2][kk] * ndu[rr][pk];
                }
                out[rr][kk] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for kk in 1..=nders {
            for row in out.iter_mut() {
                row[kk] *= factor;
            }
            factor *= (p - kk) as f64;
        }
        out
    }

    /// Values of all splines at `r` (length `n_splines`), via the span
    /// algorithm.
    pub fn eval_all(&self, r: f64) -> Result<Vec<f64>> {
        self.check_radius(r)?;
        let span = self.span(r);
        let local = self.basis_derivatives(span, r, 0);
        let mut out = vec![0.0; self.n_splines()];
        for (j, v) in local.iter().enumerate() {
            out[span + 1 - self.order + j] = v[0];
        }
        Ok(out)
    }

    /// Value of `sum_i c_i B_{i+1}(r)` for a coefficient vector over the
    /// retained basis.
    pub fn eval_retained(&self, coeffs: &[f64], r: f64) -> Result<f64> {
        let all = self.eval_all(r)?;
        Ok(coeffs.iter().zip(&all[1..]).map(|(c, b)| c * b).sum())
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if !(0.0..=self.r_box()).contains(&r) {
            return Err(domain(format!("r = {r} outside [0, {}]", self.r_box())));
        }
        Ok(())
    }
}

pub fn build_knots(spec: &BasisSpec) -> Result<KnotSequence> {
    let k = spec.order;
    let m = breakpoint_count(k, spec.n_splines)?;
    let r_box = spec.r_box;
    if !(r_box > 0.0 && r_box.is_finite()) {
        return Err(config(format!("box radius {r_box} must be positive")));
    }
    let breakpoints = match spec.scheme {
        KnotScheme::Linear => (0..m).map(|i| r_box * i as f64 / (m - 1) as f64).collect(),
        KnotScheme::Geometric { r_first, ratio } => {
            if r_first.is_nan() || r_first <= 0.0 || ratio.is_nan() || ratio <= 1.0 {
                return Err(config("geometric scheme needs r_first > 0 and ratio > 1"));
            }
            let mut bp = vec![0.0];
            let mut r = r_first;
            for _ in 1..m - 1 {
                bp.push(r);
                r *= ratio;
            }
            if bp.last().copied().unwrap_or(0.0) >= r_box {
                return Err(config(format!(
                    "geometric breakpoints reach {} before the box edge {r_box}",
                    bp.last().unwrap()
                )));
            }
            bp.push(r_box);
            bp
        }
        KnotScheme::GeometricThenLinear { r_first, switch_radius } => {
            if !(r_first > 0.0 && r_first < switch_radius && switch_radius < r_box) {
                return Err(config("geometric-then-linear needs 0 < r_first < switch_radius < R_box"));
            }
            if m < 4 {
                return Err(config("geometric-then-linear needs at least four breakpoints"));
            }
            geometric_then_linear_points(m, r_first, switch_radius, r_box)
        }
    };
    KnotSequence::from_breakpoints(k, breakpoints)
}

fn geometric_then_linear_points(m: usize, r_first: f64, switch: f64, r_box: f64) -> Vec<f64> {
    // [0] + n_geo points r_first..=switch + n_lin points (switch, R].
    let mismatch = |n_geo: usize| {
        let n_lin = m - 1 - n_geo;
        let ratio = (switch / r_first).powf(1.0 / (n_geo - 1) as f64);
        let last_geo = switch * (1.0 - 1.0 / ratio);
        let h = (r_box - switch) / n_lin as f64;
        (last_geo / h).ln().abs()
    };
    let n_geo = (2..=m - 2)
        .min_by(|&a, &b| mismatch(a).total_cmp(&mismatch(b)))
        .unwrap();
    let n_lin = m - 1 - n_geo;
    let ratio = (switch / r_first).powf(1.0 / (n_geo - 1) as f64);
    let mut bp = Vec::with_capacity(m);
    bp.push(0.0);
    for i in 0..n_geo - 1 {
        bp.push(r_first * ratio.powi(i as i32));
    }
    bp.push(switch);
    let h = (r_box - switch) / n_lin as f64;
    for j in 1..n_lin {
        bp.push(switch + h * j as f64);
    }
    bp.push(r_box);
    bp
}

/// Cox–de Boor recursion for the order-`order` B-spline `i` on `knots`.
/// The last nonempty interval is closed on the right.
pub fn cox_de_boor(knots: &[f64], i: usize, order: usize, r: f64) -> f64 {
    if order == 1 {
        let (a, b) = (knots[i], knots[i + 1]);
        let last = *knots.last().unwrap();
        let closes_right = b == last && a < b;
        return if (a <= r && r < b) || (closes_right && r == last) { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + order - 1] - knots[i];
    if d1 > 0.0 {
        v += (r - knots[i]) / d1 * cox_de_boor(knots, i, order - 1, r);
    }
    let d2 = knots[i + order] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + order] - r) / d2 * cox_de_boor(knots, i + 1, order - 1, r);
    }
    v
}

/// Value of the `i`-th B-spline of the sequence at `r`.
pub fn bspline_eval(seq: &KnotSequence, i: usize, r: f64) -> Result<f64> {
    let n = seq.n_splines();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    seq.check_radius(r)?;
    Ok(cox_de_boor(seq.knots(), i, seq.order(), r))
}

/// Radial operators with a Galerkin matrix over the retained basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RadialOperator {
    Overlap,
    /// −½ d²/dr² + l(l+1)/(2r²), in the integrated-by-parts form.
    Kinetic(u32),
    /// r^(−p), p ∈ {1, 2, 3}.
    InversePower(u32),
    /// Symmetric part of (1/r)·p², p² = −d²/dr² + l(l+1)/r².
    InvRKinetic(u32),
}

impl RadialOperator {
    /// Entries of r⁻³ involve ∫ B₁²/r³, which diverges logarithmically for the
    /// first retained spline; the assembled value is fixed by the basis.
    pub fn basis_regularized(&self) -> bool {
        matches!(self, RadialOperator::InversePower(p) if *p >= 3)
    }
}

/// Symmetric banded matrix over the retained basis, stored by diagonal:
/// `band[d * dim + i] = A[i][i + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    half_bandwidth: usize,
    band: Vec<f64>,
    basis_regularized: bool,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize, half_bandwidth: usize) -> Self {
        Self {
            dim,
            half_bandwidth,
            band: vec![0.0; dim * (half_bandwidth + 1)],
            basis_regularized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// True when some entries depend on the basis near the origin rather
    /// than converging to a continuum value.
    pub fn basis_regularized(&self) -> bool {
        self.basis_regularized
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let d = j - i;
        if d > self.half_bandwidth || j >= self.dim {
            0.0
        } else {
            self.band[d * self.dim + i]
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i <= j);
        let d = j - i;
        self.band[d * self.dim + i] += v;
    }

    /// `self + factor · other`.
    pub fn add_scaled(&mut self, other: &OperatorMatrix, factor: f64) -> Result<()> {
        if self.dim != other.dim || self.half_bandwidth != other.half_bandwidth {
            return Err(config("operator matrices have different shapes"));
        }
        for (a, b) in self.band.iter_mut().zip(&other.band) {
            *a += factor * b;
        }
        self.basis_regularized |= other.basis_regularized && factor != 0.0;
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for d in 0..=self.half_bandwidth {
            for i in 0..self.dim.saturating_sub(d) {
                let a = self.band[d * self.dim + i];
                y[i] += a * x[i + d];
                if d > 0 {
                    y[i + d] += a * x[i];
                }
            }
        }
        y
    }

    /// xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.dim as u64).to_le_bytes())?;
        out.write_all(&(self.half_bandwidth as u64).to_le_bytes())?;
        for d in 0..=self.half_bandwidth {
            for i in 0..self.dim.saturating_sub(d) {
                out.write_all(&self.band[d * self.dim + i].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let dim = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let half_bandwidth = u64::from_le_bytes(word) as usize;
        let mut m = Self::zeros(dim, half_bandwidth);
        for d in 0..=half_bandwidth {
            for i in 0..dim.saturating_sub(d) {
                input.read_exact(&mut word)?;
                m.band[d * dim + i] = f64::from_le_bytes(word);
            }
        }
        Ok(m)
    }

    /// Upper-band entries as `row,col,value` lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "row,col,value")?;
        for i in 0..self.dim {
            for j in i..(i + self.half_bandwidth + 1).min(self.dim) {
                writeln!(out, "{i},{j},{:e}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

/// Gauss–Legendre points per knot interval used by [`assemble`].
pub fn quadrature_points(order: usize) -> usize {
    order + 2
}

/// Galerkin matrix ⟨B_i | op | B_j⟩ over the retained basis.
pub fn assemble(op: RadialOperator, seq: &KnotSequence) -> Result<OperatorMatrix> {
    if let RadialOperator::InversePower(p) = op {
        if !(1..=3).contains(&p) {
            return Err(domain(format!("inverse power {p} not in 1..=3")));
        }
    }
    let k = seq.order();
    let n = seq.n_splines();
    let rule = GaussLegendre::new(quadrature_points(k));
    let knots = seq.knots();

    // Value and derivative at the origin, needed by the boundary term of
    // the (1/r)p² form.
    let origin = seq.basis_derivatives(k - 1, 0.0, 1);

    let spans: Vec<usize> = (k - 1..n).filter(|&mu| knots[mu + 1] > knots[mu]).collect();
    let blocks: Vec<(usize, Vec<f64>)> = spans
        .par_iter()
        .map(|&mu| {
            let mut local = vec![0.0; k * k];
            for (r, w) in rule.mapped(knots[mu], knots[mu + 1]) {
                let b = seq.basis_derivatives(mu, r, 2);
                for a in 0..k {
                    for c in 0..k {
                        local[a * k + c] += w * integrand(op, r, &b[a], &b[c]);
                    }
                }
            }
            if let RadialOperator::InvRKinetic(_) = op {
                if mu == k - 1 {
                    for a in 0..k {
                        for c in 0..k {
                            local[a * k + c] += origin[a][1] * origin[c][1];
                        }
                    }
                }
                // Symmetric part.
                for a in 0..k {
                    for c in a + 1..k {
                        let s = 0.5 * (local[a * k + c] + local[c * k + a]);
                        local[a * k + c] = s;
                        local[c * k + a] = s;
                    }
                }
            }
            (mu, local)
        })
        .collect();

    let dim = n - 2;
    let mut m = OperatorMatrix::zeros(dim, k - 1);
    m.basis_regularized = op.basis_regularized();
    for (mu, local) in blocks {
        let first = mu + 1 - k;
        for a in 0..k {
            for c in a..k {
                let (gi, gj) = (first + a, first + c);
                if gi == 0 || gj == 0 || gi == n - 1 || gj == n - 1 {
                    continue;
                }
                m.add(gi - 1, gj - 1, local[a * k + c]);
            }
        }
    }
    Ok(m)
}

/// Integrand of the bilinear form for one pair of splines (value, first and
/// second derivative each).
fn integrand(op: RadialOperator, r: f64, f: &[f64; 3], g: &[f64; 3]) -> f64 {
    match op {
        RadialOperator::Overlap => f[0] * g[0],
        RadialOperator::Kinetic(l) => {
            let ll = f64::from(l * (l + 1));
            0.5 * f[1] * g[1] + 0.5 * ll * f[0] * g[0] / (r * r)
        }
        RadialOperator::InversePower(p) => f[0] * g[0] / r.powi(p as i32),
        RadialOperator::InvRKinetic(l) => {
            // ⟨f | r⁻¹(−d²/dr² + l(l+1)/r²) | g⟩ after one integration by
            // parts; the origin boundary term is added separately.
            let ll = f64::from(l * (l + 1));
            (f[1] / r - f[0] / (r * r)) * g[1] + ll * f[0] * g[0] / (r * r * r)
        }
    }
}

/// One eigenpair of H c = E S c, with cᵀ S c = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Inverse-iteration sweeps used to polish each dense eigenpair against the
/// banded matrices.
const REFINE_SWEEPS: usize = 3;

/// Lowest `n_states` eigenpairs of H c = E S c in ascending order.
///
/// S = L Lᵀ by Cholesky, the reduced symmetric problem L⁻¹ H L⁻ᵀ is solved
/// densely (Householder tridiagonalization plus implicit-shift QR), and each
/// requested pair is then polished by shifted inverse iteration with
/// Rayleigh-quotient shifts evaluated on the banded matrices.
pub fn solve(h: &OperatorMatrix, s: &OperatorMatrix, n_states: usize) -> Result<Vec<Eigenpair>> {
    if h.dim != s.dim {
        return Err(config("H and S dimensions differ"));
    }
    let dim = h.dim;
    if n_states > dim {
        return Err(config(format!("{n_states} states requested from a basis of {dim}")));
    }
    let s_dense = s.to_dense();
    let h_dense = h.to_dense();
    let chol = nalgebra::Cholesky::new(s_dense.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&h_dense)
        .ok_or_else(|| Error::Solver("triangular solve failed".into()))?;
    let a = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Solver("triangular solve failed".into()))?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let lt = l.transpose();
    let mut pairs = Vec::with_capacity(n_states);
    for &idx in order.iter().take(n_states) {
        let y = eig.eigenvectors.column(idx).into_owned();
        let c = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Solver("back substitution failed".into()))?;
        let mut vector: Vec<f64> = c.iter().copied().collect();
        let mut value = eig.eigenvalues[idx];
        refine(&h_dense, &s_dense, h, s, &mut value, &mut vector);
        normalize(s, &mut vector);
        value = h.quadratic_form(&vector);
        pairs.push(Eigenpair { value, vector });
    }
    Ok(pairs)
}

fn refine(
    h_dense: &DMatrix<f64>,
    s_dense: &DMatrix<f64>,
    h: &OperatorMatrix,
    s: &OperatorMatrix,
    value: &mut f64,
    vector: &mut Vec<f64>,
) {
    for _ in 0..REFINE_SWEEPS {
        let shift = *value;
        let shifted = h_dense - s_dense * shift;
        let rhs = DVector::from_vec(s.matvec(vector));
        let Some(x) = shifted.lu().solve(&rhs) else {
            // Shift landed exactly on an eigenvalue.
            return;
        };
        let mut next: Vec<f64> = x.iter().copied().collect();
        if !next.iter().all(|v| v.is_finite()) {
            return;
        }
        normalize(s, &mut next);
        let rq = h.quadratic_form(&next);
        *vector = next;
        *value = rq;
    }
}

/// Scale to cᵀ S c = 1 with a deterministic sign: the largest-magnitude
/// component is positive.
fn normalize(s: &OperatorMatrix, c: &mut [f64]) {
    let norm = s.quadratic_form(c).sqrt();
    let pivot = c
        .iter()
        .copied()
        .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
    let scale = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
    c.iter_mut().for_each(|v| *v *= scale);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn linear_breakpoints_follow_counting_identity() {
        let seq = build_knots(&BasisSpec::linear(4, 7, 1.0)).unwrap();
        assert_eq!(seq.breakpoints(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(seq.knots().len(), seq.n_splines() + seq.order());
        assert_eq!(seq.n_splines(), 7);
        let seq = build_knots(&BasisSpec::linear(4, 6, 1.0)).unwrap();
        assert_eq!(seq.breakpoints().len(), 4);
        assert_eq!(seq.retained(), 4);
    }

    #[test]
    fn geometric_breakpoints() {
        let spec = BasisSpec {
            order: 4,
            n_splines: 7,
            r_box: 1.0,
            scheme: KnotScheme::Geometric { r_first: 0.1, ratio: 2.0 },
        };
        let seq = build_knots(&spec).unwrap();
        assert_eq!(seq.breakpoints(), &[0.0, 0.1, 0.2, 0.4, 1.0]);
        let bad = BasisSpec { n_splines: 9, ..spec };
        assert!(build_knots(&bad).is_err());
        let bad = BasisSpec { scheme: KnotScheme::Geometric { r_first: 0.1, ratio: 1.0 }, ..spec };
        assert!(build_knots(&bad).is_err());
    }

    #[test]
    fn large_basis_breakpoint_count() {
        let spec = BasisSpec::geometric_then_linear(10, 1200, 400.0, 1e-3);
        let seq = build_knots(&spec).unwrap();
        assert_eq!(seq.breakpoints().len(), 1192);
        assert!(seq.breakpoints()[1] < 1.0);
        assert_eq!(*seq.breakpoints().last().unwrap(), 400.0);
        assert!(seq.breakpoints().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn desk_grid_spacing_is_continuous_at_switch() {
        let seq = build_knots(&BasisSpec::desk()).unwrap();
        let bp = seq.breakpoints();
        let i = bp.iter().position(|&b| b == 10.0).unwrap();
        let before = bp[i] - bp[i - 1];
        let after = bp[i + 1] - bp[i];
        assert!((before / after - 1.0).abs() < 0.1, "{before} vs {after}");
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(build_knots(&BasisSpec::linear(3, 10, 1.0)).is_err());
        assert!(build_knots(&BasisSpec::linear(6, 5, 1.0)).is_err());
        assert!(build_knots(&BasisSpec::linear(4, 10, -1.0)).is_err());
        assert!(build_knots(&BasisSpec::geometric_then_linear(8, 300, 100.0, 20.0)).is_err());
    }

    #[test]
    fn order_one_splines_are_indicators() {
        let knots = [0.0, 0.5, 1.5, 2.0];
        assert_eq!(cox_de_boor(&knots, 1, 1, 0.7), 1.0);
        assert_eq!(cox_de_boor(&knots, 1, 1, 0.2), 0.0);
        assert_eq!(cox_de_boor(&knots, 0, 1, 0.0), 1.0);
        assert_eq!(cox_de_boor(&knots, 2, 1, 2.0), 1.0);
    }

    #[test]
    fn local_support_and_index_range() {
        let seq = build_knots(&BasisSpec::linear(4, 10, 1.0)).unwrap();
        // Spline 0 lives on [t0, t4) = [0, 1/7).
        assert_eq!(bspline_eval(&seq, 0, 0.5).unwrap(), 0.0);
        assert!(bspline_eval(&seq, 0, 0.01).unwrap() > 0.0);
        assert!(matches!(bspline_eval(&seq, 10, 0.5), Err(Error::IndexOutOfRange { .. })));
        assert!(bspline_eval(&seq, 3, 1.5).is_err());
    }

    #[test]
    fn span_algorithm_matches_recursion() {
        let seq = build_knots(&BasisSpec::desk()).unwrap();
        for &r in &[0.0, 1e-4, 0.37, 5.0, 10.0, 55.5, 100.0] {
            let all = seq.eval_all(r).unwrap();
            for (i, v) in all.iter().enumerate() {
                let direct = bspline_eval(&seq, i, r).unwrap();
                assert!(close(*v, direct, 1e-13), "i={i} r={r}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let seq = build_knots(&BasisSpec::linear(6, 12, 2.0)).unwrap();
        let r = 0.713;
        let h = 1e-5;
        let span = seq.span(r);
        let d = seq.basis_derivatives(span, r, 2);
        let plus = seq.basis_derivatives(span, r + h, 0);
        let minus = seq.basis_derivatives(span, r - h, 0);
        for j in 0..6 {
            let fd1 = (plus[j][0] - minus[j][0]) / (2.0 * h);
            let fd2 = (plus[j][0] - 2.0 * d[j][0] + minus[j][0]) / (h * h);
            assert!(close(d[j][1], fd1, 1e-7), "first derivative {j}");
            assert!(close(d[j][2], fd2, 1e-3), "second derivative {j}");
        }
    }

    #[test]
    fn matrices_symmetric_and_overlap_definite() {
        let seq = build_knots(&BasisSpec::geometric_then_linear(6, 40, 20.0, 1e-2)).unwrap();
        for op in [
            RadialOperator::Overlap,
            RadialOperator::Kinetic(1),
            RadialOperator::InversePower(1),
            RadialOperator::InversePower(3),
            RadialOperator::InvRKinetic(0),
        ] {
            let m = assemble(op, &seq).unwrap();
            let d = m.to_dense();
            let scale = d.amax();
            assert!((&d - d.transpose()).amax() <= 1e-13 * scale);
            assert_eq!(m.dim(), seq.retained());
            assert_eq!(m.half_bandwidth(), seq.order() - 1);
        }
        let s = assemble(RadialOperator::Overlap, &seq).unwrap().to_dense();
        assert!(nalgebra::Cholesky::new(s).is_some());
        assert!(assemble(RadialOperator::InversePower(3), &seq).unwrap().basis_regularized());
        assert!(!assemble(RadialOperator::InversePower(1), &seq).unwrap().basis_regularized());
        assert!(assemble(RadialOperator::InversePower(4), &seq).is_err());
    }

    #[test]
    fn solve_diagonal() {
        let mut h = OperatorMatrix::zeros(2, 1);
        h.add(0, 0, 4.0);
        h.add(1, 1, 2.0);
        let mut s = OperatorMatrix::zeros(2, 1);
        s.add(0, 0, 1.0);
        s.add(1, 1, 1.0);
        let pairs = solve(&h, &s, 2).unwrap();
        assert!(close(pairs[0].value, 2.0, 1e-14));
        assert!(close(pairs[1].value, 4.0, 1e-14));
        assert!(close(pairs[0].vector[1].abs(), 1.0, 1e-14));
    }

    #[test]
    fn solve_rejects_indefinite_overlap() {
        let mut s = OperatorMatrix::zeros(2, 1);
        s.add(0, 0, 1.0);
        s.add(0, 1, 2.0);
        s.add(1, 1, 1.0);
        let h = s.clone();
        assert!(matches!(solve(&h, &s, 1), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn banded_dump_round_trip() {
        let seq = build_knots(&BasisSpec::linear(4, 8, 1.0)).unwrap();
        let m = assemble(RadialOperator::Kinetic(0), &seq).unwrap();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        let n = m.dim();
        let w = m.half_bandwidth();
        let entries: usize = (0..=w).map(|d| n - d).sum();
        assert_eq!(buf.len(), 16 + 8 * entries);
        assert_eq!(&buf[0..8], &(n as u64).to_le_bytes());
        let back = OperatorMatrix::read_binary(&buf[..]).unwrap();
        assert_eq!(back.to_dense(), m.to_dense());
        let mut csv = Vec::new();
        m.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("row,col,value\n0,0,"));
    }
}
