//! Quantitative fitting of edge-artifact singularity profiles.
//!
//! Undersampled filtered backprojection turns a jump edge into conormal
//! singularities along the sampled lines tangent to (or normal to) the
//! edge. Along such a line the leading profile in the transverse offset
//! `t = p - p0` is one of three models: `pv 1/t` (flat edge normal to a
//! sampled direction), `-(t)_-^{-1/2}` (strictly convex edge), or
//! `log|t|` (corner). This module fits a crosscut against those models,
//! extracting the coefficient, the center, and a relative residual, and
//! checks the up/down sign pattern of the corner-line peaks.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::phantom::{PhantomKind, PhantomSpec};

/// The three leading singularity profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityKind {
    /// `pv 1/t`: flat edge normal to a sampled direction.
    PvRecip,
    /// `(t)_-^{-1/2}` (supported on `t < 0`): strictly convex edge.
    InvSqrtMinus,
    /// `log|t|`: corner.
    LogAbs,
}

impl SingularityKind {
    pub fn name(&self) -> &'static str {
        match self {
            SingularityKind::PvRecip => "pv_recip",
            SingularityKind::InvSqrtMinus => "inv_sqrt_minus",
            SingularityKind::LogAbs => "log_abs",
        }
    }

    /// The pure model profile at transverse offset `t != 0`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SingularityKind::PvRecip => 1.0 / t,
            SingularityKind::InvSqrtMinus => {
                if t < 0.0 {
                    1.0 / (-t).sqrt()
                } else {
                    0.0
                }
            }
            SingularityKind::LogAbs => t.abs().ln(),
        }
    }
}

/// A fitted singular profile `c * model(t - p0)` plus affine background.
#[derive(Debug, Clone, Copy)]
pub struct SingularityModel {
    pub kind: SingularityKind,
    pub c: f64,
    pub p0: f64,
    /// Fit window half-width around `p0`.
    pub window: f64,
    /// Root-mean-square misfit relative to the affine-detrended data on
    /// the window minus the 2-cell core exclusion.
    pub residual: f64,
}

impl SingularityModel {
    /// Text row matching the header `kind,c,p0,residual,window`.
    pub fn to_table_row(&self) -> String {
        format!("{},{},{},{},{}", self.kind.name(), self.c, self.p0, self.residual, self.window)
    }
}

pub const FIT_TABLE_HEADER: &str = "kind,c,p0,residual,window";

/// Median absolute spacing of a coordinate series.
fn median_spacing(coords: &[f64]) -> f64 {
    let mut gaps: Vec<f64> = coords.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Solve the 3x3 normal equations of the least-squares design
/// `[model, 1, t]` by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for col in (0..3).rev() {
        let mut v = b[col];
        for k in col + 1..3 {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

/// Least squares of `y ~ c * model(t - p0) + alpha + beta * t` on the
/// window, returning `(c, residual)`; `None` if the sample set is
/// degenerate.
fn fit_at(
    coords: &[f64],
    values: &[f64],
    kind: SingularityKind,
    p0: f64,
    window: f64,
    core: f64,
) -> Option<(f64, f64, usize)> {
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (&t, &y) in coords.iter().zip(values) {
        let d = t - p0;
        if d.abs() <= window && d.abs() >= core {
            rows.push((kind.eval(d), t, y));
        }
    }
    let count = rows.len();
    if count < 4 {
        return None;
    }
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(m, t, y) in &rows {
        let phi = [m, 1.0, t];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += phi[i] * phi[j];
            }
            atb[i] += phi[i] * y;
        }
    }
    let sol = solve3(ata, atb)?;
    // Affine-only fit of the same samples for the residual scale.
    let (mut s1, mut st, mut stt, mut sy, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(_, t, y) in &rows {
        s1 += 1.0;
        st += t;
        stt += t * t;
        sy += y;
        sty += t * y;
    }
    let det = s1 * stt - st * st;
    if det.abs() < 1e-300 {
        return None;
    }
    let beta0 = (s1 * sty - st * sy) / det;
    let alpha0 = (sy - beta0 * st) / s1;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(m, t, y) in &rows {
        num += (y - sol[0] * m - sol[1] - sol[2] * t).powi(2);
        den += (y - alpha0 - beta0 * t).powi(2);
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Some((sol[0], residual, count))
}

/// Fit a singular profile to a 1-D crosscut. The center is refined by
/// scanning within two grid cells of `p0_guess`; samples closer than
/// two cells to the center are excluded (the grid regularizes the
/// singular core), and the fit demands at least 20 usable samples.
/// A relative residual above 0.5 rejects the fit.
pub fn fit_singularity(
    coords: &[f64],
    values: &[f64],
    kind: SingularityKind,
    p0_guess: f64,
    window: f64,
) -> Result<SingularityModel> {
    if coords.len() != values.len() || coords.len() < 8 {
        return Err(Error::bad_argument("crosscut needs matching coordinate/value series"));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::bad_argument("fit window must be positive"));
    }
    let cell = median_spacing(coords);
    let core = 2.0 * cell;
    if window <= core {
        return Err(Error::bad_argument("fit window must exceed the 2-cell core exclusion"));
    }
    let mut best: Option<(f64, f64, f64, usize)> = None;
    let scan = 40;
    for i in 0..=scan {
        let p0 = p0_guess - 2.0 * cell + (4.0 * cell) * i as f64 / scan as f64;
        if let Some((c, residual, count)) = fit_at(coords, values, kind, p0, window, core) {
            if best.map(|(_, r, _, _)| residual < r).unwrap_or(true) {
                best = Some((c, residual, p0, count));
            }
        }
    }
    let (c, residual, p0, count) =
        best.ok_or_else(|| Error::bad_argument("no usable samples in the fit window"))?;
    if count < 20 {
        return Err(Error::bad_argument(format!(
            "fit window holds {count} samples; at least 20 required"
        )));
    }
    if residual > 0.5 {
        return Err(Error::contract(format!(
            "{} fit rejected: relative residual {residual:.3} exceeds 0.5",
            kind.name()
        )));
    }
    Ok(SingularityModel { kind, c, p0, window, residual })
}

/// One predicted corner-line crossing on the crosscut.
#[derive(Debug, Clone, Copy)]
pub struct LineCrossing {
    /// Crossing coordinate along the horizontal crosscut.
    pub x: f64,
    /// Sampled direction index `j` of the line (angle `j pi / m`).
    pub j: usize,
    /// True when the line enters the open sector where the phantom is
    /// positive: its `-log` singularity peaks upward.
    pub expected_up: bool,
    /// Distance to the nearest detected extremum, if any.
    pub distance: Option<f64>,
    pub matched: bool,
    pub sign_ok: bool,
}

/// Outcome of matching corner-line crossings against crosscut extrema.
#[derive(Debug, Clone)]
pub struct CornerLineReport {
    pub crossings: Vec<LineCrossing>,
    /// Fraction of predicted crossings with an extremum within 2 cells.
    pub matched_fraction: f64,
    /// Fraction of matched crossings whose peak direction agrees with
    /// the sector sign rule.
    pub sign_fraction: f64,
}

/// Check the log-type peaks along the horizontal line `y = y0` of a
/// corner-phantom reconstruction with `m` sampled directions: each line
/// through the corner at angle `j pi / m` crosses the crosscut once,
/// and the peak there points down (`+log`) unless the line enters the
/// open sector where the phantom is positive (`-log`, pointing up).
/// Extrema count when they exceed `peak_threshold` times the image
/// maximum; a crosscut through the corner itself is degenerate.
pub fn corner_line_check(
    recon: &ImageGrid,
    spec: &PhantomSpec,
    m: usize,
    y0: f64,
    peak_threshold: f64,
) -> Result<CornerLineReport> {
    if spec.kind != PhantomKind::Corner {
        return Err(Error::bad_argument("corner line check needs a corner phantom"));
    }
    if m < 2 {
        return Err(Error::bad_argument("need at least 2 directions"));
    }
    let cell = recon.cell_size();
    let (cx, cy) = (spec.center[0], spec.center[1]);
    if (y0 - cy).abs() < 2.0 * cell {
        return Err(Error::bad_argument(
            "crosscut through the corner is degenerate: every line meets it there",
        ));
    }
    let l = recon.half_extent();
    if y0.abs() > l - 2.0 * cell {
        return Err(Error::bad_argument("crosscut lies outside the grid"));
    }
    // Sample the crosscut at 4 points per cell.
    let x_lo = -l + 2.0 * cell;
    let x_hi = l - 2.0 * cell;
    let count = (4.0 * (x_hi - x_lo) / cell).round() as usize;
    let step = (x_hi - x_lo) / count as f64;
    let series: Vec<f64> = (0..=count)
        .map(|i| recon.sample_cubic(x_lo + i as f64 * step, y0))
        .collect();
    // Detected extrema above the threshold, as (coordinate, is_max).
    let floor = peak_threshold * recon.linf_norm();
    let mut extrema: Vec<(f64, bool)> = Vec::new();
    for i in 1..series.len() - 1 {
        let v = series[i];
        if v.abs() < floor {
            continue;
        }
        if v > series[i - 1] && v >= series[i + 1] {
            extrema.push((x_lo + i as f64 * step, true));
        } else if v < series[i - 1] && v <= series[i + 1] {
            extrema.push((x_lo + i as f64 * step, false));
        }
    }
    let mut crossings = Vec::new();
    for j in 0..m {
        let phi = j as f64 * PI / m as f64;
        let (sin, cos) = phi.sin_cos();
        if sin.abs() < 1e-12 {
            // Line parallel to the crosscut: no transversal crossing.
            continue;
        }
        let x = cx + (y0 - cy) * cos / sin;
        if !(x_lo..=x_hi).contains(&x) {
            continue;
        }
        // The line enters the open positive sector iff its direction
        // (either orientation), rotated to the corner frame, has both
        // components positive.
        let enters = [1.0f64, -1.0].iter().any(|&sgn| {
            let (dx, dy) = (sgn * cos, sgn * sin);
            let u = dx * spec.angle.cos() + dy * spec.angle.sin();
            let v = -dx * spec.angle.sin() + dy * spec.angle.cos();
            u > 1e-12 && v > 1e-12
        });
        let nearest = extrema
            .iter()
            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
            .copied();
        let distance = nearest.map(|(e, _)| (e - x).abs());
        let matched = distance.map(|d| d <= 2.0 * cell).unwrap_or(false);
        let sign_ok = matched && nearest.map(|(_, up)| up == enters).unwrap_or(false);
        crossings.push(LineCrossing { x, j, expected_up: enters, distance, matched, sign_ok });
    }
    let total = crossings.len().max(1) as f64;
    let matched = crossings.iter().filter(|c| c.matched).count() as f64;
    let signs = crossings.iter().filter(|c| c.sign_ok).count() as f64;
    Ok(CornerLineReport {
        matched_fraction: matched / total,
        sign_fraction: if matched > 0.0 { signs / matched } else { 0.0 },
        crossings,
    })
}
