//! Forward projection: sinograms of rasters, direction weights, and the
//! Fourier-slice consistency check.
//!
//! Lines are parameterized by omega(phi) = (cos phi, sin phi) and signed
//! offset p; Rf(phi, p) integrates f over {x . omega = p}. Angles are stored
//! on [0, pi) only; the antipodal half follows from evenness
//! Rf(phi + pi, -p) = Rf(phi, p).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, ImageGrid, Metrics};

const PI: f64 = std::f64::consts::PI;

/// Sampled Radon data: m angles phi_j = j pi/m times a pixel-centered p-grid
/// on [-R, R], with per-angle direction weights psi(omega_j).
#[derive(Debug, Clone)]
pub struct Sinogram {
    m: usize,
    p_count: usize,
    p_half_extent: f64,
    values: Vec<f64>,
    psi_mask: Vec<f64>,
}

impl Sinogram {
    pub fn new(
        m: usize,
        p_count: usize,
        p_half_extent: f64,
        values: Vec<f64>,
        psi_mask: Vec<f64>,
    ) -> Result<Self> {
        if m < 1 {
            return Err(Error::bad_argument("sinogram needs at least one angle"));
        }
        if p_count < 2 {
            return Err(Error::bad_argument("sinogram needs at least two p samples"));
        }
        if !(p_half_extent > 0.0 && p_half_extent.is_finite()) {
            return Err(Error::bad_argument("p half extent must be positive and finite"));
        }
        if values.len() != m * p_count {
            return Err(Error::bad_argument(format!(
                "expected {} sinogram values, got {}",
                m * p_count,
                values.len()
            )));
        }
        if psi_mask.len() != m {
            return Err(Error::bad_argument(format!(
                "expected {m} mask entries, got {}",
                psi_mask.len()
            )));
        }
        if !values.iter().chain(&psi_mask).all(|v| v.is_finite()) {
            return Err(Error::bad_argument("sinogram values must all be finite"));
        }
        if psi_mask.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::bad_argument("mask entries must lie in [0, 1]"));
        }
        Ok(Sinogram { m, p_count, p_half_extent, values, psi_mask })
    }

    pub fn zeros(m: usize, p_count: usize, p_half_extent: f64) -> Result<Self> {
        Sinogram::new(m, p_count, p_half_extent, vec![0.0; m * p_count], vec![1.0; m])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p_count(&self) -> usize {
        self.p_count
    }

    pub fn p_half_extent(&self) -> f64 {
        self.p_half_extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn psi_mask(&self) -> &[f64] {
        &self.psi_mask
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * PI / self.m as f64
    }

    pub fn p_step(&self) -> f64 {
        2.0 * self.p_half_extent / self.p_count as f64
    }

    pub fn p_coord(&self, i: usize) -> f64 {
        -self.p_half_extent + (i as f64 + 0.5) * self.p_step()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.p_count..(j + 1) * self.p_count]
    }

    /// Rebuild with new rows, keeping shape and mask.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Sinogram::new(self.m, self.p_count, self.p_half_extent, values, self.psi_mask.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayInterp {
    Linear,
    Cubic,
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionConfig {
    pub m: usize,
    pub p_count: usize,
    pub p_half_extent: f64,
    pub ray_interp: RayInterp,
}

impl ProjectionConfig {
    /// Default p resolution: next power of two >= 2n keeps p oversampled
    /// relative to the image raster.
    pub fn default_p_count(n: usize) -> usize {
        (2 * n).next_power_of_two()
    }
}

/// p-axis Nyquist predicate: sample spacing below pi/B for classical band
/// limit B.
pub fn p_nyquist_ok(cfg: &ProjectionConfig, band_limit: f64) -> bool {
    let dp = 2.0 * cfg.p_half_extent / cfg.p_count as f64;
    band_limit <= 0.0 || dp < PI / band_limit
}

/// Quadrature of f over the line {x . omega(phi) = p}, midpoint rule at step
/// half a cell, restricted to the chord of B(0, r).
pub fn line_integral(img: &ImageGrid, phi: f64, p: f64, r: f64, ray_interp: RayInterp) -> f64 {
    if p.abs() >= r {
        return 0.0;
    }
    let half_chord = (r * r - p * p).sqrt();
    let step_goal = img.cell_size() / 2.0;
    let steps = ((2.0 * half_chord / step_goal).ceil() as usize).max(1);
    let step = 2.0 * half_chord / steps as f64;
    let (c, s) = (phi.cos(), phi.sin());
    // omega-perp = (-sin, cos) spans the line.
    let base1 = p * c;
    let base2 = p * s;
    let mut acc = 0.0;
    for k in 0..steps {
        let t = -half_chord + (k as f64 + 0.5) * step;
        let x1 = base1 - t * s;
        let x2 = base2 + t * c;
        acc += match ray_interp {
            RayInterp::Linear => img.sample_linear(x1, x2),
            RayInterp::Cubic => img.sample_cubic(x1, x2),
        };
    }
    acc * step
}

/// Forward projection. Errors if the image carries mass outside B(0, R)
/// beyond a 1e-6 relative tolerance.
pub fn radon(img: &ImageGrid, cfg: &ProjectionConfig) -> Result<Sinogram> {
    if cfg.m < 1 || cfg.p_count < 2 || !(cfg.p_half_extent > 0.0) {
        return Err(Error::bad_argument("projection config must have m >= 1, p_count >= 2, R > 0"));
    }
    let r = cfg.p_half_extent;
    let n = img.n();
    let mut total = 0.0;
    let mut outside = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x1, x2) = img.coord(i, j);
            let a = img.get(i, j).abs();
            total += a;
            if x1 * x1 + x2 * x2 > r * r {
                outside += a;
            }
        }
    }
    if total > 0.0 && outside > 1e-6 * total {
        return Err(Error::contract(format!(
            "image support escapes B(0, {r}): relative mass outside = {:.3e}",
            outside / total
        )));
    }
    let template = Sinogram::zeros(cfg.m, cfg.p_count, r)?;
    let rows: Vec<Vec<f64>> = (0..cfg.m)
        .into_par_iter()
        .map(|j| {
            let phi = template.angle(j);
            (0..cfg.p_count)
                .map(|i| line_integral(img, phi, template.p_coord(i), r, cfg.ray_interp))
                .collect()
        })
        .collect();
    template.with_values(rows.concat())
}

/// Even direction weight psi on the circle. Closed forms are evaluated on
/// directions mod pi, which makes them even by construction; tables cover the
/// full circle and are checked for evenness.
#[derive(Debug, Clone)]
pub enum PsiSpec {
    One,
    Zero,
    /// 1 on directions with (phi mod pi) in [lo, hi), 0 elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// cos^2-tapered window on directions with (phi mod pi) in [lo, hi].
    RaisedCosine { lo: f64, hi: f64 },
    /// Samples at the 2m full-circle angles phi_j = j pi/m, j = 0..2m-1.
    Table(Vec<f64>),
}

impl PsiSpec {
    pub fn check_even(&self) -> Result<()> {
        match self {
            PsiSpec::Table(v) => {
                if v.len() < 2 || v.len() % 2 != 0 {
                    return Err(Error::bad_argument(
                        "direction weight table must have even length 2m",
                    ));
                }
                let m = v.len() / 2;
                for j in 0..m {
                    if (v[j] - v[j + m]).abs() > 1e-12 {
                        return Err(Error::contract(format!(
                            "direction weight is not even: entry {j} = {} but entry {} = {}",
                            v[j],
                            j + m,
                            v[j + m]
                        )));
                    }
                }
                Ok(())
            }
            PsiSpec::Indicator { lo, hi } | PsiSpec::RaisedCosine { lo, hi } => {
                if !(lo < hi && *lo >= 0.0 && *hi <= PI) {
                    return Err(Error::bad_argument(
                        "direction window must satisfy 0 <= lo < hi <= pi",
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, phi: f64) -> f64 {
        match self {
            PsiSpec::One => 1.0,
            PsiSpec::Zero => 0.0,
            PsiSpec::Indicator { lo, hi } => {
                let d = phi.rem_euclid(PI);
                if d >= *lo && d < *hi {
                    1.0
                } else {
                    0.0
                }
            }
            PsiSpec::RaisedCosine { lo, hi } => {
                let d = phi.rem_euclid(PI);
                if d < *lo || d > *hi {
                    0.0
                } else {
                    let mid = 0.5 * (lo + hi);
                    let t = (d - mid) / (hi - lo);
                    (PI * t).cos().powi(2)
                }
            }
            PsiSpec::Table(v) => {
                let len = v.len() as f64;
                let idx = (phi.rem_euclid(2.0 * PI) / (2.0 * PI) * len).round() as usize;
                v[idx % v.len()]
            }
        }
    }
}

/// Multiply rows by psi(omega_j) and record the weights in the mask.
pub fn apply_psi(sino: &Sinogram, psi: &PsiSpec) -> Result<Sinogram> {
    psi.check_even()?;
    let mut values = Vec::with_capacity(sino.values.len());
    let mut mask = Vec::with_capacity(sino.m);
    for j in 0..sino.m {
        let w = psi.eval(sino.angle(j));
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::contract(format!(
                "direction weight {w} at angle index {j} outside [0, 1]"
            )));
        }
        mask.push(w);
        values.extend(sino.row(j).iter().map(|&v| w * v));
    }
    Sinogram::new(sino.m, sino.p_count, sino.p_half_extent, values, mask)
}

/// Compares the 1-D spectrum of each projection against the matching radial
/// slice of the 2-D image spectrum; both sides approximate the continuous
/// transform, so lattice sums carry their sample-spacing factors.
pub fn fourier_slice_check(img: &ImageGrid, cfg: &ProjectionConfig) -> Result<Metrics> {
    let sino = radon(img, cfg)?;
    let spec = grid::fft2(img)?;
    let dx2 = img.cell_size() * img.cell_size();
    let dp = sino.p_step();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut max_diff = 0.0f64;
    let mut max_ref = 0.0f64;
    for j in 0..sino.m() {
        let phi = sino.angle(j);
        let (c, s) = (phi.cos(), phi.sin());
        let row: Vec<num_complex::Complex64> = sino
            .row(j)
            .iter()
            .map(|&v| num_complex::Complex64::new(v, 0.0))
            .collect();
        let row_hat = grid::centered_dft_1d(&row, sino.p_half_extent())?;
        for (k, &g) in row_hat.iter().enumerate() {
            let xi = PI / sino.p_half_extent() * (k as f64 - cfg.p_count as f64 / 2.0);
            if let Some(f2) = spec.sample_cubic(xi * c, xi * s) {
                let lhs = g * dp;
                let rhs = f2 * dx2;
                num += (lhs - rhs).norm_sqr();
                den += rhs.norm_sqr();
                max_diff = max_diff.max((lhs - rhs).norm());
                max_ref = max_ref.max(rhs.norm());
            }
        }
    }
    let l2_rel = if num == 0.0 { 0.0 } else { (num / den).sqrt() };
    let linf_rel = if max_diff == 0.0 { 0.0 } else { max_diff / max_ref };
    Ok(Metrics { l2_rel, linf_rel, peak_list: Vec::new() })
}
