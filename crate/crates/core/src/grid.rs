//! Square rasters on [-L,L]^2, their centered spectral transforms, and
//! comparison metrics.
//!
//! Cell (i,j) of an n x n grid is centered at
//! x = (-L + (j+1/2)*2L/n, -L + (i+1/2)*2L/n); rows index x2, columns x1.
//! The spectral lattice is xi in (pi/L)*{-n/2..n/2-1}^2.
//!
//! Transform convention: forward carries e^{-i x.xi} with no normalization,
//! the inverse carries 1/n^2. With pixel-centered x and the centered xi
//! lattice this is a phase-twiddled FFT; `ifft2(fft2(img)) = img` to 1e-12.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub fn is_power_of_two(n: usize) -> bool {
    n >= 2 && n & (n - 1) == 0
}

fn check_shape(n: usize, half_extent: f64) -> Result<()> {
    if !is_power_of_two(n) {
        return Err(Error::bad_argument(format!(
            "grid size {n} must be a power of two >= 2"
        )));
    }
    if !(half_extent > 0.0 && half_extent.is_finite()) {
        return Err(Error::bad_argument(format!(
            "half extent {half_extent} must be positive and finite"
        )));
    }
    Ok(())
}

/// Real raster on [-L,L]^2, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    n: usize,
    half_extent: f64,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(n: usize, half_extent: f64, values: Vec<f64>) -> Result<Self> {
        check_shape(n, half_extent)?;
        if values.len() != n * n {
            return Err(Error::bad_argument(format!(
                "expected {} values for an {n} x {n} grid, got {}",
                n * n,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::bad_argument("grid values must all be finite"));
        }
        Ok(ImageGrid { n, half_extent, values })
    }

    pub fn zeros(n: usize, half_extent: f64) -> Result<Self> {
        check_shape(n, half_extent)?;
        Ok(ImageGrid { n, half_extent, values: vec![0.0; n * n] })
    }

    /// Evaluate `f(x1, x2)` at every cell center.
    pub fn from_fn(n: usize, half_extent: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_shape(n, half_extent)?;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x2 = axis_coord(i, n, half_extent);
            for j in 0..n {
                let x1 = axis_coord(j, n, half_extent);
                values.push(f(x1, x2));
            }
        }
        ImageGrid::new(n, half_extent, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Physical width of one cell, 2L/n.
    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn axis_coord(&self, idx: usize) -> f64 {
        axis_coord(idx, self.n, self.half_extent)
    }

    /// Center of cell (i,j): (x1, x2).
    pub fn coord(&self, i: usize, j: usize) -> (f64, f64) {
        (self.axis_coord(j), self.axis_coord(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Cubic (Catmull-Rom) sample at a physical point; zero outside the grid.
    pub fn sample_cubic(&self, x1: f64, x2: f64) -> f64 {
        let n = self.n as isize;
        let cell = self.cell_size();
        // Fractional index: idx = (x + L)/cell - 1/2.
        let u1 = (x1 + self.half_extent) / cell - 0.5;
        let u2 = (x2 + self.half_extent) / cell - 0.5;
        let j0 = u1.floor() as isize;
        let i0 = u2.floor() as isize;
        if j0 < -3 || j0 > n + 1 || i0 < -3 || i0 > n + 1 {
            return 0.0;
        }
        let w1 = catmull_rom_weights(u1 - j0 as f64);
        let w2 = catmull_rom_weights(u2 - i0 as f64);
        let mut acc = 0.0;
        for (di, wi) in w2.iter().enumerate() {
            let i = i0 - 1 + di as isize;
            if *wi == 0.0 || i < 0 || i >= n {
                continue;
            }
            let row = &self.values[i as usize * self.n..(i as usize + 1) * self.n];
            let mut racc = 0.0;
            for (dj, wj) in w1.iter().enumerate() {
                let j = j0 - 1 + dj as isize;
                if j >= 0 && j < n {
                    racc += wj * row[j as usize];
                }
            }
            acc += wi * racc;
        }
        acc
    }

    /// Bilinear sample at a physical point; zero outside the grid.
    pub fn sample_linear(&self, x1: f64, x2: f64) -> f64 {
        let n = self.n as isize;
        let cell = self.cell_size();
        let u1 = (x1 + self.half_extent) / cell - 0.5;
        let u2 = (x2 + self.half_extent) / cell - 0.5;
        let j0 = u1.floor() as isize;
        let i0 = u2.floor() as isize;
        let f1 = u1 - j0 as f64;
        let f2 = u2 - i0 as f64;
        let tap = |i: isize, j: isize| -> f64 {
            if i < 0 || i >= n || j < 0 || j >= n {
                0.0
            } else {
                self.values[i as usize * self.n + j as usize]
            }
        };
        (1.0 - f2) * ((1.0 - f1) * tap(i0, j0) + f1 * tap(i0, j0 + 1))
            + f2 * ((1.0 - f1) * tap(i0 + 1, j0) + f1 * tap(i0 + 1, j0 + 1))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        ImageGrid::new(self.n, self.half_extent, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &ImageGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ImageGrid::new(self.n, self.half_extent, values)
    }

    pub fn check_same_shape(&self, other: &ImageGrid) -> Result<()> {
        if self.n != other.n || self.half_extent != other.half_extent {
            return Err(Error::bad_argument(format!(
                "grid shape mismatch: {} x {} (L={}) vs {} x {} (L={})",
                self.n, self.n, self.half_extent, other.n, other.n, other.half_extent
            )));
        }
        Ok(())
    }

    /// Plain l2 norm of the cell values (no cell-area weight).
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// ||a-b||_2 / ||b||_2 restricted to the disk |x - center| <= radius;
    /// 0/0 is 0.
    pub fn l2_rel_on_disk(&self, other: &ImageGrid, center: [f64; 2], radius: f64) -> Result<f64> {
        self.check_same_shape(other)?;
        let r2 = radius * radius;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.n {
            let x2 = self.axis_coord(i);
            for j in 0..self.n {
                let x1 = self.axis_coord(j);
                let d1 = x1 - center[0];
                let d2 = x2 - center[1];
                if d1 * d1 + d2 * d2 <= r2 {
                    let a = self.get(i, j);
                    let b = other.get(i, j);
                    num += (a - b) * (a - b);
                    den += b * b;
                }
            }
        }
        Ok(rel_or_zero(num.sqrt(), den.sqrt()))
    }

    /// Sum of squared cell values over the disk |x - center| <= radius.
    pub fn energy_in_disk(&self, center: [f64; 2], radius: f64) -> f64 {
        let r2 = radius * radius;
        let mut acc = 0.0;
        for i in 0..self.n {
            let x2 = self.axis_coord(i);
            for j in 0..self.n {
                let x1 = self.axis_coord(j);
                let d1 = x1 - center[0];
                let d2 = x2 - center[1];
                if d1 * d1 + d2 * d2 <= r2 {
                    let v = self.get(i, j);
                    acc += v * v;
                }
            }
        }
        acc
    }
}

fn axis_coord(idx: usize, n: usize, half_extent: f64) -> f64 {
    -half_extent + (idx as f64 + 0.5) * 2.0 * half_extent / n as f64
}

/// Catmull-Rom weights for taps at offsets -1, 0, 1, 2 and fraction u in [0,1).
fn catmull_rom_weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        0.5 * (-u + 2.0 * u2 - u3),
        0.5 * (2.0 - 5.0 * u2 + 3.0 * u3),
        0.5 * (u + 4.0 * u2 - 3.0 * u3),
        0.5 * (-u2 + u3),
    ]
}

/// Complex values on the centered frequency lattice of an n x n grid.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    n: usize,
    half_extent: f64,
    values: Vec<Complex64>,
}

impl SpectralGrid {
    pub fn new(n: usize, half_extent: f64, values: Vec<Complex64>) -> Result<Self> {
        check_shape(n, half_extent)?;
        if values.len() != n * n {
            return Err(Error::bad_argument(format!(
                "expected {} spectral values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(SpectralGrid { n, half_extent, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Lattice frequency of bin (i,j): (xi1, xi2) = (pi/L)*(j - n/2, i - n/2).
    pub fn freq(&self, i: usize, j: usize) -> (f64, f64) {
        let step = std::f64::consts::PI / self.half_extent;
        (
            step * (j as f64 - self.n as f64 / 2.0),
            step * (i as f64 - self.n as f64 / 2.0),
        )
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n + j]
    }

    /// Cubic interpolation of the complex spectrum at an off-lattice
    /// frequency. Returns None when the four-tap stencil leaves the lattice.
    pub fn sample_cubic(&self, xi1: f64, xi2: f64) -> Option<Complex64> {
        let n = self.n as isize;
        let step = std::f64::consts::PI / self.half_extent;
        let u1 = xi1 / step + self.n as f64 / 2.0;
        let u2 = xi2 / step + self.n as f64 / 2.0;
        let j0 = u1.floor() as isize;
        let i0 = u2.floor() as isize;
        if j0 < 1 || j0 > n - 3 || i0 < 1 || i0 > n - 3 {
            return None;
        }
        let w1 = catmull_rom_weights(u1 - j0 as f64);
        let w2 = catmull_rom_weights(u2 - i0 as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for (di, wi) in w2.iter().enumerate() {
            let i = (i0 - 1 + di as isize) as usize;
            for (dj, wj) in w1.iter().enumerate() {
                let j = (j0 - 1 + dj as isize) as usize;
                acc += wi * wj * self.values[i * self.n + j];
            }
        }
        Some(acc)
    }
}

/// Centered 1-D transform: given samples f_j at x_j = -L + (j+1/2)*2L/n,
/// returns A_k = sum_j f_j e^{-i x_j xi_k} at xi_k = (pi/L)(k - n/2).
pub fn centered_dft_1d(samples: &[Complex64], half_extent: f64) -> Result<Vec<Complex64>> {
    let n = samples.len();
    check_shape(n, half_extent)?;
    let mut buf: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(j, &v)| if j % 2 == 0 { v } else { -v })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        let kf = k as f64;
        let phase = std::f64::consts::PI * (0.5 - nf / 2.0 + kf - kf / nf);
        *v *= Complex64::from_polar(1.0, phase);
    }
    Ok(buf)
}

/// Inverse of `centered_dft_1d`: f_j = (1/n) sum_k A_k e^{+i x_j xi_k}.
pub fn centered_idft_1d(coeffs: &[Complex64], half_extent: f64) -> Result<Vec<Complex64>> {
    let n = coeffs.len();
    check_shape(n, half_extent)?;
    let nf = n as f64;
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let kf = k as f64;
            v * Complex64::from_polar(1.0, std::f64::consts::PI * (kf / nf - kf))
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let global = Complex64::from_polar(1.0, std::f64::consts::PI * (nf / 2.0 - 0.5));
    for (j, v) in buf.iter_mut().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *v *= sign / nf * global;
    }
    Ok(buf)
}

fn transform_2d(
    values: &mut [Complex64],
    n: usize,
    half_extent: f64,
    forward: bool,
) -> Result<()> {
    let one_d = |row: &[Complex64]| -> Result<Vec<Complex64>> {
        if forward {
            centered_dft_1d(row, half_extent)
        } else {
            centered_idft_1d(row, half_extent)
        }
    };
    // Rows: transform over j (the x1 axis).
    for i in 0..n {
        let out = one_d(&values[i * n..(i + 1) * n])?;
        values[i * n..(i + 1) * n].copy_from_slice(&out);
    }
    // Columns: transform over i (the x2 axis).
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = values[i * n + j];
        }
        let out = one_d(&col)?;
        for i in 0..n {
            values[i * n + j] = out[i];
        }
    }
    Ok(())
}

/// Forward 2-D transform: F(xi) = sum_x f(x) e^{-i x.xi} over cell centers.
pub fn fft2(img: &ImageGrid) -> Result<SpectralGrid> {
    let n = img.n();
    let mut values: Vec<Complex64> =
        img.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(&mut values, n, img.half_extent(), true)?;
    SpectralGrid::new(n, img.half_extent(), values)
}

/// Inverse 2-D transform; the imaginary residue is dropped (callers feeding
/// conjugate-symmetric spectra get real output to rounding).
pub fn ifft2(spec: &SpectralGrid) -> Result<ImageGrid> {
    let n = spec.n();
    let mut values = spec.values().to_vec();
    transform_2d(&mut values, n, spec.half_extent(), false)?;
    ImageGrid::new(n, spec.half_extent(), values.iter().map(|v| v.re).collect())
}

/// One sub-cell-refined local maximum of a compared difference.
#[derive(Debug, Clone, Copy)]
pub struct Peak {
    pub x: [f64; 2],
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct Metrics {
    pub l2_rel: f64,
    pub linf_rel: f64,
    pub peak_list: Vec<Peak>,
}

fn rel_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Norms of a-b relative to b, plus strict local maxima of |a-b| above
/// peak_threshold * max|a-b|, refined to sub-cell accuracy by a separable
/// quadratic fit.
pub fn compare(a: &ImageGrid, b: &ImageGrid, peak_threshold: f64) -> Result<Metrics> {
    a.check_same_shape(b)?;
    let n = a.n();
    let diff: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| (x - y).abs())
        .collect();
    let num2: f64 = diff.iter().map(|d| d * d).sum();
    let den2: f64 = b.values().iter().map(|v| v * v).sum();
    let max_diff = diff.iter().fold(0.0f64, |m, &d| m.max(d));
    let max_b = b.linf_norm();
    let metrics_l2 = rel_or_zero(num2.sqrt(), den2.sqrt());
    let metrics_linf = rel_or_zero(max_diff, max_b);

    let mut peak_list = Vec::new();
    if max_diff > 0.0 {
        let floor = peak_threshold * max_diff;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let d0 = diff[i * n + j];
                if d0 <= floor {
                    continue;
                }
                let mut strict_max = true;
                'nb: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let ii = (i as i64 + di) as usize;
                        let jj = (j as i64 + dj) as usize;
                        if diff[ii * n + jj] >= d0 {
                            strict_max = false;
                            break 'nb;
                        }
                    }
                }
                if !strict_max {
                    continue;
                }
                let (o1, g1) = parabola_refine(
                    diff[i * n + j - 1],
                    d0,
                    diff[i * n + j + 1],
                );
                let (o2, g2) = parabola_refine(
                    diff[(i - 1) * n + j],
                    d0,
                    diff[(i + 1) * n + j],
                );
                let cell = a.cell_size();
                let (x1, x2) = a.coord(i, j);
                peak_list.push(Peak {
                    x: [x1 + o1 * cell, x2 + o2 * cell],
                    magnitude: d0 + g1 + g2,
                });
            }
        }
        peak_list.sort_by(|p, q| q.magnitude.total_cmp(&p.magnitude));
    }
    Ok(Metrics { l2_rel: metrics_l2, linf_rel: metrics_linf, peak_list })
}

/// Vertex offset (clamped to [-1/2, 1/2]) and value gain of the parabola
/// through (-1, l), (0, c), (1, r).
fn parabola_refine(l: f64, c: f64, r: f64) -> (f64, f64) {
    let denom = l - 2.0 * c + r;
    if denom >= 0.0 {
        return (0.0, 0.0);
    }
    let offset = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
    let gain = 0.5 * (r - l) * offset + 0.5 * denom * offset * offset;
    (offset, gain.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    /// Naive O(n^2) evaluation of the centered transform definition.
    fn naive_centered_dft(samples: &[Complex64], half_extent: f64) -> Vec<Complex64> {
        let n = samples.len();
        (0..n)
            .map(|k| {
                let xi = PI / half_extent * (k as f64 - n as f64 / 2.0);
                samples
                    .iter()
                    .enumerate()
                    .map(|(j, &f)| {
                        let x = -half_extent
                            + (j as f64 + 0.5) * 2.0 * half_extent / n as f64;
                        f * Complex64::from_polar(1.0, -x * xi)
                    })
                    .sum()
            })
            .collect()
    }

    fn ramp_complex(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| Complex64::new(0.3 + j as f64, (j as f64).sin()))
            .collect()
    }

    #[test]
    fn centered_dft_matches_naive_oracle() {
        for &(n, l) in &[(8usize, 1.0f64), (16, 2.5)] {
            let samples = ramp_complex(n);
            let fast = centered_dft_1d(&samples, l).unwrap();
            let naive = naive_centered_dft(&samples, l);
            let scale = naive.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            for (a, b) in fast.iter().zip(&naive) {
                assert!((a - b).norm() < 1e-12 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn centered_idft_round_trips() {
        let samples = ramp_complex(32);
        let spec = centered_dft_1d(&samples, 1.7).unwrap();
        let back = centered_idft_1d(&spec, 1.7).unwrap();
        let scale = samples.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        for (a, b) in back.iter().zip(&samples) {
            assert!((a - b).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn constant_grid_transforms_to_dc_only() {
        let img = ImageGrid::from_fn(16, 1.0, |_, _| 1.0).unwrap();
        let spec = fft2(&img).unwrap();
        let dc = spec.get(8, 8);
        assert!((dc.re - 256.0).abs() < 1e-10 && dc.im.abs() < 1e-10);
        for i in 0..16 {
            for j in 0..16 {
                if (i, j) != (8, 8) {
                    assert!(spec.get(i, j).norm() < 1e-12 * dc.norm());
                }
            }
        }
    }

    #[test]
    fn fft2_round_trip_identity() {
        let img = ImageGrid::from_fn(32, 1.3, |x1, x2| (7.0 * x1).sin() + x2 * x2).unwrap();
        let back = ifft2(&fft2(&img).unwrap()).unwrap();
        let m = compare(&back, &img, 0.5).unwrap();
        assert!(m.l2_rel < 1e-12, "l2_rel = {}", m.l2_rel);
    }

    #[test]
    fn gaussian_spectrum_matches_closed_form() {
        // FT of e^{-|x|^2/(2 s^2)} is 2 pi s^2 e^{-s^2 |xi|^2 / 2}; the raw
        // lattice sum approximates it up to the cell-area factor.
        let sigma = 0.1;
        let n = 256;
        let img = ImageGrid::from_fn(n, 1.0, |x1, x2| {
            (-(x1 * x1 + x2 * x2) / (2.0 * sigma * sigma)).exp()
        })
        .unwrap();
        let spec = fft2(&img).unwrap();
        let dx2 = img.cell_size() * img.cell_size();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (xi1, xi2) = spec.freq(i, j);
                let analytic = 2.0 * PI * sigma * sigma
                    * (-sigma * sigma * (xi1 * xi1 + xi2 * xi2) / 2.0).exp();
                let got = spec.get(i, j) * dx2;
                num += (got - analytic).norm_sqr();
                den += analytic * analytic;
            }
        }
        assert!((num / den).sqrt() < 1e-6, "rel l2 {}", (num / den).sqrt());
    }

    #[test]
    fn parseval_holds() {
        let img = ImageGrid::from_fn(64, 1.0, |x1, x2| (9.0 * x1 * x2).cos() + x1).unwrap();
        let spec = fft2(&img).unwrap();
        let space: f64 = img.values().iter().map(|v| v * v).sum();
        let freq: f64 =
            spec.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / (64.0 * 64.0);
        assert!((space - freq).abs() < 1e-10 * space);
    }

    #[test]
    fn compare_identical_grids_is_zero() {
        let img = ImageGrid::from_fn(16, 1.0, |x1, _| x1).unwrap();
        let m = compare(&img, &img, 0.5).unwrap();
        assert_eq!(m.l2_rel, 0.0);
        assert_eq!(m.linf_rel, 0.0);
        assert!(m.peak_list.is_empty());
    }

    #[test]
    fn compare_double_has_unit_l2() {
        let b = ImageGrid::from_fn(16, 1.0, |x1, x2| x1 + 2.0 * x2).unwrap();
        let a = b.map(|v| 2.0 * v).unwrap();
        let m = compare(&a, &b, 0.5).unwrap();
        assert!((m.l2_rel - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compare_shape_mismatch_rejected() {
        let a = ImageGrid::zeros(16, 1.0).unwrap();
        let b = ImageGrid::zeros(32, 1.0).unwrap();
        assert!(compare(&a, &b, 0.5).is_err());
    }

    #[test]
    fn compare_locates_bump_peak_within_half_cell() {
        let center = [0.31, -0.22];
        let a = ImageGrid::from_fn(128, 1.0, |x1, x2| {
            let d2 = (x1 - center[0]).powi(2) + (x2 - center[1]).powi(2);
            (-d2 / (2.0 * 0.05f64.powi(2))).exp()
        })
        .unwrap();
        let b = ImageGrid::zeros(128, 1.0).unwrap();
        let m = compare(&a, &b, 0.5).unwrap();
        assert_eq!(m.peak_list.len(), 1);
        let p = &m.peak_list[0];
        let half_cell = a.cell_size() / 2.0;
        assert!((p.x[0] - center[0]).abs() < half_cell);
        assert!((p.x[1] - center[1]).abs() < half_cell);
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(ImageGrid::zeros(12, 1.0).is_err());
        assert!(ImageGrid::zeros(1, 1.0).is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(ImageGrid::new(4, 1.0, v).is_err());
    }

    #[test]
    fn cubic_sampling_reproduces_cell_centers_and_linears() {
        let img = ImageGrid::from_fn(32, 1.0, |x1, x2| 0.3 * x1 - 0.7 * x2 + 0.1).unwrap();
        let (x1, x2) = img.coord(10, 20);
        assert!((img.sample_cubic(x1, x2) - img.get(10, 20)).abs() < 1e-14);
        // Catmull-Rom reproduces affine data exactly away from the border.
        let v = img.sample_cubic(0.123, -0.456);
        assert!((v - (0.3 * 0.123 - 0.7 * -0.456 + 0.1)).abs() < 1e-13);
        assert_eq!(img.sample_cubic(5.0, 0.0), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fft_round_trip_on_random_grids(seed in 0u64..1_000_000) {
            let n = 16usize;
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let values: Vec<f64> = (0..n * n).map(|_| next()).collect();
            let img = ImageGrid::new(n, 0.8, values).unwrap();
            let back = ifft2(&fft2(&img).unwrap()).unwrap();
            let m = compare(&back, &img, 0.5).unwrap();
            prop_assert!(m.l2_rel < 1e-12);
        }
    }
}
