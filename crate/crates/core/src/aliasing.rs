//! Geometric prediction of angular-undersampling artifacts.
//!
//! An angular step `s` aliases the reconstruction: a phase-space point
//! `(x, xi)` produces replicas at `x + (2 pi k / (s |xi|)) xi_perp / |xi|`
//! for every integer `k`, with `xi_perp = (-xi_2, xi_1)`. This module
//! houses that shift map, the Nyquist predicate `s < pi / (R B)`, the
//! signed-displacement intervals of the angular-interpolation method,
//! band-limit estimation on the plane and on the circle, and an
//! end-to-end verifier that matches predicted replica locations against
//! peaks of `reconstruction - reference`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{self, ImageGrid, Metrics, Peak};
use crate::phantom::{PhantomKind, PhantomSpec};

/// A point in phase space: position plus a nonzero frequency vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

impl PhaseSpacePoint {
    pub fn new(x: [f64; 2], xi: [f64; 2]) -> Result<Self> {
        if !x.iter().chain(&xi).all(|v| v.is_finite()) {
            return Err(Error::bad_argument("phase-space point must be finite"));
        }
        if xi == [0.0, 0.0] {
            return Err(Error::bad_argument("frequency must be nonzero"));
        }
        Ok(Self { x, xi })
    }

    fn xi_norm(&self) -> f64 {
        self.xi[0].hypot(self.xi[1])
    }

    /// Unit vector perpendicular to the frequency: rotate by +pi/2.
    fn xi_perp_unit(&self) -> [f64; 2] {
        let n = self.xi_norm();
        [-self.xi[1] / n, self.xi[0] / n]
    }
}

/// The k-th replica map: displace by `2 pi k / (s |xi|)` along the unit
/// perpendicular of the frequency; the frequency itself is unchanged.
pub fn canonical_shift(pt: &PhaseSpacePoint, k: i64, s: f64) -> Result<PhaseSpacePoint> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::bad_argument("angular step must be positive"));
    }
    let d = 2.0 * PI * k as f64 / (s * pt.xi_norm());
    let perp = pt.xi_perp_unit();
    PhaseSpacePoint::new([pt.x[0] + d * perp[0], pt.x[1] + d * perp[1]], pt.xi)
}

/// Frequency fold of plain lattice sampling with steps `s = (s1, s2)`:
/// `xi -> xi + 2 pi k / s` component-wise. Position is unaffected.
pub fn grid_shift(xi: [f64; 2], k: [i64; 2], s: [f64; 2]) -> [f64; 2] {
    [
        xi[0] + 2.0 * PI * k[0] as f64 / s[0],
        xi[1] + 2.0 * PI * k[1] as f64 / s[1],
    ]
}

/// Result of the angular Nyquist test `s < pi / (R B)`.
#[derive(Debug, Clone, Copy)]
pub struct NyquistCheck {
    pub ok: bool,
    /// `pi/(R B) - s`: positive iff the condition holds.
    pub margin: f64,
}

/// Strict angular Nyquist condition for support radius `R` and band
/// limit `B`: aliasing is avoided iff `s < pi / (R B)`. The boundary
/// case counts as failing.
pub fn nyquist_ok(s: f64, b: f64, r: f64) -> Result<NyquistCheck> {
    if !(s > 0.0 && b > 0.0 && r > 0.0) {
        return Err(Error::bad_argument("nyquist check needs positive s, B, R"));
    }
    let threshold = PI / (r * b);
    Ok(NyquistCheck { ok: s < threshold, margin: threshold - s })
}

/// Signed-distance interval for replica order `k` of the
/// angular-interpolation method.
#[derive(Debug, Clone, Copy)]
pub struct DisplacementInterval {
    pub k: u64,
    pub lo: f64,
    pub hi: f64,
    /// True when the tangent line passes through the origin
    /// (`x . xi_perp = 0`): the interval degenerates to empty.
    pub degenerate: bool,
}

/// Signed displacement range of the order-`k >= 1` replica produced by
/// the angular-interpolation method:
/// `-(x . xi_perp / |xi|) * [2k/(2k+1), 2k/(2k-1)]`.
/// Negative orders reduce to positive ones by symmetry. Depends on the
/// frequency only through its direction.
pub fn interp_displacement_interval(
    pt: &PhaseSpacePoint,
    k: u64,
) -> Result<DisplacementInterval> {
    if k == 0 {
        return Err(Error::bad_argument("replica order k must be >= 1"));
    }
    let base = -(pt.x[0] * pt.xi_perp_unit()[0] + pt.x[1] * pt.xi_perp_unit()[1]);
    if base == 0.0 {
        return Ok(DisplacementInterval { k, lo: 0.0, hi: 0.0, degenerate: true });
    }
    let kf = k as f64;
    let a = base * 2.0 * kf / (2.0 * kf + 1.0);
    let b = base * 2.0 * kf / (2.0 * kf - 1.0);
    Ok(DisplacementInterval { k, lo: a.min(b), hi: a.max(b), degenerate: false })
}

/// The displacement intervals for orders `1..=k_max`.
pub fn interp_displacement_union(
    pt: &PhaseSpacePoint,
    k_max: u64,
) -> Result<Vec<DisplacementInterval>> {
    (1..=k_max).map(|k| interp_displacement_interval(pt, k)).collect()
}

/// The unique integer `k` with `x . xi_perp_unit + 2 pi k / s` in
/// `[-pi/s, pi/s)` (half-open, so the choice is unique everywhere).
pub fn folding_order(pt: &PhaseSpacePoint, s: f64) -> Result<i64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::bad_argument("angular step must be positive"));
    }
    let perp = pt.xi_perp_unit();
    let v = pt.x[0] * perp[0] + pt.x[1] * perp[1];
    Ok((-v * s / (2.0 * PI)).round() as i64)
}

/// Spectral band-limit estimate with its supporting decay profile.
#[derive(Debug, Clone)]
pub struct BandLimitEstimate {
    /// Semiclassical band limit: `(1 - epsilon)` of the spectral energy
    /// lies at semiclassical frequency `<= b`.
    pub b: f64,
    /// `(semiclassical shell radius, cumulative energy fraction)` pairs.
    pub decay_profile: Vec<(f64, f64)>,
    /// Circle variant only: `(harmonic index, |coefficient|)` pairs.
    pub circle_coeff_profile: Vec<(usize, f64)>,
}

/// Smallest semiclassical radius containing `(1 - epsilon)` of the
/// spectral energy of the image. Classical frequencies are scaled by
/// `h`, so a pattern oscillating at classical frequency `B/h` reports
/// band limit `B`.
pub fn estimate_band_limit(img: &ImageGrid, h: f64, epsilon: f64) -> Result<BandLimitEstimate> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::bad_argument("semiclassical parameter h must be positive"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::bad_argument("epsilon must lie in (0, 1)"));
    }
    let spec = grid::fft2(img)?;
    let n = img.n();
    // Bucket spectral power by semiclassical shell radius.
    let r_max = h * (PI / img.half_extent()) * (n as f64 / 2.0) * std::f64::consts::SQRT_2;
    let bins = 512usize;
    let mut power = vec![0.0f64; bins + 1];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (xi1, xi2) = spec.freq(i, j);
            let r = h * xi1.hypot(xi2);
            let p = spec.get(i, j).norm_sqr();
            let idx = ((r / r_max) * bins as f64).floor().min(bins as f64) as usize;
            power[idx] += p;
            total += p;
        }
    }
    if total == 0.0 {
        return Ok(BandLimitEstimate {
            b: 0.0,
            decay_profile: vec![(0.0, 1.0)],
            circle_coeff_profile: Vec::new(),
        });
    }
    let mut decay_profile = Vec::with_capacity(bins + 1);
    let mut cum = 0.0;
    let mut b = r_max;
    let mut found = false;
    for (idx, p) in power.iter().enumerate() {
        cum += p;
        let radius = (idx + 1) as f64 / bins as f64 * r_max;
        decay_profile.push((radius, cum / total));
        if !found && cum >= (1.0 - epsilon) * total {
            b = radius;
            found = true;
        }
    }
    Ok(BandLimitEstimate { b, decay_profile, circle_coeff_profile: Vec::new() })
}

/// Band limit of a real series sampled uniformly on the circle: the
/// smallest `B` such that harmonics above `B/h` carry at most an
/// `epsilon` fraction of the energy.
pub fn circle_band_limit(series: &[f64], h: f64, epsilon: f64) -> Result<BandLimitEstimate> {
    if series.is_empty() {
        return Err(Error::bad_argument("circle series must be nonempty"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::bad_argument("semiclassical parameter h must be positive"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::bad_argument("epsilon must lie in (0, 1)"));
    }
    let n = series.len();
    let mut buf: Vec<Complex64> = series.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // Fold conjugate harmonics: index q and n - q describe |harmonic| q.
    let half = n / 2;
    let mut mag = vec![0.0f64; half + 1];
    for (q, c) in buf.iter().enumerate() {
        let idx = q.min(n - q);
        if idx <= half {
            mag[idx] += c.norm_sqr();
        }
    }
    let total: f64 = mag.iter().sum();
    let circle_coeff_profile: Vec<(usize, f64)> =
        mag.iter().enumerate().map(|(q, &p)| (q, p.sqrt() / n as f64)).collect();
    if total == 0.0 {
        return Ok(BandLimitEstimate { b: 0.0, decay_profile: Vec::new(), circle_coeff_profile });
    }
    let mut cum = 0.0;
    let mut b = h * half as f64;
    let mut decay_profile = Vec::with_capacity(half + 1);
    let mut found = false;
    for (q, &p) in mag.iter().enumerate() {
        cum += p;
        decay_profile.push((h * q as f64, cum / total));
        if !found && cum >= (1.0 - epsilon) * total {
            b = h * q as f64;
            found = true;
        }
    }
    Ok(BandLimitEstimate { b, decay_profile, circle_coeff_profile })
}

/// Axis-aligned rectangular prediction window.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Window {
    pub fn centered(half_extent: f64) -> Self {
        Self { lo: [-half_extent, -half_extent], hi: [half_extent, half_extent] }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (self.lo[0]..=self.hi[0]).contains(&x[0]) && (self.lo[1]..=self.hi[1]).contains(&x[1])
    }
}

/// One predicted replica: order, location, carrying frequency, and
/// whether it lands inside the requested window.
#[derive(Debug, Clone, Copy)]
pub struct PredictedArtifact {
    pub k: i64,
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub inside: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ArtifactPrediction {
    pub entries: Vec<PredictedArtifact>,
}

impl ArtifactPrediction {
    pub fn inside(&self) -> impl Iterator<Item = &PredictedArtifact> {
        self.entries.iter().filter(|e| e.inside)
    }

    /// Text table, one `k,x,y,xi1,xi2,inside` row per artifact.
    pub fn to_table(&self) -> String {
        let mut out = String::from("k,x,y,xi1,xi2,inside\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.k, e.x[0], e.x[1], e.xi[0], e.xi[1], e.inside as u8
            ));
        }
        out
    }
}

/// The classical frequency magnitude carried by the phantom's singular
/// set: the oscillation frequency for a wave packet, the profile
/// sharpness `lambda` for smoothed edges (their spectra decay on that
/// scale along the normal).
pub fn characteristic_frequency(spec: &PhantomSpec) -> f64 {
    match spec.kind {
        PhantomKind::Coherent => spec.xi0[0].hypot(spec.xi0[1]) / spec.h,
        _ => spec.lambda,
    }
}

/// Enumerate replica locations of the phantom's singular points under
/// angular step `s`. Every singular point `(x, n)` carries frequency
/// `xi = B n` with `B` the characteristic frequency; orders `k != 0`
/// are listed while the shifted point can still fall inside `window`
/// (the replica set is locally finite), and duplicates closer than
/// `dedupe_tol` are merged.
pub fn predict_artifacts(
    spec: &PhantomSpec,
    s: f64,
    window: &Window,
    dedupe_tol: f64,
) -> Result<ArtifactPrediction> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::bad_argument("angular step must be positive"));
    }
    if !(dedupe_tol >= 0.0) {
        return Err(Error::bad_argument("dedupe tolerance must be nonnegative"));
    }
    let freq = characteristic_frequency(spec);
    let step = 2.0 * PI / (s * freq);
    // Farthest window corner from the origin bounds how many orders can land inside.
    let reach = window
        .lo
        .iter()
        .chain(&window.hi)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        * std::f64::consts::SQRT_2;
    let points = spec.singular_points(100)?;
    let point_reach = points
        .iter()
        .fold(0.0f64, |m, (x, _)| m.max(x[0].hypot(x[1])));
    let k_bound = (((reach + point_reach) / step).ceil() as i64 + 1).max(1);
    let mut entries: Vec<PredictedArtifact> = Vec::new();
    for (x, normal) in &points {
        let pt = PhaseSpacePoint::new(*x, [normal[0] * freq, normal[1] * freq])?;
        for k in -k_bound..=k_bound {
            if k == 0 {
                continue;
            }
            let shifted = canonical_shift(&pt, k, s)?;
            let inside = window.contains(shifted.x);
            let dup = entries.iter().any(|e| {
                e.k == k
                    && (e.x[0] - shifted.x[0]).hypot(e.x[1] - shifted.x[1]) < dedupe_tol
            });
            if !dup {
                entries.push(PredictedArtifact { k, x: shifted.x, xi: shifted.xi, inside });
            }
        }
    }
    Ok(ArtifactPrediction { entries })
}

/// Outcome of matching predicted replica locations against measured
/// difference peaks.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    /// Distance from each inside-window prediction to the nearest
    /// measured peak (`None` when no peak exists at all).
    pub distances: Vec<Option<f64>>,
    /// Measured peaks not within `match_radius` of any prediction.
    pub unmatched: Vec<Peak>,
    /// The underlying grid comparison (difference norms and peaks).
    pub metrics: Metrics,
}

impl VerifyReport {
    pub fn matched_fraction(&self, match_radius: f64) -> f64 {
        if self.distances.is_empty() {
            return 1.0;
        }
        let hit = self
            .distances
            .iter()
            .filter(|d| d.map(|v| v <= match_radius).unwrap_or(false))
            .count();
        hit as f64 / self.distances.len() as f64
    }
}

/// Match the inside-window predictions against peaks of
/// `|recon - reference|` (peaks above `peak_threshold` of the maximum
/// difference). A peak counts as explained when it lies within
/// `match_radius` of some prediction.
pub fn verify_artifacts(
    prediction: &ArtifactPrediction,
    recon: &ImageGrid,
    reference: &ImageGrid,
    peak_threshold: f64,
    match_radius: f64,
) -> Result<VerifyReport> {
    let metrics = grid::compare(recon, reference, peak_threshold)?;
    let predictions: Vec<[f64; 2]> = prediction.inside().map(|e| e.x).collect();
    let distances = predictions
        .iter()
        .map(|p| {
            metrics
                .peak_list
                .iter()
                .map(|q| (q.x[0] - p[0]).hypot(q.x[1] - p[1]))
                .min_by(f64::total_cmp)
        })
        .collect();
    let unmatched = metrics
        .peak_list
        .iter()
        .filter(|q| {
            !predictions
                .iter()
                .any(|p| (q.x[0] - p[0]).hypot(q.x[1] - p[1]) <= match_radius)
        })
        .cloned()
        .collect();
    Ok(VerifyReport { distances, unmatched, metrics })
}
