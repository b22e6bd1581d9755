//! Named end-to-end experiments with embedded pass/fail checks.
//!
//! Each experiment reproduces one figure-scale scenario — coherent-state
//! replicas, the three edge singularity profiles, the artifact-free band
//! of a semiclassical convex edge, the disk under the interpolation
//! method, a Nyquist threshold sweep, and refocusing — writes its
//! artifacts (grids, sinograms, crosscuts, prediction tables, preview
//! images) into an output directory, and reports quantitative checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::aliasing::{
    estimate_band_limit, interp_displacement_union, predict_artifacts, verify_artifacts,
    PhaseSpacePoint, Window,
};
use crate::conormal::{self, SingularityKind};
use crate::error::{Error, Result};
use crate::grid::{self, ImageGrid};
use crate::io;
use crate::phantom::{self, PhantomSpec};
use crate::radon::{radon, ProjectionConfig, RayInterp, Sinogram};
use crate::recon::{fbp_direct, fbp_interp, fbp_multiplier, refocus, verify_convolution_identity};
use crate::filtering::Kernel1D;

pub const EXPERIMENTS: &[&str] = [
    "fig4",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "nyquist-sweep",
    "refocus-demo",
]
.as_slice();

/// Flat `key = value` experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub out_dir: PathBuf,
    pub seed: u64,
    params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Parse the flat `key = value` format: one pair per line, `#`
    /// comments, blank lines allowed, duplicate keys rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut params = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::bad_argument(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::bad_argument(format!(
                    "config line {}: empty key or value",
                    lineno + 1
                )));
            }
            if params.insert(key.clone(), value).is_some() {
                return Err(Error::bad_argument(format!("duplicate config key `{key}`")));
            }
        }
        let experiment = params
            .remove("experiment")
            .ok_or_else(|| Error::bad_argument("config is missing `experiment`"))?;
        if !EXPERIMENTS.contains(&experiment.as_str()) {
            return Err(Error::bad_argument(format!(
                "unknown experiment `{experiment}`; expected one of {EXPERIMENTS:?}"
            )));
        }
        let out_dir = PathBuf::from(
            params
                .remove("out_dir")
                .ok_or_else(|| Error::bad_argument("config is missing `out_dir`"))?,
        );
        let seed = match params.remove("seed") {
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| Error::bad_argument(format!("bad seed `{v}`")))?,
            None => 0,
        };
        Ok(Self { experiment, out_dir, seed, params })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn check_known(&self, allowed: &[&str]) -> Result<()> {
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::bad_argument(format!(
                    "unknown config key `{key}` for experiment `{}`",
                    self.experiment
                )));
            }
        }
        Ok(())
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| Error::bad_argument(format!("bad numeric value for `{key}`: {v}"))),
            None => Ok(default),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| Error::bad_argument(format!("bad integer value for `{key}`: {v}"))),
            None => Ok(default),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<PathBuf>,
}

impl ExperimentReport {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), checks: Vec::new(), artifacts: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckResult { name: name.to_string(), passed, detail });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut out = format!("experiment: {}\n", self.name);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let _ = writeln!(
            out,
            "result: {}",
            if self.all_passed() { "ALL CHECKS PASSED" } else { "CHECKS FAILED" }
        );
        out
    }
}

/// Run a named experiment, writing artifacts and a `summary.txt` into
/// the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut report = match cfg.experiment.as_str() {
        "fig4" => fig4(cfg)?,
        "fig5" => fig5(cfg)?,
        "fig6" => fig6(cfg)?,
        "fig7" => fig7(cfg)?,
        "fig8" => fig8(cfg)?,
        "fig9" => fig9(cfg)?,
        "nyquist-sweep" => nyquist_sweep(cfg)?,
        "refocus-demo" => refocus_demo(cfg)?,
        other => return Err(Error::bad_argument(format!("unknown experiment `{other}`"))),
    };
    let summary_path = cfg.out_dir.join("summary.txt");
    fs::write(&summary_path, report.summary())?;
    report.artifacts.push(summary_path);
    Ok(report)
}

fn project(img: &ImageGrid, m: usize, p_count: usize, r: f64) -> Result<Sinogram> {
    radon(
        img,
        &ProjectionConfig { m, p_count, p_half_extent: r, ray_interp: RayInterp::Cubic },
    )
}

fn save_grid(report: &mut ExperimentReport, dir: &Path, name: &str, img: &ImageGrid) -> Result<()> {
    let path = dir.join(name);
    io::write_grid(&path, img)?;
    report.artifacts.push(path);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in img.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo >= hi {
        hi = lo + 1.0;
    }
    let preview = dir.join(format!("{}.pgm", name.trim_end_matches(".grid")));
    io::write_image8(&preview, img, lo, hi)?;
    report.artifacts.push(preview);
    Ok(())
}

fn save_text(report: &mut ExperimentReport, dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    report.artifacts.push(path);
    Ok(())
}

/// Coherent-state replicas under a 5-degree step: the direct method
/// versus the exact multiplier form, replica locations versus the shift
/// law, and the 1/|xi| scaling of the replica distance.
fn fig4(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&[
        "n",
        "half_extent",
        "m",
        "pcount",
        "p_half_extent",
        "h",
        "freq",
        "freq_factor",
        "raster_n",
        "kmax",
    ])?;
    let n = cfg.usize("n", 256)?;
    let l = cfg.f64("half_extent", 2.4)?;
    let m = cfg.usize("m", 36)?;
    let pcount = cfg.usize("pcount", 2048)?;
    let r = cfg.f64("p_half_extent", 2.4)?;
    let h = cfg.f64("h", 0.06)?;
    let freq = cfg.f64("freq", 72.0)?;
    let factor = cfg.f64("freq_factor", 1.3)?;
    let raster_n = cfg.usize("raster_n", 512)?;
    let kmax = cfg.usize("kmax", 2)?;
    let s = PI / m as f64;
    let mut report = ExperimentReport::new("fig4");
    let cell = 2.0 * l / n as f64;

    let mut measured_distance = [0.0f64; 2];
    for (case, f0) in [freq, freq * factor].iter().enumerate() {
        let tag = if case == 0 { "base" } else { "raised" };
        let spec = PhantomSpec::coherent([0.0, 0.0], [0.0, f0 * h], h, f64::INFINITY);
        let raster = phantom::rasterize(&spec, raster_n, l)?;
        let sino = project(&raster, m, pcount, r)?;
        let direct = fbp_direct(&sino, n, l)?.image;
        let reference = phantom::rasterize(&spec, n, l)?;
        save_grid(&mut report, &cfg.out_dir, &format!("phantom_{tag}.grid"), &reference)?;
        save_grid(&mut report, &cfg.out_dir, &format!("direct_{tag}.grid"), &direct)?;
        io::write_sino(&cfg.out_dir.join(format!("sinogram_{tag}.sino")), &sino)?;
        report.artifacts.push(cfg.out_dir.join(format!("sinogram_{tag}.sino")));

        if case == 0 {
            // Exact multiplier form on a twice-padded torus so the k = 2
            // replica tails leave the domain instead of wrapping.
            let padded = phantom::rasterize(&spec, 4 * n, 2.0 * l)?;
            let mult_padded = fbp_multiplier(&padded, m, kmax)?;
            let mult = ImageGrid::from_fn(n, l, |x, y| mult_padded.sample_cubic(x, y))?;
            save_grid(&mut report, &cfg.out_dir, "multiplier_base.grid", &mult)?;
            let err = grid::compare(&direct, &mult, 0.5)?.l2_rel;
            report.check(
                "direct_vs_multiplier",
                err < 0.05,
                format!("l2_rel {err:.4} (tolerance 0.05)"),
            );
        }

        // Predicted replica set: orders whose shift 2 pi k / (s |xi|)
        // stays well inside the grid.
        let window = Window::centered(0.85 * l);
        let pred = predict_artifacts(&spec, s, &window, 1e-9)?;
        save_text(
            &mut report,
            &cfg.out_dir,
            &format!("prediction_{tag}.csv"),
            &pred.to_table(),
        )?;
        let verify = verify_artifacts(&pred, &direct, &reference, 0.4, 2.0 * cell)?;
        let worst = verify
            .distances
            .iter()
            .map(|d| d.unwrap_or(f64::INFINITY))
            .fold(0.0f64, f64::max);
        report.check(
            &format!("replica_peaks_{tag}"),
            worst <= 2.0 * cell,
            format!("worst prediction-to-peak distance {worst:.4} (2 cells = {:.4})", 2.0 * cell),
        );
        // Measured first-order replica distance from the packet center.
        let mut dist = Vec::new();
        for e in pred.inside().filter(|e| e.k.abs() == 1) {
            if let Some(peak) = verify
                .metrics
                .peak_list
                .iter()
                .min_by(|a, b| {
                    (a.x[0] - e.x[0])
                        .hypot(a.x[1] - e.x[1])
                        .total_cmp(&(b.x[0] - e.x[0]).hypot(b.x[1] - e.x[1]))
                })
            {
                dist.push(peak.x[0].hypot(peak.x[1]));
            }
        }
        measured_distance[case] = dist.iter().sum::<f64>() / dist.len().max(1) as f64;
    }
    let ratio = measured_distance[1] / measured_distance[0];
    report.check(
        "distance_scales_inversely_with_frequency",
        (ratio * factor - 1.0).abs() <= 0.05,
        format!(
            "distances {:.4} -> {:.4}, ratio {ratio:.4} vs 1/{factor} (within 5%)",
            measured_distance[0], measured_distance[1]
        ),
    );
    Ok(report)
}

/// Shared flat-edge pipeline: reconstruct on a widened grid and fit the pv
/// profile on a crosscut far from the edge, where the tangent-line
/// artifacts of the neighboring angles are well separated. The fit window
/// stays inside the neighbor-line spacing |y0| tan(pi/m).
fn flat_edge_pv_coefficient(
    m: usize,
    raster_n: usize,
    n: usize,
    lambda: f64,
    window: f64,
    report: Option<(&mut ExperimentReport, &Path)>,
) -> Result<f64> {
    let spec = PhantomSpec::flat_edge([0.25, 0.0], 0.0, lambda, 0.5);
    let img = phantom::rasterize(&spec, raster_n, 1.0)?;
    let sino = project(&img, m, 2048, 2.0)?;
    let recon = fbp_direct(&sino, n, 1.3)?.image;
    let y0 = -1.2;
    let coords: Vec<f64> = (0..n).map(|j| recon.axis_coord(j)).collect();
    let values: Vec<f64> = coords.iter().map(|&x| recon.sample_cubic(x, y0)).collect();
    let fit = conormal::fit_singularity(&coords, &values, SingularityKind::PvRecip, 0.25, window)?;
    if let Some((report, dir)) = report {
        save_grid(report, dir, &format!("recon_m{m}.grid"), &recon)?;
        io::write_csv_crosscut(&dir.join(format!("crosscut_m{m}.csv")), &coords, &values)?;
        report.artifacts.push(dir.join(format!("crosscut_m{m}.csv")));
        save_text(
            report,
            dir,
            &format!("fit_m{m}.csv"),
            &format!("{}\n{}\n", conormal::FIT_TABLE_HEADER, fit.to_table_row()),
        )?;
    }
    Ok(fit.c)
}

/// Flat edge at a 10-degree step: pv-profile coefficient against the
/// 1/(2 pi m) law, plus its 1/m scaling across three angular steps.
fn fig5(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&["n", "raster_n", "lambda", "m"])?;
    let n = cfg.usize("n", 512)?;
    let raster_n = cfg.usize("raster_n", 1024)?;
    let lambda = cfg.f64("lambda", 256.0)?;
    let m_main = cfg.usize("m", 18)?;
    let mut report = ExperimentReport::new("fig5");

    let mut scaled = Vec::new();
    for (m, window) in [(12usize, 0.15), (m_main, 0.10), (36, 0.08)] {
        let with_artifacts = if m == m_main {
            Some((&mut report, cfg.out_dir.as_path()))
        } else {
            None
        };
        let c = flat_edge_pv_coefficient(m, raster_n, n, lambda, window, with_artifacts)?;
        let expected = 1.0 / (2.0 * PI * m as f64);
        if m == m_main {
            report.check(
                "pv_coefficient",
                (c / expected - 1.0).abs() < 0.2,
                format!("fitted {c:.5} vs 1/(2 pi {m}) = {expected:.5} (within 20%)"),
            );
        }
        scaled.push(c * m as f64);
    }
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    report.check(
        "coefficient_scales_as_1_over_m",
        hi / lo <= 1.15,
        format!("m-scaled coefficients spread {lo:.5}..{hi:.5} (ratio {:.3} <= 1.15)", hi / lo),
    );
    Ok(report)
}

/// Convex edge at a 10-degree step: inverse-square-root coefficient
/// against the curvature law 2 sqrt(2) f(x0) / sqrt(kappa) / (2 pi m).
fn fig6(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&["n", "raster_n", "lambda", "m", "a"])?;
    let n = cfg.usize("n", 512)?;
    let raster_n = cfg.usize("raster_n", 1024)?;
    let lambda = cfg.f64("lambda", 256.0)?;
    let m = cfg.usize("m", 18)?;
    let a = cfg.f64("a", 1.5)?;
    let mut report = ExperimentReport::new("fig6");

    let spec = PhantomSpec::convex_edge([0.25, 0.0], a, 0.0, lambda, 0.4);
    let img = phantom::rasterize(&spec, raster_n, 1.0)?;
    let sino = project(&img, m, 2048, 2.0)?;
    let recon = fbp_direct(&sino, n, 1.0)?.image;
    save_grid(&mut report, &cfg.out_dir, "recon.grid", &recon)?;
    let y0 = -0.75;
    let coords: Vec<f64> = (0..n).map(|j| recon.axis_coord(j)).collect();
    let values: Vec<f64> = coords.iter().map(|&x| recon.sample_cubic(x, y0)).collect();
    io::write_csv_crosscut(&cfg.out_dir.join("crosscut.csv"), &coords, &values)?;
    report.artifacts.push(cfg.out_dir.join("crosscut.csv"));
    let fit =
        conormal::fit_singularity(&coords, &values, SingularityKind::InvSqrtMinus, 0.25, 0.1)?;
    save_text(
        &mut report,
        &cfg.out_dir,
        "fit.csv",
        &format!("{}\n{}\n", conormal::FIT_TABLE_HEADER, fit.to_table_row()),
    )?;
    // Curvature of the parabola u = a v^2 at the vertex is 2a; the phantom
    // value at the tangency point is 1, so the tangent-line data profile is
    // k (p - p0)_+^{1/2} with k = 2 sqrt(2) / sqrt(kappa). The half-band
    // filter (1/4pi)|D| = (1/4pi) H d/dp maps that to -(k/8pi) (p-p0)_-^{-1/2}
    // per line, i.e. -k/(4m) after the 2pi/m angular sum.
    let kappa = 2.0 * a;
    let expected = -(2.0 * 2.0f64.sqrt() / kappa.sqrt()) / (4.0 * m as f64);
    report.check(
        "inv_sqrt_coefficient",
        (fit.c / expected - 1.0).abs() < 0.25,
        format!("fitted {:.5} vs curvature law {expected:.5} (within 25%)", fit.c),
    );
    Ok(report)
}

/// Corner at an 18-degree step: log-type peaks along a low horizontal
/// crosscut at the predicted line crossings, with the sector sign rule.
fn fig7(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&["n", "raster_n", "lambda", "m", "crosscut_y"])?;
    let n = cfg.usize("n", 512)?;
    let raster_n = cfg.usize("raster_n", 1024)?;
    let lambda = cfg.f64("lambda", 256.0)?;
    let m = cfg.usize("m", 10)?;
    let y0 = cfg.f64("crosscut_y", -0.7)?;
    let mut report = ExperimentReport::new("fig7");

    let spec = PhantomSpec::corner([0.0, 0.0], 0.0, lambda, 0.5);
    let img = phantom::rasterize(&spec, raster_n, 1.0)?;
    let sino = project(&img, m, 2048, 2.0)?;
    let recon = fbp_direct(&sino, n, 1.0)?.image;
    save_grid(&mut report, &cfg.out_dir, "recon.grid", &recon)?;
    let (coords, values) = io::crosscut_row(&recon, y0);
    io::write_csv_crosscut(&cfg.out_dir.join("crosscut.csv"), &coords, &values)?;
    report.artifacts.push(cfg.out_dir.join("crosscut.csv"));
    let check = conormal::corner_line_check(&recon, &spec, m, y0, 0.02)?;
    let mut table = String::from("x,expected_up,matched,sign_ok\n");
    for c in &check.crossings {
        let _ = writeln!(
            table,
            "{},{},{},{}",
            c.x, c.expected_up as u8, c.matched as u8, c.sign_ok as u8
        );
    }
    save_text(&mut report, &cfg.out_dir, "crossings.csv", &table)?;
    report.check(
        "corner_lines_matched",
        check.matched_fraction >= 0.8,
        format!("matched fraction {:.2} (>= 0.80)", check.matched_fraction),
    );
    report.check(
        "corner_peak_signs",
        check.sign_fraction >= 0.8,
        format!("sign-rule fraction {:.2} (>= 0.80)", check.sign_fraction),
    );
    Ok(report)
}

/// Distance from a point to the convex-edge arc `u = a v^2`, `|v| <= v_max`.
fn distance_to_parabola(x: [f64; 2], center: [f64; 2], a: f64, v_max: f64) -> f64 {
    let (u, v) = (x[0] - center[0], x[1] - center[1]);
    let mut best = f64::INFINITY;
    let samples = 200;
    for i in 0..=samples {
        let t = -v_max + 2.0 * v_max * i as f64 / samples as f64;
        let d = (u - a * t * t).hypot(v - t);
        best = best.min(d);
    }
    best
}

/// Semiclassical convex edge: the band of width 0.9 * 2 pi / (s B)
/// around the edge carries under 1% of the aliasing-artifact energy.
fn fig8(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&[
        "n",
        "half_extent",
        "raster_n",
        "lambda",
        "m",
        "m_dense",
        "a",
        "r_loc",
        "pcount",
        "p_half_extent",
    ])?;
    let n = cfg.usize("n", 1024)?;
    let l = cfg.f64("half_extent", 2.6)?;
    let raster_n = cfg.usize("raster_n", 1024)?;
    let lambda = cfg.f64("lambda", 128.0)?;
    let m = cfg.usize("m", 112)?;
    let m_dense = cfg.usize("m_dense", 300)?;
    let a = cfg.f64("a", 1.5)?;
    let r_loc = cfg.f64("r_loc", 0.05)?;
    let pcount = cfg.usize("pcount", 1024)?;
    let r = cfg.f64("p_half_extent", 1.0)?;
    let s = PI / m as f64;
    let mut report = ExperimentReport::new("fig8");

    let mut spec = PhantomSpec::convex_edge([0.0, 0.0], a, 0.0, lambda, r_loc);
    spec.taper_mu_scale = 0.5;
    let raster = phantom::rasterize(&spec, raster_n, l)?;
    let band = estimate_band_limit(&raster, 1.0, 1e-3)?;
    let sino = project(&raster, m, pcount, r)?;
    let recon = fbp_direct(&sino, n, l)?.image;
    // Dense-angle reference from the same pipeline: shares the offset
    // discretization and edge blur, so the difference isolates the
    // angular aliasing artifacts.
    let sino_dense = project(&raster, m_dense, pcount, r)?;
    let reference = fbp_direct(&sino_dense, n, l)?.image;
    save_grid(&mut report, &cfg.out_dir, "recon.grid", &recon)?;
    save_grid(&mut report, &cfg.out_dir, "reference.grid", &reference)?;
    let artifact = recon.zip(&reference, |x, y| x - y)?;
    save_grid(&mut report, &cfg.out_dir, "artifact.grid", &artifact)?;

    let free_band = 0.9 * 2.0 * PI / (s * band.b);
    let mut near = 0.0f64;
    let mut total = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let (x1, x2) = artifact.coord(i, j);
            let e = artifact.get(i, j).powi(2);
            total += e;
            if distance_to_parabola([x1, x2], spec.center, a, r_loc) <= free_band {
                near += e;
            }
        }
    }
    let fraction = if total > 0.0 { near / total } else { 0.0 };
    report.check(
        "artifact_free_band",
        fraction < 0.01,
        format!(
            "band limit {:.1}, free band width {free_band:.3}: {:.3}% of artifact energy inside (< 1%)",
            band.b,
            100.0 * fraction
        ),
    );
    // Sanity: the artifact field carries real energy relative to the
    // reference (the band check must not pass vacuously).
    let rel = artifact.l2_norm() / reference.l2_norm();
    report.check(
        "artifacts_present",
        rel > 0.02,
        format!("artifact-to-reference energy ratio {rel:.4} (> 0.02)"),
    );
    Ok(report)
}

/// Disk under the interpolation method: the angular-convolution link to
/// the direct method, and the tangential displacement band of the
/// measured artifact peaks.
fn fig9(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&[
        "n",
        "half_extent",
        "raster_n",
        "lambda",
        "m",
        "m_dense",
        "radius",
        "center_x",
        "center_y",
        "upsample",
        "pcount",
        "p_half_extent",
    ])?;
    let n = cfg.usize("n", 512)?;
    let l = cfg.f64("half_extent", 1.2)?;
    let raster_n = cfg.usize("raster_n", 512)?;
    let lambda = cfg.f64("lambda", 64.0)?;
    let m = cfg.usize("m", 36)?;
    let m_dense = cfg.usize("m_dense", 180)?;
    let radius = cfg.f64("radius", 0.3)?;
    let center = [cfg.f64("center_x", 0.1)?, cfg.f64("center_y", 0.05)?];
    let upsample = cfg.usize("upsample", 8)?;
    let pcount = cfg.usize("pcount", 1024)?;
    let r = cfg.f64("p_half_extent", 1.0)?;
    let mut report = ExperimentReport::new("fig9");

    let spec = PhantomSpec::disk(center, radius, lambda);
    let raster = phantom::rasterize(&spec, raster_n, l)?;
    let sino = project(&raster, m, pcount, r)?;
    let direct = fbp_direct(&sino, n, l)?.image;
    let interp = fbp_interp(&sino, n, l, Kernel1D::Lanczos3, upsample)?.image;
    save_grid(&mut report, &cfg.out_dir, "direct.grid", &direct)?;
    save_grid(&mut report, &cfg.out_dir, "interp.grid", &interp)?;

    let conv = verify_convolution_identity(&direct, &interp, m, upsample, Kernel1D::Lanczos3)?;
    report.check(
        "angular_convolution_identity",
        conv.global_l2_rel < 0.02,
        format!("interp vs kernel-convolved direct l2_rel {:.4} (< 0.02)", conv.global_l2_rel),
    );

    // Interpolation-method artifacts versus the displacement band. The
    // reference carries the identical angular blur but no aliasing: the
    // dense sinogram convolved in angle with the same coarse-step kernel,
    // then reconstructed, so the difference isolates the displaced
    // artifacts. The grid half-extent is chosen small enough that the
    // direct method's plain replicas (at distance at least 2 m / B from
    // the tangency points) stay off-grid.
    let sino_dense = project(&raster, m_dense, pcount, r)?;
    let blurred = angular_convolve_sinogram(&sino_dense, m, Kernel1D::Lanczos3)?;
    let reference = fbp_direct(&blurred, n, l)?.image;
    let diff = interp.zip(&reference, |x, y| x - y)?;
    save_grid(&mut report, &cfg.out_dir, "artifact.grid", &diff)?;
    let metrics = grid::compare(&interp, &reference, 0.3)?;
    let cell = 2.0 * l / n as f64;
    let guard = l - 4.0 * cell;
    let circle_samples = 720usize;
    let mut checked = 0usize;
    let mut inside_band = 0usize;
    let mut worst = 0.0f64;
    for peak in &metrics.peak_list {
        if peak.x[0].abs() > guard || peak.x[1].abs() > guard {
            continue;
        }
        checked += 1;
        let mut ok = false;
        let mut best_gap = f64::INFINITY;
        for i in 0..circle_samples {
            let phi = 2.0 * PI * i as f64 / circle_samples as f64;
            let normal = [phi.cos(), phi.sin()];
            let x = [center[0] + radius * normal[0], center[1] + radius * normal[1]];
            let tangent = [-normal[1], normal[0]];
            let rel = [peak.x[0] - x[0], peak.x[1] - x[1]];
            let off_line = (rel[0] * normal[0] + rel[1] * normal[1]).abs();
            if off_line > 2.0 * cell {
                continue;
            }
            let along = rel[0] * tangent[0] + rel[1] * tangent[1];
            let pt = PhaseSpacePoint::new(x, normal)?;
            for interval in interp_displacement_union(&pt, 3)? {
                // The k-interval holds the signed displacement in the
                // +tangent orientation for one frequency sign and its
                // negation for the other; check both. Lanczos-3's angular
                // transfer extends over twice the Nyquist band, which
                // produces a second aliased copy at doubled displacement,
                // so the doubled intervals count as well.
                for scale in [1.0f64, 2.0] {
                    for sign in [1.0f64, -1.0] {
                        let (lo, hi) = (sign * scale * interval.lo, sign * scale * interval.hi);
                        let (lo, hi) = (lo.min(hi) - 2.0 * cell, lo.max(hi) + 2.0 * cell);
                        if (lo..=hi).contains(&along) {
                            ok = true;
                        } else {
                            best_gap = best_gap.min((along - lo).abs().min((along - hi).abs()));
                        }
                    }
                }
            }
            if ok {
                break;
            }
        }
        if ok {
            inside_band += 1;
        } else {
            worst = worst.max(best_gap);
        }
    }
    report.check(
        "displacement_band",
        checked > 0 && inside_band == checked,
        format!(
            "{inside_band}/{checked} artifact peaks inside the tangential displacement band \
             (worst outlier gap {worst:.4})"
        ),
    );
    Ok(report)
}

/// Convolve a dense sinogram in the angle variable with an interpolation
/// kernel whose unit is the coarse step pi/m, using the full-circle
/// extension g(phi + pi, p) = g(phi, -p). The result has the same angular
/// blur the interpolation method applies at the coarse step.
fn angular_convolve_sinogram(sino: &Sinogram, m: usize, kernel: Kernel1D) -> Result<Sinogram> {
    let md = sino.m();
    let pc = sino.p_count();
    if m == 0 || md % m != 0 {
        return Err(Error::bad_argument(
            "dense angle count must be a positive multiple of the coarse count",
        ));
    }
    let ratio = (md / m) as i64;
    let taps = kernel.support_half_width().ceil() as i64 * ratio;
    let mut weights = Vec::new();
    let mut total = 0.0;
    for t in -taps..=taps {
        let w = kernel.eval(t as f64 / ratio as f64);
        weights.push((t, w));
        total += w;
    }
    let mut values = vec![0.0; md * pc];
    for j in 0..md as i64 {
        for &(t, w) in &weights {
            let src = (j - t).rem_euclid(2 * md as i64) as usize;
            let (row, flip) = if src < md { (src, false) } else { (src - md, true) };
            let row = sino.row(row);
            let out = &mut values[j as usize * pc..(j as usize + 1) * pc];
            if flip {
                for i in 0..pc {
                    out[i] += w / total * row[pc - 1 - i];
                }
            } else {
                for i in 0..pc {
                    out[i] += w / total * row[i];
                }
            }
        }
    }
    sino.with_values(values)
}

/// Nyquist threshold sweep on a wave packet: error under 1% at 0.8x the
/// threshold step, blowing up by over 10x at 2x the threshold.
fn nyquist_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&[
        "n",
        "half_extent",
        "raster_n",
        "h",
        "freq",
        "support_radius",
        "pcount",
        "p_half_extent",
    ])?;
    let n = cfg.usize("n", 256)?;
    let l = cfg.f64("half_extent", 1.2)?;
    let raster_n = cfg.usize("raster_n", 512)?;
    let h = cfg.f64("h", 0.01)?;
    let freq = cfg.f64("freq", 40.0)?;
    let support_radius = cfg.f64("support_radius", 0.4)?;
    let pcount = cfg.usize("pcount", 1024)?;
    let r = cfg.f64("p_half_extent", 1.0)?;
    let mut report = ExperimentReport::new("nyquist-sweep");

    let spec = PhantomSpec::coherent([0.0, 0.0], [0.0, freq * h], h, f64::INFINITY);
    let raster = phantom::rasterize(&spec, raster_n, l)?;
    let reference = phantom::rasterize(&spec, n, l)?;
    let band = estimate_band_limit(&raster, 1.0, 1e-3)?;
    let threshold = PI / (support_radius * band.b);
    // Steps at 0.8x and 2x the critical angular step (rounded toward
    // the safe side for the sub-critical case).
    let m_fine = (PI / (0.8 * threshold)).ceil() as usize;
    let m_coarse = (PI / (2.0 * threshold)).floor().max(2.0) as usize;
    let mut errors = Vec::new();
    let mut table = String::from("m,s_over_threshold,l2_rel\n");
    for m in [m_fine, m_coarse] {
        let sino = project(&raster, m, pcount, r)?;
        let recon = fbp_direct(&sino, n, l)?.image;
        let err = recon.l2_rel_on_disk(&reference, [0.0, 0.0], support_radius)?;
        let _ = writeln!(table, "{m},{:.4},{err:.6}", (PI / m as f64) / threshold);
        errors.push(err);
        save_grid(&mut report, &cfg.out_dir, &format!("recon_m{m}.grid"), &recon)?;
    }
    save_text(&mut report, &cfg.out_dir, "sweep.csv", &table)?;
    report.check(
        "sub_nyquist_faithful",
        errors[0] < 0.01,
        format!(
            "band limit {:.1}, m = {m_fine}: l2_rel {:.4} on B(0, {support_radius}) (< 0.01)",
            band.b, errors[0]
        ),
    );
    report.check(
        "super_nyquist_aliased",
        errors[1] > 10.0 * errors[0],
        format!("m = {m_coarse}: l2_rel {:.4} (> 10x {:.4})", errors[1], errors[0]),
    );
    Ok(report)
}

/// Refocusing under the interpolation method: artifacts near an
/// off-origin packet collapse once the offsets are re-centered there.
fn refocus_demo(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_known(&[
        "n",
        "half_extent",
        "raster_n",
        "h",
        "freq",
        "m",
        "x0",
        "ball_radius",
        "upsample",
        "pcount",
        "p_half_extent",
    ])?;
    let n = cfg.usize("n", 256)?;
    let l = cfg.f64("half_extent", 1.2)?;
    let raster_n = cfg.usize("raster_n", 512)?;
    let h = cfg.f64("h", 0.01)?;
    let freq = cfg.f64("freq", 72.0)?;
    let m = cfg.usize("m", 36)?;
    let x0 = [cfg.f64("x0", 0.2)?, 0.0];
    let ball = cfg.f64("ball_radius", 0.2)?;
    let upsample = cfg.usize("upsample", 8)?;
    let pcount = cfg.usize("pcount", 1024)?;
    let r = cfg.f64("p_half_extent", 1.0)?;
    let mut report = ExperimentReport::new("refocus-demo");

    // Packet at x0 oscillating along (0, 1): its tangent line (the
    // horizontal through x0) carries the interpolation-method artifacts
    // at signed distances -(x0 . xi_perp) [2k/(2k+1), 2k/(2k-1)].
    let spec = PhantomSpec::coherent(x0, [0.0, freq * h], h, f64::INFINITY);
    let raster = phantom::rasterize(&spec, raster_n, l)?;
    let sino = project(&raster, m, pcount, r)?;
    let reference = phantom::rasterize(&spec, n, l)?;

    let plain = fbp_interp(&sino, n, l, Kernel1D::Lanczos3, upsample)?.image;
    save_grid(&mut report, &cfg.out_dir, "interp.grid", &plain)?;
    let diff_plain = plain.zip(&reference, |x, y| x - y)?;
    let before = diff_plain.energy_in_disk(x0, ball);

    // Refocused run: offsets re-centered at x0, so the reconstruction
    // comes out translated by -x0; compare against the packet moved to
    // the origin.
    let refocused = refocus(&sino, x0)?;
    let spec_centered = PhantomSpec::coherent([0.0, 0.0], [0.0, freq * h], h, f64::INFINITY);
    let reference_centered = phantom::rasterize(&spec_centered, n, l)?;
    let focused = fbp_interp(&refocused, n, l, Kernel1D::Lanczos3, upsample)?.image;
    save_grid(&mut report, &cfg.out_dir, "interp_refocused.grid", &focused)?;
    let diff_focused = focused.zip(&reference_centered, |x, y| x - y)?;
    let after = diff_focused.energy_in_disk([0.0, 0.0], ball);

    let drop = before / after.max(f64::MIN_POSITIVE);
    report.check(
        "refocusing_clears_local_artifacts",
        drop >= 5.0,
        format!("artifact energy near the packet {before:.3e} -> {after:.3e} (drop {drop:.1}x >= 5x)"),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_key_value_text() {
        let cfg = ExperimentConfig::parse(
            "# comment\nexperiment = fig5\nout_dir = /tmp/x\n\nm = 18 # trailing\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, "fig5");
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.usize("m", 0).unwrap(), 18);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("out_dir = /tmp/x\n").is_err(), "missing experiment");
        assert!(ExperimentConfig::parse("experiment = fig5\n").is_err(), "missing out_dir");
        assert!(
            ExperimentConfig::parse("experiment = nope\nout_dir = /tmp/x\n").is_err(),
            "unknown experiment"
        );
        assert!(
            ExperimentConfig::parse("experiment = fig5\nexperiment = fig6\nout_dir = x\n")
                .is_err(),
            "duplicate key"
        );
        assert!(
            ExperimentConfig::parse("experiment = fig5\nout_dir = x\njust a line\n").is_err(),
            "not key = value"
        );
    }

    #[test]
    fn unknown_keys_are_rejected_by_runners() {
        let cfg = ExperimentConfig::parse(
            "experiment = fig5\nout_dir = /tmp/radonlab-unknown-key\nwhatever = 3\n",
        )
        .unwrap();
        let err = run_experiment(&cfg).unwrap_err();
        assert!(format!("{err}").contains("whatever"));
    }

    #[test]
    fn refocus_demo_runs_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse(&format!(
            "experiment = refocus-demo\nout_dir = {}\n",
            dir.path().display()
        ))
        .unwrap();
        let report = run_experiment(&cfg).unwrap();
        assert!(dir.path().join("summary.txt").exists());
        assert!(dir.path().join("interp.grid").exists());
        assert!(report.all_passed(), "{}", report.summary());
    }
}
