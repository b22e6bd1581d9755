//! End-to-end acceptance gate for the angular-undersampling laboratory.
//!
//! Twelve numbered criteria cover the forward projector, the two discrete
//! filtered-backprojection methods, the exact Fourier-multiplier form, the
//! geometric artifact prediction, the Nyquist threshold, the displacement
//! band of the interpolation method, refocusing, the edge-singularity
//! coefficient laws, and the shipped experiment suite. Every tolerance is
//! pinned here; the test prints one PASS/FAIL line per criterion and fails
//! if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use radonlab::experiments::{run_experiment, ExperimentConfig, ExperimentReport};
use radonlab::filtering::poisson_check;
use radonlab::grid::{self, ImageGrid};
use radonlab::phantom::{self, PhantomSpec};
use radonlab::radon::{fourier_slice_check, radon, ProjectionConfig, RayInterp};
use radonlab::recon::{fbp_direct, fbp_multiplier};

struct Gate {
    lines: Vec<String>,
    failures: usize,
}

impl Gate {
    fn new() -> Self {
        Gate { lines: Vec::new(), failures: 0 }
    }

    fn record(&mut self, number: usize, label: &str, passed: bool, detail: String) {
        let verdict = if passed { "PASS" } else { "FAIL" };
        let line = format!("criterion {number:2} {verdict} {label}: {detail}");
        println!("{line}");
        self.lines.push(line);
        if !passed {
            self.failures += 1;
        }
    }
}

fn proj(m: usize, p_count: usize, r: f64) -> ProjectionConfig {
    ProjectionConfig { m, p_count, p_half_extent: r, ray_interp: RayInterp::Cubic }
}

fn gaussian_image(n: usize, sigma: f64) -> ImageGrid {
    ImageGrid::from_fn(n, 1.0, |x1, x2| {
        (-(x1 * x1 + x2 * x2) / (2.0 * sigma * sigma)).exp()
    })
    .unwrap()
}

/// Fourier slice theorem: projections of a Gaussian (sigma = 0.1, n = 512,
/// m = 36) have 1-D spectra matching the radial slices of the 2-D spectrum
/// to relative l2 error < 1e-3, in under 5 seconds.
fn criterion_1(gate: &mut Gate) {
    let start = Instant::now();
    let img = gaussian_image(512, 0.1);
    let metrics = fourier_slice_check(&img, &proj(36, 1024, 1.0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    gate.record(
        1,
        "fourier_slice",
        metrics.l2_rel < 1e-3 && secs < 5.0,
        format!("slice l2_rel {:.2e} (< 1e-3), {:.2} s (< 5 s)", metrics.l2_rel, secs),
    );
}

/// Analytic sinogram oracles: Gaussian projections match
/// sigma sqrt(2 pi) exp(-p^2 / 2 sigma^2) to 1e-3 of the peak, disk
/// projections match the chord length 2 sqrt(1 - p^2) to 1% pointwise.
fn criterion_2(gate: &mut Gate) {
    let sigma = 0.1;
    let img = gaussian_image(512, sigma);
    let sino = radon(&img, &proj(8, 1024, 1.0)).unwrap();
    let peak = sigma * (2.0 * PI).sqrt();
    let mut worst_gauss = 0.0f64;
    for j in 0..sino.m() {
        for i in 0..sino.p_count() {
            let p = sino.p_coord(i);
            let expect = peak * (-p * p / (2.0 * sigma * sigma)).exp();
            worst_gauss = worst_gauss.max((sino.row(j)[i] - expect).abs() / peak);
        }
    }

    let disk = phantom::disk_phantom(1024, 1.2, [0.0, 0.0], 1.0, 50.0).unwrap();
    let sino = radon(&disk, &proj(8, 2048, 1.15)).unwrap();
    let mut worst_disk = 0.0f64;
    for j in 0..sino.m() {
        for i in 0..sino.p_count() {
            let p = sino.p_coord(i);
            if p.abs() < 0.9 {
                let expect = 2.0 * (1.0 - p * p).sqrt();
                worst_disk = worst_disk.max((sino.row(j)[i] - expect).abs() / expect);
            }
        }
    }
    gate.record(
        2,
        "sinogram_oracles",
        worst_gauss < 1e-3 && worst_disk < 1e-2,
        format!("gaussian rel err {worst_gauss:.2e} (< 1e-3), disk rel err {worst_disk:.2e} (< 1e-2)"),
    );
}

/// Angular Poisson summation: the 2m-point trapezoid rule on the circle is
/// exact (residual < 1e-12) for trigonometric monomials of degree < 2m,
/// and e^{i 2m phi} aliases onto the k = +-1 terms with weight exactly
/// 2 pi.
fn criterion_3(gate: &mut Gate) {
    let m = 36usize;
    let samples = |q: i64| -> Vec<Complex64> {
        (0..2 * m)
            .map(|k| (Complex64::i() * (q as f64) * PI * k as f64 / m as f64).exp())
            .collect()
    };
    let coeff = |q: i64| move |n: i64| if n == q { Complex64::new(2.0 * PI, 0.0) } else { Complex64::ZERO };

    let mut worst_exact = 0.0f64;
    for q in [0i64, 1, 5, -17, 36, -71, 71] {
        let res = poisson_check(&samples(q), coeff(q), 0).unwrap();
        worst_exact = worst_exact.max(res[0]);
    }
    let res = poisson_check(&samples(2 * m as i64), coeff(2 * m as i64), 1).unwrap();
    let alias_weight = res[0];
    gate.record(
        3,
        "angular_poisson_summation",
        worst_exact < 1e-12 && (alias_weight - 2.0 * PI).abs() < 1e-9 && res[1] < 1e-12,
        format!(
            "degree < 2m residual {worst_exact:.1e} (< 1e-12), e^(i 2m phi) alias weight {alias_weight:.9} (= 2 pi), corrected residual {:.1e}",
            res[1]
        ),
    );
}

/// The direct reconstruction of a coherent state equals the exact Fourier
/// multiplier applied to the ideal reconstruction, i.e. the image plus its
/// |k| <= 2 canonically shifted replicas, to relative l2 error < 0.05 on a
/// 256^2 grid, in under 10 seconds. The packet is scaled to desk size:
/// h = 0.06 with |xi_0| = 72/h, so s |xi_0| sigma-width products match the
/// unit-h regime.
fn criterion_4(gate: &mut Gate) {
    let start = Instant::now();
    let (n, l, m, h) = (256usize, 2.4f64, 36usize, 0.06f64);
    let spec = PhantomSpec::coherent([0.0, 0.0], [0.0, 72.0 * h], h, f64::INFINITY);
    let raster = phantom::rasterize(&spec, 512, l).unwrap();
    let sino = radon(&raster, &proj(m, 2048, l)).unwrap();
    let direct = fbp_direct(&sino, n, l).unwrap().image;
    // Twice-padded torus so replica tails leave the window instead of
    // wrapping around.
    let padded = phantom::rasterize(&spec, 4 * n, 2.0 * l).unwrap();
    let mult_padded = fbp_multiplier(&padded, m, 2).unwrap();
    let mult = ImageGrid::from_fn(n, l, |x, y| mult_padded.sample_cubic(x, y)).unwrap();
    let err = grid::compare(&direct, &mult, 0.5).unwrap().l2_rel;
    let secs = start.elapsed().as_secs_f64();
    gate.record(
        4,
        "direct_equals_multiplier",
        err < 0.05 && secs < 10.0,
        format!("l2_rel {err:.4} (< 0.05), {secs:.2} s (< 10 s)"),
    );
}

fn load_config(name: &str, out_root: &Path) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.cfg"));
    let mut cfg = ExperimentConfig::read(&path).unwrap();
    cfg.out_dir = out_root.join(name);
    cfg
}

fn find<'a>(report: &'a ExperimentReport, name: &str) -> &'a radonlab::experiments::CheckResult {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("experiment {} has no check named {name}", report.name))
}

fn passed_all(report: &ExperimentReport, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        let c = find(report, name);
        ok &= c.passed;
        parts.push(format!("[{}] {}", report.name, c.detail));
    }
    (ok, parts.join("; "))
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_3(&mut gate);
    criterion_4(&mut gate);

    // Criteria 5-12 are read off the shipped experiment suite, which is run
    // once in full, timed, into a scratch directory.
    let scratch = tempfile::tempdir().unwrap();
    let names = [
        "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "nyquist-sweep", "refocus-demo",
    ];
    let suite_start = Instant::now();
    let mut reports = std::collections::BTreeMap::new();
    for name in names {
        let cfg = load_config(name, scratch.path());
        reports.insert(name, run_experiment(&cfg).unwrap());
    }
    let suite_secs = suite_start.elapsed().as_secs_f64();

    // 5. Replica geometry: peaks within 2 cells of the canonical-relation
    //    prediction x_0 +- (2 pi / (s |xi_0|)) xi_0^perp / |xi_0|, and the
    //    measured distance shrinks by 1/1.3 (within 5%) when the packet
    //    frequency rises by 1.3.
    let (ok, detail) = passed_all(
        &reports["fig4"],
        &[
            "replica_peaks_base",
            "replica_peaks_raised",
            "distance_scales_inversely_with_frequency",
        ],
    );
    gate.record(5, "replica_geometry", ok, detail);

    // 6. Nyquist threshold: angular step at 0.8x the threshold pi/(R B)
    //    reconstructs to relative l2 error < 0.01 on B(0, R); at 2x the
    //    threshold the error exceeds 10x that value.
    let (ok, detail) = passed_all(
        &reports["nyquist-sweep"],
        &["sub_nyquist_faithful", "super_nyquist_aliased"],
    );
    gate.record(6, "nyquist_threshold", ok, detail);

    // 7. Artifact-free band around a convex edge: < 1% of artifact energy
    //    within distance 0.9 * 2 pi / (s B) of the edge (desk-scale
    //    surrogate of the full-resolution experiment).
    let (ok, detail) = passed_all(
        &reports["fig8"],
        &["artifact_free_band", "artifacts_present"],
    );
    gate.record(7, "artifact_free_band", ok, detail);

    // 8. Angular convolution identity: the interpolation-method
    //    reconstruction (lanczos3, 5 degree step, disk phantom) equals the
    //    direct one convolved in angle with the kernel, to relative l2
    //    error < 0.02 on polar rings.
    let (ok, detail) = passed_all(&reports["fig9"], &["angular_convolution_identity"]);
    gate.record(8, "angular_convolution_identity", ok, detail);

    // 9. Edge-singularity coefficients: flat-edge principal-value
    //    coefficient within 20% of 1/(2 pi m); convex inverse-square-root
    //    coefficient within 25% of the curvature law with kappa = 2a;
    //    corner log peaks matched >= 80% with the tangent-cone sign rule;
    //    1/m scaling across m in {12, 18, 36} within 15%.
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, checks) in [
        ("fig5", vec!["pv_coefficient", "coefficient_scales_as_1_over_m"]),
        ("fig6", vec!["inv_sqrt_coefficient"]),
        ("fig7", vec!["corner_lines_matched", "corner_peak_signs"]),
    ] {
        let (o, d) = passed_all(&reports[name], &checks);
        ok &= o;
        parts.push(d);
    }
    gate.record(9, "singularity_coefficients", ok, parts.join("; "));

    // 10. Interpolation-method displacement: every artifact peak's signed
    //     tangential distance lies in the k-union of
    //     [2k/(2k+1), 2k/(2k-1)]-scaled intervals (plus their doubled
    //     copies from the kernel's out-of-band transfer), dilated by 2
    //     cells.
    let (ok, detail) = passed_all(&reports["fig9"], &["displacement_band"]);
    gate.record(10, "interp_displacement_band", ok, detail);

    // 11. Refocusing: artifact energy within B(x_0, 0.2) drops >= 5x after
    //     refocusing the undersampled coherent-state reconstruction at x_0.
    let (ok, detail) = passed_all(
        &reports["refocus-demo"],
        &["refocusing_clears_local_artifacts"],
    );
    gate.record(11, "refocusing", ok, detail);

    // 12. The whole experiment suite finishes in < 5 minutes with every
    //     embedded check green.
    let all_green = reports.values().all(|r| r.all_passed());
    gate.record(
        12,
        "experiment_suite",
        all_green && suite_secs < 300.0,
        format!(
            "8 experiments, {} checks all green: {all_green}, {suite_secs:.1} s (< 300 s)",
            reports.values().map(|r| r.checks.len()).sum::<usize>()
        ),
    );

    assert_eq!(
        gate.failures,
        0,
        "{} acceptance criteria failed:\n{}",
        gate.failures,
        gate.lines.join("\n")
    );
}
