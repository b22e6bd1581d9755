//! Command-line front end: every pipeline stage as a thin subcommand shim
//! plus `run <config>` for the shipped experiments.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use radonlab::aliasing::{self, ArtifactPrediction, PredictedArtifact, Window};
use radonlab::conormal::{self, SingularityKind};
use radonlab::error::{Error, Result};
use radonlab::experiments::{run_experiment, ExperimentConfig};
use radonlab::filtering::{ramp_filter, Kernel1D};
use radonlab::grid;
use radonlab::io;
use radonlab::phantom::{self, PhantomSpec};
use radonlab::radon::{self, ProjectionConfig, PsiSpec, RayInterp};
use radonlab::recon;

#[derive(Parser)]
#[command(name = "radonlab", version, about = "Parallel-beam Radon transform laboratory")]
struct Cli {
    /// Worker threads (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Coherent,
    FlatEdge,
    ConvexEdge,
    Corner,
    Disk,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Interp,
    Multiplier,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Sinc,
    Lanczos3,
    Lanczos3Stretched,
}

impl KernelArg {
    fn to_kernel(self) -> Kernel1D {
        match self {
            KernelArg::Sinc => Kernel1D::Sinc,
            KernelArg::Lanczos3 => Kernel1D::Lanczos3,
            KernelArg::Lanczos3Stretched => Kernel1D::Lanczos3Stretched,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FitKindArg {
    PvRecip,
    InvSqrtMinus,
    LogAbs,
}

/// Phantom geometry flags shared by `phantom` and `predict`.
#[derive(Args)]
struct PhantomArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Center as `x,y`.
    #[arg(long, default_value = "0,0")]
    center: String,
    /// Coherent-state frequency vector as `xi1,xi2` (times 1/h).
    #[arg(long, default_value = "0,1")]
    xi0: String,
    /// Semiclassical parameter of the coherent state.
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Edge sharpness of the smoothed step.
    #[arg(long, default_value_t = 500.0)]
    lambda: f64,
    /// Convex edge curvature parameter (edge is u = a v^2).
    #[arg(long, default_value_t = 1.5)]
    a: f64,
    /// Orientation angle of the edge normal, radians.
    #[arg(long, default_value_t = 0.0)]
    angle: f64,
    /// Localization radius (omit for no taper).
    #[arg(long)]
    r_loc: Option<f64>,
    /// Disk radius.
    #[arg(long, default_value_t = 0.3)]
    radius: f64,
}

impl PhantomArgs {
    fn to_spec(&self) -> Result<PhantomSpec> {
        let center = parse_pair(&self.center, "center")?;
        let xi0 = parse_pair(&self.xi0, "xi0")?;
        let r_loc = self.r_loc.unwrap_or(f64::INFINITY);
        Ok(match self.kind {
            KindArg::Coherent => PhantomSpec::coherent(center, xi0, self.h, r_loc),
            KindArg::FlatEdge => PhantomSpec::flat_edge(center, self.angle, self.lambda, {
                if r_loc.is_finite() { r_loc } else { 0.5 }
            }),
            KindArg::ConvexEdge => PhantomSpec::convex_edge(
                center,
                self.a,
                self.angle,
                self.lambda,
                if r_loc.is_finite() { r_loc } else { 0.5 },
            ),
            KindArg::Corner => PhantomSpec::corner(center, self.angle, self.lambda, {
                if r_loc.is_finite() { r_loc } else { 0.5 }
            }),
            KindArg::Disk => PhantomSpec::disk(center, self.radius, self.lambda),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a phantom onto a grid.
    Phantom {
        #[command(flatten)]
        shape: PhantomArgs,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        half_extent: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write an 8-bit preview image here.
        #[arg(long)]
        preview: Option<PathBuf>,
    },
    /// Project a grid into a sinogram.
    Sinogram {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1024)]
        pcount: usize,
        #[arg(long, default_value_t = 1.0)]
        p_half_extent: f64,
        /// Direction weight: `one`, `indicator:lo,hi`, or `raised-cosine:lo,hi`
        /// (angles in radians).
        #[arg(long, default_value = "one")]
        psi: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ramp-filter a sinogram.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct: direct or interpolation method from a sinogram, or the
    /// exact Fourier-multiplier form from a rasterized weighted phantom.
    Recon {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        half_extent: f64,
        #[arg(long, value_enum, default_value_t = KernelArg::Lanczos3)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 8)]
        upsample: usize,
        /// Replica orders kept by the multiplier form.
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        /// Angle count for the multiplier form.
        #[arg(long)]
        m: Option<usize>,
        /// Refocus the offsets at `x,y` before reconstructing.
        #[arg(long)]
        refocus: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        preview: Option<PathBuf>,
    },
    /// Predict aliasing-artifact locations from the shift law.
    Predict {
        #[command(flatten)]
        shape: PhantomArgs,
        /// Angle count (the angular step is pi/m).
        #[arg(long)]
        m: usize,
        /// Half-extent of the centered window that decides `inside`.
        #[arg(long)]
        window: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Match a prediction table against reconstruction difference peaks.
    Verify {
        #[arg(long)]
        prediction: PathBuf,
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = 0.4)]
        threshold: f64,
        #[arg(long)]
        match_radius: f64,
    },
    /// Fit an edge-singularity profile to a crosscut.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: FitKindArg,
        #[arg(long)]
        p0: f64,
        #[arg(long)]
        window: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two grids: relative errors and difference peaks.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Extract a 1-D crosscut from a grid.
    Crosscut {
        #[arg(long)]
        input: PathBuf,
        /// Horizontal cut at this x2.
        #[arg(long, conflicts_with_all = ["col", "angle"])]
        row: Option<f64>,
        /// Vertical cut at this x1.
        #[arg(long, conflicts_with = "angle")]
        col: Option<f64>,
        /// Cut along this direction (radians) through `origin`.
        #[arg(long)]
        angle: Option<f64>,
        #[arg(long, default_value = "0,0")]
        origin: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a shipped experiment config end to end.
    Run {
        config: PathBuf,
    },
}

fn parse_pair(text: &str, what: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::bad_argument(format!("{what}: expected `x,y`, got `{text}`")));
    }
    let x = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::bad_argument(format!("{what}: bad number `{}`", parts[0])))?;
    let y = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::bad_argument(format!("{what}: bad number `{}`", parts[1])))?;
    Ok([x, y])
}

fn parse_psi(text: &str) -> Result<PsiSpec> {
    if text == "one" {
        return Ok(PsiSpec::One);
    }
    if text == "zero" {
        return Ok(PsiSpec::Zero);
    }
    if let Some(rest) = text.strip_prefix("indicator:") {
        let [lo, hi] = parse_pair(rest, "psi indicator")?;
        return Ok(PsiSpec::Indicator { lo, hi });
    }
    if let Some(rest) = text.strip_prefix("raised-cosine:") {
        let [lo, hi] = parse_pair(rest, "psi raised-cosine")?;
        return Ok(PsiSpec::RaisedCosine { lo, hi });
    }
    Err(Error::bad_argument(format!("unknown direction weight `{text}`")))
}

fn read_prediction_table(path: &PathBuf) -> Result<ArtifactPrediction> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("k,x,y,xi1,xi2,inside") => {}
        _ => return Err(Error::format("prediction table must start with k,x,y,xi1,xi2,inside")),
    }
    let mut entries = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::format("prediction table row needs 6 fields"));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::format(format!("bad prediction field `{s}`")))
        };
        entries.push(PredictedArtifact {
            k: num(f[0])? as i64,
            x: [num(f[1])?, num(f[2])?],
            xi: [num(f[3])?, num(f[4])?],
            inside: num(f[5])? != 0.0,
        });
    }
    Ok(ArtifactPrediction { entries })
}

fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    let say = |msg: String| {
        if !quiet {
            println!("{msg}");
        }
    };
    match cli.command {
        Command::Phantom { shape, n, half_extent, out, preview } => {
            let spec = shape.to_spec()?;
            let img = phantom::rasterize(&spec, n, half_extent)?;
            io::write_grid(&out, &img)?;
            if let Some(p) = preview {
                let lo = img.values().iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = img.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                io::write_image8(&p, &img, lo, if hi > lo { hi } else { lo + 1.0 })?;
            }
            say(format!("wrote {}", out.display()));
        }
        Command::Sinogram { input, m, pcount, p_half_extent, psi, out } => {
            let img = io::read_grid(&input)?;
            let cfg = ProjectionConfig {
                m,
                p_count: pcount,
                p_half_extent,
                ray_interp: RayInterp::Cubic,
            };
            let mut sino = radon::radon(&img, &cfg)?;
            let psi = parse_psi(&psi)?;
            if !matches!(psi, PsiSpec::One) {
                sino = radon::apply_psi(&sino, &psi)?;
            }
            io::write_sino(&out, &sino)?;
            say(format!("wrote {}", out.display()));
        }
        Command::Filter { input, out } => {
            let sino = io::read_sino(&input)?;
            io::write_sino(&out, &ramp_filter(&sino)?)?;
            say(format!("wrote {}", out.display()));
        }
        Command::Recon {
            input,
            method,
            n,
            half_extent,
            kernel,
            upsample,
            kmax,
            m,
            refocus,
            out,
            preview,
        } => {
            let img = match method {
                MethodArg::Multiplier => {
                    let f_psi = io::read_grid(&input)?;
                    let m = m.ok_or_else(|| {
                        Error::bad_argument("the multiplier form needs --m (angle count)")
                    })?;
                    recon::fbp_multiplier(&f_psi, m, kmax)?
                }
                MethodArg::Direct | MethodArg::Interp => {
                    let mut sino = io::read_sino(&input)?;
                    if let Some(x0) = &refocus {
                        sino = recon::refocus(&sino, parse_pair(x0, "refocus")?)?;
                    }
                    match method {
                        MethodArg::Direct => recon::fbp_direct(&sino, n, half_extent)?.image,
                        _ => recon::fbp_interp(
                            &sino,
                            n,
                            half_extent,
                            kernel.to_kernel(),
                            upsample,
                        )?
                        .image,
                    }
                }
            };
            io::write_grid(&out, &img)?;
            if let Some(p) = preview {
                let lo = img.values().iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = img.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                io::write_image8(&p, &img, lo, if hi > lo { hi } else { lo + 1.0 })?;
            }
            say(format!("wrote {}", out.display()));
        }
        Command::Predict { shape, m, window, out } => {
            let spec = shape.to_spec()?;
            let pred =
                aliasing::predict_artifacts(&spec, PI / m as f64, &Window::centered(window), 1e-9)?;
            std::fs::write(&out, pred.to_table())?;
            say(format!(
                "wrote {} ({} predictions inside the window)",
                out.display(),
                pred.inside().count()
            ));
        }
        Command::Verify { prediction, recon: recon_path, reference, threshold, match_radius } => {
            let pred = read_prediction_table(&prediction)?;
            let recon_img = io::read_grid(&recon_path)?;
            let reference = io::read_grid(&reference)?;
            let report =
                aliasing::verify_artifacts(&pred, &recon_img, &reference, threshold, match_radius)?;
            println!(
                "matched_fraction {:.4}\nunmatched_peaks {}",
                report.matched_fraction(match_radius),
                report.unmatched.len()
            );
            for (e, d) in pred.inside().zip(&report.distances) {
                match d {
                    Some(d) => println!("k {} at ({:.4}, {:.4}): distance {:.5}", e.k, e.x[0], e.x[1], d),
                    None => println!("k {} at ({:.4}, {:.4}): no peak", e.k, e.x[0], e.x[1]),
                }
            }
        }
        Command::Fit { input, kind, p0, window, out } => {
            let (coords, values) = io::read_csv_crosscut(&input)?;
            let kind = match kind {
                FitKindArg::PvRecip => SingularityKind::PvRecip,
                FitKindArg::InvSqrtMinus => SingularityKind::InvSqrtMinus,
                FitKindArg::LogAbs => SingularityKind::LogAbs,
            };
            let fit = conormal::fit_singularity(&coords, &values, kind, p0, window)?;
            let table = format!("{}\n{}\n", conormal::FIT_TABLE_HEADER, fit.to_table_row());
            if let Some(out) = out {
                std::fs::write(&out, &table)?;
                say(format!("wrote {}", out.display()));
            } else {
                print!("{table}");
            }
        }
        Command::Compare { a, b, threshold } => {
            let ga = io::read_grid(&a)?;
            let gb = io::read_grid(&b)?;
            let metrics = grid::compare(&ga, &gb, threshold)?;
            println!("l2_rel {:.6}", metrics.l2_rel);
            println!("linf_rel {:.6}", metrics.linf_rel);
            println!("peaks {}", metrics.peak_list.len());
            for p in &metrics.peak_list {
                println!("peak ({:.4}, {:.4}) magnitude {:.6}", p.x[0], p.x[1], p.magnitude);
            }
        }
        Command::Crosscut { input, row, col, angle, origin, out } => {
            let img = io::read_grid(&input)?;
            let (coords, values) = if let Some(y) = row {
                io::crosscut_row(&img, y)
            } else if let Some(x) = col {
                io::crosscut_col(&img, x)
            } else if let Some(phi) = angle {
                io::crosscut_angle(&img, phi, parse_pair(&origin, "origin")?)
            } else {
                return Err(Error::bad_argument("crosscut needs --row, --col, or --angle"));
            };
            io::write_csv_crosscut(&out, &coords, &values)?;
            say(format!("wrote {}", out.display()));
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::read(&config)?;
            let report = run_experiment(&cfg)?;
            if !quiet {
                print!("{}", report.summary());
            }
            if !report.all_passed() {
                return Err(Error::contract(format!(
                    "experiment {} has failing checks; see {}",
                    report.name,
                    cfg.out_dir.join("summary.txt").display()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // A repeated --threads in the same process can only fail if the
        // global pool already exists; that is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
