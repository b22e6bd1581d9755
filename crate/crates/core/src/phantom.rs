//! Test-function generators: coherent states (Gaussian wave packets),
//! erf-smoothed edges (flat, convex parabola, corner), and disks.
//!
//! The smoothed step is h_lambda(t) = (1 + erf(lambda t))/2. Edge phantoms
//! carry a localization taper h_mu(r_loc - |x - center|) with mu = 10/r_loc,
//! so their support stays strictly inside the grid when
//! |center| + r_loc is comfortably below L.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Smoothed Heaviside step.
pub fn smooth_step(lambda: f64, t: f64) -> f64 {
    0.5 * (1.0 + libm::erf(lambda * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Coherent,
    FlatEdge,
    ConvexEdge,
    Corner,
    Disk,
}

#[derive(Debug, Clone)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub center: [f64; 2],
    /// Semiclassical frequency of a coherent state; unused otherwise.
    pub xi0: [f64; 2],
    /// Semiclassical parameter; the coherent envelope width is sqrt(h).
    pub h: f64,
    /// Edge sharpness of the smoothed step.
    pub lambda: f64,
    /// Convex edge curve u = a v^2 in edge-local coordinates.
    pub a: f64,
    /// Orientation: the edge normal is (cos angle, sin angle).
    pub angle: f64,
    /// Localization radius of the taper; infinite disables the taper.
    pub r_loc: f64,
    /// Disk radius.
    pub radius: f64,
    /// Scales the taper sharpness mu = scale * 10 / r_loc; only acceptance
    /// sensitivity checks change it from 1.
    pub taper_mu_scale: f64,
}

impl PhantomSpec {
    fn base(kind: PhantomKind) -> Self {
        PhantomSpec {
            kind,
            center: [0.0, 0.0],
            xi0: [0.0, 1.0],
            h: 1.0,
            lambda: 500.0,
            a: 1.5,
            angle: 0.0,
            r_loc: f64::INFINITY,
            radius: 0.3,
            taper_mu_scale: 1.0,
        }
    }

    pub fn coherent(center: [f64; 2], xi0: [f64; 2], h: f64, r_loc: f64) -> Self {
        PhantomSpec { center, xi0, h, r_loc, ..Self::base(PhantomKind::Coherent) }
    }

    pub fn flat_edge(center: [f64; 2], angle: f64, lambda: f64, r_loc: f64) -> Self {
        PhantomSpec { center, angle, lambda, r_loc, ..Self::base(PhantomKind::FlatEdge) }
    }

    pub fn convex_edge(center: [f64; 2], a: f64, angle: f64, lambda: f64, r_loc: f64) -> Self {
        PhantomSpec { center, a, angle, lambda, r_loc, ..Self::base(PhantomKind::ConvexEdge) }
    }

    pub fn corner(center: [f64; 2], angle: f64, lambda: f64, r_loc: f64) -> Self {
        PhantomSpec { center, angle, lambda, r_loc, ..Self::base(PhantomKind::Corner) }
    }

    pub fn disk(center: [f64; 2], radius: f64, lambda: f64) -> Self {
        PhantomSpec { center, radius, lambda, ..Self::base(PhantomKind::Disk) }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::bad_argument("phantom h must be positive"));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::bad_argument("phantom lambda must be positive"));
        }
        if !(self.r_loc > 0.0) {
            return Err(Error::bad_argument("phantom r_loc must be positive"));
        }
        if !(self.taper_mu_scale > 0.0) {
            return Err(Error::bad_argument("taper sharpness scale must be positive"));
        }
        match self.kind {
            PhantomKind::Coherent => {
                if self.xi0[0] == 0.0 && self.xi0[1] == 0.0 {
                    return Err(Error::bad_argument("coherent state needs xi0 != 0"));
                }
            }
            PhantomKind::Disk => {
                if !(self.radius > 0.0) {
                    return Err(Error::bad_argument("disk radius must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Localization factor at x; 1 everywhere when r_loc is infinite.
    pub fn taper(&self, x1: f64, x2: f64) -> f64 {
        if !self.r_loc.is_finite() {
            return 1.0;
        }
        let d = ((x1 - self.center[0]).powi(2) + (x2 - self.center[1]).powi(2)).sqrt();
        let mu = self.taper_mu_scale * 10.0 / self.r_loc;
        smooth_step(mu, self.r_loc - d)
    }

    /// Edge-local coordinates: u along the normal, v along the edge.
    fn local(&self, x1: f64, x2: f64) -> (f64, f64) {
        let d1 = x1 - self.center[0];
        let d2 = x2 - self.center[1];
        let (c, s) = (self.angle.cos(), self.angle.sin());
        (c * d1 + s * d2, -s * d1 + c * d2)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self.kind {
            PhantomKind::Coherent => {
                let d1 = x1 - self.center[0];
                let d2 = x2 - self.center[1];
                // Phase is anchored at the center so the value there is 1.
                let phase = (d1 * self.xi0[0] + d2 * self.xi0[1]) / self.h;
                let envelope = (-(d1 * d1 + d2 * d2) / (2.0 * self.h)).exp();
                self.taper(x1, x2) * phase.cos() * envelope
            }
            PhantomKind::FlatEdge => {
                let (u, _) = self.local(x1, x2);
                self.taper(x1, x2) * smooth_step(self.lambda, u)
            }
            PhantomKind::ConvexEdge => {
                let (u, v) = self.local(x1, x2);
                self.taper(x1, x2) * smooth_step(self.lambda, u - self.a * v * v)
            }
            PhantomKind::Corner => {
                let (u, v) = self.local(x1, x2);
                self.taper(x1, x2)
                    * smooth_step(self.lambda, u)
                    * smooth_step(self.lambda, v)
            }
            PhantomKind::Disk => {
                let d = ((x1 - self.center[0]).powi(2) + (x2 - self.center[1]).powi(2)).sqrt();
                smooth_step(self.lambda, self.radius - d)
            }
        }
    }

    /// Sample the singular set as (point, unit normal) pairs; `count` bounds
    /// the number of samples along each curve.
    pub fn singular_points(&self, count: usize) -> Result<Vec<([f64; 2], [f64; 2])>> {
        self.validate()?;
        let count = count.max(1);
        let (c, s) = (self.angle.cos(), self.angle.sin());
        let rotate = |u: f64, v: f64| [c * u - s * v, s * u + c * v];
        let place = |u: f64, v: f64| {
            let r = rotate(u, v);
            [self.center[0] + r[0], self.center[1] + r[1]]
        };
        let reach = if self.r_loc.is_finite() { 0.8 * self.r_loc } else { 0.8 * self.radius };
        match self.kind {
            PhantomKind::Coherent => {
                let norm = (self.xi0[0].powi(2) + self.xi0[1].powi(2)).sqrt();
                Ok(vec![(self.center, [self.xi0[0] / norm, self.xi0[1] / norm])])
            }
            PhantomKind::FlatEdge => {
                if !self.r_loc.is_finite() {
                    return Err(Error::bad_argument(
                        "edge phantom needs a finite r_loc to bound its singular set",
                    ));
                }
                Ok((0..count)
                    .map(|k| {
                        let t = if count == 1 {
                            0.0
                        } else {
                            -reach + 2.0 * reach * k as f64 / (count - 1) as f64
                        };
                        (place(0.0, t), rotate(1.0, 0.0))
                    })
                    .collect())
            }
            PhantomKind::ConvexEdge => {
                if !self.r_loc.is_finite() {
                    return Err(Error::bad_argument(
                        "edge phantom needs a finite r_loc to bound its singular set",
                    ));
                }
                let mut out = Vec::new();
                for k in 0..count {
                    let v = if count == 1 {
                        0.0
                    } else {
                        -reach + 2.0 * reach * k as f64 / (count - 1) as f64
                    };
                    let u = self.a * v * v;
                    if (u * u + v * v).sqrt() > reach {
                        continue;
                    }
                    let nn = (1.0 + 4.0 * self.a * self.a * v * v).sqrt();
                    out.push((place(u, v), rotate(1.0 / nn, -2.0 * self.a * v / nn)));
                }
                Ok(out)
            }
            PhantomKind::Corner => {
                if !self.r_loc.is_finite() {
                    return Err(Error::bad_argument(
                        "edge phantom needs a finite r_loc to bound its singular set",
                    ));
                }
                let mut out = Vec::new();
                let per_leg = count.max(2) / 2;
                for k in 0..per_leg {
                    let t = reach * (k as f64 + 0.5) / per_leg as f64;
                    // Leg v = 0, u > 0 has normal along v; leg u = 0, v > 0
                    // has normal along u.
                    out.push((place(t, 0.0), rotate(0.0, 1.0)));
                    out.push((place(0.0, t), rotate(1.0, 0.0)));
                }
                Ok(out)
            }
            PhantomKind::Disk => Ok((0..count)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                    let nrm = [t.cos(), t.sin()];
                    (
                        [
                            self.center[0] + self.radius * nrm[0],
                            self.center[1] + self.radius * nrm[1],
                        ],
                        nrm,
                    )
                })
                .collect()),
        }
    }
}

/// Rasterize a phantom on an n x n grid over [-L,L]^2.
pub fn rasterize(spec: &PhantomSpec, n: usize, half_extent: f64) -> Result<ImageGrid> {
    spec.validate()?;
    ImageGrid::from_fn(n, half_extent, |x1, x2| spec.eval(x1, x2))
}

pub fn coherent_state(
    n: usize,
    half_extent: f64,
    center: [f64; 2],
    xi0: [f64; 2],
    h: f64,
    r_loc: f64,
) -> Result<ImageGrid> {
    rasterize(&PhantomSpec::coherent(center, xi0, h, r_loc), n, half_extent)
}

pub fn edge_phantom(spec: &PhantomSpec, n: usize, half_extent: f64) -> Result<ImageGrid> {
    match spec.kind {
        PhantomKind::FlatEdge | PhantomKind::ConvexEdge | PhantomKind::Corner => {
            rasterize(spec, n, half_extent)
        }
        _ => Err(Error::bad_argument("edge_phantom requires an edge kind")),
    }
}

pub fn disk_phantom(
    n: usize,
    half_extent: f64,
    center: [f64; 2],
    radius: f64,
    lambda: f64,
) -> Result<ImageGrid> {
    rasterize(&PhantomSpec::disk(center, radius, lambda), n, half_extent)
}
