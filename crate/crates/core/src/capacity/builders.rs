//! Sample and site layouts for capacity problems.

use serde::{Deserialize, Serialize};

use super::{dedupe, CapacityProblem};
use crate::error::{invalid, Error, Result};
use crate::geometry::{lattice_points, sphere_points, unit_sphere_area, Domain, PointSet, Primitive, RegionSet, Shell};
use crate::potential::KernelSpec;
use crate::scalar::{dist, Scalar};

/// One lattice for sites and one for samples, shared by every set posed on
/// the same container. Problems built this way are directly comparable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct UniformGrid<T> {
    pub h: T,
    pub h_e: T,
    pub h_trunc: T,
}

impl<T: Scalar> UniformGrid<T> {
    pub fn new(h: T, h_e: T) -> Self {
        Self {
            h,
            h_e,
            h_trunc: h * T::lit(0.5),
        }
    }
}

/// Resolution of the per-primitive adaptive layout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Resolution<T> {
    /// Grid spacing is the primitive's length scale divided by this.
    pub points_per_scale: T,
    /// Sites around a primitive extend this many spacings beyond it.
    pub margin_cells: T,
    /// Cells per axis of the coarse lattice over the container.
    pub container_cells: usize,
    /// Truncation distance as a fraction of the finest spacing.
    pub trunc_ratio: T,
    /// Explicit truncation distance, overriding `trunc_ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_trunc: Option<T>,
    /// The spacing is coarsened until both budgets are met.
    pub max_samples: usize,
    pub max_sites: usize,
}

impl<T: Scalar> Default for Resolution<T> {
    fn default() -> Self {
        Self {
            points_per_scale: T::lit(6.0),
            margin_cells: T::lit(2.0),
            container_cells: 8,
            trunc_ratio: T::lit(0.5),
            h_trunc: None,
            max_samples: 2500,
            max_sites: 12_000,
        }
    }
}

impl<T: Scalar> Resolution<T> {
    pub fn with_points_per_scale(mut self, pps: T) -> Self {
        self.points_per_scale = pps;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.points_per_scale >= T::one())
            || !(self.margin_cells >= T::zero())
            || self.container_cells == 0
            || !(self.trunc_ratio > T::zero())
        {
            return Err(invalid("resolution parameters must be positive"));
        }
        if let Some(t) = self.h_trunc {
            if !(t > T::zero()) {
                return Err(invalid("truncation distance must be positive"));
            }
        }
        Ok(())
    }
}

/// Points on the sphere `|x - c| = r` at spacing about `h`.
fn sphere_surface<T: Scalar>(center: &[T], r: T, h: T) -> PointSet<T> {
    let n = center.len();
    let count = (unit_sphere_area::<T>(n) * (r / h).powi(n as i32 - 1)).ceil();
    let count = count.to_usize().unwrap_or(1).max(1);
    sphere_points::<T>(n, count).map(|u| u.iter().zip(center).map(|(u, c)| *c + r * *u).collect())
}

fn box_intersect<T: Scalar>(a: (Vec<T>, Vec<T>), b: &(Vec<T>, Vec<T>)) -> Option<(Vec<T>, Vec<T>)> {
    let lo: Vec<T> = a.0.iter().zip(&b.0).map(|(x, y)| x.max(*y)).collect();
    let hi: Vec<T> = a.1.iter().zip(&b.1).map(|(x, y)| x.min(*y)).collect();
    if lo.iter().zip(&hi).all(|(l, h)| l <= h) {
        Some((lo, hi))
    } else {
        None
    }
}

fn expand<T: Scalar>(b: (Vec<T>, Vec<T>), m: T) -> (Vec<T>, Vec<T>) {
    (b.0.into_iter().map(|v| v - m).collect(), b.1.into_iter().map(|v| v + m).collect())
}

/// Point primitives fattened to balls are treated ball by ball.
fn solids<T: Scalar>(e: &RegionSet<T>) -> (Vec<Primitive<T>>, Vec<Vec<T>>) {
    let mut solids = Vec::new();
    let mut atoms = Vec::new();
    for p in &e.primitives {
        match p {
            Primitive::Points { coords, radius } if *radius == T::zero() => atoms.extend(coords.iter().cloned()),
            Primitive::Points { coords, radius } => solids.extend(coords.iter().map(|c| Primitive::Ball {
                center: c.clone(),
                radius: *radius,
            })),
            other => solids.push(other.clone()),
        }
    }
    (solids, atoms)
}

fn check_dim<T: Scalar>(e: &RegionSet<T>, omega: &Domain<T>, kernel: &KernelSpec<T>) -> Result<()> {
    e.validate()?;
    for d in [e.dim().unwrap_or(kernel.n), omega.dim()] {
        if d != kernel.n {
            return Err(Error::DimensionMismatch {
                expected: kernel.n,
                found: d,
            });
        }
    }
    Ok(())
}

impl<T: Scalar> CapacityProblem<T> {
    /// Samples: the `h_e`-lattice through the origin intersected with each
    /// solid primitive, `h_e`-spaced surface points on spheres, and isolated
    /// points. Sites: the `h`-lattice through the origin inside `omega`,
    /// plus isolated points of `e`.
    pub fn uniform(e: &RegionSet<T>, omega: &Domain<T>, kernel: &KernelSpec<T>, grid: &UniformGrid<T>) -> Result<Self> {
        check_dim(e, omega, kernel)?;
        let n = kernel.n;
        let origin = vec![T::zero(); n];
        let (solid, atoms) = solids(e);
        let mut samples = PointSet::new(n);
        for p in &solid {
            match p {
                Primitive::Sphere { center, radius } => samples.extend(&sphere_surface(center, *radius, grid.h_e))?,
                _ => {
                    let (lo, hi) = p.bounding_box().expect("solid primitive");
                    samples.extend(&lattice_points(&origin, grid.h_e, &lo, &hi, |x| p.contains(x)))?;
                }
            }
        }
        let mut sites = {
            let (lo, hi) = omega.bounding_box();
            lattice_points(&origin, grid.h, &lo, &hi, |x| omega.contains(x))
        };
        for a in &atoms {
            samples.push(a)?;
            if omega.contains(a) {
                sites.push(a)?;
            }
        }
        let p = Self::new(*kernel, dedupe(samples), dedupe(sites), grid.h, grid.h_e, grid.h_trunc)?;
        p.check_against(e, omega)?;
        Ok(p)
    }

    /// Per-primitive layout: each solid primitive is resolved at spacing
    /// `scale / points_per_scale`, with surface and interior samples and a
    /// band of sites around it, over a coarse lattice on the container.
    /// With `clip`, only the part of `e` inside the closed shell is posed.
    pub fn adaptive(
        e: &RegionSet<T>,
        clip: Option<&Shell<T>>,
        omega: &Domain<T>,
        kernel: &KernelSpec<T>,
        res: &Resolution<T>,
    ) -> Result<Self> {
        check_dim(e, omega, kernel)?;
        res.validate()?;
        let mut pps = res.points_per_scale;
        loop {
            let p = adaptive_layout(e, clip, omega, kernel, res, pps)?;
            let fits = p.samples.len() <= res.max_samples && p.sites.len() <= res.max_sites;
            if fits || pps <= T::lit(2.0) {
                return Ok(p);
            }
            pps = (pps * T::lit(0.8)).max(T::lit(2.0));
        }
    }
}

fn adaptive_layout<T: Scalar>(
    e: &RegionSet<T>,
    clip: Option<&Shell<T>>,
    omega: &Domain<T>,
    kernel: &KernelSpec<T>,
    res: &Resolution<T>,
    pps: T,
) -> Result<CapacityProblem<T>> {
    let n = kernel.n;
    let in_clip = |x: &[T]| clip.map_or(true, |s| s.contains(x));
    let omega_box = omega.bounding_box();
    let clip_box = clip.map(|s| crate::geometry::ball_box(&s.center, s.outer));
    let clip_scale = clip.map(|s| s.outer - s.inner);
    let (solid, atoms) = solids(e);
    let mut samples = PointSet::new(n);
    let mut sites = PointSet::new(n);
    let mut h_min = T::infinity();
    let two = T::lit(2.0);
    for p in &solid {
        let Some(bb) = p.bounding_box() else { continue };
        let Some(mut bb) = box_intersect(bb, &omega_box) else { continue };
        if let Some(cb) = &clip_box {
            match box_intersect(bb, cb) {
                Some(b) => bb = b,
                None => continue,
            }
        }
        if let Some(s) = clip {
            if p.distance(&s.center) > s.outer {
                continue;
            }
        }
        let mut scale = p.length_scale();
        if let Primitive::Box { min, max } = p {
            if scale <= T::zero() {
                scale = min.iter().zip(max).map(|(a, b)| *b - *a).fold(T::zero(), T::max);
            }
        }
        if let Some(cs) = clip_scale {
            scale = scale.min(cs);
        }
        if !(scale > T::zero()) {
            // Degenerate primitive: a single point.
            let c = bb.0.clone();
            if in_clip(&c) && p.contains(&c) {
                samples.push(&c)?;
                if omega.contains(&c) {
                    sites.push(&c)?;
                }
            }
            continue;
        }
        let h = scale / pps;
        let before = samples.len();
        let anchor = match p {
            Primitive::Ball { center, .. } | Primitive::Sphere { center, .. } => center.clone(),
            Primitive::Box { min, .. } => min.clone(),
            Primitive::Points { .. } => unreachable!("points are split into balls"),
        };
        match p {
            Primitive::Sphere { center, radius } => {
                let s = sphere_surface(center, *radius, h);
                for x in s.iter().filter(|x| in_clip(x)) {
                    samples.push(x)?;
                }
            }
            Primitive::Ball { center, radius } => {
                let s = sphere_surface(center, *radius, h);
                for x in s.iter().filter(|x| in_clip(x)) {
                    samples.push(x)?;
                }
                let shifted: Vec<T> = center.iter().map(|c| *c + h).collect();
                let inner = lattice_points(&shifted, two * h, &bb.0, &bb.1, |x| {
                    dist(x, center) <= *radius && in_clip(x)
                });
                samples.extend(&inner)?;
            }
            Primitive::Box { min, max } => {
                let steps: Vec<(usize, T)> = min
                    .iter()
                    .zip(max)
                    .map(|(a, b)| {
                        let side = *b - *a;
                        let k = (side / h).ceil().to_usize().unwrap_or(1).max(1);
                        (k, side / T::from_usize_lossy(k))
                    })
                    .collect();
                let mut idx = vec![0usize; n];
                let mut x = vec![T::zero(); n];
                'grid: loop {
                    for k in 0..n {
                        x[k] = min[k] + steps[k].1 * T::from_usize_lossy(idx[k]);
                    }
                    if in_clip(&x) {
                        samples.push(&x)?;
                    }
                    let mut k = n;
                    loop {
                        if k == 0 {
                            break 'grid;
                        }
                        k -= 1;
                        if idx[k] < steps[k].0 {
                            idx[k] += 1;
                            break;
                        }
                        idx[k] = 0;
                    }
                }
            }
            Primitive::Points { .. } => unreachable!(),
        }
        if samples.len() == before {
            continue;
        }
        h_min = h_min.min(h);
        let margin = res.margin_cells * h;
        let band = expand(bb, margin);
        let Some((lo, hi)) = box_intersect(band, &omega_box) else { continue };
        let local = lattice_points(&anchor, h, &lo, &hi, |x| {
            p.distance(x) <= margin && omega.contains(x) && clip.map_or(true, |s| s.distance(x) <= margin)
        });
        sites.extend(&local)?;
    }
    for a in &atoms {
        if in_clip(a) {
            samples.push(a)?;
            if omega.contains(a) {
                sites.push(a)?;
            }
        }
    }
    let (lo, hi) = &omega_box;
    let widest = lo.iter().zip(hi).map(|(a, b)| *b - *a).fold(T::zero(), T::max);
    let hc = widest / T::from_usize_lossy(res.container_cells);
    let center: Vec<T> = lo.iter().zip(hi).map(|(a, b)| (*a + *b) * T::lit(0.5)).collect();
    sites.extend(&lattice_points(&center, hc, lo, hi, |x| omega.contains(x)))?;
    if !h_min.is_finite() {
        h_min = hc;
    }
    let h_trunc = res.h_trunc.unwrap_or(res.trunc_ratio * h_min);
    let problem = CapacityProblem::new(*kernel, dedupe(samples), dedupe(sites), h_min, h_min, h_trunc)?;
    problem.check_against(e, omega)?;
    Ok(problem)
}
