//! Multiscale verification of potential bounds near a point.
//!
//! Around `p` the potential at `x` in the closed shell `omega_i` is split
//! into far mass (outside `B(p, 2^(2-i0) delta)`), near mass outside the
//! fattened shell `Omega_i`, and the mass inside `Omega_i`. The first two
//! are bounded in closed form; the third is evaluated at samples and the
//! samples where it is large form the exceptional set of the shell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{sphere_capacity_constant, Resolution};
use crate::error::{invalid, Error, Result};
use crate::geometry::{sphere_points, AnnulusLadder, PointSet};
use crate::measure::{dyadic_radii, growth_certificate, DiscreteMeasure, GrowthCertificate};
use crate::potential::{potential_at, KernelSpec, PotentialValue};
use crate::scalar::{dist, Scalar};
use crate::thinness::{classify, TailModel, Verdict, VerdictRule};

/// `count` deterministic points in the closed shell
/// `2^-i delta <= |x - p| <= 2^(1-i) delta`.
pub fn shell_samples<T: Scalar>(p: &[T], delta: T, i: i32, count: usize) -> PointSet<T> {
    let n = p.len();
    let dirs: PointSet<T> = sphere_points(n, count);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let r0 = delta * T::pow2(-i);
    let mut out = PointSet::with_capacity(n, count);
    for (j, u) in dirs.iter().enumerate() {
        let t = ((j as f64 + 0.5) * golden).fract();
        let r = r0 * T::lit(2f64.powf(t));
        let x: Vec<T> = p.iter().zip(u).map(|(c, u)| *c + r * *u).collect();
        out.push(&x).unwrap();
    }
    out
}

/// Least-squares slope of `ln mu(B_r(p))` against `ln r` over radii with
/// positive mass.
pub fn growth_exponent<T: Scalar>(mu: &DiscreteMeasure<T>, p: &[T], radii: &[T]) -> Option<T> {
    let prof = mu.radial_profile(p);
    let pts: Vec<(T, T)> = radii
        .iter()
        .filter_map(|r| {
            let m = prof.ball_mass(*r);
            (m > T::zero()).then(|| (r.ln(), m.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|q| q.0).sum::<T>() / k;
    let my = pts.iter().map(|q| q.1).sum::<T>() / k;
    let sxy: T = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let sxx: T = pts.iter().map(|q| (q.0 - mx) * (q.0 - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MultiscaleOptions<T> {
    pub i0: i32,
    pub shells: usize,
    pub samples_per_shell: usize,
    pub lambda: T,
    /// Defaults to half the excess of the fitted growth exponent over `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<T>,
    /// Dyadic radii used by the growth certificate.
    pub certificate_radii: usize,
    pub sphere_resolution: Resolution<T>,
    pub rule: VerdictRule<T>,
}

impl<T: Scalar> Default for MultiscaleOptions<T> {
    fn default() -> Self {
        Self {
            i0: 1,
            shells: 8,
            samples_per_shell: 200,
            lambda: T::one(),
            epsilon: None,
            certificate_radii: 16,
            sphere_resolution: Resolution::default().with_points_per_scale(T::lit(4.0)),
            rule: VerdictRule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ShellSample<T> {
    pub point: Vec<T>,
    pub distance: T,
    pub far: T,
    pub near: T,
    pub local: PotentialValue<T>,
    pub value: PotentialValue<T>,
    pub exceptional: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MultiscaleShell<T> {
    pub index: i32,
    /// Bound on the far term.
    pub term_i_bound: T,
    /// Dyadic near-mass sum bounding the near term.
    pub term_ii_bound: T,
    /// The same sum with every ball mass replaced by the growth certificate.
    pub term_ii_certificate: T,
    /// `lambda 2^(i (n - alpha - d))`.
    pub threshold: T,
    /// `mu(Omega_i)`.
    pub mass: T,
    /// `mu(Omega_i) / threshold`.
    pub budget: T,
    pub samples: Vec<ShellSample<T>>,
    pub exceptional: Vec<usize>,
    /// Whether both closed-form bounds dominated the summed terms at every sample.
    pub bounds_hold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MultiscaleReport<T> {
    pub point: Vec<T>,
    pub point_index: usize,
    pub certificate: GrowthCertificate<T>,
    pub fitted_exponent: Option<T>,
    pub d: T,
    pub alpha: T,
    pub epsilon: T,
    pub lambda: T,
    pub ladder: AnnulusLadder<T>,
    pub shells: Vec<MultiscaleShell<T>>,
    pub sphere_constant: T,
    /// `budget_i / (c(n, alpha) (2^-i delta)^(n-alpha))`.
    pub budget_terms: Vec<T>,
    pub budget_partial_sums: Vec<T>,
    pub budget_verdict: Verdict,
    pub budget_tail: TailModel<T>,
    /// Sup of `value |x - p|^(n-alpha-d)` over kept samples.
    #[serde(with = "crate::scalar::extended")]
    pub c_star: T,
    pub kept: usize,
    pub exceptional: usize,
}

/// Verifies the split bound for a Riesz potential near the best point of `s`.
pub fn multiscale_verify<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    s: &PointSet<T>,
    d: T,
    alpha: T,
    delta: T,
    opts: &MultiscaleOptions<T>,
) -> Result<MultiscaleReport<T>> {
    let n = mu.dim();
    let kernel = KernelSpec::riesz(n, alpha)?;
    if kernel.is_log() {
        return Err(invalid("multiscale bound needs alpha < n"));
    }
    let sexp = kernel.exponent();
    if !(d >= T::zero() && d < sexp) {
        return Err(invalid("need 0 <= d < n - alpha"));
    }
    if !(opts.lambda > T::zero()) || !(delta > T::zero()) {
        return Err(invalid("lambda and delta must be positive"));
    }
    if s.is_empty() || s.dim() != n {
        return Err(invalid("candidate set must be nonempty and match the measure dimension"));
    }
    let ladder = AnnulusLadder::new(vec![T::zero(); n], delta, opts.i0, opts.shells)?;
    let r_max = delta * T::pow2(2 - opts.i0);
    let radii = dyadic_radii(r_max, opts.certificate_radii.max(opts.shells + 4));

    let mut best: Option<(usize, GrowthCertificate<T>)> = None;
    for (k, p) in s.iter().enumerate() {
        if let Some(cert) = growth_certificate(mu, p, d, &radii)? {
            if best.as_ref().map_or(true, |b| cert.constant < b.1.constant) {
                best = Some((k, cert));
            }
        }
    }
    let Some((point_index, certificate)) = best else {
        return Err(Error::NoCertificate { exponent: d.as_f64() });
    };
    let p = certificate.point.clone();
    let ladder = AnnulusLadder { center: p.clone(), ..ladder };
    let fitted = growth_exponent(mu, &p, &radii);
    let epsilon = opts
        .epsilon
        .unwrap_or_else(|| fitted.map_or(T::zero(), |g| ((g - d) * T::lit(0.5)).max(T::zero())));

    let profile = mu.radial_profile(&p);
    let far_radius = r_max;
    let far_mass = mu.total_mass() - profile.ball_mass(far_radius) + mu.mass_where(|y| dist(y, &p) == far_radius);
    let term_i_bound = far_mass * (delta * T::pow2(1 - opts.i0)).powf(-sexp);
    let cert_c = certificate.constant;
    let four_d = T::lit(4.0).powf(d);

    let indices: Vec<i32> = ladder.indices().collect();
    let shells: Vec<MultiscaleShell<T>> = indices
        .par_iter()
        .map(|&i| {
            let (_, open) = ladder.shell_unchecked(i);
            let mut ii = T::zero();
            let mut ii_cert = T::zero();
            for k in opts.i0..i {
                let rk = delta * T::pow2(-k);
                ii = ii + rk.powf(-sexp) * profile.ball_mass(delta * T::pow2(2 - k));
                ii_cert = ii_cert + cert_c * four_d * rk.powf(d - sexp);
            }
            let rin = delta * T::pow2(-i - 1);
            ii = ii + rin.powf(-sexp) * profile.ball_mass(rin);
            ii_cert = ii_cert + cert_c * rin.powf(d - sexp);
            let threshold = opts.lambda * T::pow2(i).powf(sexp - d);
            let mass = profile.open_shell_mass(open.inner, open.outer);
            let pts = shell_samples(&p, delta, i, opts.samples_per_shell);
            let mut samples = Vec::with_capacity(pts.len());
            let mut exceptional = Vec::new();
            let mut bounds_hold = true;
            for (j, x) in pts.iter().enumerate() {
                let (mut far, mut near, mut local) = (T::zero(), T::zero(), T::zero());
                let mut infinite = false;
                for (y, w) in mu.iter() {
                    let ry = dist(y, &p);
                    let r = dist(x, y);
                    if r == T::zero() {
                        if w > T::zero() {
                            infinite = true;
                        }
                        continue;
                    }
                    let k = w * r.powf(-sexp);
                    if ry >= far_radius {
                        far = far + k;
                    } else if open.contains(y) {
                        local = local + k;
                    } else {
                        near = near + k;
                    }
                }
                let (local, value) = if infinite {
                    (PotentialValue::Infinite, PotentialValue::Infinite)
                } else {
                    (PotentialValue::Finite(local), PotentialValue::Finite(far + near + local))
                };
                let slack = T::one() + T::lit(1e-12);
                if far > term_i_bound * slack || near > ii * slack {
                    bounds_hold = false;
                }
                let exc = local.to_float() >= threshold;
                if exc {
                    exceptional.push(j);
                }
                samples.push(ShellSample {
                    point: x.to_vec(),
                    distance: dist(x, &p),
                    far,
                    near,
                    local,
                    value,
                    exceptional: exc,
                });
            }
            MultiscaleShell {
                index: i,
                term_i_bound,
                term_ii_bound: ii,
                term_ii_certificate: ii_cert,
                threshold,
                mass,
                budget: mass / threshold,
                samples,
                exceptional,
                bounds_hold,
            }
        })
        .collect();

    let c = sphere_capacity_constant(n, alpha, &opts.sphere_resolution)?;
    let budget_terms: Vec<T> = shells
        .iter()
        .map(|sh| sh.budget / (c * ladder.radius(sh.index).powf(sexp)))
        .collect();
    let budget_partial_sums = budget_terms
        .iter()
        .scan(T::zero(), |acc, t| {
            *acc = *acc + *t;
            Some(*acc)
        })
        .collect();
    let (budget_verdict, budget_tail) = classify(&budget_terms, &opts.rule);
    let mut c_star = T::zero();
    let mut kept = 0;
    let mut exceptional = 0;
    for sh in &shells {
        for smp in &sh.samples {
            if smp.exceptional {
                exceptional += 1;
            } else {
                kept += 1;
                c_star = c_star.max(smp.value.to_float() * smp.distance.powf(sexp - d));
            }
        }
    }
    Ok(MultiscaleReport {
        point: p,
        point_index,
        certificate,
        fitted_exponent: fitted,
        d,
        alpha,
        epsilon,
        lambda: opts.lambda,
        ladder,
        shells,
        sphere_constant: c,
        budget_terms,
        budget_partial_sums,
        budget_verdict,
        budget_tail,
        c_star,
        kept,
        exceptional,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LogLimitOptions<T> {
    pub i0: i32,
    pub shells: usize,
    pub samples_per_shell: usize,
    /// Diameter `D` of the domain carrying the measure.
    pub diameter: T,
}

impl<T: Scalar> Default for LogLimitOptions<T> {
    fn default() -> Self {
        Self {
            i0: 1,
            shells: 10,
            samples_per_shell: 100,
            diameter: T::lit(2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LogShell<T> {
    pub index: i32,
    /// `a_i = mu(Omega_i)`.
    pub mass: T,
    /// `r_i = sum_{j >= i} a_j`.
    pub tail: T,
    /// `lambda_i = sqrt(r_i)`.
    pub weight: T,
    /// `a_i / (i lambda_i)`, zero when `a_i = 0`.
    pub budget: T,
    /// Diameter of `Omega_i`.
    pub local_diameter: T,
    pub distances: Vec<T>,
    pub ratios: Vec<T>,
    pub exceptional: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LogLimitReport<T> {
    pub point: Vec<T>,
    /// `mu({p})`.
    pub atom_mass: T,
    pub ladder: AnnulusLadder<T>,
    pub shells: Vec<LogShell<T>>,
    /// `sum_i a_i / lambda_i`, bounded by `2 sqrt(r_{i0})`.
    pub weighted_sum: T,
    pub weighted_bound: T,
    /// Intercept of the least-squares line of ratio against `1 / log(1/|x-p|)`.
    #[serde(with = "crate::scalar::extended")]
    pub limit: T,
    #[serde(with = "crate::scalar::extended")]
    pub slope: T,
    pub kept: usize,
    pub exceptional: usize,
}

/// Number of fattened shells `Omega_j`, `j >= i`, containing a point at
/// distance `rho > 0` from the center.
fn shells_from<T: Scalar>(rho: T, delta: T, i: i32) -> usize {
    // rho in (2^(-j-1) delta, 2^(2-j) delta)  <=>  j in (L - 1, L + 2), L = log2(delta / rho).
    let l = (delta / rho).log2();
    let lo = (l - T::one()).floor().to_i64().unwrap_or(i64::MIN) + 1;
    let hi = (l + T::lit(2.0)).ceil().to_i64().unwrap_or(i64::MAX) - 1;
    let lo = lo.max(i as i64);
    // Exact recheck at the boundaries.
    (lo..=hi)
        .filter(|j| {
            let a = delta * T::pow2(-(*j as i32) - 1);
            let b = delta * T::pow2(2 - *j as i32);
            a < rho && rho < b
        })
        .count()
}

/// Ratio `V(x) / log(1/|x-p|)` of the log potential near `p`, with the
/// exceptional samples of each shell removed.
pub fn log_limit_verify<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    p: &[T],
    delta: T,
    opts: &LogLimitOptions<T>,
) -> Result<LogLimitReport<T>> {
    let n = mu.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }
    let kernel = KernelSpec::log(n, opts.diameter)?;
    if !(delta > T::zero()) || delta * T::lit(2.0) >= T::one() {
        return Err(invalid("need 0 < delta < 1/2 so that shell points satisfy |x - p| < 1"));
    }
    let ladder = AnnulusLadder::new(p.to_vec(), delta, opts.i0, opts.shells)?;
    let atom_mass = mu.mass_where(|y| dist(y, p) == T::zero());
    let profile = mu.radial_profile(p);
    let indices: Vec<i32> = ladder.indices().collect();
    let tails: Vec<T> = indices
        .iter()
        .map(|&i| {
            mu.iter()
                .map(|(y, w)| {
                    let rho = dist(y, p);
                    if rho == T::zero() {
                        T::zero()
                    } else {
                        w * T::from_usize_lossy(shells_from(rho, delta, i))
                    }
                })
                .sum()
        })
        .collect();
    let shells: Vec<LogShell<T>> = indices
        .par_iter()
        .zip(&tails)
        .map(|(&i, &tail)| -> Result<LogShell<T>> {
            let (_, open) = ladder.shell_unchecked(i);
            let mass = profile.open_shell_mass(open.inner, open.outer);
            let weight = tail.sqrt();
            let iw = T::lit(i as f64) * weight;
            let budget = if mass > T::zero() { mass / iw } else { T::zero() };
            let local_diameter = open.outer * T::lit(2.0);
            let local_kernel = KernelSpec::log(n, local_diameter)?;
            let local_mu = mu.restrict(|y| open.contains(y));
            let pts = shell_samples(p, delta, i, opts.samples_per_shell);
            let mut distances = Vec::new();
            let mut ratios = Vec::new();
            let mut exceptional = Vec::new();
            for (j, x) in pts.iter().enumerate() {
                let local = potential_at(&local_mu, &local_kernel, x)?;
                let exc = match local {
                    PotentialValue::Infinite => true,
                    PotentialValue::Finite(v) => v > T::zero() && v >= iw,
                };
                if exc {
                    exceptional.push(j);
                    continue;
                }
                let v = potential_at(mu, &kernel, x)?.to_float();
                let r = dist(x, p);
                distances.push(r);
                ratios.push(v / r.recip().ln());
            }
            Ok(LogShell {
                index: i,
                mass,
                tail,
                weight,
                budget,
                local_diameter,
                distances,
                ratios,
                exceptional,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let weighted_sum: T = shells
        .iter()
        .filter(|s| s.mass > T::zero())
        .map(|s| s.mass / s.weight)
        .sum();
    let weighted_bound = T::lit(2.0) * tails.first().copied().unwrap_or_else(T::zero).sqrt();
    let (mut sx, mut sy, mut sxx, mut sxy, mut k) = (T::zero(), T::zero(), T::zero(), T::zero(), 0usize);
    for sh in &shells {
        for (r, q) in sh.distances.iter().zip(&sh.ratios) {
            let t = r.recip().ln().recip();
            sx = sx + t;
            sy = sy + *q;
            sxx = sxx + t * t;
            sxy = sxy + t * *q;
            k += 1;
        }
    }
    let (limit, slope) = if k >= 2 {
        let m = T::from_usize_lossy(k);
        let den = m * sxx - sx * sx;
        if den.abs() > T::epsilon() * m * sxx {
            let slope = (m * sxy - sx * sy) / den;
            ((sy - slope * sx) / m, slope)
        } else {
            (sy / m, T::zero())
        }
    } else if k == 1 {
        (sy, T::zero())
    } else {
        return Err(Error::DegenerateMeasure("every shell sample is exceptional".into()));
    };
    let exceptional = shells.iter().map(|s| s.exceptional.len()).sum();
    Ok(LogLimitReport {
        point: p.to_vec(),
        atom_mass,
        ladder,
        shells,
        weighted_sum,
        weighted_bound,
        limit,
        slope,
        kept: k,
        exceptional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_samples_lie_in_shell() {
        let p = [0.1, -0.2, 0.3];
        let pts = shell_samples(&p, 0.5, 3, 64);
        for x in pts.iter() {
            let r = dist(x, &p);
            assert!(r >= 0.5 / 8.0 * (1.0 - 1e-12) && r <= 0.5 / 4.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pure_atom_ratio_is_exact() {
        let p = [0.0, 0.0, 0.0];
        let mu = DiscreteMeasure::dirac(&p, 0.7).unwrap();
        let opts = LogLimitOptions {
            diameter: 1.0,
            ..LogLimitOptions::default()
        };
        let r: LogLimitReport<f64> = log_limit_verify(&mu, &p, 0.125, &opts).unwrap();
        for sh in &r.shells {
            for q in &sh.ratios {
                let q: f64 = *q;
                assert!((q - 0.7).abs() < 1e-12);
            }
        }
        assert!((r.limit - 0.7).abs() < 1e-12);
        assert_eq!(r.exceptional, 0);
        assert_eq!(r.atom_mass, 0.7);
    }

    #[test]
    fn atom_ratio_extrapolates_with_any_diameter() {
        let p = [0.0, 0.0];
        let mu = DiscreteMeasure::dirac(&p, 2.0).unwrap();
        let r: LogLimitReport<f64> = log_limit_verify(&mu, &p, 0.125, &LogLimitOptions::default()).unwrap();
        assert!((r.limit - 2.0).abs() < 1e-9);
        assert!((r.slope - 2.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn tail_counts_overlapping_shells() {
        // Omega_1 = (0.25, 2), Omega_2 = (0.125, 1), Omega_3 = (0.0625, 0.5)
        assert_eq!(shells_from(0.3, 1.0, 1), 3);
        assert_eq!(shells_from(0.3, 1.0, 3), 1);
        assert_eq!(shells_from(0.3, 1.0, 4), 0);
    }

    #[test]
    fn single_atom_multiscale() {
        let q = [1.0, 0.0, 0.0];
        let mu = DiscreteMeasure::dirac(&q, 1.0).unwrap();
        let s = PointSet::from_rows(3, &[[0.0, 0.0, 0.0]]).unwrap();
        let opts = MultiscaleOptions {
            shells: 5,
            samples_per_shell: 40,
            ..MultiscaleOptions::default()
        };
        let r = multiscale_verify(&mu, &s, 0.0, 2.0, 0.125, &opts).unwrap();
        assert_eq!(r.exceptional, 0);
        for sh in &r.shells {
            assert!(sh.bounds_hold);
            assert_eq!(sh.mass, 0.0);
            for smp in &sh.samples {
                assert_eq!(smp.local, PotentialValue::Finite(0.0));
            }
        }
        // Largest value times distance^1 is attained near |x - p| = 2 delta.
        assert!(r.c_star > 0.125 / (1.0 + 0.25) && r.c_star < 0.25 / (1.0 - 0.25));
    }

    #[test]
    fn refuses_without_certificate() {
        let p = [0.0, 0.0, 0.0];
        let mu = DiscreteMeasure::dirac(&p, 1.0).unwrap();
        let s = PointSet::from_rows(3, &[p]).unwrap();
        let err = multiscale_verify(&mu, &s, 0.5, 2.0, 0.25, &MultiscaleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoCertificate { .. }));
    }
}
