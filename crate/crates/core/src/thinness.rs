//! Thinness series on dyadic annuli and rays escaping thin sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{capacity, sphere_capacity_constant, CapacityProblem, Resolution};
use crate::error::{invalid, Error, Result};
use crate::geometry::{sphere_points, AnnulusLadder, Domain, PointSet, RegionSet, Shell};
use crate::potential::KernelSpec;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Thin,
    NonThin,
    Inconclusive,
}

/// Geometric fit `t_i ~ A q^i` over the last terms of a series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TailModel<T> {
    #[serde(with = "crate::scalar::extended")]
    pub ratio: T,
    /// `t_last q / (1 - q)` when `q < 1`, else infinite.
    #[serde(with = "crate::scalar::extended")]
    pub tail_estimate: T,
    pub window: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct VerdictRule<T> {
    pub window: usize,
    /// Fitted ratios at or below this are thin.
    pub thin_ratio: T,
    /// Fitted ratios at or above this, with terms bounded below, are non-thin.
    pub nonthin_ratio: T,
    /// Non-thin also needs `min >= floor * max` over the window.
    pub nonthin_floor: T,
}

impl<T: Scalar> Default for VerdictRule<T> {
    fn default() -> Self {
        Self {
            window: 5,
            thin_ratio: T::lit(0.8),
            nonthin_ratio: T::lit(0.95),
            nonthin_floor: T::lit(0.5),
        }
    }
}

/// Least-squares slope of `ln t` against the index over the last `window`
/// positive terms.
pub fn fit_tail<T: Scalar>(terms: &[T], window: usize) -> TailModel<T> {
    let start = terms.len().saturating_sub(window);
    let pts: Vec<(T, T)> = terms[start..]
        .iter()
        .enumerate()
        .filter(|(_, t)| **t > T::zero())
        .map(|(k, t)| (T::from_usize_lossy(k), t.ln()))
        .collect();
    if pts.len() < 2 {
        let last = terms.last().copied().unwrap_or_else(T::zero);
        let all_zero = terms[start..].iter().all(|t| *t == T::zero());
        return TailModel {
            ratio: T::zero(),
            tail_estimate: if all_zero { T::zero() } else { last },
            window,
        };
    }
    let m = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / m;
    let my = pts.iter().map(|p| p.1).sum::<T>() / m;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let ratio = (sxy / sxx).exp();
    let last = *terms.last().unwrap();
    let tail_estimate = if ratio < T::one() {
        last * ratio / (T::one() - ratio)
    } else {
        T::infinity()
    };
    TailModel {
        ratio,
        tail_estimate,
        window,
    }
}

/// Verdict for a series from its raw terms.
pub fn classify<T: Scalar>(terms: &[T], rule: &VerdictRule<T>) -> (Verdict, TailModel<T>) {
    let tail = fit_tail(terms, rule.window);
    let start = terms.len().saturating_sub(rule.window);
    let window = &terms[start..];
    if window.iter().all(|t| *t == T::zero()) {
        return (Verdict::Thin, tail);
    }
    let max = window.iter().copied().fold(T::zero(), T::max);
    let min = window.iter().copied().fold(T::infinity(), T::min);
    let verdict = if tail.ratio <= rule.thin_ratio {
        Verdict::Thin
    } else if tail.ratio >= rule.nonthin_ratio && min >= rule.nonthin_floor * max {
        Verdict::NonThin
    } else {
        Verdict::Inconclusive
    };
    (verdict, tail)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ThinnessOptions<T> {
    pub start: i32,
    pub shells: usize,
    /// Layout of each rescaled shell problem.
    pub resolution: Resolution<T>,
    /// Layout of the sphere problem giving `c(n, alpha)`.
    pub sphere_resolution: Resolution<T>,
    pub rule: VerdictRule<T>,
}

impl<T: Scalar> Default for ThinnessOptions<T> {
    fn default() -> Self {
        Self {
            start: 1,
            shells: 12,
            resolution: Resolution::default().with_points_per_scale(T::lit(4.0)),
            sphere_resolution: Resolution::default().with_points_per_scale(T::lit(4.0)),
            rule: VerdictRule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellStat {
    pub index: i32,
    pub n_sites: usize,
    pub n_samples: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ThinnessReport<T> {
    pub alpha: T,
    pub n: usize,
    pub point: Vec<T>,
    pub ladder: AnnulusLadder<T>,
    /// `c(n, alpha)`.
    pub sphere_constant: T,
    /// `C(E ∩ omega_i, Omega_i)` at shell scale.
    pub numerators: Vec<T>,
    /// `c(n, alpha) (2^-i delta)^(n-alpha)`, or the weight `i` when `alpha = n`.
    pub denominators: Vec<T>,
    pub terms: Vec<T>,
    pub partial_sums: Vec<T>,
    pub verdict: Verdict,
    pub tail: TailModel<T>,
    pub shells: Vec<ShellStat>,
}

/// Unit annulus pair: closed `[1, 2]` and open `(1/2, 4)` about the origin.
pub(crate) fn unit_shells<T: Scalar>(n: usize) -> (Shell<T>, Shell<T>) {
    let ladder = AnnulusLadder::new(vec![T::zero(); n], T::one(), 1, 1).unwrap();
    let (mut closed, open) = ladder.shell_unchecked(0);
    closed.closed = true;
    (closed, open)
}

fn shell_kernel<T: Scalar>(n: usize, alpha: T) -> Result<KernelSpec<T>> {
    if alpha == T::from_usize_lossy(n) {
        // The fattened unit shell has diameter 8.
        KernelSpec::log(n, T::lit(8.0))
    } else {
        KernelSpec::riesz(n, alpha)
    }
}

/// `E` mapped by `x -> (2^i / delta) (x - p)`.
pub(crate) fn rescale_to_unit<T: Scalar>(e: &RegionSet<T>, p: &[T], delta: T, i: i32) -> RegionSet<T> {
    let s = T::pow2(i) / delta;
    let shift: Vec<T> = p.iter().map(|c| -*c * s).collect();
    e.affine(s, &shift)
}

/// Capacity of the rescaled piece `E ∩ omega_i` in the unit annulus.
fn unit_numerator<T: Scalar>(
    e: &RegionSet<T>,
    p: &[T],
    delta: T,
    i: i32,
    kernel: &KernelSpec<T>,
    res: &Resolution<T>,
) -> Result<(T, ShellStat)> {
    let n = kernel.n;
    let (clip, open) = unit_shells::<T>(n);
    let omega = Domain::annulus(vec![T::zero(); n], open.inner, open.outer)?;
    let scaled = rescale_to_unit(e, p, delta, i);
    let problem = CapacityProblem::adaptive(&scaled, Some(&clip), &omega, kernel, res)?;
    let r = capacity(&problem)?;
    Ok((
        r.value,
        ShellStat {
            index: i,
            n_sites: r.n_sites,
            n_samples: r.n_samples,
            gap: r.gap,
        },
    ))
}

/// Thinness series of `e` at `p` on the shells `start..start + shells`.
pub fn thinness_test<T: Scalar>(
    e: &RegionSet<T>,
    p: &[T],
    alpha: T,
    delta: T,
    opts: &ThinnessOptions<T>,
) -> Result<ThinnessReport<T>> {
    let n = p.len();
    if opts.shells < 5 {
        return Err(invalid("thinness test needs at least 5 shells"));
    }
    if let Some(d) = e.dim() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, found: d });
        }
    }
    let kernel = shell_kernel(n, alpha)?;
    let ladder = AnnulusLadder::new(p.to_vec(), delta, opts.start, opts.shells)?;
    let c = sphere_capacity_constant(n, alpha, &opts.sphere_resolution)?;
    if !(c > T::zero()) {
        return Err(Error::Infeasible("sphere capacity constant is not positive".into()));
    }
    let indices: Vec<i32> = ladder.indices().collect();
    let solved = indices
        .par_iter()
        .map(|&i| {
            unit_numerator(e, p, delta, i, &kernel, &opts.resolution).map_err(|err| Error::Shell {
                shell: i as i64,
                source: Box::new(err),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let log = kernel.is_log();
    let s = kernel.exponent();
    let mut numerators = Vec::with_capacity(indices.len());
    let mut denominators = Vec::with_capacity(indices.len());
    let mut terms = Vec::with_capacity(indices.len());
    for (&i, (unit, _)) in indices.iter().zip(&solved) {
        if log {
            let w = T::lit(i as f64);
            numerators.push(*unit);
            denominators.push(w);
            terms.push(w * *unit);
        } else {
            let scale = ladder.radius(i).powf(s);
            numerators.push(*unit * scale);
            denominators.push(c * scale);
            terms.push(*unit / c);
        }
    }
    let partial_sums = terms
        .iter()
        .scan(T::zero(), |acc, t| {
            *acc = *acc + *t;
            Some(*acc)
        })
        .collect();
    let (verdict, tail) = classify(&terms, &opts.rule);
    Ok(ThinnessReport {
        alpha,
        n,
        point: p.to_vec(),
        ladder,
        sphere_constant: c,
        numerators,
        denominators,
        terms,
        partial_sums,
        verdict,
        tail,
        shells: solved.into_iter().map(|s| s.1).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayFailure {
    /// No tail of the computed series fits under the capacity budget.
    BudgetExceeded,
    /// Every sampled direction meets the set.
    AllSamplesBlocked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum RayOutcome<T> {
    Found {
        direction: Vec<T>,
        /// The open segment `p + t theta`, `0 < t <= reach`, misses `E`.
        reach: T,
        sample_index: usize,
    },
    Failed {
        reason: RayFailure,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RayResult<T> {
    pub outcome: RayOutcome<T>,
    /// First shell of the tail used, `k`.
    pub tail_index: Option<i32>,
    /// Last computed shell, `K`.
    pub last_shell: i32,
    /// Series sum from `k` plus the fitted tail, in units of `c(n, alpha)`.
    pub tail_sum: Option<T>,
    pub budget: T,
    /// Exact segment check against every primitive of `E`.
    pub verified: bool,
    pub samples_scanned: usize,
    pub report: ThinnessReport<T>,
}

impl<T: Scalar> RayResult<T> {
    pub fn found(&self) -> bool {
        matches!(self.outcome, RayOutcome::Found { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RayOptions<T> {
    pub thinness: ThinnessOptions<T>,
    pub samples: usize,
    /// Fraction of `c(n, alpha)` the tail series must stay below.
    pub budget: T,
}

impl<T: Scalar> Default for RayOptions<T> {
    fn default() -> Self {
        Self {
            thinness: ThinnessOptions::default(),
            samples: 2000,
            budget: T::lit(0.5),
        }
    }
}

/// First `k` whose tail sum (computed terms from `k` plus fitted remainder)
/// is below `budget`.
fn tail_index<T: Scalar>(report: &ThinnessReport<T>, budget: T) -> Option<(i32, T)> {
    let mut suffix = report.tail.tail_estimate;
    let mut best = None;
    for (pos, i) in report.ladder.indices().enumerate().rev() {
        suffix = suffix + report.terms[pos];
        if suffix < budget {
            best = Some((i, suffix));
        } else {
            break;
        }
    }
    best
}

/// Searches for a direction from `p` whose initial segment avoids `e`.
pub fn find_avoiding_ray<T: Scalar>(
    e: &RegionSet<T>,
    p: &[T],
    alpha: T,
    delta: T,
    opts: &RayOptions<T>,
) -> Result<RayResult<T>> {
    let n = p.len();
    let report = thinness_test(e, p, alpha, delta, &opts.thinness)?;
    let last_shell = report.ladder.end() - 1;
    let failed = |reason, tail_index, tail_sum, scanned, report| RayResult {
        outcome: RayOutcome::Failed { reason },
        tail_index,
        last_shell,
        tail_sum,
        budget: opts.budget,
        verified: false,
        samples_scanned: scanned,
        report,
    };
    let Some((k, tail_sum)) = tail_index(&report, opts.budget) else {
        return Ok(failed(RayFailure::BudgetExceeded, None, None, 0, report));
    };
    let reach = delta * T::pow2(1 - k);
    let inner = delta * T::pow2(-last_shell);
    let dirs: PointSet<T> = sphere_points(n, opts.samples.max(1));
    let mut scanned = 0;
    for (idx, theta) in dirs.iter().enumerate() {
        scanned += 1;
        // Resolved part of the segment first, then the whole of it.
        let start: Vec<T> = p.iter().zip(theta).map(|(x, d)| *x + inner * *d).collect();
        if e.hits_segment(&start, theta, reach - inner) {
            continue;
        }
        if e.hits_segment(p, theta, reach) {
            continue;
        }
        return Ok(RayResult {
            outcome: RayOutcome::Found {
                direction: theta.to_vec(),
                reach,
                sample_index: idx,
            },
            tail_index: Some(k),
            last_shell,
            tail_sum: Some(tail_sum),
            budget: opts.budget,
            verified: true,
            samples_scanned: scanned,
            report,
        });
    }
    Ok(failed(RayFailure::AllSamplesBlocked, Some(k), Some(tail_sum), scanned, report))
}
