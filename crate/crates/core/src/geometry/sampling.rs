use crate::scalar::{norm, Scalar};

use super::PointSet;

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area<T: Scalar>(n: usize) -> T {
    // 2 pi^{n/2} / Gamma(n/2), Gamma at half-integers by recursion
    let half = n as f64 / 2.0;
    let mut gamma = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < half {
        gamma *= x;
        x += 1.0;
    }
    T::lit(2.0 * std::f64::consts::PI.powf(half) / gamma)
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += f * (k % base) as f64;
        k /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic low-discrepancy points on the unit sphere `S^{n-1}`:
/// equispaced angles for `n = 2`, a Fibonacci lattice for `n = 3`, and
/// Box-Muller transformed Halton points for `n >= 4`.
pub fn sphere_points<T: Scalar>(n: usize, count: usize) -> PointSet<T> {
    let mut out = PointSet::with_capacity(n, count);
    let tau = std::f64::consts::TAU;
    match n {
        2 => {
            for k in 0..count {
                let a = tau * (k as f64 + 0.5) / count as f64;
                out.push(&[T::lit(a.cos()), T::lit(a.sin())]).unwrap();
            }
        }
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for k in 0..count {
                let z = 1.0 - (2 * k + 1) as f64 / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                out.push(&[T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z)])
                    .unwrap();
            }
        }
        _ => {
            assert!(n <= 2 * PRIMES.len(), "sphere sampler supports n <= 32");
            let pairs = n.div_ceil(2);
            let mut k = 1u64;
            let mut v = vec![0.0f64; 2 * pairs];
            while out.len() < count {
                for j in 0..pairs {
                    let u1 = radical_inverse(k, PRIMES[2 * j]);
                    let u2 = radical_inverse(k, PRIMES[2 * j + 1]);
                    let r = (-2.0 * u1.ln()).sqrt();
                    v[2 * j] = r * (tau * u2).cos();
                    v[2 * j + 1] = r * (tau * u2).sin();
                }
                k += 1;
                let p = &v[..n];
                let len = norm(p);
                if len > 1e-12 {
                    let q: Vec<T> = p.iter().map(|x| T::lit(x / len)).collect();
                    out.push(&q).unwrap();
                }
            }
        }
    }
    out
}

fn index_range<T: Scalar>(anchor: T, h: T, lo: T, hi: T) -> (i64, i64) {
    let a = ((lo - anchor) / h).ceil().to_i64().unwrap_or(0);
    let b = ((hi - anchor) / h).floor().to_i64().unwrap_or(-1);
    (a, b)
}

/// Number of lattice nodes `anchor + h k` inside the box `[lo, hi]`.
pub fn lattice_size<T: Scalar>(anchor: &[T], h: T, lo: &[T], hi: &[T]) -> f64 {
    let mut total = 1.0f64;
    for k in 0..anchor.len() {
        let (a, b) = index_range(anchor[k], h, lo[k], hi[k]);
        total *= (b - a + 1).max(0) as f64;
    }
    total
}

/// Lattice nodes `anchor + h k` (integer `k`) inside `[lo, hi]` that pass
/// `keep`, in lexicographic index order.
pub fn lattice_points<T: Scalar>(
    anchor: &[T],
    h: T,
    lo: &[T],
    hi: &[T],
    mut keep: impl FnMut(&[T]) -> bool,
) -> PointSet<T> {
    let n = anchor.len();
    let ranges: Vec<(i64, i64)> = (0..n)
        .map(|k| index_range(anchor[k], h, lo[k], hi[k]))
        .collect();
    let mut out = PointSet::new(n);
    if ranges.iter().any(|(a, b)| b < a) {
        return out;
    }
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut p = vec![T::zero(); n];
    loop {
        for k in 0..n {
            p[k] = anchor[k] + h * T::lit(idx[k] as f64);
        }
        if keep(&p) {
            out.push(&p).unwrap();
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] < ranges[k].1 {
                idx[k] += 1;
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
}
