use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::{capacity, CapacityProblem, Resolution};
use crate::error::Result;
use crate::geometry::{Domain, Primitive, RegionSet};
use crate::potential::KernelSpec;
use crate::scalar::Scalar;

type Key = (usize, u64, String);

fn cache() -> &'static Mutex<HashMap<Key, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `c(n, alpha) = C(S^{n-1}, B_2)` at the given resolution, memoized per
/// `(n, alpha, resolution)`. The log kernel uses the diameter of `B_2`.
pub fn sphere_capacity_constant<T: Scalar>(n: usize, alpha: T, res: &Resolution<T>) -> Result<T> {
    let kernel = if alpha == T::from_usize_lossy(n) {
        KernelSpec::log(n, T::lit(4.0))?
    } else {
        KernelSpec::riesz(n, alpha)?
    };
    let key = (
        n,
        alpha.as_f64().to_bits(),
        serde_json::to_string(res).unwrap_or_default(),
    );
    if let Some(v) = cache().lock().unwrap().get(&key) {
        return Ok(T::lit(*v));
    }
    let origin = vec![T::zero(); n];
    let e = RegionSet::new(vec![Primitive::Sphere {
        center: origin.clone(),
        radius: T::one(),
    }])?;
    let omega = Domain::ball(origin, T::lit(2.0))?;
    let problem = CapacityProblem::adaptive(&e, None, &omega, &kernel, res)?;
    let value = capacity(&problem)?.value;
    cache().lock().unwrap().insert(key, value.as_f64());
    Ok(value)
}
