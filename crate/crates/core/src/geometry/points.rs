use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Flat storage for a list of points of a common dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PointSet<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointSet<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self {
            dim,
            coords: Vec::with_capacity(dim * n),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(invalid("flat coordinate buffer is not a multiple of the dimension"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[T]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut out = Self::with_capacity(dim, rows.len());
        for r in rows {
            out.push(r.as_ref())?;
        }
        Ok(out)
    }

    pub fn push(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.len(),
            });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn extend(&mut self, other: &PointSet<T>) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, T> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.coords
    }

    /// Applies `f` to every point, producing points of dimension `dim`.
    pub fn map(&self, f: impl Fn(&[T]) -> Vec<T>) -> Self {
        let mut out = Self::with_capacity(self.dim, self.len());
        for p in self.iter() {
            out.coords.extend(f(p));
        }
        out
    }

    pub fn scaled(&self, lambda: T) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| *x * lambda).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.iter().map(|p| p.to_vec()).collect()
    }
}

impl<T: Scalar> TryFrom<Vec<Vec<T>>> for PointSet<T> {
    type Error = Error;
    fn try_from(rows: Vec<Vec<T>>) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(1);
        Self::from_rows(dim, &rows)
    }
}

impl<T: Scalar> From<PointSet<T>> for Vec<Vec<T>> {
    fn from(p: PointSet<T>) -> Self {
        p.to_rows()
    }
}
