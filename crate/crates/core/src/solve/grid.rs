use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on the flat torus `C^n / Z^{2n}`.
///
/// Real axes are ordered `(x_1, y_1, ..., x_n, y_n)`; flat indices are
/// row-major over that order, so the `y_n` axis varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridShape", into = "GridShape")]
pub struct TorusGrid {
    n: usize,
    size: usize,
}

#[derive(Serialize, Deserialize)]
struct GridShape {
    n: usize,
    #[serde(rename = "N")]
    size: usize,
}

impl TryFrom<GridShape> for TorusGrid {
    type Error = Error;

    fn try_from(s: GridShape) -> Result<Self> {
        Self::new(s.n, s.size)
    }
}

impl From<TorusGrid> for GridShape {
    fn from(g: TorusGrid) -> Self {
        Self { n: g.n, size: g.size }
    }
}

impl TorusGrid {
    /// `n` complex dimensions (2 or 3), `size` points per real axis (even, at
    /// least 8).
    pub fn new(n: usize, size: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::Parameter(format!("complex dimension must be 2 or 3, got {n}")));
        }
        if size < 8 || size % 2 != 0 {
            return Err(Error::Parameter(format!("points per axis must be even and at least 8, got {size}")));
        }
        if size.checked_pow(2 * n as u32).is_none() {
            return Err(Error::Parameter(format!("{size}^{} grid points overflow", 2 * n)));
        }
        Ok(Self { n, size })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per real axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn h(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    /// Total number of grid points, `N^(2n)`.
    pub fn len(&self) -> usize {
        self.size.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.size.pow((self.axes() - 1 - axis) as u32)
    }

    pub fn coordinate(&self, index: usize, axis: usize) -> usize {
        (index / self.stride(axis)) % self.size
    }

    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        (0..self.axes()).map(|a| self.coordinate(index, a)).collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &c| acc * self.size + c % self.size)
    }

    /// Real coordinates of a point, each in `[0, 1)`.
    pub fn position(&self, index: usize) -> Vec<f64> {
        let h = self.h();
        (0..self.axes()).map(|a| self.coordinate(index, a) as f64 * h).collect()
    }

    /// Index of the neighbour `offset` steps along `axis`, wrapping
    /// periodically.
    pub fn shift(&self, index: usize, axis: usize, offset: isize) -> usize {
        let stride = self.stride(axis);
        let c = (index / stride) % self.size;
        let m = self.size as isize;
        let moved = ((c as isize + offset) % m + m) % m;
        index - c * stride + moved as usize * stride
    }

    /// Central first difference along `axis`.
    pub fn d1(&self, f: &[f64], index: usize, axis: usize) -> f64 {
        (f[self.shift(index, axis, 1)] - f[self.shift(index, axis, -1)]) * 0.5 * self.size as f64
    }

    /// Second difference: the three-point stencil for `a == b`, the
    /// four-corner stencil otherwise.
    pub fn d2(&self, f: &[f64], index: usize, a: usize, b: usize) -> f64 {
        let inv_h2 = (self.size * self.size) as f64;
        if a == b {
            (f[self.shift(index, a, 1)] - 2.0 * f[index] + f[self.shift(index, a, -1)]) * inv_h2
        } else {
            let p = self.shift(index, a, 1);
            let m = self.shift(index, a, -1);
            (f[self.shift(p, b, 1)] - f[self.shift(p, b, -1)] - f[self.shift(m, b, 1)] + f[self.shift(m, b, -1)])
                * 0.25
                * inv_h2
        }
    }
}
