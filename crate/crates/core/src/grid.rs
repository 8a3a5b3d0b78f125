//! Uniform tensor-product grids with multilinear interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    /// A degenerate range collapses to a single point.
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return param(format!("invalid axis range [{min}, {max}]"));
        }
        if count == 0 {
            return param("axis needs at least one point");
        }
        if min == max || count == 1 {
            let mid = 0.5 * (min + max);
            return Ok(Axis { min: mid, max: mid, count: 1 });
        }
        Ok(Axis { min, max, count })
    }

    pub fn point(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    /// Lower bracketing index and the weight on the upper neighbour; clamps outside the range.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        if self.count == 1 || x <= self.min {
            return (0, 0.0);
        }
        if x >= self.max {
            return (self.count - 2, 1.0);
        }
        let t = (x - self.min) / (self.max - self.min) * (self.count - 1) as f64;
        let i = (t.floor() as usize).min(self.count - 2);
        (i, t - i as f64)
    }
}

/// Row-major tensor grid (last axis varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 4 {
            return param("grids support 1 to 4 dimensions");
        }
        Ok(Grid { axes })
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn strides(&self) -> [usize; 4] {
        let mut s = [0usize; 4];
        let mut acc = 1;
        for d in (0..self.dims()).rev() {
            s[d] = acc;
            acc *= self.axes[d].count;
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for d in (0..self.dims()).rev() {
            idx[d] = flat % self.axes[d].count;
            flat /= self.axes[d].count;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.point(i))
            .collect()
    }

    /// Calls `f(flat_index, weight)` for each of the `2^d` bracketing corners of `x`.
    #[inline]
    pub fn for_each_corner(&self, x: &[f64], mut f: impl FnMut(usize, f64)) {
        let d = self.dims();
        let strides = self.strides();
        let mut lo = [0usize; 4];
        let mut frac = [0f64; 4];
        for k in 0..d {
            let (i, t) = self.axes[k].locate(x[k]);
            lo[k] = i;
            frac[k] = t;
        }
        for mask in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0;
            for k in 0..d {
                let up = (mask >> k) & 1 == 1;
                if self.axes[k].count == 1 {
                    if up {
                        w = 0.0;
                        break;
                    }
                    continue;
                }
                w *= if up { frac[k] } else { 1.0 - frac[k] };
                flat += (lo[k] + up as usize) * strides[k];
            }
            if w != 0.0 {
                f(flat, w);
            }
        }
    }

    /// Multilinear interpolation of grid values, constant beyond the edges.
    #[inline]
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each_corner(x, |i, w| acc += w * values[i]);
        acc
    }
}
