//! Half-strip discretization and nodal fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform grid on `[-L, L]^n x [0, A]`.
///
/// Lateral nodes sit at `x_i = -L + i hx`, vertical nodes at `y_j = j hy`,
/// so row `j = 0` is the crack plane and row `my - 1` carries `u_A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripGrid<T> {
    pub n: usize,
    pub half_width: T,
    pub height: T,
    pub mx: usize,
    pub my: usize,
}

impl<T: Real> StripGrid<T> {
    pub fn new(n: usize, half_width: T, height: T, mx: usize, my: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::GridDegenerate(format!("lateral dimension must be 1 or 2, got {n}")));
        }
        if mx < 3 || my < 3 {
            return Err(Error::GridDegenerate(format!("need mx, my >= 3, got {mx} x {my}")));
        }
        if !(half_width > T::zero()) || !(height > T::zero()) {
            return Err(Error::GridDegenerate("extents must be positive".into()));
        }
        Ok(Self { n, half_width, height, mx, my })
    }

    pub fn hx(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize(self.mx - 1).unwrap()
    }

    pub fn hy(&self) -> T {
        self.height / T::from_usize(self.my - 1).unwrap()
    }

    pub fn x(&self, i: usize) -> T {
        -self.half_width + self.hx() * T::from_usize(i).unwrap()
    }

    pub fn y(&self, j: usize) -> T {
        self.hy() * T::from_usize(j).unwrap()
    }

    /// Number of lateral nodes per row (`mx^n`).
    pub fn lateral_len(&self) -> usize {
        self.mx.pow(self.n as u32)
    }

    /// Number of interior lateral nodes per axis (the trace unknowns).
    pub fn interior_per_axis(&self) -> usize {
        self.mx - 2
    }

    /// Number of trace unknowns (`(mx - 2)^n`).
    pub fn trace_len(&self) -> usize {
        self.interior_per_axis().pow(self.n as u32)
    }

    pub fn node_count(&self) -> usize {
        self.lateral_len() * self.my
    }

    /// `hx^n`, the lateral area carried by one node.
    pub fn cell_measure(&self) -> T {
        self.hx().powi(self.n as i32)
    }

    /// Splits a lateral flat index into per-axis indices `[i1, i2]`.
    pub fn lateral_indices(&self, l: usize) -> [usize; 2] {
        if self.n == 1 {
            [l, 0]
        } else {
            [l % self.mx, l / self.mx]
        }
    }

    pub fn lateral_index(&self, i1: usize, i2: usize) -> usize {
        if self.n == 1 {
            i1
        } else {
            i2 * self.mx + i1
        }
    }

    /// Lateral coordinates `[x1, x2]` of a lateral node (`x2 = 0` when `n = 1`).
    pub fn lateral_point(&self, l: usize) -> [T; 2] {
        let [i1, i2] = self.lateral_indices(l);
        if self.n == 1 {
            [self.x(i1), T::zero()]
        } else {
            [self.x(i1), self.x(i2)]
        }
    }

    pub fn is_lateral_boundary(&self, l: usize) -> bool {
        let [i1, i2] = self.lateral_indices(l);
        let edge = |i: usize| i == 0 || i == self.mx - 1;
        edge(i1) || (self.n == 2 && edge(i2))
    }

    /// Lateral flat indices of the interior nodes, in trace order.
    pub fn interior_lateral(&self) -> Vec<usize> {
        let m = self.mx;
        if self.n == 1 {
            (1..m - 1).collect()
        } else {
            let mut out = Vec::with_capacity(self.trace_len());
            for i2 in 1..m - 1 {
                for i1 in 1..m - 1 {
                    out.push(i2 * m + i1);
                }
            }
            out
        }
    }

    /// Same geometry at half the spacing.
    pub fn refined(&self) -> Self {
        Self { mx: 2 * self.mx - 1, my: 2 * self.my - 1, ..*self }
    }

    pub fn empty_field(&self) -> Field<T> {
        let mut dims = vec![self.my];
        let mut axes = vec!["y".to_string()];
        let mut origin = vec![T::zero()];
        let mut spacing = vec![self.hy()];
        if self.n == 2 {
            dims.push(self.mx);
            axes.push("x2".into());
            origin.push(-self.half_width);
            spacing.push(self.hx());
        }
        dims.push(self.mx);
        axes.push("x1".into());
        origin.push(-self.half_width);
        spacing.push(self.hx());
        Field { dims, axes, origin, spacing, values: vec![T::zero(); self.node_count()] }
    }
}

/// A scalar field on a uniform tensor grid, stored row-major with the first
/// axis slowest. Strip fields use axes `[y, x1]` or `[y, x2, x1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub dims: Vec<usize>,
    pub axes: Vec<String>,
    pub origin: Vec<T>,
    pub spacing: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> Field<T> {
    /// Number of nodes per slab of the slowest axis.
    pub fn row_len(&self) -> usize {
        self.dims[1..].iter().product()
    }

    pub fn row(&self, j: usize) -> &[T] {
        let w = self.row_len();
        &self.values[j * w..(j + 1) * w]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [T] {
        let w = self.row_len();
        &mut self.values[j * w..(j + 1) * w]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Coordinates of a node given its flat index, ordered like `axes`.
    pub fn coords(&self, flat: usize) -> Vec<T> {
        let mut rem = flat;
        let mut idx = vec![0usize; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = rem % self.dims[a];
            rem /= self.dims[a];
        }
        idx.iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + self.spacing[a] * T::from_usize(i).unwrap())
            .collect()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Field { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_coordinates() {
        let g = StripGrid::new(1, 2.0, 1.0, 9, 5).unwrap();
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 0.25);
        assert_eq!(g.x(0), -2.0);
        assert_eq!(g.x(8), 2.0);
        assert_eq!(g.y(4), 1.0);
        assert_eq!(g.trace_len(), 7);
        assert_eq!(g.interior_lateral(), (1..8).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_degenerate() {
        assert!(StripGrid::new(1, 1.0, 1.0, 2, 5).is_err());
        assert!(StripGrid::new(3, 1.0, 1.0, 5, 5).is_err());
        assert!(StripGrid::new(1, 0.0, 1.0, 5, 5).is_err());
    }

    #[test]
    fn two_dimensional_indexing() {
        let g = StripGrid::new(2, 1.0, 1.0, 5, 3).unwrap();
        assert_eq!(g.lateral_len(), 25);
        let l = g.lateral_index(3, 1);
        assert_eq!(g.lateral_indices(l), [3, 1]);
        assert_eq!(g.lateral_point(l), [0.5, -0.5]);
        assert!(g.is_lateral_boundary(g.lateral_index(0, 2)));
        assert!(!g.is_lateral_boundary(g.lateral_index(2, 2)));
        assert_eq!(g.interior_lateral().len(), 9);
        let f = g.empty_field();
        assert_eq!(f.dims, vec![3, 5, 5]);
        assert_eq!(f.coords(5 * 5 + 5 + 2), vec![0.5, -0.5, 0.0]);
    }
}
