use nalgebra::DVector;

use crate::error::{Error, Result};

/// Structured P1 triangulation of the unit square at meshwidth `h = 2^-level`.
///
/// Nodes are numbered lexicographically with `x₁` fastest:
/// `index = j * n_per_side + i` for the node at `(i h, j h)`. Every cell is
/// split along its lower-left to upper-right diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FemGrid {
    level: u32,
}

impl FemGrid {
    pub const MAX_LEVEL: u32 = 12;

    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > Self::MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "grid level must be in 1..={}, got {level}",
                Self::MAX_LEVEL
            )));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells_per_side(&self) -> usize {
        1 << self.level
    }

    pub fn n_per_side(&self) -> usize {
        self.cells_per_side() + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_per_side() * self.n_per_side()
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_side() as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_per_side() + i
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        let n = self.n_per_side();
        let h = self.h();
        [(idx % n) as f64 * h, (idx / n) as f64 * h]
    }

    pub fn nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.n_nodes()).map(move |k| self.node(k))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let n = self.n_per_side();
        let (i, j) = (idx % n, idx / n);
        i == 0 || j == 0 || i == n - 1 || j == n - 1
    }

    /// Triangles as counter-clockwise node-index triples.
    pub fn triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let c = self.cells_per_side();
        (0..c).flat_map(move |j| {
            (0..c).flat_map(move |i| {
                let ll = self.index(i, j);
                let lr = self.index(i + 1, j);
                let ur = self.index(i + 1, j + 1);
                let ul = self.index(i, j + 1);
                [[ll, lr, ur], [ll, ur, ul]]
            })
        })
    }

    pub fn n_triangles(&self) -> usize {
        2 * self.cells_per_side() * self.cells_per_side()
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> FemField {
        FemField::new(*self, DVector::from_iterator(self.n_nodes(), self.nodes().map(f)))
            .expect("length matches")
    }
}

/// Nodal coefficient vector of a P1 function on a [`FemGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FemField {
    grid: FemGrid,
    values: DVector<f64>,
}

impl FemField {
    pub fn new(grid: FemGrid, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "field of length {} on level-{} grid with {} nodes",
                values.len(),
                grid.level(),
                grid.n_nodes()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: FemGrid) -> Self {
        Self { grid, values: DVector::zeros(grid.n_nodes()) }
    }

    pub fn constant(grid: FemGrid, c: f64) -> Self {
        Self { grid, values: DVector::from_element(grid.n_nodes(), c) }
    }

    pub fn grid(&self) -> FemGrid {
        self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_count_and_spacing() {
        for level in 1..=6 {
            let g = FemGrid::new(level).unwrap();
            assert_eq!(g.n_nodes(), ((1usize << level) + 1).pow(2));
            assert_eq!(g.n_triangles(), g.triangles().count());
        }
        assert!(FemGrid::new(0).is_err());
    }

    #[test]
    fn triangles_have_positive_area() {
        let g = FemGrid::new(3).unwrap();
        let expect = g.h() * g.h() / 2.0;
        for t in g.triangles() {
            let [a, b, c] = t.map(|k| g.node(k));
            let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
            assert!((area - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_nodes_lie_on_the_boundary() {
        let g = FemGrid::new(3).unwrap();
        for k in 0..g.n_nodes() {
            let [x, y] = g.node(k);
            let on = x == 0.0 || y == 0.0 || x == 1.0 || y == 1.0;
            assert_eq!(on, g.is_boundary(k));
        }
    }

    #[test]
    fn field_length_is_checked() {
        let g = FemGrid::new(1).unwrap();
        assert!(FemField::new(g, DVector::zeros(8)).is_err());
        assert!(FemField::new(g, DVector::zeros(9)).is_ok());
    }
}
