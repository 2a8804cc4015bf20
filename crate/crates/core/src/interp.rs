//! Local Lagrange interpolation on periodic grids.
//!
//! A 4-point (cubic) stencil per axis; in 2D the tensor product (bicubic).

use num_complex::Complex64;

use crate::grid::{Axis, Configuration, Grid, MAX_DIM};

/// Number of stencil points per axis.
pub const WIDTH: usize = 4;

/// Grid indices and weights reproducing a value at one off-grid point.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    dim: usize,
    index: [[usize; WIDTH]; MAX_DIM],
    weight: [[f64; WIDTH]; MAX_DIM],
    stride: [usize; MAX_DIM],
}

fn axis_stencil(axis: &Axis, x: f64) -> ([usize; WIDTH], [f64; WIDTH]) {
    let n = axis.points;
    let u = (x - axis.lower()) / axis.spacing();
    let base = u.floor();
    let f = u - base;
    let base = (base as i64).rem_euclid(n as i64) as usize;
    // Nodes at offsets -1, 0, 1, 2 around the cell [base, base + 1].
    let w = [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ];
    let idx = [(base + n - 1) % n, base, (base + 1) % n, (base + 2) % n];
    (idx, w)
}

impl Stencil {
    pub fn new(grid: &Grid, q: &Configuration) -> Self {
        debug_assert_eq!(grid.dim(), q.dim());
        let mut s = Stencil {
            dim: grid.dim(),
            index: [[0; WIDTH]; MAX_DIM],
            weight: [[0.0; WIDTH]; MAX_DIM],
            stride: [0; MAX_DIM],
        };
        for i in 0..grid.dim() {
            let (idx, w) = axis_stencil(grid.axis(i), q.coord(i));
            s.index[i] = idx;
            s.weight[i] = w;
            s.stride[i] = grid.stride(i);
        }
        s
    }

    #[inline]
    pub fn apply(&self, field: &[Complex64]) -> Complex64 {
        match self.dim {
            1 => {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..WIDTH {
                    acc += field[self.index[0][a]] * self.weight[0][a];
                }
                acc
            }
            _ => {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..WIDTH {
                    let row = self.index[0][a] * self.stride[0];
                    let mut inner = Complex64::new(0.0, 0.0);
                    for b in 0..WIDTH {
                        inner += field[row + self.index[1][b]] * self.weight[1][b];
                    }
                    acc += inner * self.weight[0][a];
                }
                acc
            }
        }
    }

    #[inline]
    pub fn apply_real(&self, field: &[f64]) -> f64 {
        match self.dim {
            1 => (0..WIDTH).map(|a| field[self.index[0][a]] * self.weight[0][a]).sum(),
            _ => {
                let mut acc = 0.0;
                for a in 0..WIDTH {
                    let row = self.index[0][a] * self.stride[0];
                    let inner: f64 =
                        (0..WIDTH).map(|b| field[row + self.index[1][b]] * self.weight[1][b]).sum();
                    acc += inner * self.weight[0][a];
                }
                acc
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_grid_values_and_cubics() {
        let g = Grid::line(8.0, 32).unwrap();
        let cubic = |x: f64| 0.3 * x * x * x - x * x + 2.0 * x - 1.0;
        let field: Vec<Complex64> =
            g.axis(0).coords().map(|x| Complex64::new(cubic(x), -cubic(x))).collect();
        // exact at nodes
        let s = Stencil::new(&g, &Configuration::x(g.axis(0).coord(5)));
        assert!((s.apply(&field).re - cubic(g.axis(0).coord(5))).abs() < 1e-12);
        // exact for cubics away from the periodic seam
        for &x in &[-1.3, 0.0, 0.77, 2.49] {
            let v = Stencil::new(&g, &Configuration::x(x)).apply(&field);
            assert!((v.re - cubic(x)).abs() < 1e-11, "{x}");
            assert!((v.im + cubic(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn wraps_periodically_at_the_seam() {
        let g = Grid::line(2.0 * std::f64::consts::PI, 64).unwrap();
        let field: Vec<f64> = g.axis(0).coords().map(f64::cos).collect();
        let x = -std::f64::consts::PI + 0.01;
        let v = Stencil::new(&g, &Configuration::x(x)).apply_real(&field);
        assert!((v - x.cos()).abs() < 1e-6);
    }

    #[test]
    fn bicubic_matches_separable_cubic() {
        let g = Grid::plane((8.0, 16), (4.0, 32)).unwrap();
        let f = |x: f64, y: f64| (x * x - 0.5 * x) * (y * y * y + y);
        let field: Vec<f64> = (0..g.len())
            .map(|i| {
                let q = g.point(i);
                f(q.coord(0), q.coord(1))
            })
            .collect();
        let q = Configuration::xy(0.41, -0.33);
        let v = Stencil::new(&g, &q).apply_real(&field);
        assert!((v - f(0.41, -0.33)).abs() < 1e-12);
    }
}
