//! Grid-shaped FFTs.
//!
//! Convention: the forward transform is unnormalized and the inverse carries
//! the full `1/N^d` factor, so `inverse(forward(f)) == f`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// FFT plans for every axis of a grid plus a private workspace.
///
/// Plans are cheap to clone (shared), workspaces are not shared; give each
/// worker its own `GridFft`.
pub struct GridFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Clone for GridFft {
    fn clone(&self) -> Self {
        GridFft {
            shape: self.shape.clone(),
            forward: self.forward.clone(),
            inverse: self.inverse.clone(),
            scratch: Vec::new(),
            transposed: Vec::new(),
        }
    }
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft").field("shape", &self.shape).finish()
    }
}

impl GridFft {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let shape: Vec<usize> = grid.axes().iter().map(|a| a.points).collect();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        GridFft { shape, forward, inverse, scratch: Vec::new(), transposed: Vec::new() }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    /// Inverse transform including the `1/N^d` normalization.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.apply(data, true);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn apply(&mut self, data: &mut [Complex64], inverse: bool) {
        let total: usize = self.shape.iter().product();
        assert_eq!(data.len(), total, "buffer does not match grid size");
        let plans = if inverse { &self.inverse } else { &self.forward };
        match self.shape.as_slice() {
            [_] => {
                let plan = &plans[0];
                ensure_len(&mut self.scratch, plan.get_inplace_scratch_len());
                plan.process_with_scratch(data, &mut self.scratch);
            }
            [rows, cols] => {
                let (rows, cols) = (*rows, *cols);
                // Along axis 1: rows are contiguous.
                let plan = &plans[1];
                ensure_len(&mut self.scratch, plan.get_inplace_scratch_len());
                plan.process_with_scratch(data, &mut self.scratch);
                // Along axis 0: transpose, transform, transpose back.
                ensure_len(&mut self.transposed, total);
                transpose(data, &mut self.transposed, rows, cols);
                let plan = &plans[0];
                ensure_len(&mut self.scratch, plan.get_inplace_scratch_len());
                plan.process_with_scratch(&mut self.transposed, &mut self.scratch);
                transpose(&self.transposed, data, cols, rows);
            }
            _ => unreachable!("grids have dimension 1 or 2"),
        }
    }
}

fn ensure_len(buf: &mut Vec<Complex64>, len: usize) {
    if buf.len() < len {
        buf.resize(len, Complex64::new(0.0, 0.0));
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 32;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
