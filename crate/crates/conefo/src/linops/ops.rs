//! Concrete operators.

use std::collections::HashSet;

use super::{LinOpError, LinearMap, Shape};

/// Dense real matrix stored row-major, mapping `R^cols -> R^rows`.
#[derive(Clone, Debug)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    input: Shape,
    output: Shape,
}

impl Dense {
    pub fn new(rows: usize, cols: usize, row_major: Vec<f64>) -> Result<Self, LinOpError> {
        if row_major.len() != rows * cols {
            return Err(LinOpError::Invalid(format!(
                "dense {rows}x{cols} needs {} values, got {}",
                rows * cols,
                row_major.len()
            )));
        }
        Ok(Dense {
            rows,
            cols,
            data: row_major,
            input: Shape::real(cols),
            output: Shape::real(rows),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl LinearMap for Dense {
    fn input(&self) -> &Shape {
        &self.input
    }
    fn output(&self) -> &Shape {
        &self.output
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            for (xj, a) in x.iter_mut().zip(row) {
                *xj += a * yi;
            }
        }
    }
}

/// Identity on an arbitrary space.
pub struct Identity {
    shape: Shape,
}

impl Identity {
    pub fn new(shape: Shape) -> Self {
        Identity { shape }
    }
}

impl LinearMap for Identity {
    fn input(&self) -> &Shape {
        &self.shape
    }
    fn output(&self) -> &Shape {
        &self.shape
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(y);
    }
}

/// Diagonal scaling of a real vector.
pub struct Diag {
    d: Vec<f64>,
    shape: Shape,
}

impl Diag {
    pub fn new(d: Vec<f64>) -> Self {
        let shape = Shape::real(d.len());
        Diag { d, shape }
    }
}

impl LinearMap for Diag {
    fn input(&self) -> &Shape {
        &self.shape
    }
    fn output(&self) -> &Shape {
        &self.shape
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.d) {
            *yi = di * xi;
        }
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.forward(y, x)
    }
}

/// Selects entries of a vector or matrix; the adjoint zero-fills.
pub struct Subsample {
    index: Vec<usize>,
    input: Shape,
    output: Shape,
}

impl Subsample {
    /// Selects `x[i]` for each `i` in `index`.
    pub fn vector(n: usize, index: Vec<usize>) -> Result<Self, LinOpError> {
        Self::build(Shape::real(n), n, index)
    }

    /// Selects entries `(i, j)` of a `rows x cols` matrix (0-based).
    pub fn matrix(
        rows: usize,
        cols: usize,
        entries: &[(usize, usize)],
    ) -> Result<Self, LinOpError> {
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= rows || j >= cols) {
            return Err(LinOpError::Invalid(format!(
                "entry ({i}, {j}) outside {rows}x{cols}"
            )));
        }
        let index = entries.iter().map(|&(i, j)| i + j * rows).collect();
        Self::build(Shape::matrix(rows, cols), rows * cols, index)
    }

    fn build(input: Shape, n: usize, index: Vec<usize>) -> Result<Self, LinOpError> {
        let mut seen = HashSet::with_capacity(index.len());
        for &i in &index {
            if i >= n {
                return Err(LinOpError::Invalid(format!("index {i} out of range {n}")));
            }
            if !seen.insert(i) {
                return Err(LinOpError::Invalid(format!("duplicate index {i}")));
            }
        }
        Ok(Subsample {
            output: Shape::real(index.len()),
            index,
            input,
        })
    }
}

impl LinearMap for Subsample {
    fn input(&self) -> &Shape {
        &self.input
    }
    fn output(&self) -> &Shape {
        &self.output
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (yi, &i) in y.iter_mut().zip(&self.index) {
            *yi = x[i];
        }
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (yi, &i) in y.iter().zip(&self.index) {
            x[i] = *yi;
        }
    }
}

/// Selected rows of the orthonormal DCT-II matrix.
///
/// Rows are tabulated once at construction from the cosine formula, so each
/// application is a dense `O(mn)` product.
pub struct PartialDct {
    n: usize,
    table: Vec<f64>,
    input: Shape,
    output: Shape,
}

impl PartialDct {
    pub fn new(n: usize, rows: &[usize]) -> Result<Self, LinOpError> {
        if n == 0 {
            return Err(LinOpError::Invalid("DCT length must be positive".into()));
        }
        let mut seen = HashSet::new();
        let mut table = Vec::with_capacity(rows.len() * n);
        for &k in rows {
            if k >= n || !seen.insert(k) {
                return Err(LinOpError::Invalid(format!("bad DCT row {k}")));
            }
            let s = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            table.extend((0..n).map(|j| {
                s * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos()
            }));
        }
        Ok(PartialDct {
            n,
            output: Shape::real(rows.len()),
            input: Shape::real(n),
            table,
        })
    }
}

impl LinearMap for PartialDct {
    fn input(&self) -> &Shape {
        &self.input
    }
    fn output(&self) -> &Shape {
        &self.output
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(self.table.chunks_exact(self.n)) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (yi, row) in y.iter().zip(self.table.chunks_exact(self.n)) {
            for (xj, a) in x.iter_mut().zip(row) {
                *xj += a * yi;
            }
        }
    }
}

/// Forward differences of an `n x n` column-major image packed as complex
/// numbers: `re = x[i+1,j] - x[i,j]`, `im = x[i,j+1] - x[i,j]` for
/// `0 <= i, j < n-1`, output index `i + j(n-1)`.
pub struct Diff2d {
    n: usize,
    input: Shape,
    output: Shape,
}

impl Diff2d {
    pub fn new(n: usize) -> Result<Self, LinOpError> {
        if n < 2 {
            return Err(LinOpError::Invalid("image side must be at least 2".into()));
        }
        Ok(Diff2d {
            n,
            input: Shape::real(n * n),
            output: Shape::complex((n - 1) * (n - 1)),
        })
    }
}

impl LinearMap for Diff2d {
    fn input(&self) -> &Shape {
        &self.input
    }
    fn output(&self) -> &Shape {
        &self.output
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let k = 2 * (i + j * (n - 1));
                let c = x[i + j * n];
                y[k] = x[i + 1 + j * n] - c;
                y[k + 1] = x[i + (j + 1) * n] - c;
            }
        }
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        let n = self.n;
        x.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let k = 2 * (i + j * (n - 1));
                let (re, im) = (y[k], y[k + 1]);
                x[i + 1 + j * n] += re;
                x[i + (j + 1) * n] += im;
                x[i + j * n] -= re + im;
            }
        }
    }
}
