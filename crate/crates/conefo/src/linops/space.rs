//! Vector spaces and their elements.
//!
//! Every element is stored as a flat `Vec<f64>`. Complex vectors use
//! interleaved `(re, im)` pairs, matrices are column-major, and product
//! elements are the concatenation of their blocks. With this layout the real
//! inner product `Re(a^H b)` is the plain dot product of the storage.

use serde::{Deserialize, Serialize};

/// Shape of a space element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Real { n: usize },
    Complex { n: usize },
    Matrix { rows: usize, cols: usize },
    Product { blocks: Vec<Shape> },
}

impl Shape {
    pub fn real(n: usize) -> Self {
        Shape::Real { n }
    }

    pub fn complex(n: usize) -> Self {
        Shape::Complex { n }
    }

    pub fn matrix(rows: usize, cols: usize) -> Self {
        Shape::Matrix { rows, cols }
    }

    pub fn product(blocks: Vec<Shape>) -> Self {
        Shape::Product { blocks }
    }

    /// Number of `f64` values in the storage of an element of this shape.
    pub fn len(&self) -> usize {
        match self {
            Shape::Real { n } => *n,
            Shape::Complex { n } => 2 * n,
            Shape::Matrix { rows, cols } => rows * cols,
            Shape::Product { blocks } => blocks.iter().map(Shape::len).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Top-level blocks; a non-product shape is its own single block.
    pub fn blocks(&self) -> Vec<Shape> {
        match self {
            Shape::Product { blocks } => blocks.clone(),
            s => vec![s.clone()],
        }
    }

    /// Storage ranges of the top-level blocks.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks()
            .iter()
            .map(|b| {
                let r = start..start + b.len();
                start = r.end;
                r
            })
            .collect()
    }
}

/// An element of a real vector, complex vector, matrix or product space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub shape: Shape,
    pub data: Vec<f64>,
}

impl Element {
    pub fn zeros(shape: Shape) -> Self {
        let data = vec![0.0; shape.len()];
        Element { shape, data }
    }

    /// Wraps storage, checking the length against the shape.
    pub fn new(shape: Shape, data: Vec<f64>) -> Option<Self> {
        (shape.len() == data.len()).then_some(Element { shape, data })
    }

    pub fn real(data: Vec<f64>) -> Self {
        Element {
            shape: Shape::real(data.len()),
            data,
        }
    }

    /// Builds a complex vector from `(re, im)` pairs.
    pub fn complex(pairs: &[(f64, f64)]) -> Self {
        let data = pairs.iter().flat_map(|&(re, im)| [re, im]).collect();
        Element {
            shape: Shape::complex(pairs.len()),
            data,
        }
    }

    /// Builds a matrix from column-major storage.
    pub fn matrix(rows: usize, cols: usize, col_major: Vec<f64>) -> Option<Self> {
        Element::new(Shape::matrix(rows, cols), col_major)
    }

    /// Concatenates blocks into a product element.
    pub fn product(blocks: Vec<Element>) -> Self {
        let shape = Shape::product(blocks.iter().map(|b| b.shape.clone()).collect());
        let data = blocks.into_iter().flat_map(|b| b.data).collect();
        Element { shape, data }
    }

    /// Splits a product element into owned blocks.
    pub fn split(&self) -> Vec<Element> {
        self.shape
            .blocks()
            .into_iter()
            .zip(self.shape.block_ranges())
            .map(|(s, r)| Element {
                shape: s,
                data: self.data[r].to_vec(),
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Real inner product; `None` when the shapes differ.
    pub fn inner(&self, other: &Element) -> Option<f64> {
        (self.shape == other.shape).then(|| dot(&self.data, &other.data))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    /// `self += a * other`; `None` when the shapes differ.
    pub fn axpy(&mut self, a: f64, other: &Element) -> Option<()> {
        (self.shape == other.shape).then(|| axpy(a, &other.data, &mut self.data))
    }

    pub fn scaled(&self, a: f64) -> Element {
        Element {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `a * x + b * y`
pub fn lincomb(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(u, v)| u - v).collect()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
