//! Uniform cell decompositions of intervals and axis-aligned rectangles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Rectangle { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Interval { a, b } => a.is_finite() && b.is_finite() && b > a,
            DomainSpec::Rectangle { x0, x1, y0, y1 } => {
                [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{self:?} has empty interior")))
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { x0, x1, y0, y1 } => (x1 - x0).hypot(y1 - y0),
        }
    }

    /// Bounding box as `(lo, hi)`; the unused second axis is `[0, 0]` in 1D.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            DomainSpec::Interval { a, b } => ([a, 0.0], [b, 0.0]),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => ([x0, y0], [x1, y1]),
        }
    }

    /// Distance from an interior point to the complement of the domain.
    pub fn distance_to_complement(&self, x: [f64; 2]) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => (x[0] - a).min(b - x[0]),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => (x[0] - x0)
                .min(x1 - x[0])
                .min(x[1] - y0)
                .min(y1 - x[1]),
        }
    }

    /// The same domain with every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> DomainSpec {
        match *self {
            DomainSpec::Interval { a, b } => DomainSpec::Interval { a: c * a, b: c * b },
            DomainSpec::Rectangle { x0, x1, y0, y1 } => DomainSpec::Rectangle {
                x0: c * x0,
                x1: c * x1,
                y0: c * y0,
                y1: c * y1,
            },
        }
    }
}

/// Closed axis-aligned box `[lo, hi]`. In 1D only the first axis is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl CellBox {
    pub fn interval(lo: f64, hi: f64) -> Self {
        CellBox {
            lo: [lo, 0.0],
            hi: [hi, 0.0],
        }
    }

    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        CellBox {
            lo: [x0, y0],
            hi: [x1, y1],
        }
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub domain: DomainSpec,
    /// Cells per axis.
    pub n: usize,
    pub cells: Vec<CellBox>,
    pub centers: Vec<[f64; 2]>,
    pub measures: Vec<f64>,
    /// Distance from each cell center to the complement of the domain.
    pub dist: Vec<f64>,
    /// Cells whose closure meets the domain boundary.
    pub boundary_adjacent: Vec<bool>,
}

/// Refuse dense problems beyond this many cells.
pub const MAX_CELLS: usize = 8192;

pub fn build_grid(domain: DomainSpec, n: usize) -> Result<Grid> {
    domain.validate()?;
    if n == 0 {
        return Err(Error::InvalidGrid("n must be at least 1".into()));
    }
    let (lo, hi) = domain.bounds();
    let dim = domain.dim();
    let count = n.pow(dim as u32);
    if count > MAX_CELLS {
        return Err(Error::CapExceeded {
            cells: count,
            cap: MAX_CELLS,
        });
    }
    let nf = n as f64;
    // Edges computed from the endpoints so the last edge lands exactly on the boundary.
    let edge = |axis: usize, k: usize| -> f64 {
        if k == n {
            hi[axis]
        } else {
            lo[axis] + (hi[axis] - lo[axis]) * (k as f64 / nf)
        }
    };

    let mut cells = Vec::with_capacity(count);
    let mut boundary_adjacent = Vec::with_capacity(count);
    match dim {
        1 => {
            for i in 0..n {
                cells.push(CellBox::interval(edge(0, i), edge(0, i + 1)));
                boundary_adjacent.push(i == 0 || i + 1 == n);
            }
        }
        _ => {
            for ix in 0..n {
                for iy in 0..n {
                    cells.push(CellBox::rect(
                        edge(0, ix),
                        edge(0, ix + 1),
                        edge(1, iy),
                        edge(1, iy + 1),
                    ));
                    boundary_adjacent.push(ix == 0 || iy == 0 || ix + 1 == n || iy + 1 == n);
                }
            }
        }
    }

    let centers: Vec<[f64; 2]> = cells
        .iter()
        .map(|c| [0.5 * (c.lo[0] + c.hi[0]), 0.5 * (c.lo[1] + c.hi[1])])
        .collect();
    let measures = cells
        .iter()
        .map(|c| if dim == 1 { c.width(0) } else { c.width(0) * c.width(1) })
        .collect();
    let dist = centers
        .iter()
        .map(|&x| domain.distance_to_complement(x))
        .collect();

    Ok(Grid {
        domain,
        n,
        cells,
        centers,
        measures,
        dist,
        boundary_adjacent,
    })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }
}
