//! Polytopal uncertainty sets: vertex lists, δ-scaling and hull membership.

use crate::error::GameError;

/// Feasibility tolerance for hull membership.
pub const HULL_TOL: f64 = 1e-9;

/// Vertex list of an uncertainty set together with its nominal point.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyPolytope {
    vertices: Vec<Vec<f64>>,
    nominal: Vec<f64>,
}

impl UncertaintyPolytope {
    pub fn new(vertices: Vec<Vec<f64>>, nominal: Vec<f64>) -> Result<Self, GameError> {
        let schema = |message: String| GameError::Schema {
            field: "uncertainty".into(),
            message,
        };
        if vertices.is_empty() {
            return Err(schema("at least one vertex is required".into()));
        }
        let dim = nominal.len();
        if dim == 0 {
            return Err(schema("nominal point must have at least one entry".into()));
        }
        for (j, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(GameError::Schema {
                    field: format!("uncertainty.vertices[{j}]"),
                    message: format!("dimension {} does not match nominal dimension {dim}", v.len()),
                });
            }
        }
        if vertices.iter().flatten().chain(&nominal).any(|v| !v.is_finite()) {
            return Err(schema("coordinates must be finite".into()));
        }
        Ok(Self { vertices, nominal })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn nominal(&self) -> &[f64] {
        &self.nominal
    }

    pub fn dim(&self) -> usize {
        self.nominal.len()
    }

    /// Adds a vertex; the caller is responsible for its dimension.
    pub fn with_vertex(mut self, v: Vec<f64>) -> Result<Self, GameError> {
        self.vertices.push(v);
        Self::new(self.vertices, self.nominal)
    }
}

/// Extreme points of `δ·U + (1 − δ)·α⁰`, one per source vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledVertexSet(pub Vec<Vec<f64>>);

impl ScaledVertexSet {
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn scale_uncertainty(p: &UncertaintyPolytope, delta: f64) -> Result<ScaledVertexSet, GameError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(GameError::DeltaOutOfRange {
            field: "delta".into(),
            value: delta,
        });
    }
    Ok(ScaledVertexSet(
        p.vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&p.nominal)
                    .map(|(vk, nk)| delta * vk + (1.0 - delta) * nk)
                    .collect()
            })
            .collect(),
    ))
}

/// True iff the nominal point is a convex combination of the vertices.
pub fn hull_membership(p: &UncertaintyPolytope) -> bool {
    in_convex_hull(&p.vertices, &p.nominal)
}

/// Decides `Σ λⱼ vⱼ = point, Σ λⱼ = 1, λ ≥ 0` by phase-one simplex.
pub fn in_convex_hull(vertices: &[Vec<f64>], point: &[f64]) -> bool {
    if vertices.is_empty() {
        return false;
    }
    let rows = point.len() + 1;
    let cols = vertices.len();
    // Equality system A λ = b with the affine row appended.
    let mut a = vec![vec![0.0; cols]; rows];
    let mut b = vec![0.0; rows];
    for (j, v) in vertices.iter().enumerate() {
        for (r, vr) in v.iter().enumerate() {
            a[r][j] = *vr;
        }
        a[rows - 1][j] = 1.0;
    }
    b[..point.len()].copy_from_slice(point);
    b[rows - 1] = 1.0;
    phase_one(a, b) <= HULL_TOL
}

/// Minimum of the artificial-variable sum for `A λ = b, λ ≥ 0`.
fn phase_one(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> f64 {
    let rows = a.len();
    let cols = a[0].len();
    for r in 0..rows {
        if b[r] < 0.0 {
            b[r] = -b[r];
            a[r].iter_mut().for_each(|x| *x = -*x);
        }
    }
    // Tableau columns: λ (cols), artificials (rows), rhs.
    let width = cols + rows + 1;
    let mut t = vec![vec![0.0; width]; rows + 1];
    for r in 0..rows {
        t[r][..cols].copy_from_slice(&a[r]);
        t[r][cols + r] = 1.0;
        t[r][width - 1] = b[r];
    }
    // Objective row: minimize Σ artificials, expressed in non-basic terms.
    let objective: Vec<f64> = (0..width)
        .map(|c| if (cols..cols + rows).contains(&c) { 0.0 } else { -(0..rows).map(|r| t[r][c]).sum::<f64>() })
        .collect();
    t[rows] = objective;
    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    const EPS: f64 = 1e-12;
    for _ in 0..10_000 {
        // Bland's rule: lowest index with a negative reduced cost.
        let Some(enter) = (0..width - 1).find(|&c| t[rows][c] < -EPS) else {
            break;
        };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            if t[r][enter] > EPS {
                let ratio = t[r][width - 1] / t[r][enter];
                if ratio < best - EPS || (ratio <= best + EPS && leave.is_some_and(|l: usize| basis[r] < basis[l])) {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(leave) = leave else { break };
        let pivot = t[leave][enter];
        t[leave].iter_mut().for_each(|x| *x /= pivot);
        let pivot_row = t[leave].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r != leave {
                let factor = row[enter];
                if factor != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= factor * p);
                }
            }
        }
        basis[leave] = enter;
    }
    -t[rows][width - 1]
}
