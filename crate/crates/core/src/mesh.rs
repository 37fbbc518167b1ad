//! Rectangular two-component domain split by a horizontal crack line.
//!
//! The crack line Γ sits at `y = ly/2`. Every node on Γ is duplicated: the
//! minus copy belongs to the lower half Ω⁻, the plus copy to the upper half
//! Ω⁺. The jump of a nodal field at interface node `e` is
//! `u[plus(e)] − u[minus(e)]`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh.{name} must be positive and finite, got {value}")]
    Length { name: &'static str, value: f64 },
    #[error("mesh.nx must be at least 1")]
    NoColumns,
    #[error("mesh.ny must be even and at least 2 so the crack line lies on a mesh row, got {0}")]
    RowCount(usize),
    #[error("degenerate triangle {index} (area {area})")]
    DegenerateTriangle { index: usize, area: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl DomainSpec {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self, MeshError> {
        let spec = DomainSpec { lx, ly, nx, ny };
        spec.check()?;
        Ok(spec)
    }

    /// Unit square, one column, two rows: the smallest mesh, which behaves
    /// like two elastic bars in series.
    pub fn two_bar() -> Self {
        DomainSpec {
            lx: 1.0,
            ly: 1.0,
            nx: 1,
            ny: 2,
        }
    }

    pub fn check(&self) -> Result<(), MeshError> {
        for (name, value) in [("lx", self.lx), ("ly", self.ly)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(MeshError::Length { name, value });
            }
        }
        if self.nx == 0 {
            return Err(MeshError::NoColumns);
        }
        if self.ny < 2 || !self.ny.is_multiple_of(2) {
            return Err(MeshError::RowCount(self.ny));
        }
        Ok(())
    }

    pub fn interface_nodes(&self) -> usize {
        self.nx + 1
    }

    /// `‖∇ŵ‖_{L²(Ω)}` for the lift profile `ŵ = y/ly`.
    pub fn lift_gradient_norm(&self) -> f64 {
        (self.lx / self.ly).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Interior,
    DirichletBottom,
    DirichletTop,
    Neumann,
}

impl NodeTag {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, NodeTag::DirichletBottom | NodeTag::DirichletTop)
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeTag::Interior => "interior",
            NodeTag::DirichletBottom => "dirichlet-bottom",
            NodeTag::DirichletTop => "dirichlet-top",
            NodeTag::Neumann => "neumann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfacePair {
    pub plus: usize,
    pub minus: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub spec: DomainSpec,
    pub coords: Vec<[f64; 2]>,
    pub tags: Vec<NodeTag>,
    pub triangles: Vec<[usize; 3]>,
    pub interface: Vec<InterfacePair>,
    /// Trapezoid weights of the interface nodes; they sum to `lx`.
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Side {
    Minus,
    Plus,
}

impl Mesh {
    pub fn build(spec: DomainSpec) -> Result<Self, MeshError> {
        spec.check()?;
        let DomainSpec { lx, ly, nx, ny } = spec;
        let cols = nx + 1;
        let mid = ny / 2;
        let id = |i: usize, j: usize, side: Side| -> usize {
            if j < mid {
                j * cols + i
            } else if j == mid {
                match side {
                    Side::Minus => mid * cols + i,
                    Side::Plus => (mid + 1) * cols + i,
                }
            } else {
                (j + 1) * cols + i
            }
        };

        let n_nodes = (nx + 1) * (ny + 1) + (nx + 1);
        let mut coords = alloc::vec![[0.0; 2]; n_nodes];
        let mut tags = alloc::vec![NodeTag::Interior; n_nodes];
        for j in 0..=ny {
            let y = if j == ny {
                ly
            } else {
                ly * j as f64 / ny as f64
            };
            for i in 0..=nx {
                let x = if i == nx {
                    lx
                } else {
                    lx * i as f64 / nx as f64
                };
                let tag = if j == 0 {
                    NodeTag::DirichletBottom
                } else if j == ny {
                    NodeTag::DirichletTop
                } else if i == 0 || i == nx {
                    NodeTag::Neumann
                } else {
                    NodeTag::Interior
                };
                for side in [Side::Minus, Side::Plus] {
                    let n = id(i, j, side);
                    coords[n] = [x, y];
                    tags[n] = tag;
                }
            }
        }

        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            // the cell row just above Γ uses plus copies of its bottom nodes
            let lower = if j == mid { Side::Plus } else { Side::Minus };
            for i in 0..nx {
                let a = id(i, j, lower);
                let b = id(i + 1, j, lower);
                let c = id(i + 1, j + 1, Side::Minus);
                let d = id(i, j + 1, Side::Minus);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        let interface = (0..=nx)
            .map(|i| InterfacePair {
                plus: id(i, mid, Side::Plus),
                minus: id(i, mid, Side::Minus),
            })
            .collect();
        let h = lx / nx as f64;
        let weights = (0..=nx)
            .map(|i| if i == 0 || i == nx { 0.5 * h } else { h })
            .collect();

        Ok(Mesh {
            spec,
            coords,
            tags,
            triangles,
            interface,
            weights,
        })
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn interface_len(&self) -> usize {
        self.interface.len()
    }

    /// Jump `plus − minus` of a nodal field at every interface node.
    pub fn jumps(&self, u: &[f64]) -> Vec<f64> {
        self.interface
            .iter()
            .map(|p| u[p.plus] - u[p.minus])
            .collect()
    }

    /// Nodal values of the lift `amp·ŵ` with `ŵ(x, y) = y/ly`.
    pub fn dirichlet_lift(&self, amp: f64) -> Vec<f64> {
        let ly = self.spec.ly;
        self.coords.iter().map(|c| amp * (c[1] / ly)).collect()
    }

    pub fn assemble_stiffness(&self) -> Result<StiffnessSystem, MeshError> {
        let mut triplets = Vec::with_capacity(9 * self.triangles.len());
        for (index, tri) in self.triangles.iter().enumerate() {
            let pts = [
                self.coords[tri[0]],
                self.coords[tri[1]],
                self.coords[tri[2]],
            ];
            let ke = element_stiffness(pts)
                .map_err(|area| MeshError::DegenerateTriangle { index, area })?;
            for a in 0..3 {
                for b in 0..3 {
                    triplets.push((tri[a], tri[b], ke[a][b]));
                }
            }
        }
        let matrix = CsrMatrix::from_triplets(self.node_count(), triplets);
        let (dirichlet, free) = (0..self.node_count()).partition(|&n| self.tags[n].is_dirichlet());
        Ok(StiffnessSystem {
            matrix,
            dirichlet,
            free,
        })
    }
}

/// P1 element matrix `∫_T ∇φ_a·∇φ_b`; errors with the signed area when the
/// triangle is degenerate or clockwise.
pub fn element_stiffness(p: [[f64; 2]; 3]) -> Result<[[f64; 3]; 3], f64> {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * det;
    let scale = (p[1][0] - p[0][0]).abs()
        + (p[1][1] - p[0][1]).abs()
        + (p[2][0] - p[0][0]).abs()
        + (p[2][1] - p[0][1]).abs();
    if !(area > 1e-14 * scale * scale) {
        return Err(area);
    }
    // ∇φ_a = (y_b − y_c, x_c − x_b) / det for cyclic (a, b, c)
    let mut grads = [[0.0; 2]; 3];
    for a in 0..3 {
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        grads[a] = [(p[b][1] - p[c][1]) / det, (p[c][0] - p[b][0]) / det];
    }
    let mut ke = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            ke[a][b] = area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
        }
    }
    Ok(ke)
}

/// Global Laplace stiffness with its Dirichlet/free node partition.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    pub matrix: CsrMatrix,
    pub dirichlet: Vec<usize>,
    pub free: Vec<usize>,
}

impl StiffnessSystem {
    /// `½ uᵀ K u`, the Dirichlet energy of the piecewise-linear field.
    pub fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.matrix.bilinear(u, u)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.matrix.dim())
            .map(|r| self.matrix.row(r).map(|(_, v)| v).sum())
            .collect()
    }
}
