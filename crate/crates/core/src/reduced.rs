//! Exact elimination of the bulk unknowns.
//!
//! The jump is imposed by substitution: each plus copy on Γ carries the
//! value of its minus copy plus `z_e`, so the free system stays symmetric
//! positive definite. Condensing the free unknowns leaves
//!
//! ```text
//! E(z; amp) = ½ zᵀ S z − amp·c_unitᵀ z + ½ amp²·e0_unit
//! ```
//!
//! which is the minimum of the discrete Dirichlet energy over all fields
//! with jump `z` and top boundary value `amp`.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::linalg::{dot, norm2, BandedCholesky, CsrMatrix, DenseCholesky, DenseMatrix};
use crate::mesh::{Mesh, StiffnessSystem};

/// Relative residual every bulk solve must reach.
pub const SOLVE_RESIDUAL_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReducedError {
    #[error("jump vector has {got} entries, the interface has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("constrained bulk system is singular (pivot {pivot})")]
    SingularBulk { pivot: usize },
    #[error("condensed interface matrix is not positive definite (pivot {pivot})")]
    IndefiniteInterface { pivot: usize },
    #[error("bulk solve residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("interface matrix is not symmetric (max |S_ij - S_ji| = {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },
    #[error("interface weights must be positive, got {0}")]
    Weight(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dof {
    Free(usize),
    /// Dirichlet node with lift profile value `y/ly`.
    Fixed(f64),
    /// Plus copy of interface node `e`: value of the free minus copy plus `z_e`.
    Plus {
        minus_dof: usize,
        node: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ReducedModel {
    mesh: Mesh,
    stiffness: StiffnessSystem,
    dofs: Vec<Dof>,
    free_matrix: CsrMatrix,
    free_factor: BandedCholesky,
    interface: InterfaceEnergy,
}

/// The condensed quadratic `E(z; amp)` together with the interface
/// quadrature weights. Everything the step minimizer needs, independent of
/// the mesh it came from.
#[derive(Debug, Clone)]
pub struct InterfaceEnergy {
    s: DenseMatrix,
    s_factor: DenseCholesky,
    c_unit: Vec<f64>,
    e0_unit: f64,
    weights: Vec<f64>,
    asymmetry: f64,
}

/// A reconstructed nodal field and its discrete equilibrium residual.
#[derive(Debug, Clone)]
pub struct BulkField {
    pub u: Vec<f64>,
    /// `max |(K u)_i|` over free (non-Dirichlet) unknowns after substitution.
    pub free_residual: f64,
}

impl ReducedModel {
    pub fn condense(mesh: Mesh, stiffness: StiffnessSystem) -> Result<Self, ReducedError> {
        let n = mesh.node_count();
        let ly = mesh.spec.ly;
        let mut plus_of = vec![None; n];
        for (e, pair) in mesh.interface.iter().enumerate() {
            plus_of[pair.plus] = Some(e);
        }
        let mut dofs = vec![Dof::Fixed(0.0); n];
        let mut n_free = 0;
        for node in 0..n {
            if mesh.tags[node].is_dirichlet() {
                dofs[node] = Dof::Fixed(mesh.coords[node][1] / ly);
            } else if plus_of[node].is_none() {
                dofs[node] = Dof::Free(n_free);
                n_free += 1;
            }
        }
        for (e, pair) in mesh.interface.iter().enumerate() {
            let Dof::Free(minus_dof) = dofs[pair.minus] else {
                unreachable!("minus copies are never Dirichlet")
            };
            dofs[pair.plus] = Dof::Plus { minus_dof, node: e };
        }

        let fold = |node: usize| match dofs[node] {
            Dof::Free(i) => Some(i),
            Dof::Plus { minus_dof, .. } => Some(minus_dof),
            Dof::Fixed(_) => None,
        };
        let mut triplets = Vec::new();
        for r in 0..n {
            let Some(fr) = fold(r) else { continue };
            for (c, v) in stiffness.matrix.row(r) {
                if let Some(fc) = fold(c) {
                    triplets.push((fr, fc, v));
                }
            }
        }
        let free_matrix = CsrMatrix::from_triplets(n_free, triplets);
        let free_factor = BandedCholesky::factor(&free_matrix)
            .map_err(|e| ReducedError::SingularBulk { pivot: e.pivot })?;

        let m = mesh.interface_len();
        let weights = mesh.weights.clone();
        let mut model = ReducedModel {
            mesh,
            stiffness,
            dofs,
            free_matrix,
            free_factor,
            interface: InterfaceEnergy {
                s: DenseMatrix::zeros(0),
                s_factor: DenseCholesky::factor(&DenseMatrix::zeros(0))
                    .expect("empty factorization"),
                c_unit: Vec::new(),
                e0_unit: 0.0,
                weights: Vec::new(),
                asymmetry: 0.0,
            },
        };

        // one bulk solve per unit jump, plus the unit boundary amplitude
        let mut unit_fields = Vec::with_capacity(m);
        for e in 0..m {
            let mut z = vec![0.0; m];
            z[e] = 1.0;
            unit_fields.push(model.solve_field(&z, 0.0)?.u);
        }
        let lift_field = model.solve_field(&vec![0.0; m], 1.0)?.u;

        let k = &model.stiffness.matrix;
        let k_units: Vec<Vec<f64>> = unit_fields.iter().map(|u| k.mul_vec(u)).collect();
        let k_lift = k.mul_vec(&lift_field);
        let mut s = DenseMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                s.set(i, j, dot(&unit_fields[i], &k_units[j]));
            }
        }
        let asymmetry = s.max_asymmetry();
        for i in 0..m {
            for j in 0..i {
                let avg = 0.5 * (s.get(i, j) + s.get(j, i));
                s.set(i, j, avg);
                s.set(j, i, avg);
            }
        }
        let c_unit = unit_fields.iter().map(|u| -dot(u, &k_lift)).collect();
        let e0_unit = dot(&lift_field, &k_lift);
        let mut interface = InterfaceEnergy::new(s, c_unit, e0_unit, weights)?;
        interface.asymmetry = asymmetry;
        model.interface = interface;
        Ok(model)
    }

    /// Mesh, stiffness and condensation in one call.
    pub fn from_mesh(mesh: Mesh) -> Result<Self, crate::Error> {
        let stiffness = mesh.assemble_stiffness()?;
        Ok(Self::condense(mesh, stiffness)?)
    }

    pub fn interface(&self) -> &InterfaceEnergy {
        &self.interface
    }

    pub fn interface_len(&self) -> usize {
        self.interface.len()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn stiffness(&self) -> &StiffnessSystem {
        &self.stiffness
    }

    pub fn interface_matrix(&self) -> &DenseMatrix {
        &self.interface.s
    }

    pub fn c_unit(&self) -> &[f64] {
        &self.interface.c_unit
    }

    pub fn e0_unit(&self) -> f64 {
        self.interface.e0_unit
    }

    pub fn weights(&self) -> &[f64] {
        &self.interface.weights
    }

    /// `max |S_ij − S_ji|` measured before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.interface.asymmetry
    }

    pub fn reduced_energy(&self, z: &[f64], amp: f64) -> Result<f64, ReducedError> {
        self.interface.reduced_energy(z, amp)
    }

    pub fn energy(&self, z: &[f64], amp: f64) -> f64 {
        self.interface.energy(z, amp)
    }

    pub fn traction(&self, z: &[f64], amp: f64) -> Result<Vec<f64>, ReducedError> {
        self.interface.traction(z, amp)
    }

    pub fn elastic_minimizer(&self, amp: f64) -> Vec<f64> {
        self.interface.elastic_minimizer(amp)
    }

    pub fn lift_pairing(&self, z: &[f64], amp: f64) -> f64 {
        self.interface.lift_pairing(z, amp)
    }

    fn check_dim(&self, z: &[f64]) -> Result<(), ReducedError> {
        self.interface.check_dim(z)
    }

    /// Full nodal field with jump `z` and boundary amplitude `amp`, obtained
    /// by a bulk solve.
    pub fn reconstruct_bulk(&self, z: &[f64], amp: f64) -> Result<BulkField, ReducedError> {
        self.check_dim(z)?;
        self.solve_field(z, amp)
    }

    fn solve_field(&self, z: &[f64], amp: f64) -> Result<BulkField, ReducedError> {
        let n = self.mesh.node_count();
        let mut fixed_part = vec![0.0; n];
        for (node, dof) in self.dofs.iter().enumerate() {
            match *dof {
                Dof::Fixed(profile) => fixed_part[node] = amp * profile,
                Dof::Plus { node: e, .. } => fixed_part[node] = z[e],
                Dof::Free(_) => {}
            }
        }
        let k_fixed = self.stiffness.matrix.mul_vec(&fixed_part);
        let mut rhs = vec![0.0; self.free_matrix.dim()];
        for (node, dof) in self.dofs.iter().enumerate() {
            match *dof {
                Dof::Free(i) | Dof::Plus { minus_dof: i, .. } => rhs[i] -= k_fixed[node],
                Dof::Fixed(_) => {}
            }
        }
        let mut x = self.free_factor.solve(&rhs);
        let limit = SOLVE_RESIDUAL_REL * norm2(&rhs);
        let mut residual = self.residual(&x, &rhs);
        // iterative refinement if the direct solve fell short
        for _ in 0..3 {
            if residual.0 <= limit {
                break;
            }
            let dx = self.free_factor.solve(&residual.1);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            residual = self.residual(&x, &rhs);
        }
        if residual.0 > limit {
            return Err(ReducedError::Residual {
                residual: residual.0,
                limit,
            });
        }

        let u: Vec<f64> = self
            .dofs
            .iter()
            .enumerate()
            .map(|(node, dof)| match *dof {
                Dof::Free(i) => x[i],
                Dof::Fixed(_) => fixed_part[node],
                Dof::Plus { minus_dof, node: e } => x[minus_dof] + z[e],
            })
            .collect();
        let free_residual = self.free_residual(&u);
        Ok(BulkField { u, free_residual })
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> (f64, Vec<f64>) {
        let ax = self.free_matrix.mul_vec(x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        (norm2(&r), r)
    }

    /// Discrete equilibrium residual of a full nodal field: the free rows
    /// of `K u` after folding plus copies onto their minus copies.
    pub fn free_residual(&self, u: &[f64]) -> f64 {
        let ku = self.stiffness.matrix.mul_vec(u);
        let mut folded = vec![0.0; self.free_matrix.dim()];
        for (node, dof) in self.dofs.iter().enumerate() {
            match *dof {
                Dof::Free(i) | Dof::Plus { minus_dof: i, .. } => folded[i] += ku[node],
                Dof::Fixed(_) => {}
            }
        }
        folded.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `½ uᵀ K u` of a full nodal field.
    pub fn field_energy(&self, u: &[f64]) -> f64 {
        self.stiffness.energy(u)
    }
}

impl InterfaceEnergy {
    /// Builds the energy from its coefficients; `s` must be symmetric
    /// (to `1e-12` relative) and positive definite.
    pub fn new(
        s: DenseMatrix,
        c_unit: Vec<f64>,
        e0_unit: f64,
        weights: Vec<f64>,
    ) -> Result<Self, ReducedError> {
        let m = s.dim();
        for len in [c_unit.len(), weights.len()] {
            if len != m {
                return Err(ReducedError::Dimension {
                    expected: m,
                    got: len,
                });
            }
        }
        let scale = (0..m)
            .map(|i| s.get(i, i).abs())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let asymmetry = s.max_asymmetry();
        if asymmetry > 1e-12 * scale {
            return Err(ReducedError::Asymmetric { asymmetry });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(ReducedError::Weight(*w));
        }
        let s_factor = DenseCholesky::factor(&s)
            .map_err(|e| ReducedError::IndefiniteInterface { pivot: e.pivot })?;
        Ok(InterfaceEnergy {
            s,
            s_factor,
            c_unit,
            e0_unit,
            weights,
            asymmetry,
        })
    }

    pub fn len(&self) -> usize {
        self.c_unit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_unit.is_empty()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.s
    }

    pub fn c_unit(&self) -> &[f64] {
        &self.c_unit
    }

    pub fn e0_unit(&self) -> f64 {
        self.e0_unit
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn check_dim(&self, z: &[f64]) -> Result<(), ReducedError> {
        if z.len() == self.len() {
            Ok(())
        } else {
            Err(ReducedError::Dimension {
                expected: self.len(),
                got: z.len(),
            })
        }
    }

    pub fn reduced_energy(&self, z: &[f64], amp: f64) -> Result<f64, ReducedError> {
        self.check_dim(z)?;
        Ok(self.energy(z, amp))
    }

    /// Unchecked `E(z; amp)`; exact value is nonnegative, rounding below zero
    /// is clipped.
    pub fn energy(&self, z: &[f64], amp: f64) -> f64 {
        let sz = self.s.mul_vec(z);
        let e = 0.5 * dot(z, &sz) - amp * dot(&self.c_unit, z) + 0.5 * amp * amp * self.e0_unit;
        e.max(0.0)
    }

    /// `∂E/∂z = S z − amp·c_unit`.
    pub fn gradient(&self, z: &[f64], amp: f64) -> Vec<f64> {
        let mut g = self.s.mul_vec(z);
        for (gi, ci) in g.iter_mut().zip(&self.c_unit) {
            *gi -= amp * ci;
        }
        g
    }

    /// Nodal tractions `t_e = (amp·c_unit − S z)_e / w_e`; positive values
    /// resist an increasing jump.
    pub fn traction(&self, z: &[f64], amp: f64) -> Result<Vec<f64>, ReducedError> {
        self.check_dim(z)?;
        Ok(self.traction_unchecked(z, amp))
    }

    pub fn traction_unchecked(&self, z: &[f64], amp: f64) -> Vec<f64> {
        self.gradient(z, amp)
            .iter()
            .zip(&self.weights)
            .map(|(g, w)| -g / w)
            .collect()
    }

    /// Minimizer of the elastic energy alone, `S⁻¹ c_unit · amp`.
    pub fn elastic_minimizer(&self, amp: f64) -> Vec<f64> {
        let c: Vec<f64> = self.c_unit.iter().map(|c| amp * c).collect();
        self.s_factor.solve(&c)
    }

    /// Elastic minimizer over the nodes whose entry in `fixed` is `None`,
    /// the others held at the given jumps.
    pub fn elastic_minimizer_with_fixed(&self, amp: f64, fixed: &[Option<f64>]) -> Vec<f64> {
        let free: Vec<usize> = (0..self.len()).filter(|&e| fixed[e].is_none()).collect();
        let mut z: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        if free.is_empty() {
            return z;
        }
        if free.len() == self.len() {
            return self.elastic_minimizer(amp);
        }
        let mut sub = DenseMatrix::zeros(free.len());
        let mut rhs = vec![0.0; free.len()];
        for (a, &i) in free.iter().enumerate() {
            let mut r = amp * self.c_unit[i];
            for (j, f) in fixed.iter().enumerate() {
                if let Some(v) = f {
                    r -= self.s.get(i, j) * v;
                }
            }
            rhs[a] = r;
            for (b, &j) in free.iter().enumerate() {
                sub.set(a, b, self.s.get(i, j));
            }
        }
        let sol = DenseCholesky::factor(&sub)
            .expect("principal submatrix of an SPD matrix")
            .solve(&rhs);
        for (a, &i) in free.iter().enumerate() {
            z[i] = sol[a];
        }
        z
    }

    /// `⟨∇u, ∇ŵ⟩_{L²}` for the condensed field with jump `z` and amplitude
    /// `amp`; equals `amp·e0_unit − c_unitᵀ z`.
    pub fn lift_pairing(&self, z: &[f64], amp: f64) -> f64 {
        amp * self.e0_unit - dot(&self.c_unit, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;

    fn model(lx: f64, ly: f64, nx: usize, ny: usize) -> ReducedModel {
        ReducedModel::from_mesh(Mesh::build(DomainSpec::new(lx, ly, nx, ny).unwrap()).unwrap())
            .unwrap()
    }

    /// Independent route: direct minimization of the full nodal energy for a
    /// spatially uniform jump on the two-bar mesh. With one column there are
    /// only two free values (the minus copies); brute-force the 2×2 normal
    /// equations from finite differences of the assembled energy.
    fn two_bar_full_energy(z: f64, amp: f64) -> f64 {
        let mesh = Mesh::build(DomainSpec::two_bar()).unwrap();
        let k = mesh.assemble_stiffness().unwrap();
        let field = |a: f64, b: f64| {
            let mut u = mesh.dirichlet_lift(amp);
            let p = &mesh.interface;
            u[p[0].minus] = a;
            u[p[1].minus] = b;
            u[p[0].plus] = a + z;
            u[p[1].plus] = b + z;
            u
        };
        let energy = |a: f64, b: f64| k.energy(&field(a, b));
        // energy is quadratic in (a, b): recover gradient and Hessian exactly
        let e00 = energy(0.0, 0.0);
        let (ea, eb, eab) = (energy(1.0, 0.0), energy(0.0, 1.0), energy(1.0, 1.0));
        let (em, en) = (energy(-1.0, 0.0), energy(0.0, -1.0));
        let haa = ea + em - 2.0 * e00;
        let hbb = eb + en - 2.0 * e00;
        let ga = 0.5 * (ea - em);
        let gb = 0.5 * (eb - en);
        let hab = eab - e00 - ga - gb - 0.5 * haa - 0.5 * hbb;
        let det = haa * hbb - hab * hab;
        let a = (-ga * hbb + gb * hab) / det;
        let b = (-gb * haa + ga * hab) / det;
        energy(a, b)
    }

    #[test]
    fn two_bar_uniform_jump_matches_full_assembly() {
        let m = model(1.0, 1.0, 1, 2);
        let ones = [1.0, 1.0];
        let s1 = m.interface_matrix().mul_vec(&ones);
        assert!((dot(&ones, &s1) - 1.0).abs() < 1e-13);
        assert!((dot(&ones, m.c_unit()) - 1.0).abs() < 1e-13);
        for (z, amp) in [(0.0, 0.7), (0.3, 0.8), (1.2, -0.4), (2.0, 2.0)] {
            let full = two_bar_full_energy(z, amp);
            assert!((full - 0.5 * (amp - z) * (amp - z)).abs() < 1e-13);
            let reduced = m.reduced_energy(&[z, z], amp).unwrap();
            assert!(
                (reduced - full).abs() < 1e-12 * full.max(1.0),
                "z={z} amp={amp}"
            );
        }
    }

    #[test]
    fn zero_jump_energy_and_traction() {
        let m = model(1.0, 1.0, 1, 2);
        let w = 0.9;
        assert!((m.reduced_energy(&[0.0, 0.0], w).unwrap() - 0.5 * w * w).abs() < 1e-14);
        for t in m.traction(&[0.0, 0.0], 0.4).unwrap() {
            assert!((t - 0.4).abs() < 1e-13);
        }
        assert!(m
            .traction(&[0.0, 0.0], 0.0)
            .unwrap()
            .iter()
            .all(|&t| t == 0.0));
    }

    #[test]
    fn zero_load_is_trivial() {
        let m = model(2.0, 1.0, 4, 4);
        assert!(m.elastic_minimizer(0.0).iter().all(|&z| z == 0.0));
        assert_eq!(m.reduced_energy(&[0.0; 5], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn interface_matrix_is_spd_and_symmetric() {
        for (nx, ny) in [(1, 2), (4, 2), (6, 4), (9, 6)] {
            let m = model(1.3, 0.9, nx, ny);
            assert!(m.asymmetry() <= 1e-12, "asymmetry {}", m.asymmetry());
            assert!(DenseCholesky::factor(m.interface_matrix()).is_ok());
        }
    }

    #[test]
    fn elastic_minimizer_has_zero_traction() {
        let m = model(2.0, 1.0, 5, 4);
        let z = m.elastic_minimizer(0.7);
        for t in m.traction(&z, 0.7).unwrap() {
            assert!(t.abs() < 1e-12);
        }
        let e_min = m.energy(&z, 0.7);
        let mut other = z.clone();
        other[2] += 0.01;
        assert!(m.energy(&other, 0.7) > e_min);
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(1.0, 1.0, 1, 2);
        assert_eq!(
            m.reduced_energy(&[0.0], 1.0),
            Err(ReducedError::Dimension {
                expected: 2,
                got: 1
            })
        );
        assert!(m.traction(&[0.0; 3], 1.0).is_err());
        assert!(m.reconstruct_bulk(&[], 1.0).is_err());
    }

    #[test]
    fn reconstruction_two_bar_linear_field() {
        let m = model(1.0, 1.0, 1, 2);
        let f = m.reconstruct_bulk(&[0.0, 0.0], 0.6).unwrap();
        for (u, c) in f.u.iter().zip(&m.mesh().coords) {
            assert!((u - 0.6 * c[1]).abs() < 1e-14);
        }
        let f = m.reconstruct_bulk(&[1.0, 1.0], 1.0).unwrap();
        for j in m.mesh().jumps(&f.u) {
            assert!((j - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_pairing_matches_field_inner_product() {
        let m = model(1.5, 1.0, 4, 4);
        let z = [0.1, -0.2, 0.05, 0.3, 0.0];
        let amp = 0.8;
        let u = m.reconstruct_bulk(&z, amp).unwrap().u;
        let w_hat = m.mesh().dirichlet_lift(1.0);
        let direct = m.stiffness().matrix.bilinear(&u, &w_hat);
        assert!((direct - m.lift_pairing(&z, amp)).abs() < 1e-12);
    }

    #[test]
    fn traction_is_scaled_negative_gradient() {
        let m = model(1.0, 1.0, 3, 2);
        let z = [0.2, -0.1, 0.4, 0.05];
        let amp = 0.7;
        let t = m.traction(&z, amp).unwrap();
        let h = 1e-6;
        for e in 0..4 {
            let mut zp = z;
            let mut zm = z;
            zp[e] += h;
            zm[e] -= h;
            let fd = (m.energy(&zp, amp) - m.energy(&zm, amp)) / (2.0 * h);
            assert!((fd + m.weights()[e] * t[e]).abs() < 1e-6);
        }
    }

    #[test]
    fn constrained_elastic_minimizer_respects_fixed_nodes() {
        let m = model(2.0, 1.0, 4, 2);
        let fixed = [Some(0.0), None, None, Some(0.1), None];
        let z = m.interface().elastic_minimizer_with_fixed(0.9, &fixed);
        assert_eq!(z[0], 0.0);
        assert_eq!(z[3], 0.1);
        let t = m.traction(&z, 0.9).unwrap();
        for e in [1, 2, 4] {
            assert!(t[e].abs() < 1e-12);
        }
    }
}
