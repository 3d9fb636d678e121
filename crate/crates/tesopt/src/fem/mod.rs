//! Forward problem: assemble and solve the weak form of
//! `div(sigma grad Phi) = 0` with point-electrode Neumann data on the free
//! boundary and homogeneous Dirichlet grounding, then evaluate per-element
//! mean current densities `sigma grad Phi`.

mod assembly;
mod gradient;
mod load;
mod shape;
mod sparse;

pub use assembly::{assemble_stiffness, dirichlet_lift_load, element_stiffness, neumann_flux_load};
pub use gradient::{element_gradient_mean, ElementField};
pub use load::neumann_load;
pub use shape::element_measure;
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Assembled stiffness matrix over the free (non-Dirichlet) nodes.
///
/// Symmetric positive definite by construction; immutable after assembly, so
/// independent solves against different loads may run concurrently.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    pub matrix: CsrMatrix,
    /// node index -> free-dof row, `None` for Dirichlet nodes.
    pub dof_of_node: Vec<Option<usize>>,
    /// free-dof row -> node index.
    pub node_of_dof: Vec<usize>,
}

impl StiffnessSystem {
    pub fn num_free(&self) -> usize {
        self.node_of_dof.len()
    }
}

/// Nodal potential over the free dofs (volts); Dirichlet nodes are implicitly
/// zero.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub phi_free: Vec<f64>,
    /// Achieved relative residual of the linear solve.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl ForwardSolution {
    /// Expands to one value per mesh node, zero on the Dirichlet boundary.
    pub fn nodal(&self, system: &StiffnessSystem) -> Vec<f64> {
        let mut out = vec![0.0; system.dof_of_node.len()];
        for (dof, &node) in system.node_of_dof.iter().enumerate() {
            out[node] = self.phi_free[dof];
        }
        out
    }
}

/// Preconditioned conjugate gradients (Jacobi preconditioner) on the
/// assembled system. Deterministic for fixed inputs; errors carry the
/// achieved residual when `max_iter` is exhausted.
pub fn solve_forward(
    system: &StiffnessSystem,
    load: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<ForwardSolution> {
    if load.len() != system.num_free() {
        return Err(Error::Assembly(format!(
            "load length {} does not match {} free dofs",
            load.len(),
            system.num_free()
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Assembly(format!(
            "tolerance must be in (0,1), got {tol}"
        )));
    }
    let (phi_free, outcome) = sparse::pcg_jacobi(&system.matrix, load, tol, max_iter)?;
    Ok(ForwardSolution {
        phi_free,
        residual_norm: outcome.residual,
        iterations: outcome.iterations,
    })
}

/// Default relative residual tolerance for forward solves.
pub const FORWARD_TOL: f64 = 1e-10;
/// Default iteration cap for forward solves.
pub const FORWARD_MAX_ITER: usize = 50_000;

/// Convenience wrapper with the default tolerance.
pub fn solve_forward_default(system: &StiffnessSystem, load: &[f64]) -> Result<ForwardSolution> {
    solve_forward(system, load, FORWARD_TOL, FORWARD_MAX_ITER)
}

pub(crate) fn free_dof_map(mesh: &Mesh) -> (Vec<Option<usize>>, Vec<usize>) {
    let dirichlet = mesh.dirichlet_node_mask();
    let mut dof_of_node = vec![None; mesh.num_nodes()];
    let mut node_of_dof = Vec::new();
    for (node, &is_dirichlet) in dirichlet.iter().enumerate() {
        if !is_dirichlet {
            dof_of_node[node] = Some(node_of_dof.len());
            node_of_dof.push(node);
        }
    }
    (dof_of_node, node_of_dof)
}
