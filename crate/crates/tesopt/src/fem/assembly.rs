//! Stiffness assembly and boundary-data load vectors.

use super::shape::{gauss_points, jacobian_at, shape_value};
use super::{free_dof_map, CsrMatrix, StiffnessSystem};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryKind, ConductivityField, Mesh};

/// Element stiffness matrix `Ke[a][b] = integral (sigma grad phi_a) . grad phi_b`
/// with the 2-point tensor Gauss rule.
pub fn element_stiffness(
    mesh: &Mesh,
    sigma: &ConductivityField,
    element: usize,
) -> Result<Vec<Vec<f64>>> {
    let dim = mesh.dimension;
    let n = mesh.nodes_per_element();
    let mut ke = vec![vec![0.0; n]; n];
    let mut grads = [[0.0; 3]; 8];
    let mut sg = [0.0; 3];
    for xi in gauss_points(dim) {
        let det = jacobian_at(mesh, element, &xi, &mut grads)?;
        // Upper triangle only, mirrored below: keeps K symmetric to the bit.
        for a in 0..n {
            sigma.apply(element, &grads[a][..dim], &mut sg[..dim]);
            for b in a..n {
                let mut acc = 0.0;
                for k in 0..dim {
                    acc += sg[k] * grads[b][k];
                }
                ke[a][b] += det * acc;
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            ke[a][b] = ke[b][a];
        }
    }
    Ok(ke)
}

/// Assembles the stiffness matrix over the free nodes, eliminating Dirichlet
/// rows and columns. The result is symmetric positive definite.
pub fn assemble_stiffness(mesh: &Mesh, sigma: &ConductivityField) -> Result<StiffnessSystem> {
    if sigma.num_elements() != mesh.num_elements() || sigma.dim() != mesh.dimension {
        return Err(Error::Assembly(
            "conductivity field does not match the mesh".into(),
        ));
    }
    let (dof_of_node, node_of_dof) = free_dof_map(mesh);
    let n_free = node_of_dof.len();
    let npe = mesh.nodes_per_element();
    let mut triplets = Vec::with_capacity(mesh.num_elements() * npe * npe);
    for e in 0..mesh.num_elements() {
        let ke = element_stiffness(mesh, sigma, e)?;
        let conn = mesh.element(e);
        for a in 0..npe {
            let Some(row) = dof_of_node[conn[a]] else {
                continue;
            };
            for b in 0..npe {
                if let Some(col) = dof_of_node[conn[b]] {
                    triplets.push((row, col, ke[a][b]));
                }
            }
        }
    }
    Ok(StiffnessSystem {
        matrix: CsrMatrix::from_triplets(n_free, triplets),
        dof_of_node,
        node_of_dof,
    })
}

/// Load correction for inhomogeneous Dirichlet data `g` (manufactured
/// solutions): moves the known boundary values to the right-hand side,
/// `rhs_free -= K[free, dirichlet] * g(dirichlet nodes)`.
pub fn dirichlet_lift_load<F>(
    system: &StiffnessSystem,
    mesh: &Mesh,
    sigma: &ConductivityField,
    g: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64; 3]) -> f64,
{
    let npe = mesh.nodes_per_element();
    let mut load = vec![0.0; system.num_free()];
    for e in 0..mesh.num_elements() {
        let conn = mesh.element(e);
        if conn.iter().all(|&n| system.dof_of_node[n].is_some()) {
            continue;
        }
        let ke = element_stiffness(mesh, sigma, e)?;
        for a in 0..npe {
            let Some(row) = system.dof_of_node[conn[a]] else {
                continue;
            };
            for b in 0..npe {
                if system.dof_of_node[conn[b]].is_none() {
                    load[row] -= ke[a][b] * g(&mesh.nodes[conn[b]]);
                }
            }
        }
    }
    Ok(load)
}

/// Distributed Neumann load `integral flux * phi_a ds` over the free
/// boundary, with 2-point Gauss per edge (2D) or 2x2 per face (3D). Used by
/// the manufactured-solution tests; electrode loads use point sources
/// instead.
pub fn neumann_flux_load<F>(system: &StiffnessSystem, mesh: &Mesh, flux: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64; 3]) -> f64,
{
    let mut load = vec![0.0; system.num_free()];
    let g = 0.577_350_269_189_625_76f64;
    for face in &mesh.boundary_faces {
        if face.kind != BoundaryKind::Neumann {
            continue;
        }
        if mesh.dimension == 2 {
            let a = mesh.nodes[face.nodes[0]];
            let b = mesh.nodes[face.nodes[1]];
            let half_len = 0.5 * ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            for &s in &[-g, g] {
                let w0 = 0.5 * (1.0 - s);
                let w1 = 0.5 * (1.0 + s);
                let x = [w0 * a[0] + w1 * b[0], w0 * a[1] + w1 * b[1], 0.0];
                let f = flux(&x) * half_len;
                if let Some(dof) = system.dof_of_node[face.nodes[0]] {
                    load[dof] += f * w0;
                }
                if let Some(dof) = system.dof_of_node[face.nodes[1]] {
                    load[dof] += f * w1;
                }
            }
        } else {
            // Bilinear quad face embedded in 3D.
            let corners: Vec<[f64; 3]> = face.nodes.iter().map(|&n| mesh.nodes[n]).collect();
            for &u in &[-g, g] {
                for &v in &[-g, g] {
                    let xi = [u, v, 0.0];
                    let weights: Vec<f64> = (0..4).map(|a| shape_value(2, a, &xi)).collect();
                    let mut x = [0.0; 3];
                    let mut du = [0.0; 3];
                    let mut dv = [0.0; 3];
                    for (a, c) in corners.iter().enumerate() {
                        let gr = super::shape::shape_grad_ref(2, a, &xi);
                        for k in 0..3 {
                            x[k] += weights[a] * c[k];
                            du[k] += gr[0] * c[k];
                            dv[k] += gr[1] * c[k];
                        }
                    }
                    let cross = [
                        du[1] * dv[2] - du[2] * dv[1],
                        du[2] * dv[0] - du[0] * dv[2],
                        du[0] * dv[1] - du[1] * dv[0],
                    ];
                    let area = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
                    let f = flux(&x) * area;
                    for (a, &node) in face.nodes.iter().enumerate() {
                        if let Some(dof) = system.dof_of_node[node] {
                            load[dof] += f * weights[a];
                        }
                    }
                }
            }
        }
    }
    Ok(load)
}
