//! Bilinear / trilinear Lagrange elements with 2-point Gauss quadrature per
//! axis, shared by assembly, gradient evaluation and volume computation.

use crate::error::{Error, Result};
use crate::geometry::Mesh;

const GAUSS_1D: [f64; 2] = [-0.577_350_269_189_625_76, 0.577_350_269_189_625_76];

/// Reference node coordinates, counter-clockwise quad / VTK hex ordering.
pub(crate) fn reference_nodes(dim: usize) -> &'static [[f64; 3]] {
    const QUAD: [[f64; 3]; 4] = [
        [-1.0, -1.0, 0.0],
        [1.0, -1.0, 0.0],
        [1.0, 1.0, 0.0],
        [-1.0, 1.0, 0.0],
    ];
    const HEX: [[f64; 3]; 8] = [
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ];
    if dim == 2 {
        &QUAD
    } else {
        &HEX
    }
}

/// Gauss points of the 2^dim tensor rule (all weights are 1).
pub(crate) fn gauss_points(dim: usize) -> Vec<[f64; 3]> {
    let mut pts = Vec::with_capacity(1 << dim);
    for &gx in &GAUSS_1D {
        for &gy in &GAUSS_1D {
            if dim == 2 {
                pts.push([gx, gy, 0.0]);
            } else {
                for &gz in &GAUSS_1D {
                    pts.push([gx, gy, gz]);
                }
            }
        }
    }
    pts
}

/// Shape function value of node `a` at a reference point.
pub(crate) fn shape_value(dim: usize, a: usize, xi: &[f64; 3]) -> f64 {
    let r = reference_nodes(dim)[a];
    let mut v = 1.0 / (1 << dim) as f64;
    for k in 0..dim {
        v *= 1.0 + r[k] * xi[k];
    }
    v
}

/// Gradient of shape function `a` with respect to reference coordinates.
pub(crate) fn shape_grad_ref(dim: usize, a: usize, xi: &[f64; 3]) -> [f64; 3] {
    let r = reference_nodes(dim)[a];
    let scale = 1.0 / (1 << dim) as f64;
    let mut g = [0.0; 3];
    for k in 0..dim {
        let mut v = scale * r[k];
        for m in 0..dim {
            if m != k {
                v *= 1.0 + r[m] * xi[m];
            }
        }
        g[k] = v;
    }
    g
}

/// Jacobian determinant and physical shape gradients at one reference point.
/// `grads[a]` receives the physical gradient of shape function `a`.
pub(crate) fn jacobian_at(
    mesh: &Mesh,
    element: usize,
    xi: &[f64; 3],
    grads: &mut [[f64; 3]],
) -> Result<f64> {
    let dim = mesh.dimension;
    let conn = mesh.element(element);
    // J[i][j] = d x_i / d xi_j
    let mut jac = [[0.0f64; 3]; 3];
    for (a, &node) in conn.iter().enumerate() {
        let gref = shape_grad_ref(dim, a, xi);
        let x = mesh.nodes[node];
        for i in 0..dim {
            for j in 0..dim {
                jac[i][j] += x[i] * gref[j];
            }
        }
    }
    let det = match dim {
        2 => jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0],
        _ => {
            jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0])
        }
    };
    if !(det > 0.0) {
        return Err(Error::Mesh(format!(
            "element {element} has non-positive jacobian determinant {det}"
        )));
    }
    // inv = J^{-1}
    let mut inv = [[0.0f64; 3]; 3];
    match dim {
        2 => {
            inv[0][0] = jac[1][1] / det;
            inv[0][1] = -jac[0][1] / det;
            inv[1][0] = -jac[1][0] / det;
            inv[1][1] = jac[0][0] / det;
        }
        _ => {
            inv[0][0] = (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) / det;
            inv[0][1] = (jac[0][2] * jac[2][1] - jac[0][1] * jac[2][2]) / det;
            inv[0][2] = (jac[0][1] * jac[1][2] - jac[0][2] * jac[1][1]) / det;
            inv[1][0] = (jac[1][2] * jac[2][0] - jac[1][0] * jac[2][2]) / det;
            inv[1][1] = (jac[0][0] * jac[2][2] - jac[0][2] * jac[2][0]) / det;
            inv[1][2] = (jac[0][2] * jac[1][0] - jac[0][0] * jac[1][2]) / det;
            inv[2][0] = (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]) / det;
            inv[2][1] = (jac[0][1] * jac[2][0] - jac[0][0] * jac[2][1]) / det;
            inv[2][2] = (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]) / det;
        }
    }
    // grad_x phi_a = J^{-T} grad_xi phi_a
    for (a, slot) in grads.iter_mut().enumerate().take(conn.len()) {
        let gref = shape_grad_ref(dim, a, xi);
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += inv[j][i] * gref[j];
            }
            slot[i] = acc;
        }
    }
    Ok(det)
}

/// Element measure (area in 2D, volume in 3D) by Gauss quadrature; also
/// verifies that the jacobian determinant stays positive.
pub fn element_measure(mesh: &Mesh, element: usize) -> Result<f64> {
    let mut grads = [[0.0; 3]; 8];
    let mut vol = 0.0;
    for xi in gauss_points(mesh.dimension) {
        vol += jacobian_at(mesh, element, &xi, &mut grads)?;
    }
    Ok(vol)
}
