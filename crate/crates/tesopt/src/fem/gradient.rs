//! Per-element mean current density.

use super::shape::{gauss_points, jacobian_at};
use crate::error::{Error, Result};
use crate::geometry::{ConductivityField, Mesh};

/// One d-vector per element, stored flat with stride `dim` (current density
/// in A/m^2 when fed nodal potentials in volts).
#[derive(Debug, Clone)]
pub struct ElementField {
    dim: usize,
    values: Vec<f64>,
}

impl ElementField {
    pub fn new(dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % dim, 0);
        ElementField { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_elements(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn block(&self, e: usize) -> &[f64] {
        &self.values[e * self.dim..(e + 1) * self.dim]
    }

    pub fn block_norm(&self, e: usize) -> f64 {
        self.block(e).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Mean of `sigma grad Phi` over each element, evaluated at the same Gauss
/// points used in assembly (quadrature-weighted, i.e. `1/|T| integral`).
pub fn element_gradient_mean(
    mesh: &Mesh,
    sigma: &ConductivityField,
    nodal_phi: &[f64],
) -> Result<ElementField> {
    if nodal_phi.len() != mesh.num_nodes() {
        return Err(Error::Assembly(format!(
            "potential length {} does not match {} mesh nodes",
            nodal_phi.len(),
            mesh.num_nodes()
        )));
    }
    let dim = mesh.dimension;
    let npe = mesh.nodes_per_element();
    let points = gauss_points(dim);
    let mut values = Vec::with_capacity(mesh.num_elements() * dim);
    let mut grads = [[0.0; 3]; 8];
    for e in 0..mesh.num_elements() {
        let conn = mesh.element(e);
        let mut mean = [0.0; 3];
        let mut measure = 0.0;
        for xi in &points {
            let det = jacobian_at(mesh, e, xi, &mut grads)?;
            measure += det;
            for a in 0..npe {
                let phi = nodal_phi[conn[a]];
                for k in 0..dim {
                    mean[k] += det * phi * grads[a][k];
                }
            }
        }
        for v in &mut mean[..dim] {
            *v /= measure;
        }
        let mut j = [0.0; 3];
        sigma.apply(e, &mean[..dim], &mut j[..dim]);
        values.extend_from_slice(&j[..dim]);
    }
    Ok(ElementField::new(dim, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit_box_mesh;

    #[test]
    fn zero_potential_zero_field() {
        let mesh = unit_box_mesh(2, 3).unwrap();
        let sigma = ConductivityField::isotropic(&mesh, 1.0).unwrap();
        let field = element_gradient_mean(&mesh, &sigma, &vec![0.0; mesh.num_nodes()]).unwrap();
        assert!(field.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_potential_exact() {
        for dim in [2usize, 3] {
            let mesh = unit_box_mesh(dim, 2).unwrap();
            let sigma = ConductivityField::isotropic(&mesh, 1.0).unwrap();
            let phi: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
            let field = element_gradient_mean(&mesh, &sigma, &phi).unwrap();
            for e in 0..mesh.num_elements() {
                let b = field.block(e);
                assert!((b[0] - 1.0).abs() < 1e-13);
                for &v in &b[1..] {
                    assert!(v.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn tensor_acts_on_gradient() {
        let mesh = unit_box_mesh(2, 1).unwrap();
        let sigma = ConductivityField::from_tensors(2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let phi: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
        let field = element_gradient_mean(&mesh, &sigma, &phi).unwrap();
        assert!((field.block(0)[0] - 2.0).abs() < 1e-13);
        assert!(field.block(0)[1].abs() < 1e-13);
    }
}
