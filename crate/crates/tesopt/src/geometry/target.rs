//! Target region and per-element target orientation.

use super::Mesh;
use crate::error::{Error, Result};

/// Target elements with one unit orientation vector each.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    /// Sorted, distinct element indices of the target region.
    pub elements: Vec<usize>,
    /// Unit vector per target element, same order as `elements`; the z entry
    /// is 0 in 2D.
    pub vectors: Vec<[f64; 3]>,
}

impl TargetSpec {
    /// Validates non-emptiness, unit vectors and containment in the brain
    /// compartments of `mesh`.
    pub fn new(mesh: &Mesh, mut elements: Vec<usize>, vectors: Vec<[f64; 3]>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Target("target region is empty".into()));
        }
        if elements.len() != vectors.len() {
            return Err(Error::Target("element/vector count mismatch".into()));
        }
        let order: Vec<usize> = {
            let mut idx: Vec<usize> = (0..elements.len()).collect();
            idx.sort_by_key(|&i| elements[i]);
            idx
        };
        let vectors: Vec<[f64; 3]> = order.iter().map(|&i| vectors[i]).collect();
        elements.sort_unstable();
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Target("duplicate target element".into()));
        }
        for (&e, v) in elements.iter().zip(&vectors) {
            if e >= mesh.num_elements() {
                return Err(Error::Target(format!("target element {e} out of range")));
            }
            if !mesh.is_brain_element(e) {
                return Err(Error::Target(format!(
                    "target element {e} lies outside the brain compartment"
                )));
            }
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Target(format!(
                    "target vector for element {e} is not unit length (|e| = {norm})"
                )));
            }
            if mesh.dimension == 2 && v[2] != 0.0 {
                return Err(Error::Target("2D target vector has a z component".into()));
            }
        }
        Ok(TargetSpec { elements, vectors })
    }

    pub fn contains(&self, element: usize) -> bool {
        self.elements.binary_search(&element).is_ok()
    }
}
