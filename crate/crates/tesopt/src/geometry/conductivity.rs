//! Per-element conductivity tensors.

use std::collections::BTreeMap;

use super::Mesh;
use crate::error::{Error, Result};

/// Conductivity of one compartment: a scalar expands to `sigma * I`, a tensor
/// is taken verbatim (row-major d x d, must be symmetric positive definite).
#[derive(Debug, Clone)]
pub enum ConductivitySpec {
    Scalar(f64),
    Tensor(Vec<Vec<f64>>),
}

/// Per-element symmetric positive-definite conductivity tensors in S/m,
/// stored flat row-major with stride `dim * dim`.
#[derive(Debug, Clone)]
pub struct ConductivityField {
    dim: usize,
    tensors: Vec<f64>,
}

impl ConductivityField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_elements(&self) -> usize {
        self.tensors.len() / (self.dim * self.dim)
    }

    /// Row-major d x d tensor of element `e`.
    pub fn tensor(&self, e: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.tensors[e * s..(e + 1) * s]
    }

    /// out = sigma_e * v
    pub fn apply(&self, e: usize, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let t = self.tensor(e);
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += t[i * d + j] * v[j];
            }
            out[i] = acc;
        }
    }

    /// Uniform isotropic field, mostly for tests.
    pub fn isotropic(mesh: &Mesh, sigma: f64) -> Result<Self> {
        let mut map = BTreeMap::new();
        for name in &mesh.compartment_names {
            map.insert(name.clone(), ConductivitySpec::Scalar(sigma));
        }
        assign_conductivity(mesh, &map)
    }

    /// Builds a field directly from per-element tensors (test utility).
    pub fn from_tensors(dim: usize, tensors: Vec<f64>) -> Result<Self> {
        if tensors.len() % (dim * dim) != 0 {
            return Err(Error::Conductivity("tensor buffer length mismatch".into()));
        }
        let field = ConductivityField { dim, tensors };
        for e in 0..field.num_elements() {
            check_spd(field.dim, field.tensor(e), &format!("element {e}"))?;
        }
        Ok(field)
    }
}

/// Expands a label -> conductivity map into per-element tensors. Every
/// compartment present in the mesh must be covered; tensors must be SPD.
pub fn assign_conductivity(
    mesh: &Mesh,
    map: &BTreeMap<String, ConductivitySpec>,
) -> Result<ConductivityField> {
    let d = mesh.dimension;
    // Resolve one tensor per compartment first so errors name the label.
    let mut per_label: Vec<Vec<f64>> = Vec::with_capacity(mesh.compartment_names.len());
    for name in &mesh.compartment_names {
        let spec = map.get(name).ok_or_else(|| {
            Error::Conductivity(format!("missing conductivity for compartment `{name}`"))
        })?;
        let tensor = match spec {
            ConductivitySpec::Scalar(s) => {
                if !(*s > 0.0) {
                    return Err(Error::Conductivity(format!(
                        "compartment `{name}`: scalar conductivity must be positive, got {s}"
                    )));
                }
                let mut t = vec![0.0; d * d];
                for i in 0..d {
                    t[i * d + i] = *s;
                }
                t
            }
            ConductivitySpec::Tensor(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Conductivity(format!(
                        "compartment `{name}`: tensor must be {d}x{d}"
                    )));
                }
                let t: Vec<f64> = rows.iter().flatten().copied().collect();
                check_spd(d, &t, &format!("compartment `{name}`"))?;
                t
            }
        };
        per_label.push(tensor);
    }

    let mut tensors = Vec::with_capacity(mesh.num_elements() * d * d);
    for e in 0..mesh.num_elements() {
        tensors.extend_from_slice(&per_label[mesh.element_compartment[e] as usize]);
    }
    Ok(ConductivityField { dim: d, tensors })
}

/// Symmetry plus Sylvester's criterion (positive leading principal minors).
fn check_spd(d: usize, t: &[f64], what: &str) -> Result<()> {
    let scale = t.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..d {
        for j in (i + 1)..d {
            if (t[i * d + j] - t[j * d + i]).abs() > 1e-12 * scale {
                return Err(Error::Conductivity(format!(
                    "{what}: tensor is not symmetric"
                )));
            }
        }
    }
    let minor_ok = match d {
        2 => t[0] > 0.0 && t[0] * t[3] - t[1] * t[2] > 0.0,
        3 => {
            let m1 = t[0];
            let m2 = t[0] * t[4] - t[1] * t[3];
            let m3 = t[0] * (t[4] * t[8] - t[5] * t[7]) - t[1] * (t[3] * t[8] - t[5] * t[6])
                + t[2] * (t[3] * t[7] - t[4] * t[6]);
            m1 > 0.0 && m2 > 0.0 && m3 > 0.0
        }
        _ => false,
    };
    if !minor_ok {
        return Err(Error::Conductivity(format!(
            "{what}: tensor is not positive definite"
        )));
    }
    Ok(())
}
