//! Discrete electrode-to-brain transfer operator.
//!
//! Column j of the transfer matrix is the element-mean current density
//! produced by a unit current at electrode j (balanced by the reference
//! electrode): the composition "reduced currents -> boundary data -> forward
//! solve -> element means" condensed into one dense matrix.

mod io;

pub use io::{read_transfer_binary, read_transfer_csv, write_transfer_binary, write_transfer_csv};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{element_gradient_mean, neumann_load, solve_forward_default, StiffnessSystem};
use crate::geometry::{ConductivityField, ElectrodeMontage, Mesh, TargetSpec};

/// Dense `(d*N) x (S-1)` map from reduced electrode currents to element-mean
/// current densities; element blocks of size `d` are laid out contiguously
/// per element. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    dim: usize,
    num_elements: usize,
    matrix: DMatrix<f64>,
}

impl TransferMatrix {
    /// Wraps an existing dense matrix; `matrix` must have `dim * num_elements`
    /// rows.
    pub fn from_dense(dim: usize, num_elements: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != dim * num_elements {
            return Err(Error::Format(format!(
                "transfer matrix has {} rows, expected {} ({} elements x dim {})",
                matrix.nrows(),
                dim * num_elements,
                num_elements,
                dim
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(
                "transfer matrix has non-finite entries".into(),
            ));
        }
        Ok(TransferMatrix {
            dim,
            num_elements,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// Number of reduced currents (S - 1).
    pub fn reduced_len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// y = B I_S
    pub fn apply(&self, reduced: &DVector<f64>) -> DVector<f64> {
        &self.matrix * reduced
    }

    /// Uniform column scaling (unit changes, e.g. per-ampere to per-mA).
    pub fn scaled(&self, factor: f64) -> TransferMatrix {
        TransferMatrix {
            dim: self.dim,
            num_elements: self.num_elements,
            matrix: &self.matrix * factor,
        }
    }
}

/// Runs one forward solve per unit reduced-current pattern and assembles the
/// element-mean responses into the columns of B. A solver failure names the
/// offending electrode column.
pub fn build_transfer_matrix(
    system: &StiffnessSystem,
    montage: &ElectrodeMontage,
    mesh: &Mesh,
    sigma: &ConductivityField,
) -> Result<TransferMatrix> {
    let cols = montage.reduced_len();
    let rows = mesh.dimension * mesh.num_elements();
    let mut matrix = DMatrix::zeros(rows, cols);
    let mut pattern = vec![0.0; cols];
    for j in 0..cols {
        pattern[j] = 1.0;
        let column = (|| -> Result<Vec<f64>> {
            let load = neumann_load(system, montage, &pattern)?;
            let solution = solve_forward_default(system, &load)?;
            let field = element_gradient_mean(mesh, sigma, &solution.nodal(system))?;
            Ok(field.as_slice().to_vec())
        })()
        .map_err(|e| Error::TransferColumn {
            column: j,
            source: Box::new(e),
        })?;
        matrix.column_mut(j).copy_from_slice(&column);
        pattern[j] = 0.0;
    }
    TransferMatrix::from_dense(mesh.dimension, mesh.num_elements(), matrix)
}

/// Per-element target direction, zero outside the target region: the
/// objective `<B I_S, e>` over the target becomes a plain inner product over
/// all elements.
#[derive(Debug, Clone)]
pub struct TargetField {
    dim: usize,
    values: Vec<f64>,
}

impl TargetField {
    /// Builds from a flat d*N buffer; every element block must have norm 0
    /// or 1.
    pub fn from_raw(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::Target("target field length mismatch".into()));
        }
        for e in 0..values.len() / dim {
            let norm: f64 = values[e * dim..(e + 1) * dim]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            if norm != 0.0 && (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Target(format!(
                    "target block {e} has norm {norm}, expected 0 or 1"
                )));
            }
        }
        Ok(TargetField { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn block(&self, e: usize) -> &[f64] {
        &self.values[e * self.dim..(e + 1) * self.dim]
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// Expands a [`TargetSpec`] into the flat d*N target field.
pub fn build_target_field(mesh: &Mesh, target: &TargetSpec) -> Result<TargetField> {
    let d = mesh.dimension;
    let mut values = vec![0.0; d * mesh.num_elements()];
    for (&e, v) in target.elements.iter().zip(&target.vectors) {
        if e >= mesh.num_elements() {
            return Err(Error::Target(format!("target element {e} out of range")));
        }
        values[e * d..(e + 1) * d].copy_from_slice(&v[..d]);
    }
    Ok(TargetField { dim: d, values })
}

/// Per-element state-constraint weights: 1 on non-target brain elements,
/// `omega_low` on the target region and every non-brain compartment. Strictly
/// positive so the weighted constraint stays well posed.
#[derive(Debug, Clone)]
pub struct WeightField {
    values: Vec<f64>,
}

impl WeightField {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, e: usize) -> f64 {
        self.values[e]
    }

    pub fn num_elements(&self) -> usize {
        self.values.len()
    }

    /// Uniform weights (test utility).
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        if !(value > 0.0) {
            return Err(Error::Target("weight must be positive".into()));
        }
        Ok(WeightField {
            values: vec![value; n],
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Target("weights must be strictly positive".into()));
        }
        Ok(WeightField { values })
    }
}

pub const OMEGA_LOW_DEFAULT: f64 = 1e-3;

pub fn build_weight_field(mesh: &Mesh, target: &TargetSpec, omega_low: f64) -> Result<WeightField> {
    if !(omega_low > 0.0 && omega_low < 1.0) {
        return Err(Error::Target(format!(
            "omega_low must lie in (0, 1), got {omega_low}"
        )));
    }
    let values = (0..mesh.num_elements())
        .map(|e| {
            if mesh.is_brain_element(e) && !target.contains(e) {
                1.0
            } else {
                omega_low
            }
        })
        .collect();
    Ok(WeightField { values })
}
