//! Point-electrode Neumann loads.

use super::StiffnessSystem;
use crate::error::{Error, Result};
use crate::geometry::ElectrodeMontage;

/// Builds the free-dof load vector for a reduced current pattern: entry
/// `reduced[j]` at the j-th non-reference electrode node and minus their sum
/// at the reference node, so the injected pattern has zero mean exactly.
pub fn neumann_load(
    system: &StiffnessSystem,
    montage: &ElectrodeMontage,
    reduced: &[f64],
) -> Result<Vec<f64>> {
    if reduced.len() != montage.reduced_len() {
        return Err(Error::Assembly(format!(
            "reduced current length {} does not match {} electrodes",
            reduced.len(),
            montage.num_electrodes()
        )));
    }
    if reduced.iter().any(|v| !v.is_finite()) {
        return Err(Error::Assembly("non-finite electrode current".into()));
    }
    let mut load = vec![0.0; system.num_free()];
    let mut sum = 0.0;
    let mut j = 0;
    for (i, &node) in montage.electrode_nodes.iter().enumerate() {
        if i == montage.reference_index {
            continue;
        }
        let dof = system.dof_of_node[node].ok_or_else(|| {
            Error::Electrodes(format!(
                "electrode node {node} lies on the Dirichlet boundary"
            ))
        })?;
        load[dof] += reduced[j];
        sum += reduced[j];
        j += 1;
    }
    let ref_node = montage.reference_node();
    let ref_dof = system.dof_of_node[ref_node].ok_or_else(|| {
        Error::Electrodes(format!(
            "reference electrode node {ref_node} lies on the Dirichlet boundary"
        ))
    })?;
    load[ref_dof] -= sum;
    Ok(load)
}
