//! Legacy-VTK (ASCII) unstructured-grid writer: cells with compartment
//! labels plus optional per-cell vector data, readable by standard viewers
//! with no extra tooling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::fem::ElementField;
use crate::geometry::Mesh;

const QUAD_VTK_TYPE: u8 = 9;
const HEX_VTK_TYPE: u8 = 12;

/// Writes the mesh with its compartment labels and any number of per-cell
/// vector fields (2D vectors are padded with a zero z component).
pub fn write_mesh_vtk(
    path: &Path,
    title: &str,
    mesh: &Mesh,
    cell_vectors: &[(&str, &ElementField)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;

    writeln!(w, "POINTS {} double", mesh.num_nodes())?;
    for p in &mesh.nodes {
        writeln!(w, "{:.9e} {:.9e} {:.9e}", p[0], p[1], p[2])?;
    }

    let npe = mesh.nodes_per_element();
    let ne = mesh.num_elements();
    writeln!(w, "CELLS {} {}", ne, ne * (npe + 1))?;
    for e in 0..ne {
        let conn: Vec<String> = mesh.element(e).iter().map(|n| n.to_string()).collect();
        writeln!(w, "{} {}", npe, conn.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    let cell_type = if mesh.dimension == 2 {
        QUAD_VTK_TYPE
    } else {
        HEX_VTK_TYPE
    };
    for _ in 0..ne {
        writeln!(w, "{cell_type}")?;
    }

    writeln!(w, "CELL_DATA {ne}")?;
    writeln!(w, "SCALARS compartment int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &label in &mesh.element_compartment {
        writeln!(w, "{label}")?;
    }
    for (name, field) in cell_vectors {
        writeln!(w, "VECTORS {name} double")?;
        for e in 0..ne {
            let block = field.block(e);
            let z = if field.dim() == 3 { block[2] } else { 0.0 };
            writeln!(w, "{:.9e} {:.9e} {:.9e}", block[0], block[1], z)?;
        }
    }
    w.flush()?;
    Ok(())
}
