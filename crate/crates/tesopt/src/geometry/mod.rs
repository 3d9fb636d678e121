//! Synthetic multi-compartment volume-conductor phantoms.
//!
//! Structured quadrilateral (2D) and hexahedral (3D) meshes with per-element
//! compartment labels, a Neumann/Dirichlet split of the boundary, per-element
//! conductivity tensors and point-electrode montages. All quantities are SI
//! (meters, S/m); config-level units (mm, degrees) are converted before the
//! builders are called.

mod boxmesh;
mod conductivity;
mod disk;
mod electrodes;
mod target;

pub use boxmesh::{build_box_mesh, unit_box_mesh, AxisFace};
pub use conductivity::{assign_conductivity, ConductivityField, ConductivitySpec};
pub use disk::{build_layered_disk_mesh, ArcDegrees, DiskLayer};
pub use electrodes::{place_electrodes, ElectrodeMontage};
pub use target::TargetSpec;

use crate::error::{Error, Result};

/// Compartment label, an index into [`Mesh::compartment_names`].
pub type Label = u16;

/// Boundary classification: `Neumann` faces form the control boundary where
/// electrode currents are applied, `Dirichlet` faces carry the grounding
/// condition that makes the forward solution unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

/// One boundary face of an element: an edge (2 nodes) in 2D, a quadrilateral
/// face (4 nodes) in 3D.
#[derive(Debug, Clone)]
pub struct BoundaryFace {
    pub element: usize,
    pub local_face: usize,
    pub nodes: Vec<usize>,
    pub kind: BoundaryKind,
}

/// Structured multi-compartment volume mesh.
///
/// Elements are 4-node quadrilaterals (2D) or 8-node hexahedra (3D) with
/// counter-clockwise / VTK node ordering. Connectivity is stored flat with a
/// fixed stride of `nodes_per_element()`. The mesh is immutable after
/// construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dimension: usize,
    /// Node coordinates in meters; the z entry is 0 for 2D meshes.
    pub nodes: Vec<[f64; 3]>,
    element_nodes: Vec<usize>,
    pub element_compartment: Vec<Label>,
    pub compartment_names: Vec<String>,
    /// Per-compartment flag marking brain tissue (target weighting treats
    /// non-brain compartments like the target region).
    pub compartment_is_brain: Vec<bool>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub element_volume: Vec<f64>,
}

impl Mesh {
    pub(crate) fn new(
        dimension: usize,
        nodes: Vec<[f64; 3]>,
        element_nodes: Vec<usize>,
        element_compartment: Vec<Label>,
        compartment_names: Vec<String>,
        compartment_is_brain: Vec<bool>,
        boundary_faces: Vec<BoundaryFace>,
    ) -> Result<Self> {
        let mut mesh = Mesh {
            dimension,
            nodes,
            element_nodes,
            element_compartment,
            compartment_names,
            compartment_is_brain,
            boundary_faces,
            element_volume: Vec::new(),
        };
        mesh.element_volume = mesh.compute_volumes()?;
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn nodes_per_element(&self) -> usize {
        if self.dimension == 2 {
            4
        } else {
            8
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.element_nodes.len() / self.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let n = self.nodes_per_element();
        &self.element_nodes[e * n..(e + 1) * n]
    }

    pub fn element_centroid(&self, e: usize) -> [f64; 3] {
        let conn = self.element(e);
        let mut c = [0.0; 3];
        for &n in conn {
            for k in 0..3 {
                c[k] += self.nodes[n][k];
            }
        }
        for v in &mut c {
            *v /= conn.len() as f64;
        }
        c
    }

    pub fn total_volume(&self) -> f64 {
        self.element_volume.iter().sum()
    }

    /// Per-node flag: true when the node lies on a Dirichlet face.
    pub fn dirichlet_node_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        for face in &self.boundary_faces {
            if face.kind == BoundaryKind::Dirichlet {
                for &n in &face.nodes {
                    mask[n] = true;
                }
            }
        }
        mask
    }

    /// Nodes available for electrodes: on a Neumann face and on no
    /// Dirichlet face.
    pub fn neumann_only_nodes(&self) -> Vec<usize> {
        let dirichlet = self.dirichlet_node_mask();
        let mut on_neumann = vec![false; self.num_nodes()];
        for face in &self.boundary_faces {
            if face.kind == BoundaryKind::Neumann {
                for &n in &face.nodes {
                    on_neumann[n] = true;
                }
            }
        }
        (0..self.num_nodes())
            .filter(|&n| on_neumann[n] && !dirichlet[n])
            .collect()
    }

    pub fn label_of(&self, name: &str) -> Option<Label> {
        self.compartment_names
            .iter()
            .position(|n| n == name)
            .map(|i| i as Label)
    }

    pub fn is_brain_element(&self, e: usize) -> bool {
        self.compartment_is_brain[self.element_compartment[e] as usize]
    }

    /// Elements sharing at least one node with element `e` (includes corner
    /// neighbors on structured grids).
    pub fn node_neighbors(&self, e: usize) -> Vec<usize> {
        let conn: Vec<usize> = self.element(e).to_vec();
        let mut out = Vec::new();
        for other in 0..self.num_elements() {
            if other == e {
                continue;
            }
            if self.element(other).iter().any(|n| conn.contains(n)) {
                out.push(other);
            }
        }
        out
    }

    fn compute_volumes(&self) -> Result<Vec<f64>> {
        let mut volumes = Vec::with_capacity(self.num_elements());
        for e in 0..self.num_elements() {
            let vol = crate::fem::element_measure(self, e)?;
            volumes.push(vol);
        }
        Ok(volumes)
    }

    fn validate(&self) -> Result<()> {
        if self.dimension != 2 && self.dimension != 3 {
            return Err(Error::Mesh(format!(
                "dimension must be 2 or 3, got {}",
                self.dimension
            )));
        }
        let nn = self.num_nodes();
        if self.element_nodes.iter().any(|&n| n >= nn) {
            return Err(Error::Mesh("element node index out of range".into()));
        }
        if self.element_compartment.len() != self.num_elements() {
            return Err(Error::Mesh("compartment label count mismatch".into()));
        }
        if self.compartment_is_brain.len() != self.compartment_names.len() {
            return Err(Error::Mesh("compartment brain-flag count mismatch".into()));
        }
        for &label in &self.element_compartment {
            if label as usize >= self.compartment_names.len() {
                return Err(Error::Mesh(format!("unknown compartment label {label}")));
            }
        }
        if self.element_volume.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Mesh("non-positive element volume".into()));
        }
        if !self
            .boundary_faces
            .iter()
            .any(|f| f.kind == BoundaryKind::Dirichlet)
        {
            return Err(Error::Mesh(
                "Dirichlet boundary is empty; forward solution would not be unique".into(),
            ));
        }
        for face in &self.boundary_faces {
            if face.element >= self.num_elements() {
                return Err(Error::Mesh("boundary face element out of range".into()));
            }
            let expected = if self.dimension == 2 { 2 } else { 4 };
            if face.nodes.len() != expected {
                return Err(Error::Mesh("boundary face node count mismatch".into()));
            }
        }
        Ok(())
    }
}

/// Local face -> element-local node indices.
///
/// 2D quad (counter-clockwise v0..v3): face 0 bottom (v0,v1), 1 right (v1,v2),
/// 2 top (v2,v3), 3 left (v3,v0).
pub(crate) const QUAD_FACES: [[usize; 2]; 4] = [[0, 1], [1, 2], [2, 3], [3, 0]];

/// 3D hex (VTK ordering, nodes 0..3 bottom CCW, 4..7 top): faces ordered
/// x-, x+, y-, y+, z-, z+.
pub(crate) const HEX_FACES: [[usize; 4]; 6] = [
    [0, 4, 7, 3],
    [1, 2, 6, 5],
    [0, 1, 5, 4],
    [3, 7, 6, 2],
    [0, 3, 2, 1],
    [4, 5, 6, 7],
];
