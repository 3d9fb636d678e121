//! Tensor-product box meshes (the manufactured-solution testbed).

use super::{BoundaryFace, BoundaryKind, Label, Mesh, HEX_FACES, QUAD_FACES};
use crate::error::{Error, Result};

/// One axis-aligned face of a box domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisFace {
    XNeg,
    XPos,
    YNeg,
    YPos,
    ZNeg,
    ZPos,
}

impl AxisFace {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "x-" => Ok(AxisFace::XNeg),
            "x+" => Ok(AxisFace::XPos),
            "y-" => Ok(AxisFace::YNeg),
            "y+" => Ok(AxisFace::YPos),
            "z-" => Ok(AxisFace::ZNeg),
            "z+" => Ok(AxisFace::ZPos),
            other => Err(Error::Mesh(format!(
                "unknown dirichlet face `{other}` (expected x-/x+/y-/y+/z-/z+)"
            ))),
        }
    }

    fn axis(self) -> usize {
        match self {
            AxisFace::XNeg | AxisFace::XPos => 0,
            AxisFace::YNeg | AxisFace::YPos => 1,
            AxisFace::ZNeg | AxisFace::ZPos => 2,
        }
    }

    fn is_negative_side(self) -> bool {
        matches!(self, AxisFace::XNeg | AxisFace::YNeg | AxisFace::ZNeg)
    }
}

/// Builds a tensor-product grid over `[0, extent[k]]` per axis with
/// `divisions[k]` elements per axis. One full face is Dirichlet, every other
/// boundary face is Neumann. Elements are labeled through `classify`, called
/// with the element centroid.
pub fn build_box_mesh<F>(
    extent: &[f64],
    divisions: &[usize],
    compartment_names: Vec<String>,
    compartment_is_brain: Vec<bool>,
    classify: F,
    dirichlet_face: AxisFace,
) -> Result<Mesh>
where
    F: Fn(&[f64; 3]) -> Label,
{
    let dim = extent.len();
    if dim != 2 && dim != 3 {
        return Err(Error::Mesh(format!(
            "extent must have 2 or 3 axes, got {dim}"
        )));
    }
    if divisions.len() != dim {
        return Err(Error::Mesh("divisions/extent length mismatch".into()));
    }
    if extent.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Mesh("zero or negative extent".into()));
    }
    if divisions.iter().any(|&n| n == 0) {
        return Err(Error::Mesh("divisions must be >= 1 per axis".into()));
    }
    if dirichlet_face.axis() >= dim {
        return Err(Error::Mesh(
            "dirichlet face axis outside mesh dimension".into(),
        ));
    }

    let n = [
        divisions[0],
        divisions[1],
        if dim == 3 { divisions[2] } else { 1 },
    ];
    let h = [
        extent[0] / n[0] as f64,
        extent[1] / n[1] as f64,
        if dim == 3 {
            extent[2] / n[2] as f64
        } else {
            0.0
        },
    ];

    // Nodes in x-fastest order.
    let nodes_per_axis = [n[0] + 1, n[1] + 1, if dim == 3 { n[2] + 1 } else { 1 }];
    let node_id = |ix: usize, iy: usize, iz: usize| -> usize {
        (iz * nodes_per_axis[1] + iy) * nodes_per_axis[0] + ix
    };
    let mut nodes = Vec::with_capacity(nodes_per_axis.iter().product());
    for iz in 0..nodes_per_axis[2] {
        for iy in 0..nodes_per_axis[1] {
            for ix in 0..nodes_per_axis[0] {
                nodes.push([ix as f64 * h[0], iy as f64 * h[1], iz as f64 * h[2]]);
            }
        }
    }

    let mut element_nodes = Vec::new();
    let mut labels = Vec::new();
    let nz = if dim == 3 { n[2] } else { 1 };
    for iz in 0..nz {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                if dim == 2 {
                    element_nodes.extend_from_slice(&[
                        node_id(ix, iy, 0),
                        node_id(ix + 1, iy, 0),
                        node_id(ix + 1, iy + 1, 0),
                        node_id(ix, iy + 1, 0),
                    ]);
                } else {
                    element_nodes.extend_from_slice(&[
                        node_id(ix, iy, iz),
                        node_id(ix + 1, iy, iz),
                        node_id(ix + 1, iy + 1, iz),
                        node_id(ix, iy + 1, iz),
                        node_id(ix, iy, iz + 1),
                        node_id(ix + 1, iy, iz + 1),
                        node_id(ix + 1, iy + 1, iz + 1),
                        node_id(ix, iy + 1, iz + 1),
                    ]);
                }
                let centroid = [
                    (ix as f64 + 0.5) * h[0],
                    (iy as f64 + 0.5) * h[1],
                    if dim == 3 {
                        (iz as f64 + 0.5) * h[2]
                    } else {
                        0.0
                    },
                ];
                labels.push(classify(&centroid));
            }
        }
    }

    // Boundary faces: element faces on the domain hull.
    let nodes_per_element = if dim == 2 { 4 } else { 8 };
    let element_id = |ix: usize, iy: usize, iz: usize| -> usize { (iz * n[1] + iy) * n[0] + ix };
    let mut boundary_faces = Vec::new();
    let d_axis = dirichlet_face.axis();
    let d_neg = dirichlet_face.is_negative_side();
    for iz in 0..nz {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                let e = element_id(ix, iy, iz);
                // (local_face, axis, on_negative_side, at_boundary)
                let checks: Vec<(usize, usize, bool, bool)> = if dim == 2 {
                    vec![
                        (0, 1, true, iy == 0),
                        (1, 0, false, ix + 1 == n[0]),
                        (2, 1, false, iy + 1 == n[1]),
                        (3, 0, true, ix == 0),
                    ]
                } else {
                    vec![
                        (0, 0, true, ix == 0),
                        (1, 0, false, ix + 1 == n[0]),
                        (2, 1, true, iy == 0),
                        (3, 1, false, iy + 1 == n[1]),
                        (4, 2, true, iz == 0),
                        (5, 2, false, iz + 1 == n[2]),
                    ]
                };
                for (local_face, axis, neg, at_boundary) in checks {
                    if !at_boundary {
                        continue;
                    }
                    let kind = if axis == d_axis && neg == d_neg {
                        BoundaryKind::Dirichlet
                    } else {
                        BoundaryKind::Neumann
                    };
                    let conn = &element_nodes[e * nodes_per_element..(e + 1) * nodes_per_element];
                    let face_nodes: Vec<usize> = if dim == 2 {
                        QUAD_FACES[local_face].iter().map(|&l| conn[l]).collect()
                    } else {
                        HEX_FACES[local_face].iter().map(|&l| conn[l]).collect()
                    };
                    boundary_faces.push(BoundaryFace {
                        element: e,
                        local_face,
                        nodes: face_nodes,
                        kind,
                    });
                }
            }
        }
    }

    Mesh::new(
        dim,
        nodes,
        element_nodes,
        labels,
        compartment_names,
        compartment_is_brain,
        boundary_faces,
    )
}

/// Single-compartment unit box `[0,1]^dim` with `n` elements per axis and the
/// x- face grounded. The workhorse of the solver tests.
pub fn unit_box_mesh(dim: usize, n: usize) -> Result<Mesh> {
    build_box_mesh(
        &vec![1.0; dim],
        &vec![n; dim],
        vec!["domain".into()],
        vec![true],
        |_| 0,
        AxisFace::XNeg,
    )
}
