//! Layered-disk phantom: a stair-cased structured-grid approximation of
//! concentric circular compartments (the desk-scale stand-in for a layered
//! head model).

use super::{BoundaryFace, BoundaryKind, Label, Mesh, QUAD_FACES};
use crate::error::{Error, Result};

/// One concentric layer, listed inside-out.
#[derive(Debug, Clone)]
pub struct DiskLayer {
    /// Outer radius of the layer in meters.
    pub outer_radius: f64,
    pub name: String,
    pub is_brain: bool,
}

/// Angular interval in degrees, counter-clockwise from the +x axis.
/// `start > end` wraps through 0.
#[derive(Debug, Clone, Copy)]
pub struct ArcDegrees {
    pub start: f64,
    pub end: f64,
}

impl ArcDegrees {
    pub fn width(&self) -> f64 {
        let w = (self.end - self.start).rem_euclid(360.0);
        if w == 0.0 && self.end != self.start {
            360.0
        } else {
            w
        }
    }

    pub fn contains(&self, angle_deg: f64) -> bool {
        let a = angle_deg.rem_euclid(360.0);
        let s = self.start.rem_euclid(360.0);
        let rel = (a - s).rem_euclid(360.0);
        rel <= self.width()
    }
}

/// Builds a quadrilateral mesh covering the disk of the outermost layer
/// radius. Cells of a uniform Cartesian grid are kept when their centroid
/// falls inside the disk; each kept cell is labeled by the layer containing
/// its centroid. Outer-boundary faces whose midpoint angle lies inside
/// `dirichlet_arc` become the Dirichlet boundary, the rest is Neumann.
pub fn build_layered_disk_mesh(
    layers: &[DiskLayer],
    h: f64,
    dirichlet_arc: ArcDegrees,
) -> Result<Mesh> {
    if layers.is_empty() {
        return Err(Error::Mesh("at least one layer required".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Mesh("element size h must be positive".into()));
    }
    let mut prev = 0.0;
    for layer in layers {
        if !(layer.outer_radius > prev) {
            return Err(Error::Mesh(
                "layer radii must be strictly increasing".into(),
            ));
        }
        prev = layer.outer_radius;
    }
    if h > layers[0].outer_radius {
        return Err(Error::Mesh(format!(
            "resolution too coarse: h = {h} exceeds innermost layer thickness {}",
            layers[0].outer_radius
        )));
    }
    if dirichlet_arc.width() <= 0.0 {
        return Err(Error::Mesh(
            "dirichlet arc has zero width; forward solution would not be unique".into(),
        ));
    }

    let radius = layers.last().unwrap().outer_radius;
    // Grid spans [-radius, radius] exactly; h is a target size.
    let n = ((2.0 * radius / h).round() as usize).max(2);
    let hx = 2.0 * radius / n as f64;

    let centroid = |ix: usize, iy: usize| -> (f64, f64) {
        (
            -radius + (ix as f64 + 0.5) * hx,
            -radius + (iy as f64 + 0.5) * hx,
        )
    };

    // Pass 1: which grid cells are kept.
    let mut kept = vec![usize::MAX; n * n];
    let mut num_kept = 0usize;
    for iy in 0..n {
        for ix in 0..n {
            let (cx, cy) = centroid(ix, iy);
            if cx.hypot(cy) < radius {
                kept[iy * n + ix] = num_kept;
                num_kept += 1;
            }
        }
    }
    if num_kept == 0 {
        return Err(Error::Mesh(
            "resolution too coarse: no cell centroid inside disk".into(),
        ));
    }

    // Pass 2: emit nodes (compacted grid nodes) and elements.
    let mut node_of_grid = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut nodes: Vec<[f64; 3]> = Vec::new();
    let mut take_node = |ix: usize, iy: usize, nodes: &mut Vec<[f64; 3]>| -> usize {
        let g = iy * (n + 1) + ix;
        if node_of_grid[g] == usize::MAX {
            node_of_grid[g] = nodes.len();
            nodes.push([-radius + ix as f64 * hx, -radius + iy as f64 * hx, 0.0]);
        }
        node_of_grid[g]
    };

    let mut element_nodes = Vec::with_capacity(num_kept * 4);
    let mut labels: Vec<Label> = Vec::with_capacity(num_kept);
    for iy in 0..n {
        for ix in 0..n {
            if kept[iy * n + ix] == usize::MAX {
                continue;
            }
            let v0 = take_node(ix, iy, &mut nodes);
            let v1 = take_node(ix + 1, iy, &mut nodes);
            let v2 = take_node(ix + 1, iy + 1, &mut nodes);
            let v3 = take_node(ix, iy + 1, &mut nodes);
            element_nodes.extend_from_slice(&[v0, v1, v2, v3]);

            let (cx, cy) = centroid(ix, iy);
            let r = cx.hypot(cy);
            let label = layers
                .iter()
                .position(|l| r < l.outer_radius)
                .expect("kept centroid lies inside outermost layer");
            labels.push(label as Label);
        }
    }

    // Pass 3: boundary faces = faces whose grid neighbor is not kept.
    let is_kept = |ix: isize, iy: isize| -> bool {
        ix >= 0
            && iy >= 0
            && (ix as usize) < n
            && (iy as usize) < n
            && kept[iy as usize * n + ix as usize] != usize::MAX
    };
    let mut boundary_faces = Vec::new();
    let mut has_dirichlet = false;
    for iy in 0..n {
        for ix in 0..n {
            let e = kept[iy * n + ix];
            if e == usize::MAX {
                continue;
            }
            let neighbor_of_face = [
                (ix as isize, iy as isize - 1),
                (ix as isize + 1, iy as isize),
                (ix as isize, iy as isize + 1),
                (ix as isize - 1, iy as isize),
            ];
            for (local_face, &(nx, ny)) in neighbor_of_face.iter().enumerate() {
                if is_kept(nx, ny) {
                    continue;
                }
                let conn = &element_nodes[e * 4..e * 4 + 4];
                let face_nodes: Vec<usize> =
                    QUAD_FACES[local_face].iter().map(|&l| conn[l]).collect();
                let mid = [
                    0.5 * (nodes[face_nodes[0]][0] + nodes[face_nodes[1]][0]),
                    0.5 * (nodes[face_nodes[0]][1] + nodes[face_nodes[1]][1]),
                ];
                let angle = mid[1].atan2(mid[0]).to_degrees();
                let kind = if dirichlet_arc.contains(angle) {
                    has_dirichlet = true;
                    BoundaryKind::Dirichlet
                } else {
                    BoundaryKind::Neumann
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
    if !has_dirichlet {
        return Err(Error::Mesh(
            "dirichlet arc contains no boundary faces at this resolution".into(),
        ));
    }

    let names = layers.iter().map(|l| l.name.clone()).collect();
    let brain = layers.iter().map(|l| l.is_brain).collect();
    Mesh::new(
        2,
        nodes,
        element_nodes,
        labels,
        names,
        brain,
        boundary_faces,
    )
}
