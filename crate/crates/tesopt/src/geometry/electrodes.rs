//! Point-electrode montages on the Neumann boundary.

use super::Mesh;
use crate::error::{Error, Result};

/// S point electrodes at mesh boundary nodes. The last electrode is the
/// reference whose current is eliminated from the optimization unknowns
/// (reduced currents have length S-1); it carries minus the sum of the
/// others so the injected pattern has zero mean.
#[derive(Debug, Clone)]
pub struct ElectrodeMontage {
    pub electrode_nodes: Vec<usize>,
    pub reference_index: usize,
}

impl ElectrodeMontage {
    pub fn num_electrodes(&self) -> usize {
        self.electrode_nodes.len()
    }

    pub fn reduced_len(&self) -> usize {
        self.electrode_nodes.len() - 1
    }

    pub fn reference_node(&self) -> usize {
        self.electrode_nodes[self.reference_index]
    }
}

/// Places `count` electrodes approximately equispaced by arc length along the
/// Neumann part of the boundary; the last placed electrode is the reference.
///
/// In 2D the full boundary loop is walked, contiguous runs of nodes touching
/// no Dirichlet face are concatenated, and electrodes sit at fractions
/// `j / (count-1)` of the accumulated length. In 3D (box phantoms only) the
/// eligible nodes are ordered lexicographically and strided evenly.
pub fn place_electrodes(mesh: &Mesh, count: usize) -> Result<ElectrodeMontage> {
    if count < 2 {
        return Err(Error::Electrodes("at least 2 electrodes required".into()));
    }
    let eligible = mesh.neumann_only_nodes();
    if eligible.len() < count {
        return Err(Error::Electrodes(format!(
            "requested {count} electrodes but only {} nodes lie on the Neumann boundary",
            eligible.len()
        )));
    }

    let nodes = if mesh.dimension == 2 {
        place_along_arcs(mesh, count)?
    } else {
        let mut sorted = eligible;
        sorted.sort_by(|&a, &b| {
            let pa = mesh.nodes[a];
            let pb = mesh.nodes[b];
            pa.partial_cmp(&pb).unwrap().then(a.cmp(&b))
        });
        (0..count)
            .map(|j| {
                sorted[(j as f64 * (sorted.len() - 1) as f64 / (count - 1) as f64).round() as usize]
            })
            .collect()
    };

    let mut seen = std::collections::BTreeSet::new();
    for &n in &nodes {
        if !seen.insert(n) {
            return Err(Error::Electrodes("electrode nodes are not distinct".into()));
        }
    }
    Ok(ElectrodeMontage {
        reference_index: nodes.len() - 1,
        electrode_nodes: nodes,
    })
}

fn place_along_arcs(mesh: &Mesh, count: usize) -> Result<Vec<usize>> {
    let cycle = walk_boundary_loop(mesh)?;

    let dirichlet = mesh.dirichlet_node_mask();
    // Rotate so the cycle starts on a Dirichlet-touching node; pure-Neumann
    // runs are then contiguous in the listing.
    let pivot = cycle
        .iter()
        .position(|&n| dirichlet[n])
        .ok_or_else(|| Error::Electrodes("boundary loop has no Dirichlet nodes".into()))?;
    let rotated: Vec<usize> = cycle[pivot..]
        .iter()
        .chain(&cycle[..pivot])
        .copied()
        .collect();

    // Concatenated pure arcs with cumulative arc length (gaps contribute 0).
    let mut ordered: Vec<usize> = Vec::new();
    let mut arclen: Vec<f64> = Vec::new();
    let mut total = 0.0;
    let mut prev_in_arc: Option<usize> = None;
    for &n in &rotated {
        if dirichlet[n] {
            prev_in_arc = None;
            continue;
        }
        if let Some(p) = prev_in_arc {
            let a = mesh.nodes[p];
            let b = mesh.nodes[n];
            total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        }
        ordered.push(n);
        arclen.push(total);
        prev_in_arc = Some(n);
    }
    if ordered.len() < count {
        return Err(Error::Electrodes(format!(
            "requested {count} electrodes but only {} nodes lie on the Neumann boundary",
            ordered.len()
        )));
    }

    let mut used = vec![false; ordered.len()];
    let mut picks = Vec::with_capacity(count);
    for j in 0..count {
        let t = total * j as f64 / (count - 1) as f64;
        // Nearest node by arc position, resolving collisions to the closest
        // unused neighbor.
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &s) in arclen.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = (s - t).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        used[best] = true;
        picks.push(ordered[best]);
    }
    Ok(picks)
}

/// Orders the boundary nodes of a 2D mesh along the (closed) boundary loop,
/// deterministically: start at the smallest node index, step toward its
/// smallest-index neighbor.
fn walk_boundary_loop(mesh: &Mesh) -> Result<Vec<usize>> {
    use std::collections::BTreeMap;
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for face in &mesh.boundary_faces {
        let (a, b) = (face.nodes[0], face.nodes[1]);
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    for neighbors in adjacency.values_mut() {
        neighbors.sort_unstable();
        neighbors.dedup();
    }
    let start = *adjacency
        .keys()
        .next()
        .ok_or_else(|| Error::Electrodes("mesh has no boundary".into()))?;

    let mut cycle = vec![start];
    let mut prev = start;
    let mut current = adjacency[&start][0];
    while current != start {
        cycle.push(current);
        let next = adjacency[&current]
            .iter()
            .copied()
            .find(|&n| n != prev)
            .ok_or_else(|| Error::Electrodes("boundary loop is not closed".into()))?;
        prev = current;
        current = next;
        if cycle.len() > adjacency.len() {
            return Err(Error::Electrodes("boundary walk did not close".into()));
        }
    }
    Ok(cycle)
}
