//! Scenario-driven pipeline: config -> mesh -> transfer matrix -> ADMM ->
//! safety rescaling -> metrics, with CSV/VTK/log artifacts.
//!
//! Electrode currents are handled in mA at this level (the transfer matrix
//! columns are scaled to per-mA responses), so the 4-unit total-variation
//! safety budget reads as 2 mA injected plus 2 mA extracted.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::admm::{full_protocol, rescale_to_safety, run_admm, OptResult};
use crate::config::{GeometryKind, Mode, Orientation, ScenarioConfig};
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, ElementField, StiffnessSystem};
use crate::geometry::{
    assign_conductivity, build_box_mesh, build_layered_disk_mesh, place_electrodes, ArcDegrees,
    AxisFace, ConductivityField, DiskLayer, ElectrodeMontage, Mesh, TargetSpec,
};
use crate::protocols::{compute_metrics, m2e_protocol, MetricsReport};
use crate::transfer::{
    build_target_field, build_transfer_matrix, build_weight_field, TransferMatrix,
};
use crate::vtk::write_mesh_vtk;

const MM: f64 = 1e-3;
/// Transfer-matrix columns are per ampere; protocols run in mA.
const PER_MA: f64 = 1e-3;

/// Phantom-level pieces shared by every target of a scenario.
pub struct Phantom {
    pub mesh: Mesh,
    pub sigma: ConductivityField,
    pub montage: ElectrodeMontage,
    pub system: StiffnessSystem,
    /// Element current density (A/m^2) per mA of reduced electrode current.
    pub b_per_ma: TransferMatrix,
}

/// Builds mesh, conductivities, montage, stiffness and the per-mA transfer
/// matrix from a validated config.
pub fn build_phantom(config: &ScenarioConfig) -> Result<Phantom> {
    let mesh = match config.geometry.kind {
        GeometryKind::Disk => {
            let layers: Vec<DiskLayer> = config
                .geometry
                .layers
                .iter()
                .map(|l| DiskLayer {
                    outer_radius: l.radius_mm * MM,
                    name: l.label.clone(),
                    is_brain: l.brain,
                })
                .collect();
            let [start, end] = config.geometry.dirichlet_arc_deg;
            build_layered_disk_mesh(
                &layers,
                config.geometry.h_mm.expect("validated") * MM,
                ArcDegrees { start, end },
            )?
        }
        GeometryKind::Box => {
            let extent: Vec<f64> = config.geometry.extent_mm.iter().map(|e| e * MM).collect();
            build_box_mesh(
                &extent,
                &config.geometry.divisions,
                vec![config.geometry.label.clone()],
                vec![config.geometry.brain],
                |_| 0,
                AxisFace::parse(&config.geometry.dirichlet_face)?,
            )?
        }
    };
    let spec_map: BTreeMap<String, crate::geometry::ConductivitySpec> = config
        .conductivities
        .iter()
        .map(|(k, v)| (k.clone(), v.to_spec()))
        .collect();
    let sigma = assign_conductivity(&mesh, &spec_map)?;
    let montage = place_electrodes(&mesh, config.electrodes.count)?;
    let system = assemble_stiffness(&mesh, &sigma)?;
    let b = build_transfer_matrix(&system, &montage, &mesh, &sigma)?;
    Ok(Phantom {
        b_per_ma: b.scaled(PER_MA),
        mesh,
        sigma,
        montage,
        system,
    })
}

/// Domain center the radial/tangential orientations refer to.
fn domain_center(config: &ScenarioConfig) -> [f64; 3] {
    match config.geometry.kind {
        GeometryKind::Disk => [0.0, 0.0, 0.0],
        GeometryKind::Box => {
            let e = &config.geometry.extent_mm;
            [
                e[0] * MM / 2.0,
                e[1] * MM / 2.0,
                if e.len() == 3 { e[2] * MM / 2.0 } else { 0.0 },
            ]
        }
    }
}

/// Unit orientation vector at a point: `radial` points inward toward the
/// domain center, `tangential` is perpendicular to it.
pub fn orientation_vector(
    orientation: Orientation,
    explicit: Option<&[f64]>,
    point: &[f64; 3],
    center: &[f64; 3],
    dim: usize,
) -> Result<[f64; 3]> {
    let normalize = |v: [f64; 3]| -> Result<[f64; 3]> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n == 0.0 {
            return Err(Error::Target(
                "cannot orient a target at the domain center".into(),
            ));
        }
        Ok([v[0] / n, v[1] / n, v[2] / n])
    };
    match orientation {
        Orientation::Explicit => {
            let v = explicit
                .ok_or_else(|| Error::Target("explicit orientation needs a vector".into()))?;
            let mut buf = [0.0; 3];
            buf[..v.len()].copy_from_slice(v);
            normalize(buf)
        }
        Orientation::Radial => normalize([
            center[0] - point[0],
            center[1] - point[1],
            center[2] - point[2],
        ]),
        Orientation::Tangential => {
            let outward = normalize([
                point[0] - center[0],
                point[1] - center[1],
                point[2] - center[2],
            ])?;
            if dim == 2 {
                Ok([outward[1], -outward[0], 0.0])
            } else {
                // z x outward, falling back to x for points on the z axis.
                let t = [-outward[1], outward[0], 0.0];
                let n = (t[0] * t[0] + t[1] * t[1]).sqrt();
                if n == 0.0 {
                    Ok([1.0, 0.0, 0.0])
                } else {
                    Ok([t[0] / n, t[1] / n, 0.0])
                }
            }
        }
    }
}

/// Selects the target region of a config: brain elements whose centroid lies
/// within `extent_mm / 2` of the center, each oriented per the config.
pub fn select_target(config: &ScenarioConfig, mesh: &Mesh) -> Result<TargetSpec> {
    let c = &config.target.center_mm;
    let center = [
        c[0] * MM,
        c[1] * MM,
        if c.len() == 3 { c[2] * MM } else { 0.0 },
    ];
    let radius = config.target.extent_mm * MM / 2.0;
    let domain_center = domain_center(config);
    let mut elements = Vec::new();
    let mut vectors = Vec::new();
    for e in 0..mesh.num_elements() {
        if !mesh.is_brain_element(e) {
            continue;
        }
        let p = mesh.element_centroid(e);
        let dist =
            ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) + (p[2] - center[2]).powi(2))
                .sqrt();
        if dist <= radius {
            elements.push(e);
            vectors.push(orientation_vector(
                config.target.orientation,
                config.target.vector.as_deref(),
                &p,
                &domain_center,
                mesh.dimension,
            )?);
        }
    }
    if elements.is_empty() {
        return Err(Error::Target(format!(
            "no brain element within {} mm of target.center_mm",
            config.target.extent_mm / 2.0
        )));
    }
    TargetSpec::new(mesh, elements, vectors)
}

/// One optimized protocol with everything needed for reporting.
pub struct MethodOutcome {
    pub method: String,
    /// Full zero-sum protocol in mA, safety-rescaled for optimized methods.
    pub protocol_ma: Vec<f64>,
    pub metrics: MetricsReport,
}

pub struct RunOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// Safety-scaled state bound of the optimized protocol.
    pub delta: Option<f64>,
    /// Total variation of the raw (pre-rescale) protocol, mA.
    pub norm_m: f64,
    pub methods: Vec<MethodOutcome>,
    pub artifacts: Vec<PathBuf>,
}

/// Runs the configured scenario and writes protocol.csv, metrics.csv,
/// field.vtk and iterations.log into `out_dir`.
pub fn run_scenario(
    config: &ScenarioConfig,
    scenario_name: &str,
    out_dir: &Path,
) -> Result<RunOutcome> {
    let phantom = build_phantom(config)?;
    let target = select_target(config, &phantom.mesh)?;
    let e_tilde = build_target_field(&phantom.mesh, &target)?;
    let omega = build_weight_field(&phantom.mesh, &target, config.optimizer.omega_low)?;
    let params = config.admm_params()?;

    let result = run_admm(&phantom.b_per_ma, &params, &omega, &e_tilde, None)?;
    let (rescaled_reduced, delta) = rescale_to_safety(&result.reduced, params.epsilon)?;
    let rescaled_full = full_protocol(&rescaled_reduced);

    let optimized_label = match config.mode {
        Mode::L2r => "L2R",
        Mode::Elastic => "elastic",
        Mode::L1r | Mode::M2eFromL1r => "L1R",
    };
    let mut methods = vec![MethodOutcome {
        method: optimized_label.to_string(),
        metrics: compute_metrics(&phantom.b_per_ma, &rescaled_reduced, &target, &phantom.mesh)?,
        protocol_ma: rescaled_full.clone(),
    }];
    if config.mode == Mode::M2eFromL1r {
        let m2e_full = m2e_protocol(&rescaled_full, config.m2e.total_ma)?;
        let m2e_reduced = &m2e_full[..m2e_full.len() - 1];
        methods.push(MethodOutcome {
            method: "M2E".to_string(),
            metrics: compute_metrics(&phantom.b_per_ma, m2e_reduced, &target, &phantom.mesh)?,
            protocol_ma: m2e_full,
        });
    }

    std::fs::create_dir_all(out_dir)?;
    let mut artifacts = Vec::new();
    if config.wants_format("csv") {
        let path = out_dir.join("protocol.csv");
        write_protocol_csv(&path, &result, &rescaled_full, &methods)?;
        artifacts.push(path);
        let path = out_dir.join("metrics.csv");
        write_metrics_csv(&path, scenario_name, &methods)?;
        artifacts.push(path);
    }
    if config.wants_format("vtk") {
        let path = out_dir.join("field.vtk");
        let fields: Vec<(String, ElementField)> = methods
            .iter()
            .map(|m| {
                let reduced = &m.protocol_ma[..m.protocol_ma.len() - 1];
                let j = phantom
                    .b_per_ma
                    .apply(&nalgebra::DVector::from_column_slice(reduced));
                (
                    format!("current_density_{}", m.method.to_lowercase()),
                    ElementField::new(phantom.mesh.dimension, j.as_slice().to_vec()),
                )
            })
            .collect();
        let named: Vec<(&str, &ElementField)> =
            fields.iter().map(|(n, f)| (n.as_str(), f)).collect();
        write_mesh_vtk(&path, scenario_name, &phantom.mesh, &named)?;
        artifacts.push(path);
    }
    if config.wants_format("log") {
        let path = out_dir.join("iterations.log");
        write_iterations_log(&path, &result, delta)?;
        artifacts.push(path);
    }

    Ok(RunOutcome {
        converged: result.converged,
        iterations: result.iterations,
        delta: Some(delta),
        norm_m: result.total_variation,
        methods,
        artifacts,
    })
}

fn write_protocol_csv(
    path: &Path,
    raw: &OptResult,
    rescaled_full: &[f64],
    methods: &[MethodOutcome],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let m2e = methods.iter().find(|m| m.method == "M2E");
    match m2e {
        Some(_) => writeln!(w, "electrode,current_ma,current_ma_rescaled,current_ma_m2e")?,
        None => writeln!(w, "electrode,current_ma,current_ma_rescaled")?,
    }
    for i in 0..raw.protocol.len() {
        match m2e {
            Some(m) => writeln!(
                w,
                "{},{:.12e},{:.12e},{:.12e}",
                i + 1,
                raw.protocol[i],
                rescaled_full[i],
                m.protocol_ma[i]
            )?,
            None => writeln!(
                w,
                "{},{:.12e},{:.12e}",
                i + 1,
                raw.protocol[i],
                rescaled_full[i]
            )?,
        }
    }
    w.flush()?;
    Ok(())
}

fn write_metrics_csv(path: &Path, scenario: &str, methods: &[MethodOutcome]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "scenario,method,cd_a,nontarget_mean,cd_t,par,focality_ratio_nonpaper"
    )?;
    for m in methods {
        let par = m.metrics.par.map(|v| format!("{v:.6}")).unwrap_or_default();
        let focality = m
            .metrics
            .focality_ratio
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{:.9e},{:.9e},{:.9e},{},{}",
            scenario,
            m.method,
            m.metrics.cd_a,
            m.metrics.nontarget_mean,
            m.metrics.cd_t,
            par,
            focality
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_iterations_log(path: &Path, result: &OptResult, delta: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# iter objective residual_z residual_y step_norm")?;
    for (k, rec) in result.history.iter().enumerate() {
        writeln!(
            w,
            "{} {:.9e} {:.9e} {:.9e} {:.9e}",
            k + 1,
            rec.objective,
            rec.residual_z,
            rec.residual_y,
            rec.step_norm
        )?;
    }
    writeln!(
        w,
        "# status={} iterations={} norm_m={:.9e} delta={:.9e}",
        if result.converged {
            "converged"
        } else {
            "max_iter_exceeded"
        },
        result.iterations,
        result.total_variation,
        delta
    )?;
    w.flush()?;
    Ok(())
}

/// One row of a target sweep.
pub struct SweepRow {
    pub index: usize,
    pub angle_deg: f64,
    pub delta: Option<f64>,
    pub iterations: usize,
    pub norm_m: f64,
    pub converged: bool,
    pub error: Option<String>,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub mean_delta: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mean_norm_m: Option<f64>,
    pub csv_path: PathBuf,
}

/// Optimizes a ring of K single-element targets (the desk-scale analog of a
/// whole-cortex target sweep) and writes per-target delta, iteration count
/// and protocol norm plus their averages to sweep.csv. Per-target failures
/// are recorded in their row; the sweep continues.
pub fn sweep(
    config: &ScenarioConfig,
    k: usize,
    orientation: Orientation,
    out_dir: &Path,
) -> Result<SweepOutcome> {
    if k == 0 {
        return Err(Error::config("targets", "need at least one sweep target"));
    }
    let phantom = build_phantom(config)?;
    let params = config.admm_params()?;
    let center = domain_center(config);
    let ring_radius = sweep_ring_radius(config)?;

    let mut rows = Vec::with_capacity(k);
    for j in 0..k {
        let angle = 360.0 * j as f64 / k as f64;
        let rad = angle.to_radians();
        let point = [
            center[0] + ring_radius * rad.cos(),
            center[1] + ring_radius * rad.sin(),
            center[2],
        ];
        let row = match sweep_single(&phantom, config, &params, orientation, &point) {
            Ok(result) => SweepRow {
                index: j,
                angle_deg: angle,
                delta: result.delta,
                iterations: result.iterations,
                norm_m: result.total_variation,
                converged: result.converged,
                error: None,
            },
            Err(e) => SweepRow {
                index: j,
                angle_deg: angle,
                delta: None,
                iterations: 0,
                norm_m: 0.0,
                converged: false,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }

    let ok_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let mean = |f: &dyn Fn(&SweepRow) -> f64| -> Option<f64> {
        if ok_rows.is_empty() {
            None
        } else {
            Some(ok_rows.iter().map(|r| f(r)).sum::<f64>() / ok_rows.len() as f64)
        }
    };
    let mean_delta = if ok_rows.iter().all(|r| r.delta.is_some()) {
        mean(&|r: &SweepRow| r.delta.unwrap_or(0.0))
    } else {
        None
    };
    let mean_iterations = mean(&|r: &SweepRow| r.iterations as f64);
    let mean_norm_m = mean(&|r: &SweepRow| r.norm_m);

    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("sweep.csv");
    let mut w = BufWriter::new(File::create(&csv_path)?);
    writeln!(
        w,
        "target,angle_deg,delta,iterations,norm_m,converged,error"
    )?;
    for r in &rows {
        writeln!(
            w,
            "{},{:.3},{},{},{:.9e},{},{}",
            r.index,
            r.angle_deg,
            r.delta.map(|d| format!("{d:.9e}")).unwrap_or_default(),
            r.iterations,
            r.norm_m,
            r.converged,
            r.error.as_deref().unwrap_or("")
        )?;
    }
    writeln!(
        w,
        "average,,{},{},{},,",
        mean_delta.map(|d| format!("{d:.9e}")).unwrap_or_default(),
        mean_iterations
            .map(|v| format!("{v:.3}"))
            .unwrap_or_default(),
        mean_norm_m.map(|v| format!("{v:.9e}")).unwrap_or_default()
    )?;
    w.flush()?;

    Ok(SweepOutcome {
        rows,
        mean_delta,
        mean_iterations,
        mean_norm_m,
        csv_path,
    })
}

fn sweep_single(
    phantom: &Phantom,
    config: &ScenarioConfig,
    params: &crate::admm::AdmmParams,
    orientation: Orientation,
    point: &[f64; 3],
) -> Result<OptResult> {
    // Nearest brain element to the ring point.
    let mut best: Option<(usize, f64)> = None;
    for e in 0..phantom.mesh.num_elements() {
        if !phantom.mesh.is_brain_element(e) {
            continue;
        }
        let c = phantom.mesh.element_centroid(e);
        let d2 = (c[0] - point[0]).powi(2) + (c[1] - point[1]).powi(2) + (c[2] - point[2]).powi(2);
        if best.map_or(true, |(_, bd)| d2 < bd) {
            best = Some((e, d2));
        }
    }
    let (element, _) = best.ok_or_else(|| Error::Target("phantom has no brain elements".into()))?;
    let centroid = phantom.mesh.element_centroid(element);
    let vector = orientation_vector(
        orientation,
        None,
        &centroid,
        &domain_center(config),
        phantom.mesh.dimension,
    )?;
    let target = TargetSpec::new(&phantom.mesh, vec![element], vec![vector])?;
    let e_tilde = build_target_field(&phantom.mesh, &target)?;
    let omega = build_weight_field(&phantom.mesh, &target, config.optimizer.omega_low)?;
    run_admm(&phantom.b_per_ma, params, &omega, &e_tilde, None)
}

/// Radius of the sweep ring: the annulus midline of the outermost brain
/// layer on disks, 0.35 of the smallest extent on boxes.
fn sweep_ring_radius(config: &ScenarioConfig) -> Result<f64> {
    match config.geometry.kind {
        GeometryKind::Disk => {
            let mut inner = 0.0;
            let mut found = None;
            for layer in &config.geometry.layers {
                if layer.brain {
                    found = Some((inner + layer.radius_mm) / 2.0 * MM);
                }
                inner = layer.radius_mm;
            }
            found.ok_or_else(|| {
                Error::config("geometry.layers", "sweep needs at least one brain layer")
            })
        }
        GeometryKind::Box => {
            let min_extent = config
                .geometry
                .extent_mm
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            Ok(0.35 * min_extent * MM)
        }
    }
}

pub use crate::transfer::OMEGA_LOW_DEFAULT;

// Re-exported for the CLI's sweep argument parsing.
pub fn parse_orientation(s: &str) -> Result<Orientation> {
    match s {
        "tangential" => Ok(Orientation::Tangential),
        "radial" => Ok(Orientation::Radial),
        other => Err(Error::config(
            "orientation",
            format!("unknown orientation `{other}` (expected tangential or radial)"),
        )),
    }
}
