//! Bipolar baseline and protocol quality metrics.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, TargetSpec};
use crate::transfer::TransferMatrix;

/// Volume-weighted current-density statistics of one protocol.
///
/// `cd_a` is the mean |J| over the target, `cd_t` the mean component along
/// the target vectors, `par = 100 cd_t / cd_a` (signed; anti-aligned fields
/// give negative values), `nontarget_mean` the mean |J| over the non-target
/// brain elements — skin, skull and CSF are excluded, where current
/// densities are far stronger than in the brain and would drown the
/// focality signal. `focality_ratio = cd_a / nontarget_mean` is a
/// convenience scalar beyond the standard CD_a/CD_t/PAR set.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub cd_a: f64,
    pub nontarget_mean: f64,
    pub cd_t: f64,
    /// Absent when the target field vanishes (cd_a = 0).
    pub par: Option<f64>,
    /// Absent when the non-target field vanishes.
    pub focality_ratio: Option<f64>,
}

/// Maximum-two-electrode baseline: keep the strongest anode and the
/// strongest cathode of an optimized protocol, at `total` current each.
pub fn m2e_protocol(full: &[f64], total: f64) -> Result<Vec<f64>> {
    if !(total > 0.0) {
        return Err(Error::Optimization(format!(
            "M2E total current must be positive, got {total}"
        )));
    }
    let mut anode = None;
    let mut cathode = None;
    for (i, &v) in full.iter().enumerate() {
        if v > 0.0 && anode.map_or(true, |(_, best)| v > best) {
            anode = Some((i, v));
        }
        if v < 0.0 && cathode.map_or(true, |(_, best)| v < best) {
            cathode = Some((i, v));
        }
    }
    let (Some((anode, _)), Some((cathode, _))) = (anode, cathode) else {
        return Err(Error::Optimization(
            "no bipolar pair: protocol needs a positive and a negative current".into(),
        ));
    };
    let mut out = vec![0.0; full.len()];
    out[anode] = total;
    out[cathode] = -total;
    Ok(out)
}

/// Evaluates a reduced protocol against a target: volume-weighted means of
/// `J = B I_S` over the target and its complement.
pub fn compute_metrics(
    b: &TransferMatrix,
    reduced: &[f64],
    target: &TargetSpec,
    mesh: &Mesh,
) -> Result<MetricsReport> {
    if reduced.len() != b.reduced_len() {
        return Err(Error::Optimization(format!(
            "protocol has {} reduced currents, transfer matrix expects {}",
            reduced.len(),
            b.reduced_len()
        )));
    }
    if b.num_elements() != mesh.num_elements() {
        return Err(Error::Optimization(
            "transfer matrix and mesh element counts differ".into(),
        ));
    }
    let dim = b.dim();
    let j = b.apply(&DVector::from_column_slice(reduced));

    let mut target_vol = 0.0;
    let mut rest_vol = 0.0;
    let mut target_abs = 0.0;
    let mut rest_abs = 0.0;
    let mut aligned = 0.0;
    let mut target_cursor = 0usize;
    for e in 0..mesh.num_elements() {
        let vol = mesh.element_volume[e];
        let block = &j.as_slice()[e * dim..(e + 1) * dim];
        let magnitude: f64 = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        if target_cursor < target.elements.len() && target.elements[target_cursor] == e {
            let direction = &target.vectors[target_cursor];
            let along: f64 = block
                .iter()
                .zip(&direction[..dim])
                .map(|(a, b)| a * b)
                .sum();
            target_vol += vol;
            target_abs += vol * magnitude;
            aligned += vol * along;
            target_cursor += 1;
        } else if mesh.is_brain_element(e) {
            rest_vol += vol;
            rest_abs += vol * magnitude;
        }
    }
    if target_vol == 0.0 {
        return Err(Error::Target("target region has zero volume".into()));
    }
    let cd_a = target_abs / target_vol;
    let cd_t = aligned / target_vol;
    let nontarget_mean = if rest_vol > 0.0 {
        rest_abs / rest_vol
    } else {
        0.0
    };
    let par = (cd_a > 0.0).then(|| 100.0 * cd_t / cd_a);
    let focality_ratio = (nontarget_mean > 0.0).then(|| cd_a / nontarget_mean);
    Ok(MetricsReport {
        cd_a,
        nontarget_mean,
        cd_t,
        par,
        focality_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn m2e_picks_argmax_argmin() {
        let out = m2e_protocol(&[0.4, -0.3, 0.1, -0.2], 1.0).unwrap();
        assert_eq!(out, vec![1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn m2e_keeps_existing_bipolar_pair() {
        let out = m2e_protocol(&[2.0, -2.0, 0.0], 1.0).unwrap();
        assert_eq!(out, vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn m2e_rejects_degenerate_protocols() {
        assert!(m2e_protocol(&[0.0, 0.0, 0.0], 1.0).is_err());
        assert!(m2e_protocol(&[1.0, 2.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn m2e_invariant_under_positive_rescaling() {
        let protocol = [0.4, -0.3, 0.1, -0.2];
        let scaled: Vec<f64> = protocol.iter().map(|v| v * 17.3).collect();
        assert_eq!(
            m2e_protocol(&protocol, 1.0).unwrap(),
            m2e_protocol(&scaled, 1.0).unwrap()
        );
    }

    /// One target element with J = 0.038 e: cd_a = cd_t, PAR = 100.
    #[test]
    fn aligned_single_target() {
        let mesh = crate::geometry::unit_box_mesh(2, 2).unwrap();
        // B with one column sending current 1 to J = 0.038 * (0,1) on
        // element 0 only.
        let mut m = DMatrix::zeros(8, 1);
        m[(1, 0)] = 0.038;
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let target = TargetSpec::new(&mesh, vec![0], vec![[0.0, 1.0, 0.0]]).unwrap();
        let report = compute_metrics(&b, &[1.0], &target, &mesh).unwrap();
        assert!((report.cd_a - 0.038).abs() < 1e-15);
        assert!((report.cd_t - 0.038).abs() < 1e-15);
        assert!((report.par.unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_field_gives_zero_par() {
        let mesh = crate::geometry::unit_box_mesh(2, 2).unwrap();
        let mut m = DMatrix::zeros(8, 1);
        m[(0, 0)] = 0.5; // J along x
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let target = TargetSpec::new(&mesh, vec![0], vec![[0.0, 1.0, 0.0]]).unwrap();
        let report = compute_metrics(&b, &[1.0], &target, &mesh).unwrap();
        assert_eq!(report.cd_t, 0.0);
        assert_eq!(report.par.unwrap(), 0.0);
    }

    /// Two equal-volume targets, |J| = 0.02 aligned and 0.01 anti-aligned:
    /// cd_t = 0.005, cd_a = 0.015, PAR = 33.33.
    #[test]
    fn mixed_alignment_volume_weighting() {
        let mesh = crate::geometry::unit_box_mesh(2, 2).unwrap();
        let mut m = DMatrix::zeros(8, 1);
        m[(0 * 2 + 1, 0)] = 0.02; // element 0: +y
        m[(1 * 2 + 1, 0)] = -0.01; // element 1: -y
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let target =
            TargetSpec::new(&mesh, vec![0, 1], vec![[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let report = compute_metrics(&b, &[1.0], &target, &mesh).unwrap();
        assert!((report.cd_t - 0.005).abs() < 1e-15);
        assert!((report.cd_a - 0.015).abs() < 1e-15);
        assert!((report.par.unwrap() - 100.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn par_invariant_under_protocol_scaling() {
        let mesh = crate::geometry::unit_box_mesh(2, 2).unwrap();
        let mut m = DMatrix::zeros(8, 2);
        m[(1, 0)] = 0.3;
        m[(0, 1)] = -0.1;
        m[(5, 0)] = 0.2;
        m[(4, 1)] = 0.05;
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let target = TargetSpec::new(&mesh, vec![0], vec![[0.6, 0.8, 0.0]]).unwrap();
        let base = compute_metrics(&b, &[0.7, -0.4], &target, &mesh).unwrap();
        let scaled = compute_metrics(&b, &[0.7 * 5.0, -0.4 * 5.0], &target, &mesh).unwrap();
        assert!((scaled.cd_a - 5.0 * base.cd_a).abs() < 1e-12 * base.cd_a.abs());
        assert!((scaled.cd_t - 5.0 * base.cd_t).abs() < 1e-12 * base.cd_t.abs());
        assert!((scaled.par.unwrap() - base.par.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn par_bounded_by_cauchy_schwarz() {
        let mesh = crate::geometry::unit_box_mesh(2, 2).unwrap();
        let mut m = DMatrix::zeros(8, 1);
        m[(0, 0)] = -0.3;
        m[(1, 0)] = 0.1;
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let target = TargetSpec::new(&mesh, vec![0], vec![[1.0, 0.0, 0.0]]).unwrap();
        let report = compute_metrics(&b, &[1.0], &target, &mesh).unwrap();
        let par = report.par.unwrap();
        assert!((-100.0..=100.0).contains(&par));
        assert!(par < 0.0, "anti-aligned field must give negative PAR");
        assert!(report.cd_a >= report.cd_t.abs());
    }
}
