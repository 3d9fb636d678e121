//! Alternating direction method of multipliers for the penalized,
//! gradient-state-constrained electrode current optimization
//!
//!   minimize  -<B I, e~> + alpha |I|_2^2 + beta |I|_1
//!   subject to omega_i |(B I) block i|_2 <= epsilon  for every element i,
//!
//! via the splitting `B I = y`, `I = z`: an exact linear I-step against the
//! factored `mu1 Id + mu2 B^T B`, a per-element ball projection for y, a
//! soft-threshold prox for z and gradient ascent on the duals. A converged
//! protocol is rescaled onto the 4 mA total-variation safety budget, which
//! tightens the state bound from epsilon to `delta = 4 epsilon / |I|_M`.

mod reference;

pub use reference::reference_solve;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::transfer::{TargetField, TransferMatrix, WeightField};

/// How the per-element state constraint is enforced in the y-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateConstraint {
    /// Euclidean projection of each d-component element block onto the ball
    /// of radius `epsilon / omega_i` (matches the continuous constraint
    /// `omega |sigma grad Phi| <= epsilon`).
    #[default]
    Vector,
    /// Scalar clipping of each of the d*N components, the literal loop of
    /// the printed algorithm; kept for comparison.
    Component,
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmParams {
    /// Augmented-Lagrangian parameter of the `I = z` split.
    pub mu1: f64,
    /// Augmented-Lagrangian parameter of the `B I = y` split.
    pub mu2: f64,
    /// Quadratic (energy) penalty weight.
    pub alpha: f64,
    /// Sparsity penalty weight.
    pub beta: f64,
    /// State bound on the omega-weighted current density (A/m^2).
    pub epsilon: f64,
    /// Stopping threshold on the Euclidean norm of the iterate change.
    pub tol: f64,
    pub max_iter: usize,
    pub state_constraint: StateConstraint,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            mu1: 1.0,
            mu2: 1.0,
            alpha: 0.0,
            beta: 1e-3,
            epsilon: 1e-3,
            tol: 1e-6,
            max_iter: 10_000,
            state_constraint: StateConstraint::Vector,
        }
    }
}

impl AdmmParams {
    /// Sparsity-regularized setup (beta = 0.001).
    pub fn l1r(epsilon: f64) -> Self {
        AdmmParams {
            alpha: 0.0,
            beta: 1e-3,
            epsilon,
            ..Default::default()
        }
    }

    /// Energy-regularized setup (alpha = 0.01).
    pub fn l2r(epsilon: f64) -> Self {
        AdmmParams {
            alpha: 1e-2,
            beta: 0.0,
            epsilon,
            ..Default::default()
        }
    }

    pub fn elastic(epsilon: f64, alpha: f64, beta: f64) -> Self {
        AdmmParams {
            alpha,
            beta,
            epsilon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu1 > 0.0) || !(self.mu2 > 0.0) {
            return Err(Error::Optimization(format!(
                "mu1 and mu2 must be positive (got {}, {})",
                self.mu1, self.mu2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Optimization(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Optimization(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::Optimization(
                "alpha and beta must be nonnegative".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::Optimization("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Full iterate set of one optimization run; usable as a warm start.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub i_s: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub p1: DVector<f64>,
    pub p2: DVector<f64>,
    pub k: usize,
}

impl AdmmState {
    pub fn zeros(reduced_len: usize, field_len: usize) -> Self {
        AdmmState {
            i_s: DVector::zeros(reduced_len),
            y: DVector::zeros(field_len),
            z: DVector::zeros(reduced_len),
            p1: DVector::zeros(reduced_len),
            p2: DVector::zeros(field_len),
            k: 0,
        }
    }

    /// Warm start from a previous protocol: primal iterates seeded, duals
    /// reset.
    pub fn from_reduced(reduced: &[f64], b: &TransferMatrix) -> Self {
        let i_s = DVector::from_column_slice(reduced);
        let y = b.apply(&i_s);
        AdmmState {
            z: i_s.clone(),
            p1: DVector::zeros(i_s.len()),
            p2: DVector::zeros(y.len()),
            i_s,
            y,
            k: 0,
        }
    }
}

/// Per-iteration log row.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub objective: f64,
    /// Primal residual of the `I = z` split.
    pub residual_z: f64,
    /// Primal residual of the `B I = y` split.
    pub residual_y: f64,
    /// Iterate change `|I^k - I^{k-1}|_2` used by the stopping rule.
    pub step_norm: f64,
}

/// Outcome of an optimization run.
#[derive(Debug, Clone)]
pub struct OptResult {
    /// Reduced currents (length S-1).
    pub reduced: Vec<f64>,
    /// Full zero-sum protocol: reduced currents plus the implied reference
    /// current appended last.
    pub protocol: Vec<f64>,
    /// Safety-scaled state bound `4 epsilon / |I|_M`; absent for the null
    /// protocol.
    pub delta: Option<f64>,
    pub iterations: usize,
    /// Total variation `sum |I_i|` over all S electrodes.
    pub total_variation: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

/// Cached factorization of `mu1 Id + mu2 B^T B`, computed once per run and
/// reused by every I-step.
pub struct IstepFactor {
    chol: Cholesky<f64, Dyn>,
}

impl IstepFactor {
    pub fn new(b: &DMatrix<f64>, mu1: f64, mu2: f64) -> Result<Self> {
        let n = b.ncols();
        let mut m = b.tr_mul(b) * mu2;
        for i in 0..n {
            m[(i, i)] += mu1;
        }
        let chol = Cholesky::new(m)
            .ok_or_else(|| Error::Optimization("I-step system is not positive definite".into()))?;
        Ok(IstepFactor { chol })
    }
}

/// Exact solve of `(mu1 Id + mu2 B^T B) I = mu1 z - p1 + B^T (mu2 y - p2)`.
pub fn istep(
    factor: &IstepFactor,
    b: &DMatrix<f64>,
    z: &DVector<f64>,
    p1: &DVector<f64>,
    y: &DVector<f64>,
    p2: &DVector<f64>,
    mu1: f64,
    mu2: f64,
) -> Result<DVector<f64>> {
    let mut rhs = z * mu1 - p1;
    rhs += b.tr_mul(&(y * mu2 - p2));
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Optimization(
            "non-finite I-step right-hand side".into(),
        ));
    }
    Ok(factor.chol.solve(&rhs))
}

/// Projection of `v = B I + (p2 + e~)/mu2` onto the weighted state-constraint
/// set, element block by element block.
pub fn ystep(
    bi: &DVector<f64>,
    p2: &DVector<f64>,
    e_tilde: &[f64],
    mu2: f64,
    omega: &[f64],
    epsilon: f64,
    mode: StateConstraint,
) -> DVector<f64> {
    let dim = bi.len() / omega.len();
    let mut y = DVector::zeros(bi.len());
    for i in 0..bi.len() {
        y[i] = bi[i] + (p2[i] + e_tilde[i]) / mu2;
    }
    for (e, &w) in omega.iter().enumerate() {
        let radius = epsilon / w;
        let block = e * dim..(e + 1) * dim;
        match mode {
            StateConstraint::Vector => {
                let norm: f64 = y.as_slice()[block.clone()]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt();
                if norm > radius {
                    let scale = radius / norm;
                    for i in block {
                        y[i] *= scale;
                    }
                }
            }
            StateConstraint::Component => {
                for i in block {
                    if y[i].abs() > radius {
                        y[i] = radius * y[i].signum();
                    }
                }
            }
        }
    }
    y
}

/// Closed-form minimizer of the z-subproblem
/// `alpha |z|^2 + beta |z|_1 + mu1/2 |z - I|^2 + <I - z, p1>`:
/// coordinate-wise `soft(mu1 I_j + p1_j, beta) / (mu1 + 2 alpha)`.
///
/// The multiplier enters with the same `I - z` orientation the I-step and
/// the dual ascent use; on the positive orthant this reduces to the plain
/// `(mu1 I + p1 - beta) / (mu1 + 2 alpha)` form, and the soft threshold
/// extends it to negative currents, which every zero-sum protocol has.
pub fn zstep(
    i_s: &DVector<f64>,
    p1: &DVector<f64>,
    mu1: f64,
    alpha: f64,
    beta: f64,
) -> DVector<f64> {
    let mut z = DVector::zeros(i_s.len());
    for j in 0..i_s.len() {
        z[j] = soft_threshold(mu1 * i_s[j] + p1[j], beta) / (mu1 + 2.0 * alpha);
    }
    z
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Dual ascent `p += mu * residual` for both splits.
pub fn dual_update(
    p1: &mut DVector<f64>,
    p2: &mut DVector<f64>,
    i_s: &DVector<f64>,
    z: &DVector<f64>,
    bi: &DVector<f64>,
    y: &DVector<f64>,
    mu1: f64,
    mu2: f64,
) {
    for j in 0..p1.len() {
        p1[j] += mu1 * (i_s[j] - z[j]);
    }
    for i in 0..p2.len() {
        p2[i] += mu2 * (bi[i] - y[i]);
    }
}

/// The optimization objective `-<B I, e~> + alpha |I|^2 + beta |I|_1`.
pub fn objective(
    b: &TransferMatrix,
    i_s: &DVector<f64>,
    e_tilde: &TargetField,
    alpha: f64,
    beta: f64,
) -> f64 {
    let bi = b.apply(i_s);
    let drive: f64 = bi.iter().zip(e_tilde.as_slice()).map(|(a, b)| a * b).sum();
    let l2: f64 = i_s.iter().map(|v| v * v).sum();
    let l1: f64 = i_s.iter().map(|v| v.abs()).sum();
    -drive + alpha * l2 + beta * l1
}

/// Completes a reduced current vector to the full zero-sum protocol with the
/// reference current appended last. Summing the result left to right gives
/// exactly 0.0.
pub fn full_protocol(reduced: &[f64]) -> Vec<f64> {
    let mut protocol = reduced.to_vec();
    let sum: f64 = reduced.iter().sum();
    protocol.push(-sum);
    protocol
}

/// Total variation `sum |I_i|` of the full S-electrode protocol.
pub fn protocol_total_variation(reduced: &[f64]) -> f64 {
    full_protocol(reduced).iter().map(|v| v.abs()).sum()
}

/// Scales a protocol onto the safety budget: `I~ = 4 I / |I|_M` with
/// `delta = 4 epsilon / |I|_M`, so the rescaled protocol injects 2 mA and
/// extracts 2 mA in total (currents in mA).
pub fn rescale_to_safety(reduced: &[f64], epsilon: f64) -> Result<(Vec<f64>, f64)> {
    let tv = protocol_total_variation(reduced);
    if tv <= 0.0 {
        return Err(Error::Optimization("cannot rescale null protocol".into()));
    }
    let scale = 4.0 / tv;
    let scaled: Vec<f64> = reduced.iter().map(|v| v * scale).collect();
    Ok((scaled, 4.0 * epsilon / tv))
}

/// Runs the ADMM loop: I-step, y-step, z-step, dual update per iteration,
/// stopping once at least 3 iterations ran and the iterate change drops
/// below `tol` (Euclidean norm). Hitting `max_iter` flags the result as
/// non-converged instead of failing.
pub fn run_admm(
    b: &TransferMatrix,
    params: &AdmmParams,
    omega: &WeightField,
    e_tilde: &TargetField,
    init: Option<AdmmState>,
) -> Result<OptResult> {
    params.validate()?;
    let rows = b.dim() * b.num_elements();
    if omega.num_elements() != b.num_elements() {
        return Err(Error::Optimization(format!(
            "weight field has {} elements, transfer matrix {}",
            omega.num_elements(),
            b.num_elements()
        )));
    }
    if e_tilde.as_slice().len() != rows {
        return Err(Error::Optimization(format!(
            "target field has {} entries, expected {}",
            e_tilde.as_slice().len(),
            rows
        )));
    }
    let cols = b.reduced_len();
    let factor = IstepFactor::new(b.matrix(), params.mu1, params.mu2)?;

    let mut state = init.unwrap_or_else(|| AdmmState::zeros(cols, rows));
    if state.i_s.len() != cols || state.y.len() != rows {
        return Err(Error::Optimization(
            "warm-start state has wrong dimensions".into(),
        ));
    }
    state.k = 0;

    let mut history = Vec::new();
    let mut converged = false;
    loop {
        let i_prev = state.i_s.clone();
        state.i_s = istep(
            &factor,
            b.matrix(),
            &state.z,
            &state.p1,
            &state.y,
            &state.p2,
            params.mu1,
            params.mu2,
        )?;
        let bi = b.apply(&state.i_s);
        state.y = ystep(
            &bi,
            &state.p2,
            e_tilde.as_slice(),
            params.mu2,
            omega.as_slice(),
            params.epsilon,
            params.state_constraint,
        );
        state.z = zstep(&state.i_s, &state.p1, params.mu1, params.alpha, params.beta);
        dual_update(
            &mut state.p1,
            &mut state.p2,
            &state.i_s,
            &state.z,
            &bi,
            &state.y,
            params.mu1,
            params.mu2,
        );
        state.k += 1;

        let step_norm = (&state.i_s - &i_prev).norm();
        history.push(IterationRecord {
            objective: objective(b, &state.i_s, e_tilde, params.alpha, params.beta),
            residual_z: (&state.i_s - &state.z).norm(),
            residual_y: (&bi - &state.y).norm(),
            step_norm,
        });

        if state.k >= 3 && step_norm <= params.tol {
            converged = true;
            break;
        }
        if state.k >= params.max_iter {
            break;
        }
    }

    let reduced: Vec<f64> = state.i_s.iter().copied().collect();
    let protocol = full_protocol(&reduced);
    let total_variation: f64 = protocol.iter().map(|v| v.abs()).sum();
    let delta = if total_variation > 0.0 {
        Some(4.0 * params.epsilon / total_variation)
    } else {
        None
    };
    Ok(OptResult {
        reduced,
        protocol,
        delta,
        iterations: state.k,
        total_variation,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_b(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        // Small deterministic pseudo-random matrix (LCG), test-local.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        DMatrix::from_fn(rows, cols, |_, _| next())
    }

    #[test]
    fn istep_reduces_to_z_for_zero_b() {
        let b = DMatrix::zeros(6, 3);
        let factor = IstepFactor::new(&b, 2.0, 1.5).unwrap();
        let z = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let y = DVector::zeros(6);
        let p2 = DVector::zeros(6);
        let i_s = istep(&factor, &b, &z, &DVector::zeros(3), &y, &p2, 2.0, 1.5).unwrap();
        for j in 0..3 {
            assert!((i_s[j] - z[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn istep_without_coupling() {
        // mu2 = 0 decouples B entirely: I = z - p1/mu1.
        let b = toy_b(6, 3, 7);
        let factor = IstepFactor::new(&b, 4.0, 0.0).unwrap();
        let z = DVector::from_column_slice(&[1.0, 0.0, -1.0]);
        let p1 = DVector::from_column_slice(&[2.0, -4.0, 8.0]);
        let i_s = istep(
            &factor,
            &b,
            &z,
            &p1,
            &DVector::zeros(6),
            &DVector::zeros(6),
            4.0,
            0.0,
        )
        .unwrap();
        for j in 0..3 {
            assert!((i_s[j] - (z[j] - p1[j] / 4.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn istep_plugback_residual() {
        let b = toy_b(6, 3, 42);
        let (mu1, mu2) = (0.7, 1.3);
        let factor = IstepFactor::new(&b, mu1, mu2).unwrap();
        let z = DVector::from_column_slice(&[0.3, -0.8, 1.2]);
        let p1 = DVector::from_column_slice(&[0.1, 0.2, -0.3]);
        let y = DVector::from_fn(6, |i, _| (i as f64 * 0.77).sin());
        let p2 = DVector::from_fn(6, |i, _| (i as f64 * 1.3).cos());
        let i_s = istep(&factor, &b, &z, &p1, &y, &p2, mu1, mu2).unwrap();
        let lhs = {
            let mut m = b.tr_mul(&b) * mu2;
            for i in 0..3 {
                m[(i, i)] += mu1;
            }
            m * &i_s
        };
        let rhs = &z * mu1 - &p1 + b.tr_mul(&(&y * mu2 - &p2));
        let residual = (lhs - &rhs).norm() / rhs.norm();
        assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn ystep_projects_blocks() {
        // omega = 1, eps = 1: block (2, 0) lands on the unit circle.
        let bi = DVector::from_column_slice(&[2.0, 0.0]);
        let y = ystep(
            &bi,
            &DVector::zeros(2),
            &[0.0, 0.0],
            1.0,
            &[1.0],
            1.0,
            StateConstraint::Vector,
        );
        assert!((y[0] - 1.0).abs() < 1e-14 && y[1].abs() < 1e-14);

        // Interior block is untouched.
        let bi = DVector::from_column_slice(&[0.3, 0.4]);
        let y = ystep(
            &bi,
            &DVector::zeros(2),
            &[0.0, 0.0],
            1.0,
            &[1.0],
            1.0,
            StateConstraint::Vector,
        );
        assert_eq!(y.as_slice(), bi.as_slice());

        // omega = 2, eps = 1: 3D block scaled to radius 0.5.
        let bi = DVector::from_column_slice(&[0.0, 3.0, 4.0]);
        let y = ystep(
            &bi,
            &DVector::zeros(3),
            &[0.0, 0.0, 0.0],
            1.0,
            &[2.0],
            1.0,
            StateConstraint::Vector,
        );
        assert!((y[0]).abs() < 1e-14);
        assert!((y[1] - 0.3).abs() < 1e-14);
        assert!((y[2] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn ystep_component_mode_clips_scalars() {
        let bi = DVector::from_column_slice(&[2.0, -0.4]);
        let y = ystep(
            &bi,
            &DVector::zeros(2),
            &[0.0, 0.0],
            1.0,
            &[1.0],
            1.0,
            StateConstraint::Component,
        );
        assert!((y[0] - 1.0).abs() < 1e-14);
        assert!((y[1] + 0.4).abs() < 1e-14);
    }

    #[test]
    fn zstep_closed_forms() {
        // Pure quadratic prox: (mu1 I + p1) / mu1.
        let z = zstep(
            &DVector::from_column_slice(&[2.0]),
            &DVector::from_column_slice(&[-0.5]),
            1.0,
            0.0,
            0.0,
        );
        assert!((z[0] - 1.5).abs() < 1e-14);

        // Full shrinkage to zero.
        let z = zstep(
            &DVector::from_column_slice(&[2.0]),
            &DVector::from_column_slice(&[0.0]),
            1.0,
            0.0,
            5.0,
        );
        assert_eq!(z[0], 0.0);

        // mu1 = 2, alpha = 0.5, beta = 1, I = 3, p1 = 0 -> 5/3.
        let z = zstep(
            &DVector::from_column_slice(&[3.0]),
            &DVector::from_column_slice(&[0.0]),
            2.0,
            0.5,
            1.0,
        );
        assert!((z[0] - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zstep_beats_grid_search_spot_check() {
        let subproblem = |z: f64, i: f64, p1: f64, mu1: f64, alpha: f64, beta: f64| {
            alpha * z * z + beta * z.abs() + mu1 / 2.0 * (z - i) * (z - i) + (i - z) * p1
        };
        let (i, p1, mu1, alpha, beta) = (-1.7, 0.45, 1.3, 0.2, 0.6);
        let z = zstep(
            &DVector::from_column_slice(&[i]),
            &DVector::from_column_slice(&[p1]),
            mu1,
            alpha,
            beta,
        )[0];
        let fz = subproblem(z, i, p1, mu1, alpha, beta);
        let mut grid = -10.0;
        while grid <= 10.0 {
            assert!(fz <= subproblem(grid, i, p1, mu1, alpha, beta) + 1e-12);
            grid += 1e-3;
        }
    }

    #[test]
    fn dual_update_fixed_point_and_step() {
        let i_s = DVector::from_column_slice(&[1.0, -1.0]);
        let z = i_s.clone();
        let bi = DVector::from_column_slice(&[0.5, 0.5, -0.5, 0.0]);
        let y = bi.clone();
        let mut p1 = DVector::from_column_slice(&[0.3, -0.3]);
        let mut p2 = DVector::zeros(4);
        let (p1_before, p2_before) = (p1.clone(), p2.clone());
        dual_update(&mut p1, &mut p2, &i_s, &z, &bi, &y, 1.0, 1.0);
        assert_eq!(p1, p1_before);
        assert_eq!(p2, p2_before);

        let z2 = DVector::from_column_slice(&[0.0, 0.0]);
        let mut p1 = DVector::zeros(2);
        dual_update(&mut p1, &mut p2, &i_s, &z2, &bi, &y, 1.0, 1.0);
        assert_eq!(p1.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn zero_b_with_sparsity_shrinks_to_null_protocol() {
        let b = TransferMatrix::from_dense(2, 2, DMatrix::zeros(4, 3)).unwrap();
        let omega = WeightField::uniform(2, 1.0).unwrap();
        let e = TargetField::from_raw(2, vec![0.0; 4]).unwrap();
        let params = AdmmParams {
            beta: 0.5,
            ..Default::default()
        };
        let result = run_admm(&b, &params, &omega, &e, None).unwrap();
        assert!(result.converged);
        assert!(result.reduced.iter().all(|&v| v.abs() < 1e-12));
        assert_eq!(result.total_variation, 0.0);
        assert!(result.delta.is_none());
    }

    #[test]
    fn rescale_examples() {
        // Full protocol [2, -2, 0]: ||I||_M = 4 -> identity scaling.
        let (scaled, delta) = rescale_to_safety(&[2.0, -2.0], 0.001).unwrap();
        assert_eq!(scaled, vec![2.0, -2.0]);
        assert!((delta - 0.001).abs() < 1e-18);

        // ||I||_M = 8 -> halved.
        let (scaled, delta) = rescale_to_safety(&[4.0, -4.0], 0.001).unwrap();
        assert_eq!(scaled, vec![2.0, -2.0]);
        assert!((delta - 0.0005).abs() < 1e-18);

        // Head-model-scale arithmetic: eps = 0.001, ||I||_M = 352.279.
        let half = 352.279 / 2.0;
        let (_, delta) = rescale_to_safety(&[half, -half], 0.001).unwrap();
        assert!((delta - 1.1355e-5).abs() < 1e-9);

        assert!(rescale_to_safety(&[0.0, 0.0], 0.001).is_err());
    }

    #[test]
    fn rescaled_total_variation_is_four() {
        let reduced = [0.3, -1.8, 2.5];
        let (scaled, _) = rescale_to_safety(&reduced, 0.01).unwrap();
        let tv = protocol_total_variation(&scaled);
        assert!((tv - 4.0).abs() < 1e-12);
    }

    #[test]
    fn full_protocol_sums_to_zero_exactly() {
        let protocol = full_protocol(&[0.1, 0.2, -0.05, 0.7]);
        assert_eq!(protocol.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn admm_is_bitwise_deterministic() {
        let m = toy_b(8, 3, 11) * 0.3;
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let omega = WeightField::uniform(4, 1.0).unwrap();
        let mut e = vec![0.0; 8];
        e[0] = 1.0;
        let e_tilde = target_from(2, e);
        let params = AdmmParams::l1r(0.05);
        let a = run_admm(&b, &params, &omega, &e_tilde, None).unwrap();
        let c = run_admm(&b, &params, &omega, &e_tilde, None).unwrap();
        assert_eq!(a.reduced, c.reduced);
        assert_eq!(a.iterations, c.iterations);
        assert!(a
            .history
            .iter()
            .zip(&c.history)
            .all(|(x, y)| x.objective == y.objective && x.step_norm == y.step_norm));
    }

    #[test]
    fn admm_feasible_at_convergence() {
        let m = toy_b(8, 3, 5);
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let omega = WeightField::uniform(4, 1.0).unwrap();
        let mut e = vec![0.0; 8];
        e[2] = 0.6;
        e[3] = 0.8;
        let e_tilde = target_from(2, e);
        // The constraint violation of B I tracks the stopping tolerance
        // (about 50x); 1e-8 keeps it inside the 1e-6 feasibility margin.
        let mut params = AdmmParams::l1r(0.4);
        params.tol = 1e-8;
        let result = run_admm(&b, &params, &omega, &e_tilde, None).unwrap();
        assert!(result.converged);
        let bi = b.apply(&DVector::from_column_slice(&result.reduced));
        for i in 0..4 {
            let norm: f64 = (0..2).map(|k| bi[i * 2 + k].powi(2)).sum::<f64>().sqrt();
            assert!(norm <= params.epsilon * (1.0 + 1e-6), "block {i}: {norm}");
        }
    }

    fn target_from(dim: usize, values: Vec<f64>) -> TargetField {
        TargetField::from_raw(dim, values).unwrap()
    }

    #[test]
    fn warm_start_converges_quickly() {
        let m = toy_b(8, 3, 5);
        let b = TransferMatrix::from_dense(2, 4, m).unwrap();
        let omega = WeightField::uniform(4, 1.0).unwrap();
        let mut e = vec![0.0; 8];
        e[2] = 0.6;
        e[3] = 0.8;
        let e_tilde = target_from(2, e);
        let mut params = AdmmParams::l1r(0.4);
        params.tol = 1e-8;
        let cold = run_admm(&b, &params, &omega, &e_tilde, None).unwrap();
        let warm_state = AdmmState::from_reduced(&cold.reduced, &b);
        let warm = run_admm(&b, &params, &omega, &e_tilde, Some(warm_state)).unwrap();
        assert!(warm.converged);
        assert!(
            warm.iterations < cold.iterations,
            "warm {} vs cold {}",
            warm.iterations,
            cold.iterations
        );
        for (a, c) in warm.reduced.iter().zip(&cold.reduced) {
            assert!((a - c).abs() < 1e-5);
        }
    }

    #[test]
    fn reference_matches_interior_analytic_optimum() {
        // Huge eps leaves the constraint inactive; with beta = 0 and
        // alpha > 0 the optimum is B^T e / (2 alpha).
        let m = toy_b(8, 3, 21);
        let b = TransferMatrix::from_dense(2, 4, m.clone()).unwrap();
        let omega = WeightField::uniform(4, 1.0).unwrap();
        let mut e = vec![0.0; 8];
        e[4] = 1.0;
        let e_tilde = target_from(2, e.clone());
        let params = AdmmParams {
            alpha: 0.35,
            beta: 0.0,
            epsilon: 1e9,
            ..Default::default()
        };
        let result = reference_solve(&b, &params, &omega, &e_tilde).unwrap();
        let expected = m.tr_mul(&DVector::from_column_slice(&e)) / (2.0 * 0.35);
        let err =
            (DVector::from_column_slice(&result.reduced) - &expected).norm() / expected.norm();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn reference_rejects_large_instances() {
        let b = TransferMatrix::from_dense(2, 100, DMatrix::zeros(200, 3)).unwrap();
        let omega = WeightField::uniform(100, 1.0).unwrap();
        let e_tilde = target_from(2, vec![0.0; 200]);
        assert!(reference_solve(&b, &AdmmParams::default(), &omega, &e_tilde).is_err());
    }

    #[test]
    fn reference_zero_b_returns_zero() {
        let b = TransferMatrix::from_dense(2, 4, DMatrix::zeros(8, 3)).unwrap();
        let omega = WeightField::uniform(4, 1.0).unwrap();
        let e_tilde = target_from(2, vec![0.0; 8]);
        let result = reference_solve(&b, &AdmmParams::default(), &omega, &e_tilde).unwrap();
        assert!(result.reduced.iter().all(|&v| v == 0.0));
    }
}
