//! Independent reference optimizer for small instances, used as the test
//! oracle against the ADMM path: quadratic-penalty continuation with
//! normalized subgradient steps, followed by a projected-subgradient polish.
//! Feasible candidates are produced by radial scaling, which is exact for
//! the one-homogeneous state constraint.

use nalgebra::DVector;

use super::{full_protocol, AdmmParams, OptResult};
use crate::error::{Error, Result};
use crate::transfer::{TargetField, TransferMatrix, WeightField};

const MAX_REDUCED: usize = 8;
const MAX_ELEMENTS: usize = 64;
const PENALTY_STAGES: usize = 5;
const STAGE_ITERS: usize = 120_000;
const POLISH_ROUNDS: usize = 4;
const POLISH_ITERS: usize = 100_000;
const CANDIDATE_EVERY: usize = 25;
const COORD_PASSES: usize = 400;

/// Solves the same constrained problem as [`super::run_admm`] by an
/// independent method. Restricted to desk-size instances
/// (S-1 <= 8, N <= 64); intended for tests.
pub fn reference_solve(
    b: &TransferMatrix,
    params: &AdmmParams,
    omega: &WeightField,
    e_tilde: &TargetField,
) -> Result<OptResult> {
    params.validate()?;
    let cols = b.reduced_len();
    let n = b.num_elements();
    if cols > MAX_REDUCED || n > MAX_ELEMENTS {
        return Err(Error::Optimization(format!(
            "instance too large for the reference solver (S-1 = {cols} > {MAX_REDUCED} or N = {n} > {MAX_ELEMENTS})"
        )));
    }
    if omega.num_elements() != n || e_tilde.as_slice().len() != b.dim() * n {
        return Err(Error::Optimization(
            "field dimensions do not match B".into(),
        ));
    }

    let matrix = b.matrix();
    let dim = b.dim();
    let w = omega.as_slice();
    let eps = params.epsilon;
    let bte = matrix.tr_mul(&e_tilde.as_dvector());

    // Degenerate drive: the objective reduces to pure penalties, minimized
    // at zero.
    let b_norm = matrix.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(result_from(params, &DVector::zeros(cols)));
    }

    // Scale estimates for step sizes and penalty weights.
    let mut max_block = 0.0f64;
    for (e, &we) in w.iter().enumerate() {
        let mut frob = 0.0;
        for k in 0..dim {
            for c in 0..cols {
                frob += matrix[(e * dim + k, c)].powi(2);
            }
        }
        max_block = max_block.max(we * frob.sqrt());
    }
    let r_constraint = if max_block > 0.0 {
        eps * (cols as f64).sqrt() / max_block
    } else {
        0.0
    };
    let r_interior = if params.alpha > 0.0 {
        bte.norm() / (2.0 * params.alpha)
    } else {
        0.0
    };
    let r0 = 10.0 * r_constraint.max(r_interior).max(1e-12);
    let t0 = bte.norm() / (0.2 * eps * max_block).max(1e-300);

    let weighted_violation = |bi: &DVector<f64>| -> f64 {
        let mut worst = 0.0f64;
        for (e, &we) in w.iter().enumerate() {
            let norm: f64 = (0..dim)
                .map(|k| bi[e * dim + k].powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(we * norm);
        }
        worst
    };
    let objective_of = |x: &DVector<f64>, bi: &DVector<f64>| -> f64 {
        let drive: f64 = bi.iter().zip(e_tilde.as_slice()).map(|(a, b)| a * b).sum();
        -drive
            + params.alpha * x.iter().map(|v| v * v).sum::<f64>()
            + params.beta * x.iter().map(|v| v.abs()).sum::<f64>()
    };
    // Radial pull-back onto the feasible set (exact: the constraint is
    // one-homogeneous in x).
    let feasible_candidate = |x: &DVector<f64>| -> (DVector<f64>, f64) {
        let bi = matrix * x;
        let worst = weighted_violation(&bi);
        if worst > eps {
            let s = eps / worst;
            let xs = x * s;
            let bis = &bi * s;
            let f = objective_of(&xs, &bis);
            (xs, f)
        } else {
            let f = objective_of(x, &bi);
            (x.clone(), f)
        }
    };
    let objective_subgradient = |x: &DVector<f64>| -> DVector<f64> {
        let mut g = -&bte;
        for j in 0..cols {
            g[j] += 2.0 * params.alpha * x[j] + params.beta * x[j].signum();
        }
        g
    };
    let penalty_subgradient = |bi: &DVector<f64>| -> DVector<f64> {
        let mut dual = DVector::zeros(bi.len());
        for (e, &we) in w.iter().enumerate() {
            let norm: f64 = (0..dim)
                .map(|k| bi[e * dim + k].powi(2))
                .sum::<f64>()
                .sqrt();
            let excess = we * norm - eps;
            if excess > 0.0 && norm > 0.0 {
                let coef = 2.0 * excess * we / norm;
                for k in 0..dim {
                    dual[e * dim + k] = coef * bi[e * dim + k];
                }
            }
        }
        matrix.tr_mul(&dual)
    };

    let mut x: DVector<f64> = DVector::zeros(cols);
    let (mut best_x, mut best_f) = feasible_candidate(&x);

    // Phase 1: penalty continuation with normalized diminishing steps,
    // restarting each stage from the incumbent.
    for stage in 0..PENALTY_STAGES {
        let t = t0 * 10f64.powi(stage as i32);
        let radius = r0 * 0.25f64.powi(stage as i32);
        for j in 0..STAGE_ITERS {
            let bi = matrix * &x;
            let mut g = objective_subgradient(&x);
            g += penalty_subgradient(&bi) * t;
            let gn = g.norm();
            if gn > 0.0 {
                let step = radius / ((j + 1) as f64).sqrt();
                x -= g * (step / gn);
            }
            if j % CANDIDATE_EVERY == 0 {
                let (cand, f) = feasible_candidate(&x);
                if f < best_f {
                    best_f = f;
                    best_x = cand;
                }
            }
        }
        let (cand, f) = feasible_candidate(&x);
        if f < best_f {
            best_f = f;
            best_x = cand;
        }
        x = best_x.clone();
    }

    // Phase 2: projected subgradient around the incumbent, in rounds of
    // shrinking radius.
    for round in 0..POLISH_ROUNDS {
        x = best_x.clone();
        let radius = (best_x.norm() / 10.0).max(r0 * 1e-6) * 0.25f64.powi(round as i32);
        for j in 0..POLISH_ITERS {
            let g = objective_subgradient(&x);
            let gn = g.norm();
            if gn > 0.0 {
                let step = radius / ((j + 1) as f64).sqrt();
                x -= g * (step / gn);
            }
            let bi = matrix * &x;
            let worst = weighted_violation(&bi);
            if worst > eps {
                x *= eps / worst;
            }
            let f = objective_of(&x, &(matrix * &x));
            if f < best_f {
                best_f = f;
                best_x = x.clone();
            }
        }
    }

    // Phase 3: direction-set refinement with exact feasible line search.
    // Directions are the coordinates plus pairwise combinations; each 1-D
    // restriction is a piecewise quadratic whose minimizer is found in
    // closed form per segment.
    let mut directions: Vec<DVector<f64>> = Vec::new();
    for j in 0..cols {
        let mut d = DVector::zeros(cols);
        d[j] = 1.0;
        directions.push(d);
    }
    for j in 0..cols {
        for k in (j + 1)..cols {
            for sign in [1.0, -1.0] {
                let mut d = DVector::zeros(cols);
                d[j] = 1.0;
                d[k] = sign;
                directions.push(d);
            }
        }
    }
    x = best_x.clone();
    let mut bx = matrix * &x;
    for _pass in 0..COORD_PASSES {
        let mut moved = false;
        for d in &directions {
            let bd = matrix * d;
            // Feasible interval for x + t d from the per-block quadratics.
            let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut blocked = false;
            for (i, &we) in w.iter().enumerate() {
                let r = eps / we;
                let mut a = 0.0;
                let mut b = 0.0;
                let mut c = 0.0;
                for k in 0..dim {
                    let row = i * dim + k;
                    a += bd[row] * bd[row];
                    b += 2.0 * bx[row] * bd[row];
                    c += bx[row] * bx[row];
                }
                c -= r * r;
                if a <= 1e-300 {
                    if b.abs() <= 1e-300 {
                        if c > 1e-12 * r * r {
                            blocked = true;
                            break;
                        }
                    } else if b > 0.0 {
                        t_hi = t_hi.min(-c / b);
                    } else {
                        t_lo = t_lo.max(-c / b);
                    }
                    continue;
                }
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    // Feasibility of x implies disc >= 0 up to rounding.
                    blocked = true;
                    break;
                }
                let sq = disc.sqrt();
                t_lo = t_lo.max((-b - sq) / (2.0 * a));
                t_hi = t_hi.min((-b + sq) / (2.0 * a));
            }
            if blocked || t_lo > t_hi {
                continue;
            }

            // g(t) = A t^2 + B t + beta * sum |x_k + t d_k| + const
            let quad = params.alpha * d.dot(d);
            let drive: f64 = bd.iter().zip(e_tilde.as_slice()).map(|(a, b)| a * b).sum();
            let lin = 2.0 * params.alpha * x.dot(d) - drive;
            let g_of = |t: f64| {
                let l1: f64 = (0..cols).map(|k| (x[k] + t * d[k]).abs()).sum();
                quad * t * t + lin * t + params.beta * l1
            };
            // Candidates: interval ends, every kink, and the per-segment
            // stationary points of the smooth part with each sign pattern.
            let mut candidates = vec![0.0f64.clamp(t_lo, t_hi), t_lo, t_hi];
            let mut kinks: Vec<f64> = (0..cols)
                .filter(|&k| d[k] != 0.0)
                .map(|k| -x[k] / d[k])
                .filter(|t| (t_lo..=t_hi).contains(t))
                .collect();
            kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            candidates.extend_from_slice(&kinks);
            if quad > 0.0 {
                let mut segment_points = vec![t_lo];
                segment_points.extend_from_slice(&kinks);
                segment_points.push(t_hi);
                for w in segment_points.windows(2) {
                    let mid = 0.5 * (w[0] + w[1]);
                    let slope_l1: f64 =
                        (0..cols).map(|k| d[k] * (x[k] + mid * d[k]).signum()).sum();
                    let t_star = (-(lin + params.beta * slope_l1)) / (2.0 * quad);
                    if t_star >= w[0] && t_star <= w[1] {
                        candidates.push(t_star);
                    }
                }
            }
            let mut t_best = 0.0f64.clamp(t_lo, t_hi);
            let mut g_best = g_of(t_best);
            for &t in &candidates {
                let g = g_of(t);
                if g < g_best - 1e-300 {
                    g_best = g;
                    t_best = t;
                }
            }
            if t_best != 0.0 && g_of(t_best) < g_of(0.0) {
                moved = true;
                for k in 0..cols {
                    x[k] += t_best * d[k];
                }
                bx += &bd * t_best;
            }
        }
        if !moved {
            break;
        }
    }
    // The refinement is monotone from a feasible start, but guard against
    // rounding pushing the iterate over the boundary.
    let worst = weighted_violation(&bx);
    if worst > eps {
        x *= eps / worst;
    }
    let f = objective_of(&x, &(matrix * &x));
    if f < best_f {
        best_x = x;
    }

    Ok(result_from(params, &best_x))
}

fn result_from(params: &AdmmParams, x: &DVector<f64>) -> OptResult {
    let reduced: Vec<f64> = x.iter().copied().collect();
    let protocol = full_protocol(&reduced);
    let total_variation: f64 = protocol.iter().map(|v| v.abs()).sum();
    let delta = if total_variation > 0.0 {
        Some(4.0 * params.epsilon / total_variation)
    } else {
        None
    };
    OptResult {
        reduced,
        protocol,
        delta,
        iterations: PENALTY_STAGES * STAGE_ITERS + POLISH_ROUNDS * POLISH_ITERS,
        total_variation,
        converged: true,
        history: Vec::new(),
    }
}
