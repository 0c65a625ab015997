//! Adaptive embedded Runge-Kutta 5(4) stepping with exact landing on
//! requested times.
//!
//! The pair is the classic seven-stage Dormand-Prince scheme with the
//! first-same-as-last optimization. Local error is measured in a weighted
//! RMS norm with `atol = rtol = tol`; a PI controller rescales the step with
//! safety factor 0.9 and scale clamps. Callers provide a `next_stop`
//! function naming the next time the stepper must land on exactly
//! (checkpoints, noise-grid nodes); steps are clipped so the right-hand side
//! is only ever sampled inside one smooth piece.

use crate::error::{Error, Result};

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

/// Step-size and guard settings.
#[derive(Debug, Clone)]
pub struct StepperOptions {
    /// Local error target per step (`atol = rtol = tol`).
    pub tol: f64,
    /// Hard cap on the step size, if any.
    pub max_step: Option<f64>,
    /// Starting step; estimated from the initial slope when absent.
    pub initial_step: Option<f64>,
    /// Any accepted state with an entry beyond this magnitude is a blow-up.
    pub sup_limit: f64,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_step: None,
            initial_step: None,
            sup_limit: 1e8,
        }
    }
}

/// Work counters for one integration.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

struct Workspace {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [&[f64]; 7] = [
    &[],
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights (row 7 of the tableau; FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, landing exactly on
/// every time `next_stop` announces, and reporting each accepted state
/// through `on_accept`.
///
/// `next_stop(t)` must return the next mandatory landing time in
/// `(t, t_end]`, or `t_end` when there is none. The right-hand side may fail
/// (domain overflow guards); a failure at the current state aborts, a
/// failure at a trial stage rejects the step and retries smaller.
pub fn integrate_adaptive(
    mut rhs: impl FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &StepperOptions,
    mut next_stop: impl FnMut(f64) -> f64,
    mut on_accept: impl FnMut(f64, &[f64]),
) -> Result<(Vec<f64>, StepStats)> {
    assert!(t_end >= t0, "integration runs forward");
    let n = y0.len();
    let mut ws = Workspace::new(n);
    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;

    if t_end == t0 {
        return Ok((y, stats));
    }

    rhs(t, &y, &mut ws.k[0])?;
    stats.rhs_evals += 1;

    let span = t_end - t0;
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let d0 = wrms(&y, &y, &y, opts.tol);
        let d1 = wrms(&ws.k[0], &y, &y, opts.tol);
        if d1 > 1e-10 {
            (0.01 * d0.max(1e-4) / d1).min(0.1 * span)
        } else {
            0.1 * span
        }
    });
    h = h.min(span);
    if let Some(cap) = opts.max_step {
        h = h.min(cap);
    }

    let mut err_prev: f64 = 1.0;
    loop {
        let stop = next_stop(t).min(t_end);
        debug_assert!(stop > t);
        // underflow is judged on the controller's proposal, before clipping:
        // a tiny landing step onto a nearby stop is legitimate
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let mut landing = false;
        if t + h >= stop - 1e-12 * stop.abs().max(1.0) {
            h = stop - t;
            landing = true;
        }

        // Stages 2..=7 (k1 is fresh from the last accepted step).
        let mut stage_failed = false;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &a) in A[s].iter().enumerate() {
                    acc += a * ws.k[j][i];
                }
                ws.y_stage[i] = y[i] + h * acc;
            }
            let (head, tail) = ws.k.split_at_mut(s);
            let _ = head;
            if rhs(t + C[s] * h, &ws.y_stage, &mut tail[0]).is_err() {
                stage_failed = true;
                break;
            }
            stats.rhs_evals += 1;
            if !tail[0].iter().all(|v| v.is_finite()) {
                stage_failed = true;
                break;
            }
        }

        let mut err = f64::INFINITY;
        if !stage_failed {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &b) in B5.iter().enumerate() {
                    acc += b * ws.k[j][i];
                }
                ws.y_new[i] = y[i] + h * acc;
            }
            let mut sum = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (j, &c) in E.iter().enumerate() {
                    e += c * ws.k[j][i];
                }
                let sc = opts.tol + opts.tol * y[i].abs().max(ws.y_new[i].abs());
                let r = h * e / sc;
                sum += r * r;
            }
            err = (sum / n as f64).sqrt();
            if !err.is_finite() || !ws.y_new.iter().all(|v| v.is_finite()) {
                err = f64::INFINITY;
            }
        }

        if err <= 1.0 {
            t = if landing { stop } else { t + h };
            std::mem::swap(&mut y, &mut ws.y_new);
            if y.iter().any(|v| v.abs() > opts.sup_limit) {
                return Err(Error::BlowUp {
                    t,
                    what: format!("state norm exceeded {:.1e}", opts.sup_limit),
                });
            }
            stats.accepted += 1;
            on_accept(t, &y);
            if t >= t_end {
                return Ok((y, stats));
            }
            ws.k.swap(0, 6); // FSAL: last stage is the next first stage.
            let scale = if err == 0.0 {
                MAX_SCALE
            } else {
                (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA)).clamp(MIN_SCALE, MAX_SCALE)
            };
            err_prev = err.max(1e-4);
            h *= scale;
            if let Some(cap) = opts.max_step {
                h = h.min(cap);
            }
        } else {
            stats.rejected += 1;
            let scale = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h *= scale;
        }
    }
}

fn wrms(v: &[f64], y_a: &[f64], y_b: &[f64], tol: f64) -> f64 {
    let n = v.len() as f64;
    let sum: f64 = v
        .iter()
        .zip(y_a.iter().zip(y_b))
        .map(|(x, (a, b))| {
            let sc = tol + tol * a.abs().max(b.abs());
            (x / sc) * (x / sc)
        })
        .sum();
    (sum / n).sqrt()
}
