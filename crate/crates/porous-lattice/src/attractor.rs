//! Experiment drivers around the random absorbing set: its radius, pullback
//! absorption, temperedness, tail nullity, and attractor estimation via
//! Hausdorff semi-distances.
//!
//! All pullback runs follow the same pattern: one long two-sided Wiener path
//! per seed, shifted (exactly, by grid relabeling) to start at `-t`, an OU
//! path built on the shifted chart, and a forward integration over `[0, t]`.
//! Reusing a single base path across pullback times keeps different `t`
//! mutually consistent; every quantity is a pure function of
//! `(seed, grid, params)`.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate, IntegrationOptions, ModelParams};
use crate::energy::weighted_integral;
use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::noise::{OuPath, WienerPath};

/// Shared knobs for the pullback experiments.
#[derive(Debug, Clone, Serialize)]
pub struct LabSetup {
    /// Grid step of the Wiener/OU paths; pullback times must be multiples.
    pub noise_dt: f64,
    /// Extra backward history beyond the largest pullback time, so the OU
    /// initialization tail is negligible everywhere it is consumed.
    pub history: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Quadrature horizon for the absorbing radius.
    pub quad_horizon: f64,
}

impl Default for LabSetup {
    fn default() -> Self {
        Self {
            noise_dt: 0.01,
            history: 50.0,
            tol: 1e-8,
            quad_horizon: 50.0,
        }
    }
}

impl LabSetup {
    fn require_aligned(&self, times: &[f64]) -> Result<()> {
        let mut prev = 0.0;
        for &t in times {
            if !(t > prev) {
                return Err(Error::InvalidParameter(format!(
                    "pullback times must be positive and strictly increasing, got {t} after {prev}"
                )));
            }
            let ratio = t / self.noise_dt;
            if (ratio - ratio.round()).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "pullback time {t} is not a multiple of the noise step {}",
                    self.noise_dt
                )));
            }
            prev = t;
        }
        Ok(())
    }
}

/// How to sample a ball of initial states: deterministic axis hits plus
/// seeded random directions, all placed on the sphere of the given radius.
#[derive(Debug, Clone, Serialize)]
pub struct CloudSpec {
    pub axis_sites: Vec<i64>,
    pub random_directions: usize,
    pub include_zero: bool,
}

impl CloudSpec {
    /// A default cloud: the center, axis hits at `0`, `±N/2`, `±N`, and six
    /// random directions.
    pub fn default_for(half_width: usize) -> Self {
        let n = half_width as i64;
        let mut axis_sites = vec![0, n / 2, -n / 2, n, -n];
        axis_sites.sort_unstable();
        axis_sites.dedup();
        Self {
            axis_sites,
            random_directions: 6,
            include_zero: true,
        }
    }
}

/// Samples the ball of `radius` in the window `ell^2` per the cloud spec;
/// deterministic given `(spec, seed)`.
pub fn sample_ball(
    half_width: usize,
    radius: f64,
    spec: &CloudSpec,
    seed: u64,
) -> Vec<LatticeVector> {
    let mut cloud = Vec::new();
    if spec.include_zero {
        cloud.push(LatticeVector::zeros(half_width));
    }
    if radius > 0.0 {
        for &i in &spec.axis_sites {
            let i = i.clamp(-(half_width as i64), half_width as i64);
            cloud.push(LatticeVector::unit(half_width, i).scale(radius));
            cloud.push(LatticeVector::unit(half_width, i).scale(-radius));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..spec.random_directions {
            loop {
                let v = LatticeVector::from_fn(half_width, |_| rng.sample::<f64, _>(StandardNormal));
                let norm = v.norm_l2();
                if norm > 1e-12 {
                    cloud.push(v.scale(radius / norm));
                    break;
                }
            }
        }
    }
    cloud
}

/// The absorbing-ball radius squared, with quadrature metadata.
#[derive(Debug, Clone, Serialize)]
pub struct AbsorbingRadius {
    pub r_squared: f64,
    pub horizon: f64,
    pub quad_dt: f64,
    /// Upper bound on the part of the integral beyond the horizon, using the
    /// `e^{lambda s}` decay against the observed `max |z|`; infinite when the
    /// crude rate `lambda - 2|alpha| max|z|` is not positive.
    pub tail_estimate: f64,
    pub forcing_level: f64,
}

/// Evaluates `R^2 = 1 + (8||g||^2/lambda + 2||a||_1) *
/// int_{-horizon}^0 e^{-2 alpha z(s) + lambda s + 2 alpha int_s^0 z dr} ds`.
///
/// Each cell uses the exponential of the linear interpolant of the log
/// integrand, which integrates `e^{lambda s}` exactly; for `alpha = 0` the
/// quadrature is therefore exact up to the horizon truncation.
pub fn absorbing_radius(
    ou: &OuPath,
    params: &ModelParams,
    horizon: f64,
    quad_dt: f64,
) -> Result<AbsorbingRadius> {
    if !(horizon > 0.0) || !(quad_dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon and quad_dt must be positive, got {horizon}, {quad_dt}"
        )));
    }
    let n = (horizon / quad_dt).round();
    if n < 1.0 || (n * quad_dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be a multiple of quad_dt {quad_dt}"
        )));
    }
    if ou.t_min() > -horizon || ou.t_max() < 0.0 {
        return Err(Error::OutOfDomain {
            t: -horizon,
            t_min: ou.t_min(),
            t_max: ou.t_max(),
        });
    }
    let n = n as usize;
    let lambda = params.lambda();
    let alpha = params.alpha();
    let log_integrand =
        |s: f64| -2.0 * alpha * ou.z_at(s) + lambda * s + 2.0 * alpha * ou.integral(s, 0.0);

    let mut sum = 0.0;
    let mut phi_prev = log_integrand(-horizon);
    for j in 1..=n {
        let s = if j == n { 0.0 } else { -horizon + j as f64 * quad_dt };
        let phi = log_integrand(s);
        let dphi = phi - phi_prev;
        sum += if dphi.abs() > 1e-8 {
            quad_dt * (phi.exp() - phi_prev.exp()) / dphi
        } else {
            0.5 * quad_dt * (phi.exp() + phi_prev.exp())
        };
        phi_prev = phi;
    }

    let level = params.forcing_level();
    let tail_estimate = if level == 0.0 {
        0.0
    } else {
        let m = ou.sup_abs();
        let rate = lambda - 2.0 * alpha.abs() * m;
        if rate > 0.0 {
            level * (2.0 * alpha.abs() * m).exp() * (-rate * horizon).exp() / rate
        } else {
            f64::INFINITY
        }
    };

    Ok(AbsorbingRadius {
        r_squared: 1.0 + level * sum,
        horizon,
        quad_dt,
        tail_estimate,
        forcing_level: level,
    })
}

/// First `t` at which the pullback transient
/// `e^{-lambda t + 2 alpha int_{-t}^0 z dr} * B^2` drops below 1 — the
/// absorption deadline the energy bound provides for a ball of radius `B`.
pub fn theoretical_entry_time(
    ou: &OuPath,
    params: &ModelParams,
    ball_radius: f64,
    t_max: f64,
) -> Option<f64> {
    if ball_radius <= 1.0 {
        return Some(0.0);
    }
    let target = 2.0 * ball_radius.ln();
    let lambda = params.lambda();
    let alpha = params.alpha();
    let dt = ou.dt();
    let steps = (t_max / dt).floor() as usize;
    let mut prev_t = 0.0;
    let mut prev_h = target;
    for k in 1..=steps {
        let t = k as f64 * dt;
        let h = -lambda * t + 2.0 * alpha * ou.integral(-t, 0.0) + target;
        if h <= 0.0 {
            return Some(prev_t + dt * prev_h / (prev_h - h));
        }
        prev_t = t;
        prev_h = h;
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionRow {
    pub t: f64,
    pub max_norm_sq: f64,
    pub all_inside: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionSeedReport {
    pub seed: u64,
    pub r_squared: f64,
    /// Deadline from the energy transient; `None` if beyond the scan range.
    pub theoretical_entry_time: Option<f64>,
    /// First tested pullback time from which all samples stay inside.
    pub observed_entry_time: Option<f64>,
    pub rows: Vec<AbsorptionRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionReport {
    pub ball_radius: f64,
    pub pullback_times: Vec<f64>,
    pub per_seed: Vec<AbsorptionSeedReport>,
    pub all_absorbed_at_final_time: bool,
}

/// Pullback-evolves a sampled ball of radius `ball_radius` from `-t` to `0`
/// for each pullback time and seed, and compares the arrival norms with the
/// absorbing radius `R(omega)`.
pub fn absorption_experiment(
    ball_radius: f64,
    pullback_times: &[f64],
    seeds: &[u64],
    params: &ModelParams,
    cloud: &CloudSpec,
    setup: &LabSetup,
) -> Result<AbsorptionReport> {
    if !(ball_radius >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be nonnegative, got {ball_radius}"
        )));
    }
    if pullback_times.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one pullback time and one seed".to_string(),
        ));
    }
    setup.require_aligned(pullback_times)?;
    let t_last = *pullback_times.last().unwrap();
    let t_min = -(setup.history + t_last + setup.quad_horizon);
    let scan_cap = if ball_radius > 1.0 {
        (2.0 * (2.0 * ball_radius.ln()) / params.lambda() + 1.0).max(t_last)
    } else {
        t_last
    }
    .min(-t_min - setup.history);

    let per_seed: Vec<AbsorptionSeedReport> = seeds
        .par_iter()
        .map(|&seed| -> Result<AbsorptionSeedReport> {
            let base = WienerPath::sample(seed, t_min, 0.0, setup.noise_dt)?;
            let ou0 = OuPath::from_wiener(&base);
            let rad = absorbing_radius(&ou0, params, setup.quad_horizon, setup.noise_dt)?;
            let theoretical = theoretical_entry_time(&ou0, params, ball_radius, scan_cap);
            let samples = sample_ball(params.half_width(), ball_radius, cloud, seed);

            let mut rows = Vec::with_capacity(pullback_times.len());
            for &t in pullback_times {
                let shifted = base.shift(-t)?;
                let ou = Arc::new(OuPath::from_wiener(&shifted));
                let mut max_norm_sq = 0.0f64;
                for v0 in &samples {
                    let traj = integrate(
                        v0,
                        &ou,
                        params,
                        t,
                        &IntegrationOptions::with_tol(setup.tol),
                    )?;
                    max_norm_sq = max_norm_sq.max(traj.final_state().norm_l2_squared());
                }
                rows.push(AbsorptionRow {
                    t,
                    max_norm_sq,
                    all_inside: max_norm_sq <= rad.r_squared,
                });
            }
            let observed = (0..rows.len())
                .find(|&i| rows[i..].iter().all(|r| r.all_inside))
                .map(|i| rows[i].t);
            Ok(AbsorptionSeedReport {
                seed,
                r_squared: rad.r_squared,
                theoretical_entry_time: theoretical,
                observed_entry_time: observed,
                rows,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let all_absorbed = per_seed
        .iter()
        .all(|s| s.rows.last().map_or(false, |r| r.all_inside));
    Ok(AbsorptionReport {
        ball_radius,
        pullback_times: pullback_times.to_vec(),
        per_seed,
        all_absorbed_at_final_time: all_absorbed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusRow {
    pub t: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRadiusSeries {
    pub seed: u64,
    pub rows: Vec<RadiusRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaVerdict {
    pub gamma: f64,
    pub seed: u64,
    pub initial: f64,
    pub final_value: f64,
    pub ratio: f64,
    pub decreasing_trend: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusTemperednessReport {
    pub gamma_list: Vec<f64>,
    pub t_list: Vec<f64>,
    pub series: Vec<SeedRadiusSeries>,
    pub verdicts: Vec<GammaVerdict>,
    pub all_vanishing: bool,
}

/// Evaluates `e^{-gamma t} R^2(theta_{-t} omega)` over `t_list` for each
/// seed and `gamma`, with a decay verdict per pair.
pub fn temperedness_of_r(
    seeds: &[u64],
    gamma_list: &[f64],
    t_list: &[f64],
    params: &ModelParams,
    setup: &LabSetup,
) -> Result<RadiusTemperednessReport> {
    if gamma_list.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidParameter(
            "temperedness rates gamma must be positive".to_string(),
        ));
    }
    setup.require_aligned(t_list)?;
    let t_last = *t_list.last().unwrap();
    let t_min = -(setup.history + t_last + setup.quad_horizon);

    let series: Vec<SeedRadiusSeries> = seeds
        .par_iter()
        .map(|&seed| -> Result<SeedRadiusSeries> {
            let base = WienerPath::sample(seed, t_min, 0.0, setup.noise_dt)?;
            let mut rows = Vec::with_capacity(t_list.len());
            for &t in t_list {
                let shifted = base.shift(-t)?;
                let ou = OuPath::from_wiener(&shifted);
                let rad = absorbing_radius(&ou, params, setup.quad_horizon, setup.noise_dt)?;
                rows.push(RadiusRow {
                    t,
                    r_squared: rad.r_squared,
                });
            }
            Ok(SeedRadiusSeries { seed, rows })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut verdicts = Vec::new();
    for &gamma in gamma_list {
        for s in &series {
            let vals: Vec<f64> = s
                .rows
                .iter()
                .map(|r| (-gamma * r.t).exp() * r.r_squared)
                .collect();
            let initial = vals[0];
            let final_value = *vals.last().unwrap();
            let half = vals.len() / 2;
            let head_max = vals[..half.max(1)].iter().copied().fold(0.0, f64::max);
            let tail_max = vals[half..].iter().copied().fold(0.0, f64::max);
            verdicts.push(GammaVerdict {
                gamma,
                seed: s.seed,
                initial,
                final_value,
                ratio: final_value / initial,
                decreasing_trend: final_value <= initial && tail_max <= head_max,
            });
        }
    }
    let all_vanishing = verdicts.iter().all(|v| v.decreasing_trend && v.ratio < 1.0);
    Ok(RadiusTemperednessReport {
        gamma_list: gamma_list.to_vec(),
        t_list: t_list.to_vec(),
        series,
        verdicts,
        all_vanishing,
    })
}

/// Energy beyond the cut: `sum_{|i| > i0} v_i^2`.
pub fn tail_energy(v: &LatticeVector, i0: usize) -> Result<f64> {
    if i0 > v.half_width() {
        return Err(Error::InvalidParameter(format!(
            "tail cut {i0} exceeds half_width {}",
            v.half_width()
        )));
    }
    let cut = i0 as i64;
    Ok(v
        .sites()
        .filter(|&i| i.abs() > cut)
        .map(|i| v.get(i) * v.get(i))
        .sum())
}

/// The C1 cut-off ramp used in the tail bound diagnostics: 0 below 1, 1
/// above 2, a smoothstep in between, slope bounded by `CUTOFF_SLOPE_BOUND`.
pub fn cutoff(s: f64) -> f64 {
    let x = (s - 1.0).clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Bound on `|cutoff'|` (the actual maximum slope is 1.5).
pub const CUTOFF_SLOPE_BOUND: f64 = 2.0;

/// Components of the cut-off-weighted tail bound at one pullback time.
#[derive(Debug, Clone, Serialize)]
pub struct NullityBound {
    /// Cut-off scale; the bound controls tails beyond `2 * cut`.
    pub cut: usize,
    /// `e^{-lambda t + 2 alpha int_0^t z} R^2`.
    pub transient: f64,
    /// `(4 c0 c1 / cut)`-weighted integral of `||v(s)||^2`.
    pub l2_term: f64,
    /// `(4 c0 c1 / cut)`-weighted integral of the `p+1` power norm.
    pub power_term: f64,
    /// Tail data level `sum_{|i| >= cut} (2 a_i + g_i^2 / lambda)` times the
    /// weighted forcing integral.
    pub tail_forcing: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonResult {
    pub epsilon: f64,
    /// Smallest cut with all sample tails at or below `epsilon^2`.
    pub minimal_i0: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullityRow {
    pub t: f64,
    /// Radius squared of the absorbing ball the samples started from.
    pub start_radius_sq: f64,
    pub per_epsilon: Vec<EpsilonResult>,
    pub bound: NullityBound,
    /// Largest cut-off-weighted tail over the samples (between the sharp
    /// tail and the bound).
    pub rho_tail: f64,
    /// Largest sharp tail beyond `2 * cut` over the samples.
    pub sharp_tail_at_cut: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedNullity {
    pub seed: u64,
    pub rows: Vec<NullityRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    /// Minimal cut at the largest pullback time (worst seed).
    pub n_tilde: usize,
    /// First pullback time whose minimal cut already equals `n_tilde`.
    pub t_tilde: f64,
    /// Whether the minimal cut is non-increasing over the trailing half of
    /// the pullback grid.
    pub stabilized: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullityReport {
    pub epsilons: Vec<f64>,
    pub pullback_times: Vec<f64>,
    pub cut: usize,
    pub per_seed: Vec<SeedNullity>,
    pub summaries: Vec<EpsilonSummary>,
}

/// Pullback-evolves samples of the absorbing ball and reports, per pullback
/// time, the minimal cut achieving each tail target plus the cut-off-weighted
/// bound components.
pub fn nullity_experiment(
    epsilons: &[f64],
    pullback_times: &[f64],
    seeds: &[u64],
    params: &ModelParams,
    cloud: &CloudSpec,
    setup: &LabSetup,
    cut: usize,
) -> Result<NullityReport> {
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter(
            "tail targets must be positive".to_string(),
        ));
    }
    if cut == 0 || 2 * cut > params.half_width() {
        return Err(Error::InvalidParameter(format!(
            "cut must satisfy 1 <= cut <= half_width/2, got {cut} at half_width {}",
            params.half_width()
        )));
    }
    setup.require_aligned(pullback_times)?;
    let t_last = *pullback_times.last().unwrap();
    let t_min = -(setup.history + t_last + setup.quad_horizon);
    let n = params.half_width();
    let p = params.p();
    let c1 = p;
    let prefactor = 4.0 * CUTOFF_SLOPE_BOUND * c1 / cut as f64;
    let tail_level: f64 = (cut as i64..=n as i64)
        .flat_map(|i| [i, -i])
        .map(|i| 2.0 * params.a().get(i).abs() + params.g().get(i) * params.g().get(i) / params.lambda())
        .sum();

    let per_seed: Vec<SeedNullity> = seeds
        .par_iter()
        .map(|&seed| -> Result<SeedNullity> {
            let base = WienerPath::sample(seed, t_min, 0.0, setup.noise_dt)?;
            let mut rows = Vec::with_capacity(pullback_times.len());
            for &t in pullback_times {
                let shifted = base.shift(-t)?;
                let ou = Arc::new(OuPath::from_wiener(&shifted));
                let rad = absorbing_radius(&ou, params, setup.quad_horizon, setup.noise_dt)?;
                let samples =
                    sample_ball(n, rad.r_squared.sqrt(), cloud, seed);
                let n_cp = ((10.0 * t).ceil() as usize).clamp(40, 400);
                let opts =
                    IntegrationOptions::with_tol(setup.tol).uniform_checkpoints(n_cp, t);

                let mut times: Vec<f64> = Vec::new();
                let mut max_norm_sq: Vec<f64> = Vec::new();
                let mut max_pnorm: Vec<f64> = Vec::new();
                let mut finals = Vec::with_capacity(samples.len());
                for v0 in &samples {
                    let traj = integrate(v0, &ou, params, t, &opts)?;
                    if times.is_empty() {
                        times = traj.times().to_vec();
                        max_norm_sq = vec![0.0; times.len()];
                        max_pnorm = vec![0.0; times.len()];
                    }
                    for (j, v) in traj.states().iter().enumerate() {
                        max_norm_sq[j] = max_norm_sq[j].max(v.norm_l2_squared());
                        max_pnorm[j] = max_pnorm[j].max(v.norm_lp(p + 1.0).powf(p + 1.0));
                    }
                    finals.push(traj.final_state().clone());
                }

                let per_epsilon = epsilons
                    .iter()
                    .map(|&eps| {
                        let minimal_i0 = (0..=n)
                            .find(|&i0| {
                                finals
                                    .iter()
                                    .all(|v| tail_energy(v, i0).unwrap() <= eps * eps)
                            })
                            .expect("tail beyond the window is empty");
                        EpsilonResult {
                            epsilon: eps,
                            minimal_i0,
                        }
                    })
                    .collect();

                let lambda = params.lambda();
                let alpha = params.alpha();
                let k = times.len() - 1;
                let z: Vec<f64> = times.iter().map(|&s| ou.z_at(s)).collect();
                let l2_term = prefactor
                    * weighted_integral(&ou, lambda, alpha, &times, k, |j| max_norm_sq[j]);
                let power_term = prefactor
                    * weighted_integral(&ou, lambda, alpha, &times, k, |j| {
                        (alpha * (p - 1.0) * z[j]).exp() * max_pnorm[j]
                    });
                let tail_forcing = tail_level
                    * weighted_integral(&ou, lambda, alpha, &times, k, |j| {
                        (-2.0 * alpha * z[j]).exp()
                    });
                let transient =
                    (-lambda * t + 2.0 * alpha * ou.integral(0.0, t)).exp() * rad.r_squared;
                let bound = NullityBound {
                    cut,
                    transient,
                    l2_term,
                    power_term,
                    tail_forcing,
                    total: transient + l2_term + power_term + tail_forcing,
                };

                let rho_tail = finals
                    .iter()
                    .map(|v| {
                        v.sites()
                            .map(|i| cutoff(i.abs() as f64 / cut as f64) * v.get(i) * v.get(i))
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
                let sharp_tail_at_cut = finals
                    .iter()
                    .map(|v| tail_energy(v, (2 * cut).min(n)).unwrap())
                    .fold(0.0, f64::max);

                rows.push(NullityRow {
                    t,
                    start_radius_sq: rad.r_squared,
                    per_epsilon,
                    bound,
                    rho_tail,
                    sharp_tail_at_cut,
                });
            }
            Ok(SeedNullity { seed, rows })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::new();
    for (e_idx, &eps) in epsilons.iter().enumerate() {
        // worst minimal cut over seeds, per pullback time
        let worst: Vec<usize> = (0..pullback_times.len())
            .map(|r| {
                per_seed
                    .iter()
                    .map(|s| s.rows[r].per_epsilon[e_idx].minimal_i0)
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let n_tilde = *worst.last().unwrap();
        let t_tilde = pullback_times[worst
            .iter()
            .position(|&m| m <= n_tilde)
            .unwrap_or(worst.len() - 1)];
        let half = worst.len() / 2;
        let stabilized = worst[half..].windows(2).all(|w| w[1] <= w[0]);
        summaries.push(EpsilonSummary {
            epsilon: eps,
            n_tilde,
            t_tilde,
            stabilized,
        });
    }

    Ok(NullityReport {
        epsilons: epsilons.to_vec(),
        pullback_times: pullback_times.to_vec(),
        cut,
        per_seed,
        summaries,
    })
}

/// `sup_{x in xs} inf_{y in ys} ||x - y||` over finite samples.
pub fn hausdorff_semidistance(xs: &[LatticeVector], ys: &[LatticeVector]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidParameter(
            "semi-distance needs non-empty sets".to_string(),
        ));
    }
    let hw = xs[0].half_width();
    if xs.iter().chain(ys).any(|v| v.half_width() != hw) {
        return Err(Error::InvalidParameter(
            "semi-distance sets must share one window".to_string(),
        ));
    }
    let mut sup = 0.0f64;
    for x in xs {
        let mut inf = f64::INFINITY;
        for y in ys {
            inf = inf.min(x.l2_distance(y));
        }
        sup = sup.max(inf);
    }
    Ok(sup)
}

#[derive(Debug, Clone, Serialize)]
pub struct PullbackRow {
    pub t: f64,
    pub d_a_to_b: f64,
    pub d_b_to_a: f64,
    pub mutual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PullbackReport {
    pub seed: u64,
    pub rows: Vec<PullbackRow>,
    pub final_mutual: f64,
}

/// Pullback-evolves two sample sets along one path and tracks the mutual
/// Hausdorff semi-distance of their time-0 images as the start recedes.
pub fn pullback_attraction(
    set_a: &[LatticeVector],
    set_b: &[LatticeVector],
    pullback_times: &[f64],
    seed: u64,
    params: &ModelParams,
    setup: &LabSetup,
) -> Result<PullbackReport> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::InvalidParameter(
            "pullback sets must be non-empty".to_string(),
        ));
    }
    if set_a
        .iter()
        .chain(set_b)
        .any(|v| v.half_width() != params.half_width())
    {
        return Err(Error::InvalidParameter(
            "pullback sets must live on the model window".to_string(),
        ));
    }
    setup.require_aligned(pullback_times)?;
    let t_last = *pullback_times.last().unwrap();
    let base = WienerPath::sample(seed, -(setup.history + t_last), 0.0, setup.noise_dt)?;

    let mut rows = Vec::with_capacity(pullback_times.len());
    for &t in pullback_times {
        let shifted = base.shift(-t)?;
        let ou = Arc::new(OuPath::from_wiener(&shifted));
        let evolve = |set: &[LatticeVector]| -> Result<Vec<LatticeVector>> {
            set.par_iter()
                .map(|v0| {
                    integrate(v0, &ou, params, t, &IntegrationOptions::with_tol(setup.tol))
                        .map(|traj| traj.final_state().clone())
                })
                .collect()
        };
        let img_a = evolve(set_a)?;
        let img_b = evolve(set_b)?;
        let d_a_to_b = hausdorff_semidistance(&img_a, &img_b)?;
        let d_b_to_a = hausdorff_semidistance(&img_b, &img_a)?;
        rows.push(PullbackRow {
            t,
            d_a_to_b,
            d_b_to_a,
            mutual: d_a_to_b.max(d_b_to_a),
        });
    }
    let final_mutual = rows.last().unwrap().mutual;
    Ok(PullbackReport {
        seed,
        rows,
        final_mutual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SiteSequence;
    use crate::nonlinearity::PhiSpec;

    fn params_with(
        half_width: usize,
        lambda: f64,
        alpha: f64,
        p: f64,
        g: SiteSequence,
        a: SiteSequence,
    ) -> ModelParams {
        ModelParams::new(half_width, lambda, alpha, PhiSpec::power_law(p).unwrap(), g, a).unwrap()
    }

    fn quick_setup() -> LabSetup {
        LabSetup {
            noise_dt: 0.02,
            history: 30.0,
            tol: 1e-8,
            quad_horizon: 30.0,
        }
    }

    #[test]
    fn radius_is_one_without_data() {
        let params = params_with(4, 1.0, 0.5, 2.0, SiteSequence::zeros(4), SiteSequence::zeros(4));
        let w = WienerPath::sample(3, -60.0, 0.0, 0.02).unwrap();
        let ou = OuPath::from_wiener(&w);
        let rad = absorbing_radius(&ou, &params, 50.0, 0.02).unwrap();
        assert_eq!(rad.r_squared, 1.0);
        assert_eq!(rad.tail_estimate, 0.0);
    }

    #[test]
    fn radius_matches_closed_form_when_alpha_is_zero() {
        let g = SiteSequence::from_values(4, vec![0.3; 9]).unwrap();
        let a = SiteSequence::from_values(4, vec![0.01; 9]).unwrap();
        let params = params_with(4, 1.3, 0.0, 2.0, g, a);
        let w = WienerPath::sample(11, -60.0, 0.0, 0.01).unwrap();
        let ou = OuPath::from_wiener(&w);
        let rad = absorbing_radius(&ou, &params, 50.0, 0.01).unwrap();
        let expected = 1.0 + params.forcing_level() / params.lambda();
        assert!(
            (rad.r_squared - expected).abs() <= 1e-10,
            "{} vs {expected}",
            rad.r_squared
        );
        assert!(rad.tail_estimate < 1e-10);
        assert!(rad.r_squared >= 1.0);
    }

    #[test]
    fn radius_rejects_bad_quadrature_requests() {
        let params = params_with(2, 1.0, 0.0, 2.0, SiteSequence::zeros(2), SiteSequence::zeros(2));
        let w = WienerPath::sample(1, -10.0, 0.0, 0.1).unwrap();
        let ou = OuPath::from_wiener(&w);
        assert!(absorbing_radius(&ou, &params, 50.0, 0.1).is_err()); // beyond domain
        assert!(absorbing_radius(&ou, &params, 5.0, 0.3).is_err()); // not a multiple
    }

    #[test]
    fn entry_time_closed_form_when_alpha_is_zero() {
        let params = params_with(2, 2.0, 0.0, 2.0, SiteSequence::zeros(2), SiteSequence::zeros(2));
        let w = WienerPath::sample(7, -40.0, 0.0, 0.05).unwrap();
        let ou = OuPath::from_wiener(&w);
        let t = theoretical_entry_time(&ou, &params, 10.0, 30.0).unwrap();
        assert!((t - 2.0 * 10.0f64.ln() / 2.0).abs() < 1e-12);
        assert_eq!(theoretical_entry_time(&ou, &params, 0.5, 30.0), Some(0.0));
    }

    #[test]
    fn sampled_cloud_sits_on_the_sphere_and_is_deterministic() {
        let spec = CloudSpec::default_for(6);
        let a = sample_ball(6, 2.5, &spec, 42);
        let b = sample_ball(6, 2.5, &spec, 42);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values(), y.values());
        }
        assert_eq!(a[0].norm_l2(), 0.0);
        for v in &a[1..] {
            assert!((v.norm_l2() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_energy_closed_forms() {
        let v = LatticeVector::unit(8, 4);
        assert_eq!(tail_energy(&v, 3).unwrap(), 1.0);
        assert_eq!(tail_energy(&v, 4).unwrap(), 0.0);
        let w = LatticeVector::from_fn(20, |i| (2.0f64).powi(-(i.abs() as i32)));
        let expected = 2.0 * (4..=20).map(|i| 4.0f64.powi(-i)).sum::<f64>();
        assert!((tail_energy(&w, 3).unwrap() - expected).abs() < 1e-15);
        assert!(tail_energy(&v, 9).is_err());
    }

    #[test]
    fn cutoff_ramp_shape() {
        assert_eq!(cutoff(0.5), 0.0);
        assert_eq!(cutoff(1.0), 0.0);
        assert_eq!(cutoff(2.0), 1.0);
        assert_eq!(cutoff(3.0), 1.0);
        assert!((cutoff(1.5) - 0.5).abs() < 1e-15);
        // slope stays under the declared bound
        let mut max_slope = 0.0f64;
        for k in 0..1000 {
            let s = 1.0 + k as f64 / 1000.0;
            max_slope = max_slope.max((cutoff(s + 1e-6) - cutoff(s)) / 1e-6);
        }
        assert!(max_slope <= CUTOFF_SLOPE_BOUND);
    }

    #[test]
    fn semidistance_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<LatticeVector> = (0..5)
            .map(|_| LatticeVector::from_fn(8, |_| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let ys: Vec<LatticeVector> = (0..7)
            .map(|_| LatticeVector::from_fn(8, |_| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let mut brute = 0.0f64;
        for x in &xs {
            let mut inf = f64::INFINITY;
            for y in &ys {
                inf = inf.min(x.sub(y).norm_l2());
            }
            brute = brute.max(inf);
        }
        assert_eq!(hausdorff_semidistance(&xs, &ys).unwrap(), brute);
        assert_eq!(hausdorff_semidistance(&xs, &xs).unwrap(), 0.0);
        assert_eq!(
            hausdorff_semidistance(
                &[LatticeVector::unit(2, 0)],
                &[LatticeVector::unit(2, 0).scale(2.0)]
            )
            .unwrap(),
            1.0
        );
        assert!(hausdorff_semidistance(&xs, &[]).is_err());
    }

    #[test]
    fn deterministic_ball_is_absorbed_on_schedule() {
        let params = params_with(4, 1.0, 0.0, 2.0, SiteSequence::zeros(4), SiteSequence::zeros(4));
        let cloud = CloudSpec {
            axis_sites: vec![0, 2],
            random_directions: 2,
            include_zero: true,
        };
        let report = absorption_experiment(
            3.0,
            &[1.0, 2.3, 3.0],
            &[1, 2],
            &params,
            &cloud,
            &quick_setup(),
        )
        .unwrap();
        assert!(report.all_absorbed_at_final_time);
        for s in &report.per_seed {
            assert_eq!(s.r_squared, 1.0);
            // transient deadline for B = 3, lambda = 1
            let deadline = 2.0 * 3.0f64.ln();
            assert!((s.theoretical_entry_time.unwrap() - deadline).abs() < 1e-9);
            assert!(s.observed_entry_time.unwrap() <= 2.3 + 1e-12);
        }
    }

    #[test]
    fn stochastic_absorption_smoke() {
        let g = SiteSequence::from_values(4, vec![0.1; 9]).unwrap();
        let params = params_with(4, 1.0, 0.3, 2.0, g, SiteSequence::zeros(4));
        let cloud = CloudSpec {
            axis_sites: vec![0],
            random_directions: 1,
            include_zero: false,
        };
        let report =
            absorption_experiment(2.0, &[1.0, 4.0], &[9], &params, &cloud, &quick_setup()).unwrap();
        let seed_report = &report.per_seed[0];
        assert!(seed_report.r_squared > 1.0);
        assert_eq!(seed_report.rows.len(), 2);
        assert!(seed_report.rows.iter().all(|r| r.max_norm_sq.is_finite()));
    }

    #[test]
    fn radius_temperedness_decays_for_zero_alpha() {
        let g = SiteSequence::from_values(2, vec![0.5; 5]).unwrap();
        let params = params_with(2, 1.0, 0.0, 2.0, g, SiteSequence::zeros(2));
        let report = temperedness_of_r(
            &[3],
            &[0.2],
            &[1.0, 2.0, 4.0, 8.0],
            &params,
            &quick_setup(),
        )
        .unwrap();
        assert!(report.all_vanishing);
        // alpha = 0 makes R^2 constant across fibers, so decay is exact
        let v = &report.verdicts[0];
        assert!((v.ratio - (-0.2f64 * 7.0).exp()).abs() < 1e-9);
    }

    #[test]
    fn nullity_rows_are_internally_consistent() {
        let mut g_vals = vec![0.0; 17];
        for (j, val) in g_vals.iter_mut().enumerate() {
            let i = j as i64 - 8;
            if i.abs() <= 2 {
                *val = 0.4;
            }
        }
        let g = SiteSequence::from_values(8, g_vals).unwrap();
        let params = params_with(8, 1.0, 0.2, 2.0, g, SiteSequence::zeros(8));
        let cloud = CloudSpec {
            axis_sites: vec![0, 4],
            random_directions: 2,
            include_zero: true,
        };
        let report = nullity_experiment(
            &[1e-1, 1e-2],
            &[2.0, 4.0],
            &[6],
            &params,
            &cloud,
            &quick_setup(),
            4,
        )
        .unwrap();
        for s in &report.per_seed {
            for row in &s.rows {
                assert!(row.start_radius_sq >= 1.0);
                // sharp tail <= cut-off-weighted tail <= bound (plus quadrature slack)
                assert!(row.sharp_tail_at_cut <= row.rho_tail + 1e-15);
                let slack = 1e-6 + 1e-3 * row.bound.total;
                assert!(
                    row.rho_tail <= row.bound.total + slack,
                    "rho {} vs bound {}",
                    row.rho_tail,
                    row.bound.total
                );
                // tighter targets need wider cuts
                assert!(row.per_epsilon[0].minimal_i0 <= row.per_epsilon[1].minimal_i0);
            }
        }
        assert_eq!(report.summaries.len(), 2);
    }

    #[test]
    fn nullity_rejects_oversized_cut() {
        let params = params_with(4, 1.0, 0.0, 2.0, SiteSequence::zeros(4), SiteSequence::zeros(4));
        let cloud = CloudSpec::default_for(4);
        assert!(nullity_experiment(
            &[0.1],
            &[1.0],
            &[1],
            &params,
            &cloud,
            &quick_setup(),
            3
        )
        .is_err());
    }

    #[test]
    fn pullback_images_of_identical_sets_coincide() {
        let params = params_with(3, 1.0, 0.4, 2.0, SiteSequence::zeros(3), SiteSequence::zeros(3));
        let set: Vec<LatticeVector> = vec![LatticeVector::unit(3, 0), LatticeVector::unit(3, 1)];
        let report =
            pullback_attraction(&set, &set, &[0.5, 1.0], 2, &params, &quick_setup()).unwrap();
        for row in &report.rows {
            assert_eq!(row.mutual, 0.0);
        }
    }

    #[test]
    fn pullback_singletons_report_their_distance() {
        let g = SiteSequence::from_values(3, vec![0.2; 7]).unwrap();
        let params = params_with(3, 1.0, 0.3, 2.0, g, SiteSequence::zeros(3));
        let a = vec![LatticeVector::unit(3, 0).scale(2.0)];
        let b = vec![LatticeVector::unit(3, 0).scale(-2.0)];
        let report = pullback_attraction(&a, &b, &[1.0, 3.0], 4, &params, &quick_setup()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[0].mutual > 0.0);
        // contraction: later pullback times bring the images closer
        assert!(report.final_mutual < report.rows[0].mutual);
    }
}
