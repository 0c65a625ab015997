//! The pathwise random ODE obtained from the stochastic lattice equation by
//! Ornstein-Uhlenbeck conjugation, and the machinery to integrate it.
//!
//! In the conjugated variable `v = e^{-alpha z} u` the system reads
//!
//! ```text
//! dv/dt = -e^{-alpha z} A(phi(e^{alpha z} v))
//!         + (alpha z - lambda) v
//!         - lambda e^{alpha (p-1) z} |v|^{p-1} v
//!         + e^{-alpha z} g
//! ```
//!
//! with `z = z(theta_t omega)` read from an [`OuPath`]. The diffusion stencil
//! is applied on the window with zero-padded neighbors, which is exactly the
//! truncated system solved at sites `|i| <= N` with homogeneous boundary.
//! Integration uses the adaptive 5(4) pair from [`crate::solver`], clipping
//! steps at noise-grid nodes (so the interpolated `z` stays smooth within a
//! step) and at requested checkpoint times.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, SiteSequence};
use crate::noise::{OuPath, WienerPath};
use crate::nonlinearity::PhiSpec;
use crate::solver::{integrate_adaptive, StepStats, StepperOptions};

/// Model constants and per-site data; validated at construction.
#[derive(Debug, Clone)]
pub struct ModelParams {
    half_width: usize,
    lambda: f64,
    alpha: f64,
    phi: PhiSpec,
    g: SiteSequence,
    a: SiteSequence,
}

impl ModelParams {
    /// Builds and validates a parameter set. Requires `lambda > 0`, finite
    /// `alpha`, `g` and `a` on the same window as the state, and `a >= 0`
    /// sitewise.
    pub fn new(
        half_width: usize,
        lambda: f64,
        alpha: f64,
        phi: PhiSpec,
        g: SiteSequence,
        a: SiteSequence,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "damping must satisfy lambda > 0, got {lambda}"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".to_string()));
        }
        if g.half_width() != half_width || a.half_width() != half_width {
            return Err(Error::InvalidParameter(format!(
                "g and a must live on half_width {half_width} (got {} and {})",
                g.half_width(),
                a.half_width()
            )));
        }
        if a.values().iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter(
                "monotonicity offsets a must be nonnegative".to_string(),
            ));
        }
        Ok(Self {
            half_width,
            lambda,
            alpha,
            phi,
            g,
            a,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Number of lattice sites, `2N + 1`.
    pub fn dimension(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phi(&self) -> &PhiSpec {
        &self.phi
    }

    pub fn p(&self) -> f64 {
        self.phi.exponent()
    }

    pub fn g(&self) -> &SiteSequence {
        &self.g
    }

    pub fn a(&self) -> &SiteSequence {
        &self.a
    }

    /// The constant `8 ||g||^2 / lambda + 2 ||a||_1` driving the forcing
    /// level of the energy majorant and the absorbing radius.
    pub fn forcing_level(&self) -> f64 {
        8.0 * self.g.norm_l2_squared() / self.lambda + 2.0 * self.a.norm_l1()
    }
}

/// Integration settings: tolerance and where to record states.
#[derive(Debug, Clone)]
pub struct IntegrationOptions {
    /// Local error target (`atol = rtol`).
    pub tol: f64,
    /// Times in `(0, T]` to land on and record; `0` and `T` are always kept.
    pub checkpoints: Vec<f64>,
    /// Blow-up guard on the sup norm of the state.
    pub sup_limit: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            checkpoints: Vec::new(),
            sup_limit: 1e8,
        }
    }
}

impl IntegrationOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Default::default()
        }
    }

    /// Adds `count` equally spaced checkpoints over `(0, T]`.
    pub fn uniform_checkpoints(mut self, count: usize, t_end: f64) -> Self {
        self.checkpoints = (1..=count)
            .map(|k| {
                if k == count {
                    t_end
                } else {
                    t_end * k as f64 / count as f64
                }
            })
            .collect();
        self
    }
}

/// States recorded along one integration, with the noise path they used.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<LatticeVector>,
    ou: Arc<OuPath>,
    stats: StepStats,
    tol: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[LatticeVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &LatticeVector {
        &self.states[k]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a trajectory has at least two records")
    }

    pub fn final_state(&self) -> &LatticeVector {
        self.states.last().expect("a trajectory has at least two records")
    }

    pub fn ou(&self) -> &Arc<OuPath> {
        &self.ou
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Evaluates the conjugated right-hand side at time `t`.
pub fn rhs(t: f64, v: &LatticeVector, params: &ModelParams, ou: &OuPath) -> Result<LatticeVector> {
    let mut out = vec![0.0; v.len()];
    let mut scratch = vec![0.0; v.len()];
    rhs_into(t, v.values(), &mut out, &mut scratch, params, ou)?;
    LatticeVector::from_values(v.half_width(), out)
}

/// Slice-level right-hand side; `phi_buf` holds `phi(e^{alpha z} v)`.
fn rhs_into(
    t: f64,
    v: &[f64],
    out: &mut [f64],
    phi_buf: &mut [f64],
    params: &ModelParams,
    ou: &OuPath,
) -> Result<()> {
    let z = ou.z_at(t);
    let az = params.alpha * z;
    if az.abs() > 500.0 {
        return Err(Error::BlowUp {
            t,
            what: format!("conjugation exponent alpha*z = {az:.3e} overflows"),
        });
    }
    let e_az = az.exp();
    let e_maz = (-az).exp();
    let p = params.p();
    let power_weight = params.lambda * (params.alpha * (p - 1.0) * z).exp();
    let linear = az - params.lambda;
    let phi = &params.phi;
    let g = params.g.values();

    let n = v.len();
    for i in 0..n {
        phi_buf[i] = phi.eval(e_az * v[i]);
    }
    for i in 0..n {
        let left = if i > 0 { phi_buf[i - 1] } else { 0.0 };
        let right = if i + 1 < n { phi_buf[i + 1] } else { 0.0 };
        let lap = -left + 2.0 * phi_buf[i] - right;
        let vi = v[i];
        out[i] = -e_maz * lap + linear * vi - power_weight * vi.abs().powf(p - 1.0) * vi
            + e_maz * g[i];
    }
    if !out.iter().all(|x| x.is_finite()) {
        return Err(Error::BlowUp {
            t,
            what: "non-finite right-hand side".to_string(),
        });
    }
    Ok(())
}

fn prepared_checkpoints(checkpoints: &[f64], t_end: f64, ou: &OuPath) -> Result<Vec<f64>> {
    for &t in checkpoints {
        if !(0.0..=t_end).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "checkpoint {t} outside [0, {t_end}]"
            )));
        }
    }
    // snap checkpoints sitting within float jitter of a noise-grid node onto
    // the node, so a landing never demands a sub-representable step
    let dt = ou.dt();
    let snap = |t: f64| {
        let node = ou.t_min() + ((t - ou.t_min()) / dt).round() * dt;
        if (node - t).abs() <= 1e-9 * t.abs().max(1.0) {
            node
        } else {
            t
        }
    };
    let mut cps: Vec<f64> = checkpoints
        .iter()
        .map(|&t| snap(t))
        .filter(|&t| t > 0.0 && t < t_end - 1e-9 * t_end.abs().max(1.0))
        .collect();
    cps.sort_by(|a, b| a.partial_cmp(b).expect("finite checkpoints"));
    cps.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    cps.push(t_end);
    Ok(cps)
}

/// Integrates the conjugated system from `v0` over `[0, T]`, recording the
/// state at every requested checkpoint (plus 0 and `T`).
pub fn integrate(
    v0: &LatticeVector,
    ou: &Arc<OuPath>,
    params: &ModelParams,
    t_end: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    if v0.half_width() != params.half_width() {
        return Err(Error::InvalidParameter(format!(
            "initial state half_width {} does not match model half_width {}",
            v0.half_width(),
            params.half_width()
        )));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "integration span must be positive, got {t_end}"
        )));
    }
    if ou.t_min() > 0.0 || ou.t_max() < t_end {
        return Err(Error::OutOfDomain {
            t: t_end,
            t_min: ou.t_min(),
            t_max: ou.t_max(),
        });
    }
    let cps = prepared_checkpoints(&opts.checkpoints, t_end, ou)?;

    let mut times = Vec::with_capacity(cps.len() + 1);
    let mut states = Vec::with_capacity(cps.len() + 1);
    times.push(0.0);
    states.push(v0.clone());

    let n = params.dimension();
    let mut phi_buf = vec![0.0; n];
    let stepper = StepperOptions {
        tol: opts.tol,
        max_step: None,
        initial_step: None,
        sup_limit: opts.sup_limit,
    };

    let cp_idx = std::cell::Cell::new(0usize);
    let half_width = params.half_width();
    let (_, stats) = integrate_adaptive(
        |t, y, dy| rhs_into(t, y, dy, &mut phi_buf, params, ou),
        0.0,
        v0.values(),
        t_end,
        &stepper,
        |t| {
            let mut k = cp_idx.get();
            while k < cps.len() && cps[k] <= t {
                k += 1;
            }
            let next_cp = cps.get(k).copied().unwrap_or(t_end);
            match ou.next_grid_time_after(t) {
                Some(node) => next_cp.min(node),
                None => next_cp,
            }
        },
        |t, y| {
            let mut k = cp_idx.get();
            while k < cps.len() && cps[k] <= t {
                if cps[k] == t {
                    times.push(t);
                    states.push(
                        LatticeVector::from_values(half_width, y.to_vec())
                            .expect("state length is fixed"),
                    );
                }
                k += 1;
            }
            cp_idx.set(k);
        },
    )?;
    debug_assert_eq!(times.len(), cps.len() + 1, "every checkpoint is landed on");

    Ok(Trajectory {
        times,
        states,
        ou: Arc::clone(ou),
        stats,
        tol: opts.tol,
    })
}

/// The solution cocycle at time `t`: both the conjugated state `v` and the
/// original variable `u = e^{alpha z(theta_t omega)} v`.
#[derive(Debug, Clone)]
pub struct CocycleSolution {
    pub v: LatticeVector,
    pub u: LatticeVector,
    /// `z(theta_t omega)` used for the conjugation at the endpoint.
    pub z_end: f64,
}

/// Runs the cocycle `phi(t, omega, v0)` by building the OU path of `omega`
/// and integrating the conjugated system over `[0, t]`.
pub fn cocycle(
    t: f64,
    omega: &WienerPath,
    v0: &LatticeVector,
    params: &ModelParams,
    opts: &IntegrationOptions,
) -> Result<CocycleSolution> {
    let ou = Arc::new(OuPath::from_wiener(omega));
    let traj = integrate(v0, &ou, params, t, opts)?;
    let v = traj.final_state().clone();
    let z_end = ou.z_at(t);
    let u = v.scale((params.alpha() * z_end).exp());
    Ok(CocycleSolution { v, u, z_end })
}

/// Outcome of the two-trajectory continuous-dependence check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ContinuousDependenceReport {
    pub initial_gap_sq: f64,
    /// Largest `||X(t) - Y(t)||^2` over the comparison checkpoints.
    pub sup_gap_sq: f64,
    /// A-posteriori local Lipschitz bound of the nonlinearity on the ball
    /// both trajectories stayed in.
    pub lipschitz: f64,
    pub max_abs_z: f64,
    /// Growth exponent `rho = 2 (L + |alpha| max|z|)`.
    pub rho: f64,
    /// `e^{rho T} ||u0 - v0||^2`.
    pub bound: f64,
    pub pass: bool,
}

/// Integrates two initial states along the same path and checks the
/// a-posteriori continuous-dependence bound
/// `sup_t ||X - Y||^2 <= e^{rho T} ||u0 - v0||^2`.
///
/// `rho = 2 (L + |alpha| max |z|)` with `L` the Lipschitz bound of the
/// right-hand side nonlinearity on the sup-norm ball the two trajectories
/// visited (sampled at the comparison checkpoints).
pub fn check_continuous_dependence(
    u0: &LatticeVector,
    v0: &LatticeVector,
    omega: &WienerPath,
    params: &ModelParams,
    t_end: f64,
    opts: &IntegrationOptions,
) -> Result<ContinuousDependenceReport> {
    let mut opts = opts.clone();
    if opts.checkpoints.is_empty() {
        opts = opts.uniform_checkpoints(100, t_end);
    }
    let ou = Arc::new(OuPath::from_wiener(omega));
    let ta = integrate(u0, &ou, params, t_end, &opts)?;
    let tb = integrate(v0, &ou, params, t_end, &opts)?;

    let initial_gap_sq = u0.sub(v0).norm_l2_squared();
    let mut sup_gap_sq = 0.0f64;
    let mut radius = 0.0f64;
    for (x, y) in ta.states().iter().zip(tb.states()) {
        sup_gap_sq = sup_gap_sq.max(x.sub(y).norm_l2_squared());
        radius = radius.max(x.sup_norm()).max(y.sup_norm());
    }

    let mut z_lo = f64::INFINITY;
    let mut z_hi = f64::NEG_INFINITY;
    for &t in ta.times() {
        let z = ou.z_at(t);
        z_lo = z_lo.min(z);
        z_hi = z_hi.max(z);
    }
    let p = params.p();
    let ap = params.alpha() * (p - 1.0);
    let conj_factor = (ap * z_hi).exp().max((ap * z_lo).exp());
    let lipschitz = (4.0 + params.lambda()) * p * radius.powf(p - 1.0) * conj_factor;
    let max_abs_z = z_hi.abs().max(z_lo.abs());
    let rho = 2.0 * (lipschitz + params.alpha().abs() * max_abs_z);
    let bound = (rho * t_end).exp() * initial_gap_sq;

    Ok(ContinuousDependenceReport {
        initial_gap_sq,
        sup_gap_sq,
        lipschitz,
        max_abs_z,
        rho,
        bound,
        pass: sup_gap_sq <= bound * (1.0 + 1e-9) + 1e-300,
    })
}
