//! Numerical laboratory for a stochastic porous-medium equation on the
//! integer lattice with multiplicative white noise.
//!
//! The state is a square-summable sequence `u = (u_i)` over sites
//! `i = -N..=N` (zero outside the window). The equation couples a degenerate
//! diffusion `-A(phi(u))` built from the discrete Laplacian `A` and a power
//! nonlinearity `phi(u) = u|u|^{p-1}`, a linear + power damping of strength
//! `lambda`, a constant forcing `g`, and a scalar Stratonovich noise term
//! `alpha * u . dw/dt`. Conjugating with the stationary Ornstein-Uhlenbeck
//! process `z` turns the stochastic equation into a pathwise random ODE in
//! `v = e^{-alpha z} u`, which is what the integrator solves.
//!
//! Modules, bottom up:
//!
//! * [`lattice`]: vectors indexed by lattice sites, the difference operators
//!   `B`, `B*`, `A = B o B*`, and the norms used everywhere else.
//! * [`nonlinearity`]: the power law `phi` together with numeric verifiers
//!   for the growth and monotonicity envelopes it must satisfy.
//! * [`noise`]: seeded two-sided Wiener paths, the measure-preserving shift,
//!   the conjugating Ornstein-Uhlenbeck path, and temperedness diagnostics.
//! * [`solver`]: an adaptive embedded Runge-Kutta 5(4) pair with exact
//!   landing on requested output times.
//! * [`dynamics`]: the right-hand side, trajectory integration, the solution
//!   cocycle, and continuous-dependence checks.
//! * [`energy`]: pathwise energy balance reports (dissipation integrals and
//!   the Gronwall majorant).
//! * [`attractor`]: absorbing radius, absorption/tail/pullback experiments,
//!   and the Hausdorff semi-distance.
//! * [`config`], [`output`], [`cli`]: JSON experiment configs, CSV/JSON
//!   emission with reproducibility manifests, and the subcommand drivers
//!   used by the `porous-lattice` binary.
//!
//! Everything is deterministic given a seed: noise paths come from counter
//! mode ChaCha streams, experiments parallelize over seeds and samples with
//! order-preserving collection, and repeated runs write byte-identical data
//! files.

pub mod attractor;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod lattice;
pub mod noise;
pub mod nonlinearity;
pub mod output;
pub mod solver;

pub use error::{Error, Result};
pub use lattice::{LatticeVector, SiteSequence};
pub use noise::{OuPath, WienerPath};
pub use nonlinearity::{ConditionReport, PhiSpec};

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code when a verified property is violated.
pub const EXIT_VIOLATION: i32 = 1;
/// Exit code for unusable configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failure (blow-up, step-size underflow).
pub const EXIT_NUMERICAL: i32 = 3;
