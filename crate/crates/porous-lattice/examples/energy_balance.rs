//! Pathwise energy audit of one stochastic trajectory: the running norm
//! plus the two weighted dissipation integrals must stay below the decaying
//! transient plus the accumulated forcing, and the whole trajectory must
//! respect the crude `||v_0||^2 e^xi + eta` cap.

use std::sync::Arc;

use porous_lattice::dynamics::{integrate, IntegrationOptions, ModelParams};
use porous_lattice::energy::energy_report;
use porous_lattice::{LatticeVector, OuPath, PhiSpec, SiteSequence, WienerPath};

fn main() -> porous_lattice::Result<()> {
    let n = 8;
    let params = ModelParams::new(
        n,
        1.2,
        0.4,
        PhiSpec::power_law(3.0)?,
        SiteSequence::from_fn(n, |i| 0.3 / (1 + i.abs()) as f64),
        SiteSequence::from_fn(n, |i| if i == 0 { 0.05 } else { 0.0 }),
    )?;

    let w = WienerPath::sample(11, -40.0, 3.0, 0.02)?;
    let ou = Arc::new(OuPath::from_wiener(&w));
    let v0 = LatticeVector::from_fn(n, |i| if i.abs() <= 1 { 1.0 } else { 0.0 });
    let opts = IntegrationOptions::with_tol(1e-8).uniform_checkpoints(150, 3.0);
    let traj = integrate(&v0, &ou, &params, 3.0, &opts)?;

    let report = energy_report(&traj, &params, 1e-6);
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "t", "|v|^2", "l2 dissip", "pow dissip", "majorant", "residual"
    );
    for k in (0..report.times.len()).step_by(15) {
        println!(
            "{:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>+12.2e}",
            report.times[k],
            report.norm_sq[k],
            report.dissipation_l2[k],
            report.dissipation_power[k],
            report.transient[k] + report.forcing[k],
            report.residual[k],
        );
    }
    println!("\nmin residual        {:+.3e}  (slack {:.0e})", report.min_residual, report.tol);
    println!("eta (forcing cap)   {:.6}", report.eta);
    println!("xi  (noise dose)    {:.6}", report.xi);
    println!(
        "crude bound         sup |v|^2 = {:.6} <= |v0|^2 e^xi + eta = {:.6}",
        report.sup_norm_sq,
        report.norm_sq[0] * report.xi.exp() + report.eta
    );
    println!("verdict             {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(())
}
