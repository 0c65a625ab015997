//! Numeric certification of the two envelope conditions on the power
//! nonlinearity `phi(u) = u |u|^{p-1}`: the derivative growth envelope and
//! the strong monotonicity bound. Shows the suggested constants passing for
//! several exponents, then a deliberately broken constant being caught.

use porous_lattice::nonlinearity::{
    suggested_constants, verify_growth, verify_monotonicity, VerifyGrid,
};
use porous_lattice::PhiSpec;

fn main() {
    let grid = VerifyGrid::default();

    for p in [1.2, 1.5, 2.0, 3.0, 5.0] {
        let phi = PhiSpec::power_law(p).unwrap();
        let c = suggested_constants(p);
        let growth = verify_growth(&phi, c.c1, c.c2, &grid);
        let mono = verify_monotonicity(&phi, c.k, 0.0, &grid);
        println!(
            "p = {p:<3}  c1 = {:<4} c2 = {:<20} k = {:<20} growth {}  monotonicity {}",
            c.c1,
            c.c2,
            c.k,
            verdict(growth.pass),
            verdict(mono.pass),
        );
    }

    // k = 1 overstates the monotonicity coefficient at p = 2 (the true
    // worst case sits at antipodal pairs, where only k = 1/2 survives)
    let phi = PhiSpec::power_law(2.0).unwrap();
    let broken = verify_monotonicity(&phi, 1.0, 0.0, &grid);
    println!("\nbroken constant k = 1 at p = 2:");
    println!("{broken}");
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
