//! The discrete difference operators and the identities the energy
//! arguments lean on: `A = B o B*`, adjointness of `B` and `B*` on the
//! zero-padded window, and the summation-by-parts identity
//! `(A u, u) = ||B u||^2 <= 4 ||u||^2`.

use porous_lattice::lattice::{apply_a, apply_b, apply_bstar};
use porous_lattice::LatticeVector;

fn main() {
    let n = 6;
    let u = LatticeVector::from_fn(n, |i| if i.abs() <= 2 { 1.0 / (1 + i * i) as f64 } else { 0.0 });

    let bu = apply_b(&u);
    let bstar_u = apply_bstar(&u);
    let au = apply_a(&u);

    println!("u      (sites -3..=3): {:?}", window(&u, 3));
    println!("B u    (sites -3..=3): {:?}", window(&bu, 3));
    println!("B* u   (sites -3..=3): {:?}", window(&bstar_u, 3));
    println!("A u    (sites -3..=3): {:?}", window(&au, 3));

    // A = B o B*: apply B to the widened output of B*
    let b_bstar = apply_b(&bstar_u);
    let factor_gap: f64 = au
        .sites()
        .map(|i| (au.get(i) - b_bstar.get(i)).abs())
        .fold(0.0, f64::max);
    println!("\nsup |A u - B(B* u)|        = {factor_gap:e}");

    // adjointness: (B u, w) = (u, B* w)
    let w = LatticeVector::from_fn(n + 1, |i| (0.3 * i as f64).sin());
    let lhs: f64 = bu.sites().map(|i| bu.get(i) * w.get(i)).sum();
    let rhs: f64 = u.sites().map(|i| u.get(i) * apply_bstar(&w).get(i)).sum();
    println!("(B u, w) - (u, B* w)       = {:e}", (lhs - rhs).abs());

    // energy identity and the operator norm bound
    let quad: f64 = u.sites().map(|i| au.get(i) * u.get(i)).sum();
    let grad = bu.norm_l2_squared();
    println!("(A u, u) - ||B u||^2       = {:e}", (quad - grad).abs());
    println!(
        "(A u, u) = {:.6} <= 4 ||u||^2 = {:.6}",
        quad,
        4.0 * u.norm_l2_squared()
    );
}

fn window(v: &LatticeVector, r: i64) -> Vec<f64> {
    (-r..=r).map(|i| v.get(i)).collect()
}
