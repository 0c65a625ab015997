//! The power nonlinearity and numeric verification of the structural
//! conditions the model needs from it.
//!
//! The diffusion component is `phi(u) = u |u|^{p-1}` with `p > 1`. Two
//! envelope conditions drive every estimate downstream:
//!
//! * growth: `((p+1)^2 / 4) c2 |u|^{p-1} <= phi'(u) <= c1 (1 + |u|^{p-1})`,
//! * monotonicity: `(phi(u) - phi(v)) (u - v) >= k |u - v|^{p+1} - a`
//!
//! for constants `c1, c2, k > 0` and a nonnegative offset `a`. The verifiers
//! scan deterministic grids (plus seeded random pairs for the second
//! condition) and report margins and witness points. Margins carry a tiny
//! relative slack (default `1e-12`, recorded in the report) so that the
//! suggested constants, which achieve equality at certain points, do not fail
//! on floating-point rounding; genuine violations sit orders of magnitude
//! outside the slack.

use std::collections::BTreeMap;
use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The odd power law `phi(u) = u |u|^{p-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    p: f64,
}

impl PhiSpec {
    /// Power law with exponent `p`; requires `p > 1`.
    pub fn power_law(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power law exponent must satisfy p > 1, got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// `phi(u) = u |u|^{p-1}`.
    pub fn eval(&self, u: f64) -> f64 {
        u * u.abs().powf(self.p - 1.0)
    }

    /// `phi'(u) = p |u|^{p-1}`.
    pub fn prime(&self, u: f64) -> f64 {
        self.p * u.abs().powf(self.p - 1.0)
    }
}

/// Constants that satisfy both conditions for the power law, with equality
/// in the growth lower bound and in the monotonicity bound at `v = -u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuggestedConstants {
    pub c1: f64,
    pub c2: f64,
    pub k: f64,
}

/// `c1 = p`, `c2 = 4p / (p+1)^2`, `k = 2^{1-p}`.
pub fn suggested_constants(p: f64) -> SuggestedConstants {
    SuggestedConstants {
        c1: p,
        c2: 4.0 * p / ((p + 1.0) * (p + 1.0)),
        k: 2.0f64.powf(1.0 - p),
    }
}

/// Sampling plan for the verifiers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyGrid {
    /// Smallest nonzero magnitude of the log-spaced axis grid.
    pub u_min: f64,
    /// Largest magnitude of the axis grid.
    pub u_max: f64,
    /// Number of log-spaced magnitudes per sign (0 is always included).
    pub samples_per_sign: usize,
    /// Seeded random pairs added to the monotonicity scan.
    pub random_pairs: usize,
    pub seed: u64,
    /// Relative floating-point slack added to every margin.
    pub slack: f64,
}

impl Default for VerifyGrid {
    fn default() -> Self {
        Self {
            u_min: 1e-6,
            u_max: 1e2,
            samples_per_sign: 400,
            random_pairs: 2000,
            seed: 0,
            slack: 1e-12,
        }
    }
}

impl VerifyGrid {
    /// `0` plus log-spaced points of both signs between `u_min` and `u_max`.
    fn axis(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        let n = self.samples_per_sign.max(2);
        let log_lo = self.u_min.ln();
        let log_hi = self.u_max.ln();
        for j in 0..n {
            let t = j as f64 / (n - 1) as f64;
            let mag = (log_lo + t * (log_hi - log_lo)).exp();
            pts.push(mag);
            pts.push(-mag);
        }
        pts
    }

    /// Coarser axis for pair scans, to keep the quadratic blow-up in check.
    fn pair_axis(&self) -> Vec<f64> {
        let coarse = VerifyGrid {
            samples_per_sign: self.samples_per_sign.min(40),
            ..self.clone()
        };
        coarse.axis()
    }
}

/// A sample point where a condition margin was negative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub u: f64,
    /// Second argument for pair conditions; absent for the growth scan.
    pub v: Option<f64>,
    /// Slack-shifted margin (negative means violated).
    pub margin: f64,
}

/// Outcome of scanning one condition over a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `"growth"` or `"monotonicity"`.
    pub condition: String,
    /// Constants the scan used (includes the exponent).
    pub constants: BTreeMap<String, f64>,
    pub samples_tested: usize,
    /// Smallest slack-shifted margin over the scan; the condition holds on
    /// the grid exactly when this is nonnegative.
    pub worst_margin: f64,
    /// Relative slack folded into each margin.
    pub slack: f64,
    /// Total number of violating samples.
    pub violation_count: usize,
    /// Up to [`ConditionReport::MAX_WITNESSES`] violating samples.
    pub violations: Vec<Witness>,
    pub pass: bool,
}

impl ConditionReport {
    pub const MAX_WITNESSES: usize = 20;

    fn new(condition: &str, constants: BTreeMap<String, f64>, slack: f64) -> Self {
        Self {
            condition: condition.to_string(),
            constants,
            samples_tested: 0,
            worst_margin: f64::INFINITY,
            slack,
            violation_count: 0,
            violations: Vec::new(),
            pass: true,
        }
    }

    fn record(&mut self, u: f64, v: Option<f64>, margin: f64) {
        self.samples_tested += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if margin < 0.0 {
            self.violation_count += 1;
            if self.violations.len() < Self::MAX_WITNESSES {
                self.violations.push(Witness { u, v, margin });
            }
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.violation_count == 0;
        self
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "condition      {}", self.condition)?;
        for (name, value) in &self.constants {
            writeln!(f, "  {name:<12} {value}")?;
        }
        writeln!(f, "samples        {}", self.samples_tested)?;
        writeln!(f, "worst margin   {:.6e}", self.worst_margin)?;
        writeln!(f, "violations     {}", self.violation_count)?;
        for w in &self.violations {
            match w.v {
                Some(v) => writeln!(f, "  at (u, v) = ({}, {}): margin {:.6e}", w.u, v, w.margin)?,
                None => writeln!(f, "  at u = {}: margin {:.6e}", w.u, w.margin)?,
            }
        }
        write!(f, "verdict        {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

/// Scans the growth envelope
/// `((p+1)^2/4) c2 |u|^{p-1} <= phi'(u) <= c1 (1 + |u|^{p-1})`
/// over the grid axis and reports the worst margin and any violations.
pub fn verify_growth(phi: &PhiSpec, c1: f64, c2: f64, grid: &VerifyGrid) -> ConditionReport {
    let p = phi.exponent();
    let mut constants = BTreeMap::new();
    constants.insert("p".to_string(), p);
    constants.insert("c1".to_string(), c1);
    constants.insert("c2".to_string(), c2);
    let mut report = ConditionReport::new("growth", constants, grid.slack);

    let low_coeff = (p + 1.0) * (p + 1.0) / 4.0 * c2;
    for &u in &grid.axis() {
        let pow = u.abs().powf(p - 1.0);
        let deriv = phi.prime(u);
        let lower = low_coeff * pow;
        let upper = c1 * (1.0 + pow);
        let scale = 1.0f64.max(deriv).max(lower).max(upper);
        let lower_margin = deriv - lower + grid.slack * scale;
        let upper_margin = upper - deriv + grid.slack * scale;
        report.record(u, None, lower_margin.min(upper_margin));
    }
    report.finish()
}

/// Scans the monotonicity bound
/// `(phi(u) - phi(v)) (u - v) >= k |u - v|^{p+1} - a_bound`
/// over all grid pairs plus seeded random pairs.
pub fn verify_monotonicity(
    phi: &PhiSpec,
    k: f64,
    a_bound: f64,
    grid: &VerifyGrid,
) -> ConditionReport {
    let p = phi.exponent();
    let mut constants = BTreeMap::new();
    constants.insert("p".to_string(), p);
    constants.insert("k".to_string(), k);
    constants.insert("a_bound".to_string(), a_bound);
    let mut report = ConditionReport::new("monotonicity", constants, grid.slack);

    let check = |report: &mut ConditionReport, u: f64, v: f64| {
        let lhs = (phi.eval(u) - phi.eval(v)) * (u - v);
        let rhs = k * (u - v).abs().powf(p + 1.0) - a_bound;
        let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
        report.record(u, Some(v), lhs - rhs + grid.slack * scale);
    };

    let axis = grid.pair_axis();
    for &u in &axis {
        for &v in &axis {
            check(&mut report, u, v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    for _ in 0..grid.random_pairs {
        let u = rng.random_range(-grid.u_max..grid.u_max);
        let v = rng.random_range(-grid.u_max..grid.u_max);
        check(&mut report, u, v);
    }
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_law_rejects_bad_exponents() {
        assert!(PhiSpec::power_law(1.0).is_err());
        assert!(PhiSpec::power_law(0.5).is_err());
        assert!(PhiSpec::power_law(f64::NAN).is_err());
        assert!(PhiSpec::power_law(2.0).is_ok());
    }

    #[test]
    fn eval_matches_closed_forms() {
        let phi = PhiSpec::power_law(2.0).unwrap();
        assert_eq!(phi.eval(3.0), 9.0);
        assert_eq!(phi.eval(-3.0), -9.0);
        assert_eq!(phi.eval(0.0), 0.0);
        let phi3 = PhiSpec::power_law(3.0).unwrap();
        assert_eq!(phi3.eval(-2.0), -8.0);
        assert_eq!(phi3.prime(-2.0), 12.0);
    }

    #[test]
    fn derivative_matches_central_differences() {
        for &p in &[1.2, 1.5, 2.0, 3.0, 5.0] {
            let phi = PhiSpec::power_law(p).unwrap();
            for &u in &[-7.3f64, -1.0, -0.2, 0.2, 1.0, 4.5] {
                let h = 1e-6 * u.abs().max(1.0);
                let fd = (phi.eval(u + h) - phi.eval(u - h)) / (2.0 * h);
                let exact = phi.prime(u);
                assert!(
                    (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                    "p {p} u {u}: fd {fd} exact {exact}"
                );
            }
            assert_eq!(phi.prime(0.0), 0.0);
        }
    }

    #[test]
    fn suggested_constants_closed_forms() {
        let s = suggested_constants(2.0);
        assert_eq!(s.c1, 2.0);
        assert!((s.c2 - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(s.k, 0.5);
        let s3 = suggested_constants(3.0);
        assert_eq!(s3.c1, 3.0);
        assert_eq!(s3.c2, 0.75);
        assert_eq!(s3.k, 0.25);
    }

    #[test]
    fn suggested_constants_pass_both_scans() {
        for &p in &[1.2, 1.5, 2.0, 3.0, 5.0] {
            let phi = PhiSpec::power_law(p).unwrap();
            let s = suggested_constants(p);
            let grid = VerifyGrid::default();
            let growth = verify_growth(&phi, s.c1, s.c2, &grid);
            assert!(growth.pass, "growth fails at p {p}: {growth}");
            assert!(growth.worst_margin >= 0.0);
            let mono = verify_monotonicity(&phi, s.k, 0.0, &grid);
            assert!(mono.pass, "monotonicity fails at p {p}: {mono}");
            assert!(mono.worst_margin >= 0.0);
        }
    }

    #[test]
    fn monotonicity_bound_is_tight_at_antipodal_pairs() {
        // At v = -u the bound holds with equality, so the worst margin over
        // a grid containing such pairs must sit at the slack level.
        let phi = PhiSpec::power_law(2.0).unwrap();
        let s = suggested_constants(2.0);
        let lhs = (phi.eval(1.0) - phi.eval(-1.0)) * 2.0;
        assert_eq!(lhs, 4.0);
        assert_eq!(s.k * 2.0f64.powf(3.0), 4.0);
        let report = verify_monotonicity(&phi, s.k, 0.0, &VerifyGrid::default());
        assert!(report.worst_margin >= 0.0);
        assert!(report.worst_margin < 1e-8, "slack-level margin expected");
    }

    #[test]
    fn oversized_c2_is_detected() {
        let phi = PhiSpec::power_law(2.0).unwrap();
        let report = verify_growth(&phi, 2.0, 2.0, &VerifyGrid::default());
        assert!(!report.pass);
        assert!(report.violation_count > 0);
        assert!(report.worst_margin < -1.0);
        // Witness level: at u = 1 the lower envelope is 4.5 against phi' = 2.
        let low = (9.0 / 4.0) * 2.0;
        assert_eq!(low, 4.5);
    }

    #[test]
    fn oversized_k_is_detected() {
        let phi = PhiSpec::power_law(2.0).unwrap();
        let report = verify_monotonicity(&phi, 1.0, 0.0, &VerifyGrid::default());
        assert!(!report.pass);
        // At (1, -1) the left side is 4 but k |u-v|^3 = 8.
        assert!(report.worst_margin < 0.0);
    }

    #[test]
    fn report_serializes_and_stays_consistent() {
        let phi = PhiSpec::power_law(3.0).unwrap();
        let s = suggested_constants(3.0);
        let report = verify_growth(&phi, s.c1, s.c2, &VerifyGrid::default());
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: ConditionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.pass, report.pass);
        assert_eq!(back.samples_tested, report.samples_tested);
        assert_eq!(report.pass, report.violations.is_empty());
        assert_eq!(report.pass, report.worst_margin >= 0.0);
    }

    proptest! {
        #[test]
        fn prop_phi_is_odd_and_increasing(
            p in 1.1f64..5.0,
            u in -50.0f64..50.0,
            v in -50.0f64..50.0,
        ) {
            let phi = PhiSpec::power_law(p).unwrap();
            prop_assert!((phi.eval(-u) + phi.eval(u)).abs() <= 1e-12 * phi.eval(u).abs().max(1.0));
            if u != v {
                prop_assert!((phi.eval(u) - phi.eval(v)) * (u - v) >= 0.0);
            }
        }
    }
}
