//! Vectors over a symmetric window of lattice sites and the difference
//! operators acting on them.
//!
//! A [`LatticeVector`] stores values on sites `i = -N..=N` and is read as an
//! element of l2(Z) that vanishes outside the window (zero padding). The
//! operators
//!
//! ```text
//! (B u)_i  = u_{i+1} - u_i
//! (B* u)_i = u_{i-1} - u_i
//! (A u)_i  = -u_{i-1} + 2 u_i - u_{i+1}
//! ```
//!
//! are implemented as the exact operators on the zero-padded sequence: the
//! result carries half width `N + 1` so that every nonzero entry survives.
//! With that convention the identities `(Bu, w) = (u, B*w)`,
//! `(Au, u) = ||Bu||^2 <= 4 ||u||^2` and `A = B o B* = B* o B` hold at every
//! site, not just in the interior of the window. Inner products and distances
//! align operands by site index, so mixing half widths is well defined.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued vector on the sites `-N..=N`, zero outside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSites")]
pub struct LatticeVector {
    half_width: usize,
    values: Vec<f64>,
}

/// Per-site model data on `-N..=N` (a forcing profile, per-site offsets).
///
/// Same storage layout as [`LatticeVector`]; kept as its own type because
/// sequences parameterize the model rather than evolve under it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSites")]
pub struct SiteSequence {
    half_width: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSites {
    half_width: usize,
    values: Vec<f64>,
}

impl TryFrom<RawSites> for LatticeVector {
    type Error = Error;
    fn try_from(raw: RawSites) -> Result<Self> {
        LatticeVector::from_values(raw.half_width, raw.values)
    }
}

impl TryFrom<RawSites> for SiteSequence {
    type Error = Error;
    fn try_from(raw: RawSites) -> Result<Self> {
        Ok(SiteSequence::from_lattice(LatticeVector::from_values(
            raw.half_width,
            raw.values,
        )?))
    }
}

impl LatticeVector {
    /// The zero vector on `-N..=N`.
    pub fn zeros(half_width: usize) -> Self {
        Self {
            half_width,
            values: vec![0.0; 2 * half_width + 1],
        }
    }

    /// Builds a vector from `2N + 1` values ordered from site `-N` to `N`.
    pub fn from_values(half_width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * half_width + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for half_width {}, got {}",
                2 * half_width + 1,
                half_width,
                values.len()
            )));
        }
        Ok(Self { half_width, values })
    }

    /// Builds a vector by evaluating `f` at every site of the window.
    pub fn from_fn(half_width: usize, f: impl FnMut(i64) -> f64) -> Self {
        let values = (-(half_width as i64)..=half_width as i64).map(f).collect();
        Self { half_width, values }
    }

    /// The basis vector with a single 1 at `site`.
    ///
    /// # Panics
    /// If `site` lies outside the window.
    pub fn unit(half_width: usize, site: i64) -> Self {
        assert!(
            site.unsigned_abs() as usize <= half_width,
            "site {site} outside half_width {half_width}"
        );
        Self::from_fn(half_width, |i| if i == site { 1.0 } else { 0.0 })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Number of stored sites, `2N + 1`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Site indices of the window, `-N..=N`.
    pub fn sites(&self) -> impl Iterator<Item = i64> {
        let n = self.half_width as i64;
        -n..=n
    }

    /// Value at `site`; zero outside the window (the padding convention).
    pub fn get(&self, site: i64) -> f64 {
        let n = self.half_width as i64;
        if site < -n || site > n {
            0.0
        } else {
            self.values[(site + n) as usize]
        }
    }

    /// Overwrites the value at `site`.
    ///
    /// # Panics
    /// If `site` lies outside the window.
    pub fn set(&mut self, site: i64, value: f64) {
        let n = self.half_width as i64;
        assert!(
            (-n..=n).contains(&site),
            "site {site} outside half_width {}",
            self.half_width
        );
        self.values[(site + n) as usize] = value;
    }

    /// Stored values from site `-N` to `N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `(site, value)` pairs over the window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.half_width as i64;
        self.values.iter().enumerate().map(move |(k, &v)| (k as i64 - n, v))
    }

    fn zip_sites<'a>(
        &'a self,
        other: &'a LatticeVector,
    ) -> impl Iterator<Item = (i64, f64, f64)> + 'a {
        let n = self.half_width.max(other.half_width) as i64;
        (-n..=n).map(move |i| (i, self.get(i), other.get(i)))
    }

    /// Sitewise sum; the result spans the wider of the two windows.
    pub fn add(&self, other: &LatticeVector) -> LatticeVector {
        let half_width = self.half_width.max(other.half_width);
        LatticeVector {
            half_width,
            values: self.zip_sites(other).map(|(_, a, b)| a + b).collect(),
        }
    }

    /// Sitewise difference; the result spans the wider of the two windows.
    pub fn sub(&self, other: &LatticeVector) -> LatticeVector {
        let half_width = self.half_width.max(other.half_width);
        LatticeVector {
            half_width,
            values: self.zip_sites(other).map(|(_, a, b)| a - b).collect(),
        }
    }

    /// Scalar multiple.
    pub fn scale(&self, c: f64) -> LatticeVector {
        LatticeVector {
            half_width: self.half_width,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// l2 inner product, aligned by site index.
    pub fn inner(&self, other: &LatticeVector) -> f64 {
        self.zip_sites(other).map(|(_, a, b)| a * b).sum()
    }

    /// Squared l2 norm.
    pub fn norm_l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// l2 norm.
    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_squared().sqrt()
    }

    /// lq norm `(sum |u_i|^q)^{1/q}`.
    ///
    /// # Panics
    /// If `q < 1` (not a norm below 1).
    pub fn norm_lp(&self, q: f64) -> f64 {
        assert!(q >= 1.0, "norm_lp requires q >= 1, got {q}");
        self.values
            .iter()
            .map(|v| v.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// l2 distance, aligned by site index.
    pub fn l2_distance(&self, other: &LatticeVector) -> f64 {
        self.zip_sites(other)
            .map(|(_, a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Plot-friendly dump, one `site,value` row per line with a header.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("site,value\n");
        for (i, v) in self.iter() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

impl SiteSequence {
    pub fn zeros(half_width: usize) -> Self {
        Self {
            half_width,
            values: vec![0.0; 2 * half_width + 1],
        }
    }

    /// Builds a sequence from `2N + 1` values ordered from site `-N` to `N`.
    pub fn from_values(half_width: usize, values: Vec<f64>) -> Result<Self> {
        Ok(Self::from_lattice(LatticeVector::from_values(half_width, values)?))
    }

    /// Builds a sequence by evaluating `f` at every site of the window.
    pub fn from_fn(half_width: usize, f: impl FnMut(i64) -> f64) -> Self {
        Self::from_lattice(LatticeVector::from_fn(half_width, f))
    }

    fn from_lattice(v: LatticeVector) -> Self {
        Self {
            half_width: v.half_width,
            values: v.values,
        }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Value at `site`; zero outside the window.
    pub fn get(&self, site: i64) -> f64 {
        self.as_lattice().get(site)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(site, value)` pairs over the window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.half_width as i64;
        self.values.iter().enumerate().map(move |(k, &v)| (k as i64 - n, v))
    }

    /// l1 norm `sum |a_i|`.
    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Squared l2 norm `sum a_i^2`.
    pub fn norm_l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// View as a lattice vector (same sites, same values).
    pub fn as_lattice(&self) -> LatticeVector {
        LatticeVector {
            half_width: self.half_width,
            values: self.values.clone(),
        }
    }
}

/// Forward difference `(B u)_i = u_{i+1} - u_i` on the zero-padded sequence.
///
/// The result has half width `N + 1`: the padding makes `(Bu)_{-N-1} = u_{-N}`
/// nonzero in general, and dropping it would break the energy identity.
pub fn apply_b(u: &LatticeVector) -> LatticeVector {
    LatticeVector::from_fn(u.half_width + 1, |i| u.get(i + 1) - u.get(i))
}

/// Backward difference `(B* u)_i = u_{i-1} - u_i`, the adjoint of `B`.
pub fn apply_bstar(u: &LatticeVector) -> LatticeVector {
    LatticeVector::from_fn(u.half_width + 1, |i| u.get(i - 1) - u.get(i))
}

/// Discrete Laplacian `(A u)_i = -u_{i-1} + 2 u_i - u_{i+1}`.
pub fn apply_a(u: &LatticeVector) -> LatticeVector {
    LatticeVector::from_fn(u.half_width + 1, |i| {
        -u.get(i - 1) + 2.0 * u.get(i) - u.get(i + 1)
    })
}
