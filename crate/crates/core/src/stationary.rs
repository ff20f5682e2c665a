//! Sublinear stationary solutions of
//!
//! ```text
//! ½(F′ − 1)(F′ − 2) + F/x − 1 = 0,   0 ≤ F ≤ x.
//! ```
//!
//! Apart from `F ≡ 0`, every such solution is a scaling `x ↦ F̄(cx)/c` of one
//! profile `F̄` whose slope `z = F̄′(x)` is the real root in `(0, 1]` of
//! `z³ + z/x − 1/x = 0`. The root is evaluated through the Cardano terms
//!
//! ```text
//! α = ((√(x + 4/27) + √x)/2)^{1/3},   β = ((√(x + 4/27) − √x)/2)^{1/3},   αβ = 1/3,
//! ```
//!
//! in the form `z = 1/(α² + αβ + β²)`, which has no `0/0` at the origin.
//! `F̄` itself has the closed form `F̄(x) = x·z(3 − z)/2`, obtained by
//! integrating `½x·G(G + 1) = ∫₀ˣ G` with `G = 1 − z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::roots;

/// `x₀ = 4/27`, minus the minimum of `u ↦ u/(1 − u)³`.
pub const X0: f64 = 4.0 / 27.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardanoTerms {
    pub alpha: f64,
    pub beta: f64,
}

impl CardanoTerms {
    pub fn at(x: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("Cardano terms need finite x ≥ 0, got {x}")));
        }
        Ok(cardano_terms(x))
    }

    /// `1/(α² + αβ + β²)`, the unpolished slope.
    pub fn slope(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        1.0 / (a * a + a * b + b * b)
    }
}

#[inline]
fn cardano_terms(x: f64) -> CardanoTerms {
    let s = (x + X0).sqrt();
    let r = x.sqrt();
    // (s − r)/2 rewritten as x₀/(2(s + r)) to avoid cancellation for large x.
    CardanoTerms {
        alpha: (0.5 * (s + r)).cbrt(),
        beta: (X0 / (2.0 * (s + r))).cbrt(),
    }
}

/// Slope for `x ≥ 0` (caller guarantees the domain).
#[inline]
fn slope_unchecked(x: f64) -> f64 {
    let a = cardano_terms(x).alpha;
    let a2 = a * a;
    let z = 1.0 / (a2 + 1.0 / (9.0 * a2) + 1.0 / 3.0);
    // One Newton step on x·z³ + z − 1 = 0; exact (z = 1) at x = 0.
    let g = x * z * z * z + z - 1.0;
    z - g / (3.0 * x * z * z + 1.0)
}

/// Root `z ∈ (0, 1)` of `z³ + z/x − 1/x = 0` for `x > 0`.
pub fn cubic_root(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("cubic_root needs finite x > 0, got {x}")));
    }
    Ok(slope_unchecked(x))
}

/// `F̄′(x)`; equal to 1 at the origin and to [`cubic_root`] for `x > 0`.
pub fn dbar_f(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("dbar_f needs finite x ≥ 0, got {x}")));
    }
    Ok(slope_unchecked(x))
}

/// `F̄(x) = x·z(3 − z)/2` with `z = F̄′(x)`.
pub fn bar_f(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bar_f needs finite x ≥ 0, got {x}")));
    }
    Ok(bar_f_unchecked(x))
}

#[inline]
fn bar_f_unchecked(x: f64) -> f64 {
    let z = slope_unchecked(x);
    0.5 * x * z * (3.0 - z)
}

/// The stationary profile `x ↦ F̄(cx)/c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    c: f64,
}

impl StationaryProfile {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("profile scale must be positive, got {c}")));
        }
        Ok(Self { c })
    }

    /// Profile with `lim F(x)/x^{2/3} = δ`, i.e. `c = 27/(8δ³)`.
    pub fn from_growth(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("growth constant must be positive, got {delta}")));
        }
        Self::new(scale_from_growth(delta))
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `lim F(x)/x^{2/3} = 3/(2c^{1/3})`.
    pub fn growth(&self) -> f64 {
        1.5 / self.c.cbrt()
    }

    /// Value at `x`; negative inputs are clamped to 0.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        bar_f_unchecked(self.c * x.max(0.0)) / self.c
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        slope_unchecked(self.c * x.max(0.0))
    }
}

/// `c = 27/(8δ³)`.
pub fn scale_from_growth(delta: f64) -> f64 {
    27.0 / (8.0 * delta * delta * delta)
}

pub fn profile_eval(p: &StationaryProfile, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("profile_eval needs x ≥ 0, got {x}")));
    }
    Ok(p.value(x))
}

/// Pointwise residual `½(DF − 1)(DF − 2) + F/x − 1` of the stationary equation.
///
/// `DF` is the centered difference at interior nodes and the second-order
/// backward difference at the last node. The node at `x = 0` is not
/// evaluated and carries residual 0.
pub fn stationary_residual(f: &GridFunction) -> Result<GridFunction> {
    let n = f.values.len();
    if n < 3 {
        return Err(Error::Grid(format!("residual needs at least 3 nodes, got {n}")));
    }
    let dx = f.grid.dx();
    let v = &f.values;
    let mut out = vec![0.0; n];
    for j in 1..n {
        let df = if j + 1 < n {
            (v[j + 1] - v[j - 1]) / (2.0 * dx)
        } else {
            (3.0 * v[j] - 4.0 * v[j - 1] + v[j - 2]) / (2.0 * dx)
        };
        out[j] = 0.5 * (df - 1.0) * (df - 2.0) + v[j] / f.grid.x(j) - 1.0;
    }
    let mut r = GridFunction::new(f.grid, out, f.time)?;
    r.trusted_xmax = f.trusted_xmax;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// `F` counts as zero when `sup F ≤ zero_factor · x_max^{2/3}`.
    pub zero_factor: f64,
    /// Accepted relative sup-norm mismatch against the fitted profile.
    pub match_tol: f64,
    /// Shortest sampled range that allows a decision.
    pub min_xmax: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            zero_factor: 1e-6,
            match_tol: 0.02,
            min_xmax: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleFit {
    Zero,
    ScaledProfile { c: f64, rel_error: f64 },
    NoMatch { c_candidate: f64, rel_error: f64 },
}

/// Classifies sampled data as `0`, a scaled profile, or neither.
///
/// The growth estimate `δ = F(x_max)/x_max^{2/3}` gives the candidate
/// `c = 27/(8δ³)`, which is then refined inside `[c/8, 8c]` so that the
/// profile passes through the sample at `x_max` exactly. The match is judged
/// on the relative sup-norm error over trusted nodes.
pub fn fit_scale(f: &GridFunction, opts: &FitOptions) -> Result<ScaleFit> {
    let len = f.trusted_len();
    if len < 3 {
        return Err(Error::Inconclusive("fewer than 3 trusted nodes".into()));
    }
    let xmax = f.grid.x(len - 1);
    if xmax < opts.min_xmax {
        return Err(Error::Inconclusive(format!(
            "sampled range x_max = {xmax} is shorter than the required {}",
            opts.min_xmax
        )));
    }
    let vals = &f.values[..len];
    let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup <= opts.zero_factor * xmax.powf(2.0 / 3.0) {
        return Ok(ScaleFit::Zero);
    }
    let f_end = vals[len - 1];
    let delta = f_end / xmax.powf(2.0 / 3.0);
    let c0 = scale_from_growth(delta);
    if !(c0 > 0.0) || !c0.is_finite() {
        return Ok(ScaleFit::NoMatch {
            c_candidate: c0,
            rel_error: f64::INFINITY,
        });
    }
    let through_end = |c: f64| bar_f_unchecked(c * xmax) / c - f_end;
    let c = match roots::bisect(through_end, c0 / 8.0, c0 * 8.0, 1e-14) {
        Ok(c) => c,
        Err(_) => {
            return Ok(ScaleFit::NoMatch {
                c_candidate: c0,
                rel_error: relative_error(f, len, c0),
            })
        }
    };
    let rel_error = relative_error(f, len, c);
    if rel_error <= opts.match_tol {
        Ok(ScaleFit::ScaledProfile { c, rel_error })
    } else {
        Ok(ScaleFit::NoMatch {
            c_candidate: c,
            rel_error,
        })
    }
}

fn relative_error(f: &GridFunction, len: usize, c: f64) -> f64 {
    let p = StationaryProfile { c };
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for (j, v) in f.values[..len].iter().enumerate() {
        let target = p.value(f.grid.x(j));
        err = err.max((v - target).abs());
        scale = scale.max(target.abs());
    }
    err / scale
}
