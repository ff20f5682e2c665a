//! Bernstein transforms `𝔅[μ](x) = ∫ (1 − e^{−sx}) μ(ds)` of particle-size
//! measures, and admissibility checks for initial data.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{classify_regime, Regime};
use crate::quadrature;

/// Absolute tolerance for the density part of the transform.
pub const QUADRATURE_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub size: f64,
    pub weight: f64,
}

/// A density supported (by truncation) on `[s_min, s_max]`.
#[derive(Clone)]
pub struct Density {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    s_min: f64,
    s_max: f64,
}

impl Density {
    pub fn new<F>(f: F, s_min: f64, s_max: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(s_min >= 0.0 && s_max > s_min && s_max.is_finite()) {
            return Err(Error::Domain(format!(
                "density support [{s_min}, {s_max}] must be a finite interval in [0, ∞)"
            )));
        }
        Ok(Self {
            f: Arc::new(f),
            s_min,
            s_max,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let f = &self.f;
        quadrature::integrate(
            |s| g(s) * f(s),
            self.s_min,
            self.s_max,
            QUADRATURE_TOL,
            MAX_PANELS,
        )
        .map(|q| q.value)
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("s_min", &self.s_min)
            .field("s_max", &self.s_max)
            .finish_non_exhaustive()
    }
}

/// Nonnegative measure on `(0, ∞)`: finitely many atoms plus an optional density.
#[derive(Debug, Clone)]
pub struct SizeMeasure {
    atoms: Vec<Atom>,
    density: Option<Density>,
}

impl SizeMeasure {
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.size > 0.0 && a.size.is_finite()) {
                return Err(Error::Domain(format!("atom size must be positive, got {}", a.size)));
            }
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(Error::Domain(format!(
                    "atom weight must be nonnegative, got {}",
                    a.weight
                )));
            }
        }
        Ok(Self {
            atoms,
            density: None,
        })
    }

    /// `w·δ_s`.
    pub fn dirac(size: f64, weight: f64) -> Result<Self> {
        Self::from_atoms(vec![Atom { size, weight }])
    }

    pub fn with_density(mut self, density: Density) -> Self {
        self.density = Some(density);
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `m₁ = Σ wᵢsᵢ + ∫ s ρ(s) ds`.
    pub fn first_moment(&self) -> Result<f64> {
        let mut m: f64 = self.atoms.iter().map(|a| a.weight * a.size).sum();
        if let Some(d) = &self.density {
            m += d.integrate(|s| s)?;
        }
        if !m.is_finite() {
            return Err(Error::Numeric("first moment is not finite".into()));
        }
        Ok(m)
    }
}

/// `1 − e^{−sx}` without cancellation for small `sx`.
#[inline]
pub fn phi(x: f64, s: f64) -> f64 {
    -(-s * x).exp_m1()
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("transform needs finite x ≥ 0, got {x}")))
    }
}

pub fn transform(mu: &SizeMeasure, x: f64) -> Result<f64> {
    check_x(x)?;
    let mut v: f64 = mu.atoms.iter().map(|a| a.weight * phi(x, a.size)).sum();
    if let Some(d) = &mu.density {
        if x > 0.0 {
            v += d.integrate(|s| phi(x, s))?;
        }
    }
    Ok(v)
}

pub fn transform_slope(mu: &SizeMeasure, x: f64) -> Result<f64> {
    check_x(x)?;
    let mut v: f64 = mu
        .atoms
        .iter()
        .map(|a| a.weight * a.size * (-a.size * x).exp())
        .sum();
    if let Some(d) = &mu.density {
        v += d.integrate(|s| s * (-s * x).exp())?;
    }
    Ok(v)
}

/// Residual of `φˣ(s + ŝ) − φˣ(s) − φˣ(ŝ) = −φˣ(s)φˣ(ŝ)`.
pub fn product_identity_check(x: f64, s: f64, s_hat: f64) -> f64 {
    let lhs = phi(x, s + s_hat) - phi(x, s) - phi(x, s_hat);
    (lhs + phi(x, s) * phi(x, s_hat)).abs()
}

/// A function of `x ≥ 0` that can serve as initial data.
pub trait InitialProfile {
    fn value(&self, x: f64) -> Result<f64>;
    /// Derivative; the left derivative at kinks.
    fn slope(&self, x: f64) -> Result<f64>;
    /// `∂ₓF₀(0⁺)`, the mass `m` of the underlying measure.
    fn first_moment(&self) -> Result<f64>;
    /// Known growth regime, if the datum carries one.
    fn regime_hint(&self) -> Option<Regime> {
        None
    }
}

/// The transform of a fixed [`SizeMeasure`], with its first moment cached.
#[derive(Debug, Clone)]
pub struct BernsteinFunction {
    source: SizeMeasure,
    m: f64,
}

impl BernsteinFunction {
    pub fn new(source: SizeMeasure) -> Result<Self> {
        let m = source.first_moment()?;
        Ok(Self { source, m })
    }

    pub fn source(&self) -> &SizeMeasure {
        &self.source
    }

    pub fn mass(&self) -> f64 {
        self.m
    }
}

impl InitialProfile for BernsteinFunction {
    fn value(&self, x: f64) -> Result<f64> {
        transform(&self.source, x)
    }

    fn slope(&self, x: f64) -> Result<f64> {
        transform_slope(&self.source, x)
    }

    fn first_moment(&self) -> Result<f64> {
        Ok(self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityOptions {
    /// Largest sample point for the sublinearity proxy.
    pub x_max: f64,
    /// Required mass; `None` skips the moment check.
    pub mass: Option<f64>,
    pub mass_tol: f64,
    /// Slack for the pointwise bounds.
    pub bound_tol: f64,
    /// `F₀(x_max)/x_max` must not exceed this for the sublinearity proxy.
    pub sublinear_ratio_max: f64,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        Self {
            x_max: 1e8,
            mass: Some(1.0),
            mass_tol: 1e-8,
            bound_tol: 1e-12,
            sublinear_ratio_max: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub m1: f64,
    pub regime: String,
    pub violations: Vec<String>,
    /// Sublinearity is only verified up to this point, by the decreasing-ratio test.
    pub sublinearity_checked_to: f64,
}

/// Sample points: uniform near the origin, then geometric up to `x_max`.
fn admissibility_samples(x_max: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=400).map(|k| k as f64 * 0.025).collect();
    let mut x = 10.0f64;
    let step = 10f64.powf(1.0 / 40.0);
    while x < x_max {
        x *= step;
        xs.push(x.min(x_max));
    }
    xs
}

/// Checks `0 ≤ F₀ ≤ m·x`, `0 ≤ F₀′ ≤ m`, the mass, and sublinearity
/// (`F₀(x)/x` nonincreasing on samples and small at `x_max`).
///
/// Sublinearity cannot be verified in floating point; the report records
/// how far the proxy was evaluated.
pub fn check_admissible<P: InitialProfile + ?Sized>(
    f0: &P,
    opts: &AdmissibilityOptions,
) -> AdmissibilityReport {
    let mut violations = Vec::new();
    let m1 = match f0.first_moment() {
        Ok(m) => m,
        Err(e) => {
            violations.push(format!("first moment: {e}"));
            f64::NAN
        }
    };
    if let Some(target) = opts.mass {
        if !((m1 - target).abs() <= opts.mass_tol) {
            violations.push(format!("first moment {m1} differs from required mass {target}"));
        }
    }
    let m = opts.mass.unwrap_or(m1);
    let tol = opts.bound_tol;
    let mut prev_ratio = f64::INFINITY;
    let mut last_ratio = f64::NAN;
    let mut ratio_violation = false;
    for x in admissibility_samples(opts.x_max) {
        let (v, s) = match (f0.value(x), f0.slope(x)) {
            (Ok(v), Ok(s)) => (v, s),
            (Err(e), _) | (_, Err(e)) => {
                violations.push(format!("evaluation failed at x = {x}: {e}"));
                continue;
            }
        };
        let scale = 1.0 + x;
        if v < -tol * scale || v > m * x + tol * scale {
            violations.push(format!("value {v} outside [0, {}] at x = {x}", m * x));
        }
        if s < -tol || s > m + tol {
            violations.push(format!("slope {s} outside [0, {m}] at x = {x}"));
        }
        if x > 0.0 {
            let ratio = v / x;
            if ratio > prev_ratio * (1.0 + 1e-12) + 1e-15 && !ratio_violation {
                violations.push(format!(
                    "F0(x)/x increases at x = {x} ({prev_ratio} -> {ratio}); not sublinear"
                ));
                ratio_violation = true;
            }
            prev_ratio = ratio;
            last_ratio = ratio;
        }
    }
    if !(last_ratio <= opts.sublinear_ratio_max) {
        violations.push(format!(
            "F0(x)/x = {last_ratio} at x = {} exceeds {}; not sublinear",
            opts.x_max, opts.sublinear_ratio_max
        ));
    }
    let regime = match f0.regime_hint().map(Ok).unwrap_or_else(|| classify_regime(|x| f0.value(x))) {
        Ok(r) => r,
        Err(e) => {
            violations.push(format!("regime classification failed: {e}"));
            Regime::Indeterminate
        }
    };
    AdmissibilityReport {
        admissible: violations.is_empty(),
        m1,
        regime: regime.label(),
        violations,
        sublinearity_checked_to: opts.x_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn transform_of_atoms() {
        let d1 = SizeMeasure::dirac(1.0, 1.0).unwrap();
        assert!((transform(&d1, 1.0).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-16);
        assert_eq!(transform(&d1, 0.0).unwrap(), 0.0);
        let half2 = SizeMeasure::dirac(2.0, 0.5).unwrap();
        for x in [0.0f64, 0.3, 7.0] {
            let exact = 0.5 * (1.0 - (-2.0 * x).exp());
            assert!((transform(&half2, x).unwrap() - exact).abs() < 1e-16);
        }
        assert_eq!(half2.first_moment().unwrap(), 1.0);
        assert!(transform(&d1, -1.0).is_err());
    }

    #[test]
    fn slope_of_atoms() {
        let d1 = SizeMeasure::dirac(1.0, 1.0).unwrap();
        assert_eq!(transform_slope(&d1, 0.0).unwrap(), 1.0);
        assert!((transform_slope(&d1, LN_2).unwrap() - 0.5).abs() < 1e-15);
        let half2 = SizeMeasure::dirac(2.0, 0.5).unwrap();
        assert_eq!(transform_slope(&half2, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn invalid_atoms_rejected() {
        assert!(SizeMeasure::dirac(0.0, 1.0).is_err());
        assert!(SizeMeasure::dirac(1.0, -0.1).is_err());
    }

    #[test]
    fn density_transform_matches_closed_form() {
        // ρ(s) = e^{−s} on [0, 60]: 𝔅(x) = x/(1 + x), m₁ = 1 (tail below 1e-24).
        let d = Density::new(|s: f64| (-s).exp(), 0.0, 60.0).unwrap();
        let mu = SizeMeasure::from_atoms(vec![]).unwrap().with_density(d);
        assert!((mu.first_moment().unwrap() - 1.0).abs() < 1e-10);
        for x in [0.0, 0.5, 2.0, 30.0] {
            assert!((transform(&mu, x).unwrap() - x / (1.0 + x)).abs() < 1e-9);
            let slope = 1.0 / ((1.0 + x) * (1.0 + x));
            assert!((transform_slope(&mu, x).unwrap() - slope).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_density_support_rejected() {
        assert!(Density::new(|_| 1.0, 1.0, 1.0).is_err());
        assert!(Density::new(|_| 1.0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn product_identity_examples() {
        assert!(product_identity_check(1.0, 1.0, 1.0) <= 1e-16);
        assert!(product_identity_check(2.5, 0.3, 4.2) <= 1e-14);
        assert!(product_identity_check(1.0, 1e-300, 1.0) <= 1e-16);
    }

    #[test]
    fn admissibility_of_atomic_data() {
        let r = check_admissible(
            &BernsteinFunction::new(SizeMeasure::dirac(1.0, 1.0).unwrap()).unwrap(),
            &AdmissibilityOptions::default(),
        );
        assert!(r.admissible, "{:?}", r.violations);
        assert_eq!(r.regime, "subcritical");
        let r = check_admissible(
            &BernsteinFunction::new(SizeMeasure::dirac(2.0, 0.5).unwrap()).unwrap(),
            &AdmissibilityOptions::default(),
        );
        assert!(r.admissible, "{:?}", r.violations);
        let r = check_admissible(
            &BernsteinFunction::new(SizeMeasure::dirac(1.0, 2.0).unwrap()).unwrap(),
            &AdmissibilityOptions::default(),
        );
        assert!(!r.admissible);
        assert_eq!(r.m1, 2.0);
        assert!(r.violations.iter().any(|v| v.contains("first moment")));
    }
}
