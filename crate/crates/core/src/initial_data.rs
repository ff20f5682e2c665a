//! Catalog of initial data `F₀` spanning the growth regimes of
//! `lim F₀(x)/x^{2/3}`, plus the oscillating datum that defeats convergence.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bernstein::{phi, Atom, InitialProfile, SizeMeasure};
use crate::error::{Error, Result};
use crate::roots;
use crate::stationary::{scale_from_growth, StationaryProfile};

/// Growth regime of `F₀(x)/x^{2/3}` as `x → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical { delta: f64 },
    Supercritical,
    Indeterminate,
}

impl Regime {
    pub fn label(&self) -> String {
        match self {
            Regime::Subcritical => "subcritical".into(),
            Regime::Critical { delta } => format!("critical({delta})"),
            Regime::Supercritical => "supercritical".into(),
            Regime::Indeterminate => "indeterminate".into(),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Growth constants below this are reported as subcritical.
pub const DELTA_ZERO: f64 = 1e-3;
const REGIME_SAMPLES: [f64; 3] = [1e4, 1e6, 1e8];

/// Classifies `F₀` from `r(x) = F₀(x)/x^{2/3}` at `x = 10⁴, 10⁶, 10⁸`.
///
/// Assuming `r(x) ≈ δ + A·x^{−κ}`, the ratio of successive differences gives
/// `κ` and the extrapolated limit `δ`. Differences that grow instead of
/// shrinking indicate divergence.
pub fn classify_regime<F: Fn(f64) -> Result<f64>>(f: F) -> Result<Regime> {
    let mut r = [0.0; 3];
    for (ri, &x) in r.iter_mut().zip(REGIME_SAMPLES.iter()) {
        *ri = f(x)? / x.powf(2.0 / 3.0);
        if !ri.is_finite() {
            return Err(Error::Numeric(format!("F0({x}) is not finite")));
        }
    }
    let (d1, d2) = (r[1] - r[0], r[2] - r[1]);
    if d1 > 0.0 && d2 > 0.0 && d2 >= d1 {
        return Ok(Regime::Supercritical);
    }
    let delta = if d1.abs() <= 1e-14 * r[2].abs().max(1.0) {
        r[2]
    } else {
        let rho = d2 / d1;
        if (0.0..1.0).contains(&rho) {
            r[2] + d2 * rho / (1.0 - rho)
        } else if rho < 0.0 && d2.abs() <= 1e-12 * r[2].abs().max(1.0) {
            r[2]
        } else {
            return Ok(Regime::Indeterminate);
        }
    };
    if delta <= DELTA_ZERO {
        Ok(Regime::Subcritical)
    } else {
        Ok(Regime::Critical { delta })
    }
}

/// Perturbation `a·s(x)` of a critical profile inside the corridor
/// `h(x) = min(ramp·x, cap)`.
///
/// The shape `s(x) = cap·(1 − e^{−ramp·x/cap})²` satisfies `0 ≤ s ≤ h` and
/// `s′(0) = 0`, so `|a| ≤ 1` keeps `F₀` within `F_c ± h` without changing the
/// mass `∂ₓF₀(0)`. Bounded `h` leaves the growth constant unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub ramp: f64,
    pub cap: f64,
}

impl Perturbation {
    /// Corridor `h(x) = min(x/2, 1)`.
    pub fn ramp_half(amplitude: f64) -> Self {
        Self {
            amplitude,
            ramp: 0.5,
            cap: 1.0,
        }
    }

    pub fn corridor(&self, x: f64) -> f64 {
        (self.ramp * x).min(self.cap)
    }

    fn decay(&self, x: f64) -> f64 {
        (-self.ramp * x / self.cap).exp()
    }

    pub fn value(&self, x: f64) -> f64 {
        let u = -(-self.ramp * x / self.cap).exp_m1();
        self.amplitude * self.cap * u * u
    }

    pub fn slope(&self, x: f64) -> f64 {
        let e = self.decay(x);
        self.amplitude * 2.0 * self.ramp * (1.0 - e) * e
    }
}

impl Default for Perturbation {
    fn default() -> Self {
        Self::ramp_half(0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Arc1,
    Flat(f64),
    Arc2,
    Tangent { anchor: f64, value: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    lo: f64,
    hi: f64,
    shape: Shape,
}

/// Piecewise datum alternating between `F₁ = F̄(c₁·)/c₁` and `F₂ = F̄(c₂·)/c₂`:
///
/// ```text
/// [a₄ᵢ,   a₄ᵢ₊₁]  F₁(x)
/// [a₄ᵢ₊₁, a₄ᵢ₊₂]  F₁(a₄ᵢ₊₁)                       (flat)
/// [a₄ᵢ₊₂, a₄ᵢ₊₃]  F₂(x)
/// [a₄ᵢ₊₃, a₄ᵢ₊₄]  F₂(a₄ᵢ₊₃) + F₂′(a₄ᵢ₊₃)(x − a₄ᵢ₊₃)  (tangent)
/// ```
///
/// The probe times `t₁ < t₂ < …` are placed so that the domain of dependence
/// of `(x₀, t_k)` lies inside an `F₁` arc for odd `k` and inside an `F₂` arc
/// for even `k`. Past the last constructed tangent segment, the datum
/// continues as `F₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatingDatum {
    c1: f64,
    c2: f64,
    x0: f64,
    depth: usize,
    breakpoints: Vec<f64>,
    probe_times: Vec<f64>,
    pieces: Vec<Piece>,
}

const BRACKET_MAX_FACTOR: f64 = 1e15;
const ROOT_TOL: f64 = 1e-12;
/// Continuity is required to this relative accuracy at every breakpoint.
pub const CONTINUITY_TOL: f64 = 1e-12;

/// Oscillating datum with `x₀ = 1/2`; `depth` is the number of
/// `(t_odd, t_even)` probe pairs.
pub fn build_oscillating(c1: f64, c2: f64, depth: usize) -> Result<OscillatingDatum> {
    build_oscillating_at(0.5, c1, c2, depth)
}

/// Oscillating datum for a general probe point `x₀ > 0` (experimental).
///
/// With `x₀ = 1/2` this reduces to `t₁ = 1, a₁ = 3`,
/// `t = 2(a − 1/2) + 1/2`, `a′ = 3(a − 1/2) + 2`.
pub fn build_oscillating_at(x0: f64, c1: f64, c2: f64, depth: usize) -> Result<OscillatingDatum> {
    if !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
        return Err(Error::Construction(format!(
            "need 0 < c1 < c2, got c1 = {c1}, c2 = {c2}"
        )));
    }
    if depth == 0 {
        return Err(Error::Construction("depth must be at least 1".into()));
    }
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::Construction(format!("probe point must be positive, got {x0}")));
    }
    let f1 = StationaryProfile::new(c1)?;
    let f2 = StationaryProfile::new(c2)?;
    // Time at which (x₀, t) depends only on data in (a + 1/4, next breakpoint).
    let probe_after = |a: f64| 2.0 * (a - x0) + 0.5;
    let arc_end = |a: f64| 3.0 * (a - x0) + x0 + 1.5;

    let a1 = x0 + 2.5;
    let mut breakpoints = vec![0.0, a1];
    let mut probe_times = vec![1.0];
    let mut pieces = vec![Piece {
        lo: 0.0,
        hi: a1,
        shape: Shape::Arc1,
    }];

    for pair in 0..depth {
        let a_flat = *breakpoints.last().expect("nonempty");
        let level = f1.value(a_flat);
        let a_arc2 = roots::bisect_expanding(
            |a| f2.value(a) - level,
            a_flat,
            BRACKET_MAX_FACTOR,
            ROOT_TOL,
        )
        .map_err(|e| Error::Construction(format!("flat segment end after a = {a_flat}: {e}")))?;
        pieces.push(Piece {
            lo: a_flat,
            hi: a_arc2,
            shape: Shape::Flat(level),
        });
        probe_times.push(probe_after(a_arc2));
        let anchor = arc_end(a_arc2);
        pieces.push(Piece {
            lo: a_arc2,
            hi: anchor,
            shape: Shape::Arc2,
        });
        breakpoints.extend([a_arc2, anchor]);

        let (value, slope) = (f2.value(anchor), f2.slope(anchor));
        let a_meet = roots::bisect_expanding(
            |a| f1.value(a) - (value + slope * (a - anchor)),
            anchor,
            BRACKET_MAX_FACTOR,
            ROOT_TOL,
        )
        .map_err(|e| Error::Construction(format!("tangent segment end after a = {anchor}: {e}")))?;
        pieces.push(Piece {
            lo: anchor,
            hi: a_meet,
            shape: Shape::Tangent {
                anchor,
                value,
                slope,
            },
        });
        breakpoints.push(a_meet);

        if pair + 1 < depth {
            probe_times.push(probe_after(a_meet));
            let end = arc_end(a_meet);
            pieces.push(Piece {
                lo: a_meet,
                hi: end,
                shape: Shape::Arc1,
            });
            breakpoints.push(end);
        } else {
            pieces.push(Piece {
                lo: a_meet,
                hi: f64::INFINITY,
                shape: Shape::Arc1,
            });
        }
    }

    let datum = OscillatingDatum {
        c1,
        c2,
        x0,
        depth,
        breakpoints,
        probe_times,
        pieces,
    };
    datum.certify()?;
    Ok(datum)
}

impl OscillatingDatum {
    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `a₀ = 0, a₁, …` up to the start of the final `F₁` tail.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `t₁, …, t_{2·depth}`.
    pub fn probe_times(&self) -> &[f64] {
        &self.probe_times
    }

    pub fn f1(&self) -> StationaryProfile {
        StationaryProfile::new(self.c1).expect("validated")
    }

    pub fn f2(&self) -> StationaryProfile {
        StationaryProfile::new(self.c2).expect("validated")
    }

    /// Limit value of `F(x₀, t_k)`: `F₁(x₀)` for odd `k`, `F₂(x₀)` for even `k`
    /// (`k` counted from 1).
    pub fn probe_target(&self, k: usize) -> f64 {
        if k % 2 == 1 {
            self.f1().value(self.x0)
        } else {
            self.f2().value(self.x0)
        }
    }

    fn piece(&self, x: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.hi < x);
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    fn eval_piece(&self, p: &Piece, x: f64) -> (f64, f64) {
        match p.shape {
            Shape::Arc1 => {
                let f = self.f1();
                (f.value(x), f.slope(x))
            }
            Shape::Arc2 => {
                let f = self.f2();
                (f.value(x), f.slope(x))
            }
            Shape::Flat(v) => (v, 0.0),
            Shape::Tangent {
                anchor,
                value,
                slope,
            } => (value + slope * (x - anchor), slope),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        self.eval_piece(self.piece(x), x).0
    }

    /// Left derivative at breakpoints.
    pub fn slope(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        self.eval_piece(self.piece(x), x).1
    }

    /// Largest relative jump between adjacent pieces.
    pub fn continuity_residual(&self) -> f64 {
        self.pieces
            .windows(2)
            .map(|w| {
                let a = w[0].hi;
                let left = self.eval_piece(&w[0], a).0;
                let right = self.eval_piece(&w[1], a).0;
                (left - right).abs() / left.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `F₀(a)/a^{2/3}` at the ends of `F₁` arcs and of `F₂` arcs, in order.
    pub fn growth_ratios(&self) -> (Vec<f64>, Vec<f64>) {
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for p in &self.pieces {
            if !p.hi.is_finite() {
                continue;
            }
            let r = self.value(p.hi) / p.hi.powf(2.0 / 3.0);
            match p.shape {
                Shape::Arc1 => upper.push(r),
                Shape::Arc2 => lower.push(r),
                _ => {}
            }
        }
        (upper, lower)
    }

    fn certify(&self) -> Result<()> {
        let jump = self.continuity_residual();
        if !(jump <= CONTINUITY_TOL) {
            return Err(Error::Construction(format!(
                "continuity residual {jump:e} exceeds {CONTINUITY_TOL:e}"
            )));
        }
        for p in &self.pieces {
            for x in [p.lo, 0.5 * (p.lo + p.hi.min(p.lo * 4.0 + 1.0))] {
                let s = self.eval_piece(p, x).1;
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Construction(format!("slope {s} outside [0, 1] at x = {x}")));
                }
            }
        }
        if self.breakpoints.windows(2).any(|w| w[1] <= w[0])
            || self.probe_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Construction("breakpoints or probe times not increasing".into()));
        }
        Ok(())
    }
}

/// Serializable description of a catalog datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DatumSpec {
    /// Transform of `δ₁`: `F₀ = 1 − e^{−x}`.
    Subcritical,
    /// `F̄(c·)/c` with `c = 27/(8δ³)`, optionally perturbed.
    Critical {
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perturbation: Option<Perturbation>,
    },
    ExactProfile {
        c: f64,
    },
    /// `F₀ = x` on `[0, 1]`, `1 + (6/5)(x^{5/6} − 1)` beyond.
    Supercritical,
    Oscillating {
        c1: f64,
        c2: f64,
        depth: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    /// `F₀ = x`, the non-sublinear steady state.
    Identity,
    /// Transform of a finite sum of atoms.
    Atomic { atoms: Vec<Atom> },
}

impl DatumSpec {
    /// Parses a catalog name with `key=value` parameters.
    ///
    /// Names: `subcritical`, `critical` (`delta`), `perturbed` (`delta`,
    /// `amplitude`, `ramp`, `cap`), `profile` (`c`) or `profile_c<c>`,
    /// `supercritical`, `oscillating` (`c1`, `c2`, `depth`, `x0`), `identity`.
    pub fn parse(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str, default: Option<f64>| -> Result<f64> {
            params
                .get(k)
                .copied()
                .or(default)
                .ok_or_else(|| Error::Input(format!("datum `{name}` needs parameter `{k}`")))
        };
        if let Some(c) = name.strip_prefix("profile_c") {
            let c: f64 = c
                .parse()
                .map_err(|_| Error::Input(format!("bad profile scale in `{name}`")))?;
            return Ok(DatumSpec::ExactProfile { c });
        }
        Ok(match name {
            "subcritical" => DatumSpec::Subcritical,
            "critical" => DatumSpec::Critical {
                delta: get("delta", None)?,
                perturbation: None,
            },
            "perturbed" => {
                let d = Perturbation::default();
                DatumSpec::Critical {
                    delta: get("delta", Some(0.75))?,
                    perturbation: Some(Perturbation {
                        amplitude: get("amplitude", Some(d.amplitude))?,
                        ramp: get("ramp", Some(d.ramp))?,
                        cap: get("cap", Some(d.cap))?,
                    }),
                }
            }
            "profile" => DatumSpec::ExactProfile {
                c: get("c", Some(1.0))?,
            },
            "supercritical" => DatumSpec::Supercritical,
            "oscillating" => {
                let depth = get("depth", Some(2.0))?;
                if depth < 1.0 || depth.fract() != 0.0 {
                    return Err(Error::Input(format!("depth must be a positive integer, got {depth}")));
                }
                DatumSpec::Oscillating {
                    c1: get("c1", Some(1.0))?,
                    c2: get("c2", Some(8.0))?,
                    depth: depth as usize,
                    x0: params.get("x0").copied(),
                }
            }
            "identity" => DatumSpec::Identity,
            other => return Err(Error::Input(format!("unknown datum `{other}`"))),
        })
    }

    pub fn build(&self) -> Result<InitialDatum> {
        match self {
            DatumSpec::Subcritical => Ok(make_subcritical()),
            DatumSpec::Critical {
                delta,
                perturbation,
            } => make_critical(*delta, *perturbation),
            DatumSpec::ExactProfile { c } => make_exact_profile(*c),
            DatumSpec::Supercritical => Ok(make_supercritical()),
            DatumSpec::Oscillating { c1, c2, depth, x0 } => {
                let osc = build_oscillating_at(x0.unwrap_or(0.5), *c1, *c2, *depth)?;
                Ok(InitialDatum::oscillating(osc))
            }
            DatumSpec::Identity => Ok(make_identity()),
            DatumSpec::Atomic { atoms } => make_atomic(atoms.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Atomic(Vec<Atom>),
    Profile(StationaryProfile),
    Perturbed(StationaryProfile, Perturbation),
    SupercriticalPower,
    Oscillating(Box<OscillatingDatum>),
    Identity,
}

/// Analytically evaluable initial datum with its regime tag.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDatum {
    spec: DatumSpec,
    repr: Repr,
    regime: Regime,
}

pub fn make_subcritical() -> InitialDatum {
    InitialDatum {
        spec: DatumSpec::Subcritical,
        repr: Repr::Atomic(vec![Atom {
            size: 1.0,
            weight: 1.0,
        }]),
        regime: Regime::Subcritical,
    }
}

/// Transform of a finite atomic measure; any finite set of atoms is subcritical.
pub fn make_atomic(atoms: Vec<Atom>) -> Result<InitialDatum> {
    let mu = SizeMeasure::from_atoms(atoms)?;
    Ok(InitialDatum {
        spec: DatumSpec::Atomic {
            atoms: mu.atoms().to_vec(),
        },
        repr: Repr::Atomic(mu.atoms().to_vec()),
        regime: Regime::Subcritical,
    })
}

pub fn make_exact_profile(c: f64) -> Result<InitialDatum> {
    let p = StationaryProfile::new(c)?;
    Ok(InitialDatum {
        spec: DatumSpec::ExactProfile { c },
        repr: Repr::Profile(p),
        regime: Regime::Critical { delta: p.growth() },
    })
}

/// `F̄(c·)/c` with `c = 27/(8δ³)`, plus an optional corridor perturbation.
pub fn make_critical(delta: f64, perturbation: Option<Perturbation>) -> Result<InitialDatum> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Construction(format!("delta must be positive, got {delta}")));
    }
    let p = StationaryProfile::new(scale_from_growth(delta))?;
    let repr = match perturbation {
        None => Repr::Profile(p),
        Some(h) => {
            if !(h.ramp > 0.0 && h.cap >= 0.0 && h.cap.is_finite()) {
                return Err(Error::Construction(format!(
                    "corridor needs ramp > 0 and finite cap ≥ 0, got ramp {}, cap {}",
                    h.ramp, h.cap
                )));
            }
            if !(h.amplitude.abs() <= 1.0) {
                return Err(Error::Construction(format!(
                    "amplitude {} leaves the corridor",
                    h.amplitude
                )));
            }
            // The shape settles within a few multiples of cap/ramp.
            let span = 60.0 * h.cap / h.ramp;
            let samples = 6000;
            for k in 0..=samples {
                let x = span * k as f64 / samples as f64;
                let s = p.slope(x) + h.slope(x);
                if !(-1e-15..=1.0 + 1e-15).contains(&s) {
                    return Err(Error::Construction(format!(
                        "perturbed slope {s} outside [0, 1] at x = {x}"
                    )));
                }
            }
            Repr::Perturbed(p, h)
        }
    };
    Ok(InitialDatum {
        spec: DatumSpec::Critical {
            delta,
            perturbation,
        },
        repr,
        regime: Regime::Critical { delta },
    })
}

pub fn make_supercritical() -> InitialDatum {
    InitialDatum {
        spec: DatumSpec::Supercritical,
        repr: Repr::SupercriticalPower,
        regime: Regime::Supercritical,
    }
}

pub fn make_identity() -> InitialDatum {
    InitialDatum {
        spec: DatumSpec::Identity,
        repr: Repr::Identity,
        regime: Regime::Supercritical,
    }
}

impl InitialDatum {
    pub fn oscillating(osc: OscillatingDatum) -> Self {
        InitialDatum {
            spec: DatumSpec::Oscillating {
                c1: osc.c1,
                c2: osc.c2,
                depth: osc.depth,
                x0: (osc.x0 != 0.5).then_some(osc.x0),
            },
            repr: Repr::Oscillating(Box::new(osc)),
            regime: Regime::Indeterminate,
        }
    }

    pub fn spec(&self) -> &DatumSpec {
        &self.spec
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn as_oscillating(&self) -> Option<&OscillatingDatum> {
        match &self.repr {
            Repr::Oscillating(o) => Some(o),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.repr, Repr::Identity)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match &self.repr {
            Repr::Atomic(atoms) => atoms.iter().map(|a| a.weight * phi(x, a.size)).sum(),
            Repr::Profile(p) => p.value(x),
            Repr::Perturbed(p, h) => p.value(x) + h.value(x),
            Repr::SupercriticalPower => {
                if x <= 1.0 {
                    x
                } else {
                    1.0 + 1.2 * (x.powf(5.0 / 6.0) - 1.0)
                }
            }
            Repr::Oscillating(o) => o.value(x),
            Repr::Identity => x,
        }
    }

    /// Derivative; the left value at kinks.
    pub fn eval_slope(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match &self.repr {
            Repr::Atomic(atoms) => atoms
                .iter()
                .map(|a| a.weight * a.size * (-a.size * x).exp())
                .sum(),
            Repr::Profile(p) => p.slope(x),
            Repr::Perturbed(p, h) => p.slope(x) + h.slope(x),
            Repr::SupercriticalPower => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-1.0 / 6.0)
                }
            }
            Repr::Oscillating(o) => o.slope(x),
            Repr::Identity => 1.0,
        }
    }
}

impl InitialProfile for InitialDatum {
    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x))
    }

    fn slope(&self, x: f64) -> Result<f64> {
        Ok(self.eval_slope(x))
    }

    fn first_moment(&self) -> Result<f64> {
        Ok(self.eval_slope(0.0))
    }

    fn regime_hint(&self) -> Option<Regime> {
        Some(self.regime)
    }
}

/// The sublinear catalog used by cross-solver and admissibility suites.
pub fn catalog() -> Vec<InitialDatum> {
    vec![
        make_subcritical(),
        make_exact_profile(1.0).expect("valid"),
        make_critical(0.75, Some(Perturbation::default())).expect("valid"),
        make_supercritical(),
        InitialDatum::oscillating(build_oscillating(1.0, 8.0, 2).expect("valid")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{check_admissible, AdmissibilityOptions};
    use crate::stationary::bar_f;

    #[test]
    fn subcritical_datum() {
        let d = make_subcritical();
        assert!((d.eval(1.0) - (1.0 - (-1f64).exp())).abs() < 1e-16);
        assert!(d.eval(1e6) / 1e4 <= 1e-3);
        assert_eq!(d.eval_slope(0.0), 1.0);
        assert_eq!(d.regime(), Regime::Subcritical);
    }

    #[test]
    fn critical_scales() {
        let d = make_critical(1.5, None).unwrap();
        assert!(matches!(d.repr, Repr::Profile(p) if (p.c() - 1.0).abs() < 1e-14));
        let d = make_critical(0.75, None).unwrap();
        assert!(matches!(d.repr, Repr::Profile(p) if (p.c() - 8.0).abs() < 1e-12));
        assert!(make_critical(0.0, None).is_err());
    }

    #[test]
    fn perturbed_critical_stays_in_corridor() {
        let p = StationaryProfile::new(8.0).unwrap();
        for a in [0.5, -0.5] {
            let h = Perturbation::ramp_half(a);
            let d = make_critical(0.75, Some(h)).unwrap();
            for k in 0..2000 {
                let x = k as f64 * 0.01 + 1e-3 * (k * k) as f64;
                assert!((d.eval(x) - p.value(x)).abs() <= h.corridor(x) + 1e-15);
                let s = d.eval_slope(x);
                assert!((0.0..=1.0).contains(&s), "slope {s} at {x}");
            }
            assert_eq!(d.eval_slope(0.0), 1.0);
            assert!(matches!(
                classify_regime(|x| Ok(d.eval(x))).unwrap(),
                Regime::Critical { delta } if (delta / 0.75 - 1.0).abs() < 0.01
            ));
        }
        assert!(make_critical(0.75, Some(Perturbation::ramp_half(1.5))).is_err());
        // Steep ramp with a large negative amplitude drives the slope below 0.
        let steep = Perturbation {
            amplitude: -1.0,
            ramp: 4.0,
            cap: 1.0,
        };
        assert!(matches!(make_critical(0.75, Some(steep)), Err(Error::Construction(_))));
    }

    #[test]
    fn supercritical_datum() {
        let d = make_supercritical();
        assert_eq!(d.eval(1.0), 1.0);
        let x = 64.0;
        assert!((d.eval(x) / x.powf(2.0 / 3.0) - 38.2 / 16.0).abs() < 1e-13);
        assert!(d.eval(1e9) / 1e9 < 0.05);
        assert!(d.eval(1e9) / 1e9 < d.eval(1e6) / 1e6);
        assert_eq!(classify_regime(|x| Ok(d.eval(x))).unwrap(), Regime::Supercritical);
    }

    #[test]
    fn catalog_vanishes_at_origin() {
        for d in catalog().into_iter().chain([make_identity()]) {
            assert_eq!(d.eval(0.0), 0.0, "{:?}", d.spec());
        }
        let p = StationaryProfile::new(3.0).unwrap();
        let d = make_exact_profile(3.0).unwrap();
        for x in [0.1, 1.0, 17.0] {
            assert!((d.eval(x) - p.value(x)).abs() <= 1e-14);
        }
    }

    #[test]
    fn catalog_is_admissible() {
        for d in catalog() {
            let r = check_admissible(&d, &AdmissibilityOptions::default());
            assert!(r.admissible, "{:?}: {:?}", d.spec(), r.violations);
        }
        let r = check_admissible(&make_identity(), &AdmissibilityOptions::default());
        assert!(!r.admissible);
        assert!(r.violations.iter().all(|v| v.contains("not sublinear")));
    }

    #[test]
    fn oscillating_first_steps() {
        let o = build_oscillating(1.0, 8.0, 2).unwrap();
        let a = o.breakpoints();
        assert_eq!(a[0], 0.0);
        assert_eq!(a[1], 3.0);
        assert_eq!(o.probe_times()[0], 1.0);
        assert_eq!(o.probe_times().len(), 4);
        // a₂ solves F̄(8a₂)/8 = F̄(3); oracle: plain bisection on [3, 100].
        let target = bar_f(3.0).unwrap();
        let a2 = roots::bisect(|a| bar_f(8.0 * a).unwrap() / 8.0 - target, 3.0, 100.0, 1e-15).unwrap();
        assert!((a[2] - a2).abs() < 1e-10);
        assert!((o.probe_times()[1] - (2.0 * (a2 - 0.5) + 0.5)).abs() < 1e-9);
        assert!((a[3] - (3.0 * (a2 - 0.5) + 2.0)).abs() < 1e-9);
        // Constant on [a₁, a₂].
        for x in [3.0, 4.0, a2 - 1e-9] {
            assert_eq!(o.value(x), target);
        }
        assert!(o.continuity_residual() <= CONTINUITY_TOL);
        assert!((o.probe_target(1) - bar_f(0.5).unwrap()).abs() < 1e-15);
        assert!((o.probe_target(2) - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn oscillating_segments_follow_the_arcs() {
        let o = build_oscillating(1.0, 8.0, 3).unwrap();
        let a = o.breakpoints();
        let (f1, f2) = (o.f1(), o.f2());
        for i in 0..3 {
            let (lo, hi) = (a[4 * i], a[4 * i + 1]);
            // Left values at a₄ᵢ belong to the preceding tangent segment.
            for k in 1..=10 {
                let x = lo + (hi - lo) * k as f64 / 10.0;
                assert_eq!(o.value(x), f1.value(x));
            }
            let (lo, hi) = (a[4 * i + 2], a[4 * i + 3]);
            let mid = 0.5 * (lo + hi);
            assert_eq!(o.value(mid), f2.value(mid));
            // Tangent segment rejoins F₁.
            let meet = a[4 * i + 4];
            assert!((o.value(meet) - f1.value(meet)).abs() <= 1e-12 * f1.value(meet));
        }
        // Left slope at a kink.
        assert_eq!(o.slope(a[1]), f1.slope(a[1]));
        assert_eq!(o.slope(a[1] + 1e-9), 0.0);
    }

    #[test]
    fn oscillating_prefix_stability() {
        let short = build_oscillating(1.0, 8.0, 1).unwrap();
        let long = build_oscillating(1.0, 8.0, 3).unwrap();
        let n = short.breakpoints().len();
        assert_eq!(short.breakpoints(), &long.breakpoints()[..n]);
        assert_eq!(short.probe_times(), &long.probe_times()[..short.probe_times().len()]);
    }

    #[test]
    fn oscillating_growth_bounds() {
        let o = build_oscillating(1.0, 8.0, 4).unwrap();
        let (upper, lower) = o.growth_ratios();
        let (hi, lo) = (1.5, 1.5 / 2.0);
        assert!((upper.last().unwrap() / hi - 1.0).abs() < 0.02, "{upper:?}");
        assert!((lower.last().unwrap() / lo - 1.0).abs() < 0.02, "{lower:?}");
    }

    #[test]
    fn oscillating_rejects_bad_scales() {
        assert!(matches!(build_oscillating(8.0, 1.0, 1), Err(Error::Construction(_))));
        assert!(matches!(build_oscillating(1.0, 8.0, 0), Err(Error::Construction(_))));
    }

    #[test]
    fn spec_round_trip_through_names() {
        let mut params = BTreeMap::new();
        params.insert("delta".to_string(), 0.75);
        assert_eq!(
            DatumSpec::parse("critical", &params).unwrap(),
            DatumSpec::Critical {
                delta: 0.75,
                perturbation: None
            }
        );
        assert_eq!(
            DatumSpec::parse("profile_c1", &BTreeMap::new()).unwrap(),
            DatumSpec::ExactProfile { c: 1.0 }
        );
        assert!(DatumSpec::parse("nope", &BTreeMap::new()).is_err());
        for d in catalog() {
            let json = serde_json::to_string(d.spec()).unwrap();
            let back: DatumSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(&back, d.spec());
            assert_eq!(back.build().unwrap(), d);
        }
    }
}
