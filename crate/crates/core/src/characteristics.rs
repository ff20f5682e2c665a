//! Characteristics of the `m = 1` equation and the dependence geometry
//! that follows from their bounded speeds.
//!
//! Along a characteristic,
//!
//! ```text
//! Ẋ = P − 3/2,   Ṗ = Z/X² − P/X,   Ż = P²/2 − Z/X,
//! ```
//!
//! and `F(X(s), s) = Z(s)` until characteristics cross. For slopes in
//! `[0, 1]` the speed lies in `[−3/2, −1/2]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trajectories stop once `X` falls to this level.
pub const X_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicState {
    pub x: f64,
    pub p: f64,
    pub z: f64,
    pub s: f64,
}

impl CharacteristicState {
    fn rhs(x: f64, p: f64, z: f64) -> [f64; 3] {
        let inv = 1.0 / x;
        [p - 1.5, z * inv * inv - p * inv, 0.5 * p * p - z * inv]
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `true` if `self ⊆ other`.
    pub fn is_within(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<CharacteristicState>,
    pub dt: f64,
    /// `X` reached [`X_FLOOR`] before the horizon.
    pub hit_barrier: bool,
}

impl Trajectory {
    pub fn last(&self) -> &CharacteristicState {
        self.states.last().expect("trajectory has a start state")
    }
}

/// Classical RK4 integration of the characteristic system up to time `t`.
///
/// The step is `t / ⌈t/dt⌉`, so the horizon is hit exactly. A trajectory
/// that would reach the barrier within the next two steps is truncated with
/// `hit_barrier`; a stage leaving `X > 0` earlier than that means `dt` is
/// too large and is reported as a numeric error.
pub fn integrate_char(x: f64, p0: f64, z0: f64, t: f64, dt: f64) -> Result<Trajectory> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("start position must be positive, got {x}")));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Domain(format!("start slope must lie in [0, 1], got {p0}")));
    }
    if !(0.0..=x).contains(&z0) {
        return Err(Error::Domain(format!("start value must lie in [0, {x}], got {z0}")));
    }
    if !(t >= 0.0 && t.is_finite()) || !(dt > 0.0) {
        return Err(Error::Domain(format!("need t ≥ 0 and dt > 0, got t = {t}, dt = {dt}")));
    }
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut states = Vec::with_capacity(steps + 1);
    let mut cur = CharacteristicState {
        x,
        p: p0,
        z: z0,
        s: 0.0,
    };
    states.push(cur);
    let mut hit_barrier = false;
    for k in 1..=steps {
        match rk4_step(&cur, h) {
            Some(next) if next.x > X_FLOOR => {
                cur = CharacteristicState {
                    s: k as f64 * h,
                    ..next
                };
                states.push(cur);
            }
            outcome => {
                let velocity = cur.p - 1.5;
                if outcome.is_some() || cur.x + 2.0 * h * velocity <= 0.0 {
                    hit_barrier = true;
                    break;
                }
                return Err(Error::Numeric(format!(
                    "RK4 stage left X > 0 from X = {} at s = {} with dt = {h}",
                    cur.x, cur.s
                )));
            }
        }
    }
    Ok(Trajectory {
        states,
        dt: h,
        hit_barrier,
    })
}

/// One RK4 step; `None` if an intermediate stage reaches `X ≤ 0`.
fn rk4_step(c: &CharacteristicState, h: f64) -> Option<CharacteristicState> {
    let y = [c.x, c.p, c.z];
    let f = |y: [f64; 3]| -> Option<[f64; 3]> {
        (y[0] > 0.0).then(|| CharacteristicState::rhs(y[0], y[1], y[2]))
    };
    let add = |y: [f64; 3], k: [f64; 3], a: f64| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]];
    let k1 = f(y)?;
    let k2 = f(add(y, k1, 0.5 * h))?;
    let k3 = f(add(y, k2, 0.5 * h))?;
    let k4 = f(add(y, k3, h))?;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Some(CharacteristicState {
        x: out[0],
        p: out[1],
        z: out[2],
        s: c.s + h,
    })
}

/// Initial data that can influence `F(x₀, t₀)`: `[x₀ + t₀/2, x₀ + 3t₀/2]`.
pub fn domain_of_dependence(x0: f64, t0: f64) -> Result<Interval> {
    if !(x0 >= 0.0 && t0 >= 0.0) {
        return Err(Error::Domain(format!("need x0 ≥ 0 and t0 ≥ 0, got ({x0}, {t0})")));
    }
    Interval::new(x0 + 0.5 * t0, x0 + 1.5 * t0)
}

/// Times at which data at `x` can influence `F(x₀, ·)`: `[2(x − x₀)/3, 2(x − x₀)]`.
pub fn range_of_influence(x: f64, x0: f64) -> Result<Interval> {
    if !(x0 >= 0.0 && x > x0) {
        return Err(Error::Domain(format!("need x > x0 ≥ 0, got x = {x}, x0 = {x0}")));
    }
    let d = x - x0;
    Interval::new(2.0 * d / 3.0, 2.0 * d)
}

/// First time at which two trajectories swap their initial `X` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    /// Indices into the input list, left start first.
    pub pair: (usize, usize),
}

/// Earliest inversion of the `X` ordering on the shared time grid.
///
/// Truncated trajectories take part only while they exist.
pub fn crossing_detect(trajectories: &[Trajectory]) -> Result<Option<Crossing>> {
    let Some(reference) = trajectories.iter().max_by_key(|t| t.states.len()) else {
        return Ok(None);
    };
    for (i, tr) in trajectories.iter().enumerate() {
        let same = tr
            .states
            .iter()
            .zip(&reference.states)
            .all(|(a, b)| (a.s - b.s).abs() <= 1e-12 * b.s.abs().max(1.0));
        if !same || (tr.states.len() > 1 && (tr.dt - reference.dt).abs() > 1e-12 * reference.dt) {
            return Err(Error::Input(format!("trajectory {i} uses a different time grid")));
        }
    }
    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    order.sort_by(|&a, &b| trajectories[a].states[0].x.total_cmp(&trajectories[b].states[0].x));
    for k in 1..reference.states.len() {
        let alive: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| k < trajectories[i].states.len())
            .collect();
        for w in alive.windows(2) {
            if trajectories[w[0]].states[k].x > trajectories[w[1]].states[k].x {
                return Ok(Some(Crossing {
                    time: reference.states[k].s,
                    pair: (w[0], w[1]),
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::build_oscillating;
    use crate::stationary::{bar_f, dbar_f};

    fn on_profile(x: f64, t: f64, dt: f64) -> Trajectory {
        integrate_char(x, dbar_f(x).unwrap(), bar_f(x).unwrap(), t, dt).unwrap()
    }

    fn z_drift(tr: &Trajectory) -> f64 {
        tr.states
            .iter()
            .map(|s| (s.z - bar_f(s.x).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn stationary_characteristic_stays_on_profile() {
        for x in [1.0, 2.0, 5.0] {
            let tr = on_profile(x, 1.0, 1e-4);
            assert!(!tr.hit_barrier);
            assert!(z_drift(&tr) <= 1e-6, "{}", z_drift(&tr));
        }
    }

    #[test]
    fn identity_characteristic() {
        let tr = integrate_char(4.0, 1.0, 4.0, 2.0, 1e-3).unwrap();
        for s in &tr.states {
            assert!((s.p - 1.0).abs() < 1e-12);
            assert!((s.z - s.x).abs() < 1e-12);
            assert!((s.x - (4.0 - 0.5 * s.s)).abs() < 1e-12);
        }
    }

    #[test]
    fn displacement_bounds() {
        for (x, p, z) in [(3.0, 0.0, 1.0), (3.0, 1.0, 3.0), (6.0, 0.4, 2.0), (2.0, 0.7, 0.1)] {
            let tr = integrate_char(x, p, z, 1.0, 1e-3).unwrap();
            let moved = x - tr.last().x;
            assert!((0.5 - 1e-9..=1.5 + 1e-9).contains(&moved), "{moved}");
        }
    }

    #[test]
    fn barrier_truncates() {
        let tr = integrate_char(0.5, 0.0, 0.0, 2.0, 1e-3).unwrap();
        assert!(tr.hit_barrier);
        assert!(tr.last().s < 0.5);
        assert!(integrate_char(0.0, 0.5, 0.0, 1.0, 1e-3).is_err());
        assert!(integrate_char(1.0, 1.5, 0.5, 1.0, 1e-3).is_err());
        assert!(integrate_char(1.0, 0.5, 1.5, 1.0, 1e-3).is_err());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let coarse = z_drift(&on_profile(2.0, 1.0, 0.1));
        let fine = z_drift(&on_profile(2.0, 1.0, 0.05));
        let ratio = coarse / fine;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} ({coarse:e}, {fine:e})");
    }

    #[test]
    fn dependence_and_influence() {
        assert_eq!(domain_of_dependence(0.5, 1.0).unwrap(), Interval { lo: 1.0, hi: 2.0 });
        assert_eq!(domain_of_dependence(0.7, 0.0).unwrap(), Interval { lo: 0.7, hi: 0.7 });
        assert_eq!(domain_of_dependence(0.0, 2.0).unwrap(), Interval { lo: 1.0, hi: 3.0 });
        let r = range_of_influence(3.0, 0.5).unwrap();
        assert!((r.lo - 5.0 / 3.0).abs() < 1e-15 && r.hi == 5.0);
        assert!(range_of_influence(1e-12, 0.0).unwrap().width() < 1e-11);
        assert!(matches!(range_of_influence(0.5, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn smooth_profile_has_no_crossing() {
        let a = on_profile(2.0, 1.0, 1e-3);
        let b = on_profile(3.0, 1.0, 1e-3);
        assert_eq!(crossing_detect(&[a.clone(), b]).unwrap(), None);
        assert_eq!(crossing_detect(&[a]).unwrap(), None);
        assert_eq!(crossing_detect(&[]).unwrap(), None);
    }

    #[test]
    fn flat_segment_focuses_onto_arc() {
        let o = build_oscillating(1.0, 8.0, 1).unwrap();
        let (xl, xr) = (2.9, 3.1);
        let left = integrate_char(xl, o.slope(xl), o.value(xl), 1.0, 1e-3).unwrap();
        let right = integrate_char(xr, o.slope(xr), o.value(xr), 1.0, 1e-3).unwrap();
        assert_eq!(right.states[0].p, 0.0);
        let c = crossing_detect(&[right, left]).unwrap().expect("crossing");
        assert_eq!(c.pair, (1, 0));
        assert!(c.time > 0.0 && c.time < 1.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = on_profile(2.0, 1.0, 1e-3);
        let b = on_profile(3.0, 1.0, 2e-3);
        assert!(matches!(crossing_detect(&[a, b]), Err(Error::Input(_))));
    }
}
