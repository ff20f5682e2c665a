//! Semi-Lagrangian solver built on the dynamic programming principle for the
//! value function
//!
//! ```text
//! V(x, t) = inf_γ ∫₀^{t∧τ} ½ e^{−∫₀ˢ dλ/γ} (−γ̇ + 3/2)² ds
//!                + e^{−∫₀^{t∧τ} dλ/γ} G(γ(t∧τ), t − t∧τ),
//! ```
//!
//! with `γ(0) = x`, `τ` the hitting time of 0, `G(0, ·) = 0` and
//! `G(·, 0) = F₀`. Paths are straight over one step: `γ(s) = x + qs`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::initial_data::InitialDatum;

/// Value fields share the grid representation of the finite-difference solver.
pub type ValueField = GridFunction;

/// Uniform set of path slopes `q_min, q_min + dq, …, q_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub dq: f64,
}

impl Default for ControlGrid {
    fn default() -> Self {
        Self {
            q_min: 0.0,
            q_max: 3.0,
            dq: 0.05,
        }
    }
}

impl ControlGrid {
    /// Optimal slopes `3/2 − ∂ₓF` lie in `[1/2, 3/2]`; the range must cover them.
    pub fn new(q_min: f64, q_max: f64, dq: f64) -> Result<Self> {
        if !(dq > 0.0 && dq.is_finite()) {
            return Err(Error::Config(format!("dq must be positive, got {dq}")));
        }
        if !(q_min <= 0.5 && q_max >= 1.5 && q_max.is_finite() && q_min.is_finite()) {
            return Err(Error::Config(format!(
                "control range [{q_min}, {q_max}] must contain [1/2, 3/2]"
            )));
        }
        Ok(Self { q_min, q_max, dq })
    }

    /// A single fixed slope, for diagnostics.
    pub fn single(q: f64) -> Self {
        Self {
            q_min: q,
            q_max: q,
            dq: 1.0,
        }
    }

    pub fn slopes(&self) -> Vec<f64> {
        let k = ((self.q_max - self.q_min) / self.dq + 1e-9).floor() as usize;
        let mut q: Vec<f64> = (0..=k).map(|i| self.q_min + i as f64 * self.dq).collect();
        if self.q_max - q[k] > 1e-9 * self.dq {
            q.push(self.q_max);
        }
        q
    }

    /// Largest `|q|`.
    pub fn max_abs(&self) -> f64 {
        self.q_min.abs().max(self.q_max.abs())
    }
}

/// `∫₀ʰ dλ/(x + qλ)` for a path that stays positive.
pub fn path_discount(x: f64, q: f64, h: f64) -> f64 {
    if q == 0.0 {
        h / x
    } else {
        (q * h / x).ln_1p() / q
    }
}

/// Discount exponent `D` and `∫₀^{h∧τ} e^{−D(s)} ds` along `γ(s) = x + qs`.
///
/// With `e^{−D(s)} = (1 + qs/x)^{−1/q}` the integral is
/// `x·(e^{(q−1)D(h)} − 1)/(q − 1)`; when the path reaches 0 within the step
/// `D = ∞` and the integral is `x/(1 − q)`.
fn discount_and_weight(x: f64, q: f64, h: f64) -> (f64, f64) {
    if x + q * h <= 0.0 {
        return (f64::INFINITY, x / (1.0 - q));
    }
    let d = path_discount(x, q, h);
    let a = (q - 1.0) * d;
    let weight = if a.abs() < 1e-8 {
        x * d * (1.0 + 0.5 * a)
    } else {
        x * a.exp_m1() / (q - 1.0)
    };
    (d, weight)
}

/// Time-independent coefficients of one DPP step on a fixed grid.
#[derive(Debug, Clone)]
pub struct DppTable {
    grid: Grid,
    h: f64,
    slopes: Vec<f64>,
    /// Per node and control: running cost, discount, left index, weight.
    cost: Vec<f64>,
    disc: Vec<f64>,
    index: Vec<u32>,
    frac: Vec<f64>,
}

impl DppTable {
    pub fn new(grid: Grid, h: f64, controls: &ControlGrid) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("step must be positive, got {h}")));
        }
        let slopes = controls.slopes();
        let nq = slopes.len();
        let n = grid.len();
        let dx = grid.dx();
        let mut cost = vec![0.0; n * nq];
        let mut disc = vec![0.0; n * nq];
        let mut index = vec![0u32; n * nq];
        let mut frac = vec![0.0; n * nq];
        for j in 1..n {
            let x = grid.x(j);
            for (k, &q) in slopes.iter().enumerate() {
                let at = j * nq + k;
                let (d, w) = discount_and_weight(x, q, h);
                cost[at] = 0.5 * (1.5 - q) * (1.5 - q) * w;
                disc[at] = (-d).exp();
                let y = x + q * h;
                if y <= 0.0 {
                    continue;
                }
                let pos = (y / dx).min((n - 1) as f64);
                let i = (pos.floor() as usize).min(n - 2);
                index[at] = i as u32;
                frac[at] = pos - i as f64;
            }
        }
        Ok(Self {
            grid,
            h,
            slopes,
            cost,
            disc,
            index,
            frac,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Discount factor `e^{−∫dλ/γ}` used at node `j` for control `k`.
    pub fn discount_factor(&self, j: usize, k: usize) -> f64 {
        self.disc[j * self.slopes.len() + k]
    }

    /// Applies one step; writes the minimizing control index per node into `argmin`.
    pub fn apply(&self, v: &[f64], out: &mut [f64], argmin: &mut [u16]) {
        let nq = self.slopes.len();
        debug_assert_eq!(v.len(), self.grid.len());
        out[0] = 0.0;
        argmin[0] = 0;
        for j in 1..v.len() {
            let base = j * nq;
            let mut best = f64::INFINITY;
            let mut best_k = 0;
            for k in 0..nq {
                let at = base + k;
                let i = self.index[at] as usize;
                let w = self.frac[at];
                let interp = v[i] + w * (v[i + 1] - v[i]);
                let cand = self.cost[at] + self.disc[at] * interp;
                if cand < best {
                    best = cand;
                    best_k = k;
                }
            }
            out[j] = best;
            argmin[j] = best_k as u16;
        }
    }
}

/// One dynamic-programming step of length `h`.
///
/// Queries beyond `x = L` use the last node's value; the result's trusted
/// region shrinks by `max(q_max, 0)·h` to account for that.
pub fn dpp_update(v: &ValueField, h: f64, controls: &ControlGrid) -> Result<ValueField> {
    let limit = v.grid.dx() / controls.max_abs();
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt: h, limit });
    }
    let table = DppTable::new(v.grid, h, controls)?;
    let mut out = vec![0.0; v.values.len()];
    let mut argmin = vec![0; v.values.len()];
    table.apply(&v.values, &mut out, &mut argmin);
    let mut g = GridFunction::new(v.grid, out, v.time + h)?;
    g.trusted_xmax = v.trusted_xmax - controls.q_max.max(0.0) * h;
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlConfig {
    pub m: f64,
    pub length: f64,
    pub n: usize,
    pub final_time: f64,
    pub record_times: Vec<f64>,
    pub controls: ControlGrid,
    /// Upper bound on the step; defaults to `dx / max|q|`.
    pub h_max: Option<f64>,
    pub observe_xmax: f64,
}

impl Default for SlConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            length: 20.0,
            n: 2001,
            final_time: 1.0,
            record_times: Vec::new(),
            controls: ControlGrid::default(),
            h_max: None,
            observe_xmax: 0.0,
        }
    }
}

impl SlConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.length, self.n)
    }

    pub fn records(&self) -> Vec<f64> {
        if self.record_times.is_empty() {
            vec![self.final_time]
        } else {
            self.record_times.clone()
        }
    }

    pub fn trusted_xmax(&self, t: f64) -> f64 {
        self.length - self.controls.q_max.max(0.0) * t
    }

    pub fn step_limit(&self) -> Result<f64> {
        let limit = self.grid()?.dx() / self.controls.max_abs();
        Ok(self.h_max.map_or(limit, |h| h.min(limit)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m != 1.0 {
            return Err(Error::Unsupported(format!(
                "the value-function solver covers m = 1 only, got m = {}",
                self.m
            )));
        }
        self.grid().map_err(|e| Error::Config(e.to_string()))?;
        ControlGrid::new(self.controls.q_min, self.controls.q_max, self.controls.dq)?;
        if let Some(h) = self.h_max {
            if !(h > 0.0) {
                return Err(Error::Config(format!("step bound must be positive, got {h}")));
            }
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config(format!("final time must be ≥ 0, got {}", self.final_time)));
        }
        let rec = self.records();
        if rec.windows(2).any(|w| w[1] <= w[0])
            || rec.iter().any(|&t| !(0.0..=self.final_time).contains(&t))
        {
            return Err(Error::Config(format!(
                "record times must increase strictly within [0, {}]",
                self.final_time
            )));
        }
        let trusted = self.trusted_xmax(self.final_time);
        if trusted < self.observe_xmax {
            return Err(Error::Config(format!(
                "L = {} too small: trusted region ends at {trusted} at T = {}, window needs {}",
                self.length, self.final_time, self.observe_xmax
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlRun {
    pub frames: Vec<ValueField>,
    pub steps: usize,
    pub h: Vec<f64>,
    /// Minimizing slope per node in the last step.
    pub argmin_slope: Vec<f64>,
}

impl SlRun {
    pub fn last(&self) -> &ValueField {
        self.frames.last().expect("at least one frame")
    }
}

pub fn solve_sl(datum: &InitialDatum, cfg: &SlConfig) -> Result<SlRun> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    solve_sl_from(GridFunction::sample(grid, |x| datum.eval(x)), cfg)
}

/// Iterates the DPP from `v0` to every record time.
///
/// Each record interval uses the largest uniform step not exceeding the
/// step limit.
pub fn solve_sl_from(v0: ValueField, cfg: &SlConfig) -> Result<SlRun> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if v0.grid != grid {
        return Err(Error::Config("initial data lives on a different grid".into()));
    }
    let h_limit = cfg.step_limit()?;
    let mut cur = v0.values.clone();
    cur[0] = 0.0;
    let mut next = cur.clone();
    let mut argmin = vec![0u16; cur.len()];
    let mut t = 0.0;
    let mut frames = Vec::new();
    let mut steps = 0;
    let mut hs = Vec::new();
    let mut table: Option<DppTable> = None;
    let slopes = cfg.controls.slopes();
    for t_rec in cfg.records() {
        let remaining = t_rec - t;
        if remaining > 0.0 {
            let k = (remaining / h_limit - 1e-9).ceil().max(1.0);
            let h = remaining / k;
            if table.as_ref().is_none_or(|tb| (tb.h() - h).abs() > 1e-15 * h) {
                table = Some(DppTable::new(grid, h, &cfg.controls)?);
            }
            let tb = table.as_ref().expect("built above");
            for _ in 0..k as usize {
                tb.apply(&cur, &mut next, &mut argmin);
                std::mem::swap(&mut cur, &mut next);
                steps += 1;
            }
            if cur.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite value at t = {t_rec}")));
            }
            hs.push(h);
        }
        t = t_rec;
        let mut frame = GridFunction::new(grid, cur.clone(), t_rec)?;
        frame.trusted_xmax = cfg.trusted_xmax(t_rec);
        frames.push(frame);
    }
    Ok(SlRun {
        frames,
        steps,
        h: hs,
        argmin_slope: argmin.iter().map(|&k| slopes[k as usize]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{make_exact_profile, make_identity, make_subcritical};
    use crate::quadrature::integrate;
    use crate::stationary::StationaryProfile;

    #[test]
    fn control_grid_covers_range() {
        let g = ControlGrid::default();
        let q = g.slopes();
        assert_eq!(q.len(), 61);
        assert_eq!(q[0], 0.0);
        assert!((q[60] - 3.0).abs() < 1e-12);
        assert!(q.iter().any(|&v| (v - 0.5).abs() < 1e-12));
        assert!(q.iter().any(|&v| (v - 1.5).abs() < 1e-12));
        assert!(ControlGrid::new(1.0, 3.0, 0.1).is_err());
        assert!(ControlGrid::new(-3.0, 1.0, 0.1).is_err());
        assert_eq!(ControlGrid::new(0.0, 2.0, 0.3).unwrap().slopes().last(), Some(&2.0));
    }

    #[test]
    fn discount_matches_closed_form() {
        // e^{−∫₀ʰ dλ/(x + 3λ/2)} = (3h/(2x) + 1)^{−2/3}.
        for (x, h) in [(1.0, 0.01), (0.05, 0.01), (7.0, 0.3)] {
            let d = (-path_discount(x, 1.5, h)).exp();
            let exact = (1.5 * h / x + 1.0f64).powf(-2.0 / 3.0);
            assert!((d - exact).abs() <= 1e-12);
        }
    }

    #[test]
    fn running_weight_matches_quadrature() {
        for (x, q, h) in [(1.0, 0.5, 0.1), (0.3, 1.0, 0.2), (2.0, 0.0, 0.5), (0.4, -0.5, 0.3), (0.1, -1.0, 0.3)] {
            let (_, w) = discount_and_weight(x, q, h);
            let tau = if x + q * h <= 0.0 { -x / q } else { h };
            let oracle = integrate(
                |s| (-integrate(|l| 1.0 / (x + q * l), 0.0, s, 1e-14, 200).unwrap().value).exp(),
                0.0,
                tau,
                1e-12,
                200,
            )
            .unwrap()
            .value;
            assert!((w - oracle).abs() < 1e-8, "{x} {q} {h}: {w} vs {oracle}");
        }
    }

    #[test]
    fn barrier_and_terminal_data() {
        let cfg = SlConfig {
            length: 10.0,
            n: 501,
            final_time: 0.5,
            record_times: vec![0.0, 0.5],
            ..SlConfig::default()
        };
        let run = solve_sl(&make_subcritical(), &cfg).unwrap();
        let d = make_subcritical();
        for (j, v) in run.frames[0].values.iter().enumerate() {
            assert_eq!(*v, d.eval(cfg.grid().unwrap().x(j)));
        }
        assert_eq!(run.frames[1].values[0], 0.0);
        for (j, v) in run.frames[1].values.iter().enumerate() {
            let x = cfg.grid().unwrap().x(j);
            assert!(*v >= 0.0 && *v <= x + 1e-12, "{v} at {x}");
        }
    }

    #[test]
    fn constant_fast_path_gives_the_envelope() {
        let grid = Grid::new(40.0, 4001).unwrap();
        let d = make_subcritical();
        let mut v = GridFunction::sample(grid, |x| d.eval(x));
        let controls = ControlGrid::single(1.5);
        let h = grid.dx() / 1.5;
        let steps = 300;
        for _ in 0..steps {
            v = dpp_update(&v, h, &controls).unwrap();
        }
        let t = steps as f64 * h;
        for x in [0.5, 1.0, 3.0] {
            let y = x + 1.5 * t;
            let bound = d.eval(y) * (x / y).powf(2.0 / 3.0);
            assert!((v.interpolate(x).unwrap() - bound).abs() < 1e-3);
        }
    }

    #[test]
    fn identity_is_steady() {
        let cfg = SlConfig {
            length: 10.0,
            n: 1001,
            final_time: 1.0,
            ..SlConfig::default()
        };
        let run = solve_sl(&make_identity(), &cfg).unwrap();
        let err = run.last().sup_distance(5.0, |x| x);
        assert!(err < 1e-12, "{err}");
        assert!(run.argmin_slope[500] == 0.5);
    }

    #[test]
    fn profile_drift_is_small() {
        let cfg = SlConfig {
            length: 40.0,
            n: 4001,
            final_time: 10.0,
            observe_xmax: 5.0,
            ..SlConfig::default()
        };
        let run = solve_sl(&make_exact_profile(1.0).unwrap(), &cfg).unwrap();
        let p = StationaryProfile::new(1.0).unwrap();
        let drift = run.last().sup_distance(f64::INFINITY, |x| p.value(x));
        assert!(drift <= 1e-2, "{drift}");
    }

    #[test]
    fn rejects_other_masses_and_big_steps() {
        let cfg = SlConfig {
            m: 2.0,
            ..SlConfig::default()
        };
        assert!(matches!(
            solve_sl(&make_identity(), &cfg),
            Err(Error::Unsupported(_))
        ));
        let grid = Grid::new(1.0, 11).unwrap();
        let v = GridFunction::sample(grid, |x| x);
        assert!(matches!(
            dpp_update(&v, 1.0, &ControlGrid::default()),
            Err(Error::Cfl { .. })
        ));
    }
}
