//! Monotone Godunov finite-difference solver for
//! `∂ₜF + ½(∂ₓF − m)(∂ₓF − m − 1) + F/x − m = 0`, `0 ≤ F ≤ mx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::initial_data::InitialDatum;
use crate::stationary::StationaryProfile;

/// `H(p) = ½(p − m)(p − m − 1)`.
#[inline]
pub fn hamiltonian(p: f64, m: f64) -> f64 {
    0.5 * (p - m) * (p - m - 1.0)
}

/// Godunov flux of the convex `H`, minimized at `p* = m + ½`.
///
/// `min` of `H` over `[p⁻, p⁺]` when `p⁻ ≤ p⁺`, `max` over `[p⁺, p⁻]` otherwise.
#[inline]
pub fn numerical_hamiltonian(p_minus: f64, p_plus: f64, m: f64) -> f64 {
    let p_star = m + 0.5;
    if p_minus <= p_plus {
        hamiltonian(p_star.clamp(p_minus, p_plus), m)
    } else {
        hamiltonian(p_minus, m).max(hamiltonian(p_plus, m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    #[default]
    Euler,
    /// Two-stage strong-stability-preserving Runge–Kutta (Heun).
    Rk2,
}

/// Treatment of the last node `x = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RightBoundary {
    /// Ghost node `F(L + dx) = F(L) + s·dx` with a slope `s` frozen from the
    /// initial data, so the update stays monotone.
    GhostSlope { slope: f64 },
    /// Experimental: pin `F(L)` to the stationary profile `F̄(cL)/c`.
    Profile { c: f64 },
}

impl RightBoundary {
    /// Ghost slope from the last left difference of `f`, clamped to `[0, m]`.
    pub fn frozen_from(f: &GridFunction, m: f64) -> Self {
        let v = &f.values;
        let n = v.len();
        let s = (v[n - 1] - v[n - 2]) / f.grid.dx();
        RightBoundary::GhostSlope {
            slope: s.clamp(0.0, m),
        }
    }
}

/// Largest CFL number keeping the update monotone.
///
/// The flux part takes `cfl` of the centre weight and `F/x` at the first
/// node takes `dt/dx ≤ cfl/(m+½)`, so `cfl·(1 + 1/(m+½)) ≤ 1`.
pub fn monotone_cfl(m: f64) -> f64 {
    (m + 0.5) / (m + 1.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub m: f64,
    pub cfl: f64,
    pub length: f64,
    pub n: usize,
    pub final_time: f64,
    /// Output times; empty means only `final_time`.
    pub record_times: Vec<f64>,
    pub time_scheme: TimeScheme,
    /// Right end of the window that must stay trusted up to `final_time`.
    pub observe_xmax: f64,
    /// When set, only nodes with `x ≤ observe_xmax + (m+½)(T − t) + margin`
    /// are advanced.
    pub active_margin: Option<f64>,
    /// Experimental Dirichlet data at `x = L` (`c` of a stationary profile).
    pub right_profile: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            cfl: 0.4,
            length: 20.0,
            n: 2001,
            final_time: 1.0,
            record_times: Vec::new(),
            time_scheme: TimeScheme::Euler,
            observe_xmax: 0.0,
            active_margin: None,
            right_profile: None,
        }
    }
}

impl SolverConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.length, self.n)
    }

    /// Largest leftward characteristic speed `m + ½`.
    pub fn front_speed(&self) -> f64 {
        self.m + 0.5
    }

    /// `L − (m + ½)t`.
    pub fn trusted_xmax(&self, t: f64) -> f64 {
        self.length - self.front_speed() * t
    }

    pub fn records(&self) -> Vec<f64> {
        if self.record_times.is_empty() {
            vec![self.final_time]
        } else {
            self.record_times.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.m)));
        }
        let limit = monotone_cfl(self.m);
        if !(self.cfl > 0.0 && self.cfl <= limit) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, {limit}] for a monotone update, got {}",
                self.cfl
            )));
        }
        self.grid().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config(format!("final time must be ≥ 0, got {}", self.final_time)));
        }
        let rec = self.records();
        if rec.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("record times must be strictly increasing".into()));
        }
        if rec.iter().any(|&t| !(0.0..=self.final_time).contains(&t)) {
            return Err(Error::Config(format!(
                "record times must lie in [0, {}]",
                self.final_time
            )));
        }
        if let Some(margin) = self.active_margin {
            if !(margin > 0.0) {
                return Err(Error::Config(format!("active margin must be positive, got {margin}")));
            }
        }
        if let Some(c) = self.right_profile {
            StationaryProfile::new(c).map_err(|e| Error::Config(e.to_string()))?;
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

    fn active_xmax(&self, t: f64) -> f64 {
        match self.active_margin {
            Some(margin) => {
                self.observe_xmax + self.front_speed() * (self.final_time - t) + margin
            }
            None => f64::INFINITY,
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    /// Largest correction applied when clamping into `[0, m·x]`.
    pub max_clamp: f64,
    pub clamped_nodes: usize,
    /// `max(m + ½, max |p − (m + ½)|)` over the input slopes that were read.
    pub input_speed: f64,
}

/// CFL-limited step size for `f`.
pub fn max_speed(f: &GridFunction, m: f64) -> f64 {
    max_speed_of(&f.values, f.grid.dx(), m)
}

pub fn cfl_limit(f: &GridFunction, cfg: &SolverConfig) -> f64 {
    cfg.cfl * f.grid.dx() / max_speed(f, cfg.m)
}

/// One forward-Euler step.
///
/// Interior nodes use the Godunov flux of the one-sided differences; node 0
/// stays pinned at 0; the last node uses `boundary`.
pub fn step(
    f: &GridFunction,
    dt: f64,
    cfg: &SolverConfig,
    boundary: RightBoundary,
) -> Result<(GridFunction, StepStats)> {
    let limit = cfl_limit(f, cfg);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let mut out = f.values.clone();
    let nodes = Nodes::new(f.grid, cfg.m);
    let stats = euler_into(&f.values, &mut out, &nodes, f.grid.dx(), dt, cfg.m, boundary, f.values.len());
    let mut g = GridFunction::new(f.grid, out, f.time + dt)?;
    g.trusted_xmax = f.trusted_xmax - cfg.front_speed() * dt;
    Ok((g, stats))
}

/// Node coefficients `1/x_j` and `m·x_j`.
#[derive(Debug, Clone)]
struct Nodes {
    inv_x: Vec<f64>,
    cap: Vec<f64>,
}

impl Nodes {
    fn new(grid: Grid, m: f64) -> Self {
        let mut inv_x: Vec<f64> = grid.nodes().map(|x| 1.0 / x).collect();
        inv_x[0] = 0.0;
        let cap = grid.nodes().map(|x| m * x).collect();
        Self { inv_x, cap }
    }
}

const LANES: usize = 8;

/// Clamps beyond rounding level mean the update is not monotone.
pub const CLAMP_LIMIT: f64 = 1e-9;

// Plain selects; unlike `f64::max` they compile to single vector instructions.
#[inline(always)]
fn fmax(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline(always)]
fn fmin(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

/// Branch-free form of [`numerical_hamiltonian`].
#[inline(always)]
fn godunov(p_minus: f64, p_plus: f64, m: f64, p_star: f64) -> f64 {
    fmax(hamiltonian(fmax(p_minus, p_star), m), hamiltonian(fmin(p_plus, p_star), m))
}

/// Euler update of nodes `1..active` from `src` into `dst`.
///
/// Nodes at or beyond `active` keep the values already in `dst`.
#[allow(clippy::too_many_arguments)]
fn euler_into(
    src: &[f64],
    dst: &mut [f64],
    nodes: &Nodes,
    dx: f64,
    dt: f64,
    m: f64,
    boundary: RightBoundary,
    active: usize,
) -> StepStats {
    let n = src.len();
    let inv_dx = 1.0 / dx;
    let p_star = m + 0.5;
    let last = active.min(n);
    let interior_end = last.min(n - 1);
    let mut clamp_acc = [0.0f64; LANES];
    let mut count_acc = [0usize; LANES];
    let mut speed_acc = [p_star; LANES];

    let update = |fm: f64, f0: f64, fp: f64, inv_x: f64, cap: f64| -> (f64, f64, f64) {
        let (pm, pp) = ((f0 - fm) * inv_dx, (fp - f0) * inv_dx);
        let flux = godunov(pm, pp, m, p_star);
        let raw = f0 - dt * (flux + f0 * inv_x - m);
        let v = fmin(fmax(raw, 0.0), cap);
        (v, (v - raw).abs(), fmax((pm - p_star).abs(), (pp - p_star).abs()))
    };

    dst[0] = 0.0;
    let mut j = 1;
    while j + LANES <= interior_end {
        let s: &[f64; LANES + 2] = src[j - 1..j + LANES + 1].try_into().expect("chunk");
        let ix: &[f64; LANES] = nodes.inv_x[j..j + LANES].try_into().expect("chunk");
        let cp: &[f64; LANES] = nodes.cap[j..j + LANES].try_into().expect("chunk");
        let d: &mut [f64; LANES] = (&mut dst[j..j + LANES]).try_into().expect("chunk");
        for l in 0..LANES {
            let (v, c, sp) = update(s[l], s[l + 1], s[l + 2], ix[l], cp[l]);
            d[l] = v;
            speed_acc[l] = fmax(speed_acc[l], sp);
            clamp_acc[l] = fmax(clamp_acc[l], c);
            count_acc[l] += (c > 0.0) as usize;
        }
        j += LANES;
    }
    while j < interior_end {
        let (v, c, sp) = update(src[j - 1], src[j], src[j + 1], nodes.inv_x[j], nodes.cap[j]);
        dst[j] = v;
        speed_acc[0] = fmax(speed_acc[0], sp);
        clamp_acc[0] = clamp_acc[0].max(c);
        count_acc[0] += (c > 0.0) as usize;
        j += 1;
    }
    if last == n {
        let j = n - 1;
        let (v, c, sp) = match boundary {
            RightBoundary::GhostSlope { slope } => {
                let ghost = src[j] + slope * dx;
                update(src[j - 1], src[j], ghost, nodes.inv_x[j], nodes.cap[j])
            }
            RightBoundary::Profile { c } => {
                let x = j as f64 * dx;
                (StationaryProfile::new(c).map_or(src[j], |p| p.value(x)), 0.0, p_star)
            }
        };
        dst[j] = v;
        speed_acc[0] = fmax(speed_acc[0], sp);
        clamp_acc[0] = clamp_acc[0].max(c);
        count_acc[0] += (c > 0.0) as usize;
    }
    StepStats {
        max_clamp: clamp_acc.iter().copied().fold(0.0, f64::max),
        clamped_nodes: count_acc.iter().sum(),
        input_speed: speed_acc.iter().copied().fold(p_star, f64::max),
    }
}

/// `max(m + ½, max |p − (m + ½)|)` over forward differences.
fn max_speed_of(values: &[f64], dx: f64, m: f64) -> f64 {
    let p_star = m + 0.5;
    let inv_dx = 1.0 / dx;
    let mut acc = [p_star; LANES];
    let mut chunks = values.windows(LANES + 1).step_by(LANES);
    let mut covered = 0;
    for w in &mut chunks {
        let w: &[f64; LANES + 1] = w.try_into().expect("window");
        for l in 0..LANES {
            acc[l] = fmax(acc[l], ((w[l + 1] - w[l]) * inv_dx - p_star).abs());
        }
        covered += LANES;
    }
    let tail = values[covered..]
        .windows(2)
        .map(|w| ((w[1] - w[0]) * inv_dx - p_star).abs())
        .fold(p_star, f64::max);
    acc.iter().copied().fold(tail, f64::max)
}

/// Step-size history between consecutive record times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CflRecord {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub max_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClampStats {
    pub max_per_step: f64,
    pub clamped_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdRun {
    pub frames: Vec<GridFunction>,
    pub cfl_history: Vec<CflRecord>,
    pub clamp: ClampStats,
    pub steps: usize,
}

impl FdRun {
    pub fn last(&self) -> &GridFunction {
        self.frames.last().expect("at least one frame")
    }
}

/// Samples `datum` on the configured grid and marches to every record time.
pub fn solve(datum: &InitialDatum, cfg: &SolverConfig) -> Result<FdRun> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let f0 = GridFunction::sample(grid, |x| datum.eval(x));
    solve_from(f0, cfg)
}

/// Marches `f0` (at time 0) to every record time.
pub fn solve_from(f0: GridFunction, cfg: &SolverConfig) -> Result<FdRun> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if f0.grid != grid {
        return Err(Error::Config("initial data lives on a different grid".into()));
    }
    for (j, &v) in f0.values.iter().enumerate() {
        let x = grid.x(j);
        if !(v >= -1e-12 && v <= cfg.m * x + 1e-12 * x.max(1.0)) {
            return Err(Error::Input(format!(
                "initial value {v} at x = {x} outside [0, {}]",
                cfg.m * x
            )));
        }
    }
    let boundary = match cfg.right_profile {
        Some(c) => RightBoundary::Profile { c },
        None => RightBoundary::frozen_from(&f0, cfg.m),
    };
    let n = grid.len();
    let dx = grid.dx();
    let nodes = Nodes::new(grid, cfg.m);
    let mut cur = f0.values.clone();
    let mut next = cur.clone();
    let mut stage = cur.clone();
    let mut t = 0.0;
    let mut speed = max_speed(&f0, cfg.m);
    let mut frames = Vec::new();
    let mut history = Vec::new();
    let mut clamp = ClampStats::default();
    let mut total_steps = 0;

    for t_rec in cfg.records() {
        let mut rec = CflRecord {
            t_start: t,
            t_end: t_rec,
            steps: 0,
            dt_min: f64::INFINITY,
            dt_max: 0.0,
            max_speed: speed,
        };
        while t_rec - t > 1e-12 * t_rec.max(1.0) {
            let remaining = t_rec - t;
            let dt_cfl = cfg.cfl * dx / speed;
            let k = (remaining / dt_cfl).ceil().max(1.0);
            let dt = remaining / k;
            let active = ((cfg.active_xmax(t) / dx).floor() as usize)
                .saturating_add(1)
                .min(n);
            let stats = match cfg.time_scheme {
                TimeScheme::Euler => {
                    euler_into(&cur, &mut next, &nodes, dx, dt, cfg.m, boundary, active)
                }
                TimeScheme::Rk2 => {
                    stage.copy_from_slice(&cur);
                    let s1 = euler_into(&cur, &mut stage, &nodes, dx, dt, cfg.m, boundary, active);
                    next.copy_from_slice(&stage);
                    let s2 = euler_into(&stage, &mut next, &nodes, dx, dt, cfg.m, boundary, active);
                    for j in 1..active {
                        next[j] = 0.5 * (cur[j] + next[j]);
                    }
                    StepStats {
                        max_clamp: s1.max_clamp.max(s2.max_clamp),
                        clamped_nodes: s1.clamped_nodes + s2.clamped_nodes,
                        input_speed: s1.input_speed.max(s2.input_speed),
                    }
                }
            };
            if !(stats.input_speed.is_finite() && stats.max_clamp.is_finite()) {
                return Err(Error::Numeric(format!("non-finite solution at t = {t}")));
            }
            // The step size was chosen from the previous input; redo the step
            // if this input turned out steeper.
            if stats.input_speed > speed * (1.0 + 1e-12) {
                speed = stats.input_speed;
                continue;
            }
            if stats.max_clamp > CLAMP_LIMIT {
                return Err(Error::Numeric(format!(
                    "clamp of {:e} at t = {t} exceeds {CLAMP_LIMIT:e}; the update left [0, m·x]",
                    stats.max_clamp
                )));
            }
            std::mem::swap(&mut cur, &mut next);
            if active < n {
                next[active..].copy_from_slice(&cur[active..]);
            }
            if t_rec - (t + dt) <= 1e-12 * t_rec.max(1.0) {
                t = t_rec;
            } else {
                t += dt;
            }
            speed = stats.input_speed;
            clamp.max_per_step = clamp.max_per_step.max(stats.max_clamp);
            clamp.clamped_nodes += stats.clamped_nodes;
            rec.steps += 1;
            rec.dt_min = rec.dt_min.min(dt);
            rec.dt_max = rec.dt_max.max(dt);
            rec.max_speed = rec.max_speed.max(speed);
            total_steps += 1;
        }
        if rec.steps == 0 {
            rec.dt_min = 0.0;
        }
        history.push(rec);
        let mut frame = GridFunction::new(grid, cur.clone(), t_rec)?;
        frame.trusted_xmax = match cfg.active_margin {
            Some(margin) => cfg.trusted_xmax(t_rec).min(cfg.active_xmax(t_rec) - margin),
            None => cfg.trusted_xmax(t_rec),
        };
        frames.push(frame);
    }
    Ok(FdRun {
        frames,
        cfl_history: history,
        clamp,
        steps: total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{make_exact_profile, make_identity};

    fn brute_godunov(a: f64, b: f64, m: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let samples = (0..=100_000).map(|k| hamiltonian(lo + (hi - lo) * k as f64 / 1e5, m));
        if a <= b {
            samples.fold(f64::INFINITY, f64::min)
        } else {
            samples.fold(f64::NEG_INFINITY, f64::max)
        }
    }

    #[test]
    fn flux_examples() {
        assert_eq!(numerical_hamiltonian(1.0, 1.0, 1.0), 0.0);
        assert_eq!(numerical_hamiltonian(0.0, 1.0, 1.0), 0.0);
        assert_eq!(numerical_hamiltonian(2.0, 0.0, 1.0), 1.0);
        assert!((brute_godunov(0.0, 1.0, 1.0) - 0.0).abs() < 1e-12);
        assert!((brute_godunov(2.0, 0.0, 1.0) - 1.0).abs() < 1e-12);
        for (a, b, m) in [(-1.0, 3.0, 1.0), (0.3, 0.7, 2.0), (4.0, -2.0, 0.5), (1.6, 1.4, 1.0)] {
            assert!((numerical_hamiltonian(a, b, m) - brute_godunov(a, b, m)).abs() < 1e-8);
        }
    }

    fn small_cfg() -> SolverConfig {
        SolverConfig {
            length: 10.0,
            n: 1001,
            final_time: 1.0,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn steady_states_are_fixed() {
        let cfg = small_cfg();
        let grid = cfg.grid().unwrap();
        for f in [
            GridFunction::sample(grid, |x| x),
            GridFunction::sample(grid, |_| 0.0),
        ] {
            let dt = cfl_limit(&f, &cfg);
            let b = RightBoundary::frozen_from(&f, 1.0);
            let (g, stats) = step(&f, dt, &cfg, b).unwrap();
            let change = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(change <= 1e-12, "{change}");
            assert!(stats.max_clamp <= 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let cfg = small_cfg();
        let f = GridFunction::sample(cfg.grid().unwrap(), |x| x);
        let dt = 2.0 * cfl_limit(&f, &cfg);
        let err = step(&f, dt, &cfg, RightBoundary::frozen_from(&f, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
        assert!(err.is_numeric());
    }

    #[test]
    fn profile_step_is_consistent() {
        let cfg = small_cfg();
        let p = StationaryProfile::new(1.0).unwrap();
        let f = GridFunction::sample(cfg.grid().unwrap(), |x| p.value(x));
        let dt = cfl_limit(&f, &cfg);
        let (g, _) = step(&f, dt, &cfg, RightBoundary::frozen_from(&f, 1.0)).unwrap();
        let change = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // One step moves by dt·(truncation error) with truncation O(dx).
        assert!(change <= dt * 2.0 * cfg.grid().unwrap().dx() * 10.0, "{change}");
    }

    #[test]
    fn identity_solution_is_exact() {
        let cfg = SolverConfig {
            final_time: 2.0,
            record_times: vec![0.5, 2.0],
            ..small_cfg()
        };
        let run = solve(&make_identity(), &cfg).unwrap();
        assert_eq!(run.frames.len(), 2);
        for fr in &run.frames {
            assert!(fr.sup_distance(f64::INFINITY, |x| x) <= 1e-12);
        }
        assert!((run.last().trusted_xmax - (10.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn record_times_are_hit_exactly() {
        let cfg = SolverConfig {
            final_time: 1.0,
            record_times: vec![0.0, 0.3, 1.0],
            ..small_cfg()
        };
        let run = solve(&make_exact_profile(1.0).unwrap(), &cfg).unwrap();
        let times: Vec<f64> = run.frames.iter().map(|f| f.time).collect();
        assert_eq!(times, vec![0.0, 0.3, 1.0]);
        assert_eq!(run.cfl_history[0].steps, 0);
        for h in &run.cfl_history[1..] {
            assert!(h.dt_max <= cfg.cfl * 0.01 / 1.5 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_short_domains() {
        let cfg = SolverConfig {
            final_time: 10.0,
            observe_xmax: 5.0,
            ..small_cfg()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let bad = SolverConfig { cfl: 0.7, ..small_cfg() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(SolverConfig { cfl: 0.6, ..small_cfg() }.validate().is_ok());
        assert!(monotone_cfl(0.5) < 0.6);
    }

    #[test]
    fn active_window_matches_full_domain() {
        let base = SolverConfig {
            length: 40.0,
            n: 4001,
            final_time: 10.0,
            observe_xmax: 5.0,
            ..SolverConfig::default()
        };
        let trimmed = SolverConfig {
            active_margin: Some(5.0),
            ..base.clone()
        };
        let d = make_exact_profile(8.0).unwrap();
        let full = solve(&d, &base).unwrap();
        let cut = solve(&d, &trimmed).unwrap();
        assert!(cut.last().trusted_xmax >= 5.0);
        let diff = (0..=500)
            .map(|j| (full.last().values[j] - cut.last().values[j]).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn rk2_matches_euler_to_first_order() {
        let cfg = small_cfg();
        let rk = SolverConfig {
            time_scheme: TimeScheme::Rk2,
            ..cfg.clone()
        };
        let d = make_exact_profile(1.0).unwrap();
        let p = StationaryProfile::new(1.0).unwrap();
        let a = solve(&d, &cfg).unwrap();
        let b = solve(&d, &rk).unwrap();
        for run in [&a, &b] {
            assert!(run.last().sup_distance(5.0, |x| p.value(x)) < 5e-3);
        }
    }
}
