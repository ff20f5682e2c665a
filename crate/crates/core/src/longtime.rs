//! Long-time experiments: predicted limits by regime, convergence and decay
//! envelope studies, and the probe study for the oscillating datum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd_solver::{self, SolverConfig};
use crate::grid::{Grid, GridFunction};
use crate::initial_data::{DatumSpec, InitialDatum, OscillatingDatum, Regime};
use crate::sl_solver::{self, SlConfig};
use crate::stationary::{scale_from_growth, StationaryProfile};

/// Expected large-time behaviour of the solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictedLimit {
    Zero,
    ScaledProfile { c: f64 },
    Identity,
    /// `F(x₀, ·)` alternates between `F₁(x₀)` and `F₂(x₀)`.
    Oscillation { x0: f64, f1: f64, f2: f64 },
}

impl PredictedLimit {
    /// Limit value at `x`; `None` for an oscillation.
    pub fn eval(&self, x: f64) -> Option<f64> {
        match *self {
            PredictedLimit::Zero => Some(0.0),
            PredictedLimit::ScaledProfile { c } => StationaryProfile::new(c).ok().map(|p| p.value(x)),
            PredictedLimit::Identity => Some(x),
            PredictedLimit::Oscillation { .. } => None,
        }
    }
}

pub fn predict_limit(datum: &InitialDatum) -> Result<PredictedLimit> {
    match datum.regime() {
        Regime::Subcritical => Ok(PredictedLimit::Zero),
        Regime::Critical { delta } => Ok(PredictedLimit::ScaledProfile {
            c: scale_from_growth(delta),
        }),
        Regime::Supercritical => Ok(PredictedLimit::Identity),
        Regime::Indeterminate => match datum.as_oscillating() {
            Some(o) => Ok(PredictedLimit::Oscillation {
                x0: o.x0(),
                f1: o.f1().value(o.x0()),
                f2: o.f2().value(o.x0()),
            }),
            None => Err(Error::Inconclusive(
                "no predicted limit for an indeterminate datum".into(),
            )),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    NotConverged,
    Nonconvergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[default]
    Fd,
    Sl,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub datum: DatumSpec,
    pub scheme: SchemeChoice,
    pub dx: f64,
    pub window: f64,
    pub probes: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[i][k] = F(probes[i], times[k])`.
    pub values: Vec<Vec<f64>>,
    pub predicted_limit: PredictedLimit,
    /// Per record time: sup distance to the limit on the window, or the probe
    /// distance for an oscillation study.
    pub distances: Vec<f64>,
    /// Same for the semi-Lagrangian run when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances_sl: Option<Vec<f64>>,
    /// Targets per record time for an oscillation study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<f64>,
    pub envelope_violations: usize,
    pub tol: f64,
    pub verdict: Verdict,
    /// Least-squares slope of `log distance` against `log t` over the later half.
    pub decay_exponent: Option<f64>,
    pub clamp_max_per_step: f64,
    pub notes: Vec<String>,
}

impl RunReport {
    /// Rows `t, probe_x, F, target, distance`.
    pub fn probe_rows(&self) -> Vec<[f64; 5]> {
        let mut rows = Vec::new();
        for (k, &t) in self.times.iter().enumerate() {
            for (i, &x) in self.probes.iter().enumerate() {
                let f = self.values[i][k];
                let target = if self.targets.is_empty() {
                    self.predicted_limit.eval(x).unwrap_or(f64::NAN)
                } else {
                    self.targets[k]
                };
                rows.push([t, x, f, target, (f - target).abs()]);
            }
        }
        rows
    }
}

/// Default acceptance tolerance `max(5·dx, 10⁻³)·(1 + X_obs)`.
pub fn default_tol(dx: f64, x_obs: f64) -> f64 {
    (5.0 * dx).max(1e-3) * (1.0 + x_obs)
}

/// Counts trusted nodes with `F(x,t) > F₀(x + 3t/2)·(x/(x + 3t/2))^{2/3} + tol`.
pub fn envelope_check_tol(f: &GridFunction, datum: &InitialDatum, t: f64, tol: f64) -> usize {
    (0..f.trusted_len())
        .filter(|&j| {
            let x = f.grid.x(j);
            let y = x + 1.5 * t;
            let bound = if x == 0.0 { 0.0 } else { datum.eval(y) * (x / y).powf(2.0 / 3.0) };
            f.values[j] > bound + tol
        })
        .count()
}

/// Envelope violations with `tol = 10·dx`.
pub fn envelope_check(f: &GridFunction, datum: &InitialDatum, t: f64) -> usize {
    envelope_check_tol(f, datum, t, 10.0 * f.grid.dx())
}

/// Smallest `F(y) − F̄(cy)/c` over trusted nodes with `y ≤ xmax`, per `c`.
pub fn dominance_margins(f: &GridFunction, scales: &[f64], xmax: f64) -> Result<Vec<(f64, f64)>> {
    scales
        .iter()
        .map(|&c| {
            let p = StationaryProfile::new(c)?;
            let limit = xmax.min(f.trusted_xmax);
            let margin = (0..f.values.len())
                .take_while(|&j| f.grid.x(j) <= limit)
                .map(|j| f.values[j] - p.value(f.grid.x(j)))
                .fold(f64::INFINITY, f64::min);
            Ok((c, margin))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub solver: SolverConfig,
    pub scheme: SchemeChoice,
    /// Semi-Lagrangian settings when `scheme` is `sl` or `both`; grid and
    /// times are taken from `solver`.
    pub sl: SlConfig,
    /// Observation window `[0, window]`.
    pub window: f64,
    pub probes: Vec<f64>,
    pub tol: Option<f64>,
    /// Record times entering the monotonicity part of the verdict.
    pub tail: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            scheme: SchemeChoice::Fd,
            sl: SlConfig::default(),
            window: 5.0,
            probes: vec![0.5, 1.0, 2.0, 5.0],
            tol: None,
            tail: 5,
        }
    }
}

fn sup_on_window(f: &GridFunction, window: f64, limit: &PredictedLimit) -> f64 {
    f.sup_distance(window, |x| limit.eval(x).unwrap_or(f64::NAN))
}

fn probe_values(frames: &[GridFunction], probes: &[f64]) -> Result<Vec<Vec<f64>>> {
    probes
        .iter()
        .map(|&x| {
            frames
                .iter()
                .map(|f| {
                    f.interpolate(x)
                        .ok_or_else(|| Error::Config(format!("probe {x} lies outside the grid")))
                })
                .collect()
        })
        .collect()
}

fn decay_exponent(times: &[f64], distances: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(distances)
        .skip(times.len() / 2)
        .filter(|(t, d)| **t > 0.0 && **d > 0.0)
        .map(|(t, d)| (t.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx))
    });
    (den > 0.0).then(|| num / den)
}

/// `true` if the last `tail` distances strictly decrease and the last is ≤ `tol`.
pub fn eventually_below(distances: &[f64], tail: usize, tol: f64) -> bool {
    let Some(&last) = distances.last() else {
        return false;
    };
    let start = distances.len().saturating_sub(tail.max(1));
    last <= tol && distances[start..].windows(2).all(|w| w[1] < w[0])
}

/// Runs the solver(s) and measures the distance to the predicted limit on
/// `[0, window]` at every record time.
pub fn convergence_study(datum: &InitialDatum, cfg: &StudyConfig) -> Result<RunReport> {
    let limit = predict_limit(datum)?;
    if matches!(limit, PredictedLimit::Oscillation { .. }) {
        return Err(Error::Config(
            "use the oscillation study for the oscillating datum".into(),
        ));
    }
    let mut solver = cfg.solver.clone();
    solver.observe_xmax = solver.observe_xmax.max(cfg.window);
    if let Some(&p) = cfg.probes.iter().find(|&&p| p > cfg.window || p < 0.0) {
        return Err(Error::Config(format!("probe {p} outside the window [0, {}]", cfg.window)));
    }
    solver.validate()?;
    let grid = solver.grid()?;
    let tol = cfg.tol.unwrap_or_else(|| default_tol(grid.dx(), cfg.window));

    let run_fd = || fd_solver::solve(datum, &solver);
    let run_sl = || {
        let sl = SlConfig {
            m: solver.m,
            length: solver.length,
            n: solver.n,
            final_time: solver.final_time,
            record_times: solver.record_times.clone(),
            observe_xmax: cfg.window,
            ..cfg.sl.clone()
        };
        sl_solver::solve_sl(datum, &sl)
    };
    let (frames, clamp, sl_frames) = match cfg.scheme {
        SchemeChoice::Fd => {
            let r = run_fd()?;
            (r.frames, r.clamp.max_per_step, None)
        }
        SchemeChoice::Sl => (run_sl()?.frames, 0.0, None),
        SchemeChoice::Both => {
            let r = run_fd()?;
            let s = run_sl()?;
            (r.frames, r.clamp.max_per_step, Some(s.frames))
        }
    };
    let times: Vec<f64> = frames.iter().map(|f| f.time).collect();
    let distances: Vec<f64> = frames.iter().map(|f| sup_on_window(f, cfg.window, &limit)).collect();
    let distances_sl = sl_frames
        .as_ref()
        .map(|fr| fr.iter().map(|f| sup_on_window(f, cfg.window, &limit)).collect());
    let envelope_violations = if solver.m == 1.0 {
        frames.iter().map(|f| envelope_check(f, datum, f.time)).sum()
    } else {
        0
    };
    let verdict = if distances.len() < 2 {
        Verdict::Inconclusive
    } else if eventually_below(&distances, cfg.tail, tol) {
        Verdict::Converged
    } else {
        Verdict::NotConverged
    };
    let mut notes = Vec::new();
    if solver.m != 1.0 {
        notes.push("envelope check skipped for m ≠ 1".into());
    }
    Ok(RunReport {
        datum: datum.spec().clone(),
        scheme: cfg.scheme,
        dx: grid.dx(),
        window: cfg.window,
        probes: cfg.probes.clone(),
        values: probe_values(&frames, &cfg.probes)?,
        decay_exponent: decay_exponent(&times, &distances),
        times,
        predicted_limit: limit,
        distances,
        distances_sl,
        targets: Vec::new(),
        envelope_violations,
        tol,
        verdict,
        clamp_max_per_step: clamp,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OscillationConfig {
    pub dx: f64,
    pub cfl: f64,
    /// Number of probe times `t₁, t₂, …` to simulate.
    pub probes: usize,
    /// Extra length beyond the domain of dependence of the last probe.
    pub margin: f64,
    pub tol: Option<f64>,
}

impl Default for OscillationConfig {
    fn default() -> Self {
        Self {
            dx: 0.005,
            cfl: 0.4,
            probes: 3,
            margin: 10.0,
            tol: None,
        }
    }
}

impl OscillationConfig {
    /// Solver configuration covering the first `probes` probe times.
    pub fn solver_config(&self, osc: &OscillatingDatum) -> Result<SolverConfig> {
        let available = osc.probe_times().len();
        if self.probes == 0 || self.probes > available {
            return Err(Error::Config(format!(
                "{} probe times requested, datum provides {available}",
                self.probes
            )));
        }
        if !(self.dx > 0.0 && self.margin > 0.0) {
            return Err(Error::Config("dx and margin must be positive".into()));
        }
        let times = osc.probe_times()[..self.probes].to_vec();
        let horizon = *times.last().expect("nonempty");
        let grid = Grid::with_spacing(osc.x0() + 1.5 * horizon + self.margin, self.dx)
            .map_err(|e| Error::Config(e.to_string()))?;
        let cfg = SolverConfig {
            m: 1.0,
            cfl: self.cfl,
            length: grid.length(),
            n: grid.len(),
            final_time: horizon,
            record_times: times,
            observe_xmax: osc.x0(),
            active_margin: Some(self.margin),
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Records `F(x₀, t_k)` at the constructed probe times.
///
/// The verdict is `nonconvergent` when every odd probe is within `tol` of
/// `F₁(x₀)`, every even probe within `tol` of `F₂(x₀)`, and
/// `F₁(x₀) − F₂(x₀) > 3·tol`.
pub fn oscillation_study(osc: &OscillatingDatum, cfg: &OscillationConfig) -> Result<RunReport> {
    let solver = cfg.solver_config(osc)?;
    let datum = InitialDatum::oscillating(osc.clone());
    let run = fd_solver::solve(&datum, &solver)?;
    let x0 = osc.x0();
    let dx = solver.grid()?.dx();
    let tol = cfg.tol.unwrap_or_else(|| default_tol(dx, x0));
    let limit = predict_limit(&datum)?;
    let times: Vec<f64> = run.frames.iter().map(|f| f.time).collect();
    let values = probe_values(&run.frames, &[x0])?;
    let targets: Vec<f64> = (1..=times.len()).map(|k| osc.probe_target(k)).collect();
    let distances: Vec<f64> = values[0].iter().zip(&targets).map(|(v, t)| (v - t).abs()).collect();
    let separated = osc.f1().value(x0) - osc.f2().value(x0) > 3.0 * tol;
    let verdict = if separated && times.len() >= 2 && distances.iter().all(|&d| d <= tol) {
        Verdict::Nonconvergent
    } else {
        Verdict::Inconclusive
    };
    let mut notes = Vec::new();
    let skipped = osc.probe_times().len() - times.len();
    if skipped > 0 {
        notes.push(format!(
            "probe times beyond t_{} not simulated ({skipped} skipped)",
            times.len()
        ));
    }
    Ok(RunReport {
        datum: datum.spec().clone(),
        scheme: SchemeChoice::Fd,
        dx,
        window: x0,
        probes: vec![x0],
        times,
        values,
        predicted_limit: limit,
        distances,
        distances_sl: None,
        targets,
        envelope_violations: 0,
        tol,
        verdict,
        decay_exponent: None,
        clamp_max_per_step: run.clamp.max_per_step,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{
        build_oscillating, make_critical, make_exact_profile, make_identity, make_subcritical,
        make_supercritical,
    };
    use crate::stationary::bar_f;

    #[test]
    fn limits_by_regime() {
        assert_eq!(predict_limit(&make_subcritical()).unwrap(), PredictedLimit::Zero);
        match predict_limit(&make_critical(0.75, None).unwrap()).unwrap() {
            PredictedLimit::ScaledProfile { c } => assert!((c - 8.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(predict_limit(&make_supercritical()).unwrap(), PredictedLimit::Identity);
        let osc = InitialDatum::oscillating(build_oscillating(1.0, 8.0, 1).unwrap());
        match predict_limit(&osc).unwrap() {
            PredictedLimit::Oscillation { x0, f1, f2 } => {
                assert_eq!(x0, 0.5);
                assert!((f1 - bar_f(0.5).unwrap()).abs() < 1e-15);
                assert!((f2 - 0.3125).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn envelope_at_time_zero_and_for_identity() {
        let g = Grid::new(20.0, 2001).unwrap();
        for d in [make_subcritical(), make_supercritical(), make_exact_profile(1.0).unwrap()] {
            let f = GridFunction::sample(g, |x| d.eval(x));
            assert_eq!(envelope_check(&f, &d, 0.0), 0);
        }
        let id = make_identity();
        let f = GridFunction::sample(g, |x| x);
        assert_eq!(envelope_check(&f, &id, 3.0), 0);
    }

    #[test]
    fn tail_rule() {
        assert!(eventually_below(&[5.0, 4.0, 3.0, 2.0, 1.0, 0.5], 5, 0.6));
        assert!(!eventually_below(&[5.0, 4.0, 3.0, 2.0, 1.0, 1.0], 5, 2.0));
        assert!(!eventually_below(&[5.0, 4.0, 3.0, 2.0, 1.0], 5, 0.5));
        assert!(eventually_below(&[0.0, 9.0, 3.0, 2.0, 1.0, 0.5], 5, 0.6));
    }

    #[test]
    fn exact_profile_study_stays_close() {
        let cfg = StudyConfig {
            solver: SolverConfig {
                length: 30.0,
                n: 3001,
                final_time: 5.0,
                record_times: vec![1.0, 2.0, 3.0, 4.0, 5.0],
                ..SolverConfig::default()
            },
            ..StudyConfig::default()
        };
        let r = convergence_study(&make_exact_profile(1.0).unwrap(), &cfg).unwrap();
        assert!(r.distances.iter().all(|&d| d <= r.tol), "{:?}", r.distances);
        assert_eq!(r.envelope_violations, 0);
        assert_eq!(r.values.len(), 4);
        assert_eq!(r.probe_rows().len(), 20);
    }

    #[test]
    fn too_short_domain_is_a_config_error() {
        let cfg = StudyConfig {
            solver: SolverConfig {
                length: 10.0,
                n: 1001,
                final_time: 5.0,
                ..SolverConfig::default()
            },
            ..StudyConfig::default()
        };
        assert!(matches!(
            convergence_study(&make_subcritical(), &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn first_two_probes_of_the_oscillation() {
        let osc = build_oscillating(1.0, 8.0, 2).unwrap();
        let cfg = OscillationConfig {
            probes: 2,
            ..OscillationConfig::default()
        };
        let r = oscillation_study(&osc, &cfg).unwrap();
        assert_eq!(r.times.len(), 2);
        assert!(r.distances.iter().all(|&d| d <= r.tol), "{:?} tol {}", r.distances, r.tol);
        assert_eq!(r.verdict, Verdict::Nonconvergent);
        assert!(r.notes[0].contains("2 skipped"));
    }
}
