use std::path::{Path, PathBuf};
use std::time::Instant;

use cfhj_core::bernstein::{check_admissible, product_identity_check, AdmissibilityOptions, Atom};
use cfhj_core::characteristics::{
    crossing_detect, domain_of_dependence, integrate_char, range_of_influence, Trajectory,
};
use cfhj_core::fd_solver::{self, cfl_limit, step, RightBoundary, SolverConfig, TimeScheme};
use cfhj_core::grid::{Grid, GridFunction};
use cfhj_core::initial_data::{build_oscillating, catalog, make_atomic, DatumSpec, InitialDatum};
use cfhj_core::longtime::{
    convergence_study, oscillation_study, OscillationConfig, RunReport, SchemeChoice, StudyConfig,
};
use cfhj_core::sl_solver::{self, dpp_update, ControlGrid, SlConfig};
use cfhj_core::stationary::{cubic_root, stationary_residual, StationaryProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, Result};
use crate::output::{emit, manifest_beside, num, write_csv, write_json, Manifest};

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing required parameter --{flag}")))
}

fn datum_spec(datum: &DatumRef, params: &Option<Params>) -> Result<DatumSpec> {
    match datum {
        DatumRef::Name(name) => {
            let empty = Params::default();
            Ok(DatumSpec::parse(name, &params.as_ref().unwrap_or(&empty).0)?)
        }
        DatumRef::Spec(spec) if params.is_none() => Ok(spec.clone()),
        DatumRef::Spec(_) => Err(CliError::Usage("params only apply to a named datum".into())),
    }
}

fn build_datum(datum: &Option<DatumRef>, params: &Option<Params>, flag: &str) -> Result<InitialDatum> {
    Ok(datum_spec(&required(datum, flag)?, params)?.build()?)
}

fn write_report(dir: &Path, report: &RunReport) -> Result<Vec<PathBuf>> {
    let json_path = dir.join("report.json");
    write_json(&json_path, report)?;
    let csv_path = dir.join("probes.csv");
    write_csv(
        &csv_path,
        &["t", "probe_x", "F", "target", "distance"],
        report.probe_rows().into_iter().map(|r| r.iter().map(|&v| num(v)).collect()),
    )?;
    Ok(vec![json_path, csv_path])
}

pub fn profile(mut a: ProfileArgs, started: Instant) -> Result<()> {
    let c = *a.c.get_or_insert(1.0);
    let xmax = *a.xmax.get_or_insert(20.0);
    let n = *a.n.get_or_insert(2001);
    let out = required(&a.out, "out")?;
    let p = StationaryProfile::new(c)?;
    let grid = Grid::new(xmax, n)?;

    // Residual of the stationary equation with the exact slope; 0 at the origin.
    let residual = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        let d = p.slope(x);
        0.5 * (d - 1.0) * (d - 2.0) + p.value(x) / x - 1.0
    };
    write_csv(
        &out,
        &["x", "F", "dF", "residual"],
        grid.nodes().map(|x| vec![num(x), num(p.value(x)), num(p.slope(x)), num(residual(x))]),
    )?;
    let max_residual = grid.nodes().fold(0.0f64, |m, x| m.max(residual(x).abs()));
    let fd_residual = stationary_residual(&GridFunction::sample(grid, |x| p.value(x)))?
        .values
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    let summary = json!({
        "out": out.display().to_string(),
        "max_residual": max_residual,
        "max_difference_residual": fd_residual,
    });
    let manifest_path = manifest_beside(&out);
    let m = Manifest::new("profile", &a, &[out], started.elapsed())?.with_details(&summary)?;
    write_json(&manifest_path, &m)?;
    emit(&summary)
}

pub fn validate_init(mut a: ValidateArgs, started: Instant) -> Result<()> {
    let datum = match (&a.atoms, &a.datum) {
        (Some(text), None) => make_atomic(parse_atoms(text)?)?,
        (None, Some(_)) => build_datum(&a.datum, &a.params, "datum")?,
        _ => return Err(CliError::Usage("give exactly one of --atoms or --datum".into())),
    };
    let defaults = AdmissibilityOptions::default();
    let opts = AdmissibilityOptions {
        x_max: *a.xmax.get_or_insert(defaults.x_max),
        mass: Some(*a.mass.get_or_insert(1.0)),
        ..defaults
    };
    if !(opts.x_max > 0.0 && opts.x_max.is_finite()) {
        return Err(CliError::Usage(format!("xmax must be positive, got {}", opts.x_max)));
    }
    let report = check_admissible(&datum, &opts);
    if let Some(out) = a.out.clone() {
        write_json(&out, &report)?;
        let m = Manifest::new("validate-init", &a, std::slice::from_ref(&out), started.elapsed())?;
        write_json(&manifest_beside(&out), &m)?;
    }
    emit(&report)
}

fn parse_atoms(text: &str) -> Result<Vec<Atom>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let bad = || CliError::Usage(format!("expected size:weight, got `{item}`"));
            let (s, w) = item.split_once(':').ok_or_else(bad)?;
            Ok(Atom {
                size: s.trim().parse().map_err(|_| bad())?,
                weight: w.trim().parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn datum(mut a: DatumArgs, started: Instant) -> Result<()> {
    let spec = datum_spec(&required(&a.name, "name")?, &a.params)?;
    let d = spec.build()?;
    let xmax = *a.xmax.get_or_insert(20.0);
    let n = *a.n.get_or_insert(2001);
    let out = required(&a.emit, "emit")?;
    let grid = Grid::new(xmax, n)?;
    write_csv(
        &out,
        &["x", "F0", "slope"],
        grid.nodes().map(|x| vec![num(x), num(d.eval(x)), num(d.eval_slope(x))]),
    )?;
    let summary = json!({ "out": out.display().to_string(), "datum": spec, "regime": d.regime().label() });
    let m = Manifest::new("datum", &a, std::slice::from_ref(&out), started.elapsed())?.with_details(&summary)?;
    write_json(&manifest_beside(&out), &m)?;
    emit(&summary)
}

pub fn solve(mut a: SolveArgs, started: Instant) -> Result<()> {
    let scheme = *a.scheme.get_or_insert(Scheme::Fd);
    let d = build_datum(&a.datum, &a.params, "datum")?;
    let base = SolverConfig::default();
    let m = *a.m.get_or_insert(base.m);
    let length = *a.length.get_or_insert(base.length);
    let n = *a.n.get_or_insert(base.n);
    let final_time = *a.final_time.get_or_insert(base.final_time);
    let record_times = a.record.get_or_insert_with(|| vec![final_time]).clone();
    let observe_xmax = *a.observe_xmax.get_or_insert(0.0);
    let out = required(&a.out, "out")?;

    let (frames, details) = match scheme {
        Scheme::Fd => {
            let cfg = SolverConfig {
                m,
                cfl: *a.cfl.get_or_insert(base.cfl),
                length,
                n,
                final_time,
                record_times,
                time_scheme: match a.time_scheme.get_or_insert(Stepper::Euler) {
                    Stepper::Euler => TimeScheme::Euler,
                    Stepper::Rk2 => TimeScheme::Rk2,
                },
                observe_xmax,
                active_margin: a.active_margin,
                right_profile: a.right_profile,
            };
            cfg.validate()?;
            let run = fd_solver::solve(&d, &cfg)?;
            let details = json!({
                "scheme": "fd",
                "record_times": run.frames.iter().map(|f| f.time).collect::<Vec<_>>(),
                "steps": run.steps,
                "cfl_history": run.cfl_history,
                "clamp": run.clamp,
            });
            (run.frames, details)
        }
        Scheme::Sl => {
            if a.cfl.is_some() || a.time_scheme.is_some() || a.active_margin.is_some() || a.right_profile.is_some() {
                return Err(CliError::Usage(
                    "cfl, time-scheme, active-margin and right-profile apply to the fd scheme only".into(),
                ));
            }
            let dq = *a.dq.get_or_insert(0.05);
            let q = a.qrange.get_or_insert(QRange([0.0, 3.0])).0;
            let cfg = SlConfig {
                m,
                length,
                n,
                final_time,
                record_times,
                controls: ControlGrid::new(q[0], q[1], dq)?,
                h_max: None,
                observe_xmax,
            };
            cfg.validate()?;
            let run = sl_solver::solve_sl(&d, &cfg)?;
            let details = json!({
                "scheme": "sl",
                "record_times": run.frames.iter().map(|f| f.time).collect::<Vec<_>>(),
                "steps": run.steps,
                "h": run.h,
            });
            (run.frames, details)
        }
        Scheme::Both => return Err(CliError::Usage("solve runs one scheme: fd or sl".into())),
    };

    let mut outputs = Vec::new();
    for (k, f) in frames.iter().enumerate() {
        let path = out.join(format!("record_{k:03}.csv"));
        write_csv(
            &path,
            &["x", "F", "trusted"],
            (0..f.values.len()).map(|j| {
                let trusted = if f.is_trusted(j) { "1" } else { "0" };
                vec![num(f.grid.x(j)), num(f.values[j]), trusted.to_string()]
            }),
        )?;
        outputs.push(path);
    }
    let manifest_path = out.join("manifest.json");
    let m = Manifest::new("solve", &a, &outputs, started.elapsed())?.with_details(&details)?;
    write_json(&manifest_path, &m)?;
    emit(&json!({ "out": out.display().to_string(), "records": outputs.len(), "details": details }))
}

#[derive(Serialize)]
struct CharsSummary {
    out: String,
    crossing: Option<cfhj_core::characteristics::Crossing>,
    hit_barrier: Vec<bool>,
}

pub fn chars(mut a: CharsArgs, started: Instant) -> Result<()> {
    let d = build_datum(&a.datum, &a.params, "datum")?;
    let starts = required(&a.starts, "starts")?;
    let t = *a.final_time.get_or_insert(1.0);
    let dt = *a.dt.get_or_insert(1e-3);
    let out = required(&a.out, "out")?;
    if let Some(x) = starts.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(CliError::Usage(format!("start points must be positive, got {x}")));
    }
    let trajectories = starts
        .iter()
        .map(|&x| integrate_char(x, d.eval_slope(x), d.eval(x), t, dt))
        .collect::<std::result::Result<Vec<Trajectory>, _>>()?;
    let crossing = crossing_detect(&trajectories)?;
    write_csv(
        &out,
        &["traj_id", "s", "X", "P", "Z"],
        trajectories.iter().enumerate().flat_map(|(i, tr)| {
            tr.states
                .iter()
                .map(move |s| vec![i.to_string(), num(s.s), num(s.x), num(s.p), num(s.z)])
        }),
    )?;
    let summary = CharsSummary {
        out: out.display().to_string(),
        crossing,
        hit_barrier: trajectories.iter().map(|t| t.hit_barrier).collect(),
    };
    let m = Manifest::new("chars", &a, std::slice::from_ref(&out), started.elapsed())?.with_details(&summary)?;
    write_json(&manifest_beside(&out), &m)?;
    emit(&summary)
}

pub fn longtime(mut a: LongtimeArgs, started: Instant) -> Result<()> {
    let d = build_datum(&a.datum, &a.params, "datum")?;
    let scheme = *a.scheme.get_or_insert(Scheme::Fd);
    let t = *a.final_time.get_or_insert(50.0);
    let dx = *a.dx.get_or_insert(0.01);
    let window = *a.window.get_or_insert(5.0);
    let probes = a
        .probes
        .get_or_insert_with(|| vec![0.5, 1.0, 2.0, 5.0].into_iter().filter(|&p| p <= window).collect())
        .clone();
    let records = *a.records.get_or_insert(10);
    let margin = *a.margin.get_or_insert(10.0);
    let dq = *a.dq.get_or_insert(0.05);
    let cfl = *a.cfl.get_or_insert(0.4);
    if records == 0 || !(t > 0.0 && dx > 0.0 && margin > 0.0) {
        return Err(CliError::Usage("need T, dx, margin > 0 and at least one record".into()));
    }
    let controls = ControlGrid::new(0.0, 3.0, dq)?;
    // The semi-Lagrangian trusted region shrinks at the largest control speed.
    let speed = if scheme == Scheme::Fd { 1.5 } else { controls.max_abs().max(1.5) };
    let grid = Grid::with_spacing(window + speed * t + margin, dx)?;
    let cfg = StudyConfig {
        solver: SolverConfig {
            cfl,
            length: grid.length(),
            n: grid.len(),
            final_time: t,
            record_times: (1..=records).map(|k| t * k as f64 / records as f64).collect(),
            observe_xmax: window,
            active_margin: (scheme == Scheme::Fd).then_some(margin),
            ..SolverConfig::default()
        },
        scheme: match scheme {
            Scheme::Fd => SchemeChoice::Fd,
            Scheme::Sl => SchemeChoice::Sl,
            Scheme::Both => SchemeChoice::Both,
        },
        sl: SlConfig {
            controls,
            ..SlConfig::default()
        },
        window,
        probes,
        tol: a.tol,
        tail: 5,
    };
    let report = convergence_study(&d, &cfg)?;
    if let Some(out) = a.out.clone() {
        let outputs = write_report(&out, &report)?;
        let m = Manifest::new("longtime", &a, &outputs, started.elapsed())?;
        write_json(&out.join("manifest.json"), &m)?;
    }
    emit(&report)
}

pub fn noncvg(mut a: NoncvgArgs, started: Instant) -> Result<()> {
    let base = OscillationConfig::default();
    let osc = build_oscillating(
        *a.c1.get_or_insert(1.0),
        *a.c2.get_or_insert(8.0),
        *a.depth.get_or_insert(2),
    )?;
    let cfg = OscillationConfig {
        dx: *a.dx.get_or_insert(base.dx),
        cfl: *a.cfl.get_or_insert(base.cfl),
        probes: *a.probes.get_or_insert(base.probes),
        margin: *a.margin.get_or_insert(base.margin),
        tol: a.tol,
    };
    cfg.solver_config(&osc)?;
    let report = oscillation_study(&osc, &cfg)?;
    if let Some(out) = a.out.clone() {
        let outputs = write_report(&out, &report)?;
        let m = Manifest::new("noncvg", &a, &outputs, started.elapsed())?.with_details(&json!({
            "breakpoints": osc.breakpoints(),
            "probe_times": osc.probe_times(),
        }))?;
        write_json(&out.join("manifest.json"), &m)?;
    }
    emit(&report)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    cases: usize,
    failures: usize,
}

/// One randomized case; `true` means the property failed.
type Case<'a> = Box<dyn FnMut(&mut ChaCha8Rng) -> Result<bool> + 'a>;

fn random_admissible(rng: &mut ChaCha8Rng, grid: Grid) -> GridFunction {
    let mut v = vec![0.0; grid.len()];
    for j in 1..v.len() {
        v[j] = v[j - 1] + grid.dx() * rng.gen_range(0.0..=1.0);
    }
    GridFunction::new(grid, v, 0.0).expect("grid-sized data")
}

fn ordered_pair(rng: &mut ChaCha8Rng, grid: Grid) -> (GridFunction, GridFunction) {
    let a = random_admissible(rng, grid);
    let b = random_admissible(rng, grid);
    let mut lo = a.clone();
    let mut hi = a;
    for j in 0..b.values.len() {
        lo.values[j] = lo.values[j].min(b.values[j]);
        hi.values[j] = hi.values[j].max(b.values[j]);
    }
    (lo, hi)
}

fn is_below(f: &GridFunction, g: &GridFunction) -> bool {
    f.values.iter().zip(&g.values).all(|(u, v)| u <= v)
}

pub fn selftest(mut a: SelftestArgs) -> Result<()> {
    let seed = *a.seed.get_or_insert(0);
    let cases = *a.cases.get_or_insert(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::new(4.0, 201)?;
    let cfg = SolverConfig {
        length: 4.0,
        n: 201,
        ..SolverConfig::default()
    };
    let mut checks = Vec::new();
    let mut count = |name, n: usize, mut fail: Case<'_>| -> Result<()> {
        let mut failures = 0;
        for _ in 0..n {
            if fail(&mut rng)? {
                failures += 1;
            }
        }
        checks.push(Check {
            name,
            cases: n,
            failures,
        });
        Ok(())
    };

    count("cubic_root_residual", cases, Box::new(|r| {
        let x = 10f64.powf(r.gen_range(-3.0..8.0));
        let z = cubic_root(x)?;
        Ok((z * z * z + z / x - 1.0 / x).abs() > 1e-12)
    }))?;
    count("product_identity", cases, Box::new(|r| {
        let (x, s, t) = (r.gen_range(0.0..50.0), r.gen_range(0.0..10.0), r.gen_range(0.0..10.0));
        Ok(product_identity_check(x, s, t) > 1e-14)
    }))?;
    count("dependence_influence_duality", cases, Box::new(|r| {
        let x0 = r.gen_range(0.0..10.0);
        let x = x0 + r.gen_range(1e-6..20.0);
        let t = r.gen_range(0.0..40.0);
        Ok(range_of_influence(x, x0)?.contains(t) != domain_of_dependence(x0, t)?.contains(x))
    }))?;
    count("fd_comparison", cases, Box::new(|r| {
        let (f, g) = ordered_pair(r, grid);
        let dt = cfl_limit(&f, &cfg).min(cfl_limit(&g, &cfg));
        let bc = RightBoundary::GhostSlope {
            slope: r.gen_range(0.0..=1.0),
        };
        let (sf, _) = step(&f, dt, &cfg, bc)?;
        let (sg, _) = step(&g, dt, &cfg, bc)?;
        Ok(!is_below(&sf, &sg))
    }))?;
    let controls = ControlGrid::default();
    count("sl_comparison", cases.div_ceil(10), Box::new(|r| {
        let (f, g) = ordered_pair(r, grid);
        let h = grid.dx() / controls.max_abs();
        Ok(!is_below(&dpp_update(&f, h, &controls)?, &dpp_update(&g, h, &controls)?))
    }))?;
    count("fd_steady_states", 1, Box::new(|_| {
        let mut moved = false;
        for (slope, value) in [(1.0, 1.0), (0.0, 0.0)] {
            let f = GridFunction::sample(grid, |x| value * x);
            let (g, _) = step(&f, cfl_limit(&f, &cfg), &cfg, RightBoundary::GhostSlope { slope })?;
            moved |= g.values.iter().zip(&f.values).any(|(u, v)| (u - v).abs() > 1e-12);
        }
        Ok(moved)
    }))?;
    let data = catalog();
    let mut it = data.iter();
    count("catalog_admissible", data.len(), Box::new(move |_| {
        let d = it.next().expect("one case per datum");
        Ok(!check_admissible(d, &AdmissibilityOptions::default()).admissible)
    }))?;

    let failed: usize = checks.iter().map(|c| c.failures).sum();
    emit(&json!({ "seed": seed, "checks": checks, "passed": failed == 0 }))?;
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} property cases failed")));
    }
    Ok(())
}
