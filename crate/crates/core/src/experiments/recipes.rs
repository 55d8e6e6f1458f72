use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{ExperimentSpec, Params, Recipe, Series};
use crate::closed_forms::{elliptic_constants, eval_flat, flat_constants, PowerPair};
use crate::diagnostics::{
    check_f_subsolution, check_upper_estimate, cylinder_integral, dichotomy_classify, fit_power_law,
    mean_value_check, trace_functional, Component, Cylinder, DichotomyKind, DichotomyThresholds,
};
use crate::discretization::{
    build_grid, bump_function, integrate_field, integrate_region_values, BoundaryCondition, Field, Grid,
    SpatialDomain,
};
use crate::error::{Error, Result};
use crate::evolution::{heat_solve, residual_of, solve, SolverConfig, Trajectory};

#[derive(Debug, Default)]
pub(crate) struct Outcome(pub(crate) BTreeMap<String, Value>);

impl Outcome {
    fn num(&mut self, key: impl Into<String>, x: f64) {
        let v = if x.is_finite() {
            Value::from(x)
        } else {
            Value::from(x.to_string())
        };
        self.0.insert(key.into(), v);
    }

    fn text(&mut self, key: &str, s: &str) {
        self.0.insert(key.to_string(), Value::from(s));
    }

    fn flag(&mut self, key: &str, b: bool) {
        self.0.insert(key.to_string(), Value::from(b));
    }
}

pub(crate) struct RecipeResult {
    pub(crate) outcome: Outcome,
    pub(crate) trajectory: Option<Trajectory>,
    pub(crate) series: Vec<Series>,
}

fn series(name: &str, header: &[&str], rows: Vec<Vec<f64>>) -> Series {
    Series {
        name: name.to_string(),
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

pub(crate) fn run(spec: &ExperimentSpec) -> Result<RecipeResult> {
    let p = &spec.params;
    match spec.recipe {
        Recipe::FlatValidation => flat_validation(p, spec.seed),
        Recipe::ConvergenceOrder => convergence_order(p),
        Recipe::BlowupFit => blowup_fit(p, spec.seed),
        Recipe::EstimateSaturation => estimate_saturation(p, spec.seed),
        Recipe::TraceMeasurement => trace_measurement(p, spec.seed),
        Recipe::DichotomyProbe => dichotomy_probe(p, spec.seed),
        Recipe::RemovabilitySweep => removability_sweep(p),
        Recipe::SubsolutionCheck => subsolution_check(p, spec.seed),
        Recipe::MeanValueCheck => mean_value(p, spec.seed),
    }
}

fn pair_of(p: &Params) -> Result<PowerPair> {
    PowerPair::new(p.float("p"), p.float("q"))
}

fn grid_of(p: &Params, nodes: usize) -> Result<Arc<Grid>> {
    let dim = p.count("dim") as u32;
    let extent = p.float("extent");
    let domain = match p.text("domain") {
        "ball" => SpatialDomain::radial_ball(extent, dim)?,
        _ if dim != 1 => {
            return Err(Error::invalid(format!(
                "an interval domain needs dim = 1, got {dim}; use domain = \"ball\""
            )))
        }
        _ => SpatialDomain::interval(extent)?,
    };
    build_grid(domain, nodes)
}

fn bc_of(p: &Params) -> BoundaryCondition {
    match p.text("bc") {
        "dirichlet" => BoundaryCondition::DirichletZero,
        _ => BoundaryCondition::NeumannZero,
    }
}

fn solver_config(p: &Params, pair: PowerPair, t_start: f64, t_end: f64) -> SolverConfig {
    SolverConfig::new(pair, bc_of(p), t_start, t_end)
        .with_theta(p.float("theta"))
        .with_tol(p.float("tol_step"))
        .with_dt_init(p.float("dt_init"))
        .with_dt_min(p.float("dt_min"))
        .with_dt_max(p.float("dt_max"))
}

/// Output times in `(t_start, t_end]`: uniform, or geometric from `t_first`.
fn output_times(p: &Params, n_out: usize) -> Result<Vec<f64>> {
    let (t0, t1) = (p.float("t_start"), p.float("t_end"));
    if !(t1 > t0) {
        return Err(Error::invalid(format!("t_end ({t1}) must exceed t_start ({t0})")));
    }
    let mut ts: Vec<f64> = match p.text("spacing") {
        "log" => {
            let first = p.float("t_first");
            if !(first > t0 && first <= t1) {
                return Err(Error::invalid(format!("t_first must lie in (t_start, t_end], got {first}")));
            }
            if n_out == 1 {
                vec![t1]
            } else {
                (0..n_out)
                    .map(|k| first * (t1 / first).powf(k as f64 / (n_out - 1) as f64))
                    .collect()
            }
        }
        _ => (1..=n_out).map(|k| t0 + (t1 - t0) * k as f64 / n_out as f64).collect(),
    };
    *ts.last_mut().unwrap() = t1;
    Ok(ts)
}

/// Both initial components from the `ic` descriptor, with optional seeded
/// multiplicative noise.
fn initial_data(p: &Params, grid: &Arc<Grid>, pair: Option<&PowerPair>, seed: u64) -> Result<(Field, Field)> {
    let amplitude = p.float("amplitude");
    let width = p.float("width");
    let center = p.float("center");
    let (u, v) = match p.text("ic") {
        "flat_exact" => {
            let pair = pair.ok_or_else(|| Error::invalid("flat_exact data needs exponents p and q"))?;
            let (u, v) = eval_flat(pair, p.float("t_start"))?;
            (Field::constant(grid.clone(), u), Field::constant(grid.clone(), v))
        }
        "flat" => {
            let f = Field::constant(grid.clone(), amplitude);
            (f.clone(), f)
        }
        "bump" => {
            let f = bump_function(grid, center, width)?.map(|x| amplitude * x);
            (f.clone(), f)
        }
        "smooth" => {
            let extent = grid.domain().extent();
            let f = Field::from_fn(grid.clone(), |x| amplitude * (1.0 + 0.5 * (PI * (x - center) / extent).cos()));
            (f.clone(), f)
        }
        _ => {
            let n = grid.dim_n() as f64;
            let norm = amplitude * (4.0 * PI * width).powf(-0.5 * n);
            let f = Field::from_fn(grid.clone(), |x| norm * (-(x - center).powi(2) / (4.0 * width)).exp());
            (f.clone(), f)
        }
    };
    let noise = p.float("ic_noise");
    if noise == 0.0 {
        return Ok((u, v));
    }
    if noise >= 1.0 {
        return Err(Error::invalid(format!("ic_noise must be below 1, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturb = |f: Field| {
        let mut f = f;
        for x in f.values_mut() {
            *x *= 1.0 + noise * rng.random_range(-1.0..=1.0);
        }
        f
    };
    let u = perturb(u);
    let v = perturb(v);
    Ok((u, v))
}

fn interior_sup(traj: &Trajectory, margin: f64) -> Result<Vec<(f64, f64, f64)>> {
    let grid = traj.grid();
    let interior: Vec<usize> = (0..grid.nodes())
        .filter(|&i| grid.distance_to_boundary(i) >= margin)
        .collect();
    if interior.is_empty() {
        return Err(Error::invalid(format!("no nodes at distance {margin} from the boundary")));
    }
    Ok(traj
        .snapshots()
        .iter()
        .map(|s| {
            let su = interior.iter().map(|&i| s.u.values()[i]).fold(0.0, f64::max);
            let sv = interior.iter().map(|&i| s.v.values()[i]).fold(0.0, f64::max);
            (s.t, su, sv)
        })
        .collect())
}

fn flat_validation(p: &Params, seed: u64) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let grid = grid_of(p, p.count("nodes"))?;
    let (u0, v0) = initial_data(p, &grid, Some(&pair), seed)?;
    let outs = output_times(p, p.count("n_out"))?;
    let traj = solve(&u0, &v0, &solver_config(p, pair, p.float("t_start"), p.float("t_end")), &outs)?;

    let c = flat_constants(&pair)?;
    let mut err_u: f64 = 0.0;
    let mut err_v: f64 = 0.0;
    let mut rows = Vec::new();
    for s in traj.snapshots() {
        let (eu, ev) = eval_flat(&pair, s.t)?;
        let du = s.u.values().iter().map(|x| ((x - eu) / eu).abs()).fold(0.0, f64::max);
        let dv = s.v.values().iter().map(|x| ((x - ev) / ev).abs()).fold(0.0, f64::max);
        err_u = err_u.max(du);
        err_v = err_v.max(dv);
        rows.push(vec![s.t, s.u.max(), eu, du, s.v.max(), ev, dv]);
    }
    let mut o = Outcome::default();
    o.num("a_star", c.a_star);
    o.num("b_star", c.b_star);
    o.num("max_rel_error_u", err_u);
    o.num("max_rel_error_v", err_v);
    o.num("steps", traj.steps().len() as f64);
    o.flag("tracking_ok", err_u.max(err_v) < 1e-4);
    Ok(RecipeResult {
        outcome: o,
        trajectory: Some(traj),
        series: vec![series(
            "tracking",
            &["t", "u_max", "u_exact", "rel_error_u", "v_max", "v_exact", "rel_error_v"],
            rows,
        )],
    })
}

fn orders(errors: &[f64], steps: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(steps.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

fn convergence_order(p: &Params) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let bc = bc_of(p);
    let mut o = Outcome::default();
    let mut rows = Vec::new();

    let grid = grid_of(p, p.count("nodes"))?;
    let t_probe = p.float("t_probe");
    let dts = p.floats("dt_list");
    let flat = |t: f64, which: usize| -> Field {
        let (u, v) = eval_flat(&pair, t).unwrap_or((f64::NAN, f64::NAN));
        Field::constant(grid.clone(), if which == 0 { u } else { v })
    };
    if dts.iter().any(|&dt| dt >= t_probe) {
        return Err(Error::invalid("every dt in dt_list must be below t_probe"));
    }
    let mut temporal = Vec::new();
    for &dt in &dts {
        let (ru, rv) = residual_of(&|t| flat(t, 0), &|t| flat(t, 1), &pair, bc, t_probe, dt)?;
        let e = ru.values().iter().chain(rv.values()).map(|x| x.abs()).fold(0.0, f64::max);
        temporal.push(e);
        rows.push(vec![0.0, dt, e]);
    }

    let consts = elliptic_constants(&pair, p.count("dim") as u32)?;
    let mask = p.float("mask");
    let mut spatial = Vec::new();
    let mut hs = Vec::new();
    for &n in &p.counts("nodes_list") {
        let g = grid_of(p, n)?;
        let profile = |which: usize| {
            Field::from_fn(g.clone(), |x| {
                let r = x.abs();
                if r < 0.5 * mask {
                    0.0
                } else {
                    let (u, v) = consts.eval(&pair, r);
                    if which == 0 {
                        u
                    } else {
                        v
                    }
                }
            })
        };
        let (pu, pv) = (profile(0), profile(1));
        let (ru, rv) = residual_of(&|_| pu.clone(), &|_| pv.clone(), &pair, bc, 1.0, 1.0)?;
        let boundary = g.boundary_nodes();
        let e = (0..g.nodes())
            .filter(|i| g.coords()[*i].abs() >= mask && !boundary.contains(i))
            .map(|i| ru.values()[i].abs().max(rv.values()[i].abs()))
            .fold(0.0, f64::max);
        spatial.push(e);
        hs.push(g.h());
        rows.push(vec![1.0, g.h(), e]);
    }

    let t_orders = orders(&temporal, &dts);
    let s_orders = orders(&spatial, &hs);
    for (k, x) in t_orders.iter().enumerate() {
        o.num(format!("temporal_order_{k}"), *x);
    }
    for (k, x) in s_orders.iter().enumerate() {
        o.num(format!("spatial_order_{k}"), *x);
    }
    let within = |xs: &[f64]| xs.iter().all(|x| (x - 2.0).abs() <= 0.2);
    o.flag("temporal_order_ok", within(&t_orders));
    o.flag("spatial_order_ok", within(&s_orders));
    Ok(RecipeResult {
        outcome: o,
        trajectory: None,
        series: vec![series("convergence", &["kind", "step", "error"], rows)],
    })
}

fn blowup_fit(p: &Params, seed: u64) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let grid = grid_of(p, p.count("nodes"))?;
    let (u0, v0) = initial_data(p, &grid, Some(&pair), seed)?;
    let outs = output_times(p, p.count("n_out"))?;
    let traj = solve(&u0, &v0, &solver_config(p, pair, p.float("t_start"), p.float("t_end")), &outs)?;

    let margin = p.float("margin_fraction") * grid.domain().extent();
    let sups = interior_sup(&traj, margin)?;
    let window = (p.float("fit_lo"), p.float("fit_hi"));
    let su: Vec<(f64, f64)> = sups.iter().map(|&(t, u, _)| (t, u)).collect();
    let sv: Vec<(f64, f64)> = sups.iter().map(|&(t, _, v)| (t, v)).collect();
    let fu = fit_power_law(&su, window)?;
    let fv = fit_power_law(&sv, window)?;

    let mut o = Outcome::default();
    o.num("exponent_u", fu.exponent);
    o.num("exponent_v", fv.exponent);
    o.num("expected_u", -pair.a());
    o.num("expected_v", -pair.b());
    let rel_u = ((fu.exponent + pair.a()) / pair.a()).abs();
    let rel_v = ((fv.exponent + pair.b()) / pair.b()).abs();
    o.num("rel_error_u", rel_u);
    o.num("rel_error_v", rel_v);
    o.num("amplitude_u", fu.amplitude);
    o.num("amplitude_v", fv.amplitude);
    o.num("rms_residual_u", fu.rms_residual);
    o.num("rms_residual_v", fv.rms_residual);
    o.flag("within_2_percent", rel_u < 0.02 && rel_v < 0.02);
    let rows = sups.iter().map(|&(t, u, v)| vec![t, u, v]).collect();
    Ok(RecipeResult {
        outcome: o,
        trajectory: Some(traj),
        series: vec![series("sup_series", &["t", "sup_u", "sup_v"], rows)],
    })
}

fn estimate_saturation(p: &Params, seed: u64) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let grid = grid_of(p, p.count("nodes"))?;
    let (u0, v0) = initial_data(p, &grid, Some(&pair), seed)?;
    let outs = output_times(p, p.count("n_out"))?;
    let traj = solve(&u0, &v0, &solver_config(p, pair, p.float("t_start"), p.float("t_end")), &outs)?;
    let margin = p.float("margin_fraction") * grid.domain().extent();
    let est = check_upper_estimate(&traj, &pair, Some(margin))?;
    let c = flat_constants(&pair)?;

    let mut o = Outcome::default();
    o.num("sup_u_t_a", est.sup_u_t_a);
    o.num("sup_v_t_b", est.sup_v_t_b);
    o.num("a_star", c.a_star);
    o.num("b_star", c.b_star);
    o.num("ratio_u", est.sup_u_t_a / c.a_star);
    o.num("ratio_v", est.sup_v_t_b / c.b_star);
    o.flag("below_5_a_star", est.sup_u_t_a <= 5.0 * c.a_star && est.sup_v_t_b <= 5.0 * c.b_star);
    Ok(RecipeResult {
        outcome: o,
        trajectory: Some(traj),
        series: Vec::new(),
    })
}

fn trace_measurement(p: &Params, seed: u64) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let grid = grid_of(p, p.count("nodes"))?;
    let (u0, v0) = initial_data(p, &grid, Some(&pair), seed)?;
    let outs = output_times(p, p.count("n_out"))?;
    let traj = solve(&u0, &v0, &solver_config(p, pair, p.float("t_start"), p.float("t_end")), &outs)?;
    let psi = bump_function(&grid, p.float("psi_center"), p.float("psi_width"))?;
    let samples = trace_functional(&traj, &psi)?;

    let mut o = Outcome::default();
    o.num("initial_u", integrate_field(&u0, Some(&psi))?);
    o.num("initial_v", integrate_field(&v0, Some(&psi))?);
    let (first, last) = (samples[0], samples[samples.len() - 1]);
    o.num("first_t", first.t);
    o.num("first_u", first.value_u);
    o.num("first_v", first.value_v);
    o.num("last_t", last.t);
    o.num("last_u", last.value_u);
    o.num("last_v", last.value_v);
    let rows = samples
        .iter()
        .zip(traj.snapshots())
        .map(|(s, st)| {
            Ok(vec![
                s.t,
                s.value_u,
                s.value_v,
                integrate_field(&st.u, None)?,
                integrate_field(&st.v, None)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecipeResult {
        outcome: o,
        trajectory: Some(traj),
        series: vec![series("trace", &["t", "trace_u", "trace_v", "mass_u", "mass_v"], rows)],
    })
}

fn dichotomy_probe(p: &Params, seed: u64) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let grid = grid_of(p, p.count("nodes"))?;
    let (u0, v0) = initial_data(p, &grid, Some(&pair), seed)?;
    let t_start = p.float("t_start");
    let t_hi = p.float("t_hi");
    let mut windows = p.floats("windows");
    windows.sort_by(|a, b| b.total_cmp(a));
    windows.dedup();
    let t_min = windows[windows.len() - 1];
    if !(t_min > t_start && windows[0] < t_hi) {
        return Err(Error::invalid("windows must lie strictly between t_start and t_hi"));
    }

    let n_out = p.count("n_out").max(2);
    let mut outs: Vec<f64> = (0..n_out)
        .map(|k| t_min * (t_hi / t_min).powf(k as f64 / (n_out - 1) as f64))
        .chain(windows.iter().copied())
        .collect();
    outs.sort_by(f64::total_cmp);
    outs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t_hi);
    *outs.last_mut().unwrap() = t_hi;
    let traj = solve(&u0, &v0, &solver_config(p, pair, t_start, t_hi), &outs)?;

    let (x0, x1) = grid.span();
    let center = p.float("center");
    let half = p.float("region");
    let region = ((center - half).max(x0), (center + half).min(x1));
    let mut uq = Vec::new();
    let mut vp = Vec::new();
    let mut mass = Vec::new();
    let mut rows = Vec::new();
    for &t_lo in &windows {
        let a = cylinder_integral(&traj, pair.q(), Component::U, region, (t_lo, t_hi))?;
        let b = cylinder_integral(&traj, pair.p(), Component::V, region, (t_lo, t_hi))?;
        let snap = traj
            .snapshots()
            .iter()
            .min_by(|s, r| (s.t - t_lo).abs().total_cmp(&(r.t - t_lo).abs()))
            .unwrap();
        let sum: Vec<f64> = snap.u.values().iter().zip(snap.v.values()).map(|(u, v)| u + v).collect();
        let m = integrate_region_values(&grid, &sum, region.0, region.1)?;
        uq.push(a);
        vp.push(b);
        mass.push(m);
        rows.push(vec![t_lo, a, b, m]);
    }
    let thresholds = DichotomyThresholds {
        growth_ratio: p.float("growth_ratio"),
        saturation_tol: p.float("saturation_tol"),
    };
    let verdict = dichotomy_classify(&uq, &vp, &mass, thresholds);

    let mut o = Outcome::default();
    o.text(
        "verdict",
        match verdict.kind {
            DichotomyKind::Regular => "regular",
            DichotomyKind::Singular => "singular",
            DichotomyKind::Inconclusive => "inconclusive",
        },
    );
    o.num("uq_integral_trend", verdict.evidence.uq_integral_trend);
    o.num("vp_integral_trend", verdict.evidence.vp_integral_trend);
    o.num("mass_trend", verdict.evidence.mass_trend);
    let combined: Vec<f64> = uq.iter().zip(&vp).map(|(a, b)| a + b).collect();
    let max_step = combined.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max);
    o.num("max_successive_ratio", max_step);
    Ok(RecipeResult {
        outcome: o,
        trajectory: Some(traj),
        series: vec![series("windows", &["t_lo", "uq_integral", "vp_integral", "mass"], rows)],
    })
}

fn removability_sweep(p: &Params) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let grid = grid_of(p, p.count("nodes"))?;
    let t_probe = p.float("t_probe");
    let config = solver_config(p, pair, 0.0, t_probe);
    let amplitude = p.float("amplitude");
    let center = p.float("center");

    let mut masses = Vec::new();
    let mut rows = Vec::new();
    let mut last = None;
    for &eps in &p.floats("eps") {
        let ic = bump_function(&grid, center, eps)?.map(|x| amplitude * x);
        let traj = solve(&ic, &ic, &config, &[t_probe])?;
        let s = traj.last();
        let (mu, mv) = (integrate_field(&s.u, None)?, integrate_field(&s.v, None)?);
        masses.push(mu);
        rows.push(vec![eps, mu, mv]);
        last = Some(traj);
    }

    let mut o = Outcome::default();
    for (k, m) in masses.iter().enumerate() {
        o.num(format!("mass_{k}"), *m);
    }
    let n = masses.len();
    let ratio = masses[n - 1] / masses[0];
    let gap = if n >= 2 {
        ((masses[n - 1] - masses[n - 2]) / masses[n - 2]).abs()
    } else {
        0.0
    };
    let decreasing = masses.windows(2).all(|w| w[1] < w[0]);
    o.num("last_first_ratio", ratio);
    o.num("last_two_gap", gap);
    o.flag("monotone_decreasing", decreasing);
    let trend = if n >= 2 && decreasing && ratio < 0.2 {
        "collapsing"
    } else if n >= 2 && gap <= 0.1 {
        "converging"
    } else {
        "undetermined"
    };
    o.text("trend", trend);
    Ok(RecipeResult {
        outcome: o,
        trajectory: last,
        series: vec![series("masses", &["eps", "mass_u", "mass_v"], rows)],
    })
}

fn subsolution_check(p: &Params, seed: u64) -> Result<RecipeResult> {
    let pair = pair_of(p)?;
    let mut o = Outcome::default();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut finest = None;
    let nodes_list = p.counts("nodes_list");
    let n_out = p.count("n_out");
    for (k, &n) in nodes_list.iter().enumerate() {
        let grid = grid_of(p, n)?;
        let (u0, v0) = initial_data(p, &grid, Some(&pair), seed)?;
        let refine = (n - 1) as f64 / (nodes_list[0] - 1).max(1) as f64;
        let outs = output_times(p, ((n_out as f64) * refine).round().max(3.0) as usize)?;
        let traj = solve(&u0, &v0, &solver_config(p, pair, p.float("t_start"), p.float("t_end")), &outs)?;
        let rep = check_f_subsolution(&traj, &pair)?;
        if k == 0 {
            o.num("d", rep.d);
            o.num("c", rep.c);
            o.num("k", rep.k);
            o.num("big_k", rep.big_k);
        }
        o.num(format!("max_violation_{k}"), rep.max_violation);
        o.num(format!("max_residual_{k}"), rep.max_residual);
        violations.push(rep.max_violation / rep.big_k);
        rows.push(vec![n as f64, grid.h(), rep.max_violation, rep.max_residual]);
        finest = Some(traj);
    }
    o.num("max_relative_violation", violations.iter().copied().fold(0.0, f64::max));
    o.flag("non_increasing", violations.windows(2).all(|w| w[1] <= w[0]));
    Ok(RecipeResult {
        outcome: o,
        trajectory: finest,
        series: vec![series("refinement", &["nodes", "h", "max_violation", "max_residual"], rows)],
    })
}

fn mean_value(p: &Params, seed: u64) -> Result<RecipeResult> {
    let grid = grid_of(p, p.count("nodes"))?;
    let (w0, _) = initial_data(p, &grid, None, seed)?;
    let outs = output_times(p, p.count("n_out"))?;
    // the exponents are not used by the heat flow
    let unused = PowerPair::new(2.0, 2.0)?;
    let traj = heat_solve(&w0, &solver_config(p, unused, p.float("t_start"), p.float("t_end")), &outs)?;
    let s = p.float("power_s");
    let cylinder = Cylinder {
        x0: p.float("x0"),
        t0: p.float("t0"),
        rho: p.float("rho"),
    };
    let mut eps = p.floats("eps");
    eps.sort_by(f64::total_cmp);
    let ratios = mean_value_check(&traj, s, cylinder, &eps)?;

    let exponent = (grid.dim_n() as f64 + 2.0) / (s * s);
    let scaled: Vec<f64> = ratios.iter().map(|(e, r)| r * e.powf(exponent)).collect();
    let constant = scaled[scaled.len() - 1];
    let mut o = Outcome::default();
    for (k, (e, r)) in ratios.iter().enumerate() {
        o.num(format!("ratio_{k}"), *r);
        o.num(format!("eps_{k}"), *e);
    }
    o.num("constant", constant);
    o.flag("bounded", scaled.iter().all(|x| *x <= constant * (1.0 + 1e-12)));
    o.flag("monotone", ratios.windows(2).all(|w| w[1].1 <= w[0].1));
    let rows = ratios.iter().zip(&scaled).map(|((e, r), sc)| vec![*e, *r, *sc]).collect();
    Ok(RecipeResult {
        outcome: o,
        trajectory: Some(traj),
        series: vec![series("mean_value", &["eps", "ratio", "scaled_ratio"], rows)],
    })
}
