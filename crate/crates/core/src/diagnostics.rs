//! Quantitative monitors evaluated on trajectories.

use serde::{Deserialize, Serialize};

use crate::closed_forms::PowerPair;
use crate::discretization::{integrate_field, integrate_region_values, laplacian_apply, Field, Grid};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Slope of `log value` against `log t`.
    pub exponent: f64,
    pub amplitude: f64,
    /// Root mean square of the residuals in log space.
    pub rms_residual: f64,
    pub window: (f64, f64),
}

/// Least-squares fit of `value ≈ amplitude · t^exponent` over the samples whose
/// time lies in the closed `window`.
pub fn fit_power_law(samples: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty fit window ({lo}, {hi})")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in samples.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
        if !(t > 0.0 && v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("nonpositive sample ({t}, {v})")));
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < 5 {
        return Err(Error::invalid(format!(
            "fit window ({lo}, {hi}) holds {} samples, need at least 5",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit window samples share a single time"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(FitResult {
        exponent: slope,
        amplitude: intercept.exp(),
        rms_residual: (rss / n).sqrt(),
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub value_u: f64,
    pub value_v: f64,
}

/// `∫u(·,t)ψ` and `∫v(·,t)ψ` at every snapshot. The test function must vanish
/// on the boundary nodes.
pub fn trace_functional(traj: &Trajectory, psi: &Field) -> Result<Vec<TraceSample>> {
    let grid = traj.grid();
    if psi.grid().as_ref() != grid.as_ref() {
        return Err(Error::GridMismatch);
    }
    if grid.boundary_nodes().iter().any(|&i| psi.values()[i] != 0.0) {
        return Err(Error::invalid("test function is not compactly supported in the interior"));
    }
    traj.snapshots()
        .iter()
        .map(|s| {
            Ok(TraceSample {
                t: s.t,
                value_u: integrate_field(&s.u, Some(psi))?,
                value_v: integrate_field(&s.v, Some(psi))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    U,
    V,
}

fn check_region(grid: &Grid, region: (f64, f64)) -> Result<()> {
    let (x0, x1) = grid.span();
    let slack = 1e-12 * grid.domain().extent();
    if !(region.0 < region.1 && region.0 >= x0 - slack && region.1 <= x1 + slack) {
        return Err(Error::invalid(format!(
            "region [{}, {}] is not a subinterval of [{x0}, {x1}]",
            region.0, region.1
        )));
    }
    Ok(())
}

/// Integral of the piecewise-linear interpolant through `(ts, ys)` over `[lo, hi]`.
fn integrate_linear(ts: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..ts.len() - 1 {
        let (a, b) = (ts[k], ts[k + 1]);
        let (s, e) = (a.max(lo), b.min(hi));
        if e <= s {
            continue;
        }
        let at = |t: f64| ys[k] + (ys[k + 1] - ys[k]) * (t - a) / (b - a);
        total += 0.5 * (e - s) * (at(s) + at(e));
    }
    total
}

/// Space-time integral of `w^power` (w the chosen component) over
/// `region × t_window`: trapezoidal in space, and in time the exact integral of
/// the linear interpolant between snapshots.
pub fn cylinder_integral(
    traj: &Trajectory,
    power: f64,
    which: Component,
    region: (f64, f64),
    t_window: (f64, f64),
) -> Result<f64> {
    let grid = traj.grid();
    check_region(grid, region)?;
    let (lo, hi) = t_window;
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty time window ({lo}, {hi})")));
    }
    let ts = traj.times();
    if ts.len() < 2 || lo < ts[0] || hi > ts[ts.len() - 1] {
        return Err(Error::invalid(format!(
            "time window ({lo}, {hi}) is outside the trajectory span"
        )));
    }
    let slices = traj
        .snapshots()
        .iter()
        .map(|s| {
            let w = match which {
                Component::U => &s.u,
                Component::V => &s.v,
            };
            let powered: Vec<f64> = w.values().iter().map(|x| x.max(0.0).powf(power)).collect();
            integrate_region_values(grid, &powered, region.0, region.1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(integrate_linear(&ts, &slices, lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DichotomyKind {
    Regular,
    Singular,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyEvidence {
    /// Last over first value of the `u^q` cylinder integrals.
    pub uq_integral_trend: f64,
    pub vp_integral_trend: f64,
    pub mass_trend: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyVerdict {
    pub kind: DichotomyKind,
    pub evidence: DichotomyEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyThresholds {
    /// Last/first ratio above which the integrals count as unbounded.
    pub growth_ratio: f64,
    /// Successive ratios within `1 + saturation_tol` count as saturated.
    pub saturation_tol: f64,
}

impl Default for DichotomyThresholds {
    fn default() -> Self {
        DichotomyThresholds {
            growth_ratio: 10.0,
            saturation_tol: 0.05,
        }
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else if a == 0.0 {
        f64::INFINITY
    } else {
        b / a
    }
}

fn trend(xs: &[f64]) -> f64 {
    match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) => ratio(a, b),
        _ => f64::NAN,
    }
}

fn saturated(xs: &[f64], tol: f64) -> bool {
    xs.windows(2).all(|w| (ratio(w[0], w[1]) - 1.0).abs() <= tol)
}

/// Classifies a point from integrals over nested windows ordered from the
/// widest lower time to the one closest to `t = 0`. `uq` and `vp` are the
/// cylinder integrals of `u^q` and `v^p`; `mass` holds `∫(u+v)` at each
/// window's lower end. Fewer than three windows is always inconclusive.
pub fn dichotomy_classify(uq: &[f64], vp: &[f64], mass: &[f64], thresholds: DichotomyThresholds) -> DichotomyVerdict {
    let evidence = DichotomyEvidence {
        uq_integral_trend: trend(uq),
        vp_integral_trend: trend(vp),
        mass_trend: trend(mass),
    };
    let n = uq.len();
    let well_formed = n >= 3
        && vp.len() == n
        && mass.len() == n
        && uq.iter().chain(vp).chain(mass).all(|x| x.is_finite() && *x >= 0.0);
    if !well_formed {
        return DichotomyVerdict {
            kind: DichotomyKind::Inconclusive,
            evidence,
        };
    }
    let combined: Vec<f64> = uq.iter().zip(vp).map(|(a, b)| a + b).collect();
    let tol = thresholds.saturation_tol;
    let kind = if trend(&combined) > thresholds.growth_ratio && trend(mass) > 1.0 + tol {
        DichotomyKind::Singular
    } else if saturated(&combined, tol) && saturated(mass, tol) {
        DichotomyKind::Regular
    } else {
        DichotomyKind::Inconclusive
    };
    DichotomyVerdict { kind, evidence }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperEstimate {
    pub sup_u_t_a: f64,
    pub sup_v_t_b: f64,
}

/// Fraction of the domain extent used as interior margin when none is given.
pub const DEFAULT_INTERIOR_FRACTION: f64 = 0.2;

/// Empirical constants `sup u t^a` and `sup v t^b` over all snapshots with
/// `t > 0` and all nodes at distance at least `interior_margin` from the
/// boundary (20% of the extent by default).
pub fn check_upper_estimate(traj: &Trajectory, pair: &PowerPair, interior_margin: Option<f64>) -> Result<UpperEstimate> {
    if !pair.is_superlinear() {
        return Err(Error::invalid(format!("the estimate needs pq > 1, got pq = {}", pair.pq())));
    }
    let grid = traj.grid();
    let margin = interior_margin.unwrap_or(DEFAULT_INTERIOR_FRACTION * grid.domain().extent());
    let interior: Vec<usize> = (0..grid.nodes())
        .filter(|&i| grid.distance_to_boundary(i) >= margin)
        .collect();
    if interior.is_empty() {
        return Err(Error::invalid(format!("no nodes at distance {margin} from the boundary")));
    }
    let mut est = UpperEstimate {
        sup_u_t_a: 0.0,
        sup_v_t_b: 0.0,
    };
    for s in traj.snapshots().iter().filter(|s| s.t > 0.0) {
        let (ta, tb) = (s.t.powf(pair.a()), s.t.powf(pair.b()));
        for &i in &interior {
            est.sup_u_t_a = est.sup_u_t_a.max(s.u.values()[i] * ta);
            est.sup_v_t_b = est.sup_v_t_b.max(s.v.values()[i] * tb);
        }
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FSubsolutionReport {
    /// Largest positive part of the residual; zero when the inequality holds.
    pub max_violation: f64,
    pub max_residual: f64,
    pub d: f64,
    pub c: f64,
    pub k: f64,
    /// `k^q`, the right-hand side of the inequality.
    pub big_k: f64,
}

/// Constants `(d, c, k)` of the auxiliary function `F = (k+u)^d + v`.
pub fn f_subsolution_constants(pair: &PowerPair) -> Result<(f64, f64, f64)> {
    let (p, q) = (pair.p(), pair.q());
    if !(p > 1.0 && q > p) {
        return Err(Error::invalid(format!(
            "the F-subsolution needs q > p > 1 (d = 1 makes k undefined when q = p); got p = {p}, q = {q}"
        )));
    }
    let d = (q + 1.0) / (p + 1.0);
    let c = 2f64.powf(1.0 - p) * d.min(2f64.powf(1.0 - q));
    let k = c.powf(-1.0 / (d - 1.0));
    Ok((d, c, k))
}

/// Evaluates `F_t - ΔF + c (k+u)^{d-1} F^p - k^q` on interior nodes of every
/// snapshot that has neighbours on both sides; `F_t` is the centered
/// difference across the neighbouring snapshots.
pub fn check_f_subsolution(traj: &Trajectory, pair: &PowerPair) -> Result<FSubsolutionReport> {
    let (d, c, k) = f_subsolution_constants(pair)?;
    let p = pair.p();
    let big_k = k.powf(pair.q());
    let snaps = traj.snapshots();
    if snaps.len() < 3 {
        return Err(Error::invalid("need at least three snapshots to difference in time"));
    }
    let grid = traj.grid();
    let boundary = grid.boundary_nodes();
    let f_of = |j: usize| -> Result<Field> {
        snaps[j].u.zip_with(&snaps[j].v, |u, v| (k + u).powf(d) + v)
    };
    let mut max_residual = f64::NEG_INFINITY;
    let mut prev = f_of(0)?;
    let mut cur = f_of(1)?;
    for j in 1..snaps.len() - 1 {
        let next = f_of(j + 1)?;
        let dt = snaps[j + 1].t - snaps[j - 1].t;
        let lap = laplacian_apply(&cur, traj.bc());
        let u = snaps[j].u.values();
        for i in (0..grid.nodes()).filter(|i| !boundary.contains(i)) {
            let f = cur.values()[i];
            let ft = (next.values()[i] - prev.values()[i]) / dt;
            let r = ft - lap.values()[i] + c * (k + u[i]).powf(d - 1.0) * f.powf(p) - big_k;
            max_residual = max_residual.max(r);
        }
        prev = cur;
        cur = next;
    }
    Ok(FSubsolutionReport {
        max_violation: max_residual.max(0.0),
        max_residual,
        d,
        c,
        k,
        big_k,
    })
}

/// Parabolic cylinder `[x0-ρ, x0+ρ] × [t0-ρ², t0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub x0: f64,
    pub t0: f64,
    pub rho: f64,
}

impl Cylinder {
    fn shrunk(&self, eps: f64) -> Cylinder {
        Cylinder {
            rho: self.rho * (1.0 - eps),
            ..*self
        }
    }

    fn space(&self) -> (f64, f64) {
        (self.x0 - self.rho, self.x0 + self.rho)
    }

    fn time(&self) -> (f64, f64) {
        (self.t0 - self.rho * self.rho, self.t0)
    }
}

/// For each `ε`, the sup of `w` over the cylinder shrunk by `1 - ε` divided by
/// `(space-time mean of w^s over the full cylinder)^{1/s}`.
pub fn mean_value_check(
    caloric: &Trajectory,
    power_s: f64,
    cylinder: Cylinder,
    epsilons: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if !(power_s > 0.0) {
        return Err(Error::invalid(format!("power s must be positive, got {power_s}")));
    }
    if !(cylinder.rho > 0.0) {
        return Err(Error::invalid("cylinder radius must be positive"));
    }
    let grid = caloric.grid();
    let space = cylinder.space();
    let time = cylinder.time();
    check_region(grid, space).map_err(|_| Error::invalid("cylinder is out of the computed region"))?;
    let integral = cylinder_integral(caloric, power_s, Component::U, space, time)
        .map_err(|_| Error::invalid("cylinder is out of the computed time span"))?;
    let ones = vec![1.0; grid.nodes()];
    let volume = integrate_region_values(grid, &ones, space.0, space.1)? * (time.1 - time.0);
    let mean = (integral / volume).powf(1.0 / power_s);

    epsilons
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::invalid(format!("shrink factor must lie in (0, 1), got {eps}")));
            }
            let inner = cylinder.shrunk(eps);
            let (xs, ts) = (inner.space(), inner.time());
            let mut sup = f64::NEG_INFINITY;
            for s in caloric.snapshots().iter().filter(|s| s.t >= ts.0 && s.t <= ts.1) {
                for (x, w) in grid.coords().iter().zip(s.u.values()) {
                    if *x >= xs.0 && *x <= xs.1 {
                        sup = sup.max(*w);
                    }
                }
            }
            if sup == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("no samples inside the cylinder shrunk by {eps}")));
            }
            Ok((eps, sup / mean))
        })
        .collect()
}
