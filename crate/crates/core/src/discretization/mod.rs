//! Uniform 1D meshes on an interval `[-L, L]` or on the radius `[0, R]` of a
//! ball in dimension N, together with the discrete Laplacian, trapezoidal
//! quadrature and compactly supported bump functions.

mod tridiag;

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use tridiag::Tridiagonal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    RadialBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialDomain {
    kind: DomainKind,
    extent: f64,
    dim_n: u32,
}

impl SpatialDomain {
    /// The interval `[-half_length, half_length]` (N = 1).
    pub fn interval(half_length: f64) -> Result<Self> {
        check_extent(half_length)?;
        Ok(SpatialDomain {
            kind: DomainKind::Interval,
            extent: half_length,
            dim_n: 1,
        })
    }

    /// Radially symmetric functions on the ball of radius `radius` in R^N.
    pub fn radial_ball(radius: f64, dim_n: u32) -> Result<Self> {
        check_extent(radius)?;
        if dim_n == 0 {
            return Err(Error::invalid("radial ball needs dimension N >= 1"));
        }
        Ok(SpatialDomain {
            kind: DomainKind::RadialBall,
            extent: radius,
            dim_n,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn dim_n(&self) -> u32 {
        self.dim_n
    }
}

fn check_extent(extent: f64) -> Result<()> {
    if extent > 0.0 && extent.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("domain extent must be positive, got {extent}")))
    }
}

/// Area of the unit sphere in R^N (2 for N = 1).
pub fn unit_sphere_area(dim_n: u32) -> f64 {
    match dim_n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        n => 2.0 * PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: SpatialDomain,
    h: f64,
    coords: Vec<f64>,
}

pub fn build_grid(domain: SpatialDomain, nodes: usize) -> Result<Arc<Grid>> {
    if nodes < 3 {
        return Err(Error::invalid(format!("a grid needs at least 3 nodes, got {nodes}")));
    }
    let last = (nodes - 1) as f64;
    let (h, coords) = match domain.kind {
        DomainKind::Interval => {
            let l = domain.extent;
            // (2i - (n-1)) L / (n-1) keeps the mesh exactly mirror-symmetric.
            let coords = (0..nodes)
                .map(|i| (2.0 * i as f64 - last) * l / last)
                .collect();
            (2.0 * l / last, coords)
        }
        DomainKind::RadialBall => {
            let r = domain.extent;
            let coords = (0..nodes).map(|i| i as f64 * r / last).collect();
            (r / last, coords)
        }
    };
    Ok(Arc::new(Grid { domain, h, coords }))
}

impl Grid {
    pub fn domain(&self) -> &SpatialDomain {
        &self.domain
    }

    pub fn nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_radial(&self) -> bool {
        self.domain.kind == DomainKind::RadialBall
    }

    pub fn dim_n(&self) -> u32 {
        self.domain.dim_n
    }

    /// Lower and upper coordinate bounds of the mesh.
    pub fn span(&self) -> (f64, f64) {
        (self.coords[0], self.coords[self.nodes() - 1])
    }

    /// Distance from node `i` to the boundary of the physical domain. The
    /// origin of a radial mesh is an interior point.
    pub fn distance_to_boundary(&self, i: usize) -> f64 {
        let x = self.coords[i];
        match self.domain.kind {
            DomainKind::Interval => self.domain.extent - x.abs(),
            DomainKind::RadialBall => self.domain.extent - x,
        }
    }

    /// Indices of nodes on the physical boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        match self.domain.kind {
            DomainKind::Interval => vec![0, self.nodes() - 1],
            DomainKind::RadialBall => vec![self.nodes() - 1],
        }
    }

    /// Surface-measure factor `ω_{N-1} r^{N-1}` (1 on an interval).
    fn geometric_factor(&self, x: f64) -> f64 {
        match self.domain.kind {
            DomainKind::Interval => 1.0,
            DomainKind::RadialBall => {
                let n = self.domain.dim_n;
                unit_sphere_area(n) * x.abs().powi(n as i32 - 1)
            }
        }
    }

    /// Trapezoidal weights including the surface-measure factor.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let n = self.nodes();
        self.coords
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let w = if i == 0 || i == n - 1 { 0.5 * self.h } else { self.h };
                w * self.geometric_factor(x)
            })
            .collect()
    }

    /// Matrix of the discrete Laplacian under `bc`.
    ///
    /// Interval rows use `(w_{i-1} - 2w_i + w_{i+1})/h²`; radial rows add the
    /// centered `(N-1)/r w'` term and the origin row is `2N (w_1 - w_0)/h²`.
    /// Neumann ghosts are reflections. Under Dirichlet the boundary rows are
    /// zero and the boundary value is taken as 0 in the neighbouring rows.
    pub fn laplacian_matrix(&self, bc: BoundaryCondition) -> Tridiagonal {
        let n = self.nodes();
        let h2 = self.h * self.h;
        let mut m = Tridiagonal::zeros(n);
        let radial = self.is_radial();
        let nm1 = self.domain.dim_n as f64 - 1.0;

        for i in 1..n - 1 {
            let drift = if radial { nm1 / (2.0 * self.coords[i] * self.h) } else { 0.0 };
            m.lower[i] = 1.0 / h2 - drift;
            m.diag[i] = -2.0 / h2;
            m.upper[i] = 1.0 / h2 + drift;
        }

        // first node
        if radial {
            let two_n = 2.0 * self.domain.dim_n as f64;
            m.diag[0] = -two_n / h2;
            m.upper[0] = two_n / h2;
        } else if bc == BoundaryCondition::NeumannZero {
            m.diag[0] = -2.0 / h2;
            m.upper[0] = 2.0 / h2;
        } else {
            m.lower[1] = 0.0;
        }

        // last node
        match bc {
            BoundaryCondition::NeumannZero => {
                m.lower[n - 1] = 2.0 / h2;
                m.diag[n - 1] = -2.0 / h2;
            }
            BoundaryCondition::DirichletZero => {
                m.upper[n - 2] = 0.0;
            }
        }
        m
    }
}

/// Samples of a scalar function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(Error::invalid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.nodes()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.nodes()];
        Field { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.coords().iter().map(|&x| f(x)).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Rows `coordinate,value` with round-trip precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["coordinate", "value"])?;
        for (x, v) in self.grid.coords().iter().zip(&self.values) {
            wtr.write_record([x.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    DirichletZero,
    NeumannZero,
}

pub fn laplacian_apply(field: &Field, bc: BoundaryCondition) -> Field {
    let values = field.grid.laplacian_matrix(bc).apply(&field.values);
    Field {
        grid: field.grid.clone(),
        values,
    }
}

/// Trapezoidal integral of `field * weight` over the whole domain, with the
/// surface-measure factor on radial meshes.
pub fn integrate_field(field: &Field, weight: Option<&Field>) -> Result<f64> {
    let w = field.grid.quadrature_weights();
    match weight {
        None => Ok(field.values.iter().zip(&w).map(|(f, w)| f * w).sum()),
        Some(psi) => {
            field.check_same_grid(psi)?;
            Ok(field
                .values
                .iter()
                .zip(&psi.values)
                .zip(&w)
                .map(|((f, g), w)| f * g * w)
                .sum())
        }
    }
}

/// Integral over the coordinate range `[lo, hi]` of the piecewise-linear
/// interpolant of `f · ω r^{N-1}`. Agrees with [`integrate_field`] on the full
/// range and is monotone in the range for nonnegative samples.
pub fn integrate_region(field: &Field, lo: f64, hi: f64) -> Result<f64> {
    integrate_region_values(&field.grid, &field.values, lo, hi)
}

pub(crate) fn integrate_region_values(grid: &Grid, values: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::invalid(format!("empty region [{lo}, {hi}]")));
    }
    let (x0, x1) = grid.span();
    let (lo, hi) = (lo.max(x0), hi.min(x1));
    if lo >= hi {
        return Ok(0.0);
    }
    let xs = grid.coords();
    let g = |i: usize| values[i] * grid.geometric_factor(xs[i]);
    let h = grid.h();
    let first = (((lo - x0) / h).floor() as usize).min(xs.len() - 2);
    let mut total = 0.0;
    for i in first..xs.len() - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        if a >= hi {
            break;
        }
        let (s, e) = (a.max(lo), b.min(hi));
        if e <= s {
            continue;
        }
        let (ga, gb) = (g(i), g(i + 1));
        let interp = |x: f64| ga + (gb - ga) * (x - a) / (b - a);
        total += 0.5 * (e - s) * (interp(s) + interp(e));
    }
    Ok(total)
}

/// Smooth bump `exp(1 - 1/(1 - s²))`, `s = (x - center)/width`, zero for
/// `|s| >= 1`, scaled to unit integral on the grid.
pub fn bump_function(grid: &Arc<Grid>, center: f64, width: f64) -> Result<Field> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid(format!("bump width must be positive, got {width}")));
    }
    let (x0, x1) = grid.span();
    let slack = 1e-12 * grid.domain().extent();
    let (lo, hi) = (center - width, center + width);
    let fits = if grid.is_radial() {
        hi <= x1 + slack && (center == 0.0 || lo >= x0 - slack)
    } else {
        lo >= x0 - slack && hi <= x1 + slack
    };
    if !fits {
        return Err(Error::invalid(format!(
            "bump support [{lo}, {hi}] exceeds the domain [{x0}, {x1}]"
        )));
    }
    let raw = Field::from_fn(grid.clone(), |x| bump_profile((x - center) / width));
    let mass = integrate_field(&raw, None)?;
    let support = raw.values().iter().filter(|&&v| v > 0.0).count();
    if support < 3 || !(mass > 0.0) {
        return Err(Error::invalid(format!(
            "bump of width {width} is not resolved by the grid (h = {})",
            grid.h()
        )));
    }
    Ok(raw.map(|v| v / mass))
}

fn bump_profile(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}
