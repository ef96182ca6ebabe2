//! Radial domain discretization, quadrature and weighted norms.
//!
//! A profile lives on a truncated interval [0, R]. Nodes exclude the
//! origin; the profile is constant on the innermost cell (even
//! extension, u'(0) = 0), piecewise linear between nodes, zero at R
//! and extended by zero on (R, infinity).

use crate::error::{Error, Result};
use crate::gauss;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Gauss-Legendre order used inside every mesh cell.
pub const CELL_GAUSS_ORDER: usize = 6;

/// Surface measure of the unit sphere S^{N-1} in R^N.
///
/// For N = 1 this is the counting measure of {-1, +1}, i.e. 2.
pub fn sphere_area(n: i64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidDimension(n));
    }
    // 2 pi^{N/2} / Gamma(N/2) with Gamma evaluated exactly at
    // half-integers: Gamma(1/2) = sqrt(pi), Gamma(1) = 1,
    // Gamma(x+1) = x Gamma(x).
    let half_n = n as f64 / 2.0;
    let mut gamma = if n % 2 == 0 {
        1.0 // Gamma(1)
    } else {
        std::f64::consts::PI.sqrt() // Gamma(1/2)
    };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < half_n - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    Ok(2.0 * std::f64::consts::PI.powf(half_n) / gamma)
}

/// Node radii for a power-law graded mesh: r_i = R (i/M)^grading.
pub fn node_positions(r_max: f64, m: usize, grading: f64) -> Vec<f64> {
    (1..=m)
        .map(|i| r_max * (i as f64 / m as f64).powf(grading))
        .collect()
}

/// Truncated radial mesh with per-cell Gauss quadrature.
///
/// Cell 0 is [0, r_0]; cell c >= 1 is [r_{c-1}, r_c]. There are M
/// cells and M nodes r_0 < ... < r_{M-1} = R.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    dimension: i64,
    truncation_radius: f64,
    grading: f64,
    nodes: Vec<f64>,
    // Flattened per-cell Gauss rule: cell c owns entries
    // [c*CELL_GAUSS_ORDER, (c+1)*CELL_GAUSS_ORDER).
    gauss_points: Vec<f64>,
    gauss_weights: Vec<f64>,
    hash: u64,
}

impl RadialGrid {
    pub fn dimension(&self) -> i64 {
        self.dimension
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// [left, right] bounds of cell c.
    pub fn cell_bounds(&self, c: usize) -> (f64, f64) {
        let left = if c == 0 { 0.0 } else { self.nodes[c - 1] };
        (left, self.nodes[c])
    }

    pub fn cell_width(&self, c: usize) -> f64 {
        let (a, b) = self.cell_bounds(c);
        b - a
    }

    pub fn cell_midpoint(&self, c: usize) -> f64 {
        let (a, b) = self.cell_bounds(c);
        0.5 * (a + b)
    }

    /// Gauss points and plain dr-weights of cell c.
    pub fn cell_rule(&self, c: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let lo = c * CELL_GAUSS_ORDER;
        let hi = lo + CELL_GAUSS_ORDER;
        self.gauss_points[lo..hi]
            .iter()
            .copied()
            .zip(self.gauss_weights[lo..hi].iter().copied())
    }

    /// Index of the cell containing r, for 0 <= r <= R.
    pub fn cell_of(&self, r: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|node| node.partial_cmp(&r).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.min(self.nodes.len() - 1),
        }
    }

    /// Digest of (N, R, M, grading, nodes); keys the kernel cache.
    pub fn hash(&self) -> u64 {
        self.hash
    }
}

fn grid_digest(dimension: i64, r_max: f64, grading: f64, nodes: &[f64]) -> u64 {
    let mut h = Sha256::new();
    h.update(dimension.to_le_bytes());
    h.update(r_max.to_le_bytes());
    h.update((nodes.len() as u64).to_le_bytes());
    h.update(grading.to_le_bytes());
    for &r in nodes {
        h.update(r.to_le_bytes());
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

/// Build a graded mesh with M cells on [0, R].
pub fn make_grid(dimension: i64, r_max: f64, m: usize, grading: f64) -> Result<RadialGrid> {
    if dimension < 1 {
        return Err(Error::InvalidDimension(dimension));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::Config(format!(
            "truncation radius must be positive, got {r_max}"
        )));
    }
    if m < 8 {
        return Err(Error::Config(format!("need at least 8 cells, got {m}")));
    }
    if !(grading >= 1.0) {
        return Err(Error::Config(format!(
            "grading exponent must be >= 1, got {grading}"
        )));
    }
    let nodes = node_positions(r_max, m, grading);
    let mut gauss_points = Vec::with_capacity(m * CELL_GAUSS_ORDER);
    let mut gauss_weights = Vec::with_capacity(m * CELL_GAUSS_ORDER);
    let mut left = 0.0;
    for &right in &nodes {
        for (x, w) in gauss::rule_on(left, right, CELL_GAUSS_ORDER) {
            gauss_points.push(x);
            gauss_weights.push(w);
        }
        left = right;
    }
    let hash = grid_digest(dimension, r_max, grading, &nodes);
    Ok(RadialGrid {
        dimension,
        truncation_radius: r_max,
        grading,
        nodes,
        gauss_points,
        gauss_weights,
        hash,
    })
}

/// Nodal values of a radial profile on a shared grid.
///
/// The last nodal value is exactly zero; the profile is extended by
/// zero beyond the truncation radius.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

/// Serialized form of a solution profile:
/// `{params, grid: {R, M, grading}, values: [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "R")]
    pub r_max: f64,
    #[serde(rename = "M")]
    pub cells: usize,
    pub grading: f64,
}

impl RadialFunction {
    /// Wrap nodal values; the last value must already be zero.
    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::Config(format!(
                "expected {} nodal values, got {}",
                grid.num_nodes(),
                values.len()
            )));
        }
        if values.last() != Some(&0.0) {
            return Err(Error::Config(
                "last nodal value must be exactly 0 (zero extension)".into(),
            ));
        }
        Ok(RadialFunction { grid, values })
    }

    /// Sample a closure at the nodes, forcing the boundary value to 0.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F) -> Self {
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        *values.last_mut().unwrap() = 0.0;
        RadialFunction { grid, values }
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.num_nodes()];
        RadialFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutate nodal values, keeping the boundary pinned at zero.
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.num_nodes() {
            return Err(Error::Config("nodal value count mismatch".into()));
        }
        self.values = values;
        *self.values.last_mut().unwrap() = 0.0;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, t: f64) -> Self {
        let values = self.values.iter().map(|&v| t * v).collect();
        RadialFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Piecewise-linear slope on cell c (zero on the innermost cell).
    pub fn slope(&self, c: usize) -> f64 {
        if c == 0 {
            return 0.0;
        }
        (self.values[c] - self.values[c - 1]) / self.grid.cell_width(c)
    }

    /// Value at radius r inside cell c (no bounds checks beyond the cell).
    pub fn eval_in_cell(&self, c: usize, r: f64) -> f64 {
        if c == 0 {
            return self.values[0];
        }
        let (a, _) = self.grid.cell_bounds(c);
        self.values[c - 1] + self.slope(c) * (r - a)
    }

    /// Value at an arbitrary radius; zero for r >= R, constant near 0.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.grid.truncation_radius() {
            return 0.0;
        }
        let c = self.grid.cell_of(r);
        self.eval_in_cell(c, r)
    }

    /// Public interpolation entry point; rejects negative radii.
    pub fn interpolate(&self, r: f64) -> Result<f64> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
        }
        Ok(self.eval(r))
    }
}

/// Weighted Lebesgue norm: (omega_{N-1} int_0^R r^{N-1+w} |f|^p dr)^{1/p}.
pub fn weighted_lp_norm(f: &RadialFunction, p: f64, w: f64) -> Result<f64> {
    Ok(weighted_lp_power(f, p, w)?.powf(1.0 / p))
}

/// The p-th power of [`weighted_lp_norm`], computed by per-cell Gauss
/// quadrature with the weight evaluated only at interior Gauss points.
pub fn weighted_lp_power(f: &RadialFunction, p: f64, w: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Config(format!("need p >= 1, got {p}")));
    }
    let grid = f.grid();
    let n = grid.dimension();
    let exp = n as f64 - 1.0 + w;
    if exp <= -1.0 {
        return Err(Error::WeightSingularity {
            weight: w,
            dim: n as usize,
        });
    }
    let omega = sphere_area(n)?;
    let total = crate::par::sum_indexed(grid.num_cells(), |c| {
        grid.cell_rule(c)
            .map(|(r, wt)| wt * r.powf(exp) * f.eval_in_cell(c, r).abs().powf(p))
            .sum()
    });
    Ok(omega * total)
}

/// Radial W^{1,p} seminorm: (omega_{N-1} int_0^R r^{N-1} |f'|^p dr)^{1/p}.
pub fn radial_gradient_norm(f: &RadialFunction, p: f64) -> Result<f64> {
    Ok(radial_gradient_power(f, p)?.powf(1.0 / p))
}

/// The p-th power of [`radial_gradient_norm`]; exact per cell since
/// the slope is piecewise constant.
pub fn radial_gradient_power(f: &RadialFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Config(format!("need p >= 1, got {p}")));
    }
    let grid = f.grid();
    let n = grid.dimension() as f64;
    let omega = sphere_area(grid.dimension())?;
    let mut total = 0.0;
    for c in 1..grid.num_cells() {
        let (a, b) = grid.cell_bounds(c);
        // int_a^b r^{N-1} dr = (b^N - a^N)/N, exact.
        let measure = (b.powf(n) - a.powf(n)) / n;
        total += measure * f.slope(c).abs().powf(p);
    }
    Ok(omega * total)
}
