//! de Broglie–Bohm trajectories of a 1-D wavefunction.
//!
//! Velocities come from centred differences of the unwrapped phase (the same
//! branch convention as [`crate::action::decompose`]) and are interpolated
//! cubically in x and linearly in t between snapshots.

use rayon::prelude::*;

use crate::action::{unwrapped_phase, WaveField};
use crate::process::PhysicalParams;
use crate::types::Complex64;
use crate::{Error, Result};

/// `|ψ| < NODE_THRESHOLD · max|ψ|` counts as a node.
pub const NODE_THRESHOLD: f64 = 1e-8;

/// Nodal data of one snapshot: `∂S/∂x`, `∂ ln ρ/∂x` and a node mask.
#[derive(Debug, Clone)]
pub struct VelocityProfile {
    x_min: f64,
    dx: f64,
    t: f64,
    phase_gradient: Vec<f64>,
    log_density_gradient: Vec<f64>,
    node: Vec<bool>,
}

fn centred(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| match i {
            0 => (values[1] - values[0]) / dx,
            i if i == n - 1 => (values[n - 1] - values[n - 2]) / dx,
            i => (values[i + 1] - values[i - 1]) / (2.0 * dx),
        })
        .collect()
}

impl VelocityProfile {
    pub fn new(field: &WaveField) -> Self {
        let dx = field.grid.dx();
        let peak = field.max_abs();
        let node: Vec<bool> = field.psi.iter().map(|c| c.norm() < NODE_THRESHOLD * peak).collect();
        let phase = unwrapped_phase(&field.psi);
        let log_rho: Vec<f64> = field
            .psi
            .iter()
            .map(|c| c.norm_sqr().max(f64::MIN_POSITIVE).ln())
            .collect();
        VelocityProfile {
            x_min: field.grid.x_min,
            dx,
            t: field.t,
            phase_gradient: centred(&phase, dx),
            log_density_gradient: centred(&log_rho, dx),
            node,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Stencil start and Lagrange weights for cubic interpolation at `x`.
    fn stencil(&self, x: f64) -> Result<(usize, [f64; 4])> {
        let n = self.node.len();
        let s = (x - self.x_min) / self.dx;
        if !(s >= 0.0 && s <= (n - 1) as f64) {
            return Err(Error::domain(format!("x = {x} lies outside the grid")));
        }
        let i0 = (s.floor() as usize).clamp(1, n - 3) - 1;
        if self.node[i0..i0 + 4].iter().any(|&b| b) {
            return Err(Error::Node { x });
        }
        let u = s - i0 as f64;
        let w = [
            -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
            u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0,
            u * (u - 1.0) * (u - 2.0) / 6.0,
        ];
        Ok((i0, w))
    }

    fn interpolate(values: &[f64], i0: usize, w: &[f64; 4]) -> f64 {
        (0..4).map(|k| w[k] * values[i0 + k]).sum()
    }

    /// `∂S/∂x` at `x`, with `S = ℏ·arg ψ`, in units of ℏ.
    pub fn phase_gradient(&self, x: f64) -> Result<f64> {
        let (i0, w) = self.stencil(x)?;
        Ok(Self::interpolate(&self.phase_gradient, i0, &w))
    }

    pub fn bohm_velocity(&self, x: f64, params: &PhysicalParams) -> Result<f64> {
        Ok(params.hbar() * self.phase_gradient(x)? / params.mass())
    }

    pub fn complex_velocity(&self, x: f64, params: &PhysicalParams) -> Result<Complex64> {
        let (i0, w) = self.stencil(x)?;
        let ds = Self::interpolate(&self.phase_gradient, i0, &w);
        let dlog = Self::interpolate(&self.log_density_gradient, i0, &w);
        let (hbar, m) = (params.hbar(), params.mass());
        Ok(Complex64::new(hbar * ds / m, -0.5 * hbar * dlog / m))
    }
}

/// `∇S/m` at `x`; `NodeError` near a node.
pub fn bohm_velocity(psi: &WaveField, x: f64, params: &PhysicalParams) -> Result<f64> {
    VelocityProfile::new(psi).bohm_velocity(x, params)
}

/// `(∇S − i(ℏ/2)∇ ln ρ)/m` at `x`. Its real part is [`bohm_velocity`].
pub fn complex_velocity(psi: &WaveField, x: f64, params: &PhysicalParams) -> Result<Complex64> {
    VelocityProfile::new(psi).complex_velocity(x, params)
}

/// A sequence of snapshots with precomputed velocity profiles.
#[derive(Debug, Clone)]
pub struct BohmMovie {
    profiles: Vec<VelocityProfile>,
}

impl BohmMovie {
    pub fn new(movie: &[WaveField]) -> Result<Self> {
        if movie.len() < 2 {
            return Err(Error::domain("a trajectory needs at least two snapshots"));
        }
        if movie.windows(2).any(|w| w[1].t.partial_cmp(&w[0].t) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::domain("snapshot times must increase strictly"));
        }
        let profiles = movie.par_iter().map(VelocityProfile::new).collect();
        Ok(BohmMovie { profiles })
    }

    pub fn times(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.t).collect()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Velocity at `x` and time `t_k + θ(t_{k+1} − t_k)`, linear in θ.
    fn velocity(&self, k: usize, theta: f64, x: f64, params: &PhysicalParams) -> Result<f64> {
        let v0 = self.profiles[k].bohm_velocity(x, params)?;
        if theta == 0.0 {
            return Ok(v0);
        }
        let v1 = self.profiles[k + 1].bohm_velocity(x, params)?;
        Ok((1.0 - theta) * v0 + theta * v1)
    }

    /// RK4 from `x0` at the first snapshot, one step per snapshot interval.
    pub fn integrate(&self, x0: f64, params: &PhysicalParams) -> TrajectoryPath {
        let mut positions = vec![x0];
        let mut x = x0;
        for k in 0..self.profiles.len() - 1 {
            let h = self.profiles[k + 1].t - self.profiles[k].t;
            let step = || -> Result<f64> {
                let k1 = self.velocity(k, 0.0, x, params)?;
                let k2 = self.velocity(k, 0.5, x + 0.5 * h * k1, params)?;
                let k3 = self.velocity(k, 0.5, x + 0.5 * h * k2, params)?;
                let k4 = self.velocity(k, 1.0, x + h * k3, params)?;
                Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
            };
            match step() {
                Ok(next) => {
                    x = next;
                    positions.push(x);
                }
                Err(_) => {
                    return TrajectoryPath {
                        t0: self.profiles[0].t,
                        positions,
                        truncated_at: Some(self.profiles[k].t),
                    }
                }
            }
        }
        TrajectoryPath {
            t0: self.profiles[0].t,
            positions,
            truncated_at: None,
        }
    }
}

/// Positions at the snapshot times; `truncated_at` is set when the path ran
/// into a node or off the grid, after which no positions are recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPath {
    pub t0: f64,
    pub positions: Vec<f64>,
    pub truncated_at: Option<f64>,
}

impl TrajectoryPath {
    pub fn at(&self, k: usize) -> Option<f64> {
        self.positions.get(k).copied()
    }
}

pub fn integrate_trajectory(psi_movie: &[WaveField], x0: f64, params: &PhysicalParams) -> Result<TrajectoryPath> {
    Ok(BohmMovie::new(psi_movie)?.integrate(x0, params))
}

/// Cumulative distribution of `|ψ|²` on the grid nodes (trapezoid rule,
/// normalised to end at 1).
fn density_cdf(field: &WaveField) -> Vec<f64> {
    let rho = field.density();
    let mut cdf = vec![0.0; rho.len()];
    for i in 1..rho.len() {
        cdf[i] = cdf[i - 1] + 0.5 * (rho[i] + rho[i - 1]);
    }
    let total = cdf[cdf.len() - 1];
    cdf.iter_mut().for_each(|c| *c /= total);
    cdf
}

fn cdf_at(field: &WaveField, cdf: &[f64], x: f64) -> f64 {
    let g = field.grid;
    if x <= g.x_min {
        return 0.0;
    }
    if x >= g.x_max {
        return 1.0;
    }
    let s = (x - g.x_min) / g.dx();
    let i = (s.floor() as usize).min(g.n - 2);
    let u = s - i as f64;
    cdf[i] + u * (cdf[i + 1] - cdf[i])
}

fn inverse_cdf(field: &WaveField, cdf: &[f64], u: f64) -> f64 {
    let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
    let (c0, c1) = (cdf[i - 1], cdf[i]);
    let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
    field.grid.x(i - 1) + frac * field.grid.dx()
}

/// Histogram window: six standard deviations around the mean of `|ψ|²`,
/// clipped to the grid.
fn window(field: &WaveField) -> (f64, f64) {
    let (mean, var) = field.position_moments();
    let half = 6.0 * var.sqrt();
    ((mean - half).max(field.grid.x_min), (mean + half).min(field.grid.x_max))
}

fn l1_distance(field: &WaveField, positions: &[f64], total: usize, bins: usize) -> f64 {
    let cdf = density_cdf(field);
    let (lo, hi) = window(field);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins + 2];
    for &x in positions {
        let slot = if x < lo {
            0
        } else if x >= hi {
            bins + 1
        } else {
            1 + (((x - lo) / width) as usize).min(bins - 1)
        };
        counts[slot] += 1;
    }
    let n = total as f64;
    let mut dist = (counts[0] as f64 / n - cdf_at(field, &cdf, lo)).abs()
        + (counts[bins + 1] as f64 / n - (1.0 - cdf_at(field, &cdf, hi))).abs();
    for b in 0..bins {
        let (a, e) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
        let mass = cdf_at(field, &cdf, e) - cdf_at(field, &cdf, a);
        dist += (counts[b + 1] as f64 / n - mass).abs();
    }
    dist
}

/// Deterministic ensemble of Bohmian trajectories with uniform weights.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub seed: u64,
    pub bins: usize,
    /// Initial positions in increasing order.
    pub initial: Vec<f64>,
    /// L1 histogram distance of `initial` from `|ψ₀|²`.
    pub noise_floor: f64,
    pub times: Vec<f64>,
    pub paths: Vec<TrajectoryPath>,
}

const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_9;

impl TrajectoryEnsemble {
    /// Inverse-CDF samples of `|ψ₀|²` at the shifted midpoints
    /// `uᵢ = (i + θ)/N`, `θ = frac(½ + seed·φ⁻¹)`
    /// (plain midpoints for seed 0).
    pub fn sample(psi0: &WaveField, n: usize, seed: u64, bins: usize) -> Result<Self> {
        if n == 0 || bins == 0 {
            return Err(Error::domain("ensemble size and bin count must be positive"));
        }
        let theta = (0.5 + seed as f64 * GOLDEN_FRACTION).fract().clamp(1e-6, 1.0 - 1e-6);
        let cdf = density_cdf(psi0);
        let mut initial: Vec<f64> = (0..n)
            .map(|i| inverse_cdf(psi0, &cdf, (i as f64 + theta) / n as f64))
            .collect();
        initial.sort_by(f64::total_cmp);
        let noise_floor = l1_distance(psi0, &initial, n, bins);
        Ok(TrajectoryEnsemble {
            seed,
            bins,
            initial,
            noise_floor,
            times: vec![psi0.t],
            paths: Vec::new(),
        })
    }

    /// Integrates every sample through the movie (in parallel).
    pub fn propagate(&mut self, movie: &BohmMovie, params: &PhysicalParams) {
        self.times = movie.times();
        self.paths = self.initial.par_iter().map(|&x0| movie.integrate(x0, params)).collect();
    }

    pub fn truncated(&self) -> usize {
        self.paths.iter().filter(|p| p.truncated_at.is_some()).count()
    }

    /// Positions at snapshot `k` of all paths that reached it.
    pub fn positions_at(&self, k: usize) -> Vec<f64> {
        if self.paths.is_empty() && k == 0 {
            return self.initial.clone();
        }
        self.paths.iter().filter_map(|p| p.at(k)).collect()
    }

    /// Pairs `(i, j)`, `i < j`, whose order at some snapshot differs from
    /// their initial order.
    pub fn crossing_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.paths.len() {
            for j in i + 1..self.paths.len() {
                let (a, b) = (&self.paths[i], &self.paths[j]);
                let crossed = a
                    .positions
                    .iter()
                    .zip(&b.positions)
                    .any(|(xa, xb)| (xb - xa) * (self.initial[j] - self.initial[i]) <= 0.0);
                if crossed {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// L1 distance between the ensemble histogram at `t_check` and `|ψ(t_check)|²`
/// integrated over the same bins. `t_check` must be a snapshot time.
pub fn continuity_check(
    ensemble: &TrajectoryEnsemble,
    psi_movie: &[WaveField],
    t_check: f64,
    bins: usize,
) -> Result<f64> {
    if bins == 0 {
        return Err(Error::domain("bin count must be positive"));
    }
    let scale = psi_movie.last().map(|f| f.t.abs()).unwrap_or(1.0).max(1.0);
    let k = psi_movie
        .iter()
        .position(|f| (f.t - t_check).abs() <= 1e-9 * scale)
        .ok_or_else(|| Error::domain(format!("no snapshot at t = {t_check}")))?;
    let positions = ensemble.positions_at(k);
    Ok(l1_distance(&psi_movie[k], &positions, ensemble.initial.len(), bins))
}

/// `ε = h/(6 m v²)`, the step whose hexagonal period `6ε` is the de Broglie
/// period `h/(mv²)`.
pub fn de_broglie_epsilon(v: f64, mass: f64, h: f64) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::domain("speed must be non-zero and finite (the period is infinite at v = 0)"));
    }
    if !(mass > 0.0 && h > 0.0) {
        return Err(Error::domain("mass and h must be positive"));
    }
    Ok(h / (6.0 * mass * v * v))
}

/// [`de_broglie_epsilon`] with `h = 2πℏ` taken from `params`.
pub fn de_broglie_epsilon_for(v: f64, params: &PhysicalParams) -> Result<f64> {
    de_broglie_epsilon(v, params.mass(), 2.0 * std::f64::consts::PI * params.hbar())
}
