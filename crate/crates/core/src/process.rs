//! The six discrete complex processes and their basic trajectory.
//!
//! With `n = 6q + r`, every process hops by
//! `Zʲ ← Zʲ + 𝒱(6(q+1)ε)·ε + γ·(sⁿ⁺¹uʲ − sⁿuʲ)` and the basic trajectory by the
//! drift alone. The drift is a zero-order hold of the velocity field sampled
//! at the end of the current six-step block.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::geometry::Permutation;
use crate::order::{block_count, pairwise_orders};
use crate::types::{CVec3, Complex64};
use crate::{Error, Result};

/// ℏ, m and ε, plus the derived hop amplitude γ = (1+i)·√(3ℏε/8m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    hbar: f64,
    mass: f64,
    epsilon: f64,
    gamma: Complex64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, mass: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("epsilon", epsilon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let amp = (3.0 * hbar * epsilon / (8.0 * mass)).sqrt();
        Ok(PhysicalParams {
            hbar,
            mass,
            epsilon,
            gamma: Complex64::new(amp, amp),
        })
    }

    /// ℏ = m = ε = 1.
    pub fn unit() -> Self {
        Self::new(1.0, 1.0, 1.0).unwrap()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.hbar, self.mass, epsilon)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    /// Real hop scale √(3ℏε/8m) (the real part of γ).
    pub fn offset_scale(&self) -> f64 {
        self.gamma.re
    }
}

/// Deterministic complex velocity field t ↦ 𝒱(t), assumed C¹.
#[derive(Clone)]
pub struct VelocityField {
    name: String,
    f: Arc<dyn Fn(f64) -> CVec3 + Send + Sync>,
}

impl VelocityField {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> CVec3 + Send + Sync + 'static) -> Self {
        VelocityField {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| CVec3::zeros())
    }

    pub fn constant(c: CVec3) -> Self {
        Self::new("constant", move |_| c)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> CVec3 {
        (self.f)(t)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VelocityField").field("name", &self.name).finish()
    }
}

/// Positions of the six processes and the basic trajectory at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessState {
    pub step_index: usize,
    pub z: [CVec3; 6],
    pub z_basic: CVec3,
    pub permutation_id: u8,
}

impl ProcessState {
    /// All six processes at `z0`, step 0.
    pub fn initial(z0: CVec3, s: &Permutation) -> Self {
        ProcessState {
            step_index: 0,
            z: [z0; 6],
            z_basic: z0,
            permutation_id: s.id(),
        }
    }

    pub fn time(&self, params: &PhysicalParams) -> f64 {
        self.step_index as f64 * params.epsilon()
    }

    /// Mean of the six processes.
    pub fn mean(&self) -> CVec3 {
        self.z.iter().fold(CVec3::zeros(), |acc, z| acc + z) / Complex64::from(6.0)
    }

    /// Largest relative residual of `Zʲ − Z̃ = γ(sⁿuʲ − uʲ)` over j.
    pub fn offset_identity_residual(&self, s: &Permutation, params: &PhysicalParams) -> f64 {
        let g = params.gamma();
        let scale = self
            .z_basic
            .norm()
            .max(2.0 * 3f64.sqrt() * g.norm())
            .max(f64::MIN_POSITIVE);
        (0..6)
            .map(|j| {
                let expected = int_vec(s.offset(j, self.step_index)) * g;
                (self.z[j] - self.z_basic - expected).norm() / scale
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn int_vec(v: [i32; 3]) -> CVec3 {
    CVec3::new(
        Complex64::from(v[0] as f64),
        Complex64::from(v[1] as f64),
        Complex64::from(v[2] as f64),
    )
}

/// Advances every process and the basic trajectory by one step of length ε.
pub fn step(
    state: &ProcessState,
    s: &Permutation,
    v: &VelocityField,
    params: &PhysicalParams,
) -> ProcessState {
    debug_assert_eq!(state.permutation_id, s.id());
    let n = state.step_index;
    let q = n / 6;
    let eps = params.epsilon();
    let drift = v.eval(6.0 * (q as f64 + 1.0) * eps) * Complex64::from(eps);
    let g = params.gamma();
    let z = std::array::from_fn(|j| state.z[j] + drift + int_vec(s.hop(j, n)) * g);
    let next = ProcessState {
        step_index: n + 1,
        z,
        z_basic: state.z_basic + drift,
        permutation_id: state.permutation_id,
    };
    debug_assert!(next.offset_identity_residual(s, params) < 1e-10);
    next
}

/// Trajectory of `n_steps + 1` states starting with all processes at `z0`.
pub fn simulate(
    z0: CVec3,
    s: &Permutation,
    v: &VelocityField,
    params: &PhysicalParams,
    n_steps: usize,
) -> Vec<ProcessState> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut state = ProcessState::initial(z0, s);
    for _ in 0..n_steps {
        let next = step(&state, s, v, params);
        out.push(state);
        state = next;
    }
    out.push(state);
    out
}

// 5-point Gauss–Legendre nodes and weights on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss_legendre(v: &VelocityField, a: f64, b: f64) -> CVec3 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = CVec3::zeros();
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        acc += v.eval(mid + half * x) * Complex64::from(w * half);
    }
    acc
}

/// Solution of dZ̃/dt = 𝒱(t), Z̃(0) = z0, by composite 5-point Gauss–Legendre
/// quadrature (order 10) on panels of width at most 1/256.
pub fn ode_reference(z0: CVec3, v: &VelocityField, t: f64) -> Result<CVec3> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    let panels = ((t * 256.0).ceil() as usize).max(16);
    let h = t / panels as f64;
    Ok((0..panels).fold(z0, |acc, k| {
        acc + gauss_legendre(v, k as f64 * h, (k + 1) as f64 * h)
    }))
}

/// The ODE solution sampled at `k·dt` for `k = 0..=n`, integrated one
/// Gauss–Legendre panel per interval.
pub fn ode_reference_path(z0: CVec3, v: &VelocityField, dt: f64, n: usize) -> Vec<CVec3> {
    let mut out = Vec::with_capacity(n + 1);
    let mut z = z0;
    out.push(z);
    for k in 0..n {
        z += gauss_legendre(v, k as f64 * dt, (k + 1) as f64 * dt);
        out.push(z);
    }
    out
}

/// Spatial arrangement of the real parts of the six processes around the
/// basic trajectory (drift-free case).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Configuration {
    /// All six on the basic trajectory.
    Coincident,
    /// Centres of the six faces.
    FaceCenters,
    /// Midpoints of six edges.
    EdgeMidpoints,
    /// Six of the eight vertices.
    Vertices,
}

impl Configuration {
    /// Expected arrangement at step `n`.
    pub fn for_step(n: usize) -> Self {
        match n % 6 {
            0 => Configuration::Coincident,
            1 | 5 => Configuration::FaceCenters,
            2 | 4 => Configuration::EdgeMidpoints,
            _ => Configuration::Vertices,
        }
    }

    /// Classifies a state from the real offsets `Re(Zʲ − Z̃)` measured in
    /// units of √(3ℏε/8m). Returns `None` when the offsets match no pattern.
    pub fn classify(state: &ProcessState, params: &PhysicalParams) -> Option<Self> {
        let c = params.offset_scale();
        let mut nonzero_counts = Vec::with_capacity(6);
        for zj in &state.z {
            let d = (zj - state.z_basic).map(|x| x.re / c);
            let mut count = 0;
            for k in 0..3 {
                let x = d[k];
                if (x.abs() - 2.0).abs() < 1e-9 {
                    count += 1;
                } else if x.abs() > 1e-9 {
                    return None;
                }
            }
            nonzero_counts.push(count);
        }
        let first = nonzero_counts[0];
        if nonzero_counts.iter().any(|&c| c != first) {
            return None;
        }
        Some(match first {
            0 => Configuration::Coincident,
            1 => Configuration::FaceCenters,
            2 => Configuration::EdgeMidpoints,
            _ => Configuration::Vertices,
        })
    }
}

/// One rung of an ε-convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub max_deviation: f64,
    /// Order measured against the previous (larger) ε; `None` on the first rung.
    pub order: Option<f64>,
}

/// Max over steps and processes of |Zʲ_ε(t) − Z̃(t)| on `[0, t_final]` for
/// each ε in the ladder, with successive log-ratio orders.
pub fn convergence_rate(
    z0: CVec3,
    s: &Permutation,
    v: &VelocityField,
    params: &PhysicalParams,
    t_final: f64,
    epsilon_ladder: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    if epsilon_ladder.is_empty() {
        return Err(Error::domain("epsilon ladder is empty"));
    }
    if epsilon_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("epsilon ladder must be strictly decreasing"));
    }
    let mut blocks = Vec::with_capacity(epsilon_ladder.len());
    for &eps in epsilon_ladder {
        blocks.push(block_count(t_final, eps)?);
    }
    let deviations: Vec<f64> = epsilon_ladder
        .par_iter()
        .zip(blocks.par_iter())
        .map(|(&eps, &q)| -> Result<f64> {
            let p = params.with_epsilon(eps)?;
            let n = 6 * q;
            let reference = ode_reference_path(z0, v, eps, n);
            let mut state = ProcessState::initial(z0, s);
            let mut worst = 0.0f64;
            for reference_n in reference.iter() {
                for zj in &state.z {
                    worst = worst.max((zj - reference_n).norm());
                }
                if state.step_index < n {
                    state = step(&state, s, v, &p);
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = pairwise_orders(epsilon_ladder, &deviations);
    Ok(epsilon_ladder
        .iter()
        .zip(&deviations)
        .enumerate()
        .map(|(i, (&epsilon, &max_deviation))| ConvergenceRow {
            epsilon,
            max_deviation,
            order: if i == 0 { None } else { Some(orders[i - 1]) },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::spin_permutations;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_validation_and_gamma() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN).is_err());
        let p = PhysicalParams::new(2.0, 3.0, 0.5).unwrap();
        let amp = (3.0f64 * 2.0 * 0.5 / 24.0).sqrt();
        assert_eq!(p.gamma(), c(amp, amp));
        // γ² = i·3ℏε/4m
        let g2 = p.gamma() * p.gamma();
        assert!((g2 - c(0.0, 3.0 * 2.0 * 0.5 / 12.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_steps_is_initial_state() {
        let z0 = CVec3::new(c(1.0, 2.0), c(-1.0, 0.0), c(0.5, 0.5));
        let traj = simulate(z0, &Permutation::s1(), &VelocityField::zero(), &PhysicalParams::unit(), 0);
        assert_eq!(traj.len(), 1);
        assert!(traj[0].z.iter().all(|z| *z == z0));
    }

    #[test]
    fn six_steps_without_drift_return_to_origin() {
        let traj = simulate(
            CVec3::zeros(),
            &Permutation::s1(),
            &VelocityField::zero(),
            &PhysicalParams::unit(),
            6,
        );
        for z in &traj[6].z {
            assert!(z.norm() < 1e-15);
        }
    }

    #[test]
    fn constant_drift_telescopes() {
        let vel = CVec3::new(c(0.5, 0.0), c(0.25, 0.0), c(-1.0, 0.0));
        let z0 = CVec3::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let p = PhysicalParams::new(1.0, 1.0, 0.25).unwrap();
        let traj = simulate(z0, &Permutation::s1(), &VelocityField::constant(vel), &p, 24);
        for st in &traj {
            let expected = z0 + vel * c(st.step_index as f64 * 0.25, 0.0);
            assert_eq!(st.z_basic, expected);
        }
    }

    #[test]
    fn figure_configurations() {
        let p = PhysicalParams::new(1.0, 2.0, 0.3).unwrap();
        for s in spin_permutations() {
            let traj = simulate(CVec3::zeros(), s, &VelocityField::zero(), &p, 18);
            for st in &traj {
                assert_eq!(
                    Configuration::classify(st, &p),
                    Some(Configuration::for_step(st.step_index)),
                    "perm {} step {}",
                    s.id(),
                    st.step_index
                );
            }
        }
    }

    #[test]
    fn ode_reference_exact_integrals() {
        let z0 = CVec3::new(c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0));
        assert_eq!(ode_reference(z0, &VelocityField::zero(), 3.0).unwrap(), z0);
        let lin = VelocityField::new("t", |t| CVec3::new(c(t, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
        let z = ode_reference(CVec3::zeros(), &lin, 1.0).unwrap();
        assert!((z[0] - c(0.5, 0.0)).norm() < 1e-14);
        assert!(ode_reference(z0, &lin, -1.0).is_err());
    }

    #[test]
    fn ladder_validation() {
        let s = Permutation::s1();
        let v = VelocityField::zero();
        let p = PhysicalParams::unit();
        assert!(convergence_rate(CVec3::zeros(), &s, &v, &p, 1.2, &[0.1, 0.2]).is_err());
        assert!(convergence_rate(CVec3::zeros(), &s, &v, &p, 1.0, &[0.1, 0.07]).is_err());
        assert!(convergence_rate(CVec3::zeros(), &s, &v, &p, 1.2, &[0.1, 0.05]).is_ok());
    }
}
