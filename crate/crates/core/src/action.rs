//! Complex action on the quadratic sector.
//!
//! An action `𝒮(Z, t) = a + b·Z + ½ Z·C Z` stays quadratic under the
//! recurrence as long as the potential has degree ≤ 2. Each ε-substep takes
//! the complex minimum over the drift 𝒱 of the six-point mean
//! `(1/6) Σⱼ 𝒮(Z − 𝒱ε + γ(s⁵uʲ − uʲ)) + ε L(Z, 𝒱)` with
//! `L = ½ m 𝒱·𝒱 − V(Z)`; the offsets are those of the closing step of the
//! hexagon. The ε → 0 limit is the complex second-order Hamilton–Jacobi
//! equation `∂𝒮/∂t + (∇𝒮)²/2m + V − i(ℏ/2m)Δ𝒮 = 0`, whose quadratic solutions
//! follow the Riccati flow used here as the reference.
//!
//! The wavefunction is `ψ = exp(i𝒮/ℏ)` restricted to real positions; the
//! reference propagator is a 1-D Crank–Nicolson scheme.

use crate::cminplus::quadratic_min;
use crate::geometry::{offset_second_moment, Permutation};
use crate::order::{block_count, pairwise_orders};
use crate::process::PhysicalParams;
use crate::types::{bdot, CMat3, CVec3, Complex64};
use crate::{Error, Result};

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn symmetrize(m: &CMat3) -> CMat3 {
    (m + m.transpose()) * cx(0.5, 0.0)
}

/// `𝒮(Z, t) = a + b·Z + ½ Z·C Z` with `C` symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticAction {
    pub a: Complex64,
    pub b: CVec3,
    pub c: CMat3,
    pub t: f64,
}

impl QuadraticAction {
    pub fn new(a: Complex64, b: CVec3, c: CMat3, t: f64) -> Self {
        QuadraticAction {
            a,
            b,
            c: symmetrize(&c),
            t,
        }
    }

    pub fn constant(a: Complex64) -> Self {
        Self::new(a, CVec3::zeros(), CMat3::zeros(), 0.0)
    }

    /// `p·Z`.
    pub fn plane_wave(p: CVec3) -> Self {
        Self::new(cx(0.0, 0.0), p, CMat3::zeros(), 0.0)
    }

    /// Action of the normalised 1-D Gaussian packet
    /// `(2πσ²)^(-1/4) exp(−(x−x₀)²/4σ² + i p₀x/ℏ)` along the first axis.
    pub fn gaussian_1d(sigma0: f64, x0: f64, p0: f64, hbar: f64) -> Self {
        let cxx = cx(0.0, hbar / (2.0 * sigma0 * sigma0));
        let mut c = CMat3::zeros();
        c[(0, 0)] = cxx;
        let b = CVec3::new(cx(p0, 0.0) - cxx * x0, cx(0.0, 0.0), cx(0.0, 0.0));
        let a = cx(0.0, hbar / 4.0 * (2.0 * std::f64::consts::PI * sigma0 * sigma0).ln()) + cxx * (0.5 * x0 * x0);
        Self::new(a, b, c, 0.0)
    }

    pub fn eval(&self, z: &CVec3) -> Complex64 {
        self.a + bdot(&self.b, z) + bdot(z, &(self.c * z)) * 0.5
    }

    pub fn gradient(&self, z: &CVec3) -> CVec3 {
        self.b + self.c * z
    }

    pub fn laplacian(&self) -> Complex64 {
        self.c.trace()
    }

    /// Largest coefficient difference `max(|Δa|, |Δb|_∞, |ΔC|_∞)`.
    pub fn coefficient_distance(&self, other: &QuadraticAction) -> f64 {
        let db = (self.b - other.b).iter().map(|c| c.norm()).fold(0.0, f64::max);
        let dc = (self.c - other.c).iter().map(|c| c.norm()).fold(0.0, f64::max);
        (self.a - other.a).norm().max(db).max(dc)
    }

    /// Symmetry defect of `C`.
    pub fn asymmetry(&self) -> f64 {
        (self.c - self.c.transpose()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Free,
    Linear,
    Harmonic,
}

/// `V(Z) = v₀ + v₁·Z + ½ Z·K Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub v0: Complex64,
    pub v1: CVec3,
    pub k: CMat3,
}

impl Potential {
    pub fn free() -> Self {
        Potential {
            kind: PotentialKind::Free,
            v0: cx(0.0, 0.0),
            v1: CVec3::zeros(),
            k: CMat3::zeros(),
        }
    }

    /// `V = v₀ + v₁·Z` (uniform force `−v₁`).
    pub fn linear(v0: f64, v1: [f64; 3]) -> Self {
        Potential {
            kind: PotentialKind::Linear,
            v0: cx(v0, 0.0),
            v1: CVec3::new(cx(v1[0], 0.0), cx(v1[1], 0.0), cx(v1[2], 0.0)),
            k: CMat3::zeros(),
        }
    }

    /// Isotropic `½ k |Z|²`.
    pub fn harmonic(k: f64) -> Self {
        Potential {
            kind: PotentialKind::Harmonic,
            v0: cx(0.0, 0.0),
            v1: CVec3::zeros(),
            k: CMat3::identity() * cx(k, 0.0),
        }
    }

    /// `½ k x²` acting on the first axis only.
    pub fn harmonic_1d(k: f64) -> Self {
        let mut m = CMat3::zeros();
        m[(0, 0)] = cx(k, 0.0);
        Potential {
            kind: PotentialKind::Harmonic,
            v0: cx(0.0, 0.0),
            v1: CVec3::zeros(),
            k: m,
        }
    }

    pub fn eval(&self, z: &CVec3) -> Complex64 {
        self.v0 + bdot(&self.v1, z) + bdot(z, &(self.k * z)) * 0.5
    }

    /// Restriction to the first axis, `V(x, 0, 0)`, as a real function.
    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval(&CVec3::new(cx(x, 0.0), cx(0.0, 0.0), cx(0.0, 0.0))).re
    }

    fn is_real(&self) -> bool {
        self.v0.im == 0.0 && self.v1.iter().chain(self.k.iter()).all(|c| c.im == 0.0)
    }
}

/// One ε-substep of the recurrence.
///
/// For quadratic `𝒮` the six-point mean is `𝒮(Z − ε𝒱) + ½γ² tr(C Σ)` with
/// `Σ = E_j[dʲdʲᵀ]` of the closing-step offsets, and the complex minimum over
/// 𝒱 of `½ 𝒱·M𝒱 − g·𝒱 + const`, `M = ε(mI + εC)`, `g = ε∇𝒮(Z)`, is
/// certified once per substep by [`quadratic_min`] (the saddle structure
/// does not depend on Z). Its argmin `𝒱 = (mI + εC)⁻¹∇𝒮(Z)` tends to ∇𝒮/m.
pub fn recurrence_substep(
    action: &QuadraticAction,
    s: &Permutation,
    pot: &Potential,
    params: &PhysicalParams,
) -> Result<QuadraticAction> {
    let eps = params.epsilon();
    let m = params.mass();
    let gamma2 = params.gamma() * params.gamma();
    let moment = offset_second_moment(s, 5);
    let sigma = CMat3::from_fn(|k, l| cx(moment[k][l] as f64 / 6.0, 0.0));
    let c = action.c;
    let n_mat = CMat3::identity() * cx(m, 0.0) + c * cx(eps, 0.0);

    let saddle = quadratic_min(&(n_mat * cx(eps, 0.0)), &(action.b * cx(eps, 0.0)), cx(0.0, 0.0))?;
    let n_inv_b = saddle.argmin;
    let n_inv_c = n_mat
        .lu()
        .solve(&c)
        .ok_or_else(|| Error::NoSaddle("singular drift Hessian".to_string()))?;

    let a = action.a + gamma2 * 0.5 * (c * sigma).trace() - pot.v0 * eps - bdot(&action.b, &n_inv_b) * (0.5 * eps);
    let b = action.b - pot.v1 * cx(eps, 0.0) - c * n_inv_b * cx(eps, 0.0);
    let c_new = c - pot.k * cx(eps, 0.0) - c * n_inv_c * cx(eps, 0.0);
    Ok(QuadraticAction::new(a, b, c_new, action.t + eps))
}

/// Optimal drift `𝒱*(Z) = (mI + εC)⁻¹ ∇𝒮(Z)` of a substep.
pub fn optimal_drift(action: &QuadraticAction, z: &CVec3, params: &PhysicalParams) -> Result<CVec3> {
    let n_mat = CMat3::identity() * cx(params.mass(), 0.0) + action.c * cx(params.epsilon(), 0.0);
    n_mat
        .lu()
        .solve(&action.gradient(z))
        .ok_or_else(|| Error::NoSaddle("singular drift Hessian".to_string()))
}

/// The substep objective evaluated literally: mean over the six displaced
/// points plus `ε L(Z, 𝒱)`.
pub fn substep_objective(
    action: &QuadraticAction,
    z: &CVec3,
    drift: &CVec3,
    s: &Permutation,
    pot: &Potential,
    params: &PhysicalParams,
) -> Complex64 {
    let eps = params.epsilon();
    let g = params.gamma();
    let mean = (0..6)
        .map(|j| {
            let d = crate::process::int_vec(s.offset(j, 5));
            action.eval(&(z - drift * cx(eps, 0.0) + d * g))
        })
        .sum::<Complex64>()
        / 6.0;
    let lagrangian = bdot(drift, drift) * (0.5 * params.mass()) - pot.eval(z);
    mean + lagrangian * eps
}

/// One 6ε block: six substeps.
pub fn recurrence_step(
    action: &QuadraticAction,
    s: &Permutation,
    pot: &Potential,
    params: &PhysicalParams,
) -> Result<QuadraticAction> {
    (0..6).try_fold(*action, |acc, _| recurrence_substep(&acc, s, pot, params))
}

/// `blocks` consecutive blocks.
pub fn recurrence_evolve(
    initial: &QuadraticAction,
    s: &Permutation,
    pot: &Potential,
    params: &PhysicalParams,
    blocks: usize,
) -> Result<QuadraticAction> {
    (0..blocks).try_fold(*initial, |acc, _| recurrence_step(&acc, s, pot, params))
}

type RiccatiState = (Complex64, CVec3, CMat3);

fn riccati_rhs(state: &RiccatiState, pot: &Potential, hbar: f64, m: f64) -> RiccatiState {
    let (_, b, c) = state;
    let da = -bdot(b, b) / (2.0 * m) - pot.v0 + cx(0.0, hbar / (2.0 * m)) * c.trace();
    let db = -(c * b) / cx(m, 0.0) - pot.v1;
    let dc = -(c * c) / cx(m, 0.0) - pot.k;
    (da, db, dc)
}

fn axpy(s: &RiccatiState, k: &RiccatiState, h: f64) -> RiccatiState {
    (s.0 + k.0 * h, s.1 + k.1 * cx(h, 0.0), s.2 + k.2 * cx(h, 0.0))
}

/// Quadratic solution of the Hamilton–Jacobi equation at time `t`, from
/// classical RK4 on the Riccati system
/// `C′ = −C²/m − K`, `b′ = −Cb/m − v₁`, `a′ = −b·b/2m − v₀ + i(ℏ/2m) tr C`
/// with a fixed number of steps (so the error is smooth in `t`).
pub fn riccati_reference(
    initial: &QuadraticAction,
    pot: &Potential,
    params: &PhysicalParams,
    t: f64,
    steps: usize,
) -> QuadraticAction {
    let (hbar, m) = (params.hbar(), params.mass());
    let span = t - initial.t;
    let steps = steps.max(1);
    let h = span / steps as f64;
    let mut y: RiccatiState = (initial.a, initial.b, initial.c);
    for _ in 0..steps {
        let k1 = riccati_rhs(&y, pot, hbar, m);
        let k2 = riccati_rhs(&axpy(&y, &k1, 0.5 * h), pot, hbar, m);
        let k3 = riccati_rhs(&axpy(&y, &k2, 0.5 * h), pot, hbar, m);
        let k4 = riccati_rhs(&axpy(&y, &k3, h), pot, hbar, m);
        y = (
            y.0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0),
            y.1 + (k1.1 + k2.1 * cx(2.0, 0.0) + k3.1 * cx(2.0, 0.0) + k4.1) * cx(h / 6.0, 0.0),
            y.2 + (k1.2 + k2.2 * cx(2.0, 0.0) + k3.2 * cx(2.0, 0.0) + k4.2) * cx(h / 6.0, 0.0),
        );
    }
    QuadraticAction::new(y.0, y.1, y.2, t)
}

/// Hamilton–Jacobi residual of a time-dependent quadratic action at `(z, t)`.
/// `∂𝒮/∂t` is a fourth-order central difference with step `h`.
pub fn hj_residual(
    action_at: impl Fn(f64) -> QuadraticAction,
    pot: &Potential,
    z: &CVec3,
    t: f64,
    params: &PhysicalParams,
    h: f64,
) -> Complex64 {
    let s = |tau: f64| action_at(tau).eval(z);
    let dt = (s(t - 2.0 * h) - s(t - h) * 8.0 + s(t + h) * 8.0 - s(t + 2.0 * h)) / (12.0 * h);
    let now = action_at(t);
    let grad = now.gradient(z);
    dt + bdot(&grad, &grad) / (2.0 * params.mass()) + pot.eval(z)
        - cx(0.0, params.hbar() / (2.0 * params.mass())) * now.laplacian()
}

/// Hamilton–Jacobi residual of an arbitrary holomorphic action given by
/// values only; space and time derivatives by central differences.
pub fn hj_residual_field(
    action: impl Fn(&CVec3, f64) -> Complex64,
    pot: &Potential,
    z: &CVec3,
    t: f64,
    params: &PhysicalParams,
    h: f64,
) -> Complex64 {
    let s0 = action(z, t);
    let dt = (action(z, t + h) - action(z, t - h)) / (2.0 * h);
    let mut grad2 = cx(0.0, 0.0);
    let mut lap = cx(0.0, 0.0);
    for k in 0..3 {
        let mut zp = *z;
        let mut zm = *z;
        zp[k] += h;
        zm[k] -= h;
        let (sp, sm) = (action(&zp, t), action(&zm, t));
        let g = (sp - sm) / (2.0 * h);
        grad2 += g * g;
        lap += (sp - s0 * 2.0 + sm) / (h * h);
    }
    dt + grad2 / (2.0 * params.mass()) + pot.eval(z) - cx(0.0, params.hbar() / (2.0 * params.mass())) * lap
}

/// One rung of the recurrence-vs-Riccati ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionRow {
    pub epsilon: f64,
    pub blocks: usize,
    pub coefficient_error: f64,
    pub order: Option<f64>,
}

/// Evolves `initial` to `t_final` with the recurrence for each ε and
/// compares coefficients with [`riccati_reference`].
pub fn recurrence_convergence(
    initial: &QuadraticAction,
    s: &Permutation,
    pot: &Potential,
    params: &PhysicalParams,
    t_final: f64,
    ladder: &[f64],
) -> Result<Vec<ActionRow>> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("epsilon ladder must be non-empty and strictly decreasing"));
    }
    let oracle = riccati_reference(initial, pot, params, initial.t + t_final, 20_000);
    let mut rows: Vec<ActionRow> = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let blocks = block_count(t_final, eps)?;
        let p = params.with_epsilon(eps)?;
        let evolved = recurrence_evolve(initial, s, pot, &p, blocks)?;
        rows.push(ActionRow {
            epsilon: eps,
            blocks,
            coefficient_error: evolved.coefficient_distance(&oracle),
            order: None,
        });
    }
    let errs: Vec<f64> = rows.iter().map(|r| r.coefficient_error).collect();
    for (i, o) in pairwise_orders(ladder, &errs).into_iter().enumerate() {
        rows[i + 1].order = Some(o);
    }
    Ok(rows)
}

/// Uniform 1-D mesh of `n` nodes on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if x_min >= x_max || n < 3 || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::domain(format!(
                "grid needs x_min < x_max and n >= 3, got [{x_min}, {x_max}] with {n} nodes"
            )));
        }
        Ok(Grid1D { x_min, x_max, n })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }
}

/// Bookkeeping attached to a [`WaveField`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaveDiagnostics {
    /// Nodes whose `exp(i𝒮/ℏ)` overflowed and were clamped.
    pub clamped: usize,
    /// Largest boundary amplitude relative to the peak seen while propagating.
    pub boundary_amplitude: f64,
    /// Set when `boundary_amplitude` exceeded 1e-8.
    pub boundary_warning: bool,
}

/// Complex wavefunction sampled on a 1-D grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid1D,
    pub psi: Vec<Complex64>,
    pub t: f64,
    pub diagnostics: WaveDiagnostics,
}

/// Boundary amplitude (relative to peak) above which propagation is flagged.
pub const BOUNDARY_THRESHOLD: f64 = 1e-8;

impl WaveField {
    pub fn new(grid: Grid1D, psi: Vec<Complex64>, t: f64) -> Result<Self> {
        if psi.len() != grid.n {
            return Err(Error::domain("wavefunction length does not match the grid"));
        }
        Ok(WaveField {
            grid,
            psi,
            t,
            diagnostics: WaveDiagnostics::default(),
        })
    }

    /// Normalised Gaussian `(2πσ²)^(-1/4) exp(−(x−x₀)²/4σ² + i p₀x/ℏ)`.
    pub fn gaussian(grid: Grid1D, sigma0: f64, x0: f64, p0: f64, hbar: f64) -> Self {
        let norm = (2.0 * std::f64::consts::PI * sigma0 * sigma0).powf(-0.25);
        let psi = grid
            .nodes()
            .map(|x| {
                let envelope = norm * (-(x - x0).powi(2) / (4.0 * sigma0 * sigma0)).exp();
                Complex64::from_polar(envelope, p0 * x / hbar)
            })
            .collect();
        WaveField {
            grid,
            psi,
            t: 0.0,
            diagnostics: WaveDiagnostics::default(),
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Discrete L² norm squared, `Σ |ψ|² dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Mean and variance of position under `|ψ|²`.
    pub fn position_moments(&self) -> (f64, f64) {
        let rho = self.density();
        let total: f64 = rho.iter().sum();
        let mean = rho.iter().enumerate().map(|(i, r)| r * self.grid.x(i)).sum::<f64>() / total;
        let var = rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * (self.grid.x(i) - mean).powi(2))
            .sum::<f64>()
            / total;
        (mean, var)
    }

    pub fn max_abs(&self) -> f64 {
        self.psi.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max |ψ − e^{iθ} φ|` with the global phase θ chosen to align `φ` with
    /// `self` (least squares).
    pub fn aligned_linf_distance(&self, other: &WaveField) -> f64 {
        let overlap: Complex64 = self.psi.iter().zip(&other.psi).map(|(a, b)| a * b.conj()).sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            cx(1.0, 0.0)
        };
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

/// Largest admissible real exponent in `exp(i𝒮/ℏ)` before clamping.
const MAX_EXPONENT: f64 = 700.0;

/// `ψ(x) = exp(i𝒮(x, 0, 0)/ℏ)` on the grid.
pub fn to_wavefunction(action: &QuadraticAction, grid: &Grid1D, params: &PhysicalParams) -> WaveField {
    to_wavefunction_fn(
        |x| action.eval(&CVec3::new(cx(x, 0.0), cx(0.0, 0.0), cx(0.0, 0.0))),
        grid,
        action.t,
        params,
    )
}

/// `ψ(x) = exp(i𝒮(x)/ℏ)` for an action given on real positions. Exponents
/// with real part above 700 are clamped and counted in the diagnostics.
pub fn to_wavefunction_fn(
    action: impl Fn(f64) -> Complex64,
    grid: &Grid1D,
    t: f64,
    params: &PhysicalParams,
) -> WaveField {
    let mut clamped = 0;
    let psi = grid
        .nodes()
        .map(|x| {
            let mut w = cx(0.0, 1.0) * action(x) / params.hbar();
            if w.re > MAX_EXPONENT {
                w.re = MAX_EXPONENT;
                clamped += 1;
            }
            w.exp()
        })
        .collect();
    WaveField {
        grid: *grid,
        psi,
        t,
        diagnostics: WaveDiagnostics {
            clamped,
            ..Default::default()
        },
    }
}

/// Phase of ψ unwrapped by nearest-branch continuation outward from the
/// density peak.
pub fn unwrapped_phase(psi: &[Complex64]) -> Vec<f64> {
    let n = psi.len();
    let mut phase = vec![0.0; n];
    if n == 0 {
        return phase;
    }
    let peak = (0..n)
        .max_by(|&i, &j| psi[i].norm_sqr().total_cmp(&psi[j].norm_sqr()))
        .unwrap();
    phase[peak] = psi[peak].arg();
    let continue_to = |prev: f64, raw: f64| {
        let two_pi = 2.0 * std::f64::consts::PI;
        raw + two_pi * ((prev - raw) / two_pi).round()
    };
    for i in peak + 1..n {
        phase[i] = continue_to(phase[i - 1], psi[i].arg());
    }
    for i in (0..peak).rev() {
        phase[i] = continue_to(phase[i + 1], psi[i].arg());
    }
    phase
}

/// Splits ψ into the real action `S = ℏ·arg ψ` (unwrapped) and `ρ = |ψ|²`,
/// so that `𝒮 = S − (iℏ/2) ln ρ`.
pub fn decompose(field: &WaveField, hbar: f64) -> (Vec<f64>, Vec<f64>) {
    let s = unwrapped_phase(&field.psi).into_iter().map(|p| p * hbar).collect();
    (s, field.density())
}

/// Inverse of [`decompose`]: `ψ = √ρ · exp(iS/ℏ)`.
pub fn recompose(grid: Grid1D, s: &[f64], rho: &[f64], hbar: f64, t: f64) -> WaveField {
    let psi = s
        .iter()
        .zip(rho)
        .map(|(si, ri)| Complex64::from_polar(ri.sqrt(), si / hbar))
        .collect();
    WaveField {
        grid,
        psi,
        t,
        diagnostics: WaveDiagnostics::default(),
    }
}

/// Crank–Nicolson propagator for `iℏψ_t = −(ℏ²/2m)ψ_xx + V(x)ψ` with zero
/// Dirichlet boundaries. The tridiagonal system has constant coefficients, so
/// its Thomas factorisation is computed once.
pub struct CrankNicolson {
    grid: Grid1D,
    dt: f64,
    /// `i dt/2ℏ · H` diagonal and off-diagonal.
    diag: Vec<Complex64>,
    off: Complex64,
    /// Forward-elimination multipliers and pivots of `I + i dt H/2ℏ`.
    upper: Vec<Complex64>,
    pivot: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(grid: Grid1D, pot: &Potential, params: &PhysicalParams, dt: f64) -> Result<Self> {
        if !pot.is_real() {
            return Err(Error::domain("reference propagator needs a real potential"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("dt must be > 0, got {dt}")));
        }
        let (hbar, m, dx) = (params.hbar(), params.mass(), grid.dx());
        let kinetic = hbar * hbar / (2.0 * m * dx * dx);
        let factor = cx(0.0, dt / (2.0 * hbar));
        let diag: Vec<Complex64> = grid
            .nodes()
            .map(|x| factor * (2.0 * kinetic + pot.eval_1d(x)))
            .collect();
        let off = factor * (-kinetic);
        let n = grid.n;
        let mut upper = vec![cx(0.0, 0.0); n];
        let mut pivot = vec![cx(0.0, 0.0); n];
        pivot[0] = cx(1.0, 0.0) + diag[0];
        upper[0] = off / pivot[0];
        for i in 1..n {
            pivot[i] = cx(1.0, 0.0) + diag[i] - off * upper[i - 1];
            upper[i] = off / pivot[i];
        }
        Ok(CrankNicolson {
            grid,
            dt,
            diag,
            off,
            upper,
            pivot,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `psi` by one time step in place.
    pub fn step(&self, psi: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = self.grid.n;
        scratch.resize(n, cx(0.0, 0.0));
        for i in 0..n {
            let left = if i > 0 { psi[i - 1] } else { cx(0.0, 0.0) };
            let right = if i + 1 < n { psi[i + 1] } else { cx(0.0, 0.0) };
            scratch[i] = psi[i] * (cx(1.0, 0.0) - self.diag[i]) - self.off * (left + right);
        }
        // forward sweep
        let mut y_prev = scratch[0] / self.pivot[0];
        scratch[0] = y_prev;
        for (y, pivot) in scratch.iter_mut().zip(&self.pivot).skip(1) {
            y_prev = (*y - self.off * y_prev) / pivot;
            *y = y_prev;
        }
        // back substitution
        psi[n - 1] = scratch[n - 1];
        for i in (0..n - 1).rev() {
            psi[i] = scratch[i] - self.upper[i] * psi[i + 1];
        }
    }
}

fn boundary_ratio(psi: &[Complex64]) -> f64 {
    let peak = psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    psi[0].norm().max(psi[psi.len() - 1].norm()) / peak
}

/// Propagates `psi0` for `n_steps` steps of `dt`.
pub fn schrodinger_reference(
    psi0: &WaveField,
    pot: &Potential,
    params: &PhysicalParams,
    dt: f64,
    n_steps: usize,
) -> Result<WaveField> {
    let movie = schrodinger_movie(psi0, pot, params, dt, n_steps, n_steps.max(1))?;
    Ok(movie.into_iter().last().unwrap())
}

/// Snapshots every `stride` steps (including the initial state and the final
/// one).
pub fn schrodinger_movie(
    psi0: &WaveField,
    pot: &Potential,
    params: &PhysicalParams,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<Vec<WaveField>> {
    if stride == 0 {
        return Err(Error::domain("snapshot stride must be >= 1"));
    }
    let cn = CrankNicolson::new(psi0.grid, pot, params, dt)?;
    let mut psi = psi0.psi.clone();
    let mut scratch = Vec::with_capacity(psi.len());
    let mut worst = boundary_ratio(&psi).max(psi0.diagnostics.boundary_amplitude);
    let snapshot = |psi: &[Complex64], step: usize, worst: f64| WaveField {
        grid: psi0.grid,
        psi: psi.to_vec(),
        t: psi0.t + step as f64 * dt,
        diagnostics: WaveDiagnostics {
            clamped: psi0.diagnostics.clamped,
            boundary_amplitude: worst,
            boundary_warning: worst > BOUNDARY_THRESHOLD,
        },
    };
    let mut out = vec![snapshot(&psi, 0, worst)];
    for k in 1..=n_steps {
        cn.step(&mut psi, &mut scratch);
        worst = worst.max(boundary_ratio(&psi));
        if k % stride == 0 || k == n_steps {
            out.push(snapshot(&psi, k, worst));
        }
    }
    Ok(out)
}

/// Width of a free Gaussian packet: `σ(t) = σ₀ √(1 + (ℏt/2mσ₀²)²)`.
pub fn free_gaussian_width(sigma0: f64, t: f64, params: &PhysicalParams) -> f64 {
    let tau = params.hbar() * t / (2.0 * params.mass() * sigma0 * sigma0);
    sigma0 * (1.0 + tau * tau).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::spin_permutations;

    fn probe() -> CVec3 {
        CVec3::new(cx(0.4, -0.1), cx(-0.3, 0.2), cx(0.7, 0.0))
    }

    #[test]
    fn constant_action_is_stationary_without_potential() {
        let p = PhysicalParams::new(1.0, 1.0, 0.01).unwrap();
        let s0 = QuadraticAction::constant(cx(1.5, -0.5));
        let s = recurrence_evolve(&s0, &Permutation::s1(), &Potential::free(), &p, 10).unwrap();
        assert_eq!(s.a, s0.a);
        assert_eq!(s.b, s0.b);
        assert_eq!(s.c, s0.c);
        assert!((s.t - 0.6).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_loses_kinetic_energy_linearly() {
        let p = PhysicalParams::new(1.0, 2.0, 0.005).unwrap();
        let p0 = CVec3::new(cx(1.0, 0.0), cx(-0.5, 0.0), cx(0.25, 0.0));
        let k = 20;
        let s = recurrence_evolve(&QuadraticAction::plane_wave(p0), &Permutation::s1(), &Potential::free(), &p, k)
            .unwrap();
        assert_eq!(s.b, p0);
        let expected = -bdot(&p0, &p0) / (2.0 * p.mass()) * (6.0 * k as f64 * p.epsilon());
        assert!((s.a - expected).norm() < 1e-12);
    }

    #[test]
    fn free_quadratic_substep_matches_exact_riccati_step() {
        let p = PhysicalParams::new(1.0, 1.0, 0.01).unwrap();
        let s0 = QuadraticAction::gaussian_1d(1.0, 0.3, 0.5, 1.0);
        let next = recurrence_substep(&s0, &Permutation::s1(), &Potential::free(), &p).unwrap();
        let c0 = s0.c[(0, 0)];
        assert!((next.c[(0, 0)] - c0 / (cx(1.0, 0.0) + c0 * 0.01)).norm() < 1e-15);
    }

    #[test]
    fn substep_is_independent_of_permutation() {
        let p = PhysicalParams::new(1.0, 1.0, 0.02).unwrap();
        let mut c = CMat3::identity() * cx(0.5, 0.3);
        c[(0, 1)] = cx(0.1, 0.0);
        let s0 = QuadraticAction::new(cx(0.0, 0.0), probe(), c, 0.0);
        let first = recurrence_substep(&s0, &Permutation::s1(), &Potential::harmonic(0.5), &p).unwrap();
        for s in spin_permutations() {
            let other = recurrence_substep(&s0, s, &Potential::harmonic(0.5), &p).unwrap();
            assert!(first.coefficient_distance(&other) < 1e-15);
        }
    }

    #[test]
    fn closed_form_substep_equals_literal_objective_at_argmin() {
        let p = PhysicalParams::new(0.8, 1.3, 0.03).unwrap();
        let mut c = CMat3::identity() * cx(0.4, 0.2);
        c[(1, 2)] = cx(0.05, -0.1);
        let s0 = QuadraticAction::new(cx(0.1, 0.2), probe(), c, 0.0);
        let pot = Potential::linear(0.3, [0.1, -0.2, 0.0]);
        let s = Permutation::by_id(4).unwrap();
        let next = recurrence_substep(&s0, &s, &pot, &p).unwrap();
        for z in [probe(), CVec3::zeros(), CVec3::new(cx(1.0, 1.0), cx(0.0, -2.0), cx(0.5, 0.5))] {
            let v = optimal_drift(&s0, &z, &p).unwrap();
            let literal = substep_objective(&s0, &z, &v, &s, &pot, &p);
            assert!((literal - next.eval(&z)).norm() < 1e-12);
        }
    }

    #[test]
    fn hj_residual_examples() {
        let p = PhysicalParams::unit();
        let mom = CVec3::new(cx(0.7, 0.0), cx(-0.2, 0.0), cx(0.1, 0.0));
        let energy = bdot(&mom, &mom) / 2.0;
        let plane = |t: f64| QuadraticAction::new(-energy * t, mom, CMat3::zeros(), t);
        let r = hj_residual(plane, &Potential::free(), &probe(), 0.5, &p, 1e-3);
        assert!(r.norm() < 1e-12);

        let pot = Potential::linear(2.5, [0.0; 3]);
        let constant = |t: f64| QuadraticAction::new(cx(1.0, 0.0), CVec3::zeros(), CMat3::zeros(), t);
        let r = hj_residual(constant, &pot, &probe(), 0.5, &p, 1e-3);
        assert!((r - cx(2.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn field_residual_agrees_with_quadratic_residual() {
        let p = PhysicalParams::unit();
        let s0 = QuadraticAction::gaussian_1d(1.0, 0.0, 0.3, 1.0);
        let pot = Potential::harmonic_1d(1.0);
        let flow = |t: f64| riccati_reference(&s0, &pot, &p, t, 4000);
        let r = hj_residual_field(|z, t| flow(t).eval(z), &pot, &probe(), 0.7, &p, 1e-4);
        assert!(r.norm() < 1e-5, "{r}");
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, 0.0, 10).is_err());
        assert!(Grid1D::new(0.0, 1.0, 2).is_err());
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.x(4), 1.0);
    }

    #[test]
    fn zero_action_is_unit_wave() {
        let g = Grid1D::new(-1.0, 1.0, 11).unwrap();
        let w = to_wavefunction(&QuadraticAction::constant(cx(0.0, 0.0)), &g, &PhysicalParams::unit());
        assert!(w.psi.iter().all(|c| *c == cx(1.0, 0.0)));
    }

    #[test]
    fn gaussian_action_matches_gaussian_field() {
        let g = Grid1D::new(-8.0, 8.0, 161).unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 0.01).unwrap();
        let from_action = to_wavefunction(&QuadraticAction::gaussian_1d(1.2, 0.5, 0.8, 1.0), &g, &p);
        let direct = WaveField::gaussian(g, 1.2, 0.5, 0.8, 1.0);
        for (a, b) in from_action.psi.iter().zip(&direct.psi) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn overflow_is_clamped_and_flagged() {
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        let w = to_wavefunction_fn(|_| cx(0.0, -1e4), &g, 0.0, &PhysicalParams::unit());
        assert_eq!(w.diagnostics.clamped, 5);
        assert!(w.psi.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn decomposition_round_trip() {
        let g = Grid1D::new(-6.0, 6.0, 241).unwrap();
        let hbar = 0.7;
        let w = WaveField::gaussian(g, 1.0, 0.3, 4.0, hbar);
        let (s, rho) = decompose(&w, hbar);
        let back = recompose(g, &s, &rho, hbar, 0.0);
        for (a, b) in w.psi.iter().zip(&back.psi) {
            assert!((a - b).norm() < 1e-13);
        }
        // unwrapped phase of a plane-wave factor is linear
        for i in 1..g.n - 1 {
            let d2 = s[i + 1] - 2.0 * s[i] + s[i - 1];
            assert!(d2.abs() < 1e-9);
        }
    }

    #[test]
    fn complex_potential_rejected_by_propagator() {
        let g = Grid1D::new(-1.0, 1.0, 11).unwrap();
        let mut pot = Potential::free();
        pot.v0 = cx(0.0, 1.0);
        assert!(CrankNicolson::new(g, &pot, &PhysicalParams::unit(), 0.1).is_err());
    }

    #[test]
    fn leakage_is_flagged() {
        let g = Grid1D::new(-3.0, 3.0, 121).unwrap();
        let w = WaveField::gaussian(g, 1.0, 0.0, 0.0, 1.0);
        let out = schrodinger_reference(&w, &Potential::free(), &PhysicalParams::unit(), 0.01, 200).unwrap();
        assert!(out.diagnostics.boundary_warning);
    }
}
