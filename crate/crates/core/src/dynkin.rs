//! Complex Dynkin operator `D = ∂/∂t + 𝒱·∇ − i(ℏ/2m)Δ` and the one-step
//! averaging identity `Y(6qε) − Y((6q−1)ε) = Df(Z̃(6qε), 6qε)·ε + o(ε)` for
//! `Y(t) = (1/6) Σⱼ f(Zʲ(t), t)`.

use std::fmt;
use std::sync::Arc;

use crate::geometry::Permutation;
use crate::order::{block_count, pairwise_orders};
use crate::process::{ode_reference, simulate, PhysicalParams, ProcessState, VelocityField};
use crate::types::{bdot, CMat3, CVec3, Complex64};
use crate::{Error, Result};

type ScalarFn = Arc<dyn Fn(&CVec3, f64) -> Complex64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&CVec3, f64) -> CVec3 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionClass {
    Constant,
    Linear,
    Quadratic,
    General,
}

/// Holomorphic test function `f(z, t)` on ℂ³ × ℝ with analytic derivatives.
#[derive(Clone)]
pub struct TestFunction {
    class: FunctionClass,
    eval: ScalarFn,
    gradient: VectorFn,
    laplacian: ScalarFn,
    time_derivative: ScalarFn,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("class", &self.class).finish()
    }
}

impl TestFunction {
    pub fn new(
        class: FunctionClass,
        eval: impl Fn(&CVec3, f64) -> Complex64 + Send + Sync + 'static,
        gradient: impl Fn(&CVec3, f64) -> CVec3 + Send + Sync + 'static,
        laplacian: impl Fn(&CVec3, f64) -> Complex64 + Send + Sync + 'static,
        time_derivative: impl Fn(&CVec3, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            class,
            eval: Arc::new(eval),
            gradient: Arc::new(gradient),
            laplacian: Arc::new(laplacian),
            time_derivative: Arc::new(time_derivative),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(
            FunctionClass::Constant,
            move |_, _| c,
            |_, _| CVec3::zeros(),
            |_, _| Complex64::from(0.0),
            |_, _| Complex64::from(0.0),
        )
    }

    /// `a·z + b + rate·t`.
    pub fn linear(a: CVec3, b: Complex64, rate: Complex64) -> Self {
        Self::new(
            FunctionClass::Linear,
            move |z, t| bdot(&a, z) + b + rate * t,
            move |_, _| a,
            |_, _| Complex64::from(0.0),
            move |_, _| rate,
        )
    }

    /// `½ z·Az + b·z + c` with `A` symmetrised.
    pub fn quadratic(a: CMat3, b: CVec3, c: Complex64) -> Self {
        let a = (a + a.transpose()) * Complex64::from(0.5);
        let trace = a.trace();
        Self::new(
            FunctionClass::Quadratic,
            move |z, _| Complex64::from(0.5) * bdot(z, &(a * z)) + bdot(&b, z) + c,
            move |z, _| a * z + b,
            move |_, _| trace,
            |_, _| Complex64::from(0.0),
        )
    }

    /// `f(z) = z₁²`.
    pub fn z1_squared() -> Self {
        let mut a = CMat3::zeros();
        a[(0, 0)] = Complex64::from(2.0);
        Self::quadratic(a, CVec3::zeros(), Complex64::from(0.0))
    }

    /// `f(z, t) = e^{z₁}·z₂ + t·sin(z₃)`, a non-polynomial C² example.
    pub fn exp_sin() -> Self {
        Self::new(
            FunctionClass::General,
            |z, t| z[0].exp() * z[1] + z[2].sin() * t,
            |z, t| CVec3::new(z[0].exp() * z[1], z[0].exp(), z[2].cos() * t),
            |z, t| z[0].exp() * z[1] - z[2].sin() * t,
            |z, _| z[2].sin(),
        )
    }

    pub fn class(&self) -> FunctionClass {
        self.class
    }

    pub fn eval(&self, z: &CVec3, t: f64) -> Complex64 {
        (self.eval)(z, t)
    }

    pub fn gradient(&self, z: &CVec3, t: f64) -> CVec3 {
        (self.gradient)(z, t)
    }

    pub fn laplacian(&self, z: &CVec3, t: f64) -> Complex64 {
        (self.laplacian)(z, t)
    }

    pub fn time_derivative(&self, z: &CVec3, t: f64) -> Complex64 {
        (self.time_derivative)(z, t)
    }

    /// Largest relative mismatch between the analytic gradient / Laplacian
    /// and central finite differences (step `h` along real directions) at
    /// the given probes.
    pub fn finite_difference_mismatch(&self, probes: &[(CVec3, f64)], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for (z, t) in probes {
            let f0 = self.eval(z, *t);
            let grad = self.gradient(z, *t);
            let mut lap_fd = Complex64::from(0.0);
            for k in 0..3 {
                let mut zp = *z;
                let mut zm = *z;
                zp[k] += h;
                zm[k] -= h;
                let (fp, fm) = (self.eval(&zp, *t), self.eval(&zm, *t));
                let g_fd = (fp - fm) / (2.0 * h);
                worst = worst.max((g_fd - grad[k]).norm() / grad[k].norm().max(1.0));
                lap_fd += (fp - f0 * 2.0 + fm) / (h * h);
            }
            let lap = self.laplacian(z, *t);
            worst = worst.max((lap_fd - lap).norm() / lap.norm().max(1.0));
        }
        worst
    }
}

/// `Df(z, t) = ∂f/∂t + 𝒱(t)·∇f − i(ℏ/2m)Δf`.
pub fn dynkin_apply(
    f: &TestFunction,
    z: &CVec3,
    t: f64,
    v: &VelocityField,
    params: &PhysicalParams,
) -> Complex64 {
    let diffusion = Complex64::new(0.0, params.hbar() / (2.0 * params.mass()));
    f.time_derivative(z, t) + bdot(&v.eval(t), &f.gradient(z, t)) - diffusion * f.laplacian(z, t)
}

/// Average of `f` over the six processes at their common time.
pub fn process_mean(f: &TestFunction, state: &ProcessState, params: &PhysicalParams) -> Complex64 {
    let t = state.time(params);
    state.z.iter().map(|z| f.eval(z, t)).sum::<Complex64>() / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    /// `Y(6qε) − Y((6q−1)ε)`.
    pub lhs: Complex64,
    /// `Df(Z̃(6qε), 6qε)·ε` with `Z̃` the ODE solution.
    pub rhs: Complex64,
    pub error: f64,
}

/// Evaluates both sides of the one-step averaging identity at block `q ≥ 1`.
pub fn lemma_check(
    f: &TestFunction,
    q: usize,
    s: &Permutation,
    v: &VelocityField,
    params: &PhysicalParams,
    z0: CVec3,
) -> Result<LemmaCheck> {
    if q == 0 {
        return Err(Error::domain("block index q must be >= 1"));
    }
    let n = 6 * q;
    let traj = simulate(z0, s, v, params, n);
    let lhs = process_mean(f, &traj[n], params) - process_mean(f, &traj[n - 1], params);
    let t = n as f64 * params.epsilon();
    let z_ode = ode_reference(z0, v, t)?;
    let rhs = dynkin_apply(f, &z_ode, t, v, params) * params.epsilon();
    Ok(LemmaCheck {
        lhs,
        rhs,
        error: (lhs - rhs).norm(),
    })
}

/// `Y(nε) − Y((n−1)ε) − Df(Z̃(nε), nε)·ε` for the six sub-steps of block `q`
/// (`n = 6q−5 ..= 6q`). Only the last entry is covered by the identity; the
/// others carry the `O(1)·ε` curvature terms of the opening and closing
/// of the hexagon.
pub fn substep_diagnostics(
    f: &TestFunction,
    q: usize,
    s: &Permutation,
    v: &VelocityField,
    params: &PhysicalParams,
    z0: CVec3,
) -> Result<[Complex64; 6]> {
    if q == 0 {
        return Err(Error::domain("block index q must be >= 1"));
    }
    let end = 6 * q;
    let traj = simulate(z0, s, v, params, end);
    let eps = params.epsilon();
    let mut out = [Complex64::from(0.0); 6];
    for (i, n) in (end - 5..=end).enumerate() {
        let t = n as f64 * eps;
        let z_ode = ode_reference(z0, v, t)?;
        let step = process_mean(f, &traj[n], params) - process_mean(f, &traj[n - 1], params);
        out[i] = step - dynkin_apply(f, &z_ode, t, v, params) * eps;
    }
    Ok(out)
}

/// One rung of the lemma's ε-ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRow {
    pub epsilon: f64,
    pub error: f64,
    pub order: Option<f64>,
}

/// Lemma error at the fixed time `t_final` (so `q = t_final / 6ε`) for each
/// ε in a strictly decreasing ladder.
pub fn lemma_convergence(
    f: &TestFunction,
    s: &Permutation,
    v: &VelocityField,
    params: &PhysicalParams,
    z0: CVec3,
    t_final: f64,
    ladder: &[f64],
) -> Result<Vec<LemmaRow>> {
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("epsilon ladder must be strictly decreasing"));
    }
    let mut errors = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let q = block_count(t_final, eps)?;
        let p = params.with_epsilon(eps)?;
        errors.push(lemma_check(f, q, s, v, &p, z0)?.error);
    }
    let orders = pairwise_orders(ladder, &errors);
    Ok(ladder
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(i, (&epsilon, &error))| LemmaRow {
            epsilon,
            error,
            order: if i == 0 { None } else { Some(orders[i - 1]) },
        })
        .collect())
}
