//! Complex min-plus analysis.
//!
//! For `f(z) = P(x, y) + iQ(x, y)` on a box `A = X + iY`, the complex minimum
//! is `f(z₀)` where `(x₀, y₀)` is a saddle point of the real part:
//! `P(x₀, y) ≤ P(x₀, y₀) ≤ P(x, y₀)` for all `x ∈ X`, `y ∈ Y`. `f` is
//! complex-convex when `P` is convex in `x` and concave in `y`. The complex
//! Fenchel transform is `f̂(p) = max_z (p·z − f(z))`, the max taken with the
//! opposite saddle orientation.
//!
//! Holomorphic inputs are solved by damped Newton on `f′(z) = 0` from a grid
//! of starts; every root found is then certified by sampling the two-sided
//! saddle inequality. Non-holomorphic inputs in one complex dimension fall
//! back to a discrete min-max over a grid of the real part.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Matrix3};

use crate::types::{bdot, CMat3, CVec3, Complex64};
use crate::{Error, Result};

type EvalFn = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&[Complex64]) -> DMatrix<Complex64> + Send + Sync>;

/// A continuous function ℂⁿ → ℂ, optionally holomorphic with an analytic
/// derivative (and Hessian).
#[derive(Clone)]
pub struct ComplexFunction {
    dim: usize,
    eval: EvalFn,
    gradient: Option<GradFn>,
    hessian: Option<HessFn>,
    holomorphic: bool,
}

impl fmt::Debug for ComplexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexFunction")
            .field("dim", &self.dim)
            .field("holomorphic", &self.holomorphic)
            .field("has_gradient", &self.gradient.is_some())
            .field("has_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl ComplexFunction {
    /// A function known only through its values (grid path).
    pub fn continuous(dim: usize, eval: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static) -> Self {
        ComplexFunction {
            dim,
            eval: Arc::new(eval),
            gradient: None,
            hessian: None,
            holomorphic: false,
        }
    }

    /// A holomorphic function with analytic gradient.
    pub fn holomorphic(
        dim: usize,
        eval: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
        gradient: impl Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + 'static,
    ) -> Self {
        ComplexFunction {
            dim,
            eval: Arc::new(eval),
            gradient: Some(Arc::new(gradient)),
            hessian: None,
            holomorphic: true,
        }
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&[Complex64]) -> DMatrix<Complex64> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// Single-variable holomorphic function from `f`, `f′`, `f″`.
    pub fn univariate(
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        df: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        d2f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::holomorphic(1, move |z| f(z[0]), move |z| vec![df(z[0])])
            .with_hessian(move |z| DMatrix::from_element(1, 1, d2f(z[0])))
    }

    /// `½ zᵀ M z + g·z + c` on ℂⁿ (M symmetrised).
    pub fn quadratic(m: DMatrix<Complex64>, g: DVector<Complex64>, c: Complex64) -> Self {
        let m = (&m + m.transpose()) * Complex64::from(0.5);
        let (m1, m2, g1) = (m.clone(), m.clone(), g.clone());
        let n = g.len();
        Self::holomorphic(
            n,
            move |z| {
                let v = DVector::from_column_slice(z);
                (v.transpose() * &m1 * &v)[0] * 0.5 + (g.transpose() * &v)[0] + c
            },
            move |z| {
                let v = DVector::from_column_slice(z);
                (&m2 * v + &g1).iter().copied().collect()
            },
        )
        .with_hessian(move |_| m.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_holomorphic(&self) -> bool {
        self.holomorphic
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        (self.eval)(z)
    }

    /// Real part `P(x, y)`.
    pub fn real_part(&self, x: &[f64], y: &[f64]) -> f64 {
        let z: Vec<Complex64> = x.iter().zip(y).map(|(a, b)| Complex64::new(*a, *b)).collect();
        self.eval(&z).re
    }

    pub fn gradient(&self, z: &[Complex64]) -> Option<Vec<Complex64>> {
        self.gradient.as_ref().map(|g| g(z))
    }

    fn hessian_at(&self, z: &[Complex64]) -> Option<DMatrix<Complex64>> {
        if let Some(h) = &self.hessian {
            return Some(h(z));
        }
        let grad = self.gradient.as_ref()?;
        // central differences of the holomorphic gradient along real directions
        let n = self.dim;
        let mut out = DMatrix::zeros(n, n);
        for k in 0..n {
            let h = 1e-6 * (1.0 + z[k].norm());
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += h;
            zm[k] -= h;
            let (gp, gm) = (grad(&zp), grad(&zm));
            for i in 0..n {
                out[(i, k)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        Some(out)
    }

    /// Cauchy–Riemann residual `|∂f/∂x_k + i·∂f/∂y_k|` (max over k), scaled by
    /// `max(1, |∂f/∂x_k|)`, from central differences at `z`.
    pub fn cauchy_riemann_residual(&self, z: &[Complex64], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.dim {
            let shifted = |dz: Complex64| {
                let mut w = z.to_vec();
                w[k] += dz;
                self.eval(&w)
            };
            let dx = (shifted(Complex64::new(h, 0.0)) - shifted(Complex64::new(-h, 0.0))) / (2.0 * h);
            let dy = (shifted(Complex64::new(0.0, h)) - shifted(Complex64::new(0.0, -h))) / (2.0 * h);
            worst = worst.max((dx + Complex64::i() * dy).norm() / dx.norm().max(1.0));
        }
        worst
    }
}

/// Real bounds on `x = Re z` and `y = Im z`, one interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub x: Vec<(f64, f64)>,
    pub y: Vec<(f64, f64)>,
}

impl SearchBox {
    pub fn new(x: Vec<(f64, f64)>, y: Vec<(f64, f64)>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::domain("box needs matching non-empty x and y bounds"));
        }
        if x.iter().chain(&y).any(|(lo, hi)| lo >= hi || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::domain("box bounds must be finite with lo < hi"));
        }
        Ok(SearchBox { x, y })
    }

    /// Box of half-width `half` around `center` in every real direction.
    pub fn around(center: &[Complex64], half: f64) -> Self {
        SearchBox {
            x: center.iter().map(|c| (c.re - half, c.re + half)).collect(),
            y: center.iter().map(|c| (c.im - half, c.im + half)).collect(),
        }
    }

    /// `[-half, half]` in every real direction of ℂⁿ.
    pub fn centered(dim: usize, half: f64) -> Self {
        Self::around(&vec![Complex64::from(0.0); dim], half)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn contains(&self, z: &[Complex64], slack: f64) -> bool {
        z.iter().enumerate().all(|(k, c)| {
            let (xl, xh) = self.x[k];
            let (yl, yh) = self.y[k];
            c.re >= xl - slack && c.re <= xh + slack && c.im >= yl - slack && c.im <= yh + slack
        })
    }

    fn diameter(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Point of the 2n-dimensional real box at unit-cube coordinates `u`
    /// (first n entries for x, last n for y).
    fn at_unit(&self, u: &[f64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let (xl, xh) = self.x[k];
                let (yl, yh) = self.y[k];
                Complex64::new(xl + u[k] * (xh - xl), yl + u[n + k] * (yh - yl))
            })
            .collect()
    }
}

/// Tuning knobs for [`complex_min`].
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleOptions {
    /// Newton starts per real axis (the start grid has `k^(2n)` points).
    pub starts_per_axis: usize,
    /// Certificate samples per real axis.
    pub certificate_points: usize,
    /// Grid resolution per axis for the non-holomorphic path.
    pub grid_resolution: usize,
    pub newton_tolerance: f64,
    pub max_newton_iterations: usize,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            starts_per_axis: 3,
            certificate_points: 33,
            grid_resolution: 201,
            newton_tolerance: 1e-13,
            max_newton_iterations: 80,
        }
    }
}

/// Sampled evidence for the two-sided saddle inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleCertificate {
    pub samples: usize,
    /// Largest sampled violation of `P(x₀,y) ≤ P(x₀,y₀) ≤ P(x,y₀)`.
    pub max_violation: f64,
    pub tolerance: f64,
}

impl SaddleCertificate {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleResult {
    pub argmin: Vec<Complex64>,
    pub value: Complex64,
    pub certificate: SaddleCertificate,
}

/// Complex minimum of `f` over `bounds`.
pub fn complex_min(f: &ComplexFunction, bounds: &SearchBox, opts: &SaddleOptions) -> Result<SaddleResult> {
    if bounds.dim() != f.dim() {
        return Err(Error::domain(format!(
            "box dimension {} does not match function dimension {}",
            bounds.dim(),
            f.dim()
        )));
    }
    if f.is_holomorphic() && f.gradient.is_some() {
        newton_saddles(f, bounds, opts)
    } else {
        grid_saddle(f, bounds, opts)
    }
}

fn newton_saddles(f: &ComplexFunction, bounds: &SearchBox, opts: &SaddleOptions) -> Result<SaddleResult> {
    let n = f.dim();
    let k = opts.starts_per_axis.max(1);
    let total = k.pow((2 * n) as u32);
    let diam = bounds.diameter();
    let mut roots: Vec<Vec<Complex64>> = Vec::new();
    for idx in 0..total {
        let mut rem = idx;
        let u: Vec<f64> = (0..2 * n)
            .map(|_| {
                let i = rem % k;
                rem /= k;
                (i as f64 + 0.5) / k as f64
            })
            .collect();
        let start = bounds.at_unit(&u);
        if let Some(root) = damped_newton(f, start, opts) {
            if bounds.contains(&root, 1e-9 * diam)
                && !roots.iter().any(|r| distance(r, &root) <= 1e-7 * diam.max(1.0))
            {
                roots.push(root);
            }
        }
    }
    let mut certified: Vec<SaddleResult> = Vec::new();
    let mut last_failure = None;
    for root in roots {
        let cert = certify(f, bounds, &root, opts.certificate_points);
        if cert.passed() {
            certified.push(SaddleResult {
                value: f.eval(&root),
                argmin: root,
                certificate: cert,
            });
        } else {
            last_failure = Some(cert.max_violation);
        }
    }
    select(certified, last_failure)
}

fn select(mut certified: Vec<SaddleResult>, last_failure: Option<f64>) -> Result<SaddleResult> {
    match certified.len() {
        0 => Err(Error::NoSaddle(match last_failure {
            Some(v) => format!("stationary points found but certificate violated by {v:e}"),
            None => "no stationary point found".to_string(),
        })),
        1 => Ok(certified.pop().unwrap()),
        _ => Err(Error::MultivaluedMin {
            argmins: certified.iter().map(|r| r.argmin.clone()).collect(),
            values: certified.iter().map(|r| r.value).collect(),
        }),
    }
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn grad_norm(g: &[Complex64]) -> f64 {
    g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn damped_newton(f: &ComplexFunction, start: Vec<Complex64>, opts: &SaddleOptions) -> Option<Vec<Complex64>> {
    let mut z = start;
    let mut g = f.gradient(&z)?;
    let mut gn = grad_norm(&g);
    for _ in 0..opts.max_newton_iterations {
        let scale = 1.0 + z.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if gn <= opts.newton_tolerance * scale {
            return Some(z);
        }
        let h = f.hessian_at(&z)?;
        let rhs = DVector::from_iterator(g.len(), g.iter().map(|c| -c));
        let step = h.lu().solve(&rhs)?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<Complex64> = z.iter().zip(step.iter()).map(|(a, d)| a + d * alpha).collect();
            let tg = f.gradient(&trial)?;
            let tn = grad_norm(&tg);
            if tn.is_finite() && tn < gn {
                z = trial;
                g = tg;
                gn = tn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // stalled at round-off level
            let scale = 1.0 + z.iter().map(|c| c.norm()).fold(0.0, f64::max);
            return (gn <= 1e3 * opts.newton_tolerance * scale).then_some(z);
        }
    }
    None
}

/// Samples the saddle inequality: the full axis lines through the candidate
/// plus a low-discrepancy cloud in the x- and y-sub-boxes.
pub fn certify(f: &ComplexFunction, bounds: &SearchBox, z0: &[Complex64], points: usize) -> SaddleCertificate {
    let n = f.dim();
    let x0: Vec<f64> = z0.iter().map(|c| c.re).collect();
    let y0: Vec<f64> = z0.iter().map(|c| c.im).collect();
    let p0 = f.real_part(&x0, &y0);
    let points = points.max(2);
    let mut samples = 0usize;
    let mut worst = 0.0f64;
    let mut magnitude = p0.abs();
    let mut check = |x: &[f64], y: &[f64], x_side: bool| {
        let p = f.real_part(x, y);
        magnitude = magnitude.max(p.abs());
        // x side: P(x, y0) >= P0; y side: P(x0, y) <= P0
        let violation = if x_side { p0 - p } else { p - p0 };
        worst = worst.max(violation);
        samples += 1;
    };
    for k in 0..n {
        for i in 0..points {
            let u = i as f64 / (points - 1) as f64;
            let mut x = x0.clone();
            x[k] = bounds.x[k].0 + u * (bounds.x[k].1 - bounds.x[k].0);
            check(&x, &y0, true);
            let mut y = y0.clone();
            y[k] = bounds.y[k].0 + u * (bounds.y[k].1 - bounds.y[k].0);
            check(&x0, &y, false);
        }
    }
    let cloud = points * points;
    for i in 1..=cloud {
        let u = halton(i, n);
        let x: Vec<f64> = (0..n).map(|k| bounds.x[k].0 + u[k] * (bounds.x[k].1 - bounds.x[k].0)).collect();
        let y: Vec<f64> = (0..n).map(|k| bounds.y[k].0 + u[k] * (bounds.y[k].1 - bounds.y[k].0)).collect();
        check(&x, &y0, true);
        check(&x0, &y, false);
    }
    SaddleCertificate {
        samples,
        max_violation: worst,
        tolerance: 1e-10 * magnitude.max(1.0),
    }
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

fn halton(i: usize, dim: usize) -> Vec<f64> {
    (0..dim).map(|k| radical_inverse(i, PRIMES[k % PRIMES.len()])).collect()
}

fn grid_saddle(f: &ComplexFunction, bounds: &SearchBox, opts: &SaddleOptions) -> Result<SaddleResult> {
    if f.dim() != 1 {
        return Err(Error::domain(
            "grid min-max fallback supports one complex dimension; supply a holomorphic derivative",
        ));
    }
    let res = opts.grid_resolution.max(3);
    let (xl, xh) = bounds.x[0];
    let (yl, yh) = bounds.y[0];
    let xs: Vec<f64> = (0..res).map(|i| xl + (xh - xl) * i as f64 / (res - 1) as f64).collect();
    let ys: Vec<f64> = (0..res).map(|i| yl + (yh - yl) * i as f64 / (res - 1) as f64).collect();
    let grid: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| f.real_part(&[x], &[y])).collect())
        .collect();
    // upper value: min over x of max over y; lower value: max over y of min over x
    let (ix, upper) = (0..res)
        .map(|i| (i, grid[i].iter().copied().fold(f64::NEG_INFINITY, f64::max)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let (iy, lower) = (0..res)
        .map(|j| (j, (0..res).map(|i| grid[i][j]).fold(f64::INFINITY, f64::min)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let spread = grid
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let gap_tol = 1e-9 * (spread.1 - spread.0).abs().max(1.0);
    if upper - lower > gap_tol {
        return Err(Error::NoSaddle(format!(
            "grid min-max gap {:e} (upper {upper}, lower {lower})",
            upper - lower
        )));
    }
    let z0 = vec![Complex64::new(xs[ix], ys[iy])];
    // off-grid samples can beat a grid candidate by up to the variation of P
    // across one cell
    let here = grid[ix][iy];
    let cell = [(ix.wrapping_sub(1), iy), (ix + 1, iy), (ix, iy.wrapping_sub(1)), (ix, iy + 1)]
        .iter()
        .filter(|(i, j)| *i < res && *j < res)
        .map(|&(i, j)| (grid[i][j] - here).abs())
        .fold(0.0, f64::max);
    let mut cert = certify(f, bounds, &z0, opts.certificate_points);
    cert.tolerance = cert.tolerance.max(gap_tol).max(cell);
    if !cert.passed() {
        return Err(Error::NoSaddle(format!(
            "grid candidate violates the saddle inequality by {:e}",
            cert.max_violation
        )));
    }
    Ok(SaddleResult {
        value: f.eval(&z0),
        argmin: z0,
        certificate: cert,
    })
}

/// Complex Fenchel transform `f̂(p) = max_z (p·z − f(z))` and its argmax.
pub fn complex_fenchel_full(
    f: &ComplexFunction,
    p: &[Complex64],
    bounds: &SearchBox,
    opts: &SaddleOptions,
) -> Result<(Complex64, Vec<Complex64>)> {
    if p.len() != f.dim() {
        return Err(Error::domain("dual variable has the wrong dimension"));
    }
    let shifted = shifted_by_linear(f, p);
    let r = complex_min(&shifted, bounds, opts)?;
    Ok((-r.value, r.argmin))
}

/// Value of the complex Fenchel transform at `p`.
pub fn complex_fenchel(
    f: &ComplexFunction,
    p: &[Complex64],
    bounds: &SearchBox,
    opts: &SaddleOptions,
) -> Result<Complex64> {
    complex_fenchel_full(f, p, bounds, opts).map(|r| r.0)
}

/// `g(z) = f(z) − p·z`.
fn shifted_by_linear(f: &ComplexFunction, p: &[Complex64]) -> ComplexFunction {
    let p: Vec<Complex64> = p.to_vec();
    let (fe, pe) = (f.clone(), p.clone());
    let eval = move |z: &[Complex64]| {
        fe.eval(z) - z.iter().zip(&pe).map(|(a, b)| a * b).sum::<Complex64>()
    };
    let mut g = ComplexFunction {
        dim: f.dim(),
        eval: Arc::new(eval),
        gradient: None,
        hessian: f.hessian.clone(),
        holomorphic: f.is_holomorphic(),
    };
    if let Some(grad) = f.gradient.clone() {
        g.gradient = Some(Arc::new(move |z: &[Complex64]| {
            grad(z).iter().zip(&p).map(|(a, b)| a - b).collect()
        }));
    }
    g
}

/// The Fenchel transform as a new function of `p`, evaluated numerically over
/// `bounds`. Its gradient is the argmax (envelope theorem). Evaluation
/// failures yield NaN.
pub fn fenchel_transform(f: &ComplexFunction, bounds: SearchBox, opts: SaddleOptions) -> ComplexFunction {
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let dim = f.dim();
    let (f1, b1, o1) = (f.clone(), bounds.clone(), opts.clone());
    let f2 = f.clone();
    ComplexFunction::holomorphic(
        dim,
        move |p| complex_fenchel(&f1, p, &b1, &o1).unwrap_or(nan),
        move |p| {
            complex_fenchel_full(&f2, p, &bounds, &opts)
                .map(|r| r.1)
                .unwrap_or_else(|_| vec![nan; dim])
        },
    )
}

/// Outcome of the sampled convexity test.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub convex: bool,
    /// Smallest sampled second difference of `P` along x directions.
    pub min_x_curvature: f64,
    /// Largest sampled second difference of `P` along y directions.
    pub max_y_curvature: f64,
    pub samples: usize,
}

/// Sampled test that `P` is convex along every x-slice and concave along
/// every y-slice of the box.
pub fn is_cconvex(f: &ComplexFunction, bounds: &SearchBox, grid_resolution: usize) -> ConvexityReport {
    let n = f.dim();
    let res = grid_resolution.max(3);
    let points: Vec<Vec<f64>> = if n == 1 {
        (0..res)
            .flat_map(|i| (0..res).map(move |j| vec![(i as f64 + 0.5) / res as f64, (j as f64 + 0.5) / res as f64]))
            .collect()
    } else {
        (1..=res * res).map(|i| halton(i, 2 * n)).collect()
    };
    let mut min_x = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    let mut magnitude = 0.0f64;
    for u in &points {
        let z = bounds.at_unit(u);
        let x: Vec<f64> = z.iter().map(|c| c.re).collect();
        let y: Vec<f64> = z.iter().map(|c| c.im).collect();
        let p0 = f.real_part(&x, &y);
        magnitude = magnitude.max(p0.abs());
        for k in 0..n {
            let hx = (bounds.x[k].1 - bounds.x[k].0) / (4.0 * res as f64);
            let hy = (bounds.y[k].1 - bounds.y[k].0) / (4.0 * res as f64);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += hx;
            xm[k] -= hx;
            let cx = (f.real_part(&xp, &y) - 2.0 * p0 + f.real_part(&xm, &y)) / (hx * hx);
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] += hy;
            ym[k] -= hy;
            let cy = (f.real_part(&x, &yp) - 2.0 * p0 + f.real_part(&x, &ym)) / (hy * hy);
            min_x = min_x.min(cx);
            max_y = max_y.max(cy);
        }
    }
    let h_min = bounds
        .x
        .iter()
        .chain(&bounds.y)
        .map(|(lo, hi)| (hi - lo) / (4.0 * res as f64))
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * magnitude.max(1.0) / (h_min * h_min);
    ConvexityReport {
        convex: min_x >= -tol && max_y <= tol,
        min_x_curvature: min_x,
        max_y_curvature: max_y,
        samples: points.len(),
    }
}

/// Closed-form complex minimum of the quadratic `½ vᵀMv − g·v + c` over ℂ³.
///
/// The real part has x-Hessian `Re M` and y-Hessian `−Re M`, so the
/// stationary point `M v = g` is a global saddle exactly when `Re M` is
/// positive definite; that is the certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSaddle {
    pub argmin: CVec3,
    pub value: Complex64,
}

pub fn quadratic_min(m: &CMat3, g: &CVec3, c: Complex64) -> Result<QuadraticSaddle> {
    let sym = (m + m.transpose()) * Complex64::from(0.5);
    let re: Matrix3<f64> = sym.map(|x| x.re);
    if Cholesky::new(re).is_none() {
        return Err(Error::NoSaddle(
            "real part of the quadratic form is not positive definite".to_string(),
        ));
    }
    let argmin = sym
        .lu()
        .solve(g)
        .ok_or_else(|| Error::NoSaddle("singular quadratic form".to_string()))?;
    let value = c - bdot(g, &argmin) * 0.5;
    Ok(QuadraticSaddle { argmin, value })
}
