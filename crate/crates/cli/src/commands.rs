//! One function per subcommand. Each builds a [`Report`] from a validated
//! [`RunConfig`]; nothing here writes to the terminal.

use hexaproc::action::{
    free_gaussian_width, hj_residual, recurrence_convergence, recurrence_evolve, riccati_reference,
    schrodinger_movie, schrodinger_reference, to_wavefunction, Grid1D, Potential, QuadraticAction, WaveField,
};
use hexaproc::bohm::{complex_velocity, bohm_velocity, continuity_check, de_broglie_epsilon, BohmMovie, TrajectoryEnsemble};
use hexaproc::dynkin::{lemma_convergence, TestFunction};
use hexaproc::geometry::{intrinsic_spin, spin_permutations, wedge_sum};
use hexaproc::order::fitted_order;
use hexaproc::process::simulate;
use hexaproc::statistics::{
    commutator_expectation, heisenberg_closed_form, heisenberg_product, momentum_spread, position_spread,
    signed_offset, Axis, WindowSample,
};
use hexaproc::{CVec3, Complex64, Permutation, PhysicalParams, VelocityField};
use thiserror::Error;

use crate::config::{ConfigError, PotentialKind, RunConfig, VelocityKind};
use crate::output::{fmt_complex, fmt_f64, Cell, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{source}")]
    Numeric {
        #[from]
        source: hexaproc::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
        }
    }
}

type Outcome = Result<Report, CliError>;

pub fn run(command: &str, cfg: &RunConfig) -> Outcome {
    match command {
        "spin-table" => spin_table(cfg),
        "simulate" => simulate_cmd(cfg),
        "heisenberg" => heisenberg(cfg),
        "commutator" => commutator(cfg),
        "dynkin-convergence" => dynkin_convergence(cfg),
        "hj-check" => hj_check(cfg),
        "action-converge" => action_converge(cfg),
        "schrodinger" => schrodinger(cfg),
        "bohm" => bohm(cfg),
        "epsilon" => epsilon(cfg),
        other => unreachable!("unknown command {other}"),
    }
}

fn params(cfg: &RunConfig) -> Result<PhysicalParams, CliError> {
    Ok(PhysicalParams::new(cfg.hbar, cfg.mass, cfg.epsilon)?)
}

fn permutation(cfg: &RunConfig) -> Result<Permutation, CliError> {
    Ok(Permutation::by_id(cfg.perm)?)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn velocity(cfg: &RunConfig) -> VelocityField {
    let v = cfg.speed;
    match cfg.velocity {
        VelocityKind::Zero => VelocityField::zero(),
        VelocityKind::Constant => VelocityField::constant(CVec3::new(c(v), c(0.0), c(0.0))),
        VelocityKind::Wave => {
            VelocityField::new("wave", move |t: f64| CVec3::new(c(v * t.sin()), c(v * t.cos()), c(0.0)))
        }
    }
}

fn potential(cfg: &RunConfig) -> Potential {
    match cfg.potential {
        PotentialKind::Free => Potential::free(),
        PotentialKind::Linear => Potential::linear(0.0, [cfg.stiffness, 0.0, 0.0]),
        PotentialKind::Harmonic => Potential::harmonic_1d(cfg.stiffness),
    }
}

fn start_point(cfg: &RunConfig) -> CVec3 {
    CVec3::new(c(cfg.x0), c(0.0), c(0.0))
}

fn grid(cfg: &RunConfig) -> Result<Grid1D, CliError> {
    Ok(Grid1D::new(cfg.grid_min, cfg.grid_max, cfg.grid_n)?)
}

fn initial_packet(cfg: &RunConfig) -> QuadraticAction {
    QuadraticAction::gaussian_1d(cfg.sigma0, cfg.x0, cfg.p0, cfg.hbar)
}

fn signs(v: [i32; 3]) -> String {
    v.iter().map(|x| if *x < 0 { '-' } else { '+' }).collect()
}

fn spin_table(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let mut r = Report::new(
        "spin-table",
        &["id", "excluded", "wedge_x", "wedge_y", "wedge_z", "spin_x", "spin_y", "spin_z", "cycle"],
    );
    for s in spin_permutations() {
        let w = wedge_sum(s);
        let spin = intrinsic_spin(s, &p);
        let [a, b] = s.excluded_pair();
        let cycle: Vec<String> = s.cycle().iter().map(|v| signs(v.coords())).collect();
        r.push(vec![
            s.id().into(),
            format!("{}/{}", signs(a.coords()), signs(b.coords())).into(),
            w[0].into(),
            w[1].into(),
            w[2].into(),
            spin[0].into(),
            spin[1].into(),
            spin[2].into(),
            cycle.join(" ").into(),
        ]);
    }
    r.note("rows", spin_permutations().len().to_string());
    Ok(r)
}

fn simulate_cmd(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let s = permutation(cfg)?;
    let v = velocity(cfg);
    let states = simulate(start_point(cfg), &s, &v, &p, cfg.steps);
    let mut r = Report::new(
        "simulate",
        &["n", "t", "process", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z", "residual"],
    );
    let mut worst = 0.0f64;
    for st in &states {
        let residual = st.offset_identity_residual(&s, &p);
        worst = worst.max(residual);
        let t = st.time(&p);
        let rows = std::iter::once(("basic".to_string(), st.z_basic))
            .chain(st.z.iter().enumerate().map(|(j, z)| ((j + 1).to_string(), *z)));
        for (name, z) in rows {
            r.push(vec![
                st.step_index.into(),
                t.into(),
                name.into(),
                z[0].re.into(),
                z[0].im.into(),
                z[1].re.into(),
                z[1].im.into(),
                z[2].re.into(),
                z[2].im.into(),
                residual.into(),
            ]);
        }
    }
    r.note("max_residual", fmt_f64(worst));
    Ok(r)
}

fn heisenberg(cfg: &RunConfig) -> Outcome {
    let mut r = Report::new(
        "heisenberg",
        &["epsilon", "perm", "n", "w", "dx", "dp", "product", "closed_form"],
    );
    let mut worst = 0.0f64;
    for &eps in &cfg.epsilons {
        let p = PhysicalParams::new(cfg.hbar, cfg.mass, eps)?;
        for s in spin_permutations() {
            for n in 0..12 {
                let product = heisenberg_product(n, s, &p);
                let closed = heisenberg_closed_form(n, &p);
                if closed > 0.0 {
                    worst = worst.max((product / closed - 1.0).abs());
                }
                r.push(vec![
                    eps.into(),
                    s.id().into(),
                    n.into(),
                    signed_offset(n).into(),
                    position_spread(n, Axis::X, s, &p).into(),
                    momentum_spread(n, Axis::X, s, &p).into(),
                    product.into(),
                    closed.into(),
                ]);
            }
        }
    }
    r.note("max_relative_error", fmt_f64(worst));
    Ok(r)
}

fn commutator(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let s = permutation(cfg)?;
    let q = cfg.blocks;
    let states = simulate(start_point(cfg), &s, &velocity(cfg), &p, 6 * q + WindowSample::STATES_NEEDED);
    let w = WindowSample::from_states(&states, q, &p)?;
    let mut r = Report::new("commutator", &["position", "momentum", "re", "im"]);
    for a in Axis::ALL {
        for b in Axis::ALL {
            let value = commutator_expectation(a, b, &w);
            r.push(vec![a.name().into(), b.name().into(), value.re.into(), value.im.into()]);
        }
    }
    // round-off below 1e-12·ℏ is reported as zero
    let snap = |x: f64| if x.abs() < 1e-12 * cfg.hbar { 0.0 } else { x };
    let summary = |a, b| {
        let z = commutator_expectation(a, b, &w);
        fmt_complex(Complex64::new(snap(z.re), snap(z.im)))
    };
    r.note("value", summary(Axis::X, Axis::X));
    r.note("mixed_yx", summary(Axis::Y, Axis::X));
    Ok(r)
}

fn dynkin_convergence(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let s = permutation(cfg)?;
    let rows = lemma_convergence(
        &TestFunction::z1_squared(),
        &s,
        &velocity(cfg),
        &p,
        start_point(cfg),
        cfg.t_final,
        &cfg.ladder,
    )?;
    let mut r = Report::new("dynkin-convergence", &["epsilon", "error", "order"]);
    for row in &rows {
        r.push(vec![
            row.epsilon.into(),
            row.error.into(),
            order_cell(row.order),
        ]);
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    if rows.len() >= 2 && errors.iter().all(|e| *e > 0.0) {
        r.note("fitted_order", fmt_f64(fitted_order(&cfg.ladder, &errors)));
    }
    Ok(r)
}

/// Blank on the first rung and where the error vanished exactly.
fn order_cell(order: Option<f64>) -> Cell {
    match order {
        Some(o) if o.is_finite() => Cell::Float(o),
        _ => Cell::Text(String::new()),
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut out) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

/// Halton point `i` in the box `[-2, 2]` (real parts) × `[-1, 1]` (imaginary).
fn probe(i: u64) -> CVec3 {
    let u = |b: u64| 4.0 * radical_inverse(i, b) - 2.0;
    CVec3::new(
        Complex64::new(u(2), 0.5 * u(3)),
        Complex64::new(u(5), 0.5 * u(7)),
        Complex64::new(u(11), 0.5 * u(13)),
    )
}

fn hj_check(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let pot = potential(cfg);
    let s0 = initial_packet(cfg);
    let flow = |t: f64| riccati_reference(&s0, &pot, &p, t, 2000);
    let h = 1e-3;
    let mut r = Report::new("hj-check", &["probe", "t", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z", "residual"]);
    let mut worst = 0.0f64;
    for i in 0..cfg.steps {
        let z = probe(cfg.seed + i as u64 + 1);
        let t = cfg.t_final * (i + 1) as f64 / (cfg.steps + 1) as f64;
        let res = hj_residual(flow, &pot, &z, t.max(2.0 * h), &p, h).norm();
        worst = worst.max(res);
        r.push(vec![
            i.into(),
            t.into(),
            z[0].re.into(),
            z[0].im.into(),
            z[1].re.into(),
            z[1].im.into(),
            z[2].re.into(),
            z[2].im.into(),
            res.into(),
        ]);
    }
    r.note("max_abs", fmt_f64(worst));
    Ok(r)
}

fn action_converge(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let s = permutation(cfg)?;
    let pot = potential(cfg);
    let s0 = initial_packet(cfg);
    let g = grid(cfg)?;
    let rows = recurrence_convergence(&s0, &s, &pot, &p, cfg.t_final, &cfg.ladder)?;
    let psi0 = WaveField::gaussian(g, cfg.sigma0, cfg.x0, cfg.p0, cfg.hbar);
    let reference = schrodinger_reference(&psi0, &pot, &p, cfg.dt, cfg.time_steps()?)?;
    let mut r = Report::new("action-converge", &["epsilon", "blocks", "coefficient_error", "order", "psi_linf"]);
    for row in &rows {
        let pe = p.with_epsilon(row.epsilon)?;
        let evolved = recurrence_evolve(&s0, &s, &pot, &pe, row.blocks)?;
        let linf = reference.aligned_linf_distance(&to_wavefunction(&evolved, &g, &pe));
        r.push(vec![
            row.epsilon.into(),
            row.blocks.into(),
            row.coefficient_error.into(),
            order_cell(row.order),
            linf.into(),
        ]);
    }
    if rows.len() >= 2 {
        let errors: Vec<f64> = rows.iter().map(|r| r.coefficient_error).collect();
        r.note("fitted_order", fmt_f64(fitted_order(&cfg.ladder, &errors)));
    }
    r.note("boundary_warning", reference.diagnostics.boundary_warning.to_string());
    Ok(r)
}

fn schrodinger(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let g = grid(cfg)?;
    let n_steps = cfg.time_steps()?;
    if n_steps % cfg.snapshots != 0 {
        return Err(ConfigError::Key {
            key: "snapshots".to_string(),
            message: format!("must divide the {n_steps} time steps"),
        }
        .into());
    }
    let psi0 = WaveField::gaussian(g, cfg.sigma0, cfg.x0, cfg.p0, cfg.hbar);
    let movie = schrodinger_movie(&psi0, &potential(cfg), &p, cfg.dt, n_steps, n_steps / cfg.snapshots)?;
    let last = movie.last().expect("movie has the initial snapshot");
    let mut r = Report::new("schrodinger", &["t", "x", "re", "im", "density"]);
    for frame in &movie {
        for (x, psi) in g.nodes().zip(&frame.psi) {
            r.push(vec![frame.t.into(), x.into(), psi.re.into(), psi.im.into(), psi.norm_sqr().into()]);
        }
    }
    let (mean, var) = last.position_moments();
    r.note("norm_drift", fmt_f64(last.norm_sqr() - psi0.norm_sqr()));
    r.note("mean", fmt_f64(mean));
    r.note("width", fmt_f64(var.sqrt()));
    if cfg.potential == PotentialKind::Free {
        r.note("width_expected", fmt_f64(free_gaussian_width(cfg.sigma0, last.t, &p)));
    }
    r.note("boundary_amplitude", fmt_f64(last.diagnostics.boundary_amplitude));
    r.note("boundary_warning", last.diagnostics.boundary_warning.to_string());
    Ok(r)
}

fn bohm(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let g = grid(cfg)?;
    let psi0 = WaveField::gaussian(g, cfg.sigma0, cfg.x0, cfg.p0, cfg.hbar);
    let movie = schrodinger_movie(&psi0, &potential(cfg), &p, cfg.dt, cfg.time_steps()?, 1)?;
    let bohm_movie = BohmMovie::new(&movie)?;

    let mut ensemble = TrajectoryEnsemble::sample(&psi0, cfg.samples, cfg.seed, cfg.bins)?;
    ensemble.propagate(&bohm_movie, &p);
    let t_check = movie.last().expect("non-empty movie").t;
    let l1 = continuity_check(&ensemble, &movie, t_check, cfg.bins)?;

    let mut shown = TrajectoryEnsemble::sample(&psi0, cfg.trajectories, cfg.seed, cfg.bins)?;
    shown.propagate(&bohm_movie, &p);
    let mut r = Report::new("bohm", &["trajectory", "t", "x"]);
    for (i, path) in shown.paths.iter().enumerate() {
        for (t, x) in shown.times.iter().zip(&path.positions) {
            r.push(vec![i.into(), (*t).into(), (*x).into()]);
        }
    }

    // largest |Re 𝒱 − v_Bohm| over the initial samples
    let mut split = 0.0f64;
    for &x in &ensemble.initial {
        let v = bohm_velocity(&psi0, x, &p)?;
        let w = complex_velocity(&psi0, x, &p)?;
        split = split.max((w.re - v).abs());
    }

    r.note("t_check", fmt_f64(t_check));
    r.note("l1", fmt_f64(l1));
    r.note("noise_floor", fmt_f64(ensemble.noise_floor));
    r.note("truncated", ensemble.truncated().to_string());
    r.note("crossings", ensemble.crossing_pairs().len().to_string());
    r.note("velocity_split", fmt_f64(split));
    Ok(r)
}

fn epsilon(cfg: &RunConfig) -> Outcome {
    let eps = de_broglie_epsilon(cfg.speed, cfg.mass, cfg.h)?;
    let mut r = Report::new("epsilon", &["mass", "speed", "h", "epsilon"]);
    r.push(vec![cfg.mass.into(), cfg.speed.into(), cfg.h.into(), eps.into()]);
    r.note("epsilon", fmt_f64(eps));
    Ok(r)
}
