//! Block statistics of the real parts of the six processes: mean angular
//! momentum, position and momentum spreads, and the temporal commutator.

use crate::geometry::{intrinsic_spin, Permutation};
use crate::process::{PhysicalParams, ProcessState};
use crate::types::{re, Complex64, RVec3};
use crate::{Error, Result};

/// Coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::domain(format!("unknown axis '{s}'"))),
        }
    }
}

/// Signed offset `w` of `n` from the nearest multiple of six, `|w| ≤ 3`.
/// Residues 4 and 5 map to −2 and −1; the tie at 3 stays +3.
pub fn signed_offset(n: usize) -> i32 {
    match n % 6 {
        r @ 0..=3 => r as i32,
        r => r as i32 - 6,
    }
}

/// Real positions and momenta of the six processes over one block
/// `n = 6q .. 6q+5`, plus the two following steps needed by the commutator.
#[derive(Debug, Clone)]
pub struct WindowSample {
    q: usize,
    permutation_id: u8,
    mass: f64,
    epsilon: f64,
    /// `r_n^j` for `n = 6q ..= 6q+7`.
    positions: Vec<[RVec3; 6]>,
    /// `p_n^j = m (r_{n+1}^j − r_n^j)/ε` for `n = 6q ..= 6q+6`.
    momenta: Vec<[RVec3; 6]>,
    /// Per-step mean over j of the positions (the basic trajectory).
    basic: Vec<RVec3>,
}

impl WindowSample {
    /// Number of consecutive states needed from `6q` on.
    pub const STATES_NEEDED: usize = 8;

    /// Extracts block `q` from a simulated trajectory.
    pub fn from_states(states: &[ProcessState], q: usize, params: &PhysicalParams) -> Result<Self> {
        let start = 6 * q;
        let first = states
            .iter()
            .position(|s| s.step_index == start)
            .ok_or_else(|| Error::domain(format!("trajectory does not contain step {start}")))?;
        let window = states
            .get(first..first + Self::STATES_NEEDED)
            .ok_or_else(|| {
                Error::domain(format!(
                    "incomplete block: need steps {start}..={}",
                    start + Self::STATES_NEEDED - 1
                ))
            })?;
        if window
            .iter()
            .enumerate()
            .any(|(i, st)| st.step_index != start + i)
        {
            return Err(Error::domain("trajectory steps are not consecutive"));
        }
        let positions: Vec<[RVec3; 6]> = window
            .iter()
            .map(|st| std::array::from_fn(|j| re(&st.z[j])))
            .collect();
        Ok(Self::from_positions(
            q,
            window[0].permutation_id,
            params,
            positions,
        ))
    }

    fn from_positions(
        q: usize,
        permutation_id: u8,
        params: &PhysicalParams,
        positions: Vec<[RVec3; 6]>,
    ) -> Self {
        let (m, eps) = (params.mass(), params.epsilon());
        let momenta = positions
            .windows(2)
            .map(|w| std::array::from_fn(|j| (w[1][j] - w[0][j]) * (m / eps)))
            .collect();
        let basic = positions
            .iter()
            .map(|r| r.iter().fold(RVec3::zeros(), |a, b| a + b) / 6.0)
            .collect();
        WindowSample {
            q,
            permutation_id,
            mass: m,
            epsilon: eps,
            positions,
            momenta,
            basic,
        }
    }

    pub fn block(&self) -> usize {
        self.q
    }

    pub fn permutation_id(&self) -> u8 {
        self.permutation_id
    }

    /// `r_n^j` with `k = n − 6q` in `0..=7`.
    pub fn position(&self, k: usize, j: usize) -> RVec3 {
        self.positions[k][j]
    }

    /// `p_n^j` with `k = n − 6q` in `0..=6`.
    pub fn momentum(&self, k: usize, j: usize) -> RVec3 {
        self.momenta[k][j]
    }

    /// Block mean position `r̃ = (1/6) Σ_n r̃_n`.
    pub fn r_tilde(&self) -> RVec3 {
        self.basic[..6].iter().fold(RVec3::zeros(), |a, b| a + b) / 6.0
    }

    /// Block velocity `ṽ = (r̃_{n+1} − r̃_n)/ε`, constant within the block.
    pub fn v_tilde(&self) -> RVec3 {
        (self.basic[1] - self.basic[0]) / self.epsilon
    }

    fn position_deviation(&self, k: usize, j: usize) -> RVec3 {
        self.positions[k][j] - self.basic[k]
    }

    fn momentum_deviation(&self, k: usize, j: usize) -> RVec3 {
        let mean = (self.basic[k + 1] - self.basic[k]) * (self.mass / self.epsilon);
        self.momenta[k][j] - mean
    }

    /// RMS over j of the position deviation from the per-step mean.
    pub fn position_spread(&self, k: usize, axis: Axis) -> f64 {
        rms((0..6).map(|j| self.position_deviation(k, j)[axis.index()]))
    }

    /// RMS over j of the momentum deviation from the per-step mean.
    pub fn momentum_spread(&self, k: usize, axis: Axis) -> f64 {
        rms((0..6).map(|j| self.momentum_deviation(k, j)[axis.index()]))
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    (sum / count as f64).sqrt()
}

/// Mean angular momentum of the block, `σ = r̃ ∧ mṽ + (ℏ/16) Σ uʲ ∧ suʲ`.
pub fn mean_angular_momentum(
    sample: &WindowSample,
    s: &Permutation,
    params: &PhysicalParams,
) -> Result<RVec3> {
    if sample.permutation_id != s.id() {
        return Err(Error::domain(format!(
            "sample was generated with permutation {}, not {}",
            sample.permutation_id,
            s.id()
        )));
    }
    let orbital = sample.r_tilde().cross(&(sample.v_tilde() * params.mass()));
    Ok(orbital + intrinsic_spin(s, params))
}

/// Position spread at step `n` along `axis`, `√((1/6) Σⱼ (c·(sⁿuʲ − uʲ))²)`
/// with `c = √(3ℏε/8m)`.
pub fn position_spread(n: usize, axis: Axis, s: &Permutation, params: &PhysicalParams) -> f64 {
    let c = params.offset_scale();
    rms((0..6).map(|j| c * s.offset(j, n)[axis.index()] as f64))
}

/// Momentum spread at step `n` along `axis`, `√((1/6) Σⱼ (mc/ε·(sⁿ⁺¹uʲ − sⁿuʲ))²)`.
pub fn momentum_spread(n: usize, axis: Axis, s: &Permutation, params: &PhysicalParams) -> f64 {
    let scale = params.mass() * params.offset_scale() / params.epsilon();
    rms((0..6).map(|j| scale * s.hop(j, n)[axis.index()] as f64))
}

/// `Δx · Δp_x` at step `n`.
pub fn heisenberg_product(n: usize, s: &Permutation, params: &PhysicalParams) -> f64 {
    position_spread(n, Axis::X, s, params) * momentum_spread(n, Axis::X, s, params)
}

/// `(ℏ/2)·√|w|`.
pub fn heisenberg_closed_form(n: usize, params: &PhysicalParams) -> f64 {
    0.5 * params.hbar() * (signed_offset(n).unsigned_abs() as f64).sqrt()
}

/// `E_{n,j} (1+i)² [ p_{n+1} r_n − r_{n+1} p_n ]` over the block, using the
/// deviations of positions and momenta from their per-step means over j.
///
/// Centering removes the drift of the basic trajectory, which otherwise adds
/// a classical `O(ε)` term; see [`commutator_expectation_uncentered`].
pub fn commutator_expectation(pos_axis: Axis, mom_axis: Axis, sample: &WindowSample) -> Complex64 {
    let (a, b) = (pos_axis.index(), mom_axis.index());
    block_commutator(|k, j| {
        let (r0, r1) = (sample.position_deviation(k, j), sample.position_deviation(k + 1, j));
        let (p0, p1) = (sample.momentum_deviation(k, j), sample.momentum_deviation(k + 1, j));
        p1[b] * r0[a] - r1[a] * p0[b]
    })
}

/// Same average as [`commutator_expectation`] on the raw positions and
/// momenta, including the basic-trajectory drift.
pub fn commutator_expectation_uncentered(
    pos_axis: Axis,
    mom_axis: Axis,
    sample: &WindowSample,
) -> Complex64 {
    let (a, b) = (pos_axis.index(), mom_axis.index());
    block_commutator(|k, j| {
        let (r0, r1) = (sample.positions[k][j], sample.positions[k + 1][j]);
        let (p0, p1) = (sample.momenta[k][j], sample.momenta[k + 1][j]);
        p1[b] * r0[a] - r1[a] * p0[b]
    })
}

fn block_commutator(term: impl Fn(usize, usize) -> f64) -> Complex64 {
    let mut sum = 0.0;
    for k in 0..6 {
        for j in 0..6 {
            sum += term(k, j);
        }
    }
    // (1+i)² = 2i
    Complex64::new(0.0, 2.0 * sum / 36.0)
}
