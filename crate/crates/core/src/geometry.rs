//! Cube vertices, the eight hexagonal spin permutations and their wedge sums.
//!
//! A spin permutation is a cyclic walk along six cube edges that visits every
//! vertex except one antipodal pair; it is the rotation of the cube about the
//! diagonal through the excluded pair. Each diagonal carries two orientations,
//! giving eight permutations in total.
//!
//! Vertex order used throughout: lexicographic with `-1 < +1`, i.e.
//! `(-1,-1,-1), (-1,-1,1), (-1,1,-1), (-1,1,1), (1,-1,-1), ...`.

use std::fmt;
use std::sync::OnceLock;

use crate::process::PhysicalParams;
use crate::types::RVec3;
use crate::{Error, Result};

/// A cube vertex with coordinates in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex([i32; 3]);

impl Vertex {
    pub fn new(coords: [i32; 3]) -> Result<Self> {
        if coords.iter().all(|c| *c == 1 || *c == -1) {
            Ok(Vertex(coords))
        } else {
            Err(Error::domain(format!(
                "vertex coordinates must be ±1, got {coords:?}"
            )))
        }
    }

    pub fn coords(&self) -> [i32; 3] {
        self.0
    }

    pub fn antipode(&self) -> Vertex {
        Vertex(self.0.map(|c| -c))
    }

    /// Cube-edge adjacency: exactly one coordinate differs.
    pub fn is_adjacent(&self, other: &Vertex) -> bool {
        self.0.iter().zip(other.0.iter()).filter(|(a, b)| a != b).count() == 1
    }

    pub fn to_real(&self) -> RVec3 {
        RVec3::new(self.0[0] as f64, self.0[1] as f64, self.0[2] as f64)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// Integer 3-vector difference `a - b`.
pub fn diff(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Integer cross product.
pub fn cross(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [i32; 3], b: [i32; 3]) -> i32 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The eight vertices of the cube `{-1,1}³` in lexicographic order.
pub fn cube_vertices() -> Vec<Vertex> {
    let signs = [-1, 1];
    let mut out = Vec::with_capacity(8);
    for &x in &signs {
        for &y in &signs {
            for &z in &signs {
                out.push(Vertex([x, y, z]));
            }
        }
    }
    out
}

/// One of the eight spin permutations: a directed hexagonal cycle of cube
/// vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    id: u8,
    cycle: [Vertex; 6],
    excluded: [Vertex; 2],
}

impl Permutation {
    /// Canonical label in `1..=8`.
    pub fn id(&self) -> u8 {
        self.id
    }

    /// Cycle vertices `u¹..u⁶`, starting at the lexicographically smallest.
    pub fn cycle(&self) -> &[Vertex; 6] {
        &self.cycle
    }

    /// The antipodal pair not visited by the cycle; the vertex with positive
    /// first coordinate comes first.
    pub fn excluded_pair(&self) -> [Vertex; 2] {
        self.excluded
    }

    /// Looks up a permutation by canonical id.
    pub fn by_id(id: u8) -> Result<Permutation> {
        spin_permutations()
            .iter()
            .find(|p| p.id == id)
            .cloned()
            .ok_or_else(|| Error::domain(format!("permutation id must be in 1..=8, got {id}")))
    }

    /// The reference cycle `s₁`, id 1.
    pub fn s1() -> Permutation {
        spin_permutations()[0].clone()
    }

    /// The same hexagon traversed in the opposite direction.
    pub fn reversed(&self) -> Permutation {
        let mut rev = self.cycle;
        rev.reverse();
        let key = canonical_rotation(&rev);
        spin_permutations()
            .iter()
            .find(|p| p.cycle == key)
            .cloned()
            .expect("reversal of a spin permutation is a spin permutation")
    }

    /// `s^k u^j` as raw integer coordinates, with `j` a 0-based cycle index.
    #[inline]
    pub fn power_at(&self, j: usize, k: usize) -> [i32; 3] {
        self.cycle[(j + k) % 6].0
    }

    /// Offset `sⁿuʲ − uʲ` (0-based `j`).
    #[inline]
    pub fn offset(&self, j: usize, n: usize) -> [i32; 3] {
        diff(self.power_at(j, n), self.power_at(j, 0))
    }

    /// Hop `sⁿ⁺¹uʲ − sⁿuʲ` (0-based `j`).
    #[inline]
    pub fn hop(&self, j: usize, n: usize) -> [i32; 3] {
        diff(self.power_at(j, n + 1), self.power_at(j, n))
    }

    /// Position of `u` in the cycle.
    pub fn index_of(&self, u: &Vertex) -> Option<usize> {
        self.cycle.iter().position(|v| v == u)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.cycle.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn canonical_rotation(cycle: &[Vertex; 6]) -> [Vertex; 6] {
    let start = (0..6).min_by_key(|&i| cycle[i]).unwrap();
    std::array::from_fn(|i| cycle[(start + i) % 6])
}

fn paper_s1() -> [Vertex; 6] {
    [
        Vertex([-1, -1, -1]),
        Vertex([-1, -1, 1]),
        Vertex([1, -1, 1]),
        Vertex([1, 1, 1]),
        Vertex([1, 1, -1]),
        Vertex([-1, 1, -1]),
    ]
}

fn build_spin_permutations() -> Vec<Permutation> {
    let verts = cube_vertices();
    // (positive excluded vertex, orientation sign, cycle)
    let mut found: Vec<(Vertex, i32, [Vertex; 6])> = Vec::with_capacity(8);
    for &plus in verts.iter().filter(|v| v.0[0] == 1) {
        let minus = plus.antipode();
        let ring: Vec<Vertex> = verts
            .iter()
            .copied()
            .filter(|v| *v != plus && *v != minus)
            .collect();
        let start = ring[0];
        let first_steps: Vec<Vertex> = ring
            .iter()
            .copied()
            .filter(|v| v.is_adjacent(&start))
            .collect();
        debug_assert_eq!(first_steps.len(), 2);
        for next in first_steps {
            let mut cycle = vec![start, next];
            while cycle.len() < 6 {
                let cur = *cycle.last().unwrap();
                let prev = cycle[cycle.len() - 2];
                let step = ring
                    .iter()
                    .copied()
                    .find(|v| v.is_adjacent(&cur) && *v != prev)
                    .expect("hexagon ring is 2-regular");
                cycle.push(step);
            }
            let cycle: [Vertex; 6] = cycle.try_into().unwrap();
            let orient = dot(wedge_of_cycle(&cycle), plus.0).signum();
            found.push((plus, orient, cycle));
        }
    }
    let s1 = paper_s1();
    found.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let s1_pos = found
        .iter()
        .position(|f| f.2 == s1)
        .expect("s1 is among the hexagons");
    let first = found.remove(s1_pos);
    found.insert(0, first);
    found
        .into_iter()
        .enumerate()
        .map(|(i, (plus, _, cycle))| Permutation {
            id: (i + 1) as u8,
            cycle,
            excluded: [plus, plus.antipode()],
        })
        .collect()
}

/// The eight spin permutations in canonical id order (`s₁` first; the rest
/// by positive excluded vertex, then positive orientation before negative).
pub fn spin_permutations() -> &'static [Permutation] {
    static PERMS: OnceLock<Vec<Permutation>> = OnceLock::new();
    PERMS.get_or_init(build_spin_permutations)
}

/// Owned copy of [`spin_permutations`].
pub fn enumerate_spin_permutations() -> Vec<Permutation> {
    spin_permutations().to_vec()
}

/// k-th successor of `u` along the cycle of `s`.
pub fn apply(s: &Permutation, u: &Vertex, k: usize) -> Result<Vertex> {
    let idx = s
        .index_of(u)
        .ok_or_else(|| Error::domain(format!("vertex {u} is not in permutation {}", s.id)))?;
    Ok(s.cycle[(idx + k) % 6])
}

fn wedge_of_cycle(cycle: &[Vertex; 6]) -> [i32; 3] {
    (0..6).fold([0; 3], |acc, j| {
        let w = cross(cycle[j].0, cycle[(j + 1) % 6].0);
        [acc[0] + w[0], acc[1] + w[1], acc[2] + w[2]]
    })
}

/// `Σⱼ uʲ ∧ s uʲ`, exact.
pub fn wedge_sum(s: &Permutation) -> [i32; 3] {
    wedge_of_cycle(&s.cycle)
}

/// Mean intrinsic angular momentum `(ℏ/16) Σⱼ uʲ ∧ s uʲ`.
pub fn intrinsic_spin(s: &Permutation, params: &PhysicalParams) -> RVec3 {
    let w = wedge_sum(s);
    RVec3::new(w[0] as f64, w[1] as f64, w[2] as f64) * (params.hbar() / 16.0)
}

/// `Σⱼ (sⁿuʲ − uʲ)_k (sⁿuʲ − uʲ)_l` as an exact integer matrix.
///
/// Dividing by six gives the offset covariance used in the averaging
/// identity; at `n ≡ 5 (mod 6)` it equals `8·δ_kl`.
pub fn offset_second_moment(s: &Permutation, n: usize) -> [[i32; 3]; 3] {
    let mut m = [[0; 3]; 3];
    for j in 0..6 {
        let d = s.offset(j, n);
        for k in 0..3 {
            for l in 0..3 {
                m[k][l] += d[k] * d[l];
            }
        }
    }
    m
}
