//! The 23×7 gridworld: a fixed mean-value field observed through a
//! column-wise Gaussian noise gradient, with transient mirror perturbations.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub const WIDTH: usize = 23;
pub const HEIGHT: usize = 7;
pub const N_ZONES: usize = 5;
pub const PATCH_LEN: usize = 8;
pub const N_ACTIONS: usize = 5;
pub const WINDOW_LEN: usize = 15;

/// Neighbor offsets `(dcol, drow)` in patch order N, NE, E, SE, S, SW, W, NW.
/// Row 0 is the top edge.
pub const NEIGHBORS: [(i32, i32); PATCH_LEN] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseGradient {
    pub sigma_left: f64,
    pub sigma_right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    mean_field: Vec<f64>,
    sigma_left: f64,
    sigma_right: f64,
    world_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentPos {
    pub col: usize,
    pub row: usize,
}

impl AgentPos {
    pub const CENTER: AgentPos = AgentPos {
        col: WIDTH / 2,
        row: HEIGHT / 2,
    };

    pub fn new(col: usize, row: usize) -> Result<Self> {
        if col >= WIDTH {
            return Err(Error::Bounds {
                what: "column",
                value: col,
                limit: WIDTH - 1,
            });
        }
        if row >= HEIGHT {
            return Err(Error::Bounds {
                what: "row",
                value: row,
                limit: HEIGHT - 1,
            });
        }
        Ok(AgentPos { col, row })
    }
}

pub type Observation = [f64; PATCH_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; N_ACTIONS] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ];

    pub fn from_index(i: usize) -> Result<Action> {
        Action::ALL.get(i).copied().ok_or(Error::Bounds {
            what: "action index",
            value: i,
            limit: N_ACTIONS - 1,
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZoneId(pub usize);

/// Perturbation windows for one episode, half-open `[start, end)`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerturbationSchedule {
    pub windows: Vec<(usize, usize)>,
    pub window_len: usize,
}

impl PerturbationSchedule {
    pub fn n_p(&self) -> usize {
        self.windows.len()
    }

    pub fn is_perturbed(&self, step: usize) -> bool {
        self.windows.iter().any(|&(s, e)| step >= s && step < e)
    }

    pub fn perturbed_steps(&self) -> usize {
        self.windows.iter().map(|&(s, e)| e - s).sum()
    }
}

impl GridWorld {
    pub fn new(gradient: NoiseGradient, world_seed: u64) -> Result<Self> {
        let NoiseGradient {
            sigma_left,
            sigma_right,
        } = gradient;
        if !(sigma_left >= 0.0 && sigma_right >= 0.0) || !sigma_left.is_finite() || !sigma_right.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise std must be finite and non-negative (sigma_left={sigma_left}, sigma_right={sigma_right})"
            )));
        }
        // Row-major uniform field; depends only on the world seed.
        let mut stream = rng::stream(rng::derive_seed("mean-field", &[world_seed]));
        let mean_field: Vec<f64> = (0..WIDTH * HEIGHT).map(|_| stream.random::<f64>()).collect();
        Ok(GridWorld {
            mean_field,
            sigma_left,
            sigma_right,
            world_seed,
        })
    }

    pub fn world_seed(&self) -> u64 {
        self.world_seed
    }

    pub fn gradient(&self) -> NoiseGradient {
        NoiseGradient {
            sigma_left: self.sigma_left,
            sigma_right: self.sigma_right,
        }
    }

    pub fn mean_field(&self) -> &[f64] {
        &self.mean_field
    }

    pub fn mean_value(&self, pos: AgentPos) -> f64 {
        self.mean_field[pos.row * WIDTH + pos.col]
    }

    fn sigma_unchecked(&self, col: usize) -> f64 {
        self.sigma_left + (self.sigma_right - self.sigma_left) * col as f64 / (WIDTH - 1) as f64
    }

    /// Noise std for a column. A perturbed world mirrors the noise map
    /// left-right; the mean field is never touched.
    pub fn column_sigma(&self, col: usize, perturbed: bool) -> Result<f64> {
        if col >= WIDTH {
            return Err(Error::Bounds {
                what: "column",
                value: col,
                limit: WIDTH - 1,
            });
        }
        let src = if perturbed { WIDTH - 1 - col } else { col };
        Ok(self.sigma_unchecked(src))
    }

    /// Samples the 8-neighbor patch. Always consumes exactly eight normal
    /// draws; out-of-bounds slots read 0 and discard their draw.
    pub fn observe(&self, pos: AgentPos, perturbed: bool, stream: &mut Stream) -> Observation {
        let mut patch = [0.0; PATCH_LEN];
        for (slot, &(dc, dr)) in patch.iter_mut().zip(NEIGHBORS.iter()) {
            let eps: f64 = StandardNormal.sample(stream);
            let c = pos.col as i32 + dc;
            let r = pos.row as i32 + dr;
            if c < 0 || r < 0 || c >= WIDTH as i32 || r >= HEIGHT as i32 {
                continue;
            }
            let (c, r) = (c as usize, r as usize);
            let src = if perturbed { WIDTH - 1 - c } else { c };
            *slot = self.mean_field[r * WIDTH + c] + self.sigma_unchecked(src) * eps;
        }
        patch
    }
}

pub fn step_action(pos: AgentPos, action: Action) -> AgentPos {
    let AgentPos { col, row } = pos;
    match action {
        Action::Up => AgentPos {
            col,
            row: row.saturating_sub(1),
        },
        Action::Down => AgentPos {
            col,
            row: (row + 1).min(HEIGHT - 1),
        },
        Action::Left => AgentPos {
            col: col.saturating_sub(1),
            row,
        },
        Action::Right => AgentPos {
            col: (col + 1).min(WIDTH - 1),
            row,
        },
        Action::Stay => pos,
    }
}

/// Places `n_p` non-overlapping windows uniformly over all feasible
/// placements (abutting allowed).
///
/// Placements are in bijection with `n_p`-subsets of `free + n_p` slots,
/// where `free = episode_len - n_p * window_len`: the i-th chosen slot `c_i`
/// (sorted) maps to start `c_i - i + i * window_len`.
pub fn schedule_perturbations(
    n_p: usize,
    episode_len: usize,
    window_len: usize,
    stream: &mut Stream,
) -> Result<PerturbationSchedule> {
    if window_len == 0 {
        return Err(Error::InvalidConfig("perturbation window length must be positive".into()));
    }
    let needed = n_p
        .checked_mul(window_len)
        .filter(|&n| n <= episode_len)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{n_p} windows of {window_len} steps do not fit in an episode of {episode_len} steps"
            ))
        })?;
    if n_p == 0 {
        return Ok(PerturbationSchedule {
            windows: Vec::new(),
            window_len,
        });
    }
    let slots = episode_len - needed + n_p;
    let mut chosen = index::sample(stream, slots, n_p).into_vec();
    chosen.sort_unstable();
    let windows = chosen
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let start = c - i + i * window_len;
            (start, start + window_len)
        })
        .collect();
    Ok(PerturbationSchedule {
        windows,
        window_len,
    })
}

pub fn zone_of(col: usize) -> Result<ZoneId> {
    if col >= WIDTH {
        return Err(Error::Bounds {
            what: "column",
            value: col,
            limit: WIDTH - 1,
        });
    }
    Ok(ZoneId(col * N_ZONES / WIDTH))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_world() -> GridWorld {
        GridWorld::new(
            NoiseGradient {
                sigma_left: 0.20,
                sigma_right: 0.10,
            },
            3,
        )
        .unwrap()
    }

    fn flat_world(value: f64) -> GridWorld {
        let mut w = GridWorld::new(
            NoiseGradient {
                sigma_left: 0.0,
                sigma_right: 0.0,
            },
            0,
        )
        .unwrap();
        w.mean_field.iter_mut().for_each(|v| *v = value);
        w
    }

    #[test]
    fn sigma_gradient_endpoints_and_midpoint() {
        let w = paper_world();
        assert!((w.column_sigma(0, false).unwrap() - 0.20).abs() < 1e-12);
        assert!((w.column_sigma(22, false).unwrap() - 0.10).abs() < 1e-12);
        assert!((w.column_sigma(11, false).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn stage_one_gradient_col5() {
        let w = GridWorld::new(
            NoiseGradient {
                sigma_left: 0.60,
                sigma_right: 0.03,
            },
            0,
        )
        .unwrap();
        let expected = 0.60 + (0.03 - 0.60) * 5.0 / 22.0;
        assert!((w.column_sigma(5, false).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.4705).abs() < 1e-4);
    }

    #[test]
    fn negative_sigma_rejected() {
        let err = GridWorld::new(
            NoiseGradient {
                sigma_left: -0.1,
                sigma_right: 0.1,
            },
            0,
        );
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn same_seed_same_world() {
        let a = paper_world();
        let b = paper_world();
        assert_eq!(a.mean_field, b.mean_field);
        assert!(a.mean_field.iter().all(|v| (0.0..=1.0).contains(v)));
        let c = GridWorld::new(a.gradient(), 4).unwrap();
        assert_ne!(a.mean_field, c.mean_field);
    }

    #[test]
    fn mirrored_sigma() {
        let w = paper_world();
        assert!((w.column_sigma(0, true).unwrap() - 0.10).abs() < 1e-12);
        assert!((w.column_sigma(11, true).unwrap() - 0.15).abs() < 1e-12);
        for c in 0..WIDTH {
            assert_eq!(
                w.column_sigma(c, true).unwrap(),
                w.column_sigma(WIDTH - 1 - c, false).unwrap()
            );
        }
        assert!(w.column_sigma(23, false).is_err());
    }

    #[test]
    fn zero_noise_patch_center_and_corner() {
        let w = flat_world(0.5);
        let mut s = rng::stream(1);
        let p = w.observe(AgentPos::new(11, 3).unwrap(), false, &mut s);
        assert_eq!(p, [0.5; 8]);
        let p = w.observe(AgentPos::new(0, 0).unwrap(), false, &mut s);
        // N NE E SE S SW W NW
        assert_eq!(p, [0.0, 0.0, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn observation_consumes_eight_draws() {
        let w = paper_world();
        let mut a = rng::stream(9);
        let mut b = rng::stream(9);
        w.observe(AgentPos::new(0, 0).unwrap(), false, &mut a);
        w.observe(AgentPos::new(11, 3).unwrap(), true, &mut b);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn monte_carlo_variance_matches_column_sigma() {
        let w = paper_world();
        let pos = AgentPos::new(11, 3).unwrap();
        let mean = w.mean_value(AgentPos::new(12, 3).unwrap());
        let mut s = rng::stream(42);
        let n = 10_000;
        let samples: Vec<f64> = (0..n).map(|_| w.observe(pos, false, &mut s)[2]).collect();
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let target = w.column_sigma(12, false).unwrap().powi(2);
        assert!((var / target - 1.0).abs() < 0.05, "var {var} vs {target}");
    }

    #[test]
    fn moves_clamp() {
        let origin = AgentPos::new(0, 0).unwrap();
        assert_eq!(step_action(origin, Action::Left), origin);
        assert_eq!(step_action(origin, Action::Up), origin);
        let c = AgentPos::new(11, 3).unwrap();
        assert_eq!(step_action(c, Action::Stay), c);
        assert_eq!(step_action(c, Action::Right), AgentPos::new(12, 3).unwrap());
        let corner = AgentPos::new(22, 6).unwrap();
        assert_eq!(step_action(corner, Action::Right), corner);
        assert_eq!(step_action(corner, Action::Down), corner);
        assert_eq!(AgentPos::CENTER, c);
    }

    #[test]
    fn zones() {
        assert_eq!(zone_of(0).unwrap(), ZoneId(0));
        assert_eq!(zone_of(22).unwrap(), ZoneId(4));
        assert_eq!(zone_of(10).unwrap(), ZoneId(2));
        let mut sizes = [0; N_ZONES];
        for c in 0..WIDTH {
            sizes[zone_of(c).unwrap().0] += 1;
        }
        assert_eq!(sizes, [5, 5, 4, 5, 4]);
        assert!(zone_of(23).is_err());
    }

    #[test]
    fn schedules() {
        let mut s = rng::stream(5);
        assert!(schedule_perturbations(0, 240, 15, &mut s).unwrap().windows.is_empty());
        let sch = schedule_perturbations(4, 240, 15, &mut s).unwrap();
        assert_eq!(sch.n_p(), 4);
        assert_eq!(sch.perturbed_steps(), 60);
        assert_eq!((0..240).filter(|&t| sch.is_perturbed(t)).count(), 60);
        let full = schedule_perturbations(16, 240, 15, &mut s).unwrap();
        assert_eq!((0..240).filter(|&t| full.is_perturbed(t)).count(), 240);
        assert!(matches!(
            schedule_perturbations(17, 240, 15, &mut s),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn schedule_is_uniform_over_placements() {
        // 2 windows of length 2 in 6 steps: placements enumerate to
        // C(6 - 4 + 2, 2) = 6 start pairs.
        let mut s = rng::stream(77);
        let mut counts = std::collections::BTreeMap::new();
        let n = 60_000;
        for _ in 0..n {
            let sch = schedule_perturbations(2, 6, 2, &mut s).unwrap();
            *counts.entry(sch.windows.clone()).or_insert(0usize) += 1;
        }
        let mut brute = Vec::new();
        for a in 0..=4 {
            for b in (a + 2)..=4 {
                brute.push(vec![(a, a + 2), (b, b + 2)]);
            }
        }
        assert_eq!(counts.len(), brute.len());
        for w in brute {
            let f = counts[&w] as f64 / n as f64;
            assert!((f - 1.0 / 6.0).abs() < 0.01, "{w:?}: {f}");
        }
    }
}
