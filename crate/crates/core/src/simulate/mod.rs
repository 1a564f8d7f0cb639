//! Monte Carlo speed estimates.
//!
//! Each replica grows a fresh cluster while walking on it and reports
//! `|X_T| / T`. Replica `r` draws from ChaCha8 seeded with the master seed
//! on stream `r`, so any replica can be rerun on its own and the aggregate
//! does not depend on thread scheduling.

mod cluster;
mod pipes;

pub use cluster::{
    step, BushSampler, ClusterArena, ClusterNode, Color, Grower, GwCluster, NodeId,
    DEFAULT_MAX_NODES, MAX_REJECTIONS, ROOT,
};
pub use pipes::{simulate_pipes, PipesCluster};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::percolation::PercolatedModel;

pub const MIN_HORIZON: u64 = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkEstimate {
    pub speed_hat: f64,
    /// Sample standard deviation of the per-replica speeds over `sqrt(replicas)`.
    pub std_error: f64,
    pub replicas: u64,
    pub horizon: u64,
    pub seed: u64,
    pub law_spec: String,
    pub p: f64,
}

impl WalkEstimate {
    /// `(speed_hat - reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.speed_hat - reference) / self.std_error
    }
}

/// The random stream of replica `replica` under master seed `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Walks `horizon` steps from the root of a cluster grown by `grower`.
pub fn walk_on<G: Grower, R: Rng + ?Sized>(
    grower: &G,
    horizon: u64,
    max_nodes: usize,
    rng: &mut R,
) -> Result<u32> {
    let mut arena = ClusterArena::with_capacity(grower.root_color(), max_nodes);
    let mut at = ROOT;
    grower.expand(&mut arena, at, rng)?;
    for _ in 0..horizon {
        at = step(&arena, at, rng);
        if !arena.node(at).expanded {
            grower.expand(&mut arena, at, rng)?;
        }
    }
    Ok(arena.node(at).depth)
}

/// Final depth `|X_T|` of one walk of `horizon` steps on a fresh cluster.
pub fn run_walk<R: Rng + ?Sized>(model: &PercolatedModel, horizon: u64, rng: &mut R) -> Result<u32> {
    run_walk_with_capacity(model, horizon, DEFAULT_MAX_NODES, rng)
}

pub fn run_walk_with_capacity<R: Rng + ?Sized>(
    model: &PercolatedModel,
    horizon: u64,
    max_nodes: usize,
    rng: &mut R,
) -> Result<u32> {
    if horizon == 0 {
        return Err(Error::InvalidArgument {
            name: "horizon",
            value: 0.0,
            reason: "horizon must be at least 1",
        });
    }
    walk_on(&GwCluster::new(model)?, horizon, max_nodes, rng)
}

pub(crate) fn check_budget(horizon: u64, replicas: u64) -> Result<()> {
    if horizon < MIN_HORIZON {
        return Err(Error::InvalidArgument {
            name: "horizon",
            value: horizon as f64,
            reason: "horizon must be at least 1000",
        });
    }
    if replicas < 2 {
        return Err(Error::InvalidArgument {
            name: "replicas",
            value: replicas as f64,
            reason: "need at least 2 replicas for an error bar",
        });
    }
    Ok(())
}

/// Per-replica speeds `|X_T| / T`, in replica order.
pub fn replica_speeds<G: Grower + Sync>(
    grower: &G,
    horizon: u64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let depth = walk_on(grower, horizon, DEFAULT_MAX_NODES, &mut rng)?;
            Ok(f64::from(depth) / horizon as f64)
        })
        .collect()
}

/// Mean and standard error of the mean.
pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn estimate_speed(
    model: &PercolatedModel,
    horizon: u64,
    replicas: u64,
    seed: u64,
) -> Result<WalkEstimate> {
    check_budget(horizon, replicas)?;
    let speeds = replica_speeds(&GwCluster::new(model)?, horizon, replicas, seed)?;
    let (speed_hat, std_error) = mean_and_se(&speeds);
    Ok(WalkEstimate {
        speed_hat,
        std_error,
        replicas,
        horizon,
        seed,
        law_spec: model.law().to_string(),
        p: model.p(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::parse_law;

    #[test]
    fn one_step_on_full_binary_tree() {
        let m = PercolatedModel::new(parse_law("pmf:0,0,1").unwrap(), 1.0).unwrap();
        for seed in 0..100 {
            assert_eq!(run_walk(&m, 1, &mut replica_rng(seed, 0)).unwrap(), 1);
        }
    }

    #[test]
    fn budget_is_checked() {
        let m = PercolatedModel::new(parse_law("pmf:0,0,1").unwrap(), 1.0).unwrap();
        assert!(estimate_speed(&m, 999, 10, 1).is_err());
        assert!(estimate_speed(&m, 1000, 1, 1).is_err());
        assert!(run_walk(&m, 0, &mut replica_rng(1, 0)).is_err());
    }

    #[test]
    fn estimate_is_reproducible() {
        let m = PercolatedModel::new(parse_law("poisson:2").unwrap(), 0.8).unwrap();
        let a = estimate_speed(&m, 2000, 8, 99).unwrap();
        let b = estimate_speed(&m, 2000, 8, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.speed_hat.to_bits(), b.speed_hat.to_bits());
        let c = estimate_speed(&m, 2000, 8, 100).unwrap();
        assert_ne!(a.speed_hat, c.speed_hat);
    }

    #[test]
    fn replica_stream_is_isolated() {
        let m = PercolatedModel::new(parse_law("pmf:0,0,1").unwrap(), 0.8).unwrap();
        let g = GwCluster::new(&m).unwrap();
        let all = replica_speeds(&g, 1000, 5, 42).unwrap();
        let third = walk_on(&g, 1000, DEFAULT_MAX_NODES, &mut replica_rng(42, 3)).unwrap();
        assert_eq!(all[3], f64::from(third) / 1000.0);
    }

    #[test]
    fn standard_error_formula() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
