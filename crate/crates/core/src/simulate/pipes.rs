//! The binary tree with a pipe (a half-line) hanging off every vertex.
//!
//! Under percolation the tree part is the percolated binary GW cluster and
//! each cluster vertex keeps a geometric number of open pipe edges,
//! `P(L = j) = p^j (1 - p)`. Pipe vertices are grown one at a time as the
//! walk reaches them.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::cluster::{ClusterArena, Color, Grower, GwCluster, NodeId};
use super::{check_budget, mean_and_se, replica_speeds, WalkEstimate};
use crate::error::{Error, Result};
use crate::offspring::OffspringLaw;
use crate::percolation::PercolatedModel;

pub struct PipesCluster<'a> {
    tree: GwCluster<'a>,
    pipe_len: Geometric,
}

impl<'a> PipesCluster<'a> {
    /// `model` must be the percolated binary tree at the pipes' retention.
    pub fn new(model: &'a PercolatedModel) -> Result<Self> {
        let p = model.p();
        let pipe_len = Geometric::new(1.0 - p).map_err(|_| Error::InvalidArgument {
            name: "p",
            value: p,
            reason: "pipe retention must be below 1",
        })?;
        Ok(PipesCluster {
            tree: GwCluster::new(model)?,
            pipe_len,
        })
    }

    fn attach_pipe<R: Rng + ?Sized>(&self, arena: &mut ClusterArena, id: NodeId, rng: &mut R) -> Result<()> {
        let len = self.pipe_len.sample(rng);
        if len > 0 {
            arena.push_child(id, Color::Pipe, len - 1)?;
        }
        Ok(())
    }
}

impl Grower for PipesCluster<'_> {
    fn expand<R: Rng + ?Sized>(&self, arena: &mut ClusterArena, id: NodeId, rng: &mut R) -> Result<()> {
        match arena.node(id).color {
            Color::Green => {
                self.tree.expand_green(arena, id, rng)?;
                self.attach_pipe(arena, id, rng)
            }
            Color::Red => {
                self.tree.expand_red(arena, id, rng)?;
                self.attach_pipe(arena, id, rng)
            }
            Color::Pipe => {
                let left = arena.node(id).pipe_left;
                arena.begin_expansion(id);
                if left > 0 {
                    arena.push_child(id, Color::Pipe, left - 1)?;
                }
                Ok(())
            }
        }
    }
}

/// Monte Carlo speed on the infinite cluster of the binary tree with pipes.
pub fn simulate_pipes(p: f64, horizon: u64, replicas: u64, seed: u64) -> Result<WalkEstimate> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::InvalidArgument {
            name: "p",
            value: p,
            reason: "pipes simulation needs 1/2 < p < 1",
        });
    }
    check_budget(horizon, replicas)?;
    let model = PercolatedModel::new(OffspringLaw::regular(2)?, p)?;
    let speeds = replica_speeds(&PipesCluster::new(&model)?, horizon, replicas, seed)?;
    let (speed_hat, std_error) = mean_and_se(&speeds);
    Ok(WalkEstimate {
        speed_hat,
        std_error,
        replicas,
        horizon,
        seed,
        law_spec: "pipes".to_string(),
        p,
    })
}
