//! Lazily grown percolation clusters.
//!
//! Nodes live in an append-only arena and are addressed by `u32` handles.
//! A node's children are allocated contiguously the first time the walk
//! reaches it, so the cluster only ever materializes the visited part plus
//! one generation of frontier.

use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::percolation::PercolatedModel;

pub type NodeId = u32;

pub const ROOT: NodeId = 0;

/// Default arena capacity in nodes.
pub const DEFAULT_MAX_NODES: usize = 100_000_000;

/// Cap on rejection loops in the samplers.
pub const MAX_REJECTIONS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    /// Backbone vertex, with an infinite line of descent.
    Green,
    /// Bush vertex; every child of a red vertex is red.
    Red,
    /// Vertex on a percolated pipe (pipes graph only).
    Pipe,
}

#[derive(Debug, Clone)]
pub struct ClusterNode {
    pub parent: Option<NodeId>,
    pub color: Color,
    pub depth: u32,
    pub expanded: bool,
    first_child: NodeId,
    child_count: u32,
    /// Open pipe edges still below this vertex (pipe vertices only).
    pub(crate) pipe_left: u64,
}

impl ClusterNode {
    pub fn children(&self) -> Range<NodeId> {
        self.first_child..self.first_child + self.child_count
    }

    pub fn degree(&self) -> u32 {
        self.child_count + u32::from(self.parent.is_some())
    }
}

#[derive(Debug)]
pub struct ClusterArena {
    nodes: Vec<ClusterNode>,
    max_nodes: usize,
}

impl ClusterArena {
    pub fn new(root_color: Color) -> Self {
        Self::with_capacity(root_color, DEFAULT_MAX_NODES)
    }

    pub fn with_capacity(root_color: Color, max_nodes: usize) -> Self {
        ClusterArena {
            nodes: vec![ClusterNode {
                parent: None,
                color: root_color,
                depth: 0,
                expanded: false,
                first_child: 1,
                child_count: 0,
                pipe_left: 0,
            }],
            max_nodes: max_nodes.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &ClusterNode {
        &self.nodes[id as usize]
    }

    /// Marks `id` expanded; children pushed afterwards belong to it.
    ///
    /// Children of one node must be pushed back to back.
    pub fn begin_expansion(&mut self, id: NodeId) {
        let next = self.nodes.len() as NodeId;
        let node = &mut self.nodes[id as usize];
        debug_assert!(!node.expanded);
        node.expanded = true;
        node.first_child = next;
        node.child_count = 0;
    }

    pub fn push_child(&mut self, parent: NodeId, color: Color, pipe_left: u64) -> Result<NodeId> {
        if self.nodes.len() >= self.max_nodes {
            return Err(Error::ArenaFull {
                cap: self.max_nodes,
            });
        }
        let id = self.nodes.len() as NodeId;
        let depth = {
            let p = &mut self.nodes[parent as usize];
            debug_assert_eq!(p.first_child + p.child_count, id);
            p.child_count += 1;
            p.depth + 1
        };
        self.nodes.push(ClusterNode {
            parent: Some(parent),
            color,
            depth,
            expanded: false,
            first_child: id + 1,
            child_count: 0,
            pipe_left,
        });
        Ok(id)
    }

    /// The `j`-th neighbor of `id`: children first, then the parent.
    pub fn neighbor(&self, id: NodeId, j: u32) -> NodeId {
        let node = self.node(id);
        if j < node.child_count {
            node.first_child + j
        } else {
            node.parent.expect("neighbor index out of range")
        }
    }
}

/// One simple-random-walk step on the already grown part of the arena.
pub fn step<R: Rng + ?Sized>(arena: &ClusterArena, at: NodeId, rng: &mut R) -> NodeId {
    let deg = arena.node(at).degree();
    arena.neighbor(at, rng.random_range(0..deg))
}

/// Something that knows how to grow the cluster below a node.
pub trait Grower {
    fn root_color(&self) -> Color {
        Color::Green
    }

    fn expand<R: Rng + ?Sized>(&self, arena: &mut ClusterArena, id: NodeId, rng: &mut R) -> Result<()>;
}

/// Inverse-CDF sampler for the bush offspring law `p̂`.
#[derive(Debug, Clone)]
pub struct BushSampler {
    cdf: Vec<f64>,
}

impl BushSampler {
    pub fn new(model: &PercolatedModel) -> Result<Self> {
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for k in 0..=model.series_cutoff() {
            acc += model.bush_pmf(k)?;
            cdf.push(acc);
        }
        Ok(BushSampler { cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        for _ in 0..MAX_REJECTIONS {
            let u: f64 = rng.random();
            let k = self.cdf.partition_point(|&c| c <= u);
            if k < self.cdf.len() {
                return Ok(k as u64);
            }
        }
        Err(Error::RejectionCap {
            cap: MAX_REJECTIONS,
        })
    }
}

/// Binomial thinning of `k` edges with retention `p`.
pub(crate) fn thin<R: Rng + ?Sized>(k: u64, p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return k;
    }
    if k <= 64 {
        (0..k).filter(|_| rng.random_bool(p)).count() as u64
    } else {
        use rand_distr::{Binomial, Distribution};
        Binomial::new(k, p).expect("valid binomial").sample(rng)
    }
}

/// Green/red construction of the infinite cluster of a percolated GW tree.
#[derive(Debug, Clone)]
pub struct GwCluster<'a> {
    model: &'a PercolatedModel,
    bush: Option<BushSampler>,
}

impl<'a> GwCluster<'a> {
    pub fn new(model: &'a PercolatedModel) -> Result<Self> {
        let bush = if model.rho() > 0.0 {
            Some(BushSampler::new(model)?)
        } else {
            None
        };
        Ok(GwCluster { model, bush })
    }

    pub fn model(&self) -> &PercolatedModel {
        self.model
    }

    /// Draws `(open children, green mask)` for a green vertex, rejecting
    /// assignments without a green child.
    fn draw_green<R: Rng + ?Sized>(&self, rng: &mut R, colors: &mut Vec<Color>) -> Result<()> {
        let p = self.model.p();
        let green = 1.0 - self.model.rho();
        for _ in 0..MAX_REJECTIONS {
            let k = thin(self.model.law().sample(rng), p, rng);
            colors.clear();
            let mut any_green = false;
            for _ in 0..k {
                let c = if rng.random_bool(green) {
                    any_green = true;
                    Color::Green
                } else {
                    Color::Red
                };
                colors.push(c);
            }
            if any_green {
                return Ok(());
            }
        }
        Err(Error::RejectionCap {
            cap: MAX_REJECTIONS,
        })
    }

    pub fn expand_green<R: Rng + ?Sized>(
        &self,
        arena: &mut ClusterArena,
        id: NodeId,
        rng: &mut R,
    ) -> Result<Range<NodeId>> {
        debug_assert_eq!(arena.node(id).color, Color::Green);
        let mut colors = Vec::new();
        self.draw_green(rng, &mut colors)?;
        arena.begin_expansion(id);
        for c in colors {
            arena.push_child(id, c, 0)?;
        }
        Ok(arena.node(id).children())
    }

    pub fn expand_red<R: Rng + ?Sized>(
        &self,
        arena: &mut ClusterArena,
        id: NodeId,
        rng: &mut R,
    ) -> Result<Range<NodeId>> {
        debug_assert_eq!(arena.node(id).color, Color::Red);
        let bush = self.bush.as_ref().ok_or(Error::NoBushes)?;
        let k = bush.sample(rng)?;
        arena.begin_expansion(id);
        for _ in 0..k {
            arena.push_child(id, Color::Red, 0)?;
        }
        Ok(arena.node(id).children())
    }
}

impl Grower for GwCluster<'_> {
    fn expand<R: Rng + ?Sized>(&self, arena: &mut ClusterArena, id: NodeId, rng: &mut R) -> Result<()> {
        match arena.node(id).color {
            Color::Green => self.expand_green(arena, id, rng).map(|_| ()),
            Color::Red => self.expand_red(arena, id, rng).map(|_| ()),
            Color::Pipe => unreachable!("GW clusters have no pipes"),
        }
    }
}
