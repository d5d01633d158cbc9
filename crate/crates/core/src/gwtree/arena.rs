use std::ops::Range;

use rand::Rng;

use super::analytics::{harris_split, HarrisSplit};
use super::law::{AtomLaw, OffspringLaw};
use super::GwError;
use crate::randkit::{SeedTree, Stream};

/// Hard limit on materialized nodes per tree.
pub const NODE_CAP: usize = 10_000_000;

pub type NodeId = u32;
pub const ROOT: NodeId = 0;

const UNEXPANDED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Unconditioned Galton-Watson vertex.
    Plain,
    /// Vertex with an infinite line of descent.
    Backbone,
    /// Vertex of a finite trap tree.
    Trap,
    /// Vertex of a unary pipe.
    Pipe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    /// Ordinary Galton-Watson tree.
    Plain,
    /// Conditioned on survival: `g`-backbone with `h`-traps hung on it.
    Harris,
    /// A single `h`-tree (or the law itself when it is not supercritical).
    SubcriticalTrap,
    /// Binary backbone where each vertex also carries one infinite unary pipe.
    PipeExample,
}

/// Law of the bud count `N` at a backbone vertex with `d` backbone children:
/// `P[N = j | d] ∝ p_{d+j} C(d+j, d) q^j`.
#[derive(Debug, Clone)]
pub struct BudSampler {
    /// `cdf[d]` is the cumulative law of `N` given `d`.
    cdf: Vec<Vec<f64>>,
}

impl BudSampler {
    pub fn new(law: &OffspringLaw, q: f64) -> Self {
        let top = law.max_degree();
        let cdf = (0..=top)
            .map(|d| {
                let mut binom = 1.0;
                let weights: Vec<f64> = (0..=top - d)
                    .map(|j| {
                        if j > 0 {
                            binom = binom * (d + j) as f64 / j as f64;
                        }
                        law.prob(d + j) * binom * q.powi(j as i32)
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                let keep = weights.iter().rposition(|&w| w > 0.0).map_or(1, |i| i + 1);
                let mut acc = 0.0;
                let mut table: Vec<f64> = weights[..keep]
                    .iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                // also covers degrees g never produces (total = 0)
                table[keep - 1] = 1.0;
                table
            })
            .collect();
        Self { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> usize {
        let table = &self.cdf[d];
        if table.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        table.partition_point(|&c| c <= u).min(table.len() - 1)
    }
}

#[derive(Debug, Clone)]
enum Generator {
    Plain(OffspringLaw),
    Harris { g: OffspringLaw, h: Option<OffspringLaw>, buds: BudSampler },
    Trap(OffspringLaw),
    Pipes,
}

/// Recipe for building one tree per replica.
#[derive(Debug, Clone)]
pub struct TreeSpec {
    pub law: OffspringLaw,
    pub mode: TreeMode,
    /// Per-edge random biases drawn at node creation.
    pub edge_law: Option<AtomLaw>,
}

impl TreeSpec {
    pub fn new(law: OffspringLaw, mode: TreeMode) -> Self {
        Self { law, mode, edge_law: None }
    }

    pub fn with_edge_law(mut self, nu: AtomLaw) -> Self {
        self.edge_law = Some(nu);
        self
    }

    pub fn build(&self, seed: &SeedTree) -> Result<TreeArena, GwError> {
        let tree = gen_tree(&self.law, self.mode, seed.stream())?;
        Ok(match &self.edge_law {
            Some(nu) => tree.with_edge_law(nu.clone()),
            None => tree,
        })
    }
}

/// Lazily grown rooted tree. Children of a node are stored contiguously and
/// appear the first time they are asked for.
#[derive(Debug, Clone)]
pub struct TreeArena {
    parent: Vec<NodeId>,
    first_child: Vec<NodeId>,
    child_count: Vec<u32>,
    depth: Vec<u32>,
    kind: Vec<NodeKind>,
    /// Bias of the edge from the parent; only filled with an edge law.
    edge_bias: Vec<f64>,
    edge_law: Option<AtomLaw>,
    generator: Generator,
    cap: usize,
    rng: Stream,
}

pub fn gen_tree(law: &OffspringLaw, mode: TreeMode, rng: Stream) -> Result<TreeArena, GwError> {
    let (generator, root_kind) = match mode {
        TreeMode::Plain => (Generator::Plain(law.clone()), NodeKind::Plain),
        TreeMode::Harris => {
            let HarrisSplit { q, g, h } = harris_split(law)?;
            let buds = BudSampler::new(law, q);
            (Generator::Harris { g, h, buds }, NodeKind::Backbone)
        }
        TreeMode::SubcriticalTrap => {
            let h = if law.is_supercritical() {
                harris_split(law)?.h.ok_or(GwError::Leafless)?
            } else {
                law.clone()
            };
            (Generator::Trap(h), NodeKind::Trap)
        }
        TreeMode::PipeExample => (Generator::Pipes, NodeKind::Backbone),
    };
    Ok(TreeArena::with_root(generator, root_kind, rng))
}

impl TreeArena {
    fn with_root(generator: Generator, root_kind: NodeKind, rng: Stream) -> Self {
        Self {
            parent: vec![ROOT],
            first_child: vec![0],
            child_count: vec![UNEXPANDED],
            depth: vec![0],
            kind: vec![root_kind],
            edge_bias: Vec::new(),
            edge_law: None,
            generator,
            cap: NODE_CAP,
            rng,
        }
    }

    /// Attach i.i.d. edge biases. Must be called before any expansion.
    pub fn with_edge_law(mut self, nu: AtomLaw) -> Self {
        assert_eq!(self.len(), 1, "edge law must be set on a fresh tree");
        self.edge_bias = vec![1.0];
        self.edge_law = Some(nu);
        self
    }

    /// Lower the node cap (useful in tests).
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        (u != ROOT).then(|| self.parent[u as usize])
    }

    pub fn depth(&self, u: NodeId) -> u32 {
        self.depth[u as usize]
    }

    pub fn kind(&self, u: NodeId) -> NodeKind {
        self.kind[u as usize]
    }

    pub fn is_backbone(&self, u: NodeId) -> bool {
        self.kind[u as usize] == NodeKind::Backbone
    }

    pub fn has_edge_biases(&self) -> bool {
        self.edge_law.is_some()
    }

    /// Bias on the edge into `u` from its parent (1 without an edge law).
    pub fn edge_bias(&self, u: NodeId) -> f64 {
        self.edge_bias.get(u as usize).copied().unwrap_or(1.0)
    }

    pub fn is_expanded(&self, u: NodeId) -> bool {
        self.child_count[u as usize] != UNEXPANDED
    }

    /// Children of `u`, generating them on first request.
    pub fn children(&mut self, u: NodeId) -> Result<Range<NodeId>, GwError> {
        if !self.is_expanded(u) {
            self.expand(u)?;
        }
        let first = self.first_child[u as usize];
        Ok(first..first + self.child_count[u as usize])
    }

    /// Children of an already expanded node.
    pub fn known_children(&self, u: NodeId) -> Option<Range<NodeId>> {
        self.is_expanded(u).then(|| {
            let first = self.first_child[u as usize];
            first..first + self.child_count[u as usize]
        })
    }

    fn expand(&mut self, u: NodeId) -> Result<(), GwError> {
        let kind = self.kind[u as usize];
        let (backbone, extra, extra_kind) = match (&self.generator, kind) {
            (Generator::Plain(law), _) => (0, law.sample(&mut self.rng), NodeKind::Plain),
            (Generator::Harris { g, buds, .. }, NodeKind::Backbone) => {
                let d = g.sample(&mut self.rng);
                (d, buds.sample(d, &mut self.rng), NodeKind::Trap)
            }
            (Generator::Harris { h, .. }, _) => (0, h.as_ref().map_or(0, |h| h.sample(&mut self.rng)), NodeKind::Trap),
            (Generator::Trap(h), _) => (0, h.sample(&mut self.rng), NodeKind::Trap),
            (Generator::Pipes, NodeKind::Backbone) => (2, 1, NodeKind::Pipe),
            (Generator::Pipes, _) => (0, 1, NodeKind::Pipe),
        };
        let total = backbone + extra;
        if self.len() + total > self.cap {
            return Err(GwError::NodeCap(self.cap));
        }
        let first = self.len() as NodeId;
        let depth = self.depth[u as usize] + 1;
        for i in 0..total {
            self.parent.push(u);
            self.first_child.push(0);
            self.child_count.push(UNEXPANDED);
            self.depth.push(depth);
            self.kind.push(if i < backbone { NodeKind::Backbone } else { extra_kind });
            if let Some(nu) = &self.edge_law {
                self.edge_bias.push(nu.sample(&mut self.rng));
            }
        }
        self.first_child[u as usize] = first;
        self.child_count[u as usize] = total as u32;
        Ok(())
    }

    /// Expand everything below the root; returns the height. Only terminates
    /// for finite trees, otherwise stops at the node cap.
    pub fn grow_to_extinction(&mut self) -> Result<u32, GwError> {
        let mut next = 0usize;
        let mut height = 0;
        while next < self.len() {
            let u = next as NodeId;
            height = height.max(self.depth(u));
            self.children(u)?;
            next += 1;
        }
        Ok(height)
    }
}
