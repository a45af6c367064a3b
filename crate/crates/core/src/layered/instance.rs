//! Rooted layered trees: layer `i` is revealed at time `i`, each node is
//! attached to one node of the previous layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerNode {
    /// Index of the parent within the previous layer; `None` only for `a`.
    pub parent: Option<usize>,
    /// Weight of the edge to the parent.
    pub weight: u64,
}

impl LayerNode {
    pub fn root() -> Self {
        Self { parent: None, weight: 0 }
    }
}

/// A node addressed by layer and position within the layer. The derived
/// order is the tie-breaking order used throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LayerPos {
    pub layer: usize,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredTree {
    pub layers: Vec<Vec<LayerNode>>,
}

impl LayeredTree {
    /// Validates structure: a single root `a`, parents in range, nonempty
    /// layers, and a single target node in the last layer.
    pub fn new(layers: Vec<Vec<LayerNode>>) -> Result<Self> {
        let t = Self { layers };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        match self.layers.first() {
            Some(l0) if l0.len() == 1 && l0[0].parent.is_none() => {}
            _ => return bad("layer 0 must hold exactly the root".into()),
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            if layer.is_empty() {
                return bad(format!("layer {i} is empty"));
            }
            let prev = self.layers[i - 1].len();
            for (j, n) in layer.iter().enumerate() {
                match n.parent {
                    Some(p) if p < prev => {}
                    _ => return bad(format!("node {j} of layer {i} has no valid parent")),
                }
            }
        }
        if self.layers.len() < 2 || self.layers.last().map_or(0, Vec::len) != 1 {
            return bad("the last layer must be the single target".into());
        }
        Ok(())
    }

    /// Index of the last layer.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn width(&self) -> usize {
        self.layers.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn node(&self, p: LayerPos) -> LayerNode {
        self.layers[p.layer][p.index]
    }

    pub fn parent(&self, p: LayerPos) -> Option<LayerPos> {
        self.node(p).parent.map(|index| LayerPos { layer: p.layer - 1, index })
    }

    pub fn target(&self) -> LayerPos {
        LayerPos { layer: self.depth(), index: 0 }
    }

    /// Children of node `index` of layer `layer`, as indices into the next layer.
    pub fn children(&self, layer: usize, index: usize) -> Vec<usize> {
        self.layers
            .get(layer + 1)
            .map(|next| next.iter().enumerate().filter(|(_, n)| n.parent == Some(index)).map(|(j, _)| j).collect())
            .unwrap_or_default()
    }

    /// True when every edge weight is 0 or 1.
    pub fn is_unit_weighted(&self) -> bool {
        self.layers.iter().flatten().all(|n| n.weight <= 1)
    }

    /// True when no node has more than two children.
    pub fn is_binary(&self) -> bool {
        (0..self.depth()).all(|i| (0..self.layers[i].len()).all(|j| self.children(i, j).len() <= 2))
    }

    /// Largest number of unit edges between two consecutive layers.
    pub fn max_unit_edges_per_gap(&self) -> usize {
        self.layers.iter().skip(1).map(|l| l.iter().filter(|n| n.weight > 0).count()).max().unwrap_or(0)
    }

    /// Root distance of every node, layer by layer.
    pub fn root_distances(&self) -> Vec<Vec<u64>> {
        let mut out: Vec<Vec<u64>> = vec![vec![0]];
        for i in 1..self.layers.len() {
            let row = self.layers[i].iter().map(|n| out[i - 1][n.parent.expect("validated")] + n.weight).collect();
            out.push(row);
        }
        out
    }

    /// Length of the tree path between two nodes.
    pub fn distance(&self, mut u: LayerPos, mut v: LayerPos) -> u64 {
        let mut total = 0;
        while u.layer > v.layer {
            total += self.node(u).weight;
            u = self.parent(u).expect("non-root");
        }
        while v.layer > u.layer {
            total += self.node(v).weight;
            v = self.parent(v).expect("non-root");
        }
        while u != v {
            total += self.node(u).weight + self.node(v).weight;
            u = self.parent(u).expect("distinct nodes share the root");
            v = self.parent(v).expect("distinct nodes share the root");
        }
        total
    }

    /// Shortest path from `a` to the target: its weight and the node index per layer.
    pub fn opt_path(&self) -> Result<(u64, Vec<usize>)> {
        self.validate()?;
        let dist = self.root_distances();
        let mut path = vec![0; self.layers.len()];
        let mut cur = self.target();
        loop {
            path[cur.layer] = cur.index;
            match self.parent(cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
        Ok((dist[self.depth()][0], path))
    }
}
