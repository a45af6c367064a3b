//! Conversion of width-`k` unit-weight layered trees into binary ones with at
//! most one unit edge between consecutive layers.

use crate::error::{Error, Result};
use crate::layered::instance::{LayerNode, LayeredTree};

/// Number of layers inserted per gap by the branching stage: `⌈log₂ k⌉ − 1`.
pub fn gadget_layers(k: usize) -> usize {
    let mut bits = 0usize;
    while (1usize << bits) < k {
        bits += 1;
    }
    bits.saturating_sub(1)
}

/// Layer of the converted instance that holds original layer `layer`; node
/// indices within the layer are unchanged.
pub fn converted_layer(k: usize, layer: usize) -> usize {
    layer * (gadget_layers(k) + 1) * k
}

/// Two stages. First every node's fan-out is replaced by a balanced binary
/// gadget of zero-weight edges spanning `⌈log₂ k⌉ − 1` extra layers, with the
/// original weights on the edges into the original children. Then every gap
/// is stretched into `k` gaps, the `j`-th edge of the gap becoming a path
/// whose only possible unit edge sits at position `j`.
pub fn binary_convert(instance: &LayeredTree, k: usize) -> Result<LayeredTree> {
    instance.validate()?;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    if !instance.is_unit_weighted() {
        return Err(Error::InvalidInstance("edge weights must be 0 or 1".into()));
    }
    if instance.width() > k {
        return Err(Error::InvalidInstance(format!("width {} exceeds k = {k}", instance.width())));
    }
    let branched = branch_stage(instance, gadget_layers(k));
    let out = stretch_stage(&branched, k);
    LayeredTree::new(out.layers)
}

fn branch_stage(g: &LayeredTree, extra: usize) -> LayeredTree {
    let mut layers = vec![g.layers[0].clone()];
    for i in 0..g.depth() {
        // Groups of original children hanging below each node of the current
        // output layer; splitting a group in two halves is one binary branching.
        let mut groups: Vec<(usize, Vec<usize>)> = (0..g.layers[i].len())
            .map(|u| (u, g.children(i, u)))
            .filter(|(_, c)| !c.is_empty())
            .collect();
        for _ in 0..extra {
            let mut next_layer = Vec::new();
            let mut next_groups = Vec::new();
            for (owner, group) in &groups {
                let halves: Vec<&[usize]> = if group.len() > 1 {
                    let (l, r) = group.split_at(group.len().div_ceil(2));
                    vec![l, r]
                } else {
                    vec![&group[..]]
                };
                for h in halves {
                    next_groups.push((next_layer.len(), h.to_vec()));
                    next_layer.push(LayerNode { parent: Some(*owner), weight: 0 });
                }
            }
            layers.push(next_layer);
            groups = next_groups;
        }
        let mut last = vec![LayerNode { parent: None, weight: 0 }; g.layers[i + 1].len()];
        for (owner, group) in &groups {
            for &c in group {
                last[c] = LayerNode { parent: Some(*owner), weight: g.layers[i + 1][c].weight };
            }
        }
        layers.push(last);
    }
    LayeredTree { layers }
}

fn stretch_stage(g: &LayeredTree, k: usize) -> LayeredTree {
    let mut layers = vec![g.layers[0].clone()];
    for i in 1..g.layers.len() {
        let edges = &g.layers[i];
        for pos in 0..k {
            let row = edges
                .iter()
                .enumerate()
                .map(|(j, e)| LayerNode {
                    parent: Some(if pos == 0 { e.parent.expect("non-root") } else { j }),
                    weight: if pos == j % k { e.weight } else { 0 },
                })
                .collect();
            layers.push(row);
        }
    }
    LayeredTree { layers }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(width: usize, weights: &[u64]) -> LayeredTree {
        let mid = (0..width).map(|j| LayerNode { parent: Some(0), weight: weights[j] }).collect();
        LayeredTree::new(vec![vec![LayerNode::root()], mid, vec![LayerNode { parent: Some(width - 1), weight: 0 }]])
            .unwrap()
    }

    #[test]
    fn gadget_depths() {
        assert_eq!(gadget_layers(2), 0);
        assert_eq!(gadget_layers(3), 1);
        assert_eq!(gadget_layers(4), 1);
        assert_eq!(gadget_layers(5), 2);
        assert_eq!(gadget_layers(8), 2);
    }

    #[test]
    fn four_children_become_depth_two_gadget() {
        let g = star(4, &[1, 0, 1, 1]);
        let b = branch_stage(&g, gadget_layers(4));
        assert_eq!(b.layers[1].len(), 2);
        assert!(b.layers[1].iter().all(|n| n.weight == 0));
        let w: Vec<u64> = b.layers[2].iter().map(|n| n.weight).collect();
        assert_eq!(w, vec![1, 0, 1, 1]);
        assert!(b.is_binary());
    }

    #[test]
    fn conversion_properties() {
        let g = star(4, &[1, 0, 1, 1]);
        let b = binary_convert(&g, 4).unwrap();
        assert!(b.is_binary());
        assert!(b.width() <= 4);
        assert!(b.max_unit_edges_per_gap() <= 1);
        assert_eq!(b.opt_path().unwrap().0, g.opt_path().unwrap().0);
    }

    #[test]
    fn rejects_heavy_edges_and_wide_layers() {
        let g = star(3, &[2, 0, 0]);
        assert!(binary_convert(&g, 3).is_err());
        let g = star(3, &[0, 0, 0]);
        assert!(binary_convert(&g, 2).is_err());
    }
}
