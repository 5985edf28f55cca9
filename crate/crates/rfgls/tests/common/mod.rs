//! Shared test support: a standalone reference CART grower used by the
//! reduction checks. It mirrors the growth loop of the GLS tree (same
//! stopping rules, same feature-draw order, same tie-breaks) but computes
//! split gains with plain prefix sums and leaf values as node means, fully
//! independent of the Gram-system machinery.

use rand::Rng;
use rfgls::{SpatialDataset, TreeModel, TreeNode};

pub struct ReferenceTree {
    pub nodes: Vec<TreeNode>,
    pub leaf_count: usize,
}

/// Variance-reduction CART with `t_c` as minimum leaf cardinality, candidates
/// at gap midpoints, ties keeping the earlier (lower feature, lower cutoff)
/// candidate.
pub fn grow_reference_cart<R: Rng>(
    data: &SpatialDataset,
    t_n: usize,
    t_c: usize,
    m_try: usize,
    rng: &mut R,
) -> ReferenceTree {
    let n = data.len();
    let d = data.n_features();
    let mut members: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0 }];
    let mut node_of_leaf: Vec<usize> = vec![0];

    loop {
        let level_leaves = members.len();
        let any_large = members.iter().any(|m| m.len() > t_c);
        if !(level_leaves < t_n && any_large) {
            break;
        }
        let mut split_any = false;
        for leaf in 0..level_leaves {
            if members[leaf].len() <= t_c {
                continue;
            }
            if members.len() >= t_n {
                continue;
            }
            let mut feats: Vec<usize> = rand::seq::index::sample(rng, d, m_try).into_vec();
            feats.sort_unstable();

            let mut best: Option<(usize, f64, f64)> = None; // (feature, cutoff, gain)
            for &feature in &feats {
                let mut order = members[leaf].clone();
                order.sort_by(|&i, &j| {
                    data.x(i, feature)
                        .partial_cmp(&data.x(j, feature))
                        .unwrap()
                        .then(i.cmp(&j))
                });
                let m = order.len();
                let total: f64 = order.iter().map(|&i| data.y[i]).sum();
                let mut left_sum = 0.0;
                let mut local: Option<(f64, f64)> = None; // (cutoff, gain)
                for pos in 1..m {
                    left_sum += data.y[order[pos - 1]];
                    let prev = data.x(order[pos - 1], feature);
                    let cur = data.x(order[pos], feature);
                    if pos < t_c || m - pos < t_c || cur <= prev {
                        continue;
                    }
                    let cutoff = 0.5 * (prev + cur);
                    let right_sum = total - left_sum;
                    let gain = left_sum * left_sum / pos as f64
                        + right_sum * right_sum / (m - pos) as f64
                        - total * total / m as f64;
                    if local.map_or(true, |(_, b)| rfgls::glstree::improves(gain, b)) {
                        local = Some((cutoff, gain));
                    }
                }
                if let Some((cutoff, gain)) = local {
                    if best.map_or(true, |(_, _, b)| rfgls::glstree::improves(gain, b)) {
                        best = Some((feature, cutoff, gain));
                    }
                }
            }

            if let Some((feature, cutoff, _)) = best {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    members[leaf].iter().partition(|&&i| data.x(i, feature) < cutoff);
                let left_node = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                let right_node = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[node_of_leaf[leaf]] =
                    TreeNode::Internal { feature, cutoff, left: left_node, right: right_node };
                node_of_leaf[leaf] = left_node;
                node_of_leaf.push(right_node);
                members[leaf] = left;
                members.push(right);
                split_any = true;
            }
        }
        if !split_any {
            break;
        }
    }

    for (leaf, &node_idx) in node_of_leaf.iter().enumerate() {
        let mean = members[leaf].iter().map(|&i| data.y[i]).sum::<f64>() / members[leaf].len() as f64;
        nodes[node_idx] = TreeNode::Leaf { value: mean };
    }
    ReferenceTree { nodes, leaf_count: node_of_leaf.len() }
}

/// Structural equality of the reference tree and a fitted model: identical
/// topology and split parameters, leaf values within `tol`.
pub fn trees_match(reference: &ReferenceTree, model: &TreeModel, tol: f64) -> std::result::Result<(), String> {
    if reference.nodes.len() != model.nodes.len() {
        return Err(format!(
            "node count {} vs {}",
            reference.nodes.len(),
            model.nodes.len()
        ));
    }
    if reference.leaf_count != model.leaf_count {
        return Err(format!("leaf count {} vs {}", reference.leaf_count, model.leaf_count));
    }
    for (i, (a, b)) in reference.nodes.iter().zip(&model.nodes).enumerate() {
        match (a, b) {
            (
                TreeNode::Internal { feature: fa, cutoff: ca, left: la, right: ra },
                TreeNode::Internal { feature: fb, cutoff: cb, left: lb, right: rb },
            ) => {
                if fa != fb || la != lb || ra != rb || ca.to_bits() != cb.to_bits() {
                    return Err(format!("internal node {i} differs: ({fa},{ca},{la},{ra}) vs ({fb},{cb},{lb},{rb})"));
                }
            }
            (TreeNode::Leaf { value: va }, TreeNode::Leaf { value: vb }) => {
                if (va - vb).abs() > tol {
                    return Err(format!("leaf {i} value {va} vs {vb}"));
                }
            }
            _ => return Err(format!("node {i} kind differs")),
        }
    }
    Ok(())
}

/// Draw a random regression dataset on arbitrary 1-d locations.
pub fn random_dataset<R: Rng>(n: usize, d: usize, rng: &mut R) -> SpatialDataset {
    let x: Vec<f64> = (0..n * d).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let row = &x[i * d..(i + 1) * d];
            let signal: f64 = row.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).sum();
            signal + rng.gen_range(-0.5..0.5)
        })
        .collect();
    let locs: Vec<rfgls::Location> = (0..n).map(|i| rfgls::Location::One(i as f64)).collect();
    SpatialDataset::new(y, x, d, locs).unwrap()
}
