//! Forest-level reduction: with the identity factor and unit counts the GLS
//! forest is a plain random forest, tree for tree.

mod common;

use rand::Rng;
use rfgls::*;

fn reference_predict(trees: &[common::ReferenceTree], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for tree in trees {
        let mut idx = 0;
        loop {
            match tree.nodes[idx] {
                TreeNode::Leaf { value } => {
                    acc += value;
                    break;
                }
                TreeNode::Internal { feature, cutoff, left, right } => {
                    idx = if x[feature] < cutoff { left } else { right };
                }
            }
        }
    }
    acc / trees.len() as f64
}

#[test]
fn identity_forest_equals_reference_random_forest() {
    for case in 0..5u64 {
        let mut gen = rng::stream(123_000 + case, 0);
        let n = gen.gen_range(30..=80);
        let d = gen.gen_range(1..=3);
        let data = common::random_dataset(n, d, &mut gen);
        let params = ForestParams {
            n_tree: 8,
            t_n: usize::MAX,
            t_c: 4,
            m_try: 1.max(d / 2),
            seed: 500 + case,
            resample: Resample::None,
        };
        let forest = fit_forest(&data, PrecisionFactor::identity(n), &params).unwrap();
        let reference: Vec<common::ReferenceTree> = (0..params.n_tree as u64)
            .map(|t| {
                common::grow_reference_cart(
                    &data,
                    params.t_n,
                    params.t_c,
                    params.m_try,
                    &mut rng::stream(params.seed, t),
                )
            })
            .collect();
        for (tree, reference_tree) in forest.trees.iter().zip(&reference) {
            common::trees_match(reference_tree, tree, 1e-10).unwrap();
        }
        for _ in 0..25 {
            let q: Vec<f64> = (0..d).map(|_| gen.gen_range(0.0..1.0)).collect();
            let a = predict_forest_row(&forest, &q);
            let b = reference_predict(&reference, &q);
            assert!((a - b).abs() < 1e-12, "case {case}: {a} vs {b}");
        }
    }
}
