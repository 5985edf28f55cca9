//! The forest layer: contrast resampling, an ensemble of GLS trees grown
//! from per-tree deterministic streams, and aggregated prediction.
//!
//! Resampling never touches the raw responses. Each tree draws bootstrap
//! counts over the decorrelated contrasts and the counts enter the fit only
//! through the resampled precision Q_t = Sigma^{-T/2} diag(counts)
//! Sigma^{-1/2}, so every tree sees all n rows of the decorrelated system.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cholfactor::{resampled_precision, PrecisionFactor};
use crate::dataset::SpatialDataset;
use crate::error::{Error, Result};
use crate::glstree::{grow_tree, predict_tree, tree_from_str, tree_to_string, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resample {
    Bootstrap,
    None,
}

/// Forest hyperparameters. `t_n` caps the number of leaves per tree
/// (`usize::MAX` leaves growth bounded only by `t_c`), `t_c` is the minimum
/// member count for a node to be split, `m_try` the number of features drawn
/// per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_tree: usize,
    #[serde(default = "unbounded")]
    pub t_n: usize,
    pub t_c: usize,
    pub m_try: usize,
    pub seed: u64,
    #[serde(default = "default_resample")]
    pub resample: Resample,
}

fn unbounded() -> usize {
    usize::MAX
}

fn default_resample() -> Resample {
    Resample::Bootstrap
}

/// A fitted ensemble plus the working-precision factor it was grown with.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub factor: PrecisionFactor,
    pub params: ForestParams,
}

/// Counts of n uniform draws with replacement from 0..n; the counts always
/// sum to n. Used as the resample weights over decorrelated contrasts.
pub fn draw_resample_counts<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts
}

fn fit_one_tree(
    data: &SpatialDataset,
    factor: &PrecisionFactor,
    params: &ForestParams,
    tree_idx: u64,
) -> Result<TreeModel> {
    let n = data.len();
    let mut rng = crate::rng::stream(params.seed, tree_idx);
    for attempt in 0..2 {
        let counts = match params.resample {
            Resample::Bootstrap => draw_resample_counts(n, &mut rng),
            Resample::None => vec![1; n],
        };
        let op = resampled_precision(factor, counts);
        match grow_tree(data, &op, params.t_n, params.t_c, params.m_try, &mut rng) {
            Ok(tree) => return Ok(tree),
            Err(Error::DegeneratePartition(msg)) if attempt == 0 => {
                // one redraw, then give up
                let _ = msg;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegeneratePartition(format!(
        "tree {tree_idx} degenerate after one resample retry"
    )))
}

/// Fit `params.n_tree` GLS trees against the shared factor. Each tree owns
/// the deterministic stream keyed by (seed, tree index), drawing its resample
/// counts first and its per-split feature subsets after, so the model is
/// identical whatever the thread count.
pub fn fit_forest(data: &SpatialDataset, factor: PrecisionFactor, params: &ForestParams) -> Result<ForestModel> {
    if params.n_tree < 1 {
        return Err(Error::InvalidParameter("n_tree must be at least 1".into()));
    }
    if factor.n() != data.len() {
        return Err(Error::InvalidInput(format!(
            "factor built for n = {}, data has n = {}",
            factor.n(),
            data.len()
        )));
    }
    let trees: Result<Vec<TreeModel>> = (0..params.n_tree as u64)
        .into_par_iter()
        .map(|t| fit_one_tree(data, &factor, params, t))
        .collect();
    Ok(ForestModel { trees: trees?, factor, params: *params })
}

/// Mean of the per-tree predictions at one query row.
pub fn predict_forest_row(forest: &ForestModel, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for tree in &forest.trees {
        acc += predict_tree(tree, x);
    }
    acc / forest.trees.len() as f64
}

/// Mean of the per-tree predictions at each query row.
pub fn predict_forest(forest: &ForestModel, rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|r| predict_forest_row(forest, r)).collect()
}

/// Forest serialization: a versioned header, the params, the embedded factor,
/// then one tree block per tree.
pub fn forest_to_string(forest: &ForestModel) -> String {
    let resample = match forest.params.resample {
        Resample::Bootstrap => "bootstrap",
        Resample::None => "none",
    };
    let mut out = String::from("RFGLS-FOREST v1\n");
    out.push_str(&format!(
        "params n_tree={} t_n={} t_c={} m_try={} seed={} resample={}\n",
        forest.params.n_tree,
        forest.params.t_n,
        forest.params.t_c,
        forest.params.m_try,
        forest.params.seed,
        resample
    ));
    out.push_str("factor\n");
    out.push_str(&crate::cholfactor::factor_to_string(&forest.factor));
    for (t, tree) in forest.trees.iter().enumerate() {
        out.push_str(&format!("tree {t}\n"));
        out.push_str(&tree_to_string(tree));
    }
    out
}

pub fn forest_from_str(text: &str) -> Result<ForestModel> {
    let bad = |msg: &str| Error::InvalidInput(format!("forest parse: {msg}"));
    let mut lines = text.lines().peekable();
    if lines.next() != Some("RFGLS-FOREST v1") {
        return Err(bad("missing magic line"));
    }
    let params_line = lines.next().ok_or_else(|| bad("missing params"))?;
    if !params_line.starts_with("params ") {
        return Err(bad("missing params line"));
    }
    let mut fields = std::collections::HashMap::new();
    for tok in params_line.split_whitespace().skip(1) {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k, v);
        }
    }
    let parse_usize = |k: &str| -> Result<usize> {
        fields.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(&format!("params field {k}")))
    };
    let params = ForestParams {
        n_tree: parse_usize("n_tree")?,
        t_n: parse_usize("t_n")?,
        t_c: parse_usize("t_c")?,
        m_try: parse_usize("m_try")?,
        seed: fields.get("seed").and_then(|v| v.parse().ok()).ok_or_else(|| bad("params field seed"))?,
        resample: match fields.get("resample") {
            Some(&"bootstrap") => Resample::Bootstrap,
            Some(&"none") => Resample::None,
            _ => return Err(bad("params field resample")),
        },
    };
    if lines.next() != Some("factor") {
        return Err(bad("missing factor block"));
    }
    let factor_header = lines.next().ok_or_else(|| bad("missing factor header"))?;
    let n: usize = factor_header
        .split_whitespace()
        .find_map(|t| t.strip_prefix("n=").and_then(|v| v.parse().ok()))
        .ok_or_else(|| bad("factor header n"))?;
    let mut factor_text = String::from(factor_header);
    factor_text.push('\n');
    for _ in 0..n {
        factor_text.push_str(lines.next().ok_or_else(|| bad("truncated factor block"))?);
        factor_text.push('\n');
    }
    let factor = crate::cholfactor::factor_from_str(&factor_text)?;
    let mut trees = Vec::with_capacity(params.n_tree);
    for t in 0..params.n_tree {
        let marker = lines.next().ok_or_else(|| bad("missing tree block"))?;
        if marker != format!("tree {t}") {
            return Err(bad(&format!("expected 'tree {t}', found '{marker}'")));
        }
        let header = lines.next().ok_or_else(|| bad("missing tree header"))?;
        let n_nodes: usize = header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix("nodes=").and_then(|v| v.parse().ok()))
            .ok_or_else(|| bad("tree header nodes"))?;
        let mut tree_text = String::from(header);
        tree_text.push('\n');
        for _ in 0..n_nodes {
            tree_text.push_str(lines.next().ok_or_else(|| bad("truncated tree block"))?);
            tree_text.push('\n');
        }
        trees.push(tree_from_str(&tree_text)?);
    }
    Ok(ForestModel { trees, factor, params })
}
