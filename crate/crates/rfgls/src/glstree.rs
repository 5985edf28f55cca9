//! A single GLS-style regression tree: quadratic-form split gains evaluated
//! against a working precision operator, leaf representatives from the global
//! GLS solve, and the level-synchronous growth loop.
//!
//! The split search never rebuilds the K x K Gram matrix per candidate.
//! Within a node sweep the cutoff advances one observation at a time; each
//! move touches only the factor rows containing that observation, and the
//! candidate value is recovered through a 2 x 2 Schur complement against the
//! fixed block of untouched leaves.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::cholfactor::{apply_factor, PrecisionOperator};
use crate::dataset::SpatialDataset;
use crate::error::{Error, Result};

/// Assignment of every observation to one of K contiguous leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    leaf_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Membership {
    /// Everything in one leaf.
    pub fn single_leaf(n: usize) -> Self {
        Membership { leaf_of: vec![0; n], members: vec![(0..n).collect()] }
    }

    pub fn from_leaf_of(leaf_of: Vec<usize>) -> Result<Self> {
        let k = match leaf_of.iter().max() {
            Some(&m) => m + 1,
            None => return Err(Error::InvalidInput("empty membership".into())),
        };
        let mut members = vec![Vec::new(); k];
        for (i, &l) in leaf_of.iter().enumerate() {
            members[l].push(i);
        }
        if members.iter().any(|m| m.is_empty()) {
            return Err(Error::InvalidInput("leaf ids must be contiguous and non-empty".into()));
        }
        Ok(Membership { leaf_of, members })
    }

    pub fn n(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.members.len()
    }

    pub fn leaf_of(&self) -> &[usize] {
        &self.leaf_of
    }

    pub fn members(&self, leaf: usize) -> &[usize] {
        &self.members[leaf]
    }

    /// Split `leaf` in two: the slot keeps the left members, the right
    /// members become leaf K.
    fn apply_split(&mut self, leaf: usize, left: Vec<usize>, right: Vec<usize>) {
        let new_id = self.members.len();
        for &i in &right {
            self.leaf_of[i] = new_id;
        }
        self.members[leaf] = left;
        self.members.push(right);
    }
}

/// A candidate split: route left when x_feature < cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub cutoff: f64,
}

/// Winning split of a node sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub cutoff: f64,
    pub value: f64,
}

/// Leaf representatives from the global GLS solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GlsSolution {
    pub beta: Vec<f64>,
    /// true when the Gram matrix needed the ridge fallback
    pub ridged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal { feature: usize, cutoff: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// A fitted GLS regression tree: split rules plus leaf representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub leaf_count: usize,
    pub t_n: usize,
    pub t_c: usize,
    pub m_try: usize,
    pub ridged: bool,
}

// ---------------------------------------------------------------------------
// Gram-system state shared by the split sweep and the growth loop
// ---------------------------------------------------------------------------

struct GlsContext<'a, 'b> {
    op: &'b PrecisionOperator<'a>,
    dec_y: Vec<f64>,
    membership: Membership,
    /// decorrelated indicator column per leaf: g[c][k] = (B z_c)_k
    g: Vec<Vec<f64>>,
    /// K x K Gram matrix Z^T Q_t Z
    u: DMatrix<f64>,
    /// Z^T Q_t Y
    h: DVector<f64>,
    /// h^T U^{-1} h at the current membership
    parent_fit: f64,
    // scratch for the sweep: per-factor-row left-column value and a stamp
    // marking which sweep last touched it
    ga: Vec<f64>,
    stamp: Vec<u32>,
    epoch: u32,
}

const RIDGE_REL: f64 = 1e-8;

fn solve_spd(u: &DMatrix<f64>, h: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    if let Some(chol) = u.clone().cholesky() {
        return Ok((chol.solve(h), false));
    }
    let k = u.nrows();
    let ridge = RIDGE_REL * u.trace() / k as f64;
    let ridged = u + DMatrix::<f64>::identity(k, k) * ridge;
    match ridged.cholesky() {
        Some(chol) => Ok((chol.solve(h), true)),
        None => Err(Error::DegeneratePartition(
            "Gram matrix rank-deficient even after ridge".into(),
        )),
    }
}

fn invert_spd(u: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if let Some(chol) = u.clone().cholesky() {
        return Ok((chol.inverse(), false));
    }
    let k = u.nrows();
    let ridge = RIDGE_REL * u.trace() / k as f64;
    let ridged = u + DMatrix::<f64>::identity(k, k) * ridge;
    match ridged.cholesky() {
        Some(chol) => Ok((chol.inverse(), true)),
        None => Err(Error::DegeneratePartition(
            "Gram matrix rank-deficient even after ridge".into(),
        )),
    }
}

impl<'a, 'b> GlsContext<'a, 'b> {
    fn new(membership: Membership, op: &'b PrecisionOperator<'a>, y: &[f64]) -> Result<Self> {
        let n = membership.n();
        if op.n() != n || y.len() != n {
            return Err(Error::InvalidInput("operator, membership, and responses must share n".into()));
        }
        let dec_y = apply_factor(op.factor(), y)?;
        let k = membership.leaf_count();
        let g: Vec<Vec<f64>> = (0..k).map(|c| leaf_column(&membership, op, c)).collect();
        let mut u = DMatrix::zeros(k, k);
        let mut h = DVector::zeros(k);
        for a in 0..k {
            h[a] = weighted_dot(op, &g[a], &dec_y);
            for b in 0..=a {
                let v = weighted_dot(op, &g[a], &g[b]);
                u[(a, b)] = v;
                u[(b, a)] = v;
            }
        }
        let (beta, _) = solve_spd(&u, &h)?;
        let parent_fit = h.dot(&beta);
        Ok(GlsContext {
            op,
            dec_y,
            membership,
            g,
            u,
            h,
            parent_fit,
            ga: vec![0.0; n],
            stamp: vec![0; n],
            epoch: 0,
        })
    }

    fn fit_value(&self) -> Result<f64> {
        let (beta, _) = solve_spd(&self.u, &self.h)?;
        Ok(self.h.dot(&beta))
    }

    fn solution(&self) -> Result<GlsSolution> {
        let (beta, ridged) = solve_spd(&self.u, &self.h)?;
        Ok(GlsSolution { beta: beta.iter().copied().collect(), ridged })
    }

    /// Sweep one feature of one node; calls `visit` with every admissible
    /// (cutoff, criterion value) in ascending cutoff order. A candidate is
    /// admissible when both children keep at least `min_child` members.
    fn sweep_feature(
        &mut self,
        node: usize,
        feature: usize,
        min_child: usize,
        data: &SpatialDataset,
        visit: &mut dyn FnMut(f64, f64),
    ) -> Result<()> {
        let k_total = self.membership.leaf_count();
        let others: Vec<usize> = (0..k_total).filter(|&c| c != node).collect();
        let ko = others.len();

        let mut u_others = DMatrix::<f64>::zeros(ko, ko);
        for (a, &ca) in others.iter().enumerate() {
            for (b, &cb) in others.iter().enumerate() {
                u_others[(a, b)] = self.u[(ca, cb)];
            }
        }
        let h_others = DVector::from_iterator(ko, others.iter().map(|&c| self.h[c]));
        let (a_inv, _) = invert_spd(&u_others)?;
        let z0 = &a_inv * &h_others;
        let s0 = h_others.dot(&z0);
        let vnode = DVector::from_iterator(ko, others.iter().map(|&c| self.u[(node, c)]));
        let pnode = &a_inv * &vnode;
        let vnode_z0 = vnode.dot(&z0);
        let vnode_pnode = vnode.dot(&pnode);
        let n = self.membership.n() as f64;

        // members ascending by feature value, index tie-break for determinism
        let mut order: Vec<usize> = self.membership.members(node).to_vec();
        order.sort_by(|&i, &j| {
            data.x(i, feature)
                .partial_cmp(&data.x(j, feature))
                .unwrap()
                .then(i.cmp(&j))
        });

        self.epoch += 1;
        let epoch = self.epoch;
        let mut va = vec![0.0; ko];
        let mut s_aa = 0.0;
        let mut s_ab = 0.0;
        let mut s_bb = self.u[(node, node)];
        let mut h_a = 0.0;
        let mut h_b = self.h[node];

        let total = order.len();
        let mut prev_value = f64::NAN;
        for (pos, &i) in order.iter().enumerate() {
            let value = data.x(i, feature);
            if pos >= min_child && total - pos >= min_child && pos > 0 && value > prev_value {
                // candidate in the gap before this observation
                let cutoff = 0.5 * (prev_value + value);
                let mut va_p = 0.0;
                let mut va_pnode = 0.0;
                let mut va_z0 = 0.0;
                let mut vnode_p = 0.0;
                if ko > 0 {
                    let va_vec = DVector::from_column_slice(&va);
                    let p = &a_inv * &va_vec;
                    va_p = va_vec.dot(&p);
                    va_pnode = va_vec.dot(&pnode);
                    va_z0 = va_vec.dot(&z0);
                    vnode_p = vnode.dot(&p);
                }
                let st_aa = s_aa - va_p;
                let st_ab = s_ab - va_pnode + va_p;
                let st_bb = s_bb - vnode_pnode + vnode_p + va_pnode - va_p;
                let r_a = h_a - va_z0;
                let r_b = h_b - (vnode_z0 - va_z0);
                if let Some(gain) = solve_2x2_quadform(st_aa, st_ab, st_bb, r_a, r_b) {
                    let child_fit = s0 + gain;
                    visit(cutoff, (child_fit - self.parent_fit) / n);
                }
            }
            prev_value = value;

            // move observation i from the right child into the left child
            for &(krow, beta) in self.op.factor().col(i) {
                let k = krow as usize;
                let w = self.op.weight(k);
                if w == 0.0 {
                    continue;
                }
                if self.stamp[k] != epoch {
                    self.stamp[k] = epoch;
                    self.ga[k] = 0.0;
                }
                let ga_k = self.ga[k];
                let gb_k = self.g[node][k] - ga_k;
                for (c, &leaf) in others.iter().enumerate() {
                    va[c] += w * beta * self.g[leaf][k];
                }
                s_aa += w * (2.0 * beta * ga_k + beta * beta);
                s_bb += w * (-2.0 * beta * gb_k + beta * beta);
                s_ab += w * (beta * gb_k - beta * ga_k - beta * beta);
                let wy = w * beta * self.dec_y[k];
                h_a += wy;
                h_b -= wy;
                self.ga[k] = ga_k + beta;
            }
        }
        Ok(())
    }

    fn best_split(
        &mut self,
        node: usize,
        features: &[usize],
        min_child: usize,
        data: &SpatialDataset,
    ) -> Result<Option<BestSplit>> {
        let mut best: Option<BestSplit> = None;
        for &feature in features {
            let mut local: Option<BestSplit> = None;
            self.sweep_feature(node, feature, min_child, data, &mut |cutoff, value| {
                // ties keep the earlier candidate: lower feature, lower cutoff
                if local.map_or(true, |b| improves(value, b.value)) {
                    local = Some(BestSplit { feature, cutoff, value });
                }
            })?;
            if let Some(cand) = local {
                if best.map_or(true, |b| improves(cand.value, b.value)) {
                    best = Some(cand);
                }
            }
        }
        Ok(best)
    }

    fn apply_split(&mut self, node: usize, feature: usize, cutoff: f64, data: &SpatialDataset) -> Result<()> {
        let (left, right): (Vec<usize>, Vec<usize>) = self
            .membership
            .members(node)
            .iter()
            .partition(|&&i| data.x(i, feature) < cutoff);
        debug_assert!(!left.is_empty() && !right.is_empty());
        self.membership.apply_split(node, left, right);
        let k_new = self.membership.leaf_count();

        // refresh the two affected columns from scratch; other entries of the
        // Gram system are unchanged
        self.g[node] = leaf_column(&self.membership, self.op, node);
        self.g.push(leaf_column(&self.membership, self.op, k_new - 1));

        let mut u = DMatrix::<f64>::zeros(k_new, k_new);
        u.view_mut((0, 0), (k_new - 1, k_new - 1)).copy_from(&self.u);
        let mut h = DVector::<f64>::zeros(k_new);
        h.rows_mut(0, k_new - 1).copy_from(&self.h);
        self.u = u;
        self.h = h;
        for &c in &[node, k_new - 1] {
            for other in 0..k_new {
                let v = weighted_dot(self.op, &self.g[c], &self.g[other]);
                self.u[(c, other)] = v;
                self.u[(other, c)] = v;
            }
            let hv = weighted_dot(self.op, &self.g[c], self.dec_y.as_slice());
            self.h[c] = hv;
        }
        self.parent_fit = self.fit_value()?;
        Ok(())
    }
}

fn leaf_column(membership: &Membership, op: &PrecisionOperator<'_>, leaf: usize) -> Vec<f64> {
    let mut col = vec![0.0; membership.n()];
    for &i in membership.members(leaf) {
        for &(k, coef) in op.factor().col(i) {
            col[k as usize] += coef;
        }
    }
    col
}

fn weighted_dot(op: &PrecisionOperator<'_>, a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 0..a.len() {
        acc += op.weight(k) * a[k] * b[k];
    }
    acc
}

/// Split-value ordering: a candidate replaces the incumbent only when it
/// wins by more than relative round-off, so that mathematically tied
/// candidates (e.g. two features inducing the same partition) fall to the
/// deterministic feature/cutoff order whatever arithmetic produced them.
pub fn improves(candidate: f64, best: f64) -> bool {
    candidate - best > 1e-12 * candidate.abs().max(best.abs())
}

fn solve_2x2_quadform(mut aa: f64, ab: f64, mut bb: f64, ra: f64, rb: f64) -> Option<f64> {
    let mut det = aa * bb - ab * ab;
    let scale = (aa.abs() + bb.abs()) * 0.5;
    if !(det > scale * scale * 1e-14) {
        let ridge = RIDGE_REL * scale + 1e-12;
        aa += ridge;
        bb += ridge;
        det = aa * bb - ab * ab;
        if !(det > 0.0) {
            return None;
        }
    }
    // r^T S^{-1} r for the 2x2 system
    Some((bb * ra * ra - 2.0 * ab * ra * rb + aa * rb * rb) / det)
}

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

/// Leaf representatives: beta = (Z^T Q_t Z)^{-1} Z^T Q_t Y via a symmetric
/// positive-definite solve of the K x K Gram matrix. A ridge of
/// 1e-8 * trace / K is added only if the factorization fails, and flagged.
pub fn gls_solve(membership: &Membership, op: &PrecisionOperator<'_>, y: &[f64]) -> Result<GlsSolution> {
    let ctx = GlsContext::new(membership.clone(), op, y)?;
    ctx.solution()
}

/// Quadratic-form loss difference of splitting `node` at `cand`, i.e.
/// (1/n) [fit(children) - fit(parent)] with fit = Y^T Q_t Z beta(Z); the
/// constant Y^T Q_t Y cancels. Returns None when a child would be empty.
pub fn dart_criterion(
    membership: &Membership,
    node: usize,
    cand: &SplitCandidate,
    op: &PrecisionOperator<'_>,
    data: &SpatialDataset,
) -> Result<Option<f64>> {
    if node >= membership.leaf_count() {
        return Err(Error::InvalidInput(format!("leaf {node} out of range")));
    }
    if cand.feature >= data.n_features() {
        return Err(Error::InvalidInput(format!("feature {} out of range", cand.feature)));
    }
    let (left, right): (Vec<usize>, Vec<usize>) = membership
        .members(node)
        .iter()
        .partition(|&&i| data.x(i, cand.feature) < cand.cutoff);
    if left.is_empty() || right.is_empty() {
        return Ok(None);
    }
    let parent = GlsContext::new(membership.clone(), op, &data.y)?;
    let parent_fit = parent.parent_fit;
    let mut child_membership = membership.clone();
    child_membership.apply_split(node, left, right);
    let child = GlsContext::new(child_membership, op, &data.y)?;
    Ok(Some((child.parent_fit - parent_fit) / membership.n() as f64))
}

/// All (cutoff, criterion value) pairs for one feature of one node, in
/// ascending cutoff order, evaluated by the incremental sweep; every gap
/// midpoint is included.
pub fn split_profile(
    membership: &Membership,
    node: usize,
    feature: usize,
    op: &PrecisionOperator<'_>,
    data: &SpatialDataset,
) -> Result<Vec<(f64, f64)>> {
    let mut ctx = GlsContext::new(membership.clone(), op, &data.y)?;
    let mut out = Vec::new();
    ctx.sweep_feature(node, feature, 1, data, &mut |cutoff, value| out.push((cutoff, value)))?;
    Ok(out)
}

/// Best admissible split of `node` over the allowed features: the criterion
/// is evaluated at every gap midpoint leaving at least `min_child` members
/// per child, ties broken by lowest feature index then lowest cutoff. None
/// when no admissible candidate exists.
pub fn best_split(
    membership: &Membership,
    node: usize,
    features: &[usize],
    min_child: usize,
    op: &PrecisionOperator<'_>,
    data: &SpatialDataset,
) -> Result<Option<BestSplit>> {
    let mut ctx = GlsContext::new(membership.clone(), op, &data.y)?;
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();
    ctx.best_split(node, &feats, min_child, data)
}

/// Grow one GLS-style tree by level-synchronous sweeps: a node is swept only
/// while its member count exceeds `t_c` and the global leaf count is below
/// `t_n`; each split attempt draws `m_try` features without replacement from
/// `rng`. `t_c` is the minimum leaf cardinality, so candidates must keep at
/// least `t_c` members on each side. Leaf representatives are computed once
/// at the end from the global GLS solve on the terminal membership.
pub fn grow_tree<R: Rng>(
    data: &SpatialDataset,
    op: &PrecisionOperator<'_>,
    t_n: usize,
    t_c: usize,
    m_try: usize,
    rng: &mut R,
) -> Result<TreeModel> {
    let d = data.n_features();
    if t_n < 1 {
        return Err(Error::InvalidParameter("t_n must be at least 1".into()));
    }
    if t_c < 1 {
        return Err(Error::InvalidParameter("t_c must be at least 1".into()));
    }
    if m_try < 1 || m_try > d {
        return Err(Error::InvalidParameter(format!("m_try = {m_try} must lie in 1..={d}")));
    }
    let n = data.len();
    let mut ctx = GlsContext::new(Membership::single_leaf(n), op, &data.y)?;

    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0 }];
    let mut node_of_leaf: Vec<usize> = vec![0];

    loop {
        let level_leaves = ctx.membership.leaf_count();
        let any_large = (0..level_leaves).any(|l| ctx.membership.members(l).len() > t_c);
        if !(level_leaves < t_n && any_large) {
            break;
        }
        let mut split_any = false;
        for leaf in 0..level_leaves {
            if ctx.membership.members(leaf).len() <= t_c {
                continue;
            }
            if ctx.membership.leaf_count() >= t_n {
                continue;
            }
            let mut feats: Vec<usize> = rand::seq::index::sample(rng, d, m_try).into_vec();
            feats.sort_unstable();
            if let Some(split) = ctx.best_split(leaf, &feats, t_c, data)? {
                ctx.apply_split(leaf, split.feature, split.cutoff, data)?;
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[node_of_leaf[leaf]] = TreeNode::Internal {
                    feature: split.feature,
                    cutoff: split.cutoff,
                    left,
                    right,
                };
                node_of_leaf[leaf] = left;
                node_of_leaf.push(right);
                split_any = true;
            }
        }
        if !split_any {
            break;
        }
    }

    let solution = ctx.solution()?;
    for (leaf, &node_idx) in node_of_leaf.iter().enumerate() {
        nodes[node_idx] = TreeNode::Leaf { value: solution.beta[leaf] };
    }
    Ok(TreeModel {
        nodes,
        n_features: d,
        leaf_count: node_of_leaf.len(),
        t_n,
        t_c,
        m_try,
        ridged: solution.ridged,
    })
}

/// Route `x` down the split rules (left when x_d < c, right when x_d >= c)
/// and return the leaf representative.
pub fn predict_tree(tree: &TreeModel, x: &[f64]) -> f64 {
    assert_eq!(x.len(), tree.n_features, "query row length mismatch");
    let mut idx = 0;
    loop {
        match tree.nodes[idx] {
            TreeNode::Leaf { value } => return value,
            TreeNode::Internal { feature, cutoff, left, right } => {
                idx = if x[feature] < cutoff { left } else { right };
            }
        }
    }
}

/// Line-oriented tree serialization (node id, kind, fields); a debugging and
/// storage format, not a stability contract.
pub fn tree_to_string(tree: &TreeModel) -> String {
    let mut out = format!(
        "TREE v1 nodes={} features={} leaves={} t_n={} t_c={} m_try={} ridged={}\n",
        tree.nodes.len(),
        tree.n_features,
        tree.leaf_count,
        tree.t_n,
        tree.t_c,
        tree.m_try,
        tree.ridged as u8
    );
    for (i, node) in tree.nodes.iter().enumerate() {
        match node {
            TreeNode::Internal { feature, cutoff, left, right } => {
                out.push_str(&format!("{i} internal {feature} {cutoff:.16e} {left} {right}\n"));
            }
            TreeNode::Leaf { value } => {
                out.push_str(&format!("{i} leaf {value:.16e}\n"));
            }
        }
    }
    out
}

pub fn tree_from_str(text: &str) -> Result<TreeModel> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidInput("empty tree text".into()))?;
    if !header.starts_with("TREE v1") {
        return Err(Error::InvalidInput("malformed tree header".into()));
    }
    let mut fields = std::collections::HashMap::new();
    for tok in header.split_whitespace().skip(2) {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let get = |k: &str| -> Result<usize> {
        fields
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::InvalidInput(format!("tree header missing {k}")))
    };
    let n_nodes = get("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::InvalidInput(format!("malformed tree line: {line}"));
        if toks.len() < 3 {
            return Err(bad());
        }
        match toks[1] {
            "internal" if toks.len() == 6 => nodes.push(TreeNode::Internal {
                feature: toks[2].parse().map_err(|_| bad())?,
                cutoff: toks[3].parse().map_err(|_| bad())?,
                left: toks[4].parse().map_err(|_| bad())?,
                right: toks[5].parse().map_err(|_| bad())?,
            }),
            "leaf" if toks.len() == 3 => nodes.push(TreeNode::Leaf {
                value: toks[2].parse().map_err(|_| bad())?,
            }),
            _ => return Err(bad()),
        }
    }
    if nodes.len() != n_nodes {
        return Err(Error::InvalidInput(format!(
            "tree has {} nodes, header says {n_nodes}",
            nodes.len()
        )));
    }
    Ok(TreeModel {
        nodes,
        n_features: get("features")?,
        leaf_count: get("leaves")?,
        t_n: get("t_n")?,
        t_c: get("t_c")?,
        m_try: get("m_try")?,
        ridged: fields.get("ridged").map(|v| v == "1").unwrap_or(false),
    })
}
