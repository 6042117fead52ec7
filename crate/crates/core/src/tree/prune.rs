use super::{Split, TreeNode};

/// Root-first chain of cost-complexity pruned subtrees.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedSequence {
    /// `trees[0]` is the root, the last entry is the full tree.
    pub trees: Vec<TreeNode>,
    /// Complexity parameter at which each tree becomes optimal; nonincreasing,
    /// `0` for the full tree.
    pub alphas: Vec<f64>,
    /// Preorder ids (in the full tree) of each tree's internal nodes.
    pub internal_nodes: Vec<Vec<usize>>,
    /// P-values of the splits each tree adds to its predecessor.
    pub added_p_values: Vec<Vec<f64>>,
    /// Sum of all split p-values of each tree.
    pub cum_p: Vec<f64>,
}

impl NestedSequence {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn leaf_counts(&self) -> Vec<usize> {
        self.trees.iter().map(TreeNode::n_leaves).collect()
    }

    /// Index of the subtree selected by complexity parameter `alpha`: every
    /// node whose effective alpha is at most `alpha` is collapsed.
    pub fn index_for_alpha(&self, alpha: f64) -> usize {
        self.alphas
            .iter()
            .position(|&a| a <= alpha)
            .unwrap_or(self.trees.len() - 1)
    }
}

struct Arena<'a> {
    nodes: Vec<&'a TreeNode>,
    children: Vec<Option<(usize, usize)>>,
}

impl<'a> Arena<'a> {
    fn new(root: &'a TreeNode) -> Self {
        let mut arena = Arena {
            nodes: Vec::new(),
            children: Vec::new(),
        };
        arena.push(root);
        arena
    }

    fn push(&mut self, node: &'a TreeNode) -> usize {
        let id = self.nodes.len();
        self.nodes.push(node);
        self.children.push(None);
        if let TreeNode::Split(s) = node {
            let l = self.push(&s.left);
            let r = self.push(&s.right);
            self.children[id] = Some((l, r));
        }
        id
    }

    fn is_internal(&self, id: usize, collapsed: &[bool]) -> bool {
        self.children[id].is_some() && !collapsed[id]
    }

    /// Fills `alphas` with `(id, g(id))` for internal nodes and returns the
    /// subtree's `(R(T_t), |T_t|)`.
    fn effective_alphas(&self, id: usize, collapsed: &[bool], alphas: &mut Vec<(usize, f64)>) -> (f64, usize) {
        if !self.is_internal(id, collapsed) {
            return (self.nodes[id].sse(), 1);
        }
        let (l, r) = self.children[id].unwrap();
        let (rl, nl) = self.effective_alphas(l, collapsed, alphas);
        let (rr, nr) = self.effective_alphas(r, collapsed, alphas);
        let (risk, leaves) = (rl + rr, nl + nr);
        alphas.push((id, (self.nodes[id].sse() - risk) / (leaves - 1) as f64));
        (risk, leaves)
    }

    fn internal_ids(&self, id: usize, collapsed: &[bool], out: &mut Vec<usize>) {
        if self.is_internal(id, collapsed) {
            out.push(id);
            let (l, r) = self.children[id].unwrap();
            self.internal_ids(l, collapsed, out);
            self.internal_ids(r, collapsed, out);
        }
    }

    fn build(&self, id: usize, collapsed: &[bool]) -> TreeNode {
        let node = self.nodes[id];
        match node {
            TreeNode::Split(s) if !collapsed[id] => {
                let (l, r) = self.children[id].unwrap();
                TreeNode::Split(Split {
                    j: s.j,
                    threshold: s.threshold,
                    p_value: s.p_value,
                    n: s.n,
                    mean: s.mean,
                    sse: s.sse,
                    left: Box::new(self.build(l, collapsed)),
                    right: Box::new(self.build(r, collapsed)),
                })
            }
            _ => node.collapsed(),
        }
    }
}

/// Weakest-link pruning from `full` down to its root.
///
/// Each step collapses every internal node whose effective alpha
/// `g(t) = (R(t) - R(T_t)) / (|T_t| - 1)` equals the current minimum (up to a
/// relative `1e-12` of the root SSE), so one step may remove several splits.
pub fn cost_complexity_sequence(full: &TreeNode) -> NestedSequence {
    let arena = Arena::new(full);
    let tol = 1e-12 * full.sse().abs();
    let mut collapsed = vec![false; arena.nodes.len()];

    let mut trees = vec![full.clone()];
    let mut alphas = vec![0.0];
    let mut internal = Vec::new();
    let mut ids = Vec::new();
    arena.internal_ids(0, &collapsed, &mut ids);
    internal.push(ids);

    loop {
        let mut g = Vec::new();
        arena.effective_alphas(0, &collapsed, &mut g);
        let Some(g_min) = g.iter().map(|&(_, a)| a).reduce(f64::min) else {
            break;
        };
        for &(id, a) in &g {
            if a <= g_min + tol {
                collapsed[id] = true;
            }
        }
        trees.push(arena.build(0, &collapsed));
        alphas.push(g_min.max(0.0));
        let mut ids = Vec::new();
        arena.internal_ids(0, &collapsed, &mut ids);
        internal.push(ids);
    }

    trees.reverse();
    alphas.reverse();
    internal.reverse();
    // Weakest-link minima are nondecreasing in exact arithmetic.
    for k in 1..alphas.len() {
        alphas[k] = alphas[k].min(alphas[k - 1]);
    }

    let p_of = |id: usize| match arena.nodes[id] {
        TreeNode::Split(s) => s.p_value,
        TreeNode::Leaf(_) => unreachable!("internal ids refer to splits"),
    };
    let added_p_values = internal
        .iter()
        .enumerate()
        .map(|(k, ids)| {
            let prev: &[usize] = if k == 0 { &[] } else { &internal[k - 1] };
            ids.iter().filter(|id| !prev.contains(id)).map(|&id| p_of(id)).collect()
        })
        .collect();
    let cum_p = trees.iter().map(TreeNode::cumulative_p).collect();

    NestedSequence {
        trees,
        alphas,
        internal_nodes: internal,
        added_p_values,
        cum_p,
    }
}
