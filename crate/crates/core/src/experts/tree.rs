//! CART regression trees with variance-reduction splits.
//!
//! Trees grow best-first: the open leaf with the largest impurity decrease is
//! split next, subject to an optional depth limit and an optional leaf-count
//! limit. With only a depth limit this yields the same tree as depth-wise
//! growth. Split ties go to the lowest feature index, then the lowest
//! threshold.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub max_leaves: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            max_leaves: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

/// Column-major view of a feature matrix.
pub struct Columns<'a> {
    pub cols: &'a [Vec<f64>],
}

impl Columns<'_> {
    fn n_features(&self) -> usize {
        self.cols.len()
    }
}

/// Transpose row-major samples into columns.
pub fn to_columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Per-feature sample lists sorted by feature value, stored flat: segment
/// `f` of length `n` holds the samples ordered by column `f`, and a final
/// segment keeps them in their original order. Sorting once and partitioning
/// node ranges in place keeps each node linear in its size.
#[derive(Debug, Clone)]
pub struct Presorted {
    n: usize,
    buf: Vec<usize>,
}

impl Presorted {
    /// Sort `samples` (duplicates kept) along every column.
    pub fn new(x: &Columns<'_>, samples: &[usize]) -> Presorted {
        let n = samples.len();
        let mut buf = Vec::with_capacity(n * (x.n_features() + 1));
        for col in x.cols {
            let start = buf.len();
            buf.extend_from_slice(samples);
            buf[start..].sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        }
        buf.extend_from_slice(samples);
        Presorted { n, buf }
    }

    fn segments(&self) -> usize {
        self.buf.len() / self.n.max(1)
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// A leaf still open for splitting; its samples sit at `lo..hi` of every segment.
struct OpenLeaf {
    node: usize,
    depth: usize,
    lo: usize,
    hi: usize,
    best: Option<SplitCandidate>,
}

impl RegressionTree {
    /// Fit on the rows listed in `samples` (duplicates allowed, as in a
    /// bootstrap draw). `rng` is only consulted when `max_features` is set.
    pub fn fit<R: Rng>(
        x: &Columns<'_>,
        y: &[f64],
        samples: Vec<usize>,
        params: &TreeParams,
        rng: &mut R,
    ) -> RegressionTree {
        let sorted = Presorted::new(x, &samples);
        Self::fit_presorted(x, y, &sorted, params, rng)
    }

    /// As [`RegressionTree::fit`] on samples already sorted by [`Presorted::new`].
    pub fn fit_presorted<R: Rng>(
        x: &Columns<'_>,
        y: &[f64],
        sorted: &Presorted,
        params: &TreeParams,
        rng: &mut R,
    ) -> RegressionTree {
        let n = sorted.n;
        assert!(n > 0, "tree fit needs at least one sample");
        let d = x.n_features();
        assert_eq!(sorted.segments(), d + 1, "presorted for a different matrix");
        let mut buf = sorted.buf.clone();
        let mut scratch = Vec::with_capacity(n);

        let mut nodes = vec![Node::Leaf {
            value: leaf_value(y, &buf[d * n..]),
        }];
        let best = find_split(x, y, &buf, n, 0, n, 0, params, rng);
        let mut open = vec![OpenLeaf {
            node: 0,
            depth: 0,
            lo: 0,
            hi: n,
            best,
        }];
        let mut leaves = 1usize;

        loop {
            if params.max_leaves.is_some_and(|m| leaves >= m) {
                break;
            }
            // highest gain; earliest-created leaf on ties
            let pick = open
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.best.map(|b| (i, b.gain, l.node)))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
            let Some((i, _, _)) = pick else { break };
            let leaf = open.swap_remove(i);
            let split = leaf.best.expect("picked leaf has a split");
            let col = &x.cols[split.feature];

            // stable in-place partition of every segment's node range
            let mut mid = leaf.lo;
            for seg in 0..=d {
                let range = &mut buf[seg * n + leaf.lo..seg * n + leaf.hi];
                scratch.clear();
                let mut w = 0;
                for r in 0..range.len() {
                    let s = range[r];
                    if col[s] <= split.threshold {
                        range[w] = s;
                        w += 1;
                    } else {
                        scratch.push(s);
                    }
                }
                range[w..].copy_from_slice(&scratch);
                mid = leaf.lo + w;
            }

            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf {
                value: leaf_value(y, &buf[d * n + leaf.lo..d * n + mid]),
            });
            nodes.push(Node::Leaf {
                value: leaf_value(y, &buf[d * n + mid..d * n + leaf.hi]),
            });
            nodes[leaf.node] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            leaves += 1;
            for (node, lo, hi) in [(left, leaf.lo, mid), (right, mid, leaf.hi)] {
                let best = find_split(x, y, &buf, n, lo, hi, leaf.depth + 1, params, rng);
                open.push(OpenLeaf {
                    node,
                    depth: leaf.depth + 1,
                    lo,
                    hi,
                    best,
                });
            }
        }
        RegressionTree { nodes }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

/// Mean target, computed as in `stats::mean` without gathering the values.
fn leaf_value(y: &[f64], samples: &[usize]) -> f64 {
    let first = y[samples[0]];
    first + samples.iter().map(|&i| y[i] - first).sum::<f64>() / samples.len() as f64
}

#[allow(clippy::too_many_arguments)]
fn find_split<R: Rng>(
    x: &Columns<'_>,
    y: &[f64],
    buf: &[usize],
    stride: usize,
    lo: usize,
    hi: usize,
    depth: usize,
    params: &TreeParams,
    rng: &mut R,
) -> Option<SplitCandidate> {
    let n = hi - lo;
    let min_leaf = params.min_samples_leaf.max(1);
    if params.max_depth.is_some_and(|d| depth >= d) || n < 2 * min_leaf {
        return None;
    }
    let d = x.n_features();
    let features: Vec<usize> = match params.max_features {
        Some(k) if k < d => {
            let mut f = sample(rng, d, k.max(1)).into_vec();
            f.sort_unstable();
            f
        }
        _ => (0..d).collect(),
    };

    // centre on one sample's target so constant nodes give exactly zero gain
    let samples = &buf[d * stride + lo..d * stride + hi];
    let origin = y[samples[0]];
    let total: f64 = samples.iter().map(|&i| y[i] - origin).sum();
    let base = total * total / n as f64;

    let mut best: Option<SplitCandidate> = None;
    for f in features {
        let col = &x.cols[f];
        let order = &buf[f * stride + lo..f * stride + hi];
        if col[order[0]] == col[order[n - 1]] {
            continue;
        }
        let mut left_sum: f64 = order[..min_leaf - 1].iter().map(|&i| y[i] - origin).sum();
        for k in min_leaf - 1..n - min_leaf {
            left_sum += y[order[k]] - origin;
            let (a, b) = (col[order[k]], col[order[k + 1]]);
            if a == b {
                continue;
            }
            let n_left = k + 1;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - base;
            if gain > 0.0 && best.is_none_or(|bst| gain > bst.gain) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some(SplitCandidate {
                    gain,
                    feature: f,
                    threshold,
                });
            }
        }
    }
    best
}
