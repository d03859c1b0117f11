use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: Some(6),
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Rows with `value <= threshold`.
        left: usize,
        right: usize,
    },
    Leaf {
        class: bool,
        purity: f64,
        samples: usize,
    },
}

/// Binary CART classifier with Gini impurity and axis-aligned splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    feature_names: Vec<String>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: usize,
    pub feature: String,
    pub threshold: f64,
    pub value: f64,
    /// True when the row went to the `> threshold` side.
    pub above: bool,
}

impl TraceStep {
    fn is_indicator(&self) -> bool {
        self.feature.starts_with("activity=")
    }
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_indicator() {
            let name = &self.feature["activity=".len()..];
            if self.above {
                write!(f, "activity is {name}")
            } else {
                write!(f, "activity is not {name}")
            }
        } else {
            let op = if self.above { ">" } else { "<=" };
            write!(f, "{} {} {}", self.feature, op, round_threshold(self.threshold))
        }
    }
}

fn round_threshold(t: f64) -> f64 {
    (t * 1e4).round() / 1e4
}

/// Root-to-leaf path of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub steps: Vec<TraceStep>,
    pub leaf: usize,
    pub abnormal: bool,
    pub purity: f64,
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            write!(f, "{step} → ")?;
        }
        f.write_str(if self.abnormal { "abnormal" } else { "normal" })
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

const MIN_GAIN: f64 = 1e-12;

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    config: TreeConfig,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let pos = idx.iter().filter(|&&i| self.labels[i]).count();
        let n = idx.len();
        // majority class, ties go to normal
        let class = pos * 2 > n;
        let majority = if class { pos } else { n - pos };
        self.nodes.push(Node::Leaf {
            class,
            purity: if n == 0 { 1.0 } else { majority as f64 / n as f64 },
            samples: n,
        });
        self.nodes.len() - 1
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len();
        let pos_total = idx.iter().filter(|&&i| self.labels[i]).count();
        let parent = gini(pos_total, n);
        let n_features = self.rows[idx[0]].len();
        let min_leaf = self.config.min_leaf.max(1);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for feature in 0..n_features {
            order.sort_by(|&a, &b| {
                self.rows[a][feature]
                    .total_cmp(&self.rows[b][feature])
                    .then(a.cmp(&b))
            });
            let mut pos_left = 0;
            for k in 0..n - 1 {
                if self.labels[order[k]] {
                    pos_left += 1;
                }
                let (lo, hi) = (self.rows[order[k]][feature], self.rows[order[k + 1]][feature]);
                let n_left = k + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let n_right = n - n_left;
                let weighted = (n_left as f64 * gini(pos_left, n_left)
                    + n_right as f64 * gini(pos_total - pos_left, n_right))
                    / n as f64;
                let gain = parent - weighted;
                if gain > MIN_GAIN && best.is_none_or(|(_, _, g)| gain > g + MIN_GAIN) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((feature, threshold, gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let pos = idx.iter().filter(|&&i| self.labels[i]).count();
        let pure = pos == 0 || pos == idx.len();
        let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < 2 * self.config.min_leaf.max(1) {
            return self.leaf(idx);
        }
        let Some((feature, threshold, _)) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: false,
            purity: 0.0,
            samples: 0,
        });
        let left = self.grow(&left_idx, depth + 1);
        let right = self.grow(&right_idx, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Fits a tree; `rows` must be non-empty and share one width.
    pub fn fit(feature_names: Vec<String>, rows: &[Vec<f64>], labels: &[bool], config: TreeConfig) -> Self {
        assert_eq!(rows.len(), labels.len(), "one label per row");
        let mut builder = Builder {
            rows,
            labels,
            config,
            nodes: Vec::new(),
        };
        let idx: Vec<usize> = (0..rows.len()).collect();
        if idx.is_empty() {
            builder.leaf(&idx);
        } else {
            builder.grow(&idx, 0);
        }
        DecisionTree {
            feature_names,
            nodes: builder.nodes,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.explain(row).abnormal
    }

    pub fn explain(&self, row: &[f64]) -> Explanation {
        let mut steps = Vec::new();
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { class, purity, .. } => {
                    return Explanation {
                        steps,
                        leaf: id,
                        abnormal: *class,
                        purity: *purity,
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let value = row[*feature];
                    let above = value > *threshold;
                    steps.push(TraceStep {
                        node: id,
                        feature: self.feature_names[*feature].clone(),
                        threshold: *threshold,
                        value,
                        above,
                    });
                    id = if above { *right } else { *left };
                }
            }
        }
    }

    /// Follows recorded branch decisions from the root; returns the node reached.
    pub fn replay(&self, steps: &[TraceStep]) -> Option<usize> {
        let mut id = 0;
        for step in steps {
            match &self.nodes[id] {
                Node::Split { left, right, .. } if step.node == id => {
                    id = if step.above { *right } else { *left };
                }
                _ => return None,
            }
        }
        matches!(self.nodes[id], Node::Leaf { .. }).then_some(id)
    }
}
