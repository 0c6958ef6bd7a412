//! Exhaustive solution trees: every correct edge and every applicable,
//! not-yet-used misconception at every node, up to a per-path cap.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Equation;
use crate::malrules::{fire_at, MisconceptionId, MisconceptionSet};
use crate::reduction::{apply_rule, settle, solve_shape, Answer, Edge, Form};
use crate::taxonomy::{correct_successors, ProblemType, Shape};

pub const NODE_BUDGET: usize = 100_000;

/// One outgoing edge of a node, already applied.
#[derive(Clone, Debug)]
pub struct Successor {
    pub edge: Edge,
    pub equation: Equation,
    pub form: Form,
}

/// All children of a node in canonical order: correct edges (or the solve
/// step at `T1`) first, then misconceptions in `ms` order. Misconceptions in
/// `used` are skipped, and none are offered once `used.len() == cap`.
pub fn successors(
    equation: &Equation,
    form: &Form,
    ms: &MisconceptionSet,
    used: &[MisconceptionId],
    cap: usize,
) -> Result<Vec<Successor>> {
    let Form::Typed(ty) = *form else {
        return Ok(Vec::new());
    };
    let shape = Shape::of(equation)?;
    let mut out = Vec::new();
    if ty == ProblemType::T1 {
        // A zero coefficient leaves the node without a correct child.
        if let Ok(value) = solve_shape(&shape, equation) {
            out.push(Successor {
                edge: Edge::Solve,
                equation: Equation::solved(value.clone()),
                form: Form::Solved(value),
            });
        }
    }
    for (_, rule) in correct_successors(ty) {
        let next = apply_rule(&shape, rule).expect("listed edge leaves its source");
        let (equation, reread) = settle(&next)?;
        out.push(Successor {
            edge: Edge::Correct(rule),
            equation,
            form: Form::Typed(reread.ty),
        });
    }
    if used.len() < cap {
        for &m in ms.ids() {
            if used.contains(&m) {
                continue;
            }
            if let Some(result) = fire_at(m, &shape) {
                let (equation, form) = result?;
                out.push(Successor {
                    edge: Edge::Misconception(m),
                    equation,
                    form,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub equation: Equation,
    pub form: Form,
    pub parent: Option<usize>,
    /// Edge from the parent.
    pub edge: Option<Edge>,
    /// Misconceptions on the path from the root, in firing order.
    pub used: Vec<MisconceptionId>,
    pub children: Vec<usize>,
}

/// Nodes are stored in preorder; index 0 is the root.
#[derive(Clone, Debug)]
pub struct SolutionTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub node: usize,
    /// `None` for a node stuck on a zero coefficient.
    pub answer: Option<Answer>,
    pub misconceptions: Vec<MisconceptionId>,
}

pub fn enumerate(e: &Equation, ms: &MisconceptionSet, cap: usize) -> Result<SolutionTree> {
    let root = TreeNode {
        form: Form::Typed(Shape::of(e)?.ty),
        equation: e.clone(),
        parent: None,
        edge: None,
        used: Vec::new(),
        children: Vec::new(),
    };
    let mut tree = SolutionTree { nodes: vec![root] };
    tree.expand(0, ms, cap)?;
    Ok(tree)
}

impl SolutionTree {
    fn expand(&mut self, index: usize, ms: &MisconceptionSet, cap: usize) -> Result<()> {
        let node = &self.nodes[index];
        let children = successors(&node.equation, &node.form, ms, &node.used, cap)?;
        let used = node.used.clone();
        for child in children {
            if self.nodes.len() >= NODE_BUDGET {
                return Err(Error::BudgetExceeded(NODE_BUDGET));
            }
            let mut child_used = used.clone();
            child_used.extend(child.edge.misconception());
            let child_index = self.nodes.len();
            self.nodes.push(TreeNode {
                equation: child.equation,
                form: child.form,
                parent: Some(index),
                edge: Some(child.edge),
                used: child_used,
                children: Vec::new(),
            });
            self.nodes[index].children.push(child_index);
            self.expand(child_index, ms, cap)?;
        }
        Ok(())
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> Vec<Leaf> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.children.is_empty())
            .map(|(i, n)| Leaf {
                node: i,
                answer: n.form.answer(),
                misconceptions: n.used.clone(),
            })
            .collect()
    }

    /// Node indices from the root to `node`.
    pub fn path(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cursor = node;
        while let Some(parent) = self.nodes[cursor].parent {
            path.push(parent);
            cursor = parent;
        }
        path.reverse();
        path
    }

    pub fn path_edges(&self, node: usize) -> Vec<Edge> {
        self.path(node)
            .into_iter()
            .filter_map(|i| self.nodes[i].edge)
            .collect()
    }

    pub fn path_equations(&self, node: usize) -> Vec<&Equation> {
        self.path(node).into_iter().map(|i| &self.nodes[i].equation).collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph solution_tree {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let label = format!("{}\\n{}", node.form, node.equation);
            let _ = writeln!(out, "  n{i} [label=\"{label}\"];");
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let (Some(parent), Some(edge)) = (node.parent, node.edge) else {
                continue;
            };
            let style = match edge {
                Edge::Misconception(id) => format!("color=red, fontcolor=red, label=\"{id}\""),
                other => format!("color=grey, style=solid, label=\"{other}\""),
            };
            let _ = writeln!(out, "  n{parent} -> n{i} [{style}];");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct NodeJson {
            id: usize,
            parent: Option<usize>,
            edge: Option<String>,
            kind: Option<&'static str>,
            form: String,
            equation: String,
            misconceptions: Vec<MisconceptionId>,
        }
        #[derive(Serialize)]
        struct LeafJson {
            node: usize,
            answer: Option<Answer>,
            misconceptions: Vec<MisconceptionId>,
        }
        #[derive(Serialize)]
        struct TreeJson {
            root: String,
            nodes: Vec<NodeJson>,
            leaves: Vec<LeafJson>,
        }
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeJson {
                id,
                parent: n.parent,
                edge: n.edge.map(|e| e.to_string()),
                kind: n.edge.map(|e| match e {
                    Edge::Misconception(_) => "misconception",
                    _ => "correct",
                }),
                form: n.form.to_string(),
                equation: n.equation.to_string(),
                misconceptions: n.used.clone(),
            })
            .collect();
        let leaves = self
            .leaves()
            .into_iter()
            .map(|l| LeafJson {
                node: l.node,
                answer: l.answer,
                misconceptions: l.misconceptions,
            })
            .collect();
        serde_json::to_value(TreeJson {
            root: self.root().equation.to_string(),
            nodes,
            leaves,
        })
        .expect("tree serializes")
    }
}

/// `(answer, misconceptions)` for every leaf that reached an answer.
pub fn leaf_answers(tree: &SolutionTree) -> Vec<(Answer, Vec<MisconceptionId>)> {
    tree.leaves()
        .into_iter()
        .filter_map(|l| l.answer.map(|a| (a, l.misconceptions)))
        .collect()
}
