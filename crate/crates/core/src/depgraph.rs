//! Dependency trees and shortest dependency paths between entity tokens.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::EntityMention;
use crate::error::{Error, Result};

/// Token row of a CoNLL-X block; only the columns the graph needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConllRow {
    pub id: usize,
    pub form: String,
    pub head: usize,
    pub deprel: String,
}

/// A parsed sentence as a rooted labeled tree. Nodes are numbered `1..=n`;
/// head `0` is the artificial root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    forms: Vec<String>,
    heads: Vec<usize>,
    labels: Vec<String>,
    dependents: Vec<Vec<usize>>,
}

impl DependencyGraph {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn form(&self, node: usize) -> &str {
        &self.forms[node - 1]
    }

    pub fn head(&self, node: usize) -> usize {
        self.heads[node - 1]
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node - 1]
    }

    /// Dependents of `node` (0 for the root's dependents), ascending.
    pub fn dependents(&self, node: usize) -> &[usize] {
        &self.dependents[node]
    }

    pub fn root(&self) -> usize {
        self.dependents[0][0]
    }

    /// Node whose FORM equals `form`, if any.
    pub fn find_form(&self, form: &str) -> Option<usize> {
        self.forms.iter().position(|f| f == form).map(|i| i + 1)
    }

    fn neighbours(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let head = self.heads[node - 1];
        (head != 0)
            .then_some(head)
            .into_iter()
            .chain(self.dependents[node].iter().copied())
    }
}

/// Validate a CoNLL block as a tree: heads in range, no cycles, one root.
pub fn build_graph(rows: &[ConllRow]) -> Result<DependencyGraph> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::format(None, "empty CoNLL block"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.id != i + 1 {
            return Err(Error::format(
                None,
                format!("token ID {} out of sequence (expected {})", row.id, i + 1),
            ));
        }
        if row.head > n {
            return Err(Error::HeadRange {
                node: row.id,
                head: row.head,
                len: n,
            });
        }
        if row.head == row.id {
            return Err(Error::Cycle { node: row.id });
        }
        if row.deprel.is_empty() {
            return Err(Error::format(None, format!("empty label on node {}", row.id)));
        }
    }

    let heads: Vec<usize> = rows.iter().map(|r| r.head).collect();
    // 0 = unvisited, 1 = on current walk, 2 = reaches the root.
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut walk = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            walk.push(node);
            node = heads[node - 1];
        }
        if state[node] == 1 {
            let cycle_start = walk.iter().position(|&v| v == node).unwrap_or(0);
            let offending = walk[cycle_start..].iter().copied().min().unwrap_or(node);
            return Err(Error::Cycle { node: offending });
        }
        for v in walk {
            state[v] = 2;
        }
    }

    let roots = heads.iter().filter(|&&h| h == 0).count();
    if roots != 1 {
        return Err(Error::RootCount { count: roots });
    }

    let mut dependents = vec![Vec::new(); n + 1];
    for (i, &h) in heads.iter().enumerate() {
        dependents[h].push(i + 1);
    }
    Ok(DependencyGraph {
        forms: rows.iter().map(|r| r.form.clone()).collect(),
        heads,
        labels: rows.iter().map(|r| r.deprel.clone()).collect(),
        dependents,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Dependent to head.
    Up,
    /// Head to dependent.
    Down,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub direction: Direction,
    pub label: String,
}

/// A simple path `nodes[0] -step[0]- nodes[1] ... nodes[n]` through a tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SdpPath {
    pub nodes: Vec<usize>,
    pub steps: Vec<PathStep>,
}

impl SdpPath {
    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        *self.nodes.last().expect("path has at least two nodes")
    }

    /// Number of arcs.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The same path walked from the other end.
    pub fn reversed(&self) -> SdpPath {
        SdpPath {
            nodes: self.nodes.iter().rev().copied().collect(),
            steps: self
                .steps
                .iter()
                .rev()
                .map(|s| PathStep {
                    direction: s.direction.flipped(),
                    label: s.label.clone(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for SdpPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.nodes[0])?;
        for (step, node) in self.steps.iter().zip(&self.nodes[1..]) {
            let arrow = match step.direction {
                Direction::Up => "<-",
                Direction::Down => "->",
            };
            write!(f, " {arrow}{}{arrow} {node}", step.label)?;
        }
        Ok(())
    }
}

/// Breadth-first search over the undirected arcs of `graph` from `a` to `b`.
pub fn shortest_dependency_path(graph: &DependencyGraph, a: usize, b: usize) -> Result<SdpPath> {
    let n = graph.len();
    for node in [a, b] {
        if node == 0 || node > n {
            return Err(Error::Path(format!("node {node} outside 1..={n}")));
        }
    }
    if a == b {
        return Err(Error::Path(format!("endpoints coincide at node {a}")));
    }

    let mut previous = vec![usize::MAX; n + 1];
    previous[a] = a;
    let mut queue = VecDeque::from([a]);
    while let Some(node) = queue.pop_front() {
        if node == b {
            break;
        }
        for next in graph.neighbours(node) {
            if previous[next] == usize::MAX {
                previous[next] = node;
                queue.push_back(next);
            }
        }
    }
    if previous[b] == usize::MAX {
        return Err(Error::Path(format!("no path between {a} and {b}")));
    }

    let mut nodes = vec![b];
    while *nodes.last().unwrap() != a {
        nodes.push(previous[*nodes.last().unwrap()]);
    }
    nodes.reverse();

    let steps = nodes
        .windows(2)
        .map(|pair| {
            let (from, to) = (pair[0], pair[1]);
            if graph.head(from) == to {
                PathStep {
                    direction: Direction::Up,
                    label: graph.label(from).to_owned(),
                }
            } else {
                PathStep {
                    direction: Direction::Down,
                    label: graph.label(to).to_owned(),
                }
            }
        })
        .collect();
    Ok(SdpPath { nodes, steps })
}

pub const LEFT_TOKEN: &str = "<L>";
pub const RIGHT_TOKEN: &str = "<R>";
pub const DEP_PREFIX: &str = "dep:";

/// A rendered path: the human-readable string and the model input tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedPath {
    pub path_string: String,
    pub model_tokens: Vec<String>,
}

/// Render a path with entity ids replaced by their surface words.
///
/// Up steps print as ` ← LABEL ← ` and down steps as ` → LABEL → `. Each
/// step contributes `<L> dep:label <L>` or `<R> dep:label <R>` (label
/// lowercased) to the model tokens.
pub fn render_sdp(
    path: &SdpPath,
    graph: &DependencyGraph,
    entities: &BTreeMap<String, EntityMention>,
) -> Result<RenderedPath> {
    for end in [path.start(), path.end()] {
        let form = graph.form(end);
        if !entities.contains_key(form) {
            return Err(Error::Path(format!("endpoint `{form}` is not an entity id")));
        }
    }

    let words = |node: usize| -> Vec<String> {
        let form = graph.form(node);
        match entities.get(form) {
            Some(e) => e.surface_tokens.clone(),
            None => vec![form.to_owned()],
        }
    };

    let mut text = words(path.nodes[0]).join(" ");
    let mut tokens = words(path.nodes[0]);
    for (step, &node) in path.steps.iter().zip(&path.nodes[1..]) {
        let (arrow, marker) = match step.direction {
            Direction::Up => ("\u{2190}", LEFT_TOKEN),
            Direction::Down => ("\u{2192}", RIGHT_TOKEN),
        };
        let node_words = words(node);
        text.push_str(&format!(" {arrow} {} {arrow} {}", step.label, node_words.join(" ")));
        tokens.push(marker.to_owned());
        tokens.push(format!("{DEP_PREFIX}{}", step.label.to_lowercase()));
        tokens.push(marker.to_owned());
        tokens.extend(node_words);
    }
    Ok(RenderedPath {
        path_string: text,
        model_tokens: tokens,
    })
}
