//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdprel::depgraph::{build_graph, ConllRow, DependencyGraph, Direction};
use sdprel::extract::SdpExample;
use sdprel::labels::BaseLabel;

pub const LABELS: [&str; 6] = ["SBJ", "OBJ", "NMOD", "PMOD", "ADV", "DIR"];

/// A tree as parent pointers: `heads[i]` is the head of node `i + 1`, 0 for
/// the root.
#[derive(Clone, Debug)]
pub struct Tree {
    pub heads: Vec<usize>,
    pub labels: Vec<String>,
}

impl Tree {
    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn graph(&self) -> DependencyGraph {
        let rows: Vec<ConllRow> = self
            .heads
            .iter()
            .zip(&self.labels)
            .enumerate()
            .map(|(i, (&head, label))| ConllRow {
                id: i + 1,
                form: format!("w{}", i + 1),
                head,
                deprel: label.clone(),
            })
            .collect();
        build_graph(&rows).expect("oracle trees are valid")
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut adj = vec![Vec::new(); n + 1];
        for (i, &h) in self.heads.iter().enumerate() {
            if h != 0 {
                adj[i + 1].push(h);
                adj[h].push(i + 1);
            }
        }
        adj
    }

    /// Every simple path from `a` to `b`, by depth-first enumeration.
    pub fn all_simple_paths(&self, a: usize, b: usize) -> Vec<Vec<usize>> {
        fn walk(adj: &[Vec<usize>], node: usize, b: usize, on: &mut Vec<bool>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if node == b {
                out.push(path.clone());
                return;
            }
            for &next in &adj[node] {
                if !on[next] {
                    on[next] = true;
                    path.push(next);
                    walk(adj, next, b, on, path, out);
                    path.pop();
                    on[next] = false;
                }
            }
        }
        let adj = self.adjacency();
        let mut on = vec![false; self.len() + 1];
        on[a] = true;
        let mut out = Vec::new();
        walk(&adj, a, b, &mut on, &mut vec![a], &mut out);
        out
    }

    /// Shortest of all simple paths (the unique one in a tree).
    pub fn exhaustive_shortest(&self, a: usize, b: usize) -> Vec<usize> {
        self.all_simple_paths(a, b)
            .into_iter()
            .min_by_key(Vec::len)
            .expect("trees are connected")
    }

    /// Path through the lowest common ancestor.
    pub fn lca_path(&self, a: usize, b: usize) -> Vec<usize> {
        let ancestors = |mut x: usize| {
            let mut chain = vec![x];
            while self.heads[x - 1] != 0 {
                x = self.heads[x - 1];
                chain.push(x);
            }
            chain
        };
        let (up_a, up_b) = (ancestors(a), ancestors(b));
        let lca = *up_a.iter().find(|x| up_b.contains(x)).expect("common root");
        let mut path: Vec<usize> = up_a.iter().copied().take_while(|&x| x != lca).collect();
        path.push(lca);
        let down: Vec<usize> = up_b.iter().copied().take_while(|&x| x != lca).collect();
        path.extend(down.into_iter().rev());
        path
    }

    /// Direction and label of every arc along `nodes`.
    pub fn steps(&self, nodes: &[usize]) -> Vec<(Direction, String)> {
        nodes
            .windows(2)
            .map(|w| {
                if self.heads[w[0] - 1] == w[1] {
                    (Direction::Up, self.labels[w[0] - 1].clone())
                } else {
                    assert_eq!(self.heads[w[1] - 1], w[0], "not an arc");
                    (Direction::Down, self.labels[w[1] - 1].clone())
                }
            })
            .collect()
    }
}

/// Decode a Prüfer sequence over nodes `1..=n` into an undirected edge list.
pub fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n + 1];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (1..=n).find(|&v| degree[v] == 1).expect("a leaf exists");
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (1..=n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Orient an undirected tree away from `root`.
pub fn orient(edges: &[(usize, usize)], n: usize, root: usize, labels: Vec<String>) -> Tree {
    let mut adj = vec![Vec::new(); n + 1];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut heads = vec![usize::MAX; n];
    heads[root - 1] = 0;
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if heads[v - 1] == usize::MAX {
                heads[v - 1] = u;
                stack.push(v);
            }
        }
    }
    Tree { heads, labels }
}

/// Every labeled tree on `n >= 2` nodes via its Prüfer sequence, each with a
/// root that varies from tree to tree.
pub fn for_each_tree(n: usize, mut f: impl FnMut(&Tree)) {
    let count = n.pow((n - 2) as u32);
    let mut seq = vec![1usize; n - 2];
    for index in 0..count {
        let mut rest = index;
        for slot in seq.iter_mut() {
            *slot = rest % n + 1;
            rest /= n;
        }
        let edges = prufer_edges(&seq, n);
        let labels = (0..n).map(|i| LABELS[(index + i) % LABELS.len()].to_owned()).collect();
        f(&orient(&edges, n, index % n + 1, labels));
    }
}

/// Uniformly attached random tree: each node hangs from an earlier node of
/// a random permutation.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Tree {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0usize; n];
    for i in 1..n {
        heads[order[i] - 1] = order[rng.gen_range(0..i)];
    }
    let labels = (0..n).map(|_| LABELS[rng.gen_range(0..LABELS.len())].to_owned()).collect();
    Tree { heads, labels }
}

/// Up to `count` ordered endpoint pairs; all pairs when there are fewer.
pub fn endpoint_pairs<R: Rng>(n: usize, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (1..=n)
        .flat_map(|a| (1..=n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    if all.len() <= count {
        all
    } else {
        all.choose_multiple(rng, count).copied().collect()
    }
}

/// Compare the library path with the oracles; describe the first mismatch.
pub fn check_pair(tree: &Tree, graph: &DependencyGraph, a: usize, b: usize) -> Result<(), String> {
    let path = sdprel::depgraph::shortest_dependency_path(graph, a, b).map_err(|e| e.to_string())?;
    let expected = if tree.len() <= 12 {
        tree.exhaustive_shortest(a, b)
    } else {
        tree.lca_path(a, b)
    };
    if path.nodes != expected {
        return Err(format!("{:?} {a}->{b}: got {:?}, expected {:?}", tree.heads, path.nodes, expected));
    }
    let steps: Vec<(Direction, String)> = path.steps.iter().map(|s| (s.direction, s.label.clone())).collect();
    if steps != tree.steps(&expected) {
        return Err(format!("{:?} {a}->{b}: step labels differ", tree.heads));
    }
    Ok(())
}

/// Examples whose label is spelled out by one path token.
pub fn synthetic_examples(n: usize, seed: u64) -> Vec<SdpExample> {
    let labels = [BaseLabel::Usage, BaseLabel::Result, BaseLabel::Topic];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = labels[i % labels.len()];
            let mut tokens: Vec<String> = (0..rng.gen_range(3..7)).map(|_| format!("w{}", rng.gen_range(0..15))).collect();
            let at = rng.gen_range(0..tokens.len());
            tokens[at] = format!("<L> dep:{} <L>", label.as_str());
            SdpExample {
                doc_id: format!("D{}", i / 4),
                sentence_index: 0,
                e1: format!("D{}.{}", i / 4, 2 * (i % 4) + 1),
                e2: format!("D{}.{}", i / 4, 2 * (i % 4) + 2),
                label,
                reverse: false,
                path_string: tokens.join(" "),
                model_tokens: tokens,
            }
        })
        .collect()
}
