//! Primal transportation simplex.
//!
//! Nodes are numbered rows first (`0..m`), then columns (`m..m + n`). Arc
//! `(r, c)` has index `r * n + c` and always ships from row `r` to column
//! `c`. The basis is a spanning forest of the admissible graph: one tree per
//! connected component, so forbidden arcs never enter it.
//!
//! Entering and leaving arcs follow Bland's rule (lowest eligible index),
//! which rules out cycling on degenerate pivots.

use std::collections::VecDeque;

use super::{plan_cost, TransportPlan, TransportProblem};
use crate::error::{Error, Result};

pub fn solve_transportation(problem: &TransportProblem) -> Result<TransportPlan> {
    if !problem.is_balanced() {
        let s: u64 = problem.supplies().iter().sum();
        let d: u64 = problem.demands().iter().sum();
        return Err(Error::Infeasible(format!(
            "unbalanced problem: supply {s} != demand {d}; add a slack node first"
        )));
    }
    let (m, n) = (problem.rows(), problem.cols());
    let mut flow = initial_flow(problem)?;
    let mut in_basis = vec![false; m * n];
    let mut basis = initial_basis(problem, &mut flow);
    for &a in &basis {
        in_basis[a] = true;
    }

    let eps = 1e-11 * (1.0 + problem.max_abs_cost());
    let limit = 100 * (m * n + m + n) + 10_000;
    let mut tree = Tree::build(problem, &basis);
    for _ in 0..limit {
        let Some(entering) = entering_arc(problem, &tree, &in_basis, eps) else {
            return Ok(TransportPlan {
                rows: m,
                cols: n,
                objective: plan_cost(problem, &flow),
                flow,
                xi: tree.potential[..m].to_vec(),
                phi: tree.potential[m..].to_vec(),
            });
        };
        let leaving = pivot(problem, &tree, &mut flow, entering);
        in_basis[leaving] = false;
        in_basis[entering] = true;
        let slot = basis
            .iter()
            .position(|&a| a == leaving)
            .expect("leaving arc is basic");
        basis[slot] = entering;
        tree = Tree::build(problem, &basis);
    }
    Err(Error::Numerical(format!(
        "transportation simplex exceeded {limit} pivots"
    )))
}

/// First non-basic admissible arc with negative reduced cost.
fn entering_arc(p: &TransportProblem, tree: &Tree, in_basis: &[bool], eps: f64) -> Option<usize> {
    let (m, n) = (p.rows(), p.cols());
    for r in 0..m {
        let xi = tree.potential[r];
        for c in 0..n {
            let a = r * n + c;
            if in_basis[a] || !p.is_admissible(r, c) {
                continue;
            }
            if p.cost(r, c) - (tree.potential[m + c] - xi) < -eps {
                return Some(a);
            }
        }
    }
    None
}

/// Pushes flow around the cycle closed by `entering` and returns the arc
/// that leaves the basis.
fn pivot(p: &TransportProblem, tree: &Tree, flow: &mut [u64], entering: usize) -> usize {
    let (m, n) = (p.rows(), p.cols());
    let row = entering / n;
    let col = m + entering % n;

    // (arc, increases) for every tree arc on the cycle
    let mut cycle: Vec<(usize, bool)> = Vec::new();
    let (mut a, mut b) = (row, col);
    while a != b {
        if tree.depth[a] >= tree.depth[b] {
            // walking up from the row side: a row node is entered col -> row
            cycle.push((tree.parent_arc[a], a >= m));
            a = tree.parent[a];
        } else {
            cycle.push((tree.parent_arc[b], b < m));
            b = tree.parent[b];
        }
    }

    let mut theta = u64::MAX;
    let mut leaving = usize::MAX;
    for &(arc, inc) in &cycle {
        if inc {
            continue;
        }
        let z = flow[arc];
        if z < theta || (z == theta && arc < leaving) {
            theta = z;
            leaving = arc;
        }
    }
    debug_assert!(leaving != usize::MAX, "cycle has a decreasing arc");

    if theta > 0 {
        flow[entering] += theta;
        for &(arc, inc) in &cycle {
            if inc {
                flow[arc] += theta;
            } else {
                flow[arc] -= theta;
            }
        }
    }
    leaving
}

/// Rooted spanning forest with node potentials.
struct Tree {
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    /// `xi` for row nodes, `phi` for column nodes.
    potential: Vec<f64>,
}

impl Tree {
    fn build(p: &TransportProblem, basis: &[usize]) -> Self {
        let (m, n) = (p.rows(), p.cols());
        let nodes = m + n;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for &a in basis {
            adj[a / n].push(a);
            adj[m + a % n].push(a);
        }
        let mut tree = Tree {
            parent: vec![usize::MAX; nodes],
            parent_arc: vec![usize::MAX; nodes],
            depth: vec![0; nodes],
            potential: vec![0.0; nodes],
        };
        let mut seen = vec![false; nodes];
        let mut queue = VecDeque::new();
        for root in 0..nodes {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            tree.parent[root] = root;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &a in &adj[u] {
                    let (r, c) = (a / n, m + a % n);
                    let v = if u == r { c } else { r };
                    if seen[v] {
                        continue;
                    }
                    seen[v] = true;
                    tree.parent[v] = u;
                    tree.parent_arc[v] = a;
                    tree.depth[v] = tree.depth[u] + 1;
                    // phi(c) - xi(r) = cost on basic arcs
                    let cost = p.cost(r, c - m);
                    tree.potential[v] = if v == c {
                        tree.potential[u] + cost
                    } else {
                        tree.potential[u] - cost
                    };
                    queue.push_back(v);
                }
            }
        }
        tree
    }
}

/// Feasible integer flow: greedy cheapest-first fill, then augmenting paths.
fn initial_flow(p: &TransportProblem) -> Result<Vec<u64>> {
    let (m, n) = (p.rows(), p.cols());
    let mut flow = vec![0u64; m * n];
    let mut row_left: Vec<u64> = p.supplies().to_vec();
    let mut col_left: Vec<u64> = p.demands().to_vec();

    for r in 0..m {
        if row_left[r] == 0 {
            continue;
        }
        let mut order: Vec<usize> = (0..n).filter(|&c| p.is_admissible(r, c)).collect();
        order.sort_by(|&a, &b| p.cost(r, a).total_cmp(&p.cost(r, b)).then(a.cmp(&b)));
        for c in order {
            let q = row_left[r].min(col_left[c]);
            if q > 0 {
                flow[r * n + c] += q;
                row_left[r] -= q;
                col_left[c] -= q;
            }
            if row_left[r] == 0 {
                break;
            }
        }
    }

    // BFS over the residual graph from rows with remaining supply to columns
    // with remaining demand. Row -> column arcs are uncapacitated, column ->
    // row arcs exist where flow can be pulled back.
    let nodes = m + n;
    loop {
        let mut prev = vec![usize::MAX; nodes];
        let mut queue = VecDeque::new();
        for r in 0..m {
            if row_left[r] > 0 {
                prev[r] = r;
                queue.push_back(r);
            }
        }
        let mut sink = None;
        'bfs: while let Some(u) = queue.pop_front() {
            if u < m {
                for c in 0..n {
                    let v = m + c;
                    if prev[v] == usize::MAX && p.is_admissible(u, c) {
                        prev[v] = u;
                        if col_left[c] > 0 {
                            sink = Some(v);
                            break 'bfs;
                        }
                        queue.push_back(v);
                    }
                }
            } else {
                let c = u - m;
                for r in 0..m {
                    if prev[r] == usize::MAX && flow[r * n + c] > 0 {
                        prev[r] = u;
                        queue.push_back(r);
                    }
                }
            }
        }
        let Some(sink) = sink else { break };

        let mut bottleneck = col_left[sink - m];
        let mut v = sink;
        loop {
            let u = prev[v];
            if u == v {
                bottleneck = bottleneck.min(row_left[v]);
                break;
            }
            if u >= m {
                // backward arc (v row, u column)
                bottleneck = bottleneck.min(flow[v * n + (u - m)]);
            }
            v = u;
        }
        let mut v = sink;
        loop {
            let u = prev[v];
            if u == v {
                row_left[v] -= bottleneck;
                break;
            }
            if u < m {
                flow[u * n + (v - m)] += bottleneck;
            } else {
                flow[v * n + (u - m)] -= bottleneck;
            }
            v = u;
        }
        col_left[sink - m] -= bottleneck;
    }

    let stuck: Vec<usize> = (0..m).filter(|&r| row_left[r] > 0).collect();
    if stuck.is_empty() {
        Ok(flow)
    } else {
        Err(Error::Unroutable { nodes: stuck })
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Turns a feasible flow into a basic one: cancels cycles in its support
/// (in the non-increasing cost direction), then completes the support to a
/// spanning forest of the admissible graph with zero-flow arcs.
fn initial_basis(p: &TransportProblem, flow: &mut [u64]) -> Vec<usize> {
    let (m, n) = (p.rows(), p.cols());
    let nodes = m + n;
    let ends = |a: usize| (a / n, m + a % n);
    let mut forest: Vec<usize> = Vec::new();

    let rebuild = |forest: &[usize]| {
        let mut uf = UnionFind::new(nodes);
        for &a in forest {
            let (u, v) = ends(a);
            uf.union(u, v);
        }
        uf
    };
    let mut uf = UnionFind::new(nodes);

    for a in 0..m * n {
        if flow[a] == 0 {
            continue;
        }
        let (u, v) = ends(a);
        if uf.union(u, v) {
            forest.push(a);
            continue;
        }
        // Path v -> u through the forest closes a cycle with arc a (u -> v).
        let path = forest_path(&forest, nodes, n, m, v, u);
        // signs relative to pushing +1 on arc a
        let mut cycle: Vec<(usize, bool)> = vec![(a, true)];
        let mut node = v;
        for &arc in &path {
            let (r, c) = ends(arc);
            let inc = node == r; // row -> column traversal adds flow
            cycle.push((arc, inc));
            node = if node == r { c } else { r };
        }
        let delta: f64 = cycle
            .iter()
            .map(|&(arc, inc)| {
                let c = p.cost(arc / n, arc % n);
                if inc {
                    c
                } else {
                    -c
                }
            })
            .sum();
        if delta > 0.0 {
            cycle.iter_mut().for_each(|e| e.1 = !e.1);
        }
        let theta = cycle
            .iter()
            .filter(|e| !e.1)
            .map(|e| flow[e.0])
            .min()
            .unwrap_or(0);
        for &(arc, inc) in &cycle {
            if inc {
                flow[arc] += theta;
            } else {
                flow[arc] -= theta;
            }
        }
        forest.retain(|&arc| flow[arc] > 0);
        if flow[a] > 0 {
            forest.push(a);
        }
        uf = rebuild(&forest);
    }

    for a in 0..m * n {
        if flow[a] == 0 && p.is_admissible(a / n, a % n) {
            let (u, v) = ends(a);
            if uf.union(u, v) {
                forest.push(a);
            }
        }
    }
    forest
}

/// Arcs on the unique forest path from `from` to `to`.
fn forest_path(forest: &[usize], nodes: usize, n: usize, m: usize, from: usize, to: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for &a in forest {
        adj[a / n].push(a);
        adj[m + a % n].push(a);
    }
    let mut via = vec![usize::MAX; nodes];
    let mut seen = vec![false; nodes];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &a in &adj[u] {
            let (r, c) = (a / n, m + a % n);
            let v = if u == r { c } else { r };
            if !seen[v] {
                seen[v] = true;
                via[v] = a;
                queue.push_back(v);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let a = via[node];
        path.push(a);
        let (r, c) = (a / n, m + a % n);
        node = if node == r { c } else { r };
    }
    path.reverse();
    path
}
