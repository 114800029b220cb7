//! The random Borsuk graph and its mirrored geometric twin.
//!
//! Vertices are points of S^d; `i ~ j` iff `dist(x_i, x_j) > pi - alpha`,
//! evaluated as the strict dot-product test `dot(x_i, x_j) < -cos(alpha)`.
//! Construction is either brute force (the oracle) or grid accelerated by
//! bucketing antipodes at cell side `chord(alpha)`; both routes apply the
//! identical predicate, so their adjacency is bit-identical.

use crate::geom::SpherePoint;
use crate::spatial::GridBuckets;
use crate::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("alpha must lie in (0, pi), got {0}")]
    BadAlpha(f64),
    #[error("vertex points must share one dimension")]
    MixedDimensions,
}

#[derive(Debug, Clone)]
pub struct BorsukGraph {
    pub d: usize,
    pub alpha: f64,
    pub points: Vec<SpherePoint>,
    /// Sorted adjacency lists; symmetric, no self-loops.
    pub adj: Vec<Vec<u32>>,
    /// Exact dot-product ties encountered (resolved as non-edges).
    pub ties: usize,
}

impl BorsukGraph {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.len()).max().unwrap_or(0)
    }
}

fn check_inputs(points: &[SpherePoint], alpha: f64) -> Result<(), GraphError> {
    if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
        return Err(GraphError::BadAlpha(alpha));
    }
    if let Some(first) = points.first() {
        if points.iter().any(|p| p.dim() != first.dim()) {
            return Err(GraphError::MixedDimensions);
        }
    }
    Ok(())
}

/// Edge predicate shared by every construction route. Ties (exact equality,
/// a measure-zero event under the continuous model) are counted and resolved
/// as non-edges.
#[inline]
fn edge_test(dot: f64, threshold: f64, ties: &mut usize) -> bool {
    if dot == threshold {
        *ties += 1;
    }
    dot < threshold
}

/// Build the Borsuk graph, choosing brute force for small or dense
/// instances and the antipode grid otherwise.
pub fn build_graph(points: Vec<SpherePoint>, alpha: f64) -> Result<BorsukGraph, GraphError> {
    check_inputs(&points, alpha)?;
    let chord = 2.0 * (alpha / 2.0).sin();
    if points.len() < 64 || chord > 0.5 {
        build_graph_bruteforce(points, alpha)
    } else {
        build_graph_grid(points, alpha)
    }
}

/// O(n^2) construction; the oracle the accelerated route is checked against.
pub fn build_graph_bruteforce(
    points: Vec<SpherePoint>,
    alpha: f64,
) -> Result<BorsukGraph, GraphError> {
    check_inputs(&points, alpha)?;
    let n = points.len();
    let threshold = -alpha.cos();
    let mut adj = vec![Vec::new(); n];
    let mut ties = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if edge_test(points[i].dot(&points[j]), threshold, &mut ties) {
                adj[i].push(j as u32);
                adj[j].push(i as u32);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    if ties > 0 {
        log::warn!("borsuk edge predicate hit {ties} exact dot-product ties");
    }
    let d = points.first().map_or(0, |p| p.dim());
    Ok(BorsukGraph {
        d,
        alpha,
        points,
        adj,
        ties,
    })
}

/// Grid-accelerated construction: bucket the antipodes `-x_j` at cell side
/// `chord(alpha)` in the ambient cube, then test `x_i` against candidates in
/// the 3^{d+1} surrounding cells. Expected O(n * average degree) in the
/// thermodynamic regime.
pub fn build_graph_grid(points: Vec<SpherePoint>, alpha: f64) -> Result<BorsukGraph, GraphError> {
    check_inputs(&points, alpha)?;
    let n = points.len();
    let d = points.first().map_or(0, |p| p.dim());
    let threshold = -alpha.cos();
    let chord = 2.0 * (alpha / 2.0).sin();
    let mut grid = GridBuckets::new(d + 1, chord);
    let mut mirrored = vec![0.0f64; d + 1];
    for (j, p) in points.iter().enumerate() {
        for (m, c) in mirrored.iter_mut().zip(p.coords()) {
            *m = -c;
        }
        grid.insert(&mirrored, j as u32);
    }
    let mut adj = vec![Vec::new(); n];
    let mut ties = 0usize;
    for i in 0..n {
        let pi = &points[i];
        grid.for_each_near(pi.coords(), 1, |j| {
            let j = j as usize;
            // Visit each unordered pair once.
            if j > i && edge_test(pi.dot(&points[j]), threshold, &mut ties) {
                adj[i].push(j as u32);
                adj[j].push(i as u32);
            }
        });
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    if ties > 0 {
        log::warn!("borsuk edge predicate hit {ties} exact dot-product ties");
    }
    Ok(BorsukGraph {
        d,
        alpha,
        points,
        adj,
        ties,
    })
}

// ------------------------------------------------------------------
// Mirrored geometric twin
// ------------------------------------------------------------------

/// The mirrored geometric graph: alongside each sample `x_i` place
/// `y_i = -x_i` and connect `x_i ~ y_j` iff `dist(x_i, y_j) < alpha`
/// (equivalently iff `i ~ j` in the Borsuk graph), keeping the same strict
/// convention so the two views agree edge for edge. Self-pairings `x_i ~ y_i`
/// would need `alpha >= pi` and are excluded.
#[derive(Debug, Clone)]
pub struct GeoMirrorGraph {
    pub d: usize,
    pub alpha: f64,
    pub points: Vec<SpherePoint>,
    /// `adj[i]` lists the j with `x_i ~ y_j`; symmetric as a relation on
    /// index pairs, so it also lists the X-neighbors of `y_i`.
    pub adj: Vec<Vec<u32>>,
}

impl GeoMirrorGraph {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Number of bipartite edges (2x the Borsuk edge count).
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum()
    }
}

/// Build the mirrored graph with the antipode-grid candidate search and the
/// shared strict predicate.
pub fn build_geo_mirror(
    points: Vec<SpherePoint>,
    alpha: f64,
) -> Result<GeoMirrorGraph, GraphError> {
    check_inputs(&points, alpha)?;
    let n = points.len();
    let d = points.first().map_or(0, |p| p.dim());
    let threshold = -alpha.cos();
    let chord = 2.0 * (alpha / 2.0).sin();
    let mut adj = vec![Vec::new(); n];
    let mut ties = 0usize;
    if n < 64 || chord > 0.5 {
        for i in 0..n {
            for j in 0..n {
                if i != j && edge_test(points[i].dot(&points[j]), threshold, &mut ties) {
                    adj[i].push(j as u32);
                }
            }
        }
    } else {
        let mut grid = GridBuckets::new(d + 1, chord);
        let mut mirrored = vec![0.0f64; d + 1];
        for (j, p) in points.iter().enumerate() {
            for (m, c) in mirrored.iter_mut().zip(p.coords()) {
                *m = -c;
            }
            grid.insert(&mirrored, j as u32);
        }
        for i in 0..n {
            let pi = &points[i];
            grid.for_each_near(pi.coords(), 1, |j| {
                if j as usize != i
                    && edge_test(pi.dot(&points[j as usize]), threshold, &mut ties)
                {
                    adj[i].push(j);
                }
            });
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    Ok(GeoMirrorGraph {
        d,
        alpha,
        points,
        adj,
    })
}

// ------------------------------------------------------------------
// Bipartiteness and odd-cycle witnesses
// ------------------------------------------------------------------

/// An odd closed walk in the Borsuk graph: consecutive entries (cyclically)
/// are adjacent and the length is odd and at least 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddCycleWitness {
    pub vertices: Vec<u32>,
}

impl OddCycleWitness {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Check the witness against a graph: odd length >= 3 and every listed
    /// (cyclic) consecutive pair is an edge.
    pub fn verify(&self, g: &BorsukGraph) -> bool {
        let k = self.vertices.len();
        if k < 3 || k % 2 == 0 {
            return false;
        }
        (0..k).all(|i| {
            let u = self.vertices[i] as usize;
            let v = self.vertices[(i + 1) % k] as usize;
            g.has_edge(u, v)
        })
    }
}

/// BFS two-coloring. Returns `(true, None)` for bipartite graphs and
/// `(false, witness)` otherwise; the witness is an odd cycle assembled from
/// the BFS tree paths of the endpoints of a same-layer edge.
pub fn is_bipartite(g: &BorsukGraph) -> (bool, Option<OddCycleWitness>) {
    let n = g.n();
    let mut color = vec![u8::MAX; n];
    let mut parent = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if color[start] != u8::MAX {
            continue;
        }
        color[start] = 0;
        parent[start] = start as u32;
        queue.push_back(start as u32);
        while let Some(u) = queue.pop_front() {
            for &v in &g.adj[u as usize] {
                if color[v as usize] == u8::MAX {
                    color[v as usize] = 1 - color[u as usize];
                    parent[v as usize] = u;
                    queue.push_back(v);
                } else if color[v as usize] == color[u as usize] {
                    return (false, Some(cycle_from_cross_edge(&parent, u, v)));
                }
            }
        }
    }
    (true, None)
}

/// Assemble an odd cycle from a same-color BFS cross edge (u, v): climb the
/// parent chains to the lowest common ancestor and glue the paths.
fn cycle_from_cross_edge(parent: &[u32], u: u32, v: u32) -> OddCycleWitness {
    let chain = |mut x: u32| -> Vec<u32> {
        let mut path = vec![x];
        while parent[x as usize] != x {
            x = parent[x as usize];
            path.push(x);
        }
        path
    };
    let pu = chain(u);
    let pv = chain(v);
    // Paths end at the same root; strip the common suffix down to the LCA.
    let mut iu = pu.len();
    let mut iv = pv.len();
    while iu > 0 && iv > 0 && pu[iu - 1] == pv[iv - 1] {
        iu -= 1;
        iv -= 1;
    }
    // Keep the LCA once: pu[..=iu] goes u -> lca, then lca -> v reversed.
    let mut cycle: Vec<u32> = pu[..=iu].to_vec();
    cycle.extend(pv[..iv].iter().rev());
    OddCycleWitness { vertices: cycle }
}

/// Result of the antipodal-connectivity test on the mirrored graph.
#[derive(Debug, Clone)]
pub struct AntipodalConnectivity {
    pub connected: bool,
    /// A path in the mirrored graph from some `x_i` to its own mirror `y_i`,
    /// encoded as vertex ids with `id < n` the X side and `id >= n` the Y
    /// side (`y_j` is `n + j`).
    pub path: Option<Vec<u32>>,
}

impl AntipodalConnectivity {
    /// Unmirror a connecting path into an odd closed walk of the Borsuk
    /// graph (the alternating-side path maps edge for edge).
    pub fn to_odd_walk(&self, n: usize) -> Option<OddCycleWitness> {
        self.path.as_ref().map(|path| {
            let mut vertices: Vec<u32> = path
                .iter()
                .map(|&v| if v as usize >= n { v - n as u32 } else { v })
                .collect();
            // The walk closes on its start; drop the duplicated endpoint.
            vertices.pop();
            OddCycleWitness { vertices }
        })
    }
}

/// True iff some `x_i` lies in the same mirrored-graph component as its own
/// mirror `y_i`; equivalent to the Borsuk graph being non-bipartite.
pub fn antipodal_connectivity(g: &GeoMirrorGraph) -> AntipodalConnectivity {
    let n = g.n();
    let mut uf = UnionFind::new(2 * n);
    for (i, neigh) in g.adj.iter().enumerate() {
        for &j in neigh {
            uf.union(i, n + j as usize);
        }
    }
    let hit = (0..n).find(|&i| uf.connected(i, n + i));
    let Some(i0) = hit else {
        return AntipodalConnectivity {
            connected: false,
            path: None,
        };
    };
    // BFS in the mirrored graph from x_{i0} to y_{i0} for an explicit path.
    let mut parent = vec![u32::MAX; 2 * n];
    let mut queue = std::collections::VecDeque::new();
    parent[i0] = i0 as u32;
    queue.push_back(i0 as u32);
    let target = (n + i0) as u32;
    'bfs: while let Some(u) = queue.pop_front() {
        let (own, offset) = if (u as usize) < n {
            (u as usize, n as u32)
        } else {
            (u as usize - n, 0)
        };
        for &j in &g.adj[own] {
            let v = j + offset;
            if parent[v as usize] == u32::MAX {
                parent[v as usize] = u;
                if v == target {
                    break 'bfs;
                }
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![target];
    let mut cur = target;
    while parent[cur as usize] != cur {
        cur = parent[cur as usize];
        path.push(cur);
    }
    path.reverse();
    AntipodalConnectivity {
        connected: true,
        path: Some(path),
    }
}

/// Odd-girth audit: every odd closed walk of a Borsuk graph must have
/// length strictly greater than `pi / alpha`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OddGirthReport {
    pub bound: f64,
    pub shortest_found: Option<usize>,
    pub witnesses_checked: usize,
    pub all_above_bound: bool,
}

/// Check the odd-girth floor over BFS witnesses. With `exhaustive` set, a
/// BFS from every vertex computes the exact shortest odd closed walk
/// (affordable for small n); otherwise only the per-component bipartiteness
/// witnesses are examined.
pub fn odd_girth_floor(g: &BorsukGraph, exhaustive: bool) -> OddGirthReport {
    let bound = std::f64::consts::PI / g.alpha;
    let mut lengths = Vec::new();
    if exhaustive {
        let n = g.n();
        let mut level = vec![u32::MAX; n];
        for root in 0..n {
            for l in level.iter_mut() {
                *l = u32::MAX;
            }
            level[root] = 0;
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(root as u32);
            while let Some(u) = queue.pop_front() {
                for &v in &g.adj[u as usize] {
                    if level[v as usize] == u32::MAX {
                        level[v as usize] = level[u as usize] + 1;
                        queue.push_back(v);
                    } else if level[v as usize] == level[u as usize] {
                        lengths.push((level[u as usize] + level[v as usize] + 1) as usize);
                    } else if level[v as usize] + 1 == level[u as usize]
                        || level[u as usize] + 1 == level[v as usize]
                    {
                        // Even closed walk; carries no odd-girth information.
                    }
                }
            }
        }
    } else if let (false, Some(witness)) = is_bipartite(g) {
        debug_assert!(witness.verify(g));
        lengths.push(witness.len());
    }
    let shortest_found = lengths.iter().copied().min();
    OddGirthReport {
        bound,
        shortest_found,
        witnesses_checked: lengths.len(),
        all_above_bound: lengths.iter().all(|&l| l as f64 > bound),
    }
}

/// Count Borsuk edges of a flat coordinate buffer (stride d+1) without
/// materializing adjacency lists; used by the edge-count Monte Carlo where
/// only `W_n` matters. Same grid candidate search and strict predicate as
/// the graph builders.
pub fn count_edges_flat(coords: &[f64], d: usize, alpha: f64) -> u64 {
    let stride = d + 1;
    let n = coords.len() / stride;
    let threshold = -alpha.cos();
    let chord = 2.0 * (alpha / 2.0).sin();
    let mut ties = 0usize;
    let mut count = 0u64;
    if n < 64 || chord > 0.5 {
        for i in 0..n {
            let pi = &coords[i * stride..(i + 1) * stride];
            for j in (i + 1)..n {
                let pj = &coords[j * stride..(j + 1) * stride];
                let dot = pi.iter().zip(pj).map(|(a, b)| a * b).sum::<f64>();
                if edge_test(dot, threshold, &mut ties) {
                    count += 1;
                }
            }
        }
        return count;
    }
    let mut grid = GridBuckets::new(stride, chord);
    let mut mirrored = vec![0.0f64; stride];
    for j in 0..n {
        for (m, c) in mirrored.iter_mut().zip(&coords[j * stride..(j + 1) * stride]) {
            *m = -c;
        }
        grid.insert(&mirrored, j as u32);
    }
    for i in 0..n {
        let pi = &coords[i * stride..(i + 1) * stride];
        grid.for_each_near(pi, 1, |j| {
            let j = j as usize;
            if j > i {
                let pj = &coords[j * stride..(j + 1) * stride];
                let dot = pi.iter().zip(pj).map(|(a, b)| a * b).sum::<f64>();
                if edge_test(dot, threshold, &mut ties) {
                    count += 1;
                }
            }
        });
    }
    count
}

/// Brute-force triangle scan via adjacency bitsets.
pub fn triangle_exists(g: &BorsukGraph) -> bool {
    let n = g.n();
    let words = n.div_ceil(64);
    let mut rows = vec![0u64; n * words];
    for (i, neigh) in g.adj.iter().enumerate() {
        for &j in neigh {
            rows[i * words + (j as usize) / 64] |= 1u64 << (j % 64);
        }
    }
    for (i, neigh) in g.adj.iter().enumerate() {
        for &j in neigh {
            let j = j as usize;
            if j <= i {
                continue;
            }
            let (ri, rj) = (&rows[i * words..(i + 1) * words], &rows[j * words..(j + 1) * words]);
            if ri.iter().zip(rj).any(|(a, b)| a & b != 0) {
                return true;
            }
        }
    }
    false
}
