//! Chromatic number machinery: greedy upper bound, exact DSATUR-ordered
//! branch-and-bound with a node budget, and the cap-covering lower-bound
//! certificate (every vertex cap of opening `alpha/2` covering the sphere
//! forces chromatic number at least d+2).

use crate::geom::{geodesic_distance, sample_uniform, SpherePoint};
use crate::graph::BorsukGraph;
use crate::spatial::GridBuckets;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ColorError {
    #[error("palette size must be at least 1")]
    ZeroPalette,
    #[error("palette sizes above 64 are not supported")]
    PaletteTooLarge,
    #[error("net spacing must satisfy 0 < beta < alpha/2, got beta={beta}, alpha={alpha}")]
    BadNetSpacing { beta: f64, alpha: f64 },
    #[error("could not build a verified beta-net at spacing {0}")]
    NetConstruction(f64),
}

/// A proper coloring: one color index per vertex, palette size `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coloring {
    pub colors: Vec<u32>,
    pub palette: u32,
}

impl Coloring {
    pub fn is_proper(&self, g: &BorsukGraph) -> bool {
        self.colors.iter().all(|&c| c < self.palette)
            && g.adj.iter().enumerate().all(|(i, neigh)| {
                neigh
                    .iter()
                    .all(|&j| self.colors[i] != self.colors[j as usize])
            })
    }
}

/// Outcome of a bounded exact decision.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Colorable(Coloring),
    NotColorable,
    /// Node budget exhausted before a decision was reached.
    Undecided,
}

impl Decision {
    pub fn decided(&self) -> Option<bool> {
        match self {
            Decision::Colorable(_) => Some(true),
            Decision::NotColorable => Some(false),
            Decision::Undecided => None,
        }
    }
}

/// Greedy coloring in descending-degree order; uses at most `maxdeg + 1`
/// colors.
pub fn greedy_color(g: &BorsukGraph) -> Coloring {
    let n = g.n();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g.adj[v as usize].len()));
    let mut colors = vec![u32::MAX; n];
    let mut palette = 0;
    let mut forbidden = vec![false; n + 1];
    for &v in &order {
        for &u in &g.adj[v as usize] {
            let c = colors[u as usize];
            if c != u32::MAX {
                forbidden[c as usize] = true;
            }
        }
        let c = (0..).find(|&c| !forbidden[c as usize]).unwrap();
        colors[v as usize] = c;
        palette = palette.max(c + 1);
        for &u in &g.adj[v as usize] {
            let c = colors[u as usize];
            if c != u32::MAX {
                forbidden[c as usize] = false;
            }
        }
    }
    Coloring { colors, palette }
}

/// Default node budget for the exact solver.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

struct Dsatur<'a> {
    adj: &'a [Vec<u32>],
    k: u32,
    colors: Vec<u32>,
    /// Bitmask of colors seen among each vertex's neighbors.
    sat_mask: Vec<u64>,
    sat_count: Vec<u32>,
    uncolored: usize,
    budget: u64,
}

enum Search {
    Found,
    Exhausted,
    OutOfBudget,
}

impl<'a> Dsatur<'a> {
    fn pick_vertex(&self) -> usize {
        let mut best = usize::MAX;
        let mut best_key = (0u32, 0usize);
        for v in 0..self.adj.len() {
            if self.colors[v] != u32::MAX {
                continue;
            }
            let key = (self.sat_count[v], self.adj[v].len());
            if best == usize::MAX || key > best_key {
                best = v;
                best_key = key;
            }
        }
        best
    }

    fn assign(&mut self, v: usize, c: u32, touched: &mut Vec<u32>) {
        self.colors[v] = c;
        self.uncolored -= 1;
        for &u in &self.adj[v] {
            let u = u as usize;
            if self.colors[u] == u32::MAX && self.sat_mask[u] & (1 << c) == 0 {
                self.sat_mask[u] |= 1 << c;
                self.sat_count[u] += 1;
                touched.push(u as u32);
            }
        }
    }

    fn unassign(&mut self, v: usize, c: u32, touched: &[u32]) {
        self.colors[v] = u32::MAX;
        self.uncolored += 1;
        for &u in touched {
            self.sat_mask[u as usize] &= !(1 << c);
            self.sat_count[u as usize] -= 1;
        }
    }

    fn search(&mut self, used: u32) -> Search {
        if self.uncolored == 0 {
            return Search::Found;
        }
        if self.budget == 0 {
            return Search::OutOfBudget;
        }
        self.budget -= 1;
        let v = self.pick_vertex();
        if self.sat_count[v] >= self.k {
            return Search::Exhausted;
        }
        // Color-symmetry breaking: at most one previously unused color.
        let limit = self.k.min(used + 1);
        let mut touched = Vec::new();
        for c in 0..limit {
            if self.sat_mask[v] & (1 << c) != 0 {
                continue;
            }
            touched.clear();
            self.assign(v, c, &mut touched);
            match self.search(used.max(c + 1)) {
                Search::Found => return Search::Found,
                Search::OutOfBudget => return Search::OutOfBudget,
                Search::Exhausted => self.unassign(v, c, &touched),
            }
        }
        Search::Exhausted
    }
}

/// Exact k-colorability by DSATUR-ordered backtracking with color-symmetry
/// breaking and connected-component decomposition. The node budget guards
/// against pathological instances: exhausting it yields `Undecided`, never a
/// wrong answer.
pub fn k_colorable(g: &BorsukGraph, k: u32, budget: u64) -> Result<Decision, ColorError> {
    if k == 0 {
        return Err(ColorError::ZeroPalette);
    }
    if k > 64 {
        return Err(ColorError::PaletteTooLarge);
    }
    let n = g.n();
    if k == 1 {
        return Ok(if g.edge_count() == 0 {
            Decision::Colorable(Coloring {
                colors: vec![0; n],
                palette: 1,
            })
        } else {
            Decision::NotColorable
        });
    }
    let mut colors = vec![u32::MAX; n];
    let mut budget = budget;
    // Decide component by component; a failure anywhere decides the graph.
    let mut comp_id = vec![u32::MAX; n];
    let mut comps: Vec<Vec<u32>> = Vec::new();
    for s in 0..n {
        if comp_id[s] != u32::MAX {
            continue;
        }
        let id = comps.len() as u32;
        let mut stack = vec![s as u32];
        let mut members = Vec::new();
        comp_id[s] = id;
        while let Some(v) = stack.pop() {
            members.push(v);
            for &u in &g.adj[v as usize] {
                if comp_id[u as usize] == u32::MAX {
                    comp_id[u as usize] = id;
                    stack.push(u);
                }
            }
        }
        comps.push(members);
    }
    for members in &comps {
        // Local subgraph with remapped indices.
        let mut local = vec![u32::MAX; n];
        for (li, &v) in members.iter().enumerate() {
            local[v as usize] = li as u32;
        }
        let adj: Vec<Vec<u32>> = members
            .iter()
            .map(|&v| {
                g.adj[v as usize]
                    .iter()
                    .map(|&u| local[u as usize])
                    .collect()
            })
            .collect();
        let mut solver = Dsatur {
            adj: &adj,
            k,
            colors: vec![u32::MAX; members.len()],
            sat_mask: vec![0; members.len()],
            sat_count: vec![0; members.len()],
            uncolored: members.len(),
            budget,
        };
        match solver.search(0) {
            Search::Found => {
                for (li, &v) in members.iter().enumerate() {
                    colors[v as usize] = solver.colors[li];
                }
                budget = solver.budget;
            }
            Search::Exhausted => return Ok(Decision::NotColorable),
            Search::OutOfBudget => return Ok(Decision::Undecided),
        }
    }
    let coloring = Coloring { colors, palette: k };
    debug_assert!(coloring.is_proper(g));
    Ok(Decision::Colorable(coloring))
}

/// Result of a chromatic-number computation; the budgeted solver may only
/// be able to bracket the value.
#[derive(Debug, Clone, PartialEq)]
pub enum ChromaticResult {
    Exact(u32, Coloring),
    /// Budget ran out: `chi` is somewhere in `[lo, hi]`.
    Bounds { lo: u32, hi: u32 },
}

impl ChromaticResult {
    pub fn exact(&self) -> Option<u32> {
        match self {
            ChromaticResult::Exact(k, _) => Some(*k),
            ChromaticResult::Bounds { .. } => None,
        }
    }
}

/// Smallest k with `k_colorable` true, searching upward from 1. The greedy
/// palette caps the search.
pub fn chromatic_number(g: &BorsukGraph, budget: u64) -> ChromaticResult {
    let hi = greedy_color(g).palette.max(1);
    for k in 1..=hi {
        match k_colorable(g, k, budget).expect("palette in range") {
            Decision::Colorable(c) => return ChromaticResult::Exact(k, c),
            Decision::NotColorable => continue,
            Decision::Undecided => return ChromaticResult::Bounds { lo: k, hi },
        }
    }
    // The greedy coloring itself witnesses hi-colorability, so the loop can
    // only fall through on budget exhaustion at every k.
    ChromaticResult::Bounds { lo: 1, hi }
}

// ------------------------------------------------------------------
// Cap-cover certificate
// ------------------------------------------------------------------

/// Certificate that the caps of opening `alpha/2` around the vertices cover
/// the whole sphere, hence `chi >= d+2`.
///
/// The check runs on a beta-net: validity requires every net point to be
/// within `alpha/2 - beta` of some vertex, so that true coverage follows
/// from net fineness. A failed check is inconclusive, never a disproof.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub net_size: usize,
    pub beta: f64,
    /// Required coverage margin `alpha/2 - beta`.
    pub margin: f64,
    pub valid: bool,
    /// Net points that missed the margin, with their nearest-vertex
    /// geodesic distances.
    pub failures: Vec<(usize, f64)>,
}

/// Fibonacci spiral net on S^2; near-uniform with covering radius about
/// `2.6 / sqrt(n)`.
pub fn fibonacci_net(n: usize) -> Vec<SpherePoint> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden);
            SpherePoint::new(vec![r * phi.cos(), r * phi.sin(), z]).unwrap()
        })
        .collect()
}

/// Covering radius of a net, estimated as the maximum over `probes` sampled
/// sphere points of the nearest-net-point distance.
pub fn sampled_covering_radius(net: &[SpherePoint], d: usize, probes: usize, seed: u64) -> f64 {
    let samples = sample_uniform(d, probes, seed).expect("d >= 1");
    samples
        .iter()
        .map(|p| {
            net.iter()
                .map(|q| geodesic_distance(p, q).unwrap())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Build a beta-net of S^d: the Fibonacci spiral for d=2, otherwise a
/// random net greedily thinned to spacing beta/2. Either way the covering
/// radius is verified by sampling (with a safety margin) and the net is
/// densified until verification passes.
pub fn build_net(d: usize, beta: f64, seed: u64) -> Result<Vec<SpherePoint>, ColorError> {
    let verify_probes = 4000;
    if d == 2 {
        let mut n = ((2.6 / beta).powi(2).ceil() as usize).max(8);
        for _ in 0..8 {
            let net = fibonacci_net(n);
            if sampled_covering_radius(&net, d, verify_probes, seed ^ 0x9e37) <= 0.97 * beta {
                return Ok(net);
            }
            n = n * 3 / 2;
        }
        return Err(ColorError::NetConstruction(beta));
    }
    // General d: oversample, thin greedily to a beta/2-separated subset,
    // verify the covering radius by sampling.
    let cap = crate::geom::cap_measure((beta / 2.0).min(std::f64::consts::PI), d)
        .map_err(|_| ColorError::NetConstruction(beta))?;
    let mut m = ((20.0 / cap) as usize).clamp(64, 2_000_000);
    for round in 0..6u64 {
        let cloud = sample_uniform(d, m, seed.wrapping_add(round)).expect("d >= 1");
        let mut net: Vec<SpherePoint> = Vec::new();
        for p in &cloud {
            if net
                .iter()
                .all(|q| geodesic_distance(p, q).unwrap() >= beta / 2.0)
            {
                net.push(p.clone());
            }
        }
        if sampled_covering_radius(&net, d, verify_probes, seed ^ 0x517c) <= 0.97 * beta {
            return Ok(net);
        }
        m *= 2;
    }
    Err(ColorError::NetConstruction(beta))
}

/// Evaluate the cap-cover certificate for a graph at net spacing `beta`.
pub fn cap_cover_certificate(g: &BorsukGraph, beta: f64) -> Result<CoverCertificate, ColorError> {
    if !(beta > 0.0 && beta < g.alpha / 2.0) {
        return Err(ColorError::BadNetSpacing {
            beta,
            alpha: g.alpha,
        });
    }
    let margin = g.alpha / 2.0 - beta;
    if g.n() == 0 {
        // No vertices cover nothing; skip net construction (the empty graph
        // does not even carry a dimension).
        return certificate_against_net(g, &[], beta, margin);
    }
    let net = build_net(g.d, beta, 0xC0FFEE)?;
    certificate_against_net(g, &net, beta, margin)
}

/// Core certificate check against an explicit net (exposed for tests that
/// want to control the net).
pub fn certificate_against_net(
    g: &BorsukGraph,
    net: &[SpherePoint],
    beta: f64,
    margin: f64,
) -> Result<CoverCertificate, ColorError> {
    let mut failures = Vec::new();
    if g.n() == 0 {
        failures.extend((0..net.len()).map(|i| (i, f64::INFINITY)));
        return Ok(CoverCertificate {
            net_size: net.len(),
            beta,
            margin,
            // An empty vertex set covers nothing.
            valid: false,
            failures,
        });
    }
    // Nearest-vertex queries: brute force for small products, grid buckets
    // (cell side = margin chord) for large nets. A grid miss means the
    // margin is missed, which is exactly the failure condition.
    let use_grid = g.n() * net.len() > 1_000_000;
    let chord_margin = 2.0 * (margin.min(std::f64::consts::PI) / 2.0).sin();
    let mut grid = GridBuckets::new(g.d + 1, chord_margin.max(1e-6));
    if use_grid {
        for (i, p) in g.points.iter().enumerate() {
            grid.insert(p.coords(), i as u32);
        }
    }
    for (qi, q) in net.iter().enumerate() {
        let mut nearest = f64::INFINITY;
        if use_grid {
            grid.for_each_near(q.coords(), 1, |i| {
                let dist = geodesic_distance(q, &g.points[i as usize]).unwrap();
                nearest = nearest.min(dist);
            });
        } else {
            for p in &g.points {
                nearest = nearest.min(geodesic_distance(q, p).unwrap());
            }
        }
        if !(nearest <= margin) {
            failures.push((qi, nearest));
        }
    }
    Ok(CoverCertificate {
        net_size: net.len(),
        beta,
        margin,
        valid: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, is_bipartite};

    fn ring_graph(n: usize) -> BorsukGraph {
        // Odd n: points at multiples of (n-1)/2 * 2pi/n around the equator
        // form an n-cycle under the near-antipodal rule.
        assert!(n % 2 == 1);
        let step = (n - 1) as f64 / 2.0 * 2.0 * std::f64::consts::PI / n as f64;
        let pts: Vec<SpherePoint> = (0..n)
            .map(|k| {
                let t = k as f64 * step;
                SpherePoint::new(vec![t.cos(), t.sin(), 0.0]).unwrap()
            })
            .collect();
        build_graph(pts, std::f64::consts::PI / n as f64 + 0.01).unwrap()
    }

    #[test]
    fn greedy_on_trivial_graphs() {
        let g = build_graph(sample_uniform(2, 10, 1).unwrap(), 1e-6).unwrap();
        let c = greedy_color(&g);
        assert_eq!(c.palette, 1);
        assert!(c.is_proper(&g));
        let pts = vec![
            SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap(),
            SpherePoint::new(vec![-1.0, 1e-6, 0.0]).unwrap(),
        ];
        let g = build_graph(pts, 0.5).unwrap();
        assert_eq!(g.edge_count(), 1);
        let c = greedy_color(&g);
        assert_eq!(c.palette, 2);
        assert!(c.is_proper(&g));
    }

    #[test]
    fn greedy_on_five_cycle_stays_within_degree_bound() {
        let g = ring_graph(5);
        assert_eq!(g.edge_count(), 5);
        let c = greedy_color(&g);
        assert!(c.is_proper(&g));
        assert!(c.palette <= 3);
    }

    #[test]
    fn k_colorable_edge_cases() {
        let g = build_graph(sample_uniform(2, 8, 2).unwrap(), 1e-6).unwrap();
        assert!(matches!(
            k_colorable(&g, 1, 1000).unwrap(),
            Decision::Colorable(_)
        ));
        let g = ring_graph(5);
        assert_eq!(k_colorable(&g, 1, 1000).unwrap(), Decision::NotColorable);
        assert_eq!(k_colorable(&g, 2, 100_000).unwrap(), Decision::NotColorable);
        assert!(matches!(
            k_colorable(&g, 3, 100_000).unwrap(),
            Decision::Colorable(_)
        ));
        assert!(k_colorable(&g, 0, 10).is_err());
    }

    #[test]
    fn solver_matches_exhaustive_enumeration() {
        // Spot check against brute enumeration on small random instances;
        // the acceptance suite runs the full 200-instance version.
        for seed in 0..40 {
            let n = 6 + (seed as usize % 7);
            let pts = sample_uniform(2, n, 7000 + seed).unwrap();
            let alpha = 1.0 + (seed % 4) as f64 * 0.5;
            let g = build_graph(pts, alpha).unwrap();
            for k in 2..=3u32 {
                let expected = exhaustive_k_colorable(&g, k);
                let got = k_colorable(&g, k, u64::MAX).unwrap();
                assert_eq!(got.decided(), Some(expected), "seed {seed} k {k}");
                if let Decision::Colorable(c) = got {
                    assert!(c.is_proper(&g));
                }
            }
        }
    }

    /// Dumb complete enumeration over k^n assignments (incremental conflict
    /// checking only), independent of the DSATUR solver.
    fn exhaustive_k_colorable(g: &BorsukGraph, k: u32) -> bool {
        fn rec(g: &BorsukGraph, k: u32, colors: &mut Vec<u32>, v: usize) -> bool {
            if v == g.n() {
                return true;
            }
            for c in 0..k {
                let ok = g.adj[v]
                    .iter()
                    .filter(|&&u| (u as usize) < v)
                    .all(|&u| colors[u as usize] != c);
                if ok {
                    colors[v] = c;
                    if rec(g, k, colors, v + 1) {
                        return true;
                    }
                }
            }
            false
        }
        rec(g, k, &mut vec![u32::MAX; g.n()], 0)
    }

    #[test]
    fn budget_exhaustion_reports_undecided() {
        let pts = sample_uniform(2, 60, 77).unwrap();
        let g = build_graph(pts, 2.0).unwrap();
        assert_eq!(k_colorable(&g, 3, 1).unwrap(), Decision::Undecided);
    }

    #[test]
    fn chromatic_number_small_cases() {
        let g = build_graph(sample_uniform(2, 9, 3).unwrap(), 1e-6).unwrap();
        assert_eq!(chromatic_number(&g, 1_000_000).exact(), Some(1));
        let g = ring_graph(5);
        assert_eq!(chromatic_number(&g, 1_000_000).exact(), Some(3));
        // chi >= 3 whenever non-bipartite; chi <= greedy palette.
        for seed in 0..20 {
            let pts = sample_uniform(2, 40, 800 + seed).unwrap();
            let g = build_graph(pts, 1.5).unwrap();
            let greedy = greedy_color(&g).palette;
            let chi = chromatic_number(&g, u64::MAX).exact().unwrap();
            assert!(chi <= greedy);
            if !is_bipartite(&g).0 {
                assert!(chi >= 3);
            }
        }
    }

    #[test]
    fn net_spacing_validation() {
        let g = build_graph(sample_uniform(2, 10, 5).unwrap(), 0.4).unwrap();
        assert!(matches!(
            cap_cover_certificate(&g, 0.3),
            Err(ColorError::BadNetSpacing { .. })
        ));
        assert!(matches!(
            cap_cover_certificate(&g, 0.0),
            Err(ColorError::BadNetSpacing { .. })
        ));
    }

    #[test]
    fn empty_vertex_set_is_invalid() {
        let g = build_graph(Vec::new(), 1.0).unwrap();
        let cert = cap_cover_certificate(&g, 0.1).unwrap();
        assert!(!cert.valid);
    }

    #[test]
    fn fine_self_net_is_valid() {
        // Vertex set equal to a fine net, margin larger than its covering
        // radius: every net point covers itself.
        let net = fibonacci_net(500);
        let alpha = 1.0;
        let g = build_graph(net, alpha).unwrap();
        let cert = cap_cover_certificate(&g, 0.05).unwrap();
        assert!(cert.valid, "{} failures", cert.failures.len());
    }

    #[test]
    fn random_instances_validate_certificates_above_coverage_threshold() {
        // n=5000 uniform points at alpha = 6 (ln n / n)^{1/2}: the caps of
        // opening alpha/2 cover the sphere with high frequency, so the
        // certificate validates on most seeds (the coefficient is a
        // measured calibration of the coverage threshold).
        let n = 5000usize;
        let alpha = 6.0 * ((n as f64).ln() / n as f64).sqrt();
        let beta = alpha / 12.0;
        let mut valid = 0;
        for seed in 0..5u64 {
            let pts = sample_uniform(2, n, 31_000 + seed).unwrap();
            let g = build_graph(pts, alpha).unwrap();
            if cap_cover_certificate(&g, beta).unwrap().valid {
                valid += 1;
            }
        }
        assert!(valid >= 4, "only {valid}/5 certificates validated");
    }

    #[test]
    fn fibonacci_net_covering_radius_scales_correctly() {
        for n in [200usize, 800] {
            let net = fibonacci_net(n);
            let r = sampled_covering_radius(&net, 2, 2000, 99);
            assert!(r < 2.9 / (n as f64).sqrt(), "n={n}: covering {r}");
        }
    }

    #[test]
    fn build_net_general_dimension() {
        let net = build_net(3, 0.5, 11).unwrap();
        let r = sampled_covering_radius(&net, 3, 1000, 42);
        assert!(r <= 0.5, "covering radius {r}");
    }
}
