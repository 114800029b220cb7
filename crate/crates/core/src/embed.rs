//! The bad-patch-avoiding spherical embedding.
//!
//! Projected sample points are classified into a multi-scale cube hierarchy
//! (level-0 cubes are good when occupied; a level-i cube is good when at
//! most one child is bad). A radial perturbation `h : S^{d-1} -> R` is then
//! built by reverse induction over levels: each round adds explicit odd bump
//! terms that push the shell `(1 + h(u)) u` away from the bad-cube anchors
//! of that scale. The function is kept symbolic (base zero plus bump
//! layers), so oddness is exact and every stated bound can be probed
//! pointwise.

use crate::geom::{stereo_project, SpherePoint};
use crate::spatial::GridBuckets;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cube side must be positive, growth at least 2")]
    BadCubeConfig,
    #[error("dimension {0} out of range for the cube lattice")]
    BadDimension(usize),
    #[error("lattice enumeration too large ({0} cells)")]
    EnumerationTooLarge(u128),
    #[error("ball around probe {probe:?} holds {found} points, allowed {allowed}")]
    TooManyNeighbors {
        probe: Vec<f64>,
        found: usize,
        allowed: usize,
    },
    #[error("point set not confined to one orthant")]
    NotOneOrthant,
    #[error("partition postcondition failed: two points of one part near a probe")]
    PartitionPostcondition,
    #[error("amplitude {a} or radius {r} outside the admissible range (a < {max_a}, r < {max_r})")]
    GuardViolated {
        a: f64,
        r: f64,
        max_a: f64,
        max_r: f64,
    },
    #[error("base function out of range: sup |f| = {0} exceeds the guard")]
    BaseOutOfRange(f64),
    #[error("base function is not {a}-Lipschitz at probes (ratio {ratio})")]
    BaseNotLipschitz { a: f64, ratio: f64 },
    #[error("perturbation schedule inadmissible at layer {layer}: a_i={a}, r_i={r}")]
    ScheduleInadmissible { layer: usize, a: f64, r: f64 },
    #[error("postcondition failed: {0}")]
    Postcondition(String),
}

// ------------------------------------------------------------------
// Cube hierarchy
// ------------------------------------------------------------------

pub const MAX_CUBE_DIM: usize = 8;
pub type CubeIdx = [i32; MAX_CUBE_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeStatus {
    Good,
    Bad,
    /// The cube is not contained in the region of interest, so no status is
    /// assigned.
    OutsideRegion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeConfig {
    /// Level-0 side length.
    pub s0: f64,
    /// Integer growth factor K; level-i cubes have side `K^i` times the
    /// previous level's.
    pub growth: u32,
    pub max_level: usize,
    /// Region of interest: cubes must sit inside the ball of this radius.
    pub region_radius: f64,
}

/// Sparse multi-scale good/bad classification of axis-parallel cubes.
///
/// Only good anchors are stored per level (level-0 good cubes are exactly
/// the occupied ones, and goodness only gets rarer above); every other cube
/// inside the region is bad.
#[derive(Debug, Clone)]
pub struct CubeHierarchy {
    pub dim: usize,
    pub cfg: CubeConfig,
    /// Side length per level: `s_i = K^{i(i+1)/2} s0`.
    pub sides: Vec<f64>,
    good: Vec<HashSet<CubeIdx>>,
}

fn floor_idx(coord: f64, side: f64) -> i32 {
    (coord / side).floor() as i32
}

impl CubeHierarchy {
    pub fn side(&self, level: usize) -> f64 {
        self.sides[level]
    }

    pub fn levels(&self) -> usize {
        self.sides.len()
    }

    pub fn good_count(&self, level: usize) -> usize {
        self.good[level].len()
    }

    /// Anchor corner of a cube in real coordinates.
    pub fn anchor_point(&self, level: usize, idx: &CubeIdx) -> Vec<f64> {
        (0..self.dim)
            .map(|i| idx[i] as f64 * self.sides[level])
            .collect()
    }

    fn cube_in_region(&self, level: usize, idx: &CubeIdx) -> bool {
        let s = self.sides[level];
        let mut norm2 = 0.0;
        for i in 0..self.dim {
            let a = idx[i] as f64 * s;
            let b = a + s;
            norm2 += a.abs().max(b.abs()).powi(2);
        }
        norm2 <= self.cfg.region_radius * self.cfg.region_radius
    }

    pub fn status(&self, level: usize, idx: &CubeIdx) -> CubeStatus {
        if !self.cube_in_region(level, idx) {
            CubeStatus::OutsideRegion
        } else if self.good[level].contains(idx) {
            CubeStatus::Good
        } else {
            CubeStatus::Bad
        }
    }

    pub fn status_at(&self, level: usize, point: &[f64]) -> CubeStatus {
        let mut idx = [0i32; MAX_CUBE_DIM];
        for i in 0..self.dim {
            idx[i] = floor_idx(point[i], self.sides[level]);
        }
        self.status(level, &idx)
    }

    /// Bad anchors at a level whose anchor point lies within `reach` of the
    /// unit sphere and whose cube is inside the region.
    pub fn bad_anchors_near_shell(
        &self,
        level: usize,
        reach: f64,
    ) -> Result<Vec<Vec<f64>>, EmbedError> {
        let s = self.sides[level];
        let hi = 1.0 + reach;
        let lo_idx = floor_idx(-hi - s, s);
        let hi_idx = floor_idx(hi, s) + 1;
        let span = (hi_idx - lo_idx + 1) as u128;
        let cells = span.pow(self.dim as u32);
        if cells > 40_000_000 {
            return Err(EmbedError::EnumerationTooLarge(cells));
        }
        let mut out = Vec::new();
        let mut idx = [0i32; MAX_CUBE_DIM];
        for i in 0..self.dim {
            idx[i] = lo_idx;
        }
        loop {
            let anchor: Vec<f64> = (0..self.dim).map(|i| idx[i] as f64 * s).collect();
            let norm = anchor.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - 1.0).abs() <= reach && self.status(level, &idx) == CubeStatus::Bad {
                out.push(anchor);
            }
            let mut i = 0;
            loop {
                if i == self.dim {
                    return Ok(out);
                }
                idx[i] += 1;
                if idx[i] <= hi_idx {
                    break;
                }
                idx[i] = lo_idx;
                i += 1;
            }
        }
    }
}

/// Classify projected points into the cube hierarchy, bottom-up.
pub fn classify_cubes(
    projected: &[Vec<f64>],
    dim: usize,
    cfg: &CubeConfig,
) -> Result<CubeHierarchy, EmbedError> {
    if !(cfg.s0 > 0.0) || cfg.growth < 2 {
        return Err(EmbedError::BadCubeConfig);
    }
    if dim == 0 || dim > MAX_CUBE_DIM {
        return Err(EmbedError::BadDimension(dim));
    }
    let mut sides = vec![cfg.s0];
    for i in 1..=cfg.max_level {
        let factor = (cfg.growth as f64).powi(i as i32);
        sides.push(sides[i - 1] * factor);
    }
    let mut good: Vec<HashSet<CubeIdx>> = Vec::with_capacity(sides.len());
    let mut level0 = HashSet::new();
    for z in projected {
        let mut idx = [0i32; MAX_CUBE_DIM];
        for i in 0..dim {
            idx[i] = floor_idx(z[i], cfg.s0);
        }
        level0.insert(idx);
    }
    good.push(level0);
    for level in 1..sides.len() {
        let ratio = (cfg.growth as i64).pow(level as u32) as i32;
        let children_per_cube = (ratio as u64).pow(dim as u32);
        let mut counts: HashMap<CubeIdx, u64> = HashMap::new();
        for child in &good[level - 1] {
            let mut parent = [0i32; MAX_CUBE_DIM];
            for i in 0..dim {
                parent[i] = child[i].div_euclid(ratio);
            }
            *counts.entry(parent).or_insert(0) += 1;
        }
        let level_good: HashSet<CubeIdx> = counts
            .into_iter()
            .filter(|&(_, c)| c + 1 >= children_per_cube)
            .map(|(p, _)| p)
            .collect();
        good.push(level_good);
    }
    Ok(CubeHierarchy {
        dim,
        cfg: cfg.clone(),
        sides,
        good,
    })
}

// ------------------------------------------------------------------
// Orthant partition
// ------------------------------------------------------------------

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn orthant_of(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .map(|(i, &c)| if c >= 0.0 { 1 << i } else { 0 })
        .sum()
}

/// Split `v` into at most `k * 2^d` parts, each confined to one orthant and
/// holding at most one point of any `r/4`-ball around a probe.
///
/// Construction: take the points within `r/2` of a probe, peel off `k - 1`
/// greedy maximal `r/2`-separated rounds, sweep the (provably separated)
/// leftover together with the far points into a final round, then split
/// every round by orthant. The precondition `|B(u, r) ∩ v| <= k` for all
/// probes is verified first; postconditions are verified before returning.
pub fn orthant_partition(
    v: &[Vec<f64>],
    r: f64,
    probes: &[Vec<f64>],
    k: usize,
) -> Result<Vec<Vec<Vec<f64>>>, EmbedError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let dim = v[0].len();
    for u in probes {
        let found = v.iter().filter(|p| sq_dist(p, u) < r * r).count();
        if found > k {
            return Err(EmbedError::TooManyNeighbors {
                probe: u.clone(),
                found,
                allowed: k,
            });
        }
    }
    let half = r / 2.0;
    let near: Vec<bool> = v
        .iter()
        .map(|p| probes.iter().any(|u| sq_dist(p, u) < half * half))
        .collect();
    let mut assigned = vec![usize::MAX; v.len()];
    // Greedy rounds over the near set.
    for round in 0..k.saturating_sub(1) {
        let mut chosen: Vec<usize> = Vec::new();
        for (i, p) in v.iter().enumerate() {
            if !near[i] || assigned[i] != usize::MAX {
                continue;
            }
            if chosen.iter().all(|&j| sq_dist(p, &v[j]) >= half * half) {
                chosen.push(i);
                assigned[i] = round;
            }
        }
    }
    // Final round: leftover near points (separated by construction of the
    // earlier rounds) plus everything far from the probes.
    for a in assigned.iter_mut() {
        if *a == usize::MAX {
            *a = k - 1;
        }
    }
    let mut parts: Vec<Vec<Vec<f64>>> = vec![Vec::new(); k << dim];
    for (i, p) in v.iter().enumerate() {
        parts[(assigned[i] << dim) | orthant_of(p)].push(p.clone());
    }
    parts.retain(|part| !part.is_empty());
    // Postconditions: one orthant per part, at most one point per r/4-ball.
    let quarter = r / 4.0;
    for part in &parts {
        let o = orthant_of(&part[0]);
        if part.iter().any(|p| orthant_of(p) != o) {
            return Err(EmbedError::NotOneOrthant);
        }
        for u in probes {
            let inside = part
                .iter()
                .filter(|p| sq_dist(p, u) < quarter * quarter)
                .count();
            if inside > 1 {
                return Err(EmbedError::PartitionPostcondition);
            }
        }
    }
    Ok(parts)
}

// ------------------------------------------------------------------
// Bump sums
// ------------------------------------------------------------------

/// One perturbation round: explicit odd bumps of a common amplitude and
/// radius around a point set confined to one orthant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpLayer {
    pub amplitude: f64,
    pub radius: f64,
    pub points: Vec<Vec<f64>>,
    /// `b_p`, one of `+amplitude` / `-amplitude` per point.
    pub signs: Vec<f64>,
}

/// Symbolic radial perturbation `S^{d-1} -> R`: zero base plus bump layers.
/// Each layer is evaluated against the partial sum below it, exactly as the
/// construction iterates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpSum {
    pub dim: usize,
    pub layers: Vec<BumpLayer>,
}

impl BumpSum {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            layers: Vec::new(),
        }
    }

    /// Evaluate `(f(u), f(-u))` jointly. Every bump term is antisymmetrized
    /// and both signs are accumulated from the same subterms, so the second
    /// component is the exact IEEE negation of the first.
    pub fn eval_pair(&self, u: &[f64]) -> (f64, f64) {
        let d = self.dim;
        debug_assert_eq!(u.len(), d);
        let mut fu = 0.0f64;
        let mut fmu = 0.0f64;
        let mut phi_u = vec![0.0f64; d];
        let mut phi_mu = vec![0.0f64; d];
        for layer in &self.layers {
            let su = 1.0 + fu;
            let smu = 1.0 + fmu;
            for i in 0..d {
                phi_u[i] = su * u[i];
                phi_mu[i] = -(smu * u[i]);
            }
            let mut layer_u = 0.0f64;
            let mut layer_mu = 0.0f64;
            for (p, &b) in layer.points.iter().zip(&layer.signs) {
                let t1 = (layer.radius - sq_dist(&phi_u, p).sqrt()).max(0.0);
                let t2 = (layer.radius - sq_dist(&phi_mu, p).sqrt()).max(0.0);
                if t1 != 0.0 || t2 != 0.0 {
                    layer_u += b * (t1 - t2);
                    layer_mu += b * (t2 - t1);
                }
            }
            fu += layer_u;
            fmu += layer_mu;
        }
        (fu, fmu)
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.eval_pair(u).0
    }

    /// The perturbed shell point `psi(u) = (1 + f(u)) * u`.
    pub fn shell_point(&self, u: &[f64], out: &mut [f64]) {
        let s = 1.0 + self.eval(u);
        for (o, &c) in out.iter_mut().zip(u) {
            *o = s * c;
        }
    }
}

// ------------------------------------------------------------------
// Perturbation rounds
// ------------------------------------------------------------------

/// Admissibility guards for one perturbation round. `strict` carries very
/// conservative sufficient constants that compose safely across many
/// chained rounds; `relaxed` widens the radius bound to what the
/// underlying inequalities require in low dimension (the chain needs
/// `r < 0.9/sqrt(d)` and `a < 1/36`), which realistic shell geometry
/// depends on. All postconditions are probe-verified regardless.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Guards {
    pub max_amplitude: f64,
    pub max_radius: f64,
    pub max_base: f64,
}

impl Guards {
    pub fn strict(d: usize) -> Self {
        Self {
            max_amplitude: 0.01,
            max_radius: 0.01 / (d as f64).sqrt(),
            max_base: 0.1,
        }
    }

    pub fn relaxed(d: usize) -> Self {
        Self {
            max_amplitude: 0.02,
            max_radius: 0.8 / (d as f64).sqrt(),
            max_base: 0.1,
        }
    }
}

/// Verification data for a single perturbation round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbReport {
    pub probes: usize,
    /// Largest number of bump terms active at one probe; disjoint supports
    /// demand at most 1.
    pub max_active_bumps: usize,
    /// `min_p min_u |psi(u) - p|`; the round guarantees at least `a r / 2`.
    pub min_clearance: f64,
    pub clearance_required: f64,
    pub max_change: f64,
    pub change_allowed: f64,
    pub max_lipschitz_ratio: f64,
    pub lipschitz_allowed: f64,
    pub max_oddness: f64,
}

fn probe_directions<R: Rng>(
    dim: usize,
    count: usize,
    rng: &mut R,
    v: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let mut probes = Vec::with_capacity(count + 2 * v.len());
    let mut buf = vec![0.0f64; dim];
    for _ in 0..count {
        crate::geom::sample_unit_into(rng, &mut buf);
        probes.push(buf.clone());
    }
    // Adversarial probes: the directions of the bump points and their
    // antipodes, where clearance violations would have to occur.
    for p in v {
        let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            probes.push(p.iter().map(|c| c / norm).collect());
            probes.push(p.iter().map(|c| -c / norm).collect());
        }
    }
    probes
}

fn sup_abs_at(f: &BumpSum, probes: &[Vec<f64>]) -> f64 {
    probes.iter().map(|u| f.eval(u).abs()).fold(0.0, f64::max)
}

fn max_lipschitz_ratio<R: Rng>(f: &BumpSum, pairs: usize, rng: &mut R) -> f64 {
    let d = f.dim;
    let mut buf = vec![0.0f64; d];
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        crate::geom::sample_unit_into(rng, &mut buf);
        let u = buf.clone();
        // Mix global pairs with short-range pairs, where Lipschitz
        // violations of bump terms actually live.
        let local = rng.random::<f64>() < 0.7;
        if local {
            let scale = 10f64.powf(-4.0 * rng.random::<f64>());
            for c in buf.iter_mut() {
                *c += scale * (rng.random::<f64>() - 0.5);
            }
            let norm = buf.iter().map(|c| c * c).sum::<f64>().sqrt();
            for c in buf.iter_mut() {
                *c /= norm;
            }
        } else {
            crate::geom::sample_unit_into(rng, &mut buf);
        }
        let dist = sq_dist(&u, &buf).sqrt();
        if dist < 1e-12 {
            continue;
        }
        let ratio = (f.eval(&u) - f.eval(&buf)).abs() / dist;
        worst = worst.max(ratio);
    }
    worst
}

/// One perturbation round: add odd bumps around the (single-orthant) point
/// set `v` so that the new shell clears every point of `v` by `a r / 2`,
/// while moving the function by less than `a r` and staying `9a`-Lipschitz.
pub fn perturb_once(
    f: &BumpSum,
    v: &[Vec<f64>],
    a: f64,
    r: f64,
    guards: &Guards,
    probe_count: usize,
    seed: u64,
) -> Result<(BumpSum, PerturbReport), EmbedError> {
    let d = f.dim;
    if !(a > 0.0 && a < guards.max_amplitude && r > 0.0 && r < guards.max_radius) {
        return Err(EmbedError::GuardViolated {
            a,
            r,
            max_a: guards.max_amplitude,
            max_r: guards.max_radius,
        });
    }
    if v.is_empty() {
        return Ok((
            f.clone(),
            PerturbReport {
                probes: 0,
                max_active_bumps: 0,
                min_clearance: f64::INFINITY,
                clearance_required: a * r / 2.0,
                max_change: 0.0,
                change_allowed: a * r,
                max_lipschitz_ratio: 0.0,
                lipschitz_allowed: 9.0 * a,
                max_oddness: 0.0,
            },
        ));
    }
    let o = orthant_of(&v[0]);
    if v.iter().any(|p| orthant_of(p) != o) {
        return Err(EmbedError::NotOneOrthant);
    }
    let mut rng = crate::exec::trial_rng(seed, 41, 0);
    let probes = probe_directions(d, probe_count, &mut rng, v);
    // Sampled preconditions on the base function.
    let sup_f = sup_abs_at(f, &probes);
    if sup_f >= guards.max_base {
        return Err(EmbedError::BaseOutOfRange(sup_f));
    }
    let base_lip = max_lipschitz_ratio(f, probe_count / 2, &mut rng);
    if base_lip > a * (1.0 + 1e-9) {
        return Err(EmbedError::BaseNotLipschitz { a, ratio: base_lip });
    }
    let mut shell = vec![0.0f64; d];
    for u in &probes {
        f.shell_point(u, &mut shell);
        let found = v.iter().filter(|p| sq_dist(p, &shell) < r * r).count();
        if found > 1 {
            return Err(EmbedError::TooManyNeighbors {
                probe: u.clone(),
                found,
                allowed: 1,
            });
        }
    }
    // Bump signs: push outward when the obstacle sits inside the current
    // shell, inward otherwise.
    let mut signs = Vec::with_capacity(v.len());
    for p in v {
        let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        let b = if norm > 1e-12 {
            let dir: Vec<f64> = p.iter().map(|c| c / norm).collect();
            if norm < 1.0 + f.eval(&dir) {
                a
            } else {
                -a
            }
        } else {
            a
        };
        signs.push(b);
    }
    let mut g = f.clone();
    g.layers.push(BumpLayer {
        amplitude: a,
        radius: r,
        points: v.to_vec(),
        signs,
    });
    // Postconditions at the probes.
    let mut min_clearance = f64::INFINITY;
    let mut max_change = 0.0f64;
    let mut max_oddness = 0.0f64;
    let mut max_active_bumps = 0usize;
    let mut phi = vec![0.0f64; d];
    let mut phi_minus = vec![0.0f64; d];
    for u in &probes {
        let (gu, gmu) = g.eval_pair(u);
        max_oddness = max_oddness.max((gu + gmu).abs());
        let fu = f.eval(u);
        max_change = max_change.max((gu - fu).abs());
        // Disjoint supports: at most one bump term may be active here.
        let sf = 1.0 + fu;
        let sfm = 1.0 + f.eval(&u.iter().map(|c| -c).collect::<Vec<_>>());
        for i in 0..d {
            phi[i] = sf * u[i];
            phi_minus[i] = -(sfm * u[i]);
        }
        let active = v
            .iter()
            .filter(|p| sq_dist(&phi, p).sqrt() < r || sq_dist(&phi_minus, p).sqrt() < r)
            .count();
        max_active_bumps = max_active_bumps.max(active);
        let s = 1.0 + gu;
        for (i, c) in shell.iter_mut().enumerate() {
            *c = s * u[i];
        }
        for p in v {
            min_clearance = min_clearance.min(sq_dist(p, &shell).sqrt());
        }
    }
    let lip = max_lipschitz_ratio(&g, probe_count, &mut rng);
    let report = PerturbReport {
        probes: probes.len(),
        max_active_bumps,
        min_clearance,
        clearance_required: a * r / 2.0,
        max_change,
        change_allowed: a * r,
        max_lipschitz_ratio: lip,
        lipschitz_allowed: 9.0 * a,
        max_oddness,
    };
    if max_active_bumps > 1 {
        return Err(EmbedError::Postcondition(format!(
            "{max_active_bumps} bump supports overlap at a probe"
        )));
    }
    if max_change > a * r * (1.0 + 1e-12) {
        return Err(EmbedError::Postcondition(format!(
            "|f-g| = {max_change} exceeds a*r = {}",
            a * r
        )));
    }
    if max_oddness > 1e-12 {
        return Err(EmbedError::Postcondition(format!(
            "oddness violated: {max_oddness}"
        )));
    }
    if lip > 9.0 * a * (1.0 + 1e-6) {
        return Err(EmbedError::Postcondition(format!(
            "lipschitz ratio {lip} exceeds 9a = {}",
            9.0 * a
        )));
    }
    if min_clearance < a * r / 2.0 * (1.0 - 1e-9) {
        return Err(EmbedError::Postcondition(format!(
            "clearance {min_clearance} below a*r/2 = {}",
            a * r / 2.0
        )));
    }
    Ok((g, report))
}

/// Closed forms of the iterated schedule (with the `r/4` pre-shrink):
/// `a_i = 9^i a`, `r_i = 3^{i(i-1)} 2^{-(i+2)} a^i r` and the step sizes
/// `delta_i = a_{i-1} r_{i-1} = 3^{i(i-1)} 2^{-(i+1)} a^i r`.
pub fn schedule_closed_form(a: f64, r: f64, i: usize) -> (f64, f64, f64) {
    let ai = 9f64.powi(i as i32) * a;
    let ri = 3f64.powi((i * (i.saturating_sub(1))) as i32) * 2f64.powi(-(i as i32 + 2))
        * a.powi(i as i32)
        * r;
    let di = if i == 0 {
        0.0
    } else {
        3f64.powi((i * (i - 1)) as i32) * 2f64.powi(-(i as i32 + 1)) * a.powi(i as i32) * r
    };
    (ai, ri, di)
}

/// Verification data for a chained multi-round perturbation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateReport {
    pub parts: usize,
    pub applied_layers: usize,
    /// Per applied layer: `(a_i, r_i, delta_{i+1})` as iterated.
    pub schedule: Vec<(f64, f64, f64)>,
    /// Largest relative deviation between the iterated schedule and its
    /// closed forms.
    pub schedule_closed_form_err: f64,
    /// Final guaranteed clearance radius `r_l` (measured bound).
    pub final_radius: f64,
    /// The very conservative stated constant `C = 3^{(k 2^d)^2}` and the
    /// change bound `C a r` it implies.
    pub advertised_constant: f64,
    pub advertised_change_bound: f64,
    pub min_clearance: f64,
    pub max_change: f64,
    pub max_lipschitz_ratio: f64,
    pub rounds: Vec<PerturbReport>,
}

/// Chain perturbation rounds over an orthant partition of `v`, following
/// the schedule `a_{i+1} = 9 a_i`, `r_{i+1} = (a_i / 2) r_i` starting from
/// `r_0 = r / 4`. Admissibility of the whole schedule is checked before any
/// work.
pub fn iterate_perturbation(
    f: &BumpSum,
    v: &[Vec<f64>],
    k: usize,
    a: f64,
    r: f64,
    guards: &Guards,
    probe_count: usize,
    seed: u64,
) -> Result<(BumpSum, IterateReport), EmbedError> {
    let d = f.dim;
    let ell = k << d;
    let advertised_constant = 3f64.powi((ell * ell).min(600) as i32);
    if v.is_empty() {
        return Ok((
            f.clone(),
            IterateReport {
                parts: 0,
                applied_layers: 0,
                schedule: Vec::new(),
                schedule_closed_form_err: 0.0,
                final_radius: r / 4.0,
                advertised_constant,
                advertised_change_bound: advertised_constant * a * r,
                min_clearance: f64::INFINITY,
                max_change: 0.0,
                max_lipschitz_ratio: 0.0,
                rounds: Vec::new(),
            },
        ));
    }
    let mut rng = crate::exec::trial_rng(seed, 43, 0);
    let shell_probes: Vec<Vec<f64>> = {
        let dirs = probe_directions(d, probe_count, &mut rng, v);
        let mut shell = vec![0.0f64; d];
        dirs.iter()
            .map(|u| {
                f.shell_point(u, &mut shell);
                shell.clone()
            })
            .collect()
    };
    let parts = orthant_partition(v, r, &shell_probes, k)?;
    // Schedule admissibility before any work.
    let mut a_probe = a;
    let mut r_probe = r / 4.0;
    for layer in 0..parts.len() {
        if a_probe >= guards.max_amplitude || r_probe >= guards.max_radius || r_probe <= 0.0 {
            return Err(EmbedError::ScheduleInadmissible {
                layer,
                a: a_probe,
                r: r_probe,
            });
        }
        r_probe *= a_probe / 2.0;
        a_probe *= 9.0;
    }
    // Chain the rounds.
    let mut g = f.clone();
    let mut a_i = a;
    let mut r_i = r / 4.0;
    let mut schedule = Vec::new();
    let mut rounds = Vec::new();
    let mut err = 0.0f64;
    for (li, part) in parts.iter().enumerate() {
        let (next, report) =
            perturb_once(&g, part, a_i, r_i, guards, probe_count, seed ^ (li as u64 + 1))?;
        g = next;
        rounds.push(report);
        let delta_next = a_i * r_i;
        let (ca, cr, _) = schedule_closed_form(a, r, li);
        err = err.max(((a_i - ca) / ca).abs()).max(((r_i - cr) / cr).abs());
        let (_, _, cd) = schedule_closed_form(a, r, li + 1);
        err = err.max(((delta_next - cd) / cd).abs());
        schedule.push((a_i, r_i, delta_next));
        // Nesting: delta_{i+1} + r_{i+1} <= r_i keeps earlier clearances.
        let r_next = (a_i / 2.0) * r_i;
        if delta_next + r_next > r_i {
            return Err(EmbedError::Postcondition(
                "ball nesting failed: delta + r_next > r".into(),
            ));
        }
        a_i *= 9.0;
        r_i = r_next;
    }
    let final_radius = r_i;
    // Final verification across all of v at fresh probes.
    let dirs = probe_directions(d, probe_count, &mut rng, v);
    let mut shell = vec![0.0f64; d];
    let mut min_clearance = f64::INFINITY;
    let mut max_change = 0.0f64;
    for u in &dirs {
        g.shell_point(u, &mut shell);
        for p in v {
            min_clearance = min_clearance.min(sq_dist(p, &shell).sqrt());
        }
        max_change = max_change.max((g.eval(u) - f.eval(u)).abs());
    }
    if min_clearance < final_radius * (1.0 - 1e-9) {
        return Err(EmbedError::Postcondition(format!(
            "final clearance {min_clearance} below r_l = {final_radius}"
        )));
    }
    let advertised_change_bound = advertised_constant * a * r;
    if max_change > advertised_change_bound {
        return Err(EmbedError::Postcondition(format!(
            "total change {max_change} above C a r = {advertised_change_bound}"
        )));
    }
    let max_lip = max_lipschitz_ratio(&g, probe_count, &mut rng);
    Ok((
        g,
        IterateReport {
            parts: parts.len(),
            applied_layers: schedule.len(),
            schedule,
            schedule_closed_form_err: err,
            final_radius,
            advertised_constant,
            advertised_change_bound,
            min_clearance,
            max_change,
            max_lipschitz_ratio: max_lip,
            rounds,
        },
    ))
}

// ------------------------------------------------------------------
// Full embedding
// ------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedConfig {
    /// Level-0 cube side as a fraction of alpha; must stay below
    /// `epsilon / sqrt(d)` so an occupied cube witnesses capture.
    pub delta: f64,
    pub growth: u32,
    /// Per-level Lipschitz attenuation: level j runs at amplitude
    /// `epsilon * attenuation^{-(j+1)}`. The proof's constant (3 to the
    /// power (k 2^d)^2) is astronomically conservative; the default 9
    /// matches the Lipschitz growth of a one-round level and is recorded in
    /// the run report.
    pub level_attenuation: f64,
    pub region_radius: f64,
    /// Truncate the hierarchy so `2 sqrt(d) * s_top` stays below this, on
    /// top of the `2 log log n` rule.
    pub max_top_clearance: f64,
    pub guards: Guards,
    pub probe_count: usize,
    pub capture_probes: usize,
    pub lipschitz_pairs: usize,
    pub oddness_probes: usize,
    pub seed: u64,
}

impl EmbedConfig {
    pub fn desk_default(d: usize, epsilon: f64) -> Self {
        Self {
            delta: 0.9 * epsilon / (d as f64).sqrt(),
            growth: 2,
            level_attenuation: 9.0,
            region_radius: 100.0,
            max_top_clearance: 0.45,
            guards: Guards::relaxed(d),
            probe_count: 2000,
            capture_probes: 10_000,
            lipschitz_pairs: 100_000,
            oddness_probes: 1000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub side: f64,
    pub bad_near_shell: usize,
    pub applied: Option<IterateReport>,
    /// Measured `min_u dist(psi(u), bad anchors)` against the demanded
    /// `2 sqrt(d) s_j`.
    pub clearance_measured: f64,
    pub clearance_demanded: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedVerification {
    pub oddness_max: f64,
    pub lipschitz_max_ratio: f64,
    pub lipschitz_allowed: f64,
    pub sup_h: f64,
    pub height_bound: f64,
    pub capture_worst: f64,
    pub capture_allowed: f64,
    pub capture_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingOutcome {
    pub accepted: bool,
    pub rejection: Option<String>,
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub i_max: usize,
    pub h: BumpSum,
    pub levels: Vec<LevelReport>,
    pub verification: Option<EmbedVerification>,
}

/// Build the bad-patch-avoiding perturbation for a sphere sample at
/// `alpha = c n^{-1/d}`.
///
/// Reverse induction over cube levels: the top level must already be clear
/// near the shell (otherwise the low-probability failure event happened and
/// the instance is rejected), and each descent round perturbs away from the
/// bad anchors of the next finer level. All quantified claims are verified
/// on random plus adversarial probes.
pub fn build_embedding(
    points: &[SpherePoint],
    epsilon: f64,
    c: f64,
    cfg: &EmbedConfig,
) -> Result<EmbeddingOutcome, EmbedError> {
    let n = points.len();
    assert!(n > 0 && epsilon > 0.0 && c > 0.0);
    let d = points[0].dim();
    if d < 2 {
        return Err(EmbedError::BadDimension(d));
    }
    let alpha = c * (n as f64).powf(-1.0 / d as f64);
    let reject = |i_max, levels, why: String| {
        Ok(EmbeddingOutcome {
            accepted: false,
            rejection: Some(why),
            n,
            alpha,
            epsilon,
            i_max,
            h: BumpSum::zero(d),
            levels,
            verification: None,
        })
    };
    // Project the sample; the pole has measure zero but guard anyway.
    let projected: Vec<Vec<f64>> = points
        .iter()
        .filter_map(|p| stereo_project(p).ok().map(|z| z.coords))
        .collect();
    let s0 = cfg.delta * alpha;
    let sqrt_d = (d as f64).sqrt();
    // Level count: the 2 log2 log2 n rule, truncated to scales whose
    // demanded clearance still fits near the unit shell.
    let rule = (2.0 * (n as f64).log2().log2()).ceil().max(1.0) as usize;
    let mut i_max = 0usize;
    let mut side = s0;
    for i in 1..=rule {
        let next = side * (cfg.growth as f64).powi(i as i32);
        if 2.0 * sqrt_d * next > cfg.max_top_clearance || next > cfg.region_radius {
            break;
        }
        side = next;
        i_max = i;
    }
    if i_max < rule {
        log::warn!(
            "cube hierarchy truncated at level {i_max} (rule wanted {rule}); top side {side:.3}"
        );
    }
    if i_max == 0 {
        return reject(0, Vec::new(), "no admissible level above 0 fits the shell".into());
    }
    let cube_cfg = CubeConfig {
        s0,
        growth: cfg.growth,
        max_level: i_max,
        region_radius: cfg.region_radius,
    };
    let hierarchy = classify_cubes(&projected, d, &cube_cfg)?;
    // Top-level demand for the zero function.
    let top_clear = 2.0 * sqrt_d * hierarchy.side(i_max);
    let top_bad = hierarchy.bad_anchors_near_shell(i_max, top_clear)?;
    if !top_bad.is_empty() {
        return reject(
            i_max,
            Vec::new(),
            format!(
                "{} bad level-{i_max} cubes within {top_clear:.4} of the shell",
                top_bad.len()
            ),
        );
    }
    let mut h = BumpSum::zero(d);
    let mut h_sup_bound = 0.0f64;
    let mut levels = Vec::new();
    let mut rng = crate::exec::trial_rng(cfg.seed, 47, 0);
    for j in (0..i_max).rev() {
        let s_j = hierarchy.side(j);
        let r_j = hierarchy.side(j + 1) / 2.0;
        let a_j = epsilon * cfg.level_attenuation.powi(-(j as i32 + 1));
        // Anchors strictly beyond the demanded clearance (plus the sup of
        // the function so far and the level's own movement budget) can
        // neither violate the demand nor meet any bump support, so only the
        // demand band is fed to the perturbation.
        let reach = 2.0 * sqrt_d * s_j + h_sup_bound + a_j * r_j + 1e-9;
        let bad = hierarchy.bad_anchors_near_shell(j, reach)?;
        let applied = if bad.is_empty() {
            None
        } else {
            match iterate_perturbation(
                &h,
                &bad,
                1 << d,
                a_j,
                r_j,
                &cfg.guards,
                cfg.probe_count,
                cfg.seed ^ ((j as u64) << 8),
            ) {
                Ok((next, report)) => {
                    h = next;
                    h_sup_bound += report.max_change;
                    Some(report)
                }
                Err(e) => {
                    levels.push(LevelReport {
                        level: j,
                        side: s_j,
                        bad_near_shell: bad.len(),
                        applied: None,
                        clearance_measured: 0.0,
                        clearance_demanded: 2.0 * sqrt_d * s_j,
                    });
                    return reject(i_max, levels, format!("level {j} perturbation failed: {e}"));
                }
            }
        };
        // Demand at this level: the shell clears every bad anchor by
        // 2 sqrt(d) s_j.
        let demanded = 2.0 * sqrt_d * s_j;
        let mut measured = f64::INFINITY;
        if !bad.is_empty() {
            let dirs = probe_directions(d, cfg.probe_count, &mut rng, &bad);
            let mut shell = vec![0.0f64; d];
            for u in &dirs {
                h.shell_point(u, &mut shell);
                for p in &bad {
                    measured = measured.min(sq_dist(p, &shell).sqrt());
                }
            }
        }
        let ok = measured >= demanded;
        levels.push(LevelReport {
            level: j,
            side: s_j,
            bad_near_shell: bad.len(),
            applied,
            clearance_measured: measured,
            clearance_demanded: demanded,
        });
        if !ok {
            return reject(
                i_max,
                levels,
                format!("level {j} clearance {measured:.5} below demand {demanded:.5}"),
            );
        }
    }
    // Final verification.
    let height_bound = (n as f64).powf(-0.9 / d as f64);
    let mut oddness_max = 0.0f64;
    let mut sup_h = 0.0f64;
    let mut buf = vec![0.0f64; d];
    for _ in 0..cfg.oddness_probes {
        crate::geom::sample_unit_into(&mut rng, &mut buf);
        let (hu, hmu) = h.eval_pair(&buf);
        oddness_max = oddness_max.max((hu + hmu).abs());
        sup_h = sup_h.max(hu.abs());
    }
    let lipschitz_max_ratio = max_lipschitz_ratio(&h, cfg.lipschitz_pairs, &mut rng);
    // Capture: every probe's shell point has a sample point within
    // epsilon * alpha.
    let capture_allowed = epsilon * alpha;
    let mut grid = GridBuckets::new(d, capture_allowed.max(1e-9));
    for (i, z) in projected.iter().enumerate() {
        grid.insert(z, i as u32);
    }
    let mut capture_worst = 0.0f64;
    let mut shell = vec![0.0f64; d];
    for _ in 0..cfg.capture_probes {
        crate::geom::sample_unit_into(&mut rng, &mut buf);
        h.shell_point(&buf, &mut shell);
        let mut best = f64::INFINITY;
        grid.for_each_near(&shell, 1, |i| {
            best = best.min(sq_dist(&projected[i as usize], &shell));
        });
        capture_worst = capture_worst.max(best.sqrt());
        if capture_worst > capture_allowed {
            break;
        }
    }
    let capture_ok = capture_worst <= capture_allowed;
    let verification = EmbedVerification {
        oddness_max,
        lipschitz_max_ratio,
        lipschitz_allowed: epsilon * (1.0 + 1e-6),
        sup_h,
        height_bound,
        capture_worst,
        capture_allowed,
        capture_ok,
    };
    let accepted = oddness_max < 1e-12
        && lipschitz_max_ratio <= verification.lipschitz_allowed
        && sup_h < height_bound
        && capture_ok;
    Ok(EmbeddingOutcome {
        accepted,
        rejection: if accepted {
            None
        } else {
            Some(format!(
                "verification failed: odd {oddness_max:.2e}, lip {lipschitz_max_ratio:.4}, sup {sup_h:.2e}, capture {capture_worst:.4}/{capture_allowed:.4}"
            ))
        },
        n,
        alpha,
        epsilon,
        i_max,
        h,
        levels,
        verification: Some(verification),
    })
}

/// The induced lower-dimensional instance: projected points captured within
/// `epsilon * alpha` of the perturbed shell, radially renormalized onto
/// S^{d-1}. Handing these to the coloring module reproduces the
/// dimension-reduction step at desk scale.
pub fn induced_equator_instance(
    points: &[SpherePoint],
    h: &BumpSum,
    epsilon: f64,
    alpha: f64,
) -> Vec<SpherePoint> {
    let mut out = Vec::new();
    let mut shell = vec![0.0f64; h.dim];
    for p in points {
        let Ok(z) = stereo_project(p) else { continue };
        let norm = z.norm();
        if norm < 1e-9 {
            continue;
        }
        let u: Vec<f64> = z.coords.iter().map(|c| c / norm).collect();
        h.shell_point(&u, &mut shell);
        if sq_dist(&z.coords, &shell).sqrt() <= epsilon * alpha {
            out.push(SpherePoint::new(u).expect("unit direction"));
        }
    }
    out
}
