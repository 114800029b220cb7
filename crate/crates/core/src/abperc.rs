//! Continuum AB percolation in a box.
//!
//! Two independent Poisson processes ("A" and "B" labels) live in the box
//! `[-R, R]^d`; edges join opposite labels at Euclidean distance at most 1.
//! The module estimates boundary-reach probabilities, the critical intensity
//! `lambda_c` via finite-size scaling, the companion Boolean-model estimate
//! used for the `lambda_c >= lambda_c^Bool / 2` sanity bound, the covering
//! predicate behind seed events, the projected-cap intensity bounds and a
//! plain bond-percolation box check.

use crate::exec::{count_hits, run_indexed, trial_rng};
use crate::geom;
use crate::numeric::{ball_volume, linear_fit, wilson, WilsonInterval};
use crate::spatial::GridBuckets;
use crate::unionfind::UnionFind;
use rand::Rng;
use rand_distr::{Distribution, Poisson, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PercError {
    #[error("need at least one trial")]
    NoTrials,
    #[error("window parameter k must be at least 2, got {0}")]
    DegenerateWindow(f64),
    #[error("bond probability must lie in [0, 1], got {0}")]
    BadBondProbability(f64),
    #[error("probe spacing must be below 1/(2 sqrt(d)), got {0}")]
    ProbeSpacingTooCoarse(f64),
    #[error("transition not bracketed: sweep frequencies never cross 1/2")]
    TransitionNotBracketed,
    #[error("sigmoid fit produced no 1/2 crossing inside the grid")]
    NoCrossing,
    #[error("intensities must be nonnegative")]
    NegativeIntensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

/// A sampled AB configuration: two labeled point sets in `[-R, R]^d`,
/// optionally with a deterministic origin point (the Slivnyak device for
/// cluster-of-the-origin statistics). Points are stored flat with stride d.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ABSample {
    pub d: usize,
    pub half_width: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub a_points: Vec<f64>,
    pub b_points: Vec<f64>,
    /// Label of the deterministic origin point, if one was appended. The
    /// origin is the last point of its label block.
    pub origin: Option<Label>,
}

impl ABSample {
    pub fn a_count(&self) -> usize {
        self.a_points.len() / self.d
    }

    pub fn b_count(&self) -> usize {
        self.b_points.len() / self.d
    }

    pub fn a_point(&self, i: usize) -> &[f64] {
        &self.a_points[i * self.d..(i + 1) * self.d]
    }

    pub fn b_point(&self, i: usize) -> &[f64] {
        &self.b_points[i * self.d..(i + 1) * self.d]
    }

    /// Global index of the origin point in the A-then-B numbering used by
    /// the cluster labeling.
    pub fn origin_index(&self) -> Option<usize> {
        self.origin.map(|label| match label {
            Label::A => self.a_count() - 1,
            Label::B => self.a_count() + self.b_count() - 1,
        })
    }
}

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn fill_uniform_box<R: Rng>(rng: &mut R, d: usize, half_width: f64, count: usize) -> Vec<f64> {
    let side = Uniform::new_inclusive(-half_width, half_width).expect("valid range");
    (0..count * d).map(|_| side.sample(rng)).collect()
}

/// Sample an AB configuration with the given intensities. Point counts are
/// `Poisson(lambda * (2R)^d)` and positions uniform in the box.
pub fn sample_ab<R: Rng>(
    d: usize,
    half_width: f64,
    lambda_a: f64,
    lambda_b: f64,
    rng: &mut R,
    origin_label: Option<Label>,
) -> Result<ABSample, PercError> {
    if lambda_a < 0.0 || lambda_b < 0.0 {
        return Err(PercError::NegativeIntensity);
    }
    let volume = (2.0 * half_width).powi(d as i32);
    let a_count = poisson_count(rng, lambda_a * volume);
    let mut a_points = fill_uniform_box(rng, d, half_width, a_count);
    let b_count = poisson_count(rng, lambda_b * volume);
    let mut b_points = fill_uniform_box(rng, d, half_width, b_count);
    match origin_label {
        Some(Label::A) => a_points.extend(std::iter::repeat_n(0.0, d)),
        Some(Label::B) => b_points.extend(std::iter::repeat_n(0.0, d)),
        None => {}
    }
    Ok(ABSample {
        d,
        half_width,
        lambda_a,
        lambda_b,
        a_points,
        b_points,
        origin: origin_label,
    })
}

/// Seed-keyed convenience wrapper around [`sample_ab`].
pub fn sample_ab_seeded(
    d: usize,
    half_width: f64,
    lambda_a: f64,
    lambda_b: f64,
    seed: u64,
    origin_label: Option<Label>,
) -> Result<ABSample, PercError> {
    let mut rng = trial_rng(seed, 0, 0);
    sample_ab(d, half_width, lambda_a, lambda_b, &mut rng, origin_label)
}

/// Connected components of the bipartite unit-distance graph.
#[derive(Debug, Clone)]
pub struct ClusterLabeling {
    /// Dense component id per point (A block then B block).
    pub component: Vec<u32>,
    pub sizes: Vec<u32>,
    /// Per component: whether it contains a point with
    /// `|x|_inf >= R - shell width` (shell width 1).
    pub touches_shell: Vec<bool>,
}

impl ClusterLabeling {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Shell width used for boundary-touch flags.
pub const SHELL_WIDTH: f64 = 1.0;

/// Grid-bucketed clustering: cell side 1 (the connection radius) so every
/// neighbor candidate lives in the 3^d surrounding cells. Only A-B pairs at
/// distance <= 1 are merged; same-label points meet only through paths.
pub fn build_clusters(s: &ABSample) -> ClusterLabeling {
    let (na, nb) = (s.a_count(), s.b_count());
    let mut uf = UnionFind::new(na + nb);
    if na > 0 && nb > 0 {
        let mut grid = GridBuckets::new(s.d, 1.0);
        for i in 0..na {
            grid.insert(s.a_point(i), i as u32);
        }
        for j in 0..nb {
            let q = s.b_point(j);
            grid.for_each_near(q, 1, |i| {
                if sq_dist(s.a_point(i as usize), q) <= 1.0 {
                    uf.union(i as usize, na + j);
                }
            });
        }
    }
    // Dense relabeling plus shell flags.
    let raw = uf.labels();
    let mut remap = std::collections::HashMap::new();
    let mut component = vec![0u32; na + nb];
    let mut sizes = Vec::new();
    let mut touches_shell = Vec::new();
    let threshold = s.half_width - SHELL_WIDTH;
    for (idx, &root) in raw.iter().enumerate() {
        let next_id = sizes.len() as u32;
        let id = *remap.entry(root).or_insert_with(|| {
            sizes.push(0);
            touches_shell.push(false);
            next_id
        });
        component[idx] = id;
        sizes[id as usize] += 1;
        let p = if idx < na {
            s.a_point(idx)
        } else {
            s.b_point(idx - na)
        };
        if p.iter().any(|c| c.abs() >= threshold) {
            touches_shell[id as usize] = true;
        }
    }
    ClusterLabeling {
        component,
        sizes,
        touches_shell,
    }
}

/// Brute-force O(n^2) clustering used as the oracle for the grid route.
pub fn build_clusters_bruteforce(s: &ABSample) -> ClusterLabeling {
    let (na, nb) = (s.a_count(), s.b_count());
    let mut uf = UnionFind::new(na + nb);
    for i in 0..na {
        for j in 0..nb {
            if sq_dist(s.a_point(i), s.b_point(j)) <= 1.0 {
                uf.union(i, na + j);
            }
        }
    }
    let raw = uf.labels();
    let mut remap = std::collections::HashMap::new();
    let mut component = vec![0u32; na + nb];
    let mut sizes = Vec::new();
    let mut touches_shell = Vec::new();
    let threshold = s.half_width - SHELL_WIDTH;
    for (idx, &root) in raw.iter().enumerate() {
        let next_id = sizes.len() as u32;
        let id = *remap.entry(root).or_insert_with(|| {
            sizes.push(0);
            touches_shell.push(false);
            next_id
        });
        component[idx] = id;
        sizes[id as usize] += 1;
        let p = if idx < na {
            s.a_point(idx)
        } else {
            s.b_point(idx - na)
        };
        if p.iter().any(|c| c.abs() >= threshold) {
            touches_shell[id as usize] = true;
        }
    }
    ClusterLabeling {
        component,
        sizes,
        touches_shell,
    }
}

/// One origin-seeded trial: does the cluster of the origin reach the
/// boundary shell `{ |x|_inf >= R - 1 }`?
fn origin_reaches_shell<R: Rng>(d: usize, lambda: f64, half_width: f64, rng: &mut R) -> bool {
    let s = sample_ab(d, half_width, lambda, lambda, rng, Some(Label::A)).expect("intensities");
    let clusters = build_clusters(&s);
    let origin = s.origin_index().expect("origin present");
    clusters.touches_shell[clusters.component[origin] as usize]
}

/// Monte Carlo estimate of the probability that the origin-seeded cluster
/// reaches the boundary shell of the box.
pub fn boundary_reach_prob(
    d: usize,
    lambda: f64,
    half_width: f64,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<WilsonInterval, PercError> {
    if trials == 0 {
        return Err(PercError::NoTrials);
    }
    if lambda < 0.0 {
        return Err(PercError::NegativeIntensity);
    }
    let hits = count_hits(trials, threads, |t| {
        let mut rng = trial_rng(seed, 0, t);
        origin_reaches_shell(d, lambda, half_width, &mut rng)
    });
    Ok(wilson(hits, trials))
}

/// Monte Carlo estimate of `P(M_k > 0)` where `M_k` counts A-points of
/// `B(0, k/2)` connected to the complement of `B(0, k)` (Euclidean balls).
pub fn m_k_statistic(
    d: usize,
    lambda: f64,
    k: f64,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<WilsonInterval, PercError> {
    if trials == 0 {
        return Err(PercError::NoTrials);
    }
    if k < 2.0 {
        return Err(PercError::DegenerateWindow(k));
    }
    let hits = count_hits(trials, threads, |t| {
        let mut rng = trial_rng(seed, 1, t);
        let s = sample_ab(d, k, lambda, lambda, &mut rng, None).expect("intensities");
        let clusters = build_clusters(&s);
        let na = s.a_count();
        // Components owning a point outside B(0, k): Euclidean norm.
        let mut escapes = vec![false; clusters.component_count()];
        for i in 0..na {
            if s.a_point(i).iter().map(|c| c * c).sum::<f64>() > k * k {
                escapes[clusters.component[i] as usize] = true;
            }
        }
        for j in 0..s.b_count() {
            if s.b_point(j).iter().map(|c| c * c).sum::<f64>() > k * k {
                escapes[clusters.component[na + j] as usize] = true;
            }
        }
        (0..na).any(|i| {
            escapes[clusters.component[i] as usize]
                && s.a_point(i).iter().map(|c| c * c).sum::<f64>() <= k * k / 4.0
        })
    });
    Ok(wilson(hits, trials))
}

// ------------------------------------------------------------------
// Critical intensity sweeps
// ------------------------------------------------------------------

/// Which unit-distance model a sweep runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PercModel {
    /// Bipartite A-B edges only.
    Ab,
    /// Single process, any pair within distance 1 (the Boolean/Gilbert
    /// model used for the `lambda_c >= lambda_c^Bool/2` bound).
    Boolean,
}

/// One cell of a percolation sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda: f64,
    pub half_width: f64,
    pub trials: u64,
    pub hits: u64,
    pub freq: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Finite-size-scaling estimate of the critical intensity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaCEstimate {
    pub model: PercModel,
    pub estimate: f64,
    pub ci: (f64, f64),
    /// Fitted 1/2-crossings per box size.
    pub crossings: Vec<(f64, f64)>,
    pub cells: Vec<SweepCell>,
    /// Set when the raw frequencies were non-monotone in lambda beyond CI
    /// noise; the CI is widened in that case.
    pub monotonicity_flag: bool,
}

fn boolean_origin_reaches_shell<R: Rng>(
    d: usize,
    lambda: f64,
    half_width: f64,
    rng: &mut R,
) -> bool {
    let volume = (2.0 * half_width).powi(d as i32);
    let count = poisson_count(rng, lambda * volume);
    let mut points = fill_uniform_box(rng, d, half_width, count);
    points.extend(std::iter::repeat_n(0.0, d));
    let n = count + 1;
    let mut grid = GridBuckets::new(d, 1.0);
    for i in 0..n {
        grid.insert(&points[i * d..(i + 1) * d], i as u32);
    }
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        let p = &points[i * d..(i + 1) * d];
        grid.for_each_near(p, 1, |j| {
            let j = j as usize;
            if j > i && sq_dist(p, &points[j * d..(j + 1) * d]) <= 1.0 {
                uf.union(i, j);
            }
        });
    }
    let threshold = half_width - SHELL_WIDTH;
    let origin_root = uf.find(n - 1);
    (0..count).any(|i| {
        points[i * d..(i + 1) * d]
            .iter()
            .any(|c| c.abs() >= threshold)
            && uf.find(i) == origin_root
    })
}

/// Sweep the origin-reach frequency over a lambda grid and several box
/// sizes, fit a sigmoid per box size, and extrapolate the 1/2-crossings in
/// 1/R to estimate `lambda_c`. The CI comes from a parametric bootstrap over
/// the per-cell hit counts.
pub fn estimate_lambda_c(
    model: PercModel,
    d: usize,
    lambda_grid: &[f64],
    box_sizes: &[f64],
    trials_per_cell: u64,
    seed: u64,
    threads: usize,
) -> Result<LambdaCEstimate, PercError> {
    if trials_per_cell == 0 {
        return Err(PercError::NoTrials);
    }
    assert!(!lambda_grid.is_empty() && !box_sizes.is_empty());
    let mut cells = Vec::new();
    for (ri, &r) in box_sizes.iter().enumerate() {
        for (li, &lambda) in lambda_grid.iter().enumerate() {
            let cell_id = (ri * lambda_grid.len() + li) as u64;
            let hits = count_hits(trials_per_cell, threads, |t| {
                let mut rng = trial_rng(seed, cell_id, t);
                match model {
                    PercModel::Ab => origin_reaches_shell(d, lambda, r, &mut rng),
                    PercModel::Boolean => boolean_origin_reaches_shell(d, lambda, r, &mut rng),
                }
            });
            let w = wilson(hits, trials_per_cell);
            cells.push(SweepCell {
                lambda,
                half_width: r,
                trials: trials_per_cell,
                hits,
                freq: w.estimate,
                ci_lo: w.lo,
                ci_hi: w.hi,
            });
        }
    }
    // Transition must be bracketed somewhere in the grid.
    let bracketed = box_sizes.iter().any(|&r| {
        let freqs: Vec<f64> = cells
            .iter()
            .filter(|c| c.half_width == r)
            .map(|c| c.freq)
            .collect();
        freqs.iter().any(|&f| f < 0.5) && freqs.iter().any(|&f| f > 0.5)
    });
    if !bracketed {
        return Err(PercError::TransitionNotBracketed);
    }
    // Monotonicity audit: within each box size the frequency should be
    // nondecreasing in lambda up to CI noise.
    let mut monotonicity_flag = false;
    for &r in box_sizes {
        let row: Vec<&SweepCell> = cells.iter().filter(|c| c.half_width == r).collect();
        for pair in row.windows(2) {
            if pair[0].ci_lo > pair[1].ci_hi {
                monotonicity_flag = true;
            }
        }
    }
    let crossings = fit_crossings(&cells, lambda_grid, box_sizes)?;
    let estimate = extrapolate_crossing(&crossings);
    // The estimate must land inside the swept range; an extrapolation that
    // escapes it means the grid failed to bracket the infinite-volume
    // crossing.
    let (grid_lo, grid_hi) = (lambda_grid[0], lambda_grid[lambda_grid.len() - 1]);
    if !(grid_lo..=grid_hi).contains(&estimate) {
        return Err(PercError::TransitionNotBracketed);
    }
    // Parametric bootstrap: resample each cell's hit count binomially.
    let mut rng = trial_rng(seed ^ 0xB007_57A9, u32::MAX as u64, 0);
    let mut boots = Vec::with_capacity(200);
    for _ in 0..200 {
        let resampled: Vec<SweepCell> = cells
            .iter()
            .map(|c| {
                let mut hits = 0u64;
                for _ in 0..c.trials {
                    if rng.random::<f64>() < c.freq {
                        hits += 1;
                    }
                }
                let w = wilson(hits, c.trials);
                SweepCell {
                    hits,
                    freq: w.estimate,
                    ci_lo: w.lo,
                    ci_hi: w.hi,
                    ..c.clone()
                }
            })
            .collect();
        if let Ok(cross) = fit_crossings(&resampled, lambda_grid, box_sizes) {
            boots.push(extrapolate_crossing(&cross));
        }
    }
    boots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ci = if boots.len() >= 40 {
        (
            boots[(boots.len() as f64 * 0.025) as usize],
            boots[(boots.len() as f64 * 0.975) as usize],
        )
    } else {
        (estimate * 0.8, estimate * 1.2)
    };
    if monotonicity_flag {
        let half = 0.5 * (ci.1 - ci.0) * 1.5;
        let mid = 0.5 * (ci.0 + ci.1);
        ci = (mid - half, mid + half);
    }
    Ok(LambdaCEstimate {
        model,
        estimate,
        ci,
        crossings,
        cells,
        monotonicity_flag,
    })
}

fn fit_crossings(
    cells: &[SweepCell],
    lambda_grid: &[f64],
    box_sizes: &[f64],
) -> Result<Vec<(f64, f64)>, PercError> {
    let mut crossings = Vec::new();
    for &r in box_sizes {
        let row: Vec<&SweepCell> = cells.iter().filter(|c| c.half_width == r).collect();
        let xs: Vec<f64> = row.iter().map(|c| c.lambda).collect();
        let fs: Vec<f64> = row.iter().map(|c| c.freq).collect();
        let ws: Vec<f64> = row
            .iter()
            .map(|c| 1.0 / ((c.ci_hi - c.ci_lo).max(1e-3)).powi(2))
            .collect();
        let fit = crate::numeric::fit_logistic4(&xs, &fs, &ws);
        let lambda_min = lambda_grid.first().copied().unwrap();
        let lambda_max = lambda_grid.last().copied().unwrap();
        let span = lambda_max - lambda_min;
        match fit.crossing(0.5) {
            Some(x) if x >= lambda_min - 0.5 * span && x <= lambda_max + 0.5 * span => {
                crossings.push((r, x));
            }
            _ => return Err(PercError::NoCrossing),
        }
    }
    Ok(crossings)
}

/// Richardson-style extrapolation of the crossings: fit
/// `lambda_half(R) = lambda_c + b / R` and read off the intercept.
fn extrapolate_crossing(crossings: &[(f64, f64)]) -> f64 {
    if crossings.len() == 1 {
        return crossings[0].1;
    }
    let xs: Vec<f64> = crossings.iter().map(|&(r, _)| 1.0 / r).collect();
    let ys: Vec<f64> = crossings.iter().map(|&(_, x)| x).collect();
    let (intercept, _, _) = linear_fit(&xs, &ys);
    intercept
}

/// The sharp 2-colorability threshold coefficient
/// `c_2 = ((d+1) kappa_{d+1} lambda_c)^{1/d}`.
pub fn c2_constant(d: usize, lambda_c: f64) -> f64 {
    ((d + 1) as f64 * ball_volume(d + 1) * lambda_c).powf(1.0 / d as f64)
}

// ------------------------------------------------------------------
// Covering predicate
// ------------------------------------------------------------------

/// Axis-aligned box region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn centered(d: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; d],
            hi: vec![half_width; d],
        }
    }
}

/// Sound one-sided check that the region is covered: every point of a probe
/// grid must have both an A and a B point within `1/4 - (sqrt(d)/2) * h`
/// where `h` is the probe spacing. True implies every region point has both
/// labels within 1/4; false is inconclusive.
pub fn covered_predicate(
    s: &ABSample,
    region: &BoxRegion,
    probe_spacing: f64,
) -> Result<bool, PercError> {
    let d = s.d;
    let slack = 0.25 - (d as f64).sqrt() / 2.0 * probe_spacing;
    if probe_spacing <= 0.0 || slack <= 0.0 {
        return Err(PercError::ProbeSpacingTooCoarse(probe_spacing));
    }
    if s.a_count() == 0 || s.b_count() == 0 {
        return Ok(false);
    }
    let mut a_grid = GridBuckets::new(d, 0.25);
    for i in 0..s.a_count() {
        a_grid.insert(s.a_point(i), i as u32);
    }
    let mut b_grid = GridBuckets::new(d, 0.25);
    for j in 0..s.b_count() {
        b_grid.insert(s.b_point(j), j as u32);
    }
    let counts: Vec<usize> = (0..d)
        .map(|i| (((region.hi[i] - region.lo[i]) / probe_spacing).ceil() as usize).max(1))
        .collect();
    let mut idx = vec![0usize; d];
    let mut probe = vec![0.0f64; d];
    let slack2 = slack * slack;
    loop {
        for i in 0..d {
            probe[i] = (region.lo[i] + (idx[i] as f64 + 0.5) * probe_spacing).min(region.hi[i]);
        }
        let mut a_ok = false;
        a_grid.for_each_near(&probe, 1, |i| {
            a_ok = a_ok || sq_dist(s.a_point(i as usize), &probe) <= slack2;
        });
        if !a_ok {
            return Ok(false);
        }
        let mut b_ok = false;
        b_grid.for_each_near(&probe, 1, |j| {
            b_ok = b_ok || sq_dist(s.b_point(j as usize), &probe) <= slack2;
        });
        if !b_ok {
            return Ok(false);
        }
        // Odometer.
        let mut i = 0;
        loop {
            if i == d {
                return Ok(true);
            }
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

// ------------------------------------------------------------------
// Projected cap intensity
// ------------------------------------------------------------------

/// Report of the projected-cap intensity check: sphere points falling in the
/// cap `{x_{d+1} < -t}`, projected and rescaled by `2/alpha`, should form an
/// inhomogeneous Poisson process whose density over `B(0, rho(t, n))` sits
/// between two explicit bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntensityReport {
    pub rho: f64,
    pub density_lo: f64,
    pub density_hi: f64,
    pub mean_count: f64,
    pub expected_lo: f64,
    pub expected_hi: f64,
    pub count_sigma: f64,
    pub within_bounds: bool,
    pub sector_counts: Vec<u64>,
    pub chi_square: f64,
    pub chi_square_crit: f64,
    pub uniform_ok: bool,
}

/// The scaled window radius `rho(t, n) = 2 sqrt(1 - t^2) / ((1 + t) alpha)`.
pub fn window_radius(t: f64, alpha: f64) -> f64 {
    2.0 * (1.0 - t * t).sqrt() / ((1.0 + t) * alpha)
}

/// Sample Poissonized sphere configurations and compare the empirical point
/// density in `B(0, rho/2)` (after projection and `2/alpha` rescaling of the
/// cap `{x_{d+1} < -t}`) against the analytic sandwich, plus a sector
/// uniformity chi-square within `B(0, rho/4)`.
pub fn cap_projection_intensity_check(
    d: usize,
    n: f64,
    alpha: f64,
    t: f64,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<IntensityReport, PercError> {
    if trials == 0 {
        return Err(PercError::NoTrials);
    }
    let rho = window_radius(t, alpha);
    let norm = (d + 1) as f64 * ball_volume(d + 1);
    let density_lo = n * (1.0 + t).powi(d as i32) / norm * (alpha / 2.0).powi(d as i32);
    let density_hi = n * 2f64.powi(d as i32) / norm * (alpha / 2.0).powi(d as i32);
    let count_radius = rho / 2.0;
    let sector_radius = rho / 4.0;
    let vol = ball_volume(d) * count_radius.powi(d as i32);
    let sectors = 1usize << d;
    let per_trial: Vec<(u64, Vec<u64>)> = run_indexed(trials, threads, |trial| {
        let mut rng = trial_rng(seed, 2, trial);
        let count = poisson_count(&mut rng, n);
        let mut window = 0u64;
        let mut sector_counts = vec![0u64; sectors];
        let mut coords = vec![0.0f64; d + 1];
        for _ in 0..count {
            geom::sample_unit_into(&mut rng, &mut coords);
            if coords[d] >= -t {
                continue;
            }
            // Stereographic projection and 2/alpha rescale.
            let denom = 1.0 - coords[d];
            let mut r2 = 0.0;
            for c in coords[..d].iter() {
                let z = 2.0 * (c / denom) / alpha;
                r2 += z * z;
            }
            if r2 <= count_radius * count_radius {
                window += 1;
            }
            if r2 <= sector_radius * sector_radius {
                let mut s = 0usize;
                for (i, c) in coords[..d].iter().enumerate() {
                    if *c >= 0.0 {
                        s |= 1 << i;
                    }
                }
                sector_counts[s] += 1;
            }
        }
        (window, sector_counts)
    });
    let mean_count =
        per_trial.iter().map(|(w, _)| *w as f64).sum::<f64>() / trials as f64;
    let var = per_trial
        .iter()
        .map(|(w, _)| (*w as f64 - mean_count).powi(2))
        .sum::<f64>()
        / trials as f64;
    let count_sigma = (var / trials as f64).sqrt();
    let expected_lo = density_lo * vol;
    let expected_hi = density_hi * vol;
    let within_bounds = mean_count >= expected_lo - 4.0 * count_sigma
        && mean_count <= expected_hi + 4.0 * count_sigma;
    let mut sector_counts = vec![0u64; sectors];
    for (_, sc) in &per_trial {
        for (acc, &c) in sector_counts.iter_mut().zip(sc) {
            *acc += c;
        }
    }
    let total: u64 = sector_counts.iter().sum();
    let expect = total as f64 / sectors as f64;
    let chi_square = if expect > 0.0 {
        sector_counts
            .iter()
            .map(|&o| (o as f64 - expect).powi(2) / expect)
            .sum()
    } else {
        0.0
    };
    // Wilson-Hilferty approximation of the 99% chi-square quantile.
    let df = (sectors - 1) as f64;
    let z = 2.3263478740408408;
    let chi_square_crit = df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3);
    Ok(IntensityReport {
        rho,
        density_lo,
        density_hi,
        mean_count,
        expected_lo,
        expected_hi,
        count_sigma,
        within_bounds,
        sector_counts,
        chi_square,
        chi_square_crit,
        uniform_ok: chi_square < chi_square_crit,
    })
}

// ------------------------------------------------------------------
// Bond percolation box
// ------------------------------------------------------------------

/// Fraction of trials in which the origin cluster of bond percolation on
/// `{-m..m}^d` fills more than `(1 - eps)` of the box.
pub fn bond_percolation_box(
    d: usize,
    m: usize,
    p: f64,
    eps: f64,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<WilsonInterval, PercError> {
    if trials == 0 {
        return Err(PercError::NoTrials);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(PercError::BadBondProbability(p));
    }
    let side = 2 * m + 1;
    let nsites: usize = side.pow(d as u32);
    let strides: Vec<usize> = (0..d).map(|i| side.pow(i as u32)).collect();
    let target = ((1.0 - eps) * nsites as f64) as usize;
    let hits = count_hits(trials, threads, |trial| {
        let mut rng = trial_rng(seed, 3, trial);
        // open[dir * nsites + idx]: bond from idx toward +e_dir.
        let mut open = vec![false; d * nsites];
        for dir in 0..d {
            for idx in 0..nsites {
                if (idx / strides[dir]) % side + 1 < side {
                    open[dir * nsites + idx] = rng.random::<f64>() < p;
                }
            }
        }
        // BFS from the center site.
        let origin: usize = (0..d).map(|i| m * strides[i]).sum();
        let mut seen = vec![false; nsites];
        let mut queue = std::collections::VecDeque::new();
        seen[origin] = true;
        queue.push_back(origin);
        let mut cluster = 1usize;
        while let Some(u) = queue.pop_front() {
            for dir in 0..d {
                let coord = (u / strides[dir]) % side;
                if coord + 1 < side && open[dir * nsites + u] {
                    let v = u + strides[dir];
                    if !seen[v] {
                        seen[v] = true;
                        cluster += 1;
                        queue.push_back(v);
                    }
                }
                if coord > 0 {
                    let v = u - strides[dir];
                    if open[dir * nsites + v] && !seen[v] {
                        seen[v] = true;
                        cluster += 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        cluster > target
    });
    Ok(wilson(hits, trials))
}
