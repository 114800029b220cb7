//! Shared numerics: unit-ball volumes, the small-cap constant, adaptive
//! Gauss-Legendre quadrature, Wilson intervals, least-squares helpers and a
//! small Nelder-Mead optimizer for sigmoid crossing fits.

use serde::{Deserialize, Serialize};

/// Volume of the d-dimensional unit ball, `pi^{d/2} / Gamma(d/2 + 1)`.
///
/// Computed by the two-step recurrence `kappa_d = kappa_{d-2} * 2*pi / d`
/// starting from `kappa_0 = 1`, `kappa_1 = 2`, which avoids a gamma-function
/// dependency and is exact for the integer dimensions we use.
pub fn ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Small-opening coefficient of the pair-connection probability:
/// `nu(cap(., alpha)) = (1 + o(1)) * c_d * alpha^d` as `alpha -> 0`.
///
/// Equals `kappa_d / ((d+1) * kappa_{d+1})`, which is the same value as the
/// gamma-function expression `Gamma((d+3)/2) / ((d+1) sqrt(pi) Gamma((d+2)/2))`.
pub fn small_cap_coefficient(d: usize) -> f64 {
    ball_volume(d) / ((d + 1) as f64 * ball_volume(d + 1))
}

// ------------------------------------------------------------------
// Gauss-Legendre quadrature
// ------------------------------------------------------------------

/// Nodes and weights of the 16-point Gauss-Legendre rule on [-1, 1],
/// computed once by Newton iteration on the Legendre polynomial.
fn gl16() -> &'static [(f64, f64); 16] {
    use std::sync::OnceLock;
    static NODES: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 16usize;
        let mut out = [(0.0, 0.0); 16];
        for i in 0..n {
            // Initial guess: Chebyshev-like approximation of the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out[i] = (x, w);
        }
        out
    })
}

/// Legendre polynomial P_n and derivative P_n' at x (Bonnet recurrence).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gl16_interval<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for &(x, w) in gl16() {
        s += w * f(c + h * x);
    }
    s * h
}

/// Adaptive Gauss-Legendre integration of `f` on `[a, b]` to relative
/// tolerance `rel_tol` (bisect until the two-panel refinement agrees).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl16_interval(f, a, m);
        let right = gl16_interval(f, m, b);
        let refined = left + right;
        if depth >= 40 || (refined - whole).abs() <= tol * refined.abs().max(1e-300) {
            refined
        } else {
            recurse(f, a, m, left, tol, depth + 1) + recurse(f, m, b, right, tol, depth + 1)
        }
    }
    let whole = gl16_interval(&f, a, b);
    recurse(&f, a, b, whole, rel_tol, 0)
}

// ------------------------------------------------------------------
// Frequency statistics
// ------------------------------------------------------------------

/// Two-sided 95% z value.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for a binomial frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl WilsonInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn overlaps(&self, other: &WilsonInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// 95% Wilson score interval for `hits` successes out of `trials`.
pub fn wilson(hits: u64, trials: u64) -> WilsonInterval {
    assert!(trials > 0, "wilson interval needs at least one trial");
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    WilsonInterval {
        estimate: p,
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
    }
}

/// Ordinary least squares for `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against the cdf `f`.
/// Sorts a copy of the samples.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let fx = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((fx - lo).abs()).max((hi - fx).abs());
    }
    d
}

/// Asymptotic KS critical value at significance `alpha` for sample size `n`
/// (valid for the large n we use; `c(0.01) = 1.6276`).
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c / (n as f64).sqrt()
}

/// Empirical falling-factorial moment `E[X (X-1) ... (X-m+1)]`.
pub fn falling_moment(samples: &[u64], m: u32) -> f64 {
    let mut acc = 0.0;
    for &x in samples {
        let mut term = 1.0;
        for j in 0..m {
            term *= x as f64 - j as f64;
        }
        acc += term;
    }
    acc / samples.len() as f64
}

/// Total-variation distance between an empirical histogram of counts and the
/// Poisson(mu) pmf (the Poisson tail beyond the histogram is accounted for).
pub fn tv_distance_poisson(samples: &[u64], mu: f64) -> f64 {
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max + 1];
    for &x in samples {
        hist[x as usize] += 1;
    }
    let n = samples.len() as f64;
    let mut pmf = (-mu).exp();
    let mut tv = 0.0;
    let mut tail = 1.0;
    for (k, &h) in hist.iter().enumerate() {
        tv += (h as f64 / n - pmf).abs();
        tail -= pmf;
        pmf *= mu / (k as f64 + 1.0);
    }
    0.5 * (tv + tail.max(0.0))
}

// ------------------------------------------------------------------
// Sigmoid crossing fits
// ------------------------------------------------------------------

/// Four-parameter logistic `lo + (hi - lo) / (1 + exp(-(x - x0)/w))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Logistic4 {
    pub lo: f64,
    pub hi: f64,
    pub x0: f64,
    pub w: f64,
}

impl Logistic4 {
    pub fn eval(&self, x: f64) -> f64 {
        self.lo + (self.hi - self.lo) / (1.0 + (-(x - self.x0) / self.w).exp())
    }

    /// The x where the fitted curve crosses `level`, if the level is inside
    /// the fitted range.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let t = (level - self.lo) / (self.hi - self.lo);
        if t <= 0.0 || t >= 1.0 || !t.is_finite() {
            return None;
        }
        Some(self.x0 + self.w * (t / (1.0 - t)).ln())
    }
}

/// Weighted least-squares fit of a 4-parameter logistic to frequency data.
/// Weights are inverse CI widths, so well-resolved cells dominate.
pub fn fit_logistic4(xs: &[f64], freqs: &[f64], weights: &[f64]) -> Logistic4 {
    assert_eq!(xs.len(), freqs.len());
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (xmax - xmin).max(1e-9);
    let sse = |p: &[f64]| -> f64 {
        let m = Logistic4 {
            lo: p[0],
            hi: p[1],
            x0: p[2],
            w: p[3].abs().max(1e-6 * span),
        };
        let mut s = 0.0;
        for i in 0..xs.len() {
            let r = m.eval(xs[i]) - freqs[i];
            s += weights[i] * r * r;
        }
        // Soft penalty keeping the plateaus inside [0,1]; frequencies cannot
        // leave that range so neither should the asymptotes, by much.
        s + 10.0 * (p[0].min(0.0).powi(2) + (p[1] - 1.0).max(0.0).powi(2))
    };
    let start = [0.0, 1.0, 0.5 * (xmin + xmax), 0.2 * span];
    let scale = [0.2, 0.2, 0.3 * span, 0.2 * span];
    let best = nelder_mead(&sse, &start, &scale, 4000, 1e-12);
    Logistic4 {
        lo: best[0],
        hi: best[1],
        x0: best[2],
        w: best[3].abs().max(1e-6 * span),
    }
}

/// Plain Nelder-Mead simplex minimizer. Good enough for the 4-parameter
/// fits here; not intended as a general optimizer.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    scale: &[f64],
    max_iter: usize,
    f_tol: f64,
) -> Vec<f64> {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += scale[i];
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        // Order simplex by function value.
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap());
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let refv: Vec<f64> = idx.iter().map(|&i| fv[i]).collect();
        simplex = reordered;
        fv = refv;
        if (fv[n] - fv[0]).abs() <= f_tol * (fv[0].abs() + f_tol) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let reflect: Vec<f64> = (0..n).map(|j| 2.0 * centroid[j] - simplex[n][j]).collect();
        let fr = f(&reflect);
        if fr < fv[0] {
            let expand: Vec<f64> = (0..n).map(|j| 3.0 * centroid[j] - 2.0 * simplex[n][j]).collect();
            let fe = f(&expand);
            if fe < fr {
                simplex[n] = expand;
                fv[n] = fe;
            } else {
                simplex[n] = reflect;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = reflect;
            fv[n] = fr;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|j| 0.5 * (centroid[j] + simplex[n][j]))
                .collect();
            let fc = f(&contract);
            if fc < fv[n] {
                simplex[n] = contract;
                fv[n] = fc;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = 0.5 * (simplex[i][j] + simplex[0][j]);
                    }
                    fv[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if fv[i] < fv[best] {
            best = i;
        }
    }
    simplex.swap_remove(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes_match_closed_forms() {
        assert!((ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((ball_volume(2) - PI).abs() < 1e-15);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn small_cap_coefficient_values() {
        // d=2: exact value 1/4; d=3: 2/(3 pi). Both follow from the
        // gamma-function expression evaluated by hand.
        assert!((small_cap_coefficient(2) - 0.25).abs() < 1e-15);
        assert!((small_cap_coefficient(3) - 2.0 / (3.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_hits_known_integrals() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        let v = integrate(|x| (-x * x).exp(), -8.0, 8.0, 1e-12);
        assert!((v - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let w = wilson(3, 10);
        assert!(w.lo < w.estimate && w.estimate < w.hi);
        let w = wilson(0, 10);
        assert!(w.lo == 0.0 && w.hi > 0.0);
        let w = wilson(10, 10);
        assert!(w.hi > 0.999 && w.lo < 1.0);
        // trials=1, hit: estimate 1 and a wide interval.
        let w = wilson(1, 1);
        assert_eq!(w.estimate, 1.0);
        assert!(w.lo < 1.0);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (a, b, r2) = linear_fit(&xs, &ys);
        assert!((a - 1.0).abs() < 1e-12);
        assert!((b - 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_statistic_of_exact_uniform_grid_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn falling_moments_of_constant() {
        let xs = vec![3u64; 10];
        assert_eq!(falling_moment(&xs, 1), 3.0);
        assert_eq!(falling_moment(&xs, 2), 6.0);
        assert_eq!(falling_moment(&xs, 3), 6.0);
        assert_eq!(falling_moment(&xs, 4), 0.0);
    }

    #[test]
    fn logistic_fit_recovers_crossing() {
        let xs: Vec<f64> = (0..15).map(|i| i as f64 * 0.2).collect();
        let truth = Logistic4 {
            lo: 0.0,
            hi: 1.0,
            x0: 1.4,
            w: 0.25,
        };
        let ys: Vec<f64> = xs.iter().map(|&x| truth.eval(x)).collect();
        let w = vec![1.0; xs.len()];
        let fit = fit_logistic4(&xs, &ys, &w);
        let cross = fit.crossing(0.5).unwrap();
        assert!((cross - 1.4).abs() < 0.02, "crossing {cross}");
    }

    #[test]
    fn nelder_mead_minimizes_quadratic() {
        let f = |p: &[f64]| (p[0] - 2.0).powi(2) + (p[1] + 1.0).powi(2);
        let best = nelder_mead(&f, &[0.0, 0.0], &[1.0, 1.0], 500, 1e-14);
        assert!((best[0] - 2.0).abs() < 1e-4);
        assert!((best[1] + 1.0).abs() < 1e-4);
    }
}
