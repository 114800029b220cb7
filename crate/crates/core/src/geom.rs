//! Spherical geometry on S^d: uniform sampling, geodesic and chordal
//! distances, stereographic projection and its metric distortion bounds,
//! spherical caps and the density of projected uniform points.

use crate::numeric::{ball_volume, integrate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pole guard for stereographic projection: reject when `1 - x_{d+1}` is
/// smaller than this.
pub const POLE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("point too close to the projection pole (1 - x_{{d+1}} = {0:.3e})")]
    AtPole(f64),
    #[error("antipodal image of the origin is the pole")]
    OriginHasNoAntipode,
    #[error("cap opening must lie in (0, pi], got {0}")]
    BadOpening(f64),
    #[error("point above the height cutoff t = {0}")]
    AboveCutoff(f64),
}

/// A point of the d-dimensional sphere S^d, stored as a unit vector in
/// R^{d+1}. Renormalized on construction so `|norm - 1| <= 1e-12` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Build from ambient coordinates (length d+1), normalizing to the
    /// sphere. The input must be non-zero and of length >= 2.
    pub fn new(coords: Vec<f64>) -> Result<Self, GeomError> {
        if coords.len() < 2 {
            return Err(GeomError::ZeroDimension);
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeomError::ZeroDimension);
        }
        // Vectors already on the sphere pass through untouched so that
        // serialization round-trips are bit-exact.
        if (norm - 1.0).abs() <= 1e-12 {
            return Ok(Self { coords });
        }
        let coords = coords.into_iter().map(|c| c / norm).collect();
        Ok(Self { coords })
    }

    /// Intrinsic sphere dimension d (ambient length minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Height coordinate `x_{d+1}`.
    pub fn height(&self) -> f64 {
        *self.coords.last().unwrap()
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Standard basis vector e_i on S^d (ambient index `i < d+1`).
    pub fn basis(d: usize, i: usize) -> SpherePoint {
        let mut coords = vec![0.0; d + 1];
        coords[i] = 1.0;
        SpherePoint { coords }
    }
}

/// Image of a sphere point under stereographic projection: a point of R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub coords: Vec<f64>,
}

impl ProjectedPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &ProjectedPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Spherical cap `{x : dist(center, x) < opening}` with opening in (0, pi].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub center: SpherePoint,
    pub opening: f64,
}

impl Cap {
    pub fn new(center: SpherePoint, opening: f64) -> Result<Self, GeomError> {
        if !(opening > 0.0 && opening <= std::f64::consts::PI) {
            return Err(GeomError::BadOpening(opening));
        }
        Ok(Self { center, opening })
    }

    pub fn contains(&self, x: &SpherePoint) -> bool {
        geodesic_distance(&self.center, x).expect("cap and point dimensions agree") < self.opening
    }
}

/// Draw `n` i.i.d. uniform points of S^d, deterministic in `seed`.
///
/// Sampling normalizes independent standard Gaussians, which is exact and
/// dimension-generic.
pub fn sample_uniform(d: usize, n: usize, seed: u64) -> Result<Vec<SpherePoint>, GeomError> {
    if d == 0 {
        return Err(GeomError::ZeroDimension);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sample_one(d, &mut rng)).collect())
}

/// Draw a single uniform point using the caller's RNG.
pub fn sample_one<R: Rng>(d: usize, rng: &mut R) -> SpherePoint {
    let mut coords = vec![0.0f64; d + 1];
    sample_unit_into(rng, &mut coords);
    SpherePoint { coords }
}

/// Fill `out` (length d+1) with a uniform unit vector. Hot-loop variant used
/// by the Monte Carlo drivers to avoid per-point allocation.
pub fn sample_unit_into<R: Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for c in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *c = g;
            norm2 += g * g;
        }
        if norm2 > 1e-300 {
            let inv = norm2.sqrt().recip();
            for c in out.iter_mut() {
                *c *= inv;
            }
            return;
        }
    }
}

/// Geodesic distance `angle(u, 0, v)` in [0, pi]. The dot product is clamped
/// to [-1, 1] before `acos` for stability near antipodal pairs.
pub fn geodesic_distance(u: &SpherePoint, v: &SpherePoint) -> Result<f64, GeomError> {
    if u.dim() != v.dim() {
        return Err(GeomError::DimensionMismatch(u.dim(), v.dim()));
    }
    Ok(u.dot(v).clamp(-1.0, 1.0).acos())
}

/// Euclidean (chordal) distance, equal to `2 sin(geodesic/2)`.
pub fn chord_distance(u: &SpherePoint, v: &SpherePoint) -> Result<f64, GeomError> {
    if u.dim() != v.dim() {
        return Err(GeomError::DimensionMismatch(u.dim(), v.dim()));
    }
    Ok(u.coords
        .iter()
        .zip(&v.coords)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Stereographic projection from the north pole:
/// `x -> (x_1, ..., x_d) / (1 - x_{d+1})`.
pub fn stereo_project(x: &SpherePoint) -> Result<ProjectedPoint, GeomError> {
    let denom = 1.0 - x.height();
    if denom < POLE_TOL {
        return Err(GeomError::AtPole(denom));
    }
    let d = x.dim();
    Ok(ProjectedPoint::new(
        x.coords[..d].iter().map(|c| c / denom).collect(),
    ))
}

/// Inverse stereographic projection, total on R^d.
pub fn stereo_inverse(z: &ProjectedPoint) -> SpherePoint {
    let r2: f64 = z.coords.iter().map(|c| c * c).sum();
    let denom = 1.0 + r2;
    let mut coords: Vec<f64> = z.coords.iter().map(|c| 2.0 * c / denom).collect();
    coords.push((r2 - 1.0) / denom);
    SpherePoint { coords }
}

/// Image of the antipodal map in projected coordinates: `z -> -z/|z|^2`.
/// Satisfies `stereo_project(-stereo_inverse(z)) = antipodal_projected(z)`.
pub fn antipodal_projected(z: &ProjectedPoint) -> Result<ProjectedPoint, GeomError> {
    let r2: f64 = z.coords.iter().map(|c| c * c).sum();
    if r2 == 0.0 {
        return Err(GeomError::OriginHasNoAntipode);
    }
    Ok(ProjectedPoint::new(
        z.coords.iter().map(|c| -c / r2).collect(),
    ))
}

/// Density of the stereographic image of a uniform point of S^d:
/// `f_Z(z) = (1 / ((d+1) kappa_{d+1})) * (2 / (1 + |z|^2))^d`.
pub fn projected_density(z: &ProjectedPoint, d: usize) -> f64 {
    let r2: f64 = z.coords.iter().map(|c| c * c).sum();
    projected_density_radial(r2.sqrt(), d)
}

/// Radial form of [`projected_density`] at `|z| = rho`.
pub fn projected_density_radial(rho: f64, d: usize) -> f64 {
    (2.0 / (1.0 + rho * rho)).powi(d as i32) / ((d + 1) as f64 * ball_volume(d + 1))
}

/// Cdf of the projected radius `|Z|` for Z the stereographic image of a
/// uniform sphere point, obtained by integrating the radial density.
pub fn projected_radius_cdf(rho: f64, d: usize) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let dk = d as f64 * ball_volume(d);
    integrate(
        |s| projected_density_radial(s, d) * dk * s.powi(d as i32 - 1),
        0.0,
        rho,
        1e-12,
    )
    .min(1.0)
}

/// Normalized uniform measure of a spherical cap of the given opening:
/// `int_0^opening sin^{d-1} / int_0^pi sin^{d-1}`, by adaptive quadrature.
pub fn cap_measure(opening: f64, d: usize) -> Result<f64, GeomError> {
    if !(opening > 0.0 && opening <= std::f64::consts::PI) {
        return Err(GeomError::BadOpening(opening));
    }
    let integrand = |theta: f64| theta.sin().powi(d as i32 - 1);
    let num = integrate(integrand, 0.0, opening, 1e-10);
    let den = integrate(integrand, 0.0, std::f64::consts::PI, 1e-10);
    Ok((num / den).min(1.0))
}

/// Largest near-pole cap radius `delta` for which the proof of the
/// near-pole distortion bound applies at slack `eps`: the biggest `delta`
/// with `1 / (1 + cos(3 delta)) < 1/2 + eps`.
pub fn near_pole_delta(eps: f64) -> f64 {
    assert!(eps > 0.0 && eps < 0.5);
    ((0.5 - eps) / (0.5 + eps)).acos() / 3.0
}

/// Geodesic distance via the chord, accurate at both ends of [0, pi];
/// used by the distortion verifier where the acos route loses ~1e-8 of
/// absolute accuracy near coincident pairs.
fn stable_geodesic(u: &SpherePoint, v: &SpherePoint) -> f64 {
    let chord_half = 0.5
        * u.coords
            .iter()
            .zip(&v.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    if u.dot(v) >= 0.0 {
        2.0 * chord_half.clamp(0.0, 1.0).asin()
    } else {
        let anti_half = 0.5
            * u.coords
                .iter()
                .zip(&v.coords)
                .map(|(a, b)| (a + b) * (a + b))
                .sum::<f64>()
                .sqrt();
        std::f64::consts::PI - 2.0 * anti_half.clamp(0.0, 1.0).asin()
    }
}

/// Result of evaluating the stereographic distortion bounds on a pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub geodesic: f64,
    pub projected: f64,
    /// `|pi(a) - pi(b)| >= geodesic / 2` (holds for all pairs off the pole).
    pub lower_ok: bool,
    /// Near-pole upper bound `(1/2 + eps) * geodesic`; `None` when the pair
    /// is outside the qualifying cap around the south pole.
    pub near_pole_ok: Option<bool>,
    /// General upper bound `((2 - t) / (1 - t)^2) * geodesic` for pairs with
    /// height at most `t`.
    pub general_ok: bool,
    pub violation: bool,
}

/// Evaluate the three projection distortion bounds on the pair `(a, b)`.
///
/// `t` is the height cutoff for the general upper bound; both points must
/// satisfy `x_{d+1} <= t`. `eps` parametrizes the near-pole bound, with the
/// qualifying cap radius taken as [`near_pole_delta`] of `eps`.
pub fn distortion_check(
    a: &SpherePoint,
    b: &SpherePoint,
    t: f64,
    eps: f64,
) -> Result<DistortionReport, GeomError> {
    if a.height() > t || b.height() > t {
        return Err(GeomError::AboveCutoff(t));
    }
    if a.dim() != b.dim() {
        return Err(GeomError::DimensionMismatch(a.dim(), b.dim()));
    }
    let geodesic = stable_geodesic(a, b);
    let pa = stereo_project(a)?;
    let pb = stereo_project(b)?;
    let projected = pa.dist(&pb);
    let slack = 1e-12 * (1.0 + geodesic);
    let lower_ok = projected >= 0.5 * geodesic - slack;
    let delta = near_pole_delta(eps);
    let south = SpherePoint::basis(a.dim(), a.dim()).antipode();
    let in_cap = geodesic_distance(a, &south)? < delta && geodesic_distance(b, &south)? < delta;
    let near_pole_ok = if in_cap {
        Some(projected <= (0.5 + eps) * geodesic + slack)
    } else {
        None
    };
    let general_ok = projected <= (2.0 - t) / ((1.0 - t) * (1.0 - t)) * geodesic + slack;
    let violation = !lower_ok || near_pole_ok == Some(false) || !general_ok;
    Ok(DistortionReport {
        geodesic,
        projected,
        lower_ok,
        near_pole_ok,
        general_ok,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rejects_zero_dimension() {
        assert_eq!(sample_uniform(0, 5, 1).unwrap_err(), GeomError::ZeroDimension);
    }

    #[test]
    fn sample_zero_count_is_empty() {
        assert!(sample_uniform(2, 0, 7).unwrap().is_empty());
    }

    #[test]
    fn sampling_is_deterministic_and_normalized() {
        let a = sample_uniform(3, 50, 42).unwrap();
        let b = sample_uniform(3, 50, 42).unwrap();
        assert_eq!(a, b);
        for p in &a {
            let norm: f64 = p.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn coordinate_moments_of_uniform_sample() {
        // E[x_i] = 0 and E[x_i^2] = 1/(d+1); checked within 4 sigma at 1e5.
        let d = 2;
        let n = 100_000;
        let pts = sample_uniform(d, n, 9).unwrap();
        let var = 1.0 / (d as f64 + 1.0);
        let sigma_mean = (var / n as f64).sqrt();
        for i in 0..=d {
            let mean: f64 = pts.iter().map(|p| p.coords()[i]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 * sigma_mean, "coord {i}: mean {mean}");
        }
        let mean_sq: f64 = pts.iter().map(|p| p.height() * p.height()).sum::<f64>() / n as f64;
        // Var(x^2) = E x^4 - (E x^2)^2 = 1/5 - 1/9 for d=2 (x uniform height).
        let sigma_sq = ((1.0 / 5.0 - 1.0 / 9.0) / n as f64).sqrt();
        assert!((mean_sq - var).abs() < 4.0 * sigma_sq, "mean x^2 {mean_sq}");
    }

    #[test]
    fn rotation_invariance_of_coordinate_moments() {
        // Applying a fixed rotation (here: a coordinate rotation by an
        // irrational angle in the (0, 2) plane) leaves the moment statistics
        // unchanged within Monte Carlo tolerance.
        let n = 100_000;
        let pts = sample_uniform(2, n, 11).unwrap();
        let (c, s) = (1.234f64.cos(), 1.234f64.sin());
        let mut mean = [0.0f64; 3];
        let mut mean_sq = [0.0f64; 3];
        for p in &pts {
            let q = [
                c * p.coords()[0] - s * p.coords()[2],
                p.coords()[1],
                s * p.coords()[0] + c * p.coords()[2],
            ];
            for i in 0..3 {
                mean[i] += q[i];
                mean_sq[i] += q[i] * q[i];
            }
        }
        let sigma_mean = (1.0f64 / 3.0 / n as f64).sqrt();
        let sigma_sq = ((1.0f64 / 5.0 - 1.0 / 9.0) / n as f64).sqrt();
        for i in 0..3 {
            assert!((mean[i] / n as f64).abs() < 4.0 * sigma_mean);
            assert!((mean_sq[i] / n as f64 - 1.0 / 3.0).abs() < 4.0 * sigma_sq);
        }
    }

    #[test]
    fn geodesic_basics() {
        let e1 = SpherePoint::basis(2, 0);
        let e2 = SpherePoint::basis(2, 1);
        assert_eq!(geodesic_distance(&e1, &e1).unwrap(), 0.0);
        assert!((geodesic_distance(&e1, &e1.antipode()).unwrap() - PI).abs() < 1e-15);
        assert!((geodesic_distance(&e1, &e2).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let e1d3 = SpherePoint::basis(3, 0);
        assert!(geodesic_distance(&e1, &e1d3).is_err());
    }

    #[test]
    fn chord_matches_two_sine_half() {
        let e1 = SpherePoint::basis(2, 0);
        assert!((chord_distance(&e1, &e1.antipode()).unwrap() - 2.0).abs() < 1e-15);
        let e2 = SpherePoint::basis(2, 1);
        assert!((chord_distance(&e1, &e2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let pts = sample_uniform(2, 500, 3).unwrap();
        for pair in pts.chunks(2) {
            let geo = geodesic_distance(&pair[0], &pair[1]).unwrap();
            let chord = chord_distance(&pair[0], &pair[1]).unwrap();
            assert!((chord - 2.0 * (geo / 2.0).sin()).abs() <= 1e-12);
            // (2/pi) * geodesic <= chord <= geodesic.
            assert!(chord <= geo + 1e-12);
            assert!(chord >= 2.0 / PI * geo - 1e-12);
        }
    }

    #[test]
    fn projection_round_trips() {
        let south = SpherePoint::new(vec![0.0, 0.0, -1.0]).unwrap();
        let z = stereo_project(&south).unwrap();
        assert!(z.norm() < 1e-15);
        let equator = SpherePoint::basis(2, 0);
        let z = stereo_project(&equator).unwrap();
        assert!((z.coords[0] - 1.0).abs() < 1e-15 && z.coords[1].abs() < 1e-15);
        let pts = sample_uniform(2, 200, 5).unwrap();
        for p in pts.iter().filter(|p| 1.0 - p.height() >= POLE_TOL) {
            let back = stereo_inverse(&stereo_project(p).unwrap());
            let err = chord_distance(p, &back).unwrap();
            assert!(err < 1e-10);
        }
        // And the other composition order, on the plane.
        let z = ProjectedPoint::new(vec![0.3, -1.7]);
        let round = stereo_project(&stereo_inverse(&z)).unwrap();
        assert!(z.dist(&round) < 1e-10);
    }

    #[test]
    fn pole_is_rejected() {
        let north = SpherePoint::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(stereo_project(&north), Err(GeomError::AtPole(_))));
    }

    #[test]
    fn antipodal_map_formula() {
        let z = ProjectedPoint::new(vec![1.0, 0.0]);
        let w = antipodal_projected(&z).unwrap();
        assert!((w.coords[0] + 1.0).abs() < 1e-15 && w.coords[1].abs() < 1e-15);
        let z = ProjectedPoint::new(vec![2.0, 0.0]);
        let w = antipodal_projected(&z).unwrap();
        assert!((w.coords[0] + 0.5).abs() < 1e-15);
        assert!(antipodal_projected(&ProjectedPoint::new(vec![0.0, 0.0])).is_err());
        // Consistency with the sphere-side antipodal map, and |phi(z)| = 1/|z|.
        let pts = sample_uniform(2, 200, 8).unwrap();
        for p in &pts {
            if 1.0 - p.height() < 1e-3 || 1.0 + p.height() < 1e-3 {
                continue;
            }
            let z = stereo_project(p).unwrap();
            let via_sphere = stereo_project(&p.antipode()).unwrap();
            let via_formula = antipodal_projected(&z).unwrap();
            assert!(via_sphere.dist(&via_formula) < 1e-10);
            assert!((via_formula.norm() - 1.0 / z.norm()).abs() < 1e-10 * (1.0 + 1.0 / z.norm()));
        }
    }

    #[test]
    fn projected_density_value_and_normalization() {
        // d=2 at the origin: 4 / (3 kappa_3) = 1/pi.
        let z = ProjectedPoint::new(vec![0.0, 0.0]);
        assert!((projected_density(&z, 2) - 1.0 / PI).abs() < 1e-14);
        // The density integrates to 1 over R^d (radial quadrature with the
        // substitution rho = s/(1-s) compactifying the domain).
        for d in [1usize, 2, 3] {
            let dk = d as f64 * ball_volume(d);
            let total = integrate(
                |s| {
                    let rho = s / (1.0 - s);
                    let jac = 1.0 / ((1.0 - s) * (1.0 - s));
                    projected_density_radial(rho, d) * dk * rho.powi(d as i32 - 1) * jac
                },
                0.0,
                1.0 - 1e-12,
                1e-10,
            );
            assert!((total - 1.0).abs() < 1e-6, "d={d}: integral {total}");
        }
    }

    #[test]
    fn projected_radius_cdf_matches_closed_form_d2() {
        // For d=2 the radial cdf is rho^2 / (1 + rho^2).
        for rho in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let cdf = projected_radius_cdf(rho, 2);
            let exact = rho * rho / (1.0 + rho * rho);
            assert!((cdf - exact).abs() < 1e-9, "rho={rho}");
        }
    }

    #[test]
    fn cap_type_validates_and_tests_membership() {
        let center = SpherePoint::basis(2, 2);
        assert!(Cap::new(center.clone(), 0.0).is_err());
        assert!(Cap::new(center.clone(), PI + 0.1).is_err());
        let cap = Cap::new(center.clone(), 0.5).unwrap();
        assert!(cap.contains(&center));
        assert!(!cap.contains(&center.antipode()));
        let nearby = SpherePoint::new(vec![0.3f64.sin(), 0.0, 0.3f64.cos()]).unwrap();
        assert!(cap.contains(&nearby));
    }

    #[test]
    fn cap_measure_basics() {
        assert!((cap_measure(PI, 2).unwrap() - 1.0).abs() < 1e-10);
        assert!((cap_measure(FRAC_PI_2, 2).unwrap() - 0.5).abs() < 1e-10);
        assert!((cap_measure(FRAC_PI_2, 5).unwrap() - 0.5).abs() < 1e-10);
        assert!(cap_measure(0.0, 2).is_err());
        assert!(cap_measure(PI + 0.1, 2).is_err());
        // Monotone in the opening.
        let mut last = 0.0;
        for k in 1..=10 {
            let m = cap_measure(k as f64 * PI / 10.0, 3).unwrap();
            assert!(m > last);
            last = m;
        }
        // d=2 closed form (1 - cos a)/2.
        for a in [0.05f64, 0.3, 1.0, 2.0] {
            let m = cap_measure(a, 2).unwrap();
            assert!((m - (1.0 - a.cos()) / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cap_measure_small_opening_coefficient() {
        // cap(alpha)/alpha^d -> c_d; at alpha = 1e-3 and d=2 the ratio is
        // within the quadratic correction of 1/4.
        let alpha = 1e-3;
        let ratio = cap_measure(alpha, 2).unwrap() / (alpha * alpha);
        assert!((ratio - 0.25).abs() < 1e-7, "ratio {ratio}");
    }

    #[test]
    fn distortion_bounds_hold_on_random_pairs() {
        let pts = sample_uniform(2, 2000, 13).unwrap();
        // General pairs below the equator: lower bound and t=0 upper bound
        // (factor (2-0)/(1-0)^2 = 2).
        let below: Vec<&SpherePoint> = pts.iter().filter(|p| p.height() <= 0.0).collect();
        for pair in below.chunks(2) {
            if pair.len() < 2 {
                break;
            }
            let rep = distortion_check(pair[0], pair[1], 0.0, 0.05).unwrap();
            assert!(rep.lower_ok && rep.general_ok && !rep.violation);
            assert!(rep.projected <= 2.0 * rep.geodesic + 1e-12);
        }
        // Identical points: all bounds trivially satisfied.
        let rep = distortion_check(&below[0], &below[0], 0.0, 0.05).unwrap();
        assert!(!rep.violation && rep.geodesic == 0.0);
        // Cutoff enforcement.
        let high = pts.iter().find(|p| p.height() > 0.5).unwrap();
        assert!(distortion_check(high, &pts[0], 0.0, 0.05).is_err());
    }

    #[test]
    fn distortion_lower_bound_mass_check() {
        // 1e5 random pairs off the pole: |pi(a)-pi(b)| >= dist/2, and below
        // the equator the t=0 upper bound gives a factor 2.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked_lower = 0u64;
        let mut checked_upper = 0u64;
        while checked_lower < 100_000 {
            let a = sample_one(2, &mut rng);
            let b = sample_one(2, &mut rng);
            if 1.0 - a.height() < 1e-6 || 1.0 - b.height() < 1e-6 {
                continue;
            }
            let geo = geodesic_distance(&a, &b).unwrap();
            let proj = stereo_project(&a).unwrap().dist(&stereo_project(&b).unwrap());
            assert!(proj >= 0.5 * geo - 1e-9, "lower bound: {proj} vs {geo}");
            checked_lower += 1;
            if a.height() <= 0.0 && b.height() <= 0.0 {
                assert!(proj <= 2.0 * geo + 1e-9, "t=0 upper bound");
                checked_upper += 1;
            }
        }
        assert!(checked_upper > 10_000);
    }

    #[test]
    fn near_pole_distortion_bound() {
        // Pairs inside cap(south, delta(eps)) obey the (1/2 + eps) factor.
        let eps = 0.05;
        let delta = near_pole_delta(eps);
        assert!(1.0 / (1.0 + (3.0 * delta).cos()) <= 0.5 + eps + 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        while checked < 2000 {
            let a = sample_one(2, &mut rng);
            let b = sample_one(2, &mut rng);
            let south = SpherePoint::new(vec![0.0, 0.0, -1.0]).unwrap();
            if geodesic_distance(&a, &south).unwrap() < delta
                && geodesic_distance(&b, &south).unwrap() < delta
            {
                let rep = distortion_check(&a, &b, 0.0, eps).unwrap();
                assert_eq!(rep.near_pole_ok, Some(true));
                checked += 1;
            } else {
                // Rejection sampling directly in the cap is faster: pull the
                // points toward the south pole instead of discarding.
                let pull = |p: &SpherePoint| {
                    let mut c = p.coords().to_vec();
                    c[0] *= delta / 3.0;
                    c[1] *= delta / 3.0;
                    c[2] = -(1.0f64 - c[0] * c[0] - c[1] * c[1]).sqrt();
                    SpherePoint::new(c).unwrap()
                };
                let (a, b) = (pull(&a), pull(&b));
                let rep = distortion_check(&a, &b, 0.0, eps).unwrap();
                assert_eq!(rep.near_pole_ok, Some(true));
                checked += 1;
            }
        }
    }
}
