//! Real-codimension-two intersections in ℂ², their complex-tangential
//! transversality, and plurisubharmonicity certificates for squared-distance
//! functions.
//!
//! A [`DefiningPair`] is two real defining functions `ρ₁, ρ₂` on ℂ². Points
//! of the intersection `{ρ₁ = ρ₂ = 0}` are produced by damped Gauss–Newton
//! with a rank-truncated pseudoinverse, so pairs whose gradients become
//! parallel (the stocked cutoff pair does, on the interior of its
//! intersection) still converge. Transversality of the complex-tangential
//! directions is measured by the determinant of the 2×2 matrix of Wirtinger
//! gradients with unit-normalized rows; `exceptional_points` polishes sample
//! points against the augmented system `ρ₁ = ρ₂ = 0, det = 0` and clusters
//! the limits, which for the sphere pairs isolates the two poles where the
//! intersection goes complex-tangential.
//!
//! [`distance_sq`] is the squared Euclidean distance to a stocked
//! [`ManifoldPatch`], minimized over the patch parameters by the same damped
//! Gauss–Newton (eight deterministic starts). [`psh_certify`] samples the
//! complex Hessian of that squared distance over a box region: a positive
//! lower bound `C` yields the scaling `λ = 2M/C` that pushes the least
//! eigenvalue to `2M`, while any nonpositive sample refuses with
//! [`Error::CertificationFailure`] — near the sphere poles the distance
//! function genuinely loses plurisubharmonicity, and the certificate says so.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{Point2, SQRT_3};

/// Residual bound certified for every sampled intersection point.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Default threshold on the normalized tangential determinant.
pub const EXCEPTIONAL_EPS: f64 = 1e-8;
/// Stationarity bound for the distance minimizations.
pub const STATIONARITY_TOL: f64 = 1e-12;
/// A Wirtinger row shorter than this cannot be meaningfully unit-normalized
/// and violates the nonvanishing-gradient contract. Sampled points sit on
/// the zero set only to `‖ρ‖ ≤ 1e−10`, so a gradient vanishing like `√ρ`
/// bottoms out near `1e−5`; every stocked pair keeps its rows above `0.14`.
pub const DEGENERATE_ROW_TOL: f64 = 1e-5;
/// Half-width of the random-start box for intersection sampling.
const START_BOX: f64 = 1.2;
/// Finite-difference step for the complex Hessian used by the certifier.
const CERTIFY_STEP: f64 = 1e-4;

/// The stocked pairs of real defining functions on ℂ².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefiningPair {
    /// Unit spheres centered at 0 and 1: intersection is the round 2-sphere
    /// `{Re z₁ = 1/2, (Im z₁)² + |z₂|² = 3/4}`, complex-tangential exactly
    /// at the two poles `(1/2 ± i√3/2, 0)`.
    TwoSpheres,
    /// Flat-cutoff pair: `ρ₁ = λ(s/3) + λ(|z₂|² − 1/4) − e⁻³` with
    /// `s = |z₁|² + |z₂|²` and `λ(t) = e^{−1/t}` (0 for `t ≤ 0`), paired with
    /// the sphere `ρ₂ = s − 1`. The intersection is `{s = 1, |z₂| ≤ 1/2}`;
    /// the gradients are parallel on its interior, so the tangential
    /// determinant vanishes identically there.
    LambdaPair,
    /// Two real hyperplanes `Im z₁ = 0`, `Im z₂ = 0`: fully transversal,
    /// no exceptional points.
    Planes,
    /// Spheres of radii 1 and 1.1 centered at 0 and 1: the same tangential
    /// determinant as the unit pair, with the poles shifted to
    /// `Re z₁ = 0.395`.
    PerturbedSpheres,
    /// `ρ₁ = (Im z₁)²` vanishes to second order, so its gradient dies on the
    /// zero set and every normalized-determinant computation must refuse.
    Degenerate,
}

impl DefiningPair {
    pub fn label(self) -> &'static str {
        match self {
            DefiningPair::TwoSpheres => "two_spheres",
            DefiningPair::LambdaPair => "lambda_pair",
            DefiningPair::Planes => "planes",
            DefiningPair::PerturbedSpheres => "perturbed_spheres",
            DefiningPair::Degenerate => "degenerate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "two_spheres" => DefiningPair::TwoSpheres,
            "lambda_pair" => DefiningPair::LambdaPair,
            "planes" => DefiningPair::Planes,
            "perturbed_spheres" => DefiningPair::PerturbedSpheres,
            "degenerate" => DefiningPair::Degenerate,
            _ => return None,
        })
    }

    /// `(ρ₁, ρ₂)` at `p`.
    pub fn rho(self, p: Point2) -> [f64; 2] {
        let s = p.z1.norm_sqr() + p.z2.norm_sqr();
        match self {
            DefiningPair::TwoSpheres => {
                [s - 1.0, (p.z1 - 1.0).norm_sqr() + p.z2.norm_sqr() - 1.0]
            }
            DefiningPair::LambdaPair => [
                cutoff(s / 3.0) + cutoff(p.z2.norm_sqr() - 0.25) - (-3.0f64).exp(),
                s - 1.0,
            ],
            DefiningPair::Planes => [p.z1.im, p.z2.im],
            DefiningPair::PerturbedSpheres => {
                [s - 1.0, (p.z1 - 1.0).norm_sqr() + p.z2.norm_sqr() - 1.21]
            }
            DefiningPair::Degenerate => [p.z1.im * p.z1.im, p.z2.im],
        }
    }

    /// Distance-comparable residual for membership in `{ρ₁ = ρ₂ = 0}`.
    ///
    /// For the transversal pairs this is the max defining residual, which
    /// already scales like the distance to the zero set. The cutoff factor
    /// in `LambdaPair` is exponentially flat, so its raw residual underflows
    /// to exactly zero on a shell of width ~1e−3 *outside* the zero set;
    /// there the equivalent linear-scale inequalities (`|z₁|²+|z₂|² = 1`,
    /// `|z₂|² ≤ 1/4`) supply a residual the sampler can trust.
    pub fn membership_gap(self, p: Point2) -> f64 {
        match self {
            DefiningPair::LambdaPair => {
                let s = p.z1.norm_sqr() + p.z2.norm_sqr();
                (s - 1.0).abs().max((p.z2.norm_sqr() - 0.25).max(0.0))
            }
            _ => {
                let r = self.rho(p);
                r[0].abs().max(r[1].abs())
            }
        }
    }

    /// Real gradients of `(ρ₁, ρ₂)` as rows over `(x₁, y₁, x₂, y₂)`.
    pub fn gradients(self, p: Point2) -> [[f64; 4]; 2] {
        let (x1, y1, x2, y2) = (p.z1.re, p.z1.im, p.z2.re, p.z2.im);
        match self {
            DefiningPair::TwoSpheres => [
                [2.0 * x1, 2.0 * y1, 2.0 * x2, 2.0 * y2],
                [2.0 * (x1 - 1.0), 2.0 * y1, 2.0 * x2, 2.0 * y2],
            ],
            DefiningPair::LambdaPair => {
                let s = p.z1.norm_sqr() + p.z2.norm_sqr();
                let a = cutoff_deriv(s / 3.0) / 3.0;
                let b = cutoff_deriv(p.z2.norm_sqr() - 0.25);
                [
                    [
                        2.0 * a * x1,
                        2.0 * a * y1,
                        2.0 * (a + b) * x2,
                        2.0 * (a + b) * y2,
                    ],
                    [2.0 * x1, 2.0 * y1, 2.0 * x2, 2.0 * y2],
                ]
            }
            DefiningPair::Planes => [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
            DefiningPair::PerturbedSpheres => [
                [2.0 * x1, 2.0 * y1, 2.0 * x2, 2.0 * y2],
                [2.0 * (x1 - 1.0), 2.0 * y1, 2.0 * x2, 2.0 * y2],
            ],
            DefiningPair::Degenerate => {
                [[0.0, 2.0 * y1, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
            }
        }
    }

    /// Wirtinger rows `(∂ρᵢ/∂z₁, ∂ρᵢ/∂z₂)` and the raw tangential
    /// determinant, straight from the real gradients.
    fn wirtinger_rows(self, p: Point2) -> ([[Complex64; 2]; 2], Complex64) {
        let g = self.gradients(p);
        let row = |r: [f64; 4]| {
            [
                Complex64::new(r[0], -r[1]) / 2.0,
                Complex64::new(r[2], -r[3]) / 2.0,
            ]
        };
        let w = [row(g[0]), row(g[1])];
        let det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
        (w, det)
    }

    /// Tangential determinant with unit-normalized rows; refuses when a
    /// gradient row has died.
    pub fn normalized_det(self, p: Point2) -> Result<Complex64> {
        let (w, det) = self.wirtinger_rows(p);
        let mut scale = 1.0;
        for (index, r) in w.iter().enumerate() {
            let norm = (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
            if norm < DEGENERATE_ROW_TOL {
                return Err(Error::DegenerateGradient {
                    index: index as u8 + 1,
                    norm,
                    z1: p.z1,
                    z2: p.z2,
                });
            }
            scale *= norm;
        }
        Ok(det / scale)
    }
}

/// `e^{−1/t}` for `t > 0`, extended flat by zero.
fn cutoff(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn cutoff_deriv(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

fn to_flat(p: Point2) -> [f64; 4] {
    [p.z1.re, p.z1.im, p.z2.re, p.z2.im]
}

fn from_flat(x: [f64; 4]) -> Point2 {
    Point2 {
        z1: Complex64::new(x[0], x[1]),
        z2: Complex64::new(x[2], x[3]),
    }
}

fn serialize_flat_points<S: Serializer>(
    points: &[Point2],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = ser.serialize_seq(Some(points.len()))?;
    for p in points {
        seq.serialize_element(&to_flat(*p))?;
    }
    seq.end()
}

/// Points on `{ρ₁ = ρ₂ = 0}` with their transversality diagnostics, all
/// vectors aligned by index. Points serialize flat as
/// `[re z₁, im z₁, re z₂, im z₂]`.
#[derive(Clone, Debug, Serialize)]
pub struct ManifoldSample {
    pub pair: DefiningPair,
    pub seed: u64,
    #[serde(serialize_with = "serialize_flat_points")]
    pub points: Vec<Point2>,
    pub det_values: Vec<Complex64>,
    pub exceptional_flags: Vec<bool>,
}

/// Max-norm of the defining residuals.
fn residual_norm(pair: DefiningPair, p: Point2) -> f64 {
    let r = pair.rho(p);
    r[0].abs().max(r[1].abs())
}

/// One damped Gauss–Newton descent of `ρ` from `start`; `None` unless the
/// residual reaches [`RESIDUAL_TOL`].
fn refine_on_manifold(pair: DefiningPair, start: [f64; 4]) -> Option<[f64; 4]> {
    let mut x = start;
    for _ in 0..80 {
        let p = from_flat(x);
        let r = pair.rho(p);
        let err = r[0].abs().max(r[1].abs());
        if err <= RESIDUAL_TOL * 0.1 {
            return Some(x);
        }
        let j = pair.gradients(p);
        let step = pinv_step_2x4(&j, r);
        // Halve until the residual actually drops.
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut trial = x;
            for (t, s) in trial.iter_mut().zip(&step) {
                *t -= scale * s;
            }
            if trial.iter().any(|v| v.abs() > 4.0 * START_BOX) {
                scale *= 0.5;
                continue;
            }
            if residual_norm(pair, from_flat(trial)) < err {
                x = trial;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            return (err <= RESIDUAL_TOL).then_some(x);
        }
    }
    (residual_norm(pair, from_flat(x)) <= RESIDUAL_TOL).then_some(x)
}

/// Minimum-norm Gauss–Newton step `Jᵀ(JJᵀ)⁺ r` with the 2×2 `JJᵀ`
/// eigendecomposed in closed form and small eigenvalues truncated, so
/// rank-one Jacobians (parallel gradients) still produce a usable step.
fn pinv_step_2x4(j: &[[f64; 4]; 2], r: [f64; 2]) -> [f64; 4] {
    let dot = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let a11 = dot(&j[0], &j[0]);
    let a12 = dot(&j[0], &j[1]);
    let a22 = dot(&j[1], &j[1]);
    let tau = 0.5 * (a11 + a22);
    let delta = (0.25 * (a11 - a22) * (a11 - a22) + a12 * a12).sqrt();
    let eigs = [tau + delta, tau - delta];
    let cut = eigs[0] * 1e-12;

    // y = (JJᵀ)⁺ r accumulated over the spectral pairs. Eigenvectors are
    // picked by position, not by value: equal eigenvalues (orthogonal rows
    // of equal length) must still span both coordinate directions.
    let mut y = [0.0f64; 2];
    for (idx, lam) in eigs.into_iter().enumerate() {
        if lam <= cut || lam <= 0.0 {
            continue;
        }
        let v = if a12.abs() > 1e-300 {
            let u = [lam - a22, a12];
            let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
            [u[0] / n, u[1] / n]
        } else if (a11 >= a22) == (idx == 0) {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        let coef = (v[0] * r[0] + v[1] * r[1]) / lam;
        y[0] += coef * v[0];
        y[1] += coef * v[1];
    }
    let mut step = [0.0f64; 4];
    for (i, s) in step.iter_mut().enumerate() {
        *s = j[0][i] * y[0] + j[1][i] * y[1];
    }
    step
}

/// Draw `n` points of `{ρ₁ = ρ₂ = 0}` by Gauss–Newton from uniform starts in
/// the box `[−1.2, 1.2]⁴`. Point `i` uses RNG stream `i` of the seed, so the
/// output is reproducible point-by-point regardless of retry counts.
pub fn sample_intersection(
    pair: DefiningPair,
    n: usize,
    seed: u64,
) -> Result<ManifoldSample> {
    let mut points = Vec::with_capacity(n);
    let mut det_values = Vec::with_capacity(n);
    let mut exceptional_flags = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut found = None;
        for _ in 0..40 {
            let start = [
                rng.random_range(-START_BOX..START_BOX),
                rng.random_range(-START_BOX..START_BOX),
                rng.random_range(-START_BOX..START_BOX),
                rng.random_range(-START_BOX..START_BOX),
            ];
            if let Some(x) = refine_on_manifold(pair, start) {
                // A converged descent can still sit where a flat defining
                // function underflows; only distance-scale membership counts.
                if pair.membership_gap(from_flat(x)) <= RESIDUAL_TOL {
                    found = Some(from_flat(x));
                    break;
                }
            }
        }
        let p = found.ok_or(Error::SamplingBudget {
            requested: n,
            found: points.len(),
        })?;
        let det = pair.normalized_det(p)?;
        points.push(p);
        det_values.push(det);
        exceptional_flags.push(det.norm() < EXCEPTIONAL_EPS);
    }
    Ok(ManifoldSample {
        pair,
        seed,
        points,
        det_values,
        exceptional_flags,
    })
}

/// Solve a 4×4 linear system by partial-pivot elimination; `None` when a
/// pivot collapses (the augmented system is singular, e.g. a constant or
/// identically zero determinant).
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let (pivot_row, pivot) = (col..4)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pivot < 1e-13 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for row in (0..4).rev() {
        let mut acc = b[row];
        for c in row + 1..4 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Augmented residual `(ρ₁, ρ₂, Re det, Im det)` with the raw determinant.
fn augmented_residual(pair: DefiningPair, x: [f64; 4]) -> [f64; 4] {
    let p = from_flat(x);
    let r = pair.rho(p);
    let (_, det) = pair.wirtinger_rows(p);
    [r[0], r[1], det.re, det.im]
}

fn augmented_norm(f: &[f64; 4]) -> f64 {
    f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Newton polish of the augmented system from `start`; `None` unless it
/// lands with residual below [`RESIDUAL_TOL`].
fn polish_exceptional(pair: DefiningPair, start: [f64; 4]) -> Option<[f64; 4]> {
    const FD: f64 = 1e-6;
    let mut x = start;
    for _ in 0..60 {
        let f = augmented_residual(pair, x);
        let err = augmented_norm(&f);
        if err <= RESIDUAL_TOL * 1e-2 {
            return Some(x);
        }
        // Rows 0-1 are the closed-form gradients; rows 2-3 are central
        // differences of the raw determinant.
        let p = from_flat(x);
        let g = pair.gradients(p);
        let mut jac = [[0.0f64; 4]; 4];
        jac[0] = g[0];
        jac[1] = g[1];
        for c in 0..4 {
            let mut hi = x;
            let mut lo = x;
            hi[c] += FD;
            lo[c] -= FD;
            let (_, dh) = pair.wirtinger_rows(from_flat(hi));
            let (_, dl) = pair.wirtinger_rows(from_flat(lo));
            jac[2][c] = (dh.re - dl.re) / (2.0 * FD);
            jac[3][c] = (dh.im - dl.im) / (2.0 * FD);
        }
        let step = solve4(jac, f)?;
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..25 {
            let mut trial = x;
            for (t, s) in trial.iter_mut().zip(&step) {
                *t -= scale * s;
            }
            if augmented_norm(&augmented_residual(pair, trial)) < err {
                x = trial;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            return (err <= RESIDUAL_TOL).then_some(x);
        }
    }
    (augmented_norm(&augmented_residual(pair, x)) <= RESIDUAL_TOL).then_some(x)
}

/// Locate the points of the sampled intersection where the normalized
/// tangential determinant drops below `eps_exc`.
///
/// Every sample point seeds a Newton polish of the augmented system; starts
/// whose polish cannot converge (constant or degenerate determinant) fall
/// back to the sample point itself when it is already flagged. The limits
/// are clustered to `1e-5` and returned lexicographically sorted, so a pair
/// with isolated complex-tangential points yields exactly those points once
/// each, and a fully transversal pair yields nothing.
pub fn exceptional_points(
    pair: DefiningPair,
    sample: &ManifoldSample,
    eps_exc: f64,
) -> Result<Vec<Point2>> {
    if !(eps_exc > 0.0) {
        return Err(Error::precondition(format!(
            "exceptional threshold must be positive, got {eps_exc}"
        )));
    }
    if sample.pair != pair {
        return Err(Error::precondition(format!(
            "sample was drawn from {}, requested pair is {}",
            sample.pair.label(),
            pair.label()
        )));
    }
    let mut clusters: Vec<[f64; 4]> = Vec::new();
    for (p, flagged) in sample.points.iter().zip(&sample.exceptional_flags) {
        let candidate = match polish_exceptional(pair, to_flat(*p)) {
            Some(x) => Some(x),
            None if *flagged => Some(to_flat(*p)),
            None => None,
        };
        let Some(x) = candidate else { continue };
        let q = from_flat(x);
        if residual_norm(pair, q) > RESIDUAL_TOL {
            continue;
        }
        if pair.normalized_det(q)?.norm() >= eps_exc {
            continue;
        }
        let is_new = clusters.iter().all(|c| {
            let d: f64 = c.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            d.sqrt() > 1e-5
        });
        if is_new {
            clusters.push(x);
        }
    }
    // Lexicographic order with a noise band: coordinates agreeing to 1e-7
    // are ties (converged limits carry ~1e-12 jitter; distinct clusters
    // differ by at least 5e-6 in some coordinate).
    clusters.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            if (x - y).abs() > 1e-7 {
                return x.total_cmp(y);
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(clusters.into_iter().map(from_flat).collect())
}

/// The stocked two-real-dimensional targets for distance computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldPatch {
    /// `{Im z₁ = Im z₂ = 0}` — the real plane ℝ² in ℂ².
    RealPlane,
    /// The unit circle `{|z₁| = 1, z₂ = 0}`.
    Circle,
    /// The round 2-sphere `{Re z₁ = 1/2, (Im z₁)² + |z₂|² = 3/4}` — the
    /// intersection manifold of the unit sphere pair.
    SphereCap,
}

impl ManifoldPatch {
    pub fn label(self) -> &'static str {
        match self {
            ManifoldPatch::RealPlane => "real_plane",
            ManifoldPatch::Circle => "circle",
            ManifoldPatch::SphereCap => "sphere_cap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "real_plane" => ManifoldPatch::RealPlane,
            "circle" => ManifoldPatch::Circle,
            "sphere_cap" => ManifoldPatch::SphereCap,
            _ => return None,
        })
    }

    fn param_count(self) -> usize {
        match self {
            ManifoldPatch::Circle => 1,
            ManifoldPatch::RealPlane | ManifoldPatch::SphereCap => 2,
        }
    }

    /// Smooth global parametrization (the sphere uses latitude/longitude,
    /// which stays smooth through the poles where the longitude column of
    /// the Jacobian degenerates — the truncated pseudoinverse absorbs that).
    fn chart(self, t: [f64; 2]) -> [f64; 4] {
        match self {
            ManifoldPatch::RealPlane => [t[0], 0.0, t[1], 0.0],
            ManifoldPatch::Circle => [t[0].cos(), t[0].sin(), 0.0, 0.0],
            ManifoldPatch::SphereCap => {
                let r = SQRT_3 / 2.0;
                [
                    0.5,
                    r * t[0].sin(),
                    r * t[0].cos() * t[1].cos(),
                    r * t[0].cos() * t[1].sin(),
                ]
            }
        }
    }

    fn chart_jacobian(self, t: [f64; 2]) -> [[f64; 4]; 2] {
        match self {
            ManifoldPatch::RealPlane => {
                [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
            }
            ManifoldPatch::Circle => {
                [[-t[0].sin(), t[0].cos(), 0.0, 0.0], [0.0; 4]]
            }
            ManifoldPatch::SphereCap => {
                let r = SQRT_3 / 2.0;
                [
                    [
                        0.0,
                        r * t[0].cos(),
                        -r * t[0].sin() * t[1].cos(),
                        -r * t[0].sin() * t[1].sin(),
                    ],
                    [
                        0.0,
                        0.0,
                        -r * t[0].cos() * t[1].sin(),
                        r * t[0].cos() * t[1].cos(),
                    ],
                ]
            }
        }
    }

    fn starts(self) -> [[f64; 2]; 8] {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            // Offsets around the projection of typical query points.
            ManifoldPatch::RealPlane => [
                [0.0, 0.0],
                [1.0, 0.0],
                [-1.0, 0.0],
                [0.0, 1.0],
                [0.0, -1.0],
                [1.0, 1.0],
                [-1.0, -1.0],
                [0.5, -0.5],
            ],
            ManifoldPatch::Circle => [
                [0.0, 0.0],
                [FRAC_PI_2 / 2.0, 0.0],
                [FRAC_PI_2, 0.0],
                [3.0 * FRAC_PI_2 / 2.0, 0.0],
                [PI, 0.0],
                [-FRAC_PI_2, 0.0],
                [-FRAC_PI_2 / 2.0, 0.0],
                [-3.0 * FRAC_PI_2 / 2.0, 0.0],
            ],
            ManifoldPatch::SphereCap => [
                [0.0, 0.0],
                [0.0, PI],
                [1.0, FRAC_PI_2],
                [1.0, -FRAC_PI_2],
                [-1.0, FRAC_PI_2],
                [-1.0, -FRAC_PI_2],
                [1.5, 0.0],
                [-1.5, PI],
            ],
        }
    }
}

/// Squared-norm of the mismatch `x − chart(t)`.
fn mismatch_sq(patch: ManifoldPatch, x: &[f64; 4], t: [f64; 2]) -> f64 {
    let c = patch.chart(t);
    x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Squared Euclidean distance from `x` to the patch: damped Gauss–Newton on
/// the chart parameters from eight deterministic starts, each run to
/// gradient stationarity below [`STATIONARITY_TOL`], keeping the best.
pub fn distance_sq(patch: ManifoldPatch, x: Point2) -> Result<f64> {
    let xf = to_flat(x);
    let d = patch.param_count();
    let mut best: Option<f64> = None;
    for start in patch.starts() {
        let mut t = start;
        let mut value = mismatch_sq(patch, &xf, t);
        for _ in 0..100 {
            let c = patch.chart(t);
            let jc = patch.chart_jacobian(t);
            // Residual r = x − chart(t); grad of ½‖r‖² over t is −Jᵀr.
            let mut r = [0.0f64; 4];
            for i in 0..4 {
                r[i] = xf[i] - c[i];
            }
            let mut jt_r = [0.0f64; 2];
            for (row, slot) in jc.iter().zip(jt_r.iter_mut()).take(d) {
                *slot = row.iter().zip(&r).map(|(a, b)| a * b).sum();
            }
            if jt_r.iter().all(|v| v.abs() <= STATIONARITY_TOL) {
                break;
            }
            let step = normal_step(&jc, jt_r, d);
            let mut scale = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = [t[0] + scale * step[0], t[1] + scale * step[1]];
                let tv = mismatch_sq(patch, &xf, trial);
                if tv < value {
                    t = trial;
                    value = tv;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = Some(match best {
            None => value,
            Some(b) => b.min(value),
        });
    }
    Ok(best.expect("at least one start"))
}

/// Solve `(JᵀJ) Δ = Jᵀr` for the chart Jacobian (columns of J are the rows
/// of `jc`), truncating small spectrum so pole-degenerate charts still step.
fn normal_step(jc: &[[f64; 4]; 2], jt_r: [f64; 2], d: usize) -> [f64; 2] {
    let dot = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    if d == 1 {
        let a = dot(&jc[0], &jc[0]);
        if a <= 1e-300 {
            return [0.0, 0.0];
        }
        return [jt_r[0] / a, 0.0];
    }
    let a11 = dot(&jc[0], &jc[0]);
    let a12 = dot(&jc[0], &jc[1]);
    let a22 = dot(&jc[1], &jc[1]);
    let tau = 0.5 * (a11 + a22);
    let delta = (0.25 * (a11 - a22) * (a11 - a22) + a12 * a12).sqrt();
    let eigs = [tau + delta, tau - delta];
    let cut = eigs[0] * 1e-12;
    let mut out = [0.0f64; 2];
    for (idx, lam) in eigs.into_iter().enumerate() {
        if lam <= cut || lam <= 0.0 {
            continue;
        }
        let v = if a12.abs() > 1e-300 {
            let u = [lam - a22, a12];
            let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
            [u[0] / n, u[1] / n]
        } else if (a11 >= a22) == (idx == 0) {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        let coef = (v[0] * jt_r[0] + v[1] * jt_r[1]) / lam;
        out[0] += coef * v[0];
        out[1] += coef * v[1];
    }
    out
}

/// Complex Hessian `[∂²f/∂zⱼ∂z̄ₖ]` of a real-valued `f` at `x`, from central
/// 9-point finite-difference blocks with step `h ∈ [1e−6, 1e−3]`.
#[derive(Clone, Debug, Serialize)]
pub struct HessianReport {
    pub point: Point2,
    pub matrix: [[Complex64; 2]; 2],
    pub min_eigenvalue: f64,
}

pub fn complex_hessian(
    f: impl Fn(Point2) -> f64,
    x: Point2,
    h: f64,
) -> Result<HessianReport> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::precondition(format!(
            "finite-difference step must lie in [1e-6, 1e-3], got {h:e}"
        )));
    }
    let xf = to_flat(x);
    let eval = |offsets: [(usize, f64); 2]| {
        let mut y = xf;
        for (axis, delta) in offsets {
            y[axis] += delta;
        }
        f(from_flat(y))
    };
    let f0 = f(x);
    // Second difference along one real axis.
    let second = |axis: usize| {
        (eval([(axis, h), (axis, 0.0)]) - 2.0 * f0 + eval([(axis, -h), (axis, 0.0)])) / (h * h)
    };
    // Cross difference over two distinct real axes.
    let mixed = |a: usize, b: usize| {
        (eval([(a, h), (b, h)]) - eval([(a, h), (b, -h)]) - eval([(a, -h), (b, h)])
            + eval([(a, -h), (b, -h)]))
            / (4.0 * h * h)
    };

    // Axes: 0 = x₁, 1 = y₁, 2 = x₂, 3 = y₂.
    let d11 = (second(0) + second(1)) / 4.0;
    let d22 = (second(2) + second(3)) / 4.0;
    let xx = mixed(0, 2);
    let yy = mixed(1, 3);
    let xy = mixed(0, 3);
    let yx = mixed(1, 2);
    // ∂²/∂z₁∂z̄₂ = ¼[(∂x₁ − i∂y₁)(∂x₂ + i∂y₂)].
    let d12 = Complex64::new(xx + yy, xy - yx) / 4.0;
    let d21 = Complex64::new(xx + yy, yx - xy) / 4.0;

    let asym = (d12 - d21.conj()).norm();
    let scale = 1.0f64.max(d11.abs()).max(d22.abs()).max(d12.norm());
    if !(asym <= 1e-6 * scale) {
        return Err(Error::NonHermitian(asym));
    }
    let off = (d12 + d21.conj()) / 2.0;
    let matrix = [
        [Complex64::from(d11), off],
        [off.conj(), Complex64::from(d22)],
    ];
    let mean = 0.5 * (d11 + d22);
    let spread = (0.25 * (d11 - d22) * (d11 - d22) + off.norm_sqr()).sqrt();
    Ok(HessianReport {
        point: x,
        matrix,
        min_eigenvalue: mean - spread,
    })
}

/// Axis-aligned sampling box for the certifier.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Region {
    pub center: Point2,
    pub half_width: f64,
    /// Grid points per real axis (the grid has `per_axis⁴` points).
    pub per_axis: usize,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::precondition(format!(
                "region half-width must be positive, got {}",
                self.half_width
            )));
        }
        if !(2..=9).contains(&self.per_axis) {
            return Err(Error::precondition(format!(
                "region grid wants 2..=9 points per axis, got {}",
                self.per_axis
            )));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<Point2> {
        let c = to_flat(self.center);
        let m = self.per_axis;
        let coord = |axis: usize, idx: usize| {
            c[axis] - self.half_width
                + 2.0 * self.half_width * (idx as f64) / ((m - 1) as f64)
        };
        let mut out = Vec::with_capacity(m * m * m * m);
        for i0 in 0..m {
            for i1 in 0..m {
                for i2 in 0..m {
                    for i3 in 0..m {
                        out.push(from_flat([
                            coord(0, i0),
                            coord(1, i1),
                            coord(2, i2),
                            coord(3, i3),
                        ]));
                    }
                }
            }
        }
        out
    }
}

/// Outcome of a successful plurisubharmonicity certification.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PshCertificate {
    /// Sampled lower bound on the least Hessian eigenvalue of `d²`.
    pub c_min: f64,
    /// The scaling `λ = 2M/C` applied to reach the requested bound.
    pub lambda: f64,
    /// Least sampled eigenvalue of the Hessian of `λ·d²`; at least `M` by
    /// construction whenever certification succeeds.
    pub scaled_min: f64,
}

/// Sample the complex Hessian of `x ↦ d²(x, patch)` over the region grid.
/// A positive sampled lower bound `C` certifies `λ·d²` with `λ = 2M/C` as
/// strongly plurisubharmonic with margin `M`; otherwise the refusal carries
/// the offending bound.
pub fn psh_certify(patch: ManifoldPatch, region: &Region, m: f64) -> Result<PshCertificate> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::precondition(format!(
            "certification margin must be nonnegative, got {m}"
        )));
    }
    region.validate()?;
    let mut c_min = f64::INFINITY;
    for p in region.grid() {
        let report = complex_hessian(
            |q| distance_sq(patch, q).expect("distance minimization is total"),
            p,
            CERTIFY_STEP,
        )?;
        c_min = c_min.min(report.min_eigenvalue);
    }
    if !(c_min > 0.0) {
        return Err(Error::CertificationFailure(c_min));
    }
    let lambda = 2.0 * m / c_min;
    Ok(PshCertificate {
        c_min,
        lambda,
        scaled_min: lambda * c_min,
    })
}
