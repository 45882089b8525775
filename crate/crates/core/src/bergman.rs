//! Bergman kernels of the unit disc, the lens, and their product, plus a
//! numerical Bergman projection and the compactly supported symbol `χ`.
//!
//! The disc kernel is closed-form; the lens kernel is assembled through the
//! Riemann map by the derivative–kernel–conjugate-derivative transformation
//! rule; the product domain multiplies the two factors. The projection is
//! evaluated pointwise as a quadrature of `K(z,·)·f` — no basis expansion —
//! and `χ(z) = H(F(z))·F′(z)` with `H` a radial C^∞ plateau supported in
//! `{|ζ| ≤ r1}`, so `χ` is smooth, vanishes near the lens boundary, and its
//! projection is a constant multiple of `F′`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, lens_contains, DomainId, Point2};
use crate::quadrature::{self, pairwise, QuadratureSpec};

/// Near-singular refusal threshold for `|1 − z·w̄|`.
const KERNEL_SINGULAR: f64 = 1e-14;

/// Radii of the radial plateau `H`: identically 1 on `|ζ| ≤ r0`, identically
/// 0 on `|ζ| ≥ r1`, C^∞ and nonincreasing in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BumpSpec {
    pub r0: f64,
    pub r1: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec { r0: 0.5, r1: 0.8 }
    }
}

impl BumpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r0 && self.r0 < self.r1 && self.r1 < 1.0) {
            return Err(Error::precondition(format!(
                "bump radii must satisfy 0 < r0 < r1 < 1, got r0 = {}, r1 = {}",
                self.r0, self.r1
            )));
        }
        Ok(())
    }
}

/// A kernel value tagged with the domain it belongs to.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelEval {
    pub value: Complex64,
    pub domain: DomainId,
}

/// Reproducing kernel of the unit disc, `1/(π(1 − z·w̄)²)`.
pub fn disc_kernel(z: Complex64, w: Complex64) -> Result<Complex64> {
    for p in [z, w] {
        if p.norm_sqr() >= 1.0 {
            return Err(Error::OutsideDomain(p, "the open unit disc"));
        }
    }
    let den = Complex64::ONE - z * w.conj();
    if den.norm() < KERNEL_SINGULAR {
        return Err(Error::NearSingular(den.norm()));
    }
    Ok(Complex64::ONE / (PI * den * den))
}

/// Reproducing kernel of the lens, `F′(z)·K_𝔻(F(z), F(w))·conj(F′(w))`.
pub fn lens_kernel(z: Complex64, w: Complex64) -> Result<Complex64> {
    for p in [z, w] {
        if !lens_contains(p) {
            return Err(Error::OutsideDomain(p, "the open lens"));
        }
    }
    let fz = geometry::lens_map(z)?;
    let fw = geometry::lens_map(w)?;
    let k = disc_kernel(fz, fw)?;
    let dz = geometry::lens_map_deriv(z, 1)?;
    let dw = geometry::lens_map_deriv(w, 1)?;
    Ok(dz * k * dw.conj())
}

/// Reproducing kernel of lens × disc: the product of the factors.
pub fn product_kernel(p: Point2, q: Point2) -> Result<Complex64> {
    Ok(lens_kernel(p.z1, q.z1)? * disc_kernel(p.z2, q.z2)?)
}

/// Kernel of any stocked domain, tagged with its domain.
pub fn kernel_eval(d: DomainId, p: Point2, q: Point2) -> Result<KernelEval> {
    let value = match d {
        DomainId::UnitDisc => disc_kernel(p.z1, q.z1)?,
        DomainId::Lens => lens_kernel(p.z1, q.z1)?,
        DomainId::ProductP => product_kernel(p, q)?,
        other => {
            return Err(Error::precondition(format!(
                "no closed-form kernel is stocked for {}",
                other.label()
            )))
        }
    };
    Ok(KernelEval { value, domain: d })
}

/// `e^{-1/x}` continued by 0 through the origin: the C^∞ joint.
fn joint(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Radial plateau: 1 on `|ζ| ≤ r0`, 0 on `|ζ| ≥ r1`, a smooth exponential
/// join in between, as a function of `t = |ζ|²` so smoothness holds at 0.
pub fn radial_bump(zeta: Complex64, spec: &BumpSpec) -> f64 {
    debug_assert!(spec.validate().is_ok());
    let t = zeta.norm_sqr();
    let (t0, t1) = (spec.r0 * spec.r0, spec.r1 * spec.r1);
    if t <= t0 {
        1.0
    } else if t >= t1 {
        0.0
    } else {
        let x = (t1 - t) / (t1 - t0);
        joint(x) / (joint(x) + joint(1.0 - x))
    }
}

/// The compactly supported symbol `χ(z) = H(F(z))·F′(z)`, extended by 0 off
/// its support so it is total on the plane. Its support pulls back from
/// `{|ζ| ≤ r1}` and therefore stays strictly inside the lens, away from the
/// corners.
pub fn chi(z: Complex64, spec: &BumpSpec) -> Complex64 {
    if !lens_contains(z) || geometry::corner_distance(z) <= geometry::CORNER_EXCLUSION {
        return Complex64::ZERO;
    }
    let f = geometry::lens_map(z).expect("interior non-corner point is mappable");
    let h = radial_bump(f, spec);
    if h == 0.0 {
        return Complex64::ZERO;
    }
    h * geometry::lens_map_deriv(z, 1).expect("interior non-corner point is differentiable")
}

/// `c = (1/π)∫_𝔻 H dA` — the constant the projection of `χ` multiplies `F′`
/// by. Strictly positive for any valid bump.
pub fn projection_constant(spec: &BumpSpec, quad: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let integral = quadrature::integrate_disc(|zeta| radial_bump(zeta, spec), quad)?;
    Ok(integral.value / PI)
}

/// Precomputed quadrature data for projecting one fixed integrand; `apply`
/// evaluates the projection at a query point, so scanning many query points
/// costs one grid construction.
pub struct Projector {
    domain: DomainId,
    /// Node images in the disc: `w` itself, or `F(w)` for the lens.
    images: Vec<Complex64>,
    /// `weight·f(w)/π`, additionally times `conj(F′(w))` on the lens.
    terms: Vec<Complex64>,
}

impl Projector {
    pub fn new(
        domain: DomainId,
        f: impl Fn(Complex64) -> Complex64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        match domain {
            DomainId::UnitDisc => {
                let grid = quadrature::disc_grid(spec, spec.base_rule);
                let terms = grid
                    .points
                    .iter()
                    .zip(&grid.weights)
                    .map(|(&w, &wt)| f(w) * (wt / PI))
                    .collect();
                Ok(Projector {
                    domain,
                    images: grid.points,
                    terms,
                })
            }
            DomainId::Lens => {
                let grid = quadrature::lens_grid(
                    geometry::CORNER_EXCLUSION,
                    geometry::CORNER_EXCLUSION,
                    spec,
                    spec.base_rule,
                );
                let mut images = Vec::with_capacity(grid.len());
                let mut terms = Vec::with_capacity(grid.len());
                for (&w, &wt) in grid.points.iter().zip(&grid.weights) {
                    images.push(geometry::lens_map(w)?);
                    let dw = geometry::lens_map_deriv(w, 1)?;
                    terms.push(f(w) * dw.conj() * (wt / PI));
                }
                Ok(Projector {
                    domain,
                    images,
                    terms,
                })
            }
            other => Err(Error::precondition(format!(
                "projection is stocked for the disc and the lens, not {}",
                other.label()
            ))),
        }
    }

    /// Evaluate the projected function at `z`.
    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        let (zeta, outer) = match self.domain {
            DomainId::UnitDisc => {
                if z.norm_sqr() >= 1.0 {
                    return Err(Error::OutsideDomain(z, "the open unit disc"));
                }
                (z, Complex64::ONE)
            }
            DomainId::Lens => {
                if !lens_contains(z) {
                    return Err(Error::OutsideDomain(z, "the open lens"));
                }
                (geometry::lens_map(z)?, geometry::lens_map_deriv(z, 1)?)
            }
            _ => unreachable!("constructor restricts the domain"),
        };
        let mut min_den = f64::INFINITY;
        let contributions: Vec<Complex64> = self
            .images
            .iter()
            .zip(&self.terms)
            .map(|(&img, &t)| {
                let den = Complex64::ONE - zeta * img.conj();
                min_den = min_den.min(den.norm_sqr());
                t / (den * den)
            })
            .collect();
        if min_den < KERNEL_SINGULAR * KERNEL_SINGULAR {
            return Err(Error::NearSingular(min_den.sqrt()));
        }
        Ok(outer * pairwise(&contributions))
    }
}

/// Bergman projection of `f`, evaluated at the query point `z`.
pub fn bergman_project(
    d: DomainId,
    f: impl Fn(Complex64) -> Complex64,
    z: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    Projector::new(d, f, spec)?.apply(z)
}
