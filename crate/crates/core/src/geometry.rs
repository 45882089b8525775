//! Conformal geometry of the lens `D = D1(0) ∩ D1(1)` and membership
//! predicates for the model domains in C².
//!
//! The lens is the intersection of the open unit discs centered at 0 and at 1.
//! Its two corners sit at `(1 ∓ i√3)/2`, where the boundary circles meet at an
//! interior angle of `2π/3`. [`LensMap`] is the Riemann map onto the unit
//! disc, assembled as Möbius → power 3/2 → Cayley-type quotient, together
//! with closed-form derivatives through order four and a damped-Newton
//! inverse.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Lower lens corner `(1 - i√3)/2`.
pub const CORNER_A: Complex64 = Complex64::new(0.5, -SQRT_3 / 2.0);
/// Upper lens corner `(1 + i√3)/2`.
pub const CORNER_B: Complex64 = Complex64::new(0.5, SQRT_3 / 2.0);

/// Map and derivative evaluations are refused closer to a corner than this.
pub const CORNER_EXCLUSION: f64 = 1e-8;

/// Slack admitted on the closed lens when evaluating the map on boundary arcs.
const BOUNDARY_SLACK: f64 = 1e-12;

/// A point of C², stored as the coordinate pair `(z1, z2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl Point2 {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Point2 { z1, z2 }
    }
}

/// Identifiers for the domains the crate computes on.
///
/// The one-dimensional domains (`UnitDisc`, `Lens`) read only `z1` of a
/// [`Point2`]; the product and Reinhardt domains read both coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainId {
    UnitDisc,
    Lens,
    /// `Lens × UnitDisc` in C².
    ProductP,
    /// `{|z1| > 4, |z2| < 1/(2|z1| log₄|z1|)}`.
    OmegaX,
    /// `{|z2| > 4, ||z1| − 1/|z2|| < 1/|z2|³}`.
    OmegaY,
    /// The closed bidisc `{|z1| ≤ 4, |z2| ≤ 4}`.
    OmegaZ,
    /// `{|z1| > 4, ||z2| − 1/|z1|| < 1/|z1|³}`.
    OmegaXp,
    /// `{|z2| > 4, |z1| < 1/(2|z2| log₄|z2|)}`.
    OmegaYp,
    /// `OmegaX ∪ OmegaY ∪ OmegaZ`.
    Omega,
    /// `OmegaXp ∪ OmegaYp ∪ OmegaZ`.
    OmegaPrime,
}

impl DomainId {
    pub fn label(self) -> &'static str {
        match self {
            DomainId::UnitDisc => "unit_disc",
            DomainId::Lens => "lens",
            DomainId::ProductP => "product_p",
            DomainId::OmegaX => "omega_x",
            DomainId::OmegaY => "omega_y",
            DomainId::OmegaZ => "omega_z",
            DomainId::OmegaXp => "omega_x_prime",
            DomainId::OmegaYp => "omega_y_prime",
            DomainId::Omega => "omega",
            DomainId::OmegaPrime => "omega_prime",
        }
    }

    /// Parse the labels produced by [`DomainId::label`].
    pub fn parse(s: &str) -> Option<DomainId> {
        Some(match s {
            "unit_disc" => DomainId::UnitDisc,
            "lens" => DomainId::Lens,
            "product_p" => DomainId::ProductP,
            "omega_x" => DomainId::OmegaX,
            "omega_y" => DomainId::OmegaY,
            "omega_z" => DomainId::OmegaZ,
            "omega_x_prime" => DomainId::OmegaXp,
            "omega_y_prime" => DomainId::OmegaYp,
            "omega" => DomainId::Omega,
            "omega_prime" => DomainId::OmegaPrime,
            _ => return None,
        })
    }
}

/// Which coordinate of a [`Point2`] carries the unbounded radius of a
/// Reinhardt tail piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Z1,
    Z2,
}

/// Constraint tying the companion radius to the outer radius `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadialBound {
    /// `inner < 1 / (2 r log₄ r)` — a throat narrowing like `1/(r log r)`.
    LogThroat,
    /// `|inner − 1/r| < 1/r³` — an annulus of width `2/r³` around `1/r`.
    CubicAnnulus,
}

/// Radial description of one unbounded Reinhardt piece: the `outer` radius
/// runs over `(outer_min, ∞)` and the companion radius is pinned by `bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfile {
    pub outer: Axis,
    pub outer_min: f64,
    pub bound: RadialBound,
}

pub const PROFILE_X: RadialProfile = RadialProfile {
    outer: Axis::Z1,
    outer_min: 4.0,
    bound: RadialBound::LogThroat,
};
pub const PROFILE_Y: RadialProfile = RadialProfile {
    outer: Axis::Z2,
    outer_min: 4.0,
    bound: RadialBound::CubicAnnulus,
};
pub const PROFILE_XP: RadialProfile = RadialProfile {
    outer: Axis::Z1,
    outer_min: 4.0,
    bound: RadialBound::CubicAnnulus,
};
pub const PROFILE_YP: RadialProfile = RadialProfile {
    outer: Axis::Z2,
    outer_min: 4.0,
    bound: RadialBound::LogThroat,
};

pub fn log4(r: f64) -> f64 {
    r.ln() / (4.0f64).ln()
}

impl RadialProfile {
    /// Open interval `(lo, hi)` allowed for the companion radius at outer
    /// radius `r`. Requires `r > outer_min`, where both bounds are positive
    /// and `lo < hi`.
    pub fn inner_bounds(&self, r: f64) -> (f64, f64) {
        debug_assert!(r > self.outer_min);
        match self.bound {
            RadialBound::LogThroat => (0.0, 1.0 / (2.0 * r * log4(r))),
            RadialBound::CubicAnnulus => {
                let r3 = r * r * r;
                (1.0 / r - 1.0 / r3, 1.0 / r + 1.0 / r3)
            }
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        let (r_outer, r_inner) = match self.outer {
            Axis::Z1 => (p.z1.norm(), p.z2.norm()),
            Axis::Z2 => (p.z2.norm(), p.z1.norm()),
        };
        if r_outer <= self.outer_min {
            return false;
        }
        let (lo, hi) = self.inner_bounds(r_outer);
        lo < r_inner && r_inner < hi
    }
}

/// Open-lens membership for a single complex coordinate.
pub fn lens_contains(z: Complex64) -> bool {
    z.norm_sqr() < 1.0 && (z - Complex64::new(1.0, 0.0)).norm_sqr() < 1.0
}

/// Membership test for every stocked domain. One-dimensional domains read
/// only `p.z1`. `OmegaZ` is closed; all other pieces are open.
pub fn contains(d: DomainId, p: Point2) -> bool {
    match d {
        DomainId::UnitDisc => p.z1.norm_sqr() < 1.0,
        DomainId::Lens => lens_contains(p.z1),
        DomainId::ProductP => lens_contains(p.z1) && p.z2.norm_sqr() < 1.0,
        DomainId::OmegaX => PROFILE_X.contains(p),
        DomainId::OmegaY => PROFILE_Y.contains(p),
        DomainId::OmegaZ => p.z1.norm() <= 4.0 && p.z2.norm() <= 4.0,
        DomainId::OmegaXp => PROFILE_XP.contains(p),
        DomainId::OmegaYp => PROFILE_YP.contains(p),
        DomainId::Omega => {
            contains(DomainId::OmegaX, p)
                || contains(DomainId::OmegaY, p)
                || contains(DomainId::OmegaZ, p)
        }
        DomainId::OmegaPrime => {
            contains(DomainId::OmegaXp, p)
                || contains(DomainId::OmegaYp, p)
                || contains(DomainId::OmegaZ, p)
        }
    }
}

/// Distance from `z` to the nearest lens corner.
pub fn corner_distance(z: Complex64) -> f64 {
    (z - CORNER_A).norm().min((z - CORNER_B).norm())
}

/// Argument of `w` normalized into `(0, 2π]`.
///
/// The power branch below keeps its cut on the positive real axis; the Möbius
/// image of the lens is the wedge `arg ∈ (2π/3, 4π/3)`, safely away from it.
fn arg_positive(w: Complex64) -> f64 {
    let t = w.arg();
    if t <= 0.0 {
        t + TAU
    } else {
        t
    }
}

/// `w^alpha` with the argument taken in `(0, 2π]`.
fn branch_pow(w: Complex64, alpha: f64) -> Complex64 {
    let r = w.norm();
    let theta = arg_positive(w);
    Complex64::from_polar(r.powf(alpha), alpha * theta)
}

/// Riemann map of the lens onto the unit disc.
///
/// The map is `F = cayley(g^{3/2})` where `g(z) = (z − a)/(z − b)` sends the
/// lens to the wedge with arguments in `(2π/3, 4π/3)`, the 3/2-power (with
/// arguments in `(0, 2π)`) opens that wedge onto the lower half-plane, and
/// `cayley(u) = (u + i)/(u − i)` takes the lower half-plane to the disc.
/// Consequently `F(1/2) = 0`, the corner `a` maps to `−1` and `b` to `+1`.
#[derive(Clone, Debug)]
pub struct LensMap {
    pub corner_a: Complex64,
    pub corner_b: Complex64,
    /// Argument window of the power branch.
    pub branch: (f64, f64),
}

impl Default for LensMap {
    fn default() -> Self {
        LensMap {
            corner_a: CORNER_A,
            corner_b: CORNER_B,
            branch: (0.0, TAU),
        }
    }
}

static STANDARD_MAP: OnceLock<LensMap> = OnceLock::new();
static INVERSE_SEEDS: OnceLock<Vec<(Complex64, Complex64)>> = OnceLock::new();

/// The lens map for the standard corners; shared, lazily initialized.
pub fn standard_map() -> &'static LensMap {
    STANDARD_MAP.get_or_init(LensMap::default)
}

impl LensMap {
    /// Möbius factor `g(z) = (z − a)/(z − b)`.
    pub fn mobius(&self, z: Complex64) -> Complex64 {
        (z - self.corner_a) / (z - self.corner_b)
    }

    /// Inverse of the Möbius factor, `g ↦ (g·b − a)/(g − 1)`.
    fn mobius_inverse(&self, g: Complex64) -> Complex64 {
        (g * self.corner_b - self.corner_a) / (g - Complex64::ONE)
    }

    fn check_arg(&self, z: Complex64) -> Result<()> {
        let on_closure = z.norm() < 1.0 + BOUNDARY_SLACK
            && (z - Complex64::ONE).norm() < 1.0 + BOUNDARY_SLACK;
        if !on_closure {
            return Err(Error::OutsideDomain(z, "the closed lens"));
        }
        let dist = corner_distance(z);
        if dist < CORNER_EXCLUSION {
            return Err(Error::CornerProximity {
                z,
                dist,
                limit: CORNER_EXCLUSION,
            });
        }
        Ok(())
    }

    /// Evaluate the map. Accepts the closed lens (to boundary-arc slack
    /// `1e−12`) minus the corner exclusion discs.
    pub fn map(&self, z: Complex64) -> Result<Complex64> {
        self.check_arg(z)?;
        let u = branch_pow(self.mobius(z), 1.5);
        Ok(cayley(u))
    }

    /// Closed-form derivative of order `1..=4`.
    pub fn deriv(&self, z: Complex64, order: u32) -> Result<Complex64> {
        self.check_arg(z)?;
        if order == 0 || order > 4 {
            return Err(Error::UnsupportedOrder(order));
        }
        let derivs = self.derivs_up_to(z, order);
        Ok(derivs[order as usize - 1])
    }

    /// All derivatives `F', …, F^(order)` in one evaluation (order ≤ 4).
    /// Shared by the regularity integrands, which need several orders per
    /// quadrature node.
    pub fn derivs_up_to(&self, z: Complex64, order: u32) -> Vec<Complex64> {
        debug_assert!((1..=4).contains(&order));
        let b = self.corner_b;
        let d = self.corner_a - self.corner_b;
        let zb = z - b;
        let zb2 = zb * zb;

        let g = self.mobius(z);
        let g1 = d / zb2;
        let g2 = -2.0 * d / (zb2 * zb);
        let g3 = 6.0 * d / (zb2 * zb2);
        let g4 = -24.0 * d / (zb2 * zb2 * zb);

        // s = g^{1/2}, u = g^{3/2} = s³ on the same branch.
        let s = branch_pow(g, 0.5);
        let u = s * s * s;

        let u1 = 1.5 * s * g1;
        let u2 = 0.75 * g1 * g1 / s + 1.5 * s * g2;
        let u3 = -0.375 * g1 * g1 * g1 / (s * g) + 2.25 * g1 * g2 / s + 1.5 * s * g3;
        let u4 = 0.5625 * g1 * g1 * g1 * g1 / (s * g * g) - 2.25 * g1 * g1 * g2 / (s * g)
            + 2.25 * g2 * g2 / s
            + 3.0 * g1 * g3 / s
            + 1.5 * s * g4;

        // cayley(u) = (u + i)/(u − i) and its u-derivatives.
        let i = Complex64::I;
        let den = u - i;
        let den2 = den * den;
        let c1 = -2.0 * i / den2;
        let c2 = 4.0 * i / (den2 * den);
        let c3 = -12.0 * i / (den2 * den2);
        let c4 = 48.0 * i / (den2 * den2 * den);

        let f1 = c1 * u1;
        let mut out = vec![f1];
        if order >= 2 {
            out.push(c2 * u1 * u1 + c1 * u2);
        }
        if order >= 3 {
            out.push(c3 * u1 * u1 * u1 + 3.0 * c2 * u1 * u2 + c1 * u3);
        }
        if order >= 4 {
            out.push(
                c4 * u1 * u1 * u1 * u1
                    + 6.0 * c3 * u1 * u1 * u2
                    + 3.0 * c2 * u2 * u2
                    + 4.0 * c2 * u1 * u3
                    + c1 * u4,
            );
        }
        out
    }

    /// Invert the map by damped Newton on `F(z) − ζ`, seeded from a coarse
    /// precomputed grid of `(F(z), z)` pairs.
    pub fn inverse(&self, zeta: Complex64) -> Result<Complex64> {
        if zeta.norm() >= 1.0 {
            return Err(Error::OutsideDomain(zeta, "the open unit disc"));
        }
        let seeds = INVERSE_SEEDS.get_or_init(|| self.build_seed_grid());
        let mut z = seeds
            .iter()
            .min_by(|(fa, _), (fb, _)| {
                (fa - zeta)
                    .norm_sqr()
                    .partial_cmp(&(fb - zeta).norm_sqr())
                    .expect("seed residuals are finite")
            })
            .expect("seed grid is nonempty")
            .1;

        let mut residual = (self.map(z)? - zeta).norm();
        let mut best = residual;
        const TOL: f64 = 1e-13;
        const MAX_ITER: u32 = 60;
        for iter in 0..MAX_ITER {
            if residual <= TOL {
                return Ok(z);
            }
            let f = self.map(z)?;
            let f1 = self.deriv(z, 1)?;
            let full_step = (f - zeta) / f1;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = z - lambda * full_step;
                let ok = lens_contains(cand) && corner_distance(cand) > CORNER_EXCLUSION;
                if ok {
                    if let Ok(fc) = self.map(cand) {
                        let r = (fc - zeta).norm();
                        if r < residual {
                            z = cand;
                            residual = r;
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(Error::InverseDiverged {
                    iterations: iter + 1,
                    residual: best,
                });
            }
            best = best.min(residual);
        }
        if residual <= TOL {
            Ok(z)
        } else {
            Err(Error::InverseDiverged {
                iterations: MAX_ITER,
                residual,
            })
        }
    }

    fn build_seed_grid(&self) -> Vec<(Complex64, Complex64)> {
        let mut seeds = Vec::new();
        // Wedge coordinates cover the lens: ρ geometric about 1, φ across
        // the wedge. 21 × 12 seeds keep the nearest-seed search trivial.
        for i in -10..=10 {
            let rho = (2.0f64).powi(i);
            for j in 0..12 {
                let phi = 2.0 * PI / 3.0 + (2.0 * PI / 3.0) * (j as f64 + 0.5) / 12.0;
                let z = self.mobius_inverse(Complex64::from_polar(rho, phi));
                if let Ok(f) = self.map(z) {
                    seeds.push((f, z));
                }
            }
        }
        seeds
    }
}

fn cayley(u: Complex64) -> Complex64 {
    (u + Complex64::I) / (u - Complex64::I)
}

/// `F(z)` for the standard lens.
pub fn lens_map(z: Complex64) -> Result<Complex64> {
    standard_map().map(z)
}

/// `F^(order)(z)` for the standard lens, `order ∈ 1..=4`.
pub fn lens_map_deriv(z: Complex64, order: u32) -> Result<Complex64> {
    standard_map().deriv(z, order)
}

/// `F⁻¹(ζ)` for the standard lens.
pub fn lens_map_inverse(zeta: Complex64) -> Result<Complex64> {
    standard_map().inverse(zeta)
}

/// Wedge-coordinate helpers shared with the lens quadrature.
///
/// `w = g(z)` identifies the lens with the wedge `{arg w ∈ (2π/3, 4π/3)}`;
/// `ρ → 0` approaches corner `a`, `ρ → ∞` approaches corner `b`, and the area
/// element transforms with `|dz/dw|² = 3/|w − 1|⁴`.
pub(crate) mod wedge {
    use super::*;

    pub const PHI_LO: f64 = 2.0 * PI / 3.0;
    pub const PHI_HI: f64 = 4.0 * PI / 3.0;

    pub fn lens_point(rho: f64, phi: f64) -> Complex64 {
        standard_map().mobius_inverse(Complex64::from_polar(rho, phi))
    }

    /// Area-element factor `3/|w − 1|⁴` at `w = ρ e^{iφ}`.
    pub fn area_factor(rho: f64, phi: f64) -> f64 {
        let d2 = rho * rho - 2.0 * rho * phi.cos() + 1.0;
        3.0 / (d2 * d2)
    }

    /// ρ at which the ray of angle φ crosses `|z − a| = eps`.
    pub fn rho_at_corner_a(eps: f64, phi: f64) -> f64 {
        let c = phi.cos();
        eps * (-eps * c + (eps * eps * c * c + 3.0 - eps * eps).sqrt()) / (3.0 - eps * eps)
    }

    /// ρ at which the ray of angle φ crosses `|z − b| = eps`.
    pub fn rho_at_corner_b(eps: f64, phi: f64) -> f64 {
        let c = phi.cos();
        c + (c * c - 1.0 + 3.0 / (eps * eps)).sqrt()
    }
}
