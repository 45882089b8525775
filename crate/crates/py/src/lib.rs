//! Python bindings over the core crate: thin argument parsing plus error
//! translation, no numerics of their own. Built as the `_polylens`
//! extension module; see `python/smoke_test.py` for a driving example.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use polylens::bergman::{self, BumpSpec, Projector};
use polylens::geometry::{self, DomainId, Point2};
use polylens::hankel::{self, MomentMethod, MomentTable};
use polylens::pproperty::{self, DefiningPair, ManifoldPatch, Region};
use polylens::quadrature::QuadratureSpec;
use polylens::regularity::{self, DerivativeSource, FnDescriptor, NormKind, NormSpec, Verdict};

fn err(e: polylens::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_domain(s: &str) -> PyResult<DomainId> {
    DomainId::parse(s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown domain {s:?}")))
}

fn parse_function(s: &str) -> PyResult<FnDescriptor> {
    FnDescriptor::parse(s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown function {s:?}")))
}

fn parse_pair(s: &str) -> PyResult<DefiningPair> {
    DefiningPair::parse(s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown defining pair {s:?}")))
}

fn parse_patch(s: &str) -> PyResult<ManifoldPatch> {
    ManifoldPatch::parse(s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown manifold patch {s:?}")))
}

fn parse_method(s: &str) -> PyResult<MomentMethod> {
    match s {
        "closed_form" => Ok(MomentMethod::ClosedForm),
        "quadrature" => Ok(MomentMethod::Quadrature),
        _ => Err(PyValueError::new_err(format!(
            "unknown moment method {s:?} (expected closed_form or quadrature)"
        ))),
    }
}

fn quad_spec(depth: Option<u32>) -> QuadratureSpec {
    let mut quad = QuadratureSpec::default();
    if let Some(d) = depth {
        quad.depth = d;
    }
    quad
}

/// The derivative source each probe function supports.
fn source_for(f: FnDescriptor) -> DerivativeSource {
    match f {
        FnDescriptor::Chi => DerivativeSource::FiniteDifference,
        FnDescriptor::Fprime => DerivativeSource::ClosedForm,
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Bounded => "bounded",
        Verdict::Diverging => "diverging",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Conformal map of the lens onto the unit disc, fixing 1/2 ↦ 0.
#[pyfunction]
fn lens_map(z: Complex64) -> PyResult<Complex64> {
    geometry::lens_map(z).map_err(err)
}

/// Derivative of the lens map of the given order (1 through 4).
#[pyfunction]
#[pyo3(signature = (z, order = 1))]
fn lens_map_deriv(z: Complex64, order: u32) -> PyResult<Complex64> {
    geometry::lens_map_deriv(z, order).map_err(err)
}

/// Open-lens membership for a single complex coordinate.
#[pyfunction]
fn lens_contains(z: Complex64) -> bool {
    geometry::lens_contains(z)
}

/// Membership in any stocked domain; one-dimensional domains read only z1.
#[pyfunction]
#[pyo3(signature = (domain, z1, z2 = Complex64::new(0.0, 0.0)))]
fn domain_contains(domain: &str, z1: Complex64, z2: Complex64) -> PyResult<bool> {
    Ok(geometry::contains(parse_domain(domain)?, Point2::new(z1, z2)))
}

/// The constant (1/π)·∫ H dA carried by projections of the plateau bump.
#[pyfunction]
#[pyo3(signature = (depth = None))]
fn projection_constant(depth: Option<u32>) -> PyResult<f64> {
    bergman::projection_constant(&BumpSpec::default(), &quad_spec(depth)).map_err(err)
}

/// Bergman projection of the transported plateau bump, evaluated at z.
#[pyfunction]
#[pyo3(signature = (z, depth = None))]
fn bergman_project(z: Complex64, depth: Option<u32>) -> PyResult<Complex64> {
    let bump = BumpSpec::default();
    let projector = Projector::new(
        DomainId::Lens,
        |w| bergman::chi(w, &bump),
        &quad_spec(depth),
    )
    .map_err(err)?;
    projector.apply(z).map_err(err)
}

/// Squared Sobolev norm Σ_{m ≤ k} ∫ |Dᵐ f|² dA on the lens.
#[pyfunction]
#[pyo3(signature = (function, k, depth = None))]
fn sobolev_norm_sq(function: &str, k: u32, depth: Option<u32>) -> PyResult<f64> {
    regularity::sobolev_norm_sq(parse_function(function)?, k, &quad_spec(depth)).map_err(err)
}

/// Lᵖ mass ∫ |f|ᵖ dA on the lens, p > 1.
#[pyfunction]
#[pyo3(signature = (function, p, depth = None))]
fn lp_norm(function: &str, p: f64, depth: Option<u32>) -> PyResult<f64> {
    regularity::lp_norm(parse_function(function)?, p, &quad_spec(depth)).map_err(err)
}

/// Refinement ladder for a Sobolev norm with shrinking corner exclusions:
/// returns (verdict, [(depth, estimate), ...]).
#[pyfunction]
#[pyo3(signature = (function, k, depths, depth = None))]
fn divergence_verdict(
    function: &str,
    k: u32,
    depths: Vec<u32>,
    depth: Option<u32>,
) -> PyResult<(String, Vec<(u32, f64)>)> {
    let f = parse_function(function)?;
    let trace = regularity::divergence_probe(
        f,
        NormSpec {
            kind: NormKind::SobolevK(k),
            derivative_source: source_for(f),
        },
        &depths,
        &quad_spec(depth),
    )
    .map_err(err)?;
    Ok((verdict_str(trace.verdict).to_owned(), trace.levels))
}

/// Whether the monomial z₁ʲ z₂ᵏ is square-integrable on the domain.
#[pyfunction]
fn admissible(domain: &str, j: u32, k: u32) -> PyResult<bool> {
    hankel::admissible(parse_domain(domain)?, j, k).map_err(err)
}

/// Natural log of the squared moment ‖z₁ʲ z₂ᵏ‖²; +inf when it diverges.
#[pyfunction]
#[pyo3(signature = (domain, j, k, method = "closed_form"))]
fn log_moment(domain: &str, j: u32, k: u32, method: &str) -> PyResult<f64> {
    hankel::moment(parse_domain(domain)?, j, k, parse_method(method)?).map_err(err)
}

/// Hilbert–Schmidt partial sum S_K over the diagonal basis, with its
/// half-ladder convergence flag.
#[pyfunction]
fn hs_partial_sum(domain: &str, big_k: u32) -> PyResult<(f64, bool)> {
    let d = parse_domain(domain)?;
    let table =
        MomentTable::build_diagonal(d, big_k + 1, MomentMethod::ClosedForm).map_err(err)?;
    hankel::hs_partial_sum(d, big_k, &table).map_err(err)
}

/// Least-squares decay exponent of the diagonal differences over [k_lo, k_hi].
#[pyfunction]
fn difference_decay_exponent(domain: &str, k_max: u32, k_lo: u32, k_hi: u32) -> PyResult<f64> {
    let d = parse_domain(domain)?;
    let table =
        MomentTable::build_diagonal(d, k_max + 1, MomentMethod::ClosedForm).map_err(err)?;
    let diag = hankel::hs_diagnostics(d, k_max, &table).map_err(err)?;
    hankel::difference_decay_exponent(&diag, k_lo, k_hi).map_err(err)
}

/// Full double sums T_K on the bidisc: ([(K, total), ...], octave slope,
/// growth verdict).
#[pyfunction]
fn bidisc_double_sum(k_max: u32) -> PyResult<(Vec<(u32, f64)>, f64, String)> {
    let table = MomentTable::build(DomainId::OmegaZ, k_max + 1, k_max + 1, MomentMethod::ClosedForm)
        .map_err(err)?;
    let trace = hankel::hs_double_sum_polydisc(k_max, &table).map_err(err)?;
    Ok((
        trace.totals,
        trace.octave_slope,
        verdict_str(trace.verdict).to_owned(),
    ))
}

/// CSV report comparing exact diagonal throat moments with the simplified
/// display variant.
#[pyfunction]
fn throat_display_report(k_max: u32) -> String {
    hankel::throat_display_report(k_max)
}

/// Seeded sample of the intersection {ρ₁ = ρ₂ = 0}: returns
/// (points, normalized determinants, exceptional flags).
#[pyfunction]
fn sample_intersection(
    pair: &str,
    n: usize,
    seed: u64,
) -> PyResult<(Vec<(Complex64, Complex64)>, Vec<Complex64>, Vec<bool>)> {
    let sample = pproperty::sample_intersection(parse_pair(pair)?, n, seed).map_err(err)?;
    let points = sample.points.iter().map(|p| (p.z1, p.z2)).collect();
    Ok((points, sample.det_values, sample.exceptional_flags))
}

/// Isolated points of the intersection where the complex tangent space is
/// nontrivial, polished and deduplicated.
#[pyfunction]
#[pyo3(signature = (pair, n, seed, eps = 1e-8))]
fn exceptional_points(
    pair: &str,
    n: usize,
    seed: u64,
    eps: f64,
) -> PyResult<Vec<(Complex64, Complex64)>> {
    let pair = parse_pair(pair)?;
    let sample = pproperty::sample_intersection(pair, n, seed).map_err(err)?;
    let found = pproperty::exceptional_points(pair, &sample, eps).map_err(err)?;
    Ok(found.iter().map(|p| (p.z1, p.z2)).collect())
}

/// Squared Euclidean distance from (z1, z2) to the patch, by multi-start
/// nearest-point minimization.
#[pyfunction]
fn distance_sq(patch: &str, z1: Complex64, z2: Complex64) -> PyResult<f64> {
    pproperty::distance_sq(parse_patch(patch)?, Point2::new(z1, z2)).map_err(err)
}

/// Complex Hessian of the squared distance to the patch at (z1, z2):
/// returns (((d11, d12), (d21, d22)), min eigenvalue).
#[pyfunction]
#[pyo3(signature = (patch, z1, z2, h = 1e-4))]
fn distance_hessian(
    patch: &str,
    z1: Complex64,
    z2: Complex64,
    h: f64,
) -> PyResult<(((Complex64, Complex64), (Complex64, Complex64)), f64)> {
    let p = parse_patch(patch)?;
    let report = pproperty::complex_hessian(
        |q| pproperty::distance_sq(p, q).expect("distance minimization is total"),
        Point2::new(z1, z2),
        h,
    )
    .map_err(err)?;
    let m = report.matrix;
    Ok((
        ((m[0][0], m[0][1]), (m[1][0], m[1][1])),
        report.min_eigenvalue,
    ))
}

/// Certify λ·d² as strongly plurisubharmonic with margin on a grid around
/// center: returns (c_min, lambda, scaled_min) with scaled_min ≥ margin.
#[pyfunction]
#[pyo3(signature = (patch, center, half_width, per_axis, margin))]
fn psh_certify(
    patch: &str,
    center: (Complex64, Complex64),
    half_width: f64,
    per_axis: usize,
    margin: f64,
) -> PyResult<(f64, f64, f64)> {
    let region = Region {
        center: Point2::new(center.0, center.1),
        half_width,
        per_axis,
    };
    let cert = pproperty::psh_certify(parse_patch(patch)?, &region, margin).map_err(err)?;
    Ok((cert.c_min, cert.lambda, cert.scaled_min))
}

#[pymodule]
fn _polylens(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(lens_map, m)?)?;
    m.add_function(wrap_pyfunction!(lens_map_deriv, m)?)?;
    m.add_function(wrap_pyfunction!(lens_contains, m)?)?;
    m.add_function(wrap_pyfunction!(domain_contains, m)?)?;
    m.add_function(wrap_pyfunction!(projection_constant, m)?)?;
    m.add_function(wrap_pyfunction!(bergman_project, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_norm_sq, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(divergence_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(admissible, m)?)?;
    m.add_function(wrap_pyfunction!(log_moment, m)?)?;
    m.add_function(wrap_pyfunction!(hs_partial_sum, m)?)?;
    m.add_function(wrap_pyfunction!(difference_decay_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(bidisc_double_sum, m)?)?;
    m.add_function(wrap_pyfunction!(throat_display_report, m)?)?;
    m.add_function(wrap_pyfunction!(sample_intersection, m)?)?;
    m.add_function(wrap_pyfunction!(exceptional_points, m)?)?;
    m.add_function(wrap_pyfunction!(distance_sq, m)?)?;
    m.add_function(wrap_pyfunction!(distance_hessian, m)?)?;
    m.add_function(wrap_pyfunction!(psh_certify, m)?)?;
    Ok(())
}
