//! The eight subcommands. Each one computes with the resolved config,
//! writes its document (even when the verdict is unfavorable — the table is
//! the diagnostic), and then returns the verdict as the exit status.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::json;

use polylens::bergman::{chi, kernel_eval, projection_constant, Projector};
use polylens::geometry::{DomainId, Point2};
use polylens::hankel::{
    admissible, difference_decay_exponent, hs_diagnostics, hs_double_sum_polydisc,
    hs_partial_sum, moment, MomentMethod, MomentTable,
};
use polylens::pproperty::{
    complex_hessian, distance_sq, exceptional_points, psh_certify, sample_intersection,
    DefiningPair, ManifoldPatch, Region,
};
use polylens::geometry;
use polylens::regularity::{
    divergence_probe, lp_norm, DerivativeSource, FnDescriptor, NormKind, NormSpec, Verdict,
};

use crate::config::{from_core, Cli, CliError, Command, OutFormat, RunConfig};
use crate::report::{csv_document, fmt_f, json_document, write_output};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let (cfg, out) = crate::config::resolve(&cli)?;
    match cli.command {
        Command::Project => project(&cfg, &out),
        Command::Sobolev => sobolev(&cfg, &out),
        Command::Lp => lp(&cfg, &out),
        Command::Kernel => kernel(&cfg, &out),
        Command::Moments => moments(&cfg, &out),
        Command::Hs => hs(&cfg, &out),
        Command::Exceptional => exceptional(&cfg, &out),
        Command::Psh => psh(&cfg, &out),
    }
}

/// Ten stocked interior query points: the map's center, a ring of eight
/// around it, and one raised point — all far from the corners.
fn stock_lens_points() -> Vec<Complex64> {
    let mut points = vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.35)];
    for j in 0..8 {
        let theta = PI * j as f64 / 4.0;
        points.push(Complex64::new(
            0.5 + 0.25 * theta.cos(),
            0.25 * theta.sin(),
        ));
    }
    points
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Bounded => "bounded",
        Verdict::Diverging => "diverging",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn parse_domain(label: &str) -> Result<DomainId, CliError> {
    DomainId::parse(label)
        .ok_or_else(|| CliError::config(format!("unknown domain label '{label}'")))
}

fn project(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    let c = projection_constant(&cfg.bump, &cfg.quadrature).map_err(from_core)?;
    let projector =
        Projector::new(DomainId::Lens, |w| chi(w, &cfg.bump), &cfg.quadrature)
            .map_err(from_core)?;

    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut max_rel: f64 = 0.0;
    for z in stock_lens_points() {
        let projected = projector.apply(z).map_err(from_core)?;
        let reference = geometry::lens_map_deriv(z, 1).map_err(from_core)? * c;
        let rel = (projected - reference).norm() / reference.norm();
        max_rel = max_rel.max(rel);
        rows.push(
            [
                z.re, z.im, projected.re, projected.im, reference.re, reference.im, rel,
            ]
            .map(fmt_f)
            .join(","),
        );
        results.push(json!({
            "z": [z.re, z.im],
            "projected": [projected.re, projected.im],
            "reference": [reference.re, reference.im],
            "relative_error": rel,
        }));
    }

    let doc = match cfg.format {
        OutFormat::Csv => csv_document(
            cfg,
            "z_re,z_im,projected_re,projected_im,reference_re,reference_im,relative_error",
            &rows,
            &[
                format!("# projection_constant {}", fmt_f(c)),
                format!("# max_relative_error {}", fmt_f(max_rel)),
            ],
        ),
        OutFormat::Json => json_document(
            cfg,
            json!({
                "projection_constant": c,
                "max_relative_error": max_rel,
                "points": results,
            }),
        ),
    };
    write_output(out, &doc)?;

    if max_rel <= cfg.tolerance {
        Ok(())
    } else {
        Err(CliError::numeric(format!(
            "max relative projection error {max_rel:.3e} exceeds tolerance {:.3e}",
            cfg.tolerance
        )))
    }
}

fn sobolev(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    let probes: [(FnDescriptor, DerivativeSource, u32, Verdict); 7] = [
        (FnDescriptor::Chi, DerivativeSource::FiniteDifference, 0, Verdict::Bounded),
        (FnDescriptor::Chi, DerivativeSource::FiniteDifference, 1, Verdict::Bounded),
        (FnDescriptor::Chi, DerivativeSource::FiniteDifference, 2, Verdict::Bounded),
        (FnDescriptor::Chi, DerivativeSource::FiniteDifference, 3, Verdict::Bounded),
        (FnDescriptor::Fprime, DerivativeSource::ClosedForm, 0, Verdict::Bounded),
        (FnDescriptor::Fprime, DerivativeSource::ClosedForm, 1, Verdict::Bounded),
        (FnDescriptor::Fprime, DerivativeSource::ClosedForm, 2, Verdict::Diverging),
    ];

    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut mismatches = Vec::new();
    for (f, source, k, expected) in probes {
        let spec = NormSpec {
            kind: NormKind::SobolevK(k),
            derivative_source: source,
        };
        let trace =
            divergence_probe(f, spec, &cfg.depths, &cfg.quadrature).map_err(from_core)?;
        for &(depth, estimate) in &trace.levels {
            rows.push(format!(
                "{},{},{},{},{}",
                f.label(),
                k,
                depth,
                fmt_f(estimate),
                verdict_label(trace.verdict)
            ));
        }
        if trace.verdict != expected {
            mismatches.push(format!(
                "{} W^{k}: expected {}, got {}",
                f.label(),
                verdict_label(expected),
                verdict_label(trace.verdict)
            ));
        }
        results.push(json!({
            "function": f.label(),
            "k": k,
            "verdict": verdict_label(trace.verdict),
            "expected": verdict_label(expected),
            "levels": trace.levels,
        }));
    }

    let doc = match cfg.format {
        OutFormat::Csv => csv_document(
            cfg,
            "function,k,depth,estimate,verdict",
            &rows,
            &[format!("# verdict_mismatches {}", mismatches.len())],
        ),
        OutFormat::Json => json_document(cfg, json!({ "probes": results })),
    };
    write_output(out, &doc)?;

    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::numeric(format!(
            "verdict table mismatch: {}",
            mismatches.join("; ")
        )))
    }
}

fn lp(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for f in [FnDescriptor::Chi, FnDescriptor::Fprime] {
        for &p in &cfg.p_values {
            let norm = lp_norm(f, p, &cfg.quadrature).map_err(from_core)?;
            rows.push(format!("{},{},{}", f.label(), fmt_f(p), fmt_f(norm)));
            results.push(json!({
                "function": f.label(),
                "p": p,
                "norm": norm,
            }));
        }
    }

    let doc = match cfg.format {
        OutFormat::Csv => csv_document(cfg, "function,p,norm", &rows, &[]),
        OutFormat::Json => json_document(cfg, json!({ "norms": results })),
    };
    write_output(out, &doc)
}

fn kernel(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    let domain = parse_domain(&cfg.domain)?;
    let pairs: Vec<(Point2, Point2)> = match domain {
        DomainId::UnitDisc | DomainId::Lens => {
            let zs = [
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.2),
                Complex64::new(0.3, -0.1),
                Complex64::new(0.62, 0.15),
            ];
            let mut pairs = Vec::new();
            for (i, &z) in zs.iter().enumerate() {
                for &w in &zs[i..] {
                    pairs.push((
                        Point2::new(z, Complex64::new(0.0, 0.0)),
                        Point2::new(w, Complex64::new(0.0, 0.0)),
                    ));
                }
            }
            pairs
        }
        DomainId::ProductP => {
            let ps = [
                Point2::new(Complex64::new(0.5, 0.0), Complex64::new(0.3, 0.0)),
                Point2::new(Complex64::new(0.2, 0.1), Complex64::new(0.0, -0.4)),
                Point2::new(Complex64::new(0.1, 0.0), Complex64::new(0.8, 0.0)),
            ];
            let mut pairs = Vec::new();
            for (i, &p) in ps.iter().enumerate() {
                for &q in &ps[i..] {
                    pairs.push((p, q));
                }
            }
            pairs
        }
        other => {
            return Err(CliError::config(format!(
                "kernel values are stocked for unit_disc, lens, and product_p, not {}",
                other.label()
            )))
        }
    };

    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (p, q) in pairs {
        let eval = kernel_eval(domain, p, q).map_err(from_core)?;
        rows.push(
            [
                p.z1.re, p.z1.im, p.z2.re, p.z2.im, q.z1.re, q.z1.im, q.z2.re, q.z2.im,
                eval.value.re, eval.value.im,
            ]
            .map(fmt_f)
            .join(","),
        );
        results.push(json!({
            "z": [p.z1.re, p.z1.im, p.z2.re, p.z2.im],
            "w": [q.z1.re, q.z1.im, q.z2.re, q.z2.im],
            "kernel": [eval.value.re, eval.value.im],
        }));
    }

    let doc = match cfg.format {
        OutFormat::Csv => csv_document(
            cfg,
            "z1_re,z1_im,z2_re,z2_im,w1_re,w1_im,w2_re,w2_im,kernel_re,kernel_im",
            &rows,
            &[],
        ),
        OutFormat::Json => json_document(cfg, json!({ "values": results })),
    };
    write_output(out, &doc)
}

fn moments(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    if cfg.kmax < 2 {
        return Err(CliError::range(format!(
            "moment comparison needs kmax ≥ 2, got {}",
            cfg.kmax
        )));
    }
    let domain = parse_domain(&cfg.domain)?;
    let pieces: Vec<DomainId> = match domain {
        DomainId::Omega => vec![
            DomainId::OmegaX,
            DomainId::OmegaY,
            DomainId::OmegaZ,
            DomainId::Omega,
        ],
        DomainId::OmegaPrime => vec![
            DomainId::OmegaXp,
            DomainId::OmegaYp,
            DomainId::OmegaZ,
            DomainId::OmegaPrime,
        ],
        DomainId::OmegaX
        | DomainId::OmegaY
        | DomainId::OmegaZ
        | DomainId::OmegaXp
        | DomainId::OmegaYp => vec![domain],
        other => {
            return Err(CliError::config(format!(
                "moments are defined on the Reinhardt domains, not {}",
                other.label()
            )))
        }
    };

    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut disagreements = 0usize;
    for &piece in &pieces {
        for j in 0..=cfg.kmax {
            for k in 0..=cfg.kmax {
                let adm = admissible(piece, j, k).map_err(from_core)?;
                let closed = moment(piece, j, k, MomentMethod::ClosedForm).map_err(from_core)?;
                let quad = moment(piece, j, k, MomentMethod::Quadrature).map_err(from_core)?;
                let both_divergent = closed.is_infinite() && quad.is_infinite();
                let abs_diff = if both_divergent {
                    0.0
                } else {
                    (closed - quad).abs()
                };
                let agree = both_divergent || abs_diff <= cfg.tolerance;
                if !agree {
                    disagreements += 1;
                }
                rows.push(format!(
                    "{},{j},{k},{},{},{},{},{}",
                    piece.label(),
                    adm,
                    fmt_f(closed),
                    fmt_f(quad),
                    fmt_f(abs_diff),
                    agree
                ));
                results.push(json!({
                    "domain": piece.label(),
                    "j": j,
                    "k": k,
                    "admissible": adm,
                    "log_closed": if closed.is_finite() { json!(closed) } else { json!("inf") },
                    "log_quadrature": if quad.is_finite() { json!(quad) } else { json!("inf") },
                    "abs_diff": abs_diff,
                    "agree": agree,
                }));
            }
        }
    }

    // The throat display comparison is part of the deliverable whenever the
    // X-piece is in play; it is reported, never suppressed.
    let has_throat = pieces
        .iter()
        .any(|d| matches!(d, DomainId::OmegaX | DomainId::OmegaYp));
    let display_report = has_throat.then(|| polylens::hankel::throat_display_report(cfg.kmax));

    let doc = match cfg.format {
        OutFormat::Csv => {
            let mut footer = vec![format!("# disagreements {disagreements}")];
            if let Some(report) = &display_report {
                footer.push("# section throat_display_comparison".to_owned());
                footer.extend(report.lines().map(str::to_owned));
            }
            csv_document(
                cfg,
                "domain,j,k,admissible,log_closed,log_quadrature,abs_diff,agree",
                &rows,
                &footer,
            )
        }
        OutFormat::Json => {
            let display = display_report.as_ref().map(|_| {
                polylens::hankel::throat_display_comparison(cfg.kmax)
                    .iter()
                    .map(|row| {
                        json!({
                            "k": row.k,
                            "log_exact": row.log_exact,
                            "log_display": row.log_display,
                            "log_ratio": row.log_ratio,
                            "predicted_log_ratio": row.predicted_log_ratio,
                        })
                    })
                    .collect::<Vec<_>>()
            });
            json_document(
                cfg,
                json!({
                    "moments": results,
                    "disagreements": disagreements,
                    "throat_display_comparison": display,
                }),
            )
        }
    };
    write_output(out, &doc)?;

    if disagreements == 0 {
        Ok(())
    } else {
        Err(CliError::numeric(format!(
            "{disagreements} moment(s) disagree beyond {:.1e}",
            cfg.tolerance
        )))
    }
}

fn hs(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    if cfg.kmax < 2 || cfg.kmax % 2 != 0 {
        return Err(CliError::range(format!(
            "convergence verdicts need an even kmax ≥ 2, got {}",
            cfg.kmax
        )));
    }
    let kmax = cfg.kmax;

    let mut sections = Vec::new();
    let mut summaries = Vec::new();
    let mut json_results = serde_json::Map::new();
    let mut all_converged = true;

    let mut diagonals = Vec::new();
    for domain in [DomainId::Omega, DomainId::OmegaPrime] {
        let table = MomentTable::build_diagonal(domain, kmax + 1, MomentMethod::ClosedForm)
            .map_err(from_core)?;
        let diag = hs_diagnostics(domain, kmax, &table).map_err(from_core)?;
        let (partial, converged) = hs_partial_sum(domain, kmax, &table).map_err(from_core)?;
        all_converged &= converged;

        sections.push(format!("# section diagonal domain={}", domain.label()));
        sections.push("k,ratio,difference,partial_sum".to_owned());
        for k in 0..=kmax as usize {
            sections.push(format!(
                "{k},{},{},{}",
                fmt_f(diag.ratios[k]),
                fmt_f(diag.differences[k]),
                fmt_f(diag.partial_sums[k])
            ));
        }
        summaries.push(format!(
            "# {}: S_{kmax} = {}, converged = {converged}",
            domain.label(),
            fmt_f(partial)
        ));

        let exponent = if kmax >= 32 {
            let e = difference_decay_exponent(&diag, 8, kmax / 2).map_err(from_core)?;
            summaries.push(format!(
                "# {}: difference_decay_exponent[8,{}] = {}",
                domain.label(),
                kmax / 2,
                fmt_f(e)
            ));
            Some(e)
        } else {
            None
        };

        json_results.insert(
            domain.label().to_owned(),
            json!({
                "diagnostics": diag,
                "partial_sum": partial,
                "converged": converged,
                "difference_decay_exponent": exponent,
            }),
        );
        diagonals.push(diag);
    }

    // The two unions must tell the same story, bit for bit at output scale.
    let mut cross_dev: f64 = 0.0;
    let (a, b) = (&diagonals[0], &diagonals[1]);
    for k in 0..=kmax as usize {
        cross_dev = cross_dev
            .max((a.ratios[k] - b.ratios[k]).abs())
            .max((a.differences[k] - b.differences[k]).abs())
            .max((a.partial_sums[k] - b.partial_sums[k]).abs());
    }
    summaries.push(format!("# cross_union_deviation {}", fmt_f(cross_dev)));

    let z_table = MomentTable::build(DomainId::OmegaZ, kmax + 1, kmax + 1, MomentMethod::ClosedForm)
        .map_err(from_core)?;
    let trace = hs_double_sum_polydisc(kmax, &z_table).map_err(from_core)?;
    sections.push("# section polydisc_double_sum domain=omega_z".to_owned());
    sections.push("k,total".to_owned());
    for (k, total) in &trace.totals {
        sections.push(format!("{k},{}", fmt_f(*total)));
    }
    summaries.push(format!(
        "# omega_z: octave_slope = {}, verdict = {}",
        fmt_f(trace.octave_slope),
        verdict_label(trace.verdict)
    ));
    let z_diverging = trace.verdict == Verdict::Diverging;
    json_results.insert(
        "omega_z".to_owned(),
        serde_json::to_value(&trace).expect("trace serialization"),
    );
    json_results.insert("cross_union_deviation".to_owned(), json!(cross_dev));

    let doc = match cfg.format {
        OutFormat::Csv => {
            // Each section carries its own schema line.
            let mut body = sections;
            body.extend(summaries);
            csv_document(cfg, "", &[], &body)
        }
        OutFormat::Json => json_document(cfg, serde_json::Value::Object(json_results)),
    };
    write_output(out, &doc)?;

    if all_converged && z_diverging {
        Ok(())
    } else {
        Err(CliError::numeric(format!(
            "expected converged unions and a diverging bidisc trace; converged = {all_converged}, bidisc = {}",
            verdict_label(trace.verdict)
        )))
    }
}

fn exceptional(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    let pair = DefiningPair::parse(&cfg.pair)
        .ok_or_else(|| CliError::config(format!("unknown defining pair '{}'", cfg.pair)))?;
    let sample = sample_intersection(pair, cfg.samples, cfg.seed).map_err(from_core)?;
    let found =
        exceptional_points(pair, &sample, cfg.tolerance).map_err(from_core)?;
    let flagged = sample.exceptional_flags.iter().filter(|&&f| f).count();

    let doc = match cfg.format {
        OutFormat::Csv => {
            let rows: Vec<String> = found
                .iter()
                .map(|p| [p.z1.re, p.z1.im, p.z2.re, p.z2.im].map(fmt_f).join(","))
                .collect();
            csv_document(
                cfg,
                "z1_re,z1_im,z2_re,z2_im",
                &rows,
                &[
                    format!("# samples {}", sample.points.len()),
                    format!("# flagged_samples {flagged}"),
                    format!("# exceptional_points {}", found.len()),
                ],
            )
        }
        OutFormat::Json => json_document(
            cfg,
            json!({
                "sample": sample,
                "flagged_samples": flagged,
                "exceptional_points": found
                    .iter()
                    .map(|p| [p.z1.re, p.z1.im, p.z2.re, p.z2.im])
                    .collect::<Vec<_>>(),
            }),
        ),
    };
    write_output(out, &doc)
}

fn psh(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    let patch = ManifoldPatch::parse(&cfg.patch)
        .ok_or_else(|| CliError::config(format!("unknown manifold patch '{}'", cfg.patch)))?;
    let region = Region {
        center: Point2::new(
            Complex64::new(cfg.region.center[0], cfg.region.center[1]),
            Complex64::new(cfg.region.center[2], cfg.region.center[3]),
        ),
        half_width: cfg.region.half_width,
        per_axis: cfg.region.per_axis,
    };
    region.validate().map_err(from_core)?;

    let center_report = complex_hessian(
        |q| distance_sq(patch, q).expect("distance minimization is total"),
        region.center,
        1e-4,
    )
    .map_err(from_core)?;
    let certificate = psh_certify(patch, &region, cfg.margin).map_err(from_core)?;

    let doc = match cfg.format {
        OutFormat::Csv => {
            let m = &center_report.matrix;
            let rows = vec![
                format!("margin,{}", fmt_f(cfg.margin)),
                format!("c_min,{}", fmt_f(certificate.c_min)),
                format!("lambda,{}", fmt_f(certificate.lambda)),
                format!("scaled_min,{}", fmt_f(certificate.scaled_min)),
                format!("center_min_eigenvalue,{}", fmt_f(center_report.min_eigenvalue)),
                format!("center_h11_re,{}", fmt_f(m[0][0].re)),
                format!("center_h12_re,{}", fmt_f(m[0][1].re)),
                format!("center_h12_im,{}", fmt_f(m[0][1].im)),
                format!("center_h22_re,{}", fmt_f(m[1][1].re)),
            ];
            csv_document(cfg, "quantity,value", &rows, &[])
        }
        OutFormat::Json => json_document(
            cfg,
            json!({
                "hessian_center": center_report,
                "certificate": certificate,
            }),
        ),
    };
    write_output(out, &doc)
}
