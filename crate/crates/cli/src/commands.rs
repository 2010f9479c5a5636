//! One function per subcommand. Each returns an [`Outcome`]; nothing here
//! touches the filesystem except `report`, which reads earlier outputs.

use std::path::Path;

use chern_core::curvature::{chern_densities_from_form, curvature_at, curvature_form, Convention};
use chern_core::error::{CurvatureError, LatticeError, MetricError};
use chern_core::family::{
    build_section, cycle_from_constant_family, section_from_descriptors, validate_parabolic_data,
    CurveFamily, FamilyMode,
};
use chern_core::formcalc::{Basis, Monomial};
use chern_core::lattice::{
    hyperbolic_distance, in_k_plus, norm, restriction_bound_satisfied,
    semistable_discriminant_inequality, xi_invariant, BoundQuery, IntersectionForm, LatticeClass,
    Rational,
};
use chern_core::metricfield::{
    flatness_pattern_report, BasePoint, Grid, HermitianMetricField, Slot,
};
use chern_core::paperformulas::{det_formula_density, DensityRun, Sign};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::{read_csv, Outcome, Row, Summary};
use crate::scenario::{Command, LatticeSpec, Scenario};
use crate::CliError;

const DETERMINANT: &str = "determinant";

fn metric_of(s: &Scenario) -> Result<&HermitianMetricField, CliError> {
    s.metric
        .as_ref()
        .ok_or_else(|| CliError::Validation("scenario has no [metric] section".into()))
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Shape { .. }
            | MetricError::ZeroRank
            | MetricError::Component(..)
            | MetricError::MissingDiagonal(_)
            | MetricError::Patch(_)
            | MetricError::EmptyGrid => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CurvatureError> for CliError {
    fn from(e: CurvatureError) -> Self {
        match e {
            CurvatureError::Metric(m) => m.into(),
            CurvatureError::Resolution(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn inspect(s: &Scenario) -> Result<Outcome, CliError> {
    let metric = metric_of(s)?;
    let report = flatness_pattern_report(
        metric,
        &s.patch,
        s.grid.fd,
        &s.grid.resolution,
        s.grid.tolerance,
    )?;
    let mut out = Outcome::new(Command::Inspect.name());
    let mode = report.mode.name();
    out.rows
        .push(Row::real("pattern.points", mode, report.points as f64));
    for (name, block) in [
        ("first", &report.first_block),
        ("second", &report.second_block),
        ("mixed", &report.mixed),
    ] {
        out.rows.push(Row::real(
            format!("pattern.{name}.max_abs"),
            mode,
            block.max_abs,
        ));
        out.rows.push(Row::flag(
            format!("pattern.{name}.required"),
            mode,
            block.required,
        ));
        out.rows
            .push(Row::flag(format!("pattern.{name}.pass"), mode, block.pass));
        if let Some(w) = block.worst {
            let (i, j) = w.component;
            out.rows.push(Row::at(
                &w.point,
                format!(
                    "pattern.{name}.worst.h{}{}.d{}d{}",
                    i + 1,
                    j + 1,
                    w.entry.0.name(),
                    w.entry.1.name()
                ),
                mode,
                w.value,
            ));
        }
    }
    out.rows.push(Row::flag("pattern.pass", mode, report.pass));
    if report.pass {
        out.messages
            .push(format!("flatness pattern holds in {mode} mode"));
    } else {
        out.exit_code = 1;
        let msg = format!("flatness pattern fails in {mode} mode");
        out.findings.push(msg.clone());
        out.messages.push(msg);
    }
    Ok(out)
}

/// Explicit points, or `samples` seeded random points kept clear of open
/// boundaries by the stencil reach.
pub fn sample_points(s: &Scenario) -> Vec<BasePoint> {
    if !s.run.points.is_empty() {
        return s.run.points.clone();
    }
    let steps = s.grid.fd.steps(&s.patch);
    let mut rng = ChaCha8Rng::seed_from_u64(s.run.seed);
    (0..s.run.samples)
        .map(|_| {
            std::array::from_fn(|a| {
                let (lo, hi) = s.patch.range(a);
                let reach = if s.patch.is_periodic(a) {
                    0.0
                } else {
                    (2.0 * steps[a] - s.patch.margin()).max(0.0)
                };
                let (lo, hi) = if hi - lo > 2.0 * reach {
                    (lo + reach, hi - reach)
                } else {
                    (lo, hi)
                };
                rng.random_range(lo..hi)
            })
        })
        .collect()
}

fn form_label(m: Monomial) -> String {
    m.elements()
        .into_iter()
        .map(Basis::name)
        .collect::<Vec<_>>()
        .join("^")
}

pub fn curvature(s: &Scenario, conventions: &[Convention]) -> Result<Outcome, CliError> {
    let metric = metric_of(s)?;
    let mut out = Outcome::new(Command::Curvature.name());
    let r = metric.rank();
    let points = sample_points(s);
    for p in &points {
        let t = curvature_at(metric, &s.patch, s.grid.fd, p)?;
        for i in 0..r {
            for j in 0..r {
                for a in 0..2 {
                    for b in 0..2 {
                        out.rows.push(Row::at(
                            p,
                            format!(
                                "R.{}{}.d{}d{}",
                                i + 1,
                                j + 1,
                                Slot::holomorphic(a).name(),
                                Slot::antiholomorphic(b).name()
                            ),
                            "",
                            t.raised(i, j, a, b),
                        ));
                    }
                }
            }
        }
        out.rows.push(Row::at(
            p,
            "R.hermitian_defect",
            "",
            c(t.hermitian_defect()),
        ));
        let omega = curvature_form(&t);
        for &conv in conventions {
            let d = chern_densities_from_form(&omega, conv);
            for (m, v) in d.c1.terms() {
                out.rows
                    .push(Row::at(p, format!("c1.{}", form_label(m)), conv.name(), v));
            }
            out.rows.push(Row::at(p, "c2.density", conv.name(), d.c2));
        }
        let det = det_formula_density(metric, &s.patch, s.grid.fd, p)?;
        out.rows.push(Row::at(p, "c2.density", DETERMINANT, det));
    }
    out.rows
        .push(Row::real("curvature.points", "", points.len() as f64));
    out.messages
        .push(format!("curvature at {} points", points.len()));
    Ok(out)
}

fn push_estimate(
    out: &mut Outcome,
    prefix: &str,
    convention: &str,
    e: &chern_core::curvature::IntegralEstimate,
) {
    out.rows
        .push(Row::aggregate(prefix.to_string(), convention, e.value));
    out.rows.push(Row::aggregate(
        format!("{prefix}.coarse"),
        convention,
        e.coarse_value,
    ));
    out.rows.push(Row::real(
        format!("{prefix}.error_estimate"),
        convention,
        e.error_estimate,
    ));
    out.rows.push(Row::real(
        format!("{prefix}.points"),
        convention,
        e.points as f64,
    ));
    out.rows.push(Row::real(
        format!("{prefix}.failed"),
        convention,
        e.failed as f64,
    ));
}

pub fn c2(s: &Scenario, conventions: &[Convention]) -> Result<Outcome, CliError> {
    let metric = metric_of(s)?;
    let grid = s.grid.resolution;
    let mut run = DensityRun::new(metric, &s.patch, s.grid.fd);
    let mut out = Outcome::new(Command::C2.name());
    for &conv in conventions {
        let e = run.integral(&grid, move |d| d.c2(conv))?;
        push_estimate(&mut out, "c2.integral", conv.name(), &e);
        out.messages
            .push(format!("integral c2 [{}] = {}", conv.name(), e.value));
    }
    let e = run.integral(&grid, |d| d.det_formula)?;
    push_estimate(&mut out, "c2.integral", DETERMINANT, &e);
    out.messages
        .push(format!("integral c2 [{DETERMINANT}] = {}", e.value));
    Ok(out)
}

fn grid_label(g: &Grid) -> String {
    g.resolution.map(|n| n.to_string()).join("x")
}

fn sign_value(s: Sign) -> f64 {
    match s {
        Sign::Positive => 1.0,
        Sign::Negative => -1.0,
        Sign::Zero => 0.0,
    }
}

pub fn verify(s: &Scenario, conventions: &[Convention]) -> Result<Outcome, CliError> {
    let metric = metric_of(s)?;
    let tol = s.grid.tolerance;
    let grid = s.grid.resolution;
    let mut run = DensityRun::new(metric, &s.patch, s.grid.fd);
    let id = run.identity_residual(&grid, &s.grid.refinements, conventions, tol)?;
    let pos = run.positivity_report(&grid, conventions, tol)?;
    let mut out = Outcome::new(Command::Verify.name());

    for rec in &id.records {
        out.rows.push(Row::at(
            &rec.point,
            "density",
            DETERMINANT,
            rec.paper_density,
        ));
        for o in &rec.oracle {
            out.rows.push(Row::at(
                &rec.point,
                "density",
                o.convention.name(),
                o.density,
            ));
            out.rows.push(Row::at(
                &rec.point,
                "residual",
                o.convention.name(),
                c(o.residual),
            ));
        }
    }
    let mode = metric.mode().name();
    out.rows
        .push(Row::flag("pattern.pass", mode, id.pattern.pass));
    out.rows.push(Row::real(
        "pattern.first.max_abs",
        mode,
        id.pattern.first_block.max_abs,
    ));
    out.rows.push(Row::real(
        "pattern.second.max_abs",
        mode,
        id.pattern.second_block.max_abs,
    ));
    out.rows.push(Row::real(
        "pattern.mixed.max_abs",
        mode,
        id.pattern.mixed.max_abs,
    ));
    out.rows.push(Row::real("tolerance", "", tol));
    out.rows
        .push(Row::real("failed_points", "", id.failed_points as f64));
    out.rows.push(Row::real(
        "density.max_abs",
        DETERMINANT,
        id.max_paper_density(),
    ));
    out.rows.push(Row::real(
        "density.min_re",
        DETERMINANT,
        id.min_paper_density_re(),
    ));
    push_estimate(&mut out, "integral", DETERMINANT, &id.paper_integral);
    for sm in &id.conventions {
        let name = sm.convention.name();
        push_estimate(&mut out, "integral", name, &sm.oracle_integral);
        out.rows
            .push(Row::real("max_residual", name, sm.max_residual));
        out.rows
            .push(Row::real("integral_residual", name, sm.integral_residual));
    }
    for row in &id.convergence {
        let g = grid_label(&row.grid);
        out.rows.push(Row::aggregate(
            format!("convergence.{g}.integral"),
            DETERMINANT,
            row.paper_integral,
        ));
        for (k, &conv) in conventions.iter().enumerate() {
            out.rows.push(Row::aggregate(
                format!("convergence.{g}.integral"),
                conv.name(),
                row.oracle_integrals[k],
            ));
            out.rows.push(Row::real(
                format!("convergence.{g}.integral_residual"),
                conv.name(),
                row.integral_residuals[k],
            ));
        }
    }
    out.rows.push(Row::real(
        "positivity.sign",
        DETERMINANT,
        sign_value(pos.sign),
    ));
    out.rows.push(Row::flag(
        "positivity.imaginary_within_tolerance",
        DETERMINANT,
        pos.imaginary_within_tolerance,
    ));
    out.rows
        .push(Row::flag("in_hypothesis", mode, id.in_hypothesis));
    out.rows.push(Row::flag("discrepancy", "", id.discrepancy));

    if !id.in_hypothesis {
        out.findings.push(format!(
            "metric does not have the flatness pattern of {mode} mode; residuals are informational"
        ));
    }
    if id.discrepancy {
        for sm in id.conventions.iter().filter(|sm| sm.max_residual > tol) {
            out.findings.push(format!(
                "convention gap: determinant density differs from the {} second Chern density (see max_residual)",
                sm.convention.name()
            ));
        }
    }
    out.messages.push(format!(
        "integral [{DETERMINANT}] = {} (sign {:?})",
        id.paper_integral.value, pos.sign
    ));
    for sm in &id.conventions {
        out.messages.push(format!(
            "integral [{}] = {}, max residual {:e}",
            sm.convention.name(),
            sm.oracle_integral.value,
            sm.max_residual
        ));
    }
    out.messages.extend(out.findings.iter().cloned());
    Ok(out)
}

pub fn bound_query(r: u32, big_r: Rational, delta: Rational, n: u64) -> Result<Outcome, CliError> {
    let mut out = Outcome::new(Command::Bound.name());
    push_bound(&mut out, 0, r, big_r, delta, n)?;
    Ok(out)
}

fn push_bound(
    out: &mut Outcome,
    k: usize,
    r: u32,
    big_r: Rational,
    delta: Rational,
    n: u64,
) -> Result<(), CliError> {
    let q = BoundQuery::new(r, big_r, delta, n)?;
    let res = restriction_bound_satisfied(&q);
    let tag = format!("bound.{k}");
    out.rows.push(Row::real(format!("{tag}.r"), "", r as f64));
    out.rows.push(Row::real(
        format!("{tag}.R"),
        "",
        big_r.to_f64().unwrap_or(f64::NAN),
    ));
    out.rows.push(Row::real(
        format!("{tag}.delta"),
        "",
        delta.to_f64().unwrap_or(f64::NAN),
    ));
    out.rows.push(Row::real(format!("{tag}.n"), "", n as f64));
    out.rows.push(Row::real(
        format!("{tag}.threshold"),
        "",
        q.threshold().to_f64().unwrap_or(f64::NAN),
    ));
    out.rows
        .push(Row::flag(format!("{tag}.satisfied"), "", res.satisfied));
    out.rows.push(Row::real(
        format!("{tag}.minimal_n"),
        "",
        res.minimal_n as f64,
    ));
    out.messages.push(format!(
        "{}, minimalN={}",
        if res.satisfied {
            "satisfied"
        } else {
            "not satisfied"
        },
        res.minimal_n
    ));
    Ok(())
}

fn named<'a>(spec: &'a LatticeSpec, name: &str) -> &'a LatticeClass {
    spec.class(name)
        .expect("names are checked when the scenario is parsed")
}

pub fn lattice(spec: &LatticeSpec) -> Result<Outcome, CliError> {
    let q = IntersectionForm::new(spec.form.clone())?;
    let mut out = Outcome::new(Command::Bound.name());
    for (name, class) in &spec.classes {
        out.rows
            .push(Row::real(format!("norm.{name}"), "", norm(class, &q)?));
        out.rows.push(Row::real(
            format!("square.{name}"),
            "",
            q.square(class)?.to_f64().unwrap_or(f64::NAN),
        ));
    }
    for (a, b) in &spec.distances {
        let d = hyperbolic_distance(named(spec, a), named(spec, b), &q)?;
        out.rows.push(Row::real(format!("distance.{a}.{b}"), "", d));
        out.messages.push(format!("beta({a}, {b}) = {d}"));
    }
    if !spec.k_plus.is_empty() {
        let ample: Vec<LatticeClass> = spec.ample.iter().map(|n| named(spec, n).clone()).collect();
        for d in &spec.k_plus {
            let inside = in_k_plus(named(spec, d), &q, &ample)?;
            out.rows.push(Row::flag(format!("k_plus.{d}"), "", inside));
        }
    }
    for (a, ra, b, rb) in &spec.xi {
        let x = xi_invariant(named(spec, a), *ra, named(spec, b), *rb)?;
        for (k, v) in x.coords().iter().enumerate() {
            out.rows.push(Row::real(
                format!("xi.{a}.{b}.{k}"),
                "",
                v.to_f64().unwrap_or(f64::NAN),
            ));
        }
        out.messages.push(format!("xi({a}/{ra}, {b}/{rb}) = {x}"));
    }
    if !spec.discriminants.is_empty() {
        let h = spec
            .polarization
            .as_ref()
            .map(|n| named(spec, n).clone())
            .ok_or_else(|| {
                CliError::Validation("discriminant checks need `polarization`".into())
            })?;
        for (k, d) in spec.discriminants.iter().enumerate() {
            let ok = semistable_discriminant_inequality(d, &h, &q, spec.dimension)?;
            out.rows
                .push(Row::flag(format!("discriminant.{k}.nonnegative"), "", ok));
        }
    }
    for (k, &(r, big_r, delta, n)) in spec.bounds.iter().enumerate() {
        push_bound(&mut out, k, r, big_r, delta, n)?;
    }
    Ok(out)
}

pub fn family(s: &Scenario) -> Result<Outcome, CliError> {
    let spec = s
        .family
        .as_ref()
        .ok_or_else(|| CliError::Validation("scenario has no [family] section".into()))?;
    let mut out = Outcome::new(Command::Family.name());
    out.rows.push(Row::real(
        "family.fibers",
        spec.mode.name(),
        spec.fibers.len() as f64,
    ));
    let mut valid = true;
    let mut fail = |out: &mut Outcome, msg: String| {
        valid = false;
        out.findings.push(msg.clone());
        out.messages.push(msg);
    };

    match CurveFamily::new(spec.mode, spec.fibers.clone()) {
        Err(e) => fail(&mut out, e.to_string()),
        Ok(fam) => {
            if let Some(t) = spec.singularity_threshold {
                let singular = fam.singular_fibers(t);
                out.rows
                    .push(Row::real("family.too_singular", "", singular.len() as f64));
                if let Err(e) = fam.check_singularity_threshold(t) {
                    fail(&mut out, e.to_string());
                }
            }
            let constant = fam.mode() == FamilyMode::ConstantCurve;
            let section = match &spec.assignments {
                Some(a) => build_section(fam, a),
                None => section_from_descriptors(fam),
            };
            match section {
                Err(e) => {
                    out.rows.push(Row::flag("family.section_valid", "", false));
                    fail(&mut out, e.to_string());
                }
                Ok(sec) => {
                    out.rows.push(Row::flag("family.section_valid", "", true));
                    if constant {
                        let cycle = cycle_from_constant_family(&sec).expect("mode checked");
                        out.rows
                            .push(Row::real("family.cycle_size", "", cycle.len() as f64));
                        for (k, p) in cycle.iter().enumerate() {
                            let payload: Vec<String> =
                                p.iter().map(|(k, v)| format!("{k}={v}")).collect();
                            out.messages
                                .push(format!("cycle point {k}: {}", payload.join(" ")));
                        }
                    }
                }
            }
        }
    }
    if let Some(p) = &spec.parabolic {
        let v = validate_parabolic_data(p);
        out.rows.push(Row::flag("parabolic.valid", "", v.valid));
        out.rows.push(Row::real(
            "parabolic.violations",
            "",
            v.violations.len() as f64,
        ));
        for viol in &v.violations {
            fail(&mut out, format!("parabolic data: {viol}"));
        }
    }
    if valid {
        out.messages.push("family is valid".into());
    } else {
        out.exit_code = 1;
    }
    Ok(out)
}

/// Collects the outputs of earlier commands in `dir` into one table.
pub fn report(dir: &Path) -> Result<(Outcome, Vec<Summary>), CliError> {
    let mut out = Outcome::new(Command::Report.name());
    let mut summaries = Vec::new();
    for cmd in Command::ALL.into_iter().filter(|c| *c != Command::Report) {
        let csv = dir.join(format!("{}.csv", cmd.name()));
        let json = dir.join(format!("{}.json", cmd.name()));
        if !csv.exists() || !json.exists() {
            continue;
        }
        let rows = read_csv(&csv).map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
        let text = std::fs::read_to_string(&json)
            .map_err(|e| CliError::Io(format!("{}: {e}", json.display())))?;
        let summary: Summary = serde_json::from_str(&text)
            .map_err(|e| CliError::Io(format!("{}: {e}", json.display())))?;
        for mut r in rows.into_iter().filter(|r| r.is_aggregate()) {
            r.quantity = format!("{}:{}", cmd.name(), r.quantity);
            out.rows.push(r);
        }
        out.findings.extend(
            summary
                .findings
                .iter()
                .map(|f| format!("{}: {f}", cmd.name())),
        );
        out.messages
            .push(format!("{}: exit {}", cmd.name(), summary.exit_code));
        summaries.push(summary);
    }
    if summaries.is_empty() {
        return Err(CliError::Validation(format!(
            "no command outputs found in {}",
            dir.display()
        )));
    }
    Ok((out, summaries))
}
