//! Subcommand drivers: each runs the relevant analyzers, writes the report
//! and artifacts, prints a one-line summary, and returns any violations.

use serde_json::{json, Value};

use beltrami_core::boundary::{self, BoundaryOptions};
use beltrami_core::domain::Vec3;
use beltrami_core::field::BeltramiField;
use beltrami_core::flow::{self, RecurrenceOptions};
use beltrami_core::nodal;

use crate::report::{emit_csv, emit_json, Report};
use crate::verify;
use crate::{load_field, Cli, Command, Common, Format};

pub fn run(cli: &Cli) -> Result<Vec<String>, String> {
    match &cli.command {
        Command::Catalog => catalog(&cli.common),
        Command::Trace {
            start,
            t_end,
            tol,
            return_eps,
            min_period,
        } => trace(&cli.common, start, *t_end, *tol, *return_eps, *min_period),
        Command::Zeros { grid, refine_tol } => zeros(&cli.common, *grid, *refine_tol),
        Command::Dimension { grid } => dimension(&cli.common, *grid),
        Command::Nodal { grid, margin } => nodal_cmd(&cli.common, *grid, *margin),
        Command::Boundary { traces, horizon } => boundary_cmd(&cli.common, *traces, *horizon),
        Command::Recurrence {
            samples,
            horizon,
            eps,
        } => recurrence(&cli.common, *samples, *horizon, *eps),
        Command::Verify => verify::run(&cli.common),
    }
}

fn finish(
    common: &Common,
    name: &str,
    mut report: Report,
    results: Value,
    violations: Vec<String>,
    summary: &str,
) -> Result<Vec<String>, String> {
    report.results = results;
    report.violations = violations.clone();
    if common.format == Format::Json {
        let path = emit_json(&common.out, name, &report)?;
        println!("{summary} -> {}", path.display());
    } else {
        println!("{summary}");
    }
    Ok(violations)
}

fn catalog(common: &Common) -> Result<Vec<String>, String> {
    if common.field.is_none() {
        println!("catalog formats:");
        println!("  abc:A,B,C        ABC flow on the 2π-periodic 3-torus (λ = 1)");
        println!("  spheromak:R,B0   lowest tangent curl eigenfield of the ball of radius R");
        println!("  expr:<file>      three comma- or line-separated expressions in x,y,z");
        return Ok(Vec::new());
    }
    let field = load_field(common)?;
    let results = json!({
        "name": field.name(),
        "lambda": field.lambda(),
        "scale": field.scale(),
        "tangent_to_boundary": field.tangent_to_boundary(),
    });
    let report = Report::new(
        field.name(),
        field.domain().clone(),
        "catalog",
        json!({}),
        !common.no_timestamp,
    );
    let summary = format!(
        "catalog: {} on {} (lambda = {})",
        field.name(),
        field.domain(),
        field.lambda()
    );
    finish(common, "catalog", report, results, Vec::new(), &summary)
}

fn parse_point(s: &str) -> Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("start point `{s}` must be three comma-separated numbers"));
    }
    let mut v = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("start coordinate `{p}` is not a number"))?;
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn trace(
    common: &Common,
    start: &str,
    t_end: f64,
    tol: f64,
    return_eps: f64,
    min_period: f64,
) -> Result<Vec<String>, String> {
    let field = load_field(common)?;
    let p0 = parse_point(start)?;
    let mut traj = flow::integrate(&field, p0, t_end, tol).map_err(|e| e.to_string())?;
    traj.classification = flow::classify(&field, &traj, return_eps, min_period);

    let rows = traj
        .wrapped_samples(field.domain())
        .into_iter()
        .map(|(t, p)| format!("{t},{},{},{}", p.x, p.y, p.z));
    emit_csv(&common.out, "trajectory.csv", "t,x,y,z", rows)?;

    let results = json!({
        "classification": traj.classification,
        "samples": traj.samples.len(),
        "stats": traj.stats,
        "end_point": {
            "t": traj.samples.last().map(|s| s.0),
            "p": traj.samples.last().map(|s| [s.1.x, s.1.y, s.1.z]),
        },
    });
    let report = Report::new(
        field.name(),
        field.domain().clone(),
        "trace",
        json!({"start": start, "t_end": t_end, "tol": tol,
               "return_eps": return_eps, "min_period": min_period,
               "seed": common.seed}),
        !common.no_timestamp,
    );
    let summary = format!(
        "trace: {} samples, classification {:?}",
        traj.samples.len(),
        traj.classification
    );
    finish(common, "trace", report, results, Vec::new(), &summary)
}

fn zeros(common: &Common, grid: usize, refine_tol: f64) -> Result<Vec<String>, String> {
    let field = load_field(common)?;
    let zs = nodal::find_zeros(&field, grid, refine_tol).map_err(|e| e.to_string())?;
    let summary = format!(
        "zeros: {} refined zeros in {} clusters",
        zs.records.len(),
        zs.n_clusters
    );
    let results = serde_json::to_value(&zs).map_err(|e| e.to_string())?;
    let report = Report::new(
        field.name(),
        field.domain().clone(),
        "zeros",
        json!({"grid": grid, "refine_tol": refine_tol, "seed": common.seed}),
        !common.no_timestamp,
    );
    finish(common, "zeros", report, results, Vec::new(), &summary)
}

fn dimension(common: &Common, grid: usize) -> Result<Vec<String>, String> {
    let field = load_field(common)?;
    let mut zs =
        nodal::find_zeros(&field, grid, nodal::DEFAULT_REFINE_TOL).map_err(|e| e.to_string())?;
    let scales = nodal::default_scales(field.domain());
    let dim = nodal::box_counting_dimension(&field, &mut zs, &scales).map_err(|e| e.to_string())?;

    emit_csv(
        &common.out,
        "box_counts.csv",
        "scale,count",
        dim.rows.iter().map(|(s, c)| format!("{s},{c}")),
    )?;

    let results = json!({
        "aggregate_slope": dim.aggregate_slope,
        "rows": dim.rows,
        "per_cluster": dim.per_cluster,
        "points_used": zs.records.len() + zs.cloud_size,
    });
    let report = Report::new(
        field.name(),
        field.domain().clone(),
        "dimension",
        json!({"grid": grid, "seed": common.seed}),
        !common.no_timestamp,
    );
    let summary = format!("dimension: box-count slope {:.4}", dim.aggregate_slope);
    finish(common, "dimension", report, results, Vec::new(), &summary)
}

fn nodal_cmd(common: &Common, grid: usize, margin: Option<f64>) -> Result<Vec<String>, String> {
    let field = load_field(common)?;
    let rep = nodal::count_nodal_domains(&field, grid, margin).map_err(|e| e.to_string())?;
    let results = serde_json::to_value(&rep).map_err(|e| e.to_string())?;
    let report = Report::new(
        field.name(),
        field.domain().clone(),
        "nodal",
        json!({"grid": grid, "margin": margin, "seed": common.seed}),
        !common.no_timestamp,
    );
    let summary = format!("nodal: {} domain(s) at grid {}", rep.domains, grid);
    finish(common, "nodal", report, results, Vec::new(), &summary)
}

fn boundary_cmd(common: &Common, traces: usize, horizon: f64) -> Result<Vec<String>, String> {
    let field = load_field(common)?;
    let opts = BoundaryOptions {
        n_traces: traces,
        horizon,
        seed: common.seed,
        ..BoundaryOptions::default()
    };
    let rep = boundary::analyze(&field, &opts).map_err(|e| e.to_string())?;

    let mut rows = Vec::new();
    for (i, &theta) in rep.potential.thetas.iter().enumerate() {
        for (j, &phi) in rep.potential.phis.iter().enumerate() {
            let f = rep.potential.values[i * rep.potential.n_phi + j];
            rows.push(format!("{theta},{phi},{f}"));
        }
    }
    emit_csv(&common.out, "potential.csv", "theta,phi,f", rows)?;

    let mut violations = Vec::new();
    if !rep.census.meets_lower_bound {
        violations.push(format!(
            "boundary::boundary_zero_census: #K = {} below the lower bound 2N = {}",
            rep.census.count, rep.census.two_n
        ));
    }
    let summary = format!(
        "boundary: #K = {} (2N = {}), closedness {:.2e}, path defect {:.2e}",
        rep.census.count, rep.census.two_n, rep.closedness_residual, rep.potential.path_defect
    );
    let results = serde_json::to_value(&rep).map_err(|e| e.to_string())?;
    let report = Report::new(
        field.name(),
        field.domain().clone(),
        "boundary",
        json!({"traces": traces, "horizon": horizon, "seed": common.seed}),
        !common.no_timestamp,
    );
    finish(common, "boundary", report, results, violations, &summary)
}

fn recurrence(
    common: &Common,
    samples: usize,
    horizon: f64,
    eps: f64,
) -> Result<Vec<String>, String> {
    let field = load_field(common)?;
    let rep = flow::recurrence_experiment(
        &field,
        samples,
        horizon,
        eps,
        common.seed,
        &RecurrenceOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let summary = format!(
        "recurrence: forward {:.3}, backward {:.3} (n = {}, T = {}, eps = {})",
        rep.recurrent_fraction_forward, rep.recurrent_fraction_backward, samples, horizon, eps
    );
    let results = serde_json::to_value(&rep).map_err(|e| e.to_string())?;
    let report = Report::new(
        field.name(),
        field.domain().clone(),
        "recurrence",
        json!({"samples": samples, "horizon": horizon, "eps": eps, "seed": common.seed}),
        !common.no_timestamp,
    );
    finish(common, "recurrence", report, results, Vec::new(), &summary)
}

/// Shared with verify: distance to the analytic zero circles of abc:1,0,-1.
pub fn degenerate_circle_distance(p: Vec3) -> f64 {
    use beltrami_core::domain::axis_distance;
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let d1 = (axis_distance(p.y, 0.0, two_pi).powi(2)
        + axis_distance(p.z, PI / 2.0, two_pi).powi(2))
    .sqrt();
    let d2 = (axis_distance(p.y, PI, two_pi).powi(2)
        + axis_distance(p.z, 3.0 * PI / 2.0, two_pi).powi(2))
    .sqrt();
    d1.min(d2)
}

/// Shared with verify: sample points kept clear of the ball boundary so FD
/// stencils and flow-map differencing stay inside.
pub fn interior_samples(field: &BeltramiField, n: usize, seed: u64) -> Vec<Vec3> {
    field
        .domain()
        .sample_uniform(n, seed)
        .into_iter()
        .map(|p| match field.domain() {
            beltrami_core::Domain::Ball3 { .. } => p * 0.9,
            _ => p,
        })
        .collect()
}
