//! Subcommand execution.
//!
//! Each runner resolves its parameters through [`config::Resolver`], does
//! the numerics inside the caller's rayon pool, and produces a CSV table
//! plus a JSON summary.  Threshold verdicts are not errors: the run still
//! writes its outputs and the process exit code (2) carries the verdict.
//! Genuine failures — unusable parameters, I/O — exit 1 with a message on
//! stderr that names the offending field where there is one.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use bergman_core::ellipsoid::{ComplexPoint, EllipsoidSpec, MultiIndex};
use bergman_core::kernel::{closed_form_kernel, KernelEvaluator, KernelSeries};
use bergman_core::luqikeng::{
    grid_certificate, SearchConfig, SearchReport, SearchSeries, SearchStatus, SignedSeries,
};
use bergman_core::projection::{
    continuation_radius_proxy, grid_refinement_delta, QuadratureGrid, TestFunction,
};
use bergman_core::transforms::{check_bell_covering_law, check_biholomorphic_law, HoloMap};
use clap::error::ErrorKind;
use clap::Parser;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::cli::{
    CheckCoveringArgs, CheckTransformArgs, Cli, Command, KernelEvalArgs, MomentsArgs, ProjectArgs,
    RamadanovArgs, ZeroSearchArgs,
};
use crate::config::{
    fmt_complex_list, fmt_f64, parse_u32_list, parse_usize_list, FileConfig, Resolver,
};
use crate::csvout::{float_cell, CsvTable};
use crate::parallel;
use crate::summary::{SpecEcho, Summary, SCHEMA};

/// Operational failure: message on stderr, exit code 1.
#[derive(Debug)]
pub struct RunError(pub String);

impl From<bergman_core::Error> for RunError {
    fn from(e: bergman_core::Error) -> Self {
        RunError(e.to_string())
    }
}

/// Everything a finished run hands back to the driver.
struct CommandOutput {
    pass: bool,
    csv: String,
    summary: String,
}

/// Entry point of the binary: parse, execute, map to the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {}", e.0);
            1
        }
    }
}

fn execute(cli: Cli) -> Result<bool, RunError> {
    let started = Instant::now();
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    let name = cli.command.name();
    if let Some(recorded) = file.subcommand() {
        if recorded != name {
            return Err(RunError(format!(
                "config file was produced by subcommand `{recorded}`, not `{name}`"
            )));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build()
        .map_err(|e| RunError(format!("cannot build thread pool: {e}")))?;
    let output = pool.install(|| dispatch(&cli.command, &file))?;

    let dir = cli
        .global
        .outdir
        .clone()
        .or_else(|| std::env::var_os("BERGMAN_LAB_OUTDIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| RunError(format!("cannot create {}: {e}", dir.display())))?;
    let base = cli.global.out.clone().unwrap_or_else(|| name.to_string());
    let csv_path = dir.join(format!("{base}.csv"));
    let summary_path = dir.join(format!("{base}.summary.json"));
    std::fs::write(&csv_path, &output.csv)
        .map_err(|e| RunError(format!("cannot write {}: {e}", csv_path.display())))?;
    std::fs::write(&summary_path, &output.summary)
        .map_err(|e| RunError(format!("cannot write {}: {e}", summary_path.display())))?;

    print!("{}", output.summary);
    eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    Ok(output.pass)
}

fn dispatch(command: &Command, file: &FileConfig) -> Result<CommandOutput, RunError> {
    match command {
        Command::Moments(args) => run_moments(args, file),
        Command::KernelEval(args) => run_kernel_eval(args, file),
        Command::CheckTransform(args) => run_check_transform(args, file),
        Command::CheckCovering(args) => run_check_covering(args, file),
        Command::Project(args) => run_project(args, file),
        Command::ZeroSearch(args) => run_zero_search(args, file),
        Command::Ramadanov(args) => run_ramadanov(args, file),
    }
}

fn render<R: Serialize>(
    subcommand: &'static str,
    pass: bool,
    spec: &EllipsoidSpec,
    config: BTreeMap<String, String>,
    result: R,
    csv: CsvTable,
) -> CommandOutput {
    let summary = Summary {
        schema: SCHEMA,
        subcommand,
        pass,
        spec: SpecEcho::new(spec),
        config,
        result,
    };
    CommandOutput {
        pass,
        csv: csv.into_string(),
        summary: summary.render(),
    }
}

// ---------------------------------------------------------------------------
// moments

#[derive(Serialize)]
struct MomentsResult {
    count: usize,
    cap: u32,
    volume: f64,
}

fn run_moments(args: &MomentsArgs, file: &FileConfig) -> Result<CommandOutput, RunError> {
    let mut r = Resolver::new(file);
    let exponents = r.f64_list_required("m", args.m.as_ref())?;
    let cap = r.u32("cap", args.cap.as_ref(), 8)?;
    let config = r.finish()?;

    let spec = EllipsoidSpec::new(exponents)?;
    let indices = spec.indices_up_to(cap);

    let mut header: Vec<String> = (1..=spec.dim()).map(|k| format!("alpha_{k}")).collect();
    header.extend(["degree", "log_moment", "moment"].map(String::from));
    let mut csv = CsvTable::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for alpha in &indices {
        let mut cells: Vec<String> =
            alpha.entries().iter().map(|a| a.to_string()).collect();
        cells.push(alpha.degree().to_string());
        cells.push(float_cell(spec.log_moment(alpha)?));
        cells.push(float_cell(spec.moment(alpha)?));
        csv.row(&cells);
    }

    let result = MomentsResult {
        count: indices.len(),
        cap,
        volume: spec.volume(),
    };
    Ok(render("moments", true, &spec, config, result, csv))
}

// ---------------------------------------------------------------------------
// kernel-eval

#[derive(Serialize)]
struct KernelEvalResult {
    value: [f64; 2],
    abs: f64,
    tail_bound: f64,
    reliable: bool,
    num_terms: usize,
    closed_form: Option<[f64; 2]>,
    closed_form_rel_gap: Option<f64>,
}

fn run_kernel_eval(args: &KernelEvalArgs, file: &FileConfig) -> Result<CommandOutput, RunError> {
    let mut r = Resolver::new(file);
    let exponents = r.f64_list_required("m", args.m.as_ref())?;
    let cap = r.u32("cap", args.cap.as_ref(), 60)?;
    let spec = EllipsoidSpec::new(exponents)?;
    let z = r
        .opt_complex_list("z", args.z.as_ref())?
        .ok_or_else(|| RunError(String::from("missing required parameter `z`")))?;
    check_coords("z", &z, spec.dim())?;
    let w = match r.opt_complex_list("w", args.w.as_ref())? {
        Some(w) => {
            check_coords("w", &w, spec.dim())?;
            w
        }
        None => z.clone(),
    };
    r.set_echo("z", fmt_complex_list(&z));
    r.set_echo("w", fmt_complex_list(&w));
    let config = r.finish()?;

    let series = KernelSeries::build(&spec, cap)?;
    let eval = series.eval_kernel(&z, &w)?;
    let closed = match closed_form_kernel(&spec) {
        Some(ball) => Some(ball.eval_pair(&z, &w)?.value),
        None => None,
    };
    let rel_gap = closed.map(|c| (eval.value - c).norm() / c.norm().max(f64::MIN_POSITIVE));

    let mut csv = CsvTable::new(&[
        "value_re",
        "value_im",
        "value_abs",
        "tail_bound",
        "reliable",
        "num_terms",
        "closed_form_re",
        "closed_form_im",
        "closed_form_rel_gap",
    ]);
    csv.row(&[
        float_cell(eval.value.re),
        float_cell(eval.value.im),
        float_cell(eval.value.norm()),
        float_cell(eval.tail_bound),
        eval.reliable.to_string(),
        series.num_terms().to_string(),
        closed.map_or(String::new(), |c| float_cell(c.re)),
        closed.map_or(String::new(), |c| float_cell(c.im)),
        rel_gap.map_or(String::new(), float_cell),
    ]);

    let result = KernelEvalResult {
        value: [eval.value.re, eval.value.im],
        abs: eval.value.norm(),
        tail_bound: eval.tail_bound,
        reliable: eval.reliable,
        num_terms: series.num_terms(),
        closed_form: closed.map(|c| [c.re, c.im]),
        closed_form_rel_gap: rel_gap,
    };
    Ok(render("kernel-eval", true, &spec, config, result, csv))
}

// ---------------------------------------------------------------------------
// check-transform

#[derive(Serialize)]
struct TransformResult {
    map: String,
    pairs: u32,
    max_residual: f64,
    threshold: f64,
    used_closed_forms: bool,
}

fn run_check_transform(
    args: &CheckTransformArgs,
    file: &FileConfig,
) -> Result<CommandOutput, RunError> {
    let mut r = Resolver::new(file);
    let exponents = r.f64_list_required("m", args.m.as_ref())?;
    let cap = r.u32("cap", args.cap.as_ref(), 40)?;
    let map_kind = r.choice(
        "map",
        args.map.as_ref(),
        &["rotation", "permutation", "ball-automorphism", "identity"],
        "rotation",
    )?;
    let pairs = r.u32("pairs", args.pairs.as_ref(), 50)?;
    let seed = r.u64("seed", args.seed.as_ref(), 0)?;
    let max_defect = r.f64("max-defect", args.max_defect.as_ref(), 0.5)?;
    let use_closed = r.bool("use-closed-forms", args.use_closed_forms.as_ref(), false)?;
    let threshold = r.f64("threshold", args.threshold.as_ref(), 1e-10)?;
    let spec = EllipsoidSpec::new(exponents)?;
    if !(max_defect > 0.0 && max_defect < 1.0) {
        return Err(RunError(String::from(
            "invalid value for `max-defect`: must lie strictly between 0 and 1",
        )));
    }

    let map = match map_kind.as_str() {
        "rotation" => {
            let angles = r
                .string("angles", args.angles.as_ref(), "")
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| crate::config::parse_f64("angles", s))
                .collect::<Result<Vec<f64>, RunError>>()?;
            if angles.is_empty() {
                return Err(RunError(String::from(
                    "missing required parameter `angles` for the rotation map",
                )));
            }
            r.set_echo("angles", crate::config::fmt_f64_list(&angles));
            HoloMap::rotation(spec.clone(), angles)
                .map_err(|e| RunError(format!("invalid value for `angles`: {e}")))?
        }
        "permutation" => {
            let raw = r.string("perm", args.perm.as_ref(), "");
            if raw.is_empty() {
                return Err(RunError(String::from(
                    "missing required parameter `perm` for the permutation map",
                )));
            }
            let perm = parse_usize_list("perm", &raw)?;
            r.set_echo(
                "perm",
                perm.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            );
            HoloMap::permutation(spec.clone(), perm)
                .map_err(|e| RunError(format!("invalid value for `perm`: {e}")))?
        }
        "ball-automorphism" => {
            let raw = r.string("center", args.center.as_ref(), "");
            if raw.is_empty() {
                return Err(RunError(String::from(
                    "missing required parameter `center` for the ball-automorphism map",
                )));
            }
            let center = crate::config::parse_complex_list("center", &raw)?;
            check_coords("center", &center, spec.dim())?;
            r.set_echo("center", fmt_complex_list(&center));
            HoloMap::ball_automorphism(spec.clone(), ComplexPoint::new(center))
                .map_err(|e| RunError(format!("invalid value for `center`: {e}")))?
        }
        _ => HoloMap::identity(spec.clone()),
    };
    let config = r.finish()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled = Vec::with_capacity(pairs as usize);
    for _ in 0..pairs {
        let z = sample_point(&mut rng, map.source(), max_defect, 0.0)?;
        let w = sample_point(&mut rng, map.source(), max_defect, 0.0)?;
        sampled.push((z, w));
    }

    let source_kernel = kernel_evaluator(map.source(), cap, use_closed)?;
    let target_kernel = kernel_evaluator(map.target(), cap, use_closed)?;
    let check = check_biholomorphic_law(&map, &*source_kernel, &*target_kernel, &sampled)?;

    let mut csv = CsvTable::new(&["pair", "residual"]);
    for (index, residual) in check.residuals.iter().enumerate() {
        csv.row(&[index.to_string(), float_cell(*residual)]);
    }

    let pass = check.max_residual <= threshold;
    let result = TransformResult {
        map: map_kind,
        pairs,
        max_residual: check.max_residual,
        threshold,
        used_closed_forms: use_closed,
    };
    Ok(render("check-transform", pass, &spec, config, result, csv))
}

// ---------------------------------------------------------------------------
// check-covering

#[derive(Serialize)]
struct CoveringResult {
    j: u32,
    branches: usize,
    lhs: [f64; 2],
    rhs: [f64; 2],
    residual: f64,
    tail_bound: f64,
    threshold: f64,
}

fn run_check_covering(
    args: &CheckCoveringArgs,
    file: &FileConfig,
) -> Result<CommandOutput, RunError> {
    let mut r = Resolver::new(file);
    let exponents = r.f64_list_required("m", args.m.as_ref())?;
    let j = r.u32("j", args.j.as_ref(), 2)?;
    let cap_source = r.u32("cap-source", args.cap_source.as_ref(), 60)?;
    let cap_target = r.u32("cap-target", args.cap_target.as_ref(), 60)?;
    let seed = r.u64("seed", args.seed.as_ref(), 0)?;
    let use_closed = r.bool("use-closed-forms", args.use_closed_forms.as_ref(), false)?;
    let threshold = r.f64("threshold", args.threshold.as_ref(), 1e-6)?;
    let target = EllipsoidSpec::new(exponents)?;
    let source = target.power_cover_source(j)?;

    // Sampled fallbacks keep all coordinates well away from zero: the
    // branch enumeration needs nonzero target coordinates.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = match r.opt_complex_list("z", args.z.as_ref())? {
        Some(z) => {
            check_coords("z", &z, target.dim())?;
            ComplexPoint::new(z)
        }
        None => sample_point(&mut rng, &source, 0.6, 0.15)?,
    };
    let w = match r.opt_complex_list("w", args.w.as_ref())? {
        Some(w) => {
            check_coords("w", &w, target.dim())?;
            ComplexPoint::new(w)
        }
        None => sample_point(&mut rng, &target, 0.6, 0.15)?,
    };
    r.set_echo("z", fmt_complex_list(z.coords()));
    r.set_echo("w", fmt_complex_list(w.coords()));
    let config = r.finish()?;

    let check =
        check_bell_covering_law(&target, j, &z, &w, (cap_source, cap_target), use_closed)?;

    let mut csv = CsvTable::new(&[
        "lhs_re",
        "lhs_im",
        "rhs_re",
        "rhs_im",
        "residual",
        "tail_bound",
        "branches",
    ]);
    csv.row(&[
        float_cell(check.lhs.re),
        float_cell(check.lhs.im),
        float_cell(check.rhs.re),
        float_cell(check.rhs.im),
        float_cell(check.residual),
        float_cell(check.tail_bound),
        check.branches.to_string(),
    ]);

    let pass = check.residual <= threshold;
    let result = CoveringResult {
        j,
        branches: check.branches,
        lhs: [check.lhs.re, check.lhs.im],
        rhs: [check.rhs.re, check.rhs.im],
        residual: check.residual,
        tail_bound: check.tail_bound,
        threshold,
    };
    Ok(render("check-covering", pass, &target, config, result, csv))
}

// ---------------------------------------------------------------------------
// project

#[derive(Serialize)]
struct ContinuationResult {
    radius: f64,
    top_degree: u32,
    layers_used: usize,
    low_confidence: bool,
}

#[derive(Serialize)]
struct ProjectResult {
    coefficients: usize,
    max_abs_coefficient: f64,
    grid_total_weight: f64,
    continuation: ContinuationResult,
    refinement_delta: Option<f64>,
}

fn run_project(args: &ProjectArgs, file: &FileConfig) -> Result<CommandOutput, RunError> {
    let mut r = Resolver::new(file);
    let exponents = r.f64_list_required("m", args.m.as_ref())?;
    let radial = r.usize("radial", args.radial.as_ref(), 48)?;
    let angular = r.usize("angular", args.angular.as_ref(), 64)?;
    let cap = r.u32("cap", args.cap.as_ref(), 12)?;
    let refine = r.bool("refine", args.refine.as_ref(), false)?;
    let spec = EllipsoidSpec::new(exponents)?;
    let g_raw = r.string("g", args.g.as_ref(), "constant:1");
    let (g, g_canonical) = parse_test_function("g", &g_raw, &spec)?;
    r.set_echo("g", g_canonical);
    let config = r.finish()?;

    let grid = QuadratureGrid::build(&spec, radial, angular)?;
    let projected = parallel::project_parallel(&g, &grid, cap)?;
    let continuation = continuation_radius_proxy(&projected);
    let refinement_delta = if refine {
        Some(grid_refinement_delta(&g, &spec, radial, angular, cap)?)
    } else {
        None
    };

    let mut header: Vec<String> = (1..=spec.dim()).map(|k| format!("alpha_{k}")).collect();
    header.extend(["degree", "coeff_re", "coeff_im", "coeff_abs"].map(String::from));
    let mut csv = CsvTable::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (alpha, coeff) in projected.indices().iter().zip(projected.coefficients()) {
        let mut cells: Vec<String> =
            alpha.entries().iter().map(|a| a.to_string()).collect();
        cells.push(alpha.degree().to_string());
        cells.push(float_cell(coeff.re));
        cells.push(float_cell(coeff.im));
        cells.push(float_cell(coeff.norm()));
        csv.row(&cells);
    }

    let result = ProjectResult {
        coefficients: projected.coefficients().len(),
        max_abs_coefficient: projected.max_abs_coefficient(),
        grid_total_weight: grid.total_weight(),
        continuation: ContinuationResult {
            radius: continuation.radius,
            top_degree: continuation.top_degree,
            layers_used: continuation.layers_used,
            low_confidence: continuation.low_confidence,
        },
        refinement_delta,
    };
    Ok(render("project", true, &spec, config, result, csv))
}

// ---------------------------------------------------------------------------
// zero-search

fn run_zero_search(args: &ZeroSearchArgs, file: &FileConfig) -> Result<CommandOutput, RunError> {
    let mut r = Resolver::new(file);
    let exponents = r.f64_list_required("m", args.m.as_ref())?;
    let cfg = SearchConfig {
        cap: r.u32("cap", args.cap.as_ref(), 60)?,
        starts: r.u32("starts", args.starts.as_ref(), 64)?,
        seed: r.u64("seed", args.seed.as_ref(), 0)?,
        max_iters: r.u32("max-iters", args.max_iters.as_ref(), 400)?,
        f_tol: r.f64("f-tol", args.f_tol.as_ref(), 0.0)?,
        x_tol: r.f64("x-tol", args.x_tol.as_ref(), 1e-10)?,
        margin: r.f64("margin", args.margin.as_ref(), 0.05)?,
        zero_threshold_rel: r.f64("zero-threshold-rel", args.zero_threshold_rel.as_ref(), 1e-10)?,
    };
    let grid_resolution = r.opt_usize("grid-certificate", args.grid_certificate.as_ref())?;
    let validation = r.bool("validation", args.validation.as_ref(), false)?;
    let config = r.finish()?;
    cfg.validate()?;

    let spec = EllipsoidSpec::new(exponents)?;
    let report = if validation {
        if spec.exponents() != [1.0] {
            return Err(RunError(String::from(
                "invalid value for `validation`: the validation series runs on the disc, use `--m 1`",
            )));
        }
        let series = SignedSeries::validation_series(cfg.cap);
        searched(&series, &cfg, grid_resolution)?
    } else {
        let series = KernelSeries::build(&spec, cfg.cap)?;
        searched(&series, &cfg, grid_resolution)?
    };

    let mut header = vec![
        String::from("status"),
        String::from("min_abs"),
        String::from("margin"),
        String::from("error_bound"),
        String::from("zero_threshold"),
        String::from("evaluations"),
        String::from("starts_run"),
        String::from("best_start"),
    ];
    header.extend((1..=spec.dim()).map(|k| format!("rho_{k}")));
    header.extend((1..=spec.dim()).map(|k| format!("theta_{k}")));
    let mut csv = CsvTable::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut cells = vec![
        status_text(report.status).to_string(),
        float_cell(report.min_abs),
        float_cell(report.margin),
        float_cell(report.error_bound),
        float_cell(report.zero_threshold),
        report.evaluations.to_string(),
        report.starts_run.to_string(),
        report.best_start.to_string(),
    ];
    cells.extend(report.argmin_moduli.iter().map(|v| float_cell(*v)));
    cells.extend(report.argmin_phases.iter().map(|v| float_cell(*v)));
    csv.row(&cells);

    let pass = report.status == SearchStatus::PositiveOnSearch;
    Ok(render("zero-search", pass, &spec, config, report, csv))
}

fn searched<S: SearchSeries + Sync + ?Sized>(
    series: &S,
    cfg: &SearchConfig,
    grid_resolution: Option<usize>,
) -> Result<SearchReport, RunError> {
    let mut report = parallel::zero_search_parallel(series, cfg)?;
    if let Some(resolution) = grid_resolution {
        report.grid_certificate = Some(grid_certificate(series, cfg, resolution)?);
    }
    Ok(report)
}

fn status_text(status: SearchStatus) -> &'static str {
    match status {
        SearchStatus::ZeroFound => "ZeroFound",
        SearchStatus::PositiveOnSearch => "PositiveOnSearch",
    }
}

// ---------------------------------------------------------------------------
// ramadanov

#[derive(Serialize)]
struct RamadanovResult {
    report: bergman_core::luqikeng::RamadanovReport,
    final_rel_differences: Vec<f64>,
    final_tol_rel: f64,
}

fn run_ramadanov(args: &RamadanovArgs, file: &FileConfig) -> Result<CommandOutput, RunError> {
    let mut r = Resolver::new(file);
    let exponents = match args.m.as_ref() {
        Some(_) => r.f64_list_required("m", args.m.as_ref())?,
        None => {
            let raw = r.string("m", None, "1,1");
            let values = crate::config::parse_f64_list("m", &raw)?;
            r.set_echo("m", crate::config::fmt_f64_list(&values));
            values
        }
    };
    // The 2% relative convergence target is reached at j = 16 (the gap is
    // 5.4% at j = 8 and 1.5% at j = 16), hence the default level list.
    let j_list = r.u32_list("j", args.j.as_ref(), &[1, 2, 4, 8, 16])?;
    let cap = r.u32("cap", args.cap.as_ref(), 80)?;
    let final_tol_rel = r.f64("final-tol-rel", args.final_tol_rel.as_ref(), 0.02)?;
    let spec = EllipsoidSpec::new(exponents)?;
    let points_raw = r.string("points", args.points.as_ref(), "0.5+0i,0.5+0i");
    let flat = crate::config::parse_complex_list("points", &points_raw)?;
    if spec.dim() == 0 || flat.len() % spec.dim() != 0 || flat.is_empty() {
        return Err(RunError(format!(
            "invalid value for `points`: expected a multiple of {} coordinates",
            spec.dim()
        )));
    }
    let points: Vec<ComplexPoint> = flat
        .chunks(spec.dim())
        .map(|c| ComplexPoint::new(c.to_vec()))
        .collect();
    r.set_echo("points", fmt_complex_list(&flat));
    let config = r.finish()?;

    let report = bergman_core::luqikeng::ramadanov_experiment(&spec, &j_list, &points, cap)?;

    let mut csv = CsvTable::new(&[
        "j",
        "point",
        "value",
        "limit",
        "difference",
        "rel_difference",
    ]);
    for row in &report.rows {
        let limit = report.limits[row.point_index];
        csv.row(&[
            row.j.to_string(),
            row.point_index.to_string(),
            float_cell(row.value),
            float_cell(limit),
            float_cell(row.difference),
            float_cell(row.difference / limit.abs()),
        ]);
    }

    let last_j = *j_list.last().expect("validated nonempty");
    let final_rel: Vec<f64> = report
        .rows
        .iter()
        .filter(|row| row.j == last_j)
        .map(|row| row.difference / report.limits[row.point_index].abs())
        .collect();
    let pass =
        report.eventually_decreasing && final_rel.iter().all(|rel| *rel <= final_tol_rel);
    let result = RamadanovResult {
        report,
        final_rel_differences: final_rel,
        final_tol_rel,
    };
    Ok(render("ramadanov", pass, &spec, config, result, csv))
}

// ---------------------------------------------------------------------------
// shared helpers

fn check_coords(key: &str, coords: &[Complex64], dim: usize) -> Result<(), RunError> {
    if coords.len() != dim {
        return Err(RunError(format!(
            "invalid value for `{key}`: expected {dim} coordinates, got {}",
            coords.len()
        )));
    }
    Ok(())
}

/// Uniform draw in `[0, 1)` from the top 53 bits of the generator.
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Rejection-samples an interior point with boundary defect at most
/// `max_defect` and every coordinate modulus at least `min_modulus`.
fn sample_point(
    rng: &mut ChaCha8Rng,
    spec: &EllipsoidSpec,
    max_defect: f64,
    min_modulus: f64,
) -> Result<ComplexPoint, RunError> {
    let dim = spec.dim();
    for _ in 0..100_000 {
        let moduli: Vec<f64> = (0..dim)
            .map(|_| min_modulus + (1.0 - min_modulus) * unit_f64(rng))
            .collect();
        if spec.defect_of_moduli(&moduli)? > max_defect {
            continue;
        }
        let phases: Vec<f64> = (0..dim)
            .map(|_| unit_f64(rng) * core::f64::consts::TAU)
            .collect();
        return Ok(ComplexPoint::from_polar(&moduli, &phases));
    }
    Err(RunError(format!(
        "could not sample a point with defect <= {max_defect}; loosen `max-defect`"
    )))
}

fn kernel_evaluator(
    spec: &EllipsoidSpec,
    cap: u32,
    use_closed: bool,
) -> Result<Box<dyn KernelEvaluator>, RunError> {
    if use_closed {
        if let Some(ball) = closed_form_kernel(spec) {
            return Ok(Box::new(ball));
        }
    }
    Ok(Box::new(KernelSeries::build(spec, cap)?))
}

/// Parses `kind:args` integrand descriptions and returns the canonical
/// rendering alongside the function.
fn parse_test_function(
    key: &str,
    text: &str,
    spec: &EllipsoidSpec,
) -> Result<(TestFunction, String), RunError> {
    let (kind, rest) = text.split_once(':').ok_or_else(|| {
        RunError(format!(
            "invalid value for `{key}`: expected `kind:args`, e.g. `constant:1` or `bump:0.4`"
        ))
    })?;
    match kind.trim() {
        "constant" => {
            let c = crate::config::parse_f64(key, rest)?;
            Ok((TestFunction::Constant(c), format!("constant:{}", fmt_f64(c))))
        }
        "monomial" | "conj-monomial" => {
            let entries = parse_u32_list(key, rest)?;
            if entries.len() != spec.dim() {
                return Err(RunError(format!(
                    "invalid value for `{key}`: expected {} exponents, got {}",
                    spec.dim(),
                    entries.len()
                )));
            }
            let canonical = format!(
                "{}:{}",
                kind.trim(),
                entries.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
            );
            let alpha = MultiIndex::new(entries);
            let f = if kind.trim() == "monomial" {
                TestFunction::Monomial(alpha)
            } else {
                TestFunction::ConjugateMonomial(alpha)
            };
            Ok((f, canonical))
        }
        "bump" => {
            let support = crate::config::parse_f64(key, rest)?;
            let f = TestFunction::radial_bump(spec, support)
                .map_err(|e| RunError(format!("invalid value for `{key}`: {e}")))?;
            Ok((f, format!("bump:{}", fmt_f64(support))))
        }
        other => Err(RunError(format!(
            "invalid value for `{key}`: unknown integrand kind `{other}`"
        ))),
    }
}
