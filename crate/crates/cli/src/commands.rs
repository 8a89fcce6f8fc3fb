//! The three subcommands: `validate`, `price`, `study`.
//!
//! Exit codes are a stable contract: 0 success, 1 validation failure
//! (including config errors), 2 infeasible run, 3 internal error.

use crate::config::{ConfigError, RunConfig};
use crate::output::{fmt_f64, note, CsvWriter, Manifest, OutDir};
use dynkin::diagnostics::{
    cf_distance, coarse_error, exp_moment, rate_regression, strong_error, value_convergence,
    TheoreticalBounds,
};
use dynkin::dynkin::{
    backward_value, brute_force_value, build_tree, extract_strategies, Recombine, SandwichAudit,
    ScenarioTree,
};
use dynkin::model::{
    effective_lip, validate_innovations, validate_model, validate_payoffs, DiffusionModel,
    InnovationLaw, PayoffPair,
};
use dynkin::scheme::simulate_path;
use dynkin::CoreError;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

pub enum CmdError {
    Validation(String),
    Infeasible(String),
    Internal(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Validation(_) => EXIT_VALIDATION,
            CmdError::Infeasible(_) => EXIT_INFEASIBLE,
            CmdError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Validation(m) | CmdError::Infeasible(m) | CmdError::Internal(m) => m,
        }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Internal(format!("i/o error: {e}"))
    }
}

fn core_err(e: CoreError) -> CmdError {
    match &e {
        CoreError::TreeTooLarge { .. }
        | CoreError::EnumerationBudget { .. }
        | CoreError::RefineNotMultiple { .. }
        | CoreError::RecombineUnsupported { .. }
        | CoreError::UnsupportedTree { .. }
        | CoreError::UnsupportedLaw { .. } => CmdError::Infeasible(e.to_string()),
        CoreError::Shape { .. } | CoreError::InvalidParameter { .. } => {
            CmdError::Validation(e.to_string())
        }
        _ => CmdError::Internal(e.to_string()),
    }
}

pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub jobs: Option<usize>,
}

impl Context {
    /// Loads the config and applies flag overrides.
    pub fn load(
        path: &Path,
        seed: Option<u64>,
        jobs: Option<usize>,
        oracle: bool,
    ) -> Result<Context, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Validation(format!("cannot read config {path:?}: {e}")))?;
        let mut config = RunConfig::parse(&text)?;
        if let Some(s) = seed {
            config.run.seed = s;
        }
        if oracle {
            config.run.oracle = true;
        }
        Ok(Context {
            seed: config.run.seed,
            config,
            jobs,
        })
    }
}

#[derive(Serialize)]
struct ValidationDocument {
    format_version: u32,
    passed: bool,
    model: dynkin::model::ValidationReport,
    law: dynkin::model::ValidationReport,
    payoff: dynkin::model::ValidationReport,
}

/// `validate`: checks the model bounds, the law moments and the payoff
/// invariants; writes reports regardless of the outcome.
pub fn cmd_validate(ctx: &Context, out: &OutDir) -> Result<i32, CmdError> {
    let start = Instant::now();
    let config = &ctx.config;
    let model = config.resolve_model()?;
    let law = config.resolve_law()?;
    let pair = config.resolve_payoff()?;

    let model_report = validate_model(
        &model,
        config.run.probe_count,
        config.run.probe_radius,
        ctx.seed,
    )
    .map_err(core_err)?;
    let law_report = validate_innovations(&law);
    let n = config.n().unwrap_or(16);
    let paths: Vec<_> = (0..config.run.payoff_paths.max(1) as u64)
        .map(|s| simulate_path(&model, &law, n.max(2), ctx.seed, s))
        .collect::<Result<_, _>>()
        .map_err(core_err)?;
    let payoff_report = validate_payoffs(&pair, &paths).map_err(core_err)?;

    let passed = model_report.passed && law_report.passed && payoff_report.passed;
    let doc = ValidationDocument {
        format_version: 1,
        passed,
        model: model_report,
        law: law_report,
        payoff: payoff_report,
    };
    out.write_json("validation.json", &doc)?;
    write_manifest(ctx, out, "validate", start)?;
    println!("validate: {}", if passed { "PASS" } else { "FAIL" });
    if !passed {
        for (name, report) in [("model", &doc.model), ("law", &doc.law), ("payoff", &doc.payoff)] {
            for check in &report.checks {
                if !check.passed {
                    println!(
                        "  {name}/{}: margin {} at {}",
                        check.name,
                        fmt_f64(check.margin),
                        check.witness.as_deref().unwrap_or("-")
                    );
                }
            }
        }
    }
    Ok(if passed { EXIT_OK } else { EXIT_VALIDATION })
}

#[derive(Serialize)]
struct LevelSummary {
    level: usize,
    time: f64,
    min: f64,
    mean: f64,
    max: f64,
    canceller_stop_fraction: f64,
    exerciser_stop_fraction: f64,
}

#[derive(Serialize)]
struct PriceDocument {
    format_version: u32,
    n: usize,
    law: String,
    payoff: String,
    recombined: bool,
    node_count: usize,
    value: f64,
    sandwich: SandwichAudit,
    levels: Vec<LevelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node_values: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    canceller_stop: Option<Vec<Vec<bool>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exerciser_stop: Option<Vec<Vec<bool>>>,
}

#[derive(Serialize)]
struct OracleDocument {
    format_version: u32,
    backward_value: f64,
    inf_sup: f64,
    sup_inf: f64,
    max_deviation: f64,
    n_stopping_times: usize,
    agrees_to_1e12: bool,
}

fn build_priced_tree(
    config: &RunConfig,
    model: &DiffusionModel,
    law: &InnovationLaw,
    pair: &PayoffPair,
    n: usize,
) -> Result<ScenarioTree, CmdError> {
    let mode = if config.run.recombine {
        Recombine::for_pair(pair).map_err(core_err)?
    } else {
        Recombine::Off
    };
    build_tree(model, law, n, config.run.node_cap, mode).map_err(core_err)
}

/// `price`: backward recursion over the scenario tree, with strategies,
/// an independent sandwich audit, and an optional brute-force oracle.
pub fn cmd_price(ctx: &Context, out: &OutDir) -> Result<i32, CmdError> {
    let start = Instant::now();
    let config = &ctx.config;
    let model = config.resolve_model()?;
    let law = config.resolve_law()?;
    let pair = config.resolve_payoff()?;
    let n = config.n()?;

    let tree = build_priced_tree(config, &model, &law, &pair, n)?;
    let report = backward_value(&tree, &pair).map_err(core_err)?;
    let strategies = extract_strategies(&tree, &report);
    let audit = SandwichAudit::run(&report);
    let fractions = strategies.stop_fractions();

    let levels: Vec<LevelSummary> = report
        .level_summaries()
        .iter()
        .enumerate()
        .map(|(level, &(min, mean, max))| LevelSummary {
            level,
            time: tree.level_time(level),
            min,
            mean,
            max,
            canceller_stop_fraction: fractions[level].0,
            exerciser_stop_fraction: fractions[level].1,
        })
        .collect();

    let doc = PriceDocument {
        format_version: 1,
        n,
        law: report.law_id.clone(),
        payoff: report.payoff_id.clone(),
        recombined: tree.is_recombined(),
        node_count: tree.node_count(),
        value: report.value,
        sandwich: audit.clone(),
        levels,
        node_values: config.run.dump_nodes.then(|| report.node_values.clone()),
        canceller_stop: config.run.dump_nodes.then(|| strategies.canceller_stop.clone()),
        exerciser_stop: config.run.dump_nodes.then(|| strategies.exerciser_stop.clone()),
    };
    out.write_json("value.json", &doc)?;

    if config.run.oracle {
        let oracle_tree = if tree.is_recombined() {
            build_tree(&model, &law, n, config.run.node_cap, Recombine::Off).map_err(core_err)?
        } else {
            tree
        };
        let bf =
            brute_force_value(&oracle_tree, &pair, config.run.oracle_budget).map_err(core_err)?;
        let max_dev = (bf.inf_sup - report.value)
            .abs()
            .max((bf.sup_inf - report.value).abs());
        let oracle_doc = OracleDocument {
            format_version: 1,
            backward_value: report.value,
            inf_sup: bf.inf_sup,
            sup_inf: bf.sup_inf,
            max_deviation: max_dev,
            n_stopping_times: bf.n_stopping_times,
            agrees_to_1e12: max_dev <= 1e-12,
        };
        out.write_json("oracle.json", &oracle_doc)?;
        println!(
            "oracle: backward {} vs inf-sup {} / sup-inf {} ({})",
            fmt_f64(report.value),
            fmt_f64(bf.inf_sup),
            fmt_f64(bf.sup_inf),
            if oracle_doc.agrees_to_1e12 { "agree" } else { "DISAGREE" }
        );
        if !oracle_doc.agrees_to_1e12 {
            write_manifest(ctx, out, "price", start)?;
            return Err(CmdError::Internal(format!(
                "oracle disagreement: {max_dev}"
            )));
        }
    }

    write_manifest(ctx, out, "price", start)?;
    println!("value: {}", fmt_f64(report.value));
    if !audit.ok {
        return Err(CmdError::Internal("sandwich audit failed".into()));
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RateSummary {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    points_used: usize,
    points_excluded: usize,
}

/// `study`: one CSV per requested diagnostic across the grid ladder, plus
/// rate summaries where a regression applies.  Per-grid failures become
/// rows with an error status; the run continues.
pub fn cmd_study(ctx: &Context, out: &OutDir) -> Result<i32, CmdError> {
    let start = Instant::now();
    let config = &ctx.config;
    let model = config.resolve_model()?;
    let law = config.resolve_law()?;
    let pair = config.resolve_payoff()?;
    let n_list = config.n_list()?;
    let reps = config.run.reps;
    let seed = ctx.seed;

    for study in &config.run.studies {
        match study.as_str() {
            "strong-error" => {
                let gaussian = InnovationLaw::gaussian(model.dim()).map_err(core_err)?;
                let mut csv = CsvWriter::new(
                    "dynkin-strong-error",
                    &["n", "m_fine", "reps", "estimate", "std_error", "status"],
                );
                let mut points = Vec::new();
                for &n in &n_list {
                    let m_fine = n * config.run.refine;
                    match strong_error(&model, &gaussian, n, m_fine, reps, seed) {
                        Ok(e) => {
                            points.push((n as f64, e.estimate, e.std_error));
                            csv.row(&[
                                n.to_string(),
                                m_fine.to_string(),
                                reps.to_string(),
                                fmt_f64(e.estimate),
                                fmt_f64(e.std_error),
                                "ok".into(),
                            ]);
                        }
                        Err(e) => csv.row(&[
                            n.to_string(),
                            m_fine.to_string(),
                            reps.to_string(),
                            String::new(),
                            String::new(),
                            format!("error: {e}"),
                        ]),
                    }
                }
                out.write_text("strong_error.csv", &csv.finish())?;
                write_rate_summary(out, "strong_error_rate.json", &points)?;
            }
            "coarse-error" => {
                let mut csv = CsvWriter::new(
                    "dynkin-coarse-error",
                    &["n", "reps", "estimate", "std_error", "bound", "compliant", "status"],
                );
                for &n in &n_list {
                    match coarse_error(&model, &law, n, reps, seed) {
                        Ok(e) => csv.row(&[
                            n.to_string(),
                            reps.to_string(),
                            fmt_f64(e.estimate),
                            fmt_f64(e.std_error),
                            fmt_f64(e.bound),
                            e.compliant.to_string(),
                            "ok".into(),
                        ]),
                        Err(e) => csv.row(&[
                            n.to_string(),
                            reps.to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            format!("error: {e}"),
                        ]),
                    }
                }
                out.write_text("coarse_error.csv", &csv.finish())?;
            }
            "cf" => {
                let sigma0 = model.sigma_at(model.x0());
                let lip = effective_lip(&model, &law);
                let mut csv = CsvWriter::new(
                    "dynkin-cf",
                    &["n", "points", "max_deviation", "bound", "radius", "compliant", "status"],
                );
                for &n in &n_list {
                    match cf_distance(
                        &sigma0,
                        model.dim(),
                        lip,
                        &law,
                        n,
                        config.run.w_samples,
                        seed,
                    ) {
                        Ok(r) => csv.row(&[
                            n.to_string(),
                            r.n_points.to_string(),
                            fmt_f64(r.max_deviation),
                            fmt_f64(r.bound),
                            fmt_f64(r.radius),
                            r.compliant.to_string(),
                            "ok".into(),
                        ]),
                        Err(e) => csv.row(&[
                            n.to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            format!("error: {e}"),
                        ]),
                    }
                }
                out.write_text("cf.csv", &csv.finish())?;
            }
            "exp-moment" => {
                let mut csv = CsvWriter::new(
                    "dynkin-exp-moment",
                    &[
                        "n", "m_param", "delta", "reps", "estimate", "std_error", "ln_bound",
                        "compliant", "status",
                    ],
                );
                for &n in &n_list {
                    match exp_moment(
                        &model,
                        &law,
                        n,
                        config.run.m_param,
                        config.run.delta,
                        reps,
                        seed,
                    ) {
                        Ok(r) => csv.row(&[
                            n.to_string(),
                            fmt_f64(config.run.m_param),
                            fmt_f64(config.run.delta),
                            reps.to_string(),
                            fmt_f64(r.estimate),
                            fmt_f64(r.std_error),
                            fmt_f64(r.ln_bound),
                            r.compliant.to_string(),
                            "ok".into(),
                        ]),
                        Err(e) => csv.row(&[
                            n.to_string(),
                            fmt_f64(config.run.m_param),
                            fmt_f64(config.run.delta),
                            reps.to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            format!("error: {e}"),
                        ]),
                    }
                }
                out.write_text("exp_moment.csv", &csv.finish())?;
            }
            "value-convergence" => {
                let table = value_convergence(
                    &model,
                    &law,
                    &pair,
                    &n_list,
                    config.run.node_cap,
                    config.run.recombine,
                );
                let mut csv = CsvWriter::new(
                    "dynkin-value-convergence",
                    &["n", "value", "diff_from_previous", "status"],
                );
                let mut prev: Option<f64> = None;
                for entry in &table.entries {
                    match entry.value {
                        Some(v) => {
                            let diff = prev.map(|p| fmt_f64((v - p).abs())).unwrap_or_default();
                            prev = Some(v);
                            csv.row(&[entry.n.to_string(), fmt_f64(v), diff, "ok".into()]);
                        }
                        None => csv.row(&[
                            entry.n.to_string(),
                            String::new(),
                            String::new(),
                            format!("error: {}", entry.error.as_deref().unwrap_or("unknown")),
                        ]),
                    }
                }
                out.write_text("value_convergence.csv", &csv.finish())?;
            }
            other => {
                return Err(CmdError::Validation(format!(
                    "unknown study {other:?} (use strong-error|coarse-error|cf|exp-moment|value-convergence)"
                )))
            }
        }
        note(&format!("study {study}: done"));
    }

    // Reference constants for the configured model, reported once per run.
    let bounds = TheoreticalBounds::new(effective_lip(&model, &law), model.dim());
    #[derive(Serialize)]
    struct BoundsDocument {
        l: f64,
        dim: usize,
        cf_constant: f64,
        coarse_constant: f64,
        c2: f64,
        c3: f64,
        c4: f64,
        ln_c0: f64,
        strong_exponent: f64,
        prokhorov_exponent: f64,
        n0_digits: usize,
    }
    out.write_json(
        "bounds.json",
        &BoundsDocument {
            l: bounds.l(),
            dim: bounds.dim(),
            cf_constant: bounds.cf_constant(),
            coarse_constant: bounds.coarse_constant(),
            c2: bounds.c2(),
            c3: bounds.c3(),
            c4: bounds.c4(),
            ln_c0: bounds.ln_c0(),
            strong_exponent: bounds.strong_exponent(),
            prokhorov_exponent: bounds.prokhorov_exponent(),
            n0_digits: bounds.n0_digits(),
        },
    )?;

    write_manifest(ctx, out, "study", start)?;
    println!("study: wrote {} file(s)", config.run.studies.len() + 2);
    Ok(EXIT_OK)
}

fn write_rate_summary(
    out: &OutDir,
    name: &str,
    points: &[(f64, f64, f64)],
) -> Result<(), CmdError> {
    if points.len() < 3 {
        return Ok(());
    }
    match rate_regression(points) {
        Ok(study) => out.write_json(
            name,
            &RateSummary {
                slope: study.slope,
                intercept: study.intercept,
                r_squared: study.r_squared,
                points_used: study.points.len(),
                points_excluded: study.excluded.len(),
            },
        )?,
        Err(e) => note(&format!("rate summary skipped: {e}")),
    }
    Ok(())
}

fn write_manifest(ctx: &Context, out: &OutDir, command: &str, start: Instant) -> Result<(), CmdError> {
    let mut manifest = Manifest::new(command, ctx.seed, ctx.jobs, &ctx.config);
    manifest.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    out.write_json("manifest.json", &manifest)?;
    // Stable echo of the resolved configuration (unlike the manifest, this
    // file is part of the byte-deterministic output set).
    out.write_text("config_resolved.toml", &ctx.config.to_toml())?;
    Ok(())
}
