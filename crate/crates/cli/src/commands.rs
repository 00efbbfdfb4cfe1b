use std::fs;
use std::process::ExitCode;

use serde::Serialize;

use entcost::eof::{eof_optimize_seeded, eof_two_qubit_closed_form, OptimizerSettings};
use entcost::formation::{
    formation_protocol, FormationResult, FormationSettings, Normalization, Window,
};
use entcost::metrics::{
    divergence_sequence, first_k_exceeding, metric_relation_check, tensor_power_divergence,
    DivergenceReport,
};
use entcost::qcore::eigen_ensemble;
use entcost::qcore::io::EnsembleFile;
use entcost::regcost::{cost_bracket, fekete_check, regularized_sequence};
use entcost::verify::{run_verify, VerifyConfig};
use entcost::{CostBracket64, Ensemble64, EofResult64, RandomSource, RegularizationTrace64};

use crate::input::{load_state, Loaded};
use crate::report::{emit, to_json, write_file, Cell, CliError, Csv, Envelope, Format, SeedSource};
use crate::{
    Cli, Command, DivergenceArgs, EofArgs, FormationArgs, MetricsArgs, NormalizeArg, OptimizerArgs,
};
use crate::{RegularizeArgs, VerifyArgs, WindowArg, SEED_ENV};

struct Context<'a> {
    cli: &'a Cli,
    seed: u64,
    seed_source: SeedSource,
}

impl Context<'_> {
    fn format(&self, default: Format) -> Format {
        self.cli.format.unwrap_or(default)
    }

    fn envelope<C: Serialize, R: Serialize>(
        &self,
        config: &C,
        result: &R,
    ) -> Result<String, CliError> {
        to_json(&Envelope {
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            seed_source: self.seed_source,
            config,
            result,
        })
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        emit(text, self.cli.output.as_ref())
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<(u64, SeedSource), CliError> {
    if let Some(seed) = flag {
        return Ok((seed, SeedSource::Flag));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(|s| (s, SeedSource::Env)).map_err(|_| {
                CliError::Input(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })
        }
        Err(_) => Ok((0, SeedSource::Default)),
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let (seed, seed_source) = resolve_seed(cli.seed)?;
    let ctx = Context {
        cli,
        seed,
        seed_source,
    };
    match &cli.command {
        Command::Eof(a) => eof(&ctx, a),
        Command::Metrics(a) => metrics(&ctx, a),
        Command::Regularize(a) => regularize(&ctx, a),
        Command::Formation(a) => formation(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::DemoDivergence(a) => divergence(&ctx, a),
    }
}

fn settings(a: &OptimizerArgs) -> Result<OptimizerSettings, CliError> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(CliError::Input("--tol must be positive".into()));
    }
    Ok(OptimizerSettings {
        ensemble_size: a.ensemble_size,
        restarts: a.restarts,
        tol: a.tol,
        max_cycles: a.max_cycles,
        ..OptimizerSettings::default()
    })
}

/// Optimizes the ensemble of `input`; a given ensemble seeds the search.
fn optimize(
    input: &Loaded,
    settings: &OptimizerSettings,
    rng: &mut RandomSource,
) -> Result<EofResult64, CliError> {
    let rho = input.density();
    let warm: Vec<Ensemble64> = match input {
        Loaded::Ensemble(e) => vec![e.clone()],
        _ => Vec::new(),
    };
    let mut settings = settings.clone();
    if settings.ensemble_size.is_none() {
        if let Some(e) = warm.first() {
            let (da, db) = rho.dims();
            let default = entcost::eof::default_ensemble_size(rho.rank(), da * db);
            settings.ensemble_size = Some(default.max(e.len()));
        }
    }
    Ok(eof_optimize_seeded(&rho, &settings, &warm, rng)?)
}

#[derive(Serialize)]
struct EofConfig<'a> {
    input: String,
    dims: (usize, usize),
    optimizer: &'a OptimizerSettings,
}

#[derive(Serialize)]
struct EofReport<'a> {
    #[serde(flatten)]
    result: &'a EofResult64,
    /// Two-qubit closed form, for comparison.
    closed_form: Option<f64>,
}

fn eof(ctx: &Context, a: &EofArgs) -> Result<ExitCode, CliError> {
    let input = load_state(&a.input)?;
    let rho = input.density();
    let mut settings = settings(&a.optimizer)?;
    let mut rng = RandomSource::new(ctx.seed);
    let result = optimize(&input, &settings, &mut rng)?;
    settings.ensemble_size = Some(result.ensemble_size);
    let closed_form = if rho.dims() == (2, 2) {
        Some(eof_two_qubit_closed_form(&rho)?)
    } else {
        None
    };
    if let Some(path) = &a.ensemble_out {
        write_file(
            path,
            &to_json(&EnsembleFile::from_ensemble(&result.ensemble))?,
        )?;
    }
    let config = EofConfig {
        input: a.input.display().to_string(),
        dims: rho.dims(),
        optimizer: &settings,
    };
    let text = match ctx.format(Format::Json) {
        Format::Json => ctx.envelope(
            &config,
            &EofReport {
                result: &result,
                closed_form,
            },
        )?,
        Format::Csv => {
            let mut csv = Csv::new(&["restart", "value", "best"]);
            for (i, v) in result.restart_values.iter().enumerate() {
                csv.row(vec![i.into(), (*v).into(), (*v == result.value).into()]);
            }
            csv.finish()
        }
    };
    ctx.emit(&text)?;
    Ok(ExitCode::SUCCESS)
}

fn metrics(ctx: &Context, a: &MetricsArgs) -> Result<ExitCode, CliError> {
    let rho = load_state(&a.rho)?.density();
    let sigma = load_state(&a.sigma)?.density();
    let report = metric_relation_check(&rho, &sigma)?;
    let config = serde_json::json!({
        "rho": a.rho.display().to_string(),
        "sigma": a.sigma.display().to_string(),
        "dims": rho.dims(),
    });
    let text = match ctx.format(Format::Json) {
        Format::Json => ctx.envelope(&config, &report)?,
        Format::Csv => {
            let mut csv = Csv::new(&[
                "fidelity",
                "bures",
                "trace",
                "chain_lower",
                "chain_upper",
                "chain_holds",
            ]);
            csv.row(vec![
                report.fidelity.into(),
                report.bures.into(),
                report.trace.into(),
                report.chain_lower.into(),
                report.chain_upper.into(),
                report.chain_holds.into(),
            ]);
            csv.finish()
        }
    };
    ctx.emit(&text)?;
    Ok(if report.chain_holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct RegularizeReport {
    trace: RegularizationTrace64,
    fekete: entcost::regcost::FeketeReport<f64>,
    bracket: CostBracket64,
}

fn regularize(ctx: &Context, a: &RegularizeArgs) -> Result<ExitCode, CliError> {
    let rho = load_state(&a.input)?.density();
    let settings = settings(&a.optimizer)?;
    let mut rng = RandomSource::new(ctx.seed);
    let trace = regularized_sequence(&rho, a.n_max, &settings, &mut rng)?;
    let fekete = fekete_check(&trace, None)?;
    let bracket = cost_bracket(&trace)?;
    let holds = fekete.holds;
    let config = serde_json::json!({
        "input": a.input.display().to_string(),
        "dims": rho.dims(),
        "n_max": a.n_max,
        "optimizer": settings,
        "joint_optimizer": entcost::regcost::joint_settings(&settings),
    });
    let report = RegularizeReport {
        trace,
        fekete,
        bracket,
    };
    let text = match ctx.format(Format::Json) {
        Format::Json => ctx.envelope(&config, &report)?,
        Format::Csv => {
            let mut csv = Csv::new(&[
                "n",
                "A_n",
                "total",
                "warm_started",
                "warm_start_won",
                "converged",
            ]);
            for e in &report.trace.entries {
                csv.row(vec![
                    e.n.into(),
                    e.value.into(),
                    e.total.into(),
                    e.warm_started.into(),
                    e.warm_start_won.into(),
                    e.converged.into(),
                ]);
            }
            csv.finish()
        }
    };
    ctx.emit(&text)?;
    Ok(if holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct FormationConfig<'a> {
    input: String,
    dims: (usize, usize),
    settings: FormationSettings<f64>,
    sweep: bool,
    /// Settings of the ensemble search, when the input was a state.
    optimizer: Option<&'a OptimizerSettings>,
    ensemble_size: usize,
    ensemble_eof: f64,
}

#[derive(Serialize)]
struct SkippedN {
    n: usize,
    reason: String,
}

#[derive(Serialize)]
struct FormationSweep<'a> {
    results: &'a [FormationResult<f64>],
    skipped: Vec<SkippedN>,
}

fn formation(ctx: &Context, a: &FormationArgs) -> Result<ExitCode, CliError> {
    if a.n == 0 {
        return Err(CliError::Input("--n must be at least 1".into()));
    }
    let input = load_state(&a.input)?;
    let rho = input.density();
    let optimizer = settings(&a.optimizer)?;
    let (ensemble, searched) = match &input {
        Loaded::Ensemble(e) => (e.clone(), false),
        Loaded::Pure(_) => (eigen_ensemble(&rho), false),
        Loaded::Mixed(_) => {
            let mut rng = RandomSource::new(ctx.seed);
            (
                eof_optimize_seeded(&rho, &optimizer, &[], &mut rng)?.ensemble,
                true,
            )
        }
    };
    let mut settings = FormationSettings::new(a.n, a.delta1, a.delta2);
    settings.window = match a.window {
        WindowArg::Paper => Window::Paper,
        WindowArg::Plain => Window::Plain,
    };
    settings.normalization = match a.normalize {
        NormalizeArg::Sub => Normalization::Sub,
        NormalizeArg::Unit => Normalization::Unit,
    };
    let ns: Vec<usize> = if a.sweep {
        (1..=a.n).collect()
    } else {
        vec![a.n]
    };
    let mut results: Vec<FormationResult<f64>> = Vec::with_capacity(ns.len());
    let mut skipped = Vec::new();
    for n in ns {
        let s = FormationSettings { n, ..settings };
        match formation_protocol(&rho, &ensemble, &s) {
            Ok(out) => results.push(out.result),
            // small n can leave the window without integer points
            Err(entcost::Error::Degenerate(reason)) if a.sweep => {
                log::warn!("n = {n} skipped: {reason}");
                skipped.push(SkippedN { n, reason });
            }
            Err(e) => return Err(e.into()),
        }
    }
    if results.is_empty() {
        return Err(CliError::Input(
            "no n in the sweep has a nonempty typical set; widen --delta1".into(),
        ));
    }
    let holds = results
        .iter()
        .all(|r| r.checks.as_ref().is_none_or(|c| c.holds));
    let config = FormationConfig {
        input: a.input.display().to_string(),
        dims: rho.dims(),
        settings,
        sweep: a.sweep,
        optimizer: searched.then_some(&optimizer),
        ensemble_size: ensemble.len(),
        ensemble_eof: ensemble.average_entanglement(),
    };
    let text = match ctx.format(Format::Json) {
        Format::Json if a.sweep => ctx.envelope(
            &config,
            &FormationSweep {
                results: &results,
                skipped,
            },
        )?,
        Format::Json => ctx.envelope(&config, &results[0])?,
        Format::Csv => {
            let mut csv = Csv::new(&[
                "n",
                "mode",
                "k",
                "m",
                "rate",
                "average_entanglement",
                "rate_slack",
                "eps1",
                "eps2",
                "eps3",
                "bures_bound",
                "exact_bures",
                "holds",
            ]);
            for r in &results {
                let mode = serde_json::to_value(r.mode)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from));
                csv.row(vec![
                    r.n.into(),
                    Cell::S(mode.unwrap_or_default()),
                    r.k.into(),
                    r.m.into(),
                    r.rate.into(),
                    r.average_entanglement.into(),
                    r.rate_slack.into(),
                    r.eps1.into(),
                    r.eps2.into(),
                    r.eps3.into(),
                    r.bures_bound.into(),
                    r.exact_bures.into(),
                    r.checks.as_ref().map(|c| c.holds).into(),
                ]);
            }
            csv.finish()
        }
    };
    ctx.emit(&text)?;
    Ok(if holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn verify(ctx: &Context, a: &VerifyArgs) -> Result<ExitCode, CliError> {
    let (mut config, mut seed_source) = (VerifyConfig::default(), ctx.seed_source);
    if let Some(path) = &a.config {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        config = serde_json::from_str(&text).map_err(|e| {
            CliError::Input(format!("{}: invalid verify config: {e}", path.display()))
        })?;
    }
    if ctx.seed_source != SeedSource::Default || a.config.is_none() {
        config.seed = ctx.seed;
    } else {
        seed_source = SeedSource::Config;
    }
    let overrides = [
        (a.monotonicity, &mut config.monotonicity_cases),
        (a.continuity, &mut config.continuity_cases),
        (a.pairs, &mut config.metric_pairs),
        (a.multiplicativity, &mut config.multiplicativity_cases),
    ];
    for (flag, slot) in overrides {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    let report = run_verify(&config)?;
    let ctx = Context {
        seed: config.seed,
        seed_source,
        ..*ctx
    };
    let text = match ctx.format(Format::Json) {
        Format::Json => ctx.envelope(&config, &report)?,
        Format::Csv => {
            let mut csv = Csv::new(&[
                "property",
                "cases",
                "violations",
                "worst_margin",
                "tolerance",
                "holds",
            ]);
            for p in &report.properties {
                csv.row(vec![
                    p.property.as_str().into(),
                    p.cases.into(),
                    p.violations.into(),
                    p.worst_margin.into(),
                    p.tolerance.into(),
                    p.holds.into(),
                ]);
            }
            csv.finish()
        }
    };
    ctx.emit(&text)?;
    for p in report.properties.iter().filter(|p| !p.holds) {
        log::error!(
            "{}: {} of {} cases violated",
            p.property,
            p.violations,
            p.cases
        );
    }
    Ok(if report.holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct DivergenceOutput {
    #[serde(flatten)]
    report: DivergenceReport<f64>,
    threshold: f64,
    first_k_exceeding: Option<usize>,
}

fn divergence(ctx: &Context, a: &DivergenceArgs) -> Result<ExitCode, CliError> {
    if a.k_max == 0 {
        return Err(CliError::Input("--k-max must be at least 1".into()));
    }
    let report = match (&a.rho, &a.sigma) {
        (Some(r), Some(s)) => {
            let rho = load_state(r)?.density();
            let sigma = load_state(s)?.density();
            tensor_power_divergence(&rho, &sigma, a.k_max, a.direct_k)?
        }
        _ => {
            if !(a.fidelity > 0.0 && a.fidelity <= 1.0) {
                return Err(CliError::Input(format!(
                    "--fidelity {} is outside (0, 1]",
                    a.fidelity
                )));
            }
            DivergenceReport {
                base_fidelity: a.fidelity,
                entries: divergence_sequence(a.fidelity, a.k_max),
                direct_checks: Vec::new(),
                direct_check_capped_at: None,
            }
        }
    };
    let first = first_k_exceeding(report.base_fidelity, a.threshold, a.k_max);
    let config = serde_json::json!({
        "fidelity": report.base_fidelity,
        "k_max": a.k_max,
        "threshold": a.threshold,
        "rho": a.rho.as_ref().map(|p| p.display().to_string()),
        "sigma": a.sigma.as_ref().map(|p| p.display().to_string()),
        "direct_k": a.direct_k,
    });
    let text = match ctx.format(Format::Csv) {
        Format::Json => ctx.envelope(
            &config,
            &DivergenceOutput {
                report,
                threshold: a.threshold,
                first_k_exceeding: first,
            },
        )?,
        Format::Csv => {
            let mut csv = Csv::new(&["k", "fidelity", "bures"]);
            for e in &report.entries {
                csv.row(vec![e.k.into(), e.fidelity.into(), e.bures.into()]);
            }
            csv.finish()
        }
    };
    ctx.emit(&text)?;
    Ok(ExitCode::SUCCESS)
}
