use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use hlasso_core::engine::{self, GridSpec, WEIGHT_FLOOR};
use hlasso_core::glm::{self, LogisticHLassoFit};
use hlasso_core::io::{self, fmt_f64, DataTable};
use hlasso_core::simbench::{self, Method, SimCase, SimDesign, TuneMethod};
use hlasso_core::{
    destandardize, standardize, Error, FitOptions, GroupStructure, HLassoFit, PenaltySpec, ResponseMode,
    StandardizedDataset, WeightRecipe,
};

use crate::{Cli, Command, DataArgs, FamilyArg, FitArgs, Format, LrtArgs, MethodArg, OutArgs, PathArgs, PenaltyArgs, SimulateArgs, SolverArgs, TuneArgs};

/// `Ok(true)` maps to exit 0, `Ok(false)` to exit 2 (not converged).
pub fn run(cli: &Cli) -> Result<bool> {
    let config = serde_json::to_value(cli)?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, &config, cli.verbose),
        Command::Path(a) => cmd_path(a, &config, cli.verbose),
        Command::Simulate(a) => cmd_simulate(a, cli.verbose),
        Command::Tune(a) => cmd_tune(a, &config, cli.verbose),
        Command::Lrt(a) => cmd_lrt(a, &config, cli.verbose),
    }
}

struct Loaded {
    table: DataTable,
    groups: GroupStructure,
    ds: StandardizedDataset,
}

fn require_file(p: &Path, what: &str) -> Result<()> {
    if !p.is_file() {
        bail!("{what} file '{}' not found", p.display());
    }
    Ok(())
}

fn load(a: &DataArgs) -> Result<Loaded> {
    require_file(&a.data, "data")?;
    let table = io::read_data_csv(&a.data, &a.response)?;
    let groups = match (&a.groups, &a.gmt) {
        (Some(g), None) => {
            require_file(g, "group map")?;
            io::read_group_map(g, &table.names)?
        }
        (None, Some(g)) => {
            if a.family != FamilyArg::Binomial {
                bail!("--gmt requires --family binomial");
            }
            require_file(g, "gmt")?;
            io::read_gmt(g, &table.names)?
        }
        _ => bail!("give exactly one of --groups or --gmt"),
    };
    let mode = match a.family {
        FamilyArg::Gaussian => ResponseMode::Gaussian,
        FamilyArg::Binomial => ResponseMode::Binary,
    };
    let ds = standardize(table.x.view(), table.y.view(), mode).map_err(|e| match e {
        Error::DegenerateColumn(j) => anyhow::anyhow!("column '{}' has zero variance", table.names[j]),
        other => other.into(),
    })?;
    Ok(Loaded { table, groups, ds })
}

fn fit_options(s: &SolverArgs) -> Result<FitOptions> {
    let o = FitOptions { tol: s.tol, max_outer_iter: s.max_iter, ..FitOptions::default() };
    o.validate()?;
    Ok(o)
}

fn penalty_weights(l: &Loaded, p: &PenaltyArgs) -> Result<(Array1<f64>, WeightRecipe)> {
    if !p.adaptive {
        return Ok((Array1::ones(l.ds.n_vars()), WeightRecipe::Unit));
    }
    let recipe = WeightRecipe::OlsPower { gamma: p.gamma };
    recipe.validate()?;
    let w = match l.ds.mode {
        ResponseMode::Gaussian => engine::weights_for_recipe(&l.ds, recipe)?,
        ResponseMode::Binary => {
            let (_, pilot) = glm::logistic_mle(l.ds.x.view(), l.ds.y.view())
                .context("adaptive weights need an unpenalized logistic pilot fit")?;
            engine::adaptive_weights(pilot.view(), p.gamma, WEIGHT_FLOOR)?
        }
    };
    Ok((w, recipe))
}

fn emit(out: &OutArgs, json: &impl Serialize, csv_body: impl FnOnce() -> Result<String>) -> Result<()> {
    let body = match out.format {
        Format::Json => serde_json::to_string_pretty(json)? + "\n",
        Format::Csv => csv_body()?,
    };
    write_to(out.out.as_deref(), body.as_bytes())
}

fn write_to(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn config_comment(config: &Value) -> String {
    format!("# config: {config}\n")
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    label: String,
    members: Vec<String>,
    d: f64,
}

/// Original-scale summary of one fit.
#[derive(Debug, Serialize)]
struct FitRecord {
    lambda: f64,
    converged: bool,
    iterations: usize,
    objective: f64,
    intercept: f64,
    beta: Vec<f64>,
    d: Vec<f64>,
    alpha: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loglik: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostic: Option<String>,
}

impl FitRecord {
    fn gaussian(f: &HLassoFit, ds: &StandardizedDataset) -> Result<Self> {
        let orig = destandardize(f, ds)?;
        Ok(Self {
            lambda: f.lambda,
            converged: f.converged,
            iterations: f.iterations,
            objective: f.objective(),
            intercept: orig.intercept,
            beta: orig.beta.to_vec(),
            d: f.d.to_vec(),
            alpha: f.alpha.to_vec(),
            loglik: None,
            diagnostic: None,
        })
    }

    fn logistic(f: &LogisticHLassoFit, ds: &StandardizedDataset) -> Self {
        let b = &f.beta / &ds.column_norms;
        Self {
            lambda: f.lambda,
            converged: f.converged,
            iterations: f.iterations,
            objective: f.objective(),
            intercept: f.intercept - b.dot(&ds.column_means),
            beta: b.to_vec(),
            d: f.d.to_vec(),
            alpha: f.alpha_intrinsic.to_vec(),
            loglik: Some(f.loglik),
            diagnostic: f.diagnostic.clone(),
        }
    }
}

fn group_summaries(g: &GroupStructure, names: &[String], d: &[f64]) -> Vec<GroupSummary> {
    g.groups()
        .iter()
        .zip(g.labels())
        .zip(d)
        .map(|((m, label), d)| GroupSummary { label: label.clone(), members: m.iter().map(|&j| names[j].clone()).collect(), d: *d })
        .collect()
}

fn fit_one(l: &Loaded, pen: &PenaltySpec, opts: &FitOptions) -> Result<(FitRecord, Option<LogisticHLassoFit>)> {
    Ok(match l.ds.mode {
        ResponseMode::Gaussian => (FitRecord::gaussian(&engine::fit_hlasso(&l.ds, &l.groups, pen, opts)?, &l.ds)?, None),
        ResponseMode::Binary => {
            let f = glm::fit_logistic_hlasso(&l.ds, &l.groups, pen, opts)?;
            (FitRecord::logistic(&f, &l.ds), Some(f))
        }
    })
}

fn cmd_fit(a: &FitArgs, config: &Value, verbose: bool) -> Result<bool> {
    let l = load(&a.data)?;
    if a.misclass.is_some() && a.data.family != FamilyArg::Binomial {
        bail!("--misclass requires --family binomial");
    }
    let (w, recipe) = penalty_weights(&l, &a.penalty)?;
    let pen = PenaltySpec::new(vec![a.lambda], w, recipe)?;
    let (rec, logistic) = fit_one(&l, &pen, &fit_options(&a.solver)?)?;
    if verbose {
        eprintln!("lambda {} converged {} after {} iterations", rec.lambda, rec.converged, rec.iterations);
    }
    if let (Some(path), Some(f)) = (&a.misclass, &logistic) {
        let m = glm::misclassification(f, l.ds.x.view(), l.ds.y.view())?;
        let mut buf = config_comment(config).into_bytes();
        io::write_misclassification_csv(&m, &mut buf)?;
        write_to(Some(path), &buf)?;
    }

    #[derive(Serialize)]
    struct Artifact<'a> {
        config: &'a Value,
        family: FamilyArg,
        response: &'a str,
        variables: &'a [String],
        #[serde(flatten)]
        fit: &'a FitRecord,
        groups: Vec<GroupSummary>,
    }
    let art = Artifact {
        config,
        family: a.data.family,
        response: &l.table.response,
        variables: &l.table.names,
        fit: &rec,
        groups: group_summaries(&l.groups, &l.table.names, &rec.d),
    };
    emit(&a.output, &art, || {
        let mut s = config_comment(config);
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["variable", "alpha", "beta"])?;
        wtr.write_record(["(intercept)", "", &fmt_f64(rec.intercept)])?;
        for (j, name) in l.table.names.iter().enumerate() {
            wtr.write_record([name.as_str(), &fmt_f64(rec.alpha[j]), &fmt_f64(rec.beta[j])])?;
        }
        s.push_str(std::str::from_utf8(&wtr.into_inner()?)?);
        Ok(s)
    })?;
    Ok(rec.converged)
}

fn resolve_grid(spec: Option<&str>, top: f64) -> Result<Vec<f64>> {
    Ok(match spec {
        Some(s) => GridSpec::parse(s)?.values(),
        None => {
            if top.is_nan() || top <= 0.0 {
                bail!("response is uncorrelated with every column; give --grid explicitly");
            }
            GridSpec::relative_default().scaled(top)
        }
    })
}

fn cmd_path(a: &PathArgs, config: &Value, verbose: bool) -> Result<bool> {
    let l = load(&a.data)?;
    let (w, recipe) = penalty_weights(&l, &a.penalty)?;
    let grid = resolve_grid(a.grid.as_deref(), engine::lambda_max(&l.ds, w.view()))?;
    let opts = fit_options(&a.solver)?;
    let records: Vec<FitRecord> = match l.ds.mode {
        ResponseMode::Gaussian => engine::fit_path(&l.ds, &l.groups, &grid, w.view(), &opts)?
            .iter()
            .map(|f| FitRecord::gaussian(f, &l.ds))
            .collect::<Result<_>>()?,
        ResponseMode::Binary => grid
            .par_iter()
            .map(|&lam| {
                let pen = PenaltySpec::new(vec![lam], w.clone(), recipe)?;
                Ok(FitRecord::logistic(&glm::fit_logistic_hlasso(&l.ds, &l.groups, &pen, &opts)?, &l.ds))
            })
            .collect::<Result<_>>()?,
    };
    let converged = records.iter().all(|r| r.converged);
    if verbose {
        eprintln!("{} fits, {} converged", records.len(), records.iter().filter(|r| r.converged).count());
    }

    #[derive(Serialize)]
    struct Artifact<'a> {
        config: &'a Value,
        family: FamilyArg,
        variables: &'a [String],
        group_labels: &'a [String],
        fits: &'a [FitRecord],
    }
    let art = Artifact { config, family: a.data.family, variables: &l.table.names, group_labels: l.groups.labels(), fits: &records };
    emit(&a.output, &art, || {
        let mut s = config_comment(config);
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["lambda".to_string(), "converged".into(), "iterations".into(), "objective".into(), "intercept".into()];
        header.extend(l.table.names.iter().cloned());
        wtr.write_record(&header)?;
        for r in &records {
            let mut row = vec![fmt_f64(r.lambda), r.converged.to_string(), r.iterations.to_string(), fmt_f64(r.objective), fmt_f64(r.intercept)];
            row.extend(r.beta.iter().map(|v| fmt_f64(*v)));
            wtr.write_record(&row)?;
        }
        s.push_str(std::str::from_utf8(&wtr.into_inner()?)?);
        Ok(s)
    })?;
    Ok(converged)
}

/// Benchmark settings after merging the config file with flags.
#[derive(Debug, Clone, Serialize)]
struct SimConfig {
    case: u32,
    method: MethodArg,
    reps: usize,
    seed: u64,
    grid: String,
    gamma: f64,
    sigma: Option<f64>,
    n_train: usize,
    n_valid: usize,
    n_test: usize,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow::anyhow!("config key '{key}': cannot parse '{v}'"))
}

fn sim_config(a: &SimulateArgs) -> Result<SimConfig> {
    let defaults = SimDesign::new(SimCase::AllInAllOut, 1);
    let mut case = None;
    let mut c = SimConfig {
        case: 0,
        method: MethodArg::Hlasso,
        reps: 50,
        seed: 1,
        grid: defaults.grid.to_string(),
        gamma: 1.0,
        sigma: None,
        n_train: defaults.n_train,
        n_valid: defaults.n_valid,
        n_test: defaults.n_test,
    };
    if let Some(path) = &a.config {
        require_file(path, "config")?;
        for (k, v) in io::parse_kv(&fs::read_to_string(path)?)? {
            match k.as_str() {
                "case" => case = Some(parse_value(&k, &v)?),
                "method" => c.method = <MethodArg as clap::ValueEnum>::from_str(&v, true).map_err(|e| anyhow::anyhow!("config key 'method': {e}"))?,
                "reps" => c.reps = parse_value(&k, &v)?,
                "seed" => c.seed = parse_value(&k, &v)?,
                "grid" => c.grid = v,
                "gamma" => c.gamma = parse_value(&k, &v)?,
                "sigma" => c.sigma = Some(parse_value(&k, &v)?),
                "n_train" => c.n_train = parse_value(&k, &v)?,
                "n_valid" => c.n_valid = parse_value(&k, &v)?,
                "n_test" => c.n_test = parse_value(&k, &v)?,
                other => bail!("unknown config key '{other}'"),
            }
        }
    }
    case = a.case.or(case);
    c.case = case.context("--case (or 'case' in --config) is required")?;
    c.method = a.method.unwrap_or(c.method);
    c.reps = a.reps.unwrap_or(c.reps);
    c.seed = a.seed.unwrap_or(c.seed);
    c.grid = a.grid.clone().unwrap_or(c.grid);
    c.gamma = a.gamma.unwrap_or(c.gamma);
    c.sigma = a.sigma.or(c.sigma);
    Ok(c)
}

fn sim_method(m: MethodArg, gamma: f64) -> Method {
    match m {
        MethodArg::Hlasso => Method::Hlasso,
        MethodArg::AdaptiveHlasso => Method::AdaptiveHlasso { gamma },
        MethodArg::Lasso => Method::Lasso,
        MethodArg::Ols => Method::Ols,
    }
}

fn cmd_simulate(a: &SimulateArgs, verbose: bool) -> Result<bool> {
    let c = sim_config(a)?;
    let mut design = SimDesign::new(SimCase::from_number(c.case)?, c.seed);
    design.grid = GridSpec::parse(&c.grid)?;
    design.sigma = c.sigma;
    design.n_train = c.n_train;
    design.n_valid = c.n_valid;
    design.n_test = c.n_test;
    if design.n_train < 2 || design.n_valid < 1 || design.n_test < 1 {
        bail!("need n_train >= 2, n_valid >= 1 and n_test >= 1");
    }
    let method = sim_method(c.method, c.gamma);
    let report = simbench::run_benchmark(&design, method, c.reps, &FitOptions::default())?;
    if verbose {
        eprintln!("{} of {} reps completed", report.per_rep.len(), report.reps);
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut csv_buf = Vec::new();
    io::write_sim_csv(&report, &mut csv_buf)?;
    write_to(Some(&a.out.join("per_rep.csv")), &csv_buf)?;
    let summary = serde_json::to_string_pretty(&io::sim_summary(&report, &c))? + "\n";
    write_to(Some(&a.out.join("summary.json")), summary.as_bytes())?;
    if report.per_rep.is_empty() {
        let first = report.failures.first().map(|(_, e)| e.as_str()).unwrap_or("unknown");
        bail!("all {} replications failed (first: {first})", report.reps);
    }
    Ok(true)
}

fn cmd_tune(a: &TuneArgs, config: &Value, verbose: bool) -> Result<bool> {
    let l = load(&a.data)?;
    let method = match (a.data.family, a.method) {
        (FamilyArg::Binomial, _) => TuneMethod::LogisticHlasso,
        (_, MethodArg::Hlasso) => TuneMethod::Hlasso,
        (_, MethodArg::AdaptiveHlasso) => TuneMethod::AdaptiveHlasso { gamma: a.gamma },
        (_, MethodArg::Lasso) => TuneMethod::Lasso,
        (_, MethodArg::Ols) => bail!("ols has no tuning parameter"),
    };
    let top = match method {
        TuneMethod::Lasso => max_abs(hlasso_core::linalg::xt_y(l.ds.x.view(), l.ds.y.view()).view()),
        TuneMethod::AdaptiveHlasso { gamma } => {
            let w = engine::weights_for_recipe(&l.ds, WeightRecipe::OlsPower { gamma })?;
            engine::lambda_max(&l.ds, w.view())
        }
        _ => engine::lambda_max(&l.ds, Array1::ones(l.ds.n_vars()).view()),
    };
    let grid = resolve_grid(a.grid.as_deref(), top)?;
    let t = simbench::tune_kfold(&l.ds, &l.groups, method, a.folds, &grid, a.seed, &fit_options(&a.solver)?)?;
    if verbose {
        eprintln!("chose lambda {}", t.lambda);
    }

    #[derive(Serialize)]
    struct Point {
        lambda: f64,
        loss: f64,
    }
    #[derive(Serialize)]
    struct Artifact<'a> {
        config: &'a Value,
        lambda: f64,
        folds: usize,
        cv_curve: Vec<Point>,
    }
    let art = Artifact { config, lambda: t.lambda, folds: a.folds, cv_curve: t.cv_curve.iter().map(|&(lambda, loss)| Point { lambda, loss }).collect() };
    emit(&a.output, &art, || {
        let mut s = config_comment(config);
        s.push_str(&format!("# chosen lambda: {}\nlambda,loss\n", fmt_f64(t.lambda)));
        for (lam, loss) in &t.cv_curve {
            s.push_str(&format!("{},{}\n", fmt_f64(*lam), fmt_f64(*loss)));
        }
        Ok(s)
    })?;
    Ok(true)
}

fn max_abs(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn indices_of(names: &[String], wanted: &[String], flag: &str) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|w| names.iter().position(|n| n == w).with_context(|| format!("{flag}: unknown variable '{w}'")))
        .collect()
}

fn cmd_lrt(a: &LrtArgs, config: &Value, verbose: bool) -> Result<bool> {
    let l = load(&a.data)?;
    let null = indices_of(&l.table.names, &a.null, "--null")?;
    let support = if a.support.is_empty() { (0..l.ds.n_vars()).collect() } else { indices_of(&l.table.names, &a.support, "--support")? };
    let (w, recipe) = penalty_weights(&l, &a.penalty)?;
    let pen = PenaltySpec::new(vec![a.lambda], w, recipe)?;
    let report = match glm::lrt_statistic(&l.ds, &l.groups, &support, &null, &pen, &fit_options(&a.solver)?) {
        Ok(r) => r,
        Err(Error::NonConvergence(msg)) => {
            eprintln!("not converged: {msg}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    if verbose {
        eprintln!("T = {} on {} df, p = {}", report.statistic, report.q, report.p_value);
    }

    #[derive(Serialize)]
    struct Artifact<'a> {
        config: &'a Value,
        null: &'a [String],
        #[serde(flatten)]
        report: &'a glm::LrtReport,
    }
    let art = Artifact { config, null: &a.null, report: &report };
    emit(&a.output, &art, || {
        let mut s = config_comment(config);
        s.push_str("statistic,q,p_value\n");
        s.push_str(&format!("{},{},{}\n", fmt_f64(report.statistic), report.q, fmt_f64(report.p_value)));
        Ok(s)
    })?;
    Ok(true)
}

