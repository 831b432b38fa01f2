//! Command implementations. Each returns the result document and its tables
//! without touching the filesystem.

use serde::Serialize;
use serde_json::{json, Value};

use qustat::apps::testing::{limit_interval, run_test, TestSpec};
use qustat::apps::{goodness_limit_forms, metrology_overlap};
use qustat::ccr::fock::hermite_orthogonality_check;
use qustat::ccr::{build_ccr_basis, kernel_to_limit, limit_moment, LimitOptions, MomentMethod};
use qustat::hoeffding::{kernel_components, DegeneracyReport};
use qustat::linalg::{binomial, factorial, Budget};
use qustat::ustat::{assemble_direct, Scaling};
use qustat::{DensityMatrix, Kernel};

use crate::config::{Command, ExperimentConfig};
use crate::CliError;

/// A CSV table: file stem, header and rows of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Table { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub result: Value,
    pub tables: Vec<Table>,
    /// Set when a computed quantity misses its configured tolerance.
    pub tolerance_failure: Option<String>,
}

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

struct Context {
    state: DensityMatrix,
    kernel: Option<Kernel>,
    budget: Budget,
}

impl Context {
    fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let state = cfg.state.build()?;
        let kernel = cfg.kernel.as_ref().map(|k| k.build(&state)).transpose()?;
        Ok(Context { state, kernel, budget: Budget::new(cfg.budget.max_dim) })
    }

    fn kernel(&self) -> &Kernel {
        self.kernel.as_ref().expect("validated config has a kernel")
    }

    fn report(&self, cfg: &ExperimentConfig) -> Result<DegeneracyReport, CliError> {
        Ok(kernel_components(self.kernel(), &self.state, cfg.tolerances.degeneracy)?)
    }

    fn limit_options(&self, cfg: &ExperimentConfig) -> LimitOptions {
        LimitOptions { trunc: cfg.budget.trunc, budget: self.budget, max_degree: cfg.budget.max_degree, ..Default::default() }
    }
}

fn default_scaling(cfg: &ExperimentConfig, report: &DegeneracyReport) -> Scaling {
    cfg.scaling.unwrap_or(Scaling::Root { c: report.c.unwrap_or(report.r()) as u32 })
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let ctx = Context::new(cfg)?;
    match cfg.command {
        Command::Decompose => decompose(cfg, &ctx),
        Command::Moments => moments(cfg, &ctx),
        Command::Limit => limit(cfg, &ctx),
        Command::Convergence => convergence(cfg, &ctx),
        Command::TestSim => test_sim(cfg, &ctx),
        Command::Metrology => metrology(cfg, &ctx),
        Command::HermiteCheck => hermite_check(cfg),
    }
}

fn decompose(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let report = ctx.report(cfg)?;
    let norm_sq: Vec<f64> = report.components.iter().map(|c| c.norm_sq).collect();
    let mut table = Table::new("components", &["l", "norm_sq"]);
    for (l, v) in norm_sq.iter().enumerate() {
        table.rows.push(vec![l.to_string(), fmt_f64(*v)]);
    }
    let result = json!({
        "command": "decompose",
        "theta": report.theta,
        "c": report.c,
        "norm_sq": norm_sq,
        "xi1": report.xi1(),
    });
    Ok(Artifacts { result, tables: vec![table], tolerance_failure: None })
}

fn moments(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let report = ctx.report(cfg)?;
    let scaling = default_scaling(cfg, &report);
    let mut table = Table::new("moments", &["n", "p", "scaling_exponent", "moment"]);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let u = assemble_direct(ctx.kernel(), n, ctx.budget)?;
        let ms = u.centered_moments(&ctx.state, &cfg.p_list, scaling)?;
        for (&p, m) in cfg.p_list.iter().zip(ms) {
            table.rows.push(vec![n.to_string(), p.to_string(), scaling.exponent().to_string(), fmt_f64(m)]);
            rows.push(json!({"n": n, "p": p, "moment": m}));
        }
    }
    let result = json!({"command": "moments", "theta": report.theta, "c": report.c, "scaling": scaling, "rows": rows});
    Ok(Artifacts { result, tables: vec![table], tolerance_failure: None })
}

fn routes_agree(a: f64, b: f64, cfg: &ExperimentConfig) -> bool {
    let diff = (a - b).abs();
    diff <= cfg.tolerances.route_abs || diff <= cfg.tolerances.route_rel * a.abs().max(b.abs())
}

fn limit(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let report = ctx.report(cfg)?;
    let basis = build_ccr_basis(&ctx.state)?;
    let u = kernel_to_limit(ctx.kernel(), &report, &basis)?;
    let opts = ctx.limit_options(cfg);
    let mut table = Table::new("limit_moments", &["p", "wick", "fock", "abs_diff"]);
    let mut rows = Vec::new();
    let mut failure = None;
    for &p in &cfg.p_list {
        let wick = limit_moment(&u, &basis, p, MomentMethod::Wick, opts)?;
        let fock = limit_moment(&u, &basis, p, MomentMethod::Fock, opts)?;
        if !routes_agree(wick, fock, cfg) && failure.is_none() {
            failure = Some(format!("limit moment routes disagree at p = {p}: wick {wick:e}, fock {fock:e}"));
        }
        table.rows.push(vec![p.to_string(), fmt_f64(wick), fmt_f64(fock), fmt_f64((wick - fock).abs())]);
        rows.push(json!({"p": p, "wick": wick, "fock": fock}));
    }
    let c = u.c;
    let variance_check = factorial(c) * binomial(report.r(), c).powi(2) * report.component(c).norm_sq;
    let result = json!({
        "command": "limit",
        "limit": u.to_json(),
        "moments": rows,
        "c_factorial_binom_sq_norm": variance_check,
    });
    Ok(Artifacts { result, tables: vec![table], tolerance_failure: failure })
}

fn convergence(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let report = ctx.report(cfg)?;
    let basis = build_ccr_basis(&ctx.state)?;
    let u = kernel_to_limit(ctx.kernel(), &report, &basis)?;
    let scaling = default_scaling(cfg, &report);
    let opts = ctx.limit_options(cfg);
    let limits: Vec<f64> = cfg.p_list.iter().map(|&p| limit_moment(&u, &basis, p, cfg.method, opts)).collect::<Result<_, _>>()?;
    let mut table = Table::new("convergence", &["n", "p", "scaling_exponent", "moment", "limit_moment", "abs_gap"]);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let un = assemble_direct(ctx.kernel(), n, ctx.budget)?;
        let ms = un.centered_moments(&ctx.state, &cfg.p_list, scaling)?;
        for ((&p, m), lim) in cfg.p_list.iter().zip(ms).zip(&limits) {
            let gap = (m - lim).abs();
            table.rows.push(vec![
                n.to_string(),
                p.to_string(),
                scaling.exponent().to_string(),
                fmt_f64(m),
                fmt_f64(*lim),
                fmt_f64(gap),
            ]);
            rows.push(json!({"n": n, "p": p, "moment": m, "limit_moment": lim, "abs_gap": gap}));
        }
    }
    let result = json!({
        "command": "convergence",
        "scaling": scaling,
        "method": cfg.method,
        "limit": u.to_json(),
        "rows": rows,
    });
    Ok(Artifacts { result, tables: vec![table], tolerance_failure: None })
}

fn test_sim(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let params = cfg.test.as_ref().expect("validated test section");
    let alternative = params.alternative.as_ref().map(|s| s.build()).transpose()?;
    let interval = match params.interval {
        Some([a, b]) => (a, b),
        None => limit_interval(&ctx.state, params.alpha, params.limit_draws, cfg.seed, cfg.budget.trunc, ctx.budget)?,
    };
    let forms = goodness_limit_forms(&ctx.state)?;
    let mut table = Table::new("test", &["n", "alpha_hat", "alpha_se", "alpha_exact", "beta_hat", "beta_se", "beta_exact"]);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let mut spec = TestSpec::new(ctx.state.clone(), params.alpha, n);
        spec.interval = Some(interval);
        spec.mc_replicates = params.mc_replicates;
        spec.limit_draws = params.limit_draws;
        spec.seed = cfg.seed;
        spec.trunc = cfg.budget.trunc;
        spec.budget = ctx.budget;
        if let Some(s) = cfg.scaling {
            spec.scaling = s;
        }
        let r = run_test(&spec, alternative.as_ref())?;
        table.rows.push(vec![
            n.to_string(),
            fmt_f64(r.alpha_hat),
            fmt_f64(r.alpha_se),
            fmt_f64(r.alpha_exact),
            fmt_opt(r.beta_hat),
            fmt_opt(r.beta_se),
            fmt_opt(r.beta_exact),
        ]);
        rows.push(r);
    }
    let result = json!({
        "command": "test-sim",
        "interval": [interval.0, interval.1],
        "limit_forms": forms,
        "rows": rows,
    });
    Ok(Artifacts { result, tables: vec![table], tolerance_failure: None })
}

fn metrology(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let m = cfg.metrology.as_ref().expect("validated metrology section");
    let mut table = Table::new("metrology", &["n", "overlap_re", "overlap_im", "limit", "abs_gap"]);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let r = metrology_overlap(ctx.kernel(), &ctx.state, m.t, m.g1, m.g2, n, ctx.budget)?;
        table.rows.push(vec![n.to_string(), fmt_f64(r.overlap_re), fmt_f64(r.overlap_im), fmt_f64(r.limit), fmt_f64(r.gap())]);
        rows.push(r);
    }
    Ok(Artifacts { result: json!({"command": "metrology", "rows": rows}), tables: vec![table], tolerance_failure: None })
}

#[derive(Serialize)]
struct HermiteRow {
    sigma_sq: f64,
    n: u32,
    m: u32,
    residual: f64,
}

fn hermite_check(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let mut table = Table::new("hermite", &["sigma_sq", "n", "m", "residual"]);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &s in &cfg.hermite.sigma_sq {
        for total in 1..=cfg.hermite.max_order {
            for n in 0..=total {
                let residual = hermite_orthogonality_check(n, total - n, s, cfg.budget.trunc)?;
                worst = worst.max(residual);
                table.rows.push(vec![fmt_f64(s), n.to_string(), (total - n).to_string(), fmt_f64(residual)]);
                rows.push(HermiteRow { sigma_sq: s, n, m: total - n, residual });
            }
        }
    }
    let failure = (worst > cfg.tolerances.hermite)
        .then(|| format!("Hermite residual {worst:e} exceeds tolerance {:e}", cfg.tolerances.hermite));
    let result = json!({"command": "hermite-check", "max_residual": worst, "rows": rows});
    Ok(Artifacts { result, tables: vec![table], tolerance_failure: failure })
}
