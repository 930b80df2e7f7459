//! One function per subcommand. Each takes the assembled run JSON, the
//! command-line overrides and the output directory.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use mtd_core::diagfc::{
    ks_normal, model_residuals, one_step_density, predict, qq_table, quantile_residuals, summarize_samples,
    ResidualDraws,
};
use mtd_core::experiments::{run_grid, study_priors, Cell, Scenario};
use mtd_core::mcmc::{run_fit, theta_from_scalars, Design, Draw, PosteriorSamples, SeriesData};
use mtd_core::mtd::Init;
use mtd_core::rng::{seeded, substream};
use mtd_core::transitions::FamilyTag;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{
    merge, read_json, strict, AcfConfig, FitRunConfig, PredictConfig, ReproConfig, ResidualsConfig, SimulateConfig,
};
use crate::error::{CliError, CliResult};
use crate::io::{read_series, write_json, Table};

/// Command-line values that take precedence over the run JSON.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(format!("cannot create {}: {e}", out.display())))
}

pub fn simulate(v: Value, o: &Overrides, out: &Path) -> CliResult<String> {
    let mut cfg: SimulateConfig = strict(v, "")?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    let model = cfg.model.build()?;
    let init = match &cfg.init {
        Some(x) => Init::Fixed(x.clone()),
        None => Init::FromMarginal,
    };
    let x = if cfg.n == 0 {
        if let Init::Fixed(v) = &init {
            if v.len() != model.order() {
                return Err(CliError::config(format!("init needs {} values, got {}", model.order(), v.len())));
            }
        }
        Vec::new()
    } else {
        model.simulate(cfg.n, &mut seeded(cfg.seed), &init)?
    };
    out_dir(out)?;
    let mut t = Table::create(&out.join("series.csv"), &["t", "value"])?;
    for (i, v) in x.iter().enumerate() {
        t.row([(i + 1).to_string(), num(*v)])?;
    }
    t.finish()?;
    let meta = json!({
        "family": model.tag(),
        "model": cfg.model,
        "n": cfg.n,
        "seed": cfg.seed,
        "init": match &cfg.init {
            Some(x) => json!({ "fixed": x }),
            None => json!("stationary"),
        },
    });
    write_json(&out.join("simulate.json"), &meta)?;
    Ok(format!("simulated {} values into {}", x.len(), out.join("series.csv").display()))
}

/// What a fit records about its model, read back by `predict` and
/// `residuals`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRecord {
    pub family: FamilyTag,
    #[serde(rename = "L")]
    pub order: usize,
    pub covariates: Option<Design>,
    pub data: Option<PathBuf>,
    pub n: usize,
}

pub fn fit(v: Value, o: &Overrides, out: &Path) -> CliResult<String> {
    let mut run: FitRunConfig = strict(v, "")?;
    if let Some(s) = o.seed {
        run.mcmc.seed = s;
    }
    if o.data.is_some() {
        run.data = o.data.clone();
    }
    let pp = run.param_prior()?;
    run.mcmc.validate()?;
    run.weight_prior.validate(run.order)?;
    let path = run.data.clone().ok_or_else(|| CliError::config("no input series: set \"data\" or pass --data"))?;
    let series = SeriesData { values: read_series(&path)?, design: run.covariates.clone() };
    let s = run_fit(&series, run.order, &run.weight_prior, &pp, &run.mcmc)?;

    out_dir(out)?;
    let names = s.scalar_names();
    let mut header = vec!["chain", "iter"];
    header.extend(names.iter().map(String::as_str));
    let mut t = Table::create(&out.join("draws.csv"), &header)?;
    for (i, d) in s.draws.iter().enumerate() {
        let mut row = vec![d.chain.to_string(), d.iter.to_string()];
        row.extend(s.scalars(i).into_iter().map(num));
        t.row(row)?;
    }
    t.finish()?;
    if run.mcmc.store_z {
        let mut t = Table::create(&out.join("allocations.csv"), &["chain", "iter", "t", "lag"])?;
        for d in &s.draws {
            for (j, z) in d.z.iter().flatten().enumerate() {
                t.row([d.chain.to_string(), d.iter.to_string(), (run.order + j + 1).to_string(), (z + 1).to_string()])?;
            }
        }
        t.finish()?;
    }
    let record = FitRecord {
        family: run.family,
        order: run.order,
        covariates: run.covariates.clone(),
        data: Some(path),
        n: series.len(),
    };
    let param_prior = match &pp {
        mtd_core::priors::ParamPrior::Gaussian(p) => json!(p),
        mtd_core::priors::ParamPrior::Poisson(p) => json!(p),
        mtd_core::priors::ParamPrior::Lomax(p) => json!(p),
    };
    let summary = json!({
        "model": record,
        "weight_prior": run.weight_prior,
        "param_prior": param_prior,
        "mcmc": run.mcmc,
        "draws": s.len(),
        "acceptance": s.acceptance,
        "steps": s.steps,
        "summary": summarize_samples(&s, &run.probs)?,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(format!("stored {} draws in {}", s.len(), out.join("draws.csv").display()))
}

/// The record and draws written by `fit` into `dir`.
pub fn load_fit(dir: &Path) -> CliResult<(FitRecord, PosteriorSamples)> {
    let summary = read_json(&dir.join("summary.json"))?;
    let record: FitRecord = strict(summary.get("model").cloned().unwrap_or(Value::Null), "/model")?;
    let path = dir.join("draws.csv");
    let bad = |msg: String| CliError::data(format!("{}: {msg}", path.display()));
    let file = File::open(&path).map_err(|e| bad(e.to_string()))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let idx = |name: &str| col.get(name).copied().ok_or_else(|| bad(format!("missing column '{name}'")));
    let (ci, ii) = (idx("chain")?, idx("iter")?);
    let wi: Vec<usize> = (1..=record.order).map(|l| idx(&format!("w_{l}"))).collect::<CliResult<_>>()?;
    if col.contains_key(format!("w_{}", record.order + 1).as_str()) {
        return Err(CliError::config(format!("draws have more weights than the recorded order {}", record.order)));
    }
    let dim_beta = record.covariates.as_ref().map_or(0, Design::dim);
    let mut draws = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("row {}: '{s}' is not a number", r + 1))))
            .collect::<CliResult<_>>()?;
        let theta = theta_from_scalars(record.family, record.order, dim_beta, |n| col.get(n).map(|&j| vals[j]))?;
        draws.push(Draw {
            chain: vals[ci] as usize,
            iter: vals[ii] as usize,
            w: wi.iter().map(|&j| vals[j]).collect(),
            theta,
            z: None,
        });
    }
    let s = PosteriorSamples { family: record.family, order: record.order, draws, acceptance: Vec::new(), steps: Vec::new() };
    Ok((record, s))
}

fn series_for(explicit: Option<&PathBuf>, recorded: Option<&PathBuf>, design: Option<Design>) -> CliResult<SeriesData> {
    let path = explicit
        .or(recorded)
        .ok_or_else(|| CliError::config("no input series: set \"data\" or pass --data"))?;
    Ok(SeriesData { values: read_series(path)?, design })
}

pub fn predict_cmd(v: Value, o: &Overrides, out: &Path) -> CliResult<String> {
    let mut cfg: PredictConfig = strict(v, "")?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if o.data.is_some() {
        cfg.data = o.data.clone();
    }
    let (record, s) = load_fit(&cfg.fit_dir)?;
    let data = series_for(cfg.data.as_ref(), record.data.as_ref(), record.covariates.clone())?;
    let f = predict(&s, &data, cfg.k, cfg.seed)?;
    let intervals = f.intervals(&cfg.levels)?;
    let density = cfg.grid.as_ref().map(|g| one_step_density(&s, &data, g)).transpose()?;

    out_dir(out)?;
    let mut t = Table::create(&out.join("forecast.csv"), &["draw", "step", "value"])?;
    for (i, p) in f.paths.iter().enumerate() {
        for (j, v) in p.iter().enumerate() {
            t.row([(i + 1).to_string(), (j + 1).to_string(), num(*v)])?;
        }
    }
    t.finish()?;
    if let Some(rows) = density {
        let mut t = Table::create(&out.join("density.csv"), &["y", "density", "cdf"])?;
        for (y, f, c) in rows {
            t.row([num(y), num(f), num(c)])?;
        }
        t.finish()?;
    }
    let meta = json!({
        "k": cfg.k,
        "seed": cfg.seed,
        "draws": s.len(),
        "levels": cfg.levels,
        "intervals": intervals,
    });
    write_json(&out.join("intervals.json"), &meta)?;
    Ok(format!("{} predictive paths of length {} in {}", s.len(), cfg.k, out.join("forecast.csv").display()))
}

pub fn residuals(v: Value, o: &Overrides, out: &Path) -> CliResult<String> {
    let mut cfg: ResidualsConfig = strict(v, "")?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if o.data.is_some() {
        cfg.data = o.data.clone();
    }
    let (r, order, source) = match (&cfg.fit_dir, &cfg.model) {
        (Some(dir), None) => {
            let (record, s) = load_fit(dir)?;
            let data = series_for(cfg.data.as_ref(), record.data.as_ref(), record.covariates.clone())?;
            (quantile_residuals(&s, &data, cfg.seed)?, record.order, "posterior")
        }
        (None, Some(run)) => {
            let m = run.build()?;
            let data = series_for(cfg.data.as_ref(), None, None)?;
            let (r, clamped) = model_residuals(&m, &data.values, &mut substream(cfg.seed, 0))?;
            let rd = ResidualDraws { residuals: vec![r], discrete: m.marginal().is_discrete(), clamped };
            (rd, m.order(), "model")
        }
        _ => return Err(CliError::config("give exactly one of \"fit_dir\" and \"model\"")),
    };

    out_dir(out)?;
    let mut t = Table::create(&out.join("residuals.csv"), &["draw", "t", "r"])?;
    for (i, v) in r.residuals.iter().enumerate() {
        for (j, x) in v.iter().enumerate() {
            t.row([(i + 1).to_string(), (order + j + 1).to_string(), num(*x)])?;
        }
    }
    t.finish()?;
    let mut t = Table::create(&out.join("qq.csv"), &["p", "normal_quantile", "mean", "lower", "upper"])?;
    for row in qq_table(&r) {
        t.row(row.map(num))?;
    }
    t.finish()?;
    let pooled = r.pooled();
    let (d, p) = ks_normal(&pooled);
    let m = pooled.len() as f64;
    let meta = json!({
        "source": source,
        "seed": cfg.seed,
        "draws": r.residuals.len(),
        "per_draw": r.residuals.first().map_or(0, Vec::len),
        "discrete": r.discrete,
        "clamped": r.clamped,
        "pooled_ks": {
            "statistic": d,
            "p_value": p,
            "critical_1pct": 1.6276 / (m.sqrt() + 0.12 + 0.11 / m.sqrt()),
        },
    });
    write_json(&out.join("residuals.json"), &meta)?;
    Ok(format!("pooled KS statistic {d:.4} (p = {p:.3}) over {} residuals", pooled.len()))
}

pub fn acf(v: Value, _o: &Overrides, out: &Path) -> CliResult<String> {
    let cfg: AcfConfig = strict(v, "")?;
    let m = cfg.model.build()?;
    let a = m.acf(cfg.horizon, &cfg.init.to_core())?;
    let st = m.weak_stationarity()?;
    out_dir(out)?;
    let mut t = Table::create(&out.join("acf.csv"), &["h", "r"])?;
    for (h, r) in a.r.iter().enumerate() {
        t.row([h.to_string(), num(*r)])?;
    }
    t.finish()?;
    let meta = json!({
        "model": cfg.model,
        "horizon": cfg.horizon,
        "r": a.r,
        "mean": a.mean,
        "second_moment": a.second_moment,
        "phi_const": a.phi_const,
        "init_se": a.init_se,
        "roots": st.roots.iter().map(|(re, im)| [*re, *im]).collect::<Vec<_>>(),
        "max_modulus": st.max_modulus,
        "all_inside": st.all_inside,
    });
    write_json(&out.join("acf.json"), &meta)?;
    Ok(format!(
        "r(1) = {:.4}; largest root modulus {:.4} ({})",
        a.r.get(1).copied().unwrap_or(f64::NAN),
        st.max_modulus,
        if st.all_inside { "weakly stationary" } else { "not weakly stationary" }
    ))
}

pub fn repro_sim(v: Value, o: &Overrides, out: &Path) -> CliResult<String> {
    // a partial "mcmc" block keeps the study run shape for unset fields
    let mut base = json!({ "mcmc": mtd_core::experiments::simulation_run() });
    merge(&mut base, v);
    let mut cfg: ReproConfig = strict(base, "")?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    cfg.mcmc.validate()?;
    let cells: Vec<Cell> = match &cfg.cells {
        None => mtd_core::experiments::full_grid(),
        Some(sel) => sel
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let scenario = match c.scenario {
                    1 => Scenario::One,
                    2 => Scenario::Two,
                    s => return Err(CliError::config(format!("at /cells/{i}/scenario: no scenario {s}"))),
                };
                let prior = study_priors(c.order)
                    .into_iter()
                    .find(|(n, _)| *n == c.prior)
                    .map(|(_, p)| p)
                    .ok_or_else(|| CliError::config(format!("at /cells/{i}/prior: expected dir, sb or cdp, got '{}'", c.prior)))?;
                prior.validate(c.order)?;
                Ok(Cell { scenario, order: c.order, prior_name: c.prior.clone(), prior })
            })
            .collect::<CliResult<_>>()?,
    };
    let results = run_grid(&cells, cfg.n, &cfg.mcmc, cfg.seed)?;
    let rows: Vec<Value> = results
        .iter()
        .map(|r| {
            let dev = r.mean.iter().zip(&r.truth).map(|(m, t)| (m - t).abs()).fold(0.0, f64::max);
            let mut v = json!(r);
            v["max_abs_dev"] = json!(dev);
            v
        })
        .collect();
    out_dir(out)?;
    let report = json!({
        "n": cfg.n,
        "seed": cfg.seed,
        "iters": cfg.mcmc.iters,
        "burnin": cfg.mcmc.burnin,
        "thin": cfg.mcmc.thin,
        "cells": rows,
    });
    write_json(&out.join("repro_sim.json"), &report)?;
    Ok(format!("{} cells written to {}", rows.len(), out.join("repro_sim.json").display()))
}
