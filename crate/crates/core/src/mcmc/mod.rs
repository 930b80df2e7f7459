//! Gibbs and Metropolis-within-Gibbs fitting for the Gaussian, Poisson and
//! shifted-Lomax MTD models.
//!
//! The likelihood conditions on the first `L` observations. One sweep
//! updates, in order, the allocations `z`, the weights `w`, the family
//! parameters and, for the Poisson model, the latent thinning counts `q`.
//!
//! Indexing is 0-based throughout: observation `t` runs over `L..n`, the
//! allocation for `t` is stored at `z[t - L]`, and a stored allocation `k`
//! means lag `k + 1`.

pub mod gaussian;
pub mod lomax;
pub mod poisson;
pub mod slice;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mtd::MtdModel;
use crate::priors::{ParamPrior, Theta, WeightPrior};
use crate::rng::substream;
use crate::transitions::{FamilyTag, Transition};

/// Covariates for the multiplicative Lomax model `y_t = exp(x_t' beta) eps_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Design {
    /// `x_t = (cos wt, sin wt, ..., cos Kwt, sin Kwt)` with `w = 2 pi / period`
    /// and `t = 1, 2, ...`.
    Harmonic { period: f64, harmonics: usize },
    /// One row per observation.
    Matrix { rows: Vec<Vec<f64>> },
}

impl Design {
    pub fn dim(&self) -> usize {
        match self {
            Design::Harmonic { harmonics, .. } => 2 * harmonics,
            Design::Matrix { rows } => rows.first().map_or(0, Vec::len),
        }
    }

    /// Covariate row for 0-based index `t`; `None` beyond a stored matrix.
    pub fn row(&self, t: usize) -> Option<Vec<f64>> {
        match self {
            Design::Harmonic { period, harmonics } => Some(harmonic_row((t + 1) as f64, *period, *harmonics)),
            Design::Matrix { rows } => rows.get(t).cloned(),
        }
    }
}

pub fn harmonic_row(t: f64, period: f64, harmonics: usize) -> Vec<f64> {
    let w = 2.0 * std::f64::consts::PI / period;
    (1..=harmonics)
        .flat_map(|k| {
            let a = k as f64 * w * t;
            [a.cos(), a.sin()]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    pub values: Vec<f64>,
    pub design: Option<Design>,
}

impl SeriesData {
    pub fn new(values: Vec<f64>) -> Self {
        SeriesData { values, design: None }
    }

    pub fn with_design(values: Vec<f64>, design: Design) -> Self {
        SeriesData { values, design: Some(design) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `n x d` covariate matrix, if any.
    pub fn covariates(&self) -> Option<DMatrix<f64>> {
        let d = self.design.as_ref()?;
        let n = self.len();
        let k = d.dim();
        Some(DMatrix::from_fn(n, k, |i, j| d.row(i).map_or(f64::NAN, |r| r[j])))
    }

    /// Checks length, support and covariate rank for a fit of order `order`.
    pub fn validate(&self, order: usize, tag: FamilyTag) -> Result<()> {
        let n = self.len();
        if order == 0 {
            return Err(Error::InvalidParameter("model order must be at least 1".into()));
        }
        if n <= order {
            return Err(Error::Data(format!("need more than {order} observations, got {n}")));
        }
        let bad = |i: usize, v: f64, what: &str| Err(Error::Data(format!("observation {} = {v}: {what}", i + 1)));
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return bad(i, v, "not finite");
            }
            match tag {
                FamilyTag::Poisson if v < 0.0 || v.fract() != 0.0 => return bad(i, v, "not a count"),
                FamilyTag::Lomax if self.design.is_some() && v <= 0.0 => return bad(i, v, "nonpositive response"),
                FamilyTag::Lomax if v < 0.0 => return bad(i, v, "negative"),
                _ => {}
            }
        }
        if let Some(d) = &self.design {
            if tag != FamilyTag::Lomax {
                return Err(Error::Unsupported(format!("covariates are only supported for the lomax model, not {tag}")));
            }
            if let Design::Matrix { rows } = d {
                if rows.len() != n {
                    return Err(Error::Data(format!("{} covariate rows for {n} observations", rows.len())));
                }
                let k = d.dim();
                if rows.iter().any(|r| r.len() != k || r.iter().any(|v| !v.is_finite())) {
                    return Err(Error::Data("covariate rows must be finite and of equal length".into()));
                }
            }
            let x = self.covariates().expect("design present");
            if x.ncols() == 0 {
                return Err(Error::Data("design has no columns".into()));
            }
            if x.ncols() > n || x.clone().svd(false, false).rank(1e-10 * n as f64) < x.ncols() {
                return Err(Error::Data("covariate matrix is not of full column rank".into()));
            }
        }
        Ok(())
    }
}

fn default_step() -> f64 {
    0.2
}

/// Random-walk proposal scales: log scale for `lambda`, `gamma`, `phi`,
/// raw scale per coordinate for `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSizes {
    #[serde(default = "default_step")]
    pub lambda: f64,
    #[serde(default = "default_step")]
    pub gamma: f64,
    #[serde(default = "default_step")]
    pub phi: f64,
    #[serde(default = "default_step")]
    pub beta: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        StepSizes { lambda: 0.2, gamma: 0.2, phi: 0.2, beta: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
    pub steps: StepSizes,
    /// Robbins-Monro step adaptation during burn-in, frozen afterwards.
    pub adapt: bool,
    /// Integrate `alpha` out of the `phi` update (Lomax).
    pub collapse_alpha: bool,
    /// Keep the allocations of stored draws.
    pub store_z: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iters: 10_000,
            burnin: 1_000,
            thin: 1,
            seed: 1,
            chains: 1,
            steps: StepSizes::default(),
            adapt: true,
            collapse_alpha: true,
            store_z: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burnin >= self.iters {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below the iteration count {}",
                self.burnin, self.iters
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thinning stride must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidParameter("need at least one chain".into()));
        }
        let s = &self.steps;
        for (n, v) in [("lambda", s.lambda), ("gamma", s.gamma), ("phi", s.phi), ("beta", s.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("step size for {n} must be positive")));
            }
        }
        Ok(())
    }

    pub fn stored_draws(&self) -> usize {
        (self.iters - self.burnin) / self.thin
    }
}

/// One sampler state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub w: Vec<f64>,
    pub theta: Theta,
    /// 0-based lag index per observation `t >= L`.
    pub z: Vec<usize>,
    /// Poisson innovations: `x_t = q_t + s_t` with `q_t ~ Pois(lambda)` and
    /// `s_t` the binomial survivors of `x_{t - z_t}`.
    pub q: Option<Vec<u64>>,
}

impl ChainState {
    /// `M_l`, the number of observations allocated to each lag.
    pub fn counts(&self, order: usize) -> Vec<usize> {
        let mut m = vec![0; order];
        for &k in &self.z {
            m[k] += 1;
        }
        m
    }
}

/// Metropolis bookkeeping for one block, with optional step adaptation.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk {
    pub step: f64,
    accepted: u64,
    proposed: u64,
}

const TARGET_ACCEPT: f64 = 0.35;

impl RandomWalk {
    pub fn new(step: f64) -> Self {
        RandomWalk { step, accepted: 0, proposed: 0 }
    }

    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn reset(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
    }

    pub(crate) fn adapt(&mut self, accepted: bool, iter: usize) {
        let gain = (iter as f64 + 1.0).powf(-0.6);
        let a = if accepted { 1.0 } else { 0.0 };
        self.step = (self.step.ln() + gain * (a - TARGET_ACCEPT)).exp().clamp(1e-4, 1e2);
    }

    /// One Metropolis step from `cur` with log target `ln_target` already
    /// evaluated at `cur` as `cur_lp`. Returns the new point and its value.
    pub(crate) fn step<R, F>(&mut self, cur: f64, cur_lp: f64, ln_target: F, adapt_at: Option<usize>, rng: &mut R) -> (f64, f64)
    where
        R: Rng + ?Sized,
        F: Fn(f64) -> f64,
    {
        let prop = cur + self.step * crate::dists::std_normal(rng);
        let lp = ln_target(prop);
        let ok = lp.is_finite() && (lp - cur_lp >= 0.0 || rng.random::<f64>().ln() < lp - cur_lp);
        self.record(ok);
        if let Some(i) = adapt_at {
            self.adapt(ok, i);
        }
        if ok {
            (prop, lp)
        } else {
            (cur, cur_lp)
        }
    }
}

/// Metropolis blocks of one chain, keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuners {
    pub blocks: BTreeMap<&'static str, RandomWalk>,
}

impl Tuners {
    pub fn new(tag: FamilyTag, cfg: &FitConfig, has_beta: bool) -> Self {
        let mut blocks = BTreeMap::new();
        match tag {
            FamilyTag::Poisson => {
                blocks.insert("lambda", RandomWalk::new(cfg.steps.lambda));
                blocks.insert("gamma", RandomWalk::new(cfg.steps.gamma));
                blocks.insert("q", RandomWalk::new(1.0));
            }
            FamilyTag::Lomax => {
                blocks.insert("phi", RandomWalk::new(cfg.steps.phi));
                if has_beta {
                    blocks.insert("beta", RandomWalk::new(cfg.steps.beta));
                }
            }
            _ => {}
        }
        Tuners { blocks }
    }

    pub(crate) fn get(&mut self, name: &'static str) -> &mut RandomWalk {
        self.blocks.get_mut(name).expect("registered block")
    }
}

/// Data and priors for one fit, with per-family precomputation.
#[derive(Debug, Clone)]
pub struct Target<'a> {
    pub x: &'a [f64],
    pub order: usize,
    pub weight_prior: &'a WeightPrior,
    pub param_prior: &'a ParamPrior,
    pub design: Option<DMatrix<f64>>,
    pub(crate) ln_fact: Vec<f64>,
}

impl<'a> Target<'a> {
    pub fn new(data: &'a SeriesData, order: usize, weight_prior: &'a WeightPrior, param_prior: &'a ParamPrior) -> Result<Self> {
        let tag = prior_family(param_prior);
        data.validate(order, tag)?;
        weight_prior.validate(order)?;
        param_prior.validate()?;
        let ln_fact = if tag == FamilyTag::Poisson {
            let max = data.values.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;
            poisson::ln_factorial_table(max)
        } else {
            Vec::new()
        };
        Ok(Target {
            x: &data.values,
            order,
            weight_prior,
            param_prior,
            design: data.covariates(),
            ln_fact,
        })
    }

    pub fn tag(&self) -> FamilyTag {
        prior_family(self.param_prior)
    }

    /// Number of modelled observations, `n - L`.
    pub fn n_eff(&self) -> usize {
        self.x.len() - self.order
    }
}

pub fn prior_family(p: &ParamPrior) -> FamilyTag {
    match p {
        ParamPrior::Gaussian(_) => FamilyTag::Gaussian,
        ParamPrior::Poisson(_) => FamilyTag::Poisson,
        ParamPrior::Lomax(_) => FamilyTag::Lomax,
    }
}

/// Deterministic start: prior means for `w` and the parameters (`beta = 0`),
/// uniform allocations, `q_t = x_t`.
pub fn initial_state<R: Rng + ?Sized>(target: &Target, rng: &mut R) -> Result<ChainState> {
    let l = target.order;
    let w = target.weight_prior.prior_mean(l)?;
    let ig_mean = |u: f64, v: f64| if u > 1.0 { v / (u - 1.0) } else { v / u };
    let theta = match target.param_prior {
        ParamPrior::Gaussian(p) => Theta::Gaussian { mu: p.mu0, sigma2: ig_mean(p.u0, p.v0), rho: vec![0.0; l] },
        ParamPrior::Poisson(p) => Theta::Poisson { lambda: p.u_lambda / p.v_lambda, gamma: p.u_gamma / p.v_gamma },
        ParamPrior::Lomax(p) => Theta::Lomax {
            alpha: (p.u_alpha / p.v_alpha).max(2.0),
            phi: ig_mean(p.u_phi, p.v_phi),
            beta: vec![0.0; target.design.as_ref().map_or(0, |d| d.ncols())],
        },
    };
    let z = (0..target.n_eff()).map(|_| rng.random_range(0..l)).collect();
    let q = (target.tag() == FamilyTag::Poisson).then(|| target.x[l..].iter().map(|&v| v as u64).collect());
    Ok(ChainState { w, theta, z, q })
}

/// Categorical draw from unnormalized log probabilities.
pub(crate) fn draw_from_logs<R: Rng + ?Sized>(logs: &mut [f64], rng: &mut R) -> Option<usize> {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return None;
    }
    let mut total = 0.0;
    for v in logs.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in logs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return Some(i);
            }
        }
    }
    Some(last)
}

/// Draw every `z_t` from `P(z_t = l) ∝ w_l f_l(x_t | x_{t-l})`. For the
/// Poisson model the component term conditions on `q_t`.
pub fn update_allocations<R: Rng + ?Sized>(state: &mut ChainState, target: &Target, rng: &mut R) -> Result<()> {
    let l = target.order;
    let x = target.x;
    let lw: Vec<f64> = state.w.iter().map(|w| w.ln()).collect();
    let mut buf = vec![0.0; l];
    let fail = |t: usize| Error::Numeric(format!("all allocation probabilities vanish at t = {}", t + 1));
    match &state.theta {
        Theta::Gaussian { mu, sigma2, rho } => {
            let k = gaussian::Kernels::new(*mu, *sigma2, rho);
            for t in l..x.len() {
                for j in 0..l {
                    buf[j] = lw[j] + k.ln_pdf(j, x[t], x[t - 1 - j]);
                }
                state.z[t - l] = draw_from_logs(&mut buf, rng).ok_or_else(|| fail(t))?;
            }
        }
        Theta::Poisson { lambda, gamma } => {
            let q = state.q.as_ref().expect("poisson latents");
            let p = gamma / (lambda + gamma);
            let (lp, lq) = (p.ln(), (-p).ln_1p());
            for t in l..x.len() {
                let k = x[t] as u64 - q[t - l];
                for j in 0..l {
                    let v = x[t - 1 - j] as u64;
                    buf[j] = lw[j] + poisson::ln_binom(&target.ln_fact, k, v, lp, lq);
                }
                state.z[t - l] = draw_from_logs(&mut buf, rng).ok_or_else(|| fail(t))?;
            }
        }
        Theta::Lomax { alpha, phi, beta } => {
            let eps = lomax::residuals(x, target.design.as_ref(), beta);
            let la = alpha.ln();
            for t in l..x.len() {
                for j in 0..l {
                    buf[j] = lw[j] + lomax::ln_kernel(eps[t], eps[t - 1 - j], *phi, *alpha, la);
                }
                state.z[t - l] = draw_from_logs(&mut buf, rng).ok_or_else(|| fail(t))?;
            }
        }
    }
    Ok(())
}

pub fn update_weights<R: Rng + ?Sized>(state: &mut ChainState, prior: &WeightPrior, rng: &mut R) -> Result<()> {
    state.w = prior.posterior_sample(&state.counts(state.w.len()), rng)?;
    Ok(())
}

/// One full sweep. `adapt_at` carries the iteration index while steps are
/// being adapted.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    cfg: &FitConfig,
    tuners: &mut Tuners,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    let at = |block: &'static str| move |e: Error| tag_error(e, block);
    update_allocations(state, target, rng).map_err(at("allocations"))?;
    update_weights(state, target.weight_prior, rng).map_err(at("weights"))?;
    match target.param_prior {
        ParamPrior::Gaussian(p) => gaussian::update(state, target, p, rng).map_err(at("gaussian"))?,
        ParamPrior::Poisson(p) => {
            poisson::update_params(state, target, p, tuners, adapt_at, rng).map_err(at("poisson"))?;
            poisson::update_latents(state, target, tuners.get("q"), rng).map_err(at("q"))?;
        }
        ParamPrior::Lomax(p) => lomax::update(state, target, p, cfg.collapse_alpha, tuners, adapt_at, rng).map_err(at("lomax"))?,
    }
    Ok(())
}

fn tag_error(e: Error, block: &str) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!("block {block}: {m}")),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub chain: usize,
    /// 0-based sweep index.
    pub iter: usize,
    pub w: Vec<f64>,
    pub theta: Theta,
    pub z: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub family: FamilyTag,
    pub order: usize,
    pub draws: Vec<Draw>,
    /// Post-burn-in acceptance rate per Metropolis block, one map per chain.
    pub acceptance: Vec<BTreeMap<String, f64>>,
    /// Step sizes in force after burn-in, one map per chain.
    pub steps: Vec<BTreeMap<String, f64>>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn scalar_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.order).map(|i| format!("w_{i}")).collect();
        if let Some(d) = self.draws.first() {
            names.extend(theta_scalars(&d.theta).into_iter().map(|(n, _)| n));
        }
        names
    }

    /// Scalars of draw `i` in the order of [`PosteriorSamples::scalar_names`].
    pub fn scalars(&self, i: usize) -> Vec<f64> {
        let d = &self.draws[i];
        let mut v = d.w.clone();
        v.extend(theta_scalars(&d.theta).into_iter().map(|(_, x)| x));
        v
    }

    /// The column of scalar `name` across draws.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.scalar_names().iter().position(|n| n == name)?;
        Some((0..self.len()).map(|i| self.scalars(i)[j]).collect())
    }

    /// The MTD model for draw `i` (for the regression model, the model of
    /// `eps_t`).
    pub fn model(&self, i: usize) -> Result<MtdModel> {
        let d = &self.draws[i];
        MtdModel::new(d.w.clone(), components(&d.theta, self.order)?)
    }
}

/// Named scalars of a parameter set; `beta` and `rho` are expanded.
pub fn theta_scalars(theta: &Theta) -> Vec<(String, f64)> {
    match theta {
        Theta::Gaussian { mu, sigma2, rho } => {
            let mut v = vec![("mu".to_string(), *mu), ("sigma2".to_string(), *sigma2)];
            v.extend(rho.iter().enumerate().map(|(i, r)| (format!("rho_{}", i + 1), *r)));
            v
        }
        Theta::Poisson { lambda, gamma } => vec![
            ("lambda".into(), *lambda),
            ("gamma".into(), *gamma),
            ("lambda_plus_gamma".into(), lambda + gamma),
        ],
        Theta::Lomax { alpha, phi, beta } => {
            let mut v = vec![("alpha".to_string(), *alpha), ("phi".to_string(), *phi)];
            v.extend(beta.iter().enumerate().map(|(i, b)| (format!("beta_{}", i + 1), *b)));
            v
        }
    }
}

/// Inverse of [`theta_scalars`]: rebuild a parameter set of family `tag`
/// from named scalars. Derived scalars such as `lambda_plus_gamma` are
/// ignored.
pub fn theta_from_scalars(tag: FamilyTag, order: usize, dim_beta: usize, get: impl Fn(&str) -> Option<f64>) -> Result<Theta> {
    let need = |name: &str| get(name).ok_or_else(|| Error::Contract(format!("missing parameter column '{name}'")));
    Ok(match tag {
        FamilyTag::Gaussian => Theta::Gaussian {
            mu: need("mu")?,
            sigma2: need("sigma2")?,
            rho: (1..=order).map(|i| need(&format!("rho_{i}"))).collect::<Result<_>>()?,
        },
        FamilyTag::Poisson => Theta::Poisson { lambda: need("lambda")?, gamma: need("gamma")? },
        FamilyTag::Lomax => Theta::Lomax {
            alpha: need("alpha")?,
            phi: need("phi")?,
            beta: (1..=dim_beta).map(|i| need(&format!("beta_{i}"))).collect::<Result<_>>()?,
        },
        other => return Err(Error::Unsupported(format!("{other} is a simulation-only family"))),
    })
}

/// Transition components, one per lag.
pub fn components(theta: &Theta, order: usize) -> Result<Vec<Transition>> {
    match theta {
        Theta::Gaussian { mu, sigma2, rho } => {
            if rho.len() != order {
                return Err(Error::Contract(format!("{} correlations for order {order}", rho.len())));
            }
            rho.iter().map(|&r| Transition::gaussian(*mu, *sigma2, r)).collect()
        }
        Theta::Poisson { lambda, gamma } => Ok(vec![Transition::poisson(*lambda, *gamma)?; order]),
        Theta::Lomax { alpha, phi, .. } => Ok(vec![Transition::lomax_shifted(*phi, *alpha)?; order]),
    }
}

/// Run one chain from the deterministic start.
pub fn run_chain<R: Rng + ?Sized>(target: &Target, cfg: &FitConfig, chain: usize, rng: &mut R) -> Result<(Vec<Draw>, Tuners)> {
    cfg.validate()?;
    let has_beta = target.design.is_some();
    let mut tuners = Tuners::new(target.tag(), cfg, has_beta);
    let mut state = initial_state(target, rng)?;
    let mut draws = Vec::with_capacity(cfg.stored_draws());
    for i in 0..cfg.iters {
        if i == cfg.burnin {
            tuners.blocks.values_mut().for_each(RandomWalk::reset);
        }
        let adapt_at = (cfg.adapt && i < cfg.burnin).then_some(i);
        sweep(&mut state, target, cfg, &mut tuners, adapt_at, rng).map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("chain {chain}, iteration {i}: {m}")),
            other => other,
        })?;
        if i >= cfg.burnin && (i - cfg.burnin + 1) % cfg.thin == 0 {
            draws.push(Draw {
                chain,
                iter: i,
                w: state.w.clone(),
                theta: state.theta.clone(),
                z: cfg.store_z.then(|| state.z.clone()),
            });
        }
    }
    Ok((draws, tuners))
}

/// Fit by MCMC. Chains run in parallel on independent substreams of
/// `cfg.seed` and are concatenated in chain order.
pub fn run_fit(
    data: &SeriesData,
    order: usize,
    weight_prior: &WeightPrior,
    param_prior: &ParamPrior,
    cfg: &FitConfig,
) -> Result<PosteriorSamples> {
    cfg.validate()?;
    let target = Target::new(data, order, weight_prior, param_prior)?;
    let results: Vec<Result<(Vec<Draw>, Tuners)>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(cfg.seed, c as u64);
            run_chain(&target, cfg, c, &mut rng)
        })
        .collect();
    let mut out = PosteriorSamples {
        family: target.tag(),
        order,
        draws: Vec::with_capacity(cfg.chains * cfg.stored_draws()),
        acceptance: Vec::new(),
        steps: Vec::new(),
    };
    for r in results {
        let (draws, tuners) = r?;
        out.draws.extend(draws);
        out.acceptance.push(tuners.blocks.iter().map(|(k, v)| (k.to_string(), v.rate())).collect());
        out.steps.push(tuners.blocks.iter().filter(|(k, _)| **k != "q").map(|(k, v)| (k.to_string(), v.step)).collect());
    }
    Ok(out)
}
