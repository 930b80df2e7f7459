//! Shifted-Lomax model updates, optionally with the multiplicative
//! regression `y_t = exp(x_t' beta) eps_t`.
//!
//! Component `l` has `eps_t | eps_{t-l} ~ Lomax(scale = phi + eps_{t-l}, shape = alpha)`.
//! With `S(phi) = sum_t ln(1 + eps_t / (phi + eps_{t-l}))`:
//!
//! * `alpha | ... ~ Ga(u_alpha + n - L, v_alpha + S(phi))` restricted to
//!   `alpha > 1`, where the prior lives (the marginal is `Lomax(phi, alpha - 1)`);
//! * `phi` by a log-scale random walk, either on its full conditional or with
//!   `alpha` integrated out, in which case
//!   `p(phi | ...) ∝ IG(phi) prod_t (phi + eps_{t-l} + eps_t)^(-1) (v_alpha + S(phi))^(-a) Q(a, v_alpha + S(phi))`
//!   with `a = u_alpha + n - L` and `Q` the regularized upper incomplete gamma function,
//!   and `alpha` is drawn right after from its conditional;
//! * `beta` by a Gaussian random walk on the likelihood of `y`, which
//!   carries the Jacobian `exp(-x_t' beta)` per modelled observation.

use nalgebra::DMatrix;
use rand::Rng;

use super::{ChainState, RandomWalk, Target, Tuners};
use statrs::function::gamma::gamma_ur;

use crate::dists::{gamma_variate, ln_normal, std_normal, Dist};
use crate::error::{Error, Result};
use crate::priors::{LomaxPrior, Theta};

/// `eps_t = y_t exp(-x_t' beta)`, or `y` itself without covariates.
pub fn residuals(y: &[f64], design: Option<&DMatrix<f64>>, beta: &[f64]) -> Vec<f64> {
    match design {
        None => y.to_vec(),
        Some(x) => y
            .iter()
            .enumerate()
            .map(|(t, &v)| v * (-(0..beta.len()).map(|j| x[(t, j)] * beta[j]).sum::<f64>()).exp())
            .collect(),
    }
}

/// `ln Lomax(e; phi + v, alpha)`.
#[inline]
pub(crate) fn ln_kernel(e: f64, v: f64, phi: f64, alpha: f64, ln_alpha: f64) -> f64 {
    let s = phi + v;
    ln_alpha - s.ln() - (alpha + 1.0) * (e / s).ln_1p()
}

fn pairs<'a>(eps: &'a [f64], order: usize, z: &'a [usize]) -> impl Iterator<Item = (f64, f64)> + 'a {
    z.iter().enumerate().map(move |(i, &k)| {
        let t = order + i;
        (eps[t], eps[t - 1 - k])
    })
}

/// `S(phi)`.
pub fn alpha_rate_sum(eps: &[f64], order: usize, z: &[usize], phi: f64) -> f64 {
    pairs(eps, order, z).map(|(e, v)| (e / (phi + v)).ln_1p()).sum()
}

/// Shape and rate of the gamma full conditional of `alpha`.
pub fn alpha_conditional(eps: &[f64], order: usize, z: &[usize], phi: f64, p: &LomaxPrior) -> (f64, f64) {
    (p.u_alpha + z.len() as f64, p.v_alpha + alpha_rate_sum(eps, order, z, phi))
}

fn ln_ig(phi: f64, p: &LomaxPrior) -> f64 {
    -(p.u_phi + 1.0) * phi.ln() - p.v_phi / phi
}

/// Unnormalized log full conditional of `phi` given `alpha`.
pub fn ln_cond_phi(phi: f64, alpha: f64, eps: &[f64], order: usize, z: &[usize], p: &LomaxPrior) -> f64 {
    if phi <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let lik: f64 = pairs(eps, order, z)
        .map(|(e, v)| {
            let s = phi + v;
            -s.ln() - (alpha + 1.0) * (e / s).ln_1p()
        })
        .sum();
    ln_ig(phi, p) + lik
}

/// Unnormalized log density of `phi` with `alpha` integrated out.
pub fn ln_cond_phi_collapsed(phi: f64, eps: &[f64], order: usize, z: &[usize], p: &LomaxPrior) -> f64 {
    if phi <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut lsum = 0.0;
    let mut s = 0.0;
    for (e, v) in pairs(eps, order, z) {
        let b = phi + v;
        lsum += (b + e).ln();
        s += (e / b).ln_1p();
    }
    let (a, b) = (p.u_alpha + z.len() as f64, p.v_alpha + s);
    ln_ig(phi, p) - lsum - a * b.ln() + gamma_ur(a, b).ln()
}

/// `Ga(shape, rate)` restricted to `(1, inf)`.
pub fn truncated_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let above = gamma_ur(shape, rate);
    if above > 0.25 {
        loop {
            let a = gamma_variate(shape, rate, rng);
            if a > 1.0 {
                return Ok(a);
            }
        }
    }
    // inverse cdf on the upper tail
    let d = Dist::gamma(shape, rate)?;
    let u = 1.0 - above * (1.0 - rng.random::<f64>());
    let a = d.quantile(u)?;
    if a > 1.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(Error::Numeric(format!("truncated gamma draw failed for Ga({shape}, {rate})")))
    }
}

/// Unnormalized log full conditional of `beta`.
pub fn ln_cond_beta(
    beta: &[f64],
    y: &[f64],
    design: &DMatrix<f64>,
    order: usize,
    z: &[usize],
    alpha: f64,
    phi: f64,
    p: &LomaxPrior,
) -> f64 {
    let eps = residuals(y, Some(design), beta);
    let la = alpha.ln();
    let mut s: f64 = pairs(&eps, order, z).map(|(e, v)| ln_kernel(e, v, phi, alpha, la)).sum();
    // Jacobian: d eps_t / d y_t = exp(-x_t' beta) = eps_t / y_t
    for t in order..y.len() {
        s += (eps[t] / y[t]).ln();
    }
    if let Some(sd) = p.beta_sd {
        s += beta.iter().map(|b| ln_normal(*b, 0.0, sd)).sum::<f64>();
    }
    s
}

fn params(theta: &mut Theta) -> Result<(&mut f64, &mut f64, &mut Vec<f64>)> {
    match theta {
        Theta::Lomax { alpha, phi, beta } => Ok((alpha, phi, beta)),
        _ => Err(Error::Contract("lomax update on a non-lomax state".into())),
    }
}

fn check(alpha: f64, phi: f64) -> Result<()> {
    if alpha.is_finite() && phi.is_finite() && alpha > 0.0 && phi > 0.0 {
        Ok(())
    } else {
        Err(Error::Numeric(format!("alpha = {alpha}, phi = {phi}")))
    }
}

/// Exact draw of `alpha` from its gamma full conditional.
pub fn update_alpha<R: Rng + ?Sized>(state: &mut ChainState, target: &Target, p: &LomaxPrior, rng: &mut R) -> Result<()> {
    let (alpha, phi, beta) = params(&mut state.theta)?;
    let eps = residuals(target.x, target.design.as_ref(), beta);
    let (a, b) = alpha_conditional(&eps, target.order, &state.z, *phi, p);
    *alpha = truncated_gamma(a, b, rng)?;
    check(*alpha, *phi)
}

/// Log-scale random walk on `phi` given `alpha`.
pub fn update_phi<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    p: &LomaxPrior,
    tuner: &mut RandomWalk,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    let (alpha, phi, beta) = params(&mut state.theta)?;
    let eps = residuals(target.x, target.design.as_ref(), beta);
    let (a, z, order) = (*alpha, &state.z, target.order);
    let f = |e: f64| ln_cond_phi(e.exp(), a, &eps, order, z, p) + e;
    let e0 = phi.ln();
    *phi = tuner.step(e0, f(e0), f, adapt_at, rng).0.exp();
    check(*alpha, *phi)
}

/// Log-scale random walk on `phi` with `alpha` integrated out. Follow
/// with [`update_alpha`] to complete a joint draw of the pair.
pub fn update_phi_collapsed<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    p: &LomaxPrior,
    tuner: &mut RandomWalk,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    let (alpha, phi, beta) = params(&mut state.theta)?;
    let eps = residuals(target.x, target.design.as_ref(), beta);
    let (z, order) = (&state.z, target.order);
    let f = |e: f64| ln_cond_phi_collapsed(e.exp(), &eps, order, z, p) + e;
    let e0 = phi.ln();
    *phi = tuner.step(e0, f(e0), f, adapt_at, rng).0.exp();
    check(*alpha, *phi)
}

/// Gaussian random walk on `beta`; a no-op without covariates.
pub fn update_beta<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    p: &LomaxPrior,
    tuner: &mut RandomWalk,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    let Some(x) = &target.design else {
        return Ok(());
    };
    let (alpha, phi, beta) = params(&mut state.theta)?;
    let f = |b: &[f64]| ln_cond_beta(b, target.x, x, target.order, &state.z, *alpha, *phi, p);
    let prop: Vec<f64> = beta.iter().map(|b| b + tuner.step * std_normal(rng)).collect();
    let (cur, new) = (f(beta), f(&prop));
    let ok = new.is_finite() && (new >= cur || rng.random::<f64>().ln() < new - cur);
    tuner.record(ok);
    if let Some(i) = adapt_at {
        tuner.adapt(ok, i);
    }
    if ok {
        *beta = prop;
    }
    Ok(())
}

/// `(phi, alpha)` jointly (collapsed) or `alpha` then `phi`, then `beta`.
pub fn update<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    p: &LomaxPrior,
    collapse: bool,
    tuners: &mut Tuners,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    if collapse {
        update_phi_collapsed(state, target, p, tuners.get("phi"), adapt_at, rng)?;
        update_alpha(state, target, p, rng)?;
    } else {
        update_alpha(state, target, p, rng)?;
        update_phi(state, target, p, tuners.get("phi"), adapt_at, rng)?;
    }
    if target.design.is_some() {
        update_beta(state, target, p, tuners.get("beta"), adapt_at, rng)?;
    }
    Ok(())
}
