//! Poisson model updates through the thinning representation
//! `x_t = q_t + s_t`, `q_t ~ Pois(lambda)`, `s_t ~ Bin(x_{t-l}, gamma / (lambda + gamma))`.
//!
//! With `A = sum(x_{t-l} - x_t + 2 q_t)`, `B = sum x_{t-l}` and
//! `C = sum(x_t - q_t)`, the full conditionals are
//!
//! ```text
//! p(lambda | ...) ∝ lambda^(A + u_lambda - 1) (lambda + gamma)^(-B) exp(-lambda (n - L + v_lambda))
//! p(gamma  | ...) ∝ gamma^(C + u_gamma - 1)   (lambda + gamma)^(-B) exp(-gamma v_gamma)
//! ```
//!
//! each updated by a random walk on the log scale. Each `q_t` gets an
//! independence step with a uniform proposal on `[max(0, x_t - x_{t-l}), x_t]`.

use rand::Rng;

use super::{ChainState, RandomWalk, Target, Tuners};
use crate::error::{Error, Result};
use crate::priors::{PoissonPrior, Theta};

/// `ln k!` for `k = 0..=max`.
pub fn ln_factorial_table(max: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        t.push(acc);
    }
    t
}

/// `ln Bin(k | v, p)` given `ln p` and `ln(1 - p)`.
#[inline]
pub(crate) fn ln_binom(lf: &[f64], k: u64, v: u64, lp: f64, lq: f64) -> f64 {
    if k > v {
        return f64::NEG_INFINITY;
    }
    let (k, v) = (k as usize, v as usize);
    let mut s = lf[v] - lf[k] - lf[v - k];
    if k > 0 {
        s += k as f64 * lp;
    }
    if v > k {
        s += (v - k) as f64 * lq;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonStats {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n: f64,
}

impl PoissonStats {
    pub fn new(x: &[f64], order: usize, z: &[usize], q: &[u64]) -> Self {
        let mut s = PoissonStats { a: 0.0, b: 0.0, c: 0.0, n: z.len() as f64 };
        for (i, (&k, &qt)) in z.iter().zip(q).enumerate() {
            let t = order + i;
            let v = x[t - 1 - k];
            let qt = qt as f64;
            s.a += v - x[t] + 2.0 * qt;
            s.b += v;
            s.c += x[t] - qt;
        }
        s
    }
}

pub fn ln_cond_lambda(lambda: f64, gamma: f64, s: &PoissonStats, p: &PoissonPrior) -> f64 {
    if lambda <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (s.a + p.u_lambda - 1.0) * lambda.ln() - s.b * (lambda + gamma).ln() - lambda * (s.n + p.v_lambda)
}

pub fn ln_cond_gamma(gamma: f64, lambda: f64, s: &PoissonStats, p: &PoissonPrior) -> f64 {
    if gamma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (s.c + p.u_gamma - 1.0) * gamma.ln() - s.b * (lambda + gamma).ln() - gamma * p.v_gamma
}

/// Log of the joint pmf of `(q_t = q, s_t = x - q)` given the lagged value `v`.
pub fn ln_q_target(lf: &[f64], q: u64, x: u64, v: u64, lambda: f64, lp: f64, lq: f64) -> f64 {
    if q > x {
        return f64::NEG_INFINITY;
    }
    q as f64 * lambda.ln() - lf[q as usize] + ln_binom(lf, x - q, v, lp, lq)
}

fn stats(state: &ChainState, target: &Target) -> Result<PoissonStats> {
    let q = state.q.as_ref().ok_or_else(|| Error::Contract("poisson state without latents".into()))?;
    Ok(PoissonStats::new(target.x, target.order, &state.z, q))
}

fn params(theta: &mut Theta) -> Result<(&mut f64, &mut f64)> {
    match theta {
        Theta::Poisson { lambda, gamma } => Ok((lambda, gamma)),
        _ => Err(Error::Contract("poisson update on a non-poisson state".into())),
    }
}

/// Log-scale random walk on `lambda` given everything else.
pub fn update_lambda<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    p: &PoissonPrior,
    tuner: &mut RandomWalk,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    let s = stats(state, target)?;
    let (lambda, gamma) = params(&mut state.theta)?;
    let g = *gamma;
    let f = |e: f64| ln_cond_lambda(e.exp(), g, &s, p) + e;
    let e0 = lambda.ln();
    *lambda = tuner.step(e0, f(e0), f, adapt_at, rng).0.exp();
    if !(lambda.is_finite() && *lambda > 0.0) {
        return Err(Error::Numeric(format!("lambda = {lambda}")));
    }
    Ok(())
}

/// Log-scale random walk on `gamma` given everything else.
pub fn update_gamma<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    p: &PoissonPrior,
    tuner: &mut RandomWalk,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    let s = stats(state, target)?;
    let (lambda, gamma) = params(&mut state.theta)?;
    let lam = *lambda;
    let f = |e: f64| ln_cond_gamma(e.exp(), lam, &s, p) + e;
    let e0 = gamma.ln();
    *gamma = tuner.step(e0, f(e0), f, adapt_at, rng).0.exp();
    if !(gamma.is_finite() && *gamma > 0.0) {
        return Err(Error::Numeric(format!("gamma = {gamma}")));
    }
    Ok(())
}

/// `lambda` then `gamma`.
pub fn update_params<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &Target,
    p: &PoissonPrior,
    tuners: &mut Tuners,
    adapt_at: Option<usize>,
    rng: &mut R,
) -> Result<()> {
    update_lambda(state, target, p, tuners.get("lambda"), adapt_at, rng)?;
    update_gamma(state, target, p, tuners.get("gamma"), adapt_at, rng)
}

/// One independence step per `q_t`.
pub fn update_latents<R: Rng + ?Sized>(state: &mut ChainState, target: &Target, tuner: &mut RandomWalk, rng: &mut R) -> Result<()> {
    let Theta::Poisson { lambda, gamma } = state.theta else {
        return Err(Error::Contract("poisson update on a non-poisson state".into()));
    };
    let q = state.q.as_mut().ok_or_else(|| Error::Contract("poisson state without latents".into()))?;
    let p = gamma / (lambda + gamma);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let lf = &target.ln_fact;
    let l = target.order;
    for (i, (qt, &k)) in q.iter_mut().zip(&state.z).enumerate() {
        let t = l + i;
        let x = target.x[t] as u64;
        let v = target.x[t - 1 - k] as u64;
        let lo = x.saturating_sub(v);
        let prop = rng.random_range(lo..=x);
        let cur = ln_q_target(lf, *qt, x, v, lambda, lp, lq);
        let new = ln_q_target(lf, prop, x, v, lambda, lp, lq);
        let ok = new.is_finite() && (new >= cur || rng.random::<f64>().ln() < new - cur);
        tuner.record(ok);
        if ok {
            *qt = prop;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{ln_binomial, ln_poisson};

    #[test]
    fn factorial_table() {
        let t = ln_factorial_table(20);
        assert!((t[20] - crate::dists::ln_factorial(20)).abs() < 1e-12);
        assert_eq!(t[0], 0.0);
    }

    #[test]
    fn q_target_is_the_joint_pmf() {
        let lf = ln_factorial_table(30);
        let (lambda, gamma): (f64, f64) = (1.3, 2.1);
        let p = gamma / (lambda + gamma);
        let (lp, lq) = (p.ln(), (-p).ln_1p());
        let (x, v) = (7u64, 5u64);
        for q in 2..=7 {
            let want = ln_poisson(q, lambda) + ln_binomial(x - q, v, p);
            let got = ln_q_target(&lf, q, x, v, lambda, lp, lq);
            // differ by the q-free constant -lambda
            assert!((got - lambda - want).abs() < 1e-12, "{q}");
        }
        assert_eq!(ln_q_target(&lf, 1, x, v, lambda, lp, lq), f64::NEG_INFINITY);
    }

    #[test]
    fn conditionals_match_complete_data_likelihood_differences() {
        let x = vec![2.0, 3.0, 1.0, 4.0, 2.0, 0.0, 3.0];
        let z = vec![0, 1, 0, 1, 0];
        let q = vec![1u64, 3, 1, 0, 3];
        let s = PoissonStats::new(&x, 2, &z, &q);
        let p = PoissonPrior::default();
        let joint = |lambda: f64, gamma: f64| {
            let mut v = crate::dists::ln_gamma_pdf(lambda, p.u_lambda, p.v_lambda)
                + crate::dists::ln_gamma_pdf(gamma, p.u_gamma, p.v_gamma);
            for (i, (&k, &qt)) in z.iter().zip(&q).enumerate() {
                let t = 2 + i;
                let xt = x[t] as u64;
                v += ln_poisson(qt, lambda) + ln_binomial(xt - qt, x[t - 1 - k] as u64, gamma / (lambda + gamma));
            }
            v
        };
        let (g, l) = (1.7, 0.8);
        for (a, b) in [(0.5, 2.0), (1.1, 3.3)] {
            let want = joint(a, g) - joint(b, g);
            let got = ln_cond_lambda(a, g, &s, &p) - ln_cond_lambda(b, g, &s, &p);
            assert!((want - got).abs() < 1e-10);
            let want = joint(l, a) - joint(l, b);
            let got = ln_cond_gamma(a, l, &s, &p) - ln_cond_gamma(b, l, &s, &p);
            assert!((want - got).abs() < 1e-10);
        }
    }
}
