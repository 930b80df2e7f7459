//! Gaussian model updates.
//!
//! Given the allocations, observation `t` with lag `l = z_t + 1` has
//! `x_t ~ N((1 - rho_l) mu + rho_l x_{t-l}, sigma2 (1 - rho_l^2))`, so the
//! full conditionals are
//!
//! * `mu`: normal, with precision `1/sigma0_sq + sum_t (1 - rho)^2 / (sigma2 (1 - rho^2))`;
//! * `sigma2`: `IG(u0 + (n - L)/2, v0 + sum_t e_t^2 / (2 (1 - rho^2)))` with
//!   `e_t = x_t - rho x_{t-l} - (1 - rho) mu`;
//! * `rho_l`: proportional to `(1 - rho^2)^(-M_l/2) exp(-sum_{z_t = l} e_t^2 / (2 sigma2 (1 - rho^2)))`
//!   on `(-1, 1)`, updated by slice sampling.
//!
//! All three work from per-lag sufficient statistics.

use rand::Rng;

use super::slice::{slice_step, MAX_STEPS, WIDTH};
use super::{ChainState, Target};
use crate::dists::{gamma_variate, std_normal};
use crate::error::{Error, Result};
use crate::priors::{GaussianPrior, Theta};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Per-lag component log densities with constants hoisted.
pub(crate) struct Kernels {
    coef: Vec<f64>,
    icpt: Vec<f64>,
    half_prec: Vec<f64>,
    ln_norm: Vec<f64>,
}

impl Kernels {
    pub(crate) fn new(mu: f64, sigma2: f64, rho: &[f64]) -> Self {
        let var: Vec<f64> = rho.iter().map(|r| sigma2 * (1.0 - r * r)).collect();
        Kernels {
            coef: rho.to_vec(),
            icpt: rho.iter().map(|r| (1.0 - r) * mu).collect(),
            half_prec: var.iter().map(|v| 0.5 / v).collect(),
            ln_norm: var.iter().map(|v| -0.5 * (LN_2PI + v.ln())).collect(),
        }
    }

    #[inline]
    pub(crate) fn ln_pdf(&self, j: usize, x: f64, v: f64) -> f64 {
        let e = x - self.icpt[j] - self.coef[j] * v;
        self.ln_norm[j] - e * e * self.half_prec[j]
    }
}

/// Sums over the observations allocated to each lag, on data shifted by
/// its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub shift: f64,
    pub m: Vec<usize>,
    sx: Vec<f64>,
    sv: Vec<f64>,
    sxx: Vec<f64>,
    svv: Vec<f64>,
    sxv: Vec<f64>,
}

impl GroupStats {
    pub fn new(x: &[f64], order: usize, z: &[usize]) -> Self {
        let shift = x.iter().sum::<f64>() / x.len() as f64;
        let mut g = GroupStats {
            shift,
            m: vec![0; order],
            sx: vec![0.0; order],
            sv: vec![0.0; order],
            sxx: vec![0.0; order],
            svv: vec![0.0; order],
            sxv: vec![0.0; order],
        };
        for (i, &k) in z.iter().enumerate() {
            let t = order + i;
            let a = x[t] - shift;
            let b = x[t - 1 - k] - shift;
            g.m[k] += 1;
            g.sx[k] += a;
            g.sv[k] += b;
            g.sxx[k] += a * a;
            g.svv[k] += b * b;
            g.sxv[k] += a * b;
        }
        g
    }

    /// `sum_{z_t = l} (x_t - rho x_{t-l} - (1 - rho) mu)^2`.
    pub fn sum_sq(&self, l: usize, rho: f64, mu: f64) -> f64 {
        let c = (1.0 - rho) * (mu - self.shift);
        let s = self.sxx[l] - 2.0 * rho * self.sxv[l] + rho * rho * self.svv[l] - 2.0 * c * (self.sx[l] - rho * self.sv[l])
            + self.m[l] as f64 * c * c;
        s.max(0.0)
    }

    /// `sum_{z_t = l} (x_t - rho x_{t-l})` in original units.
    fn sum_lin(&self, l: usize, rho: f64) -> f64 {
        self.sx[l] - rho * self.sv[l] + self.m[l] as f64 * (1.0 - rho) * self.shift
    }
}

/// Mean and variance of the normal full conditional of `mu`.
pub fn mu_conditional(g: &GroupStats, sigma2: f64, rho: &[f64], p: &GaussianPrior) -> (f64, f64) {
    let mut prec = 1.0 / p.sigma0_sq;
    let mut lin = p.mu0 / p.sigma0_sq;
    for (l, &r) in rho.iter().enumerate() {
        if g.m[l] == 0 {
            continue;
        }
        let d = sigma2 * (1.0 + r);
        prec += g.m[l] as f64 * (1.0 - r) / d;
        lin += g.sum_lin(l, r) / d;
    }
    (lin / prec, 1.0 / prec)
}

/// Shape and scale of the inverse-gamma full conditional of `sigma2`.
pub fn sigma2_conditional(g: &GroupStats, mu: f64, rho: &[f64], p: &GaussianPrior) -> (f64, f64) {
    let n: usize = g.m.iter().sum();
    let ss: f64 = rho
        .iter()
        .enumerate()
        .filter(|(l, _)| g.m[*l] > 0)
        .map(|(l, &r)| g.sum_sq(l, r, mu) / (2.0 * (1.0 - r * r)))
        .sum();
    (p.u0 + 0.5 * n as f64, p.v0 + ss)
}

/// Unnormalized log full conditional of `rho_l`.
pub fn rho_ln_density(g: &GroupStats, l: usize, mu: f64, sigma2: f64, r: f64) -> f64 {
    if !(r > -1.0 && r < 1.0) {
        return f64::NEG_INFINITY;
    }
    let one = 1.0 - r * r;
    -0.5 * g.m[l] as f64 * one.ln() - g.sum_sq(l, r, mu) / (2.0 * sigma2 * one)
}

pub fn draw_mu<R: Rng + ?Sized>(g: &GroupStats, sigma2: f64, rho: &[f64], p: &GaussianPrior, rng: &mut R) -> f64 {
    let (m, v) = mu_conditional(g, sigma2, rho, p);
    m + v.sqrt() * std_normal(rng)
}

pub fn draw_sigma2<R: Rng + ?Sized>(g: &GroupStats, mu: f64, rho: &[f64], p: &GaussianPrior, rng: &mut R) -> f64 {
    let (a, b) = sigma2_conditional(g, mu, rho, p);
    1.0 / gamma_variate(a, b, rng)
}

pub fn draw_rho<R: Rng + ?Sized>(g: &GroupStats, l: usize, cur: f64, mu: f64, sigma2: f64, rng: &mut R) -> Result<f64> {
    slice_step(cur, |r| rho_ln_density(g, l, mu, sigma2, r), -1.0, 1.0, WIDTH, MAX_STEPS, rng)
        .map_err(|e| Error::Numeric(format!("rho_{}: {e}", l + 1)))
}

/// `mu`, then `sigma2`, then each `rho_l`.
pub fn update<R: Rng + ?Sized>(state: &mut ChainState, target: &Target, p: &GaussianPrior, rng: &mut R) -> Result<()> {
    let g = GroupStats::new(target.x, target.order, &state.z);
    let Theta::Gaussian { mu, sigma2, rho } = &mut state.theta else {
        return Err(Error::Contract("gaussian update on a non-gaussian state".into()));
    };
    *mu = draw_mu(&g, *sigma2, rho, p, rng);
    *sigma2 = draw_sigma2(&g, *mu, rho, p, rng);
    if !(sigma2.is_finite() && *sigma2 > 0.0) {
        return Err(Error::Numeric(format!("sigma2 draw {sigma2}")));
    }
    for l in 0..rho.len() {
        rho[l] = draw_rho(&g, l, rho[l], *mu, *sigma2, rng)?;
    }
    Ok(())
}
