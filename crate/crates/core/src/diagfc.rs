//! Model checking and forecasting from posterior draws: randomized quantile
//! residuals, composition-sampled k-step forecasts, posterior summaries,
//! and the goodness-of-fit statistics used to judge them.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::dists::{normal_cdf, std_normal_quantile};
use crate::error::{Error, Result};
use crate::mcmc::{lomax, PosteriorSamples, SeriesData};
use crate::mtd::MtdModel;
use crate::priors::Theta;
use crate::rng::substream;

const CLAMP: f64 = 1e-12;

/// One residual vector (for `t = L+1..n`) per posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDraws {
    pub residuals: Vec<Vec<f64>>,
    pub discrete: bool,
    /// Cdf values clamped into `[1e-12, 1 - 1e-12]`.
    pub clamped: usize,
}

impl ResidualDraws {
    pub fn pooled(&self) -> Vec<f64> {
        self.residuals.iter().flatten().copied().collect()
    }
}

/// Residuals of series `x` under one model. Continuous families use
/// `Phi^-1(F(x_t | past))`; discrete ones draw `u ~ U(F(x_t - 1 | past), F(x_t | past))`
/// first. Returns the residuals and the number of clamped cdf values.
pub fn model_residuals<R: Rng + ?Sized>(model: &MtdModel, x: &[f64], rng: &mut R) -> Result<(Vec<f64>, usize)> {
    let l = model.order();
    if x.len() <= l {
        return Err(Error::Contract(format!("need more than {l} observations, got {}", x.len())));
    }
    if let Some((i, v)) = model.support_violation(x) {
        return Err(Error::Data(format!("observation {} = {v} is outside the state space", i + 1)));
    }
    let discrete = model.marginal().is_discrete();
    let mut hist = vec![0.0; l];
    let mut out = Vec::with_capacity(x.len() - l);
    let mut clamped = 0;
    for t in l..x.len() {
        for (k, h) in hist.iter_mut().enumerate() {
            *h = x[t - 1 - k];
        }
        let mut u = if discrete {
            let a = model.cdf_mix(x[t] - 1.0, &hist);
            let b = model.cdf_mix(x[t], &hist);
            a + (b - a) * rng.random::<f64>()
        } else {
            model.cdf_mix(x[t], &hist)
        };
        if !(CLAMP..=1.0 - CLAMP).contains(&u) {
            u = u.clamp(CLAMP, 1.0 - CLAMP);
            clamped += 1;
        }
        out.push(std_normal_quantile(u));
    }
    Ok((out, clamped))
}

/// The series the MTD of draw `i` describes: `y` itself, or
/// `eps = y exp(-x' beta)` for the regression model.
fn modelled_series(samples: &PosteriorSamples, data: &SeriesData, i: usize) -> Vec<f64> {
    match (&samples.draws[i].theta, data.covariates()) {
        (Theta::Lomax { beta, .. }, Some(x)) if !beta.is_empty() => lomax::residuals(&data.values, Some(&x), beta),
        _ => data.values.clone(),
    }
}

fn check_pair(samples: &PosteriorSamples, data: &SeriesData) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Contract("no posterior draws".into()));
    }
    if data.len() <= samples.order {
        return Err(Error::Contract(format!(
            "series of length {} is too short for order {}",
            data.len(),
            samples.order
        )));
    }
    let d = data.design.as_ref().map_or(0, |d| d.dim());
    let nb = match &samples.draws[0].theta {
        Theta::Lomax { beta, .. } => beta.len(),
        _ => 0,
    };
    if d != nb {
        return Err(Error::Contract(format!("draws carry {nb} regression coefficients but the data has {d} covariates")));
    }
    Ok(())
}

/// Residuals for every stored draw; draw `i` uses substream `i` of `seed`.
/// Because `y -> eps` is increasing for fixed `beta`, the conditional cdf of
/// `y_t` equals that of `eps_t`.
pub fn quantile_residuals(samples: &PosteriorSamples, data: &SeriesData, seed: u64) -> Result<ResidualDraws> {
    check_pair(samples, data)?;
    let per: Vec<Result<(Vec<f64>, usize)>> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let m = samples.model(i)?;
            let x = modelled_series(samples, data, i);
            model_residuals(&m, &x, &mut substream(seed, i as u64))
        })
        .collect();
    let mut out = ResidualDraws { residuals: Vec::with_capacity(per.len()), discrete: samples.family.is_discrete(), clamped: 0 };
    for r in per {
        let (v, c) = r?;
        out.residuals.push(v);
        out.clamped += c;
    }
    Ok(out)
}

/// Sorted-residual table for QQ plots: for each plotting position
/// `p_i = (i - 0.5)/m`, the normal quantile and the posterior mean and
/// 2.5%/97.5% quantiles of the `i`-th order statistic across draws.
pub fn qq_table(r: &ResidualDraws) -> Vec<[f64; 5]> {
    let m = r.residuals.first().map_or(0, Vec::len);
    let sorted: Vec<Vec<f64>> = r
        .residuals
        .iter()
        .map(|v| {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            s
        })
        .collect();
    (0..m)
        .map(|i| {
            let p = (i as f64 + 0.5) / m as f64;
            let mut col: Vec<f64> = sorted.iter().map(|s| s[i]).collect();
            col.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            [p, std_normal_quantile(p), mean, quantile_sorted(&col, 0.025), quantile_sorted(&col, 0.975)]
        })
        .collect()
}

/// Predictive sample paths, one row of `k` values per posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub k: usize,
    pub paths: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub step: usize,
    pub level: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

impl Forecast {
    pub fn step_values(&self, j: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p[j]).collect()
    }

    /// Equal-tailed intervals per step and level.
    pub fn intervals(&self, levels: &[f64]) -> Result<Vec<Interval>> {
        for &lv in levels {
            if !(lv > 0.0 && lv < 1.0) {
                return Err(Error::InvalidParameter(format!("interval level {lv} must lie in (0, 1)")));
            }
        }
        let mut out = Vec::new();
        for j in 0..self.k {
            let mut v = self.step_values(j);
            v.sort_by(f64::total_cmp);
            let median = quantile_sorted(&v, 0.5);
            for &lv in levels {
                let a = 0.5 * (1.0 - lv);
                out.push(Interval {
                    step: j + 1,
                    level: lv,
                    lower: quantile_sorted(&v, a),
                    median,
                    upper: quantile_sorted(&v, 1.0 - a),
                });
            }
        }
        Ok(out)
    }
}

/// `k` values following `history` (time order) by composition: at each
/// step a lag is drawn from `w`, then a value from that lag's transition.
pub fn forecast_path<R: Rng + ?Sized>(model: &MtdModel, history: &[f64], k: usize, rng: &mut R) -> Result<Vec<f64>> {
    let l = model.order();
    if history.len() < l {
        return Err(Error::Contract(format!("forecasting needs {l} past values, got {}", history.len())));
    }
    let mut x: Vec<f64> = history[history.len() - l..].to_vec();
    for _ in 0..k {
        let lag = model.draw_lag(rng);
        let v = x[x.len() - lag];
        x.push(model.components()[lag - 1].draw(v, rng));
    }
    Ok(x.split_off(l))
}

/// Posterior predictive paths for `t = n+1..n+k`, draw `i` on substream
/// `i` of `seed`.
pub fn predict(samples: &PosteriorSamples, data: &SeriesData, k: usize, seed: u64) -> Result<Forecast> {
    if k == 0 {
        return Err(Error::InvalidParameter("forecast horizon must be at least 1".into()));
    }
    check_pair(samples, data)?;
    let n = data.len();
    let future: Option<Vec<Vec<f64>>> = match &data.design {
        None => None,
        Some(d) => Some(
            (n..n + k)
                .map(|t| d.row(t).ok_or_else(|| Error::Contract(format!("no covariate row for t = {}", t + 1))))
                .collect::<Result<_>>()?,
        ),
    };
    let paths: Vec<Result<Vec<f64>>> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let m = samples.model(i)?;
            let x = modelled_series(samples, data, i);
            let mut path = forecast_path(&m, &x, k, &mut substream(seed, i as u64))?;
            if let (Some(rows), Theta::Lomax { beta, .. }) = (&future, &samples.draws[i].theta) {
                for (v, r) in path.iter_mut().zip(rows) {
                    *v *= r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp();
                }
            }
            Ok(path)
        })
        .collect();
    Ok(Forecast { k, paths: paths.into_iter().collect::<Result<_>>()? })
}

/// Posterior predictive density (pmf for count families) and cdf of the
/// next value `y_{n+1}` at each point of `grid`, averaged over draws.
/// Returns `(y, density, cdf)` rows.
pub fn one_step_density(samples: &PosteriorSamples, data: &SeriesData, grid: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    check_pair(samples, data)?;
    let n = data.len();
    let l = samples.order;
    let row = match &data.design {
        None => None,
        Some(d) => Some(d.row(n).ok_or_else(|| Error::Contract(format!("no covariate row for t = {}", n + 1)))?),
    };
    let mut acc = vec![(0.0, 0.0); grid.len()];
    for i in 0..samples.len() {
        let m = samples.model(i)?;
        let x = modelled_series(samples, data, i);
        let hist: Vec<f64> = (1..=l).map(|k| x[n - k]).collect();
        let scale = match (&row, &samples.draws[i].theta) {
            (Some(r), Theta::Lomax { beta, .. }) => r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp(),
            _ => 1.0,
        };
        for (a, &y) in acc.iter_mut().zip(grid) {
            let e = y / scale;
            let f = if m.marginal().in_state_space(e) { m.transition_pdf(e, &hist)? / scale } else { 0.0 };
            a.0 += f;
            a.1 += m.transition_cdf(e, &hist)?;
        }
    }
    let k = samples.len() as f64;
    Ok(grid.iter().zip(acc).map(|(&y, (f, c))| (y, f / k, c / k)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    /// `(probability, quantile)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub ess: f64,
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Effective sample size by Geyer's initial positive sequence.
pub fn ess(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let acov = |k: usize| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = acov(0);
    if g0 <= 0.0 {
        return n as f64;
    }
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = (acov(k) + acov(k + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    n as f64 / tau.max(1.0 / n as f64)
}

pub fn summarize(x: &[f64], probs: &[f64]) -> Result<Summary> {
    if x.is_empty() {
        return Err(Error::Contract("cannot summarize an empty chain".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = if x.len() > 1 {
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Summary {
        mean,
        sd,
        quantiles: probs.iter().map(|&p| (p, quantile_sorted(&s, p))).collect(),
        ess: ess(x),
    })
}

/// Summaries of every scalar, each chain's ESS added up.
pub fn summarize_samples(samples: &PosteriorSamples, probs: &[f64]) -> Result<BTreeMap<String, Summary>> {
    let names = samples.scalar_names();
    let nchains = samples.draws.iter().map(|d| d.chain + 1).max().unwrap_or(0);
    let mut out = BTreeMap::new();
    for (j, name) in names.iter().enumerate() {
        let col: Vec<f64> = (0..samples.len()).map(|i| samples.scalars(i)[j]).collect();
        let mut s = summarize(&col, probs)?;
        if nchains > 1 {
            s.ess = (0..nchains)
                .map(|c| {
                    let v: Vec<f64> = samples.draws.iter().zip(&col).filter(|(d, _)| d.chain == c).map(|(_, v)| *v).collect();
                    ess(&v)
                })
                .sum();
        }
        out.insert(name.clone(), s);
    }
    Ok(out)
}

/// One-sample Kolmogorov-Smirnov statistic against the cdf `f`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], f: F) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = f(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS p-value with Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lam * lam).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// KS test of `xs` against the standard normal: `(D, p-value)`.
pub fn ks_normal(xs: &[f64]) -> (f64, f64) {
    let d = ks_statistic(xs, normal_cdf);
    (d, ks_pvalue(d, xs.len()))
}

/// Pearson chi-square goodness of fit of integer-valued `xs` against pmf
/// `p` on `0..`. Adjacent cells are pooled left to right until each
/// expected count is at least 5; the last cell absorbs the upper tail. Returns
/// `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof<F: Fn(u64) -> f64>(xs: &[f64], pmf: F) -> (f64, usize, f64) {
    let n = xs.len() as f64;
    let max = xs.iter().fold(0.0f64, |a, &b| a.max(b)) as u64;
    let mut probs: Vec<f64> = (0..=max).map(&pmf).collect();
    let mut counts = vec![0.0; probs.len()];
    for &x in xs {
        counts[x as usize] += 1.0;
    }
    let head: f64 = probs.iter().sum();
    // fold the unobserved tail into the last cell
    *probs.last_mut().expect("nonempty") += (1.0 - head).max(0.0);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(&probs) {
        o += c;
        e += p * n;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = cells.len().saturating_sub(1);
    let p = if df == 0 { 1.0 } else { gamma_ur(0.5 * df as f64, 0.5 * stat) };
    (stat, df, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{std_normal, Dist};
    use crate::mcmc::Draw;
    use crate::mtd::Init;
    use crate::rng::seeded;
    use crate::transitions::{FamilyTag, Transition};

    fn single_draw(family: FamilyTag, w: Vec<f64>, theta: Theta) -> PosteriorSamples {
        PosteriorSamples {
            family,
            order: w.len(),
            draws: vec![Draw { chain: 0, iter: 0, w, theta, z: None }],
            acceptance: vec![],
            steps: vec![],
        }
    }

    #[test]
    fn constant_chain_summary() {
        let s = summarize(&[2.5; 50], &[0.025, 0.5, 0.975]).unwrap();
        assert_eq!(s.sd, 0.0);
        assert!(s.quantiles.iter().all(|(_, q)| *q == 2.5));
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert!((quantile_sorted(&v, 0.1) - 1.3).abs() < 1e-15);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }

    #[test]
    fn iid_chain_ess() {
        let mut rng = seeded(1);
        let x: Vec<f64> = (0..10_000).map(|_| std_normal(&mut rng)).collect();
        let s = summarize(&x, &[]).unwrap();
        assert!(s.mean.abs() < 0.04);
        assert!((s.ess / 1e4 - 1.0).abs() < 0.15, "{}", s.ess);
    }

    #[test]
    fn ar1_chain_ess() {
        let mut rng = seeded(2);
        let n = 100_000;
        let mut x = vec![0.0; n];
        for t in 1..n {
            x[t] = 0.9 * x[t - 1] + std_normal(&mut rng);
        }
        let want = n as f64 * 0.1 / 1.9;
        let got = ess(&x);
        assert!((got / want - 1.0).abs() < 0.2, "{got} vs {want}");
    }

    #[test]
    fn ks_and_chi_square_calibration() {
        let mut rng = seeded(3);
        let x: Vec<f64> = (0..5000).map(|_| std_normal(&mut rng)).collect();
        assert!(ks_normal(&x).1 > 0.01);
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.2).collect();
        assert!(ks_normal(&shifted).1 < 0.01);
        // known KS critical value: D = 1.63/sqrt(n) sits at p ~ 0.01
        let p = ks_pvalue(1.628 / (1000f64).sqrt(), 1000);
        assert!((p - 0.01).abs() < 0.002, "{p}");
        let d = Dist::poisson(3.0).unwrap();
        let xs: Vec<f64> = (0..5000).map(|_| d.sample(&mut rng)).collect();
        let (_, df, p) = chi_square_gof(&xs, |k| d.pdf(k as f64));
        assert!(df >= 5 && p > 0.01, "{df} {p}");
        let (_, _, p) = chi_square_gof(&xs, |k| Dist::poisson(3.3).unwrap().pdf(k as f64));
        assert!(p < 0.01);
    }

    #[test]
    fn degenerate_posterior_predicts_the_marginal() {
        let s = single_draw(FamilyTag::Gaussian, vec![1.0], Theta::Gaussian { mu: 2.0, sigma2: 9.0, rho: vec![0.0] });
        let data = SeriesData::new(vec![0.0, 1.0, 5.0]);
        let mut big = s.clone();
        big.draws = vec![s.draws[0].clone(); 20_000];
        let f = predict(&big, &data, 3, 7).unwrap();
        for j in 0..3 {
            let v = f.step_values(j);
            let (d, p) = {
                let d = ks_statistic(&v, |x| normal_cdf((x - 2.0) / 3.0));
                (d, ks_pvalue(d, v.len()))
            };
            assert!(p > 0.01, "step {j}: D = {d}");
        }
    }

    #[test]
    fn poisson_one_step_pmf_is_the_lag_mixture_of_convolutions() {
        let (lambda, gamma) = (1.5, 2.5);
        let w = vec![0.6, 0.4];
        let s = single_draw(FamilyTag::Poisson, w.clone(), Theta::Poisson { lambda, gamma });
        let data = SeriesData::new(vec![4.0, 1.0, 6.0]);
        let mut big = s.clone();
        big.draws = vec![s.draws[0].clone(); 200_000];
        let f = predict(&big, &data, 1, 11).unwrap();
        let v = f.step_values(0);
        // exact pmf: sum_l w_l sum_j Pois(x - j; lambda) Bin(j; x_{n+1-l}, gamma/(lambda+gamma))
        let p = gamma / (lambda + gamma);
        let lag = [6u64, 1];
        let pmf = |x: u64| -> f64 {
            (0..2)
                .map(|l| {
                    let b = Dist::binomial(lag[l], p).unwrap();
                    let q = Dist::poisson(lambda).unwrap();
                    w[l] * (0..=x.min(lag[l])).map(|j| b.pdf(j as f64) * q.pdf((x - j) as f64)).sum::<f64>()
                })
                .sum()
        };
        let n = v.len() as f64;
        for x in 0..15u64 {
            let pe = pmf(x);
            let freq = v.iter().filter(|&&y| y == x as f64).count() as f64 / n;
            assert!((freq - pe).abs() < 4.0 * (pe * (1.0 - pe) / n).sqrt() + 1e-12, "x = {x}: {freq} vs {pe}");
        }
    }

    #[test]
    fn one_step_density_matches_mixture_average() {
        // two posterior draws; predictive is the average of their Gaussian
        // MTD one-step densities
        let draws = [
            (vec![0.7, 0.3], Theta::Gaussian { mu: 0.0, sigma2: 1.0, rho: vec![0.8, -0.2] }),
            (vec![0.2, 0.8], Theta::Gaussian { mu: 0.5, sigma2: 2.0, rho: vec![0.1, 0.5] }),
        ];
        let per = 50_000;
        let mut s = single_draw(FamilyTag::Gaussian, draws[0].0.clone(), draws[0].1.clone());
        s.draws.clear();
        for (w, th) in &draws {
            for _ in 0..per {
                s.draws.push(Draw { chain: 0, iter: 0, w: w.clone(), theta: th.clone(), z: None });
            }
        }
        let data = SeriesData::new(vec![0.3, 1.2, -0.4]);
        let f = predict(&s, &data, 1, 3).unwrap();
        let v = f.step_values(0);
        let hist = [-0.4, 1.2];
        let models: Vec<MtdModel> = (0..2).map(|i| s.model(i * per).unwrap()).collect();
        let cdf = |x: f64| models.iter().map(|m| m.transition_cdf(x, &hist).unwrap()).sum::<f64>() / 2.0;
        let n = v.len() as f64;
        let edges: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.5).collect();
        for e in edges.windows(2) {
            let pe = cdf(e[1]) - cdf(e[0]);
            let freq = v.iter().filter(|&&y| y > e[0] && y <= e[1]).count() as f64 / n;
            assert!((freq - pe).abs() < 3.0 * (pe * (1.0 - pe) / n).sqrt() + 1e-9, "bin {e:?}: {freq} vs {pe}");
        }
    }

    #[test]
    fn one_step_density_of_single_draw_is_the_mixture() {
        let w = vec![0.6, 0.4];
        let s = single_draw(FamilyTag::Poisson, w.clone(), Theta::Poisson { lambda: 1.5, gamma: 2.0 });
        let data = SeriesData::new(vec![4.0, 2.0, 7.0]);
        let grid: Vec<f64> = (0..12).map(f64::from).collect();
        let rows = one_step_density(&s, &data, &grid).unwrap();
        let c = Transition::poisson(1.5, 2.0).unwrap();
        for (y, f, cdf) in rows {
            let want = w[0] * c.trans_pdf(y, 7.0).unwrap() + w[1] * c.trans_pdf(y, 2.0).unwrap();
            let want_cdf = w[0] * c.trans_cdf(y, 7.0).unwrap() + w[1] * c.trans_cdf(y, 2.0).unwrap();
            assert!((f - want).abs() < 1e-15 && (cdf - want_cdf).abs() < 1e-15, "{y}");
        }
        let s = single_draw(FamilyTag::Lomax, vec![1.0], Theta::Lomax { alpha: 4.0, phi: 3.0, beta: vec![0.5, -0.5] });
        let d = crate::mcmc::Design::Matrix { rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]] };
        let data = SeriesData::with_design(vec![2.0, 3.0], d);
        assert!(one_step_density(&s, &data, &[1.0]).is_err());
    }

    #[test]
    fn intervals_nest_with_level() {
        let mut rng = seeded(5);
        let paths: Vec<Vec<f64>> = (0..2000).map(|_| vec![std_normal(&mut rng), 2.0 * std_normal(&mut rng)]).collect();
        let f = Forecast { k: 2, paths };
        let iv = f.intervals(&[0.5, 0.8, 0.9, 0.99]).unwrap();
        for step in 1..=2 {
            let s: Vec<&Interval> = iv.iter().filter(|i| i.step == step).collect();
            for w in s.windows(2) {
                assert!(w[1].lower <= w[0].lower && w[1].upper >= w[0].upper);
            }
            assert!(s.iter().all(|i| i.lower <= i.median && i.median <= i.upper));
        }
    }

    #[test]
    fn residuals_of_correct_model_are_normal() {
        for (fam, comp) in [
            (FamilyTag::Gaussian, Transition::gaussian(1.0, 4.0, 0.6).unwrap()),
            (FamilyTag::Poisson, Transition::poisson(2.0, 3.0).unwrap()),
            (FamilyTag::Lomax, Transition::lomax_shifted(5.0, 4.0).unwrap()),
        ] {
            let m = MtdModel::shared(vec![0.5, 0.3, 0.2], comp).unwrap();
            let mut rng = seeded(10);
            let x = m.simulate(5000, &mut rng, &Init::FromMarginal).unwrap();
            let (r, c) = model_residuals(&m, &x, &mut rng).unwrap();
            assert_eq!(c, 0);
            assert!(ks_normal(&r).1 > 0.01, "{fam}");
        }
    }

    #[test]
    fn point_mass_step_gives_uniform_randomization() {
        // lambda ~ 0 makes x_t | x_{t-1} = v a point mass at v, so
        // F(x_t - 1) = 0, F(x_t) = 1 and the residual is Phi^-1 of a uniform
        let m = MtdModel::shared(vec![1.0], Transition::poisson(1e-300, 1.0).unwrap()).unwrap();
        let x: Vec<f64> = vec![3.0; 4001];
        let mut rng = seeded(12);
        let (r, _) = model_residuals(&m, &x, &mut rng).unwrap();
        assert!(ks_normal(&r).1 > 0.01);
    }

    #[test]
    fn regression_forecast_scales_by_covariates() {
        use crate::mcmc::Design;
        let design = Design::Harmonic { period: 4.0, harmonics: 1 };
        let data = SeriesData::with_design(vec![1.0, 2.0, 1.5, 0.7], design.clone());
        let s = single_draw(FamilyTag::Lomax, vec![1.0], Theta::Lomax { alpha: 5.0, phi: 3.0, beta: vec![0.4, -0.2] });
        let mut big = s.clone();
        big.draws = vec![s.draws[0].clone(); 4000];
        let f = predict(&big, &data, 2, 1).unwrap();
        // eps_4 = y_4 exp(-x_4 beta); step-one eps path scaled by exp(x_5 beta)
        let m = big.model(0).unwrap();
        let eps = lomax::residuals(&data.values, data.covariates().as_ref(), &[0.4, -0.2]);
        let raw = forecast_path(&m, &eps, 2, &mut substream(1, 0)).unwrap();
        let row = design.row(4).unwrap();
        let scale = (row[0] * 0.4 - row[1] * 0.2).exp();
        assert!((f.paths[0][0] - raw[0] * scale).abs() < 1e-12);
        let bad = SeriesData::with_design(data.values.clone(), Design::Matrix { rows: vec![vec![0.0, 1.0]; 4] });
        assert!(matches!(predict(&big, &bad, 1, 1), Err(Error::Contract(_))));
    }
}
