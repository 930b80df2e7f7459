#![allow(dead_code)]

use mtd_core::diagfc::ess;
use mtd_core::dists::Dist;
use mtd_core::mcmc::{sweep, theta_scalars, ChainState, Design, FitConfig, SeriesData, Target, Tuners};
use mtd_core::priors::{ParamPrior, Theta, WeightPrior};
use mtd_core::rng::StdRng;
use mtd_core::transitions::{FamilyTag, Transition};
use rand::Rng;

pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Monte Carlo standard error of the mean of a possibly autocorrelated chain.
pub fn mc_se(x: &[f64]) -> f64 {
    mean_sd(x).1 / ess(x).sqrt()
}

/// Standard error of the sample sd, from the chain of squared deviations
/// and the delta method.
pub fn sd_se(x: &[f64]) -> f64 {
    let (m, sd) = mean_sd(x);
    let sq: Vec<f64> = x.iter().map(|v| (v - m).powi(2)).collect();
    mc_se(&sq) / (2.0 * sd)
}

/// Mean and sd of the density `exp(ln_f)` on `[lo, hi]` by the midpoint
/// rule on `n` cells.
pub fn grid_moments<F: Fn(f64) -> f64>(ln_f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let lv: Vec<f64> = xs.iter().map(|&x| ln_f(x)).collect();
    let m = lv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lv.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = w.iter().sum();
    let mean = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / z;
    let var = xs.iter().zip(&w).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / z;
    (mean, var.sqrt())
}

/// Independent draws from the density `exp(ln_f)` discretized on `n`
/// cells of `[lo, hi]`, uniform within a cell.
pub fn grid_sample<F: Fn(f64) -> f64, R: Rng>(ln_f: F, lo: f64, hi: f64, n: usize, m: usize, rng: &mut R) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    let lv: Vec<f64> = (0..n).map(|i| ln_f(lo + (i as f64 + 0.5) * h)).collect();
    let mx = lv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in &lv {
        acc += (v - mx).exp();
        cum.push(acc);
    }
    (0..m)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let i = cum.partition_point(|&c| c < u).min(n - 1);
            lo + (i as f64 + rng.random::<f64>()) * h
        })
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// 1% critical value of the two-sample KS statistic.
pub fn ks_two_sample_crit(n: usize, m: usize) -> f64 {
    1.6276 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Generative draw of `(values, z, q)` for `t = L+1..n` given parameters
/// and fixed first `L` values (time order).
pub fn generate<R: Rng>(
    theta: &Theta,
    w: &[f64],
    start: &[f64],
    n: usize,
    design: Option<&Design>,
    rng: &mut R,
) -> (Vec<f64>, Vec<usize>, Option<Vec<u64>>) {
    let l = w.len();
    let comps = mtd_core::mcmc::components(theta, l).unwrap();
    let draw_lag = |rng: &mut R| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            acc += wi;
            if u < acc {
                return i;
            }
        }
        w.iter().rposition(|&v| v > 0.0).unwrap()
    };
    let mut z = Vec::with_capacity(n - l);
    match theta {
        Theta::Poisson { lambda, gamma } => {
            let mut x = start.to_vec();
            let mut q = Vec::with_capacity(n - l);
            let p = gamma / (lambda + gamma);
            let pois = Dist::poisson(*lambda).unwrap();
            for t in l..n {
                let k = draw_lag(rng);
                let v = x[t - 1 - k] as u64;
                let qt = pois.sample(rng);
                let s = Dist::binomial(v, p).unwrap().sample(rng);
                z.push(k);
                q.push(qt as u64);
                x.push(qt + s);
            }
            (x, z, Some(q))
        }
        Theta::Lomax { beta, .. } if !beta.is_empty() => {
            let d = design.expect("design for beta");
            let lin = |t: usize| d.row(t).unwrap().iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            let mut y = start.to_vec();
            let mut eps: Vec<f64> = (0..l).map(|t| y[t] * (-lin(t)).exp()).collect();
            for t in l..n {
                let k = draw_lag(rng);
                let e = comps[k].sample_trans(eps[t - 1 - k], rng).unwrap();
                z.push(k);
                eps.push(e);
                y.push(e * lin(t).exp());
            }
            (y, z, None)
        }
        _ => {
            let mut x = start.to_vec();
            for t in l..n {
                let k = draw_lag(rng);
                let v = comps[k].sample_trans(x[t - 1 - k], rng).unwrap();
                z.push(k);
                x.push(v);
            }
            (x, z, None)
        }
    }
}

#[derive(Debug, Clone)]
pub struct GewekeRow {
    pub name: String,
    pub moment: u8,
    pub prior: f64,
    pub chain: f64,
    pub se: f64,
}

impl GewekeRow {
    pub fn z(&self) -> f64 {
        (self.chain - self.prior) / self.se
    }
}

pub struct GewekeSetup {
    pub weight_prior: WeightPrior,
    pub param_prior: ParamPrior,
    pub order: usize,
    pub n: usize,
    pub start: Vec<f64>,
    pub design: Option<Design>,
    pub prior_draws: usize,
    pub iters: usize,
    pub collapse_alpha: bool,
}

fn scalars(w: &[f64], theta: &Theta) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = w.iter().enumerate().map(|(i, x)| (format!("w_{}", i + 1), *x)).collect();
    v.extend(theta_scalars(theta));
    v
}

/// Compare the first two moments of every scalar under the prior with
/// those along the successive-conditional chain that alternates
/// `(data, latents) | params` with one sampler sweep.
pub fn geweke(s: &GewekeSetup, rng: &mut StdRng) -> Vec<GewekeRow> {
    let d = s.design.as_ref().map_or(0, |d| d.dim());
    let draw_prior = |rng: &mut StdRng| {
        let w = s.weight_prior.sample(s.order, rng).unwrap();
        let th = s.param_prior.sample(s.order, d, rng).unwrap();
        (w, th)
    };
    let prior: Vec<Vec<(String, f64)>> = (0..s.prior_draws)
        .map(|_| {
            let (w, th) = draw_prior(rng);
            scalars(&w, &th)
        })
        .collect();

    let cfg = FitConfig { adapt: false, collapse_alpha: s.collapse_alpha, ..Default::default() };
    let tag = mtd_core::mcmc::prior_family(&s.param_prior);
    let mut tuners = Tuners::new(tag, &cfg, d > 0);
    let (w, theta) = draw_prior(rng);
    let mut state = ChainState { w, theta, z: Vec::new(), q: None };
    let mut chain: Vec<Vec<(String, f64)>> = Vec::with_capacity(s.iters);
    for _ in 0..s.iters {
        let (x, z, q) = generate(&state.theta, &state.w, &s.start, s.n, s.design.as_ref(), rng);
        let data = SeriesData { values: x, design: s.design.clone() };
        let target = Target::new(&data, s.order, &s.weight_prior, &s.param_prior).unwrap();
        state.z = z;
        state.q = q;
        sweep(&mut state, &target, &cfg, &mut tuners, None, rng).unwrap();
        chain.push(scalars(&state.w, &state.theta));
    }

    let names: Vec<String> = prior[0].iter().map(|(n, _)| n.clone()).collect();
    let mut rows = Vec::new();
    for (j, name) in names.iter().enumerate() {
        for moment in [1u8, 2] {
            let f = |v: f64| if moment == 1 { v } else { v * v };
            let a: Vec<f64> = prior.iter().map(|r| f(r[j].1)).collect();
            let b: Vec<f64> = chain.iter().map(|r| f(r[j].1)).collect();
            let (ma, sa) = mean_sd(&a);
            let se_a = sa / (a.len() as f64).sqrt();
            rows.push(GewekeRow {
                name: name.clone(),
                moment,
                prior: ma,
                chain: mean_sd(&b).0,
                se: (se_a * se_a + mc_se(&b).powi(2)).sqrt(),
            });
        }
    }
    rows
}

pub fn family_of(p: &ParamPrior) -> FamilyTag {
    mtd_core::mcmc::prior_family(p)
}

pub fn gaussian_component(mu: f64, s2: f64, r: f64) -> Transition {
    Transition::gaussian(mu, s2, r).unwrap()
}
