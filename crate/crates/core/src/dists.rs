//! Univariate distribution toolkit: log-density, cdf, quantile and sampling.
//!
//! Special functions come from `statrs`; the non-uniform variate generators
//! from `rand_distr`. Every `Dist` is validated when built, so evaluation never
//! fails on parameters.

use rand::Rng;
use rand_distr::Distribution;
use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{require, Error, Result};
use crate::quad::solve_increasing;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Parameters of a validated distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    Normal { mean: f64, sd: f64 },
    /// Location/scale Student-t; `scale` is a scale, not a variance.
    StudentT { loc: f64, scale: f64, df: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
    Uniform { lo: f64, hi: f64 },
    Poisson { rate: f64 },
    Binomial { trials: u64, prob: f64 },
    /// Failures before the `successes`-th success, success probability `prob`.
    NegBinomial { successes: f64, prob: f64 },
    Bernoulli { prob: f64 },
    /// Density `shape/scale * (1 + x/scale)^-(shape+1)` on `x >= 0`.
    Lomax { scale: f64, shape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dist(DistKind);

fn positive(name: &str, v: f64) -> Result<()> {
    require(v > 0.0 && v.is_finite(), || format!("{name} must be positive and finite, got {v}"))
}

fn finite(name: &str, v: f64) -> Result<()> {
    require(v.is_finite(), || format!("{name} must be finite, got {v}"))
}

fn unit_closed(name: &str, v: f64) -> Result<()> {
    require((0.0..=1.0).contains(&v), || format!("{name} must lie in [0, 1], got {v}"))
}

impl Dist {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("sd", sd)?;
        Ok(Dist(DistKind::Normal { mean, sd }))
    }

    pub fn standard_normal() -> Self {
        Dist(DistKind::Normal { mean: 0.0, sd: 1.0 })
    }

    pub fn student_t(loc: f64, scale: f64, df: f64) -> Result<Self> {
        finite("loc", loc)?;
        positive("scale", scale)?;
        positive("df", df)?;
        Ok(Dist(DistKind::StudentT { loc, scale, df }))
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(Dist(DistKind::Gamma { shape, rate }))
    }

    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(Dist(DistKind::InverseGamma { shape, scale }))
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Ok(Dist(DistKind::Beta { a, b }))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        finite("lo", lo)?;
        finite("hi", hi)?;
        require(lo < hi, || format!("uniform needs lo < hi, got [{lo}, {hi}]"))?;
        Ok(Dist(DistKind::Uniform { lo, hi }))
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Dist(DistKind::Poisson { rate }))
    }

    pub fn binomial(trials: u64, prob: f64) -> Result<Self> {
        unit_closed("prob", prob)?;
        Ok(Dist(DistKind::Binomial { trials, prob }))
    }

    pub fn neg_binomial(successes: f64, prob: f64) -> Result<Self> {
        positive("successes", successes)?;
        require(prob > 0.0 && prob <= 1.0, || format!("prob must lie in (0, 1], got {prob}"))?;
        Ok(Dist(DistKind::NegBinomial { successes, prob }))
    }

    pub fn bernoulli(prob: f64) -> Result<Self> {
        unit_closed("prob", prob)?;
        Ok(Dist(DistKind::Bernoulli { prob }))
    }

    pub fn lomax(scale: f64, shape: f64) -> Result<Self> {
        positive("scale", scale)?;
        positive("shape", shape)?;
        Ok(Dist(DistKind::Lomax { scale, shape }))
    }

    pub fn kind(&self) -> DistKind {
        self.0
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self.0,
            DistKind::Poisson { .. }
                | DistKind::Binomial { .. }
                | DistKind::NegBinomial { .. }
                | DistKind::Bernoulli { .. }
        )
    }

    /// Closed support bounds (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        use DistKind::*;
        match self.0 {
            Normal { .. } | StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Gamma { .. } | InverseGamma { .. } | Lomax { .. } => (0.0, f64::INFINITY),
            Beta { .. } => (0.0, 1.0),
            Uniform { lo, hi } => (lo, hi),
            Poisson { .. } | NegBinomial { .. } => (0.0, f64::INFINITY),
            Binomial { trials, .. } => (0.0, trials as f64),
            Bernoulli { .. } => (0.0, 1.0),
        }
    }

    /// Log density (continuous) or log pmf (discrete); `-inf` off support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        use DistKind::*;
        if x.is_nan() {
            return f64::NAN;
        }
        match self.0 {
            Normal { mean, sd } => ln_normal(x, mean, sd),
            StudentT { loc, scale, df } => ln_student_t(x, loc, scale, df),
            Gamma { shape, rate } => ln_gamma_pdf(x, shape, rate),
            InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
                }
            }
            Beta { a, b } => {
                if x < 0.0 || x > 1.0 {
                    return f64::NEG_INFINITY;
                }
                let lnb = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                xlogy(a - 1.0, x) + xlogy(b - 1.0, 1.0 - x) - lnb
            }
            Uniform { lo, hi } => {
                if x < lo || x > hi {
                    f64::NEG_INFINITY
                } else {
                    -(hi - lo).ln()
                }
            }
            Poisson { rate } => match as_count(x) {
                Some(k) => ln_poisson(k, rate),
                None => f64::NEG_INFINITY,
            },
            Binomial { trials, prob } => match as_count(x) {
                Some(k) => ln_binomial(k, trials, prob),
                None => f64::NEG_INFINITY,
            },
            NegBinomial { successes, prob } => match as_count(x) {
                Some(k) => ln_neg_binomial(k, successes, prob),
                None => f64::NEG_INFINITY,
            },
            Bernoulli { prob } => match as_count(x) {
                Some(0) => (1.0 - prob).ln(),
                Some(1) => prob.ln(),
                _ => f64::NEG_INFINITY,
            },
            Lomax { scale, shape } => ln_lomax(x, scale, shape),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `P(X <= x)`; discrete families floor `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        use DistKind::*;
        if x.is_nan() {
            return f64::NAN;
        }
        match self.0 {
            Normal { mean, sd } => normal_cdf((x - mean) / sd),
            StudentT { loc, scale, df } => student_t_cdf((x - loc) / scale, df),
            Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_ur(shape, scale / x)
                }
            }
            Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Poisson { rate } => {
                if x < 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_ur(x.floor() + 1.0, rate)
                }
            }
            Binomial { trials, prob } => {
                if x < 0.0 {
                    return 0.0;
                }
                let k = x.floor();
                if k >= trials as f64 || prob == 0.0 {
                    1.0
                } else if prob == 1.0 {
                    0.0
                } else {
                    beta_reg(trials as f64 - k, k + 1.0, 1.0 - prob)
                }
            }
            NegBinomial { successes, prob } => {
                if x < 0.0 {
                    0.0
                } else if prob == 1.0 || x.is_infinite() {
                    1.0
                } else {
                    beta_reg(successes, x.floor() + 1.0, prob)
                }
            }
            Bernoulli { prob } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - prob
                } else {
                    1.0
                }
            }
            Lomax { scale, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-shape * (x / scale).ln_1p()).exp_m1()
                }
            }
        }
    }

    /// Inverse cdf. Discrete families return the smallest `k` with `cdf(k) >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        use DistKind::*;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfSupport(format!("quantile level must lie in (0, 1), got {u}")));
        }
        match self.0 {
            Normal { mean, sd } => Ok(mean + sd * std_normal_quantile(u)),
            Uniform { lo, hi } => Ok(lo + u * (hi - lo)),
            Lomax { scale, shape } => Ok(scale * ((-(-u).ln_1p() / shape).exp_m1())),
            Bernoulli { prob } => Ok(if u <= 1.0 - prob { 0.0 } else { 1.0 }),
            Poisson { .. } | Binomial { .. } | NegBinomial { .. } => Ok(self.discrete_quantile(u)),
            StudentT { loc, scale, .. } => {
                let (lo, hi) = self.bracket(u, loc - scale, loc + scale);
                solve_increasing(|x| self.cdf(x), u, lo, hi)
            }
            Gamma { .. } | InverseGamma { .. } => {
                let m = self.mean().unwrap_or(1.0).max(f64::MIN_POSITIVE);
                let (lo, hi) = self.bracket(u, 0.5 * m, 2.0 * m);
                solve_increasing(|x| self.cdf(x), u, lo, hi)
            }
            Beta { .. } => solve_increasing(|x| self.cdf(x), u, 0.0, 1.0),
        }
    }

    // expand [lo, hi] until it brackets level u
    fn bracket(&self, u: f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
        let (s_lo, s_hi) = self.support();
        let mut step = (hi - lo).abs().max(1e-300);
        for _ in 0..2000 {
            if self.cdf(lo) <= u {
                break;
            }
            if s_lo.is_finite() {
                lo = s_lo + 0.5 * (lo - s_lo);
                if lo - s_lo < 1e-300 {
                    lo = s_lo;
                    break;
                }
            } else {
                lo -= step;
                step *= 2.0;
            }
        }
        let mut step = (hi - lo).abs().max(1e-300);
        for _ in 0..2000 {
            if self.cdf(hi) >= u || hi >= s_hi {
                break;
            }
            hi += step;
            step *= 2.0;
        }
        (lo, hi)
    }

    fn discrete_quantile(&self, u: f64) -> f64 {
        let (_, hi_support) = self.support();
        let mut hi = self.mean().unwrap_or(1.0).ceil().max(1.0);
        while self.cdf(hi) < u && hi < hi_support {
            hi = (hi * 2.0).min(hi_support);
        }
        let mut lo = -1.0;
        // invariant: cdf(lo) < u <= cdf(hi)
        while hi - lo > 1.0 {
            let mid = ((lo + hi) / 2.0).floor();
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn mean(&self) -> Option<f64> {
        use DistKind::*;
        Some(match self.0 {
            Normal { mean, .. } => mean,
            StudentT { loc, df, .. } => {
                if df <= 1.0 {
                    return None;
                }
                loc
            }
            Gamma { shape, rate } => shape / rate,
            InverseGamma { shape, scale } => {
                if shape <= 1.0 {
                    return None;
                }
                scale / (shape - 1.0)
            }
            Beta { a, b } => a / (a + b),
            Uniform { lo, hi } => 0.5 * (lo + hi),
            Poisson { rate } => rate,
            Binomial { trials, prob } => trials as f64 * prob,
            NegBinomial { successes, prob } => successes * (1.0 - prob) / prob,
            Bernoulli { prob } => prob,
            Lomax { scale, shape } => {
                if shape <= 1.0 {
                    return None;
                }
                scale / (shape - 1.0)
            }
        })
    }

    pub fn variance(&self) -> Option<f64> {
        use DistKind::*;
        Some(match self.0 {
            Normal { sd, .. } => sd * sd,
            StudentT { scale, df, .. } => {
                if df <= 2.0 {
                    return None;
                }
                scale * scale * df / (df - 2.0)
            }
            Gamma { shape, rate } => shape / (rate * rate),
            InverseGamma { shape, scale } => {
                if shape <= 2.0 {
                    return None;
                }
                scale * scale / ((shape - 1.0).powi(2) * (shape - 2.0))
            }
            Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Poisson { rate } => rate,
            Binomial { trials, prob } => trials as f64 * prob * (1.0 - prob),
            NegBinomial { successes, prob } => successes * (1.0 - prob) / (prob * prob),
            Bernoulli { prob } => prob * (1.0 - prob),
            Lomax { scale, shape } => {
                if shape <= 2.0 {
                    return None;
                }
                scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0))
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use DistKind::*;
        match self.0 {
            Normal { mean, sd } => mean + sd * std_normal(rng),
            StudentT { loc, scale, df } => {
                let t = rand_distr::StudentT::new(df).expect("validated df");
                loc + scale * t.sample(rng)
            }
            Gamma { shape, rate } => gamma_variate(shape, rate, rng),
            InverseGamma { shape, scale } => scale / gamma_variate(shape, 1.0, rng),
            Beta { a, b } => {
                let x = gamma_variate(a, 1.0, rng);
                let y = gamma_variate(b, 1.0, rng);
                if x + y > 0.0 {
                    x / (x + y)
                } else {
                    // both underflowed: decide by the log-space race
                    let lx = ln_gamma_variate(a, rng);
                    let ly = ln_gamma_variate(b, rng);
                    1.0 / (1.0 + (ly - lx).exp())
                }
            }
            Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Poisson { rate } => poisson_variate(rate, rng),
            Binomial { trials, prob } => binomial_variate(trials, prob, rng),
            NegBinomial { successes, prob } => {
                if prob >= 1.0 {
                    return 0.0;
                }
                let mix = gamma_variate(successes, prob / (1.0 - prob), rng);
                if mix <= 0.0 {
                    0.0
                } else {
                    poisson_variate(mix, rng)
                }
            }
            Bernoulli { prob } => {
                if rng.random::<f64>() < prob {
                    1.0
                } else {
                    0.0
                }
            }
            Lomax { scale, shape } => {
                let u = 1.0 - rng.random::<f64>(); // (0, 1]
                scale * (-u.ln() / shape).exp_m1()
            }
        }
    }
}

/// Dirichlet distribution on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Dirichlet {
    shape: Vec<f64>,
}

impl Dirichlet {
    pub fn new(shape: Vec<f64>) -> Result<Self> {
        require(!shape.is_empty(), || "Dirichlet needs at least one shape entry".into())?;
        for (i, &a) in shape.iter().enumerate() {
            require(a > 0.0 && a.is_finite(), || format!("Dirichlet shape[{i}] must be positive, got {a}"))?;
        }
        Ok(Dirichlet { shape })
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn mean(&self) -> Vec<f64> {
        let s: f64 = self.shape.iter().sum();
        self.shape.iter().map(|a| a / s).collect()
    }

    pub fn ln_pdf(&self, w: &[f64]) -> f64 {
        if w.len() != self.shape.len() {
            return f64::NEG_INFINITY;
        }
        if w.iter().any(|&x| x < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return f64::NEG_INFINITY;
        }
        let total: f64 = self.shape.iter().sum();
        let mut v = ln_gamma(total);
        for (&a, &x) in self.shape.iter().zip(w) {
            v += xlogy(a - 1.0, x) - ln_gamma(a);
        }
        v
    }

    /// Draw via normalised log-gamma variates, so tiny shapes cannot
    /// underflow the whole vector to zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let logs: Vec<f64> = self.shape.iter().map(|&a| ln_gamma_variate(a, rng)).collect();
        normalize_log_weights(&logs)
    }
}

/// `exp(l_i - logsumexp(l))`.
pub fn normalize_log_weights(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = out.iter().sum();
    for v in &mut out {
        *v /= s;
    }
    out
}

pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + logs.iter().map(|&l| (l - m).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// raw kernels, arguments trusted

#[inline]
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

pub(crate) fn as_count(x: f64) -> Option<u64> {
    if x >= 0.0 && x.fract() == 0.0 && x < 9.0e15 {
        Some(x as u64)
    } else {
        None
    }
}

pub(crate) fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

#[inline]
pub(crate) fn ln_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

pub(crate) fn ln_student_t(x: f64, loc: f64, scale: f64, df: f64) -> f64 {
    let z = (x - loc) / scale;
    ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df)
        - 0.5 * (df * std::f64::consts::PI).ln()
        - scale.ln()
        - 0.5 * (df + 1.0) * (z * z / df).ln_1p()
}

pub(crate) fn ln_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            rate.ln()
        } else {
            f64::NEG_INFINITY
        };
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

#[inline]
pub(crate) fn ln_lomax(x: f64, scale: f64, shape: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    shape.ln() - scale.ln() - (shape + 1.0) * (x / scale).ln_1p()
}

pub(crate) fn ln_poisson(k: u64, rate: f64) -> f64 {
    xlogy(k as f64, rate) - rate - ln_factorial(k)
}

pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub(crate) fn ln_binomial(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    let nk = (n - k) as f64;
    ln_choose(n, k) + xlogy(kf, p) + if nk == 0.0 { 0.0 } else { nk * (-p).ln_1p() }
}

pub(crate) fn ln_neg_binomial(k: u64, r: f64, p: f64) -> f64 {
    let kf = k as f64;
    ln_gamma(r + kf) - ln_gamma(r) - ln_factorial(k) + r * p.ln()
        + if k == 0 { 0.0 } else { kf * (-p).ln_1p() }
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn std_normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

fn student_t_cdf(z: f64, df: f64) -> f64 {
    if z.is_infinite() {
        return if z > 0.0 { 1.0 } else { 0.0 };
    }
    let t = df / (df + z * z);
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, t);
    if z <= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

pub(crate) fn gamma_variate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    rand_distr::Gamma::new(shape, 1.0 / rate)
        .expect("validated gamma parameters")
        .sample(rng)
}

/// `ln G` for `G ~ Gamma(shape, 1)`, accurate for tiny shapes.
pub(crate) fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        gamma_variate(shape, 1.0, rng).ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        let g = gamma_variate(shape + 1.0, 1.0, rng).ln();
        let u = 1.0 - rng.random::<f64>();
        g + u.ln() / shape
    }
}

pub(crate) fn poisson_variate<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    rand_distr::Poisson::new(rate)
        .expect("validated Poisson rate")
        .sample(rng)
}

pub(crate) fn binomial_variate<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> f64 {
    if n == 0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return n as f64;
    }
    rand_distr::Binomial::new(n, p)
        .expect("validated binomial parameters")
        .sample(rng) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{Quadrature, Range};
    use crate::rng::seeded;

    fn continuous_cases() -> Vec<Dist> {
        vec![
            Dist::normal(0.0, 1.0).unwrap(),
            Dist::normal(10.0, 10.0).unwrap(),
            Dist::student_t(1.0, 2.0, 4.5).unwrap(),
            Dist::student_t(0.0, 1.0, 1.0).unwrap(),
            Dist::gamma(2.0, 1.0).unwrap(),
            Dist::gamma(0.7, 3.0).unwrap(),
            Dist::inverse_gamma(3.0, 20.0).unwrap(),
            Dist::beta(2.0, 5.0).unwrap(),
            Dist::beta(0.6, 0.8).unwrap(),
            Dist::uniform(-1.0, 3.0).unwrap(),
            Dist::lomax(10.0, 3.0).unwrap(),
            Dist::lomax(2.0, 1.5).unwrap(),
        ]
    }

    fn range_for(d: &Dist) -> Range {
        match d.kind() {
            DistKind::Normal { mean, sd } => Range::Whole { center: mean, scale: sd },
            DistKind::StudentT { loc, scale, .. } => Range::Whole { center: loc, scale },
            DistKind::Beta { .. } => Range::Finite { lo: 0.0, hi: 1.0 },
            DistKind::Uniform { lo, hi } => Range::Finite { lo, hi },
            _ => Range::Upper {
                lo: 0.0,
                scale: d.quantile(0.5).unwrap(),
            },
        }
    }

    #[test]
    fn closed_form_values() {
        let n = Dist::standard_normal();
        assert!((n.pdf(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(n.cdf(0.0), 0.5);
        assert_eq!(n.quantile(0.5).unwrap(), 0.0);
        let p = Dist::poisson(2.0).unwrap();
        assert!((p.pdf(0.0) - (-2.0f64).exp()).abs() < 1e-16);
        let l = Dist::lomax(10.0, 3.0).unwrap();
        assert!((l.pdf(0.0) - 0.3).abs() < 1e-15);
        let l1 = Dist::lomax(1.0, 1.0).unwrap();
        assert!((l1.cdf(1.0) - 0.5).abs() < 1e-15);
        let b = Dist::bernoulli(0.3).unwrap();
        assert!((b.cdf(0.0) - 0.7).abs() < 1e-15);
        let u = Dist::uniform(0.0, 1.0).unwrap();
        assert!((u.quantile(0.3).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn gamma_median_matches_bisection_of_closed_form_cdf() {
        // Gamma(2,1): F(x) = 1 - exp(-x)(1 + x)
        let f = |x: f64| 1.0 - (-x).exp() * (1.0 + x);
        let (mut lo, mut hi) = (0.0f64, 50.0f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let q = Dist::gamma(2.0, 1.0).unwrap().quantile(0.5).unwrap();
        assert!((q - oracle).abs() < 1e-10, "{q} vs {oracle}");
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(Dist::normal(0.0, 0.0).is_err());
        assert!(Dist::normal(f64::NAN, 1.0).is_err());
        assert!(Dist::student_t(0.0, 1.0, -1.0).is_err());
        assert!(Dist::gamma(0.0, 1.0).is_err());
        assert!(Dist::poisson(-1.0).is_err());
        assert!(Dist::binomial(3, 1.5).is_err());
        assert!(Dist::neg_binomial(2.0, 0.0).is_err());
        assert!(Dist::lomax(1.0, 0.0).is_err());
        assert!(Dist::uniform(1.0, 1.0).is_err());
        assert!(Dirichlet::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn quantile_rejects_levels_outside_unit_interval() {
        let d = Dist::standard_normal();
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.0).is_err());
        assert!(d.quantile(-0.1).is_err());
    }

    #[test]
    fn continuous_densities_integrate_to_one() {
        let q = Quadrature::with_tol(1e-12);
        for d in continuous_cases() {
            let v = q.integrate(|x| d.pdf(x), range_for(&d)).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "{d:?}: {v}");
        }
    }

    #[test]
    fn cdf_derivative_matches_density() {
        for d in continuous_cases() {
            let lo = d.quantile(0.02).unwrap();
            let hi = d.quantile(0.98).unwrap();
            for i in 0..20 {
                let x = lo + (hi - lo) * (i as f64 + 0.5) / 20.0;
                let h = 1e-5 * (hi - lo);
                let fd = (d.cdf(x + h) - d.cdf(x - h)) / (2.0 * h);
                let p = d.pdf(x);
                assert!((fd - p).abs() < 1e-5 * p.max(1.0), "{d:?} at {x}: {fd} vs {p}");
            }
        }
    }

    #[test]
    fn ln_pdf_agrees_with_pdf() {
        for d in continuous_cases() {
            let x = d.quantile(0.3).unwrap();
            assert!((d.pdf(x).ln() - d.ln_pdf(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for d in continuous_cases() {
            for i in 1..40 {
                let u = i as f64 / 40.0;
                let x = d.quantile(u).unwrap();
                assert!((d.cdf(x) - u).abs() < 1e-10, "{d:?} u={u}");
            }
            let lo = d.quantile(0.01).unwrap();
            let hi = d.quantile(0.99).unwrap();
            for i in 0..25 {
                let x = lo + (hi - lo) * i as f64 / 24.0;
                let back = d.quantile(d.cdf(x)).unwrap();
                assert!((back - x).abs() < 1e-8 * x.abs().max(1.0), "{d:?} x={x} back={back}");
            }
        }
    }

    #[test]
    fn discrete_masses_sum_to_one() {
        let cases = [
            Dist::poisson(2.0).unwrap(),
            Dist::poisson(37.5).unwrap(),
            Dist::binomial(12, 0.35).unwrap(),
            Dist::neg_binomial(2.5, 0.3).unwrap(),
            Dist::bernoulli(0.4).unwrap(),
        ];
        for d in cases {
            let mut s = 0.0;
            let mut k = 0.0;
            while 1.0 - d.cdf(k) > 1e-13 {
                k += 1.0;
            }
            for j in 0..=(k as u64) {
                s += d.pdf(j as f64);
            }
            assert!(s >= 1.0 - 1e-12 && s <= 1.0 + 1e-12, "{d:?}: {s}");
            // cdf is the running sum
            let mut run = 0.0;
            for j in 0..=(k.min(30.0) as u64) {
                run += d.pdf(j as f64);
                assert!((d.cdf(j as f64) - run).abs() < 1e-12);
                assert!((d.cdf(j as f64 + 0.7) - run).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discrete_quantile_is_generalised_inverse() {
        let d = Dist::poisson(4.2).unwrap();
        for i in 1..50 {
            let u = i as f64 / 50.0;
            let k = d.quantile(u).unwrap();
            assert!(d.cdf(k) >= u);
            assert!(k == 0.0 || d.cdf(k - 1.0) < u);
        }
    }

    #[test]
    fn degenerate_samplers() {
        let mut rng = seeded(1);
        let b = Dist::bernoulli(1.0).unwrap();
        assert!((0..1000).all(|_| b.sample(&mut rng) == 1.0));
        let p = Dist::poisson(1e-12).unwrap();
        assert_eq!(p.sample(&mut rng), 0.0);
    }

    #[test]
    fn normal_sample_mean_within_clt_bound() {
        let mut rng = seeded(7);
        let d = Dist::standard_normal();
        let n = 100_000;
        let m: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "{m}");
    }

    #[test]
    fn samplers_track_their_means() {
        let mut rng = seeded(11);
        let cases = [
            Dist::gamma(2.5, 0.5).unwrap(),
            Dist::inverse_gamma(5.0, 8.0).unwrap(),
            Dist::beta(2.0, 3.0).unwrap(),
            Dist::lomax(10.0, 4.0).unwrap(),
            Dist::poisson(3.3).unwrap(),
            Dist::binomial(20, 0.3).unwrap(),
            Dist::neg_binomial(3.0, 0.4).unwrap(),
            Dist::student_t(2.0, 1.5, 6.0).unwrap(),
        ];
        let n = 100_000;
        for d in cases {
            let m: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
            let se = (d.variance().unwrap() / n as f64).sqrt();
            assert!((m - d.mean().unwrap()).abs() < 4.0 * se, "{d:?}: {m}");
        }
    }

    #[test]
    fn seeded_streams_are_identical() {
        let d = Dist::gamma(0.8, 2.0).unwrap();
        let a: Vec<f64> = {
            let mut r = seeded(99);
            (0..50).map(|_| d.sample(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = seeded(99);
            (0..50).map(|_| d.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn dirichlet_with_tiny_shapes_stays_on_simplex() {
        let d = Dirichlet::new(vec![1e-10, 5e-11, 2e-10]).unwrap();
        let mut rng = seeded(3);
        for _ in 0..100 {
            let w = d.sample(&mut rng);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }

    #[test]
    fn dirichlet_mean() {
        let d = Dirichlet::new(vec![1.0, 2.0, 3.0]).unwrap();
        let mut rng = seeded(5);
        let n = 50_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            for (a, v) in acc.iter_mut().zip(d.sample(&mut rng)) {
                *a += v / n as f64;
            }
        }
        for (a, m) in acc.iter().zip(d.mean()) {
            assert!((a - m).abs() < 0.005);
        }
        assert!(d.ln_pdf(&[0.2, 0.3, 0.5]).is_finite());
    }
}
