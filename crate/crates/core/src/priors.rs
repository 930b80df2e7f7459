//! Priors on the mixture weights and on the family parameters of the three
//! fitted models.
//!
//! Weight priors:
//! * Dirichlet, with shape `1/L` per lag unless given.
//! * Truncated stick-breaking: `w_l = zeta_l prod_{r<l} (1 - zeta_r)` with
//!   `zeta_l ~ Beta(1, alpha_s)` and `w_L` taking the remaining stick.
//! * Cdf-based: `w ~ Dir(alpha0 a_1, ..., alpha0 a_L)` where `a_l` is the
//!   `Beta(a0, b0)` mass of `((l-1)/L, l/L]`.
//!
//! All three are conjugate to the allocation counts `M_l`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_ur;

use crate::dists::{ln_gamma_variate, Dirichlet, Dist};
use crate::error::{require, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum WeightPrior {
    #[serde(rename = "dir")]
    Dirichlet {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<Vec<f64>>,
    },
    #[serde(rename = "sb")]
    StickBreaking { alpha_s: f64 },
    #[serde(rename = "cdp")]
    CdfBased { alpha0: f64, a0: f64, b0: f64 },
}

impl WeightPrior {
    pub fn dirichlet_default() -> Self {
        WeightPrior::Dirichlet { shape: None }
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        require(l >= 1, || "model order must be at least 1".into())?;
        match self {
            WeightPrior::Dirichlet { shape: Some(s) } => {
                if s.len() != l {
                    return Err(Error::Contract(format!(
                        "Dirichlet shape has {} entries for order {l}",
                        s.len()
                    )));
                }
                Dirichlet::new(s.clone()).map(|_| ())
            }
            WeightPrior::Dirichlet { shape: None } => Ok(()),
            WeightPrior::StickBreaking { alpha_s } => {
                require(*alpha_s > 0.0 && alpha_s.is_finite(), || format!("alpha_s must be positive, got {alpha_s}"))
            }
            WeightPrior::CdfBased { alpha0, a0, b0 } => {
                for (n, v) in [("alpha0", alpha0), ("a0", a0), ("b0", b0)] {
                    require(*v > 0.0 && v.is_finite(), || format!("{n} must be positive, got {v}"))?;
                }
                Ok(())
            }
        }
    }

    fn dirichlet_shape(&self, l: usize) -> Vec<f64> {
        match self {
            WeightPrior::Dirichlet { shape: Some(s) } => s.clone(),
            WeightPrior::Dirichlet { shape: None } => vec![1.0 / l as f64; l],
            WeightPrior::CdfBased { alpha0, a0, b0 } => {
                cdp_bin_masses(l, *a0, *b0).into_iter().map(|a| alpha0 * a).collect()
            }
            WeightPrior::StickBreaking { .. } => unreachable!(),
        }
    }

    /// `E(w)` under the prior.
    pub fn prior_mean(&self, l: usize) -> Result<Vec<f64>> {
        self.validate(l)?;
        Ok(match self {
            WeightPrior::StickBreaking { alpha_s } => {
                let a = 1.0 / (1.0 + alpha_s);
                let mut m: Vec<f64> = (0..l).map(|i| a * (1.0 - a).powi(i as i32)).collect();
                m[l - 1] = (1.0 - a).powi(l as i32 - 1);
                m
            }
            _ => {
                let s = self.dirichlet_shape(l);
                let tot: f64 = s.iter().sum();
                s.iter().map(|v| v / tot).collect()
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, l: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.posterior_sample(&vec![0; l], rng)
    }

    /// Draw from the full conditional of `w` given allocation counts.
    pub fn posterior_sample<R: Rng + ?Sized>(&self, counts: &[usize], rng: &mut R) -> Result<Vec<f64>> {
        let l = counts.len();
        self.validate(l)?;
        Ok(match self {
            WeightPrior::StickBreaking { alpha_s } => {
                let mut w = vec![0.0; l];
                let mut tail: usize = counts.iter().sum();
                let mut rest = 1.0;
                for i in 0..l - 1 {
                    tail -= counts[i];
                    let (z, one_minus) = beta_pair(1.0 + counts[i] as f64, alpha_s + tail as f64, rng);
                    w[i] = rest * z;
                    rest *= one_minus;
                }
                w[l - 1] = rest;
                w
            }
            _ => {
                let shape: Vec<f64> = self
                    .dirichlet_shape(l)
                    .iter()
                    .zip(counts)
                    .map(|(a, &m)| a + m as f64)
                    .collect();
                Dirichlet::new(shape)?.sample(rng)
            }
        })
    }
}

/// `a_l = G0(l/L) - G0((l-1)/L)` for `G0 = Beta(a0, b0)`.
pub fn cdp_bin_masses(l: usize, a0: f64, b0: f64) -> Vec<f64> {
    let g = |x: f64| {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_reg(a0, b0, x)
        }
    };
    (1..=l)
        .map(|i| g(i as f64 / l as f64) - g((i - 1) as f64 / l as f64))
        .collect()
}

// (X, 1 - X) for X ~ Beta(a, b), keeping precision in both coordinates
fn beta_pair<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> (f64, f64) {
    let lx = ln_gamma_variate(a, rng);
    let ly = ln_gamma_variate(b, rng);
    let m = lx.max(ly);
    let (ex, ey) = ((lx - m).exp(), (ly - m).exp());
    (ex / (ex + ey), ey / (ex + ey))
}

/// Gaussian model: `mu ~ N(mu0, sigma0_sq)`, `sigma2 ~ IG(u0, v0)`,
/// `rho_l ~ Unif(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianPrior {
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub u0: f64,
    pub v0: f64,
}

impl Default for GaussianPrior {
    fn default() -> Self {
        GaussianPrior { mu0: 0.0, sigma0_sq: 100.0, u0: 2.0, v0: 0.1 }
    }
}

/// Poisson model: independent gamma priors (shape, rate) on `lambda`, `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoissonPrior {
    pub u_lambda: f64,
    pub v_lambda: f64,
    pub u_gamma: f64,
    pub v_gamma: f64,
}

impl Default for PoissonPrior {
    fn default() -> Self {
        PoissonPrior { u_lambda: 2.0, v_lambda: 1.0, u_gamma: 2.0, v_gamma: 1.0 }
    }
}

/// Lomax model: `alpha ~ Ga(u_alpha, v_alpha)` restricted to `alpha > 1`,
/// `phi ~ IG(u_phi, v_phi)`, and on `beta` either a flat prior or
/// independent `N(0, beta_sd^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LomaxPrior {
    pub u_alpha: f64,
    pub v_alpha: f64,
    pub u_phi: f64,
    pub v_phi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_sd: Option<f64>,
}

impl Default for LomaxPrior {
    fn default() -> Self {
        LomaxPrior { u_alpha: 6.0, v_alpha: 1.0, u_phi: 3.0, v_phi: 20.0, beta_sd: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamPrior {
    Gaussian(GaussianPrior),
    Poisson(PoissonPrior),
    Lomax(LomaxPrior),
}

/// Parameters of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub enum Theta {
    Gaussian { mu: f64, sigma2: f64, rho: Vec<f64> },
    Poisson { lambda: f64, gamma: f64 },
    Lomax { alpha: f64, phi: f64, beta: Vec<f64> },
}

impl ParamPrior {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| require(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"));
        match self {
            ParamPrior::Gaussian(p) => {
                require(p.mu0.is_finite(), || "mu0 must be finite".into())?;
                check("sigma0_sq", p.sigma0_sq)?;
                check("u0", p.u0)?;
                check("v0", p.v0)
            }
            ParamPrior::Poisson(p) => {
                check("u_lambda", p.u_lambda)?;
                check("v_lambda", p.v_lambda)?;
                check("u_gamma", p.u_gamma)?;
                check("v_gamma", p.v_gamma)
            }
            ParamPrior::Lomax(p) => {
                check("u_alpha", p.u_alpha)?;
                check("v_alpha", p.v_alpha)?;
                check("u_phi", p.u_phi)?;
                check("v_phi", p.v_phi)?;
                if let Some(sd) = p.beta_sd {
                    check("beta_sd", sd)?;
                }
                Ok(())
            }
        }
    }

    /// A prior draw for order `order` with `dim_beta` regression
    /// coefficients. A flat `beta` prior cannot be sampled.
    pub fn sample<R: Rng + ?Sized>(&self, order: usize, dim_beta: usize, rng: &mut R) -> Result<Theta> {
        self.validate()?;
        Ok(match self {
            ParamPrior::Gaussian(p) => Theta::Gaussian {
                mu: Dist::normal(p.mu0, p.sigma0_sq.sqrt())?.sample(rng),
                sigma2: Dist::inverse_gamma(p.u0, p.v0)?.sample(rng),
                rho: (0..order).map(|_| rng.random_range(-1.0..1.0)).collect(),
            },
            ParamPrior::Poisson(p) => Theta::Poisson {
                lambda: Dist::gamma(p.u_lambda, p.v_lambda)?.sample(rng),
                gamma: Dist::gamma(p.u_gamma, p.v_gamma)?.sample(rng),
            },
            ParamPrior::Lomax(p) => {
                let beta = match (p.beta_sd, dim_beta) {
                    (_, 0) => Vec::new(),
                    (Some(sd), d) => (0..d).map(|_| sd * crate::dists::std_normal(rng)).collect(),
                    (None, _) => return Err(Error::Unsupported("cannot sample from a flat prior on beta".into())),
                };
                Theta::Lomax {
                    alpha: crate::mcmc::lomax::truncated_gamma(p.u_alpha, p.v_alpha, rng)?,
                    phi: Dist::inverse_gamma(p.u_phi, p.v_phi)?.sample(rng),
                    beta,
                }
            }
        })
    }

    /// Sum of the independent log prior densities; `-inf` outside the
    /// support or for a parameter set of another family.
    pub fn log_prior(&self, theta: &Theta) -> f64 {
        match (self, theta) {
            (ParamPrior::Gaussian(p), Theta::Gaussian { mu, sigma2, rho }) => {
                if rho.iter().any(|r| !(*r > -1.0 && *r < 1.0)) {
                    return f64::NEG_INFINITY;
                }
                let lm = Dist::normal(p.mu0, p.sigma0_sq.sqrt()).map(|d| d.ln_pdf(*mu));
                let ls = Dist::inverse_gamma(p.u0, p.v0).map(|d| d.ln_pdf(*sigma2));
                match (lm, ls) {
                    (Ok(a), Ok(b)) => a + b - rho.len() as f64 * std::f64::consts::LN_2,
                    _ => f64::NAN,
                }
            }
            (ParamPrior::Poisson(p), Theta::Poisson { lambda, gamma }) => {
                let a = Dist::gamma(p.u_lambda, p.v_lambda).map(|d| d.ln_pdf(*lambda));
                let b = Dist::gamma(p.u_gamma, p.v_gamma).map(|d| d.ln_pdf(*gamma));
                match (a, b) {
                    (Ok(a), Ok(b)) => a + b,
                    _ => f64::NAN,
                }
            }
            (ParamPrior::Lomax(p), Theta::Lomax { alpha, phi, beta }) => {
                if *alpha <= 1.0 {
                    return f64::NEG_INFINITY;
                }
                let a = Dist::gamma(p.u_alpha, p.v_alpha).map(|d| d.ln_pdf(*alpha) - gamma_ur(p.u_alpha, p.v_alpha).ln());
                let b = Dist::inverse_gamma(p.u_phi, p.v_phi).map(|d| d.ln_pdf(*phi));
                let lb = match p.beta_sd {
                    None => 0.0,
                    Some(sd) => beta.iter().map(|b| crate::dists::ln_normal(*b, 0.0, sd)).sum(),
                };
                match (a, b) {
                    (Ok(a), Ok(b)) => a + b + lb,
                    _ => f64::NAN,
                }
            }
            _ => f64::NEG_INFINITY,
        }
    }
}
