//! Ready-made models, priors and run shapes for the simulation study and
//! the two real-data fits, plus the weight-recovery grid runner.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagfc::quantile_sorted;
use crate::error::Result;
use crate::mcmc::{run_fit, Design, FitConfig, SeriesData};
use crate::mtd::{Init, MtdModel};
use crate::priors::{GaussianPrior, LomaxPrior, ParamPrior, PoissonPrior, WeightPrior};
use crate::rng::{substream, StdRng};
use crate::transitions::Transition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::One, Scenario::Two];

    pub fn number(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
        }
    }

    pub fn rho(self) -> [f64; 5] {
        match self {
            Scenario::One => [0.7, 0.3, 0.1, 0.05, 0.05],
            Scenario::Two => [0.4, 0.1, 0.7, 0.1, 0.5],
        }
    }

    pub fn weights(self) -> Vec<f64> {
        match self {
            Scenario::One => {
                let w: Vec<f64> = (1..=5).map(|i| (-(i as f64)).exp()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            }
            Scenario::Two => vec![0.2, 0.05, 0.45, 0.05, 0.25],
        }
    }

    /// Gaussian MTD of order 5 with `mu = 10`, `sigma2 = 100`.
    pub fn model(self) -> MtdModel {
        let comps = self.rho().iter().map(|&r| Transition::gaussian(10.0, 100.0, r).expect("valid")).collect();
        MtdModel::new(self.weights(), comps).expect("valid scenario")
    }

    /// True weights padded with zeros to order `order`.
    pub fn truth(self, order: usize) -> Vec<f64> {
        let mut w = self.weights();
        w.resize(order.max(5), 0.0);
        w.truncate(order);
        w
    }
}

/// `(alpha_s, b0)` keyed to the orders 5, 15 and 25; other orders take the
/// nearest rung.
pub fn prior_ladder(order: usize) -> (f64, f64) {
    if order <= 10 {
        (1.0, 3.0)
    } else if order <= 20 {
        (2.0, 6.0)
    } else {
        (3.0, 7.0)
    }
}

/// The three weight priors of the simulation study for order `order`.
pub fn study_priors(order: usize) -> Vec<(&'static str, WeightPrior)> {
    let (alpha_s, b0) = prior_ladder(order);
    vec![
        ("dir", WeightPrior::dirichlet_default()),
        ("sb", WeightPrior::StickBreaking { alpha_s }),
        ("cdp", WeightPrior::CdfBased { alpha0: 5.0, a0: 1.0, b0 }),
    ]
}

/// Iterations, burn-in and thinning of the long simulation-study runs.
pub fn simulation_run() -> FitConfig {
    FitConfig { iters: 165_000, burnin: 5_000, thin: 20, ..Default::default() }
}

/// Iterations, burn-in and thinning of the real-data runs.
pub fn real_data_run() -> FitConfig {
    FitConfig { iters: 85_000, burnin: 5_000, thin: 10, ..Default::default() }
}

/// A fully specified fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitPreset {
    pub order: usize,
    pub weight_prior: WeightPrior,
    pub param_prior: ParamPrior,
    pub design: Option<Design>,
    pub config: FitConfig,
}

/// Poisson MTD for daily counts: `L = 20`, `Ga(2, 1)` on `lambda` and
/// `gamma`, with `SB(2)` or (when `cdp`) `CDP(5, 1, 8)` weights.
pub fn crime_poisson(cdp: bool) -> FitPreset {
    FitPreset {
        order: 20,
        weight_prior: if cdp {
            WeightPrior::CdfBased { alpha0: 5.0, a0: 1.0, b0: 8.0 }
        } else {
            WeightPrior::StickBreaking { alpha_s: 2.0 }
        },
        param_prior: ParamPrior::Poisson(PoissonPrior::default()),
        design: None,
        config: real_data_run(),
    }
}

/// Seasonal multiplicative Lomax MTD for weekly totals: `L = 10`, three
/// harmonics of period 52, flat `beta`, `Ga(6, 1)` on `alpha`,
/// `IG(3, 20)` on `phi`, with `SB(1)` or (when `cdp`) `CDP(5, 1, 6.5)` weights.
pub fn precip_lomax(cdp: bool) -> FitPreset {
    FitPreset {
        order: 10,
        weight_prior: if cdp {
            WeightPrior::CdfBased { alpha0: 5.0, a0: 1.0, b0: 6.5 }
        } else {
            WeightPrior::StickBreaking { alpha_s: 1.0 }
        },
        param_prior: ParamPrior::Lomax(LomaxPrior::default()),
        design: Some(Design::Harmonic { period: 52.0, harmonics: 3 }),
        config: real_data_run(),
    }
}

/// Posterior summary of the weights for one (scenario, order, prior) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub scenario: u8,
    pub order: usize,
    pub prior: String,
    pub truth: Vec<f64>,
    pub prior_mean: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario: Scenario,
    pub order: usize,
    pub prior_name: String,
    pub prior: WeightPrior,
}

/// All 18 cells: both scenarios, orders 5/15/25, three priors each.
pub fn full_grid() -> Vec<Cell> {
    let mut cells = Vec::new();
    for s in Scenario::ALL {
        for order in [5, 15, 25] {
            for (name, prior) in study_priors(order) {
                cells.push(Cell { scenario: s, order, prior_name: name.into(), prior });
            }
        }
    }
    cells
}

/// Simulated data for a scenario: `n` values from the stationary start,
/// on a stream fixed by `seed` and the scenario.
pub fn scenario_data(s: Scenario, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = substream(seed, 1_000 + s.number() as u64);
    s.model().simulate(n, &mut rng, &Init::FromMarginal)
}

/// Fit one cell to `data` with the Gaussian priors of the study.
pub fn run_cell(cell: &Cell, data: &[f64], cfg: &FitConfig) -> Result<CellResult> {
    let pp = ParamPrior::Gaussian(GaussianPrior::default());
    let fit = run_fit(&SeriesData::new(data.to_vec()), cell.order, &cell.prior, &pp, cfg)?;
    let l = cell.order;
    let mut mean = vec![0.0; l];
    let mut lower = vec![0.0; l];
    let mut upper = vec![0.0; l];
    for j in 0..l {
        let mut col: Vec<f64> = fit.draws.iter().map(|d| d.w[j]).collect();
        mean[j] = col.iter().sum::<f64>() / col.len() as f64;
        col.sort_by(f64::total_cmp);
        lower[j] = quantile_sorted(&col, 0.025);
        upper[j] = quantile_sorted(&col, 0.975);
    }
    Ok(CellResult {
        scenario: cell.scenario.number(),
        order: l,
        prior: cell.prior_name.clone(),
        truth: cell.scenario.truth(l),
        prior_mean: cell.prior.prior_mean(l)?,
        mean,
        lower,
        upper,
    })
}

/// Fit the given cells concurrently. Each scenario's data set is simulated
/// once from `seed`; cell `i` fits with a seed derived from `(seed, i)`.
pub fn run_grid(cells: &[Cell], n: usize, cfg: &FitConfig, seed: u64) -> Result<Vec<CellResult>> {
    let d1 = scenario_data(Scenario::One, n, seed)?;
    let d2 = scenario_data(Scenario::Two, n, seed)?;
    cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let data = match c.scenario {
                Scenario::One => &d1,
                Scenario::Two => &d2,
            };
            let cfg = FitConfig { seed: cell_seed(seed, i), ..cfg.clone() };
            run_cell(c, data, &cfg)
        })
        .collect()
}

fn cell_seed(seed: u64, i: usize) -> u64 {
    let mut r = StdRng::seed_from_u64(seed);
    r.set_stream(1 + i as u64);
    r.random()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_parameters() {
        let m = Scenario::One.model();
        let w = m.weights();
        assert!((w[0] / w[1] - 1f64.exp()).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(Scenario::Two.weights(), vec![0.2, 0.05, 0.45, 0.05, 0.25]);
        assert_eq!(Scenario::Two.truth(7)[5..], [0.0, 0.0]);
    }

    #[test]
    fn ladder() {
        assert_eq!(prior_ladder(5), (1.0, 3.0));
        assert_eq!(prior_ladder(15), (2.0, 6.0));
        assert_eq!(prior_ladder(25), (3.0, 7.0));
        assert_eq!(full_grid().len(), 18);
    }

    #[test]
    fn run_shapes() {
        assert_eq!(simulation_run().stored_draws(), 8000);
        assert_eq!(real_data_run().stored_draws(), 8000);
    }

    #[test]
    fn small_grid_is_deterministic() {
        let cells: Vec<Cell> = full_grid().into_iter().filter(|c| c.order == 5).take(2).collect();
        let cfg = FitConfig { iters: 60, burnin: 10, ..Default::default() };
        let a = run_grid(&cells, 200, &cfg, 3).unwrap();
        let b = run_grid(&cells, 200, &cfg, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.lower.iter().zip(&r.upper).all(|(l, u)| l <= u)));
    }
}
