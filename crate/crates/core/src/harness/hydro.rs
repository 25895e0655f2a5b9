use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::{Report, Table};
use crate::error::{Error, Result};
use crate::kmc::Simulator;
use crate::lattice::{Configuration, Lattice, State};
use crate::measures::empirical_pair;
use crate::pde::{regime_from_theta, BoundaryRegime, PdeProblem};

/// Seed for replica `replica` at lattice size `n`, derived from `base`
/// through a separate ChaCha stream.
pub fn derive_seed(base: u64, n: usize, replica: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((n as u64) << 32) | replica as u64);
    rng.next_u64()
}

/// Independent site-wise sample with `P(eta(x) = i) = gamma_i(x/N)`.
pub fn sample_product(
    lat: &Lattice,
    gamma: &dyn Fn(&[f64]) -> [f64; 3],
    rng: &mut impl Rng,
) -> Configuration {
    let states = (0..lat.site_count())
        .map(|x| {
            let g = gamma(&lat.position(x));
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, &gi) in g.iter().enumerate() {
                acc += gi;
                if u < acc {
                    return (i + 1) as State;
                }
            }
            0
        })
        .collect();
    Configuration::from_states(states).expect("states in range")
}

/// Initial configuration for a run seeded with `seed`, drawn from stream 1
/// so it never overlaps the dynamics.
pub fn initial_sample(
    lat: &Lattice,
    gamma: &dyn Fn(&[f64]) -> [f64; 3],
    seed: u64,
) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    sample_product(lat, gamma, &mut rng)
}

/// Regime implied by the thetas, cross-checked against an explicit override.
pub fn dispatch_regime(cfg: &ExperimentConfig) -> Result<BoundaryRegime> {
    let implied = regime_from_theta(cfg.params.theta_left, cfg.params.theta_right)?;
    if let Some(r) = cfg.regime {
        if r != implied {
            return Err(Error::RegimeMismatch(format!(
                "thetas ({}, {}) give {} but the config asks for {}",
                cfg.params.theta_left,
                cfg.params.theta_right,
                implied.label(),
                r.label()
            )));
        }
    }
    Ok(implied)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroRow {
    pub n: usize,
    pub time: f64,
    /// Replica mean of `max_G |<pi^N_t, G> - <rho_t, G>|`.
    pub mean: f64,
    pub se: f64,
    /// Replica mean of `|<pi^N_t, G> - <rho_t, G>|` per catalog entry.
    pub per_function: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroReport {
    pub regime: String,
    pub functions: Vec<String>,
    pub replicas: usize,
    pub rows: Vec<HydroRow>,
    /// Per snapshot time: does the error drop between every pair of
    /// consecutive sizes by more than two combined standard errors?
    pub decreasing: Vec<(f64, bool)>,
    pub passed: bool,
}

pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `a` exceeds `b` by more than two combined standard errors.
pub fn clearly_above(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 - b.0 > 2.0 * (a.1 * a.1 + b.1 * b.1).sqrt()
}

pub fn hydrodynamic_check(cfg: &ExperimentConfig) -> Result<HydroReport> {
    cfg.validate()?;
    if cfg.lattice_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "lattice sizes must be strictly ascending".into(),
        ));
    }
    if cfg.grid.interval != (-1.0, 1.0) {
        return Err(Error::InvalidConfig(
            "the hydrodynamic check needs the grid on [-1, 1]".into(),
        ));
    }
    let regime = dispatch_regime(cfg)?;
    let p = cfg.params;
    let b = cfg.boundary_data()?;
    let gamma = cfg.initial.resolve(&p, cfg.grid.interval)?;
    let functions = cfg.test_functions();
    let times = {
        let mut t = cfg.snapshot_times();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    };

    let problem = PdeProblem::new(cfg.grid.build()?, p, regime, b.clone())?;
    let u0 = cfg.initial_profile()?;
    let dt = cfg.dt.unwrap_or_else(|| problem.auto_dt());
    let solved = problem.solve(&u0, cfg.t_end, dt, &times)?;
    let pde_pairs: Vec<Vec<f64>> = solved
        .snapshots
        .iter()
        .map(|(_, prof)| {
            functions
                .iter()
                .map(|g| prof.pair(&|u| g.eval(u)))
                .collect()
        })
        .collect();

    let lattices: Vec<Lattice> = cfg
        .lattice_sizes
        .iter()
        .map(|&n| Lattice::new(n, cfg.dim))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..lattices.len())
        .flat_map(|i| (0..cfg.replicas).map(move |r| (i, r)))
        .collect();
    // Per task: for each time, |empirical - pde| per function.
    let deviations: Vec<Vec<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(i, r)| {
            let lat = &lattices[i];
            let seed = derive_seed(cfg.seed, lat.n(), r);
            let initial = initial_sample(lat, &|u| gamma(u), seed);
            let mut sim = Simulator::new(lat, &p, &b, initial, seed)?;
            let mut out = Vec::with_capacity(times.len());
            sim.advance_to(
                cfg.t_end,
                &times,
                |_, c| {
                    let k = out.len();
                    out.push(
                        functions
                            .iter()
                            .enumerate()
                            .map(|(j, g)| {
                                (empirical_pair(c, lat, &|u| g.eval(u)) - pde_pairs[k][j]).abs()
                            })
                            .collect::<Vec<f64>>(),
                    );
                },
                None,
            )?;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, lat) in lattices.iter().enumerate() {
        let block = &deviations[i * cfg.replicas..(i + 1) * cfg.replicas];
        for (k, &t) in times.iter().enumerate() {
            let stats: Vec<f64> = block
                .iter()
                .map(|d| d[k].iter().cloned().fold(0.0, f64::max))
                .collect();
            let (mean, se) = mean_se(&stats);
            let per_function = (0..functions.len())
                .map(|j| block.iter().map(|d| d[k][j]).sum::<f64>() / cfg.replicas as f64)
                .collect();
            rows.push(HydroRow {
                n: lat.n(),
                time: t,
                mean,
                se,
                per_function,
            });
        }
    }
    let decreasing: Vec<(f64, bool)> = times
        .iter()
        .map(|&t| {
            let seq: Vec<&HydroRow> = rows.iter().filter(|r| r.time == t).collect();
            let ok = seq
                .windows(2)
                .all(|w| clearly_above((w[0].mean, w[0].se), (w[1].mean, w[1].se)));
            (t, ok)
        })
        .collect();
    let passed = decreasing.iter().all(|d| d.1);
    Ok(HydroReport {
        regime: regime.label(),
        functions: functions.iter().map(|f| f.name.to_string()).collect(),
        replicas: cfg.replicas,
        rows,
        decreasing,
        passed,
    })
}

impl HydroReport {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("hydro-check");
        r.passed = Some(self.passed);
        r.set("regime", &self.regime);
        r.set("replicas", self.replicas);
        r.set("functions", &self.functions);
        r.set("decreasing", &self.decreasing);
        let mut t = Table::new("errors", &["n", "time", "mean", "se"]);
        let mut cols: Vec<String> = vec!["n".into(), "time".into()];
        cols.extend(self.functions.iter().cloned());
        let mut f = Table {
            name: "per_function".into(),
            columns: cols,
            rows: Vec::new(),
        };
        for row in &self.rows {
            t.push(vec![row.n as f64, row.time, row.mean, row.se]);
            let mut v = vec![row.n as f64, row.time];
            v.extend(&row.per_function);
            f.push(v);
        }
        r.tables.push(t);
        r.tables.push(f);
        r
    }
}
