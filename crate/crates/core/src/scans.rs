//! Parameter sweeps behind the ladder, spectrum and photon-statistics figures.
//!
//! Ladder scans use the closed-form rung spectrum, so they involve no Fock
//! truncation. Dissipative scans solve one steady state per grid point on a
//! bounded worker pool; results are gathered by index, so output order never
//! depends on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::CutoffPolicy;
use crate::error::{Error, Result};
use crate::grid::{check_ascending, linspace, logspace};
use crate::model::{inner_doublet, transition_parity, SystemParams, TransitionParity};
use crate::spectrum::{emission_spectrum, g2_zero, SpectrumOptions, SpectrumResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const FIG1_RUNGS: usize = 19;
pub const FIG2_RUNGS: usize = 3;

pub fn default_lambda_grid() -> Vec<f64> {
    linspace(-0.5, 1.0, 301)
}

pub fn default_delta_grid() -> Vec<f64> {
    linspace(-4.0, 4.0, 401)
}

pub fn default_pump_grid() -> Vec<f64> {
    logspace(1e-3, 10.0, 60)
}

/// The four deformations compared in the photon-statistics figure.
pub const G2_LAMBDAS: [f64; 4] = [0.0, 0.5, -0.5, 0.9];

/// Emission-spectrum panels: resonant `λ ∈ {0, 0.5, −0.5}` and detuned
/// `λ ∈ {0, 0.9}` at `δ = 0.7g`.
pub fn reference_spectrum_configs() -> Vec<(f64, f64)> {
    vec![(0.0, 0.0), (0.5, 0.0), (-0.5, 0.0), (0.0, 0.7), (0.9, 0.7)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub scan: String,
    pub version: String,
    pub params: SystemParams,
    /// Truncation policy, absent for closed-form scans.
    pub cutoff_policy: Option<CutoffPolicy>,
    pub method: String,
}

/// One inner-doublet pair, relative to `ω_c` in units of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubletRecord {
    pub rung: usize,
    pub parity: String,
    pub omega_minus: f64,
    pub omega_plus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub x: f64,
    pub doublets: Vec<DoubletRecord>,
}

/// Doublet positions along one axis (`lambda` or `delta`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderScan {
    pub axis: String,
    pub points: Vec<LadderPoint>,
    pub metadata: ScanMetadata,
}

impl LadderScan {
    pub const COLUMNS: [&'static str; 5] = ["", "rung", "parity", "omega_minus", "omega_plus"];

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = Self::COLUMNS.iter().map(|s| s.to_string()).collect();
        h[0] = self.axis.clone();
        h
    }

    /// Flat table, one row per (grid point, rung).
    pub fn rows(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .flat_map(|p| {
                p.doublets.iter().map(move |d| {
                    vec![
                        crate::output::fmt_f64(p.x),
                        d.rung.to_string(),
                        d.parity.clone(),
                        crate::output::fmt_f64(d.omega_minus),
                        crate::output::fmt_f64(d.omega_plus),
                    ]
                })
            })
            .collect()
    }

    pub fn series(&self, rung: usize) -> Vec<(f64, DoubletRecord)> {
        self.points
            .iter()
            .filter_map(|p| p.doublets.iter().find(|d| d.rung == rung).map(|d| (p.x, d.clone())))
            .collect()
    }
}

fn doublets_at(params: &SystemParams, n_rungs: usize) -> Result<Vec<DoubletRecord>> {
    if !(params.g > 0.0) {
        return Err(Error::InvalidInput("ladder scans are in units of g and need g > 0".into()));
    }
    (1..=n_rungs)
        .map(|n| {
            let d = inner_doublet(n, params)?.shifted(params.omega_c);
            Ok(DoubletRecord {
                rung: n,
                parity: transition_parity(n).to_string(),
                omega_minus: d.minus / params.g,
                omega_plus: d.plus / params.g,
            })
        })
        .collect()
}

fn ladder(
    name: &str,
    axis: &str,
    grid: &[f64],
    params: &SystemParams,
    n_rungs: usize,
    at: impl Fn(f64) -> SystemParams,
) -> Result<LadderScan> {
    check_ascending(grid)?;
    if n_rungs == 0 {
        return Err(Error::InvalidInput("at least one rung is required".into()));
    }
    let points = grid
        .iter()
        .map(|&x| {
            Ok(LadderPoint {
                x,
                doublets: doublets_at(&at(x), n_rungs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LadderScan {
        axis: axis.into(),
        points,
        metadata: ScanMetadata {
            scan: name.into(),
            version: VERSION.into(),
            params: *params,
            cutoff_policy: None,
            method: "closed-form".into(),
        },
    })
}

/// Inner doublets of rungs `1..=n_rungs` across `lambda_grid`.
pub fn doublets_vs_lambda(
    n_rungs: usize,
    lambda_grid: &[f64],
    params: &SystemParams,
) -> Result<LadderScan> {
    if lambda_grid.first().is_some_and(|&l| l < -0.5) {
        return Err(Error::LambdaOutOfRange(lambda_grid[0]));
    }
    ladder("doublets_vs_lambda", "lambda", lambda_grid, params, n_rungs, |lambda| {
        SystemParams { lambda, ..*params }
    })
}

/// Inner doublets of rungs `1..=n_rungs` across `delta_grid` at fixed λ.
pub fn doublets_vs_detuning(
    lambda: f64,
    delta_grid: &[f64],
    params: &SystemParams,
    n_rungs: usize,
) -> Result<LadderScan> {
    let base = SystemParams { lambda, ..*params };
    base.validate()?;
    ladder("doublets_vs_detuning", "delta", delta_grid, &base, n_rungs, |delta| {
        SystemParams { delta, ..base }
    })
}

/// Whether a rung's transition parity is even.
pub fn is_even(rung: usize) -> bool {
    transition_parity(rung) == TransitionParity::Even
}

/// Emission spectra for `(λ, δ)` pairs at the rates in `params`.
pub fn spectra_suite(
    configs: &[(f64, f64)],
    params: &SystemParams,
    policy: &CutoffPolicy,
    omega: &[f64],
    opts: &SpectrumOptions,
) -> Result<Vec<SpectrumResult>> {
    configs
        .par_iter()
        .map(|&(lambda, delta)| {
            let p = SystemParams {
                lambda,
                delta,
                ..*params
            };
            emission_spectrum(&p, policy, omega, opts)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Point {
    pub lambda: f64,
    pub pump: f64,
    /// NaN when the cavity is empty.
    #[serde(with = "nan_as_null")]
    pub g2: f64,
    pub mean_photons: f64,
    pub n_max: usize,
    pub top_population: f64,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Scan {
    pub lambdas: Vec<f64>,
    pub pumps: Vec<f64>,
    /// λ-major: all pumps for `lambdas[0]`, then `lambdas[1]`, …
    pub points: Vec<G2Point>,
    pub metadata: ScanMetadata,
}

impl G2Scan {
    pub fn header(&self) -> Vec<String> {
        vec!["lambda".into(), "pump".into(), "g2".into()]
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        use crate::output::fmt_f64;
        self.points
            .iter()
            .map(|p| vec![fmt_f64(p.lambda), fmt_f64(p.pump), fmt_f64(p.g2)])
            .collect()
    }

    pub fn series(&self, lambda: f64) -> Vec<&G2Point> {
        self.points.iter().filter(|p| p.lambda == lambda).collect()
    }
}

/// Build a worker pool; `workers = 0` means one per core.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// `g²(0)` over every `(λ, P)` pair. An empty cavity yields a NaN sentinel
/// with a warning; any other failure aborts the scan.
pub fn g2_vs_pump(
    lambdas: &[f64],
    pump_grid: &[f64],
    params: &SystemParams,
    policy: &CutoffPolicy,
    pool: &rayon::ThreadPool,
) -> Result<G2Scan> {
    if lambdas.is_empty() {
        return Err(Error::Config("no lambda values given".into()));
    }
    check_ascending(pump_grid)?;
    if pump_grid[0] < 0.0 {
        return Err(Error::InvalidInput("pump rates must be non-negative".into()));
    }
    policy.validate()?;
    let jobs: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| pump_grid.iter().map(move |&p| (l, p)))
        .collect();
    let points = pool.install(|| {
        jobs.par_iter()
            .map(|&(lambda, pump)| {
                let p = SystemParams {
                    lambda,
                    pump,
                    ..*params
                };
                match g2_zero(&p, policy) {
                    Ok(r) => Ok(G2Point {
                        lambda,
                        pump,
                        g2: r.g2,
                        mean_photons: r.mean_photons,
                        n_max: r.n_max,
                        top_population: r.top_population,
                    }),
                    Err(Error::UndefinedStatistics(mean)) => {
                        log::warn!("g2 undefined at lambda = {lambda}, P = {pump}: <a+a> = {mean:.2e}");
                        Ok(G2Point {
                            lambda,
                            pump,
                            g2: f64::NAN,
                            mean_photons: mean,
                            n_max: policy.initial,
                            top_population: 0.0,
                        })
                    }
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(G2Scan {
        lambdas: lambdas.to_vec(),
        pumps: pump_grid.to_vec(),
        points,
        metadata: ScanMetadata {
            scan: "g2_vs_pump".into(),
            version: VERSION.into(),
            params: *params,
            cutoff_policy: Some(*policy),
            method: "steady-state".into(),
        },
    })
}
