//! Cavity emission spectrum from the quantum regression formula and
//! zero-delay photon statistics.
//!
//! `C(τ) = ⟨a†(τ)a(0)⟩ = Tr[a† e^{Lτ}(aρ_ss)]`. The regression vector `aρ_ss`
//! lives in the `Δ = −1` excitation sector, so only that block of the
//! Liouvillian is ever diagonalized or integrated. With `C(−τ) = C(τ)*` the
//! two-sided transform is `S(ω) = 2 Re ∫₀^∞ C(τ) e^{−iωτ} dτ`.

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{DeformationParam, FockCutoff};
use crate::dynamics::{
    propagate, sector_liouvillian, solve_steady_state, CutoffPolicy, DensityMatrix, Eigenmodes,
    PropagationMethod, SteadyState, Superoperator, DEFAULT_CONDITION_LIMIT,
};
use crate::error::{Error, Result};
use crate::grid::linspace;
use crate::linalg::{dagger, CCol};
use crate::model::{cavity_lowering, SystemParams};

/// Modes slower than this are treated as stationary.
const STATIONARY_RATE: f64 = 1e-10;

/// `⟨a†a⟩` below which `g²(0)` is undefined.
pub const MIN_PHOTON_NUMBER: f64 = 1e-14;

/// Default frequency grid, 2001 points over `ω_c ± 3g`.
pub fn default_omega_grid(g: f64) -> Vec<f64> {
    linspace(-3.0 * g, 3.0 * g, 2001)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    /// Eigenmode sum, discrete transform if the eigenbasis is unusable.
    #[default]
    Auto,
    Eigenmodes,
    DiscreteTransform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    pub method: SpectrumMethod,
    /// Propagator for the discrete-transform path.
    pub propagation: PropagationMethod,
    pub condition_limit: f64,
    pub peak_normalize: bool,
    /// Sampling step of `C(τ)` for the discrete transform.
    pub dt: f64,
    /// `C(τ)` is sampled until it falls below `tail_tolerance · C(0)`.
    pub tail_tolerance: f64,
    pub max_tau: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            method: SpectrumMethod::Auto,
            propagation: PropagationMethod::Auto,
            condition_limit: DEFAULT_CONDITION_LIMIT,
            peak_normalize: false,
            dt: 0.05,
            tail_tolerance: 1e-7,
            max_tau: 1e5,
        }
    }
}

/// Steady state together with the pieces of the regression formula.
pub struct Regression {
    pub steady: SteadyState,
    pub generator: Superoperator,
    /// `vec(aρ_ss)` in the `Δ = −1` sector.
    pub initial: CCol,
    /// Row vector of the functional `X ↦ Tr[a† X]`.
    pub readout: CCol,
    pub params: SystemParams,
}

impl Regression {
    pub fn new(params: &SystemParams, policy: &CutoffPolicy) -> Result<Self> {
        let steady = solve_steady_state(params, policy)?;
        let effective = SystemParams {
            lambda: steady.effective_lambda,
            ..*params
        };
        let cutoff = steady.cutoff;
        let a = cavity_lowering(cutoff, DeformationParam::new(effective.lambda)?);
        let generator = sector_liouvillian(&effective, cutoff, -1)?;
        let a_rho = &a * steady.rho.matrix();
        let basis = generator.basis();
        let leak = basis.leakage(&a_rho);
        if leak > 1e-12 {
            return Err(Error::Numerical(format!(
                "a·rho leaks out of the regression sector by {leak:.3e}"
            )));
        }
        let initial = basis.vectorize(&a_rho);
        let readout = basis.trace_against(&dagger(&a));
        Ok(Regression {
            steady,
            generator,
            initial,
            readout,
            params: effective,
        })
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.steady.cutoff
    }

    fn read(&self, v: &CCol) -> c64 {
        (0..v.nrows()).map(|k| self.readout[k] * v[k]).sum()
    }

    /// `C(0) = ⟨a†a⟩`.
    pub fn mean_photons(&self) -> f64 {
        self.read(&self.initial).re
    }

    /// `C(τ)` on an ascending grid starting at 0.
    pub fn correlation(
        &self,
        taus: &[f64],
        method: PropagationMethod,
        condition_limit: f64,
    ) -> Result<(Vec<c64>, crate::dynamics::Trajectory)> {
        let tr = propagate(&self.generator, &self.initial, taus, method, condition_limit)?;
        let values = tr.states.iter().map(|s| self.read(s)).collect();
        Ok((values, tr))
    }

    /// Eigenvalues and residues `r_k` with `C(τ) = Σ r_k e^{λ_k τ}`,
    /// stationary modes removed.
    pub fn modes(&self, condition_limit: f64) -> Result<ModeSum> {
        let modes = Eigenmodes::new(&self.generator)?;
        if modes.condition() > condition_limit {
            return Err(Error::Numerical(format!(
                "regression eigenbasis condition {:.3e} exceeds {condition_limit:.1e}",
                modes.condition()
            )));
        }
        let c = modes.coefficients(&self.initial);
        let v = modes.vectors();
        let c0 = self.mean_photons();
        let mut kept = Vec::new();
        let mut total = c64::new(0.0, 0.0);
        for (k, &lambda) in modes.values().iter().enumerate() {
            let tv: c64 = (0..v.nrows()).map(|i| self.readout[i] * v[(i, k)]).sum();
            let r = tv * c[k];
            total += r;
            if lambda.re.abs() < STATIONARY_RATE {
                if r.norm() >= STATIONARY_RATE * c0.max(f64::MIN_POSITIVE) {
                    return Err(Error::Numerical(format!(
                        "stationary regression mode {lambda} carries residue {:.3e}",
                        r.norm()
                    )));
                }
                continue;
            }
            kept.push((lambda, r));
        }
        // the residues must reassemble C(0); otherwise the basis is not trustworthy
        if (total - c64::new(c0, 0.0)).norm() > 1e-6 * c0.max(1e-300) {
            return Err(Error::Numerical(format!(
                "eigenmode residues sum to {total}, expected C(0) = {c0:.6e}"
            )));
        }
        Ok(ModeSum {
            modes: kept,
            condition: modes.condition(),
        })
    }
}

/// `C(τ) = Σ r_k e^{λ_k τ}`.
#[derive(Clone, Debug)]
pub struct ModeSum {
    pub modes: Vec<(c64, c64)>,
    pub condition: f64,
}

impl ModeSum {
    pub fn correlation(&self, tau: f64) -> c64 {
        self.modes.iter().map(|&(l, r)| r * (l * tau).exp()).sum()
    }

    /// `2 Re Σ r_k / (iω − λ_k)`.
    pub fn spectrum(&self, omega: f64) -> f64 {
        let iw = c64::new(0.0, omega);
        2.0 * self.modes.iter().map(|&(l, r)| r / (iw - l)).sum::<c64>().re
    }

    /// Smallest decay rate among the retained modes.
    pub fn slowest_rate(&self) -> f64 {
        self.modes.iter().map(|(l, _)| -l.re).fold(f64::INFINITY, f64::min)
    }
}

/// `C(τ) = ⟨a†(τ)a(0)⟩` in the steady state.
pub fn correlation(
    params: &SystemParams,
    policy: &CutoffPolicy,
    taus: &[f64],
    method: PropagationMethod,
) -> Result<Vec<c64>> {
    let reg = Regression::new(params, policy)?;
    Ok(reg.correlation(taus, method, DEFAULT_CONDITION_LIMIT)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub params: SystemParams,
    pub n_max: usize,
    /// λ handed to the solvers (offset from −1/2 at the critical point).
    pub effective_lambda: f64,
    pub top_population: f64,
    pub mean_photons: f64,
    /// `eigenmodes` or `discrete-transform`.
    pub method: String,
    /// True if the eigenmode path was requested but could not be used.
    pub fell_back: bool,
    pub condition: Option<f64>,
    /// `none` or `peak`.
    pub normalization: String,
    /// Frequencies are relative to this cavity frequency.
    pub omega_origin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    pub intensity: Vec<f64>,
    pub metadata: SpectrumMetadata,
}

impl SpectrumResult {
    pub fn max(&self) -> f64 {
        self.intensity.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Peak positions, see [`find_peaks`].
    pub fn peaks(&self) -> Vec<f64> {
        find_peaks(&self.omega, &self.intensity, PEAK_THRESHOLD)
            .into_iter()
            .map(|i| self.omega[i])
            .collect()
    }
}

/// Relative height below which local maxima are ignored.
pub const PEAK_THRESHOLD: f64 = 0.02;

/// Indices of interior local maxima higher than `threshold · max`. A flat top
/// is reported once, at its left edge.
pub fn find_peaks(_omega: &[f64], values: &[f64], threshold: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] && values[i] > threshold * max {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// One-sided trapezoid transform of uniformly sampled `C(τ)` with a cosine
/// taper over the last tenth of the record.
pub fn discrete_transform(samples: &[c64], dt: f64, omegas: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let taper_start = n - n / 10;
    let weighted: Vec<c64> = samples
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            let mut w = if m == 0 || m == n - 1 { 0.5 } else { 1.0 };
            if m >= taper_start && n > 10 {
                let s = (m - taper_start) as f64 / (n - 1 - taper_start).max(1) as f64;
                w *= 0.5 * (1.0 + (std::f64::consts::PI * s).cos());
            }
            c * w
        })
        .collect();
    omegas
        .par_iter()
        .map(|&w| {
            let step = c64::cis(-w * dt);
            let mut phase = c64::new(1.0, 0.0);
            let mut acc = c64::new(0.0, 0.0);
            for (m, &c) in weighted.iter().enumerate() {
                // recompute the phase exactly every 256 samples to bound drift
                if m % 256 == 0 {
                    phase = c64::cis(-w * dt * m as f64);
                }
                acc += c * phase;
                phase *= step;
            }
            2.0 * dt * acc.re
        })
        .collect()
}

/// Emission spectrum on `omega` (relative to `ω_c`).
pub fn emission_spectrum(
    params: &SystemParams,
    policy: &CutoffPolicy,
    omega: &[f64],
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    crate::grid::check_ascending(omega).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let reg = Regression::new(params, policy)?;
    spectrum_from_regression(&reg, params, omega, opts)
}

pub fn spectrum_from_regression(
    reg: &Regression,
    params: &SystemParams,
    omega: &[f64],
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let c0 = reg.mean_photons();
    let absolute: Vec<f64> = omega.iter().map(|w| w + params.omega_c).collect();

    let eigen = match opts.method {
        SpectrumMethod::DiscreteTransform => None,
        SpectrumMethod::Eigenmodes => Some(reg.modes(opts.condition_limit)?),
        SpectrumMethod::Auto => match reg.modes(opts.condition_limit) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("{e}; using the discrete transform");
                None
            }
        },
    };
    let fell_back = opts.method == SpectrumMethod::Auto && eigen.is_none();

    let (mut intensity, method, condition) = match &eigen {
        Some(modes) => {
            let values: Vec<f64> = absolute.par_iter().map(|&w| modes.spectrum(w)).collect();
            let max = values.iter().copied().fold(0.0, f64::max);
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -1e-9 * max {
                return Err(Error::Numerical(format!(
                    "eigenmode spectrum dips to {min:.3e} (max {max:.3e})"
                )));
            }
            (values, "eigenmodes", Some(modes.condition))
        }
        None => {
            let propagation = if fell_back {
                PropagationMethod::Integrator
            } else {
                opts.propagation
            };
            let (samples, condition) = sample_correlation(reg, opts, propagation, c0)?;
            let values = discrete_transform(&samples, opts.dt, &absolute);
            let max = values.iter().copied().fold(0.0, f64::max);
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -1e-9 * max {
                log::warn!("discrete-transform ringing down to {:.2e} of max", min / max);
            }
            (values, "discrete-transform", condition)
        }
    };

    if opts.peak_normalize {
        let max = intensity.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            intensity.iter_mut().for_each(|v| *v /= max);
        }
    }

    Ok(SpectrumResult {
        omega: omega.to_vec(),
        intensity,
        metadata: SpectrumMetadata {
            params: *params,
            n_max: reg.cutoff().n_max(),
            effective_lambda: reg.params.lambda,
            top_population: reg.steady.top_population,
            mean_photons: c0,
            method: method.to_string(),
            fell_back,
            condition,
            normalization: if opts.peak_normalize { "peak" } else { "none" }.to_string(),
            omega_origin: params.omega_c,
        },
    })
}

/// Sample `C(τ)` on `0, dt, 2dt, …` in chunks until the last chunk stays
/// below `tail_tolerance · C(0)`.
fn sample_correlation(
    reg: &Regression,
    opts: &SpectrumOptions,
    method: PropagationMethod,
    c0: f64,
) -> Result<(Vec<c64>, Option<f64>)> {
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    let chunk = 2000usize;
    let taus: Vec<f64> = (0..=chunk).map(|m| m as f64 * opts.dt).collect();
    let mut samples: Vec<c64> = Vec::new();
    let mut state = reg.initial.clone();
    let mut condition = None;
    loop {
        let tr = propagate(&reg.generator, &state, &taus, method, opts.condition_limit)?;
        condition = condition.or(tr.condition);
        let start = if samples.is_empty() { 0 } else { 1 };
        let chunk_values: Vec<c64> = tr.states[start..].iter().map(|s| reg.read(s)).collect();
        let tail = chunk_values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        samples.extend(chunk_values);
        state = tr.states.last().expect("non-empty grid").clone();
        if tail < opts.tail_tolerance * c0 {
            break;
        }
        if (samples.len() - 1) as f64 * opts.dt >= opts.max_tau {
            return Err(Error::Numerical(format!(
                "C(tau) has not decayed below {:.1e}·C(0) by tau = {}",
                opts.tail_tolerance, opts.max_tau
            )));
        }
    }
    Ok((samples, condition))
}

/// Steady-state photon statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2 {
    pub g2: f64,
    pub mean_photons: f64,
    pub n_max: usize,
    pub top_population: f64,
    pub effective_lambda: f64,
}

/// `⟨a†a†aa⟩ / ⟨a†a⟩²` for a density matrix on the given cutoff.
pub fn g2_of(rho: &DensityMatrix, cutoff: FockCutoff, lambda: DeformationParam) -> Result<(f64, f64)> {
    let a = cavity_lowering(cutoff, lambda);
    let ad = dagger(&a);
    let aa = &a * &a;
    let mean = rho.expectation(&(&ad * &a)).re;
    if !(mean >= MIN_PHOTON_NUMBER) {
        return Err(Error::UndefinedStatistics(mean));
    }
    let num = rho.expectation(&(&(&ad * &ad) * &aa)).re;
    Ok((num / (mean * mean), mean))
}

/// `g²(0)` in the steady state.
pub fn g2_zero(params: &SystemParams, policy: &CutoffPolicy) -> Result<G2> {
    let steady = solve_steady_state(params, policy)?;
    let (g2, mean_photons) = g2_of(
        &steady.rho,
        steady.cutoff,
        DeformationParam::new(steady.effective_lambda)?,
    )?;
    Ok(G2 {
        g2,
        mean_photons,
        n_max: steady.cutoff.n_max(),
        top_population: steady.top_population,
        effective_lambda: steady.effective_lambda,
    })
}
