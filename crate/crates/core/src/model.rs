//! Deformed Jaynes-Cummings Hamiltonian on the emitter ⊗ Fock space, its
//! analytic rung spectrum and the one-photon transition bookkeeping.
//!
//! Composite basis ordering is emitter-major: index = `qe * (n_max + 1) + n`,
//! i.e. `|G,0⟩, …, |G,n_max⟩, |X,0⟩, …, |X,n_max⟩`.
//!
//! Rung `n ≥ 1` is the invariant subspace `{|G,n⟩, |X,n-1⟩}`. In the rung
//! basis the Hamiltonian reads
//!
//! ```text
//! H_n = [ (n+λ)ω_c − δ/2        g sqrt(n + 2λξ(n)) ]
//!       [ g sqrt(n + 2λξ(n))    (n+λ)ω_c + δ/2     ]
//! ```
//!
//! and `|G,0⟩` sits alone at `λω_c − δ/2`. Writing the cavity term as
//! `ω_c(N + λ + 1/2)` makes the full matrix carry exactly these numbers with
//! no constant offset.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::algebra::{self, ladder_weight, DeformationParam, FockCutoff};
use crate::error::{Error, Result};
use crate::linalg::{dagger, identity, kron, re, CMat};

/// Physical constants of the pumped-dissipative emitter-cavity system.
/// Frequencies and rates share one unit; the bundled presets use `g = 1`.
/// Missing fields in a serialized form take the [`SystemParams::reference`]
/// values at `λ = δ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub omega_c: f64,
    /// Emitter detuning `ω_x − ω_c`.
    pub delta: f64,
    pub g: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub pump: f64,
    /// Thermal occupation of the cavity bath.
    pub nbar: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference(0.0, 0.0)
    }
}

impl SystemParams {
    pub const REFERENCE_KAPPA: f64 = 0.083;
    pub const REFERENCE_GAMMA: f64 = 0.017;
    pub const REFERENCE_PUMP: f64 = 0.05;

    /// Rates used for the emission spectra and photon statistics, `g = 1`,
    /// cavity frequency as the frequency origin.
    pub fn reference(lambda: f64, delta: f64) -> Self {
        SystemParams {
            omega_c: 0.0,
            delta,
            g: 1.0,
            lambda,
            kappa: Self::REFERENCE_KAPPA,
            gamma: Self::REFERENCE_GAMMA,
            pump: Self::REFERENCE_PUMP,
            nbar: 0.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_pump(mut self, pump: f64) -> Self {
        self.pump = pump;
        self
    }

    pub fn omega_x(&self) -> f64 {
        self.omega_c + self.delta
    }

    pub fn deformation(&self) -> Result<DeformationParam> {
        DeformationParam::new(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_c,
            self.delta,
            self.g,
            self.lambda,
            self.kappa,
            self.gamma,
            self.pump,
            self.nbar,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("all parameters must be finite".into()));
        }
        // g = 0 is admitted: it is the decoupled reference limit.
        if self.g < 0.0 {
            return Err(Error::InvalidInput(format!("coupling g must be >= 0, got {}", self.g)));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("pump", self.pump),
            ("nbar", self.nbar),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        self.deformation()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Qe {
    /// `|G⟩`
    Ground,
    /// `|X⟩`
    Excited,
}

impl Qe {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Qe::Ground => 0,
            Qe::Excited => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BareState {
    pub qe: Qe,
    pub photons: usize,
}

impl BareState {
    pub fn new(qe: Qe, photons: usize) -> Self {
        BareState { qe, photons }
    }

    pub fn index(self, cutoff: FockCutoff) -> usize {
        debug_assert!(self.photons <= cutoff.n_max());
        self.qe.index() * cutoff.fock_dim() + self.photons
    }

    pub fn from_index(index: usize, cutoff: FockCutoff) -> Self {
        let d = cutoff.fock_dim();
        let qe = if index / d == 0 { Qe::Ground } else { Qe::Excited };
        BareState { qe, photons: index % d }
    }

    /// Total excitation number `N + σ_z/2 + 1/2`.
    pub fn excitations(self) -> usize {
        self.photons + self.qe.index()
    }
}

pub fn hilbert_dim(cutoff: FockCutoff) -> usize {
    2 * cutoff.fock_dim()
}

/// Excitation number of every composite basis index.
pub fn excitation_numbers(cutoff: FockCutoff) -> Vec<usize> {
    (0..hilbert_dim(cutoff))
        .map(|i| BareState::from_index(i, cutoff).excitations())
        .collect()
}

/// Deformed cavity lowering operator `1 ⊗ a` on the composite space.
pub fn cavity_lowering(cutoff: FockCutoff, lambda: DeformationParam) -> CMat {
    kron(&identity(2), &algebra::annihilation(cutoff, lambda))
}

/// Emitter lowering operator `σ = |G⟩⟨X| ⊗ 1`.
pub fn qe_lowering(cutoff: FockCutoff) -> CMat {
    let mut s = Mat::zeros(2, 2);
    s[(0, 1)] = re(1.0);
    kron(&s, &identity(cutoff.fock_dim()))
}

pub fn sigma_z(cutoff: FockCutoff) -> CMat {
    let mut s = Mat::zeros(2, 2);
    s[(0, 0)] = re(-1.0);
    s[(1, 1)] = re(1.0);
    kron(&s, &identity(cutoff.fock_dim()))
}

/// `H = ω_c(N + λ + 1/2) + (ω_x/2)σ_z + g(a†σ + aσ†)`.
///
/// The cavity term uses `{a, a†} = 2N + 1 + 2λ`, which holds on every
/// truncated level, whereas the matrix anticommutator loses its top-level
/// element to truncation.
pub fn hamiltonian(params: &SystemParams, cutoff: FockCutoff) -> Result<CMat> {
    params.validate()?;
    let lambda = params.deformation()?;
    let dim = hilbert_dim(cutoff);
    let d = cutoff.fock_dim();
    let a = cavity_lowering(cutoff, lambda);
    let s = qe_lowering(cutoff);

    let mut h: CMat = (&dagger(&a) * &s + &a * &dagger(&s)) * faer::Scale(re(params.g));
    let half_x = 0.5 * params.omega_x();
    for i in 0..dim {
        let n = (i % d) as f64;
        let z = if i < d { -half_x } else { half_x };
        h[(i, i)] += re(params.omega_c * (n + params.lambda + 0.5) + z);
    }
    Ok(h)
}

fn check_rung(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidInput("rung index must be >= 1".into()));
    }
    Ok(())
}

/// 2×2 rung block in the basis `{|G,n⟩, |X,n-1⟩}`.
pub fn block_hamiltonian(n: usize, params: &SystemParams) -> Result<[[f64; 2]; 2]> {
    check_rung(n)?;
    params.validate()?;
    let base = (n as f64 + params.lambda) * params.omega_c;
    let c = params.g * ladder_weight(n, params.deformation()?).sqrt();
    Ok([[base - 0.5 * params.delta, c], [c, base + 0.5 * params.delta]])
}

/// `R_n = sqrt(4g²(n + 2λξ(n)) + δ²)`; `R_0 = |δ|` by the same formula.
pub fn generalized_rabi(n: usize, params: &SystemParams) -> Result<f64> {
    params.validate()?;
    Ok(rabi_unchecked(n, params))
}

fn rabi_unchecked(n: usize, p: &SystemParams) -> f64 {
    let w = (n as f64 + 2.0 * p.lambda * algebra::xi(n) as f64).max(0.0);
    (4.0 * p.g * p.g * w + p.delta * p.delta).sqrt()
}

/// `(E_-, E_+) = ω_c(n+λ) ∓ R_n/2`.
pub fn dressed_energies(n: usize, params: &SystemParams) -> Result<(f64, f64)> {
    check_rung(n)?;
    let r = generalized_rabi(n, params)?;
    let base = params.omega_c * (n as f64 + params.lambda);
    Ok((base - 0.5 * r, base + 0.5 * r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Minus,
    Plus,
}

/// Dressed eigenstate of one rung. `amplitudes` are the components on
/// `(|G,n⟩, |X,n-1⟩)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DressedLevel {
    pub rung: usize,
    pub branch: Branch,
    pub energy: f64,
    pub amplitudes: [f64; 2],
}

pub fn dressed_levels(n: usize, params: &SystemParams) -> Result<[DressedLevel; 2]> {
    let h = block_hamiltonian(n, params)?;
    let (e_minus, e_plus) = dressed_energies(n, params)?;
    let c = h[0][1];
    let vector = |e: f64, fallback: [f64; 2]| -> [f64; 2] {
        if c == 0.0 {
            return fallback;
        }
        // (H - e) v = 0 → v ∝ (c, e - h00)
        let (x, y) = (c, e - h[0][0]);
        let norm = x.hypot(y);
        [x / norm, y / norm]
    };
    // With zero coupling the block is diagonal; δ ≥ 0 puts |X,n-1⟩ on top.
    let (lower, upper) = if h[0][0] <= h[1][1] {
        ([1.0, 0.0], [0.0, 1.0])
    } else {
        ([0.0, 1.0], [1.0, 0.0])
    };
    Ok([
        DressedLevel {
            rung: n,
            branch: Branch::Minus,
            energy: e_minus,
            amplitudes: vector(e_minus, lower),
        },
        DressedLevel {
            rung: n,
            branch: Branch::Plus,
            energy: e_plus,
            amplitudes: vector(e_plus, upper),
        },
    ])
}

/// Energy of `|G,0⟩`, `λω_c − δ/2`.
pub fn ground_energy(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    Ok(params.lambda * params.omega_c - 0.5 * params.delta)
}

/// A pair of one-photon transition frequencies, labelled by the branch of the
/// upper rung the photon leaves from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Doublet {
    pub minus: f64,
    pub plus: f64,
}

impl Doublet {
    pub fn lower(&self) -> f64 {
        self.minus.min(self.plus)
    }

    pub fn upper(&self) -> f64 {
        self.minus.max(self.plus)
    }

    pub fn splitting(&self) -> f64 {
        (self.plus - self.minus).abs()
    }

    pub fn shifted(&self, by: f64) -> Doublet {
        Doublet {
            minus: self.minus - by,
            plus: self.plus - by,
        }
    }
}

/// Same-branch transitions `|n±⟩ → |n-1,±⟩`: `ω_c ± (R_n − R_{n-1})/2`.
/// For `n = 1` the lower level is `|G,0⟩`, giving `ω_c + δ/2 ± R_1/2`.
pub fn inner_doublet(n: usize, params: &SystemParams) -> Result<Doublet> {
    check_rung(n)?;
    params.validate()?;
    let (lo, hi) = dressed_energies(n, params)?;
    if n == 1 {
        let e0 = ground_energy(params)?;
        return Ok(Doublet {
            minus: lo - e0,
            plus: hi - e0,
        });
    }
    let half = 0.5 * (rabi_unchecked(n, params) - rabi_unchecked(n - 1, params));
    Ok(Doublet {
        minus: params.omega_c - half,
        plus: params.omega_c + half,
    })
}

/// Cross-branch transitions `|n±⟩ → |n-1,∓⟩`: `ω_c ± (R_n + R_{n-1})/2`.
pub fn outer_doublet(n: usize, params: &SystemParams) -> Result<Doublet> {
    if n < 2 {
        return Err(Error::InvalidInput("outer doublets start at rung 2".into()));
    }
    params.validate()?;
    let half = 0.5 * (rabi_unchecked(n, params) + rabi_unchecked(n - 1, params));
    Ok(Doublet {
        minus: params.omega_c - half,
        plus: params.omega_c + half,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TransitionParity {
    Even,
    Odd,
}

impl fmt::Display for TransitionParity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionParity::Even => "even",
            TransitionParity::Odd => "odd",
        })
    }
}

/// Parity of the rung a `n → n-1` transition starts from.
pub fn transition_parity(n: usize) -> TransitionParity {
    if n % 2 == 0 {
        TransitionParity::Even
    } else {
        TransitionParity::Odd
    }
}
