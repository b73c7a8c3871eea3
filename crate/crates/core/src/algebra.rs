//! Matrix representation of the R-deformed Heisenberg algebra on a truncated
//! Fock space.
//!
//! The deformed ladder operators act as
//!
//! ```text
//! a |n⟩  = sqrt(n + 2λ ξ(n))       |n-1⟩
//! a†|n⟩  = sqrt(n + 1 + 2λ ξ(n+1)) |n+1⟩
//! R |n⟩  = (-1)^n |n⟩,   N |n⟩ = n |n⟩
//! ```
//!
//! with ξ(n) = 1 for odd n and 0 for even n. They satisfy
//! `{R, a} = 0`, `[a, a†] = 1 + 2λR` and `a†a = N + λ(1 - R)`.
//!
//! Truncating at `n_max` drops the `n_max → n_max + 1` element of `a†`, so
//! `[a, a†]` is wrong on the top level only. Every other identity closes on
//! the whole truncated space.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{anticommutator, commutator, dagger, identity, re, CMat};

/// Highest retained Fock level. The Fock dimension is `n_max + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub const MIN: usize = 2;

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < Self::MIN {
            return Err(Error::CutoffTooSmall(n_max));
        }
        Ok(FockCutoff(n_max))
    }

    /// Cutoff without the `n_max >= 2` floor. Only used by tests and oracles
    /// that deliberately work in a one-photon space.
    #[cfg(test)]
    pub(crate) fn unchecked(n_max: usize) -> Self {
        FockCutoff(n_max)
    }

    #[inline]
    pub fn n_max(self) -> usize {
        self.0
    }

    #[inline]
    pub fn fock_dim(self) -> usize {
        self.0 + 1
    }
}

/// Parity deformation parameter λ, restricted to λ ≥ -1/2 so every
/// matrix element of the ladder operators stays real.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct DeformationParam(f64);

impl DeformationParam {
    pub const LOWER_BOUND: f64 = -0.5;

    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < Self::LOWER_BOUND {
            return Err(Error::LambdaOutOfRange(lambda));
        }
        Ok(DeformationParam(lambda))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Parity indicator: 1 for odd `n`, 0 for even `n`.
#[inline]
pub fn xi(n: usize) -> u8 {
    (n & 1) as u8
}

/// Squared matrix element `|⟨n-1|a|n⟩|² = n + 2λ ξ(n)`.
#[inline]
pub fn ladder_weight(n: usize, lambda: DeformationParam) -> f64 {
    // Clamp the -0.0 / tiny negative produced by n = 1, λ = -1/2.
    (n as f64 + 2.0 * lambda.value() * xi(n) as f64).max(0.0)
}

pub fn annihilation(cutoff: FockCutoff, lambda: DeformationParam) -> CMat {
    let d = cutoff.fock_dim();
    let mut a = Mat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = re(ladder_weight(n, lambda).sqrt());
    }
    a
}

pub fn creation(cutoff: FockCutoff, lambda: DeformationParam) -> CMat {
    dagger(&annihilation(cutoff, lambda))
}

pub fn parity(cutoff: FockCutoff) -> CMat {
    let d = cutoff.fock_dim();
    Mat::from_fn(d, d, |i, j| {
        if i != j {
            re(0.0)
        } else if i % 2 == 0 {
            re(1.0)
        } else {
            re(-1.0)
        }
    })
}

pub fn number(cutoff: FockCutoff) -> CMat {
    let d = cutoff.fock_dim();
    Mat::from_fn(d, d, |i, j| if i == j { re(i as f64) } else { re(0.0) })
}

/// Residual of one algebraic identity.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityResidual {
    pub name: &'static str,
    /// Fock levels (inclusive) over which the identity is checked.
    pub levels: (usize, usize),
    pub residual: f64,
    /// Row (Fock level) holding the largest residual entry.
    pub worst_level: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraReport {
    pub n_max: usize,
    pub lambda: f64,
    pub tol: f64,
    pub identities: Vec<IdentityResidual>,
    /// `[a, a†] - 1 - 2λR` evaluated on the top level, where truncation
    /// breaks it. Informational only.
    pub truncation_edge_residual: f64,
}

impl AlgebraReport {
    pub fn all_passed(&self) -> bool {
        self.identities.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityResidual> {
        self.identities.iter().filter(|r| !r.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.identities.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn residual_on_levels(
    name: &'static str,
    m: &CMat,
    rows: std::ops::RangeInclusive<usize>,
    cols: std::ops::RangeInclusive<usize>,
    tol: f64,
) -> IdentityResidual {
    let mut residual = 0.0f64;
    let mut worst_level = *rows.start();
    for j in cols.clone() {
        for i in rows.clone() {
            let v = m[(i, j)].norm();
            if v > residual {
                residual = v;
                worst_level = i;
            }
        }
    }
    IdentityResidual {
        name,
        levels: (*rows.start().min(cols.start()), *rows.end().max(cols.end())),
        residual,
        worst_level,
        passed: residual <= tol,
    }
}

/// Evaluate the defining identities of the deformed algebra and report
/// max-norm residuals.
///
/// `[a, a†] = 1 + 2λR` is checked on levels `0..n_max-1` only; its failure on
/// the top level is a truncation artifact and is reported separately.
pub fn verify_algebra(cutoff: FockCutoff, lambda: DeformationParam, tol: f64) -> AlgebraReport {
    let n_max = cutoff.n_max();
    let d = cutoff.fock_dim();
    let a = annihilation(cutoff, lambda);
    let ad = creation(cutoff, lambda);
    let r = parity(cutoff);
    let n = number(cutoff);
    let id = identity(d);
    let lam = re(lambda.value());
    let two_lam = re(2.0 * lambda.value());

    let full = 0..=n_max;
    let interior = 0..=n_max - 1;

    let r_a = anticommutator(&r, &a);
    let r_ad = anticommutator(&r, &ad);
    let ccr = commutator(&a, &ad) - &id - &r * faer::Scale(two_lam);
    let number_form = &ad * &a - &n - (&id - &r) * faer::Scale(lam);
    let lowering = commutator(&n, &a) + &a;

    let truncation_edge_residual = ccr[(n_max, n_max)].norm();

    let identities = vec![
        residual_on_levels("{R,a} = 0", &r_a, full.clone(), full.clone(), tol),
        residual_on_levels("{R,a+} = 0", &r_ad, full.clone(), full.clone(), tol),
        residual_on_levels("[a,a+] = 1 + 2 lambda R", &ccr, interior.clone(), interior, tol),
        residual_on_levels("a+ a = N + lambda (1 - R)", &number_form, full.clone(), full.clone(), tol),
        residual_on_levels("[N,a] = -a", &lowering, full, 1..=n_max, tol),
    ];

    AlgebraReport {
        n_max,
        lambda: lambda.value(),
        tol,
        identities,
        truncation_edge_residual,
    }
}
