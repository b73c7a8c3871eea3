use faer::linalg::solvers::Solve;
use faer::{c64, Col};
use serde::{Deserialize, Serialize};

use super::{min_eigenvalue, sector_liouvillian, DensityMatrix, Superoperator};
use crate::algebra::{DeformationParam, FockCutoff};
use crate::error::{Error, Result};
use crate::linalg::{dagger, inf_norm, max_abs, max_abs_col, re, CMat, ONE, ZERO};
use crate::model::{BareState, Qe, SystemParams};

/// Relative LU pivot below which the trace-constrained system is treated as
/// singular, i.e. the Liouvillian has more than one stationary direction.
pub const DEGENERACY_PIVOT_RATIO: f64 = 1e-14;

/// At λ = −1/2 the `⟨0|a|1⟩` element vanishes and the photon vacuum
/// `{|G,0⟩, |X,0⟩}` decouples from every state with `n ≥ 1`, so the
/// stationary state is not unique. Dissipative quantities at the critical
/// point are evaluated at `λ = −1/2 + CRITICAL_LAMBDA_OFFSET`, which tracks
/// the one-sided limit to O(offset).
pub const CRITICAL_LAMBDA_OFFSET: f64 = 1e-9;

/// Residual bound relative to `‖L‖∞`.
const RESIDUAL_RTOL: f64 = 1e-10;

/// Solve `L vec(ρ) = 0` with the `(0,0)` equation replaced by `Tr ρ = 1`.
///
/// `L` may be the full generator or any invariant sector that contains all
/// diagonal matrix units.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let basis = l.basis();
    let diag = basis.diagonal_positions();
    if diag.len() != basis.hilbert_dim() {
        return Err(Error::Dimension(
            "steady state needs a basis containing every diagonal matrix unit".into(),
        ));
    }
    let anchor = basis.position(0, 0).expect("diagonal present");
    let n = l.dim();

    let mut system = l.matrix().clone();
    for col in 0..n {
        system[(anchor, col)] = ZERO;
    }
    for &k in &diag {
        system[(anchor, k)] = ONE;
    }
    let mut rhs = Col::<c64>::zeros(n);
    rhs[anchor] = ONE;

    let lu = system.full_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let relative_pivot = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(relative_pivot > DEGENERACY_PIVOT_RATIO) {
        return Err(Error::DegenerateSteadyState { relative_pivot });
    }
    let mut x = lu.solve(&rhs);
    // Near-critical deformations make the system ill-conditioned (a second,
    // slow relaxation mode). Refining against an extra-precise residual
    // recovers full forward accuracy as long as cond·ε < 1.
    for _ in 0..MAX_REFINEMENTS {
        let r = compensated_residual(&system, &x, &rhs);
        let dx = lu.solve(&r);
        x += &dx;
        if max_abs_col(&dx) <= f64::EPSILON * max_abs_col(&x) {
            break;
        }
    }

    let residual = max_abs_col(&l.apply(&x));
    let scale = inf_norm(l.matrix()).max(1.0);
    let raw = basis.unvectorize(&x);
    let herm_dev = max_abs(&(&raw - dagger(&raw)));
    let mut rho = (&raw + dagger(&raw)) * faer::Scale(re(0.5));
    let tr = crate::linalg::trace(&rho).re;
    rho = rho * faer::Scale(re(1.0 / tr));

    let min_eig = min_eigenvalue(&rho)?;
    let diagnostics = |reason: String| Error::InvalidSteadyState {
        reason,
        min_eigenvalue: min_eig,
        top_population: top_population_of(&rho),
        residual,
    };
    if !residual.is_finite() || residual > RESIDUAL_RTOL * scale {
        return Err(diagnostics(format!(
            "residual exceeds {RESIDUAL_RTOL:e}·‖L‖∞ = {:.3e}",
            RESIDUAL_RTOL * scale
        )));
    }
    if herm_dev > 1e-8 {
        return Err(diagnostics(format!("solution not Hermitian (deviation {herm_dev:.3e})")));
    }
    if min_eig < -DensityMatrix::PSD_TOL {
        return Err(diagnostics("negative eigenvalue beyond tolerance".into()));
    }
    DensityMatrix::new(rho)
}

const MAX_REFINEMENTS: usize = 6;

/// Error-free `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Double-double accumulator.
#[derive(Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    #[inline]
    fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        self.hi = s;
        self.lo += e;
    }

    /// Add the exact product `a·b`.
    #[inline]
    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.lo += a.mul_add(b, -p);
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `b − A x` accumulated in double-double precision.
fn compensated_residual(a: &CMat, x: &Col<c64>, b: &Col<c64>) -> Col<c64> {
    let n = a.nrows();
    let mut re_acc = vec![Dd::default(); n];
    let mut im_acc = vec![Dd::default(); n];
    for i in 0..n {
        re_acc[i].add(b[i].re);
        im_acc[i].add(b[i].im);
    }
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == ZERO {
            continue;
        }
        for i in 0..n {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            re_acc[i].add_product(-aij.re, xj.re);
            re_acc[i].add_product(aij.im, xj.im);
            im_acc[i].add_product(-aij.re, xj.im);
            im_acc[i].add_product(-aij.im, xj.re);
        }
    }
    Col::from_fn(n, |i| c64::new(re_acc[i].value(), im_acc[i].value()))
}

/// Population of the top Fock level, summed over the emitter states.
pub fn top_fock_population(rho: &DensityMatrix, cutoff: FockCutoff) -> f64 {
    [Qe::Ground, Qe::Excited]
        .iter()
        .map(|&qe| rho.population(BareState::new(qe, cutoff.n_max()).index(cutoff)))
        .sum()
}

fn top_population_of(m: &CMat) -> f64 {
    let d = m.nrows() / 2;
    if d == 0 {
        return f64::NAN;
    }
    m[(d - 1, d - 1)].re + m[(2 * d - 1, 2 * d - 1)].re
}

/// Fock truncation policy: start at `initial`, grow until the top level holds
/// less than `top_tolerance` of the population, give up past `max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffPolicy {
    pub initial: usize,
    pub max: usize,
    pub top_tolerance: f64,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy {
            initial: 15,
            max: 300,
            top_tolerance: 1e-8,
        }
    }
}

impl CutoffPolicy {
    /// Exactly one cutoff, no growth.
    pub fn fixed(n_max: usize) -> Self {
        CutoffPolicy {
            initial: n_max,
            max: n_max,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        FockCutoff::new(self.initial)?;
        if self.max < self.initial {
            return Err(Error::InvalidInput(format!(
                "cutoff max ({}) below initial ({})",
                self.max, self.initial
            )));
        }
        if !(self.top_tolerance > 0.0 && self.top_tolerance < 1.0) {
            return Err(Error::InvalidInput("top_tolerance must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn next(&self, n_max: usize) -> Option<usize> {
        if n_max >= self.max {
            return None;
        }
        let grown = (n_max + 5).max(n_max * 3 / 2);
        Some(grown.min(self.max))
    }
}

/// Parameters actually handed to the dissipative solvers. Identical to the
/// input except at the critical deformation λ = −1/2 (see
/// [`CRITICAL_LAMBDA_OFFSET`]).
pub fn dissipative_params(params: &SystemParams) -> SystemParams {
    let mut p = *params;
    if p.lambda == DeformationParam::LOWER_BOUND {
        p.lambda += CRITICAL_LAMBDA_OFFSET;
    }
    p
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub cutoff: FockCutoff,
    pub top_population: f64,
    /// λ used by the solver (differs from the request only at λ = −1/2).
    pub effective_lambda: f64,
    /// True if the cutoff had to grow beyond the policy's initial value.
    pub cutoff_raised: bool,
}

/// Stationary state of the model on the `Δ = 0` sector, growing the Fock
/// cutoff per `policy` until the truncation check passes.
pub fn solve_steady_state(params: &SystemParams, policy: &CutoffPolicy) -> Result<SteadyState> {
    params.validate()?;
    policy.validate()?;
    let effective = dissipative_params(params);
    let mut n_max = policy.initial;
    loop {
        let cutoff = FockCutoff::new(n_max)?;
        let l = sector_liouvillian(&effective, cutoff, 0)?;
        let (rho, top_population) = match steady_state(&l) {
            Ok(rho) => {
                let top = top_fock_population(&rho, cutoff);
                (Some(rho), top)
            }
            // a badly truncated state may fail positivity before the
            // population check gets a chance; that is a cutoff problem
            Err(Error::InvalidSteadyState { top_population, .. })
                if top_population >= policy.top_tolerance && policy.next(n_max).is_some() =>
            {
                (None, top_population)
            }
            Err(e) => return Err(e),
        };
        if let Some(rho) = rho.filter(|_| top_population < policy.top_tolerance) {
            log::debug!("steady state converged at n_max = {n_max} (top population {top_population:.2e})");
            return Ok(SteadyState {
                rho,
                cutoff,
                top_population,
                effective_lambda: effective.lambda,
                cutoff_raised: n_max != policy.initial,
            });
        }
        match policy.next(n_max) {
            Some(next) => {
                log::debug!("raising n_max {n_max} -> {next} (top population {top_population:.2e})");
                n_max = next;
            }
            None => {
                return Err(Error::CutoffNotConverged {
                    n_max,
                    max_n_max: policy.max,
                    top_population,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{liouvillian, VecBasis};
    use crate::linalg::max_abs;

    fn cut(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    #[test]
    fn pure_decay_relaxes_to_vacuum() {
        for &lam in &[-0.3, 0.0, 0.7] {
            let params = SystemParams {
                pump: 0.0,
                g: 0.0,
                ..SystemParams::reference(lam, 0.0)
            };
            let rho = steady_state(&liouvillian(&params, cut(4)).unwrap()).unwrap();
            let vac = BareState::new(Qe::Ground, 0).index(cut(4));
            assert!((rho.population(vac) - 1.0).abs() < 1e-12);
            assert!(max_abs(rho.matrix()) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn disconnected_emitter_is_degenerate() {
        // no emitter dissipation and (numerically) no coupling: emitter state is conserved
        let params = SystemParams {
            pump: 0.0,
            gamma: 0.0,
            g: 0.0,
            ..SystemParams::reference(0.0, 0.0)
        };
        let err = steady_state(&liouvillian(&params, cut(3)).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSteadyState { .. }), "{err}");
    }

    #[test]
    fn critical_lambda_is_degenerate_without_offset() {
        let params = SystemParams::reference(-0.5, 0.0);
        let l = sector_liouvillian(&params, cut(8), 0).unwrap();
        assert!(matches!(steady_state(&l), Err(Error::DegenerateSteadyState { .. })));
        let solved = solve_steady_state(&params, &CutoffPolicy::fixed(14)).unwrap();
        assert_eq!(solved.effective_lambda, -0.5 + CRITICAL_LAMBDA_OFFSET);
    }

    #[test]
    fn sector_and_full_solutions_agree() {
        let params = SystemParams::reference(0.3, 0.7);
        let c = cut(6);
        let full = steady_state(&liouvillian(&params, c).unwrap()).unwrap();
        let sector = steady_state(&sector_liouvillian(&params, c, 0).unwrap()).unwrap();
        assert!(max_abs(&(full.matrix() - sector.matrix())) < 1e-12);
        // the full solution has no weight outside the Δ = 0 sector
        assert!(VecBasis::excitation_sector(c, 0).leakage(full.matrix()) < 1e-13);
    }

    #[test]
    fn cutoff_policy_grows_until_converged() {
        let params = SystemParams::reference(0.0, 0.0).with_pump(0.5);
        let policy = CutoffPolicy {
            initial: 4,
            max: 60,
            top_tolerance: 1e-8,
        };
        let ss = solve_steady_state(&params, &policy).unwrap();
        assert!(ss.cutoff_raised);
        assert!(ss.top_population < 1e-8);
        assert!(ss.cutoff.n_max() > 4);

        let tight = CutoffPolicy { max: 6, ..policy };
        assert!(matches!(
            solve_steady_state(&params, &tight),
            Err(Error::CutoffNotConverged { .. })
        ));
    }

    #[test]
    fn lasing_state_grows_past_truncation_artifacts() {
        // at n_max = 15 the truncated lasing state is not even positive
        let params = SystemParams::reference(-0.5, 0.0).with_pump(10.0);
        let l = sector_liouvillian(&dissipative_params(&params), cut(15), 0).unwrap();
        match steady_state(&l) {
            Err(Error::InvalidSteadyState { top_population, .. }) => assert!(top_population > 0.1),
            other => panic!("expected a truncation artifact, got {other:?}"),
        }
        let ss = solve_steady_state(&params, &CutoffPolicy::default()).unwrap();
        assert!(ss.cutoff.n_max() > 15);
        assert!(ss.top_population < 1e-8);
        assert!(min_eigenvalue(ss.rho.matrix()).unwrap() > -1e-10);
    }

    #[test]
    fn near_critical_lasing_state_is_positive() {
        // a slow inter-sector mode makes this solve ill-conditioned
        let params = dissipative_params(&SystemParams::reference(-0.5, 0.0).with_pump(5.0));
        for n in [49, 73] {
            let l = sector_liouvillian(&params, cut(n), 0).unwrap();
            let rho = steady_state(&l).unwrap();
            assert!(rho.min_eigenvalue() >= -DensityMatrix::PSD_TOL);
        }
    }

    #[test]
    fn compensated_residual_is_exact_on_cancellation() {
        let mut a = CMat::zeros(1, 2);
        a[(0, 0)] = re(1.0 + f64::EPSILON);
        a[(0, 1)] = re(-1.0);
        let x = Col::from_fn(2, |_| re(1.0));
        let b = Col::from_fn(1, |_| ZERO);
        assert_eq!(compensated_residual(&a, &x, &b)[0].re, -f64::EPSILON);
    }

    #[test]
    fn policy_validation() {
        assert!(CutoffPolicy { initial: 1, max: 5, top_tolerance: 1e-8 }.validate().is_err());
        assert!(CutoffPolicy { initial: 5, max: 4, top_tolerance: 1e-8 }.validate().is_err());
        assert!(CutoffPolicy { initial: 5, max: 5, top_tolerance: 0.0 }.validate().is_err());
        assert!(CutoffPolicy::default().validate().is_ok());
    }
}
