use faer::linalg::solvers::Solve;
use faer::{c64, Col, Mat};
use serde::{Deserialize, Serialize};

use super::Superoperator;
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, re, CCol, CMat};

/// Eigenbasis condition number above which propagation falls back to the
/// integrator.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMethod {
    /// Eigendecomposition, integrator if the eigenbasis is ill-conditioned.
    #[default]
    Auto,
    Eigen,
    Integrator,
}

/// Right eigenpairs `L V = V Λ` with unit-norm columns.
#[derive(Clone, Debug)]
pub struct Eigenmodes {
    values: Vec<c64>,
    vectors: CMat,
    inverse: CMat,
    condition: f64,
}

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Eigenmodes {
    pub fn new(l: &Superoperator) -> Result<Self> {
        Self::from_matrix(l.matrix())
    }

    pub fn from_matrix(m: &CMat) -> Result<Self> {
        let n = m.nrows();
        let evd = m
            .eigen()
            .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S();
        let values: Vec<c64> = (0..n).map(|i| s[i]).collect();
        let mut vectors = evd.U().to_owned();
        for j in 0..n {
            let norm = (0..n).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                for i in 0..n {
                    vectors[(i, j)] /= norm;
                }
            }
        }
        let inverse = vectors.partial_piv_lu().solve(Mat::<c64>::identity(n, n));
        let mut condition = one_norm(&vectors) * one_norm(&inverse);
        if !condition.is_finite() {
            condition = f64::INFINITY;
        }
        Ok(Eigenmodes {
            values,
            vectors,
            inverse,
            condition,
        })
    }

    pub fn values(&self) -> &[c64] {
        &self.values
    }

    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    /// 1-norm condition number of the eigenvector matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Expansion coefficients `c` with `v = V c`.
    pub fn coefficients(&self, v: &CCol) -> CCol {
        &self.inverse * v
    }

    /// `e^{Lτ} v` given the coefficients of `v`.
    pub fn evolve(&self, coefficients: &CCol, tau: f64) -> CCol {
        let scaled = Col::from_fn(coefficients.nrows(), |k| {
            coefficients[k] * (self.values[k] * tau).exp()
        });
        &self.vectors * &scaled
    }
}

/// Tolerances for the adaptive Dormand-Prince 5(4) integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    pub states: Vec<CCol>,
    /// Method that produced `states` (never `Auto`).
    pub method: PropagationMethod,
    /// True if `Auto` had to abandon the eigenbasis.
    pub fell_back: bool,
    pub condition: Option<f64>,
}

fn check_grid(taus: &[f64]) -> Result<()> {
    if taus.first() != Some(&0.0) {
        return Err(Error::InvalidInput("tau grid must start at 0".into()));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) || taus.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("tau grid must be strictly ascending and finite".into()));
    }
    Ok(())
}

/// `e^{Lτ} v` on every grid point.
pub fn propagate(
    l: &Superoperator,
    v: &CCol,
    taus: &[f64],
    method: PropagationMethod,
    condition_limit: f64,
) -> Result<Trajectory> {
    check_grid(taus)?;
    if v.nrows() != l.dim() {
        return Err(Error::Dimension(format!(
            "vector of length {} for a superoperator of dimension {}",
            v.nrows(),
            l.dim()
        )));
    }
    let via_integrator = |fell_back: bool, condition: Option<f64>| -> Result<Trajectory> {
        Ok(Trajectory {
            taus: taus.to_vec(),
            states: integrate(l.matrix(), v, taus, &IntegratorOptions::default())?,
            method: PropagationMethod::Integrator,
            fell_back,
            condition,
        })
    };
    match method {
        PropagationMethod::Integrator => via_integrator(false, None),
        PropagationMethod::Eigen | PropagationMethod::Auto => {
            let modes = match Eigenmodes::new(l) {
                Ok(m) => m,
                Err(e) if method == PropagationMethod::Auto => {
                    log::warn!("{e}; falling back to the integrator");
                    return via_integrator(true, None);
                }
                Err(e) => return Err(e),
            };
            if method == PropagationMethod::Auto && modes.condition() > condition_limit {
                log::warn!(
                    "eigenbasis condition {:.3e} exceeds {:.1e}; falling back to the integrator",
                    modes.condition(),
                    condition_limit
                );
                return via_integrator(true, Some(modes.condition()));
            }
            let c = modes.coefficients(v);
            let states = taus
                .iter()
                .map(|&t| if t == 0.0 { v.clone() } else { modes.evolve(&c, t) })
                .collect();
            Ok(Trajectory {
                taus: taus.to_vec(),
                states,
                method: PropagationMethod::Eigen,
                fell_back: false,
                condition: Some(modes.condition()),
            })
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) integration of `dv/dτ = M v`, sampled on
/// `taus` (ascending, starting at 0).
pub fn integrate(m: &CMat, v0: &CCol, taus: &[f64], opts: &IntegratorOptions) -> Result<Vec<CCol>> {
    check_grid(taus)?;
    let n = v0.nrows();
    let _ = C; // autonomous system: stage times are not needed
    let mut out = Vec::with_capacity(taus.len());
    out.push(v0.clone());
    let mut y = v0.clone();
    let mut t = 0.0;
    let mut h = 0.1 / inf_norm(m).max(1e-12);
    let mut k1 = m * &y;
    let mut steps = 0usize;

    for &target in &taus[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Numerical(format!(
                    "integrator exceeded {} steps before tau = {target}",
                    opts.max_steps
                )));
            }
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            let mut ks: Vec<CCol> = Vec::with_capacity(7);
            ks.push(k1.clone());
            for s in 1..7 {
                let mut arg = y.clone();
                for (j, kj) in ks.iter().enumerate() {
                    let a = A[s][j];
                    if a != 0.0 {
                        arg += kj * faer::Scale(re(step * a));
                    }
                }
                ks.push(m * &arg);
            }
            // 5th-order solution equals the last stage argument (FSAL)
            let mut y_new = y.clone();
            for (j, kj) in ks.iter().enumerate().take(6) {
                let b = A[6][j];
                if b != 0.0 {
                    y_new += kj * faer::Scale(re(step * b));
                }
            }
            let mut err = Col::<c64>::zeros(n);
            for (j, kj) in ks.iter().enumerate() {
                if E[j] != 0.0 {
                    err += kj * faer::Scale(re(step * E[j]));
                }
            }
            let mut acc = 0.0f64;
            for i in 0..n {
                let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                acc += (err[i].norm() / scale).powi(2);
            }
            let err_norm = (acc / n as f64).sqrt();
            steps += 1;
            if err_norm <= 1.0 || step < 1e-14 * target.max(1.0) {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = ks.pop().expect("seven stages");
            }
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !last || err_norm > 1.0 {
                h = step * factor;
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FockCutoff;
    use crate::dynamics::{liouvillian, steady_state};
    use crate::linalg::{dagger, max_abs, max_abs_col};
    use crate::model::SystemParams;

    #[test]
    fn scalar_decay_matches_exponential() {
        let mut m = Mat::<c64>::zeros(1, 1);
        m[(0, 0)] = c64::new(-0.3, 2.0);
        let v = Col::from_fn(1, |_| re(1.0));
        let taus = [0.0, 0.5, 3.0, 10.0];
        let ys = integrate(&m, &v, &taus, &IntegratorOptions::default()).unwrap();
        for (t, y) in taus.iter().zip(&ys) {
            let exact = (c64::new(-0.3, 2.0) * t).exp();
            assert!((y[0] - exact).norm() < 1e-9);
        }
    }

    #[test]
    fn grid_validation() {
        let l = liouvillian(&SystemParams::reference(0.0, 0.0), FockCutoff::new(2).unwrap()).unwrap();
        let v = Col::<c64>::zeros(l.dim());
        let m = PropagationMethod::Auto;
        assert!(propagate(&l, &v, &[0.1, 0.2], m, DEFAULT_CONDITION_LIMIT).is_err());
        assert!(propagate(&l, &v, &[0.0, 0.2, 0.2], m, DEFAULT_CONDITION_LIMIT).is_err());
        assert!(propagate(&l, &Col::<c64>::zeros(3), &[0.0], m, DEFAULT_CONDITION_LIMIT).is_err());
    }

    #[test]
    fn fixed_point_and_initial_value() {
        let c = FockCutoff::new(3).unwrap();
        let l = liouvillian(&SystemParams::reference(0.5, 0.0), c).unwrap();
        let rho = steady_state(&l).unwrap();
        let v = l.basis().vectorize(rho.matrix());
        let taus = [0.0, 1.0, 10.0, 100.0];
        for method in [PropagationMethod::Eigen, PropagationMethod::Integrator] {
            let tr = propagate(&l, &v, &taus, method, DEFAULT_CONDITION_LIMIT).unwrap();
            assert_eq!(tr.method, method);
            assert_eq!(max_abs_col(&(&tr.states[0] - &v)), 0.0);
            for s in &tr.states {
                assert!(max_abs_col(&(s - &v)) < 1e-9);
            }
        }
    }

    #[test]
    fn ill_conditioned_basis_triggers_fallback() {
        let c = FockCutoff::new(2).unwrap();
        let l = liouvillian(&SystemParams::reference(0.0, 0.0), c).unwrap();
        let v = l.basis().vectorize(&crate::dynamics::projector(6, 0));
        // any finite condition number exceeds a limit of 1
        let tr = propagate(&l, &v, &[0.0, 1.0], PropagationMethod::Auto, 1.0).unwrap();
        assert!(tr.fell_back);
        assert_eq!(tr.method, PropagationMethod::Integrator);
    }

    #[test]
    fn eigen_and_integrator_paths_agree() {
        let c = FockCutoff::new(3).unwrap();
        let l = liouvillian(&SystemParams::reference(0.9, 0.7), c).unwrap();
        let v = l.basis().vectorize(&crate::dynamics::projector(8, 5));
        let taus: Vec<f64> = (0..=20).map(|k| k as f64 * 2.5).collect();
        let a = propagate(&l, &v, &taus, PropagationMethod::Eigen, DEFAULT_CONDITION_LIMIT).unwrap();
        let b = propagate(&l, &v, &taus, PropagationMethod::Integrator, DEFAULT_CONDITION_LIMIT).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(max_abs_col(&(x - y)) < 1e-8);
        }
        let rho = l.basis().unvectorize(a.states.last().unwrap());
        assert!(max_abs(&(&rho - dagger(&rho))) < 1e-9);
    }

    #[test]
    fn single_stationary_mode() {
        let c = FockCutoff::new(3).unwrap();
        for lambda in [-0.3, 0.0, 0.9] {
            let l = liouvillian(&SystemParams::reference(lambda, 0.4), c).unwrap();
            let modes = Eigenmodes::new(&l).unwrap();
            let zero = modes.values().iter().filter(|z| z.re.abs() < 1e-10).count();
            assert_eq!(zero, 1, "λ = {lambda}");
            assert!(modes.values().iter().all(|z| z.re < 1e-10));
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn trajectories_preserve_trace(lambda in -0.45f64..1.0, delta in -1.0f64..1.0, start in 0usize..8) {
            let c = FockCutoff::new(3).unwrap();
            let l = liouvillian(&SystemParams::reference(lambda, delta).with_pump(0.3), c).unwrap();
            let v = l.basis().vectorize(&crate::dynamics::projector(8, start));
            let t = l.basis().trace_against(&crate::linalg::identity(8));
            let taus = [0.0, 0.7, 5.0, 40.0];
            for method in [PropagationMethod::Eigen, PropagationMethod::Integrator] {
                let tr = propagate(&l, &v, &taus, method, DEFAULT_CONDITION_LIMIT).unwrap();
                for s in &tr.states {
                    let trace: c64 = (0..s.nrows()).map(|k| t[k] * s[k]).sum();
                    proptest::prop_assert!((trace - re(1.0)).norm() < 1e-9);
                }
            }
        }
    }
}
