//! One-dimensional sample grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid description as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSpec {
    Linear { start: f64, stop: f64, points: usize },
    Log { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl GridSpec {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        GridSpec::Linear { start, stop, points }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        GridSpec::Log { start, stop, points }
    }

    /// Materialize and validate: finite, non-empty, strictly ascending.
    pub fn build(&self) -> Result<Vec<f64>> {
        let values = match self {
            GridSpec::Linear { start, stop, points } => linspace(*start, *stop, *points),
            GridSpec::Log { start, stop, points } => {
                if !(*start > 0.0 && *stop > 0.0) {
                    return Err(Error::Config(format!(
                        "log grid bounds must be positive, got [{start}, {stop}]"
                    )));
                }
                logspace(*start, *stop, *points)
            }
            GridSpec::Values { values } => values.clone(),
        };
        check_ascending(&values)?;
        Ok(values)
    }
}

/// `points` evenly spaced samples including both ends. A single point sits at
/// `start`.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points)
                .map(|k| if k == points - 1 { stop } else { start + step * k as f64 })
                .collect()
        }
    }
}

pub fn logspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(start.log10(), stop.log10(), points)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect();
    // pin the endpoints against powf roundoff
    if let Some(first) = v.first_mut() {
        *first = start;
    }
    if points > 1 {
        if let Some(last) = v.last_mut() {
            *last = stop;
        }
    }
    v
}

pub fn check_ascending(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("grid contains non-finite values".into()));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("grid is not strictly ascending".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints_and_count() {
        let g = linspace(-0.5, 1.0, 301);
        assert_eq!(g.len(), 301);
        assert_eq!(g[0], -0.5);
        assert_eq!(g[300], 1.0);
        assert!((g[100] - 0.0).abs() < 1e-15);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn logspace_is_geometric() {
        let g = logspace(1e-3, 10.0, 5);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[4], 10.0);
        assert!((g[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::linear(0.0, 1.0, 0).build().is_err());
        assert!(GridSpec::log(0.0, 1.0, 3).build().is_err());
        assert!(GridSpec::Values { values: vec![1.0, 1.0] }.build().is_err());
        assert_eq!(GridSpec::Values { values: vec![0.5] }.build().unwrap(), vec![0.5]);
    }
}
