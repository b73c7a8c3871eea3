//! Run configuration: a TOML file (or a bundled preset) plus command-line
//! overrides. Every section is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algebra::{DeformationParam, FockCutoff};
use crate::dynamics::CutoffPolicy;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::SystemParams;
use crate::spectrum::SpectrumOptions;

pub const PRESETS: [(&str, &str); 5] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown output format '{other}' (csv, json, svg)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    /// Worker threads for parameter scans; 0 = one per core.
    pub workers: usize,
    /// Accepted for interface stability; every computation is deterministic.
    pub seedless: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
            workers: 0,
            seedless: false,
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgebraConfig {
    pub n_max: usize,
    pub lambdas: Vec<f64>,
    pub tol: f64,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        AlgebraConfig {
            n_max: 20,
            lambdas: vec![-0.5, -0.3, 0.0, 0.3, 0.5, 0.9],
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    /// Doublets against λ (19 rungs by default).
    pub vs_lambda: bool,
    pub lambda_grid: GridSpec,
    pub lambda_rungs: usize,
    /// Doublets against δ, one table per entry of `detuning_lambdas`.
    pub vs_detuning: bool,
    pub delta_grid: GridSpec,
    pub detuning_lambdas: Vec<f64>,
    pub detuning_rungs: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            vs_lambda: true,
            lambda_grid: GridSpec::linear(-0.5, 1.0, 301),
            lambda_rungs: 19,
            vs_detuning: false,
            delta_grid: GridSpec::linear(-4.0, 4.0, 401),
            detuning_lambdas: vec![0.0],
            detuning_rungs: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumPoint {
    pub lambda: f64,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub points: Vec<SpectrumPoint>,
    /// Frequencies relative to `ω_c`, in the units of `g`.
    pub omega_grid: GridSpec,
    pub options: SpectrumOptions,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            points: vec![SpectrumPoint {
                lambda: 0.0,
                delta: 0.0,
            }],
            omega_grid: GridSpec::linear(-3.0, 3.0, 2001),
            options: SpectrumOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct G2Config {
    pub lambdas: Vec<f64>,
    pub pump_grid: GridSpec,
}

impl Default for G2Config {
    fn default() -> Self {
        G2Config {
            lambdas: crate::scans::G2_LAMBDAS.to_vec(),
            pump_grid: GridSpec::log(1e-3, 10.0, 60),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: SystemParams,
    pub cutoff: CutoffPolicy,
    pub output: OutputConfig,
    pub algebra: AlgebraConfig,
    pub ladder: LadderConfig,
    pub spectrum: SpectrumConfig,
    pub g2: G2Config,
}

fn check_lambdas(name: &str, lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    for &l in lambdas {
        DeformationParam::new(l)?;
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn preset(name: &str) -> Result<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml(text))
            .unwrap_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                Err(Error::Config(format!("unknown preset '{name}' (available: {})", names.join(", "))))
            })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate_common(&self) -> Result<()> {
        self.params.validate()?;
        self.cutoff.validate()?;
        if self.output.formats.is_empty() {
            return Err(Error::Config("no output formats selected".into()));
        }
        Ok(())
    }

    pub fn validate_algebra(&self) -> Result<()> {
        self.validate_common()?;
        FockCutoff::new(self.algebra.n_max)?;
        check_lambdas("algebra.lambdas", &self.algebra.lambdas)?;
        if !(self.algebra.tol >= 0.0) {
            return Err(Error::Config("algebra.tol must be non-negative".into()));
        }
        Ok(())
    }

    pub fn validate_ladder(&self) -> Result<()> {
        self.validate_common()?;
        let l = &self.ladder;
        if !l.vs_lambda && !l.vs_detuning {
            return Err(Error::Config("ladder: neither vs_lambda nor vs_detuning is enabled".into()));
        }
        if l.vs_lambda {
            check_lambdas("ladder.lambda_grid", &l.lambda_grid.build()?)?;
        }
        if l.vs_detuning {
            l.delta_grid.build()?;
            check_lambdas("ladder.detuning_lambdas", &l.detuning_lambdas)?;
        }
        Ok(())
    }

    pub fn validate_spectrum(&self) -> Result<()> {
        self.validate_common()?;
        if self.spectrum.points.is_empty() {
            return Err(Error::Config("spectrum.points is empty".into()));
        }
        let lambdas: Vec<f64> = self.spectrum.points.iter().map(|p| p.lambda).collect();
        check_lambdas("spectrum.points", &lambdas)?;
        self.spectrum.omega_grid.build()?;
        if !(self.spectrum.options.dt > 0.0) {
            return Err(Error::Config("spectrum.options.dt must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_g2(&self) -> Result<()> {
        self.validate_common()?;
        check_lambdas("g2.lambdas", &self.g2.lambdas)?;
        let pumps = self.g2.pump_grid.build()?;
        if pumps[0] < 0.0 {
            return Err(Error::Config("g2.pump_grid must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for (name, _) in PRESETS {
            let c = RunConfig::preset(name).unwrap();
            c.validate_common().unwrap();
        }
        RunConfig::preset("fig1").unwrap().validate_ladder().unwrap();
        RunConfig::preset("fig2").unwrap().validate_ladder().unwrap();
        RunConfig::preset("fig3a").unwrap().validate_spectrum().unwrap();
        RunConfig::preset("fig3b").unwrap().validate_spectrum().unwrap();
        RunConfig::preset("fig4").unwrap().validate_g2().unwrap();
        assert!(RunConfig::preset("fig9").is_err());
    }

    #[test]
    fn preset_contents() {
        assert_eq!(RunConfig::preset("fig3a").unwrap().spectrum.points.len(), 3);
        assert_eq!(RunConfig::preset("fig3b").unwrap().spectrum.points.len(), 2);
        let fig4 = RunConfig::preset("fig4").unwrap();
        assert_eq!(fig4.g2.lambdas.len(), 4);
        assert_eq!(fig4.g2.pump_grid.build().unwrap().len(), 60);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[params]\nkapa = 0.1\n").is_err());
        assert!(RunConfig::from_toml("colour = 1\n").is_err());
        assert!(RunConfig::from_toml("[output]\nformats = [\"png\"]\n").is_err());
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let c = RunConfig::from_toml("[params]\nlambda = 0.5\n[cutoff]\ninitial = 20\nmax = 40\ntop_tolerance = 1e-8\n").unwrap();
        assert_eq!(c.params.lambda, 0.5);
        assert_eq!(c.params.kappa, SystemParams::REFERENCE_KAPPA);
        assert_eq!(c.cutoff.initial, 20);
    }

    #[test]
    fn lambda_below_bound_names_the_constraint() {
        let c = RunConfig::from_toml("[algebra]\nlambdas = [-0.7]\n").unwrap();
        let msg = c.validate_algebra().unwrap_err().to_string();
        assert!(msg.contains("-1/2"), "{msg}");
    }

    #[test]
    fn empty_ladder_grid_is_rejected() {
        let c = RunConfig::from_toml("[ladder.lambda_grid]\nkind = \"values\"\nvalues = []\n").unwrap();
        assert!(c.validate_ladder().is_err());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::preset("fig2").unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
