//! JSON experiment configuration. Unknown keys are rejected; omitted keys
//! fall back to the Example 1 defaults (2D, k = 2, gamma = 1e-7, L = 6,
//! P = 1000, four 41x41 measurement squares around [-1,1]^2).

use std::path::{Path, PathBuf};

use biharm::error::{Error, Result};
use biharm::estimators::MeasurementKind;
use biharm::forward::ReceiverSet;
use biharm::randsrc::{Grid, StrengthField};
use biharm::Dim;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum StrengthSpec {
    Example1,
    Example2,
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub intervals: usize,
}

impl Default for BoxSpec {
    fn default() -> BoxSpec {
        BoxSpec {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
            intervals: 20,
        }
    }
}

impl BoxSpec {
    pub fn grid(&self, dim: Dim) -> Result<Grid> {
        let d = dim.value();
        if self.lo.len() != d || self.hi.len() != d {
            return Err(Error::Config(format!(
                "box spec has {} coordinates for dim {}",
                self.lo.len(),
                d
            )));
        }
        if self.intervals == 0 {
            return Err(Error::Config("box spec: intervals must be positive".into()));
        }
        let spacing: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| (b - a) / self.intervals as f64)
            .collect();
        if spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Config("box spec: hi must exceed lo on every axis".into()));
        }
        Grid::new(&self.lo, &spacing, &vec![self.intervals + 1; d], dim)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionSpec {
    pub gamma: f64,
    pub sweeps: usize,
    pub clamp: bool,
    pub magnitude_data: bool,
}

impl Default for InversionSpec {
    fn default() -> InversionSpec {
        InversionSpec {
            gamma: 1e-7,
            sweeps: 6,
            clamp: false,
            magnitude_data: false,
        }
    }
}

impl InversionSpec {
    pub fn kind(&self) -> MeasurementKind {
        if self.magnitude_data {
            MeasurementKind::Magnitude
        } else {
            MeasurementKind::ExpectationDifference
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicSpec {
    pub t_band: f64,
    pub nodes: usize,
    pub m: f64,
    pub invert: bool,
}

impl Default for ErgodicSpec {
    fn default() -> ErgodicSpec {
        ErgodicSpec {
            t_band: 50.0,
            nodes: 200,
            m: 0.0,
            invert: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub strength: StrengthSpec,
    pub source: BoxSpec,
    pub domains: Vec<BoxSpec>,
    pub frequencies: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    pub inversion: InversionSpec,
    pub ergodic: ErgodicSpec,
}

fn default_domains() -> Vec<BoxSpec> {
    [
        ([1.5, 1.5], [2.5, 2.5]),
        ([1.5, -2.5], [2.5, -1.5]),
        ([-2.5, -2.5], [-1.5, -1.5]),
        ([-2.5, 1.5], [-1.5, 2.5]),
    ]
    .iter()
    .map(|(lo, hi)| BoxSpec {
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        intervals: 40,
    })
    .collect()
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            dim: 2,
            strength: StrengthSpec::Example1,
            source: BoxSpec::default(),
            domains: default_domains(),
            frequencies: vec![2.0],
            paths: 1000,
            seed: 1,
            inversion: InversionSpec::default(),
            ergodic: ErgodicSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = Dim::from_value(self.dim)?;
        if self.paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        if self.frequencies.is_empty() || self.frequencies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("frequencies must be a strictly ascending list".into()));
        }
        if self.frequencies[0] <= 0.0 {
            return Err(Error::Config("frequencies must be positive".into()));
        }
        if self.domains.is_empty() {
            return Err(Error::Config("at least one measurement domain required".into()));
        }
        let source = self.source.grid(dim)?;
        // positive-margin disjointness of every measurement domain from D
        self.receivers(dim)?.validate_outside(&source)?;
        Ok(())
    }

    pub fn dim(&self) -> Result<Dim> {
        Dim::from_value(self.dim)
    }

    pub fn source_grid(&self) -> Result<Grid> {
        self.source.grid(self.dim()?)
    }

    pub fn domain_grids(&self) -> Result<Vec<Grid>> {
        let dim = self.dim()?;
        self.domains.iter().map(|d| d.grid(dim)).collect()
    }

    pub fn receivers(&self, dim: Dim) -> Result<ReceiverSet> {
        let grids = self
            .domains
            .iter()
            .map(|d| d.grid(dim))
            .collect::<Result<Vec<_>>>()?;
        ReceiverSet::from_grids(&grids)
    }

    pub fn strength(&self) -> Result<StrengthField> {
        match &self.strength {
            StrengthSpec::Example1 => Ok(StrengthField::example1()),
            StrengthSpec::Example2 => Ok(StrengthField::example2()),
            StrengthSpec::Tabulated { path } => StrengthField::from_csv(path),
        }
    }
}
