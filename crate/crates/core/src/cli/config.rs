use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::looplab::IwasawaOptions;
use crate::moebius::GroupLabel;
use crate::monodromy::{LambdaGrid, OdeOptions};
use crate::potentials::{ResidueConvention, WeightTriple};
use crate::surface::GridOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub radial: usize,
    pub angular: usize,
    pub r_cut: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutConfig {
    pub mesh: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// One pipeline run. `lambda_samples` is both the λ grid of the monodromy
/// stages and the Iwasawa grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: String,
    pub n: Option<usize>,
    pub weights: [f64; 3],
    pub convention: ResidueConvention,
    pub lambda_samples: usize,
    pub ode_tol: f64,
    #[serde(rename = "iwasawa_N")]
    pub iwasawa_n: usize,
    pub grid: GridConfig,
    pub epsilon_theta: f64,
    pub out: OutConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GridOptions::default();
        Self {
            group: "cyclic".into(),
            n: Some(3),
            weights: [0.0, 0.0, 0.4],
            convention: ResidueConvention::default(),
            lambda_samples: 256,
            ode_tol: 1e-10,
            iwasawa_n: 16,
            grid: GridConfig {
                radial: g.radial,
                angular: g.angular,
                r_cut: g.r_cut,
            },
            epsilon_theta: crate::monodromy::AUX_EPS,
            out: OutConfig { mesh: None, report: None },
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.label()?;
        self.weight_triple().validate()?;
        let positive = [
            ("ode_tol", self.ode_tol),
            ("epsilon_theta", self.epsilon_theta),
            ("grid.r_cut", self.grid.r_cut),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid.radial < 3 || self.grid.angular < 3 {
            return Err(Error::Config("grid sizes must be at least 3".into()));
        }
        if self.iwasawa_n < 1 || self.lambda_samples < 4 * self.iwasawa_n + 2 {
            return Err(Error::Config(format!(
                "lambda_samples = {} is too small for iwasawa_N = {} (need at least 4N + 2)",
                self.lambda_samples, self.iwasawa_n
            )));
        }
        if self.epsilon_theta >= std::f64::consts::PI / self.lambda_samples as f64 {
            return Err(Error::Config("epsilon_theta must be below half the λ grid spacing".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> Result<GroupLabel> {
        GroupLabel::parse(&self.group, self.n)
    }

    pub fn weight_triple(&self) -> WeightTriple {
        WeightTriple::new(self.weights[0], self.weights[1], self.weights[2])
    }

    pub fn lambda_grid(&self) -> LambdaGrid {
        LambdaGrid {
            m: self.lambda_samples,
            eps: self.epsilon_theta,
        }
    }

    pub fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            tol: self.ode_tol,
            ..OdeOptions::default()
        }
    }

    pub fn iwasawa_options(&self) -> IwasawaOptions {
        IwasawaOptions {
            truncation: self.iwasawa_n,
            grid: self.lambda_samples,
        }
    }

    pub fn grid_options(&self) -> GridOptions {
        GridOptions {
            radial: self.grid.radial,
            angular: self.grid.angular,
            r_cut: self.grid.r_cut,
            ..GridOptions::default()
        }
    }
}
