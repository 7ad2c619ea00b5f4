use std::path::{Path, PathBuf};

use eventvol::market_data::WindowSpec;
use eventvol::{FitConfig, OutcomeGroup, SimSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub replications: usize,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self { replications: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressSection {
    /// Event window for the abnormal-volatility response.
    pub window: WindowSpec,
    /// Pre-event days; defaults to the estimation length.
    pub pre_event_length: Option<usize>,
    pub robust: bool,
    /// Covariate columns appended to the standard regressors.
    pub extra_columns: Vec<String>,
    /// Fail on a case with missing features instead of dropping it.
    pub strict: bool,
}

impl Default for RegressSection {
    fn default() -> Self {
        Self {
            window: "-1m,+2m".parse().expect("static window"),
            pre_event_length: None,
            robust: false,
            extra_columns: Vec::new(),
            strict: false,
        }
    }
}

/// Everything a run needs. Every field has a default so a config file only
/// lists what it changes; dotted keys such as `bootstrap.replications = 1000`
/// work at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub price_file: Option<PathBuf>,
    pub case_file: Option<PathBuf>,
    pub market_ticker: String,
    pub out: PathBuf,
    pub seed: u64,
    pub windows: Vec<WindowSpec>,
    pub groups: Vec<OutcomeGroup>,
    pub estimation_length: usize,
    pub bootstrap: BootstrapSection,
    pub fit: FitConfig,
    pub regress: RegressSection,
    pub simulate: SimSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            price_file: None,
            case_file: None,
            market_ticker: "SPX".into(),
            out: PathBuf::from("out"),
            seed: 0,
            windows: WindowSpec::standard_set(),
            groups: OutcomeGroup::ALL.to_vec(),
            estimation_length: 500,
            bootstrap: BootstrapSection::default(),
            fit: FitConfig::default(),
            regress: RegressSection::default(),
            simulate: SimSpec::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.price_file, &mut config.case_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if config.out.is_relative() {
            config.out = base.join(&config.out);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.windows.is_empty() {
            return Err(CliError::Config("at least one window is required".into()));
        }
        if self.groups.is_empty() {
            return Err(CliError::Config("at least one outcome group is required".into()));
        }
        if self.bootstrap.replications == 0 {
            return Err(CliError::Config("bootstrap.replications must be at least 1".into()));
        }
        if self.estimation_length < self.fit.min_obs {
            return Err(CliError::Config(format!(
                "estimation_length {} is below fit.min_obs {}",
                self.estimation_length, self.fit.min_obs
            )));
        }
        Ok(())
    }

    pub fn price_file(&self) -> Result<&Path, CliError> {
        self.price_file
            .as_deref()
            .ok_or_else(|| CliError::Config("price_file is not set".into()))
    }

    pub fn case_file(&self) -> Result<&Path, CliError> {
        self.case_file
            .as_deref()
            .ok_or_else(|| CliError::Config("case_file is not set".into()))
    }
}
