use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hsm_core::fields::{parse_field, GridConfig};
use hsm_core::verifier::InequalityCase;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub spec: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    S,
    Q,
    Lambda,
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::S => "s",
            Param::Q => "q",
            Param::Lambda => "lambda",
        }
    }
}

/// Values are strings or numbers; `range` is `"lo:hi:n"`, `values` an explicit list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: Param,
    #[serde(default)]
    pub range: Option<String>,
    #[serde(default)]
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub fields: Vec<FieldSpec>,
    pub cases: Vec<InequalityCase>,
    #[serde(default)]
    pub sweeps: Vec<Sweep>,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub grid: GridConfig,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<SuiteConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: SuiteConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Validates every case and resolves every field spec in each case dimension.
    pub fn check(&self) -> Result<()> {
        if self.fields.is_empty() {
            bail!("config defines no fields");
        }
        if self.cases.is_empty() {
            bail!("config defines no cases");
        }
        for (i, f) in self.fields.iter().enumerate() {
            if self.fields[..i].iter().any(|g| g.name == f.name) {
                bail!("fields[{i}]: duplicate name `{}`", f.name);
            }
        }
        for (i, case) in self.cases.iter().enumerate() {
            case.validate().with_context(|| format!("cases[{i}] (s = {})", case.s))?;
            for f in &self.fields {
                parse_field(&f.spec, case.n).with_context(|| format!("field `{}` in N = {}", f.name, case.n))?;
            }
        }
        Ok(())
    }
}
