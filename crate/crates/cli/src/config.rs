use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use krylov_core::{Domain, Family};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Cg,
    Cr,
    Minres,
    CgPis,
    CrPis,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cg => "cg",
            Self::Cr => "cr",
            Self::Minres => "minres",
            Self::CgPis => "cg-pis",
            Self::CrPis => "cr-pis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Synth {
        d: usize,
        m: usize,
        family: Family,
    },
    Poisson {
        grid_n: usize,
        #[serde(default = "Domain::off_center")]
        domain: Domain,
    },
    File {
        path: PathBuf,
        /// Matrix Market vector; a seeded Gaussian is used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rhs: Option<PathBuf>,
    },
}

impl FromStr for ProblemSpec {
    type Err = anyhow::Error;

    /// `synth:d=10,m=3,family=psd`, `poisson:n=32[,domain=unit|off-center]`
    /// or `file:A.mtx[,rhs=b.mtx]`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').context("expected KIND:ARGS")?;
        if kind == "file" {
            let (path, rhs) = match rest.split_once(",rhs=") {
                Some((p, r)) => (p, Some(PathBuf::from(r))),
                None => (rest, None),
            };
            ensure!(!path.is_empty(), "file problem needs a path");
            return Ok(Self::File {
                path: path.into(),
                rhs,
            });
        }
        let mut kv = Vec::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .with_context(|| format!("expected KEY=VALUE, got '{part}'"))?;
            kv.push((k.trim(), v.trim()));
        }
        let get = |key: &str| kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let known = |keys: &[&str]| -> Result<()> {
            if let Some((k, _)) = kv.iter().find(|(k, _)| !keys.contains(k)) {
                bail!("unknown {kind} parameter '{k}'");
            }
            Ok(())
        };
        let int = |key: &str| -> Result<usize> {
            get(key)
                .with_context(|| format!("{kind} problem needs {key}="))?
                .parse()
                .with_context(|| format!("bad value for {key}"))
        };
        match kind {
            "synth" => {
                known(&["d", "m", "family"])?;
                let family = get("family")
                    .unwrap_or("psd")
                    .parse()
                    .map_err(anyhow::Error::from)?;
                Ok(Self::Synth {
                    d: int("d")?,
                    m: int("m")?,
                    family,
                })
            }
            "poisson" => {
                known(&["n", "domain"])?;
                let domain = match get("domain").unwrap_or("off-center") {
                    "off-center" => Domain::off_center(),
                    "unit" => Domain::unit_square(),
                    other => bail!("unknown domain '{other}' (use unit or off-center)"),
                };
                Ok(Self::Poisson {
                    grid_n: int("n")?,
                    domain,
                })
            }
            other => bail!("unknown problem kind '{other}' (use synth, poisson or file)"),
        }
    }
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::Cg, MethodName::Cr, MethodName::Minres]
}

fn default_tol() -> f64 {
    1e-8
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Option<ProblemSpec>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub record_vectors: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: None,
            methods: default_methods(),
            tol: default_tol(),
            max_iter: None,
            record_vectors: false,
            output_dir: default_output_dir(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<&ProblemSpec> {
        ensure!(!self.methods.is_empty(), "at least one method is required");
        ensure!(
            self.tol > 0.0 && self.tol.is_finite(),
            "tol must be positive, got {}",
            self.tol
        );
        self.problem
            .as_ref()
            .context("no problem given (use --problem or a config file)")
    }
}
