//! Experiment description shared by `analyze` and `trainsim`, loadable from
//! a JSON file via --spec and overridable by flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use mixlab_core::gcn::Precision;
use mixlab_core::graph::{CsrGraph, GraphSpec};
use mixlab_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Reference,
    PpRandom,
    PpBfs,
    Mop,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Reference => "reference",
            Scheme::PpRandom => "pp-random",
            Scheme::PpBfs => "pp-bfs",
            Scheme::Mop => "mop",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Scheme::Reference),
            "pp-random" => Ok(Scheme::PpRandom),
            "pp-bfs" => Ok(Scheme::PpBfs),
            "mop" => Ok(Scheme::Mop),
            other => Err(Error::InvalidParam(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Where the graph comes from: a saved CSR file or a generator spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File { file: PathBuf },
    Generate(GraphSpec),
}

impl GraphSource {
    pub fn load(&self, seed: u64) -> Result<CsrGraph> {
        match self {
            GraphSource::File { file } => mixlab_core::io::load_csr(file),
            GraphSource::Generate(spec) => mixlab_core::graph::gen_synthetic(spec, seed),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub graph: Option<GraphSource>,
    pub dims: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub m: Vec<usize>,
    pub precision: Precision,
    pub iterations: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            graph: None,
            dims: vec![16, 16, 8],
            schemes: vec![Scheme::PpRandom, Scheme::Mop],
            m: vec![2, 4],
            precision: Precision::F64,
            iterations: 10,
            learning_rate: 0.2,
            dropout: 0.5,
            seed: 0,
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_file(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad spec file: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidParam("need at least one scheme".into()));
        }
        if self.m.iter().any(|&m| m == 0) {
            return Err(Error::InvalidParam("worker counts must be >= 1".into()));
        }
        if self.dims.len() < 2 {
            return Err(Error::InvalidParam(
                "need dims for at least one layer".into(),
            ));
        }
        Ok(())
    }
}
