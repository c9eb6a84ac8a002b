//! Experiment reports: everything a run computed, in a form that is
//! byte-identical across reruns of the same configuration and seed.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ks::{KsResult, WeightedKs};
use super::moments::Estimate;
use crate::{Error, Result};

/// How the random streams of a run were derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScheme {
    pub master: u64,
    pub generator: String,
    /// Path of labels folded into the stream id of each draw.
    pub streams: String,
}

impl SeedScheme {
    pub fn new(master: u64, streams: &str) -> Self {
        Self { master, generator: "ChaCha8, stream id from splitmix64 over the label path".into(), streams: streams.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTest {
    pub name: String,
    pub statistic: f64,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_eff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub detail: String,
    /// Set when the inputs were too thin to trust the verdict either way.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub seed: SeedScheme,
    pub estimates: Vec<NamedEstimate>,
    pub tests: Vec<NamedTest>,
    pub verdicts: Vec<Verdict>,
}

/// Wall-clock time, kept out of the report so the report stays reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(experiment: &str, config: &C, seed: SeedScheme) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        Ok(Self { experiment: experiment.into(), config, seed, estimates: Vec::new(), tests: Vec::new(), verdicts: Vec::new() })
    }

    pub fn value(&mut self, name: &str, value: f64) {
        self.estimates.push(NamedEstimate { name: name.into(), value, se: None, n: None });
    }

    pub fn estimate(&mut self, name: &str, e: Estimate) {
        self.estimates.push(NamedEstimate { name: name.into(), value: e.value, se: Some(e.se), n: Some(e.n) });
    }

    pub fn ks(&mut self, name: &str, r: KsResult) {
        self.tests.push(NamedTest { name: name.into(), statistic: r.statistic, p: r.p, n_eff: Some(r.n_eff) });
    }

    pub fn weighted_ks(&mut self, name: &str, r: WeightedKs) {
        self.tests.push(NamedTest { name: name.into(), statistic: r.statistic, p: r.p, n_eff: Some(r.effective_size) });
    }

    pub fn verdict(&mut self, criterion: &str, passed: bool, detail: String) {
        self.verdicts.push(Verdict { criterion: criterion.into(), passed, detail, unreliable: false });
    }

    pub fn flag_unreliable(&mut self, criterion: &str) {
        if let Some(v) = self.verdicts.iter_mut().rev().find(|v| v.criterion == criterion) {
            v.unreliable = true;
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn find(&self, name: &str) -> Option<&NamedEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn find_verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold plain data")
    }

    /// Writes `<experiment>.json` and the `<experiment>.timing.json` sidecar.
    pub fn write(&self, dir: &Path, elapsed: Duration) -> Result<PathBuf> {
        let io = |e: std::io::Error| Error::InvalidParameter(format!("{}: {e}", dir.display()));
        let path = dir.join(format!("{}.json", self.experiment));
        let mut f = std::fs::File::create(&path).map_err(io)?;
        f.write_all(self.to_json().as_bytes()).map_err(io)?;
        f.write_all(b"\n").map_err(io)?;
        let timing = serde_json::to_string_pretty(&Timing { seconds: elapsed.as_secs_f64() }).expect("plain data");
        std::fs::write(dir.join(format!("{}.timing.json", self.experiment)), timing + "\n").map_err(io)?;
        Ok(path)
    }
}
