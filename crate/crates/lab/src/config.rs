//! Experiment configuration files (TOML, schema version 1).
//!
//! Every file names its experiment `kind`, an explicit list of seeds, and a
//! table of the same name holding the swept parameters:
//!
//! ```toml
//! schema_version = 1
//! kind = "ratio-sweep"
//! seeds = [0, 1, 2]
//!
//! [ratio-sweep]
//! n_modes = [8]
//! sigma = [0.02, 0.1, 0.3]
//! shots = [1000, 10000, "exact"]
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use shadowrdm::cumulant::L1Convention;
use shadowrdm::models::HubbardParams;
use shadowrdm::qse::{Pipeline, DEFAULT_THRESHOLD};
use shadowrdm::shadows::AcquisitionPlan;

use crate::error::{LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RatioSweep,
    QseShots,
    QseNoiseHeatmap,
    EntropySweep,
    RdmEstimate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RatioSweep => "ratio-sweep",
            ExperimentKind::QseShots => "qse-shots",
            ExperimentKind::QseNoiseHeatmap => "qse-noise-heatmap",
            ExperimentKind::EntropySweep => "entropy-sweep",
            ExperimentKind::RdmEstimate => "rdm-estimate",
        }
    }
}

/// A finite shot budget, or the infinite-shot limit using exact expectations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShotCount {
    Finite(u64),
    Exact,
}

impl fmt::Display for ShotCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShotCount::Finite(n) => write!(f, "{n}"),
            ShotCount::Exact => f.write_str("exact"),
        }
    }
}

impl FromStr for ShotCount {
    type Err = LabError;
    fn from_str(s: &str) -> LabResult<Self> {
        if s == "exact" {
            return Ok(ShotCount::Exact);
        }
        s.parse().map(ShotCount::Finite).map_err(|_| LabError::Config(format!("bad shot count {s:?}")))
    }
}

impl Serialize for ShotCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ShotCount::Finite(n) => s.serialize_u64(*n),
            ShotCount::Exact => s.serialize_str("exact"),
        }
    }
}

impl<'de> Deserialize<'de> for ShotCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(ShotCount::Finite(n)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// State ansatz for the entropy sweep: `uccsd`, or `upccgsd<q>` for a
/// `q`-layer pair ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ansatz {
    Uccsd,
    Upccgsd(usize),
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ansatz::Uccsd => f.write_str("uccsd"),
            Ansatz::Upccgsd(q) => write!(f, "upccgsd{q}"),
        }
    }
}

impl FromStr for Ansatz {
    type Err = LabError;
    fn from_str(s: &str) -> LabResult<Self> {
        if s == "uccsd" {
            return Ok(Ansatz::Uccsd);
        }
        s.strip_prefix("upccgsd")
            .and_then(|q| q.parse().ok())
            .filter(|&q| q >= 1)
            .map(Ansatz::Upccgsd)
            .ok_or_else(|| LabError::Config(format!("unknown ansatz {s:?}")))
    }
}

impl Serialize for Ansatz {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ansatz {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn default_batch() -> u64 {
    AcquisitionPlan::DEFAULT_BATCH
}

pub const DEFAULT_INDEX_SAMPLES: usize = 200;

fn default_index_samples() -> usize {
    DEFAULT_INDEX_SAMPLES
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioSweep {
    pub n_modes: Vec<usize>,
    pub sigma: Vec<f64>,
    pub shots: Vec<ShotCount>,
    /// Sorted index pairs sampled for the L1 distances; 0 uses the full
    /// tensor under `l1_convention`.
    #[serde(default = "default_index_samples")]
    pub index_samples: usize,
    #[serde(default)]
    pub l1_convention: L1Convention,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
}

fn default_pipelines() -> Vec<Pipeline> {
    Pipeline::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QseShots {
    pub model: HubbardParams,
    pub shots: Vec<ShotCount>,
    #[serde(default = "default_pipelines")]
    pub pipelines: Vec<Pipeline>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
}

fn default_noise_grid() -> Vec<f64> {
    vec![0.0, 1e-3, 1e-2, 1e-1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QseNoiseHeatmap {
    pub model: HubbardParams,
    pub shots: Vec<ShotCount>,
    #[serde(default = "default_noise_grid")]
    pub noise: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
}

fn default_ansatze() -> Vec<Ansatz> {
    vec![Ansatz::Uccsd, Ansatz::Upccgsd(1), Ansatz::Upccgsd(2)]
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySweep {
    pub n_modes: Vec<usize>,
    pub sigma: Vec<f64>,
    #[serde(default = "default_ansatze")]
    pub ansatze: Vec<Ansatz>,
    /// Include the random-sector reference at half filling.
    #[serde(default = "yes")]
    pub haar_reference: bool,
}

/// Input state for `rdm-estimate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    HartreeFock { n_modes: usize },
    Uccsd { n_modes: usize, sigma: f64 },
    Haar { n_modes: usize, particles: usize },
    HubbardGround { model: HubbardParams },
    /// Raw little-endian amplitudes as written by `StateVector::write_amplitudes`.
    Amplitudes { n_modes: usize, path: String },
}

impl StateSpec {
    pub fn n_modes(&self) -> usize {
        match self {
            StateSpec::HartreeFock { n_modes }
            | StateSpec::Uccsd { n_modes, .. }
            | StateSpec::Haar { n_modes, .. }
            | StateSpec::Amplitudes { n_modes, .. } => *n_modes,
            StateSpec::HubbardGround { model } => model.n_sites(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            StateSpec::HartreeFock { .. } => "hf".into(),
            StateSpec::Uccsd { .. } => "uccsd".into(),
            StateSpec::Haar { .. } => "haar".into(),
            StateSpec::HubbardGround { model } => format!("ground-{}", model.label()),
            StateSpec::Amplitudes { .. } => "amplitudes".into(),
        }
    }
}

fn default_order() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdmEstimate {
    pub state: StateSpec,
    pub shots: ShotCount,
    /// Highest RDM order assembled from the estimates.
    #[serde(default = "default_order")]
    pub max_order: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
    /// Batches between checkpoints; 0 disables checkpointing.
    #[serde(default)]
    pub checkpoint_every: u64,
    /// Median-of-means groups; 0 uses the plain mean.
    #[serde(default)]
    pub median_of_means: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    #[serde(rename = "ratio-sweep", default, skip_serializing_if = "Option::is_none")]
    pub ratio_sweep: Option<RatioSweep>,
    #[serde(rename = "qse-shots", default, skip_serializing_if = "Option::is_none")]
    pub qse_shots: Option<QseShots>,
    #[serde(rename = "qse-noise-heatmap", default, skip_serializing_if = "Option::is_none")]
    pub qse_noise_heatmap: Option<QseNoiseHeatmap>,
    #[serde(rename = "entropy-sweep", default, skip_serializing_if = "Option::is_none")]
    pub entropy_sweep: Option<EntropySweep>,
    #[serde(rename = "rdm-estimate", default, skip_serializing_if = "Option::is_none")]
    pub rdm_estimate: Option<RdmEstimate>,
}

fn nonempty<T>(name: &str, v: &[T]) -> LabResult<()> {
    if v.is_empty() {
        Err(LabError::Config(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

fn check_shots(shots: &[ShotCount]) -> LabResult<()> {
    nonempty("shots", shots)?;
    if shots.contains(&ShotCount::Finite(0)) {
        return Err(LabError::Config("shot counts must be positive".into()));
    }
    Ok(())
}

fn check_rate(p: f64) -> LabResult<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(LabError::Config(format!("noise rate {p} outside [0, 1]")))
    }
}

fn check_sigma(sigma: &[f64]) -> LabResult<()> {
    nonempty("sigma", sigma)?;
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(LabError::Config("sigma values must be finite and nonnegative".into()));
    }
    Ok(())
}

fn check_model(m: &HubbardParams) -> LabResult<()> {
    m.validate().map_err(|e| LabError::Config(e.to_string()))?;
    if m.n_sites() > shadowrdm::statevector::MAX_MODES {
        return Err(LabError::Config(format!("{} sites exceed the simulator limit", m.n_sites())));
    }
    Ok(())
}

fn check_batch(b: u64) -> LabResult<()> {
    if b == 0 {
        Err(LabError::Config("batch_size must be positive".into()))
    } else {
        Ok(())
    }
}

fn check_modes(n: usize) -> LabResult<()> {
    if !(2..=shadowrdm::statevector::MAX_MODES).contains(&n) {
        Err(LabError::Config(format!("n_modes {n} outside 2..={}", shadowrdm::statevector::MAX_MODES)))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> LabResult<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> LabResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        nonempty("seeds", &self.seeds)?;
        let sections = [
            (ExperimentKind::RatioSweep, self.ratio_sweep.is_some()),
            (ExperimentKind::QseShots, self.qse_shots.is_some()),
            (ExperimentKind::QseNoiseHeatmap, self.qse_noise_heatmap.is_some()),
            (ExperimentKind::EntropySweep, self.entropy_sweep.is_some()),
            (ExperimentKind::RdmEstimate, self.rdm_estimate.is_some()),
        ];
        for (kind, present) in sections {
            if present != (kind == self.kind) {
                return Err(LabError::Config(if present {
                    format!("section [{}] given but kind is {}", kind.name(), self.kind.name())
                } else {
                    format!("missing section [{}]", kind.name())
                }));
            }
        }
        match self.kind {
            ExperimentKind::RatioSweep => {
                let r = self.ratio_sweep.as_ref().expect("checked");
                nonempty("n_modes", &r.n_modes)?;
                for &n in &r.n_modes {
                    check_modes(n)?;
                    if n < 3 {
                        return Err(LabError::Config("3-RDM ratios need at least 3 modes".into()));
                    }
                }
                check_sigma(&r.sigma)?;
                check_shots(&r.shots)?;
                check_batch(r.batch_size)?;
            }
            ExperimentKind::QseShots => {
                let q = self.qse_shots.as_ref().expect("checked");
                check_model(&q.model)?;
                check_shots(&q.shots)?;
                nonempty("pipelines", &q.pipelines)?;
                check_rate(q.noise)?;
                check_batch(q.batch_size)?;
            }
            ExperimentKind::QseNoiseHeatmap => {
                let q = self.qse_noise_heatmap.as_ref().expect("checked");
                check_model(&q.model)?;
                check_shots(&q.shots)?;
                nonempty("noise", &q.noise)?;
                q.noise.iter().try_for_each(|&p| check_rate(p))?;
                check_batch(q.batch_size)?;
            }
            ExperimentKind::EntropySweep => {
                let e = self.entropy_sweep.as_ref().expect("checked");
                nonempty("n_modes", &e.n_modes)?;
                e.n_modes.iter().try_for_each(|&n| check_modes(n))?;
                check_sigma(&e.sigma)?;
                nonempty("ansatze", &e.ansatze)?;
                if e.ansatze.iter().any(|a| matches!(a, Ansatz::Upccgsd(_))) && e.n_modes.iter().any(|n| n % 2 != 0) {
                    return Err(LabError::Config("pair ansatz needs even n_modes".into()));
                }
            }
            ExperimentKind::RdmEstimate => {
                let r = self.rdm_estimate.as_ref().expect("checked");
                check_modes(r.state.n_modes())?;
                check_shots(std::slice::from_ref(&r.shots))?;
                if r.max_order == 0 || r.max_order > 4 || r.max_order > r.state.n_modes() {
                    return Err(LabError::Config(format!("max_order {} outside 1..=min(4, N)", r.max_order)));
                }
                check_rate(r.noise)?;
                check_batch(r.batch_size)?;
                if r.median_of_means > 0 && r.checkpoint_every > 0 {
                    return Err(LabError::Config("checkpointing is not supported with median_of_means".into()));
                }
                if let StateSpec::HubbardGround { model } = &r.state {
                    check_model(model)?;
                }
            }
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form and the
    /// seed offset.
    pub fn hash(&self, seed_offset: u64) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.update(seed_offset.to_le_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn seeds_with_offset(&self, offset: u64) -> Vec<u64> {
        self.seeds.iter().map(|s| s.wrapping_add(offset)).collect()
    }
}
