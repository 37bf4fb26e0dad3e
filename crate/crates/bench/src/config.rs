//! Experiment specifications, read from TOML files under `configs/`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cofbl::scene::SparsityKind;
use cofbl::signal::RadarConfig;

use crate::algorithms::Algorithm;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Monte-Carlo NMSE sweep.
    #[default]
    Sweep,
    /// Accuracy and wall time at EM checkpoints, full versus covariance-free.
    Timing,
    /// Downstream MVDR SCNR with clairvoyant, estimated and mismatched clutter.
    Mvdr,
    /// Slot-by-slot tracking of a changing support.
    Dynamic,
}

/// The quantity varied along a sweep (or a series of curves).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepName {
    Snr,
    EmIterations,
    Observations,
    Sparsity,
    ClusterLen,
    /// Receive antennas.
    Antennas,
    TxAntennas,
    Mismatch,
    TimeSlots,
}

impl SweepName {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepName::Snr => "snr",
            SweepName::EmIterations => "em_iterations",
            SweepName::Observations => "observations",
            SweepName::Sparsity => "sparsity",
            SweepName::ClusterLen => "cluster_len",
            SweepName::Antennas => "antennas",
            SweepName::TxAntennas => "tx_antennas",
            SweepName::Mismatch => "mismatch",
            SweepName::TimeSlots => "time_slots",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        toml::Value::String(s.to_string()).try_into().ok()
    }

    /// Axis label for plots.
    pub fn label(&self) -> &'static str {
        match self {
            SweepName::Snr => "SNR (dB)",
            SweepName::EmIterations => "EM iterations",
            SweepName::Observations => "pulses K",
            SweepName::Sparsity => "active range units",
            SweepName::ClusterLen => "cluster length d",
            SweepName::Antennas => "receive antennas M",
            SweepName::TxAntennas => "transmit antennas N",
            SweepName::Mismatch => "mismatch fraction",
            SweepName::TimeSlots => "time slot",
        }
    }

    fn integral(&self) -> bool {
        !matches!(self, SweepName::Snr | SweepName::Mismatch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: SweepName,
    #[serde(default)]
    pub values: Vec<f64>,
    /// Optional second dimension: one curve per value and algorithm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub name: SweepName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_range_bins: usize,
    pub n_pulses: usize,
    pub waveform_len: usize,
    #[serde(default = "defaults::pri")]
    pub pri: f64,
    /// Per-transmitter sweep bandwidths in Hz; derived from the dimensions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<Vec<f64>>,
    #[serde(default = "defaults::one")]
    pub group_len: usize,
}

impl ScenarioSpec {
    pub fn radar(&self) -> Result<RadarConfig> {
        let mut cfg = RadarConfig::with_dims(
            self.n_tx,
            self.n_rx,
            self.n_range_bins,
            self.n_pulses,
            self.waveform_len,
        );
        cfg.pri = self.pri;
        if let Some(b) = &self.bandwidths {
            cfg.bandwidths = b.clone();
        } else {
            cfg.bandwidths.iter_mut().for_each(|b| *b *= 1e-3 / self.pri);
        }
        cfg.group_len = self.group_len;
        cfg.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Row,
    Group,
    Joint,
    JointGroup,
}

impl ModelName {
    pub fn kind(&self, d: usize) -> SparsityKind {
        match self {
            ModelName::Row => SparsityKind::Row,
            ModelName::Group => SparsityKind::Group(d),
            ModelName::Joint => SparsityKind::Joint,
            ModelName::JointGroup => SparsityKind::JointGroup(d),
        }
    }
}

/// How CCIR entries are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    /// Exactly row-sparse: unit-variance rows on a random structured support.
    #[default]
    Support,
    /// Every row Gaussian with variance 1 on the support and
    /// `off_support_variance` elsewhere; noise fixed by the expected SNR.
    Bayesian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub model: ModelName,
    /// Active units: rows for row/group models, range bins for joint models.
    pub level: usize,
    #[serde(default = "defaults::snr")]
    pub snr_db: f64,
    /// Fraction of extra off-structure rows added to the true scene.
    #[serde(default)]
    pub mismatch: f64,
    #[serde(default)]
    pub prior: Prior,
    #[serde(default = "defaults::off_support_variance")]
    pub off_support_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SblSpec {
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
    #[serde(default = "defaults::prune")]
    pub prune_threshold: f64,
    #[serde(default = "defaults::n_probes")]
    pub n_probes: usize,
    #[serde(default = "defaults::cg_tol")]
    pub cg_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cg_max_iter: Option<usize>,
    #[serde(default = "defaults::yes")]
    pub jacobi: bool,
    #[serde(default = "defaults::yes")]
    pub warm_start: bool,
}

impl Default for SblSpec {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfocussSpec {
    #[serde(default = "defaults::p")]
    pub p: f64,
    /// `lambda = lambda_scale * noise variance`.
    #[serde(default = "defaults::one_f")]
    pub lambda_scale: f64,
    #[serde(default = "defaults::mfocuss_iter")]
    pub max_iter: usize,
    #[serde(default = "defaults::mfocuss_tol")]
    pub tol: f64,
    /// Rows whose weight drops below this fraction of the largest weight are
    /// removed from later solves.
    #[serde(default = "defaults::weight_floor")]
    pub weight_floor: f64,
}

impl Default for MfocussSpec {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MvdrSpec {
    #[serde(default = "defaults::carrier")]
    pub carrier_hz: f64,
    #[serde(default = "defaults::velocity")]
    pub velocity_kmh: f64,
    /// Target range bin; the middle bin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_bin: Option<usize>,
    #[serde(default = "defaults::mismatch_fractions")]
    pub mismatch_fractions: Vec<f64>,
    /// Diagonal loading, relative to the mean diagonal, used only if the
    /// covariance is numerically singular.
    #[serde(default = "defaults::loading")]
    pub loading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeSpec {
    /// First affected slot, 1-based.
    pub slot: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicSpec {
    pub n_slots: usize,
    #[serde(default)]
    pub changes: Vec<ChangeSpec>,
    #[serde(default = "defaults::slot_iter")]
    pub iterations_per_slot: usize,
    #[serde(default = "defaults::max_iter")]
    pub first_slot_iterations: usize,
    /// Warm-start floor: entries below `revive_floor * max(ψ)` restart there.
    #[serde(default = "defaults::revive")]
    pub revive_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub kind: ExperimentKind,
    /// Marks configs that do not finish at desk scale.
    #[serde(default)]
    pub long_running: bool,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Wall time is nondeterministic, so it is left blank unless requested.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Adds the Bayesian CRB of each trial to the results.
    #[serde(default)]
    pub bcrb: bool,
    pub scenario: ScenarioSpec,
    pub scene: SceneSpec,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub sbl: SblSpec,
    #[serde(default)]
    pub mfocuss: MfocussSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mvdr: Option<MvdrSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic: Option<DynamicSpec>,
}

/// Command-line replacements for file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub algorithms: Option<Vec<String>>,
    pub trials: Option<usize>,
}

/// Everything that changes from one sweep point (or series value) to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSetup {
    pub scenario: ScenarioSpec,
    pub radar: RadarConfig,
    pub scene_kind: SparsityKind,
    pub level: usize,
    pub snr_db: f64,
    pub mismatch: f64,
    /// Cluster length used by the grouped estimators.
    pub estimator_group_len: usize,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(a) = &o.algorithms {
            self.algorithms = a.clone();
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        self.validate()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("results").join(&self.name))
    }

    pub fn parsed_algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithms
            .iter()
            .map(|a| Algorithm::parse(a).ok_or_else(|| BenchError::Config(format!("unknown algorithm `{a}`"))))
            .collect()
    }

    /// Sweep values actually visited (derived slot numbers for dynamic runs).
    pub fn sweep_values(&self) -> Vec<f64> {
        match (&self.kind, &self.dynamic) {
            (ExperimentKind::Dynamic, Some(d)) => (1..=d.n_slots).map(|s| s as f64).collect(),
            _ => self.sweep.values.clone(),
        }
    }

    pub fn series_values(&self) -> Vec<Option<f64>> {
        match &self.sweep.series {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }

    /// Curve label: the algorithm name, tagged with the series value if any.
    pub fn label(&self, alg: &str, series: Option<f64>) -> String {
        match (&self.sweep.series, series) {
            (Some(s), Some(v)) => format!("{alg}@{}={v}", s.name.as_str()),
            _ => alg.to_string(),
        }
    }

    /// Scenario after applying a series value and a sweep value.
    pub fn point(&self, series: Option<f64>, value: Option<f64>) -> Result<PointSetup> {
        let mut scenario = self.scenario.clone();
        let mut level = self.scene.level;
        let mut snr_db = self.scene.snr_db;
        let mut mismatch = self.scene.mismatch;
        let mut est_d = self.scenario.group_len;
        let mut assign = |name: SweepName, v: f64| match name {
            SweepName::Snr => snr_db = v,
            SweepName::Observations => scenario.n_pulses = v as usize,
            SweepName::Sparsity => level = v as usize,
            SweepName::ClusterLen => est_d = v as usize,
            SweepName::Antennas => scenario.n_rx = v as usize,
            SweepName::TxAntennas => scenario.n_tx = v as usize,
            SweepName::Mismatch => mismatch = v,
            SweepName::EmIterations | SweepName::TimeSlots => {}
        };
        if let (Some(s), Some(v)) = (&self.sweep.series, series) {
            assign(s.name, v);
        }
        if let Some(v) = value {
            assign(self.sweep.name, v);
        }
        let radar = scenario.radar()?;
        let scene_kind = self.scene.model.kind(scenario.group_len);
        let cfg_err = |e: cofbl::Error| BenchError::Config(e.to_string());
        scene_kind.validate(radar.layout()).map_err(cfg_err)?;
        for kind in [SparsityKind::Group(est_d), SparsityKind::JointGroup(est_d)] {
            if self.uses_kind(kind) {
                kind.validate(radar.layout()).map_err(cfg_err)?;
            }
        }
        let atoms = cofbl::scene::SparsityModel::new(scene_kind, level)
            .active_atoms()
            .map_err(cfg_err)?;
        if level == 0 || atoms > scene_kind.hyper_count(radar.layout()) {
            return Err(BenchError::Config(format!(
                "sparsity level {level} does not fit the scenario"
            )));
        }
        if !(0.0..=1.0).contains(&mismatch) {
            return Err(BenchError::Config(format!("mismatch {mismatch} outside [0, 1]")));
        }
        Ok(PointSetup {
            scenario,
            radar,
            scene_kind,
            level,
            snr_db,
            mismatch,
            estimator_group_len: est_d,
        })
    }

    fn uses_kind(&self, kind: SparsityKind) -> bool {
        let algs = self.parsed_algorithms().unwrap_or_default();
        algs.iter()
            .any(|a| a.sbl_kind(kind.group_len()).map(|(k, _)| k) == Some(kind))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.name.trim().is_empty() {
            return fail("name must not be empty".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        let algs = self.parsed_algorithms()?;
        if algs.is_empty() {
            return fail("at least one algorithm is required".into());
        }
        let mut seen = algs.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != algs.len() {
            return fail("duplicate algorithm".into());
        }
        let check_values = |name: SweepName, values: &[f64]| -> Result<()> {
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(BenchError::Config(format!("{} value {v} is not finite", name.as_str())));
            }
            if name.integral() {
                if let Some(v) = values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                    return Err(BenchError::Config(format!(
                        "{} value {v} must be a positive integer",
                        name.as_str()
                    )));
                }
            }
            Ok(())
        };
        check_values(self.sweep.name, &self.sweep.values)?;
        if let Some(s) = &self.sweep.series {
            if matches!(s.name, SweepName::EmIterations | SweepName::TimeSlots) || s.name == self.sweep.name {
                return fail(format!("`{}` cannot be a series", s.name.as_str()));
            }
            if s.values.is_empty() {
                return fail("series values must not be empty".into());
            }
            check_values(s.name, &s.values)?;
        }
        let sbl_only = algs.iter().all(|a| a.sbl_kind(1).is_some());
        match self.kind {
            ExperimentKind::Dynamic => {
                let Some(d) = &self.dynamic else {
                    return fail("dynamic experiments need a [dynamic] section".into());
                };
                if self.sweep.name != SweepName::TimeSlots {
                    return fail("dynamic experiments sweep `time_slots`".into());
                }
                if d.n_slots == 0 || d.iterations_per_slot == 0 || d.first_slot_iterations == 0 {
                    return fail("slot and iteration counts must be positive".into());
                }
                if d.changes.iter().any(|c| c.slot == 0 || c.slot > d.n_slots) {
                    return fail("change slots are 1-based and within n_slots".into());
                }
                if !(d.revive_floor > 0.0 && d.revive_floor < 1.0) {
                    return fail("revive_floor must lie in (0, 1)".into());
                }
                if !sbl_only {
                    return fail("dynamic tracking needs SBL estimators".into());
                }
            }
            _ if self.sweep.values.is_empty() => return fail("sweep values must not be empty".into()),
            _ if self.sweep.name == SweepName::TimeSlots => {
                return fail("`time_slots` sweeps need kind = \"dynamic\"".into())
            }
            _ => {}
        }
        if self.sweep.name == SweepName::EmIterations && !sbl_only {
            return fail("an em_iterations sweep only applies to SBL estimators".into());
        }
        if self.kind == ExperimentKind::Timing {
            if self.sweep.name != SweepName::EmIterations {
                return fail("timing experiments sweep `em_iterations`".into());
            }
            if !(algs.contains(&Algorithm::SblFull) && algs.contains(&Algorithm::CoFbl)) {
                return fail("timing experiments need both SBL-full and CoFBL".into());
            }
        }
        if self.kind == ExperimentKind::Mvdr {
            let Some(m) = &self.mvdr else {
                return fail("mvdr experiments need an [mvdr] section".into());
            };
            if self.sweep.name != SweepName::Snr || self.sweep.series.is_some() {
                return fail("mvdr experiments sweep `snr` without a series".into());
            }
            if algs.len() != 1 || !sbl_only {
                return fail("mvdr experiments take exactly one SBL estimator".into());
            }
            if !(m.carrier_hz > 0.0) || !m.velocity_kmh.is_finite() || !(m.loading > 0.0) {
                return fail("carrier, velocity and loading must be positive and finite".into());
            }
            if m.mismatch_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
                return fail("mismatch fractions must lie in [0, 1]".into());
            }
        }
        let s = &self.sbl;
        if s.max_iter == 0
            || !(s.eps > 0.0)
            || !(0.0..1.0).contains(&s.prune_threshold)
            || s.n_probes == 0
            || !(s.cg_tol > 0.0)
        {
            return fail("invalid [sbl] settings".into());
        }
        let m = &self.mfocuss;
        if !(m.p > 0.0 && m.p <= 1.0)
            || !(m.lambda_scale >= 0.0)
            || m.max_iter == 0
            || !(m.tol > 0.0)
            || !(0.0..1.0).contains(&m.weight_floor)
        {
            return fail("invalid [mfocuss] settings".into());
        }
        if self.bcrb && self.scene.prior != Prior::Bayesian {
            return fail("bcrb = true needs prior = \"bayesian\"".into());
        }
        if !(self.scene.off_support_variance > 0.0) {
            return fail("off_support_variance must be positive".into());
        }
        // Every point must describe a valid scenario.
        let dense = algs
            .iter()
            .find(|a| matches!(a, Algorithm::SblFull | Algorithm::Mfocuss));
        for series in self.series_values() {
            for v in self.sweep.values.iter().map(|&v| Some(v)).chain(std::iter::once(None)) {
                let nmr = self.point(series, v)?.radar.nmr();
                if let (Some(a), true) = (dense, nmr > cofbl::signal::DENSE_CAP) {
                    return fail(format!(
                        "{} needs a dense dictionary; NMR {nmr} exceeds {}",
                        a.name(),
                        cofbl::signal::DENSE_CAP
                    ));
                }
            }
        }
        Ok(())
    }
}

mod defaults {
    pub fn pri() -> f64 {
        1e-3
    }
    pub fn one() -> usize {
        1
    }
    pub fn one_f() -> f64 {
        1.0
    }
    pub fn yes() -> bool {
        true
    }
    pub fn snr() -> f64 {
        10.0
    }
    pub fn off_support_variance() -> f64 {
        1e-3
    }
    pub fn max_iter() -> usize {
        50
    }
    pub fn eps() -> f64 {
        1e-6
    }
    pub fn prune() -> f64 {
        1e-6
    }
    pub fn n_probes() -> usize {
        20
    }
    pub fn cg_tol() -> f64 {
        1e-4
    }
    pub fn p() -> f64 {
        0.8
    }
    pub fn mfocuss_iter() -> usize {
        100
    }
    pub fn mfocuss_tol() -> f64 {
        1e-6
    }
    pub fn weight_floor() -> f64 {
        1e-6
    }
    pub fn carrier() -> f64 {
        1e9
    }
    pub fn velocity() -> f64 {
        100.0
    }
    pub fn mismatch_fractions() -> Vec<f64> {
        vec![0.05, 0.10]
    }
    pub fn loading() -> f64 {
        1e-6
    }
    pub fn slot_iter() -> usize {
        10
    }
    pub fn revive() -> f64 {
        1e-3
    }
}
