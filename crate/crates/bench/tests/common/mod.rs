#![allow(dead_code)]

use cofbl_bench::config::ExperimentSpec;

/// A small sweep spec; `extra` is appended verbatim, `sweep` replaces the sweep section.
pub fn spec_with(head: &str, sweep: &str, extra: &str) -> ExperimentSpec {
    parse(&spec_text(head, sweep, extra))
}

pub fn parse(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_toml(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

pub fn spec_text(head: &str, sweep: &str, extra: &str) -> String {
    format!(
        r#"name = "t"
master_seed = 11
{head}

[scenario]
n_tx = 2
n_rx = 2
n_range_bins = 32
n_pulses = 8
waveform_len = 16
group_len = 2

[scene]
model = "joint_group"
level = 4

{sweep}

[sbl]
max_iter = 30
{extra}
"#
    )
}

pub fn snr_spec(trials: usize, algorithms: &str, values: &str) -> ExperimentSpec {
    spec_with(
        &format!("trials = {trials}\nalgorithms = [{algorithms}]"),
        &format!("[sweep]\nname = \"snr\"\nvalues = [{values}]"),
        "",
    )
}

pub fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}
