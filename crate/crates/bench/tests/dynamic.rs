mod common;

use cofbl::sbl::HyperparamState;
use cofbl::scene::SparsityKind;
use cofbl::signal::RadarConfig;
use cofbl_bench::dynamic::{phase_summaries, revive};
use cofbl_bench::run::execute;
use common::spec_with;

#[test]
fn revive_raises_pruned_entries_to_the_floor() {
    let layout = RadarConfig::with_dims(1, 1, 4, 2, 4).layout();
    let s = HyperparamState::from_update(SparsityKind::Row, layout, vec![2.0, 0.0, 1e-9, 0.5], 7);
    let r = revive(&s, 1e-3);
    assert_eq!(r.psi, vec![2.0, 2e-3, 2e-3, 0.5]);
}

#[test]
fn tracking_run_has_one_row_per_slot() {
    let spec = spec_with(
        "kind = \"dynamic\"\ntrials = 2\nalgorithms = [\"CoFBL\"]",
        "[sweep]\nname = \"time_slots\"\n\n[dynamic]\nn_slots = 24\nchanges = [{ slot = 13, fraction = -0.25 }]\niterations_per_slot = 5\nfirst_slot_iterations = 20",
        "",
    );
    let out = execute(&spec, 1).unwrap();
    assert!(out.ok(), "{:?}", out.failures);
    assert_eq!(out.rows.len(), 48);
    let phases = phase_summaries(&out.table, "CoFBL", spec.dynamic.as_ref().unwrap());
    assert_eq!(phases.len(), 2);
    assert_eq!(
        (phases[0].first, phases[0].last, phases[1].first, phases[1].last),
        (1, 12, 13, 24)
    );
    assert!(phases.iter().all(|p| p.steady.is_finite() && p.after_ten.is_finite()));
}
