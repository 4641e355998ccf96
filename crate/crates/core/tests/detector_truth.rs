mod common;

use common::snapshots::{boolean_snapshots, value_snapshots};

#[test]
fn trigger_truth_table() {
    let snaps = boolean_snapshots();
    assert!(snaps.len() >= 30);
    let wrong: Vec<&str> = snaps.iter().filter(|s| s.expected != s.actual).map(|s| s.name).collect();
    assert!(wrong.is_empty(), "disagreeing snapshots: {wrong:?}");
}

#[test]
fn ttc_and_dmin_closed_forms() {
    for v in value_snapshots() {
        assert!(v.agrees(1e-9), "{}: expected {}, got {}", v.name, v.expected, v.actual);
    }
}
