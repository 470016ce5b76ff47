//! Golden-file regression tests for the serialized recursion tower.
//!
//! The files under `tests/golden/` pin the canonical JSON form of the tower
//! at orders 0 through 3.  Any change to the recursion output, the term
//! order, or the serialization schema shows up as a diff here.  To refresh
//! the files after an intentional change, run
//! `REGEN_GOLDEN=1 cargo test -p cmc-core --test golden`.

use std::fs;
use std::path::PathBuf;

use cmc_core::killing::KillingTower;

fn golden_path(order: usize) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("tower_{order}.json"))
}

fn render(t: &KillingTower) -> String {
    let mut s = serde_json::to_string_pretty(&t.to_json()).expect("serializable");
    s.push('\n');
    s
}

#[test]
fn tower_serialization_matches_golden_files() {
    let regen = std::env::var_os("REGEN_GOLDEN").is_some();
    for order in 0..=3 {
        let tower = KillingTower::new(order).expect("tower builds");
        let rendered = render(&tower);
        let path = golden_path(order);
        if regen {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, &rendered).unwrap();
            continue;
        }
        let stored = fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
        assert_eq!(
            rendered,
            stored,
            "order-{order} tower drifted from its golden serialization"
        );
    }
    assert!(!regen, "golden files regenerated; rerun without REGEN_GOLDEN");
}

#[test]
fn golden_files_roundtrip_through_the_parser() {
    for order in 0..=3 {
        let stored = fs::read_to_string(golden_path(order)).expect("golden file present");
        let value: serde_json::Value = serde_json::from_str(&stored).unwrap();
        let tower = KillingTower::from_json(&value).expect("golden tower parses");
        assert_eq!(tower.order(), order);
        assert_eq!(render(&tower), stored, "parse→serialize is the identity");
    }
}
