use ntkcorr_core::selftest::run_norm_battery;

#[test]
fn norm_battery_passes_over_fifty_seeded_cases() {
    let outcomes = run_norm_battery(56, 2024, None);
    assert!(outcomes.len() >= 6);
    for o in &outcomes {
        println!(
            "{:<32} cases={:<3} failures={} worst={:.3e} {}",
            o.name, o.cases, o.failures, o.worst, o.detail
        );
    }
    for o in &outcomes {
        assert!(o.cases >= 50, "{}", o.name);
        assert!(o.passed(), "{}: {}", o.name, o.detail);
    }
}
