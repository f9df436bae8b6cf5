use deid_core::risk::{k_anonymity_risk, Scenario};
use deid_core::synth::{generate, validate_realism, SyntheticConfig};
use deid_core::table::{to_csv_string, Cell};
use deid_core::transform::{bin_fixed_width, recode_categories, suppress_duplicate_rows};

fn scenario(qis: &[&str]) -> Scenario {
    Scenario::new(qis.iter().copied()).unwrap()
}

#[test]
fn defaults_pass_realism_checks() {
    let config = SyntheticConfig::default();
    let ds = generate(&config).unwrap();
    assert_eq!(ds.row_count(), 1716);
    assert_eq!(ds.schema().len(), 23);
    let report = validate_realism(&ds, &config);
    let failures: Vec<_> = report.failures().collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn generation_is_deterministic() {
    let config = SyntheticConfig { seed: 7, ..SyntheticConfig::default() };
    let a = to_csv_string(&generate(&config).unwrap());
    let b = to_csv_string(&generate(&config).unwrap());
    assert_eq!(a, b);
    let other = to_csv_string(&generate(&SyntheticConfig { seed: 8, ..config }).unwrap());
    assert_ne!(a, other);
}

#[test]
fn zero_rows() {
    let ds = generate(&SyntheticConfig { n: 0, ..SyntheticConfig::default() }).unwrap();
    assert!(ds.is_empty());
    assert_eq!(ds.schema().len(), 23);
}

#[test]
fn zero_unknown_rates_mean_no_missing_cells() {
    let config = SyntheticConfig { unknown_rates: Default::default(), ..SyntheticConfig::default() };
    let ds = generate(&config).unwrap();
    assert_eq!(ds.columns().iter().map(|c| c.missing_count()).sum::<usize>(), 0);
    assert!(validate_realism(&ds, &config).passed());
}

#[test]
fn discharge_before_admission_fails_ordering() {
    let csv = "RecordId,Age,DateOfFirstPositiveLabResult,DateOfHospitalisation,DateOfDischarge\n\
               1,60,2020/04/01 10:00:00,2020/04/03,2020/04/02\n";
    let ds = deid_core::table::load_csv(csv.as_bytes(), None).unwrap();
    let config = SyntheticConfig { n: 1, ..SyntheticConfig::default() };
    let report = validate_realism(&ds, &config);
    let ordering = report.checks.iter().find(|c| c.name == "date ordering").unwrap();
    assert!(!ordering.passed);
}

#[test]
fn reincidents_repeat_the_first_admission_details() {
    let ds = generate(&SyntheticConfig::default()).unwrap();
    let rows = ds.to_rows();
    let mut by_id: std::collections::BTreeMap<&str, Vec<&Vec<String>>> = Default::default();
    for row in &rows {
        by_id.entry(row[0].as_str()).or_default().push(row);
    }
    let repeats: Vec<_> = by_id.values().filter(|v| v.len() > 1).collect();
    assert_eq!(repeats.len(), 31);
    for pair in repeats {
        assert_eq!(pair.len(), 2);
        assert_eq!(pair[0][1..6], pair[1][1..6]);
        assert_ne!(pair[0][6], pair[1][6]);
    }
}

#[test]
fn timestamps_have_second_resolution() {
    let ds = generate(&SyntheticConfig::default()).unwrap();
    let (_, col) = ds.column("DateOfFirstPositiveLabResult").unwrap();
    let off_minute = (0..ds.row_count()).filter(|&r| matches!(col.cell(r), Cell::Instant(s) if s % 60 != 0)).count();
    assert!(off_minute > ds.row_count() / 2);
}

#[test]
fn coarse_outcome_scenario_is_three_anonymous_after_deduplication() {
    let ds = generate(&SyntheticConfig::default()).unwrap();
    let ds = suppress_duplicate_rows(&ds, &["RecordId"], "DateOfHospitalisation").unwrap();
    assert_eq!(ds.row_count(), 1685);
    let ds = bin_fixed_width(&ds, "Age", 5.0, 0.0).unwrap();
    let mapping = [("H", "Recovered"), ("N", "Recovered")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let ds = recode_categories(&ds, "Outcome", &mapping).unwrap();
    let r = k_anonymity_risk(&ds, &scenario(&["Age", "Gender", "Outcome"])).unwrap();
    assert!(r.min_k >= 3, "min_k {}", r.min_k);
}

#[test]
fn timestamps_dominate_baseline_risk() {
    let ds = generate(&SyntheticConfig::default()).unwrap();
    let coarse = k_anonymity_risk(&ds, &scenario(&["Age", "Gender"])).unwrap();
    let fine = k_anonymity_risk(&ds, &scenario(&["Age", "DateOfFirstPositiveLabResult", "Gender"])).unwrap();
    assert!(coarse.risk_percent <= 10.0, "{}", coarse.risk_percent);
    assert!(fine.risk_percent >= 95.0, "{}", fine.risk_percent);
}
