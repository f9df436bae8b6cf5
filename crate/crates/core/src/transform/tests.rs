use super::*;
use crate::table::{load_csv, Field, Schema, ValueKind};

fn numbers(name: &str, vals: &[Option<f64>]) -> Dataset {
    let schema = Schema::new(vec![Field::new(name, ValueKind::Numeric)]).unwrap();
    let mut csv = format!("{name}\n");
    for v in vals {
        match v {
            Some(x) => csv.push_str(&format!("{x}\n")),
            None => csv.push_str("NA\n"),
        }
    }
    load_csv(csv.as_bytes(), Some(&schema)).unwrap()
}

fn rendered(ds: &Dataset, column: &str) -> Vec<String> {
    let c = ds.column_index(column).unwrap();
    (0..ds.row_count()).map(|r| ds.render(r, c).into_owned()).collect()
}

#[test]
fn fixed_width_bins() {
    let ds = numbers("Age", &[Some(67.0), Some(65.0), Some(69.9), Some(70.0), None]);
    let out = bin_fixed_width(&ds, "Age", 5.0, 0.0).unwrap();
    assert_eq!(rendered(&out, "Age"), ["[65, 70)", "[65, 70)", "[65, 70)", "[70, 75)", "NA"]);
}

#[test]
fn quantile_cuts_use_nearest_rank() {
    let ds = numbers("X", &(1..=8).map(|v| Some(v as f64)).collect::<Vec<_>>());
    let applied = apply(&ds, &TransformStep::BinQuantiles { column: "X".into(), q: 4 }).unwrap();
    match &applied.resolution {
        Resolution::Cuts { cuts, .. } => assert_eq!(cuts, &[2.0, 4.0, 6.0]),
        other => panic!("{other:?}"),
    }
    assert_eq!(rendered(&applied.dataset, "X"), [
        "[1, 2)", "[2, 4)", "[2, 4)", "[4, 6)", "[4, 6)", "[6, 8]", "[6, 8]", "[6, 8]"
    ]);
}

#[test]
fn quantiles_need_enough_distinct_values() {
    let ds = numbers("X", &[Some(1.0), Some(1.0), Some(2.0)]);
    assert!(bin_quantiles(&ds, "X", 4).is_err());
    assert!(bin_quantiles(&ds, "X", 1).is_err());
}

#[test]
fn custom_ranges_close_last_bin() {
    let ds = numbers("X", &[Some(0.0), Some(10.0), Some(20.0), Some(30.0)]);
    let out = bin_custom_ranges(&ds, "X", &[0.0, 10.0, 30.0]).unwrap();
    assert_eq!(rendered(&out, "X"), ["[0, 10)", "[10, 30]", "[10, 30]", "[10, 30]"]);
    assert!(bin_custom_ranges(&ds, "X", &[0.0, 10.0, 20.0]).is_err());
    assert!(bin_custom_ranges(&ds, "X", &[0.0, 10.0, 10.0, 30.0]).is_err());
}

#[test]
fn date_periods_from_anchor() {
    let schema = Schema::new(vec![Field::new("D", ValueKind::Date)]).unwrap();
    let ds = load_csv("D\n2020/03/15\n2020/03/10\n2020/03/17\n".as_bytes(), Some(&schema)).unwrap();
    let anchor = DateAnchor::Day(crate::table::value::parse_date("2020/03/10").unwrap());
    let out = generalize_date_period(&ds, "D", 7, anchor).unwrap();
    assert_eq!(rendered(&out, "D"), [
        "2020/03/10\u{2013}2020/03/16",
        "2020/03/10\u{2013}2020/03/16",
        "2020/03/17\u{2013}2020/03/23"
    ]);
    assert!(generalize_date_period(&ds, "D", 0, DateAnchor::DatasetMin).is_err());
}

#[test]
fn duplicate_rows_keep_earliest() {
    let csv = "Id,When,V\n1,2020/01/05,a\n2,2020/01/01,b\n1,2020/01/02,c\n1,2020/01/02,d\n";
    let ds = load_csv(csv.as_bytes(), None).unwrap();
    let applied = apply(&ds, &TransformStep::SuppressDuplicateRows {
        key_columns: vec!["Id".into()],
        order_column: "When".into(),
    })
    .unwrap();
    assert_eq!(rendered(&applied.dataset, "V"), ["b", "c"]);
    assert_eq!(applied.entry.affected_rows, 2);
    assert_eq!(applied.entry.kind, StepKind::RowSuppression);
}

#[test]
fn suppressed_cells_count_as_missing() {
    let csv = "Age,AgeMonth\n0,3\n5,60\n";
    let ds = load_csv(csv.as_bytes(), None).unwrap();
    let p: Predicate = "Age:>=:1".parse().unwrap();
    let out = suppress_cells(&ds, "AgeMonth", &p, "*").unwrap();
    assert_eq!(rendered(&out, "AgeMonth"), ["3", "*"]);
    assert_eq!(out.column("AgeMonth").unwrap().1.missing_count(), 1);
    assert_eq!(ds.column("AgeMonth").unwrap().1.missing_count(), 0);
}

#[test]
fn recode_merges_levels() {
    let ds = load_csv("O\nH\nN\nO\nD\n".as_bytes(), None).unwrap();
    let mapping = [("N", "O")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let out = recode_categories(&ds, "O", &mapping).unwrap();
    assert_eq!(rendered(&out, "O"), ["H", "O", "O", "D"]);
}

#[test]
fn truncation_drops_time() {
    let ds = load_csv("T\n2020/04/01 13:45:10\n2020/04/02 00:00:00\n".as_bytes(), None).unwrap();
    let out = truncate_datetime(&ds, "T").unwrap();
    assert_eq!(out.schema().field("T").unwrap().kind, ValueKind::Date);
    assert_eq!(rendered(&out, "T"), ["2020/04/01", "2020/04/02"]);
}

#[test]
fn noise_is_bounded_and_seeded() {
    let vals: Vec<Option<f64>> = (0..500).map(|v| Some(v as f64)).collect();
    let ds = numbers("X", &vals);
    let a = add_uniform_integer_noise(&ds, "X", -3, 3, 42).unwrap();
    let b = add_uniform_integer_noise(&ds, "X", -3, 3, 42).unwrap();
    let c = add_uniform_integer_noise(&ds, "X", -3, 3, 43).unwrap();
    assert_eq!(rendered(&a, "X"), rendered(&b, "X"));
    assert_ne!(rendered(&a, "X"), rendered(&c, "X"));
    let mut seen = std::collections::BTreeSet::new();
    for r in 0..500 {
        let d: f64 = a.render(r, 0).parse::<f64>().unwrap() - r as f64;
        assert!((-3.0..=3.0).contains(&d) && d.fract() == 0.0);
        seen.insert(d as i64);
    }
    assert_eq!(seen.len(), 7);
    assert!(add_uniform_integer_noise(&ds, "X", 3, -3, 1).is_err());
}

#[test]
fn replay_reproduces_output() {
    let csv = "Id,Age,T\n1,34,2020/04/01 10:00:00\n2,67,2020/04/03 11:00:00\n1,35,2020/04/02 12:00:00\n";
    let ds = load_csv(csv.as_bytes(), None).unwrap();
    let steps = vec![
        TransformStep::SuppressDuplicateRows { key_columns: vec!["Id".into()], order_column: "T".into() },
        TransformStep::TruncateDateTime { column: "T".into() },
        TransformStep::BinFixedWidth { column: "Age".into(), width: 5.0, origin: 0.0 },
        TransformStep::AddUniformIntegerNoise { column: "T".into(), lo: -2, hi: 2, seed: Some(7) },
    ];
    let (out, prov) = apply_all(&ds, &steps).unwrap();
    assert_eq!(prov.replay(&ds).unwrap(), out);
    assert_eq!(prov.perturbed_columns().into_iter().collect::<Vec<_>>(), ["T"]);
    let json = serde_json::to_string(&prov).unwrap();
    let back: Provenance = serde_json::from_str(&json).unwrap();
    assert_eq!(back, prov);
}

#[test]
fn equal_frequency_respects_min_width() {
    let vals: Vec<Option<f64>> = (0..100).map(|v| Some((v / 10) as f64)).collect();
    let ds = numbers("X", &vals);
    let edges = equal_frequency_edges(&ds, "X", 5, 3.0).unwrap();
    assert_eq!(edges.first(), Some(&0.0));
    assert_eq!(edges.last(), Some(&9.0));
    assert!(edges.windows(2).all(|w| w[1] - w[0] >= 3.0), "{edges:?}");
    bin_custom_ranges(&ds, "X", &edges).unwrap();
}
