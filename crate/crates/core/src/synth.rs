//! Seeded generator of synthetic hospital-admission microdata.
//!
//! Subset sizes are drawn by exact quota, so a configured fraction always
//! yields `round(fraction * n)` rows. Base records are built in small groups
//! that share age band, gender and outcome, which keeps those attributes
//! k-anonymous (k >= 3) once age is coarsened to five-year bands.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::value::{format_date, parse_date, SECONDS_PER_DAY};
use crate::table::{AttributeClass, Column, Dataset, Field, Schema, ValueKind};

pub const PATHOLOGY_FLAGS: [&str; 9] =
    ["CANC", "Cerebrovascular", "Diabetes", "Kidney", "Liver", "Lung", "Heart", "Smoking", "Obesity"];

const AGE_BAND: i64 = 5;
const MAX_AGE: i64 = 100;

mod date_str {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(days: &[i32; 2], s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&super::format_date(days[0]))?;
        t.serialize_element(&super::format_date(days[1]))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[i32; 2], D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        let parse = |s: &str| super::parse_date(s).ok_or_else(|| serde::de::Error::custom(format!("bad date {s:?}")));
        Ok([parse(&a)?, parse(&b)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgeConfig {
    /// Target mean over all records, newborns included.
    pub mean: f64,
    pub sd: f64,
}

impl Default for AgeConfig {
    fn default() -> Self {
        AgeConfig { mean: 67.0, sd: 17.0 }
    }
}

/// Fractions of `n`; each becomes an exact count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Fractions {
    pub death: f64,
    pub nursing_home: f64,
    pub other: f64,
    pub intensive_care: f64,
    pub newborn: f64,
    pub reincident: f64,
}

impl Default for Fractions {
    fn default() -> Self {
        Fractions {
            death: 368.0 / 1716.0,
            nursing_home: 41.0 / 1716.0,
            other: 86.0 / 1716.0,
            intensive_care: 529.0 / 1716.0,
            newborn: 12.0 / 1716.0,
            reincident: 31.0 / 1716.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n: usize,
    #[serde(with = "date_str")]
    pub date_window: [i32; 2],
    pub age: AgeConfig,
    pub fractions: Fractions,
    pub pathology_prevalence: BTreeMap<String, f64>,
    /// Share of missing cells per column.
    pub unknown_rates: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let prevalence = [
            ("CANC", 0.12),
            ("Cerebrovascular", 0.08),
            ("Diabetes", 0.25),
            ("Kidney", 0.14),
            ("Liver", 0.04),
            ("Lung", 0.15),
            ("Heart", 0.30),
            ("Smoking", 0.10),
            ("Obesity", 0.18),
        ];
        let mut unknown: BTreeMap<String, f64> = [
            ("CloseContactRecordId", 0.92),
            ("DateOfOnset", 0.75),
            ("PlaceOfInfection", 0.85),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
        for flag in PATHOLOGY_FLAGS {
            unknown.insert(flag.to_string(), 0.05);
        }
        SyntheticConfig {
            n: 1716,
            date_window: [parse_date("2020/03/01").expect("valid"), parse_date("2021/01/31").expect("valid")],
            age: AgeConfig::default(),
            fractions: Fractions::default(),
            pathology_prevalence: prevalence.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            unknown_rates: unknown,
            seed: 42,
        }
    }
}

/// Counts implied by a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotas {
    pub death: usize,
    pub nursing_home: usize,
    pub other: usize,
    pub intensive_care: usize,
    pub newborn: usize,
    pub reincident: usize,
}

fn quota(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

impl SyntheticConfig {
    pub fn quotas(&self) -> Quotas {
        let f = &self.fractions;
        Quotas {
            death: quota(f.death, self.n),
            nursing_home: quota(f.nursing_home, self.n),
            other: quota(f.other, self.n),
            intensive_care: quota(f.intensive_care, self.n),
            newborn: quota(f.newborn, self.n),
            reincident: quota(f.reincident, self.n),
        }
    }

    pub fn unknown_rate(&self, column: &str) -> f64 {
        self.unknown_rates.get(column).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.fractions;
        let all = [f.death, f.nursing_home, f.other, f.intensive_care, f.newborn, f.reincident];
        let rates = self.unknown_rates.values().chain(self.pathology_prevalence.values());
        if all.iter().chain(rates).any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("fractions and rates must lie in [0, 1]".into()));
        }
        if let Some(flag) = self.pathology_prevalence.keys().find(|k| !PATHOLOGY_FLAGS.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!("unknown pathology flag {flag}")));
        }
        if self.date_window[1] < self.date_window[0] {
            return Err(Error::InvalidParameter("date window ends before it starts".into()));
        }
        if !(self.age.sd >= 0.0) || !(0.0..=MAX_AGE as f64).contains(&self.age.mean) {
            return Err(Error::InvalidParameter("age mean must lie in [0, 100] and sd be non-negative".into()));
        }
        // newborns and re-incidents are home outcomes, so all exclusive shares add up
        let exclusive = f.death + f.nursing_home + f.other + f.newborn + f.reincident;
        if exclusive > 1.0 + 1e-12 {
            return Err(Error::Infeasible(format!("exclusive outcome fractions sum to {exclusive}")));
        }
        let q = self.quotas();
        let taken = q.death + q.nursing_home + q.other + q.newborn + q.reincident;
        if taken > self.n {
            return Err(Error::Infeasible(format!("quotas need {taken} rows but n = {}", self.n)));
        }
        let adult_home = self.n - taken;
        if q.reincident > 0 && adult_home == 0 {
            return Err(Error::Infeasible("re-incidents need at least one adult home record".into()));
        }
        if q.intensive_care > self.n {
            return Err(Error::Infeasible("intensive care quota exceeds n".into()));
        }
        Ok(())
    }
}

struct Record {
    id: u64,
    age: i64,
    age_days: i64,
    gender: &'static str,
    outcome: &'static str,
    positive: i64,
    hospitalised: i32,
    discharged: i32,
    onset: i32,
    intensive: bool,
    place: u32,
    contact: u64,
    flags: [bool; 9],
}

/// Column layout of generated data.
pub fn schema() -> Schema {
    use AttributeClass::*;
    use ValueKind::*;
    let mut fields = vec![
        Field::new("RecordId", Identifier).with_class(DirectIdentifier),
        Field::new("Age", Numeric).with_class(QuasiIdentifier),
        Field::new("AgeDay", Numeric).with_class(QuasiIdentifier),
        Field::new("AgeMonth", Numeric).with_class(QuasiIdentifier),
        Field::new("CloseContactRecordId", Identifier).with_class(DirectIdentifier),
        Field::new("DateOfFirstPositiveLabResult", DateTime).with_class(QuasiIdentifier),
        Field::new("DateOfHospitalisation", Date),
        Field::new("DateOfDischarge", Date),
        Field::new("DateOfOnset", Date),
        Field::new("Gender", Categorical).with_class(QuasiIdentifier),
        Field::new("Hospitalisation", Categorical),
        Field::new("IntensiveCare", Categorical).with_class(Sensitive),
        Field::new("Outcome", Categorical).with_class(QuasiIdentifier),
        Field::new("PlaceOfInfection", Categorical),
    ];
    fields.extend(PATHOLOGY_FLAGS.iter().map(|f| Field::new(*f, Categorical).with_class(Sensitive)));
    Schema::new(fields).expect("static schema")
}

/// Splits `count` into group sizes between 3 and 6 (a single smaller group
/// when `count` < 3).
fn group_sizes(count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::new();
    let mut left = count;
    while left > 0 {
        let size = match left {
            0..=6 => left,
            7 | 8 => left - 4,
            _ => rng.random_range(3..=6).min(left - 3),
        };
        out.push(size);
        left -= size;
    }
    out
}

fn pick(rng: &mut ChaCha8Rng, n: usize, k: usize) -> BTreeSet<usize> {
    rand::seq::index::sample(rng, n, k.min(n)).into_iter().collect()
}

/// Generates a dataset. Deterministic in `config` (seed included).
pub fn generate(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let schema = schema();
    if config.n == 0 {
        return Ok(Dataset::empty(schema));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let q = config.quotas();
    let base = config.n - q.reincident;
    let [start, end] = config.date_window;

    // adults carry the whole mean once newborns are accounted for
    let adult_mean = config.age.mean * config.n as f64 / (config.n - q.newborn).max(1) as f64;
    let age_dist = Normal::new(adult_mean, config.age.sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let stay = Exp::new(1.0 / 11.0).expect("positive rate");

    let mut ids: Vec<u64> = (0..base as u64).map(|i| 100_000 + i).collect();
    ids.shuffle(&mut rng);

    let adult_home = base - q.death - q.nursing_home - q.other - q.newborn;
    let cohorts = [("D", q.death), ("N", q.nursing_home), ("O", q.other), ("H", adult_home)];
    let mut records: Vec<Record> = Vec::with_capacity(config.n);

    let push = |rng: &mut ChaCha8Rng, records: &mut Vec<Record>, age: i64, gender: &'static str, outcome: &'static str| {
        let hospitalised = rng.random_range(start..=end.max(start + 3) - 3).min(end);
        let los = (stay.sample(rng) as i32 + 1).min(end - hospitalised).max(0);
        let positive_day = (hospitalised + rng.random_range(-10..=3)).clamp(start, end);
        let age_days = age * 365 + rng.random_range(0..365);
        let id = ids[records.len()];
        records.push(Record {
            id,
            age,
            age_days,
            gender,
            outcome,
            positive: positive_day as i64 * SECONDS_PER_DAY + rng.random_range(0..SECONDS_PER_DAY),
            hospitalised,
            discharged: hospitalised + los,
            onset: (positive_day - rng.random_range(0..=7)).max(start),
            intensive: false,
            place: rng.random_range(1..=20),
            contact: rng.random_range(200_000..900_000),
            flags: [false; 9],
        });
    };

    for gender_group in group_sizes(q.newborn, &mut rng) {
        let gender = if rng.random_bool(0.5) { "F" } else { "M" };
        for _ in 0..gender_group {
            push(&mut rng, &mut records, 0, gender, "H");
        }
    }
    for (outcome, count) in cohorts {
        for size in group_sizes(count, &mut rng) {
            let gender = if rng.random_bool(0.5) { "F" } else { "M" };
            let centre = (age_dist.sample(&mut rng).round() as i64).clamp(1, MAX_AGE);
            let band = centre - centre % AGE_BAND;
            for _ in 0..size {
                let age = rng.random_range(band..band + AGE_BAND).clamp(1, MAX_AGE);
                push(&mut rng, &mut records, age, gender, outcome);
            }
        }
    }

    // re-incidents: a second, later admission of an adult home record
    let candidates: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].outcome == "H" && records[i].age > 0 && records[i].discharged < end)
        .collect();
    if candidates.len() < q.reincident {
        return Err(Error::Infeasible("not enough admissions leave room for a re-incident".into()));
    }
    for i in pick(&mut rng, candidates.len(), q.reincident) {
        let first = &records[candidates[i]];
        let hospitalised = first.discharged + rng.random_range(1..=10).min(end - first.discharged);
        let los = (stay.sample(&mut rng) as i32 + 1).min(end - hospitalised).max(0);
        let again = Record {
            hospitalised,
            discharged: hospitalised + los,
            outcome: "H",
            ..*first
        };
        records.push(again);
    }

    for i in pick(&mut rng, records.len(), q.intensive_care) {
        records[i].intensive = true;
    }
    for (f, flag) in PATHOLOGY_FLAGS.iter().enumerate() {
        let share = config.pathology_prevalence.get(*flag).copied().unwrap_or(0.0);
        for i in pick(&mut rng, records.len(), quota(share, records.len())) {
            records[i].flags[f] = true;
        }
    }
    records.shuffle(&mut rng);

    let n = records.len();
    let mut unknown = |name: &str| pick(&mut rng, n, quota(config.unknown_rate(name), n));
    let hide = |mask: &BTreeSet<usize>, i: usize| !mask.contains(&i);

    let text = |f: &dyn Fn(&Record) -> String, mask: &BTreeSet<usize>| {
        Column::text(records.iter().enumerate().map(|(i, r)| hide(mask, i).then(|| f(r))).collect())
    };
    let number = |f: &dyn Fn(&Record) -> f64, mask: &BTreeSet<usize>| {
        Column::numbers(records.iter().enumerate().map(|(i, r)| hide(mask, i).then(|| f(r))).collect())
    };
    let day = |f: &dyn Fn(&Record) -> i32, mask: &BTreeSet<usize>| {
        Column::days(records.iter().enumerate().map(|(i, r)| hide(mask, i).then(|| f(r))).collect())
    };
    let yn = |b: bool| if b { "Y".to_string() } else { "N".to_string() };

    let masks: Vec<BTreeSet<usize>> = schema.names().map(&mut unknown).collect();
    let mut columns = vec![
        text(&|r| r.id.to_string(), &masks[0]),
        number(&|r| r.age as f64, &masks[1]),
        number(&|r| r.age_days as f64, &masks[2]),
        number(&|r| (r.age_days * 12 / 365) as f64, &masks[3]),
        text(&|r| r.contact.to_string(), &masks[4]),
        Column::instants(records.iter().enumerate().map(|(i, r)| hide(&masks[5], i).then_some(r.positive)).collect()),
        day(&|r| r.hospitalised, &masks[6]),
        day(&|r| r.discharged, &masks[7]),
        day(&|r| r.onset, &masks[8]),
        text(&|r| r.gender.to_string(), &masks[9]),
        text(&|_| "Y".to_string(), &masks[10]),
        text(&|r| yn(r.intensive), &masks[11]),
        text(&|r| r.outcome.to_string(), &masks[12]),
        text(&|r| format!("P{:02}", r.place), &masks[13]),
    ];
    for f in 0..PATHOLOGY_FLAGS.len() {
        columns.push(text(&|r| yn(r.flags[f]), &masks[14 + f]));
    }
    Dataset::new(schema, columns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealismReport {
    pub checks: Vec<Check>,
}

impl RealismReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn count_eq(ds: &Dataset, column: &str, value: &str) -> Option<usize> {
    let idx = ds.column_index(column).ok()?;
    Some((0..ds.row_count()).filter(|&r| ds.render(r, idx) == value).count())
}

/// Recomputes quota counts, mean age, date ordering and unknown rates.
/// Only reports; never fails.
pub fn validate_realism(ds: &Dataset, config: &SyntheticConfig) -> RealismReport {
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.to_string(), passed, detail });
    };
    let q = config.quotas();
    let n = ds.row_count();
    check("row count", n == config.n, format!("{n} rows, expected {}", config.n));

    for (name, column, value, expected) in [
        ("death quota", "Outcome", "D", q.death),
        ("nursing home quota", "Outcome", "N", q.nursing_home),
        ("intensive care quota", "IntensiveCare", "Y", q.intensive_care),
        ("newborn quota", "Age", "0", q.newborn),
    ] {
        match count_eq(ds, column, value) {
            Some(found) => check(name, found == expected, format!("{found} rows, expected {expected}")),
            None => check(name, false, format!("column {column} absent")),
        }
    }
    if let Ok(idx) = ds.column_index("RecordId") {
        let distinct: BTreeSet<_> = (0..n).map(|r| ds.render(r, idx)).collect();
        let repeats = n - distinct.len();
        check("re-incident quota", repeats == q.reincident, format!("{repeats} repeated ids, expected {}", q.reincident));
    }

    match ds.column("Age") {
        Ok((_, col)) => {
            let ages: Vec<f64> = (0..n)
                .filter_map(|r| match col.cell(r) {
                    crate::table::Cell::Number(v) => Some(v),
                    _ => None,
                })
                .collect();
            let mean = ages.iter().sum::<f64>() / ages.len().max(1) as f64;
            let ok = n == 0 || (mean - config.age.mean).abs() <= 2.0;
            check("mean age", ok, format!("{mean:.2}, target {} +/- 2", config.age.mean));
        }
        Err(_) => check("mean age", false, "column Age absent".into()),
    }

    let days = |name| ds.day_values(name).ok();
    let positive: Option<Vec<Option<i32>>> = ds.column("DateOfFirstPositiveLabResult").ok().map(|(_, c)| {
        (0..n)
            .map(|r| match c.cell(r) {
                crate::table::Cell::Instant(s) => Some(s.div_euclid(SECONDS_PER_DAY) as i32),
                crate::table::Cell::Day(d) => Some(d),
                _ => None,
            })
            .collect()
    });
    match (days("DateOfHospitalisation"), days("DateOfDischarge"), positive) {
        (Some(h), Some(d), Some(p)) => {
            let [start, end] = config.date_window;
            let bad = (0..n)
                .filter(|&r| {
                    let in_window = |v: Option<i32>| v.is_none_or(|v| (start..=end).contains(&v));
                    let order = match (h[r], d[r]) {
                        (Some(h), Some(d)) => h <= d,
                        _ => true,
                    };
                    let after_test = match (h[r], p[r]) {
                        (Some(h), Some(p)) => h >= p - 14,
                        _ => true,
                    };
                    !(order && after_test && in_window(h[r]) && in_window(d[r]))
                })
                .count();
            check("date ordering", bad == 0, format!("{bad} rows violate ordering or window"));
        }
        _ => check("date ordering", false, "date columns absent".into()),
    }

    for (i, field) in ds.schema().fields().iter().enumerate() {
        let rate = config.unknown_rate(&field.name);
        let missing = ds.columns()[i].missing_count();
        let found = if n == 0 { 0.0 } else { missing as f64 / n as f64 };
        if rate == 0.0 {
            check(&format!("unknown rate {}", field.name), missing == 0, format!("{missing} missing cells"));
        } else {
            let ok = (found - rate).abs() <= 0.02;
            check(&format!("unknown rate {}", field.name), ok, format!("{:.2}%, target {:.2}%", found * 100.0, rate * 100.0));
        }
    }
    RealismReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_sizes_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for count in 3..200 {
            let sizes = group_sizes(count, &mut rng);
            assert_eq!(sizes.iter().sum::<usize>(), count);
            assert!(sizes.iter().all(|s| (3..=6).contains(s)), "{count}: {sizes:?}");
        }
        assert_eq!(group_sizes(2, &mut rng), [2]);
        assert!(group_sizes(0, &mut rng).is_empty());
    }

    #[test]
    fn default_quotas() {
        let q = SyntheticConfig::default().quotas();
        assert_eq!((q.death, q.nursing_home, q.intensive_care, q.newborn, q.reincident), (368, 41, 529, 12, 31));
    }

    #[test]
    fn infeasible_fractions() {
        let mut config = SyntheticConfig::default();
        config.fractions.death = 0.9;
        config.fractions.other = 0.2;
        assert!(matches!(generate(&config), Err(Error::Infeasible(_))));
        config.fractions.death = 1.5;
        assert!(matches!(generate(&config), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn config_json_round_trip() {
        let config = SyntheticConfig::default();
        let json = serde_json::to_string(&config).unwrap();
        assert!(json.contains("\"2020/03/01\""));
        assert_eq!(serde_json::from_str::<SyntheticConfig>(&json).unwrap(), config);
        let partial: SyntheticConfig = serde_json::from_str(r#"{"n": 10, "seed": 3}"#).unwrap();
        assert_eq!(partial.n, 10);
        assert_eq!(partial.date_window, config.date_window);
    }
}
