use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{AttributeClass, Schema};

/// The attacker's assumed background knowledge: an ordered set of
/// quasi-identifier names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scenario {
    qis: Vec<String>,
}

impl Scenario {
    pub fn new<S: Into<String>>(qis: impl IntoIterator<Item = S>) -> Result<Self> {
        let qis: Vec<String> = qis.into_iter().map(Into::into).collect();
        let s = Scenario { qis };
        s.check_shape()?;
        Ok(s)
    }

    fn check_shape(&self) -> Result<()> {
        if self.qis.is_empty() {
            return Err(Error::InvalidScenario("scenario needs at least one attribute".into()));
        }
        let mut seen = HashSet::new();
        for q in &self.qis {
            if !seen.insert(q) {
                return Err(Error::InvalidScenario(format!("attribute {q:?} listed twice")));
            }
        }
        Ok(())
    }

    pub fn qis(&self) -> &[String] {
        &self.qis
    }

    pub fn len(&self) -> usize {
        self.qis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qis.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.qis.iter().any(|q| q == name)
    }

    /// Names of scenario attributes absent from `schema`.
    pub fn missing_from(&self, schema: &Schema) -> Vec<String> {
        self.qis.iter().filter(|q| schema.index_of(q).is_none()).cloned().collect()
    }

    /// Non-empty, no duplicates, every attribute present and classified
    /// QuasiIdentifier.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        self.check_shape()?;
        for q in &self.qis {
            let field = schema.field(q)?;
            if field.class != AttributeClass::QuasiIdentifier {
                return Err(Error::Classification {
                    column: q.clone(),
                    expected: AttributeClass::QuasiIdentifier,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.qis.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Field, ValueKind};

    #[test]
    fn shape_rules() {
        assert!(Scenario::new(Vec::<String>::new()).is_err());
        assert!(Scenario::new(["Age", "Age"]).is_err());
        let s: Scenario = serde_json::from_str(r#"["Age","Gender"]"#).unwrap();
        assert_eq!(s.to_string(), "Age, Gender");
    }

    #[test]
    fn requires_quasi_identifier_class() {
        let schema = Schema::new(vec![
            Field::new("Age", ValueKind::Numeric).with_class(AttributeClass::QuasiIdentifier),
            Field::new("HIV", ValueKind::Categorical).with_class(AttributeClass::Sensitive),
        ])
        .unwrap();
        assert!(Scenario::new(["Age"]).unwrap().validate(&schema).is_ok());
        assert!(matches!(
            Scenario::new(["Age", "HIV"]).unwrap().validate(&schema),
            Err(Error::Classification { .. })
        ));
        assert!(matches!(
            Scenario::new(["Zip"]).unwrap().validate(&schema),
            Err(Error::UnknownColumn(_))
        ));
    }
}
