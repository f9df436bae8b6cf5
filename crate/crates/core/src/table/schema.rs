use std::collections::{BTreeSet, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{AttributeClass, ValueKind};
use crate::error::{Error, Result};

pub const DEFAULT_MISSING_TOKENS: [&str; 3] = ["", "NA", "Unknown"];

/// Token written for missing cells unless the cell carries its own marker.
pub const CANONICAL_MISSING: &str = "Unknown";

pub fn default_missing_tokens() -> BTreeSet<String> {
    DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect()
}

fn default_class() -> AttributeClass {
    AttributeClass::Insensitive
}

/// One attribute of a [`Schema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub kind: ValueKind,
    #[serde(default = "default_class")]
    pub class: AttributeClass,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: BTreeSet<String>,
    /// Ordered category labels, present on columns produced by binning and
    /// period generalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl Field {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> Self {
        Field {
            name: name.into(),
            kind,
            class: AttributeClass::Insensitive,
            missing_tokens: default_missing_tokens(),
            levels: None,
        }
    }

    pub fn with_class(mut self, class: AttributeClass) -> Self {
        self.class = class;
        self
    }

    pub fn is_missing_token(&self, raw: &str) -> bool {
        self.missing_tokens.contains(raw)
    }

    pub fn missing_render(&self) -> &str {
        if self.missing_tokens.contains(CANONICAL_MISSING) {
            CANONICAL_MISSING
        } else {
            self.missing_tokens.iter().next().map(String::as_str).unwrap_or(CANONICAL_MISSING)
        }
    }

    /// Ordered categorical columns (binned, period-generalized) support
    /// comparisons by level position.
    pub fn is_ordered(&self) -> bool {
        self.kind.is_ordered() || (self.kind == ValueKind::Categorical && self.levels.is_some())
    }
}

/// Ordered attribute list. Serialized as a bare JSON array of fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    fields: Vec<Field>,
}

impl Schema {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &fields {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::DuplicateColumn(f.name.clone()));
            }
            if f.missing_tokens.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "attribute {:?} needs at least one missing token",
                    f.name
                )));
            }
        }
        Ok(Schema { fields })
    }

    pub fn from_json_reader(reader: impl Read) -> Result<Self> {
        let fields: Vec<Field> = serde_json::from_reader(reader)?;
        Schema::new(fields)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Result<&Field> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }

    pub(crate) fn fields_mut(&mut self) -> &mut Vec<Field> {
        &mut self.fields
    }

    pub fn with_class(&self, name: &str, class: AttributeClass) -> Result<Schema> {
        let idx = self.index_of(name).ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        let mut out = self.clone();
        out.fields[idx].class = class;
        Ok(out)
    }

    pub fn direct_identifiers(&self) -> Vec<&str> {
        self.fields
            .iter()
            .filter(|f| f.class == AttributeClass::DirectIdentifier)
            .map(|f| f.name.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_car_json_defaults() {
        let json = r#"[{"name":"Age","kind":"Numeric","class":"QuasiIdentifier"},
                       {"name":"Gender","kind":"Categorical","missing_tokens":["?"]}]"#;
        let schema = Schema::from_json_reader(json.as_bytes()).unwrap();
        let age = schema.field("Age").unwrap();
        assert_eq!(age.class, AttributeClass::QuasiIdentifier);
        assert!(age.is_missing_token("Unknown") && age.is_missing_token("") && age.is_missing_token("NA"));
        let gender = schema.field("Gender").unwrap();
        assert_eq!(gender.class, AttributeClass::Insensitive);
        assert_eq!(gender.missing_render(), "?");
    }

    #[test]
    fn duplicate_names_rejected() {
        let fields = vec![Field::new("A", ValueKind::Numeric), Field::new("A", ValueKind::Date)];
        assert!(matches!(Schema::new(fields), Err(Error::DuplicateColumn(n)) if n == "A"));
    }
}
