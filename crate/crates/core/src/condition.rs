//! Recording-condition keys and the filter expressions that select them.
//!
//! A filter is a comma-separated conjunction of `field=value` clauses, where
//! a value may list alternatives with `|`:
//!
//! ```text
//! session=S4, language=c, microphone=M1|M2
//! ```
//!
//! Fields: `speaker`, `session`, `microphone` (`mic`), `language` (`lang`),
//! `role`, `index`. An empty expression matches every key.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Train,
    Test,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
        }
    }
}

impl core::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Role::Train),
            "test" => Ok(Role::Test),
            other => Err(Error::Filter(alloc::format!("unknown role `{other}`"))),
        }
    }
}

impl core::fmt::Display for Role {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConditionKey {
    pub speaker: String,
    pub session: String,
    pub microphone: String,
    pub language: String,
    pub role: Role,
    pub index: u32,
}

impl ConditionKey {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("speaker", &self.speaker),
            ("session", &self.session),
            ("microphone", &self.microphone),
            ("language", &self.language),
        ] {
            if value.trim().is_empty() {
                return Err(Error::Filter(alloc::format!("empty {name} field")));
            }
        }
        Ok(())
    }

    fn field(&self, field: Field) -> String {
        match field {
            Field::Speaker => self.speaker.clone(),
            Field::Session => self.session.clone(),
            Field::Microphone => self.microphone.clone(),
            Field::Language => self.language.clone(),
            Field::Role => self.role.as_str().to_string(),
            Field::Index => self.index.to_string(),
        }
    }
}

impl core::fmt::Display for ConditionKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}/{}{}{}/{}#{}",
            self.speaker, self.session, self.language, self.microphone, self.role, self.index
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Speaker,
    Session,
    Microphone,
    Language,
    Role,
    Index,
}

impl Field {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "speaker" | "spk" => Field::Speaker,
            "session" => Field::Session,
            "microphone" | "mic" => Field::Microphone,
            "language" | "lang" => Field::Language,
            "role" => Field::Role,
            "index" => Field::Index,
            other => return Err(Error::Filter(alloc::format!("unknown field `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Clause {
    field: Field,
    values: Vec<String>,
}

/// Conjunction of `field ∈ {values}` clauses over [`ConditionKey`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConditionFilter {
    source: String,
    clauses: Vec<Clause>,
}

impl ConditionFilter {
    pub fn parse(expr: &str) -> Result<Self> {
        let mut clauses = Vec::new();
        for part in expr.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, values) = part
                .split_once('=')
                .ok_or_else(|| Error::Filter(alloc::format!("expected field=value in `{part}`")))?;
            let field = Field::parse(name)?;
            let values: Vec<String> = values
                .split('|')
                .map(|v| v.trim().to_string())
                .collect();
            if values.iter().any(String::is_empty) {
                return Err(Error::Filter(alloc::format!("empty value in `{part}`")));
            }
            if field == Field::Role {
                for v in &values {
                    v.parse::<Role>()?;
                }
            }
            clauses.push(Clause { field, values });
        }
        Ok(Self {
            source: expr.trim().to_string(),
            clauses,
        })
    }

    pub fn matches(&self, key: &ConditionKey) -> bool {
        self.clauses.iter().all(|c| {
            let value = key.field(c.field);
            c.values.iter().any(|v| {
                if c.field == Field::Role {
                    v.eq_ignore_ascii_case(&value)
                } else {
                    *v == value
                }
            })
        })
    }

    pub fn constrains_role(&self) -> bool {
        self.clauses.iter().any(|c| c.field == Field::Role)
    }

    /// Adds `role=<role>` unless the expression already names a role.
    pub fn with_default_role(mut self, role: Role) -> Self {
        if !self.constrains_role() {
            self.clauses.push(Clause {
                field: Field::Role,
                values: alloc::vec![role.as_str().to_string()],
            });
        }
        self
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}
