use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Version of every JSON document the CLI emits.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Audit {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

impl Audit {
    /// Passes when `value < bound`.
    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Audit { name: name.into(), passed: value < bound, value, bound }
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Audit { name: name.into(), passed, value: if passed { 1.0 } else { 0.0 }, bound: 1.0 }
    }
}

pub enum Body {
    Json(Value),
    Csv(String),
}

pub struct Artifact {
    pub body: Body,
    pub passed: bool,
}

impl Artifact {
    /// Wraps `payload` with the schema version, the command name and the audits.
    pub fn json(command: &str, payload: Value, audits: Vec<Audit>) -> Result<Self> {
        let passed = audits.iter().all(|a| a.passed);
        let mut doc = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "audits": audits,
            "passed": passed,
        });
        let obj = doc.as_object_mut().expect("object literal");
        match payload {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("result".into(), other);
            }
        }
        Ok(Artifact { body: Body::Json(doc), passed })
    }

    pub fn csv(text: String) -> Self {
        Artifact { body: Body::Csv(text), passed: true }
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let text = match &self.body {
            Body::Json(v) => serde_json::to_string_pretty(v)? + "\n",
            Body::Csv(s) => s.clone(),
        };
        match path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                std::io::stdout().lock().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}
