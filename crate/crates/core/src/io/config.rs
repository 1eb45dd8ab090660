//! `key = value` configuration files mirroring command-line flags.
//!
//! ```text
//! # comment
//! steps = 5000
//! mode = early
//! ```
//!
//! Keys are flag names without the leading dashes; a bare key is a switch.

use super::{content_lines, FormatError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub entries: Vec<(String, Option<String>)>,
}

impl ConfigFile {
    pub fn parse(s: &str) -> Result<Self, FormatError> {
        let mut entries: Vec<(String, Option<String>)> = Vec::new();
        for (ln, l) in content_lines(s) {
            let (key, value) = match l.split_once('=') {
                Some((k, v)) => (k.trim(), Some(v.trim())),
                None => (l, None),
            };
            let valid = !key.is_empty()
                && !key.starts_with('-')
                && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !valid {
                return Err(FormatError::parse(ln, format!("invalid key '{key}'")));
            }
            if value == Some("") {
                return Err(FormatError::parse(ln, format!("missing value for '{key}'")));
            }
            let key = key.replace('_', "-");
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(FormatError::parse(ln, format!("duplicate key '{key}'")));
            }
            entries.push((key, value.map(str::to_string)));
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_deref())
    }

    /// Entries as command-line arguments, skipping keys already present in
    /// `existing` so explicit flags take precedence.
    pub fn to_args(&self, existing: &[String]) -> Vec<String> {
        let given = |key: &str| {
            let flag = format!("--{key}");
            existing
                .iter()
                .any(|a| *a == flag || a.strip_prefix(&flag).is_some_and(|r| r.starts_with('=')))
        };
        let mut out = Vec::new();
        for (k, v) in &self.entries {
            if given(k) {
                continue;
            }
            out.push(format!("--{k}"));
            if let Some(v) = v {
                out.push(v.clone());
            }
        }
        out
    }
}
