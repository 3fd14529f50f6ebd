//! Line-oriented `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may repeat;
//! [`Config::get`] returns the last occurrence and [`Config::get_all`] every
//! occurrence in file order.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: Vec<(String, String)>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                let Some((k, v)) = trimmed.split_once('=') else {
                    return Err(Error::Parse { offset, message: format!("expected key = value, got `{trimmed}`") });
                };
                let key = k.trim();
                if key.is_empty() {
                    return Err(Error::Parse { offset, message: "empty key".into() });
                }
                entries.push((key.to_string(), v.trim().to_string()));
            }
            offset += line.len();
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        if let Some(entry) = self.entries.iter_mut().rev().find(|(k, _)| *k == key) {
            entry.1 = value;
        } else {
            self.entries.push((key, value));
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Typed lookup; `Ok(None)` when the key is absent.
    pub fn parse_opt<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| Error::Config(format!("invalid value `{raw}` for `{key}`"))),
        }
    }

    pub fn parse_or<V: FromStr>(&self, key: &str, default: V) -> Result<V> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    /// Comma- or whitespace-separated list.
    pub fn parse_list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => parse_list(raw).map(Some).map_err(|_| Error::Config(format!("invalid list `{raw}` for `{key}`"))),
        }
    }

    /// Entries under `prefix.`, with the prefix stripped.
    pub fn section(&self, prefix: &str) -> Config {
        let dotted = format!("{prefix}.");
        Config {
            entries: self
                .entries
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&dotted).map(|s| (s.to_string(), v.clone())))
                .collect(),
        }
    }
}

pub fn parse_list<V: FromStr>(raw: &str) -> std::result::Result<Vec<V>, V::Err> {
    raw.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect()
}

impl std::fmt::Display for Config {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        f.write_str(&s)
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
