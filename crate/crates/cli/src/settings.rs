//! Layered key=value settings: flags over config file over defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

pub fn normalize_key(k: &str) -> String {
    k.trim()
        .trim_start_matches("--")
        .to_ascii_lowercase()
        .replace('-', "_")
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key=value", i + 1))
            })?;
            let k = normalize_key(k);
            if k.is_empty() {
                return Err(CliError::Config(format!(
                    "config line {}: empty key",
                    i + 1
                )));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize_key(key), value.into());
    }

    /// Entries of `over` replace ours.
    pub fn overlay(&mut self, over: &Settings) {
        for (k, v) in &over.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(|s| s.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.str(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::Config(format!("bad value '{s}' for {key}: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Config(format!("missing required setting '{key}'")))
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        match self.str(key).map(|s| s.to_ascii_lowercase()) {
            None => Ok(false),
            Some(s) => match s.as_str() {
                "" | "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(CliError::Config(format!("bad boolean '{s}' for {key}"))),
            },
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(s) = self.str(key) else {
            return Ok(None);
        };
        let v = s
            .split(',')
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<T>()
                    .map_err(|e| CliError::Config(format!("bad list entry '{p}' for {key}: {e}")))
            })
            .collect::<CliResult<Vec<T>>>()?;
        if v.is_empty() {
            return Err(CliError::Config(format!("{key} must not be empty")));
        }
        Ok(Some(v))
    }

    /// Integer grid given as a list or `start:step:end`.
    pub fn usize_grid(&self, key: &str) -> CliResult<Option<Vec<usize>>> {
        match self.str(key) {
            Some(s) if s.contains(':') => {
                let p: Vec<&str> = s.split(':').collect();
                let num = |x: &str| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|e| CliError::Config(format!("bad range '{s}' for {key}: {e}")))
                };
                if p.len() != 3 {
                    return Err(CliError::Config(format!(
                        "range for {key} must be start:step:end"
                    )));
                }
                let (a, st, b) = (num(p[0])?, num(p[1])?, num(p[2])?);
                if st == 0 || b < a {
                    return Err(CliError::Config(format!("empty range '{s}' for {key}")));
                }
                Ok(Some((a..=b).step_by(st).collect()))
            }
            _ => self.list(key),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.values.keys()
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}
