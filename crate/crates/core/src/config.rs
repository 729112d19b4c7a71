//! Flat `key = value` configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (anything after `#` is ignored)
//! key = value
//! list_key = [1, 2.5, 3]
//! ```
//!
//! Keys are `[A-Za-z0-9_.]+` and must be unique. Lists are bracketed and
//! comma-separated. Consumers take the keys they understand; [`KeyValues::finish`]
//! rejects whatever is left so typos surface with a line number.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(config_err(line, format!("invalid key `{key}`")));
            }
            let entry = Entry { value: value.trim().to_string(), line };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(config_err(line, format!("duplicate key `{key}` (first set on line {})", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Line on which `key` was set.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    /// Removes and returns the raw value and its line.
    pub fn take_raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key).map(|e| (e.value, e.line))
    }

    pub fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some((value, line)) => value
                .parse::<T>()
                .map(Some)
                .map_err(|e| config_err(line, format!("`{key}`: cannot parse `{value}`: {e}"))),
        }
    }

    pub fn required<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.optional(key)?.ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    pub fn optional_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some((value, line)) => parse_list(&value).map_err(|m| config_err(line, format!("`{key}`: {m}"))).map(Some),
        }
    }

    /// Keys of the form `prefix.N`, sorted by `N`.
    pub fn indexed_keys(&self, prefix: &str) -> Result<Vec<String>> {
        let mut found = Vec::new();
        for (key, entry) in &self.entries {
            if let Some(rest) = key.strip_prefix(prefix).and_then(|r| r.strip_prefix('.')) {
                let idx: usize =
                    rest.parse().map_err(|_| config_err(entry.line, format!("`{key}`: index must be an integer")))?;
                found.push((idx, key.clone()));
            }
        }
        found.sort();
        Ok(found.into_iter().map(|(_, k)| k).collect())
    }

    /// Remaining keys in sorted order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on the first (by line) key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, entry)) => Err(config_err(entry.line, format!("unknown key `{key}`"))),
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: Display,
{
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| format!("expected a bracketed list, got `{value}`"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|item| item.trim().parse::<T>().map_err(|e| format!("cannot parse `{}`: {e}", item.trim())))
        .collect()
}

/// Renders entries in the same grammar; round-trips through [`KeyValues::parse`].
pub fn render<K: AsRef<str>, V: AsRef<str>>(entries: &[(K, V)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(k.as_ref());
        out.push_str(" = ");
        out.push_str(v.as_ref());
        out.push('\n');
    }
    out
}

/// Formats a list value.
pub fn render_list<T: Display>(items: &[T]) -> String {
    let parts: Vec<String> = items.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}
