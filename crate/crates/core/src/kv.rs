//! `key = value` text files used for environment, economics and checkpoint
//! metadata. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(line_no, format!("expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(line_no, "empty key"));
            }
            if entries
                .insert(key.to_string(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
            }
        }
        Ok(KvFile { entries })
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::parse(*line, format!("bad value `{v}` for `{key}`"))),
        }
    }

    /// Comma or whitespace separated list of numbers.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(*line, format!("bad number `{s}` in `{key}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|(l, _)| *l).unwrap_or(0)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Ordered writer; floats use the shortest round-trip representation.
#[derive(Debug, Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn str(&mut self, key: &str, value: &str) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn num<T: std::fmt::Debug>(&mut self, key: &str, value: T) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value:?}");
        self
    }

    pub fn finish(&mut self) -> String {
        std::mem::take(&mut self.out)
    }
}
