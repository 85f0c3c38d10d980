//! Resolution of settings from flags, a key=value file and defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use hermite_lab::io::read_config;

use crate::Failure;

pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let file = match path {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        Ok(Settings { file, used: BTreeSet::new(), resolved: BTreeMap::new() })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, Failure> {
        self.used.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::config(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure> {
        let file = self.from_file(key)?;
        let v = flag.or(file);
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, Failure> {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<Vec<T>>,
        default: Vec<T>,
    ) -> Result<Vec<T>, Failure> {
        self.used.insert(key.to_string());
        let v = match (flag, self.file.get(key)) {
            (Some(f), _) => f,
            (None, Some(text)) => text
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Failure::config(format!("config key {key}: cannot parse {s:?}"))))
                .collect::<Result<Vec<T>, Failure>>()?,
            (None, None) => default,
        };
        let shown: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        self.resolved.insert(key.to_string(), shown.join(","));
        Ok(v)
    }

    /// Rejects keys in the file that no setting consumed.
    pub fn finish(&self) -> Result<BTreeMap<String, String>, Failure> {
        if let Some(k) = self.file.keys().find(|k| !self.used.contains(*k)) {
            return Err(Failure::config(format!("unknown config key {k:?}")));
        }
        Ok(self.resolved.clone())
    }
}
