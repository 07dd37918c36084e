//! `key = value` configuration files. Keys are the long flag names without the
//! leading dashes (`tau-l`, `delta-r`, `out`, ...); underscores are accepted in
//! place of dashes. Flags given on the command line win over the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalise(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got {raw:?}", i + 1))?;
            let key = normalise(k);
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("line {}: duplicate key {key:?}", i + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// The flag value if given, else the file's value for `key`, parsed.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key {key:?}: cannot parse {v:?}: {e}")),
        }
    }

    pub fn require<T>(&self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.resolve(key, flag)?
            .ok_or_else(|| anyhow!("missing --{key} (give the flag or set it in the config file)"))
    }

    pub fn path(&self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| self.values.get(key).map(PathBuf::from))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_underscores() {
        let c = ConfigFile::parse("# slice\n\ntau_l = 1.5  # inline\ndelta-r=0.5\n").unwrap();
        assert_eq!(c.keys().collect::<Vec<_>>(), ["delta-r", "tau-l"]);
        assert_eq!(c.resolve::<f64>("tau-l", None).unwrap(), Some(1.5));
        assert_eq!(c.resolve("tau-l", Some(2.0)).unwrap(), Some(2.0));
        assert_eq!(c.resolve::<f64>("tau-r", None).unwrap(), None);
    }

    #[test]
    fn malformed_input() {
        assert!(ConfigFile::parse("tau-l 1.5").is_err());
        assert!(ConfigFile::parse("a = 1\na = 2").is_err());
        let c = ConfigFile::parse("tau-l = abc").unwrap();
        assert!(c.resolve::<f64>("tau-l", None).is_err());
        assert!(c.require::<f64>("delta-l", None).unwrap_err().to_string().contains("--delta-l"));
    }
}
