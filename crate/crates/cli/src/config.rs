//! Flat key-value configuration with `[section]` headers.
//!
//! Accessors mark keys as consumed; after an experiment has pulled everything
//! it understands, [`Config::finish`] rejects any leftover (unknown) key with
//! a line-numbered diagnostic.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Entry = (String, usize); // value, line number

pub struct Config {
    entries: BTreeMap<(String, String), Entry>,
    used: RefCell<Vec<(String, String)>>,
    pub raw: String,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::from("");
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if section.is_empty() {
                    return Err(ConfigError(format!(
                        "line {}: empty section name",
                        lineno + 1
                    )));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError(format!("line {}: empty key", lineno + 1)));
            }
            let slot = (section.clone(), key.clone());
            if entries.contains_key(&slot) {
                return Err(ConfigError(format!(
                    "line {}: duplicate key `{key}` in section [{section}]",
                    lineno + 1
                )));
            }
            entries.insert(slot, (value, lineno + 1));
        }
        Ok(Self {
            entries,
            used: RefCell::new(Vec::new()),
            raw: text.to_string(),
        })
    }

    fn raw_get(&self, section: &str, key: &str) -> Option<&Entry> {
        let slot = (section.to_string(), key.to_string());
        let hit = self.entries.get(&slot);
        if hit.is_some() {
            self.used.borrow_mut().push(slot);
        }
        hit
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<String> {
        self.raw_get(section, key).map(|(v, _)| v.clone())
    }

    pub fn require_str(&self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.get_str(section, key).ok_or_else(|| {
            ConfigError(format!(
                "missing required key `{key}` in section [{section}]"
            ))
        })
    }

    fn parse_value<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        kind: &str,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw_get(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| {
                ConfigError(format!(
                    "line {line}: key `{key}` in [{section}]: `{v}` is not a {kind}"
                ))
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_value(section, key, "number")
    }

    pub fn require_f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(section, key)?.ok_or_else(|| {
            ConfigError(format!(
                "missing required key `{key}` in section [{section}]"
            ))
        })
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_value(section, key, "count")
    }

    pub fn require_usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        self.get_usize(section, key)?.ok_or_else(|| {
            ConfigError(format!(
                "missing required key `{key}` in section [{section}]"
            ))
        })
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        self.parse_value(section, key, "integer")
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        self.parse_value(section, key, "bool (true/false)")
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw_get(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        ConfigError(format!(
                            "line {line}: key `{key}` in [{section}]: `{}` is not a number",
                            s.trim()
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    pub fn get_usize_list(
        &self,
        section: &str,
        key: &str,
    ) -> Result<Option<Vec<usize>>, ConfigError> {
        match self.raw_get(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().map_err(|_| {
                        ConfigError(format!(
                            "line {line}: key `{key}` in [{section}]: `{}` is not a count",
                            s.trim()
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    /// Reject any key that no accessor consumed.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        let mut leftover = String::new();
        for ((section, key), (_, line)) in &self.entries {
            if !used.iter().any(|(s, k)| s == section && k == key) {
                let _ = write!(leftover, "\n  line {line}: [{section}] {key}");
            }
        }
        if leftover.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(format!("unknown keys:{leftover}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_unknown() {
        let text = "# demo\n[model]\nomega = 1.0\n[run]\nseed = 7\nstray = 3\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.require_f64("model", "omega").unwrap(), 1.0);
        assert_eq!(cfg.get_u64("run", "seed").unwrap(), Some(7));
        let err = cfg.finish().unwrap_err();
        assert!(err.0.contains("stray"), "{err}");
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let cfg = Config::parse("[a]\nx = notanumber\n").unwrap();
        let err = cfg.get_f64("a", "x").unwrap_err();
        assert!(err.0.contains("line 2"), "{err}");
        assert!(Config::parse("[a]\nx = 1\nx = 2\n").is_err());
        assert!(Config::parse("bare line\n").is_err());
    }
}
