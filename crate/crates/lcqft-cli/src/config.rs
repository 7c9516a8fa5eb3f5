//! Plain sectioned key-value configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (also ';')
//! [suite-name]
//! key = value        # value is always numeric
//! ```
//!
//! Keys live under the section opened above them; a key before any section
//! header is an error. Unknown sections and unknown keys are rejected with
//! the offending line number so typos fail loudly instead of silently
//! running defaults. Every suite accepts `tol_scale`, a multiplier applied
//! to all of its check tolerances (useful for injecting a deliberately
//! failing tolerance when exercising the exit-code contract).

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ConfigError {}

/// Registry of suites and the keys each accepts. `tol_scale` is implicit.
pub(crate) const KEYS: &[(&str, &[&str])] = &[
    ("clifford", &["trials"]),
    ("spin", &["samples"]),
    ("geometry", &["points"]),
    ("semt-var", &["grid", "bumps"]),
    ("ccr", &["nmax", "oscillator_levels"]),
    ("car", &["modes", "trials"]),
    ("minkowski", &["gaussians", "nodes"]),
    ("lattice-kg", &["nt", "nx", "slices"]),
    ("cones", &["samples", "product_samples", "hadamard_samples"]),
    ("wf-scan", &["magnitudes"]),
    ("deform", &["max_halvings"]),
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<(String, String), f64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut values = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find(['#', ';']) {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            if let Some(inner) = stripped.strip_prefix('[') {
                let name = inner.strip_suffix(']').ok_or_else(|| ConfigError {
                    line,
                    msg: format!("unterminated section header {stripped:?}"),
                })?;
                let name = name.trim();
                let known = KEYS.iter().find(|(s, _)| *s == name);
                let (canon, _) = known.ok_or_else(|| ConfigError {
                    line,
                    msg: format!("unknown suite section {name:?}"),
                })?;
                section = Some(canon);
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError {
                line,
                msg: format!("expected `key = value`, got {stripped:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let suite = section.ok_or_else(|| ConfigError {
                line,
                msg: format!("key {key:?} appears before any [suite] section"),
            })?;
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == suite)
                .map(|(_, k)| *k)
                .expect("section was validated on entry");
            if key != "tol_scale" && !allowed.contains(&key) {
                return Err(ConfigError {
                    line,
                    msg: format!(
                        "unknown key {key:?} for suite {suite:?} (accepted: {}, tol_scale)",
                        allowed.join(", ")
                    ),
                });
            }
            let num: f64 = value.parse().map_err(|_| ConfigError {
                line,
                msg: format!("value for {key:?} is not a number: {value:?}"),
            })?;
            if !num.is_finite() {
                return Err(ConfigError {
                    line,
                    msg: format!("value for {key:?} must be finite, got {value}"),
                });
            }
            values.insert((suite.to_string(), key.to_string()), num);
        }
        Ok(Config { values })
    }

    fn get(&self, suite: &str, key: &str) -> Option<f64> {
        self.values.get(&(suite.to_string(), key.to_string())).copied()
    }

    /// Positive integer knob with a floor; non-integral values are floored.
    pub fn count(&self, suite: &str, key: &str, default: usize, min: usize) -> usize {
        match self.get(suite, key) {
            Some(v) if v >= min as f64 => v as usize,
            Some(_) => min,
            None => default,
        }
    }

    /// Tolerance multiplier for a suite; defaults to 1.
    pub fn tol_scale(&self, suite: &str) -> f64 {
        match self.get(suite, "tol_scale") {
            Some(v) if v > 0.0 => v,
            Some(_) => 1.0,
            None => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_values() {
        let cfg = Config::parse(
            "# top comment\n[clifford]\ntrials = 7 ; inline\n\n[cones]\nsamples = 250\ntol_scale = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.count("clifford", "trials", 10, 1), 7);
        assert_eq!(cfg.count("cones", "samples", 2000, 10), 250);
        assert_eq!(cfg.tol_scale("cones"), 0.5);
        assert_eq!(cfg.tol_scale("clifford"), 1.0);
        assert_eq!(cfg.count("spin", "samples", 200, 1), 200);
    }

    #[test]
    fn rejects_unknown_suite_with_line_number() {
        let err = Config::parse("[clifford]\ntrials = 2\n[nope]\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.msg.contains("unknown suite"));
    }

    #[test]
    fn rejects_unknown_key_and_bad_number() {
        let err = Config::parse("[spin]\nsample = 3\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.msg.contains("unknown key"));

        let err = Config::parse("[spin]\nsamples = many\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.msg.contains("not a number"));
    }

    #[test]
    fn rejects_keys_outside_sections_and_broken_headers() {
        let err = Config::parse("samples = 3\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = Config::parse("[spin\nsamples = 3\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn counts_clamp_to_minimum() {
        let cfg = Config::parse("[ccr]\nnmax = 0\n").unwrap();
        assert_eq!(cfg.count("ccr", "nmax", 6, 2), 2);
    }
}
