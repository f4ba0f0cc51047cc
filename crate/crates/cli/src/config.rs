//! Flat `key = value` configuration files. Command-line flags override
//! file values, which override built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::error::CliError;

/// Every key any subcommand understands.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "beta1",
    "beta2",
    "beta3",
    "bins",
    "cg_max_iter",
    "cg_tol",
    "components",
    "dt",
    "k_s",
    "k_t",
    "max_df_ratio",
    "max_sweeps",
    "min_df",
    "normalize_rows",
    "rank",
    "ridge",
    "seed",
    "start",
    "theta_as",
    "theta_time",
    "theta_vp",
    "threshold",
    "tol",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    origin: String,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(ConfigFile::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                ConfigFile::parse(&p.display().to_string(), &text)
            }
        }
    }

    pub fn parse(origin: &str, text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("{origin}:{}: expected `key = value`", i + 1))
            })?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "{origin}:{}: unknown key `{key}`",
                    i + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile {
            values,
            origin: origin.to_string(),
        })
    }
}

/// Resolves parameters and records every resolved value for the report
/// header.
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    pub echo: BTreeMap<String, Value>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Resolver {
            file,
            echo: BTreeMap::new(),
        }
    }

    fn file_value<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.file.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::usage(format!(
                    "{}: bad value `{raw}` for `{key}`: {e}",
                    self.file.origin
                ))
            }),
        }
    }

    /// Flag, then file, then `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.echo.insert(key.to_string(), value.clone().into());
        Ok(value)
    }

    /// Flag, then file; missing is a usage error.
    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => self.file_value(key)?.ok_or_else(|| {
                CliError::usage(format!(
                    "missing required parameter `--{}`",
                    key.replace('_', "-")
                ))
            })?,
        };
        self.echo.insert(key.to_string(), value.clone().into());
        Ok(value)
    }

    /// Flag, then file, else absent.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &value {
            self.echo.insert(key.to_string(), v.clone().into());
        }
        Ok(value)
    }

    pub fn echo_value(&mut self, key: &str, value: impl Into<Value>) {
        self.echo.insert(key.to_string(), value.into());
    }
}

/// Rejects values outside a closed or half-open interval before any work.
pub fn check_range(
    key: &str,
    value: f64,
    lo: f64,
    hi: f64,
    lo_inclusive: bool,
) -> Result<(), CliError> {
    let lower_ok = if lo_inclusive {
        value >= lo
    } else {
        value > lo
    };
    if !(lower_ok && value <= hi) {
        let open = if lo_inclusive { '[' } else { '(' };
        return Err(CliError::usage(format!(
            "`{key}` = {value} must lie in {open}{lo}, {hi}]"
        )));
    }
    Ok(())
}
