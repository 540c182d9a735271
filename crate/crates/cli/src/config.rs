use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

/// Reads a command's JSON config file, or the defaults when none is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Copies every flag that was given on the command line over the config.
macro_rules! overlay {
    ($cfg:ident, $args:ident; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() {
            $cfg.$field = v;
        })*
    };
    ($cfg:ident, $args:ident; opt: $($field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() {
            $cfg.$field = Some(v);
        })*
    };
}
pub(crate) use overlay;

pub fn required<'a, T>(value: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::usage(format!("missing {flag} (flag or config file)")))
}
