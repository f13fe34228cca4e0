//! Output routing: stdout by default, `--out` for a file.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub fn write(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| {
            CliError::failure(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

pub fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    text
}
