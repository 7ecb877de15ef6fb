use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Schema {
        path: PathBuf,
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] fbc_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }

    /// One JSON object for stderr.
    pub fn diagnostic(&self) -> String {
        let v = match self {
            CliError::Schema {
                path,
                field,
                line,
                column,
                message,
            } => json!({
                "error": "schema",
                "file": path.display().to_string(),
                "field": field,
                "line": line,
                "column": column,
                "message": message,
            }),
            CliError::Core(e) => json!({
                "error": if e.is_numeric() { "numeric" } else { "domain" },
                "message": e.to_string(),
            }),
            CliError::Usage(m) => json!({ "error": "usage", "message": m }),
            CliError::Io { path, source } => json!({
                "error": "io",
                "file": path.display().to_string(),
                "message": source.to_string(),
            }),
        };
        v.to_string()
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Schema {
            path: path.into(),
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })
}

/// Writes to `path` through a temporary sibling and a rename, or to stdout.
pub fn write_output(path: Option<&Path>, body: &[u8]) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        return out.write_all(body).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        });
    };
    let err = |source| CliError::Io {
        path: path.into(),
        source,
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let written = fs::File::create(&tmp).and_then(|mut f| {
        f.write_all(body)?;
        f.sync_all()
    });
    if let Err(e) = written.and_then(|_| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(err(e));
    }
    Ok(())
}
