use std::path::Path;

use super::aemb::{EmbeddingFile, MatrixKind};
use crate::error::{Error, Result};

/// Parses a CSV matrix whose header row is `c0,c1,...`.
pub fn parse_csv_matrix(text: &str, kind: MatrixKind) -> Result<EmbeddingFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(&e, 1))?.clone();
    for (i, h) in headers.iter().enumerate() {
        if h != format!("c{i}") {
            return Err(Error::Parse {
                line: 1,
                message: format!("header column {i} is {h:?}, expected \"c{i}\""),
            });
        }
    }
    let cols = headers.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e, rows as u64 + 2))?;
        let line = record.position().map_or(rows as u64 + 2, |p| p.line());
        for field in record.iter() {
            let value: f32 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: {field:?}"),
            })?;
            data.push(value);
        }
        rows += 1;
    }
    EmbeddingFile::new(kind, rows, cols, data)
}

fn csv_error(err: &csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

/// Loads an AEMB file, or a CSV matrix when the extension is `.csv`.
pub fn load_matrix(path: impl AsRef<Path>, kind: MatrixKind) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        parse_csv_matrix(&text, kind)
    } else {
        super::aemb::read_embedding_file(path)
    }
}
