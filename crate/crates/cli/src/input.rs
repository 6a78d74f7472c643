//! Embedding and corpus file readers.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use seqot::embed::EmbeddingTable;

use crate::error::{CliError, Result};

/// Splits on runs of whitespace.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_owned).collect()
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Lines of a corpus file. A trailing newline does not create an extra line.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_to_string(path)?.lines().map(str::to_owned).collect())
}

/// Reads a whitespace-separated text embedding file.
///
/// Each line is a token followed by `d` floats. An optional first line of
/// exactly two integers is taken as a `V d` header and checked against the
/// body. Blank lines are ignored.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&read_to_string(path)?, path)
}

pub fn parse_embeddings(text: &str, path: &Path) -> Result<EmbeddingTable> {
    let err = |line: usize, message: String| CliError::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut header: Option<(usize, usize, usize)> = None;
    let mut tokens = Vec::new();
    let mut values = Vec::new();
    let mut dim: Option<(usize, usize)> = None;
    let mut seen = HashSet::new();

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if tokens.is_empty() && header.is_none() && fields.len() == 2 {
            if let (Ok(v), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                header = Some((v, d, line_no));
                continue;
            }
        }
        let (token, rest) = (fields[0], &fields[1..]);
        if rest.is_empty() {
            return Err(err(line_no, format!("token {token:?} has no vector")));
        }
        match dim {
            None => dim = Some((rest.len(), line_no)),
            Some((d, first)) if d != rest.len() => {
                return Err(err(
                    line_no,
                    format!("expected {d} values (as on line {first}), found {}", rest.len()),
                ))
            }
            Some(_) => {}
        }
        if !seen.insert(token.to_owned()) {
            return Err(err(line_no, format!("duplicate token {token:?}")));
        }
        for field in rest {
            let x: f64 = field
                .parse()
                .map_err(|_| err(line_no, format!("cannot parse {field:?} as a number")))?;
            if !x.is_finite() {
                return Err(err(line_no, format!("non-finite value {field:?}")));
            }
            values.push(x);
        }
        tokens.push(token.to_owned());
    }

    let Some((d, _)) = dim else {
        return Err(err(0, "no embedding rows".into()));
    };
    if let Some((v, hd, line)) = header {
        if hd != d {
            return Err(err(line, format!("header declares dimension {hd}, rows have {d}")));
        }
        if v != tokens.len() {
            return Err(err(line, format!("header declares {v} tokens, file has {}", tokens.len())));
        }
    }
    let vectors = Array2::from_shape_vec((tokens.len(), d), values).expect("row lengths were checked");
    Ok(EmbeddingTable::new(tokens, vectors)?)
}
