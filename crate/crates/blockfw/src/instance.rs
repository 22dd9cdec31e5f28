//! Text instance files.
//!
//! ```text
//! MSTQP 1
//! l m seed epsilon alpha
//! q_11 q_12 ... q_1n
//! ...
//! q_n1 q_n2 ... q_nn
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use blockfw_core::problems::GeneratorMeta;
use blockfw_core::{BlockLayout, QuadraticProblem};
use thiserror::Error;

pub const MAGIC: &str = "MSTQP";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    RowLength { line: usize, expected: usize, found: usize },
    #[error("line {line}: missing matrix row")]
    MissingRow { line: usize },
    #[error("line {line}: unexpected content after the last matrix row")]
    TrailingContent { line: usize },
    #[error("line {line}: cannot parse {token:?} as a number")]
    Number { line: usize, token: String },
    #[error("instance needs equal block sizes to be saved")]
    NonUniformLayout,
    #[error(transparent)]
    Core(#[from] blockfw_core::Error),
}

/// `f64` with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_text(problem: &QuadraticProblem) -> Result<String, InstanceError> {
    let layout = problem.layout();
    let l = layout.uniform_block_size().ok_or(InstanceError::NonUniformLayout)?;
    let m = layout.num_blocks();
    let (seed, epsilon, alpha) = problem
        .meta()
        .map_or((0, 0.0, 0.0), |meta| (meta.seed, meta.epsilon, meta.alpha));
    let n = problem.dim();
    let mut out = String::with_capacity(n * n * 25 + 64);
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "{l} {m} {seed} {} {}", fmt_real(epsilon), fmt_real(alpha)).unwrap();
    for row in problem.matrix().chunks(n) {
        let line: Vec<String> = row.iter().map(|&v| fmt_real(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn from_text(text: &str) -> Result<QuadraticProblem, InstanceError> {
    let mut lines = text.lines().enumerate().map(|(i, s)| (i + 1, s));

    let (line, magic) = lines.next().ok_or(InstanceError::Header { line: 1, message: "empty file".into() })?;
    let mut tokens = magic.split_whitespace();
    if tokens.next() != Some(MAGIC) || tokens.next() != Some("1") || tokens.next().is_some() {
        return Err(InstanceError::Header { line, message: format!("expected `{MAGIC} {VERSION}`") });
    }

    let (line, header) = lines
        .next()
        .ok_or(InstanceError::Header { line: 2, message: "missing `l m seed epsilon alpha` line".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(InstanceError::Header {
            line,
            message: format!("expected `l m seed epsilon alpha`, found {} fields", fields.len()),
        });
    }
    let int = |tok: &str| tok.parse::<u64>().map_err(|_| InstanceError::Number { line, token: tok.into() });
    let real = |tok: &str| tok.parse::<f64>().map_err(|_| InstanceError::Number { line, token: tok.into() });
    let l = int(fields[0])? as usize;
    let m = int(fields[1])? as usize;
    let seed = int(fields[2])?;
    let epsilon = real(fields[3])?;
    let alpha = real(fields[4])?;
    if l == 0 || m == 0 {
        return Err(InstanceError::Header { line, message: "l and m must be positive".into() });
    }
    let n = l * m;

    let mut q = Vec::with_capacity(n * n);
    let mut last_line = line;
    for _ in 0..n {
        let (line, row) = lines.next().ok_or(InstanceError::MissingRow { line: last_line + 1 })?;
        last_line = line;
        let before = q.len();
        for tok in row.split_whitespace() {
            q.push(tok.parse::<f64>().map_err(|_| InstanceError::Number { line, token: tok.into() })?);
        }
        let found = q.len() - before;
        if found != n {
            return Err(InstanceError::RowLength { line, expected: n, found });
        }
    }
    if let Some((line, _)) = lines.find(|(_, s)| !s.trim().is_empty()) {
        return Err(InstanceError::TrailingContent { line });
    }
    let layout = BlockLayout::uniform(l, m)?;
    let meta = GeneratorMeta { l, m, seed, epsilon, alpha };
    Ok(QuadraticProblem::new(layout, q)?.with_meta(meta))
}

pub fn save_instance(problem: &QuadraticProblem, path: &Path) -> Result<(), InstanceError> {
    let text = to_text(problem)?;
    fs::write(path, text).map_err(|source| InstanceError::Io { path: path.display().to_string(), source })
}

pub fn load_instance(path: &Path) -> Result<QuadraticProblem, InstanceError> {
    let text = fs::read_to_string(path)
        .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })?;
    from_text(&text)
}
