use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
    #[error(transparent)]
    Library(#[from] entcost::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(2)
    }
}

/// Where the seed came from; echoed so a run can be reproduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedSource {
    Flag,
    Env,
    /// The `seed` field of a verify config file.
    Config,
    Default,
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    #[serde(rename = "tool-version")]
    pub tool_version: &'static str,
    pub seed: u64,
    #[serde(rename = "seed-source")]
    pub seed_source: SeedSource,
    pub config: &'a C,
    pub result: &'a R,
}

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Pretty JSON with every float written by [`fmt_f64`].
struct ExactFloats(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {$(
        fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        }
    )*};
}

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Header plus rows, comma separated.
#[derive(Debug, Default)]
pub struct Csv {
    out: String,
}

/// A CSV cell.
pub enum Cell {
    F(f64),
    I(u128),
    B(bool),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as u128)
    }
}
impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        Cell::I(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            out: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        let line: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(v) => fmt_f64(v),
                Cell::I(v) => v.to_string(),
                Cell::B(v) => v.to_string(),
                Cell::S(s) => s,
                Cell::Empty => String::new(),
            })
            .collect();
        let _ = writeln!(self.out, "{}", line.join(","));
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Writes `text` to `path`, or to stdout.
pub fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io("stdout".into(), e))
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}
