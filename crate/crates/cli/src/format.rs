//! On-disk snapshot files. Complex entries are `[re, im]` pairs, matrices
//! are row-major lists of rows.

use std::fs;
use std::io;
use std::path::Path;

use markovfit::{c64, Mat, SnapshotSeries, TransferMatrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: &str = "1";

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFile {
    pub format_version: String,
    pub d: usize,
    pub snapshots: Vec<SnapshotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub matrix: MatrixJson,
}

/// Failure to read an input file: IO, JSON syntax, schema or content.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    /// `field` is the path inside the document, e.g. `snapshots[1].matrix`.
    #[error("{path}: line {line}, column {column}, field `{field}`: {message}")]
    Syntax { path: String, line: usize, column: usize, field: String, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Invalid { path: String, field: String, message: String },
}

pub fn matrix_to_json(m: markovfit::faer::MatRef<'_, c64>) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Square matrix of side `side`, or a message naming what is wrong.
pub fn matrix_from_json(rows: &MatrixJson, side: usize) -> Result<Mat<c64>, String> {
    if rows.len() != side {
        return Err(format!("expected {side} rows, got {}", rows.len()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != side) {
        return Err(format!("row {i} has {} entries, expected {side}", r.len()));
    }
    Ok(Mat::from_fn(side, side, |i, j| c64::new(rows[i][j][0], rows[i][j][1])))
}

/// Parses JSON, reporting the line, column and field path of the first
/// error.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        InputError::Syntax {
            path: path.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: strip_position(&inner.to_string()),
        }
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(k) => msg[..k].to_string(),
        None => msg.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io { path: path.display().to_string(), source })
}

impl SnapshotFile {
    pub fn read(path: &Path) -> Result<Self, InputError> {
        let text = read_text(path)?;
        let name = path.display().to_string();
        let file: SnapshotFile = parse_json(&text, &name)?;
        file.validate().map_err(|(field, message)| InputError::Invalid { path: name, field, message })?;
        Ok(file)
    }

    pub fn from_series(series: &SnapshotSeries) -> Self {
        let times = series.timestamps();
        let snapshots = series
            .snapshots()
            .iter()
            .enumerate()
            .map(|(k, m)| SnapshotRecord { t: times.map(|t| t[k]), matrix: matrix_to_json(m.entries()) })
            .collect();
        Self { format_version: FORMAT_VERSION.into(), d: series.dim(), snapshots }
    }

    /// Checks the content rules serde cannot express; errors carry the
    /// offending field path.
    pub fn validate(&self) -> Result<(), (String, String)> {
        if self.format_version != FORMAT_VERSION {
            return Err((
                "format_version".into(),
                format!("unsupported version {:?}, expected {FORMAT_VERSION:?}", self.format_version),
            ));
        }
        if self.d == 0 {
            return Err(("d".into(), "dimension must be positive".into()));
        }
        if self.snapshots.is_empty() {
            return Err(("snapshots".into(), "at least one snapshot is required".into()));
        }
        let side = self.d * self.d;
        for (k, s) in self.snapshots.iter().enumerate() {
            matrix_from_json(&s.matrix, side).map_err(|m| (format!("snapshots[{k}].matrix"), format!("{m} (d = {})", self.d)))?;
            if s.matrix.iter().flatten().flatten().any(|x| !x.is_finite()) {
                return Err((format!("snapshots[{k}].matrix"), "entries must be finite".into()));
            }
        }
        let with_t = self.snapshots.iter().filter(|s| s.t.is_some()).count();
        if with_t != 0 && with_t != self.snapshots.len() {
            return Err(("snapshots[].t".into(), "times must be given for all snapshots or for none".into()));
        }
        let times: Vec<f64> = self.snapshots.iter().filter_map(|s| s.t).collect();
        if let Some(k) = times.iter().position(|t| !t.is_finite()) {
            return Err((format!("snapshots[{k}].t"), "time must be finite".into()));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err((format!("snapshots[{}].t", k + 1), "times must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn to_series(&self) -> markovfit::Result<SnapshotSeries> {
        let side = self.d * self.d;
        let mats = self
            .snapshots
            .iter()
            .map(|s| {
                let m = matrix_from_json(&s.matrix, side).map_err(markovfit::Error::InvalidDimension)?;
                TransferMatrix::new(self.d, m)
            })
            .collect::<markovfit::Result<Vec<_>>>()?;
        let times: Option<Vec<f64>> = self.snapshots.iter().map(|s| s.t).collect();
        match times {
            Some(t) => SnapshotSeries::with_times(self.d, mats, t),
            None => SnapshotSeries::new(self.d, mats),
        }
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::write(p, text),
        _ => {
            use io::Write;
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
