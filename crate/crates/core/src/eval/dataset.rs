//! Manifests, score tables and batch scoring.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::EvalError;
use crate::image_io::{crop_border, read_image, ImageIoError};
use crate::metric::{score_image, Metric, MetricResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    /// Path as written in the manifest.
    pub image_path: String,
    pub mos: f64,
    pub group_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    /// Relative image paths are resolved against this directory.
    pub base_dir: Option<PathBuf>,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        let p = Path::new(&record.image_path);
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}

fn parse_error(path: &str, line: u64, message: impl Into<String>) -> EvalError {
    EvalError::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses manifest CSV text: header `path,mos[,group]`, `#` lines ignored.
pub fn parse_manifest(
    input: impl Read,
    source_name: &str,
) -> Result<Vec<ManifestRecord>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let header_line = reader.position().line().max(1);
    let headers = reader
        .headers()
        .map_err(|e| parse_error(source_name, header_line, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_group = match names.as_slice() {
        ["path", "mos"] => false,
        ["path", "mos", "group"] => true,
        _ => {
            return Err(parse_error(
                source_name,
                header_line,
                format!(
                    "expected header `path,mos[,group]`, found `{}`",
                    names.join(",")
                ),
            ))
        }
    };

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(source_name, line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.iter().all(str::is_empty) {
            continue;
        }
        let expected = if has_group { 3 } else { 2 };
        if row.len() < 2 || row.len() > expected {
            return Err(parse_error(
                source_name,
                line,
                format!("expected {expected} fields, found {}", row.len()),
            ));
        }
        let image_path = row[0].to_string();
        if image_path.is_empty() {
            return Err(parse_error(source_name, line, "empty path"));
        }
        let mos: f64 = row[1].parse().map_err(|_| {
            parse_error(
                source_name,
                line,
                format!("MOS `{}` is not a number", &row[1]),
            )
        })?;
        if !mos.is_finite() {
            return Err(parse_error(source_name, line, "MOS must be finite"));
        }
        let group_id = row.get(2).filter(|g| !g.is_empty()).map(str::to_string);
        if !seen.insert(image_path.clone()) {
            return Err(EvalError::DuplicatePath(image_path));
        }
        records.push(ManifestRecord {
            image_path,
            mos,
            group_id,
        });
    }
    Ok(records)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, EvalError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: name.clone(),
        source,
    })?;
    let records = parse_manifest(file, &name)?;
    Ok(DatasetManifest {
        base_dir: path.parent().map(Path::to_path_buf),
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub image_path: String,
    pub result: MetricResult,
    pub mos: f64,
    pub group_id: Option<String>,
}

impl ScoreRow {
    pub fn score(&self, metric: Metric) -> f64 {
        self.result.score(metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Missing, unreadable or undecodable file.
    Io,
    /// Decoded, but too small to crop or score.
    InvalidInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageFailure {
    pub path: String,
    pub reason: String,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
    /// Images left out under `skip_errors`.
    pub skipped: Vec<ImageFailure>,
}

impl ScoreTable {
    pub fn scores(&self, metric: Metric) -> Vec<f64> {
        self.rows.iter().map(|r| r.score(metric)).collect()
    }

    pub fn mos(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mos).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreOptions {
    pub parallelism: usize,
    /// Drop unreadable images instead of failing the whole run.
    pub skip_errors: bool,
    /// Pixels removed from every border before scoring.
    pub crop: usize,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            parallelism: 1,
            skip_errors: false,
            crop: 0,
        }
    }
}

fn score_record(
    manifest: &DatasetManifest,
    record: &ManifestRecord,
    crop: usize,
) -> Result<MetricResult, (String, FailureKind)> {
    let img = read_image(manifest.resolve(record)).map_err(|e| (e.to_string(), FailureKind::Io))?;
    let img = crop_border(&img, crop)
        .map_err(|e: ImageIoError| (e.to_string(), FailureKind::InvalidInput))?;
    score_image(&img).map_err(|e| (e.to_string(), FailureKind::InvalidInput))
}

/// Scores every manifest image on `parallelism` workers.
///
/// Rows come back in manifest order whatever the worker count.
pub fn score_dataset(
    manifest: &DatasetManifest,
    opts: &ScoreOptions,
) -> Result<ScoreTable, EvalError> {
    if opts.parallelism == 0 {
        return Err(EvalError::ZeroParallelism);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .expect("thread pool");
    let outcomes: Vec<Result<MetricResult, (String, FailureKind)>> = pool.install(|| {
        manifest
            .records
            .par_iter()
            .map(|r| score_record(manifest, r, opts.crop))
            .collect()
    });

    let mut table = ScoreTable::default();
    for (record, outcome) in manifest.records.iter().zip(outcomes) {
        match outcome {
            Ok(result) => table.rows.push(ScoreRow {
                image_path: record.image_path.clone(),
                result,
                mos: record.mos,
                group_id: record.group_id.clone(),
            }),
            Err((reason, kind)) => table.skipped.push(ImageFailure {
                path: record.image_path.clone(),
                reason,
                kind,
            }),
        }
    }
    if !table.skipped.is_empty() && !opts.skip_errors {
        return Err(EvalError::ImageFailures(table.skipped));
    }
    Ok(table)
}

/// Writes `path,nug,mug,mug_plus,mos[,group]` with shortest round-trip floats.
pub fn write_score_table(table: &ScoreTable, mut out: impl Write) -> std::io::Result<()> {
    let has_group = table.rows.iter().any(|r| r.group_id.is_some());
    let mut writer = csv::WriterBuilder::new().from_writer(&mut out);
    let mut header = vec!["path", "nug", "mug", "mug_plus", "mos"];
    if has_group {
        header.push("group");
    }
    writer.write_record(&header)?;
    for row in &table.rows {
        let mut fields = vec![
            row.image_path.clone(),
            row.result.nug.to_string(),
            row.result.mug.to_string(),
            row.result.mug_plus.to_string(),
            row.mos.to_string(),
        ];
        if has_group {
            fields.push(row.group_id.clone().unwrap_or_default());
        }
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a score table written by [`write_score_table`].
///
/// `n_available` is not stored in the file and is recomputed from NUG.
pub fn read_score_table(input: impl Read, source_name: &str) -> Result<ScoreTable, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| parse_error(source_name, 1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_group = match names.as_slice() {
        ["path", "nug", "mug", "mug_plus", "mos"] => false,
        ["path", "nug", "mug", "mug_plus", "mos", "group"] => true,
        _ => {
            return Err(parse_error(
                source_name,
                1,
                format!(
                    "expected header `path,nug,mug,mug_plus,mos[,group]`, found `{}`",
                    names.join(",")
                ),
            ))
        }
    };
    let mut table = ScoreTable::default();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(source_name, line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize, what: &str| -> Result<f64, EvalError> {
            row[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_error(
                        source_name,
                        line,
                        format!("{what} `{}` is not a finite number", &row[i]),
                    )
                })
        };
        let nug: usize = row[1].parse().map_err(|_| {
            parse_error(
                source_name,
                line,
                format!("nug `{}` is not an integer", &row[1]),
            )
        })?;
        let result = MetricResult {
            nug,
            mug: num(2, "mug")?,
            mug_plus: num(3, "mug_plus")?,
            n_available: crate::metric::available_positions(nug),
        };
        table.rows.push(ScoreRow {
            image_path: row[0].to_string(),
            result,
            mos: num(4, "mos")?,
            group_id: if has_group {
                Some(row[5].to_string()).filter(|g| !g.is_empty())
            } else {
                None
            },
        });
    }
    Ok(table)
}
