use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use echobeat_core::eval::{PairedSample, ScoredLabels};
use echobeat_core::geometry::Calibration;
use echobeat_core::tensor_file::{self, Tensor};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;

/// `-` means stdin.
pub fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    if path == Path::new("-") {
        std::io::stdin()
            .lock()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::io(path, e))?;
    } else {
        buf = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    }
    Ok(buf)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read_input(path)?).map_err(|e| {
        CliError::data("IO", e.to_string(), json!({ "path": path.display().to_string() }))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| {
        CliError::data(
            "INVALID_INPUT",
            e.to_string(),
            json!({ "path": path.display().to_string() }),
        )
    })
}

pub fn read_tensor(path: &Path) -> Result<Tensor, CliError> {
    tensor_file::decode(&read_input(path)?)
        .map_err(|e| CliError::from(e).with_context("path", path.display().to_string()))
}

/// Writes to `path`, or stdout when absent.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("report serializes");
    s.push(b'\n');
    s
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    write_output(path, &json_bytes(value))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CalibrationDoc {
    #[serde(default = "one")]
    pub schema_version: u32,
    pub cm_per_pixel: f64,
    pub fps: f64,
}

fn one() -> u32 {
    echobeat_core::formats::SCHEMA_VERSION
}

impl From<Calibration> for CalibrationDoc {
    fn from(c: Calibration) -> Self {
        Self {
            schema_version: one(),
            cm_per_pixel: c.cm_per_pixel,
            fps: c.fps,
        }
    }
}

/// Calibration from a file, or from explicit flags when no file is given.
pub fn calibration(
    file: Option<&Path>,
    cm_per_pixel: Option<f64>,
    fps: Option<f64>,
) -> Result<Calibration, CliError> {
    if let Some(path) = file {
        let doc: CalibrationDoc = read_json(path)?;
        let cal = Calibration::new(
            cm_per_pixel.unwrap_or(doc.cm_per_pixel),
            fps.unwrap_or(doc.fps),
        )?;
        return Ok(cal);
    }
    match (cm_per_pixel, fps) {
        (Some(c), Some(f)) => Ok(Calibration::new(c, f)?),
        (None, Some(f)) => Ok(Calibration::pixel_units(f)?),
        _ => Err(CliError::usage(
            "need --calibration, or --fps (and optionally --cm-per-pixel)",
        )),
    }
}

#[derive(Debug, Deserialize)]
struct PredRow {
    id: String,
    pred: f64,
    #[serde(default, rename = "ref")]
    reference: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RefRow {
    id: String,
    #[serde(rename = "ref")]
    reference: f64,
}

#[derive(Debug, Serialize)]
pub struct IdValue<'a> {
    pub id: &'a str,
    pub pred: f64,
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::io::Cursor<Vec<u8>>>, CliError> {
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(std::io::Cursor::new(read_input(path)?)))
}

fn duplicate(id: &str, path: &Path) -> CliError {
    CliError::data(
        "INVALID_INPUT",
        format!("duplicate id {id:?}"),
        json!({ "path": path.display().to_string() }),
    )
}

/// Joins predictions with references by id, keeping the prediction order.
/// References come from `ref_path` when given, else from a `ref` column.
pub fn paired_sample(pred_path: &Path, ref_path: Option<&Path>) -> Result<PairedSample, CliError> {
    let mut preds: Vec<PredRow> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for row in csv_reader(pred_path)?.deserialize() {
        let row: PredRow = row?;
        if !seen.insert(row.id.clone()) {
            return Err(duplicate(&row.id, pred_path));
        }
        preds.push(row);
    }

    let refs: Option<BTreeMap<String, f64>> = match ref_path {
        Some(path) => {
            let mut map = BTreeMap::new();
            for row in csv_reader(path)?.deserialize() {
                let row: RefRow = row?;
                if map.insert(row.id.clone(), row.reference).is_some() {
                    return Err(duplicate(&row.id, path));
                }
            }
            Some(map)
        }
        None => None,
    };

    let mut ids = Vec::with_capacity(preds.len());
    let mut pred = Vec::with_capacity(preds.len());
    let mut reference = Vec::with_capacity(preds.len());
    for row in preds {
        let r = match &refs {
            Some(map) => map.get(&row.id).copied(),
            None => row.reference,
        };
        let r = r.ok_or_else(|| {
            CliError::data(
                "MISSING_REFERENCE",
                format!("no reference value for id {:?}", row.id),
                json!({ "id": row.id }),
            )
        })?;
        ids.push(row.id);
        pred.push(row.pred);
        reference.push(r);
    }
    Ok(PairedSample::new(ids, pred, reference)?)
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    id: String,
    score: f64,
    label: String,
}

fn parse_label(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

pub fn scored_labels(path: &Path) -> Result<ScoredLabels, CliError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for row in csv_reader(path)?.deserialize() {
        let row: ScoreRow = row?;
        if !seen.insert(row.id.clone()) {
            return Err(duplicate(&row.id, path));
        }
        let label = parse_label(&row.label).ok_or_else(|| {
            CliError::data(
                "INVALID_INPUT",
                format!("label {:?} is not 0/1/true/false", row.label),
                json!({ "id": row.id }),
            )
        })?;
        if !row.score.is_finite() {
            return Err(CliError::data(
                "INVALID_INPUT",
                "non-finite score",
                json!({ "id": row.id }),
            ));
        }
        scores.push(row.score);
        labels.push(label);
    }
    Ok(ScoredLabels::new(scores, labels)?)
}

pub fn output_dir(path: Option<&Path>, what: &str) -> Result<PathBuf, CliError> {
    let dir = path.ok_or_else(|| CliError::usage(format!("{what} needs --out DIR")))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn joins_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let pred = write(dir.path(), "p.csv", "id,pred\nb,2.0\na,1.5\n");
        let reference = write(dir.path(), "r.csv", "id,ref\na,1.0\nb,2.5\nc,9\n");
        let s = paired_sample(&pred, Some(&reference)).unwrap();
        assert_eq!(s.ids(), ["b", "a"]);
        assert_eq!(s.pred(), [2.0, 1.5]);
        assert_eq!(s.reference(), [2.5, 1.0]);
    }

    #[test]
    fn inline_reference_column() {
        let dir = tempfile::tempdir().unwrap();
        let pred = write(dir.path(), "p.csv", "id,pred,ref\na,1,2\nb,3,3\n");
        let s = paired_sample(&pred, None).unwrap();
        assert_eq!(s.reference(), [2.0, 3.0]);
    }

    #[test]
    fn missing_or_duplicate_ids_fail() {
        let dir = tempfile::tempdir().unwrap();
        let pred = write(dir.path(), "p.csv", "id,pred\na,1\nz,2\n");
        let reference = write(dir.path(), "r.csv", "id,ref\na,1\n");
        assert_eq!(
            paired_sample(&pred, Some(&reference)).unwrap_err().code,
            "MISSING_REFERENCE"
        );
        let dup = write(dir.path(), "d.csv", "id,pred,ref\na,1,1\na,2,2\n");
        assert_eq!(paired_sample(&dup, None).unwrap_err().code, "INVALID_INPUT");
    }

    #[test]
    fn labels_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.csv", "id,score,label\na,0.9,1\nb,0.1,false\nc,0.5,TRUE\n");
        let s = scored_labels(&p).unwrap();
        assert_eq!(s.labels(), [true, false, true]);
        let bad = write(dir.path(), "b.csv", "id,score,label\na,0.9,yes\n");
        assert!(scored_labels(&bad).is_err());
    }
}
