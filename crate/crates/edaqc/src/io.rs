//! File formats: signal CSV + sidecar JSON, labels CSV, features CSV,
//! reviewer marks, masks, event logs, model JSON, and evaluation reports.
//!
//! Every output embeds the run provenance (tool version, config hash,
//! master seed, feature-map version): CSV files as leading `# key=value`
//! comment lines, JSON files as a `meta` object. Reruns with identical
//! inputs produce byte-identical files.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_MAP_VERSION, FEATURE_NAMES, N_FEATURES};
use crate::labeling::{MarkEntry, QualityLabel, ReviewerMarks};
use crate::ml::{EvalReport, TrainedModel};
use crate::signal::{ChannelKind, TimeSeries};
use crate::synth::ArtifactEvent;
use crate::vfcdm::Decomposition;

/// Provenance stamped into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub feature_map_version: String,
}

impl RunMeta {
    pub fn new(tool_version: &str, config_hash: &str, master_seed: u64) -> Self {
        RunMeta {
            tool_version: tool_version.to_string(),
            config_hash: config_hash.to_string(),
            master_seed,
            feature_map_version: FEATURE_MAP_VERSION.to_string(),
        }
    }

    fn comment_block(&self) -> String {
        format!(
            "# tool_version={}\n# config_hash={}\n# master_seed={}\n# feature_map_version={}\n",
            self.tool_version, self.config_hash, self.master_seed, self.feature_map_version
        )
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::format(format!("{}: {e}", path.display()))
}

/// Reader that skips `#` comment lines.
fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

// ---------------------------------------------------------------- signals

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub subject_id: String,
    pub channel: ChannelKind,
    pub fs: f64,
    #[serde(default)]
    pub t0: f64,
}

/// `t,eda` rows plus the sidecar metadata JSON next to it.
pub fn write_signal(csv_path: &Path, ts: &TimeSeries, meta: &RunMeta) -> Result<()> {
    let mut out = meta.comment_block();
    out.push_str("t,eda\n");
    for (k, v) in ts.samples.iter().enumerate() {
        let t = ts.t0 + k as f64 / ts.fs;
        out.push_str(&format!("{t},{v}\n"));
    }
    write_atomic(csv_path, out.as_bytes())?;
    let side = ChannelMeta {
        subject_id: ts.subject_id.clone(),
        channel: ts.channel,
        fs: ts.fs,
        t0: ts.t0,
    };
    write_json_value(&sidecar_path(csv_path), &side, meta)
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

/// Read a signal CSV with its sidecar; sample times must match the sidecar
/// rate within 1e-6 s.
pub fn read_signal(csv_path: &Path) -> Result<TimeSeries> {
    let side: ChannelMeta = read_json_value(&sidecar_path(csv_path))?;
    let mut rdr = csv_reader(csv_path)?;
    {
        let headers = rdr.headers().map_err(|e| csv_error(csv_path, e))?;
        if headers.iter().collect::<Vec<_>>() != ["t", "eda"] {
            return Err(Error::format(format!(
                "{}: expected header t,eda, got {headers:?}",
                csv_path.display()
            )));
        }
    }
    let mut samples = Vec::new();
    let mut t_first = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(csv_path, e))?;
        let t: f64 = parse_field(csv_path, &rec, 0)?;
        let v: f64 = parse_field(csv_path, &rec, 1)?;
        let t0 = *t_first.get_or_insert(t);
        let expected = t0 + k as f64 / side.fs;
        if (t - expected).abs() > 1e-6 {
            return Err(Error::format(format!(
                "{}: row {k} at t={t} deviates from uniform {}-Hz spacing (expected {expected})",
                csv_path.display(),
                side.fs
            )));
        }
        samples.push(v);
    }
    let t0 = t_first.unwrap_or(side.t0);
    TimeSeries::new(samples, side.fs, side.subject_id, side.channel, t0)
}

fn parse_field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, idx: usize) -> Result<T> {
    rec.get(idx)
        .ok_or_else(|| Error::format(format!("{}: missing column {idx}", path.display())))?
        .parse()
        .map_err(|_| {
            Error::format(format!(
                "{}: cannot parse column {idx} of {rec:?}",
                path.display()
            ))
        })
}

// ----------------------------------------------------------------- labels

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub subject_id: String,
    pub window_index: usize,
    /// Correlation against the reference; absent for rule-based labels.
    pub r: Option<f64>,
    pub label: QualityLabel,
    pub method: String,
}

pub fn write_labels(path: &Path, rows: &[LabelRow], meta: &RunMeta) -> Result<()> {
    let mut out = meta.comment_block();
    out.push_str("subject_id,window_index,r,label,method\n");
    for row in rows {
        let r = row.r.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.subject_id, row.window_index, r, row.label, row.method
        ));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut rdr = csv_reader(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let r_raw = rec
            .get(2)
            .ok_or_else(|| Error::format(format!("{}: missing r column", path.display())))?;
        rows.push(LabelRow {
            subject_id: rec.get(0).unwrap_or_default().to_string(),
            window_index: parse_field(path, &rec, 1)?,
            r: if r_raw.is_empty() {
                None
            } else {
                Some(parse_field(path, &rec, 2)?)
            },
            label: rec.get(3).unwrap_or_default().parse()?,
            method: rec.get(4).unwrap_or_default().to_string(),
        });
    }
    Ok(rows)
}

// --------------------------------------------------------------- features

/// 52 canonical feature columns, then `subject_id,window_index,label`.
pub fn write_features(path: &Path, rows: &[FeatureVector], meta: &RunMeta) -> Result<()> {
    let mut out = meta.comment_block();
    out.push_str(&FEATURE_NAMES.join(","));
    out.push_str(",subject_id,window_index,label\n");
    for fv in rows {
        debug_assert_eq!(fv.values.len(), N_FEATURES);
        for v in &fv.values {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&format!("{},{},{}\n", fv.subject_id, fv.window_index, fv.label));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv_reader(path)?;
    {
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?;
        let expected: Vec<&str> = FEATURE_NAMES
            .iter()
            .copied()
            .chain(["subject_id", "window_index", "label"])
            .collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::format(format!(
                "{}: feature header does not match canonical map {FEATURE_MAP_VERSION}",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let mut values = Vec::with_capacity(N_FEATURES);
        for i in 0..N_FEATURES {
            values.push(parse_field(path, &rec, i)?);
        }
        rows.push(FeatureVector {
            values,
            subject_id: rec.get(N_FEATURES).unwrap_or_default().to_string(),
            window_index: parse_field(path, &rec, N_FEATURES + 1)?,
            label: rec.get(N_FEATURES + 2).unwrap_or_default().parse()?,
        });
    }
    Ok(rows)
}

// -------------------------------------------------------- marks and masks

pub fn read_marks(path: &Path) -> Result<ReviewerMarks> {
    let entries: Vec<MarkEntry> = read_json_value(path)?;
    Ok(ReviewerMarks::new(entries))
}

pub fn write_marks(path: &Path, marks: &ReviewerMarks) -> Result<()> {
    let body = serde_json::to_string_pretty(&marks.entries)
        .map_err(|e| Error::format(e.to_string()))?;
    write_atomic(path, body.as_bytes())
}

/// Ground-truth mask as `t,masked` with 0/1 flags.
pub fn write_mask(path: &Path, mask: &[bool], fs: f64, t0: f64, meta: &RunMeta) -> Result<()> {
    let mut out = meta.comment_block();
    out.push_str("t,masked\n");
    for (k, m) in mask.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t0 + k as f64 / fs, u8::from(*m)));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_mask(path: &Path) -> Result<Vec<bool>> {
    let mut rdr = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let flag: u8 = parse_field(path, &rec, 1)?;
        out.push(flag != 0);
    }
    Ok(out)
}

pub fn write_events(path: &Path, events: &[ArtifactEvent], meta: &RunMeta) -> Result<()> {
    write_json_value(path, &events.to_vec(), meta)
}

// ------------------------------------------------------------ json common

#[derive(Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    meta: &'a RunMeta,
    #[serde(flatten)]
    body: BodyWrap<'a, T>,
}

#[derive(Serialize)]
struct BodyWrap<'a, T: Serialize> {
    body: &'a T,
}

#[derive(Deserialize)]
struct JsonEnvelopeOwned<T> {
    #[allow(dead_code)]
    #[serde(default)]
    meta: Option<RunMeta>,
    body: T,
}

/// JSON with a `meta` header and the payload under `body`.
pub fn write_json_value<T: Serialize>(path: &Path, value: &T, meta: &RunMeta) -> Result<()> {
    let envelope = JsonEnvelope {
        meta,
        body: BodyWrap { body: value },
    };
    let body = serde_json::to_string_pretty(&envelope).map_err(|e| Error::format(e.to_string()))?;
    write_atomic(path, body.as_bytes())
}

/// Read a value written by [`write_json_value`], or a bare JSON value.
pub fn read_json_value<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    if let Ok(env) = serde_json::from_str::<JsonEnvelopeOwned<T>>(&text) {
        return Ok(env.body);
    }
    serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// Read just the meta header of an enveloped JSON file, if present.
pub fn read_json_meta(path: &Path) -> Result<Option<RunMeta>> {
    #[derive(Deserialize)]
    struct MetaOnly {
        #[serde(default)]
        meta: Option<RunMeta>,
    }
    let text = fs::read_to_string(path)?;
    let parsed: MetaOnly =
        serde_json::from_str(&text).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    Ok(parsed.meta)
}

// ------------------------------------------------------- models / reports

pub fn write_model(path: &Path, model: &TrainedModel, meta: &RunMeta) -> Result<()> {
    write_json_value(path, model, meta)
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    read_json_value(path)
}

/// Per-fold flat CSV companion to the report JSON.
pub fn write_report_folds_csv(path: &Path, report: &EvalReport, meta: &RunMeta) -> Result<()> {
    let mut out = meta.comment_block();
    out.push_str(
        "held_out,n_test,accuracy,balanced_accuracy,tp,fp,tn,fn,chosen_params,selected_features\n",
    );
    for fold in &report.folds {
        let params = serde_json::to_string(&fold.chosen_params)
            .map_err(|e| Error::format(e.to_string()))?;
        let selected = fold
            .selected_features
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},\"{}\",{}\n",
            fold.held_out,
            fold.n_test,
            fold.accuracy,
            fold.balanced_accuracy,
            fold.confusion.tp,
            fold.confusion.fp,
            fold.confusion.tn,
            fold.confusion.fn_,
            params.replace('"', "\"\""),
            selected
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Optional decomposition dump: `t,band_01..band_12`.
pub fn write_decomposition(path: &Path, d: &Decomposition, meta: &RunMeta) -> Result<()> {
    let mut out = meta.comment_block();
    out.push('t');
    for c in &d.components {
        out.push_str(&format!(",band_{:02}", c.band_index));
    }
    out.push('\n');
    let n = d.components.first().map_or(0, |c| c.samples.len());
    for k in 0..n {
        out.push_str(&(d.t0 + k as f64 / d.fs).to_string());
        for c in &d.components {
            out.push(',');
            out.push_str(&c.samples[k].to_string());
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ChannelKind;
    use rand::Rng;
    use tempfile::tempdir;

    fn meta() -> RunMeta {
        RunMeta::new("0.1.0-test", "deadbeef", 42)
    }

    #[test]
    fn signal_round_trip_preserves_samples() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("target.csv");
        let mut rng = crate::seeds::unit_rng(501, "io", 0);
        let samples: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..5.0)).collect();
        let ts = TimeSeries::new(samples.clone(), 8.0, "S01", ChannelKind::Target, 0.0).unwrap();
        write_signal(&path, &ts, &meta()).unwrap();
        let back = read_signal(&path).unwrap();
        assert_eq!(back.samples, samples);
        assert_eq!(back.fs, 8.0);
        assert_eq!(back.subject_id, "S01");
        assert_eq!(back.channel, ChannelKind::Target);
    }

    #[test]
    fn signal_reader_rejects_nonuniform_times() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,eda\n0.0,1.0\n0.125,1.0\n0.3,1.0\n").unwrap();
        std::fs::write(
            sidecar_path(&path),
            r#"{"subject_id":"S01","channel":"target","fs":8.0,"t0":0.0}"#,
        )
        .unwrap();
        let err = read_signal(&path).unwrap_err();
        assert!(err.to_string().contains("uniform"), "{err}");
    }

    #[test]
    fn labels_round_trip_with_and_without_r() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let rows = vec![
            LabelRow {
                subject_id: "S01".into(),
                window_index: 0,
                r: Some(0.991),
                label: QualityLabel::Clean,
                method: "correlation".into(),
            },
            LabelRow {
                subject_id: "S01".into(),
                window_index: 1,
                r: None,
                label: QualityLabel::Noisy,
                method: "rules".into(),
            },
            LabelRow {
                subject_id: "S02".into(),
                window_index: 0,
                r: Some(0.3),
                label: QualityLabel::Discarded,
                method: "correlation".into(),
            },
        ];
        write_labels(&path, &rows, &meta()).unwrap();
        assert_eq!(read_labels(&path).unwrap(), rows);
    }

    #[test]
    fn features_round_trip_and_header_guard() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let mut rng = crate::seeds::unit_rng(503, "iofeat", 0);
        let rows: Vec<FeatureVector> = (0..5)
            .map(|i| FeatureVector {
                values: (0..N_FEATURES).map(|_| rng.random_range(-3.0..3.0)).collect(),
                label: if i % 2 == 0 {
                    QualityLabel::Clean
                } else {
                    QualityLabel::Noisy
                },
                subject_id: format!("S{:02}", i % 2 + 1),
                window_index: i,
            })
            .collect();
        write_features(&path, &rows, &meta()).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.values, b.values);
            assert_eq!(a.label, b.label);
            assert_eq!(a.subject_id, b.subject_id);
        }

        // corrupt a header name
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("ar_a1", "bogus")).unwrap();
        assert!(read_features(&path).is_err());
    }

    #[test]
    fn mask_and_marks_round_trip() {
        let dir = tempdir().unwrap();
        let mask_path = dir.path().join("mask.csv");
        let mask = vec![false, true, true, false, true];
        write_mask(&mask_path, &mask, 8.0, 0.0, &meta()).unwrap();
        assert_eq!(read_mask(&mask_path).unwrap(), mask);

        let marks_path = dir.path().join("marks.json");
        let marks = ReviewerMarks::new(vec![MarkEntry {
            reviewer: "r1".into(),
            start_s: 1.0,
            end_s: 4.5,
        }]);
        write_marks(&marks_path, &marks).unwrap();
        let back = read_marks(&marks_path).unwrap();
        assert_eq!(back.entries.len(), 1);
        assert_eq!(back.entries[0].reviewer, "r1");
    }

    #[test]
    fn json_envelope_carries_meta() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("value.json");
        write_json_value(&path, &vec![1, 2, 3], &meta()).unwrap();
        let m = read_json_meta(&path).unwrap().unwrap();
        assert_eq!(m, meta());
        let v: Vec<i32> = read_json_value(&path).unwrap();
        assert_eq!(v, vec![1, 2, 3]);
    }

    #[test]
    fn writes_are_byte_identical_across_runs() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let ts = TimeSeries::new(
            (0..100).map(|k| (k as f64 * 0.17).sin() + 2.0).collect(),
            8.0,
            "S01",
            ChannelKind::Reference,
            0.0,
        )
        .unwrap();
        write_signal(&a, &ts, &meta()).unwrap();
        write_signal(&b, &ts, &meta()).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
