//! The pipeline subcommands.

use std::collections::HashMap;
use std::path::Path;

use edaqc::baseline as rules;
use edaqc::error::Error;
use edaqc::features::{self, FeatureVector, FEATURE_MAP_VERSION};
use edaqc::io::{self, LabelRow, RunMeta};
use edaqc::labeling::{self, QualityLabel};
use edaqc::ml::{self, Dataset};
use edaqc::report as rep;
use edaqc::signal::{decimate, segment, TimeSeries};
use edaqc::synth;
use edaqc::vfcdm;

use crate::config::RunConfig;
use crate::corpus;

/// Command failures mapped to process exit codes: 2 usage/config, 3 data,
/// 4 numeric.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Feature { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

type CmdResult = Result<(), CliError>;

/// Bring a record to the working rate, decimating integer factors down.
fn ensure_working_rate(ts: TimeSeries, working_fs: f64) -> Result<TimeSeries, CliError> {
    if (ts.fs - working_fs).abs() < 1e-9 {
        return Ok(ts);
    }
    if ts.fs < working_fs {
        return Err(CliError::Data(format!(
            "record of subject {} is sampled at {} Hz, below the {} Hz working rate",
            ts.subject_id, ts.fs, working_fs
        )));
    }
    Ok(decimate(&ts, working_fs)?)
}

pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> CmdResult {
    cfg.synth
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let meta = cfg.meta();
    let records = synth::gen_corpus(&cfg.synth)?;
    for rec in &records {
        corpus::write_record(out, rec, &meta)?;
    }
    io::write_json_value(&out.join("corpus.json"), &cfg.synth, &meta)?;
    let windows_per = (cfg.synth.duration_s / cfg.win_sec).floor() as usize;
    println!(
        "wrote {} subjects ({} windows per channel pair) to {}",
        records.len(),
        windows_per * records.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_label(cfg: &RunConfig, corpus_dir: &Path, out: &Path) -> CmdResult {
    let meta = cfg.meta();
    let mut rows = Vec::new();
    let mut counts = [0usize; 3];
    for (subject, dir) in corpus::subjects(corpus_dir)? {
        let target = ensure_working_rate(corpus::read_target(&dir)?, cfg.synth.fs)?;
        let reference = ensure_working_rate(corpus::read_reference(&dir)?, cfg.synth.fs)?;
        let marks = corpus::read_marks(&dir)?;
        let t_windows = segment(&target, cfg.win_sec)?;
        let r_windows = segment(&reference, cfg.win_sec)?;
        let labeled = labeling::label_record(&t_windows, &r_windows, &marks, &cfg.label)?;
        for lw in labeled {
            counts[match lw.label {
                QualityLabel::Clean => 0,
                QualityLabel::Noisy => 1,
                QualityLabel::Discarded => 2,
            }] += 1;
            rows.push(LabelRow {
                subject_id: subject.clone(),
                window_index: lw.window.index,
                r: Some(lw.r),
                label: lw.label,
                method: "correlation".into(),
            });
        }
    }
    io::write_labels(out, &rows, &meta)?;
    println!(
        "labeled {} windows: {} clean, {} noisy, {} discarded -> {}",
        rows.len(),
        counts[0],
        counts[1],
        counts[2],
        out.display()
    );
    Ok(())
}

pub fn cmd_baseline(cfg: &RunConfig, corpus_dir: &Path, out: &Path) -> CmdResult {
    let meta = cfg.meta();
    let mut rows = Vec::new();
    let mut noisy = 0usize;
    for (subject, dir) in corpus::subjects(corpus_dir)? {
        let target = ensure_working_rate(corpus::read_target(&dir)?, cfg.synth.fs)?;
        let windows = segment(&target, cfg.win_sec)?;
        let labels = rules::rule_label_record(&target, &windows, &cfg.rules)?;
        for (w, label) in windows.iter().zip(labels) {
            noisy += usize::from(label == QualityLabel::Noisy);
            rows.push(LabelRow {
                subject_id: subject.clone(),
                window_index: w.index,
                r: None,
                label,
                method: "rules".into(),
            });
        }
    }
    io::write_labels(out, &rows, &meta)?;
    println!(
        "rule screen over {} windows: {} noisy -> {}",
        rows.len(),
        noisy,
        out.display()
    );
    Ok(())
}

pub fn cmd_featurize(
    cfg: &RunConfig,
    corpus_dir: &Path,
    labels_path: &Path,
    out: &Path,
    dump_bands: Option<&Path>,
) -> CmdResult {
    let meta = cfg.meta();
    let label_rows = io::read_labels(labels_path)?;
    let label_of: HashMap<(String, usize), QualityLabel> = label_rows
        .iter()
        .map(|r| ((r.subject_id.clone(), r.window_index), r.label))
        .collect();
    let mut out_rows: Vec<FeatureVector> = Vec::new();
    for (subject, dir) in corpus::subjects(corpus_dir)? {
        let target = ensure_working_rate(corpus::read_target(&dir)?, cfg.synth.fs)?;
        let extracted = features::extract_record(&target, cfg.win_sec).map_err(feature_error)?;
        if let Some(dump_dir) = dump_bands {
            let decomp = vfcdm::cdm_decompose(&target, vfcdm::DEFAULT_BANDS)?;
            io::write_decomposition(&dump_dir.join(format!("{subject}.csv")), &decomp, &meta)?;
        }
        for (window, values) in extracted {
            let key = (subject.clone(), window.index);
            let Some(label) = label_of.get(&key) else {
                return Err(CliError::Data(format!(
                    "labels file {} has no entry for window {} of subject {subject}",
                    labels_path.display(),
                    window.index
                )));
            };
            if *label == QualityLabel::Discarded {
                continue;
            }
            out_rows.push(FeatureVector {
                values,
                label: *label,
                subject_id: subject.clone(),
                window_index: window.index,
            });
        }
    }
    io::write_features(out, &out_rows, &meta)?;
    println!(
        "featurized {} non-discarded windows -> {}",
        out_rows.len(),
        out.display()
    );
    Ok(())
}

fn feature_error(e: Error) -> CliError {
    match e {
        Error::Feature { .. } => CliError::Numeric(e.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    features_path: &Path,
    baseline_labels: Option<&Path>,
    out: &Path,
) -> CmdResult {
    let meta = cfg.meta();
    let feature_rows = io::read_features(features_path)?;
    let ds = Dataset::from_feature_vectors(&feature_rows);
    if ds.distinct_groups().len() < 2 {
        return Err(CliError::Usage(format!(
            "LOSO evaluation needs at least 2 subjects, found {}",
            ds.distinct_groups().len()
        )));
    }
    if !ds.has_both_classes() {
        eprintln!("warning: degenerate class distribution; the report will be partial");
    }
    let ml_report = ml::loso_evaluate(&ds, &cfg.ml, cfg.seed)?;
    for w in &ml_report.warnings {
        eprintln!("warning: {w}");
    }
    if !ml_report.audit_ok {
        return Err(CliError::Data("leakage audit failed".into()));
    }
    let baseline = match baseline_labels {
        Some(path) => Some(rep::baseline_summary(&feature_rows, &io::read_labels(path)?)?),
        None => None,
    };
    let comparison = rep::ComparisonReport {
        welch: rep::welch_table(&ds),
        selection_tracking: rep::selection_tracking(&ml_report),
        ml: ml_report,
        baseline,
    };
    io::write_json_value(out, &comparison, &meta)?;
    io::write_report_folds_csv(&sibling(out, "folds.csv"), &comparison.ml, &meta)?;
    write_welch_csv(&sibling(out, "welch.csv"), &comparison.welch, &meta)?;
    write_selection_csv(&sibling(out, "selection.csv"), &comparison.selection_tracking, &meta)?;
    print!("{}", rep::render_text(&comparison));
    println!("report -> {}", out.display());
    Ok(())
}

/// `report.json` -> `report_folds.csv` and friends.
fn sibling(out: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}_{suffix}"))
}

fn write_welch_csv(path: &Path, rows: &[rep::FeatureTest], meta: &RunMeta) -> Result<(), CliError> {
    let mut body = String::from("feature_index,name,t,p\n");
    for r in rows {
        body.push_str(&format!("{},{},{},{}\n", r.index, r.name, r.t, r.p));
    }
    write_csv(path, meta, &body)
}

fn write_selection_csv(
    path: &Path,
    rows: &[rep::SelectionTrackingRow],
    meta: &RunMeta,
) -> Result<(), CliError> {
    let mut body = String::from("feature_index,name,folds_selected,total_folds\n");
    for r in rows {
        body.push_str(&format!(
            "{},{},{},{}\n",
            r.index, r.name, r.folds_selected, r.total_folds
        ));
    }
    write_csv(path, meta, &body)
}

fn write_csv(path: &Path, meta: &RunMeta, body: &str) -> Result<(), CliError> {
    let text = format!(
        "# tool_version={}\n# config_hash={}\n# master_seed={}\n# feature_map_version={}\n{body}",
        meta.tool_version, meta.config_hash, meta.master_seed, meta.feature_map_version
    );
    std::fs::write(path, text).map_err(|e| CliError::Data(e.to_string()))
}

pub fn cmd_train(cfg: &RunConfig, features_path: &Path, out: &Path) -> CmdResult {
    let meta = cfg.meta();
    let rows = io::read_features(features_path)?;
    let ds = Dataset::from_feature_vectors(&rows);
    let model = ml::train_full(&ds, &cfg.ml, cfg.seed)?;
    io::write_model(out, &model, &meta)?;
    println!(
        "trained {} model on {} rows ({} features selected) -> {}",
        cfg.ml.classifier,
        ds.n_rows(),
        model.selected_features.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_detect(cfg: &RunConfig, model_path: &Path, signal_path: &Path, out: &Path) -> CmdResult {
    let meta = cfg.meta();
    let model = io::read_model(model_path)?;
    if model.feature_map_version != FEATURE_MAP_VERSION {
        return Err(CliError::Data(format!(
            "feature-map version mismatch: model {} vs tool {}",
            model.feature_map_version, FEATURE_MAP_VERSION
        )));
    }
    let ts = ensure_working_rate(io::read_signal(signal_path)?, cfg.synth.fs)?;
    let extracted = features::extract_record(&ts, cfg.win_sec).map_err(feature_error)?;
    let mut rows = Vec::new();
    if !extracted.is_empty() {
        let values: Vec<Vec<f64>> = extracted.iter().map(|(_, v)| v.clone()).collect();
        let preds = model.predict(&values)?;
        for ((window, _), pred) in extracted.iter().zip(preds) {
            rows.push(LabelRow {
                subject_id: ts.subject_id.clone(),
                window_index: window.index,
                r: None,
                label: if pred == ml::NOISY {
                    QualityLabel::Noisy
                } else {
                    QualityLabel::Clean
                },
                method: format!("model:{}", model.classifier),
            });
        }
    }
    io::write_labels(out, &rows, &meta)?;
    let noisy = rows.iter().filter(|r| r.label == QualityLabel::Noisy).count();
    println!(
        "detected {} noisy of {} windows -> {}",
        noisy,
        rows.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_report(report_path: &Path) -> CmdResult {
    let comparison: rep::ComparisonReport = io::read_json_value(report_path)?;
    print!("{}", rep::render_text(&comparison));
    Ok(())
}
