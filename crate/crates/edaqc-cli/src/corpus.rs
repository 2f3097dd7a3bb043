//! On-disk corpus layout: one directory per subject holding the channel
//! CSVs, ground-truth mask, and event log.

use std::path::{Path, PathBuf};

use edaqc::error::{Error, Result};
use edaqc::io::{self, RunMeta};
use edaqc::labeling::ReviewerMarks;
use edaqc::signal::TimeSeries;
use edaqc::synth::SynthRecord;

pub fn subject_dir(corpus: &Path, subject_id: &str) -> PathBuf {
    corpus.join(subject_id)
}

pub fn write_record(corpus: &Path, rec: &SynthRecord, meta: &RunMeta) -> Result<()> {
    let dir = subject_dir(corpus, &rec.target.subject_id);
    io::write_signal(&dir.join("target.csv"), &rec.target, meta)?;
    io::write_signal(&dir.join("reference.csv"), &rec.reference, meta)?;
    io::write_mask(
        &dir.join("mask.csv"),
        &rec.artifact_mask,
        rec.target.fs,
        rec.target.t0,
        meta,
    )?;
    io::write_events(&dir.join("events.json"), &rec.events, meta)?;
    Ok(())
}

/// Sorted subject directories (those containing a target channel).
pub fn subjects(corpus: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(corpus)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() && path.join("target.csv").is_file() {
            out.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    if out.is_empty() {
        return Err(Error::format(format!(
            "{}: no subject directories with a target.csv found",
            corpus.display()
        )));
    }
    out.sort();
    Ok(out)
}

pub fn read_target(dir: &Path) -> Result<TimeSeries> {
    io::read_signal(&dir.join("target.csv"))
}

pub fn read_reference(dir: &Path) -> Result<TimeSeries> {
    let path = dir.join("reference.csv");
    if !path.is_file() {
        return Err(Error::format(format!(
            "{}: missing reference channel (reference.csv)",
            dir.display()
        )));
    }
    io::read_signal(&path)
}

/// Reviewer marks are optional per subject.
pub fn read_marks(dir: &Path) -> Result<ReviewerMarks> {
    let path = dir.join("marks.json");
    if path.is_file() {
        io::read_marks(&path)
    } else {
        Ok(ReviewerMarks::default())
    }
}
