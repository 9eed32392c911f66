//! Game-record datasets: streaming statistics, legality validation, and
//! export to a JSON-lines training set.
//!
//! Each exported line is one object with the fields `fen`, `side` (`"red"`
//! or `"black"`), `target` (ICCS), `action_index` and `z`, plus an optional
//! `pi` list of `[action_index, probability]` pairs for search targets.
//! Planes are re-derived from the FEN on load. A sidecar
//! `<out>.manifest.json` lists the sources, counts and the SHA-256 of the
//! dataset bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoding::{
    decode_action, decode_state, encode_action, encode_state, ActionIndex, SIDE_CHANNEL,
};
use crate::evaluator::{PolicyTarget, TrainingExample};
use crate::notation::{
    emit_fen, emit_iccs_move, parse_fen, parse_iccs_move, NotationError, RecordOptions,
    RecordReader, RecordResult,
};
use crate::selfplay::{cloning_examples, SelfPlayError};

/// Number of parse-error locations kept in [`CorpusStats`].
pub const MAX_ERROR_LOCATIONS: usize = 10;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    BadExample {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorLocation {
    pub path: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub games: usize,
    pub total_moves: usize,
    pub red_wins: usize,
    pub black_wins: usize,
    pub draws: usize,
    pub unknown_results: usize,
    pub parse_errors: usize,
    /// The first few parse errors, in input order.
    pub error_locations: Vec<ErrorLocation>,
}

impl CorpusStats {
    /// Result categories sum to the game count.
    pub fn is_conserved(&self) -> bool {
        self.red_wins + self.black_wins + self.draws + self.unknown_results == self.games
    }

    /// Combines stats of consecutive inputs.
    pub fn merge(&mut self, other: CorpusStats) {
        self.games += other.games;
        self.total_moves += other.total_moves;
        self.red_wins += other.red_wins;
        self.black_wins += other.black_wins;
        self.draws += other.draws;
        self.unknown_results += other.unknown_results;
        self.parse_errors += other.parse_errors;
        for loc in other.error_locations {
            if self.error_locations.len() < MAX_ERROR_LOCATIONS {
                self.error_locations.push(loc);
            }
        }
    }

    fn note_error(&mut self, path: &Path, line: usize, message: String) {
        self.parse_errors += 1;
        if self.error_locations.len() < MAX_ERROR_LOCATIONS {
            self.error_locations.push(ErrorLocation {
                path: path.display().to_string(),
                line,
                message,
            });
        }
    }
}

fn error_line(err: &NotationError, fallback: usize) -> usize {
    match err {
        NotationError::Syntax { line, .. } => *line,
        _ => fallback,
    }
}

fn open_records(
    path: &Path,
    options: RecordOptions,
) -> Result<RecordReader<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(RecordReader::with_options(BufReader::new(file), options))
}

/// Tallies records across files without holding more than one record in memory.
pub fn scan_corpus<P: AsRef<Path>>(
    paths: &[P],
    options: RecordOptions,
) -> Result<CorpusStats, CorpusError> {
    let mut stats = CorpusStats::default();
    for path in paths {
        let path = path.as_ref();
        let mut reader = open_records(path, options)?;
        while let Some(item) = reader.next() {
            match item {
                Ok(record) => {
                    stats.games += 1;
                    stats.total_moves += record.moves.len();
                    match record.result {
                        RecordResult::RedWin => stats.red_wins += 1,
                        RecordResult::BlackWin => stats.black_wins += 1,
                        RecordResult::Draw => stats.draws += 1,
                        RecordResult::Unknown => stats.unknown_results += 1,
                    }
                }
                Err(NotationError::Io(source)) => {
                    return Err(CorpusError::Io {
                        path: path.to_path_buf(),
                        source,
                    })
                }
                Err(e) => {
                    let line = error_line(&e, reader.line());
                    stats.note_error(path, line, e.to_string());
                }
            }
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RecordOutcome {
    Legal { moves: usize },
    Illegal { ply: usize, mv: String },
    Syntax { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordValidation {
    pub path: String,
    /// Zero-based position of the record within its file.
    pub index: usize,
    /// Last line read when the record finished.
    pub line: usize,
    pub outcome: RecordOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub records: Vec<RecordValidation>,
    pub legal: usize,
    pub illegal: usize,
    pub syntax_errors: usize,
}

impl ValidationReport {
    /// Legal share of the records that parsed; `None` when none did.
    pub fn legality_rate(&self) -> Option<f64> {
        let parsed = self.legal + self.illegal;
        (parsed > 0).then(|| self.legal as f64 / parsed as f64)
    }
}

/// Replays every record and reports the first illegal ply of each.
pub fn validate_corpus<P: AsRef<Path>>(
    paths: &[P],
    options: RecordOptions,
) -> Result<ValidationReport, CorpusError> {
    let mut report = ValidationReport::default();
    for path in paths {
        let path = path.as_ref();
        let mut reader = open_records(path, options)?;
        let mut index = 0;
        while let Some(item) = reader.next() {
            let outcome = match item {
                Ok(record) => match cloning_examples(&record) {
                    Ok(cloned) => RecordOutcome::Legal {
                        moves: cloned.examples.len(),
                    },
                    Err(SelfPlayError::IllegalRecordMove { ply, mv }) => {
                        RecordOutcome::Illegal { ply, mv }
                    }
                    Err(e) => RecordOutcome::Syntax {
                        message: e.to_string(),
                    },
                },
                Err(NotationError::Io(source)) => {
                    return Err(CorpusError::Io {
                        path: path.to_path_buf(),
                        source,
                    })
                }
                Err(e) => RecordOutcome::Syntax {
                    message: e.to_string(),
                },
            };
            match outcome {
                RecordOutcome::Legal { .. } => report.legal += 1,
                RecordOutcome::Illegal { .. } => report.illegal += 1,
                RecordOutcome::Syntax { .. } => report.syntax_errors += 1,
            }
            report.records.push(RecordValidation {
                path: path.display().to_string(),
                index,
                line: reader.line(),
                outcome,
            });
            index += 1;
        }
    }
    Ok(report)
}

/// On-disk form of one training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub fen: String,
    pub side: String,
    pub target: String,
    pub action_index: usize,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<(usize, f64)>>,
}

impl ExampleRecord {
    pub fn from_example(example: &TrainingExample) -> Self {
        let state =
            decode_state(&example.planes).expect("example planes describe a valid position");
        let action = example.target.argmax();
        let pi = match &example.target {
            PolicyTarget::Action(_) => None,
            PolicyTarget::Distribution(d) => Some(d.iter().map(|&(a, p)| (a.value(), p)).collect()),
        };
        ExampleRecord {
            fen: emit_fen(&state),
            side: if example.planes.get(0, 0, SIDE_CHANNEL) == 1.0 {
                "red"
            } else {
                "black"
            }
            .to_string(),
            target: emit_iccs_move(decode_action(action).expect("targets are legal moves")),
            action_index: action.value(),
            z: example.z,
            pi,
        }
    }

    pub fn to_example(&self) -> Result<TrainingExample, String> {
        let state = parse_fen(&self.fen).map_err(|e| e.to_string())?;
        let side_ok = matches!(
            (self.side.as_str(), state.side_to_move()),
            ("red", crate::rules::Color::Red) | ("black", crate::rules::Color::Black)
        );
        if !side_ok {
            return Err(format!("side {:?} disagrees with the FEN", self.side));
        }
        let mv = parse_iccs_move(&self.target).map_err(|e| e.to_string())?;
        let action = encode_action(mv);
        if action.value() != self.action_index {
            return Err(format!(
                "action_index {} does not match target {}",
                self.action_index, self.target
            ));
        }
        let mut legal: Vec<ActionIndex> =
            state.legal_moves().into_iter().map(encode_action).collect();
        legal.sort();
        if !legal.contains(&action) {
            return Err(format!("target {} is illegal in the position", self.target));
        }
        if !(self.z.is_finite() && (-1.0..=1.0).contains(&self.z)) {
            return Err(format!("z {} outside [-1, 1]", self.z));
        }
        let target = match &self.pi {
            None => PolicyTarget::Action(action),
            Some(pairs) => {
                let mut out = Vec::with_capacity(pairs.len());
                for &(a, p) in pairs {
                    let a = ActionIndex::new(a).map_err(|e| e.to_string())?;
                    if !legal.contains(&a) {
                        return Err(format!("pi entry {} is not a legal action", a.value()));
                    }
                    out.push((a, p));
                }
                PolicyTarget::Distribution(out)
            }
        };
        Ok(TrainingExample {
            planes: encode_state(&state),
            target,
            z: self.z,
            legal,
        })
    }
}

/// Writes examples as JSON lines; returns the SHA-256 of the bytes written.
pub fn write_examples<'a, W: Write>(
    out: &mut W,
    examples: impl IntoIterator<Item = &'a TrainingExample>,
) -> std::io::Result<(usize, String)> {
    let mut hasher = Sha256::new();
    let mut count = 0;
    for ex in examples {
        let mut line = serde_json::to_string(&ExampleRecord::from_example(ex))?;
        line.push('\n');
        hasher.update(line.as_bytes());
        out.write_all(line.as_bytes())?;
        count += 1;
    }
    Ok((count, hex::encode(hasher.finalize())))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub path: String,
    pub records: usize,
    pub exported: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub sources: Vec<SourceEntry>,
    pub examples: usize,
    pub records_exported: usize,
    pub records_skipped: usize,
    pub limit: Option<usize>,
    pub sha256: String,
}

/// Exports behavior-cloning examples of every legal record, in file order
/// then ply order, stopping after `limit` examples. Records with syntax
/// errors or illegal moves are skipped whole.
pub fn export_training_set<P: AsRef<Path>>(
    paths: &[P],
    out_path: &Path,
    limit: Option<usize>,
    options: RecordOptions,
) -> Result<ExportManifest, CorpusError> {
    let file = File::create(out_path).map_err(io_err(out_path))?;
    let mut out = BufWriter::new(file);
    let mut hasher = Sha256::new();
    let mut manifest = ExportManifest {
        limit,
        ..ExportManifest::default()
    };
    let cap = limit.unwrap_or(usize::MAX);
    'files: for path in paths {
        let path = path.as_ref();
        let mut entry = SourceEntry {
            path: path.display().to_string(),
            ..SourceEntry::default()
        };
        let mut reader = open_records(path, options)?;
        while manifest.examples < cap {
            let Some(item) = reader.next() else { break };
            entry.records += 1;
            let cloned = match item {
                Ok(record) => cloning_examples(&record).ok(),
                Err(NotationError::Io(source)) => {
                    return Err(CorpusError::Io {
                        path: path.to_path_buf(),
                        source,
                    })
                }
                Err(_) => None,
            };
            let Some(cloned) = cloned else {
                entry.skipped += 1;
                continue;
            };
            let take = cloned.examples.len().min(cap - manifest.examples);
            for ex in &cloned.examples[..take] {
                let mut line = serde_json::to_string(&ExampleRecord::from_example(ex))
                    .expect("example records serialize");
                line.push('\n');
                hasher.update(line.as_bytes());
                out.write_all(line.as_bytes()).map_err(io_err(out_path))?;
            }
            manifest.examples += take;
            entry.exported += 1;
        }
        manifest.records_exported += entry.exported;
        manifest.records_skipped += entry.skipped;
        manifest.sources.push(entry);
        if manifest.examples >= cap {
            break 'files;
        }
    }
    out.flush().map_err(io_err(out_path))?;
    manifest.sha256 = hex::encode(hasher.finalize());
    let manifest_file = manifest_path(out_path);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&manifest_file, text).map_err(io_err(&manifest_file))?;
    Ok(manifest)
}

/// Reads a JSON-lines dataset back into training examples.
pub fn load_training_set(path: &Path) -> Result<Vec<TrainingExample>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CorpusError::BadExample {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: ExampleRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        out.push(record.to_example().map_err(bad)?);
    }
    Ok(out)
}
