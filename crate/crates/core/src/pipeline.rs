//! Stage orchestration over sharded corpora.
//!
//! [`run_pipeline`] applies language filtering, near-duplicate removal and
//! quality filtering in that order, streaming the input twice: the first
//! pass scores languages and computes MinHash signatures, the LSH index is
//! then resolved in one reduce step, and the second pass applies the quality
//! rules and writes the surviving documents. Each stage can also be run on
//! its own ([`run_langid_stage`], [`run_dedup_stage`], [`run_quality_stage`]);
//! chaining them gives the same shards as the full run.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::dedup::{Deduplicator, LshIndex, MinHashSignature, NEAR_DUPLICATE};
use crate::document::Document;
use crate::error::{ForgeError, Result};
use crate::ingest::{resolve_inputs, DocBatches, ShardWriter, MANIFEST_FILE};
use crate::langid::{check_scorer, language_verdict, LanguageScore, LanguageScorer};
use crate::quality::{DocVerdict, QualityFilter};
use crate::report::{Percent, Stage, StageOutcome, StageReport, StageTally};

pub const REPORT_FILE: &str = "report.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const STAGE_REPORT_FILE: &str = "stage_report.json";

const BATCH: usize = 2048;

/// Optional side outputs shared by the stage runners.
#[derive(Debug, Clone, Default)]
pub struct Emit {
    /// One MinHash signature per document entering deduplication.
    pub signatures: Option<PathBuf>,
    /// One verdict line per input document.
    pub verdicts: Option<PathBuf>,
}

/// Per-document decision written by `--emit-verdicts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub source: String,
    /// Stage that dropped the document, or the last stage applied if kept.
    pub stage: Stage,
    pub kept: bool,
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub language: Option<LanguageScore>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quality: Option<DocVerdict>,
}

struct JsonLines {
    out: BufWriter<File>,
    path: PathBuf,
}

impl JsonLines {
    fn create(path: Option<&Path>) -> Result<Option<Self>> {
        let Some(path) = path else { return Ok(None) };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| ForgeError::io(parent, e))?;
        }
        let file = File::create(path).map_err(|e| ForgeError::io(path, e))?;
        Ok(Some(Self {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        }))
    }

    fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value).map_err(|e| ForgeError::io(&self.path, e.into()))?;
        self.out.write_all(b"\n").map_err(|e| ForgeError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| ForgeError::io(&self.path, e))
    }
}

fn write_opt<T: Serialize>(w: &mut Option<JsonLines>, value: impl FnOnce() -> T) -> Result<()> {
    match w {
        Some(w) => w.write(&value()),
        None => Ok(()),
    }
}

fn finish_opt(w: Option<JsonLines>) -> Result<()> {
    w.map_or(Ok(()), JsonLines::finish)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(value).expect("report serializes");
    json.push(b'\n');
    std::fs::write(path, json).map_err(|e| ForgeError::io(path, e))
}

fn score_batch(batch: &[Document], scorer: &dyn LanguageScorer) -> Result<Vec<LanguageScore>> {
    batch.par_iter().map(|d| scorer.score_document(d)).collect()
}

/// State of the dedup map/reduce: signatures go in during a scan, and
/// resolution yields one removal flag per scanned document.
struct DedupScan<'a> {
    dedup: &'a Deduplicator,
    index: LshIndex,
    /// Scanned-document ordinal of each index entry.
    entry_doc: Vec<usize>,
    entry_shingles: Vec<Vec<u64>>,
    scanned: usize,
}

impl<'a> DedupScan<'a> {
    fn new(dedup: &'a Deduplicator) -> Self {
        Self {
            dedup,
            index: LshIndex::new(dedup.hasher().num_bands()),
            entry_doc: Vec::new(),
            entry_shingles: Vec::new(),
            scanned: 0,
        }
    }

    /// Signatures for `docs`, computed in parallel and indexed in order.
    fn add(&mut self, docs: &[&Document], emit: &mut Option<JsonLines>) -> Result<()> {
        let verify = self.dedup.verify_threshold().is_some();
        let prepared: Vec<(Option<MinHashSignature>, Vec<u64>)> = docs
            .par_iter()
            .map(|d| {
                let sh = self.dedup.shingles(d);
                let sig = self.dedup.signature_from_shingles(&d.id, &sh);
                (sig, if verify { sh } else { Vec::new() })
            })
            .collect();
        for (sig, sh) in prepared {
            if let Some(sig) = sig {
                write_opt(emit, || &sig)?;
                self.index.insert(sig.doc_id, &sig.bands)?;
                self.entry_doc.push(self.scanned);
                if verify {
                    self.entry_shingles.push(sh);
                }
            }
            self.scanned += 1;
        }
        Ok(())
    }

    fn resolve(self) -> Result<Vec<bool>> {
        let resolution = match self.dedup.verify_threshold() {
            None => self.index.resolve()?,
            Some(t) => {
                let shingles = &self.entry_shingles;
                let verify = |a: usize, b: usize| crate::dedup::jaccard_sorted(&shingles[a], &shingles[b]) >= t;
                self.index.resolve_with(&verify)?
            }
        };
        let mut removed = vec![false; self.scanned];
        for (entry, &doc) in self.entry_doc.iter().enumerate() {
            removed[doc] = resolution.removed[entry];
        }
        log::info!(
            "dedup: {} clusters, {} documents removed",
            resolution.clusters.clusters.len(),
            resolution.clusters.removed_count()
        );
        Ok(removed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRetention {
    pub source: String,
    pub original_docs: u64,
    pub final_docs: u64,
    pub retention_pct: Percent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub incomplete: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub config_hash: String,
    /// Stage totals in execution order.
    pub stages: Vec<StageReport>,
    /// The same stages split by source.
    pub stage_breakdown: Vec<StageReport>,
    pub per_source: Vec<SourceRetention>,
    /// Seconds per pass. Kept out of `report.json` so reports stay
    /// byte-identical across runs; written to `timings.json` instead.
    #[serde(skip)]
    pub wall_time_per_stage: BTreeMap<String, f64>,
}

impl PipelineReport {
    /// Assembles a report from consecutive stage outcomes.
    pub fn from_outcomes(outcomes: &[StageOutcome], config_hash: &str) -> Result<Self> {
        for pair in outcomes.windows(2) {
            if pair[1].total.docs_in != pair[0].total.docs_out {
                return Err(ForgeError::data(format!(
                    "stage reports do not chain: {} kept {} documents but {} received {}",
                    pair[0].total.stage.name(),
                    pair[0].total.docs_out,
                    pair[1].total.stage.name(),
                    pair[1].total.docs_in
                )));
            }
        }
        let per_source = match (outcomes.first(), outcomes.last()) {
            (Some(first), Some(last)) => first
                .by_source
                .iter()
                .map(|r| {
                    let final_docs = last
                        .by_source
                        .iter()
                        .find(|l| l.source == r.source)
                        .map_or(0, |l| l.docs_out);
                    SourceRetention {
                        source: r.source.clone(),
                        original_docs: r.docs_in,
                        final_docs,
                        retention_pct: Percent::of(final_docs, r.docs_in),
                    }
                })
                .collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            incomplete: false,
            error: None,
            config_hash: config_hash.to_string(),
            stages: outcomes.iter().map(|o| o.total.clone()).collect(),
            stage_breakdown: outcomes.iter().flat_map(|o| o.by_source.iter().cloned()).collect(),
            per_source,
            wall_time_per_stage: BTreeMap::new(),
        })
    }

    /// Writes `report.json` and `timings.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        std::fs::write(dir.join(REPORT_FILE), emit_report(self, ReportFormat::Json)?)
            .map_err(|e| ForgeError::io(dir.join(REPORT_FILE), e))?;
        write_json(&dir.join(TIMINGS_FILE), &self.wall_time_per_stage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!("unknown report format {other:?} (expected json or markdown)")),
        }
    }
}

/// Serializes a report. Markdown needs a complete report; JSON carries the
/// `incomplete` flag instead.
pub fn emit_report(report: &PipelineReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut json = serde_json::to_vec_pretty(report).expect("report serializes");
            json.push(b'\n');
            Ok(json)
        }
        ReportFormat::Markdown => {
            if report.incomplete {
                return Err(ForgeError::data("cannot render an incomplete report as markdown"));
            }
            let mut s = String::new();
            s.push_str("| Dataset | # Original Documents | # Final Documents | Retention (%) |\n");
            s.push_str("|---|---:|---:|---:|\n");
            for r in &report.per_source {
                s.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    r.source, r.original_docs, r.final_docs, r.retention_pct
                ));
            }
            if !report.stages.is_empty() {
                s.push_str("\n| Stage | Documents In | Documents Out | Retention (%) | Drops |\n");
                s.push_str("|---|---:|---:|---:|---|\n");
                for st in &report.stages {
                    let drops: Vec<String> = st.drop_reasons.iter().map(|(k, v)| format!("{k}: {v}")).collect();
                    s.push_str(&format!(
                        "| {} | {} | {} | {} | {} |\n",
                        st.stage.name(),
                        st.docs_in,
                        st.docs_out,
                        st.retention_pct,
                        drops.join(", ")
                    ));
                }
            }
            Ok(s.into_bytes())
        }
    }
}

/// Writes the per-stage report of a standalone stage run.
fn finish_stage(dir: &Path, tally: &StageTally) -> Result<StageOutcome> {
    let outcome = StageOutcome::from(tally);
    write_json(&dir.join(STAGE_REPORT_FILE), &outcome)?;
    Ok(outcome)
}

pub fn load_stage_outcome(dir: &Path) -> Result<StageOutcome> {
    let path = dir.join(STAGE_REPORT_FILE);
    let bytes = std::fs::read(&path).map_err(|e| ForgeError::io(&path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| ForgeError::data(format!("bad {}: {e}", path.display())))
}

/// Rebuilds the full report from standalone stage directories, in stage order.
pub fn report_from_stage_dirs(dirs: &[PathBuf]) -> Result<PipelineReport> {
    let outcomes = dirs.iter().map(|d| load_stage_outcome(d)).collect::<Result<Vec<_>>>()?;
    let last = dirs
        .last()
        .ok_or_else(|| ForgeError::data("no stage directories given"))?;
    let manifest = crate::ingest::CorpusManifest::load(&last.join(MANIFEST_FILE))?;
    PipelineReport::from_outcomes(&outcomes, &manifest.config_hash)
}

/// Language filtering on its own.
pub fn run_langid_stage(
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    out_dir: &Path,
    scorer: &dyn LanguageScorer,
    emit: &Emit,
) -> Result<StageOutcome> {
    check_scorer(scorer, cfg)?;
    let inputs = &resolve_inputs(inputs)?;
    let mut writer = ShardWriter::create(out_dir, Stage::Langid.name(), cfg.max_docs_per_shard, cfg.config_hash())?;
    let mut verdicts = JsonLines::create(emit.verdicts.as_deref())?;
    let mut tally = StageTally::new(Stage::Langid);
    let mut batches = DocBatches::new(inputs, BATCH);
    while let Some(batch) = batches.next_batch()? {
        let scores = score_batch(&batch, scorer)?;
        for (doc, score) in batch.iter().zip(scores) {
            let reason = language_verdict(&score, cfg);
            match reason {
                None => {
                    tally.keep(&doc.source);
                    writer.push(doc)?;
                }
                Some(r) => tally.drop(&doc.source, r),
            }
            write_opt(&mut verdicts, || Verdict {
                id: doc.id.clone(),
                source: doc.source.clone(),
                stage: Stage::Langid,
                kept: reason.is_none(),
                reason: reason.map(str::to_string),
                language: Some(score),
                quality: None,
            })?;
        }
    }
    writer.finish()?;
    finish_opt(verdicts)?;
    finish_stage(out_dir, &tally)
}

/// Near-duplicate removal on its own (two passes over the input).
pub fn run_dedup_stage(cfg: &PipelineConfig, inputs: &[PathBuf], out_dir: &Path, emit: &Emit) -> Result<StageOutcome> {
    let dedup = Deduplicator::new(cfg)?;
    let inputs = &resolve_inputs(inputs)?;
    let mut scan = DedupScan::new(&dedup);
    let mut signatures = JsonLines::create(emit.signatures.as_deref())?;
    let mut batches = DocBatches::new(inputs, BATCH);
    while let Some(batch) = batches.next_batch()? {
        let refs: Vec<&Document> = batch.iter().collect();
        scan.add(&refs, &mut signatures)?;
    }
    finish_opt(signatures)?;
    let removed = scan.resolve()?;

    let mut writer = ShardWriter::create(out_dir, Stage::Dedup.name(), cfg.max_docs_per_shard, cfg.config_hash())?;
    let mut verdicts = JsonLines::create(emit.verdicts.as_deref())?;
    let mut tally = StageTally::new(Stage::Dedup);
    let mut batches = DocBatches::new(inputs, BATCH);
    let mut ordinal = 0usize;
    while let Some(batch) = batches.next_batch()? {
        for doc in &batch {
            let gone = *removed
                .get(ordinal)
                .ok_or_else(|| ForgeError::data("input changed between dedup passes"))?;
            ordinal += 1;
            if gone {
                tally.drop(&doc.source, NEAR_DUPLICATE);
            } else {
                tally.keep(&doc.source);
                writer.push(doc)?;
            }
            write_opt(&mut verdicts, || Verdict {
                id: doc.id.clone(),
                source: doc.source.clone(),
                stage: Stage::Dedup,
                kept: !gone,
                reason: gone.then(|| NEAR_DUPLICATE.to_string()),
                language: None,
                quality: None,
            })?;
        }
    }
    if ordinal != removed.len() {
        return Err(ForgeError::data("input changed between dedup passes"));
    }
    writer.finish()?;
    finish_opt(verdicts)?;
    finish_stage(out_dir, &tally)
}

/// Quality filtering on its own.
pub fn run_quality_stage(
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    out_dir: &Path,
    emit: &Emit,
) -> Result<StageOutcome> {
    let filter = QualityFilter::new(cfg);
    let inputs = &resolve_inputs(inputs)?;
    let mut writer = ShardWriter::create(
        out_dir,
        Stage::Quality.name(),
        cfg.max_docs_per_shard,
        cfg.config_hash(),
    )?;
    let mut verdicts = JsonLines::create(emit.verdicts.as_deref())?;
    let mut tally = StageTally::new(Stage::Quality);
    let mut batches = DocBatches::new(inputs, BATCH);
    while let Some(batch) = batches.next_batch()? {
        let sources: Vec<String> = batch.iter().map(|d| d.source.clone()).collect();
        let judged: Vec<(Option<Document>, DocVerdict)> = batch.into_par_iter().map(|d| filter.apply(d)).collect();
        for ((kept, verdict), source) in judged.into_iter().zip(sources) {
            apply_quality(&mut tally, &mut writer, &mut verdicts, kept, verdict, source, None)?;
        }
    }
    writer.finish()?;
    finish_opt(verdicts)?;
    finish_stage(out_dir, &tally)
}

fn apply_quality(
    tally: &mut StageTally,
    writer: &mut ShardWriter,
    verdicts: &mut Option<JsonLines>,
    kept: Option<Document>,
    verdict: DocVerdict,
    source: String,
    language: Option<LanguageScore>,
) -> Result<()> {
    let reason = verdict.reason.map(|r| r.as_str());
    match (&kept, reason) {
        (Some(doc), _) => {
            tally.keep(&source);
            writer.push(doc)?;
        }
        (None, r) => tally.drop(&source, r.unwrap_or("rejected")),
    }
    write_opt(verdicts, || Verdict {
        id: verdict.doc_id.clone(),
        source,
        stage: Stage::Quality,
        kept: kept.is_some(),
        reason: reason.map(str::to_string),
        language,
        quality: Some(verdict.clone()),
    })
}

/// Runs language filtering, deduplication and quality filtering over
/// `inputs`, writing the surviving shards, `manifest.json`, `report.json`
/// and `timings.json` to `out_dir`. On failure a report flagged incomplete
/// is written before the error is returned.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    out_dir: &Path,
    scorer: &dyn LanguageScorer,
    emit: &Emit,
) -> Result<PipelineReport> {
    let mut progress = Progress {
        outcomes: Vec::new(),
        timings: BTreeMap::new(),
    };
    match run_stages(cfg, inputs, out_dir, scorer, emit, &mut progress) {
        Ok(()) => {
            let mut report = PipelineReport::from_outcomes(&progress.outcomes, &cfg.config_hash())?;
            report.wall_time_per_stage = progress.timings;
            report.write(out_dir)?;
            Ok(report)
        }
        Err(e) => {
            let partial = PipelineReport::from_outcomes(&progress.outcomes, &cfg.config_hash());
            if let Ok(mut report) = partial {
                report.incomplete = true;
                report.error = Some(e.to_string());
                report.wall_time_per_stage = progress.timings;
                if let Err(write_err) = report.write(out_dir) {
                    log::warn!("could not write partial report: {write_err}");
                }
            }
            Err(e)
        }
    }
}

struct Progress {
    outcomes: Vec<StageOutcome>,
    timings: BTreeMap<String, f64>,
}

fn run_stages(
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    out_dir: &Path,
    scorer: &dyn LanguageScorer,
    emit: &Emit,
    progress: &mut Progress,
) -> Result<()> {
    check_scorer(scorer, cfg)?;
    let inputs = &resolve_inputs(inputs)?;
    let dedup = Deduplicator::new(cfg)?;
    let filter = QualityFilter::new(cfg);
    let keep_scores = emit.verdicts.is_some();

    // Pass 1: language verdicts and signatures of the documents that pass.
    let t = Instant::now();
    let mut lang_tally = StageTally::new(Stage::Langid);
    let mut lang_dropped: Vec<bool> = Vec::new();
    let mut scores: Vec<LanguageScore> = Vec::new();
    let mut scan = DedupScan::new(&dedup);
    let mut signatures = JsonLines::create(emit.signatures.as_deref())?;
    let mut batches = DocBatches::new(inputs, BATCH);
    while let Some(batch) = batches.next_batch()? {
        let batch_scores = score_batch(&batch, scorer)?;
        let mut passed = Vec::with_capacity(batch.len());
        for (doc, score) in batch.iter().zip(batch_scores) {
            match language_verdict(&score, cfg) {
                None => {
                    lang_tally.keep(&doc.source);
                    passed.push(doc);
                    lang_dropped.push(false);
                }
                Some(r) => {
                    lang_tally.drop(&doc.source, r);
                    lang_dropped.push(true);
                }
            }
            if keep_scores {
                scores.push(score);
            }
        }
        scan.add(&passed, &mut signatures)?;
    }
    finish_opt(signatures)?;
    progress.outcomes.push(StageOutcome::from(&lang_tally));
    progress
        .timings
        .insert("langid_and_signatures".into(), t.elapsed().as_secs_f64());

    // Reduce: one logical writer builds and resolves the band index.
    let t = Instant::now();
    let removed = scan.resolve()?;
    progress
        .timings
        .insert("dedup_reduce".into(), t.elapsed().as_secs_f64());

    // Pass 2: drop duplicates, apply quality rules, write survivors.
    let t = Instant::now();
    let mut dedup_tally = StageTally::new(Stage::Dedup);
    let mut quality_tally = StageTally::new(Stage::Quality);
    let mut writer = ShardWriter::create(
        out_dir,
        Stage::Quality.name(),
        cfg.max_docs_per_shard,
        cfg.config_hash(),
    )?;
    let mut verdicts = JsonLines::create(emit.verdicts.as_deref())?;
    let mut batches = DocBatches::new(inputs, BATCH);
    let mut ordinal = 0usize;
    let mut scanned = 0usize;
    let changed = || ForgeError::data("input changed between pipeline passes");
    while let Some(batch) = batches.next_batch()? {
        let mut survivors = Vec::with_capacity(batch.len());
        for doc in batch {
            let g = ordinal;
            ordinal += 1;
            if *lang_dropped.get(g).ok_or_else(changed)? {
                write_opt(&mut verdicts, || {
                    let score = scores[g].clone();
                    Verdict {
                        id: doc.id.clone(),
                        source: doc.source.clone(),
                        stage: Stage::Langid,
                        kept: false,
                        reason: language_verdict(&score, cfg).map(str::to_string),
                        language: Some(score),
                        quality: None,
                    }
                })?;
                continue;
            }
            let gone = *removed.get(scanned).ok_or_else(changed)?;
            scanned += 1;
            if gone {
                dedup_tally.drop(&doc.source, NEAR_DUPLICATE);
                write_opt(&mut verdicts, || Verdict {
                    id: doc.id.clone(),
                    source: doc.source.clone(),
                    stage: Stage::Dedup,
                    kept: false,
                    reason: Some(NEAR_DUPLICATE.to_string()),
                    language: Some(scores[g].clone()),
                    quality: None,
                })?;
            } else {
                dedup_tally.keep(&doc.source);
                survivors.push((g, doc));
            }
        }
        let judged: Vec<(usize, String, (Option<Document>, DocVerdict))> = survivors
            .into_par_iter()
            .map(|(g, d)| {
                let source = d.source.clone();
                (g, source, filter.apply(d))
            })
            .collect();
        for (g, source, (kept, verdict)) in judged {
            let language = keep_scores.then(|| scores[g].clone());
            apply_quality(
                &mut quality_tally,
                &mut writer,
                &mut verdicts,
                kept,
                verdict,
                source,
                language,
            )?;
        }
    }
    if ordinal != lang_dropped.len() || scanned != removed.len() {
        return Err(changed());
    }
    progress.outcomes.push(StageOutcome::from(&dedup_tally));
    progress.outcomes.push(StageOutcome::from(&quality_tally));
    writer.finish()?;
    finish_opt(verdicts)?;
    progress
        .timings
        .insert("quality_and_write".into(), t.elapsed().as_secs_f64());
    Ok(())
}
