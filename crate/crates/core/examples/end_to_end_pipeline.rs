//! Write a mixed corpus to shards, run language filtering, deduplication
//! and quality filtering, and print the retention report.
//!
//! cargo run --example end_to_end_pipeline [work-dir]

use forge::ingest::write_shards;
use forge::langid::{train_profile, LanguageIdentifier};
use forge::pipeline::{emit_report, run_pipeline, Emit, ReportFormat};
use forge::PipelineConfig;

fn main() -> forge::Result<()> {
    let work = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("forge-pipeline"));
    let cfg = PipelineConfig {
        max_docs_per_shard: 40,
        ..PipelineConfig::default()
    };

    let (docs, truth) = forge::synth::mixed_fixture(42);
    let input = work.join("input");
    write_shards(docs, &input, 25, "input", "")?;

    let (pt, en) = forge::synth::langid_training(1000, 1);
    let identifier = LanguageIdentifier::new(vec![
        train_profile("por", &pt, cfg.ngram_order)?,
        train_profile("eng", &en, cfg.ngram_order)?,
    ])?;

    let emit = Emit {
        signatures: None,
        verdicts: Some(work.join("verdicts.jsonl")),
    };
    let report = run_pipeline(&cfg, &[input], &work.join("output"), &identifier, &emit)?;
    print!(
        "{}",
        String::from_utf8(emit_report(&report, ReportFormat::Markdown)?).unwrap()
    );
    println!(
        "\nexpected survivors: {}; outputs under {}",
        truth.survivors.len(),
        work.display()
    );
    Ok(())
}
