//! Generate a synthetic corpus of a given size and time the full filtering
//! pipeline over it.
//!
//! cargo run --release --example throughput [megabytes] [work-dir]

use std::time::Instant;

use forge::langid::{train_profile, LanguageIdentifier};
use forge::pipeline::{run_pipeline, Emit};
use forge::PipelineConfig;

fn peak_rss_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

fn main() -> forge::Result<()> {
    let mut args = std::env::args().skip(1);
    let mb: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let work = args
        .next()
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("forge-throughput"));
    let _ = std::fs::remove_dir_all(&work);

    let t = Instant::now();
    let stats = forge::synth::write_bulk_corpus(&work.join("input"), mb << 20, 3)?;
    println!(
        "generated {} docs, {:.1} MB of text in {:.1}s",
        stats.docs,
        stats.text_bytes as f64 / 1e6,
        t.elapsed().as_secs_f64()
    );

    let cfg = PipelineConfig::default();
    let (pt, en) = forge::synth::langid_training(1000, 1);
    let identifier = LanguageIdentifier::new(vec![
        train_profile("por", &pt, cfg.ngram_order)?,
        train_profile("eng", &en, cfg.ngram_order)?,
    ])?;

    let t = Instant::now();
    let report = run_pipeline(
        &cfg,
        &[work.join("input")],
        &work.join("output"),
        &identifier,
        &Emit::default(),
    )?;
    let secs = t.elapsed().as_secs_f64();
    println!(
        "pipeline: {:.1}s, {:.1} MB/s on {} threads, peak RSS {:.0} MB",
        secs,
        stats.text_bytes as f64 / 1e6 / secs,
        rayon::current_num_threads(),
        peak_rss_mb().unwrap_or(f64::NAN)
    );
    for (stage, s) in &report.wall_time_per_stage {
        println!("  {stage:<24} {s:.2}s");
    }
    for st in &report.stages {
        println!("  {:<8} {} -> {}", st.stage.name(), st.docs_in, st.docs_out);
    }
    Ok(())
}
