//! Train character n-gram profiles for two languages and filter a small
//! corpus down to Portuguese.
//!
//! cargo run --example langid_profiles

use forge::langid::{filter_by_language, train_profile, LanguageIdentifier};
use forge::synth::{self, Lang};
use forge::PipelineConfig;

fn main() -> forge::Result<()> {
    let cfg = PipelineConfig::default();
    let (pt, en) = synth::langid_training(1000, 1);
    let identifier = LanguageIdentifier::new(vec![
        train_profile("por", &pt, cfg.ngram_order)?,
        train_profile("eng", &en, cfg.ngram_order)?,
    ])?;

    for text in [
        "O menino comprou um livro na feira.",
        "The old river carried the boat home.",
    ] {
        let s = identifier.score(text);
        println!("{:<40} -> {} ({:.3})", text, s.label, s.confidence);
    }

    let mut docs = synth::portuguese_documents(8, 2, "blogs");
    docs.extend(synth::english_documents(4, 3, "blogs"));
    let (kept, report) = filter_by_language(docs, &cfg, &identifier)?;
    println!(
        "kept {} of {} documents ({}%), drops {:?}",
        kept.len(),
        report.docs_in,
        report.retention_pct,
        report.drop_reasons
    );
    assert!(kept.iter().all(|d| d.id.starts_with("pt-")));

    let sample = synth::sentences(Lang::English, 1, 9).remove(0);
    println!("english sample scored as {:?}", identifier.score(&sample).label);
    Ok(())
}
