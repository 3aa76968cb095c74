//! Per-document lexical metrics and their median/IQR over a corpus.
//!
//! cargo run --example corpus_metrics

use forge::analytics::{self, AnalysisOptions, LexicalResources};
use forge::PipelineConfig;

const STOPWORDS: &[&str] = &[
    "a", "o", "as", "os", "um", "uma", "de", "do", "da", "dos", "das", "em", "no", "na", "nos", "nas", "por", "para",
    "com", "e", "que", "se", "mas", "ou", "ao", "à",
];

fn main() -> forge::Result<()> {
    let cfg = PipelineConfig::default();
    let docs = forge::synth::portuguese_documents(200, 6, "blogs");

    // A frequency list built from the corpus itself stands in for a
    // reference database.
    let mut counts = std::collections::HashMap::<String, u64>::new();
    for d in &docs {
        for t in analytics::word_tokens(&d.text) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut res = LexicalResources::from_stopwords(STOPWORDS);
    res.set_frequency_list(ranked, 50);

    let one = analytics::doc_metrics(&docs[0], &res, cfg.hdd_sample_size).expect("document has words");
    println!("{}: {}", one.doc_id, serde_json::to_string(&one).unwrap());

    let opts = AnalysisOptions {
        corpus: "synthetic".into(),
        fraction: 0.5,
        seed: 7,
        logprobs: None,
    };
    let analysis = analytics::analyze(docs.into_iter().map(Ok), &res, &cfg, &opts)?;
    println!(
        "sampled {} of {} documents",
        analysis.summary.docs_sampled, analysis.summary.docs_seen
    );
    for m in &analysis.summary.metrics {
        println!(
            "{:<16} median {:>10.4}  IQR [{:.4}, {:.4}]",
            m.metric, m.median, m.q1, m.q3
        );
    }

    let lps = [("doc", &[-0.7, -1.2, -0.1][..])];
    println!(
        "perplexity of a three-token sample: {:.3}",
        analytics::perplexity_from_logprobs(lps)?
    );
    Ok(())
}
