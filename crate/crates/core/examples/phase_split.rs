//! Count tokens with a trained tokenizer and split the corpus into three
//! training phases, keeping long documents out of phase 1.
//!
//! cargo run --example phase_split

use forge::bpe::train_bpe;
use forge::phase::{partition_phases, token_counts};
use forge::{Document, PipelineConfig};

fn main() -> forge::Result<()> {
    let cfg = PipelineConfig::default();
    let mut docs = forge::synth::portuguese_documents(2000, 8, "web");
    // A few long documents built by concatenation.
    for i in 0..12 {
        let text: Vec<&str> = docs[i * 10..i * 10 + 10].iter().map(|d| d.text.as_str()).collect();
        docs.push(Document::new(format!("long-{i:02}"), text.join("\n"), "web"));
    }
    let model = train_bpe(docs.iter().take(300).map(|d| d.text.as_str()), 800)?;
    let counts = token_counts(&docs, &model);
    let long = counts.iter().filter(|(_, n)| *n > cfg.long_doc_token_threshold).count();

    let plan = partition_phases(counts, &cfg)?;
    println!("{} tokens, {long} long documents", plan.total_tokens);
    for i in 0..3 {
        println!(
            "phase {}: {:>8} tokens (target {:>10.1}), {} docs",
            i + 1,
            plan.phase_token_totals[i],
            plan.targets[i],
            plan.phase_doc_counts[i]
        );
    }
    assert!(plan.ids(1).all(|id| !id.starts_with("long-")));
    for w in &plan.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
