//! Shingle documents, compute MinHash signatures and resolve near-duplicate
//! clusters through LSH banding.
//!
//! cargo run --example minhash_dedup

use forge::dedup::{dedup_corpus, matching_fraction, shingle, Deduplicator};
use forge::{Document, PipelineConfig};

fn main() -> forge::Result<()> {
    let cfg = PipelineConfig::default();
    let base = forge::synth::portuguese_documents(6, 4, "news");
    let mut docs = base.clone();
    // An exact copy and a lightly edited copy of the first document.
    docs.push(Document::new("copy", base[0].text.clone(), "news"));
    docs.push(Document::new("edited", format!("{} Fim.", base[0].text), "news"));

    let a = shingle(&docs[0], cfg.shingle_size, cfg.master_seed)?;
    let b = shingle(&docs[7], cfg.shingle_size, cfg.master_seed)?;
    let dedup = Deduplicator::new(&cfg)?;
    let (sa, sb) = (dedup.signature(&docs[0]).unwrap(), dedup.signature(&docs[7]).unwrap());
    println!(
        "jaccard {:.3}, signature agreement {:.3} over {} hashes in {} bands",
        a.jaccard(&b),
        matching_fraction(&sa.components, &sb.components),
        cfg.minhash_num_hashes,
        cfg.minhash_num_bands
    );

    let (_, clusters, _) = dedup.find_duplicates(&docs)?;
    for c in &clusters.clusters {
        println!("cluster {:?} keeps {}", c.members, c.kept);
    }

    let (kept, report) = dedup_corpus(docs, &cfg)?;
    println!("{} -> {} documents", report.docs_in, kept.len());
    Ok(())
}
