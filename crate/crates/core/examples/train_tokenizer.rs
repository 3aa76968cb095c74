//! Train a byte-level BPE tokenizer on a synthetic corpus, round-trip some
//! text and save the model.
//!
//! cargo run --example train_tokenizer [output-dir]

use forge::bpe::{train_bpe, BpeModel};

fn main() -> forge::Result<()> {
    let docs = forge::synth::portuguese_documents(300, 5, "wiki");
    let model = train_bpe(docs.iter().map(|d| d.text.as_str()), 1000)?;
    println!(
        "vocabulary: {} tokens, {} merges",
        model.vocab_size(),
        model.merges().len()
    );

    let text = "A cidade preparou uma grande festa para o verão. Ação, coração! 🌞";
    let ids = model.encode(text);
    println!("{} bytes -> {} tokens", text.len(), ids.len());
    assert_eq!(model.decode(&ids)?, text);

    let pieces: Vec<String> = ids
        .iter()
        .take(12)
        .map(|&id| String::from_utf8_lossy(model.token_bytes(id).unwrap()).into_owned())
        .collect();
    println!("first pieces: {pieces:?}");

    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(std::env::temp_dir)
        .join("forge-bpe");
    model.save(&dir)?;
    let reloaded = BpeModel::load(&dir)?;
    assert_eq!(reloaded.encode(text), ids);
    println!("saved to {}", dir.display());
    Ok(())
}
