//! Apply the line filters and document rules, printing why each document
//! was kept or dropped.
//!
//! cargo run --example quality_filters

use forge::quality::QualityFilter;
use forge::{Document, PipelineConfig};

fn main() {
    let filter = QualityFilter::new(&PipelineConfig::default());
    let docs = [
        Document::new(
            "clean",
            "A prefeitura anunciou novas linhas de ônibus.\nO serviço começa na próxima segunda-feira.",
            "news",
        ),
        Document::new(
            "boilerplate",
            "Este site usa cookies para melhorar a experiência.\nfunction() { return 1; }\nO evento reuniu artistas de todo o país.",
            "blogs",
        ),
        Document::new("menu", "Início\nSobre nós\nContato\nBlog de receitas caseiras sem ponto final", "blogs"),
        Document::new("repeated", "Compre agora e ganhe desconto.\nCompre agora e ganhe desconto.", "ads"),
    ];

    for doc in docs {
        let (_, lines) = filter.apply_line_filters(&doc.text);
        for l in lines.iter().filter(|l| !l.kept) {
            println!("  [{}] dropped line {:?}: {:?}", doc.id, l.line, l.reason.unwrap());
        }
        let (kept, verdict) = filter.apply(doc);
        println!(
            "{:<12} kept={:<5} punct={:.2} short={:.2} dup={:.2} reason={:?}",
            verdict.doc_id,
            kept.is_some(),
            verdict.punct_line_ratio,
            verdict.short_line_ratio,
            verdict.dup_line_char_ratio,
            verdict.reason.map(|r| r.as_str())
        );
    }
}
