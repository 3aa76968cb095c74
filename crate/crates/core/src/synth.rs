//! Seeded synthetic corpora for demos, tests and benchmarks.
//!
//! Sentences come from small Portuguese and English grammars, so generated
//! documents are fluent enough for language identification and clean under
//! the quality heuristics, while remaining pairwise dissimilar.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::document::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lang {
    Portuguese,
    English,
}

struct Lexicon {
    dets: &'static [&'static str],
    nouns: &'static [&'static str],
    adjs: &'static [&'static str],
    verbs: &'static [&'static str],
    preps: &'static [&'static str],
    advs: &'static [&'static str],
    conj: &'static [&'static str],
    that: &'static str,
    and: &'static str,
}

const PT: Lexicon = Lexicon {
    dets: &[
        "o", "a", "um", "uma", "este", "aquele", "nosso", "esse", "cada", "outro",
    ],
    nouns: &[
        "casa",
        "cidade",
        "governo",
        "escola",
        "trabalho",
        "família",
        "mercado",
        "projeto",
        "empresa",
        "pesquisa",
        "universidade",
        "história",
        "música",
        "viagem",
        "rio",
        "floresta",
        "praia",
        "estrada",
        "janela",
        "livro",
        "jornal",
        "notícia",
        "economia",
        "saúde",
        "educação",
        "cultura",
        "política",
        "tecnologia",
        "comunidade",
        "professor",
        "estudante",
        "médico",
        "cientista",
        "prefeito",
        "cozinha",
        "jardim",
        "hospital",
        "biblioteca",
        "igreja",
        "festa",
        "feira",
        "praça",
        "bairro",
        "campo",
        "fazenda",
        "lago",
        "montanha",
        "ilha",
        "país",
        "estado",
        "região",
        "população",
        "sociedade",
        "ciência",
        "arte",
        "teatro",
        "cinema",
        "futebol",
        "time",
        "jogo",
        "mesa",
        "cadeira",
        "porta",
        "rua",
        "carro",
        "ônibus",
        "trem",
        "avião",
        "navio",
        "ponte",
        "prédio",
        "loja",
        "banco",
        "dinheiro",
        "preço",
        "imposto",
        "lei",
        "direito",
        "justiça",
        "tribunal",
        "eleição",
        "partido",
        "relatório",
        "reunião",
        "conselho",
        "ministério",
        "programa",
        "sistema",
        "processo",
        "resultado",
        "problema",
        "solução",
        "pergunta",
        "resposta",
        "ideia",
        "opinião",
        "exemplo",
        "momento",
        "semana",
        "manhã",
        "tarde",
        "noite",
        "século",
        "vizinho",
        "criança",
        "senhora",
        "agricultor",
        "pescador",
        "artista",
        "engenheiro",
        "colégio",
        "capital",
        "fronteira",
        "colheita",
        "chuva",
        "seca",
        "energia",
        "água",
        "terra",
        "madeira",
    ],
    adjs: &[
        "novo",
        "antigo",
        "grande",
        "pequeno",
        "importante",
        "público",
        "nacional",
        "regional",
        "moderno",
        "tradicional",
        "brasileiro",
        "principal",
        "difícil",
        "simples",
        "bonito",
        "rápido",
        "forte",
        "recente",
        "histórico",
        "cultural",
        "social",
        "econômico",
        "político",
        "tranquilo",
        "conhecido",
        "longo",
        "curto",
        "necessário",
        "possível",
        "inteiro",
        "próximo",
        "distante",
        "verdadeiro",
        "complicado",
        "barato",
        "caro",
        "feliz",
        "cansado",
        "úmido",
        "quente",
    ],
    verbs: &[
        "apresentou",
        "discutiu",
        "analisou",
        "recebeu",
        "construiu",
        "visitou",
        "descreveu",
        "organizou",
        "defendeu",
        "criticou",
        "publicou",
        "anunciou",
        "mostrou",
        "explicou",
        "encontrou",
        "aprovou",
        "começou",
        "terminou",
        "melhorou",
        "ampliou",
        "reduziu",
        "aumentou",
        "acompanhou",
        "observou",
        "registrou",
        "preparou",
        "escolheu",
        "conheceu",
        "ajudou",
        "transformou",
        "vendeu",
        "comprou",
        "pintou",
        "protegeu",
        "limpou",
        "abandonou",
    ],
    preps: &[
        "para",
        "com",
        "sobre",
        "contra",
        "entre",
        "sem",
        "durante",
        "depois de",
        "antes de",
        "perto de",
        "através de",
        "desde",
        "até",
    ],
    advs: &[
        "ontem",
        "hoje",
        "recentemente",
        "finalmente",
        "novamente",
        "rapidamente",
        "claramente",
        "sempre",
        "também",
        "ainda",
        "durante a semana",
        "no fim do ano",
        "com muito cuidado",
        "sem muita pressa",
        "segundo os moradores",
        "de acordo com o relatório",
        "pela manhã",
        "naquela época",
        "muitas vezes",
        "de novo",
    ],
    conj: &["mas", "porque", "enquanto", "quando", "embora", "pois"],
    that: "que",
    and: "e",
};

const EN: Lexicon = Lexicon {
    dets: &[
        "the", "a", "this", "that", "our", "every", "another", "their", "some", "each",
    ],
    nouns: &[
        "house",
        "city",
        "government",
        "school",
        "work",
        "family",
        "market",
        "project",
        "company",
        "research",
        "university",
        "history",
        "music",
        "journey",
        "river",
        "forest",
        "beach",
        "road",
        "window",
        "book",
        "newspaper",
        "report",
        "economy",
        "health",
        "education",
        "culture",
        "policy",
        "technology",
        "community",
        "teacher",
        "student",
        "doctor",
        "scientist",
        "mayor",
        "kitchen",
        "garden",
        "hospital",
        "library",
        "church",
        "party",
        "fair",
        "square",
        "neighborhood",
        "field",
        "farm",
        "lake",
        "mountain",
        "island",
        "country",
        "state",
        "region",
        "population",
        "society",
        "science",
        "art",
        "theater",
        "cinema",
        "football",
        "team",
        "game",
        "table",
        "chair",
        "door",
        "street",
        "car",
        "bus",
        "train",
        "plane",
        "ship",
        "bridge",
        "building",
        "shop",
        "bank",
        "money",
        "price",
        "tax",
        "law",
        "right",
        "justice",
        "court",
        "election",
        "meeting",
        "council",
        "ministry",
        "program",
        "system",
        "process",
        "result",
        "problem",
        "solution",
        "question",
        "answer",
        "idea",
        "opinion",
        "example",
        "moment",
        "week",
        "morning",
        "afternoon",
        "night",
        "century",
        "neighbor",
        "child",
        "lady",
        "farmer",
        "fisherman",
        "artist",
        "engineer",
        "college",
        "capital",
        "border",
        "harvest",
        "rain",
        "drought",
        "energy",
        "water",
        "land",
        "timber",
    ],
    adjs: &[
        "new",
        "old",
        "large",
        "small",
        "important",
        "public",
        "national",
        "regional",
        "modern",
        "traditional",
        "british",
        "main",
        "difficult",
        "simple",
        "beautiful",
        "fast",
        "strong",
        "recent",
        "historic",
        "cultural",
        "social",
        "economic",
        "political",
        "quiet",
        "known",
        "long",
        "short",
        "necessary",
        "possible",
        "whole",
        "nearby",
        "distant",
        "true",
        "complicated",
        "cheap",
        "expensive",
        "happy",
        "tired",
        "humid",
        "warm",
    ],
    verbs: &[
        "presented",
        "discussed",
        "analyzed",
        "received",
        "built",
        "visited",
        "described",
        "organized",
        "defended",
        "criticized",
        "published",
        "announced",
        "showed",
        "explained",
        "found",
        "approved",
        "started",
        "finished",
        "improved",
        "expanded",
        "reduced",
        "increased",
        "followed",
        "observed",
        "recorded",
        "prepared",
        "chose",
        "knew",
        "helped",
        "transformed",
        "sold",
        "bought",
        "painted",
        "protected",
        "cleaned",
        "abandoned",
    ],
    preps: &[
        "for", "with", "about", "against", "between", "without", "during", "after", "before", "near", "through",
        "since", "until",
    ],
    advs: &[
        "yesterday",
        "today",
        "recently",
        "finally",
        "again",
        "quickly",
        "clearly",
        "always",
        "also",
        "still",
        "during the week",
        "at the end of the year",
        "with great care",
        "without much hurry",
        "according to the residents",
        "according to the report",
        "in the morning",
        "at that time",
        "many times",
        "once more",
    ],
    conj: &["but", "because", "while", "when", "although", "since"],
    that: "that",
    and: "and",
};

fn lexicon(lang: Lang) -> &'static Lexicon {
    match lang {
        Lang::Portuguese => &PT,
        Lang::English => &EN,
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty word list")
}

fn phrase<R: Rng>(rng: &mut R, lx: &Lexicon, out: &mut Vec<&'static str>) {
    out.push(pick(rng, lx.dets));
    out.push(pick(rng, lx.nouns));
    if rng.gen_bool(0.5) {
        out.push(pick(rng, lx.adjs));
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// One sentence, capitalized and terminated with a period.
pub fn sentence<R: Rng>(rng: &mut R, lang: Lang) -> String {
    let lx = lexicon(lang);
    let mut w: Vec<&'static str> = Vec::with_capacity(24);
    match rng.gen_range(0..4) {
        0 => {
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.verbs));
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.preps));
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.advs));
        }
        1 => {
            w.push(pick(rng, lx.advs));
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.verbs));
            phrase(rng, lx, &mut w);
            w.push(lx.and);
            w.push(pick(rng, lx.verbs));
            phrase(rng, lx, &mut w);
        }
        2 => {
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.preps));
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.verbs));
            w.push(lx.that);
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.verbs));
            phrase(rng, lx, &mut w);
        }
        _ => {
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.verbs));
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.conj));
            phrase(rng, lx, &mut w);
            w.push(pick(rng, lx.verbs));
            w.push(pick(rng, lx.advs));
        }
    }
    let mut s = capitalize(&w.join(" "));
    s.push('.');
    s
}

/// `n` sentences from a generator seeded with `seed`.
pub fn sentences(lang: Lang, n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sentence(&mut rng, lang)).collect()
}

/// Multi-line document text whose every line passes the default quality rules.
pub fn paragraph_text<R: Rng>(rng: &mut R, lang: Lang, lines: usize) -> String {
    let mut out: Vec<String> = Vec::with_capacity(lines);
    while out.len() < lines {
        let mut line = sentence(rng, lang);
        if rng.gen_bool(0.4) {
            line.push(' ');
            line.push_str(&sentence(rng, lang));
        }
        if line.chars().count() >= 30 && !out.contains(&line) {
            out.push(line);
        }
    }
    out.join("\n")
}

fn documents(lang: Lang, n: usize, seed: u64, source: &str, prefix: &str) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let lines = rng.gen_range(4..10);
            Document::new(format!("{prefix}{i:05}"), paragraph_text(&mut rng, lang, lines), source)
        })
        .collect()
}

/// Clean Portuguese documents with ids `pt-00000`, `pt-00001`, …
pub fn portuguese_documents(n: usize, seed: u64, source: &str) -> Vec<Document> {
    documents(Lang::Portuguese, n, seed, source, "pt-")
}

/// English documents with ids `en-00000`, …
pub fn english_documents(n: usize, seed: u64, source: &str) -> Vec<Document> {
    documents(Lang::English, n, seed, source, "en-")
}

/// Ground truth of [`mixed_fixture`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureTruth {
    pub language: Vec<String>,
    pub duplicates: Vec<String>,
    pub quality: Vec<String>,
    pub survivors: Vec<String>,
}

/// A 100-document corpus with planted defects: 10 English documents,
/// 10 exact copies of clean documents and 10 documents that fail a
/// document-level quality rule. The remaining 70 are clean Portuguese.
pub fn mixed_fixture(seed: u64) -> (Vec<Document>, FixtureTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = ["blogs", "news", "wiki"];
    let mut docs = Vec::new();
    let mut truth = FixtureTruth {
        language: vec![],
        duplicates: vec![],
        quality: vec![],
        survivors: vec![],
    };

    for i in 0..70 {
        let lines = rng.gen_range(4..9);
        let d = Document::new(
            format!("doc-{i:03}"),
            paragraph_text(&mut rng, Lang::Portuguese, lines),
            sources[i % 3],
        );
        truth.survivors.push(d.id.clone());
        docs.push(d);
    }
    for i in 0..10 {
        let original = &docs[i * 7];
        let mut copy = original.clone();
        copy.id = format!("dup-{i:03}");
        truth.duplicates.push(copy.id.clone());
        docs.push(copy);
    }
    for i in 0..10 {
        let lines = rng.gen_range(4..9);
        let d = Document::new(
            format!("eng-{i:03}"),
            paragraph_text(&mut rng, Lang::English, lines),
            sources[i % 3],
        );
        truth.language.push(d.id.clone());
        docs.push(d);
    }
    for i in 0..10 {
        let text = match i % 3 {
            // No line ends in punctuation.
            0 => paragraph_text(&mut rng, Lang::Portuguese, 6)
                .lines()
                .map(|l| l.trim_end_matches('.').to_string())
                .collect::<Vec<_>>()
                .join("\n"),
            // Mostly short lines.
            1 => {
                let mut lines: Vec<String> = Vec::new();
                while lines.len() < 8 {
                    let l = short_line(&mut rng);
                    if !lines.contains(&l) {
                        lines.push(l);
                    }
                }
                lines.push(paragraph_text(&mut rng, Lang::Portuguese, 1));
                lines.join("\n")
            }
            // Two lines repeated.
            _ => {
                let base: Vec<String> = paragraph_text(&mut rng, Lang::Portuguese, 5)
                    .lines()
                    .map(str::to_string)
                    .collect();
                let mut lines = base.clone();
                lines.push(base[0].clone());
                lines.push(base[1].clone());
                lines.join("\n")
            }
        };
        let d = Document::new(format!("qual-{i:03}"), text, sources[i % 3]);
        truth.quality.push(d.id.clone());
        docs.push(d);
    }
    docs.shuffle(&mut rng);
    (docs, truth)
}

fn short_line<R: Rng>(rng: &mut R) -> String {
    loop {
        let l = format!(
            "{} {} {} {}.",
            capitalize(pick(rng, PT.dets)),
            pick(rng, PT.nouns),
            pick(rng, PT.verbs),
            pick(rng, PT.advs).split(' ').next().unwrap()
        );
        if l.chars().count() < 30 {
            return l;
        }
    }
}

/// Size of a corpus written by [`write_bulk_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BulkStats {
    pub docs: u64,
    pub text_bytes: u64,
}

/// Writes roughly `target_text_bytes` of document text as shards under
/// `dir`: mostly clean Portuguese, with about 4% English, 3% exact repeats
/// of recent documents and 3% documents carrying boilerplate lines.
/// Batches are generated in parallel from per-batch seeds, so the output
/// depends only on `seed` and the target size.
pub fn write_bulk_corpus(dir: &std::path::Path, target_text_bytes: u64, seed: u64) -> crate::Result<BulkStats> {
    use rayon::prelude::*;

    const BATCH: usize = 4096;
    let mut writer = crate::ingest::ShardWriter::create(dir, "bulk", crate::ingest::DEFAULT_DOCS_PER_SHARD, "")?;
    let mut stats = BulkStats { docs: 0, text_bytes: 0 };
    let mut batch_index = 0u64;
    while stats.text_bytes < target_text_bytes {
        let base = stats.docs;
        let docs: Vec<Document> = (0..BATCH)
            .into_par_iter()
            .map(|i| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed ^ crate::hash::mix64(batch_index * BATCH as u64 + i as u64));
                let roll: f64 = rng.gen();
                let lines = rng.gen_range(4..10);
                let text = if roll < 0.04 {
                    paragraph_text(&mut rng, Lang::English, lines)
                } else if roll < 0.07 {
                    let mut t = paragraph_text(&mut rng, Lang::Portuguese, lines);
                    t.push_str("\nAceite os cookies para continuar\nMenu");
                    t
                } else {
                    paragraph_text(&mut rng, Lang::Portuguese, lines)
                };
                Document::new(
                    format!("bulk-{:09}", base + i as u64),
                    text,
                    ["blogs", "news", "wiki"][i % 3],
                )
            })
            .collect();
        let mut recent: Option<String> = None;
        for (i, mut doc) in docs.into_iter().enumerate() {
            // Every 33rd document repeats the text of the one before it.
            if i % 33 == 32 {
                if let Some(prev) = recent.take() {
                    doc.text = prev;
                }
            }
            stats.docs += 1;
            stats.text_bytes += doc.text.len() as u64;
            writer.push(&doc)?;
            recent = Some(doc.text);
            if stats.text_bytes >= target_text_bytes {
                break;
            }
        }
        batch_index += 1;
    }
    writer.finish()?;
    Ok(stats)
}

/// Training sentences for a Portuguese and an English profile.
pub fn langid_training(n_per_lang: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    (
        sentences(Lang::Portuguese, n_per_lang, seed),
        sentences(Lang::English, n_per_lang, seed ^ 0x5eed),
    )
}
