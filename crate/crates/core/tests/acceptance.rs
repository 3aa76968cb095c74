//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails.
//!
//! The throughput criterion is defined for an 8-core machine. On smaller
//! machines its result is still measured and printed as FAIL, tagged as an
//! environment shortfall; such a result only fails the process when
//! `FORGE_ACCEPTANCE_STRICT` is set.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use forge::analytics::hdd;
use forge::bpe::{train_bpe, BpeModel};
use forge::dedup::{jaccard_sorted, matching_fraction, shingle_text, LshIndex, MinHasher};
use forge::document::Document;
use forge::ingest::{read_shards, resolve_inputs, write_shards, MANIFEST_FILE};
use forge::langid::{train_profile, LanguageIdentifier};
use forge::phase::partition_phases;
use forge::pipeline::{run_pipeline, Emit};
use forge::quality::{DocDropReason, QualityFilter};
use forge::report::{Stage, StageReport};
use forge::PipelineConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Failed because the machine does not meet the criterion's stated setup.
    EnvFail(String),
}

type Check = fn() -> Outcome;

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let checks: [(u32, &str, Check); 9] = [
        (1, "retention arithmetic", retention_arithmetic),
        (2, "minhash fidelity", minhash_fidelity),
        (3, "lsh banding curve", lsh_banding_curve),
        (4, "quality boundaries", quality_boundaries),
        (5, "hdd oracle", hdd_oracle),
        (6, "tokenizer lossless and deterministic", tokenizer_roundtrip),
        (7, "phase split invariants", phase_split_invariants),
        (8, "end-to-end determinism", end_to_end_determinism),
        (9, "throughput", throughput),
    ];
    let strict = std::env::var_os("FORGE_ACCEPTANCE_STRICT").is_some();
    let mut failed = false;
    for (n, name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("criterion {n} {name}: PASS ({d}; {secs:.1}s)"),
            Outcome::Fail(d) => {
                failed = true;
                println!("criterion {n} {name}: FAIL ({d}; {secs:.1}s)");
            }
            Outcome::EnvFail(d) => {
                failed |= strict;
                println!("criterion {n} {name}: FAIL [environment] ({d}; {secs:.1}s)");
            }
        }
    }
    if failed {
        std::process::exit(1);
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

// 1 ---------------------------------------------------------------------

fn retention_arithmetic() -> Outcome {
    let rows = [(339_889_917u64, 3_919_914u64, "1.15"), (8_033_406, 4_725_016, "58.82")];
    let mut details = Vec::new();
    let mut ok = true;
    for (orig, fin, published) in rows {
        let reasons = BTreeMap::from([("filtered".to_string(), orig - fin)]);
        let report = StageReport::new(Stage::Quality, "all", orig, fin, reasons).unwrap();
        // Oracle: integer half-up rounding of 10^4 * fin / orig.
        let hundredths = (20_000 * fin as u128 + orig as u128) / (2 * orig as u128);
        let oracle = format!("{}.{:02}", hundredths / 100, hundredths % 100);
        let got = report.retention_pct.to_string();
        ok &= got == published && got == oracle;
        details.push(format!("{got} vs {published}"));
    }
    verdict(ok, details.join(", "))
}

// 2 and 3 ---------------------------------------------------------------

/// Two texts of `180 + size - 1` unique words sharing a prefix, whose
/// `size`-word shingle sets have `shared` windows in common out of 180 each.
fn pair_with_overlap(shared: usize, size: usize, tag: u64) -> (String, String) {
    let len = 180 + size - 1;
    let prefix = shared + size - 1;
    let a: Vec<String> = (0..len).map(|k| format!("p{tag}w{k}")).collect();
    let mut b: Vec<String> = a[..prefix].to_vec();
    b.extend((prefix..len).map(|k| format!("q{tag}w{k}")));
    (a.join(" "), b.join(" "))
}

fn word_windows(text: &str, size: usize) -> HashSet<Vec<&str>> {
    let words: Vec<&str> = text.split_whitespace().collect();
    words.windows(size).map(|w| w.to_vec()).collect()
}

fn oracle_jaccard(a: &str, b: &str, size: usize) -> f64 {
    let (x, y) = (word_windows(a, size), word_windows(b, size));
    x.intersection(&y).count() as f64 / x.union(&y).count() as f64
}

fn minhash_fidelity() -> Outcome {
    let start = Instant::now();
    let size = PipelineConfig::default().shingle_size;
    let mut ok = true;
    let mut details = Vec::new();
    for (target, shared) in [(0.2, 60), (0.5, 120), (0.8, 160)] {
        let (a, b) = pair_with_overlap(shared, size, shared as u64);
        let exact = oracle_jaccard(&a, &b, size);
        if exact != target {
            return Outcome::Fail(format!("fixture jaccard {exact} != {target}"));
        }
        let mut sum = 0.0;
        for seed in 0..200u64 {
            let (sa, sb) = (shingle_text(&a, size, seed), shingle_text(&b, size, seed));
            if jaccard_sorted(&sa, &sb) != exact {
                return Outcome::Fail(format!("hashed shingles disagree with oracle at seed {seed}"));
            }
            let hasher = MinHasher::new(112, 14, seed).unwrap();
            sum += matching_fraction(&hasher.components(&sa), &hasher.components(&sb));
        }
        let mean = sum / 200.0;
        ok &= (mean - exact).abs() <= 0.05;
        details.push(format!("J={exact}: {mean:.4}"));
    }
    ok &= within(start.elapsed(), 10);
    verdict(ok, details.join(", "))
}

fn detected(hasher: &MinHasher, a: &[u64], b: &[u64]) -> bool {
    let mut index = LshIndex::new(hasher.num_bands());
    index
        .insert("a".into(), &hasher.band_keys(&hasher.components(a)))
        .unwrap();
    index
        .insert("b".into(), &hasher.band_keys(&hasher.components(b)))
        .unwrap();
    index.resolve().unwrap().removed.iter().any(|&r| r)
}

fn lsh_banding_curve() -> Outcome {
    let start = Instant::now();
    let size = PipelineConfig::default().shingle_size;
    let (mut near, mut exact) = (0, 0);
    for i in 0..500u64 {
        let hasher = MinHasher::new(112, 14, i).unwrap();
        let (a, b) = pair_with_overlap(160, size, i);
        let (sa, sb) = (shingle_text(&a, size, i), shingle_text(&b, size, i));
        near += detected(&hasher, &sa, &sb) as u32;
        exact += detected(&hasher, &sa, &sa) as u32;
    }
    let rate = near as f64 / 500.0;
    let analytic = 1.0 - (1.0 - 0.8f64.powi(8)).powi(14);
    let ok = (0.89..=0.95).contains(&rate) && exact == 500 && within(start.elapsed(), 30);
    verdict(
        ok,
        format!("rate {rate:.3} (analytic {analytic:.4}), exact duplicates {exact}/500"),
    )
}

// 4 ---------------------------------------------------------------------

/// A line of exactly `len` ASCII characters with at least three words.
fn line_of(len: usize, tag: &str, i: usize, punct: bool) -> String {
    let mut s = format!("{tag} line {i:04} ");
    let body = if punct { len - 1 } else { len };
    assert!(s.len() < body, "line too short for its label");
    while s.len() < body {
        s.push('z');
    }
    if punct {
        s.push('.');
    }
    s
}

fn quality_boundaries() -> Outcome {
    let filter = QualityFilter::new(&PipelineConfig::default());
    let mut results: Vec<(String, bool)> = Vec::new();
    let mut judge = |name: &str, lines: Vec<String>, expect: Option<DocDropReason>| {
        let doc = Document::new(name, lines.join("\n"), "fixture");
        let (_, v) = filter.apply(doc);
        results.push((format!("{name}={:?}", v.reason), v.reason == expect));
    };

    let punct = |ended: usize| (0..100).map(|i| line_of(40, "punct", i, i < ended)).collect::<Vec<_>>();
    judge("punct_12of100", punct(12), None);
    judge("punct_11of100", punct(11), Some(DocDropReason::LowPunctRatio));

    let short = |n: usize| {
        (0..100)
            .map(|i| {
                if i < n {
                    line_of(20, "s", i, true)
                } else {
                    line_of(40, "long", i, true)
                }
            })
            .collect::<Vec<_>>()
    };
    judge("short_67of100", short(67), None);
    judge("short_68of100", short(68), Some(DocDropReason::TooManyShortLines));

    // A 50-char line twice is 100 duplicated characters.
    let dup = |unique: usize| {
        let mut lines: Vec<String> = (0..unique).map(|i| line_of(50, "uniq", i, true)).collect();
        lines.push(line_of(50, "twice", 0, true));
        lines.push(line_of(50, "twice", 0, true));
        lines
    };
    judge("dup_100of1000", dup(18), None);
    judge("dup_100of950", dup(17), Some(DocDropReason::DuplicatedLines));

    // Line rules: the probe line survives or is removed; the document stays.
    let mut line_results = Vec::new();
    for (name, probe, keep) in [
        ("three_words", "three words here.", true),
        ("two_words", "two words.", false),
        ("no_bracket", "a line without brackets.", true),
        ("curly_bracket", "a line with {brackets}.", false),
        ("no_banned", "a clean line of text.", true),
        ("banned", "please enable JavaScript to continue.", false),
    ] {
        let mut lines: Vec<String> = (0..10).map(|i| line_of(40, "body", i, true)).collect();
        lines.insert(5, probe.to_string());
        let (out, v) = filter.apply(Document::new(name, lines.join("\n"), "fixture"));
        let survived = out.is_some_and(|d| d.text.split('\n').any(|l| l == probe));
        line_results.push((
            format!("{name}={}", if survived { "kept" } else { "removed" }),
            v.kept && survived == keep,
        ));
    }
    results.extend(line_results);

    let ok = results.len() == 12 && results.iter().all(|(_, ok)| *ok);
    let wrong: Vec<&str> = results.iter().filter(|(_, ok)| !ok).map(|(d, _)| d.as_str()).collect();
    verdict(
        ok,
        if wrong.is_empty() {
            "12/12 documents classified".into()
        } else {
            format!("wrong: {}", wrong.join(", "))
        },
    )
}

// 5 ---------------------------------------------------------------------

/// Mean distinct types / 42 over `samples` draws of 42 tokens without replacement.
fn monte_carlo_hdd(types: &[u32], n_types: usize, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut idx: Vec<usize> = (0..types.len()).collect();
    let mut stamp = vec![0u32; n_types];
    let mut total = 0u64;
    for round in 1..=samples as u32 {
        let (chosen, _) = idx.partial_shuffle(rng, 42);
        let mut distinct = 0;
        for &i in chosen.iter() {
            let t = types[i] as usize;
            if stamp[t] != round {
                stamp[t] = round;
                distinct += 1;
            }
        }
        total += distinct;
    }
    total as f64 / (samples as f64 * 42.0)
}

fn hdd_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(42..=200);
        let n_types = rng.gen_range(1..=120);
        // Skewed draws so that sequences mix frequent and rare types.
        let types: Vec<u32> = (0..n)
            .map(|_| (rng.gen::<f64>().powi(2) * n_types as f64) as u32)
            .collect();
        let tokens: Vec<String> = types.iter().map(|t| format!("t{t}")).collect();
        let got = hdd(&tokens, 42).unwrap();
        let want = monte_carlo_hdd(&types, n_types, 100_000, &mut rng);
        worst = worst.max((got - want).abs());
    }
    let mut exact_err = 0.0f64;
    for n in [42usize, 43, 100, 200] {
        let distinct: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        exact_err = exact_err.max((hdd(&distinct, 42).unwrap() - 1.0).abs());
        let single = vec!["w"; n];
        exact_err = exact_err.max((hdd(&single, 42).unwrap() - 1.0 / 42.0).abs());
    }
    let ok = worst <= 0.01 && exact_err <= 1e-12 && within(start.elapsed(), 60);
    verdict(
        ok,
        format!("max |hdd - monte carlo| {worst:.5}, exact-case error {exact_err:.1e}"),
    )
}

// 6 ---------------------------------------------------------------------

fn random_multilingual(rng: &mut ChaCha8Rng) -> String {
    const POOLS: [&str; 8] = [
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789",
        " \t\n\r  ",
        ".,;:!?\"'()[]{}-_/\\@#$%&*+=<>|~`^",
        "áàâãçéêíóôõúüÁÀÂÃÇÉÊÍÓÔÕÚñßøæœ",
        "абвгдеёжзийклмнопрстуфхцчшщъыьэюя",
        "的一是不了人我在有他这中大来上国个到说们为子和你地出道也时年",
        "αβγδεζηθικλμνξοπρστυφχψωاالعربيةעבריתहिन्दी",
        "😀🎉👍🏽🇧🇷\u{200d}\u{0301}\u{feff}\u{0}\u{7f}\u{10ffff}",
    ];
    let len = rng.gen_range(0..120);
    let mut s = String::new();
    for _ in 0..len {
        let pool: Vec<char> = POOLS[rng.gen_range(0..POOLS.len())].chars().collect();
        s.push(pool[rng.gen_range(0..pool.len())]);
    }
    s
}

fn tokenizer_roundtrip() -> Outcome {
    let start = Instant::now();
    let (pt, en) = forge::synth::langid_training(1500, 6);
    let corpus: Vec<&str> = pt.iter().chain(&en).map(String::as_str).collect();
    let first = train_bpe(corpus.iter().copied(), 1000).unwrap();
    let second = train_bpe(corpus.iter().copied(), 1000).unwrap();
    let dirs = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    first.save(dirs.0.path()).unwrap();
    second.save(dirs.1.path()).unwrap();
    let same_files = tree_bytes(dirs.0.path()) == tree_bytes(dirs.1.path());

    let reloaded = BpeModel::load(dirs.0.path()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = 0;
    for _ in 0..1000 {
        let s = random_multilingual(&mut rng);
        for model in [&first, &reloaded] {
            if model.decode(&model.encode(&s)).ok().as_deref() != Some(s.as_str()) {
                failures += 1;
            }
        }
    }
    let ok = failures == 0 && same_files && within(start.elapsed(), 10);
    verdict(
        ok,
        format!(
            "{} merges, roundtrip failures {failures}/2000, merges files identical: {same_files}",
            first.merges().len()
        ),
    )
}

// 7 ---------------------------------------------------------------------

fn phase_split_invariants() -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let docs: Vec<(String, u64)> = (0..10_000)
        .map(|i| {
            let n = if i % 20 == 0 {
                rng.gen_range(1025..=1500)
            } else {
                rng.gen_range(20..=1024)
            };
            (format!("doc{i:05}"), n)
        })
        .collect();
    let long: HashSet<&str> = docs
        .iter()
        .filter(|(_, n)| *n > 1024)
        .map(|(id, _)| id.as_str())
        .collect();
    let max_len = docs.iter().map(|(_, n)| *n).max().unwrap() as f64;
    let total: u64 = docs.iter().map(|(_, n)| n).sum();

    let plan = partition_phases(docs.clone(), &cfg).unwrap();
    let mut problems = Vec::new();
    if long.len() != 500 || long.iter().any(|id| !matches!(plan.phase_of(id), Some(2 | 3))) {
        problems.push("long document outside phases 2/3".to_string());
    }
    let total_exclusive = plan.assignments.len() == docs.len()
        && docs.iter().all(|(id, _)| plan.phase_of(id).is_some())
        && plan.phase_doc_counts.iter().sum::<u64>() == docs.len() as u64
        && plan.phase_token_totals.iter().sum::<u64>() == total;
    if !total_exclusive {
        problems.push("partition not total and exclusive".to_string());
    }
    let ratios = [195.0 / 230.0, 29.0 / 230.0, 6.0 / 230.0];
    let mut gaps = Vec::new();
    for (p, (ratio, got)) in ratios.iter().zip(plan.phase_token_totals).enumerate() {
        let gap = (got as f64 - ratio * total as f64).abs();
        gaps.push(format!("{gap:.0}"));
        if gap > max_len {
            problems.push(format!("phase {} off target by {gap:.0}", p + 1));
        }
    }

    let dirs = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    plan.write(dirs.0.path()).unwrap();
    partition_phases(docs, &cfg).unwrap().write(dirs.1.path()).unwrap();
    if tree_bytes(dirs.0.path()) != tree_bytes(dirs.1.path()) {
        problems.push("rerun plan differs".to_string());
    }
    if !within(start.elapsed(), 10) {
        problems.push("too slow".to_string());
    }
    let detail = format!("target gaps [{}] tokens, max doc {max_len}", gaps.join(", "));
    if problems.is_empty() {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(format!("{detail}; {}", problems.join("; ")))
    }
}

// 8 ---------------------------------------------------------------------

/// Relative path to contents for every file under `dir`.
fn tree_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn forge_cmd() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_forge"));
    cmd.env("SOURCE_DATE_EPOCH", "1700000000").env_remove("FORGE_LOG");
    cmd
}

fn end_to_end_determinism() -> Outcome {
    let work = tempfile::tempdir().unwrap();
    let w = work.path();
    let (docs, truth) = forge::synth::mixed_fixture(8);
    write_shards(docs, &w.join("input"), 30, "input", "").unwrap();
    let (pt, en) = forge::synth::langid_training(1000, 1);
    std::fs::write(w.join("por.txt"), pt.join("\n")).unwrap();
    std::fs::write(w.join("eng.txt"), en.join("\n")).unwrap();
    let status = forge_cmd()
        .args(["langid", "train", "--label", "por", "--text"])
        .arg(w.join("por.txt"))
        .args(["--label", "eng", "--text"])
        .arg(w.join("eng.txt"))
        .arg("--profiles")
        .arg(w.join("profiles.json"))
        .status()
        .unwrap();
    if !status.success() {
        return Outcome::Fail(format!("langid train exited with {status}"));
    }
    for out in ["out1", "out2"] {
        let status = forge_cmd()
            .arg("run")
            .arg("--input")
            .arg(w.join("input"))
            .arg("--output")
            .arg(w.join(out))
            .arg("--profiles")
            .arg(w.join("profiles.json"))
            .status()
            .unwrap();
        if !status.success() {
            return Outcome::Fail(format!("forge run exited with {status}"));
        }
    }

    // Wall-clock timings live in their own file and are expected to differ.
    let strip = |mut t: BTreeMap<PathBuf, Vec<u8>>| {
        t.remove(Path::new(forge::pipeline::TIMINGS_FILE));
        t
    };
    let (a, b) = (strip(tree_bytes(&w.join("out1"))), strip(tree_bytes(&w.join("out2"))));
    let identical = a == b;
    let has_outputs =
        a.contains_key(Path::new(MANIFEST_FILE)) && a.contains_key(Path::new(forge::pipeline::REPORT_FILE));

    let report: serde_json::Value = serde_json::from_slice(&a[Path::new(forge::pipeline::REPORT_FILE)]).unwrap();
    let drops: Vec<u64> = report["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["docs_in"].as_u64().unwrap() - s["docs_out"].as_u64().unwrap())
        .collect();
    let shards = resolve_inputs(&[w.join("out1").join(MANIFEST_FILE)]).unwrap();
    let survivors: Vec<String> = read_shards(&shards).map(|d| d.unwrap().id).collect();
    let mut expected = truth.survivors.clone();
    expected.sort();
    let mut got = survivors.clone();
    got.sort();

    let ok = identical && has_outputs && drops == [10, 10, 10] && got == expected;
    verdict(
        ok,
        format!(
            "{} files identical: {identical}, drops {drops:?}, survivors match truth: {}",
            a.len(),
            got == expected
        ),
    )
}

// 9 ---------------------------------------------------------------------

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    Some(line.split_whitespace().nth(1)?.parse::<u64>().ok()? * 1024)
}

fn throughput() -> Outcome {
    const GIB: u64 = 1 << 30;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let work = tempfile::tempdir().unwrap();
    let corpus = work.path().join("corpus");
    let stats = forge::synth::write_bulk_corpus(&corpus, GIB, 9).unwrap();

    let cfg = PipelineConfig::default();
    let (pt, en) = forge::synth::langid_training(1000, 1);
    let identifier = LanguageIdentifier::new(vec![
        train_profile("por", &pt, cfg.ngram_order).unwrap(),
        train_profile("eng", &en, cfg.ngram_order).unwrap(),
    ])
    .unwrap();
    let emit = Emit {
        signatures: None,
        verdicts: None,
    };
    let start = Instant::now();
    let report = run_pipeline(&cfg, &[corpus], &work.path().join("out"), &identifier, &emit).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mbps = stats.text_bytes as f64 / 1e6 / secs;
    let peak = peak_rss_bytes();
    let peak_mb = peak.map_or("unknown".to_string(), |b| format!("{:.0} MB", b as f64 / 1e6));

    let memory_ok = peak.is_some_and(|b| b < 2 * GIB);
    let speed_ok = mbps >= 50.0;
    let detail = format!(
        "{:.2} GB of text, {} docs in {secs:.1}s = {mbps:.1} MB/s on {cores} core(s), peak RSS {peak_mb}, final docs {}",
        stats.text_bytes as f64 / 1e9,
        stats.docs,
        report.stages.last().map_or(0, |s| s.docs_out)
    );
    match (speed_ok, memory_ok) {
        (true, true) => Outcome::Pass(detail),
        (false, true) if cores < 8 => Outcome::EnvFail(format!("{detail}; needs an 8-core machine")),
        _ => Outcome::Fail(detail),
    }
}
