//! Sharded newline-delimited JSON storage.
//!
//! Each shard holds one JSON object per line with the fields `id`, `text`,
//! `source`, `url` and `meta`, always serialized in that order. A
//! `manifest.json` written next to the shards lists them with their document
//! and byte counts.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{ForgeError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_DOCS_PER_SHARD: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub doc_count: u64,
    pub byte_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    pub shards: Vec<ShardEntry>,
    pub total_docs: u64,
    pub created_at: String,
    pub config_hash: String,
}

impl CorpusManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| ForgeError::io(path, e))?;
        let manifest: Self = serde_json::from_slice(&bytes)
            .map_err(|e| ForgeError::data(format!("bad manifest {}: {e}", path.display())))?;
        let sum: u64 = manifest.shards.iter().map(|s| s.doc_count).sum();
        if sum != manifest.total_docs {
            return Err(ForgeError::data(format!(
                "manifest {}: total_docs {} but shards hold {sum}",
                path.display(),
                manifest.total_docs
            )));
        }
        Ok(manifest)
    }

    /// Absolute shard paths, resolved against the manifest's directory.
    pub fn shard_paths(&self, manifest_dir: &Path) -> Vec<PathBuf> {
        self.shards.iter().map(|s| manifest_dir.join(&s.path)).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| ForgeError::io(&path, e))?;
        Ok(path)
    }
}

/// Timestamp stamped into manifests. Honors `SOURCE_DATE_EPOCH` so that
/// repeated runs can produce byte-identical manifests.
pub fn manifest_timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok());
    let ts = match secs {
        Some(s) => chrono::DateTime::from_timestamp(s, 0).unwrap_or_default(),
        None => chrono::Utc::now(),
    };
    ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Expands user-supplied inputs into a sorted list of shard files.
///
/// Each input may be a shard file, a `manifest.json`, or a directory (which
/// is read through its manifest when it has one, otherwise every `*.jsonl` /
/// `*.jsonl.gz` inside it is taken).
pub fn resolve_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        let meta = std::fs::metadata(input).map_err(|e| ForgeError::io(input, e))?;
        if meta.is_dir() {
            let manifest = input.join(MANIFEST_FILE);
            if manifest.exists() {
                out.extend(CorpusManifest::load(&manifest)?.shard_paths(input));
            } else {
                let entries = std::fs::read_dir(input).map_err(|e| ForgeError::io(input, e))?;
                for entry in entries {
                    let path = entry.map_err(|e| ForgeError::io(input, e))?.path();
                    if is_shard_file(&path) {
                        out.push(path);
                    }
                }
            }
        } else if input.file_name().is_some_and(|n| n == MANIFEST_FILE) {
            let dir = input.parent().unwrap_or(Path::new("."));
            out.extend(CorpusManifest::load(input)?.shard_paths(dir));
        } else {
            out.push(input.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn is_shard_file(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    path.is_file() && (name.ends_with(".jsonl") || name.ends_with(".jsonl.gz"))
}

#[derive(Deserialize)]
struct RawDocument {
    id: Option<String>,
    text: Option<String>,
    source: Option<String>,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    meta: Option<std::collections::BTreeMap<String, String>>,
}

/// Parses one shard line. `file`, `line` and `offset` only label errors.
pub fn parse_line(bytes: &[u8], file: &str, line: u64, offset: u64) -> Result<Document> {
    let err = |message: String| ForgeError::Record {
        file: file.to_string(),
        line,
        offset,
        message,
    };
    let raw: RawDocument = serde_json::from_slice(bytes).map_err(|e| err(format!("malformed record ({e})")))?;
    let id = raw.id.ok_or_else(|| err("missing field id".into()))?;
    let text = raw.text.ok_or_else(|| err("missing field text".into()))?;
    let source = raw.source.ok_or_else(|| err("missing field source".into()))?;
    if id.is_empty() {
        return Err(err("empty id".into()));
    }
    Ok(Document {
        id,
        text,
        source,
        url: raw.url,
        meta: raw.meta.unwrap_or_default(),
    })
}

/// Streams the documents of a single shard file in file order.
pub struct ShardReader {
    reader: Box<dyn BufRead + Send>,
    path: PathBuf,
    label: String,
    line: u64,
    offset: u64,
    buf: Vec<u8>,
    done: bool,
}

fn open_buffered(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| ForgeError::io(path, e))?;
    Ok(if path.extension().is_some_and(|e| e == "gz") {
        Box::new(BufReader::with_capacity(
            1 << 20,
            flate2::read::MultiGzDecoder::new(file),
        ))
    } else {
        Box::new(BufReader::with_capacity(1 << 20, file))
    })
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl ShardReader {
    pub fn open(path: &Path) -> Result<Self> {
        let reader = open_buffered(path)?;
        let label = file_label(path);
        Ok(Self {
            reader,
            path: path.to_path_buf(),
            label,
            line: 0,
            offset: 0,
            buf: Vec::with_capacity(1 << 16),
            done: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Iterator for ShardReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.buf.clear();
        let n = match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Some(Err(ForgeError::io(&self.path, e)));
            }
        };
        if n == 0 {
            self.done = true;
            return None;
        }
        self.line += 1;
        let start = self.offset;
        self.offset += n as u64;
        let mut record = &self.buf[..];
        if record.last() == Some(&b'\n') {
            record = &record[..record.len() - 1];
        }
        let parsed = parse_line(record, &self.label, self.line, start);
        if parsed.is_err() {
            self.done = true;
        }
        Some(parsed)
    }
}

/// Reads every document of `paths`, visiting files in lexicographic order.
pub fn read_shards(paths: &[PathBuf]) -> impl Iterator<Item = Result<Document>> {
    let mut sorted = paths.to_vec();
    sorted.sort();
    sorted
        .into_iter()
        .flat_map(|p| -> Box<dyn Iterator<Item = Result<Document>>> {
            match ShardReader::open(&p) {
                Ok(r) => Box::new(r),
                Err(e) => Box::new(std::iter::once(Err(e))),
            }
        })
}

struct RawLine {
    bytes: Vec<u8>,
    line: u64,
    offset: u64,
}

struct OpenShard {
    reader: Box<dyn BufRead + Send>,
    path: PathBuf,
    label: String,
    line: u64,
    offset: u64,
}

/// Reads shards in batches, parsing each batch in parallel. Documents come
/// out in the same order as [`read_shards`].
pub struct DocBatches {
    paths: std::vec::IntoIter<PathBuf>,
    current: Option<OpenShard>,
    batch_size: usize,
}

impl DocBatches {
    pub fn new(paths: &[PathBuf], batch_size: usize) -> Self {
        let mut sorted = paths.to_vec();
        sorted.sort();
        Self {
            paths: sorted.into_iter(),
            current: None,
            batch_size: batch_size.max(1),
        }
    }

    /// The next batch (possibly spanning shard boundaries), or `None` at the end.
    pub fn next_batch(&mut self) -> Result<Option<Vec<Document>>> {
        use rayon::prelude::*;
        // (label, lines) groups so that errors name the right file.
        let mut groups: Vec<(String, Vec<RawLine>)> = Vec::new();
        let mut n = 0;
        while n < self.batch_size {
            if self.current.is_none() {
                let Some(path) = self.paths.next() else { break };
                let reader = open_buffered(&path)?;
                let label = file_label(&path);
                self.current = Some(OpenShard {
                    reader,
                    path,
                    label,
                    line: 0,
                    offset: 0,
                });
            }
            let OpenShard {
                reader,
                path,
                label,
                line,
                offset,
            } = self.current.as_mut().expect("open shard");
            let mut bytes = Vec::new();
            let read = reader
                .read_until(b'\n', &mut bytes)
                .map_err(|e| ForgeError::io(&*path, e))?;
            if read == 0 {
                self.current = None;
                continue;
            }
            *line += 1;
            let start = *offset;
            *offset += read as u64;
            if bytes.last() == Some(&b'\n') {
                bytes.pop();
            }
            if groups.last().is_none_or(|(l, _)| l != label) {
                groups.push((label.clone(), Vec::new()));
            }
            groups.last_mut().expect("group").1.push(RawLine {
                bytes,
                line: *line,
                offset: start,
            });
            n += 1;
        }
        if n == 0 {
            return Ok(None);
        }
        let mut docs = Vec::with_capacity(n);
        for (label, lines) in groups {
            let parsed: Vec<Result<Document>> = lines
                .par_iter()
                .map(|r| parse_line(&r.bytes, &label, r.line, r.offset))
                .collect();
            for d in parsed {
                docs.push(d?);
            }
        }
        Ok(Some(docs))
    }
}

/// Serializes a document as one shard line, including the trailing LF.
pub fn encode_line(doc: &Document, out: &mut Vec<u8>) {
    serde_json::to_writer(&mut *out, doc).expect("document serializes");
    out.push(b'\n');
}

pub fn shard_file_name(index: usize) -> String {
    format!("part-{index:05}.jsonl")
}

/// Writes documents into `part-NNNNN.jsonl` shards of bounded size.
pub struct ShardWriter {
    dir: PathBuf,
    name: String,
    config_hash: String,
    max_docs: usize,
    seen: HashSet<String>,
    shards: Vec<ShardEntry>,
    current: Option<(BufWriter<File>, PathBuf)>,
    line: Vec<u8>,
}

impl ShardWriter {
    pub fn create(
        dir: &Path,
        name: impl Into<String>,
        max_docs_per_shard: usize,
        config_hash: impl Into<String>,
    ) -> Result<Self> {
        if max_docs_per_shard == 0 {
            return Err(ForgeError::Config("max_docs_per_shard must be at least 1".into()));
        }
        std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            name: name.into(),
            config_hash: config_hash.into(),
            max_docs: max_docs_per_shard,
            seen: HashSet::new(),
            shards: Vec::new(),
            current: None,
            line: Vec::with_capacity(1 << 16),
        })
    }

    pub fn push(&mut self, doc: &Document) -> Result<()> {
        if !self.seen.insert(doc.id.clone()) {
            return Err(ForgeError::DuplicateId(doc.id.clone()));
        }
        let rotate = self.shards.last().is_none_or(|s| s.doc_count as usize >= self.max_docs);
        if rotate {
            self.flush_current()?;
            let file_name = shard_file_name(self.shards.len());
            let path = self.dir.join(&file_name);
            let file = File::create(&path).map_err(|e| ForgeError::io(&path, e))?;
            self.current = Some((BufWriter::with_capacity(1 << 20, file), path));
            self.shards.push(ShardEntry {
                path: file_name,
                doc_count: 0,
                byte_count: 0,
            });
        }
        self.line.clear();
        encode_line(doc, &mut self.line);
        let (w, path) = self.current.as_mut().expect("open shard");
        w.write_all(&self.line).map_err(|e| ForgeError::io(&*path, e))?;
        let entry = self.shards.last_mut().expect("open shard");
        entry.doc_count += 1;
        entry.byte_count += self.line.len() as u64;
        Ok(())
    }

    fn flush_current(&mut self) -> Result<()> {
        if let Some((mut w, path)) = self.current.take() {
            w.flush().map_err(|e| ForgeError::io(&path, e))?;
        }
        Ok(())
    }

    /// Flushes the last shard and writes `manifest.json`.
    pub fn finish(mut self) -> Result<CorpusManifest> {
        self.flush_current()?;
        let manifest = CorpusManifest {
            name: self.name,
            total_docs: self.shards.iter().map(|s| s.doc_count).sum(),
            shards: self.shards,
            created_at: manifest_timestamp(),
            config_hash: self.config_hash,
        };
        for shard in &manifest.shards {
            let p = self.dir.join(&shard.path);
            if !p.exists() {
                return Err(ForgeError::data(format!(
                    "shard {} vanished before manifest write",
                    p.display()
                )));
            }
        }
        manifest.write(&self.dir)?;
        Ok(manifest)
    }
}

/// Writes a document stream to `dir` and returns the manifest.
pub fn write_shards<I>(
    docs: I,
    dir: &Path,
    max_docs_per_shard: usize,
    name: &str,
    config_hash: &str,
) -> Result<CorpusManifest>
where
    I: IntoIterator<Item = Document>,
{
    let mut writer = ShardWriter::create(dir, name, max_docs_per_shard, config_hash)?;
    for doc in docs {
        writer.push(&doc)?;
    }
    writer.finish()
}

/// Reads every byte of `path`; used by callers that load small sidecar files.
pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| ForgeError::io(path, e))?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(n: usize) -> Vec<Document> {
        (0..n)
            .map(|i| Document::new(format!("d{i}"), format!("texto número {i}"), "src"))
            .collect()
    }

    #[test]
    fn batches_match_sequential_reads() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_shards(docs(23), dir.path(), 5, "t", "h").unwrap();
        let paths = manifest.shard_paths(dir.path());
        let mut batches = DocBatches::new(&paths, 7);
        let mut got = Vec::new();
        while let Some(b) = batches.next_batch().unwrap() {
            assert!(b.len() <= 7);
            got.extend(b);
        }
        let want: Vec<Document> = read_shards(&paths).map(|d| d.unwrap()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn batch_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"text\":\"t\",\"source\":\"s\"}\n{\"id\":\"b\"}\n").unwrap();
        let err = DocBatches::new(&[p], 10).next_batch().unwrap_err();
        assert_eq!(err.to_string(), "missing field text at a.jsonl:2 (byte 35)");
    }

    #[test]
    fn ceiling_division_of_shards() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_shards(docs(5), dir.path(), 2, "t", "h").unwrap();
        let sizes: Vec<u64> = m.shards.iter().map(|s| s.doc_count).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        assert_eq!(m.total_docs, 5);
        assert_eq!(m.shards[0].path, "part-00000.jsonl");
        assert!(dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = docs(2);
        d[1].id = "d0".into();
        let err = write_shards(d, dir.path(), 10, "t", "h").unwrap_err();
        assert_eq!(err.to_string(), "duplicate id d0");
    }

    #[test]
    fn missing_text_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("shard.jsonl");
        std::fs::write(&p, "{\"id\":\"a\"}\n").unwrap();
        let err = read_shards(&[p]).next().unwrap().unwrap_err();
        assert!(err.to_string().contains("missing field text at shard.jsonl:1"), "{err}");
    }

    #[test]
    fn malformed_line_carries_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let good = "{\"id\":\"a\",\"text\":\"x\",\"source\":\"s\"}\n";
        std::fs::write(&p, format!("{good}{{broken\n")).unwrap();
        let results: Vec<_> = read_shards(&[p]).collect();
        assert_eq!(results.len(), 2);
        match &results[1] {
            Err(ForgeError::Record { line, offset, .. }) => {
                assert_eq!(*line, 2);
                assert_eq!(*offset, good.len() as u64);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.jsonl");
        std::fs::write(&p, "").unwrap();
        assert_eq!(read_shards(&[p]).count(), 0);
    }

    #[test]
    fn shards_are_read_in_sorted_order() {
        let dir = tempfile::tempdir().unwrap();
        let line = |id: &str| format!("{{\"id\":\"{id}\",\"text\":\"t\",\"source\":\"s\"}}\n");
        let b = dir.path().join("b.jsonl");
        let a = dir.path().join("a.jsonl");
        std::fs::write(&b, line("b1") + &line("b2")).unwrap();
        std::fs::write(&a, line("a1") + &line("a2") + &line("a3")).unwrap();
        let ids: Vec<String> = read_shards(&[b, a]).map(|d| d.unwrap().id).collect();
        assert_eq!(ids, ["a1", "a2", "a3", "b1", "b2"]);
    }

    #[test]
    fn field_order_on_disk() {
        let mut line = Vec::new();
        encode_line(&Document::new("x", "olá", "s"), &mut line);
        assert_eq!(
            String::from_utf8(line).unwrap(),
            "{\"id\":\"x\",\"text\":\"olá\",\"source\":\"s\",\"url\":null,\"meta\":{}}\n"
        );
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let err = parse_line(b"{\"id\":\"a\",\"text\":\"\xff\",\"source\":\"s\"}", "f", 1, 0);
        assert!(err.is_err());
    }

    #[test]
    fn gzip_shards_are_readable() {
        use flate2::write::GzEncoder;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.jsonl.gz");
        let mut enc = GzEncoder::new(File::create(&p).unwrap(), flate2::Compression::fast());
        enc.write_all(b"{\"id\":\"a\",\"text\":\"t\",\"source\":\"s\"}\n")
            .unwrap();
        enc.finish().unwrap();
        let got: Vec<_> = read_shards(&[p]).map(|d| d.unwrap().id).collect();
        assert_eq!(got, ["a"]);
    }

    #[test]
    fn resolve_manifest_directory() {
        let dir = tempfile::tempdir().unwrap();
        write_shards(docs(5), dir.path(), 2, "t", "h").unwrap();
        let paths = resolve_inputs(&[dir.path().to_path_buf()]).unwrap();
        assert_eq!(paths.len(), 3);
        let ids: Vec<String> = read_shards(&paths).map(|d| d.unwrap().id).collect();
        assert_eq!(ids, ["d0", "d1", "d2", "d3", "d4"]);
    }
}
