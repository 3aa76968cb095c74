//! Stage accounting: per-stage document counts, drop reasons and retention.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ForgeError, Result};

/// A percentage held as an integer number of hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Percent(u64);

impl Percent {
    /// `100 * part / whole` rounded half-up to two decimals. Zero when `whole` is zero.
    pub fn of(part: u64, whole: u64) -> Self {
        if whole == 0 {
            return Percent(0);
        }
        let num = 10_000u128 * part as u128;
        let den = whole as u128;
        Percent(((2 * num + den) / (2 * den)) as u64)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(Percent((v * 100.0).round() as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Langid,
    Dedup,
    Quality,
    PhaseSplit,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Langid => "langid",
            Stage::Dedup => "dedup",
            Stage::Quality => "quality",
            Stage::PhaseSplit => "phase_split",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Source label used for reports that aggregate every source.
pub const ALL_SOURCES: &str = "all";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub source: String,
    pub docs_in: u64,
    pub docs_out: u64,
    pub retention_pct: Percent,
    pub drop_reasons: BTreeMap<String, u64>,
}

impl StageReport {
    pub fn new(
        stage: Stage,
        source: impl Into<String>,
        docs_in: u64,
        docs_out: u64,
        drop_reasons: BTreeMap<String, u64>,
    ) -> Result<Self> {
        if docs_out > docs_in {
            return Err(ForgeError::data(format!(
                "stage {stage}: docs_out {docs_out} exceeds docs_in {docs_in}"
            )));
        }
        let dropped: u64 = drop_reasons.values().sum();
        if dropped != docs_in - docs_out {
            return Err(ForgeError::data(format!(
                "stage {stage}: drop reasons sum to {dropped}, expected {}",
                docs_in - docs_out
            )));
        }
        Ok(Self {
            stage,
            source: source.into(),
            docs_in,
            docs_out,
            retention_pct: Percent::of(docs_out, docs_in),
            drop_reasons,
        })
    }

    pub fn dropped(&self) -> u64 {
        self.docs_in - self.docs_out
    }
}

#[derive(Debug, Clone, Default)]
struct SourceTally {
    docs_in: u64,
    docs_out: u64,
    drops: BTreeMap<String, u64>,
}

/// Accumulates kept/dropped decisions for one stage, split by source.
#[derive(Debug, Clone)]
pub struct StageTally {
    stage: Stage,
    by_source: BTreeMap<String, SourceTally>,
}

impl StageTally {
    pub fn new(stage: Stage) -> Self {
        Self {
            stage,
            by_source: BTreeMap::new(),
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn keep(&mut self, source: &str) {
        let t = self.entry(source);
        t.docs_in += 1;
        t.docs_out += 1;
    }

    pub fn drop(&mut self, source: &str, reason: &str) {
        let t = self.entry(source);
        t.docs_in += 1;
        *t.drops.entry(reason.to_string()).or_insert(0) += 1;
    }

    fn entry(&mut self, source: &str) -> &mut SourceTally {
        if !self.by_source.contains_key(source) {
            self.by_source.insert(source.to_string(), SourceTally::default());
        }
        self.by_source.get_mut(source).unwrap()
    }

    pub fn merge(&mut self, other: StageTally) {
        debug_assert_eq!(self.stage, other.stage);
        for (source, t) in other.by_source {
            let mine = self.entry(&source);
            mine.docs_in += t.docs_in;
            mine.docs_out += t.docs_out;
            for (reason, n) in t.drops {
                *mine.drops.entry(reason).or_insert(0) += n;
            }
        }
    }

    /// One report per source, in source order.
    pub fn by_source(&self) -> Vec<StageReport> {
        self.by_source
            .iter()
            .map(|(source, t)| StageReport {
                stage: self.stage,
                source: source.clone(),
                docs_in: t.docs_in,
                docs_out: t.docs_out,
                retention_pct: Percent::of(t.docs_out, t.docs_in),
                drop_reasons: t.drops.clone(),
            })
            .collect()
    }

    /// Aggregate over all sources, labelled [`ALL_SOURCES`].
    pub fn total(&self) -> StageReport {
        let mut docs_in = 0;
        let mut docs_out = 0;
        let mut drops = BTreeMap::new();
        for t in self.by_source.values() {
            docs_in += t.docs_in;
            docs_out += t.docs_out;
            for (reason, n) in &t.drops {
                *drops.entry(reason.clone()).or_insert(0) += n;
            }
        }
        StageReport {
            stage: self.stage,
            source: ALL_SOURCES.to_string(),
            docs_in,
            docs_out,
            retention_pct: Percent::of(docs_out, docs_in),
            drop_reasons: drops,
        }
    }

    /// Rebuilds a tally from per-source reports.
    pub fn from_reports(stage: Stage, reports: &[StageReport]) -> Self {
        let mut tally = Self::new(stage);
        for r in reports {
            let t = tally.entry(&r.source);
            t.docs_in += r.docs_in;
            t.docs_out += r.docs_out;
            for (reason, n) in &r.drop_reasons {
                *t.drops.entry(reason.clone()).or_insert(0) += n;
            }
        }
        tally
    }
}

/// Report written by a single stage run: the total plus its per-source rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub total: StageReport,
    pub by_source: Vec<StageReport>,
}

impl From<&StageTally> for StageOutcome {
    fn from(t: &StageTally) -> Self {
        StageOutcome {
            total: t.total(),
            by_source: t.by_source(),
        }
    }
}
