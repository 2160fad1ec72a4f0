//! Line-aligned parallel text: one sentence per line, tokens separated by
//! single spaces, one file per language and split.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{LangTag, PairId, ReviewStatus, SegmentPair};
use crate::text::tokenized_line;
use crate::{Error, Result};

/// Which pairs an export includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusFilter {
    #[default]
    Verified,
    VerifiedAndPending,
    All,
}

impl StatusFilter {
    pub fn admits(self, status: ReviewStatus) -> bool {
        match self {
            StatusFilter::Verified => status == ReviewStatus::Verified,
            StatusFilter::VerifiedAndPending => status != ReviewStatus::Rejected,
            StatusFilter::All => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StatusFilter::Verified => "verified",
            StatusFilter::VerifiedAndPending => "verified_and_pending",
            StatusFilter::All => "all",
        }
    }
}

impl fmt::Display for StatusFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatusFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verified" => Ok(StatusFilter::Verified),
            "verified_and_pending" | "verified+pending" => Ok(StatusFilter::VerifiedAndPending),
            "all" => Ok(StatusFilter::All),
            other => Err(Error::invalid("unknown_status_filter", format!("unknown status filter {other:?}"))),
        }
    }
}

/// Train / dev / test proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<SplitRatios> {
        let ratios = SplitRatios { train, dev, test };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.dev, self.test];
        if all.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::invalid("invalid_ratios", "split ratios must be positive"));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("invalid_ratios", "split ratios must sum to 1"));
        }
        Ok(())
    }

    /// Line counts for `n` pairs: train and dev are rounded, test takes the rest.
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let train = ((n as f64) * self.train).round() as usize;
        let train = train.min(n);
        let dev = (((n as f64) * self.dev).round() as usize).min(n - train);
        [train, dev, n - train - dev]
    }
}

pub const SPLITS: [&str; 3] = ["train", "dev", "test"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub format: String,
    pub languages: [LangTag; 2],
    pub status_filter: StatusFilter,
    pub seed: u64,
    pub ratios: SplitRatios,
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    pub files: Vec<String>,
    /// SHA-256 over every file name and content, in file order.
    pub digest: String,
}

/// The text files of an export plus its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportBundle {
    /// File name to content, e.g. `train.en`.
    pub files: BTreeMap<String, String>,
    pub manifest: ExportManifest,
}

impl ExportBundle {
    pub fn manifest_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        json.push('\n');
        json
    }

    /// Files in archive order, manifest last.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut entries: Vec<(String, String)> = self
            .manifest
            .files
            .iter()
            .map(|name| (name.clone(), self.files[name].clone()))
            .collect();
        entries.push(("manifest.json".to_string(), self.manifest_json()));
        entries
    }

    /// Source/target line pairs of one split, English first.
    pub fn split_lines(&self, split: &str) -> Vec<(String, String)> {
        let en = self.files.get(&file_name(split, LangTag::En)).map(String::as_str).unwrap_or("");
        let om = self.files.get(&file_name(split, LangTag::Om)).map(String::as_str).unwrap_or("");
        en.lines().zip(om.lines()).map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }
}

pub fn file_name(split: &str, lang: LangTag) -> String {
    format!("{split}.{lang}")
}

/// Builds the export: selects pairs by status, shuffles their ids with a
/// seeded generator and cuts the result into train, dev and test.
pub fn export_pairs<'a>(
    pairs: impl IntoIterator<Item = &'a SegmentPair>,
    filter: StatusFilter,
    seed: u64,
    ratios: SplitRatios,
) -> Result<ExportBundle> {
    ratios.validate()?;
    let mut selected: BTreeMap<&PairId, &SegmentPair> = BTreeMap::new();
    for pair in pairs {
        if filter.admits(pair.status) {
            selected.insert(&pair.id, pair);
        }
    }
    let mut order: Vec<&PairId> = selected.keys().copied().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let counts = ratios.counts(order.len());
    let mut files = BTreeMap::new();
    let mut names = Vec::new();
    let mut start = 0;
    for (split, count) in SPLITS.iter().zip(counts) {
        let mut en = String::new();
        let mut om = String::new();
        for id in &order[start..start + count] {
            let (en_seg, om_seg) = selected[id].by_language();
            en.push_str(&tokenized_line(&en_seg.normalized, LangTag::En));
            en.push('\n');
            om.push_str(&tokenized_line(&om_seg.normalized, LangTag::Om));
            om.push('\n');
        }
        start += count;
        for (lang, content) in [(LangTag::En, en), (LangTag::Om, om)] {
            let name = file_name(split, lang);
            names.push(name.clone());
            files.insert(name, content);
        }
    }

    let mut hasher = Sha256::new();
    for name in &names {
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update(files[name].as_bytes());
        hasher.update([0]);
    }
    let manifest = ExportManifest {
        format: "bitext".to_string(),
        languages: [LangTag::En, LangTag::Om],
        status_filter: filter,
        seed,
        ratios,
        total: order.len(),
        counts: SPLITS.iter().zip(counts).map(|(s, c)| (s.to_string(), c)).collect(),
        files: names,
        digest: hex::encode(hasher.finalize()),
    };
    Ok(ExportBundle { files, manifest })
}

/// Lines of a bitext file. A final newline does not start another line;
/// a trailing carriage return is removed.
pub fn read_lines(content: &str) -> Vec<String> {
    content
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect()
}

/// Reads two line-aligned files, rejecting unequal line counts.
pub fn read_bitext(src: &str, tgt: &str) -> Result<(Vec<String>, Vec<String>)> {
    let src = read_lines(src);
    let tgt = read_lines(tgt);
    if src.len() != tgt.len() {
        return Err(Error::invalid(
            "line_count_mismatch",
            format!("{} source lines but {} target lines", src.len(), tgt.len()),
        ));
    }
    Ok((src, tgt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocId, Origin, Segment, Timestamp};

    fn pairs(n: usize, status: ReviewStatus) -> Vec<SegmentPair> {
        (0..n)
            .map(|i| {
                let mut p = SegmentPair::new(
                    Segment::new(LangTag::En, &format!("Hello, world {i}."), &DocId::from("e"), i).unwrap(),
                    Segment::new(LangTag::Om, &format!("Akkam, addunyaa {i}."), &DocId::from("o"), i).unwrap(),
                    Origin::Imported,
                    Timestamp(0),
                )
                .unwrap();
                p.set_status(status).unwrap();
                p
            })
            .collect()
    }

    #[test]
    fn split_counts() {
        let r = SplitRatios::default();
        assert_eq!(r.counts(10), [8, 1, 1]);
        assert_eq!(r.counts(0), [0, 0, 0]);
        assert_eq!(r.counts(1), [1, 0, 0]);
        assert_eq!(SplitRatios::new(0.34, 0.33, 0.33).unwrap().counts(3), [1, 1, 1]);
        assert!(SplitRatios::new(0.5, 0.5, 0.0).is_err());
        assert!(SplitRatios::new(0.5, 0.3, 0.3).is_err());
    }

    #[test]
    fn exports_verified_lines() {
        let mut all = pairs(10, ReviewStatus::Verified);
        all.extend(pairs(1, ReviewStatus::Pending).into_iter().map(|mut p| {
            p.id = PairId::from("pending");
            p
        }));
        let bundle = export_pairs(&all, StatusFilter::Verified, 7, SplitRatios::default()).unwrap();
        assert_eq!(bundle.manifest.total, 10);
        assert_eq!(bundle.files["train.en"].lines().count(), 8);
        assert_eq!(bundle.files["train.om"].lines().count(), 8);
        assert_eq!(bundle.files["dev.om"].lines().count(), 1);
        assert!(bundle.files["test.en"].ends_with('\n'));
        assert!(bundle.files["train.en"].lines().all(|l| l.starts_with("Hello , world")));
        assert_eq!(bundle.entries().last().unwrap().0, "manifest.json");
    }

    #[test]
    fn same_seed_same_bytes() {
        let all = pairs(30, ReviewStatus::Verified);
        let a = export_pairs(&all, StatusFilter::Verified, 3, SplitRatios::default()).unwrap();
        let b = export_pairs(all.iter().rev(), StatusFilter::Verified, 3, SplitRatios::default()).unwrap();
        assert_eq!(a, b);
        let c = export_pairs(&all, StatusFilter::Verified, 4, SplitRatios::default()).unwrap();
        assert_ne!(a.manifest.digest, c.manifest.digest);
    }

    #[test]
    fn empty_selection_still_has_files() {
        let bundle = export_pairs(&pairs(3, ReviewStatus::Pending), StatusFilter::Verified, 0, SplitRatios::default()).unwrap();
        assert_eq!(bundle.files.len(), 6);
        assert!(bundle.files.values().all(String::is_empty));
    }

    #[test]
    fn reads_bitext() {
        let (a, b) = read_bitext("x\ny\n", "p\r\nq").unwrap();
        assert_eq!((a, b), (vec!["x".to_string(), "y".into()], vec!["p".to_string(), "q".into()]));
        assert_eq!(read_bitext("x\n", "").unwrap_err().reason(), "line_count_mismatch");
    }
}
