//! Bibliographic records, entity keys and the indexed citation corpus.

mod describe;
mod ingest;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::ReasonCode;

pub use describe::{
    annual_retraction_rate, citation_distribution, esi_retraction_rates, retraction_delay,
    CitationDistribution, CitationSubset, DelayReport, EsiRate, LogBin, PaperDelay, RateEntry,
    YearMedian,
};
pub use ingest::{ingest_corpus, parse_csv, parse_jsonl, InputFormat};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate paper_id {0:?}")]
    DuplicateId(String),
    #[error("self-citation edge in paper {0:?}")]
    SelfCitation(String),
    #[error("paper {id:?} lists reference {reference:?} more than once")]
    DuplicateReference { id: String, reference: String },
    #[error("paper {id:?}: pub_year {year} outside corpus window {from}-{to}")]
    YearOutOfWindow { id: String, year: i32, from: i32, to: i32 },
    #[error("paper {id:?}: pub_month {month} not in 1-12")]
    InvalidMonth { id: String, month: u8 },
    #[error("paper {id:?}: retraction year {retraction_year} precedes publication year {pub_year}")]
    RetractionBeforePublication { id: String, pub_year: i32, retraction_year: i32 },
    #[error("unknown ESI category {0:?}")]
    UnknownEsiCategory(String),
    #[error("unknown requester {0:?}")]
    UnknownRequester(String),
    #[error("unknown paper {0:?}")]
    UnknownPaper(String),
    #[error("cannot read corpus: {0}")]
    Io(String),
}

macro_rules! esi_categories {
    ($($variant:ident => $key:literal, $label:literal;)*) => {
        /// The 22 ESI journal subject categories.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum EsiCategory {
            $($variant,)*
        }

        impl EsiCategory {
            pub const ALL: [EsiCategory; 22] = [$(EsiCategory::$variant,)*];

            /// Stable snake_case key; used for serialization and name-order ties.
            pub fn key(self) -> &'static str {
                match self {
                    $(EsiCategory::$variant => $key,)*
                }
            }

            pub fn label(self) -> &'static str {
                match self {
                    $(EsiCategory::$variant => $label,)*
                }
            }
        }
    };
}

esi_categories! {
    AgriculturalSciences => "agricultural_sciences", "agricultural sciences";
    BiologyBiochemistry => "biology_biochemistry", "biology & biochemistry";
    Chemistry => "chemistry", "chemistry";
    ClinicalMedicine => "clinical_medicine", "clinical medicine";
    ComputerScience => "computer_science", "computer science";
    EconomicsBusiness => "economics_business", "economics & business";
    Engineering => "engineering", "engineering";
    EnvironmentEcology => "environment_ecology", "environment/ecology";
    Geosciences => "geosciences", "geosciences";
    Immunology => "immunology", "immunology";
    MaterialsScience => "materials_science", "materials science";
    Mathematics => "mathematics", "mathematics";
    Microbiology => "microbiology", "microbiology";
    MolecularBiologyGenetics => "molecular_biology_genetics", "molecular biology & genetics";
    Multidisciplinary => "multidisciplinary", "multidisciplinary";
    NeuroscienceBehavior => "neuroscience_behavior", "neuroscience & behavior";
    PharmacologyToxicology => "pharmacology_toxicology", "pharmacology & toxicology";
    Physics => "physics", "physics";
    PlantAnimalScience => "plant_animal_science", "plant & animal science";
    PsychiatryPsychology => "psychiatry_psychology", "psychiatry/psychology";
    SocialSciencesGeneral => "social_sciences_general", "social sciences, general";
    SpaceScience => "space_science", "space science";
}

impl fmt::Display for EsiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for EsiCategory {
    type Err = CorpusError;

    /// Accepts the snake_case key or the human label, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_lowercase();
        EsiCategory::ALL
            .into_iter()
            .find(|c| c.key() == wanted || c.label() == wanted)
            .ok_or_else(|| CorpusError::UnknownEsiCategory(s.to_string()))
    }
}

/// Who asked for the retraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requester {
    Editor,
    Author,
    #[default]
    NotFound,
}

impl Requester {
    pub const ALL: [Requester; 3] = [Requester::Editor, Requester::Author, Requester::NotFound];

    pub fn key(self) -> &'static str {
        match self {
            Requester::Editor => "editor",
            Requester::Author => "author",
            Requester::NotFound => "not_found",
        }
    }
}

impl FromStr for Requester {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_lowercase();
        Requester::ALL
            .into_iter()
            .find(|r| r.key() == wanted)
            .ok_or_else(|| CorpusError::UnknownRequester(s.to_string()))
    }
}

/// Retraction notice attached to a record. A missing `reason` means the
/// reason is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractionNotice {
    pub retraction_year: i32,
    #[serde(default)]
    pub reason: Option<ReasonCode>,
    #[serde(default)]
    pub requester: Requester,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    pub pub_year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pub_month: Option<u8>,
    pub journal: String,
    pub esi_category: EsiCategory,
    #[serde(default)]
    pub author_names: Vec<String>,
    #[serde(default)]
    pub institution_names: Vec<String>,
    #[serde(default)]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retraction: Option<RetractionNotice>,
}

impl PaperRecord {
    /// Matching date: (year, month) when the month is known, else year only.
    pub fn pub_date(&self) -> (i32, Option<u8>) {
        (self.pub_year, self.pub_month)
    }

    pub fn normalized_authors(&self) -> Vec<String> {
        self.author_names.iter().map(|a| normalize_name(a)).collect()
    }

    pub fn normalized_institutions(&self) -> Vec<String> {
        self.institution_names.iter().map(|i| normalize_name(i)).collect()
    }

    /// True when the title carries the "retracted article" marker.
    pub fn has_retraction_marker(&self) -> bool {
        self.title.to_lowercase().contains(RETRACTION_MARKER)
    }
}

const RETRACTION_MARKER: &str = "retracted article";

/// Year cited inside a title retraction marker, e.g.
/// "(Retracted Article. See vol. 143, pg. 1079, 2007)" yields 2007.
fn marker_year(title: &str, pub_year: i32) -> Option<i32> {
    let lower = title.to_lowercase();
    let start = lower.find(RETRACTION_MARKER)?;
    let tail = &lower[start..];
    let tail = match tail.find(')') {
        Some(end) => &tail[..end],
        None => tail,
    };
    tail.split(|c: char| !c.is_ascii_digit())
        .filter(|tok| tok.len() == 4)
        .filter_map(|tok| tok.parse::<i32>().ok())
        .filter(|&y| y >= pub_year)
        .last()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Paper,
    Author,
    Institution,
}

impl EntityKind {
    pub fn key(self) -> &'static str {
        match self {
            EntityKind::Paper => "paper",
            EntityKind::Author => "author",
            EntityKind::Institution => "institution",
        }
    }
}

/// A paper id, or a normalized author or institution name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityKey {
    pub kind: EntityKind,
    pub key: String,
}

impl EntityKey {
    pub fn paper(id: impl Into<String>) -> Self {
        EntityKey { kind: EntityKind::Paper, key: id.into() }
    }

    /// Builds an author key, normalizing the raw name.
    pub fn author(name: &str) -> Self {
        EntityKey { kind: EntityKind::Author, key: normalize_name(name) }
    }

    pub fn institution(name: &str) -> Self {
        EntityKey { kind: EntityKind::Institution, key: normalize_name(name) }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.key(), self.key)
    }
}

/// Lowercases, strips punctuation other than hyphens and collapses
/// whitespace. Idempotent.
pub fn normalize_name(raw: &str) -> String {
    let lowered: String = raw
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace() || *c == '-')
        .collect();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Validation window and other ingest knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub first_year: i32,
    pub last_year: i32,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { first_year: 1980, last_year: 2014 }
    }
}

/// Indexed, immutable citation corpus.
///
/// `cited_by` is the transpose of the in-corpus part of `references`;
/// references to ids outside the corpus stay on the record but never produce
/// a `cited_by` entry.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    papers: BTreeMap<String, PaperRecord>,
    cited_by: BTreeMap<String, Vec<String>>,
    by_author: BTreeMap<String, Vec<String>>,
    by_institution: BTreeMap<String, Vec<String>>,
    by_year: BTreeMap<i32, Vec<String>>,
    by_journal: BTreeMap<String, Vec<String>>,
    retracted: BTreeSet<String>,
}

impl Corpus {
    /// Validates records and builds every index. Journal names are
    /// normalized on the way in.
    pub fn from_records(
        records: Vec<PaperRecord>,
        options: &IngestOptions,
    ) -> Result<Self, CorpusError> {
        let mut papers = BTreeMap::new();
        for mut record in records {
            validate_record(&record, options)?;
            record.journal = normalize_name(&record.journal);
            if papers.contains_key(&record.paper_id) {
                return Err(CorpusError::DuplicateId(record.paper_id));
            }
            papers.insert(record.paper_id.clone(), record);
        }

        let mut corpus = Corpus { papers, ..Default::default() };
        for (id, paper) in &corpus.papers {
            for reference in &paper.references {
                if corpus.papers.contains_key(reference) {
                    corpus.cited_by.entry(reference.clone()).or_default().push(id.clone());
                }
            }
            let mut authors: Vec<String> = paper.normalized_authors();
            authors.sort();
            authors.dedup();
            for author in authors.into_iter().filter(|a| !a.is_empty()) {
                corpus.by_author.entry(author).or_default().push(id.clone());
            }
            let mut institutions = paper.normalized_institutions();
            institutions.sort();
            institutions.dedup();
            for inst in institutions.into_iter().filter(|i| !i.is_empty()) {
                corpus.by_institution.entry(inst).or_default().push(id.clone());
            }
            corpus.by_year.entry(paper.pub_year).or_default().push(id.clone());
            corpus.by_journal.entry(paper.journal.clone()).or_default().push(id.clone());
            if paper.retraction.is_some() || paper.has_retraction_marker() {
                corpus.retracted.insert(id.clone());
            }
        }
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn paper(&self, id: &str) -> Option<&PaperRecord> {
        self.papers.get(id)
    }

    /// Papers in id order.
    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }

    /// In-corpus citing papers of `id`, in id order.
    pub fn cited_by(&self, id: &str) -> &[String] {
        self.cited_by.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn citation_count(&self, id: &str) -> usize {
        self.cited_by(id).len()
    }

    pub fn papers_by_author(&self, normalized: &str) -> &[String] {
        self.by_author.get(normalized).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn papers_by_institution(&self, normalized: &str) -> &[String] {
        self.by_institution.get(normalized).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn papers_in_year(&self, year: i32) -> &[String] {
        self.by_year.get(&year).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn papers_in_journal(&self, normalized: &str) -> &[String] {
        self.by_journal.get(normalized).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.by_author.keys().map(String::as_str)
    }

    pub fn institutions(&self) -> impl Iterator<Item = &str> {
        self.by_institution.keys().map(String::as_str)
    }

    /// Inclusive (first, last) publication year, if the corpus is non-empty.
    pub fn year_range(&self) -> Option<(i32, i32)> {
        let first = *self.by_year.keys().next()?;
        let last = *self.by_year.keys().next_back()?;
        Some((first, last))
    }

    pub fn publications_per_year(&self) -> BTreeMap<i32, usize> {
        self.by_year.iter().map(|(y, ids)| (*y, ids.len())).collect()
    }

    pub fn is_retracted(&self, id: &str) -> bool {
        self.retracted.contains(id)
    }

    /// Retraction year from the notice, falling back to the year cited in
    /// the title marker. `None` for non-retracted papers or when neither
    /// source gives a year.
    pub fn retraction_year(&self, id: &str) -> Option<i32> {
        if !self.is_retracted(id) {
            return None;
        }
        let paper = self.papers.get(id)?;
        match &paper.retraction {
            Some(notice) => Some(notice.retraction_year),
            None => marker_year(&paper.title, paper.pub_year),
        }
    }

    /// Ids of retracted papers, in id order.
    pub fn retracted_ids(&self) -> impl Iterator<Item = &str> {
        self.retracted.iter().map(String::as_str)
    }

    pub fn retracted_count(&self) -> usize {
        self.retracted.len()
    }
}

/// Every paper whose title carries the "retracted article" marker or that has
/// an explicit notice, in id order.
pub fn detect_retractions(corpus: &Corpus) -> Vec<String> {
    corpus.retracted_ids().map(str::to_string).collect()
}

fn validate_record(record: &PaperRecord, options: &IngestOptions) -> Result<(), CorpusError> {
    let id = &record.paper_id;
    if record.pub_year < options.first_year || record.pub_year > options.last_year {
        return Err(CorpusError::YearOutOfWindow {
            id: id.clone(),
            year: record.pub_year,
            from: options.first_year,
            to: options.last_year,
        });
    }
    if let Some(month) = record.pub_month {
        if !(1..=12).contains(&month) {
            return Err(CorpusError::InvalidMonth { id: id.clone(), month });
        }
    }
    let mut seen = BTreeSet::new();
    for reference in &record.references {
        if reference == id {
            return Err(CorpusError::SelfCitation(id.clone()));
        }
        if !seen.insert(reference.as_str()) {
            return Err(CorpusError::DuplicateReference {
                id: id.clone(),
                reference: reference.clone(),
            });
        }
    }
    if let Some(notice) = &record.retraction {
        if notice.retraction_year < record.pub_year {
            return Err(CorpusError::RetractionBeforePublication {
                id: id.clone(),
                pub_year: record.pub_year,
                retraction_year: notice.retraction_year,
            });
        }
    }
    Ok(())
}
