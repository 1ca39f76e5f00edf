//! Title topics, topical popularity and retraction-rate series, and the
//! Granger screen of retraction rate against popularity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, EsiCategory};
use crate::stats::{granger_test, GrangerResult};

#[derive(Debug, Error, PartialEq)]
pub enum TopicsError {
    #[error("cannot read dictionary {path}: {message}")]
    Dictionary { path: String, message: String },
    #[error("dictionary line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("cannot write series: {0}")]
    Export(String),
}

/// Maps a title to a set of topic keys.
///
/// The dictionary annotator is the default; a remote concept tagger can be
/// plugged in by implementing this trait.
pub trait TitleAnnotator: Sync {
    fn annotate(&self, title: &str) -> BTreeSet<String>;

    /// The topic set K this annotator can emit.
    fn topics(&self) -> BTreeSet<String>;
}

/// Case-insensitive, greedy longest-match phrase dictionary over word tokens.
#[derive(Debug, Clone, Default)]
pub struct DictionaryAnnotator {
    phrases: HashMap<Vec<String>, String>,
    longest: usize,
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

impl DictionaryAnnotator {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut dict = DictionaryAnnotator::default();
        for (phrase, topic) in pairs {
            dict.insert(phrase, topic);
        }
        dict
    }

    fn insert(&mut self, phrase: &str, topic: &str) {
        let toks = tokens(phrase);
        if toks.is_empty() {
            return;
        }
        self.longest = self.longest.max(toks.len());
        self.phrases.insert(toks, topic.to_string());
    }

    /// Parses "phrase<TAB>topic_key" lines. Blank lines and lines starting
    /// with '#' are skipped.
    pub fn parse(text: &str) -> Result<Self, TopicsError> {
        let mut dict = DictionaryAnnotator::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: &str| TopicsError::BadLine { line: i + 1, message: message.to_string() };
            let (phrase, topic) = line.split_once('\t').ok_or_else(|| bad("expected phrase<TAB>topic"))?;
            let topic = topic.trim();
            if topic.is_empty() || topic.contains('\t') {
                return Err(bad("topic key must be a single non-empty field"));
            }
            if tokens(phrase).is_empty() {
                return Err(bad("phrase has no words"));
            }
            dict.insert(phrase, topic);
        }
        Ok(dict)
    }

    pub fn from_path(path: &Path) -> Result<Self, TopicsError> {
        let text = std::fs::read_to_string(path).map_err(|e| TopicsError::Dictionary {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

impl TitleAnnotator for DictionaryAnnotator {
    fn annotate(&self, title: &str) -> BTreeSet<String> {
        let toks = tokens(title);
        let mut found = BTreeSet::new();
        let mut i = 0;
        while i < toks.len() {
            let max = self.longest.min(toks.len() - i);
            let hit = (1..=max).rev().find_map(|len| self.phrases.get(&toks[i..i + len]).map(|t| (len, t)));
            match hit {
                Some((len, topic)) => {
                    found.insert(topic.clone());
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }

    fn topics(&self) -> BTreeSet<String> {
        self.phrases.values().cloned().collect()
    }
}

/// paper_id → topic set, for every paper.
pub type TopicAssignments = BTreeMap<String, BTreeSet<String>>;

pub fn annotate_titles(corpus: &Corpus, annotator: &dyn TitleAnnotator) -> TopicAssignments {
    let papers: Vec<_> = corpus.papers().collect();
    papers.par_iter().map(|p| (p.paper_id.clone(), annotator.annotate(&p.title))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicPoint {
    pub year: i32,
    /// Papers of the topic published this year.
    pub topical: usize,
    /// Retracted papers of the topic published this year.
    pub topical_retracted: usize,
    pub published: usize,
    pub pop: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicSeries {
    pub topic: String,
    pub esi_category: Option<EsiCategory>,
    pub points: Vec<TopicPoint>,
}

impl TopicSeries {
    pub fn pop(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.pop).collect()
    }

    pub fn ret(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ret).collect()
    }
}

/// Most frequent ESI category among papers; ties go to the smaller key.
fn esi_mode<'a>(corpus: &Corpus, ids: impl Iterator<Item = &'a String>) -> Option<EsiCategory> {
    let mut counts: BTreeMap<&'static str, (usize, EsiCategory)> = BTreeMap::new();
    for p in ids.filter_map(|id| corpus.paper(id)) {
        counts.entry(p.esi_category.key()).or_insert((0, p.esi_category)).0 += 1;
    }
    let top = counts.values().map(|v| v.0).max()?;
    counts.values().find(|v| v.0 == top).map(|v| v.1)
}

/// Pop and Ret for `topic` over the corpus year range. Both use all papers
/// published in the year as denominator; a year without papers scores 0.
pub fn topic_series(
    corpus: &Corpus,
    assignments: &TopicAssignments,
    known: &BTreeSet<String>,
    topic: &str,
) -> Result<TopicSeries, TopicsError> {
    if !known.contains(topic) {
        return Err(TopicsError::UnknownTopic(topic.to_string()));
    }
    let members: Vec<&String> =
        assignments.iter().filter(|(_, ts)| ts.contains(topic)).map(|(id, _)| id).collect();
    let mut topical: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    for id in &members {
        if let Some(p) = corpus.paper(id) {
            let e = topical.entry(p.pub_year).or_default();
            e.0 += 1;
            if corpus.is_retracted(id) {
                e.1 += 1;
            }
        }
    }
    let published = corpus.publications_per_year();
    let points = match corpus.year_range() {
        Some((first, last)) => (first..=last)
            .map(|year| {
                let total = published.get(&year).copied().unwrap_or(0);
                let (k, rk) = topical.get(&year).copied().unwrap_or((0, 0));
                let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
                TopicPoint {
                    year,
                    topical: k,
                    topical_retracted: rk,
                    published: total,
                    pop: frac(k),
                    ret: frac(rk),
                }
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(TopicSeries {
        topic: topic.to_string(),
        esi_category: esi_mode(corpus, members.into_iter()),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicRank {
    pub topic: String,
    /// Retracted papers carrying the topic.
    pub frequency: usize,
    pub esi_category: Option<EsiCategory>,
}

/// Topics ranked by frequency among retracted papers; ties by name.
pub fn top_topics(corpus: &Corpus, assignments: &TopicAssignments, limit: usize) -> Vec<TopicRank> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for (id, topics) in assignments {
        if corpus.is_retracted(id) {
            for t in topics {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(limit)
        .map(|(topic, frequency)| {
            let members = assignments.iter().filter(|(_, ts)| ts.contains(topic)).map(|(id, _)| id);
            TopicRank { topic: topic.to_string(), frequency, esi_category: esi_mode(corpus, members) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenCell {
    pub topic: String,
    pub lags: usize,
    pub result: Option<GrangerResult>,
    pub significant: bool,
    /// Why the cell was not computed.
    pub note: Option<String>,
}

/// Coefficients of a significant cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub topic: String,
    pub lags: usize,
    pub p_value: f64,
    pub intercept: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub max_abs_a: f64,
    pub max_abs_b: f64,
    /// Every |B_j| is below the largest |A_i|.
    pub b_below_a: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrangerScreen {
    pub cells: Vec<ScreenCell>,
    pub coefficients: Vec<CoefficientRow>,
}

pub const SIGNIFICANCE: f64 = 0.05;

/// Tests whether each topic's retraction rate Granger-causes its popularity
/// for every lag order in `lags`.
pub fn topic_granger_screen(
    corpus: &Corpus,
    assignments: &TopicAssignments,
    known: &BTreeSet<String>,
    topics: &[String],
    lags: &[usize],
) -> Result<GrangerScreen, TopicsError> {
    let series: Vec<TopicSeries> = topics
        .iter()
        .map(|t| topic_series(corpus, assignments, known, t))
        .collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    let mut coefficients = Vec::new();
    for s in &series {
        let (x, y) = (s.ret(), s.pop());
        for &n in lags {
            let cell = match granger_test(&x, &y, n) {
                Ok(r) => {
                    let significant = r.p_value < SIGNIFICANCE;
                    if significant {
                        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                        let (ma, mb) = (max_abs(&r.y_lag_coefficients), max_abs(&r.x_lag_coefficients));
                        coefficients.push(CoefficientRow {
                            topic: s.topic.clone(),
                            lags: n,
                            p_value: r.p_value,
                            intercept: r.intercept,
                            a: r.y_lag_coefficients.clone(),
                            b: r.x_lag_coefficients.clone(),
                            max_abs_a: ma,
                            max_abs_b: mb,
                            b_below_a: mb < ma,
                        });
                    }
                    ScreenCell { topic: s.topic.clone(), lags: n, result: Some(r), significant, note: None }
                }
                Err(e) => ScreenCell {
                    topic: s.topic.clone(),
                    lags: n,
                    result: None,
                    significant: false,
                    note: Some(e.to_string()),
                },
            };
            cells.push(cell);
        }
    }
    Ok(GrangerScreen { cells, coefficients })
}

/// topic,year,pop,ret rows for every series.
pub fn write_series_csv<W: std::io::Write>(series: &[TopicSeries], out: W) -> Result<(), TopicsError> {
    let err = |e: csv::Error| TopicsError::Export(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic", "year", "pop", "ret"]).map_err(err)?;
    for s in series {
        for p in &s.points {
            w.write_record([s.topic.clone(), p.year.to_string(), p.pop.to_string(), p.ret.to_string()])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| TopicsError::Export(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::ReasonCode;
    use crate::corpus::tests::paper;
    use crate::corpus::{IngestOptions, Requester, RetractionNotice};

    fn dict() -> DictionaryAnnotator {
        DictionaryAnnotator::from_pairs([
            ("apoptosis", "apoptosis"),
            ("tumor", "tumor"),
            ("gene", "gene"),
            ("gene expression", "gene_expression"),
        ])
    }

    #[test]
    fn dictionary_matches() {
        let d = dict();
        let got = d.annotate("Apoptosis in tumor cells");
        assert_eq!(got, ["apoptosis", "tumor"].into_iter().map(String::from).collect());
        assert!(d.annotate("Nothing to see").is_empty());
        let overlap = d.annotate("Gene Expression profiling");
        assert_eq!(overlap, ["gene_expression"].into_iter().map(String::from).collect());
        assert_eq!(d.annotate("a gene, then gene expression").len(), 2);
        assert_eq!(d.annotate(&"x".repeat(3)), BTreeSet::new());
    }

    #[test]
    fn dictionary_file_errors() {
        let err = DictionaryAnnotator::parse("apoptosis\tapoptosis\nno tab here\n").unwrap_err();
        assert_eq!(err, TopicsError::BadLine { line: 2, message: "expected phrase<TAB>topic".into() });
        let missing = DictionaryAnnotator::from_path(Path::new("/nonexistent/dict.tsv")).unwrap_err();
        assert!(matches!(missing, TopicsError::Dictionary { .. }));
        let ok = DictionaryAnnotator::parse("# comment\n\nGene Expression\tgene_expression\n").unwrap();
        assert_eq!(ok.topics().len(), 1);
    }

    fn fixture() -> Corpus {
        // 10 papers in 2000: 3 about tumors, one of them retracted.
        let mut records = Vec::new();
        for i in 0..10 {
            let mut p = paper(&format!("p{i}"), 2000, &[]);
            if i < 3 {
                p.title = format!("Tumor study {i}");
            }
            if i == 0 {
                p.retraction = Some(RetractionNotice {
                    retraction_year: 2001,
                    reason: Some(ReasonCode::Error),
                    requester: Requester::Author,
                });
            }
            records.push(p);
        }
        Corpus::from_records(records, &IngestOptions::default()).unwrap()
    }

    #[test]
    fn series_fixture() {
        let corpus = fixture();
        let d = dict();
        let assignments = annotate_titles(&corpus, &d);
        let s = topic_series(&corpus, &assignments, &d.topics(), "tumor").unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!((s.points[0].pop, s.points[0].ret), (0.3, 0.1));
        let none = topic_series(&corpus, &assignments, &d.topics(), "apoptosis").unwrap();
        assert!(none.ret().iter().all(|&r| r == 0.0));
        assert_eq!(
            topic_series(&corpus, &assignments, &d.topics(), "cats"),
            Err(TopicsError::UnknownTopic("cats".into()))
        );
    }

    #[test]
    fn ranking_ties_by_name() {
        let corpus = fixture();
        let mut assignments = TopicAssignments::new();
        assert!(top_topics(&corpus, &assignments, 5).is_empty());
        assignments.insert("p0".into(), ["b", "c", "a"].into_iter().map(String::from).collect());
        let ranked = top_topics(&corpus, &assignments, 2);
        let names: Vec<&str> = ranked.iter().map(|r| r.topic.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(ranked[0].esi_category, Some(EsiCategory::Chemistry));
    }

    #[test]
    fn screen_marks_short_series() {
        let corpus = fixture();
        let d = dict();
        let assignments = annotate_titles(&corpus, &d);
        let screen =
            topic_granger_screen(&corpus, &assignments, &d.topics(), &["tumor".into()], &[1, 2]).unwrap();
        assert_eq!(screen.cells.len(), 2);
        assert!(screen.cells.iter().all(|c| c.result.is_none() && c.note.is_some()));
    }
}
