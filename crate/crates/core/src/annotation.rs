//! Retraction-reason coding schema, multi-rater annotations and agreement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Requester};

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("line {line}: malformed annotation: {message}")]
    Malformed { line: usize, message: String },
    #[error("unknown reason code {0:?}")]
    UnknownReason(String),
    #[error("paper {paper_id:?} rated twice by {rater_id:?}")]
    DuplicateRating { paper_id: String, rater_id: String },
    #[error("unequal rater counts; offending subjects: {}", .0.join(", "))]
    UnequalRaterCounts(Vec<String>),
    #[error("each subject needs at least two raters, found {0}")]
    TooFewRaters(usize),
    #[error("no subjects to score")]
    NoSubjects,
    #[error("degenerate agreement: all ratings fall in one category, chance agreement is 1")]
    Degenerate,
    #[error("cannot read annotations: {0}")]
    Io(String),
}

/// Why a paper was retracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonCode {
    Plagiarism,
    FalsificationFabrication,
    ViolationOfRules,
    Error,
    Other,
    NotFound,
}

impl ReasonCode {
    pub const ALL: [ReasonCode; 6] = [
        ReasonCode::Plagiarism,
        ReasonCode::FalsificationFabrication,
        ReasonCode::ViolationOfRules,
        ReasonCode::Error,
        ReasonCode::Other,
        ReasonCode::NotFound,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ReasonCode::Plagiarism => "plagiarism",
            ReasonCode::FalsificationFabrication => "falsification_fabrication",
            ReasonCode::ViolationOfRules => "violation_of_rules",
            ReasonCode::Error => "error",
            ReasonCode::Other => "other",
            ReasonCode::NotFound => "not_found",
        }
    }

    /// Plagiarism, falsification/fabrication and rule violations.
    pub fn is_misconduct(self) -> bool {
        matches!(
            self,
            ReasonCode::Plagiarism | ReasonCode::FalsificationFabrication | ReasonCode::ViolationOfRules
        )
    }
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ReasonCode {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_lowercase();
        ReasonCode::ALL
            .into_iter()
            .find(|r| r.key() == wanted)
            .ok_or_else(|| AnnotationError::UnknownReason(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub paper_id: String,
    pub rater_id: String,
    pub reason: ReasonCode,
    pub requester: Requester,
}

/// Parses `paper_id,rater_id,reason,requester` rows (header required) and
/// rejects repeated (paper, rater) pairs.
pub fn parse_annotations_csv(text: &str) -> Result<Vec<AnnotationRecord>, AnnotationError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<AnnotationRecord>().enumerate() {
        let record = row.map_err(|e| AnnotationError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 2),
            message: e.to_string(),
        })?;
        if !seen.insert((record.paper_id.clone(), record.rater_id.clone())) {
            return Err(AnnotationError::DuplicateRating {
                paper_id: record.paper_id,
                rater_id: record.rater_id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, AnnotationError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AnnotationError::Io(format!("{}: {e}", path.display())))?;
    parse_annotations_csv(&text)
}

pub fn write_annotations_csv(records: &[AnnotationRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CategoryAxis {
    Reason,
    Requester,
}

/// Fleiss' kappa of a subject x category count matrix. Every row must sum to
/// the same rater count n >= 2.
pub fn fleiss_kappa_matrix(counts: &[Vec<u32>]) -> Result<f64, AnnotationError> {
    let first = counts.first().ok_or(AnnotationError::NoSubjects)?;
    let raters: u32 = first.iter().sum();
    let offending: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, row)| row.iter().sum::<u32>() != raters)
        .map(|(i, _)| format!("#{i}"))
        .collect();
    if !offending.is_empty() {
        return Err(AnnotationError::UnequalRaterCounts(offending));
    }
    if raters < 2 {
        return Err(AnnotationError::TooFewRaters(raters as usize));
    }

    let n = raters as f64;
    let subjects = counts.len() as f64;
    let categories = first.len();
    let mut column_totals = vec![0u64; categories];
    let mut agreement_sum = 0.0;
    for row in counts {
        let squares: u64 = row.iter().map(|&c| u64::from(c) * u64::from(c)).sum();
        agreement_sum += (squares as f64 - n) / (n * (n - 1.0));
        for (total, &c) in column_totals.iter_mut().zip(row) {
            *total += u64::from(c);
        }
    }
    let mean_agreement = agreement_sum / subjects;
    let expected: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / (subjects * n);
            p * p
        })
        .sum();
    if expected >= 1.0 {
        return Err(AnnotationError::Degenerate);
    }
    Ok((mean_agreement - expected) / (1.0 - expected))
}

/// How to treat subjects whose rater count differs from the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubjectFilter {
    /// Every subject must have the same count; otherwise an error.
    Strict,
    /// Keep subjects with the most common count (>= 2 raters; ties favor the
    /// larger count) and report how many were dropped.
    #[default]
    ModalCount,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaReport {
    pub axis: CategoryAxis,
    pub kappa: f64,
    pub subjects: usize,
    pub raters: usize,
    pub excluded_subjects: usize,
}

pub fn fleiss_kappa(
    records: &[AnnotationRecord],
    axis: CategoryAxis,
    filter: SubjectFilter,
) -> Result<KappaReport, AnnotationError> {
    let mut by_subject: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_subject.entry(r.paper_id.as_str()).or_default().push(r);
    }
    let total_subjects = by_subject.len();

    let keep_count = match filter {
        SubjectFilter::Strict => {
            let first = by_subject.values().next().ok_or(AnnotationError::NoSubjects)?.len();
            let offending: Vec<String> = by_subject
                .iter()
                .filter(|(_, rs)| rs.len() != first)
                .map(|(id, _)| id.to_string())
                .collect();
            if !offending.is_empty() {
                return Err(AnnotationError::UnequalRaterCounts(offending));
            }
            first
        }
        SubjectFilter::ModalCount => {
            let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
            for rs in by_subject.values().filter(|rs| rs.len() >= 2) {
                *histogram.entry(rs.len()).or_default() += 1;
            }
            histogram
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(count, _)| count)
                .ok_or(AnnotationError::NoSubjects)?
        }
    };

    let width = match axis {
        CategoryAxis::Reason => ReasonCode::ALL.len(),
        CategoryAxis::Requester => Requester::ALL.len(),
    };
    let matrix: Vec<Vec<u32>> = by_subject
        .values()
        .filter(|rs| rs.len() == keep_count)
        .map(|rs| {
            let mut row = vec![0u32; width];
            for r in rs {
                let column = match axis {
                    CategoryAxis::Reason => r.reason as usize,
                    CategoryAxis::Requester => r.requester as usize,
                };
                row[column] += 1;
            }
            row
        })
        .collect();
    let kappa = fleiss_kappa_matrix(&matrix)?;
    Ok(KappaReport {
        axis,
        kappa,
        subjects: matrix.len(),
        raters: keep_count,
        excluded_subjects: total_subjects - matrix.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Most frequent code; ties resolve to `not_found`.
    #[default]
    Majority,
    /// The code given by the lexicographically smallest rater id.
    FirstRater,
}

/// One resolved reason per annotated paper.
pub fn resolve_reasons(
    records: &[AnnotationRecord],
    resolution: Resolution,
) -> BTreeMap<String, ReasonCode> {
    let mut by_paper: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_paper.entry(r.paper_id.as_str()).or_default().push(r);
    }
    by_paper
        .into_iter()
        .map(|(paper, rs)| {
            let code = match resolution {
                Resolution::FirstRater => {
                    rs.iter().min_by(|a, b| a.rater_id.cmp(&b.rater_id)).map(|r| r.reason)
                }
                Resolution::Majority => {
                    let mut votes: BTreeMap<ReasonCode, usize> = BTreeMap::new();
                    for r in &rs {
                        *votes.entry(r.reason).or_default() += 1;
                    }
                    let top = votes.values().copied().max().unwrap_or(0);
                    let mut leaders = votes.iter().filter(|(_, &v)| v == top);
                    match (leaders.next(), leaders.next()) {
                        (Some((&code, _)), None) => Some(code),
                        _ => Some(ReasonCode::NotFound),
                    }
                }
            };
            (paper.to_string(), code.unwrap_or(ReasonCode::NotFound))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReasonShare {
    pub reason: ReasonCode,
    pub count: usize,
    pub proportion: f64,
}

/// Share of each reason over resolved papers; every code is listed.
pub fn reason_distribution(records: &[AnnotationRecord], resolution: Resolution) -> Vec<ReasonShare> {
    let resolved = resolve_reasons(records, resolution);
    let total = resolved.len();
    ReasonCode::ALL
        .into_iter()
        .map(|reason| {
            let count = resolved.values().filter(|&&r| r == reason).count();
            let proportion = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            ReasonShare { reason, count, proportion }
        })
        .collect()
}

/// Which year a retraction is counted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum YearAttribution {
    #[default]
    PublicationYear,
    RetractionYear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendPoint {
    pub year: i32,
    pub count: usize,
    pub published: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReasonSeries {
    pub reason: ReasonCode,
    pub points: Vec<TrendPoint>,
}

/// Yearly rate of the three most frequent known reasons (not_found is not a
/// reason and is skipped), from `from_year` to the last corpus year. The
/// denominator is always papers published in that year.
pub fn reason_trend(
    corpus: &Corpus,
    resolved: &BTreeMap<String, ReasonCode>,
    from_year: i32,
    attribution: YearAttribution,
) -> Vec<ReasonSeries> {
    let mut counted: BTreeMap<ReasonCode, BTreeMap<i32, usize>> = BTreeMap::new();
    for (paper_id, &reason) in resolved {
        if !corpus.is_retracted(paper_id) {
            continue;
        }
        let Some(paper) = corpus.paper(paper_id) else { continue };
        let year = match attribution {
            YearAttribution::PublicationYear => Some(paper.pub_year),
            YearAttribution::RetractionYear => corpus.retraction_year(paper_id),
        };
        if let Some(year) = year {
            *counted.entry(reason).or_default().entry(year).or_default() += 1;
        }
    }

    let mut ranked: Vec<(ReasonCode, usize)> = counted
        .iter()
        .filter(|(r, _)| **r != ReasonCode::NotFound)
        .map(|(r, years)| (*r, years.values().sum()))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let Some((_, last_year)) = corpus.year_range() else { return Vec::new() };
    let published = corpus.publications_per_year();
    ranked
        .into_iter()
        .take(3)
        .map(|(reason, _)| {
            let years = &counted[&reason];
            let points = (from_year..=last_year)
                .filter_map(|year| {
                    let total = *published.get(&year)?;
                    let count = years.get(&year).copied().unwrap_or(0);
                    Some(TrendPoint { year, count, published: total, rate: count as f64 / total as f64 })
                })
                .collect();
            ReasonSeries { reason, points }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(paper: &str, rater: &str, reason: ReasonCode) -> AnnotationRecord {
        AnnotationRecord {
            paper_id: paper.into(),
            rater_id: rater.into(),
            reason,
            requester: Requester::Editor,
        }
    }

    /// Direct transcription of the published formula, kept separate from the
    /// streaming implementation above.
    fn kappa_oracle(m: &[Vec<u32>]) -> f64 {
        let big_n = m.len() as f64;
        let n: f64 = m[0].iter().map(|&c| c as f64).sum();
        let k = m[0].len();
        let p_j: Vec<f64> = (0..k)
            .map(|j| m.iter().map(|row| row[j] as f64).sum::<f64>() / (big_n * n))
            .collect();
        let p_i: Vec<f64> = m
            .iter()
            .map(|row| {
                let s: f64 = row.iter().map(|&c| (c as f64) * (c as f64 - 1.0)).sum();
                s / (n * (n - 1.0))
            })
            .collect();
        let p_bar = p_i.iter().sum::<f64>() / big_n;
        let p_e: f64 = p_j.iter().map(|p| p * p).sum();
        (p_bar - p_e) / (1.0 - p_e)
    }

    #[test]
    fn unanimous_raters_give_one() {
        let m = vec![vec![4, 0, 0], vec![0, 4, 0], vec![0, 0, 4], vec![4, 0, 0]];
        assert_eq!(fleiss_kappa_matrix(&m).unwrap(), 1.0);
    }

    #[test]
    fn full_disagreement_gives_minus_one() {
        let records = vec![
            rec("i1", "r1", ReasonCode::Plagiarism),
            rec("i1", "r2", ReasonCode::Error),
            rec("i2", "r1", ReasonCode::Error),
            rec("i2", "r2", ReasonCode::Plagiarism),
        ];
        let report = fleiss_kappa(&records, CategoryAxis::Reason, SubjectFilter::Strict).unwrap();
        assert_eq!(report.kappa, -1.0);
    }

    #[test]
    fn matches_formula_oracle_on_fixed_fixture() {
        // 10 items x 4 raters x 3 categories.
        let m = vec![
            vec![4, 0, 0], vec![2, 2, 0], vec![1, 1, 2], vec![0, 4, 0], vec![3, 0, 1],
            vec![0, 1, 3], vec![2, 1, 1], vec![0, 0, 4], vec![1, 3, 0], vec![4, 0, 0],
        ];
        let got = fleiss_kappa_matrix(&m).unwrap();
        assert!((got - kappa_oracle(&m)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_unequal_cases() {
        assert_eq!(fleiss_kappa_matrix(&[vec![3, 0], vec![3, 0]]), Err(AnnotationError::Degenerate));
        let records = vec![
            rec("a", "r1", ReasonCode::Error),
            rec("a", "r2", ReasonCode::Error),
            rec("b", "r1", ReasonCode::Error),
        ];
        match fleiss_kappa(&records, CategoryAxis::Reason, SubjectFilter::Strict) {
            Err(AnnotationError::UnequalRaterCounts(ids)) => assert_eq!(ids, ["b"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn modal_filter_drops_odd_subjects() {
        let mut records = Vec::new();
        for (p, reasons) in [
            ("a", vec![ReasonCode::Error, ReasonCode::Error]),
            ("b", vec![ReasonCode::Plagiarism, ReasonCode::Error]),
            ("c", vec![ReasonCode::Plagiarism, ReasonCode::Plagiarism]),
            ("d", vec![ReasonCode::Other]),
        ] {
            for (i, r) in reasons.into_iter().enumerate() {
                records.push(rec(p, &format!("r{i}"), r));
            }
        }
        let report =
            fleiss_kappa(&records, CategoryAxis::Reason, SubjectFilter::ModalCount).unwrap();
        assert_eq!((report.subjects, report.raters, report.excluded_subjects), (3, 2, 1));
    }

    proptest! {
        #[test]
        fn kappa_invariant_under_relabel_and_reorder(
            rows in prop::collection::vec(prop::collection::vec(0u32..4, 3), 3..12),
            rotate in 0usize..3,
        ) {
            // Force equal rater counts by topping up the last category.
            let m: Vec<Vec<u32>> = rows.into_iter().map(|mut r| {
                let s: u32 = r.iter().sum();
                r.push(12 - s);
                r
            }).collect();
            let base = fleiss_kappa_matrix(&m);
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            let relabeled: Vec<Vec<u32>> = m.iter().map(|r| {
                let mut r = r.clone();
                r.rotate_left(rotate);
                r
            }).collect();
            let mut reordered = m.clone();
            reordered.reverse();
            prop_assert!((fleiss_kappa_matrix(&relabeled).unwrap() - base).abs() < 1e-12);
            prop_assert!((fleiss_kappa_matrix(&reordered).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_and_tie_rules() {
        let records = vec![
            rec("p", "r1", ReasonCode::Plagiarism),
            rec("p", "r2", ReasonCode::Plagiarism),
            rec("p", "r3", ReasonCode::Error),
            rec("q", "r1", ReasonCode::Error),
            rec("q", "r2", ReasonCode::Other),
        ];
        let resolved = resolve_reasons(&records, Resolution::Majority);
        assert_eq!(resolved["p"], ReasonCode::Plagiarism);
        assert_eq!(resolved["q"], ReasonCode::NotFound);
        let first = resolve_reasons(&records, Resolution::FirstRater);
        assert_eq!(first["q"], ReasonCode::Error);
    }

    #[test]
    fn distribution_sums_to_one() {
        let records = vec![
            rec("a", "r", ReasonCode::Plagiarism),
            rec("b", "r", ReasonCode::Plagiarism),
            rec("c", "r", ReasonCode::Error),
        ];
        let dist = reason_distribution(&records, Resolution::Majority);
        let total: f64 = dist.iter().map(|s| s.proportion).sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert_eq!(dist[0].count, 2);
        assert_eq!(dist[0].proportion, 2.0 / 3.0);
    }

    #[test]
    fn csv_parsing_rejects_duplicate_pairs() {
        let ok = "paper_id,rater_id,reason,requester\np1,r1,plagiarism,editor\np1,r2,error,author\n";
        assert_eq!(parse_annotations_csv(ok).unwrap().len(), 2);
        let dup = "paper_id,rater_id,reason,requester\np1,r1,plagiarism,editor\np1,r1,error,author\n";
        assert!(matches!(
            parse_annotations_csv(dup),
            Err(AnnotationError::DuplicateRating { .. })
        ));
        let bad = "paper_id,rater_id,reason,requester\np1,r1,bogus,editor\n";
        assert!(matches!(parse_annotations_csv(bad), Err(AnnotationError::Malformed { line: 2, .. })));
    }

    mod trend {
        use super::*;
        use crate::corpus::tests::paper;
        use crate::corpus::{annual_retraction_rate, IngestOptions, RetractionNotice};

        fn corpus_with_ramp() -> (Corpus, BTreeMap<String, ReasonCode>) {
            let mut records = Vec::new();
            let mut resolved = BTreeMap::new();
            for (offset, year) in (2000..2005).enumerate() {
                for i in 0..20 {
                    let id = format!("p{year}-{i:02}");
                    let mut p = paper(&id, year, &[]);
                    // plagiarism ramps 0,1,2,3,4; one error paper in 2002 only
                    let reason = if i < offset {
                        Some(ReasonCode::Plagiarism)
                    } else if year == 2002 && i == 10 {
                        Some(ReasonCode::Error)
                    } else {
                        None
                    };
                    if let Some(reason) = reason {
                        p.retraction = Some(RetractionNotice {
                            retraction_year: year + 1,
                            reason: Some(reason),
                            requester: Requester::Editor,
                        });
                        resolved.insert(id, reason);
                    }
                    records.push(p);
                }
            }
            (Corpus::from_records(records, &IngestOptions::default()).unwrap(), resolved)
        }

        #[test]
        fn ramp_is_monotone_and_bounded_by_overall_rate() {
            let (corpus, resolved) = corpus_with_ramp();
            let trend = reason_trend(&corpus, &resolved, 2000, YearAttribution::PublicationYear);
            assert_eq!(trend[0].reason, ReasonCode::Plagiarism);
            let rates: Vec<f64> = trend[0].points.iter().map(|p| p.rate).collect();
            assert!(rates.windows(2).all(|w| w[0] < w[1]), "{rates:?}");
            assert_eq!(trend[1].reason, ReasonCode::Error);
            assert_eq!(trend[1].points[0].rate, 0.0);

            let overall = annual_retraction_rate(&corpus);
            for (i, entry) in overall.iter().enumerate() {
                let sum: f64 = trend.iter().map(|s| s.points[i].rate).sum();
                assert!(sum <= entry.rate + 1e-15);
            }
        }

        #[test]
        fn retraction_year_attribution_shifts_series() {
            let (corpus, resolved) = corpus_with_ramp();
            let trend = reason_trend(&corpus, &resolved, 2000, YearAttribution::RetractionYear);
            let counts: Vec<usize> = trend[0].points.iter().map(|p| p.count).collect();
            assert_eq!(counts, [0, 0, 1, 2, 3]);
        }
    }
}
