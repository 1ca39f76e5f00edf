//! Treatment-versus-control comparisons over matched cohorts.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::mann_whitney::{mann_whitney_u, Alternative, MwResult};
use super::{median, StatsError};
use crate::annotation::ReasonCode;
use crate::cohort::{CohortPair, TreatmentKind};
use crate::corpus::{Corpus, EntityKey, EntityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PostImpact,
    ChangeRatio,
}

impl Metric {
    pub fn key(self) -> &'static str {
        match self {
            Metric::PostImpact => "post_impact",
            Metric::ChangeRatio => "change_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub kind: Option<TreatmentKind>,
    pub metric: Metric,
    pub pairs_used: usize,
    /// Pairs dropped because a change ratio was undefined.
    pub pairs_excluded: usize,
    pub result: MwResult,
    /// e.g. "0.5 < 1.12**".
    pub row: String,
}

/// Treatment value and the mean of its two controls, or `None` when the
/// metric is undefined for any of the three.
fn pair_values(pair: &CohortPair, metric: Metric) -> Option<(f64, f64)> {
    let value = |s: &crate::impact::SplitImpact| match metric {
        Metric::PostImpact => Some(s.post_impact as f64),
        Metric::ChangeRatio => s.change_ratio,
    };
    let t = value(&pair.treatment_split)?;
    let c1 = value(&pair.control_splits[0])?;
    let c2 = value(&pair.control_splits[1])?;
    Some((t, (c1 + c2) / 2.0))
}

/// Pairs usable for `metric`.
pub fn usable_pairs(pairs: &[CohortPair], metric: Metric) -> Vec<&CohortPair> {
    pairs.iter().filter(|p| pair_values(p, metric).is_some()).collect()
}

/// Mann-Whitney test of treatment values against per-pair control means.
pub fn compare_cohorts(
    pairs: &[CohortPair],
    metric: Metric,
    alternative: Alternative,
) -> Result<ComparisonReport, StatsError> {
    let values: Vec<(f64, f64)> = pairs.iter().filter_map(|p| pair_values(p, metric)).collect();
    if values.len() < 2 {
        return Err(StatsError::TooFewPairs { needed: 2, found: values.len() });
    }
    let treatment: Vec<f64> = values.iter().map(|v| v.0).collect();
    let control: Vec<f64> = values.iter().map(|v| v.1).collect();
    let result = mann_whitney_u(&treatment, &control, alternative)?;
    let kinds: BTreeSet<TreatmentKind> = pairs.iter().map(|p| p.kind).collect();
    Ok(ComparisonReport {
        kind: if kinds.len() == 1 { kinds.into_iter().next() } else { None },
        metric,
        pairs_used: values.len(),
        pairs_excluded: pairs.len() - values.len(),
        row: format_comparison(&result),
        result,
    })
}

/// At most two decimals, trailing zeros dropped: 6.0 -> "6", 0.50 -> "0.5".
pub fn format_median(value: f64) -> String {
    let s = format!("{value:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// "**" below 0.01, "*" below 0.05, otherwise empty.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// "treatment <op> control<stars>", comparing the printed medians.
pub fn format_comparison(result: &MwResult) -> String {
    let t = format_median(result.median_treatment);
    let c = format_median(result.median_control);
    let (tv, cv): (f64, f64) = (t.parse().unwrap_or(f64::NAN), c.parse().unwrap_or(f64::NAN));
    let op = if tv < cv {
        "<"
    } else if tv > cv {
        ">"
    } else {
        "="
    };
    format!("{t} {op} {c}{}", significance_stars(result.p_value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Overall,
    MediaCoveredMisconduct,
    Falsification,
    Plagiarism,
    Violation,
    Error,
}

impl Segment {
    pub const ALL: [Segment; 6] = [
        Segment::Overall,
        Segment::MediaCoveredMisconduct,
        Segment::Falsification,
        Segment::Plagiarism,
        Segment::Violation,
        Segment::Error,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Segment::Overall => "overall",
            Segment::MediaCoveredMisconduct => "media_covered_misconduct",
            Segment::Falsification => "falsification",
            Segment::Plagiarism => "plagiarism",
            Segment::Violation => "violation",
            Segment::Error => "error",
        }
    }

    fn contains(self, tag: &SegmentTag) -> bool {
        match self {
            Segment::Overall => true,
            Segment::MediaCoveredMisconduct => {
                tag.media_covered && tag.reason.is_some_and(ReasonCode::is_misconduct)
            }
            Segment::Falsification => tag.reason == Some(ReasonCode::FalsificationFabrication),
            Segment::Plagiarism => tag.reason == Some(ReasonCode::Plagiarism),
            Segment::Violation => tag.reason == Some(ReasonCode::ViolationOfRules),
            Segment::Error => tag.reason == Some(ReasonCode::Error),
        }
    }
}

/// Reason and media coverage attached to one treatment entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SegmentTag {
    pub reason: Option<ReasonCode>,
    pub media_covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentRow {
    pub segment: Segment,
    pub n: usize,
    /// Median treatment change ratio; `None` for an empty segment.
    pub median: Option<f64>,
}

/// Median treatment change ratio per segment over the pairs usable for the
/// change-ratio comparison. Untagged treatments count only toward overall.
pub fn segment_change_ratio(
    pairs: &[CohortPair],
    tags: &BTreeMap<EntityKey, SegmentTag>,
) -> Vec<SegmentRow> {
    let usable = usable_pairs(pairs, Metric::ChangeRatio);
    Segment::ALL
        .into_iter()
        .map(|segment| {
            let ratios: Vec<f64> = usable
                .iter()
                .filter(|p| {
                    segment == Segment::Overall
                        || tags.get(&p.treatment).is_some_and(|t| segment.contains(t))
                })
                .filter_map(|p| p.treatment_split.change_ratio)
                .collect();
            SegmentRow { segment, n: ratios.len(), median: median(&ratios) }
        })
        .collect()
}

/// Tags for paper, author and institution treatments. A paper's reason is
/// its resolved annotation, falling back to its notice; an author or
/// institution takes the reason of its first retracted paper (earliest
/// retraction, then smallest id). Papers are media covered when any author
/// is on `media`; authors when they are on it themselves.
pub fn segment_tags(
    corpus: &Corpus,
    pairs: &[CohortPair],
    resolved: &BTreeMap<String, ReasonCode>,
    media: &BTreeSet<String>,
) -> BTreeMap<EntityKey, SegmentTag> {
    let reason_of = |id: &str| {
        resolved
            .get(id)
            .copied()
            .or_else(|| corpus.paper(id).and_then(|p| p.retraction.as_ref()).and_then(|n| n.reason))
    };
    let first_retracted = |ids: &[String]| {
        ids.iter()
            .filter(|id| corpus.is_retracted(id))
            .min_by_key(|id| (corpus.retraction_year(id).unwrap_or(i32::MAX), id.as_str()))
            .cloned()
    };
    pairs
        .iter()
        .map(|p| {
            let e = &p.treatment;
            let tag = match e.kind {
                EntityKind::Paper => SegmentTag {
                    reason: if corpus.is_retracted(&e.key) { reason_of(&e.key) } else { None },
                    media_covered: corpus
                        .paper(&e.key)
                        .is_some_and(|paper| paper.normalized_authors().iter().any(|a| media.contains(a))),
                },
                EntityKind::Author => SegmentTag {
                    reason: first_retracted(corpus.papers_by_author(&e.key)).and_then(|id| reason_of(&id)),
                    media_covered: media.contains(&e.key),
                },
                EntityKind::Institution => SegmentTag {
                    reason: first_retracted(corpus.papers_by_institution(&e.key))
                        .and_then(|id| reason_of(&id)),
                    media_covered: false,
                },
            };
            (e.clone(), tag)
        })
        .collect()
}
