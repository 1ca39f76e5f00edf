//! Corpus-level descriptive statistics: retraction rates, delays, field
//! rates and citation distributions.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Corpus, EsiCategory};
use crate::stats::median;

/// A ratio with its integer numerator and denominator kept alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    pub year: i32,
    pub retracted: usize,
    pub total: usize,
    pub rate: f64,
}

/// Retracted / published per publication year. Years without publications
/// do not appear. Retracted papers count in the denominator.
pub fn annual_retraction_rate(corpus: &Corpus) -> Vec<RateEntry> {
    corpus
        .publications_per_year()
        .into_iter()
        .filter(|(_, total)| *total > 0)
        .map(|(year, total)| {
            let retracted =
                corpus.papers_in_year(year).iter().filter(|id| corpus.is_retracted(id)).count();
            RateEntry { year, retracted, total, rate: retracted as f64 / total as f64 }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperDelay {
    pub paper_id: String,
    pub pub_year: i32,
    pub retraction_year: i32,
    pub delay: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearMedian {
    pub year: i32,
    pub n: usize,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub per_paper: Vec<PaperDelay>,
    /// Median delay grouped by retraction year.
    pub by_retraction_year: Vec<YearMedian>,
    pub overall_median: Option<f64>,
}

/// Retracted papers with no known retraction year are left out.
pub fn retraction_delay(corpus: &Corpus) -> DelayReport {
    let per_paper: Vec<PaperDelay> = corpus
        .retracted_ids()
        .filter_map(|id| {
            let paper = corpus.paper(id)?;
            let retraction_year = corpus.retraction_year(id)?;
            Some(PaperDelay {
                paper_id: id.to_string(),
                pub_year: paper.pub_year,
                retraction_year,
                delay: retraction_year - paper.pub_year,
            })
        })
        .collect();

    let mut grouped: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for d in &per_paper {
        grouped.entry(d.retraction_year).or_default().push(d.delay as f64);
    }
    let by_retraction_year = grouped
        .into_iter()
        .filter_map(|(year, delays)| {
            Some(YearMedian { year, n: delays.len(), median: median(&delays)? })
        })
        .collect();
    let all: Vec<f64> = per_paper.iter().map(|d| d.delay as f64).collect();
    DelayReport { overall_median: median(&all), per_paper, by_retraction_year }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsiRate {
    pub category: EsiCategory,
    pub retracted: usize,
    pub total: usize,
    pub rate: f64,
}

/// Per-category retraction rate, highest first; ties by category key.
/// Only categories present in the corpus are listed.
pub fn esi_retraction_rates(corpus: &Corpus) -> Vec<EsiRate> {
    let mut tally: BTreeMap<EsiCategory, (usize, usize)> = BTreeMap::new();
    for paper in corpus.papers() {
        let entry = tally.entry(paper.esi_category).or_default();
        entry.1 += 1;
        if corpus.is_retracted(&paper.paper_id) {
            entry.0 += 1;
        }
    }
    let mut rates: Vec<EsiRate> = tally
        .into_iter()
        .map(|(category, (retracted, total))| EsiRate {
            category,
            retracted,
            total,
            rate: retracted as f64 / total as f64,
        })
        .collect();
    rates.sort_by(|a, b| {
        b.rate.total_cmp(&a.rate).then_with(|| a.category.key().cmp(b.category.key()))
    });
    rates
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CitationSubset {
    Retracted,
    All,
}

/// Half-open bin `[lower, upper)`; the first bin is exactly zero citations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogBin {
    pub lower: usize,
    pub upper: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CitationDistribution {
    pub subset: CitationSubset,
    pub n: usize,
    /// `None` when the subset is empty.
    pub median: Option<f64>,
    pub histogram: Vec<LogBin>,
}

/// In-corpus citation counts over the subset, binned on powers of two.
pub fn citation_distribution(corpus: &Corpus, subset: CitationSubset) -> CitationDistribution {
    let counts: Vec<usize> = corpus
        .papers()
        .filter(|p| subset == CitationSubset::All || corpus.is_retracted(&p.paper_id))
        .map(|p| corpus.citation_count(&p.paper_id))
        .collect();
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();

    let mut histogram: Vec<LogBin> = Vec::new();
    if let Some(&max) = counts.iter().max() {
        histogram.push(LogBin { lower: 0, upper: 1, count: 0 });
        let mut lower = 1;
        while lower <= max {
            histogram.push(LogBin { lower, upper: lower * 2, count: 0 });
            lower *= 2;
        }
        for &c in &counts {
            let bin = if c == 0 { 0 } else { (usize::BITS - c.leading_zeros()) as usize };
            histogram[bin].count += 1;
        }
    }
    CitationDistribution { subset, n: counts.len(), median: median(&as_f64), histogram }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::ReasonCode;
    use crate::corpus::tests::paper;
    use crate::corpus::{IngestOptions, PaperRecord, Requester, RetractionNotice};

    fn retract(p: &mut PaperRecord, year: i32) {
        p.retraction = Some(RetractionNotice {
            retraction_year: year,
            reason: Some(ReasonCode::Error),
            requester: Requester::Editor,
        });
    }

    fn build(records: Vec<PaperRecord>) -> Corpus {
        Corpus::from_records(records, &IngestOptions::default()).unwrap()
    }

    #[test]
    fn rate_is_simple_division() {
        let mut records: Vec<PaperRecord> =
            (0..50).map(|i| paper(&format!("a{i:02}"), 2001, &[])).collect();
        records.extend((0..100).map(|i| paper(&format!("b{i:03}"), 2002, &[])));
        retract(&mut records[0], 2003);
        retract(&mut records[1], 2004);
        let rates = annual_retraction_rate(&build(records));
        assert_eq!(rates.len(), 2);
        assert_eq!((rates[0].retracted, rates[0].total, rates[0].rate), (2, 50, 0.04));
        assert_eq!(rates[1].rate, 0.0);
    }

    #[test]
    fn delay_examples() {
        let mut a = paper("a", 2004, &[]);
        retract(&mut a, 2006);
        let mut b = paper("b", 2010, &[]);
        retract(&mut b, 2010);
        let report = retraction_delay(&build(vec![a, b, paper("c", 2000, &[])]));
        let delays: Vec<i32> = report.per_paper.iter().map(|d| d.delay).collect();
        assert_eq!(delays, [2, 0]);
    }

    #[test]
    fn delay_median_of_five() {
        let records: Vec<PaperRecord> = [0, 1, 2, 2, 7]
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut p = paper(&format!("p{i}"), 2000, &[]);
                retract(&mut p, 2000 + d);
                p
            })
            .collect();
        let report = retraction_delay(&build(records));
        assert_eq!(report.overall_median, Some(2.0));
        assert_eq!(report.by_retraction_year.len(), 4);
    }

    #[test]
    fn esi_rates_sorted_with_name_ties() {
        let mut records = Vec::new();
        for (prefix, cat, n, retracted) in [
            ("m", EsiCategory::Mathematics, 4, 0),
            ("c", EsiCategory::Chemistry, 5, 0),
            ("i", EsiCategory::Immunology, 10, 3),
        ] {
            for i in 0..n {
                let mut p = paper(&format!("{prefix}{i}"), 2000, &[]);
                p.esi_category = cat;
                if i < retracted {
                    retract(&mut p, 2001);
                }
                records.push(p);
            }
        }
        let rates = esi_retraction_rates(&build(records));
        let order: Vec<_> = rates.iter().map(|r| r.category).collect();
        assert_eq!(
            order,
            [EsiCategory::Immunology, EsiCategory::Chemistry, EsiCategory::Mathematics]
        );
        assert_eq!((rates[0].retracted, rates[0].total), (3, 10));
        assert_eq!(rates[0].rate, 0.3);
        assert_eq!(rates[1].rate, 0.0);
    }

    #[test]
    fn esi_rate_order_of_magnitude() {
        let mut records: Vec<PaperRecord> =
            (0..10_000).map(|i| paper(&format!("p{i:05}"), 2000, &[])).collect();
        retract(&mut records[17], 2002);
        let rates = esi_retraction_rates(&build(records));
        assert_eq!(rates[0].rate, 1.0e-4);
    }

    #[test]
    fn citation_medians() {
        let uncited = build(vec![paper("a", 2000, &[]), paper("b", 2000, &[])]);
        assert_eq!(citation_distribution(&uncited, CitationSubset::All).median, Some(0.0));

        // Counts {1, 8, 20} for three target papers.
        let mut records = vec![paper("t1", 2000, &[]), paper("t2", 2000, &[]), paper("t3", 2000, &[])];
        for i in 0..20 {
            let refs: Vec<&str> = match i {
                0 => vec!["t1", "t2", "t3"],
                1..=7 => vec!["t2", "t3"],
                _ => vec!["t3"],
            };
            records.push(paper(&format!("c{i:02}"), 2001, &refs));
        }
        for t in 0..3 {
            retract(&mut records[t], 2002);
        }
        let dist = citation_distribution(&build(records), CitationSubset::Retracted);
        assert_eq!(dist.n, 3);
        assert_eq!(dist.median, Some(8.0));
        let total: usize = dist.histogram.iter().map(|b| b.count).sum();
        assert_eq!(total, 3);
        // 1 -> [1,2), 8 -> [8,16), 20 -> [16,32)
        let hit: Vec<usize> = dist.histogram.iter().filter(|b| b.count > 0).map(|b| b.lower).collect();
        assert_eq!(hit, [1, 8, 16]);
    }

    #[test]
    fn empty_subset_has_no_median() {
        let dist = citation_distribution(&build(vec![paper("a", 2000, &[])]), CitationSubset::Retracted);
        assert_eq!(dist.n, 0);
        assert_eq!(dist.median, None);
        assert!(dist.histogram.is_empty());
    }
}
