//! Yearly citation curves, entity retraction years and pre/post splits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, EntityKey, EntityKind};

#[derive(Debug, Error, PartialEq)]
pub enum ImpactError {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityKey),
    #[error("{0}: no impact history (never cited up to the horizon)")]
    NoImpactHistory(EntityKey),
    #[error("{entity}: curve would start in {y0}, after the horizon {horizon}")]
    StartsAfterHorizon { entity: EntityKey, y0: i32, horizon: i32 },
    #[error("{0} is not retracted")]
    NotRetracted(EntityKey),
    #[error("{0}: retraction year unknown")]
    UnknownRetractionYear(EntityKey),
    #[error("split year {yr} outside curve range {y0}-{yn}")]
    SplitOutOfRange { yr: i32, y0: i32, yn: i32 },
}

/// Which side of the split the retraction year itself falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The retraction year closes the pre-retraction window.
    #[default]
    YrInPre,
    YrInPost,
}

impl Boundary {
    pub fn from_yr_in_pre(yr_in_pre: bool) -> Self {
        if yr_in_pre {
            Boundary::YrInPre
        } else {
            Boundary::YrInPost
        }
    }

    /// Last year of the pre-retraction window.
    pub fn pre_end(self, yr: i32) -> i32 {
        match self {
            Boundary::YrInPre => yr,
            Boundary::YrInPost => yr - 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactConfig {
    /// Last year of every curve.
    pub horizon: i32,
    pub boundary: Boundary,
}

impl Default for ImpactConfig {
    fn default() -> Self {
        ImpactConfig { horizon: 2014, boundary: Boundary::YrInPre }
    }
}

/// C(y) for y0 <= y <= yn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImpactCurve {
    pub entity: EntityKey,
    pub y0: i32,
    pub yn: i32,
    pub values: Vec<u64>,
}

impl ImpactCurve {
    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    /// Citations in `year`, zero outside the curve.
    pub fn at(&self, year: i32) -> u64 {
        if year < self.y0 || year > self.yn {
            return 0;
        }
        self.values[(year - self.y0) as usize]
    }

    /// Sum of C(y) over y0 ..= last (clamped to the curve).
    pub fn sum_through(&self, last: i32) -> u64 {
        if last < self.y0 {
            return 0;
        }
        let end = ((last.min(self.yn) - self.y0) as usize) + 1;
        self.values[..end].iter().sum()
    }

    /// One CSV row: entity_kind,key,y0,yn,values with space-separated values.
    pub fn csv_record(&self) -> [String; 5] {
        let values: Vec<String> = self.values.iter().map(u64::to_string).collect();
        [
            self.entity.kind.key().to_string(),
            self.entity.key.clone(),
            self.y0.to_string(),
            self.yn.to_string(),
            values.join(" "),
        ]
    }
}

pub const CURVE_CSV_HEADER: [&str; 5] = ["entity_kind", "key", "y0", "yn", "values"];

/// Papers attributed to an entity.
pub fn entity_papers<'c>(corpus: &'c Corpus, entity: &EntityKey) -> Vec<&'c str> {
    match entity.kind {
        EntityKind::Paper => corpus
            .paper(&entity.key)
            .map(|p| vec![p.paper_id.as_str()])
            .unwrap_or_default(),
        EntityKind::Author => corpus.papers_by_author(&entity.key).iter().map(String::as_str).collect(),
        EntityKind::Institution => {
            corpus.papers_by_institution(&entity.key).iter().map(String::as_str).collect()
        }
    }
}

/// Citation counts by citing-paper publication year, summed over `papers`.
fn citations_by_year(corpus: &Corpus, papers: &[&str]) -> BTreeMap<i32, u64> {
    let mut by_year = BTreeMap::new();
    for id in papers {
        for citer in corpus.cited_by(id) {
            if let Some(p) = corpus.paper(citer) {
                *by_year.entry(p.pub_year).or_default() += 1;
            }
        }
    }
    by_year
}

/// Paper curves start at publication; author and institution curves start
/// at their first citation. Citations are dated by the citing paper's year.
pub fn impact_curve(
    corpus: &Corpus,
    entity: &EntityKey,
    config: &ImpactConfig,
) -> Result<ImpactCurve, ImpactError> {
    let papers = entity_papers(corpus, entity);
    if papers.is_empty() {
        return Err(ImpactError::UnknownEntity(entity.clone()));
    }
    let by_year = citations_by_year(corpus, &papers);
    let y0 = match entity.kind {
        EntityKind::Paper => corpus.paper(papers[0]).expect("listed paper").pub_year,
        _ => *by_year
            .keys()
            .find(|&&y| y <= config.horizon)
            .ok_or_else(|| ImpactError::NoImpactHistory(entity.clone()))?,
    };
    if y0 > config.horizon {
        return Err(ImpactError::StartsAfterHorizon {
            entity: entity.clone(),
            y0,
            horizon: config.horizon,
        });
    }
    let values = (y0..=config.horizon).map(|y| by_year.get(&y).copied().unwrap_or(0)).collect();
    Ok(ImpactCurve { entity: entity.clone(), y0, yn: config.horizon, values })
}

/// Paper: its own retraction year. Author or institution: the earliest
/// retraction year over its retracted papers.
pub fn entity_retraction_year(corpus: &Corpus, entity: &EntityKey) -> Result<i32, ImpactError> {
    let papers = entity_papers(corpus, entity);
    if papers.is_empty() {
        return Err(ImpactError::UnknownEntity(entity.clone()));
    }
    let retracted: Vec<&str> = papers.into_iter().filter(|id| corpus.is_retracted(id)).collect();
    if retracted.is_empty() {
        return Err(ImpactError::NotRetracted(entity.clone()));
    }
    retracted
        .iter()
        .filter_map(|id| corpus.retraction_year(id))
        .min()
        .ok_or_else(|| ImpactError::UnknownRetractionYear(entity.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitImpact {
    pub retraction_year: i32,
    pub pre_impact: u64,
    pub post_impact: u64,
    /// post / pre; `None` when pre is zero.
    pub change_ratio: Option<f64>,
}

pub fn split_impact(
    curve: &ImpactCurve,
    yr: i32,
    boundary: Boundary,
) -> Result<SplitImpact, ImpactError> {
    if yr < curve.y0 || yr > curve.yn {
        return Err(ImpactError::SplitOutOfRange { yr, y0: curve.y0, yn: curve.yn });
    }
    let pre_impact = curve.sum_through(boundary.pre_end(yr));
    let post_impact = curve.total() - pre_impact;
    let change_ratio = (pre_impact > 0).then(|| post_impact as f64 / pre_impact as f64);
    Ok(SplitImpact { retraction_year: yr, pre_impact, post_impact, change_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::ReasonCode;
    use crate::corpus::tests::paper;
    use crate::corpus::{IngestOptions, PaperRecord, Requester, RetractionNotice};
    use proptest::prelude::*;

    fn retract(p: &mut PaperRecord, year: i32) {
        p.retraction = Some(RetractionNotice {
            retraction_year: year,
            reason: Some(ReasonCode::FalsificationFabrication),
            requester: Requester::Editor,
        });
    }

    fn cfg(horizon: i32) -> ImpactConfig {
        ImpactConfig { horizon, boundary: Boundary::YrInPre }
    }

    #[test]
    fn paper_curve_tally() {
        let corpus = Corpus::from_records(
            vec![paper("p", 2004, &[]), paper("c1", 2005, &["p"]), paper("c2", 2006, &["p"])],
            &IngestOptions::default(),
        )
        .unwrap();
        let curve = impact_curve(&corpus, &EntityKey::paper("p"), &cfg(2008)).unwrap();
        assert_eq!(curve.y0, 2004);
        assert_eq!(curve.values, [0, 1, 1, 0, 0]);
    }

    fn two_paper_author() -> Corpus {
        let mut a = paper("a", 2000, &[]);
        a.author_names = vec!["Hwang, Woo Suk".into()];
        a.institution_names = vec!["Seoul National University".into()];
        let mut b = paper("b", 2000, &[]);
        b.author_names = vec!["hwang woo suk".into()];
        b.institution_names = vec!["Seoul National University".into()];
        // a: [1, 2] in 2001-2002; b: [0, 3].
        let citers = vec![
            paper("x1", 2001, &["a"]),
            paper("x2", 2002, &["a", "b"]),
            paper("x3", 2002, &["a", "b"]),
            paper("x4", 2002, &["b"]),
        ];
        let mut records = vec![a, b];
        records.extend(citers);
        Corpus::from_records(records, &IngestOptions::default()).unwrap()
    }

    #[test]
    fn author_curve_is_pointwise_sum() {
        let corpus = two_paper_author();
        let author = impact_curve(&corpus, &EntityKey::author("Hwang, Woo Suk"), &cfg(2002)).unwrap();
        assert_eq!(author.y0, 2001);
        assert_eq!(author.values, [1, 5]);
        let a = impact_curve(&corpus, &EntityKey::paper("a"), &cfg(2002)).unwrap();
        let b = impact_curve(&corpus, &EntityKey::paper("b"), &cfg(2002)).unwrap();
        for y in 2001..=2002 {
            assert_eq!(author.at(y), a.at(y) + b.at(y));
        }
    }

    #[test]
    fn never_cited_author_has_no_history() {
        let mut p = paper("p", 2000, &[]);
        p.author_names = vec!["Lonely A".into()];
        let corpus = Corpus::from_records(vec![p], &IngestOptions::default()).unwrap();
        assert!(matches!(
            impact_curve(&corpus, &EntityKey::author("Lonely A"), &cfg(2014)),
            Err(ImpactError::NoImpactHistory(_))
        ));
        assert!(matches!(
            impact_curve(&corpus, &EntityKey::author("Nobody"), &cfg(2014)),
            Err(ImpactError::UnknownEntity(_))
        ));
    }

    #[test]
    fn retraction_years() {
        let mut corpus_records = Vec::new();
        for (id, year) in [("r1", 2009), ("r2", 2006)] {
            let mut p = paper(id, 2004, &[]);
            p.author_names = vec!["Hwang, Woo Suk".into()];
            p.institution_names = vec!["Seoul National University".into()];
            retract(&mut p, year);
            corpus_records.push(p);
        }
        corpus_records.push(paper("clean", 2004, &[]));
        let corpus = Corpus::from_records(corpus_records, &IngestOptions::default()).unwrap();
        assert_eq!(entity_retraction_year(&corpus, &EntityKey::paper("r2")), Ok(2006));
        assert_eq!(entity_retraction_year(&corpus, &EntityKey::author("Hwang, Woo Suk")), Ok(2006));
        assert_eq!(
            entity_retraction_year(&corpus, &EntityKey::institution("Seoul National University")),
            Ok(2006)
        );
        assert!(matches!(
            entity_retraction_year(&corpus, &EntityKey::paper("clean")),
            Err(ImpactError::NotRetracted(_))
        ));
    }

    fn curve(y0: i32, values: Vec<u64>) -> ImpactCurve {
        let yn = y0 + values.len() as i32 - 1;
        ImpactCurve { entity: EntityKey::paper("t"), y0, yn, values }
    }

    #[test]
    fn split_examples() {
        let c = curve(2000, vec![2, 3, 4]);
        let s = split_impact(&c, 2001, Boundary::YrInPre).unwrap();
        assert_eq!((s.pre_impact, s.post_impact), (5, 4));
        assert_eq!(s.change_ratio, Some(0.8));
        let flipped = split_impact(&c, 2001, Boundary::YrInPost).unwrap();
        assert_eq!((flipped.pre_impact, flipped.post_impact), (2, 7));

        let zero = split_impact(&curve(2000, vec![0, 0, 5]), 2001, Boundary::YrInPre).unwrap();
        assert_eq!(zero.change_ratio, None);
        assert_eq!(
            split_impact(&c, 2003, Boundary::YrInPre),
            Err(ImpactError::SplitOutOfRange { yr: 2003, y0: 2000, yn: 2002 })
        );
    }

    proptest! {
        #[test]
        fn split_conserves_and_is_monotone(values in prop::collection::vec(0u64..50, 1..20)) {
            let c = curve(1990, values.clone());
            let total: u64 = values.iter().sum();
            let mut previous = 0;
            for yr in c.y0..=c.yn {
                let s = split_impact(&c, yr, Boundary::YrInPre).unwrap();
                prop_assert_eq!(s.pre_impact + s.post_impact, total);
                prop_assert!(s.pre_impact >= previous);
                previous = s.pre_impact;
            }
        }
    }
}
