//! Treatment groups and matched controls.
//!
//! Each treatment entity is matched to two controls drawn from the same
//! stratum: same journal and publication date for papers, same dominant ESI
//! category and curve start year for authors and institutions. Candidates are
//! ranked by the L2 distance between pre-retraction curves (PreDis); the ten
//! nearest are kept and the two whose pre-retraction totals are closest to the
//! treatment's become the controls.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, EntityKey, EntityKind, EsiCategory, PaperRecord};
use crate::impact::{
    entity_retraction_year, impact_curve, split_impact, ImpactConfig, ImpactCurve, ImpactError,
    SplitImpact,
};

#[derive(Debug, Error, PartialEq)]
pub enum CohortError {
    #[error("curves start in different years ({treatment} vs {candidate})")]
    MismatchedStart { treatment: i32, candidate: i32 },
    #[error("unknown treatment kind {0:?} (expected one of P_t, A_t, I_t, P_citing, P_coref, A_coaut)")]
    UnknownKind(String),
    #[error("cannot write cohort table: {0}")]
    Export(String),
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
pub enum TreatmentKind {
    #[serde(rename = "P_t")]
    #[value(name = "P_t")]
    RetractedPaper,
    #[serde(rename = "A_t")]
    #[value(name = "A_t")]
    RetractedAuthor,
    #[serde(rename = "I_t")]
    #[value(name = "I_t")]
    RetractedInstitution,
    #[serde(rename = "P_citing")]
    #[value(name = "P_citing")]
    CitingPaper,
    #[serde(rename = "P_coref")]
    #[value(name = "P_coref")]
    CoReferencingPaper,
    #[serde(rename = "A_coaut")]
    #[value(name = "A_coaut")]
    CoAuthor,
}

impl TreatmentKind {
    pub const ALL: [TreatmentKind; 6] = [
        TreatmentKind::RetractedPaper,
        TreatmentKind::RetractedAuthor,
        TreatmentKind::RetractedInstitution,
        TreatmentKind::CitingPaper,
        TreatmentKind::CoReferencingPaper,
        TreatmentKind::CoAuthor,
    ];

    pub fn key(self) -> &'static str {
        match self {
            TreatmentKind::RetractedPaper => "P_t",
            TreatmentKind::RetractedAuthor => "A_t",
            TreatmentKind::RetractedInstitution => "I_t",
            TreatmentKind::CitingPaper => "P_citing",
            TreatmentKind::CoReferencingPaper => "P_coref",
            TreatmentKind::CoAuthor => "A_coaut",
        }
    }

    pub fn entity_kind(self) -> EntityKind {
        match self {
            TreatmentKind::RetractedPaper
            | TreatmentKind::CitingPaper
            | TreatmentKind::CoReferencingPaper => EntityKind::Paper,
            TreatmentKind::RetractedAuthor | TreatmentKind::CoAuthor => EntityKind::Author,
            TreatmentKind::RetractedInstitution => EntityKind::Institution,
        }
    }
}

impl fmt::Display for TreatmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for TreatmentKind {
    type Err = CohortError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TreatmentKind::ALL
            .into_iter()
            .find(|k| k.key().eq_ignore_ascii_case(s))
            .ok_or_else(|| CohortError::UnknownKind(s.to_string()))
    }
}

/// A selected treatment entity. `yr` is `None` when no retraction year is
/// known for the retraction that put it in the group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Treatment {
    pub entity: EntityKey,
    pub yr: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    UnknownRetractionYear,
    NoImpactHistory,
    RetractionBeforeCurveStart,
    RetractionAfterHorizon,
    InsufficientCandidates,
}

impl ExclusionReason {
    pub fn key(self) -> &'static str {
        match self {
            ExclusionReason::UnknownRetractionYear => "unknown_retraction_year",
            ExclusionReason::NoImpactHistory => "no_impact_history",
            ExclusionReason::RetractionBeforeCurveStart => "retraction_before_curve_start",
            ExclusionReason::RetractionAfterHorizon => "retraction_after_horizon",
            ExclusionReason::InsufficientCandidates => "insufficient_candidates",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub kind: TreatmentKind,
    pub entity: EntityKey,
    pub yr: Option<i32>,
    pub reason: ExclusionReason,
}

/// A treatment entity bound to its two matched controls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortPair {
    pub kind: TreatmentKind,
    pub treatment: EntityKey,
    pub controls: [EntityKey; 2],
    pub yr: i32,
    pub pre_dis: [f64; 2],
    pub treatment_split: SplitImpact,
    pub control_splits: [SplitImpact; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortRun {
    pub kind: TreatmentKind,
    pub pairs: Vec<CohortPair>,
    pub exclusions: Vec<Exclusion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub impact: ImpactConfig,
    /// Candidates kept after the PreDis ranking.
    pub shortlist: usize,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig { impact: ImpactConfig::default(), shortlist: 10 }
    }
}

/// |A ∩ B| / |A ∪ B|; zero when both are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// L2 distance between two curves over y0 ..= `last_year`.
pub fn pre_dis(treat: &ImpactCurve, cand: &ImpactCurve, last_year: i32) -> Result<f64, CohortError> {
    if treat.y0 != cand.y0 {
        return Err(CohortError::MismatchedStart { treatment: treat.y0, candidate: cand.y0 });
    }
    let sum: f64 = (treat.y0..=last_year)
        .map(|y| {
            let d = treat.at(y) as f64 - cand.at(y) as f64;
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Most frequent ESI category over `papers`; ties go to the smaller key.
fn esi_mode<'a>(papers: impl Iterator<Item = &'a PaperRecord>) -> Option<EsiCategory> {
    let mut counts: BTreeMap<&'static str, (usize, EsiCategory)> = BTreeMap::new();
    for p in papers {
        counts.entry(p.esi_category.key()).or_insert((0, p.esi_category)).0 += 1;
    }
    let top = counts.values().map(|v| v.0).max()?;
    counts.values().find(|v| v.0 == top).map(|v| v.1)
}

/// Dominant ESI category of an author or institution (or a paper's own).
pub fn entity_esi(corpus: &Corpus, entity: &EntityKey) -> Option<EsiCategory> {
    let ids = crate::impact::entity_papers(corpus, entity);
    esi_mode(ids.into_iter().filter_map(|id| corpus.paper(id)))
}

type Stratum = (EsiCategory, i32);

/// Curves and strata for every author or institution in the corpus.
struct EntityIndex {
    curves: BTreeMap<String, ImpactCurve>,
    strata: BTreeMap<Stratum, Vec<String>>,
}

/// Selection and matching over one corpus. Expensive indexes are built on
/// first use and shared across kinds.
pub struct CohortBuilder<'c> {
    corpus: &'c Corpus,
    config: CohortConfig,
    retracted_authors: BTreeSet<String>,
    retracted_institutions: BTreeSet<String>,
    treatments: OnceLock<BTreeMap<TreatmentKind, Vec<Treatment>>>,
    members: OnceLock<BTreeSet<EntityKey>>,
    authors: OnceLock<EntityIndex>,
    institutions: OnceLock<EntityIndex>,
    paper_strata: OnceLock<BTreeMap<(String, i32, Option<u8>), Vec<String>>>,
}

impl<'c> CohortBuilder<'c> {
    pub fn new(corpus: &'c Corpus, config: CohortConfig) -> Self {
        let mut retracted_authors = BTreeSet::new();
        let mut retracted_institutions = BTreeSet::new();
        for id in corpus.retracted_ids() {
            let p = corpus.paper(id).expect("retracted id in corpus");
            retracted_authors.extend(p.normalized_authors());
            retracted_institutions.extend(p.normalized_institutions());
        }
        CohortBuilder {
            corpus,
            config,
            retracted_authors,
            retracted_institutions,
            treatments: OnceLock::new(),
            members: OnceLock::new(),
            authors: OnceLock::new(),
            institutions: OnceLock::new(),
            paper_strata: OnceLock::new(),
        }
    }

    pub fn config(&self) -> &CohortConfig {
        &self.config
    }

    /// Treatment entities of one kind, sorted by key.
    pub fn treatments(&self, kind: TreatmentKind) -> &[Treatment] {
        &self.all_treatments()[&kind]
    }

    fn all_treatments(&self) -> &BTreeMap<TreatmentKind, Vec<Treatment>> {
        self.treatments.get_or_init(|| {
            TreatmentKind::ALL.par_iter().map(|&k| (k, select_treatments(self.corpus, k))).collect()
        })
    }

    /// Union of all six treatment groups.
    fn members(&self) -> &BTreeSet<EntityKey> {
        self.members.get_or_init(|| {
            self.all_treatments().values().flatten().map(|t| t.entity.clone()).collect()
        })
    }

    /// Whether `entity` may serve as a control.
    pub fn is_eligible_control(&self, entity: &EntityKey) -> bool {
        let clean = match entity.kind {
            EntityKind::Paper => !self.corpus.is_retracted(&entity.key),
            EntityKind::Author => !self.retracted_authors.contains(&entity.key),
            EntityKind::Institution => !self.retracted_institutions.contains(&entity.key),
        };
        clean && !self.members().contains(entity)
    }

    fn paper_strata(&self) -> &BTreeMap<(String, i32, Option<u8>), Vec<String>> {
        self.paper_strata.get_or_init(|| {
            let mut strata: BTreeMap<_, Vec<String>> = BTreeMap::new();
            for p in self.corpus.papers() {
                strata
                    .entry((p.journal.clone(), p.pub_year, p.pub_month))
                    .or_default()
                    .push(p.paper_id.clone());
            }
            strata
        })
    }

    fn entity_index(&self, kind: EntityKind) -> &EntityIndex {
        let build = || {
            let names: Vec<&str> = match kind {
                EntityKind::Author => self.corpus.authors().collect(),
                EntityKind::Institution => self.corpus.institutions().collect(),
                EntityKind::Paper => unreachable!("papers are stratified by journal and date"),
            };
            let entries: Vec<(String, ImpactCurve, EsiCategory)> = names
                .par_iter()
                .filter_map(|name| {
                    let key = EntityKey { kind, key: name.to_string() };
                    let curve = impact_curve(self.corpus, &key, &self.config.impact).ok()?;
                    let esi = entity_esi(self.corpus, &key)?;
                    Some((name.to_string(), curve, esi))
                })
                .collect();
            let mut curves = BTreeMap::new();
            let mut strata: BTreeMap<Stratum, Vec<String>> = BTreeMap::new();
            for (name, curve, esi) in entries {
                strata.entry((esi, curve.y0)).or_default().push(name.clone());
                curves.insert(name, curve);
            }
            EntityIndex { curves, strata }
        };
        match kind {
            EntityKind::Author => self.authors.get_or_init(build),
            EntityKind::Institution => self.institutions.get_or_init(build),
            EntityKind::Paper => unreachable!("papers are stratified by journal and date"),
        }
    }

    /// Candidate controls sharing the treatment's stratum, with curves.
    /// Ineligible entities and the treatment itself are removed.
    pub fn candidates(&self, treatment: &EntityKey, curve: &ImpactCurve) -> Vec<(EntityKey, ImpactCurve)> {
        let eligible = |e: &EntityKey| e != treatment && self.is_eligible_control(e);
        match treatment.kind {
            EntityKind::Paper => {
                let Some(p) = self.corpus.paper(&treatment.key) else { return Vec::new() };
                let key = (p.journal.clone(), p.pub_year, p.pub_month);
                self.paper_strata()
                    .get(&key)
                    .into_iter()
                    .flatten()
                    .map(|id| EntityKey::paper(id.as_str()))
                    .filter(|e| eligible(e))
                    .filter_map(|e| {
                        let c = impact_curve(self.corpus, &e, &self.config.impact).ok()?;
                        Some((e, c))
                    })
                    .collect()
            }
            kind => {
                let Some(esi) = entity_esi(self.corpus, treatment) else { return Vec::new() };
                let index = self.entity_index(kind);
                index
                    .strata
                    .get(&(esi, curve.y0))
                    .into_iter()
                    .flatten()
                    .map(|name| EntityKey { kind, key: name.clone() })
                    .filter(|e| eligible(e))
                    .map(|e| {
                        let c = index.curves[&e.key].clone();
                        (e, c)
                    })
                    .collect()
            }
        }
    }

    /// Matches one treatment; `Err` carries the exclusion reason.
    pub fn match_controls(
        &self,
        kind: TreatmentKind,
        treatment: &Treatment,
    ) -> Result<CohortPair, ExclusionReason> {
        let yr = treatment.yr.ok_or(ExclusionReason::UnknownRetractionYear)?;
        let impact = &self.config.impact;
        let curve = match impact_curve(self.corpus, &treatment.entity, impact) {
            Ok(c) => c,
            Err(ImpactError::StartsAfterHorizon { .. }) if yr > impact.horizon => {
                return Err(ExclusionReason::RetractionAfterHorizon)
            }
            Err(_) => return Err(ExclusionReason::NoImpactHistory),
        };
        if yr < curve.y0 {
            return Err(ExclusionReason::RetractionBeforeCurveStart);
        }
        if yr > curve.yn {
            return Err(ExclusionReason::RetractionAfterHorizon);
        }
        let treatment_split = split_impact(&curve, yr, impact.boundary).expect("yr checked against curve");
        let last_pre = impact.boundary.pre_end(yr);

        let candidates = self.candidates(&treatment.entity, &curve);
        let picked = select_pair(&curve, &candidates, last_pre, self.config.shortlist)
            .ok_or(ExclusionReason::InsufficientCandidates)?;
        let [(i1, d1), (i2, d2)] = picked;
        let split = |i: usize| split_impact(&candidates[i].1, yr, impact.boundary).expect("same range");
        Ok(CohortPair {
            kind,
            treatment: treatment.entity.clone(),
            controls: [candidates[i1].0.clone(), candidates[i2].0.clone()],
            yr,
            pre_dis: [d1, d2],
            treatment_split,
            control_splits: [split(i1), split(i2)],
        })
    }

    /// Selects and matches every treatment of `kind`. Work is spread over
    /// threads; the output order is the treatment key order.
    pub fn run(&self, kind: TreatmentKind) -> CohortRun {
        if kind.entity_kind() != EntityKind::Paper {
            self.entity_index(kind.entity_kind());
        }
        self.members();
        let outcomes: Vec<Result<CohortPair, Exclusion>> = self
            .treatments(kind)
            .par_iter()
            .map(|t| {
                self.match_controls(kind, t).map_err(|reason| Exclusion {
                    kind,
                    entity: t.entity.clone(),
                    yr: t.yr,
                    reason,
                })
            })
            .collect();
        let mut pairs = Vec::new();
        let mut exclusions = Vec::new();
        for o in outcomes {
            match o {
                Ok(p) => pairs.push(p),
                Err(e) => exclusions.push(e),
            }
        }
        CohortRun { kind, pairs, exclusions }
    }
}

/// Steps 2 and 3 of the matching: shortlist by (PreDis, |pre gap|, key),
/// then pick two by (|pre gap|, PreDis, key). Returns candidate indices and
/// their PreDis, or `None` with fewer than two candidates.
fn select_pair(
    treat: &ImpactCurve,
    candidates: &[(EntityKey, ImpactCurve)],
    last_pre: i32,
    shortlist: usize,
) -> Option<[(usize, f64); 2]> {
    let treat_pre = treat.sum_through(last_pre) as i64;
    let mut scored: Vec<(f64, i64, usize)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, (_, c))| {
            let d = pre_dis(treat, c, last_pre).ok()?;
            Some((d, (c.sum_through(last_pre) as i64 - treat_pre).abs(), i))
        })
        .collect();
    let key = |i: usize| &candidates[i].0;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| key(a.2).cmp(key(b.2))));
    scored.truncate(shortlist);
    scored.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)).then_with(|| key(a.2).cmp(key(b.2))));
    match scored.as_slice() {
        [a, b, ..] => Some([(a.2, a.0), (b.2, b.0)]),
        _ => None,
    }
}

/// Earliest publication first; unknown months sort before January.
fn date_order(p: &PaperRecord) -> (i32, u8, &str) {
    (p.pub_year, p.pub_month.unwrap_or(0), p.paper_id.as_str())
}

/// Treatment entities of one kind, deduplicated keeping the earliest year
/// and sorted by key.
pub fn select_treatments(corpus: &Corpus, kind: TreatmentKind) -> Vec<Treatment> {
    let retracted: Vec<&PaperRecord> =
        corpus.retracted_ids().filter_map(|id| corpus.paper(id)).collect();
    let year_of = |e: &EntityKey| entity_retraction_year(corpus, e).ok();
    let mut picked: Vec<Treatment> = match kind {
        TreatmentKind::RetractedPaper => retracted
            .iter()
            .map(|p| Treatment { entity: EntityKey::paper(p.paper_id.as_str()), yr: corpus.retraction_year(&p.paper_id) })
            .collect(),
        TreatmentKind::RetractedAuthor => retracted
            .iter()
            .filter_map(|p| p.author_names.first())
            .map(|a| {
                let entity = EntityKey::author(a);
                let yr = year_of(&entity);
                Treatment { entity, yr }
            })
            .collect(),
        TreatmentKind::RetractedInstitution => retracted
            .iter()
            .filter_map(|p| p.institution_names.first())
            .map(|i| {
                let entity = EntityKey::institution(i);
                let yr = year_of(&entity);
                Treatment { entity, yr }
            })
            .collect(),
        TreatmentKind::CitingPaper => retracted
            .iter()
            .filter_map(|p| {
                let first = corpus
                    .cited_by(&p.paper_id)
                    .iter()
                    .filter(|c| !corpus.is_retracted(c))
                    .filter_map(|c| corpus.paper(c))
                    .min_by(|a, b| date_order(a).cmp(&date_order(b)))?;
                Some(Treatment {
                    entity: EntityKey::paper(first.paper_id.as_str()),
                    yr: corpus.retraction_year(&p.paper_id),
                })
            })
            .collect(),
        TreatmentKind::CoReferencingPaper => {
            let mut inverted: HashMap<&str, Vec<&str>> = HashMap::new();
            for p in corpus.papers() {
                for r in &p.references {
                    inverted.entry(r.as_str()).or_default().push(p.paper_id.as_str());
                }
            }
            retracted
                .iter()
                .filter_map(|p| {
                    let best = coref_partner(corpus, &inverted, p)?;
                    Some(Treatment {
                        entity: EntityKey::paper(best),
                        yr: corpus.retraction_year(&p.paper_id),
                    })
                })
                .collect()
        }
        TreatmentKind::CoAuthor => {
            let retracted_authors: BTreeSet<String> =
                retracted.iter().flat_map(|p| p.normalized_authors()).collect();
            let firsts: BTreeSet<String> = retracted
                .iter()
                .filter_map(|p| p.author_names.first())
                .map(|a| crate::corpus::normalize_name(a))
                .collect();
            firsts
                .iter()
                .filter_map(|a| {
                    let best = top_coauthor(corpus, a, &retracted_authors)?;
                    Some(Treatment {
                        entity: EntityKey { kind: EntityKind::Author, key: best },
                        yr: year_of(&EntityKey { kind: EntityKind::Author, key: a.clone() }),
                    })
                })
                .collect()
        }
    };

    // Dedupe by entity keeping the earliest known year.
    picked.sort_by(|a, b| {
        a.entity.cmp(&b.entity).then(match (a.yr, b.yr) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        })
    });
    picked.dedup_by(|later, first| later.entity == first.entity);
    picked
}

/// Non-retracted paper with the largest reference-set Jaccard coefficient
/// with `target` (at least one shared reference); ties go to the smaller id.
fn coref_partner<'c>(
    corpus: &'c Corpus,
    inverted: &HashMap<&'c str, Vec<&'c str>>,
    target: &PaperRecord,
) -> Option<&'c str> {
    let mut shared: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &target.references {
        for &other in inverted.get(r.as_str()).into_iter().flatten() {
            if other != target.paper_id && !corpus.is_retracted(other) {
                *shared.entry(other).or_default() += 1;
            }
        }
    }
    let n = target.references.len();
    let mut best: Option<(&str, f64)> = None;
    for (id, inter) in shared {
        let m = corpus.paper(id).map_or(0, |p| p.references.len());
        let j = inter as f64 / (n + m - inter) as f64;
        if best.map_or(true, |(_, b)| j > b) {
            best = Some((id, j));
        }
    }
    best.map(|(id, _)| id)
}

/// Author outside `excluded` sharing the most non-retracted papers with
/// `author`; ties go to more joint citations, then name order.
fn top_coauthor(corpus: &Corpus, author: &str, excluded: &BTreeSet<String>) -> Option<String> {
    let mut joint: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for id in corpus.papers_by_author(author) {
        if corpus.is_retracted(id) {
            continue;
        }
        let Some(p) = corpus.paper(id) else { continue };
        let cites = corpus.citation_count(id);
        let names: BTreeSet<String> = p.normalized_authors().into_iter().collect();
        for name in names {
            if name == author || excluded.contains(&name) {
                continue;
            }
            let entry = joint.entry(name).or_default();
            entry.0 += 1;
            entry.1 += cites;
        }
    }
    joint
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(a.1 .1.cmp(&b.1 .1)).then(b.0.cmp(&a.0)))
        .map(|(name, _)| name)
}

pub const COHORT_CSV_HEADER: [&str; 8] = [
    "kind",
    "treatment_key",
    "yr",
    "control1_key",
    "control2_key",
    "predis1",
    "predis2",
    "exclusion_reason",
];

/// Pairs then exclusions, one row each.
pub fn write_cohort_csv<W: std::io::Write>(run: &CohortRun, out: W) -> Result<(), CohortError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CohortError::Export(e.to_string());
    w.write_record(COHORT_CSV_HEADER).map_err(err)?;
    for p in &run.pairs {
        w.write_record([
            p.kind.key().to_string(),
            p.treatment.key.clone(),
            p.yr.to_string(),
            p.controls[0].key.clone(),
            p.controls[1].key.clone(),
            format!("{}", p.pre_dis[0]),
            format!("{}", p.pre_dis[1]),
            String::new(),
        ])
        .map_err(err)?;
    }
    for e in &run.exclusions {
        w.write_record([
            e.kind.key().to_string(),
            e.entity.key.clone(),
            e.yr.map(|y| y.to_string()).unwrap_or_default(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            e.reason.key().to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CohortError::Export(e.to_string()))
}
