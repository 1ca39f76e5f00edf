//! Synthetic citation corpora with planted retraction effects.
//!
//! Papers arrive year by year and cite earlier papers with probability
//! proportional to `(citations + 1)^attachment_exponent * exp(-age_decay * age)`.
//! Each retracted paper is generated together with a twin: a non-retracted
//! paper in the same journal and month with no references of its own. The
//! two share one attachment slot, so up to and including the retraction year
//! every citation lands on both and their curves are identical. Afterwards the
//! twin keeps every citation while the retracted paper keeps each one with
//! probability equal to its penalty factor.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{write_annotations_csv, AnnotationRecord, ReasonCode};
use crate::corpus::{Corpus, CorpusError, EsiCategory, IngestOptions, PaperRecord, Requester, RetractionNotice};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("infeasible config: {0}")]
    Infeasible(String),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot read config {path}: {message}")]
    Config { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub key: String,
    pub phrase: String,
    /// Probability that a paper carries the topic.
    pub base_rate: f64,
}

/// Popularity of `topic` in year y is raised by `strength * Ret(y - lag)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub topic: String,
    pub lag: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    pub papers_per_year: usize,
    pub journals: usize,
    pub authors: usize,
    pub institutions: usize,
    /// Mean of the Poisson reference count.
    pub refs_per_paper: f64,
    pub attachment_exponent: f64,
    pub age_decay: f64,
    /// Share of references pointing outside the corpus.
    pub dangling_ref_rate: f64,
    pub months: bool,
    /// Publication year → share of that year's papers that get retracted.
    pub retraction_schedule: BTreeMap<i32, f64>,
    /// Weight of a retraction delay of 0, 1, 2, ... years.
    pub delay_weights: Vec<f64>,
    pub reason_mix: BTreeMap<ReasonCode, f64>,
    /// Post-retraction citation factor per reason; missing reasons keep 1.0.
    pub penalty: BTreeMap<ReasonCode, f64>,
    /// First authors of misconduct retractions flagged as media covered.
    pub media_covered: usize,
    /// Extra factor on the penalty of media-covered retractions.
    pub media_penalty: f64,
    pub topics: Vec<TopicSpec>,
    pub coupling: Option<Coupling>,
    pub raters: usize,
    pub rater_accuracy: f64,
    pub plant_twins: bool,
}

const JOURNALS: [(&str, EsiCategory); 8] = [
    ("Journal of Synthetic Chemistry", EsiCategory::Chemistry),
    ("Clinical Reports", EsiCategory::ClinicalMedicine),
    ("Molecular Genetics Letters", EsiCategory::MolecularBiologyGenetics),
    ("Physical Review Synthetic", EsiCategory::Physics),
    ("Neuroscience Bulletin", EsiCategory::NeuroscienceBehavior),
    ("Materials Today Synthetic", EsiCategory::MaterialsScience),
    ("Immunology Notes", EsiCategory::Immunology),
    ("Computing Transactions", EsiCategory::ComputerScience),
];

const FILLERS: [&str; 8] = [
    "a comparative study",
    "new evidence",
    "revisited",
    "mechanisms and outcomes",
    "an experimental approach",
    "a longitudinal analysis",
    "preliminary results",
    "towards a unified view",
];

const SURNAMES: [&str; 30] = [
    "Kim", "Lee", "Park", "Chen", "Wang", "Li", "Zhang", "Smith", "Jones", "Garcia", "Muller", "Rossi",
    "Silva", "Novak", "Ivanov", "Tanaka", "Sato", "Nguyen", "Khan", "Singh", "Cohen", "Dubois", "Berg",
    "Moreau", "Costa", "Horvat", "Nielsen", "Kowalski", "Ahmed", "Okafor",
];

const SYLLABLES: [&str; 20] = [
    "an", "bo", "chi", "da", "el", "fu", "gi", "ha", "in", "jo", "ka", "lu", "mi", "no", "or", "pa", "ri",
    "su", "ta", "vi",
];

fn default_topics() -> Vec<TopicSpec> {
    [
        ("stem_cell", "stem cell", 0.06),
        ("gene_expression", "gene expression", 0.08),
        ("apoptosis", "apoptosis", 0.07),
        ("graphene", "graphene", 0.04),
        ("breast_cancer", "breast cancer", 0.06),
        ("neural_network", "neural network", 0.05),
        ("climate_change", "climate change", 0.04),
        ("quantum_dot", "quantum dot", 0.03),
        ("oxidative_stress", "oxidative stress", 0.05),
        ("insulin_resistance", "insulin resistance", 0.04),
        ("carbon_nanotube", "carbon nanotube", 0.04),
        ("malaria", "malaria", 0.03),
    ]
    .into_iter()
    .map(|(key, phrase, base_rate)| TopicSpec { key: key.into(), phrase: phrase.into(), base_rate })
    .collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        let mut config = SynthConfig {
            seed: 42,
            first_year: 1990,
            last_year: 2014,
            papers_per_year: 800,
            journals: 6,
            authors: 6000,
            institutions: 1500,
            refs_per_paper: 12.0,
            attachment_exponent: 1.0,
            age_decay: 0.35,
            dangling_ref_rate: 0.05,
            months: true,
            retraction_schedule: BTreeMap::new(),
            delay_weights: vec![0.0, 0.3, 0.35, 0.2, 0.15],
            reason_mix: [
                (ReasonCode::Plagiarism, 0.25),
                (ReasonCode::FalsificationFabrication, 0.23),
                (ReasonCode::ViolationOfRules, 0.10),
                (ReasonCode::Error, 0.24),
                (ReasonCode::Other, 0.08),
                (ReasonCode::NotFound, 0.10),
            ]
            .into_iter()
            .collect(),
            penalty: BTreeMap::new(),
            media_covered: 0,
            media_penalty: 1.0,
            topics: default_topics(),
            coupling: None,
            raters: 3,
            rater_accuracy: 0.85,
            plant_twins: true,
        };
        config.retraction_schedule = config.schedule_for_total(500);
        config
    }
}

impl SynthConfig {
    /// Last publication year that receives retractions; leaves room for the
    /// longest delay plus at least one post-retraction year.
    pub fn last_retraction_pub_year(&self) -> i32 {
        self.last_year - self.delay_weights.len() as i32
    }

    /// A schedule placing exactly `total` retractions, ramping up over the
    /// eligible publication years.
    pub fn schedule_for_total(&self, total: usize) -> BTreeMap<i32, f64> {
        let years: Vec<i32> = (self.first_year..=self.last_retraction_pub_year()).collect();
        if years.is_empty() || self.papers_per_year == 0 {
            return BTreeMap::new();
        }
        let weights: Vec<f64> = (1..=years.len()).map(|i| i as f64).collect();
        let sum: f64 = weights.iter().sum();
        let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..years.len()).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
        let missing = total - counts.iter().sum::<usize>();
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        years
            .into_iter()
            .zip(counts)
            .map(|(y, c)| (y, c as f64 / self.papers_per_year as f64))
            .collect()
    }

    /// Retractions placed in publication year `year`.
    pub fn planned_retractions(&self, year: i32) -> usize {
        self.retraction_schedule
            .get(&year)
            .map_or(0, |r| (r * self.papers_per_year as f64).round() as usize)
    }

    pub fn penalty_for(&self, reason: ReasonCode) -> f64 {
        self.penalty.get(&reason).copied().unwrap_or(1.0)
    }

    pub fn from_path(path: &Path) -> Result<Self, SynthError> {
        let err = |message: String| SynthError::Config { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Infeasible(m));
        let window = IngestOptions::default();
        if self.first_year > self.last_year {
            return bad(format!("first_year {} after last_year {}", self.first_year, self.last_year));
        }
        if self.first_year < window.first_year || self.last_year > window.last_year {
            return bad(format!("years must lie within {}-{}", window.first_year, window.last_year));
        }
        if self.papers_per_year == 0 || self.authors == 0 || self.institutions == 0 {
            return bad("papers_per_year, authors and institutions must be positive".into());
        }
        if !(1..=JOURNALS.len()).contains(&self.journals) {
            return bad(format!("journals must be between 1 and {}", JOURNALS.len()));
        }
        if !(self.refs_per_paper >= 0.0) || self.refs_per_paper >= self.papers_per_year as f64 {
            return bad(format!(
                "refs_per_paper {} must be below the papers available after the first year ({})",
                self.refs_per_paper, self.papers_per_year
            ));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.dangling_ref_rate) || !unit(self.rater_accuracy) || !unit(self.media_penalty) {
            return bad("dangling_ref_rate, rater_accuracy and media_penalty must lie in [0, 1]".into());
        }
        if let Some((y, r)) = self.retraction_schedule.iter().find(|(_, r)| !unit(**r)) {
            return bad(format!("retraction rate {r} for {y} outside [0, 1]"));
        }
        if let Some((reason, p)) = self.penalty.iter().find(|(_, p)| !unit(**p)) {
            return bad(format!("penalty {p} for {reason} outside [0, 1]"));
        }
        if self.delay_weights.iter().any(|w| !(*w >= 0.0)) || self.delay_weights.iter().sum::<f64>() <= 0.0 {
            return bad("delay_weights must be non-negative with a positive sum".into());
        }
        if self.reason_mix.values().any(|w| !(*w >= 0.0)) || self.reason_mix.values().sum::<f64>() <= 0.0 {
            return bad("reason_mix must be non-negative with a positive sum".into());
        }
        if let Some(t) = self.topics.iter().find(|t| !unit(t.base_rate)) {
            return bad(format!("topic {} base rate outside [0, 1]", t.key));
        }
        if let Some(c) = &self.coupling {
            if !self.topics.iter().any(|t| t.key == c.topic) {
                return bad(format!("coupled topic {} not in the topic list", c.topic));
            }
            if c.lag == 0 {
                return bad("coupling lag must be at least 1".into());
            }
        }
        for year in self.retraction_schedule.keys() {
            if *year > self.last_year - 1 || *year < self.first_year {
                return bad(format!("retractions scheduled for {year}, outside the publication years"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRetraction {
    pub paper_id: String,
    pub pub_year: i32,
    pub retraction_year: i32,
    pub reason: ReasonCode,
    pub requester: Requester,
    pub penalty: f64,
    pub media_covered: bool,
    pub twin: Option<String>,
    /// No other non-retracted paper in the twin's journal/date stratum has
    /// the same citations through the retraction year, so the twin is the
    /// only zero-distance control.
    pub twin_unique: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearCounts {
    pub published: usize,
    pub retracted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    pub papers: usize,
    pub years: BTreeMap<i32, YearCounts>,
    pub retractions: Vec<PlantedRetraction>,
    pub media_authors: Vec<String>,
    /// Topic key → retracted papers carrying it.
    pub retracted_topic_counts: BTreeMap<String, usize>,
    pub topic_counts: BTreeMap<String, usize>,
    pub coupling: Option<Coupling>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub records: Vec<PaperRecord>,
    pub ground_truth: GroundTruth,
    pub annotations: Vec<AnnotationRecord>,
}

impl SynthOutput {
    pub fn corpus(&self) -> Result<Corpus, CorpusError> {
        Corpus::from_records(self.records.clone(), &IngestOptions::default())
    }

    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// "phrase<TAB>topic_key" lines for the configured topics.
    pub fn dictionary(&self) -> String {
        self.ground_truth.config.topics.iter().map(|t| format!("{}\t{}\n", t.phrase, t.key)).collect()
    }

    /// Writes the corpus to `corpus_path` and ground_truth.json,
    /// annotations.csv, topics.tsv and media.txt beside it.
    pub fn write(&self, corpus_path: &Path) -> Result<Vec<PathBuf>, SynthError> {
        let dir = corpus_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let write = |path: PathBuf, text: String| {
            std::fs::write(&path, text)
                .map(|_| path.clone())
                .map_err(|e| SynthError::Io { path: path.display().to_string(), message: e.to_string() })
        };
        std::fs::create_dir_all(dir)
            .map_err(|e| SynthError::Io { path: dir.display().to_string(), message: e.to_string() })?;
        let truth = serde_json::to_string_pretty(&self.ground_truth).expect("ground truth serializes") + "\n";
        let media: String = self.ground_truth.media_authors.iter().map(|a| format!("{a}\n")).collect();
        Ok(vec![
            write(corpus_path.to_path_buf(), self.jsonl())?,
            write(dir.join("ground_truth.json"), truth)?,
            write(dir.join("annotations.csv"), write_annotations_csv(&self.annotations))?,
            write(dir.join("topics.tsv"), self.dictionary())?,
            write(dir.join("media.txt"), media)?,
        ])
    }
}

/// One attachment slot: a paper, or a retracted paper with its twin.
struct Unit {
    /// Retracted or ordinary paper first, twin second.
    members: Vec<usize>,
    pub_year: i32,
    retraction: Option<(i32, f64)>,
    degree: u64,
}

struct Draft {
    record: PaperRecord,
    topics: BTreeSet<usize>,
    /// Citations by citing year.
    cites: BTreeMap<i32, u64>,
    twin_of: Option<usize>,
}

fn weighted_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn author_name(i: usize) -> String {
    let surname = SURNAMES[i % SURNAMES.len()];
    let rest = i / SURNAMES.len();
    let a = SYLLABLES[rest % SYLLABLES.len()];
    let b = SYLLABLES[(rest / SYLLABLES.len()) % SYLLABLES.len()];
    let c = rest / (SYLLABLES.len() * SYLLABLES.len());
    let mut given = format!("{}{}", a, b);
    given[..1].make_ascii_uppercase();
    if c > 0 {
        format!("{surname}, {given} {}", (b'A' + (c % 26) as u8) as char)
    } else {
        format!("{surname}, {given}")
    }
}

fn institution_name(i: usize) -> String {
    format!("Univ Synth {i:04}")
}

pub fn generate_corpus(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let home: Vec<usize> = (0..config.authors).map(|_| rng.gen_range(0..config.institutions)).collect();
    let reasons: Vec<ReasonCode> = config.reason_mix.keys().copied().collect();
    let reason_weights: Vec<f64> = config.reason_mix.values().copied().collect();
    let coupled = config
        .coupling
        .as_ref()
        .and_then(|c| config.topics.iter().position(|t| t.key == c.topic).map(|i| (i, c)));

    let mut drafts: Vec<Draft> = Vec::new();
    let mut units: Vec<Unit> = Vec::new();
    let mut years: BTreeMap<i32, YearCounts> = BTreeMap::new();
    let mut retractions: Vec<(usize, PlantedRetraction)> = Vec::new();
    let mut media_authors: BTreeSet<String> = BTreeSet::new();
    let mut topical_retracted: BTreeMap<i32, usize> = BTreeMap::new();

    for year in config.first_year..=config.last_year {
        // Attachment weights are frozen for the whole year.
        let weights: Vec<f64> = units
            .iter()
            .map(|u| {
                ((u.degree + 1) as f64).powf(config.attachment_exponent)
                    * (-config.age_decay * (year - u.pub_year) as f64).exp()
            })
            .collect();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }

        let n = config.papers_per_year;
        let n_ret = config.planned_retractions(year).min(n);
        let retracted_slots: BTreeSet<usize> = sample(&mut rng, n, n_ret).into_iter().collect();
        let couple_share = coupled.map(|_| rng.gen_range(0.0..0.5));
        let coupled_rate = coupled.map(|(i, c)| {
            let lagged = year - c.lag as i32;
            let published = years.get(&lagged).map_or(0, |y| y.published);
            let ret = if published == 0 {
                0.0
            } else {
                topical_retracted.get(&lagged).copied().unwrap_or(0) as f64 / published as f64
            };
            (config.topics[i].base_rate + c.strength * ret).clamp(0.0, 1.0)
        });

        let first_index = drafts.len();
        let mut year_units = Vec::new();
        for slot in 0..n {
            let idx = drafts.len();
            let paper_id = format!("p{year}{slot:05}");
            let retracted = retracted_slots.contains(&slot);
            let journal = rng.gen_range(0..config.journals);
            let month = config.months.then(|| rng.gen_range(1..=12u8));

            let topics: BTreeSet<usize> = config
                .topics
                .iter()
                .enumerate()
                .filter(|(i, t)| {
                    let p = match (coupled, retracted) {
                        (Some((c, _)), true) if c == *i => couple_share.unwrap_or(0.0),
                        (Some((c, _)), false) if c == *i => coupled_rate.unwrap_or(t.base_rate),
                        _ => t.base_rate,
                    };
                    rng.gen::<f64>() < p
                })
                .map(|(i, _)| i)
                .collect();
            let authors = draw_authors(&mut rng, config);

            // References to earlier units.
            let mut references = Vec::new();
            if !units.is_empty() {
                let k = if config.refs_per_paper > 0.0 {
                    Poisson::new(config.refs_per_paper).expect("positive mean").sample(&mut rng) as usize
                } else {
                    0
                };
                let mut chosen: BTreeSet<usize> = BTreeSet::new();
                let mut dangling: BTreeSet<usize> = BTreeSet::new();
                let mut picks = Vec::new();
                let mut attempts = 0;
                while picks.len() < k.min(units.len()) && attempts < 50 * (k + 1) {
                    attempts += 1;
                    if rng.gen::<f64>() < config.dangling_ref_rate {
                        let ext = rng.gen_range(0..2000usize);
                        if dangling.insert(ext) {
                            picks.push(Err(ext));
                        }
                        continue;
                    }
                    let x = rng.gen::<f64>() * acc;
                    let u = cumulative.partition_point(|c| *c <= x).min(units.len() - 1);
                    if chosen.insert(u) {
                        picks.push(Ok(u));
                    }
                }
                for pick in picks {
                    match pick {
                        Err(ext) => references.push(format!("ext{ext:04}")),
                        Ok(u) => {
                            let unit = &mut units[u];
                            unit.degree += 1;
                            let after = unit.retraction.filter(|(yr, _)| year > *yr);
                            for (m, &member) in unit.members.iter().enumerate() {
                                let keep = match after {
                                    Some((_, factor)) if m == 0 => rng.gen::<f64>() < factor,
                                    _ => true,
                                };
                                if keep {
                                    references.push(drafts[member].record.paper_id.clone());
                                    *drafts[member].cites.entry(year).or_default() += 1;
                                }
                            }
                        }
                    }
                }
            }

            let mut record = PaperRecord {
                paper_id,
                title: String::new(),
                pub_year: year,
                pub_month: month,
                journal: JOURNALS[journal].0.to_string(),
                esi_category: JOURNALS[journal].1,
                author_names: authors.iter().map(|&a| author_name(a)).collect(),
                institution_names: institutions_of(&authors, &home),
                references,
                retraction: None,
            };
            let mut unit_retraction = None;
            if retracted {
                let delay = weighted_index(&mut rng, &config.delay_weights) as i32;
                let retraction_year = (year + delay).min(config.last_year);
                let reason = reasons[weighted_index(&mut rng, &reason_weights)];
                let requester = [Requester::Editor, Requester::Author, Requester::NotFound]
                    [weighted_index(&mut rng, &[0.5, 0.35, 0.15])];
                let first_author = record.author_names[0].clone();
                let media_covered = reason.is_misconduct()
                    && (media_authors.contains(&first_author) || media_authors.len() < config.media_covered);
                if media_covered {
                    media_authors.insert(first_author);
                }
                let mut penalty = config.penalty_for(reason);
                if media_covered {
                    penalty *= config.media_penalty;
                }
                record.retraction = Some(RetractionNotice { retraction_year, reason: Some(reason), requester });
                unit_retraction = Some((retraction_year, penalty));
                retractions.push((
                    idx,
                    PlantedRetraction {
                        paper_id: record.paper_id.clone(),
                        pub_year: year,
                        retraction_year,
                        reason,
                        requester,
                        penalty,
                        media_covered,
                        twin: None,
                        twin_unique: false,
                    },
                ));
            }
            record.title = title(&mut rng, config, &topics, unit_retraction.map(|r| r.0));
            drafts.push(Draft { record, topics, cites: BTreeMap::new(), twin_of: None });
            year_units.push(Unit { members: vec![idx], pub_year: year, retraction: unit_retraction, degree: 0 });
        }

        // Twins follow the year's regular papers.
        if config.plant_twins {
            let mut slot = n;
            for unit in year_units.iter_mut().filter(|u| u.retraction.is_some()) {
                let original = unit.members[0];
                let idx = drafts.len();
                let src = &drafts[original].record;
                let (journal, esi, month) = (src.journal.clone(), src.esi_category, src.pub_month);
                let topics: BTreeSet<usize> = config
                    .topics
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| rng.gen::<f64>() < t.base_rate)
                    .map(|(i, _)| i)
                    .collect();
                let authors = draw_authors(&mut rng, config);
                let record = PaperRecord {
                    paper_id: format!("p{year}{slot:05}"),
                    title: title(&mut rng, config, &topics, None),
                    pub_year: year,
                    pub_month: month,
                    journal,
                    esi_category: esi,
                    author_names: authors.iter().map(|&a| author_name(a)).collect(),
                    institution_names: institutions_of(&authors, &home),
                    references: Vec::new(),
                    retraction: None,
                };
                slot += 1;
                drafts.push(Draft { record, topics, cites: BTreeMap::new(), twin_of: Some(original) });
                unit.members.push(idx);
            }
        }

        let published = drafts.len() - first_index;
        let retracted_count = drafts[first_index..].iter().filter(|d| d.record.retraction.is_some()).count();
        years.insert(year, YearCounts { published, retracted: retracted_count });
        if let Some((c, _)) = coupled {
            let count = drafts[first_index..]
                .iter()
                .filter(|d| d.record.retraction.is_some() && d.topics.contains(&c))
                .count();
            topical_retracted.insert(year, count);
        }
        units.extend(year_units);
    }

    // Twin lookup and uniqueness.
    let twin_of: BTreeMap<usize, usize> =
        drafts.iter().enumerate().filter_map(|(i, d)| d.twin_of.map(|o| (o, i))).collect();
    let mut strata: BTreeMap<(String, i32, Option<u8>), Vec<usize>> = BTreeMap::new();
    for (i, d) in drafts.iter().enumerate() {
        strata.entry((d.record.journal.clone(), d.record.pub_year, d.record.pub_month)).or_default().push(i);
    }
    let pre_curve = |i: usize, yr: i32| -> Vec<u64> {
        let d = &drafts[i];
        (d.record.pub_year..=yr).map(|y| d.cites.get(&y).copied().unwrap_or(0)).collect()
    };
    for (idx, planted) in retractions.iter_mut() {
        let Some(&twin) = twin_of.get(idx) else { continue };
        planted.twin = Some(drafts[twin].record.paper_id.clone());
        let r = &drafts[*idx].record;
        let reference = pre_curve(twin, planted.retraction_year);
        let stratum = &strata[&(r.journal.clone(), r.pub_year, r.pub_month)];
        planted.twin_unique = stratum
            .iter()
            .filter(|&&i| i != twin && drafts[i].record.retraction.is_none())
            .all(|&i| pre_curve(i, planted.retraction_year) != reference);
    }

    let mut topic_counts = BTreeMap::new();
    let mut retracted_topic_counts = BTreeMap::new();
    for d in &drafts {
        for &t in &d.topics {
            let key = config.topics[t].key.clone();
            *topic_counts.entry(key.clone()).or_insert(0) += 1;
            if d.record.retraction.is_some() {
                *retracted_topic_counts.entry(key).or_insert(0) += 1;
            }
        }
    }

    let planted: Vec<PlantedRetraction> = retractions.into_iter().map(|(_, p)| p).collect();
    let annotations = annotate(&mut rng, config, &planted);
    let records: Vec<PaperRecord> = drafts.into_iter().map(|d| d.record).collect();
    Ok(SynthOutput {
        ground_truth: GroundTruth {
            config: config.clone(),
            papers: records.len(),
            years,
            retractions: planted,
            media_authors: media_authors.into_iter().collect(),
            retracted_topic_counts,
            topic_counts,
            coupling: config.coupling.clone(),
        },
        records,
        annotations,
    })
}

/// One to five distinct authors; co-authors come mostly from the first
/// author's group of ten so collaborations recur.
fn draw_authors(rng: &mut ChaCha8Rng, config: &SynthConfig) -> Vec<usize> {
    let first = rng.gen_range(0..config.authors);
    let extra = Poisson::new(1.5).expect("positive mean").sample(rng) as usize;
    let mut authors = vec![first];
    let group = first / 10 * 10;
    let mut attempts = 0;
    while authors.len() < (1 + extra).min(5).min(config.authors) && attempts < 50 {
        attempts += 1;
        let a = if rng.gen::<f64>() < 0.7 {
            (group + rng.gen_range(0..10)).min(config.authors - 1)
        } else {
            rng.gen_range(0..config.authors)
        };
        if !authors.contains(&a) {
            authors.push(a);
        }
    }
    authors
}

fn institutions_of(authors: &[usize], home: &[usize]) -> Vec<String> {
    let mut seen = Vec::new();
    for &a in authors {
        let name = institution_name(home[a]);
        if !seen.contains(&name) {
            seen.push(name);
        }
    }
    seen
}

fn title(rng: &mut ChaCha8Rng, config: &SynthConfig, topics: &BTreeSet<usize>, retracted: Option<i32>) -> String {
    let filler = FILLERS[rng.gen_range(0..FILLERS.len())];
    let mut title = if topics.is_empty() {
        let mut f = filler.to_string();
        f[..1].make_ascii_uppercase();
        f
    } else {
        let phrases: Vec<&str> = topics.iter().map(|&t| config.topics[t].phrase.as_str()).collect();
        let mut head = phrases.join(" and ");
        head[..1].make_ascii_uppercase();
        format!("{head}: {filler}")
    };
    if let Some(yr) = retracted {
        let vol = rng.gen_range(1..200);
        let page = rng.gen_range(1..2000);
        title.push_str(&format!(" (Retracted Article. See vol. {vol}, pg. {page}, {yr})"));
    }
    title
}

fn annotate(rng: &mut ChaCha8Rng, config: &SynthConfig, planted: &[PlantedRetraction]) -> Vec<AnnotationRecord> {
    let mut out = Vec::new();
    for p in planted {
        for r in 0..config.raters {
            let reason = if rng.gen::<f64>() < config.rater_accuracy {
                p.reason
            } else {
                let others: Vec<ReasonCode> = ReasonCode::ALL.into_iter().filter(|c| *c != p.reason).collect();
                others[rng.gen_range(0..others.len())]
            };
            let requester = if rng.gen::<f64>() < config.rater_accuracy {
                p.requester
            } else {
                let others: Vec<Requester> = Requester::ALL.into_iter().filter(|c| *c != p.requester).collect();
                others[rng.gen_range(0..others.len())]
            };
            out.push(AnnotationRecord {
                paper_id: p.paper_id.clone(),
                rater_id: format!("r{}", r + 1),
                reason,
                requester,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    fn small() -> SynthConfig {
        let mut c = SynthConfig {
            seed: 7,
            first_year: 2000,
            last_year: 2014,
            papers_per_year: 200,
            authors: 600,
            institutions: 100,
            ..SynthConfig::default()
        };
        c.retraction_schedule = c.schedule_for_total(60);
        c
    }

    #[test]
    fn schedule_places_exact_total() {
        let c = small();
        let total: usize = (c.first_year..=c.last_year).map(|y| c.planned_retractions(y)).sum();
        assert_eq!(total, 60);
        assert!(c.retraction_schedule.keys().all(|&y| y <= c.last_retraction_pub_year()));
    }

    #[test]
    fn same_seed_same_bytes() {
        let digest = |c: &SynthConfig| {
            let out = generate_corpus(c).unwrap();
            Sha256::digest(out.jsonl().as_bytes())
        };
        let c = small();
        assert_eq!(digest(&c), digest(&c));
        let other = SynthConfig { seed: 8, ..small() };
        assert_ne!(digest(&c), digest(&other));
    }

    #[test]
    fn output_ingests_and_conserves_schedule() {
        let c = small();
        let out = generate_corpus(&c).unwrap();
        let corpus = out.corpus().unwrap();
        assert_eq!(corpus.len(), out.ground_truth.papers);
        assert_eq!(corpus.retracted_count(), 60);
        for (year, counts) in &out.ground_truth.years {
            assert_eq!(counts.retracted, c.planned_retractions(*year));
            assert_eq!(corpus.papers_in_year(*year).len(), counts.published);
        }
        assert_eq!(out.annotations.len(), 60 * c.raters);
    }

    #[test]
    fn twins_share_pre_curves() {
        let out = generate_corpus(&small()).unwrap();
        let corpus = out.corpus().unwrap();
        let cites = |id: &str, y: i32| {
            corpus.cited_by(id).iter().filter(|c| corpus.paper(c).unwrap().pub_year == y).count()
        };
        for p in &out.ground_truth.retractions {
            let twin = p.twin.as_deref().unwrap();
            for y in p.pub_year..=p.retraction_year {
                assert_eq!(cites(&p.paper_id, y), cites(twin, y));
            }
            // Null penalty: the curves never diverge.
            for y in p.retraction_year..=2014 {
                assert_eq!(cites(&p.paper_id, y), cites(twin, y));
            }
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let c = SynthConfig { refs_per_paper: 500.0, papers_per_year: 100, ..small() };
        assert!(matches!(generate_corpus(&c), Err(SynthError::Infeasible(_))));
        let mut c = small();
        c.penalty.insert(ReasonCode::Error, 1.5);
        assert!(matches!(generate_corpus(&c), Err(SynthError::Infeasible(_))));
        let c = SynthConfig { first_year: 1970, ..small() };
        assert!(matches!(generate_corpus(&c), Err(SynthError::Infeasible(_))));
    }

    #[test]
    fn author_names_are_distinct_after_normalization() {
        let names: BTreeSet<String> = (0..20_000).map(|i| crate::corpus::normalize_name(&author_name(i))).collect();
        assert_eq!(names.len(), 20_000);
    }
}
