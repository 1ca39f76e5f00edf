//! Report tables and the bundled JSON + CSV report directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::annotation::{
    fleiss_kappa, read_annotations, reason_distribution, reason_trend, resolve_reasons, AnnotationRecord,
    CategoryAxis, KappaReport, ReasonCode, ReasonSeries, ReasonShare, Resolution, SubjectFilter,
    YearAttribution,
};
use crate::cohort::{write_cohort_csv, CohortBuilder, CohortConfig, CohortRun, TreatmentKind};
use crate::corpus::{
    annual_retraction_rate, citation_distribution, esi_retraction_rates, ingest_corpus, normalize_name,
    retraction_delay, CitationDistribution, CitationSubset, Corpus, DelayReport, EsiRate, IngestOptions,
    InputFormat, RateEntry,
};
use crate::impact::{impact_curve, ImpactConfig, CURVE_CSV_HEADER};
use crate::stats::{
    compare_cohorts, format_median, segment_change_ratio, segment_tags, Alternative, Metric, MwMode,
    Segment,
};
use crate::topics::{
    annotate_titles, top_topics, topic_granger_screen, topic_series, write_series_csv, CoefficientRow,
    DictionaryAnnotator, ScreenCell, TitleAnnotator, TopicRank,
};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reads a media list: one author name per line, normalized; blank lines
/// and '#' comments are skipped.
pub fn read_media_list(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Report(format!("cannot read media list {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_name)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub n: usize,
    pub excluded: usize,
    pub median_treatment: f64,
    pub median_control: f64,
    pub u_statistic: f64,
    pub p_value: f64,
    pub mode: MwMode,
    pub row: String,
}

/// One comparison row: a treatment kind with both metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub kind: TreatmentKind,
    pub treatments: usize,
    pub pairs: usize,
    pub exclusions: BTreeMap<String, usize>,
    pub post_impact: Option<ComparisonSummary>,
    pub change_ratio: Option<ComparisonSummary>,
    /// Why a metric could not be compared.
    pub notes: Vec<String>,
}

impl ComparisonRow {
    /// "P_t  N=...  post ...  ratio ..." with p-values always shown.
    pub fn display(&self) -> String {
        let cell = |s: &Option<ComparisonSummary>| match s {
            Some(s) => format!("{} (p={:.3e})", s.row, s.p_value),
            None => "n/a".to_string(),
        };
        format!(
            "{:<9} N={:<6} post_impact: {:<28} change_ratio: {}",
            self.kind.key(),
            self.pairs,
            cell(&self.post_impact),
            cell(&self.change_ratio)
        )
    }
}

pub fn comparison_row(
    run: &CohortRun,
    treatments: usize,
    alternative: Alternative,
) -> ComparisonRow {
    let mut exclusions = BTreeMap::new();
    for e in &run.exclusions {
        *exclusions.entry(e.reason.key().to_string()).or_insert(0) += 1;
    }
    let mut notes = Vec::new();
    let mut summary = |metric: Metric| match compare_cohorts(&run.pairs, metric, alternative) {
        Ok(r) => Some(ComparisonSummary {
            n: r.pairs_used,
            excluded: r.pairs_excluded,
            median_treatment: r.result.median_treatment,
            median_control: r.result.median_control,
            u_statistic: r.result.u_statistic,
            p_value: r.result.p_value,
            mode: r.result.mode,
            row: r.row,
        }),
        Err(e) => {
            notes.push(format!("{}: {e}", metric.key()));
            None
        }
    };
    let post_impact = summary(Metric::PostImpact);
    let change_ratio = summary(Metric::ChangeRatio);
    ComparisonRow { kind: run.kind, treatments, pairs: run.pairs.len(), exclusions, post_impact, change_ratio, notes }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentEntry {
    pub kind: TreatmentKind,
    pub segment: Segment,
    pub n: usize,
    pub median: Option<f64>,
    /// Two-decimal display, "n/a" when the segment is empty.
    pub display: String,
}

pub fn segment_table(
    corpus: &Corpus,
    run: &CohortRun,
    resolved: &BTreeMap<String, ReasonCode>,
    media: &BTreeSet<String>,
) -> Vec<SegmentEntry> {
    let tags = segment_tags(corpus, &run.pairs, resolved, media);
    segment_change_ratio(&run.pairs, &tags)
        .into_iter()
        .map(|r| SegmentEntry {
            kind: run.kind,
            segment: r.segment,
            n: r.n,
            median: r.median,
            display: r.median.map_or_else(|| "n/a".to_string(), format_median),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub impact: ImpactConfig,
    pub kinds: Vec<TreatmentKind>,
    pub segment_kinds: Vec<TreatmentKind>,
    pub lags: Vec<usize>,
    pub topic_limit: usize,
    pub resolution: Resolution,
    pub trend_from_year: i32,
    pub alternative: Alternative,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            impact: ImpactConfig::default(),
            kinds: TreatmentKind::ALL.to_vec(),
            segment_kinds: vec![TreatmentKind::RetractedPaper, TreatmentKind::RetractedAuthor],
            lags: vec![1, 2, 3],
            topic_limit: 10,
            resolution: Resolution::Majority,
            trend_from_year: 2000,
            alternative: Alternative::TwoSided,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub corpus: PathBuf,
    pub format: Option<InputFormat>,
    pub annotations: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub media_list: Option<PathBuf>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub role: String,
    /// File name only, so reports do not depend on where inputs live.
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub inputs: Vec<InputDigest>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub module_versions: BTreeMap<String, String>,
    pub timestamp: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest(role: &str, path: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(path)?;
    Ok(InputDigest {
        role: role.to_string(),
        name: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn new(inputs: &ReportInputs, config: &impl Serialize, timestamp: bool) -> Result<Self> {
        let mut digests = vec![digest("corpus", &inputs.corpus)?];
        for (role, path) in [
            ("annotations", &inputs.annotations),
            ("dictionary", &inputs.dictionary),
            ("media_list", &inputs.media_list),
        ] {
            if let Some(p) = path {
                digests.push(digest(role, p)?);
            }
        }
        let config_json = serde_json::to_string(config).map_err(|e| Error::Report(e.to_string()))?;
        let module_versions = ["annotation", "cohort", "corpus", "impact", "stats", "synth", "topics", "cli"]
            .into_iter()
            .map(|m| (m.to_string(), VERSION.to_string()))
            .collect();
        let timestamp = timestamp.then(|| {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            format!("unix:{secs}")
        });
        Ok(RunManifest {
            tool: format!("rimpact {VERSION}"),
            inputs: digests,
            config_hash: sha256_hex(config_json.as_bytes()),
            seeds: inputs.seeds.clone(),
            module_versions,
            timestamp,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescribeTables {
    pub papers: usize,
    pub retracted: usize,
    pub retraction_rate: Vec<RateEntry>,
    pub retraction_delay: DelayReport,
    pub esi_rates: Vec<EsiRate>,
    pub citations_retracted: CitationDistribution,
    pub citations_all: CitationDistribution,
}

pub fn describe_tables(corpus: &Corpus) -> DescribeTables {
    DescribeTables {
        papers: corpus.len(),
        retracted: corpus.retracted_count(),
        retraction_rate: annual_retraction_rate(corpus),
        retraction_delay: retraction_delay(corpus),
        esi_rates: esi_retraction_rates(corpus),
        citations_retracted: citation_distribution(corpus, CitationSubset::Retracted),
        citations_all: citation_distribution(corpus, CitationSubset::All),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationTables {
    pub kappa_reason: Option<KappaReport>,
    pub kappa_requester: Option<KappaReport>,
    pub notes: Vec<String>,
    pub distribution: Vec<ReasonShare>,
    pub trend: Vec<ReasonSeries>,
}

pub fn annotation_tables(
    corpus: Option<&Corpus>,
    records: &[AnnotationRecord],
    resolution: Resolution,
    from_year: i32,
) -> AnnotationTables {
    let mut notes = Vec::new();
    let mut kappa = |axis: CategoryAxis| match fleiss_kappa(records, axis, SubjectFilter::ModalCount) {
        Ok(k) => Some(k),
        Err(e) => {
            notes.push(format!("{axis:?} kappa: {e}"));
            None
        }
    };
    let kappa_reason = kappa(CategoryAxis::Reason);
    let kappa_requester = kappa(CategoryAxis::Requester);
    let resolved = resolve_reasons(records, resolution);
    AnnotationTables {
        kappa_reason,
        kappa_requester,
        notes,
        distribution: reason_distribution(records, resolution),
        trend: corpus
            .map(|c| reason_trend(c, &resolved, from_year, YearAttribution::PublicationYear))
            .unwrap_or_default(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicTables {
    pub top_topics: Vec<TopicRank>,
    pub granger: Vec<ScreenCell>,
    pub granger_coefficients: Vec<CoefficientRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub manifest: RunManifest,
    pub config: ReportConfig,
    pub describe: DescribeTables,
    pub annotation: Option<AnnotationTables>,
    pub comparisons: Vec<ComparisonRow>,
    pub segments: Vec<SegmentEntry>,
    pub topics: Option<TopicTables>,
    #[serde(skip)]
    runs: Vec<CohortRun>,
    #[serde(skip)]
    curves_csv: String,
    #[serde(skip)]
    series_csv: Option<String>,
}

/// Runs every analysis over the inputs.
pub fn build_report(inputs: &ReportInputs, config: &ReportConfig, timestamp: bool) -> Result<Report> {
    let format = inputs.format.unwrap_or_else(|| InputFormat::from_path(&inputs.corpus));
    let corpus = ingest_corpus(&inputs.corpus, format, &IngestOptions::default())?;
    let manifest = RunManifest::new(inputs, config, timestamp)?;

    let records = inputs.annotations.as_deref().map(read_annotations).transpose()?;
    let annotation = records
        .as_deref()
        .map(|r| annotation_tables(Some(&corpus), r, config.resolution, config.trend_from_year));
    let resolved = records.as_deref().map(|r| resolve_reasons(r, config.resolution)).unwrap_or_default();
    let media = inputs.media_list.as_deref().map(read_media_list).transpose()?.unwrap_or_default();

    let builder = CohortBuilder::new(&corpus, CohortConfig { impact: config.impact, ..CohortConfig::default() });
    let mut kinds: BTreeSet<TreatmentKind> = config.kinds.iter().copied().collect();
    kinds.extend(config.segment_kinds.iter().copied());
    let runs: Vec<CohortRun> = kinds.iter().map(|&k| builder.run(k)).collect();
    let run_of = |k: TreatmentKind| runs.iter().find(|r| r.kind == k).expect("every kind was run");

    let comparisons = config
        .kinds
        .iter()
        .map(|&k| comparison_row(run_of(k), builder.treatments(k).len(), config.alternative))
        .collect();
    let segments = config
        .segment_kinds
        .iter()
        .flat_map(|&k| segment_table(&corpus, run_of(k), &resolved, &media))
        .collect();

    let (topics, series_csv) = match &inputs.dictionary {
        Some(path) => {
            let dict = DictionaryAnnotator::from_path(path)?;
            let known = dict.topics();
            let assignments = annotate_titles(&corpus, &dict);
            let ranked = top_topics(&corpus, &assignments, config.topic_limit);
            let names: Vec<String> = ranked.iter().map(|r| r.topic.clone()).collect();
            let screen = topic_granger_screen(&corpus, &assignments, &known, &names, &config.lags)?;
            let series = names
                .iter()
                .map(|t| topic_series(&corpus, &assignments, &known, t))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut csv = Vec::new();
            write_series_csv(&series, &mut csv)?;
            (
                Some(TopicTables { top_topics: ranked, granger: screen.cells, granger_coefficients: screen.coefficients }),
                Some(String::from_utf8(csv).expect("csv is utf-8")),
            )
        }
        None => (None, None),
    };

    let curves_csv = curves_csv(&corpus, &runs, &config.impact)?;
    Ok(Report {
        manifest,
        config: config.clone(),
        describe: describe_tables(&corpus),
        annotation,
        comparisons,
        segments,
        topics,
        runs,
        curves_csv,
        series_csv,
    })
}

/// Curves of every matched treatment and control.
fn curves_csv(corpus: &Corpus, runs: &[CohortRun], impact: &ImpactConfig) -> Result<String> {
    let mut entities = BTreeSet::new();
    for run in runs {
        for p in &run.pairs {
            entities.insert(p.treatment.clone());
            entities.extend(p.controls.iter().cloned());
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Report(e.to_string());
    w.write_record(CURVE_CSV_HEADER).map_err(err)?;
    for e in &entities {
        let curve = impact_curve(corpus, e, impact)?;
        w.write_record(curve.csv_record()).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn csv_string<F>(header: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> std::result::Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Report(e.to_string()))?;
    fill(&mut w).map_err(|e| Error::Report(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Report {
    pub fn runs(&self) -> &[CohortRun] {
        &self.runs
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map(|s| s + "\n").map_err(|e| Error::Report(e.to_string()))
    }

    /// Writes report.json and the CSV tables into `dir`; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files: Vec<(String, String)> = vec![("report.json".into(), self.to_json()?)];
        let d = &self.describe;
        files.push((
            "retraction_rate.csv".into(),
            csv_string(&["year", "retracted", "total", "rate"], |w| {
                d.retraction_rate.iter().try_for_each(|r| {
                    w.write_record([r.year.to_string(), r.retracted.to_string(), r.total.to_string(), r.rate.to_string()])
                })
            })?,
        ));
        files.push((
            "retraction_delay.csv".into(),
            csv_string(&["retraction_year", "papers", "median_delay"], |w| {
                d.retraction_delay.by_retraction_year.iter().try_for_each(|r| {
                    w.write_record([r.year.to_string(), r.n.to_string(), r.median.to_string()])
                })
            })?,
        ));
        files.push((
            "esi_rates.csv".into(),
            csv_string(&["esi_category", "retracted", "total", "rate"], |w| {
                d.esi_rates.iter().try_for_each(|r| {
                    w.write_record([r.category.key().to_string(), r.retracted.to_string(), r.total.to_string(), r.rate.to_string()])
                })
            })?,
        ));
        files.push((
            "citation_distribution.csv".into(),
            csv_string(&["subset", "lower", "upper", "count"], |w| {
                [("retracted", &d.citations_retracted), ("all", &d.citations_all)].iter().try_for_each(|(name, dist)| {
                    dist.histogram.iter().try_for_each(|b| {
                        w.write_record([name.to_string(), b.lower.to_string(), b.upper.to_string(), b.count.to_string()])
                    })
                })
            })?,
        ));
        files.push((
            "comparisons.csv".into(),
            csv_string(
                &["kind", "pairs", "metric", "n", "median_treatment", "median_control", "p_value", "row"],
                |w| {
                    self.comparisons.iter().try_for_each(|r| {
                        [(Metric::PostImpact, &r.post_impact), (Metric::ChangeRatio, &r.change_ratio)].iter().try_for_each(
                            |(m, s)| match s {
                                Some(s) => w.write_record([
                                    r.kind.key().to_string(),
                                    r.pairs.to_string(),
                                    m.key().to_string(),
                                    s.n.to_string(),
                                    s.median_treatment.to_string(),
                                    s.median_control.to_string(),
                                    s.p_value.to_string(),
                                    s.row.clone(),
                                ]),
                                None => w.write_record([
                                    r.kind.key().to_string(),
                                    r.pairs.to_string(),
                                    m.key().to_string(),
                                    "0".into(),
                                    String::new(),
                                    String::new(),
                                    String::new(),
                                    "n/a".into(),
                                ]),
                            },
                        )
                    })
                },
            )?,
        ));
        files.push((
            "segments.csv".into(),
            csv_string(&["kind", "segment", "n", "median_change_ratio"], |w| {
                self.segments.iter().try_for_each(|s| {
                    w.write_record([s.kind.key().to_string(), s.segment.key().to_string(), s.n.to_string(), opt(s.median)])
                })
            })?,
        ));
        for run in &self.runs {
            let mut buf = Vec::new();
            write_cohort_csv(run, &mut buf)?;
            files.push((format!("cohort_{}.csv", run.kind.key()), String::from_utf8(buf).expect("utf-8")));
        }
        files.push(("curves.csv".into(), self.curves_csv.clone()));
        if let (Some(t), Some(series)) = (&self.topics, &self.series_csv) {
            files.push(("topic_series.csv".into(), series.clone()));
            files.push((
                "granger.csv".into(),
                csv_string(&["topic", "lags", "f_statistic", "p_value", "significant", "note"], |w| {
                    t.granger.iter().try_for_each(|c| {
                        w.write_record([
                            c.topic.clone(),
                            c.lags.to_string(),
                            opt(c.result.as_ref().map(|r| r.f_statistic)),
                            opt(c.result.as_ref().map(|r| r.p_value)),
                            c.significant.to_string(),
                            c.note.clone().unwrap_or_default(),
                        ])
                    })
                })?,
            ));
            files.push((
                "granger_coefficients.csv".into(),
                csv_string(&["topic", "lags", "p_value", "intercept", "a", "b", "b_below_a"], |w| {
                    t.granger_coefficients.iter().try_for_each(|r| {
                        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
                        w.write_record([
                            r.topic.clone(),
                            r.lags.to_string(),
                            r.p_value.to_string(),
                            r.intercept.to_string(),
                            join(&r.a),
                            join(&r.b),
                            r.b_below_a.to_string(),
                        ])
                    })
                })?,
            ));
        }
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}
