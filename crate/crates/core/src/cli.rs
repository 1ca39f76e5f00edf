//! The `rimpact` command line.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::annotation::{read_annotations, resolve_reasons, ReasonCode, Resolution};
use crate::cohort::{write_cohort_csv, CohortBuilder, CohortConfig, TreatmentKind};
use crate::corpus::{ingest_corpus, Corpus, IngestOptions, InputFormat};
use crate::impact::{Boundary, ImpactConfig};
use crate::report::{
    annotation_tables, build_report, comparison_row, describe_tables, read_media_list, segment_table,
    ReportConfig, ReportInputs,
};
use crate::stats::Alternative;
use crate::synth::{generate_corpus, SynthConfig};
use crate::topics::{
    annotate_titles, top_topics, topic_granger_screen, topic_series, write_series_csv, DictionaryAnnotator,
    TitleAnnotator,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rimpact", version, about = "Retraction impact analysis over citation corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a corpus, then print a summary.
    Ingest(InputArgs),
    /// Retraction rate, delay, ESI rates and citation distribution.
    Describe {
        #[command(flatten)]
        input: InputArgs,
        /// Also write the tables as CSV files here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Inter-rater agreement and reason distribution of an annotation file.
    AnnotateStats {
        #[arg(long)]
        annotations: PathBuf,
        /// Optional corpus for the yearly reason trend.
        #[command(flatten)]
        input: OptionalInput,
        #[arg(long, value_enum, default_value_t = Resolution::Majority)]
        resolution: Resolution,
        #[arg(long, default_value_t = 2000)]
        from_year: i32,
    },
    /// Select treatments of one kind and match their controls.
    Cohort {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        kind: TreatmentKind,
        #[command(flatten)]
        impact: ImpactArgs,
        /// Write the cohort CSV to this directory instead of stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compare treatments against matched controls (post-impact and change ratio).
    Compare {
        #[command(flatten)]
        input: InputArgs,
        /// Kinds to compare; all six when omitted.
        #[arg(long, value_enum)]
        kind: Vec<TreatmentKind>,
        #[command(flatten)]
        impact: ImpactArgs,
        #[arg(long, value_enum, default_value_t = Alternative::TwoSided)]
        alternative: Alternative,
    },
    /// Change-ratio medians by retraction reason.
    Segment {
        #[command(flatten)]
        input: InputArgs,
        /// Kinds to segment; P_t and A_t when omitted.
        #[arg(long, value_enum)]
        kind: Vec<TreatmentKind>,
        #[command(flatten)]
        impact: ImpactArgs,
        /// Annotation CSV; notice reasons are used when omitted.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Media-covered author names, one per line.
        #[arg(long)]
        media_list: Option<PathBuf>,
    },
    /// Topic assignment, top retracted topics and Pop/Ret series.
    Topics {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long, default_value_t = 10)]
        limit: usize,
        /// Write topic_series.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Does topical retraction rate Granger-cause topical popularity?
    Granger {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        lags: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Generate a synthetic corpus with planted effects.
    Synth(SynthArgs),
    /// Run everything and write report.json plus CSV tables.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        dictionary: Option<PathBuf>,
        #[arg(long)]
        media_list: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        lags: Vec<usize>,
        #[command(flatten)]
        impact: ImpactArgs,
        /// Seed(s) that produced the input, recorded in the manifest.
        #[arg(long)]
        seed: Vec<u64>,
        /// Leave the timestamp out of the manifest.
        #[arg(long)]
        no_timestamp: bool,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus file (JSONL or CSV).
    #[arg(value_name = "INPUT", required_unless_present = "input")]
    pub path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    pub input: Option<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
}

impl InputArgs {
    fn path(&self) -> &Path {
        self.input.as_deref().or(self.path.as_deref()).expect("clap requires an input")
    }

    fn load(&self) -> Result<Corpus> {
        let path = self.path();
        let format = self.format.unwrap_or_else(|| InputFormat::from_path(path));
        Ok(ingest_corpus(path, format, &IngestOptions::default())?)
    }
}

#[derive(Debug, Args)]
pub struct OptionalInput {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct ImpactArgs {
    /// Last year of every impact curve.
    #[arg(long, default_value_t = 2014)]
    pub horizon_year: i32,
    /// Count the retraction year as pre-retraction (pass false to flip).
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub yr_in_pre: bool,
}

impl ImpactArgs {
    fn config(self) -> ImpactConfig {
        ImpactConfig { horizon: self.horizon_year, boundary: Boundary::from_yr_in_pre(self.yr_in_pre) }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus output path; sidecar files go next to it.
    #[arg(long, required_unless_present = "out_dir")]
    pub out: Option<PathBuf>,
    /// Write corpus.jsonl and sidecars into this directory.
    #[arg(long, conflicts_with = "out")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub papers_per_year: Option<usize>,
    /// Total retractions, spread over the eligible years.
    #[arg(long)]
    pub retractions: Option<usize>,
    /// Post-retraction citation factor for every reason.
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Per-reason factor, e.g. falsification_fabrication=0.3 (repeatable).
    #[arg(long = "reason-penalty", value_parser = parse_reason_penalty)]
    pub reason_penalty: Vec<(ReasonCode, f64)>,
}

fn parse_reason_penalty(s: &str) -> std::result::Result<(ReasonCode, f64), String> {
    let (reason, value) = s.split_once('=').ok_or("expected reason=factor")?;
    let reason: ReasonCode = reason.parse().map_err(|e: crate::annotation::AnnotationError| e.to_string())?;
    let value: f64 = value.parse().map_err(|_| format!("invalid factor {value:?}"))?;
    Ok((reason, value))
}

impl SynthArgs {
    pub fn config(&self) -> Result<SynthConfig> {
        let mut config = match &self.config {
            Some(p) => SynthConfig::from_path(p)?,
            None => SynthConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.papers_per_year {
            let total: usize = (config.first_year..=config.last_year).map(|y| config.planned_retractions(y)).sum();
            config.papers_per_year = n;
            if self.retractions.is_none() {
                config.retraction_schedule = config.schedule_for_total(total);
            }
        }
        if let Some(total) = self.retractions {
            config.retraction_schedule = config.schedule_for_total(total);
        }
        if let Some(p) = self.penalty {
            for reason in ReasonCode::ALL {
                config.penalty.insert(reason, p);
            }
        }
        for &(reason, p) in &self.reason_penalty {
            config.penalty.insert(reason, p);
        }
        Ok(config)
    }
}

fn kinds_or(kinds: &[TreatmentKind], default: &[TreatmentKind]) -> Vec<TreatmentKind> {
    let picked: BTreeSet<TreatmentKind> =
        if kinds.is_empty() { default.iter().copied().collect() } else { kinds.iter().copied().collect() };
    picked.into_iter().collect()
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Report(e.to_string()))
}

/// Runs one command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest(input) => {
            let corpus = input.load()?;
            let (first, last) = corpus.year_range().unwrap_or((0, 0));
            let edges: usize = corpus.papers().map(|p| corpus.citation_count(&p.paper_id)).sum();
            let refs: usize = corpus.papers().map(|p| p.references.len()).sum();
            writeln!(out, "papers: {}", corpus.len())?;
            writeln!(out, "years: {first}-{last}")?;
            writeln!(out, "retracted: {}", corpus.retracted_count())?;
            writeln!(out, "authors: {}", corpus.authors().count())?;
            writeln!(out, "institutions: {}", corpus.institutions().count())?;
            writeln!(out, "citation edges: {edges}")?;
            writeln!(out, "dangling references: {}", refs - edges)?;
        }
        Command::Describe { input, out_dir } => {
            let corpus = input.load()?;
            let t = describe_tables(&corpus);
            writeln!(out, "papers {}  retracted {}", t.papers, t.retracted)?;
            writeln!(out, "\nannual retraction rate (by publication year)")?;
            writeln!(out, "year  retracted  total  rate")?;
            for r in &t.retraction_rate {
                writeln!(out, "{}  {}  {}  {:.6}", r.year, r.retracted, r.total, r.rate)?;
            }
            writeln!(out, "\nmedian retraction delay by retraction year")?;
            for m in &t.retraction_delay.by_retraction_year {
                writeln!(out, "{}  n={}  median={}", m.year, m.n, m.median)?;
            }
            match t.retraction_delay.overall_median {
                Some(m) => writeln!(out, "overall median delay: {m}")?,
                None => writeln!(out, "overall median delay: undefined")?,
            }
            writeln!(out, "\nESI retraction rates (x 1e-4)")?;
            for e in &t.esi_rates {
                writeln!(out, "{:<28} {:>6}/{:<7} {:.2}", e.category.label(), e.retracted, e.total, e.rate * 1e4)?;
            }
            for d in [&t.citations_retracted, &t.citations_all] {
                let median = d.median.map_or("undefined".to_string(), |m| m.to_string());
                let subset = d.subset.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string());
                writeln!(out, "\ncitations ({subset}): n={} median={}", d.n, median)?;
                for b in &d.histogram {
                    writeln!(out, "[{}, {})  {}", b.lower, b.upper, b.count)?;
                }
            }
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("describe.json"), json(&t)? + "\n")?;
                writeln!(out, "\nwrote {}", dir.join("describe.json").display())?;
            }
        }
        Command::AnnotateStats { annotations, input, resolution, from_year } => {
            let records = read_annotations(&annotations)?;
            let corpus = match &input.input {
                Some(p) => Some(ingest_corpus(
                    p,
                    input.format.unwrap_or_else(|| InputFormat::from_path(p)),
                    &IngestOptions::default(),
                )?),
                None => None,
            };
            let t = annotation_tables(corpus.as_ref(), &records, resolution, from_year);
            for k in [&t.kappa_reason, &t.kappa_requester].into_iter().flatten() {
                writeln!(
                    out,
                    "fleiss kappa ({:?}): {:.4}  subjects={} raters={} excluded={}",
                    k.axis, k.kappa, k.subjects, k.raters, k.excluded_subjects
                )?;
            }
            for n in &t.notes {
                writeln!(out, "note: {n}")?;
            }
            let name = resolution.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string());
            writeln!(out, "\nreason distribution ({name})")?;
            for s in &t.distribution {
                writeln!(out, "{:<27} {:>5}  {:.4}", s.reason.key(), s.count, s.proportion)?;
            }
            for series in &t.trend {
                writeln!(out, "\ntrend: {}", series.reason.key())?;
                for p in &series.points {
                    writeln!(out, "{}  {}/{}  {:.6}", p.year, p.count, p.published, p.rate)?;
                }
            }
        }
        Command::Cohort { input, kind, impact, out_dir } => {
            let corpus = input.load()?;
            let builder = CohortBuilder::new(&corpus, CohortConfig { impact: impact.config(), ..Default::default() });
            let run = builder.run(kind);
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let path = dir.join(format!("cohort_{}.csv", kind.key()));
                    write_cohort_csv(&run, std::fs::File::create(&path)?)?;
                    writeln!(
                        out,
                        "{}: {} treatments, {} pairs, {} excluded; wrote {}",
                        kind,
                        builder.treatments(kind).len(),
                        run.pairs.len(),
                        run.exclusions.len(),
                        path.display()
                    )?;
                }
                None => write_cohort_csv(&run, &mut *out)?,
            }
        }
        Command::Compare { input, kind, impact, alternative } => {
            let corpus = input.load()?;
            let builder = CohortBuilder::new(&corpus, CohortConfig { impact: impact.config(), ..Default::default() });
            writeln!(out, "kind      pairs    post-retraction impact       impact change ratio")?;
            for k in kinds_or(&kind, &TreatmentKind::ALL) {
                let row = comparison_row(&builder.run(k), builder.treatments(k).len(), alternative);
                writeln!(out, "{}", row.display())?;
                for n in &row.notes {
                    writeln!(out, "  note: {n}")?;
                }
                if !row.exclusions.is_empty() {
                    let ex: Vec<String> = row.exclusions.iter().map(|(r, c)| format!("{r}={c}")).collect();
                    writeln!(out, "  excluded: {}", ex.join(" "))?;
                }
            }
            let alt = alternative.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string());
            writeln!(out, "* p < 0.05, ** p < 0.01 (Mann-Whitney U, {alt})")?;
        }
        Command::Segment { input, kind, impact, annotations, media_list } => {
            let corpus = input.load()?;
            let resolved = match annotations {
                Some(p) => resolve_reasons(&read_annotations(&p)?, Resolution::Majority),
                None => Default::default(),
            };
            let media = media_list.as_deref().map(read_media_list).transpose()?.unwrap_or_default();
            let builder = CohortBuilder::new(&corpus, CohortConfig { impact: impact.config(), ..Default::default() });
            let kinds = kinds_or(&kind, &[TreatmentKind::RetractedPaper, TreatmentKind::RetractedAuthor]);
            writeln!(out, "median impact change ratio of treatment entities")?;
            for k in kinds {
                let rows = segment_table(&corpus, &builder.run(k), &resolved, &media);
                let cells: Vec<String> =
                    rows.iter().map(|r| format!("{}={} (n={})", r.segment.key(), r.display, r.n)).collect();
                writeln!(out, "{:<9} {}", k.key(), cells.join("  "))?;
            }
        }
        Command::Topics { input, dictionary, limit, out_dir } => {
            let corpus = input.load()?;
            let dict = DictionaryAnnotator::from_path(&dictionary)?;
            let known = dict.topics();
            let assignments = annotate_titles(&corpus, &dict);
            let ranked = top_topics(&corpus, &assignments, limit);
            writeln!(out, "rank  topic                      retracted  esi")?;
            for (i, r) in ranked.iter().enumerate() {
                let esi = r.esi_category.map_or("-", |e| e.label());
                writeln!(out, "{:<5} {:<26} {:>9}  {}", i + 1, r.topic, r.frequency, esi)?;
            }
            if let Some(dir) = out_dir {
                let series = ranked
                    .iter()
                    .map(|r| topic_series(&corpus, &assignments, &known, &r.topic))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                std::fs::create_dir_all(&dir)?;
                let path = dir.join("topic_series.csv");
                write_series_csv(&series, std::fs::File::create(&path)?)?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
        Command::Granger { input, dictionary, lags, limit } => {
            let corpus = input.load()?;
            let dict = DictionaryAnnotator::from_path(&dictionary)?;
            let known = dict.topics();
            let assignments = annotate_titles(&corpus, &dict);
            let names: Vec<String> = top_topics(&corpus, &assignments, limit).into_iter().map(|r| r.topic).collect();
            let screen = topic_granger_screen(&corpus, &assignments, &known, &names, &lags)?;
            writeln!(out, "granger: retraction rate -> popularity (p-values)")?;
            for c in &screen.cells {
                match &c.result {
                    Some(r) => writeln!(
                        out,
                        "{:<26} n={}  F={:.4}  p={:.4}{}",
                        c.topic,
                        c.lags,
                        r.f_statistic,
                        r.p_value,
                        if c.significant { "  *" } else { "" }
                    )?,
                    None => writeln!(out, "{:<26} n={}  not computable: {}", c.topic, c.lags, c.note.as_deref().unwrap_or(""))?,
                }
            }
            writeln!(out, "\ncoefficients of significant cells")?;
            for r in &screen.coefficients {
                let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
                writeln!(
                    out,
                    "{:<26} n={}  C={:.4}  A=[{}]  B=[{}]  max|B| {} max|A|",
                    r.topic,
                    r.lags,
                    r.intercept,
                    fmt(&r.a),
                    fmt(&r.b),
                    if r.b_below_a { "<" } else { ">=" }
                )?;
            }
        }
        Command::Synth(args) => {
            let config = args.config()?;
            let path = match (&args.out, &args.out_dir) {
                (Some(p), _) => p.clone(),
                (None, Some(d)) => d.join("corpus.jsonl"),
                (None, None) => unreachable!("clap requires --out or --out-dir"),
            };
            let output = generate_corpus(&config)?;
            let written = output.write(&path)?;
            writeln!(
                out,
                "seed {}: {} papers, {} retracted",
                config.seed,
                output.ground_truth.papers,
                output.ground_truth.retractions.len()
            )?;
            for p in written {
                writeln!(out, "wrote {}", p.display())?;
            }
        }
        Command::Report { input, out_dir, annotations, dictionary, media_list, lags, impact, seed, no_timestamp } => {
            let inputs = ReportInputs {
                corpus: input.path().to_path_buf(),
                format: input.format,
                annotations,
                dictionary,
                media_list,
                seeds: seed,
            };
            let config = ReportConfig { impact: impact.config(), lags, ..ReportConfig::default() };
            let report = build_report(&inputs, &config, !no_timestamp)?;
            let written = report.write(&out_dir)?;
            for row in &report.comparisons {
                writeln!(out, "{}", row.display())?;
            }
            writeln!(out, "wrote {} files to {}", written.len(), out_dir.display())?;
        }
    }
    Ok(())
}
