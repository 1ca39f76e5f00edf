//! C ABI for retraction-impact.
//!
//! Corpora are opaque `RiCorpus` handles. Every fallible call returns an
//! `RiStatus`; on failure `ri_last_error()` describes what went wrong on the
//! calling thread. Strings handed out by the library are owned by the caller
//! and released with `ri_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use retraction_impact::annotation::fleiss_kappa_matrix;
use retraction_impact::cohort::{write_cohort_csv, CohortBuilder, CohortConfig, TreatmentKind};
use retraction_impact::corpus::{ingest_corpus, parse_jsonl, Corpus, IngestOptions, InputFormat};
use retraction_impact::impact::{Boundary, ImpactConfig};
use retraction_impact::report::{build_report, describe_tables, ReportConfig, ReportInputs};
use retraction_impact::stats::{compare_cohorts, granger_test, mann_whitney_u, Alternative, Metric, MwMode};
use retraction_impact::synth::{generate_corpus, SynthConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// Input could not be read or written.
    Io = 4,
    /// Input was read but rejected by an analysis step.
    Data = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiAlternative {
    TwoSided = 0,
    Less = 1,
    Greater = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiMetric {
    PostImpact = 0,
    ChangeRatio = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RiMannWhitney {
    pub u_statistic: f64,
    pub p_value: f64,
    pub median_treatment: f64,
    pub median_control: f64,
    /// 1 when the exact distribution was used.
    pub exact: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RiGranger {
    pub f_statistic: f64,
    pub p_value: f64,
    pub df_numerator: usize,
    pub df_denominator: usize,
    pub degenerate_regressor: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RiComparison {
    pub treatments: usize,
    pub pairs_used: usize,
    pub pairs_excluded: usize,
    pub median_treatment: f64,
    pub median_control: f64,
    pub p_value: f64,
}

/// Opaque corpus handle.
pub struct RiCorpus {
    corpus: Corpus,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RiStatus, String);

impl From<retraction_impact::Error> for Failure {
    fn from(e: retraction_impact::Error) -> Self {
        let status = match &e {
            retraction_impact::Error::Io(_) => RiStatus::Io,
            _ => RiStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => RiStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("panic inside retraction-impact");
            RiStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(RiStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(RiStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn optional_path(p: *const c_char, what: &str) -> Result<Option<PathBuf>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(|s| Some(PathBuf::from(s)))
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(RiStatus::NullArgument, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(RiStatus::NullArgument, format!("{what} is null")))
}

unsafe fn handle<'a>(p: *const RiCorpus) -> Result<&'a Corpus, Failure> {
    p.as_ref().map(|h| &h.corpus).ok_or_else(|| Failure(RiStatus::NullArgument, "corpus is null".into()))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(RiStatus::Data, "output contains a NUL byte".into()))
}

fn data<E: std::fmt::Display>(module: &str) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure(RiStatus::Data, format!("{module}: {e}"))
}

fn kind(name: &str) -> Result<TreatmentKind, Failure> {
    name.parse().map_err(|e: retraction_impact::cohort::CohortError| Failure(RiStatus::InvalidArgument, e.to_string()))
}

fn alternative(a: RiAlternative) -> Alternative {
    match a {
        RiAlternative::TwoSided => Alternative::TwoSided,
        RiAlternative::Less => Alternative::Less,
        RiAlternative::Greater => Alternative::Greater,
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ri_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ri_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ri_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a JSONL or CSV corpus file; `format` is "jsonl", "csv" or null to
/// guess from the extension.
///
/// # Safety
/// `path` and `format` must be NUL-terminated strings or null; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ri_corpus_load(
    path: *const c_char,
    format: *const c_char,
    out_corpus: *mut *mut RiCorpus,
) -> RiStatus {
    guard(|| {
        let slot = out(out_corpus, "out_corpus")?;
        let path = PathBuf::from(text(path, "path")?);
        let format = match optional_path(format, "format")? {
            Some(f) => match f.to_str() {
                Some("jsonl") => InputFormat::Jsonl,
                Some("csv") => InputFormat::Csv,
                _ => return Err(Failure(RiStatus::InvalidArgument, format!("unknown format {}", f.display()))),
            },
            None => InputFormat::from_path(&path),
        };
        let corpus = ingest_corpus(&path, format, &IngestOptions::default())
            .map_err(|e| Failure::from(retraction_impact::Error::from(e)))?;
        *slot = Box::into_raw(Box::new(RiCorpus { corpus }));
        Ok(())
    })
}

/// Builds a corpus from JSONL text held in memory.
///
/// # Safety
/// `jsonl` must be a NUL-terminated string; `out_corpus` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ri_corpus_from_jsonl(jsonl: *const c_char, out_corpus: *mut *mut RiCorpus) -> RiStatus {
    guard(|| {
        let slot = out(out_corpus, "out_corpus")?;
        let records = parse_jsonl(text(jsonl, "jsonl")?).map_err(data("corpus"))?;
        let corpus = Corpus::from_records(records, &IngestOptions::default()).map_err(data("corpus"))?;
        *slot = Box::into_raw(Box::new(RiCorpus { corpus }));
        Ok(())
    })
}

/// # Safety
/// `corpus` must come from `ri_corpus_load` or `ri_corpus_from_jsonl` and
/// not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ri_corpus_free(corpus: *mut RiCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of papers; 0 for a null handle.
///
/// # Safety
/// `corpus` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ri_corpus_len(corpus: *const RiCorpus) -> usize {
    corpus.as_ref().map_or(0, |h| h.corpus.len())
}

/// Number of retracted papers; 0 for a null handle.
///
/// # Safety
/// `corpus` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ri_corpus_retracted(corpus: *const RiCorpus) -> usize {
    corpus.as_ref().map_or(0, |h| h.corpus.retracted_count())
}

/// Descriptive tables (rates, delays, ESI rates, citation distributions) as
/// a JSON string.
///
/// # Safety
/// `corpus` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ri_describe_json(corpus: *const RiCorpus, out_json: *mut *mut c_char) -> RiStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        let tables = describe_tables(handle(corpus)?);
        *slot = owned_string(serde_json::to_string(&tables).map_err(data("report"))?)?;
        Ok(())
    })
}

fn cohort_config(horizon: i32, yr_in_pre: i32) -> CohortConfig {
    CohortConfig {
        impact: ImpactConfig { horizon, boundary: Boundary::from_yr_in_pre(yr_in_pre != 0) },
        ..CohortConfig::default()
    }
}

/// Matched cohort of one kind ("P_t", "A_t", "I_t", "P_citing", "P_coref",
/// "A_coaut") as CSV text.
///
/// # Safety
/// `corpus` must be a live handle, `kind` a NUL-terminated string and
/// `out_csv` writable.
#[no_mangle]
pub unsafe extern "C" fn ri_cohort_csv(
    corpus: *const RiCorpus,
    kind_name: *const c_char,
    horizon: i32,
    yr_in_pre: i32,
    out_csv: *mut *mut c_char,
) -> RiStatus {
    guard(|| {
        let slot = out(out_csv, "out_csv")?;
        let kind = kind(text(kind_name, "kind")?)?;
        let builder = CohortBuilder::new(handle(corpus)?, cohort_config(horizon, yr_in_pre));
        let mut buf = Vec::new();
        write_cohort_csv(&builder.run(kind), &mut buf).map_err(data("cohort"))?;
        *slot = owned_string(String::from_utf8(buf).map_err(data("cohort"))?)?;
        Ok(())
    })
}

/// Treatment versus control comparison for one kind.
///
/// # Safety
/// `corpus` must be a live handle, `kind` a NUL-terminated string and
/// `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn ri_compare(
    corpus: *const RiCorpus,
    kind_name: *const c_char,
    metric: RiMetric,
    alt: RiAlternative,
    horizon: i32,
    yr_in_pre: i32,
    out_result: *mut RiComparison,
) -> RiStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let kind = kind(text(kind_name, "kind")?)?;
        let builder = CohortBuilder::new(handle(corpus)?, cohort_config(horizon, yr_in_pre));
        let run = builder.run(kind);
        let metric = match metric {
            RiMetric::PostImpact => Metric::PostImpact,
            RiMetric::ChangeRatio => Metric::ChangeRatio,
        };
        let r = compare_cohorts(&run.pairs, metric, alternative(alt)).map_err(data("stats"))?;
        *slot = RiComparison {
            treatments: builder.treatments(kind).len(),
            pairs_used: r.pairs_used,
            pairs_excluded: r.pairs_excluded,
            median_treatment: r.result.median_treatment,
            median_control: r.result.median_control,
            p_value: r.result.p_value,
        };
        Ok(())
    })
}

/// Mann-Whitney U test of `a` against `b`.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` doubles; `out_result` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ri_mann_whitney(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    alt: RiAlternative,
    out_result: *mut RiMannWhitney,
) -> RiStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let r = mann_whitney_u(slice(a, na, "a")?, slice(b, nb, "b")?, alternative(alt)).map_err(data("stats"))?;
        *slot = RiMannWhitney {
            u_statistic: r.u_statistic,
            p_value: r.p_value,
            median_treatment: r.median_treatment,
            median_control: r.median_control,
            exact: i32::from(r.mode == MwMode::Exact),
        };
        Ok(())
    })
}

/// Does `x` Granger-cause `y` at `lags`?
///
/// # Safety
/// `x` and `y` must each point to `len` doubles; `out_result` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ri_granger(
    x: *const f64,
    y: *const f64,
    len: usize,
    lags: usize,
    out_result: *mut RiGranger,
) -> RiStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let r = granger_test(slice(x, len, "x")?, slice(y, len, "y")?, lags).map_err(data("stats"))?;
        *slot = RiGranger {
            f_statistic: r.f_statistic,
            p_value: r.p_value,
            df_numerator: r.df.0,
            df_denominator: r.df.1,
            degenerate_regressor: i32::from(r.degenerate_regressor),
        };
        Ok(())
    })
}

/// Fleiss' kappa of a row-major `subjects` x `categories` count matrix.
///
/// # Safety
/// `counts` must point to `subjects * categories` values; `out_kappa` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ri_fleiss_kappa(
    counts: *const u32,
    subjects: usize,
    categories: usize,
    out_kappa: *mut f64,
) -> RiStatus {
    guard(|| {
        let slot = out(out_kappa, "out_kappa")?;
        if categories == 0 {
            return Err(Failure(RiStatus::InvalidArgument, "categories must be positive".into()));
        }
        let cells = subjects
            .checked_mul(categories)
            .ok_or_else(|| Failure(RiStatus::InvalidArgument, "matrix too large".into()))?;
        let rows: Vec<Vec<u32>> = slice(counts, cells, "counts")?.chunks(categories).map(<[u32]>::to_vec).collect();
        *slot = fleiss_kappa_matrix(&rows).map_err(data("annotation"))?;
        Ok(())
    })
}

/// Generates a synthetic corpus with the default configuration and `seed`
/// and writes it with its sidecar files. `config_json` may be null or a JSON
/// object overriding configuration fields.
///
/// # Safety
/// `out_path` must be a NUL-terminated string; `config_json` a
/// NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn ri_synth_write(seed: u64, config_json: *const c_char, out_path: *const c_char) -> RiStatus {
    guard(|| {
        let path = PathBuf::from(text(out_path, "out_path")?);
        let mut config: SynthConfig = if config_json.is_null() {
            SynthConfig::default()
        } else {
            serde_json::from_str(text(config_json, "config_json")?)
                .map_err(|e| Failure(RiStatus::InvalidArgument, format!("synth: {e}")))?
        };
        config.seed = seed;
        let output = generate_corpus(&config).map_err(|e| Failure::from(retraction_impact::Error::from(e)))?;
        output.write(&path).map_err(|e| Failure::from(retraction_impact::Error::from(e)))?;
        Ok(())
    })
}

/// Runs the full pipeline and writes the report directory. Optional inputs
/// may be null. `timestamp` 0 leaves the timestamp out of the manifest.
///
/// # Safety
/// Every non-null pointer must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ri_report_write(
    corpus_path: *const c_char,
    out_dir: *const c_char,
    annotations: *const c_char,
    dictionary: *const c_char,
    media_list: *const c_char,
    timestamp: i32,
) -> RiStatus {
    guard(|| {
        let inputs = ReportInputs {
            corpus: PathBuf::from(text(corpus_path, "corpus_path")?),
            format: None,
            annotations: optional_path(annotations, "annotations")?,
            dictionary: optional_path(dictionary, "dictionary")?,
            media_list: optional_path(media_list, "media_list")?,
            seeds: Vec::new(),
        };
        let dir = PathBuf::from(text(out_dir, "out_dir")?);
        let report = build_report(&inputs, &ReportConfig::default(), timestamp != 0)?;
        report.write(&dir)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let p = ri_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn mann_whitney_through_the_abi() {
        let (a, b) = ([1.0, 2.0], [3.0, 4.0]);
        let mut r = RiMannWhitney::default();
        let status = unsafe { ri_mann_whitney(a.as_ptr(), 2, b.as_ptr(), 2, RiAlternative::TwoSided, &mut r) };
        assert_eq!(status, RiStatus::Ok);
        assert_eq!(r.exact, 1);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-15);
        assert!(ri_last_error().is_null());
    }

    #[test]
    fn null_and_empty_inputs_report_errors() {
        let mut r = RiMannWhitney::default();
        let b = [1.0];
        let status = unsafe { ri_mann_whitney(ptr::null(), 3, b.as_ptr(), 1, RiAlternative::Less, &mut r) };
        assert_eq!(status, RiStatus::NullArgument);
        assert!(last_error().contains("a is null"));
        let status = unsafe { ri_mann_whitney(ptr::null(), 0, b.as_ptr(), 1, RiAlternative::Less, &mut r) };
        assert_eq!(status, RiStatus::Data);
        assert!(last_error().starts_with("stats:"));
    }

    #[test]
    fn kappa_of_full_disagreement() {
        let counts = [1u32, 1, 1, 1];
        let mut k = 0.0;
        assert_eq!(unsafe { ri_fleiss_kappa(counts.as_ptr(), 2, 2, &mut k) }, RiStatus::Ok);
        assert_eq!(k, -1.0);
    }

    #[test]
    fn granger_rejects_short_series() {
        let x = [0.0; 5];
        let mut g = RiGranger::default();
        assert_eq!(unsafe { ri_granger(x.as_ptr(), x.as_ptr(), 5, 3, &mut g) }, RiStatus::Data);
        assert!(last_error().contains("at least"));
    }

    #[test]
    fn corpus_handle_round_trip() {
        let jsonl = CString::new(concat!(
            r#"{"paper_id":"a","title":"A","pub_year":2000,"journal":"J","esi_category":"chemistry"}"#,
            "\n",
            r#"{"paper_id":"b","title":"B (Retracted Article. See vol. 1, pg. 2, 2003)","pub_year":2001,"journal":"J","esi_category":"chemistry","references":["a"]}"#,
            "\n"
        ))
        .unwrap();
        let mut handle = ptr::null_mut();
        assert_eq!(unsafe { ri_corpus_from_jsonl(jsonl.as_ptr(), &mut handle) }, RiStatus::Ok);
        assert_eq!(unsafe { ri_corpus_len(handle) }, 2);
        assert_eq!(unsafe { ri_corpus_retracted(handle) }, 1);

        let mut json = ptr::null_mut();
        assert_eq!(unsafe { ri_describe_json(handle, &mut json) }, RiStatus::Ok);
        let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
        assert!(text.contains("\"retracted\":1"));
        unsafe { ri_string_free(json) };

        let bad_kind = CString::new("X_t").unwrap();
        let mut csv = ptr::null_mut();
        let status = unsafe { ri_cohort_csv(handle, bad_kind.as_ptr(), 2014, 1, &mut csv) };
        assert_eq!(status, RiStatus::InvalidArgument);
        assert!(csv.is_null());
        unsafe { ri_corpus_free(handle) };
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let path = CString::new("/nonexistent/corpus.jsonl").unwrap();
        let mut handle = ptr::null_mut();
        let status = unsafe { ri_corpus_load(path.as_ptr(), ptr::null(), &mut handle) };
        assert!(matches!(status, RiStatus::Io | RiStatus::Data));
        assert!(handle.is_null());
        assert!(!last_error().is_empty());
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(ri_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
