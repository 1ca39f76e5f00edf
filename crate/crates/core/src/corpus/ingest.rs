use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{
    Corpus, CorpusError, EsiCategory, IngestOptions, PaperRecord, Requester, RetractionNotice,
};
use crate::annotation::ReasonCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum InputFormat {
    #[default]
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guesses from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

pub fn ingest_corpus(
    path: &Path,
    format: InputFormat,
    options: &IngestOptions,
) -> Result<Corpus, CorpusError> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))?;
    let records = match format {
        InputFormat::Jsonl => parse_jsonl(&text)?,
        InputFormat::Csv => parse_csv(&text)?,
    };
    Corpus::from_records(records, options)
}

/// One record per non-blank line.
pub fn parse_jsonl(text: &str) -> Result<Vec<PaperRecord>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| CorpusError::Malformed { line: i + 1, message: e.to_string() })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    paper_id: String,
    title: String,
    pub_year: i32,
    #[serde(default)]
    pub_month: Option<u8>,
    journal: String,
    esi_category: String,
    #[serde(default)]
    author_names: String,
    #[serde(default)]
    institution_names: String,
    #[serde(default)]
    references: String,
    #[serde(default)]
    retraction_year: Option<i32>,
    #[serde(default)]
    reason: Option<String>,
    #[serde(default)]
    requester: Option<String>,
}

fn split_list(field: &str) -> Vec<String> {
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// CSV with a header row; list columns use `;` separators.
pub fn parse_csv(text: &str) -> Result<Vec<PaperRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            CorpusError::Malformed { line, message: e.to_string() }
        })?;
        let line = out.len() + 2;
        let malformed = |message: String| CorpusError::Malformed { line, message };
        let esi_category =
            EsiCategory::from_str(&row.esi_category).map_err(|e| malformed(e.to_string()))?;
        let reason = row.reason.as_deref().filter(|r| !r.trim().is_empty());
        let requester = row.requester.as_deref().filter(|r| !r.trim().is_empty());
        let retraction = match row.retraction_year {
            Some(retraction_year) => Some(RetractionNotice {
                retraction_year,
                reason: match reason {
                    Some(r) if r.trim().eq_ignore_ascii_case("unknown") => None,
                    Some(r) => Some(ReasonCode::from_str(r).map_err(|e| malformed(e.to_string()))?),
                    None => None,
                },
                requester: match requester {
                    Some(r) => Requester::from_str(r).map_err(|e| malformed(e.to_string()))?,
                    None => Requester::NotFound,
                },
            }),
            None => None,
        };
        out.push(PaperRecord {
            paper_id: row.paper_id,
            title: row.title,
            pub_year: row.pub_year,
            pub_month: row.pub_month,
            journal: row.journal,
            esi_category,
            author_names: split_list(&row.author_names),
            institution_names: split_list(&row.institution_names),
            references: split_list(&row.references),
            retraction,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSONL: &str = r#"{"paper_id":"p1","title":"Stem cells","pub_year":2004,"pub_month":3,"journal":"Science","esi_category":"molecular_biology_genetics","author_names":["Hwang, Woo Suk"],"institution_names":["Seoul Natl Univ"],"references":["x9"],"retraction":{"retraction_year":2006,"reason":"falsification_fabrication","requester":"editor"}}
{"paper_id":"p2","title":"Follow up","pub_year":2005,"journal":"Nature","esi_category":"clinical_medicine","references":["p1"]}

{"paper_id":"p3","title":"Later","pub_year":2006,"journal":"Nature","esi_category":"clinical_medicine","references":["p1","p2"]}
"#;

    #[test]
    fn jsonl_fixture_indexes_three_papers() {
        let corpus =
            Corpus::from_records(parse_jsonl(JSONL).unwrap(), &IngestOptions::default()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.cited_by("p1"), ["p2", "p3"]);
        assert_eq!(corpus.cited_by("p2"), ["p3"]);
        assert_eq!(corpus.paper("p1").unwrap().journal, "science");
        assert_eq!(corpus.papers_by_author("hwang woo suk"), ["p1"]);
    }

    #[test]
    fn dangling_reference_is_kept_but_not_indexed() {
        let corpus =
            Corpus::from_records(parse_jsonl(JSONL).unwrap(), &IngestOptions::default()).unwrap();
        // Hand-built adjacency of the fixture's in-corpus edges.
        let expected: Vec<(&str, &str)> = vec![("p2", "p1"), ("p3", "p1"), ("p3", "p2")];
        let mut actual = Vec::new();
        for p in corpus.papers() {
            for citer in corpus.cited_by(&p.paper_id) {
                actual.push((citer.as_str(), p.paper_id.as_str()));
            }
        }
        actual.sort();
        assert_eq!(actual, expected);
        assert_eq!(corpus.paper("p1").unwrap().references, ["x9"]);
        assert!(corpus.cited_by("x9").is_empty());
    }

    #[test]
    fn malformed_jsonl_reports_line() {
        let text = "{\"paper_id\":\"a\",\"title\":\"t\",\"pub_year\":2000,\"journal\":\"j\",\"esi_category\":\"physics\"}\n\n{not json}\n";
        match parse_jsonl(text).unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_of_lists_and_notice() {
        let text = "paper_id,title,pub_year,pub_month,journal,esi_category,author_names,institution_names,references,retraction_year,reason,requester\n\
                    a,First,2001,,J,physics,Doe J;Roe K,MIT,,,,\n\
                    b,Second,2002,4,J,physics,Roe K,MIT;Harvard,a;ext1,2004,plagiarism,author\n";
        let records = parse_csv(text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].author_names, ["Doe J", "Roe K"]);
        assert_eq!(records[1].references, ["a", "ext1"]);
        assert_eq!(records[1].pub_month, Some(4));
        let notice = records[1].retraction.as_ref().unwrap();
        assert_eq!(notice.reason, Some(ReasonCode::Plagiarism));
        assert_eq!(notice.requester, Requester::Author);
    }

    #[test]
    fn csv_bad_category_reports_line() {
        let text = "paper_id,title,pub_year,pub_month,journal,esi_category,author_names,institution_names,references,retraction_year,reason,requester\n\
                    a,First,2001,,J,physics,,,,,,\n\
                    b,Second,2002,,J,alchemy,,,,,,\n";
        match parse_csv(text).unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
