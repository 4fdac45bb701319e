use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{Corpus, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guess from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::invalid(format!("unknown corpus format `{other}`"))),
        }
    }
}

#[derive(Debug, Deserialize)]
struct Record {
    #[serde(default)]
    id: Option<String>,
    text: Option<String>,
    #[serde(default)]
    genre: Option<String>,
    #[serde(default)]
    rating: Option<i64>,
}

/// Read a corpus file. Documents are returned untokenized.
pub fn ingest(path: &Path, format: Format) -> Result<Corpus> {
    let file = File::open(path)?;
    let provenance = path.display().to_string();
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file), provenance),
        Format::Csv => read_csv(file, provenance),
    }
}

/// Read any supported corpus file and tokenize it.
pub fn read_corpus(path: &Path) -> Result<Corpus> {
    Ok(ingest(path, Format::from_path(path))?.tokenized())
}

fn read_jsonl<R: BufRead>(reader: R, provenance: String) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        docs.push(to_document(record, docs.len(), line_no)?);
    }
    finish(docs, provenance)
}

fn read_csv<R: Read>(reader: R, provenance: String) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut docs = Vec::new();
    for (i, row) in rdr.deserialize::<Record>().enumerate() {
        // Header occupies line 1.
        let fallback_line = i + 2;
        let record = row.map_err(|e| Error::Parse {
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(fallback_line),
            message: e.to_string(),
        })?;
        docs.push(to_document(record, docs.len(), fallback_line)?);
    }
    finish(docs, provenance)
}

fn to_document(record: Record, index: usize, line: usize) -> Result<Document> {
    let text = record.text.ok_or_else(|| Error::Parse {
        line,
        message: "missing required field `text`".into(),
    })?;
    let rating = match record.rating {
        None => None,
        Some(r @ 1..=5) => Some(r as u8),
        Some(r) => {
            return Err(Error::Parse {
                line,
                message: format!("rating {r} outside 1-5"),
            })
        }
    };
    let id = match record.id {
        Some(id) if !id.is_empty() => id,
        _ => format!("doc{index}"),
    };
    Ok(Document {
        id,
        text,
        tokens: Vec::new(),
        label: record.genre.filter(|g| !g.is_empty()),
        rating,
    })
}

fn finish(docs: Vec<Document>, provenance: String) -> Result<Corpus> {
    Corpus::new(docs, provenance)
}

/// Write a corpus as JSONL with the ingest field names.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for doc in corpus.documents() {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn jsonl(s: &str) -> Result<Corpus> {
        read_jsonl(Cursor::new(s), "mem".into())
    }

    #[test]
    fn three_line_jsonl() {
        let c = jsonl(
            r#"{"id":"a","text":"one"}
{"id":"b","text":"two","genre":"rap"}
{"id":"c","text":"three","rating":4}
"#,
        )
        .unwrap();
        assert_eq!(c.len(), 3);
        let ids: Vec<_> = c.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(c.documents()[0].label, None);
        assert_eq!(c.documents()[1].label.as_deref(), Some("rap"));
        assert_eq!(c.documents()[2].rating, Some(4));
    }

    #[test]
    fn missing_text_names_line() {
        let err = jsonl("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\"}\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_json_names_line() {
        let err = jsonl("{\"text\":\"x\"}\n\n{oops\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = jsonl("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn autogenerated_ids() {
        let c = jsonl("{\"text\":\"x\"}\n{\"text\":\"y\"}\n").unwrap();
        assert_eq!(c.documents()[0].id, "doc0");
        assert_eq!(c.documents()[1].id, "doc1");
    }

    #[test]
    fn out_of_range_rating() {
        let err = jsonl("{\"text\":\"x\",\"rating\":0}\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn csv_populates_labels_and_ratings() {
        let data = "id,text,genre,rating\n\
                    s1,\"Hello, \"\"world\"\"\",country,5\n\
                    s2,plain words,metal,\n\
                    s3,\"multi\nline\",,2\n";
        let c = read_csv(Cursor::new(data), "mem".into()).unwrap();
        assert_eq!(c.len(), 3);
        let d = &c.documents()[0];
        assert_eq!(d.text, "Hello, \"world\"");
        assert_eq!(d.label.as_deref(), Some("country"));
        assert_eq!(d.rating, Some(5));
        assert_eq!(c.documents()[1].rating, None);
        assert_eq!(c.documents()[2].label, None);
        assert_eq!(c.documents()[2].text, "multi\nline");
        assert_eq!(c.label_set().len(), 2);
    }

    #[test]
    fn csv_missing_text_column() {
        let err = read_csv(Cursor::new("id,genre\na,rap\n"), "mem".into()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn jsonl_write_read() {
        let c = jsonl("{\"id\":\"a\",\"text\":\"x y\",\"genre\":\"g\",\"rating\":3}\n{\"id\":\"b\",\"text\":\"z\"}\n")
            .unwrap();
        let mut buf = Vec::new();
        write_jsonl(&c, &mut buf).unwrap();
        let back = jsonl(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.documents(), c.documents());
    }
}
