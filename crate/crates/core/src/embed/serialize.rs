//! Model files.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! "LVEC"  u32 version
//! hyperparams: u64 dim, window, negatives, epochs; f64 lr_initial, lr_final,
//!              subsample_t; u64 min_count; u8 mode; u64 seed, workers, infer_steps
//! vocab:  u64 count, u64 total_tokens, then per token: string, u64 freq
//! matrix word_in, matrix word_out
//! u8 flags (bit 0: label vectors, bit 1: document vectors)
//! labels: u64 count, strings, matrix
//! docs:   u64 count, per doc: string id, u32 label row; matrix
//! ```
//!
//! A string is `u32 byte length` followed by UTF-8 bytes; a matrix is
//! `u64 rows, u64 cols` followed by `rows * cols` f32 values.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::model::{DocVectors, EmbeddingModel, Hyperparams, LabelVectors, Mode};
use super::store::Matrix;
use super::Vocabulary;
use crate::error::{Error, Result};
use crate::util::write_atomic;

pub const MAGIC: &[u8; 4] = b"LVEC";
pub const FORMAT_VERSION: u32 = 1;

const HAS_LABELS: u8 = 1;
const HAS_DOCS: u8 = 2;

pub fn save_model(model: &EmbeddingModel, path: &Path) -> Result<()> {
    write_atomic(path, &encode_model(model)?)
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel> {
    decode_model(&fs::read(path)?)
}

pub fn encode_model(model: &EmbeddingModel) -> Result<Vec<u8>> {
    let mut w = Vec::new();
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(FORMAT_VERSION)?;
    write_hyper(&mut w, &model.hyper)?;

    let v = &model.vocab;
    w.write_u64::<LE>(v.len() as u64)?;
    w.write_u64::<LE>(v.total_tokens())?;
    for (t, f) in v.tokens().iter().zip(v.freqs()) {
        write_str(&mut w, t)?;
        w.write_u64::<LE>(*f)?;
    }
    write_matrix(&mut w, &model.word_in)?;
    write_matrix(&mut w, &model.word_out)?;

    let mut flags = 0;
    if model.labels.is_some() {
        flags |= HAS_LABELS;
    }
    if model.docs.is_some() {
        flags |= HAS_DOCS;
    }
    w.write_u8(flags)?;
    if let Some(l) = &model.labels {
        w.write_u64::<LE>(l.names.len() as u64)?;
        for n in &l.names {
            write_str(&mut w, n)?;
        }
        write_matrix(&mut w, &l.vectors)?;
    }
    if let Some(d) = &model.docs {
        w.write_u64::<LE>(d.ids.len() as u64)?;
        for (id, label) in d.ids.iter().zip(&d.labels) {
            write_str(&mut w, id)?;
            w.write_u32::<LE>(*label)?;
        }
        write_matrix(&mut w, &d.vectors)?;
    }
    Ok(w)
}

pub fn decode_model(bytes: &[u8]) -> Result<EmbeddingModel> {
    decode(&mut Cursor::new(bytes)).map_err(|e| match e {
        Error::Io(io) if io.kind() == io::ErrorKind::UnexpectedEof => {
            Error::Format("truncated model file".into())
        }
        other => other,
    })
}

fn decode(r: &mut Cursor<&[u8]>) -> Result<EmbeddingModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let hyper = read_hyper(r)?;

    let n = read_len(r, 12)?;
    let total = r.read_u64::<LE>()?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let t = read_str(r)?;
        entries.push((t, r.read_u64::<LE>()?));
    }
    let vocab = Vocabulary::from_counts(entries, hyper.min_count);
    if vocab.total_tokens() != total {
        return Err(Error::Format("vocabulary frequency total mismatch".into()));
    }
    let word_in = read_matrix(r)?;
    let word_out = read_matrix(r)?;
    for m in [&word_in, &word_out] {
        if m.rows() != vocab.len() || m.cols() != hyper.dim {
            return Err(Error::Format("word matrix shape does not match vocabulary".into()));
        }
    }

    let flags = r.read_u8()?;
    let labels = if flags & HAS_LABELS != 0 {
        let n = read_len(r, 4)?;
        let names = (0..n).map(|_| read_str(r)).collect::<Result<Vec<_>>>()?;
        let vectors = read_matrix(r)?;
        if vectors.rows() != n || vectors.cols() != hyper.dim {
            return Err(Error::Format("label matrix shape mismatch".into()));
        }
        Some(LabelVectors { names, vectors })
    } else {
        None
    };
    let docs = if flags & HAS_DOCS != 0 {
        let n = read_len(r, 8)?;
        let mut ids = Vec::with_capacity(n);
        let mut doc_labels = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(read_str(r)?);
            doc_labels.push(r.read_u32::<LE>()?);
        }
        let vectors = read_matrix(r)?;
        if vectors.rows() != n || vectors.cols() != hyper.dim {
            return Err(Error::Format("document matrix shape mismatch".into()));
        }
        Some(DocVectors {
            ids,
            labels: doc_labels,
            vectors,
        })
    } else {
        None
    };
    if r.position() as usize != r.get_ref().len() {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    Ok(EmbeddingModel {
        vocab,
        word_in,
        word_out,
        docs,
        labels,
        hyper,
    })
}

fn write_hyper<W: Write>(w: &mut W, h: &Hyperparams) -> io::Result<()> {
    for v in [h.dim, h.window, h.negatives, h.epochs] {
        w.write_u64::<LE>(v as u64)?;
    }
    for v in [h.lr_initial, h.lr_final, h.subsample_t] {
        w.write_f64::<LE>(v)?;
    }
    w.write_u64::<LE>(h.min_count)?;
    w.write_u8(h.mode.to_code())?;
    w.write_u64::<LE>(h.seed)?;
    w.write_u64::<LE>(h.workers as u64)?;
    w.write_u64::<LE>(h.infer_steps as u64)
}

fn read_hyper(r: &mut Cursor<&[u8]>) -> Result<Hyperparams> {
    let mut u = || -> Result<usize> { Ok(r.read_u64::<LE>()? as usize) };
    let (dim, window, negatives, epochs) = (u()?, u()?, u()?, u()?);
    let lr_initial = r.read_f64::<LE>()?;
    let lr_final = r.read_f64::<LE>()?;
    let subsample_t = r.read_f64::<LE>()?;
    let min_count = r.read_u64::<LE>()?;
    let code = r.read_u8()?;
    let mode = Mode::from_code(code).ok_or_else(|| Error::Format(format!("unknown mode code {code}")))?;
    let seed = r.read_u64::<LE>()?;
    let workers = r.read_u64::<LE>()? as usize;
    let infer_steps = r.read_u64::<LE>()? as usize;
    Ok(Hyperparams {
        dim,
        window,
        negatives,
        epochs,
        lr_initial,
        lr_final,
        subsample_t,
        min_count,
        mode,
        seed,
        workers,
        infer_steps,
    })
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn remaining(r: &Cursor<&[u8]>) -> usize {
    r.get_ref().len().saturating_sub(r.position() as usize)
}

/// Read a count whose items need at least `min_item_bytes` each, rejecting
/// counts the remaining input cannot hold.
fn read_len(r: &mut Cursor<&[u8]>, min_item_bytes: usize) -> Result<usize> {
    let n = r.read_u64::<LE>()? as usize;
    if n.saturating_mul(min_item_bytes) > remaining(r) {
        return Err(Error::Format("truncated model file".into()));
    }
    Ok(n)
}

fn read_str(r: &mut Cursor<&[u8]>) -> Result<String> {
    let len = r.read_u32::<LE>()? as usize;
    if len > remaining(r) {
        return Err(Error::Format("truncated model file".into()));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("token is not valid UTF-8".into()))
}

fn write_matrix<W: Write>(w: &mut W, m: &Matrix) -> io::Result<()> {
    w.write_u64::<LE>(m.rows() as u64)?;
    w.write_u64::<LE>(m.cols() as u64)?;
    for v in m.as_slice() {
        w.write_f32::<LE>(*v)?;
    }
    Ok(())
}

fn read_matrix(r: &mut Cursor<&[u8]>) -> Result<Matrix> {
    let rows = r.read_u64::<LE>()? as usize;
    let cols = r.read_u64::<LE>()? as usize;
    let n = rows
        .checked_mul(cols)
        .filter(|n| n.saturating_mul(4) <= remaining(r))
        .ok_or_else(|| Error::Format("truncated model file".into()))?;
    let mut data = vec![0f32; n];
    r.read_f32_into::<LE>(&mut data)?;
    Ok(Matrix::from_vec(rows, cols, data))
}

/// Word vectors detached from a training model, e.g. read from a text export.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
}

impl WordVectors {
    pub fn new(tokens: Vec<String>, vectors: Matrix) -> Result<Self> {
        if tokens.len() != vectors.rows() {
            return Err(Error::invalid("token count does not match vector rows"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate token `{t}`")));
            }
        }
        Ok(WordVectors {
            tokens,
            index,
            vectors,
        })
    }

    pub fn from_model(model: &EmbeddingModel) -> Self {
        WordVectors::new(model.vocab.tokens().to_vec(), model.word_in.clone())
            .expect("vocabulary tokens are unique")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.get(token).map(|i| self.vectors.row(i))
    }

    /// Copy without the given token.
    pub fn without(&self, token: &str) -> WordVectors {
        match self.get(token) {
            None => self.clone(),
            Some(i) => {
                let mut tokens = self.tokens.clone();
                tokens.remove(i);
                WordVectors::new(tokens, self.vectors.without_rows(&[i])).unwrap()
            }
        }
    }
}

/// Classic word2vec text format: a `V dim` header, then one `token v1 .. vdim`
/// line per word. Floats use the shortest representation that round-trips.
pub fn write_word2vec_text<W: Write>(vectors: &WordVectors, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", vectors.len(), vectors.dim())?;
    for (t, row) in vectors.tokens().iter().zip(vectors.vectors().iter_rows()) {
        w.write_all(t.as_bytes())?;
        for v in row {
            write!(w, " {v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_word2vec_text<R: BufRead>(r: R) -> Result<WordVectors> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header".into(),
    })??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse {
        line: 1,
        message: format!("expected `V dim` header, got `{header}`"),
    };
    if parts.len() != 2 {
        return Err(bad_header());
    }
    let v: usize = parts[0].parse().map_err(|_| bad_header())?;
    let dim: usize = parts[1].parse().map_err(|_| bad_header())?;

    let mut tokens = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap().to_string();
        let before = data.len();
        for f in fields {
            data.push(f.parse::<f32>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad float `{f}`"),
            })?);
        }
        if data.len() - before != dim {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {dim} values, got {}", data.len() - before),
            });
        }
        tokens.push(token);
    }
    if tokens.len() != v {
        return Err(Error::Parse {
            line: 1,
            message: format!("header declares {v} words, file has {}", tokens.len()),
        });
    }
    WordVectors::new(tokens, Matrix::from_vec(v, dim, data))
}
