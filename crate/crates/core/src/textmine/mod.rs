//! Mining of inquiry-report key phrases: normalization (tokenize, drop
//! stopwords, stem), TF-IDF weighting, dominant terms per report, and
//! n-grams that recur across reports from different years.
//!
//! Weights use length-normalized term frequency and unsmoothed inverse
//! document frequency, `tf(d,t) = count(t,d)/len(d)` and
//! `idf(t) = ln(n_docs/df(t))`, so a term present in every report scores 0.

mod porter;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use porter::stem;

use crate::dataset::InquiryRecord;
use crate::round6;

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("year {0} appears in more than one document")]
    DuplicateYear(i32),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus file name '{0}' is not YEAR.txt")]
    BadFileName(String),
}

pub type Result<T> = std::result::Result<T, TextError>;

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stoplist(HashSet<String>);

impl Stoplist {
    /// One word per line (or whitespace separated); `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        Stoplist(
            text.lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .flat_map(str::split_whitespace)
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn empty() -> Self {
        Stoplist(HashSet::new())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|source| TextError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn remove_stopwords(tokens: &[String], stoplist: &Stoplist) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t))
        .cloned()
        .collect()
}

/// The token pipeline applied to every document.
#[derive(Debug, Clone)]
pub struct Normalizer {
    pub stoplist: Stoplist,
    pub stem: bool,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self {
            stoplist: Stoplist::english(),
            stem: true,
        }
    }
}

impl Normalizer {
    pub fn normalize(&self, text: &str) -> Vec<String> {
        let tokens = remove_stopwords(&tokenize(text), &self.stoplist);
        if self.stem {
            tokens.iter().map(|t| stem(t)).collect()
        } else {
            tokens
        }
    }

    /// Maps one raw term onto its vocabulary form (None if it is a stopword).
    pub fn term(&self, raw: &str) -> Option<String> {
        self.normalize(raw).into_iter().next()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub year: i32,
    /// Source phrases joined with "; ".
    pub text: String,
    /// Normalized tokens, one list per phrase. N-grams never span phrases.
    pub segments: Vec<Vec<String>>,
}

impl Document {
    pub fn tokens(&self) -> impl Iterator<Item = &String> {
        self.segments.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Sorted, deduplicated normalized terms.
    pub vocabulary: Vec<String>,
}

impl Corpus {
    /// Builds from `(year, phrases)` pairs.
    pub fn new<I, S>(docs: I, normalizer: &Normalizer) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let mut documents = Vec::new();
        for (year, phrases) in docs {
            if !seen.insert(year) {
                return Err(TextError::DuplicateYear(year));
            }
            let raw: Vec<&str> = phrases.iter().map(AsRef::as_ref).collect();
            documents.push(Document {
                year,
                text: raw.join("; "),
                segments: raw.iter().map(|p| normalizer.normalize(p)).collect(),
            });
        }
        let vocabulary: BTreeSet<String> =
            documents.iter().flat_map(|d| d.tokens().cloned()).collect();
        Ok(Corpus {
            documents,
            vocabulary: vocabulary.into_iter().collect(),
        })
    }

    pub fn from_inquiries(records: &[InquiryRecord], normalizer: &Normalizer) -> Result<Self> {
        Self::new(
            records.iter().map(|r| (r.year, r.key_phrases.clone())),
            normalizer,
        )
    }

    /// Reads every `YEAR.txt` file in `dir`; phrases are lines or
    /// `;`-separated pieces of a line. Documents are ordered by year.
    pub fn from_dir(dir: impl AsRef<Path>, normalizer: &Normalizer) -> Result<Self> {
        let dir = dir.as_ref();
        let io = |source| TextError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut docs = BTreeMap::new();
        for entry in fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            let year: i32 = stem
                .parse()
                .map_err(|_| TextError::BadFileName(path.display().to_string()))?;
            let text = fs::read_to_string(&path).map_err(|source| TextError::Io {
                path: path.clone(),
                source,
            })?;
            let phrases: Vec<String> = text
                .lines()
                .flat_map(|l| l.split(';'))
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(String::from)
                .collect();
            docs.insert(year, phrases);
        }
        Self::new(docs, normalizer)
    }

    pub fn doc_index(&self, year: i32) -> Option<usize> {
        self.documents.iter().position(|d| d.year == year)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    pub n_docs: usize,
    pub years: Vec<i32>,
    pub terms: Vec<String>,
    pub doc_freq: BTreeMap<String, usize>,
    /// `weights[doc][term]`, term order as in `terms`.
    pub weights: Vec<Vec<f64>>,
    counts: Vec<Vec<usize>>,
}

impl TfIdfModel {
    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        let df = *self.doc_freq.get(term)?;
        Some((self.n_docs as f64 / df as f64).ln())
    }

    /// Weight of a vocabulary term in document `doc` (0 when absent).
    pub fn weight(&self, doc: usize, term: &str) -> f64 {
        self.term_index(term).map_or(0.0, |j| self.weights[doc][j])
    }

    /// `{n_docs, doc_freq:{term:int}, weights:[{year, term, weight}]}`.
    /// Lists each (document, term) pair where the term occurs, ordered by
    /// document then term, weights rounded to six decimals.
    pub fn to_json(&self) -> serde_json::Value {
        let mut weights = Vec::new();
        for (d, year) in self.years.iter().enumerate() {
            for (j, term) in self.terms.iter().enumerate() {
                if self.counts[d][j] > 0 {
                    weights.push(serde_json::json!({
                        "year": year,
                        "term": term,
                        "weight": round6(self.weights[d][j]),
                    }));
                }
            }
        }
        serde_json::json!({
            "n_docs": self.n_docs,
            "doc_freq": self.doc_freq,
            "weights": weights,
        })
    }
}

pub fn tfidf(corpus: &Corpus) -> Result<TfIdfModel> {
    if corpus.documents.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let terms = corpus.vocabulary.clone();
    let index: BTreeMap<&str, usize> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let counts: Vec<Vec<usize>> = corpus
        .documents
        .iter()
        .map(|d| {
            let mut c = vec![0; terms.len()];
            for t in d.tokens() {
                c[index[t.as_str()]] += 1;
            }
            c
        })
        .collect();
    let n_docs = corpus.documents.len();
    let df: Vec<usize> = (0..terms.len())
        .map(|j| counts.iter().filter(|c| c[j] > 0).count())
        .collect();
    let idf: Vec<f64> = df
        .iter()
        .map(|&f| (n_docs as f64 / f as f64).ln())
        .collect();
    let weights = counts
        .iter()
        .map(|c| {
            let len: usize = c.iter().sum();
            c.iter()
                .zip(&idf)
                .map(|(&k, &w)| {
                    if k == 0 {
                        0.0
                    } else {
                        k as f64 / len as f64 * w
                    }
                })
                .collect()
        })
        .collect();
    Ok(TfIdfModel {
        n_docs,
        years: corpus.documents.iter().map(|d| d.year).collect(),
        doc_freq: terms.iter().cloned().zip(df).collect(),
        terms,
        weights,
        counts,
    })
}

/// The `k` highest-weighted terms occurring in document `doc`, ties broken
/// by term in ascending order.
pub fn top_terms(model: &TfIdfModel, doc: usize, k: usize) -> Vec<(String, f64)> {
    let (Some(row), Some(counts)) = (model.weights.get(doc), model.counts.get(doc)) else {
        return Vec::new();
    };
    let mut ranked: Vec<(String, f64)> = model
        .terms
        .iter()
        .zip(row.iter().zip(counts))
        .filter(|(_, (_, &c))| c > 0)
        .map(|(t, (&w, _))| (t.clone(), w))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecurringPhrase {
    /// Normalized tokens joined by single spaces.
    pub ngram: String,
    /// Ascending.
    pub years: Vec<i32>,
}

/// N-grams of normalized tokens occurring in at least two documents, most
/// widespread first, then alphabetical.
pub fn recurring_phrases(corpus: &Corpus, n: usize) -> Vec<RecurringPhrase> {
    if n == 0 {
        return Vec::new();
    }
    let mut seen: BTreeMap<String, BTreeSet<i32>> = BTreeMap::new();
    for doc in &corpus.documents {
        for seg in &doc.segments {
            for gram in seg.windows(n) {
                seen.entry(gram.join(" ")).or_default().insert(doc.year);
            }
        }
    }
    let mut out: Vec<RecurringPhrase> = seen
        .into_iter()
        .filter(|(_, years)| years.len() >= 2)
        .map(|(ngram, years)| RecurringPhrase {
            ngram,
            years: years.into_iter().collect(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.years
            .len()
            .cmp(&a.years.len())
            .then_with(|| a.ngram.cmp(&b.ngram))
    });
    out
}
