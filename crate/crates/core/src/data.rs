//! Learning-to-rank datasets: LETOR/SVMlight parsing and writing, query-level
//! normalization, uniform query sampling and a synthetic generator.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{dot, DocMatrix, LinearRanker};
use crate::rng::{derived, seeded};

pub const MAX_GRADE: u8 = 4;

/// One query with its candidate documents and their relevance grades.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub qid: String,
    pub docs: DocMatrix,
    pub relevance: Vec<u8>,
}

impl Query {
    pub fn new(qid: impl Into<String>, docs: DocMatrix, relevance: Vec<u8>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if docs.len() != relevance.len() {
            return Err(Error::InvalidArgument(format!(
                "{} documents but {} relevance grades",
                docs.len(),
                relevance.len()
            )));
        }
        if let Some(&g) = relevance.iter().find(|&&g| g > MAX_GRADE) {
            return Err(Error::GradeOutOfRange(g as i64));
        }
        Ok(Query {
            qid: qid.into(),
            docs,
            relevance,
        })
    }

    pub fn len(&self) -> usize {
        self.relevance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevance.is_empty()
    }

    fn padded(self, dim: usize) -> Query {
        if self.docs.dim() == dim {
            return self;
        }
        let old = self.docs.dim();
        let mut values = Vec::with_capacity(self.len() * dim);
        for row in self.docs.rows() {
            values.extend_from_slice(row);
            values.extend(std::iter::repeat_n(0.0, dim - old));
        }
        Query {
            docs: DocMatrix::new(dim, values).expect("padding keeps values finite"),
            ..self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub train: Vec<Query>,
    pub test: Vec<Query>,
    pub feature_dim: usize,
}

impl Dataset {
    /// Builds a dataset, zero-padding queries to the widest feature
    /// dimension found in either split.
    pub fn new(train: Vec<Query>, test: Vec<Query>) -> Result<Self> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::InvalidArgument("train and test splits must be non-empty".into()));
        }
        let feature_dim = train
            .iter()
            .chain(&test)
            .map(|q| q.docs.dim())
            .max()
            .unwrap_or(1);
        Ok(Dataset {
            train: train.into_iter().map(|q| q.padded(feature_dim)).collect(),
            test: test.into_iter().map(|q| q.padded(feature_dim)).collect(),
            feature_dim,
        })
    }

    /// Loads separate train and test files.
    pub fn from_letor_files(train: &Path, test: &Path, normalize: bool) -> Result<Self> {
        let (mut train_q, _) = parse_letor(train)?;
        let (mut test_q, _) = parse_letor(test)?;
        if normalize {
            train_q = normalize_query_level(train_q);
            test_q = normalize_query_level(test_q);
        }
        Dataset::new(train_q, test_q)
    }
}

/// Parses a LETOR/SVMlight file. Returns the queries in order of first
/// appearance and the inferred feature dimension (largest feature id).
pub fn parse_letor(path: &Path) -> Result<(Vec<Query>, usize)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = parse_letor_str(&text)?;
    if parsed.0.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    Ok(parsed)
}

struct SparseDoc {
    grade: u8,
    features: Vec<(usize, f64)>,
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<(String, SparseDoc)>> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let mut tokens = content.split_whitespace();
    let grade_tok = tokens.next().expect("non-empty line has a token");
    let grade: f64 = grade_tok
        .parse()
        .map_err(|_| err(format!("invalid relevance grade {grade_tok:?}")))?;
    if grade.fract() != 0.0 {
        return Err(err(format!("relevance grade {grade_tok:?} is not an integer")));
    }
    if !(0.0..=MAX_GRADE as f64).contains(&grade) {
        return Err(err(format!("relevance grade {grade} is outside [0, 4]")));
    }
    let qid = tokens
        .next()
        .and_then(|t| t.strip_prefix("qid:"))
        .filter(|q| !q.is_empty())
        .ok_or_else(|| err("expected qid:<id> after the grade".into()))?;
    let mut features = Vec::new();
    for tok in tokens {
        let (fid, val) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("expected <fid>:<value>, got {tok:?}")))?;
        let fid: usize = fid
            .parse()
            .ok()
            .filter(|&f| f >= 1)
            .ok_or_else(|| err(format!("invalid feature id {fid:?}")))?;
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("invalid feature value {val:?}")))?;
        features.push((fid, val));
    }
    Ok(Some((
        qid.to_string(),
        SparseDoc {
            grade: grade as u8,
            features,
        },
    )))
}

pub fn parse_letor_str(text: &str) -> Result<(Vec<Query>, usize)> {
    let mut order: Vec<(String, Vec<SparseDoc>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut dim = 0;
    for (i, line) in text.lines().enumerate() {
        let Some((qid, doc)) = parse_line(line, i + 1)? else {
            continue;
        };
        dim = doc.features.iter().map(|&(f, _)| f).fold(dim, usize::max);
        let slot = *index.entry(qid.clone()).or_insert_with(|| {
            order.push((qid, Vec::new()));
            order.len() - 1
        });
        order[slot].1.push(doc);
    }
    let dim = dim.max(1);
    let queries = order
        .into_iter()
        .map(|(qid, docs)| {
            let mut values = vec![0.0; docs.len() * dim];
            let mut relevance = Vec::with_capacity(docs.len());
            for (row, doc) in docs.iter().enumerate() {
                for &(fid, v) in &doc.features {
                    values[row * dim + fid - 1] = v;
                }
                relevance.push(doc.grade);
            }
            Query::new(qid, DocMatrix::new(dim, values)?, relevance)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((queries, dim))
}

/// Writes queries in LETOR format with every feature listed densely.
pub fn write_letor<W: Write>(queries: &[Query], mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    for q in queries {
        for (row, &grade) in q.docs.rows().zip(&q.relevance) {
            line.clear();
            write!(line, "{grade} qid:{}", q.qid).unwrap();
            for (f, v) in row.iter().enumerate() {
                write!(line, " {}:{v:?}", f + 1).unwrap();
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Min-max scales every feature to [0, 1] within each query. A feature that
/// is constant within a query becomes 0.
pub fn normalize_query_level(queries: Vec<Query>) -> Vec<Query> {
    queries
        .into_iter()
        .map(|mut q| {
            let dim = q.docs.dim();
            for f in 0..dim {
                let (lo, hi) = q
                    .docs
                    .rows()
                    .map(|r| r[f])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                let range = hi - lo;
                for i in 0..q.len() {
                    let v = &mut q.docs.doc_mut(i)[f];
                    *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
                }
            }
            q
        })
        .collect()
}

/// A training query drawn uniformly at random.
pub fn sample_query<'a, R: Rng + ?Sized>(dataset: &'a Dataset, rng: &mut R) -> Result<&'a Query> {
    if dataset.train.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    Ok(&dataset.train[rng.random_range(0..dataset.train.len())])
}

/// Generated dataset together with the weights that produced its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub weights: LinearRanker,
}

/// Cumulative fractions at which the generator's latent score is cut into
/// grades 0..=4. Most documents end up non-relevant, as in web search data.
const GRADE_QUANTILES: [f64; 4] = [0.5, 0.8, 0.93, 0.98];
const FEATURE_NOISE: f64 = 1.0;
const QUERY_SHIFT: f64 = 0.5;

/// Generates `num_queries` training queries and `max(1, num_queries / 2)`
/// test queries.
///
/// A hidden unit weight vector `w` is drawn first. Each document is
/// `z * w + noise`, with a latent relevance `z` that has a per-query offset,
/// so some queries are richer in relevant documents than others. Grades come
/// from cutting `w · d` at global quantiles. Features are then min-max
/// normalized per query like published LETOR sets, after which `w` is a
/// near-ideal (no longer exact) ranker.
pub fn make_synthetic(
    num_queries: usize,
    docs_per_query: usize,
    feature_dim: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    if num_queries == 0 || docs_per_query == 0 || feature_dim == 0 {
        return Err(Error::InvalidArgument(
            "synthetic dataset sizes must be positive".into(),
        ));
    }
    let mut rng = seeded(seed);
    let weights = crate::ranking::sample_unit_sphere(feature_dim, &mut rng)?;
    let num_test = (num_queries / 2).max(1);

    let mut raw: Vec<(String, Vec<f64>)> = Vec::with_capacity(num_queries + num_test);
    for q in 0..num_queries + num_test {
        let mut qrng = derived(seed, q as u64);
        let shift: f64 = QUERY_SHIFT * qrng.sample::<f64, _>(StandardNormal);
        let mut values = Vec::with_capacity(docs_per_query * feature_dim);
        for _ in 0..docs_per_query {
            let z: f64 = shift + qrng.sample::<f64, _>(StandardNormal);
            for w in &weights {
                let noise: f64 = qrng.sample(StandardNormal);
                values.push(z * w + FEATURE_NOISE * noise);
            }
        }
        raw.push((format!("{}", q + 1), values));
    }

    let mut latent: Vec<f64> = raw
        .iter()
        .flat_map(|(_, v)| v.chunks_exact(feature_dim).map(|d| dot(&weights, d)))
        .collect();
    latent.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = GRADE_QUANTILES
        .iter()
        .map(|p| latent[((p * latent.len() as f64) as usize).min(latent.len() - 1)])
        .collect();

    let queries = raw
        .into_iter()
        .map(|(qid, values)| {
            let relevance = values
                .chunks_exact(feature_dim)
                .map(|d| {
                    let s = dot(&weights, d);
                    cuts.iter().filter(|&&c| s >= c).count() as u8
                })
                .collect();
            Query::new(qid, DocMatrix::new(feature_dim, values)?, relevance)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut queries = normalize_query_level(queries);
    let test = queries.split_off(num_queries);
    Ok(SyntheticDataset {
        dataset: Dataset::new(queries, test)?,
        weights: LinearRanker::new(weights)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_line() {
        let (qs, dim) = parse_letor_str("2 qid:1 1:0.5 3:1.0").unwrap();
        assert_eq!(dim, 3);
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].qid, "1");
        assert_eq!(qs[0].relevance, vec![2]);
        assert_eq!(qs[0].docs.doc(0), &[0.5, 0.0, 1.0]);
    }

    #[test]
    fn groups_by_qid() {
        let text = "0 qid:1 1:1\n1 qid:2 1:2 # a comment\n\n# only a comment\n3 qid:1 2:4\n";
        let (qs, dim) = parse_letor_str(text).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].qid, "1");
        assert_eq!(qs[0].len(), 2);
        assert_eq!(qs[0].relevance, vec![0, 3]);
        assert_eq!(qs[1].len(), 1);
    }

    #[test]
    fn rejects_bad_lines_with_line_number() {
        let err = parse_letor_str("1 qid:1 1:0.2\n5 qid:1 1:0.1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        for bad in ["x qid:1 1:0", "1 1:0", "1 qid:1 0:3", "1 qid:1 1:abc", "1 qid:1 7", "1.5 qid:1 1:0"] {
            assert!(parse_letor_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.txt");
        std::fs::write(&path, "# nothing here\n").unwrap();
        assert!(matches!(parse_letor(&path), Err(Error::EmptyDataset(_))));
        assert!(matches!(parse_letor(&dir.path().join("missing")), Err(Error::Io { .. })));
    }

    fn query(rows: &[&[f64]]) -> Query {
        let docs = DocMatrix::from_rows(rows[0].len(), rows).unwrap();
        Query::new("q", docs, vec![0; rows.len()]).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let q = query(&[&[2.0, 3.0], &[4.0, 3.0], &[6.0, 3.0]]);
        let n = normalize_query_level(vec![q]).remove(0);
        let col0: Vec<f64> = n.docs.rows().map(|r| r[0]).collect();
        let col1: Vec<f64> = n.docs.rows().map(|r| r[1]).collect();
        assert_eq!(col0, vec![0.0, 0.5, 1.0]);
        assert_eq!(col1, vec![0.0, 0.0, 0.0]);

        let single = normalize_query_level(vec![query(&[&[42.0]])]).remove(0);
        assert_eq!(single.docs.doc(0), &[0.0]);
    }

    #[test]
    fn sample_query_is_uniform_over_train() {
        let synth = make_synthetic(4, 3, 2, 1).unwrap();
        let mut rng = seeded(9);
        let mut counts = HashMap::new();
        let n = 40_000;
        for _ in 0..n {
            let q = sample_query(&synth.dataset, &mut rng).unwrap();
            *counts.entry(q.qid.clone()).or_insert(0usize) += 1;
        }
        let test_ids: Vec<_> = synth.dataset.test.iter().map(|q| &q.qid).collect();
        assert_eq!(counts.len(), 4);
        for (qid, c) in counts {
            assert!(!test_ids.contains(&&qid));
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }

        let one = make_synthetic(1, 3, 2, 1).unwrap();
        let q = sample_query(&one.dataset, &mut rng).unwrap();
        assert_eq!(q.qid, one.dataset.train[0].qid);
    }

    #[test]
    fn synthetic_is_deterministic_and_valid() {
        let a = make_synthetic(50, 20, 10, 11).unwrap();
        let b = make_synthetic(50, 20, 10, 11).unwrap();
        assert_eq!(a, b);
        let ds = &a.dataset;
        assert_eq!(ds.feature_dim, 10);
        assert_eq!(ds.train.len(), 50);
        assert_eq!(ds.test.len(), 25);
        for q in ds.train.iter().chain(&ds.test) {
            assert_eq!(q.len(), 20);
            assert_eq!(q.docs.dim(), 10);
            assert!(q.relevance.iter().all(|&g| g <= MAX_GRADE));
            assert!(q.docs.rows().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let c = make_synthetic(50, 20, 10, 12).unwrap();
        assert_ne!(a.dataset, c.dataset);
        assert!(make_synthetic(0, 1, 1, 0).is_err());
    }

    #[test]
    fn dataset_pads_to_common_dimension() {
        let (train, _) = parse_letor_str("1 qid:1 1:1").unwrap();
        let (test, _) = parse_letor_str("1 qid:2 3:1").unwrap();
        let ds = Dataset::new(train, test).unwrap();
        assert_eq!(ds.feature_dim, 3);
        assert_eq!(ds.train[0].docs.doc(0), &[1.0, 0.0, 0.0]);
    }
}
