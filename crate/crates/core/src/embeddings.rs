//! Word-vector ingestion, the task vocabulary, and embedding channels.

use std::collections::HashMap;
use std::io::BufRead;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::depgraph::{DEP_PREFIX, LEFT_TOKEN, RIGHT_TOKEN};
use crate::error::{Error, Result};
use crate::real::Real;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Half-width of the uniform range for rows without a pretrained vector.
pub const INIT_RANGE: f32 = 0.25;

/// Dense token index. `<pad>` is 0, `<unk>` is 1, then `<L>`, `<R>`, the
/// `dep:*` labels and the words, each group in first-seen order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build<'a, I, S>(sequences: I) -> Vocabulary
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut deps = Vec::new();
        let mut words = Vec::new();
        let mut seen: std::collections::HashSet<String> =
            [PAD, UNK, LEFT_TOKEN, RIGHT_TOKEN].iter().map(|s| s.to_string()).collect();
        for seq in sequences {
            for token in seq {
                let token = token.as_ref();
                if seen.contains(token) {
                    continue;
                }
                seen.insert(token.to_owned());
                if token.starts_with(DEP_PREFIX) {
                    deps.push(token.to_owned());
                } else {
                    words.push(token.to_owned());
                }
            }
        }
        let tokens = [PAD, UNK, LEFT_TOKEN, RIGHT_TOKEN]
            .iter()
            .map(|s| s.to_string())
            .chain(deps)
            .chain(words)
            .collect();
        Vocabulary::from_tokens(tokens).expect("freshly built vocabulary is valid")
    }

    /// Rebuild from the ordered token list (as stored in model files).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary> {
        if tokens.first().map(String::as_str) != Some(PAD)
            || tokens.get(1).map(String::as_str) != Some(UNK)
        {
            return Err(Error::Data("vocabulary must start with <pad>, <unk>".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Vectors read from a word2vec text export.
#[derive(Clone, Debug)]
pub struct PretrainedVectors {
    /// Identifier recorded in model metadata (usually the file name).
    pub id: String,
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f32>>,
}

impl PretrainedVectors {
    /// Exact match first, then the lowercased token.
    pub fn lookup(&self, token: &str) -> Option<&[f32]> {
        self.vectors
            .get(token)
            .or_else(|| self.vectors.get(&token.to_lowercase()))
            .map(Vec::as_slice)
    }
}

/// Read the word2vec text format: a `V d` header, then `word x1 .. xd` rows.
pub fn load_w2v_text<R: BufRead>(reader: R) -> Result<(HashMap<String, Vec<f32>>, usize)> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::format(1, "missing `V d` header"))?;
    let mut parts = header.split_whitespace();
    let mut field = |what: &str| -> Result<usize> {
        parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::format(1, format!("header: invalid {what}")))
    };
    let (count, dim) = (field("vocabulary size")?, field("dimension")?);
    if dim == 0 {
        return Err(Error::format(1, "header: dimension must be positive"));
    }

    let mut vectors = HashMap::with_capacity(count);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line has a word");
        let values = parts
            .map(|p| {
                p.parse::<f32>()
                    .map_err(|_| Error::format(line_no, format!("invalid component `{p}`")))
            })
            .collect::<Result<Vec<f32>>>()?;
        if values.len() != dim {
            return Err(Error::format(
                line_no,
                format!("`{word}` has {} components, expected {dim}", values.len()),
            ));
        }
        if vectors.contains_key(word) {
            warn!("duplicate vector for `{word}` at line {line_no}; keeping the first");
            continue;
        }
        vectors.insert(word.to_owned(), values);
    }
    if rows != count {
        return Err(Error::format(
            None,
            format!("header announces {count} vectors, file has {rows}"),
        ));
    }
    Ok((vectors, dim))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum EmbeddingSource {
    Random,
    Pretrained(String),
}

/// A `V × dim` embedding matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingChannel<F> {
    pub dim: usize,
    pub matrix: Vec<F>,
    pub trainable: bool,
    pub source: EmbeddingSource,
}

impl<F: Real> EmbeddingChannel<F> {
    pub fn rows(&self) -> usize {
        self.matrix.len() / self.dim
    }

    pub fn row(&self, index: usize) -> &[F] {
        &self.matrix[index * self.dim..(index + 1) * self.dim]
    }

    pub fn cast<G: Real>(&self) -> EmbeddingChannel<G> {
        EmbeddingChannel {
            dim: self.dim,
            matrix: self.matrix.iter().map(|&x| G::of(x.as_f64())).collect(),
            trainable: self.trainable,
            source: self.source.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub vocab_size: usize,
    pub dim: usize,
    pub pretrained_hits: usize,
    pub hit_rate: f64,
}

/// Materialize one channel over `vocab`.
///
/// Rows found in `pretrained` are copied; `<pad>` is zero; every other row is
/// drawn from U[-0.25, 0.25] with a generator seeded by `seed`.
pub fn build_channel(
    vocab: &Vocabulary,
    pretrained: Option<&PretrainedVectors>,
    dim: usize,
    trainable: bool,
    seed: u64,
) -> Result<(EmbeddingChannel<f32>, CoverageReport)> {
    if let Some(p) = pretrained {
        if p.dim != dim {
            return Err(Error::Config(format!(
                "pretrained vectors `{}` have dimension {}, model expects {dim}",
                p.id, p.dim
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = vec![0f32; vocab.len() * dim];
    let mut hits = 0;
    for (index, token) in vocab.tokens().iter().enumerate().skip(1) {
        let row = &mut matrix[index * dim..(index + 1) * dim];
        match pretrained.and_then(|p| p.lookup(token)) {
            Some(vector) => {
                row.copy_from_slice(vector);
                hits += 1;
            }
            None => row
                .iter_mut()
                .for_each(|x| *x = rng.gen_range(-INIT_RANGE..=INIT_RANGE)),
        }
    }
    let source = match pretrained {
        Some(p) => EmbeddingSource::Pretrained(p.id.clone()),
        None => EmbeddingSource::Random,
    };
    let report = CoverageReport {
        vocab_size: vocab.len(),
        dim,
        pretrained_hits: hits,
        hit_rate: if vocab.is_empty() {
            0.0
        } else {
            hits as f64 / vocab.len() as f64
        },
    };
    Ok((
        EmbeddingChannel {
            dim,
            matrix,
            trainable,
            source,
        },
        report,
    ))
}

/// Map tokens to indices, right-padding with `<pad>` to `max_len`.
///
/// Unknown tokens map to `<unk>`. Longer sequences are cut to `max_len`;
/// the returned flag reports the truncation.
pub fn lookup_sequence<S: AsRef<str>>(
    vocab: &Vocabulary,
    tokens: &[S],
    max_len: usize,
) -> (Vec<usize>, bool) {
    let truncated = tokens.len() > max_len;
    if truncated {
        warn!(
            "sequence of {} tokens truncated to {max_len}",
            tokens.len()
        );
    }
    let mut indices: Vec<usize> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.get(t.as_ref()).unwrap_or(UNK_INDEX))
        .collect();
    indices.resize(max_len, PAD_INDEX);
    (indices, truncated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::build([words])
    }

    #[test]
    fn vocabulary_layout() {
        let v = Vocabulary::build([
            &["cat", "<L>", "dep:obj", "<L>", "dog"][..],
            &["dep:nmod", "cat", "bird"][..],
        ]);
        assert_eq!(
            v.tokens(),
            ["<pad>", "<unk>", "<L>", "<R>", "dep:obj", "dep:nmod", "cat", "dog", "bird"]
        );
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.get(t), Some(i));
        }
        assert!(Vocabulary::from_tokens(vec!["<unk>".into(), "<pad>".into()]).is_err());
        assert!(Vocabulary::from_tokens(vec!["<pad>".into(), "<unk>".into(), "a".into(), "a".into()]).is_err());
    }

    #[test]
    fn minimal_w2v_file() {
        let (map, dim) = load_w2v_text("2 3\ncat 1 2 3\ndog 4 5 6\n".as_bytes()).unwrap();
        assert_eq!(dim, 3);
        assert_eq!(map.len(), 2);
        assert_eq!(map["dog"], vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn w2v_errors() {
        match load_w2v_text("1 3\ncat 1 2\n".as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_w2v_text("3 2\ncat 1 2\n".as_bytes()).is_err());
        assert!(load_w2v_text("x 2\n".as_bytes()).is_err());
        assert!(load_w2v_text("".as_bytes()).is_err());
        assert!(load_w2v_text("1 2\ncat 1 x\n".as_bytes()).is_err());
    }

    #[test]
    fn w2v_duplicate_keeps_first() {
        let (map, _) = load_w2v_text("2 2\ncat 1 2\ncat 3 4\n".as_bytes()).unwrap();
        assert_eq!(map.len(), 1);
        assert_eq!(map["cat"], vec![1.0, 2.0]);
    }

    #[test]
    fn random_channel() {
        let v = vocab(&["a", "b", "c"]);
        let (ch, report) = build_channel(&v, None, 5, true, 7).unwrap();
        assert!(ch.row(PAD_INDEX).iter().all(|&x| x == 0.0));
        for r in 1..v.len() {
            assert!(ch.row(r).iter().all(|x| x.abs() <= INIT_RANGE));
            assert!(ch.row(r).iter().any(|&x| x != 0.0));
        }
        assert_eq!(report.pretrained_hits, 0);
        assert_eq!(report.hit_rate, 0.0);
        assert_eq!(ch.source, EmbeddingSource::Random);

        let (again, _) = build_channel(&v, None, 5, true, 7).unwrap();
        assert_eq!(ch.matrix, again.matrix);
        let (other, _) = build_channel(&v, None, 5, true, 8).unwrap();
        assert_ne!(ch.matrix, other.matrix);
    }

    #[test]
    fn pretrained_rows_copied_with_lowercase_fallback() {
        let v = vocab(&["Cat", "dog", "emu"]);
        let pretrained = PretrainedVectors {
            id: "toy".into(),
            dim: 2,
            vectors: [("cat".to_string(), vec![1.0, 2.0]), ("dog".to_string(), vec![3.0, 4.0])]
                .into_iter()
                .collect(),
        };
        let (ch, report) = build_channel(&v, Some(&pretrained), 2, false, 1).unwrap();
        assert_eq!(ch.row(v.get("Cat").unwrap()), &[1.0, 2.0]);
        assert_eq!(ch.row(v.get("dog").unwrap()), &[3.0, 4.0]);
        assert_eq!(report.pretrained_hits, 2);
        assert_eq!(report.vocab_size, v.len());
        assert_eq!(ch.source, EmbeddingSource::Pretrained("toy".into()));
        assert!(build_channel(&v, Some(&pretrained), 3, false, 1).is_err());
    }

    #[test]
    fn lookup_pads_and_truncates() {
        let v = Vocabulary::from_tokens(
            ["<pad>", "<unk>", "x", "y", "z", "a", "p", "q", "r", "b"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
        .unwrap();
        assert_eq!(lookup_sequence(&v, &["a", "b"], 4), (vec![5, 9, 0, 0], false));
        assert_eq!(lookup_sequence(&v, &["zzz"], 2).0, vec![UNK_INDEX, PAD_INDEX]);
        let long: Vec<&str> = std::iter::repeat_n("a", 20).collect();
        let (idx, truncated) = lookup_sequence(&v, &long, 15);
        assert_eq!(idx, vec![5; 15]);
        assert!(truncated);
    }
}
