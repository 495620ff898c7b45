//! Part-of-speech data: corpus, vocabulary and tag indexing, the embedding
//! table and the linear tag head.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{axpy, Matrix};
use crate::model::matrix_shape;
use crate::params::ParamSet;
use crate::rng;

/// Dense string-to-index map in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    items: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn from_items<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for item in items {
            let item = item.into();
            if vocab.index.contains_key(&item) {
                return Err(Error::usage(format!("duplicate vocabulary entry {item:?}")));
            }
            vocab.insert(&item);
        }
        Ok(vocab)
    }

    /// Returns the index of `item`, adding it if absent.
    pub fn insert(&mut self, item: &str) -> usize {
        if let Some(&i) = self.index.get(item) {
            return i;
        }
        let i = self.items.len();
        self.items.push(item.to_string());
        self.index.insert(item.to_string(), i);
        i
    }

    pub fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

/// Tokens are compared after lowercasing.
pub fn fold_case(token: &str) -> String {
    token.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl Sentence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>, tags: impl IntoIterator<Item = S>) -> Self {
        Sentence {
            tokens: tokens.into_iter().map(Into::into).collect(),
            tags: tags.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSentence {
    pub tokens: Vec<usize>,
    pub tags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedCorpus {
    sentences: Vec<Sentence>,
    vocab: Vocabulary,
    tags: Vocabulary,
}

impl TaggedCorpus {
    /// Validates alignment and builds the vocabulary and tag maps from data.
    pub fn new(sentences: Vec<Sentence>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::usage("corpus has no sentences"));
        }
        for (i, s) in sentences.iter().enumerate() {
            if s.tokens.is_empty() {
                return Err(Error::usage(format!("sentence {i} is empty")));
            }
            if s.tokens.len() != s.tags.len() {
                return Err(Error::usage(format!(
                    "sentence {i} has {} tokens but {} tags",
                    s.tokens.len(),
                    s.tags.len()
                )));
            }
        }
        let vocab = build_vocab(&sentences);
        let tags = build_tag_map(&sentences);
        Ok(TaggedCorpus { sentences, vocab, tags })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn tag_map(&self) -> &Vocabulary {
        &self.tags
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    /// Indices under the corpus' own maps.
    pub fn encode(&self) -> Vec<EncodedSentence> {
        self.encode_with(&self.vocab, &self.tags).expect("corpus maps cover their own data")
    }

    /// Indices under externally supplied maps (e.g. from a checkpoint).
    pub fn encode_with(&self, vocab: &Vocabulary, tags: &Vocabulary) -> Result<Vec<EncodedSentence>> {
        self.sentences
            .iter()
            .map(|s| {
                let tokens = s
                    .tokens
                    .iter()
                    .map(|t| {
                        vocab
                            .get(&fold_case(t))
                            .ok_or_else(|| Error::usage(format!("token {t:?} is not in the vocabulary")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let tags = s
                    .tags
                    .iter()
                    .map(|t| tags.get(t).ok_or_else(|| Error::usage(format!("unknown tag {t:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(EncodedSentence { tokens, tags })
            })
            .collect()
    }
}

/// Case-folded tokens in first-appearance order.
pub fn build_vocab(sentences: &[Sentence]) -> Vocabulary {
    let mut vocab = Vocabulary::default();
    for s in sentences {
        for t in &s.tokens {
            vocab.insert(&fold_case(t));
        }
    }
    vocab
}

/// Tags in first-appearance order, case preserved.
pub fn build_tag_map(sentences: &[Sentence]) -> Vocabulary {
    let mut tags = Vocabulary::default();
    for s in sentences {
        for t in &s.tags {
            tags.insert(t);
        }
    }
    tags
}

/// The two-sentence tagging corpus used throughout the experiments.
pub fn builtin_corpus() -> TaggedCorpus {
    TaggedCorpus::new(alloc::vec![
        Sentence::new(["The", "dog", "eat", "the", "ice"], ["DET", "NN", "V", "DET", "NN"]),
        Sentence::new(["Everybody", "read", "that", "book"], ["NN", "V", "DET", "NN"]),
    ])
    .expect("builtin corpus is well formed")
}

/// Trainable `vocab_size × dim` lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub table: Matrix,
}

impl EmbeddingTable {
    pub fn new(table: Matrix) -> Self {
        EmbeddingTable { table }
    }

    /// Entries uniform in `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        EmbeddingTable { table: Matrix::from_fn(vocab_size, dim, |_, _| rng::symmetric(rng, 1.0)) }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn embed(&self, index: usize) -> Result<&[f64]> {
        if index >= self.vocab_size() {
            return Err(Error::usage(format!(
                "token index {index} out of range for vocabulary of {}",
                self.vocab_size()
            )));
        }
        Ok(self.table.row(index))
    }

    /// Adds `grad` into row `index` (the backward of [`EmbeddingTable::embed`]).
    pub fn accumulate(&mut self, index: usize, grad: &[f64]) -> Result<()> {
        if index >= self.vocab_size() {
            return Err(Error::usage(format!("token index {index} out of range")));
        }
        ensure_len!("embedding gradient", grad.len(), self.dim());
        axpy(self.table.row_mut(index), 1.0, grad);
        Ok(())
    }
}

impl ParamSet for EmbeddingTable {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f("table", &matrix_shape(&self.table), self.table.as_slice());
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        f("table", self.table.as_mut_slice());
    }

    fn zeros_like(&self) -> Self {
        EmbeddingTable { table: Matrix::zeros(self.table.rows(), self.table.cols()) }
    }
}

/// Linear map from hidden state to tag logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TagHead {
    /// `num_tags × hidden_dim`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl TagHead {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        ensure_len!("tag head bias", bias.len(), weight.rows());
        Ok(TagHead { weight, bias })
    }

    /// Weights uniform in `[−1/√hidden, 1/√hidden]`, zero bias.
    pub fn random<R: Rng + ?Sized>(num_tags: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / libm::sqrt(hidden_dim as f64);
        TagHead {
            weight: Matrix::from_fn(num_tags, hidden_dim, |_, _| rng::symmetric(rng, bound)),
            bias: alloc::vec![0.0; num_tags],
        }
    }

    pub fn num_tags(&self) -> usize {
        self.weight.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn logits(&self, h: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.weight.matvec(h)?;
        axpy(&mut out, 1.0, &self.bias);
        Ok(out)
    }

    /// Accumulates ∂L/∂weight and ∂L/∂bias into `grads` and returns ∂L/∂h.
    pub fn backward(&self, h: &[f64], dlogits: &[f64], grads: &mut TagHead) -> Result<Vec<f64>> {
        ensure_len!("logit gradient", dlogits.len(), self.num_tags());
        grads.weight.add_outer(1.0, dlogits, h)?;
        axpy(&mut grads.bias, 1.0, dlogits);
        self.weight.matvec_t(dlogits)
    }
}

impl ParamSet for TagHead {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f("weight", &matrix_shape(&self.weight), self.weight.as_slice());
        f("bias", &[self.bias.len()], &self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        f("weight", self.weight.as_mut_slice());
        f("bias", &mut self.bias);
    }

    fn zeros_like(&self) -> Self {
        TagHead { weight: Matrix::zeros(self.weight.rows(), self.weight.cols()), bias: alloc::vec![0.0; self.bias.len()] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn builtin_corpus_shape() {
        let c = builtin_corpus();
        assert_eq!(c.sentences().len(), 2);
        assert_eq!(c.sentences()[0].tokens.len(), 5);
        assert_eq!(c.sentences()[0].tags, ["DET", "NN", "V", "DET", "NN"]);
        assert_eq!(c.sentences()[1].tags, ["NN", "V", "DET", "NN"]);
        assert_eq!(c.tag_map().len(), 3);
        // the, dog, eat, ice, everybody, read, that, book
        assert_eq!(c.vocab().len(), 8);
        assert_eq!(c.vocab().get("the"), Some(0));
        assert_eq!(c.encode()[0].tokens, vec![0, 1, 2, 0, 3]);
    }

    #[test]
    fn vocab_is_deterministic_and_dense() {
        let s = vec![Sentence::new(["a", "b", "a"], ["X", "Y", "X"])];
        let v1 = build_vocab(&s);
        assert_eq!(v1.len(), 2);
        assert_eq!(v1, build_vocab(&s));
        assert_eq!(v1.items(), ["a", "b"]);
        assert_eq!(build_vocab(&builtin_corpus().sentences().to_vec()), *builtin_corpus().vocab());
    }

    #[test]
    fn corpus_rejects_misaligned_sentences() {
        assert!(TaggedCorpus::new(vec![Sentence::new(["a", "b"], ["X"])]).is_err());
        assert!(TaggedCorpus::new(vec![]).is_err());
        let unknown = TaggedCorpus::new(vec![Sentence::new(["zebra"], ["NN"])]).unwrap();
        let base = builtin_corpus();
        assert!(unknown.encode_with(base.vocab(), base.tag_map()).is_err());
    }

    #[test]
    fn embedding_lookup_and_accumulate() {
        let mut table = EmbeddingTable::new(Matrix::from_fn(3, 2, |r, c| (r * 2 + c) as f64));
        assert_eq!(table.embed(1).unwrap(), &[2.0, 3.0]);
        assert_eq!(table.embed(1).unwrap(), table.embed(1).unwrap());
        assert!(table.embed(3).is_err());
        table.table.row_mut(2)[0] += 0.5;
        assert_eq!(table.embed(2).unwrap(), &[4.5, 5.0]);
        let mut g = table.zeros_like();
        g.accumulate(1, &[1.0, -1.0]).unwrap();
        g.accumulate(1, &[1.0, 0.0]).unwrap();
        assert_eq!(g.table.row(1), &[2.0, -1.0]);
        assert!(g.accumulate(0, &[1.0]).is_err());
    }

    #[test]
    fn tag_head_logits() {
        let zero = TagHead::new(Matrix::zeros(3, 4), vec![0.0; 3]).unwrap();
        assert_eq!(zero.logits(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0; 3]);
        let ident = TagHead::new(Matrix::from_fn(3, 4, |r, c| if r == c { 1.0 } else { 0.0 }), vec![0.0; 3]).unwrap();
        assert_eq!(ident.logits(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(ident.logits(&[1.0]).is_err());
    }

    #[test]
    fn tag_head_gradients_match_finite_differences() {
        let mut r = crate::rng::seeded(9);
        let head = TagHead::random(3, 4, &mut r);
        let h = [0.3, -0.2, 0.5, 0.1];
        let w = [0.7, -1.1, 0.4];
        // L = w · logits(h)
        let loss = |hd: &TagHead, h: &[f64]| crate::linalg::dot(&hd.logits(h).unwrap(), &w);
        let mut g = head.zeros_like();
        let dh = head.backward(&h, &w, &mut g).unwrap();
        let eps = 1e-5;
        let analytic = g.flatten();
        let base = head.flatten();
        for k in 0..base.len() {
            let mut p = head.clone();
            let mut flat = base.clone();
            flat[k] += eps;
            p.assign_flat(&flat).unwrap();
            let up = loss(&p, &h);
            flat[k] -= 2.0 * eps;
            p.assign_flat(&flat).unwrap();
            let fd = (up - loss(&p, &h)) / (2.0 * eps);
            assert!((fd - analytic[k]).abs() <= 1e-6 * fd.abs().max(1.0));
        }
        for k in 0..4 {
            let mut hp = h;
            hp[k] += eps;
            let mut hm = h;
            hm[k] -= eps;
            let fd = (loss(&head, &hp) - loss(&head, &hm)) / (2.0 * eps);
            assert!((fd - dh[k]).abs() <= 1e-6 * fd.abs().max(1.0));
        }
    }
}
