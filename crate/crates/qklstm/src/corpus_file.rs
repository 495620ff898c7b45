//! `word/TAG` corpus files: one sentence per line, tokens separated by
//! whitespace, each token split at its last `/`. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use qklstm_core::pos::{Sentence, TaggedCorpus};

use crate::error::{CliError, Result};

pub fn parse_corpus(text: &str, origin: &Path) -> Result<TaggedCorpus> {
    let mut sentences = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = Vec::new();
        let mut tags = Vec::new();
        for tok in line.split_whitespace() {
            let (word, tag) = tok
                .rsplit_once('/')
                .ok_or_else(|| CliError::parse(origin, idx + 1, format!("token {tok:?} has no /TAG suffix")))?;
            if word.is_empty() || tag.is_empty() {
                return Err(CliError::parse(origin, idx + 1, format!("token {tok:?} has an empty word or tag")));
            }
            words.push(word);
            tags.push(tag);
        }
        sentences.push(Sentence::new(words, tags));
    }
    if sentences.is_empty() {
        return Err(CliError::parse(origin, 0, "corpus contains no sentences"));
    }
    TaggedCorpus::new(sentences).map_err(|e| CliError::parse(origin, 0, e.to_string()))
}

pub fn read_corpus(path: &Path) -> Result<TaggedCorpus> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_corpus(&text, path)
}

pub fn format_corpus(corpus: &TaggedCorpus) -> String {
    let mut out = String::new();
    for s in corpus.sentences() {
        let line: Vec<String> = s.tokens.iter().zip(&s.tags).map(|(w, t)| format!("{w}/{t}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}
