use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::IsARelation;
use crate::backend::{Backend, MaskedSentence, Verdict, MASK};
use crate::error::{Error, Result};

/// How a model is asked about a relation or property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// Fill-mask: the answer must appear among the top-k completions.
    Masked,
    /// Yes/no question; only YES counts.
    Binary,
}

impl std::str::FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "masked" => Ok(QueryMode::Masked),
            "binary" => Ok(QueryMode::Binary),
            other => Err(Error::InvalidInput(format!("unknown query mode {other:?}"))),
        }
    }
}

/// Result of one query. Masked queries keep the answer's 1-based rank in
/// the fetched list so belief can be re-evaluated at any smaller k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query: String,
    pub mode: QueryMode,
    /// Length of the list that was fetched (masked mode).
    pub k: usize,
    pub rank: Option<usize>,
    pub verdict: Option<Verdict>,
}

impl QueryOutcome {
    pub fn believed_at(&self, k: usize) -> bool {
        match self.mode {
            QueryMode::Masked => self.rank.is_some_and(|r| r <= k.min(self.k)),
            QueryMode::Binary => self.verdict == Some(Verdict::Yes),
        }
    }

    pub fn believed(&self) -> bool {
        self.believed_at(self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationOutcome {
    pub relation: IsARelation,
    #[serde(flatten)]
    pub outcome: QueryOutcome,
}

impl RelationOutcome {
    pub fn retrieved_at(&self, k: usize) -> bool {
        self.outcome.believed_at(k)
    }
}

/// `"<child> is a type of [MASK]."` or `"Is <child> a type of <parent>?"`.
pub fn isa_query_text(rel: &IsARelation, mode: QueryMode) -> String {
    match mode {
        QueryMode::Masked => format!("{} is a type of {MASK}.", rel.child),
        QueryMode::Binary => format!("Is {} a type of {}?", rel.child, rel.parent),
    }
}

/// Issues queries against one backend in one mode, fetching `k` completions
/// for masked queries.
#[derive(Debug, Clone)]
pub struct Prober<'a> {
    pub backend: &'a Backend,
    pub mode: QueryMode,
    pub k: usize,
}

impl<'a> Prober<'a> {
    pub fn new(backend: &'a Backend, mode: QueryMode, k: usize) -> Result<Self> {
        if mode == QueryMode::Masked && k == 0 {
            return Err(Error::InvalidInput(
                "k must be at least 1 for masked queries".into(),
            ));
        }
        Ok(Self { backend, mode, k })
    }

    /// Rank of `answer` (case-insensitive, exact string) in the top-k list for `sentence`.
    pub fn answer_rank(&self, sentence: &str, answer: &str) -> Result<Option<usize>> {
        let s = MaskedSentence::new(sentence, sentence)?;
        let wanted = answer.trim().to_lowercase();
        let list = self.backend.top_k_completions(&s, self.k)?;
        Ok(list
            .iter()
            .position(|c| c.token.trim().to_lowercase() == wanted)
            .map(|i| i + 1))
    }

    pub fn ask(&self, question: &str) -> Result<Verdict> {
        let answer = self.backend.ask_binary(question)?;
        if answer.verdict == Verdict::Unparseable {
            log::warn!(
                "unparseable answer {:?} to {question:?}; counted as not retrieved",
                answer.raw
            );
        }
        Ok(answer.verdict)
    }

    /// Masked: fill-mask `masked_sentence` and look for `answer`.
    /// Binary: ask `question`.
    pub fn run(&self, masked_sentence: &str, answer: &str, question: &str) -> Result<QueryOutcome> {
        Ok(match self.mode {
            QueryMode::Masked => QueryOutcome {
                query: masked_sentence.to_string(),
                mode: self.mode,
                k: self.k,
                rank: self.answer_rank(masked_sentence, answer)?,
                verdict: None,
            },
            QueryMode::Binary => QueryOutcome {
                query: question.to_string(),
                mode: self.mode,
                k: self.k,
                rank: None,
                verdict: Some(self.ask(question)?),
            },
        })
    }

    pub fn query(&self, rel: &IsARelation) -> Result<RelationOutcome> {
        let masked = isa_query_text(rel, QueryMode::Masked);
        let question = isa_query_text(rel, QueryMode::Binary);
        Ok(RelationOutcome {
            relation: rel.clone(),
            outcome: self.run(&masked, &rel.parent, &question)?,
        })
    }

    /// Queries in parallel; outcomes come back in input order.
    pub fn query_all(&self, rels: &[IsARelation]) -> Result<Vec<RelationOutcome>> {
        rels.par_iter().map(|r| self.query(r)).collect()
    }
}

/// Whether `rel` is retrieved within the top `k` (masked) or answered YES (binary).
pub fn retrieval_at_k(
    rel: &IsARelation,
    backend: &Backend,
    k: usize,
    mode: QueryMode,
) -> Result<bool> {
    Ok(Prober::new(backend, mode, k)?.query(rel)?.retrieved_at(k))
}
