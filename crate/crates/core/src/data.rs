//! Sentence-level domain types: entity mentions, triplets, annotated sentences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::RelationSet;

/// A contiguous token span, inclusive on both ends.
///
/// The span start doubles as the mention's head offset, which is what
/// evaluation matches on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityMention {
    pub start: usize,
    pub end: usize,
}

impl EntityMention {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::Sentence(format!("span start {start} > end {end}")));
        }
        Ok(Self { start, end })
    }

    /// Head offset: the start token index.
    pub fn head(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }

    pub fn overlaps(&self, other: &EntityMention) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// One extracted result: (first entity, relation type, second entity).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub e1: EntityMention,
    pub relation: String,
    pub e2: EntityMention,
}

impl Triplet {
    pub fn new(e1: EntityMention, relation: impl Into<String>, e2: EntityMention) -> Self {
        Self {
            e1,
            relation: relation.into(),
            e2,
        }
    }
}

/// A tokenized sentence together with its gold triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub triplets: Vec<Triplet>,
}

impl AnnotatedSentence {
    pub fn new(tokens: Vec<String>, triplets: Vec<Triplet>) -> Self {
        Self { tokens, triplets }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Checks the sentence invariants:
    /// every span lies inside the sentence, every relation belongs to
    /// `relations`, and no token belongs to more than one entity mention
    /// (entities of separate triplets included — overlapping relations are
    /// out of scope and rejected rather than silently mangled).
    pub fn validate(&self, relations: &RelationSet) -> Result<()> {
        let mut owner = vec![false; self.tokens.len()];
        for triplet in &self.triplets {
            if !relations.contains(&triplet.relation) {
                return Err(Error::Sentence(format!(
                    "unknown relation `{}`",
                    triplet.relation
                )));
            }
            for mention in [&triplet.e1, &triplet.e2] {
                if mention.end >= self.tokens.len() {
                    return Err(Error::Sentence(format!(
                        "span {}..{} out of bounds for sentence of length {}",
                        mention.start,
                        mention.end,
                        self.tokens.len()
                    )));
                }
                for t in mention.tokens() {
                    if owner[t] {
                        return Err(Error::OverlappingEntities(format!(
                            "token {t} belongs to more than one entity mention"
                        )));
                    }
                    owner[t] = true;
                }
            }
        }
        Ok(())
    }
}

/// Wire form of one corpus line (JSON Lines): spans are inclusive
/// `[start, end]` token-index pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub tokens: Vec<String>,
    pub triplets: Vec<TripletRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TripletRecord {
    pub e1: [usize; 2],
    pub rel: String,
    pub e2: [usize; 2],
}

impl SentenceRecord {
    pub fn from_sentence(sentence: &AnnotatedSentence) -> Self {
        Self {
            tokens: sentence.tokens.clone(),
            triplets: sentence
                .triplets
                .iter()
                .map(|t| TripletRecord {
                    e1: [t.e1.start, t.e1.end],
                    rel: t.relation.clone(),
                    e2: [t.e2.start, t.e2.end],
                })
                .collect(),
        }
    }

    pub fn into_sentence(self) -> Result<AnnotatedSentence> {
        let triplets = self
            .triplets
            .into_iter()
            .map(|t| {
                Ok(Triplet::new(
                    EntityMention::new(t.e1[0], t.e1[1])?,
                    t.rel,
                    EntityMention::new(t.e2[0], t.e2[1])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnnotatedSentence::new(self.tokens, triplets))
    }
}
