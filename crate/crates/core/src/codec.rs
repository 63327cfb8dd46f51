//! Conversion between triplet annotations and per-token tag sequences.
//!
//! Encoding is exact and rejects out-of-scope input (overlapping entities).
//! Decoding must accept arbitrary predicted sequences, so it applies a strict
//! repair policy: only runs that are exactly `S` or `B I* E` with a single
//! relation and role throughout become entities; any tag that breaks a run
//! discards the accumulated fragment. Entities are then paired per relation
//! type by the nearest principle.

use crate::data::{EntityMention, Triplet};
use crate::error::Result;
use crate::tags::{Position, Role, Tag, TagVocabulary};

/// An entity recovered from a tag sequence, before pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedEntity {
    pub mention: EntityMention,
    pub relation: String,
    pub role: Role,
}

/// Counts of entities left unpaired by [`decode`], split by role, plus the
/// number of entities that did end up inside a triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SingleCounts {
    pub single_e1: usize,
    pub single_e2: usize,
    pub paired: usize,
}

impl SingleCounts {
    pub fn add(&mut self, other: &SingleCounts) {
        self.single_e1 += other.single_e1;
        self.single_e2 += other.single_e2;
        self.paired += other.paired;
    }

    /// Fraction of role-1 entities that stayed unpaired (0 when none were
    /// predicted at all).
    pub fn single_ratio_e1(&self) -> f64 {
        ratio(self.single_e1, self.single_e1 + self.paired / 2)
    }

    pub fn single_ratio_e2(&self) -> f64 {
        ratio(self.single_e2, self.single_e2 + self.paired / 2)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Encodes a sentence's triplets as one tag per token.
///
/// Single-token entities get `S`, multi-token ones `B (I...) E`; the role is
/// `1` for the triplet's first entity and `2` for the second; everything else
/// is `O`. Sentences with overlapping entities are rejected.
pub fn encode(sentence: &crate::data::AnnotatedSentence, vocab: &TagVocabulary) -> Result<Vec<Tag>> {
    sentence.validate(vocab.relations())?;
    let mut tags = vec![Tag::Other; sentence.tokens.len()];
    for triplet in &sentence.triplets {
        for (mention, role) in [(&triplet.e1, Role::First), (&triplet.e2, Role::Second)] {
            for (offset, token) in mention.tokens().enumerate() {
                let position = if mention.len() == 1 {
                    Position::Single
                } else if offset == 0 {
                    Position::Begin
                } else if token == mention.end {
                    Position::End
                } else {
                    Position::Inside
                };
                tags[token] = Tag::entity(position, triplet.relation.clone(), role);
            }
        }
    }
    Ok(tags)
}

/// Extracts maximal well-formed BIES runs from a tag sequence.
///
/// Strict repair: a fragment survives only as `S` or `B I* E` with identical
/// relation and role throughout. A tag that breaks the current fragment
/// discards it, and may itself start a new fragment only if it is `B` or `S`.
/// Output is sorted by start index (scan order). Never fails: predicted
/// sequences are repaired, not rejected.
pub fn extract_entities(tags: &[Tag]) -> Vec<TaggedEntity> {
    struct Open {
        start: usize,
        relation: String,
        role: Role,
    }

    let mut entities = Vec::new();
    let mut open: Option<Open> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::Other => {
                open = None;
            }
            Tag::Entity {
                position,
                relation,
                role,
            } => match position {
                Position::Single => {
                    open = None;
                    entities.push(TaggedEntity {
                        mention: EntityMention { start: i, end: i },
                        relation: relation.clone(),
                        role: *role,
                    });
                }
                Position::Begin => {
                    open = Some(Open {
                        start: i,
                        relation: relation.clone(),
                        role: *role,
                    });
                }
                Position::Inside => {
                    let matches = open
                        .as_ref()
                        .is_some_and(|o| o.relation == *relation && o.role == *role);
                    if !matches {
                        open = None;
                    }
                }
                Position::End => {
                    match open.take() {
                        Some(o) if o.relation == *relation && o.role == *role => {
                            entities.push(TaggedEntity {
                                mention: EntityMention { start: o.start, end: i },
                                relation: relation.clone(),
                                role: *role,
                            });
                        }
                        _ => {}
                    }
                }
            },
        }
    }
    entities
}

/// Distance used by the nearest principle: absolute difference of the two
/// mentions' start indices.
pub fn pair_distance(e1: &EntityMention, e2: &EntityMention) -> usize {
    e1.start.abs_diff(e2.start)
}

/// Pairs role-1 with role-2 entities of one relation type by the nearest
/// principle: repeatedly take the globally minimal-distance pair among the
/// unmatched entities, breaking ties by smaller role-1 start, then smaller
/// role-2 start. Returns index pairs into the two input slices.
fn pair_nearest(firsts: &[&TaggedEntity], seconds: &[&TaggedEntity]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut first_used = vec![false; firsts.len()];
    let mut second_used = vec![false; seconds.len()];
    loop {
        let mut best: Option<((usize, usize, usize), (usize, usize))> = None;
        for (i, e1) in firsts.iter().enumerate() {
            if first_used[i] {
                continue;
            }
            for (j, e2) in seconds.iter().enumerate() {
                if second_used[j] {
                    continue;
                }
                let key = (
                    pair_distance(&e1.mention, &e2.mention),
                    e1.mention.start,
                    e2.mention.start,
                );
                if best.as_ref().is_none_or(|(b, _)| key < *b) {
                    best = Some((key, (i, j)));
                }
            }
        }
        let Some((_, (i, j))) = best else { break };
        first_used[i] = true;
        second_used[j] = true;
        pairs.push((i, j));
    }
    pairs
}

/// Decodes a tag sequence into triplets via extraction plus nearest-principle
/// pairing. Unpaired entities are dropped (see [`count_singles`]). Output is
/// sorted by (e1 start, e2 start) for determinism.
pub fn decode(tags: &[Tag]) -> Vec<Triplet> {
    decode_with_singles(tags).0
}

/// Like [`decode`] but also reports how many entities stayed unpaired per
/// role; `paired` is twice the number of emitted triplets.
pub fn decode_with_singles(tags: &[Tag]) -> (Vec<Triplet>, SingleCounts) {
    let entities = extract_entities(tags);
    let mut relations: Vec<&str> = Vec::new();
    for e in &entities {
        if !relations.iter().any(|r| *r == e.relation) {
            relations.push(&e.relation);
        }
    }

    let mut triplets = Vec::new();
    let mut counts = SingleCounts::default();
    for relation in relations {
        let firsts: Vec<&TaggedEntity> = entities
            .iter()
            .filter(|e| e.relation == relation && e.role == Role::First)
            .collect();
        let seconds: Vec<&TaggedEntity> = entities
            .iter()
            .filter(|e| e.relation == relation && e.role == Role::Second)
            .collect();
        let pairs = pair_nearest(&firsts, &seconds);
        counts.paired += 2 * pairs.len();
        counts.single_e1 += firsts.len() - pairs.len();
        counts.single_e2 += seconds.len() - pairs.len();
        for (i, j) in pairs {
            triplets.push(Triplet::new(
                firsts[i].mention,
                relation.to_string(),
                seconds[j].mention,
            ));
        }
    }
    triplets.sort_by_key(|t| (t.e1.start, t.e2.start));
    (triplets, counts)
}

/// Counts entities left unmatched by [`decode`], split by role.
pub fn count_singles(tags: &[Tag]) -> SingleCounts {
    decode_with_singles(tags).1
}
