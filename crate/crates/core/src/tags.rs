//! Tag vocabulary for triplet extraction as sequence tagging.
//!
//! Every token gets either the `O` tag or a structured tag made of three
//! parts: the position of the word inside its entity mention (`B`/`I`/`E`/`S`),
//! the relation type, and the relation role (`1` for the first entity of a
//! triplet, `2` for the second). For a relation set of size `|R|` this yields
//! `2 * 4 * |R| + 1` distinct tags.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Index reserved for the `O` (Other) tag in every [`TagVocabulary`].
pub const OTHER_INDEX: usize = 0;

/// The ordered set of relation type names.
///
/// Tag indices depend on the ordering, so it is fixed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl RelationSet {
    /// Builds a relation set from an ordered list of names.
    ///
    /// Names must be non-empty, whitespace-free (they appear inside
    /// space-separated tag files) and unique.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::RelationSet("no relations".into()));
        }
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::RelationSet(format!("empty relation name at position {i}")));
            }
            if name.chars().any(char::is_whitespace) {
                return Err(Error::RelationSet(format!(
                    "relation name `{name}` contains whitespace"
                )));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::RelationSet(format!("duplicate relation name `{name}`")));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

/// Position of a word inside an entity mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Begin,
    Inside,
    End,
    Single,
}

impl Position {
    pub const ALL: [Position; 4] = [
        Position::Begin,
        Position::Inside,
        Position::End,
        Position::Single,
    ];

    fn letter(self) -> char {
        match self {
            Position::Begin => 'B',
            Position::Inside => 'I',
            Position::End => 'E',
            Position::Single => 'S',
        }
    }

    fn from_letter(c: &str) -> Option<Self> {
        match c {
            "B" => Some(Position::Begin),
            "I" => Some(Position::Inside),
            "E" => Some(Position::End),
            "S" => Some(Position::Single),
            _ => None,
        }
    }
}

/// Which side of the triplet the entity occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    First,
    Second,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::First, Role::Second];

    fn digit(self) -> char {
        match self {
            Role::First => '1',
            Role::Second => '2',
        }
    }

    fn from_digit(s: &str) -> Option<Self> {
        match s {
            "1" => Some(Role::First),
            "2" => Some(Role::Second),
            _ => None,
        }
    }
}

/// A per-token label: `O`, or position + relation type + role.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tag {
    Other,
    Entity {
        position: Position,
        relation: String,
        role: Role,
    },
}

impl Tag {
    pub fn entity(position: Position, relation: impl Into<String>, role: Role) -> Self {
        Tag::Entity {
            position,
            relation: relation.into(),
            role,
        }
    }

    pub fn is_other(&self) -> bool {
        matches!(self, Tag::Other)
    }

    /// Parses the text form: `O` or `<POS>-<REL>-<ROLE>`.
    ///
    /// Relation names may themselves contain `-` (e.g. `Country-President`),
    /// so the position is taken from the first segment and the role from the
    /// last.
    pub fn parse(text: &str) -> Result<Self> {
        if text == "O" {
            return Ok(Tag::Other);
        }
        let err = |reason: &str| Error::TagParse {
            tag: text.to_string(),
            reason: reason.to_string(),
        };
        let first_dash = text.find('-').ok_or_else(|| err("expected `O` or `<POS>-<REL>-<ROLE>`"))?;
        let last_dash = text.rfind('-').expect("find succeeded");
        if first_dash == last_dash {
            return Err(err("expected `O` or `<POS>-<REL>-<ROLE>`"));
        }
        let position = Position::from_letter(&text[..first_dash])
            .ok_or_else(|| err("position must be one of B, I, E, S"))?;
        let role = Role::from_digit(&text[last_dash + 1..])
            .ok_or_else(|| err("role must be 1 or 2"))?;
        let relation = &text[first_dash + 1..last_dash];
        if relation.is_empty() {
            return Err(err("empty relation name"));
        }
        Ok(Tag::entity(position, relation, role))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Other => write!(f, "O"),
            Tag::Entity {
                position,
                relation,
                role,
            } => write!(f, "{}-{}-{}", position.letter(), relation, role.digit()),
        }
    }
}

/// Bijection between [`Tag`] values and dense indices `[0, n_tags)`.
///
/// Index 0 is `O`; the rest are ordered by (relation position in the set,
/// role, position with B < I < E < S), which keeps vocabulary files diffable.
#[derive(Debug, Clone)]
pub struct TagVocabulary {
    relations: RelationSet,
    tags: Vec<Tag>,
    index: HashMap<Tag, usize>,
}

/// Builds the tag vocabulary for a relation set: `2 * 4 * |R| + 1` tags.
pub fn build_tag_vocabulary(relations: &RelationSet) -> TagVocabulary {
    let mut tags = Vec::with_capacity(2 * 4 * relations.len() + 1);
    tags.push(Tag::Other);
    for relation in relations.names() {
        for role in Role::ALL {
            for position in Position::ALL {
                tags.push(Tag::entity(position, relation.clone(), role));
            }
        }
    }
    let index = tags
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    TagVocabulary {
        relations: relations.clone(),
        tags,
        index,
    }
}

impl TagVocabulary {
    /// Total number of tags, `2 * 4 * |R| + 1`.
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn relations(&self) -> &RelationSet {
        &self.relations
    }

    pub fn tag(&self, index: usize) -> Option<&Tag> {
        self.tags.get(index)
    }

    pub fn index_of(&self, tag: &Tag) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    /// Converts a slice of indices to tags; errors on out-of-range indices.
    pub fn decode_indices(&self, indices: &[usize]) -> Result<Vec<Tag>> {
        indices
            .iter()
            .map(|&i| {
                self.tag(i)
                    .cloned()
                    .ok_or_else(|| Error::Shape(format!("tag index {i} out of range (n_tags={})", self.len())))
            })
            .collect()
    }

    /// Serializes the vocabulary: one tag text form per line, line number = index.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for tag in &self.tags {
            out.push_str(&tag.to_string());
            out.push('\n');
        }
        out
    }
}
