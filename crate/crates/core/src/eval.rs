//! Triplet-level evaluation: exact matching on (relation, head offsets),
//! element analysis (E1, E2, entity pairs), single-entity ratios, and
//! repeated-run statistics.
//!
//! A predicted triplet is correct when its relation type and both entities'
//! head offsets match a gold triplet; each gold item is matched at most
//! once. Metrics are micro-averaged: counts are accumulated over the whole
//! corpus before precision/recall/F1 are computed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{count_singles, decode, SingleCounts};
use crate::data::{Triplet, TripletRecord};
use crate::error::Result;
use crate::tags::Tag;

/// Raw match counts for one metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCounts {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl ScoreCounts {
    pub fn add(&mut self, other: &ScoreCounts) {
        self.gold += other.gold;
        self.predicted += other.predicted;
        self.correct += other.correct;
    }

    pub fn precision(&self) -> f64 {
        safe_div(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        safe_div(self.correct, self.gold)
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn safe_div(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One metric with its counts and derived rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<ScoreCounts> for MetricReport {
    fn from(c: ScoreCounts) -> Self {
        Self {
            gold: c.gold,
            predicted: c.predicted,
            correct: c.correct,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        }
    }
}

/// Corpus-level evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub triplet: MetricReport,
    pub e1: MetricReport,
    pub e2: MetricReport,
    /// Entity pairs matched on both head offsets, relation type ignored.
    pub entity_pair: MetricReport,
    pub single_e1: usize,
    pub single_e2: usize,
    pub paired_entities: usize,
    pub single_e1_ratio: f64,
    pub single_e2_ratio: f64,
    pub sentences: usize,
}

impl EvalReport {
    /// Flat metric map, used for repeated-run statistics.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for (prefix, metric) in [
            ("triplet", &self.triplet),
            ("e1", &self.e1),
            ("e2", &self.e2),
            ("entity_pair", &self.entity_pair),
        ] {
            m.insert(format!("{prefix}_precision"), metric.precision);
            m.insert(format!("{prefix}_recall"), metric.recall);
            m.insert(format!("{prefix}_f1"), metric.f1);
        }
        m.insert("single_e1_ratio".into(), self.single_e1_ratio);
        m.insert("single_e2_ratio".into(), self.single_e2_ratio);
        m
    }
}

/// Greedy one-to-one matching of predictions against gold items under an
/// exact key; with exact-match edges this equals maximum bipartite matching.
fn match_exact<K: PartialEq>(gold_keys: &[K], pred_keys: &[K]) -> ScoreCounts {
    let mut used = vec![false; gold_keys.len()];
    let mut correct = 0;
    for pred in pred_keys {
        if let Some(slot) = gold_keys
            .iter()
            .enumerate()
            .position(|(i, g)| !used[i] && g == pred)
        {
            used[slot] = true;
            correct += 1;
        }
    }
    ScoreCounts {
        gold: gold_keys.len(),
        predicted: pred_keys.len(),
        correct,
    }
}

/// Triplet scoring for one sentence: correct iff relation and both head
/// offsets match.
pub fn score_triplets(gold: &[Triplet], pred: &[Triplet]) -> ScoreCounts {
    let gold_keys: Vec<_> = gold
        .iter()
        .map(|t| (t.relation.as_str(), t.e1.head(), t.e2.head()))
        .collect();
    let pred_keys: Vec<_> = pred
        .iter()
        .map(|t| (t.relation.as_str(), t.e1.head(), t.e2.head()))
        .collect();
    match_exact(&gold_keys, &pred_keys)
}

/// Element scoring for one sentence: E1 matches on the first entity's head,
/// E2 on the second's, and the entity pair on both heads with the relation
/// ignored. Matching is role-sensitive throughout: a pair predicted with
/// swapped roles is wrong on all three.
pub fn score_elements(gold: &[Triplet], pred: &[Triplet]) -> (ScoreCounts, ScoreCounts, ScoreCounts) {
    let e1 = match_exact(
        &gold.iter().map(|t| t.e1.head()).collect::<Vec<_>>(),
        &pred.iter().map(|t| t.e1.head()).collect::<Vec<_>>(),
    );
    let e2 = match_exact(
        &gold.iter().map(|t| t.e2.head()).collect::<Vec<_>>(),
        &pred.iter().map(|t| t.e2.head()).collect::<Vec<_>>(),
    );
    let pair = match_exact(
        &gold.iter().map(|t| (t.e1.head(), t.e2.head())).collect::<Vec<_>>(),
        &pred.iter().map(|t| (t.e1.head(), t.e2.head())).collect::<Vec<_>>(),
    );
    (e1, e2, pair)
}

/// One sentence's gold triplets and prediction, ready for aggregation.
#[derive(Debug, Clone)]
pub struct SentenceEval {
    pub gold: Vec<Triplet>,
    pub pred: Vec<Triplet>,
    pub singles: SingleCounts,
}

impl SentenceEval {
    /// Builds the evaluation view from a predicted tag sequence: decodes
    /// triplets and counts unpaired entities.
    pub fn from_tags(gold: Vec<Triplet>, pred_tags: &[Tag]) -> Self {
        let pred = decode(pred_tags);
        let singles = count_singles(pred_tags);
        Self { gold, pred, singles }
    }
}

/// Micro-aggregates sentence evaluations into a corpus report.
pub fn aggregate<'a>(sentences: impl IntoIterator<Item = &'a SentenceEval>) -> EvalReport {
    let mut triplet = ScoreCounts::default();
    let mut e1 = ScoreCounts::default();
    let mut e2 = ScoreCounts::default();
    let mut pair = ScoreCounts::default();
    let mut singles = SingleCounts::default();
    let mut n = 0;
    for s in sentences {
        n += 1;
        triplet.add(&score_triplets(&s.gold, &s.pred));
        let (a, b, c) = score_elements(&s.gold, &s.pred);
        e1.add(&a);
        e2.add(&b);
        pair.add(&c);
        singles.add(&s.singles);
    }
    EvalReport {
        triplet: triplet.into(),
        e1: e1.into(),
        e2: e2.into(),
        entity_pair: pair.into(),
        single_e1: singles.single_e1,
        single_e2: singles.single_e2,
        paired_entities: singles.paired,
        single_e1_ratio: singles.single_ratio_e1(),
        single_e2_ratio: singles.single_ratio_e2(),
        sentences: n,
    }
}

/// Wire form of one prediction line (JSON Lines): the sentence, its gold
/// triplets, and the predicted tag sequence in text form.
#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub tokens: Vec<String>,
    pub gold: Vec<TripletRecord>,
    pub tags: Vec<String>,
}

impl PredictionRecord {
    pub fn new(tokens: Vec<String>, gold: &[Triplet], tags: &[Tag]) -> Self {
        Self {
            tokens,
            gold: gold
                .iter()
                .map(|t| TripletRecord {
                    e1: [t.e1.start, t.e1.end],
                    rel: t.relation.clone(),
                    e2: [t.e2.start, t.e2.end],
                })
                .collect(),
            tags: tags.iter().map(ToString::to_string).collect(),
        }
    }

    /// Parses the tag texts and rebuilds the evaluation view.
    pub fn into_sentence_eval(self) -> Result<SentenceEval> {
        let gold = self
            .gold
            .into_iter()
            .map(|t| {
                Ok(Triplet::new(
                    crate::data::EntityMention::new(t.e1[0], t.e1[1])?,
                    t.rel,
                    crate::data::EntityMention::new(t.e2[0], t.e2[1])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let tags = self
            .tags
            .iter()
            .map(|t| Tag::parse(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(SentenceEval::from_tags(gold, &tags))
    }
}

/// Mean and sample standard deviation of one metric over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Per-metric statistics over `n` independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub runs: usize,
    pub metrics: BTreeMap<String, MeanStd>,
}

/// Runs `runner` with seeds `base_seed + 0 .. base_seed + n - 1` and reports
/// the sample mean and standard deviation (n-1 denominator, 0 when n = 1) of
/// every metric it returns.
pub fn repeat_runs(
    n: usize,
    base_seed: u64,
    mut runner: impl FnMut(u64) -> Result<BTreeMap<String, f64>>,
) -> Result<RunStatistics> {
    assert!(n >= 1, "repeat_runs needs at least one run");
    let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for run in 0..n {
        let metrics = runner(base_seed + run as u64)?;
        for (key, value) in metrics {
            samples.entry(key).or_default().push(value);
        }
    }
    let metrics = samples
        .into_iter()
        .map(|(key, values)| (key, mean_std(&values)))
        .collect();
    Ok(RunStatistics { runs: n, metrics })
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}
