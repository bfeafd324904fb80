use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{IsARelation, Ontology, PropertyTriplet};
use super::query::{Prober, QueryOutcome, RelationOutcome};
use crate::backend::{Backend, MASK};
use crate::error::{Error, Result};
use crate::pipeline::mask_first_occurrence;

/// Saliency cut-off for property triplets.
pub const DEFAULT_SALIENCY_THRESHOLD: f64 = 0.9;
/// List length used for transitivity and inheritance in masked mode.
pub const DEFAULT_PROBE_K: usize = 50;

/// A count of successes over a denominator. The value is undefined when
/// the denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub hits: usize,
    pub total: usize,
}

impl Ratio {
    pub fn value(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }

    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.hits += usize::from(hit);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub ratio: Ratio,
}

/// Fraction of relations retrieved at every k in `1..=k_max`.
pub fn retrieval_curve(outcomes: &[RelationOutcome], k_max: usize) -> Vec<CurvePoint> {
    (1..=k_max)
        .map(|k| {
            let mut ratio = Ratio::default();
            for o in outcomes {
                ratio.add(o.retrieved_at(k));
            }
            CurvePoint { k, ratio }
        })
        .collect()
}

/// Queries every relation on one side of the ontology with the prober's k
/// and returns its retrieval curve together with the outcome log.
pub fn retrieval_curve_for(
    ontology: &Ontology,
    prober: &Prober,
    direction: super::data::Direction,
) -> Result<(Vec<CurvePoint>, Vec<RelationOutcome>)> {
    let outcomes = prober.query_all(&ontology.relations(direction))?;
    Ok((retrieval_curve(&outcomes, prober.k), outcomes))
}

/// A correctly retrieved relation and the query in the opposite direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryRecord {
    pub forward: RelationOutcome,
    pub reverse: RelationOutcome,
}

/// Queries the reverse of every forward outcome retrieved at the prober's k.
pub fn probe_asymmetry(
    forward: &[RelationOutcome],
    prober: &Prober,
) -> Result<Vec<AsymmetryRecord>> {
    let kept: Vec<&RelationOutcome> = forward
        .iter()
        .filter(|o| o.retrieved_at(prober.k))
        .collect();
    kept.par_iter()
        .map(|f| {
            Ok(AsymmetryRecord {
                forward: (*f).clone(),
                reverse: prober.query(&f.relation.reversed())?,
            })
        })
        .collect()
}

/// Among relations retrieved at `k`, the share whose reverse is not retrieved at `k`.
pub fn asymmetry_at(records: &[AsymmetryRecord], k: usize) -> Ratio {
    let mut ratio = Ratio::default();
    for r in records.iter().filter(|r| r.forward.retrieved_at(k)) {
        ratio.add(!r.reverse.retrieved_at(k));
    }
    ratio
}

pub fn asymmetry_curve(records: &[AsymmetryRecord], k_max: usize) -> Vec<CurvePoint> {
    (1..=k_max)
        .map(|k| CurvePoint {
            k,
            ratio: asymmetry_at(records, k),
        })
        .collect()
}

/// Share of `retrieved` relations whose reversed query is not retrieved.
pub fn asymmetry_score(
    retrieved: &[IsARelation],
    prober: &Prober,
) -> Result<(Ratio, Vec<RelationOutcome>)> {
    if retrieved.is_empty() {
        return Err(Error::InvalidInput(
            "asymmetry needs at least one retrieved relation".into(),
        ));
    }
    let reversed: Vec<IsARelation> = retrieved.iter().map(IsARelation::reversed).collect();
    let outcomes = prober.query_all(&reversed)?;
    let mut ratio = Ratio::default();
    for o in &outcomes {
        ratio.add(!o.retrieved_at(prober.k));
    }
    Ok((ratio, outcomes))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransitivityTriple {
    pub hyponym: String,
    pub et: String,
    pub hypernym: String,
}

impl TransitivityTriple {
    pub fn direct(&self) -> Result<IsARelation> {
        IsARelation::new(&self.hyponym, &self.hypernym)
    }
}

/// Triples whose two links were both retrieved at `k`.
pub fn transitive_triples(
    ontology: &Ontology,
    upper: &[RelationOutcome],
    lower: &[RelationOutcome],
    k: usize,
) -> Vec<TransitivityTriple> {
    let hit = |log: &[RelationOutcome]| -> BTreeSet<IsARelation> {
        log.iter()
            .filter(|o| o.retrieved_at(k))
            .map(|o| o.relation.clone())
            .collect()
    };
    let (up, down) = (hit(upper), hit(lower));
    let mut out = Vec::new();
    for e in &ontology.entries {
        for h in &e.hypernyms {
            let Ok(u) = IsARelation::new(&e.et, h) else {
                continue;
            };
            if !up.contains(&u) {
                continue;
            }
            for y in &e.hyponyms {
                let Ok(d) = IsARelation::new(y, &e.et) else {
                    continue;
                };
                if down.contains(&d) && !y.eq_ignore_ascii_case(h) {
                    out.push(TransitivityTriple {
                        hyponym: y.clone(),
                        et: e.et.clone(),
                        hypernym: h.clone(),
                    });
                }
            }
        }
    }
    out
}

/// One candidate triple with all three query outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityRecord {
    pub triple: TransitivityTriple,
    pub upper: QueryOutcome,
    pub lower: QueryOutcome,
    pub direct: QueryOutcome,
}

/// Queries the direct hyponym-hypernym relation for every triple whose links
/// were retrieved at the prober's k.
pub fn probe_transitivity(
    ontology: &Ontology,
    upper: &[RelationOutcome],
    lower: &[RelationOutcome],
    prober: &Prober,
) -> Result<Vec<TransitivityRecord>> {
    let by_rel = |log: &[RelationOutcome]| -> HashMap<IsARelation, QueryOutcome> {
        log.iter()
            .map(|o| (o.relation.clone(), o.outcome.clone()))
            .collect()
    };
    let (up, down) = (by_rel(upper), by_rel(lower));
    transitive_triples(ontology, upper, lower, prober.k)
        .par_iter()
        .map(|t| {
            let direct = prober.query(&t.direct()?)?;
            Ok(TransitivityRecord {
                upper: up[&IsARelation::new(&t.et, &t.hypernym)?].clone(),
                lower: down[&IsARelation::new(&t.hyponym, &t.et)?].clone(),
                direct: direct.outcome,
                triple: t.clone(),
            })
        })
        .collect()
}

/// Mean retrieval of the direct relation, with the number of distinct ETs
/// and of relations it is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitivitySummary {
    pub ratio: Ratio,
    pub n_ets: usize,
    pub n_relations: usize,
}

pub fn transitivity_at(records: &[TransitivityRecord], k: usize) -> TransitivitySummary {
    let mut ratio = Ratio::default();
    let mut ets = BTreeSet::new();
    for r in records
        .iter()
        .filter(|r| r.upper.believed_at(k) && r.lower.believed_at(k))
    {
        ratio.add(r.direct.believed_at(k));
        ets.insert(r.triple.et.as_str());
    }
    TransitivitySummary {
        ratio,
        n_ets: ets.len(),
        n_relations: ratio.total,
    }
}

pub fn transitivity_curve(records: &[TransitivityRecord], k_max: usize) -> Vec<CurvePoint> {
    (1..=k_max)
        .map(|k| CurvePoint {
            k,
            ratio: transitivity_at(records, k).ratio,
        })
        .collect()
}

/// Share of `triples` whose direct relation is retrieved.
pub fn transitivity_score(
    triples: &[TransitivityTriple],
    prober: &Prober,
) -> Result<(Ratio, Vec<RelationOutcome>)> {
    let direct = triples
        .iter()
        .map(TransitivityTriple::direct)
        .collect::<Result<Vec<_>>>()?;
    let outcomes = prober.query_all(&direct)?;
    let mut ratio = Ratio::default();
    for o in &outcomes {
        ratio.add(o.retrieved_at(prober.k));
    }
    Ok((ratio, outcomes))
}

/// Turns a property triplet into a plain sentence mentioning its object
/// and subject.
pub trait SentenceBuilder: Sync {
    /// `None` when no usable sentence can be produced.
    fn statement(&self, t: &PropertyTriplet) -> Result<Option<String>>;
}

/// `"<object> <predicate> <subject>."`
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateSentences;

impl SentenceBuilder for TemplateSentences {
    fn statement(&self, t: &PropertyTriplet) -> Result<Option<String>> {
        Ok(Some(format!("{} {} {}.", t.object, t.predicate, t.subject)))
    }
}

/// First backend paraphrase of the template sentence that still mentions
/// both the object and the subject.
#[derive(Debug, Clone)]
pub struct ParaphrasedSentences<'a> {
    pub backend: &'a Backend,
}

impl SentenceBuilder for ParaphrasedSentences<'_> {
    fn statement(&self, t: &PropertyTriplet) -> Result<Option<String>> {
        let Some(template) = TemplateSentences.statement(t)? else {
            return Ok(None);
        };
        Ok(self.backend.paraphrase(&template)?.into_iter().find(|p| {
            mask_first_occurrence(p, &t.object).is_some()
                && mask_first_occurrence(p, &t.subject).is_some()
        }))
    }
}

/// Replaces the first whole-word occurrence of `from` with `to`.
pub fn substitute_term(statement: &str, from: &str, to: &str) -> Option<String> {
    mask_first_occurrence(statement, from).map(|m| m.replacen(MASK, to, 1))
}

/// Masked sentence (subject masked) and question for `statement` about `concept`.
pub fn property_queries(
    statement: &str,
    t: &PropertyTriplet,
    concept: &str,
) -> Option<(String, String)> {
    let about = substitute_term(statement, &t.object, concept)?;
    let masked = mask_first_occurrence(&about, &t.subject)?;
    let question = format!("{}?", about.trim().trim_end_matches(['.', '!', '?']));
    Some((masked, question))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Hypernym,
    Et,
    Hyponym,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InheritanceRecord {
    /// Index into the saliency-filtered triplet list.
    pub triplet: usize,
    pub level: Level,
    pub concept: String,
    /// The ET this record belongs to (absent for hypernym-level records).
    pub et: Option<String>,
    #[serde(flatten)]
    pub outcome: QueryOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InheritanceLog {
    pub triplets: Vec<PropertyTriplet>,
    pub statements: Vec<Option<String>>,
    pub records: Vec<InheritanceRecord>,
}

/// Queries hypernym properties, then (where the hypernym-level property is
/// believed) the same property for each ET under it and for its hyponyms.
pub fn probe_inheritance(
    ontology: &Ontology,
    triplets: &[PropertyTriplet],
    prober: &Prober,
    saliency_threshold: f64,
    builder: &dyn SentenceBuilder,
) -> Result<InheritanceLog> {
    let triplets: Vec<PropertyTriplet> = triplets
        .iter()
        .filter(|t| t.saliency >= saliency_threshold)
        .cloned()
        .collect();
    let statements = triplets
        .par_iter()
        .map(|t| builder.statement(t))
        .collect::<Result<Vec<_>>>()?;

    struct Job<'a> {
        triplet: usize,
        level: Level,
        concept: &'a str,
        et: Option<&'a str>,
    }
    let run = |jobs: Vec<Job>| -> Result<Vec<InheritanceRecord>> {
        let done = jobs
            .par_iter()
            .map(|j| {
                let t = &triplets[j.triplet];
                let Some(statement) = statements[j.triplet].as_deref() else {
                    return Ok(None);
                };
                let Some((masked, question)) = property_queries(statement, t, j.concept) else {
                    log::warn!(
                        "cannot mask {:?} in {statement:?} for {:?}; skipped",
                        t.subject,
                        j.concept
                    );
                    return Ok(None);
                };
                Ok(Some(InheritanceRecord {
                    triplet: j.triplet,
                    level: j.level,
                    concept: j.concept.to_string(),
                    et: j.et.map(str::to_string),
                    outcome: prober.run(&masked, &t.subject, &question)?,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(done.into_iter().flatten().collect())
    };

    let mut top_jobs = Vec::new();
    for (i, t) in triplets.iter().enumerate() {
        if statements[i].is_none() {
            log::warn!(
                "no sentence for triplet {i} ({} {} {}); skipped",
                t.object,
                t.predicate,
                t.subject
            );
            continue;
        }
        if ontology
            .entries
            .iter()
            .any(|e| e.hypernyms.contains(&t.object))
        {
            top_jobs.push(Job {
                triplet: i,
                level: Level::Hypernym,
                concept: &t.object,
                et: None,
            });
        }
    }
    let top = run(top_jobs)?;

    let mut jobs = Vec::new();
    for r in top.iter().filter(|r| r.outcome.believed()) {
        let t = &triplets[r.triplet];
        for e in ontology
            .entries
            .iter()
            .filter(|e| e.hypernyms.contains(&t.object))
        {
            jobs.push(Job {
                triplet: r.triplet,
                level: Level::Et,
                concept: &e.et,
                et: Some(&e.et),
            });
            for h in &e.hyponyms {
                jobs.push(Job {
                    triplet: r.triplet,
                    level: Level::Hyponym,
                    concept: h,
                    et: Some(&e.et),
                });
            }
        }
    }
    let below = run(jobs)?;
    let mut records = top;
    records.extend(below);
    Ok(InheritanceLog {
        triplets,
        statements,
        records,
    })
}

/// The three conditional inheritance rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InheritanceScores {
    /// Property believed for the hypernym, also believed for the ET.
    pub hyper_to_et: Ratio,
    /// ... also believed for a hyponym of the ET.
    pub hyper_to_hypo: Ratio,
    /// ... believed for a hyponym, given it was believed for the ET.
    pub hyper_to_hypo_given_et: Ratio,
}

pub fn inheritance_at(log: &InheritanceLog, k: usize) -> InheritanceScores {
    let believed_hyper: BTreeSet<usize> = log
        .records
        .iter()
        .filter(|r| r.level == Level::Hypernym && r.outcome.believed_at(k))
        .map(|r| r.triplet)
        .collect();
    let believed_et: BTreeSet<(usize, &str)> = log
        .records
        .iter()
        .filter(|r| r.level == Level::Et && r.outcome.believed_at(k))
        .filter_map(|r| Some((r.triplet, r.et.as_deref()?)))
        .collect();
    let mut s = InheritanceScores {
        hyper_to_et: Ratio::default(),
        hyper_to_hypo: Ratio::default(),
        hyper_to_hypo_given_et: Ratio::default(),
    };
    for r in log
        .records
        .iter()
        .filter(|r| believed_hyper.contains(&r.triplet))
    {
        let hit = r.outcome.believed_at(k);
        match r.level {
            Level::Hypernym => {}
            Level::Et => s.hyper_to_et.add(hit),
            Level::Hyponym => {
                s.hyper_to_hypo.add(hit);
                let et = r.et.as_deref().unwrap_or_default();
                if believed_et.contains(&(r.triplet, et)) {
                    s.hyper_to_hypo_given_et.add(hit);
                }
            }
        }
    }
    s
}

pub fn inheritance_scores(
    ontology: &Ontology,
    triplets: &[PropertyTriplet],
    prober: &Prober,
    saliency_threshold: f64,
    builder: &dyn SentenceBuilder,
) -> Result<(InheritanceScores, InheritanceLog)> {
    let log = probe_inheritance(ontology, triplets, prober, saliency_threshold, builder)?;
    Ok((inheritance_at(&log, prober.k), log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistractorKind {
    /// "Is <ET> a type of <another ET's hypernym>?"
    EtWithForeignHypernym,
    /// "Is <hyponym> a type of <different ET>?"
    HyponymWithForeignEt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distractor {
    pub kind: DistractorKind,
    pub relation: IsARelation,
}

/// Negative questions that balance an annotation sheet; never scored.
/// Up to `per_kind` of each kind, sampled with `seed`.
pub fn distractor_questions(ontology: &Ontology, per_kind: usize, seed: u64) -> Vec<Distractor> {
    let mut foreign_hyper = BTreeSet::new();
    let mut foreign_et = BTreeSet::new();
    for a in &ontology.entries {
        for b in ontology.entries.iter().filter(|b| b.et != a.et) {
            for h in b.hypernyms.iter().filter(|h| !a.hypernyms.contains(h)) {
                foreign_hyper.extend(IsARelation::new(&a.et, h).ok());
            }
            for y in a.hyponyms.iter().filter(|y| !b.hyponyms.contains(y)) {
                foreign_et.extend(IsARelation::new(y, &b.et).ok());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (kind, pool) in [
        (DistractorKind::EtWithForeignHypernym, foreign_hyper),
        (DistractorKind::HyponymWithForeignEt, foreign_et),
    ] {
        let mut pool: Vec<IsARelation> = pool.into_iter().collect();
        pool.shuffle(&mut rng);
        out.extend(
            pool.into_iter()
                .take(per_kind)
                .map(|relation| Distractor { kind, relation }),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(object: &str, subject: &str) -> PropertyTriplet {
        PropertyTriplet {
            object: object.into(),
            predicate: "affect".into(),
            subject: subject.into(),
            saliency: 1.0,
        }
    }

    #[test]
    fn ratio_value() {
        assert_eq!(Ratio::default().value(), None);
        assert_eq!(Ratio { hits: 3, total: 4 }.value(), Some(0.75));
    }

    #[test]
    fn property_sentences() {
        let trip = t("footwear", "skeletal system");
        let statement = "The skeletal system is affected by footwear.";
        let (masked, question) = property_queries(statement, &trip, "sandal").unwrap();
        assert_eq!(masked, "The [MASK] is affected by sandal.");
        assert_eq!(question, "The skeletal system is affected by sandal?");
        assert!(property_queries("Nothing relevant.", &trip, "sandal").is_none());
        assert_eq!(
            TemplateSentences.statement(&trip).unwrap().unwrap(),
            "footwear affect skeletal system."
        );
    }

    #[test]
    fn distractors_avoid_true_relations() {
        let o = Ontology::new(vec![
            super::super::data::OntologyEntry {
                et: "shoe".into(),
                hypernyms: vec!["footwear".into()],
                hyponyms: vec!["sandal".into(), "oxford".into()],
            },
            super::super::data::OntologyEntry {
                et: "dog".into(),
                hypernyms: vec!["canine".into()],
                hyponyms: vec!["corgi".into()],
            },
        ])
        .unwrap();
        let d = distractor_questions(&o, 20, 1);
        assert_eq!(d.len(), 2 + 3);
        for q in &d {
            assert!(!o
                .relations(super::super::data::Direction::Hypernym)
                .contains(&q.relation));
            assert!(!o
                .relations(super::super::data::Direction::Hyponym)
                .contains(&q.relation));
        }
        assert_eq!(d, distractor_questions(&o, 20, 1));
        assert_eq!(distractor_questions(&o, 1, 1).len(), 2);
    }
}
