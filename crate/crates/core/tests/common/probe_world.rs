//! A scripted 10-ET world: one ranked list per masked sentence and one answer
//! per question, generated from a seed. Probe metrics are recounted from the
//! script itself.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use concept_core::backend::{Backend, Endpoint, FixtureEntry, FixtureMode, FixtureStore};
use concept_core::isa_probe::{
    asymmetry_at, asymmetry_curve, inheritance_at, probe_asymmetry, probe_inheritance,
    probe_transitivity, retrieval_curve, transitivity_at, Direction, Ontology, OntologyEntry,
    Prober, PropertyTriplet, QueryMode, Ratio, TemplateSentences,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const K: usize = 20;

pub struct World {
    pub ontology: Ontology,
    pub triplets: Vec<PropertyTriplet>,
    pub lists: BTreeMap<String, Vec<String>>,
    pub answers: BTreeMap<String, String>,
}

impl World {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for i in 0..10 {
            let mut hypernyms = vec![format!("h{}", i % 4)];
            if i < 3 {
                hypernyms.push("thing".to_string());
            }
            let hyponyms = (0..1 + i % 3).map(|j| format!("y{i}_{j}")).collect();
            entries.push(OntologyEntry {
                et: format!("e{i}"),
                hypernyms,
                hyponyms,
            });
        }
        let ontology = Ontology::new(entries).unwrap();
        let mut terms: BTreeSet<String> = BTreeSet::new();
        for e in &ontology.entries {
            terms.insert(e.et.clone());
            terms.extend(e.hypernyms.iter().cloned());
            terms.extend(e.hyponyms.iter().cloned());
        }
        let terms: Vec<String> = terms.into_iter().collect();

        let mut lists = BTreeMap::new();
        let mut answers = BTreeMap::new();
        let answer_texts = ["Yes.", "yes, it is", "No.", "no", "Maybe"];
        for child in &terms {
            // biased toward the child's true parents so hits are common
            let mut pool: Vec<String> = terms.iter().filter(|t| *t != child).cloned().collect();
            pool.shuffle(&mut rng);
            let mut list: Vec<String> = pool.into_iter().take(10).collect();
            for e in &ontology.entries {
                let parents: Vec<&String> = if &e.et == child {
                    e.hypernyms.iter().collect()
                } else if e.hyponyms.contains(child) {
                    std::iter::once(&e.et).chain(e.hypernyms.iter()).collect()
                } else {
                    vec![]
                };
                for p in parents {
                    if rng.random_bool(0.8) && !list.contains(p) {
                        list.push(p.clone());
                    }
                }
            }
            list.extend((0..K).map(|i| format!("filler{i}")));
            list.truncate(K + 5);
            list.shuffle(&mut rng);
            lists.insert(format!("{child} is a type of [MASK]."), list);
            for parent in terms.iter().filter(|t| *t != child) {
                let a = answer_texts[rng.random_range(0..answer_texts.len())];
                answers.insert(format!("Is {child} a type of {parent}?"), a.to_string());
            }
        }

        let mut triplets = Vec::new();
        for t in 0..12 {
            let object = ["h0", "h1", "h2", "h3", "thing", "unrelated"][t % 6].to_string();
            triplets.push(PropertyTriplet {
                object,
                predicate: format!("p{t}"),
                subject: format!("s{t}"),
                saliency: if t % 5 == 4 { 0.5 } else { 0.95 },
            });
        }
        for (t, trip) in triplets.iter().enumerate() {
            for c in &terms {
                let mut list: Vec<String> = (0..K).map(|i| format!("filler{i}")).collect();
                if rng.random_bool(0.7) {
                    let pos = rng.random_range(0..list.len());
                    list.insert(pos, trip.subject.clone());
                }
                lists.insert(format!("{c} p{t} [MASK]."), list);
                let a = answer_texts[rng.random_range(0..answer_texts.len())];
                answers.insert(format!("{c} p{t} {}?", trip.subject), a.to_string());
            }
        }
        World {
            ontology,
            triplets,
            lists,
            answers,
        }
    }

    pub fn backend(&self) -> Backend {
        let mut entries = vec![FixtureEntry {
            endpoint: Endpoint::Describe,
            request: json!({}),
            response: json!({"model_name": "scripted", "embedding_dim": 4, "max_k": K}),
        }];
        for (sentence, list) in &self.lists {
            let completions: Vec<_> = list
                .iter()
                .enumerate()
                .map(|(i, t)| json!({"token": t, "score": 0.5 / (i as f64 + 1.0), "is_subword": false}))
                .collect();
            entries.push(FixtureEntry {
                endpoint: Endpoint::Complete,
                request: json!({"sentence": sentence, "k": K}),
                response: json!({ "completions": completions }),
            });
        }
        for (question, answer) in &self.answers {
            entries.push(FixtureEntry {
                endpoint: Endpoint::Ask,
                request: json!({ "question": question }),
                response: json!({ "answer": answer }),
            });
        }
        Backend::new(Arc::new(FixtureStore::from_entries(
            FixtureMode::Replay,
            &entries,
        )))
    }

    /// Brute-force belief straight from the scripted data.
    pub fn isa(&self, child: &str, parent: &str, mode: QueryMode, k: usize) -> bool {
        match mode {
            QueryMode::Masked => self.lists[&format!("{child} is a type of [MASK].")]
                .iter()
                .take(k)
                .any(|t| t == parent),
            QueryMode::Binary => self.answers[&format!("Is {child} a type of {parent}?")]
                .to_lowercase()
                .starts_with("yes"),
        }
    }

    pub fn property(&self, t: usize, concept: &str, mode: QueryMode, k: usize) -> bool {
        let subject = &self.triplets[t].subject;
        match mode {
            QueryMode::Masked => self.lists[&format!("{concept} p{t} [MASK].")]
                .iter()
                .take(k)
                .any(|x| x == subject),
            QueryMode::Binary => self.answers[&format!("{concept} p{t} {subject}?")]
                .to_lowercase()
                .starts_with("yes"),
        }
    }

    pub fn hyper_pairs(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        for e in &self.ontology.entries {
            for h in &e.hypernyms {
                v.push((e.et.clone(), h.clone()));
            }
        }
        v
    }
}

pub fn ratio(hits: usize, total: usize) -> Ratio {
    Ratio { hits, total }
}

/// Retrieval, asymmetry and transitivity at every k against counts taken
/// straight from the scripted lists and answers.
pub fn check_curves_recount() {
    for (seed, mode) in [
        (1, QueryMode::Masked),
        (2, QueryMode::Masked),
        (3, QueryMode::Binary),
    ] {
        let w = World::generate(seed);
        let backend = w.backend();
        let prober = Prober::new(&backend, mode, K).unwrap();
        let upper = prober
            .query_all(&w.ontology.relations(Direction::Hypernym))
            .unwrap();
        let lower = prober
            .query_all(&w.ontology.relations(Direction::Hyponym))
            .unwrap();
        let asym = probe_asymmetry(&upper, &prober).unwrap();
        let trans = probe_transitivity(&w.ontology, &upper, &lower, &prober).unwrap();
        let curve = retrieval_curve(&upper, K);
        let asym_curve = asymmetry_curve(&asym, K);
        let pairs = w.hyper_pairs();

        for k in 1..=K {
            let hits = pairs.iter().filter(|(c, p)| w.isa(c, p, mode, k)).count();
            assert_eq!(
                curve[k - 1].ratio,
                ratio(hits, pairs.len()),
                "seed {seed} k {k} retrieval"
            );

            let kept: Vec<_> = pairs.iter().filter(|(c, p)| w.isa(c, p, mode, k)).collect();
            let preserved = kept.iter().filter(|(c, p)| !w.isa(p, c, mode, k)).count();
            assert_eq!(
                asymmetry_at(&asym, k),
                ratio(preserved, kept.len()),
                "seed {seed} k {k} asymmetry"
            );
            assert_eq!(asym_curve[k - 1].ratio, ratio(preserved, kept.len()));

            let mut total = 0;
            let mut direct = 0;
            let mut ets = BTreeSet::new();
            for e in &w.ontology.entries {
                for h in &e.hypernyms {
                    for y in &e.hyponyms {
                        if w.isa(&e.et, h, mode, k) && w.isa(y, &e.et, mode, k) {
                            total += 1;
                            ets.insert(&e.et);
                            direct += usize::from(w.isa(y, h, mode, k));
                        }
                    }
                }
            }
            let got = transitivity_at(&trans, k);
            assert_eq!(
                got.ratio,
                ratio(direct, total),
                "seed {seed} k {k} transitivity"
            );
            assert_eq!((got.n_ets, got.n_relations), (ets.len(), total));
        }
        if mode == QueryMode::Binary {
            assert!(curve.windows(2).all(|p| p[0].ratio == p[1].ratio));
        } else {
            assert!(curve.windows(2).all(|p| p[0].ratio.hits <= p[1].ratio.hits));
            assert!(curve[K - 1].ratio.hits > curve[0].ratio.hits);
        }
        assert!(
            trans.len() > 3 && asym.len() > 3,
            "seed {seed}: fixture too sparse to be informative"
        );
    }
}

/// The three inheritance rates at several k against a direct recount.
pub fn check_inheritance_recount() {
    for (seed, mode) in [
        (5, QueryMode::Masked),
        (6, QueryMode::Masked),
        (7, QueryMode::Binary),
    ] {
        let w = World::generate(seed);
        let backend = w.backend();
        let prober = Prober::new(&backend, mode, K).unwrap();
        let log =
            probe_inheritance(&w.ontology, &w.triplets, &prober, 0.9, &TemplateSentences).unwrap();
        // low-saliency triplets are dropped before indexing
        assert_eq!(
            log.triplets.len(),
            w.triplets.iter().filter(|t| t.saliency >= 0.9).count()
        );
        for k in [1, 3, 7, 12, K] {
            let (mut m1, mut m2, mut m3) = (ratio(0, 0), ratio(0, 0), ratio(0, 0));
            for (t, trip) in w.triplets.iter().enumerate() {
                let has_ets = w
                    .ontology
                    .entries
                    .iter()
                    .any(|e| e.hypernyms.contains(&trip.object));
                if trip.saliency < 0.9 || !has_ets || !w.property(t, &trip.object, mode, k) {
                    continue;
                }
                for e in w
                    .ontology
                    .entries
                    .iter()
                    .filter(|e| e.hypernyms.contains(&trip.object))
                {
                    let et_ok = w.property(t, &e.et, mode, k);
                    m1.total += 1;
                    m1.hits += usize::from(et_ok);
                    for y in &e.hyponyms {
                        let y_ok = w.property(t, y, mode, k);
                        m2.total += 1;
                        m2.hits += usize::from(y_ok);
                        if et_ok {
                            m3.total += 1;
                            m3.hits += usize::from(y_ok);
                        }
                    }
                }
            }
            let got = inheritance_at(&log, k);
            assert_eq!(
                (
                    got.hyper_to_et,
                    got.hyper_to_hypo,
                    got.hyper_to_hypo_given_et
                ),
                (m1, m2, m3),
                "seed {seed} k {k}"
            );
            for r in [m1, m2, m3] {
                assert!(r.value().is_none_or(|v| (0.0..=1.0).contains(&v)));
            }
        }
    }
}
