//! The shipped parent-teacher fixture run end to end.

use std::path::PathBuf;
use std::sync::Arc;

use concept_core::backend::{
    build_store, read_script, Backend, FixtureMode, FixtureStore, MaskedSentence,
};
use concept_core::concepts::{complete_concepts, ConceptConfig};
use concept_core::pipeline::Stopwords;

pub const SENTENCE: &str = "I went to the parent teacher conference with my [MASK].";

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/parent_teacher")
}

pub fn scripted_backend() -> Backend {
    let script = read_script(&fixture_dir().join("script.json")).unwrap();
    Backend::new(Arc::new(build_store(&script, None).unwrap()))
}

/// The rank-1 concept holds the family terms and no noise token survives.
pub fn check_family_top_concept() {
    let s0 = MaskedSentence::new("s0", SENTENCE).unwrap();
    let run = complete_concepts(
        &s0,
        &scripted_backend(),
        &ConceptConfig::default(),
        &Stopwords::english(),
    )
    .unwrap();
    let doc = &run.document;
    assert_eq!(doc.seed_token, "mother");
    // the "mom" paraphrase has no "mother" to re-mask and the verbatim copy is not a paraphrase
    assert_eq!(doc.m, 4);
    let top = &doc.concepts[0];
    assert_eq!(top.rank, 1);
    for t in ["mom", "mother", "dad"] {
        assert!(
            top.tokens.contains(&t.to_string()),
            "{t} missing from {:?}",
            top.tokens
        );
    }
    for noise in ["boss", "grandma", "coach", "neighbor", "the", "##s"] {
        assert!(!doc.leaves.contains(&noise.to_string()));
    }
}

/// Two replays from the shipped store, a run from the script, and the pinned
/// expected_concepts.json are the same bytes.
pub fn check_replay_byte_identical() {
    let s0 = MaskedSentence::new("s0", SENTENCE).unwrap();
    let cfg = ConceptConfig::default();
    let stop = Stopwords::english();
    let replay = || {
        let store = FixtureStore::open(fixture_dir().join("store.json"), FixtureMode::Replay, None)
            .unwrap();
        complete_concepts(&s0, &Backend::new(Arc::new(store)), &cfg, &stop)
            .unwrap()
            .document
            .to_json()
    };
    let first = replay();
    assert_eq!(first, replay());
    let pinned = std::fs::read_to_string(fixture_dir().join("expected_concepts.json")).unwrap();
    assert!(
        first == pinned,
        "output differs from expected_concepts.json"
    );
    let scripted = complete_concepts(&s0, &scripted_backend(), &cfg, &stop)
        .unwrap()
        .document
        .to_json();
    assert_eq!(first, scripted);
}
