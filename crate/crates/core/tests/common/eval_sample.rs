//! The shipped evaluation sample (2 sentences, 12 tokens ranked by both
//! models, 2 annotators) and the values derived from it by hand.

use std::path::PathBuf;

use concept_core::evaluation::{
    accumulated_for_model, coherence, dispute_scores, heatmap, list_similarity, load_annotations,
    load_rankings, load_static_embeddings, partition_all, score_at_k, threshold_sweep,
    AnnotationRecord, Annotations, Model, RankedList, Zone,
};

pub fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/eval_sample")
}

pub struct Sample {
    pub base: Vec<RankedList>,
    pub concept: Vec<RankedList>,
    pub records: Vec<AnnotationRecord>,
    pub annotations: Annotations,
}

pub fn sample() -> Sample {
    let set = load_rankings(&sample_dir().join("rankings.json")).unwrap();
    let records = load_annotations(&sample_dir().join("annotations.csv")).unwrap();
    Sample {
        base: set.base_lists(),
        concept: set.concept_lists().unwrap(),
        annotations: Annotations::new(&records).unwrap(),
        records,
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

pub fn check_zones_match_hand_assignment() {
    let s = sample();
    let d = partition_all(&s.base, &s.concept, 0.4).unwrap();
    let zones = |i: usize| -> Vec<(String, Zone)> {
        d[i].records
            .iter()
            .map(|r| (r.token.clone(), r.zone))
            .collect()
    };
    let expect = |v: &[(&str, Zone)]| -> Vec<(String, Zone)> {
        v.iter().map(|(t, z)| (t.to_string(), *z)).collect()
    };
    assert_eq!(
        zones(0),
        expect(&[
            ("grandmother", Zone::ConceptHighBaseLow),
            ("friend", Zone::Neither),
            ("sister", Zone::Buffer),
            ("brother", Zone::Buffer),
            ("mom", Zone::BaseHighConceptLow),
            ("dad", Zone::BaseHighConceptLow),
        ])
    );
    assert_eq!(
        zones(1),
        expect(&[
            ("blizzard", Zone::Neither),
            ("cold", Zone::ConceptHighBaseLow),
            ("snow", Zone::Neither),
            ("storm", Zone::Buffer),
            ("traffic", Zone::Buffer),
            ("weather", Zone::BaseHighConceptLow),
        ])
    );
    assert!(d[0].revealed.is_empty());
    assert_eq!(d[1].revealed, vec!["snowfall".to_string()]);
}

pub fn check_score_at_k() {
    let s = sample();
    // concept item scores: s1 (1, 0.75, 0.75, 0.375), s2 (5/6, 1, 0.5, 0.25)
    assert!(close(
        score_at_k(&s.concept, &s.annotations, 1).unwrap(),
        (1.0 + 5.0 / 6.0) / 2.0
    ));
    assert!(close(
        score_at_k(&s.concept, &s.annotations, 2).unwrap(),
        (0.875 + 11.0 / 12.0) / 2.0
    ));
    // baseline token scores: s1 (0.75, 0, 1, 0.5, 0.75, 1), s2 (1, 0.25, 0.75, 0.25, 0.75, 1)
    assert!(close(
        score_at_k(&s.base, &s.annotations, 1).unwrap(),
        0.875
    ));
    assert!(close(score_at_k(&s.base, &s.annotations, 2).unwrap(), 0.5));
    assert!(close(
        score_at_k(&s.base, &s.annotations, 6).unwrap(),
        (4.0 / 6.0 + 4.0 / 6.0) / 2.0
    ));
}

pub fn check_dispute_scores() {
    let s = sample();
    let d = partition_all(&s.base, &s.concept, 0.4).unwrap();
    let rows = dispute_scores(&d, &s.annotations).unwrap();
    let got: Vec<(Zone, usize)> = rows.iter().map(|r| (r.zone, r.n)).collect();
    assert_eq!(
        got,
        vec![
            (Zone::ConceptHighBaseLow, 2),
            (Zone::Buffer, 4),
            (Zone::BaseHighConceptLow, 3)
        ]
    );
    // buffer means: s1 0.75, s2 0.5
    assert!(close(rows[0].mean, 1.0));
    assert!(close(rows[0].normalized.unwrap(), (0.25 + 0.5) / 2.0));
    assert!(close(rows[1].mean, 0.625));
    assert_eq!(rows[1].normalized, None);
    assert!(close(rows[2].mean, 1.0 / 3.0));
    assert!(close(rows[2].normalized.unwrap(), (-0.375 - 0.25) / 2.0));
}

pub fn check_accumulated_accuracy() {
    let s = sample();
    let d = partition_all(&s.base, &s.concept, 0.4).unwrap();
    let concept = accumulated_for_model(&d, &s.annotations, Model::Concept).unwrap();
    let means: Vec<f64> = concept.curve.iter().map(|p| p.accumulated_mean).collect();
    let expected = [
        1.0,
        1.0,
        1.0,
        7.0 / 8.0,
        17.0 / 20.0,
        0.75,
        0.75,
        21.0 / 32.0,
        11.0 / 18.0,
    ];
    assert!(
        means.iter().zip(expected).all(|(a, b)| close(*a, b)),
        "{means:?}"
    );
    assert!(close(concept.correlation.r, -0.9774004514641469));
    assert!(concept.correlation.p_value < 0.05);

    let base = accumulated_for_model(&d, &s.annotations, Model::Baseline).unwrap();
    let means: Vec<f64> = base.curve.iter().map(|p| p.accumulated_mean).collect();
    let expected = [
        0.75,
        3.0 / 8.0,
        1.0 / 3.0,
        0.5,
        11.0 / 20.0,
        13.0 / 24.0,
        0.5,
        9.0 / 16.0,
        11.0 / 18.0,
    ];
    assert!(
        means.iter().zip(expected).all(|(a, b)| close(*a, b)),
        "{means:?}"
    );
    assert!(close(base.correlation.r, 0.14184959910168132));
}

pub fn check_threshold_sweep() {
    let s = sample();
    let points = threshold_sweep(&s.base, &s.concept, &s.annotations, &[0.2, 0.4, 0.9]).unwrap();
    let got: Vec<(f64, Model, usize)> = points.iter().map(|p| (p.width, p.model, p.n)).collect();
    assert_eq!(
        got,
        vec![
            (0.2, Model::Concept, 4),
            (0.2, Model::Baseline, 3),
            (0.4, Model::Concept, 2),
            (0.4, Model::Baseline, 3),
        ]
    );
    let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
    assert!(means
        .iter()
        .zip([0.875, 1.0 / 3.0, 1.0, 1.0 / 3.0])
        .all(|(a, b)| close(*a, b)));
    assert!(threshold_sweep(&s.base, &s.concept, &s.annotations, &[0.4, 0.2]).is_err());
}

pub fn check_heatmap() {
    let s = sample();
    let d = partition_all(&s.base, &s.concept, 0.4).unwrap();
    let cells: Vec<(usize, usize, usize)> = heatmap(&d, &s.annotations, 2)
        .unwrap()
        .iter()
        .map(|c| (c.concept_bin, c.base_bin, c.count))
        .collect();
    assert_eq!(cells, vec![(0, 1, 3), (1, 0, 2), (1, 1, 4)]);
}

pub fn check_coherence() {
    let s = sample();
    let emb = load_static_embeddings(&sample_dir().join("vectors.txt")).unwrap();
    let clusters: Vec<Vec<Vec<String>>> = s.concept.iter().map(|l| l.items.clone()).collect();
    let c = coherence(&clusters, &emb).unwrap();
    let h = 1.0 / 2f64.sqrt();
    assert!(close(c.within, (3.0 + h) / 4.0));
    assert!(close(c.inter, (2.0 + 5.0 * h) / 26.0));
    assert_eq!((c.n_clusters, c.n_inter_pairs), (4, 26));
    // baseline top-3: s1 {mom, dad, sister} -> (1 + 0 + 0) / 3, s2 {snow, weather, storm} -> 0
    let tops: Vec<Vec<String>> = s
        .base
        .iter()
        .map(|l| l.items.iter().take(3).flatten().cloned().collect())
        .collect();
    assert!(close(list_similarity(&tops, &emb).unwrap(), 1.0 / 6.0));
}

pub fn check_annotator_variance() {
    let s = sample();
    // per-item variances: pairs differing by 0.5 give 0.0625, by 1 give 0.25
    let diffs = [
        0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.0, 0.5,
    ];
    let expected = diffs.iter().map(|d: &f64| (d / 2.0).powi(2)).sum::<f64>() / 13.0;
    assert!(close(s.annotations.mean_variance().unwrap(), expected));
    assert_eq!(s.records.len(), 26);
}
