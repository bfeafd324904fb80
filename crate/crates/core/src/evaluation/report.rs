//! CSV renderings of evaluation results.

use super::coherence::Coherence;
use super::disputes::{HeatCell, SweepPoint, ZoneScore};
use super::ranking::{AccumulatedAccuracy, ScorePoint};
use crate::error::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `k,concept,baseline`; both curves must cover the same k values.
pub fn score_at_k_csv(concept: &[ScorePoint], baseline: &[ScorePoint]) -> Result<String> {
    if concept.len() != baseline.len() || concept.iter().zip(baseline).any(|(a, b)| a.k != b.k) {
        return Err(Error::InvalidInput(
            "score curves cover different k values".into(),
        ));
    }
    let mut out = String::from("k,concept,baseline\n");
    for (c, b) in concept.iter().zip(baseline) {
        out.push_str(&format!("{},{},{}\n", c.k, c.score, b.score));
    }
    Ok(out)
}

/// Mean and buffer-normalized score per zone.
pub fn dispute_scores_csv(rows: &[ZoneScore]) -> String {
    let mut out = String::from("zone,mean,normalized\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.zone.as_str(),
            r.mean,
            opt(r.normalized)
        ));
    }
    out
}

pub fn accumulated_csv(curves: &[(&str, &AccumulatedAccuracy)]) -> String {
    let mut out = String::from("model,rank,accumulated_mean\n");
    for (model, acc) in curves {
        for p in &acc.curve {
            out.push_str(&format!("{model},{},{}\n", p.rank, p.accumulated_mean));
        }
    }
    out
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("width,model,mean,n\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.width,
            p.model.as_str(),
            p.mean,
            p.n
        ));
    }
    out
}

pub fn heatmap_csv(cells: &[HeatCell]) -> String {
    let mut out = String::from("concept_bin,base_bin,mean,count\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.concept_bin, c.base_bin, c.mean, c.count
        ));
    }
    out
}

pub fn coherence_csv(c: &Coherence, baseline: Option<f64>) -> String {
    format!(
        "within,inter,baseline\n{},{},{}\n",
        c.within,
        c.inter,
        opt(baseline)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::Zone;

    #[test]
    fn dispute_table_columns() {
        let rows = vec![
            ZoneScore {
                zone: Zone::ConceptHighBaseLow,
                n: 3,
                mean: 0.75,
                normalized: Some(0.25),
                n_normalized_sentences: 1,
            },
            ZoneScore {
                zone: Zone::Buffer,
                n: 2,
                mean: 0.5,
                normalized: None,
                n_normalized_sentences: 0,
            },
        ];
        assert_eq!(
            dispute_scores_csv(&rows),
            "zone,mean,normalized\nCONCEPT_HIGH_BASE_LOW,0.75,0.25\nBUFFER,0.5,\n"
        );
    }

    #[test]
    fn mismatched_curves_rejected() {
        let a = [ScorePoint { k: 1, score: 1.0 }];
        let b = [ScorePoint { k: 2, score: 1.0 }];
        assert!(score_at_k_csv(&a, &b).is_err());
        assert_eq!(
            score_at_k_csv(&a, &a).unwrap(),
            "k,concept,baseline\n1,1,1\n"
        );
    }
}
