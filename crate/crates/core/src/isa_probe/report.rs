//! CSV renderings of probe results.

use super::metrics::{CurvePoint, InheritanceScores, Ratio, TransitivitySummary};
use super::query::RelationOutcome;
use crate::error::Result;

fn fmt_value(r: &Ratio) -> String {
    r.value().map(|v| v.to_string()).unwrap_or_default()
}

/// `k,<value_column>,hits,total`, one row per k.
pub fn curve_csv(points: &[CurvePoint], value_column: &str) -> String {
    let mut out = format!("k,{value_column},hits,total\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.k,
            fmt_value(&p.ratio),
            p.ratio.hits,
            p.ratio.total
        ));
    }
    out
}

/// The three conditional property-inheritance rates as a single row.
pub fn inheritance_csv(s: &InheritanceScores) -> String {
    format!(
        "hyper_to_et,hyper_to_hypo,hyper_to_hypo_given_et\n{},{},{}\n",
        fmt_value(&s.hyper_to_et),
        fmt_value(&s.hyper_to_hypo),
        fmt_value(&s.hyper_to_hypo_given_et)
    )
}

pub fn transitivity_csv(s: &TransitivitySummary) -> String {
    format!(
        "mean_retrieval,n_ets,n_relations\n{},{},{}\n",
        fmt_value(&s.ratio),
        s.n_ets,
        s.n_relations
    )
}

/// One row per queried relation.
pub fn outcomes_csv(outcomes: &[RelationOutcome]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["child", "parent", "mode", "query", "k", "rank", "verdict"])?;
    for o in outcomes {
        let mode = serde_json::to_value(o.outcome.mode)?;
        let verdict = o
            .outcome
            .verdict
            .map(|v| serde_json::to_value(v).map(|v| v.as_str().unwrap_or_default().to_string()))
            .transpose()?
            .unwrap_or_default();
        w.write_record([
            o.relation.child.as_str(),
            o.relation.parent.as_str(),
            mode.as_str().unwrap_or_default(),
            o.outcome.query.as_str(),
            &o.outcome.k.to_string(),
            &o.outcome.rank.map(|r| r.to_string()).unwrap_or_default(),
            &verdict,
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
