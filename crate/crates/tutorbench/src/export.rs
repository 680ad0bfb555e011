//! PCA projection export for downstream plotting: a flat CSV of 2-D
//! coordinates plus a JSON sidecar with explained-variance ratios and
//! per-model covariance ellipses.

use serde::{Deserialize, Serialize};
use tutorbench_core::ablation::VARIANT_KEYS;
use tutorbench_core::analysis::{fit_pca, group_ellipse, project, AnalysisError, GroupEllipse};

use crate::backends::EmbeddingRecord;

pub const ELLIPSE_SIGMA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub model_name: String,
    pub scenario_id: String,
    pub variant_key: String,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaExport {
    pub explained_variance_ratio: Vec<f64>,
    pub n_sigma: f64,
    pub points: Vec<PcaPoint>,
    pub ellipses: Vec<GroupEllipse>,
}

fn variant_order(key: &str) -> usize {
    VARIANT_KEYS.iter().position(|k| *k == key).unwrap_or(VARIANT_KEYS.len())
}

/// Fits a pooled 2-component PCA over all embeddings and projects every
/// record. Points are ordered by (model, scenario, variant) so re-exports of
/// the same records are byte-identical.
pub fn compute_pca_export(records: &[EmbeddingRecord]) -> Result<PcaExport, AnalysisError> {
    let mut sorted: Vec<&EmbeddingRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.model_name, &a.scenario_id, variant_order(&a.variant_key)).cmp(&(
            &b.model_name,
            &b.scenario_id,
            variant_order(&b.variant_key),
        ))
    });
    let matrix: Vec<Vec<f64>> = sorted.iter().map(|r| r.vector.clone()).collect();
    let model = fit_pca(&matrix, 2)?;
    let projected = project(&model, &matrix)?;
    let points: Vec<PcaPoint> = sorted
        .iter()
        .zip(&projected)
        .map(|(r, coords)| PcaPoint {
            model_name: r.model_name.clone(),
            scenario_id: r.scenario_id.clone(),
            variant_key: r.variant_key.clone(),
            pc1: coords[0],
            pc2: coords[1],
        })
        .collect();

    let mut ellipses = Vec::new();
    let mut model_names: Vec<&str> = points.iter().map(|p| p.model_name.as_str()).collect();
    model_names.dedup();
    for name in model_names {
        let group: Vec<[f64; 2]> = points
            .iter()
            .filter(|p| p.model_name == name)
            .map(|p| [p.pc1, p.pc2])
            .collect();
        ellipses.push(group_ellipse(&group, name.to_string(), ELLIPSE_SIGMA)?);
    }

    Ok(PcaExport {
        explained_variance_ratio: model.explained_variance_ratio,
        n_sigma: ELLIPSE_SIGMA,
        points,
        ellipses,
    })
}

pub fn to_csv(export: &PcaExport) -> String {
    let mut out = String::from("model,scenario_id,variant_key,pc1,pc2\n");
    for p in &export.points {
        out.push_str(&format!(
            "{},{},{},{:.9},{:.9}\n",
            p.model_name, p.scenario_id, p.variant_key, p.pc1, p.pc2
        ));
    }
    out
}
