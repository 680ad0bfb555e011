//! Report rendering. Adaptivity cells print as "d, p" with a trailing `*`
//! when p clears the significance threshold; quality rows print as
//! "midpoint% ± margin%". Output contains no timestamps, so identical inputs
//! render byte-identical reports.

use serde::{Deserialize, Serialize};
use tutorbench_core::ablation::ContextComponent;
use tutorbench_core::quality::QualityRow;
use tutorbench_core::stats::{mean, sample_sd, AdaptivityCell, ProportionEstimate};

pub const ALPHA: f64 = 0.05;

/// One adaptivity cell without its bootstrap samples, for persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model_name: String,
    pub component_key: String,
    pub component_name: String,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub effect_size_d: Option<f64>,
    pub bootstrap_mean: f64,
    pub bootstrap_sd: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl CellSummary {
    pub fn from_cell(cell: &AdaptivityCell) -> Self {
        CellSummary {
            model_name: cell.model_name.clone(),
            component_key: cell.component.variant_key().to_string(),
            component_name: cell.component.display_name().to_string(),
            n: cell.n,
            statistic: cell.result.statistic,
            p_value: cell.result.p_value,
            effect_size_d: cell.result.effect_size_d,
            bootstrap_mean: mean(&cell.result.bootstrap),
            bootstrap_sd: sample_sd(&cell.result.bootstrap),
            resamples: cell.result.resamples,
            seed: cell.result.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityReport {
    pub resamples: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub cells: Vec<CellSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelQuality {
    pub model_name: String,
    pub rows: Vec<QualityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub confidence: f64,
    pub models: Vec<ModelQuality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub adaptivity: AdaptivityReport,
    pub quality: QualityReport,
}

/// "0.035" prints as ".035"; values at or above 1 keep their integer part.
fn format_p(p: f64) -> String {
    let s = format!("{p:.3}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

/// One adaptivity cell, e.g. "2.36, .035*" or "-1.86, .997".
pub fn format_cell(effect_size_d: Option<f64>, p_value: f64, alpha: f64) -> String {
    let d = match effect_size_d {
        Some(d) => format!("{d:.2}"),
        None => "n/a".to_string(),
    };
    let star = if p_value < alpha { "*" } else { "" };
    format!("{}, {}{}", d, format_p(p_value), star)
}

/// One quality cell, e.g. "92.49% ± 5.42%".
pub fn format_proportion(estimate: &ProportionEstimate) -> String {
    format!(
        "{:.2}% ± {:.2}%",
        estimate.midpoint * 100.0,
        estimate.margin * 100.0
    )
}

fn quality_cell(row: &QualityRow) -> String {
    match &row.estimate {
        Some(estimate) => format_proportion(estimate),
        None => "n/a".to_string(),
    }
}

fn model_names(report: &Report) -> Vec<&str> {
    report
        .quality
        .models
        .iter()
        .map(|m| m.model_name.as_str())
        .collect()
}

fn cell_for<'a>(
    adaptivity: &'a AdaptivityReport,
    model: &str,
    component: ContextComponent,
) -> Option<&'a CellSummary> {
    adaptivity
        .cells
        .iter()
        .find(|c| c.model_name == model && c.component_key == component.variant_key())
}

pub fn render_markdown(report: &Report) -> String {
    let models = model_names(report);
    let n = report
        .adaptivity
        .cells
        .first()
        .map(|c| c.n)
        .unwrap_or(0);
    let mut out = String::new();
    out.push_str("# Context adaptivity report\n\n");
    out.push_str(&format!(
        "Run `{}`: {} models, n = {} paired scenarios per cell, B = {} resamples, master seed {}.\n\n",
        report.run_id,
        models.len(),
        n,
        report.adaptivity.resamples,
        report.adaptivity.master_seed
    ));

    out.push_str("## Adaptivity to removed context\n\n");
    out.push_str(&format!(
        "Each cell is Cohen's d followed by the randomization p-value; `*` marks p < {}.\n\n",
        report.adaptivity.alpha
    ));
    out.push_str("| Model |");
    for component in ContextComponent::ALL {
        out.push_str(&format!(" {} |", component.display_name()));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in ContextComponent::ALL {
        out.push_str("---|");
    }
    out.push('\n');
    for model in &models {
        out.push_str(&format!("| {model} |"));
        for component in ContextComponent::ALL {
            let cell = match cell_for(&report.adaptivity, model, component) {
                Some(c) => format_cell(c.effect_size_d, c.p_value, report.adaptivity.alpha),
                None => "n/a".to_string(),
            };
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }

    out.push_str("\n## Instruction-following quality\n\n");
    out.push_str(&format!(
        "Wilson score intervals at {:.0}% confidence, interval midpoint ± half-width.\n\n",
        report.quality.confidence * 100.0
    ));
    out.push_str("| Metric |");
    for model in &models {
        out.push_str(&format!(" {model} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in &models {
        out.push_str("---|");
    }
    out.push('\n');
    if let Some(first) = report.quality.models.first() {
        for (i, row) in first.rows.iter().enumerate() {
            out.push_str(&format!("| {} |", row.metric.display_name()));
            for model in &report.quality.models {
                out.push_str(&format!(" {} |", quality_cell(&model.rows[i])));
            }
            out.push('\n');
        }
    }
    out
}

pub fn render_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

pub fn render_csv(report: &Report) -> String {
    let mut out = String::from("model,component,n,statistic,effect_size_d,p_value,significant\n");
    for cell in &report.adaptivity.cells {
        let d = cell
            .effect_size_d
            .map(|d| format!("{d:.6}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.6},{},{:.6},{}\n",
            cell.model_name,
            cell.component_key,
            cell.n,
            cell.statistic,
            d,
            cell.p_value,
            cell.p_value < report.adaptivity.alpha
        ));
    }
    out.push('\n');
    out.push_str("metric,model,successes,n,midpoint,margin\n");
    for model in &report.quality.models {
        for row in &model.rows {
            let (midpoint, margin) = match &row.estimate {
                Some(e) => (format!("{:.6}", e.midpoint), format!("{:.6}", e.margin)),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.metric.display_name(),
                model.model_name,
                row.successes,
                row.n,
                midpoint,
                margin
            ));
        }
    }
    out
}
