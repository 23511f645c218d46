use serde::{Deserialize, Serialize};

use crate::detect::{count_dnn_ops, count_logmpa_ops, normalize_complexity, ComplexityWeights, OperationCount};
use crate::dl::DecoderArch;
use crate::model::SystemConfig;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub detector: String,
    pub counts: OperationCount,
    pub normalized: u64,
    /// Saving of the DNN decoder relative to this row, in percent (Log-MPA rows only).
    pub dnn_reduction_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityTable {
    pub weights: ComplexityWeights,
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("detector,mul,add,log_exp,normalized,dnn_reduction_pct\n");
        for r in &self.rows {
            let pct = r.dnn_reduction_pct.map(|p| format!("{p:.1}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.detector, r.counts.multiplications, r.counts.additions, r.counts.log_exp, r.normalized, pct
            ));
        }
        out
    }

    pub fn row(&self, detector: &str) -> Option<&ComplexityRow> {
        self.rows.iter().find(|r| r.detector == detector)
    }
}

/// Closed-form counts for Log-MPA at each iteration count and for the DNN decoder.
pub fn compare_complexity(
    cfg: &SystemConfig,
    iterations: &[usize],
    dnn: &DecoderArch,
    weights: &ComplexityWeights,
) -> Result<ComplexityTable> {
    let dnn_counts = count_dnn_ops(cfg.resources, cfg.users, dnn.hidden_layers, dnn.hidden_width);
    let dnn_norm = normalize_complexity(&dnn_counts, weights);
    let mut rows = Vec::with_capacity(iterations.len() + 1);
    for &it in iterations {
        let counts = count_logmpa_ops(cfg, it)?;
        let normalized = normalize_complexity(&counts, weights);
        rows.push(ComplexityRow {
            detector: format!("logmpa{it}"),
            counts,
            normalized,
            dnn_reduction_pct: Some(100.0 * (normalized as f64 - dnn_norm as f64) / normalized as f64),
        });
    }
    rows.push(ComplexityRow {
        detector: "dl-decoder".into(),
        counts: dnn_counts,
        normalized: dnn_norm,
        dnn_reduction_pct: None,
    });
    Ok(ComplexityTable {
        weights: *weights,
        rows,
    })
}
