use serde::{Deserialize, Serialize};

use super::metrics::{auprc, ap_at_thresholds, best_threshold_metrics};
use super::region::{region_dispersion, region_prevalence};
use crate::conv::scale_map;
use crate::error::{Error, Result};
use crate::graph::{LabeledDatum, ProspectMap};

/// Localization results for one datum. Metric fields are `None` when the
/// datum was skipped for lacking a usable ground-truth mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatumEvaluation {
    pub datum_id: String,
    pub label: u8,
    pub auprc: Option<f64>,
    pub ap: Option<f64>,
    pub precision: Option<f64>,
    pub mcc: Option<f64>,
    pub dice: Option<f64>,
    pub prevalence: Option<f64>,
    pub dispersion: Option<f64>,
    pub skipped: bool,
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Summary { mean: 0.0, stderr: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Summary { mean, stderr }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    pub evaluated: usize,
    pub skipped: usize,
    pub auprc: Summary,
    pub ap: Summary,
    pub precision: Summary,
    pub mcc: Summary,
    pub dice: Summary,
    pub data: Vec<DatumEvaluation>,
}

/// Scores one map against its datum's mask. Unscaled maps are min-max
/// scaled first.
pub fn evaluate_datum(map: &ProspectMap, datum: &LabeledDatum, thresholds: &[f64]) -> Result<DatumEvaluation> {
    if map.vertex_count() != datum.graph.vertex_count() {
        return Err(Error::LengthMismatch {
            what: "prospect map",
            expected: datum.graph.vertex_count(),
            actual: map.vertex_count(),
        });
    }
    let scaled;
    let map = if map.is_scaled() {
        map
    } else {
        scaled = scale_map(map)?;
        &scaled
    };
    let mut row = DatumEvaluation {
        datum_id: datum.id().to_string(),
        label: datum.label(),
        auprc: None,
        ap: None,
        precision: None,
        mcc: None,
        dice: None,
        prevalence: None,
        dispersion: None,
        skipped: true,
    };
    let Some(mask) = datum.mask() else {
        return Ok(row);
    };
    row.prevalence = Some(region_prevalence(mask));
    if mask.contains(&true) {
        row.dispersion = Some(region_dispersion(mask, datum.graph.adjacency())?);
    }
    match auprc(map.scores(), mask) {
        Ok(value) => {
            let best = best_threshold_metrics(map.scores(), mask, thresholds)?;
            row.auprc = Some(value);
            row.ap = Some(ap_at_thresholds(map.scores(), mask, thresholds)?);
            row.precision = Some(best.precision);
            row.mcc = Some(best.mcc);
            row.dice = Some(best.dice);
            row.skipped = false;
        }
        Err(Error::DegenerateMask) => {}
        Err(e) => return Err(e),
    }
    Ok(row)
}

impl EvalReport {
    /// Aggregates per-datum rows; fails when no row could be evaluated.
    pub fn from_rows(rows: Vec<DatumEvaluation>, thresholds: &[f64]) -> Result<Self> {
        let used: Vec<&DatumEvaluation> = rows.iter().filter(|r| !r.skipped).collect();
        if used.is_empty() {
            return Err(Error::Empty("no datum has a mask with both positive and negative tokens".into()));
        }
        let column = |f: fn(&DatumEvaluation) -> Option<f64>| -> Summary {
            Summary::of(&used.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
        };
        Ok(EvalReport {
            thresholds: thresholds.to_vec(),
            evaluated: used.len(),
            skipped: rows.len() - used.len(),
            auprc: column(|r| r.auprc),
            ap: column(|r| r.ap),
            precision: column(|r| r.precision),
            mcc: column(|r| r.mcc),
            dice: column(|r| r.dice),
            data: rows,
        })
    }

    /// One row per datum; undefined values are empty cells.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Format(format!("csv: {e}"));
        writer
            .write_record([
                "datum_id",
                "label",
                "auprc",
                "ap",
                "precision",
                "mcc",
                "dice",
                "prevalence",
                "dispersion",
                "skipped",
            ])
            .map_err(io)?;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.data {
            writer
                .write_record([
                    r.datum_id.clone(),
                    r.label.to_string(),
                    cell(r.auprc),
                    cell(r.ap),
                    cell(r.precision),
                    cell(r.mcc),
                    cell(r.dice),
                    cell(r.prevalence),
                    cell(r.dispersion),
                    r.skipped.to_string(),
                ])
                .map_err(io)?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}
