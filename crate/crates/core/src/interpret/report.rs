//! CSV exports for interpretability reports.

use std::io::Write;

use super::baselines::ImportanceTable;
use super::pdp::PartialDependence;
use super::sensitivity::{InteractionReport, SensitivityReport};
use crate::error::Result;

/// Header `dataset,input,mean,median,std,q01,q99,rank`; one row per input.
pub fn write_sensitivity_csv<W: Write>(
    writer: W,
    dataset: &str,
    input_names: &[String],
    report: &SensitivityReport,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dataset", "input", "mean", "median", "std", "q01", "q99", "rank"])?;
    append_sensitivity_rows(&mut w, dataset, input_names, report)?;
    w.flush()?;
    Ok(())
}

/// Rows in the sensitivity layout, for callers that emit several datasets
/// (e.g. one per date) into one file.
pub fn append_sensitivity_rows<W: Write>(
    w: &mut csv::Writer<W>,
    dataset: &str,
    input_names: &[String],
    report: &SensitivityReport,
) -> Result<()> {
    for s in &report.inputs {
        let name = input_names.get(s.input).cloned().unwrap_or_else(|| format!("x{}", s.input + 1));
        w.write_record([
            dataset.to_string(),
            name,
            s.mean.to_string(),
            s.median.to_string(),
            s.std.to_string(),
            s.q01.to_string(),
            s.q99.to_string(),
            report.rank_of(s.input).to_string(),
        ])?;
    }
    Ok(())
}

/// Long-form `i,j,score` for every off-diagonal pair `i < j`, by rank.
pub fn write_interaction_csv<W: Write>(writer: W, input_names: &[String], report: &InteractionReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["i", "j", "score"])?;
    for &(i, j, score) in &report.ranking {
        w.write_record([input_names[i].as_str(), input_names[j].as_str(), &score.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_importance_csv<W: Write>(writer: W, input_names: &[String], table: &ImportanceTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "input", "score", "rank"])?;
    let ranking = table.ranking();
    for (j, score) in table.scores.iter().enumerate() {
        let rank = ranking.iter().position(|&r| r == j).expect("ranked") + 1;
        w.write_record([table.method.name(), &input_names[j], &score.to_string(), &rank.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pdp_csv<W: Write>(writer: W, input_names: &[String], pdp: &PartialDependence) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "value", "prediction"])?;
    for (g, v) in pdp.grid.iter().zip(&pdp.values) {
        w.write_record([input_names[pdp.feature].as_str(), &g.to_string(), &v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
