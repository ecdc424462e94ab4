use std::io::Write;

use super::engine::BacktestResult;
use crate::error::Result;

/// `date,asset,y_hat,y_real`, one row per predicted date and asset.
pub fn write_predictions_csv<W: Write>(writer: W, result: &BacktestResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "asset", "y_hat", "y_real"])?;
    for (d, date) in result.dates.iter().enumerate() {
        let date = date.to_string();
        for (i, asset) in result.assets.iter().enumerate() {
            w.write_record([
                date.as_str(),
                asset,
                &result.predictions[[d, i]].to_string(),
                &result.realized[[d, i]].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `date,n,active_return`.
pub fn write_portfolios_csv<W: Write>(writer: W, result: &BacktestResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "n", "active_return"])?;
    for p in &result.portfolios {
        for (date, a) in result.dates.iter().zip(&p.active_returns) {
            w.write_record([date.to_string(), p.n.to_string(), a.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `n,IR,mode`; unbounded ratios are written as `unbounded` or `-unbounded`.
pub fn write_summary_csv<W: Write>(writer: W, result: &BacktestResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "IR", "mode"])?;
    for p in &result.portfolios {
        w.write_record([p.n.to_string(), p.information_ratio.to_string(), result.mode.name().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `date,factor,mean_sensitivity` per fitted window.
pub fn write_sensitivities_csv<W: Write>(writer: W, result: &BacktestResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "factor", "mean_sensitivity"])?;
    for win in &result.windows {
        for (name, s) in result.factor_names.iter().zip(&win.mean_sensitivity) {
            w.write_record([win.date.to_string(), name.clone(), s.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `date,in_sample_wmse,out_of_sample_wmse,out_of_sample_wmse_unweighted,flagged`.
pub fn write_windows_csv<W: Write>(writer: W, result: &BacktestResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "date",
        "in_sample_wmse",
        "out_of_sample_wmse",
        "out_of_sample_wmse_unweighted",
        "flagged",
    ])?;
    for win in &result.windows {
        w.write_record([
            win.date.to_string(),
            win.in_sample_wmse.to_string(),
            win.out_of_sample_wmse.to_string(),
            win.out_of_sample_wmse_unweighted.to_string(),
            win.flagged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
