//! Rolling-window fitting, next-date prediction, top-`n` portfolio formation
//! and information ratios against a benchmark.

mod engine;
mod metrics;
pub mod report;

pub use engine::{run_backtest, BacktestConfig, BacktestMode, BacktestResult, PortfolioSeries, WindowStats};
pub use metrics::{information_ratio, information_ratio_active, select_top_n, InformationRatio};
