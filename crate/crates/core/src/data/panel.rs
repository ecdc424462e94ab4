//! Cross-sectional factor panels: per-date asset returns and factor exposures,
//! with CSV ingestion and per-date standardization.
//!
//! CSV schema: header `date,asset,ret,<factor_1>,...,<factor_K>`, ISO dates,
//! empty fields for missing values, one row per `(date, asset)`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{s, Array1, Array2, Array3, ArrayView2};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    /// `T × N` simple returns.
    pub returns: Array2<f64>,
    /// `T × N × K` factor exposures.
    pub exposures: Array3<f64>,
    pub factor_names: Vec<String>,
}

/// Denominator used for the cross-sectional standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdConvention {
    #[default]
    Population,
    Sample,
}

impl FactorPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        assets: Vec<String>,
        returns: Array2<f64>,
        exposures: Array3<f64>,
        factor_names: Vec<String>,
    ) -> Result<Self> {
        let (t, n, k) = exposures.dim();
        let check = |what: &str, expected: usize, actual: usize| {
            if expected != actual {
                Err(Error::DimensionMismatch {
                    context: what.into(),
                    expected,
                    actual,
                })
            } else {
                Ok(())
            }
        };
        check("panel dates", t, dates.len())?;
        check("panel assets", n, assets.len())?;
        check("panel factors", k, factor_names.len())?;
        check("panel return rows", t, returns.nrows())?;
        check("panel return columns", n, returns.ncols())?;
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("panel dates must be strictly increasing".into()));
        }
        Ok(Self {
            dates,
            assets,
            returns,
            exposures,
            factor_names,
        })
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    /// Sub-panel of the dates in `range`.
    pub fn window(&self, range: std::ops::Range<usize>) -> FactorPanel {
        FactorPanel {
            dates: self.dates[range.clone()].to_vec(),
            assets: self.assets.clone(),
            returns: self.returns.slice(s![range.clone(), ..]).to_owned(),
            exposures: self.exposures.slice(s![range, .., ..]).to_owned(),
            factor_names: self.factor_names.clone(),
        }
    }

    /// Exposure matrix (`N × K`) for one date.
    pub fn exposures_at(&self, t: usize) -> ArrayView2<'_, f64> {
        self.exposures.slice(s![t, .., ..])
    }

    /// Rows of dates `range` stacked as `(|range|·N) × K` inputs and matching returns.
    pub fn pooled(&self, range: std::ops::Range<usize>) -> (Array2<f64>, Array1<f64>) {
        let (n, k) = (self.n_assets(), self.n_factors());
        let len = range.len();
        let x = self
            .exposures
            .slice(s![range.clone(), .., ..])
            .to_owned()
            .into_shape_with_order((len * n, k))
            .expect("contiguous exposures");
        let y = self
            .returns
            .slice(s![range, ..])
            .to_owned()
            .into_shape_with_order(len * n)
            .expect("contiguous returns");
        (x, y)
    }

    /// Equal-weighted universe return per date.
    pub fn equal_weighted_benchmark(&self) -> Array1<f64> {
        Array1::from_iter(self.returns.rows().into_iter().map(|r| r.mean().unwrap_or(0.0)))
    }

    /// Per date and factor: subtract the cross-sectional mean and divide by the
    /// population standard deviation. Zero-variance cross-sections become zeros.
    pub fn standardize(&self) -> FactorPanel {
        self.standardize_with(StdConvention::Population).0
    }

    /// Like [`standardize`](Self::standardize); also returns the
    /// `(date, factor)` pairs whose cross-section had zero variance.
    pub fn standardize_with(&self, convention: StdConvention) -> (FactorPanel, Vec<(usize, usize)>) {
        let mut out = self.clone();
        let mut degenerate = Vec::new();
        for t in 0..self.n_dates() {
            for k in 0..self.n_factors() {
                let col: Vec<f64> = self.exposures.slice(s![t, .., k]).to_vec();
                let mean = stats::mean(&col);
                let sd = match convention {
                    StdConvention::Population => stats::population_std(&col),
                    StdConvention::Sample => stats::std_dev(&col),
                };
                let mut target = out.exposures.slice_mut(s![t, .., k]);
                if sd > 0.0 && sd.is_finite() {
                    target.iter_mut().zip(&col).for_each(|(o, v)| *o = (v - mean) / sd);
                } else {
                    log::warn!(
                        "factor '{}' has zero cross-sectional variance on {}; set to zero",
                        self.factor_names[k],
                        self.dates[t]
                    );
                    target.fill(0.0);
                    degenerate.push((t, k));
                }
            }
        }
        (out, degenerate)
    }

    /// Writes the panel CSV schema. Values use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string(), "asset".into(), "ret".into()];
        header.extend(self.factor_names.iter().cloned());
        w.write_record(&header)?;
        for (t, date) in self.dates.iter().enumerate() {
            for (i, asset) in self.assets.iter().enumerate() {
                let mut rec = vec![date.format("%Y-%m-%d").to_string(), asset.clone()];
                rec.push(self.returns[[t, i]].to_string());
                rec.extend((0..self.n_factors()).map(|k| self.exposures[[t, i, k]].to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

/// Outcome of [`load_panel_csv`] besides the panel itself.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadReport {
    /// Dropped assets with their non-missing fraction.
    pub dropped_assets: Vec<(String, f64)>,
    pub forward_filled: usize,
    pub median_filled: usize,
}

fn parse_field(raw: &str) -> std::result::Result<Option<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("nan") || raw == "NA" {
        return Ok(None);
    }
    let v: f64 = raw.parse().map_err(|_| format!("cannot parse '{raw}' as a number"))?;
    Ok(v.is_finite().then_some(v))
}

/// Reads a panel CSV, drops assets whose non-missing fraction (over all dates
/// and the return plus factor fields) is below `min_coverage`, then fills the
/// remaining gaps by forward-fill in time followed by the cross-sectional
/// median of the date.
pub fn load_panel_csv(path: &Path, min_coverage: f64) -> Result<(FactorPanel, LoadReport)> {
    let file = std::fs::File::open(path)?;
    read_panel_csv(file, &path.display().to_string(), min_coverage)
}

pub fn read_panel_csv<R: std::io::Read>(
    reader: R,
    source: &str,
    min_coverage: f64,
) -> Result<(FactorPanel, LoadReport)> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 4 || &header[0] != "date" || &header[1] != "asset" || &header[2] != "ret" {
        return Err(parse_err(1, "header must be date,asset,ret,<factor_1>,...".into()));
    }
    let factor_names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let k = factor_names.len();

    let mut cells: BTreeMap<NaiveDate, HashMap<usize, Vec<Option<f64>>>> = BTreeMap::new();
    let mut asset_index: HashMap<String, usize> = HashMap::new();
    let mut assets: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != k + 3 {
            return Err(parse_err(line, format!("expected {} fields, found {}", k + 3, rec.len())));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date '{}': {e}", &rec[0])))?;
        let asset = rec[1].to_string();
        if asset.is_empty() {
            return Err(parse_err(line, "empty asset identifier".into()));
        }
        let values = (2..k + 3)
            .map(|j| parse_field(&rec[j]).map_err(|m| parse_err(line, m)))
            .collect::<Result<Vec<_>>>()?;
        let idx = *asset_index.entry(asset.clone()).or_insert_with(|| {
            assets.push(asset.clone());
            assets.len() - 1
        });
        if cells.entry(date).or_default().insert(idx, values).is_some() {
            return Err(Error::DuplicateRow {
                date: date.format("%Y-%m-%d").to_string(),
                asset,
            });
        }
    }
    let dates: Vec<NaiveDate> = cells.keys().copied().collect();
    let t_len = dates.len();
    if t_len == 0 {
        return Err(Error::Empty(format!("{source} has no data rows")));
    }

    // grid[t][i] = fields (ret, factors...)
    let mut grid: Vec<Vec<Vec<Option<f64>>>> = dates
        .iter()
        .map(|d| {
            let row = &cells[d];
            (0..assets.len())
                .map(|i| row.get(&i).cloned().unwrap_or_else(|| vec![None; k + 1]))
                .collect()
        })
        .collect();

    let mut report = LoadReport::default();
    let total = (t_len * (k + 1)) as f64;
    let mut keep = Vec::new();
    for (i, name) in assets.iter().enumerate() {
        let present = grid.iter().flat_map(|row| row[i].iter()).filter(|v| v.is_some()).count();
        let coverage = present as f64 / total;
        if coverage < min_coverage {
            report.dropped_assets.push((name.clone(), coverage));
        } else {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::Empty("no asset meets the coverage threshold".into()));
    }
    for (name, cov) in &report.dropped_assets {
        log::info!("dropping asset {name}: coverage {cov:.3}");
    }

    for &i in &keep {
        for f in 0..=k {
            let mut last = None;
            for row in grid.iter_mut() {
                match row[i][f] {
                    Some(v) => last = Some(v),
                    None => {
                        if let Some(v) = last {
                            row[i][f] = Some(v);
                            report.forward_filled += 1;
                        }
                    }
                }
            }
        }
    }
    for (t, row) in grid.iter_mut().enumerate() {
        for f in 0..=k {
            let present: Vec<f64> = keep.iter().filter_map(|&i| row[i][f]).collect();
            if present.len() == keep.len() {
                continue;
            }
            if present.is_empty() {
                return Err(Error::Empty(format!(
                    "field {} has no values on {}",
                    if f == 0 { "ret" } else { &factor_names[f - 1] },
                    dates[t]
                )));
            }
            let med = stats::median(&present);
            for &i in &keep {
                if row[i][f].is_none() {
                    row[i][f] = Some(med);
                    report.median_filled += 1;
                }
            }
        }
    }

    let n = keep.len();
    let mut returns = Array2::zeros((t_len, n));
    let mut exposures = Array3::zeros((t_len, n, k));
    for (t, row) in grid.iter().enumerate() {
        for (col, &i) in keep.iter().enumerate() {
            returns[[t, col]] = row[i][0].expect("filled");
            for f in 0..k {
                exposures[[t, col, f]] = row[i][f + 1].expect("filled");
            }
        }
    }
    let kept_assets = keep.iter().map(|&i| assets[i].clone()).collect();
    let panel = FactorPanel::new(dates, kept_assets, returns, exposures, factor_names)?;
    Ok((panel, report))
}

/// Writes the panel to `path` in the CSV schema.
pub fn save_panel_csv(panel: &FactorPanel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    panel.write_csv(std::io::BufWriter::new(file))
}
