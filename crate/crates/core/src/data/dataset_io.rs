//! Plain feature/response CSV: header `<x_1>,...,<x_K>,y`.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::generators::Dataset;
use crate::error::{Error, Result};

impl Dataset {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        header.push("y".into());
        w.write_record(&header)?;
        for (row, y) in self.x.rows().into_iter().zip(self.y.iter()) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || header.iter().last() != Some("y") {
            return Err(Error::Parse {
                path: source.into(),
                line: 1,
                message: "header must list features followed by 'y'".into(),
            });
        }
        let k = header.len() - 1;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != k + 1 {
                return Err(Error::Parse {
                    path: source.into(),
                    line,
                    message: format!("expected {} fields, found {}", k + 1, rec.len()),
                });
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    path: source.into(),
                    line,
                    message: format!("cannot parse '{field}' as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: source.into(),
                        line,
                        message: "non-finite value".into(),
                    });
                }
                if j < k {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        if ys.is_empty() {
            return Err(Error::Empty(format!("{source} has no data rows")));
        }
        let n = ys.len();
        let x = Array2::from_shape_vec((n, k), xs).expect("row-major shape");
        Ok(Dataset {
            x,
            y: Array1::from(ys),
            feature_names: header.iter().take(k).map(str::to_string).collect(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use crate::data::gen_friedman;

    use super::*;

    #[test]
    fn round_trip() {
        let d = gen_friedman(25, 1.0, 3).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn header_needs_y() {
        assert!(Dataset::read_csv("a,b\n1,2\n".as_bytes(), "mem").is_err());
    }
}
