use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    /// `Pr[J > (1+δ)μ]`.
    Upper,
    /// `Pr[J − μ < −γμ]`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound<T> {
    pub side: TailSide,
    pub mu: T,
    /// `δ` for the upper tail, `γ` for the lower.
    pub deviation: T,
    pub bound_value: T,
}

/// `[e^d / (1+d)^(1+d)]^μ`, computed in log space.
fn chernoff_base_pow<T: Scalar>(mu: T, d: T) -> T {
    let one = T::one();
    (mu * (d - (one + d) * d.ln_1p())).exp()
}

/// `[e^δ / (1+δ)^(1+δ)]^μ`, the upper-tail bound for `J > (1+δ)μ`.
pub fn chernoff_upper<T: Scalar>(mu: T, delta: T) -> Result<TailBound<T>> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("chernoff bound needs mu > 0, got {mu}")));
    }
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("chernoff bound needs delta > 0, got {delta}")));
    }
    Ok(TailBound {
        side: TailSide::Upper,
        mu,
        deviation: delta,
        bound_value: chernoff_base_pow(mu, delta),
    })
}

/// `[e^γ / (1+γ)^(1+γ)]^μ` for `J − μ < −γμ`, `γ ∈ (0, 1]`.
pub fn chernoff_lower<T: Scalar>(mu: T, gamma: T) -> Result<TailBound<T>> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("chernoff bound needs mu > 0, got {mu}")));
    }
    if !(gamma > T::zero()) || gamma > T::one() {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(TailBound {
        side: TailSide::Lower,
        mu,
        deviation: gamma,
        bound_value: chernoff_base_pow(mu, gamma),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub delta: f64,
    pub bound: f64,
}

/// Upper-tail bound over every `(μ, δ)` pair, `μ` outermost.
pub fn bound_sweep(mu_values: &[f64], delta_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if mu_values.is_empty() || delta_grid.is_empty() {
        return Err(Error::Empty("bound sweep grid".into()));
    }
    let mut rows = Vec::with_capacity(mu_values.len() * delta_grid.len());
    for &mu in mu_values {
        for &delta in delta_grid {
            rows.push(SweepRow {
                mu,
                delta,
                bound: chernoff_upper(mu, delta)?.bound_value,
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `mu,delta,bound` at 17 significant digits.
pub fn write_bound_sweep_csv<W: Write>(mut writer: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(writer, "mu,delta,bound")?;
    for r in rows {
        writeln!(writer, "{:.16e},{:.16e},{:.16e}", r.mu, r.delta, r.bound)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_values() {
        let e = std::f64::consts::E;
        assert!((chernoff_upper(1.0f64, 1.0).unwrap().bound_value - e / 4.0).abs() < 1e-12);
        assert!((chernoff_upper(2.0f64, 1.0).unwrap().bound_value - (e / 4.0).powi(2)).abs() < 1e-12);
        assert!((chernoff_upper(1.0f64, 1e-9).unwrap().bound_value - 1.0).abs() < 1e-12);
        assert!((chernoff_lower(1.0f64, 1.0).unwrap().bound_value - e / 4.0).abs() < 1e-12);
    }

    #[test]
    fn f32_bound() {
        let b = chernoff_upper(1.0f32, 1.0).unwrap();
        assert!((b.bound_value - std::f32::consts::E / 4.0).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(chernoff_upper(0.0, 1.0).is_err());
        assert!(chernoff_upper(1.0, 0.0).is_err());
        assert!(chernoff_upper(1.0, f64::NAN).is_err());
        assert!(chernoff_lower(1.0, 1.5).is_err());
        assert!(chernoff_lower(-1.0, 0.5).is_err());
        assert!(bound_sweep(&[], &[1.0]).is_err());
    }

    #[test]
    fn single_point_sweep() {
        let rows = bound_sweep(&[3.0], &[0.5]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].bound, chernoff_upper(3.0, 0.5).unwrap().bound_value);
        let mut buf = Vec::new();
        write_bound_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line.split(',').next().unwrap(), "3.0000000000000000e0");
        let parsed: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(parsed, rows[0].bound);
    }

    proptest! {
        #[test]
        fn sweep_in_unit_interval_and_decreasing_in_mu(
            mut mus in prop::collection::vec(0.1f64..20.0, 2..6),
            deltas in prop::collection::vec(0.01f64..5.0, 1..6),
        ) {
            mus.sort_by(f64::total_cmp);
            let rows = bound_sweep(&mus, &deltas).unwrap();
            for r in &rows {
                prop_assert!(r.bound > 0.0 && r.bound <= 1.0);
            }
            let d = deltas.len();
            for m in 1..mus.len() {
                for j in 0..d {
                    prop_assert!(rows[m * d + j].bound <= rows[(m - 1) * d + j].bound);
                }
            }
        }
    }
}
