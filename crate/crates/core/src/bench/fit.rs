use super::{Family, Structure, TradeoffRecord};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Least-squares line through `(lg x, lg y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 points to fit, got {n}"
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidParameter("fit points must be positive".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log2(), y.log2())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx < 1e-12 {
        return Err(Error::InvalidParameter(
            "degenerate ladder: all x values coincide".into(),
        ));
    }
    let slope = sxy / sxx;
    let r2 = if syy < 1e-300 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ExponentFit {
        slope,
        intercept: my - slope * mx,
        r2,
        n,
    })
}

/// Record column fitted against `1/eps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// `sum_tq`.
    Storage,
    /// `max_tests`.
    QueryCost,
    Nodes,
}

impl Metric {
    fn value(self, r: &TradeoffRecord) -> f64 {
        match self {
            Metric::Storage => r.sum_tq as f64,
            Metric::QueryCost => r.max_tests as f64,
            Metric::Nodes => r.nodes as f64,
        }
    }
}

pub type SeriesKey = (Family, Structure, usize, Option<f64>);

/// Fits `metric` against `1/eps` for every series with at least three ladder points.
pub fn fit_records(records: &[TradeoffRecord], metric: Metric) -> Vec<(SeriesKey, ExponentFit)> {
    let mut series: BTreeMap<(Family, Structure, usize, Option<u64>), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        series
            .entry((r.family, r.structure, r.d, r.alpha.map(f64::to_bits)))
            .or_default()
            .push((1.0 / r.eps, metric.value(r)));
    }
    series
        .into_iter()
        .filter_map(|((f, s, d, a), pts)| {
            fit_exponent(&pts)
                .ok()
                .map(|fit| ((f, s, d, a.map(f64::from_bits)), fit))
        })
        .collect()
}
