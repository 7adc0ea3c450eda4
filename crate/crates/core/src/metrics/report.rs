//! Evaluation driver and the JSON/CSV report format.
//!
//! `report.json` layout:
//!
//! ```text
//! {
//!   "per_frame": [{"frame": 0, "mad": …, "mse": …, "grad": …, "conn": …}, …],
//!   "aggregate": {"mad": …, "mse": …, "grad": …, "conn": …, "dtssd": …},
//!   "meta": {"T": 8, "height": 64, "width": 64, "config_hash": "<sha256 hex>"},
//!   "losses": {…}            // optional loss breakdown
//! }
//! ```
//!
//! Metrics that were not selected are omitted rather than written as null.
//! The CSV flattening has a `frame` column followed by the selected metrics in
//! the order mad, mse, grad, conn, dtssd; one row per frame and a final row
//! whose `frame` is `mean` holding the aggregates. dtSSD only appears there.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{conn_metric, dtssd, grad_metric, mad, mse, ConnOptions, GradOptions};
use crate::compositor::{Clip, Role};
use crate::error::{argument, shape, Error, Result};
use crate::grid::stable_mean;
use crate::losses::LossBreakdown;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mad,
    Mse,
    Grad,
    Conn,
    Dtssd,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Mad, Metric::Mse, Metric::Grad, Metric::Conn, Metric::Dtssd];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mad => "mad",
            Metric::Mse => "mse",
            Metric::Grad => "grad",
            Metric::Conn => "conn",
            Metric::Dtssd => "dtssd",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| argument(format!("unknown metric `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSet {
    pub mad: bool,
    pub mse: bool,
    pub grad: bool,
    pub conn: bool,
    pub dtssd: bool,
}

impl Default for MetricSet {
    fn default() -> Self {
        Self { mad: true, mse: true, grad: true, conn: true, dtssd: true }
    }
}

impl MetricSet {
    pub fn none() -> Self {
        Self { mad: false, mse: false, grad: false, conn: false, dtssd: false }
    }

    /// Parses a comma-separated list such as `mad,mse`.
    pub fn parse(list: &str) -> Result<Self> {
        let mut set = Self::none();
        for item in list.split(',').filter(|s| !s.trim().is_empty()) {
            set.insert(item.parse()?);
        }
        if set == Self::none() {
            return Err(argument("metric selection is empty"));
        }
        Ok(set)
    }

    pub fn insert(&mut self, m: Metric) {
        *self.slot(m) = true;
    }

    fn slot(&mut self, m: Metric) -> &mut bool {
        match m {
            Metric::Mad => &mut self.mad,
            Metric::Mse => &mut self.mse,
            Metric::Grad => &mut self.grad,
            Metric::Conn => &mut self.conn,
            Metric::Dtssd => &mut self.dtssd,
        }
    }

    pub fn contains(&self, m: Metric) -> bool {
        match m {
            Metric::Mad => self.mad,
            Metric::Mse => self.mse,
            Metric::Grad => self.grad,
            Metric::Conn => self.conn,
            Metric::Dtssd => self.dtssd,
        }
    }

    pub fn selected(&self) -> Vec<Metric> {
        Metric::ALL.into_iter().filter(|m| self.contains(*m)).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOptions {
    pub metrics: MetricSet,
    pub grad: GradOptions,
    pub conn: ConnOptions,
}

impl EvalOptions {
    /// SHA-256 of the options' canonical JSON, hex encoded.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("options serialise");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameMetrics {
    pub frame: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conn: Option<f64>,
}

impl FrameMetrics {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Mad => self.mad,
            Metric::Mse => self.mse,
            Metric::Grad => self.grad,
            Metric::Conn => self.conn,
            Metric::Dtssd => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateMetrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtssd: Option<f64>,
}

impl AggregateMetrics {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Mad => self.mad,
            Metric::Mse => self.mse,
            Metric::Grad => self.grad,
            Metric::Conn => self.conn,
            Metric::Dtssd => self.dtssd,
        }
    }

    fn set(&mut self, m: Metric, v: f64) {
        let slot = match m {
            Metric::Mad => &mut self.mad,
            Metric::Mse => &mut self.mse,
            Metric::Grad => &mut self.grad,
            Metric::Conn => &mut self.conn,
            Metric::Dtssd => &mut self.dtssd,
        };
        *slot = Some(v);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportMeta {
    #[serde(rename = "T")]
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub per_frame: Vec<FrameMetrics>,
    pub aggregate: AggregateMetrics,
    pub meta: ReportMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<LossBreakdown>,
}

const PER_FRAME: [Metric; 4] = [Metric::Mad, Metric::Mse, Metric::Grad, Metric::Conn];

impl MetricReport {
    /// Checks the structural invariants: frame indexing, non-negative values,
    /// consistent metric selection and aggregate = mean of per-frame values.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(format!("invalid report: {msg}")));
        if self.per_frame.len() != self.meta.frames {
            return bad(format!("{} frame records for T = {}", self.per_frame.len(), self.meta.frames));
        }
        if let Some((i, f)) = self.per_frame.iter().enumerate().find(|(i, f)| f.frame != *i) {
            return bad(format!("record {i} carries frame index {}", f.frame));
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        for m in PER_FRAME {
            let values: Vec<Option<f64>> = self.per_frame.iter().map(|f| f.get(m)).collect();
            match self.aggregate.get(m) {
                Some(agg) => {
                    let Some(vals) = values.iter().copied().collect::<Option<Vec<f64>>>() else {
                        return bad(format!("{} aggregated but missing on some frames", m.name()));
                    };
                    if !nonneg(agg) || vals.iter().any(|v| !nonneg(*v)) {
                        return bad(format!("{} has negative or non-finite values", m.name()));
                    }
                    let mean = stable_mean(&vals);
                    if (mean - agg).abs() > 1e-12 * agg.abs().max(1.0) {
                        return bad(format!("{} aggregate {agg} differs from frame mean {mean}", m.name()));
                    }
                }
                None if values.iter().any(Option::is_some) => {
                    return bad(format!("{} present per frame but not aggregated", m.name()));
                }
                None => {}
            }
        }
        if let Some(d) = self.aggregate.dtssd {
            if !nonneg(d) {
                return bad("dtssd is negative or non-finite".into());
            }
        }
        if let Some(l) = &self.losses {
            l.validate(1e-12)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates.
    pub fn from_json(s: &str) -> Result<Self> {
        let r: MetricReport = serde_json::from_str(s)?;
        r.validate()?;
        Ok(r)
    }

    pub fn selected(&self) -> Vec<Metric> {
        Metric::ALL.into_iter().filter(|m| self.aggregate.get(*m).is_some()).collect()
    }

    pub fn to_csv(&self) -> String {
        let cols = self.selected();
        let mut out = String::from("frame");
        for m in &cols {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for f in &self.per_frame {
            write!(out, "{}", f.frame).unwrap();
            for m in &cols {
                out.push(',');
                if let Some(v) = f.get(*m) {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out.push_str("mean");
        for m in &cols {
            write!(out, ",{}", self.aggregate.get(*m).expect("selected")).unwrap();
        }
        out.push('\n');
        out
    }

    /// One-line summary, e.g. `mad=1.2 mse=0.3 dtssd=4.5`.
    pub fn summary_line(&self) -> String {
        self.selected()
            .iter()
            .map(|m| format!("{}={}", m.name(), self.aggregate.get(*m).expect("selected")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Computes the selected metrics of `pred` against `gt` (both alpha clips).
///
/// Per-frame metrics run in parallel; reductions happen afterwards in frame
/// order so the result does not depend on the thread count.
pub fn evaluate(pred: &Clip, gt: &Clip, options: &EvalOptions) -> Result<MetricReport> {
    if pred.role() != Role::Alpha || gt.role() != Role::Alpha {
        return Err(shape("evaluation expects alpha clips"));
    }
    pred.check_compatible(gt, "evaluate")?;
    let sel = options.metrics;
    if sel.dtssd && pred.len() < 2 {
        return Err(argument("dtssd needs at least two frames"));
    }
    let per_frame = (0..pred.len())
        .into_par_iter()
        .map(|t| {
            let (p, g) = (pred.frame(t), gt.frame(t));
            Ok(FrameMetrics {
                frame: t,
                mad: sel.mad.then(|| mad(p, g)).transpose()?,
                mse: sel.mse.then(|| mse(p, g)).transpose()?,
                grad: sel.grad.then(|| grad_metric(p, g, options.grad)).transpose()?,
                conn: sel.conn.then(|| conn_metric(p, g, options.conn)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut aggregate = AggregateMetrics::default();
    for m in PER_FRAME.into_iter().filter(|m| sel.contains(*m)) {
        let vals: Vec<f64> = per_frame.iter().map(|f| f.get(m).expect("selected")).collect();
        aggregate.set(m, stable_mean(&vals));
    }
    if sel.dtssd {
        aggregate.set(Metric::Dtssd, dtssd(pred, gt)?);
    }
    Ok(MetricReport {
        per_frame,
        aggregate,
        meta: ReportMeta {
            frames: pred.len(),
            height: pred.height(),
            width: pred.width(),
            config_hash: options.config_hash(),
        },
        losses: None,
    })
}
