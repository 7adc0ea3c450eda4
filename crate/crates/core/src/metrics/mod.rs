//! Matting evaluation metrics and compute accounting.
//!
//! Reported scales: MAD, MSE, Grad and Conn are multiplied by `1e3`, dtSSD by
//! `1e2`. Comparisons against published tables only make sense when the same
//! scales are used.

mod basic;
mod conn;
mod grad;
mod macs;
mod report;

pub use basic::{dtssd, mad, mse};
pub use conn::{conn_metric, ConnOptions};
pub use grad::{gaussian_derivative_kernels, grad_metric, GradOptions};
pub use macs::{count_macs, mac_table, LayerMacs, LayerSpec, MacReport, NetworkConfig};
pub use report::{
    evaluate, AggregateMetrics, EvalOptions, FrameMetrics, Metric, MetricReport, MetricSet, ReportMeta,
};

use crate::error::{shape, Result};
use crate::grid::Grid;

fn check_alpha_pair(pred: &Grid, gt: &Grid, what: &str) -> Result<()> {
    pred.check_same_shape(gt, what)?;
    if pred.channels() != 1 {
        return Err(shape(format!("{what} expects single-channel mattes, got {}", pred.channels())));
    }
    Ok(())
}
