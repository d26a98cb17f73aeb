//! Per-image and aggregate metric rows with provenance, serialized as a
//! plain tabular text file.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub mae: f64,
    pub mse: f64,
    pub psnr_rgb: f64,
    pub ssim_rgb: f64,
    pub psnr_y: f64,
    pub ssim_y: f64,
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    pub rows: Vec<(String, MetricRow)>,
    pub aggregate: MetricRow,
    /// Key-value provenance (checkpoint, split, pu table, ...).
    pub provenance: Vec<(String, String)>,
}

impl MetricReport {
    pub fn from_rows(rows: Vec<(String, MetricRow)>, provenance: Vec<(String, String)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("metric report needs at least one row".into()));
        }
        let n = rows.len() as f64;
        let mut agg = MetricRow { mae: 0.0, mse: 0.0, psnr_rgb: 0.0, ssim_rgb: 0.0, psnr_y: 0.0, ssim_y: 0.0 };
        for (_, r) in &rows {
            agg.mae += r.mae;
            agg.mse += r.mse;
            agg.psnr_rgb += r.psnr_rgb;
            agg.ssim_rgb += r.ssim_rgb;
            agg.psnr_y += r.psnr_y;
            agg.ssim_y += r.ssim_y;
        }
        agg.mae /= n;
        agg.mse /= n;
        agg.psnr_rgb /= n;
        agg.ssim_rgb /= n;
        agg.psnr_y /= n;
        agg.ssim_y /= n;
        Ok(MetricReport { rows, aggregate: agg, provenance })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str("image\tmae\tmse\tpsnr_rgb\tssim_rgb\tpsnr_y\tssim_y\n");
        let fmt = |label: &str, r: &MetricRow| {
            format!(
                "{label}\t{:.6}\t{:.6}\t{:.4}\t{:.6}\t{:.4}\t{:.6}\n",
                r.mae, r.mse, r.psnr_rgb, r.ssim_rgb, r.psnr_y, r.ssim_y
            )
        };
        for (label, r) in &self.rows {
            out.push_str(&fmt(label, r));
        }
        out.push_str(&fmt("aggregate", &self.aggregate));
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes()).map_err(|e| Error::io(path, e))
    }
}
