//! Frame directories and CSV tables shared by the commands.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pcwf_core::metrics::{psnr_from_sse, sse_u8, weighted_psnr, RatePoint};
use pcwf_core::ply::{read_ply, write_ply, ColorSpace, Voxelization};
use pcwf_core::{sort_by_morton, PointCloud};

/// How input PLY files are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InputFormat {
    pub color_space: Option<ColorSpace>,
    pub voxelization: Voxelization,
}

/// Sorted list of `*.ply` files in `dir`, optionally restricted to names
/// starting with `prefix`.
pub fn list_frames(dir: &Path, prefix: Option<&str>) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply")))
        .filter(|p| prefix.is_none_or(|pre| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(pre))))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no PLY frames found in {}", dir.display());
    }
    Ok(files)
}

pub fn read_frame(path: &Path, format: &InputFormat) -> Result<PointCloud> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let ply = read_ply(file, format.color_space, &format.voxelization)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(ply.cloud)
}

pub fn read_frames(dir: &Path, prefix: Option<&str>, format: &InputFormat) -> Result<Vec<PointCloud>> {
    list_frames(dir, prefix)?.iter().map(|p| read_frame(p, format)).collect()
}

/// Writes `frames` as `<dir>/<stem>_<index>.ply` in YCbCr so they reload exactly.
pub fn write_frames(dir: &Path, stem: &str, frames: &[PointCloud]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    frames
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let path = dir.join(format!("{stem}_{t:03}.ply"));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_ply(file, f, ColorSpace::YCbCr)?;
            Ok(path)
        })
        .collect()
}

pub fn qp_dir(root: &Path, qp: u8) -> PathBuf {
    root.join(format!("qp{qp:02}"))
}

/// Per-component SSE of `candidate` against `original`, matched in Morton order.
pub fn component_sse(original: &PointCloud, candidate: &PointCloud) -> Result<[f64; 3]> {
    let (o, c) = (sort_by_morton(original), sort_by_morton(candidate));
    if !o.same_geometry(&c) {
        bail!("geometry differs between original and candidate");
    }
    let mut out = [0.0; 3];
    for (k, v) in out.iter_mut().enumerate() {
        *v = sse_u8(&o.component(k), &c.component(k))?;
    }
    Ok(out)
}

/// Aggregate rate and quality of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub qp: u8,
    pub points: usize,
    pub bits: f64,
    pub bpop: f64,
    pub psnr: [f64; 3],
    pub psnr_w: f64,
}

pub const SUMMARY_HEADER: [&str; 8] = ["qp", "points", "bits", "bpop", "psnr_y", "psnr_cb", "psnr_cr", "psnr_w"];

impl SummaryRow {
    pub fn new(qp: u8, originals: &[PointCloud], candidates: &[PointCloud], bits: f64) -> Result<Self> {
        let mut sse = [0.0; 3];
        let mut points = 0;
        for (o, c) in originals.iter().zip(candidates) {
            let s = component_sse(o, c)?;
            for k in 0..3 {
                sse[k] += s[k];
            }
            points += o.len();
        }
        let psnr = sse.map(|s| psnr_from_sse(s, points));
        Ok(SummaryRow {
            qp,
            points,
            bits,
            bpop: bits / points as f64,
            psnr,
            psnr_w: weighted_psnr(psnr[0], psnr[1], psnr[2]),
        })
    }

    pub fn rate_point(&self, component: usize) -> RatePoint {
        let psnr = if component < 3 { self.psnr[component] } else { self.psnr_w };
        RatePoint { bpop: self.bpop, psnr }
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.qp.to_string(),
            r.points.to_string(),
            format!("{:.3}", r.bits),
            format!("{:.6}", r.bpop),
            format!("{:.4}", r.psnr[0]),
            format!("{:.4}", r.psnr[1]),
            format!("{:.4}", r.psnr[2]),
            format!("{:.4}", r.psnr_w),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SUMMARY_HEADER {
        bail!("{}: expected columns {}, found {}", path.display(), SUMMARY_HEADER.join(","), header.join(","));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("{}: row {}: bad number {:?}", path.display(), line + 1, &rec[i]))
        };
        rows.push(SummaryRow {
            qp: rec[0].trim().parse().with_context(|| format!("{}: row {}: bad qp", path.display(), line + 1))?,
            points: rec[1]
                .trim()
                .parse()
                .with_context(|| format!("{}: row {}: bad point count", path.display(), line + 1))?,
            bits: f(2)?,
            bpop: f(3)?,
            psnr: [f(4)?, f(5)?, f(6)?],
            psnr_w: f(7)?,
        });
    }
    Ok(rows)
}

/// Per-frame surrogate bits written by `simulate`.
pub fn read_bits(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut bits = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        bits.push(rec.get(1).context("bits.csv needs a bits column")?.parse::<f64>()?);
    }
    Ok(bits)
}
