use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use pcwf_core::bitstream::{parse, serialize};
use pcwf_core::metrics::{bd_rate, complexity_ratio};
use pcwf_core::pipeline::{
    decode_replay, encode_in_loop, encode_sequence, EncodedSequence, EncoderConfig, EnhancementMode,
};
use pcwf_core::stats::wss_report;
use pcwf_core::surrogate::{code_sequence, QuantizerConfig};
use pcwf_core::synth::{generate, SyntheticConfig};
use pcwf_core::PointCloud;

use crate::frames::{
    qp_dir, read_bits, read_frame, read_frames, read_summary, write_frames, write_summary, InputFormat, SummaryRow,
};

pub const DEFAULT_QPS: [u8; 6] = [51, 46, 40, 34, 28, 22];

/// Where `simulate` takes its original frames from.
#[derive(Debug, Clone)]
pub enum FrameSource {
    Directory { path: PathBuf, format: InputFormat },
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub originals: Vec<PointCloud>,
    pub rows: Vec<SummaryRow>,
    /// In-loop filter decisions per QP; empty for a plain run.
    pub encoded: Vec<EncodedSequence>,
    pub bits: Vec<Vec<f64>>,
    pub seconds: f64,
}

/// Enhancement applied inside the surrogate coding loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InLoop {
    pub mode: EnhancementMode,
    pub gof: u8,
}

/// Codes the sequence with the surrogate codec at every QP and writes
/// `qpXX/recon_###.ply`, `qpXX/bits.csv` and `summary.csv` under `out`.
/// Synthetic originals are also written to `out/original`.
///
/// With `in_loop`, every reconstruction is filtered before it serves as the
/// next reference; `recon_###.ply` then holds the pre-filter frames,
/// `filtered_###.ply` the output and `payload.pcwf` the filter side
/// information, and the summary rates include the payload file.
pub fn simulate(source: &FrameSource, qps: &[u8], in_loop: Option<InLoop>, out: &Path) -> Result<SimulateReport> {
    let originals = match source {
        FrameSource::Directory { path, format } => read_frames(path, None, format)?,
        FrameSource::Synthetic(cfg) => {
            let frames = generate(cfg)?;
            write_frames(&out.join("original"), "frame", &frames)?;
            frames
        }
    };
    let mut rows = Vec::with_capacity(qps.len());
    let mut all_bits = Vec::with_capacity(qps.len());
    let mut seconds = 0.0;
    let mut encoded = Vec::new();
    for &qp in qps {
        let dir = qp_dir(out, qp);
        let start = Instant::now();
        let (recon, output, bits, payload) = match in_loop {
            None => {
                let coded = code_sequence(
                    &originals,
                    QuantizerConfig::new(qp),
                    None::<fn(usize, &PointCloud, &PointCloud) -> pcwf_core::Result<PointCloud>>,
                )?;
                (coded.reconstructed.clone(), coded.reconstructed, coded.bits, None)
            }
            Some(l) => {
                ensure!(l.gof >= 1, "gof size must be at least 1");
                let run = encode_in_loop(&originals, EncoderConfig { mode: l.mode, qp, gof_size: l.gof })?;
                let bytes = serialize(&run.encoded.header, &run.encoded.payloads)?;
                let filtered = run.encoded.filtered.clone();
                encoded.push(run.encoded);
                (run.codec.reconstructed, filtered, run.codec.bits, Some(bytes))
            }
        };
        seconds += start.elapsed().as_secs_f64();
        write_frames(&dir, "recon", &recon)?;
        let mut total: f64 = bits.iter().sum();
        if let Some(bytes) = &payload {
            write_frames(&dir, "filtered", &output)?;
            fs::write(dir.join("payload.pcwf"), bytes)?;
            total += 8.0 * bytes.len() as f64;
        }
        let mut w = csv::Writer::from_path(dir.join("bits.csv"))?;
        w.write_record(["frame", "bits"])?;
        for (t, b) in bits.iter().enumerate() {
            w.write_record([t.to_string(), format!("{b:.3}")])?;
        }
        w.flush()?;
        rows.push(SummaryRow::new(qp, &originals, &output, total)?);
        all_bits.push(bits);
    }
    write_summary(&out.join("summary.csv"), &rows)?;
    Ok(SimulateReport { originals, rows, encoded, bits: all_bits, seconds })
}

#[derive(Debug, Clone)]
pub struct EnhanceOptions {
    pub originals: PathBuf,
    pub format: InputFormat,
    pub recon: PathBuf,
    pub out: PathBuf,
    pub mode: EnhancementMode,
    pub qps: Vec<u8>,
    pub gof: u8,
}

#[derive(Debug, Clone)]
pub struct QpEnhancement {
    pub qp: u8,
    pub encoded: EncodedSequence,
    pub payload_path: PathBuf,
    pub payload_bytes: usize,
    pub filtered_paths: Vec<PathBuf>,
    pub summary: SummaryRow,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EnhanceReport {
    pub originals: Vec<PointCloud>,
    pub reconstructed: Vec<Vec<PointCloud>>,
    pub per_qp: Vec<QpEnhancement>,
}

pub const FRAMES_HEADER: [&str; 11] = [
    "frame",
    "gof_first",
    "carries_coefficients",
    "flags",
    "codec_bits",
    "payload_bits",
    "bpop",
    "psnr_y",
    "psnr_cb",
    "psnr_cr",
    "psnr_w",
];

/// Filters the reconstructions of every QP and writes filtered frames, the
/// payload, per-frame and summary tables. Summary bits are the surrogate
/// bits plus the payload file size.
pub fn enhance(opts: &EnhanceOptions) -> Result<EnhanceReport> {
    ensure!(opts.gof >= 1, "gof size must be at least 1");
    let originals = read_frames(&opts.originals, None, &opts.format)?;
    let mut per_qp = Vec::with_capacity(opts.qps.len());
    let mut reconstructed = Vec::with_capacity(opts.qps.len());
    let mut rows = Vec::new();
    for &qp in &opts.qps {
        let rdir = qp_dir(&opts.recon, qp);
        let recon = read_frames(&rdir, Some("recon_"), &InputFormat::default())?;
        ensure!(
            recon.len() == originals.len(),
            "{}: {} reconstructed frames for {} originals",
            rdir.display(),
            recon.len(),
            originals.len()
        );
        let codec_bits = read_bits(&rdir.join("bits.csv"))?;
        ensure!(
            codec_bits.len() == recon.len(),
            "{}: bits.csv has {} rows for {} frames",
            rdir.display(),
            codec_bits.len(),
            recon.len()
        );
        let surrogate_bits: f64 = codec_bits.iter().sum();

        let start = Instant::now();
        let encoded = encode_sequence(&originals, &recon, EncoderConfig { mode: opts.mode, qp, gof_size: opts.gof })?;
        let bytes = serialize(&encoded.header, &encoded.payloads)?;
        let seconds = start.elapsed().as_secs_f64();

        let dir = qp_dir(&opts.out, qp);
        let filtered_paths = write_frames(&dir, "filtered", &encoded.filtered)?;
        let payload_path = dir.join("payload.pcwf");
        fs::write(&payload_path, &bytes).with_context(|| format!("writing {}", payload_path.display()))?;

        let mut w = csv::Writer::from_path(dir.join("frames.csv"))?;
        w.write_record(FRAMES_HEADER)?;
        for (t, (report, payload)) in encoded.reports.iter().zip(&encoded.payloads).enumerate() {
            let bits = codec_bits[t] + f64::from(report.payload_bits);
            let row = SummaryRow::new(qp, &originals[t..=t], &encoded.filtered[t..=t], bits)?;
            let flags: String = payload.set_flags().iter().map(|&f| if f { '1' } else { '0' }).collect();
            w.write_record([
                t.to_string(),
                (t % opts.gof as usize == 0).to_string(),
                report.carries_coefficients.to_string(),
                flags,
                format!("{:.3}", codec_bits[t]),
                report.payload_bits.to_string(),
                format!("{:.6}", row.bpop),
                format!("{:.4}", row.psnr[0]),
                format!("{:.4}", row.psnr[1]),
                format!("{:.4}", row.psnr[2]),
                format!("{:.4}", row.psnr_w),
            ])?;
        }
        w.flush()?;

        let summary = SummaryRow::new(qp, &originals, &encoded.filtered, surrogate_bits + 8.0 * bytes.len() as f64)?;
        rows.push(summary);
        reconstructed.push(recon);
        per_qp.push(QpEnhancement {
            qp,
            encoded,
            payload_path,
            payload_bytes: bytes.len(),
            filtered_paths,
            summary,
            seconds,
        });
    }
    write_summary(&opts.out.join("summary.csv"), &rows)?;
    Ok(EnhanceReport { originals, reconstructed, per_qp })
}

/// Replays the decoder. `recon` may be a directory of `recon_*.ply` files or
/// a `simulate` output root, in which case the QP subdirectory named by the
/// payload header is used.
pub fn decode(recon: &Path, payload: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let bytes = fs::read(payload).with_context(|| format!("reading {}", payload.display()))?;
    let (header, payloads) = parse(&bytes).with_context(|| format!("parsing {}", payload.display()))?;
    let dir = if crate::frames::list_frames(recon, Some("recon_")).is_ok() {
        recon.to_path_buf()
    } else {
        qp_dir(recon, header.qp)
    };
    let frames = read_frames(&dir, Some("recon_"), &InputFormat::default())?;
    let decoded = decode_replay(&frames, &header, &payloads)?;
    write_frames(out, "filtered", &decoded)
}

/// BD-rate of `test` against `anchor` for Y, Cb, Cr and the weighted PSNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdTable {
    pub qps: usize,
    pub percent: [f64; 4],
}

pub const BD_COMPONENTS: [&str; 4] = ["y", "cb", "cr", "weighted"];

pub fn bdrate_rows(anchor: &[SummaryRow], test: &[SummaryRow]) -> Result<BdTable> {
    let mut pairs: Vec<(&SummaryRow, &SummaryRow)> =
        anchor.iter().filter_map(|a| test.iter().find(|t| t.qp == a.qp).map(|t| (a, t))).collect();
    pairs.sort_by_key(|(a, _)| a.qp);
    if pairs.len() < 4 {
        bail!("need at least 4 common QPs, found {}", pairs.len());
    }
    let mut percent = [0.0; 4];
    for (c, p) in percent.iter_mut().enumerate() {
        let a: Vec<_> = pairs.iter().map(|(a, _)| a.rate_point(c)).collect();
        let t: Vec<_> = pairs.iter().map(|(_, t)| t.rate_point(c)).collect();
        *p = bd_rate(&a, &t).with_context(|| format!("component {}", BD_COMPONENTS[c]))?;
    }
    Ok(BdTable { qps: pairs.len(), percent })
}

pub fn bdrate(anchor: &Path, test: &Path) -> Result<BdTable> {
    bdrate_rows(&read_summary(anchor)?, &read_summary(test)?)
}

pub fn write_bd_table<W: std::io::Write>(out: W, table: &BdTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["component", "bd_rate_percent"])?;
    for (name, v) in BD_COMPONENTS.iter().zip(table.percent) {
        w.write_record([name.to_string(), format!("{v:.4}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn analyze(
    input: &Path,
    format: &InputFormat,
    depth: u32,
    bits: Option<u32>,
    subblocks: usize,
    out: &Path,
) -> Result<()> {
    let cloud = read_frame(input, format)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    wss_report(&cloud, depth, bits, subblocks, std::io::BufWriter::new(file))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DemoOptions {
    pub out: PathBuf,
    pub synthetic: SyntheticConfig,
    pub qps: Vec<u8>,
    pub gof: u8,
    pub modes: Vec<EnhancementMode>,
}

#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub mode: EnhancementMode,
    pub enhance: EnhanceReport,
    /// Post-filter run against the anchor; `None` when the curves do not
    /// support a BD-rate (see `notes`).
    pub bd: Option<BdTable>,
    /// In-loop coding run against the anchor.
    pub in_loop: SimulateReport,
    pub in_loop_bd: Option<BdTable>,
    pub decoded_identical: bool,
    pub rd_violations: usize,
    pub encode_seconds: f64,
    pub decode_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub anchor: SimulateReport,
    pub modes: Vec<ModeOutcome>,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

/// simulate -> enhance -> decode -> bdrate for each mode. Collects every
/// round-trip mismatch and RD-cost violation instead of stopping at the first.
pub fn demo(opts: &DemoOptions) -> Result<DemoReport> {
    let sim_dir = opts.out.join("anchor");
    let source = FrameSource::Synthetic(opts.synthetic);
    let anchor = simulate(&source, &opts.qps, None, &sim_dir)?;
    let mut modes = Vec::new();
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    let mut try_bd = |label: String, test: &Path| match bdrate(&sim_dir.join("summary.csv"), test) {
        Ok(t) => Some(t),
        Err(e) => {
            notes.push(format!("{label}: no BD-rate: {e:#}"));
            None
        }
    };
    for &mode in &opts.modes {
        let mode_dir = opts.out.join(mode.name());
        let start = Instant::now();
        let enhance = enhance(&EnhanceOptions {
            originals: sim_dir.join("original"),
            format: InputFormat::default(),
            recon: sim_dir.clone(),
            out: mode_dir.clone(),
            mode,
            qps: opts.qps.clone(),
            gof: opts.gof,
        })?;
        let encode_seconds = start.elapsed().as_secs_f64();

        let mut decoded_identical = true;
        let start = Instant::now();
        for q in &enhance.per_qp {
            let dec_dir = qp_dir(&mode_dir, q.qp).join("decoded");
            let decoded = decode(&qp_dir(&sim_dir, q.qp), &q.payload_path, &dec_dir)?;
            for (a, b) in q.filtered_paths.iter().zip(&decoded) {
                if fs::read(a)? != fs::read(b)? {
                    decoded_identical = false;
                    violations.push(format!("{mode} qp {}: {} differs from {}", q.qp, b.display(), a.display()));
                }
            }
            if decoded.len() != q.filtered_paths.len() {
                decoded_identical = false;
                violations.push(format!(
                    "{mode} qp {}: decoded {} frames, expected {}",
                    q.qp,
                    decoded.len(),
                    q.filtered_paths.len()
                ));
            }
        }
        let decode_seconds = start.elapsed().as_secs_f64();

        let bd = try_bd(format!("{mode} post-filter"), &mode_dir.join("summary.csv"));

        let loop_dir = opts.out.join(format!("{}-in-loop", mode.name()));
        let in_loop = simulate(&source, &opts.qps, Some(InLoop { mode, gof: opts.gof }), &loop_dir)?;
        for &qp in &opts.qps {
            let dir = qp_dir(&loop_dir, qp);
            let decoded = decode(&dir, &dir.join("payload.pcwf"), &dir.join("decoded"))?;
            for b in &decoded {
                let a = dir.join(b.file_name().expect("decoded frames have names"));
                if fs::read(&a)? != fs::read(b)? {
                    decoded_identical = false;
                    violations.push(format!("{mode} in-loop qp {qp}: {} differs from {}", b.display(), a.display()));
                }
            }
        }
        let mut rd_violations = 0;
        let sequences = enhance
            .per_qp
            .iter()
            .map(|q| ("post-filter", &q.encoded))
            .chain(in_loop.encoded.iter().map(|e| ("in-loop", e)));
        for (run, seq) in sequences {
            for r in &seq.reports {
                for s in &r.sets {
                    if s.decision.selected_cost() > s.decision.cost_unfiltered {
                        rd_violations += 1;
                        violations.push(format!(
                            "{mode} {run} qp {} frame {} set {:?}: RD cost increased",
                            seq.header.qp, r.frame, s.set
                        ));
                    }
                }
            }
        }
        let in_loop_bd = try_bd(format!("{mode} in-loop"), &loop_dir.join("summary.csv"));
        modes.push(ModeOutcome {
            mode,
            enhance,
            bd,
            in_loop,
            in_loop_bd,
            decoded_identical,
            rd_violations,
            encode_seconds,
            decode_seconds,
        });
    }
    let mut w = csv::Writer::from_path(opts.out.join("demo.csv"))?;
    w.write_record(["mode", "run", "bd_y", "bd_cb", "bd_cr", "bd_weighted", "decoded_identical", "rd_violations"])?;
    for m in &modes {
        for (run, table) in [("post-filter", &m.bd), ("in-loop", &m.in_loop_bd)] {
            let mut rec = vec![m.mode.name().to_string(), run.to_string()];
            match table {
                Some(t) => rec.extend(t.percent.iter().map(|v| format!("{v:.4}"))),
                None => rec.extend(std::iter::repeat_n("n/a".to_string(), 4)),
            }
            rec.push(m.decoded_identical.to_string());
            rec.push(m.rd_violations.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(DemoReport { anchor, modes, violations, notes })
}

/// Encoder and decoder complexity ratios of a demo mode against the anchor.
pub fn timing_ratios(report: &DemoReport, mode: &ModeOutcome) -> Result<(f64, f64)> {
    let anchor = report.anchor.seconds.max(f64::MIN_POSITIVE);
    Ok((
        complexity_ratio(anchor + mode.encode_seconds, anchor)?,
        complexity_ratio(anchor + mode.decode_seconds, anchor)?,
    ))
}
