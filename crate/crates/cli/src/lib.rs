//! Command-line front end: `simulate`, `enhance`, `decode`, `bdrate`,
//! `analyze` and `demo`.

pub mod commands;
pub mod frames;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use pcwf_core::pipeline::EnhancementMode;
use pcwf_core::ply::{ColorSpace, Voxelization};
use pcwf_core::synth::SyntheticConfig;

use crate::commands::{BdTable, DemoOptions, EnhanceOptions, FrameSource, InLoop, DEFAULT_QPS};
use crate::frames::{InputFormat, SummaryRow, SUMMARY_HEADER};

#[derive(Debug, Parser)]
#[command(name = "pcwf", version, about = "Wiener-filter enhancement of point-cloud color")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print elapsed times and complexity ratios.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Plain `key=value` file; keys are long flag names, command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Color space of input PLY files without a `color_space` comment.
    #[arg(long, global = true, value_enum)]
    pub color_space: Option<ColorSpaceArg>,
    /// Scale applied to float positions after subtracting the offset.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub scale: f64,
    /// Offset subtracted from float positions, `x,y,z`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 0.0])]
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColorSpaceArg {
    Rgb,
    Ycbcr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Bwf,
    Ciwf,
    Vcwf,
}

impl From<ModeArg> for EnhancementMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Bwf => EnhancementMode::Bwf,
            ModeArg::Ciwf => EnhancementMode::Ciwf,
            ModeArg::Vcwf => EnhancementMode::Vcwf,
        }
    }
}

fn default_qps() -> Vec<u8> {
    DEFAULT_QPS.to_vec()
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub frames: usize,
    #[arg(long, default_value_t = 64)]
    pub side: u32,
}

impl SyntheticArgs {
    fn config(&self) -> SyntheticConfig {
        SyntheticConfig { frames: self.frames, side: self.side, seed: self.seed, ..Default::default() }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Code frames with the surrogate codec at each QP.
    #[command(args_override_self = true)]
    Simulate {
        /// Directory of original PLY frames; synthetic content when absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[command(flatten)]
        synthetic: SyntheticArgs,
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(0..=51), default_values_t = default_qps())]
        qp: Vec<u8>,
        #[arg(long)]
        out: PathBuf,
        /// Filter inside the coding loop with this mode.
        #[arg(long, value_enum)]
        in_loop: Option<ModeArg>,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u8).range(1..))]
        gof: u8,
    },
    /// Filter reconstructions and write filtered frames plus the payload.
    #[command(args_override_self = true)]
    Enhance {
        /// Directory of original PLY frames.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output root of `simulate`.
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Bwf)]
        mode: ModeArg,
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(0..=51), default_values_t = default_qps())]
        qp: Vec<u8>,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u8).range(1..))]
        gof: u8,
    },
    /// Apply a payload to reconstructed frames.
    #[command(args_override_self = true)]
    Decode {
        /// `recon_*.ply` directory, or a `simulate` output root.
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        payload: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// BD-rate of a test run against an anchor run, from their summary CSVs.
    #[command(args_override_self = true)]
    Bdrate {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block and subblock statistics of one frame.
    #[command(args_override_self = true)]
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=21))]
        depth: u32,
        #[arg(long, default_value_t = pcwf_core::stats::DEFAULT_SUBBLOCKS)]
        subblocks: usize,
        /// Coordinate bit depth of the octree root; the cloud extent by default.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=21))]
        bits: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// simulate, enhance in every mode, decode, compare and report BD-rates.
    #[command(args_override_self = true)]
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        synthetic: SyntheticArgs,
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(0..=51), default_values_t = default_qps())]
        qp: Vec<u8>,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u8).range(1..))]
        gof: u8,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModeArg::Bwf, ModeArg::Ciwf, ModeArg::Vcwf])]
        mode: Vec<ModeArg>,
    },
}

impl GlobalArgs {
    pub fn input_format(&self) -> Result<InputFormat> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            bail!("--scale must be positive, got {}", self.scale);
        }
        let offset: [f64; 3] = self.offset.as_slice().try_into().context("--offset takes three values")?;
        Ok(InputFormat {
            color_space: self.color_space.map(|c| match c {
                ColorSpaceArg::Rgb => ColorSpace::Rgb,
                ColorSpaceArg::Ycbcr => ColorSpace::YCbCr,
            }),
            voxelization: Voxelization { scale: self.scale, offset },
        })
    }
}

/// Reads a `key=value` file. Blank lines and `#` comments are ignored.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), n + 1);
        };
        map.insert(k.trim().trim_start_matches("--").to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Inserts config-file values as flags directly after the subcommand name.
/// Keys the subcommand does not accept, and flags already given on the
/// command line, are skipped.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            config = strs.get(i + 1).cloned();
        } else if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        }
    }
    let Some(config) = config else { return Ok(args) };
    let map = read_config(Path::new(&config))?;
    let cmd = Cli::command();
    let Some((pos, sub)) = strs.iter().enumerate().skip(1).find_map(|(i, a)| cmd.find_subcommand(a).map(|s| (i, s)))
    else {
        return Ok(args);
    };
    let mut injected = Vec::new();
    for arg in sub.get_arguments().chain(cmd.get_arguments()) {
        let Some(long) = arg.get_long() else { continue };
        if long == "config" {
            continue;
        }
        let given = strs[pos + 1..].iter().any(|a| a == &format!("--{long}") || a.starts_with(&format!("--{long}=")));
        if given {
            continue;
        }
        if let Some(v) = map.get(long) {
            if matches!(arg.get_action(), clap::ArgAction::SetTrue) {
                if v.parse::<bool>().with_context(|| format!("config key {long}: expected true or false"))? {
                    injected.push(OsString::from(format!("--{long}")));
                }
            } else {
                injected.push(OsString::from(format!("--{long}={v}")));
            }
        }
    }
    let mut out = args;
    let tail = out.split_off(pos + 1);
    out.extend(injected);
    out.extend(tail);
    Ok(out)
}

pub fn parse_args(args: impl IntoIterator<Item = OsString>) -> Result<Cli> {
    let args = expand_config(args.into_iter().collect())?;
    Ok(Cli::try_parse_from(args)?)
}

fn print_summary(out: &mut (dyn Write + Send), rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{}", SUMMARY_HEADER.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.3},{:.6},{:.4},{:.4},{:.4},{:.4}",
            r.qp, r.points, r.bits, r.bpop, r.psnr[0], r.psnr[1], r.psnr[2], r.psnr_w
        )?;
    }
    Ok(())
}

fn print_bd(out: &mut (dyn Write + Send), label: &str, table: &Option<BdTable>) -> Result<()> {
    match table {
        Some(t) => {
            writeln!(out, "{label},{:.4},{:.4},{:.4},{:.4}", t.percent[0], t.percent[1], t.percent[2], t.percent[3])?
        }
        None => writeln!(out, "{label},n/a,n/a,n/a,n/a")?,
    }
    Ok(())
}

/// Runs a parsed command, writing its machine-readable report to `out`.
pub fn run(cli: Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    match cli.global.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?;
            pool.install(|| dispatch(cli, out))
        }
        None => dispatch(cli, out),
    }
}

fn dispatch(cli: Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let format = cli.global.input_format()?;
    let timing = cli.global.timing;
    let start = Instant::now();
    match cli.command {
        Command::Simulate { input, synthetic, qp, out: dir, in_loop, gof } => {
            let source = match input {
                Some(path) => FrameSource::Directory { path, format },
                None => FrameSource::Synthetic(synthetic.config()),
            };
            let in_loop = in_loop.map(|m| InLoop { mode: m.into(), gof });
            let report = commands::simulate(&source, &qp, in_loop, &dir)?;
            print_summary(out, &report.rows)?;
        }
        Command::Enhance { input, recon, out: dir, mode, qp, gof } => {
            let report = commands::enhance(&EnhanceOptions {
                originals: input,
                format,
                recon,
                out: dir,
                mode: mode.into(),
                qps: qp,
                gof,
            })?;
            let rows: Vec<SummaryRow> = report.per_qp.iter().map(|q| q.summary).collect();
            print_summary(out, &rows)?;
            if timing {
                for q in &report.per_qp {
                    eprintln!("qp {}: enhancement {:.3} s", q.qp, q.seconds);
                }
            }
        }
        Command::Decode { recon, payload, out: dir } => {
            let written = commands::decode(&recon, &payload, &dir)?;
            writeln!(out, "frames,{}", written.len())?;
        }
        Command::Bdrate { anchor, test, out: path } => {
            let table = commands::bdrate(&anchor, &test)?;
            commands::write_bd_table(&mut *out, &table)?;
            if let Some(path) = path {
                let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                commands::write_bd_table(f, &table)?;
            }
        }
        Command::Analyze { input, depth, subblocks, bits, out: path } => {
            if subblocks == 0 {
                bail!("--subblocks must be at least 1");
            }
            commands::analyze(&input, &format, depth, bits, subblocks, &path)?;
            writeln!(out, "wrote,{}", path.display())?;
        }
        Command::Demo { out: dir, synthetic, qp, gof, mode } => {
            let report = commands::demo(&DemoOptions {
                out: dir,
                synthetic: synthetic.config(),
                qps: qp,
                gof,
                modes: mode.into_iter().map(Into::into).collect(),
            })?;
            writeln!(out, "mode,run,bd_y,bd_cb,bd_cr,bd_weighted")?;
            for m in &report.modes {
                print_bd(out, &format!("{},post-filter", m.mode), &m.bd)?;
                print_bd(out, &format!("{},in-loop", m.mode), &m.in_loop_bd)?;
            }
            if timing {
                for m in &report.modes {
                    let (enc, dec) = commands::timing_ratios(&report, m)?;
                    eprintln!("{}: encoder {:.1}%, decoder {:.1}%", m.mode, enc, dec);
                }
            }
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            if !report.violations.is_empty() {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                bail!("{} violation(s)", report.violations.len());
            }
        }
    }
    if timing {
        eprintln!("elapsed {:.3} s", start.elapsed().as_secs_f64());
    }
    Ok(())
}
