//! Argument parsing and command dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tplroute::format::{Layout, Netlist};
use tplroute::gen::{generate, GenParams};
use tplroute::router::{run_flow, Mode, RouterConfig};
use tplroute::stitcher::Penalties;

use crate::bench::run_suite;
use crate::render::render_layer;
use crate::replay::decompose;
use crate::verify::{verify, Verdict};

#[derive(Parser, Debug)]
#[command(name = "tplroute", version, about = "Triple patterning aware grid router")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Route a netlist and write the colored layout and a report.
    Route(RouteArgs),
    /// Assign masks to a fixed layout, stitching where needed.
    Decompose(DecomposeArgs),
    /// Draw a layout, one SVG per layer.
    Render(RenderArgs),
    /// Check the pipeline's conflict verdicts against the exact oracle.
    Verify(VerifyArgs),
    /// Write a seeded random netlist.
    Gen(GenArgs),
    /// Print netlist statistics.
    Stats(StatsArgs),
    /// Run both modes over a seeded suite.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Triad,
    Greedy,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Triad => Mode::Triad,
            ModeArg::Greedy => Mode::Greedy,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct StitchArgs {
    #[arg(long, default_value_t = Penalties::default().penalty_st)]
    pub penalty_st: i64,
    #[arg(long, default_value_t = Penalties::default().penalty_unsolvable)]
    pub penalty_unsolvable: i64,
    /// Never split wires.
    #[arg(long)]
    pub no_stitch: bool,
}

impl StitchArgs {
    fn penalties(&self) -> Penalties {
        Penalties { penalty_st: self.penalty_st, penalty_unsolvable: self.penalty_unsolvable }
    }
}

#[derive(Args, Debug, Clone)]
pub struct FlowArgs {
    #[arg(long, value_enum, default_value = "triad")]
    pub mode: ModeArg,
    /// Replace the netlist's sp_tp by sp_w times this.
    #[arg(long)]
    pub sp_tp_mult: Option<i64>,
    #[arg(long, default_value_t = 30)]
    pub iters: u32,
    #[arg(long, default_value_t = 15)]
    pub no_conflict_iters: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub stitch: StitchArgs,
}

impl FlowArgs {
    fn config(&self, nl: &Netlist) -> Result<RouterConfig> {
        let cfg = RouterConfig {
            rules: nl.rules(),
            penalties: self.stitch.penalties(),
            max_iterations: self.iters,
            conflict_prohibited_iterations: self.no_conflict_iters,
            mode: self.mode.into(),
            allow_stitch: !self.stitch.no_stitch,
            rng_seed: self.seed,
            ..Default::default()
        };
        cfg.validate().map_err(anyhow::Error::msg)?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct RouteArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Layout output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report output file; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// SVG path prefix; writes PREFIX_layerN.svg.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Exit 1 when conflicts remain.
    #[arg(long)]
    pub strict: bool,
    /// Put wall-clock runtime in the report.
    #[arg(long)]
    pub runtime: bool,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    pub layout: PathBuf,
    #[command(flatten)]
    pub stitch: StitchArgs,
    #[arg(long)]
    pub sp_tp_mult: Option<i64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    pub layout: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub layout: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GenOpts {
    #[arg(long, default_value_t = GenParams::default().width)]
    pub width: i64,
    #[arg(long, default_value_t = GenParams::default().height)]
    pub height: i64,
    #[arg(long, default_value_t = GenParams::default().layers)]
    pub layers: u8,
    #[arg(long, default_value_t = GenParams::default().nets)]
    pub nets: usize,
    #[arg(long, default_value_t = GenParams::default().max_pins)]
    pub max_pins: usize,
    #[arg(long, default_value_t = GenParams::default().spread)]
    pub spread: i64,
    #[arg(long, default_value_t = GenParams::default().obstacles)]
    pub obstacles: usize,
    #[arg(long, default_value_t = 3)]
    pub sp_tp_mult: i64,
}

impl GenOpts {
    fn params(&self) -> GenParams {
        GenParams {
            width: self.width,
            height: self.height,
            layers: self.layers,
            nets: self.nets,
            max_pins: self.max_pins,
            spread: self.spread,
            obstacles: self.obstacles,
            sp_tp_mult: self.sp_tp_mult,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub opts: GenOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    pub netlist: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub opts: GenOpts,
    /// First seed of the suite.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub count: u64,
    #[arg(long, default_value_t = 30)]
    pub iters: u32,
    #[arg(long, default_value_t = 15)]
    pub no_conflict_iters: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

fn input<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|error| Failure { code: 2, error })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data");
    s.push('\n');
    s
}

fn load_netlist(path: &Path, mult: Option<i64>) -> Result<Netlist> {
    let mut nl = Netlist::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(m) = mult {
        anyhow::ensure!(m >= 1, "--sp-tp-mult must be at least 1");
        nl.header.sp_tp = nl.header.sp_w * m;
    }
    Ok(nl)
}

fn load_layout(path: &Path, mult: Option<i64>) -> Result<Layout> {
    let mut l = Layout::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(m) = mult {
        anyhow::ensure!(m >= 1, "--sp-tp-mult must be at least 1");
        l.header.sp_tp = l.header.sp_w * m;
    }
    Ok(l)
}

pub fn svg_paths(prefix: &Path, layers: u8) -> Vec<PathBuf> {
    (0..layers)
        .map(|k| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(format!("_layer{k}.svg"));
            PathBuf::from(s)
        })
        .collect()
}

fn write_svgs(prefix: &Path, l: &Layout) -> Result<()> {
    for (k, p) in svg_paths(prefix, l.header.layers).iter().enumerate() {
        write(p, &render_layer(l, k as u8))?;
    }
    Ok(())
}

/// Runs a command and returns the process exit status.
pub fn run(cli: Cli) -> std::result::Result<i32, Failure> {
    match cli.cmd {
        Command::Route(a) => {
            let nl = input(load_netlist(&a.netlist, a.flow.sp_tp_mult))?;
            let cfg = input(a.flow.config(&nl))?;
            let out = run_flow(&nl, &cfg, a.runtime);
            if let Some(p) = &a.out {
                input(write(p, &out.layout.to_jsonl()))?;
            }
            if let Some(p) = &a.svg {
                input(write_svgs(p, &out.layout))?;
            }
            input(emit(a.report.as_deref(), &json(&out.report)))?;
            if out.report.unroutable > 0 {
                log::warn!("{} connections left unrouted", out.report.unroutable);
            }
            Ok(if a.strict && out.report.conflicts > 0 { 1 } else { 0 })
        }
        Command::Decompose(a) => {
            let l = input(load_layout(&a.layout, a.sp_tp_mult))?;
            let d = input(decompose(&l, a.stitch.penalties(), !a.stitch.no_stitch).map_err(Into::into))?;
            if std::env::var("TECG_LOG").is_ok_and(|v| v == "dump") {
                eprintln!("{}", d.tecg.dump_json());
            }
            if let Some(p) = &a.out {
                input(write(p, &d.layout.to_jsonl()))?;
            }
            if let Some(p) = &a.svg {
                input(write_svgs(p, &d.layout))?;
            }
            input(emit(a.report.as_deref(), &json(&d.report)))?;
            Ok(if a.strict && d.report.conflicts > 0 { 1 } else { 0 })
        }
        Command::Render(a) => {
            let l = input(load_layout(&a.layout, None))?;
            input(write_svgs(&a.svg, &l))?;
            Ok(0)
        }
        Command::Verify(a) => {
            let l = input(load_layout(&a.layout, None))?;
            let checks = input(verify(&l).map_err(Into::into))?;
            for c in &checks {
                println!("{}", c.line());
            }
            if let Some(p) = &a.report {
                input(write(p, &json(&checks)))?;
            }
            Ok(if checks.iter().any(|c| c.verdict == Verdict::Disagree) { 1 } else { 0 })
        }
        Command::Gen(a) => {
            let p = a.opts.params();
            input(if p.width < 1 || p.height < 1 || p.layers < 1 || p.sp_tp_mult < 1 {
                Err(anyhow::anyhow!("grid, layers and --sp-tp-mult must be positive"))
            } else {
                Ok(())
            })?;
            input(emit(a.out.as_deref(), &generate(&p, a.seed).to_jsonl()))?;
            Ok(0)
        }
        Command::Stats(a) => {
            let nl = input(load_netlist(&a.netlist, None))?;
            input(emit(a.out.as_deref(), &json(&nl.stats())))?;
            Ok(0)
        }
        Command::Bench(a) => {
            let base = RouterConfig {
                max_iterations: a.iters,
                conflict_prohibited_iterations: a.no_conflict_iters,
                ..Default::default()
            };
            input(base.validate().map_err(anyhow::Error::msg))?;
            let r = run_suite(&a.opts.params(), a.seed..a.seed + a.count, &base);
            input(emit(a.out.as_deref(), &json(&r)))?;
            Ok(0)
        }
    }
}
