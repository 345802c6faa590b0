// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! `condfluor` subcommands. Exit codes: 0 ok, 1 configuration, 2 numerical,
//! 3 I/O, 4 statistical.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::oracle::{OracleReport, OracleSuite};
use crate::output::{
    render_svg, write_cut_csv, write_map_csv, write_mc_compare_csv, write_mc_csv, write_slopes_csv, CutRow,
};
use crate::trajectory::{predict_bins, predicted_selection_fraction, run_ensemble, Comparison, McConfig, Selection};
use crate::weak::{bound_violation_contours, build_map, max_abs_slope, ConditionalMap, MapMode, MapRequest, Post, Prep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_STATISTICAL: i32 = 4;

/// `|z|` above which a Monte Carlo bin counts as a hard failure.
pub const Z_FAIL: f64 = 5.0;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidState(_) => EXIT_CONFIG,
        Error::SingularConditioning { .. } | Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Io(_) => EXIT_IO,
        Error::EmptySelection => EXIT_STATISTICAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "condfluor", version, about = "Pre- and post-selected resonance fluorescence of a driven qubit")]
pub struct Cli {
    /// TOML run configuration; all keys optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conditional expectation over the (time, Rabi frequency) grid.
    Map(MapArgs),
    /// Conditioned and unconditioned values against Rabi frequency at fixed times.
    Cut(CutArgs),
    /// Monte Carlo of heterodyne records with post-selection.
    Mc(McArgs),
    /// Engine self-checks; prints a JSON summary.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrepArg {
    E,
    G,
    #[value(alias = "maximally_mixed")]
    Mixed,
}

impl From<PrepArg> for Prep {
    fn from(p: PrepArg) -> Self {
        match p {
            PrepArg::E => Prep::E,
            PrepArg::G => Prep::G,
            PrepArg::Mixed => Prep::MaximallyMixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PostArg {
    G,
    E,
    None,
}

impl From<PostArg> for Post {
    fn from(p: PostArg) -> Self {
        match p {
            PostArg::G => Post::G,
            PostArg::E => Post::E,
            PostArg::None => Post::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    PreOnly,
    PostOnly,
    PreAndPost,
    HermitianXw,
}

impl From<ModeArg> for MapMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PreOnly => MapMode::PreOnly,
            ModeArg::PostOnly => MapMode::PostOnly,
            ModeArg::PreAndPost => MapMode::PreAndPost,
            ModeArg::HermitianXw => MapMode::HermitianXw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SelectionArg {
    None,
    FinalG,
    FinalE,
}

impl From<SelectionArg> for Selection {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::None => Selection::None,
            SelectionArg::FinalG => Selection::FinalG,
            SelectionArg::FinalE => Selection::FinalE,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Conditioning {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Preparation (default `e`, or `mixed` for post_only).
    #[arg(long, value_enum)]
    pub prep: Option<PrepArg>,
    /// Post-selection (default `g` for conditioned modes).
    #[arg(long, value_enum)]
    pub post: Option<PostArg>,
    /// Apply the detection-chain low-pass along time.
    #[arg(long)]
    pub filtered: bool,
}

impl Conditioning {
    fn request(&self, default_mode: MapMode, cfg: &RunConfig) -> MapRequest {
        let mode = self.mode.map_or(default_mode, MapMode::from);
        let prep = self.prep.map(Prep::from).unwrap_or(match mode {
            MapMode::PostOnly => Prep::MaximallyMixed,
            _ => Prep::E,
        });
        let post = self.post.map(Post::from).unwrap_or(match mode {
            MapMode::PreOnly => Post::None,
            _ => Post::G,
        });
        let mut req = MapRequest::new(mode, prep, post);
        req.t_step = cfg.grid.t_step;
        if self.filtered {
            req.filter = Some(cfg.detection.filter());
        }
        req
    }
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub cond: Conditioning,
    /// Also write an SVG heatmap.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CutArgs {
    #[command(flatten)]
    pub cond: Conditioning,
    /// Cut times (μs), comma separated.
    #[arg(long = "t", value_delimiter = ',', default_values_t = [0.99, 1.44])]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long, value_enum, default_value = "final_g")]
    pub selection: SelectionArg,
    #[arg(long)]
    pub n_traj: Option<usize>,
    /// Rabi frequency (MHz).
    #[arg(long)]
    pub nu_r: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub prep: Option<PrepArg>,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Numerical(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Map(a) => cmd_map(&cfg, a, &out),
        Command::Cut(a) => cmd_cut(&cfg, a, &out),
        Command::Mc(a) => cmd_mc(&cfg, a, &out),
        Command::Oracle => cmd_oracle(&cfg, &out),
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn map_for(cfg: &RunConfig, req: &MapRequest) -> Result<ConditionalMap> {
    build_map(&cfg.model, &cfg.grid.rabi_grid()?, req)
}

pub fn cmd_map(cfg: &RunConfig, args: &MapArgs, out: &Path) -> Result<i32> {
    let req = args.cond.request(MapMode::PreOnly, cfg);
    let map = map_for(cfg, &req)?;
    let stem = if req.filter.is_some() { format!("{}_filtered", req.mode.name()) } else { req.mode.name().to_string() };
    let mut w = create(out, &format!("{stem}.csv"))?;
    write_map_csv(&mut w, &map)?;
    w.flush()?;
    if args.svg || cfg.emit_svg {
        fs::write(out.join(format!("{stem}.svg")), render_svg(&map))?;
    }
    let regions = bound_violation_contours(&map);
    if let Some((re, t, nu)) = map.extremum() {
        println!("{stem}: extremum Re = {re:.6} at t = {t:.3} us, nu_r = {nu:.3} MHz");
    }
    println!(
        "{stem}: {} cells, {} missing, {} regions with |Re| > 0.5",
        map.times.len() * map.rabi_freqs.len(),
        map.missing_cells(),
        regions.len()
    );
    Ok(EXIT_OK)
}

pub fn cmd_cut(cfg: &RunConfig, args: &CutArgs, out: &Path) -> Result<i32> {
    let req = args.cond.request(MapMode::PreAndPost, cfg);
    if req.mode == MapMode::PreOnly {
        return Err(Error::Config("cut compares a conditioned mode against pre_only".into()));
    }
    let conditioned = map_for(cfg, &req)?;
    let reference_prep = if req.mode == MapMode::PostOnly { Prep::MaximallyMixed } else { req.prep };
    let mut ureq = MapRequest::new(MapMode::PreOnly, reference_prep, Post::None);
    ureq.t_step = req.t_step;
    ureq.filter = req.filter.clone();
    let unconditioned = map_for(cfg, &ureq)?;

    let nu = &conditioned.rabi_freqs;
    let mut cuts = Vec::with_capacity(args.times.len());
    for &t in &args.times {
        let (Some(c), Some(u)) = (conditioned.cut(t), unconditioned.cut(t)) else {
            return Err(Error::Config(format!("t = {t} us is not on the time grid")));
        };
        cuts.push(CutRow {
            t,
            conditioned: c,
            unconditioned: u,
            conditioned_slope: max_abs_slope(nu, c),
            unconditioned_slope: max_abs_slope(nu, u),
        });
    }
    let mut w = create(out, "cut.csv")?;
    write_cut_csv(&mut w, nu, &cuts)?;
    w.flush()?;
    let mut w = create(out, "cut_slopes.csv")?;
    write_slopes_csv(&mut w, &cuts)?;
    w.flush()?;
    for c in &cuts {
        println!(
            "t = {} us: max slope conditioned {:.4} /MHz, unconditioned {:.4} /MHz",
            c.t, c.conditioned_slope, c.unconditioned_slope
        );
    }
    Ok(EXIT_OK)
}

fn mc_config(cfg: &RunConfig, args: &McArgs) -> Result<McConfig> {
    let mut mc = cfg.mc_config();
    if let Some(n) = args.n_traj {
        mc.n_traj = n;
    }
    if let Some(nu) = args.nu_r {
        mc.model.nu_r = nu;
    }
    if let Some(s) = args.seed {
        mc.master_seed = s;
    }
    if let Some(p) = args.prep {
        mc.prep = p.into();
    }
    mc.validate()?;
    Ok(mc)
}

pub fn cmd_mc(cfg: &RunConfig, args: &McArgs, out: &Path) -> Result<i32> {
    let mc = mc_config(cfg, args)?;
    let selection = Selection::from(args.selection);
    let stats = run_ensemble(&mc)?;
    let avg = stats.average(selection)?;
    let cmp = Comparison::new(&avg, predict_bins(&mc, selection)?);

    let name = selection.name();
    let mut w = create(out, &format!("mc_{name}.csv"))?;
    write_mc_csv(&mut w, &avg)?;
    w.flush()?;
    let mut w = create(out, &format!("mc_{name}_compare.csv"))?;
    write_mc_compare_csv(&mut w, &avg, &cmp)?;
    w.flush()?;

    let frac = avg.n_selected as f64 / avg.n_total as f64;
    let p = predicted_selection_fraction(&mc, selection)?;
    let se = (p * (1.0 - p) / avg.n_total as f64).sqrt();
    println!(
        "mc {name}: {} of {} shots selected ({frac:.5}; predicted {p:.5} +/- {se:.5})",
        avg.n_selected, avg.n_total
    );
    println!(
        "mc {name}: max |z| = {:.3}, {:.1}% of bins within |z| < 3",
        cmp.max_abs_z(),
        100.0 * cmp.fraction_within(3.0)
    );
    if cmp.max_abs_z() > Z_FAIL {
        eprintln!("error: a bin deviates by more than {Z_FAIL} standard errors");
        return Ok(EXIT_STATISTICAL);
    }
    Ok(EXIT_OK)
}

/// Exit code for an oracle report: 0 if every check passes, else 2.
pub fn oracle_exit_code(report: &OracleReport) -> i32 {
    if report.all_pass() {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

pub fn cmd_oracle(cfg: &RunConfig, out: &Path) -> Result<i32> {
    run_oracle_suite(&OracleSuite::default(), cfg, out)
}

pub fn run_oracle_suite(suite: &OracleSuite, cfg: &RunConfig, out: &Path) -> Result<i32> {
    let report = suite.run(&cfg.model)?;
    let json = report.to_json();
    println!("{json}");
    fs::create_dir_all(out)?;
    fs::write(out.join("oracle.json"), format!("{json}\n"))?;
    Ok(oracle_exit_code(&report))
}
