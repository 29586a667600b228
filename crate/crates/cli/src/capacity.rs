//! `relax capacity`: the scaled-capacity probe, the metastability-ratio
//! decay report, and the dual-route potential solve.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde_json::json;

use relax_core::capacity::{
    absorbing_probability, build_chain, capacity_of, easy_bounds_probe, log_pta_ratio,
    QWeights,
};
use relax_core::fit::fit_line;
use relax_core::landscape::parse_landscape;

use crate::args::{parse_states, BetaGrid};
use crate::emit::Sink;
use crate::manifest::{read_input, RunManifest};
use crate::{CmdResult, Failure};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
pub enum CapacityCmd {
    /// Scaled capacity g(beta) between two sets along a beta grid.
    Probe(ProbeArgs),
    /// Metastability ratio of a candidate set along a beta grid.
    Pta(PtaArgs),
    /// Equilibrium potential by both solver routes, with their residual.
    Solve(SolveArgs),
}

#[derive(Args)]
pub struct ProbeArgs {
    pub file: PathBuf,
    /// Source set (state ids).
    #[arg(long, num_args = 1.., required = true)]
    pub a: Vec<String>,
    /// Target set (state ids).
    #[arg(long, num_args = 1.., required = true)]
    pub b: Vec<String>,
    /// Grid START:STOP:STEP, endpoints included; at least four points.
    #[arg(long, value_parser = crate::args::parse_beta_grid)]
    pub betas: BetaGrid,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PtaArgs {
    pub file: PathBuf,
    /// Candidate metastable set (state ids), at least two members.
    #[arg(long, num_args = 1.., required = true)]
    pub m: Vec<String>,
    #[arg(long, value_parser = crate::args::parse_beta_grid)]
    pub betas: BetaGrid,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    pub a: Vec<String>,
    #[arg(long, num_args = 1.., required = true)]
    pub b: Vec<String>,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cmd: CapacityCmd) -> CmdResult {
    match cmd {
        CapacityCmd::Probe(a) => probe(a),
        CapacityCmd::Pta(a) => pta(a),
        CapacityCmd::Solve(a) => solve(a),
    }
}

fn probe(args: ProbeArgs) -> CmdResult {
    let mut manifest = RunManifest::new(
        "capacity probe",
        json!({
            "file": args.file.display().to_string(),
            "a": args.a,
            "b": args.b,
            "betas": args.betas.0,
        }),
        None,
    );
    let text = read_input(&args.file, &mut manifest)?;
    let landscape = parse_landscape(&text)?;
    let a = parse_states(&args.a)?;
    let b = parse_states(&args.b)?;

    let result = easy_bounds_probe(&landscape, &QWeights::default(), &a, &b, &args.betas.0)?;

    let sink = Sink::new(args.out)?;
    match args.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|r| {
                    vec![r.beta.to_string(), r.g.to_string(), r.log_g.to_string()]
                })
                .collect();
            sink.csv("probe", &["beta", "g", "log_g"], &rows)?;
        }
        Format::Json => sink.json("probe", &serde_json::to_value(&result)?)?,
    }
    sink.manifest("probe", &manifest)?;
    Ok(())
}

fn pta(args: PtaArgs) -> CmdResult {
    let mut manifest = RunManifest::new(
        "capacity pta",
        json!({
            "file": args.file.display().to_string(),
            "m": args.m,
            "betas": args.betas.0,
        }),
        None,
    );
    let text = read_input(&args.file, &mut manifest)?;
    let landscape = parse_landscape(&text)?;
    let m = parse_states(&args.m)?;

    let mut log_ratios = Vec::with_capacity(args.betas.0.len());
    for &beta in &args.betas.0 {
        log_ratios.push(log_pta_ratio(&landscape, &QWeights::default(), &m, beta)?);
    }
    let fit = fit_line(&args.betas.0, &log_ratios);

    let sink = Sink::new(args.out)?;
    match args.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = args
                .betas
                .0
                .iter()
                .zip(&log_ratios)
                .map(|(b, lr)| vec![b.to_string(), lr.exp().to_string(), lr.to_string()])
                .collect();
            sink.csv("pta", &["beta", "ratio", "log_ratio"], &rows)?;
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = args
                .betas
                .0
                .iter()
                .zip(&log_ratios)
                .map(|(b, lr)| json!({ "beta": b, "ratio": lr.exp(), "log_ratio": lr }))
                .collect();
            let payload = json!({
                "m": m,
                "rows": rows,
                "slope": fit.as_ref().map(|f| f.slope),
                "slope_stderr": fit.as_ref().map(|f| f.slope_stderr),
                "decays": fit.as_ref().map(|f| f.slope < -0.01),
            });
            sink.json("pta", &payload)?;
        }
    }
    sink.manifest("pta", &manifest)?;
    Ok(())
}

fn solve(args: SolveArgs) -> CmdResult {
    let mut manifest = RunManifest::new(
        "capacity solve",
        json!({
            "file": args.file.display().to_string(),
            "a": args.a,
            "b": args.b,
            "beta": args.beta,
        }),
        None,
    );
    let text = read_input(&args.file, &mut manifest)?;
    let landscape = parse_landscape(&text)?;
    let a = parse_states(&args.a)?;
    let b = parse_states(&args.b)?;

    let chain = build_chain(&landscape, &QWeights::default(), args.beta)?;
    let result = capacity_of(&chain, &a, &b)?;
    let other = absorbing_probability(&chain, &a, &b)?;
    let residual = result
        .potential
        .iter()
        .zip(&other)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0f64, f64::max);

    let mut payload = serde_json::to_value(&result)?;
    payload["cross_residual"] = json!(residual);

    let sink = Sink::new(args.out)?;
    sink.json("solve", &payload)?;
    sink.manifest("solve", &manifest)?;
    if !residual.is_finite() {
        return Err(Failure::Analysis("potential routes diverged".into()));
    }
    Ok(())
}
