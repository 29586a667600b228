//! `relax analyze`: the relaxation report, the necessity verdict, an
//! optional second-route cross-check, and optional gate enumeration for a
//! chosen pair.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use relax_core::landscape::parse_landscape;
use relax_core::EnergyLandscape;

use crate::args::parse_states;
use crate::emit::Sink;
use crate::manifest::{read_input, RunManifest};
use crate::{CmdResult, Failure};

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Landscape file in the `landscape v1` text format.
    pub file: PathBuf,
    /// Cross-run the independent per-state search and fail on any mismatch.
    #[arg(long)]
    pub oracle: bool,
    /// Enumerate minimal gates between two states.
    #[arg(long, num_args = 2, value_names = ["SIGMA", "ETA"])]
    pub gates: Option<Vec<String>>,
    /// Directory for the report and its manifest; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: AnalyzeArgs) -> CmdResult {
    let mut manifest = RunManifest::new(
        "analyze",
        json!({
            "file": args.file.display().to_string(),
            "oracle": args.oracle,
            "gates": args.gates,
        }),
        None,
    );
    let text = read_input(&args.file, &mut manifest)?;
    let landscape = parse_landscape(&text)?;

    let report = landscape.relaxation_analysis()?;
    let necessity = if report.gamma_m.is_some() {
        Some(landscape.verify_necessity()?)
    } else {
        None
    };

    let oracle_match = if args.oracle {
        Some(cross_check(&landscape)?)
    } else {
        None
    };

    let gates = match &args.gates {
        Some(pair) => {
            let ids = parse_states(pair)?;
            let minimal = landscape.minimal_gates(ids[0], ids[1])?;
            let saddles = landscape.optimal_saddles(ids[0], ids[1])?;
            Some(json!({
                "sigma": ids[0],
                "eta": ids[1],
                "phi": landscape.communication_height(ids[0], ids[1])?,
                "optimal_saddles": saddles,
                "minimal_gates": minimal,
            }))
        }
        None => None,
    };

    let payload = json!({
        "report": report,
        "necessity": necessity,
        "oracle_match": oracle_match,
        "gates": gates,
    });
    let sink = Sink::new(args.out)?;
    sink.json("analyze", &payload)?;
    sink.manifest("analyze", &manifest)?;

    if oracle_match == Some(false) {
        return Err(Failure::Analysis(
            "analysis routes disagree; see report".into(),
        ));
    }
    if let Some(v) = &necessity {
        if !v.pass {
            return Err(Failure::Analysis("necessity check failed".into()));
        }
    }
    Ok(())
}

/// True when both routes agree on the height, the set, and every level.
fn cross_check(landscape: &EnergyLandscape) -> Result<bool, Failure> {
    let fast = landscape.relaxation_analysis()?;
    let slow = landscape.relaxation_bruteforce()?;
    let heights_match = match (fast.gamma_m, slow.gamma_m) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
        (a, b) => a == b,
    };
    Ok(heights_match
        && fast.metastable_set == slow.metastable_set
        && fast.ground_states == slow.ground_states
        && fast.stability.len() == slow.stability.len()
        && fast
            .stability
            .iter()
            .all(|(x, v)| (v - slow.stability[x]).abs() <= 1e-9))
}
