//! `relax validate`: parse a landscape file and report the structural
//! diagnostics. Exit 0 only when the landscape passes.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use relax_core::landscape::parse_landscape;

use crate::emit::Sink;
use crate::manifest::{read_input, RunManifest};
use crate::{CmdResult, Failure};

#[derive(Args)]
pub struct ValidateArgs {
    /// Landscape file in the `landscape v1` text format.
    pub file: PathBuf,
    /// Directory for the report and its manifest; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ValidateArgs) -> CmdResult {
    let mut manifest = RunManifest::new(
        "validate",
        json!({ "file": args.file.display().to_string() }),
        None,
    );
    let text = read_input(&args.file, &mut manifest)?;
    let landscape = parse_landscape(&text)?;
    let report = landscape.validate();

    let sink = Sink::new(args.out)?;
    sink.json("validate", &serde_json::to_value(report)?)?;
    sink.manifest("validate", &manifest)?;

    if report.pass {
        Ok(())
    } else {
        Err(Failure::Analysis(format!(
            "validation failed: {}",
            report.violations.join("; ")
        )))
    }
}
