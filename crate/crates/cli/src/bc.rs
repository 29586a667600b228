//! `relax bc`: droplet-model experiments on the torus. `exact` enumerates
//! small lattices into a landscape and analyzes it; `path` emits the
//! reference nucleation profile; `sim` and `gate` run seeded Monte Carlo
//! against the exact structure; `quantities` prints the critical formulas.

use std::collections::HashSet;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde_json::json;

use relax_core::blume_capel::{
    critical_quantities, enumerate_torus, reference_path, BcDynamics, ModelParams,
    SpinConfiguration, DEFAULT_ENUMERATION_BUDGET,
};
use relax_core::capacity::{build_chain, equilibrium_potential, QWeights};
use relax_core::markov::{
    default_step_cap, exit_time_experiment, gate_passage_experiment, SimConfig,
};
use relax_core::StateId;

use crate::args::BetaGrid;
use crate::emit::Sink;
use crate::manifest::RunManifest;
use crate::{CmdResult, Failure};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
pub enum BcCmd {
    /// Enumerate the full torus (small sides only) and analyze it.
    Exact(ExactArgs),
    /// Reference nucleation path with its height profile.
    Path(PathArgs),
    /// Seeded exit-time experiment from the deepest uniform phase.
    Sim(SimArgs),
    /// Gate-passage fractions against the enumerated minimal gate.
    Gate(GateArgs),
    /// Critical length, barrier, and regime conditions.
    Quantities(QuantitiesArgs),
}

#[derive(Args)]
pub struct ExactArgs {
    /// External field strength.
    #[arg(long = "h")]
    pub field: f64,
    /// Torus side length.
    #[arg(long = "L", default_value_t = 3)]
    pub side: usize,
    /// Chemical potential.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Enumeration budget in bytes.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub memory_budget: u64,
    /// Skip minimal-gate enumeration for the extreme phase pair.
    #[arg(long)]
    pub no_gates: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PathArgs {
    #[arg(long = "h")]
    pub field: f64,
    #[arg(long = "L")]
    pub side: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimArgs {
    #[arg(long = "h")]
    pub field: f64,
    #[arg(long = "L")]
    pub side: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Grid START:STOP:STEP, endpoints included.
    #[arg(long, value_parser = crate::args::parse_beta_grid)]
    pub betas: BetaGrid,
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Per-replica step cap; defaults to the uninformed bound.
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GateArgs {
    #[arg(long = "h")]
    pub field: f64,
    #[arg(long = "L", default_value_t = 3)]
    pub side: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub memory_budget: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct QuantitiesArgs {
    #[arg(long = "h")]
    pub field: f64,
    /// Torus side for the finite-size condition report; defaults to the
    /// smallest side that fits a critical droplet.
    #[arg(long = "L")]
    pub side: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cmd: BcCmd) -> CmdResult {
    match cmd {
        BcCmd::Exact(a) => exact(a),
        BcCmd::Path(a) => path(a),
        BcCmd::Sim(a) => sim(a),
        BcCmd::Gate(a) => gate(a),
        BcCmd::Quantities(a) => quantities(a),
    }
}

/// All-minus is state 0 and all-plus is 3^n - 1 in the enumeration
/// encoding; the uniform zero phase sits exactly between them.
fn phase_ids(n_sites: usize) -> (StateId, StateId, StateId) {
    let top = 3u64.pow(n_sites as u32) - 1;
    (0, (top / 2) as StateId, top as StateId)
}

fn exact(args: ExactArgs) -> CmdResult {
    let manifest = RunManifest::new(
        "bc exact",
        json!({
            "h": args.field,
            "L": args.side,
            "lambda": args.lambda,
            "memory_budget": args.memory_budget,
            "no_gates": args.no_gates,
        }),
        None,
    );
    let params = ModelParams::with_lambda(args.side, args.field, args.lambda)?;
    let landscape = enumerate_torus(&params, args.memory_budget)?;
    let report = landscape.relaxation_analysis()?;
    let (minus, _, plus) = phase_ids(params.n_sites());

    let decode = |ids: &[StateId]| -> Result<Vec<String>, Failure> {
        ids.iter()
            .map(|&id| {
                Ok(SpinConfiguration::decode(id as u64, args.side)?.to_grid())
            })
            .collect()
    };

    let gates = if args.no_gates {
        None
    } else {
        let minimal = landscape.minimal_gates(minus, plus)?;
        Some(json!({
            "sigma": minus,
            "eta": plus,
            "phi": landscape.communication_height(minus, plus)?,
            "optimal_saddles": landscape.optimal_saddles(minus, plus)?,
            "minimal_gates": minimal,
        }))
    };

    let condition = params.condition_report();
    let payload = json!({
        "params": params,
        "states": landscape.len(),
        "edges": landscape.n_edges(),
        "report": report,
        "metastable_grids": decode(&report.metastable_set)?,
        "ground_grids": decode(&report.ground_states)?,
        "gates": gates,
        "condition": condition,
        "warnings": condition.warnings(),
    });

    let sink = Sink::new(args.out)?;
    sink.json("bc_exact", &payload)?;
    sink.manifest("bc_exact", &manifest)?;
    Ok(())
}

fn path(args: PathArgs) -> CmdResult {
    let manifest = RunManifest::new(
        "bc path",
        json!({ "h": args.field, "L": args.side }),
        None,
    );
    let params = ModelParams::new(args.side, args.field)?;
    let profile = reference_path(&params)?;
    let quantities = critical_quantities(&params)?;

    let base1 = profile.energies[0];
    let base2 = profile.energies[profile.zero_index];
    let excess = |i: usize| {
        if i <= profile.zero_index {
            profile.energies[i] - base1
        } else {
            profile.energies[i] - base2
        }
    };

    let max1 = profile
        .leg1_energies()
        .iter()
        .map(|e| e - base1)
        .fold(f64::MIN, f64::max);
    let max2 = profile
        .leg2_energies()
        .iter()
        .map(|e| e - base2)
        .fold(f64::MIN, f64::max);

    let sink = Sink::new(args.out)?;
    match args.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..profile.energies.len())
                .map(|i| {
                    vec![
                        i.to_string(),
                        if i <= profile.zero_index { "1" } else { "2" }.to_string(),
                        profile.energies[i].to_string(),
                        excess(i).to_string(),
                    ]
                })
                .collect();
            sink.csv("bc_path", &["step", "leg", "energy", "excess"], &rows)?;
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = (0..profile.energies.len())
                .map(|i| {
                    json!({
                        "step": i,
                        "leg": if i <= profile.zero_index { 1 } else { 2 },
                        "energy": profile.energies[i],
                        "excess": excess(i),
                    })
                })
                .collect();
            sink.json("bc_path", &json!({ "rows": rows }))?;
        }
    }
    let summary = json!({
        "steps": profile.energies.len(),
        "zero_index": profile.zero_index,
        "max_excess_leg1": max1,
        "max_excess_leg2": max2,
        "gamma_c": quantities.gamma_c,
        "ell_c": quantities.ell_c,
    });
    sink.json("bc_path_summary", &summary)?;
    sink.manifest("bc_path", &manifest)?;
    Ok(())
}

fn sim(args: SimArgs) -> CmdResult {
    let betas = args.betas.0.clone();
    let cap = args
        .cap
        .unwrap_or_else(|| default_step_cap(None, betas[betas.len() - 1]));
    let manifest = RunManifest::new(
        "bc sim",
        json!({
            "h": args.field,
            "L": args.side,
            "lambda": args.lambda,
            "betas": betas,
            "replicas": args.replicas,
            "cap": cap,
        }),
        Some(args.seed),
    );
    let params = ModelParams::with_lambda(args.side, args.field, args.lambda)?;
    let model = BcDynamics::new(params, betas[0])?;
    let start = SpinConfiguration::uniform(args.side, -1)?;
    let config = SimConfig {
        betas,
        replicas: args.replicas,
        master_seed: args.seed,
        step_cap: cap,
    };
    let stats = exit_time_experiment(
        &model,
        &start,
        |c: &SpinConfiguration| c.spins().iter().all(|&s| s == 1),
        &config,
    )
    .map_err(|e| Failure::Input(e.to_string()))?;

    let rows: Vec<Vec<String>> = stats
        .rows
        .iter()
        .map(|r| {
            vec![
                r.beta.to_string(),
                r.n.to_string(),
                r.censored.to_string(),
                r.mean_tau.to_string(),
                r.median_tau.to_string(),
                r.ln_mean.to_string(),
            ]
        })
        .collect();
    let summary = json!({
        "slope": stats.slope,
        "slope_stderr": stats.slope_stderr,
        "betas": stats.rows.len(),
    });

    let sink = Sink::new(args.out)?;
    sink.csv(
        "bc_sim",
        &["beta", "n", "censored", "mean_tau", "median_tau", "ln_mean"],
        &rows,
    )?;
    sink.json("bc_sim_summary", &summary)?;
    sink.manifest("bc_sim", &manifest)?;
    Ok(())
}

fn gate(args: GateArgs) -> CmdResult {
    let manifest = RunManifest::new(
        "bc gate",
        json!({
            "h": args.field,
            "L": args.side,
            "beta": args.beta,
            "replicas": args.replicas,
            "cap": args.cap,
            "memory_budget": args.memory_budget,
        }),
        Some(args.seed),
    );
    let params = ModelParams::new(args.side, args.field)?;
    let landscape = enumerate_torus(&params, args.memory_budget)?;
    let report = landscape.relaxation_analysis()?;
    let (minus, _, plus) = phase_ids(params.n_sites());

    let minimal = landscape.minimal_gates(minus, plus)?;
    let mut union: Vec<StateId> = minimal.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    if union.is_empty() {
        return Err(Failure::Analysis(
            "no minimal gate separates the extreme phases".into(),
        ));
    }

    // exact passage probability from the potential of gate against plus
    let chain = build_chain(&landscape, &QWeights::default(), args.beta)?;
    let potential = equilibrium_potential(&chain, &union, &[plus])?;
    let exact_fraction = potential[minus];

    let gate_ids: HashSet<u64> = union.iter().map(|&x| x as u64).collect();
    let model = BcDynamics::new(params, args.beta)?;
    let start = SpinConfiguration::uniform(args.side, -1)?;
    let cap = args
        .cap
        .unwrap_or_else(|| default_step_cap(report.gamma_m, args.beta));
    let passage = gate_passage_experiment(
        &model,
        &start,
        |c: &SpinConfiguration| {
            c.encode().map(|id| gate_ids.contains(&id)).unwrap_or(false)
        },
        |c: &SpinConfiguration| c.spins().iter().all(|&s| s == 1),
        args.beta,
        args.replicas,
        args.seed,
        cap,
    );

    let rows = vec![vec![
        passage.beta.to_string(),
        passage.fraction.to_string(),
        passage.n.to_string(),
        passage.censored.to_string(),
    ]];
    let summary = json!({
        "beta": args.beta,
        "gate_size": union.len(),
        "minimal_gate_count": minimal.len(),
        "exact_fraction": exact_fraction,
        "mc_fraction": passage.fraction,
        "replicas": passage.n,
        "censored": passage.censored,
        "step_cap": cap,
    });

    let sink = Sink::new(args.out)?;
    sink.csv("bc_gate", &["beta", "fraction", "n", "censored"], &rows)?;
    sink.json("bc_gate_summary", &summary)?;
    sink.manifest("bc_gate", &manifest)?;
    Ok(())
}

fn quantities(args: QuantitiesArgs) -> CmdResult {
    let manifest = RunManifest::new(
        "bc quantities",
        json!({ "h": args.field, "L": args.side, "lambda": args.lambda }),
        None,
    );
    let side = args.side.unwrap_or_else(|| {
        if args.field > 0.0 {
            (2.0 / args.field).floor() as usize + 3
        } else {
            3
        }
    });
    let params = ModelParams::with_lambda(side, args.field, args.lambda)?;
    let q = critical_quantities(&params)?;

    let payload = json!({
        "params": params,
        "ell_c": q.ell_c,
        "gamma_c": q.gamma_c,
        "critical_area": q.critical_area(),
        "condition": q.condition,
        "warnings": q.condition.warnings(),
    });
    let sink = Sink::new(args.out)?;
    sink.json("bc_quantities", &payload)?;
    sink.manifest("bc_quantities", &manifest)?;
    Ok(())
}
