//! One function per subcommand. Each builds its inputs from the config,
//! runs the library, and writes a single deterministic artifact (plus the
//! optional trace sidecar for `simulate`).

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use searchmkt::contracts::{compute_thresholds, phi};
use searchmkt::engine::{
    episode_rng, mc_estimate, simulate_episode_traced, verify_supported, AutomatonMode,
    DeviationOptions, OnPathContext, StrategyAutomaton,
};
use searchmkt::oracle::{aps_iterate, reject_all_certificate, scan_fixed_points, MinimaxRegime};
use searchmkt::profile::PayoffProfile;
use searchmkt::search::{autarky_value, mccall_reservation};
use searchmkt::sets::{
    equilibrium_descriptor, welfare_sets, EquilibriumDescriptor, InnerCertificate, Regime,
    WelfareSets,
};

use crate::config::{Format, GridSpec, RunConfig};
use crate::output::{csv_bytes, json_bytes, num, tag, Sink};
use crate::{CliError, Outcome};

/// Resolved run context: config plus command-line overrides.
pub struct Context {
    pub cfg: RunConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub trace: bool,
}

impl Context {
    fn sink(&self) -> Sink {
        Sink { out: self.out.clone() }
    }
}

/// Payoff-set artifact: the descriptor together with its welfare images.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PayoffSetArtifact {
    pub descriptor: EquilibriumDescriptor,
    pub welfare: WelfareSets,
}

/// One row of the `sweep` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: f64,
    pub autarky: f64,
    pub mccall: f64,
    pub phi: f64,
    pub minimax_regime: MinimaxRegime,
    pub set_regime: Regime,
    pub surplus_lo: f64,
    pub surplus_hi: f64,
    pub agent_lo: f64,
    pub agent_hi: f64,
    pub exact: bool,
}

/// The `sweep` artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub n: usize,
    pub rows: Vec<SweepRow>,
}

pub fn thresholds(ctx: &Context) -> Result<Outcome, CliError> {
    let prior = ctx.cfg.prior.build()?;
    let tol = ctx.cfg.tolerance_or(1e-6)?;
    let (t, _) = compute_thresholds(&prior)?;
    if t.bracket_width > tol {
        return Err(CliError::usage(format!(
            "achieved bracket width {} exceeds the requested tolerance {tol}",
            t.bracket_width
        )));
    }
    let bytes = match ctx.format {
        Format::Json => json_bytes(&t)?,
        Format::Csv => csv_bytes(
            &strings(&["k_star", "K", "epsilon", "k_double_star", "bracket_width"]),
            &[vec![
                num(t.k_star),
                num(t.capital_k),
                num(t.epsilon),
                num(t.k_double_star),
                num(t.bracket_width),
            ]],
        )?,
    };
    ctx.sink().write(&bytes)?;
    Ok(Outcome::ok())
}

pub fn payoff_set(ctx: &Context) -> Result<Outcome, CliError> {
    let prior = ctx.cfg.prior.build()?;
    let k = ctx.cfg.require_k()?;
    let n = ctx.cfg.require_n()?;
    let (mut t, _) = compute_thresholds(&prior)?;
    if let Some(eps) = ctx.cfg.eps {
        if !(eps > 0.0) {
            return Err(CliError::usage(format!("eps must be positive, got {eps}")));
        }
        t.epsilon = eps;
    }
    let descriptor = equilibrium_descriptor(&prior, n, k, &t)?;
    let welfare = welfare_sets(&descriptor);
    let artifact = PayoffSetArtifact { descriptor, welfare };
    let bytes = match ctx.format {
        Format::Json => json_bytes(&artifact)?,
        Format::Csv => {
            let mut header = vec!["set".to_string(), "vertex".to_string()];
            for i in 1..=n {
                header.push(format!("broker_{i}"));
            }
            header.push("agent".to_string());
            let mut rows = Vec::new();
            let mut push = |set: &str, idx: usize, p: &PayoffProfile| {
                let mut row = vec![set.to_string(), idx.to_string()];
                row.extend(p.brokers.iter().copied().map(num));
                row.push(num(p.agent));
                rows.push(row);
            };
            for (i, v) in artifact.descriptor.feasible.vertices.iter().enumerate() {
                push("feasible", i, v);
            }
            for (i, v) in inner_vertices(&artifact.descriptor).iter().enumerate() {
                push("inner", i, v);
            }
            csv_bytes(&header, &rows)?
        }
    };
    ctx.sink().write(&bytes)?;
    Ok(Outcome::ok())
}

fn inner_vertices(d: &EquilibriumDescriptor) -> Vec<PayoffProfile> {
    match &d.inner {
        InnerCertificate::FullFeasible => d.feasible.vertices.clone(),
        InnerCertificate::Point { point } => vec![point.clone()],
        InnerCertificate::CollarWithVertex { collar, vertex } => {
            let mut v = collar.vertices.clone();
            v.push(vertex.clone());
            v
        }
        InnerCertificate::VertexOnly { vertex } => vec![vertex.clone()],
    }
}

pub fn simulate(ctx: &Context) -> Result<Outcome, CliError> {
    let prior = ctx.cfg.prior.build()?;
    let k = ctx.cfg.require_k()?;
    let y = ctx.cfg.require_y()?;
    let trials = ctx.cfg.trials.unwrap_or(100_000);
    if trials == 0 {
        return Err(CliError::usage("trials must be at least 1"));
    }
    let report = mc_estimate(&prior, k, &y, trials, ctx.seed)?;
    let bytes = match ctx.format {
        Format::Json => json_bytes(&report)?,
        Format::Csv => csv_bytes(
            &strings(&["component", "mean", "se", "trials", "seed"]),
            &report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.component.clone(),
                        num(r.mean),
                        num(r.se),
                        r.trials.to_string(),
                        r.seed.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    ctx.sink().write(&bytes)?;

    if ctx.trace {
        let Some(out) = &ctx.out else {
            return Err(CliError::usage("--trace writes next to the artifact; use it with --out"));
        };
        let episodes = ctx.cfg.trace_episodes.unwrap_or(10).min(trials);
        let onpath = OnPathContext::new(&prior, k, &y)?;
        let mut lines = String::new();
        let mut rows = Vec::new();
        for ep in 0..episodes {
            rows.clear();
            let mut rng = episode_rng(ctx.seed, ep);
            simulate_episode_traced(&prior, &onpath, k, ep, &mut rng, &mut rows)?;
            for row in &rows {
                lines.push_str(
                    &serde_json::to_string(row)
                        .map_err(|e| CliError::usage(format!("cannot encode trace: {e}")))?,
                );
                lines.push('\n');
            }
        }
        let path = trace_path(out);
        fs::write(&path, lines)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(Outcome::ok())
}

fn trace_path(out: &PathBuf) -> PathBuf {
    let mut s: OsString = out.clone().into_os_string();
    s.push(".trace.jsonl");
    PathBuf::from(s)
}

pub fn verify(ctx: &Context) -> Result<Outcome, CliError> {
    let prior = ctx.cfg.prior.build()?;
    let k = ctx.cfg.require_k()?;
    let y = ctx.cfg.require_y()?;
    let tol = ctx.cfg.tolerance_or(1e-6)?;
    let mode = match &ctx.cfg.mode {
        None => AutomatonMode::Competitive,
        Some(m) => match m.kind.as_str() {
            "competitive" => {
                if m.nu.is_some() {
                    return Err(CliError::usage("nu only applies to monopoly_triangle"));
                }
                AutomatonMode::Competitive
            }
            "monopoly_triangle" => {
                let nu = m
                    .nu
                    .ok_or_else(|| CliError::usage("monopoly_triangle needs \"nu\""))?;
                AutomatonMode::MonopolyTriangle { nu }
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown mode {other:?}; expected competitive or monopoly_triangle"
                )))
            }
        },
    };
    let automaton = StrategyAutomaton::new(&prior, k, mode, y)?;
    let report = verify_supported(&prior, k, &automaton, tol, &DeviationOptions::default())?;
    let bytes = match ctx.format {
        Format::Json => json_bytes(&report)?,
        Format::Csv => csv_bytes(
            &strings(&["state", "generated", "agent_ok", "broker_ic", "worst_gain"]),
            &report
                .states
                .iter()
                .map(|s| {
                    vec![
                        s.state.clone(),
                        s.generated.to_string(),
                        s.agent_ok.to_string(),
                        s.broker_ic.to_string(),
                        num(s.worst_gain),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    ctx.sink().write(&bytes)?;
    Ok(Outcome { verification_failed: !report.pass })
}

pub fn minimax(ctx: &Context) -> Result<Outcome, CliError> {
    let prior = ctx.cfg.prior.build()?;
    let k = ctx.cfg.require_k()?;
    let points = ctx.cfg.scan_points.unwrap_or(201);
    if points < 100 {
        return Err(CliError::usage(format!("scan needs at least 100 points, got {points}")));
    }
    let report = scan_fixed_points(&prior, k, points)?;
    let bytes = match ctx.format {
        Format::Json => json_bytes(&report)?,
        Format::Csv => csv_bytes(
            &strings(&["y1", "bound", "excess"]),
            &report
                .rows
                .iter()
                .map(|r| vec![num(r.y1), num(r.bound), num(r.excess)])
                .collect::<Vec<_>>(),
        )?,
    };
    ctx.sink().write(&bytes)?;
    Ok(Outcome::ok())
}

pub fn aps(ctx: &Context) -> Result<Outcome, CliError> {
    let prior = ctx.cfg.prior.build()?;
    let k = ctx.cfg.require_k()?;
    let grid = ctx.cfg.grid.unwrap_or(GridSpec { nx: 100, ny: 100 });
    if grid.nx < 50 || grid.ny < 50 {
        return Err(CliError::usage(format!(
            "grid must be at least 50x50, got {}x{}",
            grid.nx, grid.ny
        )));
    }
    let rounds = ctx.cfg.max_rounds.unwrap_or(500);
    let report = aps_iterate(&prior, k, grid.nx, grid.ny, rounds)?;
    let bytes = match ctx.format {
        Format::Json => json_bytes(&report)?,
        Format::Csv => {
            // Occupancy matrix: one row per broker guarantee, one column per
            // agent value.
            let mut header = vec!["y1".to_string()];
            for j in 0..report.ny {
                header.push(num(report.lower + report.cell.1 * j as f64));
            }
            let rows: Vec<Vec<String>> = report
                .occupancy
                .iter()
                .enumerate()
                .map(|(i, col)| {
                    let mut row = vec![num(report.cell.0 * i as f64)];
                    row.extend(col.iter().map(|&alive| if alive { "1" } else { "0" }.to_string()));
                    row
                })
                .collect();
            csv_bytes(&header, &rows)?
        }
    };
    ctx.sink().write(&bytes)?;
    Ok(Outcome::ok())
}

pub fn sweep(ctx: &Context) -> Result<Outcome, CliError> {
    let prior = ctx.cfg.prior.build()?;
    let ks = ctx
        .cfg
        .k_grid
        .as_ref()
        .ok_or_else(|| CliError::usage("sweep needs \"k_grid\" in the config"))?
        .values()?;
    let n = ctx.cfg.n.unwrap_or(1);
    let (t, _) = compute_thresholds(&prior)?;
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let descriptor = equilibrium_descriptor(&prior, n, k, &t)?;
        let welfare = welfare_sets(&descriptor);
        let minimax_regime = if reject_all_certificate(&prior, k)?.holds {
            MinimaxRegime::NuZero
        } else {
            MinimaxRegime::NuFullSurplus
        };
        rows.push(SweepRow {
            k,
            autarky: autarky_value(&prior, k)?,
            mccall: mccall_reservation(&prior, k)?,
            phi: phi(&prior, k)?,
            minimax_regime,
            set_regime: descriptor.regime,
            surplus_lo: welfare.surplus_attained.lo,
            surplus_hi: welfare.surplus_attained.hi,
            agent_lo: welfare.agent_attained.lo,
            agent_hi: welfare.agent_attained.hi,
            exact: welfare.exact,
        });
    }
    let report = SweepReport { n, rows };
    let bytes = match ctx.format {
        Format::Json => json_bytes(&report)?,
        Format::Csv => csv_bytes(
            &strings(&[
                "k",
                "autarky",
                "mccall",
                "phi",
                "minimax_regime",
                "set_regime",
                "surplus_lo",
                "surplus_hi",
                "agent_lo",
                "agent_hi",
                "exact",
            ]),
            &report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.k),
                        num(r.autarky),
                        num(r.mccall),
                        num(r.phi),
                        tag(&r.minimax_regime),
                        tag(&r.set_regime),
                        num(r.surplus_lo),
                        num(r.surplus_hi),
                        num(r.agent_lo),
                        num(r.agent_hi),
                        r.exact.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    ctx.sink().write(&bytes)?;
    Ok(Outcome::ok())
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}
