//! Markdown report combining every stage of the pipeline.
//!
//! The text depends only on the data directory, the seed and the report
//! flags; it carries no timestamps or paths so reruns are byte-identical.

use std::fmt::Write as _;

use stampede_core::crowdsim::{run, SimOutcome};
use stampede_core::dataset::JoinedPanel;
use stampede_core::regression::fit_trend;

use crate::commands::{f6, fit_model, mine, panel, resolve_simulation, risk_timeline};
use crate::{CliError, MineArgs, RegressArgs, ReportArgs, RiskArgs, RunConfig, SimulateArgs};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), f6)
}

fn regression_section(out: &mut String, panel: &JoinedPanel) -> Result<(), CliError> {
    let (fit, warnings) = fit_model(panel, &RegressArgs::default())?;
    writeln!(out, "## Regression: fatalities ~ density + admin_score\n").unwrap();
    writeln!(out, "| term | coefficient | std. error | t | p |").unwrap();
    writeln!(out, "|---|---:|---:|---:|---:|").unwrap();
    for (j, name) in fit.names.iter().enumerate() {
        let inf = fit.inference.as_ref();
        writeln!(
            out,
            "| {name} | {} | {} | {} | {} |",
            f6(fit.coefficients[j]),
            opt(inf.map(|i| i.std_errors[j])),
            opt(inf.map(|i| i.t_stats[j])),
            opt(inf.map(|i| i.p_values[j])),
        )
        .unwrap();
    }
    writeln!(
        out,
        "\nR² = {}, residual dof = {}.\n",
        f6(fit.r_squared),
        fit.dof
    )
    .unwrap();
    for w in &warnings {
        writeln!(out, "- Note: {w}.").unwrap();
    }
    writeln!(
        out,
        "- Note: the published coefficients for this model (density 68.2, admin score −12.4) \
         cannot be reproduced from the incident, inquiry and venue tables; the values above are \
         the exact least-squares solution on those tables.\n"
    )
    .unwrap();

    let trend = fit_trend(&panel.years(), &panel.fatalities())?;
    writeln!(out, "## Fatality trend\n").unwrap();
    writeln!(
        out,
        "Least-squares slope {} fatalities per year (intercept {}, R² = {}).\n",
        f6(trend.slope),
        f6(trend.intercept),
        f6(trend.r_squared)
    )
    .unwrap();
    Ok(())
}

fn risk_section(out: &mut String, panel: &JoinedPanel) -> Result<(), CliError> {
    let args = RiskArgs::default();
    let (_, rows, fraction) = risk_timeline(panel, &args)?;
    writeln!(out, "## Crowd Risk Index\n").unwrap();
    writeln!(out, "| year | CRI | density | choke | velocity | admin |").unwrap();
    writeln!(out, "|---|---:|---:|---:|---:|---:|").unwrap();
    for r in &rows {
        let c = &r.components;
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            r.year,
            f6(r.cri),
            f6(c.density),
            f6(c.choke),
            f6(c.velocity),
            f6(c.admin)
        )
        .unwrap();
    }
    writeln!(
        out,
        "\nVenues with a chokepoint narrower than {} m: {}.\n",
        f6(args.choke_threshold),
        f6(fraction)
    )
    .unwrap();
    Ok(())
}

fn simulation_section(
    out: &mut String,
    cfg: &RunConfig,
    panel: &JoinedPanel,
    args: &ReportArgs,
) -> Result<(), CliError> {
    writeln!(out, "## Simulated breaches\n").unwrap();
    writeln!(
        out,
        "Each venue preset with VIP routes closed, {} agents, {} s, seed {}.\n",
        args.agents,
        f6(args.duration),
        cfg.seed()
    )
    .unwrap();
    writeln!(
        out,
        "| year | open exits | chokepoint (m) | exited | incapacitated | peak density | 90% exit time (s) | breach events | first critical (s) |"
    )
    .unwrap();
    writeln!(out, "|---|---:|---:|---:|---:|---:|---:|---:|---:|").unwrap();
    for year in panel.years() {
        let sim_args = SimulateArgs {
            preset: Some(year),
            agents: Some(args.agents),
            duration: Some(args.duration),
            serial: args.serial,
            ..SimulateArgs::default()
        };
        let setup = resolve_simulation(cfg, &sim_args)?;
        let o: SimOutcome = run(&setup.scenario, &setup.params, &setup.schedule)?;
        let first_critical = o
            .breach_events
            .iter()
            .find(|b| b.level == stampede_core::risk::DensityClass::Critical)
            .map(|b| b.time);
        writeln!(
            out,
            "| {year} | {} | {} | {} | {} | {} | {} | {} | {} |",
            setup.scenario.open_exit_count(),
            f6(setup.scenario.chokepoint_width),
            o.exited,
            o.incapacitated,
            f6(o.peak_density),
            opt(o.time_to_90pct_exit),
            o.breach_events.len(),
            opt(first_critical),
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    Ok(())
}

fn text_section(out: &mut String, cfg: &RunConfig) -> Result<(), CliError> {
    let mined = mine(cfg, &MineArgs::default())?;
    writeln!(out, "## Inquiry text mining\n").unwrap();
    writeln!(out, "### Recurring phrases\n").unwrap();
    if mined.recurring.is_empty() {
        writeln!(out, "no recurring phrases\n").unwrap();
    } else {
        for p in &mined.recurring {
            let years: Vec<String> = p.years.iter().map(i32::to_string).collect();
            writeln!(out, "- {} ({})", p.ngram, years.join(", ")).unwrap();
        }
        writeln!(out).unwrap();
    }
    writeln!(out, "### Top TF-IDF terms\n").unwrap();
    writeln!(out, "| year | terms |").unwrap();
    writeln!(out, "|---|---|").unwrap();
    for (year, terms) in &mined.top {
        let list: Vec<String> = terms
            .iter()
            .map(|(t, w)| format!("{t} ({})", f6(*w)))
            .collect();
        writeln!(out, "| {year} | {} |", list.join(", ")).unwrap();
    }
    Ok(())
}

/// Renders the full report as markdown.
pub fn cmd_report(cfg: &RunConfig, args: &ReportArgs) -> Result<String, CliError> {
    let (panel, warnings) = panel(cfg)?;
    let mut out = String::new();
    writeln!(out, "# Crowd-disaster analysis report\n").unwrap();
    writeln!(
        out,
        "{} years joined ({}), {} warnings.\n",
        panel.len(),
        panel
            .years()
            .iter()
            .map(i32::to_string)
            .collect::<Vec<_>>()
            .join(", "),
        warnings.len()
    )
    .unwrap();
    for w in &warnings {
        writeln!(out, "- Warning: {w}").unwrap();
    }
    if !warnings.is_empty() {
        writeln!(out).unwrap();
    }
    regression_section(&mut out, &panel)?;
    risk_section(&mut out, &panel)?;
    simulation_section(&mut out, cfg, &panel, args)?;
    text_section(&mut out, cfg)?;
    Ok(out)
}
