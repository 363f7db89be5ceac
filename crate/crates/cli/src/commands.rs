use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use stampede_core::crowdsim::sim::{trajectory_rows, TRAJECTORY_HEADER};
use stampede_core::crowdsim::{
    build_scenario, run_with, RitualSchedule, RitualWindow, Scenario, ScenarioConfig, SimError,
    SimOutcome, SimParams,
};
use stampede_core::dataset::{
    encode_categorical, load_panel, load_venues, minmax_normalize, JoinedPanel, Trigger,
};
use stampede_core::regression::{fit_ols, fit_trend, DesignMatrix, RegressionFit};
use stampede_core::risk::{choke_fraction, cri_timeline, CriReference, CriRow, CriWeights};
use stampede_core::round6;
use stampede_core::textmine::{
    recurring_phrases, tfidf, top_terms, Corpus, Normalizer, RecurringPhrase, Stoplist, TfIdfModel,
};

use crate::{CliError, MineArgs, RegressArgs, RiskArgs, RunConfig, SimulateArgs};

/// What a subcommand produces: a JSON document, its CSV rendering, and
/// diagnostics destined for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub json: Value,
    pub csv: String,
    pub notes: Vec<String>,
}

impl Artifact {
    pub fn json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("JSON values always serialize");
        s.push('\n');
        s
    }
}

pub(crate) fn f6(v: f64) -> String {
    format!("{:.6}", round6(v))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn panel(cfg: &RunConfig) -> Result<(JoinedPanel, Vec<String>), CliError> {
    Ok(load_panel(&cfg.data_dir)?)
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let (panel, warnings) = panel(cfg)?;
    let summary = format!(
        "{} years joined, {} warning{}",
        panel.len(),
        warnings.len(),
        if warnings.len() == 1 { "" } else { "s" }
    );
    let rows: Vec<Value> = panel
        .rows
        .iter()
        .map(|r| {
            json!({
                "year": r.year,
                "fatalities": r.incident.fatalities,
                "injuries": r.incident.injuries,
                "density_ppm2": round6(r.incident.density),
                "trigger": r.incident.trigger.label(),
                "admin_response": r.incident.admin_response,
                "key_phrases": r.inquiry.key_phrases,
                "effectiveness_score": r.inquiry.effectiveness_score,
                "chokepoint_width_m": round6(r.venue.chokepoint_width),
                "exits": r.venue.exits,
                "vip_routes": r.venue.vip_routes,
            })
        })
        .collect();

    let mut csv = String::from(
        "year,fatalities,injuries,density_ppm2,trigger,admin_response,key_phrases,\
         effectiveness_score,chokepoint_width_m,exits,vip_routes\n",
    );
    for r in &panel.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.year,
            r.incident.fatalities,
            r.incident.injuries,
            round6(r.incident.density),
            csv_field(r.incident.trigger.label()),
            csv_field(&r.incident.admin_response),
            csv_field(&r.inquiry.key_phrases.join(";")),
            r.inquiry.effectiveness_score,
            round6(r.venue.chokepoint_width),
            r.venue.exits,
            r.venue.vip_routes,
        ));
    }

    let mut notes = vec![summary.clone()];
    notes.extend(warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Artifact {
        json: json!({
            "summary": summary,
            "years": panel.years(),
            "dropped_years": panel.dropped_years,
            "warnings": warnings,
            "rows": rows,
        }),
        csv,
        notes,
    })
}

/// Numeric panel column by name. `trigger` is categorical and handled by
/// [`design_columns`].
fn panel_column(panel: &JoinedPanel, name: &str) -> Option<Vec<f64>> {
    let col =
        |f: &dyn Fn(&stampede_core::dataset::PanelRow) -> f64| panel.rows.iter().map(f).collect();
    Some(match name {
        "fatalities" => col(&|r| r.incident.fatalities as f64),
        "injuries" => col(&|r| r.incident.injuries as f64),
        "density" => col(&|r| r.incident.density),
        "admin_score" => col(&|r| r.inquiry.effectiveness_score as f64),
        "chokepoint_width" => col(&|r| r.venue.chokepoint_width),
        "exits" => col(&|r| r.venue.exits as f64),
        "vip_routes" => col(&|r| r.venue.vip_routes as f64),
        "open_exits" => col(&|r| r.venue.open_exits() as f64),
        "year" => col(&|r| r.year as f64),
        _ => return None,
    })
}

fn unknown_column(name: &str) -> CliError {
    CliError::Usage(format!(
        "unknown panel column '{name}' (expected fatalities, injuries, density, admin_score, \
         chokepoint_width, exits, vip_routes, open_exits, year or trigger)"
    ))
}

fn design_columns(
    panel: &JoinedPanel,
    predictors: &[String],
) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    let mut out = Vec::new();
    for name in predictors {
        let name = name.trim();
        if name == "trigger" {
            let triggers: Vec<Trigger> = panel.rows.iter().map(|r| r.incident.trigger).collect();
            let enc = encode_categorical(&triggers);
            for (level, column) in enc.levels.iter().zip(enc.columns) {
                out.push((format!("trigger[{}]", level.label()), column));
            }
        } else {
            out.push((
                name.to_string(),
                panel_column(panel, name).ok_or_else(|| unknown_column(name))?,
            ));
        }
    }
    Ok(out)
}

fn named(names: &[String], values: &[f64]) -> Value {
    let map: serde_json::Map<String, Value> = names
        .iter()
        .zip(values)
        .map(|(n, &v)| (n.clone(), json!(round6(v))))
        .collect();
    Value::Object(map)
}

/// Fits the model requested by `args` on the panel. Shared with the report.
pub(crate) fn fit_model(
    panel: &JoinedPanel,
    args: &RegressArgs,
) -> Result<(RegressionFit, Vec<String>), CliError> {
    if args.predictors.is_empty() {
        return Err(CliError::Usage(
            "--predictors must name at least one column".into(),
        ));
    }
    let y = panel_column(panel, &args.response).ok_or_else(|| unknown_column(&args.response))?;
    let mut warnings = Vec::new();
    let mut columns = design_columns(panel, &args.predictors)?;
    if args.normalize {
        for (name, values) in &mut columns {
            let n = minmax_normalize(values)?;
            if n.constant {
                warnings.push(format!("predictor '{name}' is constant"));
            }
            *values = n.values;
        }
    }
    let x = DesignMatrix::from_columns(columns, !args.no_intercept)?;
    let fit = fit_ols(&x, &y)?;
    if fit.inference.is_none() {
        warnings.push(
            "no residual degrees of freedom: standard errors and p-values unavailable".into(),
        );
    } else if fit.dof < 5 {
        warnings.push(format!(
            "only {} residual degree(s) of freedom: p-values are mechanical, not evidence",
            fit.dof
        ));
    }
    Ok((fit, warnings))
}

pub fn cmd_regress(cfg: &RunConfig, args: &RegressArgs) -> Result<Artifact, CliError> {
    let (panel, mut notes) = panel(cfg)?;
    notes.iter_mut().for_each(|w| *w = format!("warning: {w}"));
    if let Some(column) = &args.trend {
        let values = panel_column(&panel, column).ok_or_else(|| unknown_column(column))?;
        let t = fit_trend(&panel.years(), &values)?;
        return Ok(Artifact {
            json: json!({
                "trend": {
                    "column": column,
                    "slope": round6(t.slope),
                    "intercept": round6(t.intercept),
                    "r_squared": round6(t.r_squared),
                },
                "years": panel.years(),
            }),
            csv: format!(
                "column,slope,intercept,r_squared\n{},{},{},{}\n",
                csv_field(column),
                f6(t.slope),
                f6(t.intercept),
                f6(t.r_squared)
            ),
            notes,
        });
    }

    let (fit, warnings) = fit_model(&panel, args)?;
    notes.extend(warnings.iter().map(|w| format!("warning: {w}")));
    let mut json = fit.to_json();
    let obj = json.as_object_mut().expect("fit serializes to an object");
    obj.insert("response".into(), json!(args.response));
    obj.insert("normalized".into(), json!(args.normalize));
    obj.insert("years".into(), json!(panel.years()));
    obj.insert(
        "fitted".into(),
        json!(fit.fitted.iter().map(|&v| round6(v)).collect::<Vec<_>>()),
    );
    obj.insert(
        "residuals".into(),
        json!(fit.residuals.iter().map(|&v| round6(v)).collect::<Vec<_>>()),
    );
    obj.insert("warnings".into(), json!(warnings));
    let mut csv = String::from("term,coefficient,std_error,t_stat,p_value\n");
    for (j, name) in fit.names.iter().enumerate() {
        let (se, t, p) = match &fit.inference {
            Some(inf) => (
                f6(inf.std_errors[j]),
                f6(inf.t_stats[j]),
                f6(inf.p_values[j]),
            ),
            None => Default::default(),
        };
        csv.push_str(&format!(
            "{},{},{se},{t},{p}\n",
            csv_field(name),
            f6(fit.coefficients[j])
        ));
    }
    if let Some(inf) = &fit.inference {
        obj.insert("std_errors".into(), named(&fit.names, &inf.std_errors));
        obj.insert("t_stats".into(), named(&fit.names, &inf.t_stats));
    }
    Ok(Artifact { json, csv, notes })
}

fn parse_ritual(spec: &str) -> Result<RitualWindow, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || {
        CliError::Usage(format!(
            "--ritual expects START:END:MULTIPLIER, got '{spec}'"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    Ok(RitualWindow {
        start: num(parts[0])?,
        end: num(parts[1])?,
        speed_multiplier: num(parts[2])?,
    })
}

/// Simulation inputs after applying defaults, files and flags in that order.
pub(crate) struct SimSetup {
    pub scenario: Scenario,
    pub params: SimParams,
    pub schedule: RitualSchedule,
}

pub(crate) fn resolve_simulation(
    cfg: &RunConfig,
    args: &SimulateArgs,
) -> Result<SimSetup, CliError> {
    let mut scenario_cfg = match &args.config {
        Some(path) => ScenarioConfig::from_json(&read_text(path)?)?,
        None => ScenarioConfig {
            walls: Vec::new(),
            exits: Vec::new(),
            spawn: None,
            agents: 200,
            duration_s: 60.0,
            preset_year: None,
            target: None,
            vip_closure: None,
        },
    };
    if let Some(year) = args.preset {
        scenario_cfg.preset_year = Some(year);
    }
    if scenario_cfg.preset_year.is_none() && args.config.is_none() {
        return Err(CliError::Usage(
            "simulate needs --preset YEAR or --config FILE".into(),
        ));
    }
    if let Some(n) = args.agents {
        scenario_cfg.agents = n;
    }
    if let Some(d) = args.duration {
        scenario_cfg.duration_s = d;
    }
    if args.no_vip_closure {
        scenario_cfg.vip_closure = Some(false);
    }
    let venues = match scenario_cfg.preset_year {
        Some(_) => load_venues(cfg.data_dir.join("venues.csv"))?.records,
        None => Vec::new(),
    };
    let scenario = build_scenario(&scenario_cfg, &venues)?;

    let mut params = match &args.params {
        Some(path) => serde_json::from_str::<SimParams>(&read_text(path)?)
            .map_err(|e| SimError::InvalidParams(format!("{}: {e}", path.display())))?,
        None => SimParams::default(),
    };
    if args.params.is_none() || cfg.seed.is_some() {
        params.seed = cfg.seed();
    }
    for (k, v) in &cfg.overrides {
        params.set(k, v)?;
    }
    if args.serial {
        params.parallel = false;
    }
    params.validate()?;

    let windows = args
        .rituals
        .iter()
        .map(|s| parse_ritual(s))
        .collect::<Result<_, _>>()?;
    Ok(SimSetup {
        scenario,
        params,
        schedule: RitualSchedule::new(windows)?,
    })
}

pub(crate) fn scenario_json(s: &Scenario) -> Value {
    json!({
        "preset_year": s.preset_year,
        "exits": s.exits.len(),
        "open_exits": s.open_exit_count(),
        "chokepoint_width": round6(s.chokepoint_width),
        "agents": s.agent_count,
        "duration_s": round6(s.duration),
    })
}

fn outcome_csv(o: &SimOutcome) -> String {
    let t90 = o.time_to_90pct_exit.map(f6).unwrap_or_default();
    let mut csv = String::from(
        "agent_count,exited,incapacitated,active,peak_density,time_to_90pct_exit,breach_events,simulated_time\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{t90},{},{}\n",
        o.agent_count,
        o.exited,
        o.incapacitated,
        o.active,
        f6(o.peak_density),
        o.breach_events.len(),
        f6(o.simulated_time)
    ));
    csv
}

pub fn cmd_simulate(cfg: &RunConfig, args: &SimulateArgs) -> Result<Artifact, CliError> {
    let setup = resolve_simulation(cfg, args)?;
    let outcome = match &args.trajectory {
        None => run_with(&setup.scenario, &setup.params, &setup.schedule, |_| {})?,
        Some(path) => {
            let out_err = |source| CliError::Output {
                path: path.clone(),
                source,
            };
            let mut w = BufWriter::new(File::create(path).map_err(out_err)?);
            let mut status = writeln!(w, "{TRAJECTORY_HEADER}");
            let outcome = run_with(&setup.scenario, &setup.params, &setup.schedule, |state| {
                for row in trajectory_rows(state) {
                    if status.is_ok() {
                        status = writeln!(w, "{row}");
                    }
                }
            })?;
            status.and_then(|_| w.flush()).map_err(out_err)?;
            outcome
        }
    };
    let mut json = outcome.to_json();
    let obj = json
        .as_object_mut()
        .expect("outcome serializes to an object");
    obj.insert("scenario".into(), scenario_json(&setup.scenario));
    obj.insert("seed".into(), json!(setup.params.seed));
    let mut notes = vec![format!(
        "{} exited, {} incapacitated, {} still inside after {} s",
        outcome.exited,
        outcome.incapacitated,
        outcome.active,
        round6(outcome.simulated_time)
    )];
    if let Some(path) = &args.trajectory {
        notes.push(format!("trajectory written to {}", path.display()));
    }
    Ok(Artifact {
        csv: outcome_csv(&outcome),
        json,
        notes,
    })
}

/// TF-IDF model, per-year top terms and recurring phrases. Shared with the report.
pub(crate) struct Mined {
    pub corpus: Corpus,
    pub model: TfIdfModel,
    pub top: Vec<(i32, Vec<(String, f64)>)>,
    pub recurring: Vec<RecurringPhrase>,
}

pub(crate) fn mine(cfg: &RunConfig, args: &MineArgs) -> Result<Mined, CliError> {
    let stoplist = match &args.stopwords {
        Some(path) => Stoplist::from_file(path)?,
        None => Stoplist::english(),
    };
    let normalizer = Normalizer {
        stoplist,
        stem: !args.no_stem,
    };
    let path = args
        .corpus
        .clone()
        .unwrap_or_else(|| cfg.data_dir.join("inquiries.csv"));
    let corpus = if path.is_dir() {
        Corpus::from_dir(&path, &normalizer)?
    } else {
        let records = stampede_core::dataset::load_inquiries(&path)?.records;
        Corpus::from_inquiries(&records, &normalizer)?
    };
    let model = tfidf(&corpus)?;
    let top = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(d, doc)| (doc.year, top_terms(&model, d, args.top)))
        .collect();
    let recurring = recurring_phrases(&corpus, args.ngram);
    Ok(Mined {
        corpus,
        model,
        top,
        recurring,
    })
}

pub fn cmd_mine(cfg: &RunConfig, args: &MineArgs) -> Result<Artifact, CliError> {
    if args.ngram == 0 {
        return Err(CliError::Usage("--ngram must be at least 1".into()));
    }
    let mined = mine(cfg, args)?;
    let mut json = mined.model.to_json();
    let obj = json.as_object_mut().expect("model serializes to an object");
    let top: Vec<Value> = mined
        .top
        .iter()
        .map(|(year, terms)| {
            let terms: Vec<Value> = terms
                .iter()
                .map(|(t, w)| json!({"term": t, "weight": round6(*w)}))
                .collect();
            json!({"year": year, "terms": terms})
        })
        .collect();
    obj.insert("top_terms".into(), json!(top));
    obj.insert(
        "recurring_phrases".into(),
        json!({"n": args.ngram, "phrases": mined.recurring}),
    );
    obj.insert(
        "vocabulary_size".into(),
        json!(mined.corpus.vocabulary.len()),
    );

    let mut csv = String::from("year,term,weight\n");
    for (d, year) in mined.model.years.iter().enumerate() {
        for term in &mined.model.terms {
            if mined.corpus.documents[d].tokens().any(|t| t == term) {
                csv.push_str(&format!(
                    "{year},{},{}\n",
                    csv_field(term),
                    f6(mined.model.weight(d, term))
                ));
            }
        }
    }
    let notes = vec![format!(
        "{} documents, {} terms, {} recurring {}-grams",
        mined.model.n_docs,
        mined.model.terms.len(),
        mined.recurring.len(),
        args.ngram
    )];
    Ok(Artifact { json, csv, notes })
}

pub(crate) fn risk_timeline(
    panel: &JoinedPanel,
    args: &RiskArgs,
) -> Result<(CriWeights, Vec<CriRow>, f64), CliError> {
    let weights = CriWeights::new(args.w_density, args.w_choke, args.w_velocity, args.w_admin)?;
    let rows = cri_timeline(panel, &weights, &CriReference::default())?;
    let venues: Vec<_> = panel.rows.iter().map(|r| r.venue.clone()).collect();
    let fraction = choke_fraction(&venues, args.choke_threshold)?;
    Ok((weights, rows, fraction))
}

pub fn cmd_risk(cfg: &RunConfig, args: &RiskArgs) -> Result<Artifact, CliError> {
    let (panel, warnings) = panel(cfg)?;
    let (weights, rows, fraction) = risk_timeline(&panel, args)?;
    let mut csv = String::from("year,cri,density,choke,velocity,admin\n");
    for r in &rows {
        let c = &r.components;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.year,
            f6(r.cri),
            f6(c.density),
            f6(c.choke),
            f6(c.velocity),
            f6(c.admin)
        ));
    }
    Ok(Artifact {
        json: json!({
            "weights": {
                "density": round6(weights.w_density),
                "choke": round6(weights.w_choke),
                "velocity": round6(weights.w_velocity),
                "admin": round6(weights.w_admin),
            },
            "timeline": rows.iter().map(CriRow::to_json).collect::<Vec<_>>(),
            "choke_fraction": {
                "threshold_m": round6(args.choke_threshold),
                "fraction": round6(fraction),
            },
        }),
        csv,
        notes: warnings
            .into_iter()
            .map(|w| format!("warning: {w}"))
            .collect(),
    })
}
