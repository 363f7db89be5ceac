use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::force::{force_parts, ForceParts};
use super::geometry::{Rect, Segment, Vec2};
use super::grid::{density_grid, detect_breach, BreachEvent};
use super::params::{RitualSchedule, SimParams};
use super::scenario::{Scenario, Target};
use super::spatial::SpatialHash;
use super::SimError;
use crate::risk::RiskThresholds;
use crate::round6;

/// Agents may sit this far inside a wall before projection pushes them out, m.
pub const WALL_TOLERANCE: f64 = 0.01;
const SPAWN_ATTEMPTS: usize = 2_000;
/// Slack on cumulative crush exposure, absorbing float drift in `Σ dt`.
const EXPOSURE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentStatus {
    Active,
    Exited,
    Incapacitated,
}

impl AgentStatus {
    pub fn label(self) -> &'static str {
        match self {
            AgentStatus::Active => "active",
            AgentStatus::Exited => "exited",
            AgentStatus::Incapacitated => "incapacitated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    /// m
    pub radius: f64,
    /// m/s
    pub desired_speed: f64,
    pub status: AgentStatus,
    /// Cumulative seconds spent above the crush pressure threshold.
    pub crush_exposure: f64,
    pub exit_time: Option<f64>,
}

impl Agent {
    pub fn new(id: usize, position: Vec2, radius: f64) -> Self {
        Self {
            id,
            position,
            velocity: Vec2::ZERO,
            radius,
            desired_speed: 0.0,
            status: AgentStatus::Active,
            crush_exposure: 0.0,
            exit_time: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == AgentStatus::Active
    }

    /// Radial compression per unit body circumference, N/m.
    pub fn pressure(&self, compression: f64) -> f64 {
        compression / (std::f64::consts::TAU * self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// s
    pub time: f64,
    pub steps: u64,
    pub agents: Vec<Agent>,
    /// Monitoring area for density grids.
    pub bounds: Rect,
}

impl SimState {
    pub fn new(agents: Vec<Agent>, scenario: &Scenario) -> Self {
        Self {
            time: 0.0,
            steps: 0,
            agents,
            bounds: scenario.bounds(),
        }
    }

    /// Places `scenario.agent_count` non-overlapping agents uniformly in the
    /// spawn area, radii uniform in `[radius_min, radius_max]`. Seeded by
    /// `params.seed`.
    pub fn spawn(scenario: &Scenario, params: &SimParams) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let walls = scenario.blocking_segments();
        let area = scenario.spawn;
        let mut agents: Vec<Agent> = Vec::with_capacity(scenario.agent_count);
        for id in 0..scenario.agent_count {
            let radius =
                params.radius_min + (params.radius_max - params.radius_min) * rng.gen::<f64>();
            let mut placed = None;
            for _ in 0..SPAWN_ATTEMPTS {
                let (x0, x1) = (area.min.x + radius, area.max.x - radius);
                let (y0, y1) = (area.min.y + radius, area.max.y - radius);
                if x0 > x1 || y0 > y1 {
                    break;
                }
                let p = Vec2::new(
                    x0 + (x1 - x0) * rng.gen::<f64>(),
                    y0 + (y1 - y0) * rng.gen::<f64>(),
                );
                let clear = agents
                    .iter()
                    .all(|o| (o.position - p).norm() >= o.radius + radius)
                    && walls.iter().all(|w| w.distance(p) >= radius);
                if clear {
                    placed = Some(p);
                    break;
                }
            }
            match placed {
                Some(p) => agents.push(Agent::new(id, p, radius)),
                None => {
                    return Err(SimError::SpawnFailed {
                        placed: agents.len(),
                        requested: scenario.agent_count,
                    })
                }
            }
        }
        Ok(Self::new(agents, scenario))
    }

    /// Reflection across `y = 0`, for use with [`Scenario::mirror_y`].
    pub fn mirror_y(&self) -> SimState {
        let mut m = self.clone();
        for a in &mut m.agents {
            a.position = a.position.mirror_y();
            a.velocity = a.velocity.mirror_y();
        }
        m.bounds = self.bounds.mirror_y();
        m
    }

    /// (active, exited, incapacitated)
    pub fn census(&self) -> (usize, usize, usize) {
        self.agents
            .iter()
            .fold((0, 0, 0), |(a, e, i), ag| match ag.status {
                AgentStatus::Active => (a + 1, e, i),
                AgentStatus::Exited => (a, e + 1, i),
                AgentStatus::Incapacitated => (a, e, i + 1),
            })
    }
}

/// Unit vector from `p` toward the agent's goal.
pub fn desired_direction(p: Vec2, scenario: &Scenario) -> Vec2 {
    let aim = match scenario.target {
        Target::Point([x, y]) => Vec2::new(x, y),
        Target::Exit(i) => scenario.exits[i].segment.midpoint(),
        Target::NearestOpenExit => {
            let mut best: Option<(f64, Vec2)> = None;
            for (_, e) in scenario.open_exits() {
                let m = e.segment.midpoint();
                let d = (m - p).norm_sq();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, m));
                }
            }
            match best {
                Some((_, m)) => m,
                None => return Vec2::ZERO,
            }
        }
    };
    let to = aim - p;
    let len = to.norm();
    if len > 0.0 {
        to * (1.0 / len)
    } else {
        Vec2::ZERO
    }
}

/// Per-step side information.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Agents that left through an open exit during this step.
    pub exited: Vec<usize>,
    /// Contact pressure on each agent from the pre-step snapshot, N/m
    /// (0 for agents that are not active).
    pub pressures: Vec<f64>,
}

fn compute_forces(
    state: &SimState,
    scenario: &Scenario,
    walls: &[Segment],
    params: &SimParams,
) -> Vec<Option<(ForceParts, Vec2)>> {
    let positions: Vec<Vec2> = state.agents.iter().map(|a| a.position).collect();
    let mut hash = SpatialHash::new(2.0 * params.interaction_cutoff);
    for a in state
        .agents
        .iter()
        .filter(|a| a.status != AgentStatus::Exited)
    {
        hash.insert(a.id, a.position);
    }
    let one = |a: &Agent| -> Option<(ForceParts, Vec2)> {
        if !a.is_active() {
            return None;
        }
        let near = hash.query(a.position, params.interaction_cutoff, &positions);
        let dir = desired_direction(a.position, scenario);
        let parts = force_parts(
            a,
            dir,
            near.iter().map(|&j| &state.agents[j]),
            walls,
            params,
        );
        Some((parts, dir))
    };
    if params.parallel {
        state.agents.par_iter().map(one).collect()
    } else {
        state.agents.iter().map(one).collect()
    }
}

/// Keeps an agent at least `radius - WALL_TOLERANCE` from every wall.
fn resolve_walls(agent: &mut Agent, old: Vec2, walls: &[Segment]) {
    let path = Segment {
        a: old,
        b: agent.position,
    };
    if walls.iter().any(|w| w.intersects(&path)) {
        agent.position = old;
        agent.velocity = Vec2::ZERO;
    }
    let min_gap = agent.radius - WALL_TOLERANCE;
    for _ in 0..4 {
        let mut moved = false;
        for w in walls {
            let c = w.closest_point(agent.position);
            let diff = agent.position - c;
            let d = diff.norm();
            if d >= min_gap {
                continue;
            }
            let n = if d > 0.0 {
                diff * (1.0 / d)
            } else {
                let along = w.b - w.a;
                let side = if along.cross(old - w.a) >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                along.perp() * (side / along.norm())
            };
            agent.position = c + n * (min_gap + 1e-6);
            let vn = agent.velocity.dot(n);
            if vn < 0.0 {
                agent.velocity -= n * vn;
            }
            moved = true;
        }
        if !moved {
            break;
        }
    }
}

/// Accumulates crush exposure for active agents and incapacitates those
/// whose cumulative time above the pressure threshold reaches
/// `crush_duration`. Exposure never resets.
pub fn update_crush(
    agents: &mut [Agent],
    pressures: &[f64],
    params: &SimParams,
    dt: f64,
) -> Vec<usize> {
    let mut fallen = Vec::new();
    for (a, &p) in agents.iter_mut().zip(pressures) {
        if !a.is_active() {
            continue;
        }
        if p >= params.crush_pressure_threshold {
            a.crush_exposure += dt;
        }
        if a.crush_exposure + EXPOSURE_EPS >= params.crush_duration {
            a.status = AgentStatus::Incapacitated;
            a.velocity = Vec2::ZERO;
            fallen.push(a.id);
        }
    }
    fallen
}

/// Advances the state by one `params.dt`, made of `params.substeps()` equal
/// substeps.
///
/// In every substep desired speeds are set from the schedule, forces are
/// evaluated on the pre-substep snapshot, then each active agent is
/// integrated in index order: velocity first (drive term implicit,
/// interaction explicit), then position with the new velocity. Exits, walls
/// and crush exposure are checked after integration.
pub fn step(
    state: &mut SimState,
    scenario: &Scenario,
    params: &SimParams,
    schedule: &RitualSchedule,
) -> StepReport {
    let n = params.substeps();
    let h = params.dt / n as f64;
    let t0 = state.time;
    let walls = scenario.blocking_segments();
    let mut report = StepReport::default();
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let t_end = if k + 1 == n {
            (state.steps + 1) as f64 * params.dt
        } else {
            t0 + (k + 1) as f64 * h
        };
        let pressures = substep(
            state,
            scenario,
            &walls,
            params,
            schedule.multiplier(t),
            h,
            t_end,
            &mut report.exited,
        );
        report.pressures = pressures;
        state.time = t_end;
    }
    state.steps += 1;
    state.time = state.steps as f64 * params.dt;
    report
}

#[allow(clippy::too_many_arguments)]
fn substep(
    state: &mut SimState,
    scenario: &Scenario,
    walls: &[Segment],
    params: &SimParams,
    multiplier: f64,
    h: f64,
    t_end: f64,
    exited: &mut Vec<usize>,
) -> Vec<f64> {
    let desired = params.desired_speed(multiplier);
    for a in state.agents.iter_mut().filter(|a| a.is_active()) {
        a.desired_speed = desired;
    }
    let forces = compute_forces(state, scenario, walls, params);
    let tau = params.relaxation_time;
    let limit = params.speed_limit();
    let mut pressures = vec![0.0; state.agents.len()];
    for (a, parts) in state.agents.iter_mut().zip(&forces) {
        let Some((parts, dir)) = parts else { continue };
        pressures[a.id] = a.pressure(parts.compression);

        let goal = *dir * a.desired_speed;
        let accel = parts.interaction * (1.0 / params.mass);
        let mut v = (a.velocity + (goal * (1.0 / tau) + accel) * h) * (1.0 / (1.0 + h / tau));
        let speed = v.norm();
        if speed > limit {
            v = v * (limit / speed);
        }
        let old = a.position;
        a.velocity = v;
        a.position = old + v * h;

        let path = Segment {
            a: old,
            b: a.position,
        };
        if scenario
            .open_exits()
            .any(|(_, e)| e.segment.intersects(&path))
        {
            a.status = AgentStatus::Exited;
            a.exit_time = Some(t_end);
            exited.push(a.id);
            continue;
        }
        resolve_walls(a, old, walls);
    }
    update_crush(&mut state.agents, &pressures, params, h);
    pressures
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub agent_count: usize,
    pub exited: usize,
    pub incapacitated: usize,
    /// Still inside when the run ended.
    pub active: usize,
    /// persons/m², max over every step
    pub peak_density: f64,
    /// s
    pub time_to_90pct_exit: Option<f64>,
    /// Exits per one-second bin.
    pub throughput_series: Vec<u32>,
    /// Sampled at t = 0 and each whole simulated second.
    pub breach_events: Vec<BreachEvent>,
    /// s
    pub simulated_time: f64,
}

impl SimOutcome {
    /// Outcome fields, floats rounded to six decimals.
    pub fn to_json(&self) -> serde_json::Value {
        let breaches: Vec<serde_json::Value> = self
            .breach_events
            .iter()
            .map(|b| {
                serde_json::json!({
                    "time": round6(b.time),
                    "cell": [b.cell.0, b.cell.1],
                    "density": round6(b.density),
                    "level": b.level,
                })
            })
            .collect();
        serde_json::json!({
            "agent_count": self.agent_count,
            "exited": self.exited,
            "incapacitated": self.incapacitated,
            "active": self.active,
            "peak_density": round6(self.peak_density),
            "time_to_90pct_exit": self.time_to_90pct_exit.map(round6),
            "throughput_series": self.throughput_series,
            "breach_events": breaches,
            "simulated_time": round6(self.simulated_time),
        })
    }
}

/// Runs the scenario to its duration or until nobody is active.
pub fn run(
    scenario: &Scenario,
    params: &SimParams,
    schedule: &RitualSchedule,
) -> Result<SimOutcome, SimError> {
    run_with(scenario, params, schedule, |_| {})
}

/// As [`run`], calling `observe` on the initial state and after every step.
pub fn run_with(
    scenario: &Scenario,
    params: &SimParams,
    schedule: &RitualSchedule,
    observe: impl FnMut(&SimState),
) -> Result<SimOutcome, SimError> {
    params.validate()?;
    let state = SimState::spawn(scenario, params)?;
    run_from(state, scenario, params, schedule, observe)
}

/// As [`run_with`], starting from a prepared state.
pub fn run_from(
    mut state: SimState,
    scenario: &Scenario,
    params: &SimParams,
    schedule: &RitualSchedule,
    mut observe: impl FnMut(&SimState),
) -> Result<SimOutcome, SimError> {
    params.validate()?;
    let n = state.agents.len();
    let thresholds = RiskThresholds::default();
    let bins = scenario.duration.ceil().max(0.0) as usize;
    let total_steps = (scenario.duration / params.dt - 1e-9).ceil().max(0.0) as u64;
    let needed = (0.9 * n as f64).ceil() as usize;

    let mut throughput = vec![0u32; bins];
    let mut breaches = Vec::new();
    let mut exited = 0usize;
    let mut time_to_90 = None;

    let grid = density_grid(&state, params.density_cell);
    let mut peak = grid.peak_density();
    breaches.extend(detect_breach(&grid, &thresholds, state.time));
    observe(&state);

    while state.steps < total_steps && state.agents.iter().any(Agent::is_active) {
        let before = state.time;
        let report = step(&mut state, scenario, params, schedule);
        for &id in &report.exited {
            let t = state.agents[id].exit_time.unwrap_or(state.time);
            if bins > 0 {
                let bin = ((t - 1e-9).floor().max(0.0) as usize).min(bins - 1);
                throughput[bin] += 1;
            }
        }
        exited += report.exited.len();
        if time_to_90.is_none() && n > 0 && exited >= needed {
            time_to_90 = Some(state.time);
        }
        let grid = density_grid(&state, params.density_cell);
        peak = peak.max(grid.peak_density());
        if (state.time + 1e-9).floor() > (before + 1e-9).floor() {
            breaches.extend(detect_breach(&grid, &thresholds, state.time));
        }
        observe(&state);
    }

    let (active, exited_total, incapacitated) = state.census();
    Ok(SimOutcome {
        agent_count: n,
        exited: exited_total,
        incapacitated,
        active,
        peak_density: peak,
        time_to_90pct_exit: time_to_90,
        throughput_series: throughput,
        breach_events: breaches,
        simulated_time: state.time,
    })
}

/// CSV header of the trajectory dump.
pub const TRAJECTORY_HEADER: &str = "t,agent_id,x,y,vx,vy,status";

/// Trajectory rows for one state (exited agents omitted).
pub fn trajectory_rows(state: &SimState) -> impl Iterator<Item = String> + '_ {
    state
        .agents
        .iter()
        .filter(|a| a.status != AgentStatus::Exited)
        .map(move |a| {
            format!(
                "{},{},{},{},{},{},{}",
                round6(state.time),
                a.id,
                round6(a.position.x),
                round6(a.position.y),
                round6(a.velocity.x),
                round6(a.velocity.y),
                a.status.label()
            )
        })
}
