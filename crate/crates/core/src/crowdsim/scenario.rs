//! Venue geometry for the simulator: walls, exits, spawn area, and the
//! year presets built from the venue table.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::geometry::{Rect, Segment, Vec2};
use super::SimError;
use crate::dataset::VenueGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exit {
    pub segment: Segment,
    pub open: bool,
}

impl Exit {
    pub fn width(&self) -> f64 {
        self.segment.length()
    }
}

/// Where agents head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Midpoint of the closest open exit, re-evaluated every step.
    NearestOpenExit,
    Exit(usize),
    Point([f64; 2]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub walls: Vec<Segment>,
    pub exits: Vec<Exit>,
    pub spawn: Rect,
    pub target: Target,
    pub agent_count: usize,
    /// Narrowest open gap an agent can leave through, m.
    pub chokepoint_width: f64,
    /// s
    pub duration: f64,
    pub preset_year: Option<i32>,
}

impl Scenario {
    /// Walls plus closed exits.
    pub fn blocking_segments(&self) -> Vec<Segment> {
        self.walls
            .iter()
            .copied()
            .chain(self.exits.iter().filter(|e| !e.open).map(|e| e.segment))
            .collect()
    }

    pub fn open_exits(&self) -> impl Iterator<Item = (usize, &Exit)> {
        self.exits.iter().enumerate().filter(|(_, e)| e.open)
    }

    pub fn open_exit_count(&self) -> usize {
        self.open_exits().count()
    }

    /// Bounding box of walls, exits and the spawn area.
    pub fn bounds(&self) -> Rect {
        self.walls
            .iter()
            .map(Segment::bounds)
            .chain(self.exits.iter().map(|e| e.segment.bounds()))
            .fold(self.spawn, |acc, r| acc.union(&r))
    }

    /// Reflection across the line `y = 0`.
    pub fn mirror_y(&self) -> Scenario {
        Scenario {
            walls: self.walls.iter().map(|w| w.mirror_y()).collect(),
            exits: self
                .exits
                .iter()
                .map(|e| Exit {
                    segment: e.segment.mirror_y(),
                    open: e.open,
                })
                .collect(),
            spawn: self.spawn.mirror_y(),
            target: match self.target {
                Target::Point([x, y]) => Target::Point([x, -y]),
                t => t,
            },
            ..self.clone()
        }
    }

    /// Reopens every closed exit.
    pub fn without_closures(mut self) -> Scenario {
        for e in &mut self.exits {
            e.open = true;
        }
        self.chokepoint_width = narrowest_open(&self.exits).unwrap_or(self.chokepoint_width);
        self
    }
}

fn narrowest_open(exits: &[Exit]) -> Option<f64> {
    exits
        .iter()
        .filter(|e| e.open)
        .map(Exit::width)
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnConfig {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitConfig {
    pub segment: [f64; 4],
    pub open: bool,
}

/// JSON scenario description:
/// `{walls:[[x1,y1,x2,y2],...], exits:[{segment:[...],open:bool}],
///   spawn:{min:[x,y],max:[x,y]}, agents:int, duration_s, preset_year?:int}`.
/// With `preset_year` the geometry comes from that year's venue row and
/// `walls`, `exits` and `spawn` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub walls: Vec<[f64; 4]>,
    #[serde(default)]
    pub exits: Vec<ExitConfig>,
    #[serde(default)]
    pub spawn: Option<SpawnConfig>,
    pub agents: usize,
    pub duration_s: f64,
    #[serde(default)]
    pub preset_year: Option<i32>,
    #[serde(default)]
    pub target: Option<Target>,
    /// Presets only: close the VIP-reserved exits (default true).
    #[serde(default)]
    pub vip_closure: Option<bool>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))
    }
}

/// Side-wall pillar between neighbouring exits, m.
pub const PRESET_PILLAR: f64 = 1.0;
/// Spawn area per agent, m².
pub const PRESET_AREA_PER_AGENT: f64 = 2.0;
/// Clearance between the spawn area and the exit barrier, m.
pub const PRESET_APPROACH: f64 = 6.0;

/// Approach corridor ending in a barrier of `exits` gaps, each as wide as
/// the venue's chokepoint, separated by 1 m pillars. The corridor is
/// centred on `y = 0` and the barrier lies on `x = 0`; exits are numbered
/// bottom to top. With `vip_closure` the `vip_routes` highest-numbered
/// exits are closed.
pub fn preset(
    venue: &VenueGeometry,
    agents: usize,
    duration: f64,
    vip_closure: bool,
) -> Result<Scenario, SimError> {
    let w = venue.chokepoint_width;
    let n = venue.exits as usize;
    if !(w > 0.0) || n == 0 || venue.vip_routes >= venue.exits {
        return Err(SimError::InvalidScenario(format!(
            "venue row for {} is not a valid geometry",
            venue.year
        )));
    }
    let height = n as f64 * w + (n + 1) as f64 * PRESET_PILLAR;
    let half = height / 2.0;
    let spawn_half = half - 0.5;
    let spawn_depth = (agents as f64 * PRESET_AREA_PER_AGENT / (2.0 * spawn_half)).max(2.0);
    let back = -(PRESET_APPROACH + spawn_depth + 2.0);

    let mut walls = vec![
        Segment::new(back, -half, 0.0, -half),
        Segment::new(back, half, 0.0, half),
        Segment::new(back, -half, back, half),
    ];
    let mut exits = Vec::with_capacity(n);
    let mut y = -half;
    for i in 0..n {
        walls.push(Segment::new(0.0, y, 0.0, y + PRESET_PILLAR));
        y += PRESET_PILLAR;
        let closed = vip_closure && i >= n - venue.vip_routes as usize;
        exits.push(Exit {
            segment: Segment::new(0.0, y, 0.0, y + w),
            open: !closed,
        });
        y += w;
    }
    walls.push(Segment::new(0.0, y, 0.0, half));

    let spawn = Rect::new(
        Vec2::new(-(PRESET_APPROACH + spawn_depth), -spawn_half),
        Vec2::new(-PRESET_APPROACH, spawn_half),
    );
    let scenario = Scenario {
        walls,
        exits,
        spawn,
        target: Target::NearestOpenExit,
        agent_count: agents,
        chokepoint_width: w,
        duration,
        preset_year: Some(venue.year),
    };
    validate(&scenario)?;
    Ok(scenario)
}

/// Assembles and validates a scenario. `venues` is consulted only for
/// `preset_year`.
pub fn build_scenario(
    config: &ScenarioConfig,
    venues: &[VenueGeometry],
) -> Result<Scenario, SimError> {
    if !(config.duration_s >= 0.0) || !config.duration_s.is_finite() {
        return Err(SimError::InvalidScenario(
            "duration_s must be non-negative".into(),
        ));
    }
    let mut scenario = if let Some(year) = config.preset_year {
        let venue = venues
            .iter()
            .find(|v| v.year == year)
            .ok_or(SimError::UnknownPreset(year))?;
        let mut s = preset(
            venue,
            config.agents,
            config.duration_s,
            config.vip_closure.unwrap_or(true),
        )?;
        s.walls
            .extend(config.walls.iter().map(|&c| Segment::from_array(c)));
        s
    } else {
        let spawn = config.spawn.ok_or_else(|| {
            SimError::InvalidScenario("spawn is required without preset_year".into())
        })?;
        let spawn = Rect::new(
            Vec2::new(spawn.min[0], spawn.min[1]),
            Vec2::new(spawn.max[0], spawn.max[1]),
        );
        if !(spawn.min.x < spawn.max.x && spawn.min.y < spawn.max.y) {
            return Err(SimError::InvalidScenario(
                "spawn min must be below max".into(),
            ));
        }
        let exits: Vec<Exit> = config
            .exits
            .iter()
            .map(|e| Exit {
                segment: Segment::from_array(e.segment),
                open: e.open,
            })
            .collect();
        Scenario {
            walls: config
                .walls
                .iter()
                .map(|&c| Segment::from_array(c))
                .collect(),
            chokepoint_width: narrowest_open(&exits).unwrap_or(0.0),
            exits,
            spawn,
            target: Target::NearestOpenExit,
            agent_count: config.agents,
            duration: config.duration_s,
            preset_year: None,
        }
    };
    if let Some(t) = config.target {
        scenario.target = t;
    }
    validate(&scenario)?;
    Ok(scenario)
}

fn validate(s: &Scenario) -> Result<(), SimError> {
    if s.open_exit_count() == 0 {
        return Err(SimError::NoOpenExit);
    }
    let all = s.walls.iter().chain(s.exits.iter().map(|e| &e.segment));
    if all
        .flat_map(|w| [w.a, w.b])
        .any(|p| !p.x.is_finite() || !p.y.is_finite())
    {
        return Err(SimError::InvalidScenario("non-finite coordinate".into()));
    }
    if let Target::Exit(i) = s.target {
        match s.exits.get(i) {
            Some(e) if e.open => {}
            _ => return Err(SimError::UnreachableTarget),
        }
    }
    if s.blocking_segments()
        .iter()
        .any(|w| s.spawn.touches_segment(w))
    {
        return Err(SimError::SpawnOverlapsWall);
    }
    if !target_reachable(s) {
        return Err(SimError::UnreachableTarget);
    }
    Ok(())
}

const REACH_RESOLUTION: f64 = 0.2;

/// Flood fill on a lattice from the spawn centre. Moves between lattice
/// points may not cross walls or closed exits; the target is reached when a
/// move crosses a qualifying open exit (or lands next to a target point).
pub fn target_reachable(s: &Scenario) -> bool {
    let blocking = s.blocking_segments();
    let goal_exits: Vec<Segment> = match s.target {
        Target::Exit(i) => s
            .exits
            .get(i)
            .filter(|e| e.open)
            .map(|e| e.segment)
            .into_iter()
            .collect(),
        _ => s.open_exits().map(|(_, e)| e.segment).collect(),
    };
    let goal_point = match s.target {
        Target::Point([x, y]) => Some(Vec2::new(x, y)),
        _ => None,
    };
    let area = s.bounds().inflate(1.0);
    let nx = (area.width() / REACH_RESOLUTION).ceil() as usize + 1;
    let ny = (area.height() / REACH_RESOLUTION).ceil() as usize + 1;
    let at = |i: usize, j: usize| {
        Vec2::new(
            area.min.x + i as f64 * REACH_RESOLUTION,
            area.min.y + j as f64 * REACH_RESOLUTION,
        )
    };
    let start = s.spawn.center();
    let si = (((start.x - area.min.x) / REACH_RESOLUTION).round() as usize).min(nx - 1);
    let sj = (((start.y - area.min.y) / REACH_RESOLUTION).round() as usize).min(ny - 1);

    let mut seen = vec![false; nx * ny];
    let mut queue = VecDeque::from([(si, sj)]);
    seen[sj * nx + si] = true;
    while let Some((i, j)) = queue.pop_front() {
        let p = at(i, j);
        if let Some(g) = goal_point {
            if (p - g).norm() <= REACH_RESOLUTION {
                return true;
            }
        }
        let steps = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)];
        for (di, dj) in steps {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= nx as i64 || nj >= ny as i64 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            let mv = Segment {
                a: p,
                b: at(ni, nj),
            };
            let mv_box = mv.bounds();
            let crosses = |w: &Segment| w.bounds().overlaps(&mv_box) && w.intersects(&mv);
            if blocking.iter().any(crosses) {
                continue;
            }
            if goal_point.is_none() && goal_exits.iter().any(crosses) {
                return true;
            }
            if !seen[nj * nx + ni] {
                seen[nj * nx + ni] = true;
                queue.push_back((ni, nj));
            }
        }
    }
    false
}
