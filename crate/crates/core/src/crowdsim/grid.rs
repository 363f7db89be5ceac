//! Cell-count density monitoring and threshold breaches.

use serde::Serialize;

use super::geometry::{Rect, Vec2};
use super::sim::{AgentStatus, SimState};
use crate::risk::{classify_density, DensityClass, RiskThresholds};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub origin: Vec2,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `counts[iy * nx + ix]`.
    pub counts: Vec<u32>,
}

impl DensityGrid {
    /// Empty grid covering `bounds`; the max edge falls inside the last cell.
    pub fn covering(bounds: Rect, cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        let nx = (bounds.width() / cell_size).floor() as usize + 1;
        let ny = (bounds.height() / cell_size).floor() as usize + 1;
        Self {
            origin: bounds.min,
            cell_size,
            nx,
            ny,
            counts: vec![0; nx * ny],
        }
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn add(&mut self, p: Vec2) -> bool {
        match self.cell_of(p) {
            Some((ix, iy)) => {
                self.counts[iy * self.nx + ix] += 1;
                true
            }
            None => false,
        }
    }

    pub fn count(&self, ix: usize, iy: usize) -> u32 {
        self.counts[iy * self.nx + ix]
    }

    /// Persons per square metre.
    pub fn density(&self, ix: usize, iy: usize) -> f64 {
        self.count(ix, iy) as f64 / (self.cell_size * self.cell_size)
    }

    pub fn densities(&self) -> Vec<f64> {
        let area = self.cell_size * self.cell_size;
        self.counts.iter().map(|&c| c as f64 / area).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn peak_density(&self) -> f64 {
        self.counts.iter().copied().max().unwrap_or(0) as f64 / (self.cell_size * self.cell_size)
    }
}

/// Point-in-cell counts of active agents over the state's bounds.
pub fn density_grid(state: &SimState, cell_size: f64) -> DensityGrid {
    let mut grid = DensityGrid::covering(state.bounds, cell_size);
    for a in state
        .agents
        .iter()
        .filter(|a| a.status == AgentStatus::Active)
    {
        grid.add(a.position);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreachEvent {
    /// s
    pub time: f64,
    pub cell: (usize, usize),
    /// persons/m²
    pub density: f64,
    pub level: DensityClass,
}

/// Every cell at or above the elevated threshold, in row-major order.
pub fn detect_breach(
    grid: &DensityGrid,
    thresholds: &RiskThresholds,
    time: f64,
) -> Vec<BreachEvent> {
    let mut out = Vec::new();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let density = grid.density(ix, iy);
            let level = classify_density(density, thresholds);
            if level != DensityClass::Safe {
                out.push(BreachEvent {
                    time,
                    cell: (ix, iy),
                    density,
                    level,
                });
            }
        }
    }
    out
}
