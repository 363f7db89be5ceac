//! Social-force terms: goal-directed drive, exponential repulsion, body
//! compression and sliding friction, between agents and against walls.
//!
//! For agents `i`, `j` with radius sum `r_ij`, centre distance `d_ij`,
//! unit normal `n_ij` (pointing to `i`) and tangent `t_ij`:
//!
//! ```text
//! f_ij = (A·exp((r_ij − d_ij)/B) + k·g(r_ij − d_ij))·n_ij
//!        + κ·g(r_ij − d_ij)·((v_j − v_i)·t_ij)·t_ij
//! g(x) = max(x, 0)
//! ```
//!
//! Walls use the same terms with `r_i` in place of `r_ij` and a wall at rest.

use super::geometry::{Segment, Vec2};
use super::params::SimParams;
use super::sim::Agent;

/// Separation substituted for coincident centres, m.
pub const COINCIDENT_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceParts {
    /// `m(v_d·e − v)/τ`
    pub drive: Vec2,
    /// Everything from neighbours and walls.
    pub interaction: Vec2,
    /// Sum of radial body-compression magnitudes `k·g(·)`, N.
    pub compression: f64,
}

impl ForceParts {
    pub fn total(&self) -> Vec2 {
        self.drive + self.interaction
    }
}

fn g(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unit direction for a coincident pair, fixed by the seed and the pair ids.
/// Antisymmetric: swapping `i` and `j` flips it.
pub fn coincident_direction(seed: u64, i: usize, j: usize) -> Vec2 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let h = splitmix64(seed ^ splitmix64(((lo as u64) << 32) ^ hi as u64));
    let angle = (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
    let u = Vec2::new(angle.cos(), angle.sin());
    if i < j {
        u
    } else {
        -u
    }
}

/// Force exerted on `me` by `other`, and the compression magnitude.
fn agent_pair(me: &Agent, other: &Agent, params: &SimParams) -> (Vec2, f64) {
    let diff = me.position - other.position;
    let mut d = diff.norm();
    let n = if d > 0.0 {
        diff * (1.0 / d)
    } else {
        d = COINCIDENT_OFFSET;
        coincident_direction(params.seed, me.id, other.id)
    };
    let overlap = me.radius + other.radius - d;
    let push = params.repulsion_strength * (overlap / params.repulsion_range).exp();
    let body = params.body_stiffness * g(overlap);
    let t = n.perp();
    let dv_t = (other.velocity - me.velocity).dot(t);
    let friction = params.sliding_friction * g(overlap) * dv_t;
    (n * (push + body) + t * friction, body)
}

fn wall_push(me: &Agent, wall: &Segment, params: &SimParams) -> (Vec2, f64) {
    let c = wall.closest_point(me.position);
    let diff = me.position - c;
    let mut d = diff.norm();
    let n = if d > 0.0 {
        diff * (1.0 / d)
    } else {
        d = COINCIDENT_OFFSET;
        let along = wall.b - wall.a;
        let len = along.norm();
        if len > 0.0 {
            along.perp() * (1.0 / len)
        } else {
            Vec2::new(1.0, 0.0)
        }
    };
    let overlap = me.radius - d;
    let push = params.repulsion_strength * (overlap / params.repulsion_range).exp();
    let body = params.body_stiffness * g(overlap);
    let t = n.perp();
    let friction = params.sliding_friction * g(overlap) * me.velocity.dot(t);
    (n * (push + body) - t * friction, body)
}

/// Force components on `me`. Neighbours and walls are summed in the order
/// given; pairs at or beyond the interaction cutoff are skipped.
pub fn force_parts<'a>(
    me: &Agent,
    desired_direction: Vec2,
    neighbors: impl IntoIterator<Item = &'a Agent>,
    walls: &[Segment],
    params: &SimParams,
) -> ForceParts {
    let desired = desired_direction * me.desired_speed;
    let drive = (desired - me.velocity) * (params.mass / params.relaxation_time);
    let cutoff_sq = params.interaction_cutoff * params.interaction_cutoff;
    let mut interaction = Vec2::ZERO;
    let mut compression = 0.0;
    for other in neighbors {
        if other.id == me.id || (me.position - other.position).norm_sq() >= cutoff_sq {
            continue;
        }
        let (f, c) = agent_pair(me, other, params);
        interaction += f;
        compression += c;
    }
    for wall in walls {
        if wall.distance(me.position) >= params.interaction_cutoff {
            continue;
        }
        let (f, c) = wall_push(me, wall, params);
        interaction += f;
        compression += c;
    }
    ForceParts {
        drive,
        interaction,
        compression,
    }
}

/// Total social force on `agent`, N.
pub fn social_force(
    agent: &Agent,
    desired_direction: Vec2,
    neighbors: &[Agent],
    walls: &[Segment],
    params: &SimParams,
) -> Vec2 {
    force_parts(agent, desired_direction, neighbors, walls, params).total()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(id: usize, x: f64, y: f64, r: f64) -> Agent {
        Agent::new(id, Vec2::new(x, y), r)
    }

    #[test]
    fn zero_force_at_desired_velocity() {
        let p = SimParams::default();
        let mut a = agent(0, 0.0, 0.0, 0.3);
        a.desired_speed = 1.3;
        a.velocity = Vec2::new(1.3, 0.0);
        assert_eq!(
            social_force(&a, Vec2::new(1.0, 0.0), &[], &[], &p),
            Vec2::ZERO
        );
    }

    #[test]
    fn drive_from_rest() {
        let p = SimParams::default();
        let mut a = agent(0, 0.0, 0.0, 0.3);
        a.desired_speed = 1.0;
        let f = social_force(&a, Vec2::new(0.0, 1.0), &[], &[], &p);
        assert!((f.y - 160.0).abs() < 1e-12 && f.x == 0.0);
    }

    #[test]
    fn overlapping_pair() {
        let p = SimParams::default();
        let a = agent(0, 0.0, 0.0, 0.3);
        let b = agent(1, 0.59, 0.0, 0.3);
        let parts = force_parts(&a, Vec2::ZERO, [&b], &[], &p);
        let expected = 1200.0 + 2000.0 * (0.01f64 / 0.08).exp();
        assert!((parts.interaction.x + expected).abs() < 1e-6);
        assert!(parts.interaction.y.abs() < 1e-12);
        assert!((parts.compression - 1200.0).abs() < 1e-6);
    }

    #[test]
    fn coincident_centres_are_finite_and_opposed() {
        let p = SimParams::default();
        let a = agent(3, 1.0, 1.0, 0.3);
        let b = agent(7, 1.0, 1.0, 0.3);
        let fa = force_parts(&a, Vec2::ZERO, [&b], &[], &p).interaction;
        let fb = force_parts(&b, Vec2::ZERO, [&a], &[], &p).interaction;
        assert!(fa.x.is_finite() && fa.y.is_finite());
        assert!((fa + fb).norm() < 1e-6 * fa.norm());
        assert_eq!(
            coincident_direction(5, 3, 7),
            -coincident_direction(5, 7, 3)
        );
    }

    #[test]
    fn wall_pushes_away() {
        let p = SimParams::default();
        let a = agent(0, 0.0, 0.2, 0.3);
        let wall = Segment::new(-5.0, 0.0, 5.0, 0.0);
        let parts = force_parts(&a, Vec2::ZERO, [], &[wall], &p);
        assert!(parts.interaction.y > 0.0);
        assert!((parts.compression - 1.2e5 * 0.1).abs() < 1e-6);
    }

    #[test]
    fn cutoff_excludes_far_pairs() {
        let p = SimParams::default();
        let a = agent(0, 0.0, 0.0, 0.3);
        let b = agent(1, 1.5, 0.0, 0.3);
        assert_eq!(
            force_parts(&a, Vec2::ZERO, [&b], &[], &p).interaction,
            Vec2::ZERO
        );
    }
}
