use rand::seq::IteratorRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::world::{Direction, Pos, WorldState};
use crate::{Error, Result};

/// Parameters of the unstructured random-map generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomWorldConfig {
    pub height: usize,
    pub width: usize,
    /// Probability that an interior cell is a wall.
    pub wall_density: f64,
    /// Probability that a clear cell starts with one marker.
    pub marker_density: f64,
}

impl Default for RandomWorldConfig {
    fn default() -> Self {
        RandomWorldConfig { height: 8, width: 8, wall_density: 0.1, marker_density: 0.1 }
    }
}

const MAX_REDRAWS: usize = 1000;

/// Draws a bordered map with independent interior walls and markers and an
/// agent on a uniformly chosen clear cell with a uniform heading. Maps
/// without any clear cell are redrawn.
pub fn random_world<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomWorldConfig) -> Result<WorldState> {
    if cfg.height < 3 || cfg.width < 3 {
        return Err(Error::InvalidConfig(format!("random map must be at least 3x3, got {}x{}", cfg.height, cfg.width)));
    }
    let unit = 0.0..=1.0;
    if !unit.contains(&cfg.wall_density) || !unit.contains(&cfg.marker_density) || cfg.wall_density >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "densities must lie in [0, 1] with wall density below 1, got {} and {}",
            cfg.wall_density, cfg.marker_density
        )));
    }
    for _ in 0..MAX_REDRAWS {
        let mut w = WorldState::bordered(cfg.height, cfg.width);
        for r in 1..cfg.height - 1 {
            for c in 1..cfg.width - 1 {
                let p = Pos::new(r, c);
                if rng.gen_bool(cfg.wall_density) {
                    w.set_wall(p, true);
                } else if rng.gen_bool(cfg.marker_density) {
                    w.set_markers(p, 1);
                }
            }
        }
        let Some(agent) = w.clear_cells().choose(rng) else {
            continue;
        };
        w.agent = agent;
        w.dir = Direction::ALL[rng.gen_range(0..4)];
        return Ok(w);
    }
    Err(Error::InvalidConfig(format!("no clear cell after {MAX_REDRAWS} random maps")))
}
