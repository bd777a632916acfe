//! Initial-state distributions.

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use super::Task;
use crate::karel::{Direction, Pos, WorldState};

const CLEAN_HOUSE_MAP: &str = include_str!("cleanhouse.map");

/// Number of markers scattered in CleanHouse.
pub const CLEAN_HOUSE_MARKERS: usize = 10;

/// Stair cells in walking order from the bottom-left landing upward.
pub(crate) fn stair_contour(height: usize, width: usize) -> Vec<Pos> {
    debug_assert_eq!(height, width);
    let n = height - 2;
    let mut out = Vec::new();
    for r in (1..=n).rev() {
        for c in [n + 1 - r, n + 2 - r] {
            if c <= n {
                out.push(Pos::new(r, c));
            }
        }
    }
    out
}

fn stair_world() -> WorldState {
    let (h, w) = Task::StairClimber.grid_size();
    let mut world = WorldState::bordered(h, w);
    let n = h - 2;
    for r in 1..=n {
        for c in (n + 3 - r).max(1)..=n {
            world.set_wall(Pos::new(r, c), true);
        }
    }
    world
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    Direction::ALL[rng.gen_range(0..4)]
}

fn interior(world: &WorldState) -> Vec<Pos> {
    world.clear_cells().collect()
}

/// Randomized depth-first backtracker over the odd-coordinate lattice.
fn carve_maze<R: Rng + ?Sized>(rng: &mut R, world: &mut WorldState) {
    let (h, w) = (world.height(), world.width());
    for p in world.cells().collect::<Vec<_>>() {
        world.set_wall(p, true);
    }
    let rooms_r: Vec<usize> = (1..h - 1).step_by(2).collect();
    let rooms_c: Vec<usize> = (1..w - 1).step_by(2).collect();
    let start = Pos::new(rooms_r[0], rooms_c[0]);
    world.set_wall(start, false);
    let mut stack = vec![start];
    while let Some(&cur) = stack.last() {
        let mut next: Vec<(Pos, Pos)> = Direction::ALL
            .iter()
            .filter_map(|d| {
                let (dr, dc) = d.delta();
                let r = cur.row.checked_add_signed(2 * dr)?;
                let c = cur.col.checked_add_signed(2 * dc)?;
                let to = Pos::new(r, c);
                (r < h - 1 && c < w - 1 && world.is_wall(to))
                    .then(|| (Pos::new(cur.row.wrapping_add_signed(dr), cur.col.wrapping_add_signed(dc)), to))
            })
            .collect();
        if next.is_empty() {
            stack.pop();
            continue;
        }
        next.shuffle(rng);
        let (between, to) = next[0];
        world.set_wall(between, false);
        world.set_wall(to, false);
        stack.push(to);
    }
}

pub(crate) fn sample<R: Rng + ?Sized>(task: Task, rng: &mut R) -> WorldState {
    let (h, w) = task.grid_size();
    let bottom = h - 2;
    match task {
        Task::StairClimber => {
            let mut world = stair_world();
            let contour = stair_contour(h, w);
            let a = rng.gen_range(0..contour.len() - 1);
            let g = rng.gen_range(a + 1..contour.len());
            world.agent = contour[a];
            world.dir = Direction::East;
            world.set_markers(contour[g], 1);
            world.extra = vec![contour[g].row as i64, contour[g].col as i64];
            world
        }
        Task::Maze => {
            let mut world = WorldState::bordered(h, w);
            carve_maze(rng, &mut world);
            let cells = interior(&world);
            let picks: Vec<Pos> = cells.choose_multiple(rng, 2).copied().collect();
            world.agent = picks[0];
            world.dir = random_direction(rng);
            world.set_markers(picks[1], 1);
            world.extra = vec![picks[1].row as i64, picks[1].col as i64];
            world
        }
        Task::TopOff => {
            let mut world = WorldState::bordered(h, w);
            let row: Vec<Pos> = (1..w - 1).map(|c| Pos::new(bottom, c)).collect();
            loop {
                for &p in &row {
                    world.set_markers(p, rng.gen_bool(0.5) as u8);
                }
                if row.iter().any(|&p| world.markers(p) > 0) {
                    break;
                }
            }
            world.agent = Pos::new(bottom, 1);
            world.dir = Direction::East;
            world
        }
        Task::FourCorners => {
            let mut world = WorldState::bordered(h, w);
            world.agent = Pos::new(bottom, rng.gen_range(1..w - 1));
            world.dir = Direction::East;
            world
        }
        Task::Harvester => {
            let mut world = WorldState::bordered(h, w);
            for p in interior(&world) {
                world.set_markers(p, 1);
            }
            world.agent = Pos::new(bottom, rng.gen_range(1..w - 1));
            world.dir = Direction::East;
            world
        }
        Task::CleanHouse => {
            let mut world = WorldState::from_map_text(CLEAN_HOUSE_MAP).expect("bundled map is valid");
            let agent = world.agent;
            let candidates: Vec<Pos> = world
                .clear_cells()
                .filter(|&p| p != agent && Direction::ALL.iter().any(|&d| !world.is_clear(p, d)))
                .collect();
            for p in candidates.choose_multiple(rng, CLEAN_HOUSE_MARKERS).copied().collect::<Vec<_>>() {
                world.set_markers(p, 1);
            }
            world
        }
        Task::DoorKey => {
            let mut world = WorldState::bordered(h, w);
            let split = DOOR_KEY_SPLIT_COL;
            for r in 1..h - 1 {
                world.set_wall(Pos::new(r, split), true);
            }
            let door = Pos::new(rng.gen_range(1..h - 1), split);
            let left: Vec<Pos> = interior(&world).into_iter().filter(|p| p.col < split).collect();
            let right: Vec<Pos> = interior(&world).into_iter().filter(|p| p.col > split).collect();
            let picks: Vec<Pos> = left.choose_multiple(rng, 2).copied().collect();
            let (agent, key) = (picks[0], picks[1]);
            let goal = *right.choose(rng).expect("right chamber is not empty");
            world.agent = agent;
            world.dir = random_direction(rng);
            world.set_markers(key, 1);
            world.set_markers(goal, 1);
            world.extra = [door, key, goal].iter().flat_map(|p| [p.row as i64, p.col as i64]).collect();
            world
        }
        Task::OneStroke | Task::Seeder => {
            let mut world = WorldState::bordered(h, w);
            world.agent = world.clear_cells().choose(rng).expect("grid has an interior");
            world.dir = random_direction(rng);
            world
        }
        Task::Snake => {
            let mut world = WorldState::bordered(h, w);
            let picks: Vec<Pos> = interior(&world).choose_multiple(rng, 2).copied().collect();
            world.agent = picks[0];
            world.dir = random_direction(rng);
            world.set_markers(picks[1], 1);
            // Seed of the stream that places every later marker.
            world.extra = vec![rng.gen::<i64>()];
            world
        }
    }
}

/// Column of the wall that separates the two DoorKey chambers.
pub const DOOR_KEY_SPLIT_COL: usize = 4;
