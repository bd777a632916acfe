use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::dsl::{Action, Percept};
use crate::{Error, Result};

/// Marker stack cap per cell.
pub const MAX_MARKERS: u8 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn left(self) -> Direction {
        Direction::ALL[(self as usize + 3) % 4]
    }

    pub fn right(self) -> Direction {
        Direction::ALL[(self as usize + 1) % 4]
    }

    /// `(d_row, d_col)` with row 0 at the top of the map.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::North => (-1, 0),
            Direction::East => (0, 1),
            Direction::South => (1, 0),
            Direction::West => (0, -1),
        }
    }

    fn glyph(self) -> char {
        match self {
            Direction::North => '^',
            Direction::East => '>',
            Direction::South => 'v',
            Direction::West => '<',
        }
    }

    fn from_glyph(c: char) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.glyph() == c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }
}

/// A wall-enclosed Karel grid with one agent.
///
/// `extra` carries opaque integers a task generator attaches to an initial
/// state (a door location, a respawn seed); the world itself never reads it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WorldState {
    height: usize,
    width: usize,
    walls: Vec<bool>,
    markers: Vec<u8>,
    pub agent: Pos,
    pub dir: Direction,
    pub crashed: bool,
    pub extra: Vec<i64>,
}

impl WorldState {
    /// An empty grid whose border cells are walls; agent at (1, 1) facing East.
    pub fn bordered(height: usize, width: usize) -> Self {
        assert!(height >= 3 && width >= 3, "grid must have an interior");
        let mut walls = vec![false; height * width];
        for r in 0..height {
            for c in 0..width {
                walls[r * width + c] = r == 0 || c == 0 || r == height - 1 || c == width - 1;
            }
        }
        WorldState {
            height,
            width,
            walls,
            markers: vec![0; height * width],
            agent: Pos::new(1, 1),
            dir: Direction::East,
            crashed: false,
            extra: Vec::new(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    fn idx(&self, p: Pos) -> usize {
        p.row * self.width + p.col
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.row < self.height && p.col < self.width
    }

    #[inline]
    pub fn is_wall(&self, p: Pos) -> bool {
        self.walls[self.idx(p)]
    }

    pub fn set_wall(&mut self, p: Pos, wall: bool) {
        let i = self.idx(p);
        self.walls[i] = wall;
    }

    #[inline]
    pub fn markers(&self, p: Pos) -> u8 {
        self.markers[self.idx(p)]
    }

    pub fn set_markers(&mut self, p: Pos, n: u8) {
        assert!(n <= MAX_MARKERS);
        let i = self.idx(p);
        self.markers[i] = n;
    }

    pub fn total_markers(&self) -> u32 {
        self.markers.iter().map(|&m| m as u32).sum()
    }

    /// The adjacent cell in `dir`, if it is inside the grid.
    #[inline]
    pub fn neighbor(&self, p: Pos, dir: Direction) -> Option<Pos> {
        let (dr, dc) = dir.delta();
        let r = p.row.checked_add_signed(dr)?;
        let c = p.col.checked_add_signed(dc)?;
        let q = Pos::new(r, c);
        self.in_bounds(q).then_some(q)
    }

    #[inline]
    pub fn is_clear(&self, p: Pos, dir: Direction) -> bool {
        self.neighbor(p, dir).is_some_and(|q| !self.is_wall(q))
    }

    pub fn cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| Pos::new(r, c)))
    }

    pub fn clear_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        self.cells().filter(move |p| !self.is_wall(*p))
    }

    #[inline]
    pub fn perceive(&self, h: Percept) -> bool {
        match h {
            Percept::FrontIsClear => self.is_clear(self.agent, self.dir),
            Percept::LeftIsClear => self.is_clear(self.agent, self.dir.left()),
            Percept::RightIsClear => self.is_clear(self.agent, self.dir.right()),
            Percept::MarkersPresent => self.markers(self.agent) > 0,
            Percept::NoMarkersPresent => self.markers(self.agent) == 0,
        }
    }

    /// Applies one primitive action and reports whether it was valid.
    ///
    /// Invalid actions leave the state unchanged, except that in crashable
    /// mode they set `crashed`. A crashed world accepts no further actions.
    pub fn apply_action(&mut self, a: Action, crashable: bool) -> bool {
        if self.crashed {
            return false;
        }
        let here = self.idx(self.agent);
        let valid = match a {
            Action::Move => match self.neighbor(self.agent, self.dir) {
                Some(q) if !self.is_wall(q) => {
                    self.agent = q;
                    true
                }
                _ => false,
            },
            Action::TurnLeft => {
                self.dir = self.dir.left();
                true
            }
            Action::TurnRight => {
                self.dir = self.dir.right();
                true
            }
            Action::PutMarker => {
                if self.markers[here] < MAX_MARKERS {
                    self.markers[here] += 1;
                    true
                } else {
                    false
                }
            }
            Action::PickMarker => {
                if self.markers[here] > 0 {
                    self.markers[here] -= 1;
                    true
                } else {
                    false
                }
            }
        };
        if !valid && crashable {
            self.crashed = true;
        }
        valid
    }

    /// Checks the structural invariants: walled border, agent on a clear
    /// in-bounds cell, marker counts within the cap.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for p in self.cells() {
            let border = p.row == 0 || p.col == 0 || p.row == self.height - 1 || p.col == self.width - 1;
            if border && !self.is_wall(p) {
                return bad(format!("border cell {p:?} is not a wall"));
            }
            if self.markers(p) > MAX_MARKERS {
                return bad(format!("cell {p:?} exceeds the marker cap"));
            }
        }
        if !self.in_bounds(self.agent) || self.is_wall(self.agent) {
            return bad(format!("agent at {:?} is not on a clear cell", self.agent));
        }
        Ok(())
    }

    /// Parses the fixture map format: a `H W` line followed by `H` rows of
    /// `W` glyphs (`#` wall, `.` empty, `1`-`9`/`A` marker counts,
    /// `^ > v <` the agent on an empty cell).
    pub fn from_map_text(text: &str) -> Result<WorldState> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::MapFormat { line: 1, msg: "empty map".into() })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MapFormat { line: 1, msg: format!("bad header: {e}") })?;
        let [h, w] = dims[..] else {
            return Err(Error::MapFormat { line: 1, msg: "header must be `H W`".into() });
        };
        if h < 3 || w < 3 {
            return Err(Error::MapFormat { line: 1, msg: "grid must be at least 3x3".into() });
        }
        let mut world = WorldState::bordered(h, w);
        let mut agent = None;
        let mut rows = 0;
        for (r, (ln, line)) in lines.enumerate() {
            let line_no = ln + 1;
            if r >= h {
                return Err(Error::MapFormat { line: line_no, msg: format!("more than {h} rows") });
            }
            let glyphs: Vec<char> = line.trim_end().chars().collect();
            if glyphs.len() != w {
                return Err(Error::MapFormat { line: line_no, msg: format!("expected {w} columns, got {}", glyphs.len()) });
            }
            for (c, g) in glyphs.into_iter().enumerate() {
                let p = Pos::new(r, c);
                world.set_wall(p, g == '#');
                match g {
                    '#' | '.' => {}
                    '1'..='9' => world.set_markers(p, g as u8 - b'0'),
                    'A' => world.set_markers(p, 10),
                    _ => match Direction::from_glyph(g) {
                        Some(d) if agent.is_none() => agent = Some((p, d)),
                        Some(_) => return Err(Error::MapFormat { line: line_no, msg: "more than one agent".into() }),
                        None => return Err(Error::MapFormat { line: line_no, msg: format!("unknown glyph {g:?}") }),
                    },
                }
            }
            rows += 1;
        }
        if rows != h {
            return Err(Error::MapFormat { line: rows + 2, msg: format!("expected {h} rows, got {rows}") });
        }
        let (p, d) = agent.ok_or(Error::MapFormat { line: 1, msg: "no agent glyph".into() })?;
        world.agent = p;
        world.dir = d;
        world.validate().map_err(|e| Error::MapFormat { line: 1, msg: e.to_string() })?;
        Ok(world)
    }

    /// Inverse of [`WorldState::from_map_text`]. Fails when the agent stands
    /// on markers, which the format cannot express.
    pub fn to_map_text(&self) -> Result<String> {
        if self.markers(self.agent) > 0 {
            return Err(Error::InvalidConfig("agent cell holds markers; not representable as map text".into()));
        }
        let mut out = format!("{} {}\n", self.height, self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                let p = Pos::new(r, c);
                let g = if p == self.agent {
                    self.dir.glyph()
                } else if self.is_wall(p) {
                    '#'
                } else {
                    match self.markers(p) {
                        0 => '.',
                        10 => 'A',
                        n => (b'0' + n) as char,
                    }
                };
                out.push(g);
            }
            let _ = writeln!(out);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room() -> WorldState {
        WorldState::from_map_text("3 3\n###\n#>#\n###\n").unwrap()
    }

    #[test]
    fn four_left_turns_restore_direction() {
        let mut w = WorldState::bordered(5, 5);
        for d in Direction::ALL {
            w.dir = d;
            for _ in 0..4 {
                assert!(w.apply_action(Action::TurnLeft, false));
            }
            assert_eq!(w.dir, d);
            assert_eq!(d.left().right(), d);
        }
    }

    #[test]
    fn move_into_wall_is_a_noop_in_standard_mode() {
        let mut w = room();
        let before = w.clone();
        for d in Direction::ALL {
            w.dir = d;
            assert!(!w.perceive(Percept::FrontIsClear));
            assert!(!w.apply_action(Action::Move, false));
            assert_eq!(w.agent, before.agent);
            assert!(!w.crashed);
        }
    }

    #[test]
    fn invalid_pick_crashes_in_crashable_mode() {
        let mut w = room();
        assert!(!w.apply_action(Action::PickMarker, true));
        assert!(w.crashed);
        assert!(!w.apply_action(Action::TurnLeft, true));
    }

    #[test]
    fn marker_cap() {
        let mut w = room();
        for _ in 0..10 {
            assert!(w.apply_action(Action::PutMarker, false));
        }
        assert!(!w.apply_action(Action::PutMarker, false));
        assert_eq!(w.markers(w.agent), 10);
        assert!(w.perceive(Percept::MarkersPresent));
    }

    #[test]
    fn marker_percepts_are_complementary() {
        let mut w = room();
        assert!(w.perceive(Percept::NoMarkersPresent));
        assert!(!w.perceive(Percept::MarkersPresent));
        w.apply_action(Action::PutMarker, false);
        assert!(!w.perceive(Percept::NoMarkersPresent));
        assert!(w.perceive(Percept::MarkersPresent));
    }

    #[test]
    fn relative_percepts() {
        let w = WorldState::from_map_text("4 5\n#####\n#...#\n#.^##\n#####\n").unwrap();
        assert!(w.perceive(Percept::FrontIsClear));
        assert!(w.perceive(Percept::LeftIsClear));
        assert!(!w.perceive(Percept::RightIsClear));
    }

    #[test]
    fn map_text_round_trip() {
        let text = "4 6\n######\n#3A.v#\n#.#..#\n######\n";
        let w = WorldState::from_map_text(text).unwrap();
        assert_eq!(w.markers(Pos::new(1, 1)), 3);
        assert_eq!(w.markers(Pos::new(1, 2)), 10);
        assert_eq!(w.dir, Direction::South);
        assert_eq!(w.to_map_text().unwrap(), text);
    }

    #[test]
    fn map_text_errors() {
        assert!(WorldState::from_map_text("3 3\n###\n#.#\n###\n").is_err());
        assert!(WorldState::from_map_text("3 3\n###\n#>.\n###\n").is_err());
        assert!(WorldState::from_map_text("3 3\n###\n#>#\n").is_err());
        assert!(WorldState::from_map_text("3 3\n###\n#x#\n###\n").is_err());
    }
}
