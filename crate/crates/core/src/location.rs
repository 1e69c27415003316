//! Grid locations and the nine mobility actions.

use std::fmt;

/// A grid cell addressed by (row, col); row 0 is the northern edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Neighbour reached by `action`, or `None` when it falls off a grid of
    /// `n_rows` x `n_cols`.
    pub fn step(self, action: Action, n_rows: usize, n_cols: usize) -> Option<Cell> {
        let (dr, dc) = action.offset();
        let row = self.row as isize + dr;
        let col = self.col as isize + dc;
        if row < 0 || col < 0 || row >= n_rows as isize || col >= n_cols as isize {
            return None;
        }
        Some(Cell::new(row as usize, col as usize))
    }

    /// True when `other` is this cell or one of its 8 neighbours.
    pub fn is_adjacent_or_same(self, other: Cell) -> bool {
        self.row.abs_diff(other.row) <= 1 && self.col.abs_diff(other.col) <= 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Mobility actions in canonical order: wait, then the eight drive
/// directions clockwise from north. The order doubles as the argmin
/// tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Action {
    Wait = 0,
    North,
    NorthEast,
    East,
    SouthEast,
    South,
    SouthWest,
    West,
    NorthWest,
}

impl Action {
    pub const ALL: [Action; 9] = [
        Action::Wait,
        Action::North,
        Action::NorthEast,
        Action::East,
        Action::SouthEast,
        Action::South,
        Action::SouthWest,
        Action::West,
        Action::NorthWest,
    ];

    pub const COUNT: usize = 9;

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// (d_row, d_col) displacement.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Action::Wait => (0, 0),
            Action::North => (-1, 0),
            Action::NorthEast => (-1, 1),
            Action::East => (0, 1),
            Action::SouthEast => (1, 1),
            Action::South => (1, 0),
            Action::SouthWest => (1, -1),
            Action::West => (0, -1),
            Action::NorthWest => (-1, -1),
        }
    }

    pub fn is_drive(self) -> bool {
        self != Action::Wait
    }

    pub fn is_diagonal(self) -> bool {
        let (dr, dc) = self.offset();
        dr != 0 && dc != 0
    }

    /// The action that undoes this one.
    pub fn reverse(self) -> Action {
        match self {
            Action::Wait => Action::Wait,
            Action::North => Action::South,
            Action::NorthEast => Action::SouthWest,
            Action::East => Action::West,
            Action::SouthEast => Action::NorthWest,
            Action::South => Action::North,
            Action::SouthWest => Action::NorthEast,
            Action::West => Action::East,
            Action::NorthWest => Action::SouthEast,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Wait => "wait",
            Action::North => "N",
            Action::NorthEast => "NE",
            Action::East => "E",
            Action::SouthEast => "SE",
            Action::South => "S",
            Action::SouthWest => "SW",
            Action::West => "W",
            Action::NorthWest => "NW",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_reverse() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), Some(*a));
            let (dr, dc) = a.offset();
            let (rr, rc) = a.reverse().offset();
            assert_eq!((dr + rr, dc + rc), (0, 0));
        }
        assert_eq!(Action::from_index(9), None);
    }

    #[test]
    fn step_respects_bounds() {
        let c = Cell::new(0, 0);
        assert_eq!(c.step(Action::North, 3, 3), None);
        assert_eq!(c.step(Action::SouthEast, 3, 3), Some(Cell::new(1, 1)));
        assert_eq!(Cell::new(2, 2).step(Action::East, 3, 3), None);
    }
}
