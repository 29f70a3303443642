use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use super::map::{Cell, GridMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    East,
    North,
    West,
    South,
}

impl Move {
    /// Tie-break order when several moves are equally good.
    pub const ALL: [Move; 4] = [Move::East, Move::North, Move::West, Move::South];

    pub fn label(self) -> &'static str {
        match self {
            Move::East => "east",
            Move::North => "north",
            Move::West => "west",
            Move::South => "south",
        }
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Move::East => (1, 0),
            Move::North => (0, 1),
            Move::West => (-1, 0),
            Move::South => (0, -1),
        }
    }

    pub fn apply(self, (x, y): Cell, size: usize) -> Option<Cell> {
        let (dx, dy) = self.delta();
        let (a, b) = (x as isize + dx, y as isize + dy);
        (a >= 0 && b >= 0 && a < size as isize && b < size as isize).then_some((a as usize, b as usize))
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Precomputed move for every free cell that can reach the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct MovementPolicy {
    pub moves: BTreeMap<Cell, Move>,
    /// Least cost to the destination from each cell that has one.
    pub cost: BTreeMap<Cell, f64>,
}

impl MovementPolicy {
    pub fn get(&self, c: Cell) -> Option<Move> {
        self.moves.get(&c).copied()
    }

    /// Cells visited when following the policy on a deterministic grid.
    pub fn path(&self, map: &GridMap) -> Vec<Cell> {
        let mut path = vec![map.start];
        let mut c = map.start;
        while let Some(m) = self.get(c) {
            c = m.apply(c, map.size).expect("policy stays on the map");
            path.push(c);
            if path.len() > map.size * map.size {
                break;
            }
        }
        path
    }
}

#[derive(PartialEq)]
struct Entry(f64, Cell);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cost of stepping into `c`: one move plus the penalty near obstacles.
pub fn step_cost(map: &GridMap, c: Cell, obstacle_penalty: f64) -> f64 {
    1.0 + if map.near_obstacle(c) { obstacle_penalty } else { 0.0 }
}

/// Dijkstra from the destination over reversed edges, then the first move
/// of a least-cost path from every reachable free cell.
pub fn dijkstra_controller(map: &GridMap, obstacle_penalty: f64) -> MovementPolicy {
    let mut cost: BTreeMap<Cell, f64> = BTreeMap::new();
    let mut heap = BinaryHeap::from([Entry(0.0, map.destination)]);
    while let Some(Entry(d, v)) = heap.pop() {
        if cost.contains_key(&v) {
            continue;
        }
        cost.insert(v, d);
        let w = step_cost(map, v, obstacle_penalty);
        for u in map.neighbours4(v) {
            if !map.is_obstacle(u) && !cost.contains_key(&u) {
                heap.push(Entry(d + w, u));
            }
        }
    }
    let mut moves = BTreeMap::new();
    for (&c, _) in cost.iter().filter(|(&c, _)| c != map.destination) {
        let best = Move::ALL
            .into_iter()
            .filter_map(|m| {
                let t = m.apply(c, map.size)?;
                let rest = cost.get(&t)?;
                Some((m, step_cost(map, t, obstacle_penalty) + rest))
            })
            .fold(None::<(Move, f64)>, |acc, (m, v)| match acc {
                Some((_, best)) if best <= v + 1e-12 => acc,
                _ => Some((m, v)),
            });
        if let Some((m, _)) = best {
            moves.insert(c, m);
        }
    }
    MovementPolicy { moves, cost }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_map_uses_manhattan_paths() {
        let map = GridMap::empty(3);
        let pol = dijkstra_controller(&map, 2.0);
        assert_eq!(pol.path(&map).len() - 1, 4);
        assert_eq!(pol.get((2, 2)), None);
        assert_eq!(pol.moves.len(), 8);
        assert_eq!(pol.cost[&(0, 0)], 4.0);
    }

    #[test]
    fn walled_off_cells_get_no_move() {
        let map = GridMap::new(4, &[(2, 0), (2, 1), (3, 1)], (0, 0), (3, 3)).unwrap();
        let pol = dijkstra_controller(&map, 0.0);
        assert_eq!(pol.get((3, 0)), None);
        assert!(pol.get((0, 0)).is_some());
        assert_eq!(*pol.path(&map).last().unwrap(), (3, 3));
    }
}
