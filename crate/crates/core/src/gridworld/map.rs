use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GridError;

pub type Cell = (usize, usize);

const MAX_REJECTIONS: usize = 10_000;

/// Square occupancy grid. `y` grows upwards; `(0,0)` is bottom-left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    pub size: usize,
    obstacles: Vec<bool>,
    pub start: Cell,
    pub destination: Cell,
}

impl GridMap {
    pub fn new(size: usize, obstacles: &[Cell], start: Cell, destination: Cell) -> Result<Self, GridError> {
        let mut grid = vec![false; size * size];
        for &(x, y) in obstacles {
            if x >= size || y >= size {
                return Err(GridError::Invalid(format!("obstacle ({x},{y}) is off the map")));
            }
            grid[y * size + x] = true;
        }
        let map = GridMap {
            size,
            obstacles: grid,
            start,
            destination,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn empty(size: usize) -> Self {
        GridMap {
            size,
            obstacles: vec![false; size * size],
            start: (0, 0),
            destination: (size - 1, size - 1),
        }
    }

    fn validate(&self) -> Result<(), GridError> {
        let n = self.size;
        let inside = |(x, y): Cell| x < n && y < n;
        if n < 2 || !inside(self.start) || !inside(self.destination) {
            return Err(GridError::Invalid("start and destination must lie on the map".into()));
        }
        if self.start == self.destination {
            return Err(GridError::Invalid("start equals destination".into()));
        }
        if self.is_obstacle(self.start) || self.is_obstacle(self.destination) {
            return Err(GridError::Invalid("start or destination is an obstacle".into()));
        }
        if !self.has_path() {
            return Err(GridError::Invalid("no obstacle-free path from start to destination".into()));
        }
        Ok(())
    }

    pub fn is_obstacle(&self, (x, y): Cell) -> bool {
        self.obstacles[y * self.size + x]
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Cell> + '_ {
        let n = self.size;
        (0..n * n).filter(|&i| self.obstacles[i]).map(move |i| (i % n, i / n))
    }

    /// Free cells, row by row from the bottom.
    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let n = self.size;
        (0..n * n).filter(|&i| !self.obstacles[i]).map(move |i| (i % n, i / n))
    }

    pub fn neighbours4(&self, (x, y): Cell) -> impl Iterator<Item = Cell> {
        let n = self.size as isize;
        let (x, y) = (x as isize, y as isize);
        [(1, 0), (0, 1), (-1, 0), (0, -1)]
            .into_iter()
            .map(move |(dx, dy)| (x + dx, y + dy))
            .filter(move |&(a, b)| a >= 0 && b >= 0 && a < n && b < n)
            .map(|(a, b)| (a as usize, b as usize))
    }

    /// Whether any of the up to eight surrounding cells is an obstacle.
    pub fn near_obstacle(&self, (x, y): Cell) -> bool {
        let n = self.size as isize;
        (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                let (a, b) = (x as isize + dx, y as isize + dy);
                (dx, dy) != (0, 0) && a >= 0 && b >= 0 && a < n && b < n && self.is_obstacle((a as usize, b as usize))
            })
        })
    }

    /// Length of the shortest 4-connected obstacle-free path, if any.
    pub fn shortest_path_len(&self) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.size * self.size];
        let idx = |(x, y): Cell| y * self.size + x;
        dist[idx(self.start)] = 0;
        let mut queue = VecDeque::from([self.start]);
        while let Some(c) = queue.pop_front() {
            if c == self.destination {
                return Some(dist[idx(c)]);
            }
            for nb in self.neighbours4(c) {
                if !self.is_obstacle(nb) && dist[idx(nb)] == usize::MAX {
                    dist[idx(nb)] = dist[idx(c)] + 1;
                    queue.push_back(nb);
                }
            }
        }
        None
    }

    pub fn has_path(&self) -> bool {
        self.shortest_path_len().is_some()
    }
}

/// Independent obstacle draws for `cells` cells, before any rejection.
pub fn draw_obstacles(rng: &mut impl Rng, cells: usize, sigma_threshold: f64) -> Vec<bool> {
    (0..cells)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z.abs() > sigma_threshold
        })
        .collect()
}

/// Random map: a cell is an obstacle when a standard-normal draw falls
/// outside `[-sigma, sigma]`. Start is bottom-left, destination top-right.
/// Whole maps are redrawn until a path exists.
pub fn generate_map(size: usize, seed: u64, sigma_threshold: f64) -> Result<GridMap, GridError> {
    if size < 3 {
        return Err(GridError::Invalid(format!("map size {size} is below 3")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = (0, 0);
    let destination = (size - 1, size - 1);
    for _ in 0..MAX_REJECTIONS {
        let mut obstacles = draw_obstacles(&mut rng, size * size, sigma_threshold);
        obstacles[start.1 * size + start.0] = false;
        obstacles[destination.1 * size + destination.0] = false;
        let map = GridMap {
            size,
            obstacles,
            start,
            destination,
        };
        if map.has_path() {
            return Ok(map);
        }
    }
    Err(GridError::Exhausted(MAX_REJECTIONS))
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N={}", self.size)?;
        for y in (0..self.size).rev() {
            for x in 0..self.size {
                let c = if (x, y) == self.start {
                    'S'
                } else if (x, y) == self.destination {
                    'D'
                } else if self.is_obstacle((x, y)) {
                    '#'
                } else {
                    '.'
                };
                write!(f, "{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for GridMap {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| GridError::Invalid(m.to_string());
        let mut lines = s.lines().map(str::trim_end).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| bad("empty map file"))?;
        let size: usize = header
            .strip_prefix("N=")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| bad("first line must be `N=<n>`"))?;
        let rows: Vec<&str> = lines.collect();
        if rows.len() != size {
            return Err(bad(&format!("expected {size} rows, found {}", rows.len())));
        }
        let mut obstacles = Vec::new();
        let (mut start, mut dest) = (None, None);
        for (r, row) in rows.iter().enumerate() {
            let y = size - 1 - r;
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != size {
                return Err(bad(&format!("row {} has {} cells, expected {size}", r + 2, chars.len())));
            }
            for (x, ch) in chars.into_iter().enumerate() {
                match ch {
                    '.' => {}
                    '#' => obstacles.push((x, y)),
                    'S' if start.is_none() => start = Some((x, y)),
                    'D' if dest.is_none() => dest = Some((x, y)),
                    other => return Err(bad(&format!("unexpected cell `{other}` at ({x},{y})"))),
                }
            }
        }
        GridMap::new(
            size,
            &obstacles,
            start.ok_or_else(|| bad("no start cell"))?,
            dest.ok_or_else(|| bad("no destination cell"))?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_solvable() {
        for seed in 0..20 {
            let a = generate_map(10, seed, 1.0).unwrap();
            assert_eq!(a, generate_map(10, seed, 1.0).unwrap());
            assert!(a.has_path());
            assert_eq!(a.start, (0, 0));
            assert_eq!(a.destination, (9, 9));
        }
        assert_ne!(generate_map(10, 1, 1.0).unwrap(), generate_map(10, 2, 1.0).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let m = generate_map(7, 3, 1.0).unwrap();
        let text = m.to_string();
        assert!(text.starts_with("N=7\n"));
        assert_eq!(text.lines().nth(7).unwrap().chars().next(), Some('S'));
        assert_eq!(text.parse::<GridMap>().unwrap(), m);
    }

    #[test]
    fn rejects_bad_maps() {
        assert!("N=3\nS..\n...\n..D\n".parse::<GridMap>().is_ok());
        assert!("N=3\n..D\n###\nS..\n".parse::<GridMap>().is_err());
        assert!("N=3\n..D\n...\n".parse::<GridMap>().is_err());
        assert!(generate_map(2, 0, 1.0).is_err());
    }
}
