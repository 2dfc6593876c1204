//! MovingAI benchmark `.map` and `.scen` parsing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A cell on the benchmark grid, `x` is the column and `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },

    #[error("line {line}: expected {expected} cells, found {found}")]
    RowLength { line: usize, expected: usize, found: usize },

    #[error("line {line}: unknown cell character {found:?}")]
    UnknownCell { line: usize, found: char },

    #[error("expected {expected} map rows, found {found}")]
    RowCount { expected: usize, found: usize },
}

/// Occupancy grid read from a benchmark map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: u32,
    height: u32,
    /// Row-major, index = y * width + x.
    blocked: Vec<bool>,
}

impl GridMap {
    /// Builds a map from a row-major occupancy vector.
    pub fn new(width: u32, height: u32, blocked: Vec<bool>) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        assert_eq!(blocked.len(), (width * height) as usize);
        GridMap { width, height, blocked }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![false; (width * height) as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Out-of-bounds cells count as blocked.
    pub fn is_blocked(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return true;
        }
        self.blocked[(y as usize) * self.width as usize + x as usize]
    }

    pub fn is_passable(&self, cell: Cell) -> bool {
        !self.is_blocked(cell.x as i64, cell.y as i64)
    }

    pub fn passable_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .map(move |x| Cell::new(x, y))
                .filter(|c| self.is_passable(*c))
        })
    }

    /// Renders the map back into MovingAI text.
    pub fn to_text(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_blocked(x as i64, y as i64) { '@' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

fn header_value(line: &str, key: &str, lineno: usize) -> Result<u32, MapError> {
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => {
            v.parse::<u32>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| MapError::Header {
                    line: lineno,
                    message: format!("invalid {key} value {v:?}"),
                })
        }
        _ => Err(MapError::Header {
            line: lineno,
            message: format!("expected `{key} <n>`, found {line:?}"),
        }),
    }
}

/// Parses MovingAI map text. Line numbers in errors are 1-based.
pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let mut next_header = |what: &str| {
        lines.next().ok_or_else(|| MapError::Header {
            line: 0,
            message: format!("missing `{what}` header"),
        })
    };
    let (n, line) = next_header("type")?;
    if !line.trim_start().starts_with("type") {
        return Err(MapError::Header {
            line: n,
            message: format!("expected `type octile`, found {line:?}"),
        });
    }
    let (n, line) = next_header("height")?;
    let height = header_value(line, "height", n)?;
    let (n, line) = next_header("width")?;
    let width = header_value(line, "width", n)?;
    let (n, line) = next_header("map")?;
    if line.trim() != "map" {
        return Err(MapError::Header {
            line: n,
            message: format!("expected `map`, found {line:?}"),
        });
    }

    let mut blocked = Vec::with_capacity((width * height) as usize);
    let mut rows = 0usize;
    for (n, line) in lines {
        if rows == height as usize {
            if line.trim().is_empty() {
                continue;
            }
            return Err(MapError::RowCount {
                expected: height as usize,
                found: rows + 1,
            });
        }
        let found = line.chars().count();
        if found != width as usize {
            return Err(MapError::RowLength {
                line: n,
                expected: width as usize,
                found,
            });
        }
        for c in line.chars() {
            blocked.push(match c {
                '.' | 'G' => false,
                '@' | 'O' | 'T' | 'W' => true,
                other => return Err(MapError::UnknownCell { line: n, found: other }),
            });
        }
        rows += 1;
    }
    if rows != height as usize {
        return Err(MapError::RowCount {
            expected: height as usize,
            found: rows,
        });
    }
    Ok(GridMap::new(width, height, blocked))
}

/// One start/goal pair of a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub start: Cell,
    pub goal: Cell,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("missing `version` header")]
    MissingVersion,

    #[error("record {record}: {message}")]
    Record { record: usize, message: String },
}

/// Parses a MovingAI `.scen` file and checks every record against `map`.
/// Record indices in errors are 0-based and count data lines only.
pub fn parse_scenario(text: &str, map: &GridMap) -> Result<Vec<ScenarioEntry>, ScenarioError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    match lines.next() {
        Some(l) if l.trim_start().starts_with("version") => {}
        _ => return Err(ScenarioError::MissingVersion),
    }

    let mut out = Vec::new();
    for (record, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let err = |message: String| ScenarioError::Record { record, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 9 {
            return Err(err(format!("expected 9 tab-separated fields, found {}", fields.len())));
        }
        let num = |i: usize| {
            fields[i]
                .trim()
                .parse::<u32>()
                .map_err(|_| err(format!("field {} is not an integer: {:?}", i + 1, fields[i])))
        };
        let (w, h) = (num(2)?, num(3)?);
        if w != map.width() || h != map.height() {
            return Err(err(format!(
                "dimensions {w}x{h} do not match map {}x{}",
                map.width(),
                map.height()
            )));
        }
        let start = Cell::new(num(4)?, num(5)?);
        let goal = Cell::new(num(6)?, num(7)?);
        for (what, cell) in [("start", start), ("goal", goal)] {
            if cell.x >= w || cell.y >= h {
                return Err(err(format!("{what} ({}, {}) is out of bounds", cell.x, cell.y)));
            }
            if !map.is_passable(cell) {
                return Err(err(format!("{what} ({}, {}) is blocked", cell.x, cell.y)));
            }
        }
        out.push(ScenarioEntry { start, goal });
    }
    Ok(out)
}

/// Draws `count` start/goal pairs inside the largest connected region, so
/// every goal is reachable. Starts are pairwise distinct and goals are
/// pairwise distinct, so bodies placed at cell centres never overlap at any
/// resolution. Returns `None` when the region has fewer than `count` cells.
pub fn random_scenario(map: &GridMap, count: usize, seed: u64) -> Option<Vec<ScenarioEntry>> {
    let cells = largest_region(map);
    if cells.len() < count {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = cells.clone();
    starts.shuffle(&mut rng);
    let mut goals = cells;
    goals.shuffle(&mut rng);
    Some(
        starts
            .into_iter()
            .zip(goals)
            .take(count)
            .map(|(start, goal)| ScenarioEntry { start, goal })
            .collect(),
    )
}

/// Passable cells of the largest 4-connected region, in row-major order.
/// Ties go to the region met first in row-major order.
pub fn largest_region(map: &GridMap) -> Vec<Cell> {
    let (w, h) = (map.width() as usize, map.height() as usize);
    let mut label = vec![usize::MAX; w * h];
    let mut best: Vec<usize> = Vec::new();
    let mut next = 0;
    for s in 0..w * h {
        if label[s] != usize::MAX || !map.is_passable(Cell::new((s % w) as u32, (s / w) as u32)) {
            continue;
        }
        label[s] = next;
        let mut region = vec![s];
        let mut k = 0;
        while k < region.len() {
            let c = region[k];
            k += 1;
            let (x, y) = ((c % w) as i64, (c / w) as i64);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x + dx, y + dy);
                if map.is_blocked(nx, ny) {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if label[n] == usize::MAX {
                    label[n] = next;
                    region.push(n);
                }
            }
        }
        if region.len() > best.len() {
            best = region;
        }
        next += 1;
    }
    best.sort_unstable();
    best.into_iter()
        .map(|c| Cell::new((c % w) as u32, (c / w) as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_text(rows: &[&str]) -> String {
        format!(
            "type octile\nheight {}\nwidth {}\nmap\n{}\n",
            rows.len(),
            rows[0].len(),
            rows.join("\n")
        )
    }

    #[test]
    fn parses_uniform_map() {
        let rows = vec!["........"; 8];
        let m = parse_map(&map_text(&rows)).unwrap();
        assert_eq!((m.width(), m.height()), (8, 8));
        assert_eq!(m.passable_count(), 64);
    }

    #[test]
    fn single_obstacle_lands_at_row_and_column() {
        let mut rows = vec!["........".to_string(); 8];
        rows[2].replace_range(3..4, "@");
        let rows: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
        let m = parse_map(&map_text(&rows)).unwrap();
        assert!(m.is_blocked(3, 2));
        assert!(!m.is_blocked(2, 3));
        assert_eq!(m.passable_count(), 63);
    }

    #[test]
    fn benchmark_cell_characters() {
        let m = parse_map(&map_text(&[".G@OTW"])).unwrap();
        let blocked: Vec<bool> = (0..6).map(|x| m.is_blocked(x, 0)).collect();
        assert_eq!(blocked, vec![false, false, true, true, true, true]);
    }

    #[test]
    fn bundled_empty_8_8() {
        let text = include_str!("../../../data/empty-8-8.map");
        let m = parse_map(text).unwrap();
        assert_eq!(m.passable_count(), 64);
    }

    #[test]
    fn errors_name_the_line() {
        let bad_header = "type octile\nheight x\nwidth 2\nmap\n..\n";
        assert_eq!(
            parse_map(bad_header).unwrap_err(),
            MapError::Header {
                line: 2,
                message: "invalid height value \"x\"".into()
            }
        );
        let short_row = "type octile\nheight 2\nwidth 3\nmap\n...\n..\n";
        assert_eq!(
            parse_map(short_row).unwrap_err(),
            MapError::RowLength {
                line: 6,
                expected: 3,
                found: 2
            }
        );
        let unknown = "type octile\nheight 1\nwidth 2\nmap\n.S\n";
        assert_eq!(
            parse_map(unknown).unwrap_err(),
            MapError::UnknownCell { line: 5, found: 'S' }
        );
        let missing_rows = "type octile\nheight 3\nwidth 1\nmap\n.\n";
        assert!(matches!(
            parse_map(missing_rows).unwrap_err(),
            MapError::RowCount { expected: 3, found: 1 }
        ));
        assert!(parse_map("").is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = parse_map(&map_text(&["..@", "@..", "..."])).unwrap();
        assert_eq!(parse_map(&m.to_text()).unwrap(), m);
    }

    fn scen(records: &[(u32, u32, u32, u32)]) -> String {
        let mut s = String::from("version 1\n");
        for (i, (sx, sy, gx, gy)) in records.iter().enumerate() {
            s.push_str(&format!("{i}\tm.map\t4\t4\t{sx}\t{sy}\t{gx}\t{gy}\t3.0\n"));
        }
        s
    }

    #[test]
    fn scenario_preserves_order() {
        let m = GridMap::empty(4, 4);
        let got = parse_scenario(&scen(&[(0, 0, 3, 3), (1, 0, 2, 2), (3, 1, 0, 2)]), &m).unwrap();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].start, Cell::new(0, 0));
        assert_eq!(got[1].goal, Cell::new(2, 2));
        assert_eq!(got[2].start, Cell::new(3, 1));
    }

    #[test]
    fn scenario_rejects_blocked_start() {
        let mut blocked = vec![false; 16];
        blocked[4 + 1] = true;
        let m = GridMap::new(4, 4, blocked);
        let err = parse_scenario(&scen(&[(0, 0, 3, 3), (1, 1, 2, 2)]), &m).unwrap_err();
        assert!(matches!(err, ScenarioError::Record { record: 1, .. }), "{err}");
    }

    #[test]
    fn scenario_rejects_bad_dimensions_and_bounds() {
        let m = GridMap::empty(5, 4);
        assert!(matches!(
            parse_scenario(&scen(&[(0, 0, 1, 1)]), &m).unwrap_err(),
            ScenarioError::Record { record: 0, .. }
        ));
        let m = GridMap::empty(4, 4);
        assert!(parse_scenario(&scen(&[(4, 0, 1, 1)]), &m).is_err());
        assert_eq!(parse_scenario("", &m).unwrap_err(), ScenarioError::MissingVersion);
    }

    #[test]
    fn empty_scenario() {
        let m = GridMap::empty(4, 4);
        assert!(parse_scenario("version 1\n", &m).unwrap().is_empty());
    }

    #[test]
    fn random_scenario_is_seeded_and_distinct() {
        let m = parse_map(include_str!("../../../data/random-32-32-10.map")).unwrap();
        let a = random_scenario(&m, 40, 7).unwrap();
        assert_eq!(a, random_scenario(&m, 40, 7).unwrap());
        assert_ne!(a, random_scenario(&m, 40, 8).unwrap());
        let mut starts: Vec<Cell> = a.iter().map(|e| e.start).collect();
        starts.sort();
        starts.dedup();
        assert_eq!(starts.len(), 40);
        assert!(a.iter().all(|e| m.is_passable(e.start) && m.is_passable(e.goal)));
        assert!(random_scenario(&GridMap::empty(2, 2), 5, 0).is_none());
    }

    #[test]
    fn largest_region_skips_pockets() {
        let m = parse_map(&map_text(&[".@...", "@@...", "..@@@"])).unwrap();
        let region = largest_region(&m);
        assert_eq!(region.len(), 6);
        assert_eq!(region[0], Cell::new(2, 0));
        let scen = random_scenario(&m, 6, 1).unwrap();
        assert!(scen
            .iter()
            .all(|e| region.contains(&e.start) && region.contains(&e.goal)));
        assert!(random_scenario(&m, 7, 1).is_none());
    }
}
