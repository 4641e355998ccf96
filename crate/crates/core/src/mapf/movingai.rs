//! Reader for MovingAI benchmark maps (`.map`) and scenarios (`.scen`).

use super::instance::{MapfInstance, Subgrid};
use super::io::FormatError;
use crate::grid::{Cell, Grid};

/// One scenario line: start and goal as (x, y) with y counted from the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenEntry {
    pub start: (usize, usize),
    pub goal: (usize, usize),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// Parses a `.map` file into a unit-cell grid.
pub fn parse_map(text: &str) -> Result<Grid, FormatError> {
    let mut lines = text.lines().enumerate();
    let mut width = None;
    let mut height = None;
    for (i, l) in lines.by_ref() {
        let t: Vec<&str> = l.split_whitespace().collect();
        match t.first().copied() {
            Some("type") | None => {}
            Some("height") => height = t.get(1).and_then(|x| x.parse::<usize>().ok()),
            Some("width") => width = t.get(1).and_then(|x| x.parse::<usize>().ok()),
            Some("map") => break,
            Some(other) => return Err(syntax(i + 1, format!("unexpected header `{other}`"))),
        }
    }
    let (w, h) = (width.ok_or(FormatError::Missing("width"))?, height.ok_or(FormatError::Missing("height"))?);
    let rows: Vec<&str> = lines.map(|(_, l)| l.trim_end()).filter(|l| !l.is_empty()).collect();
    if rows.len() != h || rows.iter().any(|r| r.chars().count() != w) {
        return Err(FormatError::Invalid(format!("expected {h} rows of width {w}")));
    }
    Ok(Grid::from_ascii(&rows, 1.0))
}

/// Parses a `.scen` file (version line optional).
pub fn parse_scen(text: &str) -> Result<Vec<ScenEntry>, FormatError> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.is_empty() || t[0] == "version" {
            continue;
        }
        if t.len() < 8 {
            return Err(syntax(i + 1, "expected 8 or 9 columns"));
        }
        let n = |k: usize| t[k].parse::<usize>().map_err(|_| syntax(i + 1, format!("bad number `{}`", t[k])));
        out.push(ScenEntry { start: (n(4)?, n(5)?), goal: (n(6)?, n(7)?) });
    }
    Ok(out)
}

/// Instance with the first `k` scenario entries on the 4-connected free cells.
pub fn scen_instance(grid: &Grid, entries: &[ScenEntry], k: usize) -> Result<(Subgrid, MapfInstance), FormatError> {
    if entries.len() < k {
        return Err(FormatError::Invalid(format!("scenario has {} entries, {k} requested", entries.len())));
    }
    let sub = Subgrid::from_grid(grid.clone(), grid.bounds());
    let vertex = |(x, y): (usize, usize)| -> Result<usize, FormatError> {
        if x >= grid.width || y >= grid.height {
            return Err(FormatError::Invalid(format!("cell ({x}, {y}) outside the map")));
        }
        sub.vertex_of_cell(Cell::new(x, grid.height - 1 - y))
            .ok_or_else(|| FormatError::Invalid(format!("cell ({x}, {y}) is blocked")))
    };
    let starts = entries[..k].iter().map(|e| vertex(e.start)).collect::<Result<Vec<_>, _>>()?;
    let targets = entries[..k].iter().map(|e| vertex(e.goal)).collect::<Result<Vec<_>, _>>()?;
    let inst = MapfInstance::new(sub.graph.clone(), starts, targets).map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok((sub, inst))
}
