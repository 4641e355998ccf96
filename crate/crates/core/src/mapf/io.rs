//! Line-oriented text format for instances and plans (regression fixtures).
//!
//! ```text
//! # mapf-instance
//! vertices 4
//! edge 0 1
//! agent 0 3
//! ```
//!
//! A local instance adds the grid (`cell_size`, `origin`, `size`, `bounds`,
//! one `row` per grid row from the bottom, `.` free and `#` blocked) and
//! writes `agent <world id> <start> <target>`. A plan is `horizon H` followed
//! by one `path` line per agent.

use super::graph::Graph;
use super::instance::{LocalInstance, MapfInstance, Subgrid};
use super::schedule::JointPlan;
use crate::geom::{Rect, Vec2};
use crate::grid::{Cell, Grid};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("invalid content: {0}")]
    Invalid(String),
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split_whitespace().collect()))
}

fn num<T: FromStr>(line: usize, tok: Option<&&str>) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| FormatError::Syntax { line, msg: "missing value".into() })?;
    tok.parse().map_err(|_| FormatError::Syntax { line, msg: format!("cannot parse `{tok}`") })
}

pub fn write_instance(inst: &MapfInstance) -> String {
    let mut s = String::from("# mapf-instance\n");
    writeln!(s, "vertices {}", inst.graph.len()).unwrap();
    for (u, v) in inst.graph.edges() {
        writeln!(s, "edge {u} {v}").unwrap();
    }
    for (a, b) in inst.starts.iter().zip(&inst.targets) {
        writeln!(s, "agent {a} {b}").unwrap();
    }
    s
}

pub fn parse_instance(text: &str) -> Result<MapfInstance, FormatError> {
    let mut graph = None;
    let mut starts = Vec::new();
    let mut targets = Vec::new();
    for (line, t) in records(text) {
        match t[0] {
            "vertices" => graph = Some(Graph::new(num(line, t.get(1))?)),
            "edge" => {
                let g: &mut Graph = graph.as_mut().ok_or(FormatError::Missing("vertices"))?;
                let (u, v): (usize, usize) = (num(line, t.get(1))?, num(line, t.get(2))?);
                if u >= g.len() || v >= g.len() {
                    return Err(FormatError::Syntax { line, msg: "edge endpoint out of range".into() });
                }
                g.add_edge(u, v);
            }
            "agent" => {
                starts.push(num(line, t.get(1))?);
                targets.push(num(line, t.get(2))?);
            }
            other => return Err(FormatError::Syntax { line, msg: format!("unknown record `{other}`") }),
        }
    }
    let graph = graph.ok_or(FormatError::Missing("vertices"))?;
    MapfInstance::new(graph, starts, targets).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn write_local_instance(li: &LocalInstance) -> String {
    let g = &li.subgrid.grid;
    let b = li.subgrid.bounds;
    let mut s = String::from("# local-instance\n");
    writeln!(s, "cell_size {}", g.cell_size).unwrap();
    writeln!(s, "origin {} {}", g.origin.x, g.origin.y).unwrap();
    writeln!(s, "size {} {}", g.width, g.height).unwrap();
    writeln!(s, "bounds {} {} {} {}", b.min.x, b.min.y, b.max.x, b.max.y).unwrap();
    for row in 0..g.height {
        let cells: String = (0..g.width).map(|c| if g.is_free(Cell::new(c, row)) { '.' } else { '#' }).collect();
        writeln!(s, "row {cells}").unwrap();
    }
    for (i, id) in li.agents.iter().enumerate() {
        writeln!(s, "agent {id} {} {}", li.instance.starts[i], li.instance.targets[i]).unwrap();
    }
    s
}

pub fn parse_local_instance(text: &str) -> Result<LocalInstance, FormatError> {
    let mut cell_size = None;
    let mut origin = None;
    let mut size = None;
    let mut bounds = None;
    let mut rows: Vec<String> = Vec::new();
    let mut agents = Vec::new();
    let mut starts = Vec::new();
    let mut targets = Vec::new();
    for (line, t) in records(text) {
        match t[0] {
            "cell_size" => cell_size = Some(num::<f64>(line, t.get(1))?),
            "origin" => origin = Some(Vec2::new(num(line, t.get(1))?, num(line, t.get(2))?)),
            "size" => size = Some((num::<usize>(line, t.get(1))?, num::<usize>(line, t.get(2))?)),
            "bounds" => {
                bounds = Some(Rect::new(num(line, t.get(1))?, num(line, t.get(2))?, num(line, t.get(3))?, num(line, t.get(4))?))
            }
            "row" => rows.push(t.get(1).copied().unwrap_or("").to_string()),
            "agent" => {
                agents.push(num(line, t.get(1))?);
                starts.push(num(line, t.get(2))?);
                targets.push(num(line, t.get(3))?);
            }
            other => return Err(FormatError::Syntax { line, msg: format!("unknown record `{other}`") }),
        }
    }
    let (w, h) = size.ok_or(FormatError::Missing("size"))?;
    let mut grid = Grid::new(w, h, cell_size.ok_or(FormatError::Missing("cell_size"))?, origin.ok_or(FormatError::Missing("origin"))?);
    if rows.len() != h || rows.iter().any(|r| r.chars().count() != w) {
        return Err(FormatError::Invalid("row data does not match size".into()));
    }
    for (row, r) in rows.iter().enumerate() {
        for (col, ch) in r.chars().enumerate() {
            grid.set_blocked(Cell::new(col, row), ch != '.');
        }
    }
    let subgrid = Subgrid::from_grid(grid, bounds.ok_or(FormatError::Missing("bounds"))?);
    let instance =
        MapfInstance::new(subgrid.graph.clone(), starts, targets).map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(LocalInstance { subgrid, agents, instance })
}

pub fn write_plan(plan: &JointPlan) -> String {
    let mut s = String::from("# joint-plan\n");
    writeln!(s, "horizon {}", plan.horizon()).unwrap();
    for p in &plan.paths {
        let vs: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(s, "path {}", vs.join(" ")).unwrap();
    }
    s
}

/// Parses a plan; primitive records are not part of the format.
pub fn parse_plan(text: &str) -> Result<JointPlan, FormatError> {
    let mut horizon = None;
    let mut paths = Vec::new();
    for (line, t) in records(text) {
        match t[0] {
            "horizon" => horizon = Some(num::<usize>(line, t.get(1))?),
            "path" => {
                let p: Result<Vec<usize>, _> = t[1..].iter().map(|x| num(line, Some(x))).collect();
                paths.push(p?);
            }
            other => return Err(FormatError::Syntax { line, msg: format!("unknown record `{other}`") }),
        }
    }
    let h = horizon.ok_or(FormatError::Missing("horizon"))?;
    if paths.iter().any(|p| p.len() != h + 1) {
        return Err(FormatError::Invalid("path length differs from horizon".into()));
    }
    Ok(JointPlan { paths, records: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapf::{build_instance, crop_subgrid, pnr_solve};
    use crate::world::ObstacleMap;

    #[test]
    fn instance_and_plan_round_trip() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]);
        let inst = MapfInstance::new(g, vec![0, 2], vec![2, 0]).unwrap();
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
        let plan = pnr_solve(&inst).unwrap();
        assert_eq!(parse_plan(&write_plan(&plan)).unwrap().paths, plan.paths);
    }

    #[test]
    fn local_instance_round_trip() {
        let map = ObstacleMap::new(Rect::new(0.0, 0.0, 6.0, 4.0), vec![Rect::new(2.0, 0.0, 2.5, 1.5)]);
        let pos = [Vec2::new(1.0, 1.0), Vec2::new(3.3, 2.1)];
        let sub = crop_subgrid(&map, &pos, 1.5, 0.5, 0.2);
        let li = build_instance(&sub, &[2, 5], &pos, &[pos[1], pos[0]]).unwrap();
        let back = parse_local_instance(&write_local_instance(&li)).unwrap();
        assert_eq!(back, li);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = parse_instance("vertices 2\nedge 0 x\n").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 2, .. }));
    }
}
