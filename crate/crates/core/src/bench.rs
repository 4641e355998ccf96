//! Benchmark scenarios, batch runner, result tables and trajectory export.

use crate::executive::{run_episode, EpisodeResult, ExecError, ExecOptions, Method, Outcome};
use crate::geom::{Rect, Vec2};
use crate::scenario::Scenario;
use crate::world::ObstacleMap;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub const WORKSPACE_WIDTH: f64 = 10.0;
pub const WORKSPACE_HEIGHT: f64 = 6.0;
pub const DOORWAY_WIDTH: f64 = 1.5;
pub const WALL_THICKNESS: f64 = 0.2;
pub const CORRIDOR_LENGTH: f64 = 5.0;
pub const CORRIDOR_WIDTH: f64 = 1.5;
/// Default start jitter per axis (m).
pub const JITTER: f64 = 0.05;
pub const T_MAX: usize = 1000;

/// `k` lateral offsets centered on `mid` with the given spacing.
fn column(k: usize, mid: f64, spacing: f64) -> Vec<f64> {
    (0..k).map(|i| mid + (i as f64 - (k as f64 - 1.0) / 2.0) * spacing).collect()
}

/// Starts for `n` agents, half on each side in a block of columns of at
/// most `per_col` agents; right-side starts mirror the left ones.
/// Left starts are right goals and vice versa; an agent in column `c` takes
/// the slot of column `cols - 1 - c` on the far side (same row when it
/// exists), so the leaders park deepest and never block the followers.
fn mirrored(n: usize, x_front: f64, per_col: usize, dx: f64, dy: f64) -> (Vec<Vec2>, Vec<Vec2>) {
    let half = n / 2;
    let mid = WORKSPACE_HEIGHT / 2.0;
    let cols = half.div_ceil(per_col);
    let slots: Vec<Vec<Vec2>> = (0..cols)
        .map(|c| {
            let in_col = per_col.min(half - c * per_col);
            column(in_col, mid, dy).into_iter().map(|y| Vec2::new(x_front - c as f64 * dx, y)).collect()
        })
        .collect();
    let mirror = |p: Vec2| Vec2::new(WORKSPACE_WIDTH - p.x, p.y);
    let mut left = Vec::with_capacity(half);
    let mut left_goals = Vec::with_capacity(half);
    for (c, col) in slots.iter().enumerate() {
        for (row, &p) in col.iter().enumerate() {
            left.push(p);
            let q = slots[cols - 1 - c].get(row).copied().unwrap_or(p);
            left_goals.push(mirror(q));
        }
    }
    let starts: Vec<Vec2> = left.iter().copied().chain(left.iter().map(|&p| mirror(p))).collect();
    let goals: Vec<Vec2> = left_goals.iter().copied().chain(left_goals.iter().map(|&p| mirror(p))).collect();
    (starts, goals)
}

/// A wall across the workspace at mid-width with a centered opening. Goal
/// columns stand 2.4 m off the wall; closer ones, once occupied, fence off
/// the opening on the coarse planning lattice.
pub fn doorway(n: usize) -> Scenario {
    assert!(n >= 2 && n % 2 == 0, "doorway needs an even agent count");
    let x0 = (WORKSPACE_WIDTH - WALL_THICKNESS) / 2.0;
    let x1 = x0 + WALL_THICKNESS;
    let y0 = (WORKSPACE_HEIGHT - DOORWAY_WIDTH) / 2.0;
    let y1 = y0 + DOORWAY_WIDTH;
    let map = ObstacleMap::new(
        Rect::new(0.0, 0.0, WORKSPACE_WIDTH, WORKSPACE_HEIGHT),
        vec![Rect::new(x0, 0.0, x1, y0), Rect::new(x0, y1, x1, WORKSPACE_HEIGHT)],
    );
    let (starts, goals) = mirrored(n, 2.5, 4, 0.7, 0.7);
    let mut s = Scenario::new("doorway", map, starts, goals);
    s.jitter = JITTER;
    s
}

/// A straight single-lane channel between two open halls; half the agents
/// wait in a column in each hall and swap ends. The columns stand back from
/// the mouths so agents parked at their goals leave the entrance free.
pub fn corridor(n: usize) -> Scenario {
    assert!(n >= 2 && n % 2 == 0, "corridor needs an even agent count");
    let x0 = (WORKSPACE_WIDTH - CORRIDOR_LENGTH) / 2.0;
    let x1 = x0 + CORRIDOR_LENGTH;
    let y0 = (WORKSPACE_HEIGHT - CORRIDOR_WIDTH) / 2.0;
    let y1 = y0 + CORRIDOR_WIDTH;
    let map = ObstacleMap::new(
        Rect::new(0.0, 0.0, WORKSPACE_WIDTH, WORKSPACE_HEIGHT),
        vec![Rect::new(x0, 0.0, x1, y0), Rect::new(x0, y1, x1, WORKSPACE_HEIGHT)],
    );
    let (starts, goals) = mirrored(n, 1.3, 4, 0.7, 0.7);
    let mut s = Scenario::new("corridor", map, starts, goals);
    s.jitter = JITTER;
    s
}

/// Built-in scenario by name.
pub fn builtin(name: &str, n: usize) -> Option<Scenario> {
    match name {
        "doorway" => Some(doorway(n)),
        "corridor" => Some(corridor(n)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: usize,
    pub triggers: usize,
    pub solves_ok: usize,
    pub solves_failed: usize,
    pub coordinated_steps: usize,
    /// Clearance records: within bound, missed, undecided at episode end.
    pub cleared: usize,
    pub missed: usize,
    pub undecided: usize,
    pub collision_events: usize,
}

impl EpisodeSummary {
    pub fn from_result(seed: u64, r: &EpisodeResult) -> Self {
        let mut s = EpisodeSummary {
            seed,
            outcome: r.outcome,
            steps: r.steps,
            triggers: r.triggers,
            solves_ok: r.solves_ok,
            solves_failed: r.solves_failed,
            coordinated_steps: r.coordinated_steps,
            cleared: 0,
            missed: 0,
            undecided: 0,
            collision_events: r.collisions,
        };
        for c in &r.clearance {
            match c.within_bound(r.steps) {
                Some(true) => s.cleared += 1,
                Some(false) => s.missed += 1,
                None => s.undecided += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub scenario: String,
    pub method: Method,
    pub n: usize,
    pub episodes: Vec<EpisodeSummary>,
}

impl BatchResult {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn count(&self, o: Outcome) -> usize {
        self.episodes.iter().filter(|e| e.outcome == o).count()
    }

    /// Success fraction in [0, 1].
    pub fn success_rate(&self) -> f64 {
        if self.episodes.is_empty() {
            0.0
        } else {
            self.count(Outcome::Success) as f64 / self.episodes.len() as f64
        }
    }

    fn mean(&self, f: impl Fn(&EpisodeSummary) -> f64) -> f64 {
        if self.episodes.is_empty() {
            0.0
        } else {
            self.episodes.iter().map(f).sum::<f64>() / self.episodes.len() as f64
        }
    }

    pub fn mean_triggers(&self) -> f64 {
        self.mean(|e| e.triggers as f64)
    }

    /// Mean fraction of agent-steps spent coordinated.
    pub fn mean_duty_cycle(&self) -> f64 {
        let n = self.n as f64;
        self.mean(|e| if e.steps == 0 { 0.0 } else { e.coordinated_steps as f64 / (n * e.steps as f64) })
    }

    /// Mean episode length of successful episodes.
    pub fn mean_makespan(&self) -> Option<f64> {
        let s: Vec<f64> = self.episodes.iter().filter(|e| e.outcome == Outcome::Success).map(|e| e.steps as f64).collect();
        (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64)
    }
}

/// `count` consecutive seeds from `base`.
pub fn seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base + i).collect()
}

/// Runs one episode per seed in parallel; summaries are kept in seed order.
pub fn run_batch(
    scenario: &Scenario,
    n: usize,
    opts: &ExecOptions,
    seeds: &[u64],
    t_max: usize,
) -> Result<BatchResult, ExecError> {
    run_batch_with(scenario, n, opts, seeds, t_max, |_, _| {})
}

/// [`run_batch`] that also passes every finished episode to `visit`, e.g. to
/// write its event log. `visit` runs on worker threads in no fixed order.
pub fn run_batch_with<F>(
    scenario: &Scenario,
    n: usize,
    opts: &ExecOptions,
    seeds: &[u64],
    t_max: usize,
    visit: F,
) -> Result<BatchResult, ExecError>
where
    F: Fn(u64, &EpisodeResult) + Sync,
{
    let episodes = seeds
        .par_iter()
        .map(|&seed| {
            let r = run_episode(scenario, opts, seed, t_max)?;
            visit(seed, &r);
            Ok(EpisodeSummary::from_result(seed, &r))
        })
        .collect::<Result<Vec<_>, ExecError>>()?;
    Ok(BatchResult { scenario: scenario.name.clone(), method: opts.method, n, episodes })
}

/// Percentage with two decimals.
pub fn percent(successes: usize, total: usize) -> String {
    if total == 0 {
        return "-".into();
    }
    format!("{:.2}%", 100.0 * successes as f64 / total as f64)
}

/// Human-readable table (one row per method, one column per scenario and
/// agent count) and comma-separated rows with the full counts.
pub fn emit_table(results: &[BatchResult]) -> (String, String) {
    let mut cols: Vec<(String, usize)> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in results {
        if !cols.contains(&(r.scenario.clone(), r.n)) {
            cols.push((r.scenario.clone(), r.n));
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let headers: Vec<String> = cols.iter().map(|(s, n)| format!("{s}/{n}")).collect();
    let mut table = format!("{:<10}", "method");
    for h in &headers {
        write!(table, " | {h:>12}").unwrap();
    }
    table.push('\n');
    for m in &methods {
        write!(table, "{:<10}", m.as_str()).unwrap();
        for (s, n) in &cols {
            let cell = results
                .iter()
                .find(|r| r.method == *m && &r.scenario == s && r.n == *n)
                .map_or("-".to_string(), |r| percent(r.count(Outcome::Success), r.len()));
            write!(table, " | {cell:>12}").unwrap();
        }
        table.push('\n');
    }
    let mut csv = String::from(
        "method,scenario,n,episodes,success,timeout,collision,success_rate,mean_triggers,mean_duty_cycle,mean_makespan\n",
    );
    for r in results {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{:.4},{:.4},{:.6},{}",
            r.method.as_str(),
            r.scenario,
            r.n,
            r.len(),
            r.count(Outcome::Success),
            r.count(Outcome::Timeout),
            r.count(Outcome::Collision),
            r.success_rate(),
            r.mean_triggers(),
            r.mean_duty_cycle(),
            r.mean_makespan().map_or(String::new(), |m| format!("{m:.2}"))
        )
        .unwrap();
    }
    (table, csv)
}

/// Writes the trajectory (with interleaved events) of a recorded episode.
pub fn export_trajectories(result: &EpisodeResult, path: &Path) -> io::Result<()> {
    let tr = result
        .trajectory
        .as_ref()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "episode was run without trajectory recording"))?;
    std::fs::write(path, tr.to_text(&result.log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_are_valid_and_mirrored() {
        for n in [2, 4, 6, 8] {
            for s in [doorway(n), corridor(n)] {
                s.validate().unwrap();
                let half = n / 2;
                let key = |p: &Vec2| ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64);
                let sorted = |v: &[Vec2]| {
                    let mut k: Vec<_> = v.iter().map(key).collect();
                    k.sort_unstable();
                    k
                };
                // Left starts are right goals and vice versa.
                assert_eq!(sorted(&s.starts[..half]), sorted(&s.goals[half..]));
                assert_eq!(sorted(&s.starts[half..]), sorted(&s.goals[..half]));
                for (st, g) in s.starts.iter().zip(&s.goals) {
                    assert!((st.x - WORKSPACE_WIDTH / 2.0) * (g.x - WORKSPACE_WIDTH / 2.0) < 0.0);
                }
                // The leader of each side parks deepest.
                let deepest = s.goals[..half].iter().map(|g| g.x).fold(f64::MIN, f64::max);
                assert_eq!(s.goals[0].x, deepest);
            }
        }
    }

    #[test]
    fn corridor_has_two_free_lanes_at_half_meter() {
        let s = corridor(4);
        let g = crate::grid::Grid::from_map(&s.map, s.map.bounds.min, s.map.bounds, 0.5, 0.2);
        let c = g.world_to_cell(Vec2::new(5.0, 3.0)).unwrap();
        let free: usize = (0..g.height).filter(|&row| g.is_free(crate::grid::Cell::new(c.col, row))).count();
        assert_eq!(free, 2);
    }

    #[test]
    fn table_formatting() {
        let (t, csv) = emit_table(&[]);
        assert_eq!(t.lines().count(), 1);
        assert_eq!(csv.lines().count(), 1);
        assert_eq!(percent(100, 100), "100.00%");
        assert_eq!(percent(47, 100), "47.00%");
        let ep = |o| EpisodeSummary {
            seed: 0,
            outcome: o,
            steps: 10,
            triggers: 0,
            solves_ok: 0,
            solves_failed: 0,
            coordinated_steps: 0,
            cleared: 0,
            missed: 0,
            undecided: 0,
            collision_events: 0,
        };
        let r = BatchResult { scenario: "corridor".into(), method: Method::Hybrid, n: 4, episodes: vec![ep(Outcome::Success)] };
        let (t, csv) = emit_table(&[r]);
        assert!(t.contains("100.00%"), "{t}");
        assert!(csv.lines().nth(1).unwrap().starts_with("Hybrid,corridor,4,1,1,0,0"));
    }

    #[test]
    fn trivial_batch_succeeds() {
        let map = ObstacleMap::new(Rect::new(0.0, 0.0, 10.0, 6.0), vec![]);
        let s = Scenario::new("open", map, vec![Vec2::new(1.0, 1.0)], vec![Vec2::new(5.0, 4.0)]);
        for m in [Method::BaseOnly, Method::Hybrid] {
            let r = run_batch(&s, 1, &ExecOptions::new(m), &[1], 500).unwrap();
            assert_eq!(r.success_rate(), 1.0);
        }
    }
}
