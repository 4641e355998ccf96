//! Push-and-Rotate on an abstract graph.
//!
//! The main phase routes one active agent at a time along its shortest path
//! avoiding finished agents; every primitive (step, push, rotate, swap) ends
//! with the active agent one vertex closer. If that phase gets stuck, the
//! solver continues from the reached configuration: it first fills the
//! target vertices without regard to labels, then exchanges agents into
//! place, and on components that are simple cycles it rotates.

use super::config::{check_invariants, potential, Agent, Configuration, InvariantKind, Move, Potential};
use super::graph::{Graph, Vertex};
use super::instance::MapfInstance;
use super::primitives::{
    apply_exchange, exchange_moves, find_blank_path, find_rotate_cycle, primitive_push, primitive_rotate,
    primitive_swap, Step, EXCHANGE_BUDGET,
};
use super::schedule::{compact, JointPlan};
use super::MapfError;
use std::collections::{HashMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    Step,
    Push,
    Rotate,
    Swap,
}

impl PrimitiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveKind::Step => "step",
            PrimitiveKind::Push => "push",
            PrimitiveKind::Rotate => "rotate",
            PrimitiveKind::Swap => "swap",
        }
    }
}

/// One primitive application: its kind, the active agent if any, and the
/// range of unit moves in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveRecord {
    pub kind: PrimitiveKind,
    pub agent: Option<Agent>,
    pub moves: std::ops::Range<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub primitives: usize,
    pub steps: usize,
    pub pushes: usize,
    pub rotates: usize,
    pub swaps: usize,
    pub moves: usize,
    /// Primitives with an active agent whose potential was checked.
    pub potential_checks: usize,
    pub potential_violations: usize,
    pub finished_violations: usize,
    pub blank_violations: usize,
    /// Active agents that, when selected, had no path avoiding finished
    /// agents; the main phase then hands over to the completion phase.
    pub cutoff_selections: usize,
    /// The main phase got stuck and the completion phase ran.
    pub completion_phase: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverOptions {
    /// State budget of each exchange search.
    pub exchange_budget: usize,
    /// Evaluate invariants and the potential around every primitive.
    pub check_invariants: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            exchange_budget: EXCHANGE_BUDGET,
            check_invariants: cfg!(debug_assertions),
        }
    }
}

/// Sequential solution before scheduling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub moves: Vec<Move>,
    pub records: Vec<PrimitiveRecord>,
    pub stats: SolveStats,
}

struct Solver<'a> {
    g: &'a Graph,
    targets: &'a [Vertex],
    labels: Vec<usize>,
    cfg: Configuration,
    trace: Vec<Move>,
    records: Vec<PrimitiveRecord>,
    stats: SolveStats,
    opts: &'a SolverOptions,
}

enum Stuck {
    Stuck,
}

impl<'a> Solver<'a> {
    fn record(&mut self, kind: PrimitiveKind, agent: Option<Agent>, start: usize) {
        self.records.push(PrimitiveRecord { kind, agent, moves: start..self.trace.len() });
        self.stats.primitives += 1;
        match kind {
            PrimitiveKind::Step => self.stats.steps += 1,
            PrimitiveKind::Push => self.stats.pushes += 1,
            PrimitiveKind::Rotate => self.stats.rotates += 1,
            PrimitiveKind::Swap => self.stats.swaps += 1,
        }
    }

    fn phi(&self, r: Agent) -> Option<Potential> {
        self.opts.check_invariants.then(|| potential(self.g, &self.cfg, self.targets, r))
    }

    fn audit(&mut self, r: Option<Agent>, before: Option<Potential>) {
        if !self.opts.check_invariants {
            return;
        }
        match check_invariants(&self.cfg, self.targets, &self.labels) {
            Ok(()) => {}
            Err(InvariantKind::FinishedFixed) => self.stats.finished_violations += 1,
            Err(InvariantKind::TwoBlanks) => self.stats.blank_violations += 1,
        }
        if let (Some(r), Some(b)) = (r, before) {
            self.stats.potential_checks += 1;
            let after = potential(self.g, &self.cfg, self.targets, r);
            if after >= b {
                self.stats.potential_violations += 1;
            }
        }
    }

    fn audit_selection(&mut self, r: Agent) {
        let fin = self.cfg.finished_mask();
        if self.g.shortest_path(self.cfg.position(r), self.targets[r], &fin).is_none() {
            self.stats.cutoff_selections += 1;
        }
    }

    fn dist_to_target(&self, a: Agent, fin: &[bool]) -> usize {
        self.g.distances(self.cfg.position(a), fin)[self.targets[a]]
    }

    /// One primitive moving `r` one vertex along its shortest path.
    fn advance(&mut self, r: Agent) -> Result<(), Stuck> {
        let g = self.g;
        let fin = self.cfg.finished_mask();
        let pos = self.cfg.position(r);
        let path = g.shortest_path(pos, self.targets[r], &fin).ok_or(Stuck::Stuck)?;
        let u = path[1];
        let before = self.phi(r);
        let start = self.trace.len();
        if self.cfg.is_blank(u) {
            self.trace.push(self.cfg.apply(g, pos, u).expect("step into blank"));
            self.record(PrimitiveKind::Step, Some(r), start);
            self.audit(Some(r), before);
            return Ok(());
        }
        let mut avoid = fin.clone();
        avoid[pos] = true;
        // Push the blocker off the remaining route if possible.
        let mut off_route = avoid.clone();
        for &v in &path[2..] {
            off_route[v] = true;
        }
        let push = find_blank_path(g, &self.cfg, u, &off_route);
        let kind = if let Some(q) = push {
            primitive_push(g, &mut self.cfg, &q, &mut self.trace).expect("valid push path");
            self.trace.push(self.cfg.apply(g, pos, u).expect("step after push"));
            PrimitiveKind::Push
        } else if let Some(z) = find_rotate_cycle(g, &self.cfg, pos, u, &fin) {
            primitive_rotate(g, &mut self.cfg, &z, &mut self.trace).expect("valid rotation");
            PrimitiveKind::Rotate
        } else if let Some(q) = find_blank_path(g, &self.cfg, u, &avoid) {
            primitive_push(g, &mut self.cfg, &q, &mut self.trace).expect("valid push path");
            self.trace.push(self.cfg.apply(g, pos, u).expect("step after push"));
            PrimitiveKind::Push
        } else {
            let b = self.cfg.occupant(u).expect("blocker present");
            match primitive_swap(g, &mut self.cfg, r, b, self.opts.exchange_budget, &mut self.trace) {
                Ok(()) => PrimitiveKind::Swap,
                Err(_) => return Err(Stuck::Stuck),
            }
        };
        self.record(kind, Some(r), start);
        self.audit(Some(r), before);
        Ok(())
    }

    fn main_phase(&mut self) -> Result<(), Stuck> {
        loop {
            let fin = self.cfg.finished_mask();
            let next = (0..self.cfg.n_agents())
                .filter(|&a| !self.cfg.is_finished(a))
                .min_by_key(|&a| (self.dist_to_target(a, &fin), a));
            let Some(r) = next else { return Ok(()) };
            self.audit_selection(r);
            while self.cfg.position(r) != self.targets[r] {
                self.advance(r)?;
            }
            self.cfg.set_finished(r, true);
        }
    }

    /// Fills every target vertex of `comp` with some agent.
    /// Vertices are retired as leaves of a spanning tree, so the remaining
    /// region stays connected.
    fn place_unlabeled(&mut self, comp: &[Vertex]) -> Result<(), MapfError> {
        let g = self.g;
        let n = g.len();
        let mut is_target = vec![false; n];
        for &t in self.targets {
            is_target[t] = true;
        }
        let mut in_rem = vec![false; n];
        for &v in comp {
            in_rem[v] = true;
        }
        // BFS spanning tree from the smallest vertex.
        let root = comp[0];
        let mut tree_adj: Vec<Vec<Vertex>> = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    tree_adj[u].push(v);
                    tree_adj[v].push(u);
                    q.push_back(v);
                }
            }
        }
        let mut remaining = comp.len();
        while remaining > 0 {
            let leaf = comp
                .iter()
                .copied()
                .find(|&v| in_rem[v] && tree_adj[v].iter().filter(|&&u| in_rem[u]).count() <= 1)
                .expect("a finite tree has a leaf");
            let blocked: Vec<bool> = in_rem.iter().map(|r| !r).collect();
            if is_target[leaf] {
                if self.cfg.is_blank(leaf) {
                    let cfg = &self.cfg;
                    let path = g
                        .bfs_path(leaf, &blocked, |v| !cfg.is_blank(v))
                        .ok_or(MapfError::Unsolvable)?;
                    let start = self.trace.len();
                    let agent = self.cfg.occupant(*path.last().unwrap());
                    for w in path.windows(2).rev() {
                        self.trace.push(self.cfg.apply(g, w[1], w[0])?);
                    }
                    self.record(PrimitiveKind::Step, agent, start);
                    self.audit(None, None);
                }
            } else if !self.cfg.is_blank(leaf) {
                let cfg = &self.cfg;
                let path = g.bfs_path(leaf, &blocked, |v| cfg.is_blank(v)).ok_or(MapfError::Unsolvable)?;
                let start = self.trace.len();
                let agent = self.cfg.occupant(leaf);
                primitive_push(g, &mut self.cfg, &path, &mut self.trace)?;
                self.record(PrimitiveKind::Push, agent, start);
                self.audit(None, None);
            }
            in_rem[leaf] = false;
            remaining -= 1;
        }
        Ok(())
    }

    /// Rotates a cycle component until every agent on it sits on its target.
    fn solve_cycle(&mut self, comp: &[Vertex]) -> Result<(), MapfError> {
        let g = self.g;
        let order = g.cycle_order(comp);
        let l = order.len();
        let idx: HashMap<Vertex, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let agents: Vec<Agent> = (0..self.cfg.n_agents()).filter(|&a| idx.contains_key(&self.cfg.position(a))).collect();
        let shift = (0..l).find(|&s| {
            agents
                .iter()
                .all(|&a| order[(idx[&self.cfg.position(a)] + s) % l] == self.targets[a])
        });
        let shift = shift.ok_or(MapfError::Unsolvable)?;
        for _ in 0..shift {
            let start = self.trace.len();
            primitive_rotate(g, &mut self.cfg, &order, &mut self.trace)?;
            self.record(PrimitiveKind::Rotate, None, start);
            self.audit(None, None);
        }
        Ok(())
    }

    /// Exchanges agents into place on a component whose occupied set equals
    /// its target set. Exchanges between two occupied vertices only depend
    /// on the (fixed) occupied set, so they are cached and composed.
    fn exchange_phase(&mut self, comp: &[Vertex]) -> Result<(), MapfError> {
        let g = self.g;
        let occ = self.cfg.occupied_mask();
        let occupied: Vec<Vertex> = comp.iter().copied().filter(|&v| occ[v]).collect();
        let mut cache: HashMap<(Vertex, Vertex), Option<Vec<Step>>> = HashMap::new();
        let budget = self.opts.exchange_budget;
        let mut lookup = |p: Vertex, q: Vertex| -> Option<Vec<Step>> {
            let key = (p.min(q), p.max(q));
            cache
                .entry(key)
                .or_insert_with(|| exchange_moves(g, &occ, key.0, key.1, budget))
                .clone()
        };
        let mut targets_in: Vec<Vertex> = occupied.clone();
        targets_in.sort_unstable();
        for t in targets_in {
            let a = (0..self.cfg.n_agents()).find(|&a| self.targets[a] == t).expect("occupied set equals targets");
            let p = self.cfg.position(a);
            if p == t {
                self.cfg.set_finished(a, true);
                continue;
            }
            // Shortest chain of exchangeable vertices from p to t.
            let mut parent: HashMap<Vertex, Vertex> = HashMap::from([(p, p)]);
            let mut q = VecDeque::from([p]);
            let mut found = false;
            'bfs: while let Some(u) = q.pop_front() {
                let mut cand: Vec<Vertex> = occupied.iter().copied().filter(|v| !parent.contains_key(v)).collect();
                if let Some(i) = cand.iter().position(|&v| v == t) {
                    cand.swap(0, i);
                }
                for v in cand {
                    if lookup(u, v).is_some() {
                        parent.insert(v, u);
                        if v == t {
                            found = true;
                            break 'bfs;
                        }
                        q.push_back(v);
                    }
                }
            }
            if !found {
                return Err(MapfError::Unsolvable);
            }
            let mut chain = vec![t];
            while *chain.last().unwrap() != p {
                chain.push(parent[chain.last().unwrap()]);
            }
            chain.reverse();
            let before = self.phi(a);
            let start = self.trace.len();
            let mut seq: Vec<(Vertex, Vertex)> = Vec::new();
            transposition(&chain, &mut seq);
            for (x, y) in seq {
                let steps = lookup(x, y).expect("cached exchange");
                apply_exchange(g, &mut self.cfg, &steps, &mut self.trace)?;
            }
            debug_assert_eq!(self.cfg.position(a), t);
            self.record(PrimitiveKind::Swap, Some(a), start);
            self.audit(Some(a), before);
            self.cfg.set_finished(a, true);
        }
        Ok(())
    }

    fn completion_phase(&mut self) -> Result<(), MapfError> {
        self.stats.completion_phase = true;
        self.cfg.clear_finished();
        let n = self.g.len();
        let mut done = vec![false; n];
        let occ_start = self.cfg.occupied_mask();
        for v in 0..n {
            if done[v] || !occ_start[v] {
                continue;
            }
            let comp = self.g.component_of(v);
            for &u in &comp {
                done[u] = true;
            }
            self.place_unlabeled(&comp)?;
            if self.g.is_cycle(&comp) {
                self.solve_cycle(&comp)?;
                for a in 0..self.cfg.n_agents() {
                    if comp.binary_search(&self.cfg.position(a)).is_ok() {
                        self.cfg.set_finished(a, true);
                    }
                }
            } else {
                self.exchange_phase(&comp)?;
            }
        }
        Ok(())
    }
}

/// Transposition of the contents of `chain[0]` and `chain[last]` written as
/// exchanges of consecutive chain vertices.
fn transposition(chain: &[Vertex], out: &mut Vec<(Vertex, Vertex)>) {
    match chain.len() {
        0 | 1 => {}
        2 => out.push((chain[0], chain[1])),
        _ => {
            out.push((chain[0], chain[1]));
            transposition(&chain[1..], out);
            out.push((chain[0], chain[1]));
        }
    }
}

/// Checks the instance and the two-blank precondition.
pub fn precheck(inst: &MapfInstance) -> Result<Vec<usize>, MapfError> {
    inst.validate()?;
    let labels = inst.graph.components();
    for a in 0..inst.n_agents() {
        if labels[inst.starts[a]] != labels[inst.targets[a]] {
            return Err(MapfError::Unsolvable);
        }
    }
    let n_comp = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; n_comp];
    for &l in &labels {
        size[l] += 1;
    }
    let mut agents = vec![0usize; n_comp];
    for &s in &inst.starts {
        agents[labels[s]] += 1;
    }
    for c in 0..n_comp {
        if agents[c] > 0 && size[c] - agents[c] < 2 {
            return Err(MapfError::PreconditionBlanks { component: c });
        }
    }
    Ok(labels)
}

/// Sequential Push-and-Rotate solution with statistics.
pub fn solve_sequential(inst: &MapfInstance, opts: &SolverOptions) -> Result<Solution, MapfError> {
    let labels = precheck(inst)?;
    let mut s = Solver {
        g: &inst.graph,
        targets: &inst.targets,
        labels,
        cfg: Configuration::new(inst.graph.len(), &inst.starts)?,
        trace: Vec::new(),
        records: Vec::new(),
        stats: SolveStats::default(),
        opts,
    };
    if s.main_phase().is_err() {
        s.completion_phase()?;
    }
    debug_assert!((0..inst.n_agents()).all(|a| s.cfg.position(a) == inst.targets[a]));
    s.stats.moves = s.trace.len();
    Ok(Solution { moves: s.trace, records: s.records, stats: s.stats })
}

/// Solves and schedules into a joint plan.
pub fn pnr_solve_with(inst: &MapfInstance, opts: &SolverOptions) -> Result<(JointPlan, SolveStats), MapfError> {
    let sol = solve_sequential(inst, opts)?;
    let paths = compact(&inst.starts, &sol.moves);
    Ok((JointPlan { paths, records: sol.records }, sol.stats))
}

/// Solves with default options.
pub fn pnr_solve(inst: &MapfInstance) -> Result<JointPlan, MapfError> {
    pnr_solve_with(inst, &SolverOptions::default()).map(|(p, _)| p)
}
