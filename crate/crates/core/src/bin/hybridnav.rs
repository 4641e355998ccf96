use clap::{Args, Parser, Subcommand};
use hybridnav::bench::{self, emit_table, export_trajectories, run_batch_with, T_MAX};
use hybridnav::executive::{run_episode, EpisodeResult, ExecOptions, Method};
use hybridnav::mapf::{io as mapf_io, movingai, oracle, pnr_solve_with, verify_plan, MapfInstance, SolverOptions};
use hybridnav::scenario::Scenario;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(version, about = "Multi-agent navigation with deadlock-triggered local Push-and-Rotate")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one episode and print its outcome.
    Run(RunArgs),
    /// Run batches and print the success-rate table.
    Sweep(SweepArgs),
    /// Check the solver against exhaustive BFS, or check a plan file.
    Verify(VerifyArgs),
    /// Solve MAPF instances from map files with the standalone solver.
    SolverBench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML) or built-in name (`doorway`, `corridor`).
    #[arg(short, long, default_value = "corridor")]
    scenario: String,
    /// Agent count for built-in scenarios.
    #[arg(short, default_value_t = 6)]
    n: usize,
    #[arg(short, long, default_value = "hybrid")]
    method: Method,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = T_MAX)]
    t_max: usize,
    /// Keep the Hybrid pipeline but never fire the detector.
    #[arg(long)]
    no_detector: bool,
    /// Directory for the event log and, with --trajectory, the trajectory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trajectory: bool,
    /// Print the event log.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario files or built-in names.
    #[arg(short, long, value_delimiter = ',', default_value = "corridor,doorway")]
    scenario: Vec<String>,
    /// Agent counts for built-in scenarios.
    #[arg(short, value_delimiter = ',', default_value = "4,6,8")]
    n: Vec<usize>,
    #[arg(short, long, value_delimiter = ',', default_value = "baseonly,hybrid")]
    method: Vec<Method>,
    /// Episodes per cell (N).
    #[arg(short = 'N', long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 1)]
    seed_base: u64,
    #[arg(long, default_value_t = T_MAX)]
    t_max: usize,
    /// Writes table.txt, results.csv and one event log per episode.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write one trajectory file per episode (needs --out).
    #[arg(long)]
    trajectory: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest subgrid of the exhaustive 2-agent sweep.
    #[arg(long, default_value_t = 9)]
    max_size: usize,
    /// Sampled 3-agent instances on at most 12 cells.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Instance file to check a plan against (skips the sweep).
    #[arg(long, requires = "plan")]
    instance: Option<PathBuf>,
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// MovingAI `.map` file.
    #[arg(long, requires = "scen")]
    map: Option<PathBuf>,
    /// MovingAI `.scen` file.
    #[arg(long)]
    scen: Option<PathBuf>,
    /// Agent counts taken from the head of the scenario.
    #[arg(short, long, value_delimiter = ',', default_value = "2,4,8,16")]
    agents: Vec<usize>,
    /// Instance in the line format instead of a map.
    #[arg(long, conflicts_with = "map")]
    instance: Option<PathBuf>,
    /// Write the plan of the last solved instance here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

fn load_scenario(arg: &str, n: usize) -> Res<Scenario> {
    if matches!(arg, "doorway" | "corridor") && (n < 2 || n % 2 == 1) {
        return Err(format!("{arg} needs an even agent count of at least 2, got {n}").into());
    }
    if let Some(s) = bench::builtin(arg, n) {
        return Ok(s);
    }
    let text = fs::read_to_string(arg).map_err(|e| format!("{arg}: not a built-in scenario and not readable: {e}"))?;
    Ok(Scenario::from_toml(&text)?)
}

fn stem(s: &Scenario, method: Method, seed: u64) -> String {
    format!("{}_{}_{}_{seed}", s.name, s.n_agents(), method.as_str())
}

fn write_episode(dir: &Path, s: &Scenario, method: Method, seed: u64, r: &EpisodeResult) -> std::io::Result<()> {
    let name = stem(s, method, seed);
    fs::write(dir.join(format!("{name}.log")), r.log.to_text())?;
    if r.trajectory.is_some() {
        export_trajectories(r, &dir.join(format!("{name}.csv")))?;
    }
    Ok(())
}

fn run(a: RunArgs) -> Res<bool> {
    let sc = load_scenario(&a.scenario, a.n)?;
    let opts = ExecOptions {
        detector_enabled: !a.no_detector,
        record_trajectory: a.trajectory,
        ..ExecOptions::new(a.method)
    };
    let r = run_episode(&sc, &opts, a.seed, a.t_max)?;
    if a.verbose {
        print!("{}", r.log.to_text());
    }
    println!(
        "{} n={} {} seed={}: {} after {} steps; triggers {}, solves {} ok / {} failed, coordinated agent-steps {}",
        sc.name,
        sc.n_agents(),
        a.method.as_str(),
        a.seed,
        r.outcome.as_str(),
        r.steps,
        r.triggers,
        r.solves_ok,
        r.solves_failed,
        r.coordinated_steps
    );
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        write_episode(dir, &sc, a.method, a.seed, &r)?;
        println!("wrote {}", dir.join(stem(&sc, a.method, a.seed)).display());
    }
    Ok(true)
}

fn sweep(a: SweepArgs) -> Res<bool> {
    if a.trajectory && a.out.is_none() {
        return Err("--trajectory needs --out".into());
    }
    let log_dir = a.out.as_ref().map(|d| d.join("logs"));
    if let Some(d) = &log_dir {
        fs::create_dir_all(d)?;
    }
    let seeds = bench::seeds(a.seed_base, a.episodes);
    let mut results = Vec::new();
    for arg in &a.scenario {
        // A scenario file has a fixed agent count.
        let ns = if matches!(arg.as_str(), "doorway" | "corridor") { a.n.clone() } else { vec![0] };
        for &n in &ns {
            let sc = load_scenario(arg, n)?;
            for &m in &a.method {
                let opts = ExecOptions { record_trajectory: a.trajectory, ..ExecOptions::new(m) };
                let t = Instant::now();
                let failed = std::sync::Mutex::new(None);
                let r = run_batch_with(&sc, sc.n_agents(), &opts, &seeds, a.t_max, |seed, ep| {
                    if let Some(d) = &log_dir {
                        if let Err(e) = write_episode(d, &sc, m, seed, ep) {
                            failed.lock().unwrap().get_or_insert(e);
                        }
                    }
                })?;
                if let Some(e) = failed.into_inner().unwrap() {
                    return Err(e.into());
                }
                eprintln!("{}/{} {}: {} in {:.1}s", sc.name, sc.n_agents(), m.as_str(), bench::percent(r.count(hybridnav::executive::Outcome::Success), r.len()), t.elapsed().as_secs_f64());
                results.push(r);
            }
        }
    }
    let (table, csv) = emit_table(&results);
    print!("{table}\n{csv}");
    if let Some(d) = &a.out {
        fs::write(d.join("table.txt"), &table)?;
        fs::write(d.join("results.csv"), &csv)?;
    }
    Ok(true)
}

fn verify(a: VerifyArgs) -> Res<bool> {
    if let (Some(i), Some(p)) = (&a.instance, &a.plan) {
        let inst = mapf_io::parse_instance(&fs::read_to_string(i)?)?;
        let plan = mapf_io::parse_plan(&fs::read_to_string(p)?)?;
        return Ok(match verify_plan(&inst, &plan) {
            Ok(()) => {
                println!("plan valid: {} agents, horizon {}", plan.n_agents(), plan.horizon());
                true
            }
            Err(e) => {
                println!("plan invalid: {e}");
                false
            }
        });
    }
    let t = Instant::now();
    let two = oracle::exhaustive_two_agent(a.max_size);
    let three = oracle::sampled_three_agent(a.samples, 12, a.seed);
    let mut ok = true;
    for (what, r) in [("2-agent exhaustive", &two), ("3-agent sampled", &three)] {
        let s = &r.stats;
        let viol = s.potential_violations + s.finished_violations + s.blank_violations;
        println!(
            "{what}: {} instances, {} solvable, {} mismatches, {} invalid plans, {} invariant violations",
            r.instances,
            r.solvable,
            r.mismatches.len(),
            r.invalid_plans.len(),
            viol
        );
        for m in r.mismatches.iter().chain(&r.invalid_plans).take(5) {
            println!("  {m}");
        }
        ok &= r.mismatches.is_empty() && r.invalid_plans.is_empty() && viol == 0;
    }
    println!("{} in {:.1}s", if ok { "ok" } else { "FAILED" }, t.elapsed().as_secs_f64());
    Ok(ok)
}

fn solve_and_report(label: &str, inst: &MapfInstance) -> Option<hybridnav::mapf::JointPlan> {
    let opts = SolverOptions { check_invariants: false, ..Default::default() };
    let t = Instant::now();
    let res = pnr_solve_with(inst, &opts);
    let ms = t.elapsed().as_secs_f64() * 1e3;
    match res {
        Ok((plan, st)) => {
            let valid = verify_plan(inst, &plan).is_ok();
            println!(
                "{label}: solved, {} primitives ({} pushes, {} rotates, {} swaps), {} moves, horizon {}, {ms:.1} ms, valid {valid}",
                st.primitives,
                st.pushes,
                st.rotates,
                st.swaps,
                plan.move_count(),
                plan.horizon()
            );
            Some(plan)
        }
        Err(e) => {
            println!("{label}: {e} ({ms:.1} ms)");
            None
        }
    }
}

fn solver_bench(a: BenchArgs) -> Res<bool> {
    let mut last = None;
    if let Some(path) = &a.instance {
        let inst = mapf_io::parse_instance(&fs::read_to_string(path)?)?;
        last = solve_and_report(&path.display().to_string(), &inst);
    } else if let (Some(map), Some(scen)) = (&a.map, &a.scen) {
        let grid = movingai::parse_map(&fs::read_to_string(map)?)?;
        let entries = movingai::parse_scen(&fs::read_to_string(scen)?)?;
        for &k in &a.agents {
            let (_, inst) = movingai::scen_instance(&grid, &entries, k)?;
            last = solve_and_report(&format!("k={k}"), &inst).or(last);
        }
    } else {
        return Err("give --instance or --map with --scen".into());
    }
    if let (Some(out), Some(plan)) = (&a.plan_out, &last) {
        fs::write(out, mapf_io::write_plan(plan))?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let res = match Cli::parse().cmd {
        Cmd::Run(a) => run(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Verify(a) => verify(a),
        Cmd::SolverBench(a) => solver_bench(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
