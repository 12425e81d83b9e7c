use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use deladas_core::compiler::{self, SpecializedCsp};
use deladas_core::config::{self, PickerPolicy, PolicyKind, Weights};
use deladas_core::csp::{Capture, EnumerationResult, SolveLimits};
use deladas_core::experiments;
use deladas_core::lang::{self, Dsd};
use deladas_core::sim::{self, Realm, RealmConfig};

/// Desired-state descriptions: check, solve, pick, validate and simulate.
#[derive(Parser)]
#[command(name = "deladas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and resolve a description, reporting diagnostics.
    Check {
        #[command(flatten)]
        dsd: DsdArgs,
    },
    /// Count the configurations of a description.
    Count {
        #[command(flatten)]
        dsd: DsdArgs,
        #[command(flatten)]
        limits: LimitArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        json: bool,
    },
    /// Write configurations as CDD XML.
    Solve {
        #[command(flatten)]
        dsd: DsdArgs,
        #[command(flatten)]
        limits: LimitArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Directory for `<name>-NNNN.cdd` files; standard output otherwise.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Choose one configuration, optionally close to a current one.
    Pick {
        #[command(flatten)]
        dsd: DsdArgs,
        #[command(flatten)]
        limits: LimitArgs,
        /// The configuration currently deployed.
        #[arg(long)]
        current: Option<PathBuf>,
        #[arg(long, default_value = "min-delta")]
        policy: PolicyKind,
        /// Costs of deploy, undeploy and rebind actions.
        #[arg(long, default_value = "1,1,1")]
        weights: Weights,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a configuration against its description.
    Validate {
        /// CDD XML file.
        cdd: PathBuf,
        #[arg(long = "dsd")]
        dsd: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Deploy a description in the simulator and replay a fault script.
    Simulate {
        #[command(flatten)]
        dsd: DsdArgs,
        /// Fault script: `at <t> host-crash <host>` and friends.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Logical time to run until.
        #[arg(long, default_value_t = 100)]
        until: u64,
        /// Logical time between realm ticks.
        #[arg(long, default_value_t = 10)]
        tick: u64,
        /// Candidates considered when re-solving.
        #[arg(long, default_value_t = 1000)]
        limit: u64,
        #[arg(long, default_value = "1,1,1")]
        weights: Weights,
        /// Event log file; standard output otherwise.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Count every bundled experiment (or every description in a directory).
    Bench {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
        /// Comma-separated experiment names to run, e.g. `exp1,exp7`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

#[derive(Args)]
struct DsdArgs {
    /// Description file (`.deladas`).
    path: PathBuf,
    /// Override the maximum number of instances of a type per host.
    #[arg(long)]
    max_count: Option<u32>,
}

#[derive(Args, Clone)]
struct LimitArgs {
    /// Stop after this many solutions.
    #[arg(long)]
    limit: Option<u64>,
    /// Stop after this many seconds.
    #[arg(long, value_parser = parse_seconds)]
    time_budget: Option<Duration>,
}

#[derive(Args)]
struct ModelArgs {
    /// Explain how each constraint was compiled (to standard error).
    #[arg(long)]
    explain: bool,
    /// Write the generated model in text form to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

fn parse_seconds(s: &str) -> Result<Duration, String> {
    let secs: f64 = s.parse().map_err(|_| format!("`{s}` is not a number of seconds"))?;
    Duration::try_from_secs_f64(secs).map_err(|_| format!("`{s}` is not a non-negative duration"))
}

/// Outcome-specific exit codes beyond success.
const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_LIMIT: u8 = 3;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_dsd(path: &Path, max_count: Option<u32>) -> Result<Dsd> {
    let src = read(path)?;
    let dsd = lang::load(&src, &lang::name_from_path(path)).map_err(|d| anyhow::anyhow!("{}:\n{d}", path.display()))?;
    Ok(match max_count {
        Some(k) if k == 0 => bail!("--max-count must be positive"),
        Some(k) => dsd.with_max_instances_per_host(k),
        None => dsd,
    })
}

fn compile(dsd: &Dsd, model: Option<&ModelArgs>) -> Result<SpecializedCsp> {
    let csp = compiler::compile(dsd).map_err(|e| anyhow::anyhow!("{e}"))?;
    for w in &csp.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(m) = model {
        if m.explain {
            eprint!("{}", csp.explain());
        }
        if let Some(p) = &m.dump {
            fs::write(p, csp.model.dump()).with_context(|| format!("cannot write {}", p.display()))?;
        }
    }
    Ok(csp)
}

fn solve_limits(limits: &LimitArgs, default_limit: Option<u64>) -> SolveLimits {
    SolveLimits {
        max_solutions: limits.limit.or(default_limit),
        time_budget: limits.time_budget,
        capture: Capture::None,
    }
}

/// Exit code for a finished enumeration: infeasible if the space was
/// exhausted without a solution, limit-hit if it was not.
fn solution_code(result: &EnumerationResult) -> u8 {
    match (result.solution_count, result.exhausted) {
        (0, true) => EXIT_INFEASIBLE,
        (0, false) => EXIT_LIMIT,
        _ => 0,
    }
}

fn millis(d: Option<Duration>) -> String {
    d.map_or("-".to_string(), |d| format!("{:.3}", d.as_secs_f64() * 1e3))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check { dsd } => {
            let d = load_dsd(&dsd.path, dsd.max_count)?;
            let csp = compile(&d, None)?;
            println!(
                "ok: {} interface(s), {} component type(s), {} host(s), {} constraint conjunct(s), {} runtime assertion(s)",
                d.interfaces.len(),
                d.component_types.len(),
                d.hosts.len(),
                d.conjuncts().len(),
                csp.runtime_assertions.len()
            );
            Ok(0)
        }
        Command::Count {
            dsd,
            limits,
            model,
            json,
        } => {
            let d = load_dsd(&dsd.path, dsd.max_count)?;
            let csp = compile(&d, Some(&model))?;
            let result = csp.model.enumerate(&solve_limits(&limits, None), |_| ControlFlow::Continue(()));
            if json {
                let v = serde_json::json!({
                    "name": d.name,
                    "variables": csp.num_vars(),
                    "solutions": result.solution_count,
                    "exhausted": result.exhausted,
                    "first_solution_ms": result.first_solution_latency.map(|l| l.as_secs_f64() * 1e3),
                    "elapsed_ms": result.elapsed.as_secs_f64() * 1e3,
                });
                println!("{v}");
            } else {
                println!(
                    "variables={} solutions={} exhausted={}",
                    csp.num_vars(),
                    result.solution_count,
                    result.exhausted
                );
                println!(
                    "first-solution-ms={} elapsed-ms={}",
                    millis(result.first_solution_latency),
                    millis(Some(result.elapsed))
                );
            }
            Ok(solution_code(&result))
        }
        Command::Solve {
            dsd,
            limits,
            model,
            out,
        } => {
            let d = load_dsd(&dsd.path, dsd.max_count)?;
            let csp = compile(&d, Some(&model))?;
            if let Some(dir) = &out {
                fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
            let mut written = 0u64;
            let mut failure = None;
            let result = csp.model.enumerate(&solve_limits(&limits, Some(1)), |a| {
                written += 1;
                let xml = config::serialize_cdd(&csp.decode(a));
                let outcome = match &out {
                    Some(dir) => {
                        let p = dir.join(format!("{}-{written:04}.cdd", d.name));
                        fs::write(&p, xml).with_context(|| format!("cannot write {}", p.display()))
                    }
                    None => {
                        print!("{xml}");
                        Ok(())
                    }
                };
                match outcome {
                    Ok(()) => ControlFlow::Continue(()),
                    Err(e) => {
                        failure = Some(e);
                        ControlFlow::Break(())
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            eprintln!(
                "{} configuration(s), exhausted={}",
                result.solution_count, result.exhausted
            );
            Ok(solution_code(&result))
        }
        Command::Pick {
            dsd,
            limits,
            current,
            policy,
            weights,
            out,
        } => {
            let d = load_dsd(&dsd.path, dsd.max_count)?;
            let csp = compile(&d, None)?;
            let current = match current {
                Some(p) => Some(config::parse_cdd(&read(&p)?).with_context(|| format!("in {}", p.display()))?),
                None => None,
            };
            let enum_limits = solve_limits(&limits, Some(1000)).with_capture(Capture::All);
            let result = csp.model.enumerate(&enum_limits, |_| ControlFlow::Continue(()));
            let candidates = result.captured.iter().map(|a| csp.decode(a));
            let policy = PickerPolicy {
                kind: policy,
                weights,
                cap: None,
                time_budget: None,
            };
            match config::pick(candidates, current.as_ref(), &d, &policy) {
                Ok(chosen) => {
                    write_or_print(out.as_deref(), &config::serialize_cdd(&chosen.cdd))?;
                    eprintln!(
                        "candidate {} of {} (exhausted={})",
                        chosen.position + 1,
                        result.solution_count,
                        result.exhausted
                    );
                    eprint!("{}", chosen.delta);
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(solution_code(&result))
                }
            }
        }
        Command::Validate { cdd, dsd, json } => {
            let d = load_dsd(&dsd, None)?;
            let c = config::parse_cdd(&read(&cdd)?).with_context(|| format!("in {}", cdd.display()))?;
            let report = config::validate(&c, &d)?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{report}");
            }
            Ok(if report.is_compliant() { 0 } else { EXIT_DIAGNOSTICS })
        }
        Command::Simulate {
            dsd,
            script,
            seed,
            until,
            tick,
            limit,
            weights,
            out,
        } => {
            let d = load_dsd(&dsd.path, dsd.max_count)?;
            compile(&d, None)?;
            let faults = match script {
                Some(p) => sim::parse_script(&read(&p)?).with_context(|| format!("in {}", p.display()))?,
                None => Vec::new(),
            };
            let config = RealmConfig {
                seed,
                tick_period: tick.max(1),
                max_candidates: limit,
                weights,
                ..Default::default()
            };
            let mut realm = Realm::new(d, config);
            realm.load_script(&faults)?;
            let reports = realm.run_until(until);
            write_or_print(out.as_deref(), &realm.log_text())?;
            let last = reports.last();
            let unresolved = last.is_some_and(|r| r.unresolvable);
            eprintln!(
                "{} tick(s), {} instance(s) deployed, last tick {}",
                reports.len(),
                realm.live_cdd().instances.len(),
                match last {
                    Some(r) if r.unresolvable => "unresolvable",
                    Some(r) if r.violations.is_empty() && r.delta.is_none() => "compliant",
                    Some(_) => "repaired",
                    None => "-",
                }
            );
            Ok(if unresolved { EXIT_INFEASIBLE } else { 0 })
        }
        Command::Bench { dir, limits, only } => bench(dir.as_deref(), &limits, &only),
    }
}

fn bench(dir: Option<&Path>, limits: &LimitArgs, only: &[String]) -> Result<u8> {
    let mut inputs: Vec<(String, String)> = match dir {
        Some(dir) => {
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)
                .with_context(|| format!("cannot list {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "deladas"))
                .collect();
            paths.sort_by_key(|p| {
                let name = lang::name_from_path(p);
                let digits: String = name.chars().filter(char::is_ascii_digit).collect();
                (digits.parse::<u64>().unwrap_or(u64::MAX), name)
            });
            paths
                .iter()
                .map(|p| Ok((lang::name_from_path(p), read(p)?)))
                .collect::<Result<_>>()?
        }
        None => experiments::EXPERIMENTS
            .iter()
            .map(|(n, s)| (n.to_string(), s.to_string()))
            .collect(),
    };
    if !only.is_empty() {
        inputs.retain(|(n, _)| only.contains(n));
    }
    let limits = SolveLimits {
        max_solutions: limits.limit,
        time_budget: Some(limits.time_budget.unwrap_or(Duration::from_secs(10))),
        capture: Capture::None,
    };
    println!("name variables solutions exhausted first-ms thousand-ms elapsed-ms");
    for (name, src) in inputs {
        let d = lang::load(&src, &name).map_err(|e| anyhow::anyhow!("{name}:\n{e}"))?;
        let csp = compile(&d, None)?;
        let start = Instant::now();
        let mut seen = 0u64;
        let mut thousand = None;
        let result = csp.model.enumerate(&limits, |_| {
            seen += 1;
            if seen == 1000 {
                thousand = Some(start.elapsed());
            }
            ControlFlow::Continue(())
        });
        println!(
            "{name} {} {} {} {} {} {}",
            csp.num_vars(),
            result.solution_count,
            result.exhausted,
            millis(result.first_solution_latency),
            millis(thousand),
            millis(Some(result.elapsed))
        );
    }
    Ok(0)
}
