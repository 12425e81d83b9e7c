//! Acceptance criteria 1–8. Each test prints exactly one
//! `criterion N: PASS|FAIL ...` line, also when it fails. The full
//! enumeration of experiment 6 is `#[ignore]`d; run it with
//! `cargo test --test acceptance -- --ignored`.

mod support;

use std::collections::BTreeSet;
use std::io::Write;
use std::ops::ControlFlow;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::{Duration, Instant};

use deladas_core::compiler;
use deladas_core::config::{self, validate, Cdd, Instance, Weights};
use deladas_core::csp::{Capture, Model, Relation, SolveLimits};
use deladas_core::experiments;
use deladas_core::lang::Dsd;
use deladas_core::sim::{parse_script, CallStatus, Fault, Realm, RealmConfig, Request, TimedFault};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{brute_force, check_lifecycle, client_server_oracle, position};

/// Runs one criterion and reports it on the real standard output, which
/// the test harness does not capture.
fn criterion(label: &str, body: impl FnOnce() -> Result<String, String> + UnwindSafe) {
    let outcome = catch_unwind(body);
    let line = match &outcome {
        Ok(Ok(detail)) => format!("criterion {label}: PASS {detail}"),
        Ok(Err(detail)) => format!("criterion {label}: FAIL {detail}"),
        Err(_) => format!("criterion {label}: FAIL (panicked)"),
    };
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    match outcome {
        Ok(Ok(_)) => {}
        Ok(Err(detail)) => panic!("criterion {label} failed: {detail}"),
        Err(p) => resume_unwind(p),
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exp(n: usize) -> Dsd {
    experiments::experiment(n).unwrap()
}

fn timed_count(dsd: &Dsd) -> (u64, Duration) {
    let start = Instant::now();
    let n = compiler::compile(dsd).unwrap().model.count_exact();
    (n, start.elapsed())
}

/// Variables predicted from the description alone: one count indicator per
/// (host, type, count) plus one connection variable per (client slot, port,
/// compatible server slot).
fn variable_formula(dsd: &Dsd) -> usize {
    let hosts = dsd.hosts.len();
    let c = dsd.max_instances_per_host as usize;
    let slots = hosts * c;
    let placement = hosts * dsd.component_types.len() * c;
    let connections: usize = dsd
        .component_types
        .iter()
        .flat_map(|t| &t.requires)
        .map(|port| {
            let providers = dsd
                .component_types
                .iter()
                .filter(|s| s.provides.contains(&port.interface))
                .count();
            slots * providers * slots
        })
        .sum();
    placement + connections
}

#[test]
fn criterion_1_solution_counts() {
    criterion("1 (solution counts)", || {
        let mut detail = Vec::new();
        for (n, expected) in [(1, 2), (2, 4), (3, 16), (4, 256), (5, 65_536), (7, 104)] {
            let (count, took) = timed_count(&exp(n));
            ensure(count == expected, || format!("experiment {n}: {count} != {expected}"))?;
            ensure(took < Duration::from_secs(5), || format!("experiment {n} took {took:?}"))?;
            detail.push(format!("exp{n}={count}"));
        }
        let (count, took) = timed_count(&exp(11));
        ensure(count == 5_634_300, || format!("experiment 11: {count} != 5634300"))?;
        ensure(took < Duration::from_secs(600), || format!("experiment 11 took {took:?}"))?;
        detail.push(format!("exp11={count} in {:.1}s", took.as_secs_f64()));
        Ok(detail.join(" "))
    });
}

fn two_per_host_labels() -> Vec<(u64, u64)> {
    (0..3).flat_map(|c| (0..3).map(move |s| (c, s))).collect()
}

#[test]
fn criterion_2_closed_form_oracle() {
    criterion("2 (closed-form oracle)", || {
        let start = Instant::now();
        let oracle = client_server_oracle(4, &two_per_host_labels());
        let took = start.elapsed();
        ensure(oracle == 123_763_041, || format!("oracle gives {oracle}"))?;
        ensure(took < Duration::from_secs(1), || format!("oracle took {took:?}"))?;
        // Cross-check the oracle against enumeration on a 2-host variant.
        let src = experiments::EXPERIMENTS[5]
            .1
            .replace("host h3 (speed = 1000)\n", "")
            .replace("host h4 (speed = 1000)\n", "");
        let small = deladas_core::lang::load(&src, "exp6-small").unwrap();
        let (count, _) = timed_count(&small);
        let expected = client_server_oracle(2, &two_per_host_labels());
        ensure(count == expected, || format!("2-host variant: {count} != {expected}"))?;
        Ok(format!("oracle=123763041 in {:.3}ms; 2-host variant {count} agrees", took.as_secs_f64() * 1e3))
    });
}

#[test]
#[ignore = "enumerates 123,763,041 solutions (about a minute in release)"]
fn criterion_2_full_enumeration() {
    criterion("2 (full enumeration)", || {
        let (count, took) = timed_count(&exp(6));
        ensure(count == 123_763_041, || format!("experiment 6: {count} != 123763041"))?;
        Ok(format!("exp6={count} in {:.1}s", took.as_secs_f64()))
    });
}

#[test]
fn criterion_3_variable_counts() {
    criterion("3 (variable counts)", || {
        let mut detail = Vec::new();
        for (n, expected) in [(6, 80), (7, 80), (8, 288), (9, 16_640), (10, 263_168)] {
            let dsd = exp(n);
            let formula = variable_formula(&dsd);
            let compiled = compiler::compile(&dsd).unwrap().num_vars();
            ensure(formula == expected, || format!("experiment {n}: formula {formula} != {expected}"))?;
            ensure(compiled == expected, || format!("experiment {n}: compiled {compiled} != {expected}"))?;
            detail.push(format!("exp{n}={compiled}"));
        }
        Ok(detail.join(" "))
    });
}

#[test]
fn criterion_4_first_solution_latency() {
    criterion("4 (first-solution latency)", || {
        let dsd = exp(10);
        let start = Instant::now();
        let csp = compiler::compile(&dsd).unwrap();
        ensure(csp.num_vars() == 263_168, || format!("{} variables", csp.num_vars()))?;
        let r = csp
            .model
            .enumerate(&SolveLimits::first(1).with_capture(Capture::All), |_| ControlFlow::Continue(()));
        let first10 = start.elapsed();
        ensure(r.solution_count == 1, || "experiment 10 has no first solution".into())?;
        ensure(first10 <= Duration::from_secs(120), || format!("experiment 10 first solution {first10:?}"))?;
        let cdd = csp.decode(&r.captured[0]);
        ensure(validate(&cdd, &dsd).unwrap().is_compliant(), || "first exp10 solution invalid".into())?;

        let start = Instant::now();
        let csp = compiler::compile(&exp(8)).unwrap();
        let limits = SolveLimits::first(1001).with_time_budget(Duration::from_secs(30));
        let r = csp.model.enumerate(&limits, |_| ControlFlow::Continue(()));
        let total8 = start.elapsed();
        let first8 = r.first_solution_latency.unwrap_or(Duration::MAX);
        ensure(first8 <= Duration::from_secs(10), || format!("experiment 8 first solution {first8:?}"))?;
        ensure(r.solution_count > 1000 && total8 <= Duration::from_secs(30), || {
            format!("experiment 8: {} solutions in {total8:?}", r.solution_count)
        })?;
        Ok(format!(
            "exp10 first={:.3}s exp8 first={:.3}ms >1000 in {:.3}s",
            first10.as_secs_f64(),
            first8.as_secs_f64() * 1e3,
            total8.as_secs_f64()
        ))
    });
}

fn random_model(rng: &mut ChaCha8Rng) -> Model {
    let mut m = Model::new();
    let n = rng.random_range(1..=16);
    let vars: Vec<usize> = (0..n).map(|i| m.add_binary(format!("x{i}"))).collect();
    for _ in 0..rng.random_range(0..=12) {
        let k = rng.random_range(1..=n.min(5));
        let terms: Vec<(i64, usize)> = (0..k)
            .map(|_| {
                let mut c = rng.random_range(-3i64..=3);
                if c == 0 {
                    c = 1;
                }
                (c, vars[rng.random_range(0..n)])
            })
            .collect();
        let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.random_range(0..3)];
        let bound = rng.random_range(-3i64..=4);
        // Terms that cancel out leave nothing to constrain; skip them.
        let _ = m.add_linear(&terms, rel, bound);
    }
    m
}

#[test]
fn criterion_5_oracle_equivalence() {
    criterion("5 (oracle equivalence)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let models = 300;
        let mut total = 0u64;
        for k in 0..models {
            let m = random_model(&mut rng);
            let (expected, _) = brute_force(&m);
            let got = m.count_exact();
            ensure(got == expected, || format!("model {k}: solver {got} != brute force {expected}\n{}", m.dump()))?;
            total += expected;
        }
        Ok(format!("{models} random models, {total} solutions, 0 mismatches"))
    });
}

/// Mutations that must break a valid configuration: drop one connection,
/// or remove a server instance that some client relies on.
fn mutations(cdd: &Cdd) -> Vec<Cdd> {
    let mut out = Vec::new();
    for c in &cdd.connections {
        let mut m = cdd.clone();
        m.connections.remove(c);
        out.push(m);
    }
    let servers: BTreeSet<&Instance> = cdd.connections.iter().map(|c| &c.server).collect();
    for s in servers {
        let mut m = cdd.clone();
        m.instances.remove(s);
        m.connections.retain(|c| &c.server != s && &c.client != s);
        out.push(m);
    }
    out
}

#[test]
fn criterion_6_validator_agreement() {
    criterion("6 (validator/solver agreement)", || {
        let mut checked = 0;
        let mut mutants = 0;
        let sample = |dsd: &Dsd, limit: Option<u64>| {
            let limits = SolveLimits {
                max_solutions: limit,
                ..Default::default()
            }
            .with_capture(Capture::All);
            compiler::count_configurations(dsd, &limits).unwrap().cdds
        };
        for (dsd, cdds) in [(exp(7), sample(&exp(7), None)), (experiments::maths(), sample(&experiments::maths(), Some(1000)))] {
            let expected = if dsd.name == "exp7" { 104 } else { 1000 };
            ensure(cdds.len() == expected, || format!("{}: {} configurations", dsd.name, cdds.len()))?;
            for cdd in &cdds {
                let report = validate(cdd, &dsd).unwrap();
                ensure(report.is_compliant(), || format!("{}: rejected\n{report}", dsd.name))?;
                checked += 1;
                for m in mutations(cdd) {
                    let report = validate(&m, &dsd).unwrap();
                    let named = report.failures().all(|f| !f.witnesses.is_empty());
                    ensure(!report.is_compliant() && named, || {
                        format!("{}: mutation accepted or unnamed\n{}", dsd.name, config::serialize_cdd(&m))
                    })?;
                    mutants += 1;
                }
            }
        }
        Ok(format!("{checked} solutions valid, {mutants} mutants rejected with witnesses"))
    });
}

fn maths_realm() -> Realm {
    let mut realm = Realm::new(experiments::maths(), RealmConfig::default());
    realm.run_until(0);
    realm
}

#[test]
fn criterion_7_reconciliation() {
    criterion("7 (reconciliation)", || {
        let mut realm = maths_realm();
        let deployed = realm.current_cdd().clone();
        ensure(validate(&deployed, &experiments::maths()).unwrap().is_compliant(), || "initial deployment".into())?;
        let victim = deployed
            .instances
            .iter()
            .find(|i| i.ctype == "MathsService")
            .unwrap()
            .host
            .clone();
        let script = parse_script(&format!("at 3 host-crash {victim}")).unwrap();
        realm.load_script(&script).unwrap();
        let ticks = realm.run_until(10);
        let repair = ticks.last().unwrap();
        let delta = repair.delta.clone().ok_or("no delta enacted in the tick after the crash")?;
        let evolved = realm.active_dsd().clone();
        ensure(evolved.hosts.len() == 9, || "description not evolved".into())?;
        let live = realm.live_cdd();
        ensure(&live == realm.current_cdd(), || "live configuration differs from the enacted one".into())?;
        let report = validate(&live, &evolved).unwrap();
        ensure(report.is_compliant(), || format!("post-repair configuration\n{report}"))?;

        let survivors = deployed.without_hosts(&[&victim]);
        let touched = delta.touched();
        let moved: Vec<&Instance> = survivors.instances.iter().filter(|i| touched.contains(i)).collect();
        ensure(moved.is_empty(), || format!("surviving instances in the delta: {moved:?}"))?;
        let candidates = compiler::count_configurations(
            &evolved,
            &SolveLimits::first(RealmConfig::default().max_candidates).with_capture(Capture::All),
        )
        .unwrap()
        .cdds;
        let minimum = candidates
            .iter()
            .map(|c| config::delta(&survivors, c, &Weights::default()).unwrap().cost)
            .min()
            .unwrap();
        ensure(delta.cost == minimum, || format!("delta cost {} != minimum {minimum}", delta.cost))?;

        let mut realm = maths_realm();
        realm
            .load_script(&parse_script("at 3 host-crash h1\nat 3 host-crash h2\nat 3 host-crash h3\n").unwrap())
            .unwrap();
        let ticks = realm.run_until(10);
        ensure(ticks.last().unwrap().unresolvable, || "three-host loss was not unresolvable".into())?;
        ensure(realm.log().iter().any(|e| e.category == "unresolvable-violation"), || "no event".into())?;
        let count = compiler::compile(realm.active_dsd()).unwrap().model.count_exact();
        ensure(count == 0, || format!("compiler finds {count} configurations"))?;
        Ok(format!(
            "lost {victim}: repaired with cost {} (minimum {minimum}); 3 hosts lost: unresolvable, model count 0",
            delta.cost
        ))
    });
}

fn fault_script(seed: u64) -> Vec<TimedFault> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..4)
        .map(|k| TimedFault {
            time: 5 + 10 * k + rng.random_range(0..10),
            fault: Fault::HostCrash(format!("h{}", rng.random_range(1..=10))),
        })
        .collect()
}

fn traced_run(seed: u64) -> (String, Result<(), String>) {
    let dsd = experiments::maths();
    let mut realm = Realm::new(dsd.clone(), RealmConfig { seed, ..Default::default() });
    realm.load_script(&fault_script(seed)).unwrap();
    realm.run_until(0);
    let targets: Vec<Instance> = realm
        .current_cdd()
        .instances
        .iter()
        .filter(|i| i.ctype == "MathsService")
        .cloned()
        .collect();
    for (k, m) in targets.iter().enumerate() {
        realm.invoke_endpoint(m, "IMathsService", Request::new("evaluate", [k as i64, 2, 3]));
    }
    realm.run_until(30);
    if let Some(m) = realm.live_cdd().instances.iter().find(|i| i.ctype == "MathsService").cloned() {
        realm.invoke_endpoint(&m, "IMathsService", Request::new("evaluate", [1, 1, 1]));
        realm.undeploy(&m);
    }
    realm.run_until(60);
    (realm.log_text(), check_lifecycle(realm.log(), &dsd))
}

#[test]
fn criterion_8_lifecycle_properties() {
    criterion("8 (life-cycle properties)", || {
        // (a) and (c) over a family of fault scenarios, (d) by replay.
        let seeds = 0..25u64;
        for seed in seeds.clone() {
            let (log, checked) = traced_run(seed);
            checked.map_err(|e| format!("seed {seed}: {e}"))?;
            let (again, _) = traced_run(seed);
            ensure(log == again, || format!("seed {seed}: replay differs"))?;
        }

        // (b) calls issued before the binding complete after it, in order.
        let dsd = exp(7);
        let mut realm = Realm::new(dsd.clone(), RealmConfig::default());
        let client = Instance::new("h1", "Client", 1);
        let server = Instance::new("h3", "Server", 1);
        let mut partial = Cdd::empty("exp7");
        partial.instances.insert(client.clone());
        realm.deploy(&partial);
        let calls: Vec<usize> = (0..5)
            .map(|k| realm.invoke(&client, "server", Request::new("ping", [k])))
            .collect();
        let mut full = partial.clone();
        full.instances.insert(server.clone());
        full.connections.insert(config::Connection {
            client: client.clone(),
            port: "server".into(),
            server,
        });
        realm.deploy(&full);
        realm.run_until(20);
        let bind = position(realm.log(), "bind", "h1/Client/1", "server ->").ok_or("no bind event")?;
        let mut last = bind;
        for (k, &c) in calls.iter().enumerate() {
            ensure(realm.call(c).status == CallStatus::Responded(k as i64), || format!("call {c} not answered"))?;
            let at = position(realm.log(), "response", "h1/Client/1", &format!("call {c} =")).unwrap();
            ensure(at > last, || format!("call {c} answered out of order or before the bind"))?;
            last = at;
        }
        check_lifecycle(realm.log(), &dsd)?;
        Ok(format!("{} fault scenarios replayed identically; FIFO flush of {} calls", seeds.count(), calls.len()))
    });
}
