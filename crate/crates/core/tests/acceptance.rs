//! Acceptance run: each criterion with its time limit. Prints one line per
//! criterion and exits nonzero when any fails.

mod support;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use devs_scc::algebra::{combine_and_prune, CombinationPlan, Status};
use devs_scc::criteria::{build_catalog, builtin_table, parse_criteria_file, Catalog, Scc};
use devs_scc::model::{Env, Model, Value};
use devs_scc::parser::{parse_model, parse_pred};
use devs_scc::project::Project;
use devs_scc::symbolic::{from_dnf, normalize, to_dnf, Solver, Universe, DEFAULT_DNF_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;
use support::{fixture, load};

type Check = Result<String, String>;
/// Name, time limit in seconds, check.
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn catalog_of(p: &Project, criteria: &str, include_otherwise: bool) -> Result<Catalog, String> {
    let sel = parse_criteria_file(criteria, &p.model).map_err(|e| e.to_string())?;
    build_catalog(&sel, &p.criteria_input(include_otherwise)).map_err(|e| e.to_string())
}

fn rows(sccs: &[Scc]) -> Vec<(u32, String, String)> {
    sccs.iter().map(|s| (s.id, s.ini_st.to_string(), s.in_pairs.to_string())).collect()
}

fn expected_rows(name: &str) -> Vec<(u32, String, String)> {
    let j: Json = serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
    j["sccs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            let text = |k: &str| s[k].as_str().unwrap().to_string();
            (s["id"].as_u64().unwrap() as u32, text("ini_st"), text("in_pairs"))
        })
        .collect()
}

fn first_difference(got: &[(u32, String, String)], want: &[(u32, String, String)]) -> String {
    match got.iter().zip(want).find(|(g, w)| g != w) {
        Some((g, w)) => format!("class {}: got {} / {}, want {} / {}", w.0, g.1, g.2, w.1, w.2),
        None => format!("{} classes, expected {}", got.len(), want.len()),
    }
}

fn ac1() -> Check {
    let p = load("soda.devs");
    let c = catalog_of(&p, "cases", false)?;
    let internal = c.sccs.iter().filter(|s| s.is_internal()).count();
    ensure(c.sccs.len() == 11 && internal == 6, || format!("{} classes, {internal} internal", c.sccs.len()))?;
    let ini: Vec<String> = c.sccs.iter().map(|s| s.ini_st.to_string()).collect();
    let want = [
        "m in {idle, operating}",
        "d >= np",
        "d >= dp",
        "true",
        "true",
        "m = operating & ot < it",
        "m = finishOp & ot < it",
        "m = cancelOp & ot < it",
        "m = waitRetChange & ot < it",
        "m = idle & ot < it",
        "it <= ot",
    ];
    ensure(ini == want, || format!("initial states {ini:?}"))?;
    let diet = &c.sccs[2];
    ensure(diet.in_pairs.to_string() == "x = getDiet", || format!("class 3 pairs {}", diet.in_pairs))?;
    let got = rows(&c.sccs);
    let want = expected_rows("soda.expected.json");
    ensure(got == want, || first_difference(&got, &want))?;
    Ok("11 classes, 5 external and 6 internal".into())
}

fn ac2() -> Check {
    let p = load("elevator.devs");
    let without = catalog_of(&p, "cases", false)?.sccs.len();
    let with = catalog_of(&p, "cases", true)?.sccs.len();
    ensure((without, with) == (35, 36), || format!("{without} without otherwise, {with} with"))?;
    Ok("35 classes, 36 with the otherwise case".into())
}

fn ac3() -> Check {
    let p = load("elevator.devs");
    let src = std::fs::read_to_string(fixture("elevator.criteria")).unwrap();
    let c = catalog_of(&p, &src, false)?;
    let counts: Vec<usize> = c.counts.iter().map(|(_, n)| *n).collect();
    ensure(counts == [35, 31, 12, 10], || format!("per-criterion counts {counts:?}"))?;
    let got = rows(&c.sccs);
    let want: Vec<_> = expected_rows("elevator.expected.json").into_iter().filter(|r| r.0 <= 88).collect();
    ensure(got == want, || first_difference(&got, &want))?;
    Ok("88 base classes".into())
}

fn ac4() -> Check {
    let t = builtin_table("<").ok_or("no builtin < table")?;
    ensure(t.cells.len() == 9, || format!("{} cells", t.cells.len()))?;
    let dom: Vec<Value> = (-2..=2).map(Value::int).collect();
    let u = Universe::with_vars(t.params.iter().map(|p| (p.clone(), dom.clone())).collect());
    let m = Model::empty();
    let s = Solver::new(&m, &u).unwrap();
    let mut hits = vec![0usize; t.cells.len()];
    for a in -2..=2 {
        for b in -2..=2 {
            let env = Env::new().with(&t.params[0], Value::int(a)).with(&t.params[1], Value::int(b));
            let inside: Vec<usize> = (0..t.cells.len()).filter(|&i| s.holds(&t.cells[i], &env)).collect();
            ensure(inside.len() == 1, || format!("({a}, {b}) lies in cells {inside:?}"))?;
            hits[inside[0]] += 1;
        }
    }
    ensure(hits.iter().all(|&h| h > 0), || format!("empty cell among {hits:?}"))?;
    Ok("9 cells, disjoint and exhaustive on 25 points".into())
}

fn ac5() -> Check {
    let p = load("toggle.devs");
    for (spec, n) in [("time:[0,T]", 5), ("time:[1,2]", 5), ("time:T", 3), ("time:0", 3)] {
        let got = catalog_of(&p, spec, false)?.sccs.len();
        ensure(got == n, || format!("{spec} gives {got} classes, expected {n}"))?;
    }
    let e = load("elevator.devs");
    let src = std::fs::read_to_string(fixture("elevator.criteria")).unwrap();
    let line = src.lines().find(|l| l.starts_with("time:")).ok_or("no time line")?;
    let got: Vec<String> =
        catalog_of(&e, line, false)?.sccs.iter().map(|s| format!("{} / {}", s.ini_st, s.in_pairs)).collect();
    let want = [
        "true / t = 0",
        "true / 0 < t & t < TD1",
        "true / t = TD1",
        "true / TD1 < t & t < TD2",
        "true / t = TD2",
        "true / TD2 < t & t < TA",
        "true / t = TA",
        "true / TA < t & t < TGF",
        "true / t = TGF",
        "true / t > TGF",
    ];
    ensure(got == want, || format!("elevator time classes {got:?}"))?;
    Ok("5 per interval, 3 per point, elevator time classes verbatim".into())
}

fn ac6() -> Check {
    let p = load("toy.devs");
    let class = |id: u32, ini: &str| {
        let mut s = Scc::new(
            parse_pred(ini, Some(&p.model), &[]).unwrap(),
            parse_pred("x = 1", Some(&p.model), &[]).unwrap(),
            "given",
            ini,
        );
        s.id = id;
        s
    };
    let base = vec![class(1, "n <= 10"), class(2, "m = ON"), class(3, "m = OFF")];
    let (all, rep) = combine_and_prune(&p.model, &p.universe, &base, &CombinationPlan::all_pairs(&[1, 2, 3], 100))
        .map_err(|e| e.to_string())?;
    ensure((rep.kept, rep.dropped, rep.unknown) == (2, 1, 0), || {
        format!("kept {}, dropped {}, unknown {}", rep.kept, rep.dropped, rep.unknown)
    })?;
    let dropped: Vec<&Vec<u32>> = rep.groups.iter().filter(|g| g.status == Status::Dropped).map(|g| &g.group).collect();
    ensure(dropped == [&vec![2, 3]], || format!("dropped {dropped:?}"))?;
    ensure(all.len() == 5, || format!("{} classes after combination", all.len()))?;
    Ok("2 kept, ON & OFF dropped".into())
}

fn ac7() -> Check {
    let p = parse_pred("n * m > 0 => n > m", None, &[]).map_err(|e| e.to_string())?;
    let clauses = to_dnf(&p, DEFAULT_DNF_CAP).map_err(|e| e.to_string())?;
    let shown: Vec<String> = clauses.iter().map(|c| devs_scc::model::Pred::and(c.clone()).to_string()).collect();
    ensure(shown == ["!(n * m > 0)", "n > m"], || format!("clauses {shown:?}"))?;
    let dom: Vec<Value> = (-3..=3).map(Value::int).collect();
    let u = Universe::with_vars(vec![("n".into(), dom.clone()), ("m".into(), dom)]);
    let model = Model::empty();
    let s = Solver::new(&model, &u).unwrap();
    let back = from_dnf(&clauses);
    let norm = normalize(&p);
    for n in -3i64..=3 {
        for m in -3i64..=3 {
            let want = n * m <= 0 || n > m;
            let env = Env::new().with("n", Value::int(n)).with("m", Value::int(m));
            ensure(s.holds(&back, &env) == want && s.holds(&norm, &env) == want, || {
                format!("differs at n = {n}, m = {m}")
            })?;
        }
    }
    Ok("2 clauses, equivalent on 49 points".into())
}

fn ac8() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_devs-scc"))
        .args([
            "simulate",
            "--model",
            fixture("soda.devs").to_str().unwrap(),
            fixture("soda-undefined.json").to_str().unwrap(),
        ])
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure(out.status.code() == Some(3), || format!("exit {:?}", out.status.code()))?;
    ensure(stdout.contains("undefined transition"), || format!("output: {stdout}"))?;
    Ok("undefined transition, exit 3".into())
}

fn ac9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let model = Model::empty();
    let u = support::grid();
    let s = Solver::new(&model, &u).unwrap();
    for _ in 0..200 {
        support::check_dnf(&support::gen_pred(&mut rng, 4), &s)?;
    }
    let toy = parse_model(support::TOY).map_err(|e| e.to_string())?;
    let tu = Universe::new(&toy, &Default::default()).map_err(|e| e.to_string())?;
    let ts = Solver::new(&toy, &tu).unwrap();
    for _ in 0..200 {
        let a = support::gen_toy_scc(&mut rng, &toy, 1);
        let b = support::gen_toy_scc(&mut rng, &toy, 2);
        let c = support::gen_toy_scc(&mut rng, &toy, 3);
        support::check_intersect(&a, &b, &c, &ts)?;
    }
    let witnesses = support::witness_soundness()?;
    let steps = support::q_invariant(&mut rng, 1000)?;
    let classes = support::coverage_partition(&mut rng, 100)?;
    Ok(format!("200 DNF, 200 intersections, {witnesses} witnesses, {steps} steps, 100 class sets ({classes} classes)"))
}

fn ac10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out_dir = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_devs-scc"))
            .args(["campaign", "--model", fixture("elevator.devs").to_str().unwrap()])
            .args(["--criteria-file", fixture("elevator.criteria").to_str().unwrap()])
            .args(["--plan", fixture("elevator.plan.json").to_str().unwrap()])
            .args(["--probe-k", "3", "--out", out_dir.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(matches!(out.status.code(), Some(0 | 3)), || {
            format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        std::fs::read(out_dir.join("report.json")).map_err(|e| e.to_string())
    };
    let (a, b) = (run("first")?, run("second")?);
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("identical {} byte reports", a.len()))
}

fn main() -> ExitCode {
    let checks: [Criterion; 10] = [
        ("AC1", 1, ac1),
        ("AC2", 1, ac2),
        ("AC3", 5, ac3),
        ("AC4", 1, ac4),
        ("AC5", 1, ac5),
        ("AC6", 1, ac6),
        ("AC7", 1, ac7),
        ("AC8", 1, ac8),
        ("AC9", 60, ac9),
        ("AC10", 10, ac10),
    ];
    let mut failed = 0;
    for (name, limit, f) in checks {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > Duration::from_secs(limit) => Err(format!("{msg}, but took over {limit} s")),
            r => r,
        };
        match result {
            Ok(msg) => println!("[PASS] {name} {msg} ({:.3} s)", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name} {msg} ({:.3} s)", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
