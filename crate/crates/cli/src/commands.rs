use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use num::{BigRational, One};
use pta_core::bench::{
    digital_clocks_oracle, gen_robot, gen_task_completion, running_example, BenchmarkInstance,
    RobotParams, TaskParams,
};
use pta_core::io::{document, export_mdp, parse_model, parse_probability, serialize_model};
use pta_core::mdp::{
    analyze, build_pipeline, exact_reach, named_pairs, CheckOptions, CheckResult, Direction, Mdp,
    ReachOptions,
};
use pta_core::model::validate::{
    check_determinism, check_pairing, check_totality, check_well_formed, complete_to_total,
};
use pta_core::model::{Dtra, ModeId, Pta, Valuation};
use pta_core::product::{build_product, tick_transform, ProductOptions, TICK_LABEL};
use pta_core::region::{build_region_mdp, RegionOptions};
use pta_core::semantics::{
    dtra_run, extract_word, path_weight, sample_path, transform_path, FinitePath, FixedDelay,
    GreedyTowardTarget, Letter, Move, Scheduler, ThetaScheduler, UniformIntegerDelay,
};

use crate::error::CliError;
use crate::{
    BenchArgs, CheckArgs, Family, GenArgs, ModelArgs, OracleArgs, OutputArgs, RegionArgs,
    SimulateArgs, SolverArgs,
};

struct Loaded {
    pta: Pta,
    dtra: Option<Dtra>,
    mode: Option<ModeId>,
}

fn load(args: &ModelArgs) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(&args.model)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.model.display())))?;
    let doc = parse_model(&text)?;
    let pta = doc
        .pta
        .clone()
        .ok_or_else(|| CliError::invalid("model has no [pta] section"))?;
    let mut mode = doc.start_mode();
    if let (Some(name), Some(d)) = (&args.mode, &doc.dtra) {
        mode = Some(
            d.mode_id(name)
                .ok_or_else(|| CliError::usage(format!("unknown mode `{name}`")))?,
        );
    }
    Ok(Loaded {
        pta,
        dtra: doc.dtra,
        mode,
    })
}

/// PTA, automaton (completed when asked) and start mode.
fn load_pair(args: &ModelArgs) -> Result<(Pta, Dtra, ModeId), CliError> {
    let m = load(args)?;
    let dtra = m
        .dtra
        .ok_or_else(|| CliError::invalid("model has no [dtra] section"))?;
    let mode = m.mode.unwrap_or(dtra.initial());
    let dtra = if args.complete {
        complete_to_total(&dtra)?
    } else {
        dtra
    };
    Ok((m.pta, dtra, mode))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn options(complete: bool, solver: &SolverArgs) -> CheckOptions {
    CheckOptions {
        complete,
        product: ProductOptions::default(),
        region: if solver.plain_regions {
            RegionOptions::plain()
        } else {
            RegionOptions::default()
        },
        reach: ReachOptions {
            tol: solver.tol,
            threads: solver.threads.max(1),
            ..ReachOptions::default()
        },
    }
}

pub fn validate(args: &ModelArgs) -> Result<(), CliError> {
    let m = load(args)?;
    let mut findings = check_well_formed(&m.pta);
    let mut dtra = m.dtra.clone();
    if let Some(d) = &dtra {
        if args.complete {
            dtra = Some(complete_to_total(d)?);
        }
    }
    if let Some(d) = &dtra {
        findings.extend(check_determinism(d));
        findings.extend(check_totality(d));
        findings.extend(check_pairing(&m.pta, d));
    }
    for f in &findings {
        println!("{}", f.render(Some(&m.pta), dtra.as_ref()));
    }
    if findings.is_empty() {
        println!("ok");
        Ok(())
    } else {
        Err(CliError::invalid(format!(
            "{} finding(s): {}",
            findings.len(),
            findings
                .iter()
                .map(|f| f.kind())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }
}

pub fn product(args: &OutputArgs) -> Result<(), CliError> {
    let (pta, dtra, q) = load_pair(&args.model)?;
    let product = build_product(&pta, &dtra, q, ProductOptions::default())?;
    let doc = document(Some(&product.pta), None, None);
    emit(&serialize_model(&doc), args.output.as_deref())
}

pub fn tick(args: &OutputArgs) -> Result<(), CliError> {
    let m = load(&args.model)?;
    let base = match &m.dtra {
        Some(d) => {
            let d = if args.model.complete {
                complete_to_total(d)?
            } else {
                d.clone()
            };
            let q = m.mode.unwrap_or(d.initial());
            build_product(&m.pta, &d, q, ProductOptions::default())?.pta
        }
        None => m.pta,
    };
    let ticked = tick_transform(&base)?;
    emit(
        &serialize_model(&document(Some(&ticked.pta), None, None)),
        args.output.as_deref(),
    )
}

pub fn regions(args: &RegionArgs) -> Result<(), CliError> {
    let m = load(&args.out.model)?;
    let opts = options(args.out.model.complete, &args.solver);
    let (model, region) = match &m.dtra {
        Some(d) => {
            let q = m.mode.unwrap_or(d.initial());
            let p = build_pipeline(&m.pta, d, q, &opts)?;
            (p.ticked.pta, p.region)
        }
        None => {
            let ticked = tick_transform(&m.pta)?.pta;
            let region = build_region_mdp(&ticked, &opts.region)?;
            (ticked, region)
        }
    };
    let mut text = export_mdp(&region.mdp);
    if args.states {
        for (s, (l, r)) in region.states.iter().enumerate() {
            writeln!(
                text,
                "region {s} {} {}",
                model.location(*l).name,
                r.display(model.clocks(), &region.ceilings)
            )
            .unwrap();
        }
    }
    emit(&text, args.out.output.as_deref())
}

fn check_invariants(r: &CheckResult, tol: f64) -> Result<(), CliError> {
    if !r.converged() {
        return Err(CliError::internal(format!(
            "value iteration did not converge (residual {:e})",
            r.residual()
        )));
    }
    if r.p_min > r.p_max + 10.0 * tol {
        return Err(CliError::internal(format!(
            "pMin {} exceeds pMax {}",
            r.p_min, r.p_max
        )));
    }
    Ok(())
}

fn policy_table(mdp: &Mdp, r: &CheckResult) -> String {
    let mut out = String::from("objective state move action\n");
    for (name, sol) in [("max", &r.max_solution), ("min", &r.min_solution)] {
        for (s, &m) in sol.policy.iter().enumerate() {
            writeln!(
                out,
                "{name} {s} {m} {}",
                mdp.action_names()[mdp.move_action(m)]
            )
            .unwrap();
        }
    }
    out
}

pub fn check(args: &CheckArgs) -> Result<(), CliError> {
    let (pta, dtra, q) = load_pair(&args.model)?;
    let opts = options(args.model.complete, &args.solver);
    let start = Instant::now();
    let pipeline = build_pipeline(&pta, &dtra, q, &opts)?;
    let built = start.elapsed();
    let mdp = &pipeline.region.mdp;
    let r = analyze(
        mdp,
        &named_pairs(&pipeline.dtra),
        Some(TICK_LABEL),
        &opts.reach,
    );
    check_invariants(&r, args.solver.tol)?;
    let exact = if args.exact {
        let max = exact_reach(mdp, &r.rabin_states, Direction::Max)?;
        let min = exact_reach(mdp, &r.streett_states, Direction::Max)?;
        Some((
            BigRational::one() - &min.values[mdp.initial()],
            max.values[mdp.initial()].clone(),
        ))
    } else {
        None
    };
    if let Some(path) = &args.policy {
        fs::write(path, policy_table(mdp, &r))?;
    }
    let rabin = r.rabin_states.iter().filter(|&&b| b).count();
    let streett = r.streett_states.iter().filter(|&&b| b).count();
    if args.json {
        let mut v = serde_json::json!({
            "pMin": r.p_min,
            "pMax": r.p_max,
            "states": r.states,
            "moves": r.moves,
            "rabinAcceptingStates": rabin,
            "streettAcceptingStates": streett,
            "iterationsMin": r.min_solution.iterations,
            "iterationsMax": r.max_solution.iterations,
            "residual": r.residual(),
            "tBuild": built.as_secs_f64(),
            "tMin": r.t_min.as_secs_f64(),
            "tMax": r.t_max.as_secs_f64(),
        });
        if let Some((lo, hi)) = &exact {
            v["exactMin"] = lo.to_string().into();
            v["exactMax"] = hi.to_string().into();
        }
        println!("{v}");
        return Ok(());
    }
    println!("pMin = {:.10}", r.p_min);
    println!("pMax = {:.10}", r.p_max);
    if let Some((lo, hi)) = &exact {
        println!("exact pMin = {lo}");
        println!("exact pMax = {hi}");
    }
    println!("region MDP: {} states, {} moves", r.states, r.moves);
    println!("accepting end-component states: {rabin} (Rabin), {streett} (Streett)");
    println!(
        "value iteration: {} / {} sweeps (min / max), residual {:.2e}",
        r.min_solution.iterations,
        r.max_solution.iterations,
        r.residual()
    );
    println!(
        "time: build {:.3}s, min {:.3}s, max {:.3}s",
        built.as_secs_f64(),
        r.t_min.as_secs_f64(),
        r.t_max.as_secs_f64()
    );
    Ok(())
}

fn scheduler(spec: &str, pta: &Pta) -> Result<Box<dyn Scheduler>, CliError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "fixed" => {
            let delay = parse_probability(arg)
                .filter(|d| *d >= BigRational::from_integer(0.into()))
                .ok_or_else(|| CliError::usage(format!("bad delay `{arg}`")))?;
            Ok(Box::new(FixedDelay { delay }))
        }
        "uniform" => {
            let max = if arg.is_empty() {
                3
            } else {
                arg.parse()
                    .map_err(|_| CliError::usage(format!("bad maximal delay `{arg}`")))?
            };
            Ok(Box::new(UniformIntegerDelay { max, seed: 0 }))
        }
        "greedy" => {
            let mut targets = BTreeSet::new();
            for name in arg.split(',').filter(|s| !s.is_empty()) {
                targets.insert(
                    pta.location_id(name)
                        .ok_or_else(|| CliError::usage(format!("unknown location `{name}`")))?,
                );
            }
            Ok(Box::new(GreedyTowardTarget::new(pta, targets)))
        }
        _ => Err(CliError::usage(format!(
            "unknown scheduler `{spec}`; use fixed:<d>, uniform:<k> or greedy:<locations>"
        ))),
    }
}

fn print_path(out: &mut String, pta: &Pta, path: &FinitePath) {
    let state = |i: usize| {
        let s = &path.states[i];
        format!("({}, {})", pta.location(s.location).name, s.valuation)
    };
    writeln!(out, "  {}", state(0)).unwrap();
    for (i, mv) in path.moves.iter().enumerate() {
        let label = match mv {
            Move::Delay(t) => format!("delay {t}"),
            Move::Action(a) => pta.actions()[a.0].clone(),
        };
        writeln!(out, "  {label} -> {}", state(i + 1)).unwrap();
    }
}

fn word_text(word: &[Letter]) -> String {
    word.iter()
        .map(|l| match l {
            Letter::Delay(t) => t.to_string(),
            Letter::Symbol(s) => format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(",")),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let m = load(&args.model)?;
    let sigma = scheduler(&args.scheduler, &m.pta)?;
    let dtra = match &m.dtra {
        Some(d) if args.model.complete => Some(complete_to_total(d)?),
        other => other.clone(),
    };
    let mut out = String::new();
    for k in 0..args.paths {
        let seed = args.seed.wrapping_add(k);
        let path = sample_path(&m.pta, sigma.as_ref(), args.steps, seed)?;
        writeln!(out, "path seed {seed}").unwrap();
        print_path(&mut out, &m.pta, &path);
        writeln!(out, "  weight {}", path_weight(&m.pta, &path)?).unwrap();
        let word = extract_word(&m.pta, &path)?;
        writeln!(out, "  word {}", word_text(&word)).unwrap();
        if let Some(d) = &dtra {
            let q = m.mode.unwrap_or(d.initial());
            let mut full = vec![Letter::Symbol(m.pta.labels(m.pta.initial()).clone())];
            full.extend(word);
            let run = dtra_run(d, (q, Valuation::zero(d.clock_count())), &full)?;
            let modes: Vec<&str> = run.trajectory.iter().map(|q| d.mode_name(*q)).collect();
            writeln!(out, "  trajectory {}", modes.join(" ")).unwrap();
            if args.product {
                let product = build_product(&m.pta, d, q, ProductOptions::default())?;
                let image = transform_path(&product, &m.pta, d, &path)?;
                let theta = ThetaScheduler {
                    sigma: sigma.as_ref(),
                    product: &product,
                    pta: &m.pta,
                    dtra: d,
                };
                let sampled = sample_path(&product.pta, &theta, args.steps, seed)?;
                if sampled != image {
                    return Err(CliError::internal(
                        "product sample differs from the transformed path",
                    ));
                }
                writeln!(out, "  product").unwrap();
                print_path(&mut out, &product.pta, &image);
            }
        }
    }
    emit(&out, None)
}

fn instance(family: Family, n: usize, seed: u64) -> Result<BenchmarkInstance, CliError> {
    Ok(match family {
        Family::Task => gen_task_completion(&TaskParams::scaled(n, seed))?,
        Family::Robot => gen_robot(&RobotParams::scaled(n, seed)?)?,
        Family::TwoTask => gen_task_completion(&TaskParams::two_task())?,
        Family::Robot3x2 => gen_robot(&RobotParams::grid3x2())?,
        Family::Running => running_example(Default::default())?,
    })
}

pub fn gen(args: &GenArgs) -> Result<(), CliError> {
    let inst = instance(args.family, args.n, args.seed)?;
    let doc = document(Some(&inst.pta), Some(&inst.dtra), Some(inst.mode));
    let mut text = String::new();
    let params: BTreeMap<_, _> = inst.params.iter().collect();
    writeln!(
        text,
        "# family {} N {} seed {}",
        inst.family, inst.n, inst.seed
    )
    .unwrap();
    for (k, v) in params {
        writeln!(text, "# {k} = {v}").unwrap();
    }
    text.push_str(&serialize_model(&doc));
    emit(&text, args.output.as_deref())
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let raw = ModelArgs {
        complete: false,
        ..args.model.clone()
    };
    let (pta, dtra, q) = load_pair(&raw)?;
    if !args.model.complete {
        let missing = check_totality(&dtra);
        if !missing.is_empty() {
            return Err(CliError::invalid(format!(
                "automaton is not total ({} finding(s)); rerun with --complete",
                missing.len()
            )));
        }
    }
    let opts = options(true, &args.solver);
    let inst = BenchmarkInstance {
        family: "file".into(),
        n: 0,
        seed: 0,
        params: BTreeMap::new(),
        pta,
        dtra,
        mode: q,
    };
    let main = pta_core::mdp::check_pta(&inst.pta, &inst.dtra, q, &opts)?;
    check_invariants(&main, args.solver.tol)?;
    let digital = digital_clocks_oracle(&inst, &opts.reach)?;
    let dmin = (main.p_min - digital.p_min).abs();
    let dmax = (main.p_max - digital.p_max).abs();
    println!(
        "regions: pMin = {:.10} pMax = {:.10} ({} states)",
        main.p_min, main.p_max, main.states
    );
    println!(
        "digital: pMin = {:.10} pMax = {:.10} ({} states)",
        digital.p_min, digital.p_max, digital.states
    );
    println!("difference: {:.2e} / {:.2e}", dmin, dmax);
    if dmin > args.agreement || dmax > args.agreement {
        return Err(CliError::internal(format!(
            "engines disagree beyond {:e}",
            args.agreement
        )));
    }
    println!("agree");
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.from > args.to {
        return Err(CliError::usage("--from must not exceed --to"));
    }
    let opts = options(true, &args.solver);
    let sink: Box<dyn std::io::Write> = match &args.output {
        Some(path) => {
            let exists = path.exists() && fs::metadata(path)?.len() > 0;
            let file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)?;
            if !exists {
                let mut f = &file;
                writeln!(f, "family,N,seed,size,pMin,pMax,tMin,tMax")?;
            }
            Box::new(file)
        }
        None => {
            println!("family,N,seed,size,pMin,pMax,tMin,tMax");
            Box::new(std::io::stdout())
        }
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(sink);
    for n in args.from..=args.to {
        let inst = instance(args.family, n, args.seed)?;
        let start = Instant::now();
        let pipeline = build_pipeline(&inst.pta, &inst.dtra, inst.mode, &opts)?;
        let build = start.elapsed().as_secs_f64();
        let r = analyze(
            &pipeline.region.mdp,
            &named_pairs(&pipeline.dtra),
            Some(TICK_LABEL),
            &opts.reach,
        );
        check_invariants(&r, args.solver.tol)?;
        w.write_record([
            inst.family.clone(),
            inst.n.to_string(),
            inst.seed.to_string(),
            r.states.to_string(),
            format!("{:.6}", r.p_min),
            format!("{:.6}", r.p_max),
            format!("{:.3}", build + r.t_min.as_secs_f64()),
            format!("{:.3}", build + r.t_max.as_secs_f64()),
        ])?;
        w.flush()?;
    }
    Ok(())
}
