//! Subcommand bodies. Each returns an [`Output`]; nothing here touches files
//! except through the loaders in `format`.

use std::path::Path;

use nilwalk::bounds::{self, BoundCheck};
use nilwalk::measure::{monte_carlo_profile, sign_walk, StepOrder};
use nilwalk::nilprog::{
    collect, growth_profile, hp_norm, hp_x_norm, letters_from_signed, shrink, square_root_check, verify_c_normal_form,
    CosetNilprogression, NormalFormCert,
};
use nilwalk::rational::to_f64;
use nilwalk::segments::{find_flat_segment, verify_segment, DescentLevel, SegmentParams, SegmentReport};
use nilwalk::sl2::{self, AndersonMode, EpsDistribution, TransferSpec};
use nilwalk::stats::LineFit;
use nilwalk::structure::{
    default_catalog, detect_structure, mult_energy, truncate_measure, verify_conclusion, DetectParams, SubMeasure,
    TruncationParams,
};
use nilwalk::{GroupElement, Rational, WalkSpec};
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::format::{
    element_from_json, group_from_json, load_catalog, parse_element, parse_element_list, parse_rational,
    progression_from_json, progression_to_json, rational_from_json, read_json, walk_from_json, walk_to_json,
};
use crate::output::{Output, Table};
use crate::{
    AndersonArgs, BoundsCommand, DetectArgs, DyadicArgs, EnergyArgs, Global, Mode, NilprogCommand, Order, RhoArgs,
    SignWalkArgs, ValidateArgs,
};

type Res<T> = Result<T, CliError>;
type Inputs = Vec<(String, Vec<u8>)>;

/// `{"exact": "p/q", "approx": x}`.
fn q(r: &Rational) -> Value {
    json!({"exact": r.to_string(), "approx": to_f64(r)})
}

fn qs(rs: &[Rational]) -> Value {
    Value::Array(rs.iter().map(q).collect())
}

fn dual(r: &Rational) -> String {
    let s = r.to_string();
    let a = to_f64(r);
    if s == a.to_string() {
        s
    } else {
        format!("{s} ({a:.6e})")
    }
}

fn elems(gs: &[GroupElement]) -> Value {
    Value::Array(gs.iter().map(|g| json!(g.to_string())).collect())
}

fn fit_json(f: &Option<LineFit>) -> Value {
    match f {
        Some(f) => json!({"slope": f.slope, "intercept": f.intercept, "r2": f.r2}),
        None => Value::Null,
    }
}

fn load(path: &Path, inputs: &mut Inputs) -> Res<Value> {
    let (v, bytes) = read_json(path)?;
    inputs.push((path.display().to_string(), bytes));
    Ok(v)
}

fn load_walk(path: &Path, inputs: &mut Inputs) -> Res<WalkSpec> {
    walk_from_json(&load(path, inputs)?).map_err(|e| e.prefix(path.display()))
}

fn load_prog(path: &Path, inputs: &mut Inputs) -> Res<CosetNilprogression> {
    progression_from_json(&load(path, inputs)?, None).map_err(|e| e.prefix(path.display()))
}

fn opt_rational(s: &Option<String>) -> Res<Option<Rational>> {
    s.as_deref().map(parse_rational).transpose()
}

/// `i:j`, 1-based and inclusive.
fn parse_range(s: &str, n: usize) -> Res<(usize, usize)> {
    let (i, j) = s.split_once(':').ok_or_else(|| CliError::usage(format!("range {s:?} is not of the form i:j")))?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| CliError::usage(format!("range {s:?}: bad index {x:?}")));
    let (i, j) = (num(i)?, num(j)?);
    if i < 1 || i > j || j > n {
        return Err(CliError::input(format!("range {i}:{j} outside 1:{n}")));
    }
    Ok((i, j))
}

fn step_order(o: Order) -> StepOrder {
    match o {
        Order::LaterLeft => StepOrder::LaterLeft,
        Order::LaterRight => StepOrder::LaterRight,
    }
}

pub fn rho(g: &Global, a: RhoArgs) -> Res<Output> {
    let mut inputs = Inputs::new();
    let walk = load_walk(&a.walk, &mut inputs)?;
    let (i, j) = match &a.range {
        Some(r) => parse_range(r, walk.len())?,
        None => (1, walk.len()),
    };
    let order = step_order(a.order);
    let p0 = walk.validate_p0();
    let mut report = json!({
        "group": walk.ctx().name(),
        "n": walk.len(),
        "range": [i, j],
        "order": format!("{:?}", a.order),
        "p0": q(walk.p0()),
        "p0_ok": p0.ok,
    });
    let mut out = Output::default();
    if a.mc {
        let sub = walk.slice(i, j)?;
        // Sampling always multiplies later steps on the left; reverse for the other order.
        let sub = match order {
            StepOrder::LaterLeft => sub,
            StepOrder::LaterRight => {
                WalkSpec::new(sub.ctx(), sub.steps().iter().rev().cloned().collect(), sub.p0().clone())?
            }
        };
        let ests = monte_carlo_profile(&sub, a.trials, g.seed, a.profile)?;
        let last = ests.last().expect("walk has steps");
        report["monte_carlo"] = json!({
            "trials": last.trials,
            "collision": last.collision,
            "max_bin": last.max_bin,
            "distinct": last.distinct,
        });
        out.summary.push(format!(
            "rho ~ {:.6e} (collision estimate; max bin {:.6e}, {} trials)",
            last.collision, last.max_bin, last.trials
        ));
        out.table = Some(Table {
            header: vec!["k", "collision", "max_bin", "distinct"],
            rows: ests
                .iter()
                .map(|e| {
                    vec![
                        (i + e.steps - 1).to_string(),
                        e.collision.to_string(),
                        e.max_bin.to_string(),
                        e.distinct.to_string(),
                    ]
                })
                .collect(),
        });
    } else {
        let mut rows = Vec::new();
        if a.profile {
            let mut acc = walk.step(i).clone();
            for k in i..=j {
                if k > i {
                    acc = match order {
                        StepOrder::LaterLeft => walk.step(k).convolve(&acc, g.cap)?,
                        StepOrder::LaterRight => acc.convolve(walk.step(k), g.cap)?,
                    };
                }
                let (r, _) = acc.linf();
                let l2 = acc.l2sq();
                rows.push(vec![
                    k.to_string(),
                    r.to_string(),
                    to_f64(&r).to_string(),
                    l2.to_string(),
                    acc.len().to_string(),
                ]);
            }
        }
        let r = walk.rho_exact(Some((i, j)), order, g.cap)?;
        report["rho"] = q(&r.rho);
        report["argmax"] = json!(r.argmax.to_string());
        report["support_size"] = json!(r.support_size);
        report["l2sq"] = q(&r.l2sq);
        out.summary.push(format!("rho = {}", dual(&r.rho)));
        out.summary.push(format!("argmax = {}, support = {}", r.argmax, r.support_size));
        if rows.is_empty() {
            rows.push(vec![
                j.to_string(),
                r.rho.to_string(),
                to_f64(&r.rho).to_string(),
                r.l2sq.to_string(),
                r.support_size.to_string(),
            ]);
        }
        out.table = Some(Table { header: vec!["k", "rho", "rho_approx", "l2sq", "support"], rows });
    }
    if !p0.ok {
        out.summary.push(format!("warning: {} atom(s) at or below p0", p0.offending.len()));
    }
    out.report = report;
    out.inputs = inputs;
    Ok(out)
}

fn level_json(l: &DescentLevel) -> Value {
    json!({
        "i": l.i, "l": l.l, "j": l.i + 4 * l.l,
        "whole_l2sq": q(&l.whole_l2sq),
        "max_sub_start": l.max_sub_start,
        "max_sub_l2sq": q(&l.max_sub_l2sq),
        "flat": l.flat,
    })
}

fn segment_json(s: &SegmentReport) -> Value {
    json!({
        "n": s.n, "i0": s.i0, "l0": s.l0, "j0": s.j0, "l0_star": s.l0_star,
        "c": q(&s.c), "eps": q(&s.eps), "tau": q(&s.tau),
        "m_bound": s.m_bound,
        "threshold": q(&s.threshold()),
        "flat_ratio_sq": q(&s.flat_ratio_sq),
        "split_ratio_sq": q(&s.split_ratio_sq),
        "prefix_ratio_sq": q(&s.prefix_ratio_sq),
        "achieved_c": s.achieved_c(),
        "shift": s.shift,
        "long_enough": s.long_enough,
        "chain": s.chain.iter().map(level_json).collect::<Vec<_>>(),
    })
}

fn segment_params(g: &Global, c: &str, eps: &str, tau: &Option<String>) -> Res<SegmentParams> {
    Ok(SegmentParams { c: parse_rational(c)?, eps: parse_rational(eps)?, tau: opt_rational(tau)?, cap: g.cap })
}

pub fn dyadic(g: &Global, a: DyadicArgs) -> Res<Output> {
    let mut inputs = Inputs::new();
    let walk = load_walk(&a.walk, &mut inputs)?;
    let params = segment_params(g, &a.c, &a.eps, &a.tau)?;
    let s = find_flat_segment(&walk, &params)?;
    let check = verify_segment(&walk, &s, g.cap)?;
    let mut report = segment_json(&s);
    report["verified"] = json!(check.ok);
    report["violation"] = json!(check.violation);
    let mut summary = vec![
        format!("flat window [{}, {}] (l0 = {}) after {} level(s)", s.i0, s.i0 + 4 * s.l0, s.l0, s.chain.len()),
        format!(
            "segment [{}, {}], l0* = {}, long enough: {}",
            s.j0 - s.l0_star,
            s.j0 + s.l0_star,
            s.l0_star,
            s.long_enough
        ),
        format!("flat ratio^2 = {}, split ratio^2 = {}", dual(&s.flat_ratio_sq), dual(&s.split_ratio_sq)),
    ];
    summary.push(match &check.violation {
        None => "verified: every inequality rechecked from scratch".into(),
        Some(v) => format!("verification FAILED: {v}"),
    });
    let rows = s
        .chain
        .iter()
        .enumerate()
        .map(|(k, l)| {
            vec![
                (k + 1).to_string(),
                l.i.to_string(),
                (l.i + 4 * l.l).to_string(),
                l.whole_l2sq.to_string(),
                l.max_sub_start.to_string(),
                l.max_sub_l2sq.to_string(),
                l.flat.to_string(),
            ]
        })
        .collect();
    Ok(Output {
        summary,
        report,
        table: Some(Table { header: vec!["level", "i", "j", "l2sq", "max_sub_start", "max_sub_l2sq", "flat"], rows }),
        inputs,
    })
}

fn cert_json(c: &NormalFormCert) -> Value {
    json!({
        "c": q(&c.c),
        "valid": c.is_valid(),
        "upper_triangular": c.upper_triangular,
        "local_properness": c.local_properness,
        "volume": c.volume,
        "p_size": c.p_size,
        "box_volume": c.box_volume.to_string(),
        "triangular_failures": c.triangular_failures().map(|w| json!({
            "i": w.i + 1, "j": w.j + 1,
            "inverse_i": w.inverse_i, "inverse_j": w.inverse_j,
            "commutator": w.commutator.to_string(),
            "tail_lengths": qs(&w.tail_lengths),
        })).collect::<Vec<_>>(),
        "collision": c.collision.as_ref().map(|(x, y, g)| json!({"a": x, "b": y, "element": g.to_string()})),
    })
}

pub fn nilprog(g: &Global, cmd: NilprogCommand) -> Res<Output> {
    let mut inputs = Inputs::new();
    let mut out = Output::default();
    match cmd {
        NilprogCommand::VerifyNormalForm { prog, c } => {
            let hp = load_prog(&prog, &mut inputs)?;
            let c = match opt_rational(&c)? {
                Some(c) => c,
                None => hp.progression().constant().cloned().unwrap_or_else(|| Rational::from_integer(1.into())),
            };
            let cert = verify_c_normal_form(hp.progression(), &c, g.cap)?;
            out.summary.push(format!(
                "C = {c}: upper-triangular {}, local properness {}, volume {} (|P| = {}, box {})",
                cert.upper_triangular, cert.local_properness, cert.volume, cert.p_size, cert.box_volume
            ));
            out.summary.push(if cert.is_valid() { "normal form: valid".into() } else { "normal form: INVALID".into() });
            out.report = json!({"progression": progression_to_json(&hp), "certificate": cert_json(&cert)});
        }
        NilprogCommand::Norm { prog, elem, lambda_max } => {
            let hp = load_prog(&prog, &mut inputs)?;
            let x = parse_element(hp.ctx(), &elem)?;
            let lmax = parse_rational(&lambda_max)?;
            let n = hp_norm(&x, &hp, &lmax, g.cap)?;
            out.summary.push(format!("||{x}||_HP = {}", dual(&n)));
            out.report = json!({"element": x.to_string(), "lambda_max": q(&lmax), "norm": q(&n)});
        }
        NilprogCommand::XNorm { prog, elem, xs, lambda_max } => {
            let hp = load_prog(&prog, &mut inputs)?;
            let x = parse_element(hp.ctx(), &elem)?;
            let reps = parse_element_list(hp.ctx(), &xs)?;
            let lmax = parse_rational(&lambda_max)?;
            let n = hp_x_norm(&x, &hp, &reps, &lmax, g.cap)?;
            out.summary.push(format!("||{x}||_(HP,X) = {}, sigma = {:?}", dual(&n.lambda), n.sigma));
            out.report = json!({
                "element": x.to_string(),
                "xs": elems(&reps),
                "lambda_max": q(&lmax),
                "norm": q(&n.lambda),
                "sigma": n.sigma,
            });
        }
        NilprogCommand::Growth { prog, nmax } => {
            let hp = load_prog(&prog, &mut inputs)?;
            let gp = growth_profile(&hp, nmax, g.cap)?;
            out.summary.push(format!("|(HP)^k| for k = 1..: {:?}", gp.sizes));
            out.summary.push(format!(
                "{} growth{}",
                if gp.exponential { "exponential" } else { "polynomial" },
                if gp.truncated { " (truncated at the cap)" } else { "" }
            ));
            out.report = json!({
                "sizes": gp.sizes, "base": gp.base, "ratios": qs(&gp.ratios),
                "log_log": fit_json(&gp.log_log), "semi_log": fit_json(&gp.semi_log),
                "exponential": gp.exponential, "truncated": gp.truncated,
            });
            let rows = gp
                .sizes
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let ratio = gp.ratios.get(k).map(|r| r.to_string()).unwrap_or_default();
                    vec![(k + 1).to_string(), s.to_string(), ratio]
                })
                .collect();
            out.table = Some(Table { header: vec!["k", "size", "ratio"], rows });
        }
        NilprogCommand::Shrink { prog, c, d, comparability, max_checks } => {
            let hp = load_prog(&prog, &mut inputs)?;
            let (c, d) = (parse_rational(&c)?, parse_rational(&d)?);
            let r = shrink(&hp, &c, &d, opt_rational(&comparability)?, g.cap)?;
            let sq = square_root_check(&r.q, &d, max_checks, g.seed, g.cap)?;
            out.summary.push(format!(
                "|HQ| = {}, |HP| = {}, ratio {} (bound {})",
                r.hq_size,
                r.hp_size,
                dual(&r.ratio),
                dual(&r.ratio_bound)
            ));
            out.summary.push(format!(
                "triangular {}, proper {}, comparable {}, square roots {} ({} checked{})",
                r.triangular_ok,
                r.collision.is_none(),
                r.comparable,
                sq.holds(),
                sq.checked,
                if sq.exhaustive { ", exhaustive" } else { ", sampled" }
            ));
            out.report = json!({
                "q": progression_to_json(&r.q),
                "triangular_ok": r.triangular_ok,
                "collision": r.collision.as_ref().map(|(x, y, g)| json!({"a": x, "b": y, "element": g.to_string()})),
                "hp_size": r.hp_size, "hq_size": r.hq_size,
                "ratio": q(&r.ratio), "ratio_bound": q(&r.ratio_bound),
                "comparable": r.comparable,
                "all_hold": r.all_hold(),
                "square_root": {
                    "lambda": q(&sq.lambda), "exhaustive": sq.exhaustive, "checked": sq.checked,
                    "hypotheses_met": sq.hypotheses_met, "violations": elems(&sq.violations), "holds": sq.holds(),
                },
            });
        }
        NilprogCommand::Collect { prog, word, d } => {
            let hp = load_prog(&prog, &mut inputs)?;
            let signed = word
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<i64>().map_err(|_| CliError::usage(format!("bad letter {s:?} in --word"))))
                .collect::<Res<Vec<_>>>()?;
            let d = parse_rational(&d)?;
            let p = hp.progression();
            let r = collect(&letters_from_signed(&signed)?, p, p.lengths(), &d)?;
            out.summary.push(format!("exponents {:?}, element {}", r.exponents, r.element));
            out.summary.push(format!("drift within bound: {}", r.drift_ok()));
            out.report = json!({
                "word": signed,
                "exponents": r.exponents,
                "letter_counts": r.letter_counts,
                "added": r.added,
                "drift": r.drift,
                "drift_bound": qs(&r.drift_bound),
                "within_bound": r.within_bound,
                "element": r.element.to_string(),
            });
            let rows = (0..r.exponents.len())
                .map(|k| {
                    vec![
                        (k + 1).to_string(),
                        r.exponents[k].to_string(),
                        r.drift[k].to_string(),
                        r.drift_bound[k].to_string(),
                        r.within_bound[k].to_string(),
                    ]
                })
                .collect();
            out.table = Some(Table { header: vec!["generator", "exponent", "drift", "bound", "ok"], rows });
        }
    }
    out.inputs = inputs;
    Ok(out)
}

fn sub_json(s: &SubMeasure) -> Value {
    json!({"size": s.atoms.len(), "mass": q(&s.mass()), "l2sq": q(&s.l2sq())})
}

pub fn energy(g: &Global, a: EnergyArgs) -> Res<Output> {
    let mut inputs = Inputs::new();
    let mut out = Output::default();
    if let Some(path) = &a.sets {
        let v = load(path, &mut inputs)?;
        let ctx = group_from_json(v.get("group").ok_or_else(|| CliError::input("sets file needs a \"group\""))?)?;
        let set = |key: &str| -> Res<Vec<GroupElement>> {
            let xs = v
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| CliError::input(format!("sets file needs \"{key}\"")))?;
            let mut gs = xs.iter().map(|x| element_from_json(&ctx, x)).collect::<Res<Vec<_>>>()?;
            gs.sort();
            gs.dedup();
            Ok(gs)
        };
        let (b1, b2) = (set("b1")?, set("b2")?);
        let e = mult_energy(&ctx, &b1, &b2, g.cap)?;
        let (x, y) = (b1.len() as f64, b2.len() as f64);
        let normalized = e as f64 / (x * y).powf(1.5);
        out.summary.push(format!("E(B1, B2) = {e} with |B1| = {}, |B2| = {}", b1.len(), b2.len()));
        out.summary.push(format!("E / (|B1||B2|)^(3/2) = {normalized:.6}"));
        out.report = json!({"group": ctx.name(), "b1": b1.len(), "b2": b2.len(), "energy": e.to_string(), "normalized": normalized});
    } else if let Some(path) = &a.walk {
        let walk = load_walk(path, &mut inputs)?;
        let (i, j) = match &a.window {
            Some(r) => parse_range(r, walk.len())?,
            None => (1, walk.len()),
        };
        let k = parse_rational(a.k.as_deref().expect("clap requires --k with --walk"))?;
        let mu = walk.window(i, j, StepOrder::LaterLeft, g.cap)?;
        let params = TruncationParams::new(k)?;
        let t = truncate_measure(&mu, &params);
        let b = t.middle.support();
        let e = mult_energy(walk.ctx(), &b, &b, g.cap)?;
        out.summary.push(format!(
            "window [{i}, {j}]: heavy {}, middle {}, light {} atoms; partition {}",
            t.heavy.atoms.len(),
            t.middle.atoms.len(),
            t.light.atoms.len(),
            t.partitions(&mu)
        ));
        out.summary.push(format!("E(B, B) = {e} on the middle support"));
        out.report = json!({
            "window": [i, j],
            "k": q(&params.k), "m": q(&params.m), "delta": q(&params.delta),
            "l2sq": q(&t.l2sq),
            "heavy": sub_json(&t.heavy), "middle": sub_json(&t.middle), "light": sub_json(&t.light),
            "heavy_bound_holds": t.heavy_bound_holds,
            "light_bound_holds": t.light_bound_holds,
            "partitions": t.partitions(&mu),
            "middle_energy": e.to_string(),
        });
    } else {
        return Err(CliError::usage("energy needs --sets or --walk"));
    }
    out.inputs = inputs;
    Ok(out)
}

pub fn detect(g: &Global, a: DetectArgs) -> Res<Output> {
    let mut inputs = Inputs::new();
    let walk = load_walk(&a.walk, &mut inputs)?;
    let catalog = match &a.catalog {
        Some(p) => load_catalog(p, walk.ctx(), &mut inputs)?,
        None => default_catalog(&walk),
    };
    let mut params = DetectParams::new(segment_params(g, &a.c, &a.eps, &a.tau)?);
    if let Some(k) = opt_rational(&a.kappa)? {
        params.kappa = k;
    }
    if let Some(l) = opt_rational(&a.lambda_max)? {
        params.lambda_max = l;
    }
    if let Some(l) = a.lmax {
        params.lmax = l;
    }
    let r = detect_structure(&walk, &catalog, &params)?;
    let check = verify_conclusion(&r, &walk)?;
    let opt_q = |x: &Option<Rational>| x.as_ref().map(q).unwrap_or(Value::Null);
    let report = json!({
        "segment": segment_json(&r.segment),
        "energy": {
            "b1": r.energy.b1, "b2": r.energy.b2, "energy": r.energy.energy.to_string(),
            "theta": q(&r.energy.theta), "passes": r.energy.passes,
        },
        "scores": r.scores.iter().map(|s| json!({
            "label": s.label, "hp_size": s.hp_size,
            "x0": s.x0.to_string(), "mass_mu": q(&s.mass_mu),
            "y0": s.y0.to_string(), "mass_nu": q(&s.mass_nu),
            "size_ok": s.size_ok, "passes": s.passes, "skipped": s.skipped,
        })).collect::<Vec<_>>(),
        "label": r.label,
        "hp": progression_to_json(&r.hp),
        "hp_size": r.hp_size,
        "pool_size": r.pool_size,
        "pool": r.pool_description,
        "stabilized": r.stabilized,
        "level": r.level,
        "level_sizes": r.level_sizes,
        "tree": {
            "vertices": elems(&r.tree.vertices),
            "x": elems(&r.tree.x),
            "edges": r.tree.edges.iter().map(|e| json!({
                "parent": e.parent, "child": e.child, "weight_sq": q(&e.weight_sq), "g": e.g.to_string(),
            })).collect::<Vec<_>>(),
            "cosets_exact": r.tree.cosets_exact,
            "weights_exact": r.tree.weights_exact,
            "minimax": r.tree.minimax,
            "edges_exact": r.tree.edges_exact,
            "comparable": r.tree.comparable,
        },
        "xs": elems(&r.xs),
        "xs_disjoint_exact": r.xs_disjoint_exact,
        "records": r.records.iter().map(|p| json!({
            "step": p.step, "m": p.m, "a": p.a.to_string(), "a_prime": p.a_prime.to_string(),
            "g": p.g.to_string(), "lambda": opt_q(&p.lambda), "sigma": p.sigma,
        })).collect::<Vec<_>>(),
        "max_lambda": opt_q(&r.max_lambda),
        "rho": q(&r.rho),
        "hp_rho": q(&r.hp_rho),
        "typical_threshold_sq": q(&r.typical_threshold_sq),
        "atypical": r.atypical.iter().map(|x| json!({"m": x.m, "mass": q(&x.mass)})).collect::<Vec<_>>(),
        "conclusion": {
            "ok": check.ok,
            "records_checked": check.records_checked,
            "order_bounds_checked": check.order_bounds_checked,
            "counterexample": check.counterexample,
        },
    });
    let mut summary = vec![
        format!(
            "segment [{}, {}], rho = {}",
            r.segment.j0 - r.segment.l0_star,
            r.segment.j0 + r.segment.l0_star,
            dual(&r.rho)
        ),
        format!("structure {} with |HP| = {}, |X| = {}", r.label, r.hp_size, r.xs.len()),
        match &r.max_lambda {
            Some(l) => format!("max (HP, X)-norm over {} typical pairs: {}", r.records.len(), dual(l)),
            None => format!("{} typical pair(s), some norm above lambda_max", r.records.len()),
        },
    ];
    summary.push(match &check.counterexample {
        None => format!("conclusion verified ({} records)", check.records_checked),
        Some(c) => format!("conclusion check FAILED: {c}"),
    });
    let rows = r
        .records
        .iter()
        .map(|p| {
            vec![
                p.step.to_string(),
                p.m.to_string(),
                p.a.to_string(),
                p.a_prime.to_string(),
                p.lambda.as_ref().map(|l| l.to_string()).unwrap_or_else(|| "none".into()),
            ]
        })
        .collect();
    Ok(Output {
        summary,
        report,
        table: Some(Table { header: vec!["step", "m", "a", "a_prime", "lambda"], rows }),
        inputs,
    })
}

fn sign_walk_input(a: &SignWalkArgs, inputs: &mut Inputs) -> Res<WalkSpec> {
    match (&a.walk, &a.values) {
        (Some(p), _) => load_walk(p, inputs),
        (None, Some(v)) => {
            let xs = v
                .split(',')
                .map(|s| s.trim().parse::<i64>().map_err(|_| CliError::usage(format!("bad value {s:?} in --values"))))
                .collect::<Res<Vec<_>>>()?;
            Ok(sign_walk(&xs)?)
        }
        (None, None) => Err(CliError::usage("give --walk or --values")),
    }
}

fn bound_json(b: &BoundCheck) -> Value {
    json!({
        "name": b.name, "n": b.n, "s": b.s,
        "rho": q(&b.rho),
        "bound": b.bound.as_ref().map(q).unwrap_or_else(|| json!({"approx": b.bound_approx})),
        "passes": b.passes,
        "slack": b.slack,
        "caveat": b.caveat,
        "reported": b.reported.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
    })
}

fn bound_output(b: BoundCheck, inputs: Inputs) -> Output {
    let bound = b.bound.as_ref().map(dual).unwrap_or_else(|| format!("{:.6e}", b.bound_approx));
    let mut summary = vec![
        format!("rho = {} (n = {})", dual(&b.rho), b.n),
        format!("{} bound {bound}: {} (slack {:.4})", b.name, if b.passes { "PASS" } else { "FAIL" }, b.slack),
    ];
    if let Some(c) = &b.caveat {
        summary.push(format!("note: {c}"));
    }
    let row = vec![
        b.name.clone(),
        b.n.to_string(),
        b.rho.to_string(),
        b.bound.as_ref().map(|x| x.to_string()).unwrap_or_else(|| b.bound_approx.to_string()),
        b.slack.to_string(),
        b.passes.to_string(),
    ];
    Output {
        summary,
        report: bound_json(&b),
        table: Some(Table { header: vec!["name", "n", "rho", "bound", "slack", "pass"], rows: vec![row] }),
        inputs,
    }
}

pub fn bounds(g: &Global, cmd: BoundsCommand) -> Res<Output> {
    let mut inputs = Inputs::new();
    match cmd {
        BoundsCommand::Elo(a) => {
            let walk = sign_walk_input(&a, &mut inputs)?;
            Ok(bound_output(bounds::check_elo(&walk, g.cap)?, inputs))
        }
        BoundsCommand::Ssz { walk, constant } => {
            let w = sign_walk_input(&walk, &mut inputs)?;
            Ok(bound_output(bounds::check_ssz(&w, &parse_rational(&constant)?)?, inputs))
        }
        BoundsCommand::Matrix { walk, cycle, s, delta } => {
            let w = match (walk, cycle) {
                (Some(p), _) => load_walk(&p, &mut inputs)?,
                (None, Some(n)) => bounds::cycle_matrix_walk(s as usize, n)?,
                (None, None) => return Err(CliError::usage("give --walk or --cycle")),
            };
            Ok(bound_output(bounds::check_matrix_elo(&w, s, &parse_rational(&delta)?, g.cap)?, inputs))
        }
        BoundsCommand::Sharpness { n } => {
            let ex = bounds::sharpness_examples(n)?;
            let inv_n = Rational::new(1.into(), (n as i64).into());
            let sub_ok = ex.subgroup_rho >= inv_n;
            let one = Rational::from_integer(1.into());
            let inv_ok = ex.involutions_rho == one;
            let summary = vec![
                format!("Z/{n}, steps uniform on {{0, 1}}: rho = {} >= 1/n: {sub_ok}", dual(&ex.subgroup_rho)),
                format!("{n} distinct commuting involutions: rho = {}", dual(&ex.involutions_rho)),
            ];
            let report = json!({
                "n": n,
                "subgroup": {"walk": walk_to_json(&ex.subgroup), "rho": q(&ex.subgroup_rho), "lower_bound": q(&inv_n), "holds": sub_ok},
                "involutions": {"walk": walk_to_json(&ex.involutions), "rho": q(&ex.involutions_rho), "holds": inv_ok},
            });
            let rows = vec![
                vec![
                    "subgroup".into(),
                    n.to_string(),
                    ex.subgroup_rho.to_string(),
                    inv_n.to_string(),
                    (to_f64(&ex.subgroup_rho) * n as f64).to_string(),
                    sub_ok.to_string(),
                ],
                vec![
                    "involutions".into(),
                    n.to_string(),
                    ex.involutions_rho.to_string(),
                    "1".into(),
                    "1".into(),
                    inv_ok.to_string(),
                ],
            ];
            Ok(Output {
                summary,
                report,
                table: Some(Table { header: vec!["name", "n", "rho", "bound", "slack", "pass"], rows }),
                inputs,
            })
        }
    }
}

fn eps_from_json(v: &Value) -> Res<EpsDistribution> {
    let atoms = v
        .get("atoms")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::input("distribution needs an \"atoms\" array"))?;
    atoms
        .iter()
        .map(|a| {
            let x = rational_from_json(a.get("value").ok_or_else(|| CliError::input("atom needs \"value\""))?)?;
            let w = rational_from_json(a.get("w").ok_or_else(|| CliError::input("atom needs \"w\""))?)?;
            Ok((x, w))
        })
        .collect()
}

/// Half the largest `a > 0` with `a` and `-a` both in the support.
fn default_gamma(d: &EpsDistribution) -> Option<Rational> {
    d.iter()
        .filter(|(a, _)| a.is_positive() && d.iter().any(|(b, _)| *b == -a))
        .map(|(a, _)| a.clone())
        .max()
        .map(|a| a / Rational::from_integer(2.into()))
}

pub fn anderson(g: &Global, a: AndersonArgs) -> Res<Output> {
    let mut inputs = Inputs::new();
    let e = parse_rational(&a.e)?;
    let lambda = parse_rational(&a.lambda)?;
    let eps: Vec<EpsDistribution> = match &a.dist {
        Some(p) => {
            let v = load(p, &mut inputs)?;
            if let Some(steps) = v.get("steps").and_then(Value::as_array) {
                let mut all = steps.iter().map(eps_from_json).collect::<Res<Vec<_>>>()?;
                if let Some(n) = a.n {
                    if n > all.len() {
                        return Err(CliError::input(format!("--n {n} exceeds the {} steps in the file", all.len())));
                    }
                    all.truncate(n);
                }
                all
            } else {
                vec![eps_from_json(&v)?; a.n.unwrap_or(16)]
            }
        }
        None => {
            let half = Rational::new(1.into(), 2.into());
            let one = Rational::from_integer(1.into());
            vec![vec![(one.clone(), half.clone()), (-one, half)]; a.n.unwrap_or(16)]
        }
    };
    if eps.is_empty() {
        return Err(CliError::input("no steps"));
    }
    let gamma = match opt_rational(&a.gamma)? {
        Some(x) => x,
        None => {
            default_gamma(&eps[0]).ok_or_else(|| CliError::input("the first step has no pair {a, -a}; pass --gamma"))?
        }
    };
    let window = a.window.unwrap_or(eps.len());
    let spec = TransferSpec::new(e.clone(), lambda.clone(), gamma.clone(), Rational::zero(), eps, window)?;
    let mode = match a.mode {
        Mode::Exact => AndersonMode::Exact { cap: g.cap },
        Mode::Mc => AndersonMode::MonteCarlo { trials: a.trials, seed: g.seed },
    };
    let prof = sl2::anderson_concentration(&spec, mode)?;
    // The free-ball check uses twice gamma, the pair value the hypothesis is stated with.
    let pair = sl2::commutator_pair(&e, &lambda, &(&gamma * Rational::from_integer(2.into())))?;
    let free = sl2::free_ball_check(&pair.h1p, &pair.h2p, a.free_k, g.cap)?;

    let slopes: Vec<Option<f64>> = prof
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let prev = k.checked_sub(1).map(|k| &prof.points[k])?;
            (p.value > 0.0 && prev.value > 0.0)
                .then(|| (p.value.ln() - prev.value.ln()) / ((p.n as f64).ln() - (prev.n as f64).ln()))
        })
        .collect();
    let mut summary = vec![];
    if let Some(last) = prof.points.last() {
        let v = match &last.exact {
            Some(r) => format!("rho({}) = {}", last.n, dual(r)),
            None => format!("rho({}) ~ {:.6e} (collision estimate)", last.n, last.value),
        };
        summary.push(v);
    }
    if let Some(f) = &prof.fit {
        summary.push(format!("log-log slope {:.4} (R^2 {:.4}); {}", f.slope, f.r2, prof.caveat));
    }
    summary.push(format!(
        "pair hypothesis (gamma = {gamma}, window {}): {}",
        prof.gamma.window,
        if prof.gamma.ok { "holds" } else { "fails" }
    ));
    summary.push(format!(
        "k0 = {}, <h1', h2'> ball sizes {:?}: {}",
        pair.k0,
        free.sizes,
        if free.free { "free up to the checked radius" } else { "relation found" }
    ));
    let report = json!({
        "E": q(&e), "lambda": q(&lambda), "gamma": q(&gamma),
        "mode": format!("{:?}", a.mode),
        "points": prof.points.iter().map(|p| json!({
            "n": p.n, "value": p.value,
            "exact": p.exact.as_ref().map(q),
            "max_bin": p.max_bin, "young_ok": p.young_ok, "support": p.support,
        })).collect::<Vec<_>>(),
        "fit": fit_json(&prof.fit),
        "caveat": prof.caveat,
        "pair_hypothesis": {
            "window": prof.gamma.window, "good_steps": prof.gamma.good_steps,
            "first_failure": prof.gamma.first_failure, "ok": prof.gamma.ok,
        },
        "commutators": {
            "h1": pair.h1.to_string(), "h2": pair.h2.to_string(),
            "k0": pair.k0, "h1p": pair.h1p.to_string(), "h2p": pair.h2p.to_string(), "mu": q(&pair.mu),
            "ball_radius_bound": sl2::ball_radius_bound(pair.k0, a.free_k),
        },
        "free_ball": {
            "sizes": free.sizes,
            "free_sizes": free.free_sizes.iter().map(u128::to_string).collect::<Vec<_>>(),
            "free": free.free, "first_relation": free.first_relation, "hypothesis_met": free.hypothesis_met,
        },
    });
    let rows = prof
        .points
        .iter()
        .zip(&slopes)
        .map(|(p, s)| {
            let v = p.exact.as_ref().map(|r| r.to_string()).unwrap_or_else(|| p.value.to_string());
            vec![p.n.to_string(), v, s.map(|s| s.to_string()).unwrap_or_default()]
        })
        .collect();
    Ok(Output {
        summary,
        report,
        table: Some(Table { header: vec!["n", "rho_or_estimate", "log_slope"], rows }),
        inputs,
    })
}

pub fn validate(g: &Global, a: ValidateArgs) -> Res<Output> {
    let mut inputs = Inputs::new();
    let mut out = Output::default();
    let mut report = serde_json::Map::new();
    let mut failed = Vec::new();
    if let Some(p) = &a.walk {
        let walk = load_walk(p, &mut inputs)?;
        let r = walk.validate_p0();
        out.summary.push(format!("walk: {} steps in {}, p0 = {}", walk.len(), walk.ctx().name(), walk.p0()));
        for (i, x, w) in &r.offending {
            out.summary.push(format!("step {i}: weight {w} at {x} is at most p0"));
        }
        if !r.ok {
            failed.push("walk violates the p0 floor");
        }
        report.insert(
            "walk".into(),
            json!({
                "group": walk.ctx().name(),
                "n": walk.len(),
                "p0": q(walk.p0()),
                "p0_ok": r.ok,
                "offending": r.offending.iter().map(|(i, x, w)| json!({"step": i, "elem": x.to_string(), "w": q(w)})).collect::<Vec<_>>(),
                "supports": walk.steps().iter().map(|m| m.len()).collect::<Vec<_>>(),
            }),
        );
    }
    if let Some(p) = &a.prog {
        let hp = load_prog(p, &mut inputs)?;
        let prog = hp.progression();
        let step_ok = prog.step().map(|s| prog.step_violation(s).is_none());
        out.summary.push(format!(
            "progression: rank {} in {}, |H| = {}, step {}",
            prog.rank(),
            hp.ctx().name(),
            hp.h().len().max(1),
            prog.step().map(|s| s.to_string()).unwrap_or_else(|| "unspecified".into())
        ));
        let cert = match prog.constant() {
            Some(c) => Some(verify_c_normal_form(prog, c, g.cap)?),
            None => None,
        };
        if let Some(c) = &cert {
            out.summary.push(format!("C = {}: normal form {}", c.c, if c.is_valid() { "valid" } else { "INVALID" }));
            if !c.is_valid() {
                failed.push("progression is not in C-normal form");
            }
        }
        report.insert(
            "progression".into(),
            json!({
                "normalized": progression_to_json(&hp),
                "step_ok": step_ok,
                "certificate": cert.as_ref().map(cert_json),
            }),
        );
    }
    if a.walk.is_none() && a.prog.is_none() {
        return Err(CliError::usage("validate needs --walk or --prog"));
    }
    if !failed.is_empty() {
        return Err(CliError::input(failed.join("; ")));
    }
    out.summary.push("ok".into());
    out.report = Value::Object(report);
    out.inputs = inputs;
    Ok(out)
}
