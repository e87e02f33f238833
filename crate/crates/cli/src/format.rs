//! Text and JSON encodings of groups, elements, walks and progressions.

use std::path::Path;

use nilwalk::group::Mat2;
use nilwalk::nilprog::{CosetNilprogression, Progression};
use nilwalk::structure::Candidate;
use nilwalk::{GroupContext, GroupElement, Measure, Rational, WalkSpec};
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::CliError;

type Res<T> = Result<T, CliError>;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::input(msg)
}

/// Parsed element text: a number or a bracketed list.
#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    Num(Rational),
    List(Vec<Tree>),
}

pub fn parse_rational(s: &str) -> Res<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: num_bigint::BigInt = n.parse().map_err(|_| bad(format!("not a rational: {s:?}")))?;
    let d: num_bigint::BigInt = d.parse().map_err(|_| bad(format!("not a rational: {s:?}")))?;
    if d.is_zero() {
        return Err(bad(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

pub fn parse_tree(s: &str) -> Res<Tree> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    let t = tree_at(&chars, &mut pos)?;
    if pos != chars.len() {
        return Err(bad(format!("trailing input in element {s:?}")));
    }
    Ok(t)
}

fn tree_at(c: &[char], pos: &mut usize) -> Res<Tree> {
    match c.get(*pos) {
        Some(&open @ ('[' | '(')) => {
            let close = if open == '[' { ']' } else { ')' };
            *pos += 1;
            let mut items = Vec::new();
            if c.get(*pos) == Some(&close) {
                *pos += 1;
                return Ok(Tree::List(items));
            }
            loop {
                items.push(tree_at(c, pos)?);
                match c.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(&x) if x == close => {
                        *pos += 1;
                        return Ok(Tree::List(items));
                    }
                    _ => return Err(bad("unbalanced brackets in element")),
                }
            }
        }
        Some(_) => {
            let start = *pos;
            while c.get(*pos).is_some_and(|x| x.is_ascii_digit() || matches!(x, '-' | '+' | '/')) {
                *pos += 1;
            }
            let tok: String = c[start..*pos].iter().collect();
            Ok(Tree::Num(parse_rational(&tok)?))
        }
        None => Err(bad("empty element")),
    }
}

pub fn tree_from_json(v: &Value) -> Res<Tree> {
    match v {
        Value::String(s) => parse_tree(s),
        Value::Number(n) => parse_rational(&n.to_string()).map(Tree::Num),
        Value::Array(xs) => xs.iter().map(tree_from_json).collect::<Res<Vec<_>>>().map(Tree::List),
        _ => Err(bad(format!("cannot read an element from {v}"))),
    }
}

fn int_of(t: &Tree) -> Res<i64> {
    match t {
        Tree::Num(q) if q.is_integer() => q.to_integer().to_i64().ok_or_else(|| bad("integer out of range")),
        _ => Err(bad("expected an integer")),
    }
}

fn list_of(t: &Tree) -> Res<&[Tree]> {
    match t {
        Tree::List(xs) => Ok(xs),
        Tree::Num(_) => Err(bad("expected a list")),
    }
}

fn rows(t: &Tree, n: usize) -> Res<Vec<&[Tree]>> {
    let r = list_of(t)?;
    if r.len() != n {
        return Err(bad(format!("expected {n} rows")));
    }
    r.iter()
        .map(|row| {
            let row = list_of(row)?;
            if row.len() != n {
                return Err(bad(format!("expected {n} entries per row")));
            }
            Ok(row)
        })
        .collect()
}

pub fn element_from_tree(ctx: &GroupContext, t: &Tree) -> Res<GroupElement> {
    let g = match ctx {
        GroupContext::Cyclic { modulus } => GroupElement::Residue(int_of(t)?.rem_euclid(*modulus as i64) as u64),
        GroupContext::Lattice { dim } => match t {
            Tree::Num(_) if *dim == 1 => GroupElement::Vector(vec![int_of(t)?]),
            _ => GroupElement::Vector(list_of(t)?.iter().map(int_of).collect::<Res<_>>()?),
        },
        GroupContext::Symmetric { .. } => {
            let imgs = list_of(t)?.iter().map(int_of).collect::<Res<Vec<_>>>()?;
            let perm = imgs
                .into_iter()
                .map(|x| u32::try_from(x - 1).map_err(|_| bad("permutation images are 1-based")))
                .collect::<Res<_>>()?;
            GroupElement::Perm(perm)
        }
        GroupContext::Heisenberg => {
            let xs = list_of(t)?;
            if xs.len() == 3 && xs.iter().all(|x| matches!(x, Tree::Num(_))) {
                GroupElement::Heisenberg([int_of(&xs[0])?, int_of(&xs[1])?, int_of(&xs[2])?])
            } else {
                let m = rows(t, 3)?;
                let e = |r: usize, c: usize| int_of(&m[r][c]);
                if (e(0, 0)?, e(1, 0)?, e(1, 1)?, e(2, 0)?, e(2, 1)?, e(2, 2)?) != (1, 0, 1, 0, 0, 1) {
                    return Err(bad("Heisenberg elements are upper unitriangular 3x3 matrices"));
                }
                GroupElement::Heisenberg([e(0, 1)?, e(1, 2)?, e(0, 2)?])
            }
        }
        GroupContext::IntegerMatrix { dim } => {
            let m = rows(t, *dim)?;
            GroupElement::IntMatrix(m.iter().flat_map(|r| r.iter()).map(int_of).collect::<Res<_>>()?)
        }
        GroupContext::RationalMatrix2 => {
            let m = rows(t, 2)?;
            let q = |r: usize, c: usize| match &m[r][c] {
                Tree::Num(x) => Ok(x.clone()),
                Tree::List(_) => Err(bad("matrix entries are numbers")),
            };
            GroupElement::RatMatrix(Mat2::new([q(0, 0)?, q(0, 1)?, q(1, 0)?, q(1, 1)?]))
        }
    };
    ctx.validate(&g)?;
    Ok(g)
}

pub fn parse_element(ctx: &GroupContext, s: &str) -> Res<GroupElement> {
    element_from_tree(ctx, &parse_tree(s)?)
}

pub fn element_from_json(ctx: &GroupContext, v: &Value) -> Res<GroupElement> {
    element_from_tree(ctx, &tree_from_json(v)?)
}

/// A list of elements given as text, e.g. `[[1,0],[0,1]]` for two lattice(2) vectors.
pub fn parse_element_list(ctx: &GroupContext, s: &str) -> Res<Vec<GroupElement>> {
    list_of(&parse_tree(s)?)?.iter().map(|t| element_from_tree(ctx, t)).collect()
}

/// `{"kind": "cyclic", "modulus": 12}` or the short name `cyclic(12)`.
pub fn group_from_json(v: &Value) -> Res<GroupContext> {
    if let Value::String(s) = v {
        return parse_group(s);
    }
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| bad("group needs a \"kind\""))?;
    let num = |key: &str| -> Res<u64> {
        v.get(key).and_then(Value::as_u64).ok_or_else(|| bad(format!("group {kind} needs \"{key}\"")))
    };
    let ctx = match kind {
        "cyclic" => GroupContext::cyclic(num("modulus")?)?,
        "lattice" => GroupContext::lattice(num("dim")? as usize)?,
        "symmetric" => GroupContext::symmetric(num("degree")? as usize)?,
        "heisenberg" => GroupContext::Heisenberg,
        "integer-matrix" => GroupContext::integer_matrix(num("dim")? as usize)?,
        "rational-matrix-2" => GroupContext::RationalMatrix2,
        other => return Err(bad(format!("unknown group kind {other:?}"))),
    };
    Ok(ctx)
}

pub fn parse_group(s: &str) -> Res<GroupContext> {
    let s = s.trim();
    let (kind, arg) = match s.split_once('(') {
        Some((k, rest)) => (k, Some(rest.strip_suffix(')').ok_or_else(|| bad(format!("bad group {s:?}")))?)),
        None => (s, None),
    };
    let arg = |name: &str| -> Res<u64> {
        arg.and_then(|a| a.trim().parse().ok()).ok_or_else(|| bad(format!("group {name} needs a size, e.g. {name}(4)")))
    };
    Ok(match kind {
        "cyclic" => GroupContext::cyclic(arg(kind)?)?,
        "lattice" => GroupContext::lattice(arg(kind)? as usize)?,
        "symmetric" => GroupContext::symmetric(arg(kind)? as usize)?,
        "heisenberg" => GroupContext::Heisenberg,
        "integer-matrix" => GroupContext::integer_matrix(arg(kind)? as usize)?,
        "rational-matrix-2" => GroupContext::RationalMatrix2,
        _ => return Err(bad(format!("unknown group {s:?}"))),
    })
}

pub fn group_to_json(ctx: &GroupContext) -> Value {
    match ctx {
        GroupContext::Cyclic { modulus } => json!({"kind": "cyclic", "modulus": modulus}),
        GroupContext::Lattice { dim } => json!({"kind": "lattice", "dim": dim}),
        GroupContext::Symmetric { degree } => json!({"kind": "symmetric", "degree": degree}),
        GroupContext::Heisenberg => json!({"kind": "heisenberg"}),
        GroupContext::IntegerMatrix { dim } => json!({"kind": "integer-matrix", "dim": dim}),
        GroupContext::RationalMatrix2 => json!({"kind": "rational-matrix-2"}),
    }
}

pub fn rational_from_json(v: &Value) -> Res<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => parse_rational(&n.to_string()),
        _ => Err(bad(format!("expected a rational string \"p/q\", got {v}"))),
    }
}

pub fn read_json(path: &Path) -> Res<(Value, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let v = serde_json::from_slice(&bytes).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    Ok((v, bytes))
}

/// `{"atoms": [{"elem": .., "w": "p/q"}, ..]}`, optionally with `"repeat": k`.
fn step_from_json(ctx: &GroupContext, v: &Value) -> Res<(Measure, usize)> {
    let atoms = v.get("atoms").and_then(Value::as_array).ok_or_else(|| bad("step needs an \"atoms\" array"))?;
    let list = atoms
        .iter()
        .map(|a| {
            let g = element_from_json(ctx, a.get("elem").ok_or_else(|| bad("atom needs \"elem\""))?)?;
            let w = rational_from_json(a.get("w").ok_or_else(|| bad("atom needs \"w\""))?)?;
            Ok((g, w))
        })
        .collect::<Res<Vec<_>>>()?;
    let repeat = match v.get("repeat") {
        None => 1,
        Some(r) => r.as_u64().filter(|&r| r > 0).ok_or_else(|| bad("\"repeat\" must be a positive integer"))? as usize,
    };
    Ok((Measure::from_atoms(ctx, list)?, repeat))
}

pub fn walk_from_json(v: &Value) -> Res<WalkSpec> {
    let ctx = group_from_json(v.get("group").ok_or_else(|| bad("walk needs a \"group\""))?)?;
    let p0 = match v.get("p0") {
        Some(p) => rational_from_json(p)?,
        None => Rational::zero(),
    };
    let steps_json = v.get("steps").and_then(Value::as_array).ok_or_else(|| bad("walk needs a \"steps\" array"))?;
    let mut steps = Vec::new();
    for (i, s) in steps_json.iter().enumerate() {
        let (m, k) = step_from_json(&ctx, s).map_err(|e| e.prefix(format!("step entry {}", i + 1)))?;
        steps.extend(std::iter::repeat_n(m, k));
    }
    Ok(WalkSpec::new(&ctx, steps, p0)?)
}

pub fn walk_to_json(w: &WalkSpec) -> Value {
    let steps: Vec<Value> = w
        .steps()
        .iter()
        .map(|m| json!({"atoms": m.atoms().iter().map(|(g, p)| json!({"elem": g.to_string(), "w": p.to_string()})).collect::<Vec<_>>()}))
        .collect();
    json!({"group": group_to_json(w.ctx()), "p0": w.p0().to_string(), "steps": steps})
}

/// Progression file; `default_group` is used when the file has no `"group"`.
pub fn progression_from_json(v: &Value, default_group: Option<&GroupContext>) -> Res<CosetNilprogression> {
    let ctx = match (v.get("group"), default_group) {
        (Some(g), _) => group_from_json(g)?,
        (None, Some(g)) => g.clone(),
        (None, None) => return Err(bad("progression needs a \"group\"")),
    };
    let arr = |key: &str| v.get(key).and_then(Value::as_array).cloned().unwrap_or_default();
    let gens = arr("generators").iter().map(|g| element_from_json(&ctx, g)).collect::<Res<Vec<_>>>()?;
    let lengths = arr("lengths").iter().map(rational_from_json).collect::<Res<Vec<_>>>()?;
    let mut p = Progression::new(&ctx, gens, lengths)?;
    if let Some(s) = v.get("step") {
        p = p.with_step(s.as_u64().ok_or_else(|| bad("\"step\" must be an integer"))? as usize)?;
    }
    if let Some(c) = v.get("C") {
        p = p.with_constant(rational_from_json(c)?);
    }
    let h = arr("H").iter().map(|g| element_from_json(&ctx, g)).collect::<Res<Vec<_>>>()?;
    Ok(CosetNilprogression::new(p, h)?)
}

pub fn progression_to_json(hp: &CosetNilprogression) -> Value {
    let p = hp.progression();
    let mut v = json!({
        "group": group_to_json(hp.ctx()),
        "generators": p.generators().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "lengths": p.lengths().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "H": hp.h().iter().map(ToString::to_string).collect::<Vec<_>>(),
    });
    if let Some(s) = p.step() {
        v["step"] = json!(s);
    }
    if let Some(c) = p.constant() {
        v["C"] = json!(c.to_string());
    }
    v
}

/// A catalog file (`[{"label": .., <progression fields>}, ..]` or `{"candidates": [..]}`)
/// or a directory of progression files labelled by file stem.
pub fn load_catalog(path: &Path, ctx: &GroupContext, digests: &mut Vec<(String, Vec<u8>)>) -> Res<Vec<Candidate>> {
    let mut out = Vec::new();
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for f in files {
            let (v, bytes) = read_json(&f)?;
            digests.push((f.display().to_string(), bytes));
            let label = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            out.push(Candidate::new(label, progression_from_json(&v, Some(ctx))?));
        }
        return Ok(out);
    }
    let (v, bytes) = read_json(path)?;
    digests.push((path.display().to_string(), bytes));
    let list = match &v {
        Value::Array(xs) => xs.clone(),
        _ => v
            .get("candidates")
            .and_then(Value::as_array)
            .cloned()
            .ok_or_else(|| bad("catalog needs a \"candidates\" array"))?,
    };
    for (i, c) in list.iter().enumerate() {
        let label =
            c.get("label").and_then(Value::as_str).map(String::from).unwrap_or_else(|| format!("candidate {}", i + 1));
        out.push(Candidate::new(label, progression_from_json(c, Some(ctx))?));
    }
    Ok(out)
}
