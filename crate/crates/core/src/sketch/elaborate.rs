use std::collections::{BTreeSet, HashMap, VecDeque};

use super::ast::{BinOp, Command, Expr, Program};
use super::eval::{eval_expr, Scope};
use super::lexer::Pos;
use super::SketchError;
use crate::family::{Branch, Family, Formula, Hole, HoleId, StateLabels, Target};
use crate::model::StateId;

pub const DEFAULT_MAX_STATES: usize = 1_000_000;
const MAX_STATES_ENV: &str = "CHAINSYNTH_MAX_STATES";
const PROB_TOLERANCE: f64 = 1e-9;
const BREAKPOINT_MERGE: f64 = 1e-12;

/// Exploration bound, from `CHAINSYNTH_MAX_STATES` when set.
pub fn max_states_from_env() -> usize {
    std::env::var(MAX_STATES_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_STATES)
}

pub fn elaborate(prog: &Program) -> Result<Family, SketchError> {
    elaborate_with(prog, max_states_from_env())
}

struct Cmd<'a> {
    cmd: &'a Command,
    /// Kept (nonzero) branches: original index and probability.
    branches: Vec<(usize, f64)>,
    update_holes: BTreeSet<HoleId>,
}

/// Successor temp ids of one hole combination, with the command used.
struct Outcome {
    cmd: usize,
    succ: Vec<usize>,
}

struct StateRec {
    holes: Vec<HoleId>,
    outcomes: Vec<Outcome>,
}

/// Builds the family of a sketch: explores all valuations reachable when
/// each hole may take any option, and turns each enabled command into
/// branches whose successor tables range over the holes they mention.
pub fn elaborate_with(prog: &Program, max_states: usize) -> Result<Family, SketchError> {
    let vars: Vec<String> = prog.module.vars.iter().map(|v| v.name.clone()).collect();
    let hole_index = |name: &str| prog.hole(name).map(|(i, _)| i).expect("checked by parser");
    let option_counts: Vec<usize> = prog.holes.iter().map(|h| h.options.len()).collect();

    let mut cmds = Vec::with_capacity(prog.module.commands.len());
    let mut guard_holes = BTreeSet::new();
    for c in &prog.module.commands {
        guard_holes.extend(c.guard.holes().iter().map(|h| hole_index(h)));
        let mut update_holes = BTreeSet::new();
        for b in &c.branches {
            for u in &b.updates {
                update_holes.extend(u.expr.holes().iter().map(|h| hole_index(h)));
            }
        }
        cmds.push(Cmd {
            cmd: c,
            branches: branch_probabilities(c)?,
            update_holes,
        });
    }
    let guard_holes: Vec<HoleId> = guard_holes.into_iter().collect();

    let init: Vec<i64> = prog.module.vars.iter().map(|v| v.initial()).collect();
    let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut valuations: Vec<Vec<i64>> = Vec::new();
    let mut recs: Vec<StateRec> = Vec::new();
    ids.insert(init.clone(), 0);
    valuations.push(init);
    let mut queue = VecDeque::from([0usize]);
    let mut assignment: Vec<Option<usize>> = vec![None; prog.holes.len()];

    while let Some(id) = queue.pop_front() {
        let val = valuations[id].clone();
        let describe = |assignment: &[Option<usize>]| describe_state(prog, &vars, &val, assignment);

        // which command is enabled under each guard-hole combination
        let guard_combos = combos(&guard_holes, &option_counts);
        let mut enabled_by_combo = Vec::with_capacity(guard_combos.len());
        for g in &guard_combos {
            assignment.iter_mut().for_each(|a| *a = None);
            for (&h, &o) in guard_holes.iter().zip(g) {
                assignment[h] = Some(o);
            }
            let scope = Scope {
                variables: &vars,
                valuation: &val,
                holes: &prog.holes,
                assignment: &assignment,
            };
            let mut enabled = None;
            for (ci, c) in cmds.iter().enumerate() {
                let on = eval_expr(&c.cmd.guard, &scope)
                    .and_then(|v| v.as_bool())
                    .map_err(|e| at(c.cmd.pos, e))?;
                if on {
                    if let Some(prev) = enabled {
                        let prev: &Cmd = &cmds[prev];
                        return Err(SketchError::OverlappingGuards {
                            state: describe(&assignment),
                            first: prev.cmd.pos,
                            second: c.cmd.pos,
                        });
                    }
                    enabled = Some(ci);
                }
            }
            match enabled {
                Some(ci) => enabled_by_combo.push(ci),
                None => {
                    return Err(SketchError::NoEnabledCommand {
                        state: describe(&assignment),
                    })
                }
            }
        }

        let mut relevant: BTreeSet<HoleId> = guard_holes.iter().copied().collect();
        for &ci in &enabled_by_combo {
            relevant.extend(cmds[ci].update_holes.iter().copied());
        }
        let relevant: Vec<HoleId> = relevant.into_iter().collect();

        let mut outcomes = Vec::new();
        for combo in combos(&relevant, &option_counts) {
            assignment.iter_mut().for_each(|a| *a = None);
            for (&h, &o) in relevant.iter().zip(&combo) {
                assignment[h] = Some(o);
            }
            let gidx = guard_holes.iter().fold(0usize, |acc, &h| {
                acc * option_counts[h] + assignment[h].expect("guard hole assigned")
            });
            let ci = enabled_by_combo[gidx];
            let scope = Scope {
                variables: &vars,
                valuation: &val,
                holes: &prog.holes,
                assignment: &assignment,
            };
            let cmd = &cmds[ci];
            let mut succ = Vec::with_capacity(cmd.branches.len());
            for &(bi, _) in &cmd.branches {
                let mut next = val.clone();
                for u in &cmd.cmd.branches[bi].updates {
                    let k = vars
                        .iter()
                        .position(|v| *v == u.var)
                        .expect("checked by parser");
                    let v = eval_expr(&u.expr, &scope)
                        .and_then(|v| v.as_int())
                        .map_err(|e| at(cmd.cmd.pos, e))?;
                    let decl = &prog.module.vars[k];
                    if v < decl.lo || v > decl.hi {
                        return Err(SketchError::OutOfBounds {
                            pos: cmd.cmd.pos,
                            var: u.var.clone(),
                            value: v,
                            state: describe(&assignment),
                        });
                    }
                    next[k] = v;
                }
                let nid = match ids.get(&next) {
                    Some(&i) => i,
                    None => {
                        let i = valuations.len();
                        if i >= max_states {
                            return Err(SketchError::TooManyStates { bound: max_states });
                        }
                        ids.insert(next.clone(), i);
                        valuations.push(next);
                        queue.push_back(i);
                        i
                    }
                };
                succ.push(nid);
            }
            outcomes.push(Outcome { cmd: ci, succ });
        }
        debug_assert_eq!(recs.len(), id);
        recs.push(StateRec {
            holes: relevant,
            outcomes,
        });
    }

    // number states by sorted valuation
    let mut order: Vec<usize> = (0..valuations.len()).collect();
    order.sort_by(|&a, &b| valuations[a].cmp(&valuations[b]));
    let mut index = vec![0; valuations.len()];
    for (new, &old) in order.iter().enumerate() {
        index[old] = new;
    }

    let mut transitions = Vec::with_capacity(order.len());
    for &old in &order {
        transitions.push(state_branches(&recs[old], &cmds, &option_counts, &index));
    }

    let holes: Vec<Hole> = prog
        .holes
        .iter()
        .map(|h| {
            Hole::new(
                h.name.clone(),
                h.options.iter().map(|o| o.label()).collect(),
            )
            .with_costs(h.options.iter().map(|o| o.cost.unwrap_or(0)).collect())
        })
        .collect();
    let constraints = prog
        .constraints
        .iter()
        .map(|c| {
            to_formula(prog, &c.formula).map_err(|msg| SketchError::Semantic { pos: c.pos, msg })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let labels = StateLabels {
        variables: vars,
        valuations: order.iter().map(|&o| valuations[o].clone()).collect(),
    };
    Ok(Family::new(index[0], transitions, holes)?
        .with_constraints(constraints)?
        .with_labels(labels)?)
}

fn at(pos: Pos, e: SketchError) -> SketchError {
    match e {
        SketchError::Eval(msg) => SketchError::Semantic { pos, msg },
        other => other,
    }
}

fn describe_state(
    prog: &Program,
    vars: &[String],
    val: &[i64],
    assignment: &[Option<usize>],
) -> String {
    let mut parts: Vec<String> = vars
        .iter()
        .zip(val)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    for (h, a) in assignment.iter().enumerate() {
        if let Some(o) = a {
            parts.push(format!(
                "@{}@={}",
                prog.holes[h].name,
                prog.holes[h].options[*o].label()
            ));
        }
    }
    parts.join(", ")
}

/// Constant probabilities of a command's branches, zero branches dropped.
fn branch_probabilities(c: &Command) -> Result<Vec<(usize, f64)>, SketchError> {
    if c.branches.len() > 1 && c.branches.iter().any(|b| b.prob.is_none()) {
        return Err(SketchError::Semantic {
            pos: c.pos,
            msg: "every branch of a multi-branch command needs a probability".into(),
        });
    }
    let mut out = Vec::new();
    let mut sum = 0.0;
    for (i, b) in c.branches.iter().enumerate() {
        let p = match &b.prob {
            None => 1.0,
            Some(e) => {
                if !e.holes().is_empty() || !e.variables().is_empty() {
                    return Err(SketchError::NonConstantProbability { pos: c.pos });
                }
                let p = eval_expr(e, &Scope::variables_only(&[], &[]))
                    .and_then(|v| v.as_real())
                    .map_err(|e| at(c.pos, e))?;
                if !(0.0..=1.0 + PROB_TOLERANCE).contains(&p) {
                    return Err(SketchError::Semantic {
                        pos: c.pos,
                        msg: format!("probability {p} outside [0, 1]"),
                    });
                }
                p
            }
        };
        sum += p;
        if p > 0.0 {
            out.push((i, p));
        }
    }
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(SketchError::ProbabilitySum { pos: c.pos, sum });
    }
    Ok(out)
}

/// All option combinations of `holes` in mixed-radix order.
fn combos(holes: &[HoleId], counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; holes.len()];
    loop {
        out.push(cur.clone());
        let mut k = holes.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < counts[holes[k]] {
                break;
            }
            cur[k] = 0;
        }
    }
}

fn state_branches(rec: &StateRec, cmds: &[Cmd], counts: &[usize], index: &[usize]) -> Vec<Branch> {
    let first = rec.outcomes[0].cmd;
    let probs = |ci: usize| {
        cmds[ci]
            .branches
            .iter()
            .map(|&(_, p)| p)
            .collect::<Vec<f64>>()
    };
    let shared = rec
        .outcomes
        .iter()
        .all(|o| o.cmd == first || probs(o.cmd) == probs(first));
    if shared {
        return probs(first)
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                let table = rec.outcomes.iter().map(|o| index[o.succ[k]]).collect();
                Branch {
                    prob: p,
                    target: reduce(&rec.holes, table, counts),
                }
            })
            .collect();
    }

    // probability vectors differ across combinations: split [0, 1] at every
    // cumulative breakpoint and resolve each segment per combination
    let cumulative: Vec<Vec<f64>> = rec
        .outcomes
        .iter()
        .map(|o| {
            let mut acc = 0.0;
            let mut c: Vec<f64> = probs(o.cmd)
                .into_iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            *c.last_mut().expect("nonempty command") = 1.0;
            c
        })
        .collect();
    let mut points: Vec<f64> = cumulative.iter().flatten().copied().collect();
    points.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = Vec::new();
    for p in points {
        if cuts.last().is_none_or(|&q| p - q > BREAKPOINT_MERGE) {
            cuts.push(p);
        }
    }
    *cuts.last_mut().expect("nonempty") = 1.0;
    let mut out = Vec::new();
    let mut lo = 0.0;
    for &hi in &cuts {
        let mid = (lo + hi) / 2.0;
        let table = rec
            .outcomes
            .iter()
            .zip(&cumulative)
            .map(|(o, cum)| {
                let k = cum.iter().position(|&c| c > mid).unwrap_or(cum.len() - 1);
                index[o.succ[k]]
            })
            .collect();
        out.push(Branch {
            prob: hi - lo,
            target: reduce(&rec.holes, table, counts),
        });
        lo = hi;
    }
    out
}

/// Drops the holes a successor table does not depend on.
fn reduce(holes: &[HoleId], table: Vec<StateId>, counts: &[usize]) -> Target {
    let dims: Vec<usize> = holes.iter().map(|&h| counts[h]).collect();
    let mut strides = vec![1usize; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * dims[j + 1];
    }
    let depends: Vec<bool> = (0..dims.len())
        .map(|j| {
            (0..table.len()).any(|c| {
                let digit = (c / strides[j]) % dims[j];
                table[c] != table[c - digit * strides[j]]
            })
        })
        .collect();
    let kept: Vec<usize> = (0..dims.len()).filter(|&j| depends[j]).collect();
    if kept.is_empty() {
        return Target::Fixed(table[0]);
    }
    let kept_dims: Vec<usize> = kept.iter().map(|&j| dims[j]).collect();
    let size: usize = kept_dims.iter().product();
    let mut projected = Vec::with_capacity(size);
    for mut c in 0..size {
        let mut full = 0;
        for (i, &j) in kept.iter().enumerate().rev() {
            let digit = c % kept_dims[i];
            c /= kept_dims[i];
            full += digit * strides[j];
        }
        projected.push(table[full]);
    }
    Target::HoleRef {
        holes: kept.iter().map(|&j| holes[j]).collect(),
        table: projected,
    }
}

fn to_formula(prog: &Program, e: &Expr) -> Result<Formula, String> {
    let atom = |h: &str, rhs: &Expr| -> Result<Formula, String> {
        let (hi, decl) = prog
            .hole(h)
            .ok_or_else(|| format!("unknown hole `@{h}@`"))?;
        let label = rhs.to_string();
        let o = decl
            .options
            .iter()
            .position(|o| o.label() == label || o.expr == *rhs)
            .ok_or_else(|| format!("hole `@{h}@` has no option `{label}`"))?;
        Ok(Formula::atom(hi, o))
    };
    Ok(match e {
        Expr::Bool(true) => Formula::True,
        Expr::Bool(false) => Formula::False,
        Expr::Var(name) => {
            let (h, o) = prog
                .option_named(name)
                .ok_or_else(|| format!("unknown option `{name}`"))?;
            Formula::atom(h, o)
        }
        Expr::Not(a) => to_formula(prog, a)?.negate(),
        Expr::Bin(op @ (BinOp::Eq | BinOp::Ne), a, b) => {
            let f = match (&**a, &**b) {
                (Expr::Hole(h), rhs) | (rhs, Expr::Hole(h)) => atom(h, rhs)?,
                _ => return Err(format!("constraint atom `{e}` must compare a hole")),
            };
            if *op == BinOp::Ne {
                f.negate()
            } else {
                f
            }
        }
        Expr::Bin(BinOp::And, a, b) => {
            Formula::And(vec![to_formula(prog, a)?, to_formula(prog, b)?])
        }
        Expr::Bin(BinOp::Or, a, b) => Formula::Or(vec![to_formula(prog, a)?, to_formula(prog, b)?]),
        Expr::Bin(BinOp::Implies, a, b) => to_formula(prog, a)?.implies(to_formula(prog, b)?),
        Expr::Bin(BinOp::Iff, a, b) => to_formula(prog, a)?.iff(to_formula(prog, b)?),
        other => return Err(format!("`{other}` is not a constraint formula")),
    })
}
