//! Strengthening a split invariant with auxiliary shared state: a `last`
//! history variable, and mirrors that expose internal variables of a node
//! to every other node.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::procdsl::{CmpOp, GuardExpr, ModelError, ModelFile, ProcessDef, Update, VarSpec, SELF};
use crate::semantics::{reach, GlobalState, GroundTransition, Program};
use crate::splitfix::{check_property, strongest_split_invariant, Mode, PropertyVerdict, SplitInvariant, Witness};

/// Name of the history auxiliary added by [`add_last_auxiliary`].
pub const LAST: &str = "last";

/// Name of the auxiliary mirroring `var` at `node`.
pub fn mirror_name(var: &str, node: &str) -> String {
    format!("{var}@{node}")
}

/// Adds `last`, which records the most recent node to set `var := value`.
pub fn add_last_auxiliary(model: &ModelFile, trigger: (&str, &str)) -> Result<ModelFile, ModelError> {
    let (var, value) = trigger;
    let context = format!("last trigger `{var}={value}`");
    let owners: Vec<&ProcessDef> = model
        .processes
        .iter()
        .filter(|p| model.assignment.values().any(|a| *a == p.name))
        .filter(|p| p.local(var).is_some())
        .collect();
    if owners.is_empty() {
        return Err(ModelError::UnknownIdent { context, name: var.to_string() });
    }
    if owners.iter().all(|p| !p.local(var).unwrap().domain.iter().any(|d| d == value)) {
        return Err(ModelError::DomainMismatch { context, var: var.to_string(), value: value.to_string() });
    }
    if model.auxiliary(LAST).is_some() {
        return Err(ModelError::Duplicate { context, name: LAST.to_string() });
    }
    let mut out = model.clone();
    let mut domain = vec!["0".to_string()];
    domain.extend(model.network.nodes().iter().cloned());
    out.auxiliaries.push(VarSpec { name: LAST.into(), domain, init: "0".into() });
    for p in &mut out.processes {
        if p.local(var).is_none() {
            continue;
        }
        for c in &mut p.commands {
            if c.updates.iter().any(|u| u.target == var && u.value == value) {
                c.updates.push(Update::new(LAST, SELF));
            }
        }
    }
    out.validate()?;
    Ok(out)
}

/// Promotes internal variables of `node` to auxiliaries named
/// `var@node`, written alongside the originals. The node gets its own copy
/// of its process so that other nodes are unaffected.
pub fn expose(model: &ModelFile, node: &str, vars: &[&str]) -> Result<ModelFile, ModelError> {
    model.network.node_id(node)?;
    if vars.is_empty() {
        return Ok(model.clone());
    }
    let context = format!("exposure at `{node}`");
    let process = model.process_of(node)?.clone();
    for v in vars {
        if process.local(v).is_none() {
            return Err(ModelError::UnknownIdent { context: context.clone(), name: v.to_string() });
        }
        if model.auxiliary(&mirror_name(v, node)).is_some() {
            return Err(ModelError::Duplicate { context: context.clone(), name: mirror_name(v, node) });
        }
    }
    let mut out = model.clone();
    let own_name = mirror_name(process.name.split('@').next().unwrap_or(&process.name), node);
    let mut own = process.clone();
    own.name = own_name.clone();
    for v in vars {
        let spec = process.local(v).unwrap();
        out.auxiliaries.push(VarSpec { name: mirror_name(v, node), domain: spec.domain.clone(), init: spec.init.clone() });
        for c in &mut own.commands {
            if let Some(u) = c.updates.iter().find(|u| u.target == *v).cloned() {
                c.updates.push(Update::new(&mirror_name(v, node), &u.value));
            }
        }
    }
    match out.processes.iter_mut().find(|p| p.name == own_name) {
        Some(p) => *p = own,
        None => out.processes.push(own),
    }
    out.assignment.insert(node.to_string(), own_name);
    out.processes.retain(|p| out.assignment.values().any(|a| *a == p.name));
    out.validate()?;
    Ok(out)
}

/// Internal variables of `node` not yet mirrored.
pub fn unexposed(model: &ModelFile, node: &str) -> Vec<String> {
    model
        .process_of(node)
        .map(|p| {
            p.locals
                .iter()
                .filter(|v| model.auxiliary(&mirror_name(&v.name, node)).is_none())
                .map(|v| v.name.clone())
                .collect()
        })
        .unwrap_or_default()
}

/// Mirrors every internal variable of every node.
pub fn expose_all(model: &ModelFile) -> Result<ModelFile, ModelError> {
    let mut m = model.clone();
    for node in model.network.nodes() {
        let vars = unexposed(&m, node);
        let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        m = expose(&m, node, &refs)?;
    }
    Ok(m)
}

fn forbid_locals(model: &ModelFile, node: &str) -> Vec<String> {
    let Ok(p) = model.process_of(node) else { return Vec::new() };
    let mut out = Vec::new();
    for (var, _, _) in model.property.forbid.atoms() {
        if p.local(var).is_some() && !out.iter().any(|v| v == var) {
            out.push(var.to_string());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Mirror the forbid variables of offending nodes, one node per step.
    Expose,
    /// Add a `last` auxiliary for the forbid atom first, then expose.
    Last,
}

/// Outcome of the full pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Proved,
    Unknown { witnesses: Vec<Witness> },
    /// A reachable violation found by the oracle, one line per state.
    Violated { path: Vec<String> },
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Proved => 0,
            Verdict::Unknown { .. } => 1,
            Verdict::Violated { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Proved => "proved",
            Verdict::Unknown { .. } => "unknown",
            Verdict::Violated { .. } => "violated",
        }
    }
}

impl From<PropertyVerdict> for Verdict {
    fn from(v: PropertyVerdict) -> Self {
        match v {
            PropertyVerdict::Proved => Verdict::Proved,
            PropertyVerdict::Unknown(witnesses) => Verdict::Unknown { witnesses },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefineStep {
    pub action: String,
    pub theta_sizes: Vec<usize>,
    pub verdict: String,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub verdict: Verdict,
    pub trace: Vec<RefineStep>,
    /// The model after the last refinement step.
    pub model: ModelFile,
    pub program: Program,
    pub theta: SplitInvariant,
}

/// Formats an oracle path, one state per line.
pub fn format_path(program: &Program, path: &[(Option<GroundTransition>, GlobalState)]) -> Vec<String> {
    path.iter()
        .map(|(t, s)| match t {
            None => format!("init: {}", program.format_global(s)),
            Some(t) => format!(
                "{} {}: {}",
                program.node(t.owner).name,
                program.node(t.owner).commands[t.command].label,
                program.format_global(s)
            ),
        })
        .collect()
}

/// Runs the oracle to settle a verdict; `None` if the cap is hit first.
pub fn oracle_verdict(program: &Program, state_cap: usize) -> Option<Verdict> {
    let r = reach(program, state_cap);
    if let Some((idx, _)) = r.find_violation(program) {
        return Some(Verdict::Violated { path: format_path(program, &r.path_to(idx)) });
    }
    r.is_complete().then_some(Verdict::Proved)
}

/// Computes, checks and refines until proved, out of budget, or out of
/// things to expose; in the last case the oracle decides.
pub fn refine_loop(
    model: &ModelFile,
    budget: usize,
    strategy: Strategy,
    mode: Mode,
    state_cap: usize,
) -> Result<RefineOutcome, ModelError> {
    let mut model = model.clone();
    let mut trace = Vec::new();
    let mut action = "initial".to_string();
    let mut steps = 0;
    let mut exposed: BTreeSet<String> = BTreeSet::new();
    loop {
        let program = Program::compile(&model)?;
        let theta = strongest_split_invariant(&program, mode);
        let verdict = Verdict::from(check_property(&program, &theta));
        trace.push(RefineStep { action: action.clone(), theta_sizes: theta.sizes(), verdict: verdict.name().into() });
        let witnesses = match &verdict {
            Verdict::Unknown { witnesses } => witnesses.clone(),
            _ => return Ok(RefineOutcome { verdict, trace, model, program, theta }),
        };
        if steps >= budget {
            return Ok(RefineOutcome { verdict, trace, model, program, theta });
        }
        steps += 1;

        if strategy == Strategy::Last && steps == 1 && model.auxiliary(LAST).is_none() {
            if let GuardExpr::Atom { var, op: CmpOp::Eq, value } = model.property.forbid.clone() {
                model = add_last_auxiliary(&model, (&var, &value))?;
                action = format!("add {LAST} on {var}={value}");
                continue;
            }
        }

        let mut offending: Vec<String> =
            witnesses.iter().flat_map(|w| [w.pair.0.clone(), w.pair.1.clone()]).collect();
        offending.sort();
        offending.dedup();
        let pick = offending.iter().find_map(|n| {
            let vars: Vec<String> =
                forbid_locals(&model, n).into_iter().filter(|v| !exposed.contains(&mirror_name(v, n))).collect();
            (!vars.is_empty()).then(|| (n.clone(), vars))
        });
        let pick = pick.or_else(|| {
            model.network.nodes().iter().find_map(|n| {
                let vars = unexposed(&model, n);
                (!vars.is_empty()).then(|| (n.clone(), vars))
            })
        });
        match pick {
            Some((node, vars)) => {
                let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
                model = expose(&model, &node, &refs)?;
                for v in &vars {
                    exposed.insert(mirror_name(v, &node));
                }
                action = format!("expose {} at {node}", vars.join(","));
            }
            None => {
                let settled = oracle_verdict(&program, state_cap);
                let verdict = settled.unwrap_or(verdict);
                trace.push(RefineStep {
                    action: "oracle".into(),
                    theta_sizes: theta.sizes(),
                    verdict: verdict.name().into(),
                });
                return Ok(RefineOutcome { verdict, trace, model, program, theta });
            }
        }
    }
}
