//! Instantiation of command templates at a node: binders and quantifiers are
//! unrolled over the neighborhood, `self` is replaced by the node id, and
//! every reference is resolved and type-checked against `V_n`.

use std::collections::HashSet;

use super::{CmpOp, CommandTemplate, GuardExpr, ModelError, ModelFile, ProcessDef, SELF};

/// A resolved variable of `V_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Local(String),
    /// Edge index in the network.
    Edge(usize),
    Aux(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroundGuard {
    Const(bool),
    Atom { var: VarRef, op: CmpOp, value: String },
    Not(Box<GroundGuard>),
    And(Vec<GroundGuard>),
    Or(Vec<GroundGuard>),
}

impl GroundGuard {
    pub fn vars(&self, out: &mut Vec<VarRef>) {
        match self {
            GroundGuard::Const(_) => {}
            GroundGuard::Atom { var, .. } => out.push(var.clone()),
            GroundGuard::Not(g) => g.vars(out),
            GroundGuard::And(xs) | GroundGuard::Or(xs) => xs.iter().for_each(|x| x.vars(out)),
        }
    }
}

/// A command of one node with everything resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundCommand {
    /// Index of the template within the node's process.
    pub template: usize,
    /// The neighborhood edge bound by the template's binder, if any.
    pub bound_edge: Option<usize>,
    pub guard: GroundGuard,
    pub updates: Vec<(VarRef, String)>,
}

struct Ctx<'a> {
    model: &'a ModelFile,
    process: &'a ProcessDef,
    node: usize,
    nbr: Vec<usize>,
    context: String,
}

impl<'a> Ctx<'a> {
    fn node_name(&self) -> &'a str {
        self.model.network.node_name(self.node)
    }

    fn resolve(&self, name: &str, bound: &[(String, usize)]) -> Result<VarRef, ModelError> {
        if let Some(&(_, e)) = bound.iter().rev().find(|(n, _)| *n == name) {
            return Ok(VarRef::Edge(e));
        }
        if self.process.local(name).is_some() {
            return Ok(VarRef::Local(name.to_string()));
        }
        if self.model.auxiliary(name).is_some() {
            return Ok(VarRef::Aux(name.to_string()));
        }
        if let Ok(e) = self.model.network.edge_id(name) {
            if self.nbr.contains(&e) {
                return Ok(VarRef::Edge(e));
            }
            return Err(ModelError::Scope {
                context: self.context.clone(),
                message: format!("edge `{name}` is not in the neighborhood of `{}`", self.node_name()),
            });
        }
        Err(ModelError::UnknownIdent { context: self.context.clone(), name: name.to_string() })
    }

    fn domain(&self, var: &VarRef) -> &'a [String] {
        match var {
            VarRef::Local(n) => &self.process.local(n).expect("resolved").domain,
            VarRef::Aux(n) => &self.model.auxiliary(n).expect("resolved").domain,
            VarRef::Edge(e) => {
                let name = self.model.network.edge_name(*e);
                self.model.edgespec(name).map_or(&[], |s| s.domain.as_slice())
            }
        }
    }

    fn var_name(&self, var: &VarRef) -> String {
        match var {
            VarRef::Local(n) | VarRef::Aux(n) => n.clone(),
            VarRef::Edge(e) => self.model.network.edge_name(*e).to_string(),
        }
    }

    fn value(&self, var: &VarRef, raw: &str) -> Result<String, ModelError> {
        let value = if raw == SELF { self.node_name() } else { raw };
        if self.domain(var).iter().any(|d| d == value) {
            Ok(value.to_string())
        } else {
            Err(ModelError::DomainMismatch {
                context: self.context.clone(),
                var: self.var_name(var),
                value: value.to_string(),
            })
        }
    }

    fn guard(&self, g: &GuardExpr, bound: &mut Vec<(String, usize)>) -> Result<GroundGuard, ModelError> {
        Ok(match g {
            GuardExpr::Atom { var, op, value } => {
                let var = self.resolve(var, bound)?;
                let value = self.value(&var, value)?;
                GroundGuard::Atom { var, op: *op, value }
            }
            GuardExpr::Not(e) => GroundGuard::Not(Box::new(self.guard(e, bound)?)),
            GuardExpr::And(xs) => GroundGuard::And(xs.iter().map(|x| self.guard(x, bound)).collect::<Result<_, _>>()?),
            GuardExpr::Or(xs) => GroundGuard::Or(xs.iter().map(|x| self.guard(x, bound)).collect::<Result<_, _>>()?),
            GuardExpr::Forall { var, body } | GuardExpr::Exists { var, body } => {
                let universal = matches!(g, GuardExpr::Forall { .. });
                let mut items = Vec::with_capacity(self.nbr.len());
                for &e in &self.nbr {
                    bound.push((var.clone(), e));
                    let item = self.guard(body, bound);
                    bound.pop();
                    items.push(item?);
                }
                match (items.len(), universal) {
                    (0, u) => GroundGuard::Const(u),
                    (1, _) => items.pop().unwrap(),
                    (_, true) => GroundGuard::And(items),
                    (_, false) => GroundGuard::Or(items),
                }
            }
        })
    }
}

fn instantiate(ctx: &Ctx<'_>, t: &CommandTemplate, template: usize, bound_edge: Option<usize>) -> Result<GroundCommand, ModelError> {
    let mut bound = Vec::new();
    if let (Some(b), Some(e)) = (&t.binder, bound_edge) {
        bound.push((b.clone(), e));
    }
    let guard = ctx.guard(&t.guard, &mut bound)?;
    let mut updates = Vec::with_capacity(t.updates.len());
    let mut targets = HashSet::new();
    for u in &t.updates {
        let var = ctx.resolve(&u.target, &bound)?;
        let value = ctx.value(&var, &u.value)?;
        if !targets.insert(var.clone()) {
            return Err(ModelError::Duplicate { context: ctx.context.clone(), name: ctx.var_name(&var) });
        }
        updates.push((var, value));
    }
    let net = &ctx.model.network;
    let mut reads = Vec::new();
    guard.vars(&mut reads);
    for v in &reads {
        if let VarRef::Edge(e) = v {
            if !net.reads(ctx.node, *e) {
                return Err(ModelError::Scope {
                    context: ctx.context.clone(),
                    message: format!("`{}` does not read edge `{}`", ctx.node_name(), net.edge_name(*e)),
                });
            }
        }
    }
    for (v, _) in &updates {
        if let VarRef::Edge(e) = v {
            if !net.writes(ctx.node, *e) {
                return Err(ModelError::Scope {
                    context: ctx.context.clone(),
                    message: format!("`{}` does not write edge `{}`", ctx.node_name(), net.edge_name(*e)),
                });
            }
        }
    }
    Ok(GroundCommand { template, bound_edge, guard, updates })
}

/// Ground commands of the node at index `node`.
pub fn expand_ix(model: &ModelFile, node: usize) -> Result<Vec<GroundCommand>, ModelError> {
    let name = model.network.node_name(node);
    let process = model.process_of(name)?;
    let nbr = model.network.neighborhood_of(node).edges();
    let mut out = Vec::new();
    for (ti, t) in process.commands.iter().enumerate() {
        let ctx = Ctx {
            model,
            process,
            node,
            nbr: nbr.clone(),
            context: format!("process `{}` command {ti} at `{name}`", process.name),
        };
        match &t.binder {
            None => out.push(instantiate(&ctx, t, ti, None)?),
            Some(_) => {
                for &e in &nbr {
                    out.push(instantiate(&ctx, t, ti, Some(e))?);
                }
            }
        }
    }
    Ok(out)
}

/// Ground commands of the node named `node`.
pub fn expand(model: &ModelFile, node: &str) -> Result<Vec<GroundCommand>, ModelError> {
    expand_ix(model, model.network.node_id(node)?)
}

/// The property's forbidden predicate instantiated at a node.
pub fn compile_forbid(model: &ModelFile, node: usize) -> Result<GroundGuard, ModelError> {
    compile_local(model, node, &model.property.forbid, "property")
}

/// Any closed predicate over `V_n`, instantiated at node `node`.
pub fn compile_local(model: &ModelFile, node: usize, guard: &GuardExpr, what: &str) -> Result<GroundGuard, ModelError> {
    let name = model.network.node_name(node);
    let process = model.process_of(name)?;
    let ctx = Ctx {
        model,
        process,
        node,
        nbr: model.network.neighborhood_of(node).edges(),
        context: format!("{what} at `{name}`"),
    };
    ctx.guard(guard, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, Family, NetworkGraph};
    use crate::procdsl::{gen_dining, gen_mutex, Update};

    #[test]
    fn acquire_expands_once_per_edge() {
        let m = gen_dining(&generate(&Family::Ring { size: 3 }).unwrap());
        let cmds = expand(&m, "n0").unwrap();
        let acquire: Vec<_> = cmds.iter().filter(|c| c.template == 1).collect();
        assert_eq!(acquire.len(), 2);
        for c in acquire {
            let e = c.bound_edge.unwrap();
            assert_eq!(c.updates, vec![(VarRef::Edge(e), "n0".to_string())]);
        }
    }

    #[test]
    fn mutex_expansion_equals_template() {
        let m = gen_mutex(2, true).unwrap();
        let cmds = expand(&m, "2").unwrap();
        assert_eq!(cmds.len(), 3);
        assert_eq!(cmds[1].updates.last().unwrap(), &(VarRef::Aux("last".into()), "2".to_string()));
    }

    #[test]
    fn explicit_edge_outside_neighborhood_is_rejected() {
        let mut m = gen_dining(&generate(&Family::Ring { size: 4 }).unwrap());
        m.processes[0].commands[0].updates.push(Update::new("f2_3", "bot"));
        assert!(matches!(expand(&m, "n0"), Err(ModelError::Scope { .. })));
    }

    #[test]
    fn read_only_edge_cannot_be_written() {
        let g = NetworkGraph::new(
            vec!["a".into(), "b".into()],
            vec!["e".into()],
            vec![("a".into(), "e".into()), ("e".into(), "a".into()), ("e".into(), "b".into())],
        )
        .unwrap();
        let m = gen_dining(&g);
        assert!(expand(&m, "a").is_ok());
        assert!(matches!(expand(&m, "b"), Err(ModelError::Scope { .. })));
    }

    #[test]
    fn scoping_soundness_on_generated_models() {
        let m = gen_dining(&generate(&Family::Torus { rows: 2, cols: 3 }).unwrap());
        for (i, _) in m.network.nodes().iter().enumerate() {
            let nbr = m.network.neighborhood_of(i);
            for c in expand_ix(&m, i).unwrap() {
                let mut reads = Vec::new();
                c.guard.vars(&mut reads);
                for v in reads {
                    if let VarRef::Edge(e) = v {
                        assert!(nbr.read_edges.contains(&e));
                    }
                }
                for (v, _) in &c.updates {
                    match v {
                        VarRef::Edge(e) => assert!(nbr.write_edges.contains(e)),
                        VarRef::Local(l) => assert!(m.processes[0].local(l).is_some()),
                        VarRef::Aux(_) => unreachable!(),
                    }
                }
            }
        }
    }
}
