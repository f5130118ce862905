//! Built-in protocols: generalized dining philosophers over an arbitrary
//! network, and a test-and-set mutex sharing global auxiliaries.

use std::collections::BTreeMap;

use super::{
    CommandTemplate, EdgeSpec, GuardExpr, ModelError, ModelFile, PairScope, ProcessDef,
    PropertySpec, Update, VarSpec, SELF,
};
use crate::network::NetworkGraph;

/// The "fork is available" value.
pub const BOT: &str = "bot";

fn cmd(binder: Option<&str>, guard: GuardExpr, updates: &[(&str, &str)]) -> CommandTemplate {
    CommandTemplate {
        binder: binder.map(str::to_string),
        guard,
        updates: updates.iter().map(|(t, v)| Update::new(t, v)).collect(),
    }
}

fn forall(var: &str, body: GuardExpr) -> GuardExpr {
    GuardExpr::Forall { var: var.to_string(), body: Box::new(body) }
}

/// Dining philosophers: every edge is a fork holding an endpoint id or
/// `bot`; every node runs the same philosopher template.
pub fn gen_dining(g: &NetworkGraph) -> ModelFile {
    let edgespecs = (0..g.edge_count())
        .map(|e| {
            let mut domain: Vec<String> =
                g.endpoints(e).into_iter().map(|n| g.node_name(n).to_string()).collect();
            domain.push(BOT.to_string());
            EdgeSpec { edge: g.edge_name(e).to_string(), domain, init: BOT.to_string() }
        })
        .collect();
    let l = |v: &str| GuardExpr::eq("L", v);
    let philosopher = ProcessDef {
        name: "philosopher".into(),
        locals: vec![VarSpec::new("L", &["T", "H", "E", "R"], "T")],
        commands: vec![
            cmd(None, l("T"), &[("L", "H")]),
            // acquire
            cmd(Some("f"), GuardExpr::and(vec![l("H"), GuardExpr::eq("f", BOT)]), &[("f", SELF)]),
            // release while hungry
            cmd(Some("f"), GuardExpr::and(vec![l("H"), GuardExpr::eq("f", SELF)]), &[("f", BOT)]),
            // to-eat
            cmd(None, GuardExpr::and(vec![l("H"), forall("e", GuardExpr::eq("e", SELF))]), &[("L", "E")]),
            cmd(None, l("E"), &[("L", "R")]),
            // release after eating
            cmd(Some("f"), GuardExpr::and(vec![l("R"), GuardExpr::eq("f", SELF)]), &[("f", BOT)]),
            // to-think
            cmd(None, GuardExpr::and(vec![l("R"), forall("e", GuardExpr::ne("e", SELF))]), &[("L", "T")]),
        ],
    };
    let assignment: BTreeMap<String, String> =
        g.nodes().iter().map(|n| (n.clone(), philosopher.name.clone())).collect();
    ModelFile {
        network: g.clone(),
        edgespecs,
        processes: vec![philosopher],
        assignment,
        auxiliaries: Vec::new(),
        property: PropertySpec { scope: PairScope::AdjacentPairs, forbid: l("E") },
    }
}

/// Test-and-set mutual exclusion for `n` processes named `1..=n`. All
/// sharing goes through global auxiliaries: `x` and, optionally, `last`
/// (the most recent process to enter `E`, `0` initially).
pub fn gen_mutex(n: usize, with_last: bool) -> Result<ModelFile, ModelError> {
    if n == 0 {
        return Err(ModelError::Invalid("mutex needs at least one process".into()));
    }
    let nodes: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let network = NetworkGraph::new(nodes.clone(), Vec::new(), Vec::new())?;
    let l = |v: &str| GuardExpr::eq("l", v);
    let mut enter = vec![("x", "false"), ("l", "E")];
    if with_last {
        enter.push(("last", SELF));
    }
    let process = ProcessDef {
        name: "P".into(),
        locals: vec![VarSpec::new("l", &["T", "H", "E"], "T")],
        commands: vec![
            cmd(None, l("T"), &[("l", "H")]),
            cmd(None, GuardExpr::and(vec![l("H"), GuardExpr::eq("x", "true")]), &enter),
            cmd(None, l("E"), &[("x", "true"), ("l", "T")]),
        ],
    };
    let mut auxiliaries = vec![VarSpec::new("x", &["true", "false"], "true")];
    if with_last {
        let mut domain = vec!["0".to_string()];
        domain.extend(nodes.iter().cloned());
        auxiliaries.push(VarSpec { name: "last".into(), domain, init: "0".into() });
    }
    Ok(ModelFile {
        network,
        edgespecs: Vec::new(),
        assignment: nodes.iter().map(|n| (n.clone(), process.name.clone())).collect(),
        processes: vec![process],
        auxiliaries,
        property: PropertySpec { scope: PairScope::AllPairs, forbid: l("E") },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, Family};
    use crate::procdsl::expand;

    #[test]
    fn dining_ring3_expands_ten_commands_per_node() {
        let m = gen_dining(&generate(&Family::Ring { size: 3 }).unwrap());
        assert_eq!(m.network.node_count(), 3);
        for node in m.network.nodes() {
            // T->H 1, acquire 2, release 2, to-eat 1, E->R 1, release 2, to-think 1
            assert_eq!(expand(&m, node).unwrap().len(), 10);
        }
        let f = m.edgespec("f0_1").unwrap();
        assert_eq!(f.domain, ["n0", "n1", "bot"]);
        assert_eq!(f.init, "bot");
    }

    #[test]
    fn dining_isolated_node_has_no_per_edge_commands() {
        let g = generate(&Family::Line { size: 1 }).unwrap();
        let m = gen_dining(&g);
        let cmds = expand(&m, "n0").unwrap();
        assert_eq!(cmds.len(), 4);
        assert!(cmds.iter().all(|c| c.bound_edge.is_none()));
    }

    #[test]
    fn mutex_shapes() {
        let m = gen_mutex(2, false).unwrap();
        assert_eq!(m.auxiliaries.len(), 1);
        assert_eq!(m.network.edge_count(), 0);
        let m = gen_mutex(2, true).unwrap();
        let last = m.auxiliary("last").unwrap();
        assert_eq!(last.domain, ["0", "1", "2"]);
        assert_eq!(last.init, "0");
        assert!(gen_mutex(0, false).is_err());
        assert!(gen_mutex(1, true).is_ok());
    }
}
