//! Local abstraction: per-node abstraction functions, the abstract split
//! fixpoint with existentially lifted step and interference relations, and
//! clustering of abstract component graphs across a family of networks.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::procdsl::{GuardExpr, ModelError};
use crate::semantics::{Cond, LocalState, Program, Value};
use crate::splitfix::SplitInvariant;

/// An abstract local state: a tuple of labels.
pub type AbsState = Vec<String>;

/// A total map from the local states of each node to abstract states.
pub trait LocalAbstraction {
    fn alpha(&self, program: &Program, n: usize, s: &[Value]) -> AbsState;

    /// Short description for reports.
    fn describe(&self) -> String;
}

/// The identity: every variable of `V_n` is kept.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl LocalAbstraction for Identity {
    fn alpha(&self, program: &Program, n: usize, s: &[Value]) -> AbsState {
        program.node(n).scope.iter().zip(s).map(|(&g, &v)| program.format_value(g, v).to_string()).collect()
    }

    fn describe(&self) -> String {
        "identity".into()
    }
}

/// Internal variables plus the truth values of named predicates over `V_n`.
#[derive(Debug, Clone)]
pub struct Predicates {
    names: Vec<String>,
    guards: Vec<GuardExpr>,
    /// Per node, the compiled predicates.
    compiled: Vec<Vec<Cond>>,
}

impl Predicates {
    pub fn new(program: &Program, preds: &[(String, GuardExpr)]) -> Result<Self, ModelError> {
        let compiled = (0..program.node_count())
            .map(|n| preds.iter().map(|(_, g)| program.compile_local_guard(n, g)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            names: preds.iter().map(|(n, _)| n.clone()).collect(),
            guards: preds.iter().map(|(_, g)| g.clone()).collect(),
            compiled,
        })
    }

    /// `A`: the node owns every fork in its neighborhood.
    pub fn owns_all_forks(program: &Program) -> Result<Self, ModelError> {
        let a = GuardExpr::Forall { var: "e".into(), body: Box::new(GuardExpr::eq("e", "self")) };
        Self::new(program, &[("A".to_string(), a)])
    }
}

impl LocalAbstraction for Predicates {
    fn alpha(&self, program: &Program, n: usize, s: &[Value]) -> AbsState {
        let node = program.node(n);
        let mut out: AbsState =
            node.scope[..node.internal].iter().zip(s).map(|(&g, &v)| program.format_value(g, v).to_string()).collect();
        for (name, c) in self.names.iter().zip(&self.compiled[n]) {
            out.push(if c.eval(s) { name.clone() } else { format!("!{name}") });
        }
        out
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.names.iter().zip(&self.guards).map(|(n, g)| format!("{n}={g}")).collect();
        format!("predicates {}", parts.join("; "))
    }
}

/// An explicit table from local states to labels, one table per node.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub maps: Vec<HashMap<LocalState, AbsState>>,
}

impl LocalAbstraction for Table {
    fn alpha(&self, _program: &Program, n: usize, s: &[Value]) -> AbsState {
        self.maps[n].get(s).cloned().unwrap_or_else(|| vec!["?".into()])
    }

    fn describe(&self) -> String {
        "table".into()
    }
}

pub fn abstract_init(program: &Program, a: &dyn LocalAbstraction, n: usize) -> BTreeSet<AbsState> {
    [a.alpha(program, n, &program.initial_local(n))].into_iter().collect()
}

/// `(α(x), α(y))` for every step `x → y` of node `n` from any local state.
pub fn abstract_step(program: &Program, a: &dyn LocalAbstraction, n: usize) -> BTreeSet<(AbsState, AbsState)> {
    let mut out = BTreeSet::new();
    for x in program.local_space(n) {
        let ax = a.alpha(program, n, &x);
        for y in program.local_successors(n, &x) {
            out.insert((ax.clone(), a.alpha(program, n, &y)));
        }
    }
    out
}

/// `(abstract source of k, a, b)` for every joint step of `k` over
/// `V_n ∪ V_k`, with `a`, `b` the views of `n` before and after.
fn interference_triples(
    program: &Program,
    a: &dyn LocalAbstraction,
    n: usize,
    k: usize,
) -> BTreeSet<(AbsState, AbsState, AbsState)> {
    let shared = program.shared_positions(n, k);
    let mut views: HashMap<Vec<Value>, Vec<LocalState>> = HashMap::new();
    for z in program.local_space(n) {
        views.entry(shared.iter().map(|&(pn, _)| z[pn as usize]).collect()).or_default().push(z);
    }
    let mut out = BTreeSet::new();
    for x in program.local_space(k) {
        let succs = program.local_successors(k, &x);
        if succs.is_empty() {
            continue;
        }
        let key: Vec<Value> = shared.iter().map(|&(_, pk)| x[pk as usize]).collect();
        let Some(zs) = views.get(&key) else { continue };
        let ax = a.alpha(program, k, &x);
        for y in &succs {
            for z in zs {
                let mut z2 = z.clone();
                for &(pn, pk) in &shared {
                    z2[pn as usize] = y[pk as usize];
                }
                out.insert((ax.clone(), a.alpha(program, n, z), a.alpha(program, n, &z2)));
            }
        }
    }
    out
}

/// Abstract transitions of `n` caused by `k` from sources in `theta_k`.
pub fn abstract_interference(
    program: &Program,
    a: &dyn LocalAbstraction,
    n: usize,
    k: usize,
    theta_k: &BTreeSet<AbsState>,
) -> BTreeSet<(AbsState, AbsState)> {
    interference_triples(program, a, n, k)
        .into_iter()
        .filter(|(src, _, _)| theta_k.contains(src))
        .map(|(_, x, y)| (x, y))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct AbstractComponent {
    pub states: BTreeSet<AbsState>,
    pub initial: BTreeSet<AbsState>,
    pub step_edges: BTreeSet<(AbsState, AbsState)>,
    /// `(from, to, interfering node)`.
    pub interference_edges: BTreeSet<(AbsState, AbsState, String)>,
}

impl AbstractComponent {
    /// Canonical labeled graph for clustering; self-loops are left out.
    pub fn canonical_graph(&self) -> CanonicalGraph {
        CanonicalGraph {
            states: self.states.clone(),
            initial: self.initial.clone(),
            step_edges: self.step_edges.iter().filter(|(a, b)| a != b).cloned().collect(),
            interference_edges: self
                .interference_edges
                .iter()
                .filter(|(a, b, _)| a != b)
                .map(|(a, b, _)| (a.clone(), b.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CanonicalGraph {
    pub states: BTreeSet<AbsState>,
    pub initial: BTreeSet<AbsState>,
    pub step_edges: BTreeSet<(AbsState, AbsState)>,
    pub interference_edges: BTreeSet<(AbsState, AbsState)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbstractInvariant {
    pub components: Vec<AbstractComponent>,
}

/// Least fixpoint of abstract init, step and interference, with a FIFO
/// worklist over nodes.
pub fn abstract_fixpoint(program: &Program, a: &dyn LocalAbstraction) -> AbstractInvariant {
    let n = program.node_count();
    let steps: Vec<BTreeMap<AbsState, BTreeSet<AbsState>>> = (0..n)
        .map(|i| {
            let mut m: BTreeMap<AbsState, BTreeSet<AbsState>> = BTreeMap::new();
            for (x, y) in abstract_step(program, a, i) {
                m.entry(x).or_default().insert(y);
            }
            m
        })
        .collect();
    // Per node, per interferer: source of k -> (a, b) pairs.
    type Triples = BTreeMap<AbsState, BTreeSet<(AbsState, AbsState)>>;
    let interference: Vec<Vec<(usize, Triples)>> = (0..n)
        .map(|i| {
            program
                .node(i)
                .interferers
                .iter()
                .map(|intf| {
                    let mut m: Triples = BTreeMap::new();
                    for (src, x, y) in interference_triples(program, a, i, intf.node) {
                        m.entry(src).or_default().insert((x, y));
                    }
                    (intf.node, m)
                })
                .collect()
        })
        .collect();

    let mut comps: Vec<AbstractComponent> = (0..n)
        .map(|i| {
            let init = abstract_init(program, a, i);
            AbstractComponent { states: init.clone(), initial: init, ..Default::default() }
        })
        .collect();
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut queued = vec![true; n];
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        let mut new_states = BTreeSet::new();
        let mut new_steps = BTreeSet::new();
        let mut new_intf = BTreeSet::new();
        for s in &comps[i].states {
            if let Some(ys) = steps[i].get(s) {
                for y in ys {
                    new_steps.insert((s.clone(), y.clone()));
                    new_states.insert(y.clone());
                }
            }
        }
        for (k, triples) in &interference[i] {
            for src in &comps[*k].states {
                if let Some(pairs) = triples.get(src) {
                    for (x, y) in pairs {
                        if comps[i].states.contains(x) {
                            new_intf.insert((x.clone(), y.clone(), program.node(*k).name.clone()));
                            new_states.insert(y.clone());
                        }
                    }
                }
            }
        }
        let c = &mut comps[i];
        let before = c.states.len();
        c.states.extend(new_states);
        c.step_edges.extend(new_steps);
        c.interference_edges.extend(new_intf);
        if c.states.len() != before {
            for &d in std::iter::once(&i).chain(&program.node(i).points_to) {
                if !queued[d] {
                    queued[d] = true;
                    queue.push_back(d);
                }
            }
        }
    }
    AbstractInvariant { components: comps }
}

/// `θ_n ⊆ γ_n(abs_n)` for every node.
pub fn concretize_check(program: &Program, a: &dyn LocalAbstraction, abs: &AbstractInvariant, theta: &SplitInvariant) -> bool {
    (0..program.node_count())
        .all(|n| theta.component(n).iter().all(|s| abs.components[n].states.contains(&a.alpha(program, n, s))))
}

/// `γ_n(abs_n)`: every local state of `n` whose abstraction is in the set.
pub fn concretize(program: &Program, a: &dyn LocalAbstraction, n: usize, states: &BTreeSet<AbsState>) -> BTreeSet<LocalState> {
    program.local_space(n).into_iter().filter(|s| states.contains(&a.alpha(program, n, s))).collect()
}

pub fn format_state(s: &AbsState) -> String {
    format!("({})", s.join(","))
}

/// DOT rendering of one node's abstract component: initial states are
/// filled, interference edges dashed.
pub fn to_dot(name: &str, c: &AbstractComponent) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{name}\" {{");
    let ids: BTreeMap<&AbsState, usize> = c.states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    for (s, i) in &ids {
        let style = if c.initial.contains(*s) { ", style=filled, fillcolor=palegreen" } else { "" };
        let _ = writeln!(out, "  s{i} [label=\"{}\"{style}];", format_state(s));
    }
    for (a, b) in &c.step_edges {
        let _ = writeln!(out, "  s{} -> s{};", ids[a], ids[b]);
    }
    let mut seen = BTreeSet::new();
    for (a, b, _) in &c.interference_edges {
        if seen.insert((a, b)) {
            let _ = writeln!(out, "  s{} -> s{} [style=dashed];", ids[a], ids[b]);
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbstractClass {
    pub id: usize,
    pub graph: CanonicalGraph,
    /// `(instance, node)` pairs.
    pub members: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParametricReport {
    pub abstraction: String,
    pub classes: Vec<AbstractClass>,
    /// "for every node n, θ_class(n)(n)", spelled out per class.
    pub candidate: Vec<String>,
}

/// Abstractions are built per instance since predicates compile against
/// one program's scopes.
pub type AbstractionFactory<'a> = dyn Fn(&Program) -> Result<Box<dyn LocalAbstraction>, ModelError> + 'a;

/// Clusters every node of every instance by its canonical abstract graph.
pub fn parametric_report(instances: &[(String, Program)], make: &AbstractionFactory) -> Result<ParametricReport, ModelError> {
    let mut classes: Vec<AbstractClass> = Vec::new();
    let mut describe = String::new();
    for (label, program) in instances {
        let a = make(program)?;
        describe = a.describe();
        let inv = abstract_fixpoint(program, a.as_ref());
        for (n, c) in inv.components.iter().enumerate() {
            let g = c.canonical_graph();
            let member = (label.clone(), program.node(n).name.clone());
            match classes.iter_mut().find(|k| k.graph == g) {
                Some(k) => k.members.push(member),
                None => classes.push(AbstractClass { id: classes.len(), graph: g, members: vec![member] }),
            }
        }
    }
    let candidate = classes
        .iter()
        .map(|k| {
            let states: Vec<String> = k.graph.states.iter().map(format_state).collect();
            format!("class {}: local state in {{{}}}", k.id, states.join(", "))
        })
        .collect();
    Ok(ParametricReport { abstraction: describe, classes, candidate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, Family};
    use crate::procdsl::{gen_dining, gen_mutex};
    use crate::splitfix::{strongest_split_invariant, Mode};

    fn dining(family: Family) -> Program {
        Program::compile(&gen_dining(&generate(&family).unwrap())).unwrap()
    }

    fn owns_all(p: &Program) -> Result<Box<dyn LocalAbstraction>, ModelError> {
        Ok(Box::new(Predicates::owns_all_forks(p)?))
    }

    fn st(l: &str, a: bool) -> AbsState {
        vec![l.to_string(), if a { "A".into() } else { "!A".into() }]
    }

    #[test]
    fn initial_abstract_states() {
        let p = dining(Family::Ring { size: 3 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        assert_eq!(abstract_init(&p, &a, 0), [st("T", false)].into_iter().collect());
        let iso = dining(Family::Line { size: 1 });
        let a = Predicates::owns_all_forks(&iso).unwrap();
        assert_eq!(abstract_init(&iso, &a, 0), [st("T", true)].into_iter().collect());
        assert_eq!(abstract_init(&p, &Identity, 0).len(), 1);
    }

    #[test]
    fn step_edges_of_a_degree_two_node() {
        let p = dining(Family::Ring { size: 3 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        let steps = abstract_step(&p, &a, 0);
        assert!(steps.contains(&(st("H", false), st("H", true))));
        assert!(steps.contains(&(st("H", true), st("E", true))));
        assert!(!steps.iter().any(|(x, y)| *x == st("H", false) && y[0] == "E"));
    }

    #[test]
    fn fixpoint_of_connected_and_isolated_nodes() {
        let p = dining(Family::Ring { size: 4 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        let inv = abstract_fixpoint(&p, &a);
        let expected: BTreeSet<AbsState> = [
            st("T", false),
            st("H", false),
            st("H", true),
            st("E", true),
            st("R", true),
            st("R", false),
        ]
        .into_iter()
        .collect();
        assert_eq!(inv.components[0].states, expected);
        assert!(inv.components[0].interference_edges.iter().all(|(x, y, _)| x == y));

        let iso = dining(Family::Line { size: 1 });
        let a = Predicates::owns_all_forks(&iso).unwrap();
        let inv = abstract_fixpoint(&iso, &a);
        let cycle: BTreeSet<AbsState> = ["T", "H", "E", "R"].iter().map(|l| st(l, true)).collect();
        assert_eq!(inv.components[0].states, cycle);
        assert_eq!(inv.components[0].step_edges.len(), 4);
    }

    #[test]
    fn empty_neighbor_set_gives_no_interference() {
        let p = dining(Family::Ring { size: 3 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        assert!(abstract_interference(&p, &a, 0, 1, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn mutex_interference_flips_x() {
        let p = Program::compile(&gen_mutex(2, false).unwrap()).unwrap();
        let theta1: BTreeSet<AbsState> = vec![vec!["E".to_string(), "false".to_string()]].into_iter().collect();
        let edges = abstract_interference(&p, &Identity, 0, 1, &theta1);
        assert!(edges.contains(&(vec!["T".into(), "false".into()], vec!["T".into(), "true".into()])));
    }

    #[test]
    fn identity_is_exact() {
        for p in [dining(Family::Ring { size: 3 }), Program::compile(&gen_mutex(3, true).unwrap()).unwrap()] {
            let theta = strongest_split_invariant(&p, Mode::Ag);
            let inv = abstract_fixpoint(&p, &Identity);
            for n in 0..p.node_count() {
                assert_eq!(concretize(&p, &Identity, n, &inv.components[n].states), *theta.component(n));
            }
            assert!(concretize_check(&p, &Identity, &inv, &theta));
        }
    }

    #[test]
    fn truncated_abstraction_fails_the_check() {
        let p = dining(Family::Ring { size: 3 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        let theta = strongest_split_invariant(&p, Mode::Ag);
        let mut inv = abstract_fixpoint(&p, &a);
        assert!(concretize_check(&p, &a, &inv, &theta));
        inv.components[1].states.remove(&st("R", false));
        assert!(!concretize_check(&p, &a, &inv, &theta));
    }

    #[test]
    fn star_hub_and_leaves_share_a_class() {
        let p = dining(Family::Star { leaves: 4 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        let inv = abstract_fixpoint(&p, &a);
        assert_eq!(inv.components[0].canonical_graph(), inv.components[1].canonical_graph());
        let report = parametric_report(&[("star4".into(), p)], &owns_all).unwrap();
        assert_eq!(report.classes.len(), 1);
        let single = dining(Family::Ring { size: 5 });
        assert_eq!(parametric_report(&[("ring5".into(), single)], &owns_all).unwrap().classes.len(), 1);
    }

    #[test]
    fn dining_family_has_two_classes() {
        let families = [
            ("ring3", Family::Ring { size: 3 }),
            ("ring6", Family::Ring { size: 6 }),
            ("star5", Family::Star { leaves: 5 }),
            ("torus2x3", Family::Torus { rows: 2, cols: 3 }),
            ("line4+1", Family::DegreeSequence { degrees: vec![1, 2, 2, 1, 0] }),
        ];
        let programs: Vec<(String, Program)> = families.iter().map(|(l, f)| (l.to_string(), dining(f.clone()))).collect();
        for (_, p) in &programs {
            let a = Predicates::owns_all_forks(p).unwrap();
            let inv = abstract_fixpoint(p, &a);
            for c in &inv.components {
                assert!(!c.states.contains(&st("E", false)));
                assert!(c.interference_edges.iter().all(|(x, y, _)| x == y));
            }
        }
        let report = parametric_report(&programs, &owns_all).unwrap();
        assert_eq!(report.classes.len(), 2);
        assert_eq!(report.classes[1].members, vec![("line4+1".to_string(), "n4".to_string())]);
    }

    #[test]
    fn abstraction_covers_reachable_projections() {
        let p = dining(Family::Star { leaves: 3 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        let inv = abstract_fixpoint(&p, &a);
        let r = crate::semantics::reach(&p, 1_000_000);
        assert!(r.is_complete());
        for n in 0..p.node_count() {
            for s in r.project(&p, n) {
                assert!(inv.components[n].states.contains(&a.alpha(&p, n, &s)));
            }
        }
    }

    #[test]
    fn dot_marks_initial_and_interference() {
        let p = dining(Family::Ring { size: 3 });
        let a = Predicates::owns_all_forks(&p).unwrap();
        let inv = abstract_fixpoint(&p, &a);
        let dot = to_dot("n0", &inv.components[0]);
        assert!(dot.contains("label=\"(T,!A)\", style=filled"));
        assert!(dot.contains("style=dashed"));
    }
}
