//! Ground semantics of a model: the global variable layout, interleaving
//! transitions, strongest postcondition, and the explicit-state
//! reachability oracle.

mod cond;

use std::collections::{BTreeSet, HashMap};
use std::hash::BuildHasher;
use std::fmt::Write as _;

use hashbrown::HashTable;
use rustc_hash::FxBuildHasher;
use smallvec::SmallVec;

pub use cond::{Command, Cond, FastCond};

use crate::procdsl::{
    compile_forbid, compile_local, expand_ix, CmpOp, GroundGuard, GuardExpr, ModelError, ModelFile, PairScope,
    VarRef,
};

/// Index of a value within its variable's domain.
pub type Value = u16;

/// Valuation of one node's scope `V_n`, in scope order.
pub type LocalState = SmallVec<[Value; 8]>;

/// Valuation of every variable, in canonical global order.
pub type GlobalState = Box<[Value]>;

/// Default cap on explored global states.
pub const DEFAULT_STATE_CAP: usize = 10_000_000;

/// Environment variable overriding [`DEFAULT_STATE_CAP`] in the CLI.
pub const STATE_CAP_ENV: &str = "SPLITINV_STATE_CAP";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    Local { node: usize, name: String },
    Edge(usize),
    Aux(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    /// `node.var` for locals, the edge id for edges, the name for auxiliaries.
    pub name: String,
    pub kind: VarKind,
    pub domain: Vec<String>,
    pub init: Value,
}

impl VarInfo {
    pub fn value_index(&self, value: &str) -> Option<Value> {
        self.domain.iter().position(|d| d == value).map(|i| i as Value)
    }
}

/// A process `j` that may write part of `V_n`, with the positions the two
/// scopes share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interferer {
    pub node: usize,
    /// `(position in V_n, position in V_j)` for every shared variable.
    pub shared: Vec<(u16, u16)>,
}

#[derive(Debug, Clone)]
pub struct NodeInfo {
    pub name: String,
    /// Global variable ids of `V_n`: locals, neighborhood edges, auxiliaries.
    pub scope: Vec<usize>,
    /// Number of internal variables (a prefix of `scope`).
    pub internal: usize,
    pub commands: Vec<Command>,
    pub forbid: Cond,
    /// Nodes `j != n` that point to `n`, in node order.
    pub interferers: Vec<Interferer>,
    /// Nodes `k != n` that `n` points to, in node order.
    pub points_to: Vec<usize>,
    scope_index: HashMap<usize, u16>,
}

impl NodeInfo {
    /// Position of a global variable within `V_n`.
    pub fn position(&self, var: usize) -> Option<u16> {
        self.scope_index.get(&var).copied()
    }
}

/// A single ground command of one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundTransition {
    pub owner: usize,
    pub command: usize,
}

/// The compiled program `(V, I, T)` of a model.
#[derive(Debug, Clone)]
pub struct Program {
    model: ModelFile,
    vars: Vec<VarInfo>,
    nodes: Vec<NodeInfo>,
    initial: GlobalState,
    /// For each node, the property partners with a larger index.
    property_partners: Vec<Vec<usize>>,
}

impl Program {
    pub fn compile(model: &ModelFile) -> Result<Self, ModelError> {
        let net = &model.network;
        let mut vars: Vec<VarInfo> = Vec::new();
        let mut edge_var = vec![usize::MAX; net.edge_count()];
        let mut local_var: Vec<HashMap<String, usize>> = vec![HashMap::new(); net.node_count()];

        let edge_info = |e: usize| -> Result<VarInfo, ModelError> {
            let name = net.edge_name(e);
            let spec = model
                .edgespec(name)
                .ok_or_else(|| ModelError::Invalid(format!("edge `{name}` has no edgespec")))?;
            Ok(VarInfo {
                name: name.to_string(),
                kind: VarKind::Edge(e),
                domain: spec.domain.clone(),
                init: spec.domain.iter().position(|d| *d == spec.init).unwrap_or(0) as Value,
            })
        };

        for (n, node) in net.nodes().iter().enumerate() {
            let process = model.process_of(node)?;
            for v in &process.locals {
                local_var[n].insert(v.name.clone(), vars.len());
                vars.push(VarInfo {
                    name: format!("{node}.{}", v.name),
                    kind: VarKind::Local { node: n, name: v.name.clone() },
                    domain: v.domain.clone(),
                    init: v.domain.iter().position(|d| *d == v.init).unwrap_or(0) as Value,
                });
            }
            for e in net.neighborhood_of(n).edges() {
                if edge_var[e] == usize::MAX {
                    edge_var[e] = vars.len();
                    vars.push(edge_info(e)?);
                }
            }
        }
        for e in 0..net.edge_count() {
            if edge_var[e] == usize::MAX {
                edge_var[e] = vars.len();
                vars.push(edge_info(e)?);
            }
        }
        let mut aux_var = HashMap::new();
        for a in &model.auxiliaries {
            aux_var.insert(a.name.clone(), vars.len());
            vars.push(VarInfo {
                name: a.name.clone(),
                kind: VarKind::Aux(a.name.clone()),
                domain: a.domain.clone(),
                init: a.domain.iter().position(|d| *d == a.init).unwrap_or(0) as Value,
            });
        }

        let mut nodes = Vec::with_capacity(net.node_count());
        for (n, name) in net.nodes().iter().enumerate() {
            let process = model.process_of(name)?;
            let mut scope: Vec<usize> = process.locals.iter().map(|v| local_var[n][&v.name]).collect();
            let internal = scope.len();
            scope.extend(net.neighborhood_of(n).edges().into_iter().map(|e| edge_var[e]));
            scope.extend(model.auxiliaries.iter().map(|a| aux_var[&a.name]));
            let scope_index: HashMap<usize, u16> =
                scope.iter().enumerate().map(|(p, &g)| (g, p as u16)).collect();
            let global_of = |v: &VarRef| -> usize {
                match v {
                    VarRef::Local(l) => local_var[n][l],
                    VarRef::Edge(e) => edge_var[*e],
                    VarRef::Aux(a) => aux_var[a],
                }
            };
            let compile = |g: &GroundGuard| compile_guard(g, &|v| global_of(v), &scope_index, &vars);
            let commands = expand_ix(model, n)?
                .iter()
                .map(|c| {
                    let mut label = format!("c{}", c.template);
                    if let Some(e) = c.bound_edge {
                        let _ = write!(label, "[{}]", net.edge_name(e));
                    }
                    let updates = c
                        .updates
                        .iter()
                        .map(|(v, val)| {
                            let g = global_of(v);
                            (scope_index[&g], vars[g].value_index(val).expect("type-checked"))
                        })
                        .collect();
                    Command { label, guard: compile(&c.guard), updates }
                })
                .collect();
            let forbid = compile(&compile_forbid(model, n)?);
            nodes.push(NodeInfo {
                name: name.clone(),
                scope,
                internal,
                commands,
                forbid,
                interferers: Vec::new(),
                points_to: Vec::new(),
                scope_index,
            });
        }

        let has_aux = !model.auxiliaries.is_empty();
        let all: Vec<usize> = (0..nodes.len()).collect();
        for i in 0..nodes.len() {
            let candidates: BTreeSet<usize> = if has_aux {
                all.iter().copied().collect()
            } else {
                net.neighborhood_of(i)
                    .edges()
                    .into_iter()
                    .flat_map(|e| net.endpoints(e).into_iter().filter(move |&j| net.writes(j, e)))
                    .collect()
            };
            for j in candidates {
                if i == j {
                    continue;
                }
                let shared: Vec<(u16, u16)> = nodes[i]
                    .scope
                    .iter()
                    .enumerate()
                    .filter_map(|(pi, g)| nodes[j].position(*g).map(|pj| (pi as u16, pj)))
                    .collect();
                nodes[i].interferers.push(Interferer { node: j, shared });
                nodes[j].points_to.push(i);
            }
        }

        let property_partners = (0..nodes.len())
            .map(|i| match model.property.scope {
                PairScope::AllPairs => (i + 1..nodes.len()).collect(),
                PairScope::AdjacentPairs => {
                    let adj: BTreeSet<usize> = net
                        .neighborhood_of(i)
                        .edges()
                        .into_iter()
                        .flat_map(|e| net.endpoints(e))
                        .filter(|&j| j > i)
                        .collect();
                    adj.into_iter().collect()
                }
            })
            .collect();

        let initial: GlobalState = vars.iter().map(|v| v.init).collect();
        Ok(Self { model: model.clone(), vars, nodes, initial, property_partners })
    }

    pub fn model(&self) -> &ModelFile {
        &self.model
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn node(&self, n: usize) -> &NodeInfo {
        &self.nodes[n]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn initial_state(&self) -> &GlobalState {
        &self.initial
    }

    /// `I`: under the per-variable initial values this is a single state.
    pub fn initial_states(&self) -> StateSet {
        StateSet::from_states(vec![self.initial.clone()])
    }

    /// Projection of the initial state on `V_n`.
    pub fn initial_local(&self, n: usize) -> LocalState {
        self.nodes[n].scope.iter().map(|&g| self.initial[g]).collect()
    }

    pub fn project_state(&self, s: &[Value], n: usize) -> LocalState {
        self.nodes[n].scope.iter().map(|&g| s[g]).collect()
    }

    /// `(position in V_i, position in V_j)` for every variable both scopes hold.
    pub fn shared_positions(&self, i: usize, j: usize) -> Vec<(u16, u16)> {
        self.nodes[i]
            .scope
            .iter()
            .enumerate()
            .filter_map(|(pi, g)| self.nodes[j].position(*g).map(|pj| (pi as u16, pj)))
            .collect()
    }

    /// Nodes `k != n` whose scope intersects `V_n`, in node order.
    pub fn sharers(&self, n: usize) -> Vec<usize> {
        if !self.model.auxiliaries.is_empty() {
            return (0..self.nodes.len()).filter(|&k| k != n).collect();
        }
        let net = &self.model.network;
        let ks: BTreeSet<usize> =
            net.neighborhood_of(n).edges().into_iter().flat_map(|e| net.endpoints(e)).filter(|&k| k != n).collect();
        ks.into_iter().collect()
    }

    /// Size of the full local space of `V_n` (saturating).
    pub fn local_space_size(&self, n: usize) -> usize {
        self.nodes[n]
            .scope
            .iter()
            .fold(1usize, |acc, &g| acc.saturating_mul(self.vars[g].domain.len()))
    }

    /// Every valuation of `V_n`, in lexicographic order.
    pub fn local_space(&self, n: usize) -> Vec<LocalState> {
        let radices: Vec<usize> = self.nodes[n].scope.iter().map(|&g| self.vars[g].domain.len()).collect();
        let mut out = Vec::with_capacity(self.local_space_size(n));
        let mut cur: LocalState = radices.iter().map(|_| 0).collect();
        loop {
            out.push(cur.clone());
            let mut k = radices.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                cur[k] += 1;
                if (cur[k] as usize) < radices[k] {
                    break;
                }
                cur[k] = 0;
            }
        }
    }

    /// Successors of a local state under the node's own commands.
    pub fn local_successors(&self, n: usize, s: &[Value]) -> Vec<LocalState> {
        self.nodes[n]
            .commands
            .iter()
            .filter(|c| c.enabled(s))
            .map(|c| {
                let mut t = LocalState::from_slice(s);
                c.apply_in_place(&mut t);
                t
            })
            .collect()
    }

    pub fn transitions_of(&self, n: usize) -> Vec<GroundTransition> {
        (0..self.nodes[n].commands.len()).map(|command| GroundTransition { owner: n, command }).collect()
    }

    pub fn all_transitions(&self) -> Vec<GroundTransition> {
        (0..self.nodes.len()).flat_map(|n| self.transitions_of(n)).collect()
    }

    /// Applies one transition to a global state, leaving everything outside
    /// `V_owner` untouched.
    pub fn fire(&self, t: GroundTransition, s: &[Value]) -> Option<GlobalState> {
        let node = &self.nodes[t.owner];
        let cmd = &node.commands[t.command];
        if !cmd.guard.eval_by(&|p| s[node.scope[p as usize]]) {
            return None;
        }
        let mut out: GlobalState = s.into();
        for &(p, v) in &cmd.updates {
            out[node.scope[p as usize]] = v;
        }
        Some(out)
    }

    /// Does `forbid` hold at node `n` in global state `s`?
    pub fn forbidden_at(&self, n: usize, s: &[Value]) -> bool {
        let node = &self.nodes[n];
        node.forbid.eval_by(&|p| s[node.scope[p as usize]])
    }

    /// Ordered pairs `(i, j)`, `i < j`, covered by the property.
    pub fn property_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.property_partners
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
    }

    /// The first property pair that is violated in `s`.
    pub fn violation(&self, s: &[Value]) -> Option<(usize, usize)> {
        let hot: Vec<bool> = (0..self.nodes.len()).map(|n| self.forbidden_at(n, s)).collect();
        for (i, js) in self.property_partners.iter().enumerate() {
            if hot[i] {
                if let Some(&j) = js.iter().find(|&&j| hot[j]) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn format_value(&self, var: usize, v: Value) -> &str {
        &self.vars[var].domain[v as usize]
    }

    /// `var=value` pairs separated by spaces, in canonical order.
    pub fn format_global(&self, s: &[Value]) -> String {
        let mut out = String::new();
        for (g, &v) in s.iter().enumerate() {
            if g > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}={}", self.vars[g].name, self.format_value(g, v));
        }
        out
    }

    pub fn format_local(&self, n: usize, s: &[Value]) -> String {
        let mut out = String::new();
        for (p, &g) in self.nodes[n].scope.iter().enumerate() {
            if p > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}={}", self.vars[g].name, self.format_value(g, s[p]));
        }
        out
    }

    /// Compiles a predicate over `V_n` (same syntax as guards) at node `n`.
    pub fn compile_local_guard(&self, n: usize, guard: &GuardExpr) -> Result<Cond, ModelError> {
        let ground = compile_local(&self.model, n, guard, "predicate")?;
        let node = &self.nodes[n];
        let global_of = |v: &VarRef| -> usize {
            let kind = match v {
                VarRef::Local(l) => VarKind::Local { node: n, name: l.clone() },
                VarRef::Edge(e) => VarKind::Edge(*e),
                VarRef::Aux(a) => VarKind::Aux(a.clone()),
            };
            self.vars.iter().position(|x| x.kind == kind).expect("resolved variable")
        };
        Ok(compile_guard(&ground, &global_of, &node.scope_index, &self.vars))
    }

    /// `(name, value)` pairs of a local state.
    pub fn named_local(&self, n: usize, s: &[Value]) -> Vec<(String, String)> {
        self.nodes[n]
            .scope
            .iter()
            .zip(s)
            .map(|(&g, &v)| (self.vars[g].name.clone(), self.format_value(g, v).to_string()))
            .collect()
    }
}

fn compile_guard(
    g: &GroundGuard,
    global_of: &dyn Fn(&VarRef) -> usize,
    scope_index: &HashMap<usize, u16>,
    vars: &[VarInfo],
) -> Cond {
    match g {
        GroundGuard::Const(b) => Cond::Const(*b),
        GroundGuard::Atom { var, op, value } => {
            let gid = global_of(var);
            let p = scope_index[&gid];
            let v = vars[gid].value_index(value).expect("type-checked");
            match op {
                CmpOp::Eq => Cond::Eq(p, v),
                CmpOp::Ne => Cond::Ne(p, v),
            }
        }
        GroundGuard::Not(x) => Cond::Not(Box::new(compile_guard(x, global_of, scope_index, vars))),
        GroundGuard::And(xs) => Cond::And(xs.iter().map(|x| compile_guard(x, global_of, scope_index, vars)).collect()),
        GroundGuard::Or(xs) => Cond::Or(xs.iter().map(|x| compile_guard(x, global_of, scope_index, vars)).collect()),
    }
}

/// A finite set of global states in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateSet {
    states: Vec<GlobalState>,
}

impl StateSet {
    pub fn from_states(mut states: Vec<GlobalState>) -> Self {
        states.sort_unstable();
        states.dedup();
        Self { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: &[Value]) -> bool {
        self.states.binary_search_by(|x| x.as_ref().cmp(s)).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GlobalState> {
        self.states.iter()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.states.iter().all(|s| other.contains(s))
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet::from_states(self.states.iter().chain(other.states.iter()).cloned().collect())
    }
}

/// `SP(T, Z)`: every successor of a state in `z` under some transition in `t`.
pub fn sp(program: &Program, t: &[GroundTransition], z: &StateSet) -> StateSet {
    StateSet::from_states(
        z.iter()
            .flat_map(|s| t.iter().filter_map(move |&tr| program.fire(tr, s)))
            .collect(),
    )
}

/// Image of a state set under restriction to `V_n`.
pub fn project(program: &Program, z: &StateSet, n: usize) -> BTreeSet<LocalState> {
    z.iter().map(|s| program.project_state(s, n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachOutcome {
    Complete,
    /// The cap was hit; the states found so far are kept.
    CapacityExceeded,
}

/// Bit-packed encoding of global states, so the oracle can hold tens of
/// millions of them.
#[derive(Debug, Clone)]
struct Packer {
    /// `(word, shift, bits)` per variable.
    slots: Vec<(usize, u32, u32)>,
    words: usize,
}

impl Packer {
    fn new(vars: &[VarInfo]) -> Self {
        let mut slots = Vec::with_capacity(vars.len());
        let (mut word, mut used) = (0usize, 0u32);
        for v in vars {
            let bits = (usize::BITS - (v.domain.len().max(2) - 1).leading_zeros()).max(1);
            if used + bits > 64 {
                word += 1;
                used = 0;
            }
            slots.push((word, used, bits));
            used += bits;
        }
        Self { slots, words: if vars.is_empty() { 1 } else { word + 1 } }
    }

    fn pack(&self, s: &[Value], out: &mut [u64]) {
        out.fill(0);
        for (&(w, shift, _), &v) in self.slots.iter().zip(s) {
            out[w] |= (v as u64) << shift;
        }
    }

    #[inline]
    fn set(&self, packed: &mut [u64], var: usize, v: Value) {
        let (w, shift, bits) = self.slots[var];
        let mask = ((1u64 << bits) - 1) << shift;
        packed[w] = (packed[w] & !mask) | ((v as u64) << shift);
    }

    fn unpack(&self, packed: &[u64], out: &mut [Value]) {
        for (o, &(w, shift, bits)) in out.iter_mut().zip(&self.slots) {
            *o = ((packed[w] >> shift) & ((1u64 << bits) - 1)) as Value;
        }
    }
}

/// Result of breadth-first exploration, with a BFS parent for every state.
/// States are numbered in discovery order.
#[derive(Debug, Clone)]
pub struct Reachability {
    pub outcome: ReachOutcome,
    packer: Packer,
    arena: Vec<u64>,
    parents: Vec<(u32, u32)>,
    transitions: Vec<GroundTransition>,
}

impl Reachability {
    pub fn is_complete(&self) -> bool {
        self.outcome == ReachOutcome::Complete
    }

    pub fn len(&self) -> usize {
        self.arena.len() / self.packer.words
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, idx: usize) -> GlobalState {
        let w = self.packer.words;
        let mut out = vec![0; self.packer.slots.len()].into_boxed_slice();
        self.packer.unpack(&self.arena[idx * w..(idx + 1) * w], &mut out);
        out
    }

    pub fn states(&self) -> impl Iterator<Item = GlobalState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    pub fn state_set(&self) -> StateSet {
        StateSet::from_states(self.states().collect())
    }

    /// Image of the reachable states on `V_n`.
    pub fn project(&self, program: &Program, n: usize) -> BTreeSet<LocalState> {
        self.states().map(|s| program.project_state(&s, n)).collect()
    }

    /// Shortest path from the initial state to the `idx`-th discovered state.
    pub fn path_to(&self, idx: usize) -> Vec<(Option<GroundTransition>, GlobalState)> {
        let mut path = Vec::new();
        let mut cur = idx;
        loop {
            let (parent, t) = self.parents[cur];
            if cur == 0 {
                path.push((None, self.state(0)));
                break;
            }
            path.push((Some(self.transitions[t as usize]), self.state(cur)));
            cur = parent as usize;
        }
        path.reverse();
        path
    }

    /// First discovered state (in BFS order) that violates the property.
    pub fn find_violation(&self, program: &Program) -> Option<(usize, (usize, usize))> {
        (0..self.len()).find_map(|i| program.violation(&self.state(i)).map(|pair| (i, pair)))
    }

    /// Sorted `var=value` listing, one state per line.
    pub fn dump(&self, program: &Program) -> String {
        let mut out = String::new();
        for s in self.state_set().iter() {
            out.push_str(&program.format_global(s));
            out.push('\n');
        }
        out
    }
}

/// `(mu Z: I or SP(T, Z))` by frontier BFS, stopping at `state_cap` states.
pub fn reach(program: &Program, state_cap: usize) -> Reachability {
    assert!(state_cap > 0, "state cap must be positive");
    let packer = Packer::new(&program.vars);
    let w = packer.words;
    let transitions = program.all_transitions();
    let hasher = FxBuildHasher;
    // Entries carry the first packed word, so most probes never touch the arena.
    let mut table: HashTable<(u64, u32)> = HashTable::new();
    let mut arena: Vec<u64> = Vec::new();
    let mut parents: Vec<(u32, u32)> = Vec::new();

    let mut key = vec![0u64; w];
    packer.pack(&program.initial, &mut key);
    arena.extend_from_slice(&key);
    table.insert_unique(hasher.hash_one(&key[..]), (key[0], 0), |_| unreachable!());
    parents.push((0, 0));

    let compiled: Vec<(FastCond, Vec<(usize, Value)>)> = transitions
        .iter()
        .map(|t| {
            let node = &program.nodes[t.owner];
            let cmd = &node.commands[t.command];
            let guard = FastCond::new(&cmd.guard, &|p| node.scope[p as usize] as u32);
            let updates = cmd.updates.iter().map(|&(p, v)| (node.scope[p as usize], v)).collect();
            (guard, updates)
        })
        .collect();
    // Index transitions by one equality atom of their guard, so each state
    // only looks at transitions whose key atom holds.
    let mut keyed: Vec<(usize, Vec<Vec<u32>>)> = Vec::new();
    let mut unkeyed: Vec<u32> = Vec::new();
    for (ti, (guard, _)) in compiled.iter().enumerate() {
        let key = match guard {
            FastCond::Conj(atoms) => atoms.iter().filter(|a| a.2).map(|a| (a.0 as usize, a.1)).min(),
            FastCond::Tree(_) => None,
        };
        match key {
            Some((g, v)) => {
                let slot = match keyed.iter().position(|(kg, _)| *kg == g) {
                    Some(i) => i,
                    None => {
                        keyed.push((g, vec![Vec::new(); program.vars[g].domain.len()]));
                        keyed.len() - 1
                    }
                };
                keyed[slot].1[v as usize].push(ti as u32);
            }
            None => unkeyed.push(ti as u32),
        }
    }
    keyed.sort_by_key(|(g, _)| *g);
    let mut cur: Vec<Value> = vec![0; program.vars.len()];
    let mut next = 0usize;
    let mut outcome = ReachOutcome::Complete;
    'bfs: while next * w < arena.len() {
        packer.unpack(&arena[next * w..(next + 1) * w], &mut cur);
        let candidates = keyed
            .iter()
            .flat_map(|(g, by_value)| by_value[cur[*g] as usize].iter())
            .chain(unkeyed.iter())
            .copied();
        for ti in candidates {
            let (guard, updates) = &compiled[ti as usize];
            if !guard.eval(&cur) {
                continue;
            }
            key.copy_from_slice(&arena[next * w..(next + 1) * w]);
            for &(g, v) in updates {
                packer.set(&mut key, g, v);
            }
            let h = hasher.hash_one(&key[..]);
            let arena_ref = &arena;
            if table
                .find(h, |&(k0, i)| k0 == key[0] && (w == 1 || arena_ref[i as usize * w..(i as usize + 1) * w] == key[..]))
                .is_some()
            {
                continue;
            }
            let len = arena.len() / w;
            if len >= state_cap {
                outcome = ReachOutcome::CapacityExceeded;
                break 'bfs;
            }
            let arena_ref = &arena;
            table.insert_unique(h, (key[0], len as u32), |&(_, i)| {
                hasher.hash_one(&arena_ref[i as usize * w..(i as usize + 1) * w])
            });
            arena.extend_from_slice(&key);
            parents.push((next as u32, ti));
        }
        next += 1;
    }
    Reachability { outcome, packer, arena, parents, transitions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, Family};
    use crate::procdsl::{gen_dining, gen_mutex};
    use proptest::prelude::*;

    fn dining(n: usize) -> Program {
        Program::compile(&gen_dining(&generate(&Family::Ring { size: n }).unwrap())).unwrap()
    }

    fn mutex(n: usize, last: bool) -> Program {
        Program::compile(&gen_mutex(n, last).unwrap()).unwrap()
    }

    #[test]
    fn canonical_layout() {
        let p = dining(3);
        let names: Vec<&str> = p.vars().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["n0.L", "f0_1", "f2_0", "n1.L", "f1_2", "n2.L"]);
        let scope: Vec<&str> = p.node(0).scope.iter().map(|&g| p.vars()[g].name.as_str()).collect();
        assert_eq!(scope, ["n0.L", "f0_1", "f2_0"]);
    }

    #[test]
    fn initial_states_match_protocols() {
        let p = dining(3);
        let init = p.initial_states();
        assert_eq!(init.len(), 1);
        assert_eq!(
            p.format_global(init.iter().next().unwrap()),
            "n0.L=T f0_1=bot f2_0=bot n1.L=T f1_2=bot n2.L=T"
        );
        let p = mutex(2, true);
        assert_eq!(p.format_global(p.initial_state()), "1.l=T 2.l=T x=true last=0");
        let p = mutex(2, false);
        assert_eq!(p.format_global(p.initial_state()), "1.l=T 2.l=T x=true");
    }

    #[test]
    fn sp_of_empty_is_empty() {
        let p = dining(3);
        assert!(sp(&p, &p.all_transitions(), &StateSet::default()).is_empty());
    }

    #[test]
    fn sp_mutex_initial() {
        let p = mutex(2, false);
        let next = sp(&p, &p.all_transitions(), &p.initial_states());
        let lines: Vec<String> = next.iter().map(|s| p.format_global(s)).collect();
        assert_eq!(lines, ["1.l=T 2.l=H x=true", "1.l=H 2.l=T x=true"]);
    }

    #[test]
    fn sp_dining_single_node() {
        let p = dining(3);
        let next = sp(&p, &p.transitions_of(0), &p.initial_states());
        let lines: Vec<String> = next.iter().map(|s| p.format_global(s)).collect();
        assert_eq!(lines, ["n0.L=H f0_1=bot f2_0=bot n1.L=T f1_2=bot n2.L=T"]);
    }

    #[test]
    fn reach_mutex_excludes_double_entry() {
        let p = mutex(2, false);
        let r = reach(&p, 1000);
        assert!(r.is_complete());
        assert!(r.find_violation(&p).is_none());
        // (T,T),(T,H),(H,T),(H,H) with x=true; (E,T),(E,H),(T,E),(H,E) with x=false.
        assert_eq!(r.len(), 8);
    }

    #[test]
    fn reach_dining_ring_is_safe_and_closed() {
        let p = dining(3);
        let r = reach(&p, 100_000);
        assert!(r.is_complete());
        assert!(r.find_violation(&p).is_none());
        let z = r.state_set();
        assert!(p.initial_states().is_subset(&z));
        assert!(sp(&p, &p.all_transitions(), &z).is_subset(&z));
    }

    #[test]
    fn reach_reports_capacity() {
        let p = dining(4);
        let r = reach(&p, 10);
        assert_eq!(r.outcome, ReachOutcome::CapacityExceeded);
        assert_eq!(r.len(), 10);
    }

    #[test]
    fn projection_collapses_states_outside_scope() {
        let p = dining(4);
        let r = reach(&p, 1_000_000).state_set();
        let local = project(&p, &r, 0);
        assert!(local.len() < r.len());
        let single = StateSet::from_states(vec![p.initial_state().clone()]);
        assert_eq!(project(&p, &single, 2).len(), 1);
    }

    #[test]
    fn counterexample_path_replays() {
        let mut m = gen_mutex(2, false).unwrap();
        // Drop the test of x: both processes can enter.
        m.processes[0].commands[1].guard = crate::procdsl::GuardExpr::eq("l", "H");
        let p = Program::compile(&m).unwrap();
        let r = reach(&p, 1000);
        let (idx, pair) = r.find_violation(&p).unwrap();
        assert_eq!(pair, (0, 1));
        let path = r.path_to(idx);
        assert_eq!(path[0].1, *p.initial_state());
        for w in path.windows(2) {
            assert_eq!(p.fire(w[1].0.unwrap(), &w[0].1).unwrap(), w[1].1);
        }
    }

    #[test]
    fn golden_projection_of_ring3() {
        let p = dining(3);
        let r = reach(&p, 1_000_000);
        assert_eq!(r.len(), 446);
        assert_eq!(r.project(&p, 0).len(), 23);
        assert_eq!(project(&p, &r.state_set(), 0), r.project(&p, 0));
    }

    fn random_subset(p: &Program, seed: Vec<bool>) -> StateSet {
        let all = reach(p, 100_000).state_set();
        StateSet::from_states(all.iter().zip(seed.iter().cycle()).filter(|(_, k)| **k).map(|(s, _)| s.clone()).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sp_is_monotone(a in prop::collection::vec(any::<bool>(), 1..40), b in prop::collection::vec(any::<bool>(), 1..40)) {
            let p = dining(3);
            let z1 = random_subset(&p, a);
            let z2 = z1.union(&random_subset(&p, b));
            let t = p.all_transitions();
            prop_assert!(sp(&p, &t, &z1).is_subset(&sp(&p, &t, &z2)));
        }

        #[test]
        fn sp_distributes_over_transition_union(a in prop::collection::vec(any::<bool>(), 1..40), split in 0usize..30) {
            let p = dining(3);
            let z = random_subset(&p, a);
            let all = p.all_transitions();
            let k = split.min(all.len());
            let (t1, t2) = all.split_at(k);
            prop_assert_eq!(sp(&p, &all, &z), sp(&p, t1, &z).union(&sp(&p, t2, &z)));
        }

        #[test]
        fn transitions_respect_the_frame(a in prop::collection::vec(any::<bool>(), 1..40)) {
            let p = dining(4);
            for s in random_subset(&p, a).iter() {
                for t in p.all_transitions() {
                    if let Some(u) = p.fire(t, s) {
                        for g in 0..s.len() {
                            if p.node(t.owner).position(g).is_none() {
                                prop_assert_eq!(s[g], u[g]);
                            }
                        }
                    }
                }
            }
        }
    }
}
