//! Local symmetries `(m, β, n)`: the network groupoid, its largest balanced
//! sub-groupoid, orbits, and the symmetry-reduced fixpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::network::NetworkGraph;
use crate::semantics::{Command, LocalState, Program, Value, VarKind};
use crate::splitfix::{FixpointStats, LocalStateSet, Mode, Solver, SplitInvariant};

/// Position and value renaming from `V_m` to `V_n` induced by a symmetry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymMap {
    /// Target position of every position of `V_m`.
    pub pos: Vec<u16>,
    /// Per position of `V_m`, the image of every value index.
    pub values: Vec<Vec<Value>>,
}

impl SymMap {
    pub fn apply(&self, s: &[Value]) -> LocalState {
        let mut out: LocalState = s.iter().map(|_| 0).collect();
        for (p, &v) in s.iter().enumerate() {
            out[self.pos[p] as usize] = self.values[p][v as usize];
        }
        out
    }

    fn rename_command(&self, c: &Command) -> (crate::semantics::Cond, Vec<(u16, Value)>) {
        let guard = c
            .guard
            .rename(&|p, v| Some((self.pos[p as usize], self.values[p as usize][v as usize])))
            .expect("total map");
        let updates = c
            .updates
            .iter()
            .map(|&(p, v)| (self.pos[p as usize], self.values[p as usize][v as usize]))
            .collect();
        Command { label: String::new(), guard, updates }.canonical()
    }
}

/// A triple `(m, β, n)`; `beta[k]` is the image of the `k`-th neighborhood
/// edge of `m` (in declaration order).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalSymmetry {
    pub m: usize,
    pub n: usize,
    pub beta: Vec<usize>,
}

impl LocalSymmetry {
    pub fn identity(net: &NetworkGraph, m: usize) -> Self {
        Self { m, n: m, beta: net.neighborhood_of(m).edges() }
    }

    /// Image of edge `e` of `m`'s neighborhood.
    pub fn image(&self, net: &NetworkGraph, e: usize) -> Option<usize> {
        let src = net.neighborhood_of(self.m).edges();
        src.iter().position(|&x| x == e).map(|k| self.beta[k])
    }

    pub fn inverse(&self, net: &NetworkGraph) -> Self {
        let dst = net.neighborhood_of(self.n).edges();
        let src = net.neighborhood_of(self.m).edges();
        let beta = dst.iter().map(|e| src[self.beta.iter().position(|b| b == e).unwrap()]).collect();
        Self { m: self.n, n: self.m, beta }
    }

    /// `other ∘ self`, defined when `self.n == other.m`.
    pub fn then(&self, net: &NetworkGraph, other: &LocalSymmetry) -> Option<Self> {
        if self.n != other.m {
            return None;
        }
        let beta = self.beta.iter().map(|&e| other.image(net, e)).collect::<Option<_>>()?;
        Some(Self { m: self.m, n: other.n, beta })
    }

    /// `(edge, image)` pairs, by edge name, for reports.
    pub fn describe(&self, net: &NetworkGraph) -> Vec<(String, String)> {
        net.neighborhood_of(self.m)
            .edges()
            .into_iter()
            .zip(&self.beta)
            .map(|(e, &b)| (net.edge_name(e).to_string(), net.edge_name(b).to_string()))
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("not an automorphism: {0}")]
    NotAutomorphism(String),
    #[error("processes at `{0}` and `{1}` are not compatible under the symmetry")]
    Incompatible(String, String),
}

fn value_map(program: &Program, sym: &LocalSymmetry, p: usize) -> Option<(u16, Vec<Value>)> {
    let net = &program.model().network;
    let (vm, vn) = (program.node(sym.m), program.node(sym.n));
    let g = vm.scope[p];
    let var = &program.vars()[g];
    let (target, endpoints): (usize, Option<(Vec<usize>, Vec<usize>)>) = match &var.kind {
        VarKind::Local { .. } => {
            if p >= vm.internal || p >= vn.internal {
                return None;
            }
            (vn.scope[p], None)
        }
        VarKind::Aux(_) => (g, None),
        VarKind::Edge(e) => {
            let b = sym.image(net, *e)?;
            let src: Vec<usize> = net.endpoints(*e).into_iter().filter(|&k| k != sym.m).collect();
            let dst: Vec<usize> = net.endpoints(b).into_iter().filter(|&k| k != sym.n).collect();
            if src.len() != dst.len() {
                return None;
            }
            let target = program
                .vars()
                .iter()
                .position(|v| v.kind == VarKind::Edge(b))
                .expect("every edge is a variable");
            (target, Some((src, dst)))
        }
    };
    let tvar = &program.vars()[target];
    if tvar.domain.len() != var.domain.len() {
        return None;
    }
    let (mname, nname) = (vm.name.as_str(), vn.name.as_str());
    let mut images = Vec::with_capacity(var.domain.len());
    for v in &var.domain {
        let image: &str = match &endpoints {
            Some((src, dst)) => {
                if v == mname {
                    nname
                } else if let Some(k) = src.iter().position(|&x| net.node_name(x) == v) {
                    net.node_name(dst[k])
                } else {
                    v
                }
            }
            None => {
                if v == mname {
                    nname
                } else if v == nname {
                    mname
                } else {
                    v
                }
            }
        };
        images.push(tvar.value_index(image)?);
    }
    let distinct: BTreeSet<&Value> = images.iter().collect();
    if distinct.len() != images.len() {
        return None;
    }
    Some((vn.position(target)?, images))
}

/// The renaming induced by `sym`, if it is direction preserving and maps
/// `m`'s commands and initial state exactly onto `n`'s.
pub fn compatible_map(program: &Program, sym: &LocalSymmetry) -> Option<SymMap> {
    let net = &program.model().network;
    let (vm, vn) = (program.node(sym.m), program.node(sym.n));
    if vm.scope.len() != vn.scope.len() || vm.internal != vn.internal {
        return None;
    }
    for (e, &b) in net.neighborhood_of(sym.m).edges().iter().zip(&sym.beta) {
        if net.writes(sym.m, *e) != net.writes(sym.n, b) || net.reads(sym.m, *e) != net.reads(sym.n, b) {
            return None;
        }
    }
    let mut pos = Vec::with_capacity(vm.scope.len());
    let mut values = Vec::with_capacity(vm.scope.len());
    for p in 0..vm.scope.len() {
        let (t, img) = value_map(program, sym, p)?;
        pos.push(t);
        values.push(img);
    }
    let map = SymMap { pos, values };
    if map.apply(&program.initial_local(sym.m)) != program.initial_local(sym.n) {
        return None;
    }
    let mut renamed: Vec<_> = vm.commands.iter().map(|c| map.rename_command(c)).collect();
    let mut target: Vec<_> = vn.commands.iter().map(Command::canonical).collect();
    renamed.sort();
    target.sort();
    (renamed == target).then_some(map)
}

fn bijections(src_len: usize, dst: &[usize]) -> Vec<Vec<usize>> {
    if src_len != dst.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(dst.len());
    let mut used = vec![false; dst.len()];
    fn rec(dst: &[usize], cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == dst.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..dst.len() {
            if !used[k] {
                used[k] = true;
                cur.push(dst[k]);
                rec(dst, cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    rec(dst, &mut cur, &mut used, &mut out);
    out
}

/// A set of local symmetries with their induced renamings.
#[derive(Debug, Clone, Default)]
pub struct Groupoid {
    entries: BTreeMap<LocalSymmetry, SymMap>,
}

impl Groupoid {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, s: &LocalSymmetry) -> bool {
        self.entries.contains_key(s)
    }

    pub fn map(&self, s: &LocalSymmetry) -> Option<&SymMap> {
        self.entries.get(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LocalSymmetry, &SymMap)> {
        self.entries.iter()
    }

    pub fn symmetries(&self) -> impl Iterator<Item = &LocalSymmetry> {
        self.entries.keys()
    }

    /// Symmetries from `m` to `n`.
    pub fn between(&self, m: usize, n: usize) -> impl Iterator<Item = &LocalSymmetry> {
        let lo = LocalSymmetry { m, n, beta: Vec::new() };
        self.entries.range(lo..).map(|(s, _)| s).take_while(move |s| s.m == m && s.n == n)
    }

    /// Identity, inverse and composition closure, checked directly.
    pub fn closure_violation(&self, net: &NetworkGraph) -> Option<String> {
        let mut nodes = BTreeSet::new();
        for s in self.symmetries() {
            nodes.insert(s.m);
            if !self.contains(&s.inverse(net)) {
                return Some(format!("inverse of {s:?} missing"));
            }
            for t in (0..net.node_count()).flat_map(|k| self.between(s.n, k)) {
                let c = s.then(net, t).expect("composable");
                if !self.contains(&c) {
                    return Some(format!("composition {s:?} then {t:?} missing"));
                }
            }
        }
        nodes
            .into_iter()
            .find(|&m| !self.contains(&LocalSymmetry::identity(net, m)))
            .map(|m| format!("identity at {m} missing"))
    }
}

/// Every direction-preserving, process-compatible neighborhood bijection
/// between every ordered pair of nodes.
pub fn groupoid(program: &Program) -> Groupoid {
    let net = &program.model().network;
    let n = program.node_count();
    let mut entries = BTreeMap::new();
    for m in 0..n {
        let src = net.neighborhood_of(m).edges();
        for k in 0..n {
            let dst = net.neighborhood_of(k).edges();
            for beta in bijections(src.len(), &dst) {
                let sym = LocalSymmetry { m, n: k, beta };
                if let Some(map) = compatible_map(program, &sym) {
                    entries.insert(sym, map);
                }
            }
        }
    }
    Groupoid { entries }
}

fn pointers(net: &NetworkGraph, has_aux: bool, n: usize) -> Vec<usize> {
    (0..net.node_count()).filter(|&k| has_aux || net.points_to_ix(k, n)).collect()
}

/// Does `(m, β, n)` satisfy the balance condition within `b`?
fn balanced(net: &NetworkGraph, has_aux: bool, b: &Groupoid, s: &LocalSymmetry) -> bool {
    let into_n = pointers(net, has_aux, s.n);
    pointers(net, has_aux, s.m).into_iter().all(|k| {
        let common = net.common_edges(k, s.m);
        into_n.iter().any(|&l| {
            b.between(k, l)
                .any(|d| common.iter().all(|&e| d.image(net, e) == s.image(net, e)))
        })
    })
}

/// Every triple of `b` satisfies the balance condition within `b`.
pub fn audit_balance(program: &Program, b: &Groupoid) -> bool {
    let net = &program.model().network;
    let has_aux = !program.model().auxiliaries.is_empty();
    b.symmetries().all(|s| balanced(net, has_aux, b, s))
}

/// The largest balance relation inside `g`: a greatest fixpoint of the
/// balance condition, followed by closure repair until both hold.
pub fn largest_balance(program: &Program, g: &Groupoid) -> Groupoid {
    let net = &program.model().network;
    let has_aux = !program.model().auxiliaries.is_empty();
    let mut b = g.clone();
    // Triples (m, β, n) to re-check once some (k, δ, l) disappears, keyed by
    // the nodes `m` that `k` points to.
    let pointed: Vec<Vec<usize>> = (0..net.node_count())
        .map(|k| (0..net.node_count()).filter(|&m| has_aux || net.points_to_ix(k, m)).collect())
        .collect();
    loop {
        let mut queue: VecDeque<LocalSymmetry> = b.symmetries().cloned().collect();
        let mut queued: BTreeSet<LocalSymmetry> = queue.iter().cloned().collect();
        while let Some(s) = queue.pop_front() {
            queued.remove(&s);
            if !b.contains(&s) || balanced(net, has_aux, &b, &s) {
                continue;
            }
            b.entries.remove(&s);
            for &m in &pointed[s.m] {
                let affected: Vec<LocalSymmetry> =
                    (0..net.node_count()).flat_map(|n| b.between(m, n).cloned().collect::<Vec<_>>()).collect();
                for t in affected {
                    if queued.insert(t.clone()) {
                        queue.push_back(t);
                    }
                }
            }
        }
        let mut broken = Vec::new();
        for s in b.symmetries() {
            if !b.contains(&s.inverse(net)) {
                broken.push(s.clone());
                continue;
            }
            let composable: Vec<&LocalSymmetry> =
                (0..net.node_count()).flat_map(|k| b.between(s.n, k)).collect();
            if composable.iter().any(|t| !b.contains(&s.then(net, t).unwrap())) {
                broken.push(s.clone());
            }
        }
        if broken.is_empty() {
            return b;
        }
        for s in broken {
            b.entries.remove(&s);
        }
    }
}

/// A node permutation with a matching edge permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Automorphism {
    pub fn check(&self, net: &NetworkGraph) -> Result<(), SymmetryError> {
        let perm = |v: &[usize], len: usize| v.len() == len && v.iter().collect::<BTreeSet<_>>().len() == len && v.iter().all(|&x| x < len);
        if !perm(&self.nodes, net.node_count()) || !perm(&self.edges, net.edge_count()) {
            return Err(SymmetryError::NotAutomorphism("not a permutation".into()));
        }
        for n in 0..net.node_count() {
            for e in 0..net.edge_count() {
                let (sn, se) = (self.nodes[n], self.edges[e]);
                if net.writes(n, e) != net.writes(sn, se) || net.reads(n, e) != net.reads(sn, se) {
                    return Err(SymmetryError::NotAutomorphism(format!(
                        "connection of `{}` and `{}` is not preserved",
                        net.node_name(n),
                        net.edge_name(e)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `{(m, β|nbr(m), β(m)) | β ∈ group}`, with the induced renamings. Fails if
/// an input is not an automorphism or a triple is not process compatible.
pub fn induced_balance_from_group(program: &Program, group: &[Automorphism]) -> Result<Groupoid, SymmetryError> {
    let net = &program.model().network;
    let mut entries = BTreeMap::new();
    for a in group {
        a.check(net)?;
        for m in 0..net.node_count() {
            let beta = net.neighborhood_of(m).edges().into_iter().map(|e| a.edges[e]).collect();
            let sym = LocalSymmetry { m, n: a.nodes[m], beta };
            let map = compatible_map(program, &sym).ok_or_else(|| {
                SymmetryError::Incompatible(net.node_name(m).to_string(), net.node_name(a.nodes[m]).to_string())
            })?;
            entries.insert(sym, map);
        }
    }
    Ok(Groupoid { entries })
}

/// `⟨β⟩θ_m`: renames every local state of `θ_m` into `V_n`.
pub fn apply_symmetry(map: &SymMap, theta_m: &LocalStateSet) -> LocalStateSet {
    theta_m.iter().map(|s| map.apply(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitClass {
    pub representative: usize,
    pub members: Vec<usize>,
}

/// Orbits of a balance relation, with a witness `(rep, β, member)` for
/// every member.
#[derive(Debug, Clone)]
pub struct OrbitPartition {
    pub classes: Vec<OrbitClass>,
    /// Class index of every node.
    pub class_of: Vec<usize>,
    /// Witness from the representative, per node.
    pub witness: Vec<(LocalSymmetry, SymMap)>,
}

impl OrbitPartition {
    pub fn new(program: &Program, b: &Groupoid) -> Self {
        let n = program.node_count();
        let mut class_of = vec![usize::MAX; n];
        let mut classes: Vec<OrbitClass> = Vec::new();
        let mut witness: Vec<Option<(LocalSymmetry, SymMap)>> = vec![None; n];
        for rep in 0..n {
            if class_of[rep] != usize::MAX {
                continue;
            }
            let idx = classes.len();
            let mut members = Vec::new();
            for k in rep..n {
                if class_of[k] != usize::MAX {
                    continue;
                }
                if let Some(s) = b.between(rep, k).next() {
                    class_of[k] = idx;
                    members.push(k);
                    witness[k] = Some((s.clone(), b.map(s).unwrap().clone()));
                } else if k == rep {
                    class_of[k] = idx;
                    members.push(k);
                    let id = LocalSymmetry::identity(&program.model().network, k);
                    let map = compatible_map(program, &id).expect("identity is compatible");
                    witness[k] = Some((id, map));
                }
            }
            classes.push(OrbitClass { representative: rep, members });
        }
        Self { classes, class_of, witness: witness.into_iter().map(Option::unwrap).collect() }
    }

    pub fn representatives(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.representative).collect()
    }
}

/// Computes components only for orbit representatives and materializes
/// members through their witness symmetries.
pub fn reduced_fixpoint(program: &Program, orbits: &OrbitPartition, mode: Mode) -> (SplitInvariant, FixpointStats) {
    let solver = Solver::new(program, mode);
    let n = program.node_count();
    let mut theta = SplitInvariant::empty(n);
    let mut stats = FixpointStats::default();
    let reps = orbits.representatives();
    let mut queue: VecDeque<usize> = reps.iter().copied().collect();
    let mut queued = vec![false; n];
    for &r in &reps {
        queued[r] = true;
    }
    let mut rep_dependents: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for class in &orbits.classes {
        let deps: BTreeSet<usize> = class
            .members
            .iter()
            .flat_map(|&m| solver.dependents(m).iter().map(|&d| orbits.classes[orbits.class_of[d]].representative))
            .collect();
        rep_dependents.insert(class.representative, deps);
    }
    while let Some(r) = queue.pop_front() {
        queued[r] = false;
        stats.evaluations += 1;
        let new = solver.f_step(&theta, r);
        let before = theta.component(r).len();
        theta.component_mut(r).extend(new);
        if theta.component(r).len() == before {
            continue;
        }
        stats.rounds += 1;
        let class = &orbits.classes[orbits.class_of[r]];
        for &m in &class.members {
            if m != r {
                *theta.component_mut(m) = apply_symmetry(&orbits.witness[m].1, theta.component(r));
            }
        }
        for &d in &rep_dependents[&r] {
            if !queued[d] {
                queued[d] = true;
                queue.push_back(d);
            }
        }
    }
    (theta, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, Family};
    use crate::procdsl::{gen_dining, gen_mutex};
    use crate::splitfix::strongest_split_invariant;

    fn dining(family: Family) -> Program {
        Program::compile(&gen_dining(&generate(&family).unwrap())).unwrap()
    }

    fn ring_rotation(size: usize, k: usize) -> Automorphism {
        Automorphism { nodes: (0..size).map(|i| (i + k) % size).collect(), edges: (0..size).map(|i| (i + k) % size).collect() }
    }

    fn ring_reflection(size: usize) -> Automorphism {
        // Edge i joins i and i+1; its mirror joins -i and -i-1, which is edge -i-1.
        Automorphism {
            nodes: (0..size).map(|i| (size - i) % size).collect(),
            edges: (0..size).map(|i| (2 * size - i - 1) % size).collect(),
        }
    }

    #[test]
    fn ring3_groupoid_counts() {
        let p = dining(Family::Ring { size: 3 });
        let g = groupoid(&p);
        assert_eq!(g.len(), 18);
        for m in 0..3 {
            assert!(g.contains(&LocalSymmetry::identity(&p.model().network, m)));
        }
        assert_eq!(g.closure_violation(&p.model().network), None);
    }

    #[test]
    fn degree_mismatch_has_no_symmetry() {
        let p = dining(Family::Star { leaves: 3 });
        let g = groupoid(&p);
        assert_eq!(g.between(0, 1).count(), 0);
        assert_eq!(g.between(1, 2).count(), 1);
        let b = largest_balance(&p, &g);
        let orbits = OrbitPartition::new(&p, &b);
        assert_eq!(orbits.classes.len(), 2);
        assert_eq!(orbits.classes[1].members, [1, 2, 3]);
    }

    #[test]
    fn ring_has_one_orbit() {
        for size in [2, 3, 5, 8] {
            let p = dining(Family::Ring { size });
            let b = largest_balance(&p, &groupoid(&p));
            assert!(audit_balance(&p, &b));
            assert_eq!(OrbitPartition::new(&p, &b).classes.len(), 1);
        }
    }

    #[test]
    fn trivial_groupoid_balances_to_identities() {
        let p = dining(Family::DegreeSequence { degrees: vec![3, 2, 2, 1] });
        let net = &p.model().network;
        let b = largest_balance(&p, &groupoid(&p));
        for m in 0..4 {
            assert!(b.contains(&LocalSymmetry::identity(net, m)));
        }
        let orbits = OrbitPartition::new(&p, &b);
        let (theta, _) = reduced_fixpoint(&p, &orbits, Mode::Ag);
        assert_eq!(theta, strongest_split_invariant(&p, Mode::Ag));
    }

    #[test]
    fn rotations_induce_a_balance_relation() {
        let p = dining(Family::Ring { size: 4 });
        let rotations: Vec<Automorphism> = (0..4).map(|k| ring_rotation(4, k)).collect();
        let b = induced_balance_from_group(&p, &rotations).unwrap();
        assert_eq!(b.len(), 16);
        assert!(audit_balance(&p, &b));
        let mut all = rotations.clone();
        all.extend((0..4).map(|k| {
            let r = ring_reflection(4);
            let rot = ring_rotation(4, k);
            Automorphism { nodes: r.nodes.iter().map(|&x| rot.nodes[x]).collect(), edges: r.edges.iter().map(|&x| rot.edges[x]).collect() }
        }));
        let b = induced_balance_from_group(&p, &all).unwrap();
        assert_eq!(b.len(), 32);
        assert!(audit_balance(&p, &b));
        let id = vec![Automorphism { nodes: (0..4).collect(), edges: (0..4).collect() }];
        assert_eq!(induced_balance_from_group(&p, &id).unwrap().len(), 4);
        let bad = vec![Automorphism { nodes: vec![1, 0, 2, 3], edges: (0..4).collect() }];
        assert!(matches!(induced_balance_from_group(&p, &bad), Err(SymmetryError::NotAutomorphism(_))));
    }

    #[test]
    fn balanced_nodes_carry_components_on_rings() {
        for size in 3..=5 {
            let p = dining(Family::Ring { size });
            let theta = strongest_split_invariant(&p, Mode::Ag);
            let b = largest_balance(&p, &groupoid(&p));
            for (s, map) in b.iter() {
                assert_eq!(apply_symmetry(map, theta.component(s.m)), *theta.component(s.n));
            }
        }
    }

    #[test]
    fn identity_and_empty() {
        let p = dining(Family::Ring { size: 3 });
        let theta = strongest_split_invariant(&p, Mode::Ag);
        let id = compatible_map(&p, &LocalSymmetry::identity(&p.model().network, 1)).unwrap();
        assert_eq!(apply_symmetry(&id, theta.component(1)), *theta.component(1));
        assert!(apply_symmetry(&id, &LocalStateSet::new()).is_empty());
    }

    #[test]
    fn mutex_is_one_orbit_and_reduces_exactly() {
        for last in [false, true] {
            let p = Program::compile(&gen_mutex(4, last).unwrap()).unwrap();
            let b = largest_balance(&p, &groupoid(&p));
            let orbits = OrbitPartition::new(&p, &b);
            assert_eq!(orbits.classes.len(), 1);
            let (reduced, stats) = reduced_fixpoint(&p, &orbits, Mode::Ag);
            assert_eq!(reduced, strongest_split_invariant(&p, Mode::Ag));
            assert!(stats.evaluations > 0);
        }
    }

    #[test]
    fn reduced_equals_full_on_rings_and_torus() {
        let mut programs: Vec<Program> = (3..=6).map(|size| dining(Family::Ring { size })).collect();
        programs.push(dining(Family::Torus { rows: 2, cols: 3 }));
        for p in programs {
            let b = largest_balance(&p, &groupoid(&p));
            let orbits = OrbitPartition::new(&p, &b);
            assert_eq!(reduced_fixpoint(&p, &orbits, Mode::Ag).0, strongest_split_invariant(&p, Mode::Ag));
        }
    }
}
