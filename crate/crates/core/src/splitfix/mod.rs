//! The strongest split invariant as a simultaneous least fixpoint, in
//! assume-guarantee form (`ag`) or in split form, plus property checking and
//! an independent inductiveness audit.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::semantics::{LocalState, Program, Value};

pub type LocalStateSet = BTreeSet<LocalState>;

/// A valuation of `V_i ∪ V_j`, keyed by global variable id.
pub type JointState = BTreeMap<usize, Value>;

/// One local state set per node, in node order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitInvariant {
    components: Vec<LocalStateSet>,
}

impl SplitInvariant {
    pub fn empty(nodes: usize) -> Self {
        Self { components: vec![BTreeSet::new(); nodes] }
    }

    pub fn from_components(components: Vec<LocalStateSet>) -> Self {
        Self { components }
    }

    /// Every component holds its full local space.
    pub fn top(program: &Program) -> Self {
        Self::from_components((0..program.node_count()).map(|n| program.local_space(n).into_iter().collect()).collect())
    }

    pub fn component(&self, n: usize) -> &LocalStateSet {
        &self.components[n]
    }

    pub fn component_mut(&mut self, n: usize) -> &mut LocalStateSet {
        &mut self.components[n]
    }

    pub fn components(&self) -> &[LocalStateSet] {
        &self.components
    }

    pub fn into_components(self) -> Vec<LocalStateSet> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(BTreeSet::len).collect()
    }

    pub fn total_states(&self) -> usize {
        self.components.iter().map(BTreeSet::len).sum()
    }

    /// Componentwise inclusion.
    pub fn is_subset(&self, other: &SplitInvariant) -> bool {
        self.components.len() == other.components.len()
            && self.components.iter().zip(&other.components).all(|(a, b)| a.is_subset(b))
    }

    /// Sorted per-node listing: a `node:` header followed by one local state
    /// per line.
    pub fn dump(&self, program: &Program) -> String {
        let mut out = String::new();
        for (n, c) in self.components.iter().enumerate() {
            let _ = writeln!(out, "{}: {} states", program.node(n).name, c.len());
            for s in c {
                let _ = writeln!(out, "  {}", program.format_local(n, s));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Interference from `θ_i ∧ θ_j` only.
    Ag,
    /// Every premise is additionally constrained by the components that
    /// share variables with the acting scopes.
    SplitForm,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ag => "ag",
            Mode::SplitForm => "split-form",
        }
    }
}

/// Order in which components are recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// FIFO worklist with deduplication.
    Worklist,
    /// Every component from the previous round's values, until no change.
    RoundRobin,
    /// In-place updates in a fresh random order per round.
    RandomPermutation(u64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FixpointStats {
    /// Number of `f_step` evaluations.
    pub evaluations: usize,
    /// Rounds (worklist: number of component changes).
    pub rounds: usize,
}

/// A premise restriction for split form: some state of `θ_k` must agree
/// with the listed positions.
#[derive(Debug, Clone)]
struct Consistency {
    k: usize,
    /// `(from_second, source position, position in V_k)`.
    links: Vec<(bool, u16, u16)>,
}

#[derive(Debug, Clone, Default)]
struct SplitContext {
    local: Vec<Consistency>,
    /// One list per interferer, aligned with `NodeInfo::interferers`.
    joint: Vec<Vec<Consistency>>,
}

/// Evaluates the fixpoint operator `F` of a program in a given mode.
pub struct Solver<'a> {
    program: &'a Program,
    mode: Mode,
    split: Vec<SplitContext>,
    dependents: Vec<Vec<usize>>,
}

impl<'a> Solver<'a> {
    pub fn new(program: &'a Program, mode: Mode) -> Self {
        let n = program.node_count();
        let mut split = Vec::new();
        let mut reads: Vec<BTreeSet<usize>> = (0..n)
            .map(|i| {
                let mut r: BTreeSet<usize> = program.node(i).interferers.iter().map(|x| x.node).collect();
                r.insert(i);
                r
            })
            .collect();
        if mode == Mode::SplitForm {
            let sharers: Vec<Vec<usize>> = (0..n).map(|i| program.sharers(i)).collect();
            for i in 0..n {
                let local = sharers[i]
                    .iter()
                    .map(|&k| Consistency {
                        k,
                        links: program.shared_positions(i, k).into_iter().map(|(a, c)| (false, a, c)).collect(),
                    })
                    .collect();
                let joint = program
                    .node(i)
                    .interferers
                    .iter()
                    .map(|intf| {
                        let j = intf.node;
                        let ks: BTreeSet<usize> =
                            sharers[i].iter().chain(&sharers[j]).copied().filter(|&k| k != i && k != j).collect();
                        ks.into_iter()
                            .map(|k| {
                                let mut links: Vec<(bool, u16, u16)> =
                                    program.shared_positions(i, k).into_iter().map(|(a, c)| (false, a, c)).collect();
                                for (b, c) in program.shared_positions(j, k) {
                                    if !links.iter().any(|l| l.2 == c) {
                                        links.push((true, b, c));
                                    }
                                }
                                Consistency { k, links }
                            })
                            .collect()
                    })
                    .collect();
                split.push(SplitContext { local, joint });
            }
            for i in 0..n {
                for c in &split[i].local {
                    reads[i].insert(c.k);
                }
                for cs in &split[i].joint {
                    for c in cs {
                        reads[i].insert(c.k);
                    }
                }
            }
        }
        let mut dependents = vec![Vec::new(); n];
        for (i, r) in reads.iter().enumerate() {
            for &j in r {
                dependents[j].push(i);
            }
        }
        Self { program, mode, split, dependents }
    }

    pub fn program(&self) -> &'a Program {
        self.program
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Nodes whose `F_i` reads component `j`, in node order.
    pub fn dependents(&self, j: usize) -> &[usize] {
        &self.dependents[j]
    }

    fn consistent(&self, theta: &SplitInvariant, cs: &[Consistency], a: &[Value], b: &[Value]) -> bool {
        cs.iter().all(|c| {
            theta.component(c.k).iter().any(|s| {
                c.links.iter().all(|&(second, src, pk)| {
                    let v = if second { b[src as usize] } else { a[src as usize] };
                    s[pk as usize] == v
                })
            })
        })
    }

    /// `F_i(θ)`: the initial projection, own successors, and interference
    /// from every process that points to `i`.
    pub fn f_step(&self, theta: &SplitInvariant, i: usize) -> LocalStateSet {
        let program = self.program;
        let node = program.node(i);
        let split = self.mode == Mode::SplitForm;
        let mut out = LocalStateSet::new();
        out.insert(program.initial_local(i));

        let usable: Vec<&LocalState> = theta
            .component(i)
            .iter()
            .filter(|a| !split || self.consistent(theta, &self.split[i].local, a, &[]))
            .collect();
        for a in &usable {
            out.extend(program.local_successors(i, a));
        }

        for (x, intf) in node.interferers.iter().enumerate() {
            let theta_j = theta.component(intf.node);
            if theta_j.is_empty() || usable.is_empty() {
                continue;
            }
            let key_i = |a: &LocalState| -> SmallVec<[Value; 4]> {
                intf.shared.iter().map(|&(pi, _)| a[pi as usize]).collect()
            };
            let mut index: HashMap<SmallVec<[Value; 4]>, Vec<&LocalState>> = HashMap::new();
            for a in &usable {
                index.entry(key_i(a)).or_default().push(a);
            }
            for b in theta_j {
                let key: SmallVec<[Value; 4]> = intf.shared.iter().map(|&(_, pj)| b[pj as usize]).collect();
                let Some(partners) = index.get(&key) else { continue };
                let succs = program.local_successors(intf.node, b);
                if succs.is_empty() {
                    continue;
                }
                for a in partners {
                    if split && !self.consistent(theta, &self.split[i].joint[x], a, b) {
                        continue;
                    }
                    for y in &succs {
                        let mut z = (*a).clone();
                        for &(pi, pj) in &intf.shared {
                            z[pi as usize] = y[pj as usize];
                        }
                        out.insert(z);
                    }
                }
            }
        }
        out
    }

    /// Least fixpoint from the all-empty vector.
    pub fn solve(&self, schedule: Schedule) -> (SplitInvariant, FixpointStats) {
        self.solve_from(SplitInvariant::empty(self.program.node_count()), schedule)
    }

    /// Least fixpoint above `seed`.
    pub fn solve_from(&self, seed: SplitInvariant, schedule: Schedule) -> (SplitInvariant, FixpointStats) {
        let n = self.program.node_count();
        assert_eq!(seed.len(), n, "seed has the wrong number of components");
        let mut theta = seed;
        let mut stats = FixpointStats::default();
        match schedule {
            Schedule::Worklist => {
                let mut queue: VecDeque<usize> = (0..n).collect();
                let mut queued = vec![true; n];
                while let Some(i) = queue.pop_front() {
                    queued[i] = false;
                    stats.evaluations += 1;
                    let new = self.f_step(&theta, i);
                    let before = theta.component(i).len();
                    theta.component_mut(i).extend(new);
                    if theta.component(i).len() != before {
                        stats.rounds += 1;
                        for &d in &self.dependents[i] {
                            if !queued[d] {
                                queued[d] = true;
                                queue.push_back(d);
                            }
                        }
                    }
                }
            }
            Schedule::RoundRobin => loop {
                stats.rounds += 1;
                let next: Vec<LocalStateSet> = (0..n)
                    .map(|i| {
                        stats.evaluations += 1;
                        let mut c = theta.component(i).clone();
                        c.extend(self.f_step(&theta, i));
                        c
                    })
                    .collect();
                let next = SplitInvariant::from_components(next);
                if next == theta {
                    break;
                }
                theta = next;
            },
            Schedule::RandomPermutation(seed) => {
                let mut rng = StdRng::seed_from_u64(seed);
                let mut order: Vec<usize> = (0..n).collect();
                loop {
                    stats.rounds += 1;
                    order.shuffle(&mut rng);
                    let mut changed = false;
                    for &i in &order {
                        stats.evaluations += 1;
                        let new = self.f_step(&theta, i);
                        let before = theta.component(i).len();
                        theta.component_mut(i).extend(new);
                        changed |= theta.component(i).len() != before;
                    }
                    if !changed {
                        break;
                    }
                }
            }
        }
        (theta, stats)
    }

    /// Is `θ` a pre-fixpoint of this solver's operator?
    pub fn is_prefixpoint(&self, theta: &SplitInvariant) -> bool {
        (0..self.program.node_count()).all(|i| self.f_step(theta, i).is_subset(theta.component(i)))
    }
}

/// The strongest split invariant with the default worklist schedule.
pub fn strongest_split_invariant(program: &Program, mode: Mode) -> SplitInvariant {
    Solver::new(program, mode).solve(Schedule::Worklist).0
}

/// `θ_i ∧ θ_j` over `V_i ∪ V_j`: pairs of local states that agree on every
/// shared variable.
pub fn join(program: &Program, i: usize, a: &LocalStateSet, j: usize, b: &LocalStateSet) -> Vec<JointState> {
    let vi = &program.node(i).scope;
    let vj = &program.node(j).scope;
    let mut out = Vec::new();
    for x in a {
        let base: JointState = vi.iter().copied().zip(x.iter().copied()).collect();
        'b: for y in b {
            let mut s = base.clone();
            for (&g, &v) in vj.iter().zip(y.iter()) {
                if let Some(&w) = s.get(&g) {
                    if w != v {
                        continue 'b;
                    }
                } else {
                    s.insert(g, v);
                }
            }
            out.push(s);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// `(var, value)` pairs of a joint state, in canonical variable order.
pub fn name_joint(program: &Program, s: &JointState) -> Vec<(String, String)> {
    s.iter()
        .map(|(&g, &v)| (program.vars()[g].name.clone(), program.format_value(g, v).to_string()))
        .collect()
}

/// A joint state of a property pair where both nodes satisfy `forbid`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub pair: (String, String),
    pub state: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyVerdict {
    Proved,
    /// One witness per offending pair. These are not counterexamples: the
    /// split invariant over-approximates the reachable states.
    Unknown(Vec<Witness>),
}

impl PropertyVerdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, PropertyVerdict::Proved)
    }
}

/// Offending pairs `(i, j)` with the first violating joint state each.
pub fn offending_pairs(program: &Program, theta: &SplitInvariant) -> Vec<(usize, usize, JointState)> {
    let hot: Vec<LocalStateSet> = (0..program.node_count())
        .map(|n| {
            let forbid = &program.node(n).forbid;
            theta.component(n).iter().filter(|s| forbid.eval(s)).cloned().collect()
        })
        .collect();
    program
        .property_pairs()
        .filter_map(|(i, j)| {
            if hot[i].is_empty() || hot[j].is_empty() {
                return None;
            }
            join(program, i, &hot[i], j, &hot[j]).into_iter().next().map(|s| (i, j, s))
        })
        .collect()
}

pub fn check_property(program: &Program, theta: &SplitInvariant) -> PropertyVerdict {
    let pairs = offending_pairs(program, theta);
    if pairs.is_empty() {
        return PropertyVerdict::Proved;
    }
    PropertyVerdict::Unknown(
        pairs
            .into_iter()
            .map(|(i, j, s)| Witness {
                pair: (program.node(i).name.clone(), program.node(j).name.clone()),
                state: name_joint(program, &s),
            })
            .collect(),
    )
}

/// The first constraint an invariant candidate fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InductiveFailure {
    Init { node: usize },
    Step { node: usize, command: String },
    Interference { node: usize, by: usize, command: String },
}

/// Checks initiality, local step closure, and non-interference directly on
/// joint valuations, without the solver's indexing.
pub fn verify_inductive(program: &Program, theta: &SplitInvariant) -> Result<(), InductiveFailure> {
    let n = program.node_count();
    for i in 0..n {
        let vi = &program.node(i).scope;
        let restrict = |s: &JointState| -> LocalState { vi.iter().map(|g| s[g]).collect() };
        let init: JointState = vi.iter().map(|&g| (g, program.initial_state()[g])).collect();
        if !theta.component(i).contains(&restrict(&init)) {
            return Err(InductiveFailure::Init { node: i });
        }
        for j in 0..n {
            let node_j = program.node(j);
            let writes_vi = node_j
                .commands
                .iter()
                .any(|c| c.updates.iter().any(|&(p, _)| vi.contains(&node_j.scope[p as usize])));
            if !writes_vi {
                continue;
            }
            let premises = if i == j {
                theta.component(i).iter().map(|a| vi.iter().copied().zip(a.iter().copied()).collect()).collect()
            } else {
                join(program, i, theta.component(i), j, theta.component(j))
            };
            for s in premises {
                for c in &node_j.commands {
                    if !c.guard.eval_by(&|p| s[&node_j.scope[p as usize]]) {
                        continue;
                    }
                    let mut t = s.clone();
                    for &(p, v) in &c.updates {
                        t.insert(node_j.scope[p as usize], v);
                    }
                    if !theta.component(i).contains(&restrict(&t)) {
                        return Err(if i == j {
                            InductiveFailure::Step { node: i, command: c.label.clone() }
                        } else {
                            InductiveFailure::Interference { node: i, by: j, command: c.label.clone() }
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, Family};
    use crate::procdsl::{gen_dining, gen_mutex};
    use crate::semantics::reach;

    fn dining(family: Family) -> Program {
        Program::compile(&gen_dining(&generate(&family).unwrap())).unwrap()
    }

    fn mutex(n: usize, last: bool) -> Program {
        Program::compile(&gen_mutex(n, last).unwrap()).unwrap()
    }

    #[test]
    fn first_iterate_is_the_initial_projection() {
        let p = dining(Family::Ring { size: 3 });
        let s = Solver::new(&p, Mode::Ag);
        let f = s.f_step(&SplitInvariant::empty(3), 1);
        assert_eq!(f.len(), 1);
        assert!(f.contains(&p.initial_local(1)));
    }

    #[test]
    fn join_examples() {
        let p = dining(Family::Ring { size: 4 });
        // n0 and n2 share nothing.
        let a: LocalStateSet = [p.initial_local(0)].into_iter().collect();
        let b: LocalStateSet = [p.initial_local(2)].into_iter().collect();
        assert_eq!(join(&p, 0, &a, 2, &b).len(), 1);
        let theta = strongest_split_invariant(&p, Mode::Ag);
        let pairs = theta.component(0).len() * theta.component(2).len();
        assert_eq!(join(&p, 0, theta.component(0), 2, theta.component(2)).len(), pairs);
        // f0_1 owned by n0 on one side and by n1 on the other.
        let f = p.vars().iter().position(|v| v.name == "f0_1").unwrap();
        let pos0 = p.node(0).position(f).unwrap() as usize;
        let pos1 = p.node(1).position(f).unwrap() as usize;
        let a: LocalStateSet = theta.component(0).iter().filter(|s| s[pos0] == 0).cloned().collect();
        let b: LocalStateSet = theta.component(1).iter().filter(|s| s[pos1] == 1).cloned().collect();
        assert!(!a.is_empty() && !b.is_empty());
        assert!(join(&p, 0, &a, 1, &b).is_empty());
    }

    #[test]
    fn join_excludes_two_last_writers() {
        let p = mutex(3, true);
        let theta = strongest_split_invariant(&p, Mode::Ag);
        let eating = |n: usize| -> LocalStateSet {
            theta.component(n).iter().filter(|s| p.node(n).forbid.eval(s)).cloned().collect()
        };
        assert!(!eating(0).is_empty());
        assert!(join(&p, 0, &eating(0), 1, &eating(1)).is_empty());
    }

    #[test]
    fn mutex_without_aux_is_trivial() {
        let p = mutex(2, false);
        let theta = strongest_split_invariant(&p, Mode::Ag);
        assert_eq!(theta.sizes(), [6, 6]);
        let p3 = mutex(3, false);
        match check_property(&p3, &strongest_split_invariant(&p3, Mode::Ag)) {
            PropertyVerdict::Unknown(w) => {
                assert_eq!(w.len(), 3);
                let x = &w[0].state;
                assert!(x.contains(&("1.l".into(), "E".into())) && x.contains(&("2.l".into(), "E".into())));
            }
            PropertyVerdict::Proved => panic!("mutex without auxiliaries cannot be proved"),
        }
    }

    #[test]
    fn mutex_with_last_is_proved() {
        let p = mutex(3, true);
        let theta = strongest_split_invariant(&p, Mode::Ag);
        assert!(check_property(&p, &theta).is_proved());
        for n in 0..3 {
            for s in theta.component(n) {
                let named = p.named_local(n, s);
                if named[0].1 == "E" {
                    assert_eq!(named[1].1, "false");
                    assert_eq!(named[2].1, p.node(n).name);
                }
            }
        }
    }

    #[test]
    fn dining_rings_are_proved_and_sound() {
        for size in 3..=6 {
            let p = dining(Family::Ring { size });
            let theta = strongest_split_invariant(&p, Mode::Ag);
            assert!(check_property(&p, &theta).is_proved());
            let r = reach(&p, 1_000_000);
            assert!(r.is_complete());
            for n in 0..size {
                assert!(r.project(&p, n).is_subset(theta.component(n)));
            }
        }
    }

    #[test]
    fn eating_requires_both_forks() {
        let p = dining(Family::Ring { size: 3 });
        let theta = strongest_split_invariant(&p, Mode::Ag);
        for s in theta.component(0) {
            let named = p.named_local(0, s);
            if named[0].1 == "E" {
                assert!(named[1..].iter().all(|(_, v)| v == "n0"));
            }
        }
    }

    #[test]
    fn fixpoint_is_inductive_and_top_is_inductive() {
        let p = dining(Family::Ring { size: 3 });
        let theta = strongest_split_invariant(&p, Mode::Ag);
        assert_eq!(verify_inductive(&p, &theta), Ok(()));
        assert_eq!(verify_inductive(&p, &SplitInvariant::top(&p)), Ok(()));
        assert!(verify_inductive(&p, &SplitInvariant::empty(3)).is_err());
    }

    #[test]
    fn removing_any_state_breaks_inductiveness() {
        let p = dining(Family::Ring { size: 3 });
        let theta = strongest_split_invariant(&p, Mode::Ag);
        for s in theta.component(0) {
            let mut weaker = theta.clone();
            weaker.component_mut(0).remove(s);
            assert!(verify_inductive(&p, &weaker).is_err());
        }
    }

    #[test]
    fn schedules_agree() {
        for p in [dining(Family::Ring { size: 5 }), dining(Family::Star { leaves: 3 }), mutex(3, true)] {
            for mode in [Mode::Ag, Mode::SplitForm] {
                let s = Solver::new(&p, mode);
                let (w, _) = s.solve(Schedule::Worklist);
                assert_eq!(s.solve(Schedule::RoundRobin).0, w);
                for seed in 0..3 {
                    assert_eq!(s.solve(Schedule::RandomPermutation(seed)).0, w);
                }
            }
        }
    }

    #[test]
    fn split_form_is_stronger_or_equal() {
        let p = dining(Family::Torus { rows: 2, cols: 3 });
        let ag = strongest_split_invariant(&p, Mode::Ag);
        let sf = strongest_split_invariant(&p, Mode::SplitForm);
        assert!(sf.is_subset(&ag));
        assert!(Solver::new(&p, Mode::SplitForm).is_prefixpoint(&ag));
    }

    #[test]
    fn dump_lists_every_state() {
        let p = mutex(2, false);
        let theta = strongest_split_invariant(&p, Mode::Ag);
        let d = theta.dump(&p);
        assert!(d.starts_with("1: 6 states\n  1.l=T x=true\n"));
        assert_eq!(d.lines().count(), 14);
    }
}
