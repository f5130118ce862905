//! Guards and commands compiled to positions within a node's scope `V_n`.

use super::Value;

/// A guard over positions of a local valuation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cond {
    Const(bool),
    Eq(u16, Value),
    Ne(u16, Value),
    Not(Box<Cond>),
    And(Vec<Cond>),
    Or(Vec<Cond>),
}

impl Cond {
    #[inline]
    pub fn eval(&self, s: &[Value]) -> bool {
        self.eval_by(&|p| s[p as usize])
    }

    /// Evaluates with an arbitrary position lookup, so the same guard runs
    /// on local, joint and global valuations.
    pub fn eval_by<F: Fn(u16) -> Value>(&self, get: &F) -> bool {
        match self {
            Cond::Const(b) => *b,
            Cond::Eq(p, v) => get(*p) == *v,
            Cond::Ne(p, v) => get(*p) != *v,
            Cond::Not(c) => !c.eval_by(get),
            Cond::And(xs) => xs.iter().all(|x| x.eval_by(get)),
            Cond::Or(xs) => xs.iter().any(|x| x.eval_by(get)),
        }
    }

    /// Rewrites positions and values; `map` returns `None` for values that
    /// have no image, which makes the rename fail.
    pub fn rename<F: Fn(u16, Value) -> Option<(u16, Value)>>(&self, map: &F) -> Option<Cond> {
        Some(match self {
            Cond::Const(b) => Cond::Const(*b),
            Cond::Eq(p, v) => {
                let (p, v) = map(*p, *v)?;
                Cond::Eq(p, v)
            }
            Cond::Ne(p, v) => {
                let (p, v) = map(*p, *v)?;
                Cond::Ne(p, v)
            }
            Cond::Not(c) => Cond::Not(Box::new(c.rename(map)?)),
            Cond::And(xs) => Cond::And(xs.iter().map(|x| x.rename(map)).collect::<Option<_>>()?),
            Cond::Or(xs) => Cond::Or(xs.iter().map(|x| x.rename(map)).collect::<Option<_>>()?),
        })
    }

    /// Flattens nested connectives and sorts operands, so guards that differ
    /// only in operand order compare equal.
    pub fn canonical(&self) -> Cond {
        match self {
            Cond::Not(c) => match c.canonical() {
                Cond::Const(b) => Cond::Const(!b),
                c => Cond::Not(Box::new(c)),
            },
            Cond::And(xs) | Cond::Or(xs) => {
                let is_and = matches!(self, Cond::And(_));
                let mut flat = Vec::new();
                for x in xs {
                    match x.canonical() {
                        Cond::And(ys) if is_and => flat.extend(ys),
                        Cond::Or(ys) if !is_and => flat.extend(ys),
                        Cond::Const(b) if b == is_and => {}
                        Cond::Const(b) => return Cond::Const(b),
                        y => flat.push(y),
                    }
                }
                flat.sort();
                flat.dedup();
                match flat.len() {
                    0 => Cond::Const(is_and),
                    1 => flat.pop().unwrap(),
                    _ if is_and => Cond::And(flat),
                    _ => Cond::Or(flat),
                }
            }
            other => other.clone(),
        }
    }

    pub fn positions(&self, out: &mut Vec<u16>) {
        match self {
            Cond::Const(_) => {}
            Cond::Eq(p, _) | Cond::Ne(p, _) => out.push(*p),
            Cond::Not(c) => c.positions(out),
            Cond::And(xs) | Cond::Or(xs) => xs.iter().for_each(|x| x.positions(out)),
        }
    }
}

/// A guard flattened for hot loops: a plain conjunction of atoms when
/// possible, the tree otherwise.
#[derive(Debug, Clone)]
pub enum FastCond {
    /// `(position, value, equal)` atoms, all of which must hold.
    Conj(Vec<(u32, Value, bool)>),
    Tree(Cond),
}

impl FastCond {
    /// Compiles `c` after mapping its positions through `map`.
    pub fn new(c: &Cond, map: &dyn Fn(u16) -> u32) -> FastCond {
        let atom = |x: &Cond| match x {
            Cond::Eq(p, v) => Some((map(*p), *v, true)),
            Cond::Ne(p, v) => Some((map(*p), *v, false)),
            _ => None,
        };
        match c.canonical() {
            Cond::Const(true) => FastCond::Conj(Vec::new()),
            Cond::And(xs) if xs.iter().all(|x| atom(x).is_some()) => {
                FastCond::Conj(xs.iter().filter_map(atom).collect())
            }
            x @ (Cond::Eq(..) | Cond::Ne(..)) => FastCond::Conj(vec![atom(&x).unwrap()]),
            other => FastCond::Tree(
                other.rename(&|p, v| Some((u16::try_from(map(p)).ok()?, v))).expect("position fits"),
            ),
        }
    }

    #[inline]
    pub fn eval(&self, s: &[Value]) -> bool {
        match self {
            FastCond::Conj(atoms) => atoms.iter().all(|&(p, v, eq)| (s[p as usize] == v) == eq),
            FastCond::Tree(c) => c.eval(s),
        }
    }
}

/// A guarded command of one node: an atomic guard test plus assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub label: String,
    pub guard: Cond,
    pub updates: Vec<(u16, Value)>,
}

impl Command {
    #[inline]
    pub fn enabled(&self, s: &[Value]) -> bool {
        self.guard.eval(s)
    }

    pub fn apply_in_place(&self, s: &mut [Value]) {
        for &(p, v) in &self.updates {
            s[p as usize] = v;
        }
    }

    /// Canonical form used to compare commands structurally.
    pub fn canonical(&self) -> (Cond, Vec<(u16, Value)>) {
        let mut ups = self.updates.clone();
        ups.sort_unstable();
        (self.guard.canonical(), ups)
    }
}
