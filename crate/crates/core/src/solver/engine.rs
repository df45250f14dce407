//! A small CDCL satisfiability engine.
//!
//! Two-watched-literal propagation, first-UIP clause learning, VSIDS
//! branching, Luby restarts and solving under assumptions. Decisions always
//! try `false` first. Clauses are added only at decision level zero and are
//! never removed, so the store grows monotonically across solves.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

/// A literal encoded as `2 * var + negated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }

    /// DIMACS form: 1-based signed variable index.
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var().0) + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    True,
    False,
    Unset,
}

type ClauseRef = u32;

#[derive(Debug, Clone, Copy)]
struct Watch {
    clause: ClauseRef,
    blocker: Lit,
}

/// Max-heap of variables keyed by activity, ties broken by lower index.
#[derive(Debug, Default)]
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarOrder {
    fn higher(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = Some(self.heap.len());
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.sift_up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::higher(act, v, self.heap[parent]) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && Self::higher(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !Self::higher(act, self.heap[child], v) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(mut x: u64) -> u64 {
    let (mut size, mut seq) = (1u64, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

const RESTART_UNIT: u64 = 100;
const VAR_DECAY: f64 = 0.95;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub solves: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub restarts: u64,
    pub learnt: u64,
}

pub struct Engine {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<Watch>>,
    values: Vec<Value>,
    levels: Vec<u32>,
    reasons: Vec<Option<ClauseRef>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    order: VarOrder,
    seen: Vec<bool>,
    /// False once a conflict at level zero has been derived.
    ok: bool,
    model: Vec<bool>,
    rng: ChaCha8Rng,
    stats: EngineStats,
}

impl Engine {
    pub fn new(seed: u64) -> Self {
        Engine {
            clauses: Vec::new(),
            watches: Vec::new(),
            values: Vec::new(),
            levels: Vec::new(),
            reasons: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            order: VarOrder::default(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: EngineStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Allocates a variable. Its initial activity is a tiny seeded jitter,
    /// so the seed alone fixes the branching order among untouched vars.
    pub fn new_var(&mut self) -> Var {
        let v = self.values.len() as u32;
        self.values.push(Value::Unset);
        self.levels.push(0);
        self.reasons.push(None);
        self.activity.push(self.rng.gen::<f64>() * 1e-6);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.grow(self.values.len());
        self.order.insert(v, &self.activity);
        Var(v)
    }

    fn value(&self, l: Lit) -> Value {
        match self.values[l.var().0 as usize] {
            Value::Unset => Value::Unset,
            v if l.is_positive() => v,
            Value::True => Value::False,
            Value::False => Value::True,
        }
    }

    fn level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn assign(&mut self, l: Lit, reason: Option<ClauseRef>) {
        let v = l.var().0 as usize;
        self.values[v] = if l.is_positive() {
            Value::True
        } else {
            Value::False
        };
        self.levels[v] = self.level();
        self.reasons[v] = reason;
        self.trail.push(l);
    }

    /// Adds a clause at level zero. Returns false if the store is now known
    /// to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        debug_assert_eq!(self.level(), 0);
        if !self.ok {
            return false;
        }
        let mut clause: Vec<Lit> = lits.to_vec();
        clause.sort();
        clause.dedup();
        if clause.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if clause.iter().any(|&l| self.value(l) == Value::True) {
            return true;
        }
        clause.retain(|&l| self.value(l) != Value::False);
        match clause.len() {
            0 => self.ok = false,
            1 => {
                self.assign(clause[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(clause);
            }
        }
        self.ok
    }

    fn attach(&mut self, clause: Vec<Lit>) -> ClauseRef {
        let cref = self.clauses.len() as ClauseRef;
        self.watches[(!clause[0]).index()].push(Watch {
            clause: cref,
            blocker: clause[1],
        });
        self.watches[(!clause[1]).index()].push(Watch {
            clause: cref,
            blocker: clause[0],
        });
        self.clauses.push(clause);
        cref
    }

    /// Unit propagation; returns a conflicting clause if any.
    fn propagate(&mut self) -> Option<ClauseRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.index()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == Value::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.clause;
                let clause = &mut self.clauses[cref as usize];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if first != w.blocker && self.value(first) == Value::True {
                    ws[j] = Watch {
                        clause: cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let clause = &mut self.clauses[cref as usize];
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let val = match self.values[l.var().0 as usize] {
                        Value::Unset => Value::Unset,
                        v if l.is_positive() => v,
                        Value::True => Value::False,
                        Value::False => Value::True,
                    };
                    if val != Value::False {
                        clause.swap(1, k);
                        self.watches[(!clause[1]).index()].push(Watch {
                            clause: cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch {
                    clause: cref,
                    blocker: first,
                };
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.assign(first, Some(cref));
                }
            }
            ws.truncate(j);
            // Watches pushed for p during the loop would have been for other
            // clauses moving onto !p, which cannot happen since !p is false.
            let pushed = std::mem::replace(&mut self.watches[p.index()], ws);
            debug_assert!(pushed.is_empty());
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v, &self.activity);
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut conflict: ClauseRef) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut pending = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            let start = usize::from(p.is_some());
            let clause = self.clauses[conflict as usize].clone();
            for &q in &clause[start..] {
                let v = q.var().0 as usize;
                if !self.seen[v] && self.levels[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v as u32);
                    if self.levels[v] >= self.level() {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().0 as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var().0 as usize] = false;
            pending -= 1;
            if pending == 0 {
                break;
            }
            conflict = self.reasons[lit.var().0 as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict has a literal at the current level");

        // drop literals implied by the rest of the clause
        let kept: Vec<Lit> = learnt[1..]
            .iter()
            .copied()
            .filter(|&l| match self.reasons[l.var().0 as usize] {
                None => true,
                Some(r) => self.clauses[r as usize][1..].iter().any(|&q| {
                    let v = q.var().0 as usize;
                    !self.seen[v] && self.levels[v] > 0
                }),
            })
            .collect();
        for &l in &learnt[1..] {
            self.seen[l.var().0 as usize] = false;
        }
        learnt.truncate(1);
        learnt.extend(kept);

        let mut back = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.levels[learnt[i].var().0 as usize]
                    > self.levels[learnt[max_i].var().0 as usize]
                {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            back = self.levels[learnt[1].var().0 as usize];
        }
        (learnt, back)
    }

    fn backtrack(&mut self, level: u32) {
        if self.level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let v = self.trail[i].var().0;
            self.values[v as usize] = Value::Unset;
            self.reasons[v as usize] = None;
            self.order.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.values[v as usize] == Value::Unset {
                return Some(Lit::new(Var(v), false));
            }
        }
        None
    }

    /// Solves under `assumptions`. On success the model is available via
    /// [`Engine::model_value`]. The engine is back at level zero afterwards.
    pub fn solve(&mut self, assumptions: &[Lit]) -> bool {
        self.stats.solves += 1;
        if !self.ok {
            return false;
        }
        if self.propagate().is_some() {
            self.ok = false;
            return false;
        }
        let mut restart = 0u64;
        let result = loop {
            let budget = luby(restart) * RESTART_UNIT;
            match self.search(assumptions, budget) {
                Some(r) => break r,
                None => {
                    restart += 1;
                    self.stats.restarts += 1;
                }
            }
        };
        if result {
            self.model = self.values.iter().map(|v| *v == Value::True).collect();
        }
        self.backtrack(0);
        result
    }

    /// `Some(result)` when decided, `None` when the conflict budget ran out.
    fn search(&mut self, assumptions: &[Lit], budget: u64) -> Option<bool> {
        let mut conflicts = 0u64;
        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.level() == 0 {
                    self.ok = false;
                    return Some(false);
                }
                let (learnt, back) = self.analyze(conflict);
                self.backtrack(back);
                if learnt.len() == 1 {
                    self.assign(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt);
                    self.assign(first, Some(cref));
                }
                self.stats.learnt += 1;
                self.var_inc /= VAR_DECAY;
                continue;
            }
            if conflicts >= budget {
                self.backtrack(0);
                return None;
            }
            let mut next = None;
            while (self.level() as usize) < assumptions.len() {
                let a = assumptions[self.level() as usize];
                match self.value(a) {
                    Value::True => self.trail_lim.push(self.trail.len()),
                    Value::False => {
                        self.backtrack(0);
                        return Some(false);
                    }
                    Value::Unset => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let lit = match next {
                Some(a) => a,
                None => match self.pick_branch() {
                    Some(l) => {
                        self.stats.decisions += 1;
                        l
                    }
                    None => return Some(true),
                },
            };
            self.trail_lim.push(self.trail.len());
            self.assign(lit, None);
        }
    }

    /// Value of `v` in the last satisfying assignment.
    pub fn model_value(&self, v: Var) -> bool {
        self.model.get(v.0 as usize).copied().unwrap_or(false)
    }
}
