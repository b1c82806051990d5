//! Kripke–Joyal forcing for the fragment of higher-order logic generated by
//! `⊥, ⊤, ∧, ∨, ⇒`, variables of type `Ω`, `∀x:Ω` and constant subterminals.
//! Also the sieve-combinatorial descriptions of the bounded-depth sentences
//! and of widespread subterminals.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::ext::ExtNat;
use crate::fincat::{FinCategory, ObjId};
use crate::presheaf::{omega, ObjectSieve, Omega, PresheafError, Sieve, Subpresheaf};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("binding for {variable} is a sieve on the wrong object")]
    EnvironmentMismatch { variable: String },
    #[error("element is not in the lattice")]
    NotInLattice,
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Presheaf(#[from] PresheafError),
}

pub type Result<T, E = LogicError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Bottom,
    Top,
    Var(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    ForallOmega(String, Box<Formula>),
    Const(ObjectSieve),
}

impl Formula {
    pub fn var(name: &str) -> Formula {
        Formula::Var(name.to_string())
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(name: &str, body: Formula) -> Formula {
        Formula::ForallOmega(name.to_string(), Box::new(body))
    }

    /// `γ(φ, ψ) = φ ∨ (φ ⇒ ψ)`.
    pub fn gamma(a: Formula, b: Formula) -> Formula {
        Formula::or(a.clone(), Formula::implies(a, b))
    }

    /// The bounded-depth sentence: `⊥` at `-inf`, `⊤` at `inf`, and
    /// `∀x:Ω. γ(x, ibd(n-1))` otherwise. Each level binds its own variable.
    pub fn ibd(n: ExtNat) -> Formula {
        match n {
            ExtNat::NegInf => Formula::Bottom,
            ExtNat::Inf => Formula::Top,
            ExtNat::Finite(k) => {
                let mut phi = Formula::Bottom;
                for level in 0..=k {
                    let x = format!("x{level}");
                    phi = Formula::forall(&x, Formula::gamma(Formula::Var(x.clone()), phi));
                }
                phi
            }
        }
    }

    pub fn free_variables(&self) -> Vec<String> {
        fn go(phi: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match phi {
                Formula::Var(x) => {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                }
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::ForallOmega(x, body) => {
                    bound.push(x.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_variables().is_empty()
    }

    /// Surface syntax, with constants written by object name.
    pub fn render(&self, cat: &FinCategory) -> String {
        self.render_with(&|c| cat.object_name(c).to_string())
    }

    fn render_with(&self, name: &dyn Fn(ObjId) -> String) -> String {
        match self {
            Formula::Bottom => "bot".into(),
            Formula::Top => "top".into(),
            Formula::Var(x) => x.clone(),
            Formula::And(a, b) => format!("({} /\\ {})", a.render_with(name), b.render_with(name)),
            Formula::Or(a, b) => format!("({} \\/ {})", a.render_with(name), b.render_with(name)),
            Formula::Implies(a, b) => format!("({} => {})", a.render_with(name), b.render_with(name)),
            Formula::ForallOmega(x, body) => format!("(forall {x}. {})", body.render_with(name)),
            Formula::Const(u) => {
                let names: Vec<String> = u.members().into_iter().map(name).collect();
                format!("const({})", names.join(","))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|c| format!("#{c}")))
    }
}

// ---- parser ----

/// Parses the surface syntax. `const(a,b)` denotes the object sieve generated
/// by the named objects; `#k` refers to object id `k`.
pub fn parse_formula(text: &str, cat: &FinCategory) -> Result<Formula> {
    let mut p = Parser { text, pos: 0, cat };
    let phi = p.implication()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("trailing input"));
    }
    Ok(phi)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    cat: &'a FinCategory,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> LogicError {
        LogicError::Parse {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, tokens: &[&str]) -> bool {
        self.skip_ws();
        for t in tokens {
            if self.rest().starts_with(t) {
                self.pos += t.len();
                return true;
            }
        }
        false
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(&[token]) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {token:?}")))
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let len = self
            .rest()
            .char_indices()
            .find(|&(_, ch)| !(ch.is_alphanumeric() || ch == '_' || ch == '\''))
            .map_or(self.rest().len(), |(i, _)| i);
        if len == 0 || self.rest().starts_with(|c: char| c.is_ascii_digit()) {
            return None;
        }
        let word = self.rest()[..len].to_string();
        self.pos += len;
        Some(word)
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&["=>", "⇒"]) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut acc = self.conjunction()?;
        while self.eat(&["\\/", "∨"]) {
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut acc = self.unary()?;
        while self.eat(&["/\\", "∧"]) {
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula> {
        self.skip_ws();
        if self.eat(&["∀"]) {
            return self.quantifier_body();
        }
        let save = self.pos;
        if let Some(word) = self.ident() {
            if word == "forall" {
                return self.quantifier_body();
            }
        }
        self.pos = save;
        self.atom()
    }

    fn quantifier_body(&mut self) -> Result<Formula> {
        let x = self.ident().ok_or_else(|| self.error("expected a variable"))?;
        // optional type annotation
        if self.eat(&[":"]) && !self.eat(&["Omega", "Ω"]) {
            return Err(self.error("expected Omega"));
        }
        self.expect(".")?;
        let body = self.implication()?;
        Ok(Formula::ForallOmega(x, Box::new(body)))
    }

    fn atom(&mut self) -> Result<Formula> {
        if self.eat(&["("]) {
            let phi = self.implication()?;
            self.expect(")")?;
            return Ok(phi);
        }
        if self.eat(&["⊥"]) {
            return Ok(Formula::Bottom);
        }
        if self.eat(&["⊤"]) {
            return Ok(Formula::Top);
        }
        let start = self.pos;
        let word = self.ident().ok_or_else(|| self.error("expected a formula"))?;
        match word.as_str() {
            "bot" => Ok(Formula::Bottom),
            "top" => Ok(Formula::Top),
            "ibd" => {
                self.expect("(")?;
                self.skip_ws();
                let close = self.rest().find(')').ok_or_else(|| self.error("unclosed ibd("))?;
                let arg = &self.rest()[..close];
                let n: ExtNat = arg.parse().map_err(|m: String| self.error(&m))?;
                self.pos += close + 1;
                Ok(Formula::ibd(n))
            }
            "gamma" => {
                self.expect("(")?;
                let a = self.implication()?;
                self.expect(",")?;
                let b = self.implication()?;
                self.expect(")")?;
                Ok(Formula::gamma(a, b))
            }
            "const" => {
                self.expect("(")?;
                let close = self.rest().find(')').ok_or_else(|| self.error("unclosed const("))?;
                let inner = self.rest()[..close].to_string();
                let mut ids = Vec::new();
                for name in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let id = match name.strip_prefix('#') {
                        Some(k) => k.parse().ok().filter(|&k| k < self.cat.object_count()),
                        None => self.cat.object_by_name(name),
                    };
                    ids.push(id.ok_or_else(|| self.error(&format!("unknown object {name:?}")))?);
                }
                self.pos += close + 1;
                Ok(Formula::Const(ObjectSieve::generated(self.cat, ids)?))
            }
            "forall" => {
                self.pos = start;
                Err(self.error("quantifier in argument position needs parentheses"))
            }
            _ => Ok(Formula::Var(word)),
        }
    }
}

// ---- forcing ----

/// Values of free variables at a stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub stage: ObjId,
    pub bindings: BTreeMap<String, Sieve>,
}

impl Environment {
    pub fn new(stage: ObjId) -> Self {
        Environment {
            stage,
            bindings: BTreeMap::new(),
        }
    }

    pub fn bind(mut self, name: &str, sieve: Sieve) -> Result<Self> {
        if sieve.apex != self.stage {
            return Err(LogicError::EnvironmentMismatch {
                variable: name.to_string(),
            });
        }
        self.bindings.insert(name.to_string(), sieve);
        Ok(self)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Bottom,
    Top,
    Var(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Forall(usize, usize),
    Const(FixedBitSet),
}

/// A formula flattened into an arena, variables resolved to slots.
#[derive(Debug, Clone)]
struct Compiled {
    nodes: Vec<Node>,
    /// Slots occurring free in each node, sorted.
    free: Vec<Vec<usize>>,
    root: usize,
    slots: usize,
}

fn compile(phi: &Formula, env_names: &[String]) -> Result<Compiled> {
    struct State {
        nodes: Vec<Node>,
        free: Vec<Vec<usize>>,
        slots: usize,
    }
    fn go(phi: &Formula, scope: &mut Vec<(String, usize)>, st: &mut State) -> Result<usize> {
        let (node, free) = match phi {
            Formula::Bottom => (Node::Bottom, vec![]),
            Formula::Top => (Node::Top, vec![]),
            Formula::Const(u) => {
                let members: FixedBitSet = u.members().into_iter().collect();
                (Node::Const(members), vec![])
            }
            Formula::Var(x) => {
                let slot = scope
                    .iter()
                    .rev()
                    .find(|(name, _)| name == x)
                    .map(|&(_, s)| s)
                    .ok_or_else(|| LogicError::UnboundVariable(x.clone()))?;
                (Node::Var(slot), vec![slot])
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                let (a, b) = (go(a, scope, st)?, go(b, scope, st)?);
                let mut free = st.free[a].clone();
                free.extend_from_slice(&st.free[b]);
                free.sort_unstable();
                free.dedup();
                let node = match phi {
                    Formula::And(..) => Node::And(a, b),
                    Formula::Or(..) => Node::Or(a, b),
                    _ => Node::Implies(a, b),
                };
                (node, free)
            }
            Formula::ForallOmega(x, body) => {
                let slot = st.slots;
                st.slots += 1;
                scope.push((x.clone(), slot));
                let b = go(body, scope, st)?;
                scope.pop();
                let free = st.free[b].iter().copied().filter(|&s| s != slot).collect();
                (Node::Forall(slot, b), free)
            }
        };
        st.nodes.push(node);
        st.free.push(free);
        Ok(st.nodes.len() - 1)
    }
    let mut st = State {
        nodes: Vec::new(),
        free: Vec::new(),
        slots: env_names.len(),
    };
    let mut scope: Vec<(String, usize)> = env_names.iter().cloned().zip(0..).collect();
    let root = go(phi, &mut scope, &mut st)?;
    Ok(Compiled {
        nodes: st.nodes,
        free: st.free,
        root,
        slots: st.slots,
    })
}

/// Forcing evaluator over one site. Sieves are enumerated once and memoized
/// evaluations are keyed by node, stage and the values of the node's free
/// variables, so closed subformulas are evaluated once per stage.
pub struct Forcing {
    cat: Arc<FinCategory>,
    omega: Omega,
}

impl Forcing {
    pub fn new(cat: &Arc<FinCategory>) -> Result<Self> {
        Ok(Forcing {
            cat: cat.clone(),
            omega: omega(cat)?,
        })
    }

    pub fn category(&self) -> &Arc<FinCategory> {
        &self.cat
    }

    pub fn omega(&self) -> &Omega {
        &self.omega
    }

    /// Does `env.stage ⊩ φ[env]`?
    pub fn forces(&self, env: &Environment, phi: &Formula) -> Result<bool> {
        if env.stage >= self.cat.object_count() {
            return Err(PresheafError::UnknownObject(env.stage).into());
        }
        let names: Vec<String> = env.bindings.keys().cloned().collect();
        let compiled = compile(phi, &names)?;
        let mut values = vec![usize::MAX; compiled.slots];
        for (slot, (name, sieve)) in env.bindings.iter().enumerate() {
            if sieve.apex != env.stage {
                return Err(LogicError::EnvironmentMismatch {
                    variable: name.clone(),
                });
            }
            values[slot] = self
                .omega
                .index_of(sieve)
                .ok_or_else(|| LogicError::InvariantViolation(format!("binding for {name} is not a sieve")))?;
        }
        let run = Run {
            forcing: self,
            code: &compiled,
            memo: RefCell::new(HashMap::new()),
        };
        Ok(run.eval(compiled.root, env.stage, &values))
    }

    /// The object sieve `{ D : D ⊩ φ }` of a closed formula.
    pub fn sentence_value(&self, phi: &Formula) -> Result<ObjectSieve> {
        let compiled = compile(phi, &[])?;
        let run = Run {
            forcing: self,
            code: &compiled,
            memo: RefCell::new(HashMap::new()),
        };
        let values = vec![usize::MAX; compiled.slots];
        let members: Vec<ObjId> = self
            .cat
            .objects()
            .filter(|&d| run.eval(compiled.root, d, &values))
            .collect();
        ObjectSieve::new(&self.cat, members).map_err(|e| {
            LogicError::InvariantViolation(format!("value of a closed formula is not downward closed: {e}"))
        })
    }

    pub fn satisfies(&self, phi: &Formula) -> Result<bool> {
        Ok(self.sentence_value(phi)?.is_all())
    }

    /// Sieves `S` on each stage with `D ⊩ ∀x:Ω. γ(x, y)[y ↦ S]`.
    pub fn higgs_object(&self) -> Result<Subpresheaf> {
        let phi = Formula::forall("x", Formula::gamma(Formula::var("x"), Formula::var("y")));
        let compiled = compile(&phi, &["y".to_string()])?;
        let run = Run {
            forcing: self,
            code: &compiled,
            memo: RefCell::new(HashMap::new()),
        };
        let om = &self.omega.presheaf;
        let mut carrier = FixedBitSet::with_capacity(om.total());
        let mut values = vec![usize::MAX; compiled.slots];
        for (d, k) in om.objects_elements() {
            values[0] = k;
            if run.eval(compiled.root, d, &values) {
                carrier.insert(om.global(d, k));
            }
        }
        Ok(Subpresheaf::new(om, carrier)?)
    }
}

/// `(node, stage, values of the node's free slots)`.
type MemoKey = (usize, ObjId, Vec<usize>);

struct Run<'a> {
    forcing: &'a Forcing,
    code: &'a Compiled,
    memo: RefCell<HashMap<MemoKey, bool>>,
}

impl Run<'_> {
    fn eval(&self, node: usize, stage: ObjId, env: &[usize]) -> bool {
        let key_vals: Vec<usize> = self.code.free[node].iter().map(|&s| env[s]).collect();
        let key = (node, stage, key_vals);
        if let Some(&v) = self.memo.borrow().get(&key) {
            return v;
        }
        let v = self.compute(node, stage, env);
        self.memo.borrow_mut().insert(key, v);
        v
    }

    fn restrict(&self, env: &[usize], node: usize, f: usize) -> Vec<usize> {
        let om = &self.forcing.omega.presheaf;
        let mut out = env.to_vec();
        for &s in &self.code.free[node] {
            out[s] = om.act(f, env[s]);
        }
        out
    }

    fn compute(&self, node: usize, stage: ObjId, env: &[usize]) -> bool {
        let cat = &self.forcing.cat;
        match &self.code.nodes[node] {
            Node::Bottom => false,
            Node::Top => true,
            Node::Const(u) => u.contains(stage),
            Node::Var(s) => env[*s] == self.forcing.omega.maximal[stage],
            Node::And(a, b) => self.eval(*a, stage, env) && self.eval(*b, stage, env),
            Node::Or(a, b) => self.eval(*a, stage, env) || self.eval(*b, stage, env),
            Node::Implies(a, b) => cat.incoming(stage).iter().all(|&f| {
                let e = cat.dom(f);
                let moved = self.restrict(env, node, f);
                !self.eval(*a, e, &moved) || self.eval(*b, e, &moved)
            }),
            Node::Forall(slot, body) => cat.incoming(stage).iter().all(|&f| {
                let e = cat.dom(f);
                let mut moved = self.restrict(env, node, f);
                (0..self.forcing.omega.sieves[e].len()).all(|k| {
                    moved[*slot] = k;
                    self.eval(*body, e, &moved)
                })
            }),
        }
    }
}

/// One-shot forcing at a stage.
pub fn forces(cat: &Arc<FinCategory>, env: &Environment, phi: &Formula) -> Result<bool> {
    Forcing::new(cat)?.forces(env, phi)
}

pub fn sentence_value(cat: &Arc<FinCategory>, phi: &Formula) -> Result<ObjectSieve> {
    Forcing::new(cat)?.sentence_value(phi)
}

pub fn satisfies(cat: &Arc<FinCategory>, phi: &Formula) -> Result<bool> {
    Forcing::new(cat)?.satisfies(phi)
}

pub fn higgs_object(cat: &Arc<FinCategory>) -> Result<Subpresheaf> {
    Forcing::new(cat)?.higgs_object()
}

// ---- combinatorial characterizations ----

/// For each object, the largest number of consecutive non-invertible
/// morphisms in a composable sequence ending there (`inf` if unbounded).
pub fn non_iso_chain_lengths(cat: &FinCategory) -> Vec<ExtNat> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(cat: &FinCategory, d: ObjId, mark: &mut [Mark], len: &mut [ExtNat]) {
        mark[d] = Mark::Active;
        let mut best = ExtNat::Finite(0);
        for &f in cat.incoming(d) {
            if cat.is_iso(f) {
                continue;
            }
            let c = cat.dom(f);
            match mark[c] {
                Mark::Active => best = ExtNat::Inf,
                Mark::New => visit(cat, c, mark, len),
                Mark::Done => {}
            }
            if mark[c] == Mark::Done {
                let through = match len[c] {
                    ExtNat::Finite(k) => ExtNat::Finite(k + 1),
                    other => other,
                };
                best = best.max(through);
            }
        }
        mark[d] = Mark::Done;
        len[d] = best;
    }
    let n = cat.object_count();
    let mut mark = vec![Mark::New; n];
    let mut len = vec![ExtNat::Finite(0); n];
    for d in 0..n {
        if mark[d] == Mark::New {
            visit(cat, d, &mut mark, &mut len);
        }
    }
    // anything downstream of a non-iso cycle is unbounded; propagate
    loop {
        let mut changed = false;
        for f in cat.morphism_ids() {
            if !cat.is_iso(f) && len[cat.dom(f)] == ExtNat::Inf && len[cat.cod(f)] != ExtNat::Inf {
                len[cat.cod(f)] = ExtNat::Inf;
                changed = true;
            }
        }
        if !changed {
            return len;
        }
    }
}

/// Objects `D` such that every composable sequence of `n + 1` morphisms
/// ending at `D` contains an isomorphism.
pub fn ibd_sieve_char(cat: &FinCategory, n: ExtNat) -> ObjectSieve {
    match n {
        ExtNat::NegInf => ObjectSieve::empty(cat),
        ExtNat::Inf => ObjectSieve::all(cat),
        ExtNat::Finite(k) => {
            let lengths = non_iso_chain_lengths(cat);
            let members = cat.objects().filter(|&d| lengths[d] <= ExtNat::Finite(k));
            ObjectSieve::new(cat, members).expect("chain bound is downward closed")
        }
    }
}

/// Objects `D` such that every `c: C -> D` has `C ∈ U` or is an isomorphism.
pub fn ibb_sieve(cat: &FinCategory, u: &ObjectSieve) -> ObjectSieve {
    let members = cat.objects().filter(|&d| {
        cat.incoming(d)
            .iter()
            .all(|&c| u.contains(cat.dom(c)) || cat.is_iso(c))
    });
    ObjectSieve::new(cat, members).expect("downward closed")
}

/// Every object outside `U` is extreme.
pub fn internally_widespread(cat: &FinCategory, u: &ObjectSieve) -> bool {
    cat.objects().all(|c| u.contains(c) || cat.is_extreme(c).unwrap_or(false))
}

/// Objects where the sentence `∀x:Ω. γ(x, U)` is forced.
pub fn internally_widespread_formula(u: &ObjectSieve) -> Formula {
    Formula::forall("x", Formula::gamma(Formula::var("x"), Formula::Const(u.clone())))
}

// ---- widespread elements of an enumerated lattice ----

fn position(lattice: &[Subpresheaf], w: &Subpresheaf) -> Result<usize> {
    lattice.iter().position(|v| v == w).ok_or(LogicError::NotInLattice)
}

/// The up-set of `w` is a complemented lattice.
pub fn widespread_by_definition(lattice: &[Subpresheaf], w: &Subpresheaf) -> Result<bool> {
    position(lattice, w)?;
    let up: Vec<&Subpresheaf> = lattice
        .iter()
        .filter(|v| w.carrier().is_subset(v.carrier()))
        .collect();
    let top = lattice
        .iter()
        .find(|v| v.is_top())
        .ok_or(LogicError::NotInLattice)?;
    Ok(up.iter().all(|v| {
        up.iter().any(|u| {
            let mut meet = v.carrier().clone();
            meet.intersect_with(u.carrier());
            let mut join = v.carrier().clone();
            join.union_with(u.carrier());
            meet == *w.carrier() && join == *top.carrier()
        })
    }))
}

/// `⊤ = γ(v, w)` for every `v`.
pub fn widespread_by_gamma(lattice: &[Subpresheaf], w: &Subpresheaf) -> Result<bool> {
    position(lattice, w)?;
    for v in lattice {
        if !v.gamma(w)?.is_top() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For a subpresheaf of a representable: every morphism into the
/// representing object lies in `w` or has a section.
pub fn widespread_by_sections(w: &Subpresheaf) -> Result<Option<bool>> {
    let parent = w.parent();
    let Some(d) = parent.representing_object() else {
        return Ok(None);
    };
    let cat = parent.base();
    Ok(Some(cat.objects().all(|f_dom| {
        cat.hom(f_dom, d)
            .iter()
            .enumerate()
            .all(|(k, &f)| w.contains(f_dom, k) || cat.section(f).is_some())
    })))
}
