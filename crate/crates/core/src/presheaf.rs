//! Finite presheaves on a [`FinCategory`]: Yoneda, pointwise colimits, the
//! category of elements, subpresheaves with their Heyting and co-Heyting
//! operations, and the subobject classifier.
//!
//! Elements are addressed either locally, as `(stage, index)`, or globally by
//! a single index running over all stages in object order. Subpresheaves are
//! bitsets over global indices.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fincat::{
    union_closure, CategoryDescription, CategoryError, FinCategory, MorId, Morphism, ObjId,
};

/// Largest lattice or sieve family the enumerators will materialize.
pub const LATTICE_BUDGET: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresheafError {
    #[error("malformed presheaf: {0}")]
    MalformedInput(String),
    #[error("action is not functorial at {0}")]
    NotFunctorial(String),
    #[error("not closed under the action: {0}")]
    NotClosed(String),
    #[error("map is not natural: square for {morphism} fails at element {element}")]
    NotNatural { morphism: String, element: String },
    #[error("arguments live over different presheaves")]
    ParentMismatch,
    #[error("unknown object id {0}")]
    UnknownObject(ObjId),
    #[error("unknown element {index} at stage {stage}")]
    UnknownElement { stage: ObjId, index: usize },
    #[error("budget exceeded: {what} (limit {budget})")]
    BudgetExceeded { what: String, budget: usize },
    #[error(transparent)]
    Category(#[from] CategoryError),
}

pub type Result<T, E = PresheafError> = std::result::Result<T, E>;

/// A finite contravariant set-valued functor.
#[derive(Debug, Clone)]
pub struct Presheaf {
    base: Arc<FinCategory>,
    names: Vec<Vec<String>>,
    /// `offsets[c]` is the global index of the first element at stage `c`.
    offsets: Vec<usize>,
    /// `action[f][y] = y·f`, local indices, for `y` at `cod f`.
    action: Vec<Vec<usize>>,
    /// Set when built by [`yoneda`]: element `k` at `d` is `hom(d, c)[k]`.
    representing: Option<ObjId>,
}

impl PartialEq for Presheaf {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.base, &other.base) || self.base == other.base)
            && self.names == other.names
            && self.action == other.action
    }
}

impl Eq for Presheaf {}

impl Presheaf {
    /// Builds and validates a presheaf from element names per object and the
    /// action table. Values must land in range and the action must be functorial.
    pub fn new(
        base: Arc<FinCategory>,
        names: Vec<Vec<String>>,
        action: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let p = Self::new_unchecked(base, names, action)?;
        p.check_functorial()?;
        Ok(p)
    }

    fn new_unchecked(
        base: Arc<FinCategory>,
        names: Vec<Vec<String>>,
        action: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if names.len() != base.object_count() || action.len() != base.morphism_count() {
            return Err(PresheafError::MalformedInput(
                "element or action table does not match the base".into(),
            ));
        }
        for (f, row) in action.iter().enumerate() {
            let (d, c) = (base.dom(f), base.cod(f));
            if row.len() != names[c].len() || row.iter().any(|&x| x >= names[d].len()) {
                return Err(PresheafError::MalformedInput(format!(
                    "action of {} has the wrong shape",
                    base.morphism_name(f)
                )));
            }
        }
        let mut offsets = Vec::with_capacity(names.len() + 1);
        let mut total = 0;
        for stage in &names {
            offsets.push(total);
            total += stage.len();
        }
        offsets.push(total);
        Ok(Presheaf {
            base,
            names,
            offsets,
            action,
            representing: None,
        })
    }

    fn check_functorial(&self) -> Result<()> {
        let cat = &self.base;
        for c in cat.objects() {
            let id = cat.identity(c);
            if self.action[id].iter().enumerate().any(|(y, &x)| x != y) {
                return Err(PresheafError::NotFunctorial(cat.morphism_name(id).into()));
            }
        }
        for f in cat.morphism_ids() {
            for &g in cat.outgoing(cat.cod(f)) {
                let gf = cat.compose_unchecked(g, f);
                for z in 0..self.names[cat.cod(g)].len() {
                    if self.action[gf][z] != self.action[f][self.action[g][z]] {
                        return Err(PresheafError::NotFunctorial(format!(
                            "{} ∘ {}",
                            cat.morphism_name(g),
                            cat.morphism_name(f)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The empty presheaf.
    pub fn empty(base: Arc<FinCategory>) -> Self {
        let names = vec![Vec::new(); base.object_count()];
        let action = vec![Vec::new(); base.morphism_count()];
        Self::new_unchecked(base, names, action).expect("empty presheaf")
    }

    /// The terminal presheaf, one element `*` per stage.
    pub fn terminal(base: Arc<FinCategory>) -> Self {
        let names = vec![vec!["*".to_string()]; base.object_count()];
        let action = vec![vec![0]; base.morphism_count()];
        Self::new_unchecked(base, names, action).expect("terminal presheaf")
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        &self.base
    }

    pub fn size(&self, c: ObjId) -> usize {
        self.names[c].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.names.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.offsets[self.names.len()]
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn name(&self, c: ObjId, x: usize) -> &str {
        &self.names[c][x]
    }

    pub fn names(&self, c: ObjId) -> &[String] {
        &self.names[c]
    }

    pub fn representing_object(&self) -> Option<ObjId> {
        self.representing
    }

    /// `y·f` for `y` at `cod f`.
    #[inline]
    pub fn act(&self, f: MorId, y: usize) -> usize {
        self.action[f][y]
    }

    pub fn action_table(&self, f: MorId) -> &[usize] {
        &self.action[f]
    }

    #[inline]
    pub fn global(&self, c: ObjId, x: usize) -> usize {
        self.offsets[c] + x
    }

    /// Stage and local index of a global element index.
    pub fn locate(&self, g: usize) -> (ObjId, usize) {
        let c = self.offsets.partition_point(|&o| o <= g) - 1;
        (c, g - self.offsets[c])
    }

    /// All `(stage, local index)` pairs in global order.
    pub fn objects_elements(&self) -> impl Iterator<Item = (ObjId, usize)> + '_ {
        self.base
            .objects()
            .flat_map(move |c| (0..self.names[c].len()).map(move |x| (c, x)))
    }

    pub fn check_element(&self, c: ObjId, x: usize) -> Result<()> {
        if c >= self.names.len() {
            return Err(PresheafError::UnknownObject(c));
        }
        if x >= self.names[c].len() {
            return Err(PresheafError::UnknownElement { stage: c, index: x });
        }
        Ok(())
    }

    /// Builds a presheaf from its JSON description over an already resolved base.
    /// Identity actions may be omitted, as may actions of morphisms that are
    /// composites of morphisms whose actions are given.
    pub fn from_description(desc: &PresheafDescription, base: Arc<FinCategory>) -> Result<Self> {
        let cat = base.clone();
        for key in desc.elements.keys() {
            if cat.object_by_name(key).is_none() {
                return Err(PresheafError::MalformedInput(format!("unknown object {key}")));
            }
        }
        let names: Vec<Vec<String>> = cat
            .objects()
            .map(|c| desc.elements.get(cat.object_name(c)).cloned().unwrap_or_default())
            .collect();
        let index: Vec<HashMap<&str, usize>> = names
            .iter()
            .map(|stage| stage.iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect())
            .collect();
        for (c, stage) in index.iter().enumerate() {
            if stage.len() != names[c].len() {
                return Err(PresheafError::MalformedInput(format!(
                    "duplicate element name at {}",
                    cat.object_name(c)
                )));
            }
        }

        let mut action: Vec<Option<Vec<usize>>> = vec![None; cat.morphism_count()];
        for (fname, table) in &desc.action {
            let f = cat
                .morphism_by_name(fname)
                .ok_or_else(|| PresheafError::MalformedInput(format!("unknown morphism {fname}")))?;
            let (d, c) = (cat.dom(f), cat.cod(f));
            let mut row = vec![usize::MAX; names[c].len()];
            for (y, x) in table {
                let yi = *index[c].get(y.as_str()).ok_or_else(|| {
                    PresheafError::MalformedInput(format!("{y} is not an element at {}", cat.object_name(c)))
                })?;
                let xi = *index[d].get(x.as_str()).ok_or_else(|| {
                    PresheafError::MalformedInput(format!("{x} is not an element at {}", cat.object_name(d)))
                })?;
                row[yi] = xi;
            }
            if row.contains(&usize::MAX) {
                return Err(PresheafError::MalformedInput(format!(
                    "action of {fname} is not total"
                )));
            }
            action[f] = Some(row);
        }
        for c in cat.objects() {
            let id = cat.identity(c);
            if action[id].is_none() {
                action[id] = Some((0..names[c].len()).collect());
            }
        }
        for h in cat.morphism_ids() {
            if action[h].is_none() && names[cat.cod(h)].is_empty() {
                action[h] = Some(Vec::new());
            }
        }
        // infer omitted actions from composites until nothing changes
        loop {
            let mut progress = false;
            for h in cat.morphism_ids() {
                if action[h].is_some() {
                    continue;
                }
                let found = cat.morphism_ids().find_map(|f| {
                    let af = action[f].as_ref()?;
                    cat.outgoing(cat.cod(f)).iter().find_map(|&g| {
                        (cat.compose_unchecked(g, f) == h)
                            .then(|| action[g].as_ref().map(|ag| ag.iter().map(|&z| af[z]).collect::<Vec<_>>()))
                            .flatten()
                    })
                });
                if let Some(row) = found {
                    action[h] = Some(row);
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        let action = action
            .into_iter()
            .enumerate()
            .map(|(f, row)| {
                row.ok_or_else(|| {
                    PresheafError::MalformedInput(format!(
                        "action of {} is missing and not a composite of given actions",
                        cat.morphism_name(f)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Presheaf::new(base, names, action)
    }

    /// JSON description with the given base reference. All actions are listed.
    pub fn describe(&self, base: BaseRef) -> PresheafDescription {
        let cat = &self.base;
        PresheafDescription {
            base,
            elements: cat
                .objects()
                .map(|c| (cat.object_name(c).to_string(), self.names[c].clone()))
                .collect(),
            action: cat
                .morphism_ids()
                .filter(|&f| !cat.is_identity(f))
                .map(|f| {
                    let (d, c) = (cat.dom(f), cat.cod(f));
                    let table = self.action[f]
                        .iter()
                        .enumerate()
                        .map(|(y, &x)| (self.names[c][y].clone(), self.names[d][x].clone()))
                        .collect();
                    (cat.morphism_name(f).to_string(), table)
                })
                .collect(),
        }
    }
}

/// Where a serialized presheaf finds its base category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseRef {
    /// A generated site such as `delta:2`, or a path to a category JSON file.
    Named(String),
    Inline(CategoryDescription),
}

/// JSON form: `{"base", "elements": {obj: [..]}, "action": {f: {y: x}}}`,
/// where the action maps codomain-stage elements to domain-stage elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresheafDescription {
    pub base: BaseRef,
    pub elements: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub action: BTreeMap<String, BTreeMap<String, String>>,
}

// ---- maps ----

/// A natural transformation, stored as a map of global element indices.
#[derive(Debug, Clone)]
pub struct PresheafMap {
    pub source: Arc<Presheaf>,
    pub target: Arc<Presheaf>,
    components: Vec<usize>,
}

impl PresheafMap {
    /// `components[g]` is the global index in `target` of the image of the
    /// global element `g` of `source`. Checked for stage preservation and naturality.
    pub fn new(source: Arc<Presheaf>, target: Arc<Presheaf>, components: Vec<usize>) -> Result<Self> {
        if !Arc::ptr_eq(source.base(), target.base()) && source.base() != target.base() {
            return Err(PresheafError::ParentMismatch);
        }
        if components.len() != source.total() {
            return Err(PresheafError::MalformedInput("component table has the wrong length".into()));
        }
        for (g, &t) in components.iter().enumerate() {
            let (c, x) = source.locate(g);
            if t >= target.total() || target.locate(t).0 != c {
                return Err(PresheafError::MalformedInput(format!(
                    "component of {} leaves its stage",
                    source.name(c, x)
                )));
            }
        }
        let map = PresheafMap {
            source,
            target,
            components,
        };
        map.check_natural()?;
        Ok(map)
    }

    fn check_natural(&self) -> Result<()> {
        let cat = self.source.base().clone();
        for f in cat.morphism_ids() {
            let (d, c) = (cat.dom(f), cat.cod(f));
            for y in 0..self.source.size(c) {
                let lhs = self.apply(d, self.source.act(f, y));
                let rhs = self.target.act(f, self.apply(c, y));
                if lhs != rhs {
                    return Err(PresheafError::NotNatural {
                        morphism: cat.morphism_name(f).into(),
                        element: self.source.name(c, y).into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Image of the local element `x` at stage `c`, as a local index.
    pub fn apply(&self, c: ObjId, x: usize) -> usize {
        self.components[self.source.global(c, x)] - self.target.global(c, 0)
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn is_iso(&self) -> bool {
        let mut hit = FixedBitSet::with_capacity(self.target.total());
        for &t in &self.components {
            if hit.put(t) {
                return false;
            }
        }
        hit.count_ones(..) == self.target.total()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &PresheafMap) -> Result<PresheafMap> {
        if !Arc::ptr_eq(&self.target, &other.source) && *self.target != *other.source {
            return Err(PresheafError::ParentMismatch);
        }
        Ok(PresheafMap {
            source: self.source.clone(),
            target: other.target.clone(),
            components: self.components.iter().map(|&t| other.components[t]).collect(),
        })
    }

    pub fn image(&self) -> Subpresheaf {
        let mut carrier = FixedBitSet::with_capacity(self.target.total());
        for &t in &self.components {
            carrier.insert(t);
        }
        Subpresheaf {
            parent: self.target.clone(),
            carrier,
        }
    }
}

/// All natural transformations `source -> target`, by backtracking over
/// stages with a naturality check once both ends of a morphism are assigned.
pub fn all_maps(source: &Arc<Presheaf>, target: &Arc<Presheaf>, budget: usize) -> Result<Vec<PresheafMap>> {
    let cat = source.base().clone();
    let n = cat.object_count();
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut out = Vec::new();

    fn stage_ok(cat: &FinCategory, s: &Presheaf, t: &Presheaf, a: &[Vec<usize>], upto: ObjId) -> bool {
        // every morphism between stages <= upto touching `upto`
        (0..=upto).all(|other| {
            [(other, upto), (upto, other)].iter().all(|&(d, c)| {
                cat.hom(d, c).iter().all(|&f| {
                    (0..s.size(c)).all(|y| a[d][s.act(f, y)] == t.act(f, a[c][y]))
                })
            })
        })
    }

    fn go(
        c: ObjId,
        cat: &FinCategory,
        s: &Arc<Presheaf>,
        t: &Arc<Presheaf>,
        a: &mut Vec<Vec<usize>>,
        out: &mut Vec<PresheafMap>,
        budget: usize,
    ) -> Result<()> {
        if c == cat.object_count() {
            if out.len() >= budget {
                return Err(PresheafError::BudgetExceeded {
                    what: "presheaf maps".into(),
                    budget,
                });
            }
            let components = s
                .objects_elements()
                .map(|(d, x)| t.global(d, a[d][x]))
                .collect();
            out.push(PresheafMap {
                source: s.clone(),
                target: t.clone(),
                components,
            });
            return Ok(());
        }
        let (k, m) = (s.size(c), t.size(c));
        if k > 0 && m == 0 {
            return Ok(());
        }
        let mut current = vec![0; k];
        loop {
            a[c] = current.clone();
            if stage_ok(cat, s, t, a, c) {
                go(c + 1, cat, s, t, a, out, budget)?;
            }
            // next function [k] -> [m] in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(());
                }
                i -= 1;
                current[i] += 1;
                if current[i] < m {
                    break;
                }
                current[i] = 0;
            }
        }
    }

    if n == 0 {
        out.push(PresheafMap {
            source: source.clone(),
            target: target.clone(),
            components: Vec::new(),
        });
        return Ok(out);
    }
    go(0, &cat, source, target, &mut assignment, &mut out, budget)?;
    Ok(out)
}

// ---- Yoneda and colimits ----

/// The representable presheaf `hom(-, c)`; element `k` at `d` is `hom(d, c)[k]`.
pub fn yoneda(cat: &Arc<FinCategory>, c: ObjId) -> Result<Presheaf> {
    if c >= cat.object_count() {
        return Err(PresheafError::UnknownObject(c));
    }
    let names = cat
        .objects()
        .map(|d| cat.hom(d, c).iter().map(|&f| cat.morphism_name(f).to_string()).collect())
        .collect();
    let position: HashMap<MorId, usize> = cat
        .objects()
        .flat_map(|d| cat.hom(d, c).iter().enumerate().map(|(k, &f)| (f, k)))
        .collect();
    let action = cat
        .morphism_ids()
        .map(|f| {
            cat.hom(cat.cod(f), c)
                .iter()
                .map(|&y| position[&cat.compose_unchecked(y, f)])
                .collect()
        })
        .collect();
    let mut p = Presheaf::new_unchecked(cat.clone(), names, action)?;
    p.representing = Some(c);
    Ok(p)
}

/// Disjoint union, with elements tagged `inl.` / `inr.`; returns the cocone.
pub fn coproduct(x: &Arc<Presheaf>, y: &Arc<Presheaf>) -> Result<(Presheaf, PresheafMap, PresheafMap)> {
    if !Arc::ptr_eq(x.base(), y.base()) && x.base() != y.base() {
        return Err(PresheafError::ParentMismatch);
    }
    let cat = x.base().clone();
    let names = cat
        .objects()
        .map(|c| {
            x.names(c)
                .iter()
                .map(|n| format!("inl.{n}"))
                .chain(y.names(c).iter().map(|n| format!("inr.{n}")))
                .collect()
        })
        .collect();
    let action = cat
        .morphism_ids()
        .map(|f| {
            let shift = x.size(cat.dom(f));
            x.action_table(f)
                .iter()
                .copied()
                .chain(y.action_table(f).iter().map(|&v| v + shift))
                .collect()
        })
        .collect();
    let sum = Arc::new(Presheaf::new_unchecked(cat.clone(), names, action)?);
    let inl = x.objects_elements().map(|(c, e)| sum.global(c, e)).collect();
    let inr = y
        .objects_elements()
        .map(|(c, e)| sum.global(c, x.size(c) + e))
        .collect();
    let inl = PresheafMap::new(x.clone(), sum.clone(), inl)?;
    let inr = PresheafMap::new(y.clone(), sum.clone(), inr)?;
    Ok(((*sum).clone(), inl, inr))
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Quotient of `x` by the stagewise equivalence generated by `pairs`
/// (global indices). Classes are named after their least member.
fn quotient(x: &Arc<Presheaf>, pairs: impl Iterator<Item = (usize, usize)>) -> Result<(Presheaf, PresheafMap)> {
    let cat = x.base().clone();
    let mut parent: Vec<usize> = (0..x.total()).collect();
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    // class index per element, classes ordered by least representative
    let mut class_of = vec![0; x.total()];
    let mut names = vec![Vec::new(); cat.object_count()];
    let mut rep_index: HashMap<usize, usize> = HashMap::new();
    for (c, e) in x.objects_elements() {
        let g = x.global(c, e);
        let root = find(&mut parent, g);
        let k = *rep_index.entry(root).or_insert_with(|| {
            names[c].push(x.name(c, e).to_string());
            names[c].len() - 1
        });
        class_of[g] = k;
    }
    let action = cat
        .morphism_ids()
        .map(|f| {
            let (d, c) = (cat.dom(f), cat.cod(f));
            let mut row = vec![0; names[c].len()];
            for y in 0..x.size(c) {
                row[class_of[x.global(c, y)]] = class_of[x.global(d, x.act(f, y))];
            }
            row
        })
        .collect();
    let q = Arc::new(Presheaf::new(cat, names, action)?);
    let projection = x
        .objects_elements()
        .map(|(c, e)| q.global(c, class_of[x.global(c, e)]))
        .collect();
    let projection = PresheafMap::new(x.clone(), q.clone(), projection)?;
    Ok(((*q).clone(), projection))
}

/// Coequalizer of two parallel maps `p, q: A -> X`, computed pointwise.
pub fn coequalizer(p: &PresheafMap, q: &PresheafMap) -> Result<(Presheaf, PresheafMap)> {
    if !Arc::ptr_eq(&p.source, &q.source) && *p.source != *q.source
        || !Arc::ptr_eq(&p.target, &q.target) && *p.target != *q.target
    {
        return Err(PresheafError::ParentMismatch);
    }
    quotient(&p.target, p.components.iter().copied().zip(q.components.iter().copied()))
}

/// Pushout of `f: A -> X` and `g: A -> Y`; returns the vertex and both legs.
pub fn pushout(f: &PresheafMap, g: &PresheafMap) -> Result<(Presheaf, PresheafMap, PresheafMap)> {
    if !Arc::ptr_eq(&f.source, &g.source) && *f.source != *g.source {
        return Err(PresheafError::ParentMismatch);
    }
    let (sum, inl, inr) = coproduct(&f.target, &g.target)?;
    let sum = Arc::new(sum);
    let inl = PresheafMap { target: sum.clone(), ..inl };
    let inr = PresheafMap { target: sum.clone(), ..inr };
    let pairs: Vec<(usize, usize)> = f
        .components
        .iter()
        .zip(&g.components)
        .map(|(&a, &b)| (inl.components[a], inr.components[b]))
        .collect();
    let (vertex, projection) = quotient(&sum, pairs.into_iter())?;
    let left = inl.then(&projection)?;
    let right = inr.then(&projection)?;
    Ok((vertex, left, right))
}

// ---- category of elements ----

/// The category of elements with labels back to the presheaf and the base.
#[derive(Debug, Clone)]
pub struct ElementsCategory {
    pub category: FinCategory,
    /// `(stage, local index)` of each object.
    pub objects: Vec<(ObjId, usize)>,
    /// Base morphism underlying each morphism.
    pub morphisms: Vec<MorId>,
}

/// Objects `(x, C)`; a morphism `(x, C) -> (y, D)` for every `f: C -> D` with
/// `y·f = x`. Object ids coincide with global element indices.
pub fn elements_category(x: &Presheaf) -> Result<ElementsCategory> {
    let cat = x.base();
    let objects: Vec<(ObjId, usize)> = x.objects_elements().collect();
    let mut morphisms = Vec::new();
    let mut labels = Vec::new();
    let mut index: HashMap<(MorId, usize), usize> = HashMap::new();
    for &(c, e) in &objects {
        for &f in cat.outgoing(c) {
            let d = cat.cod(f);
            for y in 0..x.size(d) {
                if x.act(f, y) == e {
                    index.insert((f, x.global(d, y)), morphisms.len());
                    morphisms.push(Morphism {
                        name: format!("{}@{}", cat.morphism_name(f), x.name(d, y)),
                        dom: x.global(c, e),
                        cod: x.global(d, y),
                    });
                    labels.push(f);
                }
            }
        }
    }
    let identities = objects
        .iter()
        .map(|&(c, e)| index[&(cat.identity(c), x.global(c, e))])
        .collect();
    let category = FinCategory::from_table(
        objects
            .iter()
            .map(|&(c, e)| format!("{}@{}", x.name(c, e), cat.object_name(c)))
            .collect(),
        morphisms.clone(),
        identities,
        |g, f| {
            let gf = cat.compose(labels[g], labels[f])?;
            index.get(&(gf, morphisms[g].cod)).copied()
        },
    )?;
    Ok(ElementsCategory {
        category,
        objects,
        morphisms: labels,
    })
}

// ---- subpresheaves ----

/// A family of subsets closed under the action.
#[derive(Debug, Clone)]
pub struct Subpresheaf {
    parent: Arc<Presheaf>,
    carrier: FixedBitSet,
}

impl PartialEq for Subpresheaf {
    fn eq(&self, other: &Self) -> bool {
        self.carrier == other.carrier && same_parent(&self.parent, &other.parent)
    }
}

impl Eq for Subpresheaf {}

fn same_parent(a: &Arc<Presheaf>, b: &Arc<Presheaf>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeytingOp {
    Meet,
    Join,
    Implies,
    Not,
    Subtract,
    Boundary,
    Gamma,
}

impl Subpresheaf {
    /// Validates closure under the action.
    pub fn new(parent: &Arc<Presheaf>, carrier: FixedBitSet) -> Result<Self> {
        let mut carrier = carrier;
        carrier.grow(parent.total());
        if carrier.len() != parent.total() {
            return Err(PresheafError::MalformedInput("carrier too long".into()));
        }
        let sub = Subpresheaf {
            parent: parent.clone(),
            carrier,
        };
        let cat = parent.base();
        for f in cat.morphism_ids() {
            let (d, c) = (cat.dom(f), cat.cod(f));
            for y in 0..parent.size(c) {
                if sub.contains(c, y) && !sub.contains(d, parent.act(f, y)) {
                    return Err(PresheafError::NotClosed(format!(
                        "{}·{}",
                        parent.name(c, y),
                        cat.morphism_name(f)
                    )));
                }
            }
        }
        Ok(sub)
    }

    pub fn bottom(parent: &Arc<Presheaf>) -> Self {
        Subpresheaf {
            parent: parent.clone(),
            carrier: FixedBitSet::with_capacity(parent.total()),
        }
    }

    pub fn top(parent: &Arc<Presheaf>) -> Self {
        let mut carrier = FixedBitSet::with_capacity(parent.total());
        carrier.insert_range(..);
        Subpresheaf {
            parent: parent.clone(),
            carrier,
        }
    }

    pub fn parent(&self) -> &Arc<Presheaf> {
        &self.parent
    }

    pub fn carrier(&self) -> &FixedBitSet {
        &self.carrier
    }

    pub fn contains(&self, c: ObjId, x: usize) -> bool {
        self.carrier.contains(self.parent.global(c, x))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.parent
            .base()
            .objects()
            .map(|c| (0..self.parent.size(c)).filter(|&x| self.contains(c, x)).count())
            .collect()
    }

    pub fn is_top(&self) -> bool {
        self.carrier.count_ones(..) == self.parent.total()
    }

    pub fn is_bottom(&self) -> bool {
        self.carrier.is_clear()
    }

    pub fn le(&self, other: &Subpresheaf) -> Result<bool> {
        self.check(other)?;
        Ok(self.carrier.is_subset(&other.carrier))
    }

    fn check(&self, other: &Subpresheaf) -> Result<()> {
        if same_parent(&self.parent, &other.parent) {
            Ok(())
        } else {
            Err(PresheafError::ParentMismatch)
        }
    }

    pub fn meet(&self, other: &Subpresheaf) -> Result<Subpresheaf> {
        self.check(other)?;
        let mut carrier = self.carrier.clone();
        carrier.intersect_with(&other.carrier);
        Ok(Subpresheaf {
            parent: self.parent.clone(),
            carrier,
        })
    }

    pub fn join(&self, other: &Subpresheaf) -> Result<Subpresheaf> {
        self.check(other)?;
        let mut carrier = self.carrier.clone();
        carrier.union_with(&other.carrier);
        Ok(Subpresheaf {
            parent: self.parent.clone(),
            carrier,
        })
    }

    /// `x ∈ (U ⇒ W)(D)` iff for every `f: E -> D`, `x·f ∈ U` implies `x·f ∈ W`.
    pub fn implies(&self, other: &Subpresheaf) -> Result<Subpresheaf> {
        self.check(other)?;
        let p = &self.parent;
        let cat = p.base();
        let mut carrier = FixedBitSet::with_capacity(p.total());
        for (d, x) in p.objects_elements() {
            let forced = cat.incoming(d).iter().all(|&f| {
                let e = cat.dom(f);
                let xf = p.act(f, x);
                !self.contains(e, xf) || other.contains(e, xf)
            });
            carrier.set(p.global(d, x), forced);
        }
        Ok(Subpresheaf {
            parent: p.clone(),
            carrier,
        })
    }

    pub fn not(&self) -> Subpresheaf {
        self.implies(&Subpresheaf::bottom(&self.parent))
            .expect("same parent")
    }

    /// Least `V` with `self ≤ other ∨ V`: the union of the images of the
    /// elements of `self` lying outside `other`.
    pub fn subtract(&self, other: &Subpresheaf) -> Result<Subpresheaf> {
        self.check(other)?;
        let p = &self.parent;
        let mut acc = Subpresheaf::bottom(p);
        for (d, x) in p.objects_elements() {
            if self.contains(d, x) && !other.contains(d, x) && !acc.contains(d, x) {
                acc.carrier.union_with(&image_of_element(p, d, x)?.carrier);
            }
        }
        Ok(acc)
    }

    /// Co-Heyting boundary `a ∧ (⊤ − a)`.
    pub fn boundary(&self) -> Subpresheaf {
        let rest = Subpresheaf::top(&self.parent)
            .subtract(self)
            .expect("same parent");
        self.meet(&rest).expect("same parent")
    }

    /// `γ(v, w) = v ∨ (v ⇒ w)`.
    pub fn gamma(&self, other: &Subpresheaf) -> Result<Subpresheaf> {
        self.join(&self.implies(other)?)
    }

    /// The subpresheaf as a presheaf in its own right (names kept).
    pub fn to_presheaf(&self) -> Presheaf {
        self.to_presheaf_with_inclusion().0
    }

    /// The subpresheaf as a presheaf together with its inclusion map.
    pub fn to_presheaf_with_inclusion(&self) -> (Presheaf, PresheafMap) {
        let p = &self.parent;
        let cat = p.base().clone();
        let kept: Vec<Vec<usize>> = cat
            .objects()
            .map(|c| (0..p.size(c)).filter(|&x| self.contains(c, x)).collect())
            .collect();
        let local: Vec<HashMap<usize, usize>> = kept
            .iter()
            .map(|k| k.iter().enumerate().map(|(i, &x)| (x, i)).collect())
            .collect();
        let names = kept
            .iter()
            .enumerate()
            .map(|(c, k)| k.iter().map(|&x| p.name(c, x).to_string()).collect())
            .collect();
        let action = cat
            .morphism_ids()
            .map(|f| {
                let (d, c) = (cat.dom(f), cat.cod(f));
                kept[c].iter().map(|&y| local[d][&p.act(f, y)]).collect()
            })
            .collect();
        let sub = Arc::new(Presheaf::new_unchecked(cat, names, action).expect("closed carrier"));
        let components = sub
            .objects_elements()
            .map(|(c, i)| p.global(c, kept[c][i]))
            .collect();
        let inclusion = PresheafMap {
            source: sub.clone(),
            target: p.clone(),
            components,
        };
        ((*sub).clone(), inclusion)
    }
}

/// Applies a Heyting/co-Heyting operation; unary operations take one argument.
pub fn heyting(op: HeytingOp, args: &[&Subpresheaf]) -> Result<Subpresheaf> {
    let arity = match op {
        HeytingOp::Not | HeytingOp::Boundary => 1,
        _ => 2,
    };
    if args.len() != arity {
        return Err(PresheafError::MalformedInput(format!(
            "{op:?} takes {arity} argument(s)"
        )));
    }
    let a = args[0];
    match op {
        HeytingOp::Meet => a.meet(args[1]),
        HeytingOp::Join => a.join(args[1]),
        HeytingOp::Implies => a.implies(args[1]),
        HeytingOp::Not => Ok(a.not()),
        HeytingOp::Subtract => a.subtract(args[1]),
        HeytingOp::Boundary => Ok(a.boundary()),
        HeytingOp::Gamma => a.gamma(args[1]),
    }
}

/// `Ξ_k`: all `k·g` for `g: J -> K`.
pub fn image_of_element(x: &Arc<Presheaf>, stage: ObjId, k: usize) -> Result<Subpresheaf> {
    x.check_element(stage, k)?;
    let cat = x.base();
    let mut carrier = FixedBitSet::with_capacity(x.total());
    for &g in cat.incoming(stage) {
        carrier.insert(x.global(cat.dom(g), x.act(g, k)));
    }
    Ok(Subpresheaf {
        parent: x.clone(),
        carrier,
    })
}

/// Every subpresheaf, as the unions of principal images `Ξ_x`.
pub fn subobject_lattice(x: &Arc<Presheaf>, budget: usize) -> Result<Vec<Subpresheaf>> {
    let principals = x
        .objects_elements()
        .map(|(c, e)| image_of_element(x, c, e).map(|s| s.carrier))
        .collect::<Result<Vec<_>>>()?;
    let sets = union_closure(FixedBitSet::with_capacity(x.total()), &principals, budget)
        .ok_or_else(|| PresheafError::BudgetExceeded {
            what: "subobject lattice".into(),
            budget,
        })?;
    Ok(sets
        .into_iter()
        .map(|carrier| Subpresheaf {
            parent: x.clone(),
            carrier,
        })
        .collect())
}

// ---- sieves and the subobject classifier ----

/// A set of morphisms into `apex` closed under precomposition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sieve {
    pub apex: ObjId,
    /// Indexed by morphism id of the base.
    pub members: FixedBitSet,
}

impl Sieve {
    pub fn new(cat: &FinCategory, apex: ObjId, members: FixedBitSet) -> Result<Self> {
        if apex >= cat.object_count() {
            return Err(PresheafError::UnknownObject(apex));
        }
        let mut members = members;
        members.grow(cat.morphism_count());
        for f in members.ones() {
            if f >= cat.morphism_count() || cat.cod(f) != apex {
                return Err(PresheafError::MalformedInput(format!(
                    "sieve on {} contains a morphism with another codomain",
                    cat.object_name(apex)
                )));
            }
            if let Some(&g) = cat
                .incoming(cat.dom(f))
                .iter()
                .find(|&&g| !members.contains(cat.compose_unchecked(f, g)))
            {
                return Err(PresheafError::NotClosed(format!(
                    "{} ∘ {}",
                    cat.morphism_name(f),
                    cat.morphism_name(g)
                )));
            }
        }
        Ok(Sieve { apex, members })
    }

    pub fn maximal(cat: &FinCategory, apex: ObjId) -> Self {
        let mut members = FixedBitSet::with_capacity(cat.morphism_count());
        for &f in cat.incoming(apex) {
            members.insert(f);
        }
        Sieve { apex, members }
    }

    /// `{ g : f ∘ g ∈ S }` for `f: C -> apex`.
    pub fn pullback(&self, cat: &FinCategory, f: MorId) -> Sieve {
        let c = cat.dom(f);
        let mut members = FixedBitSet::with_capacity(cat.morphism_count());
        for &g in cat.incoming(c) {
            if self.members.contains(cat.compose_unchecked(f, g)) {
                members.insert(g);
            }
        }
        Sieve { apex: c, members }
    }

    pub fn is_maximal(&self, cat: &FinCategory) -> bool {
        self.members.contains(cat.identity(self.apex))
    }
}

/// The subobject classifier: `Ω(D)` is the set of sieves on `D`.
#[derive(Debug, Clone)]
pub struct Omega {
    pub presheaf: Arc<Presheaf>,
    /// `sieves[d][k]` is element `k` of `Ω(d)`.
    pub sieves: Vec<Vec<Sieve>>,
    /// Index of the maximal sieve at each stage.
    pub maximal: Vec<usize>,
}

/// Enumerates every sieve on every object, as unions of principal sieves.
pub fn omega(cat: &Arc<FinCategory>) -> Result<Omega> {
    let m = cat.morphism_count();
    let mut sieves = Vec::with_capacity(cat.object_count());
    for d in cat.objects() {
        let principals: Vec<FixedBitSet> = cat
            .incoming(d)
            .iter()
            .map(|&f| {
                let mut s = FixedBitSet::with_capacity(m);
                for &h in cat.incoming(cat.dom(f)) {
                    s.insert(cat.compose_unchecked(f, h));
                }
                s
            })
            .collect();
        let family = union_closure(FixedBitSet::with_capacity(m), &principals, LATTICE_BUDGET)
            .ok_or_else(|| PresheafError::BudgetExceeded {
                what: format!("sieves on {}", cat.object_name(d)),
                budget: LATTICE_BUDGET,
            })?;
        sieves.push(
            family
                .into_iter()
                .map(|members| Sieve { apex: d, members })
                .collect::<Vec<_>>(),
        );
    }
    let index: Vec<HashMap<FixedBitSet, usize>> = sieves
        .iter()
        .map(|stage| {
            stage
                .iter()
                .enumerate()
                .map(|(k, s)| (s.members.clone(), k))
                .collect()
        })
        .collect();
    let maximal = cat
        .objects()
        .map(|d| index[d][&Sieve::maximal(cat, d).members])
        .collect();
    let names = sieves
        .iter()
        .map(|stage| {
            stage
                .iter()
                .map(|s| {
                    let members: Vec<&str> = s.members.ones().map(|f| cat.morphism_name(f)).collect();
                    format!("{{{}}}", members.join(","))
                })
                .collect()
        })
        .collect();
    let action = cat
        .morphism_ids()
        .map(|f| {
            let c = cat.dom(f);
            sieves[cat.cod(f)]
                .iter()
                .map(|s| index[c][&s.pullback(cat, f).members])
                .collect()
        })
        .collect();
    let presheaf = Arc::new(Presheaf::new_unchecked(cat.clone(), names, action)?);
    Ok(Omega {
        presheaf,
        sieves,
        maximal,
    })
}

impl Omega {
    pub fn index_of(&self, sieve: &Sieve) -> Option<usize> {
        self.sieves[sieve.apex]
            .iter()
            .position(|s| s.members == sieve.members)
    }

    /// Classifying map of `u`: `x` at `D` goes to `{ f : x·f ∈ U }`.
    pub fn characteristic(&self, u: &Subpresheaf) -> Result<PresheafMap> {
        let x = u.parent();
        let cat = x.base();
        if !Arc::ptr_eq(cat, self.presheaf.base()) && **cat != **self.presheaf.base() {
            return Err(PresheafError::ParentMismatch);
        }
        let components = x
            .objects_elements()
            .map(|(d, e)| {
                let mut members = FixedBitSet::with_capacity(cat.morphism_count());
                for &f in cat.incoming(d) {
                    if u.contains(cat.dom(f), x.act(f, e)) {
                        members.insert(f);
                    }
                }
                let k = self
                    .index_of(&Sieve { apex: d, members })
                    .expect("characteristic values are sieves");
                self.presheaf.global(d, k)
            })
            .collect();
        PresheafMap::new(x.clone(), self.presheaf.clone(), components)
    }

    /// Subpresheaf classified by a map into `Ω`: pull back the maximal sieves.
    pub fn classified(&self, chi: &PresheafMap) -> Subpresheaf {
        let x = &chi.source;
        let mut carrier = FixedBitSet::with_capacity(x.total());
        for (d, e) in x.objects_elements() {
            if chi.apply(d, e) == self.maximal[d] {
                carrier.insert(x.global(d, e));
            }
        }
        Subpresheaf {
            parent: x.clone(),
            carrier,
        }
    }
}

/// A downward-closed set of objects: a subterminal of the presheaf topos.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObjectSieve {
    members: FixedBitSet,
}

impl ObjectSieve {
    pub fn new(cat: &FinCategory, members: impl IntoIterator<Item = ObjId>) -> Result<Self> {
        let mut set = FixedBitSet::with_capacity(cat.object_count());
        for c in members {
            if c >= cat.object_count() {
                return Err(PresheafError::UnknownObject(c));
            }
            set.insert(c);
        }
        for f in cat.morphism_ids() {
            if set.contains(cat.cod(f)) && !set.contains(cat.dom(f)) {
                return Err(PresheafError::NotClosed(format!(
                    "{} maps into {}",
                    cat.object_name(cat.dom(f)),
                    cat.object_name(cat.cod(f))
                )));
            }
        }
        Ok(ObjectSieve { members: set })
    }

    /// Least object sieve containing `generators`.
    pub fn generated(cat: &FinCategory, generators: impl IntoIterator<Item = ObjId>) -> Result<Self> {
        let mut set = FixedBitSet::with_capacity(cat.object_count());
        for c in generators {
            if c >= cat.object_count() {
                return Err(PresheafError::UnknownObject(c));
            }
            for &f in cat.incoming(c) {
                set.insert(cat.dom(f));
            }
        }
        Ok(ObjectSieve { members: set })
    }

    pub fn empty(cat: &FinCategory) -> Self {
        ObjectSieve {
            members: FixedBitSet::with_capacity(cat.object_count()),
        }
    }

    pub fn all(cat: &FinCategory) -> Self {
        let mut members = FixedBitSet::with_capacity(cat.object_count());
        members.insert_range(..);
        ObjectSieve { members }
    }


    pub fn contains(&self, c: ObjId) -> bool {
        self.members.contains(c)
    }

    pub fn members(&self) -> Vec<ObjId> {
        self.members.ones().collect()
    }

    pub fn len(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn is_all(&self) -> bool {
        self.members.count_ones(..) == self.members.len()
    }

    pub fn is_subset(&self, other: &ObjectSieve) -> bool {
        self.members.is_subset(&other.members)
    }

    /// Every object sieve of `cat`.
    pub fn enumerate_all(cat: &FinCategory) -> Result<Vec<ObjectSieve>> {
        let principals: Vec<FixedBitSet> = cat
            .objects()
            .map(|c| ObjectSieve::generated(cat, [c]).map(|s| s.members))
            .collect::<Result<_>>()?;
        let family = union_closure(FixedBitSet::with_capacity(cat.object_count()), &principals, LATTICE_BUDGET)
            .ok_or_else(|| PresheafError::BudgetExceeded {
                what: "object sieves".into(),
                budget: LATTICE_BUDGET,
            })?;
        Ok(family.into_iter().map(|members| ObjectSieve { members }).collect())
    }

    /// Subpresheaf of the terminal presheaf corresponding to this sieve.
    pub fn as_subterminal(&self, one: &Arc<Presheaf>) -> Subpresheaf {
        let mut carrier = FixedBitSet::with_capacity(one.total());
        for c in self.members.ones() {
            carrier.insert(one.global(c, 0));
        }
        Subpresheaf {
            parent: one.clone(),
            carrier,
        }
    }
}
