//! Finite categories presented by an explicit composition table.
//!
//! Objects and morphisms carry dense integer ids. Every search in this module
//! iterates in id order, so any "choose some map" step is deterministic.
//! Morphism classes (mono, epi, split, strong, iso), iso-classes, heights and
//! the site hypotheses are computed on first use and memoized inside the
//! category; the memo cells are `OnceLock`s, so a category can be shared
//! across threads.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ObjId = usize;
pub type MorId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoryError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("axiom violation ({axiom}): {}", witness.join(", "))]
    AxiomViolation { axiom: String, witness: Vec<String> },
    #[error("unknown object id {0}")]
    UnknownObject(ObjId),
    #[error("unknown morphism id {0}")]
    UnknownMorphism(MorId),
    #[error("{morphism} admits no {mode} / mono factorization")]
    NoFactorization { morphism: String, mode: EpiClass },
    #[error("budget exceeded: {what} ({needed} > {budget})")]
    BudgetExceeded {
        what: String,
        needed: usize,
        budget: usize,
    },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T, E = CategoryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morphism {
    pub name: String,
    pub dom: ObjId,
    pub cod: ObjId,
}

/// Class of the epimorphic part requested from [`FinCategory::factorize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpiClass {
    SplitEpi,
    StrongEpi,
}

impl std::fmt::Display for EpiClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EpiClass::SplitEpi => "split-epi",
            EpiClass::StrongEpi => "strong-epi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MorphismClass {
    pub mono: bool,
    pub epi: bool,
    pub split_mono: bool,
    pub split_epi: bool,
    pub strong_epi: bool,
    pub iso: bool,
}

/// A failed hypothesis together with the morphisms that witness the failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub property: String,
    pub morphisms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub split_epi_mono_factorization: bool,
    pub strong_epi_mono_factorization: bool,
    pub acc: bool,
    pub well_founded: bool,
    pub witnesses: Vec<Witness>,
}

/// An idempotent two-sided ideal of the site, i.e. a level of its presheaf topos.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub ideal: Vec<MorId>,
    /// Objects whose identities generate the ideal, when it is so generated.
    pub full_subcategory: Option<Vec<ObjId>>,
    /// Largest level induced by a full subcategory all of whose maps are monic.
    pub level_e: bool,
}

/// A full subcategory together with its inclusion labels.
#[derive(Debug, Clone)]
pub struct Subcategory {
    pub category: FinCategory,
    /// `objects[i]` is the object of the ambient category labelling object `i`.
    pub objects: Vec<ObjId>,
    pub morphisms: Vec<MorId>,
}

/// JSON form of a category: `{"objects", "morphisms", "identities", "compose"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryDescription {
    pub objects: Vec<String>,
    pub morphisms: Vec<MorphismDescription>,
    #[serde(default)]
    pub identities: BTreeMap<String, String>,
    /// Entries are `(outer, inner, result)`.
    #[serde(default)]
    pub compose: Vec<(String, String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismDescription {
    pub id: String,
    pub dom: String,
    pub cod: String,
}

#[derive(Debug, Clone, Default)]
struct Memo {
    mono: OnceLock<FixedBitSet>,
    epi: OnceLock<FixedBitSet>,
    split_mono: OnceLock<FixedBitSet>,
    split_epi: OnceLock<FixedBitSet>,
    iso: OnceLock<FixedBitSet>,
    strong_epi: OnceLock<FixedBitSet>,
    iso_class: OnceLock<Vec<ObjId>>,
    heights: OnceLock<Result<Vec<usize>>>,
    hypotheses: OnceLock<HypothesisReport>,
}

#[derive(Debug, Clone)]
pub struct FinCategory {
    objects: Vec<String>,
    morphisms: Vec<Morphism>,
    identities: Vec<MorId>,
    /// `hom[a * n + b]`, in id order.
    hom: Vec<Vec<MorId>>,
    incoming: Vec<Vec<MorId>>,
    outgoing: Vec<Vec<MorId>>,
    /// Position of a morphism inside `outgoing[dom]`.
    out_pos: Vec<usize>,
    /// `post[f][out_pos[g]] = g ∘ f` for every `g` with `dom g = cod f`.
    post: Vec<Vec<MorId>>,
    memo: Memo,
}

impl PartialEq for FinCategory {
    fn eq(&self, other: &Self) -> bool {
        self.objects == other.objects
            && self.morphisms == other.morphisms
            && self.identities == other.identities
            && self.post == other.post
    }
}

impl Eq for FinCategory {}

impl FinCategory {
    /// Builds the tables from a composition oracle `compose(g, f) = g ∘ f`.
    ///
    /// Checks that the oracle is total on composable pairs and respects
    /// domains and codomains; unit and associativity laws are checked
    /// separately by [`FinCategory::check_axioms`].
    pub fn from_table(
        objects: Vec<String>,
        morphisms: Vec<Morphism>,
        identities: Vec<MorId>,
        mut compose: impl FnMut(MorId, MorId) -> Option<MorId>,
    ) -> Result<Self> {
        let n = objects.len();
        if identities.len() != n {
            return Err(CategoryError::MalformedInput(format!(
                "{} identities for {} objects",
                identities.len(),
                n
            )));
        }
        for (f, m) in morphisms.iter().enumerate() {
            if m.dom >= n || m.cod >= n {
                return Err(CategoryError::MalformedInput(format!(
                    "morphism {} (#{f}) has a dangling endpoint",
                    m.name
                )));
            }
        }
        for (c, &id) in identities.iter().enumerate() {
            let Some(m) = morphisms.get(id) else {
                return Err(CategoryError::MalformedInput(format!(
                    "identity of {} is not a morphism",
                    objects[c]
                )));
            };
            if m.dom != c || m.cod != c {
                return Err(CategoryError::AxiomViolation {
                    axiom: "identity endpoints".into(),
                    witness: vec![objects[c].clone(), m.name.clone()],
                });
            }
        }

        let mut hom = vec![Vec::new(); n * n];
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        let mut out_pos = vec![0; morphisms.len()];
        for (f, m) in morphisms.iter().enumerate() {
            hom[m.dom * n + m.cod].push(f);
            incoming[m.cod].push(f);
            out_pos[f] = outgoing[m.dom].len();
            outgoing[m.dom].push(f);
        }

        let mut post = Vec::with_capacity(morphisms.len());
        for (f, mf) in morphisms.iter().enumerate() {
            let mut row = Vec::with_capacity(outgoing[mf.cod].len());
            for &g in &outgoing[mf.cod] {
                let gf = compose(g, f).ok_or_else(|| CategoryError::AxiomViolation {
                    axiom: "composition totality".into(),
                    witness: vec![morphisms[g].name.clone(), mf.name.clone()],
                })?;
                match morphisms.get(gf) {
                    Some(r) if r.dom == mf.dom && r.cod == morphisms[g].cod => row.push(gf),
                    _ => {
                        return Err(CategoryError::AxiomViolation {
                            axiom: "composite endpoints".into(),
                            witness: vec![morphisms[g].name.clone(), mf.name.clone()],
                        })
                    }
                }
            }
            post.push(row);
        }

        Ok(FinCategory {
            objects,
            morphisms,
            identities,
            hom,
            incoming,
            outgoing,
            out_pos,
            post,
            memo: Memo::default(),
        })
    }

    /// Parses and fully validates a JSON-level description.
    pub fn validate(raw: &CategoryDescription) -> Result<Self> {
        let mut obj_index = HashMap::new();
        for (i, o) in raw.objects.iter().enumerate() {
            if obj_index.insert(o.as_str(), i).is_some() {
                return Err(CategoryError::MalformedInput(format!("duplicate object {o}")));
            }
        }
        let lookup_obj = |name: &str| {
            obj_index
                .get(name)
                .copied()
                .ok_or_else(|| CategoryError::MalformedInput(format!("unknown object {name}")))
        };

        let mut morphisms = Vec::new();
        let mut mor_index: HashMap<String, MorId> = HashMap::new();
        for m in &raw.morphisms {
            let dom = lookup_obj(&m.dom)?;
            let cod = lookup_obj(&m.cod)?;
            if mor_index.insert(m.id.clone(), morphisms.len()).is_some() {
                return Err(CategoryError::MalformedInput(format!("duplicate morphism {}", m.id)));
            }
            morphisms.push(Morphism {
                name: m.id.clone(),
                dom,
                cod,
            });
        }
        for name in raw.identities.keys() {
            lookup_obj(name)?;
        }

        let mut identities = Vec::with_capacity(raw.objects.len());
        for (c, o) in raw.objects.iter().enumerate() {
            let Some(id_name) = raw.identities.get(o) else {
                return Err(CategoryError::AxiomViolation {
                    axiom: "identity exists".into(),
                    witness: vec![o.clone()],
                });
            };
            let id = match mor_index.get(id_name) {
                Some(&id) => id,
                None => {
                    // identity not listed among the morphisms: add it
                    morphisms.push(Morphism {
                        name: id_name.clone(),
                        dom: c,
                        cod: c,
                    });
                    mor_index.insert(id_name.clone(), morphisms.len() - 1);
                    morphisms.len() - 1
                }
            };
            identities.push(id);
        }

        let lookup_mor = |name: &str| {
            mor_index
                .get(name)
                .copied()
                .ok_or_else(|| CategoryError::MalformedInput(format!("unknown morphism {name}")))
        };
        let mut table: HashMap<(MorId, MorId), MorId> = HashMap::new();
        for (g, f, gf) in &raw.compose {
            let key = (lookup_mor(g)?, lookup_mor(f)?);
            let value = lookup_mor(gf)?;
            if let Some(prev) = table.insert(key, value) {
                if prev != value {
                    return Err(CategoryError::AxiomViolation {
                        axiom: "composition is a function".into(),
                        witness: vec![g.clone(), f.clone()],
                    });
                }
            }
        }
        let is_identity: Vec<Option<ObjId>> = {
            let mut v = vec![None; morphisms.len()];
            for (c, &id) in identities.iter().enumerate() {
                v[id] = Some(c);
            }
            v
        };
        let cat = FinCategory::from_table(raw.objects.clone(), morphisms, identities, |g, f| {
            if let Some(&gf) = table.get(&(g, f)) {
                return Some(gf);
            }
            match (is_identity[g], is_identity[f]) {
                (Some(_), _) => Some(f),
                (_, Some(_)) => Some(g),
                _ => None,
            }
        })?;
        cat.check_axioms()?;
        Ok(cat)
    }

    /// Unit laws, then associativity over every composable triple.
    pub fn check_axioms(&self) -> Result<()> {
        for (f, m) in self.morphisms.iter().enumerate() {
            let left = self.compose(self.identities[m.cod], f);
            let right = self.compose(f, self.identities[m.dom]);
            if left != Some(f) || right != Some(f) {
                return Err(CategoryError::AxiomViolation {
                    axiom: "identity is a unit".into(),
                    witness: vec![m.name.clone()],
                });
            }
        }
        for f in 0..self.morphisms.len() {
            for &g in &self.outgoing[self.morphisms[f].cod] {
                let gf = self.compose_unchecked(g, f);
                for &h in &self.outgoing[self.morphisms[g].cod] {
                    let lhs = self.compose_unchecked(h, gf);
                    let rhs = self.compose_unchecked(self.compose_unchecked(h, g), f);
                    if lhs != rhs {
                        return Err(CategoryError::AxiomViolation {
                            axiom: "associativity".into(),
                            witness: vec![
                                self.morphisms[h].name.clone(),
                                self.morphisms[g].name.clone(),
                                self.morphisms[f].name.clone(),
                            ],
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Emits the JSON-level description; identity composites are left implicit.
    pub fn describe(&self) -> CategoryDescription {
        let mut compose = Vec::new();
        for f in 0..self.morphisms.len() {
            if self.is_identity(f) {
                continue;
            }
            for &g in &self.outgoing[self.morphisms[f].cod] {
                if self.is_identity(g) {
                    continue;
                }
                compose.push((
                    self.morphisms[g].name.clone(),
                    self.morphisms[f].name.clone(),
                    self.morphisms[self.compose_unchecked(g, f)].name.clone(),
                ));
            }
        }
        CategoryDescription {
            objects: self.objects.clone(),
            morphisms: self
                .morphisms
                .iter()
                .map(|m| MorphismDescription {
                    id: m.name.clone(),
                    dom: self.objects[m.dom].clone(),
                    cod: self.objects[m.cod].clone(),
                })
                .collect(),
            identities: self
                .identities
                .iter()
                .enumerate()
                .map(|(c, &id)| (self.objects[c].clone(), self.morphisms[id].name.clone()))
                .collect(),
            compose,
        }
    }

    // ---- accessors ----

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn morphism_count(&self) -> usize {
        self.morphisms.len()
    }

    pub fn objects(&self) -> std::ops::Range<ObjId> {
        0..self.objects.len()
    }

    pub fn morphism_ids(&self) -> std::ops::Range<MorId> {
        0..self.morphisms.len()
    }

    pub fn object_name(&self, c: ObjId) -> &str {
        &self.objects[c]
    }

    pub fn object_names(&self) -> &[String] {
        &self.objects
    }

    pub fn object_by_name(&self, name: &str) -> Option<ObjId> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn morphism(&self, f: MorId) -> &Morphism {
        &self.morphisms[f]
    }

    pub fn morphism_name(&self, f: MorId) -> &str {
        &self.morphisms[f].name
    }

    pub fn morphism_by_name(&self, name: &str) -> Option<MorId> {
        self.morphisms.iter().position(|m| m.name == name)
    }

    pub fn dom(&self, f: MorId) -> ObjId {
        self.morphisms[f].dom
    }

    pub fn cod(&self, f: MorId) -> ObjId {
        self.morphisms[f].cod
    }

    pub fn identity(&self, c: ObjId) -> MorId {
        self.identities[c]
    }

    pub fn is_identity(&self, f: MorId) -> bool {
        self.identities[self.morphisms[f].dom] == f
    }

    pub fn hom(&self, a: ObjId, b: ObjId) -> &[MorId] {
        &self.hom[a * self.objects.len() + b]
    }

    /// Morphisms with codomain `c`, in id order.
    pub fn incoming(&self, c: ObjId) -> &[MorId] {
        &self.incoming[c]
    }

    /// Morphisms with domain `c`, in id order.
    pub fn outgoing(&self, c: ObjId) -> &[MorId] {
        &self.outgoing[c]
    }

    /// `g ∘ f`, or `None` when `cod f != dom g`.
    pub fn compose(&self, g: MorId, f: MorId) -> Option<MorId> {
        if self.morphisms[g].dom != self.morphisms[f].cod {
            return None;
        }
        Some(self.compose_unchecked(g, f))
    }

    /// `g ∘ f` for a pair known to be composable.
    #[inline]
    pub fn compose_unchecked(&self, g: MorId, f: MorId) -> MorId {
        debug_assert_eq!(self.morphisms[g].dom, self.morphisms[f].cod);
        self.post[f][self.out_pos[g]]
    }

    pub fn is_preorder(&self) -> bool {
        self.hom.iter().all(|h| h.len() <= 1)
    }

    fn check_object(&self, c: ObjId) -> Result<()> {
        if c < self.objects.len() {
            Ok(())
        } else {
            Err(CategoryError::UnknownObject(c))
        }
    }

    fn check_morphism(&self, f: MorId) -> Result<()> {
        if f < self.morphisms.len() {
            Ok(())
        } else {
            Err(CategoryError::UnknownMorphism(f))
        }
    }

    // ---- morphism classes ----

    fn mono_table(&self) -> &FixedBitSet {
        self.memo.mono.get_or_init(|| {
            let mut table = FixedBitSet::with_capacity(self.morphisms.len());
            let mut seen = vec![usize::MAX; self.morphisms.len()];
            for (f, m) in self.morphisms.iter().enumerate() {
                let mut injective = true;
                'objects: for b in self.objects() {
                    for &g in self.hom(b, m.dom) {
                        let fg = self.compose_unchecked(f, g);
                        if seen[fg] == f * self.objects.len() + b {
                            injective = false;
                            break 'objects;
                        }
                        seen[fg] = f * self.objects.len() + b;
                    }
                }
                table.set(f, injective);
            }
            table
        })
    }

    fn epi_table(&self) -> &FixedBitSet {
        self.memo.epi.get_or_init(|| {
            let mut table = FixedBitSet::with_capacity(self.morphisms.len());
            let mut seen = vec![usize::MAX; self.morphisms.len()];
            for (f, m) in self.morphisms.iter().enumerate() {
                let mut injective = true;
                'objects: for e in self.objects() {
                    for &g in self.hom(m.cod, e) {
                        let gf = self.compose_unchecked(g, f);
                        if seen[gf] == f * self.objects.len() + e {
                            injective = false;
                            break 'objects;
                        }
                        seen[gf] = f * self.objects.len() + e;
                    }
                }
                table.set(f, injective);
            }
            table
        })
    }

    fn split_epi_table(&self) -> &FixedBitSet {
        self.memo.split_epi.get_or_init(|| {
            let mut table = FixedBitSet::with_capacity(self.morphisms.len());
            for f in self.morphism_ids() {
                table.set(f, self.section(f).is_some());
            }
            table
        })
    }

    fn split_mono_table(&self) -> &FixedBitSet {
        self.memo.split_mono.get_or_init(|| {
            let mut table = FixedBitSet::with_capacity(self.morphisms.len());
            for f in self.morphism_ids() {
                table.set(f, self.retraction(f).is_some());
            }
            table
        })
    }

    fn iso_table(&self) -> &FixedBitSet {
        self.memo.iso.get_or_init(|| {
            let mut table = FixedBitSet::with_capacity(self.morphisms.len());
            for f in self.morphism_ids() {
                table.set(f, self.inverse(f).is_some());
            }
            table
        })
    }

    fn strong_epi_table(&self) -> &FixedBitSet {
        self.memo.strong_epi.get_or_init(|| {
            let monos = self.monos();
            let mut table = FixedBitSet::with_capacity(self.morphisms.len());
            for f in self.morphism_ids() {
                let strong = self.is_split_epi(f)
                    || (self.is_epi(f) && self.orthogonal_to_all(f, &monos));
                table.set(f, strong);
            }
            table
        })
    }

    /// Smallest `s` with `f ∘ s = id`.
    pub fn section(&self, f: MorId) -> Option<MorId> {
        let m = &self.morphisms[f];
        let id = self.identities[m.cod];
        self.hom(m.cod, m.dom)
            .iter()
            .copied()
            .find(|&s| self.compose_unchecked(f, s) == id)
    }

    /// Smallest `r` with `r ∘ f = id`.
    pub fn retraction(&self, f: MorId) -> Option<MorId> {
        let m = &self.morphisms[f];
        let id = self.identities[m.dom];
        self.hom(m.cod, m.dom)
            .iter()
            .copied()
            .find(|&r| self.compose_unchecked(r, f) == id)
    }

    pub fn inverse(&self, f: MorId) -> Option<MorId> {
        let m = &self.morphisms[f];
        let (id_dom, id_cod) = (self.identities[m.dom], self.identities[m.cod]);
        self.hom(m.cod, m.dom).iter().copied().find(|&g| {
            self.compose_unchecked(g, f) == id_dom && self.compose_unchecked(f, g) == id_cod
        })
    }

    pub fn is_mono(&self, f: MorId) -> bool {
        self.mono_table().contains(f)
    }

    pub fn is_epi(&self, f: MorId) -> bool {
        self.epi_table().contains(f)
    }

    pub fn is_split_epi(&self, f: MorId) -> bool {
        self.split_epi_table().contains(f)
    }

    pub fn is_split_mono(&self, f: MorId) -> bool {
        self.split_mono_table().contains(f)
    }

    pub fn is_iso(&self, f: MorId) -> bool {
        self.iso_table().contains(f)
    }

    /// Strong epi: an epimorphism left orthogonal to every monomorphism.
    /// Split epis are accepted without running the lifting search.
    pub fn is_strong_epi(&self, f: MorId) -> bool {
        self.strong_epi_table().contains(f)
    }

    /// The strong-epi test run literally from the orthogonality definition,
    /// without the split-epi shortcut.
    pub fn is_strong_epi_audit(&self, f: MorId) -> bool {
        self.is_epi(f) && self.orthogonal_to_all(f, &self.monos())
    }

    pub fn monos(&self) -> Vec<MorId> {
        self.morphism_ids().filter(|&f| self.is_mono(f)).collect()
    }

    /// Does every commutative square `m ∘ u = v ∘ f` with `m` in `monos`
    /// admit a diagonal `d` with `d ∘ f = u` and `m ∘ d = v`?
    fn orthogonal_to_all(&self, f: MorId, monos: &[MorId]) -> bool {
        let (a, b) = (self.dom(f), self.cod(f));
        monos.iter().all(|&m| {
            let (c, d) = (self.dom(m), self.cod(m));
            self.hom(a, c).iter().all(|&u| {
                let mu = self.compose_unchecked(m, u);
                self.hom(b, d).iter().all(|&v| {
                    if self.compose_unchecked(v, f) != mu {
                        return true;
                    }
                    self.hom(b, c).iter().any(|&diag| {
                        self.compose_unchecked(diag, f) == u && self.compose_unchecked(m, diag) == v
                    })
                })
            })
        })
    }

    pub fn classify_morphism(&self, f: MorId) -> Result<MorphismClass> {
        self.check_morphism(f)?;
        Ok(MorphismClass {
            mono: self.is_mono(f),
            epi: self.is_epi(f),
            split_mono: self.is_split_mono(f),
            split_epi: self.is_split_epi(f),
            strong_epi: self.is_strong_epi(f),
            iso: self.is_iso(f),
        })
    }

    fn has_epi_class(&self, f: MorId, mode: EpiClass) -> bool {
        match mode {
            EpiClass::SplitEpi => self.is_split_epi(f),
            EpiClass::StrongEpi => self.is_strong_epi(f),
        }
    }

    /// Factors `f = m ∘ e` with `m` mono and `e` of the requested class,
    /// returning the lexicographically smallest pair `(e, m)`.
    pub fn factorize(&self, f: MorId, mode: EpiClass) -> Result<(MorId, MorId)> {
        self.check_morphism(f)?;
        let (a, b) = (self.dom(f), self.cod(f));
        for &e in self.outgoing(a) {
            if !self.has_epi_class(e, mode) {
                continue;
            }
            if let Some(&m) = self
                .hom(self.cod(e), b)
                .iter()
                .find(|&&m| self.is_mono(m) && self.compose_unchecked(m, e) == f)
            {
                return Ok((e, m));
            }
        }
        Err(CategoryError::NoFactorization {
            morphism: self.morphisms[f].name.clone(),
            mode,
        })
    }

    // ---- objects ----

    /// Every map with domain `c` is an isomorphism.
    pub fn is_extreme(&self, c: ObjId) -> Result<bool> {
        self.check_object(c)?;
        Ok(self.outgoing(c).iter().all(|&f| self.is_iso(f)))
    }

    /// Every map with domain `c` is monic.
    pub fn is_minimal_object(&self, c: ObjId) -> Result<bool> {
        self.check_object(c)?;
        Ok(self.outgoing(c).iter().all(|&f| self.is_mono(f)))
    }

    pub fn minimal_objects(&self) -> Vec<ObjId> {
        self.objects()
            .filter(|&c| self.outgoing(c).iter().all(|&f| self.is_mono(f)))
            .collect()
    }

    /// Representative (least object id) of the iso-class of `c`.
    pub fn iso_class(&self, c: ObjId) -> ObjId {
        self.memo.iso_class.get_or_init(|| {
            self.objects()
                .map(|c| {
                    self.objects()
                        .find(|&d| self.hom(c, d).iter().any(|&f| self.is_iso(f)))
                        .unwrap_or(c)
                })
                .collect()
        })[c]
    }

    pub fn iso_class_count(&self) -> usize {
        self.objects().filter(|&c| self.iso_class(c) == c).count()
    }

    /// Endomorphisms that are monic but not invertible. Always empty for a
    /// finite category; exposed so the fact can be checked per site.
    pub fn non_iso_monic_endos(&self) -> Vec<MorId> {
        self.morphism_ids()
            .filter(|&f| self.dom(f) == self.cod(f) && self.is_mono(f) && !self.is_iso(f))
            .collect()
    }

    /// Height of `c`: the longest chain of non-invertible monos ending at `c`,
    /// computed as a longest path in the strict order on iso-classes.
    pub fn height(&self, c: ObjId) -> Result<usize> {
        self.check_object(c)?;
        match self.memo.heights.get_or_init(|| self.compute_heights()) {
            Ok(h) => Ok(h[c]),
            Err(e) => Err(e.clone()),
        }
    }

    fn compute_heights(&self) -> Result<Vec<usize>> {
        let n = self.objects.len();
        // preds[C] = classes B with a non-iso mono B -> C
        let mut preds = vec![Vec::new(); n];
        for f in self.morphism_ids() {
            if self.is_mono(f) && !self.is_iso(f) {
                let (b, c) = (self.iso_class(self.dom(f)), self.iso_class(self.cod(f)));
                if b == c {
                    return Err(CategoryError::InvariantViolation(format!(
                        "non-iso mono {} between isomorphic objects",
                        self.morphisms[f].name
                    )));
                }
                preds[c].push(b);
            }
        }
        let mut memo: Vec<Option<usize>> = vec![None; n];
        let mut on_stack = vec![false; n];
        fn visit(
            c: usize,
            preds: &[Vec<usize>],
            memo: &mut [Option<usize>],
            on_stack: &mut [bool],
        ) -> Option<usize> {
            if let Some(h) = memo[c] {
                return Some(h);
            }
            if on_stack[c] {
                return None;
            }
            on_stack[c] = true;
            let mut best = 0;
            for &b in &preds[c] {
                best = best.max(visit(b, preds, memo, on_stack)? + 1);
            }
            on_stack[c] = false;
            memo[c] = Some(best);
            Some(best)
        }
        (0..n)
            .map(|c| {
                visit(self.iso_class(c), &preds, &mut memo, &mut on_stack).ok_or_else(|| {
                    CategoryError::InvariantViolation("cycle of non-iso monos".into())
                })
            })
            .collect()
    }

    // ---- subcategories ----

    /// Full subcategory on `objs` (kept in the given order).
    pub fn full_subcategory(&self, objs: &[ObjId]) -> Result<Subcategory> {
        let mut index = vec![None; self.objects.len()];
        for (i, &c) in objs.iter().enumerate() {
            self.check_object(c)?;
            index[c] = Some(i);
        }
        let mut morphisms = Vec::new();
        let mut new_id = HashMap::new();
        for &a in objs {
            for &b in objs {
                for &f in self.hom(a, b) {
                    new_id.insert(f, morphisms.len());
                    morphisms.push(f);
                }
            }
        }
        let category = FinCategory::from_table(
            objs.iter().map(|&c| self.objects[c].clone()).collect(),
            morphisms
                .iter()
                .map(|&f| Morphism {
                    name: self.morphisms[f].name.clone(),
                    dom: index[self.dom(f)].unwrap(),
                    cod: index[self.cod(f)].unwrap(),
                })
                .collect(),
            objs.iter().map(|&c| new_id[&self.identities[c]]).collect(),
            |g, f| new_id.get(&self.compose(morphisms[g], morphisms[f])?).copied(),
        )?;
        Ok(Subcategory {
            category,
            objects: objs.to_vec(),
            morphisms,
        })
    }

    /// The full subcategory on the minimal objects; every map in it is monic.
    pub fn min_full_subcategory(&self) -> Result<Subcategory> {
        let sub = self.full_subcategory(&self.minimal_objects())?;
        if let Some(f) = sub.morphisms.iter().find(|&&f| !self.is_mono(f)) {
            return Err(CategoryError::InvariantViolation(format!(
                "non-monic {} between minimal objects",
                self.morphisms[*f].name
            )));
        }
        Ok(sub)
    }

    // ---- site hypotheses ----

    pub fn check_hypotheses(&self) -> HypothesisReport {
        self.memo.hypotheses.get_or_init(|| self.compute_hypotheses()).clone()
    }

    fn compute_hypotheses(&self) -> HypothesisReport {
        let mut witnesses = Vec::new();
        let mut factorization = |mode: EpiClass, property: &str| {
            let failing: Vec<String> = self
                .morphism_ids()
                .filter(|&f| self.factorize(f, mode).is_err())
                .map(|f| self.morphisms[f].name.clone())
                .collect();
            let ok = failing.is_empty();
            if !ok {
                witnesses.push(Witness {
                    property: property.into(),
                    morphisms: failing,
                });
            }
            ok
        };
        let split = factorization(EpiClass::SplitEpi, "split_epi_mono_factorization");
        let strong = factorization(EpiClass::StrongEpi, "strong_epi_mono_factorization");

        let acc = match self.acc_counterexample() {
            None => true,
            Some(cycle) => {
                witnesses.push(Witness {
                    property: "acc".into(),
                    morphisms: cycle,
                });
                false
            }
        };
        let well_founded = match self.well_foundedness_counterexample() {
            None => true,
            Some(w) => {
                witnesses.push(Witness {
                    property: "well_founded".into(),
                    morphisms: w,
                });
                false
            }
        };
        HypothesisReport {
            split_epi_mono_factorization: split,
            strong_epi_mono_factorization: strong,
            acc,
            well_founded,
            witnesses,
        }
    }

    /// Searches for an infinite ascending chain of non-iso monos with a
    /// commuting monic cocone. Nodes are monos `i: B -> C`; an edge
    /// `i -> i'` is a non-iso mono `m: B -> B'` with `i' ∘ m = i`. In a
    /// finite graph an infinite path exists iff a cycle does; the cycle,
    /// if found, is returned as the list of its `m`s.
    fn acc_counterexample(&self) -> Option<Vec<String>> {
        let monos = self.monos();
        let node_of: HashMap<MorId, usize> = monos.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut edges: Vec<Vec<(usize, MorId)>> = vec![Vec::new(); monos.len()];
        for (k, &i) in monos.iter().enumerate() {
            let (b, c) = (self.dom(i), self.cod(i));
            for &m in self.outgoing(b) {
                if !self.is_mono(m) || self.is_iso(m) {
                    continue;
                }
                for &i2 in self.hom(self.cod(m), c) {
                    if self.is_mono(i2) && self.compose_unchecked(i2, m) == i {
                        edges[k].push((node_of[&i2], m));
                    }
                }
            }
        }
        find_cycle(&edges).map(|cycle| {
            cycle
                .into_iter()
                .map(|m| self.morphisms[m].name.clone())
                .collect()
        })
    }

    /// Looks for a non-iso strong epi lying on a cycle of strong epis, which is
    /// exactly an infinite chain of strong epis that is never eventually iso.
    fn well_foundedness_counterexample(&self) -> Option<Vec<String>> {
        let n = self.objects.len();
        let mut reach = vec![FixedBitSet::with_capacity(n); n];
        for (c, row) in reach.iter_mut().enumerate() {
            row.insert(c);
        }
        for f in self.morphism_ids() {
            if self.is_strong_epi(f) {
                reach[self.dom(f)].insert(self.cod(f));
            }
        }
        // transitive closure
        for k in 0..n {
            for a in 0..n {
                if reach[a].contains(k) {
                    let row = reach[k].clone();
                    reach[a].union_with(&row);
                }
            }
        }
        self.morphism_ids()
            .find(|&f| self.is_strong_epi(f) && !self.is_iso(f) && reach[self.cod(f)].contains(self.dom(f)))
            .map(|f| vec![self.morphisms[f].name.clone()])
    }

    // ---- levels ----

    /// Two-sided ideal generated by `f`: all `a ∘ f ∘ b`.
    pub fn principal_ideal(&self, f: MorId) -> FixedBitSet {
        let mut ideal = FixedBitSet::with_capacity(self.morphisms.len());
        for &b in self.incoming(self.dom(f)) {
            let fb = self.compose_unchecked(f, b);
            for &a in self.outgoing(self.cod(f)) {
                ideal.insert(self.compose_unchecked(a, fb));
            }
        }
        ideal
    }

    pub fn is_idempotent_ideal(&self, ideal: &FixedBitSet) -> bool {
        ideal.ones().all(|h| {
            let (a, b) = (self.dom(h), self.cod(h));
            self.objects().any(|c| {
                self.hom(a, c).iter().any(|&g| {
                    ideal.contains(g)
                        && self
                            .hom(c, b)
                            .iter()
                            .any(|&f| ideal.contains(f) && self.compose_unchecked(f, g) == h)
                })
            })
        })
    }

    /// All idempotent two-sided ideals. Ideals are enumerated as unions of
    /// principal ideals (the down-sets of the divisibility preorder) and then
    /// filtered by idempotency.
    pub fn enumerate_levels(&self, budget: usize) -> Result<Vec<Level>> {
        if self.morphisms.len() > budget {
            return Err(CategoryError::BudgetExceeded {
                what: "morphisms for level enumeration".into(),
                needed: self.morphisms.len(),
                budget,
            });
        }
        const IDEAL_LIMIT: usize = 1 << 20;
        let principals: Vec<FixedBitSet> = self.morphism_ids().map(|f| self.principal_ideal(f)).collect();
        let ideals = union_closure(
            FixedBitSet::with_capacity(self.morphisms.len()),
            &principals,
            IDEAL_LIMIT,
        )
        .ok_or_else(|| CategoryError::BudgetExceeded {
            what: "two-sided ideals".into(),
            needed: IDEAL_LIMIT + 1,
            budget: IDEAL_LIMIT,
        })?;

        let mut levels: Vec<(FixedBitSet, Option<Vec<ObjId>>)> = ideals
            .into_iter()
            .filter(|i| self.is_idempotent_ideal(i))
            .map(|ideal| {
                let objs: Vec<ObjId> = self
                    .objects()
                    .filter(|&c| ideal.contains(self.identities[c]))
                    .collect();
                let mut generated = FixedBitSet::with_capacity(self.morphisms.len());
                for &c in &objs {
                    generated.union_with(&principals[self.identities[c]]);
                }
                let sub = (generated == ideal).then_some(objs);
                (ideal, sub)
            })
            .collect();
        levels.sort_by(|(a, _), (b, _)| {
            a.count_ones(..)
                .cmp(&b.count_ones(..))
                .then_with(|| a.ones().cmp(b.ones()))
        });

        // level é: the largest full-subcategory level whose maps are all monic
        let etendue: Vec<usize> = levels
            .iter()
            .enumerate()
            .filter(|(_, (_, sub))| {
                sub.as_ref().is_some_and(|objs| {
                    objs.iter().all(|&a| {
                        objs.iter()
                            .all(|&b| self.hom(a, b).iter().all(|&f| self.is_mono(f)))
                    })
                })
            })
            .map(|(k, _)| k)
            .collect();
        let largest = etendue
            .iter()
            .copied()
            .find(|&k| etendue.iter().all(|&j| levels[j].0.is_subset(&levels[k].0)));

        Ok(levels
            .into_iter()
            .enumerate()
            .map(|(k, (ideal, full_subcategory))| Level {
                ideal: ideal.ones().collect(),
                full_subcategory,
                level_e: Some(k) == largest,
            })
            .collect())
    }
}

/// All unions of subsets of `generators`, starting from `start`; `None` if
/// more than `limit` distinct sets arise.
pub(crate) fn union_closure(
    start: FixedBitSet,
    generators: &[FixedBitSet],
    limit: usize,
) -> Option<Vec<FixedBitSet>> {
    let mut seen = std::collections::HashSet::new();
    let mut queue = vec![start.clone()];
    seen.insert(start);
    while let Some(set) = queue.pop() {
        for g in generators {
            if g.is_subset(&set) {
                continue;
            }
            let mut next = set.clone();
            next.union_with(g);
            if seen.insert(next.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push(next);
            }
        }
    }
    let mut all: Vec<FixedBitSet> = seen.into_iter().collect();
    all.sort_by(|a, b| a.count_ones(..).cmp(&b.count_ones(..)).then_with(|| a.ones().cmp(b.ones())));
    Some(all)
}

/// Finds a directed cycle; returns the edge labels along it.
fn find_cycle<L: Copy>(edges: &[Vec<(usize, L)>]) -> Option<Vec<L>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = edges.len();
    let mut mark = vec![Mark::New; n];
    // iterative DFS keeping the path of (node, label-into-node)
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        let mut path_labels: Vec<L> = Vec::new();
        mark[root] = Mark::Active;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < edges[v].len() {
                let (w, label) = edges[v][*next];
                *next += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                        path_labels.push(label);
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(u, _)| u == w).unwrap();
                        let mut cycle: Vec<L> = path_labels[start..].to_vec();
                        cycle.push(label);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
                path_labels.pop();
            }
        }
    }
    None
}
