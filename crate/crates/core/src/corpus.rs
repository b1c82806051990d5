//! The built-in example corpus and an exhaustive enumerator of small
//! presheaves, deduplicated up to isomorphism.

use std::collections::HashSet;
use std::sync::Arc;

use itertools::Itertools;

use crate::fincat::{FinCategory, MorId, ObjId};
use crate::presheaf::{coproduct, Presheaf, PresheafError};
use crate::sites::{example, Example, SiteError, SiteKind, SiteSpec};

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub site: String,
    pub presheaf: Arc<Presheaf>,
}

/// Representables over Δ_≤3 and 𝔽_≤2, the boundary of the 2-simplex, the
/// loop, the collapsed triangle, and the coproducts of all pairs of these
/// that live over the same site.
pub fn seed_corpus() -> Result<Vec<CorpusEntry>, SiteError> {
    let mut base = Vec::new();
    let sites = [
        SiteSpec { kind: SiteKind::Delta, max: 3 },
        SiteSpec { kind: SiteKind::Finset, max: 2 },
        SiteSpec { kind: SiteKind::Delta, max: 2 },
        SiteSpec { kind: SiteKind::Delta, max: 1 },
    ];
    let cats: Vec<Arc<FinCategory>> = sites
        .iter()
        .map(|s| s.build().map(Arc::new))
        .collect::<Result<_, _>>()?;
    for (spec, cat) in sites.iter().zip(&cats).take(2) {
        for c in cat.objects() {
            let which = Example::Representable(cat.object_name(c).to_string());
            base.push((which, spec, cat));
        }
    }
    base.push((Example::Boundary(2), &sites[2], &cats[2]));
    base.push((Example::CollapsedZ, &sites[2], &cats[2]));
    base.push((Example::LoopY, &sites[3], &cats[3]));

    let mut out = Vec::new();
    for (which, spec, cat) in &base {
        out.push(CorpusEntry {
            name: format!("{which}@{spec}"),
            site: spec.to_string(),
            presheaf: Arc::new(example(which, cat)?),
        });
    }
    let singles = out.clone();
    for (a, b) in singles.iter().tuple_combinations() {
        if a.site == b.site {
            let (sum, _, _) = coproduct(&a.presheaf, &b.presheaf)?;
            out.push(CorpusEntry {
                name: format!("{} + {}", a.name, b.name),
                site: a.site.clone(),
                presheaf: Arc::new(sum),
            });
        }
    }
    Ok(out)
}

/// Result of [`enumerate_presheaves`].
#[derive(Debug, Clone)]
pub struct Enumeration {
    /// One representative per isomorphism class, in discovery order.
    pub presheaves: Vec<Presheaf>,
    /// Labeled presheaves visited before deduplication.
    pub labeled: usize,
    /// The cap on isomorphism classes was reached.
    pub truncated: bool,
}

/// A generating set of morphisms under composition, and for every other
/// non-identity morphism a pair `(g, f)` of earlier morphisms with `h = g∘f`.
struct Generation {
    generators: Vec<MorId>,
    /// `derivation[h]` for morphisms reached by composition.
    derivation: Vec<Option<(MorId, MorId)>>,
    /// Morphisms in an order where every derivation refers backwards,
    /// paired with the number of generators needed to know them.
    order: Vec<(MorId, usize)>,
}

fn generation(cat: &FinCategory) -> Generation {
    let m = cat.morphism_count();
    // maps between objects of adjacent height that are monic or split epi
    // first (faces and degeneracies in Δ), endomorphisms last
    let heights: Vec<usize> = cat.objects().map(|c| cat.height(c).unwrap_or(0)).collect();
    let mut candidates: Vec<MorId> = cat.morphism_ids().filter(|&h| !cat.is_identity(h)).collect();
    candidates.sort_by_key(|&h| {
        let w = heights[cat.dom(h)].abs_diff(heights[cat.cod(h)]);
        (w == 0, w, !(cat.is_mono(h) || cat.is_split_epi(h)), h)
    });

    let mut known = vec![false; m];
    let mut derivation = vec![None; m];
    let mut order = Vec::new();
    let mut generators = Vec::new();
    for c in cat.objects() {
        known[cat.identity(c)] = true;
    }
    for h in candidates {
        if known[h] {
            continue;
        }
        generators.push(h);
        known[h] = true;
        order.push((h, generators.len()));
        // close under composition
        loop {
            let mut grew = false;
            for f in cat.morphism_ids() {
                if !known[f] {
                    continue;
                }
                for &g in cat.outgoing(cat.cod(f)) {
                    let gf = cat.compose_unchecked(g, f);
                    if known[g] && !known[gf] {
                        known[gf] = true;
                        derivation[gf] = Some((g, f));
                        order.push((gf, generators.len()));
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
    }
    Generation {
        generators,
        derivation,
        order,
    }
}

/// Receives the action tables of a complete assignment; returns false to stop.
type Emit<'a> = dyn FnMut(&[Option<Vec<usize>>]) -> bool + 'a;

struct Search<'a> {
    cat: &'a FinCategory,
    gen: &'a Generation,
    sizes: Vec<usize>,
    tables: Vec<Option<Vec<usize>>>,
    /// Composable pairs `(g, f)` to check once all three actions are known,
    /// grouped by the number of generators needed.
    checks: Vec<Vec<(MorId, MorId)>>,
}

impl Search<'_> {
    fn consistent(&self, level: usize) -> bool {
        self.checks[level].iter().all(|&(g, f)| {
            let gf = self.cat.compose_unchecked(g, f);
            let (tg, tf, tgf) = (
                self.tables[g].as_ref().unwrap(),
                self.tables[f].as_ref().unwrap(),
                self.tables[gf].as_ref().unwrap(),
            );
            tgf.iter().zip(tg).all(|(&a, &b)| a == tf[b])
        })
    }

    fn fill(&mut self, level: usize) {
        for &(h, need) in &self.gen.order {
            if need == level {
                if let Some((g, f)) = self.gen.derivation[h] {
                    let tg = self.tables[g].as_ref().unwrap();
                    let tf = self.tables[f].as_ref().unwrap();
                    let row = tg.iter().map(|&z| tf[z]).collect();
                    self.tables[h] = Some(row);
                }
            }
        }
    }

    fn clear(&mut self, level: usize) {
        for &(h, need) in &self.gen.order {
            if need >= level {
                self.tables[h] = None;
            }
        }
    }

    fn run(&mut self, k: usize, emit: &mut Emit<'_>) -> bool {
        if k == self.gen.generators.len() {
            return emit(&self.tables);
        }
        let h = self.gen.generators[k];
        let (d, c) = (self.cat.dom(h), self.cat.cod(h));
        let (from, to) = (self.sizes[c], self.sizes[d]);
        if from > 0 && to == 0 {
            return true;
        }
        let total = to.pow(from as u32);
        for code in 0..total {
            let mut row = Vec::with_capacity(from);
            let mut rest = code;
            for _ in 0..from {
                row.push(rest % to);
                rest /= to;
            }
            self.clear(k + 1);
            self.tables[h] = Some(row);
            self.fill(k + 1);
            if self.consistent(k + 1) && !self.run(k + 1, emit) {
                return false;
            }
        }
        self.clear(k + 1);
        true
    }
}

/// Canonical form of a labeled presheaf: the least relabeled action table
/// over all per-stage permutations.
fn canonical_form(cat: &FinCategory, sizes: &[usize], tables: &[Vec<usize>], gens: &[MorId]) -> Vec<usize> {
    let perms: Vec<Vec<Vec<usize>>> = sizes
        .iter()
        .map(|&s| (0..s).permutations(s).collect())
        .collect();
    let mut best: Option<Vec<usize>> = None;
    for choice in perms.iter().map(|p| p.iter()).multi_cartesian_product() {
        let mut code = sizes.to_vec();
        for &f in gens {
            let (d, c) = (cat.dom(f), cat.cod(f));
            let mut row = vec![0; sizes[c]];
            for (y, &x) in tables[f].iter().enumerate() {
                row[choice[c][y]] = choice[d][x];
            }
            code.extend(row);
        }
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
    }
    // the product over zero stages still yields one (empty) choice
    best.unwrap_or_else(|| sizes.to_vec())
}

/// Every presheaf on `cat` with at most `max_per_stage` elements at each
/// object, one per isomorphism class, stopping after `cap` classes.
pub fn enumerate_presheaves(
    cat: &Arc<FinCategory>,
    max_per_stage: usize,
    cap: usize,
) -> Result<Enumeration, PresheafError> {
    let gen = generation(cat);
    let n = cat.object_count();
    let mut need = vec![0; cat.morphism_count()];
    for &(h, k) in &gen.order {
        need[h] = k;
    }
    let mut checks = vec![Vec::new(); gen.generators.len() + 1];
    for f in cat.morphism_ids() {
        for &g in cat.outgoing(cat.cod(f)) {
            let gf = cat.compose_unchecked(g, f);
            let k = need[f].max(need[g]).max(need[gf]);
            checks[k].push((g, f));
        }
    }

    let mut seen = HashSet::new();
    let mut presheaves = Vec::new();
    let mut labeled = 0;
    let mut truncated = false;
    let mut failure = None;
    for sizes in (0..n).map(|_| 0..=max_per_stage).multi_cartesian_product() {
        if n == 0 && !presheaves.is_empty() {
            break;
        }
        let mut tables: Vec<Option<Vec<usize>>> = vec![None; cat.morphism_count()];
        for c in cat.objects() {
            tables[cat.identity(c)] = Some((0..sizes[c]).collect());
        }
        let mut search = Search {
            cat,
            gen: &gen,
            sizes: sizes.clone(),
            tables,
            checks: checks.clone(),
        };
        if !search.consistent(0) {
            continue;
        }
        search.fill(0);
        let mut emit = |tables: &[Option<Vec<usize>>]| {
            labeled += 1;
            let full: Vec<Vec<usize>> = tables.iter().map(|t| t.clone().expect("all actions known")).collect();
            let key = canonical_form(cat, &sizes, &full, &gen.generators);
            if seen.insert(key) {
                if presheaves.len() == cap {
                    truncated = true;
                    return false;
                }
                let names = sizes
                    .iter()
                    .map(|&s| (0..s).map(|k| format!("e{k}")).collect())
                    .collect();
                match Presheaf::new(cat.clone(), names, full) {
                    Ok(p) => presheaves.push(p),
                    Err(e) => {
                        failure = Some(e);
                        return false;
                    }
                }
            }
            true
        };
        let finished = search.run(0, &mut emit);
        if let Some(e) = failure {
            return Err(e);
        }
        if !finished {
            break;
        }
    }
    Ok(Enumeration {
        presheaves,
        labeled,
        truncated,
    })
}

/// Independent oracle for small cases: tries every action table for every
/// non-identity morphism and keeps the functorial ones.
pub fn enumerate_presheaves_naive(cat: &Arc<FinCategory>, max_per_stage: usize) -> Vec<Presheaf> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let all: Vec<MorId> = cat.morphism_ids().collect();
    for sizes in (0..cat.object_count()).map(|_| 0..=max_per_stage).multi_cartesian_product() {
        let choices: Vec<Vec<Vec<usize>>> = all
            .iter()
            .map(|&f| {
                let (d, c) = (cat.dom(f), cat.cod(f));
                if cat.is_identity(f) {
                    return vec![(0..sizes[c]).collect()];
                }
                (0..sizes[c]).map(|_| 0..sizes[d]).multi_cartesian_product().collect()
            })
            .collect();
        for tables in choices.iter().map(|c| c.iter().cloned()).multi_cartesian_product() {
            let names = sizes.iter().map(|&s| (0..s).map(|k| format!("e{k}")).collect()).collect();
            if let Ok(p) = Presheaf::new(cat.clone(), names, tables.clone()) {
                let gens: Vec<MorId> = all.clone();
                if seen.insert(canonical_form(cat, &sizes, &tables, &gens)) {
                    out.push(p);
                }
            }
        }
        if cat.object_count() == 0 {
            break;
        }
    }
    out
}

/// Stage sizes of a presheaf, for reporting.
pub fn stage_sizes(x: &Presheaf) -> Vec<usize> {
    x.base().objects().map(|c: ObjId| x.size(c)).collect()
}
