//! Figures of a presheaf: minimal and preterminal elements, strong regularity,
//! the site of minimal figures, skeleta, dimension and depth.

use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext::ExtNat;
use crate::fincat::{CategoryError, FinCategory, MorId, ObjId, Subcategory};
use crate::logic::{ibd_sieve_char, non_iso_chain_lengths, Formula, Forcing, LogicError};
use crate::presheaf::{elements_category, Presheaf, PresheafError, Subpresheaf};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("theorem violation (this is a bug): {0}")]
    TheoremViolation(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Presheaf(#[from] PresheafError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

/// An element together with its stage.
pub type Figure = (ObjId, usize);

pub fn figure_name(x: &Presheaf, (c, e): Figure) -> String {
    format!("{}@{}", x.name(c, e), x.base().object_name(c))
}

/// A yes/no answer with a counterexample attached to every "no".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    pub witness: Option<String>,
}

impl Check {
    fn yes() -> Self {
        Check {
            holds: true,
            witness: None,
        }
    }

    fn no(witness: String) -> Self {
        Check {
            holds: false,
            witness: Some(witness),
        }
    }
}

/// Every `f: C -> D` and `y` with `y·f = x` has `f` monic.
pub fn is_minimal_element(x: &Presheaf, (c, e): Figure) -> bool {
    let cat = x.base();
    cat.outgoing(c).iter().all(|&f| {
        cat.is_mono(f) || (0..x.size(cat.cod(f))).all(|y| x.act(f, y) != e)
    })
}

/// Parallel morphisms into the stage are told apart by acting on the element.
pub fn preterminal_failure(x: &Presheaf, (c, e): Figure) -> Option<(MorId, MorId)> {
    let cat = x.base();
    for b in cat.objects() {
        let hom = cat.hom(b, c);
        for (i, &g) in hom.iter().enumerate() {
            for &h in &hom[i + 1..] {
                if x.act(g, e) == x.act(h, e) {
                    return Some((g, h));
                }
            }
        }
    }
    None
}

pub fn is_preterminal_element(x: &Presheaf, figure: Figure) -> bool {
    preterminal_failure(x, figure).is_none()
}

pub fn minimal_elements(x: &Presheaf) -> Vec<Figure> {
    x.objects_elements().filter(|&fig| is_minimal_element(x, fig)).collect()
}

pub fn preterminal_elements(x: &Presheaf) -> Vec<Figure> {
    x.objects_elements().filter(|&fig| is_preterminal_element(x, fig)).collect()
}

/// Monic maps of the category of elements into minimal figures have minimal domain.
pub fn strong_regularity(x: &Presheaf) -> Result<Check> {
    let el = elements_category(x)?;
    let minimal: Vec<bool> = el.objects.iter().map(|&fig| is_minimal_element(x, fig)).collect();
    let cat = &el.category;
    for m in cat.morphism_ids() {
        let (d, c) = (cat.dom(m), cat.cod(m));
        if minimal[c] && !minimal[d] && cat.is_mono(m) {
            return Ok(Check::no(format!(
                "monic {} from non-minimal {} into minimal {}",
                cat.morphism_name(m),
                cat.object_name(d),
                cat.object_name(c)
            )));
        }
    }
    Ok(Check::yes())
}

pub fn is_strongly_regular(x: &Presheaf) -> Result<bool> {
    Ok(strong_regularity(x)?.holds)
}

/// Every minimal figure is preterminal.
pub fn non_singularity(x: &Presheaf) -> Check {
    let cat = x.base();
    for fig in minimal_elements(x) {
        if let Some((g, h)) = preterminal_failure(x, fig) {
            return Check::no(format!(
                "minimal {} is not preterminal: {} and {} act equally",
                figure_name(x, fig),
                cat.morphism_name(g),
                cat.morphism_name(h)
            ));
        }
    }
    Check::yes()
}

pub fn is_non_singular(x: &Presheaf) -> bool {
    non_singularity(x).holds
}

/// The full subcategory of the category of elements on the minimal figures.
#[derive(Debug, Clone)]
pub struct MinSite {
    pub site: Arc<FinCategory>,
    /// Figure of the parent presheaf behind each object of `site`.
    pub labels: Vec<Figure>,
    pub parent: Arc<Presheaf>,
    /// The site is a preorder.
    pub localic: bool,
}

pub fn min_site(x: &Arc<Presheaf>) -> Result<MinSite> {
    let el = elements_category(x)?;
    let keep: Vec<ObjId> = el
        .objects
        .iter()
        .enumerate()
        .filter(|&(_, &fig)| is_minimal_element(x, fig))
        .map(|(k, _)| k)
        .collect();
    let Subcategory { category, objects, .. } = el.category.full_subcategory(&keep)?;
    if let Some(f) = category.morphism_ids().find(|&f| !category.is_mono(f)) {
        return Err(GeometryError::InvariantViolation(format!(
            "site of minimal figures has the non-monic map {}",
            category.morphism_name(f)
        )));
    }
    let localic = category.is_preorder();
    Ok(MinSite {
        labels: objects.iter().map(|&k| el.objects[k]).collect(),
        site: Arc::new(category),
        parent: x.clone(),
        localic,
    })
}

// ---- skeleta and dimension ----

fn heights(cat: &FinCategory) -> Result<Vec<usize>> {
    cat.objects()
        .map(|c| cat.height(c).map_err(GeometryError::from))
        .collect()
}

fn within(h: usize, n: ExtNat) -> bool {
    ExtNat::Finite(h) <= n
}

/// Elements `x = y·f` with `f` factoring through an object of height `≤ n`.
pub fn skeleton(x: &Arc<Presheaf>, n: ExtNat) -> Result<Subpresheaf> {
    let cat = x.base();
    let h = heights(cat)?;
    // morphisms that factor through a low object
    let mut factors = FixedBitSet::with_capacity(cat.morphism_count());
    for a in cat.morphism_ids() {
        if within(h[cat.cod(a)], n) {
            for &b in cat.outgoing(cat.cod(a)) {
                factors.insert(cat.compose_unchecked(b, a));
            }
        }
    }
    let mut carrier = FixedBitSet::with_capacity(x.total());
    for (d, e) in x.objects_elements() {
        let hit = cat.outgoing(d).iter().any(|&f| {
            factors.contains(f) && (0..x.size(cat.cod(f))).any(|y| x.act(f, y) == e)
        });
        carrier.set(x.global(d, e), hit);
    }
    Ok(Subpresheaf::new(x, carrier)?)
}

/// Elements `x = z·g` with `g` a strong epi onto an object of height `≤ n`.
/// Requires strong-epi/mono factorization in the base.
pub fn skeleton_strong_epi(x: &Arc<Presheaf>, n: ExtNat) -> Result<Subpresheaf> {
    let cat = x.base();
    if !cat.check_hypotheses().strong_epi_mono_factorization {
        return Err(GeometryError::HypothesisFailed(
            "base lacks strong-epi/mono factorization".into(),
        ));
    }
    let h = heights(cat)?;
    let mut carrier = FixedBitSet::with_capacity(x.total());
    for (d, e) in x.objects_elements() {
        let hit = cat.outgoing(d).iter().any(|&g| {
            let c = cat.cod(g);
            within(h[c], n) && cat.is_strong_epi(g) && (0..x.size(c)).any(|z| x.act(g, z) == e)
        });
        carrier.set(x.global(d, e), hit);
    }
    Ok(Subpresheaf::new(x, carrier)?)
}

/// Least `n` with `Sk_n X = X`; `-inf` exactly for the empty presheaf.
pub fn dim(x: &Arc<Presheaf>) -> Result<ExtNat> {
    if x.is_empty() {
        return Ok(ExtNat::NegInf);
    }
    let top = heights(x.base())?.into_iter().max().unwrap_or(0);
    for n in 0..=top {
        if skeleton(x, ExtNat::Finite(n))?.is_top() {
            return Ok(ExtNat::Finite(n));
        }
    }
    Err(GeometryError::InvariantViolation(
        "skeleton at the largest height is not everything".into(),
    ))
}

/// Least `n` such that the site satisfies the bounded-depth sentence of
/// depth `n`, read off chain lengths and confirmed by forcing.
pub fn site_depth(site: &Arc<FinCategory>) -> Result<ExtNat> {
    if site.object_count() == 0 {
        return Ok(ExtNat::NegInf);
    }
    let longest = non_iso_chain_lengths(site).into_iter().max().unwrap_or(ExtNat::Finite(0));
    let ExtNat::Finite(n) = longest else {
        return Err(GeometryError::InvariantViolation(
            "unbounded chain of non-invertible maps in a site of minimal figures".into(),
        ));
    };
    let forcing = Forcing::new(site)?;
    let at = forcing.satisfies(&Formula::ibd(ExtNat::Finite(n)))?;
    let below = n == 0 || !forcing.satisfies(&Formula::ibd(ExtNat::Finite(n - 1)))?;
    if !(at && below) {
        return Err(GeometryError::InvariantViolation(format!(
            "forcing disagrees with chain lengths at depth {n}"
        )));
    }
    Ok(ExtNat::Finite(n))
}

pub fn depth(x: &Arc<Presheaf>) -> Result<ExtNat> {
    site_depth(&min_site(x)?.site)
}

/// A strong epi `e: C -> D` and a minimal figure `(y, D)` with `y·e = x`.
pub fn minimal_cover(x: &Presheaf, (c, e): Figure) -> Result<(MorId, Figure)> {
    x.check_element(c, e)?;
    let cat = x.base();
    let report = cat.check_hypotheses();
    if !report.strong_epi_mono_factorization {
        return Err(GeometryError::HypothesisFailed(
            "base lacks strong-epi/mono factorization".into(),
        ));
    }
    if is_minimal_element(x, (c, e)) {
        return Ok((cat.identity(c), (c, e)));
    }
    for &g in cat.outgoing(c) {
        if !cat.is_strong_epi(g) {
            continue;
        }
        let d = cat.cod(g);
        if let Some(y) = (0..x.size(d)).find(|&y| x.act(g, y) == e && is_minimal_element(x, (d, y))) {
            return Ok((g, (d, y)));
        }
    }
    if report.well_founded {
        Err(GeometryError::TheoremViolation(format!(
            "{} has no minimal cover",
            figure_name(x, (c, e))
        )))
    } else {
        Err(GeometryError::HypothesisFailed("base is not well-founded".into()))
    }
}

// ---- the dimension theorem ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub n: usize,
    pub dim_le_n: bool,
    pub ibd_n: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremStatus {
    Equivalent,
    OneWayOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub dim: ExtNat,
    pub depth: ExtNat,
    pub strongly_regular: bool,
    pub non_singular: bool,
    pub localic: bool,
    pub etendue: bool,
    pub table: Vec<TheoremRow>,
    pub witnesses: Vec<String>,
}

impl DimensionReport {
    /// `Equivalent` when `dim X ≤ n` and the depth-`n` sentence agree on every row.
    pub fn theorem_status(&self) -> TheoremStatus {
        if self.table.iter().all(|r| r.dim_le_n == r.ibd_n) {
            TheoremStatus::Equivalent
        } else {
            TheoremStatus::OneWayOnly
        }
    }
}

/// Tabulates `dim X ≤ n` against the depth-`n` sentence on the site of
/// minimal figures for `n ≤ n_max`, and checks every implication that the
/// hypotheses on the base and on `X` guarantee.
pub fn verify_dimension_theorem(x: &Arc<Presheaf>, n_max: Option<usize>) -> Result<DimensionReport> {
    let cat = x.base();
    let hyp = cat.check_hypotheses();
    if !hyp.strong_epi_mono_factorization || !hyp.well_founded {
        return Err(GeometryError::HypothesisFailed(
            "the base needs strong-epi/mono factorization and well-foundedness".into(),
        ));
    }
    let ms = min_site(x)?;
    let sr = strong_regularity(x)?;
    let ns = non_singularity(x);
    let d = dim(x)?;
    let dp = site_depth(&ms.site)?;
    let h = heights(cat)?;
    let n_max = n_max.unwrap_or(ms.site.object_count() + 1);

    let mut table = Vec::with_capacity(n_max + 1);
    let mut witnesses: Vec<String> = sr.witness.iter().chain(&ns.witness).cloned().collect();
    let violation = |msg: String| Err(GeometryError::TheoremViolation(msg));
    for n in 0..=n_max {
        let level = ExtNat::Finite(n);
        let dim_le_n = skeleton(x, level)?.is_top();
        let ibd_n = ibd_sieve_char(&ms.site, level).is_all();
        let heights_le_n = ms.labels.iter().all(|&(c, _)| h[c] <= n);
        if dim_le_n != (d <= level) {
            return violation(format!("skeleton at {n} disagrees with dim {d}"));
        }
        if dim_le_n && !ibd_n {
            return violation(format!("dim ≤ {n} but the depth-{n} sentence fails"));
        }
        if heights_le_n && !ibd_n {
            return violation(format!("minimal figures have height ≤ {n} but the depth-{n} sentence fails"));
        }
        if sr.holds && ibd_n && !(dim_le_n && heights_le_n) {
            return violation(format!("strongly regular, depth-{n} sentence holds, but dim > {n}"));
        }
        if ibd_n && !dim_le_n {
            witnesses.push(format!("n = {n}: the depth-{n} sentence holds but dim > {n}"));
        }
        table.push(TheoremRow { n, dim_le_n, ibd_n });
    }
    if dp > d || (sr.holds && dp != d) {
        return violation(format!("depth {dp} against dim {d}"));
    }
    Ok(DimensionReport {
        dim: d,
        depth: dp,
        strongly_regular: sr.holds,
        non_singular: ns.holds,
        localic: ms.localic,
        etendue: true,
        table,
        witnesses,
    })
}

/// The full subcategory of minimal objects, checked to contain every
/// full subcategory whose maps are all monic.
pub fn level_e_site(cat: &FinCategory) -> Result<Subcategory> {
    let hyp = cat.check_hypotheses();
    if !hyp.split_epi_mono_factorization || !hyp.acc {
        return Err(GeometryError::HypothesisFailed(
            "the base needs split-epi/mono factorization and ACC".into(),
        ));
    }
    // a non-minimal object with a non-monic endomorphism lies in no all-monic
    // full subcategory
    for b in cat.objects() {
        if cat.is_minimal_object(b)? {
            continue;
        }
        if cat.hom(b, b).iter().all(|&f| cat.is_mono(f)) {
            return Err(GeometryError::InvariantViolation(format!(
                "{} is not minimal yet has only monic endomorphisms",
                cat.object_name(b)
            )));
        }
    }
    Ok(cat.min_full_subcategory()?)
}
