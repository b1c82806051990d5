//! Generators for the standard sites and for the example presheaves.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::fincat::{CategoryError, FinCategory, MorId, Morphism, ObjId};
use crate::presheaf::{self, Presheaf, PresheafError, PresheafMap, Subpresheaf};

/// Largest truncation of Δ built without an explicit override.
pub const DELTA_MAX: usize = 6;
/// Largest truncation of the category of finite non-empty sets built without an override.
pub const FINSET_MAX: usize = 4;

#[derive(Debug, Error)]
pub enum SiteError {
    #[error("budget exceeded: {what} {requested} > {limit}")]
    BudgetExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
    #[error("example {example} is incompatible with this base: {reason}")]
    IncompatibleBase { example: String, reason: String },
    #[error("unknown site or example {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Presheaf(#[from] PresheafError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    Delta,
    Finset,
}

/// A generated site: `delta:K` or `finset:K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteSpec {
    pub kind: SiteKind,
    pub max: usize,
}

impl SiteSpec {
    pub fn parse(text: &str) -> Option<SiteSpec> {
        let (kind, max) = text.split_once(':')?;
        let kind = match kind {
            "delta" => SiteKind::Delta,
            "finset" => SiteKind::Finset,
            _ => return None,
        };
        Some(SiteSpec {
            kind,
            max: max.parse().ok()?,
        })
    }

    pub fn build(&self) -> Result<FinCategory, SiteError> {
        match self.kind {
            SiteKind::Delta => build_delta(self.max),
            SiteKind::Finset => build_finset(self.max),
        }
    }
}

impl std::fmt::Display for SiteSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            SiteKind::Delta => write!(f, "delta:{}", self.max),
            SiteKind::Finset => write!(f, "finset:{}", self.max),
        }
    }
}

/// Concrete category of finite sets: objects are sizes, morphisms are given
/// by their value tables. Composition is function composition.
fn concrete(
    objects: Vec<String>,
    sizes: &[usize],
    maps: Vec<(ObjId, ObjId, Vec<u8>)>,
    name: impl Fn(ObjId, &[u8]) -> String,
) -> Result<FinCategory, SiteError> {
    let index: HashMap<(ObjId, ObjId, Vec<u8>), MorId> = maps
        .iter()
        .enumerate()
        .map(|(k, (d, c, v))| ((*d, *c, v.clone()), k))
        .collect();
    let identities = sizes
        .iter()
        .enumerate()
        .map(|(c, &s)| index[&(c, c, (0..s as u8).collect::<Vec<_>>())])
        .collect();
    let morphisms = maps
        .iter()
        .map(|(d, c, v)| Morphism {
            name: name(*c, v),
            dom: *d,
            cod: *c,
        })
        .collect();
    Ok(FinCategory::from_table(objects, morphisms, identities, |g, f| {
        let (d, _, fv) = &maps[f];
        let (_, c, gv) = &maps[g];
        let composite: Vec<u8> = fv.iter().map(|&i| gv[i as usize]).collect();
        index.get(&(*d, *c, composite)).copied()
    })?)
}

fn digits(values: &[u8]) -> String {
    values.iter().map(|v| char::from(b'0' + v)).collect()
}

/// All monotone maps `[0..len) -> [0..=top]`, in lexicographic order.
fn monotone_maps(len: usize, top: u8) -> Vec<Vec<u8>> {
    fn go(prefix: &mut Vec<u8>, len: usize, low: u8, top: u8, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for v in low..=top {
            prefix.push(v);
            go(prefix, len, v, top, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), len, 0, top, &mut out);
    out
}

/// All maps `[0..len) -> [0..size)`, in lexicographic order.
fn all_maps(len: usize, size: u8) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..size).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// The truncation of Δ on `[0], ..., [k]`. Morphism `d{n}:{values}` is the
/// monotone map into `[n]` with the listed values.
pub fn build_delta(k: usize) -> Result<FinCategory, SiteError> {
    build_delta_with_limit(k, DELTA_MAX)
}

pub fn build_delta_with_limit(k: usize, limit: usize) -> Result<FinCategory, SiteError> {
    if k > limit {
        return Err(SiteError::BudgetExceeded {
            what: "delta truncation",
            requested: k,
            limit,
        });
    }
    let mut maps = Vec::new();
    for m in 0..=k {
        for n in 0..=k {
            for v in monotone_maps(m + 1, n as u8) {
                maps.push((m, n, v));
            }
        }
    }
    let sizes: Vec<usize> = (1..=k + 1).collect();
    concrete(
        (0..=k).map(|m| format!("[{m}]")).collect(),
        &sizes,
        maps,
        |cod, v| format!("d{cod}:{}", digits(v)),
    )
}

/// Finite non-empty sets of size `1..=k` and all functions; `f{n}:{values}`
/// names the function into the `n`-element set.
pub fn build_finset(k: usize) -> Result<FinCategory, SiteError> {
    build_finset_with_limit(k, FINSET_MAX)
}

pub fn build_finset_with_limit(k: usize, limit: usize) -> Result<FinCategory, SiteError> {
    if k > limit {
        return Err(SiteError::BudgetExceeded {
            what: "finset truncation",
            requested: k,
            limit,
        });
    }
    let mut maps = Vec::new();
    for m in 1..=k {
        for n in 1..=k {
            for v in all_maps(m, n as u8) {
                maps.push((m - 1, n - 1, v));
            }
        }
    }
    let sizes: Vec<usize> = (1..=k).collect();
    concrete(
        (1..=k).map(|m| m.to_string()).collect(),
        &sizes,
        maps,
        |cod, v| format!("f{}:{}", cod + 1, digits(v)),
    )
}

/// One-object category of the cyclic group of order `n`.
pub fn cyclic_group(n: usize) -> FinCategory {
    FinCategory::from_table(
        vec!["*".into()],
        (0..n)
            .map(|k| Morphism {
                name: format!("g{k}"),
                dom: 0,
                cod: 0,
            })
            .collect(),
        vec![0],
        |g, f| Some((g + f) % n),
    )
    .expect("group table is total")
}

/// The category `a ⇉ b` with two parallel non-identity arrows.
pub fn parallel_arrows() -> FinCategory {
    let morphisms = vec![
        Morphism { name: "id_a".into(), dom: 0, cod: 0 },
        Morphism { name: "id_b".into(), dom: 1, cod: 1 },
        Morphism { name: "u".into(), dom: 0, cod: 1 },
        Morphism { name: "v".into(), dom: 0, cod: 1 },
    ];
    FinCategory::from_table(vec!["a".into(), "b".into()], morphisms, vec![0, 1], |g, f| {
        if g <= 1 {
            Some(f)
        } else if f <= 1 {
            Some(g)
        } else {
            None
        }
    })
    .expect("parallel arrows table is total")
}

/// The monoid `{1, e}` with `e ∘ e = e`, as a one-object category.
pub fn idempotent_monoid() -> FinCategory {
    FinCategory::from_table(
        vec!["*".into()],
        vec![
            Morphism { name: "1".into(), dom: 0, cod: 0 },
            Morphism { name: "e".into(), dom: 0, cod: 0 },
        ],
        vec![0],
        |g, f| Some(g.max(f)),
    )
    .expect("monoid table is total")
}

pub fn terminal_category() -> FinCategory {
    cyclic_group(1)
}

pub fn empty_category() -> FinCategory {
    FinCategory::from_table(vec![], vec![], vec![], |_, _| None).expect("empty category")
}

// ---- example presheaves ----

/// The bundled example presheaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Example {
    /// The representable presheaf on the named object.
    Representable(String),
    /// Join of the images of the proper monos into the representable on `[n]`.
    Boundary(usize),
    /// One vertex with one loop: the two endpoints of the interval identified.
    LoopY,
    /// A triangle whose three edges are collapsed to a point.
    CollapsedZ,
}

impl Example {
    pub fn parse(text: &str) -> Result<Example, SiteError> {
        if let Some(obj) = text.strip_prefix("representable:") {
            return Ok(Example::Representable(obj.to_string()));
        }
        if let Some(n) = text.strip_prefix("boundary:") {
            return n
                .parse()
                .map(Example::Boundary)
                .map_err(|_| SiteError::Unknown(text.to_string()));
        }
        match text {
            "loop_Y" | "loop" => Ok(Example::LoopY),
            "collapsed_Z" | "collapsed" => Ok(Example::CollapsedZ),
            _ => Err(SiteError::Unknown(text.to_string())),
        }
    }
}

impl std::fmt::Display for Example {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Example::Representable(c) => write!(f, "representable:{c}"),
            Example::Boundary(n) => write!(f, "boundary:{n}"),
            Example::LoopY => f.write_str("loop_Y"),
            Example::CollapsedZ => f.write_str("collapsed_Z"),
        }
    }
}

fn delta_object(base: &FinCategory, n: usize, example: &Example) -> Result<ObjId, SiteError> {
    base.object_by_name(&format!("[{n}]"))
        .ok_or_else(|| SiteError::IncompatibleBase {
            example: example.to_string(),
            reason: format!("needs the object [{n}] of a truncation of Δ"),
        })
}

/// Global point of `x` picked by the element `v` at the terminal object `[0]`.
fn point(
    base: &Arc<FinCategory>,
    terminal: ObjId,
    target: &Arc<Presheaf>,
    v: usize,
) -> Result<PresheafMap, SiteError> {
    let one = Arc::new(Presheaf::terminal(base.clone()));
    let components = base
        .objects()
        .map(|d| {
            let bang = base.hom(d, terminal)[0];
            target.global(d, target.act(bang, v))
        })
        .collect();
    Ok(PresheafMap::new(one, target.clone(), components)?)
}

pub fn example(which: &Example, base: &Arc<FinCategory>) -> Result<Presheaf, SiteError> {
    match which {
        Example::Representable(name) => {
            let c = base.object_by_name(name).ok_or_else(|| SiteError::IncompatibleBase {
                example: which.to_string(),
                reason: format!("no object named {name}"),
            })?;
            Ok(presheaf::yoneda(base, c)?)
        }
        Example::Boundary(n) => {
            let top = delta_object(base, *n, which)?;
            Ok(boundary(base, top)?.to_presheaf())
        }
        Example::LoopY => {
            let v = delta_object(base, 0, which)?;
            let e = delta_object(base, 1, which)?;
            let interval = Arc::new(presheaf::yoneda(base, e)?);
            // the two vertices of the interval are its elements at [0]
            let p = point(base, v, &interval, 0)?;
            let q = point(base, v, &interval, 1)?;
            let (y, _) = presheaf::coequalizer(&p, &q)?;
            Ok(y)
        }
        Example::CollapsedZ => {
            let t = delta_object(base, 2, which)?;
            let (_, inclusion) = boundary(base, t)?.to_presheaf_with_inclusion();
            let edges = inclusion.source.clone();
            let one = Arc::new(Presheaf::terminal(base.clone()));
            // the terminal presheaf has exactly one element at every stage
            let collapse = PresheafMap::new(
                edges.clone(),
                one.clone(),
                edges.objects_elements().map(|(d, _)| one.global(d, 0)).collect(),
            )?;
            let (z, _, _) = presheaf::pushout(&collapse, &inclusion)?;
            Ok(z)
        }
    }
}

/// Join of the images of the non-invertible monos into the representable on `top`.
pub fn boundary(base: &Arc<FinCategory>, top: ObjId) -> Result<Subpresheaf, SiteError> {
    let rep = Arc::new(presheaf::yoneda(base, top)?);
    let mut acc = Subpresheaf::bottom(&rep);
    for d in base.objects() {
        for (k, &f) in base.hom(d, top).iter().enumerate() {
            if base.is_mono(f) && !base.is_iso(f) {
                acc = acc.join(&presheaf::image_of_element(&rep, d, k)?)?;
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn delta_sizes() {
        assert_eq!(build_delta(0).unwrap().morphism_count(), 1);
        let d1 = build_delta(1).unwrap();
        assert_eq!((d1.object_count(), d1.morphism_count()), (2, 7));
        let d2 = build_delta(2).unwrap();
        let expected: usize = (0..=2)
            .flat_map(|m| (0..=2).map(move |n| binomial(m + n + 1, m + 1)))
            .sum();
        assert_eq!(expected, 31);
        assert_eq!((d2.object_count(), d2.morphism_count()), (3, 31));
        d2.check_axioms().unwrap();
        assert!(matches!(build_delta(7), Err(SiteError::BudgetExceeded { .. })));
        assert!(build_delta_with_limit(3, 2).is_err());
        assert_eq!(build_delta_with_limit(3, 3).unwrap().object_count(), 4);
    }

    #[test]
    fn delta_naming_and_composition() {
        let d2 = build_delta(2).unwrap();
        let f = d2.morphism_by_name("d1:001").unwrap();
        assert_eq!(d2.object_name(d2.dom(f)), "[2]");
        assert_eq!(d2.object_name(d2.cod(f)), "[1]");
        let s = d2.morphism_by_name("d0:00").unwrap();
        let delta1 = d2.morphism_by_name("d1:0").unwrap();
        assert_eq!(d2.morphism_name(d2.compose(delta1, s).unwrap()), "d1:00");
    }

    #[test]
    fn finset_sizes() {
        let f2 = build_finset(2).unwrap();
        assert_eq!((f2.object_count(), f2.morphism_count()), (2, 8));
        assert_eq!(build_finset(1).unwrap().morphism_count(), 1);
        build_finset(3).unwrap().check_axioms().unwrap();
        assert!(build_finset(5).is_err());
    }

    #[test]
    fn small_sites_satisfy_axioms() {
        for cat in [parallel_arrows(), idempotent_monoid(), cyclic_group(4), terminal_category(), empty_category()] {
            cat.check_axioms().unwrap();
        }
        let p = parallel_arrows();
        assert_eq!(p.hom(0, 1).len(), 2);
        assert!(!p.is_preorder());
    }

    #[test]
    fn site_spec_round_trip() {
        let spec = SiteSpec::parse("delta:3").unwrap();
        assert_eq!(spec.to_string(), "delta:3");
        assert!(SiteSpec::parse("simplex:3").is_none());
        assert_eq!(spec.build().unwrap().object_count(), 4);
    }
}
