//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. Exits
//! non-zero when a criterion fails that is not listed in `KNOWN_FAILURES`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use etendue::corpus::{enumerate_presheaves, seed_corpus};
use etendue::geometry::{
    self, depth, dim, is_non_singular, is_strongly_regular, level_e_site, min_site, skeleton,
    skeleton_strong_epi, verify_dimension_theorem, TheoremStatus,
};
use etendue::logic::{
    ibd_sieve_char, widespread_by_definition, widespread_by_gamma, widespread_by_sections,
    Forcing, Formula,
};
use etendue::presheaf::{subobject_lattice, yoneda, Subpresheaf};
use etendue::sites::{self, build_delta, build_finset, Example};
use etendue::{ExtNat, FinCategory, Presheaf};

/// Criteria expected to fail: id, the detail suffix of the expected failure,
/// and the reason printed next to the FAIL line. Any other failure of a
/// listed criterion still counts as unexpected.
const KNOWN_FAILURES: &[(usize, &str, &str)] = &[(
    5,
    "min site is not a 2-chain",
    "the collapsed triangle has three parallel maps vertex -> triangle in its site of minimal \
     figures, so that site is not the two-element chain; its preorder reflection is",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
    }
}

type Check = fn(&Sweep) -> Outcome;

/// Presheaves over Δ_≤2 with at most 3 elements per stage, up to isomorphism.
struct Sweep {
    presheaves: Vec<Arc<Presheaf>>,
    truncated: bool,
}

fn sweep() -> Sweep {
    let cat = Arc::new(build_delta(2).unwrap());
    let e = enumerate_presheaves(&cat, 3, 5000).unwrap();
    Sweep {
        presheaves: e.presheaves.into_iter().map(Arc::new).collect(),
        truncated: e.truncated,
    }
}

fn arc(cat: FinCategory) -> Arc<FinCategory> {
    Arc::new(cat)
}

fn heights(_: &Sweep) -> Outcome {
    let delta = build_delta(4).unwrap();
    for c in delta.objects() {
        let m: usize = delta.object_name(c).trim_matches(['[', ']']).parse().unwrap();
        if delta.height(c).unwrap() != m {
            return fail(format!("height({}) != {m}", delta.object_name(c)));
        }
    }
    let finset = build_finset(4).unwrap();
    for c in finset.objects() {
        let m: usize = finset.object_name(c).parse().unwrap();
        if finset.height(c).unwrap() != m - 1 {
            return fail(format!("height({m}) != {}", m - 1));
        }
    }
    pass("Δ_≤4: height [m] = m; 𝔽_≤4: height m = m-1")
}

fn ibd_agreement(_: &Sweep) -> Outcome {
    let mut sites: Vec<(String, Arc<FinCategory>)> = vec![
        ("delta:3".into(), arc(build_delta(3).unwrap())),
        ("finset:2".into(), arc(build_finset(2).unwrap())),
        ("parallel arrows".into(), arc(sites::parallel_arrows())),
        ("Z/4".into(), arc(sites::cyclic_group(4))),
    ];
    for entry in seed_corpus().unwrap() {
        let ms = min_site(&entry.presheaf).unwrap();
        sites.push((format!("min site of {}", entry.name), ms.site));
    }
    let mut checked = 0;
    for (name, cat) in &sites {
        let forcing = Forcing::new(cat).unwrap();
        let mut levels = vec![ExtNat::NegInf, ExtNat::Inf];
        levels.extend((0..=cat.object_count() + 1).map(ExtNat::Finite));
        for n in levels {
            let forced = forcing.sentence_value(&Formula::ibd(n)).unwrap();
            if forced != ibd_sieve_char(cat, n) {
                return fail(format!("{name}: disagreement at n = {n}"));
            }
            checked += 1;
        }
    }
    pass(format!("{} sites, {checked} (site, n) pairs", sites.len()))
}

fn lattices() -> Vec<(&'static str, Vec<Subpresheaf>)> {
    let d1 = arc(build_delta(1).unwrap());
    let f2 = arc(build_finset(2).unwrap());
    let a = Arc::new(yoneda(&d1, d1.object_by_name("[1]").unwrap()).unwrap());
    let b = Arc::new(yoneda(&f2, f2.object_by_name("2").unwrap()).unwrap());
    vec![
        ("y[1] over Δ_≤1", subobject_lattice(&a, 1 << 16).unwrap()),
        ("y2 over 𝔽_≤2", subobject_lattice(&b, 1 << 16).unwrap()),
    ]
}

fn widespread(_: &Sweep) -> Outcome {
    let mut total = 0;
    for (name, lattice) in lattices() {
        for w in &lattice {
            let a = widespread_by_definition(&lattice, w).unwrap();
            let b = widespread_by_gamma(&lattice, w).unwrap();
            let c = widespread_by_sections(w).unwrap();
            if c != Some(a) || a != b {
                return fail(format!("{name}: definition {a}, gamma {b}, sections {c:?}"));
            }
            total += 1;
        }
    }
    pass(format!("{total} subobjects, three criteria agree"))
}

fn heyting(_: &Sweep) -> Outcome {
    let mut pairs = 0;
    for (name, lattice) in lattices() {
        for a in &lattice {
            for b in &lattice {
                // largest c with c ∧ a ≤ b, found by scanning the lattice
                let admissible: Vec<&Subpresheaf> = lattice
                    .iter()
                    .filter(|c| c.meet(a).unwrap().le(b).unwrap())
                    .collect();
                let max = admissible
                    .iter()
                    .find(|m| admissible.iter().all(|c| c.le(m).unwrap()))
                    .copied();
                let imp = a.implies(b).unwrap();
                if max != Some(&imp) {
                    return fail(format!("{name}: implication is not the adjunction maximum"));
                }
                let law = a.gamma(b).unwrap().is_top() == a.boundary().le(b).unwrap();
                if !law {
                    return fail(format!("{name}: boundary law fails"));
                }
                pairs += 1;
            }
        }
    }
    pass(format!("{pairs} pairs"))
}

fn loop_and_collapsed_triangle(_: &Sweep) -> Outcome {
    let d1 = arc(build_delta(1).unwrap());
    let d2 = arc(build_delta(2).unwrap());
    let y = Arc::new(sites::example(&Example::LoopY, &d1).unwrap());
    let z = Arc::new(sites::example(&Example::CollapsedZ, &d2).unwrap());
    let ys = min_site(&y).unwrap();
    let zs = min_site(&z).unwrap();

    let y_ok = is_strongly_regular(&y).unwrap() && !is_non_singular(&y) && !ys.site.is_preorder();
    let z_sr = is_strongly_regular(&z).unwrap();
    let (z_dim, z_depth) = (dim(&z).unwrap(), depth(&z).unwrap());
    let z_numbers = !z_sr && z_dim == ExtNat::Finite(2) && z_depth == ExtNat::Finite(1);
    let chain = zs.site.is_preorder()
        && zs.site.object_count() == 2
        && zs.site.morphism_count() == 3;
    // what the computation gives instead: two objects, three parallel maps
    // vertex -> triangle, no non-identity endomorphisms
    let computed = zs.site.object_count() == 2
        && zs.site.morphism_count() == 5
        && !zs.localic
        && zs.site.objects().any(|a| {
            zs.site.objects().any(|b| a != b && zs.site.hom(a, b).len() == 3)
        });

    let detail = format!(
        "loop_Y ok: {y_ok}; collapsed_Z sr {z_sr}, dim {z_dim}, depth {z_depth}; \
         collapsed_Z min site {} objects / {} morphisms, preorder {}",
        zs.site.object_count(),
        zs.site.morphism_count(),
        zs.site.is_preorder()
    );
    if y_ok && z_numbers && chain {
        pass(detail)
    } else if y_ok && z_numbers && computed {
        fail(format!("{detail}; min site is not a 2-chain"))
    } else {
        fail(format!("{detail}; unexpected structure"))
    }
}

fn theorem_sweep(s: &Sweep) -> Outcome {
    if s.truncated {
        return fail("enumeration hit the cap");
    }
    let mut regular = 0;
    for x in &s.presheaves {
        let report = match verify_dimension_theorem(x, Some(3)) {
            Ok(r) => r,
            Err(e) => return fail(format!("{e}")),
        };
        if report.depth > report.dim {
            return fail(format!("depth {} > dim {}", report.depth, report.dim));
        }
        if report.strongly_regular {
            regular += 1;
            if report.dim != report.depth || report.theorem_status() != TheoremStatus::Equivalent {
                return fail("strongly regular instance without the equivalence");
            }
        }
        // the table against dim and depth computed separately
        let d = dim(x).unwrap();
        let dp = geometry::depth(x).unwrap();
        for row in &report.table {
            let n = ExtNat::Finite(row.n);
            if row.dim_le_n != (d <= n) || row.ibd_n != (dp <= n) {
                return fail(format!("table row {} disagrees with dim {d} / depth {dp}", row.n));
            }
        }
    }
    // 8 classes: ∅; one vertex with 0, 1 or 2 collapsed triangles; the loop;
    // two vertices with 0 or 1 collapsed triangle; three vertices
    if s.presheaves.len() != 8 {
        return fail(format!("{} classes, expected 8", s.presheaves.len()));
    }
    pass(format!(
        "{} classes ({regular} strongly regular), zero violations",
        s.presheaves.len()
    ))
}

fn skeleton_equivalence(s: &Sweep) -> Outcome {
    let mut levels = vec![ExtNat::NegInf, ExtNat::Inf];
    levels.extend((0..=3).map(ExtNat::Finite));
    for x in &s.presheaves {
        for &n in &levels {
            let a = skeleton(x, n).unwrap();
            let b = skeleton_strong_epi(x, n).unwrap();
            if a != b {
                return fail(format!("skeleta differ at n = {n}"));
            }
        }
    }
    pass(format!("{} presheaves x {} levels", s.presheaves.len(), levels.len()))
}

fn levels_delta2(_: &Sweep) -> Outcome {
    let cat = build_delta(2).unwrap();
    let levels = cat.enumerate_levels(40).unwrap();
    let truncations: Vec<Option<Vec<usize>>> = (0..=3).map(|k| Some((0..k).collect())).collect();
    let mut found: Vec<Option<Vec<usize>>> = levels.iter().map(|l| l.full_subcategory.clone()).collect();
    found.sort();
    let e = level_e_site(&cat).unwrap();
    let e_names: Vec<&str> = e.objects.iter().map(|&c| cat.object_name(c)).collect();
    if levels.len() == 4 && found == truncations && e_names == ["[0]"] {
        pass("4 levels = truncations; level-e site {[0]}")
    } else {
        fail(format!("{} levels {found:?}; level-e site {e_names:?}", levels.len()))
    }
}

fn non_singular_implications(s: &Sweep) -> Outcome {
    let mut count = 0;
    for x in &s.presheaves {
        if is_non_singular(x) {
            count += 1;
            if !is_strongly_regular(x).unwrap() || !min_site(x).unwrap().localic {
                return fail("non-singular presheaf that is not strongly regular and localic");
            }
        }
    }
    pass(format!("{count} non-singular, zero violations"))
}

fn main() {
    let started = Instant::now();
    let s = sweep();
    let sweep_time = started.elapsed();
    let criteria: [(usize, &str, Check, Duration); 9] = [
        (1, "heights closed form", heights, Duration::from_secs(1)),
        (2, "depth sentence: forcing = chain characterization", ibd_agreement, Duration::from_secs(30)),
        (3, "widespread triple agreement", widespread, Duration::from_secs(10)),
        (4, "Heyting oracle and boundary law", heyting, Duration::from_secs(30)),
        (5, "loop and collapsed triangle", loop_and_collapsed_triangle, Duration::from_secs(60)),
        (6, "dimension theorem sweep", theorem_sweep, Duration::from_secs(600)),
        (7, "skeleton equivalence", skeleton_equivalence, Duration::from_secs(600)),
        (8, "levels of Δ_≤2", levels_delta2, Duration::from_secs(60)),
        (9, "non-singular implications", non_singular_implications, Duration::from_secs(600)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check, budget) in criteria {
        let t = Instant::now();
        let mut outcome = check(&s);
        let mut elapsed = t.elapsed();
        if id == 6 {
            elapsed += sweep_time;
        }
        if outcome.pass && elapsed > budget {
            outcome = fail(format!("{} but took {elapsed:?} > {budget:?}", outcome.detail));
        }
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {id} {name} [{elapsed:.2?}]: {}", outcome.detail);
        let known = KNOWN_FAILURES.iter().find(|(k, _, _)| *k == id);
        match known {
            Some((_, marker, why)) if !outcome.pass && outcome.detail.ends_with(marker) => {
                println!("     known: {why}")
            }
            Some(_) if outcome.pass => println!("     note: listed as a known failure but passed"),
            _ if !outcome.pass => unexpected.push(id),
            _ => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
