use std::sync::{Arc, OnceLock};

use etendue::corpus::{enumerate_presheaves, seed_corpus};
use etendue::fincat::EpiClass;
use etendue::geometry::{
    depth, dim, is_minimal_element, is_non_singular, is_preterminal_element, is_strongly_regular,
    min_site, minimal_cover, skeleton, skeleton_strong_epi,
};
use etendue::logic::{
    ibd_sieve_char, internally_widespread, widespread_by_definition, widespread_by_gamma,
    widespread_by_sections, Environment, Forcing, Formula,
};
use etendue::presheaf::{
    all_maps, coequalizer, coproduct, elements_category, image_of_element, omega, pushout,
    subobject_lattice, ObjectSieve, PresheafMap, Subpresheaf,
};
use etendue::sites::{self, build_delta, build_finset};
use etendue::{ExtNat, FinCategory, Presheaf};
use proptest::prelude::*;

fn test_sites() -> &'static [Arc<FinCategory>] {
    static SITES: OnceLock<Vec<Arc<FinCategory>>> = OnceLock::new();
    SITES.get_or_init(|| {
        vec![
            Arc::new(build_delta(1).unwrap()),
            Arc::new(build_delta(2).unwrap()),
            Arc::new(build_finset(2).unwrap()),
            Arc::new(sites::parallel_arrows()),
            Arc::new(sites::cyclic_group(2)),
            Arc::new(sites::cyclic_group(3)),
            Arc::new(sites::idempotent_monoid()),
            Arc::new(sites::terminal_category()),
        ]
    })
}

/// Small presheaves grouped by base.
fn pool() -> &'static [Vec<Arc<Presheaf>>] {
    static POOL: OnceLock<Vec<Vec<Arc<Presheaf>>>> = OnceLock::new();
    POOL.get_or_init(|| {
        let s = test_sites();
        let mut groups: Vec<Vec<Arc<Presheaf>>> = [(0, 3), (1, 2), (2, 2), (3, 2), (4, 3), (6, 2)]
            .iter()
            .map(|&(i, max)| {
                let e = enumerate_presheaves(&s[i], max, 5000).unwrap();
                e.presheaves.into_iter().map(Arc::new).collect()
            })
            .collect();
        let corpus = seed_corpus().unwrap();
        let mut bases: Vec<Vec<Arc<Presheaf>>> = Vec::new();
        for entry in corpus {
            match bases.iter_mut().find(|g| Arc::ptr_eq(g[0].base(), entry.presheaf.base())) {
                Some(g) => g.push(entry.presheaf),
                None => bases.push(vec![entry.presheaf]),
            }
        }
        groups.extend(bases);
        groups
    })
}

fn flat_pool() -> Vec<Arc<Presheaf>> {
    pool().iter().flatten().cloned().collect()
}

fn pick<T: Clone>(items: &[T], seed: usize) -> T {
    items[seed % items.len()].clone()
}

/// The subpresheaf generated by a pseudo-random set of elements.
fn sub(x: &Arc<Presheaf>, seed: u64) -> Subpresheaf {
    let mut acc = Subpresheaf::bottom(x);
    for g in 0..x.total() {
        if seed.rotate_left((g as u32).wrapping_mul(7)) & 3 == 0 {
            let (c, k) = x.locate(g);
            acc = acc.join(&image_of_element(x, c, k).unwrap()).unwrap();
        }
    }
    acc
}

fn has_factorization(cat: &FinCategory) -> bool {
    let h = cat.check_hypotheses();
    h.strong_epi_mono_factorization && h.well_founded
}

// ---- lattice laws ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn heyting_adjunction(i in any::<usize>(), u in any::<u64>(), v in any::<u64>(), w in any::<u64>()) {
        let x = pick(&flat_pool(), i);
        let (u, v, w) = (sub(&x, u), sub(&x, v), sub(&x, w));
        prop_assert_eq!(v.le(&u.implies(&w).unwrap()).unwrap(), v.meet(&u).unwrap().le(&w).unwrap());
    }

    #[test]
    fn co_heyting_adjunction(i in any::<usize>(), a in any::<u64>(), b in any::<u64>(), v in any::<u64>()) {
        let x = pick(&flat_pool(), i);
        let (a, b, v) = (sub(&x, a), sub(&x, b), sub(&x, v));
        prop_assert_eq!(a.subtract(&b).unwrap().le(&v).unwrap(), a.le(&b.join(&v).unwrap()).unwrap());
    }

    #[test]
    fn boundary_law(i in any::<usize>(), a in any::<u64>(), b in any::<u64>()) {
        let x = pick(&flat_pool(), i);
        let (a, b) = (sub(&x, a), sub(&x, b));
        prop_assert_eq!(a.gamma(&b).unwrap().is_top(), a.boundary().le(&b).unwrap());
    }

    #[test]
    fn pseudo_complement_is_implication_into_bottom(i in any::<usize>(), a in any::<u64>()) {
        let x = pick(&flat_pool(), i);
        let a = sub(&x, a);
        prop_assert_eq!(a.not(), a.implies(&Subpresheaf::bottom(&x)).unwrap());
    }
}

/// For every element and subpresheaf W: x lies in γ(V, W) for every V iff
/// every restriction of x lands in W or is undone by a further restriction.
#[test]
fn gamma_membership_matches_the_restriction_criterion() {
    for x in flat_pool() {
        let Ok(lattice) = subobject_lattice(&x, 512) else {
            continue;
        };
        let cat = x.base();
        for w in &lattice {
            let gammas: Vec<Subpresheaf> = lattice.iter().map(|v| v.gamma(w).unwrap()).collect();
            for (d, e) in x.objects_elements() {
                let by_lattice = gammas.iter().all(|g| g.contains(d, e));
                let by_restriction = cat.incoming(d).iter().all(|&f| {
                    w.contains(cat.dom(f), x.act(f, e))
                        || cat.outgoing(d).iter().any(|&g| {
                            cat.cod(g) == cat.dom(f) && x.act(cat.compose_unchecked(f, g), e) == e
                        })
                });
                assert_eq!(by_lattice, by_restriction, "{} at {}", x.name(d, e), cat.object_name(d));
            }
        }
    }
}

#[test]
fn widespread_procedures_agree_on_representables() {
    for cat in test_sites() {
        for c in cat.objects() {
            let y = Arc::new(etendue::presheaf::yoneda(cat, c).unwrap());
            let lattice = subobject_lattice(&y, 4096).unwrap();
            for w in &lattice {
                let a = widespread_by_definition(&lattice, w).unwrap();
                assert_eq!(a, widespread_by_gamma(&lattice, w).unwrap());
                assert_eq!(Some(a), widespread_by_sections(w).unwrap());
            }
        }
    }
}

// ---- subobject classifier ----

#[test]
fn subobjects_correspond_to_maps_into_omega() {
    for group in pool() {
        let om = omega(group[0].base()).unwrap();
        for x in group.iter().filter(|x| x.total() <= 6) {
            let Ok(lattice) = subobject_lattice(x, 4096) else {
                continue;
            };
            let maps = all_maps(x, &om.presheaf, 1 << 16).unwrap();
            assert_eq!(lattice.len(), maps.len());
            for s in &lattice {
                assert_eq!(&om.classified(&om.characteristic(s).unwrap()), s);
            }
            for chi in &maps {
                let back = om.characteristic(&om.classified(chi)).unwrap();
                assert_eq!(back.components(), chi.components());
            }
        }
    }
}

#[test]
fn object_sieves_are_global_points_of_omega() {
    for cat in test_sites() {
        let om = omega(cat).unwrap();
        let one = Arc::new(Presheaf::terminal(cat.clone()));
        let points = all_maps(&one, &om.presheaf, 1 << 16).unwrap();
        assert_eq!(points.len(), ObjectSieve::enumerate_all(cat).unwrap().len());
    }
}

/// `U` is internally widespread iff its classifying point lands in the Higgs object.
#[test]
fn higgs_object_classifies_widespread_subterminals() {
    for cat in test_sites() {
        let forcing = Forcing::new(cat).unwrap();
        let higgs = forcing.higgs_object().unwrap();
        let om = forcing.omega();
        let one = Arc::new(Presheaf::terminal(cat.clone()));
        for u in ObjectSieve::enumerate_all(cat).unwrap() {
            let chi = om.characteristic(&u.as_subterminal(&one)).unwrap();
            let lands = chi.components().iter().all(|&g| {
                let (d, k) = om.presheaf.locate(g);
                higgs.contains(d, k)
            });
            assert_eq!(lands, internally_widespread(cat, &u), "{:?}", u.members());
        }
    }
}

// ---- forcing ----

#[derive(Debug, Clone)]
enum Ast {
    Bottom,
    Top,
    Var(bool),
    Const(usize),
    Ibd(usize),
    And(Box<Ast>, Box<Ast>),
    Or(Box<Ast>, Box<Ast>),
    Implies(Box<Ast>, Box<Ast>),
    Gamma(Box<Ast>, Box<Ast>),
    Forall(bool, Box<Ast>),
}

fn ast() -> impl Strategy<Value = Ast> {
    let leaf = prop_oneof![
        Just(Ast::Bottom),
        Just(Ast::Top),
        any::<bool>().prop_map(Ast::Var),
        (0usize..8).prop_map(Ast::Const),
        (0usize..3).prop_map(Ast::Ibd),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Implies(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Gamma(Box::new(a), Box::new(b))),
            (any::<bool>(), inner).prop_map(|(v, a)| Ast::Forall(v, Box::new(a))),
        ]
    })
}

fn var_name(v: bool) -> &'static str {
    if v {
        "x"
    } else {
        "y"
    }
}

fn formula(a: &Ast, cat: &FinCategory) -> Formula {
    let bin = |x: &Ast, y: &Ast| (formula(x, cat), formula(y, cat));
    match a {
        Ast::Bottom => Formula::Bottom,
        Ast::Top => Formula::Top,
        Ast::Var(v) => Formula::var(var_name(*v)),
        Ast::Const(k) => {
            let c = k % cat.object_count();
            Formula::Const(ObjectSieve::generated(cat, [c]).unwrap())
        }
        Ast::Ibd(n) => Formula::ibd(ExtNat::Finite(*n)),
        Ast::And(x, y) => {
            let (x, y) = bin(x, y);
            Formula::and(x, y)
        }
        Ast::Or(x, y) => {
            let (x, y) = bin(x, y);
            Formula::or(x, y)
        }
        Ast::Implies(x, y) => {
            let (x, y) = bin(x, y);
            Formula::implies(x, y)
        }
        Ast::Gamma(x, y) => {
            let (x, y) = bin(x, y);
            Formula::gamma(x, y)
        }
        Ast::Forall(v, body) => Formula::forall(var_name(*v), formula(body, cat)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// If D forces φ under an environment then so does every E → D under
    /// the pulled-back environment.
    #[test]
    fn forcing_is_monotone(site in 0usize..8, a in ast(), stage in any::<usize>(), seed in any::<u64>()) {
        let cat = &test_sites()[site];
        let forcing = Forcing::new(cat).unwrap();
        let phi = formula(&a, cat);
        let d = stage % cat.object_count();
        let sieves = &forcing.omega().sieves[d];
        let free = phi.free_variables();
        let bound: Vec<_> = free
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), sieves[(seed.rotate_left(i as u32 * 13) as usize) % sieves.len()].clone()))
            .collect();
        let mut env = Environment::new(d);
        for (v, s) in &bound {
            env = env.bind(v, s.clone()).unwrap();
        }
        if forcing.forces(&env, &phi).unwrap() {
            for &f in cat.incoming(d) {
                let mut pulled = Environment::new(cat.dom(f));
                for (v, s) in &bound {
                    pulled = pulled.bind(v, s.pullback(cat, f)).unwrap();
                }
                prop_assert!(forcing.forces(&pulled, &phi).unwrap());
            }
        }
    }

    #[test]
    fn parsed_rendering_round_trips(site in 0usize..8, a in ast()) {
        let cat = &test_sites()[site];
        let phi = formula(&a, cat);
        let reparsed = etendue::logic::parse_formula(&phi.render(cat), cat).unwrap();
        let forcing = Forcing::new(cat).unwrap();
        if phi.is_closed() {
            prop_assert_eq!(forcing.sentence_value(&phi).unwrap(), forcing.sentence_value(&reparsed).unwrap());
        }
    }
}

#[test]
fn depth_sentences_are_monotone_in_n() {
    for cat in test_sites() {
        for n in 0..=cat.object_count() + 1 {
            let a = ibd_sieve_char(cat, ExtNat::Finite(n));
            let b = ibd_sieve_char(cat, ExtNat::Finite(n + 1));
            assert!(a.is_subset(&b));
        }
    }
}

#[test]
fn groupoids_force_the_depth_zero_sentence() {
    for n in 1..=4 {
        let g = Arc::new(sites::cyclic_group(n));
        assert!(Forcing::new(&g).unwrap().satisfies(&Formula::ibd(ExtNat::Finite(0))).unwrap());
    }
}

// ---- finite categories ----

#[test]
fn morphism_flags_are_consistent() {
    for cat in test_sites() {
        for f in cat.morphism_ids() {
            let k = cat.classify_morphism(f).unwrap();
            assert!(!k.iso || (k.split_mono && k.split_epi));
            assert!(!k.split_epi || k.strong_epi);
            assert!(!k.strong_epi || k.epi);
            assert!(!k.split_mono || k.mono);
            assert_eq!(k.strong_epi, cat.is_strong_epi_audit(f));
            if cat.dom(f) == cat.cod(f) && k.mono {
                assert!(k.iso, "monic endomorphism {} is not invertible", cat.morphism_name(f));
            }
        }
    }
}

#[test]
fn factorizations_recompose() {
    for cat in test_sites() {
        let hyp = cat.check_hypotheses();
        for f in cat.morphism_ids() {
            for (mode, holds) in [
                (EpiClass::SplitEpi, hyp.split_epi_mono_factorization),
                (EpiClass::StrongEpi, hyp.strong_epi_mono_factorization),
            ] {
                let Ok((e, m)) = cat.factorize(f, mode) else {
                    assert!(!holds);
                    continue;
                };
                assert_eq!(cat.compose(m, e), Some(f));
                assert!(cat.is_mono(m));
                match mode {
                    EpiClass::SplitEpi => assert!(cat.is_split_epi(e)),
                    EpiClass::StrongEpi => assert!(cat.is_strong_epi(e)),
                }
            }
        }
    }
}

#[test]
fn heights_grow_along_monos() {
    for cat in test_sites() {
        for f in cat.morphism_ids() {
            if cat.is_mono(f) {
                assert!(cat.height(cat.dom(f)).unwrap() <= cat.height(cat.cod(f)).unwrap());
            }
        }
    }
}

// ---- colimits ----

fn same(a: &PresheafMap, b: &PresheafMap) -> bool {
    a.components() == b.components()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Maps out of the coequalizer are exactly the maps that coequalize.
    #[test]
    fn coequalizer_is_universal(g in any::<usize>(), i in any::<usize>(), j in any::<usize>(),
                                t in any::<usize>(), p in any::<usize>(), q in any::<usize>()) {
        let group: Vec<_> = pick(pool(), g).into_iter().filter(|x| x.total() <= 5).collect();
        prop_assume!(!group.is_empty());
        let (x, y, t) = (pick(&group, i), pick(&group, j), pick(&group, t));
        let maps = all_maps(&x, &y, 1 << 14).unwrap();
        prop_assume!(!maps.is_empty());
        let (p, q) = (pick(&maps, p), pick(&maps, q));
        let (_, proj) = coequalizer(&p, &q).unwrap();
        prop_assert!(same(&p.then(&proj).unwrap(), &q.then(&proj).unwrap()));
        let c = proj.target.clone();
        let outs = all_maps(&c, &t, 1 << 14).unwrap();
        for s in all_maps(&y, &t, 1 << 14).unwrap() {
            let coequalizes = same(&p.then(&s).unwrap(), &q.then(&s).unwrap());
            let factorizations = outs.iter().filter(|u| same(&proj.then(u).unwrap(), &s)).count();
            prop_assert_eq!(factorizations, usize::from(coequalizes));
        }
    }

    /// Maps out of a coproduct are pairs of maps.
    #[test]
    fn coproduct_is_universal(g in any::<usize>(), i in any::<usize>(), j in any::<usize>(), t in any::<usize>()) {
        let group: Vec<_> = pick(pool(), g).into_iter().filter(|x| x.total() <= 4).collect();
        prop_assume!(!group.is_empty());
        let (x, y, t) = (pick(&group, i), pick(&group, j), pick(&group, t));
        let (_, inl, inr) = coproduct(&x, &y).unwrap();
        let sum = inl.target.clone();
        let outs = all_maps(&sum, &t, 1 << 16).unwrap();
        let from_x = all_maps(&x, &t, 1 << 14).unwrap();
        let from_y = all_maps(&y, &t, 1 << 14).unwrap();
        prop_assert_eq!(outs.len(), from_x.len() * from_y.len());
        for a in &from_x {
            for b in &from_y {
                let n = outs
                    .iter()
                    .filter(|u| same(&inl.then(u).unwrap(), a) && same(&inr.then(u).unwrap(), b))
                    .count();
                prop_assert_eq!(n, 1);
            }
        }
    }

    #[test]
    fn pushout_square_commutes(g in any::<usize>(), i in any::<usize>(), j in any::<usize>(),
                               k in any::<usize>(), f in any::<usize>(), h in any::<usize>()) {
        let group: Vec<_> = pick(pool(), g).into_iter().filter(|x| x.total() <= 5).collect();
        prop_assume!(!group.is_empty());
        let (a, b, c) = (pick(&group, i), pick(&group, j), pick(&group, k));
        let ab = all_maps(&a, &b, 1 << 14).unwrap();
        let ac = all_maps(&a, &c, 1 << 14).unwrap();
        prop_assume!(!ab.is_empty() && !ac.is_empty());
        let (f, h) = (pick(&ab, f), pick(&ac, h));
        let (_, left, right) = pushout(&f, &h).unwrap();
        prop_assert!(same(&f.then(&left).unwrap(), &h.then(&right).unwrap()));
        // jointly surjective
        prop_assert!(left.image().join(&right.image()).unwrap().is_top());
    }
}

// ---- geometry ----

#[test]
fn preterminal_iff_minimal_and_parallel_pairs_coequalized() {
    for x in flat_pool() {
        let el = elements_category(&x).unwrap();
        let e = &el.category;
        for (obj, &(c, k)) in el.objects.iter().enumerate() {
            let minimal = e.is_minimal_object(obj).unwrap();
            assert_eq!(minimal, is_minimal_element(&x, (c, k)));
            let pairs_coequalized = e.objects().all(|b| {
                let hom = e.hom(b, obj);
                hom.iter().all(|&u| {
                    hom.iter().all(|&v| {
                        e.outgoing(obj)
                            .iter()
                            .any(|&f| e.compose(f, u) == e.compose(f, v))
                    })
                })
            });
            let at_most_one = e.objects().all(|b| e.hom(b, obj).len() <= 1);
            assert_eq!(is_preterminal_element(&x, (c, k)), at_most_one);
            assert_eq!(at_most_one, minimal && pairs_coequalized);
        }
    }
}

#[test]
fn non_singular_implies_strongly_regular_and_localic() {
    for x in flat_pool() {
        if !has_factorization(x.base()) {
            continue;
        }
        if is_non_singular(&x) {
            assert!(is_strongly_regular(&x).unwrap());
            assert!(min_site(&x).unwrap().localic);
        }
    }
}

#[test]
fn minimal_covers_compose() {
    for x in flat_pool() {
        let cat = x.base();
        if !has_factorization(cat) {
            continue;
        }
        for (c, k) in x.objects_elements() {
            let (e, (d, y)) = minimal_cover(&x, (c, k)).unwrap();
            assert_eq!((cat.dom(e), cat.cod(e)), (c, d));
            assert_eq!(x.act(e, y), k);
            assert!(cat.is_strong_epi(e));
            assert!(is_minimal_element(&x, (d, y)));
        }
    }
}

fn levels() -> Vec<ExtNat> {
    let mut v = vec![ExtNat::NegInf, ExtNat::Inf];
    v.extend((0..=4).map(ExtNat::Finite));
    v.sort();
    v
}

#[test]
fn skeleton_laws() {
    for x in flat_pool() {
        if !has_factorization(x.base()) {
            continue;
        }
        let d = dim(&x).unwrap();
        let sk: Vec<(ExtNat, Subpresheaf)> =
            levels().into_iter().map(|n| (n, skeleton(&x, n).unwrap())).collect();
        for w in sk.windows(2) {
            assert!(w[0].1.le(&w[1].1).unwrap());
        }
        for (n, s) in &sk {
            assert_eq!(s.is_top(), d <= *n);
            assert_eq!(s, &skeleton_strong_epi(&x, *n).unwrap());
            if *n == ExtNat::NegInf {
                assert!(s.is_bottom());
            }
        }
        // Sk_n (Sk_m X) = Sk_min(n,m) X
        for (m, sm) in &sk {
            let (_, inclusion) = sm.to_presheaf_with_inclusion();
            let y = inclusion.source.clone();
            for (n, snm) in &sk {
                let inner = skeleton(&y, *n).unwrap();
                let image: Vec<usize> = y
                    .objects_elements()
                    .filter(|&(c, k)| inner.contains(c, k))
                    .map(|(c, k)| x.global(c, inclusion.apply(c, k)))
                    .collect();
                let expected = if n <= m { snm } else { sm };
                let mut got: Vec<usize> = image;
                got.sort();
                let want: Vec<usize> = expected.carrier().ones().collect();
                assert_eq!(got, want, "Sk_{n} Sk_{m}");
            }
        }
    }
}

#[test]
fn depth_never_exceeds_dim() {
    for x in flat_pool() {
        if !has_factorization(x.base()) {
            continue;
        }
        let (d, dp) = (dim(&x).unwrap(), depth(&x).unwrap());
        assert!(dp <= d);
        if is_strongly_regular(&x).unwrap() {
            assert_eq!(dp, d);
        }
        assert_eq!(dp == ExtNat::NegInf, x.is_empty());
    }
}
