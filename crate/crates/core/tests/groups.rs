use minvec::cyclo::Phase;
use minvec::groups::{
    build_subgroups, extend_and_induce, heisenberg, intertwines, intertwines_residue,
    simple_character,
};
use minvec::padic::{MatrixApprox, ResidueMatrices};
use minvec::samples;

const BUDGET: u128 = 1 << 26;

#[test]
fn intertwining_is_exactly_j_cap_k_on_gl2_mod_9() {
    let d = samples::ramified_depth_one();
    let fam = build_subgroups(&d, BUDGET).unwrap();
    let sc = simple_character(&fam, 0, BUDGET).unwrap();
    let arena = ResidueMatrices::new(2, 3, 2).unwrap();
    let mut hits = 0;
    for g in arena.enumerate_gl() {
        let out = intertwines_residue(&fam, &sc.theta, &g, BUDGET).unwrap();
        assert_eq!(out.intertwines, fam.j_cap_k().contains(&g), "{g:?}");
        hits += u32::from(out.intertwines);
    }
    assert_eq!(hits, 486);
}

#[test]
fn prime_element_grading() {
    let d = samples::ramified_depth_one();
    let fam = build_subgroups(&d, BUDGET).unwrap();
    let sc = simple_character(&fam, 0, BUDGET).unwrap();
    let pi = fam.prime_element().clone();
    let ctx = d.ctx();
    let arena = *fam.arena();
    let lift = |x: &[u32]| MatrixApprox::from_residues(ctx, 2, x).unwrap();
    let inside: Vec<_> = fam
        .j_cap_k()
        .elements(BUDGET)
        .unwrap()
        .into_iter()
        .step_by(37)
        .collect();
    let outside: Vec<_> = arena
        .enumerate_gl()
        .filter(|g| !fam.j_cap_k().contains(g))
        .step_by(301)
        .collect();
    for k in [1u32, 2] {
        let pk = pi.pow(k).unwrap();
        for c in &inside {
            let g = pk.mul(&lift(c)).unwrap();
            assert!(
                intertwines(&fam, &sc.theta, &g, BUDGET)
                    .unwrap()
                    .intertwines
            );
        }
        for c in &outside {
            let g = pk.mul(&lift(c)).unwrap();
            assert!(
                !intertwines(&fam, &sc.theta, &g, BUDGET)
                    .unwrap()
                    .intertwines,
                "{c:?}"
            );
        }
    }
}

#[test]
fn simple_characters_of_all_shipped_data() {
    for d in [
        samples::ramified_depth_one(),
        samples::ramified_depth_three(),
        samples::unramified_depth_two(),
        samples::ramified_depth_one_twisted(),
    ] {
        let fam = build_subgroups(&d, BUDGET).unwrap();
        let sc = simple_character(&fam, 0, BUDGET).unwrap();
        let check = sc.theta.check_multiplicative(u128::MAX, 0);
        assert!(check.passed() && check.exhaustive);
        for x in fam
            .unit_filtration(d.depth() + 1)
            .unwrap()
            .elements(BUDGET)
            .unwrap()
        {
            assert_eq!(sc.theta.value(&x), Some(Phase::ZERO));
        }
    }
}

#[test]
fn heisenberg_dumps_are_deterministic() {
    let d = samples::unramified_depth_two();
    let run = || {
        let fam = build_subgroups(&d, BUDGET).unwrap();
        let sc = simple_character(&fam, 0, BUDGET).unwrap();
        let pol = heisenberg(&fam, &sc, BUDGET).unwrap();
        let eta = extend_and_induce(&fam, &sc, &pol, BUDGET).unwrap();
        (
            pol.b1.dump(BUDGET).unwrap(),
            eta.theta_ext.dump("theta_ext", BUDGET).unwrap(),
        )
    };
    let (a, b) = run();
    assert_eq!((a.clone(), b.clone()), run());
    assert!(a.starts_with("group B1 n=2 p=3 level=3 size=2187\n"));
    assert_eq!(b.lines().count(), 2188);
}
