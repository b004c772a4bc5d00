//! Acceptance suite: one PASS or FAIL line per criterion.

use std::time::Instant;

use minvec::counting::{abelian_check, amplifier_exponent, enumerate_s, partition_count};
use minvec::cyclo::Phase;
use minvec::files::QueryFile;
use minvec::groups::{
    build_subgroups, build_support, extend_and_induce, heisenberg, intertwines_residue, rank_mod_p,
    simple_character, SupportOptions,
};
use minvec::orders::{check_approximation, HereditaryOrder, InductionDatum, K0};
use minvec::padic::PrecisionCtx;
use minvec::samples;
use minvec::testfunc::{
    concentration_check, concentration_near_half_depth, convolve_check, depth_report, make_omega,
    volume, ConvolutionMode, ConvolutionOptions,
};
use num_rational::Ratio;

const BUDGET: u128 = 1 << 26;

type Outcome = Result<String, String>;

fn ensure(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Thresholds of the `i`-th radical power from the shapes of the order
/// (`O` on and above the diagonal blocks, `pO` below) and of its radical
/// (`pO` on and below, `O` above), multiplied out as lattices.
fn radical_oracle(n: usize, e: usize, i: i64) -> Vec<i64> {
    let f = n / e;
    let blk = |r: usize| r / f;
    let order: Vec<i64> = (0..n * n)
        .map(|k| i64::from(blk(k / n) > blk(k % n)))
        .collect();
    let radical: Vec<i64> = (0..n * n)
        .map(|k| i64::from(blk(k / n) >= blk(k % n)))
        .collect();
    let product = |a: &[i64], b: &[i64]| -> Vec<i64> {
        (0..n * n)
            .map(|k| {
                (0..n)
                    .map(|t| a[k / n * n + t] + b[t * n + k % n])
                    .min()
                    .unwrap()
            })
            .collect()
    };
    let (q, r) = (i.div_euclid(e as i64), i.rem_euclid(e as i64));
    let mut acc = order.clone();
    for _ in 0..r {
        acc = product(&acc, &radical);
    }
    acc.iter().map(|t| t + q).collect()
}

fn filtration_laws() -> Outcome {
    let ctx = PrecisionCtx::new(3, 12).map_err(err)?;
    let mut cases = 0;
    for n in 2..=4usize {
        for e in (1..=n).filter(|e| n % e == 0) {
            let order = HereditaryOrder::new(n, e).map_err(err)?;
            let e_i = e as i64;
            for i in -2 * e_i..=2 * e_i {
                ensure(
                    order.thresholds(i) == radical_oracle(n, e, i),
                    format!("thresholds n={n} e={e} i={i}"),
                )?;
                for x in order.spanning_set(i, ctx) {
                    ensure(
                        order.contains(&x.shift(1), i + e_i).map_err(err)?,
                        format!("pB^{i} in B^{}", i + e_i),
                    )?;
                }
                for y in order.spanning_set(i + e_i, ctx) {
                    ensure(
                        order.contains(&y.shift(-1), i).map_err(err)?,
                        format!("B^{} in pB^{i}", i + e_i),
                    )?;
                }
                ensure(
                    check_approximation(&order, i, ctx).map_err(err)?.holds(),
                    format!("approximation n={n} e={e} i={i}"),
                )?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (n, e, i) cases"))
}

fn minimality() -> Outcome {
    for d in [
        samples::ramified_depth_one(),
        samples::ramified_depth_three(),
        samples::unramified_depth_two(),
    ] {
        ensure(d.is_minimal().map_err(err)?, "shipped datum not minimal")?;
        let v = d.order().valuation(d.beta()).map_err(err)?;
        ensure(
            d.k0(u128::MAX).map_err(err)? == K0::Exact(v),
            format!("k0 != v_A = {v}"),
        )?;
    }
    let sq = samples::ramified_square();
    ensure(
        !sq.minimality_report().map_err(err)?.is_minimal(),
        "Pi^-2 reported minimal",
    )?;
    let k0 = sq.k0(u128::MAX).map_err(err)?;
    ensure(k0 == K0::AtLeast(2), format!("k0(Pi^-2) = {k0}"))?;
    Ok("k0 = v_A on three data; Pi^-2 not minimal, k0 >= 2 > -2".into())
}

fn shipped_data() -> Vec<InductionDatum> {
    vec![
        samples::ramified_depth_one(),
        samples::ramified_depth_three(),
        samples::unramified_depth_two(),
        samples::ramified_depth_one_twisted(),
    ]
}

fn simple_characters() -> Outcome {
    let mut pairs = 0;
    for d in shipped_data() {
        let fam = build_subgroups(&d, BUDGET).map_err(err)?;
        let sc = simple_character(&fam, 0, BUDGET).map_err(err)?;
        let check = sc.theta.check_multiplicative(u128::MAX, 0);
        ensure(
            check.passed() && check.exhaustive,
            "theta not multiplicative",
        )?;
        pairs += check.pairs;
        let deep = fam
            .unit_filtration(d.depth() + 1)
            .ok_or("U_A(j+1) missing")?;
        for x in deep.elements(BUDGET).map_err(err)? {
            ensure(
                sc.theta.value(&x) == Some(Phase::ZERO),
                "theta nontrivial on U_A(j+1)",
            )?;
        }
    }
    Ok(format!("{pairs} pairs checked exhaustively"))
}

fn heisenberg_criterion() -> Outcome {
    let d = samples::unramified_depth_two();
    let fam = build_subgroups(&d, BUDGET).map_err(err)?;
    let sc = simple_character(&fam, 0, BUDGET).map_err(err)?;
    let pol = heisenberg(&fam, &sc, BUDGET).map_err(err)?;
    let dim = pol.dim();
    let p = pol.p;
    let alternating = (0..dim).all(|i| {
        pol.pairing[i][i] == 0 && (0..dim).all(|j| (pol.pairing[i][j] + pol.pairing[j][i]) % p == 0)
    });
    ensure(alternating, "pairing not alternating")?;
    ensure(rank_mod_p(&pol.pairing, p) == dim, "pairing degenerate")?;
    let eta = extend_and_induce(&fam, &sc, &pol, BUDGET).map_err(err)?;
    let index = fam.j1().size() / fam.h1().size();
    ensure(
        u128::from(eta.dim * eta.dim) == index,
        format!("dim eta = {}, index {index}", eta.dim),
    )?;
    ensure(eta.dim == 3, "dim eta != 3")?;
    ensure(eta.self_product == 1, "<eta, eta> != 1")?;
    ensure(
        eta.restriction_multiplicity == i128::from(eta.dim),
        "eta|H1 != dim * theta",
    )?;
    // eta on H1 is dim * theta pointwise
    for x in fam.h1().elements(BUDGET).map_err(err)? {
        let v = eta.value(&x).ok_or("H1 outside J1")?;
        let t = sc.theta.value(&x).ok_or("theta undefined")?;
        ensure(
            v.as_scaled_root() == Some((i128::from(eta.dim), t)),
            "eta(x) != dim theta(x)",
        )?;
    }
    Ok(format!("dim eta = 3, [J1:H1] = {index}, <eta,eta> = 1"))
}

fn intertwining() -> Outcome {
    let d = samples::ramified_depth_one();
    let fam = build_subgroups(&d, BUDGET).map_err(err)?;
    let sc = simple_character(&fam, 0, BUDGET).map_err(err)?;
    let (mut total, mut hits) = (0, 0);
    for g in fam.arena().enumerate_gl() {
        let out = intertwines_residue(&fam, &sc.theta, &g, BUDGET).map_err(err)?;
        ensure(
            out.intertwines == fam.j_cap_k().contains(&g),
            format!("exception at {g:?}"),
        )?;
        total += 1;
        hits += u32::from(out.intertwines);
    }
    Ok(format!(
        "{hits} of {total} elements intertwine, all in J cap K"
    ))
}

struct Support {
    n: usize,
    deviation: i64,
    near_half: bool,
}

fn test_functions(collected: &mut Vec<Support>) -> Outcome {
    let mut cases: Vec<(Vec<InductionDatum>, SupportOptions)> = [
        samples::ramified_depth_one(),
        samples::ramified_depth_three(),
        samples::unramified_depth_two(),
    ]
    .into_iter()
    .map(|d| (vec![d], SupportOptions::default()))
    .collect();
    cases.push((
        samples::parabolic_blocks(),
        SupportOptions {
            sample_pairs: 20_000,
            ..SupportOptions::default()
        },
    ));
    let mut modes = Vec::new();
    for (data, opts) in cases {
        let omega = make_omega(build_support(&data, opts).map_err(err)?);
        let vol = volume(omega.support()).map_err(err)?;
        let r = convolve_check(&omega, ConvolutionOptions::default()).map_err(err)?;
        ensure(
            r.passed(),
            format!("convolution mismatch at {:?}", r.mismatch),
        )?;
        ensure(r.identity_value == vol.d_pi, "omega * omega^*(1) != d_pi")?;
        let n = omega.arena().n();
        ensure(
            (n == 2) == (r.mode == ConvolutionMode::Full),
            "unexpected convolution mode",
        )?;
        let dr = depth_report(&data, Some(vol.d_pi.clone())).map_err(err)?;
        let cc = concentration_check(&omega, dr.concentration_exponent, BUDGET).map_err(err)?;
        ensure(
            cc.holds(),
            format!("concentration fails at {:?}", cc.failure),
        )?;
        modes.push(format!(
            "n={n} {}",
            if r.mode == ConvolutionMode::Full {
                "full"
            } else {
                "sampled"
            }
        ));
        collected.push(Support {
            n,
            deviation: vol.deviation_bound,
            near_half: concentration_near_half_depth(&dr),
        });
    }
    Ok(modes.join(", "))
}

fn bookkeeping(collected: &[Support]) -> Outcome {
    ensure(
        collected.len() == 4,
        "test-function criterion did not complete",
    )?;
    for s in collected {
        ensure(
            s.deviation <= (s.n * s.n) as i64,
            format!("deviation {} > n^2", s.deviation),
        )?;
        ensure(s.near_half, "concentration exponent not within 1 of c/2")?;
    }
    let devs: Vec<String> = collected.iter().map(|s| s.deviation.to_string()).collect();
    Ok(format!("deviations {}", devs.join(", ")))
}

fn counting() -> Outcome {
    fn tuples(a: u64, n: u64) -> u128 {
        if n == 1 {
            1
        } else {
            (0..=a).map(|k| tuples(a - k, n - 1)).sum()
        }
    }
    for a in 0..=8 {
        for n in 1..=6 {
            ensure(partition_count(a, n) == tuples(a, n), format!("P({a},{n})"))?;
        }
    }
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let (mut in_regime, mut witnesses) = (0, 0);
    for name in [
        "m4p3",
        "m1-free",
        "m2-diagonal",
        "m4-diagonal",
        "m2-gaussian",
        "m4-gaussian",
        "m5-gaussian",
    ] {
        let q = QueryFile::read(&dir.join(format!("{name}.toml")))
            .map_err(err)?
            .query()
            .map_err(err)?;
        let r = enumerate_s(&q, BUDGET).map_err(err)?;
        let v = abelian_check(&r);
        if v.regime {
            in_regime += 1;
            ensure(v.abelian, format!("{name}: non-commuting pair in regime"))?;
            ensure(
                r.within_partition_bound(),
                format!("{name}: |S| > fiber * P"),
            )?;
        } else if !v.abelian {
            witnesses += 1;
        }
    }
    ensure(in_regime > 0, "no query in the regime")?;
    ensure(witnesses > 0, "no out-of-regime witness")?;
    Ok(format!(
        "{in_regime} queries in regime, {witnesses} witness"
    ))
}

fn exponent() -> Outcome {
    let two = amplifier_exponent(2).map_err(err)?;
    let three = amplifier_exponent(3).map_err(err)?;
    ensure(two.closed_form == Ratio::new(15, 64), "n=2")?;
    ensure(three.closed_form == Ratio::new(107, 216), "n=3")?;
    ensure(
        two.consistent() && three.consistent(),
        "sign audit disagrees",
    )?;
    Ok(format!(
        "15/64, 107/216; flipped sign would give {} and {}",
        two.flipped, three.flipped
    ))
}

fn main() {
    let mut collected = Vec::new();
    let mut failed = 0;
    let mut line = |k: u32, name: &str, start: Instant, out: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("criterion {k} PASS {name}: {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("criterion {k} FAIL {name}: {why} ({secs:.1}s)");
            }
        }
    };
    let t = Instant::now();
    line(1, "filtration laws", t, filtration_laws());
    let t = Instant::now();
    line(2, "minimality and k0", t, minimality());
    let t = Instant::now();
    line(3, "simple characters", t, simple_characters());
    let t = Instant::now();
    line(4, "Heisenberg extension", t, heisenberg_criterion());
    let t = Instant::now();
    line(5, "intertwining dichotomy", t, intertwining());
    let t = Instant::now();
    let out = test_functions(&mut collected);
    line(6, "test-function identities", t, out);
    let t = Instant::now();
    line(
        7,
        "volume and conductor bookkeeping",
        t,
        bookkeeping(&collected),
    );
    let t = Instant::now();
    line(8, "counting", t, counting());
    let t = Instant::now();
    line(9, "exponent", t, exponent());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
