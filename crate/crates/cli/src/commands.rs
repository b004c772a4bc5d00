use std::path::Path;

use minvec::counting::{abelian_check, amplifier_exponent, enumerate_s, TorusSpec};
use minvec::cyclo::Phase;
use minvec::error::{Error, Result};
use minvec::files::{DatumFile, QueryFile};
use minvec::groups::{
    build_subgroups, build_support, extend_and_induce, heisenberg, intertwines_residue, rank_mod_p,
    simple_character, SupportGroup, SupportOptions,
};
use minvec::orders::{check_approximation, InductionDatum, K0};
use minvec::testfunc::{
    concentration_check, concentration_near_half_depth, convolve_check, depth_report, make_omega,
    volume, ConvolutionMode, ConvolutionOptions, TestFunction,
};

use crate::report::{Report, Section, Status};

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub budget: u128,
    pub seed: u64,
    pub margin: u32,
}

pub const CHECKS: [&str; 6] = [
    "character",
    "heisenberg",
    "intertwine",
    "omega",
    "convolution",
    "concentration",
];

fn label(base: &str, k: usize, total: usize) -> String {
    if total > 1 {
        format!("{base}.{k}")
    } else {
        base.to_string()
    }
}

pub fn order(file: &DatumFile, cfg: Settings) -> Result<Report> {
    let mut report = Report::new("order", &file.name);
    let total = file.blocks.len();
    for (k, blk) in file.blocks.iter().enumerate() {
        let d = blk.uncertified(cfg.margin)?;
        let certified = blk.datum(cfg.margin);
        let section = Section::run(label("order", k, total), |s| {
            let order = d.order();
            s.field("p", blk.p);
            s.field("n", blk.n);
            s.field("e", blk.e);
            s.field("j", blk.j);
            s.field("precision", d.ctx().precision());
            s.field("v_A", order.valuation(d.beta())?);
            s.field("normalised_depth", d.normalised_depth());
            let minimal = match &certified {
                Ok(c) => {
                    s.field("field", "certified");
                    c.is_minimal()?
                }
                Err(Error::DatumInvalid(why)) => {
                    s.field("field", "not certified");
                    s.note(why.clone());
                    false
                }
                Err(e) => return Err(e.clone()),
            };
            let m = d.minimality_report()?;
            s.field("coprime", m.coprime);
            s.field("single_slope", m.single_slope);
            s.field("residue_generates", m.residue_generates);
            s.field("minimal", minimal);
            let k0 = d.k0(cfg.budget)?;
            s.field("k0", k0);
            s.note(match k0 {
                K0::Exact(k) => format!("minimal: {minimal}, k0 = {k}"),
                K0::AtLeast(k) => format!("minimal: {minimal}, k0 >= {k}"),
            });
            let e = blk.e as i64;
            let mut approx = true;
            for i in -2 * e..=2 * e {
                approx &= check_approximation(order, i, d.ctx())?.holds();
            }
            s.field("approximation", approx);
            Ok(if approx { Status::Pass } else { Status::Fail })
        })?;
        report.sections.push(section);
    }
    Ok(report)
}

fn character_section(name: String, d: &InductionDatum, cfg: Settings) -> Result<Section> {
    Section::run(name, |s| {
        let fam = build_subgroups(d, cfg.budget)?;
        let sc = simple_character(&fam, 0, cfg.budget)?;
        s.field("level", fam.level());
        s.field("H1", fam.h1().size());
        s.field("J1", fam.j1().size());
        s.field("JcapK", fam.j_cap_k().size());
        let mult = sc.theta.check_multiplicative(cfg.budget, cfg.seed);
        s.field("multiplicative_pairs", mult.pairs);
        s.field("exhaustive", mult.exhaustive);
        let deep = fam
            .unit_filtration(d.depth() + 1)
            .ok_or_else(|| Error::ConstructionFailure("U_A(j+1) was not built".into()))?;
        let trivial = deep
            .elements(cfg.budget)?
            .iter()
            .all(|x| sc.theta.value(x) == Some(Phase::ZERO));
        s.field("trivial_on_U_A(j+1)", trivial);
        if let Some((x, y)) = &mult.failure {
            s.note(format!("theta(xy) != theta(x) theta(y) at {x:?}, {y:?}"));
        }
        Ok(if mult.passed() && trivial {
            Status::Pass
        } else {
            Status::Fail
        })
    })
}

fn heisenberg_section(name: String, d: &InductionDatum, cfg: Settings) -> Result<Section> {
    Section::run(name, |s| {
        if d.depth() % 2 == 1 {
            s.note("J1 = H1 for odd j, take B1 = H1");
            return Ok(Status::NotApplicable);
        }
        let fam = build_subgroups(d, cfg.budget)?;
        let sc = simple_character(&fam, 0, cfg.budget)?;
        let pol = heisenberg(&fam, &sc, cfg.budget)?;
        let eta = extend_and_induce(&fam, &sc, &pol, cfg.budget)?;
        let p = pol.p;
        let dim = pol.dim();
        let alternating = (0..dim).all(|i| {
            pol.pairing[i][i] == 0
                && (0..dim).all(|j| (pol.pairing[i][j] + pol.pairing[j][i]) % p == 0)
        });
        let nondegenerate = rank_mod_p(&pol.pairing, p) == dim;
        let theta_matches = (0..dim).all(|i| {
            (0..dim)
                .all(|j| pol.theta_commutators[i][j] == Phase::new(pol.pairing[i][j] as i128, p, p))
        });
        let raw_alternating = (0..dim)
            .all(|i| (0..dim).all(|j| pol.raw_pairing[i][j] == pol.raw_pairing[j][i].neg(p)));
        let index = fam.j1().size() / fam.h1().size();
        s.field("index_J1_H1", index);
        s.field("dim_V", dim);
        s.field("alternating", alternating);
        s.field("nondegenerate", nondegenerate);
        s.field("theta_on_commutators_matches", theta_matches);
        s.field("raw_form_alternating", raw_alternating);
        s.field("isotropic_dim", pol.isotropic.len());
        s.field("B1", pol.b1.size());
        s.field("dim_eta", eta.dim);
        s.field("eta_eta", eta.self_product);
        s.field("eta_eta_alt", eta.alternative_product);
        s.field("restriction_multiplicity", eta.restriction_multiplicity);
        let ok = alternating
            && nondegenerate
            && u128::from(eta.dim) * u128::from(eta.dim) == index
            && eta.self_product == 1
            && eta.alternative_product == 1
            && eta.restriction_multiplicity == i128::from(eta.dim);
        Ok(if ok { Status::Pass } else { Status::Fail })
    })
}

fn intertwine_section(name: String, d: &InductionDatum, cfg: Settings) -> Result<Section> {
    Section::run(name, |s| {
        let fam = build_subgroups(d, cfg.budget)?;
        let sc = simple_character(&fam, 0, cfg.budget)?;
        let arena = fam.arena();
        let work = arena.gl_order().saturating_mul(fam.h1().size());
        if work > cfg.budget {
            return Err(Error::Budget {
                what: "intertwining over GL_n(Z/p^N)".into(),
                needed: work,
                budget: cfg.budget,
                lower_bound: None,
            });
        }
        let (mut hits, mut exceptions, mut total) = (0u64, 0u64, 0u64);
        for g in arena.enumerate_gl() {
            total += 1;
            let out = intertwines_residue(&fam, &sc.theta, &g, cfg.budget)?;
            hits += u64::from(out.intertwines);
            if out.intertwines != fam.j_cap_k().contains(&g) {
                if exceptions == 0 {
                    s.note(format!("exception at {g:?}"));
                }
                exceptions += 1;
            }
        }
        s.field("level", fam.level());
        s.field("elements", total);
        s.field("intertwining", hits);
        s.field("JcapK", fam.j_cap_k().size());
        s.field("exceptions", exceptions);
        Ok(if exceptions == 0 {
            Status::Pass
        } else {
            Status::Fail
        })
    })
}

fn omega_sections(data: &[InductionDatum], checks: &[&str], cfg: Settings) -> Result<Vec<Section>> {
    let wanted: Vec<&str> = ["omega", "convolution", "concentration"]
        .into_iter()
        .filter(|c| checks.contains(c))
        .collect();
    if wanted.is_empty() {
        return Ok(Vec::new());
    }
    let opts = SupportOptions {
        budget: cfg.budget,
        seed: cfg.seed,
        ..SupportOptions::default()
    };
    let support: SupportGroup = match build_support(data, opts) {
        Ok(s) => s,
        Err(e @ (Error::Budget { .. } | Error::ConstructionFailure(_))) => {
            let status = if matches!(e, Error::Budget { .. }) {
                Status::Skipped
            } else {
                Status::Fail
            };
            return Ok(wanted
                .into_iter()
                .map(|w| {
                    let mut s = Section::new(w);
                    s.status = status;
                    s.note(format!("building K_pi: {e}"));
                    s
                })
                .collect());
        }
        Err(e) => return Err(e),
    };
    let omega: TestFunction = make_omega(support);
    let vol = volume(omega.support())?;
    let mut out = Vec::new();
    if wanted.contains(&"omega") {
        out.push(Section::run("omega", |s| {
            let sup = omega.support();
            let n = sup.arena().n();
            s.field("K_pi", sup.group.size());
            s.field("level", sup.level());
            s.field("depth", sup.depth);
            s.field("closure_exhaustive", sup.closure.exhaustive);
            s.field("character_exhaustive", sup.multiplicative.exhaustive);
            s.field("index", &vol.index);
            s.field("d_pi", &vol.d_pi);
            s.field("predicted_log_index", vol.predicted_exponent);
            s.field("deviation_bound", vol.deviation_bound);
            s.field("allowed_deviation", n * n);
            Ok(if vol.within_band {
                Status::Pass
            } else {
                Status::Fail
            })
        })?);
    }
    if wanted.contains(&"convolution") {
        out.push(Section::run("convolution", |s| {
            let opts = ConvolutionOptions {
                seed: cfg.seed,
                budget: cfg.budget,
                ..ConvolutionOptions::default()
            };
            let r = convolve_check(&omega, opts)?;
            let mode = match r.mode {
                ConvolutionMode::Full => "full",
                ConvolutionMode::Sampled => "sampled",
            };
            s.field("mode", mode);
            s.field("points", r.points);
            s.field("support_points", r.support_points);
            s.field("outside_points", r.outside_points);
            s.field("identity_value", &r.identity_value);
            s.field("d_pi", &vol.d_pi);
            s.note(format!(
                "omega * omega^* = d_pi omega with d_pi = {}",
                vol.d_pi
            ));
            if let Some(g) = &r.mismatch {
                s.note(format!("mismatch at {g:?}"));
            }
            Ok(if r.passed() && r.identity_value == vol.d_pi {
                Status::Pass
            } else {
                Status::Fail
            })
        })?);
    }
    if wanted.contains(&"concentration") {
        out.push(Section::run("concentration", |s| {
            let dr = depth_report(data, Some(vol.d_pi.clone()))?;
            let near = concentration_near_half_depth(&dr);
            let cc = concentration_check(&omega, dr.concentration_exponent, cfg.budget)?;
            s.field("depth", dr.depth);
            s.field("normalised_depth", dr.normalised_depth);
            s.field("conductor_exponent", dr.conductor_exponent);
            s.field("concentration_exponent", dr.concentration_exponent);
            s.field("near_half_depth", near);
            s.field("checked", cc.checked);
            if let Some(x) = &cc.failure {
                s.note(format!("no torus element close to {x:?}"));
            }
            Ok(if cc.holds() && near {
                Status::Pass
            } else {
                Status::Fail
            })
        })?);
    }
    Ok(out)
}

pub fn verify(file: &DatumFile, checks: &[&str], cfg: Settings) -> Result<Report> {
    if checks.is_empty() {
        return Err(Error::InvalidInput("no checks requested".into()));
    }
    if let Some(bad) = checks.iter().find(|c| !CHECKS.contains(c)) {
        return Err(Error::InvalidInput(format!(
            "unknown check {bad}; expected one of {}",
            CHECKS.join(", ")
        )));
    }
    let data = file.data(cfg.margin)?;
    for d in &data {
        if !d.is_minimal()? {
            return Err(Error::DatumInvalid("verify needs a minimal datum".into()));
        }
    }
    let mut report = Report::new("verify", &file.name);
    let total = data.len();
    for (k, d) in data.iter().enumerate() {
        if checks.contains(&"character") {
            report
                .sections
                .push(character_section(label("character", k, total), d, cfg)?);
        }
        if checks.contains(&"heisenberg") {
            report
                .sections
                .push(heisenberg_section(label("heisenberg", k, total), d, cfg)?);
        }
        if checks.contains(&"intertwine") {
            report
                .sections
                .push(intertwine_section(label("intertwine", k, total), d, cfg)?);
        }
    }
    report.sections.extend(omega_sections(&data, checks, cfg)?);
    Ok(report)
}

fn matrix_text(g: &[i64]) -> String {
    g.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn count(file: &QueryFile, cfg: Settings) -> Result<Report> {
    let q = file.query()?;
    let r = enumerate_s(&q, cfg.budget)?;
    let v = abelian_check(&r);
    let mut report = Report::new("count", &file.name);
    let mut s = Section::new("count");
    s.field("n", q.n);
    s.field("m", q.det);
    s.field("bound", q.bound);
    s.field("p", q.p);
    s.field("congruence", q.congruence);
    s.field(
        "torus",
        match &q.torus {
            TorusSpec::Diagonal => "diagonal".to_string(),
            TorusSpec::Generated(g) => format!("generated by {}", g.len()),
        },
    );
    s.field("matches", r.count());
    s.field("nodes", r.nodes);
    s.field("lattice_classes", r.lattice_classes);
    s.field("max_fiber", r.max_fiber);
    s.field("partition_bound", r.partition_bound);
    s.field("within_bound", r.within_partition_bound());
    s.field("regime", v.regime);
    s.field("regime_threshold", &v.regime_threshold);
    s.field("abelian", v.abelian);
    if let Some((a, b)) = &v.witness {
        s.field(
            "witness",
            format!("[{}] [{}]", matrix_text(a), matrix_text(b)),
        );
    }
    for (k, g) in r.matrices.iter().enumerate() {
        s.field(&format!("matrix.{k}"), matrix_text(g));
    }
    s.note(format!(
        "{} matches, abelian: {}, regime: {}, |S| <= {} * {}: {}",
        r.count(),
        v.abelian,
        v.regime,
        r.max_fiber,
        r.partition_bound,
        r.within_partition_bound()
    ));
    // only a failure inside the regime contradicts anything
    s.status = if v.regime && !(v.abelian && r.within_partition_bound()) {
        Status::Fail
    } else {
        Status::Pass
    };
    report.sections.push(s);
    Ok(report)
}

pub fn exponent(n: i64) -> Result<Report> {
    let r = amplifier_exponent(n)?;
    let mut report = Report::new("exponent", n.to_string());
    let mut s = Section::new("exponent");
    s.field("n", n);
    s.field(
        "amplifier_length_coefficient",
        r.amplifier_length_coefficient,
    );
    s.field("volume_exponent", r.volume_exponent);
    s.field("amplifier_exponent", r.amplifier_exponent);
    s.field("assembled", r.assembled);
    s.field("closed_form", r.closed_form);
    s.field("penultimate", r.penultimate);
    s.field("flipped_sign", r.flipped);
    s.field("consistent", r.consistent());
    s.note(format!("|F| << C^{}", r.closed_form));
    s.status = if r.consistent() {
        Status::Pass
    } else {
        Status::Fail
    };
    report.sections.push(s);
    Ok(report)
}

/// Every datum and query file in `dir`, then the exponents for `n = 2, 3`.
pub fn report_all(dir: &Path, cfg: Settings) -> Result<Vec<Result<Report>>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if let Ok(datum) = DatumFile::parse(&text) {
            out.push(order(&datum, cfg));
            if datum.data(cfg.margin).is_ok() {
                out.push(verify(&datum, &CHECKS, cfg));
            }
        } else {
            out.push(QueryFile::parse(&text).and_then(|q| count(&q, cfg)));
        }
    }
    out.push(exponent(2));
    out.push(exponent(3));
    Ok(out)
}
