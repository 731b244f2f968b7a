//! Fast invariant checks shared by the `check` command and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{build_supports, LocalSystem, Op, StencilParams};
use crate::constitutive::{return_map, yield_function, Hardening, Material, MaterialState, PlaneMode, Voigt};
use crate::error::Result;
use crate::geometry::{generate_nodes, BcTag, DomainSpec, Segment};
use crate::io::parse_config;
use crate::spatial::PointIndex;

use super::cases::CaseId;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn result(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

/// Value and derivatives `[f, fx, fy, fxx, fxy, fyy]` of `x^a y^b`.
fn monomial(a: u32, b: u32, p: [f64; 2]) -> [f64; 6] {
    let pw = |x: f64, k: i32| if k < 0 { 0.0 } else { x.powi(k) };
    let (a, b) = (a as i32, b as i32);
    let (af, bf) = (a as f64, b as f64);
    let (x, y) = (p[0], p[1]);
    [
        pw(x, a) * pw(y, b),
        af * pw(x, a - 1) * pw(y, b),
        bf * pw(x, a) * pw(y, b - 1),
        af * (af - 1.0) * pw(x, a - 2) * pw(y, b),
        af * bf * pw(x, a - 1) * pw(y, b - 1),
        bf * (bf - 1.0) * pw(x, a) * pw(y, b - 2),
    ]
}

fn dot(w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(f).map(|(x, y)| x * y).sum()
}

/// Operator weights on relaxed clouds over an offset unit square reproduce
/// every monomial up to the augmentation degree, including the symmetric
/// gradient of vector fields. Reports the worst error relative to
/// `max(1, sum |w_i f_i|)`.
pub fn polynomial_reproduction(seed: u64, h: f64, samples: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, y0) = (0.3, -0.7);
    let line = |a: [f64; 2], b: [f64; 2]| Segment::line([x0 + a[0], y0 + a[1]], [x0 + b[0], y0 + b[1]], BcTag::Traction);
    let spec = DomainSpec::with_uniform_spacing(
        vec![
            line([0.0, 0.0], [1.0, 0.0]),
            line([1.0, 0.0], [1.0, 1.0]),
            line([1.0, 1.0], [0.0, 1.0]),
            line([0.0, 1.0], [0.0, 0.0]),
        ],
        h,
    )?;
    let ops = [Op::Dx, Op::Dy, Op::Laplacian, Op::Dxx, Op::Dxy, Op::Dyy];
    let exact_of = |op: Op, v: &[f64; 6]| match op {
        Op::Dx => v[1],
        Op::Dy => v[2],
        Op::Laplacian => v[3] + v[5],
        Op::Dxx => v[3],
        Op::Dxy => v[4],
        _ => v[5],
    };
    let mut worst = 0.0f64;
    let mut checks = 0usize;
    for degree in 2..=4u32 {
        let cloud = generate_nodes(&spec, seed.wrapping_add(degree as u64))?;
        let params = StencilParams::new(3, degree);
        let pos = cloud.positions();
        let supports = build_supports(&PointIndex::new(pos), params.n_support())?;
        let basis = params.basis();
        for _ in 0..samples {
            let l = rng.random_range(0..pos.len());
            let sys = LocalSystem::new(pos, &supports[l], &basis, params.m)?;
            let s = supports[l].scale;
            let q = [pos[l][0] + rng.random_range(-s..s), pos[l][1] + rng.random_range(-s..s)];
            let w = sys.weights(q, &ops);
            let idx = &supports[l].indices;
            for tot in 0..=degree {
                for b in 0..=tot {
                    let a = tot - b;
                    let vals: Vec<f64> = idx.iter().map(|&j| monomial(a, b, pos[j])[0]).collect();
                    let ex = monomial(a, b, q);
                    for (k, op) in ops.iter().enumerate() {
                        let got = dot(&w[k], &vals);
                        let scale = w[k].iter().zip(&vals).map(|(wi, f)| (wi * f).abs()).sum::<f64>().max(1.0);
                        worst = worst.max((got - exact_of(*op, &ex)).abs() / scale);
                        checks += 1;
                    }
                }
            }
            // symmetric gradient of a vector field of full degree
            let (a1, b1, a2, b2) = (degree - 1, 1, 1, degree - 1);
            let u1: Vec<f64> = idx.iter().map(|&j| monomial(a1, b1, pos[j])[0]).collect();
            let u2: Vec<f64> = idx.iter().map(|&j| monomial(a2, b2, pos[j])[0]).collect();
            let (m1, m2) = (monomial(a1, b1, q), monomial(a2, b2, q));
            let eps = [dot(&w[0], &u1), dot(&w[1], &u2), dot(&w[1], &u1) + dot(&w[0], &u2)];
            let ex = [m1[1], m2[2], m1[2] + m2[1]];
            for c in 0..3 {
                worst = worst.max((eps[c] - ex[c]).abs() / ex[c].abs().max(1.0));
                checks += 1;
            }
        }
    }
    Ok(result(
        "polynomial reproduction",
        worst <= 1e-9,
        format!("{checks} checks, worst relative error {worst:.2e} (limit 1e-9)"),
    ))
}

fn random_strain(rng: &mut ChaCha8Rng, size: f64) -> Voigt {
    [rng.random_range(-size..size), rng.random_range(-size..size), 0.0, rng.random_range(-size..size)]
}

fn fd_tangent(state: &MaterialState, de: &Voigt, model: &Material, step: f64) -> Result<[[f64; 4]; 4]> {
    let mut d = [[0.0; 4]; 4];
    for k in 0..4 {
        let (mut p, mut m) = (*de, *de);
        p[k] += step;
        m[k] -= step;
        let sp = return_map(state, &p, model)?.state.stress;
        let sm = return_map(state, &m, model)?.state.stress;
        for i in 0..4 {
            d[i][k] = (sp[i] - sm[i]) / (2.0 * step);
        }
    }
    Ok(d)
}

fn frobenius_rel(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..4 {
        for k in 0..4 {
            num += (a[i][k] - b[i][k]).powi(2);
            den += b[i][k].powi(2);
        }
    }
    (num / den).sqrt()
}

/// Central differences of the return map against the consistent tangent on
/// the elastic, perfectly plastic and hardening branches. Samples stay a
/// margin away from the yield surface so the difference stencil does not
/// straddle branches; the best of the steps 1e-6, 1e-7, 1e-8 is kept.
pub fn tangent_consistency(seed: u64, samples: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elastic = Material::elastic(1.0, 0.3, PlaneMode::PlaneStrain)?;
    let branches = [
        ("elastic", Hardening::Linear(0.0), false),
        ("H=0", Hardening::Linear(0.0), true),
        ("H>0", Hardening::Linear(0.25), true),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, hardening, plastic) in branches {
        let model = Material::plastic(1.0, 0.3, 0.01, hardening)?;
        let mut worst = 0.0f64;
        let mut n = 0;
        while n < samples {
            let committed = return_map(&MaterialState::default(), &random_strain(&mut rng, 0.02), &model)?.state;
            let de = random_strain(&mut rng, 0.03);
            let up = return_map(&committed, &de, &model)?;
            let trial = return_map(&committed, &de, &elastic)?.state.stress;
            let phi = yield_function(&trial, committed.epbar, &model);
            let on_branch = if plastic { phi > 0.1 * model.sigma_y0 } else { phi < -0.1 * model.sigma_y0 };
            if !on_branch {
                continue;
            }
            let mut best = f64::INFINITY;
            for step in [1e-6, 1e-7, 1e-8] {
                best = best.min(frobenius_rel(&fd_tangent(&committed, &de, &model, step)?, &up.tangent.d));
            }
            worst = worst.max(best);
            n += 1;
        }
        pass &= worst <= 1e-5;
        parts.push(format!("{name} {worst:.1e}"));
    }
    Ok(result(
        "consistent tangent",
        pass,
        format!("worst relative error {} (limit 1e-5)", parts.join(", ")),
    ))
}

/// Randomized return-map calls from random committed states: admissibility,
/// non-negative multiplier, complementarity, plastic incompressibility and the
/// additive strain split.
pub fn kuhn_tucker(seed: u64, calls: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 4];
    let mut negative = 0usize;
    for i in 0..calls {
        let hardening = if i % 2 == 0 { Hardening::Linear(0.0) } else { Hardening::Linear(rng.random_range(0.0..0.5)) };
        let sy0 = rng.random_range(0.01..1.0);
        let model = Material::plastic(1.0, rng.random_range(0.0..0.45), sy0, hardening)?;
        let mut st = MaterialState::default();
        for _ in 0..rng.random_range(0..3) {
            st = return_map(&st, &random_strain(&mut rng, 2.0 * sy0), &model)?.state;
        }
        let up = return_map(&st, &random_strain(&mut rng, 2.0 * sy0), &model)?;
        let phi = yield_function(&up.state.stress, up.state.epbar, &model);
        if up.dgamma < 0.0 {
            negative += 1;
        }
        let dep: Voigt = std::array::from_fn(|k| up.state.plastic_strain[k] - st.plastic_strain[k]);
        let split = (0..4)
            .map(|k| (up.state.strain[k] - up.state.elastic_strain[k] - up.state.plastic_strain[k]).abs())
            .fold(0.0, f64::max);
        worst[0] = worst[0].max(phi / sy0);
        worst[1] = worst[1].max((up.dgamma * phi).abs() / sy0);
        worst[2] = worst[2].max((dep[0] + dep[1] + dep[2]).abs());
        worst[3] = worst[3].max(split);
    }
    let pass = worst[0] <= 1e-9 && negative == 0 && worst[1] <= 1e-9 && worst[2] <= 1e-12 && worst[3] <= 1e-12;
    Ok(result(
        "Kuhn-Tucker conditions",
        pass,
        format!(
            "{calls} calls: max Phi/sigma_y0 {:.1e}, negative multipliers {negative}, max |dgamma Phi|/sigma_y0 {:.1e}, max |tr d_ep| {:.1e}, max split error {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

/// The effective-configuration echo of every case parses back to itself.
pub fn config_roundtrip() -> Result<CheckResult> {
    let mut bad = Vec::new();
    for id in CaseId::ALL {
        let c = parse_config(&format!("case = {id}\nh = 0.05\n"))?;
        let again = parse_config(&c.echo())?;
        if again != c {
            bad.push(id.to_string());
        }
    }
    Ok(result(
        "config echo round trip",
        bad.is_empty(),
        if bad.is_empty() { format!("{} cases", CaseId::ALL.len()) } else { format!("mismatch for {}", bad.join(", ")) },
    ))
}

/// The quick invariant suite run by the `check` command.
pub fn run_invariants(seed: u64) -> Result<Vec<CheckResult>> {
    Ok(vec![
        polynomial_reproduction(seed, 0.1, 20)?,
        tangent_consistency(seed, 100)?,
        kuhn_tucker(seed, 10_000)?,
        config_roundtrip()?,
    ])
}
