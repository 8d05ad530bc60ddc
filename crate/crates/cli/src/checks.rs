//! The fixture and property checks behind `fixtures --all` and the
//! acceptance target, grouped by acceptance criterion.

use std::collections::{BTreeMap, BTreeSet};

use jetfactor::blocks::{BlockMatrix, Slot};
use jetfactor::classify::{classify_static, dynamic_class, DynClass};
use jetfactor::coframes::{d_function, exterior_d, Coframe};
use jetfactor::equivalence::{
    block_rank, check_arepeats, check_nonaut_static_pair, pullback_matrix, verify_pair, verify_scalar_theorem,
    EquivError, EquivMap,
};
use jetfactor::factorize::{build_s, check_gnice, factor_jk0, GnicePattern};
use jetfactor::fixtures::{self, elkin_32, system, FixturePair, ELKIN_32};
use jetfactor::sysio::parse_expr;
use jetfactor::{RatFn, Rational, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crosscheck::{numeric_crosscheck, CrosscheckOptions};

/// Sizes of the randomized parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub kernel_cases: usize,
    pub static_transforms: usize,
    pub nonaut_maps: usize,
    pub crosscheck_seeds: u64,
}

impl Budget {
    pub fn full() -> Self {
        Budget { kernel_cases: 1000, static_transforms: 50, nonaut_maps: 10, crosscheck_seeds: 5 }
    }

    pub fn quick() -> Self {
        Budget { kernel_cases: 100, static_transforms: 5, nonaut_maps: 3, crosscheck_seeds: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    fn from_result(name: impl Into<String>, r: Result<String, String>) -> Self {
        match r {
            Ok(d) => Check::new(name, true, d),
            Err(d) => Check::new(name, false, d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn e(s: &str) -> RatFn {
    parse_expr(s).expect("literal expression")
}

fn row_of(xs: &[&str]) -> Vec<RatFn> {
    xs.iter().map(|s| e(s)).collect()
}

/// Pullback matrix of `m` on automatic frames, with enough source levels.
pub fn auto_matrix(m: &EquivMap, levels: usize) -> Result<BlockMatrix, EquivError> {
    let src = Coframe::auto(&m.src, levels + m.detect_order().max(0) as usize + 1);
    let tgt = Coframe::auto(&m.tgt, levels);
    pullback_matrix(m, &src, &tgt, levels)
}

fn strict_fixtures() -> Vec<FixturePair> {
    fixtures::builtin_fixtures().into_iter().filter(|f| f.strict).collect()
}

pub fn fixture_verification(order: usize) -> Criterion {
    let mut checks = Vec::new();
    for fx in fixtures::builtin_fixtures() {
        let r = verify_pair(&fx.forward, &fx.inverse, order).map_err(|err| err.to_string()).and_then(|rep| {
            if !rep.passed() || !rep.residuals.is_empty() {
                return Err(format!("{} residuals", rep.residuals.len()));
            }
            let jk = (fx.forward.detect_order(), fx.inverse.detect_order());
            if fx.strict && jk != (0, 0) {
                return Err(format!("orders {jk:?}"));
            }
            Ok(format!("J={}, K={}", jk.0, jk.1))
        });
        checks.push(Check::from_result(format!("verify {}", fx.name), r));
    }
    Criterion { id: 1, title: "fixture verification", checks }
}

/// Rows of the φ pullback over the first nine coframe columns after `dt`.
pub const PHI_PULLBACK_ROWS: [((i32, usize), [&str; 9]); 7] = [
    ((0, 1), ["0", "x1", "-1", "0", "0", "0", "0", "0", "0"]),
    ((0, 2), ["0", "0", "0", "0", "1", "0", "0", "0", "0"]),
    ((0, 3), ["0", "1", "0", "0", "0", "0", "0", "0", "0"]),
    ((1, 1), ["u2", "0", "0", "0", "x1", "0", "0", "0", "0"]),
    ((1, 2), ["0", "0", "0", "0", "0", "0", "1", "0", "0"]),
    ((2, 1), ["u2'", "0", "0", "u2", "u1", "0", "x1", "0", "0"]),
    ((2, 2), ["0", "0", "0", "0", "0", "0", "0", "0", "1"]),
];

fn compare_rows<const W: usize>(a: &BlockMatrix, rows: &[((i32, usize), [&str; W])]) -> Result<String, String> {
    for ((b, c), want) in rows {
        let i = a.rows.index(Slot::new(*b, *c));
        let got = &a.entries()[i][1..=W];
        if got != row_of(want).as_slice() {
            let shown: Vec<String> = got.iter().map(ToString::to_string).collect();
            return Err(format!("row ({b},{c}) is ({})", shown.join(", ")));
        }
    }
    Ok(format!("{} rows match", rows.len()))
}

pub fn pullback_reproduction(order: usize) -> Criterion {
    let mut checks = Vec::new();
    match auto_matrix(&fixtures::phi().forward, order) {
        Ok(a) => {
            checks.push(Check::from_result("phi displayed rows", compare_rows(&a, &PHI_PULLBACK_ROWS)));
            let dt_zero = (1..a.rows.dim()).all(|i| a.entry(i, 0).is_zero());
            checks.push(Check::new("phi dt column", dt_zero, if dt_zero { "zero" } else { "nonzero" }));
        }
        Err(err) => checks.push(Check::new("phi pullback", false, err.to_string())),
    }
    Criterion { id: 2, title: "pullback matrix reproduction", checks }
}

/// The factor `g` for φ as printed, over the first seven columns.
pub const PHI_G_DISPLAYED: [((i32, usize), [&str; 7]); 7] = [
    ((0, 1), ["0", "x1", "-1", "0", "0", "0", "0"]),
    ((0, 2), ["1", "0", "0", "0", "0", "0", "0"]),
    ((0, 3), ["0", "1", "0", "0", "0", "0", "0"]),
    ((1, 1), ["x1", "0", "0", "u2", "0", "0", "0"]),
    ((1, 2), ["0", "0", "0", "0", "1", "0", "0"]),
    ((2, 1), ["-x1*u2' - u1", "0", "0", "u2*u2'", "x1", "u2", "0"]),
    ((2, 2), ["0", "0", "0", "0", "0", "0", "1"]),
];

/// The factor `g` for φ forced by `A = g·S·G` with `G = Id`.
pub const PHI_G_DERIVED: [((i32, usize), [&str; 7]); 7] = [
    ((0, 1), ["0", "x1", "-1", "0", "0", "0", "0"]),
    ((0, 2), ["1", "0", "0", "0", "0", "0", "0"]),
    ((0, 3), ["0", "1", "0", "0", "0", "0", "0"]),
    ((1, 1), ["x1", "0", "0", "u2", "0", "0", "0"]),
    ((1, 2), ["0", "0", "0", "0", "1", "0", "0"]),
    ((2, 1), ["u1", "0", "0", "u2'", "x1", "u2", "0"]),
    ((2, 2), ["0", "0", "0", "0", "0", "0", "1"]),
];

/// Factorization checks. With `literal_display` the printed `g` is
/// compared entry by entry as well.
pub fn factorization_reproduction(order: usize, literal_display: bool) -> Criterion {
    let mut checks = Vec::new();
    let phi = auto_matrix(&fixtures::phi().forward, order).map_err(|e| e.to_string()).and_then(|a| {
        factor_jk0(&a).map(|f| (a, f)).map_err(|e| e.to_string())
    });
    match phi {
        Ok((a, f)) => {
            let s_ok = f.s == build_s(3, order);
            checks.push(Check::new("phi S", s_ok, if s_ok { "constant pattern" } else { "differs" }));
            let g_id = f.big_g.matrix.entries() == BlockMatrix::identity(a.cols).entries();
            checks.push(Check::new("phi G", g_id, if g_id { "identity" } else { "not identity" }));
            checks.push(Check::from_result("phi g", compare_rows(&f.g.matrix, &PHI_G_DERIVED)));
            if literal_display {
                checks.push(Check::from_result("phi g as displayed", compare_rows(&f.g.matrix, &PHI_G_DISPLAYED)));
            }
            let exact = f.product() == a.truncate_cols(order + 1).with_band(None);
            checks.push(Check::new("phi g*S*G", exact, if exact { "equals A" } else { "differs from A" }));
        }
        Err(err) => checks.push(Check::new("phi factor", false, err)),
    }
    for fx in [fixtures::psi(), fixtures::theta()] {
        let r = auto_matrix(&fx.forward, order).map_err(|e| e.to_string()).and_then(|a| {
            let f = factor_jk0(&a).map_err(|e| e.to_string())?;
            if f.product() != a.truncate_cols(order + 1).with_band(None) {
                return Err("g*S*G differs from A".into());
            }
            let p = check_gnice(&f.big_g.matrix).map_err(|e| e.to_string())?;
            if p != f.pattern {
                return Err("G pattern mismatch".into());
            }
            Ok(describe_pattern(&p))
        });
        checks.push(Check::from_result(format!("{} reconstruct", fx.name), r));
    }
    Criterion { id: 3, title: "factorization reproduction", checks }
}

pub fn describe_pattern(p: &GnicePattern) -> String {
    format!("p0 = {}, p1 = {}, q = {}", p.p0, p.p1, p.q)
}

pub fn theorem_checks(order: usize, nonaut_maps: usize, seed: u64) -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for fx in strict_fixtures() {
        for m in [&fx.forward, &fx.inverse] {
            let r = auto_matrix(m, order).map_err(|e| e.to_string()).and_then(|a| {
                let rep = check_arepeats(&a, Some(3)).map_err(|e| e.to_string())?;
                if rep.checked != [1, 2, 3] {
                    return Err(format!("repeats checked for {:?}", rep.checked));
                }
                let ranks = (block_rank(&a, 0, 1, &mut rng), block_rank(&a, 1, 2, &mut rng));
                if ranks != (1, 1) {
                    return Err(format!("ranks {ranks:?}"));
                }
                if m.detect_v_order() != m.detect_order() + 1 {
                    return Err(format!("v order {} against y order {}", m.detect_v_order(), m.detect_order()));
                }
                Ok("repeats for i = 1..3, ranks (1, 1), v order one above y".into())
            });
            checks.push(Check::from_result(format!("{} blocks", m.name), r));
        }
    }
    let mut held = 0;
    let mut failures = Vec::new();
    for k in 0..nonaut_maps {
        let f3 = ELKIN_32[k % ELKIN_32.len()];
        let fx = fixtures::random_nonaut_static(&elkin_32(f3), &mut rng);
        let r = (|| -> Result<(), String> {
            if !verify_pair(&fx.forward, &fx.inverse, 2).map_err(|e| e.to_string())?.passed() {
                return Err("pair does not verify".into());
            }
            let a = auto_matrix(&fx.forward, 3).map_err(|e| e.to_string())?;
            let ainv = auto_matrix(&fx.inverse, 3).map_err(|e| e.to_string())?;
            let rep = check_nonaut_static_pair(&a, &ainv);
            if !(rep.holds() && rep.forward_lower) {
                return Err(format!("triangularity {rep:?}"));
            }
            let ranks = (block_rank(&a, 0, 1, &mut rng), block_rank(&a, 1, 2, &mut rng));
            if ranks != (0, 0) {
                return Err(format!("ranks {ranks:?}"));
            }
            if (fx.forward.detect_order(), fx.forward.detect_v_order()) != (-1, 0) {
                return Err("static map uses control derivatives".into());
            }
            Ok(())
        })();
        match r {
            Ok(()) => held += 1,
            Err(d) => failures.push(format!("map {k} on {f3}: {d}")),
        }
    }
    checks.push(Check::new(
        "nonautonomous static pairs",
        failures.is_empty(),
        if failures.is_empty() { format!("{held} of {nonaut_maps} lower triangular both ways, ranks 0") } else { failures.join("; ") },
    ));
    let strict_rejected = {
        let fx = fixtures::phi();
        match (auto_matrix(&fx.forward, 3), auto_matrix(&fx.inverse, 3)) {
            (Ok(a), Ok(ainv)) => {
                let rep = check_nonaut_static_pair(&a, &ainv);
                rep.holds() && !rep.forward_lower
            }
            _ => false,
        }
    };
    checks.push(Check::new("phi is not static", strict_rejected, "neither direction lower triangular"));
    let s = build_s(3, order);
    let orth = s.mul(&s.transpose()) == BlockMatrix::identity(s.rows);
    checks.push(Check::new("S orthogonal", orth, if orth { "S*S^T = Id" } else { "S*S^T differs from Id" }));
    Criterion { id: 4, title: "theorem checks", checks }
}

pub fn structure_equations(order: usize) -> Criterion {
    let mut checks = Vec::new();
    for f3 in ELKIN_32 {
        let sys = elkin_32(f3);
        let contact = Coframe::contact(&sys, order).check_structure();
        checks.push(Check::from_result(
            format!("contact x3' = {f3}"),
            contact.map(|r| format!("{} slots", r.checked.len())).map_err(|e| e.to_string()),
        ));
        let adapted = Coframe::adapted_3x2(&sys, order).and_then(|c| c.check_structure());
        checks.push(Check::from_result(
            format!("adapted x3' = {f3}"),
            adapted.map(|r| format!("{} slots", r.checked.len())).map_err(|e| e.to_string()),
        ));
    }
    Criterion { id: 5, title: "structure equations", checks }
}

pub const DYN_CLASSES: [DynClass; 5] = [DynClass::Class2, DynClass::Class3, DynClass::Class1, DynClass::Class1, DynClass::Class1];

pub fn classification_table(transforms: usize, seed: u64) -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut tags = BTreeSet::new();
    for (f3, want) in ELKIN_32.iter().zip(DYN_CLASSES) {
        let sys = elkin_32(f3);
        let r = classify_static(&sys, &mut rng).map_err(|e| e.to_string()).and_then(|c| {
            tags.insert(c.tag);
            let d = dynamic_class(&c).map_err(|e| e.to_string())?;
            if d != want {
                return Err(format!("dynamic class {d}, expected {want}"));
            }
            let mut moved = 0;
            for _ in 0..transforms {
                let other = fixtures::random_static_transform(&sys, &mut rng);
                let c2 = classify_static(&other, &mut rng).map_err(|e| format!("transformed: {e}"))?;
                if c2.tag != c.tag {
                    return Err(format!("transform of {f3} classified as {}", c2.tag));
                }
                moved += 1;
            }
            Ok(format!("static {} ; dynamic {d}; {moved} transforms agree", c.tag))
        });
        checks.push(Check::from_result(format!("x3' = {f3}"), r));
    }
    let distinct = tags.len() == ELKIN_32.len();
    checks.push(Check::new("distinct tags", distinct, format!("{} tags", tags.len())));
    Criterion { id: 6, title: "classification table", checks }
}

pub fn scalar_control(seed: u64) -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut pairs = fixtures::scalar_fixtures();
    for f in [["x2", "u1"], ["u1", "x1"]] {
        for _ in 0..2 {
            pairs.push(fixtures::random_nonaut_static(&system(2, 1, &f), &mut rng));
        }
    }
    for (k, fx) in pairs.iter().enumerate() {
        let r = match verify_scalar_theorem(&fx.forward, &fx.inverse, 3) {
            Ok(rep) if rep.passed() => Ok(format!("static, orders ({}, {})", rep.j, rep.k)),
            Ok(rep) => Err(format!("verified {}, orders ({}, {})", rep.verified, rep.j, rep.k)),
            Err(err) => Err(err.to_string()),
        };
        checks.push(Check::from_result(format!("scalar {} {}", fx.name, k + 1), r));
    }
    let bad = fixtures::scalar_negative();
    let r = match verify_scalar_theorem(&bad.forward, &bad.inverse, 3) {
        Ok(rep) if !rep.verified => Ok("rejected".to_string()),
        Ok(rep) => Err(format!("verified with orders ({}, {})", rep.j, rep.k)),
        Err(err) => Err(err.to_string()),
    };
    checks.push(Check::from_result("scalar dynamic candidate", r));
    Criterion { id: 7, title: "scalar control", checks }
}

const VARS: [VarId; 4] =
    [VarId::State(1), VarId::State(2), VarId::Control { order: 0, index: 1 }, VarId::Control { order: 1, index: 2 }];

fn random_poly<R: Rng>(rng: &mut R) -> RatFn {
    let terms = rng.random_range(1..4);
    (0..terms).fold(RatFn::zero(), |acc, _| {
        let c = RatFn::from_int(rng.random_range(-4i64..=4));
        let mono = VARS.iter().fold(c, |m, v| {
            let e = rng.random_range(0..2);
            m * RatFn::var(*v).pow(e).expect("nonnegative power")
        });
        acc + mono
    })
}

fn random_ratfn<R: Rng>(rng: &mut R) -> RatFn {
    let n = random_poly(rng);
    let d = random_poly(rng);
    if d.is_zero() {
        n
    } else {
        n.div(&d).expect("nonzero divisor")
    }
}

fn field_laws<R: Rng>(rng: &mut R) -> Result<(), String> {
    let (a, b, c) = (random_ratfn(rng), random_ratfn(rng), random_ratfn(rng));
    let a2 = a.clone();
    let ok = &(&a + &b) + &c == &a + &(&b + &c)
        && &a * &b == &b * &a
        && &a * &(&b + &c) == &(&a * &b) + &(&a * &c)
        && (&a - &a2).is_zero()
        && (a.is_zero() || a.mul(&a.inv().map_err(|e| e.to_string())?).is_one());
    ok.then_some(()).ok_or_else(|| format!("a = {a}, b = {b}, c = {c}"))
}

fn leibniz<R: Rng>(rng: &mut R) -> Result<(), String> {
    let (a, b) = (random_ratfn(rng), random_ratfn(rng));
    for v in VARS {
        if (&a * &b).partial(v) != &(&a.partial(v) * &b) + &(&a * &b.partial(v)) {
            return Err(format!("d/d{v} of ({a})*({b})"));
        }
    }
    let sys = elkin_32("x2*u1");
    let lhs = sys.total_derivative(&(&a * &b), 1);
    let rhs = &(&sys.total_derivative(&a, 1) * &b) + &(&a * &sys.total_derivative(&b, 1));
    (lhs == rhs).then_some(()).ok_or_else(|| format!("D_t of ({a})*({b})"))
}

fn substitution<R: Rng>(rng: &mut R) -> Result<(), String> {
    let (a, b) = (random_poly(rng), random_poly(rng));
    let table: BTreeMap<VarId, RatFn> = [(VARS[0], random_ratfn(rng)), (VARS[2], random_poly(rng))].into();
    let sub = |h: &RatFn| h.substitute(&|v| table.get(&v).cloned()).map_err(|e| e.to_string());
    let (sa, sb) = (sub(&a)?, sub(&b)?);
    let mut ok = sub(&(&a + &b))? == &sa + &sb && sub(&(&a * &b))? == &sa * &sb;
    if !b.is_zero() && !sb.is_zero() {
        ok &= sub(&a.div(&b).map_err(|e| e.to_string())?)? == sa.div(&sb).map_err(|e| e.to_string())?;
    }
    ok.then_some(()).ok_or_else(|| format!("a = {a}, b = {b}"))
}

fn d_squared<R: Rng>(rng: &mut R) -> Result<(), String> {
    let (h, g) = (random_ratfn(rng), random_poly(rng));
    let ok = exterior_d(&d_function(&h)).is_zero()
        && exterior_d(&d_function(&g).scale(&h)) == d_function(&h).wedge(&d_function(&g));
    ok.then_some(()).ok_or_else(|| format!("h = {h}, g = {g}"))
}

fn canonical<R: Rng>(rng: &mut R) -> Result<(), String> {
    let a = random_ratfn(rng);
    let back = parse_expr(&a.to_string()).map_err(|e| e.to_string())?;
    let monic = a.is_zero() || a.den().leading_coeff() == Rational::from_integer(1.into());
    let ok = a.renormalize() == a && back == a && back.to_string() == a.to_string() && monic;
    ok.then_some(()).ok_or_else(|| format!("a = {a}"))
}

pub fn kernel_properties(cases: usize, seed: u64) -> Criterion {
    type Law = fn(&mut ChaCha8Rng) -> Result<(), String>;
    let laws: [(&str, Law); 5] = [
        ("field laws", field_laws),
        ("leibniz", leibniz),
        ("substitution homomorphism", substitution),
        ("d of d vanishes", d_squared),
        ("canonical form idempotent", canonical),
    ];
    let checks = laws
        .iter()
        .enumerate()
        .map(|(k, (name, law))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(k as u64));
            let r = (0..cases)
                .try_for_each(|i| law(&mut rng).map_err(|d| format!("case {i}: {d}")))
                .map(|()| format!("{cases} cases"));
            Check::from_result(*name, r)
        })
        .collect();
    Criterion { id: 8, title: "kernel properties", checks }
}

pub fn numerical_crosscheck(seeds: u64) -> Criterion {
    let opts = CrosscheckOptions::default();
    let mut checks = Vec::new();
    for fx in strict_fixtures() {
        for m in [&fx.forward, &fx.inverse] {
            let mut worst = 0.0f64;
            let mut err = None;
            for seed in 0..seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                match numeric_crosscheck(m, &opts, &mut rng) {
                    Ok(rep) if rep.passed => worst = worst.max(rep.max_residual),
                    Ok(rep) => {
                        err = Some(format!("seed {seed}: residual {:.3e}", rep.max_residual));
                        break;
                    }
                    Err(e) => {
                        err = Some(format!("seed {seed}: {e}"));
                        break;
                    }
                }
            }
            let r = match err {
                None => Ok(format!("max residual {worst:.3e} over {seeds} seeds")),
                Some(d) => Err(d),
            };
            checks.push(Check::from_result(format!("crosscheck {}", m.name), r));
        }
    }
    Criterion { id: 9, title: "numerical cross-check", checks }
}

/// Every criterion with the given budget.
pub fn all(order: usize, seed: u64, budget: &Budget, literal_display: bool) -> Vec<Criterion> {
    vec![
        fixture_verification(order),
        pullback_reproduction(order),
        factorization_reproduction(order, literal_display),
        theorem_checks(order, budget.nonaut_maps, seed),
        structure_equations(order),
        classification_table(budget.static_transforms, seed),
        scalar_control(seed),
        kernel_properties(budget.kernel_cases, seed),
        numerical_crosscheck(budget.crosscheck_seeds),
    ]
}
