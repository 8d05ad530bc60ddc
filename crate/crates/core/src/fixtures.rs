//! Built-in systems and equivalence pairs, and generators for random
//! static and nonautonomous static transformations.

use rand::Rng;

use crate::equivalence::EquivMap;
use crate::jetcontrol::ControlSystem;
use crate::symkernel::linalg;
use crate::sysio::parse_expr;
use crate::{RatFn, Rational, VarId};

fn e(text: &str) -> RatFn {
    parse_expr(text).unwrap_or_else(|err| panic!("fixture expression {text:?}: {err}"))
}

fn exprs(texts: &[&str]) -> Vec<RatFn> {
    texts.iter().map(|t| e(t)).collect()
}

/// `ẋ₁ = u₁, ẋ₂ = u₂, ẋ₃ = f`.
pub fn elkin_32(f3: &str) -> ControlSystem {
    ControlSystem::new(3, 2, exprs(&["u1", "u2", f3])).expect("normal form")
}

/// Right-hand sides of the five three-state, two-control normal forms.
pub const ELKIN_32: [&str; 5] = ["0", "1", "x2", "x2*u1", "1+x2*u1"];

pub fn system(n: usize, s: usize, f: &[&str]) -> ControlSystem {
    ControlSystem::new(n, s, exprs(f)).expect("fixture system")
}

/// A forward map with its inverse.
#[derive(Clone, Debug)]
pub struct FixturePair {
    pub name: &'static str,
    pub forward: EquivMap,
    pub inverse: EquivMap,
    /// Both directions use control derivatives (`J = K = 0` here).
    pub strict: bool,
}

fn pair(
    name: &'static str,
    src: &ControlSystem,
    tgt: &ControlSystem,
    fwd: (&[&str], &[&str]),
    inv: (&[&str], &[&str]),
    strict: bool,
) -> FixturePair {
    let forward = EquivMap::new(name, src.clone(), tgt.clone(), exprs(fwd.0), exprs(fwd.1)).expect("forward arity");
    let inv_name = format!("{name}^-1");
    let inverse =
        EquivMap::new(inv_name, tgt.clone(), src.clone(), exprs(inv.0), exprs(inv.1)).expect("inverse arity");
    FixturePair { name, forward, inverse, strict }
}

pub fn phi() -> FixturePair {
    pair(
        "phi",
        &elkin_32("x2*u1"),
        &elkin_32("x2"),
        (&["x1*x2 - x3", "u2", "x2"], &["x1*u2", "u2'"]),
        (&["u1/x2", "x3", "x3*u1/x2 - x1"], &["(x2*u1' - u1*u2)/x2^2", "x2"]),
        true,
    )
}

pub fn psi() -> FixturePair {
    pair(
        "psi",
        &elkin_32("1+x2*u1"),
        &elkin_32("x2"),
        (&["x3 - x1*x2", "u2", "x2"], &["1 - x1*u2", "u2'"]),
        (&["(1 - u1)/x2", "x3", "x1 + x3*(1 - u1)/x2"], &["(u1*u2 - u2 - x2*u1')/x2^2", "x2"]),
        true,
    )
}

pub fn theta() -> FixturePair {
    let y: &[&str] = &["1/u2 - x1", "x2", "x2/u2 - x3"];
    let v: &[&str] = &["-u1 - u2'/u2^2", "u2"];
    pair("theta", &elkin_32("x2*u1"), &elkin_32("1+x2*u1"), (y, v), (y, v), true)
}

pub fn decoupling() -> FixturePair {
    pair(
        "decoupling",
        &elkin_32("x2*u1"),
        &elkin_32("x2"),
        (&["x3 - x1*x2", "u2", "x2"], &["-x1*u2", "u2'"]),
        (&["-u1/x2", "x3", "x1 - x3*u1/x2"], &["(u1*u2 - x2*u1')/x2^2", "x2"]),
        true,
    )
}

/// Total prolongation of `ẋ = u` with two states.
pub fn prolongation() -> FixturePair {
    pair(
        "prolongation",
        &system(2, 2, &["u1", "u2"]),
        &system(4, 2, &["x3", "x4", "u1", "u2"]),
        (&["x1", "x2", "u1", "u2"], &["u1'", "u2'"]),
        (&["x1", "x2"], &["x3", "x4"]),
        false,
    )
}

/// The explicit equivalences between the normal forms plus the two
/// introductory examples.
pub fn builtin_fixtures() -> Vec<FixturePair> {
    vec![phi(), psi(), theta(), decoupling(), prolongation()]
}

/// Static single-control pairs.
pub fn scalar_fixtures() -> Vec<FixturePair> {
    let line = system(1, 1, &["u1"]);
    let chain = system(2, 1, &["u1", "x1"]);
    let brunovsky = system(2, 1, &["x2", "u1"]);
    vec![
        pair("scalar-identity", &line, &line, (&["x1"], &["u1"]), (&["x1"], &["u1"]), false),
        pair("scalar-chain", &chain, &brunovsky, (&["3*x2", "3*x1"], &["3*u1"]), (&["x2/3", "x1/3"], &["u1/3"]), false),
    ]
}

/// `y = x + u`, `v = u + u̇` on `ẋ = u` with a wrong inverse.
pub fn scalar_negative() -> FixturePair {
    let line = system(1, 1, &["u1"]);
    pair("scalar-broken", &line, &line, (&["x1 + u1"], &["u1 + u1'"]), (&["x1"], &["u1"]), false)
}

fn small<R: Rng>(rng: &mut R) -> Rational {
    Rational::from_integer(rng.random_range(-3i64..=3).into())
}

/// Random invertible matrix with small integer entries, and its inverse.
pub fn random_invertible<R: Rng>(k: usize, rng: &mut R) -> (Vec<Vec<RatFn>>, Vec<Vec<RatFn>>) {
    loop {
        let m: Vec<Vec<RatFn>> = (0..k).map(|_| (0..k).map(|_| RatFn::constant(small(rng))).collect()).collect();
        if let Some(inv) = linalg::invert(&m) {
            return (m, inv);
        }
    }
}

fn apply(m: &[Vec<RatFn>], v: &[RatFn]) -> Vec<RatFn> {
    m.iter().map(|row| row.iter().zip(v).fold(RatFn::zero(), |acc, (a, b)| acc + a * b)).collect()
}

fn vars(f: impl Fn(usize) -> VarId, k: usize) -> Vec<RatFn> {
    (1..=k).map(|i| RatFn::var(f(i))).collect()
}

/// Rewrite `sys` along `x = xs(y, v)`, `u = us(y, v)` and push the rates
/// forward through `ẏ = rate(x, u)`.
fn transport(sys: &ControlSystem, rate: &[RatFn], xs: &[RatFn], us: &[RatFn]) -> ControlSystem {
    let bind = |v: VarId| match v {
        VarId::State(i) => Some(xs[i as usize - 1].clone()),
        VarId::Control { index, order: 0 } => Some(us[index as usize - 1].clone()),
        _ => None,
    };
    let f = rate.iter().map(|r| r.substitute(&bind).expect("substitution stays finite")).collect();
    ControlSystem::new(sys.n(), sys.s(), f).expect("transformed system")
}

/// `y = P x`, `u = a + H x + B v` with random rational data; returns the
/// system in `(y, v)` coordinates.
pub fn random_static_transform<R: Rng>(sys: &ControlSystem, rng: &mut R) -> ControlSystem {
    let (n, s) = (sys.n(), sys.s());
    let (p, pinv) = random_invertible(n, rng);
    let (b, _) = random_invertible(s, rng);
    let y = vars(VarId::x, n);
    let v = vars(VarId::u, s);
    let x_of_y = apply(&pinv, &y);
    let bv = apply(&b, &v);
    let u_of: Vec<RatFn> = (0..s)
        .map(|j| {
            let hx = x_of_y.iter().fold(RatFn::zero(), |acc, xi| acc + RatFn::constant(small(rng)) * xi);
            RatFn::constant(small(rng)) + hx + &bv[j]
        })
        .collect();
    let rate = apply(&p, sys.f());
    transport(sys, &rate, &x_of_y, &u_of)
}

/// `y = P x + t c`, `v = Q u + H x` from `sys` to the system it induces.
pub fn random_nonaut_static<R: Rng>(sys: &ControlSystem, rng: &mut R) -> FixturePair {
    let (n, s) = (sys.n(), sys.s());
    let (p, pinv) = random_invertible(n, rng);
    let (q, qinv) = random_invertible(s, rng);
    let c: Vec<RatFn> = (0..n).map(|_| RatFn::constant(small(rng))).collect();
    let h: Vec<Vec<RatFn>> = (0..s).map(|_| (0..n).map(|_| RatFn::constant(small(rng))).collect()).collect();
    let t = RatFn::var(VarId::Time);
    let x = vars(VarId::x, n);
    let u = vars(VarId::u, s);

    let y_fwd: Vec<RatFn> = apply(&p, &x).into_iter().zip(&c).map(|(a, ci)| a + &t * ci).collect();
    let v_fwd: Vec<RatFn> = apply(&q, &u).into_iter().zip(apply(&h, &x)).map(|(a, b)| a + b).collect();

    // Inverse in target coordinates, written with x/u as the target's y/v.
    let shifted: Vec<RatFn> = x.iter().zip(&c).map(|(yi, ci)| yi - &(&t * ci)).collect();
    let x_inv = apply(&pinv, &shifted);
    let hx = apply(&h, &x_inv);
    let v_minus: Vec<RatFn> = u.iter().zip(&hx).map(|(a, b)| a - b).collect();
    let u_inv = apply(&qinv, &v_minus);

    let rate: Vec<RatFn> = apply(&p, sys.f()).into_iter().zip(&c).map(|(a, ci)| a + ci).collect();
    let tgt = transport(sys, &rate, &x_inv, &u_inv);
    let forward = EquivMap::new("nonaut-static", sys.clone(), tgt.clone(), y_fwd, v_fwd).expect("arity");
    let inverse = EquivMap::new("nonaut-static^-1", tgt, sys.clone(), x_inv, u_inv).expect("arity");
    FixturePair { name: "nonaut-static", forward, inverse, strict: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::verify_pair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_nonaut_static_pairs_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fx = random_nonaut_static(&elkin_32("x2*u1"), &mut rng);
        assert!(verify_pair(&fx.forward, &fx.inverse, 2).unwrap().passed());
    }
}
