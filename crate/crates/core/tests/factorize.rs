use jetfactor::blocks::{BlockLayout, BlockMatrix, Slot};
use jetfactor::coframes::{Coframe, OneForm};
use jetfactor::equivalence::{pullback_matrix, EquivMap};
use jetfactor::factorize::{
    build_s, check_gnice, factor_jk0, gnice_matrix, validate_nonaut_static, FactorError, GnicePattern,
};
use jetfactor::fixtures::{self, elkin_32};
use jetfactor::sysio::parse_expr;
use jetfactor::RatFn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn e(s: &str) -> RatFn {
    parse_expr(s).unwrap()
}

fn matrix(m: &EquivMap, levels: usize) -> BlockMatrix {
    let src = Coframe::auto(&m.src, levels + 1);
    let tgt = Coframe::auto(&m.tgt, levels);
    pullback_matrix(m, &src, &tgt, levels).unwrap()
}

fn row(m: &BlockMatrix, b: i32, c: usize, upto: usize) -> Vec<RatFn> {
    m.entries()[m.rows.index(Slot::new(b, c))][1..=upto].to_vec()
}

fn v(xs: &[&str]) -> Vec<RatFn> {
    xs.iter().map(|s| e(s)).collect()
}

#[test]
fn phi_factors_with_identity_g() {
    let a = matrix(&fixtures::phi().forward, 4);
    let f = factor_jk0(&a).unwrap();
    assert_eq!(f.pattern, GnicePattern::identity());
    assert_eq!(f.big_g.matrix.entries(), BlockMatrix::identity(a.cols).entries());
    let g = &f.g.matrix;
    assert_eq!(row(g, 0, 1, 7), v(&["0", "x1", "-1", "0", "0", "0", "0"]));
    assert_eq!(row(g, 0, 2, 7), v(&["1", "0", "0", "0", "0", "0", "0"]));
    assert_eq!(row(g, 0, 3, 7), v(&["0", "1", "0", "0", "0", "0", "0"]));
    assert_eq!(row(g, 1, 1, 7), v(&["x1", "0", "0", "u2", "0", "0", "0"]));
    assert_eq!(row(g, 1, 2, 7), v(&["0", "0", "0", "0", "1", "0", "0"]));
    assert_eq!(row(g, 2, 1, 7), v(&["u1", "0", "0", "u2'", "x1", "u2", "0"]));
    assert_eq!(row(g, 2, 2, 7), v(&["0", "0", "0", "0", "0", "0", "1"]));
    assert_eq!(f.product(), a.truncate_cols(5).with_band(None));
    assert!(f.g.structure_preserving);
}

/// The displayed `g` writes `-x1*u2' - u1` and `u2*u2'` in row `(2,1)`.
/// With `G = I` and `S` fixed, `g = A·S^T` is forced, so that row cannot
/// reproduce `A`.
#[test]
fn displayed_g_row_breaks_the_product() {
    let a = matrix(&fixtures::phi().forward, 4);
    let f = factor_jk0(&a).unwrap();
    let mut shown = f.g.matrix.clone();
    let r = Slot::new(2, 1);
    shown.set(r, Slot::new(0, 1), e("-x1*u2' - u1"));
    shown.set(r, Slot::new(1, 1), e("u2*u2'"));
    assert_ne!(shown.entries(), f.g.matrix.entries());
    let product = shown.with_band(None).mul(&f.s).mul(&f.big_g.matrix);
    assert_ne!(product.entries(), a.truncate_cols(5).entries());
}

#[test]
fn strict_fixtures_reconstruct() {
    for fx in fixtures::builtin_fixtures().into_iter().filter(|f| f.strict) {
        for m in [&fx.forward] {
            for levels in [2, 3, 4] {
                let a = matrix(m, levels);
                let f = factor_jk0(&a).unwrap_or_else(|err| panic!("{} at N={levels}: {err}", m.name));
                assert_eq!(f.product(), a.truncate_cols(levels + 1).with_band(None), "{}", m.name);
                assert_eq!(check_gnice(&f.big_g.matrix).unwrap(), f.pattern, "{}", m.name);
                assert!(f.g.matrix.is_block_lower_triangular());
            }
        }
    }
}

#[test]
fn theta_has_nontrivial_pattern() {
    let a = matrix(&fixtures::theta().forward, 3);
    let f = factor_jk0(&a).unwrap();
    assert_ne!(f.pattern, GnicePattern::identity());
}

#[test]
fn static_map_is_rank_mismatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let fx = fixtures::random_nonaut_static(&elkin_32("x2*u1"), &mut rng);
    let a = matrix(&fx.forward, 3);
    assert!(matches!(factor_jk0(&a), Err(FactorError::RankMismatch { rank: 0, .. })));
}

#[test]
fn short_matrices_are_truncation_errors() {
    let a = matrix(&fixtures::phi().forward, 3).truncate_cols(3);
    assert!(matches!(factor_jk0(&a), Err(FactorError::TruncationExceeded { need: 4, have: 3 })));
}

#[test]
fn gnice_pattern_shape() {
    let p = GnicePattern { p0: e("x1"), p1: e("u2"), q: e("x3") };
    let l = BlockLayout::new(3, 2, 4);
    let g = gnice_matrix(l, &p);
    assert_eq!(g.get(Slot::new(0, 2), Slot::new(0, 1)), &e("x1"));
    assert_eq!(g.get(Slot::new(3, 2), Slot::new(3, 1)), &e("x1"));
    assert_eq!(g.get(Slot::new(4, 2), Slot::new(3, 1)), &e("u2 + 3*x3"));
    assert_eq!(check_gnice(&g).unwrap(), p);
}

#[test]
fn stalled_progression_is_rejected() {
    let p = GnicePattern { p0: RatFn::zero(), p1: e("x1"), q: e("1") };
    let mut g = gnice_matrix(BlockLayout::new(3, 2, 3), &p);
    g.set(Slot::new(3, 2), Slot::new(2, 1), e("x1 + 1"));
    match check_gnice(&g) {
        Err(FactorError::PatternViolation { row, col, .. }) => {
            assert_eq!((row, col), (Slot::new(3, 2), Slot::new(2, 1)));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn s_rows_hit_distinct_columns() {
    let s = build_s(3, 3);
    assert_eq!(s.mul(&s.transpose()), BlockMatrix::identity(s.rows));
    assert!(s.get(Slot::new(0, 1), Slot::new(1, 2)).is_one());
    assert!(s.get(Slot::new(2, 1), Slot::new(1, 1)).is_one());
    assert!(s.get(Slot::new(2, 2), Slot::new(3, 2)).is_one());
}

fn rotated_frame(levels: usize) -> Coframe {
    let sys = elkin_32("x2*u1");
    let base = Coframe::auto(&sys, levels + 1);
    let s = build_s(3, levels);
    let forms: Vec<OneForm> = s
        .entries()
        .iter()
        .map(|r| {
            let j = r.iter().position(RatFn::is_one).unwrap();
            base.forms()[j].clone()
        })
        .collect();
    Coframe::from_forms(&sys, s.rows, forms).unwrap()
}

#[test]
fn identity_validates() {
    let frame = Coframe::auto(&elkin_32("x2*u1"), 3);
    let id = BlockMatrix::identity(frame.layout());
    let rep = validate_nonaut_static(&id, &frame).unwrap();
    assert!(!rep.nice.checked.is_empty());
}

#[test]
fn phi_g_validates_on_rotated_frame() {
    let a = matrix(&fixtures::phi().forward, 3);
    let f = factor_jk0(&a).unwrap();
    let frame = rotated_frame(3);
    let rep = validate_nonaut_static(&f.g.matrix, &frame).unwrap();
    assert!(!rep.nice.checked.is_empty());
}

#[test]
fn drifting_diagonal_is_rejected() {
    let frame = Coframe::auto(&elkin_32("x2*u1"), 3);
    let mut m = BlockMatrix::identity(frame.layout());
    m.set(Slot::new(2, 1), Slot::new(2, 1), e("2"));
    assert!(matches!(validate_nonaut_static(&m, &frame), Err(FactorError::DiagonalDrift { i: 2 })));
}

/// Inverse maps place the `A^1_2` pivot in the first column; the
/// factorization needs it in the second.
#[test]
fn inverse_pivots() {
    for fx in fixtures::builtin_fixtures().into_iter().filter(|f| f.strict) {
        let a = matrix(&fx.inverse, 3);
        match factor_jk0(&a) {
            Ok(f) => assert_eq!(f.product(), a.truncate_cols(4).with_band(None)),
            Err(err) => {
                eprintln!("{}: {err}", fx.inverse.name);
                assert!(matches!(err, FactorError::PivotVanishes(_)));
            }
        }
    }
}
