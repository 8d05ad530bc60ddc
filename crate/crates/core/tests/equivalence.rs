use jetfactor::blocks::{BlockMatrix, Slot};
use jetfactor::coframes::Coframe;
use jetfactor::equivalence::{
    block_rank, check_arepeats, check_nonaut_static_pair, compose_pullbacks, pullback_matrix, verify_forward,
    verify_pair, verify_scalar_theorem, EquivError, EquivMap,
};
use jetfactor::fixtures::{self, elkin_32, FixturePair};
use jetfactor::sysio::parse_expr;
use jetfactor::RatFn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn e(s: &str) -> RatFn {
    parse_expr(s).unwrap()
}

fn matrix(m: &EquivMap, levels: usize) -> BlockMatrix {
    let j = m.detect_order().max(-1);
    let src = Coframe::auto(&m.src, (levels as i32 + j + 1).max(levels as i32) as usize);
    let tgt = Coframe::auto(&m.tgt, levels);
    pullback_matrix(m, &src, &tgt, levels).unwrap()
}

#[test]
fn builtin_pairs_verify_to_order_four() {
    for fx in fixtures::builtin_fixtures() {
        let rep = verify_pair(&fx.forward, &fx.inverse, 4).unwrap();
        assert!(rep.passed(), "{}: {:?}", fx.name, rep.residuals);
        assert!(rep.residuals.is_empty(), "{}", fx.name);
        if fx.strict {
            assert_eq!((fx.forward.detect_order(), fx.inverse.detect_order()), (0, 0), "{}", fx.name);
        }
    }
}

#[test]
fn prolongation_orders() {
    let fx = fixtures::prolongation();
    assert_eq!((fx.forward.detect_order(), fx.inverse.detect_order()), (0, -1));
}

#[test]
fn corrupted_map_fails_forward() {
    let mut fx = fixtures::phi();
    fx.forward.v[0] = e("x1*u2 + 1");
    let rep = verify_forward(&fx.forward).unwrap();
    assert!(!rep.forward_ok);
    assert_eq!(rep.residuals.len(), 1);
}

#[test]
fn phi_pullback_rows() {
    let a = matrix(&fixtures::phi().forward, 4);
    let row = |b: i32, c: usize| -> Vec<RatFn> {
        let i = a.rows.index(Slot::new(b, c));
        a.entries()[i][1..=7].to_vec()
    };
    let v = |xs: &[&str]| xs.iter().map(|s| e(s)).collect::<Vec<_>>();
    assert_eq!(row(0, 1), v(&["0", "x1", "-1", "0", "0", "0", "0"]));
    assert_eq!(row(0, 2), v(&["0", "0", "0", "0", "1", "0", "0"]));
    assert_eq!(row(0, 3), v(&["0", "1", "0", "0", "0", "0", "0"]));
    assert_eq!(row(1, 1), v(&["u2", "0", "0", "0", "x1", "0", "0"]));
    assert_eq!(row(1, 2), v(&["0", "0", "0", "0", "0", "0", "1"]));
    assert_eq!(row(2, 1), v(&["u2'", "0", "0", "u2", "u1", "0", "x1"]));
    for i in 1..a.rows.dim() {
        assert!(a.entry(i, 0).is_zero());
    }
}

#[test]
fn pullbacks_compose_to_identity() {
    let fx = fixtures::phi();
    let a = matrix(&fx.forward, 6);
    let ainv = matrix(&fx.inverse, 4);
    let prod = compose_pullbacks(&fx.forward, &a, &ainv).unwrap();
    let id = BlockMatrix::identity(prod.rows);
    assert_eq!(prod.truncate_cols(prod.rows.levels), id);
}

fn strict() -> Vec<FixturePair> {
    fixtures::builtin_fixtures().into_iter().filter(|f| f.strict).collect()
}

#[test]
fn arepeats_and_ranks_on_strict_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for fx in strict() {
        for m in [&fx.forward, &fx.inverse] {
            let a = matrix(m, 4);
            let rep = check_arepeats(&a, Some(3)).unwrap();
            assert_eq!(rep.checked, vec![1, 2, 3], "{}", m.name);
            assert_eq!(block_rank(&a, 0, 1, &mut rng), 1, "{}", m.name);
            assert_eq!(block_rank(&a, 1, 2, &mut rng), 1, "{}", m.name);
        }
    }
}

#[test]
fn static_fixtures_have_rank_zero_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fx = fixtures::random_nonaut_static(&elkin_32("x2*u1"), &mut rng);
    let a = matrix(&fx.forward, 3);
    assert_eq!(block_rank(&a, 0, 1, &mut rng), 0);
    assert_eq!(block_rank(&a, 1, 2, &mut rng), 0);
}

#[test]
fn nonaut_static_pairs_are_lower_triangular_both_ways() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for f3 in fixtures::ELKIN_32 {
        for _ in 0..2 {
            let fx = fixtures::random_nonaut_static(&elkin_32(f3), &mut rng);
            assert!(verify_pair(&fx.forward, &fx.inverse, 2).unwrap().passed());
            let a = matrix(&fx.forward, 3);
            let ainv = matrix(&fx.inverse, 3);
            let rep = check_nonaut_static_pair(&a, &ainv);
            assert!(rep.holds() && rep.forward_lower);
        }
    }
}

#[test]
fn nonaut_static_biconditional_rejects_strict() {
    let fx = fixtures::phi();
    let rep = check_nonaut_static_pair(&matrix(&fx.forward, 3), &matrix(&fx.inverse, 3));
    assert!(rep.holds());
    assert!(!rep.forward_lower);
}

#[test]
fn scalar_theorem_on_static_fixtures() {
    for fx in fixtures::scalar_fixtures() {
        let rep = verify_scalar_theorem(&fx.forward, &fx.inverse, 3).unwrap();
        assert!(rep.passed(), "{}", fx.name);
    }
    let bad = fixtures::scalar_negative();
    let rep = verify_scalar_theorem(&bad.forward, &bad.inverse, 3).unwrap();
    assert!(!rep.verified);
}

#[test]
fn scalar_theorem_not_applicable_across_state_counts() {
    let fx = fixtures::prolongation();
    let one = fixtures::system(1, 1, &["u1"]);
    let two = fixtures::system(2, 1, &["x2", "u1"]);
    let m = EquivMap::new("p", one.clone(), two.clone(), vec![e("x1"), e("u1")], vec![e("u1'")]).unwrap();
    let minv = EquivMap::new("q", two, one, vec![e("x1")], vec![e("x2")]).unwrap();
    assert!(matches!(verify_scalar_theorem(&m, &minv, 2), Err(EquivError::NotApplicable(_))));
    assert_eq!(fx.forward.src.s(), 2);
}

#[test]
fn truncation_is_checked() {
    let m = fixtures::phi().forward;
    let src = Coframe::auto(&m.src, 3);
    let tgt = Coframe::auto(&m.tgt, 3);
    assert!(matches!(pullback_matrix(&m, &src, &tgt, 3), Err(EquivError::TruncationExceeded { need: 4, have: 3 })));
}
