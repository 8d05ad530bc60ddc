use std::collections::BTreeSet;

use jetfactor::classify::{classify_static, dynamic_class, ClassifyError, DynClass, Elkin32, ElkinTag};
use jetfactor::fixtures::{elkin_32, random_static_transform, system, ELKIN_32};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn normal_forms_have_distinct_tags_and_table_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut tags = BTreeSet::new();
    let mut classes = Vec::new();
    for (f3, e) in ELKIN_32.iter().zip(Elkin32::ALL) {
        let c = classify_static(&elkin_32(f3), &mut rng).unwrap();
        assert_eq!(c.tag, ElkinTag::N3S2(e));
        assert_eq!(c.tag.to_string(), *f3);
        tags.insert(c.tag);
        classes.push(dynamic_class(&c).unwrap());
    }
    assert_eq!(tags.len(), 5);
    use DynClass::*;
    assert_eq!(classes, vec![Class2, Class3, Class1, Class1, Class1]);
}

#[test]
fn random_static_transforms_keep_the_tag() {
    for f3 in ELKIN_32 {
        let sys = elkin_32(f3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let want = classify_static(&sys, &mut rng).unwrap().tag;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let moved = random_static_transform(&sys, &mut rng);
            let got = classify_static(&moved, &mut rng).unwrap_or_else(|e| panic!("{f3} seed {seed}: {e}"));
            assert_eq!(got.tag, want, "{f3} seed {seed}");
        }
    }
}

#[test]
fn small_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases: [(usize, usize, &[&str], ElkinTag); 7] = [
        (2, 1, &["0", "0"], ElkinTag::Zero),
        (2, 1, &["1", "0"], ElkinTag::Constant),
        (2, 2, &["u1", "u2"], ElkinTag::FullRank),
        (2, 1, &["u1", "0"], ElkinTag::N2U1Zero),
        (2, 1, &["u1", "1"], ElkinTag::N2U1One),
        (3, 1, &["u1", "x1", "x2"], ElkinTag::N3U1X1X2),
        (3, 1, &["u1", "x1", "1"], ElkinTag::N3U1X1One),
    ];
    for (n, s, f, tag) in cases {
        let c = classify_static(&system(n, s, f), &mut rng).unwrap();
        assert_eq!(c.tag, tag, "{f:?}");
        assert!(matches!(dynamic_class(&c), Err(ClassifyError::OutOfTable(_))));
    }
}

#[test]
fn limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let four = system(4, 1, &["u1", "x1", "x2", "x3"]);
    assert!(matches!(classify_static(&four, &mut rng), Err(ClassifyError::TooManyStates(4))));
    let nonaffine = system(2, 1, &["u1^2", "x1"]);
    assert!(matches!(classify_static(&nonaffine, &mut rng), Err(ClassifyError::NotAffine(_))));
}
