use jetfactor::coframes::Coframe;
use jetfactor::equivalence::pullback_matrix;
use jetfactor::fixtures::{self, elkin_32, system};
use jetfactor::sysio::{
    parse_document, parse_expr, parse_map, parse_map_with, parse_matrix, parse_system, parse_system_with,
    serialize_document, serialize_map, serialize_matrix, serialize_system, ParseOptions, SysioError,
};

#[test]
fn systems_round_trip() {
    for sys in [elkin_32("1+x2*u1"), system(2, 1, &["u1/(1 + x2^2)", "x1 - 3/4"]), system(1, 1, &["-u1^2"])] {
        let text = serialize_system(&sys);
        let back = parse_system(&text).unwrap();
        assert_eq!(back, sys);
        assert_eq!(serialize_system(&back), text);
    }
}

#[test]
fn maps_round_trip() {
    for fx in fixtures::builtin_fixtures() {
        for m in [&fx.forward, &fx.inverse] {
            let text = serialize_map(m);
            let back = parse_map(&text, &m.src, &m.tgt).unwrap();
            assert_eq!(back.y, m.y);
            assert_eq!(back.v, m.v);
            assert_eq!(serialize_map(&back), text);
        }
    }
}

#[test]
fn pullback_matrix_round_trips() {
    let m = fixtures::phi().forward;
    let a = pullback_matrix(&m, &Coframe::auto(&m.src, 5), &Coframe::auto(&m.tgt, 4), 4).unwrap();
    let text = serialize_matrix(&a);
    assert!(text.contains("0, x1, -1"), "{text}");
    assert!(text.contains("zero"));
    let back = parse_matrix(&text).unwrap();
    assert_eq!(back, a);
    assert_eq!(serialize_matrix(&back), text);
}

#[test]
fn documents_are_canonical() {
    let text = "# comment\r\nsystem demo {\r\n  states = 1 controls = 1\n  f1 = u1 + 0*x1\n}\n";
    let doc = parse_document(text).unwrap();
    let once = serialize_document(&doc);
    assert_eq!(serialize_document(&parse_document(&once).unwrap()), once);
}

#[test]
fn expression_spellings() {
    let e = |s: &str| parse_expr(s).unwrap();
    assert_eq!(e("D(u1, 2)"), e("u1''"));
    assert_eq!(e("-x1^2"), e("-(x1^2)"));
    assert_eq!(e("2^-1*x1"), e("x1/2"));
    assert_eq!(e("(x1 + x2)/(x2 + x1)"), e("1"));
}

#[test]
fn syntax_errors_carry_positions() {
    let err = parse_system("system {\n  states = 2\n  controls = 1\n  f1 = u1 +\n}\n").unwrap_err();
    assert!(matches!(err, SysioError::Syntax { .. }));
    assert_eq!(err.position(), Some((5, 1)));
    let err = parse_expr("x1 $ 2").unwrap_err();
    assert_eq!(err.position(), Some((1, 4)));
    let err = parse_expr("y1").unwrap_err();
    assert_eq!(err.position(), Some((1, 1)));
}

#[test]
fn semantic_errors() {
    let err = parse_system("system { states = 1 controls = 1 f1 = 1/0 }").unwrap_err();
    assert!(matches!(err, SysioError::Semantic { .. }));
    let err = parse_system("system { states = 2 controls = 1 f1 = u1 }").unwrap_err();
    assert!(matches!(err, SysioError::ArityMismatch { expected: 2, got: 1, .. }));
    let err = parse_system("system { states = 1 controls = 1 f1 = x2 }").unwrap_err();
    assert!(matches!(err, SysioError::Semantic { .. }));
    let err = parse_system("map { y1 = x1 }").unwrap_err();
    assert!(matches!(err, SysioError::MissingSection(_)));
}

#[test]
fn unknown_keys_warn_unless_strict() {
    let text = "system { states = 1 controls = 1 f1 = u1 colour = \"red\" }";
    let p = parse_system_with(text, ParseOptions::default()).unwrap();
    assert_eq!(p.warnings.len(), 1);
    assert!(parse_system_with(text, ParseOptions { strict: true }).is_err());
}

#[test]
fn map_arity_is_checked() {
    let src = elkin_32("x2*u1");
    let tgt = elkin_32("x2");
    let err = parse_map("map { y1 = x1 y2 = x2 y3 = x3 v1 = u1 }", &src, &tgt).unwrap_err();
    assert!(matches!(err, SysioError::ArityMismatch { expected: 2, got: 1, .. }));
    let err = parse_map("map { y4 = x1 }", &src, &tgt).unwrap_err();
    assert!(matches!(err, SysioError::ArityMismatch { .. }));
    let ok = parse_map_with("map phi { y1 = x1*x2 - x3 y2 = u2 y3 = x2 v1 = x1*u2 v2 = D(u2,1) }", &src, &tgt, ParseOptions { strict: true })
        .unwrap();
    assert_eq!(ok.value.name, "phi");
    assert_eq!(ok.value.y, fixtures::phi().forward.y);
}
