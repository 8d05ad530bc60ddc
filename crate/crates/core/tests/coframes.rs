use jetfactor::blocks::Slot;
use jetfactor::coframes::{exterior_d, Coframe, CoframeError, FrameKind, OneForm};
use jetfactor::fixtures::{elkin_32, system, ELKIN_32};
use jetfactor::sysio::parse_expr;
use jetfactor::VarId;

#[test]
fn structure_equations_hold_on_all_normal_forms() {
    for f3 in ELKIN_32 {
        let sys = elkin_32(f3);
        let contact = Coframe::contact(&sys, 4);
        let adapted = Coframe::adapted_3x2(&sys, 4).unwrap();
        assert_eq!(adapted.kind(), FrameKind::Adapted3x2);
        for frame in [&contact, &adapted] {
            let rep = frame.check_structure().unwrap_or_else(|e| panic!("{f3}: {e}"));
            assert_eq!(rep.checked.len(), 3 + 2 * 3, "{f3}");
        }
    }
}

#[test]
fn adapted_third_form_is_closed_modulo_level_zero() {
    let sys = elkin_32("x2*u1");
    let frame = Coframe::adapted_3x2(&sys, 4).unwrap();
    let d = frame.express_two(&exterior_d(frame.form(Slot::new(0, 3)))).unwrap();
    assert!(frame.reduce_mod(&d, &[0]).is_empty());
    let w = frame.form(Slot::new(0, 3));
    assert_eq!(w.coeff(VarId::x(1)), -parse_expr("x2").unwrap());
    assert!(w.coeff(VarId::Time).is_zero());
}

#[test]
fn contact_frame_on_other_shapes() {
    let chain = system(2, 1, &["u1", "x1"]);
    Coframe::contact(&chain, 3).check_structure().unwrap();
    let rational = system(2, 2, &["u1/(1 + x2^2)", "u2"]);
    Coframe::contact(&rational, 3).check_structure().unwrap();
}

#[test]
fn adapted_frame_needs_normal_form() {
    let sys = system(3, 2, &["u2", "u1", "x2*u1"]);
    assert!(matches!(Coframe::adapted_3x2(&sys, 3), Err(CoframeError::NotNormalizedForm)));
}

#[test]
fn perturbed_form_breaks_structure() {
    let sys = elkin_32("x2");
    let frame = Coframe::contact(&sys, 3);
    let mut forms: Vec<OneForm> = frame.forms().to_vec();
    let i = frame.layout().index(Slot::new(0, 1));
    forms[i] = forms[i].add(&OneForm::basis(VarId::u(1)).scale(&parse_expr("u2").unwrap()));
    let custom = Coframe::from_forms(&sys, frame.layout(), forms).unwrap();
    assert!(matches!(custom.check_structure(), Err(CoframeError::StructureViolation { .. })));
}

#[test]
fn low_truncation_is_refused() {
    let frame = Coframe::contact(&elkin_32("0"), 1);
    assert!(matches!(frame.check_structure(), Err(CoframeError::LevelTooLow)));
}
