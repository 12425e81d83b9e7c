use deladas_core::experiments::{self, MATHS};
use deladas_core::lang::ast::{Decl, ExprAst};
use deladas_core::lang::model::*;
use deladas_core::lang::{self, lexer, parser, pretty};

fn split_maths() -> (&'static str, &'static str) {
    let at = MATHS.find("// Hosts and constraints.").unwrap();
    (&MATHS[..at], &MATHS[at..])
}

fn parse(src: &str) -> deladas_core::lang::ast::SourceFile {
    parser::parse(&lexer::tokenize(src).unwrap()).unwrap()
}

#[test]
fn component_declarations_parse() {
    let (decls, _) = split_maths();
    let ast = parse(decls);
    let count = |f: fn(&Decl) -> bool| ast.decls.iter().filter(|d| f(d)).count();
    assert_eq!(count(|d| matches!(d, Decl::Interface(_))), 3);
    assert_eq!(count(|d| matches!(d, Decl::Template(_))), 1);
    assert_eq!(count(|d| matches!(d, Decl::ComponentType(_))), 3);
    assert_eq!(ast.decls.len(), 7);
}

#[test]
fn hosts_and_constraints_parse() {
    let (_, hosts) = split_maths();
    let ast = parse(hosts);
    let host_templates = ast.decls.iter().filter(|d| matches!(d, Decl::HostTemplate(_))).count();
    let host_count = ast.decls.iter().filter(|d| matches!(d, Decl::Host(_))).count();
    assert_eq!(host_templates, 2);
    assert_eq!(host_count, 10);
    let sets: Vec<_> = ast
        .decls
        .iter()
        .filter_map(|d| match d {
            Decl::ConstraintSet(c) => Some(c),
            _ => None,
        })
        .collect();
    assert_eq!(sets.len(), 1);
    let Some(ExprAst::And(conjuncts)) = &sets[0].body else {
        panic!("expected a conjunction")
    };
    assert_eq!(conjuncts.len(), 4);
}

#[test]
fn maths_service_resolves_with_inherited_structure() {
    let dsd = experiments::maths();
    let ms = dsd.component_type("MathsService").unwrap();
    assert_eq!(ms.provides, vec!["IMathsService".to_string()]);
    assert_eq!(
        ms.requires,
        vec![
            Port {
                name: "multiplication".into(),
                interface: "IMultiplicationService".into()
            },
            Port {
                name: "addition".into(),
                interface: "IAdditionService".into()
            },
        ]
    );
    let vendor = ms.property("vendor").unwrap();
    assert_eq!(vendor.kind, PropertyKind::Constant);
    assert_eq!(vendor.binding, PropertyBinding::Literal(Literal::Str("CalculusSoftware".into())));
    let accuracy = ms.property("accuracy").unwrap();
    assert_eq!(accuracy.binding, PropertyBinding::Literal(Literal::Int(2)));
    let qps = ms.property("queriesPerSecond").unwrap();
    assert_eq!(qps.kind, PropertyKind::Dynamic);
    assert_eq!(
        qps.binding,
        PropertyBinding::ProvidedBy(MethodRef {
            object: "mathsServiceImpl".into(),
            method: "qps".into()
        })
    );
    assert_eq!(ms.instantiate.class, "com.math.MathsService");
    assert_eq!(ms.instantiate.args, vec![Literal::Str("hello".into())]);
    assert_eq!(dsd.max_instances_per_host, 1);
    assert_eq!(dsd.hosts.len(), 10);
    assert_eq!(dsd.host("h1").unwrap().int_property("speed"), Some(3000));
    assert_eq!(dsd.host("h10").unwrap().int_property("speed"), Some(1000));
    assert_eq!(dsd.conjuncts().len(), 4);
}

#[test]
fn missing_satisfy_is_reported() {
    let src = MATHS.replace("  satisfy IMathsService using mathsServiceImpl\n", "");
    let err = lang::load(&src, "m").unwrap_err();
    assert!(
        err.iter().any(|d| d.message.contains("missing satisfy for provided interface `IMathsService`")),
        "{err}"
    );
}

#[test]
fn missing_bind_is_reported() {
    let src = MATHS.replace("  bind addition with mathsServiceImpl.setAdditionService()\n", "");
    let err = lang::load(&src, "m").unwrap_err();
    assert!(err.iter().any(|d| d.message.contains("missing bind for required port `addition`")), "{err}");
}

#[test]
fn missing_template_property_binding_is_reported() {
    let src = MATHS.replace("    vendor = \"CalculusSoftware\"\n", "");
    let err = lang::load(&src, "m").unwrap_err();
    assert!(err.iter().any(|d| d.message.contains("property `vendor`")), "{err}");
}

#[test]
fn host_override_wins_over_template() {
    let src = "host template CloudBlade (speed = 3000)\nhost h1 extends CloudBlade (speed = 4000)\nhost h2 extends CloudBlade";
    let dsd = lang::load(src, "h").unwrap();
    assert_eq!(dsd.host("h1").unwrap().int_property("speed"), Some(4000));
    assert_eq!(dsd.host("h2").unwrap().int_property("speed"), Some(3000));
}

#[test]
fn unresolved_names_carry_positions() {
    let src = "constraintSet c (\n  card(instancesOf(Nope in deployment)) >= 1\n)";
    let err = lang::load(src, "x").unwrap_err();
    let d = err.iter().next().unwrap();
    assert_eq!((d.pos.line, d.pos.col), (2, 20));
    assert!(d.message.contains("unresolved component type or template `Nope`"));
}

#[test]
fn duplicate_declarations_are_rejected() {
    let src = "host h1\nhost h1";
    let err = lang::load(src, "x").unwrap_err();
    assert!(err.iter().any(|d| d.message.contains("duplicate host")));
}

#[test]
fn string_property_in_comparison_is_a_type_mismatch() {
    let src = format!(
        "{MATHS}\nconstraintSet bad ( forall MathsService m in deployment (getHost(m).address >= 1) )"
    );
    let err = lang::load(&src, "x").unwrap_err();
    assert!(err.iter().any(|d| d.message.contains("type mismatch")), "{err}");
    let src = format!("{MATHS}\nconstraintSet bad ( forall MathsService m in deployment (m.vendor = 1) )");
    let err = lang::load(&src, "x").unwrap_err();
    assert!(err.iter().any(|d| d.message.contains("type mismatch")), "{err}");
}

#[test]
fn components_and_get_components_are_synonyms() {
    let a = lang::load(&format!("{MATHS}\nconstraintSet s ( card(components(h1)) <= 2 )"), "m").unwrap();
    let b = lang::load(&format!("{MATHS}\nconstraintSet s ( card(getComponents(h1)) <= 2 )"), "m").unwrap();
    assert_eq!(a, b);
}

#[test]
fn deployment_setting_and_optimise_directive() {
    let src = format!(
        "{MATHS}\ndeployment ( maxInstancesPerHost = 3 )\noptimise minimize card(instancesOf(MathsService in deployment))"
    );
    let dsd = lang::load(&src, "m").unwrap();
    assert_eq!(dsd.max_instances_per_host, 3);
    let obj = dsd.objective.as_ref().unwrap();
    assert_eq!(obj.direction, Direction::Minimize);
    let err = lang::load("deployment ( maxInstancesPerHost = 0 )", "m").unwrap_err();
    assert!(err.iter().any(|d| d.message.contains("positive")));
}

#[test]
fn forall_over_template_expands_to_concrete_types() {
    let src = format!(
        "{MATHS}\nconstraintSet t ( forall MathsServiceTemplate m in deployment (m.accuracy >= 1) )"
    );
    let dsd = lang::load(&src, "m").unwrap();
    let (_, p) = dsd.conjuncts().into_iter().last().unwrap();
    let Pred::ForallInstances { types, .. } = p else { panic!() };
    assert_eq!(types, &vec!["MathsService".to_string()]);
}

#[test]
fn or_and_not_are_accepted() {
    let src = format!(
        "{MATHS}\nconstraintSet t ( not card(getComponents(h1)) > 1 or card(getComponents(h2)) = 0 )"
    );
    let dsd = lang::load(&src, "m").unwrap();
    assert!(matches!(dsd.conjuncts().last().unwrap().1, Pred::Or(_)));
}

#[test]
fn pretty_print_round_trips_every_bundled_description() {
    let mut sources: Vec<(&str, String)> = experiments::EXPERIMENTS
        .iter()
        .map(|(n, s)| (*n, s.to_string()))
        .collect();
    sources.push(("maths", MATHS.to_string()));
    sources.push((
        "extended",
        format!(
            "{MATHS}\ndeployment ( maxInstancesPerHost = 2 )\nconstraintSet extra ( (card(getComponents(h1)) <= 2 or not card(getComponents(h2)) >= 1) and forall MathsService m in deployment (m.queriesPerSecond <= 100) )\noptimise maximize card(instancesOf(AdditionService in deployment))"
        ),
    ));
    for (name, src) in sources {
        let dsd = lang::load(&src, name).unwrap();
        let printed = pretty::print(&dsd);
        let again = lang::load(&printed, name).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(dsd, again, "{name}");
        assert_eq!(printed, pretty::print(&again), "{name}: printing is not a fixpoint");
    }
}

#[test]
fn resolution_is_deterministic() {
    let a = pretty::print(&lang::load(MATHS, "m").unwrap());
    let b = pretty::print(&lang::load(MATHS, "m").unwrap());
    assert_eq!(a, b);
}

#[test]
fn every_diagnostic_has_a_position() {
    let bad = [
        "\"abc",
        "host h1 extends (",
        "component type X ( satisfy I using y )",
        "constraintSet c ( card(components(nowhere)) <= 1 )",
        "interface I ( type = \"\" )",
    ];
    for src in bad {
        let err = lang::load(src, "x").unwrap_err();
        for d in err.iter() {
            assert!(d.pos.line >= 1 && d.pos.col >= 1, "{src}: {d}");
        }
    }
}
