//! Canonical text form of a resolved description. The output reparses to an
//! equal [`Dsd`], and equal descriptions print byte-identically.

use std::fmt::Write;

use super::model::*;

pub fn print(dsd: &Dsd) -> String {
    let mut out = String::new();
    for i in &dsd.interfaces {
        let _ = writeln!(out, "interface {} (", i.name);
        let _ = writeln!(out, "  type = {}", quote(&i.impl_type));
        let _ = writeln!(out, "  specification = {}", quote(&i.specification));
        let _ = writeln!(out, "  implementation = {}", quote(&i.implementation));
        out.push_str(")\n\n");
    }
    for t in &dsd.templates {
        let _ = writeln!(out, "template {} (", t.name);
        provides(&mut out, &t.provides);
        requires(&mut out, &t.requires);
        if !t.properties.is_empty() {
            out.push_str("  properties (\n");
            for p in &t.properties {
                let _ = writeln!(out, "    {} {} {}{}", kind(p.kind), vtype(p.value_type), p.name, binding(&p.binding));
            }
            out.push_str("  )\n");
        }
        out.push_str(")\n\n");
    }
    for c in &dsd.component_types {
        component_type(&mut out, dsd, c);
    }
    for t in &dsd.host_templates {
        let _ = writeln!(out, "host template {}{}", t.name, host_props(t.properties.iter()));
    }
    if !dsd.host_templates.is_empty() {
        out.push('\n');
    }
    for h in &dsd.hosts {
        let template = h
            .extends
            .as_deref()
            .and_then(|n| dsd.host_templates.iter().find(|t| t.name == n));
        let own = h
            .properties
            .iter()
            .filter(|(k, v)| template.and_then(|t| t.properties.get(*k)) != Some(*v));
        match &h.extends {
            Some(e) => {
                let _ = writeln!(out, "host {} extends {}{}", h.name, e, host_props(own));
            }
            None => {
                let _ = writeln!(out, "host {}{}", h.name, host_props(own));
            }
        }
    }
    if !dsd.hosts.is_empty() {
        out.push('\n');
    }
    if dsd.explicit_max_instances {
        let _ = writeln!(out, "deployment ( maxInstancesPerHost = {} )\n", dsd.max_instances_per_host);
    }
    for cs in &dsd.constraint_sets {
        let conjuncts = cs.body.conjuncts();
        if conjuncts.is_empty() {
            let _ = writeln!(out, "constraintSet {} ( )\n", cs.name);
            continue;
        }
        let _ = writeln!(out, "constraintSet {} (", cs.name);
        // A lone disjunction needs no parentheses; one joined by `and` does.
        let ctx = if conjuncts.len() > 1 { Ctx::Nested } else { Ctx::Conjunct };
        for (i, c) in conjuncts.iter().enumerate() {
            if i > 0 {
                out.push_str("  and\n");
            }
            let _ = writeln!(out, "  {}", pred_in(c, ctx));
        }
        out.push_str(")\n\n");
    }
    if let Some(o) = &dsd.objective {
        let dir = match o.direction {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        };
        let _ = writeln!(out, "optimise {dir} {}", term(&o.term));
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

fn component_type(out: &mut String, dsd: &Dsd, c: &ComponentType) {
    let template = c.extends.as_deref().and_then(|n| dsd.template(n));
    match &c.extends {
        Some(e) => {
            let _ = writeln!(out, "component type {} extends {} (", c.name, e);
        }
        None => {
            let _ = writeln!(out, "component type {} (", c.name);
        }
    }
    let own_provides: Vec<String> = c
        .provides
        .iter()
        .filter(|p| !template.is_some_and(|t| t.provides.contains(p)))
        .cloned()
        .collect();
    let own_requires: Vec<Port> = c
        .requires
        .iter()
        .filter(|p| !template.is_some_and(|t| t.requires.contains(p)))
        .cloned()
        .collect();
    provides(out, &own_provides);
    requires(out, &own_requires);
    let _ = writeln!(out, "  implementation {}", quote(&c.implementation));
    let args: Vec<String> = c.instantiate.args.iter().map(literal).collect();
    let _ = writeln!(
        out,
        "  instantiate {} with {}({})",
        c.instantiate.object,
        c.instantiate.class,
        args.join(", ")
    );
    for s in &c.satisfy {
        let _ = writeln!(out, "  satisfy {} using {}", s.interface, s.object);
    }
    for b in &c.bind {
        let _ = writeln!(out, "  bind {} with {}", b.port, method(&b.setter));
    }
    for m in &c.initialise {
        let _ = writeln!(out, "  initialise {}", method(m));
    }
    for m in &c.destroy {
        let _ = writeln!(out, "  destroy {}", method(m));
    }
    let props: Vec<String> = c
        .properties
        .iter()
        .filter_map(|p| {
            let declared = template.and_then(|t| t.properties.iter().find(|d| d.name == p.name));
            match declared {
                Some(d) if d == p => None,
                Some(_) => Some(format!("{}{}", p.name, binding(&p.binding))),
                None => {
                    let inferred = match &p.binding {
                        PropertyBinding::Literal(l) => {
                            p.kind == PropertyKind::Constant
                                && p.value_type
                                    == match l {
                                        Literal::Int(_) => ValueType::Int,
                                        Literal::Str(_) => ValueType::String,
                                    }
                        }
                        PropertyBinding::ProvidedBy(_) => {
                            p.kind == PropertyKind::Dynamic && p.value_type == ValueType::Int
                        }
                        PropertyBinding::Unbound => false,
                    };
                    if inferred {
                        Some(format!("{}{}", p.name, binding(&p.binding)))
                    } else {
                        Some(format!("{} {} {}{}", kind(p.kind), vtype(p.value_type), p.name, binding(&p.binding)))
                    }
                }
            }
        })
        .collect();
    if !props.is_empty() {
        out.push_str("  properties (\n");
        for p in props {
            let _ = writeln!(out, "    {p}");
        }
        out.push_str("  )\n");
    }
    out.push_str(")\n\n");
}

fn provides(out: &mut String, ifaces: &[String]) {
    if ifaces.is_empty() {
        return;
    }
    let items: Vec<String> = ifaces.iter().map(|i| format!("interface {i}")).collect();
    let _ = writeln!(out, "  provides {}", items.join(", "));
}

fn requires(out: &mut String, ports: &[Port]) {
    if ports.is_empty() {
        return;
    }
    let items: Vec<String> = ports.iter().map(|p| format!("{} {}", p.interface, p.name)).collect();
    let _ = writeln!(out, "  requires {}", items.join(", "));
}

fn host_props<'a>(props: impl Iterator<Item = (&'a String, &'a Literal)>) -> String {
    let items: Vec<String> = props.map(|(k, v)| format!("{k} = {}", literal(v))).collect();
    if items.is_empty() {
        String::new()
    } else {
        format!(" ({})", items.join(", "))
    }
}

fn kind(k: PropertyKind) -> &'static str {
    match k {
        PropertyKind::Constant => "constant",
        PropertyKind::Dynamic => "dynamic",
    }
}

fn vtype(v: ValueType) -> &'static str {
    match v {
        ValueType::Int => "int",
        ValueType::String => "string",
    }
}

fn binding(b: &PropertyBinding) -> String {
    match b {
        PropertyBinding::Unbound => String::new(),
        PropertyBinding::Literal(l) => format!(" = {}", literal(l)),
        PropertyBinding::ProvidedBy(m) => format!(" providedBy {}", method(m)),
    }
}

fn method(m: &MethodRef) -> String {
    format!("{}.{}()", m.object, m.method)
}

pub fn literal(l: &Literal) -> String {
    match l {
        Literal::Int(n) => n.to_string(),
        Literal::Str(s) => quote(s),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Conjunct,
    Nested,
}

/// Single-line rendering of a predicate.
pub fn pred(p: &Pred) -> String {
    pred_in(p, Ctx::Conjunct)
}

fn pred_in(p: &Pred, ctx: Ctx) -> String {
    let s = match p {
        Pred::And(items) if items.is_empty() => return "0 <= 0".to_string(),
        Pred::And(items) => items.iter().map(|i| pred_in(i, Ctx::Nested)).collect::<Vec<_>>().join(" and "),
        Pred::Or(items) => items.iter().map(|i| pred_in(i, Ctx::Nested)).collect::<Vec<_>>().join(" or "),
        Pred::Not(inner) => return format!("not {}", pred_in(inner, Ctx::Nested)),
        Pred::ForallInstances {
            type_name,
            var,
            body,
            ..
        } => return format!("forall {type_name} {var} in deployment ({})", pred_in(body, Ctx::Conjunct)),
        Pred::ForallHosts { var, body } => {
            return format!("forall host {var} in deployment ({})", pred_in(body, Ctx::Conjunct))
        }
        Pred::Compare { lhs, op, rhs } => {
            return format!("{} {} {}", term(lhs), op.as_str(), term(rhs))
        }
    };
    match ctx {
        Ctx::Nested => format!("({s})"),
        Ctx::Conjunct => s,
    }
}

pub fn term(t: &Term) -> String {
    match t {
        Term::Int(n) => n.to_string(),
        Term::Card(s) => format!("card({})", set(s)),
        Term::HostOf { var, property } => format!("getHost({var}).{property}"),
        Term::HostProperty { var, property } | Term::InstanceProperty { var, property, .. } => {
            format!("{var}.{property}")
        }
    }
}

fn set(s: &SetExpr) -> String {
    match s {
        SetExpr::Connections { var, member, .. } => format!("connections({var}.{member})"),
        SetExpr::HostComponents { host } => match host {
            HostRef::Var(v) | HostRef::Named(v) => format!("getComponents({v})"),
        },
        SetExpr::InstancesOf { type_name, .. } => format!("instancesOf({type_name} in deployment)"),
    }
}
