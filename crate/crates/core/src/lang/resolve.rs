//! Name resolution, template expansion and component-type completeness checks.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics, Pos};
use super::model::{
    self, ComponentType, ConnectionEnd, ConstraintSet, Dsd, Host, HostRef, HostTemplate, Interface,
    MethodRef, Objective, Port, PortBinding, Pred, Property, PropertyBinding, Satisfy, SetExpr,
    Template, Term, DEFAULT_MAX_INSTANCES_PER_HOST,
};

pub fn resolve(ast: &SourceFile, name: &str) -> Result<Dsd, Diagnostics> {
    let mut r = Resolver::default();
    let dsd = r.run(ast, name);
    if r.errors.is_empty() {
        Ok(dsd)
    } else {
        Err(Diagnostics(r.errors))
    }
}

#[derive(Default)]
struct Resolver {
    errors: Vec<Diagnostic>,
}

#[derive(Clone)]
enum Binder {
    Instances(Vec<String>),
    Host,
}

struct Scope<'a> {
    dsd: &'a Dsd,
    vars: Vec<(String, Binder)>,
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<&Binder> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, b)| b)
    }
}

fn lit_type(l: &Literal) -> ValueType {
    match l {
        Literal::Int(_) => ValueType::Int,
        Literal::Str(_) => ValueType::String,
    }
}

fn method(m: &MethodRefAst) -> MethodRef {
    MethodRef {
        object: m.object.name.clone(),
        method: m.method.name.clone(),
    }
}

impl Resolver {
    fn err(&mut self, pos: Pos, msg: impl Into<String>) {
        self.errors.push(Diagnostic::error(pos, msg));
    }

    fn check_unique<'a>(&mut self, what: &str, names: impl IntoIterator<Item = &'a Ident>) {
        let mut seen: HashMap<&str, Pos> = HashMap::new();
        for id in names {
            if let Some(first) = seen.get(id.name.as_str()) {
                let msg = format!("duplicate {what} `{}` (first declared at {first})", id.name);
                self.err(id.pos, msg);
            } else {
                seen.insert(&id.name, id.pos);
            }
        }
    }

    fn run(&mut self, ast: &SourceFile, name: &str) -> Dsd {
        let mut interfaces_ast = Vec::new();
        let mut templates_ast = Vec::new();
        let mut types_ast = Vec::new();
        let mut host_templates_ast = Vec::new();
        let mut hosts_ast = Vec::new();
        let mut sets_ast = Vec::new();
        let mut optimise_ast = Vec::new();
        let mut deployment_ast = Vec::new();
        for d in &ast.decls {
            match d {
                Decl::Interface(i) => interfaces_ast.push(i),
                Decl::Template(t) => templates_ast.push(t),
                Decl::ComponentType(c) => types_ast.push(c),
                Decl::HostTemplate(h) => host_templates_ast.push(h),
                Decl::Host(h) => hosts_ast.push(h),
                Decl::ConstraintSet(c) => sets_ast.push(c),
                Decl::Optimise(o) => optimise_ast.push(o),
                Decl::Deployment(d) => deployment_ast.push(d),
            }
        }

        self.check_unique("interface", interfaces_ast.iter().map(|i| &i.name));
        self.check_unique(
            "template or component type",
            templates_ast
                .iter()
                .map(|t| &t.name)
                .chain(types_ast.iter().map(|c| &c.name)),
        );
        self.check_unique(
            "host or host template",
            host_templates_ast
                .iter()
                .map(|h| &h.name)
                .chain(hosts_ast.iter().map(|h| &h.name)),
        );
        self.check_unique("constraint set", sets_ast.iter().map(|c| &c.name));

        let interfaces: Vec<Interface> = interfaces_ast.iter().map(|i| self.interface(i)).collect();
        let iface_names: HashSet<&str> = interfaces.iter().map(|i| i.name.as_str()).collect();

        let templates: Vec<Template> = templates_ast
            .iter()
            .map(|t| self.template(t, &iface_names))
            .collect();
        let component_types: Vec<ComponentType> = types_ast
            .iter()
            .filter_map(|c| self.component_type(c, &templates, &iface_names))
            .collect();

        let host_templates: Vec<HostTemplate> = host_templates_ast
            .iter()
            .map(|h| HostTemplate {
                name: h.name.name.clone(),
                properties: self.host_props(&h.properties),
            })
            .collect();
        let hosts: Vec<Host> = hosts_ast
            .iter()
            .map(|h| self.host(h, &host_templates))
            .collect();

        let mut max_instances = DEFAULT_MAX_INSTANCES_PER_HOST;
        let mut explicit = false;
        if deployment_ast.len() > 1 {
            let pos = deployment_ast[1]
                .settings
                .first()
                .map(|s| s.0.pos)
                .unwrap_or_default();
            self.err(pos, "duplicate `deployment` declaration");
        }
        for d in &deployment_ast {
            for (key, value) in &d.settings {
                match key.name.as_str() {
                    "maxInstancesPerHost" => {
                        if *value < 1 || *value > u32::MAX as i64 {
                            self.err(key.pos, "maxInstancesPerHost must be a positive integer");
                        } else {
                            max_instances = *value as u32;
                            explicit = true;
                        }
                    }
                    other => self.err(key.pos, format!("unknown deployment setting `{other}`")),
                }
            }
        }

        let mut dsd = Dsd {
            name: name.to_string(),
            interfaces,
            templates,
            component_types,
            host_templates,
            hosts,
            constraint_sets: Vec::new(),
            objective: None,
            max_instances_per_host: max_instances,
            explicit_max_instances: explicit,
        };

        let mut sets = Vec::new();
        for cs in &sets_ast {
            let mut scope = Scope {
                dsd: &dsd,
                vars: Vec::new(),
            };
            let body = match &cs.body {
                Some(e) => self.pred(e, &mut scope),
                None => Pred::And(Vec::new()),
            };
            sets.push(ConstraintSet {
                name: cs.name.name.clone(),
                body: flatten(body),
            });
        }
        if optimise_ast.len() > 1 {
            self.err(optimise_ast[1].pos, "duplicate `optimise` directive");
        }
        let objective = optimise_ast.first().map(|o| {
            let mut scope = Scope {
                dsd: &dsd,
                vars: Vec::new(),
            };
            Objective {
                direction: o.direction,
                term: self.term(&o.term, &mut scope),
            }
        });
        dsd.constraint_sets = sets;
        dsd.objective = objective;
        dsd
    }

    fn interface(&mut self, i: &InterfaceAst) -> Interface {
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for (key, value) in &i.fields {
            if fields.insert(&key.name, value).is_some() {
                self.err(key.pos, format!("duplicate field `{}` in interface `{}`", key.name, i.name.name));
            }
            if value.is_empty() {
                self.err(key.pos, format!("field `{}` of interface `{}` is empty", key.name, i.name.name));
            }
        }
        let mut get = |k: &str| match fields.get(k) {
            Some(v) => v.to_string(),
            None => {
                self.err(i.name.pos, format!("interface `{}` lacks `{k}`", i.name.name));
                String::new()
            }
        };
        Interface {
            name: i.name.name.clone(),
            impl_type: get("type"),
            specification: get("specification"),
            implementation: get("implementation"),
        }
    }

    fn check_iface(&mut self, id: &Ident, known: &HashSet<&str>) {
        if !known.contains(id.name.as_str()) {
            self.err(id.pos, format!("unresolved interface `{}`", id.name));
        }
    }

    fn ports(&mut self, ports: &[PortAst], known: &HashSet<&str>) -> Vec<Port> {
        self.check_unique("port", ports.iter().map(|p| &p.port));
        ports
            .iter()
            .map(|p| {
                self.check_iface(&p.interface, known);
                Port {
                    name: p.port.name.clone(),
                    interface: p.interface.name.clone(),
                }
            })
            .collect()
    }

    fn template(&mut self, t: &TemplateAst, known: &HashSet<&str>) -> Template {
        for p in &t.provides {
            self.check_iface(p, known);
        }
        self.check_unique("property", t.properties.iter().map(|p| &p.name));
        let properties = t
            .properties
            .iter()
            .filter_map(|p| {
                let (Some(kind), Some(value_type)) = (p.kind, p.value_type) else {
                    self.err(p.name.pos, format!("template property `{}` needs `constant` or `dynamic` and a type", p.name.name));
                    return None;
                };
                let binding = match &p.binding {
                    None => PropertyBinding::Unbound,
                    Some(b) => self.check_binding(p, kind, value_type, b),
                };
                Some(Property {
                    name: p.name.name.clone(),
                    kind,
                    value_type,
                    binding,
                })
            })
            .collect();
        Template {
            name: t.name.name.clone(),
            provides: dedup(t.provides.iter().map(|i| i.name.clone())),
            requires: self.ports(&t.requires, known),
            properties,
        }
    }

    fn check_binding(
        &mut self,
        p: &PropertyAst,
        kind: PropertyKind,
        value_type: ValueType,
        b: &PropertyBindingAst,
    ) -> PropertyBinding {
        match (kind, b) {
            (PropertyKind::Constant, PropertyBindingAst::Literal(l)) => {
                if lit_type(l) != value_type {
                    self.err(p.name.pos, format!("type mismatch: property `{}` is declared {} but bound to {}", p.name.name, type_name(value_type), type_name(lit_type(l))));
                }
                PropertyBinding::Literal(l.clone())
            }
            (PropertyKind::Dynamic, PropertyBindingAst::ProvidedBy(m)) => {
                PropertyBinding::ProvidedBy(method(m))
            }
            (PropertyKind::Constant, PropertyBindingAst::ProvidedBy(_)) => {
                self.err(p.name.pos, format!("constant property `{}` must be bound to a literal", p.name.name));
                PropertyBinding::Unbound
            }
            (PropertyKind::Dynamic, PropertyBindingAst::Literal(_)) => {
                self.err(p.name.pos, format!("dynamic property `{}` must be bound with `providedBy`", p.name.name));
                PropertyBinding::Unbound
            }
        }
    }

    fn component_type(
        &mut self,
        c: &ComponentTypeAst,
        templates: &[Template],
        known: &HashSet<&str>,
    ) -> Option<ComponentType> {
        let errors_before = self.errors.len();
        let tname = &c.name.name;
        let template = match &c.extends {
            None => None,
            Some(ext) => match templates.iter().find(|t| t.name == ext.name) {
                Some(t) => Some(t),
                None => {
                    self.err(ext.pos, format!("unresolved template `{}`", ext.name));
                    None
                }
            },
        };

        for p in &c.provides {
            self.check_iface(p, known);
        }
        let own_ports = self.ports(&c.requires, known);
        let mut provides: Vec<String> = template.map(|t| t.provides.clone()).unwrap_or_default();
        provides.extend(c.provides.iter().map(|i| i.name.clone()));
        let provides = dedup(provides.into_iter());

        let mut requires: Vec<Port> = template.map(|t| t.requires.clone()).unwrap_or_default();
        for (p, ast) in own_ports.into_iter().zip(&c.requires) {
            if requires.iter().any(|q| q.name == p.name) {
                self.err(ast.port.pos, format!("port `{}` is already declared by template", p.name));
            } else {
                requires.push(p);
            }
        }

        let Some(inst) = &c.instantiate else {
            self.err(c.name.pos, format!("component type `{tname}` has no `instantiate` clause"));
            return None;
        };
        let object = &inst.object.name;
        let implementation = match &c.implementation {
            Some((url, pos)) => {
                if url.is_empty() {
                    self.err(*pos, "empty implementation location");
                }
                url.clone()
            }
            None => {
                self.err(c.name.pos, format!("component type `{tname}` has no `implementation` clause"));
                String::new()
            }
        };

        let check_obj = |r: &mut Self, id: &Ident| {
            if &id.name != object {
                r.err(id.pos, format!("unresolved object `{}`; `{tname}` instantiates `{object}`", id.name));
            }
        };

        // satisfy: exactly once per provided interface
        let mut satisfied: HashMap<&str, Pos> = HashMap::new();
        for s in &c.satisfy {
            check_obj(self, &s.object);
            if !provides.contains(&s.interface.name) {
                self.err(s.interface.pos, format!("`{tname}` does not provide interface `{}`", s.interface.name));
            }
            if satisfied.insert(&s.interface.name, s.interface.pos).is_some() {
                self.err(s.interface.pos, format!("interface `{}` satisfied more than once", s.interface.name));
            }
        }
        for iface in &provides {
            if !satisfied.contains_key(iface.as_str()) {
                self.err(c.name.pos, format!("missing satisfy for provided interface `{iface}` in `{tname}`"));
            }
        }

        let mut bound: HashMap<&str, Pos> = HashMap::new();
        for b in &c.bind {
            check_obj(self, &b.setter.object);
            if !requires.iter().any(|p| p.name == b.port.name) {
                self.err(b.port.pos, format!("`{tname}` has no required port `{}`", b.port.name));
            }
            if bound.insert(&b.port.name, b.port.pos).is_some() {
                self.err(b.port.pos, format!("port `{}` bound more than once", b.port.name));
            }
        }
        for p in &requires {
            if !bound.contains_key(p.name.as_str()) {
                self.err(c.name.pos, format!("missing bind for required port `{}` in `{tname}`", p.name));
            }
        }
        for m in c.initialise.iter().chain(&c.destroy) {
            check_obj(self, &m.object);
        }

        // properties: template declarations must all receive a binding
        self.check_unique("property", c.properties.iter().map(|p| &p.name));
        let mut properties = Vec::new();
        let declared: Vec<Property> = template.map(|t| t.properties.clone()).unwrap_or_default();
        for decl in &declared {
            match c.properties.iter().find(|p| p.name.name == decl.name) {
                Some(p) => {
                    if p.kind.is_some_and(|k| k != decl.kind) || p.value_type.is_some_and(|v| v != decl.value_type) {
                        self.err(p.name.pos, format!("property `{}` redeclared with a different kind or type", decl.name));
                    }
                    let binding = match &p.binding {
                        Some(b) => self.check_binding(p, decl.kind, decl.value_type, b),
                        None => {
                            self.err(p.name.pos, format!("property `{}` is not given a value", decl.name));
                            PropertyBinding::Unbound
                        }
                    };
                    if let PropertyBinding::ProvidedBy(m) = &binding {
                        if &m.object != object {
                            self.err(p.name.pos, format!("unresolved object `{}`; `{tname}` instantiates `{object}`", m.object));
                        }
                    }
                    properties.push(Property { binding, ..decl.clone() });
                }
                None if decl.binding != PropertyBinding::Unbound => properties.push(decl.clone()),
                None => self.err(c.name.pos, format!("property `{}` of template is not given a value in `{tname}`", decl.name)),
            }
        }
        for p in &c.properties {
            if declared.iter().any(|d| d.name == p.name.name) {
                continue;
            }
            let Some(b) = &p.binding else {
                self.err(p.name.pos, format!("property `{}` is not given a value", p.name.name));
                continue;
            };
            let kind = p.kind.unwrap_or(match b {
                PropertyBindingAst::Literal(_) => PropertyKind::Constant,
                PropertyBindingAst::ProvidedBy(_) => PropertyKind::Dynamic,
            });
            let value_type = p.value_type.unwrap_or(match b {
                PropertyBindingAst::Literal(l) => lit_type(l),
                PropertyBindingAst::ProvidedBy(_) => ValueType::Int,
            });
            let binding = self.check_binding(p, kind, value_type, b);
            if let PropertyBinding::ProvidedBy(m) = &binding {
                if &m.object != object {
                    self.err(p.name.pos, format!("unresolved object `{}`; `{tname}` instantiates `{object}`", m.object));
                }
            }
            properties.push(Property {
                name: p.name.name.clone(),
                kind,
                value_type,
                binding,
            });
        }

        if self.errors.len() != errors_before {
            return None;
        }
        Some(ComponentType {
            name: tname.clone(),
            extends: c.extends.as_ref().map(|e| e.name.clone()),
            provides,
            requires,
            implementation,
            instantiate: model::Instantiate {
                object: object.clone(),
                class: inst.class.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join("."),
                args: inst.args.clone(),
            },
            satisfy: c
                .satisfy
                .iter()
                .map(|s| Satisfy {
                    interface: s.interface.name.clone(),
                    object: s.object.name.clone(),
                })
                .collect(),
            bind: c
                .bind
                .iter()
                .map(|b| PortBinding {
                    port: b.port.name.clone(),
                    setter: method(&b.setter),
                })
                .collect(),
            initialise: c.initialise.iter().map(method).collect(),
            destroy: c.destroy.iter().map(method).collect(),
            properties,
        })
    }

    fn host_props(&mut self, props: &[(Ident, Literal)]) -> BTreeMap<String, Literal> {
        self.check_unique("host property", props.iter().map(|p| &p.0));
        props
            .iter()
            .map(|(k, v)| (k.name.clone(), v.clone()))
            .collect()
    }

    fn host(&mut self, h: &HostAst, templates: &[HostTemplate]) -> Host {
        let mut properties = BTreeMap::new();
        if let Some(ext) = &h.extends {
            match templates.iter().find(|t| t.name == ext.name) {
                Some(t) => properties.extend(t.properties.clone()),
                None => self.err(ext.pos, format!("unresolved host template `{}`", ext.name)),
            }
        }
        properties.extend(self.host_props(&h.properties));
        Host {
            name: h.name.name.clone(),
            extends: h.extends.as_ref().map(|e| e.name.clone()),
            properties,
        }
    }

    fn pred(&mut self, e: &ExprAst, scope: &mut Scope<'_>) -> Pred {
        match e {
            ExprAst::And(items) => Pred::And(items.iter().map(|i| self.pred(i, scope)).collect()),
            ExprAst::Or(items) => Pred::Or(items.iter().map(|i| self.pred(i, scope)).collect()),
            ExprAst::Not(inner) => Pred::Not(Box::new(self.pred(inner, scope))),
            ExprAst::Forall {
                quantifier,
                var,
                body,
            } => {
                if scope.lookup(&var.name).is_some() {
                    self.err(var.pos, format!("variable `{}` is already bound", var.name));
                }
                match quantifier {
                    QuantifierAst::Host => {
                        scope.vars.push((var.name.clone(), Binder::Host));
                        let body = self.pred(body, scope);
                        scope.vars.pop();
                        Pred::ForallHosts {
                            var: var.name.clone(),
                            body: Box::new(body),
                        }
                    }
                    QuantifierAst::Type(ty) => {
                        let types = self.types_named(ty, scope.dsd);
                        scope.vars.push((var.name.clone(), Binder::Instances(types.clone())));
                        let body = self.pred(body, scope);
                        scope.vars.pop();
                        Pred::ForallInstances {
                            type_name: ty.name.clone(),
                            types,
                            var: var.name.clone(),
                            body: Box::new(body),
                        }
                    }
                }
            }
            ExprAst::Compare { lhs, op, rhs, .. } => Pred::Compare {
                lhs: self.term(lhs, scope),
                op: *op,
                rhs: self.term(rhs, scope),
            },
        }
    }

    fn types_named(&mut self, ty: &Ident, dsd: &Dsd) -> Vec<String> {
        if dsd.component_type(&ty.name).is_none() && dsd.template(&ty.name).is_none() {
            self.err(ty.pos, format!("unresolved component type or template `{}`", ty.name));
            return Vec::new();
        }
        dsd.concrete_types(&ty.name)
    }

    fn instance_var(&mut self, var: &Ident, scope: &Scope<'_>) -> Option<Vec<String>> {
        match scope.lookup(&var.name) {
            Some(Binder::Instances(types)) => Some(types.clone()),
            Some(Binder::Host) => {
                self.err(var.pos, format!("`{}` is a host variable, expected a component variable", var.name));
                None
            }
            None => {
                self.err(var.pos, format!("unresolved variable `{}`", var.name));
                None
            }
        }
    }

    fn int_host_property(&mut self, property: &Ident, dsd: &Dsd) {
        if dsd.hosts.is_empty() {
            return;
        }
        for h in &dsd.hosts {
            match h.properties.get(&property.name) {
                None => {
                    self.err(property.pos, format!("unresolved property `{}`: host `{}` does not define it", property.name, h.name));
                    return;
                }
                Some(Literal::Str(_)) => {
                    self.err(property.pos, format!("type mismatch in comparison: host property `{}` is a string", property.name));
                    return;
                }
                Some(Literal::Int(_)) => {}
            }
        }
    }

    fn term(&mut self, t: &TermAst, scope: &mut Scope<'_>) -> Term {
        match t {
            TermAst::Int(n, _) => Term::Int(*n),
            TermAst::HostOf { var, property } => {
                self.instance_var(var, scope);
                self.int_host_property(property, scope.dsd);
                Term::HostOf {
                    var: var.name.clone(),
                    property: property.name.clone(),
                }
            }
            TermAst::Property { var, property } => match scope.lookup(&var.name).cloned() {
                Some(Binder::Host) => {
                    self.int_host_property(property, scope.dsd);
                    Term::HostProperty {
                        var: var.name.clone(),
                        property: property.name.clone(),
                    }
                }
                Some(Binder::Instances(types)) => {
                    let mut dynamic = false;
                    for ty in &types {
                        let ct = scope.dsd.component_type(ty).expect("resolved type");
                        match ct.property(&property.name) {
                            None => {
                                self.err(property.pos, format!("unresolved property `{}` on component type `{ty}`", property.name));
                                break;
                            }
                            Some(p) if p.value_type != ValueType::Int => {
                                self.err(property.pos, format!("type mismatch in comparison: property `{}` is a string", property.name));
                                break;
                            }
                            Some(p) => dynamic |= p.kind == PropertyKind::Dynamic,
                        }
                    }
                    Term::InstanceProperty {
                        var: var.name.clone(),
                        property: property.name.clone(),
                        dynamic,
                    }
                }
                None => {
                    self.err(var.pos, format!("unresolved variable `{}`", var.name));
                    Term::Int(0)
                }
            },
            TermAst::Card(set, _) => Term::Card(self.set(set, scope)),
        }
    }

    fn set(&mut self, s: &SetAst, scope: &mut Scope<'_>) -> SetExpr {
        match s {
            SetAst::Connections { var, member } => {
                let types = self.instance_var(var, scope).unwrap_or_default();
                let dsd = scope.dsd;
                let all_provide = types.iter().all(|t| dsd.component_type(t).is_some_and(|c| c.provides_interface(&member.name)));
                let all_require = types.iter().all(|t| dsd.component_type(t).is_some_and(|c| c.port(&member.name).is_some()));
                let end = if all_provide {
                    ConnectionEnd::Incoming
                } else if all_require {
                    ConnectionEnd::Outgoing
                } else {
                    self.err(member.pos, format!("unresolved member `{}`: not a provided interface or required port of `{}`", member.name, var.name));
                    ConnectionEnd::Incoming
                };
                SetExpr::Connections {
                    var: var.name.clone(),
                    member: member.name.clone(),
                    end,
                }
            }
            SetAst::Components { host } => {
                let host_ref = match scope.lookup(&host.name) {
                    Some(Binder::Host) => HostRef::Var(host.name.clone()),
                    Some(Binder::Instances(_)) => {
                        self.err(host.pos, format!("`{}` is a component variable, expected a host", host.name));
                        HostRef::Var(host.name.clone())
                    }
                    None => {
                        if scope.dsd.host(&host.name).is_none() {
                            self.err(host.pos, format!("unresolved host `{}`", host.name));
                        }
                        HostRef::Named(host.name.clone())
                    }
                };
                SetExpr::HostComponents { host: host_ref }
            }
            SetAst::InstancesOf { type_name } => SetExpr::InstancesOf {
                type_name: type_name.name.clone(),
                types: self.types_named(type_name, scope.dsd),
            },
        }
    }
}

fn type_name(v: ValueType) -> &'static str {
    match v {
        ValueType::Int => "int",
        ValueType::String => "string",
    }
}

fn dedup(items: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn flatten(p: Pred) -> Pred {
    match p {
        Pred::And(items) => {
            let mut out = Vec::new();
            for i in items {
                match flatten(i) {
                    Pred::And(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            Pred::And(out)
        }
        Pred::Or(items) => {
            let mut out = Vec::new();
            for i in items {
                match flatten(i) {
                    Pred::Or(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            Pred::Or(out)
        }
        Pred::Not(inner) => Pred::Not(Box::new(flatten(*inner))),
        Pred::ForallInstances {
            type_name,
            types,
            var,
            body,
        } => Pred::ForallInstances {
            type_name,
            types,
            var,
            body: Box::new(flatten(*body)),
        },
        Pred::ForallHosts { var, body } => Pred::ForallHosts {
            var,
            body: Box::new(flatten(*body)),
        },
        c @ Pred::Compare { .. } => c,
    }
}
