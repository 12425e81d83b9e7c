//! Packaged components.
//!
//! A bundle carries everything a thin server needs to instantiate one
//! component instance: the life-cycle descriptor of its type, the identity
//! it is to take, a digest over both, and the principal that signed it.
//!
//! ```xml
//! <bundle>
//!   <descriptor type="AdditionService" implementation="http://example.org/add.jar">
//!     <instantiate object="addServiceImpl" class="com.math.AdditionService"/>
//!     <satisfy interface="IAdditionService" object="addServiceImpl"/>
//!   </descriptor>
//!   <identity host="h8" type="AdditionService" index="1"/>
//!   <digest>5f0c…</digest>
//!   <credential principal="realm-manager"/>
//! </bundle>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::Instance;
use crate::lang::model::{ComponentType, Literal, PropertyBinding, PropertyKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descriptor {
    pub ctype: String,
    pub implementation: String,
    /// Object name and class of the instantiated implementation.
    pub instantiate: (String, String),
    /// (interface, object) pairs exposed as provided endpoints.
    pub satisfy: Vec<(String, String)>,
    /// (port, interface) pairs, one smart proxy each.
    pub requires: Vec<(String, String)>,
    /// (port, object, setter) triples.
    pub bind: Vec<(String, String, String)>,
    pub initialise: Vec<(String, String)>,
    pub destroy: Vec<(String, String)>,
    /// (name, kind, value) where value is a literal or `object.method`.
    pub properties: Vec<(String, PropertyKind, String)>,
}

impl Descriptor {
    pub fn of(ct: &ComponentType) -> Descriptor {
        let method = |m: &crate::lang::model::MethodRef| (m.object.clone(), m.method.clone());
        Descriptor {
            ctype: ct.name.clone(),
            implementation: ct.implementation.clone(),
            instantiate: (ct.instantiate.object.clone(), ct.instantiate.class.clone()),
            satisfy: ct.satisfy.iter().map(|s| (s.interface.clone(), s.object.clone())).collect(),
            requires: ct.requires.iter().map(|p| (p.name.clone(), p.interface.clone())).collect(),
            bind: ct
                .bind
                .iter()
                .map(|b| (b.port.clone(), b.setter.object.clone(), b.setter.method.clone()))
                .collect(),
            initialise: ct.initialise.iter().map(method).collect(),
            destroy: ct.destroy.iter().map(method).collect(),
            properties: ct
                .properties
                .iter()
                .map(|p| {
                    let value = match &p.binding {
                        PropertyBinding::Unbound => String::new(),
                        PropertyBinding::Literal(Literal::Int(n)) => n.to_string(),
                        PropertyBinding::Literal(Literal::Str(s)) => s.clone(),
                        PropertyBinding::ProvidedBy(m) => format!("{}.{}", m.object, m.method),
                    };
                    (p.name.clone(), p.kind, value)
                })
                .collect(),
        }
    }

    pub fn dynamic_properties(&self) -> impl Iterator<Item = &str> {
        self.properties
            .iter()
            .filter(|(_, k, _)| *k == PropertyKind::Dynamic)
            .map(|(n, _, _)| n.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub descriptor: Descriptor,
    pub identity: Instance,
    /// Lower-case hex SHA-256 of [`Bundle::content`].
    pub digest: String,
    pub credential: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("unexpected element `{0}` in bundle")]
    UnexpectedElement(String),
    #[error("missing attribute `{attribute}` on `{element}`")]
    MissingAttribute { element: String, attribute: String },
    #[error("bundle has no `{0}`")]
    Missing(&'static str),
}

fn kind_str(kind: PropertyKind) -> &'static str {
    match kind {
        PropertyKind::Constant => "constant",
        PropertyKind::Dynamic => "dynamic",
    }
}

impl Bundle {
    /// Packages `ct` for deployment as `identity`, signed by `principal`.
    pub fn package(ct: &ComponentType, identity: Instance, principal: &str) -> Bundle {
        let mut b = Bundle {
            descriptor: Descriptor::of(ct),
            identity,
            digest: String::new(),
            credential: principal.to_string(),
        };
        b.digest = b.compute_digest();
        b
    }

    /// The signed part of the bundle: descriptor and identity elements.
    pub fn content(&self) -> String {
        let d = &self.descriptor;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "  <descriptor type=\"{}\" implementation=\"{}\">",
            escape(&d.ctype),
            escape(&d.implementation)
        );
        let _ = writeln!(
            out,
            "    <instantiate object=\"{}\" class=\"{}\"/>",
            escape(&d.instantiate.0),
            escape(&d.instantiate.1)
        );
        for (iface, obj) in &d.satisfy {
            let _ = writeln!(out, "    <satisfy interface=\"{}\" object=\"{}\"/>", escape(iface), escape(obj));
        }
        for (port, iface) in &d.requires {
            let _ = writeln!(out, "    <requires port=\"{}\" interface=\"{}\"/>", escape(port), escape(iface));
        }
        for (port, obj, method) in &d.bind {
            let _ = writeln!(
                out,
                "    <bind port=\"{}\" object=\"{}\" method=\"{}\"/>",
                escape(port),
                escape(obj),
                escape(method)
            );
        }
        for (tag, list) in [("initialise", &d.initialise), ("destroy", &d.destroy)] {
            for (obj, method) in list {
                let _ = writeln!(out, "    <{tag} object=\"{}\" method=\"{}\"/>", escape(obj), escape(method));
            }
        }
        for (name, kind, value) in &d.properties {
            let _ = writeln!(
                out,
                "    <property name=\"{}\" kind=\"{}\" value=\"{}\"/>",
                escape(name),
                kind_str(*kind),
                escape(value)
            );
        }
        out.push_str("  </descriptor>\n");
        let _ = writeln!(
            out,
            "  <identity host=\"{}\" type=\"{}\" index=\"{}\"/>",
            escape(&self.identity.host),
            escape(&self.identity.ctype),
            self.identity.index
        );
        out
    }

    pub fn compute_digest(&self) -> String {
        hex::encode(Sha256::digest(self.content().as_bytes()))
    }

    pub fn digest_matches(&self) -> bool {
        self.digest == self.compute_digest()
    }

    pub fn to_xml(&self) -> String {
        format!(
            "<bundle>\n{}  <digest>{}</digest>\n  <credential principal=\"{}\"/>\n</bundle>\n",
            self.content(),
            escape(&self.digest),
            escape(&self.credential)
        )
    }

    pub fn from_xml(text: &str) -> Result<Bundle, BundleError> {
        let mut reader = Reader::from_str(text);
        reader.config_mut().trim_text(true);
        let mut descriptor: Option<Descriptor> = None;
        let mut identity = None;
        let mut digest = None;
        let mut credential = None;
        let mut in_digest = false;
        loop {
            let event = reader.read_event().map_err(|e| BundleError::Malformed(e.to_string()))?;
            match event {
                Event::Eof => break,
                Event::Start(e) | Event::Empty(e) => {
                    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                    let a = attrs(&e)?;
                    let get = |k: &str| {
                        a.get(k).cloned().ok_or_else(|| BundleError::MissingAttribute {
                            element: name.clone(),
                            attribute: k.to_string(),
                        })
                    };
                    match name.as_str() {
                        "bundle" => {}
                        "descriptor" => {
                            descriptor = Some(Descriptor {
                                ctype: get("type")?,
                                implementation: get("implementation")?,
                                instantiate: Default::default(),
                                satisfy: Vec::new(),
                                requires: Vec::new(),
                                bind: Vec::new(),
                                initialise: Vec::new(),
                                destroy: Vec::new(),
                                properties: Vec::new(),
                            })
                        }
                        "identity" => {
                            let index = get("index")?
                                .parse()
                                .map_err(|_| BundleError::Malformed("bad identity index".into()))?;
                            identity = Some(Instance::new(get("host")?, get("type")?, index));
                        }
                        "digest" => in_digest = true,
                        "credential" => credential = Some(get("principal")?),
                        child => {
                            let d = descriptor.as_mut().ok_or(BundleError::UnexpectedElement(name.clone()))?;
                            match child {
                                "instantiate" => d.instantiate = (get("object")?, get("class")?),
                                "satisfy" => d.satisfy.push((get("interface")?, get("object")?)),
                                "requires" => d.requires.push((get("port")?, get("interface")?)),
                                "bind" => d.bind.push((get("port")?, get("object")?, get("method")?)),
                                "initialise" => d.initialise.push((get("object")?, get("method")?)),
                                "destroy" => d.destroy.push((get("object")?, get("method")?)),
                                "property" => {
                                    let kind = match get("kind")?.as_str() {
                                        "constant" => PropertyKind::Constant,
                                        "dynamic" => PropertyKind::Dynamic,
                                        other => return Err(BundleError::Malformed(format!("property kind `{other}`"))),
                                    };
                                    d.properties.push((get("name")?, kind, get("value")?));
                                }
                                _ => return Err(BundleError::UnexpectedElement(name)),
                            }
                        }
                    }
                }
                Event::Text(t) if in_digest => {
                    let text = t.unescape().map_err(|e| BundleError::Malformed(e.to_string()))?;
                    digest = Some(text.into_owned());
                }
                Event::End(e) if e.name().as_ref() == b"digest" => in_digest = false,
                Event::End(_) | Event::Decl(_) | Event::Comment(_) => {}
                other => return Err(BundleError::Malformed(format!("unexpected content {other:?}"))),
            }
        }
        Ok(Bundle {
            descriptor: descriptor.ok_or(BundleError::Missing("descriptor"))?,
            identity: identity.ok_or(BundleError::Missing("identity"))?,
            digest: digest.ok_or(BundleError::Missing("digest"))?,
            credential: credential.ok_or(BundleError::Missing("credential"))?,
        })
    }
}

fn attrs(e: &BytesStart) -> Result<BTreeMap<String, String>, BundleError> {
    e.attributes()
        .map(|a| {
            let a = a.map_err(|err| BundleError::Malformed(err.to_string()))?;
            let value = a
                .unescape_value()
                .map_err(|err| BundleError::Malformed(err.to_string()))?;
            Ok((String::from_utf8_lossy(a.key.as_ref()).into_owned(), value.into_owned()))
        })
        .collect()
}
