//! Canonical XML form of a configuration.
//!
//! ```xml
//! <cdd dsd="maths">
//!   <instance host="h1" type="MathsService" index="1"/>
//!   <connection client-host="h1" client-type="MathsService" client-index="1" port="addition" server-host="h9" server-type="AdditionService" server-index="1"/>
//! </cdd>
//! ```
//!
//! Children appear in sorted order, instances before connections, so equal
//! configurations serialize byte-identically.

use std::collections::BTreeMap;
use std::fmt::Write;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use super::{Cdd, Connection, Instance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CddError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("expected root element `cdd`")]
    MissingRoot,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("unknown attribute `{attribute}` on `{element}`")]
    UnknownAttribute { element: String, attribute: String },
    #[error("missing attribute `{attribute}` on `{element}`")]
    MissingAttribute { element: String, attribute: String },
    #[error("invalid index `{0}`")]
    BadIndex(String),
    #[error("duplicate element: {0}")]
    Duplicate(String),
    #[error("connection endpoint `{0}` is not an instance of the configuration")]
    DanglingEndpoint(Instance),
    #[error("port `{port}` of `{client}` is bound more than once")]
    DoubleBinding { client: Instance, port: String },
}

pub fn serialize(cdd: &Cdd) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<cdd dsd=\"{}\">", escape(&cdd.dsd));
    for i in &cdd.instances {
        let _ = writeln!(
            out,
            "  <instance host=\"{}\" type=\"{}\" index=\"{}\"/>",
            escape(&i.host),
            escape(&i.ctype),
            i.index
        );
    }
    for c in &cdd.connections {
        let _ = writeln!(
            out,
            "  <connection client-host=\"{}\" client-type=\"{}\" client-index=\"{}\" port=\"{}\" server-host=\"{}\" server-type=\"{}\" server-index=\"{}\"/>",
            escape(&c.client.host),
            escape(&c.client.ctype),
            c.client.index,
            escape(&c.port),
            escape(&c.server.host),
            escape(&c.server.ctype),
            c.server.index
        );
    }
    out.push_str("</cdd>\n");
    out
}

const INSTANCE_ATTRS: [&str; 3] = ["host", "type", "index"];
const CONNECTION_ATTRS: [&str; 7] = [
    "client-host",
    "client-type",
    "client-index",
    "port",
    "server-host",
    "server-type",
    "server-index",
];

fn attributes(e: &BytesStart, allowed: &[&str]) -> Result<BTreeMap<String, String>, CddError> {
    let element = String::from_utf8_lossy(e.name().as_ref()).into_owned();
    let mut out = BTreeMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| CddError::Xml(err.to_string()))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        if !allowed.contains(&key.as_str()) {
            return Err(CddError::UnknownAttribute {
                element,
                attribute: key,
            });
        }
        let value = attr
            .unescape_value()
            .map_err(|err| CddError::Xml(err.to_string()))?
            .into_owned();
        out.insert(key, value);
    }
    for a in allowed {
        if !out.contains_key(*a) {
            return Err(CddError::MissingAttribute {
                element,
                attribute: a.to_string(),
            });
        }
    }
    Ok(out)
}

fn index(s: &str) -> Result<u32, CddError> {
    match s.parse::<u32>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(CddError::BadIndex(s.to_string())),
    }
}

fn instance(attrs: &BTreeMap<String, String>, prefix: &str) -> Result<Instance, CddError> {
    let get = |k: &str| attrs[&format!("{prefix}{k}")].clone();
    Ok(Instance::new(get("host"), get("type"), index(&get("index"))?))
}

pub fn parse(text: &str) -> Result<Cdd, CddError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut cdd: Option<Cdd> = None;
    let mut closed = false;
    loop {
        let event = reader.read_event().map_err(|e| CddError::Xml(e.to_string()))?;
        let self_closing = matches!(event, Event::Empty(_));
        match event {
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) => {}
            Event::Text(t) if t.iter().all(u8::is_ascii_whitespace) => {}
            Event::Start(e) | Event::Empty(e) if cdd.is_none() => {
                if e.name().as_ref() != b"cdd" || closed {
                    return Err(CddError::MissingRoot);
                }
                let attrs = attributes(&e, &["dsd"])?;
                cdd = Some(Cdd::empty(attrs["dsd"].clone()));
                // `<cdd dsd="x"/>` is a complete empty document.
                closed = self_closing;
            }
            Event::Start(e) | Event::Empty(e) => {
                let doc = cdd.as_mut().expect("root seen");
                if closed {
                    return Err(CddError::Xml("content after the root element".into()));
                }
                match e.name().as_ref() {
                    b"instance" => {
                        let i = instance(&attributes(&e, &INSTANCE_ATTRS)?, "")?;
                        if !doc.instances.insert(i.clone()) {
                            return Err(CddError::Duplicate(i.to_string()));
                        }
                    }
                    b"connection" => {
                        let attrs = attributes(&e, &CONNECTION_ATTRS)?;
                        let c = Connection {
                            client: instance(&attrs, "client-")?,
                            port: attrs["port"].clone(),
                            server: instance(&attrs, "server-")?,
                        };
                        if !doc.connections.insert(c.clone()) {
                            return Err(CddError::Duplicate(c.to_string()));
                        }
                    }
                    other => return Err(CddError::UnknownElement(String::from_utf8_lossy(other).into_owned())),
                }
            }
            Event::End(e) if e.name().as_ref() == b"cdd" => closed = true,
            Event::End(_) => {}
            other => return Err(CddError::Xml(format!("unexpected content {other:?}"))),
        }
    }
    let cdd = cdd.ok_or(CddError::MissingRoot)?;
    for c in &cdd.connections {
        for end in [&c.client, &c.server] {
            if !cdd.instances.contains(end) {
                return Err(CddError::DanglingEndpoint(end.clone()));
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in &cdd.connections {
        if !seen.insert((&c.client, &c.port)) {
            return Err(CddError::DoubleBinding {
                client: c.client.clone(),
                port: c.port.clone(),
            });
        }
    }
    Ok(cdd)
}
