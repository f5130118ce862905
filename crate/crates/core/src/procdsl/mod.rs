//! The process description language and the JSON model file.
//!
//! A model is a network, a finite domain for every edge, a set of process
//! templates (local variables plus guarded commands), an assignment of
//! templates to nodes, optional global auxiliary variables, and a pairwise
//! exclusion property. The JSON schema lives in `schema/model.schema.json`.

mod expand;
mod gen;
mod guard;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NetworkDoc, NetworkError, NetworkGraph};

pub use expand::{compile_forbid, compile_local, expand, expand_ix, GroundCommand, GroundGuard, VarRef};
pub use gen::{gen_dining, gen_mutex, BOT};
pub use guard::{is_word_char, parse_guard, CmpOp, GuardExpr, GuardSyntaxError};

/// Value token that denotes the executing node's identifier.
pub const SELF: &str = "self";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{context}: unknown identifier `{name}`")]
    UnknownIdent { context: String, name: String },
    #[error("{context}: value `{value}` is not in the domain of `{var}`")]
    DomainMismatch { context: String, var: String, value: String },
    #[error("{context}: duplicate definition of `{name}`")]
    Duplicate { context: String, name: String },
    #[error("{context}: {message}")]
    Scope { context: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A finite-domain variable: a process local or a global auxiliary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarSpec {
    pub name: String,
    pub domain: Vec<String>,
    pub init: String,
}

impl VarSpec {
    pub fn new(name: &str, domain: &[&str], init: &str) -> Self {
        Self {
            name: name.to_string(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
            init: init.to_string(),
        }
    }
}

/// The shared variable carried by one edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub edge: String,
    pub domain: Vec<String>,
    pub init: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Update {
    pub target: String,
    pub value: String,
}

impl Update {
    pub fn new(target: &str, value: &str) -> Self {
        Self { target: target.to_string(), value: value.to_string() }
    }
}

/// A guarded command, optionally parameterized by one edge variable that
/// ranges over the executing node's neighborhood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate {
    pub binder: Option<String>,
    pub guard: GuardExpr,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDef {
    pub name: String,
    pub locals: Vec<VarSpec>,
    pub commands: Vec<CommandTemplate>,
}

impl ProcessDef {
    pub fn local(&self, name: &str) -> Option<&VarSpec> {
        self.locals.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairScope {
    AdjacentPairs,
    AllPairs,
}

/// "No two nodes in scope simultaneously satisfy `forbid`."
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertySpec {
    pub scope: PairScope,
    pub forbid: GuardExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFile {
    pub network: NetworkGraph,
    pub edgespecs: Vec<EdgeSpec>,
    pub processes: Vec<ProcessDef>,
    pub assignment: BTreeMap<String, String>,
    pub auxiliaries: Vec<VarSpec>,
    pub property: PropertySpec,
}

// Serialized mirror types. Guards travel as strings.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommandDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    binder: Option<String>,
    guard: String,
    updates: Vec<Update>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessDoc {
    name: String,
    locals: Vec<VarSpec>,
    commands: Vec<CommandDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropertyDoc {
    scope: PairScope,
    forbid: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    network: NetworkDoc,
    edgespecs: Vec<EdgeSpec>,
    processes: Vec<ProcessDoc>,
    assignment: BTreeMap<String, String>,
    #[serde(default)]
    auxiliaries: Vec<VarSpec>,
    property: PropertyDoc,
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<ModelFile, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let guard = |src: &str, context: String| -> Result<GuardExpr, ModelError> {
        parse_guard(src).map_err(|e| {
            let (line, column) = locate(text, src, e.column);
            ModelError::Syntax { line, column, message: format!("{context}: {}", e.message) }
        })
    };
    let network = NetworkGraph::from_doc(doc.network)?;
    let mut processes = Vec::with_capacity(doc.processes.len());
    for (pi, p) in doc.processes.into_iter().enumerate() {
        let mut commands = Vec::with_capacity(p.commands.len());
        for (ci, c) in p.commands.into_iter().enumerate() {
            commands.push(CommandTemplate {
                binder: c.binder,
                guard: guard(&c.guard, format!("processes[{pi}].commands[{ci}].guard"))?,
                updates: c.updates,
            });
        }
        processes.push(ProcessDef { name: p.name, locals: p.locals, commands });
    }
    let property = PropertySpec {
        scope: doc.property.scope,
        forbid: guard(&doc.property.forbid, "property.forbid".into())?,
    };
    let model = ModelFile {
        network,
        edgespecs: doc.edgespecs,
        processes,
        assignment: doc.assignment,
        auxiliaries: doc.auxiliaries,
        property,
    };
    model.validate()?;
    Ok(model)
}

/// Maps a column inside a guard string back to a line/column of the file by
/// finding the string literal in the source text. Falls back to the column
/// within the expression when the literal cannot be found verbatim.
fn locate(text: &str, src: &str, column: usize) -> (usize, usize) {
    let quoted = serde_json::to_string(src).unwrap_or_default();
    match text.find(&quoted) {
        Some(offset) if quoted.len() == src.len() + 2 => {
            let before = &text[..offset];
            let line = before.matches('\n').count() + 1;
            let line_start = before.rfind('\n').map_or(0, |p| p + 1);
            let col = text[line_start..offset].chars().count() + 1 + column;
            (line, col)
        }
        _ => (1, column),
    }
}

/// Prints the canonical JSON form: sorted keys, declaration-ordered lists.
pub fn print_model(model: &ModelFile) -> String {
    let doc = ModelDoc {
        network: model.network.to_doc(),
        edgespecs: model.edgespecs.clone(),
        processes: model
            .processes
            .iter()
            .map(|p| ProcessDoc {
                name: p.name.clone(),
                locals: p.locals.clone(),
                commands: p
                    .commands
                    .iter()
                    .map(|c| CommandDoc {
                        binder: c.binder.clone(),
                        guard: c.guard.to_string(),
                        updates: c.updates.clone(),
                    })
                    .collect(),
            })
            .collect(),
        assignment: model.assignment.clone(),
        auxiliaries: model.auxiliaries.clone(),
        property: PropertyDoc {
            scope: model.property.scope,
            forbid: model.property.forbid.to_string(),
        },
    };
    // Round-tripping through `Value` sorts object keys.
    let value = serde_json::to_value(&doc).expect("model serializes");
    let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
    out.push('\n');
    out
}

fn check_var(context: &str, v: &VarSpec) -> Result<(), ModelError> {
    if v.domain.is_empty() {
        return Err(ModelError::Invalid(format!("{context}: `{}` has an empty domain", v.name)));
    }
    let mut seen = HashSet::new();
    for x in &v.domain {
        if x == SELF {
            return Err(ModelError::Invalid(format!("{context}: `{SELF}` is reserved")));
        }
        if !seen.insert(x) {
            return Err(ModelError::Duplicate { context: format!("{context}: domain of `{}`", v.name), name: x.clone() });
        }
    }
    if !v.domain.contains(&v.init) {
        return Err(ModelError::DomainMismatch {
            context: format!("{context}: initial value"),
            var: v.name.clone(),
            value: v.init.clone(),
        });
    }
    Ok(())
}

impl ModelFile {
    pub fn process(&self, name: &str) -> Option<&ProcessDef> {
        self.processes.iter().find(|p| p.name == name)
    }

    /// The process template assigned to `node`.
    pub fn process_of(&self, node: &str) -> Result<&ProcessDef, ModelError> {
        let name = self.assignment.get(node).ok_or_else(|| ModelError::UnknownIdent {
            context: "assignment".into(),
            name: node.to_string(),
        })?;
        self.process(name).ok_or_else(|| ModelError::UnknownIdent {
            context: format!("assignment of `{node}`"),
            name: name.clone(),
        })
    }

    pub fn edgespec(&self, edge: &str) -> Option<&EdgeSpec> {
        self.edgespecs.iter().find(|e| e.edge == edge)
    }

    pub fn auxiliary(&self, name: &str) -> Option<&VarSpec> {
        self.auxiliaries.iter().find(|v| v.name == name)
    }

    /// Structural validation followed by a full expansion of every node,
    /// which type-checks all guards and updates in context.
    pub fn validate(&self) -> Result<(), ModelError> {
        let net = &self.network;
        let mut seen = HashSet::new();
        for e in &self.edgespecs {
            net.edge_id(&e.edge)?;
            if !seen.insert(e.edge.as_str()) {
                return Err(ModelError::Duplicate { context: "edgespecs".into(), name: e.edge.clone() });
            }
            check_var("edgespecs", &VarSpec { name: e.edge.clone(), domain: e.domain.clone(), init: e.init.clone() })?;
        }
        for e in net.edges() {
            if !seen.contains(e.as_str()) {
                return Err(ModelError::Invalid(format!("edge `{e}` has no edgespec")));
            }
        }
        let mut aux_names = HashSet::new();
        for a in &self.auxiliaries {
            check_var("auxiliaries", a)?;
            if net.edge_id(&a.name).is_ok() || net.node_id(&a.name).is_ok() || !aux_names.insert(a.name.as_str()) {
                return Err(ModelError::Duplicate { context: "auxiliaries".into(), name: a.name.clone() });
            }
        }
        let mut proc_names = HashSet::new();
        for p in &self.processes {
            if !proc_names.insert(p.name.as_str()) {
                return Err(ModelError::Duplicate { context: "processes".into(), name: p.name.clone() });
            }
            let mut locals = HashSet::new();
            for v in &p.locals {
                check_var(&format!("process `{}`", p.name), v)?;
                if !locals.insert(v.name.as_str()) {
                    return Err(ModelError::Duplicate { context: format!("process `{}`", p.name), name: v.name.clone() });
                }
            }
        }
        for node in self.assignment.keys() {
            net.node_id(node)?;
        }
        for node in net.nodes() {
            self.process_of(node)?;
        }
        for (i, _) in net.nodes().iter().enumerate() {
            expand_ix(self, i)?;
            compile_forbid(self, i)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, Family};

    fn ring3() -> ModelFile {
        gen_dining(&generate(&Family::Ring { size: 3 }).unwrap())
    }

    #[test]
    fn dining_round_trips_through_text() {
        let m = ring3();
        let text = print_model(&m);
        let back = parse_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(print_model(&back), text);
    }

    #[test]
    fn mutex_round_trips_through_text() {
        for with_last in [false, true] {
            let m = gen_mutex(3, with_last).unwrap();
            assert_eq!(parse_model(&print_model(&m)).unwrap(), m);
        }
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let text = print_model(&ring3()).replace("L=T", "L=X");
        match parse_model(&text) {
            Err(ModelError::DomainMismatch { value, var, .. }) => {
                assert_eq!(value, "X");
                assert_eq!(var, "L");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn guard_syntax_error_has_file_position() {
        let text = print_model(&ring3()).replacen("\"L=T\"", "\"L=T &&\"", 1);
        match parse_model(&text) {
            Err(ModelError::Syntax { line, column, .. }) => {
                let src_line = text.lines().nth(line - 1).unwrap();
                assert!(src_line.contains("L=T &&"));
                assert_eq!(column, src_line.find("L=T &&").unwrap() + 7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_syntax_error_has_position() {
        match parse_model("{\n  \"network\": ]") {
            Err(ModelError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_duplicates() {
        let text = print_model(&ring3()).replace("L=T", "Q=T");
        assert!(matches!(parse_model(&text), Err(ModelError::UnknownIdent { .. })));

        let mut m = ring3();
        m.processes.push(m.processes[0].clone());
        assert!(matches!(m.validate(), Err(ModelError::Duplicate { .. })));

        let mut m = gen_mutex(2, false).unwrap();
        m.auxiliaries.push(m.auxiliaries[0].clone());
        assert!(matches!(m.validate(), Err(ModelError::Duplicate { .. })));
    }

    #[test]
    fn unassigned_node_is_rejected() {
        let mut m = ring3();
        m.assignment.remove("n1");
        assert!(m.validate().is_err());
    }
}
