//! The JSON run report. Every key is always present (null when the command
//! does not produce it); wall-clock times live under `timing` only.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::abstraction::ParametricReport;
use crate::refine::{RefineStep, Verdict};
use crate::semantics::{Program, VarKind};
use crate::symmetry::OrbitPartition;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Arguments after the program name.
    pub command: Vec<String>,
    pub model: Option<ModelSummary>,
    pub outcome: Option<Verdict>,
    pub theta_sizes: Option<Vec<usize>>,
    pub theta_total: Option<usize>,
    pub refinement: Option<Vec<RefineStep>>,
    pub orbits: Option<OrbitSummary>,
    pub abstraction: Option<AbstractSummary>,
    pub reach: Option<ReachSummary>,
    pub audit: Option<AuditSummary>,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(command: Vec<String>, program: &Program, phases: BTreeMap<String, f64>) -> Self {
        Self {
            command,
            model: Some(ModelSummary::new(program)),
            outcome: None,
            theta_sizes: None,
            theta_total: None,
            refinement: None,
            orbits: None,
            abstraction: None,
            reach: None,
            audit: None,
            timing: Timing(phases),
        }
    }
}

/// Seconds per phase.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing(pub BTreeMap<String, f64>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelSummary {
    pub nodes: usize,
    pub edges: usize,
    pub variables: usize,
    pub auxiliaries: usize,
}

impl ModelSummary {
    pub fn new(program: &Program) -> Self {
        Self {
            nodes: program.node_count(),
            edges: program.model().network.edge_count(),
            variables: program.vars().len(),
            auxiliaries: program.vars().iter().filter(|v| matches!(v.kind, VarKind::Aux(_))).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitClassSummary {
    pub representative: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitSummary {
    pub groupoid: usize,
    pub balance: usize,
    pub classes: Vec<OrbitClassSummary>,
}

impl OrbitSummary {
    pub fn new(program: &Program, groupoid: usize, balance: usize, orbits: &OrbitPartition) -> Self {
        let name = |n: usize| program.node(n).name.clone();
        Self {
            groupoid,
            balance,
            classes: orbits
                .classes
                .iter()
                .map(|c| OrbitClassSummary {
                    representative: name(c.representative),
                    members: c.members.iter().map(|&m| name(m)).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbstractClassSummary {
    pub id: usize,
    pub states: Vec<String>,
    pub initial: Vec<String>,
    pub step_edges: usize,
    pub interference_edges: usize,
    /// `instance/node`.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbstractSummary {
    pub abstraction: String,
    /// Every concrete component lies inside the concretization.
    pub sound: bool,
    pub classes: Vec<AbstractClassSummary>,
    pub candidate: Vec<String>,
}

impl AbstractSummary {
    pub fn new(r: &ParametricReport, sound: bool) -> Self {
        use crate::abstraction::format_state;
        Self {
            abstraction: r.abstraction.clone(),
            sound,
            classes: r
                .classes
                .iter()
                .map(|c| AbstractClassSummary {
                    id: c.id,
                    states: c.graph.states.iter().map(format_state).collect(),
                    initial: c.graph.initial.iter().map(format_state).collect(),
                    step_edges: c.graph.step_edges.len(),
                    interference_edges: c.graph.interference_edges.len(),
                    members: c.members.iter().map(|(i, n)| format!("{i}/{n}")).collect(),
                })
                .collect(),
            candidate: r.candidate.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReachSummary {
    pub cap: usize,
    pub complete: bool,
    pub states: usize,
    /// Size of the projection on every node.
    pub projected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditSummary {
    pub cap: usize,
    pub complete: bool,
    pub states: usize,
    /// `None` when the oracle hit the cap.
    pub sound: Option<bool>,
    pub problems: Vec<String>,
}
