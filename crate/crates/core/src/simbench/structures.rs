use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::io::GraphSpec;
use crate::model::{FactorSpec, IfmStructure, InterventionSpace, RegimeSet, RegimeVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DagIntervention {
    pub name: String,
    pub targets: Vec<String>,
}

/// DAG file: variables, directed edges `[from, to]`, and binary
/// interventions with the nodes they target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DagSpec {
    pub variables: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub interventions: Vec<DagIntervention>,
}

/// Directed acyclic graph with intervention targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    pub names: Vec<String>,
    pub parents: Vec<Vec<usize>>,
    /// Interventions acting on each node.
    pub node_interventions: Vec<Vec<usize>>,
    pub order: Vec<usize>,
    pub space: InterventionSpace,
}

impl Dag {
    pub fn from_spec(spec: &DagSpec) -> Result<Self> {
        let m = spec.variables.len();
        let index: HashMap<&str, usize> = spec
            .variables
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let lookup = |n: &str| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| Error::InvalidStructure(format!("unknown DAG node `{n}`")))
        };
        let mut parents = vec![Vec::new(); m];
        for (a, b) in &spec.edges {
            let (a, b) = (lookup(a)?, lookup(b)?);
            if a == b {
                return Err(Error::InvalidStructure("self-loop in DAG".into()));
            }
            parents[b].push(a);
        }
        for p in &mut parents {
            p.sort_unstable();
            p.dedup();
        }
        let mut node_interventions = vec![Vec::new(); m];
        for (i, d) in spec.interventions.iter().enumerate() {
            for t in &d.targets {
                node_interventions[lookup(t)?].push(i);
            }
        }
        // Kahn's algorithm, lowest index first
        let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
        let mut order = Vec::with_capacity(m);
        let mut ready: std::collections::BTreeSet<usize> = (0..m).filter(|&v| indeg[v] == 0).collect();
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in 0..m {
                if parents[c].contains(&v) {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        ready.insert(c);
                    }
                }
            }
        }
        if order.len() != m {
            return Err(Error::InvalidStructure("DAG has a cycle".into()));
        }
        let space = InterventionSpace::new(
            spec.interventions.iter().map(|d| d.name.clone()).collect(),
            vec![2; spec.interventions.len()],
        )?;
        Ok(Self {
            names: spec.variables.clone(),
            parents,
            node_interventions,
            order,
            space,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Mixed-radix index of the interventions acting on `node`.
    pub fn local_value(&self, node: usize, regime: &RegimeVector) -> usize {
        self.node_interventions[node]
            .iter()
            .fold(0, |acc, &i| acc * self.space.cardinality(i) + regime.levels()[i])
    }

    pub fn local_value_count(&self, node: usize) -> usize {
        self.node_interventions[node]
            .iter()
            .map(|&i| self.space.cardinality(i))
            .product()
    }

    /// One factor per node over the node and its parents, indexed by the
    /// interventions acting on it.
    pub fn moralize(&self) -> Result<IfmStructure> {
        let factors = (0..self.num_vars())
            .map(|k| {
                let mut vars = self.parents[k].clone();
                vars.push(k);
                FactorSpec::new(vars, self.node_interventions[k].clone())
            })
            .collect::<Result<Vec<_>>>()?;
        IfmStructure::new(self.names.clone(), self.space.clone(), factors)
    }
}

/// A named structure with its train and test regimes.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub name: String,
    pub ifm: IfmStructure,
    pub dag: Option<Dag>,
    pub train: RegimeSet,
    pub test: RegimeSet,
}

pub const BUILTIN_NAMES: [&str; 4] = ["sachs", "dream", "chain3", "triangle"];

const SACHS: &str = include_str!("../../fixtures/structures/sachs_dag.json");
const DREAM: &str = include_str!("../../fixtures/structures/dream_dag.json");
const CHAIN3: &str = include_str!("../../fixtures/chain3.json");
const CHAIN3_TRAIN: &str = include_str!("../../fixtures/chain3_train.json");
const TRIANGLE: &str = include_str!("../../fixtures/triangle.json");
const TRIANGLE_TRAIN: &str = include_str!("../../fixtures/triangle_train.json");

fn baseline_and_singletons(space: &InterventionSpace) -> RegimeSet {
    let d = space.dim();
    let mut set = RegimeSet::new();
    set.insert(space.baseline());
    for i in 0..d {
        let mut l = vec![0; d];
        l[i] = 1;
        set.insert(RegimeVector(l));
    }
    set
}

fn parse_regimes(text: &str) -> Result<RegimeSet> {
    let list: Vec<RegimeVector> = serde_json::from_str(text)?;
    Ok(list.into_iter().collect())
}

pub fn builtin_structure(name: &str) -> Result<Builtin> {
    match name {
        "sachs" | "dream" => {
            let spec: DagSpec = serde_json::from_str(if name == "sachs" { SACHS } else { DREAM })?;
            let dag = Dag::from_spec(&spec)?;
            let ifm = dag.moralize()?;
            let train = baseline_and_singletons(ifm.space());
            let test: RegimeSet = if name == "sachs" {
                ifm.space()
                    .all_regimes()
                    .iter()
                    .filter(|r| !train.contains(r))
                    .cloned()
                    .collect()
            } else {
                let d = ifm.space().dim();
                let mut t = RegimeSet::new();
                for a in 0..d {
                    for b in a + 1..d {
                        let mut l = vec![0; d];
                        l[a] = 1;
                        l[b] = 1;
                        t.insert(RegimeVector(l));
                    }
                }
                t
            };
            Ok(Builtin {
                name: name.into(),
                ifm,
                dag: Some(dag),
                train,
                test,
            })
        }
        "chain3" => Ok(Builtin {
            name: name.into(),
            ifm: serde_json::from_str::<GraphSpec>(CHAIN3)?.to_structure()?,
            dag: None,
            train: parse_regimes(CHAIN3_TRAIN)?,
            test: ["1,1,1", "1,0,1"].iter().map(|s| s.parse().expect("literal")).collect(),
        }),
        "triangle" => Ok(Builtin {
            name: name.into(),
            ifm: serde_json::from_str::<GraphSpec>(TRIANGLE)?.to_structure()?,
            dag: None,
            train: parse_regimes(TRIANGLE_TRAIN)?,
            test: std::iter::once("1,1,1".parse().expect("literal")).collect(),
        }),
        other => Err(Error::UnknownStructure(other.into())),
    }
}
