use serde::{Deserialize, Serialize};

use super::{Branch, CostModel, Family, FamilyError, Formula, Hole, StateLabels, Target};
use crate::model::StateId;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyJson {
    states: usize,
    init: StateId,
    holes: Vec<HoleJson>,
    transitions: Vec<StateJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constraints: Vec<String>,
    #[serde(default)]
    cost_model: CostModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variables: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valuations: Option<Vec<Vec<i64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HoleJson {
    name: String,
    options: Vec<String>,
    #[serde(default)]
    costs: Option<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateJson {
    from: StateId,
    branches: Vec<BranchJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchJson {
    p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed: Option<StateId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hole: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    holes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<StateId>>,
}

impl Family {
    /// Reads the JSON interchange format.
    pub fn from_json(text: &str) -> Result<Family, FamilyError> {
        let raw: FamilyJson =
            serde_json::from_str(text).map_err(|e| FamilyError::Json(e.to_string()))?;
        let holes: Vec<Hole> = raw
            .holes
            .into_iter()
            .map(|h| {
                let costs = h.costs.unwrap_or_else(|| vec![0; h.options.len()]);
                Hole::new(h.name, h.options).with_costs(costs)
            })
            .collect();
        let hole_id = |name: &str| {
            holes
                .iter()
                .position(|h| h.name == name)
                .ok_or_else(|| FamilyError::UnknownHole(name.to_string()))
        };

        let mut transitions: Vec<Option<Vec<Branch>>> = vec![None; raw.states];
        for st in raw.transitions {
            if st.from >= raw.states {
                return Err(FamilyError::Json(format!(
                    "transition source {} out of range",
                    st.from
                )));
            }
            if transitions[st.from].is_some() {
                return Err(FamilyError::Json(format!("state {} listed twice", st.from)));
            }
            let mut branches = Vec::with_capacity(st.branches.len());
            for b in st.branches {
                let target = match (b.fixed, b.hole, b.holes, b.table) {
                    (Some(t), None, None, None) => Target::Fixed(t),
                    (None, Some(h), None, Some(table)) => Target::hole(hole_id(&h)?, table),
                    (None, None, Some(hs), Some(table)) => Target::HoleRef {
                        holes: hs.iter().map(|h| hole_id(h)).collect::<Result<_, _>>()?,
                        table,
                    },
                    _ => {
                        return Err(FamilyError::Json(format!(
                            "state {}: a branch needs exactly one of `fixed`, `hole`+`table`, `holes`+`table`",
                            st.from
                        )))
                    }
                };
                branches.push(Branch { prob: b.p, target });
            }
            transitions[st.from] = Some(branches);
        }
        let transitions = transitions
            .into_iter()
            .enumerate()
            .map(|(s, t)| t.ok_or_else(|| FamilyError::Json(format!("state {s} has no entry"))))
            .collect::<Result<Vec<_>, _>>()?;

        let mut fam = Family::new(raw.init, transitions, holes)?;
        let constraints = raw
            .constraints
            .iter()
            .map(|c| Formula::parse_sexpr(c, &fam.holes))
            .collect::<Result<Vec<_>, _>>()?;
        fam = fam.with_constraints(constraints)?;
        fam = fam.with_cost_model(raw.cost_model);
        match (raw.variables, raw.valuations) {
            (Some(variables), Some(valuations)) => {
                fam = fam.with_labels(StateLabels {
                    variables,
                    valuations,
                })?;
            }
            (None, None) => {}
            _ => {
                return Err(FamilyError::Labels(
                    "`variables` and `valuations` must be given together".into(),
                ))
            }
        }
        Ok(fam)
    }

    /// Writes the JSON interchange format. The output is canonical:
    /// reading it back and writing again yields identical bytes.
    pub fn to_json(&self) -> String {
        let raw = FamilyJson {
            states: self.len(),
            init: self.init,
            holes: self
                .holes
                .iter()
                .map(|h| HoleJson {
                    name: h.name.clone(),
                    options: h.options.clone(),
                    costs: Some(h.costs.clone()),
                })
                .collect(),
            transitions: self
                .transitions
                .iter()
                .enumerate()
                .map(|(s, bs)| StateJson {
                    from: s,
                    branches: bs.iter().map(|b| self.branch_json(b)).collect(),
                })
                .collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| c.to_sexpr(&self.holes).to_string())
                .collect(),
            cost_model: self.cost_model,
            variables: self.labels.as_ref().map(|l| l.variables.clone()),
            valuations: self.labels.as_ref().map(|l| l.valuations.clone()),
        };
        serde_json::to_string_pretty(&raw).expect("family serializes")
    }

    fn branch_json(&self, b: &Branch) -> BranchJson {
        let mut out = BranchJson {
            p: b.prob,
            fixed: None,
            hole: None,
            holes: None,
            table: None,
        };
        match &b.target {
            Target::Fixed(t) => out.fixed = Some(*t),
            Target::HoleRef { holes, table } => {
                let names: Vec<String> =
                    holes.iter().map(|&h| self.holes[h].name.clone()).collect();
                if let [single] = names.as_slice() {
                    out.hole = Some(single.clone());
                } else {
                    out.holes = Some(names);
                }
                out.table = Some(table.clone());
            }
        }
        out
    }
}
