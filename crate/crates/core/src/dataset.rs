//! Firm/factor data: CSV values plus a TOML schema describing each factor.
//!
//! Data CSV:
//!
//! ```text
//! dmu,Area,Apron,Flights
//! A,1200,304182,30707
//! ```
//!
//! Schema (one table per factor column):
//!
//! ```toml
//! [factors.Area]
//! role = "input"
//! controllable = false
//! uncontrollable_mode = "fixed"   # or "bounded"
//!
//! [factors.Flights]
//! role = "output"
//! goal = 25000          # effectiveness threshold, outputs only
//! weight = 0.0001       # used by custom weights
//! ```
//!
//! Internally inputs precede outputs; within a role factors keep file order.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncontrollableMode {
    /// Target pinned to the observed value.
    Fixed,
    /// Target never falls below the observed value.
    Bounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSchema {
    pub name: String,
    pub role: Role,
    pub controllable: bool,
    /// Only meaningful when `controllable` is false. `None` defers the
    /// choice to the caller (the CLI demands one).
    pub uncontrollable_mode: Option<UncontrollableMode>,
    pub goal: Option<f64>,
    pub weight: Option<f64>,
    /// Per-factor radius for the explicit epsilon scheme.
    pub epsilon: Option<f64>,
    /// Forces this factor's epsilon component to zero.
    pub zero_epsilon: bool,
}

impl FactorSchema {
    pub fn input(name: impl Into<String>) -> Self {
        Self::with_role(name, Role::Input)
    }

    pub fn output(name: impl Into<String>) -> Self {
        Self::with_role(name, Role::Output)
    }

    fn with_role(name: impl Into<String>, role: Role) -> Self {
        Self {
            name: name.into(),
            role,
            controllable: true,
            uncontrollable_mode: None,
            goal: None,
            weight: None,
            epsilon: None,
            zero_epsilon: false,
        }
    }

    pub fn uncontrollable(mut self, mode: UncontrollableMode) -> Self {
        self.controllable = false;
        self.uncontrollable_mode = Some(mode);
        self
    }

    pub fn with_goal(mut self, goal: f64) -> Self {
        self.goal = Some(goal);
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = Some(weight);
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate firm `{name}` at row {row}")]
    DuplicateFirm { row: usize, name: String },
    #[error("non-numeric cell at row {row}, column `{column}`: `{value}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("negative value at row {row}, column `{column}`: {value}")]
    NegativeValue {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("schema parse: {0}")]
    SchemaParse(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    factors: BTreeMap<String, FactorEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorEntry {
    role: Role,
    #[serde(default = "default_true")]
    controllable: bool,
    uncontrollable_mode: Option<UncontrollableMode>,
    goal: Option<f64>,
    weight: Option<f64>,
    epsilon: Option<f64>,
    #[serde(default)]
    zero_epsilon: bool,
}

fn default_true() -> bool {
    true
}

/// An immutable n × (m + p) table of firm observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    firms: Vec<String>,
    inputs: Vec<FactorSchema>,
    outputs: Vec<FactorSchema>,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

impl Dataset {
    /// Build from matrices; `x[i]` and `y[i]` are firm `i`'s inputs and outputs.
    pub fn new(
        firms: Vec<String>,
        inputs: Vec<FactorSchema>,
        outputs: Vec<FactorSchema>,
        x: Vec<Vec<f64>>,
        y: Vec<Vec<f64>>,
    ) -> Result<Self, DatasetError> {
        let n = firms.len();
        if n == 0 {
            return Err(DatasetError::Invalid("no firms".into()));
        }
        if inputs.is_empty() || outputs.is_empty() {
            return Err(DatasetError::Invalid(
                "at least one input and one output factor required".into(),
            ));
        }
        if x.len() != n || y.len() != n {
            return Err(DatasetError::Invalid(format!(
                "{n} firms but {} input rows and {} output rows",
                x.len(),
                y.len()
            )));
        }
        let mut seen = HashSet::new();
        for (i, f) in firms.iter().enumerate() {
            if !seen.insert(f.as_str()) {
                return Err(DatasetError::DuplicateFirm {
                    row: i + 1,
                    name: f.clone(),
                });
            }
        }
        let mut names = HashSet::new();
        for f in inputs.iter().chain(&outputs) {
            if !names.insert(f.name.as_str()) {
                return Err(DatasetError::SchemaMismatch(format!(
                    "factor `{}` declared twice",
                    f.name
                )));
            }
        }
        for f in &inputs {
            if f.role != Role::Input {
                return Err(DatasetError::SchemaMismatch(format!(
                    "factor `{}` listed as input but has output role",
                    f.name
                )));
            }
            if f.goal.is_some() {
                return Err(DatasetError::SchemaMismatch(format!(
                    "goal on input factor `{}`; goals apply to outputs only",
                    f.name
                )));
            }
        }
        if let Some(f) = outputs.iter().find(|f| f.role != Role::Output) {
            return Err(DatasetError::SchemaMismatch(format!(
                "factor `{}` listed as output but has input role",
                f.name
            )));
        }
        for f in inputs.iter().chain(&outputs) {
            for (label, v) in [
                ("goal", f.goal),
                ("weight", f.weight),
                ("epsilon", f.epsilon),
            ] {
                if let Some(v) = v {
                    if !v.is_finite() || v < 0.0 {
                        return Err(DatasetError::SchemaMismatch(format!(
                            "{label} of `{}` must be a finite non-negative number",
                            f.name
                        )));
                    }
                }
            }
        }
        for (block, factors, label) in [(&x, &inputs, "input"), (&y, &outputs, "output")] {
            for (i, row) in block.iter().enumerate() {
                if row.len() != factors.len() {
                    return Err(DatasetError::Invalid(format!(
                        "firm `{}` has {} {label} values, expected {}",
                        firms[i],
                        row.len(),
                        factors.len()
                    )));
                }
                for (j, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(DatasetError::NonNumericCell {
                            row: i + 1,
                            column: factors[j].name.clone(),
                            value: v.to_string(),
                        });
                    }
                    if v < 0.0 {
                        return Err(DatasetError::NegativeValue {
                            row: i + 1,
                            column: factors[j].name.clone(),
                            value: v,
                        });
                    }
                }
            }
            for (j, f) in factors.iter().enumerate() {
                if !block.iter().any(|row| row[j] > 0.0) {
                    return Err(DatasetError::Invalid(format!(
                        "column `{}` has no strictly positive entry",
                        f.name
                    )));
                }
            }
        }
        Ok(Self {
            firms,
            inputs,
            outputs,
            x,
            y,
        })
    }

    /// Controllable inputs/outputs named `x1..`, `y1..`.
    pub fn from_rows(
        firms: Vec<String>,
        x: Vec<Vec<f64>>,
        y: Vec<Vec<f64>>,
    ) -> Result<Self, DatasetError> {
        let m = x.first().map_or(0, Vec::len);
        let p = y.first().map_or(0, Vec::len);
        let inputs = (1..=m)
            .map(|j| FactorSchema::input(format!("x{j}")))
            .collect();
        let outputs = (1..=p)
            .map(|k| FactorSchema::output(format!("y{k}")))
            .collect();
        Self::new(firms, inputs, outputs, x, y)
    }

    pub fn num_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn firms(&self) -> &[String] {
        &self.firms
    }

    pub fn firm_index(&self, name: &str) -> Option<usize> {
        self.firms.iter().position(|f| f == name)
    }

    pub fn inputs(&self) -> &[FactorSchema] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[FactorSchema] {
        &self.outputs
    }

    /// Inputs then outputs.
    pub fn factors(&self) -> impl Iterator<Item = &FactorSchema> {
        self.inputs.iter().chain(&self.outputs)
    }

    pub fn x(&self, firm: usize, input: usize) -> f64 {
        self.x[firm][input]
    }

    pub fn y(&self, firm: usize, output: usize) -> f64 {
        self.y[firm][output]
    }

    pub fn input_row(&self, firm: usize) -> &[f64] {
        &self.x[firm]
    }

    pub fn output_row(&self, firm: usize) -> &[f64] {
        &self.y[firm]
    }

    pub fn input_column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().map(move |r| r[j])
    }

    pub fn output_column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.y.iter().map(move |r| r[k])
    }

    /// Copy with input column `j` multiplied by `factor`.
    pub fn with_scaled_input(&self, j: usize, factor: f64) -> Result<Self, DatasetError> {
        let mut x = self.x.clone();
        x.iter_mut().for_each(|r| r[j] *= factor);
        Self::new(
            self.firms.clone(),
            self.inputs.clone(),
            self.outputs.clone(),
            x,
            self.y.clone(),
        )
    }

    /// Copy with output column `k` multiplied by `factor`.
    pub fn with_scaled_output(&self, k: usize, factor: f64) -> Result<Self, DatasetError> {
        let mut y = self.y.clone();
        y.iter_mut().for_each(|r| r[k] *= factor);
        Self::new(
            self.firms.clone(),
            self.inputs.clone(),
            self.outputs.clone(),
            self.x.clone(),
            y,
        )
    }

    /// Copy with every factor schema replaced by `f(schema)`.
    pub fn map_schema(
        &self,
        mut f: impl FnMut(FactorSchema) -> FactorSchema,
    ) -> Result<Self, DatasetError> {
        let inputs = self.inputs.iter().cloned().map(&mut f).collect();
        let outputs = self.outputs.iter().cloned().map(&mut f).collect();
        Self::new(
            self.firms.clone(),
            inputs,
            outputs,
            self.x.clone(),
            self.y.clone(),
        )
    }

    /// Serialise values back to the data CSV layout (inputs then outputs).
    /// Values use the shortest representation that parses back exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dmu");
        for f in self.factors() {
            out.push(',');
            out.push_str(&f.name);
        }
        out.push('\n');
        for (i, firm) in self.firms.iter().enumerate() {
            out.push_str(firm);
            for v in self.x[i].iter().chain(&self.y[i]) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parse a data CSV against a TOML schema.
pub fn load_dataset(csv_text: &str, schema_text: &str) -> Result<Dataset, DatasetError> {
    let schema: SchemaFile =
        toml::from_str(schema_text).map_err(|e| DatasetError::SchemaParse(e.to_string()))?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.first().map(String::as_str) != Some("dmu") {
        return Err(DatasetError::MissingColumn("dmu".into()));
    }
    let columns = &headers[1..];
    let mut seen = HashSet::new();
    for c in columns {
        if !seen.insert(c.as_str()) {
            return Err(DatasetError::SchemaMismatch(format!(
                "column `{c}` repeated in header"
            )));
        }
        if !schema.factors.contains_key(c) {
            return Err(DatasetError::SchemaMismatch(format!(
                "column `{c}` is not declared in the schema"
            )));
        }
    }
    if let Some(missing) = schema.factors.keys().find(|k| !seen.contains(k.as_str())) {
        return Err(DatasetError::MissingColumn(missing.clone()));
    }

    let mut input_cols = Vec::new();
    let mut output_cols = Vec::new();
    for (pos, name) in columns.iter().enumerate() {
        let e = &schema.factors[name];
        let factor = FactorSchema {
            name: name.clone(),
            role: e.role,
            controllable: e.controllable,
            uncontrollable_mode: e.uncontrollable_mode,
            goal: e.goal,
            weight: e.weight,
            epsilon: e.epsilon,
            zero_epsilon: e.zero_epsilon,
        };
        match e.role {
            Role::Input => input_cols.push((pos, factor)),
            Role::Output => output_cols.push((pos, factor)),
        }
    }

    let mut firms = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| DatasetError::Csv(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(DatasetError::Csv(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let name = record[0].to_owned();
        let parse = |pos: usize| -> Result<f64, DatasetError> {
            let cell = &record[pos + 1];
            let v: f64 = cell.parse().map_err(|_| DatasetError::NonNumericCell {
                row,
                column: columns[pos].clone(),
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonNumericCell {
                    row,
                    column: columns[pos].clone(),
                    value: cell.to_owned(),
                });
            }
            if v < 0.0 {
                return Err(DatasetError::NegativeValue {
                    row,
                    column: columns[pos].clone(),
                    value: v,
                });
            }
            Ok(v)
        };
        x.push(
            input_cols
                .iter()
                .map(|(pos, _)| parse(*pos))
                .collect::<Result<Vec<_>, _>>()?,
        );
        y.push(
            output_cols
                .iter()
                .map(|(pos, _)| parse(*pos))
                .collect::<Result<Vec<_>, _>>()?,
        );
        firms.push(name);
    }

    Dataset::new(
        firms,
        input_cols.into_iter().map(|(_, f)| f).collect(),
        output_cols.into_iter().map(|(_, f)| f).collect(),
        x,
        y,
    )
}

pub fn load_dataset_files(data: &Path, schema: &Path) -> Result<Dataset, DatasetError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| DatasetError::Io(format!("{}: {e}", p.display())))
    };
    load_dataset(&read(data)?, &read(schema)?)
}

#[derive(Debug, Deserialize)]
struct WeightsFile {
    factors: BTreeMap<String, WeightEntry>,
}

#[derive(Debug, Deserialize)]
struct WeightEntry {
    weight: Option<f64>,
}

/// Read per-factor `weight` fields from a schema-format file. Other keys are
/// ignored, so the dataset's own schema file can be passed.
pub fn load_weights(text: &str, ds: &Dataset) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    let file: WeightsFile =
        toml::from_str(text).map_err(|e| DatasetError::SchemaParse(e.to_string()))?;
    let pick = |f: &FactorSchema| {
        file.factors
            .get(&f.name)
            .and_then(|e| e.weight)
            .ok_or_else(|| {
                DatasetError::SchemaMismatch(format!("no weight for factor `{}`", f.name))
            })
    };
    let w_in = ds.inputs().iter().map(pick).collect::<Result<_, _>>()?;
    let w_out = ds.outputs().iter().map(pick).collect::<Result<_, _>>()?;
    Ok((w_in, w_out))
}

/// True iff every observed value is strictly positive.
pub fn validate_positive(ds: &Dataset) -> bool {
    ds.x.iter().chain(&ds.y).flatten().all(|&v| v > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"
        [factors.In]
        role = "input"
        [factors.Out]
        role = "output"
        goal = 2.0
    "#;

    #[test]
    fn minimal_single_firm() {
        let ds = load_dataset("dmu,In,Out\nF,1.0,1.0\n", SCHEMA).unwrap();
        assert_eq!(
            (ds.num_firms(), ds.num_inputs(), ds.num_outputs()),
            (1, 1, 1)
        );
        assert_eq!(ds.outputs()[0].goal, Some(2.0));
    }

    #[test]
    fn negative_value_names_cell() {
        let err = load_dataset("dmu,In,Out\nF,-3,1\n", SCHEMA).unwrap_err();
        assert_eq!(
            err,
            DatasetError::NegativeValue {
                row: 1,
                column: "In".into(),
                value: -3.0
            }
        );
    }

    #[test]
    fn header_and_schema_mismatches() {
        assert_eq!(
            load_dataset("firm,In,Out\nF,1,1\n", SCHEMA).unwrap_err(),
            DatasetError::MissingColumn("dmu".into())
        );
        assert_eq!(
            load_dataset("dmu,In\nF,1\n", SCHEMA).unwrap_err(),
            DatasetError::MissingColumn("Out".into())
        );
        assert!(matches!(
            load_dataset("dmu,In,Out,Extra\nF,1,1,1\n", SCHEMA).unwrap_err(),
            DatasetError::SchemaMismatch(_)
        ));
    }

    #[test]
    fn duplicate_firm_and_bad_cells() {
        assert_eq!(
            load_dataset("dmu,In,Out\nF,1,1\nF,2,2\n", SCHEMA).unwrap_err(),
            DatasetError::DuplicateFirm {
                row: 2,
                name: "F".into()
            }
        );
        let err = load_dataset("dmu,In,Out\nF,\"1,200\",1\n", SCHEMA).unwrap_err();
        assert!(
            matches!(err, DatasetError::NonNumericCell { row: 1, ref column, .. } if column == "In")
        );
        assert!(matches!(
            load_dataset("dmu,In,Out\nF,inf,1\n", SCHEMA).unwrap_err(),
            DatasetError::NonNumericCell { .. }
        ));
    }

    #[test]
    fn goal_on_input_rejected() {
        let schema =
            "[factors.In]\nrole = \"input\"\ngoal = 1.0\n[factors.Out]\nrole = \"output\"\n";
        assert!(matches!(
            load_dataset("dmu,In,Out\nF,1,1\n", schema).unwrap_err(),
            DatasetError::SchemaMismatch(_)
        ));
    }

    #[test]
    fn zero_column_rejected_but_zero_cells_allowed() {
        assert!(load_dataset("dmu,In,Out\nA,0,1\nB,1,0\n", SCHEMA).is_ok());
        assert!(matches!(
            load_dataset("dmu,In,Out\nA,0,1\nB,0,2\n", SCHEMA).unwrap_err(),
            DatasetError::Invalid(_)
        ));
    }

    #[test]
    fn roles_partition_preserves_file_order() {
        let schema = r#"
            [factors.b]
            role = "output"
            [factors.a]
            role = "input"
            [factors.c]
            role = "input"
        "#;
        let ds = load_dataset("dmu,b,a,c\nF,1,2,3\n", schema).unwrap();
        let names: Vec<_> = ds.factors().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["a", "c", "b"]);
        assert_eq!(ds.input_row(0), &[2.0, 3.0]);
        assert_eq!(ds.to_csv(), "dmu,a,c,b\nF,2,3,1\n");
    }

    #[test]
    fn weights_file_by_name() {
        let ds = load_dataset("dmu,In,Out\nA,1,2\n", SCHEMA).unwrap();
        let text = "[factors.Out]\nweight = 0.5\n[factors.In]\nweight = 2.0\nrole = \"input\"\n";
        assert_eq!(load_weights(text, &ds).unwrap(), (vec![2.0], vec![0.5]));
        assert!(load_weights("[factors.In]\nweight = 1.0\n", &ds).is_err());
    }

    #[test]
    fn positivity_predicate() {
        let ds = load_dataset("dmu,In,Out\nA,1,2\n", SCHEMA).unwrap();
        assert!(validate_positive(&ds));
        let ds = load_dataset("dmu,In,Out\nA,1,2\nB,1,0\n", SCHEMA).unwrap();
        assert!(!validate_positive(&ds));
    }
}
