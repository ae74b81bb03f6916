//! Canonical JSON documents for SCMs, graphs, adjacency matrices, metrics
//! and episode logs, plus CSV export of samples.
//!
//! JSON output has sorted keys, two-space indentation, shortest round-trip
//! floats and a trailing newline, so equal values always produce equal
//! bytes.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::distributions::Distribution;
use crate::env::{Action, StepResult};
use crate::expr::{format_real, Expr};
use crate::graph::{CausalGraph, GraphError};
use crate::metrics::{AdjacencyMatrix, StructureMetrics};
use crate::scm::{Intervention, Sample, ScmError, ScmModel};
use crate::usecase::MetricsRow;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("samples do not share the model's variable set (sample {0})")]
    HeterogeneousSamples(usize),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Serializes `value` in canonical form.
pub fn canonical_json(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

fn object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, FormatError> {
    value
        .as_object()
        .ok_or_else(|| schema(path, "expected an object"))
}

fn string<'a>(value: &'a Value, path: &str) -> Result<&'a str, FormatError> {
    value
        .as_str()
        .ok_or_else(|| schema(path, "expected a string"))
}

fn number(value: &Value, path: &str) -> Result<f64, FormatError> {
    value
        .as_f64()
        .ok_or_else(|| schema(path, "expected a number"))
}

fn array<'a>(value: &'a Value, path: &str) -> Result<&'a Vec<Value>, FormatError> {
    value
        .as_array()
        .ok_or_else(|| schema(path, "expected an array"))
}

fn check_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), FormatError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(join(path, k), "unexpected key")),
        None => Ok(()),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn required<'a>(
    obj: &'a Map<String, Value>,
    path: &str,
    key: &str,
) -> Result<&'a Value, FormatError> {
    obj.get(key)
        .ok_or_else(|| schema(join(path, key), "missing"))
}

/// Distribution as `{"dist": kind, "params": {...}}`.
pub fn distribution_to_json(dist: &Distribution) -> Value {
    let params: Map<String, Value> = dist
        .params()
        .into_iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    json!({ "dist": dist.kind(), "params": params })
}

pub fn distribution_from_json(value: &Value, path: &str) -> Result<Distribution, FormatError> {
    let obj = object(value, path)?;
    check_keys(obj, path, &["dist", "params"])?;
    let kind_path = join(path, "dist");
    let kind = string(required(obj, path, "dist")?, &kind_path)?;
    let params_path = join(path, "params");
    let params = object(required(obj, path, "params")?, &params_path)?
        .iter()
        .map(|(k, v)| Ok((k.clone(), number(v, &join(&params_path, k))?)))
        .collect::<Result<BTreeMap<String, f64>, FormatError>>()?;
    Distribution::from_params(kind, &params).map_err(|e| schema(path, e.to_string()))
}

/// An SCM plus free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmDocument {
    pub model: ScmModel,
    pub metadata: Option<Map<String, Value>>,
}

fn equations_to_json(eqs: &BTreeMap<String, Expr>) -> Value {
    Value::Object(
        eqs.iter()
            .map(|(name, e)| (name.clone(), json!({ "expr": e.to_string() })))
            .collect(),
    )
}

pub fn scm_document_to_json(doc: &ScmDocument) -> Value {
    let m = &doc.model;
    let mut root = Map::new();
    root.insert("format_version".into(), json!(FORMAT_VERSION));
    root.insert("endogenous".into(), equations_to_json(m.equations()));
    root.insert(
        "exogenous".into(),
        Value::Object(
            m.distributions()
                .iter()
                .map(|(name, d)| (name.clone(), distribution_to_json(d)))
                .collect(),
        ),
    );
    if !m.active_interventions().is_empty() {
        root.insert(
            "interventions".into(),
            equations_to_json(m.active_interventions()),
        );
    }
    if let Some(meta) = &doc.metadata {
        root.insert("metadata".into(), Value::Object(meta.clone()));
    }
    Value::Object(root)
}

pub fn write_scm_document(doc: &ScmDocument) -> Vec<u8> {
    canonical_json(&scm_document_to_json(doc))
}

pub fn write_scm(model: &ScmModel) -> Vec<u8> {
    write_scm_document(&ScmDocument {
        model: model.clone(),
        metadata: None,
    })
}

fn equations_from_json(value: &Value, path: &str) -> Result<BTreeMap<String, Expr>, FormatError> {
    let mut out = BTreeMap::new();
    for (name, entry) in object(value, path)? {
        let entry_path = join(path, name);
        let obj = object(entry, &entry_path)?;
        check_keys(obj, &entry_path, &["expr"])?;
        let expr_path = join(&entry_path, "expr");
        let src = string(required(obj, &entry_path, "expr")?, &expr_path)?;
        let expr = Expr::parse(src).map_err(|e| schema(&expr_path, e.to_string()))?;
        out.insert(name.clone(), expr);
    }
    Ok(out)
}

pub fn scm_document_from_json(root: &Value) -> Result<ScmDocument, FormatError> {
    let obj = object(root, "$")?;
    check_keys(
        obj,
        "",
        &[
            "format_version",
            "endogenous",
            "exogenous",
            "interventions",
            "metadata",
        ],
    )?;
    let version = required(obj, "", "format_version")?;
    if version.as_u64() != Some(FORMAT_VERSION) {
        return Err(schema(
            "format_version",
            format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    let endogenous = equations_from_json(required(obj, "", "endogenous")?, "endogenous")?;
    let mut exogenous = BTreeMap::new();
    for (name, v) in object(required(obj, "", "exogenous")?, "exogenous")? {
        exogenous.insert(
            name.clone(),
            distribution_from_json(v, &join("exogenous", name))?,
        );
    }
    let interventions = match obj.get("interventions") {
        Some(v) => equations_from_json(v, "interventions")?,
        None => BTreeMap::new(),
    };
    let metadata = match obj.get("metadata") {
        Some(v) => Some(object(v, "metadata")?.clone()),
        None => None,
    };

    let mut model = ScmModel::from_parts(endogenous, exogenous).map_err(|e| match e {
        ScmError::UnknownVariable {
            variable,
            reference,
        } => schema(
            format!("endogenous.{variable}.expr"),
            format!("references undeclared variable `{reference}`"),
        ),
        ScmError::InvalidName(name) => schema(name, "invalid variable name"),
        ScmError::DuplicateName(name) => {
            schema(format!("exogenous.{name}"), "also declared as endogenous")
        }
        other => FormatError::Scm(other),
    })?;
    let interventions: Vec<Intervention> = interventions
        .into_iter()
        .map(|(target, equation)| Intervention { target, equation })
        .collect();
    model
        .do_interventions(&interventions)
        .map_err(|e| match e {
            ScmError::UnknownVariable {
                variable,
                reference,
            } => schema(
                format!("interventions.{variable}.expr"),
                format!("references undeclared variable `{reference}`"),
            ),
            ScmError::UnknownTarget(t) => {
                schema(format!("interventions.{t}"), "not an endogenous variable")
            }
            other => FormatError::Scm(other),
        })?;
    Ok(ScmDocument { model, metadata })
}

pub fn read_scm_document(bytes: &[u8]) -> Result<ScmDocument, FormatError> {
    scm_document_from_json(&serde_json::from_slice(bytes)?)
}

pub fn read_scm(bytes: &[u8]) -> Result<ScmModel, FormatError> {
    Ok(read_scm_document(bytes)?.model)
}

pub fn graph_to_json(graph: &CausalGraph) -> Value {
    json!({
        "endo": graph.endogenous(),
        "exo": graph.exogenous(),
        "edges": graph.edges().iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
    })
}

pub fn write_graph(graph: &CausalGraph) -> Vec<u8> {
    canonical_json(&graph_to_json(graph))
}

fn string_list(value: &Value, path: &str) -> Result<Vec<String>, FormatError> {
    array(value, path)?
        .iter()
        .enumerate()
        .map(|(i, v)| string(v, &format!("{path}[{i}]")).map(str::to_string))
        .collect()
}

pub fn graph_from_json(root: &Value) -> Result<CausalGraph, FormatError> {
    let obj = object(root, "$")?;
    check_keys(obj, "", &["endo", "exo", "edges"])?;
    let endo = string_list(required(obj, "", "endo")?, "endo")?;
    let exo = string_list(required(obj, "", "exo")?, "exo")?;
    let mut edges = Vec::new();
    for (i, e) in array(required(obj, "", "edges")?, "edges")?
        .iter()
        .enumerate()
    {
        let path = format!("edges[{i}]");
        let pair = string_list(e, &path)?;
        let [from, to]: [String; 2] = pair
            .try_into()
            .map_err(|_| schema(&path, "expected a [from, to] pair"))?;
        edges.push((from, to));
    }
    Ok(CausalGraph::new(endo, exo, edges)?)
}

pub fn read_graph(bytes: &[u8]) -> Result<CausalGraph, FormatError> {
    graph_from_json(&serde_json::from_slice(bytes)?)
}

pub fn adjacency_to_json(m: &AdjacencyMatrix) -> Value {
    json!({ "nodes": m.nodes(), "adjacency": m.rows() })
}

/// Reads either an adjacency document (`nodes` + `adjacency`) or a graph
/// document, whose endogenous part is used.
pub fn read_adjacency(bytes: &[u8]) -> Result<AdjacencyMatrix, FormatError> {
    let root: Value = serde_json::from_slice(bytes)?;
    let obj = object(&root, "$")?;
    if obj.contains_key("endo") {
        return Ok(AdjacencyMatrix::from_graph(&graph_from_json(&root)?));
    }
    check_keys(obj, "", &["nodes", "adjacency"])?;
    let nodes = string_list(required(obj, "", "nodes")?, "nodes")?;
    let mut rows = Vec::new();
    for (i, row) in array(required(obj, "", "adjacency")?, "adjacency")?
        .iter()
        .enumerate()
    {
        let path = format!("adjacency[{i}]");
        let row = array(row, &path)?
            .iter()
            .enumerate()
            .map(|(j, v)| {
                v.as_u64()
                    .filter(|&x| x <= 1)
                    .map(|x| x as u8)
                    .ok_or_else(|| schema(format!("{path}[{j}]"), "expected 0 or 1"))
            })
            .collect::<Result<Vec<u8>, _>>()?;
        rows.push(row);
    }
    AdjacencyMatrix::from_rows(nodes, &rows).map_err(|e| schema("adjacency", e.to_string()))
}

pub fn metrics_to_json(m: &StructureMetrics) -> Value {
    json!({
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn_,
        "tn": m.tn,
        "f1": m.f1,
        "tpr": m.tpr,
    })
}

pub fn metrics_rows_to_json(rows: &[MetricsRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "regime": r.regime.name(),
                    "algorithm": r.algorithm,
                    "f1_mean": r.f1_mean,
                    "f1_sd": r.f1_sd,
                    "tpr_mean": r.tpr_mean,
                    "tpr_sd": r.tpr_sd,
                    "n_scms": r.n_scms,
                })
            })
            .collect(),
    )
}

/// Interventions file: `[{"target": name, "expr": source}, ...]`.
pub fn read_interventions(bytes: &[u8]) -> Result<Vec<Intervention>, FormatError> {
    let root: Value = serde_json::from_slice(bytes)?;
    array(&root, "$")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("[{i}]");
            let obj = object(v, &path)?;
            check_keys(obj, &path, &["target", "expr"])?;
            let target = string(required(obj, &path, "target")?, &join(&path, "target"))?;
            let expr_path = join(&path, "expr");
            let src = string(required(obj, &path, "expr")?, &expr_path)?;
            let equation = Expr::parse(src).map_err(|e| schema(expr_path, e.to_string()))?;
            Ok(Intervention::new(target, equation))
        })
        .collect()
}

pub fn interventions_to_json(ivs: &[Intervention]) -> Value {
    Value::Array(
        ivs.iter()
            .map(|iv| json!({ "target": iv.target, "expr": iv.equation.to_string() }))
            .collect(),
    )
}

fn values_to_json(values: &BTreeMap<String, f64>) -> Value {
    Value::Object(values.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
}

/// One compact JSON line describing a step, newline included.
pub fn episode_record(episode: u64, t: u64, action: &Action, result: &StepResult) -> String {
    let record = json!({
        "episode": episode,
        "t": t,
        "action_indices": action.indices.iter().collect::<Vec<_>>(),
        "observation": result.observation,
        "reward": result.reward,
        "terminated": result.terminated,
        "truncated": result.truncated,
        "sample": values_to_json(&result.info.values()),
    });
    let mut line = serde_json::to_string(&record).expect("JSON values always serialize");
    line.push('\n');
    line
}

/// CSV with endogenous columns then exogenous columns, each in name order.
pub fn write_samples_csv(model: &ScmModel, samples: &[Sample]) -> Result<Vec<u8>, FormatError> {
    let endo: Vec<&String> = model.endogenous_names().collect();
    let exo: Vec<&String> = model.exogenous_names().collect();
    let mut out = String::new();
    let header: Vec<&str> = endo.iter().chain(&exo).map(|s| s.as_str()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, s) in samples.iter().enumerate() {
        if !s.endogenous.keys().eq(endo.iter().copied())
            || !s.exogenous.keys().eq(exo.iter().copied())
        {
            return Err(FormatError::HeterogeneousSamples(i));
        }
        let row: Vec<String> = s
            .endogenous
            .values()
            .chain(s.exogenous.values())
            .map(|&v| format_real(v))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    fn worked_example() -> ScmModel {
        let mut m = ScmModel::new();
        m.add_exogenous("U", Distribution::uniform_int(3.0, 8.0).unwrap())
            .unwrap()
            .add_endogenous("A", Expr::parse("U + 5").unwrap())
            .unwrap()
            .add_endogenous("Effect", Expr::parse("A * 2").unwrap())
            .unwrap();
        m
    }

    #[test]
    fn scm_document_layout() {
        let text = String::from_utf8(write_scm(&worked_example())).unwrap();
        let expected = r#"{
  "endogenous": {
    "A": {
      "expr": "(U + 5)"
    },
    "Effect": {
      "expr": "(A * 2)"
    }
  },
  "exogenous": {
    "U": {
      "dist": "uniform_int",
      "params": {
        "a": 3.0,
        "b": 8.0
      }
    }
  },
  "format_version": 1
}
"#;
        assert_eq!(text, expected);
    }

    #[test]
    fn scm_round_trip() {
        let m = worked_example();
        let bytes = write_scm(&m);
        assert_eq!(read_scm(&bytes).unwrap(), m);
        assert_eq!(write_scm(&read_scm(&bytes).unwrap()), bytes);

        let empty = ScmModel::new();
        assert_eq!(read_scm(&write_scm(&empty)).unwrap(), empty);
    }

    #[test]
    fn interventions_and_metadata_round_trip() {
        let mut m = worked_example();
        m.do_interventions(&[Intervention::parse("Effect", "A + 1").unwrap()])
            .unwrap();
        let mut meta = Map::new();
        meta.insert("seed".into(), json!(42));
        let doc = ScmDocument {
            model: m,
            metadata: Some(meta),
        };
        let bytes = write_scm_document(&doc);
        assert_eq!(read_scm_document(&bytes).unwrap(), doc);
    }

    #[test]
    fn undeclared_reference_has_path() {
        let doc =
            br#"{"format_version": 1, "endogenous": {"X": {"expr": "Z + 1"}}, "exogenous": {}}"#;
        match read_scm(doc) {
            Err(FormatError::Schema { path, .. }) => assert_eq!(path, "endogenous.X.expr"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        let cases: &[(&[u8], &str)] = &[
            (br#"{"endogenous": {}, "exogenous": {}}"#, "format_version"),
            (br#"{"format_version": 2, "endogenous": {}, "exogenous": {}}"#, "format_version"),
            (br#"{"format_version": 1, "endogenous": {"X": {"expr": "1 +"}}, "exogenous": {}}"#, "endogenous.X.expr"),
            (br#"{"format_version": 1, "endogenous": {}, "exogenous": {"U": {"dist": "gauss", "params": {"mu": 0}}}}"#, "exogenous.U"),
            (br#"{"format_version": 1, "endogenous": {}, "exogenous": {"U": {"dist": "gauss", "params": {"mu": "x", "sigma": 1}}}}"#, "exogenous.U.params.mu"),
            (br#"{"format_version": 1, "endogenous": {}, "exogenous": {}, "extra": 1}"#, "extra"),
        ];
        for (doc, want) in cases {
            match read_scm(doc) {
                Err(FormatError::Schema { path, .. }) => assert_eq!(&path, want),
                other => panic!("{want}: {other:?}"),
            }
        }
        assert!(matches!(read_scm(b"{"), Err(FormatError::Json(_))));
    }

    #[test]
    fn cyclic_document_is_rejected() {
        let doc = br#"{"format_version": 1, "endogenous": {"X": {"expr": "Y"}, "Y": {"expr": "X"}}, "exogenous": {}}"#;
        assert!(matches!(
            read_scm(doc),
            Err(FormatError::Scm(ScmError::Cycle(_)))
        ));
    }

    #[test]
    fn graph_round_trip() {
        let g = CausalGraph::new(
            vec!["X0".into(), "X1".into()],
            vec!["U0".into()],
            [("X0".into(), "X1".into()), ("U0".into(), "X1".into())],
        )
        .unwrap();
        let bytes = write_graph(&g);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(
            text.find("\"U0\",\n      \"X1\"").unwrap()
                < text.find("\"X0\",\n      \"X1\"").unwrap()
        );
        assert_eq!(read_graph(&bytes).unwrap(), g);
        assert!(read_graph(br#"{"endo": ["A"], "exo": [], "edges": [["A"]]}"#).is_err());
        assert!(matches!(
            read_graph(br#"{"endo": ["A", "B"], "exo": [], "edges": [["A", "B"], ["B", "A"]]}"#),
            Err(FormatError::Graph(GraphError::Cycle(_)))
        ));
    }

    #[test]
    fn adjacency_formats() {
        let m = AdjacencyMatrix::from_edges(["A", "B"], [("A", "B")]).unwrap();
        let bytes = canonical_json(&adjacency_to_json(&m));
        assert_eq!(read_adjacency(&bytes).unwrap(), m);
        let from_graph = read_adjacency(
            br#"{"endo": ["A", "B"], "exo": ["U"], "edges": [["A", "B"], ["U", "A"]]}"#,
        )
        .unwrap();
        assert_eq!(from_graph, m);
        assert!(read_adjacency(br#"{"nodes": ["A"], "adjacency": [[2]]}"#).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = worked_example();
        let samples = m.sample_n(100, &mut RngState::new(1)).unwrap();
        let csv = String::from_utf8(write_samples_csv(&m, &samples).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 101);
        assert_eq!(lines[0], "A,Effect,U");
        assert!(!csv.contains('\r') && csv.ends_with('\n'));
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[1], 2.0 * first[0]);
        assert_eq!(write_samples_csv(&m, &[]).unwrap(), b"A,Effect,U\n");
    }

    #[test]
    fn csv_rejects_foreign_samples() {
        let m = worked_example();
        let mut other = ScmModel::new();
        other
            .add_exogenous("V", Distribution::bernoulli(0.5).unwrap())
            .unwrap();
        let s = other.sample(&mut RngState::new(1)).unwrap();
        assert!(matches!(
            write_samples_csv(&m, &[s]),
            Err(FormatError::HeterogeneousSamples(0))
        ));
    }

    #[test]
    fn interventions_file() {
        let ivs = read_interventions(
            br#"[{"target": "A", "expr": "5"}, {"target": "Effect", "expr": "A + 1"}]"#,
        )
        .unwrap();
        assert_eq!(ivs[1], Intervention::parse("Effect", "A + 1").unwrap());
        let back = read_interventions(&canonical_json(&interventions_to_json(&ivs))).unwrap();
        assert_eq!(back, ivs);
        assert!(read_interventions(br#"[{"target": "A"}]"#).is_err());
    }

    #[test]
    fn episode_line_shape() {
        let result = StepResult {
            observation: vec![5.0, 10.0],
            reward: 0.0,
            terminated: false,
            truncated: true,
            info: Sample {
                endogenous: BTreeMap::from([("A".into(), 5.0), ("Effect".into(), 10.0)]),
                exogenous: BTreeMap::from([("U".into(), 3.0)]),
            },
        };
        let line = episode_record(0, 4, &Action::new([0]), &result);
        assert_eq!(
            line,
            "{\"action_indices\":[0],\"episode\":0,\"observation\":[5.0,10.0],\"reward\":0.0,\"sample\":{\"A\":5.0,\"Effect\":10.0,\"U\":3.0},\"t\":4,\"terminated\":false,\"truncated\":true}\n"
        );
    }
}
