//! JSON formats: space, field, cover, and curve-family files, plus
//! deterministic report serialization (sorted keys, floats rounded to 12
//! significant digits, infinities spelled "inf").

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::curves::{Curve, CurveError, CurveFamily};
use crate::norms::ScalarField;
use crate::space::{Cover, MetricMeasureSpace, SpaceError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("space file needs exactly one of \"edges\" or \"distances\"")]
    EdgesXorDistances,
    #[error("field is missing a value for point {0:?}")]
    MissingValue(String),
    #[error("field value for point {0:?} is not a number or \"inf\"")]
    BadValue(String),
    #[error("distance matrix is {got}x{cols}, expected {want}x{want}")]
    BadMatrixShape { got: usize, cols: usize, want: usize },
}

#[derive(Deserialize)]
struct PointFile {
    id: String,
    measure: f64,
}

#[derive(Deserialize)]
struct EdgeFile {
    a: String,
    b: String,
    length: f64,
}

#[derive(Deserialize)]
struct SpaceFile {
    points: Vec<PointFile>,
    edges: Option<Vec<EdgeFile>>,
    distances: Option<Vec<Vec<f64>>>,
}

/// Parses a space file: point list plus exactly one of an edge list
/// (shortest-path metric) or a full distance matrix.
pub fn parse_space(text: &str) -> Result<MetricMeasureSpace, IoError> {
    let file: SpaceFile = serde_json::from_str(text)?;
    let ids: Vec<String> = file.points.iter().map(|p| p.id.clone()).collect();
    let measure: Vec<f64> = file.points.iter().map(|p| p.measure).collect();
    match (file.edges, file.distances) {
        (Some(edges), None) => {
            let list = edges.into_iter().map(|e| (e.a, e.b, e.length)).collect();
            Ok(MetricMeasureSpace::build_from_edges(ids, list, measure)?)
        }
        (None, Some(matrix)) => {
            let want = ids.len();
            if matrix.len() != want || matrix.iter().any(|row| row.len() != want) {
                let cols = matrix.first().map_or(0, |r| r.len());
                return Err(IoError::BadMatrixShape { got: matrix.len(), cols, want });
            }
            Ok(MetricMeasureSpace::build_explicit(ids, matrix, measure)?)
        }
        _ => Err(IoError::EdgesXorDistances),
    }
}

/// Serializes a space with its edge list; parsing the result rebuilds an
/// identical space, since edge lengths equal the metric values.
pub fn space_to_json(space: &MetricMeasureSpace) -> Value {
    let points: Vec<Value> = (0..space.len())
        .map(|i| json!({"id": space.id(i), "measure": space.measure(i)}))
        .collect();
    let edges: Vec<Value> = space
        .edges()
        .iter()
        .map(|e| json!({"a": space.id(e.a), "b": space.id(e.b), "length": e.length}))
        .collect();
    json!({"points": points, "edges": edges})
}

fn value_to_f64(id: &str, v: &Value) -> Result<f64, IoError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| IoError::BadValue(id.to_string())),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        _ => Err(IoError::BadValue(id.to_string())),
    }
}

/// Parses a field file `{"values": {id: number | "inf"}}`; every point
/// of the space must be present.
pub fn parse_field(space: &MetricMeasureSpace, text: &str) -> Result<ScalarField, IoError> {
    #[derive(Deserialize)]
    struct FieldFile {
        values: Map<String, Value>,
    }
    let file: FieldFile = serde_json::from_str(text)?;
    let mut values = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        let id = space.id(i);
        let raw = file.values.get(id).ok_or_else(|| IoError::MissingValue(id.to_string()))?;
        values.push(value_to_f64(id, raw)?);
    }
    Ok(ScalarField::new(values))
}

/// Serializes a field as a value map keyed by point id.
pub fn field_to_json(space: &MetricMeasureSpace, field: &ScalarField) -> Value {
    let mut map = Map::new();
    for i in 0..space.len() {
        map.insert(space.id(i).to_string(), number(field.get(i)));
    }
    json!({ "values": map })
}

/// Parses a cover file `{"patches": [[ids]]}`.
pub fn parse_cover(space: &MetricMeasureSpace, text: &str) -> Result<Cover, IoError> {
    #[derive(Deserialize)]
    struct CoverFile {
        patches: Vec<Vec<String>>,
    }
    let file: CoverFile = serde_json::from_str(text)?;
    let mut patches = Vec::new();
    for patch in file.patches {
        let mut indices = Vec::new();
        for id in patch {
            indices.push(space.index_of(&id)?);
        }
        indices.sort_unstable();
        indices.dedup();
        patches.push(indices);
    }
    let cover = Cover { patches };
    cover.validate(space)?;
    Ok(cover)
}

/// Parses a curve file `{"curves": [[ids]]}` into an explicit family.
pub fn parse_curves(space: &MetricMeasureSpace, text: &str) -> Result<CurveFamily, IoError> {
    #[derive(Deserialize)]
    struct CurveFileJson {
        curves: Vec<Vec<String>>,
    }
    let file: CurveFileJson = serde_json::from_str(text)?;
    let mut curves = Vec::new();
    for walk in file.curves {
        let mut vertices = Vec::new();
        for id in walk {
            vertices.push(space.index_of(&id)?);
        }
        curves.push(Curve::new(space, vertices)?);
    }
    Ok(CurveFamily::new(space, curves, "explicit"))
}

/// A JSON number for an extended real: infinities become the string
/// "inf", finite values are rounded to 12 significant digits.
pub fn number(x: f64) -> Value {
    if x.is_infinite() {
        return Value::String("inf".into());
    }
    let rounded = round_sig(x);
    serde_json::Number::from_f64(rounded).map(Value::Number).unwrap_or(Value::Null)
}

/// Rounds to 12 significant digits for byte-stable output.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 12 - 1 - x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

/// Recursively rounds every number in a report value; applied before
/// printing so identical inputs give byte-identical output.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                Value::Number(n)
            } else {
                match n.as_f64() {
                    Some(f) => number(f),
                    None => Value::Number(n),
                }
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        other => other,
    }
}

/// Renders a report deterministically: sorted keys (the map type is
/// ordered), canonical numbers, trailing newline.
pub fn render(value: &Value) -> String {
    let canonical = canonicalize(value.clone());
    let mut text = serde_json::to_string_pretty(&canonical).expect("serializable value");
    text.push('\n');
    text
}
