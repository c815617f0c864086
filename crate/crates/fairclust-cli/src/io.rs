//! Input decoding and output plumbing.
//!
//! Three input shapes are recognized by sniffing, not by extension:
//! JSON objects are facility-location instances, CSV files whose first
//! header cell is `id` are point tables (`id,w,x1,...,xd`), and any other
//! CSV is a full symmetric distance matrix headed by the point ids.

use std::fs;
use std::path::Path;

use fairclust_core::facility_location::FlInstance;
use fairclust_core::geometry::{CostParams, Dataset, Point, PointId};
use fairclust_core::matroid::{ElementId, PartitionMatroid};
use serde::Deserialize;

use crate::CliError;

/// The O(n³) metric validation is only affordable at desk scale.
const TRIANGLE_CHECK_CAP: usize = 500;

/// A facility-location instance together with the external ids its
/// facilities and clients were declared under.
pub struct FlLoad {
    pub instance: FlInstance,
    pub facility_ids: Vec<u64>,
    pub client_ids: Vec<u64>,
}

pub enum LoadedInput {
    Dataset(Dataset),
    Fl(Box<FlLoad>),
}

pub fn load_input(path: &Path) -> Result<LoadedInput, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Ok(LoadedInput::Fl(Box::new(parse_fl_json(&text, path)?)))
    } else {
        Ok(LoadedInput::Dataset(parse_dataset_csv(&text, path)?))
    }
}

/// Loads an input that must be a point dataset (audit, k-center, sweep).
pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    match load_input(path)? {
        LoadedInput::Dataset(ds) => Ok(ds),
        LoadedInput::Fl(_) => Err(CliError::Input(format!(
            "{}: this mode needs a point dataset, not a facility-location instance",
            path.display()
        ))),
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn write_output(output: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, contents)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// CSV datasets.
// ---------------------------------------------------------------------------

fn parse_dataset_csv(text: &str, path: &Path) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| csv_err(path, &e))?
        .clone();
    if headers.is_empty() {
        return Err(CliError::Input(format!("{}: empty input", path.display())));
    }
    if headers.get(0) == Some("id") {
        parse_point_rows(&mut rdr, &headers, path)
    } else {
        parse_matrix_rows(&mut rdr, &headers, path)
    }
}

fn parse_point_rows(
    rdr: &mut csv::Reader<&[u8]>,
    headers: &csv::StringRecord,
    path: &Path,
) -> Result<Dataset, CliError> {
    if headers.get(1) != Some("w") {
        return Err(CliError::Input(format!(
            "{} line 1: point header must start `id,w`, got `{}`",
            path.display(),
            headers.iter().take(2).collect::<Vec<_>>().join(",")
        )));
    }
    if headers.len() < 3 {
        return Err(CliError::Input(format!(
            "{} line 1: point rows need at least one coordinate column",
            path.display()
        )));
    }
    let dims = headers.len() - 2;
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dims + 2 {
            return Err(CliError::Input(format!(
                "{} line {line}: expected {} fields, got {}",
                path.display(),
                dims + 2,
                record.len()
            )));
        }
        let id: PointId = parse_field(&record, 0, "id", path, line)?;
        let w: f64 = parse_field(&record, 1, "w", path, line)?;
        let mut coords = Vec::with_capacity(dims);
        for j in 0..dims {
            coords.push(parse_field(&record, j + 2, headers.get(j + 2).unwrap_or("x"), path, line)?);
        }
        points.push(Point::new(id, w, coords));
    }
    Dataset::euclidean(points)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_matrix_rows(
    rdr: &mut csv::Reader<&[u8]>,
    headers: &csv::StringRecord,
    path: &Path,
) -> Result<Dataset, CliError> {
    let mut ids = Vec::with_capacity(headers.len());
    for cell in headers.iter() {
        let id: PointId = cell.parse().map_err(|_| {
            CliError::Input(format!(
                "{} line 1: matrix header must be point ids, got `{cell}`",
                path.display()
            ))
        })?;
        ids.push(id);
    }
    let n = ids.len();
    let mut matrix = Vec::with_capacity(n);
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n {
            return Err(CliError::Input(format!(
                "{} line {line}: expected {n} fields, got {}",
                path.display(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(parse_field::<f64>(&record, j, "distance", path, line)?);
        }
        matrix.push(row);
    }
    if matrix.len() != n {
        return Err(CliError::Input(format!(
            "{}: matrix has {} rows but {n} header ids",
            path.display(),
            matrix.len()
        )));
    }
    let points = ids.into_iter().map(|id| Point::unit(id, Vec::new())).collect();
    Dataset::explicit(points, &matrix, n <= TRIANGLE_CHECK_CAP)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    path: &Path,
    line: u64,
) -> Result<T, CliError> {
    let cell = record.get(idx).unwrap_or("");
    cell.parse().map_err(|_| {
        CliError::Input(format!(
            "{} line {line}: bad value `{cell}` in column `{name}`",
            path.display()
        ))
    })
}

fn csv_err(path: &Path, e: &csv::Error) -> CliError {
    let line = match e.kind() {
        csv::ErrorKind::Utf8 { pos, .. } | csv::ErrorKind::UnequalLengths { pos, .. } => {
            pos.as_ref().map(|p| p.line())
        }
        csv::ErrorKind::Deserialize { pos, .. } => pos.as_ref().map(|p| p.line()),
        _ => None,
    };
    match line {
        Some(line) => CliError::Input(format!("{} line {line}: {e}", path.display())),
        None => CliError::Input(format!("{}: {e}", path.display())),
    }
}

// ---------------------------------------------------------------------------
// Facility-location JSON.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlJson {
    p: f64,
    facilities: Vec<FacilityJson>,
    clients: Vec<ClientJson>,
    matroid: MatroidJson,
    distances: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FacilityJson {
    id: u64,
    cost: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClientJson {
    id: u64,
    demand: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatroidJson {
    parts: Vec<Vec<u64>>,
    caps: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoordinatesJson {
    facilities: Vec<Vec<f64>>,
    clients: Vec<Vec<f64>>,
}

fn parse_fl_json(text: &str, path: &Path) -> Result<FlLoad, CliError> {
    let raw: FlJson = serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));

    let facility_ids: Vec<u64> = raw.facilities.iter().map(|f| f.id).collect();
    let client_ids: Vec<u64> = raw.clients.iter().map(|c| c.id).collect();
    let mut fac_index = std::collections::BTreeMap::new();
    for (u, &id) in facility_ids.iter().enumerate() {
        if fac_index.insert(id, u).is_some() {
            return Err(bad(format!("duplicate facility id {id}")));
        }
    }
    let opening: Vec<f64> = raw.facilities.iter().map(|f| f.cost).collect();
    let demand: Vec<f64> = raw.clients.iter().map(|c| c.demand).collect();

    let mut parts: Vec<Vec<ElementId>> = Vec::with_capacity(raw.matroid.parts.len());
    for part in &raw.matroid.parts {
        let mut elems = Vec::with_capacity(part.len());
        for &id in part {
            let &u = fac_index
                .get(&id)
                .ok_or_else(|| bad(format!("matroid part names unknown facility id {id}")))?;
            elems.push(u as ElementId);
        }
        parts.push(elems);
    }
    let matroid = PartitionMatroid::new(parts, raw.matroid.caps)
        .map_err(|e| bad(format!("matroid: {e}")))?;

    let n = facility_ids.len() + client_ids.len();
    let (dist, derived_metric) = match &raw.distances {
        serde_json::Value::Array(_) => {
            let matrix: Vec<Vec<f64>> = serde_json::from_value(raw.distances.clone())
                .map_err(|e| bad(format!("distances matrix: {e}")))?;
            (matrix, false)
        }
        serde_json::Value::Object(_) => {
            let coords: CoordinatesJson = serde_json::from_value(raw.distances.clone())
                .map_err(|e| bad(format!("distances coordinates: {e}")))?;
            if coords.facilities.len() != facility_ids.len()
                || coords.clients.len() != client_ids.len()
            {
                return Err(bad(format!(
                    "coordinates list {} facilities and {} clients, instance has {} and {}",
                    coords.facilities.len(),
                    coords.clients.len(),
                    facility_ids.len(),
                    client_ids.len()
                )));
            }
            (euclidean_matrix(&coords)?, true)
        }
        _ => return Err(bad("distances must be a matrix or a coordinates object".into())),
    };

    let params = CostParams::with_p(raw.p).map_err(|e| bad(e.to_string()))?;
    let check = !derived_metric && n <= TRIANGLE_CHECK_CAP;
    let instance = FlInstance::new(opening, demand, dist, params, matroid, check)
        .map_err(|e| bad(e.to_string()))?;
    Ok(FlLoad { instance, facility_ids, client_ids })
}

/// Joint Euclidean metric over facility coordinates followed by client
/// coordinates, matching the instance's facility-major index order.
fn euclidean_matrix(coords: &CoordinatesJson) -> Result<Vec<Vec<f64>>, CliError> {
    let all: Vec<&[f64]> = coords
        .facilities
        .iter()
        .chain(coords.clients.iter())
        .map(Vec::as_slice)
        .collect();
    let dims = all.first().map_or(0, |c| c.len());
    for c in &all {
        if c.len() != dims {
            return Err(CliError::Input(
                "coordinates have inconsistent dimensions".into(),
            ));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Input("coordinates must be finite".into()));
        }
    }
    let n = all.len();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = all[i]
                .iter()
                .zip(all[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(dist)
}

// ---------------------------------------------------------------------------
// Center lists.
// ---------------------------------------------------------------------------

/// Accepts either a bare JSON array of ids or `{"centers": [...]}`.
pub fn load_centers(path: &Path) -> Result<Vec<PointId>, CliError> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let arr = match &value {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => match o.get("centers") {
            Some(serde_json::Value::Array(a)) => a,
            _ => {
                return Err(CliError::Input(format!(
                    "{}: expected a `centers` array",
                    path.display()
                )))
            }
        },
        _ => {
            return Err(CliError::Input(format!(
                "{}: expected a JSON array of point ids",
                path.display()
            )))
        }
    };
    let mut centers = Vec::with_capacity(arr.len());
    for v in arr {
        let id = v
            .as_u64()
            .and_then(|x| PointId::try_from(x).ok())
            .ok_or_else(|| {
                CliError::Input(format!("{}: `{v}` is not a point id", path.display()))
            })?;
        centers.push(id);
    }
    Ok(centers)
}
