//! On-disk formats: dataset JSON, raw-sample CSV, assignment CSV, map JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use dhsom::datagen::{GenerationParams, LabeledDataset};
use dhsom::{build_equidepth, DatasetSpec, Histogram, ObservationVector, SomConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Observation identifier: integer or free text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObsId {
    Int(i64),
    Text(String),
}

impl fmt::Display for ObsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsId::Int(i) => write!(f, "{i}"),
            ObsId::Text(s) => f.write_str(s),
        }
    }
}

impl ObsId {
    /// Ids read back from CSV text: integers when they parse as such.
    pub fn parse(s: &str) -> Self {
        s.parse().map(ObsId::Int).unwrap_or_else(|_| ObsId::Text(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub id: ObsId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    pub variables: Vec<Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub spec: DatasetSpec,
    pub params: GenerationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
    pub observations: Vec<ObservationRecord>,
}

impl DatasetFile {
    pub fn from_generated(data: &LabeledDataset) -> Self {
        let observations = data
            .observations
            .iter()
            .zip(&data.labels)
            .enumerate()
            .map(|(k, (x, &label))| ObservationRecord {
                id: ObsId::Int(k as i64),
                label: Some(label),
                variables: x.histograms().to_vec(),
            })
            .collect();
        DatasetFile {
            dimension: data.spec.dimension,
            bins: Some(data.spec.bins),
            generator: Some(GeneratorInfo {
                spec: data.spec,
                params: data.params.clone(),
            }),
            observations,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.observations.is_empty() {
            return Err(CliError::Input("dataset has no observations".into()));
        }
        let mut seen = BTreeMap::new();
        for (k, obs) in self.observations.iter().enumerate() {
            if obs.variables.len() != self.dimension {
                return Err(CliError::Input(format!(
                    "observation {k} (id {}): expected {} variables, found {}",
                    obs.id,
                    self.dimension,
                    obs.variables.len()
                )));
            }
            if let Some(prev) = seen.insert(&obs.id, k) {
                return Err(CliError::Input(format!(
                    "observations {prev} and {k} share id {}",
                    obs.id
                )));
            }
        }
        Ok(())
    }

    pub fn observation_vectors(&self) -> CliResult<Vec<ObservationVector>> {
        self.observations
            .iter()
            .map(|o| ObservationVector::new(o.variables.clone()).map_err(|e| CliError::input(format!("id {}", o.id), e)))
            .collect()
    }

    pub fn ids(&self) -> Vec<ObsId> {
        self.observations.iter().map(|o| o.id.clone()).collect()
    }

    /// Ground-truth labels when every observation carries one.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.observations.iter().map(|o| o.label).collect()
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))?;
    if text.trim().is_empty() {
        return Err(CliError::Input(format!("{}: file is empty", path.display())));
    }
    Ok(text)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::input(dir.display(), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::input(path.display(), e))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_dataset_json(text: &str, origin: &str) -> CliResult<DatasetFile> {
    let file: DatasetFile = serde_json::from_str(text).map_err(|e| CliError::input(origin, e))?;
    file.validate()?;
    Ok(file)
}

#[derive(Debug, Deserialize)]
struct RawRow {
    id: String,
    variable: String,
    value: f64,
}

/// Raw samples with columns `id,variable,value`, binned per (id, variable)
/// into equi-depth histograms. Ids and variables keep their first-seen order.
pub fn parse_raw_csv(text: &str, origin: &str, bins: usize) -> CliResult<DatasetFile> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::input(origin, e))?.clone();
    for col in ["id", "variable", "value"] {
        if !headers.iter().any(|h| h == col) {
            return Err(CliError::Input(format!("{origin}: missing column '{col}' in header")));
        }
    }
    let mut id_order: Vec<String> = Vec::new();
    let mut var_order: Vec<String> = Vec::new();
    let mut samples: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut id_index = BTreeMap::new();
    let mut var_index = BTreeMap::new();
    for row in reader.deserialize::<RawRow>() {
        let row = row.map_err(|e| CliError::input(origin, e))?;
        if !row.value.is_finite() {
            return Err(CliError::Input(format!("{origin}: non-finite value for id {}", row.id)));
        }
        let i = *id_index.entry(row.id.clone()).or_insert_with(|| {
            id_order.push(row.id.clone());
            id_order.len() - 1
        });
        let v = *var_index.entry(row.variable.clone()).or_insert_with(|| {
            var_order.push(row.variable.clone());
            var_order.len() - 1
        });
        samples.entry((i, v)).or_default().push(row.value);
    }
    if id_order.is_empty() {
        return Err(CliError::Input(format!("{origin}: no data rows")));
    }
    let mut observations = Vec::with_capacity(id_order.len());
    for (i, id) in id_order.iter().enumerate() {
        let mut variables = Vec::with_capacity(var_order.len());
        for (v, var) in var_order.iter().enumerate() {
            let values = samples
                .get(&(i, v))
                .ok_or_else(|| CliError::Input(format!("{origin}: id {id} has no samples for variable {var}")))?;
            let h = build_equidepth(values, bins).map_err(|e| CliError::input(format!("{origin}: id {id}"), e))?;
            variables.push(h);
        }
        observations.push(ObservationRecord {
            id: ObsId::parse(id),
            label: None,
            variables,
        });
    }
    Ok(DatasetFile {
        dimension: var_order.len(),
        bins: Some(bins),
        generator: None,
        observations,
    })
}

/// Reads a dataset, choosing the parser from the file extension.
pub fn read_dataset(path: &Path, bins: usize) -> CliResult<DatasetFile> {
    let text = read_text(path)?;
    let origin = path.display().to_string();
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_raw_csv(&text, &origin, bins)
    } else {
        parse_dataset_json(&text, &origin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: ObsId,
    pub bmu: usize,
    pub cluster: usize,
}

pub fn assignments_csv(rows: &[Assignment]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "bmu", "cluster"]).map_err(|e| CliError::Invariant(e.to_string()))?;
    for a in rows {
        w.write_record([a.id.to_string(), a.bmu.to_string(), a.cluster.to_string()])
            .map_err(|e| CliError::Invariant(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invariant(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invariant(e.to_string()))
}

pub fn parse_assignments_csv(text: &str, origin: &str) -> CliResult<Vec<Assignment>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::input(origin, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("{origin}: missing column '{name}' in header")))
    };
    let (ci, cb, cc) = (col("id")?, col("bmu")?, col("cluster")?);
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(origin, e))?;
        let line = rec.position().map_or(n + 2, |p| p.line() as usize);
        let field = |c: usize, name: &str| -> CliResult<usize> {
            rec.get(c)
                .unwrap_or("")
                .parse()
                .map_err(|e| CliError::Input(format!("{origin}: line {line}, field '{name}': {e}")))
        };
        out.push(Assignment {
            id: ObsId::parse(rec.get(ci).unwrap_or("")),
            bmu: field(cb, "bmu")?,
            cluster: field(cc, "cluster")?,
        });
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{origin}: no assignment rows")));
    }
    Ok(out)
}

/// Ground truth from a dataset JSON with labels or a CSV with `id,label`.
pub fn read_truth(path: &Path) -> CliResult<Vec<(ObsId, usize)>> {
    let text = read_text(path)?;
    let origin = path.display().to_string();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        #[derive(Deserialize)]
        struct Row {
            id: String,
            label: usize,
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut out = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| CliError::input(&origin, e))?;
            out.push((ObsId::parse(&row.id), row.label));
        }
        if out.is_empty() {
            return Err(CliError::Input(format!("{origin}: no truth rows")));
        }
        Ok(out)
    } else {
        let file = parse_dataset_json(&text, &origin)?;
        file.observations
            .iter()
            .map(|o| {
                o.label
                    .map(|l| (o.id.clone(), l))
                    .ok_or_else(|| CliError::Input(format!("{origin}: observation {} has no label", o.id)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronRecord {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub count: usize,
    pub density: f64,
    pub micro_label: usize,
    pub cluster: Option<usize>,
    pub prototype: Vec<Histogram>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub rows: usize,
    pub cols: usize,
    pub config: SomConfig,
    pub bandwidth: f64,
    pub n_clusters: usize,
    pub neurons: Vec<NeuronRecord>,
    pub connectivity: Vec<Edge>,
    pub assignments: Vec<Assignment>,
}

impl MapFile {
    pub fn validate(&self) -> CliResult<()> {
        let m = self.rows * self.cols;
        if self.config.topology.rows() != self.rows || self.config.topology.cols() != self.cols {
            return Err(CliError::Input("map size disagrees with its configuration".into()));
        }
        if m == 0 || self.neurons.len() != m {
            return Err(CliError::Input(format!(
                "map declares {}x{} neurons but lists {}",
                self.rows,
                self.cols,
                self.neurons.len()
            )));
        }
        for (k, n) in self.neurons.iter().enumerate() {
            if n.index != k || n.row >= self.rows || n.col >= self.cols {
                return Err(CliError::Input(format!("neuron {k} has inconsistent index or position")));
            }
        }
        if let Some(a) = self.assignments.iter().find(|a| a.bmu >= m) {
            return Err(CliError::Input(format!("assignment of id {} points at neuron {}", a.id, a.bmu)));
        }
        Ok(())
    }
}

pub fn read_map(path: &Path) -> CliResult<MapFile> {
    let text = read_text(path)?;
    let map: MapFile = serde_json::from_str(&text).map_err(|e| CliError::input(path.display(), e))?;
    map.validate()?;
    Ok(map)
}
