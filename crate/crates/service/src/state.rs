use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use deid_api::{DatasetInfo, SessionView};
use deid_core::pipeline::{PipelineSpec, ReportSettings, Workflow, WorkflowConfig};
use deid_core::table::{load_csv, to_csv_string, Dataset, Schema};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

/// One interactive de-identification run on an uploaded dataset.
#[derive(Debug)]
pub struct Session {
    pub dataset_id: String,
    /// Configuration with `steps` left empty; applied steps live in the
    /// workflow's provenance.
    pub spec: PipelineSpec,
    pub workflow: Workflow,
}

impl Session {
    /// Scenarios on attributes that do not exist yet are accepted and
    /// reported unavailable until a step creates them.
    pub fn open(dataset_id: String, dataset: &Dataset, mut spec: PipelineSpec) -> deid_core::Result<Session> {
        spec.validate_settings(dataset.schema())?;
        let original = dataset.classify(&spec.classification)?;
        let mut workflow = Workflow::new(original, WorkflowConfig::from(&spec))?;
        for step in std::mem::take(&mut spec.steps) {
            workflow.apply(&step)?;
        }
        Ok(Session { dataset_id, spec, workflow })
    }

    pub fn settings(&self) -> ReportSettings {
        ReportSettings::from(&self.spec)
    }

    /// The spec that rebuilds this session: configuration plus applied steps.
    pub fn replayable_spec(&self) -> PipelineSpec {
        PipelineSpec { steps: self.workflow.provenance().steps().cloned().collect(), ..self.spec.clone() }
    }

    pub fn view(&self, id: &str) -> SessionView {
        let wf = &self.workflow;
        SessionView {
            id: id.to_string(),
            dataset_id: self.dataset_id.clone(),
            spec: self.replayable_spec(),
            schema: wf.protected().schema().clone(),
            row_count: wf.protected().row_count(),
            perturbed_columns: wf.perturbed_columns().clone(),
            baseline: wf.baseline().clone(),
            steps: wf.steps().to_vec(),
            current: wf.current().clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SessionRecord {
    dataset_id: String,
    spec: PipelineSpec,
}

/// Write-through copy of datasets and session provenance. Sessions are
/// rebuilt by replaying their steps on the stored original.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
}

fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Store> {
        let root = root.into();
        fs::create_dir_all(root.join("datasets"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Store { root })
    }

    fn dataset_path(&self, id: &str, ext: &str) -> PathBuf {
        self.root.join("datasets").join(format!("{id}.{ext}"))
    }

    pub fn save_dataset(&self, id: &str, ds: &Dataset) -> io::Result<()> {
        write_atomic(&self.dataset_path(id, "schema.json"), ds.schema().to_json_pretty().as_bytes())?;
        write_atomic(&self.dataset_path(id, "csv"), to_csv_string(ds).as_bytes())
    }

    pub fn save_session(&self, id: &str, session: &Session) -> io::Result<()> {
        let record = SessionRecord { dataset_id: session.dataset_id.clone(), spec: session.replayable_spec() };
        let json = serde_json::to_vec_pretty(&record).map_err(io::Error::other)?;
        write_atomic(&self.root.join("sessions").join(format!("{id}.json")), &json)
    }

    fn entries(&self, dir: &str, suffix: &str) -> io::Result<Vec<(String, PathBuf)>> {
        let mut out = vec![];
        for entry in fs::read_dir(self.root.join(dir))? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if let Some(id) = name.strip_suffix(suffix) {
                out.push((id.to_string(), path.clone()));
            }
        }
        out.sort();
        Ok(out)
    }

    fn load(&self) -> io::Result<Loaded> {
        let invalid = |e: deid_core::Error| io::Error::new(io::ErrorKind::InvalidData, e.to_string());
        let mut datasets = HashMap::new();
        for (id, path) in self.entries("datasets", ".csv")? {
            let schema = Schema::from_json_reader(fs::File::open(self.dataset_path(&id, "schema.json"))?).map_err(invalid)?;
            let ds = load_csv(fs::File::open(path)?, Some(&schema)).map_err(invalid)?;
            datasets.insert(id, Arc::new(ds));
        }
        let mut sessions = HashMap::new();
        for (id, path) in self.entries("sessions", ".json")? {
            let record: SessionRecord = serde_json::from_slice(&fs::read(path)?)?;
            let Some(ds) = datasets.get(&record.dataset_id) else {
                tracing::warn!(session = %id, dataset = %record.dataset_id, "skipping session without its dataset");
                continue;
            };
            let session = Session::open(record.dataset_id.clone(), ds, record.spec).map_err(invalid)?;
            sessions.insert(id, session);
        }
        Ok((datasets, sessions))
    }
}

type Loaded = (HashMap<String, Arc<Dataset>>, HashMap<String, Session>);

pub type SharedSession = Arc<tokio::sync::RwLock<Session>>;

#[derive(Debug, Default)]
struct Inner {
    datasets: RwLock<HashMap<String, Arc<Dataset>>>,
    sessions: RwLock<HashMap<String, SharedSession>>,
    store: Option<Store>,
}

/// Datasets and sessions held in memory, optionally mirrored to disk.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl AppState {
    pub fn new() -> Self {
        AppState::default()
    }

    /// State mirrored to `dir`, restoring whatever it already holds.
    pub fn with_store(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let store = Store::open(dir)?;
        let (datasets, sessions) = store.load()?;
        let sessions = sessions.into_iter().map(|(id, s)| (id, Arc::new(tokio::sync::RwLock::new(s)))).collect();
        Ok(AppState {
            inner: Arc::new(Inner { datasets: RwLock::new(datasets), sessions: RwLock::new(sessions), store: Some(store) }),
        })
    }

    pub fn store(&self) -> Option<&Store> {
        self.inner.store.as_ref()
    }

    pub fn add_dataset(&self, ds: Dataset) -> ApiResult<DatasetInfo> {
        let id = new_id();
        if let Some(store) = self.store() {
            store.save_dataset(&id, &ds).map_err(|e| ApiError::Internal(e.to_string()))?;
        }
        let info = DatasetInfo { id: id.clone(), row_count: ds.row_count(), schema: ds.schema().clone() };
        self.inner.datasets.write().expect("dataset lock").insert(id, Arc::new(ds));
        Ok(info)
    }

    pub fn dataset(&self, id: &str) -> ApiResult<Arc<Dataset>> {
        let map = self.inner.datasets.read().expect("dataset lock");
        map.get(id).cloned().ok_or_else(|| ApiError::NotFound(format!("unknown dataset {id:?}")))
    }

    pub fn add_session(&self, session: Session) -> ApiResult<(String, SharedSession)> {
        let id = new_id();
        if let Some(store) = self.store() {
            store.save_session(&id, &session).map_err(|e| ApiError::Internal(e.to_string()))?;
        }
        let shared = Arc::new(tokio::sync::RwLock::new(session));
        self.inner.sessions.write().expect("session lock").insert(id.clone(), shared.clone());
        Ok((id, shared))
    }

    pub fn session(&self, id: &str) -> ApiResult<SharedSession> {
        let map = self.inner.sessions.read().expect("session lock");
        map.get(id).cloned().ok_or_else(|| ApiError::NotFound(format!("unknown session {id:?}")))
    }

    pub fn persist(&self, id: &str, session: &Session) -> ApiResult<()> {
        match self.store() {
            Some(store) => store.save_session(id, session).map_err(|e| ApiError::Internal(e.to_string())),
            None => Ok(()),
        }
    }
}
