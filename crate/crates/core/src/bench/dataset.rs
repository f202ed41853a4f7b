use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coalition::{allocate, form_policy, Assignment};
use crate::dsl::{parse_decomposition, ParseError};
use crate::executor::{execute, load_floorplan, FloorPlanError, WorldState};
use crate::issue::{IssueKind, ValidationIssue};
use crate::metrics::{evaluate, Category, GroundTruth};
use crate::model::{check_robot_ids, Decomposition, ModelError, RobotSpec};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MAX_ROBOTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTask {
    pub id: String,
    pub category: Category,
    pub instruction: String,
    /// Resolved floor-plan path.
    pub floorplan: PathBuf,
    pub world: WorldState,
    pub robots: Vec<RobotSpec>,
    pub ground_truth: GroundTruth,
    pub gt_decomposition: Option<Decomposition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub name: String,
    pub tasks: Vec<BenchTask>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn counts(&self) -> BTreeMap<Category, usize> {
        let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 0)).collect();
        for t in &self.tasks {
            *counts.entry(t.category).or_default() += 1;
        }
        counts
    }

    pub fn task(&self, id: &str) -> Option<&BenchTask> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: field `{field}`: {message}", file.display())]
    Schema {
        file: PathBuf,
        field: String,
        message: String,
    },
    #[error("{}: floor plan {}: {source}", file.display(), floorplan.display())]
    FloorPlan {
        file: PathBuf,
        floorplan: PathBuf,
        #[source]
        source: FloorPlanError,
    },
    #[error("{}: gt_decomposition: {source}", file.display())]
    Decomposition {
        file: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{}: robots: {source}", file.display())]
    Robots {
        file: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error("{}: dangling reference: {what}", file.display())]
    Dangling { file: PathBuf, what: String },
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    #[serde(default)]
    name: String,
    tasks: Vec<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    id: String,
    category: Category,
    instruction: String,
    floorplan: PathBuf,
    robots: Vec<RobotSpec>,
    ground_truth: GroundTruth,
    /// Decomposition in `tasks { ... }` text form.
    #[serde(default)]
    gt_decomposition: Option<String>,
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn from_json<T: serde::de::DeserializeOwned>(file: &Path, text: &str) -> Result<T, DatasetError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| DatasetError::Schema {
        file: file.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn load_task_with(path: &Path, worlds: &mut BTreeMap<PathBuf, WorldState>) -> Result<BenchTask, DatasetError> {
    let doc: TaskDoc = from_json(path, &read(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let floorplan = base.join(&doc.floorplan);
    if !floorplan.is_file() {
        return Err(DatasetError::Dangling {
            file: path.to_path_buf(),
            what: format!("floor plan {} does not exist", floorplan.display()),
        });
    }
    let world = match worlds.get(&floorplan) {
        Some(w) => w.clone(),
        None => {
            let w = load_floorplan(&read(&floorplan)?).map_err(|source| DatasetError::FloorPlan {
                file: path.to_path_buf(),
                floorplan: floorplan.clone(),
                source,
            })?;
            worlds.insert(floorplan.clone(), w.clone());
            w
        }
    };
    check_robot_ids(&doc.robots).map_err(|source| DatasetError::Robots {
        file: path.to_path_buf(),
        source,
    })?;
    for goal in &doc.ground_truth.goal_conditions {
        if !world.has_entity(&goal.object_id) {
            return Err(DatasetError::Dangling {
                file: path.to_path_buf(),
                what: format!("goal object `{}` is not in the floor plan", goal.object_id),
            });
        }
    }
    let gt_decomposition = doc
        .gt_decomposition
        .as_deref()
        .map(parse_decomposition)
        .transpose()
        .map_err(|source| DatasetError::Decomposition {
            file: path.to_path_buf(),
            source,
        })?;
    if let Some(d) = &gt_decomposition {
        for arg in d.subtasks.iter().flat_map(|t| t.actions.iter()).flat_map(|a| a.args.iter()) {
            if !world.has_entity(arg) {
                return Err(DatasetError::Dangling {
                    file: path.to_path_buf(),
                    what: format!("gt_decomposition names `{arg}`, which is not in the floor plan"),
                });
            }
        }
    }
    Ok(BenchTask {
        id: doc.id,
        category: doc.category,
        instruction: doc.instruction,
        floorplan,
        world,
        robots: doc.robots,
        ground_truth: doc.ground_truth,
        gt_decomposition,
    })
}

/// Loads one task file; its floor plan path is relative to the file.
pub fn load_task(path: &Path) -> Result<BenchTask, DatasetError> {
    load_task_with(path, &mut BTreeMap::new())
}

/// Loads `manifest.json` and every task it lists.
///
/// A directory without a manifest and without task files yields an empty
/// dataset with a warning.
pub fn load_dataset(root: &Path) -> Result<Dataset, DatasetError> {
    let manifest = root.join(MANIFEST_FILE);
    if !manifest.exists() {
        let empty = std::fs::read_dir(root)
            .map_err(|source| DatasetError::Io {
                path: root.to_path_buf(),
                source,
            })?
            .next()
            .is_none();
        if empty {
            return Ok(Dataset {
                root: root.to_path_buf(),
                name: String::new(),
                tasks: Vec::new(),
                warnings: vec![format!("{} is empty; no tasks loaded", root.display())],
            });
        }
    }
    let doc: ManifestDoc = from_json(&manifest, &read(&manifest)?)?;
    let mut worlds = BTreeMap::new();
    let mut tasks: Vec<BenchTask> = Vec::new();
    let mut ids = BTreeSet::new();
    for rel in &doc.tasks {
        let task = load_task_with(&root.join(rel), &mut worlds)?;
        if !ids.insert(task.id.clone()) {
            return Err(DatasetError::DuplicateTask(task.id));
        }
        tasks.push(task);
    }
    let warnings = if tasks.is_empty() {
        vec!["manifest lists no tasks".to_string()]
    } else {
        Vec::new()
    };
    Ok(Dataset {
        root: root.to_path_buf(),
        name: doc.name,
        tasks,
        warnings,
    })
}

fn homogeneous(robots: &[RobotSpec]) -> bool {
    robots.windows(2).all(|w| w[0].skill_names() == w[1].skill_names())
}

/// Category rules, ground-truth consistency and an oracle run for one task.
pub fn validate_task(task: &BenchTask) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let at = task.id.as_str();
    macro_rules! error {
        ($kind:expr, $msg:expr $(,)?) => {
            issues.push(ValidationIssue::error($kind, at, $msg))
        };
    }
    let n = task.robots.len();
    if !(1..=MAX_ROBOTS).contains(&n) {
        error!(IssueKind::CategoryInvariant, format!("{n} robots; tasks use 1 to {MAX_ROBOTS}"));
    }
    let gt = &task.ground_truth;
    let Some(d) = &task.gt_decomposition else {
        issues.push(ValidationIssue::warning(
            IssueKind::GroundTruth,
            at,
            "no gt_decomposition; oracle checks skipped",
        ));
        return issues;
    };
    if d.len() != gt.subtask_count as usize {
        error!(
            IssueKind::GroundTruth,
            format!("subtask_count is {} but gt_decomposition has {}", gt.subtask_count, d.len()),
        );
    }
    if gt.gt_phase_count > gt.subtask_count {
        error!(
            IssueKind::GroundTruth,
            format!("gt_phase_count {} exceeds subtask_count {}", gt.gt_phase_count, gt.subtask_count),
        );
    }
    let policy = form_policy(d, &task.robots);
    let single = |a: &Assignment| matches!(a, Assignment::SingleRobot(_));
    match task.category {
        Category::Elemental if n != 1 => {
            error!(IssueKind::CategoryInvariant, format!("elemental task with {n} robots"))
        }
        Category::Simple => {
            if !homogeneous(&task.robots) {
                error!(IssueKind::CategoryInvariant, "simple task with differing skill sets".to_string());
            }
            let phases = d.phase_count();
            if phases != 1 && phases != d.len() {
                error!(
                    IssueKind::CategoryInvariant,
                    "simple task mixes sequential and parallel sub-tasks",
                );
            }
        }
        Category::Compound => {
            if n < 2 || homogeneous(&task.robots) {
                error!(IssueKind::CategoryInvariant, "compound task needs heterogeneous robots".to_string());
            }
            if let Some(dec) = policy.decisions.iter().find(|x| !single(&x.assignment)) {
                error!(
                    IssueKind::CategoryInvariant,
                    format!("compound sub-task `{}` is not coverable by one robot", dec.subtask_id),
                );
            }
        }
        Category::Complex if policy.decisions.iter().all(|x| single(&x.assignment)) => {
            error!(
                IssueKind::CategoryInvariant,
                "complex task where every sub-task is coverable by one robot",
            );
        }
        _ => {}
    }
    if let Some(dec) = policy.infeasible() {
        error!(
            IssueKind::OracleInfeasible,
            format!("sub-task `{}` is infeasible: {}", dec.subtask_id, dec.rationale),
        );
        return issues;
    }
    let plan = allocate(d, &policy).expect("feasible policy allocates");
    match execute(&plan, &task.world, &task.robots).map_err(|e| e.to_string()).and_then(|trace| {
        evaluate(&trace, gt).map_err(|e| e.to_string())
    }) {
        Ok(m) if m.gcr == 1.0 && m.ru == 1.0 && m.exe == 1.0 => {}
        Ok(m) => error!(
            IssueKind::OracleExecution,
            format!(
                "oracle run is not self-consistent: gcr {:.2}, ru {:.2} ({} phases, reference {}), exe {:.2}",
                m.gcr, m.ru, m.phases_observed, gt.gt_phase_count, m.exe
            ),
        ),
        Err(e) => error!(IssueKind::OracleExecution, format!("oracle run failed: {e}")),
    }
    issues
}

pub fn validate_dataset(dataset: &Dataset) -> Vec<ValidationIssue> {
    dataset.tasks.iter().flat_map(validate_task).collect()
}
