//! Task metrics and report tables.
//!
//! `exe`, `gcr` and `ru` are exact rationals; `tcr` and `sr` threshold on them
//! before anything is converted to floating point.

use std::fmt::{self, Write as _};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{ExecutionTrace, WorldState};
use crate::model::{GoalAttribute, GoalCondition, GoalValue};

pub type Frac = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("plan has no actions; executability is undefined")]
    ZeroActions,
    #[error("goal references unknown object or region `{0}`")]
    UnknownGoalObject(String),
    #[error("goal `{object}.{attribute:?}` expects {expected:?}, which that attribute cannot hold")]
    GoalType {
        object: String,
        attribute: GoalAttribute,
        expected: GoalValue,
    },
    #[error("ground truth has no goal conditions")]
    NoGoals,
    #[error("ground-truth phase count {g} exceeds sub-task count {k}")]
    PhaseCountExceedsSubtasks { g: u32, k: u32 },
    #[error("ground-truth phase count must be positive")]
    ZeroPhaseCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroundTruthRaw")]
pub struct GroundTruth {
    pub goal_conditions: Vec<GoalCondition>,
    pub gt_phase_count: u32,
    pub subtask_count: u32,
}

#[derive(Deserialize)]
struct GroundTruthRaw {
    goal_conditions: Vec<GoalCondition>,
    gt_phase_count: u32,
    subtask_count: u32,
}

impl TryFrom<GroundTruthRaw> for GroundTruth {
    type Error = MetricsError;

    fn try_from(r: GroundTruthRaw) -> Result<Self, Self::Error> {
        GroundTruth::new(r.goal_conditions, r.gt_phase_count, r.subtask_count)
    }
}

impl GroundTruth {
    pub fn new(goal_conditions: Vec<GoalCondition>, gt_phase_count: u32, subtask_count: u32) -> Result<Self, MetricsError> {
        if goal_conditions.is_empty() {
            return Err(MetricsError::NoGoals);
        }
        if gt_phase_count == 0 {
            return Err(MetricsError::ZeroPhaseCount);
        }
        if gt_phase_count > subtask_count {
            return Err(MetricsError::PhaseCountExceedsSubtasks {
                g: gt_phase_count,
                k: subtask_count,
            });
        }
        Ok(Self {
            goal_conditions,
            gt_phase_count,
            subtask_count,
        })
    }
}

/// Successful steps over all actions in the plan.
pub fn exe(trace: &ExecutionTrace) -> Result<Frac, MetricsError> {
    if trace.total_actions == 0 {
        return Err(MetricsError::ZeroActions);
    }
    Ok(Frac::new(trace.succeeded() as u64, trace.total_actions as u64))
}

/// Whether one goal holds. Unknown targets and ill-typed goals are errors.
pub fn goal_holds(world: &WorldState, goal: &GoalCondition) -> Result<bool, MetricsError> {
    let type_error = || MetricsError::GoalType {
        object: goal.object_id.clone(),
        attribute: goal.attribute,
        expected: goal.expected.clone(),
    };
    if let Some(region) = world.regions.get(&goal.object_id) {
        return match (goal.attribute, &goal.expected) {
            (GoalAttribute::Patrolled, GoalValue::Bool(b)) => Ok(region.patrolled == *b),
            _ => Err(type_error()),
        };
    }
    let obj = world
        .objects
        .get(&goal.object_id)
        .ok_or_else(|| MetricsError::UnknownGoalObject(goal.object_id.clone()))?;
    let flag = |v: bool| match &goal.expected {
        GoalValue::Bool(b) => Ok(v == *b),
        GoalValue::Id(_) => Err(type_error()),
    };
    let a = &obj.attributes;
    match goal.attribute {
        GoalAttribute::IsOn => flag(a.is_on),
        GoalAttribute::IsOpen => flag(a.is_open),
        GoalAttribute::IsSliced => flag(a.is_sliced),
        GoalAttribute::IsHeated => flag(a.is_heated),
        GoalAttribute::IsCooked => flag(a.is_cooked),
        GoalAttribute::IsWashed => flag(a.is_washed),
        GoalAttribute::IsBroken => flag(a.is_broken),
        GoalAttribute::ParentReceptacle => match &goal.expected {
            GoalValue::Id(id) => Ok(obj.parent_receptacle.as_deref() == Some(id.as_str())),
            GoalValue::Bool(_) => Err(type_error()),
        },
        GoalAttribute::Patrolled => Err(type_error()),
    }
}

/// Fraction of goal conditions met in `world`.
pub fn gcr(world: &WorldState, goals: &[GoalCondition]) -> Result<Frac, MetricsError> {
    if goals.is_empty() {
        return Err(MetricsError::NoGoals);
    }
    let mut met = 0u64;
    for goal in goals {
        if goal_holds(world, goal)? {
            met += 1;
        }
    }
    Ok(Frac::new(met, goals.len() as u64))
}

/// Utilization score: 1 at or below the reference phase count, 0 at or above
/// one phase per sub-task, linear in between.
pub fn ru(observed_phases: u32, gt: &GroundTruth) -> Result<Frac, MetricsError> {
    let (t, g, k) = (observed_phases as u64, gt.gt_phase_count as u64, gt.subtask_count as u64);
    if k < g {
        return Err(MetricsError::PhaseCountExceedsSubtasks {
            g: gt.gt_phase_count,
            k: gt.subtask_count,
        });
    }
    Ok(if t <= g {
        Frac::from_integer(1)
    } else if t >= k {
        Frac::from_integer(0)
    } else {
        Frac::new(k - t, k - g)
    })
}

pub fn tcr(gcr_value: Frac) -> u8 {
    u8::from(gcr_value == Frac::from_integer(1))
}

pub fn sr(gcr_value: Frac, ru_value: Frac) -> u8 {
    u8::from(gcr_value == Frac::from_integer(1) && ru_value == Frac::from_integer(1))
}

fn to_f64(r: Frac) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub sr: u8,
    pub tcr: u8,
    pub gcr: f64,
    pub ru: f64,
    pub exe: f64,
    pub actions_total: usize,
    pub actions_succeeded: usize,
    pub phases_observed: u32,
    pub goals_met: u64,
    pub goals_total: u64,
}

/// All five metrics for one executed plan.
pub fn evaluate(trace: &ExecutionTrace, gt: &GroundTruth) -> Result<MetricsRecord, MetricsError> {
    let e = exe(trace)?;
    let g = gcr(&trace.final_world, &gt.goal_conditions)?;
    let phases = trace.phase_sequence.len() as u32;
    let r = ru(phases, gt)?;
    let goals_total = gt.goal_conditions.len() as u64;
    Ok(MetricsRecord {
        sr: sr(g, r),
        tcr: tcr(g),
        gcr: to_f64(g),
        ru: to_f64(r),
        exe: to_f64(e),
        actions_total: trace.total_actions,
        actions_succeeded: trace.succeeded(),
        phases_observed: phases,
        goals_met: (g * Frac::from_integer(goals_total)).to_integer(),
        goals_total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Elemental,
    Simple,
    Compound,
    Complex,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Elemental, Category::Simple, Category::Compound, Category::Complex];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Elemental => "elemental",
            Category::Simple => "simple",
            Category::Compound => "compound",
            Category::Complex => "complex",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a single benchmark run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed { metrics: MetricsRecord },
    /// The planner declined to produce a plan.
    Refused { reason: String },
    /// The run broke before metrics could be computed.
    Failed { error: String },
}

impl RunOutcome {
    pub fn metrics(&self) -> Option<&MetricsRecord> {
        match self {
            RunOutcome::Completed { metrics } => Some(metrics),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub sr: f64,
    pub tcr: f64,
    pub gcr: f64,
    pub ru: f64,
    pub exe: f64,
}

/// Means over completed runs; refusals and failures are only counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub completed: usize,
    pub refusals: usize,
    pub failures: usize,
    pub means: Option<Means>,
}

impl Summary {
    pub fn of<'a>(outcomes: impl IntoIterator<Item = &'a RunOutcome>) -> Self {
        let (mut runs, mut refusals, mut failures) = (0, 0, 0);
        let mut done: Vec<&MetricsRecord> = Vec::new();
        for o in outcomes {
            runs += 1;
            match o {
                RunOutcome::Completed { metrics } => done.push(metrics),
                RunOutcome::Refused { .. } => refusals += 1,
                RunOutcome::Failed { .. } => failures += 1,
            }
        }
        let n = done.len() as f64;
        let mean = |f: fn(&MetricsRecord) -> f64| done.iter().map(|m| f(m)).sum::<f64>() / n;
        let means = (!done.is_empty()).then(|| Means {
            sr: mean(|m| m.sr as f64),
            tcr: mean(|m| m.tcr as f64),
            gcr: mean(|m| m.gcr),
            ru: mean(|m| m.ru),
            exe: mean(|m| m.exe),
        });
        Self {
            runs,
            completed: done.len(),
            refusals,
            failures,
            means,
        }
    }
}

fn cells(means: &Option<Means>) -> [String; 5] {
    match means {
        Some(m) => [m.sr, m.tcr, m.gcr, m.ru, m.exe].map(|x| format!("{x:.2}")),
        None => std::array::from_fn(|_| "n/a".to_string()),
    }
}

const METRIC_HEADERS: [&str; 5] = ["SR", "TCR", "GCR", "RU", "Exe"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: Category,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<CategoryRow>,
    pub notices: Vec<String>,
}

/// Per-category means in the fixed category order.
pub fn aggregate(records: &[(Category, RunOutcome)]) -> Report {
    let mut rows = Vec::new();
    let mut notices = Vec::new();
    for category in Category::ALL {
        let mine: Vec<&RunOutcome> = records.iter().filter(|(c, _)| *c == category).map(|(_, o)| o).collect();
        if mine.is_empty() {
            notices.push(format!("no runs in category {category}; row omitted"));
            continue;
        }
        rows.push(CategoryRow {
            category,
            summary: Summary::of(mine),
        });
    }
    Report { rows, notices }
}

impl Report {
    pub fn row(&self, category: Category) -> Option<&CategoryRow> {
        self.rows.iter().find(|r| r.category == category)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(out, "| Category | {} | Runs | Refusals | Failures |", METRIC_HEADERS.join(" | ")).unwrap();
        writeln!(out, "|---|---|---|---|---|---|---|---|---|").unwrap();
        for row in &self.rows {
            let s = &row.summary;
            writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                row.category,
                cells(&s.means).join(" | "),
                s.runs,
                s.refusals,
                s.failures
            )
            .unwrap();
        }
        for notice in &self.notices {
            writeln!(out, "\nNote: {notice}").unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,sr,tcr,gcr,ru,exe,runs,refusals,failures\n");
        for row in &self.rows {
            let s = &row.summary;
            writeln!(
                out,
                "{},{},{},{},{}",
                row.category,
                cells(&s.means).join(","),
                s.runs,
                s.refusals,
                s.failures
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationVariant {
    Full,
    NoComments,
    NoSummary,
    NoBoth,
    NoCoalition,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 5] = [
        AblationVariant::Full,
        AblationVariant::NoComments,
        AblationVariant::NoSummary,
        AblationVariant::NoBoth,
        AblationVariant::NoCoalition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::NoComments => "no-comments",
            AblationVariant::NoSummary => "no-summary",
            AblationVariant::NoBoth => "no-both",
            AblationVariant::NoCoalition => "no-coalition",
        }
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: AblationVariant,
    pub summary: Summary,
}

/// One row per prompt variant, means over every task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn new(runs: &[(AblationVariant, Vec<RunOutcome>)]) -> Self {
        Self {
            rows: runs
                .iter()
                .map(|(variant, outcomes)| AblationRow {
                    variant: *variant,
                    summary: Summary::of(outcomes),
                })
                .collect(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(out, "| Variant | {} | Runs | Refusals | Failures |", METRIC_HEADERS.join(" | ")).unwrap();
        writeln!(out, "|---|---|---|---|---|---|---|---|---|").unwrap();
        for row in &self.rows {
            let s = &row.summary;
            writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                row.variant,
                cells(&s.means).join(" | "),
                s.runs,
                s.refusals,
                s.failures
            )
            .unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,sr,tcr,gcr,ru,exe,runs,refusals,failures\n");
        for row in &self.rows {
            let s = &row.summary;
            writeln!(
                out,
                "{},{},{},{},{}",
                row.variant,
                cells(&s.means).join(","),
                s.runs,
                s.refusals,
                s.failures
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::load_floorplan;

    fn goal(object: &str, attribute: GoalAttribute, expected: GoalValue) -> GoalCondition {
        GoalCondition {
            object_id: object.into(),
            attribute,
            expected,
        }
    }

    fn gt(g: u32, k: u32) -> GroundTruth {
        GroundTruth::new(vec![goal("Lamp", GoalAttribute::IsOn, GoalValue::Bool(true))], g, k).unwrap()
    }

    fn world() -> WorldState {
        load_floorplan(
            r#"{"objects": [
                {"id": "Lamp", "togglable": true, "attributes": {"is_on": true}},
                {"id": "Tv", "togglable": true},
                {"id": "Fridge", "is_receptacle": true},
                {"id": "Apple", "parent": "Fridge"}],
                "regions": [{"id": "Yard", "area": 3}]}"#,
        )
        .unwrap()
    }

    fn rec(sr: u8, gcr: f64) -> MetricsRecord {
        MetricsRecord {
            sr,
            tcr: u8::from(gcr == 1.0),
            gcr,
            ru: 1.0,
            exe: 1.0,
            actions_total: 1,
            actions_succeeded: 1,
            phases_observed: 1,
            goals_met: 0,
            goals_total: 1,
        }
    }

    #[test]
    fn ru_anchors() {
        assert_eq!(ru(3, &gt(3, 5)).unwrap(), Frac::from_integer(1));
        assert_eq!(ru(5, &gt(3, 5)).unwrap(), Frac::from_integer(0));
        assert_eq!(ru(4, &gt(3, 5)).unwrap(), Frac::new(1, 2));
        assert_eq!(ru(1, &gt(3, 5)).unwrap(), Frac::from_integer(1));
        assert_eq!(ru(9, &gt(3, 5)).unwrap(), Frac::from_integer(0));
        assert_eq!(ru(2, &gt(2, 2)).unwrap(), Frac::from_integer(1));
        assert_eq!(ru(3, &gt(2, 2)).unwrap(), Frac::from_integer(0));
    }

    #[test]
    fn ground_truth_invariants() {
        let goals = vec![goal("Lamp", GoalAttribute::IsOn, GoalValue::Bool(true))];
        assert_eq!(
            GroundTruth::new(goals.clone(), 4, 3),
            Err(MetricsError::PhaseCountExceedsSubtasks { g: 4, k: 3 })
        );
        assert_eq!(GroundTruth::new(vec![], 1, 1), Err(MetricsError::NoGoals));
        assert_eq!(GroundTruth::new(goals, 0, 1), Err(MetricsError::ZeroPhaseCount));
        let bad = GroundTruth {
            goal_conditions: vec![],
            gt_phase_count: 3,
            subtask_count: 2,
        };
        assert!(ru(1, &bad).is_err());
    }

    #[test]
    fn goal_checks() {
        let w = world();
        let yes = [
            goal("Lamp", GoalAttribute::IsOn, GoalValue::Bool(true)),
            goal("Tv", GoalAttribute::IsOn, GoalValue::Bool(false)),
            goal("Apple", GoalAttribute::ParentReceptacle, GoalValue::Id("Fridge".into())),
            goal("Yard", GoalAttribute::Patrolled, GoalValue::Bool(false)),
        ];
        assert_eq!(gcr(&w, &yes).unwrap(), Frac::from_integer(1));
        let three = [
            yes[0].clone(),
            yes[1].clone(),
            yes[2].clone(),
            goal("Yard", GoalAttribute::Patrolled, GoalValue::Bool(true)),
        ];
        assert_eq!(gcr(&w, &three).unwrap(), Frac::new(3, 4));
        assert_eq!(
            gcr(&w, &[goal("Sofa", GoalAttribute::IsOn, GoalValue::Bool(true))]),
            Err(MetricsError::UnknownGoalObject("Sofa".into()))
        );
        assert!(matches!(
            gcr(&w, &[goal("Lamp", GoalAttribute::IsOn, GoalValue::Id("x".into()))]),
            Err(MetricsError::GoalType { .. })
        ));
        assert_eq!(gcr(&w, &[]), Err(MetricsError::NoGoals));
    }

    #[test]
    fn thresholds_are_strict() {
        assert_eq!(tcr(Frac::from_integer(1)), 1);
        assert_eq!(tcr(Frac::new(99, 100)), 0);
        assert_eq!(sr(Frac::from_integer(1), Frac::new(1, 2)), 0);
        assert_eq!(sr(Frac::new(3, 4), Frac::from_integer(1)), 0);
        assert_eq!(sr(Frac::from_integer(1), Frac::from_integer(1)), 1);
    }

    #[test]
    fn aggregate_orders_rows_and_skips_refusals() {
        let records = vec![
            (Category::Complex, RunOutcome::Completed { metrics: rec(1, 1.0) }),
            (Category::Elemental, RunOutcome::Completed { metrics: rec(1, 1.0) }),
            (Category::Elemental, RunOutcome::Completed { metrics: rec(0, 0.5) }),
            (Category::Elemental, RunOutcome::Refused { reason: "no skill".into() }),
        ];
        let report = aggregate(&records);
        let cats: Vec<_> = report.rows.iter().map(|r| r.category).collect();
        assert_eq!(cats, vec![Category::Elemental, Category::Complex]);
        let e = &report.rows[0].summary;
        assert_eq!((e.runs, e.completed, e.refusals), (3, 2, 1));
        assert_eq!(e.means.unwrap().sr, 0.5);
        assert_eq!(report.notices.len(), 2);
        let md = report.to_markdown();
        assert!(md.contains("| elemental | 0.50 | 0.50 | 0.75 | 1.00 | 1.00 | 3 | 1 | 0 |"), "{md}");
        assert!(md.contains("no runs in category simple"));
        let csv = report.to_csv();
        assert!(csv.lines().nth(2).unwrap().starts_with("complex,1.00,1.00,1.00,1.00,1.00,1,0,0"));
    }

    #[test]
    fn all_refused_category_has_no_means() {
        let report = aggregate(&[(Category::Simple, RunOutcome::Refused { reason: "x".into() })]);
        assert!(report.rows[0].summary.means.is_none());
        assert!(report.to_markdown().contains("| simple | n/a |"));
    }

    #[test]
    fn ablation_rows_keep_order() {
        let runs: Vec<_> = AblationVariant::ALL
            .iter()
            .map(|v| (*v, vec![RunOutcome::Completed { metrics: rec(1, 1.0) }]))
            .collect();
        let table = AblationTable::new(&runs);
        let md = table.to_markdown();
        let names: Vec<&str> = md.lines().skip(2).map(|l| l.split('|').nth(1).unwrap().trim()).collect();
        assert_eq!(names, ["full", "no-comments", "no-summary", "no-both", "no-coalition"]);
        assert_eq!(table.to_csv().lines().count(), 6);
    }

    #[test]
    fn outcome_json_is_tagged() {
        let o = RunOutcome::Refused { reason: "none".into() };
        assert_eq!(serde_json::to_string(&o).unwrap(), r#"{"status":"refused","reason":"none"}"#);
    }
}
