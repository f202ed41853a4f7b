//! Problem vocabulary: skills, robots, sub-tasks, teams and goal conditions.
//!
//! Everything here is an immutable value type. The three predicates at the
//! bottom ([`skills_required`], [`covers`], [`capacity_feasible`]) are shared by
//! the coalition solver, the plan validator and the executor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("skill {skill} takes {expected} argument(s), got {got}")]
    Arity {
        skill: SkillName,
        expected: usize,
        got: usize,
    },
    #[error("malformed action `{0}`")]
    MalformedAction(String),
    #[error("skill {0} does not carry a capacity")]
    CapacityNotAllowed(SkillName),
    #[error("capacity for {skill} must be a finite non-negative number, got {value}")]
    BadCapacity { skill: SkillName, value: f64 },
    #[error("robot {robot} lists skill {skill} more than once")]
    DuplicateSkill { robot: RobotId, skill: SkillName },
    #[error("robot ids must be 1-based, got 0")]
    ZeroRobotId,
    #[error("duplicate robot id {0}")]
    DuplicateRobot(RobotId),
    #[error("team must have at least one member")]
    EmptyTeam,
    #[error("team lists {0} more than once")]
    DuplicateMember(RobotId),
    #[error("sub-task `{0}` has no actions")]
    EmptySubTask(String),
    #[error("sub-task `{id}` declares required skills {declared:?} but its actions use {derived:?}")]
    RequiredSkillsMismatch {
        id: String,
        declared: BTreeSet<SkillName>,
        derived: BTreeSet<SkillName>,
    },
    #[error("sub-task `{id}` demand on {skill} is not among its required skills")]
    DemandSkillNotRequired { id: String, skill: SkillName },
    #[error("sub-task `{id}` demand amount must be finite and non-negative, got {amount}")]
    BadDemand { id: String, amount: f64 },
    #[error("duplicate sub-task id `{0}`")]
    DuplicateSubTask(String),
    #[error("temporal orders must form a contiguous range from 0; missing phase {0}")]
    GapInTemporalOrder(u32),
    #[error("robot token `{0}` must look like robotN with N >= 1")]
    BadRobotToken(String),
}

/// Closed set of low-level skills a robot may expose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SkillName {
    GoToObject,
    GoToLocation,
    PickupObject,
    PutObject,
    SwitchOn,
    SwitchOff,
    OpenObject,
    CloseObject,
    SliceObject,
    CleanObject,
    BreakObject,
    ThrowObject,
    Patrol,
}

impl SkillName {
    pub const ALL: [SkillName; 13] = [
        SkillName::GoToObject,
        SkillName::GoToLocation,
        SkillName::PickupObject,
        SkillName::PutObject,
        SkillName::SwitchOn,
        SkillName::SwitchOff,
        SkillName::OpenObject,
        SkillName::CloseObject,
        SkillName::SliceObject,
        SkillName::CleanObject,
        SkillName::BreakObject,
        SkillName::ThrowObject,
        SkillName::Patrol,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SkillName::GoToObject => "GoToObject",
            SkillName::GoToLocation => "GoToLocation",
            SkillName::PickupObject => "PickupObject",
            SkillName::PutObject => "PutObject",
            SkillName::SwitchOn => "SwitchOn",
            SkillName::SwitchOff => "SwitchOff",
            SkillName::OpenObject => "OpenObject",
            SkillName::CloseObject => "CloseObject",
            SkillName::SliceObject => "SliceObject",
            SkillName::CleanObject => "CleanObject",
            SkillName::BreakObject => "BreakObject",
            SkillName::ThrowObject => "ThrowObject",
            SkillName::Patrol => "Patrol",
        }
    }

    /// Number of arguments an action of this skill takes.
    pub fn arity(self) -> usize {
        match self {
            SkillName::PutObject => 2,
            _ => 1,
        }
    }

    /// Skills that may carry a numeric capacity (kg for pickup, m² for patrol).
    pub fn has_capacity(self) -> bool {
        matches!(self, SkillName::PickupObject | SkillName::Patrol)
    }

    pub fn capacity_unit(self) -> Option<&'static str> {
        match self {
            SkillName::PickupObject => Some("kg"),
            SkillName::Patrol => Some("m2"),
            _ => None,
        }
    }

    /// Human-readable signature used when listing skills in prompts.
    pub fn signature(self) -> &'static str {
        match self {
            SkillName::GoToObject => "GoToObject(object)",
            SkillName::GoToLocation => "GoToLocation(region)",
            SkillName::PickupObject => "PickupObject(object)",
            SkillName::PutObject => "PutObject(object, receptacle)",
            SkillName::SwitchOn => "SwitchOn(object)",
            SkillName::SwitchOff => "SwitchOff(object)",
            SkillName::OpenObject => "OpenObject(object)",
            SkillName::CloseObject => "CloseObject(object)",
            SkillName::SliceObject => "SliceObject(object)",
            SkillName::CleanObject => "CleanObject(object)",
            SkillName::BreakObject => "BreakObject(object)",
            SkillName::ThrowObject => "ThrowObject(object)",
            SkillName::Patrol => "Patrol(region)",
        }
    }
}

impl fmt::Display for SkillName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SkillName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SkillName::ALL
            .iter()
            .copied()
            .find(|skill| skill.as_str() == s)
            .ok_or_else(|| ModelError::UnknownSkill(s.to_string()))
    }
}

impl TryFrom<String> for SkillName {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<SkillName> for String {
    fn from(value: SkillName) -> Self {
        value.as_str().to_string()
    }
}

/// 1-based robot ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct RobotId(pub u32);

/// Accepts `3`, `"3"` (JSON map keys) and `"robot3"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum RobotIdRepr {
    Num(u32),
    Text(String),
}

impl<'de> Deserialize<'de> for RobotId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RobotIdRepr::deserialize(d)? {
            RobotIdRepr::Num(n) => Ok(RobotId(n)),
            RobotIdRepr::Text(s) => match s.parse::<u32>() {
                Ok(n) => Ok(RobotId(n)),
                Err(_) => RobotId::parse_token(&s).map_err(serde::de::Error::custom),
            },
        }
    }
}

impl RobotId {
    /// Parses the `robotN` token used in plan text.
    pub fn parse_token(token: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::BadRobotToken(token.to_string());
        let digits = token.strip_prefix("robot").ok_or_else(bad)?;
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        digits.parse::<u32>().map(RobotId).map_err(|_| bad())
    }

    /// True when `s` has the shape of a robot token, regardless of value.
    pub fn looks_like_token(s: &str) -> bool {
        s.strip_prefix("robot")
            .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "robot{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillSpec {
    pub name: SkillName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

impl SkillSpec {
    pub fn plain(name: SkillName) -> Self {
        Self { name, capacity: None }
    }

    pub fn with_capacity(name: SkillName, capacity: f64) -> Result<Self, ModelError> {
        let spec = Self {
            name,
            capacity: Some(capacity),
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), ModelError> {
        if let Some(value) = self.capacity {
            if !self.name.has_capacity() {
                return Err(ModelError::CapacityNotAllowed(self.name));
            }
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::BadCapacity {
                    skill: self.name,
                    value,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RobotSpecRaw")]
pub struct RobotSpec {
    pub id: RobotId,
    pub skills: Vec<SkillSpec>,
}

#[derive(Deserialize)]
struct RobotSpecRaw {
    id: RobotId,
    skills: Vec<SkillSpec>,
}

impl TryFrom<RobotSpecRaw> for RobotSpec {
    type Error = ModelError;

    fn try_from(raw: RobotSpecRaw) -> Result<Self, Self::Error> {
        RobotSpec::new(raw.id, raw.skills)
    }
}

impl RobotSpec {
    pub fn new(id: RobotId, skills: Vec<SkillSpec>) -> Result<Self, ModelError> {
        if id.0 == 0 {
            return Err(ModelError::ZeroRobotId);
        }
        let mut seen = BTreeSet::new();
        for spec in &skills {
            spec.check()?;
            if !seen.insert(spec.name) {
                return Err(ModelError::DuplicateSkill {
                    robot: id,
                    skill: spec.name,
                });
            }
        }
        Ok(Self { id, skills })
    }

    pub fn skill_names(&self) -> BTreeSet<SkillName> {
        self.skills.iter().map(|s| s.name).collect()
    }

    pub fn has_skill(&self, skill: SkillName) -> bool {
        self.skills.iter().any(|s| s.name == skill)
    }

    /// Declared capacity for `skill`, if the robot has the skill and declares one.
    pub fn capacity(&self, skill: SkillName) -> Option<f64> {
        self.skills
            .iter()
            .find(|s| s.name == skill)
            .and_then(|s| s.capacity)
    }
}

/// Checks that robot ids are unique within one task instance.
pub fn check_robot_ids(robots: &[RobotSpec]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for robot in robots {
        if !seen.insert(robot.id) {
            return Err(ModelError::DuplicateRobot(robot.id));
        }
    }
    Ok(())
}

/// One call to a low-level skill, e.g. `PutObject(Apple, Fridge)`.
///
/// Serialized as its textual form so dataset files stay readable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ActionCall {
    pub skill: SkillName,
    pub args: Vec<String>,
}

impl ActionCall {
    pub fn new<S: Into<String>>(
        skill: SkillName,
        args: impl IntoIterator<Item = S>,
    ) -> Result<Self, ModelError> {
        let args: Vec<String> = args.into_iter().map(Into::into).collect();
        if args.len() != skill.arity() {
            return Err(ModelError::Arity {
                skill,
                expected: skill.arity(),
                got: args.len(),
            });
        }
        Ok(Self { skill, args })
    }
}

impl fmt::Display for ActionCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.skill, self.args.join(", "))
    }
}

impl FromStr for ActionCall {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ModelError::MalformedAction(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(malformed)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(malformed)?;
        let skill: SkillName = s[..open].trim().parse()?;
        let args: Vec<&str> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::trim).collect()
        };
        if args.iter().any(|a| !is_ident(a)) {
            return Err(malformed());
        }
        ActionCall::new(skill, args)
    }
}

impl TryFrom<String> for ActionCall {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<ActionCall> for String {
    fn from(value: ActionCall) -> Self {
        value.to_string()
    }
}

/// Identifier shape shared by plan text and dataset files.
pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub skill: SkillName,
    pub amount: f64,
}

/// A decomposed unit of work with its skill requirement and phase index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubTaskRaw")]
pub struct SubTask {
    pub id: String,
    pub description: String,
    pub actions: Vec<ActionCall>,
    pub required_skills: BTreeSet<SkillName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<Demand>,
    pub temporal_order: u32,
}

#[derive(Deserialize)]
struct SubTaskRaw {
    id: String,
    #[serde(default)]
    description: String,
    actions: Vec<ActionCall>,
    #[serde(default)]
    required_skills: Option<BTreeSet<SkillName>>,
    #[serde(default)]
    demand: Option<Demand>,
    temporal_order: u32,
}

impl TryFrom<SubTaskRaw> for SubTask {
    type Error = ModelError;

    fn try_from(raw: SubTaskRaw) -> Result<Self, Self::Error> {
        let task = SubTask::new(
            raw.id,
            raw.description,
            raw.actions,
            raw.demand,
            raw.temporal_order,
        )?;
        if let Some(declared) = raw.required_skills {
            if declared != task.required_skills {
                return Err(ModelError::RequiredSkillsMismatch {
                    id: task.id,
                    declared,
                    derived: task.required_skills,
                });
            }
        }
        Ok(task)
    }
}

impl SubTask {
    /// Builds a sub-task, deriving `required_skills` from the action list.
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        actions: Vec<ActionCall>,
        demand: Option<Demand>,
        temporal_order: u32,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if actions.is_empty() {
            return Err(ModelError::EmptySubTask(id));
        }
        let required_skills = skills_required(&actions);
        if let Some(d) = demand {
            if !required_skills.contains(&d.skill) {
                return Err(ModelError::DemandSkillNotRequired { id, skill: d.skill });
            }
            if !d.amount.is_finite() || d.amount < 0.0 {
                return Err(ModelError::BadDemand {
                    id,
                    amount: d.amount,
                });
            }
        }
        Ok(Self {
            id,
            description: description.into(),
            actions,
            required_skills,
            demand,
            temporal_order,
        })
    }
}

/// The temporally ordered sub-task set for one instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionRaw")]
pub struct Decomposition {
    pub subtasks: Vec<SubTask>,
}

#[derive(Deserialize)]
struct DecompositionRaw {
    subtasks: Vec<SubTask>,
}

impl TryFrom<DecompositionRaw> for Decomposition {
    type Error = ModelError;

    fn try_from(raw: DecompositionRaw) -> Result<Self, Self::Error> {
        Decomposition::new(raw.subtasks)
    }
}

impl Decomposition {
    pub fn new(subtasks: Vec<SubTask>) -> Result<Self, ModelError> {
        let mut ids = BTreeSet::new();
        for task in &subtasks {
            if !ids.insert(task.id.as_str()) {
                return Err(ModelError::DuplicateSubTask(task.id.clone()));
            }
        }
        let orders: BTreeSet<u32> = subtasks.iter().map(|t| t.temporal_order).collect();
        if let Some(&max) = orders.iter().next_back() {
            if let Some(missing) = (0..=max).find(|o| !orders.contains(o)) {
                return Err(ModelError::GapInTemporalOrder(missing));
            }
        }
        Ok(Self { subtasks })
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }

    /// Number of distinct temporal orders.
    pub fn phase_count(&self) -> usize {
        self.subtasks
            .iter()
            .map(|t| t.temporal_order)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Sub-tasks grouped by temporal order, preserving source order inside a group.
    pub fn by_phase(&self) -> BTreeMap<u32, Vec<&SubTask>> {
        let mut phases: BTreeMap<u32, Vec<&SubTask>> = BTreeMap::new();
        for task in &self.subtasks {
            phases.entry(task.temporal_order).or_default().push(task);
        }
        phases
    }
}

/// Non-empty, duplicate-free set of robots kept in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<RobotId>", into = "Vec<RobotId>")]
pub struct Team {
    members: Vec<RobotId>,
}

impl Team {
    pub fn new(members: impl IntoIterator<Item = RobotId>) -> Result<Self, ModelError> {
        let mut members: Vec<RobotId> = members.into_iter().collect();
        if members.is_empty() {
            return Err(ModelError::EmptyTeam);
        }
        members.sort();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateMember(w[0]));
        }
        Ok(Self { members })
    }

    pub fn single(id: RobotId) -> Self {
        Self { members: vec![id] }
    }

    pub fn members(&self) -> &[RobotId] {
        &self.members
    }

    /// Lowest-id member; nominal holder for team manipulation.
    pub fn lead(&self) -> RobotId {
        self.members[0]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, id: RobotId) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn is_disjoint(&self, other: &Team) -> bool {
        !self.members.iter().any(|m| other.contains(*m))
    }
}

impl TryFrom<Vec<RobotId>> for Team {
    type Error = ModelError;

    fn try_from(value: Vec<RobotId>) -> Result<Self, Self::Error> {
        Team::new(value)
    }
}

impl From<Team> for Vec<RobotId> {
    fn from(value: Team) -> Self {
        value.members
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalAttribute {
    IsOn,
    IsOpen,
    IsSliced,
    IsHeated,
    IsCooked,
    IsWashed,
    IsBroken,
    ParentReceptacle,
    Patrolled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GoalValue {
    Bool(bool),
    Id(String),
}

/// An (object, attribute, value) triple that must hold in the final world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalCondition {
    pub object_id: String,
    pub attribute: GoalAttribute,
    pub expected: GoalValue,
}

/// Exact set of skills used by an action list.
pub fn skills_required(actions: &[ActionCall]) -> BTreeSet<SkillName> {
    actions.iter().map(|a| a.skill).collect()
}

/// True iff every required skill is in `team_skills`.
pub fn covers(team_skills: &BTreeSet<SkillName>, required: &BTreeSet<SkillName>) -> bool {
    required.is_subset(team_skills)
}

/// Union of the skill names of the given robots.
pub fn team_skills<'a>(robots: impl IntoIterator<Item = &'a RobotSpec>) -> BTreeSet<SkillName> {
    robots.into_iter().flat_map(|r| r.skill_names()).collect()
}

/// Pooled capacity of `team` for `skill`; robots without a declared capacity add nothing.
pub fn pooled_capacity<'a>(team: impl IntoIterator<Item = &'a RobotSpec>, skill: SkillName) -> f64 {
    team.into_iter().filter_map(|r| r.capacity(skill)).sum()
}

/// True iff the team's pooled capacity for `skill` reaches `amount`.
pub fn capacity_feasible<'a>(
    team: impl IntoIterator<Item = &'a RobotSpec>,
    skill: SkillName,
    amount: f64,
) -> bool {
    pooled_capacity(team, skill) >= amount
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(s: &str) -> ActionCall {
        s.parse().unwrap()
    }

    fn picker(id: u32, cap: f64) -> RobotSpec {
        RobotSpec::new(
            RobotId(id),
            vec![SkillSpec::with_capacity(SkillName::PickupObject, cap).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn skills_required_projects_and_collapses() {
        let lamp = [act("GoToObject(Lamp)"), act("SwitchOff(Lamp)")];
        assert_eq!(
            skills_required(&lamp),
            BTreeSet::from([SkillName::GoToObject, SkillName::SwitchOff])
        );
        let slice = [
            act("GoToObject(Knife)"),
            act("PickupObject(Knife)"),
            act("GoToObject(Apple)"),
            act("SliceObject(Apple)"),
        ];
        assert_eq!(
            skills_required(&slice),
            BTreeSet::from([
                SkillName::GoToObject,
                SkillName::PickupObject,
                SkillName::SliceObject
            ])
        );
        assert_eq!(
            skills_required(&[act("Patrol(RegionA)")]),
            BTreeSet::from([SkillName::Patrol])
        );
    }

    #[test]
    fn covers_is_subset() {
        use SkillName::*;
        assert!(covers(
            &BTreeSet::from([GoToObject, SwitchOn, SwitchOff]),
            &BTreeSet::from([GoToObject, SwitchOn])
        ));
        assert!(!covers(
            &BTreeSet::from([GoToObject]),
            &BTreeSet::from([GoToObject, SliceObject])
        ));
        assert!(covers(&BTreeSet::new(), &BTreeSet::new()));
    }

    #[test]
    fn capacity_pools_additively() {
        let pick = SkillName::PickupObject;
        assert!(capacity_feasible(&[picker(1, 5.0)], pick, 2.0));
        assert!(capacity_feasible(&[picker(1, 3.0), picker(2, 3.0)], pick, 5.0));
        assert!(!capacity_feasible(&[picker(1, 3.0)], pick, 5.0));
        let walker = RobotSpec::new(RobotId(3), vec![SkillSpec::plain(SkillName::GoToObject)]).unwrap();
        assert!(!capacity_feasible(&[walker], pick, 0.5));
    }

    #[test]
    fn unknown_skill_is_an_error() {
        assert_eq!(
            "Fly".parse::<SkillName>(),
            Err(ModelError::UnknownSkill("Fly".into()))
        );
        assert!(serde_json::from_str::<SkillName>("\"Teleport\"").is_err());
    }

    #[test]
    fn action_arity_is_checked() {
        assert!(matches!(
            "PutObject(Apple)".parse::<ActionCall>(),
            Err(ModelError::Arity { expected: 2, got: 1, .. })
        ));
        assert_eq!(
            act("PutObject(Apple,Fridge)").to_string(),
            "PutObject(Apple, Fridge)"
        );
    }

    #[test]
    fn capacity_only_on_capacity_skills() {
        assert_eq!(
            SkillSpec::with_capacity(SkillName::SwitchOn, 1.0),
            Err(ModelError::CapacityNotAllowed(SkillName::SwitchOn))
        );
        assert!(SkillSpec::with_capacity(SkillName::Patrol, -1.0).is_err());
    }

    #[test]
    fn robot_rejects_duplicate_skill() {
        let dup = RobotSpec::new(
            RobotId(1),
            vec![
                SkillSpec::plain(SkillName::GoToObject),
                SkillSpec::plain(SkillName::GoToObject),
            ],
        );
        assert!(matches!(dup, Err(ModelError::DuplicateSkill { .. })));
    }

    #[test]
    fn team_sorts_and_rejects_duplicates() {
        let team = Team::new([RobotId(3), RobotId(1)]).unwrap();
        assert_eq!(team.members(), &[RobotId(1), RobotId(3)]);
        assert_eq!(team.lead(), RobotId(1));
        assert_eq!(Team::new([]), Err(ModelError::EmptyTeam));
        assert_eq!(
            Team::new([RobotId(2), RobotId(2)]),
            Err(ModelError::DuplicateMember(RobotId(2)))
        );
    }

    #[test]
    fn robot_tokens() {
        assert_eq!(RobotId::parse_token("robot12").unwrap(), RobotId(12));
        assert!(RobotId::parse_token("robot0").is_err());
        assert!(RobotId::parse_token("robot01").is_err());
        assert!(RobotId::parse_token("robotA").is_err());
        assert!(RobotId::looks_like_token("robot0"));
    }

    #[test]
    fn subtask_derives_skills_and_checks_demand() {
        let task = SubTask::new(
            "lift",
            "lift the box",
            vec![act("GoToObject(Box)"), act("PickupObject(Box)")],
            Some(Demand {
                skill: SkillName::PickupObject,
                amount: 8.0,
            }),
            0,
        )
        .unwrap();
        assert_eq!(task.required_skills.len(), 2);
        let bad = SubTask::new(
            "x",
            "",
            vec![act("GoToObject(Box)")],
            Some(Demand {
                skill: SkillName::PickupObject,
                amount: 1.0,
            }),
            0,
        );
        assert!(matches!(bad, Err(ModelError::DemandSkillNotRequired { .. })));
    }

    #[test]
    fn subtask_json_rejects_inconsistent_required_skills() {
        let json = r#"{"id":"a","actions":["GoToObject(Lamp)"],"required_skills":["SwitchOn"],"temporal_order":0}"#;
        assert!(serde_json::from_str::<SubTask>(json).is_err());
        let json = r#"{"id":"a","actions":["GoToObject(Lamp)"],"temporal_order":0}"#;
        let task: SubTask = serde_json::from_str(json).unwrap();
        assert_eq!(task.required_skills, BTreeSet::from([SkillName::GoToObject]));
    }

    #[test]
    fn decomposition_requires_contiguous_orders() {
        let t = |id: &str, order| SubTask::new(id, "", vec![act("GoToObject(A)")], None, order).unwrap();
        assert!(Decomposition::new(vec![t("a", 0), t("b", 1), t("c", 1)]).is_ok());
        assert_eq!(
            Decomposition::new(vec![t("a", 0), t("b", 2)]),
            Err(ModelError::GapInTemporalOrder(1))
        );
        assert_eq!(
            Decomposition::new(vec![t("a", 1)]),
            Err(ModelError::GapInTemporalOrder(0))
        );
        assert_eq!(
            Decomposition::new(vec![t("a", 0), t("a", 1)]),
            Err(ModelError::DuplicateSubTask("a".into()))
        );
    }

    #[test]
    fn goal_condition_json_shape() {
        let goal: GoalCondition = serde_json::from_str(
            r#"{"object_id":"Apple","attribute":"parent_receptacle","expected":"Fridge"}"#,
        )
        .unwrap();
        assert_eq!(goal.expected, GoalValue::Id("Fridge".into()));
        let goal: GoalCondition =
            serde_json::from_str(r#"{"object_id":"Lamp","attribute":"is_on","expected":false}"#).unwrap();
        assert_eq!(goal.expected, GoalValue::Bool(false));
    }
}
