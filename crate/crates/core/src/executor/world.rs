//! Symbolic environment state and the floor-plan loader.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{RobotId, RobotSpec};

pub const START_LOCATION: &str = "start";

/// Boolean object attributes. The key set is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attr {
    IsOn,
    IsOpen,
    IsSliced,
    IsBroken,
    IsHeated,
    IsCooked,
    IsWashed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attributes {
    #[serde(default)]
    pub is_on: bool,
    #[serde(default)]
    pub is_open: bool,
    #[serde(default)]
    pub is_sliced: bool,
    #[serde(default)]
    pub is_broken: bool,
    #[serde(default)]
    pub is_heated: bool,
    #[serde(default)]
    pub is_cooked: bool,
    #[serde(default)]
    pub is_washed: bool,
}

impl Attributes {
    pub fn get(&self, attr: Attr) -> bool {
        match attr {
            Attr::IsOn => self.is_on,
            Attr::IsOpen => self.is_open,
            Attr::IsSliced => self.is_sliced,
            Attr::IsBroken => self.is_broken,
            Attr::IsHeated => self.is_heated,
            Attr::IsCooked => self.is_cooked,
            Attr::IsWashed => self.is_washed,
        }
    }

    pub fn set(&mut self, attr: Attr, value: bool) {
        let slot = match attr {
            Attr::IsOn => &mut self.is_on,
            Attr::IsOpen => &mut self.is_open,
            Attr::IsSliced => &mut self.is_sliced,
            Attr::IsBroken => &mut self.is_broken,
            Attr::IsHeated => &mut self.is_heated,
            Attr::IsCooked => &mut self.is_cooked,
            Attr::IsWashed => &mut self.is_washed,
        };
        *slot = value;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: String,
    #[serde(rename = "type")]
    pub object_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    pub attributes: Attributes,
    /// Containing receptacle, or `robotN` while held.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_receptacle: Option<String>,
    pub is_receptacle: bool,
    pub togglable: bool,
    pub openable: bool,
    pub sliceable: bool,
    pub breakable: bool,
}

impl ObjectState {
    pub fn held_by(&self) -> Option<RobotId> {
        self.parent_receptacle
            .as_deref()
            .and_then(|p| RobotId::parse_token(p).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    /// Square meters needing visibility coverage.
    pub area: f64,
    pub patrolled: bool,
    pub assigned_visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotState {
    pub location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holding: Option<String>,
}

impl Default for RobotState {
    fn default() -> Self {
        Self {
            location: START_LOCATION.to_string(),
            holding: None,
        }
    }
}

/// Indirect effect of a powered receptacle on the objects inside it,
/// e.g. a switched-on microwave heats its contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceptacleEffect {
    pub receptacle_type: String,
    pub sets: Attr,
    #[serde(default = "yes")]
    pub requires_on: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    #[serde(default)]
    pub name: String,
    pub objects: BTreeMap<String, ObjectState>,
    pub regions: BTreeMap<String, Region>,
    pub robot_state: BTreeMap<RobotId, RobotState>,
    #[serde(default)]
    pub receptacle_effects: Vec<ReceptacleEffect>,
}

impl WorldState {
    /// True for any object or region id.
    pub fn has_entity(&self, id: &str) -> bool {
        self.objects.contains_key(id) || self.regions.contains_key(id)
    }

    /// Ensures every robot has a state entry, starting at `start` with empty hands.
    pub fn place_robots(&mut self, robots: &[RobotSpec]) {
        for robot in robots {
            self.robot_state.entry(robot.id).or_default();
        }
    }

    /// Objects directly inside `receptacle`.
    pub fn contents(&self, receptacle: &str) -> Vec<String> {
        self.objects
            .values()
            .filter(|o| o.parent_receptacle.as_deref() == Some(receptacle))
            .map(|o| o.id.clone())
            .collect()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("world state serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum FloorPlanError {
    #[error("floor plan schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate id `{0}` in floor plan")]
    DuplicateId(String),
    #[error("id `{0}` is reserved")]
    ReservedId(String),
    #[error("object `{object}` names unknown parent `{parent}`")]
    UnknownParent { object: String, parent: String },
    #[error("object `{object}` is placed in `{parent}`, which is not a receptacle")]
    ParentNotReceptacle { object: String, parent: String },
    #[error("containment cycle through `{0}`")]
    ContainmentCycle(String),
    #[error("`{id}`: {message}")]
    BadValue { id: String, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FloorPlanDoc {
    #[serde(default)]
    name: String,
    #[serde(default)]
    objects: Vec<ObjectDoc>,
    #[serde(default)]
    regions: Vec<RegionDoc>,
    #[serde(default)]
    receptacle_effects: Vec<ReceptacleEffect>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: String,
    #[serde(rename = "type")]
    object_type: Option<String>,
    mass: Option<f64>,
    #[serde(default)]
    attributes: Attributes,
    parent: Option<String>,
    #[serde(default)]
    is_receptacle: bool,
    #[serde(default)]
    togglable: bool,
    #[serde(default)]
    openable: bool,
    #[serde(default)]
    sliceable: bool,
    #[serde(default)]
    breakable: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    id: String,
    area: f64,
}

/// Parses a floor-plan JSON document into a world with no robots placed.
pub fn load_floorplan(source: &str) -> Result<WorldState, FloorPlanError> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let doc: FloorPlanDoc = serde_path_to_error::deserialize(de).map_err(|e| FloorPlanError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let mut world = WorldState {
        name: doc.name,
        receptacle_effects: doc.receptacle_effects,
        ..WorldState::default()
    };
    let mut ids = BTreeSet::new();
    let check_id = |ids: &mut BTreeSet<String>, id: &str| {
        if id == START_LOCATION || RobotId::looks_like_token(id) || !crate::model::is_ident(id) {
            return Err(FloorPlanError::ReservedId(id.to_string()));
        }
        if !ids.insert(id.to_string()) {
            return Err(FloorPlanError::DuplicateId(id.to_string()));
        }
        Ok(())
    };

    for obj in doc.objects {
        check_id(&mut ids, &obj.id)?;
        if let Some(m) = obj.mass {
            if !m.is_finite() || m < 0.0 {
                return Err(FloorPlanError::BadValue {
                    id: obj.id,
                    message: format!("mass must be non-negative, got {m}"),
                });
            }
        }
        let state = ObjectState {
            object_type: obj.object_type.unwrap_or_else(|| obj.id.clone()),
            id: obj.id.clone(),
            mass: obj.mass,
            attributes: obj.attributes,
            parent_receptacle: obj.parent,
            is_receptacle: obj.is_receptacle,
            togglable: obj.togglable,
            openable: obj.openable,
            sliceable: obj.sliceable,
            breakable: obj.breakable,
        };
        world.objects.insert(obj.id, state);
    }
    for region in doc.regions {
        check_id(&mut ids, &region.id)?;
        if !region.area.is_finite() || region.area < 0.0 {
            return Err(FloorPlanError::BadValue {
                id: region.id,
                message: format!("area must be non-negative, got {}", region.area),
            });
        }
        world.regions.insert(
            region.id.clone(),
            Region {
                id: region.id,
                area: region.area,
                patrolled: false,
                assigned_visibility: 0.0,
            },
        );
    }

    for obj in world.objects.values() {
        if let Some(parent) = &obj.parent_receptacle {
            match world.objects.get(parent) {
                None => {
                    return Err(FloorPlanError::UnknownParent {
                        object: obj.id.clone(),
                        parent: parent.clone(),
                    })
                }
                Some(p) if !p.is_receptacle => {
                    return Err(FloorPlanError::ParentNotReceptacle {
                        object: obj.id.clone(),
                        parent: parent.clone(),
                    })
                }
                Some(_) => {}
            }
        }
    }
    for start in world.objects.keys() {
        let mut seen = BTreeSet::new();
        let mut cur = Some(start.as_str());
        while let Some(id) = cur {
            if !seen.insert(id) {
                return Err(FloorPlanError::ContainmentCycle(start.clone()));
            }
            cur = world.objects[id].parent_receptacle.as_deref();
        }
    }
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KITCHEN: &str = r#"{
      "name": "test_kitchen",
      "objects": [
        {"id": "Fridge", "is_receptacle": true, "openable": true},
        {"id": "Apple", "mass": 0.2, "parent": "Fridge", "sliceable": true},
        {"id": "Lamp", "togglable": true, "attributes": {"is_on": true}}
      ],
      "regions": [{"id": "RegionA", "area": 12}],
      "receptacle_effects": [{"receptacle_type": "Microwave", "sets": "is_heated"}]
    }"#;

    #[test]
    fn loads_objects_with_defaults() {
        let w = load_floorplan(KITCHEN).unwrap();
        assert_eq!(w.objects.len(), 3);
        assert_eq!(w.objects["Apple"].parent_receptacle.as_deref(), Some("Fridge"));
        assert!(w.objects["Lamp"].attributes.is_on);
        assert_eq!(w.objects["Apple"].attributes, Attributes::default());
        assert_eq!(w.objects["Fridge"].object_type, "Fridge");
        assert!(w.receptacle_effects[0].requires_on);
        assert!(w.robot_state.is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = r#"{"objects": [{"id": "Lamp"}, {"id": "Lamp"}]}"#;
        assert!(matches!(load_floorplan(doc), Err(FloorPlanError::DuplicateId(id)) if id == "Lamp"));
        let doc = r#"{"objects": [{"id": "Lamp"}], "regions": [{"id": "Lamp", "area": 1}]}"#;
        assert!(matches!(load_floorplan(doc), Err(FloorPlanError::DuplicateId(_))));
    }

    #[test]
    fn cycles_rejected() {
        let doc = r#"{"objects": [
            {"id": "BoxA", "is_receptacle": true, "parent": "BoxB"},
            {"id": "BoxB", "is_receptacle": true, "parent": "BoxA"}]}"#;
        assert!(matches!(load_floorplan(doc), Err(FloorPlanError::ContainmentCycle(_))));
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let doc = r#"{"objects": [{"id": "Lamp", "attributes": {"is_glowing": true}}]}"#;
        match load_floorplan(doc) {
            Err(FloorPlanError::Schema { path, .. }) => assert!(path.starts_with("objects[0]"), "{path}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reserved_and_dangling() {
        assert!(matches!(
            load_floorplan(r#"{"objects": [{"id": "robot2"}]}"#),
            Err(FloorPlanError::ReservedId(_))
        ));
        assert!(matches!(
            load_floorplan(r#"{"objects": [{"id": "Apple", "parent": "Bowl"}]}"#),
            Err(FloorPlanError::UnknownParent { .. })
        ));
    }

    #[test]
    fn digest_tracks_changes() {
        let mut w = load_floorplan(KITCHEN).unwrap();
        let before = w.digest();
        assert_eq!(before, w.clone().digest());
        w.objects.get_mut("Lamp").unwrap().attributes.is_on = false;
        assert_ne!(before, w.digest());
    }

    #[test]
    fn world_json_round_trip() {
        let mut w = load_floorplan(KITCHEN).unwrap();
        w.place_robots(&[RobotSpec::new(RobotId(1), vec![]).unwrap()]);
        let text = serde_json::to_string(&w).unwrap();
        let back: WorldState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
    }
}
