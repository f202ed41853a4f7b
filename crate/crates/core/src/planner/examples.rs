//! Built-in few-shot examples.
//!
//! All examples live in a small studio apartment that shares no floor plan
//! with the benchmark. Lines starting with `## ` are block summaries and lines
//! starting with `# ` are line comments; prompt flags strip either kind.

use crate::executor::{load_floorplan, WorldState};
use crate::model::RobotSpec;

pub const EXAMPLE_FLOORPLAN: &str = r#"{
  "name": "example_studio",
  "objects": [
    {"id": "Counter", "is_receptacle": true},
    {"id": "Stove", "is_receptacle": true, "togglable": true},
    {"id": "Kettle", "mass": 1.5, "parent": "Counter"},
    {"id": "Bread", "mass": 0.5, "parent": "Counter", "sliceable": true},
    {"id": "Mug", "mass": 0.3, "parent": "Counter", "breakable": true},
    {"id": "Cabinet", "is_receptacle": true, "openable": true},
    {"id": "FloorLamp", "togglable": true},
    {"id": "Radio", "togglable": true, "attributes": {"is_on": true}},
    {"id": "Crate", "mass": 12},
    {"id": "Bin", "is_receptacle": true}
  ],
  "regions": [
    {"id": "Porch", "area": 10},
    {"id": "Garden", "area": 6}
  ],
  "receptacle_effects": [
    {"receptacle_type": "Stove", "sets": "is_heated"}
  ]
}"#;

pub fn example_world() -> WorldState {
    load_floorplan(EXAMPLE_FLOORPLAN).expect("example floor plan is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionExample {
    pub instruction: &'static str,
    pub tasks: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionExample {
    /// JSON array of robot specs.
    pub robots: &'static str,
    pub tasks: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationExample {
    pub robots: &'static str,
    pub tasks: &'static str,
    pub plan: &'static str,
}

pub fn parse_robots(json: &str) -> Vec<RobotSpec> {
    serde_json::from_str(json).expect("example robots are valid")
}

const DARK_AND_LOUD: &str = "\
tasks {
  ## Light the room and silence the radio; the two jobs are independent.
  subtask lamp_on phase 0 \"switch on the floor lamp\" {
    # walk over before touching the switch
    GoToObject(FloorLamp);
    SwitchOn(FloorLamp);
  }
  subtask radio_off phase 0 \"switch off the radio\" {
    GoToObject(Radio);
    SwitchOff(Radio);
  }
}
";

const BREAD_AND_MUG: &str = "\
tasks {
  ## Slice the bread and wash the mug at once, then store the mug.
  ## The cabinet must be open before the mug goes in and closed after.
  subtask slice_bread phase 0 \"slice the bread on the counter\" {
    GoToObject(Bread);
    SliceObject(Bread);
  }
  subtask open_cabinet phase 0 \"open the cabinet\" {
    GoToObject(Cabinet);
    OpenObject(Cabinet);
  }
  subtask wash_mug phase 0 \"wash the mug\" {
    GoToObject(Mug);
    CleanObject(Mug);
  }
  subtask store_mug phase 1 \"put the clean mug in the cabinet\" {
    # the mug can only be stored once it is clean
    GoToObject(Mug);
    PickupObject(Mug);
    GoToObject(Cabinet);
    PutObject(Mug, Cabinet);
  }
  subtask close_cabinet phase 2 \"close the cabinet\" {
    GoToObject(Cabinet);
    CloseObject(Cabinet);
  }
}
";

const KETTLE: &str = "\
tasks {
  ## Put the kettle on the stove, then switch the stove on to heat it.
  subtask place_kettle phase 0 \"move the kettle onto the stove\" {
    GoToObject(Kettle);
    PickupObject(Kettle);
    GoToObject(Stove);
    PutObject(Kettle, Stove);
  }
  subtask heat_kettle phase 1 \"switch the stove on\" {
    # heating only works once the kettle is on the stove
    GoToObject(Stove);
    SwitchOn(Stove);
  }
}
";

const CRATE: &str = "\
tasks {
  ## Carry the heavy crate to the bin. It weighs 12 kg, so the demand line
  ## asks for 12 kg of pooled pickup capacity.
  subtask move_crate phase 0 demand PickupObject 12 \"carry the crate to the bin\" {
    GoToObject(Crate);
    PickupObject(Crate);
    GoToObject(Bin);
    # drop it straight into the bin
    PutObject(Crate, Bin);
  }
}
";

const PATROL: &str = "\
tasks {
  ## Watch both outdoor regions at the same time. Each patrol needs
  ## visibility at least equal to the region area.
  subtask patrol_porch phase 0 demand Patrol 10 \"patrol the 10 m2 porch\" {
    GoToLocation(Porch);
    Patrol(Porch);
  }
  subtask patrol_garden phase 0 demand Patrol 6 \"patrol the 6 m2 garden\" {
    GoToLocation(Garden);
    Patrol(Garden);
  }
}
";

const SLICE_ONLY: &str = "\
tasks {
  ## Slice the bread where it lies.
  subtask slice_bread phase 0 \"slice the bread on the counter\" {
    GoToObject(Bread);
    SliceObject(Bread);
  }
}
";

pub fn decomposition_examples() -> Vec<DecompositionExample> {
    vec![
        DecompositionExample {
            instruction: "The studio is too dark and too loud.",
            tasks: DARK_AND_LOUD,
        },
        DecompositionExample {
            instruction: "Slice the bread, and put the mug away clean.",
            tasks: BREAD_AND_MUG,
        },
        DecompositionExample {
            instruction: "Heat some water in the kettle.",
            tasks: KETTLE,
        },
        DecompositionExample {
            instruction: "Get rid of the crate by putting it in the bin.",
            tasks: CRATE,
        },
        DecompositionExample {
            instruction: "Keep watch over the porch and the garden.",
            tasks: PATROL,
        },
    ]
}

const LIGHT_ROBOTS: &str = r#"[
  {"id": 1, "skills": [{"name": "GoToObject"}, {"name": "SwitchOn"}, {"name": "SwitchOff"}]},
  {"id": 2, "skills": [{"name": "GoToObject"}, {"name": "PickupObject", "capacity": 2}]}
]"#;

const SPLIT_SKILL_ROBOTS: &str = r#"[
  {"id": 1, "skills": [{"name": "GoToObject"}, {"name": "PickupObject", "capacity": 2}, {"name": "PutObject"}]},
  {"id": 2, "skills": [{"name": "SliceObject"}, {"name": "CleanObject"}]}
]"#;

const LIFTER_ROBOTS: &str = r#"[
  {"id": 1, "skills": [{"name": "GoToObject"}, {"name": "PickupObject", "capacity": 5}, {"name": "PutObject"}]},
  {"id": 2, "skills": [{"name": "GoToObject"}, {"name": "PickupObject", "capacity": 8}, {"name": "PutObject"}]},
  {"id": 3, "skills": [{"name": "GoToObject"}, {"name": "PickupObject", "capacity": 4}, {"name": "PutObject"}]}
]"#;

pub fn coalition_examples() -> Vec<CoalitionExample> {
    vec![
        CoalitionExample {
            robots: LIGHT_ROBOTS,
            tasks: DARK_AND_LOUD,
        },
        CoalitionExample {
            robots: SPLIT_SKILL_ROBOTS,
            tasks: SLICE_ONLY,
        },
        CoalitionExample {
            robots: LIFTER_ROBOTS,
            tasks: CRATE,
        },
    ]
}

const SWITCH_PAIR_ROBOTS: &str = r#"[
  {"id": 1, "skills": [{"name": "GoToObject"}, {"name": "SwitchOn"}]},
  {"id": 2, "skills": [{"name": "GoToObject"}, {"name": "SwitchOff"}]}
]"#;

const COOK_ROBOT: &str = r#"[
  {"id": 1, "skills": [{"name": "GoToObject"}, {"name": "PickupObject", "capacity": 3}, {"name": "PutObject"}, {"name": "SwitchOn"}]}
]"#;

const KITCHEN_PAIR_ROBOTS: &str = r#"[
  {"id": 1, "skills": [{"name": "GoToObject"}, {"name": "SliceObject"}, {"name": "OpenObject"}, {"name": "CloseObject"}]},
  {"id": 2, "skills": [{"name": "GoToObject"}, {"name": "CleanObject"}, {"name": "PickupObject", "capacity": 2}, {"name": "PutObject"}]}
]"#;

const PATROL_ROBOTS: &str = r#"[
  {"id": 1, "skills": [{"name": "GoToLocation"}, {"name": "Patrol", "capacity": 5}]},
  {"id": 2, "skills": [{"name": "GoToLocation"}, {"name": "Patrol", "capacity": 5}]},
  {"id": 3, "skills": [{"name": "GoToLocation"}, {"name": "Patrol", "capacity": 6}]}
]"#;

const PAR_PLAN: &str = "\
plan {
  ## Different robots, same phase: run both branches together.
  seq {
    par {
      # robot1 is the only one that can switch things on
      assign robot1 {
        GoToObject(FloorLamp);
        SwitchOn(FloorLamp);
      }
      assign robot2 {
        GoToObject(Radio);
        SwitchOff(Radio);
      }
    }
  }
}
";

const SEQ_PLAN: &str = "\
plan {
  ## One robot, two phases: strictly one after the other.
  seq {
    assign robot1 {
      GoToObject(Kettle);
      PickupObject(Kettle);
      GoToObject(Stove);
      PutObject(Kettle, Stove);
    }
    # the stove goes on only after the kettle is on it
    assign robot1 {
      GoToObject(Stove);
      SwitchOn(Stove);
    }
  }
}
";

const HYBRID_PLAN: &str = "\
plan {
  ## Phase 0 runs robot1 and robot2 side by side; robot1 has two jobs in
  ## that phase, so they form a sequence inside its branch.
  seq {
    par {
      seq {
        assign robot1 {
          GoToObject(Bread);
          SliceObject(Bread);
        }
        assign robot1 {
          GoToObject(Cabinet);
          OpenObject(Cabinet);
        }
      }
      assign robot2 {
        GoToObject(Mug);
        CleanObject(Mug);
      }
    }
    # later phases wait for the whole par block
    assign robot2 {
      GoToObject(Mug);
      PickupObject(Mug);
      GoToObject(Cabinet);
      PutObject(Mug, Cabinet);
    }
    assign robot1 {
      GoToObject(Cabinet);
      CloseObject(Cabinet);
    }
  }
}
";

const TEAM_PLAN: &str = "\
plan {
  ## The porch needs two robots pooling their visibility; the garden
  ## needs only one, and the two teams do not overlap.
  seq {
    par {
      # both members move together and patrol as one team
      assign robot1, robot2 {
        GoToLocation(Porch);
        Patrol(Porch);
      }
      assign robot3 {
        GoToLocation(Garden);
        Patrol(Garden);
      }
    }
  }
}
";

pub fn allocation_examples() -> Vec<AllocationExample> {
    vec![
        AllocationExample {
            robots: SWITCH_PAIR_ROBOTS,
            tasks: DARK_AND_LOUD,
            plan: PAR_PLAN,
        },
        AllocationExample {
            robots: COOK_ROBOT,
            tasks: KETTLE,
            plan: SEQ_PLAN,
        },
        AllocationExample {
            robots: KITCHEN_PAIR_ROBOTS,
            tasks: BREAD_AND_MUG,
            plan: HYBRID_PLAN,
        },
        AllocationExample {
            robots: PATROL_ROBOTS,
            tasks: PATROL,
            plan: TEAM_PLAN,
        },
    ]
}
