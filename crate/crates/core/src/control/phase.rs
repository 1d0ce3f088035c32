use serde::{Deserialize, Serialize};

/// Stages of one pick-and-place cycle, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PickPlacePhase {
    Approach,
    Descend,
    Grasp,
    Ascend,
    Transit,
    Release,
    Home,
    Done,
}

impl PickPlacePhase {
    pub const ORDER: [PickPlacePhase; 8] = [
        PickPlacePhase::Approach,
        PickPlacePhase::Descend,
        PickPlacePhase::Grasp,
        PickPlacePhase::Ascend,
        PickPlacePhase::Transit,
        PickPlacePhase::Release,
        PickPlacePhase::Home,
        PickPlacePhase::Done,
    ];

    pub fn next(self) -> PickPlacePhase {
        use PickPlacePhase::*;
        match self {
            Approach => Descend,
            Descend => Grasp,
            Grasp => Ascend,
            Ascend => Transit,
            Transit => Release,
            Release => Home,
            Home | Done => Done,
        }
    }

    /// Phases that end when the arm settles on its segment goal.
    pub fn is_motion(self) -> bool {
        use PickPlacePhase::*;
        matches!(self, Approach | Descend | Ascend | Transit | Home)
    }

    /// Whether a logged change `from → to` respects the phase order. A new
    /// cycle starts from `Done` at `Approach` (or at `Home` for a homing
    /// move); any phase may abort to `Done`.
    pub fn is_valid_transition(from: PickPlacePhase, to: PickPlacePhase) -> bool {
        use PickPlacePhase::*;
        to == Done
            || from.next() == to && from != Done
            || from == Done && matches!(to, Approach | Home)
    }
}

/// Advances one phase when its completion predicate holds.
///
/// Motion phases complete on `arm_at_target`, `Grasp` on `grasp_confirmed`.
/// `Release` completes unconditionally: callers invoke it once the dwell has
/// elapsed.
pub fn pick_place_advance(
    phase: PickPlacePhase,
    arm_at_target: bool,
    grasp_confirmed: bool,
) -> PickPlacePhase {
    use PickPlacePhase::*;
    let complete = match phase {
        Approach | Descend | Ascend | Transit | Home => arm_at_target,
        Grasp => grasp_confirmed,
        Release => true,
        Done => false,
    };
    if complete {
        phase.next()
    } else {
        phase
    }
}
