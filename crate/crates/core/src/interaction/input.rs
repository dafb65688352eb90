//! Tracked-input records that drive the reducer.

use serde::{Deserialize, Serialize};

use crate::geom::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hand {
    Dominant,
    NonDominant,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Dominant, Hand::NonDominant];

    pub fn other(self) -> Hand {
        match self {
            Hand::Dominant => Hand::NonDominant,
            Hand::NonDominant => Hand::Dominant,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Hand::Dominant => 0,
            Hand::NonDominant => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ButtonEdge {
    #[default]
    None,
    Pressed,
    Released,
}

/// One controller as seen in one input frame. `grab_active` and
/// `trigger_active` are levels; the menu button is reported as an edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub hand: Hand,
    pub pose: Pose,
    #[serde(default)]
    pub grab_active: bool,
    #[serde(default)]
    pub trigger_active: bool,
    #[serde(default)]
    pub menu_button_edge: ButtonEdge,
}

impl HandState {
    pub fn idle(hand: Hand, pose: Pose) -> Self {
        Self {
            hand,
            pose,
            grab_active: false,
            trigger_active: false,
            menu_button_edge: ButtonEdge::None,
        }
    }
}

/// Both hands, dominant first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[HandState; 2]", into = "[HandState; 2]")]
pub struct Hands {
    pub dominant: HandState,
    pub non_dominant: HandState,
}

impl TryFrom<[HandState; 2]> for Hands {
    type Error = String;

    fn try_from([dominant, non_dominant]: [HandState; 2]) -> Result<Self, Self::Error> {
        if dominant.hand != Hand::Dominant || non_dominant.hand != Hand::NonDominant {
            return Err("hands must be listed as [dominant, non_dominant]".into());
        }
        Ok(Self {
            dominant,
            non_dominant,
        })
    }
}

impl From<Hands> for [HandState; 2] {
    fn from(h: Hands) -> Self {
        [h.dominant, h.non_dominant]
    }
}

impl Default for Hands {
    fn default() -> Self {
        Self {
            dominant: HandState::idle(Hand::Dominant, Pose::identity()),
            non_dominant: HandState::idle(Hand::NonDominant, Pose::identity()),
        }
    }
}

impl Hands {
    pub fn get(&self, hand: Hand) -> &HandState {
        match hand {
            Hand::Dominant => &self.dominant,
            Hand::NonDominant => &self.non_dominant,
        }
    }

    pub fn get_mut(&mut self, hand: Hand) -> &mut HandState {
        match hand {
            Hand::Dominant => &mut self.dominant,
            Hand::NonDominant => &mut self.non_dominant,
        }
    }
}

/// One input frame: head pose and both hands at `timestamp` milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    pub timestamp: u64,
    pub head: Pose,
    pub hands: Hands,
}

impl InputEvent {
    pub fn hand(&self, hand: Hand) -> &HandState {
        self.hands.get(hand)
    }

    pub fn is_finite(&self) -> bool {
        self.head.is_finite()
            && self.hands.dominant.pose.is_finite()
            && self.hands.non_dominant.pose.is_finite()
    }
}

/// Rising/falling edges derived from the previous frame's levels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Edges {
    pub grab_pressed: [bool; 2],
    pub grab_released: [bool; 2],
    pub trigger_pressed: [bool; 2],
    pub menu_pressed: [bool; 2],
}

impl Edges {
    pub fn between(prev: &Hands, event: &InputEvent) -> Self {
        let mut e = Edges::default();
        for h in Hand::BOTH {
            let (p, c) = (prev.get(h), event.hand(h));
            let i = h.index();
            e.grab_pressed[i] = c.grab_active && !p.grab_active;
            e.grab_released[i] = !c.grab_active && p.grab_active;
            e.trigger_pressed[i] = c.trigger_active && !p.trigger_active;
            e.menu_pressed[i] = c.menu_button_edge == ButtonEdge::Pressed;
        }
        e
    }

    pub fn grab_pressed(&self, h: Hand) -> bool {
        self.grab_pressed[h.index()]
    }

    pub fn grab_released(&self, h: Hand) -> bool {
        self.grab_released[h.index()]
    }

    pub fn trigger_pressed(&self, h: Hand) -> bool {
        self.trigger_pressed[h.index()]
    }

    pub fn menu_pressed(&self, h: Hand) -> bool {
        self.menu_pressed[h.index()]
    }
}
