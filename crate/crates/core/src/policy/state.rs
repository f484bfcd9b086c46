use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentStatus {
    Active,
    /// Inactive because it was matched.
    Matched,
    /// Inactive because attenuation switched it off before it was matched.
    Muted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Match(usize),
    Reject,
}

/// One arrival and what the policy did with it. Rounds are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchEvent {
    pub round: usize,
    pub online: usize,
    pub offline: Option<usize>,
}

/// Trial-local state. Status changes only ever go from active to inactive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchState {
    status: Vec<AgentStatus>,
    events: Vec<MatchEvent>,
    round: usize,
    horizon: usize,
    active: usize,
}

impl MatchState {
    pub fn new(n_offline: usize, horizon: usize) -> Self {
        MatchState {
            status: vec![AgentStatus::Active; n_offline],
            events: Vec::with_capacity(horizon),
            round: 0,
            horizon,
            active: n_offline,
        }
    }

    /// Number of arrivals processed so far; the next arrival is round
    /// `round() + 1`.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn status(&self) -> &[AgentStatus] {
        &self.status
    }

    pub fn events(&self) -> &[MatchEvent] {
        &self.events
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.status[i] == AgentStatus::Active
    }

    pub fn is_matched(&self, i: usize) -> bool {
        self.status[i] == AgentStatus::Matched
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    pub fn matched_count(&self) -> usize {
        self.events.iter().filter(|e| e.offline.is_some()).count()
    }

    pub fn is_finished(&self) -> bool {
        self.round >= self.horizon
    }

    /// Switches an active agent off without matching it. No-op otherwise.
    pub fn mute(&mut self, i: usize) {
        if self.status[i] == AgentStatus::Active {
            self.status[i] = AgentStatus::Muted;
            self.active -= 1;
        }
    }

    /// Records the arrival of `online` and applies `decision`.
    ///
    /// # Panics
    /// When the horizon is exhausted or the decision names an inactive agent;
    /// both are policy bugs.
    pub(crate) fn record(&mut self, online: usize, decision: Decision) {
        assert!(self.round < self.horizon, "arrival after the horizon");
        self.round += 1;
        let offline = match decision {
            Decision::Match(i) => {
                assert!(self.is_active(i), "policy matched inactive agent {i}");
                self.status[i] = AgentStatus::Matched;
                self.active -= 1;
                Some(i)
            }
            Decision::Reject => None,
        };
        self.events.push(MatchEvent {
            round: self.round,
            online,
            offline,
        });
    }
}
