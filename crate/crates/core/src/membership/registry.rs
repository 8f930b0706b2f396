//! Ingress-side membership registry.

use std::collections::{BTreeMap, BTreeSet};

use super::{MembershipError, TerminalId};
use crate::orbit::SatId;

/// Multicast group identifier; carried as 32 bits in the header.
pub type GroupId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipRecord {
    pub terminal: TerminalId,
    pub group: GroupId,
    pub serving_sat: SatId,
    pub last_refresh_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipEvent {
    Join {
        terminal: TerminalId,
        group: GroupId,
        sat: SatId,
    },
    Leave {
        terminal: TerminalId,
        group: GroupId,
    },
    Handover {
        terminal: TerminalId,
        group: GroupId,
        sat: SatId,
    },
    Refresh {
        terminal: TerminalId,
        group: GroupId,
    },
}

impl MembershipEvent {
    pub fn group(&self) -> GroupId {
        match *self {
            Self::Join { group, .. }
            | Self::Leave { group, .. }
            | Self::Handover { group, .. }
            | Self::Refresh { group, .. } => group,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    sat: SatId,
    last_refresh_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngressRegistry {
    groups: BTreeMap<GroupId, BTreeMap<TerminalId, Entry>>,
    refresh_interval_s: f64,
    timeout_s: f64,
    warnings: u64,
}

impl Default for IngressRegistry {
    fn default() -> Self {
        Self::new(30.0, 90.0)
    }
}

impl IngressRegistry {
    pub fn new(refresh_interval_s: f64, timeout_s: f64) -> Self {
        Self {
            groups: BTreeMap::new(),
            refresh_interval_s,
            timeout_s,
            warnings: 0,
        }
    }

    pub fn refresh_interval_s(&self) -> f64 {
        self.refresh_interval_s
    }

    pub fn timeout_s(&self) -> f64 {
        self.timeout_s
    }

    pub fn register_group(&mut self, group: GroupId) {
        self.groups.entry(group).or_default();
    }

    pub fn groups(&self) -> impl Iterator<Item = GroupId> + '_ {
        self.groups.keys().copied()
    }

    /// Leave/Refresh/Handover events that referenced no record.
    pub fn warnings(&self) -> u64 {
        self.warnings
    }

    pub fn process_event(&mut self, event: MembershipEvent, now: f64) -> Result<(), MembershipError> {
        let group = event.group();
        let records = self
            .groups
            .get_mut(&group)
            .ok_or(MembershipError::UnknownGroup(group))?;
        match event {
            MembershipEvent::Join { terminal, sat, .. } => {
                records.insert(
                    terminal,
                    Entry {
                        sat,
                        last_refresh_s: now,
                    },
                );
            }
            MembershipEvent::Leave { terminal, .. } => {
                if records.remove(&terminal).is_none() {
                    self.warnings += 1;
                }
            }
            MembershipEvent::Handover { terminal, sat, .. } => match records.get_mut(&terminal) {
                Some(e) => {
                    e.sat = sat;
                    e.last_refresh_s = now;
                }
                None => self.warnings += 1,
            },
            MembershipEvent::Refresh { terminal, .. } => match records.get_mut(&terminal) {
                Some(e) => e.last_refresh_s = now,
                None => self.warnings += 1,
            },
        }
        Ok(())
    }

    pub fn is_expired(&self, record: &MembershipRecord, now: f64) -> bool {
        now - record.last_refresh_s >= self.timeout_s
    }

    /// Drops expired records; returns how many were removed.
    pub fn prune(&mut self, now: f64) -> usize {
        let timeout = self.timeout_s;
        let mut removed = 0;
        for records in self.groups.values_mut() {
            let before = records.len();
            records.retain(|_, e| now - e.last_refresh_s < timeout);
            removed += before - records.len();
        }
        removed
    }

    pub fn record(&self, group: GroupId, terminal: TerminalId) -> Option<MembershipRecord> {
        self.groups.get(&group)?.get(&terminal).map(|e| MembershipRecord {
            terminal,
            group,
            serving_sat: e.sat,
            last_refresh_s: e.last_refresh_s,
        })
    }

    /// All records of a group, ascending by terminal.
    pub fn records(&self, group: GroupId) -> Vec<MembershipRecord> {
        self.groups
            .get(&group)
            .map(|m| {
                m.iter()
                    .map(|(t, e)| MembershipRecord {
                        terminal: *t,
                        group,
                        serving_sat: e.sat,
                        last_refresh_s: e.last_refresh_s,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn terminal_count(&self, group: GroupId) -> usize {
        self.groups.get(&group).map_or(0, |m| m.len())
    }

    /// Distinct serving satellites of unexpired records.
    pub fn active_destination_sats(&self, group: GroupId, now: f64) -> BTreeSet<SatId> {
        self.groups
            .get(&group)
            .map(|m| {
                m.values()
                    .filter(|e| now - e.last_refresh_s < self.timeout_s)
                    .map(|e| e.sat)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// The event a terminal should emit given its current serving satellite
    /// (`None` when uncovered). Uncovered members leave and re-join later.
    pub fn reconcile(
        &self,
        group: GroupId,
        terminal: TerminalId,
        serving: Option<SatId>,
        now: f64,
    ) -> Option<MembershipEvent> {
        let current = self.groups.get(&group).and_then(|m| m.get(&terminal));
        match (current, serving) {
            (None, None) => None,
            (None, Some(sat)) => Some(MembershipEvent::Join {
                terminal,
                group,
                sat,
            }),
            (Some(_), None) => Some(MembershipEvent::Leave { terminal, group }),
            (Some(e), Some(sat)) if e.sat != sat => Some(MembershipEvent::Handover {
                terminal,
                group,
                sat,
            }),
            (Some(e), Some(_)) if now - e.last_refresh_s >= self.refresh_interval_s => {
                Some(MembershipEvent::Refresh { terminal, group })
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: SatId = SatId {
        shell: 0,
        plane: 0,
        slot: 0,
    };
    const B: SatId = SatId {
        shell: 0,
        plane: 1,
        slot: 0,
    };

    fn join(t: u64, sat: SatId) -> MembershipEvent {
        MembershipEvent::Join {
            terminal: TerminalId(t),
            group: 1,
            sat,
        }
    }

    #[test]
    fn join_expires_after_timeout() {
        let mut reg = IngressRegistry::default();
        reg.register_group(1);
        reg.process_event(join(1, A), 0.0).unwrap();
        reg.prune(89.9);
        assert_eq!(reg.terminal_count(1), 1);
        reg.prune(90.0);
        assert_eq!(reg.terminal_count(1), 0);
    }

    #[test]
    fn handover_replaces_serving_sat() {
        let mut reg = IngressRegistry::default();
        reg.register_group(1);
        reg.process_event(join(1, A), 0.0).unwrap();
        let ev = MembershipEvent::Handover {
            terminal: TerminalId(1),
            group: 1,
            sat: B,
        };
        reg.process_event(ev, 15.0).unwrap();
        let recs = reg.records(1);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].serving_sat, B);
        assert_eq!(recs[0].last_refresh_s, 15.0);
    }

    #[test]
    fn leave_after_join_empties() {
        let mut reg = IngressRegistry::default();
        reg.register_group(1);
        reg.process_event(join(1, A), 0.0).unwrap();
        let leave = MembershipEvent::Leave {
            terminal: TerminalId(1),
            group: 1,
        };
        reg.process_event(leave, 0.0).unwrap();
        assert!(reg.records(1).is_empty());
        reg.process_event(leave, 1.0).unwrap();
        assert_eq!(reg.warnings(), 1);
    }

    #[test]
    fn unknown_group_is_an_error() {
        let mut reg = IngressRegistry::default();
        assert!(matches!(
            reg.process_event(join(1, A), 0.0),
            Err(MembershipError::UnknownGroup(1))
        ));
        assert!(reg.active_destination_sats(7, 0.0).is_empty());
    }

    #[test]
    fn destinations_dedup() {
        let mut reg = IngressRegistry::default();
        reg.register_group(1);
        assert!(reg.active_destination_sats(1, 0.0).is_empty());
        reg.process_event(join(1, A), 0.0).unwrap();
        reg.process_event(join(2, A), 0.0).unwrap();
        reg.process_event(join(3, B), 0.0).unwrap();
        assert_eq!(reg.active_destination_sats(1, 10.0).len(), 2);
        assert!(reg.active_destination_sats(1, 90.0).is_empty());
    }

    #[test]
    fn reconcile_events() {
        let mut reg = IngressRegistry::default();
        reg.register_group(1);
        let t = TerminalId(4);
        assert_eq!(reg.reconcile(1, t, None, 0.0), None);
        assert!(matches!(reg.reconcile(1, t, Some(A), 0.0), Some(MembershipEvent::Join { .. })));
        reg.process_event(join(4, A), 0.0).unwrap();
        assert_eq!(reg.reconcile(1, t, Some(A), 15.0), None);
        assert!(matches!(reg.reconcile(1, t, Some(A), 30.0), Some(MembershipEvent::Refresh { .. })));
        assert!(matches!(reg.reconcile(1, t, Some(B), 15.0), Some(MembershipEvent::Handover { .. })));
        assert!(matches!(reg.reconcile(1, t, None, 15.0), Some(MembershipEvent::Leave { .. })));
    }
}
