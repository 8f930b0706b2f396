//! Terminal to serving-satellite assignment.

use serde::{Deserialize, Serialize};

use super::{MembershipError, Terminal};
use crate::geogrid::GeoPoint;
use crate::orbit::{covers, slant_range_km, SatId, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentPolicy {
    /// Shortest slant range among satellites above the elevation mask.
    #[default]
    Nearest,
}

/// Serving satellite for `terminal` at its position at the snapshot time.
/// Ties go to the lowest [`SatId`].
pub fn assign_serving_satellite(
    terminal: &Terminal,
    snapshot: &Snapshot,
    mask_deg: f64,
    policy: AssignmentPolicy,
) -> Result<SatId, MembershipError> {
    let p = terminal.location_at(snapshot.time_s());
    nearest_covering(&p, snapshot, mask_deg, policy).ok_or(MembershipError::NoCoverage(terminal.id))
}

/// Covering satellite chosen by `policy` for a bare location.
pub fn nearest_covering(
    p: &GeoPoint,
    snapshot: &Snapshot,
    mask_deg: f64,
    policy: AssignmentPolicy,
) -> Option<SatId> {
    match policy {
        AssignmentPolicy::Nearest => {
            let mut best: Option<(f64, SatId)> = None;
            for s in snapshot.sats() {
                if !covers(s, p, mask_deg) {
                    continue;
                }
                let d = slant_range_km(s, p);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, s.id));
                }
            }
            best.map(|(_, id)| id)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sat(plane: u16) -> SatId {
        SatId::new(0, plane, 0)
    }

    #[test]
    fn directly_below() {
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        let snap = Snapshot::from_parts(
            0.0,
            vec![
                (sat(0), p, 550.0),
                (sat(1), GeoPoint::new(0.0, 60.0).unwrap(), 550.0),
            ],
            &[],
        )
        .unwrap();
        let t = Terminal::fixed(1, p);
        assert_eq!(assign_serving_satellite(&t, &snap, 25.0, AssignmentPolicy::Nearest).unwrap(), sat(0));
    }

    #[test]
    fn equidistant_prefers_lower_id() {
        let snap = Snapshot::from_parts(
            0.0,
            vec![
                (sat(5), GeoPoint::new(0.0, 3.0).unwrap(), 550.0),
                (sat(2), GeoPoint::new(0.0, -3.0).unwrap(), 550.0),
            ],
            &[],
        )
        .unwrap();
        let t = Terminal::fixed(1, GeoPoint::new(0.0, 0.0).unwrap());
        assert_eq!(assign_serving_satellite(&t, &snap, 25.0, AssignmentPolicy::Nearest).unwrap(), sat(2));
    }

    #[test]
    fn no_coverage() {
        let snap =
            Snapshot::from_parts(0.0, vec![(sat(0), GeoPoint::new(0.0, 90.0).unwrap(), 550.0)], &[])
                .unwrap();
        let t = Terminal::fixed(3, GeoPoint::new(0.0, 0.0).unwrap());
        assert!(matches!(
            assign_serving_satellite(&t, &snap, 25.0, AssignmentPolicy::Nearest),
            Err(MembershipError::NoCoverage(_))
        ));
    }
}
