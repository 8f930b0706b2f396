//! Terminals, synthetic terminal generators and CSV ingestion.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::MembershipError;
use crate::geogrid::{GeoPoint, EARTH_RADIUS_KM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TerminalId(pub u64);

impl fmt::Display for TerminalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A ground or airborne user terminal. A trajectory, when present, is a
/// time-ordered list of samples and the terminal holds each sample until the
/// next one.
#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub id: TerminalId,
    pub location: GeoPoint,
    pub trajectory: Vec<(f64, GeoPoint)>,
}

impl Terminal {
    pub fn fixed(id: u64, location: GeoPoint) -> Self {
        Self {
            id: TerminalId(id),
            location,
            trajectory: Vec::new(),
        }
    }

    pub fn location_at(&self, t: f64) -> GeoPoint {
        match self.trajectory.iter().rev().find(|(ts, _)| *ts <= t) {
            Some((_, p)) => *p,
            None => self.trajectory.first().map_or(self.location, |(_, p)| *p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub lat: f64,
    pub lon: f64,
    pub sigma_km: f64,
}

/// Seeded synthetic terminal populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TerminalGenerator {
    /// Uniform over the sphere.
    UniformSphere { count: usize },
    /// A band of half-width `width_km / 2` around the great circle between
    /// two endpoints, like a flight route.
    Corridor {
        count: usize,
        from: [f64; 2],
        to: [f64; 2],
        width_km: f64,
    },
    /// Gaussian blobs; terminals are dealt round-robin across clusters.
    Clustered { count: usize, clusters: Vec<Cluster> },
}

impl TerminalGenerator {
    pub fn count(&self) -> usize {
        match self {
            Self::UniformSphere { count }
            | Self::Corridor { count, .. }
            | Self::Clustered { count, .. } => *count,
        }
    }

    /// Parameter problems, empty when the generator is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let point_ok = |lat: f64, lon: f64| GeoPoint::new(lat, lon).is_ok() && lon.is_finite();
        match self {
            Self::UniformSphere { .. } => {}
            Self::Corridor {
                from, to, width_km, ..
            } => {
                if !point_ok(from[0], from[1]) || !point_ok(to[0], to[1]) {
                    out.push("corridor endpoints must be valid lat/lon".into());
                } else {
                    let a = GeoPoint::new(from[0], from[1]).unwrap();
                    let b = GeoPoint::new(to[0], to[1]).unwrap();
                    let ang = a.central_angle(&b);
                    if ang < 1e-9 || (std::f64::consts::PI - ang) < 1e-9 {
                        out.push("corridor endpoints must be distinct and not antipodal".into());
                    }
                }
                if !(*width_km >= 0.0) {
                    out.push("corridor width_km must be >= 0".into());
                }
            }
            Self::Clustered { clusters, .. } => {
                if clusters.is_empty() {
                    out.push("clustered generator needs at least one cluster".into());
                }
                for c in clusters {
                    if !point_ok(c.lat, c.lon) {
                        out.push(format!("cluster centre ({}, {}) is not a valid point", c.lat, c.lon));
                    }
                    if !(c.sigma_km >= 0.0) {
                        out.push("cluster sigma_km must be >= 0".into());
                    }
                }
            }
        }
        out
    }
}

/// Moves `p` by `dist_km` along the great circle with initial `bearing_rad`
/// (clockwise from north).
pub fn offset_point(p: &GeoPoint, bearing_rad: f64, dist_km: f64) -> GeoPoint {
    let delta = dist_km / EARTH_RADIUS_KM;
    let (lat1, lon1) = (p.lat().to_radians(), p.lon().to_radians());
    let lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * bearing_rad.cos())
        .clamp(-1.0, 1.0)
        .asin();
    let lon2 = lon1
        + (bearing_rad.sin() * delta.sin() * lat1.cos())
            .atan2(delta.cos() - lat1.sin() * lat2.sin());
    let v = [
        lat2.cos() * lon2.cos(),
        lat2.cos() * lon2.sin(),
        lat2.sin(),
    ];
    GeoPoint::from_vector(v)
}

fn slerp(a: &[f64; 3], b: &[f64; 3], f: f64) -> [f64; 3] {
    let omega = crate::geogrid::central_angle(a, b);
    let s = omega.sin();
    let wa = ((1.0 - f) * omega).sin() / s;
    let wb = (f * omega).sin() / s;
    [wa * a[0] + wb * b[0], wa * a[1] + wb * b[1], wa * a[2] + wb * b[2]]
}

/// Draws terminals with ids `0..count`.
pub fn generate_terminals<R: Rng>(
    generator: &TerminalGenerator,
    rng: &mut R,
) -> Result<Vec<Terminal>, MembershipError> {
    let problems = generator.problems();
    if !problems.is_empty() {
        return Err(MembershipError::Generator(problems.join("; ")));
    }
    let mut out = Vec::with_capacity(generator.count());
    match generator {
        TerminalGenerator::UniformSphere { count } => {
            for i in 0..*count {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let lon: f64 = rng.random_range(-180.0..180.0);
                let lat = z.asin().to_degrees();
                out.push(Terminal::fixed(i as u64, GeoPoint::new(lat, lon)?));
            }
        }
        TerminalGenerator::Corridor {
            count,
            from,
            to,
            width_km,
        } => {
            let a = GeoPoint::new(from[0], from[1])?;
            let b = GeoPoint::new(to[0], to[1])?;
            let (ua, ub) = (a.to_unit(), b.to_unit());
            for i in 0..*count {
                let f: f64 = rng.random_range(0.0..=1.0);
                let on_track = GeoPoint::from_vector(slerp(&ua, &ub, f));
                let ahead = GeoPoint::from_vector(slerp(&ua, &ub, (f + 1e-3).min(1.0)));
                let behind = GeoPoint::from_vector(slerp(&ua, &ub, (f - 1e-3).max(0.0)));
                let heading = behind.bearing_rad(&ahead);
                let side: f64 = rng.random_range(-0.5..=0.5) * width_km;
                let p = offset_point(&on_track, heading + std::f64::consts::FRAC_PI_2, side);
                out.push(Terminal::fixed(i as u64, p));
            }
        }
        TerminalGenerator::Clustered { count, clusters } => {
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            for i in 0..*count {
                let c = &clusters[i % clusters.len()];
                let centre = GeoPoint::new(c.lat, c.lon)?;
                let north = unit.sample(rng) * c.sigma_km;
                let east = unit.sample(rng) * c.sigma_km;
                let dist = north.hypot(east);
                let p = offset_point(&centre, east.atan2(north), dist);
                out.push(Terminal::fixed(i as u64, p));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Deserialize, Serialize)]
struct TerminalRow {
    terminal_id: u64,
    lat: f64,
    lon: f64,
    #[serde(default)]
    time_s: Option<f64>,
}

/// Reads `terminal_id,lat,lon[,time_s]`. Repeated ids form a trajectory;
/// output is ordered by id.
pub fn read_terminals_csv<R: Read>(reader: R) -> Result<Vec<Terminal>, MembershipError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut by_id: BTreeMap<u64, Vec<(Option<f64>, GeoPoint)>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<TerminalRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row?;
        let p = GeoPoint::new(row.lat, row.lon).map_err(|e| MembershipError::CsvRow {
            line,
            reason: e.to_string(),
        })?;
        if !row.lon.is_finite() {
            return Err(MembershipError::CsvRow {
                line,
                reason: "longitude is not finite".into(),
            });
        }
        by_id.entry(row.terminal_id).or_default().push((row.time_s, p));
    }
    let mut out = Vec::with_capacity(by_id.len());
    for (id, mut samples) in by_id {
        let timed = samples.iter().filter(|s| s.0.is_some()).count();
        if samples.len() > 1 && timed != samples.len() {
            return Err(MembershipError::CsvRow {
                line: 0,
                reason: format!("terminal {id} has several rows but not all carry time_s"),
            });
        }
        samples.sort_by(|a, b| a.0.unwrap_or(0.0).total_cmp(&b.0.unwrap_or(0.0)));
        let location = samples[0].1;
        let trajectory = if timed > 0 {
            samples.iter().map(|(t, p)| (t.unwrap_or(0.0), *p)).collect()
        } else {
            Vec::new()
        };
        out.push(Terminal {
            id: TerminalId(id),
            location,
            trajectory,
        });
    }
    Ok(out)
}

pub fn write_terminals_csv<W: Write>(writer: W, terminals: &[Terminal]) -> Result<(), MembershipError> {
    let mut w = csv::Writer::from_writer(writer);
    for t in terminals {
        if t.trajectory.is_empty() {
            w.serialize(TerminalRow {
                terminal_id: t.id.0,
                lat: t.location.lat(),
                lon: t.location.lon(),
                time_s: None,
            })?;
        }
        for (ts, p) in &t.trajectory {
            w.serialize(TerminalRow {
                terminal_id: t.id.0,
                lat: p.lat(),
                lon: p.lon(),
                time_s: Some(*ts),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn offset_point_distance() {
        let p = GeoPoint::new(40.0, -70.0).unwrap();
        for bearing in [0.0, 1.0, 2.5, 4.0] {
            let q = offset_point(&p, bearing, 321.0);
            assert!((p.distance_km(&q) - 321.0).abs() < 1e-6);
        }
        let north = offset_point(&p, 0.0, 111.0);
        assert!(north.lat() > p.lat() && (north.lon() - p.lon()).abs() < 1e-9);
    }

    #[test]
    fn generators_are_seeded() {
        let g = TerminalGenerator::Clustered {
            count: 50,
            clusters: vec![Cluster {
                lat: 10.0,
                lon: 20.0,
                sigma_km: 30.0,
            }],
        };
        let a = generate_terminals(&g, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = generate_terminals(&g, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let c = generate_terminals(&g, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_ne!(a, c);
        let centre = GeoPoint::new(10.0, 20.0).unwrap();
        assert!(a.iter().all(|t| t.location.distance_km(&centre) < 300.0));
    }

    #[test]
    fn corridor_stays_in_band() {
        let g = TerminalGenerator::Corridor {
            count: 300,
            from: [51.5, -0.1],
            to: [40.6, -73.8],
            width_km: 100.0,
        };
        let ts = generate_terminals(&g, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let a = GeoPoint::new(51.5, -0.1).unwrap().to_unit();
        let b = GeoPoint::new(40.6, -73.8).unwrap().to_unit();
        let n = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        for t in &ts {
            let u = t.location.to_unit();
            let off = ((u[0] * n[0] + u[1] * n[1] + u[2] * n[2]) / norm).asin().abs();
            assert!(off * EARTH_RADIUS_KM <= 50.0 + 1e-6);
        }
    }

    #[test]
    fn uniform_sphere_balances_hemispheres() {
        let g = TerminalGenerator::UniformSphere { count: 4000 };
        let ts = generate_terminals(&g, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let north = ts.iter().filter(|t| t.location.lat() > 0.0).count();
        assert!((1800..2200).contains(&north));
        let polar = ts.iter().filter(|t| t.location.lat().abs() > 60.0).count();
        // cap above 60 deg holds 1 - sin(60) of the sphere
        let expected = 4000.0 * (1.0 - 60f64.to_radians().sin());
        assert!((polar as f64 - expected).abs() < 0.2 * expected);
    }

    #[test]
    fn bad_generators_rejected() {
        let g = TerminalGenerator::Clustered {
            count: 1,
            clusters: vec![],
        };
        assert!(generate_terminals(&g, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let g = TerminalGenerator::Corridor {
            count: 1,
            from: [0.0, 0.0],
            to: [0.0, 0.0],
            width_km: 1.0,
        };
        assert!(!g.problems().is_empty());
    }

    #[test]
    fn csv_roundtrip_with_trajectory() {
        let text = "terminal_id,lat,lon,time_s\n2,1.0,2.0,30\n1,5.0,6.0,0\n2,1.5,2.5,0\n";
        let ts = read_terminals_csv(text.as_bytes()).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].id, TerminalId(1));
        let t2 = &ts[1];
        assert_eq!(t2.location_at(10.0).lat(), 1.5);
        assert_eq!(t2.location_at(30.0).lat(), 1.0);
        let mut buf = Vec::new();
        write_terminals_csv(&mut buf, &ts).unwrap();
        assert_eq!(read_terminals_csv(buf.as_slice()).unwrap(), ts);

        let plain = "terminal_id,lat,lon\n7,10,20\n";
        let ts = read_terminals_csv(plain.as_bytes()).unwrap();
        assert!(ts[0].trajectory.is_empty());
        assert!(read_terminals_csv("terminal_id,lat,lon\n1,91,0\n".as_bytes()).is_err());
    }
}
