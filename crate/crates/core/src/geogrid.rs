//! Hierarchical spherical cell indexing.
//!
//! The hexagonal scheme follows the H3 cell model (icosahedral aperture-7
//! grid, 122 base cells, 12 pentagons per resolution) and is backed by
//! [`h3o`]. Cells are addressed by a dense index in `[0, cell_count(r))`:
//! the position of the cell in ascending H3-index order at its resolution.
//! That dense form is what goes on the wire, so a cell at resolution `r`
//! costs exactly [`bits_per_cell`] bits.
//!
//! The three comparison schemes (quad-cube, base-32 hash, lat/lon degree
//! grid) only provide cell-count arithmetic.

use std::fmt;
use std::sync::OnceLock;

use h3o::{CellIndex, LatLng, Resolution};
use thiserror::Error;

/// Mean Earth radius used everywhere in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Finest hexagonal resolution supported.
pub const MAX_HEX_RESOLUTION: u8 = 5;

const BASE_CELLS: usize = 122;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} is not finite")]
    Longitude(f64),
    #[error("resolution {resolution} out of range for {scheme}")]
    Resolution { scheme: GridScheme, resolution: u8 },
    #[error("{0} does not support point indexing or topology queries")]
    Unsupported(GridScheme),
    #[error("cell index {index} >= cell count {count} at resolution {resolution}")]
    IndexOutOfRange {
        index: u64,
        count: u64,
        resolution: u8,
    },
    #[error("target resolution {coarse} is not coarser than {fine}")]
    NotCoarser { coarse: u8, fine: u8 },
    #[error("lat/lon step {0} deg does not divide 180")]
    BadStep(u16),
    #[error("invalid H3 index {0}")]
    InvalidH3(String),
}

/// Geo-indexing scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridScheme {
    /// Hexagonal hierarchical grid (H3 model).
    HexHier,
    /// Quad-tree over the six faces of a cube (S2-like), resolution = level.
    QuadCube,
    /// Base-32 interleaved lat/lon hash (Geohash-like), resolution = characters.
    Base32Hash,
    /// Regular latitude/longitude grid with the given step in whole degrees.
    LatLonDeg { step_deg: u16 },
}

impl fmt::Display for GridScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridScheme::HexHier => write!(f, "hex-hier"),
            GridScheme::QuadCube => write!(f, "quad-cube"),
            GridScheme::Base32Hash => write!(f, "base32-hash"),
            GridScheme::LatLonDeg { step_deg } => write!(f, "latlon-{step_deg}deg"),
        }
    }
}

/// A point on the sphere in degrees.
///
/// Longitude is kept in `[-180, 180)`; latitudes outside `[-90, 90]` are
/// rejected rather than clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GridError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GridError::Latitude(lat));
        }
        if !lon.is_finite() {
            return Err(GridError::Longitude(lon));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Unit vector in an Earth-fixed frame (x through lon 0 on the equator, z north).
    pub fn to_unit(&self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    /// Inverse of [`GeoPoint::to_unit`]; the vector need not be normalised.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let lat = (v[2] / norm).clamp(-1.0, 1.0).asin().to_degrees();
        let lon = v[1].atan2(v[0]).to_degrees();
        Self {
            lat,
            lon: normalize_lon(lon),
        }
    }

    /// Central angle to `other`, radians.
    pub fn central_angle(&self, other: &GeoPoint) -> f64 {
        central_angle(&self.to_unit(), &other.to_unit())
    }

    /// Great-circle distance to `other` on the mean Earth sphere, km.
    pub fn distance_km(&self, other: &GeoPoint) -> f64 {
        self.central_angle(other) * EARTH_RADIUS_KM
    }

    /// Initial great-circle bearing toward `other`, radians clockwise from north.
    pub fn bearing_rad(&self, other: &GeoPoint) -> f64 {
        let (lat1, lat2) = (self.lat.to_radians(), other.lat.to_radians());
        let dlon = (other.lon - self.lon).to_radians();
        (dlon.sin() * lat2.cos()).atan2(lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos())
    }
}

fn normalize_lon(lon: f64) -> f64 {
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Angle between two (not necessarily unit) vectors, numerically stable near 0 and pi.
pub fn central_angle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    cross_norm.atan2(dot)
}

/// A cell of a grid scheme at a given resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    scheme: GridScheme,
    resolution: u8,
    index: u64,
}

impl CellId {
    pub fn new(scheme: GridScheme, resolution: u8, index: u64) -> Result<Self, GridError> {
        let count = cell_count(scheme, resolution)?;
        if index >= count {
            return Err(GridError::IndexOutOfRange {
                index,
                count,
                resolution,
            });
        }
        Ok(Self {
            scheme,
            resolution,
            index,
        })
    }

    /// Hexagonal cell from its dense index.
    pub fn hex(resolution: u8, index: u64) -> Result<Self, GridError> {
        Self::new(GridScheme::HexHier, resolution, index)
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// The underlying H3 cell.
    pub fn to_h3(&self) -> Result<CellIndex, GridError> {
        self.require_hex()?;
        Ok(unrank(self.resolution, self.index))
    }

    pub fn from_h3(cell: CellIndex) -> Result<Self, GridError> {
        let resolution = u8::from(cell.resolution());
        if resolution > MAX_HEX_RESOLUTION {
            return Err(GridError::Resolution {
                scheme: GridScheme::HexHier,
                resolution,
            });
        }
        Ok(Self {
            scheme: GridScheme::HexHier,
            resolution,
            index: rank(cell),
        })
    }

    /// Parses a canonical H3 hex string such as `8019fffffffffff`.
    pub fn from_h3_str(s: &str) -> Result<Self, GridError> {
        let raw = u64::from_str_radix(s.trim(), 16).map_err(|_| GridError::InvalidH3(s.into()))?;
        let cell = CellIndex::try_from(raw).map_err(|_| GridError::InvalidH3(s.into()))?;
        Self::from_h3(cell)
    }

    /// Cell centre.
    pub fn center(&self) -> Result<GeoPoint, GridError> {
        let ll = LatLng::from(self.to_h3()?);
        GeoPoint::new(ll.lat(), ll.lng())
    }

    pub fn is_pentagon(&self) -> Result<bool, GridError> {
        Ok(self.to_h3()?.is_pentagon())
    }

    fn require_hex(&self) -> Result<(), GridError> {
        match self.scheme {
            GridScheme::HexHier => Ok(()),
            other => Err(GridError::Unsupported(other)),
        }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:r{}:{}", self.scheme, self.resolution, self.index)
    }
}

fn hex_resolution(r: u8) -> Result<Resolution, GridError> {
    if r > MAX_HEX_RESOLUTION {
        return Err(GridError::Resolution {
            scheme: GridScheme::HexHier,
            resolution: r,
        });
    }
    Ok(Resolution::try_from(r).expect("0..=5 is a valid H3 resolution"))
}

/// Per resolution, the dense index of the first descendant of each base cell.
fn base_offsets() -> &'static [[u64; BASE_CELLS]; (MAX_HEX_RESOLUTION + 1) as usize] {
    static OFFSETS: OnceLock<[[u64; BASE_CELLS]; (MAX_HEX_RESOLUTION + 1) as usize]> =
        OnceLock::new();
    OFFSETS.get_or_init(|| {
        let mut table = [[0u64; BASE_CELLS]; (MAX_HEX_RESOLUTION + 1) as usize];
        for (r, row) in table.iter_mut().enumerate() {
            let res = Resolution::try_from(r as u8).expect("valid resolution");
            let mut acc = 0;
            for (slot, base) in row.iter_mut().zip(CellIndex::base_cells()) {
                *slot = acc;
                acc += base.children_count(res);
            }
        }
        table
    })
}

fn base_cell_list() -> &'static [CellIndex] {
    static BASES: OnceLock<Vec<CellIndex>> = OnceLock::new();
    BASES.get_or_init(|| CellIndex::base_cells().collect())
}

fn rank(cell: CellIndex) -> u64 {
    let r = u8::from(cell.resolution());
    let base = u8::from(cell.base_cell()) as usize;
    let within = cell
        .child_position(Resolution::Zero)
        .expect("every cell descends from a base cell");
    base_offsets()[r as usize][base] + within
}

fn unrank(r: u8, index: u64) -> CellIndex {
    let offsets = &base_offsets()[r as usize];
    let base = offsets.partition_point(|&start| start <= index) - 1;
    let res = Resolution::try_from(r).expect("validated resolution");
    base_cell_list()[base]
        .child_at(index - offsets[base], res)
        .expect("dense index below cell count")
}

/// Indexes a point into the hexagonal grid at resolution `r`.
pub fn cell_index(p: &GeoPoint, r: u8) -> Result<CellId, GridError> {
    let res = hex_resolution(r)?;
    let ll = LatLng::new(p.lat, p.lon).map_err(|_| GridError::Latitude(p.lat))?;
    Ok(CellId {
        scheme: GridScheme::HexHier,
        resolution: r,
        index: rank(ll.to_cell(res)),
    })
}

/// Distance-1 neighbours, sorted by dense index: 6 for hexagons, 5 for pentagons.
pub fn neighbors(c: &CellId) -> Result<Vec<CellId>, GridError> {
    let h = c.to_h3()?;
    let mut out: Vec<CellId> = h
        .grid_disk::<Vec<_>>(1)
        .into_iter()
        .filter(|n| *n != h)
        .map(|n| CellId::from_h3(n).expect("same resolution"))
        .collect();
    out.sort();
    Ok(out)
}

/// Ancestor of `c` at the coarser resolution `r_coarse`.
pub fn parent(c: &CellId, r_coarse: u8) -> Result<CellId, GridError> {
    let h = c.to_h3()?;
    if r_coarse >= c.resolution {
        return Err(GridError::NotCoarser {
            coarse: r_coarse,
            fine: c.resolution,
        });
    }
    let p = h
        .parent(hex_resolution(r_coarse)?)
        .expect("coarser resolution has a parent");
    CellId::from_h3(p)
}

/// Children of `c` one resolution finer: 7 for hexagons, 6 for pentagons.
pub fn children(c: &CellId) -> Result<Vec<CellId>, GridError> {
    let h = c.to_h3()?;
    let res = hex_resolution(c.resolution + 1)?;
    h.children(res).map(CellId::from_h3).collect()
}

/// All hexagonal cells at resolution `r`, in dense-index order.
pub fn all_cells(r: u8) -> Result<impl Iterator<Item = CellId>, GridError> {
    let count = cell_count(GridScheme::HexHier, r)?;
    Ok((0..count).map(move |index| CellId {
        scheme: GridScheme::HexHier,
        resolution: r,
        index,
    }))
}

/// Number of cells the scheme has at resolution `r`.
pub fn cell_count(scheme: GridScheme, r: u8) -> Result<u64, GridError> {
    let bad = || GridError::Resolution {
        scheme,
        resolution: r,
    };
    match scheme {
        GridScheme::HexHier => {
            if r > MAX_HEX_RESOLUTION {
                return Err(bad());
            }
            Ok(2 + 120 * 7u64.pow(r as u32))
        }
        GridScheme::QuadCube => {
            if r > 30 {
                return Err(bad());
            }
            Ok(6 * 4u64.pow(r as u32))
        }
        GridScheme::Base32Hash => {
            if !(1..=12).contains(&r) {
                return Err(bad());
            }
            Ok(32u64.pow(r as u32))
        }
        GridScheme::LatLonDeg { step_deg } => {
            if step_deg == 0 || 180 % step_deg != 0 {
                return Err(GridError::BadStep(step_deg));
            }
            let step = step_deg as u64;
            Ok((180 / step) * (360 / step))
        }
    }
}

/// Bits needed to name one cell: `ceil(log2(cell_count))`.
pub fn bits_per_cell(scheme: GridScheme, r: u8) -> Result<u32, GridError> {
    let count = cell_count(scheme, r)?;
    Ok(ceil_log2(count))
}

pub(crate) fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Diameter of a circle with the average cell area at resolution `r`, km.
pub fn effective_diameter_km(r: u8) -> Result<f64, GridError> {
    let cells = cell_count(GridScheme::HexHier, r)? as f64;
    let area = 4.0 * std::f64::consts::PI * EARTH_RADIUS_KM * EARTH_RADIUS_KM / cells;
    Ok(2.0 * (area / std::f64::consts::PI).sqrt())
}
