//! Geodesy for meetup planning: location registries, great-circle distance,
//! solar-noon scheduling, latecomer windows and urban capacity estimates.
//!
//! Meetups happen at local solar noon, so a site's longitude fixes its
//! meeting time. The minimum pairwise distance between registered sites
//! bounds how quickly anyone could hop between two gatherings, which in
//! turn sets the tolerance for late claim broadcasts.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{Timestamp, MS_PER_SECOND};

/// Mean Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Ceiling on plausible travel speed between sites, km/h.
pub const MAX_TRAVEL_SPEED_KMH: f64 = 300.0;

/// Default minimum spacing between registered sites, metres.
pub const DEFAULT_MIN_SPACING_M: f64 = 10.0;

/// Seconds the Sun takes to cross one degree of longitude.
const SECONDS_PER_DEGREE: f64 = 240.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    BadLatitude(f64),
    #[error("longitude {0} outside (-180, 180]")]
    BadLongitude(f64),
    #[error("duplicate location id {0}")]
    DuplicateId(u32),
    #[error("locations {a} and {b} are {dist_m:.2} m apart, below the {min_m:.2} m minimum")]
    TooClose { a: u32, b: u32, dist_m: f64, min_m: f64 },
    #[error("location set is empty")]
    EmptySet,
    #[error("location set has a single site; pairwise distance undefined")]
    SingletonSet,
    #[error("location {0} not in set")]
    NotInSet(u32),
    #[error("malformed location file: {0}")]
    BadFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: u32,
    pub lat: f64,
    pub lon: f64,
}

impl Location {
    pub fn new(id: u32, lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) || lat.is_nan() {
            return Err(GeoError::BadLatitude(lat));
        }
        if !(lon > -180.0 && lon <= 180.0) {
            return Err(GeoError::BadLongitude(lon));
        }
        Ok(Location { id, lat, lon })
    }
}

/// Great-circle distance between two sites, km.
pub fn distance_km(a: &Location, b: &Location) -> f64 {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let d_lat = (b.lat - a.lat).to_radians();
    let d_lon = (b.lon - a.lon).to_radians();
    let h = (d_lat / 2.0).sin().powi(2) + lat_a.cos() * lat_b.cos() * (d_lon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().asin()
}

/// Local solar noon at `lon` on `date`: 12:00 UTC shifted four minutes per
/// degree, west of Greenwich being later. Monotone decreasing in longitude.
pub fn solar_noon(date: chrono::NaiveDate, lon: f64) -> Timestamp {
    let offset_ms = (lon * SECONDS_PER_DEGREE * MS_PER_SECOND as f64).round() as i64;
    Timestamp::utc_noon(date).add_ms(-offset_ms)
}

/// How long after the scheduled start a claim can still plausibly come from
/// someone who was present: the time to cover `min_distance_km` at top speed.
pub fn travel_window_s(min_distance_km: f64) -> f64 {
    min_distance_km / MAX_TRAVEL_SPEED_KMH * 3600.0
}

// ---------------------------------------------------------------------------
// Location sets
// ---------------------------------------------------------------------------

/// The registered meetup sites of one currency. Construction enforces unique
/// ids and a minimum spacing so the travel window never collapses to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationSet {
    locations: Vec<Location>,
}

impl LocationSet {
    /// Validates spacing pairwise; O(n²), intended for curated site lists.
    pub fn new(locations: Vec<Location>, min_spacing_m: f64) -> Result<Self, GeoError> {
        if locations.is_empty() {
            return Err(GeoError::EmptySet);
        }
        let mut ids: Vec<u32> = locations.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(GeoError::DuplicateId(w[0]));
        }
        for (i, a) in locations.iter().enumerate() {
            for b in &locations[i + 1..] {
                let dist_m = distance_km(a, b) * 1000.0;
                if dist_m < min_spacing_m {
                    return Err(GeoError::TooClose {
                        a: a.id,
                        b: b.id,
                        dist_m,
                        min_m: min_spacing_m,
                    });
                }
            }
        }
        Ok(LocationSet { locations })
    }

    /// A rectangular grid of `count` sites around `(lat0, lon0)`, spaced
    /// `spacing_deg` apart, ids 0..count. Spacing is checked analytically
    /// (nearest neighbours sit one grid step apart), skipping the O(n²)
    /// scan — this is the constructor simulations use for large site sets.
    pub fn grid(lat0: f64, lon0: f64, count: u32, spacing_deg: f64) -> Result<Self, GeoError> {
        assert!(count > 0 && spacing_deg > 0.0);
        let cols = (count as f64).sqrt().ceil() as u32;
        let rows = count.div_ceil(cols);
        let max_lat = lat0.abs() + rows as f64 * spacing_deg;
        if max_lat > 80.0 {
            return Err(GeoError::BadLatitude(max_lat));
        }
        // Closest pair on the grid: two sites one longitude step apart on the
        // row nearest a pole.
        let step_km = spacing_deg.to_radians() * EARTH_RADIUS_KM * max_lat.to_radians().cos();
        if step_km * 1000.0 < DEFAULT_MIN_SPACING_M {
            return Err(GeoError::TooClose {
                a: 0,
                b: 1,
                dist_m: step_km * 1000.0,
                min_m: DEFAULT_MIN_SPACING_M,
            });
        }
        let mut locations = Vec::with_capacity(count as usize);
        for id in 0..count {
            let (row, col) = (id / cols, id % cols);
            locations.push(Location {
                id,
                lat: lat0 + row as f64 * spacing_deg,
                lon: lon0 + col as f64 * spacing_deg,
            });
        }
        Ok(LocationSet { locations })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn as_slice(&self) -> &[Location] {
        &self.locations
    }

    pub fn get(&self, id: u32) -> Option<&Location> {
        self.locations.iter().find(|l| l.id == id)
    }

    /// Smallest distance between any two distinct sites, km.
    pub fn min_pairwise_distance_km(&self) -> Result<f64, GeoError> {
        match self.locations.len() {
            0 => return Err(GeoError::EmptySet),
            1 => return Err(GeoError::SingletonSet),
            _ => {}
        }
        let mut min = f64::INFINITY;
        for (i, a) in self.locations.iter().enumerate() {
            for b in &self.locations[i + 1..] {
                min = min.min(distance_km(a, b));
            }
        }
        Ok(min)
    }

    /// Latecomer tolerance for this site set, seconds.
    pub fn travel_window_s(&self) -> Result<f64, GeoError> {
        Ok(travel_window_s(self.min_pairwise_distance_km()?))
    }
}

/// Loads `id,lat,lon` CSV rows. Range validation happens per row; spacing
/// policy is applied by the caller via [`LocationSet::new`].
pub fn read_locations_csv<R: Read>(reader: R) -> Result<Vec<Location>, GeoError> {
    #[derive(Deserialize)]
    struct Row {
        id: u32,
        lat: f64,
        lon: f64,
    }
    let mut out = Vec::new();
    let mut rdr = csv::Reader::from_reader(reader);
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| GeoError::BadFile(e.to_string()))?;
        out.push(Location::new(row.id, row.lat, row.lon)?);
    }
    Ok(out)
}

pub fn write_locations_csv<W: std::io::Write>(
    w: W,
    locations: &[Location],
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["id", "lat", "lon"])?;
    for l in locations {
        wtr.write_record([l.id.to_string(), l.lat.to_string(), l.lon.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Urban capacity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UrbanCapacity {
    /// Simultaneous meetups needed per km² if everyone attends.
    pub meetups_per_km2: f64,
    /// Ground area available to each meetup, m².
    pub area_per_meetup_m2: f64,
    /// Side of the square grid cell each meetup occupies, m.
    pub grid_pitch_m: f64,
}

/// How densely meetups of `meetup_size` must pack to cover a population of
/// the given density, all meeting at the same instant.
pub fn urban_capacity(pop_density_per_km2: f64, meetup_size: u32) -> UrbanCapacity {
    assert!(pop_density_per_km2 > 0.0 && meetup_size > 0);
    let meetups_per_km2 = pop_density_per_km2 / meetup_size as f64;
    let area_per_meetup_m2 = 1.0e6 / meetups_per_km2;
    UrbanCapacity {
        meetups_per_km2,
        area_per_meetup_m2,
        grid_pitch_m: area_per_meetup_m2.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loc(id: u32, lat: f64, lon: f64) -> Location {
        Location::new(id, lat, lon).unwrap()
    }

    #[test]
    fn distance_one_degree_of_longitude_at_equator() {
        let d = distance_km(&loc(0, 0.0, 0.0), &loc(1, 0.0, 1.0));
        assert!((d - 111.19492664455873).abs() < 1e-9, "{d}");
    }

    #[test]
    fn distance_across_antimeridian_is_short() {
        let d = distance_km(&loc(0, 0.0, 179.9), &loc(1, 0.0, -179.9));
        assert!((d - 22.238985328911923).abs() < 1e-9, "{d}");
    }

    #[test]
    fn distance_pole_to_pole_is_half_circumference() {
        let d = distance_km(&loc(0, 90.0, 0.0), &loc(1, -90.0, 0.0));
        assert!((d - 20015.086796020572).abs() < 1e-6, "{d}");
    }

    #[test]
    fn location_range_validation() {
        assert_eq!(Location::new(0, 90.5, 0.0), Err(GeoError::BadLatitude(90.5)));
        assert_eq!(Location::new(0, 0.0, -180.0), Err(GeoError::BadLongitude(-180.0)));
        assert_eq!(Location::new(0, 0.0, 180.1), Err(GeoError::BadLongitude(180.1)));
        assert!(Location::new(0, 0.0, 180.0).is_ok());
        assert!(Location::new(0, -90.0, -179.9).is_ok());
    }

    #[test]
    fn solar_noon_offsets() {
        let date = "2026-01-01".parse().unwrap();
        let greenwich = solar_noon(date, 0.0);
        assert_eq!(greenwich, Timestamp::utc_noon(date));
        // 15°E: the Sun crosses an hour earlier.
        assert_eq!(solar_noon(date, 15.0), greenwich.add_hours(-1));
        // 7.5°W: half an hour later, 12:30 UTC.
        assert_eq!(solar_noon(date, -7.5).ms() - greenwich.ms(), 30 * 60 * 1000);
    }

    #[test]
    fn travel_windows() {
        assert!((travel_window_s(5.0) - 60.0).abs() < 1e-12);
        assert!((travel_window_s(0.015) - 0.18).abs() < 1e-12);
    }

    #[test]
    fn set_rejects_crowded_sites() {
        let a = loc(0, 0.0, 0.0);
        let b = loc(1, 0.0, 0.00005); // ~5.6 m apart
        match LocationSet::new(vec![a, b], DEFAULT_MIN_SPACING_M) {
            Err(GeoError::TooClose { a: 0, b: 1, .. }) => {}
            other => panic!("expected TooClose, got {other:?}"),
        }
        // 0.0001° ≈ 11 m clears the default floor.
        let c = loc(1, 0.0, 0.0001);
        assert!(LocationSet::new(vec![a, c], DEFAULT_MIN_SPACING_M).is_ok());
    }

    #[test]
    fn set_rejects_duplicates_and_degenerates() {
        assert_eq!(
            LocationSet::new(vec![loc(7, 0.0, 0.0), loc(7, 1.0, 1.0)], 10.0),
            Err(GeoError::DuplicateId(7))
        );
        assert_eq!(LocationSet::new(vec![], 10.0), Err(GeoError::EmptySet));
        let single = LocationSet::new(vec![loc(0, 0.0, 0.0)], 10.0).unwrap();
        assert_eq!(single.min_pairwise_distance_km(), Err(GeoError::SingletonSet));
    }

    #[test]
    fn min_pairwise_and_window() {
        // Roughly 1.11 km, 2.22 km and 3.33 km apart along the equator.
        let set = LocationSet::new(
            vec![loc(0, 0.0, 0.0), loc(1, 0.0, 0.01), loc(2, 0.0, 0.03)],
            DEFAULT_MIN_SPACING_M,
        )
        .unwrap();
        let min = set.min_pairwise_distance_km().unwrap();
        assert!((min - 1.1119492664455874).abs() < 1e-9, "{min}");
        let window = set.travel_window_s().unwrap();
        assert!((window - min / 300.0 * 3600.0).abs() < 1e-12);
        assert!(window > 13.0 && window < 14.0);
    }

    #[test]
    fn grid_constructor_produces_spaced_sites() {
        let set = LocationSet::grid(47.0, 8.0, 900, 0.01).unwrap();
        assert_eq!(set.len(), 900);
        assert_eq!(set.get(0).unwrap().lat, 47.0);
        // ids unique and dense
        let mut ids: Vec<u32> = set.as_slice().iter().map(|l| l.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..900).collect::<Vec<_>>());
        // neighbours on the same row are one step apart
        let d = distance_km(set.get(0).unwrap(), set.get(1).unwrap());
        assert!(d > 0.7 && d < 1.2, "{d}");
        // grids running into polar latitudes are refused
        assert!(LocationSet::grid(79.0, 0.0, 10_000, 0.05).is_err());
    }

    #[test]
    fn metropolis_capacity() {
        let cap = urban_capacity(43_000.0, 10);
        assert!((cap.meetups_per_km2 - 4300.0).abs() < 1e-9);
        assert!((cap.area_per_meetup_m2 - 232.5581395348837).abs() < 1e-9);
        assert!((cap.grid_pitch_m - 15.249857033260467).abs() < 1e-9);

        let sparse = urban_capacity(100.0, 10);
        assert!((sparse.meetups_per_km2 - 10.0).abs() < 1e-12);
        assert!((sparse.area_per_meetup_m2 - 100_000.0).abs() < 1e-9);
        assert!((sparse.grid_pitch_m - 316.22776601683796).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let locations = vec![loc(0, 47.37, 8.54), loc(1, 47.38, 8.55)];
        let mut buf = Vec::new();
        write_locations_csv(&mut buf, &locations).unwrap();
        let back = read_locations_csv(buf.as_slice()).unwrap();
        assert_eq!(back, locations);
    }

    #[test]
    fn csv_rejects_out_of_range_rows() {
        let data = "id,lat,lon\n0,91.0,0.0\n";
        assert!(matches!(
            read_locations_csv(data.as_bytes()),
            Err(GeoError::BadLatitude(_))
        ));
        let garbage = "id,lat,lon\n0,abc,0.0\n";
        assert!(matches!(
            read_locations_csv(garbage.as_bytes()),
            Err(GeoError::BadFile(_))
        ));
    }

    proptest! {
        #[test]
        fn distance_is_symmetric_and_nonnegative(
            lat1 in -90.0f64..90.0, lon1 in -179.9f64..180.0,
            lat2 in -90.0f64..90.0, lon2 in -179.9f64..180.0,
        ) {
            let a = loc(0, lat1, lon1);
            let b = loc(1, lat2, lon2);
            let ab = distance_km(&a, &b);
            let ba = distance_km(&b, &a);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(ab <= 20_015.1); // never exceeds half circumference
        }

        #[test]
        fn solar_noon_decreases_with_longitude(
            lon1 in -179.9f64..180.0, lon2 in -179.9f64..180.0,
        ) {
            prop_assume!(lon1 < lon2);
            let date = "2026-06-01".parse().unwrap();
            prop_assert!(solar_noon(date, lon1) >= solar_noon(date, lon2));
        }

        #[test]
        fn travel_window_positive_for_valid_sets(step in 0.0001f64..0.5, n in 2u32..20) {
            let set = LocationSet::grid(10.0, 10.0, n, step);
            prop_assume!(set.is_ok());
            prop_assert!(set.unwrap().travel_window_s().unwrap() > 0.0);
        }
    }
}
