use num_traits::Float;

use super::GeoNode;

pub const METERS_PER_DEG_LON: f64 = 111_320.0;
pub const METERS_PER_DEG_LAT: f64 = 110_540.0;

/// Equirectangular projection distance in meters, evaluated in `F`.
pub fn equirectangular<F: Float>(lat1: F, lon1: F, lat2: F, lon2: F) -> F {
    let two = F::one() + F::one();
    let mid = ((lat1 + lat2) / two).to_radians();
    let dx = (lon2 - lon1) * mid.cos() * F::from(METERS_PER_DEG_LON).unwrap();
    let dy = (lat2 - lat1) * F::from(METERS_PER_DEG_LAT).unwrap();
    dx.hypot(dy)
}

pub fn planar_distance(a: &GeoNode, b: &GeoNode) -> f64 {
    equirectangular(a.lat, a.lon, b.lat, b.lon)
}

/// Great-circle distance on a sphere of mean Earth radius.
pub fn haversine(a: &GeoNode, b: &GeoNode) -> f64 {
    const R: f64 = 6_371_008.8;
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R * h.sqrt().asin()
}
