//! Launch cost from first principles: the delta-v needed to reach a circular
//! orbit from a rotating earth, the inclination that launch actually achieves,
//! and the single-impulse plane change that corrects it.
//!
//! Gravity and drag losses, staging and launch windows are not modelled.
//! Angles cross the API in degrees and are converted to radians here only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{normalize_azimuth, EARTH_RADIUS_KM};
use crate::scalar::Real;

pub const DEFAULT_MU_KM3_S2: f64 = 398_600.441_8;
pub const DEFAULT_OMEGA_RAD_S: f64 = 7.292_115_9e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AstroError {
    #[error("orbit radius {0} km must be positive")]
    Radius(f64),
    #[error("earth constant {name} = {value} must be positive")]
    Constant { name: &'static str, value: f64 },
    #[error("site latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("orbit at {radius_km} km is slower than the launch site's rotation speed")]
    Unreachable { radius_km: f64 },
}

/// Gravitational parameter (km³/s²), radius (km) and rotation rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthConstants<T> {
    pub mu: T,
    pub radius_km: T,
    pub omega: T,
}

impl<T: Real> Default for EarthConstants<T> {
    fn default() -> Self {
        Self {
            mu: T::lit(DEFAULT_MU_KM3_S2),
            radius_km: T::lit(EARTH_RADIUS_KM),
            omega: T::lit(DEFAULT_OMEGA_RAD_S),
        }
    }
}

impl<T: Real> EarthConstants<T> {
    pub fn new(mu: T, radius_km: T, omega: T) -> Result<Self, AstroError> {
        for (name, value) in [("mu", mu), ("radius_km", radius_km), ("omega", omega)] {
            if !(value > T::zero() && value.is_finite()) {
                return Err(AstroError::Constant {
                    name,
                    value: value.as_f64(),
                });
            }
        }
        Ok(Self { mu, radius_km, omega })
    }

    /// Eastward speed of the equator, ωR, in km/s.
    pub fn equatorial_speed(&self) -> T {
        self.omega * self.radius_km
    }
}

/// Launch site latitude and initial launch azimuth (clockwise from north).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaunchGeometry<T> {
    pub site_latitude: T,
    pub azimuth: T,
}

impl<T: Real> LaunchGeometry<T> {
    pub fn new(site_latitude: T, azimuth: T) -> Result<Self, AstroError> {
        if !(site_latitude.abs() <= T::lit(90.0)) {
            return Err(AstroError::Latitude(site_latitude.as_f64()));
        }
        Ok(Self {
            site_latitude,
            azimuth: normalize_azimuth(azimuth),
        })
    }
}

/// Circular target orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetOrbit<T> {
    pub radius_km: T,
    pub inclination_deg: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionResult<T> {
    pub dv1: T,
    pub achieved_azimuth: T,
    pub achieved_inclination: T,
    pub dv2: T,
    pub total: T,
}

/// √(μ/r).
pub fn circular_orbit_speed<T: Real>(radius_km: T, consts: &EarthConstants<T>) -> Result<T, AstroError> {
    if !(radius_km > T::zero()) {
        return Err(AstroError::Radius(radius_km.as_f64()));
    }
    Ok((consts.mu / radius_km).sqrt())
}

/// Δv₁ = −ωR sinψ cosφ + √(μ/r − ω²R² cos²φ), the positive root of the
/// speed-matching quadratic.
pub fn launch_dv<T: Real>(
    geom: &LaunchGeometry<T>,
    radius_km: T,
    consts: &EarthConstants<T>,
) -> Result<T, AstroError> {
    if !(radius_km > T::zero()) {
        return Err(AstroError::Radius(radius_km.as_f64()));
    }
    let rot = consts.equatorial_speed() * geom.site_latitude.to_radians().cos();
    let disc = consts.mu / radius_km - rot * rot;
    if !(disc > T::zero()) {
        return Err(AstroError::Unreachable {
            radius_km: radius_km.as_f64(),
        });
    }
    Ok(-rot * geom.azimuth.to_radians().sin() + disc.sqrt())
}

/// Azimuth of the inertial velocity after launch, in [0, 360). Uses the
/// two-argument arctangent so the quadrant is preserved.
pub fn achieved_azimuth<T: Real>(geom: &LaunchGeometry<T>, dv1: T, consts: &EarthConstants<T>) -> T {
    let psi = geom.azimuth.to_radians();
    let rot = consts.equatorial_speed() * geom.site_latitude.to_radians().cos();
    let east = dv1 * psi.sin() + rot;
    let north = dv1 * psi.cos();
    normalize_azimuth(east.atan2(north).to_degrees())
}

/// arccos(cosφ sinψ_l), degrees in [0, 180].
pub fn achieved_inclination<T: Real>(site_latitude: T, achieved_azimuth: T) -> T {
    let c = site_latitude.to_radians().cos() * achieved_azimuth.to_radians().sin();
    c.max(-T::one()).min(T::one()).acos().to_degrees()
}

/// 2 v_o sin(|Δi|/2), the single-impulse plane change at orbit radius.
pub fn plane_change_dv<T: Real>(
    achieved_inclination: T,
    target_inclination: T,
    radius_km: T,
    consts: &EarthConstants<T>,
) -> Result<T, AstroError> {
    let vo = circular_orbit_speed(radius_km, consts)?;
    let half = (achieved_inclination - target_inclination).abs().to_radians() / T::lit(2.0);
    Ok(T::lit(2.0) * vo * half.sin())
}

/// Total cost of inserting into `orbit` from `geom`: Δv₁ + Δv₂.
pub fn insertion_cost<T: Real>(
    geom: &LaunchGeometry<T>,
    orbit: &TargetOrbit<T>,
    consts: &EarthConstants<T>,
) -> Result<InsertionResult<T>, AstroError> {
    let dv1 = launch_dv(geom, orbit.radius_km, consts)?;
    let psi_l = achieved_azimuth(geom, dv1, consts);
    let inc_l = achieved_inclination(geom.site_latitude, psi_l);
    let dv2 = plane_change_dv(inc_l, orbit.inclination_deg, orbit.radius_km, consts)?;
    Ok(InsertionResult {
        dv1,
        achieved_azimuth: psi_l,
        achieved_inclination: inc_l,
        dv2,
        total: dv1 + dv2,
    })
}

/// Candidate azimuth with the smallest total Δv. Ties keep the earliest
/// candidate. `None` when no candidate is given or none is reachable.
pub fn cheapest_azimuth<T: Real>(
    site_latitude: T,
    candidates: &[T],
    orbit: &TargetOrbit<T>,
    consts: &EarthConstants<T>,
) -> Option<(T, InsertionResult<T>)> {
    let mut best: Option<(T, InsertionResult<T>)> = None;
    for &az in candidates {
        let Ok(geom) = LaunchGeometry::new(site_latitude, az) else {
            continue;
        };
        let Ok(cost) = insertion_cost(&geom, orbit, consts) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| cost.total < b.total) {
            best = Some((az, cost));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn consts() -> EarthConstants<f64> {
        EarthConstants::default()
    }

    fn geom(lat: f64, az: f64) -> LaunchGeometry<f64> {
        LaunchGeometry::new(lat, az).unwrap()
    }

    #[test]
    fn constants_must_be_positive() {
        assert!(EarthConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(EarthConstants::new(1.0, 1.0, -1.0).is_err());
        assert!(EarthConstants::new(1.0, 2.0, 3.0).is_ok());
        assert!(LaunchGeometry::new(91.0, 0.0).is_err());
    }

    #[test]
    fn circular_speed_examples() {
        let c = consts();
        let r = c.mu;
        let v = circular_orbit_speed(r, &c).unwrap();
        assert!((v * v * r - c.mu).abs() <= 1e-9 * c.mu);
        let v1 = circular_orbit_speed(6694.72, &c).unwrap();
        assert!((v1 - 7.7162).abs() < 1e-4, "{v1}");
        assert!(circular_orbit_speed(7187.32, &c).unwrap() < circular_orbit_speed(6893.20, &c).unwrap());
        assert_eq!(circular_orbit_speed(0.0, &c), Err(AstroError::Radius(0.0)));
    }

    #[test]
    fn launch_dv_examples() {
        let c = consts();
        let east = launch_dv(&geom(0.0, 90.0), 6694.72, &c).unwrap();
        assert!((east - 7.2371).abs() < 1e-4, "{east}");
        let west = launch_dv(&geom(0.0, 270.0), 6694.72, &c).unwrap();
        let gap = 2.0 * c.equatorial_speed();
        assert!(((west - east) - gap).abs() <= 1e-12 * gap);
        let pole = launch_dv(&geom(90.0, 37.0), 6694.72, &c).unwrap();
        assert!((pole - circular_orbit_speed(6694.72, &c).unwrap()).abs() < 1e-12);
        // An orbit slower than the ground: huge radius with fast spin.
        let spinning = EarthConstants::new(c.mu, c.radius_km, 1e-2).unwrap();
        assert!(matches!(
            launch_dv(&geom(0.0, 90.0), 6694.72, &spinning),
            Err(AstroError::Unreachable { .. })
        ));
    }

    #[test]
    fn achieved_azimuth_examples() {
        let c = consts();
        let g = geom(0.0, 90.0);
        let dv = launch_dv(&g, 6694.72, &c).unwrap();
        assert!((achieved_azimuth(&g, dv, &c) - 90.0).abs() < 1e-12);

        let g = geom(0.0, 0.0);
        let dv = launch_dv(&g, 6694.72, &c).unwrap();
        // Independent closed form: Δv₁ = √(μ/r − ω²R²), ψ_l = atan(ωR/Δv₁).
        let wr: f64 = 7.2921159e-5 * 6378.137;
        let expect_dv = (398600.4418f64 / 6694.72 - wr * wr).sqrt();
        assert!((dv - expect_dv).abs() < 1e-12);
        assert!((dv - 7.7022).abs() < 1e-4);
        let psi_l = achieved_azimuth(&g, dv, &c);
        assert!((psi_l - (wr / expect_dv).atan().to_degrees()).abs() < 1e-10);
        assert!((psi_l - 3.4557).abs() < 1e-3, "{psi_l}");

        let g = geom(0.0, 180.0);
        let dv = launch_dv(&g, 6694.72, &c).unwrap();
        let psi_l = achieved_azimuth(&g, dv, &c);
        assert!(psi_l < 180.0 && psi_l > 170.0);
    }

    #[test]
    fn inclination_examples() {
        assert!(achieved_inclination(0.0f64, 90.0).abs() < 1e-12);
        assert!((achieved_inclination(0.0f64, 0.0) - 90.0).abs() < 1e-12);
        assert!((achieved_inclination(0.0f64, 270.0) - 180.0).abs() < 1e-12);
    }

    #[test]
    fn plane_change_examples() {
        let c = consts();
        assert_eq!(plane_change_dv(42.0, 42.0, 7000.0, &c).unwrap(), 0.0);
        let vo = circular_orbit_speed(7000.0, &c).unwrap();
        assert!((plane_change_dv(0.0, 180.0, 7000.0, &c).unwrap() - 2.0 * vo).abs() < 1e-12);
        let dv2 = plane_change_dv(90.0, 97.78, 7187.32, &c).unwrap();
        assert!((dv2 - 1.011).abs() < 1e-3, "{dv2}");
        assert!((circular_orbit_speed(7187.32, &c).unwrap() - 7.4471).abs() < 1e-4);
    }

    #[test]
    fn insertion_equatorial_due_east() {
        let c = consts();
        let orbit = TargetOrbit {
            radius_km: 6694.72,
            inclination_deg: 0.0,
        };
        let res = insertion_cost(&geom(0.0, 90.0), &orbit, &c).unwrap();
        assert!(res.dv2.abs() < 1e-12);
        assert_eq!(res.total, res.dv1 + res.dv2);
    }

    #[test]
    fn scan_minimum_sits_where_inclination_matches() {
        let c = consts();
        let orbit = TargetOrbit {
            radius_km: 6694.72,
            inclination_deg: 54.34,
        };
        let lat = 28.5;
        let grid: Vec<f64> = (0..3600).map(|k| k as f64 * 0.1).collect();
        let (best, res) = cheapest_azimuth(lat, &grid, &orbit, &c).unwrap();
        // On a 0.1 deg grid the achieved inclination is within one step's
        // worth of inclination change of the target.
        assert!((res.achieved_inclination - orbit.inclination_deg).abs() < 0.1, "{best} {res:?}");
    }

    #[test]
    fn cheapest_azimuth_handles_empty_and_ties() {
        let c = consts();
        let orbit = TargetOrbit {
            radius_km: 7000.0,
            inclination_deg: 60.0,
        };
        assert!(cheapest_azimuth(10.0, &[], &orbit, &c).is_none());
        // ψ and 180 − ψ are exact ties; the earlier candidate wins.
        let (az, _) = cheapest_azimuth(10.0, &[40.0, 140.0], &orbit, &c).unwrap();
        assert_eq!(az, 40.0);
    }

    proptest! {
        #[test]
        fn inclination_bounded_by_latitude(lat in -89.9f64..89.9, az in 0.0f64..360.0, r in 6600.0f64..42000.0) {
            let c = consts();
            let g = geom(lat, az);
            let dv = launch_dv(&g, r, &c).unwrap();
            let inc = achieved_inclination(lat, achieved_azimuth(&g, dv, &c));
            prop_assert!(inc >= lat.abs() - 1e-9);
        }

        #[test]
        fn dv1_decreases_with_eastward_component(lat in -89.0f64..89.0, a in 0.0f64..360.0, b in 0.0f64..360.0, r in 6600.0f64..42000.0) {
            let c = consts();
            let (sa, sb) = (a.to_radians().sin(), b.to_radians().sin());
            prop_assume!((sa - sb).abs() > 1e-6);
            let da = launch_dv(&geom(lat, a), r, &c).unwrap();
            let db = launch_dv(&geom(lat, b), r, &c).unwrap();
            prop_assert_eq!(sa > sb, da < db);
        }

        #[test]
        fn supplementary_azimuths_share_inclination(lat in -60.0f64..60.0, az in 0.0f64..180.0, r in 6600.0f64..8000.0, inc in 0.0f64..180.0) {
            let c = consts();
            let orbit = TargetOrbit { radius_km: r, inclination_deg: inc };
            let a = insertion_cost(&geom(lat, az), &orbit, &c).unwrap();
            let b = insertion_cost(&geom(lat, 180.0 - az), &orbit, &c).unwrap();
            prop_assert!((a.achieved_inclination - b.achieved_inclination).abs() < 1e-9);
            prop_assert!((a.total - b.total).abs() < 1e-9);
        }

        #[test]
        fn continuous_across_north(lat in -60.0f64..60.0, r in 6600.0f64..8000.0, inc in 0.0f64..180.0) {
            let c = consts();
            let orbit = TargetOrbit { radius_km: r, inclination_deg: inc };
            let lo = insertion_cost(&geom(lat, 359.999_999), &orbit, &c).unwrap();
            let hi = insertion_cost(&geom(lat, 0.0), &orbit, &c).unwrap();
            prop_assert!((lo.total - hi.total).abs() < 1e-5);
        }
    }
}
