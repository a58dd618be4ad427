#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting checks are written as negated comparisons

pub mod astro;
pub mod config;
pub mod forecast;
pub mod geo;
pub mod hazard;
pub mod ingest;
pub mod missions;
pub mod plan;
pub mod scalar;
pub mod scenario;
pub mod synth;

// The numeric core is generic over the scalar; these are the f64 types the
// pipeline uses.
pub type GeoPoint = geo::GeoPoint<f64>;
pub type GeoPolygon = geo::GeoPolygon<f64>;
pub type EarthConstants = astro::EarthConstants<f64>;
pub type LaunchGeometry = astro::LaunchGeometry<f64>;
pub type TargetOrbit = astro::TargetOrbit<f64>;
pub type InsertionResult = astro::InsertionResult<f64>;
pub type HoltParams = forecast::HoltParams<f64>;
pub type HoltState = forecast::HoltState<f64>;
pub type MissionType = missions::MissionType<f64>;
pub type ClusterModel = missions::ClusterModel<f64, 2>;
pub type LinearProgram = plan::simplex::LinearProgram<f64>;
pub type LpSolution = plan::simplex::LpSolution<f64>;
