//! Choi operators of channels, combs and sensors, and their link product.

mod choi;
mod family;
mod ports;
mod sensor;
mod validate;

pub use choi::{choi_of_kraus, link_operators, link_product, state_choi, ChoiOperator};
pub use family::{CombFamily, LinkedComb, PhaseDilation, StinespringComb, FD_STEP};
pub use ports::{Port, PortSpec, Role};
pub use sensor::{
    compose_sensor, compose_sensor_derivative, random_sensor, sensor_ports, wire_through_sensor,
    SensorComb, REFERENCE_LABEL,
};
pub use validate::{validate_comb, PhaseResidual, ValidationReport};
