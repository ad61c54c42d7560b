//! Field-model abstraction for the trajectory and wave-packet integrators.
//!
//! `ChipFieldModel` wires the real chip magnetics together; the synthetic
//! models provide closed-form references for integrator and calibration
//! tests.

use nalgebra::{Matrix3, Vector3};

use super::{
    acceleration_of, quadratic_expansion, BiasField, FieldError, QuadraticPotential, WireGeometry,
};
use crate::phys::{Constants, Species, SpinState};

/// Anything that can supply per-state accelerations and local quadratic
/// potential data along the vertical axis.
pub trait FieldModel {
    /// Total z acceleration (gravity included) of `state` at height `z` on
    /// the symmetry axis with wire current `i`.
    fn acceleration_z(&self, state: SpinState, z: f64, i: f64) -> Result<f64, FieldError>;

    /// Quadratic expansion of the magnetic potential about `r` (gravity not
    /// included).
    fn quadratic(
        &self,
        state: SpinState,
        r: &Vector3<f64>,
        i: f64,
    ) -> Result<QuadraticPotential, FieldError>;

    /// Gravitational acceleration used by this model (m/s^2, magnitude).
    fn gravity(&self) -> f64;
}

/// The production model: three-wire chip, bias field, ambient gradient.
#[derive(Debug, Clone)]
pub struct ChipFieldModel {
    pub geometry: WireGeometry,
    pub bias: BiasField,
    pub species: Species,
    pub constants: Constants,
}

impl ChipFieldModel {
    pub fn paper_default() -> Self {
        Self {
            geometry: WireGeometry::three_wire_default(),
            bias: BiasField::paper_default(),
            species: Species::rb87(),
            constants: Constants::default(),
        }
    }
}

impl FieldModel for ChipFieldModel {
    fn acceleration_z(&self, state: SpinState, z: f64, i: f64) -> Result<f64, FieldError> {
        let r = Vector3::new(0.0, 0.0, z);
        Ok(acceleration_of(
            state,
            &r,
            i,
            &self.geometry,
            &self.bias,
            &self.species,
            &self.constants,
        )?
        .z)
    }

    fn quadratic(
        &self,
        state: SpinState,
        r: &Vector3<f64>,
        i: f64,
    ) -> Result<QuadraticPotential, FieldError> {
        quadratic_expansion(r, i, &self.geometry, &self.bias, state, &self.species)
    }

    fn gravity(&self) -> f64 {
        self.constants.g_earth
    }
}

/// Synthetic model: the sensitive state feels a homogeneous applied
/// acceleration proportional to the current, the insensitive state only
/// gravity. Closed-form reference for equal-area and calibration tests.
#[derive(Debug, Clone, Copy)]
pub struct UniformGradientField {
    /// Applied acceleration per ampere for the sensitive state (m/s^2/A).
    pub accel_per_amp: f64,
    /// Current-independent applied offset for the sensitive state (m/s^2),
    /// standing in for an ambient-gradient pull.
    pub offset: f64,
    /// Gravity magnitude (m/s^2).
    pub g: f64,
}

impl UniformGradientField {
    /// Current at which the sensitive state hovers: solves
    /// accel_per_amp * I + offset = g.
    pub fn levitation_current(&self) -> f64 {
        (self.g - self.offset) / self.accel_per_amp
    }
}

impl FieldModel for UniformGradientField {
    fn acceleration_z(&self, state: SpinState, _z: f64, i: f64) -> Result<f64, FieldError> {
        let applied = match state {
            SpinState::Ket0 => 0.0,
            _ => self.accel_per_amp * i + self.offset,
        };
        Ok(applied - self.g)
    }

    fn quadratic(
        &self,
        state: SpinState,
        r: &Vector3<f64>,
        i: f64,
    ) -> Result<QuadraticPotential, FieldError> {
        let applied = match state {
            SpinState::Ket0 => 0.0,
            _ => self.accel_per_amp * i + self.offset,
        };
        // V = -m a z, homogeneous slope, no curvature
        let mass = crate::phys::RB87_MASS_KG;
        Ok(QuadraticPotential {
            v0: -mass * applied * r.z,
            grad: Vector3::new(0.0, 0.0, -mass * applied),
            hess: Matrix3::zeros(),
        })
    }

    fn gravity(&self) -> f64 {
        self.g
    }
}

/// Synthetic harmonic well for wave-packet tests: V = sum_k m omega_k^2 dr_k^2 / 2
/// about `center`, identical for every spin state.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicFieldModel {
    pub center: Vector3<f64>,
    /// Angular frequencies per axis (rad/s).
    pub omega: Vector3<f64>,
    pub mass: f64,
    pub g: f64,
}

impl FieldModel for HarmonicFieldModel {
    fn acceleration_z(&self, _state: SpinState, z: f64, _i: f64) -> Result<f64, FieldError> {
        Ok(-self.omega.z * self.omega.z * (z - self.center.z) - self.g)
    }

    fn quadratic(
        &self,
        _state: SpinState,
        r: &Vector3<f64>,
        _i: f64,
    ) -> Result<QuadraticPotential, FieldError> {
        let d = r - self.center;
        let k = Vector3::new(
            self.mass * self.omega.x * self.omega.x,
            self.mass * self.omega.y * self.omega.y,
            self.mass * self.omega.z * self.omega.z,
        );
        Ok(QuadraticPotential {
            v0: 0.5 * (k.x * d.x * d.x + k.y * d.y * d.y + k.z * d.z * d.z),
            grad: Vector3::new(k.x * d.x, k.y * d.y, k.z * d.z),
            hess: Matrix3::from_diagonal(&k),
        })
    }

    fn gravity(&self) -> f64 {
        self.g
    }
}
