//! Magnetic field, Zeeman potential and per-state acceleration from the
//! three-wire chip array plus bias field and ambient gradient.
//!
//! Geometry convention: the chip surface is the plane z = 0, atoms sit at
//! z < 0 and gravity points along -z. Wires run along the y axis with
//! cross-section centers on the x axis; each is modelled as a zero-thickness
//! finite-width current sheet (thickness 2 um is far below the ~100 um
//! working distances), giving closed arctangent/log field forms with
//! analytic first and second derivatives. The in-plane bias component that
//! the coils produce lies along -x in this frame so that positive wire
//! current levitates atoms below the quadrupole.
//!
//! Field magnitudes are in gauss, lengths in meters, so gradients are G/m
//! and curvatures G/m^2. Energies convert to joules inside
//! [`zeeman_potential`].

mod model;

pub use model::{ChipFieldModel, FieldModel, HarmonicFieldModel, UniformGradientField};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::phys::{Constants, PhysError, Species, SpinState, MU0_OVER_2PI, PLANCK_H};

/// Conversion from tesla to gauss.
pub const GAUSS_PER_TESLA: f64 = 1e4;

/// Bias magnitude below which adiabatic spin following is doubtful.
pub const ADIABATIC_MIN_B_G: f64 = 5.0;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("evaluation point lies inside the cross-section of wire {0}")]
    InsideWire(usize),
    #[error("wire geometry invalid: {0}")]
    BadGeometry(&'static str),
    #[error(transparent)]
    Phys(#[from] PhysError),
}

/// One rectangular micro-wire, reduced to a current sheet at z = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wire {
    /// Cross-section center along x (m).
    pub x_center: f64,
    /// Width along x (m).
    pub width: f64,
    /// Physical thickness (m); used only for the singular-region guard.
    pub thickness: f64,
    /// Current direction: +1 along +y, -1 along -y.
    pub polarity: i8,
}

/// The wire array of the gradient chip.
#[derive(Debug, Clone, PartialEq)]
pub struct WireGeometry {
    pub wires: Vec<Wire>,
}

impl WireGeometry {
    /// Default three-wire set: 40 um wide wires at x = -100, 0, +100 um with
    /// alternating polarity (+1, -1, +1), forming a 2D quadrupole ~97 um
    /// below the surface.
    pub fn three_wire_default() -> Self {
        let mk = |x_center: f64, polarity: i8| Wire {
            x_center,
            width: 40e-6,
            thickness: 2e-6,
            polarity,
        };
        Self {
            wires: vec![mk(-100e-6, 1), mk(0.0, -1), mk(100e-6, 1)],
        }
    }

    /// The two straight trap wires (50 um wide, centers +-50 um, equal
    /// polarity) used for the chip trap configuration.
    pub fn trap_wires() -> Self {
        let mk = |x_center: f64| Wire {
            x_center,
            width: 50e-6,
            thickness: 2e-6,
            polarity: 1,
        };
        Self {
            wires: vec![mk(-50e-6), mk(50e-6)],
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.wires.is_empty() {
            return Err(FieldError::BadGeometry("no wires"));
        }
        for w in &self.wires {
            if w.width <= 0.0 || w.thickness < 0.0 {
                return Err(FieldError::BadGeometry("non-positive wire dimensions"));
            }
            if w.polarity != 1 && w.polarity != -1 {
                return Err(FieldError::BadGeometry("polarity must be +-1"));
            }
        }
        Ok(())
    }
}

/// Homogeneous bias field plus a uniform residual |B| gradient along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasField {
    /// Bias vector (G).
    pub b0: Vector3<f64>,
    /// Ambient d|B|/dz (G/m), added directly to the magnitude gradient.
    pub ambient_gradient: f64,
}

impl BiasField {
    /// Default bias: 12.6 G in-plane (along -x, see module docs) with the
    /// measured 0.68 G/cm ambient gradient.
    pub fn paper_default() -> Self {
        Self {
            b0: Vector3::new(-12.6, 0.0, 0.0),
            ambient_gradient: 68.0,
        }
    }

    /// Preset with the trapping-stage bias value (13.05 G scale); the
    /// measured post-release value (12.625 G) and the trapping value differ
    /// in the experiment record, so both are exposed as presets.
    pub fn trapping_preset() -> Self {
        Self {
            b0: Vector3::new(13.05, 0.825, 0.33),
            ambient_gradient: 0.0,
        }
    }

    pub fn measured_preset() -> Self {
        Self {
            b0: Vector3::new(-12.625, 0.0, 0.0),
            ambient_gradient: 68.0,
        }
    }

    /// Adiabatic-following validity: |B0| should stay above ~5 G.
    pub fn adiabatic_ok(&self) -> bool {
        self.b0.norm() >= ADIABATIC_MIN_B_G
    }
}

/// Local field data: vector field, gradient and Hessian of |B|.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    /// Field vector (G).
    pub b: Vector3<f64>,
    /// grad |B| (G/m).
    pub grad_abs: Vector3<f64>,
    /// Hessian of |B| (G/m^2), symmetric.
    pub hess_abs: Matrix3<f64>,
}

impl FieldSample {
    pub fn b_mag(&self) -> f64 {
        self.b.norm()
    }
}

/// Per-edge primitives of the sheet field.
///
/// A sheet of surface current K (A/m) along +y occupying x in [x1, x2] at
/// z = 0 produces, with c = mu0 K / 2pi and u_i = x - x_i:
///   Bx = c [atan(u1/z) - atan(u2/z)],
///   Bz = (c/2) [ln(u2^2 + z^2) - ln(u1^2 + z^2)].
/// Both derive from the per-edge harmonic pair A = atan(u/z), L = ln(r)/1,
/// whose derivatives are rational in (u, z).
struct EdgeTerms {
    a: f64,
    a_x: f64,
    a_z: f64,
    a_xx: f64,
    a_xz: f64,
    l: f64,
    l_x: f64,
    l_z: f64,
    l_xx: f64,
    l_xz: f64,
}

fn edge_terms(u: f64, z: f64) -> EdgeTerms {
    let r2 = u * u + z * z;
    let r4 = r2 * r2;
    EdgeTerms {
        a: (u / z).atan(),
        a_x: z / r2,
        a_z: -u / r2,
        a_xx: -2.0 * u * z / r4,
        a_xz: (u * u - z * z) / r4,
        l: 0.5 * r2.ln(),
        l_x: u / r2,
        l_z: z / r2,
        l_xx: (z * z - u * u) / r4,
        l_xz: -2.0 * u * z / r4,
    }
}

/// Field of one sheet wire with current `i` (A): value, Jacobian and the
/// Hessians of Bx and Bz in the (x, z) plane, all in gauss units.
#[allow(clippy::type_complexity)]
fn sheet_field_full(
    x: f64,
    z: f64,
    wire: &Wire,
    i: f64,
) -> (Vector3<f64>, Matrix3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let k = i * wire.polarity as f64 / wire.width;
    let c = MU0_OVER_2PI * k * GAUSS_PER_TESLA;
    let e1 = edge_terms(x - (wire.x_center - 0.5 * wire.width), z);
    let e2 = edge_terms(x - (wire.x_center + 0.5 * wire.width), z);

    let b = Vector3::new(c * (e1.a - e2.a), 0.0, c * (e2.l - e1.l));

    // Jacobian dB_i/dr_j; y derivatives vanish (translation invariance).
    let mut jac = Matrix3::zeros();
    jac[(0, 0)] = c * (e1.a_x - e2.a_x);
    jac[(0, 2)] = c * (e1.a_z - e2.a_z);
    jac[(2, 0)] = c * (e2.l_x - e1.l_x);
    jac[(2, 2)] = c * (e2.l_z - e1.l_z);

    // Hessians of the two nonzero components (A_zz = -A_xx, L_zz = -L_xx).
    let mut hx = Matrix3::zeros();
    hx[(0, 0)] = c * (e1.a_xx - e2.a_xx);
    hx[(0, 2)] = c * (e1.a_xz - e2.a_xz);
    hx[(2, 0)] = hx[(0, 2)];
    hx[(2, 2)] = -hx[(0, 0)];
    let mut hz = Matrix3::zeros();
    hz[(0, 0)] = c * (e2.l_xx - e1.l_xx);
    hz[(0, 2)] = c * (e2.l_xz - e1.l_xz);
    hz[(2, 0)] = hz[(0, 2)];
    hz[(2, 2)] = -hz[(0, 0)];

    (b, jac, hx, hz)
}

fn singular_guard(r: &Vector3<f64>, geometry: &WireGeometry) -> Result<(), FieldError> {
    for (idx, w) in geometry.wires.iter().enumerate() {
        let guard_z = w.thickness.max(1e-9);
        if (r.x - w.x_center).abs() <= 0.5 * w.width && r.z.abs() <= 0.5 * guard_z {
            return Err(FieldError::InsideWire(idx));
        }
    }
    Ok(())
}

/// Superposed wire field (G) at a point, common current `i` through every
/// wire (signed by each wire's polarity).
pub fn wire_field(
    r: &Vector3<f64>,
    i: f64,
    geometry: &WireGeometry,
) -> Result<Vector3<f64>, FieldError> {
    geometry.validate()?;
    singular_guard(r, geometry)?;
    if i == 0.0 {
        return Ok(Vector3::zeros());
    }
    let mut b = Vector3::zeros();
    for w in &geometry.wires {
        b += sheet_field_full(r.x, r.z, w, i).0;
    }
    Ok(b)
}

/// Total field sample at a point: wires + bias, with analytic gradient and
/// Hessian of |B| and the ambient gradient added to the z component.
pub fn total_field(
    r: &Vector3<f64>,
    i: f64,
    geometry: &WireGeometry,
    bias: &BiasField,
) -> Result<FieldSample, FieldError> {
    geometry.validate()?;
    singular_guard(r, geometry)?;

    let mut b = bias.b0;
    let mut jac = Matrix3::zeros();
    let mut hess_bx = Matrix3::zeros();
    let mut hess_bz = Matrix3::zeros();
    if i != 0.0 {
        for w in &geometry.wires {
            let (bw, jw, hx, hz) = sheet_field_full(r.x, r.z, w, i);
            b += bw;
            jac += jw;
            hess_bx += hx;
            hess_bz += hz;
        }
    }

    let b_mag = b.norm();
    let (grad_abs, mut hess_abs) = if b_mag > 0.0 {
        // d|B|/dr_j = (B . dB/dr_j) / |B|
        let grad = jac.transpose() * b / b_mag;
        // d2|B|/dr_j dr_k = (dB/dr_j . dB/dr_k + B . d2B/dr_j dr_k)/|B|
        //                   - grad_j grad_k / |B|
        let mut hess = Matrix3::zeros();
        for j in 0..3 {
            for k in 0..3 {
                let dj = jac.column(j);
                let dk = jac.column(k);
                let b_d2 = b.x * hess_bx[(j, k)] + b.z * hess_bz[(j, k)];
                hess[(j, k)] = (dj.dot(&dk) + b_d2) / b_mag - grad[j] * grad[k] / b_mag;
            }
        }
        (grad, hess)
    } else {
        (Vector3::zeros(), Matrix3::zeros())
    };

    let mut grad_abs = grad_abs;
    grad_abs.z += bias.ambient_gradient;
    // uniform gradient: no curvature contribution
    hess_abs = 0.5 * (hess_abs + hess_abs.transpose());

    Ok(FieldSample {
        b,
        grad_abs,
        hess_abs,
    })
}

/// Zeeman potential of a state in a field sample (J):
/// V = mF gF muB |B| + alpha_{F,mF} |B|^2.
pub fn zeeman_potential(
    sample: &FieldSample,
    state: SpinState,
    species: &Species,
) -> Result<f64, FieldError> {
    let b = sample.b_mag();
    Ok(zeeman_from_mag(b, state, species)?)
}

fn zeeman_from_mag(b_mag: f64, state: SpinState, species: &Species) -> Result<f64, PhysError> {
    let alpha = species.alpha_over_h(state.f(), state.m_f())?;
    let lin = state.m_f() as f64 * species.gf_mub_over_h * PLANCK_H * b_mag;
    Ok(lin + alpha * PLANCK_H * b_mag * b_mag)
}

/// Transition frequency between two states at a field magnitude (Hz).
pub fn transition_frequency_hz(
    b_mag: f64,
    upper: SpinState,
    lower: SpinState,
    species: &Species,
) -> f64 {
    let vu = zeeman_from_mag(b_mag, upper, species).expect("experiment state");
    let vl = zeeman_from_mag(b_mag, lower, species).expect("experiment state");
    (vu - vl) / PLANCK_H
}

/// Invert a measured transition frequency to the field magnitude (G) by a
/// bracketed root search over the 1-30 G operating range.
pub fn field_from_transition(
    freq_hz: f64,
    upper: SpinState,
    lower: SpinState,
    species: &Species,
) -> Result<f64, crate::numerics::NumericsError> {
    crate::numerics::brent(
        |b| transition_frequency_hz(b, upper, lower, species) - freq_hz,
        1.0,
        30.0,
        1e-12,
    )
}

/// Acceleration from the quadratic Zeeman term alone (m/s^2, signed along z
/// by the sign of alpha): a = 2 alpha |B| |grad|B|| / m.
pub fn soz_acceleration(state: SpinState, sample: &FieldSample, species: &Species) -> f64 {
    let alpha_j = species.alpha_over_h_state(state) * PLANCK_H;
    2.0 * alpha_j * sample.b_mag() * sample.grad_abs.norm() / species.mass_kg
}

/// Full acceleration of a state at a point: a = -grad V / m - g zhat.
pub fn acceleration_of(
    state: SpinState,
    r: &Vector3<f64>,
    i: f64,
    geometry: &WireGeometry,
    bias: &BiasField,
    species: &Species,
    constants: &Constants,
) -> Result<Vector3<f64>, FieldError> {
    let sample = total_field(r, i, geometry, bias)?;
    let grad_v = zeeman_gradient(&sample, state, species)?;
    let mut a = -grad_v / species.mass_kg;
    a.z -= constants.g_earth;
    Ok(a)
}

/// grad V (J/m) of the Zeeman potential from a field sample.
fn zeeman_gradient(
    sample: &FieldSample,
    state: SpinState,
    species: &Species,
) -> Result<Vector3<f64>, FieldError> {
    let alpha_j = species.alpha_over_h(state.f(), state.m_f())? * PLANCK_H;
    let lin = state.m_f() as f64 * species.gf_mub_over_h * PLANCK_H;
    let b = sample.b_mag();
    // dV/dr = (lin + 2 alpha |B|) d|B|/dr
    Ok((lin + 2.0 * alpha_j * b) * sample.grad_abs)
}

/// Second-order Taylor data of the magnetic potential about a point (J,
/// J/m, J/m^2). Gravity is not included; consumers add it separately.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPotential {
    pub v0: f64,
    pub grad: Vector3<f64>,
    pub hess: Matrix3<f64>,
}

/// Quadratic expansion of the Zeeman potential of `state` about `r0`.
pub fn quadratic_expansion(
    r0: &Vector3<f64>,
    i: f64,
    geometry: &WireGeometry,
    bias: &BiasField,
    state: SpinState,
    species: &Species,
) -> Result<QuadraticPotential, FieldError> {
    let sample = total_field(r0, i, geometry, bias)?;
    quadratic_from_sample(&sample, state, species)
}

/// Quadratic potential data from an existing field sample:
/// V'' = (lin + 2 alpha |B|) H[|B|] + 2 alpha grad|B| grad|B|^T.
pub fn quadratic_from_sample(
    sample: &FieldSample,
    state: SpinState,
    species: &Species,
) -> Result<QuadraticPotential, FieldError> {
    let alpha_j = species.alpha_over_h(state.f(), state.m_f())? * PLANCK_H;
    let lin = state.m_f() as f64 * species.gf_mub_over_h * PLANCK_H;
    let b = sample.b_mag();
    let slope = lin + 2.0 * alpha_j * b;
    let v0 = lin * b + alpha_j * b * b;
    let grad = slope * sample.grad_abs;
    let hess = slope * sample.hess_abs + 2.0 * alpha_j * sample.grad_abs * sample.grad_abs.transpose();
    Ok(QuadraticPotential { v0, grad, hess })
}

/// CSV grid export of |B| and d|B|/dz over an (x, z) rectangle.
pub fn field_map_csv(
    geometry: &WireGeometry,
    bias: &BiasField,
    i: f64,
    x_range: (f64, f64, usize),
    z_range: (f64, f64, usize),
) -> Result<String, FieldError> {
    let mut out = String::from("x_m,z_m,b_mag_g,db_dz_g_per_m\n");
    for iz in 0..z_range.2 {
        let z = z_range.0 + (z_range.1 - z_range.0) * iz as f64 / (z_range.2 - 1).max(1) as f64;
        for ix in 0..x_range.2 {
            let x =
                x_range.0 + (x_range.1 - x_range.0) * ix as f64 / (x_range.2 - 1).max(1) as f64;
            let s = total_field(&Vector3::new(x, 0.0, z), i, geometry, bias)?;
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.9e}\n",
                x,
                z,
                s.b_mag(),
                s.grad_abs.z
            ));
        }
    }
    Ok(out)
}
