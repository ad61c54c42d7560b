//! Current waveforms, the interferometer schedule and the two calibration
//! conditions (levitation and equal pulse area) that define a valid run.
//!
//! Pulses are smooth cosine ramps: rising from the idle floor over `tau`,
//! holding `i_max` for `w`, falling over `tau`. The area above idle of one
//! pulse is exactly (i_max - i_idle)(tau + w), which makes the equal-area
//! (closing) condition an exact algebraic statement between the kick and
//! holding currents.

use thiserror::Error;

use crate::field::{FieldError, FieldModel};
use crate::numerics::{self, NumericsError};
use crate::phys::{PhysError, SpinState, Timings};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("holding duration T_h = {0} s is not positive")]
    NonPositiveHold(f64),
    #[error("kick current {i_kick} A exceeds the source limit {limit} A")]
    SourceLimit { i_kick: f64, limit: f64 },
    #[error("currents must satisfy I_hold > I_idle >= 0")]
    BadCurrents,
    #[error(transparent)]
    Timing(#[from] PhysError),
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("no sign change of the net acceleration over [{0} A, {1} A]")]
    NoSignChange(f64, f64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One cosine pulse riding on the idle floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosinePulse {
    /// Start time (s).
    pub t0: f64,
    /// Rise and fall time (s).
    pub tau: f64,
    /// Flat-top duration (s).
    pub w: f64,
    /// Plateau current (A).
    pub i_max: f64,
}

impl CosinePulse {
    pub fn duration(&self) -> f64 {
        2.0 * self.tau + self.w
    }

    /// Shape factor in [0, 1]; `tau = 0` degenerates to a square pulse.
    pub fn shape(&self, t: f64) -> f64 {
        let s = t - self.t0;
        if s < 0.0 || s >= self.duration() {
            0.0
        } else if self.tau == 0.0 {
            1.0
        } else if s < self.tau {
            0.5 * (1.0 - (std::f64::consts::PI * s / self.tau).cos())
        } else if s < self.tau + self.w {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * (s - self.w) / self.tau).cos())
        }
    }

    /// Area above a base level: (i_max - base)(tau + w).
    pub fn area_above(&self, base: f64) -> f64 {
        (self.i_max - base) * (self.tau + self.w)
    }
}

/// Ordered pulse train with an idle floor between pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentProgram {
    pub pulses: Vec<CosinePulse>,
    pub i_idle: f64,
}

impl CurrentProgram {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.i_idle < 0.0 {
            return Err(ScheduleError::BadCurrents);
        }
        let mut t_end = f64::NEG_INFINITY;
        for p in &self.pulses {
            if p.t0 < t_end {
                return Err(ScheduleError::BadCurrents);
            }
            t_end = p.t0 + p.duration();
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.pulses
            .last()
            .map(|p| p.t0 + p.duration())
            .unwrap_or(0.0)
    }
}

/// Current at time t: the idle floor plus the active pulse's excursion.
pub fn current_at(program: &CurrentProgram, t: f64) -> f64 {
    let mut i = program.i_idle;
    for p in &program.pulses {
        i += (p.i_max - program.i_idle) * p.shape(t);
    }
    i
}

/// Complete gradient schedule of one interferometer run. Time zero is the
/// start of the first kick ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct QgiSchedule {
    pub timings: Timings,
    pub i_hold: f64,
    pub i_kick: f64,
    pub i_idle: f64,
    pub program: CurrentProgram,
    /// Spin-flip instants (s): the ballistic arm is in the sensitive state
    /// outside (flip_1, flip_2), the reference arm inside.
    pub flips: (f64, f64),
    /// Relative kick-current perturbation applied on top of the equal-area
    /// value (uncertainty-band exploration), zero for a calibrated schedule.
    pub kick_perturbation: f64,
}

/// Which interferometer arm a trajectory belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Arm {
    Ballistic,
    Reference,
}

impl QgiSchedule {
    pub fn total_duration(&self) -> f64 {
        self.timings.total()
    }

    /// Spin state of an arm at time t. Flips are instantaneous and placed
    /// 5 us before the adjacent gradient edge, which keeps the timeline
    /// symmetric about the schedule midpoint.
    pub fn spin_state(&self, arm: Arm, t: f64) -> SpinState {
        let inside = t >= self.flips.0 && t < self.flips.1;
        match (arm, inside) {
            (Arm::Ballistic, false) => SpinState::Ket1,
            (Arm::Ballistic, true) => SpinState::Ket0,
            (Arm::Reference, false) => SpinState::Ket0,
            (Arm::Reference, true) => SpinState::Ket1,
        }
    }

    /// Ordered (time, state) pairs for an arm over the schedule window.
    pub fn spin_timeline(&self, arm: Arm) -> Vec<(f64, SpinState)> {
        vec![
            (0.0, self.spin_state(arm, 0.0)),
            (self.flips.0, self.spin_state(arm, self.flips.0)),
            (self.flips.1, self.spin_state(arm, self.flips.1)),
        ]
    }

    pub fn current_at(&self, t: f64) -> f64 {
        current_at(&self.program, t)
    }

    /// Copy with the kick excursion scaled by (1 + rel); models the measured
    /// 0.5% kick-current uncertainty.
    pub fn perturb_kick(&self, rel: f64) -> QgiSchedule {
        let mut out = self.clone();
        out.i_kick = self.i_idle + (self.i_kick - self.i_idle) * (1.0 + rel);
        out.kick_perturbation = rel;
        for p in &mut out.program.pulses {
            if (p.tau - self.timings.tau_kick).abs() < 1e-15 && p.w == 0.0 {
                p.i_max = out.i_kick;
            }
        }
        out
    }

    /// Schedule CSV (t_us, i_ma) at a fixed sample interval.
    pub fn to_csv(&self, dt: f64) -> String {
        let mut s = String::from("t_us,i_ma\n");
        let n = (self.total_duration() / dt).round() as usize;
        for k in 0..=n {
            let t = k as f64 * dt;
            s.push_str(&format!("{:.6},{:.9}\n", t * 1e6, self.current_at(t) * 1e3));
        }
        s
    }
}

/// Hardware envelope limits of the current source.
#[derive(Debug, Clone, Copy)]
pub struct SourceLimits {
    /// Hard maximum current (A); `build_schedule` fails above it.
    pub max_current: f64,
    /// Slew-rate limit (A/s) checked as a warning.
    pub max_slew: f64,
}

impl Default for SourceLimits {
    fn default() -> Self {
        Self {
            max_current: 1.0,
            max_slew: 30e-3 / 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeWarning(pub String);

/// Build the canonical schedule: two pure-ramp kicks around one holding
/// pulse, with the kick current fixed by the equal-area condition
/// (I_kick - I_idle) 2 tau_kick = (I_hold - I_idle) T_h.
pub fn build_schedule(
    timings: &Timings,
    i_hold: f64,
    i_idle: f64,
) -> Result<QgiSchedule, ScheduleError> {
    build_schedule_with(
        timings,
        i_hold,
        i_idle,
        Some(SourceLimits::default().max_current),
    )
}

/// As [`build_schedule`] with an explicit source limit (None disables the
/// hard check so hypothetical schedules can be explored).
pub fn build_schedule_with(
    timings: &Timings,
    i_hold: f64,
    i_idle: f64,
    source_limit: Option<f64>,
) -> Result<QgiSchedule, ScheduleError> {
    timings.validate()?;
    if !(i_hold > i_idle && i_idle >= 0.0) {
        return Err(ScheduleError::BadCurrents);
    }
    let t_h = timings.t_h();
    if t_h <= 0.0 {
        return Err(ScheduleError::NonPositiveHold(t_h));
    }
    let i_kick = (i_hold - i_idle) * t_h / (2.0 * timings.tau_kick) + i_idle;
    if let Some(limit) = source_limit {
        if i_kick > limit {
            return Err(ScheduleError::SourceLimit { i_kick, limit });
        }
    }

    let raw_d = timings.raw_delay();
    let kick1 = CosinePulse {
        t0: 0.0,
        tau: timings.tau_kick,
        w: 0.0,
        i_max: i_kick,
    };
    let hold = CosinePulse {
        t0: timings.t_kick + raw_d,
        tau: timings.tau_hold,
        w: t_h - timings.tau_hold,
        i_max: i_hold,
    };
    let hold_end = hold.t0 + hold.duration();
    let kick2 = CosinePulse {
        t0: hold_end + raw_d,
        tau: timings.tau_kick,
        w: 0.0,
        i_max: i_kick,
    };
    let program = CurrentProgram {
        pulses: vec![kick1, hold, kick2],
        i_idle,
    };
    program.validate()?;

    // Spin flips are instantaneous and sit 5 us outside the holding pulse
    // on both sides. The pre-hold flip coincides with the pi-pulse end
    // (50 us wait + 16 us pulse after the kick); the post-hold flip is the
    // mirrored instant, which keeps the timeline symmetric about the
    // schedule midpoint. The force on either arm in the remaining idle
    // window is the same, so the mirroring is free.
    let flip1 = hold.t0 - 5e-6;
    let flip2 = hold_end + 5e-6;
    debug_assert!((flip1 + flip2 - timings.total()).abs() < 1e-9);

    Ok(QgiSchedule {
        timings: *timings,
        i_hold,
        i_kick,
        i_idle,
        program,
        flips: (flip1, flip2),
        kick_perturbation: 0.0,
    })
}

/// Envelope validation: warnings only, per the exploration-friendly policy.
pub fn validate_envelope(schedule: &QgiSchedule, limits: &SourceLimits) -> Vec<EnvelopeWarning> {
    let mut warnings = Vec::new();
    for (k, p) in schedule.program.pulses.iter().enumerate() {
        if p.i_max > limits.max_current {
            warnings.push(EnvelopeWarning(format!(
                "pulse {k}: plateau {:.1} mA above the {:.0} mA source maximum",
                p.i_max * 1e3,
                limits.max_current * 1e3
            )));
        }
        if p.tau > 0.0 {
            let slew = std::f64::consts::PI * (p.i_max - schedule.i_idle) / (2.0 * p.tau);
            if slew > limits.max_slew {
                warnings.push(EnvelopeWarning(format!(
                    "pulse {k}: peak slew {:.1} mA/us above the {:.1} mA/us limit",
                    slew * 1e3 * 1e-6,
                    limits.max_slew * 1e3 * 1e-6
                )));
            }
        }
    }
    if !(schedule.i_idle >= 0.0) {
        warnings.push(EnvelopeWarning("negative idle current".into()));
    }
    warnings
}

/// Outcome of the holding-current calibration.
#[derive(Debug, Clone)]
pub struct LevitationCalibration {
    /// Current nulling the net acceleration of the sensitive state (A).
    pub i_hold: f64,
    /// Residual acceleration at `i_hold` (m/s^2).
    pub residual_a: f64,
    /// Result of the trajectory-fit variant for cross-checking.
    pub parabola: ParabolaCalibration,
}

/// The measurement-style variant: held trajectories for several currents,
/// each fit to z(t) = z0 + v0 t + a t^2 / 2, then a linear fit of a vs I
/// locates the zero crossing.
#[derive(Debug, Clone)]
pub struct ParabolaCalibration {
    pub i_hold: f64,
    /// (current, fitted acceleration) samples.
    pub samples: Vec<(f64, f64)>,
}

/// Root-find the holding current for the sensitive state at `z_atom`, and
/// cross-check with the parabola-fit procedure.
pub fn calibrate_levitation(
    field: &dyn FieldModel,
    z_atom: f64,
    i_range: (f64, f64),
) -> Result<LevitationCalibration, CalibrationError> {
    let accel =
        |i: f64| -> Result<f64, FieldError> { field.acceleration_z(SpinState::Ket1, z_atom, i) };
    let (a_lo, a_hi) = (accel(i_range.0)?, accel(i_range.1)?);
    if a_lo * a_hi > 0.0 {
        return Err(CalibrationError::NoSignChange(i_range.0, i_range.1));
    }
    let i_hold = numerics::brent(
        |i| accel(i).unwrap_or(f64::NAN),
        i_range.0,
        i_range.1,
        1e-14,
    )?;
    let residual_a = accel(i_hold)?;

    // The trajectory-fit variant samples currents close to the root so the
    // held displacement stays in the near-linear region, as in the
    // measurement it mirrors.
    let span = 0.06 * i_hold.abs().max(1e-6);
    let parabola = parabola_calibration(field, z_atom, (i_hold - span, i_hold + span))?;

    Ok(LevitationCalibration {
        i_hold,
        residual_a,
        parabola,
    })
}

fn parabola_calibration(
    field: &dyn FieldModel,
    z_atom: f64,
    i_range: (f64, f64),
) -> Result<ParabolaCalibration, CalibrationError> {
    let n_currents = 7;
    let hold_time = 2.0e-3_f64;
    let dt = 2e-6_f64;
    let mut samples = Vec::with_capacity(n_currents);
    for k in 0..n_currents {
        let i = i_range.0 + (i_range.1 - i_range.0) * k as f64 / (n_currents - 1) as f64;
        // release from rest at the atom position, constant current
        let mut z = z_atom;
        let mut v = 0.0;
        let steps = (hold_time / dt).round() as usize;
        let mut ts = Vec::with_capacity(steps + 1);
        let mut zs = Vec::with_capacity(steps + 1);
        ts.push(0.0);
        zs.push(z);
        for s in 0..steps {
            let t = s as f64 * dt;
            let f = |zz: f64| field.acceleration_z(SpinState::Ket1, zz, i);
            let k1v = f(z)?;
            let k1z = v;
            let k2v = f(z + 0.5 * dt * k1z)?;
            let k2z = v + 0.5 * dt * k1v;
            let k3v = f(z + 0.5 * dt * k2z)?;
            let k3z = v + 0.5 * dt * k2v;
            let k4v = f(z + dt * k3z)?;
            let k4z = v + dt * k3v;
            z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            ts.push(t + dt);
            zs.push(z);
        }
        // least-squares parabola: a is twice the quadratic coefficient
        let p = numerics::Poly::fit(&ts, &zs, 2)?;
        let raw = p.raw_coeffs();
        samples.push((i, 2.0 * raw[2]));
    }
    // linear fit a(I), zero crossing
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let line = numerics::Poly::fit(&xs, &ys, 1)?;
    let raw = line.raw_coeffs();
    let i_hold = -raw[0] / raw[1];
    Ok(ParabolaCalibration { i_hold, samples })
}
