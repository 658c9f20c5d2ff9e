//! Single-memristor model: linear ion drift with a Joglekar boundary window
//! and a hard voltage threshold below which the state does not move.

use crate::error::{Error, Result};

/// Integration step used by [`calibrate_drift`] and as the transient default.
pub const DEFAULT_DT: f64 = 1e-10;

/// Which sign of applied voltage drives the memristance up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorParams {
    /// Low-resistance bound, reached at `x = 1`.
    pub r_on: f64,
    /// High-resistance bound, reached at `x = 0`.
    pub r_off: f64,
    /// No drift while `|v| <= v_threshold`.
    pub v_threshold: f64,
    /// Drift gain folding mobility, `r_on` and film thickness into one constant.
    pub mobility_factor: f64,
    pub window_exponent: u32,
    pub polarity: Polarity,
}

impl Default for MemristorParams {
    fn default() -> Self {
        Self {
            r_on: 100.0,
            r_off: 2.0e6,
            v_threshold: 0.2,
            mobility_factor: 7.25e8,
            window_exponent: 2,
            polarity: Polarity::Positive,
        }
    }
}

impl MemristorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::DeviceParams(msg));
        if !(self.r_on > 0.0 && self.r_on.is_finite()) {
            return bad(format!("r_on must be positive, got {}", self.r_on));
        }
        if !(self.r_off > self.r_on && self.r_off.is_finite()) {
            return bad(format!(
                "r_off ({}) must exceed r_on ({})",
                self.r_off, self.r_on
            ));
        }
        if !(self.v_threshold >= 0.0 && self.v_threshold.is_finite()) {
            return bad(format!(
                "v_threshold must be non-negative, got {}",
                self.v_threshold
            ));
        }
        if !(self.mobility_factor > 0.0 && self.mobility_factor.is_finite()) {
            return bad(format!(
                "mobility_factor must be positive, got {}",
                self.mobility_factor
            ));
        }
        if self.window_exponent == 0 {
            return bad("window_exponent must be at least 1".into());
        }
        Ok(())
    }

    /// Rejects parameter sets for which the smallest write would be a no-op.
    pub fn validate_for_writes(&self, lowest_write_amplitude: f64) -> Result<()> {
        self.validate()?;
        if self.v_threshold >= lowest_write_amplitude {
            return Err(Error::DeviceParams(format!(
                "v_threshold ({} V) must be below the lowest nonzero write amplitude ({} V)",
                self.v_threshold, lowest_write_amplitude
            )));
        }
        Ok(())
    }

    /// Linear mixing law `M(x) = r_on x + r_off (1 - x)`.
    #[inline]
    pub fn memristance_at(&self, x: f64) -> f64 {
        self.r_on * x + self.r_off * (1.0 - x)
    }

    /// Drift rate without the threshold gate. Used by the transient engine,
    /// which tracks gate transitions itself.
    #[inline]
    pub fn ungated_rate(&self, x: f64, v: f64) -> f64 {
        let current = v / self.memristance_at(x);
        -self.polarity.sign() * self.mobility_factor * current * window(x, self.window_exponent)
    }

    #[inline]
    pub fn is_active(&self, v: f64) -> bool {
        v.abs() > self.v_threshold
    }
}

/// Normalized internal state; `x = 1` is the low-resistance bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorState {
    pub x: f64,
    pub t_last: f64,
}

impl MemristorState {
    pub fn new(x: f64) -> Self {
        Self {
            x: x.clamp(0.0, 1.0),
            t_last: 0.0,
        }
    }
}

pub fn memristance(state: &MemristorState, params: &MemristorParams) -> f64 {
    params.memristance_at(state.x)
}

/// Joglekar window `1 - (2x - 1)^(2p)`.
#[inline]
pub fn window(x: f64, p: u32) -> f64 {
    1.0 - (2.0 * x - 1.0).powi(2 * p as i32)
}

/// `dx/dt` under a constant applied voltage. Zero at or below threshold.
pub fn drift_rate(state: &MemristorState, v_applied: f64, params: &MemristorParams) -> f64 {
    if params.is_active(v_applied) {
        params.ungated_rate(state.x, v_applied)
    } else {
        0.0
    }
}

/// One RK4 step of the drift equation at fixed applied voltage; the result is
/// clamped into `[0, 1]`.
pub fn step(
    state: &MemristorState,
    v_applied: f64,
    dt: f64,
    params: &MemristorParams,
) -> MemristorState {
    debug_assert!(dt > 0.0);
    let t_last = state.t_last + dt;
    if !params.is_active(v_applied) {
        return MemristorState { x: state.x, t_last };
    }
    let f = |x: f64| params.ungated_rate(x, v_applied);
    let x = state.x;
    let k1 = f(x);
    let k2 = f(x + 0.5 * dt * k1);
    let k3 = f(x + 0.5 * dt * k2);
    let k4 = f(x + dt * k3);
    let x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    MemristorState {
        x: x.clamp(0.0, 1.0),
        t_last,
    }
}

/// Inverts the mixing law.
pub fn state_for_resistance(m_target: f64, params: &MemristorParams) -> Result<MemristorState> {
    if !(m_target >= params.r_on) {
        return Err(Error::Range {
            value: m_target,
            bound: "r_on",
            limit: params.r_on,
        });
    }
    if !(m_target <= params.r_off) {
        return Err(Error::Range {
            value: m_target,
            bound: "r_off",
            limit: params.r_off,
        });
    }
    let x = (params.r_off - m_target) / (params.r_off - params.r_on);
    Ok(MemristorState::new(x))
}

/// Holds `amplitude` across the bare device for `duration`, starting from
/// `from` ohms, and returns the end memristance.
pub fn pulse_end_resistance(
    params: &MemristorParams,
    from: f64,
    amplitude: f64,
    duration: f64,
) -> Result<f64> {
    let steps = (duration / DEFAULT_DT).ceil().max(1.0) as usize;
    let dt = duration / steps as f64;
    let mut s = state_for_resistance(from, params)?;
    for _ in 0..steps {
        s = step(&s, amplitude, dt, params);
    }
    Ok(memristance(&s, params))
}

const GAIN_BRACKET: (f64, f64) = (1.0, 1.0e14);
const GAIN_REL_TOL: f64 = 1e-6;

/// Finds the drift gain for which a rectangular pulse of `amplitude` and
/// `duration` moves a bare device from `from` to `to` ohms.
///
/// Bisects in log-gain over a fixed bracket until the bracket is narrower
/// than 1e-6 relative. The end resistance is monotone in the gain, which the
/// bracket-end residuals must confirm by differing in sign.
pub fn calibrate_drift(
    params: &MemristorParams,
    from: f64,
    to: f64,
    amplitude: f64,
    duration: f64,
) -> Result<f64> {
    params.validate()?;
    state_for_resistance(to, params)?;
    if !params.is_active(amplitude) {
        return Err(Error::DeviceParams(format!(
            "calibration amplitude {amplitude} V is not above the threshold {} V",
            params.v_threshold
        )));
    }
    let (mut lo, mut hi) = GAIN_BRACKET;
    if from == to {
        return Ok(lo);
    }
    let residual = |gain: f64| -> Result<f64> {
        let p = MemristorParams {
            mobility_factor: gain,
            ..*params
        };
        Ok(pulse_end_resistance(&p, from, amplitude, duration)? - to)
    };
    let mut r_lo = residual(lo)?;
    let r_hi = residual(hi)?;
    if r_lo.signum() == r_hi.signum() {
        return Err(Error::Calibration {
            lo,
            hi,
            residual_lo: r_lo,
            residual_hi: r_hi,
        });
    }
    while hi / lo - 1.0 > GAIN_REL_TOL {
        let mid = (lo * hi).sqrt();
        let r_mid = residual(mid)?;
        if r_mid == 0.0 {
            return Ok(mid);
        }
        if r_mid.signum() == r_lo.signum() {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> MemristorParams {
        MemristorParams::default()
    }

    #[test]
    fn memristance_boundaries_and_midpoint() {
        let p = params();
        assert_eq!(memristance(&MemristorState::new(1.0), &p), 100.0);
        assert_eq!(memristance(&MemristorState::new(0.0), &p), 2.0e6);
        assert_eq!(memristance(&MemristorState::new(0.5), &p), 1_000_050.0);
    }

    #[test]
    fn window_values() {
        assert_eq!(window(0.0, 2), 0.0);
        assert_eq!(window(1.0, 2), 0.0);
        assert_eq!(window(0.5, 2), 1.0);
        assert_eq!(window(0.25, 2), 0.9375);
    }

    #[test]
    fn drift_is_gated() {
        let p = MemristorParams {
            v_threshold: 1.0,
            ..params()
        };
        let s = MemristorState::new(0.5);
        assert_eq!(drift_rate(&s, 0.1, &p), 0.0);
        assert_eq!(drift_rate(&s, 0.0, &p), 0.0);
        assert_eq!(drift_rate(&s, -1.0, &p), 0.0);
    }

    #[test]
    fn drift_rate_golden_at_midpoint() {
        // k * (v / M(0.5)) * f(0.5), negated for positive polarity
        let direct = -7.25e8 * (3.0 / 1_000_050.0) * 1.0;
        let rate = drift_rate(&MemristorState::new(0.5), 3.0, &params());
        assert!((rate - direct).abs() <= 1e-12 * direct.abs());
        assert!((rate - -2174.891255437228).abs() < 1e-9);
    }

    #[test]
    fn step_below_threshold_is_identity() {
        let p = params();
        let s = MemristorState::new(0.3);
        let next = step(&s, 0.1, 1e-9, &p);
        assert_eq!(next.x, s.x);
        assert!((next.t_last - 1e-9).abs() < 1e-24);
    }

    #[test]
    fn step_self_convergence_over_pulse_menu() {
        let p = params();
        let start = state_for_resistance(232.068, &p).unwrap();
        for &v in &[-3.0, 1.5, 3.0] {
            let run = |dt: f64| {
                let n = (100e-9 / dt).round() as usize;
                let mut s = start;
                for _ in 0..n {
                    s = step(&s, v, dt, &p);
                }
                s
            };
            let a = run(1e-10);
            let b = run(0.5e-10);
            assert!((a.x - b.x).abs() <= 1e-6 * b.x.abs(), "v={v}");
            let (ma, mb) = (memristance(&a, &p), memristance(&b, &p));
            assert!((ma - mb).abs() <= 1e-6 * mb, "v={v}: {ma} vs {mb}");
        }
    }

    #[test]
    fn state_for_resistance_inverts_reference_values() {
        let p = params();
        for &m in &[232.068, 26_853.357, 1_537_996.116] {
            let s = state_for_resistance(m, &p).unwrap();
            assert!((memristance(&s, &p) - m).abs() <= 1e-9 * m);
        }
        assert_eq!(state_for_resistance(100.0, &p).unwrap().x, 1.0);
    }

    #[test]
    fn state_for_resistance_rejects_out_of_range() {
        let p = params();
        match state_for_resistance(50.0, &p) {
            Err(Error::Range { bound, .. }) => assert_eq!(bound, "r_on"),
            other => panic!("{other:?}"),
        }
        match state_for_resistance(3e6, &p) {
            Err(Error::Range { bound, .. }) => assert_eq!(bound, "r_off"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn threshold_must_sit_below_writes() {
        let p = MemristorParams {
            v_threshold: 1.5,
            ..params()
        };
        assert!(p.validate_for_writes(1.5).is_err());
        assert!(params().validate_for_writes(1.5).is_ok());
    }

    /// Time to drift between two states at constant voltage, from the
    /// separable form `dt = -M(x) / (k v f(x)) dx`, by composite Simpson.
    fn quadrature_gain(p: &MemristorParams, from: f64, to: f64, v: f64, duration: f64) -> f64 {
        let x0 = state_for_resistance(from, p).unwrap().x;
        let x1 = state_for_resistance(to, p).unwrap().x;
        let g = |x: f64| {
            let m = p.r_on * x + p.r_off * (1.0 - x);
            let f = 1.0 - (2.0 * x - 1.0).powi(4);
            m / f
        };
        let n = 200_000;
        let h = (x0 - x1) / n as f64;
        let mut s = g(x1) + g(x0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(x1 + i as f64 * h);
        }
        s * h / 3.0 / (v * duration)
    }

    #[test]
    fn calibrate_matches_quadrature_oracle() {
        let p = params();
        let oracle = quadrature_gain(&p, 232.0, 918.906, 1.5, 100e-9);
        let gain = calibrate_drift(&p, 232.0, 918.906, 1.5, 100e-9).unwrap();
        assert!((gain - oracle).abs() <= 1e-5 * oracle, "{gain} vs {oracle}");
        let landed = pulse_end_resistance(
            &MemristorParams {
                mobility_factor: gain,
                ..p
            },
            232.0,
            1.5,
            100e-9,
        )
        .unwrap();
        assert!((landed - 918.906).abs() <= 0.01 * 918.906);
        // frozen from the quadrature oracle
        assert!((gain - 7.250133e8).abs() <= 1e-5 * 7.250133e8, "{gain}");
    }

    #[test]
    fn default_gain_comes_from_reference_calibration() {
        let p = params();
        let gain = calibrate_drift(&p, 232.068, 918.906, 1.5, 100e-9).unwrap();
        assert!((gain / p.mobility_factor - 1.0).abs() < 1e-3, "{gain}");
    }

    #[test]
    fn calibrate_degenerate_target() {
        let gain = calibrate_drift(&params(), 500.0, 500.0, 3.0, 100e-9).unwrap();
        assert_eq!(gain, 1.0);
    }

    #[test]
    fn calibrate_unreachable_reports_residuals() {
        // a reset pulse cannot raise resistance
        match calibrate_drift(&params(), 500.0, 900.0, -3.0, 100e-9) {
            Err(Error::Calibration {
                residual_lo,
                residual_hi,
                ..
            }) => {
                assert!(residual_lo < 0.0 && residual_hi < 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn larger_gain_moves_further() {
        let base = params();
        let mut last = 0.0;
        for &gain in &[1e7, 3e7, 1e8, 3e8, 1e9, 3e9] {
            let p = MemristorParams {
                mobility_factor: gain,
                ..base
            };
            let end = pulse_end_resistance(&p, 232.068, 1.5, 100e-9).unwrap();
            let moved = end - 232.068;
            assert!(moved > last, "gain {gain}: {moved} <= {last}");
            last = moved;
        }
    }

    proptest! {
        #[test]
        fn window_bounded_and_symmetric(x in 0.0f64..=1.0, p in 1u32..6) {
            let w = window(x, p);
            prop_assert!((0.0..=1.0).contains(&w));
            prop_assert!((w - window(1.0 - x, p)).abs() < 1e-12);
        }

        #[test]
        fn memristance_roundtrip(x in 0.0f64..=1.0) {
            let p = params();
            let m = memristance(&MemristorState::new(x), &p);
            prop_assert!(m >= p.r_on && m <= p.r_off);
            let back = state_for_resistance(m, &p).unwrap();
            prop_assert!((memristance(&back, &p) - m).abs() <= 1e-9 * m);
        }

        #[test]
        fn memristance_strictly_decreasing(a in 0.0f64..1.0, d in 1e-6f64..1.0) {
            let p = params();
            let b = (a + d).min(1.0);
            prop_assume!(b > a);
            prop_assert!(p.memristance_at(b) < p.memristance_at(a));
        }

        #[test]
        fn subthreshold_steps_never_move(x in 0.0f64..=1.0, v in -0.2f64..=0.2, dt in 1e-12f64..1e-6) {
            let p = params();
            let s = MemristorState::new(x);
            prop_assert_eq!(step(&s, v, dt, &p).x, s.x);
        }

        #[test]
        fn sign_law(x in 0.01f64..0.99) {
            let p = params();
            let s = MemristorState::new(x);
            let up = step(&s, 3.0, 1e-10, &p);
            let down = step(&s, -3.0, 1e-10, &p);
            prop_assert!(memristance(&up, &p) >= memristance(&s, &p));
            prop_assert!(memristance(&down, &p) <= memristance(&s, &p));
        }
    }
}
