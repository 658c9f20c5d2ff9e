//! Closed-form read voltage of the cell.
//!
//! Each sub-cell `i` with memristance `M` and network resistor `R` is
//! summarized by
//!
//! ```text
//! R1 = R + M R / (2R + M)      R2 = R + R² / (2R + M)      k = 2 + R1 / R2
//! ```
//!
//! and the read voltage over the load `R0` is
//!
//! ```text
//! V_out = V_r · Σ 1/(R1 k)  /  ( Σ (1/R1)(1 − 1/k) + 1/R0 )
//! ```
//!
//! which is Millman's theorem applied to per-sub-cell Thevenin sources
//! `V_r / (k − 1)` behind `R1 k / (k − 1)`.
//! The three-sub-cell form is the reference; [`generalized_vout`] extends the
//! sums to any `n`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcellAux {
    pub r1c: f64,
    pub r2c: f64,
    pub k: f64,
}

impl SubcellAux {
    /// Thevenin equivalent `(voltage, resistance)` of the sub-cell as seen
    /// from the output node, for read voltage `v_read`.
    pub fn thevenin(&self, v_read: f64) -> (f64, f64) {
        let km1 = self.k - 1.0;
        (v_read / km1, self.r1c * self.k / km1)
    }
}

/// `m_n = ∞` is accepted and yields the open-memristor limit.
pub fn subcell_aux(m_n: f64, r_n: f64) -> Result<SubcellAux> {
    if !(r_n > 0.0) || !r_n.is_finite() {
        return Err(Error::Domain(r_n));
    }
    if !(m_n >= 0.0) {
        return Err(Error::Domain(m_n));
    }
    let (r1c, r2c) = if m_n.is_infinite() {
        (2.0 * r_n, r_n)
    } else {
        let d = 2.0 * r_n + m_n;
        (r_n + m_n * r_n / d, r_n + r_n * r_n / d)
    };
    Ok(SubcellAux {
        r1c,
        r2c,
        k: 2.0 + r1c / r2c,
    })
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Read voltage of a three-sub-cell cell.
pub fn closed_form_vout(m: &[f64; 3], r: &[f64; 3], r_load: f64, v_read: f64) -> Result<f64> {
    generalized_vout(m, r, r_load, v_read)
}

/// Read voltage for any number of sub-cells.
pub fn generalized_vout(m: &[f64], r: &[f64], r_load: f64, v_read: f64) -> Result<f64> {
    if m.len() != r.len() {
        return Err(Error::LengthMismatch {
            left: m.len(),
            right: r.len(),
        });
    }
    if !(r_load > 0.0) {
        return Err(Error::Domain(r_load));
    }
    let mut terms = m
        .iter()
        .zip(r)
        .map(|(&mi, &ri)| {
            let a = subcell_aux(mi, ri)?;
            Ok((1.0 / (a.r1c * a.k), (1.0 / a.r1c) * (1.0 - 1.0 / a.k)))
        })
        .collect::<Result<Vec<_>>>()?;
    // Summing in a canonical order makes the result exactly invariant under
    // any permutation of identical sub-cells.
    terms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut num = Kahan::default();
    let mut den = Kahan::default();
    for (n, d) in terms {
        num.add(n);
        den.add(d);
    }
    den.add(1.0 / r_load);
    Ok(v_read * num.sum / den.sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn aux_limits_and_substitutions() {
        let r = 37.0;
        let z = subcell_aux(0.0, r).unwrap();
        assert_eq!(z.r1c, r);
        assert!(close(z.r2c, 1.5 * r, 1e-15));
        assert!(close(z.k, 8.0 / 3.0, 1e-15));

        let big = subcell_aux(1e15, r).unwrap();
        assert!(close(big.r1c, 2.0 * r, 1e-12));
        assert!(close(big.r2c, r, 1e-12));
        assert!(close(big.k, 4.0, 1e-12));
        let inf = subcell_aux(f64::INFINITY, r).unwrap();
        assert_eq!((inf.r1c, inf.r2c, inf.k), (2.0 * r, r, 4.0));

        let two = subcell_aux(2.0 * r, r).unwrap();
        assert!(close(two.r1c, 1.5 * r, 1e-15));
        assert!(close(two.r2c, 1.25 * r, 1e-15));
        assert!(close(two.k, 3.2, 1e-15));
    }

    #[test]
    fn aux_domain_errors() {
        assert_eq!(subcell_aux(1.0, 0.0), Err(Error::Domain(0.0)));
        assert_eq!(subcell_aux(1.0, -3.0), Err(Error::Domain(-3.0)));
        assert!(subcell_aux(-1.0, 3.0).is_err());
    }

    #[test]
    fn thevenin_reproduces_the_sum_form() {
        let a = subcell_aux(918.906, 20.0).unwrap();
        let (vth, rth) = a.thevenin(0.1);
        let (m, r) = (918.906, 20.0);
        assert!(close(vth, 0.1 * (3.0 * r + m) / (5.0 * r + 3.0 * m), 1e-14));
        assert!(close(rth, 8.0 * r * (r + m) / (5.0 * r + 3.0 * m), 1e-14));
        let v = generalized_vout(&[m], &[r], 20.0, 0.1).unwrap();
        assert!(close(v, vth * 20.0 / (rth + 20.0), 1e-14));
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn golden_pattern_111() {
        // Exact rational evaluation, rounded to 20 digits.
        let v = closed_form_vout(
            &[918.906, 749.831, 463.077],
            &[20.0, 60.0, 180.0],
            20.0,
            0.1,
        )
        .unwrap();
        assert!(close(v, 0.012801900610479839122, 1e-15), "{v:.20}");
    }

    #[test]
    fn golden_four_subcells() {
        let v = generalized_vout(
            &[1000.0, 2000.0, 3000.0, 4000.0],
            &[20.0, 40.0, 60.0, 80.0],
            20.0,
            0.1,
        )
        .unwrap();
        assert!(close(v, 0.015106601299737772, 1e-14), "{v:.18}");
    }

    #[test]
    fn trivial_limits() {
        let m = [232.068, 918.906, 1537996.116];
        let r = [20.0, 60.0, 180.0];
        assert_eq!(closed_form_vout(&m, &r, 20.0, 0.0).unwrap(), 0.0);
        assert!(closed_form_vout(&m, &r, 1e-12, 0.1).unwrap() < 1e-13);

        let rr = 33.0;
        let v = generalized_vout(&[f64::INFINITY], &[rr], 20.0, 0.1).unwrap();
        let expect = 0.1 * (1.0 / (2.0 * rr * 4.0)) / ((1.0 / (2.0 * rr)) * 0.75 + 1.0 / 20.0);
        assert!(close(v, expect, 1e-15));
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            generalized_vout(&[1.0, 2.0], &[1.0], 1.0, 1.0),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn strictly_decreasing_in_each_memristance() {
        // Dense log grid over the device span at the 27-level resistor set.
        let r = [20.0, 60.0, 180.0];
        let grid: Vec<f64> = (0..=400)
            .map(|i| 232.0 * (1.6e6f64 / 232.0).powf(i as f64 / 400.0))
            .collect();
        let others = [232.068, 918.906, 1537996.116];
        for slot in 0..3 {
            for &o in &others {
                let mut prev = f64::INFINITY;
                for &mv in &grid {
                    let mut m = [o; 3];
                    m[slot] = mv;
                    let v = closed_form_vout(&m, &r, 20.0, 0.1).unwrap();
                    assert!(v < prev, "slot {slot}, M = {mv}");
                    prev = v;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn n3_is_bit_identical_to_general(
            m in prop::array::uniform3(0.0f64..2e6),
            r in prop::array::uniform3(1.0f64..500.0),
            r0 in 1.0f64..500.0,
        ) {
            prop_assert_eq!(
                closed_form_vout(&m, &r, r0, 0.1).unwrap(),
                generalized_vout(&m, &r, r0, 0.1).unwrap()
            );
        }

        #[test]
        fn symmetric_under_permutation_for_equal_r(
            m in prop::array::uniform3(0.0f64..2e6),
            r in 1.0f64..500.0,
            r0 in 1.0f64..500.0,
        ) {
            let rs = [r; 3];
            let base = closed_form_vout(&m, &rs, r0, 0.1).unwrap();
            for p in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let mp = [m[p[0]], m[p[1]], m[p[2]]];
                let v = closed_form_vout(&mp, &rs, r0, 0.1).unwrap();
                prop_assert_eq!(v, base);
            }
        }

        #[test]
        fn output_is_bounded_by_read_voltage(
            m in prop::collection::vec(0.0f64..2e6, 1..6),
            r0 in 1e-3f64..1e6,
            vr in 0.0f64..5.0,
        ) {
            let r = vec![50.0; m.len()];
            let v = generalized_vout(&m, &r, r0, vr).unwrap();
            prop_assert!(v >= 0.0 && v <= vr);
        }
    }
}
