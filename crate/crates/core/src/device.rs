//! MOSFET compact model.
//!
//! A level-1 square law (triode/saturation with channel-length modulation)
//! joined to an exponential subthreshold branch, with body effect and
//! first-order temperature dependence of the threshold voltage. The model is
//! total over all real bias points: negative `vds` is handled by
//! source/drain swap and PMOS devices by polarity reflection. Every
//! evaluation returns the drain current together with its analytic partial
//! derivatives, which feed the Newton solver's Jacobian stamps.

use thiserror::Error;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// 0 °C in kelvin.
pub const ZERO_CELSIUS_IN_KELVIN: f64 = 273.15;
/// Reference temperature for model cards, °C.
pub const NOMINAL_TEMPERATURE_C: f64 = 27.0;

/// Floor for the body-effect square-root argument; keeps the threshold
/// expression total when `vbs` approaches `phi`.
const BODY_ARG_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("model parameter {name} = {value} violates {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
}

/// Channel polarity of a MOSFET model card.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Nmos,
    Pmos,
}

impl std::fmt::Display for Polarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarity::Nmos => write!(f, "nmos"),
            Polarity::Pmos => write!(f, "pmos"),
        }
    }
}

/// MOSFET model card.
///
/// `vto` is the zero-bias threshold at 27 °C (negative for PMOS), `kp` the
/// process transconductance, `lambda` the channel-length modulation, `n_sub`
/// the subthreshold slope factor, `i0` the subthreshold prefactor per unit
/// W/L, `gamma`/`phi` the body-effect pair and `tcv` the linear threshold
/// temperature coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub polarity: Polarity,
    pub vto: f64,
    pub kp: f64,
    pub lambda: f64,
    pub n_sub: f64,
    pub i0: f64,
    pub gamma: f64,
    pub phi: f64,
    pub tcv: f64,
}

impl DeviceParams {
    /// Default NMOS card. `i0` is calibrated once so the default 6T cell
    /// leaks in the low tens of picoamperes at 1 V / 27 °C, then frozen.
    pub fn default_nmos() -> Self {
        DeviceParams {
            polarity: Polarity::Nmos,
            vto: 0.40,
            kp: 200e-6,
            lambda: 0.1,
            n_sub: 1.5,
            i0: 6.5e-8,
            gamma: 0.2,
            phi: 0.7,
            tcv: 1.0e-3,
        }
    }

    /// Default PMOS card; `kp` and `i0` scale with the hole mobility.
    pub fn default_pmos() -> Self {
        DeviceParams {
            polarity: Polarity::Pmos,
            vto: -0.40,
            kp: 80e-6,
            lambda: 0.1,
            n_sub: 1.5,
            i0: 2.6e-8,
            gamma: 0.2,
            phi: 0.7,
            tcv: 1.0e-3,
        }
    }

    /// Check the sign constraints on the card.
    pub fn validate(&self) -> Result<(), DeviceError> {
        let checks: [(&str, f64, bool, &str); 6] = [
            ("kp", self.kp, self.kp > 0.0, "kp > 0"),
            ("i0", self.i0, self.i0 > 0.0, "i0 > 0"),
            ("phi", self.phi, self.phi > 0.0, "phi > 0"),
            ("lambda", self.lambda, self.lambda >= 0.0, "lambda >= 0"),
            ("n", self.n_sub, self.n_sub >= 1.0, "n >= 1"),
            ("gamma", self.gamma, self.gamma >= 0.0, "gamma >= 0"),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok {
                return Err(DeviceError::InvalidParameter { name, value, constraint });
            }
        }
        if self.tcv < 0.0 {
            return Err(DeviceError::InvalidParameter {
                name: "tcv",
                value: self.tcv,
                constraint: "tcv >= 0",
            });
        }
        Ok(())
    }
}

/// Terminal bias of a single device. Voltages are gate/drain/bulk relative
/// to source; temperature is ambient in °C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint {
    pub vgs: f64,
    pub vds: f64,
    pub vbs: f64,
    pub temperature: f64,
}

/// Drain current and its analytic partial derivatives at a bias point.
///
/// `id` is the conventional drain-to-source current after polarity
/// reflection; `gm`, `gds` and `gmb` are ∂id/∂vgs, ∂id/∂vds and ∂id/∂vbs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceEval {
    pub id: f64,
    pub gm: f64,
    pub gds: f64,
    pub gmb: f64,
}

/// kT/q in volts for an ambient temperature in °C.
pub fn thermal_voltage(temperature: f64) -> f64 {
    debug_assert!(temperature > -ZERO_CELSIUS_IN_KELVIN);
    BOLTZMANN * (temperature + ZERO_CELSIUS_IN_KELVIN) / ELEMENTARY_CHARGE
}

/// Threshold voltage including body effect and temperature shift.
///
/// NMOS: `vth = vto + gamma (sqrt(phi - vbs) - sqrt(phi)) - tcv (T - 27)`.
/// PMOS is evaluated by polarity reflection, so the returned value stays
/// negative for an enhancement PMOS.
pub fn threshold_voltage(params: &DeviceParams, vbs: f64, temperature: f64) -> f64 {
    match params.polarity {
        Polarity::Nmos => vth_and_body_slope(params, params.vto, vbs, temperature).0,
        Polarity::Pmos => -vth_and_body_slope(params, -params.vto, -vbs, temperature).0,
    }
}

/// NMOS-frame threshold and its sensitivity to vbs. The square-root argument
/// is frozen at `BODY_ARG_FLOOR` once `phi - vbs` drops below it, which
/// zeroes the slope there.
fn vth_and_body_slope(params: &DeviceParams, vto_eq: f64, vbs: f64, temperature: f64) -> (f64, f64) {
    let arg = params.phi - vbs;
    let (arg, slope_active) = if arg > BODY_ARG_FLOOR {
        (arg, true)
    } else {
        (BODY_ARG_FLOOR, false)
    };
    let vth = vto_eq + params.gamma * (arg.sqrt() - params.phi.sqrt())
        - params.tcv * (temperature - NOMINAL_TEMPERATURE_C);
    let dvth_dvbs = if slope_active {
        -params.gamma / (2.0 * arg.sqrt())
    } else {
        0.0
    };
    (vth, dvth_dvbs)
}

/// Evaluate drain current and partial derivatives for a device of width `w`
/// and length `l` (meters) at `bias`.
pub fn drain_current(params: &DeviceParams, w: f64, l: f64, bias: BiasPoint) -> DeviceEval {
    debug_assert!(w > 0.0 && l > 0.0);
    match params.polarity {
        Polarity::Nmos => eval_nmos_frame(params, params.vto, w, l, bias),
        Polarity::Pmos => {
            let reflected = BiasPoint {
                vgs: -bias.vgs,
                vds: -bias.vds,
                vbs: -bias.vbs,
                temperature: bias.temperature,
            };
            let e = eval_nmos_frame(params, -params.vto, w, l, reflected);
            // Current is odd under reflection, the conductances are even.
            DeviceEval { id: -e.id, gm: e.gm, gds: e.gds, gmb: e.gmb }
        }
    }
}

/// NMOS-frame evaluation for arbitrary vds; negative vds swaps source and
/// drain (the channel is symmetric) and maps the derivatives back.
fn eval_nmos_frame(params: &DeviceParams, vto_eq: f64, w: f64, l: f64, bias: BiasPoint) -> DeviceEval {
    if bias.vds >= 0.0 {
        return eval_forward(params, vto_eq, w, l, bias);
    }
    let swapped = BiasPoint {
        vgs: bias.vgs - bias.vds,
        vds: -bias.vds,
        vbs: bias.vbs - bias.vds,
        temperature: bias.temperature,
    };
    let e = eval_forward(params, vto_eq, w, l, swapped);
    // id(vgs,vds,vbs) = -f(vgs-vds, -vds, vbs-vds); chain rule below.
    DeviceEval {
        id: -e.id,
        gm: -e.gm,
        gds: e.gm + e.gds + e.gmb,
        gmb: -e.gmb,
    }
}

/// Forward (vds >= 0) NMOS-frame branches.
///
/// Subthreshold (vov <= 0): `i0 (w/l) exp(vov / (n vT)) (1 - exp(-vds/vT))`.
/// Above threshold the square law rides on top of the subthreshold branch
/// frozen at vov = 0, so the two regions join continuously.
fn eval_forward(params: &DeviceParams, vto_eq: f64, w: f64, l: f64, bias: BiasPoint) -> DeviceEval {
    let wl = w / l;
    let vt = thermal_voltage(bias.temperature);
    let nvt = params.n_sub * vt;
    let (vth, dvth_dvbs) = vth_and_body_slope(params, vto_eq, bias.vbs, bias.temperature);
    let vov = bias.vgs - vth;

    // Drain factor of the subthreshold branch and its vds derivative.
    let em = (-bias.vds / vt).exp();
    let dfac = 1.0 - em;
    let ddfac_dvds = em / vt;

    if vov <= 0.0 {
        let ex = (vov / nvt).exp();
        let id = params.i0 * wl * ex * dfac;
        let gm = id / nvt;
        let gds = params.i0 * wl * ex * ddfac_dvds;
        let gmb = -dvth_dvbs * gm;
        return DeviceEval { id, gm, gds, gmb };
    }

    let beta = params.kp * wl;
    let clm = 1.0 + params.lambda * bias.vds;
    let (mut id, gm, mut gds);
    if bias.vds < vov {
        // Triode.
        let q = vov * bias.vds - 0.5 * bias.vds * bias.vds;
        id = beta * q * clm;
        gm = beta * bias.vds * clm;
        gds = beta * (vov - bias.vds) * clm + beta * q * params.lambda;
    } else {
        // Saturation.
        id = 0.5 * beta * vov * vov * clm;
        gm = beta * vov * clm;
        gds = 0.5 * beta * vov * vov * params.lambda;
    }
    // Subthreshold floor at vov = 0 keeps the join C0.
    id += params.i0 * wl * dfac;
    gds += params.i0 * wl * ddfac_dvds;
    let gmb = -dvth_dvbs * gm;
    DeviceEval { id, gm, gds, gmb }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nmos_fixture(i0: f64) -> DeviceParams {
        DeviceParams {
            polarity: Polarity::Nmos,
            vto: 0.4,
            kp: 200e-6,
            lambda: 0.0,
            n_sub: 1.5,
            i0,
            gamma: 0.2,
            phi: 0.7,
            tcv: 1.0e-3,
        }
    }

    #[test]
    fn thermal_voltage_at_nominal() {
        // kT/q at 300.15 K.
        assert_abs_diff_eq!(thermal_voltage(27.0), 2.586492578633e-2, epsilon = 1e-6);
    }

    #[test]
    fn thermal_voltage_linear_in_kelvin() {
        let ratio = thermal_voltage(127.0) / thermal_voltage(27.0);
        assert_relative_eq!(ratio, 400.15 / 300.15, max_relative = 1e-12);
    }

    #[test]
    fn threshold_identity_at_reference() {
        let p = nmos_fixture(1e-9);
        assert_eq!(threshold_voltage(&p, 0.0, 27.0), p.vto);
        let pm = DeviceParams::default_pmos();
        assert_eq!(threshold_voltage(&pm, 0.0, 27.0), pm.vto);
    }

    #[test]
    fn threshold_temperature_shift() {
        let p = nmos_fixture(1e-9);
        assert_relative_eq!(threshold_voltage(&p, 0.0, 127.0), 0.300, max_relative = 1e-12);
    }

    #[test]
    fn threshold_body_effect() {
        // 0.4 + 0.2 (sqrt(1.0) - sqrt(0.7))
        let p = nmos_fixture(1e-9);
        assert_abs_diff_eq!(threshold_voltage(&p, -0.3, 27.0), 0.432667994693, epsilon = 1e-4);
    }

    #[test]
    fn saturation_hand_value() {
        // 1/2 * 200u * 2 * (1.0 - 0.4)^2 = 72.0 uA; i0 chosen negligible so the
        // square-law branch is isolated.
        let p = nmos_fixture(1e-30);
        let e = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs: 1.0, vds: 1.0, vbs: 0.0, temperature: 27.0 });
        assert_relative_eq!(e.id, 72.0e-6, max_relative = 1e-12);
    }

    #[test]
    fn triode_hand_value() {
        // 200u * 2 * (0.6*0.2 - 0.02) = 40.0 uA.
        let p = nmos_fixture(1e-30);
        let e = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs: 1.0, vds: 0.2, vbs: 0.0, temperature: 27.0 });
        assert_relative_eq!(e.id, 40.0e-6, max_relative = 1e-12);
    }

    #[test]
    fn subthreshold_hand_value() {
        // 150n * 2 * exp(-0.4 / (1.5 vT)) * (1 - exp(-1/vT)); frozen from the
        // closed-form evaluation.
        let p = nmos_fixture(150e-9);
        let e = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs: 0.0, vds: 1.0, vbs: 0.0, temperature: 27.0 });
        assert_relative_eq!(e.id, 9.989809472e-12, max_relative = 1e-7);
    }

    #[test]
    fn zero_vds_zero_current() {
        let p = nmos_fixture(150e-9);
        for vgs in [-0.5, 0.0, 0.3, 0.8, 1.2] {
            let e = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs, vds: 0.0, vbs: 0.0, temperature: 27.0 });
            assert_eq!(e.id, 0.0);
        }
    }

    #[test]
    fn continuity_at_region_joins() {
        let p = nmos_fixture(6.5e-8);
        let w = 90e-9;
        let l = 45e-9;
        let tol = |id: f64| (1e-12 * id.abs()).max(1e-12);
        // Triode/saturation join at vds = vov.
        for vgs in [0.6, 0.9, 1.2] {
            let vov = vgs - p.vto;
            let lo = drain_current(&p, w, l, BiasPoint { vgs, vds: vov - 1e-9, vbs: 0.0, temperature: 27.0 });
            let hi = drain_current(&p, w, l, BiasPoint { vgs, vds: vov + 1e-9, vbs: 0.0, temperature: 27.0 });
            assert!((lo.id - hi.id).abs() <= tol(hi.id), "triode/sat jump at vgs={vgs}");
        }
        // Subthreshold/strong-inversion join at vov = 0.
        for vds in [0.05, 0.4, 1.0] {
            let lo = drain_current(&p, w, l, BiasPoint { vgs: p.vto - 1e-9, vds, vbs: 0.0, temperature: 27.0 });
            let hi = drain_current(&p, w, l, BiasPoint { vgs: p.vto + 1e-9, vds, vbs: 0.0, temperature: 27.0 });
            assert!((lo.id - hi.id).abs() <= tol(hi.id), "subthreshold jump at vds={vds}");
        }
    }

    /// Central finite difference over one bias component.
    fn fd(params: &DeviceParams, w: f64, l: f64, bias: BiasPoint, which: usize) -> f64 {
        let h = 1e-6;
        let mut up = bias;
        let mut dn = bias;
        match which {
            0 => {
                up.vgs += h;
                dn.vgs -= h;
            }
            1 => {
                up.vds += h;
                dn.vds -= h;
            }
            _ => {
                up.vbs += h;
                dn.vbs -= h;
            }
        }
        (drain_current(params, w, l, up).id - drain_current(params, w, l, dn).id) / (2.0 * h)
    }

    /// True when the bias sits within `margin` of a branch boundary, where a
    /// central difference straddles a derivative kink and is not a valid
    /// oracle.
    fn near_branch_boundary(params: &DeviceParams, bias: BiasPoint, margin: f64) -> bool {
        let refl = match params.polarity {
            Polarity::Nmos => bias,
            Polarity::Pmos => BiasPoint {
                vgs: -bias.vgs,
                vds: -bias.vds,
                vbs: -bias.vbs,
                temperature: bias.temperature,
            },
        };
        let (fwd, vto_eq) = match params.polarity {
            Polarity::Nmos => (refl, params.vto),
            Polarity::Pmos => (refl, -params.vto),
        };
        let b = if fwd.vds >= 0.0 {
            fwd
        } else {
            BiasPoint { vgs: fwd.vgs - fwd.vds, vds: -fwd.vds, vbs: fwd.vbs - fwd.vds, temperature: fwd.temperature }
        };
        let (vth, _) = vth_and_body_slope(params, vto_eq, b.vbs, b.temperature);
        let vov = b.vgs - vth;
        vov.abs() < margin || (b.vds - vov).abs() < margin || (params.phi - b.vbs).abs() < margin
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cards = [DeviceParams::default_nmos(), DeviceParams::default_pmos()];
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut checked = 0;
        while checked < 1000 {
            let card = &cards[rng.random_range(0..2)];
            let bias = BiasPoint {
                vgs: rng.random_range(-1.2..1.2),
                vds: rng.random_range(-1.2..1.2),
                vbs: rng.random_range(-1.2..1.2),
                temperature: [-40.0, 27.0, 125.0][rng.random_range(0..3)],
            };
            if near_branch_boundary(card, bias, 1e-5) {
                continue;
            }
            let w = rng.random_range(45e-9..400e-9);
            let l = 45e-9;
            let e = drain_current(card, w, l, bias);
            for (which, analytic) in [(0usize, e.gm), (1, e.gds), (2, e.gmb)] {
                let numeric = fd(card, w, l, bias, which);
                let err = (analytic - numeric).abs();
                let tol = 1e-6 * analytic.abs().max(numeric.abs()) + 1e-12;
                assert!(
                    err <= tol,
                    "partial {which} mismatch at {bias:?}: analytic {analytic:e} vs fd {numeric:e}"
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn monotone_in_vgs_and_vds() {
        let p = DeviceParams::default_nmos();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let vds = rng.random_range(0.0..1.2);
            let vbs = rng.random_range(-1.0..0.0);
            let v1 = rng.random_range(-0.5..1.2);
            let v2 = v1 + rng.random_range(0.0..0.4);
            let id1 = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs: v1, vds, vbs, temperature: 27.0 }).id;
            let id2 = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs: v2, vds, vbs, temperature: 27.0 }).id;
            assert!(id2 >= id1, "id not nondecreasing in vgs");
            let vgs = rng.random_range(-0.5..1.2);
            let d1 = rng.random_range(0.0..1.2);
            let d2 = d1 + rng.random_range(0.0..0.4);
            let ia = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs, vds: d1, vbs, temperature: 27.0 }).id;
            let ib = drain_current(&p, 90e-9, 45e-9, BiasPoint { vgs, vds: d2, vbs, temperature: 27.0 }).id;
            assert!(ib >= ia, "id not nondecreasing in vds");
        }
    }

    #[test]
    fn polarity_reflection_symmetry() {
        let n = DeviceParams::default_nmos();
        let p = DeviceParams {
            polarity: Polarity::Pmos,
            vto: -n.vto,
            ..n.clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let bias = BiasPoint {
                vgs: rng.random_range(-1.2..1.2),
                vds: rng.random_range(-1.2..1.2),
                vbs: rng.random_range(-1.2..1.2),
                temperature: 27.0,
            };
            let en = drain_current(&n, 90e-9, 45e-9, BiasPoint { vgs: -bias.vgs, vds: -bias.vds, vbs: -bias.vbs, ..bias });
            let ep = drain_current(&p, 90e-9, 45e-9, bias);
            assert_relative_eq!(ep.id, -en.id, max_relative = 1e-12, epsilon = 1e-30);
            assert_relative_eq!(ep.gm, en.gm, max_relative = 1e-12, epsilon = 1e-30);
            assert_relative_eq!(ep.gds, en.gds, max_relative = 1e-12, epsilon = 1e-30);
            assert_relative_eq!(ep.gmb, en.gmb, max_relative = 1e-12, epsilon = 1e-30);
        }
    }

    #[test]
    fn subthreshold_grows_with_temperature() {
        let p = DeviceParams::default_nmos();
        let bias = |t| BiasPoint { vgs: 0.0, vds: 1.0, vbs: 0.0, temperature: t };
        let mut prev = 0.0;
        for t in [-40.0, 0.0, 27.0, 85.0, 125.0] {
            let id = drain_current(&p, 90e-9, 45e-9, bias(t)).id;
            assert!(id > prev, "subthreshold current not increasing at {t} C");
            prev = id;
        }
    }
}
