use bidomain::ionic::{
    cubic_difference_sides, d_g, d_i_ion, g_gate, gate_source, gating_exact_update, i_ion, IonicModel, IonicParams,
};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = IonicModel> {
    prop::sample::select(IonicModel::ALL.to_vec())
}

fn params() -> impl Strategy<Value = IonicParams> {
    (model(), 0.01f64..0.99, 0.1f64..3.0, 0.1f64..5.0, 0.001f64..2.0)
        .prop_map(|(kind, a, b, kappa, eps)| IonicParams { kind, a, b, kappa, eps })
}

#[test]
fn spec_examples() {
    let p = IonicParams { kind: IonicModel::AlievPanfilov, a: 0.3, b: 1.0, kappa: 2.0, eps: 0.4 };
    assert_eq!(g_gate(&p, 1.3, 0.0), 0.0);
    assert!(d_g(&p, 0.65, 0.0).0.abs() < 1e-15);
    let fhn = IonicParams { kind: IonicModel::FitzHughNagumo, a: 0.2, b: 5.0, kappa: 1.0, eps: 1.0 };
    assert_eq!(d_i_ion(&fhn, 1.7, -0.3).1, 1.0);
}

proptest! {
    #[test]
    fn rm_and_ap_share_the_ionic_current(a in 0.01f64..0.99, b in 0.1f64..3.0, phi in -2.0f64..2.0, w in -2.0f64..2.0) {
        let rm = IonicParams { kind: IonicModel::RogersMcCulloch, a, b, kappa: 1.0, eps: 0.1 };
        let ap = IonicParams { kind: IonicModel::AlievPanfilov, ..rm };
        prop_assert_eq!(i_ion(&rm, phi, w).to_bits(), i_ion(&ap, phi, w).to_bits());
        prop_assert_eq!(d_i_ion(&rm, phi, w), d_i_ion(&ap, phi, w));
    }

    #[test]
    fn fhn_ignores_b(a in 0.01f64..0.99, b in 0.1f64..3.0, phi in -2.0f64..2.0, w in -2.0f64..2.0) {
        let p = IonicParams { kind: IonicModel::FitzHughNagumo, a, b, kappa: 1.0, eps: 0.1 };
        let q = IonicParams { b: 1.0, ..p };
        prop_assert_eq!(i_ion(&p, phi, w), i_ion(&q, phi, w));
        prop_assert_eq!(d_i_ion(&p, phi, w), d_i_ion(&q, phi, w));
    }

    #[test]
    fn derivatives_match_central_differences(p in params(), phi in -2.0f64..2.0, w in -2.0f64..2.0) {
        let h = 1e-5;
        let (ip, iw) = d_i_ion(&p, phi, w);
        let (gp, gw) = d_g(&p, phi, w);
        let fd_ip = (i_ion(&p, phi + h, w) - i_ion(&p, phi - h, w)) / (2.0 * h);
        let fd_iw = (i_ion(&p, phi, w + h) - i_ion(&p, phi, w - h)) / (2.0 * h);
        let fd_gp = (g_gate(&p, phi + h, w) - g_gate(&p, phi - h, w)) / (2.0 * h);
        let fd_gw = (g_gate(&p, phi, w + h) - g_gate(&p, phi, w - h)) / (2.0 * h);
        for (a, b) in [(ip, fd_ip), (iw, fd_iw), (gp, fd_gp), (gw, fd_gw)] {
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn cubic_difference_identity(phi1 in -3.0f64..3.0, phi2 in -3.0f64..3.0, a in 0.0f64..1.0) {
        let (l, r) = cubic_difference_sides(phi1, phi2, a);
        prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()) + 1e-14);
    }

    #[test]
    fn substepping_constant_potential_matches_one_step(p in params(), w0 in -2.0f64..2.0, phi in -2.0f64..2.0, dt in 0.01f64..2.0) {
        let one = gating_exact_update(&p, w0, phi, phi, dt);
        let mut w = w0;
        let n = 64;
        for _ in 0..n {
            w = gating_exact_update(&p, w, phi, phi, dt / n as f64);
        }
        prop_assert!((w - one).abs() <= 1e-12 * (1.0 + one.abs()));
        // Closed form of the linear ODE with constant source.
        let exact = gate_source(&p, phi) + (w0 - gate_source(&p, phi)) * (-p.eps * dt).exp();
        prop_assert!((one - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }
}
