use sap_core::channel::{NetworkParams, Regime};
use sap_core::geometry::BlockageModel;
use sap_core::op_analysis::NumericsConfig;
use sap_core::seed::SeedStream;
use sap_core::simulator::{conditional_op_oracle, OracleConfig};
fn main() {
    let xi = 0.04;
    for (dl, dw) in [(5.0f64, 5.0f64), (3.0, 3.0)] {
     for beta in [0.4f64, 1.0] {
        let p = NetworkParams {
            lambda1: 8e-5, lambda2: 1.6e-2,
            p1: sap_core::units::dbm_to_watts(43.0), p2: sap_core::units::dbm_to_watts(23.0),
            alpha: 2.7, d: 5.0, omega: 2.0*std::f64::consts::PI, gamma: 1e-4, tau: 0.6,
            regime: Regime::Blockage,
            blockage: Some(BlockageModel::new(xi/(dl+dw), dl, dw).unwrap()),
        };
        let r_l = p.los_radius();
        let ocfg = OracleConfig { n_samples: 100_000, main_bins: 40, sample_radius: 400.0, min_bin_count: 1000 };
        let cfg = NumericsConfig::default();
        let curve = conditional_op_oracle(&p, beta, &ocfg, SeedStream::new(1)).unwrap();
        let lo = 0.3*r_l; let hi = 3.5*r_l;
        let mut best = (1e9f64, 0.0f64);
        for k in 0..60 {
            let l = lo + (hi-lo)*k as f64/59.0;
            let mut w = 0.0; let mut g = 0.0;
            for b in curve.bins.iter().filter(|b| b.count >= 1000) {
                let r = sap_core::op_analysis::empty_ball_radius_blockage(b.mean_i(), &p, r_l, &cfg).unwrap();
                let a = sap_core::op_analysis::op_blockage(r, l, &p, beta, &cfg).unwrap().value;
                g += (a - b.p_hat()).abs() * b.count as f64; w += b.count as f64;
            }
            if g/w < best.0 { best = (g/w, l); }
        }
        let l = best.1;
        let mut worst = 0.0f64; let mut nq = 0;
        for b in curve.bins.iter().filter(|b| b.count >= 1000) {
            nq += 1;
            let r = sap_core::op_analysis::empty_ball_radius_blockage(b.mean_i(), &p, r_l, &cfg).unwrap();
            let a = sap_core::op_analysis::op_blockage(r, l, &p, beta, &cfg).unwrap().value;
            worst = worst.max((a - b.p_hat()).abs());
        }
        println!("dims={dl}x{dw} beta={beta}: R_L={r_l:.1} L*={l:.1} mean={:.4} worst={:.4} (nq={nq})", best.0, worst);
     }
    }
}
