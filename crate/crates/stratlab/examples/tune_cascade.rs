// scratch harness for tuning the cascade initial condition
use stratlab::output;
use stratlab::scenarios;
use stratlab::transport::{run, IcShape};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let power: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let t_end: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(50.0);
    let model = args.get(3).cloned().unwrap_or_else(|| "ipm".into());

    let preset = scenarios::find(&format!("{model}-baseline")).unwrap();
    let mut cfg = preset.config;
    cfg.t_end = t_end;
    cfg.ic_shape = IcShape::Cascade { modes: scenarios::ipm_cascade(power) };
    let out = run(&cfg).unwrap();
    let meta = output::Metadata::new("tune", 0);
    let summary = output::build_summary(&meta, &cfg, &preset.expected, &out);
    println!(
        "power={power} E-fit {:?} Kavg-fit {:?} resid_e {:.3e} resid_k {:.3e} drift {:.3e}",
        summary.exponents.e, summary.exponents.k_avg, summary.resid_e_max,
        summary.resid_k_max, summary.rearrangement_drift_final
    );
    let r = &out.records;
    for frac in [0, 2, 10, 20, 30, 40, 49] {
        let m = ((frac as f64) / cfg.sample_dt) as usize;
        if m < r.len() {
            println!("  t={:5.1} E={:.4e} K={:.4e}", r[m].t, r[m].e, r[m].k);
        }
    }
    // residual profile: worst resid_e per time decade
    let mut bins: Vec<(f64, f64, f64)> = Vec::new(); // (t_lo, worst, k_at_worst)
    for lo in [0.0, 1.0, 5.0, 10.0, 20.0, 30.0, 40.0] {
        let hi = match lo as i64 { 0 => 1.0, 1 => 5.0, 5 => 10.0, _ => lo + 10.0 };
        let mut worst = (0.0, 0.0);
        for m in 1..r.len() - 1 {
            if r[m].t < lo || r[m].t >= hi || r[m].k <= 1e-12 { continue; }
            let dt = r[m + 1].t - r[m - 1].t;
            let res = ((r[m + 1].e - r[m - 1].e) / dt + r[m].k).abs() / r[m].k.max(1e-14);
            if res > worst.0 { worst = (res, r[m].k); }
        }
        bins.push((lo, worst.0, worst.1));
    }
    for (lo, w, k) in bins {
        println!("  resid_e in [{lo},..): {w:.3e} (K {k:.2e})");
    }
}
