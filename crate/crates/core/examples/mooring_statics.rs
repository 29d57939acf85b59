//! Lets a mooring line settle between a fixed anchor and fairlead and prints
//! its profile, touchdown point and fairlead load.
//!
//! `cargo run --release --example mooring_statics -- [span_m] [settle_s]`

use fanet::sim::{FlumeConfig, MooringLine, MooringState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let span: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1.2);
    let settle: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(20.0);

    let spec = FlumeConfig::default().line_spec()?;
    let anchor = [0.0, spec.z_bot];
    let fairlead = [span, -0.1];
    let mut line = MooringLine::new(spec.clone(), MooringState::catenary(&spec, anchor, fairlead)?)?;
    let dt = 1e-3 / spec.substeps(1e-3, 1.0) as f64;
    for k in 0..(settle / dt).round() as usize {
        line.step(k as f64 * dt, dt, |_| (fairlead, [0.0; 2]))?;
    }

    let f = line.forces()?;
    let on_bed = line.state.r.iter().filter(|p| p[1] <= spec.z_bot).count();
    println!("node       x [m]      z [m]    strain");
    for (i, p) in line.state.r.iter().enumerate() {
        let strain = f.strain.get(i).map_or(String::new(), |e| format!("{e:.2e}"));
        println!("{i:>4}  {:>9.4}  {:>9.4}  {strain:>9}", p[0], p[1]);
    }
    let pull = f.fairlead_force();
    let seg = spec.segment_length();
    println!("{on_bed} nodes on the seabed; about {:.3} m suspended", spec.length - seg * on_bed.saturating_sub(1) as f64);
    println!("fairlead load: {:.4} N horizontal, {:.4} N vertical", pull[0], pull[1]);
    println!("submerged weight {:.4} N/m", spec.submerged_weight_per_len());
    Ok(())
}
