//! Source model, then tomography on 2434 simulated trials, then the bound of the
//! reconstruction, driven through the command functions. Files land in a temp dir.

use spinmetro::cli::{self, RunConfig};

fn main() -> spinmetro::Result<()> {
    let dir = std::env::temp_dir().join("spinmetro-end-to-end");
    let mut cfg = RunConfig { out: dir.clone(), ..RunConfig::default() };
    cfg.source.t = 0.9;
    cfg.source.tau = 0.9;
    cfg.qcrb.n_max = 4;

    let sim = cli::cmd_simulate(&cfg, Some(0.13))?;
    println!("source fidelity {:.3}", sim.fidelity);
    let tomo = cli::cmd_tomo(&cfg, Some(&dir.join("density.json")), None)?;
    println!("reconstruction fidelity {:.3} +- {:.3}", tomo.fidelity, tomo.mc.fidelity.std);
    let q = cli::cmd_qcrb(&cfg, &[], Some(&dir.join("counts.csv")))?;
    let p = &q.points[0];
    let mc = p.sqcrb_mc.as_ref().expect("counts input carries MC errors");
    println!("s-QCRB {:.3} +- {:.3}, dominant eigenstate {:.3}", p.sqcrb, mc.std, p.dominant_sqcrb);
    println!("sequential N00N at N = 4 would need 27/40 = {:.3}", 27.0 / 40.0);
    println!("outputs in {}", dir.display());
    Ok(())
}
