//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use qswap::circuits::{build_network, dft_matrix, AncillaKind, NetworkConfig};
use qswap::cli::{cmd_scan, cmd_sweep};
use qswap::detection::{click_probability, herald_set, joint_outcome_distribution, vacuum_probability};
use qswap::gaussian::GaussianState;
use qswap::keyrate::evaluate;
use qswap::optimizer::{grid_scan, log_grid, noise_sweep, Bounds};
use qswap::validation::oracle_suite;
use qswap::C64;

type Outcome = Result<String, String>;

fn config(d: usize, k: usize, kind: AncillaKind) -> NetworkConfig {
    NetworkConfig::new(d, k, kind)
}

fn fig_configs() -> Vec<(&'static str, NetworkConfig)> {
    vec![
        ("d3 hsps", config(3, 3, AncillaKind::Hsps)),
        ("d3 wcs", config(3, 3, AncillaKind::Wcs)),
        ("d4 k4", config(4, 4, AncillaKind::Tms)),
        ("d4 k2", config(4, 2, AncillaKind::Tms)),
    ]
}

fn analytic() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for a in [0.3, 1.0] {
        let st = GaussianState::vacuum(1).unwrap().displace(0, C64::new(a, 0.0)).unwrap();
        worst = worst.max((vacuum_probability(&st, &[0]).unwrap() - (-a * a).exp()).abs());
    }
    for r in [0.2f64, 0.5] {
        let st = GaussianState::vacuum(1).unwrap().single_mode_squeeze(0, r).unwrap();
        worst = worst.max((vacuum_probability(&st, &[0]).unwrap() - 1.0 / r.cosh()).abs());
    }
    for s in [0.1f64, 0.3] {
        let st = GaussianState::vacuum(2).unwrap().two_mode_squeeze(0, 1, s).unwrap();
        worst = worst.max((vacuum_probability(&st, &[0, 1]).unwrap() - s.cosh().powi(-2)).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("max deviation {worst:.2e}, {secs:.3} s");
    if worst < 1e-12 && secs < 1.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle() -> Outcome {
    let r = oracle_suite(200, 2024, 12, 15).map_err(|e| e.to_string())?;
    let msg = format!(
        "{} networks, {} patterns, max |Δp| {:.2e}, max |Σp − 1| {:.2e}, truncation {:.2e}, {:.1} s",
        r.networks, r.patterns, r.max_pattern_deviation, r.max_sum_deviation, r.max_truncation, r.seconds
    );
    if r.networks >= 200 && r.max_pattern_deviation < 1e-8 && r.max_sum_deviation < 1e-9 && r.seconds < 300.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn heralds() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (d, want) in [(2, 2), (3, 3), (4, 4)] {
        let hs = herald_set(d, Default::default()).map_err(|e| e.to_string())?;
        let worst = hs.perfect.iter().map(|h| h.corrected_fidelity.min(h.fidelity)).fold(1.0, f64::min);
        ok &= hs.perfect.len() == want && worst >= 1.0 - 1e-6;
        parts.push(format!("d={d}: {} heralds, min fidelity {worst:.9}", hs.perfect.len()));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    let msg = format!("{}, {secs:.1} s", parts.join("; "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ideal_limit() -> Outcome {
    let t = Instant::now();
    let cases = [
        config(2, 2, AncillaKind::Wcs),
        config(3, 3, AncillaKind::Hsps),
        config(4, 4, AncillaKind::Tms),
        config(4, 2, AncillaKind::Tms),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for mut c in cases {
        c.s = 0.01;
        c.set_ancilla_param(0.01);
        let r = evaluate(&c).map_err(|e| e.to_string())?;
        let cap = (c.subspace() as f64).log2();
        ok &= (r.conditional_rate - cap).abs() < 0.02;
        parts.push(format!("({},{}) {:.5}/{cap:.5}", c.d, c.subspace(), r.conditional_rate));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    let msg = format!("{}, {secs:.1} s", parts.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn surfaces() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut best_s = Vec::new();
    for (name, c) in fig_configs() {
        let b = Bounds::default_for(c.ancilla);
        let surf = grid_scan(&c, &log_grid(b.s.0, b.s.1, 12), &log_grid(b.ancilla.0, b.ancilla.1, 12))
            .map_err(|e| e.to_string())?;
        let (i, j) = surf.argmax;
        let cell = &surf.cells[i][j];
        ok &= surf.max_bits() > surf.boundary_max();
        best_s.push(cell.s);
        parts.push(format!(
            "{name}: max {:.2e} at s={:.3} anc={:.3} (edge {:.2e})",
            surf.max_bits(),
            cell.s,
            cell.ancilla_param,
            surf.boundary_max()
        ));
    }
    ok &= best_s[3] > best_s[2];
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn noise() -> Outcome {
    let t = Instant::now();
    let thetas: Vec<f64> = (0..12).map(|i| i as f64 * PI / 64.0).collect();
    let sweep = |c: &NetworkConfig| noise_sweep(c, &thetas, &Bounds::default_for(c.ancilla), true).map_err(|e| e.to_string());
    let d2 = sweep(&config(2, 2, AncillaKind::Wcs))?;
    let others: Vec<_> = fig_configs().into_iter().map(|(n, c)| sweep(&c).map(|r| (n, r))).collect::<Result<_, _>>()?;
    let top = d2[0].bits_per_round;
    let a = others.iter().all(|(_, r)| top > r[0].bits_per_round);
    let k2 = &others[3].1;
    let witness = thetas.iter().enumerate().find(|&(i, _)| d2[i].bits_per_round == 0.0 && k2[i].bits_per_round > 0.0);
    let secs = t.elapsed().as_secs_f64();
    let at0: Vec<String> = others.iter().map(|(n, r)| format!("{n} {:.2e}", r[0].bits_per_round)).collect();
    let msg = format!(
        "θ=0: d2 {top:.2e} vs {}; {}; {secs:.0} s",
        at0.join(", "),
        match witness {
            Some((i, th)) => format!("θ={th:.4}: d2 0, d4 k2 {:.2e}", k2[i].bits_per_round),
            None => "no θ with d2 = 0 < d4 k2".into(),
        }
    );
    if a && witness.is_some() && secs < 7200.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn performance() -> Outcome {
    let n = 24;
    let mut st = GaussianState::vacuum(n).unwrap();
    for i in 0..n / 2 {
        st = st.two_mode_squeeze(2 * i, 2 * i + 1, 0.8).unwrap();
    }
    let all: Vec<usize> = (0..n).collect();
    st = st.interfere(&dft_matrix(n).unwrap(), &all).unwrap();
    let t = Instant::now();
    let p = click_probability(&st, &all[..20], &all[20..]).map_err(|e| e.to_string())?;
    let clicks = t.elapsed().as_secs_f64();

    let mut c = config(4, 4, AncillaKind::Tms);
    c.s = 0.3;
    c.xi = 0.3;
    let net = build_network(&c).map_err(|e| e.to_string())?;
    let hs = herald_set(4, Default::default()).map_err(|e| e.to_string())?;
    let t = Instant::now();
    joint_outcome_distribution(&net, &hs.perfect[0]).map_err(|e| e.to_string())?;
    let joint = t.elapsed().as_secs_f64();
    let msg = format!("20 clicks on 24 modes p={p:.3e} in {clicks:.1} s; d=4 joint table {joint:.3} s");
    if clicks < 300.0 && joint < 60.0 && p > 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        r#"{
  "network": { "d": 4, "k": 2, "ancilla": "tms" },
  "scan": { "s_grid": { "logspace": [0.01, 1.0, 4] }, "ancilla_grid": { "logspace": [0.01, 1.0, 4] } },
  "sweep": {
    "thetas": { "linspace": [0.0, 0.2, 3] },
    "series": [ { "d": 2, "ancilla": "wcs" }, { "d": 4, "k": 2, "ancilla": "tms" } ],
    "coarse": 6,
    "rounds": 2
  }
}
"#,
    )
    .map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for tag in ["a", "b"] {
        let out = tmp.path().join(tag);
        let mut files = cmd_scan(&cfg, &out.join("scan")).map_err(|e| e.to_string())?;
        files.extend(cmd_sweep(&cfg, &out.join("sweep")).map_err(|e| e.to_string())?);
        let mut data = Vec::new();
        for f in files {
            let name = f.strip_prefix(&out).unwrap().to_string_lossy().into_owned();
            if name.ends_with("manifest.json") {
                // timestamps differ between runs by design
                let mut m: serde_json::Value = serde_json::from_slice(&fs::read(&f).unwrap()).unwrap();
                let o = m.as_object_mut().unwrap();
                o.remove("started_unix");
                o.remove("finished_unix");
                data.push((name, serde_json::to_vec(&m).unwrap()));
            } else {
                data.push((name, fs::read(&f).map_err(|e| e.to_string())?));
            }
        }
        runs.push(data);
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    let msg = format!("{} outputs compared: {}", names.len(), names.join(", "));
    if runs[0] == runs[1] && !names.is_empty() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("analytic vacuum overlaps", analytic),
        ("Fock oracle equivalence", oracle),
        ("herald discovery", heralds),
        ("ideal-limit key rate", ideal_limit),
        ("interior optimum of rate surfaces", surfaces),
        ("crosstalk robustness", noise),
        ("click-probability performance", performance),
        ("deterministic outputs", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(m) => println!("PASS {} {name}: {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL {} {name}: {m}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
