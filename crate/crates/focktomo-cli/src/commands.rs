//! The simulate / reconstruct / report pipeline.

use crate::config::{method_name, Method, RunConfig};
use crate::formats;
use focktomo::model::{reduce, Conditioning, ReducedParams};
use focktomo::sim::{sample, PhaseSchedule, QuadratureRecord, SimConfig};
use focktomo::tomography::{
    critical_values_model, maxlik_reconstruct, moment_estimate, radon_reconstruct, MaxLikConfig,
    QuadratureHistogram,
};
use std::path::{Path, PathBuf};

pub type CmdResult = Result<(), String>;

const CHANNELS: [Conditioning; 3] = [
    Conditioning::None,
    Conditioning::Single,
    Conditioning::Coincidence,
];

fn samples_path(out: &Path, channel: Conditioning) -> PathBuf {
    out.join(format!("samples_{}.csv", formats::channel_name(channel)))
}

pub fn cmd_simulate(cfg: &RunConfig) -> CmdResult {
    cfg.validate().map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| format!("cannot create {}: {e}", cfg.out.display()))?;
    let sim = SimConfig {
        params: reduce(&cfg.params),
        counts: [cfg.n0_count, cfg.n1_count, cfg.n2_count],
        phases: PhaseSchedule::Uniform(cfg.phases),
        seed: cfg.seed,
    };
    let records = sample(&sim).map_err(|e| e.to_string())?;
    for channel in CHANNELS {
        let subset: Vec<QuadratureRecord> = records
            .iter()
            .filter(|r| r.channel == channel)
            .cloned()
            .collect();
        formats::write_samples(&samples_path(&cfg.out, channel), &subset)
            .map_err(|e| format!("write failed: {e}"))?;
    }
    let manifest: Vec<(String, String)> = cfg
        .manifest_lines()
        .iter()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect();
    formats::write_key_values(&cfg.out.join("manifest.txt"), &manifest)
        .map_err(|e| format!("write failed: {e}"))?;
    Ok(())
}

pub fn cmd_reconstruct(cfg: &RunConfig) -> CmdResult {
    cfg.validate().map_err(|e| e.to_string())?;
    let mut any = false;
    for channel in CHANNELS {
        let path = samples_path(&cfg.out, channel);
        if !path.exists() {
            continue;
        }
        any = true;
        let records = formats::read_samples(&path).map_err(|e| e.to_string())?;
        if records.is_empty() {
            return Err(format!("{}: no records", path.display()));
        }
        let name = formats::channel_name(channel);
        if cfg.method.includes(Method::Moments) {
            let est = moment_estimate(&records, channel).map_err(|e| e.to_string())?;
            let pairs = vec![
                ("delta".to_string(), format!("{}", est.params.delta)),
                ("sigma2".to_string(), format!("{}", est.params.sigma2)),
            ];
            formats::write_key_values(&cfg.out.join(format!("params_moments_{name}.txt")), &pairs)
                .map_err(|e| format!("write failed: {e}"))?;
        }
        if cfg.method.includes(Method::Radon) {
            // 128 amplitude bins: at the default +-7-sigma range, 64 bins
            // leave a visible resolution bias on the central features
            let hist = QuadratureHistogram::from_records(&records, cfg.phases, 128)
                .map_err(|e| e.to_string())?;
            if hist.clipped > 0 {
                eprintln!(
                    "warning: {} {name} samples outside the histogram range were clipped",
                    hist.clipped
                );
            }
            let grid = radon_reconstruct(&hist, 64).map_err(|e| e.to_string())?;
            formats::write_grid(&cfg.out.join(format!("wigner_radon_{name}.csv")), &grid)
                .map_err(|e| format!("write failed: {e}"))?;
        }
        if cfg.method.includes(Method::Maxlik) {
            let mcfg = MaxLikConfig {
                eta: cfg.params.eta,
                ..Default::default()
            };
            let est = maxlik_reconstruct(&records, &mcfg).map_err(|e| e.to_string())?;
            formats::write_density(
                &cfg.out.join(format!("density_maxlik_{name}.csv")),
                &est.diagonal().values,
            )
            .map_err(|e| format!("write failed: {e}"))?;
        }
    }
    if !any {
        return Err(format!(
            "no samples files found in {} (run simulate first)",
            cfg.out.display()
        ));
    }
    if cfg.method == Method::All {
        cmd_report(cfg)?;
    }
    Ok(())
}

pub fn cmd_report(cfg: &RunConfig) -> CmdResult {
    let mut pairs: Vec<(String, String)> = Vec::new();
    // model rows: raw (as configured), corrected (ideal detection), ideal
    let rows: [(&str, ReducedParams); 3] = [
        ("raw", reduce(&cfg.params)),
        ("corrected", reduce(&cfg.params.corrected())),
        ("ideal", ReducedParams::ideal()),
    ];
    for (row, rp) in rows {
        let (min2, w2o) = critical_values_model(&rp, Conditioning::Coincidence);
        let (min1, w1o) = critical_values_model(&rp, Conditioning::Single);
        pairs.push((format!("{row}_min_w2"), format!("{min2}")));
        pairs.push((format!("{row}_w2_origin"), format!("{w2o}")));
        pairs.push((format!("{row}_min_w1"), format!("{min1}")));
        pairs.push((format!("{row}_w1_origin"), format!("{w1o}")));
        pairs.push((format!("{row}_sigma2"), format!("{}", rp.sigma2)));
        pairs.push((format!("{row}_delta"), format!("{}", rp.delta)));
    }
    // data-derived blocks from whatever reconstruction outputs exist
    let mut any_data = false;
    let mut deltas: [Option<f64>; 3] = [None, None, None];
    for (ci, channel) in CHANNELS.iter().enumerate() {
        let name = formats::channel_name(*channel);
        let params_path = cfg.out.join(format!("params_moments_{name}.txt"));
        if params_path.exists() {
            any_data = true;
            for (k, v) in formats::read_key_values(&params_path).map_err(|e| e.to_string())? {
                if k == "delta" {
                    deltas[ci] = v.parse().ok();
                }
                pairs.push((format!("moments_{name}_{k}"), v));
            }
        }
        let grid_path = cfg.out.join(format!("wigner_radon_{name}.csv"));
        if grid_path.exists() {
            any_data = true;
            let grid = formats::read_grid(&grid_path).map_err(|e| e.to_string())?;
            let (min_w, w_origin) = grid.critical_values_radial();
            pairs.push((format!("radon_{name}_min_w"), format!("{min_w}")));
            pairs.push((format!("radon_{name}_w_origin"), format!("{w_origin}")));
        }
        let density_path = cfg.out.join(format!("density_maxlik_{name}.csv"));
        if density_path.exists() {
            any_data = true;
            let values = formats::read_density(&density_path).map_err(|e| e.to_string())?;
            for (n, v) in values.iter().take(5).enumerate() {
                pairs.push((format!("maxlik_{name}_p{n}"), format!("{v}")));
            }
        }
    }
    if !any_data {
        return Err(format!(
            "no reconstruction outputs in {} (run reconstruct first)",
            cfg.out.display()
        ));
    }
    if let (Some(d1), Some(d2)) = (deltas[1], deltas[2]) {
        let mismatch = (d1 - d2).abs() / (0.5 * (d1 + d2)) * 100.0;
        pairs.push(("delta_mismatch_percent".into(), format!("{mismatch}")));
    }
    pairs.push(("method".into(), method_name(cfg.method).to_string()));
    formats::write_key_values(&cfg.out.join("report.txt"), &pairs)
        .map_err(|e| format!("write failed: {e}"))?;
    Ok(())
}

pub fn cmd_selftest() -> Result<bool, String> {
    let results = focktomo::selftest::run_all();
    let mut all = true;
    for r in &results {
        println!("{}", r.summary_line());
        all &= r.passed;
    }
    Ok(all)
}
