//! `certify`: Löwner certification sweeps over the configured scenarios with
//! one CSV row per certificate and a separate table for the norm-inequality
//! report with its empirical trace ratios.

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use eit_lab::loewner::{CertificateRow, PairCertifier};
use eit_lab::scenarios::Scenario;

use crate::config::LoadedConfig;
use crate::report::OutputDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "kebab-case")]
pub enum Which {
    Main1,
    Util,
    Conmo,
    Babel0,
    Theorem3,
    All,
}

#[derive(Debug, Clone, Serialize)]
struct StampedCertificate {
    scenario: String,
    #[serde(flatten)]
    row: CertificateRow,
    config: String,
}

#[derive(Debug, Clone, Serialize)]
struct Theorem3Row {
    scenario: String,
    remainder_norm: f64,
    bound_norm: f64,
    mainest1_pass: bool,
    trace: f64,
    ratio_x1: f64,
    ratio_x2: f64,
    seed: u64,
    mesh_n: usize,
    k: usize,
    config: String,
}

pub fn run(loaded: &LoadedConfig, out: &OutputDir, which: Which) -> Result<bool> {
    let config = &loaded.config;
    let bench = super::workbench(config)?;
    let pool = super::thread_pool(config.run.jobs)?;
    let tol = config.run.tol;

    struct PerScenario {
        certs: Vec<StampedCertificate>,
        theorem3: Option<Theorem3Row>,
        error: Option<(String, String)>,
    }

    let results: Vec<PerScenario> = pool.install(|| {
        bench
            .scenarios
            .par_iter()
            .map(|sc: &Scenario<f64>| {
                let mut res = PerScenario {
                    certs: Vec::new(),
                    theorem3: None,
                    error: None,
                };
                let certifier =
                    match PairCertifier::new(&bench.mesh, &bench.basis, &sc.gamma, &sc.gamma_dagger, tol)
                    {
                        Ok(c) => c,
                        Err(e) => {
                            res.error = Some((sc.name.clone(), e.to_string()));
                            return res;
                        }
                    };
                let mut push = |certs: Vec<eit_lab::loewner::LoewnerCertificate<f64>>| {
                    for c in certs {
                        res.certs.push(StampedCertificate {
                            scenario: sc.name.clone(),
                            row: CertificateRow::new(&c, sc.seed, config.mesh.n, config.basis.k),
                            config: loaded.hash.clone(),
                        });
                    }
                };
                let outcome: eit_lab::Result<()> = (|| {
                    match which {
                        Which::Main1 => push(certifier.main1()?.to_vec()),
                        Which::Util => {
                            push(certifier.util()?.to_vec());
                            push(vec![certifier.util_sharper_than_main1()?]);
                        }
                        Which::Conmo => push(certifier.conmo()?.to_vec()),
                        Which::Babel0 => {
                            let (certs, _) = certifier.babel0()?;
                            push(certs.to_vec());
                        }
                        Which::Theorem3 => {}
                        Which::All => push(certifier.all_certificates()?),
                    }
                    if matches!(which, Which::Theorem3 | Which::All) {
                        let r = certifier.theorem3()?;
                        res.theorem3 = Some(Theorem3Row {
                            scenario: sc.name.clone(),
                            remainder_norm: r.remainder_norm,
                            bound_norm: r.bound_norm,
                            mainest1_pass: r.mainest1_pass,
                            trace: r.trace,
                            ratio_x1: r.ratio_x1,
                            ratio_x2: r.ratio_x2,
                            seed: sc.seed,
                            mesh_n: config.mesh.n,
                            k: config.basis.k,
                            config: loaded.hash.clone(),
                        });
                    }
                    Ok(())
                })();
                if let Err(e) = outcome {
                    res.error = Some((sc.name.clone(), e.to_string()));
                }
                res
            })
            .collect()
    });

    let mut certs = Vec::new();
    let mut theorem3 = Vec::new();
    let mut errors: Vec<(String, String)> = bench.broken.clone();
    for r in results {
        certs.extend(r.certs);
        theorem3.extend(r.theorem3);
        errors.extend(r.error);
    }

    let mut ok = errors.is_empty();
    let failures = certs.iter().filter(|c| !c.row.pass).count();
    ok &= failures == 0;

    let path = out.write_csv("certificates.csv", &certs)?;
    println!(
        "certify: {} certificates, {} failures -> {}",
        certs.len(),
        failures,
        path.display()
    );
    if !theorem3.is_empty() {
        let t3_failures = theorem3.iter().filter(|r| !r.mainest1_pass).count();
        ok &= t3_failures == 0;
        let max_ratio = theorem3
            .iter()
            .map(|r| r.ratio_x1.max(r.ratio_x2))
            .fold(0.0f64, f64::max);
        let path = out.write_csv("theorem3.csv", &theorem3)?;
        println!(
            "certify: norm-inequality rows {}, failures {}, max trace ratio {:.6e} -> {}",
            theorem3.len(),
            t3_failures,
            max_ratio,
            path.display()
        );
    }
    for (name, err) in &errors {
        println!("certify: scenario {name} failed: {err}");
    }
    Ok(ok)
}
