//! `simulate`: drops to CSV.

use anyhow::Result;
use serde::Serialize;
use thz_gbsm::antenna::{AntennaArray, ElementPattern, Polarization};
use thz_gbsm::coeff::{assemble_cir, CirConfig, LinkArrays};
use thz_gbsm::drop::{generate_drops, sound_drop, DropConfig, SounderConfig};
use thz_gbsm::params::ScenarioParamSet;

use crate::args::SimulateArgs;
use crate::output::{config_error, load_params, OutputDir, RunManifest};

#[derive(Serialize)]
struct LspRow {
    drop: usize,
    x_m: f64,
    y_m: f64,
    ds_s: f64,
    asa_deg: f64,
    sf_db: f64,
    k_db: Option<f64>,
}

/// One ray; `power` is its share of the drop's total power.
#[derive(Serialize)]
struct ClusterRow {
    drop: usize,
    cluster: usize,
    ray: usize,
    delay_ns: f64,
    power: f64,
    aoa_deg: f64,
    zoa_deg: f64,
    aod_deg: f64,
    zod_deg: f64,
}

#[derive(Serialize)]
struct CirRow {
    drop: usize,
    u: usize,
    s: usize,
    delay_ns: f64,
    re: f64,
    im: f64,
}

/// One nonzero bin of a directional PDP; the input schema of `analyze`.
#[derive(Serialize)]
pub struct MpcRow {
    pub drop: usize,
    pub distance_m: f64,
    pub delay_ns: f64,
    pub power_linear: f64,
    pub phi_tx_deg: f64,
    pub phi_rx_deg: f64,
    pub theta_rx_deg: f64,
}

pub fn select_set<'a>(
    library: &'a thz_gbsm::params::ParamLibrary,
    set: &crate::args::SetSelection,
) -> Result<&'a ScenarioParamSet> {
    library
        .get(set.scenario.into(), set.condition.into(), set.source.into())
        .map_err(|e| config_error(format!("--scenario/--condition/--source: {e}")))
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    if args.drops == 0 {
        return Err(config_error("--drops must be at least 1"));
    }
    let loaded = load_params(args.common.params.as_deref())?;
    let params = select_set(&loaded.library, &args.set)?;
    let drops = generate_drops(params, &DropConfig::for_params(params), args.seed, args.drops)?;

    let single = AntennaArray::single(ElementPattern::Isotropic(Polarization::Vertical));
    let arrays = LinkArrays::new(single.clone(), single);
    let sounder = SounderConfig::default();

    let mut lsp_rows = Vec::new();
    let mut cluster_rows = Vec::new();
    let mut cir_rows = Vec::new();
    let mut mpc_rows = Vec::new();
    for d in &drops {
        lsp_rows.push(LspRow {
            drop: d.index,
            x_m: d.location[0],
            y_m: d.location[1],
            ds_s: d.lsp.ds,
            asa_deg: d.lsp.asa,
            sf_db: d.lsp.sf,
            k_db: d.lsp.k,
        });
        let scattered = d.clusters.scattered_share();
        for (n, c) in d.clusters.clusters.iter().enumerate() {
            for (m, r) in c.rays.iter().enumerate() {
                cluster_rows.push(ClusterRow {
                    drop: d.index,
                    cluster: n,
                    ray: m,
                    delay_ns: c.delay * 1e9,
                    power: scattered * c.power * r.power_fraction,
                    aoa_deg: r.aoa,
                    zoa_deg: r.zoa,
                    aod_deg: r.aod,
                    zod_deg: r.zod,
                });
            }
        }
        let cir = assemble_cir(
            &d.clusters,
            &arrays,
            &CirConfig::new(args.mode.into(), params.wavelength_m(), d.distance_3d),
        );
        for u in 0..cir.n_rx {
            for s in 0..cir.n_tx {
                for (t, tap) in cir.taps.iter().enumerate() {
                    let h = cir.coeff(t, 0, u, s);
                    cir_rows.push(CirRow {
                        drop: d.index,
                        u,
                        s,
                        delay_ns: tap.delay * 1e9,
                        re: h.re,
                        im: h.im,
                    });
                }
            }
        }
        for pdp in sound_drop(d, params, &sounder)? {
            let dir = pdp.direction.expect("sounder PDPs carry directions");
            for (i, &p) in pdp.powers.iter().enumerate() {
                if p > 0.0 {
                    mpc_rows.push(MpcRow {
                        drop: d.index,
                        distance_m: d.distance_3d,
                        delay_ns: pdp.delay(i) * 1e9,
                        power_linear: p,
                        phi_tx_deg: dir.phi_tx,
                        phi_rx_deg: dir.phi_rx,
                        theta_rx_deg: dir.theta_rx,
                    });
                }
            }
        }
    }

    let mut out = OutputDir::create(
        &args.common.out,
        RunManifest::new("simulate", Some(loaded.sha256), Some(args.seed)),
    )?;
    out.write_csv("lsp.csv", &lsp_rows)?;
    out.write_csv("clusters.csv", &cluster_rows)?;
    out.write_csv("cir.csv", &cir_rows)?;
    out.write_csv("mpc.csv", &mpc_rows)?;
    out.finish()?;
    println!(
        "simulated {} drops of {} into {}",
        drops.len(),
        params.name,
        args.common.out.display()
    );
    Ok(())
}
