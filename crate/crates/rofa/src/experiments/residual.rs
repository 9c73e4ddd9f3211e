use std::collections::BTreeMap;
use std::f64::consts::PI;

use rofa_core::cfo::{slp_estimate, stf_ltf_estimates};
use rofa_core::channel::{noise_var_for_snr, traverse, Direction, LinkModel};
use rofa_core::metrics::{ecdf, fraction_near_levels, mean, median};
use rofa_core::packet::DlPacket;

use super::par_trials;
use crate::config::{CfoVariant, ResidualCfoSpec, Scenario};
use crate::output::RowSink;
use crate::sim::{trial_rng, Radio};
use crate::Result;

const QUANTILES: [(f64, &str); 5] = [
    (0.05, "residual_cfo_hz_q05"),
    (0.25, "residual_cfo_hz_q25"),
    (0.5, "residual_cfo_hz_q50"),
    (0.75, "residual_cfo_hz_q75"),
    (0.95, "residual_cfo_hz_q95"),
];

/// Signed residual (estimate minus truth, rad/sample) and ambiguity flag.
type Sample = (f64, bool);

pub(super) fn run(s: &Scenario, spec: &ResidualCfoSpec, sink: &mut RowSink) -> Result<()> {
    let radio = Radio::new(&s.phy)?;
    let truth = s.phy.freq(spec.cfo) * s.oscillator_factor;
    // the preamble estimators run on the first packet an SLP variant needs;
    // all packets share their preamble and, per trial, their noise prefix
    let base = spec.variants.iter().find_map(|v| v.n_mltf()).unwrap_or(0);
    let mut packets: BTreeMap<usize, DlPacket> = BTreeMap::new();
    for n in spec.variants.iter().map(|v| v.n_mltf().unwrap_or(base)) {
        if let std::collections::btree_map::Entry::Vacant(e) = packets.entry(n) {
            e.insert(radio.dl_packet(n, None)?);
        }
    }

    for (xi, &snr) in spec.snr_db.values()?.iter().enumerate() {
        let mut link = LinkModel::ideal(-truth);
        link.noise_var = if spec.noiseless { 0.0 } else { noise_var_for_snr(1.0, snr) };
        let results: Vec<Vec<Sample>> = par_trials(s.trials, |t| {
            let mut rx = BTreeMap::new();
            for (&n, p) in &packets {
                let mut rng = trial_rng(s.seed, xi, t);
                rx.insert(n, traverse(&link, Direction::Dl, &p.samples, &mut rng));
            }
            let (stf, stf_ltf) = stf_ltf_estimates(&rx[&base], &packets[&base].layout)?;
            spec.variants
                .iter()
                .map(|v| {
                    Ok(match v {
                        CfoVariant::Stf => (stf - truth, false),
                        CfoVariant::StfLtf => (stf_ltf - truth, false),
                        CfoVariant::Slp | CfoVariant::SlpMltf(_) => {
                            let n = v.n_mltf().unwrap_or(0);
                            let e = slp_estimate(&rx[&n], &packets[&n].layout)?;
                            (e.total() - truth, e.ambiguous)
                        }
                    })
                })
                .collect()
        })?;

        for (vi, v) in spec.variants.iter().enumerate() {
            let label = v.label();
            let signed: Vec<f64> = results.iter().map(|r| r[vi].0).collect();
            let hz: Vec<f64> = signed.iter().map(|e| radio.hz(e.abs())).collect();
            let n = hz.len();
            let mut put = |metric: &str, value: f64| sink.push(&label, 0, "snr_db", snr, metric, value, n);
            put("residual_cfo_hz", mean(&hz).unwrap_or(0.0));
            put("residual_cfo_hz_median", median(&hz).unwrap_or(0.0));
            let lambda_p = v
                .n_mltf()
                .and_then(|m| packets[&m].layout.pltf_dist)
                .map(|d| d as f64);
            if let Some(lp) = lambda_p {
                let near = signed.iter().filter(|e| e.abs() < 2.0 * PI / (10.0 * lp)).count();
                put("near_zero_fraction", near as f64 / n as f64);
                let amb = results.iter().filter(|r| r[vi].1).count();
                put("ambiguous_rate", amb as f64 / n as f64);
            }
            if spec.distribution {
                let cdf = ecdf(&hz);
                for (q, name) in QUANTILES {
                    put(name, cdf.quantile(q).unwrap_or(0.0));
                }
                if let Some(lp) = lambda_p {
                    put("level_spacing_hz", radio.hz(2.0 * PI / lp));
                    put("staircase_mass", fraction_near_levels(&signed, 2.0 * PI / lp, 0.05));
                }
            }
        }
    }
    Ok(())
}
