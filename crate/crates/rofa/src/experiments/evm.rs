use rofa_core::channel::LinkModel;
use rofa_core::db_to_linear;
use rofa_core::framing::{usable_bins, SubcarrierAllocation};

use super::{par_trials, Tally};
use crate::config::{EvmSpec, Scenario};
use crate::output::RowSink;
use crate::sim::{rofa_frame, tdma_slot, trial_rng, Radio, RofaUser, UL_NOISE_VAR};
use crate::Result;

/// Nominal code rate used for the Eb/N0 axis.
const CODE_RATE: f64 = 0.5;

const VARIANTS: [&str; 3] = ["rofa-precoded", "rofa-unprecoded", "ofdm-tdma"];

pub(super) fn run(s: &Scenario, spec: &EvmSpec, sink: &mut RowSink) -> Result<()> {
    let radio = Radio::new(&s.phy)?;
    let cfo = s.phy.freq(spec.cfo) * s.oscillator_factor;
    let dl = radio.dl_packet(s.phy.n_mltf, None)?;
    let alloc = SubcarrierAllocation::new(1, vec![spec.subcarrier]);
    let n = radio.n_fft as f64;
    let bits = radio.format.modulation.bits_per_symbol() as f64;
    let used = usable_bins(radio.n_fft).len() as f64;
    let tdma_data = rofa_core::packet::tdma_data_bins(radio.n_fft).len() as f64;

    for (xi, &ebn0) in spec.ebn0_db.values()?.iter().enumerate() {
        // per-bin Es/N0 on the bins that carry power
        let es_rofa = db_to_linear(ebn0) * bits * CODE_RATE;
        let es_tdma = db_to_linear(ebn0) * bits * CODE_RATE * tdma_data / used;
        let rofa_link = LinkModel {
            ul_gain: (es_rofa * UL_NOISE_VAR / n).sqrt(),
            ..LinkModel::ideal(cfo)
        };
        let tdma_link = LinkModel {
            ul_gain: (es_tdma * UL_NOISE_VAR * used / n).sqrt(),
            ..LinkModel::ideal(cfo)
        };

        let per_trial = par_trials(s.trials, |t| {
            let mut out = Vec::with_capacity(3);
            for precode in [true, false] {
                let user = RofaUser {
                    allocation: &alloc,
                    link: rofa_link.clone(),
                    dl_snr_db: spec.dl_snr_db,
                    precode,
                };
                let mut rng = trial_rng(s.seed, xi, t);
                out.push(rofa_frame(&radio, &dl, &[user], &mut rng)?.remove(0));
            }
            if spec.tdma {
                out.push(tdma_slot(&radio, &tdma_link, &mut trial_rng(s.seed, xi, t))?);
            }
            Ok(out)
        })?;

        for (vi, label) in VARIANTS.iter().enumerate().take(if spec.tdma { 3 } else { 2 }) {
            let mut tally = Tally::default();
            for o in &per_trial {
                tally.add(&o[vi]);
            }
            tally.emit(sink, label, 1, "ebn0_db", ebn0);
        }
    }
    Ok(())
}
