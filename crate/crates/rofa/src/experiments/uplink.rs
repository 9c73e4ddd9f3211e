use rofa_core::channel::LinkModel;
use rofa_core::framing::{usable_bins, ControlInfo, SubcarrierAllocation};
use rofa_core::linear_to_db;

use super::{par_trials, Tally};
use crate::config::{Scenario, SystemSpec, UplinkSpec, UserSpec};
use crate::output::RowSink;
use crate::sim::{rofa_frame, rofa_gain, tdma_gain, tdma_slot, trial_rng, Radio, RofaUser};
use crate::Result;

const CODE_RATE: f64 = 0.5;

pub(super) fn run(s: &Scenario, spec: &UplinkSpec, sink: &mut RowSink) -> Result<()> {
    let radio = Radio::new(&s.phy)?;
    let grid = spec.ul_snr_db.values()?;
    for sys in &spec.systems {
        match sys.access.allocations(sys.users.len(), radio.n_fft)? {
            Some(allocs) => run_rofa(s, spec, sys, &radio, &allocs, &grid, sink)?,
            None => run_tdma(s, sys, &radio, &grid, sink)?,
        }
    }
    Ok(())
}

fn link_for(s: &Scenario, u: &UserSpec, ul_gain: f64) -> LinkModel {
    LinkModel {
        ul_gain,
        taps: u.channel.taps(),
        timing_offset: u.delay,
        ..LinkModel::ideal(s.phy.freq(u.cfo) * s.oscillator_factor)
    }
}

/// The DL packet of a ROFA system, carrying its allocation map.
fn dl_for(radio: &Radio, n_mltf: usize, allocs: &[SubcarrierAllocation]) -> Result<rofa_core::packet::DlPacket> {
    let ul_slot = (2 + radio.ul_symbols(allocs)) * (radio.n_fft + radio.cp_len);
    // field widths are fixed, so a placeholder gives the final length
    let draft = ControlInfo::new(radio.n_fft, allocs.to_vec(), 0, ul_slot as u32)?;
    let t_dl = radio.dl_packet(n_mltf, Some(&draft))?.layout.duration();
    let ci = ControlInfo::new(radio.n_fft, allocs.to_vec(), t_dl as u32, ul_slot as u32)?;
    radio.dl_packet(n_mltf, Some(&ci))
}

fn run_rofa(
    s: &Scenario,
    spec: &UplinkSpec,
    sys: &SystemSpec,
    radio: &Radio,
    allocs: &[SubcarrierAllocation],
    grid: &[f64],
    sink: &mut RowSink,
) -> Result<()> {
    let dl = dl_for(radio, s.phy.n_mltf, allocs)?;
    let n = radio.n_fft as f64;
    let bits = radio.format.modulation.bits_per_symbol() as f64;
    for (xi, &x) in grid.iter().enumerate() {
        let snrs: Vec<f64> = sys.users.iter().map(|u| u.fixed_snr_db.unwrap_or(x)).collect();
        let users: Vec<RofaUser> = sys
            .users
            .iter()
            .zip(allocs)
            .zip(&snrs)
            .map(|((u, a), &snr)| RofaUser {
                allocation: a,
                link: link_for(s, u, rofa_gain(snr)),
                dl_snr_db: u.dl_snr_db.unwrap_or(spec.dl_snr_db),
                precode: true,
            })
            .collect();
        let frames = par_trials(s.trials, |t| rofa_frame(radio, &dl, &users, &mut trial_rng(s.seed, xi, t)))?;
        for (i, a) in allocs.iter().enumerate() {
            let mut tally = Tally::default();
            for f in &frames {
                tally.add(&f[i]);
            }
            tally.emit(sink, &sys.name, a.user, "ul_snr_db", x);
            // all power sits on the user's bins
            let per_bin = snrs[i] + linear_to_db(n / a.len() as f64);
            sink.push(&sys.name, a.user, "ul_snr_db", x, "ebn0_db", per_bin - linear_to_db(bits * CODE_RATE), frames.len());
        }
    }
    Ok(())
}

fn run_tdma(s: &Scenario, sys: &SystemSpec, radio: &Radio, grid: &[f64], sink: &mut RowSink) -> Result<()> {
    let n = radio.n_fft as f64;
    let bits = radio.format.modulation.bits_per_symbol() as f64;
    let data = rofa_core::packet::tdma_data_bins(radio.n_fft).len() as f64;
    let used = usable_bins(radio.n_fft).len() as f64;
    for (xi, &x) in grid.iter().enumerate() {
        let snrs: Vec<f64> = sys.users.iter().map(|u| u.fixed_snr_db.unwrap_or(x)).collect();
        let links: Vec<LinkModel> = sys
            .users
            .iter()
            .zip(&snrs)
            .map(|(u, &snr)| link_for(s, u, tdma_gain(radio, snr)))
            .collect();
        let slots = par_trials(s.trials, |t| {
            let mut rng = trial_rng(s.seed, xi, t);
            links.iter().map(|l| tdma_slot(radio, l, &mut rng)).collect::<Result<Vec<_>>>()
        })?;
        for (i, snr) in snrs.iter().enumerate() {
            let user = i as u8 + 1;
            let mut tally = Tally::default();
            for f in &slots {
                tally.add(&f[i]);
            }
            tally.emit(sink, &sys.name, user, "ul_snr_db", x);
            // the axis counts the data bins; pilots also take power
            let per_bin = snr + linear_to_db(n / data);
            let ebn0 = per_bin + linear_to_db(used / data) - linear_to_db(bits * CODE_RATE);
            sink.push(&sys.name, user, "ul_snr_db", x, "ebn0_db", ebn0, slots.len());
        }
    }
    Ok(())
}
