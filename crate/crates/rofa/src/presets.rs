//! Named scenarios reproducing the evaluation at desk scale.

use std::f64::consts::PI;
use std::path::Path;

use crate::config::{
    Access, CfoVariant, Channel, Detection, EvmSpec, Experiment, Freq, Grid, Phy, ProbeSpec,
    ResidualCfoSpec, Scenario, SystemSpec, TriggerSpec, UplinkSpec, UserSpec, DEFAULT_TRIALS,
};
use crate::{Error, Result};

pub const PRESETS: [(&str, &str); 10] = [
    ("residual-cfo-sweep", "mean residual CFO vs SNR for STF, STF+LTF and SLP"),
    ("residual-cfo-cdf", "residual CFO distribution at 10 dB, with and without M-LTFs"),
    ("mltf-gain", "SLP residual vs SNR for 0, 1, 3 and 7 M-LTFs"),
    ("evm-precoding", "EVM of a 1-subcarrier user, precoded vs unprecoded vs OFDM-TDMA"),
    ("ber-per-vs-tdma", "BER/PER of 3 users vs UL received SNR: ROFA-3, broader-13, OFDM-TDMA"),
    ("power-imbalance", "per-user PER with strong and weak neighbours, 3 and 4 users"),
    ("low-cost-osc", "ber-per-vs-tdma with every CFO scaled by 20"),
    ("short-packet", "12-byte packets: ROFA-3, broader-13, OFDM-TDMA"),
    ("cfo-coherence-probe", "alternating probes over a drifting link"),
    ("trigger-offset", "Auto-trigger UL start error over many frames"),
];

const SEED: u64 = 2021;

/// Relative CFOs of X1, X2, N1, N2, Hz.
const USER_CFO_HZ: [f64; 4] = [930.0, -640.0, 1210.0, -1480.0];

fn user(i: usize) -> UserSpec {
    UserSpec {
        cfo: Freq::Hz(USER_CFO_HZ[i]),
        ..UserSpec::default()
    }
}

/// The NLoS user sits behind a wall: multipath and a weaker DL.
fn nlos_user(i: usize) -> UserSpec {
    UserSpec {
        channel: Channel::Exponential {
            n_taps: 3,
            decay_db: 3.0,
        },
        dl_snr_db: Some(15.0),
        ..user(i)
    }
}

fn fixed(mut u: UserSpec, db: f64) -> UserSpec {
    u.fixed_snr_db = Some(db);
    u
}

fn scenario(name: &str, trials: usize, phy: Phy, experiment: Experiment) -> Scenario {
    Scenario {
        name: name.to_string(),
        seed: SEED,
        trials,
        oscillator_factor: 1.0,
        phy,
        experiment,
    }
}

fn three_way(users: &[UserSpec]) -> Vec<SystemSpec> {
    vec![
        SystemSpec {
            name: "rofa-3".into(),
            access: Access::Table2a,
            users: users.to_vec(),
        },
        SystemSpec {
            name: "broader-13".into(),
            access: Access::Interleaved { per_user: 13 },
            users: users.to_vec(),
        },
        SystemSpec {
            name: "ofdm-tdma".into(),
            access: Access::OfdmTdma,
            users: users.to_vec(),
        },
    ]
}

fn ber_per_vs_tdma(name: &str) -> Scenario {
    let users: Vec<UserSpec> = (0..3).map(user).collect();
    scenario(
        name,
        DEFAULT_TRIALS,
        Phy::default(),
        Experiment::Uplink(UplinkSpec {
            ul_snr_db: Grid::range(-14.0, 12.0, 1.0),
            dl_snr_db: 20.0,
            systems: three_way(&users),
        }),
    )
}

pub fn get(name: &str) -> Result<Scenario> {
    let residual = |snr: Grid, variants: Vec<CfoVariant>, distribution: bool| {
        Experiment::ResidualCfo(ResidualCfoSpec {
            snr_db: snr,
            cfo: Freq::RadPerSample(0.004 * PI),
            variants,
            noiseless: false,
            distribution,
        })
    };
    Ok(match name {
        "residual-cfo-sweep" => scenario(
            name,
            100_000,
            Phy::default(),
            residual(
                Grid::range(0.0, 30.0, 3.0),
                vec![CfoVariant::Stf, CfoVariant::StfLtf, CfoVariant::SlpMltf(3), CfoVariant::Slp],
                false,
            ),
        ),
        "residual-cfo-cdf" => scenario(
            name,
            DEFAULT_TRIALS,
            Phy::default(),
            residual(Grid::points(&[10.0]), vec![CfoVariant::Slp, CfoVariant::SlpMltf(3)], true),
        ),
        "mltf-gain" => scenario(
            name,
            DEFAULT_TRIALS,
            Phy::default(),
            residual(
                Grid::range(0.0, 30.0, 2.0),
                vec![
                    CfoVariant::Slp,
                    CfoVariant::SlpMltf(1),
                    CfoVariant::SlpMltf(3),
                    CfoVariant::SlpMltf(7),
                ],
                false,
            ),
        ),
        "evm-precoding" => scenario(
            name,
            DEFAULT_TRIALS,
            // 8 bytes fill 128 symbols on one subcarrier
            Phy {
                packet_bytes: 8,
                ..Phy::default()
            },
            Experiment::Evm(EvmSpec {
                ebn0_db: Grid::range(0.0, 14.0, 1.0),
                cfo: Freq::Hz(1000.0),
                dl_snr_db: 30.0,
                subcarrier: 10,
                tdma: true,
            }),
        ),
        "ber-per-vs-tdma" => ber_per_vs_tdma(name),
        "power-imbalance" => {
            let sweep3: Vec<UserSpec> = (0..3).map(user).collect();
            let sweep4: Vec<UserSpec> = (0..3).map(user).chain([nlos_user(3)]).collect();
            scenario(
                name,
                DEFAULT_TRIALS,
                Phy::default(),
                Experiment::Uplink(UplinkSpec {
                    ul_snr_db: Grid::range(-15.0, -3.0, 1.0),
                    dl_snr_db: 20.0,
                    systems: vec![
                        SystemSpec {
                            name: "imbalanced-3".into(),
                            access: Access::Table2a,
                            users: vec![fixed(user(0), 0.0), fixed(user(1), 0.0), user(2)],
                        },
                        SystemSpec {
                            name: "balanced-3".into(),
                            access: Access::Table2a,
                            users: sweep3,
                        },
                        SystemSpec {
                            name: "imbalanced-4".into(),
                            access: Access::Table2b,
                            users: vec![
                                fixed(user(0), -10.0),
                                fixed(user(1), -10.0),
                                fixed(user(2), -8.0),
                                nlos_user(3),
                            ],
                        },
                        SystemSpec {
                            name: "balanced-4".into(),
                            access: Access::Table2b,
                            users: sweep4,
                        },
                    ],
                }),
            )
        }
        "low-cost-osc" => Scenario {
            oscillator_factor: 20.0,
            ..ber_per_vs_tdma(name)
        },
        "short-packet" => {
            let users: Vec<UserSpec> = (0..3).map(user).collect();
            scenario(
                name,
                DEFAULT_TRIALS,
                Phy {
                    packet_bytes: 12,
                    ..Phy::default()
                },
                Experiment::Uplink(UplinkSpec {
                    ul_snr_db: Grid::range(-12.0, 12.0, 1.0),
                    dl_snr_db: 20.0,
                    systems: three_way(&users),
                }),
            )
        }
        "cfo-coherence-probe" => scenario(
            name,
            1_000,
            Phy::default(),
            Experiment::CoherenceProbe(ProbeSpec {
                rounds: 30,
                cfo: Freq::Hz(930.0),
                drift_step: Freq::Hz(20.0),
                drift_bound: Freq::Hz(55.0),
                snr_db: 30.0,
                n_lts: 16,
            }),
        ),
        "trigger-offset" => scenario(
            name,
            100_000,
            Phy::default(),
            Experiment::TriggerOffset(TriggerSpec {
                max_skew: 1_000,
                detection: Detection::Model { p_zero: 0.56 },
            }),
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}

/// A preset name, or else a path to a scenario file.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    if PRESETS.iter().any(|(n, _)| *n == name_or_path) {
        return get(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return Scenario::from_path(path);
    }
    Err(Error::UnknownPreset(name_or_path.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for (name, _) in PRESETS {
            let s = get(name).unwrap();
            s.validate().unwrap();
            assert_eq!(s.name, name);
            assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
        }
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(matches!(get("fig-99"), Err(Error::UnknownPreset(_))));
        assert!(matches!(resolve("no/such/file.json"), Err(Error::UnknownPreset(_))));
    }
}
