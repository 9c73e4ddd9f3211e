//! Frame timing, DL packet detection and the UL receivers.
//!
//! Users align their UL packets by counting samples from the detected DL
//! start; the AP does not detect UL packets at all and starts processing
//! at the scheduled index (Auto-trigger). The OFDM-TDMA receiver is the
//! detection-based baseline.

mod detect;
mod receiver;
mod tdma;
mod trigger;

pub use detect::{detect_dl_start, DetectorConfig};
pub use receiver::{
    decode_ul, estimate_ul_channel, measure_ul_snr, ul_snr_db, ChannelEstimate, UlDecodeResult,
    UlReceiverConfig, UlUser, CP_CUT,
};
pub use tdma::{tdma_baseline_decode, TdmaReceiverConfig};
pub use trigger::{auto_trigger, schedule_ul_start, SampleClock, TriggerEvent};
