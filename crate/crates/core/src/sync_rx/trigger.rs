use crate::framing::FrameTiming;

/// A node's sample counter. `local = global + skew`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleClock {
    pub node: u32,
    pub skew: i64,
}

impl SampleClock {
    pub fn new(node: u32, skew: i64) -> Self {
        Self { node, skew }
    }

    pub fn to_local(&self, global: i64) -> i64 {
        global + self.skew
    }

    pub fn to_global(&self, local: i64) -> i64 {
        local - self.skew
    }
}

/// Sample index at which the AP starts UL processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriggerEvent {
    pub t_ul: i64,
    pub frame: u64,
}

/// `t_ul = t_dl + dl_slot`. `t_dl` is the AP's own transmit index, not a
/// detected one.
pub fn auto_trigger(t_dl: i64, dl_slot: i64, frame: u64) -> TriggerEvent {
    TriggerEvent {
        t_ul: t_dl + dl_slot,
        frame,
    }
}

/// Counting-before-sending: the UL transmit index on the user's clock is
/// the detected DL start plus the DL slot and guard. Returns the local and
/// the global index; the clock skew cancels because both ends of the count
/// are on the same clock.
pub fn schedule_ul_start(dl_start_local: i64, frame: &FrameTiming, clock: &SampleClock) -> (i64, i64) {
    let local = dl_start_local + frame.dl_to_ul();
    (local, clock.to_global(local))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_arithmetic() {
        assert_eq!(auto_trigger(0, 10640, 0).t_ul, 10640);
        assert_eq!(auto_trigger(1_000_000, 0, 3).t_ul, 1_000_000);
        let f = FrameTiming::new(500, 10640, 10400, 80).unwrap();
        let a = auto_trigger(f.t_dl_start, f.dl_to_ul(), 0);
        let b = auto_trigger(f.next().t_dl_start, f.dl_to_ul(), 1);
        assert_eq!(b.t_ul - a.t_ul, 10640 + 10400 + 160);
    }

    #[test]
    fn skew_cancels() {
        let f = FrameTiming::new(12_345, 10640, 10400, 80).unwrap();
        let ap = auto_trigger(f.t_dl_start, f.dl_to_ul(), 0);
        for skew in [-7, 0, 3, 1000] {
            let clock = SampleClock::new(1, skew);
            for err in [-1, 0, 1] {
                let detected = clock.to_local(f.t_dl_start) + err;
                let (_, global) = schedule_ul_start(detected, &f, &clock);
                assert_eq!(global - ap.t_ul, err);
            }
        }
    }
}
