//! Packet and frame structure.
//!
//! A DL packet is `STF | LTF | CI + payload (with M-LTFs) | P-LTF`, an UL
//! packet is `LTS1 | LTS2 | payload`, and a channel-probe packet is an STF
//! followed by back-to-back LTSs. Every field is placed at an exact sample
//! offset so that the correlation-based estimators can index into it.

use alloc::vec::Vec;

use crate::coding_modem::crc::{crc32_append, crc32_check};
use crate::{Error, Result};

/// Number of short training sequences in the STF.
pub const STF_REPETITIONS: usize = 10;

/// Legacy subcarriers carry energy on `±1..=±26`.
pub const USED_HALF_BAND: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldKind {
    Stf,
    Lts1,
    Lts2,
    /// Control-information symbol `k`, carried by payload symbol `k`.
    Ci(usize),
    /// Payload symbol `k` (indices continue after the CI symbols).
    Payload(usize),
    Mltf(usize),
    Pltf,
    ProbeLts(usize),
}

/// One field of a packet: `cp` prefix samples followed by `body` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Field {
    pub kind: FieldKind,
    pub start: usize,
    pub cp: usize,
    pub body: usize,
}

impl Field {
    pub fn len(&self) -> usize {
        self.cp + self.body
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn body_start(&self) -> usize {
        self.start + self.cp
    }

    pub fn end(&self) -> usize {
        self.start + self.len()
    }
}

/// Inputs for [`build_dl_layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutParams {
    pub n_fft: usize,
    pub cp_len: usize,
    /// Payload OFDM symbols, CI symbols included.
    pub n_data: usize,
    /// Leading payload symbols that carry control information.
    pub n_ci: usize,
    pub n_mltf: usize,
    /// Payload symbols between consecutive M-LTFs.
    pub mltf_gap: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            n_fft: 64,
            cp_len: 16,
            n_data: 128,
            n_ci: 0,
            n_mltf: 0,
            mltf_gap: 32,
        }
    }
}

/// Sample-indexed map of a packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketLayout {
    pub n_fft: usize,
    pub cp_len: usize,
    pub sts_len: usize,
    pub lts_len: usize,
    /// Distance between the first samples of LTS1 and LTS2.
    pub lts_gap: usize,
    pub n_data: usize,
    pub n_ci: usize,
    pub n_mltf: usize,
    pub mltf_gap: usize,
    /// Distance from the first sample of LTS2 to the first sample of the
    /// P-LTF body. `None` for packets without a P-LTF.
    pub pltf_dist: Option<usize>,
    pub fields: Vec<Field>,
}

impl PacketLayout {
    /// Total packet length in samples.
    pub fn duration(&self) -> usize {
        self.fields.last().map_or(0, Field::end)
    }

    pub fn field(&self, kind: FieldKind) -> Option<&Field> {
        self.fields.iter().find(|f| f.kind == kind)
    }

    pub fn body_start(&self, kind: FieldKind) -> Option<usize> {
        self.field(kind).map(Field::body_start)
    }

    /// Payload symbols in transmission order (CI symbols first).
    pub fn payload_fields(&self) -> impl Iterator<Item = &Field> {
        self.fields
            .iter()
            .filter(|f| matches!(f.kind, FieldKind::Ci(_) | FieldKind::Payload(_)))
    }

    /// Body starts of the training fields used for integer-wrap recovery:
    /// LTS2, every M-LTF, then the P-LTF.
    pub fn recovery_chain(&self) -> Vec<usize> {
        let mut chain = Vec::with_capacity(self.n_mltf + 2);
        chain.extend(self.body_start(FieldKind::Lts2));
        chain.extend(
            self.fields
                .iter()
                .filter(|f| matches!(f.kind, FieldKind::Mltf(_)))
                .map(Field::body_start),
        );
        chain.extend(self.body_start(FieldKind::Pltf));
        chain
    }

    /// Checks that fields are contiguous, non-overlapping and start at zero.
    pub fn is_contiguous(&self) -> bool {
        let mut cursor = 0;
        for f in &self.fields {
            if f.start != cursor {
                return false;
            }
            cursor = f.end();
        }
        true
    }
}

fn check_fft(n_fft: usize, cp_len: usize) -> Result<()> {
    if n_fft < 64 || !n_fft.is_power_of_two() {
        return Err(Error::UnsupportedFft(n_fft));
    }
    if cp_len == 0 || cp_len >= n_fft {
        return Err(Error::Layout("cyclic prefix must be in 1..n_fft"));
    }
    Ok(())
}

struct Cursor {
    at: usize,
    fields: Vec<Field>,
}

impl Cursor {
    fn push(&mut self, kind: FieldKind, cp: usize, body: usize) {
        self.fields.push(Field {
            kind,
            start: self.at,
            cp,
            body,
        });
        self.at += cp + body;
    }
}

/// Lays out a DL packet: STF (10 STSs), legacy LTF (double prefix and two
/// LTSs), CI symbols, payload segments separated by M-LTFs, and a trailing
/// P-LTF. M-LTFs follow payload symbols `gap, 2*gap, ...` and never follow
/// the last segment.
pub fn build_dl_layout(params: &LayoutParams) -> Result<PacketLayout> {
    let LayoutParams {
        n_fft,
        cp_len,
        n_data,
        n_ci,
        n_mltf,
        mltf_gap,
    } = *params;
    check_fft(n_fft, cp_len)?;
    if n_ci > n_data {
        return Err(Error::Layout("more CI symbols than payload symbols"));
    }
    if n_mltf > 0 {
        if mltf_gap == 0 {
            return Err(Error::Layout("M-LTF gap must be positive"));
        }
        if n_mltf != n_data.div_ceil(mltf_gap).saturating_sub(1) {
            return Err(Error::Layout(
                "M-LTF count must equal ceil(n_data / gap) - 1",
            ));
        }
    }
    let sts_len = n_fft / 4;
    let lts_len = n_fft;

    let mut c = Cursor {
        at: 0,
        fields: Vec::with_capacity(n_data + n_mltf + 4),
    };
    c.push(FieldKind::Stf, 0, STF_REPETITIONS * sts_len);
    c.push(FieldKind::Lts1, 2 * cp_len, lts_len);
    c.push(FieldKind::Lts2, 0, lts_len);
    let mut mltf = 0;
    for k in 0..n_data {
        let kind = if k < n_ci {
            FieldKind::Ci(k)
        } else {
            FieldKind::Payload(k)
        };
        c.push(kind, cp_len, n_fft);
        if mltf < n_mltf && (k + 1) % mltf_gap == 0 {
            c.push(FieldKind::Mltf(mltf), cp_len, lts_len);
            mltf += 1;
        }
    }
    c.push(FieldKind::Pltf, cp_len, lts_len);

    let mut layout = PacketLayout {
        n_fft,
        cp_len,
        sts_len,
        lts_len,
        lts_gap: 0,
        n_data,
        n_ci,
        n_mltf,
        mltf_gap,
        pltf_dist: None,
        fields: c.fields,
    };
    let lts1 = layout.body_start(FieldKind::Lts1).unwrap_or(0);
    let lts2 = layout.body_start(FieldKind::Lts2).unwrap_or(0);
    let pltf = layout.body_start(FieldKind::Pltf).unwrap_or(0);
    layout.lts_gap = lts2 - lts1;
    layout.pltf_dist = Some(pltf - lts2);
    Ok(layout)
}

/// Lays out an UL packet: two LTSs, each with its own cyclic prefix, then
/// `n_data` payload symbols. No STF and no P-LTF.
pub fn build_ul_layout(n_fft: usize, cp_len: usize, n_data: usize) -> Result<PacketLayout> {
    check_fft(n_fft, cp_len)?;
    let mut c = Cursor {
        at: 0,
        fields: Vec::with_capacity(n_data + 2),
    };
    c.push(FieldKind::Lts1, cp_len, n_fft);
    c.push(FieldKind::Lts2, cp_len, n_fft);
    for k in 0..n_data {
        c.push(FieldKind::Payload(k), cp_len, n_fft);
    }
    Ok(PacketLayout {
        n_fft,
        cp_len,
        sts_len: n_fft / 4,
        lts_len: n_fft,
        lts_gap: n_fft + cp_len,
        n_data,
        n_ci: 0,
        n_mltf: 0,
        mltf_gap: 0,
        pltf_dist: None,
        fields: c.fields,
    })
}

/// Lays out a channel-probe packet: an STF followed by `n_lts` contiguous
/// LTSs without prefixes.
pub fn build_probe_layout(n_fft: usize, n_lts: usize) -> Result<PacketLayout> {
    check_fft(n_fft, n_fft / 4)?;
    if n_lts < 2 {
        return Err(Error::Layout("a probe needs at least two LTSs"));
    }
    let mut c = Cursor {
        at: 0,
        fields: Vec::with_capacity(n_lts + 1),
    };
    c.push(FieldKind::Stf, 0, STF_REPETITIONS * n_fft / 4);
    for k in 0..n_lts {
        c.push(FieldKind::ProbeLts(k), 0, n_fft);
    }
    Ok(PacketLayout {
        n_fft,
        cp_len: 0,
        sts_len: n_fft / 4,
        lts_len: n_fft,
        lts_gap: n_fft,
        n_data: 0,
        n_ci: 0,
        n_mltf: 0,
        mltf_gap: 0,
        pltf_dist: None,
        fields: c.fields,
    })
}

/// Slot timing of one frame on the AP timeline.
///
/// The DL slot spans `t_dl_start .. t_dl_start + dl_slot + guard` where
/// `dl_slot` is the DL packet duration; the UL slot follows and lasts
/// `ul_slot + guard`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameTiming {
    pub t_dl_start: i64,
    pub dl_slot: i64,
    pub ul_slot: i64,
    pub guard: i64,
}

impl FrameTiming {
    pub fn new(t_dl_start: i64, dl_slot: i64, ul_slot: i64, guard: i64) -> Result<Self> {
        if dl_slot <= 0 || ul_slot <= 0 || guard <= 0 {
            return Err(Error::Layout("slot durations and guard must be positive"));
        }
        Ok(Self {
            t_dl_start,
            dl_slot,
            ul_slot,
            guard,
        })
    }

    /// Samples from the DL start to the UL start.
    pub fn dl_to_ul(&self) -> i64 {
        self.dl_slot + self.guard
    }

    pub fn period(&self) -> i64 {
        self.dl_slot + self.ul_slot + 2 * self.guard
    }

    pub fn ul_start(&self) -> i64 {
        self.t_dl_start + self.dl_to_ul()
    }

    pub fn next(&self) -> Self {
        Self {
            t_dl_start: self.t_dl_start + self.period(),
            ..*self
        }
    }
}

/// Bins that may carry energy: legacy subcarriers `±1..=±26` mapped onto
/// `0..n_fft`, in ascending bin order.
pub fn usable_bins(n_fft: usize) -> Vec<usize> {
    let mut bins: Vec<usize> = (1..=USED_HALF_BAND).collect();
    bins.extend((n_fft - USED_HALF_BAND)..n_fft);
    bins
}

/// Subcarriers assigned to one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierAllocation {
    pub user: u8,
    pub subcarriers: Vec<usize>,
}

impl SubcarrierAllocation {
    pub fn new(user: u8, subcarriers: Vec<usize>) -> Self {
        Self { user, subcarriers }
    }

    pub fn len(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subcarriers.is_empty()
    }
}

/// Checks bounds, DC/guard exclusion and pairwise disjointness.
pub fn validate_allocations(allocations: &[SubcarrierAllocation], n_fft: usize) -> Result<()> {
    let mut owner = alloc::vec![false; n_fft];
    let usable = usable_bins(n_fft);
    for (i, a) in allocations.iter().enumerate() {
        if allocations[..i].iter().any(|b| b.user == a.user) {
            return Err(Error::Allocation("duplicate user id"));
        }
        for &m in &a.subcarriers {
            if m >= n_fft {
                return Err(Error::Allocation("subcarrier index out of range"));
            }
            if usable.binary_search(&m).is_err() {
                return Err(Error::Allocation("subcarrier in DC or guard band"));
            }
            if owner[m] {
                return Err(Error::Allocation("allocations overlap"));
            }
            owner[m] = true;
        }
    }
    Ok(())
}

/// Three users on interleaved subcarriers 10..=18.
pub fn table2a() -> Vec<SubcarrierAllocation> {
    alloc::vec![
        SubcarrierAllocation::new(1, alloc::vec![10, 13, 16]),
        SubcarrierAllocation::new(2, alloc::vec![11, 14, 17]),
        SubcarrierAllocation::new(3, alloc::vec![12, 15, 18]),
    ]
}

/// Four users on interleaved subcarriers 10..=21.
pub fn table2b() -> Vec<SubcarrierAllocation> {
    alloc::vec![
        SubcarrierAllocation::new(1, alloc::vec![10, 14, 18]),
        SubcarrierAllocation::new(2, alloc::vec![11, 15, 19]),
        SubcarrierAllocation::new(3, alloc::vec![12, 16, 20]),
        SubcarrierAllocation::new(4, alloc::vec![13, 17, 21]),
    ]
}

/// `n_users` users with `per_user` subcarriers each, interleaved over the
/// usable bins starting at the lowest positive bin.
pub fn interleaved_allocation(
    n_users: usize,
    per_user: usize,
    n_fft: usize,
) -> Result<Vec<SubcarrierAllocation>> {
    let mut usable = usable_bins(n_fft);
    // positive frequencies first, then negative, so small allocations stay
    // clear of the band edge
    usable.sort_by_key(|&b| if b <= USED_HALF_BAND { b } else { b + n_fft });
    if n_users * per_user > usable.len() || n_users > u8::MAX as usize {
        return Err(Error::Allocation("not enough usable subcarriers"));
    }
    Ok((0..n_users)
        .map(|u| {
            let subcarriers = (0..per_user).map(|k| usable[k * n_users + u]).collect();
            SubcarrierAllocation::new((u + 1) as u8, subcarriers)
        })
        .collect())
}

/// Control information piggybacked on a DL packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlInfo {
    pub n_fft: usize,
    pub allocations: Vec<SubcarrierAllocation>,
    /// Next-frame DL packet duration in samples.
    pub t_dl: u32,
    /// Next-frame UL packet duration in samples.
    pub t_ul: u32,
}

impl ControlInfo {
    pub fn new(
        n_fft: usize,
        allocations: Vec<SubcarrierAllocation>,
        t_dl: u32,
        t_ul: u32,
    ) -> Result<Self> {
        if n_fft > u16::MAX as usize {
            return Err(Error::ControlInfo("FFT size does not fit the CI header"));
        }
        if allocations.len() > u8::MAX as usize
            || allocations.iter().any(|a| a.len() > u8::MAX as usize)
        {
            return Err(Error::ControlInfo("allocation map too large"));
        }
        validate_allocations(&allocations, n_fft)?;
        Ok(Self {
            n_fft,
            allocations,
            t_dl,
            t_ul,
        })
    }

    /// Length of [`encode_ci`]'s output.
    pub fn encoded_len(&self) -> usize {
        let users: usize = self.allocations.iter().map(|a| 16 + 16 * a.len()).sum();
        16 + 32 + 32 + 8 + users + 32
    }
}

fn push_bits(out: &mut Vec<u8>, value: u32, width: usize) {
    out.extend((0..width).map(|i| ((value >> i) & 1) as u8));
}

struct BitReader<'a> {
    bits: &'a [u8],
    at: usize,
}

impl BitReader<'_> {
    fn read(&mut self, width: usize) -> Result<u32> {
        let end = self.at + width;
        let chunk = self.bits.get(self.at..end).ok_or(Error::TooShort {
            needed: end,
            got: self.bits.len(),
        })?;
        self.at = end;
        let mut v = 0u32;
        for (i, &b) in chunk.iter().enumerate() {
            if b > 1 {
                return Err(Error::Decode("bit values must be 0 or 1"));
            }
            v |= u32::from(b) << i;
        }
        Ok(v)
    }
}

/// Serializes CI as LSB-first fields followed by a CRC32:
/// `n_fft:16 | t_dl:32 | t_ul:32 | users:8 | {id:8 count:8 index:16*count}* | crc:32`.
pub fn encode_ci(ci: &ControlInfo) -> Vec<u8> {
    let mut bits = Vec::with_capacity(ci.encoded_len());
    push_bits(&mut bits, ci.n_fft as u32, 16);
    push_bits(&mut bits, ci.t_dl, 32);
    push_bits(&mut bits, ci.t_ul, 32);
    push_bits(&mut bits, ci.allocations.len() as u32, 8);
    for a in &ci.allocations {
        push_bits(&mut bits, u32::from(a.user), 8);
        push_bits(&mut bits, a.len() as u32, 8);
        for &m in &a.subcarriers {
            push_bits(&mut bits, m as u32, 16);
        }
    }
    crc32_append(&bits)
}

/// Parses [`encode_ci`] output. Bits after the CRC (symbol padding) are
/// ignored.
pub fn decode_ci(bits: &[u8]) -> Result<ControlInfo> {
    let mut r = BitReader { bits, at: 0 };
    let n_fft = r.read(16)? as usize;
    let t_dl = r.read(32)?;
    let t_ul = r.read(32)?;
    let users = r.read(8)? as usize;
    let mut allocations = Vec::with_capacity(users);
    for _ in 0..users {
        let user = r.read(8)? as u8;
        let count = r.read(8)? as usize;
        let subcarriers = (0..count)
            .map(|_| r.read(16).map(|m| m as usize))
            .collect::<Result<Vec<_>>>()?;
        allocations.push(SubcarrierAllocation { user, subcarriers });
    }
    let body_end = r.at;
    r.read(32)?;
    if !crc32_check(&bits[..body_end + 32])? {
        return Err(Error::Decode("CRC mismatch"));
    }
    ControlInfo::new(n_fft, allocations, t_dl, t_ul)
        .map_err(|_| Error::Decode("decoded allocation map is invalid"))
}
