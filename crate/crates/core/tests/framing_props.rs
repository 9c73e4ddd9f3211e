use proptest::prelude::*;

use rofa_core::framing::{
    build_dl_layout, build_ul_layout, decode_ci, encode_ci, usable_bins, ControlInfo, Field,
    FieldKind, LayoutParams, SubcarrierAllocation,
};

fn dl_params() -> impl Strategy<Value = LayoutParams> {
    (0usize..200, 1usize..40, any::<bool>(), 0usize..4).prop_map(|(n_data, gap, with_mltf, n_ci)| {
        let n_mltf = if with_mltf {
            n_data.div_ceil(gap).saturating_sub(1)
        } else {
            0
        };
        LayoutParams {
            n_fft: 64,
            cp_len: 16,
            n_data,
            n_ci: n_ci.min(n_data),
            n_mltf,
            mltf_gap: gap,
        }
    })
}

/// Random disjoint allocations over the usable bins.
fn allocations() -> impl Strategy<Value = Vec<SubcarrierAllocation>> {
    (Just(usable_bins(64)).prop_shuffle(), 0usize..5, 1usize..10).prop_map(|(bins, users, per)| {
        (0..users)
            .map(|u| SubcarrierAllocation::new(u as u8 + 1, bins[u * per..(u + 1) * per].to_vec()))
            .collect()
    })
}

proptest! {
    #[test]
    fn dl_fields_tile_the_packet(p in dl_params()) {
        let l = build_dl_layout(&p).unwrap();
        prop_assert!(l.is_contiguous());
        let total: usize = l.fields.iter().map(Field::len).sum();
        prop_assert_eq!(total, l.duration());
        prop_assert_eq!(l.lts_gap, l.lts_len);
        let lts2 = l.body_start(FieldKind::Lts2).unwrap();
        let pltf = l.body_start(FieldKind::Pltf).unwrap();
        prop_assert_eq!(l.pltf_dist, Some(pltf - lts2));
        prop_assert_eq!(l.payload_fields().count(), p.n_data);
        let n_m = l.fields.iter().filter(|f| matches!(f.kind, FieldKind::Mltf(_))).count();
        prop_assert_eq!(n_m, p.n_mltf);
        if p.n_mltf == 0 {
            prop_assert_eq!(l.duration(), 320 + 80 * p.n_data + 80);
        }
    }

    #[test]
    fn ul_fields_tile_the_packet(n in 0usize..300) {
        let l = build_ul_layout(64, 16, n).unwrap();
        prop_assert!(l.is_contiguous());
        prop_assert_eq!(l.duration(), 160 + 80 * n);
    }

    #[test]
    fn ci_round_trips(allocs in allocations(), t_dl in any::<u32>(), t_ul in any::<u32>(), pad in 0usize..60) {
        let ci = ControlInfo::new(64, allocs, t_dl, t_ul).unwrap();
        let mut bits = encode_ci(&ci);
        bits.extend(std::iter::repeat_n(0u8, pad));
        prop_assert_eq!(decode_ci(&bits).unwrap(), ci);
    }

    #[test]
    fn corrupted_ci_never_decodes_silently(allocs in allocations(), flip in any::<prop::sample::Index>()) {
        let ci = ControlInfo::new(64, allocs, 10640, 10400).unwrap();
        let mut bits = encode_ci(&ci);
        let i = flip.index(bits.len());
        bits[i] ^= 1;
        prop_assert!(decode_ci(&bits).is_err());
    }
}
