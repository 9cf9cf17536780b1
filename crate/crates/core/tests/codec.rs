use fovpart::emulator::codec::*;
use proptest::prelude::*;

fn flow_update() -> impl Strategy<Value = FlowUpdate> {
    (any::<(u8, u16, u16, u16, u32, u32)>(), any::<(u32, u64, u16, u16, u16)>()).prop_map(
        |(
            (command, idle_timeout, hard_timeout, priority, buffer_id, out_port),
            (out_group, cookie, flags, match_src, match_dst),
        )| {
            FlowUpdate {
                command,
                idle_timeout,
                hard_timeout,
                priority,
                buffer_id,
                out_port,
                out_group,
                cookie,
                flags,
                match_src,
                match_dst,
            }
        },
    )
}

fn edge_sync() -> impl Strategy<Value = EdgeSync> {
    (any::<(u8, u8, u32, u32, u32, u32)>(), 0u64..(1 << 48)).prop_map(
        |((link_type, status, bandwidth_kbps, milli, src, dst), timestamp_ms)| EdgeSync {
            link_type,
            status,
            bandwidth_kbps,
            weight: f64::from(milli) / 1000.0,
            src,
            dst,
            timestamp_ms,
        },
    )
}

fn flow_request() -> impl Strategy<Value = FlowRequest> {
    (any::<(u32, u32, u16, u8, u8, u64, u16, u16)>(), proptest::collection::vec(any::<u8>(), 0..64)).prop_map(
        |((xid, buffer_id, total_len, reason, table_id, cookie, match_src, match_dst), data)| FlowRequest {
            xid,
            buffer_id,
            total_len,
            reason,
            table_id,
            cookie,
            match_src,
            match_dst,
            data,
        },
    )
}

proptest! {
    #[test]
    fn flow_update_round_trips(m in flow_update()) {
        let bytes = encode_flow_update(&m);
        prop_assert_eq!(bytes.len(), 36);
        prop_assert_eq!(decode_flow_update(&bytes).unwrap(), m);
    }

    #[test]
    fn edge_sync_round_trips(m in edge_sync()) {
        let bytes = encode_edge_sync(&m).unwrap();
        prop_assert_eq!(decode_edge_sync(&bytes).unwrap(), m);
    }

    #[test]
    fn flow_request_round_trips(m in flow_request()) {
        let bytes = encode_flow_request(&m).unwrap();
        prop_assert_eq!(bytes.len(), 28 + m.data.len());
        prop_assert_eq!(usize::from(u16::from_be_bytes([bytes[2], bytes[3]])), bytes.len());
        prop_assert_eq!(decode_flow_request(&bytes).unwrap(), m);
    }

    #[test]
    fn handover_round_trips(leo: u32, from: u32, to: u32, slot: u32) {
        let m = Handover { leo, from, to, slot };
        prop_assert_eq!(decode_handover(&encode_handover(&m)).unwrap(), m);
    }

    #[test]
    fn decoders_reject_or_accept_without_panicking(buf in proptest::collection::vec(any::<u8>(), 0..80)) {
        let _ = decode_flow_update(&buf);
        let _ = decode_edge_sync(&buf);
        let _ = decode_handover(&buf);
        if let Ok(m) = decode_flow_request(&buf) {
            prop_assert_eq!(encode_flow_request(&m).unwrap(), buf);
        }
    }

    #[test]
    fn accepted_fixed_size_messages_re_encode_identically(buf in proptest::collection::vec(any::<u8>(), 36)) {
        if let Ok(m) = decode_flow_update(&buf) {
            prop_assert_eq!(encode_flow_update(&m).to_vec(), buf.clone());
        }
        if let Ok(m) = decode_edge_sync(&buf[..24]) {
            prop_assert_eq!(encode_edge_sync(&m).unwrap().to_vec(), buf[..24].to_vec());
        }
    }
}

#[test]
fn field_offsets_are_big_endian() {
    let m = FlowUpdate { priority: 0x0102, cookie: 0x0a0b_0c0d_0e0f_1011, match_dst: 0xbeef, ..Default::default() };
    let b = encode_flow_update(&m);
    assert_eq!(&b[6..8], &[0x01, 0x02]);
    assert_eq!(&b[20..28], &[0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f, 0x10, 0x11]);
    assert_eq!(&b[32..34], &[0xbe, 0xef]);

    let e = EdgeSync { weight: 1.5, timestamp_ms: 0x0102_0304_0506, ..Default::default() };
    let b = encode_edge_sync(&e).unwrap();
    assert_eq!(&b[6..10], &1500u32.to_be_bytes());
    assert_eq!(&b[18..24], &[1, 2, 3, 4, 5, 6]);

    let h = encode_handover(&Handover { leo: 1, from: 2, to: 3, slot: 4 });
    assert_eq!(h, [0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 4]);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(matches!(decode_flow_update(&[0; 35]), Err(CodecError::WrongLength { .. })));
    let mut b = encode_flow_update(&FlowUpdate::default());
    b[1] = 1;
    assert!(matches!(decode_flow_update(&b), Err(CodecError::NonZeroPadding { .. })));

    let req = encode_flow_request(&FlowRequest { data: vec![7; 8], ..Default::default() }).unwrap();
    assert_eq!(req.len(), 36);
    let mut bad = req.clone();
    bad[0] = 1;
    assert_eq!(decode_flow_request(&bad), Err(CodecError::BadVersion(1)));
    assert!(matches!(decode_flow_request(&req[..30]), Err(CodecError::LengthMismatch { header: 36, actual: 30 })));

    assert!(encode_edge_sync(&EdgeSync { timestamp_ms: 1 << 48, ..Default::default() }).is_err());
    assert!(encode_edge_sync(&EdgeSync { weight: -1.0, ..Default::default() }).is_err());
    assert!(encode_flow_request(&FlowRequest { data: vec![0; 70_000], ..Default::default() }).is_err());
}
