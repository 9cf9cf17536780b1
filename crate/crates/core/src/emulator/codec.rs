//! Big-endian wire formats of the control messages.
//!
//! | message     | size     | layout |
//! |-------------|----------|--------|
//! | flow update | 36       | command u8, reserved u8, idle u16, hard u16, priority u16, buffer u32, out_port u32, out_group u32, cookie u64, flags u16, match_src u16, match_dst u16, pad u16 |
//! | edge sync   | 24       | link_type u8, status u8, bandwidth_kbps u32, weight_milli u32, src u32, dst u32, timestamp_ms u48 |
//! | flow request| 28 + data| version u8, type u8, length u16, xid u32, buffer u32, total_len u16, reason u8, table u8, cookie u64, match_src u16, match_dst u16, data |
//! | handover    | 16       | leo u32, from u32, to u32, slot u32 |

use thiserror::Error;

pub const FLOW_UPDATE_LEN: usize = 36;
pub const EDGE_SYNC_LEN: usize = 24;
pub const FLOW_REQUEST_HEADER_LEN: usize = 8;
pub const FLOW_REQUEST_MIN_LEN: usize = 28;
pub const HANDOVER_LEN: usize = 16;
pub const FLOW_REQUEST_VERSION: u8 = 0x04;
pub const FLOW_REQUEST_TYPE: u8 = 10;
const MAX_TIMESTAMP_MS: u64 = (1 << 48) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("{kind}: expected {expected} bytes, got {actual}")]
    WrongLength { kind: &'static str, expected: usize, actual: usize },
    #[error("{kind}: buffer of {actual} bytes is shorter than the minimum {min}")]
    TooShort { kind: &'static str, min: usize, actual: usize },
    #[error("flow request: unsupported version {0:#04x}")]
    BadVersion(u8),
    #[error("flow request: unexpected message type {0}")]
    BadType(u8),
    #[error("flow request: header says {header} bytes but buffer holds {actual}")]
    LengthMismatch { header: usize, actual: usize },
    #[error("{kind}: reserved bytes must be zero")]
    NonZeroPadding { kind: &'static str },
    #[error("{field} value {value} does not fit the wire format")]
    Overflow { field: &'static str, value: String },
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.buf[self.pos..self.pos + N].try_into().expect("length checked by caller");
        self.pos += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_be_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_be_bytes(self.take())
    }
    fn u48(&mut self) -> u64 {
        let b: [u8; 6] = self.take();
        b.iter().fold(0u64, |acc, &x| (acc << 8) | u64::from(x))
    }
    fn u64(&mut self) -> u64 {
        u64::from_be_bytes(self.take())
    }
    fn rest(&mut self) -> &'a [u8] {
        let r = &self.buf[self.pos..];
        self.pos = self.buf.len();
        r
    }
}

fn exact(kind: &'static str, buf: &[u8], expected: usize) -> Result<(), CodecError> {
    if buf.len() != expected {
        return Err(CodecError::WrongLength { kind, expected, actual: buf.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FlowUpdate {
    pub command: u8,
    pub idle_timeout: u16,
    pub hard_timeout: u16,
    pub priority: u16,
    pub buffer_id: u32,
    pub out_port: u32,
    pub out_group: u32,
    pub cookie: u64,
    pub flags: u16,
    pub match_src: u16,
    pub match_dst: u16,
}

pub fn encode_flow_update(m: &FlowUpdate) -> [u8; FLOW_UPDATE_LEN] {
    let mut out = [0u8; FLOW_UPDATE_LEN];
    let mut v = Vec::with_capacity(FLOW_UPDATE_LEN);
    v.push(m.command);
    v.push(0);
    v.extend_from_slice(&m.idle_timeout.to_be_bytes());
    v.extend_from_slice(&m.hard_timeout.to_be_bytes());
    v.extend_from_slice(&m.priority.to_be_bytes());
    v.extend_from_slice(&m.buffer_id.to_be_bytes());
    v.extend_from_slice(&m.out_port.to_be_bytes());
    v.extend_from_slice(&m.out_group.to_be_bytes());
    v.extend_from_slice(&m.cookie.to_be_bytes());
    v.extend_from_slice(&m.flags.to_be_bytes());
    v.extend_from_slice(&m.match_src.to_be_bytes());
    v.extend_from_slice(&m.match_dst.to_be_bytes());
    v.extend_from_slice(&[0, 0]);
    out.copy_from_slice(&v);
    out
}

pub fn decode_flow_update(buf: &[u8]) -> Result<FlowUpdate, CodecError> {
    exact("flow update", buf, FLOW_UPDATE_LEN)?;
    let mut r = Reader::new(buf);
    let command = r.u8();
    let reserved = r.u8();
    let m = FlowUpdate {
        command,
        idle_timeout: r.u16(),
        hard_timeout: r.u16(),
        priority: r.u16(),
        buffer_id: r.u32(),
        out_port: r.u32(),
        out_group: r.u32(),
        cookie: r.u64(),
        flags: r.u16(),
        match_src: r.u16(),
        match_dst: r.u16(),
    };
    let pad = r.u16();
    if reserved != 0 || pad != 0 {
        return Err(CodecError::NonZeroPadding { kind: "flow update" });
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EdgeSync {
    pub link_type: u8,
    pub status: u8,
    pub bandwidth_kbps: u32,
    /// Link weight, carried with three decimal places.
    pub weight: f64,
    pub src: u32,
    pub dst: u32,
    /// Milliseconds; must fit in 48 bits.
    pub timestamp_ms: u64,
}

pub fn encode_edge_sync(m: &EdgeSync) -> Result<[u8; EDGE_SYNC_LEN], CodecError> {
    let milli = (m.weight * 1000.0).round();
    if !(0.0..=f64::from(u32::MAX)).contains(&milli) {
        return Err(CodecError::Overflow { field: "weight", value: m.weight.to_string() });
    }
    if m.timestamp_ms > MAX_TIMESTAMP_MS {
        return Err(CodecError::Overflow { field: "timestamp_ms", value: m.timestamp_ms.to_string() });
    }
    let mut v = Vec::with_capacity(EDGE_SYNC_LEN);
    v.push(m.link_type);
    v.push(m.status);
    v.extend_from_slice(&m.bandwidth_kbps.to_be_bytes());
    v.extend_from_slice(&(milli as u32).to_be_bytes());
    v.extend_from_slice(&m.src.to_be_bytes());
    v.extend_from_slice(&m.dst.to_be_bytes());
    v.extend_from_slice(&m.timestamp_ms.to_be_bytes()[2..]);
    let mut out = [0u8; EDGE_SYNC_LEN];
    out.copy_from_slice(&v);
    Ok(out)
}

pub fn decode_edge_sync(buf: &[u8]) -> Result<EdgeSync, CodecError> {
    exact("edge sync", buf, EDGE_SYNC_LEN)?;
    let mut r = Reader::new(buf);
    Ok(EdgeSync {
        link_type: r.u8(),
        status: r.u8(),
        bandwidth_kbps: r.u32(),
        weight: f64::from(r.u32()) / 1000.0,
        src: r.u32(),
        dst: r.u32(),
        timestamp_ms: r.u48(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FlowRequest {
    pub xid: u32,
    pub buffer_id: u32,
    pub total_len: u16,
    pub reason: u8,
    pub table_id: u8,
    pub cookie: u64,
    pub match_src: u16,
    pub match_dst: u16,
    pub data: Vec<u8>,
}

impl FlowRequest {
    pub fn encoded_len(&self) -> usize {
        FLOW_REQUEST_MIN_LEN + self.data.len()
    }
}

pub fn encode_flow_request(m: &FlowRequest) -> Result<Vec<u8>, CodecError> {
    let len = m.encoded_len();
    let len16 = u16::try_from(len)
        .map_err(|_| CodecError::Overflow { field: "flow request length", value: len.to_string() })?;
    let mut v = Vec::with_capacity(len);
    v.push(FLOW_REQUEST_VERSION);
    v.push(FLOW_REQUEST_TYPE);
    v.extend_from_slice(&len16.to_be_bytes());
    v.extend_from_slice(&m.xid.to_be_bytes());
    v.extend_from_slice(&m.buffer_id.to_be_bytes());
    v.extend_from_slice(&m.total_len.to_be_bytes());
    v.push(m.reason);
    v.push(m.table_id);
    v.extend_from_slice(&m.cookie.to_be_bytes());
    v.extend_from_slice(&m.match_src.to_be_bytes());
    v.extend_from_slice(&m.match_dst.to_be_bytes());
    v.extend_from_slice(&m.data);
    Ok(v)
}

pub fn decode_flow_request(buf: &[u8]) -> Result<FlowRequest, CodecError> {
    if buf.len() < FLOW_REQUEST_MIN_LEN {
        return Err(CodecError::TooShort { kind: "flow request", min: FLOW_REQUEST_MIN_LEN, actual: buf.len() });
    }
    let mut r = Reader::new(buf);
    let version = r.u8();
    if version != FLOW_REQUEST_VERSION {
        return Err(CodecError::BadVersion(version));
    }
    let kind = r.u8();
    if kind != FLOW_REQUEST_TYPE {
        return Err(CodecError::BadType(kind));
    }
    let header = usize::from(r.u16());
    if header != buf.len() {
        return Err(CodecError::LengthMismatch { header, actual: buf.len() });
    }
    Ok(FlowRequest {
        xid: r.u32(),
        buffer_id: r.u32(),
        total_len: r.u16(),
        reason: r.u8(),
        table_id: r.u8(),
        cookie: r.u64(),
        match_src: r.u16(),
        match_dst: r.u16(),
        data: r.rest().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Handover {
    pub leo: u32,
    pub from: u32,
    pub to: u32,
    pub slot: u32,
}

pub fn encode_handover(m: &Handover) -> [u8; HANDOVER_LEN] {
    let mut out = [0u8; HANDOVER_LEN];
    out[0..4].copy_from_slice(&m.leo.to_be_bytes());
    out[4..8].copy_from_slice(&m.from.to_be_bytes());
    out[8..12].copy_from_slice(&m.to.to_be_bytes());
    out[12..16].copy_from_slice(&m.slot.to_be_bytes());
    out
}

pub fn decode_handover(buf: &[u8]) -> Result<Handover, CodecError> {
    exact("handover", buf, HANDOVER_LEN)?;
    let mut r = Reader::new(buf);
    Ok(Handover { leo: r.u32(), from: r.u32(), to: r.u32(), slot: r.u32() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_messages_are_zero_bytes() {
        assert_eq!(encode_flow_update(&FlowUpdate::default()), [0u8; 36]);
        assert_eq!(encode_edge_sync(&EdgeSync::default()).unwrap(), [0u8; 24]);
        assert_eq!(encode_handover(&Handover::default()), [0u8; 16]);
        let req = encode_flow_request(&FlowRequest::default()).unwrap();
        assert_eq!(req.len(), 28);
        assert_eq!(&req[..4], &[0x04, 10, 0, 28]);
        assert!(req[4..].iter().all(|&b| b == 0));
    }

    #[test]
    fn flow_update_field_offsets() {
        let m = FlowUpdate { command: 1, cookie: 0x0102030405060708, match_dst: 0xABCD, ..Default::default() };
        let b = encode_flow_update(&m);
        assert_eq!(b[0], 1);
        assert_eq!(&b[20..28], &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(&b[32..34], &[0xAB, 0xCD]);
        assert_eq!(decode_flow_update(&b).unwrap(), m);
    }

    #[test]
    fn decode_rejects() {
        assert!(matches!(decode_flow_update(&[0; 35]), Err(CodecError::WrongLength { .. })));
        let mut b = [0u8; 36];
        b[35] = 1;
        assert!(matches!(decode_flow_update(&b), Err(CodecError::NonZeroPadding { .. })));
        assert!(decode_edge_sync(&[0; 25]).is_err());
        assert!(matches!(decode_flow_request(&[0; 27]), Err(CodecError::TooShort { .. })));
        let mut req = encode_flow_request(&FlowRequest::default()).unwrap();
        req[1] = 11;
        assert_eq!(decode_flow_request(&req), Err(CodecError::BadType(11)));
        req[1] = 10;
        req.push(0);
        assert!(matches!(decode_flow_request(&req), Err(CodecError::LengthMismatch { header: 28, actual: 29 })));
    }

    #[test]
    fn edge_sync_quantizes_and_guards() {
        let m = EdgeSync { weight: 1.23456, timestamp_ms: MAX_TIMESTAMP_MS, ..Default::default() };
        let d = decode_edge_sync(&encode_edge_sync(&m).unwrap()).unwrap();
        assert!((d.weight - m.weight).abs() <= 5e-4);
        assert_eq!(d.timestamp_ms, MAX_TIMESTAMP_MS);
        assert!(encode_edge_sync(&EdgeSync { timestamp_ms: 1 << 48, ..Default::default() }).is_err());
        assert!(encode_edge_sync(&EdgeSync { weight: -1.0, ..Default::default() }).is_err());
    }
}
