//! Ethernet + IPv4 frames and 5-tuple extraction.

use std::net::Ipv4Addr;
use std::sync::Arc;

use crate::netfn::{ipv4, Layout, Packet};

use super::SimError;

pub const MAC_HEADER_BYTES: usize = 14;
pub const IPV4_HEADER_BYTES: usize = 20;
pub const MIN_FRAME_BYTES: usize = MAC_HEADER_BYTES + IPV4_HEADER_BYTES;

pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

pub mod tcp_flags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
}

const ETHERTYPE_IPV4: [u8; 2] = [0x08, 0x00];
const IP: usize = MAC_HEADER_BYTES;

/// Internet checksum over an IPv4 header with its checksum field zeroed.
pub fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header
        .chunks(2)
        .enumerate()
        .filter(|&(k, _)| k != 5)
        .map(|(_, w)| u32::from(u16::from_be_bytes([w[0], *w.get(1).unwrap_or(&0)])))
        .sum();
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

/// Builds a bare 20-byte IPv4 header with a valid checksum.
pub fn ipv4_header(src: Ipv4Addr, dst: Ipv4Addr, protocol: u8, total_len: u16) -> [u8; IPV4_HEADER_BYTES] {
    let mut h = [0u8; IPV4_HEADER_BYTES];
    h[0] = 0x45;
    h[2..4].copy_from_slice(&total_len.to_be_bytes());
    h[6] = 0x40; // don't fragment
    h[8] = 64;
    h[9] = protocol;
    h[12..16].copy_from_slice(&src.octets());
    h[16..20].copy_from_slice(&dst.octets());
    let c = ipv4_checksum(&h);
    h[10..12].copy_from_slice(&c.to_be_bytes());
    h
}

/// A MAC header, an IPv4 header and whatever follows. The byte length is
/// always `14 + ip total length`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFrame {
    bytes: Vec<u8>,
}

impl RawFrame {
    pub fn parse(bytes: &[u8]) -> Result<Self, SimError> {
        if bytes.len() < MIN_FRAME_BYTES {
            return Err(SimError::TruncatedFrame { len: bytes.len() });
        }
        let version = bytes[IP] >> 4;
        if version != 4 {
            return Err(SimError::NotIpv4 { version });
        }
        let header_len = usize::from(bytes[IP] & 0x0F) * 4;
        let total = usize::from(u16::from_be_bytes([bytes[IP + 2], bytes[IP + 3]]));
        if header_len < IPV4_HEADER_BYTES || total < header_len {
            return Err(SimError::MalformedHeader("ipv4 header length"));
        }
        if MAC_HEADER_BYTES + total != bytes.len() {
            return Err(SimError::LengthMismatch {
                expected: MAC_HEADER_BYTES + total,
                got: bytes.len(),
            });
        }
        Ok(Self {
            bytes: bytes.to_vec(),
        })
    }

    /// A frame with zeroed MAC addresses around the given IP payload.
    pub fn build(src: Ipv4Addr, dst: Ipv4Addr, protocol: u8, ip_payload: &[u8]) -> Result<Self, SimError> {
        let total = u16::try_from(IPV4_HEADER_BYTES + ip_payload.len())
            .map_err(|_| SimError::MalformedHeader("frame too long"))?;
        let mut bytes = Vec::with_capacity(MAC_HEADER_BYTES + usize::from(total));
        bytes.extend_from_slice(&[0u8; 12]);
        bytes.extend_from_slice(&ETHERTYPE_IPV4);
        bytes.extend_from_slice(&ipv4_header(src, dst, protocol, total));
        bytes.extend_from_slice(ip_payload);
        Ok(Self { bytes })
    }

    /// TCP segment with a 20-byte header and no data.
    pub fn tcp(src: Ipv4Addr, s_port: u16, dst: Ipv4Addr, d_port: u16, flags: u8) -> Self {
        let mut seg = [0u8; 20];
        seg[..2].copy_from_slice(&s_port.to_be_bytes());
        seg[2..4].copy_from_slice(&d_port.to_be_bytes());
        seg[12] = 5 << 4;
        seg[13] = flags;
        seg[14..16].copy_from_slice(&0xFFFFu16.to_be_bytes());
        Self::build(src, dst, PROTO_TCP, &seg).expect("small frame")
    }

    pub fn udp(
        src: Ipv4Addr,
        s_port: u16,
        dst: Ipv4Addr,
        d_port: u16,
        data: &[u8],
    ) -> Result<Self, SimError> {
        let len = u16::try_from(8 + data.len()).map_err(|_| SimError::MalformedHeader("frame too long"))?;
        let mut seg = Vec::with_capacity(usize::from(len));
        seg.extend_from_slice(&s_port.to_be_bytes());
        seg.extend_from_slice(&d_port.to_be_bytes());
        seg.extend_from_slice(&len.to_be_bytes());
        seg.extend_from_slice(&[0, 0]);
        seg.extend_from_slice(data);
        Self::build(src, dst, PROTO_UDP, &seg)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn mac_header(&self) -> &[u8] {
        &self.bytes[..MAC_HEADER_BYTES]
    }

    pub fn ip_header(&self) -> &[u8] {
        &self.bytes[IP..IP + self.ip_header_len()]
    }

    fn ip_header_len(&self) -> usize {
        usize::from(self.bytes[IP] & 0x0F) * 4
    }

    /// Everything after the IP header.
    pub fn transport(&self) -> &[u8] {
        &self.bytes[IP + self.ip_header_len()..]
    }

    pub fn src(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.u32_at(IP + 12))
    }

    pub fn dst(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.u32_at(IP + 16))
    }

    pub fn protocol(&self) -> u8 {
        self.bytes[IP + 9]
    }

    pub fn checksum(&self) -> u16 {
        u16::from_be_bytes([self.bytes[IP + 10], self.bytes[IP + 11]])
    }

    pub fn checksum_ok(&self) -> bool {
        self.checksum() == ipv4_checksum(self.ip_header())
    }

    /// `(s_port, d_port)` for TCP and UDP frames long enough to carry them.
    pub fn ports(&self) -> Option<(u16, u16)> {
        let t = self.transport();
        let has_ports = matches!(self.protocol(), PROTO_TCP | PROTO_UDP) && t.len() >= 4;
        has_ports.then(|| (u16::from_be_bytes([t[0], t[1]]), u16::from_be_bytes([t[2], t[3]])))
    }

    /// The TCP flags byte, read by position so it survives a zeroed
    /// protocol field.
    pub fn tcp_flags(&self) -> Option<u8> {
        self.transport().get(13).copied()
    }

    fn u32_at(&self, at: usize) -> u32 {
        u32::from_be_bytes(self.bytes[at..at + 4].try_into().expect("4 bytes"))
    }

    fn fix_checksum(&mut self) {
        let c = ipv4_checksum(self.ip_header());
        self.bytes[IP + 10..IP + 12].copy_from_slice(&c.to_be_bytes());
    }

    pub fn set_src(&mut self, a: Ipv4Addr) {
        self.bytes[IP + 12..IP + 16].copy_from_slice(&a.octets());
        self.fix_checksum();
    }

    pub fn set_dst(&mut self, a: Ipv4Addr) {
        self.bytes[IP + 16..IP + 20].copy_from_slice(&a.octets());
        self.fix_checksum();
    }

    pub fn set_protocol(&mut self, p: u8) {
        self.bytes[IP + 9] = p;
        self.fix_checksum();
    }

    /// Writes ports in place when the transport header is long enough.
    pub fn set_ports(&mut self, s_port: u16, d_port: u16) {
        let start = IP + self.ip_header_len();
        if self.bytes.len() >= start + 4 {
            self.bytes[start..start + 2].copy_from_slice(&s_port.to_be_bytes());
            self.bytes[start + 2..start + 4].copy_from_slice(&d_port.to_be_bytes());
        }
    }

    /// Overwrites addresses, ports and protocol.
    pub fn set_five_tuple(&mut self, s_ip: u32, d_ip: u32, s_port: u16, d_port: u16, prot: u8) {
        self.set_ports(s_port, d_port);
        self.bytes[IP + 9] = prot;
        self.bytes[IP + 12..IP + 16].copy_from_slice(&s_ip.to_be_bytes());
        self.bytes[IP + 16..IP + 20].copy_from_slice(&d_ip.to_be_bytes());
        self.fix_checksum();
    }

    /// The entry middlebox's deletion rule: all five tuple fields set to 0.
    pub fn zero_five_tuple(&mut self) {
        self.set_five_tuple(0, 0, 0, 0, 0);
    }

    /// True when addresses, protocol and (where present) ports are all 0.
    pub fn five_tuple_is_zero(&self) -> bool {
        let t = self.transport();
        self.u32_at(IP + 12) == 0
            && self.u32_at(IP + 16) == 0
            && self.protocol() == 0
            && t.iter().take(4).all(|&b| b == 0)
    }

    /// Copies the 5-tuple of `x` back into the frame.
    pub fn apply_packet(&mut self, x: &Packet) -> Result<(), SimError> {
        let v = |i| x.get(i).map_err(SimError::from);
        self.set_five_tuple(
            v(ipv4::S_IP)? as u32,
            v(ipv4::D_IP)? as u32,
            v(ipv4::S_PORT)? as u16,
            v(ipv4::D_PORT)? as u16,
            v(ipv4::PROT)? as u8,
        );
        Ok(())
    }

    /// `a.b.c.d:p -> e.f.g.h:q prot k`
    pub fn summary(&self) -> String {
        let (sp, dp) = self.ports().unwrap_or((0, 0));
        let mut s = format!(
            "{}:{} -> {}:{} prot {}",
            self.src(),
            sp,
            self.dst(),
            dp,
            self.protocol()
        );
        if self.protocol() == PROTO_TCP {
            if let Some(f) = self.tcp_flags() {
                s.push_str(&format!(" flags {}", flag_names(f)));
            }
        }
        s
    }
}

fn flag_names(f: u8) -> String {
    let names: Vec<&str> = [
        (tcp_flags::SYN, "SYN"),
        (tcp_flags::ACK, "ACK"),
        (tcp_flags::FIN, "FIN"),
        (tcp_flags::RST, "RST"),
        (tcp_flags::PSH, "PSH"),
    ]
    .iter()
    .filter(|(bit, _)| f & bit != 0)
    .map(|&(_, n)| n)
    .collect();
    if names.is_empty() {
        "-".into()
    } else {
        names.join("|")
    }
}

/// Reads the 5-tuple into a packet over `layout`; every other field is 0.
/// Ports read as 0 when the frame has no TCP/UDP header.
pub fn fields_from_frame(f: &RawFrame, layout: &Arc<Layout>) -> Result<Packet, SimError> {
    let mut x = Packet::zeroed(layout.clone());
    let (sp, dp) = f.ports().unwrap_or((0, 0));
    let values = [
        (ipv4::S_IP, "s_ip", u64::from(u32::from(f.src()))),
        (ipv4::D_IP, "d_ip", u64::from(u32::from(f.dst()))),
        (ipv4::S_PORT, "s_port", u64::from(sp)),
        (ipv4::D_PORT, "d_port", u64::from(dp)),
        (ipv4::PROT, "prot", u64::from(f.protocol())),
    ];
    for (index, name, v) in values {
        if layout.index_of(name) != Some(index) {
            return Err(SimError::Layout(format!(
                "layout has no `{name}` at field {index}"
            )));
        }
        x.set(index, v)?;
    }
    Ok(x)
}
