use std::fmt;

use super::signature::SignatureStub;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HandshakeStatus {
    Established,
    TerminatedWithError(u16),
    /// Connection closed without an alert.
    ConnectionDropped,
}

/// Everything a client observes from one connection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HandshakeOutcome {
    pub status: HandshakeStatus,
    /// Simulated ticks.
    pub latency: u32,
    pub signature: Option<SignatureStub>,
    /// Client-side verification of the received signature.
    pub verified_ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageKind {
    ClientHello,
    ServerHello,
    CertificateVerify,
    Finished,
    Alert(u16),
    Close,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessageKind::ClientHello => f.write_str("ClientHello+KeyShare"),
            MessageKind::ServerHello => f.write_str("ServerHello+KeyShare"),
            MessageKind::CertificateVerify => f.write_str("CertificateVerify"),
            MessageKind::Finished => f.write_str("Finished"),
            MessageKind::Alert(c) => write!(f, "Alert({c:#06x})"),
            MessageKind::Close => f.write_str("Close"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageRecord {
    pub connection: u64,
    pub direction: Direction,
    pub kind: MessageKind,
}

/// Messages of one connection, given its outcome.
pub fn message_sequence(connection: u64, outcome: &HandshakeOutcome) -> Vec<MessageRecord> {
    let rec = |direction, kind| MessageRecord { connection, direction, kind };
    let mut v = vec![
        rec(Direction::ClientToServer, MessageKind::ClientHello),
        rec(Direction::ServerToClient, MessageKind::ServerHello),
    ];
    match outcome.status {
        HandshakeStatus::Established => {
            v.push(rec(Direction::ServerToClient, MessageKind::CertificateVerify));
            v.push(rec(Direction::ServerToClient, MessageKind::Finished));
            if outcome.verified_ok {
                v.push(rec(Direction::ClientToServer, MessageKind::Finished));
            } else {
                v.push(rec(Direction::ClientToServer, MessageKind::Alert(0x33)));
            }
        }
        HandshakeStatus::TerminatedWithError(code) => v.push(rec(Direction::ServerToClient, MessageKind::Alert(code))),
        HandshakeStatus::ConnectionDropped => v.push(rec(Direction::ServerToClient, MessageKind::Close)),
    }
    v
}

/// CSV export of a message log.
pub fn message_log_csv(records: &[(MessageRecord, u32)]) -> String {
    let mut s = String::from("connection,direction,message,latency\n");
    for (r, latency) in records {
        let dir = match r.direction {
            Direction::ClientToServer => "c2s",
            Direction::ServerToClient => "s2c",
        };
        s.push_str(&format!("{},{dir},{},{latency}\n", r.connection, r.kind));
    }
    s
}
