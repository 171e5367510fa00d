//! The public classical channel: message framing, pad masking, and the
//! transcript an eavesdropper would record.

use super::pad::PadLedger;
use super::CascadeError;
use crate::gf2::BitVec;
use std::collections::VecDeque;
use std::fmt;

/// One of the two protocol endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Alice,
    Bob,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Alice => Side::Bob,
            Side::Bob => Side::Alice,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Alice => "A",
            Side::Bob => "B",
        })
    }
}

/// What a message is for. The wire name is its [`fmt::Display`] form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    SampleIndices,
    SampleBits,
    SampleMismatch,
    PassParities,
    SearchBlock,
    BlockParity,
    HalfParity,
    Steer,
    ErrorAt,
    Confirm,
    ConfirmResult,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::SampleIndices => "sample_indices",
            MessageKind::SampleBits => "sample_bits",
            MessageKind::SampleMismatch => "sample_mismatch",
            MessageKind::PassParities => "pass_parities",
            MessageKind::SearchBlock => "search_block",
            MessageKind::BlockParity => "block_parity",
            MessageKind::HalfParity => "half_parity",
            MessageKind::Steer => "steer",
            MessageKind::ErrorAt => "error_at",
            MessageKind::Confirm => "confirm",
            MessageKind::ConfirmResult => "confirm_result",
        })
    }
}

/// One framed message. For a masked message the payload here is what the
/// wire carried — pad-masked bits — while the receiver sees the clear
/// form after [`Link::receive`] unmasks it.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub seq: u64,
    pub from: Side,
    pub kind: MessageKind,
    pub payload: BitVec,
    pub masked: bool,
}

impl Message {
    /// Wire rendering: `seq direction kind payload_hex masked:{0|1}`.
    pub fn render(&self) -> String {
        format!(
            "{} {}->{} {} {} masked:{}",
            self.seq,
            self.from,
            self.from.other(),
            self.kind,
            self.payload.to_hex(),
            u8::from(self.masked)
        )
    }
}

/// Append-only record of everything that crossed the channel, exactly as
/// it crossed it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelLog {
    pub messages: Vec<Message>,
}

impl ChannelLog {
    /// One [`Message::render`] line per message, newline-terminated.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for msg in &self.messages {
            out.push_str(&msg.render());
            out.push('\n');
        }
        out
    }

    /// Total masked payload bits — what the one-time pad had to cover.
    pub fn masked_bits(&self) -> u64 {
        self.messages
            .iter()
            .filter(|m| m.masked)
            .map(|m| m.payload.len() as u64)
            .sum()
    }
}

/// The two-endpoint link: in-order delivery per direction, pad masking,
/// and a shared transcript.
///
/// Each endpoint owns a [`PadLedger`] seeded identically; a masked send
/// draws from the sender's ledger and the matching receive draws the same
/// bits from the receiver's, so the ledgers agree whenever every sent
/// message has been consumed.
#[derive(Debug)]
pub struct Link {
    a_inbox: VecDeque<Message>,
    b_inbox: VecDeque<Message>,
    log: ChannelLog,
    seq: u64,
    alice_pad: PadLedger,
    bob_pad: PadLedger,
}

impl Link {
    pub fn new(pad_seed: u64, pad_budget: u64) -> Link {
        Link {
            a_inbox: VecDeque::new(),
            b_inbox: VecDeque::new(),
            log: ChannelLog::default(),
            seq: 0,
            alice_pad: PadLedger::new(pad_seed, pad_budget),
            bob_pad: PadLedger::new(pad_seed, pad_budget),
        }
    }

    fn pad_mut(&mut self, side: Side) -> &mut PadLedger {
        match side {
            Side::Alice => &mut self.alice_pad,
            Side::Bob => &mut self.bob_pad,
        }
    }

    fn deliver(&mut self, msg: Message) {
        self.log.messages.push(msg.clone());
        match msg.from {
            Side::Alice => self.b_inbox.push_back(msg),
            Side::Bob => self.a_inbox.push_back(msg),
        }
        self.seq += 1;
    }

    /// Send a message in the clear; the transcript records it verbatim.
    pub fn send_clear(&mut self, from: Side, kind: MessageKind, payload: BitVec) {
        let msg = Message {
            seq: self.seq,
            from,
            kind,
            payload,
            masked: false,
        };
        self.deliver(msg);
    }

    /// Send a message under the one-time pad: the wire (and therefore the
    /// transcript) carries only the masked bits.
    pub fn send_masked(
        &mut self,
        from: Side,
        kind: MessageKind,
        payload: BitVec,
    ) -> Result<(), CascadeError> {
        let pad = self.pad_mut(from).draw(payload.len())?;
        let msg = Message {
            seq: self.seq,
            from,
            kind,
            payload: payload.xor(&pad),
            masked: true,
        };
        self.deliver(msg);
        Ok(())
    }

    /// Take the next message addressed to `side`, unmasking with that
    /// side's pad when needed.
    pub fn receive(&mut self, side: Side) -> Result<Message, CascadeError> {
        let inbox = match side {
            Side::Alice => &mut self.a_inbox,
            Side::Bob => &mut self.b_inbox,
        };
        let mut msg = inbox
            .pop_front()
            .ok_or(CascadeError::ChannelEmpty { side })?;
        if msg.masked {
            let pad = self.pad_mut(side).draw(msg.payload.len())?;
            msg.payload = msg.payload.xor(&pad);
        }
        Ok(msg)
    }

    pub fn pad_consumed_by(&self, side: Side) -> u64 {
        match side {
            Side::Alice => self.alice_pad.consumed(),
            Side::Bob => self.bob_pad.consumed(),
        }
    }

    /// Pad spend of the link (the senders' view).
    pub fn pad_consumed(&self) -> u64 {
        self.alice_pad.consumed().max(self.bob_pad.consumed())
    }

    pub fn pad_remaining(&self) -> u64 {
        self.alice_pad.remaining().min(self.bob_pad.remaining())
    }

    pub fn log(&self) -> &ChannelLog {
        &self.log
    }

    pub fn into_log(self) -> ChannelLog {
        self.log
    }
}

/// Encode a list of 0-based indices as 32-bit big-endian words carrying
/// the 1-based values.
pub fn encode_indices(indices: &[usize]) -> BitVec {
    let mut out = BitVec::zeros(32 * indices.len());
    for (slot, &idx) in indices.iter().enumerate() {
        let value = u32::try_from(idx + 1).expect("index fits the wire format");
        for bit in 0..32 {
            out.set(32 * slot + bit, value & (1 << (31 - bit)) != 0);
        }
    }
    out
}

/// Decode a payload written by [`encode_indices`] back to 0-based indices.
pub fn decode_indices(payload: &BitVec) -> Result<Vec<usize>, CascadeError> {
    if !payload.len().is_multiple_of(32) {
        return Err(CascadeError::MalformedPayload {
            reason: "index payload length is not a multiple of 32",
        });
    }
    let mut out = Vec::with_capacity(payload.len() / 32);
    for slot in 0..payload.len() / 32 {
        let mut value: u32 = 0;
        for bit in 0..32 {
            value = (value << 1) | u32::from(payload.get(32 * slot + bit));
        }
        if value == 0 {
            return Err(CascadeError::MalformedPayload {
                reason: "wire indices are 1-based; zero is invalid",
            });
        }
        out.push(value as usize - 1);
    }
    Ok(out)
}
