//! (N, M) multiple-description coding with discrete Mojette projections.
//!
//! A payload is laid out as a `Q x P` block of 16-bit symbols with `Q = M`
//! rows. Each description is the projection of the block along direction
//! `(p, 1)`: bin `b` holds the sum of every symbol at column `k`, row `l`
//! with `b = k + p*l - min(0, p*(Q-1))`. With `q = 1` for every direction,
//! any `M` distinct directions satisfy `Q <= sum(q_i)`, so any `M`
//! descriptions invert the block exactly.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::time::SimTime;

/// Bytes of per-description header on the wire: group id, index, `p`, `P`,
/// `Q`, pad length.
pub const DESCRIPTION_HEADER_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdcError {
    #[error("need {required} distinct descriptions, got {available}")]
    InsufficientDescriptions { required: usize, available: usize },
    #[error("corrupt description set: {0}")]
    CorruptDescription(String),
    #[error("invalid codec configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecConfig {
    pub n_descriptions: usize,
    pub m_required: usize,
    pub projection_dirs: Vec<i32>,
}

impl CodecConfig {
    pub fn new(n: usize, m: usize, projection_dirs: Vec<i32>) -> Result<Self, MdcError> {
        if m == 0 || m > n {
            return Err(MdcError::InvalidConfig(format!(
                "need 0 < M <= N, got N={n} M={m}"
            )));
        }
        if projection_dirs.len() != n {
            return Err(MdcError::InvalidConfig(format!(
                "{} directions for {n} descriptions",
                projection_dirs.len()
            )));
        }
        let distinct: BTreeSet<i32> = projection_dirs.iter().copied().collect();
        if distinct.len() != n {
            return Err(MdcError::InvalidConfig("directions must be distinct".into()));
        }
        Ok(Self {
            n_descriptions: n,
            m_required: m,
            projection_dirs,
        })
    }

    /// Uses the `n` directions closest to zero: `0, 1, -1, 2, -2, ...`.
    pub fn with_default_dirs(n: usize, m: usize) -> Result<Self, MdcError> {
        Self::new(n, m, default_directions(n))
    }
}

pub fn default_directions(n: usize) -> Vec<i32> {
    (0..n as i32)
        .map(|i| if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) })
        .collect()
}

/// `rows x cols` block of 16-bit symbols, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub rows: usize,
    pub cols: usize,
    pub symbols: Vec<u16>,
    pub pad_len: usize,
}

impl Block {
    pub fn get(&self, col: usize, row: usize) -> u16 {
        self.symbols[row * self.cols + col]
    }

    pub fn symbol_sum(&self) -> u64 {
        self.symbols.iter().map(|&s| s as u64).sum()
    }

    /// Inverse of [`make_block`].
    pub fn to_payload(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.symbols.iter().flat_map(|s| s.to_be_bytes()).collect();
        bytes.truncate(bytes.len() - self.pad_len);
        bytes
    }
}

/// Splits `payload` into big-endian 16-bit symbols and zero-pads it to an
/// `m`-row rectangle.
pub fn make_block(payload: &[u8], m: usize) -> Block {
    assert!(m >= 1, "block needs at least one row");
    let symbols_needed = payload.len().div_ceil(2);
    let cols = symbols_needed.div_ceil(m).max(1);
    let total_bytes = 2 * cols * m;
    let mut padded = payload.to_vec();
    padded.resize(total_bytes, 0);
    let symbols = padded
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Block {
        rows: m,
        cols,
        symbols,
        pad_len: total_bytes - payload.len(),
    }
}

/// One Mojette projection of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Description {
    pub group_id: u64,
    pub index: usize,
    pub p: i32,
    pub cols: usize,
    pub rows: usize,
    pub pad_len: usize,
    pub bins: Vec<u64>,
}

impl Description {
    /// Transmission size: header plus one 16-bit word per bin.
    pub fn wire_size(&self) -> usize {
        DESCRIPTION_HEADER_BYTES + 2 * self.bins.len()
    }
}

pub fn bin_count(cols: usize, rows: usize, p: i32) -> usize {
    cols + (rows - 1) * p.unsigned_abs() as usize
}

fn bin_offset(rows: usize, p: i32) -> i64 {
    -(0i64.min(p as i64 * (rows as i64 - 1)))
}

fn bin_index(col: usize, row: usize, p: i32, offset: i64) -> usize {
    (col as i64 + p as i64 * row as i64 + offset) as usize
}

/// Projects `block` along `(p, 1)`.
pub fn project(block: &Block, p: i32) -> Description {
    let offset = bin_offset(block.rows, p);
    let mut bins = vec![0u64; bin_count(block.cols, block.rows, p)];
    for row in 0..block.rows {
        for col in 0..block.cols {
            bins[bin_index(col, row, p, offset)] += block.get(col, row) as u64;
        }
    }
    Description {
        group_id: 0,
        index: 0,
        p,
        cols: block.cols,
        rows: block.rows,
        pad_len: block.pad_len,
        bins,
    }
}

/// Encodes `payload` into `config.n_descriptions` descriptions.
pub fn encode(payload: &[u8], config: &CodecConfig, group_id: u64) -> Vec<Description> {
    let block = make_block(payload, config.m_required);
    config
        .projection_dirs
        .iter()
        .enumerate()
        .map(|(index, &p)| Description {
            group_id,
            index,
            ..project(&block, p)
        })
        .collect()
}

/// Rebuilds the payload from any `M` or more distinct descriptions.
///
/// Inversion repeatedly picks a bin whose line crosses exactly one unknown
/// symbol, solves it, and subtracts it from every projection.
pub fn decode(descriptions: &[Description], config: &CodecConfig) -> Result<Vec<u8>, MdcError> {
    let mut by_dir: BTreeMap<i32, &Description> = BTreeMap::new();
    for d in descriptions {
        by_dir.entry(d.p).or_insert(d);
    }
    if by_dir.len() < config.m_required {
        return Err(MdcError::InsufficientDescriptions {
            required: config.m_required,
            available: by_dir.len(),
        });
    }
    let first = *by_dir.values().next().unwrap();
    let (cols, rows, pad_len, group) = (first.cols, first.rows, first.pad_len, first.group_id);
    if rows == 0 || cols == 0 {
        return Err(MdcError::CorruptDescription("empty block dimensions".into()));
    }
    for d in by_dir.values() {
        if (d.cols, d.rows, d.pad_len, d.group_id) != (cols, rows, pad_len, group) {
            return Err(MdcError::CorruptDescription(
                "descriptions disagree on group or dimensions".into(),
            ));
        }
        if d.bins.len() != bin_count(cols, rows, d.p) {
            return Err(MdcError::CorruptDescription(format!(
                "direction {} has {} bins, expected {}",
                d.p,
                d.bins.len(),
                bin_count(cols, rows, d.p)
            )));
        }
    }

    struct Projection {
        p: i32,
        offset: i64,
        residue: Vec<i64>,
        unknown: Vec<u32>,
    }
    let mut projections: Vec<Projection> = by_dir
        .values()
        .map(|d| {
            let offset = bin_offset(rows, d.p);
            let mut unknown = vec![0u32; d.bins.len()];
            for row in 0..rows {
                for col in 0..cols {
                    unknown[bin_index(col, row, d.p, offset)] += 1;
                }
            }
            Projection {
                p: d.p,
                offset,
                residue: d.bins.iter().map(|&b| b as i64).collect(),
                unknown,
            }
        })
        .collect();

    let mut symbols: Vec<Option<u16>> = vec![None; rows * cols];
    let mut remaining = rows * cols;
    let mut queue: Vec<(usize, usize)> = Vec::new();
    for (pi, proj) in projections.iter().enumerate() {
        for (b, &n) in proj.unknown.iter().enumerate() {
            if n == 1 {
                queue.push((pi, b));
            }
        }
    }

    while let Some((pi, b)) = queue.pop() {
        if projections[pi].unknown[b] != 1 {
            continue;
        }
        // Locate the single unknown symbol on this line.
        let proj = &projections[pi];
        let target = (0..rows).find_map(|row| {
            let col = b as i64 - proj.offset - proj.p as i64 * row as i64;
            (0..cols as i64).contains(&col).then_some(col as usize).and_then(|col| {
                symbols[row * cols + col].is_none().then_some((col, row))
            })
        });
        let Some((col, row)) = target else {
            return Err(MdcError::CorruptDescription("lost track of unknown symbol".into()));
        };
        let value = proj.residue[b];
        let value = u16::try_from(value).map_err(|_| {
            MdcError::CorruptDescription(format!("symbol ({col},{row}) resolves to {value}"))
        })?;
        symbols[row * cols + col] = Some(value);
        remaining -= 1;
        for (qi, q) in projections.iter_mut().enumerate() {
            let bin = bin_index(col, row, q.p, q.offset);
            q.residue[bin] -= value as i64;
            q.unknown[bin] -= 1;
            if q.unknown[bin] == 1 {
                queue.push((qi, bin));
            }
        }
    }

    if remaining > 0 {
        return Err(MdcError::CorruptDescription(format!(
            "{remaining} symbols could not be reconstructed"
        )));
    }
    if projections.iter().any(|q| q.residue.iter().any(|&r| r != 0)) {
        return Err(MdcError::CorruptDescription(
            "projections inconsistent with reconstruction".into(),
        ));
    }
    let block = Block {
        rows,
        cols,
        symbols: symbols.into_iter().map(|s| s.unwrap()).collect(),
        pad_len,
    };
    if pad_len > 2 * rows * cols {
        return Err(MdcError::CorruptDescription("padding exceeds block".into()));
    }
    Ok(block.to_payload())
}

/// A description travelling as one network payload, with enough metadata
/// for the receiver to split the decoded group back into packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedDescription {
    pub flow_id: u32,
    pub group_id: u64,
    pub description_index: usize,
    /// `(sequence, length, created_at)` of each original packet, in order.
    pub members: Vec<(u64, usize, SimTime)>,
    pub description: Description,
}

/// One original packet handed to the sending buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferedPacket {
    pub sequence: u64,
    pub created_at: SimTime,
    pub payload: Vec<u8>,
}

/// Sender-side buffer: accumulates `group_size` packets of one flow, then
/// encodes their concatenation.
#[derive(Debug, Clone)]
pub struct GroupEncoder {
    flow_id: u32,
    config: CodecConfig,
    group_size: usize,
    flush_timeout: SimTime,
    pending: Vec<BufferedPacket>,
    oldest: Option<SimTime>,
    next_group: u64,
}

impl GroupEncoder {
    pub fn new(flow_id: u32, config: CodecConfig, group_size: usize, flush_timeout: SimTime) -> Self {
        assert!(group_size >= 1, "group size must be positive");
        Self {
            flow_id,
            config,
            group_size,
            flush_timeout,
            pending: Vec::new(),
            oldest: None,
            next_group: 0,
        }
    }

    /// Buffers a packet; returns the group's descriptions once it is full.
    pub fn push(&mut self, packet: BufferedPacket, now: SimTime) -> Option<Vec<TaggedDescription>> {
        self.oldest.get_or_insert(now);
        self.pending.push(packet);
        (self.pending.len() >= self.group_size).then(|| self.flush())
    }

    /// Time at which a partial group must be flushed, if one is pending.
    pub fn deadline(&self) -> Option<SimTime> {
        self.oldest.map(|t| t + self.flush_timeout)
    }

    /// Flushes a short group whose deadline has passed.
    pub fn poll_timeout(&mut self, now: SimTime) -> Option<Vec<TaggedDescription>> {
        match self.deadline() {
            Some(deadline) if deadline <= now && !self.pending.is_empty() => Some(self.flush()),
            _ => None,
        }
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    fn flush(&mut self) -> Vec<TaggedDescription> {
        let group_id = self.next_group;
        self.next_group += 1;
        self.oldest = None;
        let packets = std::mem::take(&mut self.pending);
        let members: Vec<_> = packets
            .iter()
            .map(|p| (p.sequence, p.payload.len(), p.created_at))
            .collect();
        let mut frame: Vec<u8> = packets.into_iter().flat_map(|p| p.payload).collect();
        if frame.is_empty() {
            frame.push(0);
        }
        encode(&frame, &self.config, group_id)
            .into_iter()
            .map(|description| TaggedDescription {
                flow_id: self.flow_id,
                group_id,
                description_index: description.index,
                members: members.clone(),
                description,
            })
            .collect()
    }
}

/// Receiver-side reassembly for one flow.
#[derive(Debug, Clone)]
pub struct GroupDecoder {
    config: CodecConfig,
    partial: BTreeMap<u64, Vec<TaggedDescription>>,
    done: BTreeSet<u64>,
}

/// An original packet recovered from a decoded group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredPacket {
    pub sequence: u64,
    pub created_at: SimTime,
    pub payload: Vec<u8>,
}

impl GroupDecoder {
    pub fn new(config: CodecConfig) -> Self {
        Self {
            config,
            partial: BTreeMap::new(),
            done: BTreeSet::new(),
        }
    }

    /// Accepts one description. Returns the group's packets the first time
    /// enough descriptions are available to decode it.
    pub fn receive(&mut self, tagged: TaggedDescription) -> Result<Option<Vec<RecoveredPacket>>, MdcError> {
        let group = tagged.group_id;
        if self.done.contains(&group) {
            return Ok(None);
        }
        let held = self.partial.entry(group).or_default();
        if held.iter().any(|t| t.description_index == tagged.description_index) {
            return Ok(None);
        }
        held.push(tagged);
        if held.len() < self.config.m_required {
            return Ok(None);
        }
        let descriptions: Vec<Description> = held.iter().map(|t| t.description.clone()).collect();
        let frame = decode(&descriptions, &self.config)?;
        let members = held[0].members.clone();
        self.partial.remove(&group);
        self.done.insert(group);

        let mut offset = 0;
        let mut out = Vec::with_capacity(members.len());
        for (sequence, len, created_at) in members {
            let end = offset + len;
            if end > frame.len() {
                return Err(MdcError::CorruptDescription("group shorter than members".into()));
            }
            out.push(RecoveredPacket {
                sequence,
                created_at,
                payload: frame[offset..end].to_vec(),
            });
            offset = end;
        }
        Ok(Some(out))
    }

    pub fn is_decoded(&self, group_id: u64) -> bool {
        self.done.contains(&group_id)
    }
}
