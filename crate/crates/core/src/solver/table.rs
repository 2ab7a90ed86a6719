//! Packed solved tables and their on-disk format.
//!
//! One byte per slot: bits 0–1 hold the verdict (0 invalid, 1 draw,
//! 2 White wins, 3 Black wins), bits 2–7 a capped dtm. The cap value 63
//! means "look it up in the overflow list", a slot-sorted side table of
//! (slot, dtm) pairs.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! "ITLB"  magic
//! u16     format version
//! u8,u8   files, ranks
//! u8      topology (0 planar, 1 cylinder, 2 torus)
//! u8      piece count, then per piece: u8 color (0 W, 1 B), u8 kind (0 K..5 P)
//! u64     slot count
//! [u8]    packed slots
//! u64     overflow count, then per entry: u64 slot, u16 dtm
//! u32     CRC32 of everything above
//! ```

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::board::{BoardSpec, Color, PieceKind, Topology, WholePosition};
use crate::solver::index::{MaterialSignature, PositionIndexer};
use crate::solver::{Outcome, SolverError};

pub const TABLE_FORMAT_VERSION: u16 = 1;

/// Largest dtm representable inline; larger values go to the overflow list.
const DTM_INLINE_MAX: u16 = 62;
const DTM_OVERFLOW: u8 = 63;

const VERDICT_INVALID: u8 = 0;
const VERDICT_DRAW: u8 = 1;
const VERDICT_WHITE: u8 = 2;
const VERDICT_BLACK: u8 = 3;

/// Value of one table slot. `Invalid` marks slots that encode no legal
/// position (non-canonical tuple, overlap, adjacent kings, non-mover in
/// check, pawn on a forbidden rank).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotValue {
    Invalid,
    Draw,
    WhiteWins(u16),
    BlackWins(u16),
}

impl SlotValue {
    pub fn outcome(self) -> Option<Outcome> {
        match self {
            SlotValue::Invalid => None,
            SlotValue::Draw => Some(Outcome::draw()),
            SlotValue::WhiteWins(d) => Some(Outcome::win(Color::White, d)),
            SlotValue::BlackWins(d) => Some(Outcome::win(Color::Black, d)),
        }
    }
}

/// Aggregate counts over a table, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct TableStats {
    pub legal: u64,
    pub white_wins: u64,
    pub black_wins: u64,
    pub draws: u64,
    pub max_dtm: u16,
}

pub struct SolvedTable {
    board: BoardSpec,
    material: MaterialSignature,
    indexer: PositionIndexer,
    packed: Vec<u8>,
    overflow: Vec<(u64, u16)>,
}

impl fmt::Debug for SolvedTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolvedTable")
            .field("board", &self.board)
            .field("material", &self.material.code())
            .field("slots", &self.packed.len())
            .field("overflow", &self.overflow.len())
            .finish()
    }
}

impl SolvedTable {
    pub(crate) fn from_parts(
        board: BoardSpec,
        material: MaterialSignature,
        packed: Vec<u8>,
        mut overflow: Vec<(u64, u16)>,
    ) -> SolvedTable {
        overflow.sort_unstable_by_key(|&(slot, _)| slot);
        let indexer = PositionIndexer::new(board, material.clone());
        debug_assert_eq!(indexer.slot_count() as usize, packed.len());
        SolvedTable {
            board,
            material,
            indexer,
            packed,
            overflow,
        }
    }

    pub fn board(&self) -> BoardSpec {
        self.board
    }

    pub fn material(&self) -> &MaterialSignature {
        &self.material
    }

    pub fn indexer(&self) -> &PositionIndexer {
        &self.indexer
    }

    pub fn slot_count(&self) -> u64 {
        self.packed.len() as u64
    }

    /// Raw packed bytes (for byte-exactness checks).
    pub fn packed_bytes(&self) -> &[u8] {
        &self.packed
    }

    pub fn value_at(&self, slot: u64) -> SlotValue {
        let byte = self.packed[slot as usize];
        let dtm = || -> u16 {
            let inline = byte >> 2;
            if inline == DTM_OVERFLOW {
                let at = self
                    .overflow
                    .binary_search_by_key(&slot, |&(s, _)| s)
                    .expect("overflow-marked slot present in overflow list");
                self.overflow[at].1
            } else {
                inline as u16
            }
        };
        match byte & 0b11 {
            VERDICT_INVALID => SlotValue::Invalid,
            VERDICT_DRAW => SlotValue::Draw,
            VERDICT_WHITE => SlotValue::WhiteWins(dtm()),
            _ => SlotValue::BlackWins(dtm()),
        }
    }

    /// Outcome of the (legal) position a slot encodes; `None` for slots that
    /// encode no legal position.
    pub fn outcome_at(&self, slot: u64) -> Option<Outcome> {
        self.value_at(slot).outcome()
    }

    /// O(1) lookup of a position in this class.
    pub fn probe(&self, pos: &WholePosition) -> Result<Outcome, SolverError> {
        let slot = self
            .indexer
            .slot_of(pos)
            .ok_or(SolverError::TableMismatch)?;
        self.outcome_at(slot)
            .ok_or_else(|| SolverError::Corrupt("legal position maps to an invalid slot".into()))
    }

    pub fn stats(&self) -> TableStats {
        let mut stats = TableStats {
            legal: 0,
            white_wins: 0,
            black_wins: 0,
            draws: 0,
            max_dtm: 0,
        };
        for slot in 0..self.slot_count() {
            match self.value_at(slot) {
                SlotValue::Invalid => continue,
                SlotValue::Draw => stats.draws += 1,
                SlotValue::WhiteWins(d) => {
                    stats.white_wins += 1;
                    stats.max_dtm = stats.max_dtm.max(d);
                }
                SlotValue::BlackWins(d) => {
                    stats.black_wins += 1;
                    stats.max_dtm = stats.max_dtm.max(d);
                }
            }
            stats.legal += 1;
        }
        stats
    }

    /// A slot attaining the maximum dtm, with that dtm. `None` when the
    /// whole class is drawn.
    pub fn max_dtm_slot(&self) -> Option<(u64, u16)> {
        let mut best: Option<(u64, u16)> = None;
        for slot in 0..self.slot_count() {
            let d = match self.value_at(slot) {
                SlotValue::WhiteWins(d) | SlotValue::BlackWins(d) => d,
                _ => continue,
            };
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((slot, d));
            }
        }
        best
    }

    pub fn save(&self, path: &Path) -> Result<(), SolverError> {
        let mut header = Vec::new();
        header.extend_from_slice(b"ITLB");
        header.extend_from_slice(&TABLE_FORMAT_VERSION.to_le_bytes());
        header.push(self.board.files());
        header.push(self.board.ranks());
        header.push(match self.board.topology() {
            Topology::Planar => 0,
            Topology::Cylinder => 1,
            Topology::Torus => 2,
        });
        header.push(self.material.len() as u8);
        for p in self.material.pieces() {
            header.push(p.color.index() as u8);
            header.push(crate::board::kind_order(p.kind));
        }
        header.extend_from_slice(&(self.packed.len() as u64).to_le_bytes());

        let mut tail = Vec::new();
        tail.extend_from_slice(&(self.overflow.len() as u64).to_le_bytes());
        for &(slot, dtm) in &self.overflow {
            tail.extend_from_slice(&slot.to_le_bytes());
            tail.extend_from_slice(&dtm.to_le_bytes());
        }

        let mut hasher = crc32fast::Hasher::new();
        hasher.update(&header);
        hasher.update(&self.packed);
        hasher.update(&tail);
        let crc = hasher.finalize();

        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(&header)?;
        file.write_all(&self.packed)?;
        file.write_all(&tail)?;
        file.write_all(&crc.to_le_bytes())?;
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SolvedTable, SolverError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 4 {
            return Err(SolverError::ChecksumMismatch);
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(SolverError::ChecksumMismatch);
        }

        let mut cur = Cursor { body, at: 0 };
        if cur.take(4)? != b"ITLB" {
            return Err(SolverError::Corrupt("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        if version != TABLE_FORMAT_VERSION {
            return Err(SolverError::VersionMismatch { found: version });
        }
        let files = cur.byte()?;
        let ranks = cur.byte()?;
        let topology = match cur.byte()? {
            0 => Topology::Planar,
            1 => Topology::Cylinder,
            2 => Topology::Torus,
            t => return Err(SolverError::Corrupt(format!("unknown topology byte {t}"))),
        };
        let board = BoardSpec::new(files, ranks, topology)
            .map_err(|e| SolverError::Corrupt(e.to_string()))?;
        let piece_count = cur.byte()? as usize;
        let mut white = Vec::new();
        let mut black = Vec::new();
        for _ in 0..piece_count {
            let color = match cur.byte()? {
                0 => Color::White,
                1 => Color::Black,
                c => return Err(SolverError::Corrupt(format!("unknown color byte {c}"))),
            };
            let kind = match cur.byte()? {
                0 => PieceKind::King,
                1 => PieceKind::Queen,
                2 => PieceKind::Rook,
                3 => PieceKind::Bishop,
                4 => PieceKind::Knight,
                5 => PieceKind::Pawn,
                k => return Err(SolverError::Corrupt(format!("unknown kind byte {k}"))),
            };
            match color {
                Color::White => white.push(kind),
                Color::Black => black.push(kind),
            }
        }
        let material = MaterialSignature::new(&white, &black)
            .map_err(|_| SolverError::Corrupt("material lacks a king".into()))?;
        let slot_count = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let indexer = PositionIndexer::new(board, material.clone());
        if slot_count != indexer.slot_count() {
            return Err(SolverError::Corrupt(format!(
                "slot count {slot_count} does not fit {}-piece material on {board}",
                material.len()
            )));
        }
        let packed = cur.take(slot_count as usize)?.to_vec();
        let overflow_count = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let mut overflow = Vec::with_capacity(overflow_count as usize);
        for _ in 0..overflow_count {
            let slot = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
            let dtm = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
            overflow.push((slot, dtm));
        }
        if cur.at != body.len() {
            return Err(SolverError::Corrupt(
                "trailing bytes after overflow list".into(),
            ));
        }
        Ok(SolvedTable {
            board,
            material,
            indexer,
            packed,
            overflow,
        })
    }
}

struct Cursor<'a> {
    body: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SolverError> {
        if self.at + n > self.body.len() {
            return Err(SolverError::Corrupt(
                "file shorter than its header claims".into(),
            ));
        }
        let out = &self.body[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn byte(&mut self) -> Result<u8, SolverError> {
        Ok(self.take(1)?[0])
    }
}

/// Pack mover-relative build results into the final byte-per-slot form.
///
/// `state`/`dtm` are indexed by slot; states: 0 invalid, 1 unknown (drawn by
/// fixpoint), 2 mover wins, 3 mover loses, 4 stalemate.
pub(crate) fn pack(
    board: BoardSpec,
    material: MaterialSignature,
    state: &[u8],
    dtm: &[u16],
) -> SolvedTable {
    let mut packed = vec![0u8; state.len()];
    let mut overflow = Vec::new();
    for slot in 0..state.len() {
        let byte = match state[slot] {
            super::retro::INVALID => VERDICT_INVALID,
            super::retro::UNKNOWN | super::retro::DRAW_TERM => VERDICT_DRAW,
            s if s == super::retro::WIN || s == super::retro::LOSS => {
                let mover_wins = s == super::retro::WIN;
                let white_to_move = slot & 1 == 0;
                let verdict = if mover_wins == white_to_move {
                    VERDICT_WHITE
                } else {
                    VERDICT_BLACK
                };
                let d = dtm[slot];
                let inline = if d > DTM_INLINE_MAX {
                    overflow.push((slot as u64, d));
                    DTM_OVERFLOW
                } else {
                    d as u8
                };
                verdict | (inline << 2)
            }
            other => unreachable!("unexpected build state {other}"),
        };
        packed[slot] = byte;
    }
    SolvedTable::from_parts(board, material, packed, overflow)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_byte_encoding_round_trips() {
        let board = BoardSpec::standard();
        let material =
            MaterialSignature::new(&[PieceKind::King, PieceKind::Queen], &[PieceKind::King])
                .unwrap();
        let indexer = PositionIndexer::new(board, material.clone());
        let n = indexer.slot_count() as usize;
        let mut state = vec![super::super::retro::INVALID; n];
        let mut dtm = vec![0u16; n];
        // A handful of hand-placed values, including a dtm that overflows
        // the inline field.
        state[0] = super::super::retro::UNKNOWN;
        state[1] = super::super::retro::WIN;
        dtm[1] = 5;
        state[2] = super::super::retro::LOSS;
        dtm[2] = 100;
        state[3] = super::super::retro::DRAW_TERM;
        let table = pack(board, material, &state, &dtm);
        assert_eq!(table.value_at(0), SlotValue::Draw);
        // Slot 1 has the side-to-move bit set (odd ⇒ Black to move), so a
        // mover win is a Black win.
        assert_eq!(table.value_at(1), SlotValue::BlackWins(5));
        // Slot 2 is White to move and the mover loses.
        assert_eq!(table.value_at(2), SlotValue::BlackWins(100));
        assert_eq!(table.value_at(3), SlotValue::Draw);
        assert_eq!(table.value_at(4), SlotValue::Invalid);
    }
}
