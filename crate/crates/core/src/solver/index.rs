//! Material signatures and the bijection between positions and table slots.
//!
//! A slot is the lexicographic square-tuple index over the signature's
//! canonical piece order, times two, plus a side-to-move bit. Runs of
//! identical pieces are canonicalized to strictly increasing square indices;
//! slots whose identical-piece squares are out of order (or equal) do not
//! represent a position and decode to `None`.

use crate::board::{kind_order, BoardSpec, Color, Piece, PieceKind, Square, WholePosition};
use crate::solver::SolverError;

pub const MAX_NATIVE_PIECES: usize = 5;

/// A multiset of colored pieces in canonical order: White pieces first,
/// kings before queens before rooks, bishops, knights, pawns; then Black.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MaterialSignature {
    pieces: Vec<Piece>,
}

impl MaterialSignature {
    pub fn new(white: &[PieceKind], black: &[PieceKind]) -> Result<Self, SolverError> {
        let mut pieces: Vec<Piece> = white
            .iter()
            .map(|&k| Piece::new(Color::White, k))
            .chain(black.iter().map(|&k| Piece::new(Color::Black, k)))
            .collect();
        pieces.sort_by_key(|p| (p.color, kind_order(p.kind)));
        let sig = MaterialSignature { pieces };
        for color in [Color::White, Color::Black] {
            if sig.king_count(color) != 1 {
                return Err(SolverError::BadMaterial);
            }
        }
        Ok(sig)
    }

    pub fn of_position(pos: &WholePosition) -> Self {
        // WholePosition placements are already (color, kind, square)-sorted.
        MaterialSignature {
            pieces: pos.placements().iter().map(|&(_, piece)| piece).collect(),
        }
    }

    fn king_count(&self, color: Color) -> usize {
        self.pieces
            .iter()
            .filter(|p| p.color == color && p.kind == PieceKind::King)
            .count()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn kinds_of(&self, color: Color) -> Vec<PieceKind> {
        self.pieces
            .iter()
            .filter(|p| p.color == color)
            .map(|p| p.kind)
            .collect()
    }

    pub fn has_pawns(&self) -> bool {
        self.pieces.iter().any(|p| p.kind == PieceKind::Pawn)
    }

    pub fn pawn_count(&self) -> usize {
        self.pieces
            .iter()
            .filter(|p| p.kind == PieceKind::Pawn)
            .count()
    }

    /// Short code like `KQvK`: White kinds, `v`, Black kinds.
    pub fn code(&self) -> String {
        let mut out = String::new();
        for p in self.pieces.iter().filter(|p| p.color == Color::White) {
            out.push(p.kind.letter());
        }
        out.push('v');
        for p in self.pieces.iter().filter(|p| p.color == Color::Black) {
            out.push(p.kind.letter());
        }
        out
    }

    /// The signature after capturing the piece at index `captured`.
    pub fn after_capture(&self, captured: usize) -> MaterialSignature {
        let mut pieces = self.pieces.clone();
        pieces.remove(captured);
        MaterialSignature { pieces }
    }

    /// The signature after the piece at index `i` changes kind (promotion),
    /// optionally with the piece at `captured` removed.
    pub fn after_promotion(
        &self,
        pawn: usize,
        kind: PieceKind,
        captured: Option<usize>,
    ) -> MaterialSignature {
        let mut pieces = self.pieces.clone();
        pieces[pawn] = Piece::new(pieces[pawn].color, kind);
        if let Some(c) = captured {
            pieces.remove(c);
        }
        pieces.sort_by_key(|p| (p.color, kind_order(p.kind)));
        MaterialSignature { pieces }
    }
}

impl std::fmt::Display for MaterialSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Position ↔ slot bijection for one (board, material) class.
#[derive(Debug, Clone)]
pub struct PositionIndexer {
    board: BoardSpec,
    sig: MaterialSignature,
    n: u64,
    /// For each piece index, the (start, end) of its identical-piece run.
    groups: Vec<(usize, usize)>,
}

impl PositionIndexer {
    pub fn new(board: BoardSpec, sig: MaterialSignature) -> PositionIndexer {
        let pieces = sig.pieces();
        let mut groups = vec![(0usize, 0usize); pieces.len()];
        let mut i = 0;
        while i < pieces.len() {
            let mut j = i + 1;
            while j < pieces.len() && pieces[j] == pieces[i] {
                j += 1;
            }
            for g in &mut groups[i..j] {
                *g = (i, j);
            }
            i = j;
        }
        PositionIndexer {
            board,
            sig,
            n: board.square_count() as u64,
            groups,
        }
    }

    pub fn board(&self) -> BoardSpec {
        self.board
    }

    pub fn signature(&self) -> &MaterialSignature {
        &self.sig
    }

    pub fn piece_count(&self) -> usize {
        self.sig.len()
    }

    pub fn slot_count(&self) -> u64 {
        2 * self.n.pow(self.sig.len() as u32)
    }

    /// Slot of a legal whole position; `None` when its material differs
    /// from this class.
    pub fn slot_of(&self, pos: &WholePosition) -> Option<u64> {
        if pos.board() != self.board || pos.placements().len() != self.sig.len() {
            return None;
        }
        let mut squares = [0u8; MAX_NATIVE_PIECES];
        for (i, (&(sq, piece), &expect)) in
            pos.placements().iter().zip(self.sig.pieces()).enumerate()
        {
            if piece != expect {
                return None;
            }
            squares[i] = self.board.square_index(sq);
        }
        Some(self.slot_of_squares(&mut squares[..self.sig.len()], pos.to_move()))
    }

    /// Slot of a square tuple in signature piece order; identical-piece runs
    /// are canonicalized (sorted ascending) in place.
    pub fn slot_of_squares(&self, squares: &mut [u8], to_move: Color) -> u64 {
        debug_assert_eq!(squares.len(), self.sig.len());
        let mut i = 0;
        while i < squares.len() {
            let (start, end) = self.groups[i];
            squares[start..end].sort_unstable();
            i = end;
        }
        let mut idx = 0u64;
        for &sq in squares.iter() {
            idx = idx * self.n + sq as u64;
        }
        idx * 2 + to_move.index() as u64
    }

    /// Slot of an arbitrary (piece, square-index) list; `None` when the
    /// pieces do not form this class's material. The list is sorted into
    /// canonical order in place.
    pub fn slot_of_pieces(&self, items: &mut [(Piece, u8)], to_move: Color) -> Option<u64> {
        if items.len() != self.sig.len() {
            return None;
        }
        items.sort_unstable_by_key(|&(p, sq)| (p.color, kind_order(p.kind), sq));
        let mut idx = 0u64;
        for (&(piece, sq), &expect) in items.iter().zip(self.sig.pieces()) {
            if piece != expect {
                return None;
            }
            idx = idx * self.n + sq as u64;
        }
        Some(idx * 2 + to_move.index() as u64)
    }

    /// Decode a slot into squares (signature piece order) and side to move.
    /// `None` when an identical-piece run is not strictly increasing —
    /// such slots represent no position.
    pub fn decode(&self, slot: u64, squares: &mut [u8]) -> Option<Color> {
        debug_assert_eq!(squares.len(), self.sig.len());
        let to_move = if slot & 1 == 0 {
            Color::White
        } else {
            Color::Black
        };
        let mut rest = slot / 2;
        for i in (0..squares.len()).rev() {
            squares[i] = (rest % self.n) as u8;
            rest /= self.n;
        }
        debug_assert_eq!(rest, 0);
        for i in 0..squares.len() {
            let (start, end) = self.groups[i];
            if end - start > 1 {
                for w in squares[start..end].windows(2) {
                    if w[0] >= w[1] {
                        return None;
                    }
                }
            }
        }
        Some(to_move)
    }

    /// Rebuild the (unvalidated) whole position a slot encodes.
    pub fn position_at(&self, slot: u64) -> Option<WholePosition> {
        let mut squares = [0u8; MAX_NATIVE_PIECES];
        let squares = &mut squares[..self.sig.len()];
        let to_move = self.decode(slot, squares)?;
        let placements: Vec<(Square, Piece)> = squares
            .iter()
            .zip(self.sig.pieces())
            .map(|(&sq, &piece)| (self.board.square_at(sq), piece))
            .collect();
        Some(WholePosition::new_unchecked(
            self.board, placements, to_move,
        ))
    }
}
