//! Board geometry, pieces, half-positions and whole positions.
//!
//! A *half-position* is the placement of one side's pieces only; a *whole
//! position* is two half-positions laid on the same board plus the side to
//! move. Whole positions are validated at construction and immutable
//! afterwards, so they can be shared freely across threads.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod codec;

/// Board wrapping rule. `Cylinder` wraps files only, `Torus` wraps both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    Planar,
    Cylinder,
    Torus,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Planar => "planar",
            Topology::Cylinder => "cylinder",
            Topology::Torus => "torus",
        }
    }

    pub fn wraps_files(self) -> bool {
        matches!(self, Topology::Cylinder | Topology::Torus)
    }

    pub fn wraps_ranks(self) -> bool {
        matches!(self, Topology::Torus)
    }
}

impl std::str::FromStr for Topology {
    type Err = BoardError;

    fn from_str(s: &str) -> Result<Self, BoardError> {
        match s {
            "planar" => Ok(Topology::Planar),
            "cylinder" => Ok(Topology::Cylinder),
            "torus" => Ok(Topology::Torus),
            _ => Err(BoardError::BadTopology(s.to_string())),
        }
    }
}

pub const MIN_SIDE: u8 = 3;
pub const MAX_SIDE: u8 = 8;

/// Rectangular board of `files` x `ranks` squares with a wrapping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoardSpec {
    files: u8,
    ranks: u8,
    topology: Topology,
}

impl BoardSpec {
    pub fn new(files: u8, ranks: u8, topology: Topology) -> Result<Self, BoardError> {
        if !(MIN_SIDE..=MAX_SIDE).contains(&files) || !(MIN_SIDE..=MAX_SIDE).contains(&ranks) {
            return Err(BoardError::BadBoardSize { files, ranks });
        }
        Ok(BoardSpec {
            files,
            ranks,
            topology,
        })
    }

    /// Standard 8x8 planar board.
    pub fn standard() -> Self {
        BoardSpec {
            files: 8,
            ranks: 8,
            topology: Topology::Planar,
        }
    }

    pub fn files(&self) -> u8 {
        self.files
    }

    pub fn ranks(&self) -> u8 {
        self.ranks
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn square_count(&self) -> u8 {
        self.files * self.ranks
    }

    pub fn contains(&self, sq: Square) -> bool {
        sq.file < self.files && sq.rank < self.ranks
    }

    /// Dense index of a square: `rank * files + file`.
    pub fn square_index(&self, sq: Square) -> u8 {
        sq.rank * self.files + sq.file
    }

    pub fn square_at(&self, index: u8) -> Square {
        Square {
            file: index % self.files,
            rank: index / self.files,
        }
    }

    /// Move one step by `(df, dr)` honoring the wrapping rule. `None` when the
    /// step leaves the board on a non-wrapping axis.
    pub fn step(&self, sq: Square, df: i8, dr: i8) -> Option<Square> {
        let file = wrap_axis(sq.file, df, self.files, self.topology.wraps_files())?;
        let rank = wrap_axis(sq.rank, dr, self.ranks, self.topology.wraps_ranks())?;
        Some(Square { file, rank })
    }

    pub fn squares(&self) -> impl Iterator<Item = Square> + '_ {
        (0..self.square_count()).map(move |i| self.square_at(i))
    }

    /// True when `kind` may stand on `sq` here: pawns never sit on the first
    /// or last rank, and are disallowed entirely on a torus (no promotion
    /// rank exists there).
    pub fn kind_allowed_on(&self, kind: PieceKind, sq: Square) -> bool {
        if kind != PieceKind::Pawn {
            return true;
        }
        if self.topology == Topology::Torus {
            return false;
        }
        sq.rank != 0 && sq.rank != self.ranks - 1
    }

    pub fn pawns_allowed(&self) -> bool {
        self.topology != Topology::Torus
    }
}

impl fmt::Display for BoardSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{},{}", self.files, self.ranks, self.topology.name())
    }
}

impl std::str::FromStr for BoardSpec {
    type Err = BoardError;

    /// Inverse of [`Display`](fmt::Display): parses `FxR,topology`.
    fn from_str(s: &str) -> Result<Self, BoardError> {
        let bad = || BoardError::BadBoardText(s.to_string());
        let (dims, topo) = s.split_once(',').ok_or_else(bad)?;
        let (f, r) = dims.split_once('x').ok_or_else(bad)?;
        let files: u8 = f.trim().parse().map_err(|_| bad())?;
        let ranks: u8 = r.trim().parse().map_err(|_| bad())?;
        BoardSpec::new(files, ranks, topo.trim().parse()?)
    }
}

fn wrap_axis(pos: u8, delta: i8, len: u8, wraps: bool) -> Option<u8> {
    let raw = pos as i16 + delta as i16;
    if wraps {
        Some(raw.rem_euclid(len as i16) as u8)
    } else if (0..len as i16).contains(&raw) {
        Some(raw as u8)
    } else {
        None
    }
}

/// A square addressed by zero-based file and rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Square {
    pub file: u8,
    pub rank: u8,
}

impl Square {
    pub fn new(file: u8, rank: u8) -> Self {
        Square { file, rank }
    }

    /// Parse algebraic form like `e4`. Fails on files/ranks beyond h/8.
    pub fn parse(s: &str) -> Option<Square> {
        let mut chars = s.chars();
        let f = chars.next()?;
        let r = chars.next()?;
        if chars.next().is_some() {
            return None;
        }
        Square::from_chars(f, r)
    }

    pub fn from_chars(file: char, rank: char) -> Option<Square> {
        if !('a'..='h').contains(&file) || !('1'..='8').contains(&rank) {
            return None;
        }
        Some(Square {
            file: file as u8 - b'a',
            rank: rank as u8 - b'1',
        })
    }

    /// Chebyshev adjacency ignoring topology; use `kings_adjacent` for
    /// wrap-aware tests.
    pub fn touches(self, other: Square) -> bool {
        let df = (self.file as i16 - other.file as i16).abs();
        let dr = (self.rank as i16 - other.rank as i16).abs();
        df <= 1 && dr <= 1 && (df + dr) > 0
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", (b'a' + self.file) as char, self.rank + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Color::White => 0,
            Color::Black => 1,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Color::White => 'W',
            Color::Black => 'B',
        }
    }

    /// Direction pawns advance along ranks.
    pub fn forward(self) -> i8 {
        match self {
            Color::White => 1,
            Color::Black => -1,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Color::White => write!(f, "White"),
            Color::Black => write!(f, "Black"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PieceKind {
    King,
    Queen,
    Rook,
    Bishop,
    Knight,
    Pawn,
}

impl PieceKind {
    pub const ALL: [PieceKind; 6] = [
        PieceKind::King,
        PieceKind::Queen,
        PieceKind::Rook,
        PieceKind::Bishop,
        PieceKind::Knight,
        PieceKind::Pawn,
    ];

    pub fn letter(self) -> char {
        match self {
            PieceKind::King => 'K',
            PieceKind::Queen => 'Q',
            PieceKind::Rook => 'R',
            PieceKind::Bishop => 'B',
            PieceKind::Knight => 'N',
            PieceKind::Pawn => 'P',
        }
    }

    /// Piece letter, case-insensitive.
    pub fn from_letter(c: char) -> Option<PieceKind> {
        match c.to_ascii_uppercase() {
            'K' => Some(PieceKind::King),
            'Q' => Some(PieceKind::Queen),
            'R' => Some(PieceKind::Rook),
            'B' => Some(PieceKind::Bishop),
            'N' => Some(PieceKind::Knight),
            'P' => Some(PieceKind::Pawn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Piece {
    pub color: Color,
    pub kind: PieceKind,
}

impl Piece {
    pub fn new(color: Color, kind: PieceKind) -> Self {
        Piece { color, kind }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("board sides must be between {MIN_SIDE} and {MAX_SIDE}, got {files}x{ranks}")]
    BadBoardSize { files: u8, ranks: u8 },
    #[error("unknown topology `{0}` (expected planar, cylinder or torus)")]
    BadTopology(String),
    #[error("cannot parse board `{0}`, expected `FxR,topology` like `8x8,planar`")]
    BadBoardText(String),
    #[error("square {0} is off the board")]
    SquareOutOfRange(Square),
    #[error("two pieces share square {0}")]
    DuplicateSquare(Square),
    #[error("side must have exactly one king, found {0}")]
    KingCount(usize),
    #[error("{color} king count is {count}, expected exactly one")]
    KingCountPerSide { color: Color, count: usize },
    #[error("pawn on {0} violates the pawn rank rule")]
    PawnRank(Square),
    #[error("pawns are not allowed on a torus")]
    PawnOnTorus,
    #[error("half-positions belong to different boards")]
    BoardMismatch,
    #[error("half-position color mismatch")]
    ColorMismatch,
    #[error("the two halves overlap on square {0}")]
    Overlap(Square),
    #[error("the kings stand on mutually attacking squares")]
    KingsAdjacent,
    #[error("the side not to move is in check")]
    IllegalCheck,
    #[error("material cannot be placed legally: {0}")]
    Unsatisfiable(String),
}

/// One side's piece placement. Placements are kept in canonical order
/// (king, queens, rooks, bishops, knights, pawns; square index inside each
/// group) so equal positions compare and encode identically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HalfPosition {
    board: BoardSpec,
    color: Color,
    placements: Vec<(Square, PieceKind)>,
}

impl HalfPosition {
    pub fn new(
        board: BoardSpec,
        color: Color,
        placements: impl IntoIterator<Item = (Square, PieceKind)>,
    ) -> Result<Self, BoardError> {
        let mut placements: Vec<(Square, PieceKind)> = placements.into_iter().collect();
        sort_canonical(&board, &mut placements);
        let half = HalfPosition {
            board,
            color,
            placements,
        };
        half.validate()?;
        Ok(half)
    }

    fn validate(&self) -> Result<(), BoardError> {
        let mut kings = 0;
        let mut seen = [false; 64];
        for &(sq, kind) in &self.placements {
            if !self.board.contains(sq) {
                return Err(BoardError::SquareOutOfRange(sq));
            }
            let idx = self.board.square_index(sq) as usize;
            if seen[idx] {
                return Err(BoardError::DuplicateSquare(sq));
            }
            seen[idx] = true;
            if kind == PieceKind::King {
                kings += 1;
            }
            if kind == PieceKind::Pawn {
                if !self.board.pawns_allowed() {
                    return Err(BoardError::PawnOnTorus);
                }
                if !self.board.kind_allowed_on(kind, sq) {
                    return Err(BoardError::PawnRank(sq));
                }
            }
        }
        if kings != 1 {
            return Err(BoardError::KingCount(kings));
        }
        Ok(())
    }

    pub fn board(&self) -> BoardSpec {
        self.board
    }

    pub fn color(&self) -> Color {
        self.color
    }

    pub fn placements(&self) -> &[(Square, PieceKind)] {
        &self.placements
    }

    pub fn pieces(&self) -> impl Iterator<Item = (Square, Piece)> + '_ {
        self.placements
            .iter()
            .map(move |&(sq, kind)| (sq, Piece::new(self.color, kind)))
    }

    pub fn king_square(&self) -> Square {
        self.placements
            .iter()
            .find(|&&(_, kind)| kind == PieceKind::King)
            .map(|&(sq, _)| sq)
            .expect("validated half-position has a king")
    }

    pub fn material(&self) -> Vec<PieceKind> {
        self.placements.iter().map(|&(_, kind)| kind).collect()
    }
}

/// A superposed board with side to move. Invariants: one king per side, the
/// kings do not touch under the topology, the side not to move is not in
/// check, and pawns respect the rank rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WholePosition {
    board: BoardSpec,
    placements: Vec<(Square, Piece)>,
    to_move: Color,
}

impl WholePosition {
    pub fn new(
        board: BoardSpec,
        placements: impl IntoIterator<Item = (Square, Piece)>,
        to_move: Color,
    ) -> Result<Self, BoardError> {
        let pos = Self::new_unchecked(board, placements, to_move);
        pos.validate()?;
        Ok(pos)
    }

    /// Skips validation; callers must guarantee the invariants hold (used on
    /// hot paths where positions are decoded from pre-screened table slots).
    pub(crate) fn new_unchecked(
        board: BoardSpec,
        placements: impl IntoIterator<Item = (Square, Piece)>,
        to_move: Color,
    ) -> Self {
        let mut placements: Vec<(Square, Piece)> = placements.into_iter().collect();
        placements.sort_by_key(|&(sq, piece)| {
            (piece.color, kind_order(piece.kind), board.square_index(sq))
        });
        WholePosition {
            board,
            placements,
            to_move,
        }
    }

    pub fn validate(&self) -> Result<(), BoardError> {
        let mut kings = [0usize; 2];
        let mut king_sq = [Square::new(0, 0); 2];
        let mut seen = [false; 64];
        for &(sq, piece) in &self.placements {
            if !self.board.contains(sq) {
                return Err(BoardError::SquareOutOfRange(sq));
            }
            let idx = self.board.square_index(sq) as usize;
            if seen[idx] {
                return Err(BoardError::DuplicateSquare(sq));
            }
            seen[idx] = true;
            match piece.kind {
                PieceKind::King => {
                    kings[piece.color.index()] += 1;
                    king_sq[piece.color.index()] = sq;
                }
                PieceKind::Pawn => {
                    if !self.board.pawns_allowed() {
                        return Err(BoardError::PawnOnTorus);
                    }
                    if !self.board.kind_allowed_on(PieceKind::Pawn, sq) {
                        return Err(BoardError::PawnRank(sq));
                    }
                }
                _ => {}
            }
        }
        for color in [Color::White, Color::Black] {
            if kings[color.index()] != 1 {
                return Err(BoardError::KingCountPerSide {
                    color,
                    count: kings[color.index()],
                });
            }
        }
        if crate::movegen::kings_adjacent(self.board, king_sq[0], king_sq[1]) {
            return Err(BoardError::KingsAdjacent);
        }
        if crate::movegen::in_check(self, self.to_move.opposite()) {
            return Err(BoardError::IllegalCheck);
        }
        Ok(())
    }

    pub fn board(&self) -> BoardSpec {
        self.board
    }

    pub fn to_move(&self) -> Color {
        self.to_move
    }

    pub fn placements(&self) -> &[(Square, Piece)] {
        &self.placements
    }

    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.placements
            .iter()
            .find(|&&(s, _)| s == sq)
            .map(|&(_, p)| p)
    }

    pub fn king_square(&self, color: Color) -> Square {
        self.placements
            .iter()
            .find(|&&(_, p)| p.color == color && p.kind == PieceKind::King)
            .map(|&(sq, _)| sq)
            .expect("validated whole position has both kings")
    }

    pub fn piece_count(&self) -> usize {
        self.placements.len()
    }

    /// The half-position of one side.
    pub fn half(&self, color: Color) -> HalfPosition {
        HalfPosition::new(
            self.board,
            color,
            self.placements
                .iter()
                .filter(|&&(_, p)| p.color == color)
                .map(|&(sq, p)| (sq, p.kind)),
        )
        .expect("half of a legal whole position is legal")
    }
}

pub(crate) fn kind_order(kind: PieceKind) -> u8 {
    match kind {
        PieceKind::King => 0,
        PieceKind::Queen => 1,
        PieceKind::Rook => 2,
        PieceKind::Bishop => 3,
        PieceKind::Knight => 4,
        PieceKind::Pawn => 5,
    }
}

fn sort_canonical(board: &BoardSpec, placements: &mut [(Square, PieceKind)]) {
    placements.sort_by_key(|&(sq, kind)| (kind_order(kind), board.square_index(sq)));
}

/// Lay a White and a Black half-position on one board, White to move (the
/// problem-composition convention).
pub fn superpose(white: &HalfPosition, black: &HalfPosition) -> Result<WholePosition, BoardError> {
    if white.board() != black.board() {
        return Err(BoardError::BoardMismatch);
    }
    if white.color() != Color::White || black.color() != Color::Black {
        return Err(BoardError::ColorMismatch);
    }
    let board = white.board();
    let mut seen = [false; 64];
    let mut merged = Vec::with_capacity(white.placements().len() + black.placements().len());
    for half in [white, black] {
        for (sq, piece) in half.pieces() {
            let idx = board.square_index(sq) as usize;
            if seen[idx] {
                return Err(BoardError::Overlap(sq));
            }
            seen[idx] = true;
            merged.push((sq, piece));
        }
    }
    let pos = WholePosition::new_unchecked(board, merged, Color::White);
    if crate::movegen::kings_adjacent(
        board,
        pos.king_square(Color::White),
        pos.king_square(Color::Black),
    ) {
        return Err(BoardError::KingsAdjacent);
    }
    if crate::movegen::in_check(&pos, Color::Black) {
        return Err(BoardError::IllegalCheck);
    }
    Ok(pos)
}

/// Draw a half-position uniformly at random among all legal placements of
/// `material` (rejection sampling over square tuples, so the distribution is
/// exactly uniform).
pub fn random_half(
    material: &[PieceKind],
    color: Color,
    board: BoardSpec,
    rng: &mut impl Rng,
) -> Result<HalfPosition, BoardError> {
    check_material_fits(material, board)?;
    let squares = board.square_count();
    let mut picks: Vec<Square> = Vec::with_capacity(material.len());
    // Static feasibility holds, so rejection terminates with probability 1;
    // the cap only guards against logic errors.
    for _ in 0..100_000_000u64 {
        picks.clear();
        let mut ok = true;
        let mut used = [false; 64];
        for &kind in material {
            let sq = board.square_at(rng.gen_range(0..squares));
            let idx = board.square_index(sq) as usize;
            if used[idx] || !board.kind_allowed_on(kind, sq) {
                ok = false;
                break;
            }
            used[idx] = true;
            picks.push(sq);
        }
        if ok {
            let placements = picks.iter().copied().zip(material.iter().copied());
            return HalfPosition::new(board, color, placements);
        }
    }
    Err(BoardError::Unsatisfiable(
        "rejection sampling cap exceeded".into(),
    ))
}

fn check_material_fits(material: &[PieceKind], board: BoardSpec) -> Result<(), BoardError> {
    let kings = material.iter().filter(|&&k| k == PieceKind::King).count();
    if kings != 1 {
        return Err(BoardError::KingCount(kings));
    }
    let pawns = material.iter().filter(|&&k| k == PieceKind::Pawn).count();
    if pawns > 0 && !board.pawns_allowed() {
        return Err(BoardError::PawnOnTorus);
    }
    let squares = board.square_count() as usize;
    let pawn_squares = board.files() as usize * (board.ranks() as usize - 2);
    if material.len() > squares {
        return Err(BoardError::Unsatisfiable(format!(
            "{} pieces cannot fit on {} squares",
            material.len(),
            squares
        )));
    }
    if pawns > pawn_squares {
        return Err(BoardError::Unsatisfiable(format!(
            "{pawns} pawns cannot fit on {pawn_squares} pawn-legal squares"
        )));
    }
    Ok(())
}
