//! Topology-aware move generation, check detection and move application.
//!
//! Per-board step and ray tables are precomputed once and cached
//! (`Geometry::get`), so the per-position work is table walks over a 64-bit
//! occupancy mask. Sliding rays on wrapping boards terminate when they
//! return to their origin square; a ray never attacks its own origin.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::board::{BoardSpec, Color, Piece, PieceKind, Square, WholePosition};

/// A move in coordinate form. `promotion` is present exactly when a pawn
/// reaches the last rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub from: Square,
    pub to: Square,
    pub promotion: Option<PieceKind>,
}

impl Move {
    pub fn new(from: Square, to: Square) -> Self {
        Move {
            from,
            to,
            promotion: None,
        }
    }

    pub fn promoting(from: Square, to: Square, kind: PieceKind) -> Self {
        Move {
            from,
            to,
            promotion: Some(kind),
        }
    }

    /// Parse coordinate text like `e2e4` or `e7e8q`.
    pub fn parse(s: &str) -> Option<Move> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 4 && chars.len() != 5 {
            return None;
        }
        let from = Square::from_chars(chars[0], chars[1])?;
        let to = Square::from_chars(chars[2], chars[3])?;
        let promotion = match chars.get(4) {
            None => None,
            Some(&c) => {
                let kind = PieceKind::from_letter(c)?;
                if matches!(kind, PieceKind::King | PieceKind::Pawn) {
                    return None;
                }
                Some(kind)
            }
        };
        Some(Move {
            from,
            to,
            promotion,
        })
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.from, self.to)?;
        if let Some(kind) = self.promotion {
            write!(f, "{}", kind.letter().to_ascii_lowercase())?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error("move {0} is not legal in this position")]
    IllegalMove(Move),
}

/// Precomputed step targets and sliding rays for one board.
pub(crate) struct Geometry {
    king: Vec<Vec<u8>>,
    knight: Vec<Vec<u8>>,
    rook_rays: Vec<Vec<Vec<u8>>>,
    bishop_rays: Vec<Vec<Vec<u8>>>,
    pawn_push: [Vec<Option<u8>>; 2],
    pawn_caps: [Vec<Vec<u8>>; 2],
}

static GEOMETRY_CACHE: OnceLock<Mutex<HashMap<BoardSpec, Arc<Geometry>>>> = OnceLock::new();

const ROOK_DIRS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];
const KNIGHT_DIRS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];

impl Geometry {
    pub(crate) fn get(board: BoardSpec) -> Arc<Geometry> {
        let cache = GEOMETRY_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("geometry cache poisoned");
        Arc::clone(
            map.entry(board)
                .or_insert_with(|| Arc::new(Geometry::build(board))),
        )
    }

    fn build(board: BoardSpec) -> Geometry {
        let n = board.square_count() as usize;
        let mut king = Vec::with_capacity(n);
        let mut knight = Vec::with_capacity(n);
        let mut rook_rays = Vec::with_capacity(n);
        let mut bishop_rays = Vec::with_capacity(n);
        let mut pawn_push = [vec![None; n], vec![None; n]];
        let mut pawn_caps = [vec![Vec::new(); n], vec![Vec::new(); n]];

        for idx in 0..n {
            let sq = board.square_at(idx as u8);
            let king_dirs = ROOK_DIRS.iter().chain(BISHOP_DIRS.iter());
            king.push(step_targets(board, sq, king_dirs.copied()));
            knight.push(step_targets(board, sq, KNIGHT_DIRS.iter().copied()));
            rook_rays.push(ROOK_DIRS.iter().map(|&d| build_ray(board, sq, d)).collect());
            bishop_rays.push(
                BISHOP_DIRS
                    .iter()
                    .map(|&d| build_ray(board, sq, d))
                    .collect(),
            );
            for color in [Color::White, Color::Black] {
                let fwd = color.forward();
                pawn_push[color.index()][idx] =
                    board.step(sq, 0, fwd).map(|t| board.square_index(t));
                pawn_caps[color.index()][idx] =
                    step_targets(board, sq, [(1, fwd), (-1, fwd)].into_iter());
            }
        }
        Geometry {
            king,
            knight,
            rook_rays,
            bishop_rays,
            pawn_push,
            pawn_caps,
        }
    }

    pub(crate) fn king_steps(&self, sq: u8) -> &[u8] {
        &self.king[sq as usize]
    }

    pub(crate) fn knight_steps(&self, sq: u8) -> &[u8] {
        &self.knight[sq as usize]
    }

    pub(crate) fn rook_rays(&self, sq: u8) -> &[Vec<u8>] {
        &self.rook_rays[sq as usize]
    }

    pub(crate) fn bishop_rays(&self, sq: u8) -> &[Vec<u8>] {
        &self.bishop_rays[sq as usize]
    }

    pub(crate) fn pawn_push(&self, color: Color, sq: u8) -> Option<u8> {
        self.pawn_push[color.index()][sq as usize]
    }

    pub(crate) fn pawn_caps(&self, color: Color, sq: u8) -> &[u8] {
        &self.pawn_caps[color.index()][sq as usize]
    }

    pub(crate) fn kings_touch(&self, a: u8, b: u8) -> bool {
        self.king[a as usize].contains(&b)
    }

    /// Does a piece of `kind`/`color` on `from` attack `target` given
    /// `occ` (bitmask over square indices)?
    pub(crate) fn piece_attacks(
        &self,
        kind: PieceKind,
        color: Color,
        from: u8,
        target: u8,
        occ: u64,
    ) -> bool {
        match kind {
            PieceKind::King => self.king[from as usize].contains(&target),
            PieceKind::Knight => self.knight[from as usize].contains(&target),
            PieceKind::Pawn => self.pawn_caps[color.index()][from as usize].contains(&target),
            PieceKind::Rook => ray_hits(&self.rook_rays[from as usize], target, occ),
            PieceKind::Bishop => ray_hits(&self.bishop_rays[from as usize], target, occ),
            PieceKind::Queen => {
                ray_hits(&self.rook_rays[from as usize], target, occ)
                    || ray_hits(&self.bishop_rays[from as usize], target, occ)
            }
        }
    }
}

fn step_targets(board: BoardSpec, sq: Square, dirs: impl Iterator<Item = (i8, i8)>) -> Vec<u8> {
    let origin = board.square_index(sq);
    let mut out: Vec<u8> = dirs
        .filter_map(|(df, dr)| board.step(sq, df, dr))
        .map(|t| board.square_index(t))
        .filter(|&t| t != origin)
        .collect();
    // Wrapping can fold two offsets onto one square (e.g. knight +-2 files
    // on a 4-wide cylinder); keep each target once.
    out.sort_unstable();
    out.dedup();
    out
}

fn build_ray(board: BoardSpec, origin: Square, (df, dr): (i8, i8)) -> Vec<u8> {
    let origin_idx = board.square_index(origin);
    let mut ray = Vec::new();
    let mut cur = origin;
    loop {
        match board.step(cur, df, dr) {
            None => break,
            Some(next) => {
                let idx = board.square_index(next);
                if idx == origin_idx {
                    break;
                }
                ray.push(idx);
                cur = next;
            }
        }
    }
    ray
}

fn ray_hits(rays: &[Vec<u8>], target: u8, occ: u64) -> bool {
    for ray in rays {
        for &sq in ray {
            if sq == target {
                return true;
            }
            if occ & (1u64 << sq) != 0 {
                break;
            }
        }
    }
    false
}

/// Compact view of a position for the generation/attack loops.
struct View {
    geo: Arc<Geometry>,
    pieces: Vec<(u8, Piece)>,
    occ: u64,
}

impl View {
    fn of(pos: &WholePosition) -> View {
        let geo = Geometry::get(pos.board());
        let board = pos.board();
        let mut occ = 0u64;
        let pieces: Vec<(u8, Piece)> = pos
            .placements()
            .iter()
            .map(|&(sq, piece)| {
                let idx = board.square_index(sq);
                occ |= 1u64 << idx;
                (idx, piece)
            })
            .collect();
        View { geo, pieces, occ }
    }

    fn king_of(&self, color: Color) -> u8 {
        self.pieces
            .iter()
            .find(|&&(_, p)| p.color == color && p.kind == PieceKind::King)
            .map(|&(sq, _)| sq)
            .expect("position has both kings")
    }

    fn occupant(&self, sq: u8) -> Option<Piece> {
        self.pieces.iter().find(|&&(s, _)| s == sq).map(|&(_, p)| p)
    }

    /// Is `target` attacked by `by` after hypothetically playing
    /// `moved: (from, to)`? Captured piece (any piece of `by` on `to`)
    /// is ignored as an attacker.
    fn attacked_after(&self, target: u8, by: Color, moved: Option<(u8, u8)>) -> bool {
        let mut occ = self.occ;
        if let Some((from, to)) = moved {
            occ &= !(1u64 << from);
            occ |= 1u64 << to;
        }
        for &(sq, piece) in &self.pieces {
            if piece.color != by {
                continue;
            }
            if let Some((from, to)) = moved {
                if sq == to {
                    continue; // captured by the hypothetical move
                }
                debug_assert_ne!(sq, from, "moved piece belongs to the other color");
            }
            if self.geo.piece_attacks(piece.kind, by, sq, target, occ) {
                return true;
            }
        }
        false
    }

    fn attacked(&self, target: u8, by: Color) -> bool {
        self.attacked_after(target, by, None)
    }
}

/// Squares attacked by `color`'s pieces (occupied squares included; pawn
/// attacks are the capture diagonals only).
pub fn attacks(pos: &WholePosition, color: Color) -> BTreeSet<Square> {
    let view = View::of(pos);
    let geo = &view.geo;
    let board = pos.board();
    let mut out = BTreeSet::new();
    let mut add = |idx: u8| {
        out.insert(board.square_at(idx));
    };
    for &(sq, piece) in &view.pieces {
        if piece.color != color {
            continue;
        }
        match piece.kind {
            PieceKind::King => geo.king_steps(sq).iter().for_each(|&t| add(t)),
            PieceKind::Knight => geo.knight_steps(sq).iter().for_each(|&t| add(t)),
            PieceKind::Pawn => geo.pawn_caps(color, sq).iter().for_each(|&t| add(t)),
            PieceKind::Rook => walk_rays(geo.rook_rays(sq), view.occ, &mut add),
            PieceKind::Bishop => walk_rays(geo.bishop_rays(sq), view.occ, &mut add),
            PieceKind::Queen => {
                walk_rays(geo.rook_rays(sq), view.occ, &mut add);
                walk_rays(geo.bishop_rays(sq), view.occ, &mut add);
            }
        }
    }
    out
}

fn walk_rays(rays: &[Vec<u8>], occ: u64, add: &mut impl FnMut(u8)) {
    for ray in rays {
        for &sq in ray {
            add(sq);
            if occ & (1u64 << sq) != 0 {
                break;
            }
        }
    }
}

/// Is `color`'s king attacked by the other side?
pub fn in_check(pos: &WholePosition, color: Color) -> bool {
    let view = View::of(pos);
    view.attacked(view.king_of(color), color.opposite())
}

/// Wrap-aware king adjacency on `board`.
pub(crate) fn kings_adjacent(board: BoardSpec, a: Square, b: Square) -> bool {
    let geo = Geometry::get(board);
    geo.kings_touch(board.square_index(a), board.square_index(b))
}

/// All legal moves of the side to move, in a deterministic order
/// (by origin square index, then target, then promotion kind).
pub fn legal_moves(pos: &WholePosition) -> Vec<Move> {
    let view = View::of(pos);
    let mover = pos.to_move();
    let board = pos.board();
    let mut moves = pseudo_moves(&view, mover, board);
    moves.retain(|m| move_is_safe(&view, mover, m, board));
    moves.sort_unstable_by_key(|m| {
        (
            board.square_index(m.from),
            board.square_index(m.to),
            m.promotion.map(crate::board::kind_order),
        )
    });
    moves.dedup();
    moves
}

fn pseudo_moves(view: &View, mover: Color, board: BoardSpec) -> Vec<Move> {
    let geo = &view.geo;
    let mut moves = Vec::new();
    let own: u64 = view
        .pieces
        .iter()
        .filter(|&&(_, p)| p.color == mover)
        .fold(0u64, |acc, &(sq, _)| acc | 1u64 << sq);

    fn push_steps(targets: &[u8], from: u8, own: u64, board: BoardSpec, moves: &mut Vec<Move>) {
        for &to in targets {
            if own & (1u64 << to) == 0 {
                moves.push(Move::new(board.square_at(from), board.square_at(to)));
            }
        }
    }
    for &(sq, piece) in &view.pieces {
        if piece.color != mover {
            continue;
        }
        match piece.kind {
            PieceKind::King => push_steps(geo.king_steps(sq), sq, own, board, &mut moves),
            PieceKind::Knight => push_steps(geo.knight_steps(sq), sq, own, board, &mut moves),
            PieceKind::Rook => slide_moves(geo.rook_rays(sq), sq, view, own, board, &mut moves),
            PieceKind::Bishop => slide_moves(geo.bishop_rays(sq), sq, view, own, board, &mut moves),
            PieceKind::Queen => {
                slide_moves(geo.rook_rays(sq), sq, view, own, board, &mut moves);
                slide_moves(geo.bishop_rays(sq), sq, view, own, board, &mut moves);
            }
            PieceKind::Pawn => pawn_moves(geo, sq, mover, view, board, &mut moves),
        }
    }
    moves
}

fn slide_moves(
    rays: &[Vec<u8>],
    from: u8,
    view: &View,
    own: u64,
    board: BoardSpec,
    moves: &mut Vec<Move>,
) {
    for ray in rays {
        for &to in ray {
            let bit = 1u64 << to;
            if view.occ & bit == 0 {
                moves.push(Move::new(board.square_at(from), board.square_at(to)));
            } else {
                if own & bit == 0 {
                    moves.push(Move::new(board.square_at(from), board.square_at(to)));
                }
                break;
            }
        }
    }
}

fn pawn_moves(
    geo: &Geometry,
    from: u8,
    mover: Color,
    view: &View,
    board: BoardSpec,
    moves: &mut Vec<Move>,
) {
    let last_rank = match mover {
        Color::White => board.ranks() - 1,
        Color::Black => 0,
    };
    let mut push = |to: u8| {
        let to_sq = board.square_at(to);
        let from_sq = board.square_at(from);
        if to_sq.rank == last_rank {
            for kind in [
                PieceKind::Queen,
                PieceKind::Rook,
                PieceKind::Bishop,
                PieceKind::Knight,
            ] {
                moves.push(Move::promoting(from_sq, to_sq, kind));
            }
        } else {
            moves.push(Move::new(from_sq, to_sq));
        }
    };
    if let Some(to) = geo.pawn_push(mover, from) {
        if view.occ & (1u64 << to) == 0 {
            push(to);
        }
    }
    for &to in geo.pawn_caps(mover, from) {
        if view.occupant(to).is_some_and(|p| p.color != mover) {
            push(to);
        }
    }
}

fn move_is_safe(view: &View, mover: Color, m: &Move, board: BoardSpec) -> bool {
    let from = board.square_index(m.from);
    let to = board.square_index(m.to);
    let king = view.king_of(mover);
    let king_after = if king == from { to } else { king };
    !view.attacked_after(king_after, mover.opposite(), Some((from, to)))
}

/// Apply a move after verifying it is legal here.
pub fn apply(pos: &WholePosition, m: Move) -> Result<WholePosition, MoveError> {
    if !legal_moves(pos).contains(&m) {
        return Err(MoveError::IllegalMove(m));
    }
    Ok(apply_unchecked(pos, m))
}

/// Apply a move known to come from `legal_moves(pos)`.
pub(crate) fn apply_unchecked(pos: &WholePosition, m: Move) -> WholePosition {
    let mover = pos.to_move();
    let mut placements: Vec<(Square, Piece)> = Vec::with_capacity(pos.placements().len());
    for &(sq, piece) in pos.placements() {
        if sq == m.to {
            continue; // captured
        }
        if sq == m.from {
            let kind = m.promotion.unwrap_or(piece.kind);
            placements.push((m.to, Piece::new(mover, kind)));
        } else {
            placements.push((sq, piece));
        }
    }
    WholePosition::new_unchecked(pos.board(), placements, mover.opposite())
}

/// Short algebraic rendering ("Qg7#", "exd8=Q+", "Kxe2"); origin squares are
/// not disambiguated.
pub fn san_lite(pos: &WholePosition, m: Move) -> String {
    let piece = pos
        .piece_at(m.from)
        .expect("san of a move from an empty square");
    let capture = pos.piece_at(m.to).is_some();
    let mut out = String::new();
    match piece.kind {
        PieceKind::Pawn => {
            if capture {
                out.push((b'a' + m.from.file) as char);
            }
        }
        kind => out.push(kind.letter()),
    }
    if capture {
        out.push('x');
    }
    out.push_str(&m.to.to_string());
    if let Some(kind) = m.promotion {
        out.push('=');
        out.push(kind.letter());
    }
    let after = apply_unchecked(pos, m);
    if in_check(&after, after.to_move()) {
        if legal_moves(&after).is_empty() {
            out.push('#');
        } else {
            out.push('+');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{random_half, superpose, BoardSpec, Topology, WholePosition};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn sq(s: &str) -> Square {
        Square::parse(s).unwrap()
    }

    fn pos(
        board: BoardSpec,
        white: &[(&str, PieceKind)],
        black: &[(&str, PieceKind)],
        to_move: Color,
    ) -> WholePosition {
        let placements = white
            .iter()
            .map(|&(s, k)| (sq(s), Piece::new(Color::White, k)))
            .chain(
                black
                    .iter()
                    .map(|&(s, k)| (sq(s), Piece::new(Color::Black, k))),
            );
        WholePosition::new(board, placements, to_move).unwrap()
    }

    fn squares(names: &[&str]) -> BTreeSet<Square> {
        names.iter().map(|s| sq(s)).collect()
    }

    // A lone rook on a1 covers 14 squares on both the planar and the
    // cylinder board: the wrapped rank-1 ray stops when it revisits a1.
    // The kings stand on rank 5 where they add nothing to file a or rank 1.
    #[test]
    fn rook_a1_attack_counts() {
        for topology in [Topology::Planar, Topology::Cylinder] {
            let b = BoardSpec::new(8, 8, topology).unwrap();
            let p = pos(
                b,
                &[("a1", PieceKind::Rook), ("c5", PieceKind::King)],
                &[("f5", PieceKind::King)],
                Color::White,
            );
            let on_file_or_rank = attacks(&p, Color::White)
                .iter()
                .filter(|s| s.file == 0 || s.rank == 0)
                .count();
            assert_eq!(on_file_or_rank, 14, "topology {topology:?}");
        }
    }

    #[test]
    fn bishop_c1_crosses_cylinder_seam() {
        let b = BoardSpec::new(8, 8, Topology::Cylinder).unwrap();
        let p = pos(
            b,
            &[("c1", PieceKind::Bishop), ("c4", PieceKind::King)],
            &[("f3", PieceKind::King)],
            Color::White,
        );
        let bishop = attacks(&p, Color::White);
        // North-east ray: d2..h6 then across the seam a7, b8.
        // North-west ray: b2, a3 then across the seam h4..d8.
        let expected = squares(&[
            "d2", "e3", "f4", "g5", "h6", "a7", "b8", "b2", "a3", "h4", "f6", "e7", "d8",
        ]);
        assert!(
            expected.is_subset(&bishop),
            "missing {:?}",
            expected.difference(&bishop).collect::<Vec<_>>()
        );
        assert!(bishop.contains(&sq("a7")) && bishop.contains(&sq("h4")));
    }

    #[test]
    fn king_a1_torus_has_eight_neighbors() {
        let b = BoardSpec::new(4, 4, Topology::Torus).unwrap();
        let geo = Geometry::get(b);
        assert_eq!(geo.king_steps(b.square_index(sq("a1"))).len(), 8);
    }

    #[test]
    fn bare_kings_five_moves() {
        let b = BoardSpec::standard();
        let p = pos(
            b,
            &[("e1", PieceKind::King)],
            &[("e8", PieceKind::King)],
            Color::White,
        );
        let moves = legal_moves(&p);
        let targets: BTreeSet<Square> = moves.iter().map(|m| m.to).collect();
        assert_eq!(targets, squares(&["d1", "d2", "e2", "f2", "f1"]));
        assert_eq!(moves.len(), 5);
    }

    #[test]
    fn stalemate_has_no_moves_and_no_check() {
        let b = BoardSpec::standard();
        let p = pos(
            b,
            &[("c7", PieceKind::King), ("b6", PieceKind::Queen)],
            &[("a8", PieceKind::King)],
            Color::Black,
        );
        assert!(!in_check(&p, Color::Black));
        assert!(legal_moves(&p).is_empty());
    }

    #[test]
    fn promotion_fans_out_to_four_kinds() {
        let b = BoardSpec::standard();
        let p = pos(
            b,
            &[("h1", PieceKind::King), ("e7", PieceKind::Pawn)],
            &[("e4", PieceKind::King)],
            Color::White,
        );
        let promos: Vec<Move> = legal_moves(&p)
            .into_iter()
            .filter(|m| m.from == sq("e7"))
            .collect();
        assert_eq!(promos.len(), 4);
        let kinds: BTreeSet<_> = promos.iter().map(|m| m.promotion.unwrap()).collect();
        assert_eq!(
            kinds,
            BTreeSet::from([
                PieceKind::Queen,
                PieceKind::Rook,
                PieceKind::Bishop,
                PieceKind::Knight
            ])
        );
    }

    #[test]
    fn apply_vacates_captures_and_promotes() {
        let b = BoardSpec::standard();
        let p = pos(
            b,
            &[("h1", PieceKind::King), ("e7", PieceKind::Pawn)],
            &[("e4", PieceKind::King), ("d8", PieceKind::Rook)],
            Color::White,
        );
        // Quiet move vacates the origin.
        let m = Move::parse("h1g1").unwrap();
        let after = apply(&p, m).unwrap();
        assert!(after.piece_at(sq("h1")).is_none());
        assert_eq!(after.to_move(), Color::Black);

        // Capture-promotion: piece count drops, pawn becomes a queen.
        let m = Move::parse("e7d8q").unwrap();
        let after = apply(&p, m).unwrap();
        assert_eq!(after.piece_count(), p.piece_count() - 1);
        let promoted = after.piece_at(sq("d8")).unwrap();
        assert_eq!(promoted, Piece::new(Color::White, PieceKind::Queen));
        assert!(!after
            .placements()
            .iter()
            .any(|&(_, piece)| piece.kind == PieceKind::Pawn));
    }

    #[test]
    fn apply_rejects_illegal_moves() {
        let b = BoardSpec::standard();
        let p = pos(
            b,
            &[("e1", PieceKind::King)],
            &[("e8", PieceKind::King)],
            Color::White,
        );
        let m = Move::parse("e1e3").unwrap();
        assert_eq!(apply(&p, m).unwrap_err(), MoveError::IllegalMove(m));
    }

    #[test]
    fn move_text_round_trip() {
        for text in ["e2e4", "e7e8q", "a1h8", "h7h8n"] {
            let m = Move::parse(text).unwrap();
            assert_eq!(m.to_string(), text);
        }
        assert!(Move::parse("e2e9").is_none());
        assert!(Move::parse("e2").is_none());
        assert!(Move::parse("e7e8k").is_none());
    }

    #[test]
    fn san_lite_renders_mate_and_capture() {
        let b = BoardSpec::standard();
        let p = pos(
            b,
            &[("f6", PieceKind::King), ("g6", PieceKind::Queen)],
            &[("h8", PieceKind::King)],
            Color::White,
        );
        assert_eq!(san_lite(&p, Move::parse("g6g7").unwrap()), "Qg7#");

        let p = pos(
            b,
            &[("e1", PieceKind::King), ("a5", PieceKind::Rook)],
            &[("h8", PieceKind::King), ("a7", PieceKind::Knight)],
            Color::White,
        );
        assert_eq!(san_lite(&p, Move::parse("a5a7").unwrap()), "Rxa7");
    }

    // ---- independent slow reference generator ----

    /// Naive walker: re-derives moves square by square straight from
    /// `BoardSpec::step`, with no shared geometry tables, and tests king
    /// safety by full attack recomputation on a cloned position.
    fn naive_legal_moves(p: &WholePosition) -> BTreeSet<Move> {
        let board = p.board();
        let mover = p.to_move();
        let mut out = BTreeSet::new();
        for &(from, piece) in p.placements() {
            if piece.color != mover {
                continue;
            }
            let dirs: &[(i8, i8)] = match piece.kind {
                PieceKind::King | PieceKind::Queen => &[
                    (1, 0),
                    (-1, 0),
                    (0, 1),
                    (0, -1),
                    (1, 1),
                    (-1, 1),
                    (1, -1),
                    (-1, -1),
                ],
                PieceKind::Rook => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
                PieceKind::Bishop => &[(1, 1), (-1, 1), (1, -1), (-1, -1)],
                PieceKind::Knight => &[
                    (1, 2),
                    (2, 1),
                    (2, -1),
                    (1, -2),
                    (-1, -2),
                    (-2, -1),
                    (-2, 1),
                    (-1, 2),
                ],
                PieceKind::Pawn => &[],
            };
            let sliding = matches!(
                piece.kind,
                PieceKind::Queen | PieceKind::Rook | PieceKind::Bishop
            );
            for &d in dirs {
                let mut cur = from;
                loop {
                    let next = match board.step(cur, d.0, d.1) {
                        Some(s) if s != from => s,
                        _ => break,
                    };
                    match p.piece_at(next) {
                        None => out.insert(Move::new(from, next)),
                        Some(occ) if occ.color != mover => {
                            out.insert(Move::new(from, next));
                            break;
                        }
                        Some(_) => break,
                    };
                    if !sliding {
                        break;
                    }
                    cur = next;
                }
            }
            if piece.kind == PieceKind::Pawn {
                let fwd = mover.forward();
                let last_rank = if mover == Color::White {
                    board.ranks() - 1
                } else {
                    0
                };
                let mut add_pawn = |to: Square| {
                    if to.rank == last_rank {
                        for kind in [
                            PieceKind::Queen,
                            PieceKind::Rook,
                            PieceKind::Bishop,
                            PieceKind::Knight,
                        ] {
                            out.insert(Move::promoting(from, to, kind));
                        }
                    } else {
                        out.insert(Move::new(from, to));
                    }
                };
                if let Some(to) = board.step(from, 0, fwd) {
                    if p.piece_at(to).is_none() {
                        add_pawn(to);
                    }
                }
                for df in [-1, 1] {
                    if let Some(to) = board.step(from, df, fwd) {
                        if p.piece_at(to).is_some_and(|occ| occ.color != mover) {
                            add_pawn(to);
                        }
                    }
                }
            }
        }
        // King-safety filter by brute recomputation on the applied position.
        out.into_iter()
            .filter(|&m| {
                let after = apply_unchecked(p, m);
                !naive_attacked(&after, after.king_square(mover), mover.opposite())
            })
            .collect()
    }

    fn naive_attacked(p: &WholePosition, target: Square, by: Color) -> bool {
        let board = p.board();
        for &(from, piece) in p.placements() {
            if piece.color != by {
                continue;
            }
            let hit = match piece.kind {
                PieceKind::Pawn => [-1i8, 1]
                    .iter()
                    .any(|&df| board.step(from, df, by.forward()) == Some(target)),
                _ => {
                    let dirs: &[(i8, i8)] = match piece.kind {
                        PieceKind::King | PieceKind::Queen => &[
                            (1, 0),
                            (-1, 0),
                            (0, 1),
                            (0, -1),
                            (1, 1),
                            (-1, 1),
                            (1, -1),
                            (-1, -1),
                        ],
                        PieceKind::Rook => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
                        PieceKind::Bishop => &[(1, 1), (-1, 1), (1, -1), (-1, -1)],
                        PieceKind::Knight => &[
                            (1, 2),
                            (2, 1),
                            (2, -1),
                            (1, -2),
                            (-1, -2),
                            (-2, -1),
                            (-2, 1),
                            (-1, 2),
                        ],
                        PieceKind::Pawn => unreachable!(),
                    };
                    let sliding = matches!(
                        piece.kind,
                        PieceKind::Queen | PieceKind::Rook | PieceKind::Bishop
                    );
                    dirs.iter().any(|&d| {
                        let mut cur = from;
                        loop {
                            let next = match board.step(cur, d.0, d.1) {
                                Some(s) if s != from => s,
                                _ => return false,
                            };
                            if next == target {
                                return true;
                            }
                            if p.piece_at(next).is_some() || !sliding {
                                return false;
                            }
                            cur = next;
                        }
                    })
                }
            };
            if hit {
                return true;
            }
        }
        false
    }

    fn random_position(
        rng: &mut ChaCha8Rng,
        board: BoardSpec,
        kinds: &[PieceKind],
    ) -> WholePosition {
        loop {
            let mut white = vec![PieceKind::King];
            let mut black = vec![PieceKind::King];
            for side in [&mut white, &mut black] {
                for _ in 0..rng.gen_range(0..=2) {
                    let k = kinds[rng.gen_range(0..kinds.len())];
                    if k == PieceKind::Pawn && !board.pawns_allowed() {
                        continue;
                    }
                    side.push(k);
                }
            }
            let w = random_half(&white, Color::White, board, rng).unwrap();
            let b = random_half(&black, Color::Black, board, rng).unwrap();
            if let Ok(p) = superpose(&w, &b) {
                // Exercise both sides to move.
                if rng.gen() {
                    return p;
                }
                let flipped =
                    WholePosition::new(board, p.placements().iter().copied(), Color::Black);
                if let Ok(fp) = flipped {
                    return fp;
                }
                return p;
            }
        }
    }

    #[test]
    fn matches_naive_reference_on_random_positions() {
        let kinds = [
            PieceKind::Queen,
            PieceKind::Rook,
            PieceKind::Bishop,
            PieceKind::Knight,
            PieceKind::Pawn,
        ];
        let boards = [
            BoardSpec::standard(),
            BoardSpec::new(8, 8, Topology::Cylinder).unwrap(),
            BoardSpec::new(8, 8, Topology::Torus).unwrap(),
            BoardSpec::new(4, 4, Topology::Planar).unwrap(),
            BoardSpec::new(5, 4, Topology::Cylinder).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for i in 0..10_000 {
            let board = boards[i % boards.len()];
            let p = random_position(&mut rng, board, &kinds);
            let fast: BTreeSet<Move> = legal_moves(&p).into_iter().collect();
            let slow = naive_legal_moves(&p);
            assert_eq!(fast, slow, "position {i}: {p:?}");
        }
    }

    #[test]
    fn applied_moves_never_leave_own_king_attacked() {
        let kinds = [
            PieceKind::Queen,
            PieceKind::Rook,
            PieceKind::Knight,
            PieceKind::Pawn,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7_777);
        let board = BoardSpec::standard();
        let mut applications = 0usize;
        while applications < 100_000 {
            let p = random_position(&mut rng, board, &kinds);
            let mover = p.to_move();
            for m in legal_moves(&p) {
                let after = apply_unchecked(&p, m);
                assert!(
                    after.validate().is_ok(),
                    "apply({m}) broke invariants from {p:?}"
                );
                assert!(!in_check(&after, mover));
                applications += 1;
            }
        }
    }

    #[test]
    fn attacks_mirror_symmetry_on_planar() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let board = BoardSpec::standard();
        let kinds = [
            PieceKind::Queen,
            PieceKind::Rook,
            PieceKind::Bishop,
            PieceKind::Knight,
        ];
        let mirror = |s: Square| Square::new(7 - s.file, s.rank);
        for _ in 0..500 {
            let p = random_position(&mut rng, board, &kinds);
            let mirrored = WholePosition::new(
                board,
                p.placements()
                    .iter()
                    .map(|&(sq, piece)| (mirror(sq), piece)),
                p.to_move(),
            );
            let Ok(mp) = mirrored else { continue };
            for color in [Color::White, Color::Black] {
                let direct: BTreeSet<Square> = attacks(&p, color).into_iter().map(mirror).collect();
                assert_eq!(direct, attacks(&mp, color));
            }
        }
    }

    #[test]
    fn attacks_translate_on_torus() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let board = BoardSpec::new(6, 6, Topology::Torus).unwrap();
        let kinds = [
            PieceKind::Queen,
            PieceKind::Rook,
            PieceKind::Bishop,
            PieceKind::Knight,
        ];
        for _ in 0..300 {
            let p = random_position(&mut rng, board, &kinds);
            let (dx, dy) = (rng.gen_range(0..6), rng.gen_range(0..6));
            let shift = |s: Square| Square::new((s.file + dx) % 6, (s.rank + dy) % 6);
            let shifted = WholePosition::new(
                board,
                p.placements().iter().map(|&(sq, piece)| (shift(sq), piece)),
                p.to_move(),
            )
            .expect("translation preserves legality on a torus");
            for color in [Color::White, Color::Black] {
                let direct: BTreeSet<Square> = attacks(&p, color).into_iter().map(shift).collect();
                assert_eq!(direct, attacks(&shifted, color));
            }
        }
    }
}
