//! Retrograde construction of exact win/draw/loss tables with
//! distance-to-mate.
//!
//! One table covers a single (board, material) class. Captures and
//! promotions leave the class, so building a table requires the final
//! tables of every class reachable by one capture or promotion; quiet
//! moves stay inside the class and are resolved here.
//!
//! Values are computed relative to the side to move and packed to absolute
//! verdicts at the end:
//!
//! * Phase A marks every slot valid or invalid. A slot is valid when it
//!   decodes canonically, has no square collisions, respects pawn rank
//!   rules, keeps the kings apart, and does not leave the side *not* to
//!   move in check.
//! * Phase B scans each valid slot's legal moves once: mates and
//!   stalemates are settled immediately, wins through captures or
//!   promotions are queued at their distance, and each slot records how
//!   many of its moves are not yet known to hand the opponent a win.
//! * Phase C runs a bucket queue over distance-to-mate levels. A win
//!   assigned at level d removes one "safe" move from each quiet-move
//!   predecessor; a predecessor whose safe-move count hits zero loses, at
//!   one ply beyond its slowest refutation. Losses propagate win
//!   candidates to their own predecessors at the next level. Whatever is
//!   never assigned is a draw.
//!
//! Legality inside the hot loops rides on slot validity: a pseudo-legal
//! move is legal exactly when its successor slot is valid, because the
//! successor's "non-mover not in check" test *is* the mover's own
//! king-safety test. This keeps explicit check probing out of the inner
//! loops and guarantees the forward and backward edge sets coincide.

use std::collections::HashMap;
use std::sync::Arc;

use crate::board::{BoardSpec, Color, Piece, PieceKind};
use crate::movegen::Geometry;
use crate::solver::index::{MaterialSignature, PositionIndexer, MAX_NATIVE_PIECES};
use crate::solver::table::{self, SlotValue, SolvedTable};
use crate::solver::SolverError;

// Mover-relative slot states during construction.
pub(crate) const INVALID: u8 = 0;
pub(crate) const UNKNOWN: u8 = 1;
pub(crate) const WIN: u8 = 2;
pub(crate) const LOSS: u8 = 3;
pub(crate) const DRAW_TERM: u8 = 4;

/// Working-set estimate for building one class: state, safe-move count and
/// final packed byte per slot, plus a two-byte distance per slot.
pub(crate) fn estimated_bytes(board: BoardSpec, sig: &MaterialSignature) -> u64 {
    let n = board.square_count() as u64;
    let slots = 2u64.saturating_mul(n.saturating_pow(sig.len() as u32));
    slots.saturating_mul(6)
}

/// How a pseudo-legal move resolves.
enum Succ {
    /// The move leaves the mover's king exposed (successor slot invalid).
    Illegal,
    /// Quiet move: successor slot in the class under construction.
    Internal(u64),
    /// Capture or promotion: value looked up in a dependency table.
    External(SlotValue),
}

/// Immutable context shared by all build phases.
struct Ctx {
    board: BoardSpec,
    geo: Arc<Geometry>,
    indexer: PositionIndexer,
    pieces: Vec<Piece>,
    k: usize,
    /// Indices of the white and black kings in signature order.
    wk: usize,
    bk: usize,
    /// Piece indices that are pawns (empty for pawnless material).
    pawns: Vec<usize>,
    /// Dependency table per capturable piece index.
    captures: Vec<Option<Arc<SolvedTable>>>,
    /// Dependency table per (pawn index, promotion kind, captured index).
    promos: HashMap<(usize, PieceKind, Option<usize>), Arc<SolvedTable>>,
}

pub(crate) fn build(
    board: BoardSpec,
    sig: MaterialSignature,
    deps: &HashMap<MaterialSignature, Arc<SolvedTable>>,
) -> Result<SolvedTable, SolverError> {
    if sig.len() > MAX_NATIVE_PIECES {
        return Err(SolverError::TooManyPieces(sig.len()));
    }
    let indexer = PositionIndexer::new(board, sig.clone());
    let slot_count = indexer.slot_count();
    assert!(
        slot_count <= 1 << 32,
        "slot ids are stored as u32 in the work queue"
    );

    let dep = |s: &MaterialSignature| -> Arc<SolvedTable> {
        Arc::clone(
            deps.get(s)
                .unwrap_or_else(|| panic!("dependency table {s} not built")),
        )
    };
    let pieces: Vec<Piece> = sig.pieces().to_vec();
    let k = pieces.len();
    let find_king = |color: Color| {
        pieces
            .iter()
            .position(|p| p.color == color && p.kind == PieceKind::King)
            .expect("signature has both kings")
    };
    let mut captures: Vec<Option<Arc<SolvedTable>>> = vec![None; k];
    for (j, piece) in pieces.iter().enumerate() {
        if piece.kind != PieceKind::King {
            captures[j] = Some(dep(&sig.after_capture(j)));
        }
    }
    let mut promos = HashMap::new();
    if board.pawns_allowed() {
        for (i, pawn) in pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.kind == PieceKind::Pawn)
        {
            for kind in [
                PieceKind::Queen,
                PieceKind::Rook,
                PieceKind::Bishop,
                PieceKind::Knight,
            ] {
                promos.insert((i, kind, None), dep(&sig.after_promotion(i, kind, None)));
                for (j, victim) in pieces.iter().enumerate() {
                    if victim.color != pawn.color && victim.kind != PieceKind::King {
                        promos.insert(
                            (i, kind, Some(j)),
                            dep(&sig.after_promotion(i, kind, Some(j))),
                        );
                    }
                }
            }
        }
    }
    let ctx = Ctx {
        board,
        geo: Geometry::get(board),
        indexer,
        k,
        wk: find_king(Color::White),
        bk: find_king(Color::Black),
        pawns: pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.kind == PieceKind::Pawn)
            .map(|(i, _)| i)
            .collect(),
        pieces,
        captures,
        promos,
    };

    let slots = slot_count as usize;
    let mut state = vec![INVALID; slots];
    let mut dtm = vec![0u16; slots];
    let mut count = vec![0u8; slots];
    let mut buckets: Vec<Vec<u32>> = Vec::new();

    phase_a(&ctx, &mut state);
    phase_b(&ctx, &mut state, &mut dtm, &mut count, &mut buckets);
    phase_c(&ctx, &mut state, &mut dtm, &mut count, &mut buckets);

    Ok(table::pack(board, sig, &state, &dtm))
}

/// Mark every slot valid (`UNKNOWN`) or `INVALID`.
fn phase_a(ctx: &Ctx, state: &mut [u8]) {
    let mut squares = [0u8; MAX_NATIVE_PIECES];
    for (slot, cell) in state.iter_mut().enumerate() {
        let sq = &mut squares[..ctx.k];
        let Some(to_move) = ctx.indexer.decode(slot as u64, sq) else {
            continue;
        };
        if ctx.slot_is_valid(sq, to_move) {
            *cell = UNKNOWN;
        }
    }
}

/// Scan each valid slot's legal moves once: settle mates and stalemates,
/// queue capture/promotion wins, and seed the safe-move counts.
fn phase_b(
    ctx: &Ctx,
    state: &mut [u8],
    dtm: &mut [u16],
    count: &mut [u8],
    buckets: &mut Vec<Vec<u32>>,
) {
    let mut squares = [0u8; MAX_NATIVE_PIECES];
    for slot in 0..state.len() {
        if state[slot] != UNKNOWN {
            continue;
        }
        let sq = &mut squares[..ctx.k];
        let mover = ctx
            .indexer
            .decode(slot as u64, sq)
            .expect("valid slots decode");
        let occ = occ_of(sq);
        let mut total = 0u32;
        let mut safe = 0u32;
        let mut best_ext: Option<u16> = None;
        ctx.for_each_move(sq, occ, mover, &mut |i, to, victim, promo| {
            match ctx.resolve(state, sq, mover, i, to, victim, promo) {
                Succ::Illegal => {}
                Succ::Internal(_) => {
                    total += 1;
                    safe += 1;
                }
                Succ::External(value) => {
                    total += 1;
                    match winner_of(value) {
                        None => safe += 1,
                        Some((w, d)) if w == mover => {
                            safe += 1;
                            let via = d + 1;
                            best_ext = Some(best_ext.map_or(via, |b| b.min(via)));
                        }
                        Some(_) => {} // hands the opponent a win: not safe
                    }
                }
            }
        });
        if total == 0 {
            if ctx.attacked_by(sq, occ, mover.opposite(), king_square(ctx, sq, mover)) {
                state[slot] = LOSS;
                dtm[slot] = 0;
                push(buckets, 0, slot as u64);
            } else {
                state[slot] = DRAW_TERM;
            }
            continue;
        }
        debug_assert!(safe <= u8::MAX as u32, "safe-move count fits a byte");
        count[slot] = safe as u8;
        if safe == 0 {
            // Every move is a capture or promotion into a lost table entry.
            let d = ctx.loss_dtm(state, dtm, sq, mover, occ);
            state[slot] = LOSS;
            dtm[slot] = d;
            push(buckets, d, slot as u64);
        } else if let Some(d) = best_ext {
            push(buckets, d, slot as u64);
        }
    }
}

/// Bucket queue over distance-to-mate levels.
fn phase_c(
    ctx: &Ctx,
    state: &mut [u8],
    dtm: &mut [u16],
    count: &mut [u8],
    buckets: &mut Vec<Vec<u32>>,
) {
    let mut squares = [0u8; MAX_NATIVE_PIECES];
    let mut pred_squares = [0u8; MAX_NATIVE_PIECES];
    let mut preds: Vec<u64> = Vec::new();
    let mut level = 0usize;
    while level < buckets.len() {
        let entries = std::mem::take(&mut buckets[level]);
        for &entry in &entries {
            let slot = entry as usize;
            match state[slot] {
                // A win candidate that resolved earlier at a lower level.
                WIN => continue,
                // A loss settled at exactly this level: its predecessors
                // can win by moving here.
                LOSS => {
                    debug_assert_eq!(dtm[slot], level as u16);
                    let sq = &mut squares[..ctx.k];
                    let mover = ctx
                        .indexer
                        .decode(slot as u64, sq)
                        .expect("queued slots decode");
                    preds.clear();
                    ctx.retractions_into(sq, mover, &mut preds);
                    for &q in &preds {
                        if state[q as usize] == UNKNOWN {
                            push(buckets, level as u16 + 1, q);
                        }
                    }
                }
                // An open win candidate: buckets are processed in distance
                // order, so the first time a slot pops it pops at its true
                // distance.
                UNKNOWN => {
                    state[slot] = WIN;
                    dtm[slot] = level as u16;
                    let sq = &mut squares[..ctx.k];
                    let mover = ctx
                        .indexer
                        .decode(slot as u64, sq)
                        .expect("queued slots decode");
                    preds.clear();
                    ctx.retractions_into(sq, mover, &mut preds);
                    for &q in &preds {
                        let qi = q as usize;
                        if state[qi] != UNKNOWN {
                            continue;
                        }
                        // The quiet move q → slot now hands the opponent a
                        // win; q loses once no safe move remains.
                        count[qi] -= 1;
                        if count[qi] == 0 {
                            let qsq = &mut pred_squares[..ctx.k];
                            let qmover = ctx.indexer.decode(q, qsq).expect("predecessors decode");
                            let qocc = occ_of(qsq);
                            let d = ctx.loss_dtm(state, dtm, qsq, qmover, qocc);
                            state[qi] = LOSS;
                            dtm[qi] = d;
                            push(buckets, d, q);
                        }
                    }
                }
                other => unreachable!("queued slot in state {other}"),
            }
        }
        level += 1;
    }
}

fn push(buckets: &mut Vec<Vec<u32>>, level: u16, slot: u64) {
    let level = level as usize;
    if buckets.len() <= level {
        buckets.resize_with(level + 1, Vec::new);
    }
    buckets[level].push(slot as u32);
}

fn occ_of(squares: &[u8]) -> u64 {
    squares.iter().fold(0u64, |acc, &sq| acc | 1u64 << sq)
}

fn mark(seen: &mut u64, sq: u8) -> bool {
    if *seen & (1u64 << sq) != 0 {
        return false;
    }
    *seen |= 1u64 << sq;
    true
}

/// Absolute winner and distance of a dependency-table value, `None` for a
/// draw. Dependency values are never `Invalid` here (that case resolves to
/// `Succ::Illegal` beforehand).
fn winner_of(value: SlotValue) -> Option<(Color, u16)> {
    match value {
        SlotValue::Draw => None,
        SlotValue::WhiteWins(d) => Some((Color::White, d)),
        SlotValue::BlackWins(d) => Some((Color::Black, d)),
        SlotValue::Invalid => unreachable!("illegal moves are filtered before valuation"),
    }
}

fn king_square(ctx: &Ctx, squares: &[u8], color: Color) -> u8 {
    squares[match color {
        Color::White => ctx.wk,
        Color::Black => ctx.bk,
    }]
}

impl Ctx {
    /// Validity of a canonically decoded slot: distinct squares, pawns on
    /// legal ranks, kings apart, non-mover not in check.
    fn slot_is_valid(&self, squares: &[u8], to_move: Color) -> bool {
        for a in 0..self.k {
            for b in a + 1..self.k {
                if squares[a] == squares[b] {
                    return false;
                }
            }
        }
        for &i in &self.pawns {
            if !self
                .board
                .kind_allowed_on(PieceKind::Pawn, self.board.square_at(squares[i]))
            {
                return false;
            }
        }
        if self.geo.kings_touch(squares[self.wk], squares[self.bk]) {
            return false;
        }
        let occ = occ_of(squares);
        let their_king = king_square(self, squares, to_move.opposite());
        !self.attacked_by(squares, occ, to_move, their_king)
    }

    /// Does any piece of `by` attack `target`?
    fn attacked_by(&self, squares: &[u8], occ: u64, by: Color, target: u8) -> bool {
        self.pieces.iter().enumerate().any(|(i, piece)| {
            piece.color == by
                && self
                    .geo
                    .piece_attacks(piece.kind, by, squares[i], target, occ)
        })
    }

    fn occupant(&self, squares: &[u8], sq: u8) -> Option<usize> {
        squares.iter().position(|&s| s == sq)
    }

    /// Enumerate the mover's pseudo-legal moves as
    /// `(piece index, target, captured index, promotion kind)`, each
    /// (from, to, promotion) at most once even where wrapping folds two
    /// paths onto one target.
    fn for_each_move(
        &self,
        squares: &[u8],
        occ: u64,
        mover: Color,
        f: &mut impl FnMut(usize, u8, Option<usize>, Option<PieceKind>),
    ) {
        for i in 0..self.k {
            let piece = self.pieces[i];
            if piece.color != mover {
                continue;
            }
            let from = squares[i];
            let mut seen = 0u64;
            match piece.kind {
                PieceKind::King => {
                    self.step_moves(self.geo.king_steps(from), squares, mover, i, &mut seen, f)
                }
                PieceKind::Knight => {
                    self.step_moves(self.geo.knight_steps(from), squares, mover, i, &mut seen, f)
                }
                PieceKind::Rook => self.ray_moves(
                    self.geo.rook_rays(from),
                    squares,
                    occ,
                    mover,
                    i,
                    &mut seen,
                    f,
                ),
                PieceKind::Bishop => self.ray_moves(
                    self.geo.bishop_rays(from),
                    squares,
                    occ,
                    mover,
                    i,
                    &mut seen,
                    f,
                ),
                PieceKind::Queen => {
                    self.ray_moves(
                        self.geo.rook_rays(from),
                        squares,
                        occ,
                        mover,
                        i,
                        &mut seen,
                        f,
                    );
                    self.ray_moves(
                        self.geo.bishop_rays(from),
                        squares,
                        occ,
                        mover,
                        i,
                        &mut seen,
                        f,
                    );
                }
                PieceKind::Pawn => self.pawn_moves(squares, occ, mover, i, from, f),
            }
        }
    }

    fn step_moves(
        &self,
        targets: &[u8],
        squares: &[u8],
        mover: Color,
        i: usize,
        seen: &mut u64,
        f: &mut impl FnMut(usize, u8, Option<usize>, Option<PieceKind>),
    ) {
        for &to in targets {
            if !mark(seen, to) {
                continue;
            }
            match self.occupant(squares, to) {
                Some(j) if self.pieces[j].color == mover => {}
                victim => f(i, to, victim, None),
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn ray_moves(
        &self,
        rays: &[Vec<u8>],
        squares: &[u8],
        occ: u64,
        mover: Color,
        i: usize,
        seen: &mut u64,
        f: &mut impl FnMut(usize, u8, Option<usize>, Option<PieceKind>),
    ) {
        for ray in rays {
            for &to in ray {
                if occ & (1u64 << to) == 0 {
                    if mark(seen, to) {
                        f(i, to, None, None);
                    }
                    continue;
                }
                let j = self.occupant(squares, to).expect("occupancy bit set");
                if self.pieces[j].color != mover && mark(seen, to) {
                    f(i, to, Some(j), None);
                }
                break;
            }
        }
    }

    fn pawn_moves(
        &self,
        squares: &[u8],
        occ: u64,
        mover: Color,
        i: usize,
        from: u8,
        f: &mut impl FnMut(usize, u8, Option<usize>, Option<PieceKind>),
    ) {
        // Push and capture targets never coincide (the file offsets differ
        // and boards are at least three files wide), so no mask is needed.
        if let Some(to) = self.geo.pawn_push(mover, from) {
            if occ & (1u64 << to) == 0 {
                self.pawn_emit(mover, i, to, None, f);
            }
        }
        for &to in self.geo.pawn_caps(mover, from) {
            if let Some(j) = self.occupant(squares, to) {
                if self.pieces[j].color != mover {
                    self.pawn_emit(mover, i, to, Some(j), f);
                }
            }
        }
    }

    fn pawn_emit(
        &self,
        mover: Color,
        i: usize,
        to: u8,
        victim: Option<usize>,
        f: &mut impl FnMut(usize, u8, Option<usize>, Option<PieceKind>),
    ) {
        let last_rank = match mover {
            Color::White => self.board.ranks() - 1,
            Color::Black => 0,
        };
        if self.board.square_at(to).rank == last_rank {
            for kind in [
                PieceKind::Queen,
                PieceKind::Rook,
                PieceKind::Bishop,
                PieceKind::Knight,
            ] {
                f(i, to, victim, Some(kind));
            }
        } else {
            f(i, to, victim, None);
        }
    }

    /// Resolve one pseudo-legal move against slot validity and, for
    /// captures and promotions, the dependency tables.
    #[allow(clippy::too_many_arguments)]
    fn resolve(
        &self,
        state: &[u8],
        squares: &[u8],
        mover: Color,
        i: usize,
        to: u8,
        victim: Option<usize>,
        promo: Option<PieceKind>,
    ) -> Succ {
        if victim.is_none() && promo.is_none() {
            let mut tmp = [0u8; MAX_NATIVE_PIECES];
            tmp[..self.k].copy_from_slice(squares);
            tmp[i] = to;
            let slot = self
                .indexer
                .slot_of_squares(&mut tmp[..self.k], mover.opposite());
            if state[slot as usize] == INVALID {
                return Succ::Illegal;
            }
            return Succ::Internal(slot);
        }
        debug_assert!(victim.is_none_or(|j| self.pieces[j].kind != PieceKind::King));
        let table = match promo {
            Some(kind) => &self.promos[&(i, kind, victim)],
            None => self.captures[victim.expect("external move captures or promotes")]
                .as_ref()
                .expect("capturable piece has a dependency table"),
        };
        let mut items = [(self.pieces[0], 0u8); MAX_NATIVE_PIECES];
        let mut m = 0;
        for (j, &sq) in squares.iter().enumerate() {
            if Some(j) == victim {
                continue;
            }
            items[m] = if j == i {
                (
                    promo.map_or(self.pieces[i], |kind| Piece::new(mover, kind)),
                    to,
                )
            } else {
                (self.pieces[j], sq)
            };
            m += 1;
        }
        let slot = table
            .indexer()
            .slot_of_pieces(&mut items[..m], mover.opposite())
            .expect("successor material matches its dependency table");
        match table.value_at(slot) {
            SlotValue::Invalid => Succ::Illegal,
            value => Succ::External(value),
        }
    }

    /// Distance of a freshly settled loss: one beyond the slowest
    /// refutation, over moves that are all known opponent wins by now.
    fn loss_dtm(&self, state: &[u8], dtm: &[u16], squares: &[u8], mover: Color, occ: u64) -> u16 {
        let mut slowest = 0u16;
        self.for_each_move(squares, occ, mover, &mut |i, to, victim, promo| match self
            .resolve(state, squares, mover, i, to, victim, promo)
        {
            Succ::Illegal => {}
            Succ::Internal(t) => {
                debug_assert_eq!(state[t as usize], WIN);
                slowest = slowest.max(dtm[t as usize]);
            }
            Succ::External(value) => match winner_of(value) {
                Some((w, d)) if w != mover => slowest = slowest.max(d),
                _ => debug_assert!(false, "loss recompute met a non-losing move"),
            },
        });
        slowest + 1
    }

    /// Enumerate predecessor slots reachable by retracting one quiet move
    /// of the side that just moved, deduplicated per piece. Captures,
    /// pawn captures and promotions enter from other classes and are
    /// accounted there.
    fn retractions_into(&self, squares: &[u8], mover: Color, out: &mut Vec<u64>) {
        let prev = mover.opposite();
        let occ = occ_of(squares);
        for i in 0..self.k {
            let piece = self.pieces[i];
            if piece.color != prev {
                continue;
            }
            let t = squares[i];
            let mut seen = 0u64;
            match piece.kind {
                PieceKind::King => self.step_retractions(
                    self.geo.king_steps(t),
                    squares,
                    occ,
                    prev,
                    i,
                    &mut seen,
                    out,
                ),
                PieceKind::Knight => self.step_retractions(
                    self.geo.knight_steps(t),
                    squares,
                    occ,
                    prev,
                    i,
                    &mut seen,
                    out,
                ),
                PieceKind::Rook => self.ray_retractions(
                    self.geo.rook_rays(t),
                    squares,
                    occ,
                    prev,
                    i,
                    &mut seen,
                    out,
                ),
                PieceKind::Bishop => self.ray_retractions(
                    self.geo.bishop_rays(t),
                    squares,
                    occ,
                    prev,
                    i,
                    &mut seen,
                    out,
                ),
                PieceKind::Queen => {
                    self.ray_retractions(
                        self.geo.rook_rays(t),
                        squares,
                        occ,
                        prev,
                        i,
                        &mut seen,
                        out,
                    );
                    self.ray_retractions(
                        self.geo.bishop_rays(t),
                        squares,
                        occ,
                        prev,
                        i,
                        &mut seen,
                        out,
                    );
                }
                PieceKind::Pawn => {
                    // A quiet pawn move is a single push; its origin is one
                    // step backward and must itself be a legal pawn square.
                    let back = self.board.step(self.board.square_at(t), 0, -prev.forward());
                    if let Some(from_sq) = back {
                        let from = self.board.square_index(from_sq);
                        if occ & (1u64 << from) == 0
                            && self.board.kind_allowed_on(PieceKind::Pawn, from_sq)
                        {
                            self.push_retraction(squares, prev, i, from, out);
                        }
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step_retractions(
        &self,
        origins: &[u8],
        squares: &[u8],
        occ: u64,
        prev: Color,
        i: usize,
        seen: &mut u64,
        out: &mut Vec<u64>,
    ) {
        for &from in origins {
            if occ & (1u64 << from) == 0 && mark(seen, from) {
                self.push_retraction(squares, prev, i, from, out);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn ray_retractions(
        &self,
        rays: &[Vec<u8>],
        squares: &[u8],
        occ: u64,
        prev: Color,
        i: usize,
        seen: &mut u64,
        out: &mut Vec<u64>,
    ) {
        for ray in rays {
            for &from in ray {
                if occ & (1u64 << from) != 0 {
                    break;
                }
                if mark(seen, from) {
                    self.push_retraction(squares, prev, i, from, out);
                }
            }
        }
    }

    fn push_retraction(&self, squares: &[u8], prev: Color, i: usize, from: u8, out: &mut Vec<u64>) {
        let mut tmp = [0u8; MAX_NATIVE_PIECES];
        tmp[..self.k].copy_from_slice(squares);
        tmp[i] = from;
        out.push(self.indexer.slot_of_squares(&mut tmp[..self.k], prev));
    }
}
