//! Independent cross-checks for solved tables.
//!
//! Two deliberately different routes to the same values:
//!
//! * [`FixpointOracle`] — forward value iteration. Legality and move
//!   generation go through the public paths ([`WholePosition::validate`],
//!   [`crate::movegen::legal_moves`]); values are found by running
//!   synchronous rounds where round `k` assigns exactly the positions at
//!   distance `k`. No retrograde stepping, no counting, no queues.
//! * [`Negamax`] — bounded-horizon exhaustive search from one position.
//!   Within its horizon the result is exact; beyond it the search says
//!   `Unresolved` rather than guess.
//!
//! Agreement between these and the retrograde tables is the correctness
//! argument for the solver; disagreement on any slot is a bug somewhere.

use std::collections::HashMap;

use crate::board::{BoardSpec, Color, Piece, PieceKind, WholePosition};
use crate::movegen::{self, legal_moves, Move};
use crate::solver::index::{MaterialSignature, PositionIndexer, MAX_NATIVE_PIECES};
use crate::solver::{dependency_signatures, Outcome, SolverError};

// Slot states, relative to the side to move.
const INVALID: u8 = 0;
const OPEN: u8 = 1;
const WIN: u8 = 2;
const LOSS: u8 = 3;
const DRAW_TERM: u8 = 4;

/// One solved class inside the oracle.
struct OracleClass {
    indexer: PositionIndexer,
    state: Vec<u8>,
    dtm: Vec<u16>,
    /// Class id per capturable piece index.
    captures: Vec<Option<usize>>,
    /// Class id per (pawn index, promotion kind, captured index).
    promos: HashMap<(usize, PieceKind, Option<usize>), usize>,
    max_dtm: u16,
}

/// Value of a slot relative to the side to move there.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Rel {
    Open,
    Draw,
    MoverWins(u16),
    MoverLoses(u16),
}

/// Forward value-iteration oracle over a material class and everything
/// reachable from it by captures and promotions.
pub struct FixpointOracle {
    board: BoardSpec,
    ids: HashMap<MaterialSignature, usize>,
    classes: Vec<OracleClass>,
}

impl FixpointOracle {
    /// Solve `sig` on `board` by forward value iteration, refusing to start
    /// if the working set would exceed `memory_ceiling` bytes.
    pub fn build(
        board: BoardSpec,
        sig: &MaterialSignature,
        memory_ceiling: u64,
    ) -> Result<FixpointOracle, SolverError> {
        if sig.len() > MAX_NATIVE_PIECES {
            return Err(SolverError::TooManyPieces(sig.len()));
        }
        // Transitive dependency closure, solved smallest-first: captures
        // shed a piece, promotions shed a pawn, so (piece count, pawn
        // count) strictly decreases along every edge.
        let mut sigs: Vec<MaterialSignature> = vec![sig.clone()];
        let mut queued: std::collections::HashSet<MaterialSignature> =
            sigs.iter().cloned().collect();
        let mut at = 0;
        while at < sigs.len() {
            for dep in dependency_signatures(&sigs[at], board) {
                if queued.insert(dep.clone()) {
                    sigs.push(dep);
                }
            }
            at += 1;
        }
        sigs.sort_by_key(|s| (s.len(), s.pawn_count()));

        let needed: u64 = sigs
            .iter()
            .map(|s| {
                let slots = 2u64
                    .saturating_mul((board.square_count() as u64).saturating_pow(s.len() as u32));
                slots.saturating_mul(7) // state + dtm + worklist entry
            })
            .sum();
        if needed > memory_ceiling {
            return Err(SolverError::ResourceLimit {
                needed,
                ceiling: memory_ceiling,
            });
        }

        let mut oracle = FixpointOracle {
            board,
            ids: HashMap::new(),
            classes: Vec::new(),
        };
        for s in sigs {
            let class = oracle.solve_class(&s);
            oracle.ids.insert(s, oracle.classes.len());
            oracle.classes.push(class);
        }
        Ok(oracle)
    }

    /// Value of a position whose material belongs to this oracle.
    pub fn outcome_of(&self, pos: &WholePosition) -> Result<Outcome, SolverError> {
        let sig = MaterialSignature::of_position(pos);
        let id = self.ids.get(&sig).ok_or(SolverError::TableMismatch)?;
        let class = &self.classes[*id];
        let slot = class
            .indexer
            .slot_of(pos)
            .ok_or(SolverError::TableMismatch)?;
        self.outcome_at_slot(&sig, slot)?
            .ok_or_else(|| SolverError::Corrupt("legal position valued as invalid".into()))
    }

    /// Value at a raw slot of one class: `Ok(None)` when the slot encodes
    /// no legal position.
    pub fn outcome_at_slot(
        &self,
        sig: &MaterialSignature,
        slot: u64,
    ) -> Result<Option<Outcome>, SolverError> {
        let id = self.ids.get(sig).ok_or(SolverError::TableMismatch)?;
        let class = &self.classes[*id];
        let mover = if slot & 1 == 0 {
            Color::White
        } else {
            Color::Black
        };
        Ok(match class.state[slot as usize] {
            INVALID => None,
            OPEN | DRAW_TERM => Some(Outcome::draw()),
            WIN => Some(Outcome::win(mover, class.dtm[slot as usize])),
            LOSS => Some(Outcome::win(mover.opposite(), class.dtm[slot as usize])),
            other => unreachable!("slot in state {other}"),
        })
    }

    /// Longest decisive distance in a solved class.
    pub fn max_dtm(&self, sig: &MaterialSignature) -> Option<u16> {
        self.ids.get(sig).map(|&id| self.classes[id].max_dtm)
    }

    pub fn board(&self) -> BoardSpec {
        self.board
    }

    fn solve_class(&self, sig: &MaterialSignature) -> OracleClass {
        let indexer = PositionIndexer::new(self.board, sig.clone());
        let slots = indexer.slot_count() as usize;
        let pieces = sig.pieces();

        let mut captures: Vec<Option<usize>> = vec![None; pieces.len()];
        for (j, piece) in pieces.iter().enumerate() {
            if piece.kind != PieceKind::King {
                captures[j] = Some(self.ids[&sig.after_capture(j)]);
            }
        }
        let mut promos = HashMap::new();
        if self.board.pawns_allowed() {
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
                    promos.insert(
                        (i, kind, None),
                        self.ids[&sig.after_promotion(i, kind, None)],
                    );
                    for (j, victim) in pieces.iter().enumerate() {
                        if victim.color != pawn.color && victim.kind != PieceKind::King {
                            promos.insert(
                                (i, kind, Some(j)),
                                self.ids[&sig.after_promotion(i, kind, Some(j))],
                            );
                        }
                    }
                }
            }
        }

        let mut class = OracleClass {
            indexer,
            state: vec![INVALID; slots],
            dtm: vec![0u16; slots],
            captures,
            promos,
            max_dtm: 0,
        };

        // Round 0: legality (public validation path) and terminal values.
        let mut worklist: Vec<u32> = Vec::new();
        for slot in 0..slots {
            let Some(pos) = class.indexer.position_at(slot as u64) else {
                continue;
            };
            if pos.validate().is_err() {
                continue;
            }
            if legal_moves(&pos).is_empty() {
                class.state[slot] = if movegen::in_check(&pos, pos.to_move()) {
                    LOSS // checkmated where it stands
                } else {
                    DRAW_TERM // stalemate
                };
            } else {
                class.state[slot] = OPEN;
                worklist.push(slot as u32);
            }
        }

        // External values never exceed this; once a round beyond it assigns
        // nothing, no later round can assign anything either.
        let max_dep_dtm: u16 = class
            .captures
            .iter()
            .flatten()
            .chain(class.promos.values())
            .map(|&id| self.classes[id].max_dtm)
            .max()
            .unwrap_or(0);

        let mut round: u16 = 1;
        while !worklist.is_empty() {
            let mut assigned = false;
            let classes = &self.classes;
            let OracleClass {
                indexer,
                state,
                dtm,
                captures,
                promos,
                max_dtm,
            } = &mut class;
            worklist.retain(|&entry| {
                let slot = entry as usize;
                let pos = indexer.position_at(slot as u64).expect("open slots decode");
                let mut squares = [0u8; MAX_NATIVE_PIECES];
                for (idx, &(s, _)) in pos.placements().iter().enumerate() {
                    squares[idx] = indexer.board().square_index(s);
                }
                let sq = &squares[..pieces.len()];

                let mut best_win: Option<u16> = None;
                let mut all_bad = true;
                let mut worst = 0u16;
                for m in legal_moves(&pos) {
                    let rel = successor_value(
                        &pos, &m, pieces, sq, indexer, state, dtm, captures, promos, classes,
                    );
                    match rel {
                        Rel::Open | Rel::Draw => all_bad = false,
                        Rel::MoverWins(d) => worst = worst.max(d),
                        Rel::MoverLoses(e) => {
                            all_bad = false;
                            let via = e + 1;
                            best_win = Some(best_win.map_or(via, |b| b.min(via)));
                        }
                    }
                }
                debug_assert!(best_win.is_none_or(|b| b >= round), "win missed earlier");
                if best_win == Some(round) {
                    state[slot] = WIN;
                    dtm[slot] = round;
                } else if all_bad && worst + 1 == round {
                    state[slot] = LOSS;
                    dtm[slot] = round;
                } else {
                    return true;
                }
                *max_dtm = (*max_dtm).max(round);
                assigned = true;
                false
            });
            if !assigned && round > max_dep_dtm {
                break; // nothing at this distance and none can appear later
            }
            round += 1;
        }
        class
    }
}

/// Value of the position after `m`, relative to the side to move there.
#[allow(clippy::too_many_arguments)]
fn successor_value(
    pos: &WholePosition,
    m: &Move,
    pieces: &[Piece],
    squares: &[u8],
    indexer: &PositionIndexer,
    state: &[u8],
    dtm: &[u16],
    captures: &[Option<usize>],
    promos: &HashMap<(usize, PieceKind, Option<usize>), usize>,
    classes: &[OracleClass],
) -> Rel {
    let board = pos.board();
    let mover = pos.to_move();
    let from = board.square_index(m.from);
    let to = board.square_index(m.to);
    let i = squares
        .iter()
        .position(|&s| s == from)
        .expect("move starts on a piece");
    let victim = squares
        .iter()
        .position(|&s| s == to)
        .filter(|&j| pieces[j].color != mover);

    if victim.is_none() && m.promotion.is_none() {
        let mut tmp = [0u8; MAX_NATIVE_PIECES];
        tmp[..squares.len()].copy_from_slice(squares);
        tmp[i] = to;
        let slot = indexer.slot_of_squares(&mut tmp[..squares.len()], mover.opposite());
        return rel_of(state[slot as usize], dtm[slot as usize], false);
    }

    let class_id = match m.promotion {
        Some(kind) => promos[&(i, kind, victim)],
        None => captures[victim.expect("non-promoting external move captures")]
            .expect("capturable piece has a class"),
    };
    let class = &classes[class_id];
    let mut items = [(pieces[0], 0u8); MAX_NATIVE_PIECES];
    let mut n = 0;
    for j in 0..squares.len() {
        if Some(j) == victim {
            continue;
        }
        items[n] = if j == i {
            (
                m.promotion
                    .map_or(pieces[i], |kind| Piece::new(mover, kind)),
                to,
            )
        } else {
            (pieces[j], squares[j])
        };
        n += 1;
    }
    let slot = class
        .indexer
        .slot_of_pieces(&mut items[..n], mover.opposite())
        .expect("successor material matches its class");
    rel_of(class.state[slot as usize], class.dtm[slot as usize], true)
}

fn rel_of(state: u8, dtm: u16, class_is_final: bool) -> Rel {
    match state {
        OPEN => {
            if class_is_final {
                Rel::Draw // never assigned ⇒ drawn by fixpoint
            } else {
                Rel::Open
            }
        }
        DRAW_TERM => Rel::Draw,
        WIN => Rel::MoverWins(dtm),
        LOSS => Rel::MoverLoses(dtm),
        INVALID => unreachable!("legal move reached an invalid slot"),
        other => unreachable!("slot in state {other}"),
    }
}

/// Exact-within-horizon search result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bounded {
    /// The mover mates in exactly this many plies.
    WinIn(u16),
    /// The mover is mated in exactly this many plies against best play.
    LoseIn(u16),
    /// Drawn, or decisive beyond the horizon — no claim either way.
    Unresolved,
}

/// Exhaustive depth-limited search with a transposition memo. Within
/// `depth` plies the verdicts are exact distances; everything else comes
/// back [`Bounded::Unresolved`].
pub struct Negamax {
    board: BoardSpec,
    classes: HashMap<MaterialSignature, (u16, PositionIndexer)>,
    memo: HashMap<u64, i16>,
}

impl Negamax {
    pub fn new(board: BoardSpec) -> Negamax {
        Negamax {
            board,
            classes: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    pub fn evaluate(&mut self, pos: &WholePosition, depth: u16) -> Bounded {
        assert_eq!(
            pos.board(),
            self.board,
            "position is on this search's board"
        );
        let key = self.key_of(pos, depth);
        if let Some(&code) = self.memo.get(&key) {
            return decode_bounded(code);
        }
        let moves = legal_moves(pos);
        let value = if moves.is_empty() {
            if movegen::in_check(pos, pos.to_move()) {
                Bounded::LoseIn(0)
            } else {
                Bounded::Unresolved // stalemate: drawn, but carried as "no win either way"
            }
        } else if depth == 0 {
            Bounded::Unresolved
        } else {
            let mut best_win: Option<u16> = None;
            let mut worst_loss = 0u16;
            let mut all_lost = true;
            for m in moves {
                let succ = movegen::apply_unchecked(pos, m);
                match self.evaluate(&succ, depth - 1) {
                    Bounded::LoseIn(e) => {
                        let via = e + 1;
                        best_win = Some(best_win.map_or(via, |b| b.min(via)));
                        all_lost = false;
                    }
                    Bounded::WinIn(d) => worst_loss = worst_loss.max(d + 1),
                    Bounded::Unresolved => all_lost = false,
                }
            }
            match best_win {
                Some(d) => Bounded::WinIn(d),
                None if all_lost => Bounded::LoseIn(worst_loss),
                None => Bounded::Unresolved,
            }
        };
        self.memo.insert(key, encode_bounded(value));
        value
    }

    fn key_of(&mut self, pos: &WholePosition, depth: u16) -> u64 {
        let sig = MaterialSignature::of_position(pos);
        let next_id = self.classes.len() as u16;
        let (id, indexer) = self
            .classes
            .entry(sig)
            .or_insert_with_key(|s| (next_id, PositionIndexer::new(pos.board(), s.clone())));
        let slot = indexer
            .slot_of(pos)
            .expect("indexer built from this material");
        debug_assert!(slot < 1 << 32);
        (*id as u64) << 48 | (depth as u64) << 32 | slot
    }
}

fn encode_bounded(b: Bounded) -> i16 {
    match b {
        Bounded::WinIn(d) => (d + 1) as i16,
        Bounded::LoseIn(e) => -((e + 1) as i16),
        Bounded::Unresolved => 0,
    }
}

fn decode_bounded(code: i16) -> Bounded {
    match code {
        0 => Bounded::Unresolved,
        d if d > 0 => Bounded::WinIn(d as u16 - 1),
        e => Bounded::LoseIn((-e) as u16 - 1),
    }
}
