//! Exact game-theoretic evaluation of small-material positions.
//!
//! The workhorse is retrograde analysis ([`retro`], reached through
//! [`Solver`]): for a (board, material) class every slot is classified as a
//! win, loss or draw with distance-to-mate, after the classes reachable by
//! captures and promotions have been built. A structurally independent
//! forward route ([`oracle`]) recomputes values by fixpoint iteration over
//! the public move generator and by bounded negamax, for cross-checking.
//!
//! Values are pure graph-theoretic: no 50-move rule, no repetition counters.
//! DTM is counted in plies; dtm = 0 means the side to move is checkmated.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use thiserror::Error;

use crate::board::codec::encode_whole;
use crate::board::WholePosition;
use crate::board::{BoardError, BoardSpec, Color};
use crate::movegen::{self, Move};

pub mod index;
pub mod oracle;
mod retro;
pub mod table;

pub use index::{MaterialSignature, PositionIndexer, MAX_NATIVE_PIECES};
pub use table::{SolvedTable, TableStats, TABLE_FORMAT_VERSION};

/// Default memory ceiling for table building: 2 GiB.
pub const DEFAULT_MEMORY_CEILING: u64 = 2 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Draw,
    WhiteWins,
    BlackWins,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Draw => write!(f, "Draw"),
            Verdict::WhiteWins => write!(f, "WhiteWins"),
            Verdict::BlackWins => write!(f, "BlackWins"),
        }
    }
}

/// Game-theoretic value of a position. `dtm` (plies to mate under optimal
/// play) is present exactly when the verdict is decisive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Outcome {
    pub verdict: Verdict,
    pub dtm: Option<u16>,
}

impl Outcome {
    pub fn draw() -> Outcome {
        Outcome {
            verdict: Verdict::Draw,
            dtm: None,
        }
    }

    pub fn win(color: Color, dtm: u16) -> Outcome {
        let verdict = match color {
            Color::White => Verdict::WhiteWins,
            Color::Black => Verdict::BlackWins,
        };
        Outcome {
            verdict,
            dtm: Some(dtm),
        }
    }

    pub fn winner(&self) -> Option<Color> {
        match self.verdict {
            Verdict::Draw => None,
            Verdict::WhiteWins => Some(Color::White),
            Verdict::BlackWins => Some(Color::Black),
        }
    }

    pub fn is_draw(&self) -> bool {
        self.verdict == Verdict::Draw
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.dtm {
            Some(d) => write!(f, "{} dtm={}", self.verdict, d),
            None => write!(f, "{}", self.verdict),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{0} pieces exceed the native table limit of {MAX_NATIVE_PIECES}")]
    TooManyPieces(usize),
    #[error("illegal position: {0}")]
    IllegalPosition(#[from] BoardError),
    #[error("material must contain exactly one king per side")]
    BadMaterial,
    #[error("building this table needs about {needed} bytes, above the {ceiling}-byte ceiling")]
    ResourceLimit { needed: u64, ceiling: u64 },
    #[error("position does not match the table's board or material")]
    TableMismatch,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("table file failed its checksum")]
    ChecksumMismatch,
    #[error("table file version {found} is not the supported {TABLE_FORMAT_VERSION}")]
    VersionMismatch { found: u16 },
    #[error("table file malformed: {0}")]
    Corrupt(String),
    #[error("external oracle: {0}")]
    External(String),
}

/// Adapter for tablebases beyond the native piece limit: given a position in
/// the text codec, return its outcome.
pub trait ExternalOracle: Send + Sync {
    fn evaluate(&self, encoded_position: &str) -> Result<Outcome, String>;
}

/// Facade over table building, caching and probing.
///
/// Tables are built bottom-up over the capture/promotion dependency graph
/// and kept in memory; with a cache directory configured they are also
/// persisted and picked up by later runs.
pub struct Solver {
    cache_dir: Option<PathBuf>,
    memory_ceiling: u64,
    tables: Mutex<HashMap<(BoardSpec, MaterialSignature), Arc<SolvedTable>>>,
    external: Option<Box<dyn ExternalOracle>>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            cache_dir: None,
            memory_ceiling: DEFAULT_MEMORY_CEILING,
            tables: Mutex::new(HashMap::new()),
            external: None,
        }
    }

    /// Persist built tables under `dir` and reuse any found there.
    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Solver {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn with_memory_ceiling(mut self, bytes: u64) -> Solver {
        self.memory_ceiling = bytes;
        self
    }

    pub fn with_external_oracle(mut self, oracle: Box<dyn ExternalOracle>) -> Solver {
        self.external = Some(oracle);
        self
    }

    /// Exact value of `pos`. Positions over the native piece limit are
    /// forwarded to the external oracle when one is configured.
    pub fn solve(&self, pos: &WholePosition) -> Result<Outcome, SolverError> {
        if pos.piece_count() > MAX_NATIVE_PIECES {
            return match &self.external {
                Some(oracle) => oracle
                    .evaluate(&encode_whole(pos))
                    .map_err(SolverError::External),
                None => Err(SolverError::TooManyPieces(pos.piece_count())),
            };
        }
        let sig = MaterialSignature::of_position(pos);
        let table = self.table(pos.board(), &sig)?;
        table.probe(pos)
    }

    /// The solved table for a material class, building it (and every class
    /// it can transition into) if needed.
    pub fn table(
        &self,
        board: BoardSpec,
        sig: &MaterialSignature,
    ) -> Result<Arc<SolvedTable>, SolverError> {
        if sig.len() > MAX_NATIVE_PIECES {
            return Err(SolverError::TooManyPieces(sig.len()));
        }
        if let Some(t) = self.tables.lock().unwrap().get(&(board, sig.clone())) {
            return Ok(Arc::clone(t));
        }
        if let Some(dir) = &self.cache_dir {
            let path = dir.join(table_file_name(board, sig));
            if let Ok(t) = SolvedTable::load(&path) {
                if t.board() == board && t.material() == sig {
                    let t = Arc::new(t);
                    self.tables
                        .lock()
                        .unwrap()
                        .insert((board, sig.clone()), Arc::clone(&t));
                    return Ok(t);
                }
            }
        }

        let mut deps = HashMap::new();
        for dep in dependency_signatures(sig, board) {
            let t = self.table(board, &dep)?;
            deps.insert(dep, t);
        }

        let needed = retro::estimated_bytes(board, sig);
        if needed > self.memory_ceiling {
            return Err(SolverError::ResourceLimit {
                needed,
                ceiling: self.memory_ceiling,
            });
        }
        let t = Arc::new(retro::build(board, sig.clone(), &deps)?);
        if let Some(dir) = &self.cache_dir {
            // Best effort: a failed save must not fail the build.
            let _ = std::fs::create_dir_all(dir);
            let _ = t.save(&dir.join(table_file_name(board, sig)));
        }
        self.tables
            .lock()
            .unwrap()
            .insert((board, sig.clone()), Arc::clone(&t));
        Ok(t)
    }

    /// Build (or fetch) the table for `material` on `board`.
    pub fn build_table(
        &self,
        white: &[crate::board::PieceKind],
        black: &[crate::board::PieceKind],
        board: BoardSpec,
    ) -> Result<Arc<SolvedTable>, SolverError> {
        let sig = MaterialSignature::new(white, black)?;
        self.table(board, &sig)
    }

    /// Optimal line from `pos`: the winner plays dtm-minimizing moves, the
    /// loser dtm-maximizing ones; ties break on move order. Empty for draws.
    pub fn principal_line(&self, pos: &WholePosition) -> Result<Vec<Move>, SolverError> {
        let mut line = Vec::new();
        let mut cur = pos.clone();
        loop {
            let here = self.solve(&cur)?;
            let Some(winner) = here.winner() else { break };
            if here.dtm == Some(0) {
                break;
            }
            let mover = cur.to_move();
            let mut best: Option<(u16, Move)> = None;
            for m in movegen::legal_moves(&cur) {
                let succ = movegen::apply_unchecked(&cur, m);
                let val = self.solve(&succ)?;
                if val.winner() != Some(winner) {
                    continue;
                }
                let d = val.dtm.expect("decisive outcome carries dtm");
                let better = match best {
                    None => true,
                    Some((bd, _)) => {
                        if mover == winner {
                            d < bd
                        } else {
                            d > bd
                        }
                    }
                };
                if better {
                    best = Some((d, m));
                }
            }
            let (_, m) = best.expect("winning position has a value-preserving move");
            line.push(m);
            cur = movegen::apply_unchecked(&cur, m);
        }
        Ok(line)
    }
}

/// Solve through a fresh throwaway solver (convenience for small classes).
pub fn solve(pos: &WholePosition) -> Result<Outcome, SolverError> {
    Solver::new().solve(pos)
}

pub fn save_table(table: &SolvedTable, path: &Path) -> Result<(), SolverError> {
    table.save(path)
}

pub fn load_table(path: &Path) -> Result<SolvedTable, SolverError> {
    SolvedTable::load(path)
}

/// Cache file name for a class: `8x8-planar-KQvK-v1.itlb`.
pub fn table_file_name(board: BoardSpec, sig: &MaterialSignature) -> String {
    format!(
        "{}x{}-{}-{}-v{}.itlb",
        board.files(),
        board.ranks(),
        board.topology().name(),
        sig.code(),
        TABLE_FORMAT_VERSION
    )
}

/// Classes reachable from `sig` in one capture or promotion.
pub(crate) fn dependency_signatures(
    sig: &MaterialSignature,
    board: BoardSpec,
) -> Vec<MaterialSignature> {
    use crate::board::PieceKind;
    let mut out = std::collections::BTreeSet::new();
    let pieces = sig.pieces();
    for (j, p) in pieces.iter().enumerate() {
        if p.kind != PieceKind::King {
            out.insert(sig.after_capture(j));
        }
    }
    if sig.has_pawns() && board.pawns_allowed() {
        let promo_kinds = [
            PieceKind::Queen,
            PieceKind::Rook,
            PieceKind::Bishop,
            PieceKind::Knight,
        ];
        for (i, p) in pieces.iter().enumerate() {
            if p.kind != PieceKind::Pawn {
                continue;
            }
            for kind in promo_kinds {
                out.insert(sig.after_promotion(i, kind, None));
                for (j, q) in pieces.iter().enumerate() {
                    if q.color != p.color && q.kind != PieceKind::King {
                        out.insert(sig.after_promotion(i, kind, Some(j)));
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}
