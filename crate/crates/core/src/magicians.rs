//! The Magicians: a two-row card game whose positions admit a transitive
//! value order — the structural foil to the chess half-position cycles.
//!
//! Cards show a Good face (`X`) or a Bad face (`O`). A move swaps one card
//! from the upper row with one from the lower row; a card that arrives
//! between two hostile neighbors is flipped, while cards already resident
//! in a row never change. [`perfect_value`] solves boards exactly by
//! breadth-first search; [`row_value`] is the additive heuristic whose
//! induced order is total and therefore transitive, and [`best_swap`]
//! turns it into a policy for either side.
//!
//! Two-player play ([`play_match`]) is an extension beyond the solitaire
//! rules: sides alternate swaps, the Good side moves first, reaching an
//! all-Good board wins for Good and an all-Bad board for Bad, and
//! repeating a (board, side-to-move) state is a draw.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Everything that can go wrong constructing boards, swaps, or reports.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MagError {
    #[error("board width {0} out of range {min}..={max}", min = MagBoard::MIN_WIDTH, max = MagBoard::MAX_WIDTH)]
    BadWidth(usize),
    #[error("rows differ in width: upper {upper}, lower {lower}")]
    RaggedRows { upper: usize, lower: usize },
    #[error("swap u{upper_col} l{lower_col} out of range for width {width}")]
    IndexOutOfRange {
        upper_col: usize,
        lower_col: usize,
        width: usize,
    },
    #[error("row of width {0} has no room for a working pair")]
    RowTooShort(usize),
    #[error("cannot parse board `{0}`, expected faces like `XOX/OXO`")]
    BadBoardText(String),
    #[error("cannot parse swap `{0}`, expected `u<col> l<col>` like `u1 l0`")]
    BadSwapText(String),
}

/// One side of a card: `X` is the Good magician, `O` the Bad one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Good,
    Bad,
}

impl Face {
    pub fn opposite(self) -> Face {
        match self {
            Face::Good => Face::Bad,
            Face::Bad => Face::Good,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Face::Good => 'X',
            Face::Bad => 'O',
        }
    }

    pub fn from_letter(c: char) -> Option<Face> {
        match c {
            'X' | 'x' => Some(Face::Good),
            'O' | 'o' => Some(Face::Bad),
            _ => None,
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Which player a heuristic evaluation favors. The Bad side scores `O`
/// cards as friendly, so one evaluator serves both players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    GoodPlayer,
    BadPlayer,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::GoodPlayer => Side::BadPlayer,
            Side::BadPlayer => Side::GoodPlayer,
        }
    }

    /// The face this side wants to see everywhere.
    pub fn friendly_face(self) -> Face {
        match self {
            Side::GoodPlayer => Face::Good,
            Side::BadPlayer => Face::Bad,
        }
    }
}

/// Two full rows of cards. Every cell is always occupied; moves only
/// exchange cards between the rows, never with the outside.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MagBoard {
    upper: Vec<Face>,
    lower: Vec<Face>,
}

impl MagBoard {
    pub const MIN_WIDTH: usize = 2;
    pub const MAX_WIDTH: usize = 10;

    pub fn new(upper: Vec<Face>, lower: Vec<Face>) -> Result<Self, MagError> {
        if upper.len() != lower.len() {
            return Err(MagError::RaggedRows {
                upper: upper.len(),
                lower: lower.len(),
            });
        }
        if upper.len() < Self::MIN_WIDTH || upper.len() > Self::MAX_WIDTH {
            return Err(MagError::BadWidth(upper.len()));
        }
        Ok(MagBoard { upper, lower })
    }

    /// A board with every card showing `face`.
    pub fn filled(width: usize, face: Face) -> Result<Self, MagError> {
        Self::new(vec![face; width], vec![face; width])
    }

    pub fn width(&self) -> usize {
        self.upper.len()
    }

    pub fn upper(&self) -> &[Face] {
        &self.upper
    }

    pub fn lower(&self) -> &[Face] {
        &self.lower
    }

    /// How many cards currently show `face`.
    pub fn count(&self, face: Face) -> usize {
        self.upper
            .iter()
            .chain(self.lower.iter())
            .filter(|&&f| f == face)
            .count()
    }

    /// True when all `2N` cards show `face`.
    pub fn is_uniform(&self, face: Face) -> bool {
        self.count(face) == 2 * self.width()
    }

    /// Bit-packed state: bit `i` set iff `upper[i]` is Good, bit `N+i`
    /// set iff `lower[i]` is Good. Used for search over the state graph.
    fn code(&self) -> u32 {
        let n = self.width();
        let mut code = 0u32;
        for (i, &f) in self.upper.iter().enumerate() {
            if f == Face::Good {
                code |= 1 << i;
            }
        }
        for (i, &f) in self.lower.iter().enumerate() {
            if f == Face::Good {
                code |= 1 << (n + i);
            }
        }
        code
    }

    fn from_code(width: usize, code: u32) -> Self {
        let face = |bit: usize| {
            if code >> bit & 1 == 1 {
                Face::Good
            } else {
                Face::Bad
            }
        };
        MagBoard {
            upper: (0..width).map(face).collect(),
            lower: (0..width).map(|i| face(width + i)).collect(),
        }
    }
}

impl fmt::Display for MagBoard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.upper {
            write!(f, "{c}")?;
        }
        write!(f, "/")?;
        for &c in &self.lower {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for MagBoard {
    type Err = MagError;

    /// Parses the `"XOX/OXO"` form: upper row, slash, lower row.
    fn from_str(s: &str) -> Result<Self, MagError> {
        let bad = || MagError::BadBoardText(s.to_string());
        let (up, low) = s.trim().split_once('/').ok_or_else(bad)?;
        let row = |part: &str| -> Result<Vec<Face>, MagError> {
            part.chars()
                .map(|c| Face::from_letter(c).ok_or_else(bad))
                .collect()
        };
        MagBoard::new(row(up)?, row(low)?).map_err(|e| match e {
            MagError::BadWidth(_) | MagError::RaggedRows { .. } => e,
            _ => bad(),
        })
    }
}

/// One move: exchange the card at `upper[upper_col]` with the card at
/// `lower[lower_col]`. Swaps within a row do not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Swap {
    pub upper_col: usize,
    pub lower_col: usize,
}

impl Swap {
    pub fn new(upper_col: usize, lower_col: usize) -> Self {
        Swap {
            upper_col,
            lower_col,
        }
    }
}

impl fmt::Display for Swap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{} l{}", self.upper_col, self.lower_col)
    }
}

impl FromStr for Swap {
    type Err = MagError;

    /// Parses `"u1 l0"` (upper column, lower column, either order).
    fn from_str(s: &str) -> Result<Self, MagError> {
        let bad = || MagError::BadSwapText(s.to_string());
        let mut upper = None;
        let mut lower = None;
        for token in s.split_whitespace() {
            let (prefix, digits) = token.split_at(1);
            let col: usize = digits.parse().map_err(|_| bad())?;
            let slot = match prefix {
                "u" | "U" => &mut upper,
                "l" | "L" => &mut lower,
                _ => return Err(bad()),
            };
            if slot.replace(col).is_some() {
                return Err(bad());
            }
        }
        match (upper, lower) {
            (Some(u), Some(l)) => Ok(Swap::new(u, l)),
            _ => Err(bad()),
        }
    }
}

/// The swap rule on packed codes. Each moved card flips iff both of its
/// new horizontal neighbors exist and both show the opposite face; the
/// neighbors themselves are residents and never change, so the two moved
/// cards (always in different rows) transform independently.
fn swap_on_code(code: u32, width: usize, s: Swap) -> u32 {
    let n = width;
    let (uc, lc) = (s.upper_col, s.lower_col);
    let arriving_up = code >> (n + lc) & 1;
    let arriving_down = code >> uc & 1;

    let mut up_face = arriving_up;
    if uc > 0 && uc + 1 < n {
        let left = code >> (uc - 1) & 1;
        let right = code >> (uc + 1) & 1;
        if left == right && left != up_face {
            up_face ^= 1;
        }
    }
    let mut down_face = arriving_down;
    if lc > 0 && lc + 1 < n {
        let left = code >> (n + lc - 1) & 1;
        let right = code >> (n + lc + 1) & 1;
        if left == right && left != down_face {
            down_face ^= 1;
        }
    }

    let mut next = code;
    next = next & !(1 << uc) | up_face << uc;
    next = next & !(1 << (n + lc)) | down_face << (n + lc);
    next
}

/// Executes a swap and applies the transformation rule to the two moved
/// cards. Pure: returns the successor board.
pub fn apply_swap(board: &MagBoard, s: Swap) -> Result<MagBoard, MagError> {
    let n = board.width();
    if s.upper_col >= n || s.lower_col >= n {
        return Err(MagError::IndexOutOfRange {
            upper_col: s.upper_col,
            lower_col: s.lower_col,
            width: n,
        });
    }
    Ok(MagBoard::from_code(n, swap_on_code(board.code(), n, s)))
}

/// Breadth-first search from `board` to the all-Good board, recording
/// one predecessor per state. Returns the swap sequence of a shortest
/// solution, or `None` when all-Good is unreachable.
pub fn perfect_line(board: &MagBoard) -> Option<Vec<Swap>> {
    let n = board.width();
    let states = 1u32 << (2 * n);
    let target = states - 1;
    let start = board.code();
    if start == target {
        return Some(Vec::new());
    }

    const UNSEEN: u32 = u32::MAX;
    let mut prev: Vec<(u32, Swap)> = vec![(UNSEEN, Swap::new(0, 0)); states as usize];
    let mut queue = VecDeque::new();
    prev[start as usize] = (start, Swap::new(0, 0));
    queue.push_back(start);

    while let Some(code) = queue.pop_front() {
        for uc in 0..n {
            for lc in 0..n {
                let s = Swap::new(uc, lc);
                let next = swap_on_code(code, n, s);
                if prev[next as usize].0 != UNSEEN {
                    continue;
                }
                prev[next as usize] = (code, s);
                if next == target {
                    let mut line = Vec::new();
                    let mut at = target;
                    while at != start {
                        let (from, step) = prev[at as usize];
                        line.push(step);
                        at = from;
                    }
                    line.reverse();
                    return Some(line);
                }
                queue.push_back(next);
            }
        }
    }
    None
}

/// Minimal number of swaps needed to reach the all-Good board, or
/// `None` when it is unreachable (boards without enough Good material
/// can never manufacture more).
pub fn perfect_value(board: &MagBoard) -> Option<u32> {
    perfect_line(board).map(|line| line.len() as u32)
}

/// All value weights share this integer scale so every term — including
/// the centrality fractions 1/(1+d) for widths up to 10 — stays exact.
const SCALE: i64 = 27_720;
const PAIR_WEIGHT: i64 = 8 * SCALE;
const CARD_WEIGHT: i64 = 4 * SCALE;
const DISTANCE_WEIGHT: i64 = SCALE;

/// Minimum number of cells among some `{i, i+2}` pair that are not yet
/// Good: 0 iff a working pair already exists, 1 when one swap could
/// complete a pair, and so on.
pub fn pair_distance(row: &[Face]) -> Result<u32, MagError> {
    if row.len() < 3 {
        return Err(MagError::RowTooShort(row.len()));
    }
    Ok((0..row.len() - 2)
        .map(|i| (row[i] != Face::Good) as u32 + (row[i + 2] != Face::Good) as u32)
        .min()
        .expect("width >= 3 leaves at least one pair span"))
}

fn pair_distance_for(row: &[Face], friendly: Face) -> u32 {
    (0..row.len() - 2)
        .map(|i| (row[i] != friendly) as u32 + (row[i + 2] != friendly) as u32)
        .min()
        .expect("caller guarantees width >= 3")
}

/// Additive row score from `side`'s perspective: completed working pairs,
/// friendly card count, proximity of the nearest almost-pair, and a
/// centrality bonus for friendly cards near the middle of the row. Rows
/// too short to ever hold a working pair skip the pair terms.
pub fn row_value(row: &[Face], side: Side) -> i64 {
    let n = row.len();
    debug_assert!(n <= MagBoard::MAX_WIDTH, "rows wider than boards allow");
    let friendly = side.friendly_face();
    let mut value = 0i64;
    for (i, &f) in row.iter().enumerate() {
        if f == friendly {
            // 1/(1 + |i - (n-1)/2|) scaled to 2*SCALE/(2 + |2i - n + 1|),
            // exact for every width a board permits.
            let m = (2 * i as i64 - n as i64 + 1).abs();
            value += CARD_WEIGHT + 2 * SCALE / (2 + m);
        }
    }
    if n >= 3 {
        let pairs = (0..n - 2)
            .filter(|&i| row[i] == friendly && row[i + 2] == friendly)
            .count() as i64;
        value += PAIR_WEIGHT * pairs;
        value -= DISTANCE_WEIGHT * i64::from(pair_distance_for(row, friendly));
    }
    value
}

/// Whole-board score: the sum of both row values from `side`'s
/// perspective. Symmetric under exchanging the two rows.
pub fn heuristic_value(board: &MagBoard, side: Side) -> i64 {
    row_value(board.upper(), side) + row_value(board.lower(), side)
}

/// Evaluates every one of the `N²` swaps and returns one with maximal
/// resulting [`heuristic_value`] for `side`; exact ties are broken by a
/// uniform draw from `rng`, so symmetric best moves all occur.
pub fn best_swap(board: &MagBoard, side: Side, rng: &mut impl Rng) -> Swap {
    let n = board.width();
    let code = board.code();
    let mut best = i64::MIN;
    let mut ties: Vec<Swap> = Vec::new();
    for uc in 0..n {
        for lc in 0..n {
            let s = Swap::new(uc, lc);
            let next = MagBoard::from_code(n, swap_on_code(code, n, s));
            let value = heuristic_value(&next, side);
            if value > best {
                best = value;
                ties.clear();
            }
            if value == best {
                ties.push(s);
            }
        }
    }
    ties[rng.gen_range(0..ties.len())]
}

/// The six width-3 rows, one representative per mirror pair, joined
/// ascending by [`row_value`] — the order the heuristic must induce.
pub fn row_order_chain() -> String {
    let mut rows = ["OOO", "OXO", "XOO", "XXO", "XOX", "XXX"];
    rows.sort_by_key(|r| {
        let faces: Vec<Face> = r.chars().filter_map(Face::from_letter).collect();
        row_value(&faces, Side::GoodPlayer)
    });
    rows.join(" < ")
}

/// Outcome of checking that the value-induced order on boards is a total
/// preorder: every sampled triple with `u ≥ v` and `v ≥ w` must satisfy
/// `u ≥ w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitivityReport {
    pub width: usize,
    pub boards: usize,
    pub triples_checked: u64,
    pub violations: u64,
    pub seed: u64,
    /// Single rows of the checked width grouped by equal value, ascending.
    pub row_order: Vec<Vec<String>>,
    /// The canonical width-3 chain, for comparison against the pinned order.
    pub order_chain: String,
}

impl TransitivityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Exhaustively enumerates every board of `width` (state space
/// `2^(2·width)`, so widths 2..=5 only), samples `triples` index triples
/// with a seeded generator, and counts order violations — zero by
/// construction, demonstrated rather than assumed.
pub fn verify_transitivity(
    width: usize,
    triples: u64,
    seed: u64,
) -> Result<TransitivityReport, MagError> {
    if !(MagBoard::MIN_WIDTH..=5).contains(&width) {
        return Err(MagError::BadWidth(width));
    }
    let states = 1usize << (2 * width);
    let values: Vec<i64> = (0..states)
        .map(|code| heuristic_value(&MagBoard::from_code(width, code as u32), Side::GoodPlayer))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    for _ in 0..triples {
        let u = values[rng.gen_range(0..states)];
        let v = values[rng.gen_range(0..states)];
        let w = values[rng.gen_range(0..states)];
        if u >= v && v >= w && !(u >= w) {
            violations += 1;
        }
    }

    // Group the single rows of this width by equal row value, ascending.
    let mut rows: Vec<(i64, String)> = (0..1u32 << width)
        .map(|bits| {
            let faces: Vec<Face> = (0..width)
                .map(|i| {
                    if bits >> i & 1 == 1 {
                        Face::Good
                    } else {
                        Face::Bad
                    }
                })
                .collect();
            let text: String = faces.iter().map(|f| f.letter()).collect();
            (row_value(&faces, Side::GoodPlayer), text)
        })
        .collect();
    rows.sort();
    let mut row_order: Vec<Vec<String>> = Vec::new();
    let mut last: Option<i64> = None;
    for (value, text) in rows {
        if last == Some(value) {
            row_order.last_mut().expect("group exists").push(text);
        } else {
            row_order.push(vec![text]);
            last = Some(value);
        }
    }

    Ok(TransitivityReport {
        width,
        boards: states,
        triples_checked: triples,
        violations,
        seed,
        row_order,
        order_chain: row_order_chain(),
    })
}

/// How a two-player match ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchOutcome {
    /// The board reached all-Good.
    GoodWins,
    /// The board reached all-Bad.
    BadWins,
    /// A (board, side-to-move) state repeated.
    DrawByRepetition,
}

/// Full record of an AI-vs-AI match: every ply and the final board.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchRecord {
    pub outcome: MatchOutcome,
    pub plies: Vec<(Side, Swap)>,
    pub final_board: MagBoard,
}

/// Plays both sides with [`best_swap`] under the two-player extension:
/// alternate swaps, Good first, all-Good wins for Good, all-Bad for Bad,
/// and a repeated (board, side-to-move) state is a draw. The state space
/// is finite, so the match always terminates.
pub fn play_match(start: &MagBoard, seed: u64) -> MatchRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut board = start.clone();
    let mut side = Side::GoodPlayer;
    let mut plies = Vec::new();
    let mut seen: HashMap<(u32, Side), ()> = HashMap::new();

    loop {
        if board.is_uniform(Face::Good) {
            return MatchRecord {
                outcome: MatchOutcome::GoodWins,
                plies,
                final_board: board,
            };
        }
        if board.is_uniform(Face::Bad) {
            return MatchRecord {
                outcome: MatchOutcome::BadWins,
                plies,
                final_board: board,
            };
        }
        if seen.insert((board.code(), side), ()).is_some() {
            return MatchRecord {
                outcome: MatchOutcome::DrawByRepetition,
                plies,
                final_board: board,
            };
        }
        let s = best_swap(&board, side, &mut rng);
        board = apply_swap(&board, s).expect("best_swap stays in range");
        plies.push((side, s));
        side = side.opponent();
    }
}
