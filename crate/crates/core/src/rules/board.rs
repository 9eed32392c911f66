use super::hash;
use super::types::{Color, Move, Piece, PieceKind, Square};

const ORTHOGONAL: [(i8, i8); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];
const DIAGONAL: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
/// Horse jumps as (file delta, rank delta, leg file delta, leg rank delta).
const HORSE_JUMPS: [(i8, i8, i8, i8); 8] = [
    (1, 2, 0, 1),
    (-1, 2, 0, 1),
    (1, -2, 0, -1),
    (-1, -2, 0, -1),
    (2, 1, 1, 0),
    (2, -1, 1, 0),
    (-2, 1, -1, 0),
    (-2, -1, -1, 0),
];

/// Piece placement on the 90 points. No side-to-move or history.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Board {
    squares: [Option<Piece>; Square::COUNT],
}

impl std::fmt::Debug for Board {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pieces: Vec<String> = self
            .pieces()
            .map(|(sq, p)| format!("{sq}:{:?}{:?}", p.color, p.kind))
            .collect();
        f.debug_struct("Board").field("pieces", &pieces).finish()
    }
}

impl Default for Board {
    fn default() -> Self {
        Self::empty()
    }
}

impl Board {
    pub fn empty() -> Self {
        Board {
            squares: [None; Square::COUNT],
        }
    }

    pub fn standard() -> Self {
        use PieceKind::*;
        let mut board = Board::empty();
        let back = [
            Rook, Horse, Elephant, Advisor, General, Advisor, Elephant, Horse, Rook,
        ];
        for (file, &kind) in back.iter().enumerate() {
            board.put(file as u8, 0, Piece::new(Color::Red, kind));
            board.put(file as u8, 9, Piece::new(Color::Black, kind));
        }
        for file in [1, 7] {
            board.put(file, 2, Piece::new(Color::Red, Cannon));
            board.put(file, 7, Piece::new(Color::Black, Cannon));
        }
        for file in [0, 2, 4, 6, 8] {
            board.put(file, 3, Piece::new(Color::Red, Soldier));
            board.put(file, 6, Piece::new(Color::Black, Soldier));
        }
        board
    }

    fn put(&mut self, file: u8, rank: u8, piece: Piece) {
        self.set(Square::new(file, rank).unwrap(), Some(piece));
    }

    #[inline]
    pub fn get(&self, sq: Square) -> Option<Piece> {
        self.squares[sq.index()]
    }

    #[inline]
    pub fn set(&mut self, sq: Square, piece: Option<Piece>) {
        self.squares[sq.index()] = piece;
    }

    pub fn pieces(&self) -> impl Iterator<Item = (Square, Piece)> + '_ {
        Square::all().filter_map(move |sq| self.get(sq).map(|p| (sq, p)))
    }

    pub fn piece_count(&self) -> usize {
        self.squares.iter().flatten().count()
    }

    pub fn count(&self, color: Color) -> usize {
        self.squares
            .iter()
            .flatten()
            .filter(|p| p.color == color)
            .count()
    }

    pub fn general(&self, color: Color) -> Option<Square> {
        let (lo, hi) = color.palace_ranks();
        (lo..=hi)
            .flat_map(|rank| (3..=5).map(move |file| Square::new(file, rank).unwrap()))
            .find(|&sq| self.get(sq) == Some(Piece::new(color, PieceKind::General)))
    }

    /// Moves the piece and returns whatever stood on the destination.
    #[inline]
    pub(crate) fn make(&mut self, mv: Move) -> Option<Piece> {
        let piece = self.squares[mv.from.index()].take();
        std::mem::replace(&mut self.squares[mv.to.index()], piece)
    }

    #[inline]
    pub(crate) fn unmake(&mut self, mv: Move, captured: Option<Piece>) {
        self.squares[mv.from.index()] = self.squares[mv.to.index()].take();
        self.squares[mv.to.index()] = captured;
    }

    pub(crate) fn hash_pieces(&self) -> u64 {
        self.pieces()
            .fold(0, |acc, (sq, p)| acc ^ hash::piece_key(sq, p))
    }

    /// True when both Generals stand on one file with nothing between them.
    pub fn generals_facing(&self) -> bool {
        let (Some(red), Some(black)) = (self.general(Color::Red), self.general(Color::Black))
        else {
            return false;
        };
        if red.file() != black.file() {
            return false;
        }
        ((red.rank() + 1)..black.rank())
            .all(|rank| self.get(Square::new(red.file(), rank).unwrap()).is_none())
    }

    /// True if an enemy piece attacks `color`'s General.
    pub fn in_check(&self, color: Color) -> bool {
        match self.general(color) {
            Some(sq) => self.attacked_by(sq, color.opponent()),
            None => true,
        }
    }

    /// True if a piece of `attacker` could capture on `target`. Facing
    /// Generals are not treated as an attack here; see [`Board::generals_facing`].
    pub fn attacked_by(&self, target: Square, attacker: Color) -> bool {
        // Rook lines and cannon screens.
        for (df, dr) in ORTHOGONAL {
            let mut cursor = target.offset(df, dr);
            let mut screened = false;
            while let Some(sq) = cursor {
                if let Some(p) = self.get(sq) {
                    if !screened {
                        if p.color == attacker && p.kind == PieceKind::Rook {
                            return true;
                        }
                        screened = true;
                    } else {
                        if p.color == attacker && p.kind == PieceKind::Cannon {
                            return true;
                        }
                        break;
                    }
                }
                cursor = sq.offset(df, dr);
            }
        }
        // Horses: the horse sits at target - jump, its leg next to it.
        for (df, dr, lf, lr) in HORSE_JUMPS {
            if let Some(origin) = target.offset(-df, -dr) {
                if self.get(origin) == Some(Piece::new(attacker, PieceKind::Horse)) {
                    let leg = origin.offset(lf, lr).unwrap();
                    if self.get(leg).is_none() {
                        return true;
                    }
                }
            }
        }
        // Soldiers: forward step, or sideways once across the river.
        let soldier = Some(Piece::new(attacker, PieceKind::Soldier));
        if let Some(sq) = target.offset(0, -attacker.forward()) {
            if self.get(sq) == soldier {
                return true;
            }
        }
        for df in [-1, 1] {
            if let Some(sq) = target.offset(df, 0) {
                if self.get(sq) == soldier && !attacker.owns_rank(sq.rank()) {
                    return true;
                }
            }
        }
        false
    }

    /// Moves obeying piece geometry, ignoring whether the mover's General is left exposed.
    pub fn pseudo_moves(&self, side: Color, out: &mut Vec<Move>) {
        for from in Square::all() {
            let Some(piece) = self.get(from) else {
                continue;
            };
            if piece.color != side {
                continue;
            }
            self.piece_moves(from, piece, out);
        }
    }

    fn push_if_enterable(&self, side: Color, from: Square, to: Square, out: &mut Vec<Move>) {
        match self.get(to) {
            Some(p) if p.color == side => {}
            _ => out.push(Move { from, to }),
        }
    }

    fn piece_moves(&self, from: Square, piece: Piece, out: &mut Vec<Move>) {
        let side = piece.color;
        match piece.kind {
            PieceKind::General => {
                for (df, dr) in ORTHOGONAL {
                    if let Some(to) = from.offset(df, dr).filter(|s| s.in_palace(side)) {
                        self.push_if_enterable(side, from, to, out);
                    }
                }
            }
            PieceKind::Advisor => {
                for (df, dr) in DIAGONAL {
                    if let Some(to) = from.offset(df, dr).filter(|s| s.in_palace(side)) {
                        self.push_if_enterable(side, from, to, out);
                    }
                }
            }
            PieceKind::Elephant => {
                for (df, dr) in DIAGONAL {
                    let Some(to) = from.offset(2 * df, 2 * dr) else {
                        continue;
                    };
                    if !side.owns_rank(to.rank()) {
                        continue;
                    }
                    let eye = from.offset(df, dr).unwrap();
                    if self.get(eye).is_none() {
                        self.push_if_enterable(side, from, to, out);
                    }
                }
            }
            PieceKind::Horse => {
                for (df, dr, lf, lr) in HORSE_JUMPS {
                    let Some(to) = from.offset(df, dr) else {
                        continue;
                    };
                    let leg = from.offset(lf, lr).unwrap();
                    if self.get(leg).is_none() {
                        self.push_if_enterable(side, from, to, out);
                    }
                }
            }
            PieceKind::Rook => {
                for (df, dr) in ORTHOGONAL {
                    let mut cursor = from.offset(df, dr);
                    while let Some(to) = cursor {
                        match self.get(to) {
                            None => out.push(Move { from, to }),
                            Some(p) => {
                                if p.color != side {
                                    out.push(Move { from, to });
                                }
                                break;
                            }
                        }
                        cursor = to.offset(df, dr);
                    }
                }
            }
            PieceKind::Cannon => {
                for (df, dr) in ORTHOGONAL {
                    let mut cursor = from.offset(df, dr);
                    let mut screened = false;
                    while let Some(to) = cursor {
                        match (self.get(to), screened) {
                            (None, false) => out.push(Move { from, to }),
                            (Some(_), false) => screened = true,
                            (None, true) => {}
                            (Some(p), true) => {
                                if p.color != side {
                                    out.push(Move { from, to });
                                }
                                break;
                            }
                        }
                        cursor = to.offset(df, dr);
                    }
                }
            }
            PieceKind::Soldier => {
                if let Some(to) = from.offset(0, side.forward()) {
                    self.push_if_enterable(side, from, to, out);
                }
                if !side.owns_rank(from.rank()) {
                    for df in [-1, 1] {
                        if let Some(to) = from.offset(df, 0) {
                            self.push_if_enterable(side, from, to, out);
                        }
                    }
                }
            }
        }
    }

    /// Pseudo-moves that leave `side`'s General safe and the Generals apart.
    pub fn legal_moves(&self, side: Color) -> Vec<Move> {
        let mut pseudo = Vec::with_capacity(64);
        self.pseudo_moves(side, &mut pseudo);
        let mut scratch = self.clone();
        pseudo.retain(|&mv| scratch.leaves_general_safe(mv, side));
        pseudo
    }

    pub fn has_legal_move(&self, side: Color) -> bool {
        let mut pseudo = Vec::with_capacity(64);
        self.pseudo_moves(side, &mut pseudo);
        let mut scratch = self.clone();
        pseudo
            .into_iter()
            .any(|mv| scratch.leaves_general_safe(mv, side))
    }

    fn leaves_general_safe(&mut self, mv: Move, side: Color) -> bool {
        let captured = self.make(mv);
        let ok = !self.in_check(side) && !self.generals_facing();
        self.unmake(mv, captured);
        ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(file: u8, rank: u8) -> Square {
        Square::new(file, rank).unwrap()
    }

    fn count_by_kind(board: &Board, moves: &[Move], kind: PieceKind) -> usize {
        moves
            .iter()
            .filter(|m| board.get(m.from).unwrap().kind == kind)
            .count()
    }

    #[test]
    fn start_position_move_breakdown() {
        let board = Board::standard();
        let moves = board.legal_moves(Color::Red);
        assert_eq!(moves.len(), 44);
        assert_eq!(count_by_kind(&board, &moves, PieceKind::Rook), 4);
        assert_eq!(count_by_kind(&board, &moves, PieceKind::Horse), 4);
        assert_eq!(count_by_kind(&board, &moves, PieceKind::Elephant), 4);
        assert_eq!(count_by_kind(&board, &moves, PieceKind::Advisor), 2);
        assert_eq!(count_by_kind(&board, &moves, PieceKind::General), 1);
        assert_eq!(count_by_kind(&board, &moves, PieceKind::Cannon), 24);
        assert_eq!(count_by_kind(&board, &moves, PieceKind::Soldier), 5);
    }

    #[test]
    fn horse_leg_blocks() {
        let mut board = Board::empty();
        board.set(sq(4, 0), Some(Piece::new(Color::Red, PieceKind::General)));
        board.set(sq(3, 9), Some(Piece::new(Color::Black, PieceKind::General)));
        board.set(sq(1, 4), Some(Piece::new(Color::Red, PieceKind::Horse)));
        let mut moves = Vec::new();
        board.piece_moves(sq(1, 4), board.get(sq(1, 4)).unwrap(), &mut moves);
        assert_eq!(moves.len(), 6);
        board.set(sq(1, 5), Some(Piece::new(Color::Black, PieceKind::Soldier)));
        moves.clear();
        board.piece_moves(sq(1, 4), board.get(sq(1, 4)).unwrap(), &mut moves);
        assert_eq!(moves.len(), 4);
        assert!(!moves.iter().any(|m| m.to == sq(0, 6) || m.to == sq(2, 6)));
    }

    #[test]
    fn soldier_moves_sideways_only_after_river() {
        let mut board = Board::empty();
        board.set(sq(4, 0), Some(Piece::new(Color::Red, PieceKind::General)));
        board.set(sq(3, 9), Some(Piece::new(Color::Black, PieceKind::General)));
        let soldier = Piece::new(Color::Red, PieceKind::Soldier);
        board.set(sq(2, 4), Some(soldier));
        let mut moves = Vec::new();
        board.piece_moves(sq(2, 4), soldier, &mut moves);
        assert_eq!(
            moves,
            vec![Move {
                from: sq(2, 4),
                to: sq(2, 5)
            }]
        );
        board.set(sq(2, 4), None);
        board.set(sq(2, 5), Some(soldier));
        moves.clear();
        board.piece_moves(sq(2, 5), soldier, &mut moves);
        let targets: Vec<Square> = moves.iter().map(|m| m.to).collect();
        assert_eq!(targets, vec![sq(2, 6), sq(1, 5), sq(3, 5)]);
        // Last rank: no forward step, never backward.
        board.set(sq(2, 5), None);
        board.set(sq(0, 9), Some(soldier));
        moves.clear();
        board.piece_moves(sq(0, 9), soldier, &mut moves);
        assert_eq!(
            moves,
            vec![Move {
                from: sq(0, 9),
                to: sq(1, 9)
            }]
        );
    }

    #[test]
    fn elephant_eye_and_river() {
        let mut board = Board::empty();
        let elephant = Piece::new(Color::Red, PieceKind::Elephant);
        board.set(sq(2, 4), Some(elephant));
        let mut moves = Vec::new();
        board.piece_moves(sq(2, 4), elephant, &mut moves);
        let mut targets: Vec<Square> = moves.iter().map(|m| m.to).collect();
        targets.sort();
        assert_eq!(targets, vec![sq(0, 2), sq(4, 2)]);
        board.set(sq(3, 3), Some(Piece::new(Color::Black, PieceKind::Soldier)));
        moves.clear();
        board.piece_moves(sq(2, 4), elephant, &mut moves);
        assert_eq!(
            moves.iter().map(|m| m.to).collect::<Vec<_>>(),
            vec![sq(0, 2)]
        );
    }

    #[test]
    fn cannon_screen_rules() {
        let mut board = Board::empty();
        board.set(sq(4, 9), Some(Piece::new(Color::Black, PieceKind::General)));
        board.set(sq(3, 0), Some(Piece::new(Color::Red, PieceKind::General)));
        board.set(sq(4, 2), Some(Piece::new(Color::Red, PieceKind::Cannon)));
        assert!(!board.in_check(Color::Black));
        board.set(sq(4, 5), Some(Piece::new(Color::Red, PieceKind::Soldier)));
        assert!(board.in_check(Color::Black));
        board.set(sq(4, 6), Some(Piece::new(Color::Black, PieceKind::Soldier)));
        assert!(!board.in_check(Color::Black));
    }

    #[test]
    fn flying_general_excludes_file_change() {
        let mut board = Board::empty();
        board.set(sq(4, 0), Some(Piece::new(Color::Red, PieceKind::General)));
        board.set(sq(3, 9), Some(Piece::new(Color::Black, PieceKind::General)));
        let moves = board.legal_moves(Color::Red);
        assert!(!moves.contains(&Move {
            from: sq(4, 0),
            to: sq(3, 0)
        }));
        assert!(moves.contains(&Move {
            from: sq(4, 0),
            to: sq(5, 0)
        }));
        assert!(moves.contains(&Move {
            from: sq(4, 0),
            to: sq(4, 1)
        }));
    }
}
