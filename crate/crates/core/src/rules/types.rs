use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Red,
    Black,
}

impl Color {
    pub const ALL: [Color; 2] = [Color::Red, Color::Black];

    #[inline]
    pub fn opponent(self) -> Color {
        match self {
            Color::Red => Color::Black,
            Color::Black => Color::Red,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Rank delta of a forward step.
    #[inline]
    pub fn forward(self) -> i8 {
        match self {
            Color::Red => 1,
            Color::Black => -1,
        }
    }

    /// True if `rank` lies on this color's half of the river.
    #[inline]
    pub fn owns_rank(self, rank: u8) -> bool {
        match self {
            Color::Red => rank <= 4,
            Color::Black => rank >= 5,
        }
    }

    /// Palace rank range for this color (inclusive).
    #[inline]
    pub fn palace_ranks(self) -> (u8, u8) {
        match self {
            Color::Red => (0, 2),
            Color::Black => (7, 9),
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Red => "red",
            Color::Black => "black",
        })
    }
}

/// Piece kinds, listed in plane-channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceKind {
    General,
    Advisor,
    Elephant,
    Horse,
    Rook,
    Cannon,
    Soldier,
}

impl PieceKind {
    pub const ALL: [PieceKind; 7] = [
        PieceKind::General,
        PieceKind::Advisor,
        PieceKind::Elephant,
        PieceKind::Horse,
        PieceKind::Rook,
        PieceKind::Cannon,
        PieceKind::Soldier,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Piece {
    pub color: Color,
    pub kind: PieceKind,
}

impl Piece {
    #[inline]
    pub const fn new(color: Color, kind: PieceKind) -> Self {
        Piece { color, kind }
    }

    /// Index in 0..14: Red kinds first, then Black kinds.
    #[inline]
    pub fn index(self) -> usize {
        self.color.index() * 7 + self.kind.index()
    }

    pub fn from_index(index: usize) -> Option<Piece> {
        if index >= 14 {
            return None;
        }
        let color = if index < 7 { Color::Red } else { Color::Black };
        Some(Piece::new(color, PieceKind::ALL[index % 7]))
    }
}

/// A board point. Rank-major: `index = rank * 9 + file`, rank 0 is Red's back rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square(u8);

impl Square {
    pub const COUNT: usize = 90;
    pub const FILES: u8 = 9;
    pub const RANKS: u8 = 10;

    #[inline]
    pub fn new(file: u8, rank: u8) -> Option<Square> {
        (file < Self::FILES && rank < Self::RANKS).then(|| Square(rank * Self::FILES + file))
    }

    #[inline]
    pub fn from_index(index: usize) -> Option<Square> {
        (index < Self::COUNT).then(|| Square(index as u8))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn file(self) -> u8 {
        self.0 % Self::FILES
    }

    #[inline]
    pub fn rank(self) -> u8 {
        self.0 / Self::FILES
    }

    #[inline]
    pub fn offset(self, files: i8, ranks: i8) -> Option<Square> {
        let f = self.file() as i8 + files;
        let r = self.rank() as i8 + ranks;
        if (0..9).contains(&f) && (0..10).contains(&r) {
            Some(Square(r as u8 * Self::FILES + f as u8))
        } else {
            None
        }
    }

    pub fn in_palace(self, color: Color) -> bool {
        let (lo, hi) = color.palace_ranks();
        (3..=5).contains(&self.file()) && (lo..=hi).contains(&self.rank())
    }

    pub fn all() -> impl Iterator<Item = Square> {
        (0..Self::COUNT as u8).map(Square)
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", (b'a' + self.file()) as char, self.rank())
    }
}

/// A move from one point to another; a capture is implied by the destination occupant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub from: Square,
    pub to: Square,
}

impl Move {
    /// Returns `None` when `from == to`.
    #[inline]
    pub fn new(from: Square, to: Square) -> Option<Move> {
        (from != to).then_some(Move { from, to })
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.from, self.to)
    }
}
