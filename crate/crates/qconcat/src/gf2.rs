//! Exact GF(2) linear algebra on bit-packed carriers.
//!
//! Two matrix views exist: [`BitMatrix`] packs each row into 64-bit words and
//! backs the dense algebra (rank, restricted solving, row-space membership);
//! [`SparseBitMatrix`] lists the set columns of each row and backs the
//! message-passing decoders. Conversions are lossless and the two views of a
//! matrix agree entry for entry.
//!
//! Dimension mismatches are programmer errors and panic; recoverable outcomes
//! (no solution, malformed fixture text) are ordinary results. All indices are
//! 0-based, here and in every file format.

use std::fmt;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Parity of the AND of two equal-length word slices. Adds one unit per word
/// pair to `ops`; callers that do not track work pass a scratch counter.
#[inline]
fn dot_parity(a: &[u64], b: &[u64], ops: &mut u64) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0u64;
    for (x, y) in a.iter().zip(b) {
        acc ^= x & y;
    }
    *ops += a.len() as u64;
    acc.count_ones() % 2 == 1
}

// ============================================================================
// BitVector
// ============================================================================

/// Fixed-length vector over GF(2), packed least-significant-bit first.
/// Bits past `len` in the last word are kept zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a length-`len` vector with ones exactly at `support`.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = BitVector::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    /// Parses a 0/1 string such as `"1010101"`.
    pub fn from_str01(s: &str) -> Result<Self, TextError> {
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => {
                    return Err(TextError::BadDigit {
                        position: i,
                        found: other,
                    })
                }
            }
        }
        Ok(v)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w ^= o;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of set bits, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out.push(wi * WORD_BITS + b);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Callers must keep bits past `len` zero.
    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

// ============================================================================
// BitMatrix
// ============================================================================

/// Dense GF(2) matrix, one contiguous buffer, rows packed like [`BitVector`].
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    wpr: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let wpr = words_for(cols);
        BitMatrix {
            rows,
            cols,
            wpr,
            data: vec![0; rows * wpr],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from one 0/1 string per row.
    pub fn from_str_rows(rows: &[&str]) -> Result<Self, TextError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (r, s) in rows.iter().enumerate() {
            if s.len() != cols {
                return Err(TextError::RaggedRow { row: r });
            }
            for (c, ch) in s.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    other => {
                        return Err(TextError::BadDigit {
                            position: c,
                            found: other,
                        })
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[BitVector]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (r, v) in rows.iter().enumerate() {
            assert_eq!(v.len(), cols, "ragged rows");
            m.row_mut(r).copy_from_slice(v.words());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        (self.data[r * self.wpr + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        let mask = 1u64 << (c % WORD_BITS);
        let w = &mut self.data[r * self.wpr + c / WORD_BITS];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.wpr..(r + 1) * self.wpr]
    }

    #[inline]
    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.wpr..(r + 1) * self.wpr]
    }

    pub fn row_vector(&self, r: usize) -> BitVector {
        BitVector {
            words: self.row(r).to_vec(),
            len: self.cols,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// XORs row `src` into row `dst`. One op unit per word.
    fn xor_rows(&mut self, dst: usize, src: usize, ops: &mut u64) {
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * self.wpr);
            (&mut lo[dst * self.wpr..(dst + 1) * self.wpr], &hi[..self.wpr])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * self.wpr);
            (&mut hi[..self.wpr], &lo[src * self.wpr..(src + 1) * self.wpr] as &[u64])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
        *ops += self.wpr as u64;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.wpr {
            self.data.swap(a * self.wpr + w, b * self.wpr + w);
        }
    }

    pub fn mat_vec(&self, v: &BitVector) -> BitVector {
        let mut ops = 0u64;
        self.mat_vec_counted(v, &mut ops)
    }

    /// `result_i = XOR_j M[i,j] & v[j]`, counting one unit per word visited.
    pub fn mat_vec_counted(&self, v: &BitVector, ops: &mut u64) -> BitVector {
        assert_eq!(self.cols, v.len(), "mat_vec dimension mismatch");
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if dot_parity(self.row(r), v.words(), ops) {
                out.set(r, true);
            }
        }
        out
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row_vector(r).support() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// `self · otherᵀ`; rows(self) × rows(other). Packed rows make the
    /// row-by-row parity products the natural multiply.
    pub fn mul_transpose(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "mul_transpose dimension mismatch");
        let mut out = BitMatrix::zeros(self.rows, other.rows);
        let mut ops = 0u64;
        for i in 0..self.rows {
            for j in 0..other.rows {
                if dot_parity(self.row(i), other.row(j), &mut ops) {
                    out.set(i, j, true);
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.row_reduce().pivots.len()
    }

    /// Reduced row echelon form with lowest-index pivot columns.
    pub fn row_reduce(&self) -> Echelon {
        let mut m = self.clone();
        let mut ops = 0u64;
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut next_row = 0usize;
        for col in 0..m.cols {
            let Some(pivot) = (next_row..m.rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(next_row, pivot);
            for r in 0..m.rows {
                if r != next_row && m.get(r, col) {
                    m.xor_rows(r, next_row, &mut ops);
                }
            }
            pivots.push((next_row, col));
            next_row += 1;
            if next_row == m.rows {
                break;
            }
        }
        Echelon { mat: m, pivots }
    }

    /// True iff `v` is a GF(2) combination of the rows of `self`.
    pub fn in_row_space(&self, v: &BitVector) -> bool {
        assert_eq!(self.cols, v.len(), "in_row_space dimension mismatch");
        let ech = self.row_reduce();
        let mut rem = v.clone();
        for &(row, col) in &ech.pivots {
            if rem.get(col) {
                let mut words = ech.mat.row(row).to_vec();
                for (w, o) in rem.words.iter_mut().zip(&mut words) {
                    *w ^= *o;
                }
            }
        }
        rem.is_zero()
    }

    pub fn solve_restricted(&self, s: &BitVector, support: &[usize]) -> Option<RestrictedSolution> {
        let mut ops = 0u64;
        self.solve_restricted_counted(s, support, &mut ops)
    }

    /// Solves `M·x = s` with `x` constrained to zero outside `support`.
    ///
    /// Free variables of the restricted system are fixed to 0, making the
    /// returned solution deterministic. `undetermined` lists the support
    /// positions whose value is not pinned by the system, i.e. positions
    /// touched by some kernel vector of the restricted system; erasure
    /// decoding forwards exactly those as residual erasures. Returns `None`
    /// when the restricted system is inconsistent.
    pub fn solve_restricted_counted(
        &self,
        s: &BitVector,
        support: &[usize],
        ops: &mut u64,
    ) -> Option<RestrictedSolution> {
        assert_eq!(s.len(), self.rows, "syndrome length mismatch");
        assert!(
            support.windows(2).all(|w| w[0] < w[1]),
            "support must be sorted ascending and duplicate-free"
        );
        assert!(
            support.iter().all(|&c| c < self.cols),
            "support index out of range"
        );

        let width = support.len();
        // Restricted system with the syndrome as an extra augmented column.
        let mut a = BitMatrix::zeros(self.rows, width + 1);
        for (j, &c) in support.iter().enumerate() {
            for r in 0..self.rows {
                if self.get(r, c) {
                    a.set(r, j, true);
                }
            }
        }
        *ops += (self.rows * width) as u64;
        for r in 0..self.rows {
            if s.get(r) {
                a.set(r, width, true);
            }
        }

        // RREF over the coefficient columns only.
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut next_row = 0usize;
        for col in 0..width {
            let Some(pivot) = (next_row..a.rows).find(|&r| a.get(r, col)) else {
                continue;
            };
            a.swap_rows(next_row, pivot);
            for r in 0..a.rows {
                if r != next_row && a.get(r, col) {
                    a.xor_rows(r, next_row, ops);
                }
            }
            pivots.push((next_row, col));
            next_row += 1;
            if next_row == a.rows {
                break;
            }
        }

        // Inconsistent iff some zeroed-out row still demands syndrome 1.
        for r in pivots.len()..a.rows {
            if a.get(r, width) {
                return None;
            }
        }

        let rank = pivots.len();
        let free_vars = width - rank;
        let mut is_pivot_col = vec![false; width];
        for &(_, c) in &pivots {
            is_pivot_col[c] = true;
        }

        // With free variables pinned to 0, each pivot variable reads straight
        // off the augmented column of its RREF row.
        let mut x = BitVector::zeros(self.cols);
        for &(r, c) in &pivots {
            if a.get(r, width) {
                x.set(support[c], true);
            }
        }

        // A pivot position is undetermined iff its RREF row meets any free
        // column; every free position is undetermined by definition.
        let mut undetermined: Vec<usize> = Vec::new();
        for (j, &pos) in support.iter().enumerate() {
            if !is_pivot_col[j] {
                undetermined.push(pos);
            }
        }
        for &(r, c) in &pivots {
            let row_free = (0..width).any(|j| !is_pivot_col[j] && a.get(r, j));
            *ops += width as u64;
            if row_free {
                undetermined.push(support[c]);
            }
        }
        undetermined.sort_unstable();

        Some(RestrictedSolution {
            x,
            free_vars,
            undetermined,
        })
    }

    /// Emits the fixture text format: first line `rows cols`, then one 0/1
    /// string per row. Bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.cols + 1) * (self.rows + 1) + 16);
        out.push_str(&format!("{} {}\n", self.rows, self.cols));
        for r in 0..self.rows {
            out.push_str(&self.row_vector(r).to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(TextError::MissingHeader)?;
        let mut parts = header.split_whitespace();
        let rows: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(TextError::MissingHeader)?;
        let cols: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(TextError::MissingHeader)?;
        if parts.next().is_some() {
            return Err(TextError::MissingHeader);
        }
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines.next().ok_or(TextError::RowCount {
                expected: rows,
                found: r,
            })?;
            if line.len() != cols {
                return Err(TextError::RaggedRow { row: r });
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    other => {
                        return Err(TextError::BadDigit {
                            position: c,
                            found: other,
                        })
                    }
                }
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(TextError::RowCount {
                expected: rows,
                found: rows + 1,
            });
        }
        Ok(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row_vector(r))?;
        }
        Ok(())
    }
}

/// Row-reduced form plus `(row, col)` pivot pairs, ordered by column.
pub struct Echelon {
    pub mat: BitMatrix,
    pub pivots: Vec<(usize, usize)>,
}

/// Deterministic output of [`BitMatrix::solve_restricted`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedSolution {
    /// Full-width solution, zero outside the support, free variables zero.
    pub x: BitVector,
    /// Number of free variables of the restricted system.
    pub free_vars: usize,
    /// Support positions not uniquely determined by the system, ascending.
    pub undetermined: Vec<usize>,
}

// ============================================================================
// SparseBitMatrix
// ============================================================================

/// Row-indexed sparse view: each row lists its set columns ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBitMatrix {
    cols: usize,
    rows: Vec<Vec<u32>>,
}

impl SparseBitMatrix {
    pub fn from_dense(m: &BitMatrix) -> Self {
        SparseBitMatrix {
            cols: m.cols(),
            rows: (0..m.rows())
                .map(|r| m.row_vector(r).support().iter().map(|&c| c as u32).collect())
                .collect(),
        }
    }

    pub fn to_dense(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows.len(), self.cols);
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                m.set(r, c as usize, true);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    /// Syndrome-style multiply; one op unit per stored entry.
    pub fn mat_vec_counted(&self, v: &BitVector, ops: &mut u64) -> BitVector {
        assert_eq!(self.cols, v.len(), "mat_vec dimension mismatch");
        let mut out = BitVector::zeros(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = false;
            for &c in row {
                acc ^= v.get(c as usize);
            }
            *ops += row.len() as u64;
            if acc {
                out.set(r, true);
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &BitVector) -> BitVector {
        let mut ops = 0u64;
        self.mat_vec_counted(v, &mut ops)
    }
}

// ============================================================================
// Errors
// ============================================================================

/// Malformed fixture text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TextError {
    MissingHeader,
    RowCount { expected: usize, found: usize },
    RaggedRow { row: usize },
    BadDigit { position: usize, found: char },
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextError::MissingHeader => write!(f, "missing or malformed 'rows cols' header"),
            TextError::RowCount { expected, found } => {
                write!(f, "expected {expected} rows, found {found}")
            }
            TextError::RaggedRow { row } => write!(f, "row {row} has the wrong length"),
            TextError::BadDigit { position, found } => {
                write!(f, "expected 0/1 at position {position}, found {found:?}")
            }
        }
    }
}

impl std::error::Error for TextError {}

// ============================================================================
// Tests
// ============================================================================
