use crate::bits::BitArray;

/// Masked phase code: `rows x cols` cells with two bits each, laid out
/// `(row, col, phase-bit)` lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IrisCode {
    rows: usize,
    cols: usize,
    bits: BitArray,
    mask: BitArray,
}

impl IrisCode {
    pub const DEFAULT_ROWS: usize = 8;
    pub const DEFAULT_COLS: usize = 128;
    pub const BITS_PER_CELL: usize = 2;

    /// Returns `None` if either array length differs from `rows * cols * 2`.
    pub fn new(rows: usize, cols: usize, bits: BitArray, mask: BitArray) -> Option<Self> {
        let n = rows * cols * Self::BITS_PER_CELL;
        (bits.len() == n && mask.len() == n).then_some(Self {
            rows,
            cols,
            bits,
            mask,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &BitArray {
        &self.bits
    }

    pub fn mask(&self) -> &BitArray {
        &self.mask
    }

    pub fn valid_bits(&self) -> usize {
        self.mask.count_ones()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, phase: usize) -> usize {
        (row * self.cols + col) * Self::BITS_PER_CELL + phase
    }

    /// Circular column shift: with positive `s`, column `c` moves to `c + s`.
    pub fn shift_columns(&self, s: isize) -> IrisCode {
        let cols = self.cols as isize;
        let mut bits = BitArray::zeros(self.len());
        let mut mask = BitArray::zeros(self.len());
        for row in 0..self.rows {
            for col in 0..self.cols {
                let dst = (col as isize + s).rem_euclid(cols) as usize;
                for phase in 0..Self::BITS_PER_CELL {
                    let from = self.index(row, col, phase);
                    let to = self.index(row, dst, phase);
                    bits.set(to, self.bits.get(from));
                    mask.set(to, self.mask.get(from));
                }
            }
        }
        IrisCode {
            rows: self.rows,
            cols: self.cols,
            bits,
            mask,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves_columns_up() {
        let bits = BitArray::from_bools((0..2 * 3 * 2).map(|i| i == 0));
        let code = IrisCode::new(2, 3, bits, BitArray::ones(12)).unwrap();
        let s = code.shift_columns(1);
        assert!(s.bits().get(s.index(0, 1, 0)));
        assert_eq!(s.bits().count_ones(), 1);
        assert_eq!(code.shift_columns(-1).shift_columns(1), code);
        assert_eq!(code.shift_columns(3), code);
    }

    #[test]
    fn length_checked() {
        assert!(IrisCode::new(8, 128, BitArray::zeros(2048), BitArray::zeros(2048)).is_some());
        assert!(IrisCode::new(8, 128, BitArray::zeros(2047), BitArray::zeros(2048)).is_none());
    }
}
