//! Rectangular lattices of ±1 spins with a first-order (four-neighbour)
//! free-boundary neighbourhood.
//!
//! Sites are indexed column-major: site `i` sits at row `i % rows`, column
//! `i / rows`, so the neighbours of an interior site are `i - rows`, `i - 1`,
//! `i + 1` and `i + rows`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Lattice dimensions, `rows × cols`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
}

impl Dims {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain(format!(
                "lattice dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Dims { rows, cols })
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        col * self.rows + row
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.rows, i / self.rows)
    }

    /// Number of first-order edges, `cols·(rows−1) + rows·(cols−1)`.
    pub fn edge_count(&self) -> usize {
        self.cols * (self.rows - 1) + self.rows * (self.cols - 1)
    }

    /// The smaller of the two dimensions.
    pub fn lag(&self) -> usize {
        self.rows.min(self.cols)
    }

    pub fn transposed(&self) -> Dims {
        Dims {
            rows: self.cols,
            cols: self.rows,
        }
    }

    /// First-order neighbours of site `i`, in increasing index order.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.sites() {
            return Err(Error::domain(format!(
                "site {i} out of range for a {}x{} lattice",
                self.rows, self.cols
            )));
        }
        let mut out = Vec::with_capacity(4);
        self.for_each_neighbor(i, |j| out.push(j));
        Ok(out)
    }

    #[inline]
    pub(crate) fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let (r, c) = self.coords(i);
        if c > 0 {
            f(i - self.rows);
        }
        if r > 0 {
            f(i - 1);
        }
        if r + 1 < self.rows {
            f(i + 1);
        }
        if c + 1 < self.cols {
            f(i + self.rows);
        }
    }
}

/// Autologistic parameters: `theta0` controls abundance, `theta1` interaction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelParams {
    pub theta0: f64,
    pub theta1: f64,
}

impl ModelParams {
    pub fn new(theta0: f64, theta1: f64) -> Result<Self> {
        if !theta0.is_finite() || !theta1.is_finite() {
            return Err(Error::domain("model parameters must be finite"));
        }
        Ok(ModelParams { theta0, theta1 })
    }

    /// Ising model: no abundance term.
    pub fn ising(theta1: f64) -> Self {
        ModelParams {
            theta0: 0.0,
            theta1,
        }
    }
}

/// `s0` is the spin sum, `s1` the sum of `y_i·y_j` over unordered neighbour
/// pairs, each edge counted once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SufficientStats {
    pub s0: i64,
    pub s1: i64,
}

impl SufficientStats {
    #[inline]
    pub fn dot(&self, theta: ModelParams) -> f64 {
        theta.theta0 * self.s0 as f64 + theta.theta1 * self.s1 as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    dims: Dims,
    spins: Vec<i8>,
}

impl Lattice {
    /// Builds a lattice from column-major spins.
    pub fn from_spins(rows: usize, cols: usize, spins: Vec<i8>) -> Result<Self> {
        let dims = Dims::new(rows, cols)?;
        if spins.len() != dims.sites() {
            return Err(Error::domain(format!(
                "expected {} spins for a {rows}x{cols} lattice, got {}",
                dims.sites(),
                spins.len()
            )));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::domain(format!("spin value {bad} is not -1 or +1")));
        }
        Ok(Lattice { dims, spins })
    }

    pub fn filled(rows: usize, cols: usize, spin: i8) -> Result<Self> {
        let dims = Dims::new(rows, cols)?;
        Lattice::from_spins(rows, cols, vec![spin; dims.sites()])
    }

    /// Builds a lattice from row-major nested rows, as they appear on disk.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let m = rows.len();
        let mp = rows.first().map_or(0, Vec::len);
        let dims = Dims::new(m, mp)?;
        if rows.iter().any(|r| r.len() != mp) {
            return Err(Error::domain("ragged rows"));
        }
        let mut spins = vec![0i8; dims.sites()];
        for (r, row) in rows.iter().enumerate() {
            for (c, &s) in row.iter().enumerate() {
                spins[dims.index(r, c)] = s;
            }
        }
        Lattice::from_spins(m, mp, spins)
    }

    /// Independent uniform ±1 spins.
    pub fn random<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        let dims = Dims::new(rows, cols)?;
        let spins = (0..dims.sites())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Ok(Lattice { dims, spins })
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.dims.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.dims.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    #[inline]
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.spins[i]
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> i8 {
        self.spins[self.dims.index(row, col)]
    }

    /// Sets site `i`; any non-positive value stores -1.
    #[inline]
    pub fn set(&mut self, i: usize, spin: i8) {
        self.spins[i] = if spin > 0 { 1 } else { -1 };
    }

    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        self.dims.neighbors(i)
    }

    /// Sum of the spins neighbouring site `i`.
    #[inline]
    pub fn neighbor_sum(&self, i: usize) -> i64 {
        let mut sum = 0i64;
        self.dims
            .for_each_neighbor(i, |j| sum += i64::from(self.spins[j]));
        sum
    }

    pub fn sufficient_statistics(&self) -> SufficientStats {
        let Dims { rows, cols } = self.dims;
        let s0 = self.spins.iter().map(|&s| i64::from(s)).sum();
        let mut s1 = 0i64;
        for c in 0..cols {
            for r in 0..rows {
                let i = self.dims.index(r, c);
                let y = i64::from(self.spins[i]);
                if r + 1 < rows {
                    s1 += y * i64::from(self.spins[i + 1]);
                }
                if c + 1 < cols {
                    s1 += y * i64::from(self.spins[i + rows]);
                }
            }
        }
        SufficientStats { s0, s1 }
    }

    /// Global spin flip `y → −y`.
    pub fn flipped(&self) -> Lattice {
        Lattice {
            dims: self.dims,
            spins: self.spins.iter().map(|&s| -s).collect(),
        }
    }

    pub fn transposed(&self) -> Lattice {
        let t = self.dims.transposed();
        let mut spins = vec![0i8; self.spins.len()];
        for (i, &s) in self.spins.iter().enumerate() {
            let (r, c) = self.dims.coords(i);
            spins[t.index(c, r)] = s;
        }
        Lattice { dims: t, spins }
    }

    /// One lattice row per line, entries separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * 3);
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                if c > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", self.at(r, c));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the plain-text lattice format: one row per line, whitespace
/// separated entries in {-1, 1}. Blank lines are ignored.
pub fn parse_lattice(text: &str) -> Result<Lattice> {
    let mut rows: Vec<Vec<i8>> = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| match tok {
                "1" | "+1" => Ok(1i8),
                "-1" => Ok(-1i8),
                _ => Err(Error::parse(
                    lineno,
                    format!("invalid spin {tok:?}, expected -1 or 1"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(
                    lineno,
                    format!("ragged row: expected {w} entries, found {}", row.len()),
                ));
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "empty lattice file"));
    }
    Lattice::from_rows(&rows)
}

pub fn read_lattice(path: impl AsRef<Path>) -> Result<Lattice> {
    let text = fs::read_to_string(path)?;
    parse_lattice(&text)
}

pub fn write_lattice(lat: &Lattice, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, lat.to_text())?;
    Ok(())
}

/// A contiguous `k × k` window of the lattice together with the sites
/// outside it that touch it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub top_row: usize,
    pub left_col: usize,
    pub size: usize,
    /// Block sites in column-major order within the block.
    pub index_set: Vec<usize>,
    /// Sorted sites outside the block adjacent to at least one block site.
    pub boundary_set: Vec<usize>,
}

impl Block {
    pub fn new(dims: Dims, top_row: usize, left_col: usize, size: usize) -> Result<Self> {
        if size == 0 || top_row + size > dims.rows || left_col + size > dims.cols {
            return Err(Error::domain(format!(
                "{size}x{size} block at ({top_row}, {left_col}) does not fit a {}x{} lattice",
                dims.rows, dims.cols
            )));
        }
        let mut index_set = Vec::with_capacity(size * size);
        for c in left_col..left_col + size {
            for r in top_row..top_row + size {
                index_set.push(dims.index(r, c));
            }
        }
        let mut boundary_set = Vec::with_capacity(4 * size);
        if left_col > 0 {
            boundary_set.extend((top_row..top_row + size).map(|r| dims.index(r, left_col - 1)));
        }
        for c in left_col..left_col + size {
            if top_row > 0 {
                boundary_set.push(dims.index(top_row - 1, c));
            }
            if top_row + size < dims.rows {
                boundary_set.push(dims.index(top_row + size, c));
            }
        }
        if left_col + size < dims.cols {
            boundary_set
                .extend((top_row..top_row + size).map(|r| dims.index(r, left_col + size)));
        }
        boundary_set.sort_unstable();
        Ok(Block {
            top_row,
            left_col,
            size,
            index_set,
            boundary_set,
        })
    }

    #[inline]
    pub fn contains(&self, dims: Dims, i: usize) -> bool {
        let (r, c) = dims.coords(i);
        (self.top_row..self.top_row + self.size).contains(&r)
            && (self.left_col..self.left_col + self.size).contains(&c)
    }

    /// The block covering the whole lattice, if it is square.
    pub fn whole(dims: Dims) -> Result<Self> {
        if dims.rows != dims.cols {
            return Err(Error::domain("whole-lattice block requires a square lattice"));
        }
        Block::new(dims, 0, 0, dims.rows)
    }
}

/// All `(rows−k+1)·(cols−k+1)` blocks of size `k`, in raster order
/// (top row first, left to right within a row).
pub fn enumerate_blocks(dims: Dims, k: usize) -> Result<Vec<Block>> {
    if k == 0 || k > dims.rows.min(dims.cols) {
        return Err(Error::domain(format!(
            "block size {k} must lie in 1..={} for a {}x{} lattice",
            dims.rows.min(dims.cols),
            dims.rows,
            dims.cols
        )));
    }
    let mut out = Vec::with_capacity((dims.rows - k + 1) * (dims.cols - k + 1));
    for top in 0..=dims.rows - k {
        for left in 0..=dims.cols - k {
            out.push(Block::new(dims, top, left, k)?);
        }
    }
    Ok(out)
}

/// Number of blocks kept when sampling `fraction` of `count` blocks.
pub fn selection_size(count: usize, fraction: f64) -> usize {
    // Guard against products like 0.1·10 landing a hair above an integer.
    let raw = (fraction * count as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(count)
}

/// Uniform sample without replacement of `⌈fraction·C⌉` blocks, returned in
/// the original (raster) order.
pub fn select_blocks(blocks: &[Block], fraction: f64, seed: u64) -> Result<Vec<Block>> {
    if blocks.is_empty() {
        return Err(Error::domain("cannot select from an empty block list"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::domain(format!(
            "block fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let keep = selection_size(blocks.len(), fraction);
    if keep == blocks.len() {
        return Ok(blocks.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, blocks.len(), keep).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| blocks[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(m: usize, n: usize) -> Dims {
        Dims::new(m, n).unwrap()
    }

    #[test]
    fn neighbors_center_and_corner() {
        let d = dims(3, 3);
        assert_eq!(d.neighbors(4).unwrap(), vec![1, 3, 5, 7]);
        assert_eq!(d.neighbors(0).unwrap(), vec![1, 3]);
        assert_eq!(d.neighbors(1).unwrap().len(), 3);
        assert!(matches!(d.neighbors(9), Err(Error::Domain(_))));
    }

    #[test]
    fn neighbor_relation_is_symmetric_on_16x16() {
        let d = dims(16, 16);
        let n = d.sites();
        let adj: Vec<Vec<usize>> = (0..n).map(|i| d.neighbors(i).unwrap()).collect();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(adj[i].contains(&j), adj[j].contains(&i), "{i} {j}");
            }
        }
    }

    #[test]
    fn neighbor_degree_sum_is_twice_edge_count() {
        for (m, n) in [(1, 1), (1, 5), (2, 7), (6, 4), (20, 20)] {
            let d = dims(m, n);
            let deg: usize = (0..d.sites()).map(|i| d.neighbors(i).unwrap().len()).sum();
            assert_eq!(deg, 2 * d.edge_count());
        }
    }

    #[test]
    fn stats_of_small_fixed_lattices() {
        let plus = Lattice::filled(2, 2, 1).unwrap();
        assert_eq!(plus.sufficient_statistics(), SufficientStats { s0: 4, s1: 4 });
        let checker = Lattice::from_rows(&[vec![1, -1], vec![-1, 1]]).unwrap();
        assert_eq!(checker.sufficient_statistics(), SufficientStats { s0: 0, s1: -4 });
    }

    #[test]
    fn index_roundtrips_coords() {
        let d = dims(5, 7);
        for i in 0..d.sites() {
            let (r, c) = d.coords(i);
            assert_eq!(d.index(r, c), i);
        }
        assert_eq!(d.index(2, 3), 3 * 5 + 2);
    }

    #[test]
    fn spins_must_be_plus_minus_one() {
        assert!(Lattice::from_spins(1, 2, vec![1, 0]).is_err());
        assert!(Lattice::from_spins(1, 2, vec![1]).is_err());
        assert!(Dims::new(0, 3).is_err());
    }

    #[test]
    fn block_counts() {
        assert_eq!(enumerate_blocks(dims(16, 16), 3).unwrap().len(), 196);
        assert_eq!(enumerate_blocks(dims(16, 16), 4).unwrap().len(), 169);
        let whole = enumerate_blocks(dims(4, 4), 4).unwrap();
        assert_eq!(whole.len(), 1);
        assert!(whole[0].boundary_set.is_empty());
        assert!(enumerate_blocks(dims(4, 6), 5).is_err());
        assert!(enumerate_blocks(dims(4, 6), 0).is_err());
    }

    #[test]
    fn blocks_cover_lattice() {
        let d = dims(5, 5);
        let blocks = enumerate_blocks(d, 2).unwrap();
        assert_eq!(blocks.len(), 16);
        let mut seen = vec![false; d.sites()];
        for b in &blocks {
            assert_eq!(b.index_set.len(), 4);
            for &i in &b.index_set {
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn block_boundary_is_exterior_and_adjacent() {
        let d = dims(7, 9);
        for k in 1..=7 {
            for b in enumerate_blocks(d, k).unwrap() {
                for &j in &b.boundary_set {
                    assert!(!b.index_set.contains(&j));
                    let nb = d.neighbors(j).unwrap();
                    assert!(nb.iter().any(|x| b.index_set.contains(x)));
                }
                // every exterior neighbour of a block site is on the boundary
                for &i in &b.index_set {
                    for j in d.neighbors(i).unwrap() {
                        if !b.index_set.contains(&j) {
                            assert!(b.boundary_set.contains(&j));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exhaustive_blocks_count_each_edge_by_window_multiplicity() {
        let d = dims(6, 8);
        let k = 3;
        let blocks = enumerate_blocks(d, k).unwrap();
        // vertical edge (r,c)-(r+1,c): windows with top in [r+1-k+1 .. r] ∩ range, left in [c-k+1 .. c]
        let windows = |lo: isize, hi: isize, max_start: usize| -> usize {
            let lo = lo.max(0);
            let hi = hi.min(max_start as isize);
            (hi - lo + 1).max(0) as usize
        };
        for c in 0..d.cols {
            for r in 0..d.rows - 1 {
                let (a, b) = (d.index(r, c), d.index(r + 1, c));
                let count = blocks
                    .iter()
                    .filter(|bl| bl.index_set.contains(&a) && bl.index_set.contains(&b))
                    .count();
                let expect = windows(r as isize + 2 - k as isize, r as isize, d.rows - k)
                    * windows(c as isize + 1 - k as isize, c as isize, d.cols - k);
                assert_eq!(count, expect);
            }
        }
    }

    #[test]
    fn selection_sizes_and_determinism() {
        let d = dims(16, 16);
        let b3 = enumerate_blocks(d, 3).unwrap();
        assert_eq!(select_blocks(&b3, 1.0, 7).unwrap(), b3);
        let b4 = enumerate_blocks(d, 4).unwrap();
        let s = select_blocks(&b4, 0.4, 11).unwrap();
        assert_eq!(s.len(), 68);
        let mut keys: Vec<_> = s.iter().map(|b| (b.top_row, b.left_col)).collect();
        keys.dedup();
        assert_eq!(keys.len(), 68);
        assert_eq!(select_blocks(&b4, 0.4, 11).unwrap(), s);
        assert_ne!(select_blocks(&b4, 0.4, 12).unwrap(), s);
        assert_eq!(selection_size(121, 0.1), 13);
        assert_eq!(selection_size(144, 0.2), 29);
        assert!(select_blocks(&b4, 0.0, 1).is_err());
        assert!(select_blocks(&b4, 1.5, 1).is_err());
        assert!(select_blocks(&[], 0.5, 1).is_err());
    }

    #[test]
    fn parse_checkerboard() {
        let lat = parse_lattice("1 -1\n-1 1\n").unwrap();
        assert_eq!(lat, Lattice::from_rows(&[vec![1, -1], vec![-1, 1]]).unwrap());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_lattice("0\n") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_lattice("1 1\n1 -1\n1\n") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_lattice(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_lattice("  \n\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_lattice("1 x\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn flip_and_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lat = Lattice::random(4, 6, &mut rng).unwrap();
        let s = lat.sufficient_statistics();
        let f = lat.flipped().sufficient_statistics();
        assert_eq!((f.s0, f.s1), (-s.s0, s.s1));
        let t = lat.transposed();
        assert_eq!(t.dims(), Dims { rows: 6, cols: 4 });
        assert_eq!(t.sufficient_statistics(), s);
        assert_eq!(t.transposed(), lat);
    }
}
