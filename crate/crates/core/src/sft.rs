//! Subshift-of-finite-type combinatorics.
//!
//! The base dynamics is the two-sided shift on
//! `{ (x_n) : q_{x_n x_{n+1}} = 1 }` for a 0/1 transition matrix `Q`,
//! equipped with the metric `rho_tau(x, y) = exp(-tau * N(x, y))` where
//! `N(x, y)` is the radius of the largest central window on which the two
//! sequences agree.
//!
//! Points are represented as *eventually periodic* sequences: a left cycle
//! repeated toward -inf, a finite core, and a right cycle repeated toward
//! +inf. These points are dense, closed under the shift and the bracket,
//! carry every periodic orbit, and admit exact distance computation, which
//! is what the rest of the crate needs. Each [`SymbolicPoint`] is kept in a
//! canonical form (primitive cycles, maximal periodic tails, deterministic
//! anchor) so that equality of points is plain structural equality.

use rand::Rng;

use crate::error::{Error, Result};

/// Alphabet symbol, 1-based as in the transition matrix indexing.
pub type Symbol = u16;

/// A subshift of finite type: alphabet size, 0/1 transition matrix, and the
/// metric parameter `tau > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sft {
    alphabet: usize,
    /// Row-major `alphabet x alphabet` adjacency, `transitions[i][j]` for the
    /// 0-based pair: symbol i+1 may be followed by symbol j+1.
    transitions: Vec<bool>,
    tau: f64,
}

impl Sft {
    /// Builds a subshift from 0/1 transition rows.
    ///
    /// Every row and every column must contain at least one 1 (no stranded
    /// symbols), and `tau` must be positive.
    pub fn new(rows: &[Vec<u8>], tau: f64) -> Result<Self> {
        let l = rows.len();
        if l == 0 {
            return Err(Error::InvalidInput("alphabet must be nonempty".into()));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
        }
        let mut transitions = vec![false; l * l];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != l {
                return Err(Error::InvalidInput(format!(
                    "transition row {} has length {}, expected {}",
                    i + 1,
                    row.len(),
                    l
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => transitions[i * l + j] = true,
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "transition entry ({},{}) must be 0 or 1, got {v}",
                            i + 1,
                            j + 1
                        )))
                    }
                }
            }
        }
        for i in 0..l {
            if !(0..l).any(|j| transitions[i * l + j]) {
                return Err(Error::InvalidInput(format!("symbol {} has no successor", i + 1)));
            }
            if !(0..l).any(|j| transitions[j * l + i]) {
                return Err(Error::InvalidInput(format!("symbol {} has no predecessor", i + 1)));
            }
        }
        Ok(Self { alphabet: l, transitions, tau })
    }

    /// Number of symbols in the alphabet.
    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    /// The metric parameter.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same subshift with a different metric parameter. Holder regularity
    /// with respect to `rho_tau` is Lipschitz regularity with respect to a
    /// rescaled metric, so `tau` is kept as a free parameter.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { tau, ..self.clone() })
    }

    /// Whether symbol `a` may be followed by symbol `b` (both 1-based).
    pub fn allowed(&self, a: Symbol, b: Symbol) -> bool {
        let (a, b) = (a as usize, b as usize);
        a >= 1 && b >= 1 && a <= self.alphabet && b <= self.alphabet
            && self.transitions[(a - 1) * self.alphabet + (b - 1)]
    }

    /// Iterates the alphabet `1..=l`.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (1..=self.alphabet as Symbol).into_iter()
    }

    /// Checks that consecutive symbols are all admissible.
    pub fn is_valid_word(&self, symbols: &[Symbol]) -> bool {
        symbols.iter().all(|&s| s >= 1 && (s as usize) <= self.alphabet)
            && symbols.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    /// Checks a cyclic word: all transitions valid including the wrap-around.
    pub fn is_valid_cycle(&self, symbols: &[Symbol]) -> bool {
        !symbols.is_empty()
            && self.is_valid_word(symbols)
            && self.allowed(symbols[symbols.len() - 1], symbols[0])
    }

    /// All valid words of the given length, in lexicographic order.
    pub fn enumerate_words(&self, len: usize) -> Result<Vec<Vec<Symbol>>> {
        self.enumerate_words_capped(len, 5_000_000)
    }

    /// As [`Self::enumerate_words`] with an explicit size guard.
    pub fn enumerate_words_capped(&self, len: usize, cap: usize) -> Result<Vec<Vec<Symbol>>> {
        if len == 0 {
            return Err(Error::InvalidInput("word length must be >= 1".into()));
        }
        let mut out = Vec::new();
        let mut stack: Vec<Symbol> = Vec::with_capacity(len);
        self.words_dfs(len, cap, &mut stack, &mut out)?;
        Ok(out)
    }

    fn words_dfs(
        &self,
        len: usize,
        cap: usize,
        stack: &mut Vec<Symbol>,
        out: &mut Vec<Vec<Symbol>>,
    ) -> Result<()> {
        if stack.len() == len {
            if out.len() >= cap {
                return Err(Error::TooManyWords { count: out.len() + 1, limit: cap });
            }
            out.push(stack.clone());
            return Ok(());
        }
        for s in self.symbols() {
            if stack.last().is_none_or(|&p| self.allowed(p, s)) {
                stack.push(s);
                self.words_dfs(len, cap, stack, out)?;
                stack.pop();
            }
        }
        Ok(())
    }

    /// The metric `rho_tau(x, y) = exp(-tau N(x, y))`, with `N(x, y)` the
    /// largest `N >= 0` such that `x_n = y_n` for all `|n| < N`. Returns 0
    /// for equal points. Exact for eventually periodic points: the first
    /// disagreement, if any, occurs within a window determined by the core
    /// extents and the least common multiple of the cycle lengths.
    pub fn rho_distance(&self, x: &SymbolicPoint, y: &SymbolicPoint) -> f64 {
        match agreement_radius(x, y) {
            None => 0.0,
            Some(n) => (-self.tau * n as f64).exp(),
        }
    }

    /// All points with `f^k(x) = x`: one per valid cyclic word of length `k`.
    /// The count equals `trace(Q^k)`.
    pub fn enumerate_periodic(&self, k: usize) -> Result<Vec<SymbolicPoint>> {
        if k == 0 {
            return Err(Error::InvalidInput("period must be >= 1".into()));
        }
        let mut out = Vec::new();
        let mut stack: Vec<Symbol> = Vec::with_capacity(k);
        self.cycles_dfs(k, &mut stack, &mut out);
        Ok(out)
    }

    fn cycles_dfs(&self, k: usize, stack: &mut Vec<Symbol>, out: &mut Vec<SymbolicPoint>) {
        if stack.len() == k {
            if self.allowed(stack[k - 1], stack[0]) {
                out.push(SymbolicPoint::from_cycle_unchecked(stack));
            }
            return;
        }
        for s in self.symbols() {
            if stack.last().is_none_or(|&p| self.allowed(p, s)) {
                stack.push(s);
                self.cycles_dfs(k, stack, out);
                stack.pop();
            }
        }
    }

    /// The lexicographically smallest valid word `w_0 ... w_n` with
    /// `w_0 = a`, `w_n = b` (so `n` edges), or [`Error::NoPath`].
    pub fn connecting_word(&self, a: Symbol, b: Symbol, n: usize) -> Result<Word> {
        let l = self.alphabet;
        if l > 128 {
            return Err(Error::InvalidInput("alphabets larger than 128 are unsupported".into()));
        }
        if a < 1 || a as usize > l || b < 1 || b as usize > l {
            return Err(Error::InvalidInput(format!("symbols out of range: {a}, {b}")));
        }
        // successor masks; bit j set in row i <=> transition (i+1) -> (j+1)
        let rows: Vec<u128> = (0..l)
            .map(|i| (0..l).fold(0u128, |m, j| m | ((self.transitions[i * l + j] as u128) << j)))
            .collect();
        // reach[t] bit v: symbol v+1 reaches b in exactly t steps
        let mut reach = vec![0u128; n + 1];
        reach[0] = 1u128 << (b - 1);
        for t in 1..=n {
            let prev = reach[t - 1];
            reach[t] = (0..l).fold(0u128, |m, i| m | (((rows[i] & prev != 0) as u128) << i));
        }
        if reach[n] & (1u128 << (a - 1)) == 0 {
            return Err(Error::NoPath { from: a, to: b, length: n });
        }
        let mut symbols = Vec::with_capacity(n + 1);
        symbols.push(a);
        let mut cur = a;
        for t in (0..n).rev() {
            let choices = rows[(cur - 1) as usize] & reach[t];
            debug_assert!(choices != 0);
            let next = choices.trailing_zeros() as Symbol + 1;
            symbols.push(next);
            cur = next;
        }
        Ok(Word { symbols, start: 0 })
    }

    /// The smallest `M` with `Q^M` entrywise positive, searched up to the
    /// Wielandt bound `l^2`; `None` when the subshift is not topologically
    /// mixing.
    pub fn mixing_index(&self) -> Option<usize> {
        let l = self.alphabet;
        if l > 128 {
            // boolean-power fallback is cheap enough not to need bitsets here,
            // but alphabets this large are rejected elsewhere anyway
            return None;
        }
        let rows: Vec<u128> = (0..l)
            .map(|i| (0..l).fold(0u128, |m, j| m | ((self.transitions[i * l + j] as u128) << j)))
            .collect();
        let full: u128 = if l == 128 { !0 } else { (1u128 << l) - 1 };
        let mut power = rows.clone();
        for m in 1..=l * l {
            if power.iter().all(|&r| r == full) {
                return Some(m);
            }
            // power <- power * Q (boolean)
            let next: Vec<u128> = (0..l)
                .map(|i| (0..l).filter(|&j| power[i] >> j & 1 == 1).fold(0u128, |acc, j| acc | rows[j]))
                .collect();
            power = next;
        }
        if power.iter().all(|&r| r == full) {
            return Some(l * l);
        }
        None
    }

    /// A uniformly random periodic point with period at most `max_period`.
    pub fn random_periodic_point<R: Rng>(&self, max_period: usize, rng: &mut R) -> SymbolicPoint {
        for _ in 0..4000 {
            let k = rng.gen_range(1..=max_period.max(1));
            if let Some(p) = self.try_random_cycle(k, rng) {
                return p;
            }
        }
        // Every no-stranded-symbols SFT has a cycle of length <= alphabet.
        for k in 1..=self.alphabet {
            if let Ok(points) = self.enumerate_periodic(k) {
                if let Some(p) = points.into_iter().next() {
                    return p;
                }
            }
        }
        unreachable!("subshift invariants guarantee a periodic point")
    }

    fn try_random_cycle<R: Rng>(&self, k: usize, rng: &mut R) -> Option<SymbolicPoint> {
        'attempt: for _ in 0..64 {
            let mut w = Vec::with_capacity(k);
            w.push(rng.gen_range(1..=self.alphabet as Symbol));
            for _ in 1..k {
                let prev = *w.last().unwrap();
                let choices: Vec<Symbol> =
                    self.symbols().filter(|&s| self.allowed(prev, s)).collect();
                if choices.is_empty() {
                    continue 'attempt;
                }
                w.push(choices[rng.gen_range(0..choices.len())]);
            }
            if self.allowed(w[k - 1], w[0]) {
                return Some(SymbolicPoint::from_cycle_unchecked(&w));
            }
        }
        None
    }

    /// A random eventually periodic point: random left and right cycles glued
    /// by a connector through the mixing structure. Requires a mixing shift.
    pub fn random_point<R: Rng>(&self, max_period: usize, rng: &mut R) -> Result<SymbolicPoint> {
        let m = self.mixing_index().ok_or(Error::NotMixing)?;
        let pl = self.random_periodic_point(max_period, rng);
        let pr = self.random_periodic_point(max_period, rng);
        let cl = pl.right_cycle().to_vec();
        let cr = pr.right_cycle().to_vec();
        let n = m + rng.gen_range(0..=max_period);
        let conn = self.connecting_word(cl[0], cr[0], n)?;
        // Core = connector minus its final symbol; the right cycle supplies it.
        let core = conn.symbols()[..n].to_vec();
        let core_start = rng.gen_range(-8..=8);
        SymbolicPoint::new(self, cl, core, cr, core_start)
    }
}

/// A finite valid word together with the coordinate of its first symbol,
/// specifying the cylinder `[start; w_0, ..., w_k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<Symbol>,
    start: i64,
}

impl Word {
    /// Validates transitions against the subshift.
    pub fn checked(sft: &Sft, symbols: Vec<Symbol>, start: i64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidInput("word must be nonempty".into()));
        }
        if !sft.is_valid_word(&symbols) {
            return Err(Error::InvalidInput(format!("word {symbols:?} has a forbidden transition")));
        }
        Ok(Self { symbols, start })
    }

    pub(crate) fn unchecked(symbols: Vec<Symbol>, start: i64) -> Self {
        Self { symbols, start }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn start_index(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// An eventually periodic two-sided sequence in canonical form.
///
/// Layout: coordinates below `core_start` follow `left` (cyclically, aligned
/// so that `left[0]` would sit at `core_start`), the core occupies
/// `[core_start, core_start + core.len())`, and coordinates from the core end
/// onward follow `right` (aligned so `right[0]` sits at the core end).
///
/// Canonical form: both cycles are primitive, the right-periodic tail is
/// maximal (its start is minimal), the left-periodic tail is maximal given
/// that, and fully periodic points store the lexicographically least rotation
/// of their primitive cycle with the anchor in `[0, period)`. Equality of
/// canonical forms is equality of points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicPoint {
    left: Vec<Symbol>,
    core: Vec<Symbol>,
    right: Vec<Symbol>,
    core_start: i64,
}

fn raw_at(left: &[Symbol], core: &[Symbol], right: &[Symbol], core_start: i64, n: i64) -> Symbol {
    let core_end = core_start + core.len() as i64;
    if n < core_start {
        left[(n - core_start).rem_euclid(left.len() as i64) as usize]
    } else if n < core_end {
        core[(n - core_start) as usize]
    } else {
        right[(n - core_end).rem_euclid(right.len() as i64) as usize]
    }
}

/// Smallest period of `w` as a cyclic word.
fn primitive_root(w: &[Symbol]) -> Vec<Symbol> {
    let n = w.len();
    for p in 1..=n {
        if n % p == 0 && (0..n).all(|i| w[i] == w[i % p]) {
            return w[..p].to_vec();
        }
    }
    unreachable!()
}

/// Lexicographically least rotation and its index: `rotate_left(w, idx)` is
/// minimal among all rotations.
fn least_rotation(w: &[Symbol]) -> (Vec<Symbol>, usize) {
    let n = w.len();
    let mut best = 0usize;
    for cand in 1..n {
        for k in 0..n {
            let a = w[(cand + k) % n];
            let b = w[(best + k) % n];
            if a != b {
                if a < b {
                    best = cand;
                }
                break;
            }
        }
    }
    let rotated: Vec<Symbol> = (0..n).map(|k| w[(best + k) % n]).collect();
    (rotated, best)
}

fn canonicalize(
    left: &[Symbol],
    core: &[Symbol],
    right: &[Symbol],
    core_start: i64,
) -> (Vec<Symbol>, Vec<Symbol>, Vec<Symbol>, i64) {
    let left = primitive_root(left);
    let right = primitive_root(right);
    let l_len = left.len() as i64;
    let r_len = right.len() as i64;
    let core_end = core_start + core.len() as i64;
    let at = |n: i64| raw_at(&left, core, &right, core_start, n);

    // Fully periodic <=> the whole sequence is right-cycle periodic; below
    // core_start - r_len the test repeats with period l_len, so one window
    // of length l_len there decides the rest.
    let fully = ((core_start - r_len - l_len)..core_end).all(|n| at(n) == at(n + r_len));
    if fully {
        let w: Vec<Symbol> = (0..r_len).map(&at).collect();
        let mut p = r_len as usize;
        for cand in 1..=r_len as usize {
            if r_len as usize % cand == 0
                && (0..r_len as usize).all(|i| w[i] == w[(i + cand) % r_len as usize])
            {
                p = cand;
                break;
            }
        }
        let (u, rot) = least_rotation(&w[..p]);
        return (u.clone(), Vec::new(), u, rot as i64 % p as i64);
    }

    // Minimal start of the purely right-periodic tail.
    let floor = core_start - r_len - l_len;
    let mut r_bound = core_end;
    while r_bound > floor && at(r_bound - 1) == at(r_bound - 1 + r_len) {
        r_bound -= 1;
    }
    debug_assert!(r_bound > floor, "non-periodic point walked past its periodicity floor");

    // Maximal end of the purely left-periodic tail, capped at r_bound.
    let mut l_bound = core_start.min(r_bound);
    while l_bound < r_bound && at(l_bound) == at(l_bound - l_len) {
        l_bound += 1;
    }

    let new_left: Vec<Symbol> = ((l_bound - l_len)..l_bound).map(&at).collect();
    let new_core: Vec<Symbol> = (l_bound..r_bound).map(&at).collect();
    let new_right: Vec<Symbol> = (r_bound..(r_bound + r_len)).map(&at).collect();
    (new_left, new_core, new_right, l_bound)
}

impl SymbolicPoint {
    /// Builds and canonicalizes a point, validating every transition: within
    /// both cycles (including wrap-around), within the core, and across the
    /// two seams.
    pub fn new(
        sft: &Sft,
        left: Vec<Symbol>,
        core: Vec<Symbol>,
        right: Vec<Symbol>,
        core_start: i64,
    ) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidInput("cycles must be nonempty".into()));
        }
        if !sft.is_valid_cycle(&left) {
            return Err(Error::InvalidInput(format!("left cycle {left:?} is not transition-valid")));
        }
        if !sft.is_valid_cycle(&right) {
            return Err(Error::InvalidInput(format!("right cycle {right:?} is not transition-valid")));
        }
        let core_end = core_start + core.len() as i64;
        for n in (core_start - 1)..core_end {
            let a = raw_at(&left, &core, &right, core_start, n);
            let b = raw_at(&left, &core, &right, core_start, n + 1);
            if !sft.allowed(a, b) {
                return Err(Error::InvalidInput(format!(
                    "forbidden transition {a} -> {b} at coordinate {n}"
                )));
            }
        }
        Ok(Self::from_parts_unchecked(&left, &core, &right, core_start))
    }

    /// The periodic point `x_n = cycle[n mod k]` (anchor at coordinate 0).
    pub fn periodic(sft: &Sft, cycle: &[Symbol]) -> Result<Self> {
        if !sft.is_valid_cycle(cycle) {
            return Err(Error::InvalidInput(format!("cycle {cycle:?} is not transition-valid")));
        }
        Ok(Self::from_cycle_unchecked(cycle))
    }

    fn from_cycle_unchecked(cycle: &[Symbol]) -> Self {
        Self::from_parts_unchecked(cycle, &[], cycle, 0)
    }

    pub(crate) fn from_parts_unchecked(
        left: &[Symbol],
        core: &[Symbol],
        right: &[Symbol],
        core_start: i64,
    ) -> Self {
        let (left, core, right, core_start) = canonicalize(left, core, right, core_start);
        Self { left, core, right, core_start }
    }

    /// The symbol at coordinate `n`.
    pub fn symbol_at(&self, n: i64) -> Symbol {
        raw_at(&self.left, &self.core, &self.right, self.core_start, n)
    }

    /// Symbols on the coordinate window `lo..=hi`.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<Symbol> {
        (lo..=hi).map(|n| self.symbol_at(n)).collect()
    }

    /// Fills `buf` with symbols starting at coordinate `lo`.
    pub fn fill_window(&self, lo: i64, buf: &mut [Symbol]) {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = self.symbol_at(lo + k as i64);
        }
    }

    pub fn left_cycle(&self) -> &[Symbol] {
        &self.left
    }

    pub fn right_cycle(&self) -> &[Symbol] {
        &self.right
    }

    pub fn core(&self) -> &[Symbol] {
        &self.core
    }

    pub fn core_start(&self) -> i64 {
        self.core_start
    }

    pub fn core_end(&self) -> i64 {
        self.core_start + self.core.len() as i64
    }

    /// `f^n(x)`, with `f^n(x)_j = x_{j+n}`.
    pub fn shifted(&self, n: i64) -> Self {
        Self::from_parts_unchecked(&self.left, &self.core, &self.right, self.core_start - n)
    }

    /// Primitive period when the point is fully periodic, `None` otherwise.
    pub fn period(&self) -> Option<usize> {
        (self.core.is_empty() && self.left == self.right).then_some(self.right.len())
    }

    /// Whether `f^k(x) = x`.
    pub fn is_fixed_by(&self, k: usize) -> bool {
        self.period().is_some_and(|p| k % p == 0)
    }

    /// One period of a fully periodic point read off from coordinate 0.
    pub fn periodic_word(&self) -> Option<Vec<Symbol>> {
        self.period().map(|p| self.window(0, p as i64 - 1))
    }
}

/// `N(x, y)`: the largest `N >= 0` with `x_n = y_n` for all `|n| < N`;
/// `None` encodes `N = infinity` (equal points).
pub fn agreement_radius(x: &SymbolicPoint, y: &SymbolicPoint) -> Option<i64> {
    if x == y {
        return None;
    }
    let lcm_r = lcm(x.right.len(), y.right.len()) as i64;
    let lcm_l = lcm(x.left.len(), y.left.len()) as i64;
    let hi = x.core_end().max(y.core_end()) + lcm_r;
    let lo = x.core_start.min(y.core_start) - lcm_l;
    let bound = hi.max(-lo).max(1);
    for k in 0..=bound {
        if x.symbol_at(k) != y.symbol_at(k) || x.symbol_at(-k) != y.symbol_at(-k) {
            return Some(k);
        }
    }
    // Agreement on the full decisive window means the points are equal, which
    // canonical-form equality already ruled out.
    unreachable!("canonical forms differ but sequences agree everywhere")
}

/// Whether `y` is in the local stable set of `x` (agreement on `n >= 0`).
pub fn on_same_stable_set(x: &SymbolicPoint, y: &SymbolicPoint) -> bool {
    let hi = x.core_end().max(y.core_end()) + lcm(x.right.len(), y.right.len()) as i64;
    (0..=hi.max(1)).all(|n| x.symbol_at(n) == y.symbol_at(n))
}

/// Whether `y` is in the local unstable set of `x` (agreement on `n <= 0`).
pub fn on_same_unstable_set(x: &SymbolicPoint, y: &SymbolicPoint) -> bool {
    let lo = x.core_start.min(y.core_start) - lcm(x.left.len(), y.left.len()) as i64;
    (lo.min(-1)..=0).all(|n| x.symbol_at(n) == y.symbol_at(n))
}

/// The bracket `[x, y]`: the unique point of `W^u_loc(x) ∩ W^s_loc(y)`,
/// i.e. `z_n = x_n` for `n <= 0` and `z_n = y_n` for `n >= 0`. Requires
/// `x_0 = y_0`.
pub fn bracket(x: &SymbolicPoint, y: &SymbolicPoint) -> Result<SymbolicPoint> {
    let (x0, y0) = (x.symbol_at(0), y.symbol_at(0));
    if x0 != y0 {
        return Err(Error::MismatchedCylinder { x0, y0 });
    }
    let a = x.core_start.min(0);
    let b = y.core_end().max(0);
    let l_len = x.left.len() as i64;
    let left: Vec<Symbol> = ((a - l_len)..a).map(|n| x.symbol_at(n)).collect();
    let core: Vec<Symbol> =
        (a..0).map(|n| x.symbol_at(n)).chain((0..b).map(|n| y.symbol_at(n))).collect();
    let right: Vec<Symbol> = (b..(b + y.right.len() as i64)).map(|n| y.symbol_at(n)).collect();
    Ok(SymbolicPoint::from_parts_unchecked(&left, &core, &right, a))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn full_shift_2() -> Sft {
        Sft::new(&[vec![1, 1], vec![1, 1]], 1.0).unwrap()
    }

    pub(crate) fn golden_mean() -> Sft {
        Sft::new(&[vec![1, 1], vec![1, 0]], 1.0).unwrap()
    }

    fn period_two() -> Sft {
        Sft::new(&[vec![0, 1], vec![1, 0]], 1.0).unwrap()
    }

    /// Independent oracle: trace of Q^k over u128.
    fn trace_pow(rows: &[Vec<u8>], k: usize) -> u128 {
        let l = rows.len();
        let mut m = vec![vec![0u128; l]; l];
        for i in 0..l {
            m[i][i] = 1;
        }
        for _ in 0..k {
            let mut next = vec![vec![0u128; l]; l];
            for i in 0..l {
                for j in 0..l {
                    for t in 0..l {
                        next[i][j] += m[i][t] * rows[t][j] as u128;
                    }
                }
            }
            m = next;
        }
        (0..l).map(|i| m[i][i]).sum()
    }

    #[test]
    fn rejects_stranded_symbols() {
        assert!(Sft::new(&[vec![1, 0], vec![1, 0]], 1.0).is_err());
        assert!(Sft::new(&[vec![1, 1], vec![0, 0]], 1.0).is_err());
        assert!(Sft::new(&[vec![1, 1], vec![1, 1]], 0.0).is_err());
    }

    #[test]
    fn shift_of_fixed_point() {
        let sft = full_shift_2();
        let p = SymbolicPoint::periodic(&sft, &[1]).unwrap();
        assert_eq!(p.shifted(5), p);
    }

    #[test]
    fn shift_rotates_cycle() {
        let sft = full_shift_2();
        let p = SymbolicPoint::periodic(&sft, &[1, 2]).unwrap();
        let q = p.shifted(1);
        assert_eq!(q.symbol_at(0), 2);
        assert_eq!(q.symbol_at(1), 1);
        assert_eq!(q, SymbolicPoint::periodic(&sft, &[2, 1]).unwrap());
        assert_ne!(p, q);
    }

    #[test]
    fn shift_composes_to_identity() {
        let sft = golden_mean();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = sft.random_point(4, &mut rng).unwrap();
            assert_eq!(x.shifted(3).shifted(-3), x);
        }
    }

    #[test]
    fn rho_examples() {
        let sft = full_shift_2();
        let x = SymbolicPoint::periodic(&sft, &[1]).unwrap();
        assert_eq!(sft.rho_distance(&x, &x), 0.0);

        // y_n = 1 for |n| < 2, y_2 = 2, elsewhere 2 on the right.
        let y = SymbolicPoint::new(&sft, vec![1], vec![1, 1, 1], vec![2], -1).unwrap();
        assert!((sft.rho_distance(&x, &y) - (-2.0f64).exp()).abs() < 1e-15);

        let z = SymbolicPoint::periodic(&sft, &[2]).unwrap();
        assert_eq!(sft.rho_distance(&x, &z), 1.0);
    }

    #[test]
    fn bracket_examples() {
        let sft = full_shift_2();
        let x = SymbolicPoint::periodic(&sft, &[1]).unwrap();
        assert_eq!(bracket(&x, &x).unwrap(), x);

        // y = ...222 1 222... with y_0 = 1
        let y = SymbolicPoint::new(&sft, vec![2], vec![1], vec![2], 0).unwrap();
        let z = bracket(&x, &y).unwrap();
        assert_eq!(z.symbol_at(-3), 1);
        assert_eq!(z.symbol_at(0), 1);
        assert_eq!(z.symbol_at(2), 2);
        assert_eq!(z, SymbolicPoint::new(&sft, vec![1], vec![1], vec![2], 0).unwrap());

        let w = SymbolicPoint::periodic(&sft, &[2]).unwrap();
        assert!(matches!(bracket(&x, &w), Err(Error::MismatchedCylinder { .. })));
    }

    #[test]
    fn enumerate_periodic_counts_match_trace() {
        let cases = [
            (full_shift_2(), vec![vec![1u8, 1], vec![1, 1]]),
            (golden_mean(), vec![vec![1u8, 1], vec![1, 0]]),
            (period_two(), vec![vec![0u8, 1], vec![1, 0]]),
        ];
        for (sft, rows) in &cases {
            for k in 1..=12 {
                let pts = sft.enumerate_periodic(k).unwrap();
                assert_eq!(pts.len() as u128, trace_pow(rows, k), "k = {k}");
                // all distinct and all k-periodic
                let set: std::collections::BTreeSet<_> = pts.iter().cloned().collect();
                assert_eq!(set.len(), pts.len());
                for p in &pts {
                    assert!(p.is_fixed_by(k));
                    assert_eq!(p.shifted(k as i64), *p);
                }
            }
        }
    }

    #[test]
    fn golden_mean_small_periods() {
        let sft = golden_mean();
        let p1 = sft.enumerate_periodic(1).unwrap();
        assert_eq!(p1.len(), 1);
        assert_eq!(p1[0], SymbolicPoint::periodic(&sft, &[1]).unwrap());
        let p2 = sft.enumerate_periodic(2).unwrap();
        assert_eq!(p2.len(), 3);
    }

    #[test]
    fn connecting_word_examples() {
        let full = full_shift_2();
        let w = full.connecting_word(1, 2, 1).unwrap();
        assert_eq!(w.symbols(), &[1, 2]);

        let golden = golden_mean();
        let w = golden.connecting_word(2, 2, 2).unwrap();
        assert_eq!(w.symbols(), &[2, 1, 2]);
        assert!(matches!(golden.connecting_word(2, 2, 1), Err(Error::NoPath { .. })));
    }

    #[test]
    fn connecting_word_is_valid_and_lex_least() {
        let sft = golden_mean();
        for n in 1..=9 {
            for a in sft.symbols() {
                for b in sft.symbols() {
                    match sft.connecting_word(a, b, n) {
                        Ok(w) => {
                            assert!(sft.is_valid_word(w.symbols()));
                            assert_eq!(w.symbols()[0], a);
                            assert_eq!(w.symbols()[n], b);
                            // oracle: lexicographically least among all paths
                            let all = sft.enumerate_words(n + 1).unwrap();
                            let best = all
                                .iter()
                                .filter(|u| u[0] == a && u[n] == b)
                                .min()
                                .cloned()
                                .unwrap();
                            assert_eq!(w.symbols(), best.as_slice());
                        }
                        Err(_) => {
                            let all = sft.enumerate_words(n + 1).unwrap();
                            assert!(!all.iter().any(|u| u[0] == a && u[n] == b));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mixing_indices() {
        assert_eq!(full_shift_2().mixing_index(), Some(1));
        assert_eq!(golden_mean().mixing_index(), Some(2));
        assert_eq!(period_two().mixing_index(), None);
    }

    #[test]
    fn stable_unstable_membership() {
        let sft = full_shift_2();
        let x = SymbolicPoint::periodic(&sft, &[1]).unwrap();
        let y = SymbolicPoint::new(&sft, vec![2], vec![], vec![1], 0).unwrap();
        assert!(on_same_stable_set(&x, &y));
        assert!(!on_same_unstable_set(&x, &y));
        let b = bracket(&x, &y).unwrap();
        // bracket lies in W^u(x) and W^s(y), checked on a wide window
        for n in 0..64 {
            assert_eq!(b.symbol_at(-n), x.symbol_at(-n));
            assert_eq!(b.symbol_at(n), y.symbol_at(n));
        }
    }

    #[test]
    fn canonical_form_decides_equality() {
        let sft = full_shift_2();
        // same point presented three ways: ...111 222...
        let a = SymbolicPoint::new(&sft, vec![1], vec![], vec![2], 0).unwrap();
        let b = SymbolicPoint::new(&sft, vec![1], vec![1, 2], vec![2], -1).unwrap();
        let c = SymbolicPoint::new(&sft, vec![1, 1], vec![2, 2], vec![2, 2], 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        // the cycles must have been reduced to primitive words
        assert_eq!(c.left_cycle(), &[1]);
        assert_eq!(c.right_cycle(), &[2]);
        assert!(c.core().is_empty());
    }

    proptest! {
        #[test]
        fn ultrametric_inequality(seed in 0u64..500) {
            let sft = golden_mean();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = sft.random_point(4, &mut rng).unwrap();
            let y = sft.random_point(4, &mut rng).unwrap();
            let z = sft.random_point(4, &mut rng).unwrap();
            let dxz = sft.rho_distance(&x, &z);
            let dxy = sft.rho_distance(&x, &y);
            let dyz = sft.rho_distance(&y, &z);
            prop_assert!(dxz <= dxy.max(dyz) + 1e-15);
        }

        #[test]
        fn shift_is_bilipschitz(seed in 0u64..500) {
            let sft = full_shift_2();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = sft.random_point(4, &mut rng).unwrap();
            let y = sft.random_point(4, &mut rng).unwrap();
            if x != y {
                let d = sft.rho_distance(&x, &y);
                let ds = sft.rho_distance(&x.shifted(1), &y.shifted(1));
                let e = sft.tau().exp();
                prop_assert!(ds <= e * d * (1.0 + 1e-12));
                prop_assert!(ds >= d / e * (1.0 - 1e-12));
            }
        }

        #[test]
        fn canonicalization_is_shift_stable(seed in 0u64..300, n in -17i64..17) {
            let sft = golden_mean();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = sft.random_point(4, &mut rng).unwrap();
            let y = x.shifted(n).shifted(-n);
            prop_assert_eq!(x.clone(), y);
            // coordinates behave as f^n
            let s = x.shifted(n);
            for j in -8..8 {
                prop_assert_eq!(s.symbol_at(j), x.symbol_at(j + n));
            }
        }
    }
}
