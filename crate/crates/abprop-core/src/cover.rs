//! Combinatorics of the universal cover of the twice-punctured plane.
//!
//! Sheets are labelled by reduced words of the free group on `g_a`, `g_b`,
//! where `g_a` (`g_b`) is a counterclockwise loop around `a` (`b`). A point of
//! the cover is a sheet label together with a point of the cut plane. Moving
//! along a path multiplies the label on the right: crossing `L_a` from above
//! to below gives `g_a`, crossing `L_b` from below to above gives `g_b`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{sweep_angle, PlanePoint, Vortex, VortexConfig};
use crate::kernels::Flux;

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub generator: Vortex,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: Vortex, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    fn exponent(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }
}

/// A reduced word in the free group on two generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord::default()
    }

    /// Reduces an arbitrary letter sequence.
    pub fn from_letters<It: IntoIterator<Item = Letter>>(letters: It) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        GroupWord { letters: out }
    }

    pub fn generator(v: Vortex) -> Self {
        GroupWord {
            letters: vec![Letter::new(v, false)],
        }
    }

    /// `g_v^k`.
    pub fn power(v: Vortex, k: i64) -> Self {
        let l = Letter::new(v, k < 0);
        GroupWord {
            letters: vec![l; k.unsigned_abs() as usize],
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn inverse(&self) -> Self {
        GroupWord {
            letters: self.letters.iter().rev().map(|l| l.inv()).collect(),
        }
    }

    /// Total exponent of one generator (the abelianization).
    pub fn exponent_sum(&self, v: Vortex) -> i64 {
        self.letters
            .iter()
            .filter(|l| l.generator == v)
            .map(|l| l.exponent())
            .sum()
    }

    /// Value of the one-dimensional representation `Λ(g_a) = e^{2πiα}`,
    /// `Λ(g_b) = e^{2πiβ}`.
    pub fn character(&self, flux: &Flux) -> Complex64 {
        let phase =
            self.exponent_sum(Vortex::A) as f64 * flux.alpha() + self.exponent_sum(Vortex::B) as f64 * flux.beta();
        unit_phase(phase)
    }

    /// Strips trailing powers of `g_v`, giving the canonical representative of
    /// the coset `g⟨g_v⟩`.
    fn strip_trailing(&self, v: Vortex) -> Self {
        let mut letters = self.letters.clone();
        while letters.last().map(|l| l.generator) == Some(v) {
            letters.pop();
        }
        GroupWord { letters }
    }

    /// True if the word has the form `g_u^k g_v^m`.
    fn is_two_syllable(&self, u: Vortex, v: Vortex) -> bool {
        let split = self
            .letters
            .iter()
            .position(|l| l.generator != u)
            .unwrap_or(self.letters.len());
        self.letters[split..].iter().all(|l| l.generator == v)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "g_{}", l.generator)?;
            if l.inverse {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

/// `e^{2πi·x}` with the argument reduced modulo one first.
pub(crate) fn unit_phase(x: f64) -> Complex64 {
    let frac = x - x.round();
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

/// Reduced product `u·v`.
pub fn reduce_and_multiply(u: &GroupWord, v: &GroupWord) -> GroupWord {
    GroupWord::from_letters(u.letters.iter().chain(v.letters.iter()).copied())
}

/// A scattering sequence `(c₁, …, cₙ)` with `c_j ≠ c_{j+1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlternatingWord {
    seq: Vec<Vortex>,
}

impl AlternatingWord {
    pub fn new(seq: Vec<Vortex>) -> Result<Self> {
        if seq.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter {
                name: "word",
                reason: "adjacent entries must differ",
            });
        }
        Ok(AlternatingWord { seq })
    }

    pub fn empty() -> Self {
        AlternatingWord::default()
    }

    /// The alternating word of length `n` starting at `first`.
    pub fn starting_at(first: Vortex, n: usize) -> Self {
        let mut seq = Vec::with_capacity(n);
        let mut c = first;
        for _ in 0..n {
            seq.push(c);
            c = c.other();
        }
        AlternatingWord { seq }
    }

    pub fn vortices(&self) -> &[Vortex] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn reversed(&self) -> Self {
        AlternatingWord {
            seq: self.seq.iter().rev().copied().collect(),
        }
    }
}

impl fmt::Display for AlternatingWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.seq.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A lift of a scattering sequence, fixed by one winding integer per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WindingPath {
    pub word: AlternatingWord,
    pub windings: Vec<i64>,
}

impl WindingPath {
    pub fn new(word: AlternatingWord, windings: Vec<i64>) -> Result<Self> {
        if word.len() != windings.len() {
            return Err(Error::InvalidParameter {
                name: "windings",
                reason: "one winding integer per vertex is required",
            });
        }
        Ok(WindingPath { word, windings })
    }

    /// Concatenation; `None` if the junction would repeat a vortex.
    pub fn concat(&self, other: &WindingPath) -> Option<WindingPath> {
        if let (Some(l), Some(f)) = (self.word.seq.last(), other.word.seq.first()) {
            if l == f {
                return None;
            }
        }
        let mut seq = self.word.seq.clone();
        seq.extend_from_slice(&other.word.seq);
        let mut windings = self.windings.clone();
        windings.extend_from_slice(&other.windings);
        Some(WindingPath {
            word: AlternatingWord { seq },
            windings,
        })
    }
}

/// `exp(2πi Σ k_j σ_j)`.
pub fn rep_value(path: &WindingPath, flux: &Flux) -> Complex64 {
    let phase: f64 = path
        .word
        .seq
        .iter()
        .zip(&path.windings)
        .map(|(c, &k)| k as f64 * flux.sigma(*c))
        .sum();
    unit_phase(phase)
}

/// A boundary point of the cover over a vortex.
///
/// Sheets `g·g_v^k` share the same extreme point, so the label is stored in
/// canonical form with trailing powers of `g_v` removed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtremePoint {
    vortex: Vortex,
    sheet: GroupWord,
}

impl ExtremePoint {
    pub fn new(vortex: Vortex, sheet: GroupWord) -> Self {
        let sheet = sheet.strip_trailing(vortex);
        ExtremePoint { vortex, sheet }
    }

    pub fn vortex(&self) -> Vortex {
        self.vortex
    }

    pub fn sheet(&self) -> &GroupWord {
        &self.sheet
    }
}

/// A point of the completed cover.
#[derive(Clone, Debug, PartialEq)]
pub enum CoverPoint {
    Regular { point: PlanePoint, sheet: GroupWord },
    Extreme(ExtremePoint),
}

/// Sheet change along the straight segment `p → q`, or `None` if the segment
/// hits a vortex. On-cut endpoints follow the `θ = +π` tie-break.
pub fn segment_word(p: PlanePoint, q: PlanePoint, cfg: &VortexConfig) -> Option<GroupWord> {
    let mut letters = Vec::new();
    for v in [Vortex::A, Vortex::B] {
        let sw = sweep_angle(v, p, q, cfg).ok()?;
        if sw.eta != 0.0 {
            // Both frames are counterclockwise, so η = 2π is a clockwise
            // passage through the cut.
            letters.push(Letter::new(v, sw.eta > 0.0));
        }
    }
    Some(GroupWord::from_letters(letters))
}

/// Visibility: true iff a straight segment in the cover joins `p` and `q`.
pub fn chi_visible(p: &CoverPoint, q: &CoverPoint, cfg: &VortexConfig) -> bool {
    match (p, q) {
        (CoverPoint::Regular { point: p1, sheet: g1 }, CoverPoint::Regular { point: p2, sheet: g2 }) => {
            if p1 == p2 {
                return g1 == g2;
            }
            match segment_word(*p1, *p2, cfg) {
                Some(h) => reduce_and_multiply(g1, &h) == *g2,
                None => false,
            }
        }
        (CoverPoint::Regular { point, sheet }, CoverPoint::Extreme(e))
        | (CoverPoint::Extreme(e), CoverPoint::Regular { point, sheet }) => {
            if cfg.vortex_at(*point).is_some() {
                return false;
            }
            // The other vortex blocks the view from points on its own cut.
            if cfg.cut_at(*point) == Some(e.vortex.other()) {
                return false;
            }
            sheet.strip_trailing(e.vortex) == e.sheet
        }
        (CoverPoint::Extreme(e1), CoverPoint::Extreme(e2)) => {
            if e1.vortex == e2.vortex {
                return e1 == e2;
            }
            let rel = reduce_and_multiply(&e1.sheet.inverse(), &e2.sheet);
            rel.is_two_syllable(e1.vortex, e2.vortex)
        }
    }
}

/// All alternating words of length `0..=n_max`, by length then `a < b`.
pub fn enumerate_alternating_words(n_max: usize) -> Vec<AlternatingWord> {
    let mut out = vec![AlternatingWord::empty()];
    for n in 1..=n_max {
        out.push(AlternatingWord::starting_at(Vortex::A, n));
        out.push(AlternatingWord::starting_at(Vortex::B, n));
    }
    out
}

/// All winding assignments with `|k_j| ≤ k_max`, lexicographic in `k`.
pub fn enumerate_winding_paths(word: &AlternatingWord, k_max: u32) -> Vec<WindingPath> {
    let n = word.len();
    let k_max = k_max as i64;
    let mut out = Vec::new();
    let mut k = vec![-k_max; n];
    loop {
        out.push(WindingPath {
            word: word.clone(),
            windings: k.clone(),
        });
        let mut j = n;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if k[j] < k_max {
                k[j] += 1;
                break;
            }
            k[j] = -k_max;
        }
    }
}

/// Sheet exponents `m_j` at each vertex of a lift.
///
/// For `n ≥ 2` the winding integers are the exponents directly. For `n = 1`
/// the base angle is the reduced sweep angle, so the base lift already carries
/// `−η/2π` turns.
pub fn vertex_exponents(path: &WindingPath, x0: PlanePoint, x: PlanePoint, cfg: &VortexConfig) -> Result<Vec<i64>> {
    if path.word.len() == 1 {
        let c = path.word.seq[0];
        let sw = sweep_angle(c, x0, x, cfg)?;
        let shift = libm::round(sw.eta / (2.0 * PI)) as i64;
        return Ok(vec![path.windings[0] - shift]);
    }
    Ok(path.windings.clone())
}

/// Vertices of the lift of a winding path starting on the identity sheet:
/// `[x̃₀, C₁, …, Cₙ, x̃]`.
pub fn lift_vertices(path: &WindingPath, x0: PlanePoint, x: PlanePoint, cfg: &VortexConfig) -> Result<Vec<CoverPoint>> {
    cfg.check_endpoint(x0, "x0")?;
    cfg.check_endpoint(x, "x")?;
    let mut out = vec![CoverPoint::Regular {
        point: x0,
        sheet: GroupWord::identity(),
    }];
    if path.word.is_empty() {
        let sheet = segment_word(x0, x, cfg).ok_or(Error::Visibility { segment: 0 })?;
        out.push(CoverPoint::Regular { point: x, sheet });
        return Ok(out);
    }
    let exps = vertex_exponents(path, x0, x, cfg)?;
    let mut sheet = GroupWord::identity();
    for (c, m) in path.word.seq.iter().zip(exps) {
        out.push(CoverPoint::Extreme(ExtremePoint::new(*c, sheet.clone())));
        sheet = reduce_and_multiply(&sheet, &GroupWord::power(*c, m));
    }
    out.push(CoverPoint::Regular { point: x, sheet });
    Ok(out)
}

/// Sheet reached by the lift of `path`.
pub fn path_sheet(path: &WindingPath, x0: PlanePoint, x: PlanePoint, cfg: &VortexConfig) -> Result<GroupWord> {
    match lift_vertices(path, x0, x, cfg)?.pop() {
        Some(CoverPoint::Regular { sheet, .. }) => Ok(sheet),
        _ => unreachable!("a lift always ends at a regular point"),
    }
}
