//! Curvelet indices, their text literal form and enumeration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CurveletError, Result};
use crate::geometry::sphere::{grid_step, DirectionLabel, Hemisphere, WEIGHT_SUPPORT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    /// Massless wave equation, `q = xi^2`.
    Wave,
    /// Klein-Gordon, `q = xi^2 - mu^2`.
    Kg,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Wave => "wave",
            Case::Kg => "kg",
        }
    }

    /// Mass actually used for this case; the wave case ignores `mu`.
    #[inline]
    pub fn effective_mu(self, mu: f64) -> f64 {
        match self {
            Case::Wave => 0.0,
            Case::Kg => mu,
        }
    }
}

impl FromStr for Case {
    type Err = CurveletError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wave" => Ok(Case::Wave),
            "kg" => Ok(Case::Kg),
            _ => Err(CurveletError::InvalidIndex(format!("unknown case '{s}'"))),
        }
    }
}

/// One of the four connected components of a window support, labelled by the
/// signs of `xi_0` and of `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorLabel {
    pub time_sign: i8,
    pub cone_sign: i8,
}

impl SectorLabel {
    pub const TP: SectorLabel = SectorLabel { time_sign: 1, cone_sign: 1 };
    pub const TM: SectorLabel = SectorLabel { time_sign: 1, cone_sign: -1 };
    pub const NP: SectorLabel = SectorLabel { time_sign: -1, cone_sign: 1 };
    pub const NM: SectorLabel = SectorLabel { time_sign: -1, cone_sign: -1 };
    pub const ALL: [SectorLabel; 4] = [Self::TP, Self::TM, Self::NP, Self::NM];

    /// Two-letter code: `t`/`n` for the sign of `xi_0`, `p`/`m` for the sign of `q`.
    pub fn code(&self) -> &'static str {
        match (self.time_sign > 0, self.cone_sign > 0) {
            (true, true) => "tp",
            (true, false) => "tm",
            (false, true) => "np",
            (false, false) => "nm",
        }
    }

    /// Whether `(xi_0, q)` lies in this sector. Zero counts as positive.
    #[inline]
    pub fn contains(&self, xi0: f64, q: f64) -> bool {
        ((xi0 >= 0.0) == (self.time_sign > 0)) && ((q >= 0.0) == (self.cone_sign > 0))
    }
}

impl FromStr for SectorLabel {
    type Err = CurveletError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tp" => Ok(Self::TP),
            "tm" => Ok(Self::TM),
            "np" => Ok(Self::NP),
            "nm" => Ok(Self::NM),
            _ => Err(CurveletError::InvalidIndex(format!("unknown sector '{s}'"))),
        }
    }
}

/// The translation-independent part of an index: everything that fixes a
/// Fourier window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FourierKey {
    pub case: Case,
    pub d: usize,
    pub m: i32,
    pub j: i32,
    pub direction: DirectionLabel,
    pub sector: SectorLabel,
}

impl FourierKey {
    pub fn validate(&self) -> Result<()> {
        if self.d != 1 && self.d != 3 {
            return Err(CurveletError::InvalidIndex(format!(
                "spatial dimension {} not supported (use 1 or 3)",
                self.d
            )));
        }
        if self.j < 1 {
            return Err(CurveletError::InvalidIndex(format!("j = {} must be >= 1", self.j)));
        }
        if 2 * self.m + self.j < 0 {
            return Err(CurveletError::InvalidIndex(format!(
                "m + j/2 = {} is below the implemented range",
                self.m as f64 + 0.5 * self.j as f64
            )));
        }
        match (self.d, self.direction) {
            (1, DirectionLabel::Sign(s)) if s == 1 || s == -1 => Ok(()),
            (3, DirectionLabel::Grid { l1, l2, .. }) => {
                let h = grid_step(self.j);
                let gap1 = (h * l1 as f64).abs() - h;
                let gap2 = (h * l2 as f64).abs() - h;
                if gap1.max(0.0).hypot(gap2.max(0.0)) < WEIGHT_SUPPORT {
                    Ok(())
                } else {
                    Err(CurveletError::InvalidIndex(format!(
                        "grid point ({l1},{l2}) is outside the direction grid at j = {}",
                        self.j
                    )))
                }
            }
            _ => Err(CurveletError::InvalidIndex(format!(
                "direction {:?} does not match d = {}",
                self.direction, self.d
            ))),
        }
    }

    pub fn with_k(&self, k: [i64; 4]) -> CurveletIndex {
        CurveletIndex { key: *self, k }
    }
}

/// Full curvelet index: Fourier window plus translation lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CurveletIndex {
    pub key: FourierKey,
    /// Translation indices `(k_long, k_off, k_perp1, k_perp2)`; only the first
    /// `d + 1` are used, the rest stay zero.
    pub k: [i64; 4],
}

impl CurveletIndex {
    pub fn case(&self) -> Case {
        self.key.case
    }
    pub fn d(&self) -> usize {
        self.key.d
    }
    pub fn m(&self) -> i32 {
        self.key.m
    }
    pub fn j(&self) -> i32 {
        self.key.j
    }

    pub fn k(&self) -> &[i64] {
        &self.k[..self.key.d + 1]
    }

    pub fn validate(&self) -> Result<()> {
        self.key.validate()?;
        if self.k[self.key.d + 1..].iter().any(|&v| v != 0) {
            return Err(CurveletError::InvalidIndex("too many translation indices".into()));
        }
        Ok(())
    }

    pub fn with_k(&self, k: [i64; 4]) -> CurveletIndex {
        CurveletIndex { key: self.key, k }
    }
}

impl fmt::Display for CurveletIndex {
    /// `case=kg,d=1,m=0,j=2,e=+,s=tp,k=0,0`; in 3+1 dimensions the direction
    /// reads `e=n/l1/l2` or `e=s/l1/l2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let key = &self.key;
        let e = match key.direction {
            DirectionLabel::Sign(s) => (if s > 0 { "+" } else { "-" }).to_string(),
            DirectionLabel::Grid { hemisphere, l1, l2 } => {
                let h = if hemisphere == Hemisphere::North { "n" } else { "s" };
                format!("{h}/{l1}/{l2}")
            }
        };
        let k: Vec<String> = self.k().iter().map(|v| v.to_string()).collect();
        write!(
            f,
            "case={},d={},m={},j={},e={},s={},k={}",
            key.case.name(),
            key.d,
            key.m,
            key.j,
            e,
            key.sector.code(),
            k.join(",")
        )
    }
}

fn parse_direction(s: &str) -> Result<DirectionLabel> {
    match s {
        "+" | "+1" | "1" => return Ok(DirectionLabel::Sign(1)),
        "-" | "-1" => return Ok(DirectionLabel::Sign(-1)),
        _ => {}
    }
    let parts: Vec<&str> = s.split('/').collect();
    let bad = || CurveletError::InvalidIndex(format!("cannot parse direction '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let hemisphere = match parts[0] {
        "n" | "north" => Hemisphere::North,
        "s" | "south" => Hemisphere::South,
        _ => return Err(bad()),
    };
    let l1 = parts[1].parse().map_err(|_| bad())?;
    let l2 = parts[2].parse().map_err(|_| bad())?;
    Ok(DirectionLabel::Grid { hemisphere, l1, l2 })
}

impl FromStr for CurveletIndex {
    type Err = CurveletError;

    fn from_str(s: &str) -> Result<Self> {
        let mut case = None;
        let mut d = None;
        let mut m = None;
        let mut j = None;
        let mut e = None;
        let mut sector = None;
        let mut k: Vec<i64> = Vec::new();
        let bad = |what: &str| CurveletError::InvalidIndex(format!("{what} in '{s}'"));
        let mut in_k = false;
        for field in s.trim().split(',') {
            let field = field.trim();
            if let Some((name, value)) = field.split_once('=') {
                in_k = false;
                match name {
                    "case" => case = Some(value.parse::<Case>()?),
                    "d" => d = Some(value.parse::<usize>().map_err(|_| bad("bad d"))?),
                    "m" => m = Some(value.parse::<i32>().map_err(|_| bad("bad m"))?),
                    "j" => j = Some(value.parse::<i32>().map_err(|_| bad("bad j"))?),
                    "e" => e = Some(parse_direction(value)?),
                    "s" => sector = Some(value.parse::<SectorLabel>()?),
                    "k" => {
                        in_k = true;
                        k.push(value.parse().map_err(|_| bad("bad k"))?);
                    }
                    _ => return Err(bad(&format!("unknown field '{name}'"))),
                }
            } else if in_k {
                k.push(field.parse().map_err(|_| bad("bad k"))?);
            } else {
                return Err(bad(&format!("stray token '{field}'")));
            }
        }
        let d = d.ok_or_else(|| bad("missing d"))?;
        if k.len() != d + 1 {
            return Err(bad(&format!("expected {} translation indices", d + 1)));
        }
        let mut kk = [0i64; 4];
        kk[..k.len()].copy_from_slice(&k);
        let idx = CurveletIndex {
            key: FourierKey {
                case: case.ok_or_else(|| bad("missing case"))?,
                d,
                m: m.ok_or_else(|| bad("missing m"))?,
                j: j.ok_or_else(|| bad("missing j"))?,
                direction: e.ok_or_else(|| bad("missing e"))?,
                sector: sector.ok_or_else(|| bad("missing s"))?,
            },
            k: kk,
        };
        idx.validate()?;
        Ok(idx)
    }
}

/// Whether the window for `(case, m, j, sector)` has a nonempty support.
///
/// The support is the open set `|q| in 4^m (1/4, 4)`, `xi_0^2/|q| in
/// 2^j (1/2, 2)` intersected with `|xi|^2 = xi_0^2 - q - mu^2 > 0`; the last
/// quantity is largest at the outer corner of the parameter rectangle.
pub fn support_nonempty(case: Case, m: i32, j: i32, sector: SectorLabel, mu: f64) -> bool {
    let mu = case.effective_mu(mu);
    let q = 4f64.powi(m + 1);
    let c = (j as f64 + 1.0).exp2();
    let rho2 = c * q - sector.cone_sign as f64 * q - mu * mu;
    rho2 > 0.0
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: i64,
    pub hi: i64,
}

impl IntRange {
    pub fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }
    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

impl FromStr for IntRange {
    type Err = CurveletError;
    /// Accepts `a..b`, `a:b` or a single integer.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CurveletError::InvalidIndex(format!("cannot parse range '{s}'"));
        let s = s.trim();
        let (a, b) = if let Some(p) = s.find("..") {
            (&s[..p], &s[p + 2..])
        } else if let Some(p) = s.get(1..).and_then(|t| t.find(':')) {
            (&s[..p + 1], &s[p + 2..])
        } else {
            (s, s)
        };
        Ok(Self {
            lo: a.trim().parse().map_err(|_| bad())?,
            hi: b.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// What to enumerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub case: Case,
    pub d: usize,
    pub mu: f64,
    pub m_range: IntRange,
    pub j_range: IntRange,
    /// Range applied to every translation axis.
    pub k_box: IntRange,
    pub sectors: Vec<SectorLabel>,
}

/// Lexicographic enumeration over `(m, j, direction, sector, k)`.
///
/// Indices below the implemented `m + j/2 >= 0` range and windows whose
/// support is empty for the given mass are skipped. An empty range gives an
/// empty list; a `j` range reaching below 1 is rejected.
pub fn enumerate_indices(cfg: &IndexConfig) -> Result<Vec<CurveletIndex>> {
    if cfg.d != 1 && cfg.d != 3 {
        return Err(CurveletError::InvalidIndex(format!(
            "spatial dimension {} not supported (use 1 or 3)",
            cfg.d
        )));
    }
    if !cfg.j_range.is_empty() && cfg.j_range.lo < 1 {
        return Err(CurveletError::InvalidIndex(format!(
            "j range starts at {}, must be >= 1",
            cfg.j_range.lo
        )));
    }
    let n = cfg.d + 1;
    let ks: Vec<i64> = cfg.k_box.iter().collect();
    let mut out = Vec::new();
    for m in cfg.m_range.iter() {
        for j in cfg.j_range.iter() {
            let (m, j) = (m as i32, j as i32);
            if 2 * m + j < 0 {
                continue;
            }
            for dir in crate::geometry::sphere::direction_grid(cfg.d, j)? {
                for &sector in &cfg.sectors {
                    if !support_nonempty(cfg.case, m, j, sector, cfg.mu) {
                        continue;
                    }
                    let key = FourierKey { case: cfg.case, d: cfg.d, m, j, direction: dir.label, sector };
                    let mut k = [0i64; 4];
                    push_lattice(&key, &ks, n, 0, &mut k, &mut out);
                }
            }
        }
    }
    Ok(out)
}

fn push_lattice(
    key: &FourierKey,
    ks: &[i64],
    n: usize,
    axis: usize,
    k: &mut [i64; 4],
    out: &mut Vec<CurveletIndex>,
) {
    if axis == n {
        out.push(CurveletIndex { key: *key, k: *k });
        return;
    }
    for &v in ks {
        k[axis] = v;
        push_lattice(key, ks, n, axis + 1, k, out);
    }
    k[axis] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IndexConfig {
        IndexConfig {
            case: Case::Wave,
            d: 1,
            mu: 0.0,
            m_range: IntRange::new(0, 0),
            j_range: IntRange::new(2, 2),
            k_box: IntRange::new(-1, 1),
            sectors: vec![SectorLabel::TP],
        }
    }

    #[test]
    fn enumerate_count() {
        let v = enumerate_indices(&cfg()).unwrap();
        assert_eq!(v.len(), 18);
        assert_eq!(v, enumerate_indices(&cfg()).unwrap());
        let mut sorted = v.clone();
        sorted.sort();
        // direction order puts +1 first, so the list is not sorted by label
        assert_eq!(v[0].key.direction, DirectionLabel::Sign(1));
    }

    #[test]
    fn enumerate_rejects_j0() {
        let mut c = cfg();
        c.j_range = IntRange::new(0, 2);
        assert!(enumerate_indices(&c).is_err());
        c.j_range = IntRange::new(3, 2);
        assert!(enumerate_indices(&c).unwrap().is_empty());
    }

    #[test]
    fn enumerate_skips_infrared() {
        let mut c = cfg();
        c.m_range = IntRange::new(-2, 0);
        c.k_box = IntRange::new(0, 0);
        let v = enumerate_indices(&c).unwrap();
        assert!(v.iter().all(|i| 2 * i.m() + i.j() >= 0));
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn literal_round_trip() {
        let s = "case=kg,d=1,m=0,j=2,e=+,s=tp,k=0,0";
        let idx: CurveletIndex = s.parse().unwrap();
        assert_eq!(idx.to_string(), s);
        let s3 = "case=wave,d=3,m=1,j=4,e=s/-2/3,s=nm,k=1,-2,3,0";
        let idx3: CurveletIndex = s3.parse().unwrap();
        assert_eq!(idx3.to_string(), s3);
        assert!("case=kg,d=1,m=0,j=0,e=+,s=tp,k=0,0".parse::<CurveletIndex>().is_err());
        assert!("case=kg,d=1,m=0,j=2,e=+,s=tp,k=0".parse::<CurveletIndex>().is_err());
        assert!("case=kg,d=1,m=-2,j=2,e=+,s=tp,k=0,0".parse::<CurveletIndex>().is_err());
        assert!("case=kg,d=3,m=0,j=2,e=n/9/0,s=tp,k=0,0,0,0".parse::<CurveletIndex>().is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!("-1..1".parse::<IntRange>().unwrap(), IntRange::new(-1, 1));
        assert_eq!("2".parse::<IntRange>().unwrap(), IntRange::new(2, 2));
        assert_eq!("-3:4".parse::<IntRange>().unwrap(), IntRange::new(-3, 4));
        assert!("a..b".parse::<IntRange>().is_err());
    }

    #[test]
    fn support_feasibility() {
        assert!(support_nonempty(Case::Wave, 0, 1, SectorLabel::TP, 0.0));
        assert!(support_nonempty(Case::Kg, 0, 2, SectorLabel::TP, 1.0));
        assert!(!support_nonempty(Case::Kg, 0, 2, SectorLabel::TP, 10.0));
        assert!(support_nonempty(Case::Kg, -1, 2, SectorLabel::TM, 1.0));
    }
}
