//! Connective vocabulary: spd-type, base variety and clopen connectives.

use std::fmt;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigError {
    #[error("connective {conn} has no coordinate {coord}")]
    Coordinate { conn: String, coord: usize },
    #[error("unknown connective {0}")]
    Unknown(String),
    #[error("relation index {kind}{index} outside spd-type")]
    Index { kind: &'static str, index: usize },
    #[error("bad signature config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
pub enum Variety {
    Lattice,
    DistributiveLattice,
    Boolean,
    Heyting,
    CoHeyting,
    BiHeyting,
    DeMorgan,
}

impl Variety {
    pub const ALL: [Variety; 7] = [
        Variety::Lattice,
        Variety::DistributiveLattice,
        Variety::Boolean,
        Variety::Heyting,
        Variety::CoHeyting,
        Variety::BiHeyting,
        Variety::DeMorgan,
    ];

    pub fn is_distributive(self) -> bool {
        self != Variety::Lattice
    }

    pub fn has_implication(self) -> bool {
        matches!(self, Variety::Heyting | Variety::BiHeyting)
    }

    pub fn has_coimplication(self) -> bool {
        matches!(self, Variety::CoHeyting | Variety::BiHeyting)
    }

    pub fn parse(name: &str) -> Option<Variety> {
        let key: String = name.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Some(match key.as_str() {
            "lattice" | "le" => Variety::Lattice,
            "distributivelattice" | "distributive" | "dle" => Variety::DistributiveLattice,
            "boolean" | "ba" => Variety::Boolean,
            "heyting" | "ha" => Variety::Heyting,
            "coheyting" => Variety::CoHeyting,
            "biheyting" => Variety::BiHeyting,
            "demorgan" => Variety::DeMorgan,
            _ => return None,
        })
    }
}

impl fmt::Display for Variety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Order-type of a coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Eps {
    One,
    Dual,
}

impl Eps {
    pub fn flip(self) -> Eps {
        match self {
            Eps::One => Eps::Dual,
            Eps::Dual => Eps::One,
        }
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Eps::One => "1",
            Eps::Dual => "∂",
        })
    }
}

/// Whether a connective belongs to F (left residuals), G (right residuals) or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum Side {
    F,
    G,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modal {
    Dia,
    Box,
    Rhd,
    Brhd,
    Lhd,
    Blhd,
}

impl Modal {
    pub const ALL: [Modal; 6] = [Modal::Dia, Modal::Box, Modal::Rhd, Modal::Brhd, Modal::Lhd, Modal::Blhd];

    pub fn adjoint(self) -> Modal {
        match self {
            Modal::Dia => Modal::Box,
            Modal::Box => Modal::Dia,
            Modal::Rhd => Modal::Brhd,
            Modal::Brhd => Modal::Rhd,
            Modal::Lhd => Modal::Blhd,
            Modal::Blhd => Modal::Lhd,
        }
    }

    pub fn side(self) -> Side {
        match self {
            Modal::Dia | Modal::Lhd | Modal::Blhd => Side::F,
            Modal::Box | Modal::Rhd | Modal::Brhd => Side::G,
        }
    }

    pub fn eps(self) -> Eps {
        match self {
            Modal::Dia | Modal::Box => Eps::One,
            _ => Eps::Dual,
        }
    }

    /// Relation family: 0 = subordination, 1 = precontact, 2 = dual precontact.
    pub fn family(self) -> usize {
        match self {
            Modal::Dia | Modal::Box => 0,
            Modal::Rhd | Modal::Brhd => 1,
            Modal::Lhd | Modal::Blhd => 2,
        }
    }

    pub fn ascii(self) -> &'static str {
        match self {
            Modal::Dia => "dia",
            Modal::Box => "box",
            Modal::Rhd => "rhd",
            Modal::Brhd => "brhd",
            Modal::Lhd => "lhd",
            Modal::Blhd => "blhd",
        }
    }

    pub fn unicode(self) -> &'static str {
        match self {
            Modal::Dia => "◇",
            Modal::Box => "■",
            Modal::Rhd => "▷",
            Modal::Brhd => "▶",
            Modal::Lhd => "◁",
            Modal::Blhd => "◀",
        }
    }

    pub fn latex(self) -> &'static str {
        match self {
            Modal::Dia => "\\Diamond",
            Modal::Box => "\\blacksquare",
            Modal::Rhd => "{\\rhd}",
            Modal::Brhd => "{\\blacktriangleright}",
            Modal::Lhd => "{\\lhd}",
            Modal::Blhd => "{\\blacktriangleleft}",
        }
    }
}

/// Connective identity: lattice operations, indexed modal operators, or named clopen operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Conn {
    Meet,
    Join,
    Modal(Modal, usize),
    Clopen(Arc<str>),
}

impl Conn {
    pub fn clopen(name: &str) -> Conn {
        Conn::Clopen(Arc::from(name))
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, Conn::Meet | Conn::Join)
    }

    pub fn is_modal(&self) -> bool {
        matches!(self, Conn::Modal(..))
    }

    pub fn is_clopen(&self) -> bool {
        matches!(self, Conn::Clopen(_))
    }
}

impl fmt::Display for Conn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conn::Meet => f.write_str("∧"),
            Conn::Join => f.write_str("∨"),
            Conn::Modal(m, 0) => f.write_str(m.unicode()),
            Conn::Modal(m, i) => write!(f, "{}{}", m.unicode(), i),
            Conn::Clopen(n) => match &**n {
                "~" => f.write_str("¬"),
                "->" => f.write_str("→"),
                "-<" => f.write_str("-<"),
                other => f.write_str(other),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClopenDesc {
    pub name: Arc<str>,
    pub arity: usize,
    pub side: Side,
    pub eps: Vec<Eps>,
    /// Per-coordinate residual, by connective name (`/\` and `\/` name the lattice operations).
    pub residuals: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub spd_type: (usize, usize, usize),
    pub variety: Variety,
    pub clopen: Vec<ClopenDesc>,
}

fn desc(name: &str, side: Side, eps: Vec<Eps>, residuals: Vec<Option<&str>>) -> ClopenDesc {
    ClopenDesc {
        name: Arc::from(name),
        arity: eps.len(),
        side,
        eps,
        residuals: residuals.into_iter().map(|r| r.map(str::to_string)).collect(),
    }
}

impl Signature {
    pub fn new(spd_type: (usize, usize, usize), variety: Variety) -> Signature {
        use Eps::*;
        let mut clopen = Vec::new();
        match variety {
            Variety::Boolean | Variety::DeMorgan => {
                clopen.push(desc("~", Side::Both, vec![Dual], vec![Some("~")]));
            }
            Variety::Heyting | Variety::BiHeyting => {
                clopen.push(desc("~", Side::G, vec![Dual], vec![Some("~")]));
            }
            _ => {}
        }
        if variety.has_implication() {
            clopen.push(desc("->", Side::G, vec![Dual, One], vec![Some("->"), Some("/\\")]));
        }
        if variety.has_coimplication() {
            clopen.push(desc("-<", Side::F, vec![One, Dual], vec![Some("\\/"), Some("-<")]));
        }
        Signature { spd_type, variety, clopen }
    }

    /// Built-in signature by variety name, with one relation of each kind.
    pub fn builtin(name: &str) -> Option<Signature> {
        Variety::parse(name).map(|v| Signature::new((1, 1, 1), v))
    }

    pub fn from_toml(text: &str) -> Result<Signature, SigError> {
        #[derive(Deserialize)]
        struct ClopenCfg {
            name: String,
            arity: usize,
            side: Side,
            epsilon: Vec<String>,
            #[serde(default)]
            residuals: Vec<String>,
        }
        #[derive(Deserialize)]
        struct Cfg {
            spd_type: [usize; 3],
            variety: String,
            #[serde(default)]
            clopen: Vec<ClopenCfg>,
        }
        let cfg: Cfg = toml::from_str(text).map_err(|e| SigError::Config(e.to_string()))?;
        let variety =
            Variety::parse(&cfg.variety).ok_or_else(|| SigError::Config(format!("unknown variety {}", cfg.variety)))?;
        let mut sig = Signature::new((cfg.spd_type[0], cfg.spd_type[1], cfg.spd_type[2]), variety);
        for c in cfg.clopen {
            if c.epsilon.len() != c.arity {
                return Err(SigError::Config(format!("{}: epsilon length differs from arity", c.name)));
            }
            let eps = c
                .epsilon
                .iter()
                .map(|e| match e.as_str() {
                    "1" => Ok(Eps::One),
                    "d" | "∂" | "dual" => Ok(Eps::Dual),
                    other => Err(SigError::Config(format!("bad order-type {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut residuals: Vec<Option<String>> =
                c.residuals.into_iter().map(|r| if r.is_empty() || r == "-" { None } else { Some(r) }).collect();
            residuals.resize(c.arity, None);
            sig.clopen.retain(|d| *d.name != *c.name);
            sig.clopen.push(ClopenDesc {
                name: Arc::from(c.name.as_str()),
                arity: c.arity,
                side: c.side,
                eps,
                residuals,
            });
        }
        Ok(sig)
    }

    pub fn is_distributive(&self) -> bool {
        self.variety.is_distributive()
    }

    pub fn clopen_desc(&self, name: &str) -> Option<&ClopenDesc> {
        self.clopen.iter().find(|d| &*d.name == name)
    }

    pub fn contains(&self, conn: &Conn) -> bool {
        match conn {
            Conn::Meet | Conn::Join => true,
            Conn::Modal(m, i) => *i < self.rel_count(m.family()),
            Conn::Clopen(n) => self.clopen_desc(n).is_some(),
        }
    }

    pub fn rel_count(&self, family: usize) -> usize {
        match family {
            0 => self.spd_type.0,
            1 => self.spd_type.1,
            _ => self.spd_type.2,
        }
    }

    pub fn arity(&self, conn: &Conn) -> Result<usize, SigError> {
        match conn {
            Conn::Meet | Conn::Join => Ok(2),
            Conn::Modal(..) if self.contains(conn) => Ok(1),
            Conn::Clopen(n) => self.clopen_desc(n).map(|d| d.arity).ok_or_else(|| SigError::Unknown(n.to_string())),
            _ => Err(SigError::Unknown(conn.to_string())),
        }
    }

    pub fn order_type(&self, conn: &Conn) -> Result<Vec<Eps>, SigError> {
        match conn {
            Conn::Meet | Conn::Join => Ok(vec![Eps::One, Eps::One]),
            Conn::Modal(m, _) if self.contains(conn) => Ok(vec![m.eps()]),
            Conn::Clopen(n) => {
                self.clopen_desc(n).map(|d| d.eps.clone()).ok_or_else(|| SigError::Unknown(n.to_string()))
            }
            _ => Err(SigError::Unknown(conn.to_string())),
        }
    }

    /// F/G membership; `None` for the lattice operations.
    pub fn side(&self, conn: &Conn) -> Option<Side> {
        match conn {
            Conn::Meet | Conn::Join => None,
            Conn::Modal(m, _) => Some(m.side()),
            Conn::Clopen(n) => self.clopen_desc(n).map(|d| d.side),
        }
    }

    pub fn residual(&self, conn: &Conn, coord: usize) -> Result<Option<Conn>, SigError> {
        let arity = self.arity(conn)?;
        if coord >= arity {
            return Err(SigError::Coordinate { conn: conn.to_string(), coord });
        }
        Ok(match conn {
            Conn::Meet => self.variety.has_implication().then(|| Conn::clopen("->")),
            Conn::Join => self.variety.has_coimplication().then(|| Conn::clopen("-<")),
            Conn::Modal(m, i) => Some(Conn::Modal(m.adjoint(), *i)),
            Conn::Clopen(n) => {
                let d = self.clopen_desc(n).expect("arity checked");
                match d.residuals[coord].as_deref() {
                    None => None,
                    Some("/\\") => Some(Conn::Meet),
                    Some("\\/") => Some(Conn::Join),
                    Some(r) => self.clopen_desc(r).map(|_| Conn::clopen(r)),
                }
            }
        })
    }

    /// Every connective of the signature, lattice operations first.
    pub fn connectives(&self) -> Vec<Conn> {
        let mut out = vec![Conn::Meet, Conn::Join];
        for m in Modal::ALL {
            for i in 0..self.rel_count(m.family()) {
                out.push(Conn::Modal(m, i));
            }
        }
        out.extend(self.clopen.iter().map(|d| Conn::Clopen(d.name.clone())));
        out
    }

    pub fn check_index(&self, family: usize, index: usize) -> Result<(), SigError> {
        if index < self.rel_count(family) {
            Ok(())
        } else {
            Err(SigError::Index { kind: ["prec", "C", "D"][family], index })
        }
    }
}

impl Default for Signature {
    fn default() -> Self {
        Signature::new((1, 1, 1), Variety::DistributiveLattice)
    }
}
