//! Horn rules over the meta-KB and their exhaustive miner.
//!
//! The rule language is fixed: a body holds at most one atom per meta
//! relation (an INSUBJ and/or INOBJ atom on `?i`, an optional ISA atom on
//! `?a` or `?b`, an optional CONTAINS atom on `?i`) and the head is always
//! `?a r ?b`. Rules are rendered as
//!
//! ```text
//! ?i INSUBJ ?a ∧ ?i INOBJ ?b ∧ ?b ISA activity.n.01 ∧ ?i CONTAINS cause ⇒ ?a Causes ?b
//! ```
//!
//! A rule is instantiated on a mapping `?i` with `?a` and `?b` bound to its
//! two distinct terms, in either order. Standard confidence is
//! `#instantiations satisfying body ∧ head / #instantiations satisfying body`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use super::meta::{MetaKb, MetaMapping};
use super::{CONTAINS, INOBJ, INSUBJ, ISA};
use crate::error::{Error, Result};
use crate::kb::{read_file, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    A,
    B,
}

impl Var {
    fn other(self) -> Var {
        match self {
            Var::A => Var::B,
            Var::B => Var::A,
        }
    }

    fn parse(s: &str) -> Option<Var> {
        match s {
            "?a" => Some(Var::A),
            "?b" => Some(Var::B),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::A => "?a",
            Var::B => "?b",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    InSubj(Var),
    InObj(Var),
    Isa(Var, String),
    Contains(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::InSubj(v) => write!(f, "?i {INSUBJ} {v}"),
            Atom::InObj(v) => write!(f, "?i {INOBJ} {v}"),
            Atom::Isa(v, h) => write!(f, "{v} {ISA} {h}"),
            Atom::Contains(t) => write!(f, "?i {CONTAINS} {t}"),
        }
    }
}

/// A rule body in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Body {
    pub insubj: Option<Var>,
    pub inobj: Option<Var>,
    pub isa: Option<(Var, String)>,
    pub contains: Option<String>,
}

impl Body {
    /// At least one of INSUBJ/INOBJ, and on different variables if both.
    pub fn is_well_formed(&self) -> bool {
        match (self.insubj, self.inobj) {
            (None, None) => false,
            (Some(a), Some(b)) => a != b,
            _ => true,
        }
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut atoms = Vec::with_capacity(4);
        if let Some(v) = self.insubj {
            atoms.push(Atom::InSubj(v));
        }
        if let Some(v) = self.inobj {
            atoms.push(Atom::InObj(v));
        }
        if let Some((v, h)) = &self.isa {
            atoms.push(Atom::Isa(*v, h.clone()));
        }
        if let Some(t) = &self.contains {
            atoms.push(Atom::Contains(t.clone()));
        }
        atoms
    }

    fn from_atoms(atoms: Vec<Atom>) -> std::result::Result<Self, String> {
        let mut body = Body {
            insubj: None,
            inobj: None,
            isa: None,
            contains: None,
        };
        for atom in atoms {
            let repeated = match atom {
                Atom::InSubj(v) => body.insubj.replace(v).is_some(),
                Atom::InObj(v) => body.inobj.replace(v).is_some(),
                Atom::Isa(v, h) => body.isa.replace((v, h)).is_some(),
                Atom::Contains(t) => body.contains.replace(t).is_some(),
            };
            if repeated {
                return Err("a body relation occurs twice".into());
            }
        }
        if !body.is_well_formed() {
            return Err("body needs INSUBJ or INOBJ on distinct variables".into());
        }
        Ok(body)
    }

    fn swapped(&self) -> Body {
        Body {
            insubj: self.insubj.map(Var::other),
            inobj: self.inobj.map(Var::other),
            isa: self.isa.as_ref().map(|(v, h)| (v.other(), h.clone())),
            contains: self.contains.clone(),
        }
    }

    /// Evaluates the body with `?a` bound to term `a` and `?b` to term `b`.
    pub fn holds(&self, m: &MappingView<'_>, a: usize, b: usize) -> bool {
        let term = |v: Var| match v {
            Var::A => a,
            Var::B => b,
        };
        self.insubj.is_none_or(|v| m.insubj[term(v)])
            && self.inobj.is_none_or(|v| m.inobj[term(v)])
            && self
                .isa
                .as_ref()
                .is_none_or(|(v, h)| m.isa[term(*v)].iter().any(|x| x == h))
            && self
                .contains
                .as_ref()
                .is_none_or(|t| m.contains.iter().any(|x| x == t))
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms().iter().map(Atom::to_string).collect();
        f.write_str(&atoms.join(" ∧ "))
    }
}

/// Borrowed view of the features a body is evaluated against; built from
/// training mappings and from open triples alike.
#[derive(Debug, Clone, Copy)]
pub struct MappingView<'a> {
    pub insubj: [bool; 2],
    pub inobj: [bool; 2],
    pub isa: [&'a [String]; 2],
    pub contains: &'a [String],
}

impl<'a> From<&'a MetaMapping> for MappingView<'a> {
    fn from(m: &'a MetaMapping) -> Self {
        MappingView {
            insubj: m.insubj,
            inobj: m.inobj,
            isa: [&m.isa[0], &m.isa[1]],
            contains: &m.contains,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub body: Body,
    /// Head relation; the head atom is `?a relation ?b`.
    pub relation: String,
    pub confidence: f64,
    /// Instantiations satisfying body and head.
    pub support: usize,
    /// Instantiations satisfying the body.
    pub body_support: usize,
}

impl Rule {
    pub fn text(&self) -> String {
        format!("{} ⇒ ?a {} ?b", self.body, self.relation)
    }

    /// Parses the rule text (without confidence/support).
    pub fn parse_text(text: &str) -> std::result::Result<(Body, String), String> {
        let (body, head) = text.split_once('⇒').ok_or("missing ⇒")?;
        let head: Vec<&str> = head.split_whitespace().collect();
        let [x, relation, y] = head.as_slice() else {
            return Err(format!("bad head {head:?}"));
        };
        let atoms = body
            .split('∧')
            .map(parse_atom)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let body = Body::from_atoms(atoms)?;
        match (Var::parse(x), Var::parse(y)) {
            (Some(Var::A), Some(Var::B)) => Ok((body, relation.to_string())),
            (Some(Var::B), Some(Var::A)) => Ok((body.swapped(), relation.to_string())),
            _ => Err(format!("head must relate ?a and ?b, got {x} {relation} {y}")),
        }
    }
}

fn parse_atom(s: &str) -> std::result::Result<Atom, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let [x, rel, y] = parts.as_slice() else {
        return Err(format!("bad atom {s:?}"));
    };
    let var = |v: &str| Var::parse(v).ok_or_else(|| format!("expected ?a or ?b in {s:?}"));
    match *rel {
        INSUBJ | INOBJ | CONTAINS if *x != "?i" => Err(format!("{rel} atoms start with ?i: {s:?}")),
        INSUBJ => Ok(Atom::InSubj(var(y)?)),
        INOBJ => Ok(Atom::InObj(var(y)?)),
        CONTAINS => Ok(Atom::Contains(y.to_string())),
        ISA => Ok(Atom::Isa(var(x)?, y.to_string())),
        other => Err(format!("unknown body relation {other:?}")),
    }
}

/// Rules file: `rule<TAB>confidence<TAB>support` per line.
pub fn rules_to_tsv(rules: &[Rule]) -> String {
    rules
        .iter()
        .map(|r| format!("{}\t{}\t{}\n", r.text(), r.confidence, r.support))
        .collect()
}

pub fn parse_rules(name: &str, text: &str) -> Result<Vec<Rule>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(name, i + 1, m);
        let fields: Vec<&str> = line.split('\t').collect();
        let [text, conf, support] = fields.as_slice() else {
            return Err(err("expected rule<TAB>confidence<TAB>support".into()));
        };
        let (body, relation) = Rule::parse_text(text).map_err(err)?;
        let confidence: f64 = conf.parse().map_err(|e| err(format!("bad confidence: {e}")))?;
        let support: usize = support.parse().map_err(|e| err(format!("bad support: {e}")))?;
        rules.push(Rule {
            body,
            relation,
            confidence,
            support,
            body_support: 0,
        });
    }
    Ok(rules)
}

pub fn save_rules(path: impl AsRef<Path>, rules: &[Rule]) -> Result<()> {
    write_file(path.as_ref(), rules_to_tsv(rules).as_bytes())
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<Vec<Rule>> {
    let path = path.as_ref();
    parse_rules(&path.display().to_string(), &read_file(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MineConfig {
    /// Rules need confidence strictly above this.
    pub min_confidence: f64,
    pub min_support: usize,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            min_confidence: 0.5,
            min_support: 20,
        }
    }
}

/// Every body satisfied by `view` with `?a` = term `a`, `?b` = term `b`.
pub fn satisfied_bodies(view: &MappingView<'_>, a: usize, b: usize) -> Vec<Body> {
    let vars = |flags: [bool; 2]| {
        let mut opts = vec![None];
        if flags[a] {
            opts.push(Some(Var::A));
        }
        if flags[b] {
            opts.push(Some(Var::B));
        }
        opts
    };
    let mut isa_opts: Vec<Option<(Var, String)>> = vec![None];
    isa_opts.extend(view.isa[a].iter().map(|h| Some((Var::A, h.clone()))));
    isa_opts.extend(view.isa[b].iter().map(|h| Some((Var::B, h.clone()))));
    let mut contains_opts: Vec<Option<String>> = vec![None];
    contains_opts.extend(view.contains.iter().cloned().map(Some));

    let mut out = Vec::new();
    for insubj in vars(view.insubj) {
        for inobj in vars(view.inobj) {
            let core = Body {
                insubj,
                inobj,
                isa: None,
                contains: None,
            };
            if !core.is_well_formed() {
                continue;
            }
            for isa in &isa_opts {
                for contains in &contains_opts {
                    out.push(Body {
                        isa: isa.clone(),
                        contains: contains.clone(),
                        ..core.clone()
                    });
                }
            }
        }
    }
    out
}

#[derive(Default)]
struct Counts {
    body: HashMap<Body, usize>,
    head: HashMap<(Body, String), usize>,
}

impl Counts {
    fn add_mapping(&mut self, m: &MetaMapping) {
        let view = MappingView::from(m);
        for (a, b) in [(0, 1), (1, 0)] {
            for body in satisfied_bodies(&view, a, b) {
                if (a, b) == (0, 1) {
                    *self.head.entry((body.clone(), m.relation.clone())).or_default() += 1;
                }
                *self.body.entry(body).or_default() += 1;
            }
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        for (k, v) in other.body {
            *self.body.entry(k).or_default() += v;
        }
        for (k, v) in other.head {
            *self.head.entry(k).or_default() += v;
        }
        self
    }
}

fn count(meta: &MetaKb) -> Counts {
    crate::par::map_chunks(&meta.mappings, 256, |_, chunk| {
        let mut c = Counts::default();
        for m in chunk {
            c.add_mapping(m);
        }
        c
    })
    .into_iter()
    .fold(Counts::default(), Counts::merge)
}

/// Mines every rule of the fixed language with confidence above
/// `min_confidence` and support of at least `min_support`, sorted by
/// confidence, then support (both descending), then rule text.
pub fn mine_rules(meta: &MetaKb, config: MineConfig) -> Vec<Rule> {
    let counts = count(meta);
    let mut rules: Vec<Rule> = counts
        .head
        .into_iter()
        .filter(|(_, support)| *support >= config.min_support.max(1))
        .filter_map(|((body, relation), support)| {
            let body_support = counts.body[&body];
            let confidence = support as f64 / body_support as f64;
            (confidence > config.min_confidence).then_some(Rule {
                body,
                relation,
                confidence,
                support,
                body_support,
            })
        })
        .collect();
    let mut keyed: Vec<(String, Rule)> = rules.drain(..).map(|r| (r.text(), r)).collect();
    keyed.sort_by(|(ta, a), (tb, b)| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(b.support.cmp(&a.support))
            .then_with(|| ta.cmp(tb))
    });
    keyed.into_iter().map(|(_, r)| r).collect()
}
