//! The term language used in configuration files, e.g. `sg(0, 0, 0)`,
//! `phase.perturbed(0.1)`, `pullback(A, r=2, omega(s=2))` or
//! `norm(order=[n,n0,n',m',m,m0], exps=[inf,inf,1,inf,1,1])`, and the
//! resolution of terms into symbols, phases, weights and norm specs.
//!
//! ```text
//! term  := number | ident | list | ident '(' [arg {',' arg}] ')'
//! arg   := [ident '='] term
//! list  := '[' [term {',' term}] ']'
//! ident := [A-Za-z_][A-Za-z0-9_.']*
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::norms::{Exponent, NestedNormSpec};
use crate::phases::PhaseSpec;
use crate::symbols::{Factor, Profile, SymbolClass, SymbolSpec};
use crate::weights::{LinearMap, PhaseSpaceTransform, WeightSpec};

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    /// 1-based `(line, column)` of the first character.
    pub at: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Ident(String),
    List(Vec<Expr>),
    Call { name: String, args: Vec<Arg> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arg {
    pub key: Option<String>,
    pub value: Expr,
}

/// Positions do not take part in comparisons.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Number(v) => write!(f, "{v:?}"),
            ExprKind::Ident(s) => f.write_str(s),
            ExprKind::List(items) => {
                f.write_str("[")?;
                for (k, t) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("]")
            }
            ExprKind::Call { name, args } => {
                write!(f, "{name}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    if let Some(key) = &a.key {
                        write!(f, "{key}=")?;
                    }
                    write!(f, "{}", a.value)?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    origin: (usize, usize),
}

impl Parser {
    fn at(&self, pos: usize) -> (usize, usize) {
        let (mut line, mut col) = self.origin;
        for &c in &self.chars[..pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error(&self, pos: usize, message: impl Into<String>) -> Error {
        let (line, column) = self.at(pos);
        Error::Parse { line, column, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' || (c == '\'' && self.pos > start) {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        if matches!(self.peek(), Some('-' | '+')) {
            self.pos += 1;
        }
        while let Some(c) = self.peek() {
            let exp_sign = matches!(c, '-' | '+') && matches!(self.chars.get(self.pos - 1), Some('e' | 'E'));
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map_err(|_| self.error(start, format!("malformed number `{text}`")))
    }

    fn term(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        let at = self.at(start);
        let kind = match self.peek() {
            None => return Err(self.error(start, "expected a term, found end of input")),
            Some('[') => {
                self.pos += 1;
                let items = self.sequence(']', |p| p.term())?;
                ExprKind::List(items)
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => ExprKind::Number(self.number()?),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let name = self.ident();
                self.skip_ws();
                if self.peek() == Some('(') {
                    self.pos += 1;
                    let args = self.sequence(')', |p| p.arg())?;
                    ExprKind::Call { name, args }
                } else {
                    ExprKind::Ident(name)
                }
            }
            Some(c) => return Err(self.error(start, format!("unexpected `{c}`"))),
        };
        Ok(Expr { kind, at })
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        let save = self.pos;
        if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
            let key = self.ident();
            self.skip_ws();
            if self.peek() == Some('=') {
                self.pos += 1;
                return Ok(Arg { key: Some(key), value: self.term()? });
            }
            self.pos = save;
        }
        Ok(Arg { key: None, value: self.term()? })
    }

    fn sequence<T>(&mut self, close: char, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let mut out = Vec::new();
        self.skip_ws();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(c) => return Err(self.error(self.pos, format!("expected `,` or `{close}`, found `{c}`"))),
                None => return Err(self.error(self.pos, format!("expected `{close}`, found end of input"))),
            }
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        Self::parse_at(src, 1, 1)
    }

    /// Parses `src` as if it started at `(line, column)` of a larger document.
    pub fn parse_at(src: &str, line: usize, column: usize) -> Result<Expr> {
        let mut p = Parser { chars: src.chars().collect(), pos: 0, origin: (line, column) };
        let t = p.term()?;
        p.skip_ws();
        if let Some(c) = p.peek() {
            return Err(p.error(p.pos, format!("trailing input starting at `{c}`")));
        }
        Ok(t)
    }

    pub fn number(v: f64) -> Expr {
        Expr { kind: ExprKind::Number(v), at: (0, 0) }
    }

    pub fn ident(s: impl Into<String>) -> Expr {
        Expr { kind: ExprKind::Ident(s.into()), at: (0, 0) }
    }

    /// The head name of a call or identifier.
    pub fn name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(s) | ExprKind::Call { name: s, .. } => Some(s),
            _ => None,
        }
    }

    fn args(&self) -> &[Arg] {
        match &self.kind {
            ExprKind::Call { args, .. } => args,
            _ => &[],
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let (line, column) = self.at;
        Error::Parse { line, column, message: message.into() }
    }

    fn unknown(&self, what: &str) -> Error {
        self.error(format!("unknown {what} `{}`", self.name().map(str::to_owned).unwrap_or_else(|| self.to_string())))
    }

    pub fn as_number(&self) -> Result<f64> {
        match self.kind {
            ExprKind::Number(v) => Ok(v),
            _ => Err(self.error(format!("expected a number, found `{self}`"))),
        }
    }

    pub fn as_usize(&self) -> Result<usize> {
        let v = self.as_number()?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(self.error(format!("expected a non-negative integer, found `{self}`")));
        }
        Ok(v as usize)
    }

    pub fn as_list(&self) -> Result<&[Expr]> {
        match &self.kind {
            ExprKind::List(items) => Ok(items),
            _ => Err(self.error(format!("expected a list, found `{self}`"))),
        }
    }

    pub fn as_exponent(&self) -> Result<Exponent> {
        match &self.kind {
            ExprKind::Ident(s) if s == "inf" => Ok(Exponent::INF),
            ExprKind::Number(v) => Exponent::new(*v).map_err(|e| self.error(e.to_string())),
            _ => Err(self.error(format!("expected an exponent, found `{self}`"))),
        }
    }
}

/// Positional and keyword arguments of a call, consumed by name.
struct Args<'a> {
    call: &'a Expr,
    positional: Vec<&'a Expr>,
    keyword: Vec<(&'a str, &'a Expr)>,
    next: usize,
}

impl<'a> Args<'a> {
    fn of(call: &'a Expr, allowed: &[&str]) -> Result<Self> {
        let mut positional = Vec::new();
        let mut keyword = Vec::new();
        for a in call.args() {
            match &a.key {
                Some(k) if !allowed.contains(&k.as_str()) => {
                    return Err(a.value.error(format!("unexpected argument `{k}` to `{}`", call.name().unwrap_or(""))))
                }
                Some(k) => keyword.push((k.as_str(), &a.value)),
                None => positional.push(&a.value),
            }
        }
        Ok(Self { call, positional, keyword, next: 0 })
    }

    /// Next positional argument, or the keyword one named `key`.
    fn take(&mut self, key: &str) -> Option<&'a Expr> {
        if let Some(&(_, t)) = self.keyword.iter().find(|(k, _)| *k == key) {
            return Some(t);
        }
        let t = self.positional.get(self.next).copied();
        if t.is_some() {
            self.next += 1;
        }
        t
    }

    /// Optional arguments are keyword-only.
    fn keyword(&self, key: &str) -> Option<&'a Expr> {
        self.keyword.iter().find(|(k, _)| *k == key).map(|&(_, t)| t)
    }

    fn require(&mut self, key: &str) -> Result<&'a Expr> {
        self.take(key).ok_or_else(|| self.call.error(format!("`{}` needs argument `{key}`", self.call.name().unwrap_or(""))))
    }

    fn finish(self) -> Result<()> {
        match self.positional.get(self.next) {
            Some(t) => Err(t.error(format!("too many arguments to `{}`", self.call.name().unwrap_or("")))),
            None => Ok(()),
        }
    }
}

/// Resolves a symbol name. `arity` applies to `one`, `zero` and `peaked`;
/// `sg` and `bracket` are bilinear.
pub fn resolve_symbol(t: &Expr, arity: usize) -> Result<SymbolSpec> {
    let name = t.name().ok_or_else(|| t.error(format!("expected a symbol, found `{t}`")))?;
    let s = match name {
        "one" => {
            Args::of(t, &[])?.finish()?;
            SymbolSpec::one(arity)
        }
        "zero" => {
            Args::of(t, &[])?.finish()?;
            SymbolSpec::zero(arity)
        }
        "peaked" => {
            let mut a = Args::of(t, &["a"])?;
            let v = a.require("a")?.as_number()?;
            a.finish()?;
            SymbolSpec::peaked(v, arity)
        }
        "sg" => {
            let mut a = Args::of(t, &["m1", "m2", "m3"])?;
            let m = [a.require("m1")?.as_number()?, a.require("m2")?.as_number()?, a.require("m3")?.as_number()?];
            a.finish()?;
            bilinear(t, arity)?;
            SymbolSpec::sg(m[0], m[1], m[2])
        }
        // ⟨ξ⟩^s, the bilinear symbol with growth in the first frequency only
        "bracket" => {
            let mut a = Args::of(t, &["s"])?;
            let s = a.require("s")?.as_number()?;
            a.finish()?;
            bilinear(t, arity)?;
            SymbolSpec::product(
                2,
                vec![Factor::new(Profile::One), Factor::new(Profile::Bracket(s)), Factor::new(Profile::One)],
                SymbolClass::Sg { m1: s, m2: 0.0, m3: 0.0 },
                format!("bracket({s})"),
            )?
        }
        _ => return Err(t.unknown("symbol")),
    };
    Ok(s)
}

fn bilinear(t: &Expr, arity: usize) -> Result<()> {
    if arity != 2 {
        return Err(t.error(format!("`{}` is bilinear but the operator has arity {arity}", t.name().unwrap_or(""))));
    }
    Ok(())
}

pub fn resolve_phase(t: &Expr) -> Result<PhaseSpec> {
    let name = t.name().ok_or_else(|| t.error(format!("expected a phase, found `{t}`")))?;
    let mut a = Args::of(t, &["eps", "c"])?;
    let p = match name {
        "phase.linear" => PhaseSpec::linear(),
        "phase.zero" => PhaseSpec::zero(),
        "phase.perturbed" => PhaseSpec::perturbed(a.require("eps")?.as_number()?),
        "phase.shifted" => PhaseSpec::shifted(a.require("c")?.as_number()?),
        _ => return Err(t.unknown("phase")),
    };
    a.finish()?;
    Ok(p)
}

/// Resolves a weight on `ℝ^dim`. Tensor factors split the dimension evenly
/// unless they carry their own `dim=`.
pub fn resolve_weight(t: &Expr, dim: usize) -> Result<WeightSpec> {
    let name = t.name().ok_or_else(|| t.error(format!("expected a weight, found `{t}`")))?;
    let w = match name {
        "one" => {
            Args::of(t, &[])?.finish()?;
            WeightSpec::constant(dim)
        }
        "omega" => {
            let mut a = Args::of(t, &["s", "dim"])?;
            let s = a.require("s")?.as_number()?;
            let d = a.keyword("dim").map(Expr::as_usize).transpose()?.unwrap_or(dim);
            a.finish()?;
            WeightSpec::omega(s, d)
        }
        "mixed" => {
            let mut a = Args::of(t, &["s1", "s2"])?;
            let (s1, s2) = (a.require("s1")?.as_number()?, a.require("s2")?.as_number()?);
            a.finish()?;
            match dim {
                2 => WeightSpec::mixed_section(s1, s2, 1),
                3 => WeightSpec::Mixed { s1, s2, d: 1 },
                _ => return Err(t.error(format!("`mixed` lives on dimension 2 or 3, not {dim}"))),
            }
        }
        "tensor" => {
            let parts = t.args();
            if parts.is_empty() || parts.iter().any(|a| a.key.is_some()) {
                return Err(t.error("`tensor` takes one or more weights"));
            }
            if dim % parts.len() != 0 {
                return Err(t.error(format!("cannot split dimension {dim} into {} factors", parts.len())));
            }
            let each = dim / parts.len();
            WeightSpec::Tensor(parts.iter().map(|a| resolve_weight(&a.value, each)).collect::<Result<_>>()?)
        }
        "pullback" => {
            let mut a = Args::of(t, &["map", "r", "d", "w"])?;
            let map = a.require("map")?;
            let r = a.require("r")?.as_usize()?;
            let d = a.keyword("d").map(Expr::as_usize).transpose()?.unwrap_or(1);
            let transform = match map.name() {
                Some("A") => PhaseSpaceTransform::forward(r, d),
                Some("B") => PhaseSpaceTransform::inverse(r, d),
                _ => return Err(map.error(format!("expected the map `A` or `B`, found `{map}`"))),
            };
            let inner = resolve_weight(a.require("w")?, transform.dim())?;
            a.finish()?;
            if transform.dim() != dim {
                return Err(t.error(format!("pullback acts on dimension {} but {dim} is required", transform.dim())));
            }
            WeightSpec::pullback(inner, LinearMap::Transform(transform)).map_err(|e| t.error(e.to_string()))?
        }
        _ => return Err(t.unknown("weight")),
    };
    if w.domain_dim() != dim {
        return Err(t.error(format!("weight has dimension {} but {dim} is required", w.domain_dim())));
    }
    Ok(w)
}

/// Index names as written in norm specs, mapped onto Gabor-matrix axes:
/// `m'`, `n'` are the output indices and `m`, `n`, `m0`, `n0` the input ones.
pub fn matrix_axis_name(name: &str) -> &str {
    match name {
        "m'" => "i",
        "n'" => "j",
        "m" => "m1",
        "n" => "n1",
        "m0" => "m2",
        "n0" => "n2",
        other => other,
    }
}

/// `norm(order=[...], exps=[...])` with optional `weights=[idx=weight, ...]`
/// given as `w_<index>=<weight>` keyword arguments.
pub fn resolve_norm(t: &Expr) -> Result<NestedNormSpec> {
    if t.name() != Some("norm") {
        return Err(t.unknown("norm"));
    }
    let mut order = None;
    let mut exps = None;
    let mut weights = Vec::new();
    for a in t.args() {
        match a.key.as_deref() {
            Some("order") => order = Some(&a.value),
            Some("exps") => exps = Some(&a.value),
            Some(k) if k.starts_with("w_") => weights.push((&k[2..], &a.value)),
            _ => return Err(a.value.error("`norm` takes order=[...], exps=[...] and w_<index>=<weight>")),
        }
    }
    let order = order.ok_or_else(|| t.error("`norm` needs order=[...]"))?;
    let exps = exps.ok_or_else(|| t.error("`norm` needs exps=[...]"))?;
    let names = order
        .as_list()?
        .iter()
        .map(|n| match &n.kind {
            ExprKind::Ident(s) => Ok(matrix_axis_name(s).to_owned()),
            _ => Err(n.error(format!("expected an index name, found `{n}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let exponents = exps.as_list()?.iter().map(Expr::as_exponent).collect::<Result<Vec<_>>>()?;
    let mut spec = NestedNormSpec::new(names, exponents).map_err(|e| t.error(e.to_string()))?;
    for (idx, w) in weights {
        spec = spec.with_weight(matrix_axis_name(idx), resolve_weight(w, 1)?).map_err(|e| w.error(e.to_string()))?;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        for src in [
            "omega(s=2)",
            "tensor(omega(2), omega(2), omega(2))",
            "pullback(A, r=2, omega(s=2))",
            "norm(order=[n,n0,n',m',m,m0], exps=[inf,inf,1,inf,1,1])",
            "sg(0, 0, 0)",
            "one",
            "peaked(1.5)",
            "phase.linear",
            "phase.perturbed(0.1)",
            "[1, -2.5e-3, []]",
        ] {
            let t = Expr::parse(src).unwrap();
            assert_eq!(Expr::parse(&t.to_string()).unwrap(), t, "{src}");
        }
    }

    #[test]
    fn error_positions() {
        match Expr::parse("sg(0,\n  0 0)") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("{other:?}"),
        }
        match Expr::parse_at("omega(s=2", 4, 10) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 19)),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("1.2.3").is_err());
        assert!(Expr::parse("f(x) y").is_err());
    }

    #[test]
    fn unknown_names_located() {
        let t = Expr::parse_at("sgg(0,0,0)", 3, 7).unwrap();
        match resolve_symbol(&t, 2) {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (3, 7));
                assert!(message.contains("sgg"));
            }
            other => panic!("{other:?}"),
        }
        assert!(resolve_phase(&Expr::parse("phase.curly").unwrap()).is_err());
        assert!(resolve_weight(&Expr::parse("omegaa(2)").unwrap(), 2).is_err());
    }

    #[test]
    fn resolves_library() {
        let s = resolve_symbol(&Expr::parse("sg(m1=1, 0, 2)").unwrap(), 2).unwrap();
        assert_eq!(s.class(), &SymbolClass::Sg { m1: 1.0, m2: 0.0, m3: 2.0 });
        assert!(resolve_symbol(&Expr::parse("sg(0,0,0)").unwrap(), 1).is_err());
        assert!(resolve_symbol(&Expr::parse("one(3)").unwrap(), 1).is_err());
        let p = resolve_symbol(&Expr::parse("peaked(2)").unwrap(), 1).unwrap();
        assert!((p.eval(&[0.5, 0.0]).re - (-std::f64::consts::PI * 0.5).exp()).abs() < 1e-15);
        assert_eq!(resolve_phase(&Expr::parse("phase.perturbed(eps=0.1)").unwrap()).unwrap().name(), "phase.perturbed(0.1)");

        let w = resolve_weight(&Expr::parse("tensor(omega(2), omega(2), omega(2))").unwrap(), 6).unwrap();
        assert_eq!(w, WeightSpec::big_omega(2.0, 2, 1));
        let pb = resolve_weight(&Expr::parse("pullback(A, r=2, omega(s=2))").unwrap(), 6).unwrap();
        let x = [1.0, 0.5, -2.0, 0.3, 0.0, 1.0];
        assert!((pb.eval(&x).unwrap() - WeightSpec::omega(2.0, 6).eval(&x).unwrap()).abs() < 1e-12);
        assert!(resolve_weight(&Expr::parse("pullback(A, r=2, omega(2))").unwrap(), 4).is_err());

        let n = resolve_norm(&Expr::parse("norm(order=[n,n0,n',m',m,m0], exps=[inf,inf,1,inf,1,1], w_n=omega(1))").unwrap()).unwrap();
        assert_eq!(n.index_order, ["n1", "n2", "j", "i", "m1", "m2"]);
        assert_eq!(n.exponents[0], Exponent::INF);
        assert!(n.weights[0].is_some());
        assert!(resolve_norm(&Expr::parse("norm(order=[n], exps=[0.5])").unwrap()).is_err());
    }

    fn arb_term() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Expr::number),
            "[a-z_][a-z0-9_.]{0,6}'?".prop_map(Expr::ident),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(|v| Expr { kind: ExprKind::List(v), at: (0, 0) }),
                (
                    "[a-z][a-z0-9_.]{0,6}",
                    prop::collection::vec((prop::option::of("[a-z][a-z0-9_]{0,3}"), inner), 0..4)
                )
                    .prop_map(|(name, args)| Expr {
                        kind: ExprKind::Call {
                            name,
                            args: args.into_iter().map(|(key, value)| Arg { key, value }).collect()
                        },
                        at: (0, 0)
                    }),
            ]
        })
    }

    proptest! {
        #[test]
        fn round_trip(t in arb_term()) {
            let s = t.to_string();
            prop_assert_eq!(Expr::parse(&s).unwrap(), t);
        }
    }
}
