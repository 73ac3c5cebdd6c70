//! Conditional commitment contracts for popsicle games.
//!
//! ```text
//! contract := ["owner" int] ["sweetener" rational] {"if" pred "then" act} "else" act
//! pred     := conj {"or" conj}
//! conj     := unary {"and" unary}
//! unary    := "not" unary | "(" pred ")" | clause
//! clause   := "exists" "vendor" ident "!=" "OWNER" ":" "committed" "(" ident ")" cmp rational
//!           | "committed" "(" int ")" cmp rational
//!           | "buyer_pledges" "(" "i*" "=" int "," "q" "=" rational ")"
//! cmp      := "==" | "!="
//! act      := "commit_price" "(" rational ")" | "pledge" "(" int "," rational ")"
//! ```
//!
//! `#` starts a comment. The owner defaults to vendor 1.
//!
//! Guards are evaluated per branch of an expanded game, i.e. per copy of the
//! base game below the inner commitment moves. `committed(j)` is the set of
//! prices vendor `j` plays in some subgame-perfect equilibrium of that copy;
//! `committed(j) == v` holds iff that set is `{v}` and `committed(j) != v`
//! iff it contains a price other than `v`. `buyer_pledges(i*=j, q=v)` holds
//! iff every buyer move of the copy is forced to `(j, v)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::commitment::{committed_actions, Cut, CutCompiler};
use crate::equilibrium::{SpeOptions, SpeSolver};
use crate::error::{Error, Result};
use crate::game::{ActionLabel, GameTree, InfoSetId, NodeId, PlayerId};
use crate::popsicle::{BuyerChoice, PopsicleParams};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    /// Some vendor other than the owner satisfies `committed(var) op value`.
    ExistsOther { var: String, op: CmpOp, value: Rational },
    Committed { vendor: usize, op: CmpOp, value: Rational },
    BuyerPledges { vendor: usize, q: Rational },
    Not(Box<Predicate>),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleAction {
    CommitPrice(Rational),
    Pledge { vendor: usize, q: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub guard: Predicate,
    pub action: RuleAction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractAst {
    pub owner: PlayerId,
    pub sweetener: Option<Rational>,
    pub rules: Vec<Rule>,
    pub else_action: RuleAction,
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    EqEq,
    NotEq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Assign => f.write_str("`=`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::NotEq => f.write_str("`!=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let bump = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            bump(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump(1, &mut i, &mut col);
            }
            if i < chars.len() && chars[i] == '*' {
                bump(1, &mut i, &mut col);
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            bump(1, &mut i, &mut col);
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '/') {
                bump(1, &mut i, &mut col);
            }
            if i < chars.len() && (chars[i] == '.' || chars[i] == 'e' || chars[i] == 'E') {
                return Err(syntax(l0, c0, "decimal numbers are not accepted; write a/b"));
            }
            Tok::Number(chars[start..i].iter().collect())
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (t, n) = match (c, two.as_str()) {
                (_, "==") => (Tok::EqEq, 2),
                (_, "!=") => (Tok::NotEq, 2),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('=', _) => (Tok::Assign, 1),
                _ => return Err(syntax(l0, c0, format!("unexpected character `{c}`"))),
            };
            bump(n, &mut i, &mut col);
            t
        };
        out.push(Token {
            tok,
            line: l0,
            column: c0,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> Error {
        let t = self.peek();
        syntax(t.line, t.column, message)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.is_kw(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{kw}`, found {}", self.peek().tok)))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.err_here(format!("expected {tok}, found {}", self.peek().tok)))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => Err(self.err_here(format!("expected a name, found {t}"))),
        }
    }

    fn rational(&mut self) -> Result<Rational> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(s) => {
                self.next();
                rational::parse(s).map_err(|_| syntax(t.line, t.column, format!("invalid rational `{s}`")))
            }
            other => Err(syntax(t.line, t.column, format!("expected a rational, found {other}"))),
        }
    }

    fn int(&mut self) -> Result<usize> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(s) => {
                self.next();
                s.parse()
                    .map_err(|_| syntax(t.line, t.column, format!("expected a non-negative integer, found `{s}`")))
            }
            other => Err(syntax(t.line, t.column, format!("expected an integer, found {other}"))),
        }
    }

    fn cmp(&mut self) -> Result<CmpOp> {
        match self.peek().tok {
            Tok::EqEq => {
                self.next();
                Ok(CmpOp::Eq)
            }
            Tok::NotEq => {
                self.next();
                Ok(CmpOp::Ne)
            }
            ref t => Err(self.err_here(format!("expected `==` or `!=`, found {t}"))),
        }
    }

    fn contract(&mut self) -> Result<ContractAst> {
        let mut owner = PlayerId(1);
        if self.is_kw("owner") {
            self.next();
            owner = PlayerId(self.int()?);
        }
        let mut sweetener = None;
        if self.is_kw("sweetener") {
            self.next();
            sweetener = Some(self.rational()?);
        }
        let mut rules = Vec::new();
        while self.is_kw("if") {
            self.next();
            let guard = self.pred()?;
            self.expect_kw("then")?;
            let action = self.action()?;
            rules.push(Rule { guard, action });
        }
        if !self.is_kw("else") {
            let msg = if self.peek().tok == Tok::Eof {
                "missing `else` rule".to_string()
            } else {
                format!("expected `if` or `else`, found {}", self.peek().tok)
            };
            return Err(self.err_here(msg));
        }
        self.next();
        let else_action = self.action()?;
        if self.peek().tok != Tok::Eof {
            return Err(self.err_here(format!("unexpected {} after `else` rule", self.peek().tok)));
        }
        Ok(ContractAst {
            owner,
            sweetener,
            rules,
            else_action,
        })
    }

    fn action(&mut self) -> Result<RuleAction> {
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let a = match name.as_str() {
            "commit_price" => RuleAction::CommitPrice(self.rational()?),
            "pledge" => {
                let vendor = self.int()?;
                self.expect(Tok::Comma)?;
                RuleAction::Pledge {
                    vendor,
                    q: self.rational()?,
                }
            }
            other => {
                let t = &self.toks[self.pos - 2];
                return Err(syntax(t.line, t.column, format!("unknown action `{other}`")));
            }
        };
        self.expect(Tok::RParen)?;
        Ok(a)
    }

    fn pred(&mut self) -> Result<Predicate> {
        let mut left = self.conj()?;
        while self.is_kw("or") {
            self.next();
            left = Predicate::Or(Box::new(left), Box::new(self.conj()?));
        }
        Ok(left)
    }

    fn conj(&mut self) -> Result<Predicate> {
        let mut left = self.unary()?;
        while self.is_kw("and") {
            self.next();
            left = Predicate::And(Box::new(left), Box::new(self.unary()?));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Predicate> {
        if self.is_kw("not") {
            self.next();
            return Ok(Predicate::Not(Box::new(self.unary()?)));
        }
        if self.peek().tok == Tok::LParen {
            self.next();
            let p = self.pred()?;
            self.expect(Tok::RParen)?;
            return Ok(p);
        }
        self.clause()
    }

    fn clause(&mut self) -> Result<Predicate> {
        let start = self.peek().clone();
        let name = self.ident()?;
        match name.as_str() {
            "exists" => {
                self.expect_kw("vendor")?;
                let var = self.ident()?;
                self.expect(Tok::NotEq)?;
                self.expect_kw("OWNER")?;
                self.expect(Tok::Colon)?;
                self.expect_kw("committed")?;
                self.expect(Tok::LParen)?;
                let at = self.peek().clone();
                let used = self.ident()?;
                if used != var {
                    return Err(syntax(at.line, at.column, format!("unbound vendor variable `{used}`")));
                }
                self.expect(Tok::RParen)?;
                let op = self.cmp()?;
                let value = self.rational()?;
                Ok(Predicate::ExistsOther { var, op, value })
            }
            "committed" => {
                self.expect(Tok::LParen)?;
                let vendor = self.int()?;
                self.expect(Tok::RParen)?;
                let op = self.cmp()?;
                Ok(Predicate::Committed {
                    vendor,
                    op,
                    value: self.rational()?,
                })
            }
            "buyer_pledges" => {
                self.expect(Tok::LParen)?;
                self.expect_kw("i*")?;
                self.expect(Tok::Assign)?;
                let vendor = self.int()?;
                self.expect(Tok::Comma)?;
                self.expect_kw("q")?;
                self.expect(Tok::Assign)?;
                let q = self.rational()?;
                self.expect(Tok::RParen)?;
                Ok(Predicate::BuyerPledges { vendor, q })
            }
            other => Err(syntax(start.line, start.column, format!("unknown condition `{other}`"))),
        }
    }
}

/// Parses contract text; no instance checks (see [`check`]).
pub fn parse(source: &str) -> Result<ContractAst> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    p.contract()
}

/// Parses and type-checks against an instance.
pub fn parse_for(source: &str, params: &PopsicleParams) -> Result<ContractAst> {
    let ast = parse(source)?;
    check(&ast, params)?;
    Ok(ast)
}

// ---------------------------------------------------------------- printer

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::ExistsOther { var, op, value } => write!(
                f,
                "exists vendor {var} != OWNER : committed({var}) {op} {}",
                rational::format(value)
            ),
            Predicate::Committed { vendor, op, value } => {
                write!(f, "committed({vendor}) {op} {}", rational::format(value))
            }
            Predicate::BuyerPledges { vendor, q } => {
                write!(f, "buyer_pledges(i*={vendor}, q={})", rational::format(q))
            }
            Predicate::Not(p) => match **p {
                Predicate::And(..) | Predicate::Or(..) | Predicate::ExistsOther { .. } => write!(f, "not ({p})"),
                _ => write!(f, "not {p}"),
            },
            Predicate::And(a, b) => write!(f, "({a} and {b})"),
            Predicate::Or(a, b) => write!(f, "({a} or {b})"),
        }
    }
}

impl fmt::Display for RuleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleAction::CommitPrice(v) => write!(f, "commit_price({})", rational::format(v)),
            RuleAction::Pledge { vendor, q } => write!(f, "pledge({vendor}, {})", rational::format(q)),
        }
    }
}

impl fmt::Display for ContractAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "owner {}", self.owner.0)?;
        if let Some(e) = &self.sweetener {
            writeln!(f, "sweetener {}", rational::format(e))?;
        }
        for r in &self.rules {
            writeln!(f, "if {} then {}", r.guard, r.action)?;
        }
        writeln!(f, "else {}", self.else_action)
    }
}

// ---------------------------------------------------------------- checking

fn vendor_in_range(j: usize, params: &PopsicleParams, what: &str) -> Result<()> {
    if j == 0 || j > params.n {
        return Err(Error::Type(format!("{what}: vendor {j} is not in 1..={}", params.n)));
    }
    Ok(())
}

fn on_grid(v: &Rational, grid: &[Rational], what: &str) -> Result<()> {
    if !grid.contains(v) {
        return Err(Error::Type(format!(
            "{what}: {} is not on the grid {{{}}}",
            rational::format(v),
            rational::format_list(grid)
        )));
    }
    Ok(())
}

fn check_pred(p: &Predicate, owner: PlayerId, params: &PopsicleParams) -> Result<()> {
    match p {
        Predicate::ExistsOther { value, .. } => on_grid(value, &params.prices, "committed price"),
        Predicate::Committed { vendor, value, .. } => {
            vendor_in_range(*vendor, params, "committed")?;
            if PlayerId(*vendor) == owner {
                return Err(Error::Type(format!("guard refers to the owner (vendor {vendor}) itself")));
            }
            on_grid(value, &params.prices, "committed price")
        }
        Predicate::BuyerPledges { vendor, q } => {
            vendor_in_range(*vendor, params, "buyer_pledges")?;
            if owner == PlayerId::BUYER {
                return Err(Error::Type("a buyer contract cannot condition on its own pledge".into()));
            }
            on_grid(q, &params.effective_q(), "pledged payment")
        }
        Predicate::Not(a) => check_pred(a, owner, params),
        Predicate::And(a, b) | Predicate::Or(a, b) => {
            check_pred(a, owner, params)?;
            check_pred(b, owner, params)
        }
    }
}

fn check_action(a: &RuleAction, owner: PlayerId, params: &PopsicleParams) -> Result<()> {
    match a {
        RuleAction::CommitPrice(v) => {
            if owner == PlayerId::BUYER {
                return Err(Error::Type("the buyer posts no price; use pledge".into()));
            }
            on_grid(v, &params.prices, "commit_price")
        }
        RuleAction::Pledge { vendor, q } => {
            if owner != PlayerId::BUYER {
                return Err(Error::Type(format!("vendor {} cannot pledge for the buyer", owner.0)));
            }
            vendor_in_range(*vendor, params, "pledge")?;
            on_grid(q, &params.effective_q(), "pledge")
        }
    }
}

/// Type-checks a contract against an instance.
pub fn check(ast: &ContractAst, params: &PopsicleParams) -> Result<()> {
    if ast.owner.0 > params.n {
        return Err(Error::Type(format!("owner {} is not a player", ast.owner.0)));
    }
    if let Some(e) = &ast.sweetener {
        if !rational::in_unit_interval(e) || *e == rational::zero() || *e == rational::one() {
            return Err(Error::Type("sweetener must lie strictly between 0 and 1".into()));
        }
    }
    for r in &ast.rules {
        check_pred(&r.guard, ast.owner, params)?;
        check_action(&r.action, ast.owner, params)?;
    }
    check_action(&ast.else_action, ast.owner, params)
}

impl ContractAst {
    /// Players whose commitments the guards read.
    pub fn referenced_players(&self, n: usize) -> BTreeSet<PlayerId> {
        fn walk(p: &Predicate, owner: PlayerId, n: usize, out: &mut BTreeSet<PlayerId>) {
            match p {
                Predicate::ExistsOther { .. } => out.extend((1..=n).map(PlayerId).filter(|&j| j != owner)),
                Predicate::Committed { vendor, .. } => {
                    out.insert(PlayerId(*vendor));
                }
                Predicate::BuyerPledges { .. } => {
                    out.insert(PlayerId::BUYER);
                }
                Predicate::Not(a) => walk(a, owner, n, out),
                Predicate::And(a, b) | Predicate::Or(a, b) => {
                    walk(a, owner, n, out);
                    walk(b, owner, n, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        for r in &self.rules {
            walk(&r.guard, self.owner, n, &mut out);
        }
        out
    }
}

// ---------------------------------------------------------------- builtins

fn require(grid: &[Rational], v: &Rational, what: &str) -> Result<()> {
    if !grid.contains(v) {
        return Err(Error::GridIncompatible(format!(
            "{what} must contain {} (grid is {{{}}})",
            rational::format(v),
            rational::format_list(grid)
        )));
    }
    Ok(())
}

fn attack_contract(params: &PopsicleParams, q: Rational, sweetener: Option<Rational>) -> Result<ContractAst> {
    require(&params.prices, &rational::zero(), "P")?;
    require(&params.prices, &rational::one(), "P")?;
    require(&params.effective_q(), &q, "Q (with side payments enabled)")?;
    let ast = ContractAst {
        owner: PlayerId(1),
        sweetener,
        rules: vec![
            Rule {
                guard: Predicate::ExistsOther {
                    var: "j".into(),
                    op: CmpOp::Ne,
                    value: rational::one(),
                },
                action: RuleAction::CommitPrice(rational::zero()),
            },
            Rule {
                guard: Predicate::BuyerPledges { vendor: 1, q },
                action: RuleAction::CommitPrice(rational::zero()),
            },
        ],
        else_action: RuleAction::CommitPrice(rational::one()),
    };
    check(&ast, params)?;
    Ok(ast)
}

/// Vendor 1's attack: price 0 if another vendor may price below 1 or the
/// buyer pledged `(1, 1)`, else price 1.
pub fn builtin_attack_contract(params: &PopsicleParams) -> Result<ContractAst> {
    attack_contract(params, rational::one(), None)
}

/// The attack with the buyer pledge lowered to `1 - eps`.
pub fn builtin_sweetened(params: &PopsicleParams, eps: &Rational) -> Result<ContractAst> {
    if *eps <= rational::zero() || *eps >= rational::one() {
        return Err(Error::InvalidParams(format!(
            "sweetener must lie strictly between 0 and 1, got {}",
            rational::format(eps)
        )));
    }
    attack_contract(params, rational::one() - eps, Some(eps.clone()))
}

// ---------------------------------------------------------------- compiling

/// A contract bound to an instance, usable as a commitment catalog entry.
#[derive(Clone, Debug)]
pub struct CompiledContract {
    pub name: String,
    pub ast: ContractAst,
    pub params: PopsicleParams,
    pub solver: SpeOptions,
}

impl CompiledContract {
    pub fn new(name: impl Into<String>, ast: ContractAst, params: PopsicleParams) -> Result<Self> {
        check(&ast, &params)?;
        Ok(CompiledContract {
            name: name.into(),
            ast,
            params,
            solver: SpeOptions::default(),
        })
    }
}

/// Roots of the base-game copies below the commitment levels, each with the
/// owners of the commitment moves above it.
fn branch_roots(tree: &GameTree) -> Vec<(NodeId, BTreeSet<PlayerId>)> {
    let mut out = Vec::new();
    let mut stack = vec![(tree.root(), BTreeSet::new())];
    while let Some((v, above)) = stack.pop() {
        match tree.decision(v) {
            Some(d) if d.commitment.is_some() => {
                let mut next = above.clone();
                next.insert(d.owner);
                for e in d.actions.iter().rev() {
                    stack.push((e.child, next.clone()));
                }
            }
            _ => out.push((v, above)),
        }
    }
    out
}

struct Branch<'a, 's> {
    solver: &'s SpeSolver<'a>,
    params: &'a PopsicleParams,
    root: NodeId,
    prices: BTreeMap<usize, BTreeSet<Rational>>,
}

impl Branch<'_, '_> {
    fn committed(&mut self, j: usize) -> Result<&BTreeSet<Rational>> {
        if !self.prices.contains_key(&j) {
            let labels = committed_actions(self.solver, self.root, self.params.vendor(j))?;
            let set = labels.into_iter().map(|l| self.params.price_of(l).clone()).collect();
            self.prices.insert(j, set);
        }
        Ok(&self.prices[&j])
    }

    fn test(&mut self, j: usize, op: CmpOp, v: &Rational) -> Result<bool> {
        let set = self.committed(j)?;
        Ok(match op {
            CmpOp::Eq => set.len() == 1 && set.contains(v),
            CmpOp::Ne => set.iter().any(|w| w != v),
        })
    }

    fn pledged(&self, vendor: usize, q: &Rational) -> bool {
        let Some(label) = self.params.buyer_label(&BuyerChoice::new(vendor, q.clone())) else {
            return false;
        };
        let game = self.solver.game();
        let mut any = false;
        for v in self.root..game.subtree_end(self.root) {
            if let Some(d) = game.decision(v) {
                if d.owner == PlayerId::BUYER {
                    any = true;
                    if d.actions.len() != 1 || d.actions[0].label != label {
                        return false;
                    }
                }
            }
        }
        any
    }

    fn eval(&mut self, p: &Predicate, owner: PlayerId) -> Result<bool> {
        Ok(match p {
            Predicate::ExistsOther { op, value, .. } => {
                for j in 1..=self.params.n {
                    if PlayerId(j) != owner && self.test(j, *op, value)? {
                        return Ok(true);
                    }
                }
                false
            }
            Predicate::Committed { vendor, op, value } => self.test(*vendor, *op, value)?,
            Predicate::BuyerPledges { vendor, q } => self.pledged(*vendor, q),
            Predicate::Not(a) => !self.eval(a, owner)?,
            Predicate::And(a, b) => self.eval(a, owner)? && self.eval(b, owner)?,
            Predicate::Or(a, b) => self.eval(a, owner)? || self.eval(b, owner)?,
        })
    }
}

impl ContractAst {
    /// The action selected in each branch of `tree`, keyed by branch root.
    pub fn decide(&self, tree: &GameTree, params: &PopsicleParams, options: &SpeOptions) -> Result<Vec<(NodeId, RuleAction)>> {
        let needed = self.referenced_players(params.n);
        let solver = SpeSolver::new(tree, options.clone());
        let mut out = Vec::new();
        for (root, above) in branch_roots(tree) {
            if let Some(p) = needed.iter().find(|p| !above.contains(p)) {
                return Err(Error::ContractScope(format!(
                    "the contract of player {} reads player {p}'s commitment, which is not made before it \
                     (place player {} earlier in the ordering than player {p})",
                    self.owner, self.owner
                )));
            }
            let mut b = Branch {
                solver: &solver,
                params,
                root,
                prices: BTreeMap::new(),
            };
            let mut chosen = None;
            for r in &self.rules {
                if b.eval(&r.guard, self.owner)? {
                    chosen = Some(r.action.clone());
                    break;
                }
            }
            out.push((root, chosen.unwrap_or_else(|| self.else_action.clone())));
        }
        Ok(out)
    }

    /// The owner's cut of `tree` (an expanded game over `params`).
    pub fn compile_to_cut(&self, tree: &GameTree, params: &PopsicleParams, options: &SpeOptions) -> Result<Cut> {
        check(self, params)?;
        let mut kept: BTreeMap<InfoSetId, Vec<ActionLabel>> = BTreeMap::new();
        for (root, action) in self.decide(tree, params, options)? {
            let label = match &action {
                RuleAction::CommitPrice(v) => params.price_label(v),
                RuleAction::Pledge { vendor, q } => params.buyer_label(&BuyerChoice::new(*vendor, q.clone())),
            }
            .ok_or_else(|| Error::Type(format!("`{action}` is not an action of this instance")))?;
            for v in root..tree.subtree_end(root) {
                if let Some(d) = tree.decision(v) {
                    if d.owner == self.owner {
                        if !d.actions.iter().any(|e| e.label == label) {
                            return Err(Error::CutMismatch(format!(
                                "`{action}` was already removed at information set {}",
                                d.info_set
                            )));
                        }
                        kept.insert(d.info_set, vec![label]);
                    }
                }
            }
        }
        Cut::new(tree, self.owner, kept)
    }
}

impl CutCompiler for CompiledContract {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn compile(&self, tree: &GameTree, owner: PlayerId) -> Result<Cut> {
        if owner != self.ast.owner {
            return Err(Error::ContractScope(format!(
                "contract is owned by player {}, not {owner}",
                self.ast.owner
            )));
        }
        self.ast.compile_to_cut(tree, &self.params, &self.solver)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    const THM2: &str = "\
# vendor 1
if exists vendor j != OWNER : committed(j) != 1 then commit_price(0)
if buyer_pledges(i*=1, q=1) then commit_price(0)
else commit_price(1)
";

    fn params(n: usize) -> PopsicleParams {
        PopsicleParams::new(n, ratio(1, 2), ratio(1, 4), vec![int(0), ratio(1, 2), int(1)], vec![int(0), int(1)]).unwrap()
    }

    #[test]
    fn parses_the_attack_contract() {
        let ast = parse(THM2).unwrap();
        assert_eq!(ast.rules.len(), 2);
        assert_eq!(ast, builtin_attack_contract(&params(2)).unwrap());
        assert_eq!(parse(&ast.to_string()).unwrap(), ast);
        assert_eq!(
            ast.referenced_players(3),
            BTreeSet::from([PlayerId(0), PlayerId(2), PlayerId(3)])
        );
    }

    #[test]
    fn single_else() {
        let ast = parse("else commit_price(1/2)").unwrap();
        assert!(ast.rules.is_empty());
        assert_eq!(ast.else_action, RuleAction::CommitPrice(ratio(1, 2)));
    }

    #[test]
    fn diagnostics_carry_positions() {
        match parse("if committed(2) == 1 then commit_price(0)\n").unwrap_err() {
            Error::Syntax { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("else"));
            }
            e => panic!("{e}"),
        }
        match parse("if committed(2) = 1 then commit_price(0) else commit_price(1)").unwrap_err() {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (1, 17)),
            e => panic!("{e}"),
        }
        assert!(matches!(parse("else commit_price(0.5)"), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse("if exists vendor j != OWNER : committed(k) != 1 then commit_price(0) else commit_price(1)"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn type_errors() {
        let p = params(2);
        assert!(matches!(
            parse_for("if committed(3) == 2 then commit_price(0) else commit_price(1)", &p),
            Err(Error::Type(_))
        ));
        assert!(matches!(
            parse_for("if committed(1) == 1 then commit_price(0) else commit_price(1)", &p),
            Err(Error::Type(_))
        ));
        assert!(matches!(parse_for("else commit_price(1/4)", &p), Err(Error::Type(_))));
        assert!(matches!(parse_for("else pledge(1, 1)", &p), Err(Error::Type(_))));
        assert!(parse_for("owner 0\nelse pledge(1, 1)", &p).is_ok());
    }

    #[test]
    fn builtin_requirements() {
        let mut p = params(2);
        p.prices = vec![int(0), ratio(1, 2)];
        assert!(matches!(builtin_attack_contract(&p), Err(Error::GridIncompatible(_))));
        let n5 = PopsicleParams::new(5, int(1), int(0), vec![int(0), int(1)], vec![int(0), int(1)]).unwrap();
        let ast = builtin_attack_contract(&n5).unwrap();
        assert_eq!(ast.referenced_players(5).len(), 5);
        assert!(builtin_sweetened(&params(2), &int(0)).is_err());
        assert!(matches!(builtin_sweetened(&params(2), &ratio(1, 4)), Err(Error::GridIncompatible(_))));
        let q = PopsicleParams::new(2, ratio(1, 2), int(0), vec![int(0), ratio(1, 2), int(1)], vec![int(0), ratio(3, 4), int(1)]).unwrap();
        let s = builtin_sweetened(&q, &ratio(1, 4)).unwrap();
        assert_eq!(s.rules[1].guard, Predicate::BuyerPledges { vendor: 1, q: ratio(3, 4) });
        assert_eq!(parse(&s.to_string()).unwrap(), s);
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (0i64..5, 1i64..5).prop_map(|(a, b)| ratio(a, b))
    }

    fn arb_pred() -> impl Strategy<Value = Predicate> {
        let leaf = prop_oneof![
            (arb_rational(), any::<bool>()).prop_map(|(value, eq)| Predicate::ExistsOther {
                var: "j".into(),
                op: if eq { CmpOp::Eq } else { CmpOp::Ne },
                value
            }),
            (1usize..4, arb_rational(), any::<bool>()).prop_map(|(vendor, value, eq)| Predicate::Committed {
                vendor,
                op: if eq { CmpOp::Eq } else { CmpOp::Ne },
                value
            }),
            (1usize..4, arb_rational()).prop_map(|(vendor, q)| Predicate::BuyerPledges { vendor, q }),
        ];
        leaf.prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|p| Predicate::Not(Box::new(p))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Predicate::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Predicate::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    fn arb_action() -> impl Strategy<Value = RuleAction> {
        prop_oneof![
            arb_rational().prop_map(RuleAction::CommitPrice),
            (1usize..4, arb_rational()).prop_map(|(vendor, q)| RuleAction::Pledge { vendor, q }),
        ]
    }

    proptest! {
        #[test]
        fn printing_round_trips(
            owner in 0usize..4,
            sweet in proptest::option::of(arb_rational()),
            rules in proptest::collection::vec((arb_pred(), arb_action()), 0..4),
            else_action in arb_action(),
        ) {
            let ast = ContractAst {
                owner: PlayerId(owner),
                sweetener: sweet,
                rules: rules.into_iter().map(|(guard, action)| Rule { guard, action }).collect(),
                else_action,
            };
            let text = ast.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &ast);
            prop_assert_eq!(parse(&back.to_string()).unwrap(), back);
        }
    }
}
