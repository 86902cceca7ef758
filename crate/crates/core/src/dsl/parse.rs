//! Lexer, reader, and compiler for the model DSL.
//!
//! Programs are S-expressions: one or more `(define (name params...) body)`
//! forms. The entry function name and arity are fixed per component kind.
//! Compilation resolves every identifier to a frame slot, a user function, a
//! builtin, or a named constant, so evaluation never does name lookups and
//! undefined symbols are rejected here with a source position.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Initial,
    Transition,
    Observation,
    Reward,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 4] = [
        ComponentKind::Initial,
        ComponentKind::Transition,
        ComponentKind::Observation,
        ComponentKind::Reward,
    ];

    pub fn entry_name(self) -> &'static str {
        match self {
            ComponentKind::Initial => "init",
            ComponentKind::Transition => "transition",
            ComponentKind::Observation => "observe",
            ComponentKind::Reward => "reward",
        }
    }

    pub fn entry_arity(self) -> usize {
        match self {
            ComponentKind::Initial => 1,
            ComponentKind::Transition => 3,
            ComponentKind::Observation => 2,
            ComponentKind::Reward => 3,
        }
    }

    /// Only initial and transition programs may draw random numbers.
    pub fn allows_sampling(self) -> bool {
        matches!(self, ComponentKind::Initial | ComponentKind::Transition)
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::Initial => "initial",
            ComponentKind::Transition => "transition",
            ComponentKind::Observation => "observation",
            ComponentKind::Reward => "reward",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: undefined symbol `{name}`")]
    Undefined { pos: Pos, name: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
    #[error("entry function `{name}` not found (expected `(define ({name} {params}) ...)`)")]
    MissingEntry { name: &'static str, params: &'static str },
    #[error("{pos}: entry function `{name}` takes {got} parameters, expected {want}")]
    EntryArity { pos: Pos, name: &'static str, got: usize, want: usize },
    #[error("{pos}: `{name}` is not allowed in {kind} programs (they must be deterministic)")]
    Purity { pos: Pos, name: String, kind: ComponentKind },
}

// ---------------------------------------------------------------- lexing --

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Int(i64),
    Float(f64),
    Ident(String),
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                out.push((Tok::LParen, pos));
            }
            ')' => {
                chars.next();
                col += 1;
                out.push((Tok::RParen, pos));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                let first = word.chars().next().unwrap();
                let numeric = first.is_ascii_digit()
                    || (word.len() > 1
                        && (first == '-' || first == '+')
                        && word.chars().nth(1).is_some_and(|c| c.is_ascii_digit() || c == '.'))
                    || (first == '.' && word.len() > 1);
                if numeric {
                    if word.contains('.') || word.contains('e') || word.contains('E') {
                        let v: f64 = word.parse().map_err(|_| ParseError::Syntax {
                            pos,
                            msg: format!("bad number `{word}`"),
                        })?;
                        out.push((Tok::Float(v), pos));
                    } else {
                        let v: i64 = word.parse().map_err(|_| ParseError::Syntax {
                            pos,
                            msg: format!("bad integer `{word}`"),
                        })?;
                        out.push((Tok::Int(v), pos));
                    }
                } else {
                    out.push((Tok::Ident(word), pos));
                }
            }
        }
    }
    Ok(out)
}

// --------------------------------------------------------------- reading --

#[derive(Debug, Clone)]
enum Sexp {
    Int(i64, Pos),
    Float(f64, Pos),
    Ident(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Int(_, p) | Sexp::Float(_, p) | Sexp::Ident(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

const MAX_NESTING: usize = 200;

fn read_all(tokens: &[(Tok, Pos)]) -> Result<Vec<Sexp>, ParseError> {
    let mut i = 0usize;
    let mut out = Vec::new();
    while i < tokens.len() {
        out.push(read_one(tokens, &mut i, 0)?);
    }
    Ok(out)
}

fn read_one(tokens: &[(Tok, Pos)], i: &mut usize, depth: usize) -> Result<Sexp, ParseError> {
    if depth > MAX_NESTING {
        return Err(ParseError::Syntax {
            pos: tokens[*i].1,
            msg: format!("nesting exceeds {MAX_NESTING}"),
        });
    }
    let (tok, pos) = &tokens[*i];
    *i += 1;
    match tok {
        Tok::Int(v) => Ok(Sexp::Int(*v, *pos)),
        Tok::Float(v) => Ok(Sexp::Float(*v, *pos)),
        Tok::Ident(s) => Ok(Sexp::Ident(s.clone(), *pos)),
        Tok::RParen => Err(ParseError::Syntax { pos: *pos, msg: "unexpected `)`".into() }),
        Tok::LParen => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*i) {
                    None => {
                        return Err(ParseError::Syntax {
                            pos: *pos,
                            msg: "unbalanced `(`: missing closing parenthesis".into(),
                        })
                    }
                    Some((Tok::RParen, _)) => {
                        *i += 1;
                        return Ok(Sexp::List(items, *pos));
                    }
                    Some(_) => items.push(read_one(tokens, i, depth + 1)?),
                }
            }
        }
    }
}

// ------------------------------------------------------------- compiling --

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Add,
    Sub,
    Mul,
    FDiv,
    IDiv,
    Mod,
    Min,
    Max,
    Abs,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Not,
    MakeGrid,
    GridGet,
    GridSet,
    GridWidth,
    GridHeight,
    InBounds,
    MakeState,
    StateGrid,
    StateX,
    StateY,
    StateDir,
    StateCarry,
    StateStep,
    MakeObs,
    ObsGrid,
    ObsDir,
    ObsCarry,
    PairNew,
    Fst,
    Snd,
    ListNew,
    Iota,
    Repeat,
    Nth,
    Len,
    Key,
    Door,
    IsKey,
    IsDoor,
    KeyColor,
    DoorColor,
    DoorStateOf,
    WeightedChoice,
}

/// (name, builtin, min arity, max arity; None = unbounded)
const BUILTINS: &[(&str, Builtin, usize, Option<usize>)] = &[
    ("+", Builtin::Add, 1, None),
    ("-", Builtin::Sub, 1, None),
    ("*", Builtin::Mul, 1, None),
    ("/", Builtin::FDiv, 2, Some(2)),
    ("div", Builtin::IDiv, 2, Some(2)),
    ("mod", Builtin::Mod, 2, Some(2)),
    ("min", Builtin::Min, 1, None),
    ("max", Builtin::Max, 1, None),
    ("abs", Builtin::Abs, 1, Some(1)),
    ("=", Builtin::Eq, 2, Some(2)),
    ("!=", Builtin::Ne, 2, Some(2)),
    ("<", Builtin::Lt, 2, Some(2)),
    ("<=", Builtin::Le, 2, Some(2)),
    (">", Builtin::Gt, 2, Some(2)),
    (">=", Builtin::Ge, 2, Some(2)),
    ("not", Builtin::Not, 1, Some(1)),
    ("make-grid", Builtin::MakeGrid, 3, Some(3)),
    ("grid-get", Builtin::GridGet, 3, Some(3)),
    ("grid-set", Builtin::GridSet, 4, Some(4)),
    ("grid-width", Builtin::GridWidth, 1, Some(1)),
    ("grid-height", Builtin::GridHeight, 1, Some(1)),
    ("in-bounds", Builtin::InBounds, 3, Some(3)),
    ("make-state", Builtin::MakeState, 6, Some(6)),
    ("state-grid", Builtin::StateGrid, 1, Some(1)),
    ("state-x", Builtin::StateX, 1, Some(1)),
    ("state-y", Builtin::StateY, 1, Some(1)),
    ("state-dir", Builtin::StateDir, 1, Some(1)),
    ("state-carry", Builtin::StateCarry, 1, Some(1)),
    ("state-step", Builtin::StateStep, 1, Some(1)),
    ("make-obs", Builtin::MakeObs, 3, Some(3)),
    ("obs-grid", Builtin::ObsGrid, 1, Some(1)),
    ("obs-dir", Builtin::ObsDir, 1, Some(1)),
    ("obs-carry", Builtin::ObsCarry, 1, Some(1)),
    ("pair", Builtin::PairNew, 2, Some(2)),
    ("fst", Builtin::Fst, 1, Some(1)),
    ("snd", Builtin::Snd, 1, Some(1)),
    ("list", Builtin::ListNew, 0, None),
    ("iota", Builtin::Iota, 1, Some(1)),
    ("repeat", Builtin::Repeat, 2, Some(2)),
    ("nth", Builtin::Nth, 2, Some(2)),
    ("len", Builtin::Len, 1, Some(1)),
    ("key", Builtin::Key, 1, Some(1)),
    ("door", Builtin::Door, 2, Some(2)),
    ("is-key", Builtin::IsKey, 1, Some(1)),
    ("is-door", Builtin::IsDoor, 1, Some(1)),
    ("key-color", Builtin::KeyColor, 1, Some(1)),
    ("door-color", Builtin::DoorColor, 1, Some(1)),
    ("door-state", Builtin::DoorStateOf, 1, Some(1)),
    ("weighted-choice", Builtin::WeightedChoice, 3, Some(3)),
];

/// Named integer constants available to every program.
pub const CONSTANTS: &[(&str, i64)] = &[
    ("UNSEEN", 0),
    ("FLOOR", 1),
    ("WALL", 2),
    ("LAVA", 3),
    ("GOAL", 4),
    ("NONE", 0),
    ("OPEN", 0),
    ("CLOSED", 1),
    ("LOCKED", 2),
    ("NORTH", 0),
    ("EAST", 1),
    ("SOUTH", 2),
    ("WEST", 3),
    ("LEFT", 0),
    ("RIGHT", 1),
    ("FORWARD", 2),
    ("PICKUP", 3),
    ("DROP", 4),
    ("TOGGLE", 5),
    ("RED", 0),
    ("GREEN", 1),
    ("BLUE", 2),
    ("PURPLE", 3),
    ("YELLOW", 4),
    ("GREY", 5),
];

const RESERVED: &[&str] = &["define", "if", "cond", "else", "let", "and", "or", "fold-cells", "true", "false"];

#[derive(Debug, Clone)]
pub enum Expr {
    Int(i64),
    Float(f64),
    Bool(bool),
    Local(u16),
    If(Box<(Expr, Expr, Expr)>),
    Cond(Vec<(Expr, Expr)>, Box<Expr>),
    Let(Vec<(u16, Expr)>, Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    FoldCells { grid: Box<Expr>, init: Box<Expr>, slots: [u16; 4], body: Box<Expr> },
    Call(u16, Vec<Expr>),
    Builtin(Builtin, Vec<Expr>),
}

#[derive(Debug, Clone)]
pub struct FuncDef {
    /// Kept for interpreter diagnostics and debugging dumps.
    #[allow(dead_code)]
    pub name: String,
    pub n_params: usize,
    pub n_slots: usize,
    pub body: Expr,
}

/// A compiled component program: resolved functions plus the entry index.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub funcs: Vec<FuncDef>,
    pub entry: usize,
    /// Whether any reachable code calls `weighted-choice`; deterministic
    /// programs can be memoized by callers.
    pub samples: bool,
}

struct Scope {
    names: Vec<(String, u16)>,
    next_slot: u16,
    max_slots: u16,
}

impl Scope {
    fn new() -> Scope {
        Scope { names: Vec::new(), next_slot: 0, max_slots: 0 }
    }

    fn bind(&mut self, name: &str) -> u16 {
        let slot = self.next_slot;
        self.names.push((name.to_string(), slot));
        self.next_slot += 1;
        self.max_slots = self.max_slots.max(self.next_slot);
        slot
    }

    fn lookup(&self, name: &str) -> Option<u16> {
        self.names.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    fn mark(&self) -> (usize, u16) {
        (self.names.len(), self.next_slot)
    }

    fn restore(&mut self, mark: (usize, u16)) {
        self.names.truncate(mark.0);
        self.next_slot = mark.1;
    }
}

struct Compiler<'a> {
    kind: ComponentKind,
    func_names: Vec<String>,
    sampled: bool,
    src_funcs: &'a [(String, Vec<String>, Sexp, Pos)],
}

pub fn compile(source: &str, kind: ComponentKind) -> Result<CompiledProgram, ParseError> {
    let tokens = lex(source)?;
    let forms = read_all(&tokens)?;
    if forms.is_empty() {
        return Err(ParseError::MissingEntry {
            name: kind.entry_name(),
            params: entry_params(kind),
        });
    }

    // First pass: collect (name, params, body) triples so definitions can
    // reference each other in any order.
    let mut defs: Vec<(String, Vec<String>, Sexp, Pos)> = Vec::new();
    for form in forms {
        let pos = form.pos();
        let Sexp::List(items, _) = form else {
            return Err(ParseError::Syntax { pos, msg: "top-level form must be (define ...)".into() });
        };
        match items.first() {
            Some(Sexp::Ident(kw, _)) if kw == "define" => {}
            _ => {
                return Err(ParseError::Syntax { pos, msg: "top-level form must be (define ...)".into() })
            }
        }
        if items.len() != 3 {
            return Err(ParseError::Syntax {
                pos,
                msg: "define takes a signature and one body expression".into(),
            });
        }
        let Sexp::List(sig, sig_pos) = &items[1] else {
            return Err(ParseError::Syntax {
                pos: items[1].pos(),
                msg: "define signature must be (name params...)".into(),
            });
        };
        let mut names = Vec::new();
        for part in sig {
            match part {
                Sexp::Ident(n, p) => {
                    if RESERVED.contains(&n.as_str()) || is_builtin(n) || is_constant(n) {
                        return Err(ParseError::Invalid {
                            pos: *p,
                            msg: format!("`{n}` is reserved and cannot be redefined"),
                        });
                    }
                    names.push(n.clone());
                }
                other => {
                    return Err(ParseError::Syntax {
                        pos: other.pos(),
                        msg: "signature entries must be identifiers".into(),
                    })
                }
            }
        }
        if names.is_empty() {
            return Err(ParseError::Syntax { pos: *sig_pos, msg: "empty define signature".into() });
        }
        let fname = names.remove(0);
        if defs.iter().any(|(n, ..)| *n == fname) {
            return Err(ParseError::Invalid {
                pos: *sig_pos,
                msg: format!("function `{fname}` defined twice"),
            });
        }
        defs.push((fname, names, items[2].clone(), *sig_pos));
    }

    // Entry function check.
    let entry_name = kind.entry_name();
    let entry = defs
        .iter()
        .position(|(n, ..)| n == entry_name)
        .ok_or(ParseError::MissingEntry { name: entry_name, params: entry_params(kind) })?;
    let (_, params, _, epos) = &defs[entry];
    if params.len() != kind.entry_arity() {
        return Err(ParseError::EntryArity {
            pos: *epos,
            name: entry_name,
            got: params.len(),
            want: kind.entry_arity(),
        });
    }

    let mut compiler = Compiler {
        kind,
        func_names: defs.iter().map(|(n, ..)| n.clone()).collect(),
        sampled: false,
        src_funcs: &defs,
    };
    let mut funcs = Vec::with_capacity(defs.len());
    for (name, params, body, pos) in &defs {
        let mut scope = Scope::new();
        for p in params {
            if RESERVED.contains(&p.as_str()) || is_builtin(p) || is_constant(p) {
                return Err(ParseError::Invalid {
                    pos: *pos,
                    msg: format!("parameter `{p}` shadows a reserved name"),
                });
            }
            scope.bind(p);
        }
        let body = compiler.expr(body, &mut scope)?;
        funcs.push(FuncDef {
            name: name.clone(),
            n_params: params.len(),
            n_slots: scope.max_slots as usize,
            body,
        });
    }

    Ok(CompiledProgram { funcs, entry, samples: compiler.sampled })
}

fn entry_params(kind: ComponentKind) -> &'static str {
    match kind {
        ComponentKind::Initial => "rng",
        ComponentKind::Transition => "state action rng",
        ComponentKind::Observation => "state action",
        ComponentKind::Reward => "state action next-state",
    }
}

fn is_builtin(name: &str) -> bool {
    BUILTINS.iter().any(|(n, ..)| *n == name)
}

fn is_constant(name: &str) -> bool {
    CONSTANTS.iter().any(|(n, _)| *n == name)
}

impl<'a> Compiler<'a> {
    fn expr(&mut self, sexp: &Sexp, scope: &mut Scope) -> Result<Expr, ParseError> {
        match sexp {
            Sexp::Int(v, _) => Ok(Expr::Int(*v)),
            Sexp::Float(v, _) => Ok(Expr::Float(*v)),
            Sexp::Ident(name, pos) => self.ident(name, *pos, scope),
            Sexp::List(items, pos) => {
                let Some(head) = items.first() else {
                    return Err(ParseError::Syntax { pos: *pos, msg: "empty form `()`".into() });
                };
                let Sexp::Ident(head_name, head_pos) = head else {
                    return Err(ParseError::Syntax {
                        pos: head.pos(),
                        msg: "form head must be an identifier".into(),
                    });
                };
                let args = &items[1..];
                match head_name.as_str() {
                    "if" => {
                        self.expect_args(args, 3, *pos, "if takes (if cond then else)")?;
                        Ok(Expr::If(Box::new((
                            self.expr(&args[0], scope)?,
                            self.expr(&args[1], scope)?,
                            self.expr(&args[2], scope)?,
                        ))))
                    }
                    "cond" => self.cond(args, *pos, scope),
                    "let" => self.let_form(args, *pos, scope),
                    "and" | "or" => {
                        if args.is_empty() {
                            return Err(ParseError::Syntax {
                                pos: *pos,
                                msg: format!("{head_name} needs at least one argument"),
                            });
                        }
                        let parts: Result<Vec<Expr>, _> =
                            args.iter().map(|a| self.expr(a, scope)).collect();
                        if head_name == "and" {
                            Ok(Expr::And(parts?))
                        } else {
                            Ok(Expr::Or(parts?))
                        }
                    }
                    "fold-cells" => self.fold_cells(args, *pos, scope),
                    "define" => Err(ParseError::Syntax {
                        pos: *pos,
                        msg: "define is only allowed at top level".into(),
                    }),
                    "else" => Err(ParseError::Syntax {
                        pos: *pos,
                        msg: "`else` is only allowed as the last cond clause".into(),
                    }),
                    _ => self.call(head_name, *head_pos, args, scope),
                }
            }
        }
    }

    fn ident(&mut self, name: &str, pos: Pos, scope: &mut Scope) -> Result<Expr, ParseError> {
        if name == "true" {
            return Ok(Expr::Bool(true));
        }
        if name == "false" {
            return Ok(Expr::Bool(false));
        }
        if let Some(slot) = scope.lookup(name) {
            return Ok(Expr::Local(slot));
        }
        if let Some((_, v)) = CONSTANTS.iter().find(|(n, _)| *n == name) {
            return Ok(Expr::Int(*v));
        }
        Err(ParseError::Undefined { pos, name: name.to_string() })
    }

    fn expect_args(&self, args: &[Sexp], n: usize, pos: Pos, msg: &str) -> Result<(), ParseError> {
        if args.len() != n {
            return Err(ParseError::Syntax { pos, msg: msg.to_string() });
        }
        Ok(())
    }

    fn cond(&mut self, args: &[Sexp], pos: Pos, scope: &mut Scope) -> Result<Expr, ParseError> {
        if args.is_empty() {
            return Err(ParseError::Syntax { pos, msg: "cond needs at least an else clause".into() });
        }
        let mut clauses = Vec::new();
        let mut fallback = None;
        for (i, clause) in args.iter().enumerate() {
            let Sexp::List(pair, cpos) = clause else {
                return Err(ParseError::Syntax {
                    pos: clause.pos(),
                    msg: "cond clause must be (test expr)".into(),
                });
            };
            if pair.len() != 2 {
                return Err(ParseError::Syntax {
                    pos: *cpos,
                    msg: "cond clause must be (test expr)".into(),
                });
            }
            let is_else = matches!(&pair[0], Sexp::Ident(n, _) if n == "else");
            if is_else {
                if i + 1 != args.len() {
                    return Err(ParseError::Syntax {
                        pos: *cpos,
                        msg: "`else` must be the last cond clause".into(),
                    });
                }
                fallback = Some(self.expr(&pair[1], scope)?);
            } else {
                clauses.push((self.expr(&pair[0], scope)?, self.expr(&pair[1], scope)?));
            }
        }
        let Some(fallback) = fallback else {
            return Err(ParseError::Syntax { pos, msg: "cond requires a final (else expr) clause".into() });
        };
        Ok(Expr::Cond(clauses, Box::new(fallback)))
    }

    fn let_form(&mut self, args: &[Sexp], pos: Pos, scope: &mut Scope) -> Result<Expr, ParseError> {
        self.expect_args(args, 2, pos, "let takes (let ((name expr)...) body)")?;
        let Sexp::List(bindings, _) = &args[0] else {
            return Err(ParseError::Syntax {
                pos: args[0].pos(),
                msg: "let bindings must be a list".into(),
            });
        };
        let mark = scope.mark();
        let mut compiled = Vec::with_capacity(bindings.len());
        for b in bindings {
            let Sexp::List(pair, bpos) = b else {
                return Err(ParseError::Syntax {
                    pos: b.pos(),
                    msg: "let binding must be (name expr)".into(),
                });
            };
            if pair.len() != 2 {
                return Err(ParseError::Syntax {
                    pos: *bpos,
                    msg: "let binding must be (name expr)".into(),
                });
            }
            let Sexp::Ident(name, npos) = &pair[0] else {
                return Err(ParseError::Syntax {
                    pos: pair[0].pos(),
                    msg: "let binding name must be an identifier".into(),
                });
            };
            if RESERVED.contains(&name.as_str()) || is_builtin(name) || is_constant(name) {
                return Err(ParseError::Invalid {
                    pos: *npos,
                    msg: format!("`{name}` is reserved and cannot be bound"),
                });
            }
            // Bindings are sequential: each may reference the previous ones.
            let value = self.expr(&pair[1], scope)?;
            let slot = scope.bind(name);
            compiled.push((slot, value));
        }
        let body = self.expr(&args[1], scope)?;
        scope.restore(mark);
        Ok(Expr::Let(compiled, Box::new(body)))
    }

    fn fold_cells(&mut self, args: &[Sexp], pos: Pos, scope: &mut Scope) -> Result<Expr, ParseError> {
        self.expect_args(args, 4, pos, "fold-cells takes (fold-cells grid init (acc x y cell) body)")?;
        let grid = self.expr(&args[0], scope)?;
        let init = self.expr(&args[1], scope)?;
        let Sexp::List(binders, bpos) = &args[2] else {
            return Err(ParseError::Syntax {
                pos: args[2].pos(),
                msg: "fold-cells binder must be (acc x y cell)".into(),
            });
        };
        if binders.len() != 4 {
            return Err(ParseError::Syntax {
                pos: *bpos,
                msg: "fold-cells binder must name exactly (acc x y cell)".into(),
            });
        }
        let mark = scope.mark();
        let mut slots = [0u16; 4];
        for (i, b) in binders.iter().enumerate() {
            let Sexp::Ident(name, npos) = b else {
                return Err(ParseError::Syntax {
                    pos: b.pos(),
                    msg: "fold-cells binders must be identifiers".into(),
                });
            };
            if RESERVED.contains(&name.as_str()) || is_builtin(name) || is_constant(name) {
                return Err(ParseError::Invalid {
                    pos: *npos,
                    msg: format!("`{name}` is reserved and cannot be bound"),
                });
            }
            slots[i] = scope.bind(name);
        }
        let body = self.expr(&args[3], scope)?;
        scope.restore(mark);
        Ok(Expr::FoldCells { grid: Box::new(grid), init: Box::new(init), slots, body: Box::new(body) })
    }

    fn call(
        &mut self,
        name: &str,
        pos: Pos,
        args: &[Sexp],
        scope: &mut Scope,
    ) -> Result<Expr, ParseError> {
        let compiled: Result<Vec<Expr>, _> = args.iter().map(|a| self.expr(a, scope)).collect();
        let compiled = compiled?;
        if let Some((_, b, lo, hi)) = BUILTINS.iter().find(|(n, ..)| *n == name) {
            if *b == Builtin::WeightedChoice {
                if !self.kind.allows_sampling() {
                    return Err(ParseError::Purity {
                        pos,
                        name: name.to_string(),
                        kind: self.kind,
                    });
                }
                self.sampled = true;
            }
            if compiled.len() < *lo || hi.is_some_and(|h| compiled.len() > h) {
                return Err(ParseError::Syntax {
                    pos,
                    msg: match hi {
                        Some(h) if *lo == *h => format!("`{name}` takes {lo} arguments"),
                        Some(h) => format!("`{name}` takes {lo}..{h} arguments"),
                        None => format!("`{name}` takes at least {lo} arguments"),
                    },
                });
            }
            return Ok(Expr::Builtin(*b, compiled));
        }
        if let Some(idx) = self.func_names.iter().position(|n| n == name) {
            let want = self.src_funcs[idx].1.len();
            if compiled.len() != want {
                return Err(ParseError::Syntax {
                    pos,
                    msg: format!("`{name}` takes {want} arguments, got {}", compiled.len()),
                });
            }
            return Ok(Expr::Call(idx as u16, compiled));
        }
        Err(ParseError::Undefined { pos, name: name.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY_TRANSITION: &str =
        "(define (transition state action rng) state)";

    #[test]
    fn identity_transition_parses() {
        let p = compile(IDENTITY_TRANSITION, ComponentKind::Transition).unwrap();
        assert!(!p.samples);
        assert_eq!(p.funcs[p.entry].n_params, 3);
    }

    #[test]
    fn unbalanced_delimiters_report_position() {
        let err = compile("(define (transition state action rng) (if true state", ComponentKind::Transition)
            .unwrap_err();
        match err {
            ParseError::Syntax { pos, msg } => {
                assert!(msg.contains("unbalanced"), "{msg}");
                assert_eq!(pos.line, 1);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn observation_programs_cannot_sample() {
        let src = "(define (observe state action) (weighted-choice state (list 1) (list 1)))";
        let err = compile(src, ComponentKind::Observation).unwrap_err();
        assert!(matches!(err, ParseError::Purity { .. }), "{err:?}");
        // The same call is fine in a transition program.
        let src = "(define (transition state action rng) (weighted-choice rng (list 1) (list state)))";
        let ok = compile(src, ComponentKind::Transition).unwrap();
        assert!(ok.samples);
    }

    #[test]
    fn wrong_entry_arity_is_rejected() {
        let err = compile("(define (init a b) a)", ComponentKind::Initial).unwrap_err();
        assert!(matches!(err, ParseError::EntryArity { got: 2, want: 1, .. }), "{err:?}");
    }

    #[test]
    fn undefined_symbol_is_rejected_with_position() {
        let err = compile("(define (init rng) missing)", ComponentKind::Initial).unwrap_err();
        match err {
            ParseError::Undefined { name, pos } => {
                assert_eq!(name, "missing");
                assert_eq!(pos.line, 1);
                assert!(pos.col > 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_entry_is_rejected() {
        let err = compile("(define (helper x) x)", ComponentKind::Reward).unwrap_err();
        assert!(matches!(err, ParseError::MissingEntry { name: "reward", .. }));
    }

    #[test]
    fn cond_requires_else() {
        let err = compile(
            "(define (observe state action) (cond ((= 1 1) state)))",
            ComponentKind::Observation,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn let_is_sequential() {
        let src = "(define (init rng) (let ((a 1) (b (+ a 1))) b))";
        compile(src, ComponentKind::Initial).unwrap();
    }

    #[test]
    fn reserved_names_cannot_be_rebound() {
        for src in [
            "(define (init rng) (let ((FLOOR 9)) FLOOR))",
            "(define (FLOOR x) x)(define (init rng) 1)",
            "(define (init WALL) 1)",
        ] {
            assert!(compile(src, ComponentKind::Initial).is_err(), "{src}");
        }
    }
}
