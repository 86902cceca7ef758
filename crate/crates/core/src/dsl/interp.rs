//! Sandboxed tree-walking evaluator.
//!
//! Programs touch nothing but their arguments: the only effects are fresh
//! values and draws from the caller-owned rng stream. Every expression node,
//! loop iteration, and aggregate construction charges the step budget, so
//! non-termination and memory blowups surface as catchable diagnostics.

use super::parse::{Builtin, CompiledProgram, Expr};
use super::value::{GridVal, ObsVal, StateVal, Value};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalBudget {
    pub max_steps_per_call: u64,
    pub max_calls: u64,
}

use serde::{Deserialize, Serialize};

impl Default for EvalBudget {
    fn default() -> EvalBudget {
        // Ground-truth programs use < 2,000 steps per call; 50k catches
        // non-termination without false positives.
        EvalBudget { max_steps_per_call: 50_000, max_calls: 1 << 42 }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("step budget exhausted")]
    Budget,
    #[error("call depth exceeded")]
    Depth,
    #[error("call budget exhausted")]
    CallBudget,
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivideByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("sampling error: {0}")]
    Sample(String),
}

const MAX_CALL_DEPTH: usize = 100;
const MAX_GRID_DIM: i64 = 64;
const MAX_LIST_LEN: i64 = 4096;
const MAX_CELL_CODE: i64 = 28;

pub struct Interp<'r> {
    rng: Option<&'r mut ChaCha8Rng>,
    steps_left: u64,
    depth: usize,
}

/// Evaluates a compiled program's entry function on `args`.
pub fn run(
    prog: &CompiledProgram,
    args: &[Value],
    rng: Option<&mut ChaCha8Rng>,
    budget: &EvalBudget,
) -> Result<Value, EvalError> {
    debug_assert_eq!(args.len(), prog.funcs[prog.entry].n_params);
    let mut interp = Interp { rng, steps_left: budget.max_steps_per_call, depth: 0 };
    interp.call(prog, prog.entry, args.to_vec())
}

impl<'r> Interp<'r> {
    fn charge(&mut self, n: u64) -> Result<(), EvalError> {
        if self.steps_left < n {
            self.steps_left = 0;
            return Err(EvalError::Budget);
        }
        self.steps_left -= n;
        Ok(())
    }

    fn call(&mut self, prog: &CompiledProgram, idx: usize, args: Vec<Value>) -> Result<Value, EvalError> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(EvalError::Depth);
        }
        self.depth += 1;
        let func = &prog.funcs[idx];
        let mut frame = args;
        frame.resize(func.n_slots, Value::Bool(false));
        let out = self.eval(prog, &func.body, &mut frame);
        self.depth -= 1;
        out
    }

    fn eval(&mut self, prog: &CompiledProgram, expr: &Expr, frame: &mut Vec<Value>) -> Result<Value, EvalError> {
        self.charge(1)?;
        match expr {
            Expr::Int(v) => Ok(Value::Int(*v)),
            Expr::Float(v) => Ok(Value::Float(*v)),
            Expr::Bool(v) => Ok(Value::Bool(*v)),
            Expr::Local(slot) => Ok(frame[*slot as usize].clone()),
            Expr::If(parts) => {
                let (test, then, alt) = &**parts;
                if truth(self.eval(prog, test, frame)?)? {
                    self.eval(prog, then, frame)
                } else {
                    self.eval(prog, alt, frame)
                }
            }
            Expr::Cond(clauses, fallback) => {
                for (test, body) in clauses {
                    if truth(self.eval(prog, test, frame)?)? {
                        return self.eval(prog, body, frame);
                    }
                }
                self.eval(prog, fallback, frame)
            }
            Expr::Let(bindings, body) => {
                for (slot, value) in bindings {
                    let v = self.eval(prog, value, frame)?;
                    frame[*slot as usize] = v;
                }
                self.eval(prog, body, frame)
            }
            Expr::And(parts) => {
                for p in parts {
                    if !truth(self.eval(prog, p, frame)?)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Ok(Value::Bool(true))
            }
            Expr::Or(parts) => {
                for p in parts {
                    if truth(self.eval(prog, p, frame)?)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Ok(Value::Bool(false))
            }
            Expr::FoldCells { grid, init, slots, body } => {
                let grid = match self.eval(prog, grid, frame)? {
                    Value::Grid(g) => g,
                    other => return Err(type_err("fold-cells grid", "grid", &other)),
                };
                let mut acc = self.eval(prog, init, frame)?;
                let [sa, sx, sy, sc] = *slots;
                for y in 0..grid.height as i64 {
                    for x in 0..grid.width as i64 {
                        self.charge(1)?;
                        frame[sa as usize] = acc;
                        frame[sx as usize] = Value::Int(x);
                        frame[sy as usize] = Value::Int(y);
                        frame[sc as usize] = Value::Int(grid.get(x, y) as i64);
                        acc = self.eval(prog, body, frame)?;
                    }
                }
                Ok(acc)
            }
            Expr::Call(idx, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(prog, a, frame)?);
                }
                self.call(prog, *idx as usize, vals)
            }
            Expr::Builtin(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(prog, a, frame)?);
                }
                self.builtin(*op, vals)
            }
        }
    }



    fn builtin(&mut self, op: Builtin, mut args: Vec<Value>) -> Result<Value, EvalError> {
        use Builtin::*;
        match op {
            Add => numeric_fold(&args, "cannot add", |a, b| a.checked_add(b), |a, b| a + b),
            Mul => numeric_fold(&args, "cannot multiply", |a, b| a.checked_mul(b), |a, b| a * b),
            Sub => {
                if args.len() == 1 {
                    match &args[0] {
                        Value::Int(v) => v.checked_neg().map(Value::Int).ok_or(EvalError::Overflow),
                        Value::Float(v) => Ok(Value::Float(-v)),
                        other => Err(type_err("-", "number", other)),
                    }
                } else {
                    numeric_fold(&args, "cannot subtract", |a, b| a.checked_sub(b), |a, b| a - b)
                }
            }
            FDiv => {
                let b = as_f64(&args[1], "/")?;
                let a = as_f64(&args[0], "/")?;
                if b == 0.0 {
                    return Err(EvalError::DivideByZero);
                }
                Ok(Value::Float(a / b))
            }
            IDiv | Mod => {
                let (a, b) = (as_int(&args[0], "div/mod")?, as_int(&args[1], "div/mod")?);
                if b == 0 {
                    return Err(EvalError::DivideByZero);
                }
                let out = if op == IDiv { a.checked_div(b) } else { a.checked_rem(b) };
                out.map(Value::Int).ok_or(EvalError::Overflow)
            }
            Min | Max => {
                let all_int = args.iter().all(|v| matches!(v, Value::Int(_)));
                if all_int {
                    let vals: Vec<i64> = args.iter().map(|v| as_int(v, "min/max").unwrap()).collect();
                    let v = if op == Min {
                        *vals.iter().min().unwrap()
                    } else {
                        *vals.iter().max().unwrap()
                    };
                    Ok(Value::Int(v))
                } else {
                    let mut acc = as_f64(&args[0], "min/max")?;
                    for v in &args[1..] {
                        let x = as_f64(v, "min/max")?;
                        acc = if op == Min { acc.min(x) } else { acc.max(x) };
                    }
                    Ok(Value::Float(acc))
                }
            }
            Abs => match &args[0] {
                Value::Int(v) => v.checked_abs().map(Value::Int).ok_or(EvalError::Overflow),
                Value::Float(v) => Ok(Value::Float(v.abs())),
                other => Err(type_err("abs", "number", other)),
            },
            Eq | Ne => {
                let eq = match (&args[0], &args[1]) {
                    (Value::Int(a), Value::Float(b)) => (*a as f64) == *b,
                    (Value::Float(a), Value::Int(b)) => *a == (*b as f64),
                    (Value::Float(a), Value::Float(b)) => a == b,
                    (a, b) => a == b,
                };
                Ok(Value::Bool(if op == Eq { eq } else { !eq }))
            }
            Lt | Le | Gt | Ge => {
                let ord = match (&args[0], &args[1]) {
                    (Value::Int(a), Value::Int(b)) => a.cmp(b),
                    (a, b) => {
                        let (a, b) = (as_f64(a, "compare")?, as_f64(b, "compare")?);
                        a.partial_cmp(&b).ok_or_else(|| EvalError::Type("NaN comparison".into()))?
                    }
                };
                Ok(Value::Bool(match op {
                    Lt => ord.is_lt(),
                    Le => ord.is_le(),
                    Gt => ord.is_gt(),
                    _ => ord.is_ge(),
                }))
            }
            Not => match &args[0] {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                other => Err(type_err("not", "bool", other)),
            },
            MakeGrid => {
                let w = as_int(&args[0], "make-grid")?;
                let h = as_int(&args[1], "make-grid")?;
                let fill = as_cell_code(&args[2])?;
                if !(1..=MAX_GRID_DIM).contains(&w) || !(1..=MAX_GRID_DIM).contains(&h) {
                    return Err(EvalError::Type(format!("make-grid size {w}x{h} out of 1..{MAX_GRID_DIM}")));
                }
                self.charge((w * h) as u64)?;
                Ok(Value::Grid(Rc::new(GridVal {
                    width: w as u32,
                    height: h as u32,
                    cells: vec![fill; (w * h) as usize],
                })))
            }
            GridGet => {
                let g = as_grid(&args[0], "grid-get")?;
                let (x, y) = (as_int(&args[1], "grid-get")?, as_int(&args[2], "grid-get")?);
                if !g.in_bounds(x, y) {
                    return Err(EvalError::Type(format!("grid-get ({x},{y}) out of bounds {}x{}", g.width, g.height)));
                }
                Ok(Value::Int(g.get(x, y) as i64))
            }
            GridSet => {
                let (x, y) = (as_int(&args[1], "grid-set")?, as_int(&args[2], "grid-set")?);
                let code = as_cell_code(&args[3])?;
                let Value::Grid(rc) = args.swap_remove(0) else {
                    return Err(type_err("grid-set", "grid", &args[0]));
                };
                if !rc.in_bounds(x, y) {
                    return Err(EvalError::Type(format!("grid-set ({x},{y}) out of bounds {}x{}", rc.width, rc.height)));
                }
                let mut rc = rc;
                if Rc::get_mut(&mut rc).is_none() {
                    self.charge(rc.cells.len() as u64 / 8 + 1)?;
                }
                let g = Rc::make_mut(&mut rc);
                g.cells[(y as u32 * g.width + x as u32) as usize] = code;
                Ok(Value::Grid(rc))
            }
            GridWidth => Ok(Value::Int(as_grid(&args[0], "grid-width")?.width as i64)),
            GridHeight => Ok(Value::Int(as_grid(&args[0], "grid-height")?.height as i64)),
            InBounds => {
                let g = as_grid(&args[0], "in-bounds")?;
                let (x, y) = (as_int(&args[1], "in-bounds")?, as_int(&args[2], "in-bounds")?);
                Ok(Value::Bool(g.in_bounds(x, y)))
            }
            MakeState => {
                let Value::Grid(grid) = args[0].clone() else {
                    return Err(type_err("make-state", "grid", &args[0]));
                };
                let x = as_int(&args[1], "make-state x")?;
                let y = as_int(&args[2], "make-state y")?;
                let dir = as_int(&args[3], "make-state dir")?;
                let carry = as_int(&args[4], "make-state carry")?;
                let step = as_int(&args[5], "make-state step")?;
                validate_dir(dir)?;
                validate_carry(carry)?;
                if step < 0 {
                    return Err(EvalError::Type("state step must be nonnegative".into()));
                }
                Ok(Value::State(Rc::new(StateVal { grid, x, y, dir, carry, step })))
            }
            StateGrid => Ok(Value::Grid(as_state(&args[0], "state-grid")?.grid.clone())),
            StateX => Ok(Value::Int(as_state(&args[0], "state-x")?.x)),
            StateY => Ok(Value::Int(as_state(&args[0], "state-y")?.y)),
            StateDir => Ok(Value::Int(as_state(&args[0], "state-dir")?.dir)),
            StateCarry => Ok(Value::Int(as_state(&args[0], "state-carry")?.carry)),
            StateStep => Ok(Value::Int(as_state(&args[0], "state-step")?.step)),
            MakeObs => {
                let Value::Grid(grid) = args[0].clone() else {
                    return Err(type_err("make-obs", "grid", &args[0]));
                };
                if grid.width != 3 || grid.height != 3 {
                    return Err(EvalError::Type(format!(
                        "observation grid must be 3x3, got {}x{}",
                        grid.width, grid.height
                    )));
                }
                let dir = as_int(&args[1], "make-obs dir")?;
                let carry = as_int(&args[2], "make-obs carry")?;
                validate_dir(dir)?;
                validate_carry(carry)?;
                Ok(Value::Obs(Rc::new(ObsVal { grid, dir, carry })))
            }
            ObsGrid => Ok(Value::Grid(as_obs(&args[0], "obs-grid")?.grid.clone())),
            ObsDir => Ok(Value::Int(as_obs(&args[0], "obs-dir")?.dir)),
            ObsCarry => Ok(Value::Int(as_obs(&args[0], "obs-carry")?.carry)),
            PairNew => {
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Value::Pair(Rc::new((a, b))))
            }
            Fst => match &args[0] {
                Value::Pair(p) => Ok(p.0.clone()),
                other => Err(type_err("fst", "pair", other)),
            },
            Snd => match &args[0] {
                Value::Pair(p) => Ok(p.1.clone()),
                other => Err(type_err("snd", "pair", other)),
            },
            ListNew => Ok(Value::List(Rc::new(args))),
            Iota => {
                let n = as_int(&args[0], "iota")?;
                if !(0..=MAX_LIST_LEN).contains(&n) {
                    return Err(EvalError::Type(format!("iota length {n} out of 0..{MAX_LIST_LEN}")));
                }
                self.charge(n as u64)?;
                Ok(Value::List(Rc::new((0..n).map(Value::Int).collect())))
            }
            Repeat => {
                let n = as_int(&args[0], "repeat")?;
                if !(0..=MAX_LIST_LEN).contains(&n) {
                    return Err(EvalError::Type(format!("repeat length {n} out of 0..{MAX_LIST_LEN}")));
                }
                self.charge(n as u64)?;
                Ok(Value::List(Rc::new(vec![args[1].clone(); n as usize])))
            }
            Nth => {
                let l = as_list(&args[0], "nth")?;
                let i = as_int(&args[1], "nth")?;
                if i < 0 || i as usize >= l.len() {
                    return Err(EvalError::Type(format!("nth index {i} out of range 0..{}", l.len())));
                }
                Ok(l[i as usize].clone())
            }
            Len => Ok(Value::Int(as_list(&args[0], "len")?.len() as i64)),
            Key => {
                let c = as_int(&args[0], "key")?;
                validate_color(c)?;
                Ok(Value::Int(5 + c))
            }
            Door => {
                let c = as_int(&args[0], "door")?;
                let s = as_int(&args[1], "door")?;
                validate_color(c)?;
                if !(0..=2).contains(&s) {
                    return Err(EvalError::Type(format!("door state {s} out of 0..2")));
                }
                Ok(Value::Int(11 + 3 * c + s))
            }
            IsKey => Ok(Value::Bool(matches!(args[0], Value::Int(v) if (5..=10).contains(&v)))),
            IsDoor => Ok(Value::Bool(matches!(args[0], Value::Int(v) if (11..=28).contains(&v)))),
            KeyColor => {
                let v = as_int(&args[0], "key-color")?;
                if !(5..=10).contains(&v) {
                    return Err(EvalError::Type(format!("key-color of non-key code {v}")));
                }
                Ok(Value::Int(v - 5))
            }
            DoorColor => {
                let v = as_int(&args[0], "door-color")?;
                if !(11..=28).contains(&v) {
                    return Err(EvalError::Type(format!("door-color of non-door code {v}")));
                }
                Ok(Value::Int((v - 11) / 3))
            }
            DoorStateOf => {
                let v = as_int(&args[0], "door-state")?;
                if !(11..=28).contains(&v) {
                    return Err(EvalError::Type(format!("door-state of non-door code {v}")));
                }
                Ok(Value::Int((v - 11) % 3))
            }
            WeightedChoice => {
                if !matches!(args[0], Value::Rng) {
                    return Err(EvalError::Sample("first argument must be the rng parameter".into()));
                }
                let weights = as_list(&args[1], "weighted-choice weights")?;
                let values = as_list(&args[2], "weighted-choice values")?;
                if weights.is_empty() || weights.len() != values.len() {
                    return Err(EvalError::Sample(format!(
                        "need matching nonempty weights/values, got {}/{}",
                        weights.len(),
                        values.len()
                    )));
                }
                self.charge(weights.len() as u64)?;
                let mut ws = Vec::with_capacity(weights.len());
                let mut total = 0.0f64;
                for w in weights.iter() {
                    let w = as_f64(w, "weight")?;
                    if !w.is_finite() || w < 0.0 {
                        return Err(EvalError::Sample(format!("weight {w} must be finite and nonnegative")));
                    }
                    total += w;
                    ws.push(w);
                }
                if total <= 0.0 {
                    return Err(EvalError::Sample("weights sum to zero".into()));
                }
                let rng = self
                    .rng
                    .as_deref_mut()
                    .ok_or_else(|| EvalError::Sample("no rng stream attached".into()))?;
                let u: f64 = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = values.len() - 1;
                for (i, w) in ws.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                Ok(values[chosen].clone())
            }
        }
    }
}

fn truth(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(type_err("condition", "bool", &other)),
    }
}

fn type_err(ctx: &str, want: &str, got: &Value) -> EvalError {
    EvalError::Type(format!("{ctx}: expected {want}, got {}", got.type_name()))
}

fn as_int(v: &Value, ctx: &str) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(type_err(ctx, "int", other)),
    }
}

fn as_f64(v: &Value, ctx: &str) -> Result<f64, EvalError> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        other => Err(type_err(ctx, "number", other)),
    }
}

fn as_grid<'a>(v: &'a Value, ctx: &str) -> Result<&'a GridVal, EvalError> {
    match v {
        Value::Grid(g) => Ok(g),
        other => Err(type_err(ctx, "grid", other)),
    }
}

fn as_state<'a>(v: &'a Value, ctx: &str) -> Result<&'a StateVal, EvalError> {
    match v {
        Value::State(s) => Ok(s),
        other => Err(type_err(ctx, "state", other)),
    }
}

fn as_obs<'a>(v: &'a Value, ctx: &str) -> Result<&'a ObsVal, EvalError> {
    match v {
        Value::Obs(o) => Ok(o),
        other => Err(type_err(ctx, "obs", other)),
    }
}

fn as_list<'a>(v: &'a Value, ctx: &str) -> Result<&'a [Value], EvalError> {
    match v {
        Value::List(l) => Ok(l),
        other => Err(type_err(ctx, "list", other)),
    }
}

fn as_cell_code(v: &Value) -> Result<u8, EvalError> {
    let c = as_int(v, "cell code")?;
    if !(0..=MAX_CELL_CODE).contains(&c) {
        return Err(EvalError::Type(format!("cell code {c} out of 0..{MAX_CELL_CODE}")));
    }
    Ok(c as u8)
}

fn validate_dir(d: i64) -> Result<(), EvalError> {
    if (0..=3).contains(&d) {
        Ok(())
    } else {
        Err(EvalError::Type(format!("direction {d} out of 0..3")))
    }
}

fn validate_carry(c: i64) -> Result<(), EvalError> {
    if c == 0 || (5..=10).contains(&c) {
        Ok(())
    } else {
        Err(EvalError::Type(format!("carry code {c} must be 0 or a key code 5..10")))
    }
}

fn validate_color(c: i64) -> Result<(), EvalError> {
    if (0..=5).contains(&c) {
        Ok(())
    } else {
        Err(EvalError::Type(format!("color {c} out of 0..5")))
    }
}

fn numeric_fold(
    args: &[Value],
    ctx: &str,
    int_op: impl Fn(i64, i64) -> Option<i64>,
    float_op: impl Fn(f64, f64) -> f64,
) -> Result<Value, EvalError> {
    let all_int = args.iter().all(|v| matches!(v, Value::Int(_)));
    if all_int {
        let mut acc = as_int(&args[0], ctx)?;
        for v in &args[1..] {
            acc = int_op(acc, as_int(v, ctx)?).ok_or(EvalError::Overflow)?;
        }
        Ok(Value::Int(acc))
    } else {
        let mut acc = as_f64(&args[0], ctx)?;
        for v in &args[1..] {
            acc = float_op(acc, as_f64(v, ctx)?);
        }
        Ok(Value::Float(acc))
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::{compile, ComponentKind};
    use super::*;
    use crate::rng;

    fn eval_init(src: &str, seed: u64) -> Result<Value, EvalError> {
        let p = compile(src, ComponentKind::Initial).unwrap();
        let mut r = rng::derive(seed, &[1]);
        run(&p, &[Value::Rng], Some(&mut r), &EvalBudget::default())
    }

    #[test]
    fn arithmetic_and_let() {
        let v = eval_init("(define (init rng) (let ((a 2) (b (* a 3))) (+ a b (- 1) (/ 1 2))))", 0).unwrap();
        match v {
            Value::Float(f) => assert!((f - 7.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fold_cells_counts() {
        let src = "(define (init rng)
            (fold-cells (make-grid 4 3 FLOOR) 0 (acc x y c) (+ acc c)))";
        assert_eq!(eval_init(src, 0).unwrap(), Value::Int(12));
    }

    #[test]
    fn recursion_exhausts_budget() {
        let src = "(define (loop x) (loop (+ x 1)))(define (init rng) (loop 0))";
        let err = eval_init(src, 0).unwrap_err();
        assert!(matches!(err, EvalError::Depth | EvalError::Budget), "{err:?}");
        // A non-recursive deep fold exhausts the step budget instead.
        let src = "(define (init rng)
            (fold-cells (make-grid 64 64 FLOOR) 0 (acc x y c)
              (fold-cells (make-grid 64 64 FLOOR) acc (a2 x2 y2 c2)
                (fold-cells (make-grid 8 8 FLOOR) a2 (a3 x3 y3 c3) (+ a3 1)))))";
        assert_eq!(eval_init(src, 0).unwrap_err(), EvalError::Budget);
    }

    #[test]
    fn purity_same_rng_stream_same_result() {
        let src = "(define (init rng)
            (make-state (make-grid 4 4 FLOOR)
              (weighted-choice rng (repeat 3 1) (list 1 2 3))
              (+ 1 (weighted-choice rng (list 1 2) (list 0 1)))
              NORTH NONE 0))";
        let a = eval_init(src, 42).unwrap();
        let b = eval_init(src, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weighted_choice_respects_weights() {
        let src = "(define (init rng) (weighted-choice rng (list 0 1 0) (list 10 20 30)))";
        for seed in 0..20 {
            assert_eq!(eval_init(src, seed).unwrap(), Value::Int(20));
        }
    }

    #[test]
    fn malformed_obs_grid_is_type_error() {
        let src = "(define (observe state action) (make-obs (make-grid 2 3 FLOOR) NORTH NONE))";
        let p = compile(src, ComponentKind::Observation).unwrap();
        let st = Value::State(Rc::new(StateVal {
            grid: Rc::new(GridVal { width: 3, height: 3, cells: vec![1; 9] }),
            x: 1,
            y: 1,
            dir: 0,
            carry: 0,
            step: 0,
        }));
        let err = run(&p, &[st, Value::Int(0)], None, &EvalBudget::default()).unwrap_err();
        assert!(matches!(err, EvalError::Type(_)), "{err:?}");
    }

    #[test]
    fn grid_out_of_bounds_is_caught() {
        let src = "(define (init rng) (grid-get (make-grid 3 3 FLOOR) 5 0))";
        assert!(matches!(eval_init(src, 0).unwrap_err(), EvalError::Type(_)));
    }

    #[test]
    fn division_by_zero_is_caught() {
        assert_eq!(eval_init("(define (init rng) (div 1 0))", 0).unwrap_err(), EvalError::DivideByZero);
        assert_eq!(eval_init("(define (init rng) (/ 1 0))", 0).unwrap_err(), EvalError::DivideByZero);
    }
}
