//! User-supplied closed-form vector fields with exact symbolic derivatives.
//!
//! The grammar is deliberately small (variables x,y,z; `+ - * / ^`; sin,
//! cos, exp, sqrt and, for internal use by the power rule, ln) so that
//! symbolic differentiation is total and every analyzer can ask for exact
//! partials of any admissible field. Simplification is conservative:
//! constant folding and 0/1 identities only, no trig rewriting. Equality of
//! expressions is decided semantically (pointwise), never structurally.

mod parser;

pub use parser::parse_expr;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::domain::{Domain, Vec3};
use crate::error::Error;
use crate::{Mat3, Result};

/// Symbolic derivatives are cached up to this total order; higher orders
/// fall back to finite differences at the call site.
pub const MAX_SYMBOLIC_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Expression tree over x, y, z.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Axis),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Exp(Arc<Expr>),
    Sqrt(Arc<Expr>),
    Ln(Arc<Expr>),
}

impl Expr {
    pub fn eval(&self, p: Vec3) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(a) => p[a.index()],
            Expr::Neg(e) => -e.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, b) => {
                let base = a.eval(p);
                match **b {
                    Expr::Const(c) if c.fract() == 0.0 && c.abs() < 1e9 => base.powi(c as i32),
                    _ => base.powf(b.eval(p)),
                }
            }
            Expr::Sin(e) => e.eval(p).sin(),
            Expr::Cos(e) => e.eval(p).cos(),
            Expr::Exp(e) => e.eval(p).exp(),
            Expr::Sqrt(e) => e.eval(p).sqrt(),
            Expr::Ln(e) => e.eval(p).ln(),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    /// Exact derivative with respect to one variable, simplified on the way
    /// out by the smart constructors.
    pub fn derivative(&self, var: Axis) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(a) => Expr::Const(if *a == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.derivative(var)),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Expr::Pow(f, g) => match g.constant_value() {
                // d(f^c) = c·f^(c−1)·f'
                Some(c) => mul(
                    mul(Expr::Const(c), pow((**f).clone(), Expr::Const(c - 1.0))),
                    f.derivative(var),
                ),
                // d(f^g) = f^g·(g'·ln f + g·f'/f)
                None => mul(
                    pow((**f).clone(), (**g).clone()),
                    add(
                        mul(g.derivative(var), ln((**f).clone())),
                        mul((**g).clone(), div(f.derivative(var), (**f).clone())),
                    ),
                ),
            },
            Expr::Sin(e) => mul(cos((**e).clone()), e.derivative(var)),
            Expr::Cos(e) => neg(mul(sin((**e).clone()), e.derivative(var))),
            Expr::Exp(e) => mul(exp((**e).clone()), e.derivative(var)),
            Expr::Sqrt(e) => div(
                e.derivative(var),
                mul(Expr::Const(2.0), sqrt((**e).clone())),
            ),
            Expr::Ln(e) => div(e.derivative(var), (**e).clone()),
        }
    }
}

// Smart constructors: constant folding plus 0/1 identities. Folding a
// non-finite constant is left alone so evaluation reproduces the same NaN.

fn fold2(a: &Expr, b: &Expr, f: impl Fn(f64, f64) -> f64) -> Option<Expr> {
    match (a.constant_value(), b.constant_value()) {
        (Some(x), Some(y)) => Some(Expr::Const(f(x, y))),
        _ => None,
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    if let Some(e) = fold2(&a, &b, |x, y| x + y) {
        return e;
    }
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    Expr::Add(Arc::new(a), Arc::new(b))
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    if let Some(e) = fold2(&a, &b, |x, y| x - y) {
        return e;
    }
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    Expr::Sub(Arc::new(a), Arc::new(b))
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    if let Some(e) = fold2(&a, &b, |x, y| x * y) {
        return e;
    }
    if a.is_zero() || b.is_zero() {
        return Expr::Const(0.0);
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    Expr::Mul(Arc::new(a), Arc::new(b))
}

pub fn div(a: Expr, b: Expr) -> Expr {
    if let Some(e) = fold2(&a, &b, |x, y| x / y) {
        return e;
    }
    if a.is_zero() {
        return Expr::Const(0.0);
    }
    if b.is_one() {
        return a;
    }
    Expr::Div(Arc::new(a), Arc::new(b))
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    if let Some(e) = fold2(&a, &b, |x, y| x.powf(y)) {
        return e;
    }
    if b.is_one() {
        return a;
    }
    if b.is_zero() {
        return Expr::Const(1.0);
    }
    Expr::Pow(Arc::new(a), Arc::new(b))
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => (*inner).clone(),
        other => Expr::Neg(Arc::new(other)),
    }
}

fn fold1(a: &Expr, f: impl Fn(f64) -> f64) -> Option<Expr> {
    a.constant_value().map(|x| Expr::Const(f(x)))
}

pub fn sin(a: Expr) -> Expr {
    fold1(&a, f64::sin).unwrap_or_else(|| Expr::Sin(Arc::new(a)))
}
pub fn cos(a: Expr) -> Expr {
    fold1(&a, f64::cos).unwrap_or_else(|| Expr::Cos(Arc::new(a)))
}
pub fn exp(a: Expr) -> Expr {
    fold1(&a, f64::exp).unwrap_or_else(|| Expr::Exp(Arc::new(a)))
}
pub fn sqrt(a: Expr) -> Expr {
    fold1(&a, f64::sqrt).unwrap_or_else(|| Expr::Sqrt(Arc::new(a)))
}
pub fn ln(a: Expr) -> Expr {
    fold1(&a, f64::ln).unwrap_or_else(|| Expr::Ln(Arc::new(a)))
}

// Pretty printer. Binary `-` and `/` are left associative, `^` is right
// associative and binds tighter than unary minus, so parenthesization must
// respect both the level and the side the child sits on.

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn fmt_child(e: &Expr, parent: u8, needs_gt: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(e);
    let parens = if needs_gt { p <= parent } else { p < parent };
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(a) => write!(f, "{}", a.name()),
            Expr::Neg(e) => {
                write!(f, "-")?;
                fmt_child(e, 3, false, f)
            }
            Expr::Add(a, b) => {
                fmt_child(a, 1, false, f)?;
                write!(f, "+")?;
                fmt_child(b, 1, true, f)
            }
            Expr::Sub(a, b) => {
                fmt_child(a, 1, false, f)?;
                write!(f, "-")?;
                fmt_child(b, 1, true, f)
            }
            Expr::Mul(a, b) => {
                fmt_child(a, 2, false, f)?;
                write!(f, "*")?;
                fmt_child(b, 2, true, f)
            }
            Expr::Div(a, b) => {
                fmt_child(a, 2, false, f)?;
                write!(f, "/")?;
                fmt_child(b, 2, true, f)
            }
            Expr::Pow(a, b) => {
                fmt_child(a, 4, true, f)?;
                write!(f, "^")?;
                fmt_child(b, 4, false, f)
            }
            Expr::Sin(e) => write!(f, "sin({e})"),
            Expr::Cos(e) => write!(f, "cos({e})"),
            Expr::Exp(e) => write!(f, "exp({e})"),
            Expr::Sqrt(e) => write!(f, "sqrt({e})"),
            Expr::Ln(e) => write!(f, "ln({e})"),
        }
    }
}

/// Multi-index type used throughout the derivative machinery.
pub type MultiIndex = [usize; 3];

pub fn multi_index_order(alpha: MultiIndex) -> usize {
    alpha[0] + alpha[1] + alpha[2]
}

/// A 3-component symbolic vector field with a shared derivative cache.
pub struct ExprField {
    components: [Arc<Expr>; 3],
    domain: Domain,
    cache: Mutex<HashMap<(usize, MultiIndex), Arc<Expr>>>,
}

impl std::fmt::Debug for ExprField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ExprField({}, {}, {})",
            self.components[0], self.components[1], self.components[2]
        )
    }
}

impl ExprField {
    pub fn new(components: [Expr; 3], domain: Domain) -> Self {
        let [a, b, c] = components;
        ExprField {
            components: [Arc::new(a), Arc::new(b), Arc::new(c)],
            domain,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn components(&self) -> [&Expr; 3] {
        [
            &self.components[0],
            &self.components[1],
            &self.components[2],
        ]
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn eval(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            self.components[0].eval(p),
            self.components[1].eval(p),
            self.components[2].eval(p),
        )
    }

    /// Exact partial `∂^α X^component`, memoized. `None` above the symbolic
    /// order cap; callers then fall back to finite differences.
    pub fn partial(&self, component: usize, alpha: MultiIndex) -> Option<Arc<Expr>> {
        if multi_index_order(alpha) > MAX_SYMBOLIC_ORDER {
            return None;
        }
        Some(self.partial_uncapped(component, alpha))
    }

    fn partial_uncapped(&self, component: usize, alpha: MultiIndex) -> Arc<Expr> {
        if alpha == [0, 0, 0] {
            return self.components[component].clone();
        }
        if let Some(hit) = self.cache.lock().unwrap().get(&(component, alpha)) {
            return hit.clone();
        }
        // Canonical reduction order x, y, z keeps the cache path unique.
        let axis = Axis::ALL[alpha.iter().position(|&a| a > 0).unwrap()];
        let mut lower = alpha;
        lower[axis.index()] -= 1;
        let base = self.partial_uncapped(component, lower);
        let d = Arc::new(base.derivative(axis));
        self.cache
            .lock()
            .unwrap()
            .insert((component, alpha), d.clone());
        d
    }

    pub fn jacobian(&self, p: Vec3) -> Mat3 {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut alpha = [0usize; 3];
                alpha[j] = 1;
                m[(i, j)] = self.partial(i, alpha).unwrap().eval(p);
            }
        }
        m
    }

    /// Exact symbolic divergence and curl in Euclidean coordinates.
    pub fn divergence_and_curl(&self) -> (Expr, [Expr; 3]) {
        let d = |comp: usize, axis: Axis| -> Expr {
            let mut alpha = [0usize; 3];
            alpha[axis.index()] = 1;
            (*self.partial(comp, alpha).unwrap()).clone()
        };
        let divergence = add(add(d(0, Axis::X), d(1, Axis::Y)), d(2, Axis::Z));
        let curl = [
            sub(d(2, Axis::Y), d(1, Axis::Z)),
            sub(d(0, Axis::Z), d(2, Axis::X)),
            sub(d(1, Axis::X), d(0, Axis::Y)),
        ];
        (divergence, curl)
    }

    pub fn curl_at(&self, p: Vec3) -> Vec3 {
        let (_, c) = self.divergence_and_curl();
        Vec3::new(c[0].eval(p), c[1].eval(p), c[2].eval(p))
    }
}

/// Parse three comma-separated (or line-separated) expressions into a field.
pub fn parse_field(source: &str, domain: Domain) -> Result<ExprField> {
    let parts = split_components(source)?;
    let mut exprs = Vec::with_capacity(3);
    for (text, base) in parts {
        let e = parser::parse_expr_at(&text, base)?;
        exprs.push(e);
    }
    let mut it = exprs.into_iter();
    Ok(ExprField::new(
        [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
        domain,
    ))
}

/// Split a field source into exactly three component strings, each with its
/// byte offset in the original source for error reporting.
fn split_components(source: &str) -> Result<Vec<(String, usize)>> {
    let lines: Vec<(usize, &str)> = {
        let mut acc = Vec::new();
        let mut offset = 0;
        for line in source.split('\n') {
            if !line.trim().is_empty() {
                acc.push((offset, line));
            }
            offset += line.len() + 1;
        }
        acc
    };

    let parts: Vec<(String, usize)> = if lines.len() >= 2 {
        lines
            .into_iter()
            .map(|(off, l)| (l.to_string(), off))
            .collect()
    } else {
        // Single line: split at top-level commas.
        let mut acc = Vec::new();
        let mut start = 0;
        let mut depth = 0i32;
        for (i, ch) in source.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    acc.push((source[start..i].to_string(), start));
                    start = i + 1;
                }
                _ => {}
            }
        }
        acc.push((source[start..].to_string(), start));
        acc
    };

    if parts.len() != 3 {
        return Err(Error::Parse {
            offset: 0,
            msg: format!(
                "expected exactly 3 components (comma-separated or one per line), found {}",
                parts.len()
            ),
        });
    }
    Ok(parts)
}
