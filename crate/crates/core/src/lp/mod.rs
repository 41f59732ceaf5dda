//! Exact linear programming over the rationals.
//!
//! [`solve`] runs a two-phase dense-tableau primal simplex. The entering
//! column is the one with the largest reduced cost. Ties in the ratio test
//! are broken lexicographically on the rows of the inverse basis, which rules
//! out cycling; where that order is unavailable (after artificial columns are
//! driven out of the basis) Bland's rule takes over after a run of degenerate
//! pivots instead. Either way the method terminates on every input. The
//! tableau is fraction-free: entries are integers scaled by the basis
//! determinant, and each pivot update divides exactly by the previous
//! determinant. Every outcome
//! carries a certificate that [`check_certificate`] re-verifies from the
//! original problem data alone:
//!
//! * `Optimal`: primal point plus one dual multiplier per constraint, with
//!   equal primal and dual objectives.
//! * `Unbounded`: a feasible point plus a ray that keeps it feasible and
//!   strictly improves the objective.
//! * `Infeasible`: non-negative row multipliers whose aggregate reads
//!   `0 ≥ (something positive)` on the variable box.
//!
//! Multipliers are reported against each row written in `≤` form: a `≥` row
//! `a·x ≥ b` is read as `−a·x ≤ −b`. Multipliers of inequality rows are
//! therefore always non-negative; multipliers of equality rows are free.
//!
//! # Debug dump
//!
//! `LinearProgram` implements `Display` as a plain-text dump, one item per
//! line, with exact `p/q` literals:
//!
//! ```text
//! maximize 1 x0 + -1/2 x1
//! subject to
//!   c0: 1 x0 + 3 x1 <= 5
//!   c1: 1 x1 = 0
//! bounds
//!   x0 free
//!   0 <= x1 <= 4
//! ```

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::Rational;

mod int;

use int::Int;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    fn lhs(&self, x: &[Rational]) -> Rational {
        dot(&self.coeffs, x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bounds {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Bounds {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn non_negative() -> Self {
        Self {
            lower: Some(Rational::zero()),
            upper: None,
        }
    }

    fn contains(&self, v: &Rational) -> bool {
        self.lower.as_ref().is_none_or(|l| v >= l) && self.upper.as_ref().is_none_or(|u| v <= u)
    }
}

/// `maximize objective·x` subject to the constraints and variable bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    RowWidth { row: usize, expected: usize, got: usize },
    #[error("{got} variable bounds given for {expected} variables")]
    BoundsLength { expected: usize, got: usize },
    #[error("variable x{0} has lower bound above its upper bound")]
    InvertedBounds(usize),
}

impl LinearProgram {
    /// A program over `objective.len()` free variables with no constraints.
    pub fn new(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            bounds: vec![Bounds::free(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> usize {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    /// Adds a constraint given as `(variable, coefficient)` terms. Repeated
    /// variables accumulate.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) -> usize {
        let mut coeffs = vec![Rational::zero(); self.num_vars()];
        for (j, a) in terms {
            coeffs[*j] += a;
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, bounds: Bounds) {
        self.bounds[var] = bounds;
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::BoundsLength {
                expected: n,
                got: self.bounds.len(),
            });
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::RowWidth {
                    row,
                    expected: n,
                    got: c.coeffs.len(),
                });
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(LpError::InvertedBounds(j));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }

    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self.bounds.iter().zip(x).all(|(b, v)| b.contains(v))
            && self.constraints.iter().all(|c| {
                let lhs = c.lhs(x);
                match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                }
            })
    }
}

fn write_linear(f: &mut fmt::Formatter<'_>, coeffs: &[Rational]) -> fmt::Result {
    let mut first = true;
    for (j, a) in coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        if !first {
            f.write_str(" + ")?;
        }
        write!(f, "{a} x{j}")?;
        first = false;
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("maximize ")?;
        write_linear(f, &self.objective)?;
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for (i, c) in self.constraints.iter().enumerate() {
            write!(f, "  c{i}: ")?;
            write_linear(f, &c.coeffs)?;
            writeln!(f, " {} {}", c.relation, c.rhs)?;
        }
        writeln!(f, "bounds")?;
        for (j, b) in self.bounds.iter().enumerate() {
            match (&b.lower, &b.upper) {
                (None, None) => writeln!(f, "  x{j} free")?,
                (Some(l), None) => writeln!(f, "  {l} <= x{j}")?,
                (None, Some(u)) => writeln!(f, "  x{j} <= {u}")?,
                (Some(l), Some(u)) => writeln!(f, "  {l} <= x{j} <= {u}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        primal: Vec<Rational>,
        duals: Vec<Rational>,
        objective: Rational,
    },
    Unbounded {
        point: Vec<Rational>,
        ray: Vec<Rational>,
    },
    Infeasible {
        farkas: Vec<Rational>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    pub phase_one_pivots: usize,
    pub pivots: usize,
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_with_stats(lp).map(|(out, _)| out)
}

/// How an original variable maps onto non-negative standard-form columns.
#[derive(Debug, Clone)]
enum ColumnMap {
    /// `x = offset + col`
    Shift { col: usize, offset: Rational },
    /// `x = offset − col`
    Mirror { col: usize, offset: Rational },
    /// `x = pos − neg`
    Split { pos: usize, neg: usize },
}

impl ColumnMap {
    fn value(&self, v: &[Rational]) -> Rational {
        match self {
            ColumnMap::Shift { col, offset } => offset + &v[*col],
            ColumnMap::Mirror { col, offset } => offset - &v[*col],
            ColumnMap::Split { pos, neg } => &v[*pos] - &v[*neg],
        }
    }

    fn direction(&self, v: &[Rational]) -> Rational {
        match self {
            ColumnMap::Shift { col, .. } => v[*col].clone(),
            ColumnMap::Mirror { col, .. } => -&v[*col],
            ColumnMap::Split { pos, neg } => &v[*pos] - &v[*neg],
        }
    }
}

/// Fraction-free simplex tableau.
///
/// With basis matrix `B` of determinant `D`, row `i` holds `D·B⁻¹` applied
/// to the integer constraint matrix, so every pivot divides exactly and no
/// gcd is needed. Rows are rescaled lazily: a row last updated when the
/// determinant was `row_det[i]` stands for `row · det / row_det[i]`, and
/// only ratios within a row are ever read. Each row keeps the coefficient of
/// its basic column positive, and the right-hand side sits in the last
/// position. The objective row holds `(reduced costs, −value)` times
/// `cost_scale · obj_det`.
struct Tableau {
    rows: Vec<Vec<Int>>,
    row_det: Vec<Int>,
    det: Int,
    obj: Vec<Int>,
    obj_det: Int,
    cost_scale: Int,
    basis: Vec<usize>,
    /// Columns of the starting identity basis, in row order: their entries in
    /// row `i` are row `i` of the inverse basis.
    unit_cols: Vec<usize>,
    /// Factor each original row was multiplied by to make it integral.
    row_scale: Vec<Rational>,
    pivots: usize,
}

/// Consecutive degenerate pivots after which the largest-coefficient rule
/// hands over to Bland's rule until the objective next improves.
const DEGENERATE_LIMIT: usize = 50;

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.obj.len() - 1
    }

    /// Replaces `target` by `(p·target − f·pivot_row) / d`, which divides
    /// exactly. `pivot_row` lists the pivot row's non-zero entries in column
    /// order.
    fn eliminate(target: &mut [Int], pivot_row: &[(usize, Int)], p: &Int, f: &Int, d: &Int) {
        let mut next = pivot_row.iter().peekable();
        for (j, t) in target.iter_mut().enumerate() {
            match next.peek() {
                Some((k, a)) if *k == j => {
                    *t = Int::mul_sub(p, t, f, a).div_exact(d);
                    next.next();
                }
                _ if !t.is_zero() => *t = t.mul(p).div_exact(d),
                _ => {}
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        if self.row_det[r] != self.det {
            let (det, d) = (&self.det, &self.row_det[r]);
            for a in self.rows[r].iter_mut().filter(|a| !a.is_zero()) {
                *a = a.mul(det).div_exact(d);
            }
        }
        // negating the pivot row keeps every row an integer multiple of the
        // fraction-free form, with the sign of the determinant flipped
        if self.rows[r][c].is_negative() {
            for a in self.rows[r].iter_mut() {
                *a = a.neg();
            }
        }
        let p = self.rows[r][c].clone();
        let pivot_row: Vec<(usize, Int)> = self.rows[r]
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(j, a)| (j, a.clone()))
            .collect();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            Self::eliminate(&mut self.rows[i], &pivot_row, &p, &f, &self.row_det[i]);
            self.row_det[i] = p.clone();
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            Self::eliminate(&mut self.obj, &pivot_row, &p, &f, &self.obj_det);
            self.obj_det = p.clone();
        }
        self.row_det[r] = p.clone();
        self.det = p;
        self.basis[r] = c;
    }

    /// Entry `(i, j)` of the tableau normalized to a unit basic coefficient.
    fn entry(&self, i: usize, j: usize) -> Rational {
        let row = &self.rows[i];
        Rational::new(row[j].to_bigint(), row[self.basis[i]].to_bigint())
    }

    /// Installs the cost vector `costs` and recomputes reduced costs and value.
    fn price(&mut self, costs: &[Rational]) {
        let mut reduced: Vec<Rational> = costs.to_vec();
        reduced.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            let d = Rational::from_integer(self.rows[i][b].to_bigint());
            let factor = cb / d;
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] -= &factor * Rational::from_integer(a.to_bigint());
                }
            }
        }
        let mut kappa = BigInt::one();
        for q in costs.iter().filter(|q| !q.is_zero()) {
            kappa = kappa.lcm(q.denom());
        }
        let scale = Rational::from_integer(&kappa * self.det.to_bigint());
        self.obj = reduced
            .iter()
            .map(|q| {
                let v = q * &scale;
                debug_assert!(v.is_integer());
                Int::from_bigint(v.numer())
            })
            .collect();
        self.obj_det = self.det.clone();
        self.cost_scale = Int::from_bigint(&kappa);
    }

    fn value_is_zero(&self) -> bool {
        self.obj[self.rhs_col()].is_zero()
    }

    fn value(&self) -> Rational {
        let scale = self.cost_scale.mul(&self.obj_det);
        -Rational::new(self.obj[self.rhs_col()].to_bigint(), scale.to_bigint())
    }

    /// Whether every row `(rhs, inverse basis row)` is lexicographically
    /// positive, which the lexicographic ratio test needs and preserves.
    fn lex_positive(&self) -> bool {
        let rhs = self.rhs_col();
        self.rows.iter().all(|row| {
            row[rhs].is_positive()
                || self
                    .unit_cols
                    .iter()
                    .map(|&c| &row[c])
                    .find(|a| !a.is_zero())
                    .is_some_and(Int::is_positive)
        })
    }

    /// Orders rows `i` and `k` by `(rhs, inverse basis row) / entry` in
    /// column `c`; both entries are positive.
    fn lex_ratio(&self, i: usize, k: usize, c: usize) -> Ordering {
        let (ri, rk) = (&self.rows[i], &self.rows[k]);
        std::iter::once(self.rhs_col())
            .chain(self.unit_cols.iter().copied())
            .map(|j| ri[j].mul(&rk[c]).cmp(&rk[j].mul(&ri[c])))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }

    /// Largest reduced cost enters (lowest index on ties) and the minimum
    /// ratio row leaves. With a lexicographically positive tableau, ratio
    /// ties go to the lexicographically smallest row, so no basis repeats.
    /// Otherwise ties go to the lowest basic column, and after
    /// `DEGENERATE_LIMIT` consecutive degenerate pivots the lowest-index
    /// improving column enters until a pivot moves the objective, so the
    /// Bland stretches cannot cycle. With `ceiling` set the run also stops
    /// once the value reaches zero, which is optimal for the phase-one
    /// objective.
    fn run(&mut self, allowed: usize, ceiling: bool) -> Option<usize> {
        let rhs = self.rhs_col();
        let lex = self.lex_positive();
        let mut degenerate = 0usize;
        loop {
            if ceiling && self.value_is_zero() {
                return None;
            }
            let entering = if !lex && degenerate >= DEGENERATE_LIMIT {
                (0..allowed).find(|&j| self.obj[j].is_positive())?
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if self.obj[j].is_positive() && best.is_none_or(|b| self.obj[j] > self.obj[b]) {
                        best = Some(j);
                    }
                }
                best?
            };
            let mut leave: Option<usize> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][entering];
                if !a.is_positive() {
                    continue;
                }
                leave = Some(match leave {
                    None => i,
                    Some(k) => {
                        // rhs_i / a_i versus rhs_k / a_k with positive a
                        let lhs = self.rows[i][rhs].mul(&self.rows[k][entering]);
                        let rhs = self.rows[k][rhs].mul(a);
                        match lhs.cmp(&rhs) {
                            Ordering::Less => i,
                            Ordering::Equal if lex && self.lex_ratio(i, k, entering).is_lt() => i,
                            Ordering::Equal if !lex && self.basis[i] < self.basis[k] => i,
                            _ => k,
                        }
                    }
                });
            }
            let Some(r) = leave else {
                return Some(entering);
            };
            if self.rows[r][rhs].is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, entering);
        }
    }

    /// `c_B · B⁻¹ e_i` for each row, reading B⁻¹ off the initial basis
    /// columns and undoing the row scaling.
    fn row_duals(&self, costs: &[Rational]) -> Vec<Rational> {
        self.unit_cols
            .iter()
            .zip(&self.row_scale)
            .map(|(&col, scale)| {
                let mut y = Rational::zero();
                for (r, &b) in self.basis.iter().enumerate() {
                    if !costs[b].is_zero() && !self.rows[r][col].is_zero() {
                        y += &costs[b] * self.entry(r, col);
                    }
                }
                y * scale
            })
            .collect()
    }

    fn column_values(&self, ncols: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.entry(i, self.rhs_col());
        }
        v
    }
}

pub fn solve_with_stats(lp: &LinearProgram) -> Result<(LpOutcome, SolveStats), LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_constraints();

    let mut maps = Vec::with_capacity(n);
    let mut nstruct = 0usize;
    let mut bound_rows: Vec<(usize, Rational)> = Vec::new();
    for b in &lp.bounds {
        let map = match (&b.lower, &b.upper) {
            (Some(l), u) => {
                if let Some(u) = u {
                    bound_rows.push((nstruct, u - l));
                }
                ColumnMap::Shift {
                    col: nstruct,
                    offset: l.clone(),
                }
            }
            (None, Some(u)) => ColumnMap::Mirror {
                col: nstruct,
                offset: u.clone(),
            },
            (None, None) => {
                nstruct += 1;
                ColumnMap::Split {
                    pos: nstruct - 1,
                    neg: nstruct,
                }
            }
        };
        nstruct += 1;
        maps.push(map);
    }

    // Standard-form rows over the structural columns.
    let total_rows = m + bound_rows.len();
    let mut std_rows: Vec<Vec<Rational>> = Vec::with_capacity(total_rows);
    let mut std_rhs: Vec<Rational> = Vec::with_capacity(total_rows);
    let mut relations: Vec<Relation> = Vec::with_capacity(total_rows);
    for c in &lp.constraints {
        let mut row = vec![Rational::zero(); nstruct];
        let mut rhs = c.rhs.clone();
        for (a, map) in c.coeffs.iter().zip(&maps) {
            if a.is_zero() {
                continue;
            }
            match map {
                ColumnMap::Shift { col, offset } => {
                    row[*col] += a;
                    rhs -= a * offset;
                }
                ColumnMap::Mirror { col, offset } => {
                    row[*col] -= a;
                    rhs -= a * offset;
                }
                ColumnMap::Split { pos, neg } => {
                    row[*pos] += a;
                    row[*neg] -= a;
                }
            }
        }
        std_rows.push(row);
        std_rhs.push(rhs);
        relations.push(c.relation);
    }
    for (col, cap) in &bound_rows {
        let mut row = vec![Rational::zero(); nstruct];
        row[*col] = Rational::one();
        std_rows.push(row);
        std_rhs.push(cap.clone());
        relations.push(Relation::Le);
    }

    let nslack = relations.iter().filter(|r| **r != Relation::Eq).count();
    let mut signs = Vec::with_capacity(total_rows);
    let mut initial_basis = vec![usize::MAX; total_rows];
    let mut slack_col = nstruct;
    let mut slack_of = vec![None; total_rows];
    for (i, rel) in relations.iter().enumerate() {
        let coef = match rel {
            Relation::Le => Some(Rational::one()),
            Relation::Ge => Some(-Rational::one()),
            Relation::Eq => None,
        };
        if let Some(coef) = coef {
            slack_of[i] = Some((slack_col, coef));
            slack_col += 1;
        }
        signs.push(if std_rhs[i].is_negative() { -1 } else { 1 });
    }
    let mut nart = 0usize;
    for i in 0..total_rows {
        let unit_slack = match &slack_of[i] {
            Some((col, coef)) => (coef.is_positive() == (signs[i] > 0)).then_some(*col),
            None => None,
        };
        initial_basis[i] = match unit_slack {
            Some(col) => col,
            None => {
                nart += 1;
                nstruct + nslack + nart - 1
            }
        };
    }
    let art_start = nstruct + nslack;
    let ncols = art_start + nart;

    let mut rows = Vec::with_capacity(total_rows);
    let mut row_scale = Vec::with_capacity(total_rows);
    for i in 0..total_rows {
        let mut row = std::mem::take(&mut std_rows[i]);
        row.resize(ncols, Rational::zero());
        if let Some((col, coef)) = &slack_of[i] {
            row[*col] = coef.clone();
        }
        let mut b = std::mem::take(&mut std_rhs[i]);
        if signs[i] < 0 {
            for a in row.iter_mut().filter(|a| !a.is_zero()) {
                *a = -&*a;
            }
            b = -b;
        }
        if initial_basis[i] >= art_start {
            row[initial_basis[i]] = Rational::one();
        }
        row.push(b);
        // clearing denominators scales the row; scaling the basic column back
        // keeps the starting basis an identity matrix
        let (mut row, scale) = int::integer_row(&row);
        row[initial_basis[i]] = Int::ONE;
        rows.push(row);
        row_scale.push(Rational::from_integer(scale));
    }

    let mut tab = Tableau {
        row_det: vec![Int::ONE; rows.len()],
        rows,
        det: Int::ONE,
        obj: Vec::new(),
        obj_det: Int::ONE,
        cost_scale: Int::ONE,
        row_scale,
        basis: initial_basis.clone(),
        unit_cols: initial_basis.clone(),
        pivots: 0,
    };
    let mut stats = SolveStats::default();

    let sign_back = |raw: Vec<Rational>| -> Vec<Rational> {
        (0..m)
            .map(|k| {
                let lambda = if signs[k] < 0 { -&raw[k] } else { raw[k].clone() };
                match lp.constraints[k].relation {
                    Relation::Ge => -lambda,
                    _ => lambda,
                }
            })
            .collect()
    };

    if nart > 0 {
        let mut phase_one = vec![Rational::zero(); ncols];
        for c in phase_one.iter_mut().skip(art_start) {
            *c = -Rational::one();
        }
        tab.price(&phase_one);
        let stuck = tab.run(art_start, true);
        debug_assert!(stuck.is_none(), "phase one is bounded");
        stats.phase_one_pivots = tab.pivots;
        if tab.value().is_negative() {
            let w = tab.row_duals(&phase_one);
            stats.pivots = tab.pivots;
            return Ok((LpOutcome::Infeasible { farkas: sign_back(w) }, stats));
        }
        for r in 0..total_rows {
            if tab.basis[r] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| !tab.rows[r][j].is_zero()) {
                    tab.pivot(r, j);
                }
            }
        }
    }

    let mut costs = vec![Rational::zero(); ncols];
    for (c, map) in lp.objective.iter().zip(&maps) {
        match map {
            ColumnMap::Shift { col, .. } => costs[*col] = c.clone(),
            ColumnMap::Mirror { col, .. } => costs[*col] = -c,
            ColumnMap::Split { pos, neg } => {
                costs[*pos] = c.clone();
                costs[*neg] = -c;
            }
        }
    }
    tab.price(&costs);
    let unbounded = tab.run(art_start, false);
    stats.pivots = tab.pivots;

    let values = tab.column_values(ncols);
    let primal: Vec<Rational> = maps.iter().map(|mp| mp.value(&values)).collect();
    if let Some(entering) = unbounded {
        let mut dir = vec![Rational::zero(); ncols];
        dir[entering] = Rational::one();
        for (i, &b) in tab.basis.iter().enumerate() {
            dir[b] = -tab.entry(i, entering);
        }
        let ray = maps.iter().map(|mp| mp.direction(&dir)).collect();
        return Ok((LpOutcome::Unbounded { point: primal, ray }, stats));
    }
    let duals = sign_back(tab.row_duals(&costs));
    let objective = lp.objective_value(&primal);
    Ok((
        LpOutcome::Optimal {
            primal,
            duals,
            objective,
        },
        stats,
    ))
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum()
}

/// Why a certificate failed to verify.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("point is not feasible")]
    Infeasible,
    #[error("multiplier of inequality row {0} is negative")]
    MultiplierSign(usize),
    #[error("reduced cost of x{0} is not supported by a finite bound")]
    DualInfeasible(usize),
    #[error("primal objective {primal} differs from reported {reported}")]
    ObjectiveMismatch { primal: String, reported: String },
    #[error("strong duality fails: primal {primal}, dual {dual}")]
    DualityGap { primal: String, dual: String },
    #[error("complementary slackness fails at row {0}")]
    Slackness(usize),
    #[error("ray violates homogeneous row {0}")]
    RayRow(usize),
    #[error("ray leaves the bounds of x{0}")]
    RayBound(usize),
    #[error("ray does not improve the objective")]
    RayNotImproving,
    #[error("aggregated row is unbounded below on the variable box at x{0}")]
    FarkasUnbounded(usize),
    #[error("aggregated row does not contradict feasibility")]
    FarkasNoContradiction,
}

/// Re-verifies an outcome against `lp` using exact arithmetic only.
pub fn check_certificate(lp: &LinearProgram, out: &LpOutcome) -> bool {
    certificate_error(lp, out).is_none()
}

pub fn certificate_error(lp: &LinearProgram, out: &LpOutcome) -> Option<CertificateError> {
    if lp.validate().is_err() {
        return Some(CertificateError::Infeasible);
    }
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let len =
        |v: &[Rational], expected| (v.len() != expected).then_some(CertificateError::Length { expected, got: v.len() });
    // Lagrange multipliers in the orientation of the original rows.
    let lagrange = |y: &[Rational]| -> Result<Vec<Rational>, CertificateError> {
        y.iter()
            .zip(&lp.constraints)
            .enumerate()
            .map(|(k, (v, c))| match c.relation {
                Relation::Eq => Ok(v.clone()),
                _ if v.is_negative() => Err(CertificateError::MultiplierSign(k)),
                Relation::Le => Ok(v.clone()),
                Relation::Ge => Ok(-v),
            })
            .collect()
    };
    let aggregate = |lam: &[Rational]| -> Vec<Rational> {
        let mut g = vec![Rational::zero(); n];
        for (l, c) in lam.iter().zip(&lp.constraints) {
            if l.is_zero() {
                continue;
            }
            for (gj, a) in g.iter_mut().zip(&c.coeffs) {
                if !a.is_zero() {
                    *gj += l * a;
                }
            }
        }
        g
    };
    match out {
        LpOutcome::Optimal {
            primal,
            duals,
            objective,
        } => {
            if let Some(e) = len(primal, n).or_else(|| len(duals, m)) {
                return Some(e);
            }
            if !lp.is_feasible(primal) {
                return Some(CertificateError::Infeasible);
            }
            let value = lp.objective_value(primal);
            if value != *objective {
                return Some(CertificateError::ObjectiveMismatch {
                    primal: value.to_string(),
                    reported: objective.to_string(),
                });
            }
            let lam = match lagrange(duals) {
                Ok(l) => l,
                Err(e) => return Some(e),
            };
            let g = aggregate(&lam);
            let mut dual_value: Rational = lam.iter().zip(&lp.constraints).map(|(l, c)| l * &c.rhs).sum();
            for j in 0..n {
                let d = &lp.objective[j] - &g[j];
                let b = &lp.bounds[j];
                let bound = match d.cmp(&Rational::zero()) {
                    Ordering::Greater => b.upper.as_ref(),
                    Ordering::Less => b.lower.as_ref(),
                    Ordering::Equal => continue,
                };
                match bound {
                    Some(v) => {
                        if primal[j] != *v {
                            return Some(CertificateError::Slackness(m + j));
                        }
                        dual_value += &d * v;
                    }
                    None => return Some(CertificateError::DualInfeasible(j)),
                }
            }
            for (k, (l, c)) in lam.iter().zip(&lp.constraints).enumerate() {
                if !(l * (&c.rhs - c.lhs(primal))).is_zero() {
                    return Some(CertificateError::Slackness(k));
                }
            }
            if dual_value != value {
                return Some(CertificateError::DualityGap {
                    primal: value.to_string(),
                    dual: dual_value.to_string(),
                });
            }
            None
        }
        LpOutcome::Unbounded { point, ray } => {
            if let Some(e) = len(point, n).or_else(|| len(ray, n)) {
                return Some(e);
            }
            if !lp.is_feasible(point) {
                return Some(CertificateError::Infeasible);
            }
            for (k, c) in lp.constraints.iter().enumerate() {
                let a = c.lhs(ray);
                let ok = match c.relation {
                    Relation::Le => !a.is_positive(),
                    Relation::Eq => a.is_zero(),
                    Relation::Ge => !a.is_negative(),
                };
                if !ok {
                    return Some(CertificateError::RayRow(k));
                }
            }
            for (j, (b, d)) in lp.bounds.iter().zip(ray).enumerate() {
                if (b.lower.is_some() && d.is_negative()) || (b.upper.is_some() && d.is_positive()) {
                    return Some(CertificateError::RayBound(j));
                }
            }
            if !lp.objective_value(ray).is_positive() {
                return Some(CertificateError::RayNotImproving);
            }
            None
        }
        LpOutcome::Infeasible { farkas } => {
            if let Some(e) = len(farkas, m) {
                return Some(e);
            }
            let lam = match lagrange(farkas) {
                Ok(l) => l,
                Err(e) => return Some(e),
            };
            // every feasible x satisfies g·x <= beta
            let g = aggregate(&lam);
            let beta: Rational = lam.iter().zip(&lp.constraints).map(|(l, c)| l * &c.rhs).sum();
            let mut floor = Rational::zero();
            for (j, gj) in g.iter().enumerate() {
                let b = &lp.bounds[j];
                let bound = match gj.cmp(&Rational::zero()) {
                    Ordering::Greater => b.lower.as_ref(),
                    Ordering::Less => b.upper.as_ref(),
                    Ordering::Equal => continue,
                };
                match bound {
                    Some(v) => floor += gj * v,
                    None => return Some(CertificateError::FarkasUnbounded(j)),
                }
            }
            if floor > beta {
                None
            } else {
                Some(CertificateError::FarkasNoContradiction)
            }
        }
    }
}
