//! Exact rational linear programming.
//!
//! A dense two-phase simplex over [`Rational`] with Bland's pivot rule, so it
//! never cycles and always returns the same answer for the same program.
//! Infeasible programs come back with a Farkas certificate read off the
//! phase-one duals; optimal ones with a primal point that is re-checked
//! against every constraint before it is returned.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bounds {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

/// Variables are free unless bounded with [`LinearProgram::bound`].
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            bounds: vec![Bounds::default(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_objective(mut self, objective: Vec<Rational>) -> Self {
        self.objective = objective;
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn bound(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.bounds[var] = Bounds { lower, upper };
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::input(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::input(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(Error::input(format!("variable {j}: lower bound above upper")));
                }
            }
        }
        Ok(())
    }

    /// True when `x` satisfies every constraint and bound exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        let rows_ok = self.constraints.iter().all(|c| {
            let lhs = dot(&c.coeffs, x);
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        });
        let bounds_ok = self.bounds.iter().zip(x).all(|(b, v)| {
            b.lower.as_ref().map_or(true, |l| v >= l) && b.upper.as_ref().map_or(true, |u| v <= u)
        });
        rows_ok && bounds_ok
    }
}

/// Multipliers proving a program has no feasible point.
///
/// With `y` on the rows, `lower`/`upper` on the bounds: `y_i >= 0` on `<=`
/// rows and `y_i <= 0` on `>=` rows, `upper >= 0`, `lower <= 0`,
/// `sum_i y_i a_i + upper + lower = 0` and
/// `sum_i y_i b_i + upper.u + lower.l < 0`. Any feasible point would make
/// the combined inequality read `0 <= negative`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    #[serde(with = "rational::serde_vec")]
    pub rows: Vec<Rational>,
    #[serde(with = "rational::serde_vec")]
    pub lower: Vec<Rational>,
    #[serde(with = "rational::serde_vec")]
    pub upper: Vec<Rational>,
}

impl FarkasCertificate {
    pub fn verify(&self, lp: &LinearProgram) -> bool {
        let n = lp.num_vars();
        if self.rows.len() != lp.constraints.len() || self.lower.len() != n || self.upper.len() != n
        {
            return false;
        }
        let signs_ok = self.rows.iter().zip(&lp.constraints).all(|(y, c)| match c.relation {
            Relation::Le => !y.is_negative(),
            Relation::Ge => !y.is_positive(),
            Relation::Eq => true,
        });
        let bounds_ok = lp.bounds.iter().enumerate().all(|(j, b)| {
            let lo = &self.lower[j];
            let up = &self.upper[j];
            (if b.lower.is_some() { !lo.is_positive() } else { lo.is_zero() })
                && (if b.upper.is_some() { !up.is_negative() } else { up.is_zero() })
        });
        if !signs_ok || !bounds_ok {
            return false;
        }
        for j in 0..n {
            let mut col = &self.lower[j] + &self.upper[j];
            for (y, c) in self.rows.iter().zip(&lp.constraints) {
                col += y * &c.coeffs[j];
            }
            if !col.is_zero() {
                return false;
            }
        }
        let mut rhs = Rational::zero();
        for (y, c) in self.rows.iter().zip(&lp.constraints) {
            rhs += y * &c.rhs;
        }
        for (j, b) in lp.bounds.iter().enumerate() {
            if let Some(l) = &b.lower {
                rhs += &self.lower[j] * l;
            }
            if let Some(u) = &b.upper {
                rhs += &self.upper[j] * u;
            }
        }
        rhs.is_negative()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        solution: Vec<Rational>,
        value: Rational,
    },
    Infeasible(FarkasCertificate),
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[Rational], &Rational)> {
        match self {
            LpOutcome::Optimal { solution, value } => Some((solution, value)),
            _ => None,
        }
    }
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

// How an original variable maps onto nonnegative tableau columns.
#[derive(Clone, Copy)]
enum Column {
    // x = lower + col
    Shifted(usize),
    // x = pos - neg
    Split(usize, usize),
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    cost: Vec<Rational>,
    // Negated objective value.
    cost_rhs: Rational,
}

enum Pivoting {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        if !p.is_one() {
            let inv = p.recip();
            for v in self.rows[row].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[row] *= &inv;
        }
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        let factor = self.cost[col].clone();
        if !factor.is_zero() {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
            self.cost_rhs -= &factor * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Bland's rule: lowest-index improving column enters, ties in the
    /// ratio test leave by lowest basic index.
    fn run(&mut self, allowed: usize) -> Pivoting {
        loop {
            let entering = (0..allowed).find(|&j| self.cost[j].is_negative());
            let Some(col) = entering else {
                return Pivoting::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Pivoting::Unbounded,
            }
        }
    }

    fn reprice(&mut self, costs: &[Rational]) {
        let width = self.cost.len();
        self.cost = (0..width)
            .map(|j| costs.get(j).cloned().unwrap_or_else(Rational::zero))
            .collect();
        self.cost_rhs = Rational::zero();
        for i in 0..self.rows.len() {
            let cb = match costs.get(self.basis[i]) {
                Some(c) if !c.is_zero() => c.clone(),
                _ => continue,
            };
            for (v, a) in self.cost.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *v -= &cb * a;
                }
            }
            self.cost_rhs -= &cb * &self.rhs[i];
        }
    }
}

/// Solves `lp`, returning an optimum, an infeasibility certificate, or
/// `Unbounded`.
pub fn solve(lp: &LinearProgram, sense: Sense) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.num_vars();

    // Upper bounds become explicit rows so they get their own multipliers.
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.relation, c.rhs.clone()))
        .collect();
    let mut upper_row = vec![None; n];
    for (j, b) in lp.bounds.iter().enumerate() {
        if let Some(u) = &b.upper {
            let mut e = vec![Rational::zero(); n];
            e[j] = Rational::one();
            upper_row[j] = Some(rows.len());
            rows.push((e, Relation::Le, u.clone()));
        }
    }

    let mut columns = Vec::with_capacity(n);
    let mut width = 0;
    for b in &lp.bounds {
        if b.lower.is_some() {
            columns.push(Column::Shifted(width));
            width += 1;
        } else {
            columns.push(Column::Split(width, width + 1));
            width += 2;
        }
    }
    let structural = width;
    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let m = rows.len();
    let art0 = structural + slack_count;
    let total = art0 + m;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        cost: vec![Rational::zero(); total],
        cost_rhs: Rational::zero(),
    };
    let mut flipped = vec![false; m];
    let mut next_slack = structural;
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        let mut row = vec![Rational::zero(); total];
        let mut b = rhs.clone();
        for (j, a) in coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match columns[j] {
                Column::Shifted(c) => {
                    row[c] = a.clone();
                    b -= a * lp.bounds[j].lower.as_ref().unwrap();
                }
                Column::Split(p, q) => {
                    row[p] = a.clone();
                    row[q] = -a;
                }
            }
        }
        match rel {
            Relation::Le => {
                row[next_slack] = Rational::one();
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
            }
            Relation::Eq => {}
        }
        if b.is_negative() {
            flipped[i] = true;
            for v in row.iter_mut() {
                *v = -&*v;
            }
            b = -b;
        }
        row[art0 + i] = Rational::one();
        tab.rows.push(row);
        tab.rhs.push(b);
        tab.basis.push(art0 + i);
    }

    // Phase one: minimise the sum of artificials.
    let mut phase1 = vec![Rational::zero(); total];
    for c in phase1.iter_mut().skip(art0) {
        *c = Rational::one();
    }
    tab.reprice(&phase1);
    if let Pivoting::Unbounded = tab.run(total) {
        return Err(Error::inconsistency("phase one reported unbounded"));
    }
    let infeasibility = -&tab.cost_rhs;
    if infeasibility.is_positive() {
        let cert = farkas_from_phase_one(lp, &tab, art0, &flipped, &upper_row);
        if !cert.verify(lp) {
            return Err(Error::inconsistency("Farkas certificate failed verification"));
        }
        return Ok(LpOutcome::Infeasible(cert));
    }

    // Drive zero-level artificials out of the basis where possible; rows
    // where that is impossible are redundant and never move again.
    for i in 0..m {
        if tab.basis[i] >= art0 {
            if let Some(col) = (0..art0).find(|&j| !tab.rows[i][j].is_zero()) {
                tab.pivot(i, col);
            }
        }
    }

    let mut phase2 = vec![Rational::zero(); total];
    for (j, c) in lp.objective.iter().enumerate() {
        let c = match sense {
            Sense::Minimize => c.clone(),
            Sense::Maximize => -c,
        };
        match columns[j] {
            Column::Shifted(col) => phase2[col] = c,
            Column::Split(p, q) => {
                phase2[q] = -&c;
                phase2[p] = c;
            }
        }
    }
    tab.reprice(&phase2);
    if let Pivoting::Unbounded = tab.run(art0) {
        return Ok(LpOutcome::Unbounded);
    }

    let mut col_value = vec![Rational::zero(); total];
    for (i, &b) in tab.basis.iter().enumerate() {
        col_value[b] = tab.rhs[i].clone();
    }
    let solution: Vec<Rational> = columns
        .iter()
        .enumerate()
        .map(|(j, col)| match *col {
            Column::Shifted(c) => lp.bounds[j].lower.as_ref().unwrap() + &col_value[c],
            Column::Split(p, q) => &col_value[p] - &col_value[q],
        })
        .collect();
    if !lp.is_feasible(&solution) {
        return Err(Error::inconsistency("simplex optimum violates a constraint"));
    }
    let value = dot(&lp.objective, &solution);
    Ok(LpOutcome::Optimal { solution, value })
}

fn farkas_from_phase_one(
    lp: &LinearProgram,
    tab: &Tableau,
    art0: usize,
    flipped: &[bool],
    upper_row: &[Option<usize>],
) -> FarkasCertificate {
    // Phase-one dual on internal row i is 1 - reduced cost of its artificial.
    let n = lp.num_vars();
    let multipliers: Vec<Rational> = (0..flipped.len())
        .map(|i| {
            let y = Rational::one() - &tab.cost[art0 + i];
            if flipped[i] {
                y
            } else {
                -y
            }
        })
        .collect();
    let rows = multipliers[..lp.constraints.len()].to_vec();
    let upper: Vec<Rational> = upper_row
        .iter()
        .map(|r| r.map_or_else(Rational::zero, |i| multipliers[i].clone()))
        .collect();
    let lower: Vec<Rational> = (0..n)
        .map(|j| {
            if lp.bounds[j].lower.is_none() {
                return Rational::zero();
            }
            let mut s = upper[j].clone();
            for (y, c) in rows.iter().zip(&lp.constraints) {
                s += y * &c.coeffs[j];
            }
            -s
        })
        .collect();
    FarkasCertificate { rows, lower, upper }
}

/// Result of a convex-hull membership query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Membership {
    /// Convex weights, one per generator, reproducing the target exactly.
    Inside {
        #[serde(with = "rational::serde_vec")]
        weights: Vec<Rational>,
    },
    /// A functional scoring the target strictly above every generator.
    Outside {
        #[serde(with = "rational::serde_vec")]
        separator: Vec<Rational>,
    },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }

    /// Re-checks the witness by exact recomputation.
    pub fn verify(&self, target: &[Rational], generators: &[Vec<Rational>]) -> bool {
        match self {
            Membership::Inside { weights } => {
                check_convex_combination(weights, target, generators)
            }
            Membership::Outside { separator } => {
                if separator.len() != target.len() {
                    return false;
                }
                let t = dot(separator, target);
                generators.iter().all(|g| g.len() == target.len() && dot(separator, g) < t)
            }
        }
    }
}

pub(crate) fn check_convex_combination(
    weights: &[Rational],
    target: &[Rational],
    generators: &[Vec<Rational>],
) -> bool {
    if weights.len() != generators.len() || weights.iter().any(|w| w.is_negative()) {
        return false;
    }
    if weights.iter().fold(Rational::zero(), |a, w| a + w) != Rational::one() {
        return false;
    }
    let mut sum = vec![Rational::zero(); target.len()];
    for (w, g) in weights.iter().zip(generators) {
        if g.len() != target.len() {
            return false;
        }
        if w.is_zero() {
            continue;
        }
        for (s, v) in sum.iter_mut().zip(g) {
            *s += w * v;
        }
    }
    sum == target
}

/// Decides whether `target` lies in the convex hull of `generators`.
pub fn membership(target: &[Rational], generators: &[Vec<Rational>]) -> Result<Membership> {
    if generators.is_empty() {
        return Err(Error::input("membership needs at least one generator"));
    }
    let dim = target.len();
    if let Some(i) = generators.iter().position(|g| g.len() != dim) {
        return Err(Error::input(format!(
            "generator {i} has dimension {}, target has {dim}",
            generators[i].len()
        )));
    }
    let k = generators.len();
    let mut lp = LinearProgram::new(k);
    for b in lp.bounds.iter_mut() {
        b.lower = Some(Rational::zero());
    }
    for (d, t) in target.iter().enumerate() {
        let coeffs = generators.iter().map(|g| g[d].clone()).collect();
        lp.constrain(coeffs, Relation::Eq, t.clone());
    }
    lp.constrain(vec![Rational::one(); k], Relation::Eq, Rational::one());

    let verdict = match solve(&lp, Sense::Minimize)? {
        LpOutcome::Optimal { solution, .. } => Membership::Inside { weights: solution },
        LpOutcome::Infeasible(cert) => Membership::Outside {
            separator: cert.rows[..dim].iter().map(|w| -w).collect(),
        },
        LpOutcome::Unbounded => {
            return Err(Error::inconsistency("feasibility program reported unbounded"))
        }
    };
    if !verdict.verify(target, generators) {
        return Err(Error::inconsistency("membership witness failed verification"));
    }
    Ok(verdict)
}
