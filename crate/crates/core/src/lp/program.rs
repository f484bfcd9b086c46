use std::fmt::Write;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A bounded-variable maximisation LP in row form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn add_var(&mut self, name: String, obj: f64, bounds: (f64, f64)) -> usize {
        self.var_names.push(name);
        self.objective.push(obj);
        self.bounds.push(bounds);
        self.var_names.len() - 1
    }

    pub fn add_row(&mut self, name: String, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row {
            name,
            coeffs,
            sense,
            rhs,
        });
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let term = |c: f64, v: &str| format!("{} {}", fmt_coef(c), v);
        out.push_str("\\ fairmatch benchmark LP\nMaximize\n obj:");
        let terms: Vec<_> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| term(c, &self.var_names[k]))
            .collect();
        if terms.is_empty() {
            out.push_str(" 0 ");
            out.push_str(&self.var_names.first().cloned().unwrap_or_default());
        } else {
            out.push(' ');
            out.push_str(&join_terms(&terms));
        }
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let terms: Vec<_> = row
                .coeffs
                .iter()
                .map(|&(k, c)| term(c, &self.var_names[k]))
                .collect();
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {}: {} {} {}", row.name, join_terms(&terms), op, row.rhs);
        }
        out.push_str("Bounds\n");
        for (name, (lo, hi)) in self.var_names.iter().zip(&self.bounds) {
            let _ = writeln!(out, " {lo} <= {name} <= {hi}");
        }
        out.push_str("End\n");
        out
    }
}

fn fmt_coef(c: f64) -> String {
    if c == 1.0 {
        "1".into()
    } else {
        format!("{c}")
    }
}

fn join_terms(terms: &[String]) -> String {
    let mut s = String::new();
    for (k, t) in terms.iter().enumerate() {
        if k == 0 {
            s.push_str(t);
        } else if let Some(neg) = t.strip_prefix('-') {
            s.push_str(" - ");
            s.push_str(neg);
        } else {
            s.push_str(" + ");
            s.push_str(t);
        }
    }
    s
}

/// Solves one LP relaxation to optimality. Implementations must be
/// deterministic: the same program yields the same point.
pub trait RelaxationSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, lp: &LinearProgram) -> Result<Vec<f64>, LpError>;
}

/// Embedded pure-Rust simplex backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroLpBackend;

impl RelaxationSolver for MicroLpBackend {
    fn name(&self) -> &str {
        "microlp"
    }

    fn solve(&self, lp: &LinearProgram) -> Result<Vec<f64>, LpError> {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = lp
            .objective
            .iter()
            .zip(&lp.bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        for row in &lp.rows {
            let expr: Vec<_> = row.coeffs.iter().map(|&(k, c)| (vars[k], c)).collect();
            let op = match row.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
            };
            problem.add_constraint(expr.as_slice(), op, row.rhs);
        }
        let outcome = problem
            .solve()
            .map_err(|e| LpError::Backend(e.to_string()))?;
        let solution = outcome
            .solution()
            .ok_or_else(|| LpError::Backend("solve interrupted without a solution".into()))?;
        Ok(vars.iter().map(|&v| solution.var_value(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn microlp_solves_small_program() {
        // max x + y s.t. x + 2y <= 2, 3x + y <= 3
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 1.0, (0.0, 10.0));
        let y = lp.add_var("y".into(), 1.0, (0.0, 10.0));
        lp.add_row("a".into(), vec![(x, 1.0), (y, 2.0)], Sense::Le, 2.0);
        lp.add_row("b".into(), vec![(x, 3.0), (y, 1.0)], Sense::Le, 3.0);
        let sol = MicroLpBackend.solve(&lp).unwrap();
        assert!((lp.objective_value(&sol) - 1.4).abs() < 1e-9);
    }

    #[test]
    fn lp_text_signs() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 1.0, (0.0, 1.0));
        let l = lp.add_var("l".into(), 0.0, (0.0, 1.0));
        lp.add_row("r".into(), vec![(x, 1.0), (l, -2.0)], Sense::Ge, 0.0);
        let text = lp.to_lp_text();
        assert!(text.contains(" r: 1 x - 2 l >= 0"), "{text}");
    }
}
