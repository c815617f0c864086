//! Minimal linear programming layer: problem container, a deterministic
//! two-phase simplex over generic scalars, and grid snapping for rounding
//! pipelines that expect half-integral or integral vertices.
//!
//! Only what the clustering reductions need is implemented: minimization,
//! finite lower bounds, optional upper bounds, and `<=` / `>=` / `=` rows.
//! [`solve_to_vertex`] runs in `f64`; [`solve_to_vertex_exact`] runs the same
//! pivot sequence rules over arbitrary-precision rationals, which makes it a
//! tolerance-free referee for the floating-point path.

mod scalar;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

pub use scalar::Scalar;

/// A bounded decision variable of a minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    /// Identifier used by [`LinearProgram::to_lp_format`]; must be nonempty
    /// and free of whitespace.
    pub name: String,
    /// Finite lower bound.
    pub lower: f64,
    /// Upper bound; `f64::INFINITY` leaves the variable unbounded above.
    pub upper: f64,
    /// Coefficient in the minimized objective.
    pub objective: f64,
}

impl Variable {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> Self {
        Variable {
            name: name.into(),
            lower,
            upper,
            objective,
        }
    }

    /// A `[0, 1]` variable, the common case in rounding LPs.
    pub fn unit_box(name: impl Into<String>, objective: f64) -> Self {
        Variable::new(name, 0.0, 1.0, objective)
    }
}

/// Row sense of a [`Constraint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// A sparse linear row `sum coeffs <relation> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// `(variable index, coefficient)` pairs; one entry per variable at most.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation: Relation::Le,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs,
        }
    }

    /// Signed violation of the row at `x`: positive means infeasible.
    fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        match self.relation {
            Relation::Le => lhs - self.rhs,
            Relation::Ge => self.rhs - lhs,
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization LP over bounded variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(variables: Vec<Variable>, constraints: Vec<Constraint>) -> Self {
        LinearProgram {
            variables,
            constraints,
        }
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Structural checks; solvers run this before touching the tableau.
    pub fn validate(&self) -> Result<(), LpError> {
        if self.variables.is_empty() {
            return Err(LpError::Invalid("program has no variables"));
        }
        for v in &self.variables {
            if v.name.is_empty() || v.name.contains(char::is_whitespace) {
                return Err(LpError::Invalid("variable name empty or has whitespace"));
            }
            if !v.lower.is_finite() {
                return Err(LpError::Invalid("lower bound must be finite"));
            }
            if v.upper.is_nan() || v.upper < v.lower {
                return Err(LpError::Invalid("upper bound below lower bound"));
            }
            if !v.objective.is_finite() {
                return Err(LpError::Invalid("objective coefficient must be finite"));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(LpError::Invalid("constraint rhs must be finite"));
            }
            let mut seen = vec![false; self.variables.len()];
            for &(j, a) in &c.coeffs {
                if j >= self.variables.len() {
                    return Err(LpError::Invalid("constraint references unknown variable"));
                }
                if !a.is_finite() {
                    return Err(LpError::Invalid("constraint coefficient must be finite"));
                }
                if seen[j] {
                    return Err(LpError::Invalid("variable repeated within a constraint"));
                }
                seen[j] = true;
            }
        }
        Ok(())
    }

    /// Objective value of the minimized objective at `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, &xv)| v.objective * xv)
            .sum()
    }

    /// Worst constraint or bound violation at `x`, scaled by `1 + |rhs|`
    /// (resp. `1 + |bound|`) so it is comparable across magnitudes.
    pub fn max_scaled_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let v = c.violation(x).max(0.0) / (1.0 + c.rhs.abs());
            worst = worst.max(v);
        }
        for (v, &xv) in self.variables.iter().zip(x) {
            worst = worst.max((v.lower - xv) / (1.0 + v.lower.abs()));
            if v.upper.is_finite() {
                worst = worst.max((xv - v.upper) / (1.0 + v.upper.abs()));
            }
        }
        worst.max(0.0)
    }

    /// Renders the program in LP file format (CPLEX dialect), which most
    /// external solvers accept; used by the CLI's `--dump-lp` flag.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        let mut wrote = false;
        for v in &self.variables {
            if v.objective == 0.0 {
                continue;
            }
            if wrote || v.objective < 0.0 {
                out.push_str(if v.objective < 0.0 { " - " } else { " + " });
            } else {
                out.push(' ');
            }
            out.push_str(&format!("{} {}", v.objective.abs(), v.name));
            wrote = true;
        }
        if !wrote {
            out.push_str(&format!(" 0 {}", self.variables[0].name));
        }
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            out.push_str(&format!(" c{}:", i));
            let mut row_wrote = false;
            for &(j, a) in &c.coeffs {
                if row_wrote || a < 0.0 {
                    out.push_str(if a < 0.0 { " - " } else { " + " });
                } else {
                    out.push(' ');
                }
                out.push_str(&format!("{} {}", a.abs(), self.variables[j].name));
                row_wrote = true;
            }
            if !row_wrote {
                out.push_str(&format!(" 0 {}", self.variables[0].name));
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            out.push_str(&format!(" {} {}\n", rel, c.rhs));
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            if v.upper.is_finite() {
                out.push_str(&format!(" {} <= {} <= {}\n", v.lower, v.name, v.upper));
            } else {
                out.push_str(&format!(" {} >= {}\n", v.name, v.lower));
            }
        }
        out.push_str("End\n");
        out
    }
}

/// Solver outcome label. Failures surface as [`LpError`]; a returned solution
/// is always optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
}

/// An optimal basic feasible solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// One value per variable, in declaration order.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic feasible solutions are vertices of the feasible polytope.
    pub is_vertex: bool,
}

/// Errors from LP construction, solving, or snapping.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    Invalid(&'static str),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded below")]
    Unbounded,
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    #[error("variable {var} = {value} is not within {tol} of the target grid")]
    SnapFailure { var: usize, value: f64, tol: f64 },
    #[error("snapped point violates constraint {constraint} by {violation}")]
    SnapInfeasible { constraint: usize, violation: f64 },
}

/// Solves to an optimal vertex in `f64` arithmetic (pivot tolerance `1e-9`).
pub fn solve_to_vertex(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    simplex::solve::<f64>(lp)
}

/// Solves to an optimal vertex in exact rational arithmetic. Identical pivot
/// rules with zero tolerances; costs grow with coefficient bit-length, so
/// callers should reserve this for modest programs (a few hundred variables).
pub fn solve_to_vertex_exact(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    simplex::solve::<num_rational::BigRational>(lp)
}

/// Target lattice for [`snap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    /// Multiples of `1/2`.
    Half,
    /// Integers.
    Unit,
}

/// Rounds `x` onto `grid`, requiring every coordinate to lie within `tol` of
/// the lattice and the snapped point to remain feasible.
///
/// Feasibility re-validation allows each row a backward-error slack of
/// `tol * (1 + sum |a_ij|)`, the worst movement the snap itself can cause on
/// a row that the input satisfied exactly.
pub fn snap(lp: &LinearProgram, x: &[f64], grid: Grid, tol: f64) -> Result<Vec<f64>, LpError> {
    if x.len() != lp.variables.len() {
        return Err(LpError::Invalid("point length differs from variable count"));
    }
    let mut snapped = Vec::with_capacity(x.len());
    for (j, (&xv, v)) in x.iter().zip(&lp.variables).enumerate() {
        let g = match grid {
            Grid::Half => libm::round(xv * 2.0) / 2.0,
            Grid::Unit => libm::round(xv),
        };
        // Normalize -0.0 so snapped output serializes identically everywhere.
        let g = if g == 0.0 { 0.0 } else { g };
        if (xv - g).abs() > tol || g < v.lower - tol || g > v.upper + tol {
            return Err(LpError::SnapFailure {
                var: j,
                value: xv,
                tol,
            });
        }
        snapped.push(g.clamp(v.lower, v.upper.min(f64::MAX)));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        let slack: f64 = tol * (1.0 + c.coeffs.iter().map(|&(_, a)| a.abs()).sum::<f64>());
        let violation = c.violation(&snapped);
        if violation > slack {
            return Err(LpError::SnapInfeasible {
                constraint: i,
                violation,
            });
        }
    }
    Ok(snapped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_vars(n: usize, obj: &[f64]) -> Vec<Variable> {
        (0..n)
            .map(|j| Variable::unit_box(format!("y{j}"), obj[j]))
            .collect()
    }

    #[test]
    fn trivial_box_minimum() {
        let lp = LinearProgram::new(unit_vars(1, &[1.0]), vec![]);
        let sol = solve_to_vertex(&lp).unwrap();
        assert_eq!(sol.x, vec![0.0]);
        assert_eq!(sol.objective, 0.0);
        assert!(sol.is_vertex);
    }

    #[test]
    fn packing_pair_reaches_capacity() {
        // max y0 + y1 subject to y0 + y1 <= 1 on the unit box.
        let lp = LinearProgram::new(
            unit_vars(2, &[-1.0, -1.0]),
            vec![Constraint::le(vec![(0, 1.0), (1, 1.0)], 1.0)],
        );
        let sol = solve_to_vertex(&lp).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-12);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-12);
        // A vertex of this polytope sets one coordinate per bound.
        assert!(sol.x.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn equality_forces_half_integral_vertex() {
        // max y0 + y1 with y0 + y1 <= 1 and y0 - y1 = 0: unique optimum (1/2, 1/2).
        let lp = LinearProgram::new(
            unit_vars(2, &[-1.0, -1.0]),
            vec![
                Constraint::le(vec![(0, 1.0), (1, 1.0)], 1.0),
                Constraint::eq(vec![(0, 1.0), (1, -1.0)], 0.0),
            ],
        );
        let sol = solve_to_vertex(&lp).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
        assert!((sol.x[1] - 0.5).abs() < 1e-9);

        let snapped = snap(&lp, &sol.x, Grid::Half, 1e-5).unwrap();
        assert_eq!(snapped, vec![0.5, 0.5]);
        let err = snap(&lp, &sol.x, Grid::Unit, 1e-5).unwrap_err();
        assert!(matches!(err, LpError::SnapFailure { var: 0, .. }));
    }

    #[test]
    fn infeasible_row_detected() {
        let lp = LinearProgram::new(
            unit_vars(2, &[0.0, 0.0]),
            vec![Constraint::ge(vec![(0, 1.0), (1, 1.0)], 3.0)],
        );
        assert_eq!(solve_to_vertex(&lp).unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn empty_row_with_positive_rhs_is_infeasible() {
        // Rounding LPs can emit coverage rows whose support became empty;
        // those must read as plainly infeasible, not panic.
        let lp = LinearProgram::new(
            unit_vars(1, &[1.0]),
            vec![Constraint::ge(vec![], 0.5)],
        );
        assert_eq!(solve_to_vertex(&lp).unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn unbounded_ray_detected() {
        let lp = LinearProgram::new(
            vec![Variable::new("z", 0.0, f64::INFINITY, -1.0)],
            vec![],
        );
        assert_eq!(solve_to_vertex(&lp).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn shifted_bounds_and_ge_row() {
        // min x0 + x1, boxes [2, 5], x0 + x1 >= 7: optimum value 7 at a
        // vertex, so one coordinate is at 2 and the other at 5.
        let lp = LinearProgram::new(
            vec![
                Variable::new("x0", 2.0, 5.0, 1.0),
                Variable::new("x1", 2.0, 5.0, 1.0),
            ],
            vec![Constraint::ge(vec![(0, 1.0), (1, 1.0)], 7.0)],
        );
        let sol = solve_to_vertex(&lp).unwrap();
        assert!((sol.objective - 7.0).abs() < 1e-9);
        let mut xs = sol.x.clone();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] - 2.0).abs() < 1e-9 && (xs[1] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn artificial_drive_out_keeps_upper_bound_values() {
        // Regression: min 18*x s.t. y <= 1, x = 1, x - y <= 0 over the unit
        // box. Phase 1 ends with y resting at its upper bound and an
        // artificial parked basic on the equality row; the drive-out swap
        // must keep y at 1 instead of teleporting it to 0.
        let lp = LinearProgram::new(
            vec![
                Variable::unit_box("y", 0.0),
                Variable::unit_box("x", 18.0),
            ],
            vec![
                Constraint::le(vec![(0, 1.0)], 1.0),
                Constraint::eq(vec![(1, 1.0)], 1.0),
                Constraint::le(vec![(1, 1.0), (0, -1.0)], 0.0),
            ],
        );
        let sol = solve_to_vertex(&lp).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 18.0).abs() < 1e-9);
        assert!(lp.max_scaled_residual(&sol.x) <= 1e-9);
    }

    #[test]
    fn negative_rhs_rows_normalize() {
        // -y0 - y1 <= -1 is y0 + y1 >= 1 in disguise.
        let lp = LinearProgram::new(
            unit_vars(2, &[3.0, 5.0]),
            vec![Constraint::le(vec![(0, -1.0), (1, -1.0)], -1.0)],
        );
        let sol = solve_to_vertex(&lp).unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_solver_matches_f64_on_half_integral_program() {
        let lp = LinearProgram::new(
            unit_vars(2, &[-1.0, -1.0]),
            vec![
                Constraint::le(vec![(0, 1.0), (1, 1.0)], 1.0),
                Constraint::eq(vec![(0, 1.0), (1, -1.0)], 0.0),
            ],
        );
        let exact = solve_to_vertex_exact(&lp).unwrap();
        assert_eq!(exact.x, vec![0.5, 0.5]);
        assert_eq!(exact.objective, -1.0);
    }

    #[test]
    fn degenerate_equalities_terminate() {
        // Heavily redundant rows stress the anti-cycling fallback.
        let rows = vec![
            Constraint::eq(vec![(0, 1.0), (1, 1.0)], 1.0),
            Constraint::eq(vec![(0, 1.0), (1, 1.0)], 1.0),
            Constraint::le(vec![(0, 1.0), (1, 1.0)], 1.0),
            Constraint::ge(vec![(0, 1.0), (1, 1.0)], 1.0),
            Constraint::le(vec![(0, 1.0)], 1.0),
        ];
        let lp = LinearProgram::new(unit_vars(2, &[1.0, 2.0]), rows);
        let sol = solve_to_vertex(&lp).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validation_rejects_malformed_programs() {
        let bad_name = LinearProgram::new(vec![Variable::new("a b", 0.0, 1.0, 0.0)], vec![]);
        assert!(matches!(bad_name.validate(), Err(LpError::Invalid(_))));

        let bad_bounds = LinearProgram::new(vec![Variable::new("x", 1.0, 0.0, 0.0)], vec![]);
        assert!(matches!(bad_bounds.validate(), Err(LpError::Invalid(_))));

        let dup = LinearProgram::new(
            unit_vars(1, &[0.0]),
            vec![Constraint::le(vec![(0, 1.0), (0, 1.0)], 1.0)],
        );
        assert!(matches!(dup.validate(), Err(LpError::Invalid(_))));

        let oob = LinearProgram::new(
            unit_vars(1, &[0.0]),
            vec![Constraint::le(vec![(7, 1.0)], 1.0)],
        );
        assert!(matches!(oob.validate(), Err(LpError::Invalid(_))));
    }

    #[test]
    fn lp_format_output_is_frozen() {
        let lp = LinearProgram::new(
            vec![
                Variable::unit_box("y0", 2.0),
                Variable::new("y1", 0.0, f64::INFINITY, -0.5),
            ],
            vec![
                Constraint::ge(vec![(0, 1.0), (1, -2.0)], 0.5),
                Constraint::eq(vec![(1, 1.0)], 1.0),
            ],
        );
        let expected = "Minimize\n obj: 2 y0 - 0.5 y1\nSubject To\n c0: 1 y0 - 2 y1 >= 0.5\n c1: 1 y1 = 1\nBounds\n 0 <= y0 <= 1\n y1 >= 0\nEnd\n";
        assert_eq!(lp.to_lp_format(), expected);
    }

    #[test]
    fn solver_is_deterministic() {
        let lp = LinearProgram::new(
            unit_vars(4, &[-1.0, -2.0, 0.5, -0.25]),
            vec![
                Constraint::le(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 2.0),
                Constraint::ge(vec![(1, 1.0), (3, 1.0)], 0.5),
                Constraint::eq(vec![(2, 1.0), (3, -1.0)], 0.0),
            ],
        );
        let a = solve_to_vertex(&lp).unwrap();
        let b = solve_to_vertex(&lp).unwrap();
        assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        // Feasible-by-construction programs: the origin of the unit box
        // satisfies every generated row, so both arithmetic backends must
        // reach an optimum and agree on its value.
        fn arb_program() -> impl Strategy<Value = LinearProgram> {
            let coeff = -2.0..2.0f64;
            let objective = proptest::collection::vec(-3.0..3.0f64, 3);
            let row = (proptest::collection::vec(coeff, 3), 0.0..2.5f64, any::<bool>());
            let rows = proptest::collection::vec(row, 0..4);
            (objective, rows).prop_map(|(obj, rows)| {
                let constraints = rows
                    .into_iter()
                    .map(|(cs, rhs, le)| {
                        let coeffs = cs.into_iter().enumerate().collect();
                        if le {
                            // rhs >= 0 keeps the origin feasible.
                            Constraint::le(coeffs, rhs)
                        } else {
                            Constraint::ge(coeffs, -rhs)
                        }
                    })
                    .collect();
                LinearProgram::new(unit_vars(3, &obj), constraints)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn f64_agrees_with_exact_rational(lp in arb_program()) {
                let fast = solve_to_vertex(&lp).unwrap();
                let exact = solve_to_vertex_exact(&lp).unwrap();
                prop_assert!((fast.objective - exact.objective).abs() <= 1e-6,
                    "fast {} vs exact {}", fast.objective, exact.objective);
                prop_assert!(lp.max_scaled_residual(&fast.x) <= 1e-7);
                prop_assert!(lp.max_scaled_residual(&exact.x) <= 1e-9);
            }
        }
    }
}
