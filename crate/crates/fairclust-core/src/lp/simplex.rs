//! Two-phase primal simplex on a dense tableau with explicit variable bounds.
//!
//! The implementation trades sophistication for auditability: it keeps the
//! full `B^{-1}A` matrix, prices columns with Dantzig's rule (falling back to
//! Bland's rule permanently once the iteration count suggests stalling), and
//! breaks every tie by lowest column / basis index so runs are reproducible
//! bit for bit on any platform.

use alloc::vec;
use alloc::vec::Vec;

use super::scalar::Scalar;
use super::{LinearProgram, LpError, LpSolution, LpStatus, Relation};

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 64;

/// Reduced costs are recomputed from scratch this often to cap drift.
const REFRESH_INTERVAL: usize = 256;

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau<S> {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols` working matrix (holds `B^{-1} A`).
    a: Vec<S>,
    /// Current values of the basic variables, one per row.
    xb: Vec<S>,
    /// Column basic in each row.
    basis: Vec<usize>,
    state: Vec<VarState>,
    /// Per-column upper bound in the shifted space; `None` means unbounded.
    upper: Vec<Option<S>>,
    /// Cost vector of the phase currently being optimized.
    cost: Vec<S>,
    /// Reduced costs, kept in sync under pivots and refreshed periodically.
    reduced: Vec<S>,
    /// First artificial column; columns past this never re-enter the basis.
    art_start: usize,
    bland: bool,
    stall: usize,
}

impl<S: Scalar> Tableau<S> {
    fn at(&self, r: usize, c: usize) -> &S {
        &self.a[r * self.cols + c]
    }

    fn build(lp: &LinearProgram) -> Result<Self, LpError> {
        let nstruct = lp.variables.len();
        let rows = lp.constraints.len();
        let nslack = lp
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let art_start = nstruct + nslack;
        let cols = art_start + rows;

        let mut a = vec![S::zero(); rows * cols];
        let mut xb = vec![S::zero(); rows];
        let mut basis = vec![usize::MAX; rows];
        let mut state = vec![VarState::AtLower; cols];
        let mut upper = vec![None; cols];

        // Structural variables are shifted so their lower bound sits at 0.
        for (j, v) in lp.variables.iter().enumerate() {
            if v.upper.is_finite() {
                upper[j] = Some(S::from_f64(v.upper - v.lower));
            }
        }

        let mut next_slack = nstruct;
        for (i, con) in lp.constraints.iter().enumerate() {
            let mut rhs = S::from_f64(con.rhs);
            for &(j, coef) in &con.coeffs {
                let c = S::from_f64(coef);
                rhs = rhs - c.clone() * S::from_f64(lp.variables[j].lower);
                a[i * cols + j] = c;
            }
            let slack = match con.relation {
                Relation::Le => {
                    a[i * cols + next_slack] = S::one();
                    next_slack += 1;
                    Some(next_slack - 1)
                }
                Relation::Ge => {
                    a[i * cols + next_slack] = -S::one();
                    next_slack += 1;
                    Some(next_slack - 1)
                }
                Relation::Eq => None,
            };
            if rhs < S::zero() {
                for j in 0..art_start {
                    let v = -self_take(&mut a[i * cols + j]);
                    a[i * cols + j] = v;
                }
                rhs = -rhs;
            }
            // A slack with coefficient +1 can seed the basis; otherwise the
            // row gets an artificial.
            match slack {
                Some(s) if a[i * cols + s] > S::zero() => basis[i] = s,
                _ => {
                    a[i * cols + art_start + i] = S::one();
                    basis[i] = art_start + i;
                }
            }
            state[basis[i]] = VarState::Basic;
            xb[i] = rhs;
        }

        Ok(Tableau {
            rows,
            cols,
            a,
            xb,
            basis,
            state,
            upper,
            cost: vec![S::zero(); cols],
            reduced: vec![S::zero(); cols],
            art_start,
            bland: false,
            stall: 0,
        })
    }

    fn refresh_reduced_costs(&mut self) {
        for j in 0..self.cols {
            self.reduced[j] = self.cost[j].clone();
        }
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                let adj = cb.clone() * self.at(i, j).clone();
                self.reduced[j] = self.reduced[j].clone() - adj;
            }
        }
    }

    /// Picks the entering column, or `None` at optimality. Artificial columns
    /// never re-enter; past `limit` columns are invisible (used by phase 2).
    fn price(&self) -> Option<usize> {
        let tol = S::tol();
        let mut best: Option<(usize, S)> = None;
        for j in 0..self.art_start {
            let score = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower => -self.reduced[j].clone(),
                VarState::AtUpper => self.reduced[j].clone(),
            };
            if score <= tol {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            match &best {
                Some((_, s)) if *s >= score => {}
                _ => best = Some((j, score)),
            }
        }
        best.map(|(j, _)| j)
    }

    /// One simplex iteration. Returns `false` once optimal for the loaded
    /// cost vector.
    fn step(&mut self) -> Result<bool, LpError> {
        let enter = match self.price() {
            Some(j) => j,
            None => return Ok(false),
        };
        let tol = S::tol();
        // Direction the entering variable moves: up from lower, down from upper.
        let up = self.state[enter] == VarState::AtLower;

        // Ratio test: the entering variable moves by `t >= 0`; each basic
        // variable must stay within its own bounds, and the entering variable
        // within its opposite bound (a bound flip).
        let mut t_best: Option<S> = self.upper[enter].clone();
        let mut leave: Option<usize> = None;
        for i in 0..self.rows {
            let alpha = self.at(i, enter).clone();
            if alpha.abs() <= tol {
                continue;
            }
            // Basic variable i changes at rate -alpha (entering up) or +alpha.
            let rate = if up { -alpha } else { alpha };
            let room = if rate < S::zero() {
                self.xb[i].clone()
            } else {
                match &self.upper[self.basis[i]] {
                    Some(ub) => ub.clone() - self.xb[i].clone(),
                    None => continue,
                }
            };
            let ratio = {
                let r = room / rate.abs();
                if r < S::zero() {
                    S::zero()
                } else {
                    r
                }
            };
            let better = match &t_best {
                None => true,
                Some(t) => {
                    ratio < *t
                        || (ratio == *t
                            && leave.is_some_and(|l| self.basis[i] < self.basis[l]))
                }
            };
            if better {
                t_best = Some(ratio);
                leave = Some(i);
            }
        }

        let t = match t_best {
            Some(t) => t,
            None => return Err(LpError::Unbounded),
        };
        if t.is_zero() {
            self.stall += 1;
            if self.stall > STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stall = 0;
        }

        // Update the stored basic values to the post-step point.
        for i in 0..self.rows {
            let alpha = self.at(i, enter).clone();
            if alpha.abs() <= tol {
                continue;
            }
            let delta = alpha * t.clone();
            self.xb[i] = if up {
                self.xb[i].clone() - delta
            } else {
                self.xb[i].clone() + delta
            };
        }

        match leave {
            None => {
                // Bound flip: the entering variable runs to its other bound.
                self.state[enter] = if up {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some(r) => {
                let new_val = if up {
                    t
                } else {
                    self.upper[enter].clone().expect("descent from upper") - t
                };
                let out = self.basis[r];
                // Which bound did the leaving variable hit?
                let rate_down = if up {
                    self.at(r, enter) > &S::zero()
                } else {
                    self.at(r, enter) < &S::zero()
                };
                self.state[out] = if rate_down {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                self.pivot(r, enter);
                self.basis[r] = enter;
                self.state[enter] = VarState::Basic;
                self.xb[r] = new_val;
            }
        }
        Ok(true)
    }

    /// Gaussian elimination about `(r, enter)` on the matrix and the reduced
    /// cost row. Basic values are maintained separately in `step`.
    fn pivot(&mut self, r: usize, enter: usize) {
        let piv = self.at(r, enter).clone();
        let inv = S::one() / piv;
        for j in 0..self.cols {
            let v = self_take(&mut self.a[r * self.cols + j]) * inv.clone();
            self.a[r * self.cols + j] = v;
        }
        let tol = S::tol();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let factor = self.at(i, enter).clone();
            if factor.abs() <= tol {
                self.a[i * self.cols + enter] = S::zero();
                continue;
            }
            for j in 0..self.cols {
                let adj = factor.clone() * self.at(r, j).clone();
                let v = self_take(&mut self.a[i * self.cols + j]) - adj;
                self.a[i * self.cols + j] = v;
            }
        }
        let factor = self.reduced[enter].clone();
        if factor.abs() > tol {
            for j in 0..self.cols {
                let adj = factor.clone() * self.at(r, j).clone();
                self.reduced[j] = self.reduced[j].clone() - adj;
            }
        }
    }

    fn run(&mut self) -> Result<(), LpError> {
        let max_iters = 400 + 60 * (self.rows + self.cols);
        let mut iters = 0usize;
        loop {
            if iters > 0 && iters % REFRESH_INTERVAL == 0 {
                self.refresh_reduced_costs();
            }
            if !self.step()? {
                return Ok(());
            }
            iters += 1;
            if iters > max_iters {
                return Err(LpError::Numerical("simplex iteration limit"));
            }
        }
    }

    fn phase1(&mut self) -> Result<(), LpError> {
        if (self.art_start..self.cols).all(|j| self.state[j] != VarState::Basic) {
            return Ok(());
        }
        for j in 0..self.cols {
            self.cost[j] = if j >= self.art_start {
                S::one()
            } else {
                S::zero()
            };
        }
        self.refresh_reduced_costs();
        self.run()?;
        let mut infeas = S::zero();
        for i in 0..self.rows {
            if self.basis[i] >= self.art_start {
                infeas = infeas + self.xb[i].clone();
            }
        }
        // Scale-aware feasibility cutoff; exactly zero in rational mode.
        let mut cutoff = S::tol();
        for i in 0..self.rows {
            cutoff = cutoff + S::tol() * self.xb[i].abs();
        }
        if infeas > cutoff {
            return Err(LpError::Infeasible);
        }
        // Drive basic artificials out on any nonzero structural/slack entry;
        // rows without one are redundant and the artificial parks at zero.
        let tol = S::tol();
        for r in 0..self.rows {
            if self.basis[r] < self.art_start {
                continue;
            }
            let enter = (0..self.art_start)
                .find(|&j| self.state[j] != VarState::Basic && self.at(r, j).abs() > tol);
            if let Some(enter) = enter {
                // Degenerate swap: the point does not move, so the entering
                // column keeps the value of the bound it was resting on.
                let value = match self.state[enter] {
                    VarState::AtUpper => self.upper[enter].clone().expect("at a finite bound"),
                    _ => S::zero(),
                };
                let out = self.basis[r];
                self.state[out] = VarState::AtLower;
                self.pivot(r, enter);
                self.basis[r] = enter;
                self.state[enter] = VarState::Basic;
                self.xb[r] = value;
            }
        }
        Ok(())
    }

    fn phase2(&mut self, lp: &LinearProgram) -> Result<(), LpError> {
        for j in 0..self.cols {
            self.cost[j] = if j < lp.variables.len() {
                S::from_f64(lp.variables[j].objective)
            } else {
                S::zero()
            };
        }
        self.refresh_reduced_costs();
        self.run()
    }

    /// Reads the solution back in original (unshifted) coordinates.
    fn extract(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut x = vec![0.0; lp.variables.len()];
        for (j, v) in lp.variables.iter().enumerate() {
            let shifted = match self.state[j] {
                VarState::AtLower => S::zero(),
                VarState::AtUpper => self.upper[j].clone().expect("finite upper"),
                VarState::Basic => {
                    let row = self
                        .basis
                        .iter()
                        .position(|&b| b == j)
                        .expect("basic column has a row");
                    self.xb[row].clone()
                }
            };
            x[j] = v.lower + shifted.to_f64();
        }
        x
    }
}

/// `mem::replace` with zero, used to move values out of the flat matrix.
fn self_take<S: Scalar>(slot: &mut S) -> S {
    core::mem::replace(slot, S::zero())
}

pub(super) fn solve<S: Scalar>(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut t = Tableau::<S>::build(lp)?;
    t.phase1()?;
    t.phase2(lp)?;
    let x = t.extract(lp);

    let residual = lp.max_scaled_residual(&x);
    if !residual.is_finite() || residual > 1e-7 {
        return Err(LpError::Numerical("solution fails residual check"));
    }
    // Objective in solver arithmetic (exact in rational mode), then rounded.
    let mut obj = S::zero();
    for (j, v) in lp.variables.iter().enumerate() {
        obj = obj + S::from_f64(v.objective) * S::from_f64(x[j]);
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective: obj.to_f64(),
        is_vertex: true,
    })
}
