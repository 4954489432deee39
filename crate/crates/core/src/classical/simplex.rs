//! Dense two-phase tableau simplex for `min cᵀx` s.t. `Ax = b`, `x ≥ 0`.
//!
//! Phase one minimizes the sum of artificial variables; artificials left in
//! the basis at zero level are pivoted out, or their rows dropped as
//! redundant. Phase two then optimizes the real objective from that basis.

/// Column selection rule for entering variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest eligible index for both entering and leaving variable;
    /// never cycles.
    #[default]
    Bland,
    /// Most negative reduced cost. Falls back to Bland after a run of
    /// degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub rule: PivotRule,
    /// Entries below this magnitude are treated as zero in pivoting.
    pub pivot_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            rule: PivotRule::Bland,
            pivot_tol: 1e-11,
            optimality_tol: 1e-12,
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
        /// Phase-one optimum (sum of artificials); zero up to rounding.
        phase_one: f64,
    },
    Infeasible {
        phase_one: f64,
    },
    Unbounded,
    IterationLimit,
}

/// Equality-form LP with a dense row-major constraint matrix.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            a: Vec::new(),
            b: Vec::new(),
            c: vec![0.0; cols],
        }
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        assert_eq!(c.len(), self.cols, "objective length");
        self.c = c;
    }

    /// Append the row `coeffs · x = rhs`.
    pub fn add_equality(&mut self, coeffs: &[f64], rhs: f64) {
        assert_eq!(coeffs.len(), self.cols, "constraint length");
        self.a.extend_from_slice(coeffs);
        self.b.push(rhs);
        self.rows += 1;
    }

    /// Append `Σ_{j ∈ support} x_j = rhs` without materializing the dense row
    /// at the call site.
    pub fn add_indicator_equality(&mut self, support: impl IntoIterator<Item = usize>, rhs: f64) {
        let start = self.a.len();
        self.a.resize(start + self.cols, 0.0);
        for j in support {
            self.a[start + j] = 1.0;
        }
        self.b.push(rhs);
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn solve(&self, opts: &SimplexOptions) -> LpOutcome {
        Tableau::new(self).run(self, opts)
    }
}

struct Tableau {
    /// Number of constraint rows still active.
    m: usize,
    /// Original variables.
    n: usize,
    /// Row stride: `n + m0 + 1` (original, artificial, rhs).
    width: usize,
    /// `m` constraint rows followed by one objective row.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let (m, n) = (lp.rows, lp.cols);
        let width = n + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            let flip = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut t[i * width..(i + 1) * width];
            for (cell, a) in row[..n].iter_mut().zip(&lp.a[i * n..(i + 1) * n]) {
                *cell = flip * a;
            }
            row[n + i] = 1.0;
            row[width - 1] = flip * lp.b[i];
        }
        Self {
            m,
            n,
            width,
            t,
            basis: (n..n + m).collect(),
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn obj_row(&self) -> usize {
        self.m
    }

    /// Objective row: reduced costs of `cost` for the current basis.
    fn load_objective(&mut self, cost: impl Fn(usize) -> f64) {
        let w = self.width;
        let obj = self.obj_row();
        for j in 0..w {
            self.t[obj * w + j] = if j < w - 1 { cost(j) } else { 0.0 };
        }
        for i in 0..self.m {
            let cb = cost(self.basis[i]);
            if cb != 0.0 {
                for j in 0..w {
                    self.t[obj * w + j] -= cb * self.t[i * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.width;
        let p = self.t[r * w + s];
        let inv = 1.0 / p;
        for j in 0..w {
            self.t[r * w + j] *= inv;
        }
        self.t[r * w + s] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[s];
            if f != 0.0 {
                for (x, &pj) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * pj;
                }
                row[s] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        self.basis[r] = s;
    }

    /// Run simplex iterations over columns `0..limit`.
    fn iterate(&mut self, limit: usize, opts: &SimplexOptions) -> Result<(), LpOutcome> {
        let mut degenerate_run = 0usize;
        for _ in 0..opts.max_iterations {
            let obj = self.obj_row();
            let use_bland = opts.rule == PivotRule::Bland || degenerate_run > 50;
            let entering = if use_bland {
                (0..limit).find(|&j| self.at(obj, j) < -opts.optimality_tol)
            } else {
                (0..limit)
                    .filter(|&j| self.at(obj, j) < -opts.optimality_tol)
                    .min_by(|&a, &b| self.at(obj, a).total_cmp(&self.at(obj, b)))
            };
            let Some(s) = entering else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, s);
                if a > opts.pivot_tol {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-15
                                || (ratio <= best + 1e-15 && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpOutcome::Unbounded);
            };
            degenerate_run = if ratio == 0.0 { degenerate_run + 1 } else { 0 };
            self.pivot(r, s);
        }
        Err(LpOutcome::IterationLimit)
    }

    /// Pivot zero-level artificials out of the basis; drop rows that are
    /// linear combinations of the others.
    fn expel_artificials(&mut self, opts: &SimplexOptions) {
        let mut i = 0;
        while i < self.m {
            if self.basis[i] >= self.n {
                let col = (0..self.n)
                    .filter(|&j| self.at(i, j).abs() > opts.pivot_tol)
                    .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => self.remove_row(i),
                }
            } else {
                i += 1;
            }
        }
    }

    fn remove_row(&mut self, i: usize) {
        let w = self.width;
        self.t.drain(i * w..(i + 1) * w);
        self.basis.remove(i);
        self.m -= 1;
    }

    fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.rhs(i).max(0.0);
            }
        }
        x
    }

    fn run(mut self, lp: &LinearProgram, opts: &SimplexOptions) -> LpOutcome {
        let n = self.n;
        let total = self.width - 1;
        self.load_objective(|j| if j >= n && j < total { 1.0 } else { 0.0 });
        if let Err(outcome) = self.iterate(total, opts) {
            return outcome;
        }
        let phase_one: f64 = self
            .basis
            .iter()
            .enumerate()
            .filter(|&(_, &j)| j >= n)
            .map(|(i, _)| self.rhs(i).max(0.0))
            .sum();
        if phase_one > PHASE_ONE_TOL {
            return LpOutcome::Infeasible { phase_one };
        }
        self.expel_artificials(opts);
        self.load_objective(|j| if j < n { lp.c[j] } else { 0.0 });
        if let Err(outcome) = self.iterate(n, opts) {
            return outcome;
        }
        let x = self.solution();
        let objective = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal {
            x,
            objective,
            phase_one,
        }
    }
}

/// Phase-one optimum above which the LP is declared infeasible.
pub const PHASE_ONE_TOL: f64 = 1e-9;
