//! Normal-form games: payoff matrices, mixed strategies and the focal
//! constructors for Hawk-Dove and the Prisoner's Dilemma stage game.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Tolerance on the simplex constraint `sum(probs) == 1`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::Dimension("matrix must be non-empty".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "row {} has {} entries, expected {}",
                bad,
                rows[bad].len(),
                m
            )));
        }
        Ok(Matrix { rows: n, cols: m, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Adds `shift` to every entry.
    pub fn shifted(&self, shift: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v + shift).collect() }
    }

    /// `self · v`; the caller guarantees `v.len() == cols`.
    pub(crate) fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        Ok(out)
    }

    /// `xᵀ · self · y` without dimension checks.
    pub(crate) fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, xi)| xi * self.row(i).iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

/// A probability vector over pure strategies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(param("mixed strategy needs at least one entry"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(param(format!("probability {i} = {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(param(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(MixedStrategy(probs))
    }

    pub fn pure(n: usize, index: usize) -> Self {
        assert!(index < n, "pure strategy {index} out of range for {n} strategies");
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        MixedStrategy(v)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        MixedStrategy(vec![1.0 / n as f64; n])
    }

    /// Two-strategy profile `(p, 1 - p)`.
    pub fn binary(p: f64) -> Result<Self> {
        Self::new(vec![p, 1.0 - p])
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        MixedStrategy(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Expected value of `values` under this distribution.
    pub fn mean_of(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Convex combination `alpha·self + (1 - alpha)·other`.
    pub fn mix(&self, other: &MixedStrategy, alpha: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension("mixing strategies of different sizes".into()));
        }
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect())
    }
}

/// Hawk-Dove parameters: resource value `v` and injury cost `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkDoveParams {
    pub v: f64,
    pub c: f64,
}

impl HawkDoveParams {
    pub fn new(v: f64, c: f64) -> Result<Self> {
        let p = HawkDoveParams { v, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(param(format!("hawk-dove requires v > 0 (got v = {})", self.v)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(param(format!("hawk-dove requires c > 0 (got c = {})", self.c)));
        }
        Ok(())
    }
}

/// Prisoner's Dilemma stage payoffs: temptation, reward, punishment, sucker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpdStageParams {
    pub t: f64,
    pub r: f64,
    pub p: f64,
    pub s: f64,
}

impl Default for IpdStageParams {
    fn default() -> Self {
        IpdStageParams { t: 5.0, r: 3.0, p: 1.0, s: 0.0 }
    }
}

impl IpdStageParams {
    pub fn new(t: f64, r: f64, p: f64, s: f64) -> Result<Self> {
        let stage = IpdStageParams { t, r, p, s };
        stage.validate()?;
        Ok(stage)
    }

    pub fn validate(&self) -> Result<()> {
        let IpdStageParams { t, r, p, s } = *self;
        if ![t, r, p, s].iter().all(|x| x.is_finite()) {
            return Err(param("stage payoffs must be finite"));
        }
        let checks = [(t > r, "t > r"), (r > p, "r > p"), (p > s, "p > s"), (2.0 * r > t + s, "2r > t+s")];
        let failed: Vec<&str> = checks.iter().filter(|(ok, _)| !ok).map(|(_, name)| *name).collect();
        if !failed.is_empty() {
            return Err(param(format!(
                "stage payoffs (t={t}, r={r}, p={p}, s={s}) violate {}",
                failed.join(" and ")
            )));
        }
        Ok(())
    }

    /// Row player's payoff for (own move, opponent move), cooperate = `true`.
    pub fn payoff(&self, own_coop: bool, opp_coop: bool) -> f64 {
        match (own_coop, opp_coop) {
            (true, true) => self.r,
            (true, false) => self.s,
            (false, true) => self.t,
            (false, false) => self.p,
        }
    }
}

/// Two payoff tables for a row and a column player.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffBimatrix {
    /// Row player's payoffs.
    pub a: Matrix,
    /// Column player's payoffs.
    pub b: Matrix,
    /// Claimed symmetry: `b == aᵀ`.
    pub symmetric: bool,
    /// Strategy names; for a non-square game rows come first, then columns.
    pub labels: Vec<String>,
}

impl PayoffBimatrix {
    /// Symmetric game `b = aᵀ`.
    pub fn symmetric(a: Matrix, labels: Vec<String>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "symmetric game needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let b = a.transpose();
        Self::checked(PayoffBimatrix { a, b, symmetric: true, labels })
    }

    /// General bimatrix game. The symmetry flag is inferred from the entries.
    pub fn new(a: Matrix, b: Matrix, labels: Vec<String>) -> Result<Self> {
        let symmetric = a.is_square() && b.rows() == a.rows() && b.cols() == a.cols() && b == a.transpose();
        Self::checked(PayoffBimatrix { a, b, symmetric, labels })
    }

    fn checked(game: Self) -> Result<Self> {
        match game.validate().into_iter().next() {
            None => Ok(game),
            Some(d) => Err(Error::Dimension(d.to_string())),
        }
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// Lists every violated structural invariant; empty when the game is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.a.rows() != self.b.rows() || self.a.cols() != self.b.cols() {
            out.push(Diagnostic::DimensionMismatch {
                a: (self.a.rows(), self.a.cols()),
                b: (self.b.rows(), self.b.cols()),
            });
        }
        for (name, m) in [("a", &self.a), ("b", &self.b)] {
            if let Some(k) = m.data.iter().position(|v| !v.is_finite()) {
                out.push(Diagnostic::NonFinite { matrix: name, row: k / m.cols, col: k % m.cols });
            }
        }
        let expected_labels = if self.a.is_square() { self.a.rows() } else { self.a.rows() + self.a.cols() };
        if !self.labels.is_empty() && self.labels.len() != expected_labels {
            out.push(Diagnostic::LabelCount { expected: expected_labels, got: self.labels.len() });
        }
        if self.symmetric {
            if !self.a.is_square() {
                out.push(Diagnostic::SymmetricNotSquare);
            } else if out.iter().all(|d| !matches!(d, Diagnostic::DimensionMismatch { .. })) {
                let n = self.a.rows();
                'outer: for i in 0..n {
                    for j in 0..n {
                        if self.b.get(i, j) != self.a.get(j, i) {
                            out.push(Diagnostic::SymmetryBroken { row: i, col: j });
                            break 'outer;
                        }
                    }
                }
            }
        }
        out
    }
}

/// One violated invariant reported by [`PayoffBimatrix::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    NonFinite { matrix: &'static str, row: usize, col: usize },
    LabelCount { expected: usize, got: usize },
    SymmetricNotSquare,
    SymmetryBroken { row: usize, col: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DimensionMismatch { a, b } => {
                write!(f, "payoff tables differ in shape: a is {}x{}, b is {}x{}", a.0, a.1, b.0, b.1)
            }
            Diagnostic::NonFinite { matrix, row, col } => {
                write!(f, "{matrix}[{row}][{col}] is not finite")
            }
            Diagnostic::LabelCount { expected, got } => {
                write!(f, "expected {expected} strategy labels, got {got}")
            }
            Diagnostic::SymmetricNotSquare => write!(f, "game flagged symmetric but is not square"),
            Diagnostic::SymmetryBroken { row, col } => {
                write!(f, "game flagged symmetric but b[{row}][{col}] != a[{col}][{row}]")
            }
        }
    }
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Hawk-Dove game over (Hawk, Dove).
pub fn make_hawk_dove(params: HawkDoveParams) -> Result<PayoffBimatrix> {
    params.validate()?;
    let HawkDoveParams { v, c } = params;
    let a = Matrix::from_rows(vec![vec![(v - c) / 2.0, v], vec![0.0, v / 2.0]])?;
    PayoffBimatrix::symmetric(a, labels(&["hawk", "dove"]))
}

/// One-shot Prisoner's Dilemma over (Cooperate, Defect).
pub fn make_ipd_stage(params: IpdStageParams) -> Result<PayoffBimatrix> {
    params.validate()?;
    let IpdStageParams { t, r, p, s } = params;
    let a = Matrix::from_rows(vec![vec![r, s], vec![t, p]])?;
    PayoffBimatrix::symmetric(a, labels(&["cooperate", "defect"]))
}

/// `(xᵀ·a·y, xᵀ·b·y)`.
pub fn expected_payoff(game: &PayoffBimatrix, x: &MixedStrategy, y: &MixedStrategy) -> Result<(f64, f64)> {
    if x.len() != game.rows() || y.len() != game.cols() {
        return Err(Error::Dimension(format!(
            "profile sizes ({}, {}) do not match a {}x{} game",
            x.len(),
            y.len(),
            game.rows(),
            game.cols()
        )));
    }
    if game.b.rows() != game.rows() || game.b.cols() != game.cols() {
        return Err(Error::Dimension("payoff tables differ in shape".into()));
    }
    Ok((game.a.bilinear(x.probs(), y.probs()), game.b.bilinear(x.probs(), y.probs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hd(v: f64, c: f64) -> PayoffBimatrix {
        make_hawk_dove(HawkDoveParams { v, c }).unwrap()
    }

    #[test]
    fn hawk_dove_entries() {
        assert_eq!(hd(2.0, 4.0).a.to_rows(), vec![vec![-1.0, 2.0], vec![0.0, 1.0]]);
        assert_eq!(hd(2.0, 2.0).a.to_rows(), vec![vec![0.0, 2.0], vec![0.0, 1.0]]);
        assert!(hd(2.0, 4.0).symmetric);
        assert!(matches!(make_hawk_dove(HawkDoveParams { v: 1.0, c: -1.0 }), Err(Error::Param(_))));
        assert!(matches!(make_hawk_dove(HawkDoveParams { v: 0.0, c: 1.0 }), Err(Error::Param(_))));
    }

    #[test]
    fn ipd_stage_entries_and_ordering_errors() {
        let g = make_ipd_stage(IpdStageParams::default()).unwrap();
        assert_eq!(g.a.to_rows(), vec![vec![3.0, 0.0], vec![5.0, 1.0]]);

        let e = make_ipd_stage(IpdStageParams { t: 5.0, r: 3.0, p: 1.0, s: 2.0 }).unwrap_err();
        assert!(e.to_string().contains("p > s"), "{e}");
        let e = make_ipd_stage(IpdStageParams { t: 4.0, r: 3.0, p: 1.0, s: 2.5 }).unwrap_err();
        assert!(e.to_string().contains("2r > t+s"), "{e}");
        let e = make_ipd_stage(IpdStageParams { t: 4.0, r: 3.0, p: 0.5, s: 0.0 }).unwrap();
        assert_eq!(e.a.get(1, 0), 4.0);
        let e = IpdStageParams { t: 7.0, r: 3.0, p: 1.0, s: 0.0 }.validate().unwrap_err();
        assert!(e.to_string().contains("2r > t+s"), "{e}");
    }

    #[test]
    fn expected_payoff_examples() {
        let g = hd(2.0, 4.0);
        let hawk = MixedStrategy::pure(2, 0);
        let dove = MixedStrategy::pure(2, 1);
        assert_eq!(expected_payoff(&g, &hawk, &dove).unwrap(), (2.0, 0.0));
        let half = MixedStrategy::uniform(2);
        assert_eq!(expected_payoff(&g, &half, &half).unwrap(), (0.5, 0.5));
        let pd = make_ipd_stage(IpdStageParams::default()).unwrap();
        let d = MixedStrategy::pure(2, 1);
        assert_eq!(expected_payoff(&pd, &d, &d).unwrap(), (1.0, 1.0));
        assert!(matches!(expected_payoff(&g, &MixedStrategy::uniform(3), &half), Err(Error::Dimension(_))));
    }

    #[test]
    fn validate_reports_broken_invariants() {
        assert!(hd(2.0, 4.0).validate().is_empty());

        let mut g = hd(2.0, 4.0);
        g.b.set(0, 1, 7.0);
        let d = g.validate();
        assert_eq!(d, vec![Diagnostic::SymmetryBroken { row: 0, col: 1 }]);

        let g = PayoffBimatrix {
            a: Matrix::zeros(2, 3),
            b: Matrix::zeros(2, 2),
            symmetric: false,
            labels: vec![],
        };
        let d = g.validate();
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0], Diagnostic::DimensionMismatch { .. }));
    }

    #[test]
    fn mixed_strategy_rejects_off_simplex() {
        assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![-0.1, 1.1]).is_err());
        assert!(MixedStrategy::new(vec![]).is_err());
        assert!(MixedStrategy::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn from_rows_rejects_ragged() {
        assert!(Matrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
