//! Minimum-BER precoding for 1-bit transmitters.
//!
//! For a channel `H`, transmit vector `x` and desired symbols `s`, let
//! `z_i = (Hx)_i s_i*` with `a_i = Re z_i`, `b_i = Im z_i`. The cost
//!
//! ```text
//! Φ(H, x, s) = det(Re{diag(H x s^H)^2}) = Π_i Re{z_i^2} = Π_i (a_i - b_i)(a_i + b_i)
//! ```
//!
//! is a product of `2MK` margins that are linear in the real coordinates of
//! `x`. Both margins of a receive dimension are positive exactly when the
//! noiseless sample sits in the quadrant of `s_i`. On the cone where all
//! margins are positive `log Φ` is concave, so the box-constrained
//! maximization is solved in two phases: a feasibility phase that maximizes
//! the smallest margin, then projected gradient ascent on `log Φ` with
//! backtracking.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::ChannelMatrix;
use crate::constellation::{BoxSignal, QpskVector, BOX_HALF_WIDTH};
use crate::error::{Error, Result};

/// Largest `MK` for which a full lookup table is built (`4^8` columns).
pub const MAX_LUT_RX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Iteration cap of the log-domain ascent.
    pub max_iters: usize,
    /// Threshold on the norm of the projected gradient step `x - P(x + ∇)`.
    pub tol: f64,
    /// Iteration budget of the feasibility phase.
    pub phase1_iters: usize,
    /// Backtracking shrink factor in `(0, 1)`.
    pub shrink: f64,
    /// First trial step of the ascent.
    pub initial_step: f64,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
    /// Keep the per-iteration objective values in [`SolveReport::history`].
    pub track_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 500,
            tol: 1e-7,
            phase1_iters: 400,
            shrink: 0.5,
            initial_step: 1.0,
            armijo: 1e-4,
            track_history: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.phase1_iters > 0
            && self.tol > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step > 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("solver options {self:?}")))
        }
    }
}

/// Value of the MBER criterion together with its factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct MberCost {
    /// `Π_i m⁻_i m⁺_i`.
    pub phi: f64,
    /// `[m⁻_0, m⁺_0, m⁻_1, m⁺_1, ...]` with `m∓_i = a_i ∓ b_i`.
    pub margins: Vec<f64>,
}

impl MberCost {
    fn from_margins(margins: Vec<f64>) -> Self {
        let phi = margins.iter().product();
        MberCost { phi, margins }
    }

    /// `log Φ` when every margin is strictly positive.
    pub fn log_phi(&self) -> Option<f64> {
        if self.all_positive() {
            Some(self.margins.iter().map(|m| m.ln()).sum())
        } else {
            None
        }
    }

    pub fn all_positive(&self) -> bool {
        self.margins.iter().all(|&m| m > 0.0)
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// The linear map from the real coordinates `[Re x_0, Im x_0, Re x_1, ...]`
/// of a transmit vector to its `2MK` margins.
#[derive(Debug, Clone)]
pub struct MarginMap {
    rows: Vec<f64>,
    n_margins: usize,
    n_vars: usize,
}

impl MarginMap {
    pub fn new(h: &ChannelMatrix, s: &QpskVector) -> Result<Self> {
        if s.len() != h.rx_dim() {
            return Err(Error::Shape(format!(
                "symbol vector has {} entries, channel has {} rows",
                s.len(),
                h.rx_dim()
            )));
        }
        let n = h.tx_dim();
        let n_vars = 2 * n;
        let n_margins = 2 * s.len();
        let mut rows = vec![0.0; n_margins * n_vars];
        let m = h.matrix();
        for (i, sym) in s.symbols().iter().enumerate() {
            let sc = sym.value().conj();
            let (minus, plus) = rows[2 * i * n_vars..(2 * i + 2) * n_vars].split_at_mut(n_vars);
            for col in 0..n {
                let g = m[(i, col)] * sc;
                let (p, q) = (g.re, g.im);
                minus[2 * col] = p - q;
                minus[2 * col + 1] = -(p + q);
                plus[2 * col] = p + q;
                plus[2 * col + 1] = p - q;
            }
        }
        Ok(MarginMap {
            rows,
            n_margins,
            n_vars,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_margins(&self) -> usize {
        self.n_margins
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.n_vars..(j + 1) * self.n_vars]
    }

    pub fn margins(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n_margins).map(|j| dot(self.row(j), y)).collect()
    }

    /// `Aᵀ w`.
    fn transpose_apply(&self, w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(j)) {
                    *o += wj * a;
                }
            }
        }
    }

    /// Largest margin any box point can reach, used to scale tolerances.
    fn scale(&self) -> f64 {
        (0..self.n_margins)
            .map(|j| self.row(j).iter().map(|a| a.abs()).sum::<f64>() * BOX_HALF_WIDTH)
            .fold(0.0, f64::max)
    }

    /// `Σ_j log m_j`, or `None` outside the positive cone.
    pub fn log_phi(&self, y: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for j in 0..self.n_margins {
            let m = dot(self.row(j), y);
            if m <= 0.0 {
                return None;
            }
            acc += m.ln();
        }
        Some(acc)
    }

    /// Gradient of `Σ_j log m_j`: `Aᵀ (1 / m)`.
    pub fn log_phi_gradient(&self, y: &[f64]) -> Vec<f64> {
        let w: Vec<f64> = self.margins(y).iter().map(|m| 1.0 / m).collect();
        let mut g = vec![0.0; self.n_vars];
        self.transpose_apply(&w, &mut g);
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Real coordinates of a complex vector, interleaved `[re, im, re, im, ...]`.
pub fn to_real(x: &[Complex64]) -> Vec<f64> {
    x.iter().flat_map(|v| [v.re, v.im]).collect()
}

pub fn from_real(y: &[f64]) -> Vec<Complex64> {
    y.chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

fn project(y: &mut [f64]) {
    for v in y.iter_mut() {
        *v = v.clamp(-BOX_HALF_WIDTH, BOX_HALF_WIDTH);
    }
}

/// Norm of `y - P(y + g)`, the projected gradient measure used for stopping.
fn projected_gradient_norm(y: &[f64], g: &[f64]) -> f64 {
    y.iter()
        .zip(g)
        .map(|(&v, &d)| {
            let step = (v + d).clamp(-BOX_HALF_WIDTH, BOX_HALF_WIDTH) - v;
            step * step
        })
        .sum::<f64>()
        .sqrt()
}

fn check_finite(x: &[Complex64]) -> Result<()> {
    match x.iter().position(|v| v.re.is_nan() || v.im.is_nan()) {
        Some(i) => Err(Error::NotANumber(i)),
        None => Ok(()),
    }
}

/// Evaluates `Φ(H, x, s)` through its margin factorization.
pub fn eval_phi(h: &ChannelMatrix, x: &[Complex64], s: &QpskVector) -> Result<MberCost> {
    if x.len() != h.tx_dim() {
        return Err(Error::Shape(format!(
            "transmit vector has {} entries, channel has {} columns",
            x.len(),
            h.tx_dim()
        )));
    }
    check_finite(x)?;
    let map = MarginMap::new(h, s)?;
    Ok(MberCost::from_margins(map.margins(&to_real(x))))
}

/// Outcome of the feasibility phase.
#[derive(Debug, Clone)]
pub struct Phase1Result {
    pub x0: BoxSignal,
    /// Smallest margin achieved by `x0`.
    pub t_star: f64,
    /// `false` when the iteration budget ran out before the last smoothing
    /// stage settled.
    pub converged: bool,
}

impl Phase1Result {
    /// The input admits no transmit vector with all margins positive (as far
    /// as the feasibility phase could tell).
    pub fn infeasible(&self) -> bool {
        self.t_star <= 0.0
    }
}

fn soft_min(m: &[f64], tau: f64) -> (f64, Vec<f64>) {
    let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = m.iter().map(|v| (-(v - lo) / tau).exp()).collect();
    let z: f64 = e.iter().sum();
    let value = lo - tau * z.ln();
    let weights = e.iter().map(|v| v / z).collect();
    (value, weights)
}

fn phase1_on_map(map: &MarginMap, opts: &SolverOptions) -> (Vec<f64>, f64, bool) {
    let nv = map.n_vars();
    let nm = map.n_margins();
    // Start at the vertex that maximizes the sum of all margins.
    let mut dir = vec![0.0; nv];
    map.transpose_apply(&vec![1.0; nm], &mut dir);
    let mut y: Vec<f64> = dir
        .iter()
        .map(|&d| {
            if d >= 0.0 {
                BOX_HALF_WIDTH
            } else {
                -BOX_HALF_WIDTH
            }
        })
        .collect();

    let scale = map.scale();
    if scale == 0.0 {
        return (y, 0.0, true);
    }
    let mut best_y = y.clone();
    let mut best_t = min_of(&map.margins(&y));

    // Smoothed max-min: ascend the soft-min of the margins while the
    // temperature shrinks geometrically, warm-starting each stage.
    const STAGES: usize = 8;
    let per_stage = (opts.phase1_iters / STAGES).max(1);
    let mut tau = 0.05 * scale;
    let mut step = BOX_HALF_WIDTH * nv as f64;
    let mut grad = vec![0.0; nv];
    let mut trial = vec![0.0; nv];
    let mut settled = false;
    for _ in 0..STAGES {
        settled = false;
        let (mut f, mut w) = soft_min(&map.margins(&y), tau);
        for _ in 0..per_stage {
            map.transpose_apply(&w, &mut grad);
            if projected_gradient_norm(&y, &grad) <= opts.tol * scale.max(1.0) {
                settled = true;
                break;
            }
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            let mut alpha = step / gnorm.max(f64::MIN_POSITIVE);
            let mut accepted = false;
            for _ in 0..60 {
                for ((t, &v), &g) in trial.iter_mut().zip(&y).zip(&grad) {
                    *t = v + alpha * g;
                }
                project(&mut trial);
                let (ft, wt) = soft_min(&map.margins(&trial), tau);
                let lin: f64 = trial
                    .iter()
                    .zip(&y)
                    .zip(&grad)
                    .map(|((t, v), g)| (t - v) * g)
                    .sum();
                if ft >= f + opts.armijo * lin {
                    std::mem::swap(&mut y, &mut trial);
                    f = ft;
                    w = wt;
                    accepted = true;
                    break;
                }
                alpha *= opts.shrink;
            }
            if !accepted {
                settled = true;
                break;
            }
            step = (alpha * gnorm * 2.0).min(BOX_HALF_WIDTH * nv as f64);
            let t = min_of(&map.margins(&y));
            if t > best_t {
                best_t = t;
                best_y.clone_from(&y);
            }
        }
        tau *= 0.2;
    }
    (best_y, best_t, settled)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Maximizes the smallest margin over the box.
pub fn phase1_feasible(
    h: &ChannelMatrix,
    s: &QpskVector,
    opts: &SolverOptions,
) -> Result<Phase1Result> {
    opts.validate()?;
    let map = MarginMap::new(h, s)?;
    let (y, t_star, converged) = phase1_on_map(&map, opts);
    Ok(Phase1Result {
        x0: BoxSignal::from_clamped(from_real(&y)),
        t_star,
        converged,
    })
}

/// Diagnostics of one MBER solve.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// Projected-gradient norm reached `tol`, or no step raised the objective
    /// above rounding level.
    pub converged: bool,
    /// The feasibility phase found no strictly positive margin.
    pub infeasible: bool,
    pub phase1_converged: bool,
    /// Smallest margin after the feasibility phase.
    pub t_star: f64,
    /// `log Φ` after each accepted step, starting with the phase-1 point.
    pub history: Vec<f64>,
}

impl SolveReport {
    /// The solve finished without any warning condition.
    pub fn clean(&self) -> bool {
        self.converged && self.phase1_converged && !self.infeasible
    }
}

#[derive(Debug, Clone)]
pub struct MberSolution {
    pub x: BoxSignal,
    pub cost: MberCost,
    pub report: SolveReport,
}

/// Solves `argmax_{x in box} Φ(H, x, s)`.
pub fn solve_mber(h: &ChannelMatrix, s: &QpskVector, opts: &SolverOptions) -> Result<MberSolution> {
    opts.validate()?;
    let map = MarginMap::new(h, s)?;
    let (mut y, t_star, phase1_converged) = phase1_on_map(&map, opts);
    let mut report = SolveReport {
        t_star,
        phase1_converged,
        ..Default::default()
    };

    if t_star <= 0.0 {
        report.infeasible = true;
        let cost = MberCost::from_margins(map.margins(&y));
        return Ok(MberSolution {
            x: BoxSignal::from_clamped(from_real(&y)),
            cost,
            report,
        });
    }

    let mut f = map.log_phi(&y).expect("phase 1 point has positive margins");
    if opts.track_history {
        report.history.push(f);
    }
    let nv = map.n_vars();
    let mut trial = vec![0.0; nv];
    let mut step = opts.initial_step;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for it in 0..opts.max_iters {
        let g = map.log_phi_gradient(&y);
        // Barzilai-Borwein trial step from the last accepted move.
        if let Some((py, pg)) = &prev {
            let (mut ss, mut sd) = (0.0, 0.0);
            for i in 0..nv {
                let dy = y[i] - py[i];
                ss += dy * dy;
                sd -= dy * (g[i] - pg[i]);
            }
            if sd > 0.0 && ss > 0.0 {
                step = (ss / sd).clamp(1e-10, 1e10);
            }
        }
        if projected_gradient_norm(&y, &g) <= opts.tol {
            report.converged = true;
            report.iterations = it;
            break;
        }
        let mut alpha = step;
        let mut accepted = false;
        let mut stalled = false;
        for _ in 0..80 {
            for ((t, &v), &d) in trial.iter_mut().zip(&y).zip(&g) {
                *t = v + alpha * d;
            }
            project(&mut trial);
            if let Some(ft) = map.log_phi(&trial) {
                let lin: f64 = trial
                    .iter()
                    .zip(&y)
                    .zip(&g)
                    .map(|((t, v), d)| (t - v) * d)
                    .sum();
                if ft >= f + opts.armijo * lin {
                    stalled = ft - f <= 4.0 * f64::EPSILON * f.abs().max(1.0);
                    prev = Some((y.clone(), g.clone()));
                    std::mem::swap(&mut y, &mut trial);
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            alpha *= opts.shrink;
        }
        report.iterations = it + 1;
        if !accepted {
            // No step along the projection arc increases the objective:
            // stationary up to floating-point resolution.
            report.converged = true;
            break;
        }
        if opts.track_history {
            report.history.push(f);
        }
        if stalled {
            // the objective no longer moves above rounding level
            report.converged = true;
            break;
        }
        step = alpha / opts.shrink;
    }

    let x = BoxSignal::from_clamped(from_real(&y));
    let cost = MberCost::from_margins(map.margins(&y));
    if cost.phi.is_nan() {
        return Err(Error::NotANumber(0));
    }
    Ok(MberSolution { x, cost, report })
}

/// How the lookup table columns are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LutFill {
    /// One solve per input vector.
    Full,
    /// Solve the `L/4` inputs whose first symbol has label 0 and fill the
    /// rest with `x(j·s) = j·x(s)`.
    Rotation,
}

/// Per-coherence-block table of optimal transmit vectors for every input
/// `s ∈ O^{MK}`, indexed by the decimal value of the stacked input vector
/// (which equals the multi-index `Σ_m ℓ_m (4^K)^{m-1}` of per-user values).
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    tx: usize,
    users: usize,
    antennas: usize,
    channel_id: u64,
    columns: Vec<BoxSignal>,
    costs: Vec<f64>,
    infeasible: Vec<bool>,
    warnings: usize,
}

impl LookupTable {
    pub fn tx_dim(&self) -> usize {
        self.tx
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn channel_id(&self) -> u64 {
        self.channel_id
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, index: usize) -> &BoxSignal {
        &self.columns[index]
    }

    pub fn columns(&self) -> &[BoxSignal] {
        &self.columns
    }

    /// `Φ` of the column; `-|Φ|` for infeasible inputs.
    pub fn cost(&self, index: usize) -> f64 {
        self.costs[index]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// Columns whose input had no transmit vector with all margins positive.
    pub fn infeasible_count(&self) -> usize {
        self.infeasible.iter().filter(|&&b| b).count()
    }

    pub fn is_infeasible(&self, index: usize) -> bool {
        self.infeasible[index]
    }

    /// Solves that hit an iteration cap.
    pub fn warning_count(&self) -> usize {
        self.warnings
    }

    pub fn input(&self, index: usize) -> QpskVector {
        QpskVector::from_decimal(index, self.users * self.antennas)
    }

    pub fn set_channel_id(&mut self, id: u64) {
        self.channel_id = id;
    }

    /// Text dump: a header line `N M K L channel_id`, then one line per
    /// column with `2N` interleaved real/imaginary parts, the cost and a
    /// 0/1 infeasibility flag.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {} {} {}",
            self.tx,
            self.users,
            self.antennas,
            self.len(),
            self.channel_id
        )?;
        let mut line = String::new();
        for ((col, cost), inf) in self.columns.iter().zip(&self.costs).zip(&self.infeasible) {
            line.clear();
            for v in col.entries() {
                let _ = write!(line, "{:e} {:e} ", v.re, v.im);
            }
            let _ = write!(line, "{:e} {}", cost, *inf as u8);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let bad = |line: usize, msg: &str| {
            Error::InvalidParameter(format!("LUT dump line {line}: {msg}"))
        };
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let header = header.map_err(|e| bad(1, &e.to_string()))?;
        let fields: Vec<u64> = header
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(1, &e.to_string()))?;
        let [tx, users, antennas, len, channel_id] = fields[..] else {
            return Err(bad(1, "expected `N M K L channel_id`"));
        };
        let (tx, users, antennas, len) =
            (tx as usize, users as usize, antennas as usize, len as usize);
        if users * antennas > MAX_LUT_RX_DIM || len != 1usize << (2 * users * antennas) {
            return Err(bad(1, "inconsistent table size"));
        }
        let mut columns = Vec::with_capacity(len);
        let mut costs = Vec::with_capacity(len);
        let mut infeasible = Vec::with_capacity(len);
        for _ in 0..len {
            let (i, line) = lines.next().ok_or_else(|| bad(len + 1, "missing column"))?;
            let line = line.map_err(|e| bad(i + 1, &e.to_string()))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 * tx + 2 {
                return Err(bad(i + 1, "wrong number of fields"));
            }
            let vals: Vec<f64> = toks[..2 * tx + 1]
                .iter()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(i + 1, &e.to_string()))?;
            columns.push(BoxSignal::new(from_real(&vals[..2 * tx]))?);
            costs.push(vals[2 * tx]);
            infeasible.push(toks[2 * tx + 1] == "1");
        }
        Ok(LookupTable {
            tx,
            users,
            antennas,
            channel_id,
            columns,
            costs,
            infeasible,
            warnings: 0,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(std::io::BufReader::new(file))
    }
}

/// Cost stored for a column. An even number of negative margins gives a
/// positive product, so infeasible columns store `-|Φ|` to rank below every
/// feasible one.
fn table_cost(phi: f64, infeasible: bool) -> f64 {
    if infeasible {
        -phi.abs()
    } else {
        phi
    }
}

/// Builds the lookup table for one coherence block, solving only rotation
/// representatives.
pub fn build_lut(h: &ChannelMatrix, opts: &SolverOptions) -> Result<LookupTable> {
    build_lut_with(h, opts, LutFill::Rotation)
}

pub fn build_lut_with(
    h: &ChannelMatrix,
    opts: &SolverOptions,
    fill: LutFill,
) -> Result<LookupTable> {
    opts.validate()?;
    let mk = h.rx_dim();
    if mk > MAX_LUT_RX_DIM {
        return Err(Error::TableTooLarge {
            mk,
            cap: MAX_LUT_RX_DIM,
        });
    }
    let len = 1usize << (2 * mk);
    let solve_at = |index: usize| solve_mber(h, &QpskVector::from_decimal(index, mk), opts);

    let mut columns = Vec::with_capacity(len);
    let mut costs = Vec::with_capacity(len);
    let mut infeasible = Vec::with_capacity(len);
    let mut warnings = 0;
    match fill {
        LutFill::Full => {
            let solved: Vec<MberSolution> = (0..len)
                .into_par_iter()
                .map(solve_at)
                .collect::<Result<_>>()?;
            for sol in solved {
                warnings += !(sol.report.converged && sol.report.phase1_converged) as usize;
                infeasible.push(sol.report.infeasible);
                costs.push(table_cost(sol.cost.phi, sol.report.infeasible));
                columns.push(sol.x);
            }
        }
        LutFill::Rotation => {
            // Representatives have label 0 in the first symbol, i.e. decimal
            // values that are multiples of 4.
            let reps: Vec<MberSolution> = (0..len / 4)
                .into_par_iter()
                .map(|r| solve_at(4 * r))
                .collect::<Result<_>>()?;
            let mut slots: Vec<Option<(BoxSignal, f64, bool)>> = vec![None; len];
            for (r, sol) in reps.into_iter().enumerate() {
                warnings += !(sol.report.converged && sol.report.phase1_converged) as usize;
                let mut s = QpskVector::from_decimal(4 * r, mk);
                let mut x = sol.x;
                for _ in 0..4 {
                    let idx = crate::constellation::decimal_unchecked(s.symbols());
                    let cost = table_cost(eval_phi(h, x.entries(), &s)?.phi, sol.report.infeasible);
                    slots[idx] = Some((x.clone(), cost, sol.report.infeasible));
                    s = s.rotate_j();
                    x = x.rotate_j();
                }
            }
            for slot in slots {
                let (x, cost, inf) = slot.expect("rotation orbits cover the table");
                columns.push(x);
                costs.push(cost);
                infeasible.push(inf);
            }
        }
    }
    Ok(LookupTable {
        tx: h.tx_dim(),
        users: h.users(),
        antennas: h.antennas(),
        channel_id: 0,
        columns,
        costs,
        infeasible,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channel;
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn scalar_channel(v: Complex64) -> ChannelMatrix {
        ChannelMatrix::from_matrix(DMatrix::from_element(1, 1, v), 1, 1, 0.0).unwrap()
    }

    fn s0() -> QpskVector {
        QpskVector::from_labels(&[0]).unwrap()
    }

    #[test]
    fn unit_example() {
        let h = scalar_channel(Complex64::new(1.0, 0.0));
        let x = [Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)];
        let cost = eval_phi(&h, &x, &s0()).unwrap();
        assert!((cost.phi - 1.0).abs() < 1e-15);
        assert!((cost.margins[0] - 1.0).abs() < 1e-15);
        assert!((cost.margins[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase1_corner_solution() {
        let h = scalar_channel(Complex64::new(1.0, 0.0));
        let p1 = phase1_feasible(&h, &s0(), &SolverOptions::default()).unwrap();
        assert!((p1.t_star - 1.0).abs() < 1e-9);
        let x = p1.x0.entries()[0];
        assert!((x.re - FRAC_1_SQRT_2).abs() < 1e-9 && (x.im - FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn solve_corner_solution() {
        let h = scalar_channel(Complex64::new(1.0, 0.0));
        let sol = solve_mber(&h, &s0(), &SolverOptions::default()).unwrap();
        assert!((sol.cost.phi - 1.0).abs() < 1e-12);
        assert_eq!(
            sol.x.entries()[0],
            Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
        );
        assert!(sol.report.converged);
    }

    #[test]
    fn phase1_scales_with_channel() {
        let h = draw_channel(1, 2, 4, 0.3, 9).unwrap();
        let s = QpskVector::from_labels(&[1, 2]).unwrap();
        let opts = SolverOptions::default();
        let a = phase1_feasible(&h, &s, &opts).unwrap();
        let b = phase1_feasible(&h.scaled(3.0), &s, &opts).unwrap();
        assert!((b.t_star - 3.0 * a.t_star).abs() <= 1e-6 * b.t_star.abs());
    }

    #[test]
    fn shape_errors() {
        let h = draw_channel(1, 2, 4, 0.0, 1).unwrap();
        let s1 = QpskVector::from_labels(&[0]).unwrap();
        assert!(matches!(
            solve_mber(&h, &s1, &SolverOptions::default()),
            Err(Error::Shape(_))
        ));
        let s2 = QpskVector::from_labels(&[0, 0]).unwrap();
        assert!(eval_phi(&h, &[Complex64::new(0.0, 0.0); 3], &s2).is_err());
        let nan = [Complex64::new(f64::NAN, 0.0); 4];
        assert!(matches!(eval_phi(&h, &nan, &s2), Err(Error::NotANumber(0))));
    }

    #[test]
    fn infeasible_input_returns_phase1_point() {
        // Two identical receive rows cannot hold opposite symbols.
        let row = [Complex64::new(1.0, 0.2), Complex64::new(-0.3, 0.8)];
        let m = DMatrix::from_fn(2, 2, |_, j| row[j]);
        let h = ChannelMatrix::from_matrix(m, 1, 2, 1.0).unwrap();
        let s = QpskVector::from_labels(&[0, 3]).unwrap();
        let sol = solve_mber(&h, &s, &SolverOptions::default()).unwrap();
        assert!(sol.report.infeasible);
        assert!(sol.report.t_star <= 0.0);
        assert!(sol.cost.min_margin() <= 0.0);
    }

    #[test]
    fn infeasible_columns_rank_last() {
        let row = [Complex64::new(1.0, 0.2), Complex64::new(-0.3, 0.8)];
        let m = DMatrix::from_fn(2, 2, |_, j| row[j]);
        let h = ChannelMatrix::from_matrix(m, 1, 2, 1.0).unwrap();
        let lut = build_lut(&h, &SolverOptions::default()).unwrap();
        // only inputs with equal symbols on both antennas are feasible
        assert_eq!(lut.infeasible_count(), 12);
        for i in 0..16 {
            let l = lut.input(i).labels();
            assert_eq!(lut.is_infeasible(i), l[0] != l[1]);
            assert_eq!(
                lut.cost(i) > 0.0,
                l[0] == l[1],
                "input {l:?} cost {}",
                lut.cost(i)
            );
        }
    }

    #[test]
    fn lut_size_and_rotation() {
        let h = draw_channel(1, 1, 3, 0.0, 4).unwrap();
        let lut = build_lut(&h, &SolverOptions::default()).unwrap();
        assert_eq!(lut.len(), 4);
        let first = lut.column(0).clone();
        let mut expected = first.clone();
        for _ in 0..3 {
            expected = expected.rotate_j();
        }
        // label 0 → 1 → 3 → 2 under j
        assert_eq!(lut.column(1), &first.rotate_j());
        assert_eq!(lut.column(3), &first.rotate_j().rotate_j());
        assert_eq!(lut.column(2), &expected);
    }

    #[test]
    fn lut_cap() {
        let h = draw_channel(3, 3, 9, 0.0, 1).unwrap();
        assert!(matches!(
            build_lut(&h, &SolverOptions::default()),
            Err(Error::TableTooLarge { mk: 9, cap: 8 })
        ));
    }

    #[test]
    fn lut_text_round_trip() {
        let h = draw_channel(1, 2, 3, 0.5, 8).unwrap();
        let mut lut = build_lut(&h, &SolverOptions::default()).unwrap();
        lut.set_channel_id(77);
        let mut buf = Vec::new();
        lut.write_text(&mut buf).unwrap();
        let back = LookupTable::read_text(buf.as_slice()).unwrap();
        assert_eq!(back.channel_id(), 77);
        assert_eq!(back.len(), 16);
        for i in 0..16 {
            assert_eq!(back.column(i), lut.column(i));
            assert_eq!(back.cost(i), lut.cost(i));
        }
    }
}
